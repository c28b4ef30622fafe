//! Nelder-Mead on the unit box. Points leaving the box are reflected back.

use crate::par::{map_indexed, ExecMode};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NmOptions {
    pub max_evals: usize,
    /// Stop once every vertex is this close to the best one (max norm).
    pub tol: f64,
    pub init_step: f64,
    /// Extra runs started from the best point with a fresh simplex.
    pub restarts: usize,
    /// Restart once this many evaluations pass without a new best vertex;
    /// 0 restarts only after convergence.
    pub stall: usize,
    /// Scale the expansion, contraction and shrink coefficients with the
    /// dimension (Gao and Han, 2012) instead of the classic 2, 1/2, 1/2.
    pub adaptive: bool,
    pub exec: ExecMode,
}

impl Default for NmOptions {
    fn default() -> Self {
        Self {
            max_evals: 500,
            tol: 1e-4,
            init_step: 0.05,
            restarts: 1,
            stall: 0,
            adaptive: true,
            exec: ExecMode::Parallel,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct NmResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub evals: usize,
    pub iterations: usize,
    pub converged: bool,
    /// Every evaluated point in a schedule-independent order.
    pub history: Vec<(Vec<f64>, f64)>,
}

/// Fold a coordinate back into [0, 1] by mirror reflection.
pub fn reflect_unit(x: f64) -> f64 {
    let m = x.rem_euclid(2.0);
    if m <= 1.0 {
        m
    } else {
        2.0 - m
    }
}

struct Counter<'a, F> {
    f: &'a F,
    evals: usize,
    max: usize,
    exec: ExecMode,
    history: Vec<(Vec<f64>, f64)>,
}

impl<F: Fn(&[f64]) -> f64 + Sync> Counter<'_, F> {
    fn left(&self) -> usize {
        self.max - self.evals
    }

    fn batch(&mut self, xs: Vec<Vec<f64>>) -> Vec<f64> {
        let fx = map_indexed(xs.len(), self.exec, |i| sanitize((self.f)(&xs[i])));
        self.evals += xs.len();
        self.history.extend(xs.into_iter().zip(fx.iter().copied()));
        fx
    }

    fn one(&mut self, x: Vec<f64>) -> f64 {
        self.batch(vec![x])[0]
    }
}

fn sanitize(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

fn diameter(simplex: &[Vec<f64>]) -> f64 {
    let b = &simplex[0];
    simplex[1..]
        .iter()
        .flat_map(|v| v.iter().zip(b).map(|(p, q)| (p - q).abs()))
        .fold(0.0, f64::max)
}

/// Minimize `f` over `[0, 1]^n` starting from `x0`.
pub fn nelder_mead<F>(f: &F, x0: &[f64], opts: &NmOptions) -> NmResult
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    nelder_mead_with_steps(f, x0, &vec![opts.init_step; x0.len()], opts)
}

/// As [`nelder_mead`], with one initial simplex edge length per coordinate.
pub fn nelder_mead_with_steps<F>(f: &F, x0: &[f64], steps: &[f64], opts: &NmOptions) -> NmResult
where
    F: Fn(&[f64]) -> f64 + Sync,
{
    let n = x0.len();
    assert_eq!(steps.len(), n, "one step per coordinate");
    let x0: Vec<f64> = x0.iter().map(|&x| reflect_unit(x)).collect();
    let mut c = Counter {
        f,
        evals: 0,
        max: opts.max_evals.max(1),
        exec: opts.exec,
        history: Vec::new(),
    };
    let nf = n as f64;
    let (expand, contract, shrink) = if opts.adaptive && n > 1 {
        (1.0 + 2.0 / nf, 0.75 - 0.5 / nf, 1.0 - 1.0 / nf)
    } else {
        (2.0, 0.5, 0.5)
    };
    let mut best = (x0.clone(), c.one(x0));
    let mut iterations = 0;
    let mut converged = false;

    for _run in 0..=opts.restarts {
        if c.left() < n + 1 {
            break;
        }
        let mut simplex: Vec<Vec<f64>> = vec![best.0.clone()];
        for i in 0..n {
            let mut v = best.0.clone();
            let step = if v[i] + steps[i] <= 1.0 { steps[i] } else { -steps[i] };
            v[i] = reflect_unit(v[i] + step);
            simplex.push(v);
        }
        let mut fs = vec![best.1];
        fs.extend(c.batch(simplex[1..].to_vec()));
        converged = false;
        let mut run_best = best.1;
        let mut mark = c.evals;

        loop {
            // sort by value, ties by position for a fixed order
            let mut idx: Vec<usize> = (0..=n).collect();
            idx.sort_by(|&a, &b| fs[a].total_cmp(&fs[b]).then(a.cmp(&b)));
            simplex = idx.iter().map(|&i| simplex[i].clone()).collect();
            fs = idx.iter().map(|&i| fs[i]).collect();

            if diameter(&simplex) < opts.tol {
                converged = true;
                break;
            }
            if fs[0] < run_best {
                run_best = fs[0];
                mark = c.evals;
            }
            if opts.stall > 0 && c.evals - mark >= opts.stall {
                break;
            }
            if c.left() == 0 {
                break;
            }
            iterations += 1;
            let centroid: Vec<f64> = (0..n).map(|d| simplex[..n].iter().map(|v| v[d]).sum::<f64>() / n as f64).collect();
            let along = |t: f64| -> Vec<f64> {
                centroid
                    .iter()
                    .zip(&simplex[n])
                    .map(|(cc, w)| reflect_unit(cc + t * (cc - w)))
                    .collect()
            };
            let xr = along(1.0);
            let fr = c.one(xr.clone());
            if fr < fs[0] {
                if c.left() == 0 {
                    simplex[n] = xr;
                    fs[n] = fr;
                    continue;
                }
                let xe = along(expand);
                let fe = c.one(xe.clone());
                if fe < fr {
                    simplex[n] = xe;
                    fs[n] = fe;
                } else {
                    simplex[n] = xr;
                    fs[n] = fr;
                }
                continue;
            }
            if fr < fs[n - 1] {
                simplex[n] = xr;
                fs[n] = fr;
                continue;
            }
            if c.left() == 0 {
                continue;
            }
            let (xc, fc) = if fr < fs[n] {
                let x = along(contract);
                let v = c.one(x.clone());
                (x, v)
            } else {
                let x = along(-contract);
                let v = c.one(x.clone());
                (x, v)
            };
            if fc < fs[n].min(fr) {
                simplex[n] = xc;
                fs[n] = fc;
                continue;
            }
            // shrink towards the best vertex
            let k = c.left().min(n);
            if k == 0 {
                continue;
            }
            let shrunk: Vec<Vec<f64>> = simplex[1..=k]
                .iter()
                .map(|v| v.iter().zip(&simplex[0]).map(|(p, b)| b + shrink * (p - b)).collect())
                .collect();
            let fsh = c.batch(shrunk.clone());
            for (i, (x, v)) in shrunk.into_iter().zip(fsh).enumerate() {
                simplex[i + 1] = x;
                fs[i + 1] = v;
            }
        }
        let improved = fs[0] < best.1;
        if improved || fs[0] == best.1 {
            best = (simplex[0].clone(), fs[0]);
        }
        if !improved {
            break;
        }
    }
    NmResult {
        x: best.0,
        f: best.1,
        evals: c.evals,
        iterations,
        converged,
        history: c.history,
    }
}
