//! Finite-state approximations of the productivity shocks.
//!
//! The persistent pair follows a VAR(1) with diagonal persistence and
//! correlated Gaussian innovations; it becomes a product of two Tauchen grids
//! whose joint transition masses are bivariate-normal rectangle
//! probabilities. The transitory pair is iid Gaussian and is discretized by
//! Gauss-Hermite rules on its principal components. All node values are
//! log-productivity.

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc;

use crate::error::{invalid, ModelError, Result};
use crate::params::GridSpec;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShockParams {
    pub rho11: f64,
    pub rho12: f64,
    pub rho21: f64,
    pub rho22: f64,
    /// Innovation covariance of the persistent pair (variances, not std).
    pub sigma_eps_11: f64,
    pub sigma_eps_12: f64,
    pub sigma_eps_22: f64,
    /// Covariance of the transitory pair.
    pub sigma_e_11: f64,
    pub sigma_e_12: f64,
    pub sigma_e_22: f64,
    /// Tauchen grid half-width in stationary standard deviations;
    /// `sqrt(n_z - 1)` when unset.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub width: Option<f64>,
}

impl Default for ShockParams {
    fn default() -> Self {
        Self {
            rho11: 0.9,
            rho12: 0.0,
            rho21: 0.0,
            rho22: 0.7,
            sigma_eps_11: 0.0303,
            sigma_eps_12: 0.0027,
            sigma_eps_22: 0.0382,
            sigma_e_11: 0.1,
            sigma_e_12: 0.05,
            sigma_e_22: 0.1,
            width: None,
        }
    }
}

impl ShockParams {
    /// Grid half-width used for `n` points per spouse.
    pub fn width_for(&self, n: usize) -> f64 {
        self.width.unwrap_or(((n.max(2) - 1) as f64).sqrt())
    }

    pub fn sigma_eps(&self) -> Cov2 {
        Cov2::new(self.sigma_eps_11, self.sigma_eps_12, self.sigma_eps_22)
    }

    pub fn sigma_e(&self) -> Cov2 {
        Cov2::new(self.sigma_e_11, self.sigma_e_12, self.sigma_e_22)
    }
}

/// Symmetric 2x2 covariance matrix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cov2 {
    pub s11: f64,
    pub s12: f64,
    pub s22: f64,
}

impl Cov2 {
    pub fn new(s11: f64, s12: f64, s22: f64) -> Self {
        Self { s11, s12, s22 }
    }

    pub fn zero() -> Self {
        Self::new(0.0, 0.0, 0.0)
    }

    pub fn diag(a: f64, b: f64) -> Self {
        Self::new(a, 0.0, b)
    }

    /// Eigenvalues (descending) and the matching unit eigenvectors.
    pub fn eigen(&self) -> ([f64; 2], [[f64; 2]; 2]) {
        let tr = self.s11 + self.s22;
        let diff = self.s11 - self.s22;
        let disc = (0.25 * diff * diff + self.s12 * self.s12).sqrt();
        let l1 = 0.5 * tr + disc;
        let l2 = 0.5 * tr - disc;
        if self.s12 == 0.0 {
            return if self.s11 >= self.s22 {
                ([self.s11, self.s22], [[1.0, 0.0], [0.0, 1.0]])
            } else {
                ([self.s22, self.s11], [[0.0, 1.0], [1.0, 0.0]])
            };
        }
        let v1 = normalize([l1 - self.s22, self.s12]);
        let v2 = [-v1[1], v1[0]];
        ([l1, l2], [v1, v2])
    }

    pub fn check_psd(&self) -> Result<()> {
        let (lam, _) = self.eigen();
        let scale = self.s11.abs().max(self.s22.abs()).max(1.0);
        if !lam.iter().all(|l| l.is_finite()) || lam[1] < -1e-12 * scale || self.s11 < 0.0 || self.s22 < 0.0
        {
            return Err(ModelError::NotPsd(lam));
        }
        Ok(())
    }
}

fn normalize(v: [f64; 2]) -> [f64; 2] {
    let n = (v[0] * v[0] + v[1] * v[1]).sqrt();
    [v[0] / n, v[1] / n]
}

#[derive(Debug, Clone, PartialEq)]
pub struct MarkovChain {
    pub nodes: Vec<[f64; 2]>,
    /// Row-major `n x n` transition matrix.
    pub transition: Vec<f64>,
    pub stationary: Vec<f64>,
}

impl MarkovChain {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.transition[i * n..(i + 1) * n]
    }

    pub fn stationary_mean(&self, dim: usize) -> f64 {
        self.nodes
            .iter()
            .zip(&self.stationary)
            .map(|(x, p)| p * x[dim])
            .sum()
    }

    pub fn stationary_variance(&self, dim: usize) -> f64 {
        let m = self.stationary_mean(dim);
        self.nodes
            .iter()
            .zip(&self.stationary)
            .map(|(x, p)| p * (x[dim] - m).powi(2))
            .sum()
    }

    /// First-order autocorrelation of one coordinate under the stationary law.
    pub fn autocorrelation(&self, dim: usize) -> f64 {
        let m = self.stationary_mean(dim);
        let var = self.stationary_variance(dim);
        if var == 0.0 {
            return 0.0;
        }
        let mut cov = 0.0;
        for (i, pi) in self.stationary.iter().enumerate() {
            let cond: f64 = self
                .row(i)
                .iter()
                .zip(&self.nodes)
                .map(|(p, x)| p * (x[dim] - m))
                .sum();
            cov += pi * (self.nodes[i][dim] - m) * cond;
        }
        cov / var
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    pub nodes: Vec<[f64; 2]>,
    pub probs: Vec<f64>,
}

impl DiscreteDistribution {
    pub fn mean(&self, dim: usize) -> f64 {
        self.nodes.iter().zip(&self.probs).map(|(x, p)| p * x[dim]).sum()
    }

    pub fn covariance(&self) -> Cov2 {
        let m = [self.mean(0), self.mean(1)];
        let mut c = Cov2::zero();
        for (x, p) in self.nodes.iter().zip(&self.probs) {
            let d = [x[0] - m[0], x[1] - m[1]];
            c.s11 += p * d[0] * d[0];
            c.s12 += p * d[0] * d[1];
            c.s22 += p * d[1] * d[1];
        }
        c
    }
}

/// Persistent and transitory chains used by the solver.
#[derive(Debug, Clone, PartialEq)]
pub struct ShockSystem {
    pub persistent: MarkovChain,
    pub transitory: DiscreteDistribution,
}

impl ShockSystem {
    pub fn new(params: &ShockParams, grids: &GridSpec) -> Result<Self> {
        Ok(Self {
            persistent: discretize_var(params, grids.n_z, params.width_for(grids.n_z))?,
            transitory: discretize_iid(&params.sigma_e(), grids.n_e)?,
        })
    }
}

pub fn norm_cdf(x: f64) -> f64 {
    if x == f64::INFINITY {
        return 1.0;
    }
    if x == f64::NEG_INFINITY {
        return 0.0;
    }
    0.5 * erfc(-x / std::f64::consts::SQRT_2)
}

/// `P(X > h, Y > k)` for standard bivariate normal with correlation `r`
/// (Drezner-Wesolowsky with Genz's refinements).
pub fn bvn_upper(h: f64, k: f64, r: f64) -> f64 {
    if h == f64::INFINITY || k == f64::INFINITY {
        return 0.0;
    }
    if h == f64::NEG_INFINITY {
        return if k == f64::NEG_INFINITY { 1.0 } else { norm_cdf(-k) };
    }
    if k == f64::NEG_INFINITY {
        return norm_cdf(-h);
    }
    if r == 0.0 {
        return norm_cdf(-h) * norm_cdf(-k);
    }

    const W6: [f64; 3] = [0.1713244923791705, 0.3607615730481384, 0.4679139345726904];
    const X6: [f64; 3] = [0.9324695142031522, 0.6612093864662647, 0.2386191860831970];
    const W12: [f64; 6] = [
        0.04717533638651177,
        0.1069393259953183,
        0.1600783285433464,
        0.2031674267230659,
        0.2334925365383547,
        0.2491470458134029,
    ];
    const X12: [f64; 6] = [
        0.9815606342467191,
        0.9041172563704750,
        0.7699026741943050,
        0.5873179542866171,
        0.3678314989981802,
        0.1252334085114692,
    ];
    const W20: [f64; 10] = [
        0.01761400713915212,
        0.04060142980038694,
        0.06267204833410906,
        0.08327674157670475,
        0.1019301198172404,
        0.1181945319615184,
        0.1316886384491766,
        0.1420961093183821,
        0.1491729864726037,
        0.1527533871307259,
    ];
    const X20: [f64; 10] = [
        0.9931285991850949,
        0.9639719272779138,
        0.9122344282513259,
        0.8391169718222188,
        0.7463319064601508,
        0.6360536807265150,
        0.5108670019508271,
        0.3737060887154196,
        0.2277858511416451,
        0.07652652113349733,
    ];
    let (w_half, x_half): (&[f64], &[f64]) = if r.abs() < 0.3 {
        (&W6, &X6)
    } else if r.abs() < 0.75 {
        (&W12, &X12)
    } else {
        (&W20, &X20)
    };
    // Points on (0, 2): 1 - x and 1 + x.
    let pts: Vec<(f64, f64)> = w_half
        .iter()
        .zip(x_half)
        .map(|(&w, &x)| (w, 1.0 - x))
        .chain(w_half.iter().zip(x_half).map(|(&w, &x)| (w, 1.0 + x)))
        .collect();

    let tp = 2.0 * std::f64::consts::PI;
    let mut k = k;
    let mut hk = h * k;
    let mut bvn = 0.0;
    if r.abs() < 0.925 {
        let hs = (h * h + k * k) / 2.0;
        let asr = r.asin() / 2.0;
        for &(w, x) in &pts {
            let sn = (asr * x).sin();
            bvn += w * ((sn * hk - hs) / (1.0 - sn * sn)).exp();
        }
        bvn = bvn * asr / tp + norm_cdf(-h) * norm_cdf(-k);
    } else {
        if r < 0.0 {
            k = -k;
            hk = -hk;
        }
        if r.abs() < 1.0 {
            let as_ = 1.0 - r * r;
            let mut a = as_.sqrt();
            let bs = (h - k).powi(2);
            let asr = -(bs / as_ + hk) / 2.0;
            let c = (4.0 - hk) / 8.0;
            let d = (12.0 - hk) / 80.0;
            if asr > -100.0 {
                bvn = a * asr.exp() * (1.0 - c * (bs - as_) * (1.0 - d * bs) / 3.0 + c * d * as_ * as_);
            }
            if hk > -100.0 {
                let b = bs.sqrt();
                let sp = tp.sqrt() * norm_cdf(-b / a);
                bvn -= (-hk / 2.0).exp() * sp * b * (1.0 - c * bs * (1.0 - d * bs) / 3.0);
            }
            a /= 2.0;
            let mut acc = 0.0;
            for &(w, x) in &pts {
                let xs = (a * x).powi(2);
                let asr = -(bs / xs + hk) / 2.0;
                if asr > -100.0 {
                    let sp = 1.0 + c * xs * (1.0 + 5.0 * d * xs);
                    let rs = (1.0 - xs).sqrt();
                    let ep = (-(hk / 2.0) * xs / (1.0 + rs).powi(2)).exp() / rs;
                    acc += w * asr.exp() * (sp - ep);
                }
            }
            bvn = (a * acc - bvn) / tp;
        }
        if r > 0.0 {
            bvn += norm_cdf(-h.max(k));
        } else if h >= k {
            bvn = -bvn;
        } else {
            let l = if h < 0.0 {
                norm_cdf(k) - norm_cdf(h)
            } else {
                norm_cdf(-h) - norm_cdf(-k)
            };
            bvn = l - bvn;
        }
    }
    bvn.clamp(0.0, 1.0)
}

/// Probability that a standard bivariate normal with correlation `r` falls
/// in the rectangle `(lo1, hi1) x (lo2, hi2)`.
pub fn bvn_rectangle(lo: [f64; 2], hi: [f64; 2], r: f64) -> f64 {
    let p = bvn_upper(lo[0], lo[1], r) - bvn_upper(hi[0], lo[1], r) - bvn_upper(lo[0], hi[1], r)
        + bvn_upper(hi[0], hi[1], r);
    p.max(0.0)
}

fn linspace(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![0.5 * (lo + hi)];
    }
    let step = (hi - lo) / (n - 1) as f64;
    (0..n)
        .map(|i| {
            // Mirror the upper half so the grid is exactly symmetric about 0.
            if 2 * i + 1 > n {
                -(lo + step * (n - 1 - i) as f64)
            } else {
                lo + step * i as f64
            }
        })
        .collect()
}

/// Tauchen discretization of the persistent pair on `n_per_dim` points per
/// spouse. Joint index is `i1 * n_per_dim + i2`.
pub fn discretize_var(params: &ShockParams, n_per_dim: usize, width: f64) -> Result<MarkovChain> {
    if params.rho12 != 0.0 || params.rho21 != 0.0 {
        return Err(ModelError::CrossPersistence {
            rho12: params.rho12,
            rho21: params.rho21,
        });
    }
    for rho in [params.rho11, params.rho22] {
        if !(rho.abs() < 1.0) {
            return Err(ModelError::NonStationary(rho));
        }
    }
    let cov = params.sigma_eps();
    cov.check_psd()?;
    if n_per_dim == 0 {
        return Err(invalid("n_z", "need at least one point"));
    }
    if n_per_dim == 1 {
        return Ok(MarkovChain {
            nodes: vec![[0.0, 0.0]],
            transition: vec![1.0],
            stationary: vec![1.0],
        });
    }
    if !(cov.s11 > 0.0 && cov.s22 > 0.0) {
        return Err(invalid("sigma_eps", "innovation variances must be positive"));
    }
    if !(width > 0.0) {
        return Err(invalid("width", "must be positive"));
    }

    let rho = [params.rho11, params.rho22];
    let sd = [cov.s11.sqrt(), cov.s22.sqrt()];
    let corr = (cov.s12 / (sd[0] * sd[1])).clamp(-1.0, 1.0);
    let grids: Vec<Vec<f64>> = (0..2)
        .map(|d| {
            let stat_sd = sd[d] / (1.0 - rho[d] * rho[d]).sqrt();
            linspace(-width * stat_sd, width * stat_sd, n_per_dim)
        })
        .collect();
    let half_step: Vec<f64> = (0..2).map(|d| 0.5 * (grids[d][1] - grids[d][0])).collect();

    let n = n_per_dim * n_per_dim;
    let nodes: Vec<[f64; 2]> = (0..n)
        .map(|i| [grids[0][i / n_per_dim], grids[1][i % n_per_dim]])
        .collect();

    let bounds = |d: usize, m: usize, mean: f64| -> (f64, f64) {
        let lo = if m == 0 {
            f64::NEG_INFINITY
        } else {
            (grids[d][m] - half_step[d] - mean) / sd[d]
        };
        let hi = if m == n_per_dim - 1 {
            f64::INFINITY
        } else {
            (grids[d][m] + half_step[d] - mean) / sd[d]
        };
        (lo, hi)
    };

    let mut transition = vec![0.0; n * n];
    for (i, from) in nodes.iter().enumerate() {
        let mean = [rho[0] * from[0], rho[1] * from[1]];
        let row = &mut transition[i * n..(i + 1) * n];
        for (jn, p) in row.iter_mut().enumerate() {
            let (lo1, hi1) = bounds(0, jn / n_per_dim, mean[0]);
            let (lo2, hi2) = bounds(1, jn % n_per_dim, mean[1]);
            *p = bvn_rectangle([lo1, lo2], [hi1, hi2], corr);
        }
        let total: f64 = row.iter().sum();
        row.iter_mut().for_each(|p| *p /= total);
    }

    let stationary = stationary_distribution(&transition, n);
    Ok(MarkovChain {
        nodes,
        transition,
        stationary,
    })
}

fn stationary_distribution(transition: &[f64], n: usize) -> Vec<f64> {
    let mut pi = vec![1.0 / n as f64; n];
    let mut next = vec![0.0; n];
    for _ in 0..1_000_000 {
        next.iter_mut().for_each(|x| *x = 0.0);
        for i in 0..n {
            for j in 0..n {
                next[j] += pi[i] * transition[i * n + j];
            }
        }
        let s: f64 = next.iter().sum();
        next.iter_mut().for_each(|x| *x /= s);
        let diff = pi
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut pi, &mut next);
        if diff < 1e-16 {
            break;
        }
    }
    pi
}

/// Gauss-Hermite rule for a standard normal: nodes ascending, weights sum to 1.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    if n == 1 {
        return (vec![0.0], vec![1.0]);
    }
    // Physicists' rule by Newton iteration, then rescaled.
    const PIM4: f64 = 0.751_125_544_464_942_5;
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let m = n.div_ceil(2);
    let nf = n as f64;
    let mut z = 0.0;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-0.16667),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * x[0],
            3 => 1.91 * z - 0.91 * x[1],
            _ => 2.0 * z - x[i - 2],
        };
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = PIM4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        x[i] = z;
        x[n - 1 - i] = -z;
        w[i] = 2.0 / (pp * pp);
        w[n - 1 - i] = w[i];
    }
    if n % 2 == 1 {
        x[n / 2] = 0.0;
    }
    let sqrt_pi = std::f64::consts::PI.sqrt();
    let mut nodes: Vec<f64> = x.iter().map(|v| v * std::f64::consts::SQRT_2).collect();
    let mut weights: Vec<f64> = w.iter().map(|v| v / sqrt_pi).collect();
    nodes.reverse();
    weights.reverse();
    let s: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|v| *v /= s);
    (nodes, weights)
}

/// Discretize an iid bivariate normal with covariance `sigma`.
///
/// Each principal component gets an `n_per_dim`-point Gauss-Hermite rule;
/// the product grid is rotated back to spouse coordinates. A zero-variance
/// component puts all of its mass on the center node.
pub fn discretize_iid(sigma: &Cov2, n_per_dim: usize) -> Result<DiscreteDistribution> {
    sigma.check_psd()?;
    if n_per_dim == 0 {
        return Err(invalid("n_e", "need at least one point"));
    }
    let (lam, vecs) = sigma.eigen();
    let (gh_nodes, gh_weights) = gauss_hermite(n_per_dim);
    let component = |l: f64| -> (Vec<f64>, Vec<f64>) {
        if l <= 0.0 && n_per_dim % 2 == 1 {
            let mut w = vec![0.0; n_per_dim];
            w[n_per_dim / 2] = 1.0;
            (vec![0.0; n_per_dim], w)
        } else {
            let s = l.max(0.0).sqrt();
            (gh_nodes.iter().map(|x| s * x).collect(), gh_weights.clone())
        }
    };
    let (x1, w1) = component(lam[0]);
    let (x2, w2) = component(lam[1]);

    let mut nodes = Vec::with_capacity(n_per_dim * n_per_dim);
    let mut probs = Vec::with_capacity(n_per_dim * n_per_dim);
    for p in 0..n_per_dim {
        for q in 0..n_per_dim {
            let e = [
                vecs[0][0] * x1[p] + vecs[1][0] * x2[q],
                vecs[0][1] * x1[p] + vecs[1][1] * x2[q],
            ];
            nodes.push(e.map(|v| if v == 0.0 { 0.0 } else { v }));
            probs.push(w1[p] * w2[q]);
        }
    }
    Ok(DiscreteDistribution { nodes, probs })
}

/// Productivity multiplier of one spouse for log shocks `z`, `e`.
#[inline]
pub fn productivity_multiplier(z: [f64; 2], e: [f64; 2], spouse: usize) -> f64 {
    (z[spouse] + e[spouse]).exp()
}
