//! Method-of-moments estimation of the preference parameters from the
//! wife's time-use profile.

use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::config::ModelParams;
use crate::data::{AgeTable, TableKind, Tables};
use crate::error::{ModelError, Result};
use crate::optim::{nelder_mead_with_steps, NmOptions};
use crate::par::ExecMode;
use crate::params::EstimatedParams;
use crate::simulate::{simulate_population, AgeProfile};
use crate::solver::SolveOptions;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MomentMode {
    /// One moment per age and category.
    #[default]
    Age,
    /// One moment per category, averaged over ages.
    Average,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum WorkMeasure {
    /// Market work plus housework.
    #[default]
    Total,
    Market,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EstimationOptions {
    pub moments: MomentMode,
    pub work_measure: WorkMeasure,
    pub age_min: u32,
    pub age_max: u32,
    pub weight_work: f64,
    pub weight_leisure: f64,
    pub weight_childcare: f64,
    pub max_evals: usize,
    pub tol: f64,
    /// Initial simplex edge, as a fraction of each starting value when
    /// `relative_step` is set and of the search box otherwise.
    pub init_step: f64,
    pub relative_step: bool,
    pub restarts: usize,
    /// Evaluations without improvement that trigger a restart; 0 disables.
    pub stall: usize,
    /// Dimension-adaptive Nelder-Mead coefficients.
    pub adaptive: bool,
    /// Objective returned when the model cannot be solved or simulated.
    pub penalty: f64,
}

impl Default for EstimationOptions {
    fn default() -> Self {
        Self {
            moments: MomentMode::Age,
            work_measure: WorkMeasure::Total,
            age_min: 20,
            age_max: 64,
            weight_work: 1.0 / 8.0,
            weight_leisure: 1.0 / 12.0,
            weight_childcare: 1.0 / 4.0,
            max_evals: 600,
            tol: 1e-4,
            init_step: 0.05,
            relative_step: true,
            restarts: 20,
            stall: 100,
            adaptive: true,
            penalty: 1e10,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Category {
    Work,
    Leisure,
    Childcare,
}

impl Category {
    pub const ALL: [Category; 3] = [Category::Work, Category::Leisure, Category::Childcare];

    pub fn name(self) -> &'static str {
        match self {
            Category::Work => "work",
            Category::Leisure => "leisure",
            Category::Childcare => "childcare",
        }
    }

    fn weight(self, o: &EstimationOptions) -> f64 {
        match self {
            Category::Work => o.weight_work,
            Category::Leisure => o.weight_leisure,
            Category::Childcare => o.weight_childcare,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MomentRow {
    /// `None` for age-averaged moments.
    pub age: Option<u32>,
    pub category: Category,
    pub model: f64,
    pub data: f64,
    pub weight: f64,
}

impl MomentRow {
    pub fn residual(&self) -> f64 {
        self.model - self.data
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct MomentSet {
    pub rows: Vec<MomentRow>,
}

impl MomentSet {
    /// Sum of squared weighted residuals.
    pub fn objective(&self) -> f64 {
        self.rows.iter().map(|r| (r.weight * r.residual()).powi(2)).sum()
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["age", "category", "model", "data", "weight", "residual"])?;
        for r in &self.rows {
            w.write_record([
                r.age.map(|a| a.to_string()).unwrap_or_default(),
                r.category.name().to_string(),
                r.model.to_string(),
                r.data.to_string(),
                r.weight.to_string(),
                r.residual().to_string(),
            ])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

fn model_hours(profile: &AgeProfile, age: u32, cat: Category, o: &EstimationOptions) -> Result<f64> {
    let r = profile.row(age).ok_or(ModelError::AgeCoverage {
        from: o.age_min,
        to: o.age_max,
    })?;
    Ok(match cat {
        Category::Work => match o.work_measure {
            WorkMeasure::Total => r.work(1),
            WorkMeasure::Market => r.market[1],
        },
        Category::Leisure => r.leisure[1],
        Category::Childcare => r.childcare[1],
    })
}

/// Model-minus-data rows for the wife at `age_min..=age_max`.
pub fn compute_moments(profile: &AgeProfile, data: &AgeTable, o: &EstimationOptions) -> Result<MomentSet> {
    if data.kind != TableKind::TimeUse {
        return Err(ModelError::Config("moment data must be a time-use table".into()));
    }
    if data.first > o.age_min || data.last() < o.age_max {
        return Err(ModelError::AgeCoverage {
            from: o.age_min,
            to: o.age_max,
        });
    }
    let mut rows = Vec::new();
    for cat in Category::ALL {
        let weight = cat.weight(o);
        let mut pairs = Vec::new();
        for age in o.age_min..=o.age_max {
            pairs.push((age, model_hours(profile, age, cat, o)?, data.value(age, cat.name())));
        }
        match o.moments {
            MomentMode::Age => rows.extend(pairs.into_iter().map(|(age, m, d)| MomentRow {
                age: Some(age),
                category: cat,
                model: m,
                data: d,
                weight,
            })),
            MomentMode::Average => {
                let n = pairs.len() as f64;
                rows.push(MomentRow {
                    age: None,
                    category: cat,
                    model: pairs.iter().map(|p| p.1).sum::<f64>() / n,
                    data: pairs.iter().map(|p| p.2).sum::<f64>() / n,
                    weight,
                });
            }
        }
    }
    Ok(MomentSet { rows })
}

/// A time-use table holding the model's own wife profile, for self-recovery runs.
pub fn moment_data_from_profile(profile: &AgeProfile, o: &EstimationOptions) -> Result<AgeTable> {
    let rows = (o.age_min..=o.age_max)
        .map(|age| {
            let v = Category::ALL
                .iter()
                .map(|&c| model_hours(profile, age, c, o))
                .collect::<Result<Vec<_>>>()?;
            Ok((age, v))
        })
        .collect::<Result<Vec<_>>>()?;
    AgeTable::from_rows(TableKind::TimeUse, rows, Path::new("<model>"))
}

/// Search box for each estimated parameter, in `EstimatedParams::NAMES` order.
pub fn default_bounds() -> [(f64, f64); EstimatedParams::COUNT] {
    let mut b = [(-30.0, 5.0); EstimatedParams::COUNT];
    for (i, name) in EstimatedParams::NAMES.iter().enumerate() {
        if name.starts_with("psi") || *name == "eta" {
            b[i] = (0.01, 0.99);
        } else if name.starts_with("rho") {
            b[i] = (-0.95, 0.95);
        }
    }
    b
}

fn within(theta: &EstimatedParams, bounds: &[(f64, f64)]) -> bool {
    theta
        .to_array()
        .iter()
        .zip(bounds)
        .all(|(v, (lo, hi))| *v > *lo && *v < *hi)
}

/// Moments implied by `theta`, or `None` if the model fails at `theta`.
pub fn model_moments(
    theta: &EstimatedParams,
    base: &ModelParams,
    tables: &Tables,
    data: &AgeTable,
    exec: ExecMode,
) -> Option<MomentSet> {
    let params = ModelParams {
        estimated: *theta,
        ..*base
    };
    let opts = SolveOptions {
        exec,
        ..Default::default()
    };
    let run = match simulate_population(&params, tables, &opts) {
        Ok(r) => r,
        Err(e) => {
            log::debug!("objective penalty: {e}");
            return None;
        }
    };
    compute_moments(&run.aggregate, data, &base.estimation).ok()
}

/// Weighted squared distance between model and data moments at `theta`.
pub fn gmm_objective(theta: &EstimatedParams, base: &ModelParams, tables: &Tables, data: &AgeTable, exec: ExecMode) -> f64 {
    if !within(theta, &default_bounds()) {
        return base.estimation.penalty;
    }
    match model_moments(theta, base, tables, data, exec) {
        Some(m) => {
            let v = m.objective();
            if v.is_finite() {
                v
            } else {
                base.estimation.penalty
            }
        }
        None => base.estimation.penalty,
    }
}

#[derive(Debug, Clone)]
pub struct EstimationResult {
    pub theta_hat: EstimatedParams,
    pub objective: f64,
    pub evaluations: usize,
    pub iterations: usize,
    pub converged: bool,
    pub moments: Option<MomentSet>,
    /// `(theta, objective)` for every evaluation.
    pub log: Vec<(EstimatedParams, f64)>,
}

impl EstimationResult {
    pub fn write_log<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["eval"];
        header.extend(EstimatedParams::NAMES);
        header.push("objective");
        w.write_record(&header)?;
        for (i, (t, f)) in self.log.iter().enumerate() {
            let mut rec = vec![i.to_string()];
            rec.extend(t.to_array().iter().map(|v| v.to_string()));
            rec.push(f.to_string());
            w.write_record(&rec)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

fn to_unit(theta: &EstimatedParams, bounds: &[(f64, f64)]) -> Vec<f64> {
    theta
        .to_array()
        .iter()
        .zip(bounds)
        .map(|(v, (lo, hi))| (v - lo) / (hi - lo))
        .collect()
}

fn from_unit(u: &[f64], bounds: &[(f64, f64)]) -> EstimatedParams {
    let v: Vec<f64> = u.iter().zip(bounds).map(|(x, (lo, hi))| lo + x * (hi - lo)).collect();
    EstimatedParams::from_slice(&v)
}

/// Minimize the objective by Nelder-Mead in box-scaled coordinates.
pub fn estimate(
    theta0: &EstimatedParams,
    bounds: &[(f64, f64); EstimatedParams::COUNT],
    base: &ModelParams,
    tables: &Tables,
    data: &AgeTable,
    exec: ExecMode,
) -> Result<EstimationResult> {
    if !within(theta0, bounds) {
        return Err(ModelError::Config("starting point lies outside the bounds".into()));
    }
    let o = &base.estimation;
    let f = |u: &[f64]| {
        let theta = from_unit(u, bounds);
        if !within(&theta, bounds) {
            return o.penalty;
        }
        gmm_objective(&theta, base, tables, data, exec)
    };
    let steps: Vec<f64> = theta0
        .to_array()
        .iter()
        .zip(bounds)
        .map(|(v, (lo, hi))| {
            if o.relative_step {
                o.init_step * v.abs().max(1e-3) / (hi - lo)
            } else {
                o.init_step
            }
        })
        .collect();
    let nm = nelder_mead_with_steps(
        &f,
        &to_unit(theta0, bounds),
        &steps,
        &NmOptions {
            max_evals: o.max_evals,
            tol: o.tol,
            init_step: o.init_step,
            restarts: o.restarts,
            stall: o.stall,
            adaptive: o.adaptive,
            exec,
        },
    );
    // a zero budget still reports the start
    let theta_hat = if o.max_evals == 0 { *theta0 } else { from_unit(&nm.x, bounds) };
    let objective = if o.max_evals == 0 { nm.history[0].1 } else { nm.f };
    Ok(EstimationResult {
        theta_hat,
        objective,
        evaluations: nm.evals,
        iterations: nm.iterations,
        converged: nm.converged,
        moments: model_moments(&theta_hat, base, tables, data, exec),
        log: nm.history.iter().map(|(u, v)| (from_unit(u, bounds), *v)).collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::simulate::AgeRow;

    fn flat_profile(work: f64, care: f64) -> AgeProfile {
        AgeProfile {
            rows: (20..=80)
                .map(|age| AgeRow {
                    age,
                    mass: 1.0,
                    market: [8.0, work - 3.0],
                    housework: [3.0, 3.0],
                    childcare: [0.0, care],
                    leisure: [13.0, 24.0 - work - care],
                    ..Default::default()
                })
                .collect(),
        }
    }

    #[test]
    fn weights_and_count() {
        let o = EstimationOptions::default();
        let p = flat_profile(8.0, 2.0);
        let data = moment_data_from_profile(&p, &o).unwrap();
        let m = compute_moments(&p, &data, &o).unwrap();
        assert_eq!(m.rows.len(), 135);
        assert_eq!(m.objective(), 0.0);
        for r in &m.rows {
            let w = match r.category {
                Category::Work => 1.0 / 8.0,
                Category::Leisure => 1.0 / 12.0,
                Category::Childcare => 1.0 / 4.0,
            };
            assert_eq!(r.weight, w);
        }
        let avg = EstimationOptions {
            moments: MomentMode::Average,
            ..o
        };
        assert_eq!(compute_moments(&p, &data, &avg).unwrap().rows.len(), 3);
    }

    #[test]
    fn one_hour_of_childcare() {
        let o = EstimationOptions::default();
        let p = flat_profile(8.0, 2.0);
        let mut data = moment_data_from_profile(&p, &o).unwrap();
        data.data[2][10] -= 1.0;
        let m = compute_moments(&p, &data, &o).unwrap();
        assert!((m.objective() - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn missing_ages_are_an_error() {
        let o = EstimationOptions::default();
        let p = flat_profile(8.0, 2.0);
        let short = EstimationOptions { age_max: 50, ..o };
        let data = moment_data_from_profile(&p, &short).unwrap();
        assert!(compute_moments(&p, &data, &o).is_err());
    }

    #[test]
    fn bounds_follow_parameter_kind() {
        let b = default_bounds();
        assert_eq!(b[0], (0.01, 0.99));
        assert_eq!(b[5], (-0.95, 0.95));
        assert_eq!(b[13], (-30.0, 5.0));
        assert!(within(&EstimatedParams::default(), &b));
        let u = to_unit(&EstimatedParams::default(), &b);
        let back = from_unit(&u, &b).to_array();
        for (x, y) in back.iter().zip(EstimatedParams::default().to_array()) {
            assert!((x - y).abs() < 1e-12);
        }
    }
}
