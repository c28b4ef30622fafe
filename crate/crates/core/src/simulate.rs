//! Forward simulation of the population measure and derived age profiles.

use std::io::{Read, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::budget::{consumption_residual, FlowBreakdown, PlMode};
use crate::config::ModelParams;
use crate::data::Tables;
use crate::error::{ModelError, Result};
use crate::grids::TimeUse;
use crate::model::HouseholdModel;
use crate::par::ExecMode;
use crate::params::{child_age, ChildState, ChoicePoint, HouseholdType, StateIndex, TypeWeights};
use crate::shocks::ShockSystem;
use crate::solver::{solve_lifecycle, BirthRule, SolveOptions, Solution};

/// Population averages at one age. Hours are per day, money per year.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct AgeRow {
    pub age: u32,
    pub mass: f64,
    /// Share of the entry cohort still alive.
    pub cohort: f64,
    pub prob_child: f64,
    pub prob_birth: f64,
    pub prob_pl: f64,
    pub market: [f64; 2],
    pub housework: [f64; 2],
    pub childcare: [f64; 2],
    pub leisure: [f64; 2],
    pub earn: [f64; 2],
    pub earn_household: f64,
    pub pl_income: f64,
    pub nursery_cost: f64,
    pub pension: f64,
    pub consumption: f64,
    pub assets: f64,
    pub top_asset_share: f64,
}

impl AgeRow {
    pub const FIELDS: [&'static str; 24] = [
        "mass",
        "cohort",
        "prob_child",
        "prob_birth",
        "prob_pl",
        "market_1",
        "market_2",
        "housework_1",
        "housework_2",
        "childcare_1",
        "childcare_2",
        "leisure_1",
        "leisure_2",
        "earn_1",
        "earn_2",
        "earn_household",
        "pl_income",
        "nursery_cost",
        "pension",
        "consumption",
        "assets",
        "top_asset_share",
        "work_1",
        "work_2",
    ];

    pub fn to_array(&self) -> [f64; 24] {
        [
            self.mass,
            self.cohort,
            self.prob_child,
            self.prob_birth,
            self.prob_pl,
            self.market[0],
            self.market[1],
            self.housework[0],
            self.housework[1],
            self.childcare[0],
            self.childcare[1],
            self.leisure[0],
            self.leisure[1],
            self.earn[0],
            self.earn[1],
            self.earn_household,
            self.pl_income,
            self.nursery_cost,
            self.pension,
            self.consumption,
            self.assets,
            self.top_asset_share,
            self.market[0] + self.housework[0],
            self.market[1] + self.housework[1],
        ]
    }

    /// Inverse of [`AgeRow::to_array`]; the derived work columns are ignored.
    pub fn from_array(age: u32, v: &[f64]) -> Self {
        Self {
            age,
            mass: v[0],
            cohort: v[1],
            prob_child: v[2],
            prob_birth: v[3],
            prob_pl: v[4],
            market: [v[5], v[6]],
            housework: [v[7], v[8]],
            childcare: [v[9], v[10]],
            leisure: [v[11], v[12]],
            earn: [v[13], v[14]],
            earn_household: v[15],
            pl_income: v[16],
            nursery_cost: v[17],
            pension: v[18],
            consumption: v[19],
            assets: v[20],
            top_asset_share: v[21],
        }
    }

    /// Total work (market plus housework) of one spouse.
    pub fn work(&self, spouse: usize) -> f64 {
        self.market[spouse] + self.housework[spouse]
    }

    /// Largest deviation of a spouse's hours from 24.
    pub fn hours_gap(&self) -> f64 {
        (0..2)
            .map(|s| (self.market[s] + self.housework[s] + self.childcare[s] + self.leisure[s] - 24.0).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AgeProfile {
    pub rows: Vec<AgeRow>,
}

impl AgeProfile {
    pub fn row(&self, age: u32) -> Option<&AgeRow> {
        self.rows.iter().find(|r| r.age == age)
    }

    /// Entrywise `self - other`; both must cover the same ages.
    pub fn difference(&self, other: &AgeProfile) -> Result<AgeProfile> {
        check_same_ages(&[self, other])?;
        let rows = self
            .rows
            .iter()
            .zip(&other.rows)
            .map(|(a, b)| {
                let (x, y) = (a.to_array(), b.to_array());
                let d: Vec<f64> = x.iter().zip(y.iter()).map(|(p, q)| p - q).collect();
                AgeRow::from_array(a.age, &d)
            })
            .collect();
        Ok(AgeProfile { rows })
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let mut header = vec!["age"];
        header.extend(AgeRow::FIELDS);
        w.write_record(&header)?;
        for r in &self.rows {
            let mut rec = vec![r.age.to_string()];
            rec.extend(r.to_array().iter().map(|v| v.to_string()));
            w.write_record(&rec)?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rdr = csv::Reader::from_reader(input);
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec?;
            let parse = |i: usize| -> Result<f64> {
                rec.get(i)
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| ModelError::Config(format!("bad profile field in column {i}")))
            };
            let age = parse(0)? as u32;
            let v = (1..=AgeRow::FIELDS.len()).map(parse).collect::<Result<Vec<_>>>()?;
            rows.push(AgeRow::from_array(age, &v));
        }
        Ok(Self { rows })
    }
}

fn check_same_ages(profiles: &[&AgeProfile]) -> Result<()> {
    let first = profiles[0];
    for p in profiles {
        if p.rows.len() != first.rows.len() || p.rows.iter().zip(&first.rows).any(|(a, b)| a.age != b.age) {
            return Err(ModelError::Config("profiles cover different ages".into()));
        }
    }
    Ok(())
}

/// Worst-case checks gathered while simulating.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SimDiagnostics {
    pub max_mass_error: f64,
    pub max_budget_gap: f64,
    pub max_time_gap: f64,
    pub max_top_asset_share: f64,
}

impl SimDiagnostics {
    fn merge(&mut self, o: &SimDiagnostics) {
        self.max_mass_error = self.max_mass_error.max(o.max_mass_error);
        self.max_budget_gap = self.max_budget_gap.max(o.max_budget_gap);
        self.max_time_gap = self.max_time_gap.max(o.max_time_gap);
        self.max_top_asset_share = self.max_top_asset_share.max(o.max_top_asset_share);
    }
}

/// Flows and hours of one state under its stored choice.
pub fn state_outcome(model: &HouseholdModel, s: &StateIndex, p: &ChoicePoint) -> Option<(FlowBreakdown, TimeUse)> {
    let flows = consumption_residual(model, s, p)?;
    let k = if p.birth { ChildState::WithChild } else { s.k };
    let jc = child_age(s.j, k, model.cal.j_birth);
    let time = model
        .grids
        .time_use(p, model.parenting_active(jc), model.opts.pl_mode == PlMode::Exclusive)?;
    Some((flows, time))
}

/// Running weighted sums for one age.
#[derive(Default)]
struct RowAcc {
    row: AgeRow,
}

impl RowAcc {
    fn add(&mut self, m: f64, s: &StateIndex, p: &ChoicePoint, f: &FlowBreakdown, t: &TimeUse, top: bool) {
        let r = &mut self.row;
        r.mass += m;
        let has_child = p.birth || s.k == ChildState::WithChild;
        r.prob_child += m * has_child as u8 as f64;
        r.prob_birth += m * p.birth as u8 as f64;
        r.prob_pl += m * p.pl as u8 as f64;
        for i in 0..2 {
            r.market[i] += m * 24.0 * t.market[i];
            r.housework[i] += m * 24.0 * t.housework[i];
            r.childcare[i] += m * 24.0 * t.parenting[i];
            r.leisure[i] += m * 24.0 * t.leisure[i];
        }
        r.earn[0] += m * f.earn_1;
        r.earn[1] += m * f.earn_2;
        r.earn_household += m * (f.earn_1 + f.earn_2);
        r.pl_income += m * f.pl_income;
        r.nursery_cost += m * f.nursery_cost;
        r.pension += m * f.pension;
        r.consumption += m * f.consumption;
        r.assets += m * f.assets;
        r.top_asset_share += m * top as u8 as f64;
    }

    /// Divide by total mass so rows are averages.
    fn finish(mut self, age: u32, cohort: f64) -> AgeRow {
        let m = self.row.mass;
        let mut v = self.row.to_array();
        for x in v.iter_mut().skip(2) {
            *x /= m;
        }
        self.row = AgeRow::from_array(age, &v);
        self.row.mass = m;
        self.row.cohort = cohort;
        self.row
    }
}

/// Default entry distribution: no assets, shocks at their stationary law.
pub fn default_initial(model: &HouseholdModel) -> Vec<f64> {
    let l = &model.layout;
    let mut init = vec![0.0; l.slice_len()];
    for (iz, pz) in model.shocks.persistent.stationary.iter().enumerate() {
        for (ie, pe) in model.shocks.transitory.probs.iter().enumerate() {
            init[l.inner(0, iz, ie)] = pz * pe;
        }
    }
    init
}

/// Push the entry measure through the policies age by age.
///
/// `initial` is a measure over the childless branch at `j_entry` in inner
/// index order. The measure is not attrited by mortality; the `cohort`
/// column carries cumulative survival for reweighting.
pub fn simulate_distribution(
    model: &HouseholdModel,
    sol: &Solution,
    initial: &[f64],
) -> Result<(AgeProfile, SimDiagnostics)> {
    let l = &sol.layout;
    let slice = l.slice_len();
    let n_a = l.n_assets;
    let top = n_a - 1;
    let mut mu = vec![0.0; 2 * slice];
    mu[..slice].copy_from_slice(initial);
    let mut diag = SimDiagnostics::default();
    let mut rows = Vec::with_capacity(l.n_ages);
    let mut cohort = 1.0;
    let transitory = &model.shocks.transitory.probs;

    for age in 0..l.n_ages {
        let j = l.j_entry + age as u32;
        let mut acc = RowAcc::default();
        let mut next = vec![0.0; 2 * slice];
        // mass by (k', ia', iz) before the shock draws
        let mut staged = vec![0.0; 2 * n_a * l.nz2];
        for (kk, k) in ChildState::BOTH.into_iter().enumerate() {
            for ia in 0..n_a {
                for iz in 0..l.nz2 {
                    for ie in 0..l.ne2 {
                        let m = mu[kk * slice + l.inner(ia, iz, ie)];
                        if m == 0.0 {
                            continue;
                        }
                        let s = StateIndex { j, k, ia, iz, ie };
                        let p = sol.policy_at(&s);
                        let Some((f, t)) = p.is_feasible().then(|| state_outcome(model, &s, &p)).flatten() else {
                            return Err(ModelError::InfeasibleReached {
                                age: j,
                                child: k.has_child(),
                                ia,
                                iz,
                                ie,
                                mass: m,
                            });
                        };
                        diag.max_budget_gap = diag.max_budget_gap.max(f.identity_gap().abs());
                        acc.add(m, &s, &p, &f, &t, ia == top);
                        let kn = if p.birth { ChildState::WithChild } else { k };
                        staged[(kn.index() * n_a + p.ia_next as usize) * l.nz2 + iz] += m;
                    }
                }
            }
        }
        let row = acc.finish(j, cohort);
        diag.max_mass_error = diag.max_mass_error.max((row.mass - 1.0).abs());
        diag.max_time_gap = diag.max_time_gap.max(row.hours_gap());
        diag.max_top_asset_share = diag.max_top_asset_share.max(row.top_asset_share);
        rows.push(row);
        cohort *= model.inputs.survival(j);

        for kk in 0..2 {
            for ia in 0..n_a {
                for iz in 0..l.nz2 {
                    let m = staged[(kk * n_a + ia) * l.nz2 + iz];
                    if m == 0.0 {
                        continue;
                    }
                    for (izn, pz) in model.shocks.persistent.row(iz).iter().enumerate() {
                        if *pz == 0.0 {
                            continue;
                        }
                        for (ie, pe) in transitory.iter().enumerate() {
                            next[kk * slice + l.inner(ia, izn, ie)] += m * pz * pe;
                        }
                    }
                }
            }
        }
        mu = next;
    }
    if diag.max_top_asset_share > 0.01 {
        log::warn!(
            "{}: up to {:.1}% of mass sits on the top asset point; consider raising asset_max",
            sol.htype.label(),
            100.0 * diag.max_top_asset_share
        );
    }
    Ok((AgeProfile { rows }, diag))
}

fn draw(rng: &mut ChaCha8Rng, probs: &[f64]) -> usize {
    let u: f64 = rng.gen();
    let mut c = 0.0;
    for (i, p) in probs.iter().enumerate() {
        c += p;
        if u < c {
            return i;
        }
    }
    probs.len() - 1
}

/// Monte Carlo counterpart of [`simulate_distribution`] with `n` seeded
/// paths started from the default entry distribution. Only meant as a
/// cross-check of the exact push-forward.
pub fn simulate_paths(model: &HouseholdModel, sol: &Solution, n: usize, seed: u64) -> Result<AgeProfile> {
    let l = &sol.layout;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let stationary = &model.shocks.persistent.stationary;
    let q = &model.shocks.transitory.probs;
    let mut states: Vec<(ChildState, usize, usize, usize)> = (0..n)
        .map(|_| (ChildState::Childless, 0, draw(&mut rng, stationary), draw(&mut rng, q)))
        .collect();
    let mut rows = Vec::with_capacity(l.n_ages);
    let mut cohort = 1.0;
    let w = 1.0 / n as f64;
    for age in 0..l.n_ages {
        let j = l.j_entry + age as u32;
        let mut acc = RowAcc::default();
        for st in states.iter_mut() {
            let (k, ia, iz, ie) = *st;
            let s = StateIndex { j, k, ia, iz, ie };
            let p = sol.policy_at(&s);
            let (f, t) = p
                .is_feasible()
                .then(|| state_outcome(model, &s, &p))
                .flatten()
                .ok_or(ModelError::InfeasibleReached {
                    age: j,
                    child: k.has_child(),
                    ia,
                    iz,
                    ie,
                    mass: w,
                })?;
            acc.add(w, &s, &p, &f, &t, ia == l.n_assets - 1);
            let kn = if p.birth { ChildState::WithChild } else { k };
            *st = (
                kn,
                p.ia_next as usize,
                draw(&mut rng, model.shocks.persistent.row(iz)),
                draw(&mut rng, q),
            );
        }
        rows.push(acc.finish(j, cohort));
        cohort *= model.inputs.survival(j);
    }
    Ok(AgeProfile { rows })
}

/// Weighted average of per-type profiles.
pub fn aggregate_types(profiles: &[&AgeProfile], weights: &[f64]) -> Result<AgeProfile> {
    if profiles.len() != weights.len() || profiles.is_empty() {
        return Err(ModelError::WeightCount {
            expected: profiles.len(),
            got: weights.len(),
        });
    }
    let sum: f64 = weights.iter().sum();
    if (sum - 1.0).abs() > 1e-9 {
        return Err(ModelError::WeightSum(sum));
    }
    check_same_ages(profiles)?;
    let rows = (0..profiles[0].rows.len())
        .map(|i| {
            let mut v = [0.0; 24];
            for (p, w) in profiles.iter().zip(weights) {
                for (x, y) in v.iter_mut().zip(p.rows[i].to_array()) {
                    *x += w * y;
                }
            }
            AgeRow::from_array(profiles[0].rows[i].age, &v)
        })
        .collect();
    Ok(AgeProfile { rows })
}

/// Relative gap in wife earnings by years since birth.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PenaltySeries {
    /// `(t, gap)`; the gap is NaN where the comparison earnings are zero.
    pub points: Vec<(u32, f64)>,
}

impl PenaltySeries {
    /// Event time and value of the lowest defined gap.
    pub fn trough(&self) -> Option<(u32, f64)> {
        self.points
            .iter()
            .filter(|p| p.1.is_finite())
            .fold(None, |best: Option<(u32, f64)>, &(t, g)| match best {
                Some((_, b)) if b <= g => best,
                _ => Some((t, g)),
            })
    }

    pub fn gap(&self, t: u32) -> Option<f64> {
        self.points.iter().find(|p| p.0 == t).map(|p| p.1)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["event_time", "gap"])?;
        for (t, g) in &self.points {
            w.write_record([t.to_string(), g.to_string()])?;
        }
        w.flush().map_err(csv::Error::from)?;
        Ok(())
    }
}

/// `(E_child - E_none) / E_none` of wife labor earnings at `j_birth + t`.
pub fn child_penalty(with_child: &AgeProfile, childless: &AgeProfile, j_birth: u32, horizon: u32) -> Result<PenaltySeries> {
    let mut points = Vec::with_capacity(horizon as usize + 1);
    for t in 0..=horizon {
        let age = j_birth + t;
        let (Some(a), Some(b)) = (with_child.row(age), childless.row(age)) else {
            return Err(ModelError::AgeCoverage {
                from: j_birth,
                to: j_birth + horizon,
            });
        };
        let gap = if b.earn[1] == 0.0 {
            log::warn!("childless wife earnings are zero at age {age}; penalty undefined");
            f64::NAN
        } else {
            (a.earn[1] - b.earn[1]) / b.earn[1]
        };
        points.push((t, gap));
    }
    Ok(PenaltySeries { points })
}

/// Solved and simulated household type.
#[derive(Debug, Clone)]
pub struct TypeRun {
    pub htype: HouseholdType,
    pub solution: Solution,
    pub profile: AgeProfile,
    pub diagnostics: SimDiagnostics,
}

#[derive(Debug, Clone)]
pub struct PopulationRun {
    pub types: Vec<TypeRun>,
    pub aggregate: AgeProfile,
    pub diagnostics: SimDiagnostics,
}

/// Model for one household type under `params`.
pub fn build_model(params: &ModelParams, tables: &Tables, htype: HouseholdType) -> Result<HouseholdModel> {
    HouseholdModel::new(params, htype, tables.inputs_for(&htype, params))
}

/// Solve and simulate one type.
pub fn run_type(
    params: &ModelParams,
    tables: &Tables,
    shocks: &ShockSystem,
    htype: HouseholdType,
    opts: &SolveOptions,
) -> Result<TypeRun> {
    let model = HouseholdModel::with_shocks(params, htype, tables.inputs_for(&htype, params), shocks.clone())?;
    let solution = solve_lifecycle(&model, opts)?;
    let (profile, diagnostics) = simulate_distribution(&model, &solution, &default_initial(&model))?;
    Ok(TypeRun {
        htype,
        solution,
        profile,
        diagnostics,
    })
}

/// Solve and simulate every type with positive weight, then aggregate.
pub fn simulate_population(params: &ModelParams, tables: &Tables, opts: &SolveOptions) -> Result<PopulationRun> {
    params.validate()?;
    let shocks = ShockSystem::new(&params.shocks, &params.grid)?;
    let types: Vec<HouseholdType> = params.types.types().into_iter().filter(|t| t.weight > 0.0).collect();
    let runs = types
        .iter()
        .map(|t| run_type(params, tables, &shocks, *t, opts))
        .collect::<Result<Vec<_>>>()?;
    let profiles: Vec<&AgeProfile> = runs.iter().map(|r| &r.profile).collect();
    let weights: Vec<f64> = runs.iter().map(|r| r.htype.weight).collect();
    let aggregate = aggregate_types(&profiles, &weights)?;
    let mut diagnostics = SimDiagnostics::default();
    for r in &runs {
        diagnostics.merge(&r.diagnostics);
    }
    Ok(PopulationRun {
        types: runs,
        aggregate,
        diagnostics,
    })
}

/// Penalty series for the types in `weights`: every couple has the child
/// versus no couple has it, all else equal.
pub fn population_penalty(
    params: &ModelParams,
    tables: &Tables,
    weights: &TypeWeights,
    horizon: u32,
    exec: ExecMode,
) -> Result<(PenaltySeries, AgeProfile, AgeProfile)> {
    let p = ModelParams {
        types: *weights,
        ..*params
    };
    let treated = simulate_population(
        &p,
        tables,
        &SolveOptions {
            birth: BirthRule::Always,
            exec,
        },
    )?;
    let control = simulate_population(
        &p,
        tables,
        &SolveOptions {
            birth: BirthRule::Never,
            exec,
        },
    )?;
    let series = child_penalty(&treated.aggregate, &control.aggregate, params.calibrated.j_birth, horizon)?;
    Ok((series, treated.aggregate, control.aggregate))
}

/// Named experiments comparing two configurations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum Counterfactual {
    /// High-school couples versus college couples.
    CollegeVsHighschool,
    /// College couples without versus with a nursery.
    NurseryVsNot,
    /// Replacement rate 0.50 to 0.75.
    Rr75,
    /// Wages up 10% for both spouses.
    Wage10,
}

impl Counterfactual {
    pub const ALL: [Counterfactual; 4] = [
        Counterfactual::CollegeVsHighschool,
        Counterfactual::NurseryVsNot,
        Counterfactual::Rr75,
        Counterfactual::Wage10,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Counterfactual::CollegeVsHighschool => "college_vs_highschool",
            Counterfactual::NurseryVsNot => "nursery_vs_not",
            Counterfactual::Rr75 => "rr75",
            Counterfactual::Wage10 => "wage10",
        }
    }

    /// `(baseline, counterfactual)` override lists.
    pub fn overrides(self) -> (Vec<(&'static str, String)>, Vec<(&'static str, String)>) {
        let types = |cn: f64, cx: f64, hn: f64, hx: f64| {
            vec![
                ("types.college_nursery", cn.to_string()),
                ("types.college_no_nursery", cx.to_string()),
                ("types.highschool_nursery", hn.to_string()),
                ("types.highschool_no_nursery", hx.to_string()),
            ]
        };
        match self {
            Counterfactual::CollegeVsHighschool => (types(0.0, 0.0, 0.5, 0.5), types(0.5, 0.5, 0.0, 0.0)),
            Counterfactual::NurseryVsNot => (types(0.0, 1.0, 0.0, 0.0), types(1.0, 0.0, 0.0, 0.0)),
            Counterfactual::Rr75 => (vec![], vec![("calibrated.rr_pl", "0.75".into())]),
            Counterfactual::Wage10 => (vec![], vec![("calibrated.wage", "1.1".into())]),
        }
    }
}

#[derive(Debug, Clone)]
pub struct CounterfactualRun {
    pub baseline: AgeProfile,
    pub counterfactual: AgeProfile,
    pub difference: AgeProfile,
}

const ALLOWED_OVERRIDES: [&str; 2] = ["calibrated.rr_pl", "calibrated.wage"];

fn apply_overrides(base: &ModelParams, overrides: &[(&str, String)]) -> Result<ModelParams> {
    let mut p = *base;
    for (k, v) in overrides {
        if !(ALLOWED_OVERRIDES.contains(k) || k.starts_with("types.")) {
            return Err(ModelError::OverrideKey(k.to_string()));
        }
        p = p.with_override(k, v)?;
    }
    p.validate()?;
    Ok(p)
}

/// Re-solve and re-simulate under each side's overrides.
pub fn run_counterfactual(
    base: &ModelParams,
    tables: &Tables,
    baseline: &[(&str, String)],
    counterfactual: &[(&str, String)],
    opts: &SolveOptions,
) -> Result<CounterfactualRun> {
    let pb = apply_overrides(base, baseline)?;
    let pc = apply_overrides(base, counterfactual)?;
    let b = simulate_population(&pb, tables, opts)?.aggregate;
    let c = if pc == pb {
        b.clone()
    } else {
        simulate_population(&pc, tables, opts)?.aggregate
    };
    let difference = c.difference(&b)?;
    Ok(CounterfactualRun {
        baseline: b,
        counterfactual: c,
        difference,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(age: u32, earn2: f64) -> AgeRow {
        AgeRow {
            age,
            mass: 1.0,
            earn: [1.0, earn2],
            ..Default::default()
        }
    }

    #[test]
    fn penalty_arithmetic() {
        let a = AgeProfile {
            rows: (30..=40).map(|j| row(j, 0.6)).collect(),
        };
        let b = AgeProfile {
            rows: (30..=40).map(|j| row(j, 1.0)).collect(),
        };
        let s = child_penalty(&a, &b, 30, 10).unwrap();
        assert!(s.points.iter().all(|p| (p.1 + 0.4).abs() < 1e-15));
        let same = child_penalty(&b, &b, 30, 10).unwrap();
        assert!(same.points.iter().all(|p| p.1 == 0.0));
        assert!(child_penalty(&a, &b, 30, 11).is_err());
        let zero = AgeProfile {
            rows: (30..=40).map(|j| row(j, 0.0)).collect(),
        };
        assert!(child_penalty(&a, &zero, 30, 2).unwrap().points[0].1.is_nan());
    }

    #[test]
    fn aggregation_cases() {
        let a = AgeProfile {
            rows: vec![row(20, 1.0), row(21, 2.0)],
        };
        let b = AgeProfile {
            rows: vec![row(20, 3.0), row(21, 5.0)],
        };
        assert_eq!(aggregate_types(&[&a, &a], &[0.5, 0.5]).unwrap(), a);
        assert_eq!(aggregate_types(&[&a, &b], &[1.0, 0.0]).unwrap(), a);
        let m = aggregate_types(&[&a, &b], &[0.25, 0.75]).unwrap();
        assert_eq!(m.rows[1].earn[1], 0.25 * 2.0 + 0.75 * 5.0);
        assert!(aggregate_types(&[&a, &b], &[0.5, 0.6]).is_err());
        assert!(aggregate_types(&[&a, &b], &[1.0]).is_err());
    }

    #[test]
    fn profile_csv_round_trip() {
        let p = AgeProfile {
            rows: vec![
                AgeRow {
                    age: 20,
                    mass: 1.0,
                    market: [7.123456789012345, 0.1 + 0.2],
                    assets: 1e-17,
                    ..Default::default()
                },
                row(21, 2.0 / 3.0),
            ],
        };
        let mut buf = Vec::new();
        p.write_csv(&mut buf).unwrap();
        assert_eq!(AgeProfile::read_csv(buf.as_slice()).unwrap(), p);
    }

    #[test]
    fn counterfactual_keys_are_restricted() {
        let base = ModelParams::default();
        assert!(matches!(
            apply_overrides(&base, &[("calibrated.beta", "0.9".into())]),
            Err(ModelError::OverrideKey(_))
        ));
        let p = apply_overrides(&base, &Counterfactual::NurseryVsNot.overrides().1).unwrap();
        assert_eq!(p.types.college_nursery, 1.0);
    }
}
