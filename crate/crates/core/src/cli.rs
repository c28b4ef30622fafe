//! The `lifecycle` command line.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::config::{ModelParams, Preset};
use crate::data::{load_tables, synth_defaults, Tables};
use crate::error::{ModelError, Result};
use crate::gmm::{default_bounds, estimate};
use crate::par::{self, ExecMode};
use crate::params::{TypeWeights, EstimatedParams};
use crate::simulate::{population_penalty, run_counterfactual, simulate_population, Counterfactual};
use crate::solver::SolveOptions;

#[derive(Debug, Parser)]
#[command(name = "lifecycle", version, about = "Solve, simulate and estimate the household life-cycle model")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// TOML config layered over the preset.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Preset::Paper, global = true)]
    pub preset: Preset,
    /// Output directory.
    #[arg(long, default_value = "out", global = true)]
    pub out: PathBuf,
    /// Override one config key, e.g. `--set calibrated.rr_pl=0.75`.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    pub overrides: Vec<String>,
    /// Directory with productivity.csv, survival.csv, timeuse.csv, penalty.csv.
    #[arg(long, global = true)]
    pub data_dir: Option<PathBuf>,
    /// Worker threads (1 runs sequentially).
    #[arg(long, global = true)]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve every household type and dump value and policy arrays.
    Solve,
    /// Simulate age profiles per type and in aggregate.
    Simulate,
    /// Estimate the preference parameters against the time-use table.
    Estimate,
    /// Run one named experiment, or all four.
    Counterfactual {
        #[arg(value_enum)]
        experiment: Option<Counterfactual>,
    },
    /// Run the invariant checks and write a pass/fail report.
    Validate,
    /// Write the preset config and the synthetic data tables.
    ExportDefaults,
}

/// Failure class mapped to the process exit code.
#[derive(Debug)]
pub enum Failure {
    Validation(String),
    Input(ModelError),
}

impl Failure {
    pub fn exit_code(&self) -> i32 {
        match self {
            Failure::Validation(_) => 1,
            Failure::Input(_) => 2,
        }
    }
}

impl From<ModelError> for Failure {
    fn from(e: ModelError) -> Self {
        match e {
            ModelError::InfeasibleReached { .. } => Failure::Validation(e.to_string()),
            e => Failure::Input(e),
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Validation(m) => write!(f, "validation failed: {m}"),
            Failure::Input(e) => write!(f, "{e}"),
        }
    }
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path).map(BufWriter::new).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ModelError + '_ {
    move |source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    }
}

struct Ctx {
    params: ModelParams,
    tables: Tables,
    out: PathBuf,
    opts: SolveOptions,
}

/// Parse-free entry point used by `main` and tests.
pub fn run(cli: Cli) -> std::result::Result<(), Failure> {
    let workers = cli.workers;
    let body = move || run_inner(cli);
    match workers {
        Some(n) => par::with_workers(n, body),
        None => body(),
    }
}

fn run_inner(cli: Cli) -> std::result::Result<(), Failure> {
    let params = ModelParams::load(cli.config.as_deref(), cli.preset, &cli.overrides)?;
    std::fs::create_dir_all(&cli.out).map_err(io_err(&cli.out))?;
    if let Command::ExportDefaults = cli.command {
        return export_defaults(&params, &cli.out).map_err(Into::into);
    }
    let exec = if cli.workers == Some(1) {
        ExecMode::Sequential
    } else {
        ExecMode::Parallel
    };
    let ctx = Ctx {
        tables: load_tables(cli.data_dir.as_deref())?,
        params,
        out: cli.out,
        opts: SolveOptions {
            exec,
            ..Default::default()
        },
    };
    match cli.command {
        Command::Solve => solve(&ctx)?,
        Command::Simulate => simulate(&ctx)?,
        Command::Estimate => run_estimate(&ctx)?,
        Command::Counterfactual { experiment } => {
            let list: Vec<Counterfactual> = experiment.map(|e| vec![e]).unwrap_or_else(|| Counterfactual::ALL.to_vec());
            for e in list {
                counterfactual(&ctx, e)?;
            }
        }
        Command::Validate => validate(&ctx)?,
        Command::ExportDefaults => unreachable!(),
    }
    Ok(())
}

fn export_defaults(params: &ModelParams, out: &Path) -> Result<()> {
    let path = out.join("config.toml");
    std::fs::write(&path, params.to_toml_string()?).map_err(io_err(&path))?;
    synth_defaults().write_dir(out)?;
    println!("wrote {} and synthetic data tables", path.display());
    Ok(())
}

fn solve(ctx: &Ctx) -> Result<()> {
    println!("states per child-state branch: {}", ctx.params.states_per_branch());
    let run = simulate_population(&ctx.params, &ctx.tables, &ctx.opts)?;
    for t in &run.types {
        let path = ctx.out.join(format!("solution_{}.csv", t.htype.label()));
        t.solution.write_csv(create(&path)?, ctx.params.calibrated.j_birth)?;
        println!(
            "{}: birth preferred at {:.1}% of states at age {}",
            t.htype.label(),
            100.0 * t.solution.birth_dominance,
            ctx.params.calibrated.j_birth
        );
    }
    Ok(())
}

fn simulate(ctx: &Ctx) -> Result<()> {
    let run = simulate_population(&ctx.params, &ctx.tables, &ctx.opts)?;
    for t in &run.types {
        t.profile
            .write_csv(create(&ctx.out.join(format!("profile_{}.csv", t.htype.label())))?)?;
    }
    run.aggregate.write_csv(create(&ctx.out.join("profile_aggregate.csv"))?)?;
    let d = run.diagnostics;
    println!(
        "mass error {:.2e}, budget gap {:.2e}, hours gap {:.2e}, top asset share {:.4}",
        d.max_mass_error, d.max_budget_gap, d.max_time_gap, d.max_top_asset_share
    );
    Ok(())
}

fn run_estimate(ctx: &Ctx) -> Result<()> {
    let o = &ctx.params.estimation;
    ctx.tables.check_timeuse(o.age_min, o.age_max)?;
    let res = estimate(
        &ctx.params.estimated,
        &default_bounds(),
        &ctx.params,
        &ctx.tables,
        &ctx.tables.timeuse,
        ctx.opts.exec,
    )?;
    res.write_log(create(&ctx.out.join("estimate_log.csv"))?)?;
    if let Some(m) = &res.moments {
        m.write_csv(create(&ctx.out.join("moments.csv"))?)?;
    }
    let theta = ModelParams {
        estimated: res.theta_hat,
        ..ctx.params
    };
    #[derive(serde::Serialize)]
    struct Out {
        objective: f64,
        evaluations: usize,
        iterations: usize,
        converged: bool,
        estimated: EstimatedParams,
    }
    let text = toml::to_string_pretty(&Out {
        objective: res.objective,
        evaluations: res.evaluations,
        iterations: res.iterations,
        converged: res.converged,
        estimated: theta.estimated,
    })
    .map_err(|e| ModelError::Config(e.to_string()))?;
    let path = ctx.out.join("estimate.toml");
    std::fs::write(&path, text).map_err(io_err(&path))?;
    println!(
        "objective {:.6e} after {} evaluations (converged: {})",
        res.objective, res.evaluations, res.converged
    );
    Ok(())
}

fn counterfactual(ctx: &Ctx, e: Counterfactual) -> Result<()> {
    let (b, c) = e.overrides();
    let run = run_counterfactual(&ctx.params, &ctx.tables, &b, &c, &ctx.opts)?;
    let name = e.name();
    run.baseline.write_csv(create(&ctx.out.join(format!("cf_{name}_baseline.csv")))?)?;
    run.counterfactual
        .write_csv(create(&ctx.out.join(format!("cf_{name}_counterfactual.csv")))?)?;
    run.difference
        .write_csv(create(&ctx.out.join(format!("cf_{name}_difference.csv")))?)?;
    let jb = ctx.params.calibrated.j_birth;
    let pl: f64 = (jb..jb + ctx.params.calibrated.pl_max_childage)
        .filter_map(|a| run.difference.row(a))
        .map(|r| r.prob_pl)
        .fold(f64::NEG_INFINITY, f64::max);
    println!("{name}: largest PL take-up change {:+.3}", pl);
    Ok(())
}

struct Report {
    rows: Vec<(String, f64, String, bool)>,
}

impl Report {
    fn check(&mut self, name: &str, value: f64, rule: &str, pass: bool) {
        println!("{} {name}: {value} ({rule})", if pass { "PASS" } else { "FAIL" });
        self.rows.push((name.to_string(), value, rule.to_string(), pass));
    }

    fn write(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_writer(create(path)?);
        w.write_record(["check", "value", "rule", "pass"])?;
        for (n, v, r, p) in &self.rows {
            w.write_record([n.clone(), v.to_string(), r.clone(), p.to_string()])?;
        }
        w.flush().map_err(io_err(path))
    }
}

fn validate(ctx: &Ctx) -> std::result::Result<(), Failure> {
    let p = &ctx.params;
    let mut rep = Report { rows: Vec::new() };
    let count = p.states_per_branch();
    if p.grid == crate::params::GridSpec::default() && p.calibrated.n_ages() == 81 {
        rep.check("state_count", count as f64, "== 334611", count == 334_611);
    } else {
        println!("state count {count} (the 334611 check applies to the paper preset)");
    }
    let run = simulate_population(p, &ctx.tables, &ctx.opts)?;
    let d = run.diagnostics;
    rep.check("mass_conservation", d.max_mass_error, "<= 1e-10", d.max_mass_error <= 1e-10);
    rep.check("budget_identity", d.max_budget_gap, "<= 1e-10", d.max_budget_gap <= 1e-10);
    rep.check("hours_identity", d.max_time_gap, "<= 1e-8", d.max_time_gap <= 1e-8);
    let bad: usize = run
        .types
        .iter()
        .map(|t| t.solution.monotonicity_violations(p.calibrated.j_birth))
        .sum();
    rep.check("value_monotone_in_assets", bad as f64, "== 0 violations", bad == 0);
    let dom = run
        .types
        .iter()
        .map(|t| t.solution.birth_dominance)
        .fold(f64::INFINITY, f64::min);
    rep.check("birth_dominance", dom, ">= 0.5", dom >= 0.5);
    rep.check(
        "top_asset_share",
        d.max_top_asset_share,
        "<= 0.01 (diagnostic)",
        true,
    );

    let no_nursery = TypeWeights {
        college_nursery: 0.0,
        college_no_nursery: 0.5,
        highschool_nursery: 0.0,
        highschool_no_nursery: 0.5,
    };
    let (series, _, _) = population_penalty(p, &ctx.tables, &no_nursery, 10, ctx.opts.exec)?;
    let path = ctx.out.join("penalty_comparison.csv");
    {
        let mut w = csv::Writer::from_writer(create(&path)?);
        w.write_record(["event_time", "model_gap", "empirical_gap"]).map_err(ModelError::from)?;
        for (t, g) in &series.points {
            let emp = if ctx.tables.penalty.keys().contains(t) {
                ctx.tables.penalty.value(*t, "gap").to_string()
            } else {
                String::new()
            };
            w.write_record([t.to_string(), g.to_string(), emp]).map_err(ModelError::from)?;
        }
        w.flush().map_err(io_err(&path))?;
    }
    let (tmin, gmin) = series.trough().unwrap_or((u32::MAX, f64::NAN));
    let early_negative = (0..=2).all(|t| series.gap(t).is_some_and(|g| g < 0.0));
    rep.check("penalty_negative_t0_2", early_negative as u8 as f64, "gap < 0 at t = 0, 1, 2", early_negative);
    rep.check("penalty_trough_time", tmin as f64, "in {1, 2}", tmin == 1 || tmin == 2);
    rep.check("penalty_trough_value", gmin, "in [-0.60, -0.15]", (-0.60..=-0.15).contains(&gmin));
    let g7 = series.gap(7).unwrap_or(f64::NAN);
    rep.check("penalty_recovery_t7", g7, "> trough", g7 > gmin);

    rep.write(&ctx.out.join("validation_report.csv"))?;
    let failed: Vec<&str> = rep.rows.iter().filter(|r| !r.3).map(|r| r.0.as_str()).collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Validation(failed.join(", ")))
    }
}
