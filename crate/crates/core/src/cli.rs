//! The `vortexnoise` command line. Each subcommand writes CSV tables and a
//! `manifest.json` into the output directory.
//!
//! Exit codes: 0 on success (a blow-up is a result, not a failure), 1 when a
//! check fails or on a runtime or I/O failure, 2 on bad arguments or
//! configuration.

use std::ffi::OsString;
use std::path::PathBuf;
use std::sync::Arc;
use std::time::Instant;

use clap::{Parser, Subcommand};

use crate::config::Config;
use crate::error::{Error, Result};
use crate::experiments::{
    calibrate_nu1, corrector_study, estimate_r0, run_corrector_study, run_decay_check,
    run_energy_identity_check, run_global_existence_frequency, run_scaling_limit,
};
use crate::experiments::energy::run_noise_neutrality;
use crate::experiments::scaling::{compare_noise, unit_shell_theta};
use crate::field::State;
use crate::integrator::{simulate_deterministic, InitialData, PathRunner, Status, Trajectory};
use crate::io::{diagnostics_table, energy_table, write_snapshot, Manifest, SeedSchedule, Table};
use crate::lattice::Lattice;
use crate::noise::ThetaSequence;

/// Relative band around `(3/5)ν` for the corrector Rayleigh quotient at the largest shell.
pub const RAYLEIGH_TOLERANCE: f64 = 0.15;
/// Identities that hold exactly up to rounding.
pub const EXACT_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Parser)]
#[command(name = "vortexnoise", version, about = "Stochastic MHD vorticity experiments")]
pub struct Cli {
    /// TOML configuration; every key is optional.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Overrides `[noise] seed`.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Output directory.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Overrides `[run] paths`.
    #[arg(long, global = true, value_parser = clap::value_parser!(u64).range(1..))]
    pub paths: Option<u64>,
    /// Suppress the summary on stdout.
    #[arg(long, global = true)]
    pub quiet: bool,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Corrector convergence to (3/5)νΔ across shells.
    CorrectorCheck,
    /// One trajectory with diagnostics, energy terms and snapshots.
    Simulate {
        /// Noise path index.
        #[arg(long, default_value_t = 0)]
        path: u64,
        /// Integrate the deterministic limit equation instead.
        #[arg(long)]
        deterministic: bool,
    },
    /// Exceedance probabilities of the distance to the limit equation.
    ScalingLimit {
        /// Also compare unit-shell noise against the last shell.
        #[arg(long)]
        compare: bool,
    },
    /// Exponential decay of the limit equation against its explicit bound.
    DecayCheck,
    /// Survival and small-ball frequency of the uncut system.
    ExistenceFreq,
    /// Energy balance of the scheme, refinement and noise neutrality.
    EnergyCheck,
}

struct Context {
    cfg: Config,
    out: PathBuf,
    quiet: bool,
    manifest: Manifest,
    started: Instant,
}

impl Context {
    fn say(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }

    fn table(&mut self, name: &str, table: &Table) -> Result<()> {
        table.write_csv(&self.out.join(name))?;
        self.manifest.outputs.push(name.into());
        Ok(())
    }

    fn initial(&self) -> Result<State> {
        let lat = Arc::new(Lattice::new(self.cfg.model.galerkin_radius)?);
        self.cfg.model.initial.build(&lat, self.cfg.model.norm)
    }

    fn finish(mut self) -> Result<()> {
        self.manifest.wall_clock_seconds = self.started.elapsed().as_secs_f64();
        self.manifest.write(&self.out.join("manifest.json"))
    }
}

fn theta_support(shells: &[u32], kappa: f64) -> Result<serde_json::Value> {
    let mut map = serde_json::Map::new();
    for &n in shells {
        let th = ThetaSequence::shell(n, kappa)?;
        map.insert(n.to_string(), serde_json::to_value(th.entries()).unwrap_or_default());
    }
    Ok(serde_json::Value::Object(map))
}

fn status_name(s: &Status) -> String {
    match s {
        Status::Completed => "completed".into(),
        Status::BlownUp { t } => format!("blown up at t = {t}"),
    }
}

fn corrector_check(ctx: &mut Context) -> Result<bool> {
    let v = corrector_study::default_test_field()?;
    let r = run_corrector_study(ctx.cfg.noise.nu, ctx.cfg.noise.kappa, &ctx.cfg.noise.shells, &v)?;
    for row in &r.rows {
        ctx.say(format!(
            "N = {:3}  rel_error = {:.4e}  rayleigh(S) = {:.4}  target = {:.4}",
            row.shell,
            row.rel_error,
            row.rayleigh_s,
            0.6 * r.nu
        ));
    }
    let last = r.rows.last().expect("at least one shell");
    let rq_ok = (last.rayleigh_s - 0.6 * r.nu).abs() <= RAYLEIGH_TOLERANCE * 0.6 * r.nu;
    let passed = r.errors_decrease() && rq_ok;
    ctx.say(format!("errors decreasing: {}; last Rayleigh quotient within {:.0}%: {rq_ok}", r.errors_decrease(), RAYLEIGH_TOLERANCE * 100.0));
    ctx.manifest.constant("rayleigh_tolerance", RAYLEIGH_TOLERANCE);
    ctx.manifest.constant("passed", passed);
    ctx.manifest.theta_support = theta_support(&ctx.cfg.noise.shells, ctx.cfg.noise.kappa)?;
    ctx.table("corrector_study.csv", &r.table())?;
    Ok(passed)
}

fn write_trajectory(ctx: &mut Context, traj: &Trajectory) -> Result<()> {
    ctx.table("diagnostics.csv", &diagnostics_table(traj))?;
    ctx.table("energy.csv", &energy_table(traj))?;
    for (i, (_, s)) in traj.snapshots.iter().enumerate() {
        let name = format!("snapshots/snap_{i:05}.vnsf");
        write_snapshot(&ctx.out.join(&name), s)?;
        ctx.manifest.outputs.push(name);
    }
    write_snapshot(&ctx.out.join("final.vnsf"), &traj.final_state)?;
    ctx.manifest.outputs.push("final.vnsf".into());
    ctx.manifest.steps = traj.steps;
    ctx.manifest.constant("status", traj.status);
    Ok(())
}

fn simulate(ctx: &mut Context, path: u64, deterministic: bool) -> Result<bool> {
    let rc = ctx.cfg.run_config();
    let phi0 = ctx.initial()?;
    let traj = if deterministic {
        simulate_deterministic(&rc, &phi0, None, |_, _, _| {})?
    } else {
        let theta = rc.theta()?;
        ctx.manifest.theta_support = theta_support(&[rc.shell], rc.kappa)?;
        PathRunner::new(&rc, &theta, phi0.lattice().clone())?.run(&phi0, path, 1, |_, _, _| {})?
    };
    ctx.manifest.constant("path", path);
    ctx.manifest.constant("enhanced_viscosity", rc.enhanced_viscosity());
    ctx.say(format!(
        "{} steps, {}, final L2 = {:.6e}",
        traj.steps,
        status_name(&traj.status),
        traj.final_state.l2_norm()
    ));
    write_trajectory(ctx, &traj)?;
    Ok(true)
}

fn scaling_limit(ctx: &mut Context, compare: bool) -> Result<bool> {
    let rc = ctx.cfg.run_config();
    let phi0 = ctx.initial()?;
    let shells = ctx.cfg.noise.shells.clone();
    let paths = ctx.cfg.run.paths;
    let r = run_scaling_limit(&rc, &phi0, &shells, paths, ctx.cfg.experiment.epsilon, ctx.cfg.run.confidence)?;
    for row in &r.rows {
        ctx.say(format!(
            "N = {:3}  p_hat = {:.3}  [{:.3}, {:.3}]  median distance = {:.4e}  blowups = {}",
            row.shell, row.p_hat, row.ci_low, row.ci_high, row.median_distance, row.blowups
        ));
    }
    ctx.say(format!(
        "epsilon = {:.4e}; non-increasing within bands: {}",
        r.epsilon,
        r.non_increasing_within_bands()
    ));
    ctx.manifest.constant("epsilon", r.epsilon);
    ctx.manifest.constant("epsilon_auto", r.epsilon_auto);
    ctx.manifest.steps = r.steps * paths * shells.len() as u64;
    ctx.manifest.theta_support = theta_support(&shells, rc.kappa)?;
    ctx.table("scaling.csv", &r.table())?;
    ctx.table("distances.csv", &r.distance_table(&shells))?;
    if compare {
        let wide = ThetaSequence::shell(*shells.last().expect("validated non-empty"), rc.kappa)?;
        let c = compare_noise(&rc, &phi0, &unit_shell_theta()?, &wide, paths)?;
        ctx.say(format!(
            "mean distance: unit shell {:.4e}, N = {} {:.4e}",
            c.narrow_mean,
            shells.last().unwrap(),
            c.wide_mean
        ));
        let mut t = Table::new(&["noise", "support", "mean_distance"]);
        t.push(vec!["unit-shell".into(), c.narrow_support.into(), c.narrow_mean.into()]);
        t.push(vec!["widest-shell".into(), c.wide_support.into(), c.wide_mean.into()]);
        ctx.table("comparison.csv", &t)?;
    }
    let passed = r.non_increasing_within_bands();
    ctx.manifest.constant("passed", passed);
    Ok(passed)
}

fn decay_check(ctx: &mut Context) -> Result<bool> {
    let rc = ctx.cfg.run_config();
    let k = ctx.cfg.model.norm;
    let nu1 = if ctx.cfg.experiment.calibrate {
        let lower = 1.0 / rc.physics.reynolds;
        let cal = calibrate_nu1(&rc, &InitialData::library(), k, lower)?;
        ctx.manifest.constant("calibration", &cal);
        ctx.say(format!("calibrated nu1 = {:.4}, C1 = {:.4} ({} runs)", cal.nu1, cal.c1, cal.runs));
        cal.nu1
    } else {
        rc.enhanced_viscosity()
    };
    let r = run_decay_check(&rc, &ctx.cfg.model.initial, k, nu1)?;
    ctx.manifest.constant("nu1", nu1);
    ctx.manifest.constant("rate", r.rate);
    ctx.manifest.constant("first_violation", r.first_violation);
    ctx.manifest.steps = r.times.len().saturating_sub(1) as u64;
    match r.first_violation {
        None => ctx.say(format!("bound holds on [0, {}] with rate {:.4}", rc.t_end, r.rate)),
        Some(t) => ctx.say(format!("bound first violated at t = {t}")),
    }
    ctx.manifest.constant("passed", r.holds());
    ctx.table("decay.csv", &r.table())?;
    Ok(r.holds())
}

fn existence_freq(ctx: &mut Context) -> Result<bool> {
    let rc = ctx.cfg.run_config();
    let r0 = match ctx.cfg.experiment.r0 {
        Some(r) => r,
        None => {
            let short = crate::integrator::RunConfig { t_end: rc.t_end.min(0.2), ..rc.clone() };
            estimate_r0(&short, &InitialData::library())?
        }
    };
    let phi0 = ctx.initial()?;
    let r = run_global_existence_frequency(&rc, &phi0, ctx.cfg.run.paths, r0, ctx.cfg.run.confidence)?;
    ctx.manifest.constant("r0", r0);
    ctx.manifest.steps = rc.steps() * r.paths;
    ctx.manifest.theta_support = theta_support(&[rc.shell], rc.kappa)?;
    ctx.say(format!(
        "survived {}/{} (fraction {:.3}, [{:.3}, {:.3}]), entered ball r0 = {:.4e}: {}",
        r.survived, r.paths, r.fraction_global, r.ci_low, r.ci_high, r0, r.entered_ball
    ));
    ctx.table("existence.csv", &r.table())?;
    ctx.table("existence_paths.csv", &r.path_table())?;
    Ok(true)
}

fn energy_check(ctx: &mut Context) -> Result<bool> {
    let rc = ctx.cfg.run_config();
    let phi0 = ctx.initial()?;
    let e = run_energy_identity_check(&rc, &phi0, 0)?;
    ctx.say(format!(
        "cumulative |residual|: {:.4e} (dt = {}), {:.4e} (dt = {}); ratio {:.3}",
        e.cumulative_residual[0], e.dt[0], e.cumulative_residual[1], e.dt[1], e.refinement_ratio
    ));
    ctx.say(format!(
        "linear residual {:.3e}; transport cancellation {:.3e}",
        e.linear_residual, e.transport_cancellation
    ));
    let paths = ctx.cfg.experiment.energy_paths;
    let n = run_noise_neutrality(&rc, &phi0, paths, ctx.cfg.run.confidence)?;
    ctx.say(format!(
        "net noise contribution {:.4e} ± {:.4e} over {} paths",
        n.net_mean, n.net_half_width, n.paths
    ));
    ctx.manifest.steps = e.steps[0] + e.steps[1] + rc.steps() * (paths + 1);
    ctx.manifest.seed_schedule.paths = paths;
    ctx.manifest.theta_support = theta_support(&[rc.shell], rc.kappa)?;
    ctx.table("energy_check.csv", &e.table())?;
    ctx.table("neutrality.csv", &n.table())?;
    let passed = e.linear_residual <= EXACT_TOLERANCE
        && e.transport_cancellation <= EXACT_TOLERANCE
        && n.is_dissipative();
    ctx.manifest.constant("passed", passed);
    Ok(passed)
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::CorrectorCheck => "corrector-check",
        Command::Simulate { .. } => "simulate",
        Command::ScalingLimit { .. } => "scaling-limit",
        Command::DecayCheck => "decay-check",
        Command::ExistenceFreq => "existence-freq",
        Command::EnergyCheck => "energy-check",
    }
}

fn load_config(cli: &Cli) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if let Some(s) = cli.seed {
        cfg.noise.seed = s;
    }
    if let Some(p) = cli.paths {
        cfg.run.paths = p;
    }
    cfg.validate()?;
    Ok(cfg)
}

/// Runs the command; `Ok(false)` means it completed but its check failed.
pub fn execute(cli: Cli) -> Result<bool> {
    let cfg = load_config(&cli)?;
    let name = command_name(&cli.command);
    let manifest = Manifest::new(
        name,
        serde_json::to_value(&cfg).unwrap_or_default(),
        SeedSchedule::new(cfg.noise.seed, cfg.run.paths),
    );
    let mut ctx = Context {
        cfg,
        out: cli.out.clone(),
        quiet: cli.quiet,
        manifest,
        started: Instant::now(),
    };
    let passed = match cli.command {
        Command::CorrectorCheck => corrector_check(&mut ctx)?,
        Command::Simulate { path, deterministic } => simulate(&mut ctx, path, deterministic)?,
        Command::ScalingLimit { compare } => scaling_limit(&mut ctx, compare)?,
        Command::DecayCheck => decay_check(&mut ctx)?,
        Command::ExistenceFreq => existence_freq(&mut ctx)?,
        Command::EnergyCheck => energy_check(&mut ctx)?,
    };
    ctx.finish()?;
    Ok(passed)
}

pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } | Error::InvalidArgument(_) => 2,
        _ => 1,
    }
}

/// Parses `args` (including the program name), runs, and returns the exit code.
pub fn main_with<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let _ = e.print();
            return code;
        }
    };
    match execute(cli) {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("vortexnoise: {e}");
            exit_code(&e)
        }
    }
}
