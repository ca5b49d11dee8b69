//! Command-line front end: resolve a config, run one experiment, write its
//! reports, and print a short summary.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use scatlab::error::{Result, ScatError};
use scatlab::experiments::config::{
    resolve, Command as ExpCommand, ExperimentConfig, Resolved,
};
use scatlab::experiments::report::fnum;
use scatlab::experiments::{forward, net_count, pigeonhole, stability, sweep};

#[derive(Parser)]
#[command(
    name = "scatlab",
    about = "Forward-scattering simulator and metric-space laboratory",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,

    /// TOML config file; flags below override its fields.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Output directory for reports (default ./scatlab-out).
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Voxels per axis.
    #[arg(long, global = true)]
    grid_n: Option<usize>,

    /// Half-width of the complex-energy strip.
    #[arg(long, global = true)]
    h: Option<f64>,

    /// Lower end of the energy interval.
    #[arg(long, global = true)]
    s1: Option<f64>,

    /// Upper end of the energy interval (equal to s1 = fixed energy).
    #[arg(long, global = true)]
    s2: Option<f64>,

    /// Interval sample count.
    #[arg(long, global = true)]
    s_samples: Option<usize>,

    /// First norm weight exponent.
    #[arg(long, global = true)]
    sigma1: Option<f64>,

    /// Second norm weight exponent.
    #[arg(long, global = true)]
    sigma2: Option<f64>,

    /// Harmonic truncation degree.
    #[arg(long, global = true)]
    l_max: Option<usize>,

    /// Smoothness order of the potential class.
    #[arg(long, global = true)]
    m: Option<usize>,

    /// Smoothness budget bound.
    #[arg(long, global = true)]
    beta: Option<f64>,

    /// Packing separation; derived from the bump count when omitted.
    #[arg(long, global = true)]
    epsilon: Option<f64>,

    /// Coupling exponent; mode default when omitted.
    #[arg(long, global = true)]
    alpha: Option<f64>,

    /// Net resolution; coupling rule when omitted.
    #[arg(long, global = true)]
    delta: Option<f64>,

    /// Seed for member subsampling.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Cap on enumerated packing members.
    #[arg(long, global = true)]
    member_cap: Option<usize>,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Solve one potential and report its amplitude matrix and norms.
    Forward,
    /// Packing vs net collision demonstration.
    Pigeonhole,
    /// Instability sweep over perturbation degrees.
    Sweep,
    /// Stability-modulus diagnostic on one perturbation pair.
    StabilityDiag,
    /// Packing and net counting laws, no solves.
    NetCount,
}

impl CliCommand {
    fn experiment(&self) -> ExpCommand {
        match self {
            CliCommand::Forward => ExpCommand::Forward,
            CliCommand::Pigeonhole => ExpCommand::Pigeonhole,
            CliCommand::Sweep => ExpCommand::Sweep,
            CliCommand::StabilityDiag => ExpCommand::StabilityDiag,
            CliCommand::NetCount => ExpCommand::NetCount,
        }
    }
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut cfg = match &cli.config {
        Some(path) => ExperimentConfig::from_toml(&std::fs::read_to_string(path)?)?,
        None => ExperimentConfig::default(),
    };
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    if cli.grid_n.is_some() {
        cfg.grid_n = cli.grid_n;
    }
    if let Some(h) = cli.h {
        cfg.h = h;
    }
    if let Some(s1) = cli.s1 {
        cfg.s1 = s1;
    }
    if let Some(s2) = cli.s2 {
        cfg.s2 = s2;
    }
    if let Some(k) = cli.s_samples {
        cfg.s_samples = k;
    }
    if cli.sigma1.is_some() {
        cfg.sigma1 = cli.sigma1;
    }
    if cli.sigma2.is_some() {
        cfg.sigma2 = cli.sigma2;
    }
    if cli.l_max.is_some() {
        cfg.l_max = cli.l_max;
    }
    if let Some(m) = cli.m {
        cfg.m = m;
    }
    if let Some(b) = cli.beta {
        cfg.beta = b;
    }
    if cli.epsilon.is_some() {
        cfg.epsilon = cli.epsilon;
    }
    if cli.alpha.is_some() {
        cfg.alpha = cli.alpha;
    }
    if cli.delta.is_some() {
        cfg.delta = cli.delta;
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if cli.member_cap.is_some() {
        cfg.member_cap = cli.member_cap;
    }
    Ok(cfg)
}

/// Runs the experiment; returns false when it completed but its quality
/// gates did not hold.
fn dispatch(cli: &Cli, r: &Resolved, dir: &std::path::Path) -> Result<bool> {
    match cli.command {
        CliCommand::Forward => {
            let rep = forward::run(r)?;
            forward::write_reports(r, &rep, dir)?;
            println!("forward: {} samples, l_max {}", r.interval.samples().len(), r.l_max);
            println!(
                "  decay envelope C = {} (pass {}), far-field error {}",
                fnum(rep.decay.c),
                rep.decay.pass,
                fnum(rep.far_field_error)
            );
            Ok(true)
        }
        CliCommand::Pigeonhole => {
            let rep = pigeonhole::run(r)?;
            pigeonhole::write_reports(r, &rep, dir)?;
            println!(
                "pigeonhole: {} members into a net of ln-cardinality {}",
                rep.members_enumerated,
                fnum(rep.net_ln_cardinality)
            );
            println!(
                "  pair ({}, {}) collision={} |v_i - v_j| = {} amplitude distance = {}",
                rep.pair.0,
                rep.pair.1,
                rep.collision,
                fnum(rep.linf_distance),
                fnum(rep.interval_norm_distance)
            );
            println!("  pass = {}", rep.pass);
            Ok(rep.pass)
        }
        CliCommand::Sweep => {
            let rep = sweep::run(r)?;
            sweep::write_reports(r, &rep, dir)?;
            for row in &rep.rows {
                println!(
                    "degree {:2}  amplitude distance {}{}",
                    row.degree,
                    fnum(row.stefanov_sup),
                    if row.floor_limited { "  (noise floor)" } else { "" }
                );
            }
            println!(
                "decreasing = {}, super-geometric = {}, pass = {}",
                rep.decreasing, rep.super_geometric, rep.pass
            );
            Ok(rep.pass)
        }
        CliCommand::StabilityDiag => {
            let rep = stability::run(r)?;
            stability::write_reports(r, &rep, dir)?;
            println!(
                "stability: t = {} phi(t) = {} ratio = {}",
                fnum(rep.t),
                fnum(rep.phi),
                fnum(rep.ratio)
            );
            Ok(true)
        }
        CliCommand::NetCount => {
            let rep = net_count::run(r)?;
            net_count::write_reports(r, &rep, dir)?;
            println!(
                "packing slope {} (target {}, error {})",
                fnum(rep.packing_slope),
                fnum(rep.packing_slope_target),
                fnum(rep.packing_slope_error)
            );
            println!(
                "net fits: interval r^2 {} fixed r^2 {} pass = {}",
                fnum(rep.interval_fit.r_squared),
                fnum(rep.fixed_fit.r_squared),
                rep.pass
            );
            Ok(rep.pass)
        }
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let cfg = load_config(cli)?;
    let r = resolve(&cfg, cli.command.experiment())?;
    let dir = r.raw.out.clone().unwrap_or_else(|| PathBuf::from("scatlab-out"));
    std::fs::create_dir_all(&dir)?;
    dispatch(cli, &r, &dir)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Ok(workers) = std::env::var("SCATLAB_WORKERS") {
        match workers.parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
            }
            _ => {
                eprintln!("error: SCATLAB_WORKERS must be a positive integer");
                return ExitCode::from(2);
            }
        }
    }
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("error: experiment completed but its quality gates failed");
            ExitCode::from(ScatError::ExperimentFailed(String::new()).exit_code() as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
