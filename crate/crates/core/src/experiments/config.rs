//! Experiment configuration: one serializable struct covering every
//! subcommand, resolved against per-command defaults into validated domain
//! objects.

use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::amplitude_space::{c3_constant, EnergyInterval, NormWeights};
use crate::error::{Result, ScatError};
use crate::forward_solver::{c1_constant, SolverConfig};
use crate::metric_nets::{epsilon_for_bump_count, SmoothnessBudget};
use crate::potential_model::VoxelGrid;

/// Which experiment a config is being resolved for; sets scale defaults.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Command {
    Forward,
    Pigeonhole,
    Sweep,
    StabilityDiag,
    NetCount,
}

impl Command {
    fn default_grid_n(self) -> usize {
        match self {
            Command::Forward => 24,
            Command::Pigeonhole => 16,
            Command::Sweep | Command::StabilityDiag => 32,
            Command::NetCount => 16,
        }
    }

    fn default_l_max(self) -> usize {
        match self {
            Command::Forward => 8,
            Command::Pigeonhole | Command::NetCount => 6,
            // The sweep reads super-exponentially weighted norms; every
            // extra degree multiplies the rounding-noise floor by
            // ((2l+1)/es)^2, so the truncation stays just deep enough to
            // see the configured perturbation degrees through the
            // triple-harmonic selection rules.
            Command::Sweep | Command::StabilityDiag => 4,
        }
    }

    /// Norm weight exponents. The sweep's shape criterion (successive
    /// distance ratios themselves decreasing) needs σ > 1: the Stefanov
    /// weight cancels the factorial part of the degree envelope, and the
    /// surviving polynomial factor (2j+1)^{2σ-2} accelerates the decay
    /// only above that threshold.
    fn default_sigma(self) -> (f64, f64) {
        match self {
            Command::Sweep => (2.0, 2.0),
            _ => (0.0, 0.0),
        }
    }
}

/// Raw experiment parameters as read from the config file or flags. Unset
/// options fall back to per-command defaults at resolution time.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub grid_n: Option<usize>,
    pub h: f64,
    pub s1: f64,
    pub s2: f64,
    pub s_samples: usize,
    pub sigma1: Option<f64>,
    pub sigma2: Option<f64>,
    pub l_max: Option<usize>,
    /// Smoothness order of the packing budget.
    pub m: usize,
    pub beta: f64,
    /// Sup-norm level; derived from `bumps_per_axis` when unset.
    pub epsilon: Option<f64>,
    pub bumps_per_axis: usize,
    /// Net resolution; derived from the coupling rule when unset.
    pub delta: Option<f64>,
    /// Factor `c` in the coupling rule `2c₃δ = exp(−c·ε^{−1/α})`.
    pub coupling_c: f64,
    /// Exponent in the coupling rule; mode-dependent default when unset.
    pub alpha: Option<f64>,
    /// Cap on how many packing members an enumeration touches (seeded
    /// subset when below the full member count).
    pub member_cap: Option<usize>,
    /// Test potential for the forward command.
    pub potential: PotentialSpec,
    /// Center potential the packing is laid around.
    pub v0_amplitude: f64,
    /// Angular degrees of the instability sweep.
    pub sweep_degrees: Vec<usize>,
    /// Fixed sup norm of the sweep perturbations.
    pub w_amplitude: f64,
    /// Exponent of the stability modulus (−ln t)^{−δ}.
    pub delta_exponent: f64,
    pub seed: u64,
    pub out: Option<PathBuf>,
    pub solver: SolverConfig,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PotentialSpec {
    /// "zero" or "bump".
    pub kind: String,
    pub center: [f64; 3],
    pub scale: f64,
    pub amplitude: f64,
}

impl Default for PotentialSpec {
    fn default() -> Self {
        PotentialSpec { kind: "bump".into(), center: [0.0; 3], scale: 0.45, amplitude: 0.5 }
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            grid_n: None,
            h: 0.2,
            s1: 0.9,
            s2: 1.1,
            s_samples: 3,
            sigma1: None,
            sigma2: None,
            l_max: None,
            m: 2,
            beta: 1.0,
            epsilon: None,
            bumps_per_axis: 2,
            delta: None,
            coupling_c: 1.0,
            alpha: None,
            member_cap: None,
            potential: PotentialSpec::default(),
            v0_amplitude: 0.0,
            sweep_degrees: vec![2, 4, 6, 8],
            w_amplitude: 0.05,
            delta_exponent: 0.75,
            seed: 0,
            out: None,
            solver: SolverConfig::default(),
        }
    }
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        Ok(toml::from_str(text)?)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }
}

/// Config with every default filled in and the derived constants fixed.
#[derive(Debug, Clone)]
pub struct Resolved {
    pub raw: ExperimentConfig,
    pub grid: VoxelGrid,
    pub interval: EnergyInterval,
    pub weights: NormWeights,
    pub budget: SmoothnessBudget,
    pub l_max: usize,
    pub c1: f64,
    pub c3: f64,
    pub alpha: f64,
    pub delta: f64,
    pub coupling_active: bool,
    /// Contraction headroom: potentials up to `2·cap_n` in sup norm stay
    /// solvable on this grid and strip.
    pub cap_n: f64,
    pub solver: SolverConfig,
}

pub fn resolve(cfg: &ExperimentConfig, command: Command) -> Result<Resolved> {
    let grid_n = cfg.grid_n.unwrap_or_else(|| command.default_grid_n());
    let l_max = cfg.l_max.unwrap_or_else(|| command.default_l_max());
    let grid = VoxelGrid::new(grid_n)?;
    if !(cfg.h >= 0.0) {
        return Err(ScatError::InvalidConfig(format!("strip h must be >= 0, got {}", cfg.h)));
    }
    let fixed_energy = cfg.s1 == cfg.s2;
    let interval = if fixed_energy {
        EnergyInterval::single(cfg.s1)?
    } else {
        EnergyInterval::lobatto(cfg.s1, cfg.s2, cfg.s_samples)?
    };
    let (default_s1, default_s2) = command.default_sigma();
    let weights = NormWeights::new(
        cfg.sigma1.unwrap_or(default_s1),
        cfg.sigma2.unwrap_or(default_s2),
    );

    let epsilon = match cfg.epsilon {
        Some(e) => e,
        None => epsilon_for_bump_count(cfg.bumps_per_axis, cfg.m, cfg.beta)?,
    };
    let budget = SmoothnessBudget::new(cfg.m, epsilon, cfg.beta)?;

    let c1 = c1_constant(cfg.h, grid);
    let cap_n = cfg.solver.max_q / (2.0 * c1);
    if epsilon >= cap_n {
        return Err(ScatError::InvalidConfig(format!(
            "epsilon {epsilon} exceeds the contraction headroom {cap_n} on this grid and strip"
        )));
    }

    let c3 = c3_constant(&interval);
    let alpha = cfg.alpha.unwrap_or_else(|| {
        if fixed_energy {
            5.0 * cfg.m as f64 / 3.0 + 1.0
        } else {
            2.0 * cfg.m as f64 + 1.0
        }
    });
    if !(alpha > 0.0) {
        return Err(ScatError::InvalidConfig(format!("alpha must be positive, got {alpha}")));
    }
    let (delta, coupling_active) = match cfg.delta {
        Some(d) => (d, false),
        None => {
            let d = (-cfg.coupling_c * epsilon.powf(-1.0 / alpha)).exp() / (2.0 * c3);
            (d, true)
        }
    };
    if !(delta > 0.0) {
        return Err(ScatError::InvalidConfig(format!("delta must be positive, got {delta}")));
    }

    Ok(Resolved {
        raw: cfg.clone(),
        grid,
        interval,
        weights,
        budget,
        l_max,
        c1,
        c3,
        alpha,
        delta,
        coupling_active,
        cap_n,
        solver: cfg.solver,
    })
}

impl Resolved {
    /// The coupling-rule right-hand side `exp(−c·ε^{−1/α})`, which equals
    /// `2c₃δ` exactly when the rule set δ.
    pub fn coupling_rhs(&self) -> f64 {
        (-self.raw.coupling_c * self.budget.epsilon.powf(-1.0 / self.alpha)).exp()
    }

    /// Structured text manifest of every resolved parameter; stable across
    /// runs of the same config.
    pub fn manifest(&self, command: &str) -> String {
        use std::fmt::Write as _;
        let mut out = String::new();
        let _ = writeln!(out, "command = {command}");
        let _ = writeln!(out, "grid_n = {}", self.grid.n());
        let _ = writeln!(out, "h = {}", self.raw.h);
        let _ = writeln!(out, "s1 = {}", self.interval.s1());
        let _ = writeln!(out, "s2 = {}", self.interval.s2());
        let _ = writeln!(out, "s_samples = {}", self.interval.samples().len());
        let _ = writeln!(out, "sigma1 = {}", self.weights.sigma1);
        let _ = writeln!(out, "sigma2 = {}", self.weights.sigma2);
        let _ = writeln!(out, "l_max = {}", self.l_max);
        let _ = writeln!(out, "m = {}", self.budget.m);
        let _ = writeln!(out, "beta = {}", self.budget.beta);
        let _ = writeln!(out, "epsilon = {}", self.budget.epsilon);
        let _ = writeln!(out, "delta = {}", self.delta);
        let _ = writeln!(out, "coupling_active = {}", self.coupling_active);
        let _ = writeln!(out, "coupling_c = {}", self.raw.coupling_c);
        let _ = writeln!(out, "alpha = {}", self.alpha);
        let _ = writeln!(out, "c1 = {}", self.c1);
        let _ = writeln!(out, "c3 = {}", self.c3);
        let _ = writeln!(out, "contraction_headroom = {}", self.cap_n);
        let _ = writeln!(out, "seed = {}", self.raw.seed);
        out
    }
}
