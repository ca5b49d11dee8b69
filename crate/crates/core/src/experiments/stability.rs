//! Stability-modulus diagnostic: measure one perturbation pair and compare
//! the potential distance against the logarithmic modulus `(−ln t)^{−θ}` of
//! the amplitude distance `t`.

use std::fmt::Write as _;
use std::path::Path;

use crate::amplitude_space::{stefanov_norm, NormWeights};
use crate::error::{Result, ScatError};
use crate::experiments::config::Resolved;
use crate::experiments::forward::build_potential;
use crate::experiments::report::{fnum, write_atomic};
use crate::experiments::sweep::shell_harmonic;
use crate::pipeline::AmplitudeJob;
use crate::potential_model::linf_distance;

/// The modulus of continuity `φ(t) = (−ln t)^{−θ}`, defined for
/// `t ∈ (0, e^{−1})` where it is increasing and tends to 0 with `t`.
#[derive(Debug, Clone, Copy)]
pub struct StabilityModulus {
    pub delta_exponent: f64,
}

impl StabilityModulus {
    pub fn new(delta_exponent: f64) -> Result<Self> {
        if !(delta_exponent > 0.0 && delta_exponent < 1.0) {
            return Err(ScatError::InvalidConfig(format!(
                "modulus exponent must lie in (0, 1), got {delta_exponent}"
            )));
        }
        Ok(StabilityModulus { delta_exponent })
    }

    pub fn eval(&self, t: f64) -> Result<f64> {
        if !(t > 0.0 && t < (-1.0_f64).exp()) {
            return Err(ScatError::InvalidConfig(format!(
                "modulus undefined outside (0, e^-1), got {t}"
            )));
        }
        Ok((-t.ln()).powf(-self.delta_exponent))
    }
}

pub struct StabilityReport {
    pub degree: usize,
    /// Amplitude distance in the theorem's norm (σ₁ = 3/2, σ₂ = −1/2).
    pub t: f64,
    pub phi: f64,
    pub linf_distance: f64,
    /// `‖v₊ − v₋‖∞ / φ(t)`: how much potential separation one unit of
    /// modulus buys. Large values mean logarithmic stability is the best
    /// one can hope for.
    pub ratio: f64,
    pub delta_exponent: f64,
}

/// Weights fixed by the stability estimate this diagnostic probes.
pub fn theorem_weights() -> NormWeights {
    NormWeights::new(1.5, -0.5)
}

pub fn run(r: &Resolved) -> Result<StabilityReport> {
    let modulus = StabilityModulus::new(r.raw.delta_exponent)?;
    let degree = *r.raw.sweep_degrees.first().ok_or_else(|| {
        ScatError::InvalidConfig("sweep_degrees must be nonempty".into())
    })?;
    let base = build_potential(r)?;
    let w = shell_harmonic(r.grid, degree, r.raw.w_amplitude)?;
    let v_plus = base.sum(&w)?;
    let v_minus = base.sum(&w.scaled(-1.0))?;
    let job = AmplitudeJob::new(&v_plus, &r.interval, r.raw.h, r.l_max, &r.solver)?;
    let diff = job.compute(&v_plus)?.sub(&job.compute(&v_minus)?)?;
    let weights = theorem_weights();
    let t = r
        .interval
        .samples()
        .iter()
        .map(|&s| stefanov_norm(&diff, s, weights))
        .collect::<Result<Vec<_>>>()?
        .into_iter()
        .fold(0.0_f64, f64::max);
    if t == 0.0 {
        return Err(ScatError::ExperimentFailed(
            "amplitude distance is exactly zero; the modulus comparison is vacuous".into(),
        ));
    }
    let phi = modulus.eval(t)?;
    let linf = linf_distance(&v_plus, &v_minus)?;
    Ok(StabilityReport {
        degree,
        t,
        phi,
        linf_distance: linf,
        ratio: linf / phi,
        delta_exponent: r.raw.delta_exponent,
    })
}

pub fn write_reports(r: &Resolved, rep: &StabilityReport, dir: &Path) -> Result<()> {
    write_atomic(&dir.join("manifest.txt"), &r.manifest("stability-diag"))?;
    let mut s = String::new();
    let _ = writeln!(s, "degree = {}", rep.degree);
    let _ = writeln!(s, "delta_exponent = {}", fnum(rep.delta_exponent));
    let _ = writeln!(s, "amplitude_distance = {}", fnum(rep.t));
    let _ = writeln!(s, "modulus = {}", fnum(rep.phi));
    let _ = writeln!(s, "linf_distance = {}", fnum(rep.linf_distance));
    let _ = writeln!(s, "ratio = {}", fnum(rep.ratio));
    write_atomic(&dir.join("report.txt"), &s)?;
    Ok(())
}
