//! End-to-end forward run: solve, expand, measure norms, fit the decay
//! envelope, and cross-check the far-field representation.

use std::fmt::Write as _;
use std::path::Path;

use crate::amplitude_space::{
    decay_bound_check, stefanov_norm, AmplitudeMatrix, DecayFit,
};
use crate::error::{Result, ScatError};
use crate::experiments::config::Resolved;
use crate::experiments::report::{cnum, fnum, write_atomic, Table};
use crate::forward_solver::{far_field_check, IncidentWave};
use crate::pipeline::AmplitudeJob;
use crate::potential_model::{make_bump, Potential};
use crate::sphere_basis::HarmonicIndex;
use crate::vec3::Vec3;

pub struct ForwardReport {
    pub matrix: AmplitudeMatrix,
    /// Stefanov norm at the configured weights, one value per sample.
    pub stefanov: Vec<f64>,
    pub decay: DecayFit,
    /// Support radius the envelope was fitted against.
    pub rho: f64,
    /// Worst far-field representation mismatch at the largest radius.
    pub far_field_error: f64,
    pub far_field_radius: f64,
}

pub fn build_potential(r: &Resolved) -> Result<Potential> {
    let spec = &r.raw.potential;
    match spec.kind.as_str() {
        "zero" => Ok(Potential::zero(r.grid)),
        "bump" => make_bump(
            r.grid,
            Vec3::new(spec.center[0], spec.center[1], spec.center[2]),
            spec.scale,
            spec.amplitude,
            r.budget.m,
        ),
        other => Err(ScatError::InvalidConfig(format!(
            "unknown potential kind {other:?}; expected \"zero\" or \"bump\""
        ))),
    }
}

pub fn run(r: &Resolved) -> Result<ForwardReport> {
    let v = build_potential(r)?;
    let matrix = if v.support_indices().is_empty() {
        AmplitudeMatrix::zero(r.l_max, r.interval.clone())
    } else {
        AmplitudeJob::new(&v, &r.interval, r.raw.h, r.l_max, &r.solver)?.compute(&v)?
    };

    let stefanov = r
        .interval
        .samples()
        .iter()
        .map(|&s| stefanov_norm(&matrix, s, r.weights))
        .collect::<Result<Vec<_>>>()?;

    // Envelope against the potential-class ball B(0, 1/2), fitted at the
    // sample nearest the middle of the interval.
    let rho = 0.5;
    let samples = r.interval.samples();
    let mid = samples[samples.len() / 2];
    let decay = decay_bound_check(&matrix, mid, rho, f64::INFINITY)?;

    let far_field_radius = 8.0;
    let far_field_error = if v.support_indices().is_empty() {
        0.0
    } else {
        let wave = IncidentWave::real(Vec3::new(0.0, 0.0, 1.0), mid)?;
        far_field_check(&v, wave, &[4.0, far_field_radius], &r.solver)?
    };

    Ok(ForwardReport { matrix, stefanov, decay, rho, far_field_error, far_field_radius })
}

pub fn write_reports(r: &Resolved, rep: &ForwardReport, dir: &Path) -> Result<()> {
    write_atomic(&dir.join("manifest.txt"), &r.manifest("forward"))?;

    let mut amp = Table::new(["sample", "s", "j1", "p1", "j2", "p2", "re", "im"]);
    let indices: Vec<HarmonicIndex> = HarmonicIndex::all_upto(rep.matrix.l_max()).collect();
    for (si, &s) in rep.matrix.interval().samples().iter().enumerate() {
        for i1 in &indices {
            for i2 in &indices {
                let (re, im) = cnum(rep.matrix.entry(si, *i1, *i2));
                amp.push(vec![
                    si.to_string(),
                    fnum(s),
                    i1.j.to_string(),
                    i1.p.to_string(),
                    i2.j.to_string(),
                    i2.p.to_string(),
                    re,
                    im,
                ]);
            }
        }
    }
    write_atomic(&dir.join("amplitude.csv"), &amp.render())?;

    let mut norms = Table::new(["sample", "s", "stefanov"]);
    for (si, (&s, &n)) in
        rep.matrix.interval().samples().iter().zip(&rep.stefanov).enumerate()
    {
        norms.push(vec![si.to_string(), fnum(s), fnum(n)]);
    }
    write_atomic(&dir.join("norms.csv"), &norms.render())?;

    let mut decay = Table::new(["degree", "max_abs", "envelope"]);
    for (l, (&m, &b)) in rep.decay.degree_max_abs.iter().zip(&rep.decay.degree_bound).enumerate()
    {
        decay.push(vec![l.to_string(), fnum(m), fnum(b)]);
    }
    write_atomic(&dir.join("decay.csv"), &decay.render())?;

    let mut summary = String::new();
    let _ = writeln!(summary, "decay_c = {}", fnum(rep.decay.c));
    let _ = writeln!(summary, "decay_rho = {}", fnum(rep.rho));
    let _ = writeln!(summary, "decay_pass = {}", rep.decay.pass);
    let _ = writeln!(summary, "far_field_radius = {}", fnum(rep.far_field_radius));
    let _ = writeln!(summary, "far_field_error = {}", fnum(rep.far_field_error));
    write_atomic(&dir.join("summary.txt"), &summary)?;
    Ok(())
}
