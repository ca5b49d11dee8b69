//! Instability sweep: perturb a base potential by spherical-harmonic shells
//! of increasing angular degree at a fixed sup-norm amplitude, and record how
//! fast the amplitude-space distance between the `+w` and `-w` branches
//! collapses.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use crate::amplitude_space::stefanov_norm;
use crate::error::{Result, ScatError};
use crate::experiments::config::Resolved;
use crate::experiments::forward::build_potential;
use crate::experiments::report::{fnum, write_atomic, Table};
use crate::pipeline::AmplitudeJob;
use crate::potential_model::{
    cm_norm_estimate, linf_distance, mollifier, Potential,
};
use crate::sphere_basis::{eval_harmonic, HarmonicIndex};

/// Below this the measured distance is numerical noise, not signal.
pub const SWEEP_NOISE_FLOOR: f64 = 1e-14;

const SHELL_CENTER: f64 = 0.25;
const SHELL_WIDTH: f64 = 0.25;

pub struct SweepRow {
    pub degree: usize,
    /// Sup norm of the perturbation (identical for every row).
    pub epsilon: f64,
    /// Largest interval-sample Stefanov distance between the two branches.
    pub stefanov_sup: f64,
    pub linf_distance: f64,
    pub cm_estimate: f64,
    /// True when the measured distance fell below the noise floor.
    pub floor_limited: bool,
    pub seconds: f64,
}

pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    /// Distances strictly decrease with degree (above the noise floor).
    pub decreasing: bool,
    /// Consecutive ratios themselves shrink: decay faster than geometric.
    pub super_geometric: bool,
    pub pass: bool,
}

/// A degree-`n` perturbation: radial shell profile times the order-1 real
/// harmonic of degree `n`, rescaled so the sampled sup norm is exactly
/// `amplitude`.
pub fn shell_harmonic(
    grid: crate::potential_model::VoxelGrid,
    degree: usize,
    amplitude: f64,
) -> Result<Potential> {
    if degree == 0 {
        return Err(ScatError::InvalidConfig(
            "sweep degrees must be >= 1 so the harmonic factor oscillates".into(),
        ));
    }
    let idx = HarmonicIndex::new(degree, 1)?;
    let raw = Potential::from_fn(grid, SHELL_CENTER + SHELL_WIDTH, |x| {
        let r = x.norm();
        if r <= 1e-12 {
            return 0.0;
        }
        let t = (r - SHELL_CENTER) / SHELL_WIDTH;
        let g = mollifier(t * t);
        if g == 0.0 {
            return 0.0;
        }
        g * eval_harmonic(idx, x.normalized()).expect("unit direction")
    });
    let peak = raw.linf_norm();
    if peak == 0.0 {
        return Err(ScatError::InvalidConfig(format!(
            "degree-{degree} shell vanishes on a {}-cell grid; refine the grid",
            grid.n()
        )));
    }
    Ok(raw.scaled(amplitude / peak))
}

pub fn run(r: &Resolved) -> Result<SweepReport> {
    if r.raw.sweep_degrees.is_empty() {
        return Err(ScatError::InvalidConfig("sweep_degrees must be nonempty".into()));
    }
    if !(r.raw.w_amplitude > 0.0) {
        return Err(ScatError::InvalidConfig(format!(
            "w_amplitude must be positive, got {}",
            r.raw.w_amplitude
        )));
    }
    let base = build_potential(r)?;
    let mut rows = Vec::with_capacity(r.raw.sweep_degrees.len());
    for &degree in &r.raw.sweep_degrees {
        let start = Instant::now();
        let w = shell_harmonic(r.grid, degree, r.raw.w_amplitude)?;
        let v_plus = base.sum(&w)?;
        let v_minus = base.sum(&w.scaled(-1.0))?;
        let job = AmplitudeJob::new(&v_plus, &r.interval, r.raw.h, r.l_max, &r.solver)?;
        let f_plus = job.compute(&v_plus)?;
        let f_minus = job.compute(&v_minus)?;
        let diff = f_plus.sub(&f_minus)?;
        let stefanov_sup = r
            .interval
            .samples()
            .iter()
            .map(|&s| stefanov_norm(&diff, s, r.weights))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0_f64, f64::max);
        rows.push(SweepRow {
            degree,
            epsilon: r.raw.w_amplitude,
            stefanov_sup,
            linf_distance: linf_distance(&v_plus, &v_minus)?,
            cm_estimate: cm_norm_estimate(&w, r.budget.m)?,
            floor_limited: stefanov_sup < SWEEP_NOISE_FLOOR,
            seconds: start.elapsed().as_secs_f64(),
        });
    }

    let live: Vec<&SweepRow> = rows.iter().filter(|row| !row.floor_limited).collect();
    let decreasing = live.windows(2).all(|w| w[1].stefanov_sup < w[0].stefanov_sup);
    let ratios: Vec<f64> = live
        .windows(2)
        .map(|w| w[1].stefanov_sup / w[0].stefanov_sup)
        .collect();
    let super_geometric = !ratios.is_empty() && ratios.windows(2).all(|w| w[1] < w[0]);
    // A single live ratio cannot witness acceleration; the floor itself can.
    let super_geometric = super_geometric || (ratios.len() <= 1 && rows.last().is_some_and(|row| row.floor_limited));
    let pass = decreasing && super_geometric;
    Ok(SweepReport { rows, decreasing, super_geometric, pass })
}

pub fn write_reports(r: &Resolved, rep: &SweepReport, dir: &Path) -> Result<()> {
    write_atomic(&dir.join("manifest.txt"), &r.manifest("sweep"))?;
    let mut table = Table::new([
        "degree",
        "epsilon",
        "stefanov_sup",
        "linf_distance",
        "cm_estimate",
        "floor_limited",
        "seconds",
    ]);
    for row in &rep.rows {
        table.push(vec![
            row.degree.to_string(),
            fnum(row.epsilon),
            fnum(row.stefanov_sup),
            fnum(row.linf_distance),
            fnum(row.cm_estimate),
            row.floor_limited.to_string(),
            fnum(row.seconds),
        ]);
    }
    write_atomic(&dir.join("sweep.csv"), &table.render())?;

    let mut s = String::new();
    let _ = writeln!(s, "rows = {}", rep.rows.len());
    let _ = writeln!(s, "decreasing = {}", rep.decreasing);
    let _ = writeln!(s, "super_geometric = {}", rep.super_geometric);
    let _ = writeln!(s, "pass = {}", rep.pass);
    write_atomic(&dir.join("summary.txt"), &s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::{resolve, Command, ExperimentConfig};
    use crate::potential_model::VoxelGrid;

    #[test]
    fn shell_is_normalized_and_supported_in_half_ball() {
        let grid = VoxelGrid::new(24).unwrap();
        let w = shell_harmonic(grid, 3, 0.05).unwrap();
        assert!((w.linf_norm() - 0.05).abs() < 1e-15);
        for &i in w.support_indices().iter() {
            assert!(grid.center_of(i).norm() < 0.5);
        }
        assert!(shell_harmonic(grid, 0, 0.05).is_err());
    }

    #[test]
    fn sweep_distances_collapse_with_degree() {
        let cfg = ExperimentConfig {
            grid_n: Some(16),
            l_max: Some(6),
            s_samples: 2,
            sweep_degrees: vec![1, 3, 5],
            potential: crate::experiments::config::PotentialSpec {
                kind: "zero".into(),
                ..Default::default()
            },
            ..ExperimentConfig::default()
        };
        let r = resolve(&cfg, Command::Sweep).unwrap();
        let rep = run(&r).unwrap();
        assert_eq!(rep.rows.len(), 3);
        for row in &rep.rows {
            assert!((row.linf_distance - 2.0 * row.epsilon).abs() < 1e-15);
            assert!(row.cm_estimate.is_finite() && row.cm_estimate > 0.0);
        }
        assert!(rep.decreasing, "higher shells must scatter less");
    }

    #[test]
    fn empty_degrees_rejected() {
        let cfg = ExperimentConfig { sweep_degrees: vec![], ..ExperimentConfig::default() };
        let r = resolve(&cfg, Command::Sweep).unwrap();
        assert!(run(&r).is_err());
    }
}
