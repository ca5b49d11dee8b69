//! Counting shapes, no solves: the packing grows exponentially in ε^{−3/m}
//! while the amplitude net grows only polylogarithmically in δ^{−1}. This
//! asymmetry is the whole instability mechanism, and it is visible from the
//! counting formulas alone.

use std::fmt::Write as _;
use std::path::Path;

use crate::amplitude_space::EnergyInterval;
use crate::error::{Result, ScatError};
use crate::experiments::config::Resolved;
use crate::experiments::report::{fnum, write_atomic, Table};
use crate::metric_nets::{build_amplitude_net, packing_count, SmoothnessBudget};

/// ε decade count for the packing exponent fit.
const EPSILON_POINTS: usize = 4;
/// δ sweep for the net cardinality curve.
const DELTA_HI: f64 = 1e-2;
const DELTA_LO: f64 = 1e-6;
const DELTA_POINTS: usize = 16;
/// Fit-quality gates, calibrated on the measured curves. The cardinality
/// staircase (integer truncation degrees) keeps pointwise residuals from
/// vanishing, so quality is judged against the curve's scale.
const MIN_R_SQUARED: f64 = 0.995;
const MAX_RESIDUAL_OVER_SCALE: f64 = 0.06;
/// Allowed relative error on the packing growth exponent.
const MAX_SLOPE_ERROR: f64 = 0.15;

/// Least-squares polynomial fit in a Chebyshev basis on `[x_lo, x_hi]`.
pub struct PolyFit {
    pub degree: usize,
    pub coeffs: Vec<f64>,
    pub x_lo: f64,
    pub x_hi: f64,
    pub r_squared: f64,
    /// max |residual| / max |y|.
    pub max_residual_over_scale: f64,
}

impl PolyFit {
    pub fn eval(&self, x: f64) -> f64 {
        let t = (2.0 * x - self.x_lo - self.x_hi) / (self.x_hi - self.x_lo);
        // Clenshaw recurrence for a real Chebyshev series.
        let (mut b1, mut b2) = (0.0, 0.0);
        for &c in self.coeffs.iter().rev() {
            let b0 = 2.0 * t * b1 - b2 + c;
            b2 = b1;
            b1 = b0;
        }
        b1 - t * b2
    }
}

/// Solves `a x = b` by Gaussian elimination with partial pivoting. The
/// systems here are tiny (≤ 7×7 normal equations).
fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Result<Vec<f64>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .expect("nonempty range");
        if a[pivot][col].abs() < 1e-300 {
            return Err(ScatError::ExperimentFailed(
                "singular normal equations in polynomial fit".into(),
            ));
        }
        a.swap(col, pivot);
        b.swap(col, pivot);
        for row in col + 1..n {
            let f = a[row][col] / a[col][col];
            for k in col..n {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; n];
    for col in (0..n).rev() {
        let mut acc = b[col];
        for k in col + 1..n {
            acc -= a[col][k] * x[k];
        }
        x[col] = acc / a[col][col];
    }
    Ok(x)
}

pub fn polyfit(xs: &[f64], ys: &[f64], degree: usize) -> Result<PolyFit> {
    if xs.len() != ys.len() || xs.len() <= degree {
        return Err(ScatError::InvalidConfig(format!(
            "need more than {degree} samples for a degree-{degree} fit, got {}",
            xs.len()
        )));
    }
    let (x_lo, x_hi) = xs
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &x| (lo.min(x), hi.max(x)));
    if !(x_hi > x_lo) {
        return Err(ScatError::InvalidConfig("fit abscissae must not coincide".into()));
    }
    let nb = degree + 1;
    // Chebyshev design matrix rows, accumulated into normal equations.
    let mut ata = vec![vec![0.0; nb]; nb];
    let mut atb = vec![0.0; nb];
    let mut rows = Vec::with_capacity(xs.len());
    for (&x, &y) in xs.iter().zip(ys) {
        let t = (2.0 * x - x_lo - x_hi) / (x_hi - x_lo);
        let mut row = vec![0.0; nb];
        let (mut prev, mut cur) = (1.0, t);
        for (k, slot) in row.iter_mut().enumerate() {
            *slot = match k {
                0 => 1.0,
                1 => t,
                _ => {
                    let next = 2.0 * t * cur - prev;
                    prev = cur;
                    cur = next;
                    next
                }
            };
        }
        for i in 0..nb {
            for j in 0..nb {
                ata[i][j] += row[i] * row[j];
            }
            atb[i] += row[i] * y;
        }
        rows.push(row);
    }
    let coeffs = solve_dense(ata, atb)?;

    let mean = ys.iter().sum::<f64>() / ys.len() as f64;
    let scale = ys.iter().fold(0.0_f64, |m, &y| m.max(y.abs()));
    let mut ss_res = 0.0;
    let mut ss_tot = 0.0;
    let mut max_res = 0.0_f64;
    for (row, &y) in rows.iter().zip(ys) {
        let fit: f64 = row.iter().zip(&coeffs).map(|(r, c)| r * c).sum();
        let res = y - fit;
        ss_res += res * res;
        ss_tot += (y - mean) * (y - mean);
        max_res = max_res.max(res.abs());
    }
    let r_squared = if ss_tot > 0.0 { 1.0 - ss_res / ss_tot } else { 1.0 };
    Ok(PolyFit {
        degree,
        coeffs,
        x_lo,
        x_hi,
        r_squared,
        max_residual_over_scale: if scale > 0.0 { max_res / scale } else { 0.0 },
    })
}

pub struct PackingPoint {
    pub epsilon: f64,
    pub bumps_per_axis: usize,
    pub ln_members: f64,
}

pub struct NetPoint {
    pub delta: f64,
    pub ln_card_interval: f64,
    pub l_max_interval: usize,
    pub ln_card_fixed: f64,
    pub l_max_fixed: usize,
}

pub struct NetCountReport {
    pub packing: Vec<PackingPoint>,
    /// Regression slope of ln ln(members) against ln(β/ε).
    pub packing_slope: f64,
    pub packing_slope_target: f64,
    pub packing_slope_error: f64,
    pub nets: Vec<NetPoint>,
    pub interval_fit: PolyFit,
    pub fixed_fit: PolyFit,
    pub pass: bool,
}

pub fn run(r: &Resolved) -> Result<NetCountReport> {
    if r.interval.samples().len() < 2 {
        return Err(ScatError::InvalidConfig(
            "net counting compares interval and fixed-energy nets; configure s1 < s2".into(),
        ));
    }

    let mut packing = Vec::with_capacity(EPSILON_POINTS);
    let mut xs = Vec::with_capacity(EPSILON_POINTS);
    let mut ys = Vec::with_capacity(EPSILON_POINTS);
    for i in 0..EPSILON_POINTS {
        let epsilon = r.budget.epsilon * 10f64.powi(-(i as i32));
        let budget = SmoothnessBudget::new(r.budget.m, epsilon, r.budget.beta)?;
        let (k, ln_members) = packing_count(budget)?;
        packing.push(PackingPoint { epsilon, bumps_per_axis: k, ln_members });
        xs.push((r.budget.beta / epsilon).ln());
        ys.push(ln_members.ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let packing_slope = sxy / sxx;
    let packing_slope_target = 3.0 / r.budget.m as f64;
    let packing_slope_error =
        (packing_slope - packing_slope_target).abs() / packing_slope_target;

    let fixed_interval = EnergyInterval::single(r.interval.s1())?;
    let mut nets = Vec::with_capacity(DELTA_POINTS);
    let ratio = (DELTA_LO / DELTA_HI).powf(1.0 / (DELTA_POINTS - 1) as f64);
    for i in 0..DELTA_POINTS {
        let delta = DELTA_HI * ratio.powi(i as i32);
        let ni = build_amplitude_net(delta, r.weights, &r.interval, r.raw.h, 1.0, 1.0)?;
        let nf = build_amplitude_net(delta, r.weights, &fixed_interval, r.raw.h, 1.0, 1.0)?;
        nets.push(NetPoint {
            delta,
            ln_card_interval: ni.ln_cardinality(),
            l_max_interval: ni.l_max,
            ln_card_fixed: nf.ln_cardinality(),
            l_max_fixed: nf.l_max,
        });
    }
    let nxs: Vec<f64> = nets.iter().map(|p| (1.0 / p.delta).ln()).collect();
    let yi: Vec<f64> = nets.iter().map(|p| p.ln_card_interval).collect();
    let yf: Vec<f64> = nets.iter().map(|p| p.ln_card_fixed).collect();
    let interval_fit = polyfit(&nxs, &yi, 6)?;
    let fixed_fit = polyfit(&nxs, &yf, 5)?;

    let fit_ok = |f: &PolyFit| {
        f.r_squared >= MIN_R_SQUARED && f.max_residual_over_scale <= MAX_RESIDUAL_OVER_SCALE
    };
    let pass =
        packing_slope_error <= MAX_SLOPE_ERROR && fit_ok(&interval_fit) && fit_ok(&fixed_fit);

    Ok(NetCountReport {
        packing,
        packing_slope,
        packing_slope_target,
        packing_slope_error,
        nets,
        interval_fit,
        fixed_fit,
        pass,
    })
}

pub fn write_reports(r: &Resolved, rep: &NetCountReport, dir: &Path) -> Result<()> {
    write_atomic(&dir.join("manifest.txt"), &r.manifest("net-count"))?;

    let mut pt = Table::new(["epsilon", "bumps_per_axis", "ln_members"]);
    for p in &rep.packing {
        pt.push(vec![fnum(p.epsilon), p.bumps_per_axis.to_string(), fnum(p.ln_members)]);
    }
    write_atomic(&dir.join("packing_fit.csv"), &pt.render())?;

    let mut nt = Table::new([
        "delta",
        "ln_card_interval",
        "l_max_interval",
        "ln_card_fixed",
        "l_max_fixed",
    ]);
    for p in &rep.nets {
        nt.push(vec![
            fnum(p.delta),
            fnum(p.ln_card_interval),
            p.l_max_interval.to_string(),
            fnum(p.ln_card_fixed),
            p.l_max_fixed.to_string(),
        ]);
    }
    write_atomic(&dir.join("net_fit.csv"), &nt.render())?;

    let mut s = String::new();
    let _ = writeln!(s, "packing_slope = {}", fnum(rep.packing_slope));
    let _ = writeln!(s, "packing_slope_target = {}", fnum(rep.packing_slope_target));
    let _ = writeln!(s, "packing_slope_error = {}", fnum(rep.packing_slope_error));
    for (name, f) in [("interval", &rep.interval_fit), ("fixed", &rep.fixed_fit)] {
        let _ = writeln!(s, "{name}_fit_degree = {}", f.degree);
        let _ = writeln!(s, "{name}_fit_r_squared = {}", fnum(f.r_squared));
        let _ = writeln!(
            s,
            "{name}_fit_max_residual_over_scale = {}",
            fnum(f.max_residual_over_scale)
        );
    }
    let _ = writeln!(s, "pass = {}", rep.pass);
    write_atomic(&dir.join("summary.txt"), &s)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::config::{resolve, Command, ExperimentConfig};
    use approx::assert_relative_eq;

    #[test]
    fn polyfit_recovers_exact_polynomial() {
        let xs: Vec<f64> = (0..12).map(|i| 1.0 + 0.5 * i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| 2.0 - x + 0.25 * x * x * x).collect();
        let fit = polyfit(&xs, &ys, 3).unwrap();
        assert!(fit.r_squared > 1.0 - 1e-12);
        assert!(fit.max_residual_over_scale < 1e-12);
        for &x in &xs {
            assert_relative_eq!(fit.eval(x), 2.0 - x + 0.25 * x * x * x, max_relative = 1e-10);
        }
        assert!(polyfit(&xs[..3], &ys[..3], 3).is_err());
        assert!(polyfit(&[1.0; 5], &ys[..5], 2).is_err());
    }

    #[test]
    fn counting_shapes_hold_at_default_scale() {
        let cfg = ExperimentConfig::default();
        let r = resolve(&cfg, Command::NetCount).unwrap();
        let rep = run(&r).unwrap();
        assert_eq!(rep.packing.len(), EPSILON_POINTS);
        assert_eq!(rep.nets.len(), DELTA_POINTS);
        assert!(
            rep.packing_slope_error <= MAX_SLOPE_ERROR,
            "slope {} vs target {}",
            rep.packing_slope,
            rep.packing_slope_target
        );
        assert!(
            rep.interval_fit.r_squared >= MIN_R_SQUARED
                && rep.interval_fit.max_residual_over_scale <= MAX_RESIDUAL_OVER_SCALE,
            "interval fit r2 {} residual {}",
            rep.interval_fit.r_squared,
            rep.interval_fit.max_residual_over_scale
        );
        assert!(
            rep.fixed_fit.r_squared >= MIN_R_SQUARED
                && rep.fixed_fit.max_residual_over_scale <= MAX_RESIDUAL_OVER_SCALE,
            "fixed fit r2 {} residual {}",
            rep.fixed_fit.r_squared,
            rep.fixed_fit.max_residual_over_scale
        );
        assert!(rep.pass);
        // The interval net is strictly richer than the fixed-energy net.
        for p in &rep.nets {
            assert!(p.ln_card_interval > p.ln_card_fixed);
        }
        // Cardinality grows as delta shrinks.
        for w in rep.nets.windows(2) {
            assert!(w[1].ln_card_interval >= w[0].ln_card_interval);
        }
    }

    #[test]
    fn fixed_energy_config_is_rejected() {
        let cfg = ExperimentConfig { s1: 1.0, s2: 1.0, ..ExperimentConfig::default() };
        let r = resolve(&cfg, Command::NetCount).unwrap();
        assert!(run(&r).is_err());
    }
}
