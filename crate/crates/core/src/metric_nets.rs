//! Packings of smooth-potential balls and nets of amplitude matrices.
//!
//! The instability mechanism is a size mismatch between two metric objects:
//!
//! * the "fat" side — potentials that are ε-small in sup norm yet β-bounded
//!   in C^m admit ε-separated families of size `2^{k³}` with
//!   `k ≈ (β/ε)^{1/m}` (sign patterns over a lattice of disjoint bumps);
//! * the "thin" side — amplitude matrices of admissible potentials extend
//!   holomorphically to an ellipse around the wavenumber interval, so their
//!   coefficient functions compress into truncated Chebyshev expansions with
//!   quantized coefficients, giving δ-nets whose log-cardinality is only
//!   polylogarithmic in 1/δ.
//!
//! When the packing outnumbers the net, two ε-separated potentials must share
//! a net cell, i.e. have 2δ-close amplitudes: that collision is what the
//! experiments exhibit.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::amplitude_space::{log_sup_weight, AmplitudeMatrix, EnergyInterval, NormWeights};
use crate::cheb;
use crate::error::{Result, ScatError};
use crate::potential_model::{
    assemble_from_signs, Potential, VoxelGrid, MAX_SMOOTHNESS, MOLLIFIER_DERIV_BOUND,
};
use crate::sphere_basis::HarmonicIndex;

/// Half-width of the largest cube inscribed in `B(0, 1/2)`.
pub const LATTICE_HALF_WIDTH: f64 = 0.288_675_134_594_812_9; // 1/(2√3)

/// Fraction of a lattice cell's half-width used as the bump scale, leaving a
/// disjointness margin between neighbors and clearance from the ball edge.
pub const BUMP_FILL: f64 = 0.9;

/// Safety factor keeping constructed budgets strictly inside the admissible
/// region, so floor() in the bump-count law is stable under roundoff.
const BUDGET_MARGIN: f64 = 0.999;

/// Class parameters of the fat space: sup-norm level `epsilon`, C^m bound
/// `beta`, smoothness order `m ≥ 1`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SmoothnessBudget {
    pub m: usize,
    pub epsilon: f64,
    pub beta: f64,
}

impl SmoothnessBudget {
    pub fn new(m: usize, epsilon: f64, beta: f64) -> Result<Self> {
        if m == 0 || m > MAX_SMOOTHNESS {
            return Err(ScatError::UnsupportedSmoothness { m });
        }
        if !(epsilon > 0.0) || !(beta > 0.0) {
            return Err(ScatError::InvalidConfig(format!(
                "budget needs positive epsilon and beta, got {epsilon}, {beta}"
            )));
        }
        Ok(SmoothnessBudget { m, epsilon, beta })
    }
}

/// Effective packing constant: a bump of scale `t = BUMP_FILL·c/k` and
/// amplitude ε has C^m norm `ε t^{-m} K(m)`, so the budget `≤ β` admits
/// `k = ⌊(β μ_eff / ε)^{1/m}⌋` lattice cells per axis with
/// `μ_eff = (BUMP_FILL·c)^m / K(m)`.
pub fn mu_eff(m: usize) -> Result<f64> {
    if m == 0 || m > MAX_SMOOTHNESS {
        return Err(ScatError::UnsupportedSmoothness { m });
    }
    Ok((BUMP_FILL * LATTICE_HALF_WIDTH).powi(m as i32) / MOLLIFIER_DERIV_BOUND[m])
}

/// Largest sup-norm level that still admits a `k`-per-axis lattice under the
/// budget `(m, β)`, kept strictly interior so the count law is exact.
pub fn epsilon_for_bump_count(k: usize, m: usize, beta: f64) -> Result<f64> {
    if k == 0 {
        return Err(ScatError::InvalidConfig("bump count must be positive".into()));
    }
    Ok(BUDGET_MARGIN * beta * mu_eff(m)? / (k as f64).powi(m as i32))
}

/// Geometry of a packing family: `k³` disjoint bump slots in `B(0, 1/2)`.
/// Grid-free, so counting experiments can explore scales no voxel grid
/// resolves.
#[derive(Debug, Clone, Serialize)]
pub struct PackingLayout {
    pub budget: SmoothnessBudget,
    pub k: usize,
    pub scale: f64,
    pub centers: Vec<crate::Vec3>,
}

impl PackingLayout {
    pub fn bump_count(&self) -> usize {
        self.centers.len()
    }

    /// log₂ of the member count `2^{k³}`.
    pub fn log2_member_count(&self) -> f64 {
        self.bump_count() as f64
    }
}

/// Bumps per axis and natural-log member count under the budget, without
/// materializing the lattice (counting experiments reach scales where even
/// the center list would not fit in memory).
pub fn packing_count(budget: SmoothnessBudget) -> Result<(usize, f64)> {
    let mu = mu_eff(budget.m)?;
    let ratio = budget.beta * mu / budget.epsilon;
    if !(ratio > 1.0) {
        return Err(ScatError::EpsilonTooLarge {
            epsilon: budget.epsilon,
            beta: budget.beta,
            m: budget.m,
        });
    }
    let k = ratio.powf(1.0 / budget.m as f64).floor() as usize;
    if k == 0 {
        return Err(ScatError::EpsilonTooLarge {
            epsilon: budget.epsilon,
            beta: budget.beta,
            m: budget.m,
        });
    }
    let bumps = (k * k * k) as f64;
    Ok((k, bumps * std::f64::consts::LN_2))
}

/// Maximal lattice layout under the budget. The bump slots tile the cube
/// inscribed in `B(0, 1/2)`; the sup-norm distance between any two distinct
/// sign patterns is exactly 2ε (attained at a bump peak where the signs
/// differ).
pub fn packing_layout(budget: SmoothnessBudget) -> Result<PackingLayout> {
    let (k, _) = packing_count(budget)?;
    let c = LATTICE_HALF_WIDTH;
    let cell = c / k as f64;
    let scale = BUMP_FILL * cell;
    let mut centers = Vec::with_capacity(k * k * k);
    let coord = |i: usize| -c + (2 * i + 1) as f64 * cell;
    for i in 0..k {
        for j in 0..k {
            for l in 0..k {
                centers.push(crate::Vec3::new(coord(i), coord(j), coord(l)));
            }
        }
    }
    Ok(PackingLayout { budget, k, scale, centers })
}

/// Packing family materialized on a voxel grid. Members are assembled on
/// demand from sign patterns; the grid must resolve the bump scale.
#[derive(Debug, Clone)]
pub struct PackingFamily {
    pub grid: VoxelGrid,
    pub layout: PackingLayout,
}

pub fn build_packing(grid: VoxelGrid, budget: SmoothnessBudget) -> Result<PackingFamily> {
    let layout = packing_layout(budget)?;
    let family = PackingFamily { grid, layout };
    // Materialize one member now so resolution problems surface at build
    // time, not mid-experiment.
    family.member(&vec![1; family.layout.bump_count()])?;
    Ok(family)
}

impl PackingFamily {
    /// Member for an explicit sign pattern (+1/-1 per bump slot).
    pub fn member(&self, signs: &[i8]) -> Result<Potential> {
        let pairs: Vec<(crate::Vec3, f64)> = self
            .layout
            .centers
            .iter()
            .map(|&c| (c, self.layout.scale))
            .collect();
        assemble_from_signs(self.grid, &pairs, signs, self.layout.budget.epsilon, self.layout.budget.m)
    }

    /// Member addressed by the bits of `index` (bit b = sign of bump b).
    /// Only families with at most 64 bumps are addressable this way.
    pub fn member_by_index(&self, index: u64) -> Result<Potential> {
        let count = self.layout.bump_count();
        if count > 64 {
            return Err(ScatError::InvalidConfig(format!(
                "{count} bump slots exceed u64 indexing; pass explicit signs"
            )));
        }
        if count < 64 && index >= (1u64 << count) {
            return Err(ScatError::InvalidConfig(format!(
                "member index {index} out of range for {count} bumps"
            )));
        }
        let signs: Vec<i8> = (0..count)
            .map(|b| if index >> b & 1 == 1 { 1 } else { -1 })
            .collect();
        self.member(&signs)
    }
}

/// Bernstein-type ellipse `{ (a+b)/2 + (b-a)/2 · cos(u + iv) : |v| ≤ γ }`
/// around `[a, b]`, sized to stay inside a strip `|Im s| ≤ h`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EllipseDomain {
    pub a: f64,
    pub b: f64,
    pub gamma: f64,
}

impl EllipseDomain {
    /// Largest admissible ellipse: the maximal imaginary extent is
    /// `(b-a)/2 · sinh γ`, so `γ = asinh(2h/(b-a))` meets the strip exactly.
    pub fn for_strip(a: f64, b: f64, h: f64) -> Result<Self> {
        if !(b > a) || !(a > 0.0) {
            return Err(ScatError::InvalidConfig(format!(
                "ellipse needs 0 < a < b, got [{a}, {b}]"
            )));
        }
        if !(h > 0.0) {
            return Err(ScatError::InvalidConfig(format!(
                "strip half-width must be positive, got {h}"
            )));
        }
        Ok(EllipseDomain { a, b, gamma: cheb::gamma_for_margin(a, b, h) })
    }

    /// Maximal |Im s| over the ellipse.
    pub fn im_extent(&self) -> f64 {
        0.5 * (self.b - self.a) * self.gamma.sinh()
    }
}

/// δ-net for functions bounded by `C`: either a complex grid at a single
/// wavenumber, or truncated Chebyshev expansions with quantized coefficients
/// over an interval. `cells[n]` describes coefficient n's quantization: grid
/// step and per-axis index bound (indices run -max_idx..=max_idx).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HoloNet {
    pub domain: Option<EllipseDomain>,
    pub bound_c: f64,
    pub delta: f64,
    /// Retained polynomial degree; coefficients 0..=degree are stored.
    pub degree: usize,
    pub cells: Vec<QuantCell>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct QuantCell {
    pub step: f64,
    pub max_idx: i64,
}

impl QuantCell {
    fn axis_count(&self) -> u64 {
        2 * self.max_idx as u64 + 1
    }

    fn quantize_axis(&self, x: f64) -> i64 {
        let idx = (x / self.step).round();
        (idx as i64).clamp(-self.max_idx, self.max_idx)
    }

    fn quantize(&self, z: Complex64) -> (i64, i64) {
        (self.quantize_axis(z.re), self.quantize_axis(z.im))
    }

    fn value(&self, cell: (i64, i64)) -> Complex64 {
        Complex64::new(cell.0 as f64 * self.step, cell.1 as f64 * self.step)
    }
}

impl HoloNet {
    /// Natural log of the member count (product of per-cell grid sizes).
    pub fn ln_cardinality(&self) -> f64 {
        self.cells.iter().map(|c| 2.0 * (c.axis_count() as f64).ln()).sum()
    }

    /// Exact member count when it fits in u64.
    pub fn cardinality(&self) -> Option<u64> {
        let mut total: u64 = 1;
        for c in &self.cells {
            let per = c.axis_count().checked_mul(c.axis_count())?;
            total = total.checked_mul(per)?;
        }
        Some(total)
    }

    /// Nearest net member to the Chebyshev coefficients of a sampled
    /// function (pads or truncates to the net's degree first).
    pub fn quantize_coeffs(&self, coeffs: &[Complex64]) -> Vec<(i64, i64)> {
        (0..=self.degree)
            .map(|n| {
                let z = coeffs.get(n).copied().unwrap_or_default();
                self.cells[n].quantize(z)
            })
            .collect()
    }

    /// Chebyshev coefficients of a net member.
    pub fn cell_values(&self, cells: &[(i64, i64)]) -> Vec<Complex64> {
        cells
            .iter()
            .zip(&self.cells)
            .map(|(&c, q)| q.value(c))
            .collect()
    }

    /// Evaluates a net member at wavenumber `s`.
    pub fn eval_member(&self, cells: &[(i64, i64)], s: f64) -> Complex64 {
        let coeffs = self.cell_values(cells);
        match &self.domain {
            Some(d) => cheb::eval(&coeffs, d.a, d.b, Complex64::new(s, 0.0)),
            None => coeffs[0],
        }
    }
}

/// Single-wavenumber net: the complex grid `(δ/2)ℤ × i(δ/2)ℤ` clipped to
/// modulus ≤ C. Any |z| ≤ C rounds to a point within `δ/(2√2) ≤ δ`.
pub fn fixed_energy_grid_net(c: f64, delta: f64) -> Result<HoloNet> {
    if !(c > 0.0) || !(delta > 0.0) {
        return Err(ScatError::InvalidConfig(format!(
            "net needs positive bound and delta, got C={c}, delta={delta}"
        )));
    }
    let step = delta / 2.0;
    let max_idx = (2.0 * c / delta).floor() as i64;
    Ok(HoloNet {
        domain: None,
        bound_c: c,
        delta,
        degree: 0,
        cells: vec![QuantCell { step, max_idx }],
    })
}

/// Interval net: truncated Chebyshev expansion plus coefficient
/// quantization.
///
/// Functions bounded by `C` on the ellipse have coefficients
/// `|c_n| ≤ 2C e^{-γn}`, so degree `D` with tail `2C e^{-γ(D+1)}/(1-e^{-γ})
/// ≤ δ/2` loses at most δ/2; quantizing each retained coefficient to step
/// `τ = δ/(√2(D+1))` loses at most another δ/2 in sup norm on `[a, b]`.
pub fn holo_net(domain: EllipseDomain, c: f64, delta: f64) -> Result<HoloNet> {
    if !(c > 0.0) || !(delta > 0.0) {
        return Err(ScatError::InvalidConfig(format!(
            "net needs positive bound and delta, got C={c}, delta={delta}"
        )));
    }
    let gamma = domain.gamma;
    let tail_factor = 1.0 - (-gamma).exp();
    let needed = (4.0 * c / (delta * tail_factor)).ln() / gamma;
    let degree = if needed > 1.0 { (needed - 1.0).ceil() as usize } else { 0 };
    let tau = delta / (std::f64::consts::SQRT_2 * (degree + 1) as f64);
    let cells = (0..=degree)
        .map(|n| {
            let range = if n == 0 { c } else { 2.0 * c * (-gamma * n as f64).exp() };
            QuantCell { step: tau, max_idx: (range / tau).ceil() as i64 }
        })
        .collect();
    Ok(HoloNet { domain: Some(domain), bound_c: c, delta, degree, cells })
}

/// Smallest `l` such that `c₄ (2l'+1)^{σ₁+σ₂} 2^{-l'} < δ` for every
/// `l' ≥ l`. The envelope is eventually decreasing (the log-difference is
/// `(σ₁+σ₂)·ln(1+2/(2l+1)) - ln 2`), so a forward scan terminates.
pub fn truncation_degree(delta: f64, w: NormWeights, c4: f64) -> Result<usize> {
    if !(delta > 0.0) || !(c4 > 0.0) {
        return Err(ScatError::InvalidConfig(format!(
            "need positive delta and c4, got {delta}, {c4}"
        )));
    }
    let sigma = w.sigma1 + w.sigma2;
    let log_envelope = |l: usize| -> f64 {
        c4.ln() + sigma * ((2 * l + 1) as f64).ln() - l as f64 * std::f64::consts::LN_2
    };
    let decreasing_from = |l: usize| -> bool {
        sigma * (1.0 + 2.0 / (2 * l + 1) as f64).ln() <= std::f64::consts::LN_2
    };
    let threshold = delta.ln();
    let mut last_violation: Option<usize> = None;
    let mut l = 0usize;
    loop {
        if log_envelope(l) >= threshold {
            last_violation = Some(l);
        } else if decreasing_from(l) {
            // Below δ and the envelope only falls from here on.
            break;
        }
        l += 1;
        if l > 10_000_000 {
            return Err(ScatError::InvalidConfig(
                "truncation degree exceeds 1e7; check delta and weights".into(),
            ));
        }
    }
    Ok(last_violation.map_or(0, |v| v + 1))
}

/// Per-index coefficient tolerance
/// `(es₁/(2j₁+1))^{j₁+σ₁} (es₁/(2j₂+1))^{j₂+σ₂} δ`: multiplying back by the
/// sup-norm weight at any `s ≥ s1` gives `(s₁/s)^{j₁+j₂+σ₁+σ₂} δ ≤ δ` for
/// nonnegative weights.
pub fn coefficient_tolerance(j1: usize, j2: usize, w: NormWeights, s1: f64, delta: f64) -> f64 {
    let es1 = std::f64::consts::E * s1;
    let log_tol = (j1 as f64 + w.sigma1) * (es1 / (2 * j1 + 1) as f64).ln()
        + (j2 as f64 + w.sigma2) * (es1 / (2 * j2 + 1) as f64).ln();
    log_tol.exp() * delta
}

/// Assembled δ-net for amplitude matrices on an interval: one HoloNet per
/// degree pair `(j₁, j₂) ≤ l_max` (shared across the `(2j₁+1)(2j₂+1)` order
/// slots), singleton `{0}` beyond.
#[derive(Debug, Clone, Serialize)]
pub struct AmplitudeNet {
    pub delta: f64,
    pub weights: NormWeights,
    pub strip_h: f64,
    pub interval: EnergyInterval,
    pub l_max: usize,
    pub c2: f64,
    pub c4: f64,
    /// `None` in fixed-energy mode (degenerate interval).
    pub domain: Option<EllipseDomain>,
    /// Indexed by `j1 * (l_max+1) + j2`.
    pub nets: Vec<HoloNet>,
}

impl AmplitudeNet {
    fn net_for(&self, j1: usize, j2: usize) -> &HoloNet {
        &self.nets[j1 * (self.l_max + 1) + j2]
    }

    /// Natural log of the net cardinality, counting order-slot multiplicity.
    pub fn ln_cardinality(&self) -> f64 {
        let mut total = 0.0;
        for j1 in 0..=self.l_max {
            for j2 in 0..=self.l_max {
                let mult = ((2 * j1 + 1) * (2 * j2 + 1)) as f64;
                total += mult * self.net_for(j1, j2).ln_cardinality();
            }
        }
        total
    }

    /// Exact cardinality when it fits in u64.
    pub fn cardinality(&self) -> Option<u64> {
        let mut total: u64 = 1;
        for j1 in 0..=self.l_max {
            for j2 in 0..=self.l_max {
                let per = self.net_for(j1, j2).cardinality()?;
                let mult = ((2 * j1 + 1) * (2 * j2 + 1)) as u32;
                for _ in 0..mult {
                    total = total.checked_mul(per)?;
                }
            }
        }
        Some(total)
    }

    /// Deterministic text manifest with the net's defining parameters.
    pub fn manifest(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "amplitude-net");
        let _ = writeln!(out, "delta = {}", self.delta);
        let _ = writeln!(out, "sigma1 = {}", self.weights.sigma1);
        let _ = writeln!(out, "sigma2 = {}", self.weights.sigma2);
        let _ = writeln!(out, "interval = [{}, {}]", self.interval.s1(), self.interval.s2());
        let _ = writeln!(out, "strip_h = {}", self.strip_h);
        let _ = writeln!(out, "l_max = {}", self.l_max);
        let _ = writeln!(out, "c2 = {}", self.c2);
        let _ = writeln!(out, "c4 = {}", self.c4);
        match &self.domain {
            Some(d) => {
                let _ = writeln!(out, "mode = interval");
                let _ = writeln!(out, "gamma = {}", d.gamma);
            }
            None => {
                let _ = writeln!(out, "mode = fixed-energy");
            }
        }
        for j1 in 0..=self.l_max {
            for j2 in 0..=self.l_max {
                let net = self.net_for(j1, j2);
                let _ = writeln!(
                    out,
                    "net[{j1},{j2}]: degree = {}, step = {:.6e}, ln_cells = {:.6}",
                    net.degree,
                    net.cells[0].step,
                    net.ln_cardinality()
                );
            }
        }
        let _ = writeln!(out, "ln_cardinality = {:.6}", self.ln_cardinality());
        match self.cardinality() {
            Some(n) => {
                let _ = writeln!(out, "cardinality = {n}");
            }
            None => {
                let _ = writeln!(out, "cardinality = overflow (see ln_cardinality)");
            }
        }
        out
    }
}

/// Builds the amplitude-matrix δ-net.
///
/// Nonnegative weights are required: the per-index tolerance only folds back
/// into a uniform δ over the interval when `(s1/s)^{j₁+j₂+σ₁+σ₂} ≤ 1`.
pub fn build_amplitude_net(
    delta: f64,
    w: NormWeights,
    interval: &EnergyInterval,
    h: f64,
    c2: f64,
    c4: f64,
) -> Result<AmplitudeNet> {
    if !(delta > 0.0 && delta < (-1.0_f64).exp()) {
        return Err(ScatError::InvalidConfig(format!(
            "delta must lie in (0, e^-1), got {delta}"
        )));
    }
    if w.sigma1 < 0.0 || w.sigma2 < 0.0 {
        return Err(ScatError::InvalidConfig(format!(
            "net weights must be nonnegative, got ({}, {})",
            w.sigma1, w.sigma2
        )));
    }
    if !(c2 > 0.0) || !(c4 > 0.0) {
        return Err(ScatError::InvalidConfig(format!(
            "need positive class bounds, got c2={c2}, c4={c4}"
        )));
    }
    let l_max = truncation_degree(delta, w, c4)?;
    let fixed_energy = interval.s1() == interval.s2();
    let domain = if fixed_energy {
        None
    } else {
        Some(EllipseDomain::for_strip(interval.s1(), interval.s2(), h)?)
    };
    let mut nets = Vec::with_capacity((l_max + 1) * (l_max + 1));
    for j1 in 0..=l_max {
        for j2 in 0..=l_max {
            let tol = coefficient_tolerance(j1, j2, w, interval.s1(), delta);
            let net = match &domain {
                Some(d) => holo_net(*d, c2, tol)?,
                None => fixed_energy_grid_net(c2, tol)?,
            };
            nets.push(net);
        }
    }
    Ok(AmplitudeNet {
        delta,
        weights: w,
        strip_h: h,
        interval: interval.clone(),
        l_max,
        c2,
        c4,
        domain,
        nets,
    })
}

/// Discrete address of a net cell: quantized coefficient indices per
/// `(j₁, p₁, j₂, p₂)` block in flat-index order. Hashable, so collisions can
/// be found by bucketing.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct NetIndex {
    pub l_max: usize,
    pub cells: Vec<Vec<(i64, i64)>>,
}

/// Result of projecting a matrix onto the net.
#[derive(Debug, Clone)]
pub struct Quantized {
    pub index: NetIndex,
    /// Measured sup-norm distance (net weights) between the matrix and the
    /// reconstructed net member over the matrix samples.
    pub distance: f64,
}


/// Projects an amplitude matrix onto its nearest net member.
///
/// The matrix must be truncated at the net's `l_max` or deeper; entries
/// beyond `l_max` are mapped to 0 and must individually stay under δ in
/// weighted magnitude (they are checked, not assumed). Entries inside the
/// truncation must respect the class bound `|a(s)| ≤ c₂`. Interval-mode
/// quantization interpolates the coefficient functions from the matrix's
/// wavenumber samples, which must be the Chebyshev-Lobatto points of the
/// net's interval.
pub fn quantize_to_net(a: &AmplitudeMatrix, net: &AmplitudeNet) -> Result<Quantized> {
    if a.l_max() < net.l_max {
        return Err(ScatError::InvalidConfig(format!(
            "matrix truncated at {} but the net requires degree {}",
            a.l_max(),
            net.l_max
        )));
    }
    let same_interval = (a.interval().s1() - net.interval.s1()).abs() <= 1e-12
        && (a.interval().s2() - net.interval.s2()).abs() <= 1e-12;
    if !same_interval {
        return Err(ScatError::InvalidConfig(
            "matrix and net cover different wavenumber intervals".into(),
        ));
    }
    let interval_mode = net.domain.is_some();
    if interval_mode && !a.interval().is_lobatto() {
        return Err(ScatError::InvalidConfig(
            "interval quantization requires Chebyshev-Lobatto wavenumber samples".into(),
        ));
    }
    let samples = a.interval().samples();
    let indices: Vec<HarmonicIndex> = HarmonicIndex::all_upto(a.l_max()).collect();
    let mut cells = Vec::new();
    let mut distance = 0.0_f64;

    for i1 in &indices {
        for i2 in &indices {
            let traj: Vec<Complex64> = (0..samples.len())
                .map(|si| a.entry(si, *i1, *i2))
                .collect();
            let inside = i1.j.max(i2.j) <= net.l_max;
            if inside {
                let holo = net.net_for(i1.j, i2.j);
                for (&s, &z) in samples.iter().zip(&traj) {
                    if z.norm() > net.c2 * (1.0 + 1e-9) {
                        return Err(ScatError::EntryExceedsBound {
                            j1: i1.j,
                            p1: i1.p,
                            j2: i2.j,
                            p2: i2.p,
                            value: z.norm(),
                            bound: net.c2,
                        });
                    }
                    let _ = s;
                }
                let coeffs = if interval_mode {
                    cheb::coeffs_from_lobatto(&traj)
                } else {
                    traj.clone()
                };
                let cell = holo.quantize_coeffs(&coeffs);
                for (si, (&s, &z)) in samples.iter().zip(&traj).enumerate() {
                    let approx = holo.eval_member(&cell, s);
                    let lw = log_sup_weight(i1.j, net.weights.sigma1, s)
                        + log_sup_weight(i2.j, net.weights.sigma2, s);
                    distance = distance.max(lw.exp() * (z - approx).norm());
                    let _ = si;
                }
                cells.push(cell);
            } else {
                // Tail block: the net member is 0 there; the entry itself
                // must sit under δ in weighted magnitude.
                for (&s, &z) in samples.iter().zip(&traj) {
                    let lw = log_sup_weight(i1.j, net.weights.sigma1, s)
                        + log_sup_weight(i2.j, net.weights.sigma2, s);
                    let weighted = lw.exp() * z.norm();
                    if weighted > net.delta * (1.0 + 1e-9) {
                        return Err(ScatError::EntryExceedsBound {
                            j1: i1.j,
                            p1: i1.p,
                            j2: i2.j,
                            p2: i2.p,
                            value: weighted,
                            bound: net.delta,
                        });
                    }
                    distance = distance.max(weighted);
                }
            }
        }
    }
    Ok(Quantized { index: NetIndex { l_max: net.l_max, cells }, distance })
}

impl AmplitudeNet {
    /// Reconstructs the amplitude matrix of a net member on the net's
    /// interval samples (requires the interval to carry samples already).
    pub fn reconstruct(&self, index: &NetIndex) -> Result<AmplitudeMatrix> {
        if index.l_max != self.l_max {
            return Err(ScatError::InvalidConfig(
                "net index belongs to a different truncation degree".into(),
            ));
        }
        let mut m = AmplitudeMatrix::zero(self.l_max, self.interval.clone());
        let indices: Vec<HarmonicIndex> = HarmonicIndex::all_upto(self.l_max).collect();
        let expected = indices.len() * indices.len();
        if index.cells.len() != expected {
            return Err(ScatError::InvalidConfig(format!(
                "net index has {} blocks, expected {expected}",
                index.cells.len()
            )));
        }
        let samples: Vec<f64> = self.interval.samples().to_vec();
        let mut block = 0usize;
        for i1 in &indices {
            for i2 in &indices {
                let holo = self.net_for(i1.j, i2.j);
                let cell = &index.cells[block];
                for (si, &s) in samples.iter().enumerate() {
                    m.set(si, i1.flat(), i2.flat(), holo.eval_member(cell, s));
                }
                block += 1;
            }
        }
        Ok(m)
    }
}

/// Collision search: buckets matrices by net cell, returning the first pair
/// of distinct inputs sharing an index, if any.
pub fn find_collision(
    quantizations: &[(usize, NetIndex)],
) -> Option<(usize, usize)> {
    let mut seen: BTreeMap<&NetIndex, usize> = BTreeMap::new();
    for (id, idx) in quantizations {
        if let Some(&first) = seen.get(idx) {
            return Some((first, *id));
        }
        seen.insert(idx, *id);
    }
    None
}
