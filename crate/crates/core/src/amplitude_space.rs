//! Double spherical-harmonic expansion of scattering amplitudes and the
//! weighted norms measured on the coefficient matrices.
//!
//! An amplitude `f(θ, ω, s)` restricted to a wavenumber interval is stored as
//! the coefficient family `a_{j₁p₁j₂p₂}(s)` over all degrees up to a
//! truncation `L`, sampled at finitely many `s`. Two norms act on such
//! matrices: a weighted ℓ² norm at a single wavenumber, with weights
//! `((2j+1)/(es))^{2j+2σ}` on the squared entries, and a Banach sup norm over
//! the interval with weights `((2j+1)/(es))^{j+σ}` on the moduli. Both grow
//! super-exponentially in the degree, which is what squeezes admissible
//! amplitudes into tiny balls; all evaluations run in log space so the
//! weights never overflow.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::cheb::lobatto_points;
use crate::error::{Result, ScatError};
use crate::sphere_basis::{basis_matrix, basis_size, HarmonicIndex, SphereQuadrature};

/// Wavenumber interval `[s1, s2]` with the finite sample set experiments
/// evaluate on. `s1 = s2` models the fixed-energy case.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnergyInterval {
    s1: f64,
    s2: f64,
    samples: Vec<f64>,
}

impl EnergyInterval {
    pub fn new(s1: f64, s2: f64, samples: Vec<f64>) -> Result<Self> {
        if !(s1 > 0.0) || !(s2 >= s1) {
            return Err(ScatError::InvalidConfig(format!(
                "interval endpoints must satisfy 0 < s1 <= s2, got [{s1}, {s2}]"
            )));
        }
        if samples.is_empty() {
            return Err(ScatError::InvalidConfig("interval needs at least one sample".into()));
        }
        let tol = 1e-12 * s2.max(1.0);
        let sorted = samples.windows(2).all(|w| w[0] < w[1]);
        let inside = samples.iter().all(|&s| s >= s1 - tol && s <= s2 + tol);
        if !sorted || !inside {
            return Err(ScatError::InvalidConfig(format!(
                "samples must be strictly increasing inside [{s1}, {s2}]"
            )));
        }
        Ok(EnergyInterval { s1, s2, samples })
    }

    /// Single wavenumber, one sample.
    pub fn single(s: f64) -> Result<Self> {
        EnergyInterval::new(s, s, vec![s])
    }

    /// Chebyshev-Lobatto samples, the layout interval quantization relies on.
    pub fn lobatto(s1: f64, s2: f64, count: usize) -> Result<Self> {
        if count == 0 {
            return Err(ScatError::InvalidConfig("sample count must be positive".into()));
        }
        EnergyInterval::new(s1, s2, lobatto_points(count, s1, s2))
    }

    pub fn s1(&self) -> f64 {
        self.s1
    }

    pub fn s2(&self) -> f64 {
        self.s2
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    /// Index of a sample, matched to within 1e-12 relative.
    pub fn sample_index(&self, s: f64) -> Result<usize> {
        let tol = 1e-12 * self.s2.max(1.0);
        self.samples
            .iter()
            .position(|&x| (x - s).abs() <= tol)
            .ok_or(ScatError::SampleNotFound { s })
    }

    /// True when the samples are the Chebyshev-Lobatto points of `[s1, s2]`.
    pub fn is_lobatto(&self) -> bool {
        let reference = lobatto_points(self.samples.len(), self.s1, self.s2);
        let tol = 1e-12 * self.s2.max(1.0);
        self.samples
            .iter()
            .zip(&reference)
            .all(|(&a, &b)| (a - b).abs() <= tol)
    }
}

/// Weight exponents (σ₁, σ₂) of the coefficient norms. Any reals.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormWeights {
    pub sigma1: f64,
    pub sigma2: f64,
}

impl NormWeights {
    pub fn new(sigma1: f64, sigma2: f64) -> Self {
        NormWeights { sigma1, sigma2 }
    }

    /// The companion weights (σ₁+3, σ₂+3) appearing on the sup-norm side of
    /// the norm-comparison inequality.
    pub fn shifted_by_three(self) -> Self {
        NormWeights { sigma1: self.sigma1 + 3.0, sigma2: self.sigma2 + 3.0 }
    }
}

/// Coefficient family `a_{j₁p₁j₂p₂}(s)`: one dense `(L+1)² × (L+1)²` complex
/// block per interval sample. In-memory layout is `[s][b1][b2]` with
/// `b = j² + p - 1` the flat harmonic index; serialization flattens in
/// `(j₁, p₁, j₂, p₂, s)` order (s fastest) as re/im pairs.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "AmplitudeMatrixSerial", try_from = "AmplitudeMatrixSerial")]
pub struct AmplitudeMatrix {
    l_max: usize,
    interval: EnergyInterval,
    entries: Vec<Complex64>,
}

#[derive(Serialize, Deserialize, Clone)]
struct AmplitudeMatrixSerial {
    l_max: usize,
    s1: f64,
    s2: f64,
    samples: Vec<f64>,
    entries: Vec<(f64, f64)>,
}

impl From<AmplitudeMatrix> for AmplitudeMatrixSerial {
    fn from(m: AmplitudeMatrix) -> Self {
        let nb = m.basis_len();
        let ns = m.interval.samples().len();
        let mut entries = Vec::with_capacity(nb * nb * ns);
        for b1 in 0..nb {
            for b2 in 0..nb {
                for si in 0..ns {
                    let z = m.entries[(si * nb + b1) * nb + b2];
                    entries.push((z.re, z.im));
                }
            }
        }
        AmplitudeMatrixSerial {
            l_max: m.l_max,
            s1: m.interval.s1(),
            s2: m.interval.s2(),
            samples: m.interval.samples.clone(),
            entries,
        }
    }
}

impl TryFrom<AmplitudeMatrixSerial> for AmplitudeMatrix {
    type Error = String;

    fn try_from(s: AmplitudeMatrixSerial) -> std::result::Result<Self, String> {
        let interval =
            EnergyInterval::new(s.s1, s.s2, s.samples).map_err(|e| e.to_string())?;
        let nb = basis_size(s.l_max);
        let ns = interval.samples().len();
        if s.entries.len() != nb * nb * ns {
            return Err(format!(
                "entry count {} does not match (L+1)^4 x samples = {}",
                s.entries.len(),
                nb * nb * ns
            ));
        }
        let mut m = AmplitudeMatrix::zero(s.l_max, interval);
        let mut it = s.entries.iter();
        for b1 in 0..nb {
            for b2 in 0..nb {
                for si in 0..ns {
                    let &(re, im) = it.next().unwrap();
                    if !re.is_finite() || !im.is_finite() {
                        return Err("non-finite coefficient entry".into());
                    }
                    m.entries[(si * nb + b1) * nb + b2] = Complex64::new(re, im);
                }
            }
        }
        Ok(m)
    }
}

impl AmplitudeMatrix {
    pub fn zero(l_max: usize, interval: EnergyInterval) -> Self {
        let nb = basis_size(l_max);
        let ns = interval.samples().len();
        AmplitudeMatrix { l_max, interval, entries: vec![Complex64::default(); nb * nb * ns] }
    }

    pub fn l_max(&self) -> usize {
        self.l_max
    }

    pub fn interval(&self) -> &EnergyInterval {
        &self.interval
    }

    pub fn basis_len(&self) -> usize {
        basis_size(self.l_max)
    }

    pub fn get(&self, sample: usize, b1: usize, b2: usize) -> Complex64 {
        let nb = self.basis_len();
        self.entries[(sample * nb + b1) * nb + b2]
    }

    pub fn set(&mut self, sample: usize, b1: usize, b2: usize, value: Complex64) {
        let nb = self.basis_len();
        self.entries[(sample * nb + b1) * nb + b2] = value;
    }

    pub fn entry(&self, sample: usize, i1: HarmonicIndex, i2: HarmonicIndex) -> Complex64 {
        self.get(sample, i1.flat(), i2.flat())
    }

    /// The dense `[b1][b2]` block at one sample.
    pub fn slice(&self, sample: usize) -> &[Complex64] {
        let nb = self.basis_len();
        &self.entries[sample * nb * nb..(sample + 1) * nb * nb]
    }

    pub fn set_slice(&mut self, sample: usize, block: &[Complex64]) {
        let nb = self.basis_len();
        assert_eq!(block.len(), nb * nb, "block shape mismatch");
        self.entries[sample * nb * nb..(sample + 1) * nb * nb].copy_from_slice(block);
    }

    /// Entrywise difference; shapes must agree exactly.
    pub fn sub(&self, other: &AmplitudeMatrix) -> Result<AmplitudeMatrix> {
        if self.l_max != other.l_max || self.interval != other.interval {
            return Err(ScatError::InvalidConfig(
                "amplitude matrices differ in degree or interval".into(),
            ));
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a - b)
            .collect();
        Ok(AmplitudeMatrix { l_max: self.l_max, interval: self.interval.clone(), entries })
    }

    pub fn max_abs(&self) -> f64 {
        self.entries.iter().fold(0.0_f64, |acc, z| acc.max(z.norm()))
    }
}

/// Tensor-product quadrature of `f(θ, ω)` against `Y_{b1}(θ) Y_{b2}(ω)`,
/// producing the dense `[b1][b2]` coefficient block at one wavenumber.
///
/// `f_samples` holds `f(node_i, node_k)` row-major with the θ node index
/// slow. Exactness must reach `2 l_max` so band-limited inputs integrate
/// exactly.
pub fn expand_coefficients(
    f_samples: &[Complex64],
    quad: &SphereQuadrature,
    l_max: usize,
) -> Result<Vec<Complex64>> {
    let need = 2 * l_max;
    if quad.exactness_degree < need {
        return Err(ScatError::QuadratureTooCoarse {
            have: quad.exactness_degree,
            need,
            l_max,
        });
    }
    let k = quad.nodes.len();
    if f_samples.len() != k * k {
        return Err(ScatError::InvalidConfig(format!(
            "expected {}x{} amplitude samples, got {}",
            k,
            k,
            f_samples.len()
        )));
    }
    let nb = basis_size(l_max);
    let basis = basis_matrix(quad, l_max)?;
    // Weighted basis: wy[i][b] = w_i Y_b(node_i).
    let wy: Vec<Vec<f64>> = basis
        .iter()
        .zip(&quad.weights)
        .map(|(row, &w)| row.iter().map(|y| w * y).collect())
        .collect();

    // t[b1][k] = Σ_i wy[i][b1] f[i][k], then a[b1][b2] = Σ_k t[b1][k] wy[k][b2].
    let mut t = vec![Complex64::default(); nb * k];
    for (i, row) in wy.iter().enumerate() {
        let f_row = &f_samples[i * k..(i + 1) * k];
        for (b1, &y) in row.iter().enumerate() {
            if y == 0.0 {
                continue;
            }
            let dst = &mut t[b1 * k..(b1 + 1) * k];
            for (d, &f) in dst.iter_mut().zip(f_row) {
                *d += f * y;
            }
        }
    }
    let mut out = vec![Complex64::default(); nb * nb];
    for b1 in 0..nb {
        let t_row = &t[b1 * k..(b1 + 1) * k];
        let dst = &mut out[b1 * nb..(b1 + 1) * nb];
        for (kk, &tv) in t_row.iter().enumerate() {
            let yrow = &wy[kk];
            for (d, &y) in dst.iter_mut().zip(yrow) {
                *d += tv * y;
            }
        }
    }
    Ok(out)
}

/// Log of the sup-norm weight `((2j+1)/(es))^{j+σ}`.
#[inline]
pub fn log_sup_weight(j: usize, sigma: f64, s: f64) -> f64 {
    (j as f64 + sigma) * ((2 * j + 1) as f64 / (std::f64::consts::E * s)).ln()
}

/// Weighted ℓ² norm of the coefficient block at wavenumber `s`:
/// `{Σ ((2j₁+1)/(es))^{2j₁+2σ₁} ((2j₂+1)/(es))^{2j₂+2σ₂} |a|²}^{1/2}`.
pub fn stefanov_norm(a: &AmplitudeMatrix, s: f64, w: NormWeights) -> Result<f64> {
    if !(s > 0.0) {
        return Err(ScatError::InvalidConfig(format!("wavenumber must be positive, got {s}")));
    }
    let sample = a.interval.sample_index(s)?;
    let indices: Vec<HarmonicIndex> = HarmonicIndex::all_upto(a.l_max).collect();
    // Collect log terms and sum after shifting by the max so the
    // super-exponential weights cannot overflow.
    let mut logs = Vec::new();
    for i1 in &indices {
        for i2 in &indices {
            let z = a.entry(sample, *i1, *i2);
            if z == Complex64::default() {
                continue;
            }
            let lw = 2.0 * log_sup_weight(i1.j, w.sigma1, s)
                + 2.0 * log_sup_weight(i2.j, w.sigma2, s);
            logs.push(lw + 2.0 * z.norm().ln());
        }
    }
    let Some(&peak) = logs.iter().max_by(|x, y| x.partial_cmp(y).unwrap()) else {
        return Ok(0.0);
    };
    let total: f64 = logs.iter().map(|&t| (t - peak).exp()).sum();
    Ok((0.5 * peak).exp() * total.sqrt())
}

/// Banach sup norm over the interval samples:
/// `sup_{s, j₁p₁j₂p₂} ((2j₁+1)/(es))^{j₁+σ₁} ((2j₂+1)/(es))^{j₂+σ₂} |a(s)|`.
pub fn interval_sup_norm(a: &AmplitudeMatrix, w: NormWeights) -> f64 {
    let indices: Vec<HarmonicIndex> = HarmonicIndex::all_upto(a.l_max).collect();
    let mut peak = f64::NEG_INFINITY;
    for (si, &s) in a.interval.samples().iter().enumerate() {
        for i1 in &indices {
            for i2 in &indices {
                let z = a.entry(si, *i1, *i2);
                if z == Complex64::default() {
                    continue;
                }
                let lw = log_sup_weight(i1.j, w.sigma1, s)
                    + log_sup_weight(i2.j, w.sigma2, s);
                peak = peak.max(lw + z.norm().ln());
            }
        }
    }
    if peak.is_finite() {
        peak.exp()
    } else {
        0.0
    }
}

/// Comparison constant between the two norms:
/// `1 + Σ_{j₁p₁j₂p₂} ((2j₁+1)/(es₂))^{-3} ((2j₂+1)/(es₂))^{-3}
///  = 1 + (es₂)⁶ (Σ_j (2j+1)^{-2})²`,
/// with the series summed to 10⁴ terms and an integral tail correction
/// (closed form `Σ (2j+1)^{-2} = π²/8`, matched to 1e-9).
pub fn c3_constant(interval: &EnergyInterval) -> f64 {
    let cut = 10_000_usize;
    let mut partial = 0.0_f64;
    for j in (0..cut).rev() {
        partial += ((2 * j + 1) as f64).powi(-2);
    }
    // Σ_{j≥cut} (2j+1)^{-2} ≈ ∫ (2x+1)^{-2} dx with midpoint offset.
    let tail = 1.0 / (4.0 * cut as f64);
    let series = partial + tail;
    let es2 = std::f64::consts::E * interval.s2();
    1.0 + es2.powi(6) * series * series
}

/// Decay-envelope audit of one coefficient block against
/// `C (esρ/(2j₁+1))^{j₁+3/2} (esρ/(2j₂+1))^{j₂+3/2}`.
#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    /// Smallest constant making the envelope dominate every entry above the
    /// 1e-14 noise floor. Zero for an all-quiet block.
    pub c: f64,
    /// Whether `c` stayed at or below the configured cap.
    pub pass: bool,
    /// Per-degree envelope value `c × max weight` at `max(j₁,j₂) = l`.
    pub degree_bound: Vec<f64>,
    /// Per-degree measured `max |a|` at `max(j₁,j₂) = l`.
    pub degree_max_abs: Vec<f64>,
}

/// Noise floor below which entries are not held to the decay envelope.
pub const DECAY_NOISE_FLOOR: f64 = 1e-14;

/// Fits the smallest envelope constant at wavenumber `s` for a potential
/// supported in `B(0, rho)` and reports the per-degree profile.
pub fn decay_bound_check(a: &AmplitudeMatrix, s: f64, rho: f64, cap: f64) -> Result<DecayFit> {
    if !(s > 0.0 && rho > 0.0) {
        return Err(ScatError::InvalidConfig(format!(
            "need positive wavenumber and support radius, got s={s}, rho={rho}"
        )));
    }
    let sample = a.interval.sample_index(s)?;
    let esrho = std::f64::consts::E * s * rho;
    let log_weight = |j: usize| -> f64 {
        (j as f64 + 1.5) * (esrho / (2 * j + 1) as f64).ln()
    };
    let indices: Vec<HarmonicIndex> = HarmonicIndex::all_upto(a.l_max).collect();
    let mut log_c = f64::NEG_INFINITY;
    let mut degree_log_weight = vec![f64::NEG_INFINITY; a.l_max + 1];
    let mut degree_max_abs = vec![0.0_f64; a.l_max + 1];
    for i1 in &indices {
        for i2 in &indices {
            let z = a.entry(sample, *i1, *i2);
            let l = i1.j.max(i2.j);
            let lw = log_weight(i1.j) + log_weight(i2.j);
            degree_log_weight[l] = degree_log_weight[l].max(lw);
            let mag = z.norm();
            degree_max_abs[l] = degree_max_abs[l].max(mag);
            if mag > DECAY_NOISE_FLOOR {
                log_c = log_c.max(mag.ln() - lw);
            }
        }
    }
    let c = if log_c.is_finite() { log_c.exp() } else { 0.0 };
    let degree_bound = degree_log_weight
        .iter()
        .map(|&lw| if c > 0.0 { (lw + c.ln()).exp() } else { 0.0 })
        .collect();
    Ok(DecayFit { c, pass: c <= cap, degree_bound, degree_max_abs })
}

/// Cauchy-integral holomorphy audit: compares `coeff_fn(s0)` with the
/// trapezoidal contour mean over the circle `|s - s0| = r`, which must lie
/// inside the strip `|Im s| ≤ h`. For a holomorphic function the two agree
/// to quadrature accuracy; the returned value is their absolute difference.
pub fn analyticity_check(
    mut coeff_fn: impl FnMut(Complex64) -> Result<Complex64>,
    s0: Complex64,
    r: f64,
    h: f64,
    nodes: usize,
) -> Result<f64> {
    if s0.im.abs() + r > h + 1e-12 {
        return Err(ScatError::ContourOutsideStrip { s0: s0.to_string(), r, h });
    }
    if nodes < 64 {
        return Err(ScatError::InvalidConfig(format!(
            "contour quadrature needs at least 64 nodes, got {nodes}"
        )));
    }
    let center = coeff_fn(s0)?;
    let mut mean = Complex64::default();
    for k in 0..nodes {
        let phi = 2.0 * std::f64::consts::PI * k as f64 / nodes as f64;
        let s = s0 + Complex64::from_polar(r, phi);
        mean += coeff_fn(s)?;
    }
    mean /= nodes as f64;
    Ok((center - mean).norm())
}
