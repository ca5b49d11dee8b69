//! Quadrature on the unit sphere and the real orthonormal spherical-harmonic
//! basis used for every angular expansion in this crate.
//!
//! The basis is indexed by degree `j >= 0` and order slot `p` with
//! `1 <= p <= 2j+1`; slot `p` corresponds to the classical order
//! `m = p - j - 1`, so `p = 1` is the lowest `sin` component, `p = j+1` the
//! zonal harmonic and `p = 2j+1` the highest `cos` component. All functions
//! are real and orthonormal on the sphere:
//!
//! ```text
//! ∫_{S²} Y_j^p Y_{j'}^{p'} dσ = δ_{jj'} δ_{pp'}
//! ```
//!
//! Evaluation runs a normalized associated-Legendre recurrence, so degrees up
//! to `MAX_DEGREE/2` are available without factorial overflow.

use crate::error::{Result, ScatError};
use crate::vec3::Vec3;

/// Largest polynomial exactness degree served by [`build_quadrature`].
pub const MAX_DEGREE: usize = 128;

/// Tolerance for the unit-norm check on direction arguments.
const UNIT_TOL: f64 = 1e-10;

/// Basis index: degree `j` and order slot `p` in `1..=2j+1`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HarmonicIndex {
    pub j: usize,
    pub p: usize,
}

impl HarmonicIndex {
    pub fn new(j: usize, p: usize) -> Result<Self> {
        if p < 1 || p > 2 * j + 1 {
            return Err(ScatError::InvalidHarmonicIndex { j, p, max: 2 * j + 1 });
        }
        Ok(HarmonicIndex { j, p })
    }

    /// Position in the flat ordering of all indices with degree `<= j`:
    /// degree blocks of size `2j+1`, so the offset is `j² + p - 1`.
    pub fn flat(self) -> usize {
        self.j * self.j + self.p - 1
    }

    /// All indices with degree at most `l_max`, in flat order.
    pub fn all_upto(l_max: usize) -> impl Iterator<Item = HarmonicIndex> {
        (0..=l_max).flat_map(|j| (1..=2 * j + 1).map(move |p| HarmonicIndex { j, p }))
    }
}

/// Number of basis functions of degree at most `l_max`.
pub fn basis_size(l_max: usize) -> usize {
    (l_max + 1) * (l_max + 1)
}

/// Nodes and weights of a quadrature rule on S².
///
/// The rule is a product of Gauss-Legendre in the polar cosine and a uniform
/// rule in azimuth, which integrates every spherical polynomial up to
/// `exactness_degree` exactly.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    pub nodes: Vec<Vec3>,
    pub weights: Vec<f64>,
    pub exactness_degree: usize,
}

impl SphereQuadrature {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Weighted quadrature sum of a scalar function sampled at the nodes.
    pub fn integrate(&self, f: impl Fn(Vec3) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&n, &w)| w * f(n))
            .sum()
    }
}

/// Gauss-Legendre nodes and weights on [-1, 1], by Newton iteration on the
/// Legendre recurrence.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    // Only the lower half needs solving; nodes are symmetric about 0.
    for i in 0..(n + 1) / 2 {
        // Tricomi-style initial guess.
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            // Legendre recurrence for P_n(x) and P_{n-1}(x).
            let mut p0 = 1.0;
            let mut p1 = x;
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = (n as f64) * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// Builds a product quadrature exact for spherical polynomials of degree
/// `min_exactness_degree`.
///
/// Zonal components are handled by Gauss-Legendre in `cos θ` (exact to
/// degree `2 n_polar - 1`) and every nonzero azimuthal frequency up to the
/// requested degree integrates to zero exactly on the uniform azimuthal rule.
pub fn build_quadrature(min_exactness_degree: usize) -> Result<SphereQuadrature> {
    if min_exactness_degree > MAX_DEGREE {
        return Err(ScatError::DegreeExceedsTable {
            requested: min_exactness_degree,
            max: MAX_DEGREE,
        });
    }
    let d = min_exactness_degree;
    let n_polar = d / 2 + 1;
    let n_az = d + 1;
    let (t, wt) = gauss_legendre(n_polar);

    let mut nodes = Vec::with_capacity(n_polar * n_az);
    let mut weights = Vec::with_capacity(n_polar * n_az);
    let waz = 2.0 * std::f64::consts::PI / n_az as f64;
    for (ti, wi) in t.iter().zip(&wt) {
        let ct = *ti;
        let st = (1.0 - ct * ct).sqrt();
        for k in 0..n_az {
            let phi = 2.0 * std::f64::consts::PI * k as f64 / n_az as f64;
            nodes.push(Vec3::new(st * phi.cos(), st * phi.sin(), ct));
            weights.push(wi * waz);
        }
    }
    let exactness_degree = (2 * n_polar - 1).min(n_az - 1).max(d);
    Ok(SphereQuadrature { nodes, weights, exactness_degree })
}

/// Evaluates all basis functions of degree `<= l_max` at `dir`, in flat order.
///
/// The normalized associated-Legendre values satisfy
/// `q_m^m = sinθ √((2m+1)/(2m)) q_{m-1}^{m-1}` with
/// `q_0^0 = 1/√(4π)`, followed by the standard two-term degree recurrence;
/// no factorials appear, so the evaluation stays in range for all supported
/// degrees.
pub fn eval_harmonics_upto(l_max: usize, dir: Vec3) -> Result<Vec<f64>> {
    dir.check_unit(UNIT_TOL)?;
    let ct = dir.z;
    let st = (dir.x * dir.x + dir.y * dir.y).sqrt();
    // Azimuthal unit vector; at the poles m > 0 terms vanish with sinθ^m,
    // so the arbitrary azimuth is harmless.
    let (cp, sp) = if st > 0.0 { (dir.x / st, dir.y / st) } else { (1.0, 0.0) };

    let nl = l_max + 1;
    // q[l][m] = fully normalized associated Legendre (Condon-Shortley-free),
    // stored flat as l*(l+1)/2 + m.
    let tri = |l: usize, m: usize| l * (l + 1) / 2 + m;
    let mut q = vec![0.0_f64; nl * (nl + 1) / 2];
    q[0] = 0.5 / std::f64::consts::PI.sqrt();
    for m in 1..=l_max {
        let mf = m as f64;
        q[tri(m, m)] = st * ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * q[tri(m - 1, m - 1)];
    }
    for m in 0..l_max {
        let mf = m as f64;
        q[tri(m + 1, m)] = ct * (2.0 * mf + 3.0).sqrt() * q[tri(m, m)];
    }
    for m in 0..=l_max {
        for l in (m + 2)..=l_max {
            let lf = l as f64;
            let mf = m as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0) * (lf - 1.0) - mf * mf) / (4.0 * (lf - 1.0) * (lf - 1.0) - 1.0))
                .sqrt();
            q[tri(l, m)] = a * (ct * q[tri(l - 1, m)] - b * q[tri(l - 2, m)]);
        }
    }

    // cos(mφ), sin(mφ) by the angle-addition recurrence.
    let mut cos_m = vec![0.0_f64; nl];
    let mut sin_m = vec![0.0_f64; nl];
    cos_m[0] = 1.0;
    for m in 1..=l_max {
        cos_m[m] = cos_m[m - 1] * cp - sin_m[m - 1] * sp;
        sin_m[m] = sin_m[m - 1] * cp + cos_m[m - 1] * sp;
    }

    let sqrt2 = std::f64::consts::SQRT_2;
    let mut out = vec![0.0_f64; basis_size(l_max)];
    for l in 0..=l_max {
        let base = l * l;
        out[base + l] = q[tri(l, 0)];
        for m in 1..=l {
            let v = q[tri(l, m)] * sqrt2;
            // p = l+1+m carries cos(mφ), p = l+1-m carries sin(mφ).
            out[base + l + m] = v * cos_m[m];
            out[base + l - m] = v * sin_m[m];
        }
    }
    Ok(out)
}

/// Evaluates a single basis function. Convenience wrapper over
/// [`eval_harmonics_upto`]; batch callers should use the latter.
pub fn eval_harmonic(idx: HarmonicIndex, dir: Vec3) -> Result<f64> {
    let idx = HarmonicIndex::new(idx.j, idx.p)?;
    let all = eval_harmonics_upto(idx.j, dir)?;
    Ok(all[idx.flat()])
}

/// Basis values at every quadrature node: row `i` holds all flat-ordered
/// harmonics of degree `<= l_max` at node `i`.
pub fn basis_matrix(quad: &SphereQuadrature, l_max: usize) -> Result<Vec<Vec<f64>>> {
    quad.nodes
        .iter()
        .map(|&n| eval_harmonics_upto(l_max, n))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    #[test]
    fn weights_sum_to_sphere_area() {
        for d in [0, 2, 7, 24] {
            let q = build_quadrature(d).unwrap();
            let total: f64 = q.weights.iter().sum();
            assert_relative_eq!(total, 4.0 * PI, epsilon = 1e-12);
            assert!(q.weights.iter().all(|&w| w > 0.0));
            for n in &q.nodes {
                assert!((n.norm() - 1.0).abs() < 1e-14);
            }
            assert!(q.exactness_degree >= d);
        }
    }

    #[test]
    fn second_moment_closed_form() {
        // ∫ (x·e)² dσ = 4π/3 for any unit e.
        let q = build_quadrature(2).unwrap();
        for e in [
            Vec3::EZ,
            Vec3::new(1.0, 0.0, 0.0),
            Vec3::new(0.6, 0.0, 0.8),
            Vec3::new(1.0, 1.0, 1.0).normalized(),
        ] {
            let val = q.integrate(|n| n.dot(e) * n.dot(e));
            assert_relative_eq!(val, 4.0 * PI / 3.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn gram_identity_up_to_degree_12() {
        let l = 12;
        let q = build_quadrature(2 * l).unwrap();
        let basis = basis_matrix(&q, l).unwrap();
        let nb = basis_size(l);
        for a in 0..nb {
            for b in a..nb {
                let g: f64 = (0..q.len()).map(|i| q.weights[i] * basis[i][a] * basis[i][b]).sum();
                let expect = if a == b { 1.0 } else { 0.0 };
                assert!(
                    (g - expect).abs() < 1e-10,
                    "gram[{a}][{b}] = {g}, expected {expect}"
                );
            }
        }
    }

    #[test]
    fn constant_harmonic_value() {
        let y = eval_harmonic(HarmonicIndex { j: 0, p: 1 }, Vec3::new(0.6, 0.8, 0.0)).unwrap();
        assert_relative_eq!(y, 1.0 / (4.0 * PI).sqrt(), epsilon = 1e-15);
    }

    #[test]
    fn degree_one_parity() {
        let dir = Vec3::new(0.48, -0.6, 0.64).normalized();
        for p in 1..=3 {
            let idx = HarmonicIndex { j: 1, p };
            let a = eval_harmonic(idx, dir).unwrap();
            let b = eval_harmonic(idx, -dir).unwrap();
            assert_relative_eq!(a, -b, epsilon = 1e-14);
        }
    }

    #[test]
    fn single_harmonic_normalization() {
        let q = build_quadrature(24).unwrap();
        let idx = HarmonicIndex { j: 5, p: 3 };
        let val = q.integrate(|n| {
            let y = eval_harmonic(idx, n).unwrap();
            y * y
        });
        assert_relative_eq!(val, 1.0, epsilon = 1e-10);
    }

    #[test]
    fn degree_exceeds_table_is_refused() {
        assert!(matches!(
            build_quadrature(MAX_DEGREE + 2),
            Err(ScatError::DegreeExceedsTable { .. })
        ));
    }

    #[test]
    fn invalid_index_is_refused() {
        assert!(HarmonicIndex::new(2, 0).is_err());
        assert!(HarmonicIndex::new(2, 6).is_err());
        assert!(HarmonicIndex::new(2, 5).is_ok());
    }

    #[test]
    fn non_unit_direction_is_refused() {
        assert!(eval_harmonics_upto(3, Vec3::new(0.5, 0.0, 0.0)).is_err());
    }

    #[test]
    fn flat_indices_are_consecutive() {
        let mut expected = 0;
        for idx in HarmonicIndex::all_upto(7) {
            assert_eq!(idx.flat(), expected);
            expected += 1;
        }
        assert_eq!(expected, basis_size(7));
    }

    #[test]
    fn explicit_degree_one_values() {
        // Y_1 in this ordering: p=1 ↔ √(3/4π) y, p=2 ↔ √(3/4π) z, p=3 ↔ √(3/4π) x.
        let dir = Vec3::new(0.36, -0.48, 0.8);
        let c = (3.0 / (4.0 * PI)).sqrt();
        let vals = eval_harmonics_upto(1, dir).unwrap();
        assert_relative_eq!(vals[1], c * dir.y, epsilon = 1e-14);
        assert_relative_eq!(vals[2], c * dir.z, epsilon = 1e-14);
        assert_relative_eq!(vals[3], c * dir.x, epsilon = 1e-14);
    }

    proptest! {
        #[test]
        fn parity_all_degrees(ux in -1.0_f64..1.0, uy in -1.0_f64..1.0, uz in -1.0_f64..1.0) {
            let v = Vec3::new(ux, uy, uz);
            prop_assume!(v.norm() > 1e-3);
            let dir = v.normalized();
            let plus = eval_harmonics_upto(8, dir).unwrap();
            let minus = eval_harmonics_upto(8, -dir).unwrap();
            for idx in HarmonicIndex::all_upto(8) {
                let sign = if idx.j % 2 == 0 { 1.0 } else { -1.0 };
                prop_assert!((plus[idx.flat()] - sign * minus[idx.flat()]).abs() < 1e-12);
            }
        }

        #[test]
        fn addition_theorem(ux in -1.0_f64..1.0, uy in -1.0_f64..1.0, uz in -1.0_f64..1.0) {
            let v = Vec3::new(ux, uy, uz);
            prop_assume!(v.norm() > 1e-3);
            let dir = v.normalized();
            let vals = eval_harmonics_upto(10, dir).unwrap();
            for j in 0..=10usize {
                let sum: f64 = (1..=2 * j + 1)
                    .map(|p| {
                        let y = vals[HarmonicIndex { j, p }.flat()];
                        y * y
                    })
                    .sum();
                let expect = (2.0 * j as f64 + 1.0) / (4.0 * PI);
                prop_assert!((sum - expect).abs() < 1e-10);
            }
        }
    }
}
