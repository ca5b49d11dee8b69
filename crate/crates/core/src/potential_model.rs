//! Compactly supported potentials on a voxel grid.
//!
//! Potentials live on a regular grid over `[-1,1]³` covering the unit ball.
//! The module builds the smooth bump families used by the packing
//! construction: each bump is the mollifier
//!
//! ```text
//! φ(x) = exp(1 - 1/(1 - |x|²))   for |x| < 1,    φ = 0 otherwise,
//! ```
//!
//! translated and scaled, with values normalized so the *grid* maximum equals
//! the requested amplitude exactly. That normalization makes sign-pattern
//! families exactly `2ε`-separated in the voxel sup norm regardless of where
//! voxel centers fall relative to bump centers.
//!
//! C^m norms of bump potentials are reported from the closed-form scaling
//! `|amplitude| · scale^{-m} · K_φ(m)`, where `K_φ(m)` bounds every partial
//! derivative of the mollifier up to order `m`; general grid potentials fall
//! back to finite-difference derivative maxima up to order 4.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, ScatError};
use crate::vec3::Vec3;

/// Upper bounds for `max_{|α| ≤ m} sup |∂^α φ|` of the unit mollifier,
/// m = 0..=8, evaluated offline on a dense spherical grid with a 5% margin.
pub const MOLLIFIER_DERIV_BOUND: [f64; 9] = [
    1.0,
    2.278857887041478,
    22.118128819055013,
    523.4644901766384,
    23704.006959684062,
    1698896.3355817911,
    231691459.914816,
    36971496365.21261,
    9404884630710.277,
];

/// Highest C^m order with a tabulated mollifier bound.
pub const MAX_SMOOTHNESS: usize = MOLLIFIER_DERIV_BOUND.len() - 1;

/// Regular voxel grid over `[-1,1]³` with `n` cells per axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "usize", into = "usize")]
pub struct VoxelGrid {
    n: usize,
}

impl TryFrom<usize> for VoxelGrid {
    type Error = ScatError;
    fn try_from(n: usize) -> Result<Self> {
        VoxelGrid::new(n)
    }
}

impl From<VoxelGrid> for usize {
    fn from(g: VoxelGrid) -> usize {
        g.n
    }
}

impl VoxelGrid {
    pub fn new(n: usize) -> Result<Self> {
        if n < 8 || n % 2 != 0 {
            return Err(ScatError::InvalidGridSize { n });
        }
        Ok(VoxelGrid { n })
    }

    pub fn n(self) -> usize {
        self.n
    }

    pub fn cell_size(self) -> f64 {
        2.0 / self.n as f64
    }

    pub fn cell_volume(self) -> f64 {
        let h = self.cell_size();
        h * h * h
    }

    pub fn voxel_count(self) -> usize {
        self.n * self.n * self.n
    }

    /// Coordinate of the voxel-center along one axis.
    pub fn coord(self, i: usize) -> f64 {
        -1.0 + (i as f64 + 0.5) * self.cell_size()
    }

    pub fn center(self, i: usize, j: usize, k: usize) -> Vec3 {
        Vec3::new(self.coord(i), self.coord(j), self.coord(k))
    }

    pub fn flat(self, i: usize, j: usize, k: usize) -> usize {
        (i * self.n + j) * self.n + k
    }

    /// Center of the voxel with the given flat index.
    pub fn center_of(self, flat: usize) -> Vec3 {
        let k = flat % self.n;
        let j = (flat / self.n) % self.n;
        let i = flat / (self.n * self.n);
        self.center(i, j, k)
    }

    /// Iterates voxel centers in flat order.
    pub fn centers(self) -> impl Iterator<Item = (usize, Vec3)> {
        (0..self.voxel_count()).map(move |f| (f, self.center_of(f)))
    }
}

/// One mollifier bump: `amplitude · φ((x - center)/scale)`, grid-normalized.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bump {
    pub center: Vec3,
    pub scale: f64,
    pub amplitude: f64,
}

/// Closed-form descriptor carried by bump-built potentials, enabling the
/// analytic C^m estimate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BumpSpec {
    pub bumps: Vec<Bump>,
    /// Smoothness order the family was budgeted for.
    pub m: usize,
    /// Whether the bump supports are pairwise disjoint (then the C^m norm of
    /// the sum is the max over bumps rather than the sum).
    pub disjoint: bool,
}

/// Real potential sampled at voxel centers, zero outside `support_radius`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Potential {
    pub grid: VoxelGrid,
    pub values: Vec<f64>,
    pub support_radius: f64,
    pub analytic_spec: Option<BumpSpec>,
}

/// Mollifier profile with unit sup norm, supported on the open unit ball.
pub fn mollifier(t_sq: f64) -> f64 {
    if t_sq < 1.0 {
        (1.0 - 1.0 / (1.0 - t_sq)).exp()
    } else {
        0.0
    }
}

impl Potential {
    pub fn zero(grid: VoxelGrid) -> Self {
        Potential {
            grid,
            values: vec![0.0; grid.voxel_count()],
            support_radius: 0.0,
            analytic_spec: None,
        }
    }

    /// Samples `f` at voxel centers, zeroing everything outside
    /// `support_radius`.
    pub fn from_fn(grid: VoxelGrid, support_radius: f64, f: impl Fn(Vec3) -> f64) -> Self {
        let r2 = support_radius * support_radius;
        let values = grid
            .centers()
            .map(|(_, c)| if c.norm_sq() <= r2 { f(c) } else { 0.0 })
            .collect();
        Potential { grid, values, support_radius, analytic_spec: None }
    }

    pub fn linf_norm(&self) -> f64 {
        self.values.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    /// Flat indices of voxels with a nonzero value, in scan order.
    pub fn support_indices(&self) -> Vec<usize> {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, &v)| v != 0.0)
            .map(|(i, _)| i)
            .collect()
    }

    /// Pointwise sum. Descriptors merge only when both sides carry one with
    /// the same order; the merged supports are no longer certified disjoint.
    pub fn sum(&self, other: &Potential) -> Result<Potential> {
        if self.grid != other.grid {
            return Err(ScatError::GridMismatch { n1: self.grid.n(), n2: other.grid.n() });
        }
        let values = self
            .values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| a + b)
            .collect();
        let analytic_spec = match (&self.analytic_spec, &other.analytic_spec) {
            (Some(a), Some(b)) if a.m == b.m => Some(BumpSpec {
                bumps: a.bumps.iter().chain(&b.bumps).copied().collect(),
                m: a.m,
                disjoint: false,
            }),
            _ => None,
        };
        Ok(Potential {
            grid: self.grid,
            values,
            support_radius: self.support_radius.max(other.support_radius),
            analytic_spec,
        })
    }

    /// Pointwise scaling by `lambda`.
    pub fn scaled(&self, lambda: f64) -> Potential {
        Potential {
            grid: self.grid,
            values: self.values.iter().map(|v| v * lambda).collect(),
            support_radius: self.support_radius,
            analytic_spec: self.analytic_spec.as_ref().map(|s| BumpSpec {
                bumps: s
                    .bumps
                    .iter()
                    .map(|b| Bump { amplitude: b.amplitude * lambda, ..*b })
                    .collect(),
                ..s.clone()
            }),
        }
    }
}

/// Builds a single mollifier bump potential.
///
/// The ball `B(center, scale)` must lie inside `B(0, 1/2)`. Voxel values are
/// normalized so the grid maximum is exactly `|amplitude|`.
pub fn make_bump(
    grid: VoxelGrid,
    center: Vec3,
    scale: f64,
    amplitude: f64,
    m: usize,
) -> Result<Potential> {
    let center_norm = center.norm();
    if center_norm + scale > 0.5 + 1e-12 {
        return Err(ScatError::BumpOutsideHalfBall { center_norm, scale });
    }
    if m > MAX_SMOOTHNESS {
        return Err(ScatError::UnsupportedSmoothness { m });
    }
    let mut raw = vec![0.0_f64; grid.voxel_count()];
    let mut max = 0.0_f64;
    let inv = 1.0 / scale;
    for (f, c) in grid.centers() {
        let t = (c - center) * inv;
        let v = mollifier(t.norm_sq());
        raw[f] = v;
        max = max.max(v);
    }
    if amplitude != 0.0 && max == 0.0 {
        return Err(ScatError::BumpUnresolved { scale, n: grid.n() });
    }
    let norm = if max > 0.0 { amplitude / max } else { 0.0 };
    for v in &mut raw {
        *v *= norm;
    }
    Ok(Potential {
        grid,
        values: raw,
        support_radius: (center_norm + scale).min(0.5),
        analytic_spec: Some(BumpSpec {
            bumps: vec![Bump { center, scale, amplitude }],
            m,
            disjoint: true,
        }),
    })
}

/// Builds a signed sum of disjoint bumps, the packing member for one sign
/// pattern. Distinct sign vectors over the same layout differ by exactly
/// `2ε` in the voxel sup norm.
pub fn assemble_from_signs(
    grid: VoxelGrid,
    layout: &[(Vec3, f64)],
    signs: &[i8],
    epsilon: f64,
    m: usize,
) -> Result<Potential> {
    assert_eq!(layout.len(), signs.len(), "one sign per bump");
    for (i, (ci, si)) in layout.iter().enumerate() {
        for (j, (cj, sj)) in layout.iter().enumerate().skip(i + 1) {
            let dist = (*ci - *cj).norm();
            if dist < si + sj {
                return Err(ScatError::OverlappingBumps { i, j, dist, scale_sum: si + sj });
            }
        }
    }
    let mut total = Potential::zero(grid);
    let mut bumps = Vec::with_capacity(layout.len());
    for ((center, scale), sign) in layout.iter().zip(signs) {
        let amplitude = f64::from(*sign).signum() * epsilon;
        let bump = make_bump(grid, *center, *scale, amplitude, m)?;
        bumps.extend(bump.analytic_spec.as_ref().unwrap().bumps.iter().copied());
        for (dst, src) in total.values.iter_mut().zip(&bump.values) {
            *dst += src;
        }
        total.support_radius = total.support_radius.max(bump.support_radius);
    }
    total.analytic_spec = Some(BumpSpec { bumps, m, disjoint: true });
    Ok(total)
}

/// Max over voxels of `|v1 - v2|`, the grid proxy for the L∞ distance.
pub fn linf_distance(v1: &Potential, v2: &Potential) -> Result<f64> {
    if v1.grid != v2.grid {
        return Err(ScatError::GridMismatch { n1: v1.grid.n(), n2: v2.grid.n() });
    }
    Ok(v1
        .values
        .iter()
        .zip(&v2.values)
        .fold(0.0_f64, |acc, (a, b)| acc.max((a - b).abs())))
}

/// Central finite-difference stencils for d^k/dx^k, k = 1..=4, offsets -2..=2,
/// to be divided by cell^k.
const FD_STENCILS: [[f64; 5]; 4] = [
    [0.0, -0.5, 0.0, 0.5, 0.0],
    [0.0, 1.0, -2.0, 1.0, 0.0],
    [-0.5, 1.0, 0.0, -1.0, 0.5],
    [1.0, -4.0, 6.0, -4.0, 1.0],
];

/// Applies the order-`k` derivative stencil along `axis`, with zero values
/// assumed outside the grid (valid for compactly supported potentials).
fn fd_axis(grid: VoxelGrid, values: &[f64], axis: usize, k: usize) -> Vec<f64> {
    let n = grid.n() as isize;
    let stencil = &FD_STENCILS[k - 1];
    let scale = grid.cell_size().powi(-(k as i32));
    let mut out = vec![0.0_f64; values.len()];
    for i in 0..n {
        for j in 0..n {
            for l in 0..n {
                let mut acc = 0.0;
                for (o, &c) in (-2_isize..=2).zip(stencil) {
                    if c == 0.0 {
                        continue;
                    }
                    let mut idx = [i, j, l];
                    idx[axis] += o;
                    if idx[axis] < 0 || idx[axis] >= n {
                        continue;
                    }
                    acc += c * values
                        [grid.flat(idx[0] as usize, idx[1] as usize, idx[2] as usize)];
                }
                out[grid.flat(i as usize, j as usize, l as usize)] = acc * scale;
            }
        }
    }
    out
}

fn fd_estimate(v: &Potential, m: usize) -> f64 {
    let mut best = v.linf_norm();
    // All multi-indices (a,b,c) with 1 <= a+b+c <= m, each component <= 4.
    for a in 0..=m {
        for b in 0..=(m - a) {
            for c in 0..=(m - a - b) {
                if a + b + c == 0 || a.max(b).max(c) > 4 {
                    continue;
                }
                let mut field = v.values.clone();
                for (axis, &ord) in [a, b, c].iter().enumerate() {
                    if ord > 0 {
                        field = fd_axis(v.grid, &field, axis, ord);
                    }
                }
                best = best.max(field.iter().fold(0.0_f64, |acc, x| acc.max(x.abs())));
            }
        }
    }
    best
}

/// Upper estimate of the C^m norm.
///
/// Bump potentials use the closed form `|amplitude| · scale^{-m} · K_φ(m)`
/// (max over bumps when supports are disjoint, sum otherwise); descriptor-free
/// potentials use finite-difference derivative maxima, available up to m = 4.
pub fn cm_norm_estimate(v: &Potential, m: usize) -> Result<f64> {
    if m == 0 {
        return Ok(v.linf_norm());
    }
    if let Some(spec) = &v.analytic_spec {
        if m > MAX_SMOOTHNESS {
            return Err(ScatError::UnsupportedSmoothness { m });
        }
        let per_bump = |b: &Bump| b.amplitude.abs() * b.scale.powi(-(m as i32)) * MOLLIFIER_DERIV_BOUND[m];
        let est = if spec.disjoint {
            spec.bumps.iter().map(per_bump).fold(0.0_f64, f64::max)
        } else {
            spec.bumps.iter().map(per_bump).sum()
        };
        return Ok(est);
    }
    if m > 4 {
        return Err(ScatError::UnsupportedSmoothness { m });
    }
    Ok(fd_estimate(v, m))
}

/// Voxel quadrature of `(2π)^{-3} ∫ e^{ip·x} v(x) dx`.
pub fn potential_fourier(v: &Potential, p: Vec3) -> Complex64 {
    let norm = v.grid.cell_volume() / (2.0 * std::f64::consts::PI).powi(3);
    let mut acc = Complex64::new(0.0, 0.0);
    for (f, c) in v.grid.centers() {
        let val = v.values[f];
        if val == 0.0 {
            continue;
        }
        let phase = p.dot(c);
        acc += Complex64::new(phase.cos(), phase.sin()) * val;
    }
    acc * norm
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn grid() -> VoxelGrid {
        VoxelGrid::new(16).unwrap()
    }

    #[test]
    fn grid_geometry() {
        let g = grid();
        assert_eq!(g.cell_size(), 0.125);
        assert_eq!(g.voxel_count(), 4096);
        assert_eq!(g.center(0, 0, 0), Vec3::new(-0.9375, -0.9375, -0.9375));
        assert_eq!(g.center_of(g.flat(3, 7, 11)), g.center(3, 7, 11));
        assert!(VoxelGrid::new(6).is_err());
        assert!(VoxelGrid::new(9).is_err());
    }

    #[test]
    fn zero_bump_is_zero() {
        let v = make_bump(grid(), Vec3::ZERO, 0.25, 0.0, 2).unwrap();
        assert_eq!(v.linf_norm(), 0.0);
        assert_eq!(cm_norm_estimate(&v, 2).unwrap(), 0.0);
    }

    #[test]
    fn bump_peak_is_normalized() {
        let v = make_bump(grid(), Vec3::ZERO, 0.25, 1.0, 2).unwrap();
        assert_eq!(v.linf_norm(), 1.0);
        // Support must stay inside B(0, 1/4): every voxel beyond is zero.
        for (f, c) in v.grid.centers() {
            if c.norm() > 0.25 {
                assert_eq!(v.values[f], 0.0);
            }
        }
        // The maximum sits at the voxel nearest the origin.
        let best = v
            .values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.abs().partial_cmp(&b.1.abs()).unwrap())
            .unwrap()
            .0;
        let c = v.grid.center_of(best);
        assert!(c.norm() < v.grid.cell_size());
    }

    #[test]
    fn bump_exits_half_ball_is_refused() {
        assert!(matches!(
            make_bump(grid(), Vec3::new(0.4, 0.0, 0.0), 0.2, 1.0, 2),
            Err(ScatError::BumpOutsideHalfBall { .. })
        ));
    }

    #[test]
    fn opposite_bumps_at_distance_two_epsilon() {
        let g = grid();
        // Same bump with flipped amplitude: the peak voxel differs by 2ε.
        let a = make_bump(g, Vec3::new(-0.2, 0.0, 0.0), 0.15, 0.01, 2).unwrap();
        let b = make_bump(g, Vec3::new(-0.2, 0.0, 0.0), 0.15, -0.01, 2).unwrap();
        assert_relative_eq!(linf_distance(&a, &b).unwrap(), 0.02, epsilon = 1e-15);
        // Disjointly supported ±ε bumps sit at distance ε: each peak sees the
        // other potential vanish.
        let c = make_bump(g, Vec3::new(0.2, 0.0, 0.0), 0.15, -0.01, 2).unwrap();
        assert_relative_eq!(linf_distance(&a, &c).unwrap(), 0.01, epsilon = 1e-15);
    }

    fn two_bump_layout() -> Vec<(Vec3, f64)> {
        vec![
            (Vec3::new(-0.2, 0.0, 0.0), 0.15),
            (Vec3::new(0.2, 0.0, 0.0), 0.15),
        ]
    }

    #[test]
    fn sign_family_discreteness() {
        let g = grid();
        let eps = 0.03;
        let pp = assemble_from_signs(g, &two_bump_layout(), &[1, 1], eps, 2).unwrap();
        let pm = assemble_from_signs(g, &two_bump_layout(), &[1, -1], eps, 2).unwrap();
        assert_relative_eq!(pp.linf_norm(), eps, epsilon = 1e-15);
        assert_relative_eq!(linf_distance(&pp, &pm).unwrap(), 2.0 * eps, epsilon = 1e-15);
        assert_eq!(linf_distance(&pp, &pp).unwrap(), 0.0);
    }

    #[test]
    fn overlapping_bumps_are_refused() {
        let layout = vec![
            (Vec3::new(-0.05, 0.0, 0.0), 0.15),
            (Vec3::new(0.05, 0.0, 0.0), 0.15),
        ];
        assert!(matches!(
            assemble_from_signs(grid(), &layout, &[1, 1], 0.01, 2),
            Err(ScatError::OverlappingBumps { .. })
        ));
    }

    #[test]
    fn linf_symmetry() {
        let v = make_bump(grid(), Vec3::ZERO, 0.3, 0.7, 2).unwrap();
        let neg = v.scaled(-1.0);
        assert_relative_eq!(
            linf_distance(&v, &neg).unwrap(),
            2.0 * v.linf_norm(),
            epsilon = 1e-15
        );
    }

    #[test]
    fn cm_estimate_scaling_law() {
        let g = VoxelGrid::new(32).unwrap();
        for m in [1usize, 2, 3] {
            let wide = make_bump(g, Vec3::ZERO, 0.25, 1.0, m).unwrap();
            let narrow = make_bump(g, Vec3::ZERO, 0.125, 1.0, m).unwrap();
            let ratio =
                cm_norm_estimate(&narrow, m).unwrap() / cm_norm_estimate(&wide, m).unwrap();
            assert_relative_eq!(ratio, 2.0_f64.powi(m as i32), max_relative = 0.10);
        }
    }

    #[test]
    fn cm_order_zero_is_linf() {
        let v = make_bump(grid(), Vec3::ZERO, 0.25, 0.37, 2).unwrap();
        assert_eq!(cm_norm_estimate(&v, 0).unwrap(), v.linf_norm());
        let sampled = Potential::from_fn(grid(), 0.4, |c| (c.x * 5.0).sin());
        assert_eq!(cm_norm_estimate(&sampled, 0).unwrap(), sampled.linf_norm());
    }

    #[test]
    fn fd_estimate_matches_analytic_gradient() {
        // Mollifier of scale 0.4: sup |∇| = 2.1703/0.4 ≈ 5.43. The potential
        // carries no descriptor, so the finite-difference path must land near
        // that closed-form value.
        let g = VoxelGrid::new(32).unwrap();
        let v = Potential::from_fn(g, 0.45, |c| mollifier(c.norm_sq() / (0.4 * 0.4)));
        let est = cm_norm_estimate(&v, 1).unwrap();
        let truth = 2.1703408448014074 / 0.4;
        assert!(
            (est / truth - 1.0).abs() < 0.2,
            "estimate {est} vs analytic {truth}"
        );
    }

    #[test]
    fn fd_high_order_without_descriptor_is_refused() {
        let v = Potential::from_fn(grid(), 0.4, |c| c.x);
        assert!(matches!(
            cm_norm_estimate(&v, 5),
            Err(ScatError::UnsupportedSmoothness { m: 5 })
        ));
    }

    #[test]
    fn fourier_zero_and_dc() {
        let g = grid();
        assert_eq!(potential_fourier(&Potential::zero(g), Vec3::EZ).norm(), 0.0);
        let v = make_bump(g, Vec3::ZERO, 0.25, 1.0, 2).unwrap();
        let dc = potential_fourier(&v, Vec3::ZERO);
        let expect =
            v.values.iter().sum::<f64>() * g.cell_volume() / (2.0 * std::f64::consts::PI).powi(3);
        assert_relative_eq!(dc.re, expect, epsilon = 1e-15);
        assert_eq!(dc.im, 0.0);
    }

    #[test]
    fn fourier_radial_is_real() {
        let v = make_bump(VoxelGrid::new(24).unwrap(), Vec3::ZERO, 0.3, 1.0, 2).unwrap();
        for scale in [0.5, 1.0, 2.0, 4.0] {
            let f = potential_fourier(&v, Vec3::new(0.0, 0.0, scale));
            assert!(f.im.abs() < 1e-12, "imaginary residue {}", f.im);
        }
    }

    #[test]
    fn fourier_conjugate_symmetry() {
        let v = make_bump(grid(), Vec3::new(0.1, -0.05, 0.2), 0.15, 0.8, 2).unwrap();
        for p in [
            Vec3::new(1.0, 2.0, -0.5),
            Vec3::new(-0.3, 0.9, 2.2),
            Vec3::new(4.0, 0.0, 1.0),
        ] {
            let a = potential_fourier(&v, p);
            let b = potential_fourier(&v, -p);
            assert!((b - a.conj()).norm() < 1e-13);
        }
    }

    #[test]
    fn serialization_round_trip_is_bit_exact() {
        let v = make_bump(grid(), Vec3::new(0.1, 0.2, -0.1), 0.17, 0.123456789012345e-3, 3)
            .unwrap();
        let json = serde_json::to_string(&v).unwrap();
        let back: Potential = serde_json::from_str(&json).unwrap();
        assert_eq!(back.grid, v.grid);
        assert_eq!(back.support_radius.to_bits(), v.support_radius.to_bits());
        assert_eq!(back.analytic_spec, v.analytic_spec);
        assert_eq!(v.values.len(), back.values.len());
        for (a, b) in v.values.iter().zip(&back.values) {
            assert_eq!(a.to_bits(), b.to_bits());
        }
    }

    #[test]
    fn support_scan_stays_in_half_ball() {
        let g = grid();
        let member = assemble_from_signs(g, &two_bump_layout(), &[1, -1], 0.05, 2).unwrap();
        for (f, c) in g.centers() {
            if c.norm() > 0.5 {
                assert_eq!(member.values[f], 0.0);
            }
        }
        assert!(member.support_radius <= 0.5);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn sign_patterns_are_two_epsilon_apart(bits1 in 0u8..4, bits2 in 0u8..4, eps in 1e-4_f64..0.1) {
            let g = grid();
            let signs = |b: u8| [if b & 1 == 0 { -1i8 } else { 1 }, if b & 2 == 0 { -1i8 } else { 1 }];
            let v1 = assemble_from_signs(g, &two_bump_layout(), &signs(bits1), eps, 2).unwrap();
            let v2 = assemble_from_signs(g, &two_bump_layout(), &signs(bits2), eps, 2).unwrap();
            let d = linf_distance(&v1, &v2).unwrap();
            if bits1 == bits2 {
                prop_assert_eq!(d, 0.0);
            } else {
                prop_assert!((d - 2.0 * eps).abs() < 1e-15);
            }
        }

        #[test]
        fn scaling_is_linear_in_amplitude(a in -2.0_f64..2.0) {
            let v = make_bump(grid(), Vec3::ZERO, 0.2, a, 2).unwrap();
            prop_assert!((v.linf_norm() - a.abs()).abs() < 1e-15);
        }
    }
}
