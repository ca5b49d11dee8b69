//! Chebyshev interpolation on an interval.
//!
//! Functions holomorphic and bounded on a Bernstein ellipse around `[a, b]`
//! have Chebyshev coefficients decaying like `e^{-γn}`, which is what makes
//! truncated expansions a compact representation for the net constructions.
//! Everything here works on Chebyshev-Lobatto samples (extrema nodes,
//! endpoints included), stored in ascending order.

use num_complex::Complex64;

/// Chebyshev-Lobatto points of `[a, b]`, ascending, endpoints included.
/// `count = 1` degenerates to the midpoint.
pub fn lobatto_points(count: usize, a: f64, b: f64) -> Vec<f64> {
    assert!(count >= 1, "need at least one point");
    let mid = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    if count == 1 {
        return vec![mid];
    }
    let n = count - 1;
    (0..count)
        .map(|k| {
            // cos runs 1 → -1 as k grows; flip for ascending output.
            let x = (std::f64::consts::PI * (n - k) as f64 / n as f64).cos();
            mid + half * x
        })
        .collect()
}

/// Chebyshev coefficients `c_0..c_N` with `f(x) = Σ c_n T_n(x)` from values
/// at the ascending Lobatto points of the same interval.
pub fn coeffs_from_lobatto(values: &[Complex64]) -> Vec<Complex64> {
    let count = values.len();
    assert!(count >= 1);
    if count == 1 {
        return vec![values[0]];
    }
    let n = count - 1;
    let mut coeffs = vec![Complex64::default(); count];
    for (m, c) in coeffs.iter_mut().enumerate() {
        let mut acc = Complex64::default();
        for (k, &v) in values.iter().enumerate() {
            // values[k] sits at angle π(n-k)/n.
            let ang = std::f64::consts::PI * (m * (n - k)) as f64 / n as f64;
            let w = if k == 0 || k == n { 0.5 } else { 1.0 };
            acc += v * (w * ang.cos());
        }
        let norm = if m == 0 || m == n { 1.0 / n as f64 } else { 2.0 / n as f64 };
        *c = acc * norm;
    }
    coeffs
}

/// Clenshaw evaluation of `Σ c_n T_n` at `s ∈ [a, b]` (complex s allowed,
/// mapped through the same affine change of variable).
pub fn eval(coeffs: &[Complex64], a: f64, b: f64, s: Complex64) -> Complex64 {
    let x = if b > a {
        (s * 2.0 - (a + b)) / (b - a)
    } else {
        Complex64::default()
    };
    let mut b1 = Complex64::default();
    let mut b2 = Complex64::default();
    for &c in coeffs.iter().rev() {
        let next = x * 2.0 * b1 - b2 + c;
        b2 = b1;
        b1 = next;
    }
    b1 - x * b2
}

/// Ellipse parameter for a strip: the largest γ with
/// `|b - a|/2 · sinh γ ≤ margin`, i.e. `asinh(2·margin/(b-a))`.
pub fn gamma_for_margin(a: f64, b: f64, margin: f64) -> f64 {
    assert!(b > a && margin > 0.0);
    (2.0 * margin / (b - a)).asinh()
}
