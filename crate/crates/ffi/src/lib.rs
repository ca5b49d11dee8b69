//! C ABI for the scatlab forward-scattering simulator.
//!
//! Every object crosses the boundary as an opaque handle created and
//! released by this library; every fallible call returns a [`ScatStatus`]
//! and leaves a human-readable message for [`scat_last_error`] on failure.
//! The accompanying `include/scatlab.h` header is generated at build time.

use std::cell::RefCell;
use std::os::raw::c_char;
use std::panic::{catch_unwind, AssertUnwindSafe};

use num_complex::Complex64;
use scatlab::amplitude_space::{
    interval_sup_norm, stefanov_norm, AmplitudeMatrix, EnergyInterval, NormWeights,
};
use scatlab::forward_solver::{c1_constant, SolverConfig};
use scatlab::metric_nets::truncation_degree;
use scatlab::pipeline::amplitude_matrix;
use scatlab::potential_model::{make_bump, Potential, VoxelGrid};
use scatlab::sphere_basis::HarmonicIndex;
use scatlab::Vec3;

/// Result code of every fallible call in this ABI.
#[repr(C)]
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
pub enum ScatStatus {
    /// The call succeeded.
    Ok = 0,
    /// A required pointer argument was null.
    NullArgument = 1,
    /// The arguments were rejected; `scat_last_error` explains why.
    InvalidArgument = 2,
    /// The computation failed internally; `scat_last_error` explains why.
    RuntimeError = 3,
}

/// Compactly supported real potential on a voxel grid.
pub struct ScatPotential {
    inner: Potential,
}

/// Double spherical-harmonic amplitude coefficients on an energy interval.
pub struct ScatAmplitude {
    inner: AmplitudeMatrix,
}

thread_local! {
    static LAST_ERROR: RefCell<Vec<u8>> = const { RefCell::new(Vec::new()) };
}

fn set_error(msg: impl Into<String>) {
    let mut bytes = msg.into().into_bytes();
    bytes.retain(|&b| b != 0);
    LAST_ERROR.with(|e| *e.borrow_mut() = bytes);
}

fn fail(err: scatlab::ScatError) -> ScatStatus {
    set_error(err.to_string());
    ScatStatus::InvalidArgument
}

/// Runs a closure, converting panics into `RuntimeError` instead of
/// unwinding across the ABI.
fn guarded(f: impl FnOnce() -> ScatStatus) -> ScatStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            ScatStatus::RuntimeError
        }
    }
}

/// Copies bytes plus a trailing NUL into `buf` (truncating to `cap`) and
/// returns the length the full string needs, including the NUL.
fn copy_out(bytes: &[u8], buf: *mut c_char, cap: usize) -> usize {
    if !buf.is_null() && cap > 0 {
        let n = bytes.len().min(cap - 1);
        unsafe {
            std::ptr::copy_nonoverlapping(bytes.as_ptr(), buf.cast::<u8>(), n);
            *buf.add(n) = 0;
        }
    }
    bytes.len() + 1
}

/// Writes the message of the most recent failure on this thread into `buf`
/// as a NUL-terminated string, truncating to `cap` bytes. Returns the size
/// the full message needs, including the terminator.
#[no_mangle]
pub extern "C" fn scat_last_error(buf: *mut c_char, cap: usize) -> usize {
    LAST_ERROR.with(|e| copy_out(&e.borrow(), buf, cap))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn scat_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Discrete contraction constant `c1(h)` of the strip-weighted free
/// resolvent on an `n^3` grid; approaches 1/2 as `h` goes to 0.
#[no_mangle]
pub extern "C" fn scat_c1_constant(h: f64, n: usize, out: *mut f64) -> ScatStatus {
    guarded(|| {
        if out.is_null() {
            return ScatStatus::NullArgument;
        }
        let grid = match VoxelGrid::new(n) {
            Ok(g) => g,
            Err(e) => return fail(e),
        };
        if !(h >= 0.0) {
            set_error(format!("strip half-width must be nonnegative, got {h}"));
            return ScatStatus::InvalidArgument;
        }
        unsafe { *out = c1_constant(h, grid) };
        ScatStatus::Ok
    })
}

/// Builds a mollifier bump supported in the ball of radius `scale` around
/// `(cx, cy, cz)`, which must stay inside the half ball `|x| <= 1/2`, with
/// sup norm `|amplitude|` and smoothness budget order `m`.
#[no_mangle]
pub extern "C" fn scat_potential_bump(
    n: usize,
    cx: f64,
    cy: f64,
    cz: f64,
    scale: f64,
    amplitude: f64,
    m: usize,
    out: *mut *mut ScatPotential,
) -> ScatStatus {
    guarded(|| {
        if out.is_null() {
            return ScatStatus::NullArgument;
        }
        let grid = match VoxelGrid::new(n) {
            Ok(g) => g,
            Err(e) => return fail(e),
        };
        match make_bump(grid, Vec3::new(cx, cy, cz), scale, amplitude, m) {
            Ok(p) => {
                unsafe { *out = Box::into_raw(Box::new(ScatPotential { inner: p })) };
                ScatStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Returns a copy of `p` rescaled by `lambda`.
#[no_mangle]
pub extern "C" fn scat_potential_scaled(
    p: *const ScatPotential,
    lambda: f64,
    out: *mut *mut ScatPotential,
) -> ScatStatus {
    guarded(|| {
        if p.is_null() || out.is_null() {
            return ScatStatus::NullArgument;
        }
        let scaled = unsafe { &*p }.inner.scaled(lambda);
        unsafe { *out = Box::into_raw(Box::new(ScatPotential { inner: scaled })) };
        ScatStatus::Ok
    })
}

/// Sup norm of the potential over the grid.
#[no_mangle]
pub extern "C" fn scat_potential_sup_norm(p: *const ScatPotential, out: *mut f64) -> ScatStatus {
    guarded(|| {
        if p.is_null() || out.is_null() {
            return ScatStatus::NullArgument;
        }
        let sup = unsafe { &*p }.inner.values.iter().fold(0.0_f64, |a, v| a.max(v.abs()));
        unsafe { *out = sup };
        ScatStatus::Ok
    })
}

/// Releases a potential handle. Null is ignored.
#[no_mangle]
pub extern "C" fn scat_potential_free(p: *mut ScatPotential) {
    if !p.is_null() {
        drop(unsafe { Box::from_raw(p) });
    }
}

/// Solves the forward problem for `p` on the energy interval `[s1, s2]`
/// (one fixed energy when `s_samples <= 1` or the endpoints coincide) in
/// the strip of half-width `h`, and projects the scattering amplitudes onto
/// spherical-harmonic pairs up to degree `l_max`.
#[no_mangle]
pub extern "C" fn scat_amplitude_compute(
    p: *const ScatPotential,
    s1: f64,
    s2: f64,
    s_samples: usize,
    h: f64,
    l_max: usize,
    out: *mut *mut ScatAmplitude,
) -> ScatStatus {
    guarded(|| {
        if p.is_null() || out.is_null() {
            return ScatStatus::NullArgument;
        }
        let interval = if s_samples <= 1 || s1 == s2 {
            EnergyInterval::single(s1)
        } else {
            EnergyInterval::lobatto(s1, s2, s_samples)
        };
        let interval = match interval {
            Ok(i) => i,
            Err(e) => return fail(e),
        };
        let v = &unsafe { &*p }.inner;
        match amplitude_matrix(v, &interval, h, l_max, &SolverConfig::default()) {
            Ok(a) => {
                unsafe { *out = Box::into_raw(Box::new(ScatAmplitude { inner: a })) };
                ScatStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Highest harmonic degree carried by the amplitude handle.
#[no_mangle]
pub extern "C" fn scat_amplitude_l_max(a: *const ScatAmplitude, out: *mut usize) -> ScatStatus {
    guarded(|| {
        if a.is_null() || out.is_null() {
            return ScatStatus::NullArgument;
        }
        unsafe { *out = (*a).inner.l_max() };
        ScatStatus::Ok
    })
}

/// Number of energy samples carried by the amplitude handle.
#[no_mangle]
pub extern "C" fn scat_amplitude_sample_count(
    a: *const ScatAmplitude,
    out: *mut usize,
) -> ScatStatus {
    guarded(|| {
        if a.is_null() || out.is_null() {
            return ScatStatus::NullArgument;
        }
        unsafe { *out = (*a).inner.interval().samples().len() };
        ScatStatus::Ok
    })
}

/// Reads one coefficient `a_{j1 p1 j2 p2}` at energy sample `sample`.
/// Degrees run from 0 and orders from 1 to `2j + 1`.
#[no_mangle]
pub extern "C" fn scat_amplitude_entry(
    a: *const ScatAmplitude,
    sample: usize,
    j1: usize,
    p1: usize,
    j2: usize,
    p2: usize,
    out_re: *mut f64,
    out_im: *mut f64,
) -> ScatStatus {
    guarded(|| {
        if a.is_null() || out_re.is_null() || out_im.is_null() {
            return ScatStatus::NullArgument;
        }
        let m = &unsafe { &*a }.inner;
        if sample >= m.interval().samples().len() {
            set_error(format!(
                "sample {sample} out of range, matrix has {}",
                m.interval().samples().len()
            ));
            return ScatStatus::InvalidArgument;
        }
        let (i1, i2) = match (HarmonicIndex::new(j1, p1), HarmonicIndex::new(j2, p2)) {
            (Ok(i1), Ok(i2)) if j1 <= m.l_max() && j2 <= m.l_max() => (i1, i2),
            (Err(e), _) | (_, Err(e)) => return fail(e),
            _ => {
                set_error(format!("degree above matrix truncation {}", m.l_max()));
                return ScatStatus::InvalidArgument;
            }
        };
        let z: Complex64 = m.entry(sample, i1, i2);
        unsafe {
            *out_re = z.re;
            *out_im = z.im;
        }
        ScatStatus::Ok
    })
}

/// Weighted coefficient norm at one energy `s`, with weights
/// `((2j + 1) / (e s))^(j + sigma)` on each factor.
#[no_mangle]
pub extern "C" fn scat_amplitude_stefanov_norm(
    a: *const ScatAmplitude,
    s: f64,
    sigma1: f64,
    sigma2: f64,
    out: *mut f64,
) -> ScatStatus {
    guarded(|| {
        if a.is_null() || out.is_null() {
            return ScatStatus::NullArgument;
        }
        match stefanov_norm(&unsafe { &*a }.inner, s, NormWeights::new(sigma1, sigma2)) {
            Ok(v) => {
                unsafe { *out = v };
                ScatStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Interval norm: the weighted sup over coefficients of their maximum
/// modulus across the energy samples.
#[no_mangle]
pub extern "C" fn scat_amplitude_interval_norm(
    a: *const ScatAmplitude,
    sigma1: f64,
    sigma2: f64,
    out: *mut f64,
) -> ScatStatus {
    guarded(|| {
        if a.is_null() || out.is_null() {
            return ScatStatus::NullArgument;
        }
        unsafe { *out = interval_sup_norm(&(*a).inner, NormWeights::new(sigma1, sigma2)) };
        ScatStatus::Ok
    })
}

/// Serializes the amplitude handle to JSON, NUL-terminated and truncated to
/// `cap` bytes. Returns the size the full document needs, including the
/// terminator; call once with `cap = 0` to size a buffer.
#[no_mangle]
pub extern "C" fn scat_amplitude_json(
    a: *const ScatAmplitude,
    buf: *mut c_char,
    cap: usize,
    needed: *mut usize,
) -> ScatStatus {
    guarded(|| {
        if a.is_null() || needed.is_null() {
            return ScatStatus::NullArgument;
        }
        let doc = match serde_json::to_vec(&unsafe { &*a }.inner) {
            Ok(d) => d,
            Err(e) => {
                set_error(e.to_string());
                return ScatStatus::RuntimeError;
            }
        };
        unsafe { *needed = copy_out(&doc, buf, cap) };
        ScatStatus::Ok
    })
}

/// Releases an amplitude handle. Null is ignored.
#[no_mangle]
pub extern "C" fn scat_amplitude_free(a: *mut ScatAmplitude) {
    if !a.is_null() {
        drop(unsafe { Box::from_raw(a) });
    }
}

/// Smallest degree past which the weighted tail envelope
/// `c4 (2l + 1)^(sigma1 + sigma2) 2^(-l)` stays below `delta`.
#[no_mangle]
pub extern "C" fn scat_truncation_degree(
    delta: f64,
    sigma1: f64,
    sigma2: f64,
    c4: f64,
    out: *mut usize,
) -> ScatStatus {
    guarded(|| {
        if out.is_null() {
            return ScatStatus::NullArgument;
        }
        match truncation_degree(delta, NormWeights::new(sigma1, sigma2), c4) {
            Ok(l) => {
                unsafe { *out = l };
                ScatStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn last_error_string() -> String {
        let needed = scat_last_error(std::ptr::null_mut(), 0);
        let mut buf = vec![0_u8; needed];
        scat_last_error(buf.as_mut_ptr().cast(), buf.len());
        String::from_utf8(buf[..needed - 1].to_vec()).unwrap()
    }

    #[test]
    fn version_is_nul_terminated() {
        let p = scat_version();
        let s = unsafe { std::ffi::CStr::from_ptr(p) }.to_str().unwrap();
        assert_eq!(s, env!("CARGO_PKG_VERSION"));
    }

    #[test]
    fn c1_matches_core_and_rejects_bad_args() {
        let mut c1 = 0.0_f64;
        assert_eq!(scat_c1_constant(0.0, 16, &mut c1), ScatStatus::Ok);
        let direct = c1_constant(0.0, VoxelGrid::new(16).unwrap());
        assert_eq!(c1, direct);
        assert_eq!(scat_c1_constant(0.0, 16, std::ptr::null_mut()), ScatStatus::NullArgument);
        assert_eq!(scat_c1_constant(0.0, 0, &mut c1), ScatStatus::InvalidArgument);
        assert!(!last_error_string().is_empty());
    }

    #[test]
    fn bump_outside_half_ball_is_rejected_with_message() {
        let mut p: *mut ScatPotential = std::ptr::null_mut();
        let st = scat_potential_bump(12, 0.4, 0.0, 0.0, 0.3, 1.0, 2, &mut p);
        assert_eq!(st, ScatStatus::InvalidArgument);
        assert!(p.is_null());
        assert!(!last_error_string().is_empty());
    }

    #[test]
    fn amplitude_roundtrip_matches_core() {
        let mut p: *mut ScatPotential = std::ptr::null_mut();
        assert_eq!(
            scat_potential_bump(12, 0.0, 0.0, 0.0, 0.45, 0.5, 2, &mut p),
            ScatStatus::Ok
        );
        let mut sup = 0.0_f64;
        assert_eq!(scat_potential_sup_norm(p, &mut sup), ScatStatus::Ok);
        assert!((sup - 0.5).abs() < 1e-15);

        let mut a: *mut ScatAmplitude = std::ptr::null_mut();
        assert_eq!(scat_amplitude_compute(p, 1.0, 1.0, 1, 0.0, 2, &mut a), ScatStatus::Ok);

        let mut l_max = 0_usize;
        let mut samples = 0_usize;
        assert_eq!(scat_amplitude_l_max(a, &mut l_max), ScatStatus::Ok);
        assert_eq!(scat_amplitude_sample_count(a, &mut samples), ScatStatus::Ok);
        assert_eq!((l_max, samples), (2, 1));

        let v = make_bump(VoxelGrid::new(12).unwrap(), Vec3::new(0.0, 0.0, 0.0), 0.45, 0.5, 2)
            .unwrap();
        let direct = amplitude_matrix(
            &v,
            &EnergyInterval::single(1.0).unwrap(),
            0.0,
            2,
            &SolverConfig::default(),
        )
        .unwrap();
        let (mut re, mut im) = (0.0_f64, 0.0_f64);
        assert_eq!(scat_amplitude_entry(a, 0, 0, 1, 0, 1, &mut re, &mut im), ScatStatus::Ok);
        let want = direct.entry(0, HarmonicIndex::new(0, 1).unwrap(), HarmonicIndex::new(0, 1).unwrap());
        assert_eq!(Complex64::new(re, im), want);

        let mut ffi_norm = 0.0_f64;
        assert_eq!(
            scat_amplitude_stefanov_norm(a, 1.0, 1.5, -0.5, &mut ffi_norm),
            ScatStatus::Ok
        );
        let core_norm = stefanov_norm(&direct, 1.0, NormWeights::new(1.5, -0.5)).unwrap();
        assert_eq!(ffi_norm, core_norm);

        let mut iv = 0.0_f64;
        assert_eq!(scat_amplitude_interval_norm(a, 0.0, 0.0, &mut iv), ScatStatus::Ok);
        assert_eq!(iv, interval_sup_norm(&direct, NormWeights::new(0.0, 0.0)));

        assert_eq!(
            scat_amplitude_entry(a, 0, 3, 1, 0, 1, &mut re, &mut im),
            ScatStatus::InvalidArgument,
            "degree above truncation is refused"
        );
        assert_eq!(
            scat_amplitude_entry(a, 1, 0, 1, 0, 1, &mut re, &mut im),
            ScatStatus::InvalidArgument,
            "sample out of range is refused"
        );

        scat_amplitude_free(a);
        scat_potential_free(p);
    }

    #[test]
    fn json_export_sizes_then_fills() {
        let mut p: *mut ScatPotential = std::ptr::null_mut();
        assert_eq!(
            scat_potential_bump(10, 0.0, 0.0, 0.0, 0.4, 0.3, 2, &mut p),
            ScatStatus::Ok
        );
        let mut a: *mut ScatAmplitude = std::ptr::null_mut();
        assert_eq!(scat_amplitude_compute(p, 1.0, 1.0, 1, 0.0, 1, &mut a), ScatStatus::Ok);

        let mut needed = 0_usize;
        assert_eq!(scat_amplitude_json(a, std::ptr::null_mut(), 0, &mut needed), ScatStatus::Ok);
        assert!(needed > 2);
        let mut buf = vec![0_u8; needed];
        assert_eq!(
            scat_amplitude_json(a, buf.as_mut_ptr().cast(), buf.len(), &mut needed),
            ScatStatus::Ok
        );
        let text = std::str::from_utf8(&buf[..needed - 1]).unwrap();
        let parsed: AmplitudeMatrix = serde_json::from_str(text).unwrap();
        assert_eq!(parsed.l_max(), 1);

        scat_amplitude_free(a);
        scat_potential_free(p);
    }

    #[test]
    fn truncation_degree_matches_core() {
        let mut l = 0_usize;
        assert_eq!(scat_truncation_degree(0.01, 0.0, 0.0, 1.0, &mut l), ScatStatus::Ok);
        assert_eq!(l, 7);
        assert_eq!(
            scat_truncation_degree(-1.0, 0.0, 0.0, 1.0, &mut l),
            ScatStatus::InvalidArgument
        );
    }

    #[test]
    fn scaled_copy_is_independent() {
        let mut p: *mut ScatPotential = std::ptr::null_mut();
        assert_eq!(
            scat_potential_bump(10, 0.0, 0.0, 0.0, 0.4, 1.0, 2, &mut p),
            ScatStatus::Ok
        );
        let mut half: *mut ScatPotential = std::ptr::null_mut();
        assert_eq!(scat_potential_scaled(p, 0.5, &mut half), ScatStatus::Ok);
        let mut sup = 0.0_f64;
        assert_eq!(scat_potential_sup_norm(half, &mut sup), ScatStatus::Ok);
        assert!((sup - 0.5).abs() < 1e-15);
        scat_potential_free(p);
        let mut sup_after = 0.0_f64;
        assert_eq!(scat_potential_sup_norm(half, &mut sup_after), ScatStatus::Ok);
        assert_eq!(sup_after, sup);
        scat_potential_free(half);
    }

    #[test]
    fn generated_header_declares_the_surface() {
        let header = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("include/scatlab.h");
        let text = std::fs::read_to_string(header).unwrap();
        for name in [
            "scat_last_error",
            "scat_potential_bump",
            "scat_amplitude_compute",
            "scat_amplitude_entry",
            "scat_amplitude_stefanov_norm",
            "scat_truncation_degree",
            "SCAT_STATUS_OK",
            "SCAT_STATUS_INVALID_ARGUMENT",
            "typedef struct ScatPotential ScatPotential;",
            "typedef struct ScatAmplitude ScatAmplitude;",
        ] {
            assert!(text.contains(name), "header lacks {name}");
        }
    }
}
