//! C ABI over `sgmix`.
//!
//! Every fallible function returns an [`SgmixStatus`]; on failure the
//! message is kept per thread and read back with
//! [`sgmix_last_error_message`]. Objects cross the boundary as opaque
//! handles created by `*_new` functions and released by the matching
//! `*_free`. Panics never unwind into C.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;
use std::slice;

use sgmix::bench::{benchmark_sampler, regression_convergence, summarize_fit, Bands, ScalePriorSpec};
use sgmix::diagnostics::{ess, geweke_z, run_until_converged};
use sgmix::kernels::{eval_symmlet8, MotherFunction, ShearletAtom, ShearletMatrix};
use sgmix::measures::{sample_sga, sga_moment, SGaParams};
use sgmix::models::{radon_gaussian, GaussianRegression, RegressionDataset};
use sgmix::{Error, SimRng};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SgmixStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Numeric = 3,
    DegenerateInput = 4,
    Io = 5,
    Parse = 6,
    Convergence = 7,
    Panic = 8,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let mut m = msg.into();
    m.retain(|c| c != '\0');
    let c = CString::new(m).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> SgmixStatus {
    match e {
        Error::Parameter(_) | Error::Config(_) | Error::IndexOutOfRange { .. } | Error::Unsupported(_) => {
            SgmixStatus::InvalidArgument
        }
        Error::Numeric(_) => SgmixStatus::Numeric,
        Error::DegenerateSeries(_) | Error::DegenerateSignal(_) => SgmixStatus::DegenerateInput,
        Error::Io { .. } => SgmixStatus::Io,
        Error::Parse { .. } => SgmixStatus::Parse,
        Error::Convergence { .. } => SgmixStatus::Convergence,
    }
}

/// Runs `f`, recording any error or panic.
fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SgmixStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SgmixStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SgmixStatus::Panic
        }
    }
}

struct Fail(SgmixStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(SgmixStatus::NullPointer, format!("{what} is null"))
}

unsafe fn input<'a>(p: *const f64, n: usize, what: &str) -> Result<&'a [f64], Fail> {
    if n == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts(p, n))
}

unsafe fn output<'a>(p: *mut f64, n: usize, what: &str) -> Result<&'a mut [f64], Fail> {
    if n == 0 {
        return Ok(&mut []);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(slice::from_raw_parts_mut(p, n))
}

unsafe fn out_scalar<'a>(p: *mut f64, what: &str) -> Result<&'a mut f64, Fail> {
    p.as_mut().ok_or_else(|| null(what))
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len - 1` bytes) and returns the full message
/// length without the terminator. Returns 0 when no error is recorded.
///
/// # Safety
/// `buf` must be null or point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn sgmix_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            return 0;
        };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let k = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, k);
            *buf.add(k) = 0;
        }
        bytes.len()
    })
}

/// Seeded random number generator.
pub struct SgmixRng {
    inner: SimRng,
}

/// Returns a generator for stream `stream` of master seed `seed`. Never null.
#[no_mangle]
pub extern "C" fn sgmix_rng_new(seed: u64, stream: u64) -> *mut SgmixRng {
    Box::into_raw(Box::new(SgmixRng {
        inner: SimRng::stream(seed, stream),
    }))
}

/// # Safety
/// `rng` must be null or come from [`sgmix_rng_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn sgmix_rng_free(rng: *mut SgmixRng) {
    if !rng.is_null() {
        drop(Box::from_raw(rng));
    }
}

/// Raw moment `E[X^order]` of `SGa(a, b)`.
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn sgmix_sga_moment(a: f64, b: f64, order: u32, out: *mut f64) -> SgmixStatus {
    guard(|| {
        let out = out_scalar(out, "out")?;
        *out = sga_moment(&SGaParams::new(a, b)?, order);
        Ok(())
    })
}

/// Fills `out[0..n]` with `SGa(a, b)` draws.
///
/// # Safety
/// `rng` must be a live handle and `out` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn sgmix_sga_sample(
    rng: *mut SgmixRng,
    a: f64,
    b: f64,
    out: *mut f64,
    n: usize,
) -> SgmixStatus {
    guard(|| {
        let rng = rng.as_mut().ok_or_else(|| null("rng"))?;
        let params = SGaParams::new(a, b)?;
        for v in output(out, n, "out")? {
            *v = sample_sga(&params, &mut rng.inner);
        }
        Ok(())
    })
}

/// Symmlet-8 mother wavelet at `x[0..n]`.
///
/// # Safety
/// `x` and `out` must hold `n` doubles.
#[no_mangle]
pub unsafe extern "C" fn sgmix_symmlet8(x: *const f64, out: *mut f64, n: usize) -> SgmixStatus {
    guard(|| {
        let x = input(x, n, "x")?;
        for (o, &v) in output(out, n, "out")?.iter_mut().zip(x) {
            *o = eval_symmlet8(v);
        }
        Ok(())
    })
}

/// Radon transform at `(r, theta)` of the Gaussian atom centred at
/// `(mu_x, mu_y)` with shearlet dilation parameters `a > 0` and `s`.
///
/// # Safety
/// `out` must point to a writable double.
#[no_mangle]
pub unsafe extern "C" fn sgmix_radon_gaussian(
    mu_x: f64,
    mu_y: f64,
    a: f64,
    s: f64,
    r: f64,
    theta: f64,
    out: *mut f64,
) -> SgmixStatus {
    guard(|| {
        let out = out_scalar(out, "out")?;
        let atom = ShearletAtom {
            mu: [mu_x, mu_y],
            shear: ShearletMatrix { a, s },
        };
        *out = radon_gaussian(&atom, r, theta)?;
        Ok(())
    })
}

/// Geweke Z statistic comparing the first `frac_a` and last `frac_b` of
/// `series[0..n]`.
///
/// # Safety
/// `series` must hold `n` doubles and `z` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgmix_geweke_z(
    series: *const f64,
    n: usize,
    frac_a: f64,
    frac_b: f64,
    z: *mut f64,
) -> SgmixStatus {
    guard(|| {
        let z = out_scalar(z, "z")?;
        *z = geweke_z(input(series, n, "series")?, frac_a, frac_b)?.z;
        Ok(())
    })
}

/// Effective sample size of `series[0..n]`.
///
/// # Safety
/// `series` must hold `n` doubles and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgmix_ess(series: *const f64, n: usize, out: *mut f64) -> SgmixStatus {
    guard(|| {
        let out = out_scalar(out, "out")?;
        *out = ess(input(series, n, "series")?)?;
        Ok(())
    })
}

/// Posterior summaries of a univariate regression fit.
pub struct SgmixFit {
    bands: Bands,
    sigma2: f64,
}

/// Fits `y = f(x) + noise` with a Gaussian location-scale mixture and
/// default regression settings, `p` particles and at most `max_iterations`
/// sweeps. On success `*fit` receives a handle to release with
/// [`sgmix_fit_free`].
///
/// # Safety
/// `x` and `y` must hold `n` doubles and `fit` must be writable.
#[no_mangle]
pub unsafe extern "C" fn sgmix_fit_regression(
    x: *const f64,
    y: *const f64,
    n: usize,
    p: usize,
    max_iterations: usize,
    seed: u64,
    fit: *mut *mut SgmixFit,
) -> SgmixStatus {
    guard(|| {
        let slot = fit.as_mut().ok_or_else(|| null("fit"))?;
        *slot = ptr::null_mut();
        let xs = input(x, n, "x")?.to_vec();
        let ys = input(y, n, "y")?.to_vec();
        let mut sampler = benchmark_sampler();
        sampler.p = p;
        let mut conv = regression_convergence();
        conv.max_iterations = max_iterations;
        let prior = ScalePriorSpec::default();
        let data = RegressionDataset::univariate(xs.clone(), ys)?;
        let model = GaussianRegression::new(data, prior.kernel(MotherFunction::Gaussian))?;
        let mut rng = SimRng::seed_from(seed);
        let run = run_until_converged(&sampler, prior.prior()?, &model, &mut rng, &conv)?;
        let summary = summarize_fit(&run, xs, 0.95)?;
        *slot = Box::into_raw(Box::new(SgmixFit {
            bands: summary.bands,
            sigma2: summary.mean_sigma2,
        }));
        Ok(())
    })
}

/// Number of design points in the fit, 0 for a null handle.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sgmix_fit_len(fit: *const SgmixFit) -> usize {
    fit.as_ref().map_or(0, |f| f.bands.mean.len())
}

/// Copies the posterior mean and the 95% band, each of length
/// [`sgmix_fit_len`]. Any output pointer may be null to skip it.
///
/// # Safety
/// `fit` must be a live handle; non-null outputs must hold `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn sgmix_fit_curves(
    fit: *const SgmixFit,
    mean: *mut f64,
    lower: *mut f64,
    upper: *mut f64,
    len: usize,
) -> SgmixStatus {
    guard(|| {
        let f = fit.as_ref().ok_or_else(|| null("fit"))?;
        let b = &f.bands;
        if len != b.mean.len() {
            return Err(Fail(
                SgmixStatus::InvalidArgument,
                format!("buffers hold {len} values, fit has {}", b.mean.len()),
            ));
        }
        for (dst, src) in [(mean, &b.mean), (lower, &b.lower), (upper, &b.upper)] {
            if !dst.is_null() {
                slice::from_raw_parts_mut(dst, len).copy_from_slice(src);
            }
        }
        Ok(())
    })
}

/// Posterior mean of the noise variance.
///
/// # Safety
/// `fit` must be null or a live handle.
#[no_mangle]
pub unsafe extern "C" fn sgmix_fit_sigma2(fit: *const SgmixFit) -> f64 {
    fit.as_ref().map_or(f64::NAN, |f| f.sigma2)
}

/// # Safety
/// `fit` must be null or come from [`sgmix_fit_regression`] and not be
/// freed twice.
#[no_mangle]
pub unsafe extern "C" fn sgmix_fit_free(fit: *mut SgmixFit) {
    if !fit.is_null() {
        drop(Box::from_raw(fit));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn last_error() -> String {
        let mut buf = vec![0 as c_char; 256];
        let n = unsafe { sgmix_last_error_message(buf.as_mut_ptr(), buf.len()) };
        let k = n.min(255);
        buf[..k].iter().map(|&c| c as u8 as char).collect()
    }

    #[test]
    fn moment_and_error_path() {
        let mut m = 0.0;
        assert_eq!(unsafe { sgmix_sga_moment(1.0, 1.0, 2, &mut m) }, SgmixStatus::Ok);
        assert!((m - 2.0).abs() < 1e-12);
        assert_eq!(
            unsafe { sgmix_sga_moment(-1.0, 1.0, 2, &mut m) },
            SgmixStatus::InvalidArgument
        );
        assert!(!last_error().is_empty());
        assert_eq!(
            unsafe { sgmix_sga_moment(1.0, 1.0, 2, ptr::null_mut()) },
            SgmixStatus::NullPointer
        );
        assert!(last_error().contains("out"));
    }

    #[test]
    fn truncated_error_message() {
        unsafe { sgmix_ess(ptr::null(), 10, ptr::null_mut()) };
        let mut buf = [1 as c_char; 4];
        let n = unsafe { sgmix_last_error_message(buf.as_mut_ptr(), 4) };
        assert!(n > 3);
        assert_eq!(buf[3], 0);
    }

    #[test]
    fn rng_handle_reproducible() {
        let a = sgmix_rng_new(7, 0);
        let b = sgmix_rng_new(7, 0);
        let mut xa = [0.0; 16];
        let mut xb = [0.0; 16];
        unsafe {
            assert_eq!(sgmix_sga_sample(a, 1.0, 1.0, xa.as_mut_ptr(), 16), SgmixStatus::Ok);
            assert_eq!(sgmix_sga_sample(b, 1.0, 1.0, xb.as_mut_ptr(), 16), SgmixStatus::Ok);
            sgmix_rng_free(a);
            sgmix_rng_free(b);
            sgmix_rng_free(ptr::null_mut());
        }
        assert_eq!(xa, xb);
        assert_eq!(
            unsafe { sgmix_sga_sample(ptr::null_mut(), 1.0, 1.0, xa.as_mut_ptr(), 16) },
            SgmixStatus::NullPointer
        );
    }

    #[test]
    fn degenerate_radon_atom() {
        let mut v = 0.0;
        let st = unsafe { sgmix_radon_gaussian(0.0, 0.0, -1.0, 0.0, 0.0, 0.0, &mut v) };
        assert_eq!(st, SgmixStatus::Numeric);
        let st = unsafe { sgmix_radon_gaussian(0.0, 0.0, 1.0, 0.0, 0.0, 0.0, &mut v) };
        assert_eq!(st, SgmixStatus::Ok);
        // isotropic unit Gaussian through its centre
        assert!((v - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-12);
    }
}
