//! C ABI over the despeckle library.
//!
//! Rasters cross the boundary as opaque `DsRaster` handles owned by the
//! caller and released with `ds_raster_free`. Every fallible call returns a
//! `DsStatus`; on failure `ds_last_error` describes the cause for the
//! calling thread. Panics never unwind into C: they surface as
//! `DS_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::ptr;

use despeckle::divergence::{chi2_survival, sidak_level};
use despeckle::metrics::MetricReport;
use despeckle::{
    filter_image, lee_filter, mle, read_raster, write_raster, DistanceKind, Error, FilterSpec, LeeSpec,
    PhantomGeometry, PixelSample, Raster, RasterFormat, SharedLooks, TestConfig, Window,
};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsStatus {
    Ok = 0,
    InvalidArgument = 1,
    OutOfBounds = 2,
    Domain = 3,
    Degenerate = 4,
    Format = 5,
    Consistency = 6,
    Io = 7,
    NullPointer = 8,
    Panic = 9,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsFormat {
    /// Pick from the file extension.
    Auto = 0,
    Ascii = 1,
    RawF64 = 2,
    Pgm16 = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsDistance {
    Hellinger = 0,
    KullbackLeibler = 1,
    Renyi = 2,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DsSharedLooks {
    Central = 0,
    Pooled = 1,
}

/// Settings of the stochastic-distance filter. Start from
/// `ds_filter_params_default`.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DsFilterParams {
    pub distance: DsDistance,
    /// 5 or 7.
    pub window: u32,
    /// Significance for the eight tests as a whole.
    pub alpha: f64,
    /// Rényi order, used by `DS_DISTANCE_RENYI` only.
    pub renyi_order: f64,
    /// Degrees of freedom of the reference chi-square law (1 or 2).
    pub dof: u32,
    pub shared_looks: DsSharedLooks,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct DsGammaFit {
    pub looks: f64,
    pub mean: f64,
    /// Non-zero when the looks estimate saturated on a constant sample.
    pub degenerate: u8,
    /// Non-zero when exact zeros were shifted before fitting.
    pub zeros_shifted: u8,
}

/// Quality measures; NaN marks a measure that could not be computed.
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct DsMetrics {
    pub enl: f64,
    pub line_contrast_error: f64,
    pub edge_gradient: f64,
    pub edge_variance: f64,
    pub q_mean: f64,
    pub q_std: f64,
    pub beta_rho: f64,
    pub mae: f64,
    pub mse: f64,
    pub nmse: f64,
    pub dcon: f64,
}

/// Opaque raster handle.
pub struct DsRaster(Raster);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(e: &Error) -> DsStatus {
    match e {
        Error::InvalidArgument(_) => DsStatus::InvalidArgument,
        Error::OutOfBounds { .. } => DsStatus::OutOfBounds,
        Error::Domain(_) => DsStatus::Domain,
        Error::Degenerate(_) => DsStatus::Degenerate,
        Error::Format(_) => DsStatus::Format,
        Error::Consistency(_) => DsStatus::Consistency,
        Error::Io(_) => DsStatus::Io,
    }
}

struct Failure(DsStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Failure {
    Failure(DsStatus::NullPointer, format!("{what} is null"))
}

/// Runs `f`, records any failure for `ds_last_error` and maps it to a status.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => DsStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            DsStatus::Panic
        }
    }
}

unsafe fn raster_ref<'a>(r: *const DsRaster) -> Result<&'a Raster, Failure> {
    r.as_ref().map(|r| &r.0).ok_or_else(|| null("raster"))
}

unsafe fn emit_raster(out: *mut *mut DsRaster, img: Raster) -> Result<(), Failure> {
    if out.is_null() {
        return Err(null("output pointer"));
    }
    *out = Box::into_raw(Box::new(DsRaster(img)));
    Ok(())
}

unsafe fn path_arg<'a>(p: *const c_char) -> Result<&'a Path, Failure> {
    if p.is_null() {
        return Err(null("path"));
    }
    CStr::from_ptr(p)
        .to_str()
        .map(Path::new)
        .map_err(|_| Failure(DsStatus::InvalidArgument, "path is not valid UTF-8".into()))
}

fn resolve_format(path: &Path, f: DsFormat) -> RasterFormat {
    match f {
        DsFormat::Auto => RasterFormat::from_path(path),
        DsFormat::Ascii => RasterFormat::Ascii,
        DsFormat::RawF64 => RasterFormat::RawF64,
        DsFormat::Pgm16 => RasterFormat::Pgm16,
    }
}

/// Message for the last failed call on this thread, or NULL. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn ds_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |c| c.as_ptr()))
}

/// Copies `width * height` row-major values into a new raster.
///
/// # Safety
/// `data` must point to `width * height` readable doubles and `out` to a
/// writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn ds_raster_new(
    width: usize,
    height: usize,
    data: *const f64,
    out: *mut *mut DsRaster,
) -> DsStatus {
    guard(|| {
        if data.is_null() {
            return Err(null("data"));
        }
        let n = width
            .checked_mul(height)
            .ok_or_else(|| Failure(DsStatus::InvalidArgument, "raster size overflows".into()))?;
        let values = std::slice::from_raw_parts(data, n).to_vec();
        emit_raster(out, Raster::new(width, height, values)?)
    })
}

/// Releases a raster. NULL is ignored.
///
/// # Safety
/// `raster` must come from this library and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ds_raster_free(raster: *mut DsRaster) {
    if !raster.is_null() {
        drop(Box::from_raw(raster));
    }
}

/// Width in pixels, 0 for NULL.
///
/// # Safety
/// `raster` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ds_raster_width(raster: *const DsRaster) -> usize {
    raster.as_ref().map_or(0, |r| r.0.width())
}

/// Height in pixels, 0 for NULL.
///
/// # Safety
/// `raster` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ds_raster_height(raster: *const DsRaster) -> usize {
    raster.as_ref().map_or(0, |r| r.0.height())
}

/// Copies the row-major pixel values into `out`, which holds `len` doubles;
/// `len` must equal width × height.
///
/// # Safety
/// `out` must point to `len` writable doubles.
#[no_mangle]
pub unsafe extern "C" fn ds_raster_copy_data(raster: *const DsRaster, out: *mut f64, len: usize) -> DsStatus {
    guard(|| {
        let img = raster_ref(raster)?;
        if out.is_null() {
            return Err(null("output buffer"));
        }
        if len != img.data().len() {
            return Err(Failure(
                DsStatus::InvalidArgument,
                format!("buffer holds {len} values, raster has {}", img.data().len()),
            ));
        }
        std::slice::from_raw_parts_mut(out, len).copy_from_slice(img.data());
        Ok(())
    })
}

/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn ds_raster_read(path: *const c_char, format: DsFormat, out: *mut *mut DsRaster) -> DsStatus {
    guard(|| {
        let path = path_arg(path)?;
        emit_raster(out, read_raster(path, resolve_format(path, format))?)
    })
}

/// # Safety
/// `raster` must be a live handle and `path` a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ds_raster_write(raster: *const DsRaster, path: *const c_char, format: DsFormat) -> DsStatus {
    guard(|| {
        let img = raster_ref(raster)?;
        let path = path_arg(path)?;
        Ok(write_raster(img, path, resolve_format(path, format))?)
    })
}

/// Hellinger test, 5×5 window, α = 0.2, Rényi order 0.5, one degree of
/// freedom, looks from the central block.
#[no_mangle]
pub extern "C" fn ds_filter_params_default() -> DsFilterParams {
    DsFilterParams {
        distance: DsDistance::Hellinger,
        window: 5,
        alpha: 0.2,
        renyi_order: 0.5,
        dof: 1,
        shared_looks: DsSharedLooks::Central,
    }
}

fn filter_spec(p: &DsFilterParams) -> Result<FilterSpec, Failure> {
    let kind = match p.distance {
        DsDistance::Hellinger => DistanceKind::Hellinger,
        DsDistance::KullbackLeibler => DistanceKind::KullbackLeibler,
        DsDistance::Renyi => DistanceKind::Renyi,
    };
    let test = TestConfig {
        renyi_order: p.renyi_order,
        dof: p.dof,
        shared_looks: match p.shared_looks {
            DsSharedLooks::Central => SharedLooks::Central,
            DsSharedLooks::Pooled => SharedLooks::Pooled,
        },
        ..TestConfig::new(kind, p.alpha)
    };
    Ok(FilterSpec::new(Window::from_side(p.window as usize)?, test)?)
}

/// Stochastic-distance filter.
///
/// # Safety
/// `input` must be a live handle, `params` readable and `out` a writable
/// handle slot.
#[no_mangle]
pub unsafe extern "C" fn ds_filter_stochastic(
    input: *const DsRaster,
    params: *const DsFilterParams,
    out: *mut *mut DsRaster,
) -> DsStatus {
    guard(|| {
        let img = raster_ref(input)?;
        let params = params.as_ref().ok_or_else(|| null("params"))?;
        emit_raster(out, filter_image(img, &filter_spec(params)?)?)
    })
}

/// Lee filter with a square window of odd side and the nominal looks of the
/// data.
///
/// # Safety
/// `input` must be a live handle and `out` a writable handle slot.
#[no_mangle]
pub unsafe extern "C" fn ds_filter_lee(
    input: *const DsRaster,
    window: u32,
    looks: f64,
    out: *mut *mut DsRaster,
) -> DsStatus {
    guard(|| {
        let img = raster_ref(input)?;
        emit_raster(out, lee_filter(img, &LeeSpec::new(window as usize, looks)?)?)
    })
}

/// Maximum-likelihood Gamma fit of `n` values.
///
/// # Safety
/// `values` must point to `n` readable doubles and `out` be writable.
#[no_mangle]
pub unsafe extern "C" fn ds_gamma_mle(values: *const f64, n: usize, out: *mut DsGammaFit) -> DsStatus {
    guard(|| {
        if values.is_null() {
            return Err(null("values"));
        }
        let out = out.as_mut().ok_or_else(|| null("output"))?;
        let sample = PixelSample::new(std::slice::from_raw_parts(values, n).to_vec())?;
        let fit = mle(&sample)?;
        *out = DsGammaFit {
            looks: fit.params.looks(),
            mean: fit.params.mean(),
            degenerate: fit.degenerate.into(),
            zeros_shifted: fit.zeros_shifted.into(),
        };
        Ok(())
    })
}

/// Per-test level keeping `num_tests` tests at overall level `alpha`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ds_sidak_level(alpha: f64, num_tests: u32, out: *mut f64) -> DsStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("output"))?;
        *out = sidak_level(alpha, num_tests)?;
        Ok(())
    })
}

/// Upper tail of the chi-square law with `dof` degrees of freedom at `s`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ds_chi2_survival(s: f64, dof: u32, out: *mut f64) -> DsStatus {
    guard(|| {
        let out = out.as_mut().ok_or_else(|| null("output"))?;
        *out = chi2_survival(s, dof)?;
        Ok(())
    })
}

/// Compares `test` with `reference`. With `standard_phantom` non-zero the
/// reference is taken as a phantom in the standard square layout, which
/// adds the ENL, line and edge measures.
///
/// # Safety
/// Both rasters must be live handles and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ds_evaluate(
    reference: *const DsRaster,
    test: *const DsRaster,
    standard_phantom: u8,
    out: *mut DsMetrics,
) -> DsStatus {
    guard(|| {
        let reference = raster_ref(reference)?;
        let test = raster_ref(test)?;
        let out = out.as_mut().ok_or_else(|| null("output"))?;
        if !reference.same_shape(test) {
            return Err(Failure(DsStatus::InvalidArgument, "rasters differ in size".into()));
        }
        let report = if standard_phantom != 0 {
            if reference.width() != reference.height() {
                return Err(Failure(DsStatus::InvalidArgument, "the standard phantom is square".into()));
            }
            let geom = PhantomGeometry::standard(reference.width())?;
            MetricReport::with_ground_truth(reference, test, &geom)
        } else {
            MetricReport::compare(reference, test)
        };
        let v = |x: Option<f64>| x.unwrap_or(f64::NAN);
        *out = DsMetrics {
            enl: v(report.enl),
            line_contrast_error: v(report.line_contrast_error),
            edge_gradient: v(report.edge_gradient),
            edge_variance: v(report.edge_variance),
            q_mean: v(report.q_mean),
            q_std: v(report.q_std),
            beta_rho: v(report.beta_rho),
            mae: v(report.mae),
            mse: v(report.mse),
            nmse: v(report.nmse),
            dcon: v(report.dcon),
        };
        Ok(())
    })
}
