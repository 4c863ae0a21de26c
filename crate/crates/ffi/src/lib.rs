//! C ABI over `rialign`.
//!
//! Every fallible call returns a [`RiaStatus`]; on failure a message is kept
//! per thread and can be read with [`ria_last_error`]. Handles are opaque and
//! must be released with the matching `*_free` function. Indices are 0-based.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use nalgebra::DMatrix;
use num_traits::ToPrimitive;
use rialign::directions::DEFAULT_DIRECTION_CAP;
use rialign::lattice::DEFAULT_ENUM_CAP;
use rialign::regions::Rational;
use rialign::{
    direction_counts, families, inner_region, min_distance, outer_region, outer_total_dof,
    sample_channel, verify_alignment, ChannelMatrix, ConfigFile, DofRegion, Error, NetworkConfig, Scheme,
    StreamAllocation,
};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RiaStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    CapExceeded = 3,
    ParseError = 4,
    Overflow = 5,
    Internal = 6,
}

/// A validated network configuration with its seed.
pub struct RiaConfig {
    config: NetworkConfig,
    seed: u64,
}

pub struct RiaChannel(ChannelMatrix);

pub struct RiaRegion(DofRegion);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: impl Into<String>) {
    let text = msg.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(text).ok());
}

fn status_of(e: &Error) -> RiaStatus {
    match e {
        Error::CapExceeded { .. } => RiaStatus::CapExceeded,
        Error::Json(_) => RiaStatus::ParseError,
        Error::Overflow(_) => RiaStatus::Overflow,
        Error::Io(_) => RiaStatus::Internal,
        _ => RiaStatus::InvalidArgument,
    }
}

fn fail(e: Error) -> RiaStatus {
    set_error(e.to_string());
    status_of(&e)
}

fn null(what: &str) -> RiaStatus {
    set_error(format!("{what} is null"));
    RiaStatus::NullPointer
}

/// Run `f`, turning panics into [`RiaStatus::Internal`].
fn guard(f: impl FnOnce() -> RiaStatus) -> RiaStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(status) => status,
        Err(_) => {
            set_error("internal panic");
            RiaStatus::Internal
        }
    }
}

fn rational_parts(r: &Rational, num: *mut i64, den: *mut i64) -> RiaStatus {
    match (r.numer().to_i64(), r.denom().to_i64()) {
        (Some(a), Some(b)) => {
            unsafe {
                *num = a;
                *den = b;
            }
            RiaStatus::Ok
        }
        _ => {
            set_error(format!("{r} does not fit in 64 bits"));
            RiaStatus::Overflow
        }
    }
}

/// Message of the last failed call on this thread, or null. Valid until the
/// next failing call on the same thread.
#[no_mangle]
pub extern "C" fn ria_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Parse a JSON configuration.
///
/// # Safety
/// `json` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn ria_config_from_json(json: *const c_char, out: *mut *mut RiaConfig) -> RiaStatus {
    guard(|| {
        if json.is_null() {
            return null("json");
        }
        if out.is_null() {
            return null("out");
        }
        let text = match CStr::from_ptr(json).to_str() {
            Ok(t) => t,
            Err(_) => {
                set_error("configuration is not UTF-8");
                return RiaStatus::ParseError;
            }
        };
        let parsed = ConfigFile::from_json(text).and_then(|f| Ok((f.to_config()?, f.seed)));
        match parsed {
            Ok((config, seed)) => {
                *out = Box::into_raw(Box::new(RiaConfig { config, seed }));
                RiaStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `config` must come from [`ria_config_from_json`] or be null.
#[no_mangle]
pub unsafe extern "C" fn ria_config_free(config: *mut RiaConfig) {
    if !config.is_null() {
        drop(Box::from_raw(config));
    }
}

/// Seed stored in the configuration file.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ria_config_seed(config: *const RiaConfig) -> u64 {
    config.as_ref().map_or(0, |c| c.seed)
}

/// # Safety
/// `config` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ria_channel_sample(config: *const RiaConfig, seed: u64, out: *mut *mut RiaChannel) -> RiaStatus {
    guard(|| {
        let Some(c) = config.as_ref() else { return null("config") };
        if out.is_null() {
            return null("out");
        }
        *out = Box::into_raw(Box::new(RiaChannel(sample_channel(&c.config, seed))));
        RiaStatus::Ok
    })
}

/// Coefficient from transmit antenna `t` of transmitter `k` to receive antenna
/// `r` of receiver `j`.
///
/// # Safety
/// `channel` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ria_channel_get(
    channel: *const RiaChannel,
    j: usize,
    k: usize,
    r: usize,
    t: usize,
    out: *mut f64,
) -> RiaStatus {
    guard(|| {
        let Some(ch) = channel.as_ref() else { return null("channel") };
        if out.is_null() {
            return null("out");
        }
        if j >= ch.0.num_rx() || k >= ch.0.num_tx() {
            set_error(format!("link ({j}, {k}) out of range"));
            return RiaStatus::InvalidArgument;
        }
        match catch_unwind(|| ch.0.h(j, k, r, t)) {
            Ok(v) => {
                *out = v;
                RiaStatus::Ok
            }
            Err(_) => {
                set_error(format!("antenna ({r}, {t}) out of range"));
                RiaStatus::InvalidArgument
            }
        }
    })
}

/// # Safety
/// `channel` must come from [`ria_channel_sample`] or be null.
#[no_mangle]
pub unsafe extern "C" fn ria_channel_free(channel: *mut RiaChannel) {
    if !channel.is_null() {
        drop(Box::from_raw(channel));
    }
}

/// Number of direction families: 1 for interference networks, J for X networks.
///
/// # Safety
/// `config` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ria_family_count(config: *const RiaConfig) -> usize {
    config.as_ref().map_or(0, |c| families(&c.config).len())
}

/// Base and extended direction counts of one family.
///
/// # Safety
/// `config` must be a live handle; `d` and `d_ext` writable.
#[no_mangle]
pub unsafe extern "C" fn ria_direction_counts(
    config: *const RiaConfig,
    n: u32,
    family: usize,
    d: *mut u64,
    d_ext: *mut u64,
) -> RiaStatus {
    guard(|| {
        let Some(c) = config.as_ref() else { return null("config") };
        if d.is_null() || d_ext.is_null() {
            return null("output");
        }
        let counts = match direction_counts(&c.config, n) {
            Ok(v) => v,
            Err(e) => return fail(e),
        };
        let Some(fc) = counts.get(family) else {
            set_error(format!("family {family} out of range 0..{}", counts.len()));
            return RiaStatus::InvalidArgument;
        };
        match (fc.base.to_u64(), fc.extended.to_u64()) {
            (Some(a), Some(b)) => {
                *d = a;
                *d_ext = b;
                RiaStatus::Ok
            }
            _ => {
                set_error(format!("D={}, D'={} exceed 64 bits", fc.base, fc.extended));
                RiaStatus::Overflow
            }
        }
    })
}

/// Build the scheme for one stream per message and count alignment
/// violations over all receivers.
///
/// # Safety
/// `config` must be a live handle and `violations` writable.
#[no_mangle]
pub unsafe extern "C" fn ria_verify_alignment(
    config: *const RiaConfig,
    n: u32,
    seed: u64,
    violations: *mut u64,
) -> RiaStatus {
    guard(|| {
        let Some(c) = config.as_ref() else { return null("config") };
        if violations.is_null() {
            return null("violations");
        }
        let cfg = &c.config;
        let messages = match cfg.kind() {
            rialign::NetworkKind::X => cfg.num_rx() * cfg.num_tx(),
            _ => cfg.num_tx(),
        };
        let run = || -> rialign::Result<u64> {
            let allocation = StreamAllocation {
                rho: 1,
                dbar: vec![1; messages],
                dof_point: Vec::new(),
            };
            let channel = sample_channel(cfg, seed);
            let scheme = Scheme::new(cfg, &channel, n, &allocation, seed, DEFAULT_DIRECTION_CAP)?;
            let mut total = 0;
            for rx in 0..cfg.num_rx() {
                total += verify_alignment(&scheme, rx)?.violations.len() as u64;
            }
            Ok(total)
        };
        match run() {
            Ok(v) => {
                *violations = v;
                RiaStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `config` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ria_inner_region(config: *const RiaConfig, out: *mut *mut RiaRegion) -> RiaStatus {
    guard(|| {
        let Some(c) = config.as_ref() else { return null("config") };
        if out.is_null() {
            return null("out");
        }
        match inner_region(&c.config) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(RiaRegion(r)));
                RiaStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Outer region of the `K`-user interference channel with `M` and `N` antennas.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn ria_outer_region(k: usize, m: usize, n: usize, out: *mut *mut RiaRegion) -> RiaStatus {
    guard(|| {
        if out.is_null() {
            return null("out");
        }
        match outer_region(k, m, n) {
            Ok(r) => {
                *out = Box::into_raw(Box::new(RiaRegion(r)));
                RiaStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// # Safety
/// `region` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ria_region_dim(region: *const RiaRegion) -> usize {
    region.as_ref().map_or(0, |r| r.0.dim())
}

/// Membership of the point `nums[i] / dens[i]`.
///
/// # Safety
/// `nums` and `dens` must hold `len` values; `region` live; `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ria_region_contains(
    region: *const RiaRegion,
    nums: *const i64,
    dens: *const i64,
    len: usize,
    out: *mut bool,
) -> RiaStatus {
    guard(|| {
        let Some(r) = region.as_ref() else { return null("region") };
        if nums.is_null() || dens.is_null() || out.is_null() {
            return null("argument");
        }
        let nums = std::slice::from_raw_parts(nums, len);
        let dens = std::slice::from_raw_parts(dens, len);
        if dens.contains(&0) {
            set_error("zero denominator");
            return RiaStatus::InvalidArgument;
        }
        let point: Vec<Rational> = nums
            .iter()
            .zip(dens)
            .map(|(&a, &b)| Rational::new(a.into(), b.into()))
            .collect();
        match r.0.contains(&point) {
            Ok(v) => {
                *out = v;
                RiaStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}

/// Largest total DoF over the region, as `num / den`.
///
/// # Safety
/// `region` must be live; `num` and `den` writable.
#[no_mangle]
pub unsafe extern "C" fn ria_region_maximize_sum(region: *const RiaRegion, num: *mut i64, den: *mut i64) -> RiaStatus {
    guard(|| {
        let Some(r) = region.as_ref() else { return null("region") };
        if num.is_null() || den.is_null() {
            return null("output");
        }
        match r.0.maximize_sum() {
            Ok((v, _)) => rational_parts(&v, num, den),
            Err(e) => fail(e),
        }
    })
}

/// JSON form of the region; free the string with [`ria_string_free`].
///
/// # Safety
/// `region` must be live and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn ria_region_to_json(region: *const RiaRegion, out: *mut *mut c_char) -> RiaStatus {
    guard(|| {
        let Some(r) = region.as_ref() else { return null("region") };
        if out.is_null() {
            return null("out");
        }
        match CString::new(r.0.to_json().to_string()) {
            Ok(s) => {
                *out = s.into_raw();
                RiaStatus::Ok
            }
            Err(_) => {
                set_error("JSON contains NUL");
                RiaStatus::Internal
            }
        }
    })
}

/// # Safety
/// `region` must come from a region constructor or be null.
#[no_mangle]
pub unsafe extern "C" fn ria_region_free(region: *mut RiaRegion) {
    if !region.is_null() {
        drop(Box::from_raw(region));
    }
}

/// # Safety
/// `s` must come from this library or be null.
#[no_mangle]
pub unsafe extern "C" fn ria_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Outer total-DoF bound and the zero-forcing value, each as `num / den`.
///
/// # Safety
/// All outputs must be writable.
#[no_mangle]
pub unsafe extern "C" fn ria_outer_total_dof(
    k: usize,
    m: usize,
    n: usize,
    outer_num: *mut i64,
    outer_den: *mut i64,
    zf_num: *mut i64,
    zf_den: *mut i64,
) -> RiaStatus {
    guard(|| {
        if outer_num.is_null() || outer_den.is_null() || zf_num.is_null() || zf_den.is_null() {
            return null("output");
        }
        match outer_total_dof(k, m, n) {
            Ok(t) => match rational_parts(&t.outer, outer_num, outer_den) {
                RiaStatus::Ok => rational_parts(&t.zero_forcing, zf_num, zf_den),
                s => s,
            },
            Err(e) => fail(e),
        }
    })
}

/// Minimum of `‖A q‖` over nonzero integer differences `q ∈ [-2Q, 2Q]^cols`.
/// `a` is row-major.
///
/// # Safety
/// `a` must hold `rows * cols` values; `d_min` writable.
#[no_mangle]
pub unsafe extern "C" fn ria_min_distance(
    a: *const f64,
    rows: usize,
    cols: usize,
    q: u64,
    d_min: *mut f64,
) -> RiaStatus {
    guard(|| {
        if a.is_null() || d_min.is_null() {
            return null("argument");
        }
        let Some(len) = rows.checked_mul(cols) else {
            set_error("matrix size overflows");
            return RiaStatus::Overflow;
        };
        let m = DMatrix::from_row_slice(rows, cols, std::slice::from_raw_parts(a, len));
        match min_distance(&m, q, 0.5, DEFAULT_ENUM_CAP) {
            Ok(r) => {
                *d_min = r.d_min;
                RiaStatus::Ok
            }
            Err(e) => fail(e),
        }
    })
}
