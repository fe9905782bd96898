//! C interface. Every function returns an [`SsfmStatus`]; on failure the message
//! is available from [`ssfm_last_error_message`] on the same thread.
//!
//! Coefficient arrays are interleaved `re, im` pairs in grid order. Grid order
//! runs over `{-K..K-1}^d` with the last axis fastest; see [`ssfm_grid_mode`].

use std::cell::RefCell;
use std::ffi::{c_char, CStr};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use num_complex::Complex64;
use ssfm_core::spectral::{orbital_distance, Grid, Mode, SpectralField};
use ssfm_core::stability::resonance::{check_assumption2, ResonanceParams, S2};
use ssfm_core::stability::{build_frequency_table, cfl_max_h, check_assumption1, FrequencyTable};
use ssfm_core::{Error, SplitStepper, SplitVariant, StepScheme};

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SsfmStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidParameter = 2,
    SizeMismatch = 3,
    OutOfRange = 4,
    /// Linear stability or a frequency definition fails for the given parameters.
    Unstable = 5,
    /// The trajectory left the finite numbers.
    BlowUp = 6,
    Internal = 7,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SsfmScheme {
    LieTrotter = 0,
    StrangLinearOutside = 1,
    StrangNonlinearOutside = 2,
}

impl From<SsfmScheme> for SplitVariant {
    fn from(s: SsfmScheme) -> Self {
        match s {
            SsfmScheme::LieTrotter => SplitVariant::LieTrotter,
            SsfmScheme::StrangLinearOutside => SplitVariant::StrangLinearOutside,
            SsfmScheme::StrangNonlinearOutside => SplitVariant::StrangNonlinearOutside,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SsfmLinearReport {
    pub holds: bool,
    pub c1: f64,
    /// Grid-order index of the mode with the smallest margin.
    pub worst_index: usize,
}

#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct SsfmResonanceParams {
    pub n: u32,
    pub c2: f64,
    pub delta2: f64,
    /// `s2 = s2_value * N` when set, `s2 = s2_value` otherwise.
    pub s2_per_n: bool,
    pub s2_value: f64,
    pub eps_hat: f64,
    pub exhaustive: bool,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct SsfmResonanceReport {
    pub holds: bool,
    /// False when some frequency needed by the check is undefined.
    pub available: bool,
    pub part_a_holds: bool,
    pub part_b_holds: bool,
    pub part_c_holds: bool,
    pub classes: usize,
    pub cells: usize,
    pub vectors_checked: u64,
    pub near_resonances: u64,
    pub cell_vectors_checked: u64,
    /// `max |varpi_j - omega_j|`, NaN when not computed.
    pub frequency_deviation: f64,
}

/// Opaque table of numerical frequencies.
pub struct SsfmFrequencyTable(FrequencyTable);

/// Opaque split-step integrator state.
pub struct SsfmSimulation {
    stepper: SplitStepper,
}

thread_local! {
    static LAST_ERROR: RefCell<String> = const { RefCell::new(String::new()) };
}

fn set_error(msg: impl Into<String>) {
    LAST_ERROR.with(|e| *e.borrow_mut() = msg.into());
}

fn status_of(e: &Error) -> SsfmStatus {
    match e {
        Error::InvalidParameter(_) | Error::Parse(_) | Error::ZeroMode | Error::ZeroCarrierMode => {
            SsfmStatus::InvalidParameter
        }
        Error::SizeMismatch { .. } | Error::ClassMismatch => SsfmStatus::SizeMismatch,
        Error::ModeOutOfRange(_) => SsfmStatus::OutOfRange,
        Error::DegenerateSign { .. }
        | Error::UnstableMode { .. }
        | Error::Domain { .. }
        | Error::NegativeDiscriminant { .. }
        | Error::NotLinearlyStable { .. }
        | Error::MassDeficit { .. } => SsfmStatus::Unstable,
        Error::Observer { .. } | Error::Io { .. } => SsfmStatus::Internal,
    }
}

struct Fail(SsfmStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(SsfmStatus::NullPointer, format!("{what} is null"))
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> SsfmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => SsfmStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic");
            SsfmStatus::Internal
        }
    }
}

unsafe fn read_mode(ptr: *const i64, d: usize) -> Result<Mode, Fail> {
    if ptr.is_null() {
        return Err(null("ell"));
    }
    Ok(Mode(std::slice::from_raw_parts(ptr, d).to_vec()))
}

unsafe fn write<T>(out: *mut T, value: T, what: &str) -> Result<(), Fail> {
    if out.is_null() {
        return Err(null(what));
    }
    out.write(value);
    Ok(())
}

/// Copies the last error of this thread into `buf` (NUL-terminated, truncated to
/// `len`). Returns the full message length without the terminator.
///
/// # Safety
/// `buf` must be null or valid for `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn ssfm_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let msg = e.borrow();
        if !buf.is_null() && len > 0 {
            let n = msg.len().min(len - 1);
            ptr::copy_nonoverlapping(msg.as_ptr().cast::<c_char>(), buf, n);
            *buf.add(n) = 0;
        }
        msg.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn ssfm_version() -> *const c_char {
    const V: &CStr =
        match CStr::from_bytes_with_nul(concat!(env!("CARGO_PKG_VERSION"), "\0").as_bytes()) {
            Ok(v) => v,
            Err(_) => panic!("version string"),
        };
    V.as_ptr()
}

/// Writes the `d` components of the mode at grid-order position `index`.
///
/// # Safety
/// `mode` must be valid for `d` writes.
#[no_mangle]
pub unsafe extern "C" fn ssfm_grid_mode(
    k: usize,
    d: usize,
    index: usize,
    mode: *mut i64,
) -> SsfmStatus {
    guard(|| {
        let g = Grid::new(k, d)?;
        if index >= g.len() {
            return Err(Fail(
                SsfmStatus::OutOfRange,
                format!("index {index} outside a grid of {}", g.len()),
            ));
        }
        if mode.is_null() {
            return Err(null("mode"));
        }
        let m = g.mode_at(index);
        ptr::copy_nonoverlapping(m.0.as_ptr(), mode, d);
        Ok(())
    })
}

/// Largest step size allowed by the CFL restriction `d h K^2 + 2 h rho0^2 <= pi / (N + 1)`.
///
/// # Safety
/// `out` must be valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ssfm_cfl_max_h(
    d: usize,
    k: usize,
    rho0: f64,
    n: u32,
    out: *mut f64,
) -> SsfmStatus {
    guard(|| write(out, cfl_max_h(d, k, rho0, n)?, "out"))
}

/// Linear stability check of the plane wave with wave vector `ell` (length `d`).
///
/// # Safety
/// `ell` must be valid for `d` reads and `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn ssfm_check_assumption1(
    h: f64,
    rho: f64,
    lambda: f64,
    ell: *const i64,
    d: usize,
    k: usize,
    out: *mut SsfmLinearReport,
) -> SsfmStatus {
    guard(|| {
        let ell = read_mode(ell, d)?;
        let g = Grid::new(k, d)?;
        let r = check_assumption1(h, rho, lambda, &ell, &g)?;
        let report = SsfmLinearReport {
            holds: r.holds,
            c1: r.c1_certified,
            worst_index: g.index_of(&r.worst_j)?,
        };
        write(out, report, "out")
    })
}

/// Builds the frequency table. Free it with [`ssfm_frequency_table_free`].
///
/// # Safety
/// `ell` must be valid for `d` reads and `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn ssfm_frequency_table_new(
    h: f64,
    rho: f64,
    lambda: f64,
    ell: *const i64,
    d: usize,
    k: usize,
    out: *mut *mut SsfmFrequencyTable,
) -> SsfmStatus {
    guard(|| {
        let ell = read_mode(ell, d)?;
        let g = Grid::new(k, d)?;
        let table = build_frequency_table(h, rho, lambda, &ell, &g)?;
        write(
            out,
            Box::into_raw(Box::new(SsfmFrequencyTable(table))),
            "out",
        )
    })
}

/// # Safety
/// `table` must come from [`ssfm_frequency_table_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ssfm_frequency_table_free(table: *mut SsfmFrequencyTable) {
    if !table.is_null() {
        drop(Box::from_raw(table));
    }
}

/// Number of nonzero modes in the table.
///
/// # Safety
/// `table` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ssfm_frequency_table_len(
    table: *const SsfmFrequencyTable,
    out: *mut usize,
) -> SsfmStatus {
    guard(|| {
        let t = table.as_ref().ok_or_else(|| null("table"))?;
        write(out, t.0.modes.len(), "out")
    })
}

/// Frequency `omega_j` of the `i`-th nonzero mode, with its components in `mode`.
///
/// # Safety
/// `table` must be a live handle, `mode` valid for `d` writes, `omega` for one.
#[no_mangle]
pub unsafe extern "C" fn ssfm_frequency_table_entry(
    table: *const SsfmFrequencyTable,
    i: usize,
    mode: *mut i64,
    omega: *mut f64,
) -> SsfmStatus {
    guard(|| {
        let t = table.as_ref().ok_or_else(|| null("table"))?;
        let m = t.0.modes.get(i).ok_or_else(|| {
            Fail(
                SsfmStatus::OutOfRange,
                format!("entry {i} outside a table of {}", t.0.modes.len()),
            )
        })?;
        let w = m.omega.ok_or_else(|| {
            Fail(
                SsfmStatus::Unstable,
                format!("omega undefined at mode {}", m.mode),
            )
        })?;
        if mode.is_null() {
            return Err(null("mode"));
        }
        ptr::copy_nonoverlapping(m.mode.0.as_ptr(), mode, m.mode.dim());
        write(omega, w, "omega")
    })
}

/// Largest per-step amplification over all modes; 1 when linearly stable.
///
/// # Safety
/// `table` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ssfm_frequency_table_max_growth(
    table: *const SsfmFrequencyTable,
    out: *mut f64,
) -> SsfmStatus {
    guard(|| {
        let t = table.as_ref().ok_or_else(|| null("table"))?;
        write(out, t.0.max_growth(), "out")
    })
}

/// Non-resonance check on a frequency table.
///
/// # Safety
/// `table` must be a live handle, `params` valid for reading, `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn ssfm_check_assumption2(
    table: *const SsfmFrequencyTable,
    params: *const SsfmResonanceParams,
    out: *mut SsfmResonanceReport,
) -> SsfmStatus {
    guard(|| {
        let t = table.as_ref().ok_or_else(|| null("table"))?;
        let p = params.as_ref().ok_or_else(|| null("params"))?;
        let params = ResonanceParams {
            n: p.n,
            c2: p.c2,
            delta2: p.delta2,
            s2: if p.s2_per_n {
                S2::PerN(p.s2_value)
            } else {
                S2::Fixed(p.s2_value)
            },
            eps_hat: p.eps_hat,
            exhaustive: p.exhaustive,
        };
        let r = check_assumption2(&t.0, &params)?;
        let report = SsfmResonanceReport {
            holds: r.holds,
            available: r.unavailable.is_none(),
            part_a_holds: r.part_a_holds,
            part_b_holds: r.part_b_holds,
            part_c_holds: r.part_c_holds,
            classes: r.classes,
            cells: r.cells,
            vectors_checked: r.vectors_checked,
            near_resonances: r.near_resonances,
            cell_vectors_checked: r.cell_vectors_checked,
            frequency_deviation: r.frequency_deviation.unwrap_or(f64::NAN),
        };
        write(out, report, "out")
    })
}

unsafe fn read_coeffs(g: &Grid, coeffs: *const f64, len: usize) -> Result<SpectralField, Fail> {
    if coeffs.is_null() {
        return Err(null("coeffs"));
    }
    if len != 2 * g.len() {
        return Err(Error::SizeMismatch {
            expected: 2 * g.len(),
            actual: len,
        }
        .into());
    }
    let raw = std::slice::from_raw_parts(coeffs, len);
    let c = raw
        .chunks_exact(2)
        .map(|p| Complex64::new(p[0], p[1]))
        .collect();
    Ok(SpectralField::new(*g, c)?)
}

fn new_simulation(
    u0: &SpectralField,
    h: f64,
    lambda: f64,
    scheme: SsfmScheme,
) -> Result<*mut SsfmSimulation, Fail> {
    if !lambda.is_finite() {
        return Err(Error::InvalidParameter(format!("lambda must be finite, got {lambda}")).into());
    }
    let scheme = StepScheme::new(scheme.into(), h)?;
    Ok(Box::into_raw(Box::new(SsfmSimulation {
        stepper: SplitStepper::new(u0, scheme, lambda),
    })))
}

/// Starts a simulation from `len = 2 (2K)^d` interleaved coefficients.
///
/// # Safety
/// `coeffs` must be valid for `len` reads and `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn ssfm_simulation_new(
    k: usize,
    d: usize,
    coeffs: *const f64,
    len: usize,
    h: f64,
    lambda: f64,
    scheme: SsfmScheme,
    out: *mut *mut SsfmSimulation,
) -> SsfmStatus {
    guard(|| {
        let g = Grid::new(k, d)?;
        let u0 = read_coeffs(&g, coeffs, len)?;
        write(out, new_simulation(&u0, h, lambda, scheme)?, "out")
    })
}

/// Starts a simulation from the plane wave `rho e^{i ell.x}`.
///
/// # Safety
/// `ell` must be valid for `d` reads and `out` for one write.
#[allow(clippy::too_many_arguments)]
#[no_mangle]
pub unsafe extern "C" fn ssfm_simulation_new_plane_wave(
    k: usize,
    d: usize,
    rho: f64,
    ell: *const i64,
    h: f64,
    lambda: f64,
    scheme: SsfmScheme,
    out: *mut *mut SsfmSimulation,
) -> SsfmStatus {
    guard(|| {
        let ell = read_mode(ell, d)?;
        let u0 = SpectralField::plane_wave(Grid::new(k, d)?, rho, &ell)?;
        write(out, new_simulation(&u0, h, lambda, scheme)?, "out")
    })
}

/// # Safety
/// `sim` must come from a constructor and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn ssfm_simulation_free(sim: *mut SsfmSimulation) {
    if !sim.is_null() {
        drop(Box::from_raw(sim));
    }
}

/// Advances by `steps` steps. Returns `BLOW_UP` if the field is no longer finite.
///
/// # Safety
/// `sim` must be a live handle.
#[no_mangle]
pub unsafe extern "C" fn ssfm_simulation_advance(
    sim: *mut SsfmSimulation,
    steps: usize,
) -> SsfmStatus {
    guard(|| {
        let s = sim.as_mut().ok_or_else(|| null("sim"))?;
        s.stepper.advance_by(steps);
        if !s.stepper.is_finite() {
            return Err(Fail(
                SsfmStatus::BlowUp,
                format!("non-finite field after {} steps", s.stepper.steps_taken()),
            ));
        }
        Ok(())
    })
}

/// # Safety
/// `sim` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ssfm_simulation_steps(
    sim: *const SsfmSimulation,
    out: *mut usize,
) -> SsfmStatus {
    guard(|| {
        let s = sim.as_ref().ok_or_else(|| null("sim"))?;
        write(out, s.stepper.steps_taken(), "out")
    })
}

/// Current time `steps * h`.
///
/// # Safety
/// `sim` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ssfm_simulation_time(
    sim: *const SsfmSimulation,
    out: *mut f64,
) -> SsfmStatus {
    guard(|| {
        let s = sim.as_ref().ok_or_else(|| null("sim"))?;
        write(
            out,
            s.stepper.steps_taken() as f64 * s.stepper.scheme().h(),
            "out",
        )
    })
}

/// Mass `||u||_0^2`.
///
/// # Safety
/// `sim` must be a live handle and `out` valid for one write.
#[no_mangle]
pub unsafe extern "C" fn ssfm_simulation_mass(
    sim: *const SsfmSimulation,
    out: *mut f64,
) -> SsfmStatus {
    guard(|| {
        let s = sim.as_ref().ok_or_else(|| null("sim"))?;
        write(out, s.stepper.field().mass(), "out")
    })
}

/// Copies the current coefficients as interleaved pairs; `len` must be `2 (2K)^d`.
///
/// # Safety
/// `sim` must be a live handle and `out` valid for `len` writes.
#[no_mangle]
pub unsafe extern "C" fn ssfm_simulation_coefficients(
    sim: *const SsfmSimulation,
    out: *mut f64,
    len: usize,
) -> SsfmStatus {
    guard(|| {
        let s = sim.as_ref().ok_or_else(|| null("sim"))?;
        let f = s.stepper.field();
        if len != 2 * f.coeffs().len() {
            return Err(Error::SizeMismatch {
                expected: 2 * f.coeffs().len(),
                actual: len,
            }
            .into());
        }
        if out.is_null() {
            return Err(null("out"));
        }
        let dst = std::slice::from_raw_parts_mut(out, len);
        for (pair, c) in dst.chunks_exact_mut(2).zip(f.coeffs()) {
            pair[0] = c.re;
            pair[1] = c.im;
        }
        Ok(())
    })
}

/// `H^s` distance of the current field to the orbit of plane waves with wave vector `ell`.
///
/// # Safety
/// `sim` must be a live handle, `ell` valid for `d` reads, `out` for one write.
#[no_mangle]
pub unsafe extern "C" fn ssfm_simulation_orbital_distance(
    sim: *const SsfmSimulation,
    ell: *const i64,
    s: f64,
    out: *mut f64,
) -> SsfmStatus {
    guard(|| {
        let sim = sim.as_ref().ok_or_else(|| null("sim"))?;
        let f = sim.stepper.field();
        let ell = read_mode(ell, f.grid().dim())?;
        write(out, orbital_distance(&f, &ell, s)?, "out")
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_core_error_maps_to_a_nonzero_status() {
        let errs = [
            Error::InvalidParameter("x".into()),
            Error::SizeMismatch {
                expected: 1,
                actual: 2,
            },
            Error::ModeOutOfRange(Mode::from(9)),
            Error::Domain { nh: 2.0 },
            Error::NotLinearlyStable {
                mode: Mode::from(1),
            },
        ];
        for e in &errs {
            assert_ne!(status_of(e), SsfmStatus::Ok);
        }
    }

    #[test]
    fn error_message_is_truncated_and_terminated() {
        set_error("abcdef");
        let mut buf = [1 as c_char; 4];
        let n = unsafe { ssfm_last_error_message(buf.as_mut_ptr(), buf.len()) };
        assert_eq!(n, 6);
        let s = unsafe { CStr::from_ptr(buf.as_ptr()) };
        assert_eq!(s.to_str().unwrap(), "abc");
    }

    #[test]
    fn panics_become_internal_status() {
        let st = guard(|| panic!("boom"));
        assert_eq!(st, SsfmStatus::Internal);
    }
}
