//! Linearization of the split-step scheme around a plane wave.
//!
//! Each non-zero mode `j` couples to `-j` through the 2x2 matrix
//! `e^{-i shift h} A_j` with `A_j = [[alpha, beta], [conj(beta), conj(alpha)]]`.
//! This module evaluates `n(j)`, `alpha_j`, `beta_j`, the numerical
//! frequencies `omega_j`, the linear-stability margin, the CFL bound and the
//! modified frequencies used by the non-resonance check in [`resonance`].

pub mod resonance;

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Grid, Mode};

pub use resonance::{check_assumption2, ResonanceParams, ResonanceReport};

pub type Matrix2 = [[Complex64; 2]; 2];

pub fn mat_mul(a: &Matrix2, b: &Matrix2) -> Matrix2 {
    let mut out = [[Complex64::default(); 2]; 2];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, slot) in row.iter_mut().enumerate() {
            *slot = a[i][0] * b[0][j] + a[i][1] * b[1][j];
        }
    }
    out
}

pub fn mat_det(a: &Matrix2) -> Complex64 {
    a[0][0] * a[1][1] - a[0][1] * a[1][0]
}

fn sum_mod_reduced(grid: &Grid, a: &Mode, b: &Mode, sign: i64) -> i64 {
    let v: Vec<i64> = a.0.iter().zip(&b.0).map(|(x, y)| x + sign * y).collect();
    grid.mode_at(grid.reduced_index(&v)).norm_sq()
}

fn check_nonzero(j: &Mode, grid: &Grid) -> Result<()> {
    grid.index_of(j)?;
    if j.is_zero() {
        return Err(Error::ZeroMode);
    }
    Ok(())
}

/// `n(j) = |ell+j mod 2K|^2 / 2 + |ell-j mod 2K|^2 / 2 - |ell|^2`.
pub fn n_of_j(j: &Mode, ell: &Mode, grid: &Grid) -> Result<i64> {
    check_nonzero(j, grid)?;
    grid.index_of(ell)?;
    let plus = sum_mod_reduced(grid, ell, j, 1);
    let minus = sum_mod_reduced(grid, ell, j, -1);
    // plus and minus have the same parity componentwise, so the sum is even.
    Ok((plus + minus) / 2 - ell.norm_sq())
}

/// Integer phase shift `|ell+j mod 2K|^2 / 2 - |ell-j mod 2K|^2 / 2`.
pub fn shift_term(j: &Mode, ell: &Mode, grid: &Grid) -> Result<i64> {
    grid.index_of(ell)?;
    let plus = sum_mod_reduced(grid, ell, j, 1);
    let minus = sum_mod_reduced(grid, ell, j, -1);
    Ok((plus - minus) / 2)
}

/// Parameters of the linearization around `rho e^{i(ell.x - omega t)}`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Linearization {
    pub grid: Grid,
    pub ell: Mode,
    pub h: f64,
    pub rho: f64,
    pub lambda: f64,
}

impl Linearization {
    pub fn new(grid: Grid, ell: Mode, h: f64, rho: f64, lambda: f64) -> Result<Self> {
        grid.index_of(&ell)?;
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "step size must be positive, got {h}"
            )));
        }
        if !(rho >= 0.0 && rho.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "rho must be nonnegative, got {rho}"
            )));
        }
        if !lambda.is_finite() {
            return Err(Error::InvalidParameter("lambda must be finite".into()));
        }
        Ok(Linearization {
            grid,
            ell,
            h,
            rho,
            lambda,
        })
    }

    /// `h lambda rho^2`
    fn coupling(&self) -> f64 {
        self.h * self.lambda * self.rho * self.rho
    }

    /// The reduced index set `Z = K \ {0}` in grid order.
    pub fn nonzero_modes(&self) -> impl Iterator<Item = Mode> + '_ {
        self.grid.modes().filter(|m| !m.is_zero())
    }

    pub fn n_of_j(&self, j: &Mode) -> Result<i64> {
        n_of_j(j, &self.ell, &self.grid)
    }

    pub fn mode_matrix(&self, j: &Mode) -> Result<ModeMatrix> {
        let n = self.n_of_j(j)?;
        let rot = Complex64::from_polar(1.0, -(n as f64) * self.h);
        let c = self.coupling();
        Ok(ModeMatrix {
            alpha: Complex64::new(1.0, -c) * rot,
            beta: Complex64::new(0.0, -c) * rot,
            shift: shift_term(j, &self.ell, &self.grid)?,
            h: self.h,
        })
    }

    /// `(cos(n h) - h lambda rho^2 sin(n h))`, the real part of `alpha_j`.
    pub fn stability_argument(&self, j: &Mode) -> Result<f64> {
        let nh = self.n_of_j(j)? as f64 * self.h;
        Ok(nh.cos() - self.coupling() * nh.sin())
    }

    pub fn omega(&self, j: &Mode) -> Result<f64> {
        let n = self.n_of_j(j)?;
        let nh = n as f64 * self.h;
        let arg = nh.cos() - self.coupling() * nh.sin();
        if arg.abs() > 1.0 {
            return Err(Error::UnstableMode {
                mode: j.clone(),
                re_alpha: arg,
            });
        }
        let sign_arg = nh.sin() + self.coupling() * nh.cos();
        if sign_arg == 0.0 {
            return Err(Error::DegenerateSign { mode: j.clone() });
        }
        let shift = shift_term(j, &self.ell, &self.grid)? as f64;
        Ok(shift + arg.acos() / (self.h * sign_arg.signum()))
    }

    pub fn growth_factor(&self, j: &Mode) -> Result<f64> {
        Ok(growth_from_re_alpha(self.stability_argument(j)?))
    }

    pub fn check_assumption1(&self) -> LinearStabilityReport {
        let mut worst: Option<(Mode, f64)> = None;
        for j in self.nonzero_modes() {
            let arg = self
                .stability_argument(&j)
                .expect("j is a nonzero grid mode");
            let margin = (1.0 - arg * arg) / (self.h * self.h);
            if worst.as_ref().is_none_or(|(_, m)| margin < *m) {
                worst = Some((j, margin));
            }
        }
        let (worst_j, c1) = worst.unwrap_or((Mode::zero(self.grid.dim()), f64::INFINITY));
        LinearStabilityReport {
            holds: c1 > 0.0,
            c1_certified: c1,
            worst_j,
        }
    }

    /// Modified frequency `|j|^2 - mu + sqrt(mu^2 + 2 lambda rho^2 mu)` (`ell = 0`).
    pub fn varpi(&self, j: &Mode) -> Result<f64> {
        if !self.ell.is_zero() {
            return Err(Error::InvalidParameter(
                "modified frequencies are constructed for ell = 0 only".into(),
            ));
        }
        varpi(j, self.h, self.rho * self.rho, self.lambda, &self.grid)
    }
}

/// Modulus of the dominant eigenvalue of `A_j` given `Re(alpha_j)`.
pub fn growth_from_re_alpha(re_alpha: f64) -> f64 {
    if re_alpha.abs() <= 1.0 {
        1.0
    } else {
        re_alpha.abs() + (re_alpha * re_alpha - 1.0).sqrt()
    }
}

/// `alpha_j`, `beta_j` and the integer phase shift of one mode pair.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeMatrix {
    pub alpha: Complex64,
    pub beta: Complex64,
    pub shift: i64,
    pub h: f64,
}

impl ModeMatrix {
    pub fn a(&self) -> Matrix2 {
        [
            [self.alpha, self.beta],
            [self.beta.conj(), self.alpha.conj()],
        ]
    }

    /// `e^{-i shift h} A_j`, acting on `(w_j, conj(w_{-j}))`.
    pub fn propagation(&self) -> Matrix2 {
        let p = Complex64::from_polar(1.0, -(self.shift as f64) * self.h);
        let a = self.a();
        [[p * a[0][0], p * a[0][1]], [p * a[1][0], p * a[1][1]]]
    }

    /// `|alpha|^2 - |beta|^2`, which is one.
    pub fn symplectic_defect(&self) -> f64 {
        self.alpha.norm_sqr() - self.beta.norm_sqr() - 1.0
    }

    /// `lambda^+ = Re(alpha) + i sgn(Im alpha) sqrt(1 - Re(alpha)^2)`, when stable.
    pub fn eigenvalue_plus(&self) -> Option<Complex64> {
        let re = self.alpha.re;
        if re.abs() > 1.0 {
            return None;
        }
        let sgn = if self.alpha.im > 0.0 {
            1.0
        } else if self.alpha.im < 0.0 {
            -1.0
        } else {
            0.0
        };
        Some(Complex64::new(re, sgn * (1.0 - re * re).sqrt()))
    }

    /// `lambda^+ - alpha`, which is purely imaginary. Uses `|alpha|^2 - |beta|^2 = 1`
    /// to avoid cancelling `sqrt(1 - Re(alpha)^2)` against `|Im alpha|`.
    pub fn eigen_gap(&self) -> Option<Complex64> {
        let re = self.alpha.re;
        if re.abs() > 1.0 {
            return None;
        }
        let root = ((1.0 - re) * (1.0 + re)).sqrt();
        let gap = -self.beta.norm_sqr() / (root + self.alpha.im.abs());
        Some(Complex64::new(0.0, gap * self.alpha.im.signum()))
    }
}

pub fn mode_matrix(
    j: &Mode,
    ell: &Mode,
    h: f64,
    rho: f64,
    lambda: f64,
    grid: &Grid,
) -> Result<ModeMatrix> {
    Linearization::new(*grid, ell.clone(), h, rho, lambda)?.mode_matrix(j)
}

pub fn omega(j: &Mode, ell: &Mode, h: f64, rho: f64, lambda: f64, grid: &Grid) -> Result<f64> {
    Linearization::new(*grid, ell.clone(), h, rho, lambda)?.omega(j)
}

pub fn growth_factor(
    j: &Mode,
    ell: &Mode,
    h: f64,
    rho: f64,
    lambda: f64,
    grid: &Grid,
) -> Result<f64> {
    Linearization::new(*grid, ell.clone(), h, rho, lambda)?.growth_factor(j)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LinearStabilityReport {
    pub holds: bool,
    /// Largest `c1` with `Re(alpha_j)^2 <= 1 - c1 h^2` for every `j`.
    pub c1_certified: f64,
    pub worst_j: Mode,
}

pub fn check_assumption1(
    h: f64,
    rho: f64,
    lambda: f64,
    ell: &Mode,
    grid: &Grid,
) -> Result<LinearStabilityReport> {
    Ok(Linearization::new(*grid, ell.clone(), h, rho, lambda)?.check_assumption1())
}

/// Largest step size with `d h K^2 + 2 h rho0^2 <= pi / (N + 1)`.
pub fn cfl_max_h(d: usize, k: usize, rho0: f64, n: u32) -> Result<f64> {
    if k == 0 || d == 0 {
        return Err(Error::InvalidParameter("K and d must be positive".into()));
    }
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "N must be at least 2, got {n}"
        )));
    }
    let denom = (n as f64 + 1.0) * (d as f64 * (k * k) as f64 + 2.0 * rho0 * rho0);
    Ok(PI / denom)
}

/// `mu_n = tan(n h) / h`, defined for `n h` in `(0, pi/2)`.
pub fn mu(n: i64, h: f64) -> Result<f64> {
    let nh = n as f64 * h;
    if !(nh > 0.0 && nh < FRAC_PI_2) {
        return Err(Error::Domain { nh });
    }
    Ok(nh.tan() / h)
}

/// Modified frequency for `ell = 0`, with `sigma = rho^2`.
pub fn varpi(j: &Mode, h: f64, sigma: f64, lambda: f64, grid: &Grid) -> Result<f64> {
    check_nonzero(j, grid)?;
    let n = j.norm_sq();
    let m = mu(n, h)?;
    let disc = m * m + 2.0 * lambda * sigma * m;
    if disc < 0.0 {
        return Err(Error::NegativeDiscriminant {
            mode: j.clone(),
            value: disc,
        });
    }
    Ok(n as f64 - m + disc.sqrt())
}

/// Why a per-mode frequency is unavailable.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrequencyIssue {
    UnstableMode,
    DegenerateSign,
    Domain,
    NegativeDiscriminant,
    /// Modified frequencies are only constructed for `ell = 0`.
    NotConstructed,
}

impl FrequencyIssue {
    fn from_error(e: &Error) -> Self {
        match e {
            Error::UnstableMode { .. } => FrequencyIssue::UnstableMode,
            Error::DegenerateSign { .. } => FrequencyIssue::DegenerateSign,
            Error::Domain { .. } => FrequencyIssue::Domain,
            Error::NegativeDiscriminant { .. } => FrequencyIssue::NegativeDiscriminant,
            _ => FrequencyIssue::NotConstructed,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModeFrequencies {
    pub mode: Mode,
    pub n: i64,
    pub shift: i64,
    pub alpha: Complex64,
    pub beta: Complex64,
    pub omega: Option<f64>,
    pub omega_issue: Option<FrequencyIssue>,
    pub varpi: Option<f64>,
    pub varpi_issue: Option<FrequencyIssue>,
    pub growth: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FrequencyTable {
    pub grid: Grid,
    pub ell: Mode,
    pub h: f64,
    pub rho: f64,
    pub lambda: f64,
    pub modes: Vec<ModeFrequencies>,
    /// `max_j |varpi_j - omega_j|`; `None` unless `ell = 0` and every entry exists.
    pub eps_hat: Option<f64>,
}

impl FrequencyTable {
    pub fn linearization(&self) -> Linearization {
        Linearization {
            grid: self.grid,
            ell: self.ell.clone(),
            h: self.h,
            rho: self.rho,
            lambda: self.lambda,
        }
    }

    pub fn max_growth(&self) -> f64 {
        self.modes.iter().map(|m| m.growth).fold(1.0, f64::max)
    }

    pub fn get(&self, j: &Mode) -> Option<&ModeFrequencies> {
        self.modes.iter().find(|m| &m.mode == j)
    }

    pub fn all_omegas(&self) -> Option<Vec<f64>> {
        self.modes.iter().map(|m| m.omega).collect()
    }
}

pub fn build_frequency_table(
    h: f64,
    rho: f64,
    lambda: f64,
    ell: &Mode,
    grid: &Grid,
) -> Result<FrequencyTable> {
    let lin = Linearization::new(*grid, ell.clone(), h, rho, lambda)?;
    let modes: Vec<ModeFrequencies> = lin
        .nonzero_modes()
        .map(|j| {
            let mm = lin.mode_matrix(&j).expect("nonzero grid mode");
            let n = lin.n_of_j(&j).expect("nonzero grid mode");
            let (omega, omega_issue) = split(lin.omega(&j));
            let (varpi, varpi_issue) = if ell.is_zero() {
                split(lin.varpi(&j))
            } else {
                (None, Some(FrequencyIssue::NotConstructed))
            };
            ModeFrequencies {
                mode: j,
                n,
                shift: mm.shift,
                alpha: mm.alpha,
                beta: mm.beta,
                omega,
                omega_issue,
                varpi,
                varpi_issue,
                growth: growth_from_re_alpha(mm.alpha.re),
            }
        })
        .collect();
    let eps_hat = if ell.is_zero() {
        modes
            .iter()
            .map(|m| Some((m.varpi? - m.omega?).abs()))
            .try_fold(0.0f64, |acc, d| d.map(|d| acc.max(d)))
    } else {
        None
    };
    Ok(FrequencyTable {
        grid: *grid,
        ell: ell.clone(),
        h,
        rho,
        lambda,
        modes,
        eps_hat,
    })
}

fn split(r: Result<f64>) -> (Option<f64>, Option<FrequencyIssue>) {
    match r {
        Ok(v) => (Some(v), None),
        Err(e) => (None, Some(FrequencyIssue::from_error(&e))),
    }
}
