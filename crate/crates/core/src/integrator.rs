//! The split-step Fourier method with exact linear and nonlinear flows.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{Fourier, Grid, SpectralField};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SplitVariant {
    /// `Phi_lin^h o Phi_nl^h`
    LieTrotter,
    /// `Phi_lin^{h/2} o Phi_nl^h o Phi_lin^{h/2}`
    StrangLinearOutside,
    /// `Phi_nl^{h/2} o Phi_lin^h o Phi_nl^{h/2}`
    StrangNonlinearOutside,
}

impl SplitVariant {
    pub const ALL: [SplitVariant; 3] = [
        SplitVariant::LieTrotter,
        SplitVariant::StrangLinearOutside,
        SplitVariant::StrangNonlinearOutside,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SplitVariant::LieTrotter => "lie-trotter",
            SplitVariant::StrangLinearOutside => "strang-linear-outside",
            SplitVariant::StrangNonlinearOutside => "strang-nonlinear-outside",
        }
    }
}

impl fmt::Display for SplitVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SplitVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "lie-trotter" | "lie" => Ok(SplitVariant::LieTrotter),
            "strang-linear-outside" | "strang" => Ok(SplitVariant::StrangLinearOutside),
            "strang-nonlinear-outside" => Ok(SplitVariant::StrangNonlinearOutside),
            other => Err(Error::Parse(format!("unknown scheme `{other}`"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StepScheme {
    variant: SplitVariant,
    h: f64,
}

impl StepScheme {
    pub fn new(variant: SplitVariant, h: f64) -> Result<Self> {
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "step size must be positive, got {h}"
            )));
        }
        Ok(StepScheme { variant, h })
    }

    pub fn lie_trotter(h: f64) -> Result<Self> {
        Self::new(SplitVariant::LieTrotter, h)
    }

    pub fn variant(&self) -> SplitVariant {
        self.variant
    }

    pub fn h(&self) -> f64 {
        self.h
    }
}

/// Multiplies each coefficient by `e^{-i |j|^2 t}`.
pub fn linear_flow(f: &SpectralField, t: f64) -> SpectralField {
    let grid = *f.grid();
    let coeffs = f
        .coeffs()
        .iter()
        .zip(grid.norm_sq_table())
        .map(|(c, nsq)| c * Complex64::from_polar(1.0, -(nsq as f64) * t))
        .collect();
    SpectralField::new(grid, coeffs).expect("length preserved")
}

/// `z e^{i theta}` evaluated as `z + z (e^{i theta} - 1)`. The increment is
/// small for small angles, so rounding stays relative to it rather than to `z`.
#[inline]
fn rotate(z: Complex64, theta: f64) -> Complex64 {
    let half = (0.5 * theta).sin();
    z + z * Complex64::new(-2.0 * half * half, theta.sin())
}

/// Pointwise `u(x_j) -> e^{-i lambda |u(x_j)|^2 t} u(x_j)`, then re-interpolated.
pub fn nonlinear_flow(f: &SpectralField, t: f64, lambda: f64) -> SpectralField {
    let grid = *f.grid();
    let mut fourier = Fourier::new(grid);
    let mut values = fourier.values(f.coeffs());
    for v in values.iter_mut() {
        *v = rotate(*v, -lambda * v.norm_sqr() * t);
    }
    SpectralField::new(grid, fourier.coefficients(&values)).expect("length preserved")
}

/// One step of the chosen composition, built from the pure flows.
pub fn step(f: &SpectralField, scheme: &StepScheme, lambda: f64) -> SpectralField {
    let h = scheme.h;
    match scheme.variant {
        SplitVariant::LieTrotter => linear_flow(&nonlinear_flow(f, h, lambda), h),
        SplitVariant::StrangLinearOutside => linear_flow(
            &nonlinear_flow(&linear_flow(f, h / 2.0), h, lambda),
            h / 2.0,
        ),
        SplitVariant::StrangNonlinearOutside => nonlinear_flow(
            &linear_flow(&nonlinear_flow(f, h / 2.0, lambda), h),
            h / 2.0,
            lambda,
        ),
    }
}

/// Stateful stepper that keeps the coefficients in FFT ordering between steps.
pub struct SplitStepper {
    grid: Grid,
    fourier: Fourier,
    scheme: StepScheme,
    lambda: f64,
    buf: Vec<Complex64>,
    phase_full: Vec<Complex64>,
    phase_half: Vec<Complex64>,
    steps: usize,
}

impl SplitStepper {
    pub fn new(initial: &SpectralField, scheme: StepScheme, lambda: f64) -> Self {
        let grid = *initial.grid();
        let fourier = Fourier::new(grid);
        let mut buf = vec![Complex64::default(); grid.len()];
        fourier.to_fft_order(initial.coeffs(), &mut buf);

        let mut nsq = vec![0.0; grid.len()];
        let table: Vec<f64> = grid.norm_sq_table().into_iter().map(|n| n as f64).collect();
        // Same permutation as the coefficients.
        let perm = grid.fft_permutation();
        for (i, &p) in perm.iter().enumerate() {
            nsq[p] = table[i];
        }
        let phases = |t: f64| -> Vec<Complex64> {
            nsq.iter()
                .map(|&n| Complex64::from_polar(1.0, -n * t))
                .collect()
        };
        SplitStepper {
            grid,
            fourier,
            phase_full: phases(scheme.h),
            phase_half: phases(scheme.h / 2.0),
            scheme,
            lambda,
            buf,
            steps: 0,
        }
    }

    pub fn scheme(&self) -> &StepScheme {
        &self.scheme
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    pub fn field(&self) -> SpectralField {
        let mut coeffs = vec![Complex64::default(); self.grid.len()];
        self.fourier.from_fft_order(&self.buf, &mut coeffs);
        SpectralField::new(self.grid, coeffs).expect("length preserved")
    }

    pub fn is_finite(&self) -> bool {
        self.buf
            .iter()
            .all(|c| c.re.is_finite() && c.im.is_finite())
    }

    fn apply_linear(&mut self, half: bool) {
        let phases = if half {
            &self.phase_half
        } else {
            &self.phase_full
        };
        for (c, p) in self.buf.iter_mut().zip(phases) {
            *c *= p;
        }
    }

    fn apply_nonlinear(&mut self, t: f64) {
        self.fourier.inverse_in_place(&mut self.buf);
        let scale = 1.0 / self.grid.len() as f64;
        let lambda = self.lambda;
        for v in self.buf.iter_mut() {
            *v = rotate(*v, -lambda * v.norm_sqr() * t) * scale;
        }
        self.fourier.forward_in_place(&mut self.buf);
    }

    pub fn advance(&mut self) {
        let h = self.scheme.h;
        match self.scheme.variant {
            SplitVariant::LieTrotter => {
                self.apply_nonlinear(h);
                self.apply_linear(false);
            }
            SplitVariant::StrangLinearOutside => {
                self.apply_linear(true);
                self.apply_nonlinear(h);
                self.apply_linear(true);
            }
            SplitVariant::StrangNonlinearOutside => {
                self.apply_nonlinear(h / 2.0);
                self.apply_linear(false);
                self.apply_nonlinear(h / 2.0);
            }
        }
        self.steps += 1;
    }

    pub fn advance_by(&mut self, n: usize) {
        for _ in 0..n {
            self.advance();
        }
    }
}

/// Observer cadence used when none is given: at most about 2000 callbacks.
pub fn default_cadence(n_steps: usize) -> usize {
    n_steps.div_ceil(2000).max(1)
}

#[derive(Debug)]
pub enum Termination {
    Completed,
    /// The observer returned an error; the run stopped at that step.
    ObserverFailed(Error),
    /// A coefficient became NaN or infinite.
    NonFinite {
        step: usize,
    },
}

#[derive(Debug)]
pub struct Integration {
    pub field: SpectralField,
    pub steps_completed: usize,
    pub termination: Termination,
}

impl Integration {
    pub fn is_complete(&self) -> bool {
        matches!(self.termination, Termination::Completed)
    }
}

/// Runs `n_steps` steps, calling `observer` at step 0, every `cadence` steps
/// and at the final step.
pub fn integrate<F>(
    f0: &SpectralField,
    scheme: StepScheme,
    lambda: f64,
    n_steps: usize,
    cadence: Option<usize>,
    mut observer: F,
) -> Integration
where
    F: FnMut(usize, &SpectralField) -> std::result::Result<(), String>,
{
    let cadence = cadence.unwrap_or_else(|| default_cadence(n_steps)).max(1);
    let mut stepper = SplitStepper::new(f0, scheme, lambda);

    let mut notify = |stepper: &SplitStepper| -> Option<Termination> {
        let n = stepper.steps_taken();
        if !stepper.is_finite() {
            return Some(Termination::NonFinite { step: n });
        }
        observer(n, &stepper.field())
            .err()
            .map(|message| Termination::ObserverFailed(Error::Observer { step: n, message }))
    };

    if let Some(t) = notify(&stepper) {
        return Integration {
            field: stepper.field(),
            steps_completed: 0,
            termination: t,
        };
    }
    while stepper.steps_taken() < n_steps {
        stepper.advance();
        let n = stepper.steps_taken();
        if n.is_multiple_of(cadence) || n == n_steps {
            if let Some(t) = notify(&stepper) {
                return Integration {
                    field: stepper.field(),
                    steps_completed: n,
                    termination: t,
                };
            }
        }
    }
    Integration {
        field: stepper.field(),
        steps_completed: n_steps,
        termination: Termination::Completed,
    }
}
