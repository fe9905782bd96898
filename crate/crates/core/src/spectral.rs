//! Grids, trigonometric polynomials and their transforms.
//!
//! A [`Grid`] with half-width `K` in dimension `d` carries the mode set
//! `{-K, ..., K-1}^d` and the collocation points `x_j = pi j / K`. Both
//! coefficients and collocation values are stored row-major over the axes
//! with per-axis position `p = j + K`, so position `0` is mode (or point)
//! `-K`. The FFT library works with position `q = j mod 2K`; on every axis
//! the two orderings differ by a cyclic shift of `K`, which is its own
//! inverse on a period of `2K`.

use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Integer mode index (one component per spatial axis).
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Mode(pub Vec<i64>);

impl Mode {
    pub fn zero(dim: usize) -> Self {
        Mode(vec![0; dim])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|&c| c == 0)
    }

    /// `|j|^2`
    pub fn norm_sq(&self) -> i64 {
        self.0.iter().map(|c| c * c).sum()
    }

    pub fn norm(&self) -> f64 {
        (self.norm_sq() as f64).sqrt()
    }

    pub fn components(&self) -> &[i64] {
        &self.0
    }
}

impl From<i64> for Mode {
    fn from(j: i64) -> Self {
        Mode(vec![j])
    }
}

impl From<Vec<i64>> for Mode {
    fn from(v: Vec<i64>) -> Self {
        Mode(v)
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.0.as_slice() {
            [j] => write!(f, "{j}"),
            comps => {
                write!(f, "(")?;
                for (i, c) in comps.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{c}")?;
                }
                write!(f, ")")
            }
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Grid {
    k: usize,
    dim: usize,
}

impl Grid {
    pub fn new(k: usize, dim: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::InvalidParameter("K must be positive".into()));
        }
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be positive".into()));
        }
        let len = (2 * k).checked_pow(dim as u32);
        if len.is_none_or(|n| n > (1 << 28)) {
            return Err(Error::InvalidParameter(format!(
                "grid (2K)^d with K={k}, d={dim} is too large"
            )));
        }
        Ok(Grid { k, dim })
    }

    /// Half-width `K`.
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Points per axis, `2K`.
    pub fn points_per_axis(&self) -> usize {
        2 * self.k
    }

    /// Number of modes `(2K)^d`.
    pub fn len(&self) -> usize {
        self.points_per_axis().pow(self.dim as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn mode_at(&self, flat: usize) -> Mode {
        let n = self.points_per_axis();
        let mut comps = vec![0i64; self.dim];
        let mut rest = flat;
        for c in comps.iter_mut().rev() {
            *c = (rest % n) as i64 - self.k as i64;
            rest /= n;
        }
        Mode(comps)
    }

    /// Flat position of a mode already in the index set.
    pub fn index_of(&self, mode: &Mode) -> Result<usize> {
        if mode.dim() != self.dim {
            return Err(Error::ModeOutOfRange(mode.clone()));
        }
        let k = self.k as i64;
        let n = self.points_per_axis();
        let mut flat = 0usize;
        for &c in mode.components() {
            if c < -k || c >= k {
                return Err(Error::ModeOutOfRange(mode.clone()));
            }
            flat = flat * n + (c + k) as usize;
        }
        Ok(flat)
    }

    /// Flat position of the representative of `v` modulo `2K`.
    pub fn reduced_index(&self, v: &[i64]) -> usize {
        let n = self.points_per_axis();
        v.iter().fold(0usize, |flat, &c| {
            flat * n + (self.reduce_component(c) + self.k as i64) as usize
        })
    }

    fn reduce_component(&self, c: i64) -> i64 {
        let k = self.k as i64;
        (c + k).rem_euclid(2 * k) - k
    }

    pub fn zero_index(&self) -> usize {
        self.index_of(&Mode::zero(self.dim))
            .expect("zero mode is always in range")
    }

    pub fn modes(&self) -> impl Iterator<Item = Mode> + '_ {
        (0..self.len()).map(|i| self.mode_at(i))
    }

    /// `|j|^2` for every flat position.
    pub fn norm_sq_table(&self) -> Vec<i64> {
        self.modes().map(|m| m.norm_sq()).collect()
    }

    /// Collocation point `x_j = pi j / K` at a flat position.
    pub fn collocation_point(&self, flat: usize) -> Vec<f64> {
        let scale = std::f64::consts::PI / self.k as f64;
        self.mode_at(flat)
            .0
            .iter()
            .map(|&j| j as f64 * scale)
            .collect()
    }

    /// Flat position in FFT ordering for each flat position in grid ordering.
    pub(crate) fn fft_permutation(&self) -> Vec<usize> {
        let n = self.points_per_axis();
        (0..self.len())
            .map(|flat| {
                let mut rest = flat;
                let mut out = 0usize;
                let mut weight = 1usize;
                for _ in 0..self.dim {
                    let p = rest % n;
                    rest /= n;
                    out += ((p + self.k) % n) * weight;
                    weight *= n;
                }
                out
            })
            .collect()
    }
}

/// Reduces every component of `v` into `[-K, K-1]` modulo `2K`.
pub fn mod_reduce(v: &[i64], grid: &Grid) -> Mode {
    Mode(v.iter().map(|&c| grid.reduce_component(c)).collect())
}

/// FFT plans for one grid plus the ordering permutation.
pub struct Fourier {
    grid: Grid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    perm: Vec<usize>,
    line: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl Fourier {
    pub fn new(grid: Grid) -> Self {
        let n = grid.points_per_axis();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let scratch_len = forward
            .get_inplace_scratch_len()
            .max(inverse.get_inplace_scratch_len());
        Fourier {
            grid,
            forward,
            inverse,
            perm: grid.fft_permutation(),
            line: vec![Complex64::default(); n],
            scratch: vec![Complex64::default(); scratch_len],
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// Copies grid-ordered data into an FFT-ordered buffer.
    pub fn to_fft_order(&self, src: &[Complex64], dst: &mut [Complex64]) {
        for (i, &p) in self.perm.iter().enumerate() {
            dst[p] = src[i];
        }
    }

    pub fn from_fft_order(&self, src: &[Complex64], dst: &mut [Complex64]) {
        for (i, &p) in self.perm.iter().enumerate() {
            dst[i] = src[p];
        }
    }

    /// Unnormalized forward DFT (`e^{-i j x}`) over all axes, FFT ordering.
    pub fn forward_in_place(&mut self, buf: &mut [Complex64]) {
        self.process(buf, false);
    }

    /// Unnormalized inverse DFT (`e^{+i j x}`) over all axes, FFT ordering.
    pub fn inverse_in_place(&mut self, buf: &mut [Complex64]) {
        self.process(buf, true);
    }

    fn process(&mut self, buf: &mut [Complex64], inverse: bool) {
        let plan = if inverse {
            &self.inverse
        } else {
            &self.forward
        };
        let n = self.grid.points_per_axis();
        let d = self.grid.dim();
        // Last axis is contiguous.
        for chunk in buf.chunks_exact_mut(n) {
            plan.process_with_scratch(chunk, &mut self.scratch);
        }
        for axis in 0..d.saturating_sub(1) {
            let stride = n.pow((d - 1 - axis) as u32);
            let block = stride * n;
            for outer in (0..buf.len()).step_by(block) {
                for inner in 0..stride {
                    let base = outer + inner;
                    for (i, slot) in self.line.iter_mut().enumerate() {
                        *slot = buf[base + i * stride];
                    }
                    plan.process_with_scratch(&mut self.line, &mut self.scratch);
                    for (i, v) in self.line.iter().enumerate() {
                        buf[base + i * stride] = *v;
                    }
                }
            }
        }
    }

    /// Collocation values of the polynomial with the given coefficients.
    pub fn values(&mut self, coeffs: &[Complex64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::default(); coeffs.len()];
        self.to_fft_order(coeffs, &mut buf);
        self.inverse_in_place(&mut buf);
        let mut out = vec![Complex64::default(); coeffs.len()];
        self.from_fft_order(&buf, &mut out);
        out
    }

    /// Coefficients of the trigonometric interpolant of the given values.
    pub fn coefficients(&mut self, values: &[Complex64]) -> Vec<Complex64> {
        let mut buf = vec![Complex64::default(); values.len()];
        self.to_fft_order(values, &mut buf);
        self.forward_in_place(&mut buf);
        let scale = 1.0 / self.grid.len() as f64;
        let mut out = vec![Complex64::default(); values.len()];
        self.from_fft_order(&buf, &mut out);
        out.iter_mut().for_each(|c| *c *= scale);
        out
    }
}

/// A trigonometric polynomial on a grid, held by its Fourier coefficients.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralField {
    grid: Grid,
    coeffs: Vec<Complex64>,
}

impl SpectralField {
    pub fn new(grid: Grid, coeffs: Vec<Complex64>) -> Result<Self> {
        if coeffs.len() != grid.len() {
            return Err(Error::SizeMismatch {
                expected: grid.len(),
                actual: coeffs.len(),
            });
        }
        Ok(SpectralField { grid, coeffs })
    }

    pub fn zeros(grid: Grid) -> Self {
        SpectralField {
            grid,
            coeffs: vec![Complex64::default(); grid.len()],
        }
    }

    /// `rho e^{i ell.x}`.
    pub fn plane_wave(grid: Grid, rho: f64, ell: &Mode) -> Result<Self> {
        let mut f = Self::zeros(grid);
        let idx = grid.index_of(ell)?;
        f.coeffs[idx] = Complex64::new(rho, 0.0);
        Ok(f)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<Complex64> {
        self.coeffs
    }

    pub fn coeff(&self, mode: &Mode) -> Result<Complex64> {
        Ok(self.coeffs[self.grid.index_of(mode)?])
    }

    /// Collocation values, row-major over axes in grid ordering.
    pub fn values(&self) -> Vec<Complex64> {
        Fourier::new(self.grid).values(&self.coeffs)
    }

    /// `sum_j |u_j|^2`, the squared L2 norm.
    pub fn mass(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn sobolev_norm(&self, s: f64) -> f64 {
        sobolev_norm(self, s)
    }

    pub fn scale(&self, factor: Complex64) -> SpectralField {
        SpectralField {
            grid: self.grid,
            coeffs: self.coeffs.iter().map(|c| c * factor).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &SpectralField) -> f64 {
        self.coeffs
            .iter()
            .zip(&other.coeffs)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Trigonometric interpolation of collocation values (grid ordering).
pub fn trig_interpolate(values: &[Complex64], grid: &Grid) -> Result<SpectralField> {
    if values.len() != grid.len() {
        return Err(Error::SizeMismatch {
            expected: grid.len(),
            actual: values.len(),
        });
    }
    let coeffs = Fourier::new(*grid).coefficients(values);
    Ok(SpectralField {
        grid: *grid,
        coeffs,
    })
}

/// `|j|^{2s}` with the convention that it vanishes at `j = 0`.
pub(crate) fn sobolev_weight(norm_sq: i64, s: f64) -> f64 {
    if norm_sq == 0 {
        0.0
    } else if s == 0.0 {
        1.0
    } else {
        (s * (norm_sq as f64).ln()).exp()
    }
}

/// `||u||_s^2 = |u_0|^2 + sum_{j != 0} |j|^{2s} |u_j|^2`.
pub fn sobolev_norm(f: &SpectralField, s: f64) -> f64 {
    let zero = f.grid.zero_index();
    let total: f64 = f
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, c)| {
            let w = if i == zero {
                1.0
            } else {
                sobolev_weight(f.grid.mode_at(i).norm_sq(), s)
            };
            w * c.norm_sqr()
        })
        .sum();
    total.sqrt()
}

/// Removes mode `ell` and recentres: output `j` holds input `j + ell mod 2K`,
/// output `0` is zero.
pub fn project_away(f: &SpectralField, ell: &Mode) -> Result<SpectralField> {
    let grid = f.grid;
    grid.index_of(ell)?;
    let zero = grid.zero_index();
    let mut out = vec![Complex64::default(); grid.len()];
    let mut shifted = vec![0i64; grid.dim()];
    for (i, slot) in out.iter_mut().enumerate() {
        if i == zero {
            continue;
        }
        let j = grid.mode_at(i);
        for (s, (a, b)) in shifted.iter_mut().zip(j.0.iter().zip(&ell.0)) {
            *s = a + b;
        }
        *slot = f.coeffs[grid.reduced_index(&shifted)];
    }
    Ok(SpectralField { grid, coeffs: out })
}

/// `||F_{not ell}(u)||_s`, the distance of `u` to the plane-wave orbit.
pub fn orbital_distance(f: &SpectralField, ell: &Mode, s: f64) -> Result<f64> {
    Ok(sobolev_norm(&project_away(f, ell)?, s))
}
