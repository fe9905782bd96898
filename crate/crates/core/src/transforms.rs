//! Coordinates around a plane wave.
//!
//! `u -> v`: recentre at the carrier, `v_j = u_{ell+j mod 2K}`.
//! `v -> w`: remove the carrier phase, `w_j = v_j e^{-i theta}` with `v_0 = a e^{i theta}`.
//! `w -> xi`: per pair `(j, -j)`, `(xi_j, conj xi_{-j}) = S_j (w_j, conj w_{-j})`,
//! which diagonalizes the linearized Lie-Trotter step.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{sobolev_weight, Grid, Mode, SpectralField};
use crate::stability::{Linearization, Matrix2};

const IDENTITY: Matrix2 = [
    [Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)],
    [Complex64::new(0.0, 0.0), Complex64::new(1.0, 0.0)],
];

/// Entry bound `sqrt(1 + rho^2 / (2 sqrt(c1)))` for `S_j` and `S_j^{-1}`.
pub fn entry_bound(c1: f64, rho: f64) -> f64 {
    (1.0 + rho * rho / (2.0 * c1.sqrt())).sqrt()
}

/// Constants `(c_hat, C_hat)` with `c_hat ||xi||_s <= ||F_{not ell} u||_s <= C_hat ||xi||_s`.
///
/// A unimodular matrix `[[p, conj q], [q, conj p]]` has operator norm `|p| + |q|`,
/// and `|q|^2 = |p|^2 - 1` with `|p|` at most the entry bound `b`.
pub fn norm_equivalence_constants(c1: f64, rho: f64) -> (f64, f64) {
    let b = entry_bound(c1, rho);
    let kappa = b + (b * b - 1.0).max(0.0).sqrt();
    (1.0 / kappa, kappa)
}

/// `S_j` and `S_j^{-1}` for every mode, in grid order. The zero mode holds the identity.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagonalizerSet {
    pub lin: Linearization,
    pub s: Vec<Matrix2>,
    pub s_inv: Vec<Matrix2>,
    /// Set when `rho = 0`: the linear part is already diagonal and `S_j` is the identity.
    pub degenerate_coupling: bool,
    shift_index: Vec<usize>,
    neg_index: Vec<usize>,
}

impl DiagonalizerSet {
    pub fn grid(&self) -> &Grid {
        &self.lin.grid
    }

    pub fn ell(&self) -> &Mode {
        &self.lin.ell
    }

    pub fn get(&self, j: &Mode) -> Result<(&Matrix2, &Matrix2)> {
        let i = self.lin.grid.index_of(j)?;
        Ok((&self.s[i], &self.s_inv[i]))
    }

    pub fn max_entry_modulus(&self) -> f64 {
        self.s
            .iter()
            .chain(&self.s_inv)
            .flat_map(|m| m.iter().flatten())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }
}

pub fn build_diagonalizers(
    h: f64,
    rho: f64,
    lambda: f64,
    ell: &Mode,
    grid: &Grid,
) -> Result<DiagonalizerSet> {
    let lin = Linearization::new(*grid, ell.clone(), h, rho, lambda)?;
    let zero = grid.zero_index();
    let degenerate_coupling = rho == 0.0;
    let mut s = vec![IDENTITY; grid.len()];
    let mut s_inv = vec![IDENTITY; grid.len()];
    let mut shift_index = Vec::with_capacity(grid.len());
    let mut neg_index = Vec::with_capacity(grid.len());
    let mut buf = vec![0i64; grid.dim()];
    for i in 0..grid.len() {
        let j = grid.mode_at(i);
        for (b, (x, y)) in buf.iter_mut().zip(j.0.iter().zip(&ell.0)) {
            *b = x + y;
        }
        shift_index.push(grid.reduced_index(&buf));
        for (b, x) in buf.iter_mut().zip(&j.0) {
            *b = -x;
        }
        neg_index.push(grid.reduced_index(&buf));
        if i == zero || degenerate_coupling {
            continue;
        }
        let mm = lin.mode_matrix(&j)?;
        let Some(q) = mm.eigen_gap() else {
            return Err(Error::NotLinearlyStable { mode: j });
        };
        let normalizer = mm.beta.norm_sqr() - q.norm_sqr();
        if normalizer.is_nan() || normalizer <= 0.0 {
            return Err(Error::NotLinearlyStable { mode: j });
        }
        let c = 1.0 / normalizer.sqrt();
        let p = mm.beta * c;
        let q = q * c;
        s_inv[i] = [[p, q.conj()], [q, p.conj()]];
        s[i] = [[p.conj(), -q.conj()], [-q, p]];
    }
    Ok(DiagonalizerSet {
        lin,
        s,
        s_inv,
        degenerate_coupling,
        shift_index,
        neg_index,
    })
}

/// A field in diagonal coordinates. `xi` is stored in grid order with `xi[0-mode] = 0`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct XiField {
    pub grid: Grid,
    pub ell: Mode,
    pub h: f64,
    pub rho: f64,
    pub lambda: f64,
    pub xi: Vec<Complex64>,
    pub theta: f64,
    pub a: f64,
    /// `||u||_0^2`, equal to `a^2 + sum_j |w_j|^2`.
    pub mass: f64,
}

impl XiField {
    pub fn xi_at(&self, j: &Mode) -> Result<Complex64> {
        Ok(self.xi[self.grid.index_of(j)?])
    }

    /// `||xi||_s` over the nonzero modes.
    pub fn sobolev_norm(&self, s: f64) -> f64 {
        self.xi
            .iter()
            .enumerate()
            .map(|(i, x)| sobolev_weight(self.grid.mode_at(i).norm_sq(), s) * x.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

fn apply_pairs(input: &[Complex64], m: &[Matrix2], neg: &[usize], zero: usize) -> Vec<Complex64> {
    let mut out = vec![Complex64::default(); input.len()];
    for (i, slot) in out.iter_mut().enumerate() {
        if i != zero {
            *slot = m[i][0][0] * input[i] + m[i][0][1] * input[neg[i]].conj();
        }
    }
    out
}

pub fn u_to_xi(u: &SpectralField, set: &DiagonalizerSet) -> Result<XiField> {
    let grid = *set.grid();
    if u.grid() != &grid {
        return Err(Error::SizeMismatch {
            expected: grid.len(),
            actual: u.grid().len(),
        });
    }
    let zero = grid.zero_index();
    let c = u.coeffs();
    let v0 = c[set.shift_index[zero]];
    if v0 == Complex64::default() {
        return Err(Error::ZeroCarrierMode);
    }
    let (a, theta) = v0.to_polar();
    let rot = Complex64::from_polar(1.0, -theta);
    let mut w: Vec<Complex64> = set.shift_index.iter().map(|&k| c[k] * rot).collect();
    w[zero] = Complex64::default();
    let xi = apply_pairs(&w, &set.s, &set.neg_index, zero);
    Ok(XiField {
        grid,
        ell: set.lin.ell.clone(),
        h: set.lin.h,
        rho: set.lin.rho,
        lambda: set.lin.lambda,
        xi,
        theta,
        a,
        mass: u.mass(),
    })
}

pub fn xi_to_u(xi: &XiField, set: &DiagonalizerSet) -> Result<SpectralField> {
    let grid = *set.grid();
    if xi.xi.len() != grid.len() {
        return Err(Error::SizeMismatch {
            expected: grid.len(),
            actual: xi.xi.len(),
        });
    }
    let zero = grid.zero_index();
    let w = apply_pairs(&xi.xi, &set.s_inv, &set.neg_index, zero);
    let rest: f64 = w.iter().map(|z| z.norm_sqr()).sum();
    let radicand = xi.mass - rest;
    if radicand < 0.0 {
        return Err(Error::MassDeficit { excess: -radicand });
    }
    let phase = Complex64::from_polar(1.0, xi.theta);
    let mut coeffs = vec![Complex64::default(); grid.len()];
    for (i, wi) in w.iter().enumerate() {
        let v = if i == zero {
            Complex64::new(radicand.sqrt(), 0.0)
        } else {
            *wi
        };
        coeffs[set.shift_index[i]] = v * phase;
    }
    SpectralField::new(grid, coeffs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::integrator::{SplitStepper, StepScheme};
    use crate::spectral::project_away;
    use crate::stability::{mat_det, mat_mul};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha20Rng;

    fn g16() -> Grid {
        Grid::new(16, 1).unwrap()
    }

    fn random_field(
        grid: Grid,
        ell: &Mode,
        rho: f64,
        eta: f64,
        rng: &mut impl Rng,
    ) -> SpectralField {
        let mut c: Vec<Complex64> = (0..grid.len())
            .map(|_| Complex64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5) * eta)
            .collect();
        c[grid.index_of(ell).unwrap()] = Complex64::from_polar(rho, rng.random::<f64>() * 6.0);
        SpectralField::new(grid, c).unwrap()
    }

    #[test]
    fn determinants_and_bound_on_reference_parameters() {
        let set = build_diagonalizers(0.04, 0.4f64.sqrt(), -1.0, &Mode::from(0), &g16()).unwrap();
        for (s, si) in set.s.iter().zip(&set.s_inv) {
            assert!((mat_det(s) - 1.0).norm() < 1e-12);
            let prod = mat_mul(s, si);
            assert!((prod[0][0] - 1.0).norm() < 1e-12 && prod[0][1].norm() < 1e-12);
        }
        assert!(set.max_entry_modulus() <= entry_bound(0.2, 0.4f64.sqrt()));
        assert!((entry_bound(0.2, 0.4f64.sqrt()) - 1.2030).abs() < 1e-4);
    }

    #[test]
    fn conjugation_diagonalizes_propagation() {
        for (ell, h) in [(0i64, 0.04), (0, 0.044), (3, 0.01), (-5, 0.005)] {
            let set =
                build_diagonalizers(h, 0.4f64.sqrt(), -1.0, &Mode::from(ell), &g16()).unwrap();
            for j in set.lin.nonzero_modes() {
                let (s, si) = set.get(&j).unwrap();
                let p = set.lin.mode_matrix(&j).unwrap().propagation();
                let d = mat_mul(&mat_mul(s, &p), si);
                let w = set.lin.omega(&j).unwrap();
                let shift = set.lin.mode_matrix(&j).unwrap().shift as f64;
                assert!(d[0][1].norm() < 1e-12 && d[1][0].norm() < 1e-12);
                assert!((d[0][0] - Complex64::from_polar(1.0, -w * h)).norm() < 1e-12);
                assert!(
                    (d[1][1] - Complex64::from_polar(1.0, (w - 2.0 * shift) * h)).norm() < 1e-12
                );
            }
        }
    }

    #[test]
    fn zero_coupling_is_identity() {
        let set = build_diagonalizers(0.04, 0.0, -1.0, &Mode::from(0), &g16()).unwrap();
        assert!(set.degenerate_coupling);
        assert!(set.s.iter().all(|m| *m == IDENTITY));
    }

    #[test]
    fn unstable_parameters_are_rejected() {
        let r = build_diagonalizers(0.042, 0.4f64.sqrt(), -1.0, &Mode::from(0), &g16());
        assert!(matches!(r, Err(Error::NotLinearlyStable { .. })));
    }

    #[test]
    fn plane_wave_maps_to_origin() {
        let ell = Mode::from(2);
        let set = build_diagonalizers(0.04, 0.5, -1.0, &ell, &g16()).unwrap();
        let u = SpectralField::plane_wave(g16(), 0.5, &ell).unwrap();
        let x = u_to_xi(&u, &set).unwrap();
        assert!(x.xi.iter().all(|z| *z == Complex64::default()));
        assert_eq!((x.a, x.theta), (0.5, 0.0));

        let x = XiField { theta: 0.7, ..x };
        let back = xi_to_u(&x, &set).unwrap();
        let expect = SpectralField::plane_wave(g16(), 0.5, &ell)
            .unwrap()
            .scale(Complex64::from_polar(1.0, 0.7));
        assert!(back.max_abs_diff(&expect) < 1e-15);
    }

    #[test]
    fn zero_carrier_is_rejected() {
        let set = build_diagonalizers(0.04, 0.5, -1.0, &Mode::from(0), &g16()).unwrap();
        let u = SpectralField::plane_wave(g16(), 0.5, &Mode::from(1)).unwrap();
        assert!(matches!(u_to_xi(&u, &set), Err(Error::ZeroCarrierMode)));
    }

    #[test]
    fn round_trips() {
        let mut rng = ChaCha20Rng::seed_from_u64(7);
        for (k, d, ell) in [(16, 1, vec![0]), (5, 1, vec![-5]), (5, 2, vec![1, -2])] {
            let grid = Grid::new(k, d).unwrap();
            let ell = Mode(ell);
            let set = build_diagonalizers(0.005, 0.6, -1.0, &ell, &grid).unwrap();
            for _ in 0..20 {
                let u = random_field(grid, &ell, 0.6, 0.02, &mut rng);
                let x = u_to_xi(&u, &set).unwrap();
                let back = xi_to_u(&x, &set).unwrap();
                assert!(back.max_abs_diff(&u) < 1e-12);
                let x2 = u_to_xi(&back, &set).unwrap();
                let err =
                    x.xi.iter()
                        .zip(&x2.xi)
                        .map(|(a, b)| (a - b).norm())
                        .fold(0.0, f64::max);
                assert!(err < 1e-12);
            }
        }
    }

    #[test]
    fn mass_deficit_is_reported() {
        let set = build_diagonalizers(0.04, 0.5, -1.0, &Mode::from(0), &g16()).unwrap();
        let u = SpectralField::plane_wave(g16(), 0.5, &Mode::from(0)).unwrap();
        let mut x = u_to_xi(&u, &set).unwrap();
        x.xi[3] = Complex64::new(1.0, 0.0);
        assert!(matches!(xi_to_u(&x, &set), Err(Error::MassDeficit { .. })));
    }

    #[test]
    fn norm_equivalence_on_random_fields() {
        let mut rng = ChaCha20Rng::seed_from_u64(11);
        let rho = 0.4f64.sqrt();
        let ell = Mode::from(0);
        let set = build_diagonalizers(0.04, rho, -1.0, &ell, &g16()).unwrap();
        let c1 = set.lin.check_assumption1().c1_certified;
        let (lo, hi) = norm_equivalence_constants(c1, rho);
        for _ in 0..100 {
            let u = random_field(g16(), &ell, rho, 0.01, &mut rng);
            let x = u_to_xi(&u, &set).unwrap();
            let ratio = project_away(&u, &ell).unwrap().sobolev_norm(5.0) / x.sobolev_norm(5.0);
            assert!(ratio >= lo && ratio <= hi, "{ratio} not in [{lo}, {hi}]");
        }
    }

    #[test]
    fn single_mode_phase_advance() {
        let rho = 0.4f64.sqrt();
        let h = 0.04;
        let ell = Mode::from(0);
        let set = build_diagonalizers(h, rho, -1.0, &ell, &g16()).unwrap();
        let eta = 1e-6;
        for jj in [1i64, 3, -7] {
            let mut u = SpectralField::plane_wave(g16(), rho, &ell)
                .unwrap()
                .into_coeffs();
            u[g16().index_of(&Mode::from(jj)).unwrap()] = Complex64::new(eta, 0.0);
            let u = SpectralField::new(g16(), u).unwrap();
            let x0 = u_to_xi(&u, &set).unwrap();
            let mut st = SplitStepper::new(&u, StepScheme::lie_trotter(h).unwrap(), -1.0);
            st.advance();
            let x1 = u_to_xi(&st.field(), &set).unwrap();
            let j = Mode::from(jj);
            let w = set.lin.omega(&j).unwrap();
            let pred = x0.xi_at(&j).unwrap() * Complex64::from_polar(1.0, -w * h);
            assert!((x1.xi_at(&j).unwrap() - pred).norm() < 1e-11);
        }
    }
}
