//! Finite non-resonance check on the frequencies of a [`FrequencyTable`].
//!
//! Modes with bitwise equal frequency form a class; vectors `k` are indexed
//! by classes (one representative per class), so `k` never pairs two modes
//! that share a frequency. Part (c) refines classes by `n(j)` into cells so
//! that imbalance in `n` stays visible.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use super::{FrequencyIssue, FrequencyTable};
use crate::error::{Error, Result};
use crate::spectral::Mode;

/// Relative tolerance for complete resonance, measured against `2 pi`.
pub const RESONANCE_TOL: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum S2 {
    /// `s2 = factor * N`
    PerN(f64),
    Fixed(f64),
}

impl S2 {
    pub fn resolve(self, n: u32) -> f64 {
        match self {
            S2::PerN(f) => f * n as f64,
            S2::Fixed(v) => v,
        }
    }
}

impl std::str::FromStr for S2 {
    type Err = Error;

    /// Accepts `"5N"`, `"1.6N"` or a plain number.
    fn from_str(s: &str) -> Result<Self> {
        let t = s.trim();
        let parse = |v: &str| {
            v.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad s2 value {s:?}")))
        };
        let v = match t.strip_suffix(['N', 'n']) {
            Some("") => S2::PerN(1.0),
            Some(f) => S2::PerN(parse(f.trim_end_matches('*'))?),
            None => S2::Fixed(parse(t)?),
        };
        let x = match v {
            S2::PerN(x) | S2::Fixed(x) => x,
        };
        if !(x > 0.0 && x.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "s2 must be positive, got {s:?}"
            )));
        }
        Ok(v)
    }
}

impl std::fmt::Display for S2 {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            S2::PerN(x) => write!(f, "{x}N"),
            S2::Fixed(x) => write!(f, "{x}"),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceParams {
    pub n: u32,
    pub c2: f64,
    pub delta2: f64,
    pub s2: S2,
    /// Requested frequency perturbation. Zero means the numerical frequencies are used as is.
    pub eps_hat: f64,
    /// Keep enumerating after the first violation.
    pub exhaustive: bool,
}

impl ResonanceParams {
    pub fn validate(&self) -> Result<()> {
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!(
                "N must be at least 2, got {}",
                self.n
            )));
        }
        let s2 = self.s2.resolve(self.n);
        for (name, v) in [("c2", self.c2), ("delta2", self.delta2), ("s2", s2)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        if !(self.eps_hat >= 0.0 && self.eps_hat.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "eps_hat must be nonnegative, got {}",
                self.eps_hat
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FrequencySource {
    /// `varpi := omega`, so `eps_hat = 0`.
    Numerical,
    Modified,
}

/// Sparse integer vector over class (or cell) representatives.
pub type ClassVector = Vec<(Mode, i64)>;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NearResonance {
    pub k: ClassVector,
    pub delta: f64,
    /// Mode attaining the largest `|l|^4 / prod |j|^{2|k_j|}`.
    pub l: Mode,
    pub lhs: f64,
    pub rhs: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct UnbalancedResonance {
    pub k: ClassVector,
    pub residual: f64,
    /// Values of `n` whose coefficients do not cancel.
    pub unbalanced_n: Vec<i64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ResonanceReport {
    pub holds: bool,
    pub params: ResonanceParams,
    pub s2: f64,
    pub source: FrequencySource,
    /// Set when the frequencies needed for the check are not all defined.
    pub unavailable: Option<String>,
    pub classes: usize,
    pub cells: usize,
    pub part_a_holds: bool,
    pub frequency_deviation: Option<f64>,
    pub part_b_holds: bool,
    pub vectors_checked: u64,
    pub near_resonances: u64,
    /// Near resonance with the smallest `rhs - lhs`.
    pub tightest: Option<NearResonance>,
    pub part_b_witnesses: Vec<NearResonance>,
    pub part_c_holds: bool,
    pub cell_vectors_checked: u64,
    pub part_c_witnesses: Vec<UnbalancedResonance>,
}

#[derive(Clone, Debug)]
struct Atom {
    rep: Mode,
    rep_norm_sq: i64,
    max_norm_sq: i64,
    max_mode: Mode,
    value: f64,
    n: i64,
}

fn group(entries: &[(Mode, f64, i64)], by_n: bool) -> Vec<Atom> {
    let mut map: BTreeMap<(u64, i64), Atom> = BTreeMap::new();
    for (mode, value, n) in entries {
        let key = ((value + 0.0).to_bits(), if by_n { *n } else { 0 });
        let ns = mode.norm_sq();
        map.entry(key)
            .and_modify(|a| {
                if ns < a.rep_norm_sq {
                    a.rep = mode.clone();
                    a.rep_norm_sq = ns;
                }
                if ns > a.max_norm_sq {
                    a.max_norm_sq = ns;
                    a.max_mode = mode.clone();
                }
            })
            .or_insert_with(|| Atom {
                rep: mode.clone(),
                rep_norm_sq: ns,
                max_norm_sq: ns,
                max_mode: mode.clone(),
                value: *value,
                n: *n,
            });
    }
    let mut atoms: Vec<Atom> = map.into_values().collect();
    atoms.sort_by(|a, b| (a.rep_norm_sq, &a.rep).cmp(&(b.rep_norm_sq, &b.rep)));
    atoms
}

/// Visits every nonzero `k` with `|k|_1 <= max_l1` together with `h * sum k_c value_c`.
/// Stops when `visit` returns false.
fn enumerate(
    values: &[f64],
    h: f64,
    max_l1: i64,
    visit: &mut dyn FnMut(&[i64], f64) -> bool,
) -> bool {
    #[allow(clippy::too_many_arguments)]
    fn rec(
        pos: usize,
        rem: i64,
        theta: f64,
        k: &mut [i64],
        values: &[f64],
        h: f64,
        visit: &mut dyn FnMut(&[i64], f64) -> bool,
        any: bool,
    ) -> bool {
        if pos == k.len() || rem == 0 {
            if !any {
                return true;
            }
            return visit(k, theta);
        }
        for v in -rem..=rem {
            k[pos] = v;
            let cont = rec(
                pos + 1,
                rem - v.abs(),
                theta + h * v as f64 * values[pos],
                k,
                values,
                h,
                visit,
                any || v != 0,
            );
            if !cont {
                k[pos] = 0;
                return false;
            }
        }
        k[pos] = 0;
        true
    }
    let mut k = vec![0i64; values.len()];
    rec(0, max_l1, 0.0, &mut k, values, h, visit, false)
}

fn sparse(k: &[i64], atoms: &[Atom]) -> ClassVector {
    k.iter()
        .zip(atoms)
        .filter(|(v, _)| **v != 0)
        .map(|(v, a)| (a.rep.clone(), *v))
        .collect()
}

/// Residual of `theta` modulo `2 pi`, in `[-pi, pi]`.
pub fn wrap_phase(theta: f64) -> f64 {
    theta - 2.0 * PI * (theta / (2.0 * PI)).round()
}

pub fn check_assumption2(
    table: &FrequencyTable,
    params: &ResonanceParams,
) -> Result<ResonanceReport> {
    params.validate()?;
    let s2 = params.s2.resolve(params.n);
    let h = table.h;

    let source = if table.ell.is_zero() && params.eps_hat > 0.0 {
        FrequencySource::Modified
    } else {
        FrequencySource::Numerical
    };

    let mut report = ResonanceReport {
        holds: false,
        params: *params,
        s2,
        source,
        unavailable: None,
        classes: 0,
        cells: 0,
        part_a_holds: false,
        frequency_deviation: None,
        part_b_holds: false,
        vectors_checked: 0,
        near_resonances: 0,
        tightest: None,
        part_b_witnesses: Vec::new(),
        part_c_holds: false,
        cell_vectors_checked: 0,
        part_c_witnesses: Vec::new(),
    };

    let mut entries = Vec::with_capacity(table.modes.len());
    for m in &table.modes {
        let (value, issue) = match source {
            FrequencySource::Numerical => (m.omega, m.omega_issue),
            FrequencySource::Modified => (m.varpi, m.varpi_issue),
        };
        match value {
            Some(v) => entries.push((m.mode.clone(), v, m.n)),
            None => {
                let issue = issue.unwrap_or(FrequencyIssue::NotConstructed);
                report.unavailable = Some(format!(
                    "frequency undefined at mode {} ({issue:?})",
                    m.mode
                ));
                return Ok(report);
            }
        }
    }

    match source {
        FrequencySource::Numerical => {
            report.part_a_holds = true;
            report.frequency_deviation = Some(0.0);
        }
        FrequencySource::Modified => {
            report.frequency_deviation = table.eps_hat;
            report.part_a_holds = table.eps_hat.is_some_and(|e| e <= params.eps_hat);
        }
    }

    let max_l1 = params.n as i64 + 1;
    let exponent = params.n as f64 / s2;

    let classes = group(&entries, false);
    report.classes = classes.len();
    let values: Vec<f64> = classes.iter().map(|a| a.value).collect();
    let mut violations = Vec::new();
    let mut tightest: Option<(f64, NearResonance)> = None;
    let (mut checked, mut near) = (0u64, 0u64);
    enumerate(&values, h, max_l1, &mut |k, theta| {
        checked += 1;
        let delta = 2.0 * (0.5 * theta).sin().abs() / h;
        if delta > params.delta2 {
            return true;
        }
        near += 1;
        let mut prod = 1.0f64;
        for (v, a) in k.iter().zip(&classes) {
            if *v != 0 {
                prod *= (a.rep_norm_sq as f64).powi(v.abs() as i32);
            }
        }
        let (mut lhs, mut l) = (f64::NEG_INFINITY, None);
        for (v, a) in k.iter().zip(&classes) {
            if *v != 0 {
                let q = (a.max_norm_sq as f64).powi(2) / prod;
                if q > lhs {
                    lhs = q;
                    l = Some(&a.max_mode);
                }
            }
        }
        let rhs = params.c2 * delta.powf(exponent);
        let witness = || NearResonance {
            k: sparse(k, &classes),
            delta,
            l: l.unwrap().clone(),
            lhs,
            rhs,
        };
        let margin = rhs - lhs;
        if tightest.as_ref().is_none_or(|(m, _)| margin < *m) {
            tightest = Some((margin, witness()));
        }
        if lhs > rhs {
            violations.push(witness());
            return params.exhaustive;
        }
        true
    });
    report.vectors_checked = checked;
    report.near_resonances = near;
    report.tightest = tightest.map(|(_, w)| w);
    report.part_b_holds = violations.is_empty();
    report.part_b_witnesses = violations;

    let cells = group(&entries, true);
    report.cells = cells.len();
    let values: Vec<f64> = cells.iter().map(|a| a.value).collect();
    let mut unbalanced = Vec::new();
    let mut checked = 0u64;
    enumerate(&values, h, max_l1, &mut |k, theta| {
        checked += 1;
        let residual = wrap_phase(theta);
        if residual.abs() > 2.0 * PI * RESONANCE_TOL {
            return true;
        }
        let mut by_n: BTreeMap<i64, i64> = BTreeMap::new();
        for (v, a) in k.iter().zip(&cells) {
            *by_n.entry(a.n).or_default() += v;
        }
        let bad: Vec<i64> = by_n
            .into_iter()
            .filter(|(_, s)| *s != 0)
            .map(|(n, _)| n)
            .collect();
        if bad.is_empty() {
            return true;
        }
        unbalanced.push(UnbalancedResonance {
            k: sparse(k, &cells),
            residual,
            unbalanced_n: bad,
        });
        params.exhaustive
    });
    report.cell_vectors_checked = checked;
    report.part_c_holds = unbalanced.is_empty();
    report.part_c_witnesses = unbalanced;

    report.holds = report.part_a_holds && report.part_b_holds && report.part_c_holds;
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use crate::stability::build_frequency_table;

    fn params(n: u32, s2: S2) -> ResonanceParams {
        ResonanceParams {
            n,
            c2: 8.0,
            delta2: 0.1,
            s2,
            eps_hat: 0.0,
            exhaustive: false,
        }
    }

    #[test]
    fn s2_parsing() {
        assert_eq!("5N".parse::<S2>().unwrap(), S2::PerN(5.0));
        assert_eq!("1.6N".parse::<S2>().unwrap(), S2::PerN(1.6));
        assert_eq!("N".parse::<S2>().unwrap(), S2::PerN(1.0));
        assert_eq!("12.5".parse::<S2>().unwrap(), S2::Fixed(12.5));
        assert!("-3".parse::<S2>().is_err());
        assert!("xN".parse::<S2>().is_err());
        assert_eq!(S2::PerN(5.0).resolve(3), 15.0);
    }

    #[test]
    fn enumeration_counts() {
        // number of nonzero integer vectors of length 3 with |k|_1 <= 2 is 24
        let mut count = 0;
        enumerate(&[1.0, 2.0, 3.0], 1.0, 2, &mut |_, _| {
            count += 1;
            true
        });
        assert_eq!(count, 24);
    }

    #[test]
    fn enumeration_phase_is_consistent() {
        let values = [0.3, -1.7, 2.9, 4.1];
        enumerate(&values, 0.5, 3, &mut |k, theta| {
            let direct: f64 = k
                .iter()
                .zip(&values)
                .map(|(a, b)| 0.5 * *a as f64 * b)
                .sum();
            assert!((direct - theta).abs() < 1e-12);
            true
        });
    }

    #[test]
    fn reference_step_sizes_pass() {
        let g = Grid::new(16, 1).unwrap();
        for (h, s2) in [(0.04, S2::PerN(5.0)), (0.044, S2::PerN(1.6))] {
            let t = build_frequency_table(h, 0.4f64.sqrt(), -1.0, &Mode::from(0), &g).unwrap();
            for n in 2..=3 {
                let r = check_assumption2(&t, &params(n, s2)).unwrap();
                assert!(r.holds, "h={h} N={n}: {:?}", r.tightest);
                assert_eq!(r.classes, 16);
            }
        }
    }

    #[test]
    fn unstable_table_is_unavailable() {
        let g = Grid::new(16, 1).unwrap();
        let t = build_frequency_table(0.042, 0.4f64.sqrt(), -1.0, &Mode::from(0), &g).unwrap();
        let r = check_assumption2(&t, &params(2, S2::PerN(5.0))).unwrap();
        assert!(!r.holds);
        assert!(r.unavailable.is_some());
    }

    #[test]
    fn exact_resonance_is_reported() {
        // Without coupling and with h = 2 pi / 8, omega_j = n mod 8 aligns
        // |j| = 1 and |j| = 3 up to a full turn: 9 h = h + 2 pi.
        let g = Grid::new(3, 1).unwrap();
        let h = 2.0 * PI / 8.0;
        let t = build_frequency_table(h, 0.0, -1.0, &Mode::from(0), &g).unwrap();
        let mut p = params(2, S2::PerN(5.0));
        p.exhaustive = true;
        let r = check_assumption2(&t, &p).unwrap();
        assert!(!r.part_c_holds || !r.part_b_holds);
    }

    #[test]
    fn rejects_bad_params() {
        let g = Grid::new(4, 1).unwrap();
        let t = build_frequency_table(0.01, 0.5, -1.0, &Mode::from(0), &g).unwrap();
        assert!(check_assumption2(&t, &params(1, S2::PerN(5.0))).is_err());
        let mut p = params(2, S2::PerN(5.0));
        p.c2 = 0.0;
        assert!(check_assumption2(&t, &p).is_err());
    }

    #[test]
    fn modified_source_checks_deviation() {
        let g = Grid::new(4, 1).unwrap();
        let t = build_frequency_table(0.005, 0.5, -1.0, &Mode::from(0), &g).unwrap();
        let dev = t.eps_hat.unwrap();
        let mut p = params(2, S2::PerN(5.0));
        p.eps_hat = dev * 2.0;
        let r = check_assumption2(&t, &p).unwrap();
        assert_eq!(r.source, FrequencySource::Modified);
        assert!(r.part_a_holds);
        p.eps_hat = dev / 2.0;
        let r = check_assumption2(&t, &p).unwrap();
        assert!(!r.part_a_holds && !r.holds);
    }
}
