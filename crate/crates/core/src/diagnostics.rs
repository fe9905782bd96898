//! Trajectory observables and their file formats.
//!
//! Series rows carry `t, mass, orbital_distance, D`; spectrum rows carry
//! `t, j, |u_j|`. Floats are written with 17 significant digits so that a
//! parse recovers them bit for bit.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spectral::{orbital_distance, Mode, SpectralField};
use crate::stability::n_of_j;
use crate::transforms::{u_to_xi, DiagonalizerSet, XiField};

/// `I_m = sum_{n(l) = m} |xi_l|^2`, keyed by `m`.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct SuperActionSet {
    pub actions: BTreeMap<i64, f64>,
}

impl SuperActionSet {
    pub fn total(&self) -> f64 {
        self.actions.values().sum()
    }

    pub fn get(&self, m: i64) -> f64 {
        self.actions.get(&m).copied().unwrap_or(0.0)
    }
}

pub fn super_actions(xi: &XiField) -> SuperActionSet {
    let mut actions = BTreeMap::new();
    let zero = xi.grid.zero_index();
    for (i, x) in xi.xi.iter().enumerate() {
        if i == zero {
            continue;
        }
        let m = n_of_j(&xi.grid.mode_at(i), &xi.ell, &xi.grid).expect("nonzero grid mode");
        *actions.entry(m).or_insert(0.0) += x.norm_sqr();
    }
    SuperActionSet { actions }
}

/// `sum_m max(1, m)^s |I_m - I_m^0|`.
pub fn weighted_deviation(now: &SuperActionSet, initial: &SuperActionSet, s: f64) -> Result<f64> {
    if now.actions.len() != initial.actions.len() || !now.actions.keys().eq(initial.actions.keys())
    {
        return Err(Error::ClassMismatch);
    }
    Ok(now
        .actions
        .iter()
        .zip(initial.actions.values())
        .map(|((&m, a), b)| (m.max(1) as f64).powf(s) * (a - b).abs())
        .sum())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct InstabilityVerdict {
    pub unstable: bool,
    /// First time the distance reaches `2 epsilon`.
    pub onset: Option<f64>,
    /// Least-squares slope of `ln(distance)` per unit time on the first
    /// contiguous stretch inside `[2 epsilon, 50 epsilon]`.
    pub growth_rate: Option<f64>,
    pub fit_points: usize,
    pub peak: f64,
}

pub fn detect_instability(
    times: &[f64],
    distance: &[f64],
    epsilon: f64,
    threshold_factor: f64,
) -> InstabilityVerdict {
    let peak = distance.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let unstable = distance
        .iter()
        .any(|d| d.is_nan() || *d > threshold_factor * epsilon);
    let lo = 2.0 * epsilon;
    let hi = 50.0 * epsilon;
    let start = distance.iter().position(|d| *d >= lo);
    let onset = start.map(|i| times[i]);
    let mut fit: Vec<(f64, f64)> = Vec::new();
    if let Some(i0) = start {
        for (t, d) in times[i0..].iter().zip(&distance[i0..]) {
            if !(*d >= lo && *d <= hi) {
                break;
            }
            fit.push((*t, d.ln()));
        }
    }
    let growth_rate = least_squares_slope(&fit);
    InstabilityVerdict {
        unstable,
        onset,
        growth_rate,
        fit_points: fit.len(),
        peak,
    }
}

pub fn least_squares_slope(points: &[(f64, f64)]) -> Option<f64> {
    if points.len() < 2 {
        return None;
    }
    let n = points.len() as f64;
    let mx = points.iter().map(|p| p.0).sum::<f64>() / n;
    let my = points.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = points.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = points.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesRow {
    pub t: f64,
    pub mass: f64,
    pub orbital_distance: f64,
    /// Weighted super-action deviation; NaN when the diagonal coordinates are unavailable.
    pub deviation: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectrumRow {
    pub t: f64,
    pub j: Mode,
    pub abs_u: f64,
}

/// Run parameters and summary written to the metadata sidecar.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunMeta {
    pub code_version: String,
    pub run_id: String,
    pub scheme: String,
    pub h: f64,
    pub k: usize,
    pub d: usize,
    pub rho: f64,
    pub lambda: f64,
    pub ell: Mode,
    pub s: f64,
    pub epsilon: f64,
    pub seed: u64,
    pub n_steps: usize,
    pub cadence: usize,
    pub datum: String,
    #[serde(default)]
    pub extra: BTreeMap<String, serde_json::Value>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryDiagnostics {
    pub meta: RunMeta,
    pub series: Vec<SeriesRow>,
    pub spectrum: Vec<SpectrumRow>,
}

impl TrajectoryDiagnostics {
    pub fn times(&self) -> Vec<f64> {
        self.series.iter().map(|r| r.t).collect()
    }

    pub fn distances(&self) -> Vec<f64> {
        self.series.iter().map(|r| r.orbital_distance).collect()
    }

    pub fn max_distance(&self) -> f64 {
        self.series
            .iter()
            .map(|r| r.orbital_distance)
            .fold(0.0, f64::max)
    }

    /// NaN when no sample has a deviation.
    pub fn max_deviation(&self) -> f64 {
        self.series
            .iter()
            .map(|r| r.deviation)
            .fold(f64::NAN, f64::max)
    }

    /// `max_n | ||u^n||_0 / ||u^0||_0 - 1 |`.
    pub fn mass_drift(&self) -> f64 {
        let Some(first) = self.series.first() else {
            return 0.0;
        };
        let m0 = first.mass.sqrt();
        self.series
            .iter()
            .map(|r| (r.mass.sqrt() / m0 - 1.0).abs())
            .fold(0.0, f64::max)
    }

    pub fn instability(&self, threshold_factor: f64) -> InstabilityVerdict {
        detect_instability(
            &self.times(),
            &self.distances(),
            self.meta.epsilon,
            threshold_factor,
        )
    }
}

/// Which steps get a per-mode snapshot: every `every` steps inside any window `[t0, t1]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SnapshotPlan {
    pub windows: Vec<(f64, f64)>,
    pub every: usize,
}

impl SnapshotPlan {
    /// Windows `[0, len]` and `[T - len, T]`, about `per_window` snapshots each.
    pub fn two_windows(horizon: f64, len: f64, h: f64, per_window: usize) -> Self {
        let window_steps = (len.min(horizon) / h).round() as usize;
        let every = window_steps.div_ceil(per_window.max(1)).max(1);
        let first = (0.0, len.min(horizon));
        let last = ((horizon - len).max(0.0), horizon);
        let windows = if last.0 <= first.1 {
            vec![(0.0, horizon)]
        } else {
            vec![first, last]
        };
        SnapshotPlan { windows, every }
    }

    pub fn none() -> Self {
        SnapshotPlan {
            windows: Vec::new(),
            every: 1,
        }
    }

    pub fn wants(&self, step: usize, h: f64) -> bool {
        let t = step as f64 * h;
        // half-step slack so that window ends hit by rounding are included
        step.is_multiple_of(self.every)
            && self
                .windows
                .iter()
                .any(|(a, b)| t >= a - 0.5 * h && t <= b + 0.5 * h)
    }
}

/// Accumulates diagnostics from integrator callbacks.
pub struct Recorder {
    data: TrajectoryDiagnostics,
    diagonalizers: Option<DiagonalizerSet>,
    initial_actions: Option<SuperActionSet>,
    series_every: usize,
    n_steps: usize,
    snapshots: SnapshotPlan,
}

impl Recorder {
    /// `diagonalizers` is `None` when the linearization has no diagonal form;
    /// the deviation column is then NaN.
    pub fn new(
        meta: RunMeta,
        diagonalizers: Option<DiagonalizerSet>,
        snapshots: SnapshotPlan,
    ) -> Self {
        Recorder {
            series_every: meta.cadence.max(1),
            n_steps: meta.n_steps,
            data: TrajectoryDiagnostics {
                meta,
                series: Vec::new(),
                spectrum: Vec::new(),
            },
            diagonalizers,
            initial_actions: None,
            snapshots,
        }
    }

    /// Integrator cadence that reaches every step this recorder wants.
    pub fn cadence(&self) -> usize {
        if self.snapshots.windows.is_empty() {
            self.series_every
        } else {
            gcd(self.series_every, self.snapshots.every)
        }
    }

    pub fn observe(&mut self, step: usize, u: &SpectralField) -> Result<()> {
        let (h, s) = (self.data.meta.h, self.data.meta.s);
        let t = step as f64 * h;
        if step.is_multiple_of(self.series_every) || step == self.n_steps {
            let dist = orbital_distance(u, &self.data.meta.ell, s)?;
            let deviation = self.deviation(u)?;
            self.data.series.push(SeriesRow {
                t,
                mass: u.mass(),
                orbital_distance: dist,
                deviation,
            });
        }
        if self.snapshots.wants(step, h) {
            let grid = *u.grid();
            for (i, c) in u.coeffs().iter().enumerate() {
                self.data.spectrum.push(SpectrumRow {
                    t,
                    j: grid.mode_at(i),
                    abs_u: c.norm(),
                });
            }
        }
        Ok(())
    }

    fn deviation(&mut self, u: &SpectralField) -> Result<f64> {
        let Some(set) = &self.diagonalizers else {
            return Ok(f64::NAN);
        };
        let Ok(xi) = u_to_xi(u, set) else {
            return Ok(f64::NAN);
        };
        let now = super_actions(&xi);
        match &self.initial_actions {
            None => {
                self.initial_actions = Some(now);
                Ok(0.0)
            }
            Some(init) => weighted_deviation(&now, init, self.data.meta.s),
        }
    }

    pub fn finish(self) -> TrajectoryDiagnostics {
        self.data
    }

    pub fn data(&self) -> &TrajectoryDiagnostics {
        &self.data
    }

    pub fn meta_mut(&mut self) -> &mut RunMeta {
        &mut self.data.meta
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a.max(1)
    } else {
        gcd(b, a % b)
    }
}

pub const SERIES_HEADER: [&str; 4] = ["t", "mass", "orbital_distance", "D"];
pub const SPECTRUM_HEADER: [&str; 3] = ["t", "j", "abs_uj"];

fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn fmt_mode(j: &Mode) -> String {
    j.0.iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(";")
}

fn csv_error(e: impl std::fmt::Display) -> Error {
    Error::Parse(e.to_string())
}

fn write_csv<const N: usize>(header: [&str; N], rows: impl Iterator<Item = [String; N]>) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    // writing into a Vec cannot fail
    w.write_record(header).expect("in-memory write");
    for r in rows {
        w.write_record(&r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("ascii output")
}

pub fn series_csv(rows: &[SeriesRow]) -> String {
    write_csv(
        SERIES_HEADER,
        rows.iter()
            .map(|r| [r.t, r.mass, r.orbital_distance, r.deviation].map(fmt_f64)),
    )
}

pub fn spectrum_csv(rows: &[SpectrumRow]) -> String {
    write_csv(
        SPECTRUM_HEADER,
        rows.iter()
            .map(|r| [fmt_f64(r.t), fmt_mode(&r.j), fmt_f64(r.abs_u)]),
    )
}

fn read_csv<const N: usize, T>(
    text: &str,
    header: [&str; N],
    mut row: impl FnMut(&csv::StringRecord, usize) -> Result<T>,
) -> Result<Vec<T>> {
    let mut r = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let found = r.headers().map_err(csv_error)?;
    if found.iter().ne(header) {
        return Err(Error::Parse(format!(
            "expected header {header:?}, got {found:?}"
        )));
    }
    r.records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec.map_err(csv_error)?;
            if rec.len() != N {
                return Err(Error::Parse(format!("row {}: expected {N} fields", i + 1)));
            }
            row(&rec, i + 1)
        })
        .collect()
}

fn parse_float(s: &str, row: usize) -> Result<f64> {
    s.trim()
        .parse()
        .map_err(|_| Error::Parse(format!("row {row}: bad number {s:?}")))
}

pub fn parse_series_csv(text: &str) -> Result<Vec<SeriesRow>> {
    read_csv(text, SERIES_HEADER, |f, n| {
        Ok(SeriesRow {
            t: parse_float(&f[0], n)?,
            mass: parse_float(&f[1], n)?,
            orbital_distance: parse_float(&f[2], n)?,
            deviation: parse_float(&f[3], n)?,
        })
    })
}

pub fn parse_spectrum_csv(text: &str) -> Result<Vec<SpectrumRow>> {
    read_csv(text, SPECTRUM_HEADER, |f, n| {
        let j = f[1]
            .split(';')
            .map(|c| {
                c.trim()
                    .parse::<i64>()
                    .map_err(|_| Error::Parse(format!("row {n}: bad mode {:?}", &f[1])))
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SpectrumRow {
            t: parse_float(&f[0], n)?,
            j: Mode(j),
            abs_u: parse_float(&f[2], n)?,
        })
    })
}

#[derive(Clone, Debug, PartialEq)]
pub struct EmittedFiles {
    pub series: PathBuf,
    pub spectrum: PathBuf,
    pub meta: PathBuf,
}

pub fn output_paths(dir: &Path, run_id: &str) -> EmittedFiles {
    EmittedFiles {
        series: dir.join(format!("{run_id}_series.csv")),
        spectrum: dir.join(format!("{run_id}_spectrum.csv")),
        meta: dir.join(format!("{run_id}_meta.json")),
    }
}

fn write_file(path: &Path, contents: &str) -> Result<()> {
    fs::write(path, contents).map_err(|e| Error::io(path, e))
}

pub fn emit(diag: &TrajectoryDiagnostics, dir: &Path) -> Result<EmittedFiles> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let paths = output_paths(dir, &diag.meta.run_id);
    write_file(&paths.series, &series_csv(&diag.series))?;
    write_file(&paths.spectrum, &spectrum_csv(&diag.spectrum))?;
    let meta = serde_json::to_string_pretty(&diag.meta).map_err(|e| Error::Parse(e.to_string()))?;
    write_file(&paths.meta, &(meta + "\n"))?;
    Ok(paths)
}

/// Reads back the three files written by [`emit`].
pub fn load(dir: &Path, run_id: &str) -> Result<TrajectoryDiagnostics> {
    let paths = output_paths(dir, run_id);
    let read = |p: &Path| fs::read_to_string(p).map_err(|e| Error::io(p, e));
    let meta: RunMeta =
        serde_json::from_str(&read(&paths.meta)?).map_err(|e| Error::Parse(e.to_string()))?;
    Ok(TrajectoryDiagnostics {
        meta,
        series: parse_series_csv(&read(&paths.series)?)?,
        spectrum: parse_spectrum_csv(&read(&paths.spectrum)?)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::Grid;
    use crate::transforms::build_diagonalizers;
    use num_complex::Complex64;
    use proptest::prelude::*;

    fn xi_with(grid: Grid, entries: &[(i64, f64)]) -> XiField {
        let mut xi = vec![Complex64::default(); grid.len()];
        for (j, a) in entries {
            xi[grid.index_of(&Mode::from(*j)).unwrap()] = Complex64::new(*a, 0.0);
        }
        XiField {
            grid,
            ell: Mode::from(0),
            h: 0.04,
            rho: 0.5,
            lambda: -1.0,
            xi,
            theta: 0.0,
            a: 0.5,
            mass: 0.25,
        }
    }

    fn meta() -> RunMeta {
        RunMeta {
            code_version: "test".into(),
            run_id: "r".into(),
            scheme: "lie-trotter".into(),
            h: 0.04,
            k: 16,
            d: 1,
            rho: 0.5,
            lambda: -1.0,
            ell: Mode::from(0),
            s: 5.0,
            epsilon: 0.01,
            seed: 1,
            n_steps: 10,
            cadence: 1,
            datum: "test".into(),
            extra: BTreeMap::new(),
        }
    }

    #[test]
    fn super_action_examples() {
        let g = Grid::new(16, 1).unwrap();
        let a = super_actions(&xi_with(g, &[(3, 0.1)]));
        assert_eq!(a.get(9), 0.1 * 0.1);
        assert_eq!(a.total(), 0.1 * 0.1);
        assert!(super_actions(&xi_with(g, &[]))
            .actions
            .values()
            .all(|v| *v == 0.0));
        let a = super_actions(&xi_with(g, &[(2, 0.3), (-2, 0.4)]));
        assert_eq!(a.get(4), 0.3 * 0.3 + 0.4 * 0.4);
        // n(j) = |j|^2 for ell = 0: sixteen classes
        assert_eq!(a.actions.len(), 16);
    }

    #[test]
    fn deviation_examples() {
        let g = Grid::new(16, 1).unwrap();
        let a = super_actions(&xi_with(g, &[(2, 0.3), (5, 0.1)]));
        assert_eq!(weighted_deviation(&a, &a, 5.0).unwrap(), 0.0);
        let mut b = a.clone();
        *b.actions.get_mut(&4).unwrap() += 1e-8;
        let d = weighted_deviation(&b, &a, 5.0).unwrap();
        assert!((d - 1.024e-5).abs() < 1e-12);
        let mut c = a.clone();
        c.actions.insert(1000, 0.0);
        assert!(matches!(
            weighted_deviation(&c, &a, 5.0),
            Err(Error::ClassMismatch)
        ));
    }

    #[test]
    fn negative_classes_use_unit_weight() {
        let mut a = SuperActionSet::default();
        a.actions.insert(-3, 1.0);
        let mut b = a.clone();
        b.actions.insert(-3, 1.5);
        assert_eq!(weighted_deviation(&b, &a, 5.0).unwrap(), 0.5);
    }

    #[test]
    fn instability_examples() {
        let t: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let flat = vec![0.01; 100];
        let v = detect_instability(&t, &flat, 0.01, 10.0);
        assert!(!v.unstable && v.onset.is_none() && v.growth_rate.is_none());

        let grow: Vec<f64> = t.iter().map(|x| 0.01 * (0.1 * x).exp()).collect();
        let v = detect_instability(&t, &grow, 0.01, 10.0);
        assert!(v.unstable);
        assert!((v.growth_rate.unwrap() - 0.1).abs() < 1e-12);
        assert_eq!(v.onset, Some(7.0));
    }

    #[test]
    fn recorder_cadence_and_initial_deviation() {
        let g = Grid::new(16, 1).unwrap();
        let set = build_diagonalizers(0.04, 0.5, -1.0, &Mode::from(0), &g).unwrap();
        let plan = SnapshotPlan {
            windows: vec![(0.0, 0.2)],
            every: 2,
        };
        let mut m = meta();
        m.cadence = 3;
        let mut r = Recorder::new(m, Some(set), plan);
        assert_eq!(r.cadence(), 1);
        let mut c = vec![Complex64::default(); g.len()];
        c[g.zero_index()] = Complex64::new(0.5, 0.0);
        c[g.index_of(&Mode::from(2)).unwrap()] = Complex64::new(1e-3, 0.0);
        let u = SpectralField::new(g, c).unwrap();
        for step in 0..=10 {
            r.observe(step, &u).unwrap();
        }
        let d = r.finish();
        let steps: Vec<f64> = d.series.iter().map(|s| (s.t / 0.04).round()).collect();
        assert_eq!(steps, vec![0.0, 3.0, 6.0, 9.0, 10.0]);
        assert_eq!(d.series[0].deviation, 0.0);
        // snapshots at steps 0, 2, 4 (t <= 0.2)
        assert_eq!(d.spectrum.len(), 3 * 32);
    }

    #[test]
    fn two_window_plan() {
        let p = SnapshotPlan::two_windows(1e4, 200.0, 0.04, 1000);
        assert_eq!(p.windows, vec![(0.0, 200.0), (9800.0, 1e4)]);
        assert_eq!(p.every, 5);
        assert!(p.wants(0, 0.04) && p.wants(250_000, 0.04));
        assert!(!p.wants(100_000, 0.04));
        let p = SnapshotPlan::two_windows(300.0, 200.0, 0.04, 1000);
        assert_eq!(p.windows, vec![(0.0, 300.0)]);
    }

    #[test]
    fn empty_trajectory_is_header_only() {
        assert_eq!(series_csv(&[]), "t,mass,orbital_distance,D\n");
        assert_eq!(spectrum_csv(&[]), "t,j,abs_uj\n");
        assert!(parse_series_csv(&series_csv(&[])).unwrap().is_empty());
    }

    #[test]
    fn emit_and_load() {
        let dir = tempfile::tempdir().unwrap();
        let diag = TrajectoryDiagnostics {
            meta: meta(),
            series: vec![SeriesRow {
                t: 0.1,
                mass: 0.4,
                orbital_distance: 1.0 / 3.0,
                deviation: f64::NAN,
            }],
            spectrum: vec![SpectrumRow {
                t: 0.1,
                j: Mode(vec![-3, 2]),
                abs_u: 2f64.sqrt(),
            }],
        };
        let files = emit(&diag, dir.path()).unwrap();
        assert!(files.series.ends_with("r_series.csv"));
        let back = load(dir.path(), "r").unwrap();
        assert_eq!(back.meta, diag.meta);
        assert_eq!(back.spectrum, diag.spectrum);
        assert!(back.series[0].deviation.is_nan());
        assert_eq!(
            back.series[0].orbital_distance.to_bits(),
            (1.0f64 / 3.0).to_bits()
        );
    }

    #[test]
    fn load_reports_missing_path() {
        let err = load(Path::new("/nonexistent/dir"), "x").unwrap_err();
        assert!(err.to_string().contains("/nonexistent/dir"));
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_bit_exact(rows in proptest::collection::vec(
            (any::<f64>(), any::<f64>(), any::<f64>(), any::<f64>()), 0..20)) {
            let rows: Vec<SeriesRow> = rows.into_iter()
                .map(|(t, mass, orbital_distance, deviation)| SeriesRow { t, mass, orbital_distance, deviation })
                .collect();
            let back = parse_series_csv(&series_csv(&rows)).unwrap();
            prop_assert_eq!(back.len(), rows.len());
            for (a, b) in back.iter().zip(&rows) {
                for (x, y) in [(a.t, b.t), (a.mass, b.mass), (a.orbital_distance, b.orbital_distance), (a.deviation, b.deviation)] {
                    prop_assert!(x.to_bits() == y.to_bits() || (x.is_nan() && y.is_nan()));
                }
            }
        }

        #[test]
        fn partition_of_actions(amps in proptest::collection::vec(-1.0f64..1.0, 32)) {
            let g = Grid::new(16, 1).unwrap();
            let entries: Vec<(i64, f64)> = (-16..16).zip(amps).filter(|(j, _)| *j != 0).collect();
            let xi = xi_with(g, &entries);
            let total: f64 = xi.xi.iter().map(|z| z.norm_sqr()).sum();
            let a = super_actions(&xi);
            prop_assert!((a.total() - total).abs() <= 1e-15 * total.max(1.0));
        }

        #[test]
        fn verdict_monotone_in_threshold(
            d in proptest::collection::vec(0.0f64..1.0, 1..50), f1 in 0.5f64..100.0, f2 in 0.5f64..100.0,
        ) {
            let t: Vec<f64> = (0..d.len()).map(|i| i as f64).collect();
            let (lo, hi) = if f1 <= f2 { (f1, f2) } else { (f2, f1) };
            let v_lo = detect_instability(&t, &d, 0.01, lo);
            let v_hi = detect_instability(&t, &d, 0.01, hi);
            prop_assert!(!v_hi.unstable || v_lo.unstable);
        }
    }
}
