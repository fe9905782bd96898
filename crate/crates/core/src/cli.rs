//! Command-line harness: configuration, random initial data, assumption
//! checks, simulations, parameter sweeps and the three reference experiments.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::diagnostics::{
    emit, EmittedFiles, InstabilityVerdict, Recorder, RunMeta, SnapshotPlan, TrajectoryDiagnostics,
};
use crate::error::{Error, Result};
use crate::integrator::{default_cadence, integrate, SplitVariant, StepScheme, Termination};
use crate::spectral::{Grid, Mode, SpectralField};
use crate::stability::resonance::S2;
use crate::stability::{
    build_frequency_table, cfl_max_h, check_assumption2, LinearStabilityReport, Linearization,
    ResonanceParams, ResonanceReport,
};
use crate::transforms::build_diagonalizers;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ASSUMPTION_FAILED: i32 = 1;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_BLOWUP: i32 = 3;

pub const DATUM_RECIPE: &str =
    "iid standard complex Gaussian c_j (ChaCha20, seed) damped by |j - ell|^-(s+1), rescaled to ||F_not_ell u||_s = epsilon, carrier set to the positive real making ||u||_0 = rho";

fn default_ell() -> Vec<i64> {
    vec![0]
}

/// Experiment configuration. Field names match the JSON config file.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub d: usize,
    #[serde(rename = "K")]
    pub k: usize,
    #[serde(default = "default_ell")]
    pub ell: Vec<i64>,
    pub lambda: f64,
    /// `rho^2`, the squared L2 norm of the datum.
    pub rho2: f64,
    pub h: f64,
    pub scheme: SplitVariant,
    /// Step count; takes precedence over `horizon`.
    pub steps: Option<usize>,
    pub horizon: f64,
    pub s: f64,
    pub epsilon: f64,
    pub seed: u64,
    #[serde(rename = "N")]
    pub n: u32,
    pub c2: f64,
    pub delta2: f64,
    pub s2: String,
    pub eps_hat: f64,
    pub exhaustive: bool,
    pub out: PathBuf,
    pub run_id: Option<String>,
    /// Series sampling cadence in steps; defaults to about 2000 samples per run.
    pub cadence: Option<usize>,
    /// Length of the two snapshot windows at the start and end of the run.
    pub snapshot_window: f64,
    pub snapshots_per_window: usize,
    /// Instability verdict threshold, in units of epsilon.
    pub threshold: f64,
    /// JSON file holding a `SpectralField` to use instead of a random datum.
    pub datum: Option<PathBuf>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            d: 1,
            k: 16,
            ell: default_ell(),
            lambda: -1.0,
            rho2: 0.4,
            h: 0.04,
            scheme: SplitVariant::LieTrotter,
            steps: None,
            horizon: 1e4,
            s: 5.0,
            epsilon: 0.01,
            seed: 1,
            n: 5,
            c2: 8.0,
            delta2: 0.1,
            s2: "5N".into(),
            eps_hat: 0.0,
            exhaustive: false,
            out: PathBuf::from("out"),
            run_id: None,
            cadence: None,
            snapshot_window: 200.0,
            snapshots_per_window: 1000,
            threshold: 10.0,
            datum: None,
        }
    }
}

impl RunConfig {
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        serde_json::from_str(&text).map_err(|e| Error::Parse(format!("{}: {e}", path.display())))
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.k, self.d)
    }

    pub fn ell_mode(&self) -> Mode {
        Mode(self.ell.clone())
    }

    pub fn rho(&self) -> f64 {
        self.rho2.sqrt()
    }

    pub fn n_steps(&self) -> usize {
        self.steps
            .unwrap_or_else(|| (self.horizon / self.h).round() as usize)
    }

    pub fn s2(&self) -> Result<S2> {
        self.s2.parse()
    }

    pub fn scheme(&self) -> Result<StepScheme> {
        StepScheme::new(self.scheme, self.h)
    }

    pub fn run_id(&self) -> String {
        self.run_id
            .clone()
            .unwrap_or_else(|| format!("{}_h{}_seed{}", self.scheme.name(), self.h, self.seed))
    }

    pub fn resonance_params(&self, n: u32) -> Result<ResonanceParams> {
        Ok(ResonanceParams {
            n,
            c2: self.c2,
            delta2: self.delta2,
            s2: self.s2()?,
            eps_hat: self.eps_hat,
            exhaustive: self.exhaustive,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let grid = self.grid()?;
        if self.ell.len() != self.d {
            return Err(Error::InvalidParameter(format!(
                "ell has {} components, expected d = {}",
                self.ell.len(),
                self.d
            )));
        }
        grid.index_of(&self.ell_mode())?;
        let positive = [
            ("h", self.h),
            ("rho2", self.rho2),
            ("c2", self.c2),
            ("delta2", self.delta2),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        let nonneg = [
            ("s", self.s),
            ("epsilon", self.epsilon),
            ("eps_hat", self.eps_hat),
            ("snapshot_window", self.snapshot_window),
        ];
        for (name, v) in nonneg {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::InvalidParameter(format!(
                    "{name} must be nonnegative, got {v}"
                )));
            }
        }
        if self.steps.is_none() && !(self.horizon >= 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "horizon must be nonnegative, got {}",
                self.horizon
            )));
        }
        if !self.lambda.is_finite() {
            return Err(Error::InvalidParameter("lambda must be finite".into()));
        }
        if self.epsilon >= self.rho() {
            return Err(Error::InvalidParameter(format!(
                "epsilon = {} must be below rho = {}",
                self.epsilon,
                self.rho()
            )));
        }
        if self.n < 2 {
            return Err(Error::InvalidParameter(format!(
                "N must be at least 2, got {}",
                self.n
            )));
        }
        if self.cadence == Some(0) {
            return Err(Error::InvalidParameter("cadence must be positive".into()));
        }
        if self.threshold.is_nan() || self.threshold <= 0.0 {
            return Err(Error::InvalidParameter("threshold must be positive".into()));
        }
        self.s2()?;
        Ok(())
    }
}

/// Random datum with `||u||_0 = rho` and `||F_not_ell u||_s = epsilon`.
pub fn random_initial_datum(config: &RunConfig) -> Result<SpectralField> {
    let grid = config.grid()?;
    let ell = config.ell_mode();
    let carrier = grid.index_of(&ell)?;
    let rho2 = config.rho2;
    if config.epsilon == 0.0 {
        return SpectralField::plane_wave(grid, config.rho(), &ell);
    }
    let mut rng = ChaCha20Rng::seed_from_u64(config.seed);
    let mut coeffs = vec![Complex64::default(); grid.len()];
    let mut weights = vec![0.0; grid.len()];
    let mut rel = vec![0i64; grid.dim()];
    for (i, c) in coeffs.iter_mut().enumerate() {
        if i == carrier {
            continue;
        }
        let j = grid.mode_at(i);
        for (r, (a, b)) in rel.iter_mut().zip(j.0.iter().zip(&ell.0)) {
            *r = a - b;
        }
        let dist2 = grid.mode_at(grid.reduced_index(&rel)).norm_sq() as f64;
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        *c = Complex64::new(re, im)
            * std::f64::consts::FRAC_1_SQRT_2
            * dist2.powf(-(config.s + 1.0) / 2.0);
        weights[i] = dist2.powf(config.s);
    }
    let hs: f64 = coeffs
        .iter()
        .zip(&weights)
        .map(|(c, w)| w * c.norm_sqr())
        .sum::<f64>()
        .sqrt();
    let scale = config.epsilon / hs;
    coeffs.iter_mut().for_each(|c| *c *= scale);
    let rest: f64 = coeffs.iter().map(|c| c.norm_sqr()).sum();
    if rest > rho2 {
        return Err(Error::MassDeficit {
            excess: rest - rho2,
        });
    }
    coeffs[carrier] = Complex64::new((rho2 - rest).sqrt(), 0.0);
    SpectralField::new(grid, coeffs)
}

#[derive(Clone, Debug, Serialize)]
pub struct CheckOutcome {
    pub assumption1: LinearStabilityReport,
    /// One report per `N' = 2..=N`.
    pub assumption2: Vec<ResonanceReport>,
    pub assumption2_holds: bool,
    pub max_growth: f64,
    pub frequency_deviation: Option<f64>,
    pub cfl_max_h: f64,
    pub cfl_satisfied: bool,
}

impl CheckOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.assumption1.holds && self.assumption2_holds {
            EXIT_OK
        } else {
            EXIT_ASSUMPTION_FAILED
        }
    }
}

pub fn cmd_check(config: &RunConfig) -> Result<CheckOutcome> {
    config.validate()?;
    let grid = config.grid()?;
    let ell = config.ell_mode();
    let lin = Linearization::new(grid, ell.clone(), config.h, config.rho(), config.lambda)?;
    let assumption1 = lin.check_assumption1();
    let table = build_frequency_table(config.h, config.rho(), config.lambda, &ell, &grid)?;
    let assumption2 = (2..=config.n)
        .map(|n| check_assumption2(&table, &config.resonance_params(n)?))
        .collect::<Result<Vec<_>>>()?;
    let cfl = cfl_max_h(config.d, config.k, config.rho(), config.n)?;
    Ok(CheckOutcome {
        assumption1,
        assumption2_holds: assumption2.iter().all(|r| r.holds),
        assumption2,
        max_growth: table.max_growth(),
        frequency_deviation: table.eps_hat,
        cfl_max_h: cfl,
        cfl_satisfied: config.h <= cfl,
    })
}

#[derive(Clone, Debug)]
pub struct SimulateOutcome {
    pub diagnostics: TrajectoryDiagnostics,
    pub files: Option<EmittedFiles>,
    pub steps_completed: usize,
    pub blew_up: bool,
    pub verdict: InstabilityVerdict,
}

impl SimulateOutcome {
    pub fn exit_code(&self) -> i32 {
        if self.blew_up {
            EXIT_BLOWUP
        } else {
            EXIT_OK
        }
    }
}

fn load_datum(path: &Path, grid: &Grid) -> Result<SpectralField> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let f: SpectralField = serde_json::from_str(&text)
        .map_err(|e| Error::Parse(format!("{}: {e}", path.display())))?;
    if f.grid() != grid || f.coeffs().len() != grid.len() {
        return Err(Error::SizeMismatch {
            expected: grid.len(),
            actual: f.coeffs().len(),
        });
    }
    Ok(f)
}

/// Integrates from the configured datum and records diagnostics. Files are
/// written when `write` is set.
pub fn cmd_simulate(config: &RunConfig, write: bool) -> Result<SimulateOutcome> {
    config.validate()?;
    let grid = config.grid()?;
    let ell = config.ell_mode();
    let datum = match &config.datum {
        Some(p) => load_datum(p, &grid)?,
        None => random_initial_datum(config)?,
    };
    let rho = datum.mass().sqrt();
    let n_steps = config.n_steps();
    let cadence = config.cadence.unwrap_or_else(|| default_cadence(n_steps));
    let meta = RunMeta {
        code_version: env!("CARGO_PKG_VERSION").into(),
        run_id: config.run_id(),
        scheme: config.scheme.name().into(),
        h: config.h,
        k: config.k,
        d: config.d,
        rho,
        lambda: config.lambda,
        ell: ell.clone(),
        s: config.s,
        epsilon: config.epsilon,
        seed: config.seed,
        n_steps,
        cadence,
        datum: match &config.datum {
            Some(p) => format!("loaded from {}", p.display()),
            None => DATUM_RECIPE.into(),
        },
        extra: Default::default(),
    };
    let diagonalizers = build_diagonalizers(config.h, rho, config.lambda, &ell, &grid).ok();
    let horizon = n_steps as f64 * config.h;
    let plan = if config.snapshots_per_window == 0 {
        SnapshotPlan::none()
    } else {
        SnapshotPlan::two_windows(
            horizon,
            config.snapshot_window,
            config.h,
            config.snapshots_per_window,
        )
    };
    let mut recorder = Recorder::new(meta, diagonalizers, plan);
    let run = integrate(
        &datum,
        config.scheme()?,
        config.lambda,
        n_steps,
        Some(recorder.cadence()),
        |step, u| recorder.observe(step, u).map_err(|e| e.to_string()),
    );
    let blew_up = match run.termination {
        Termination::Completed => false,
        Termination::NonFinite { .. } => true,
        Termination::ObserverFailed(e) => return Err(e),
    };
    let verdict = recorder.data().instability(config.threshold);
    let summary = serde_json::json!({
        "steps_completed": run.steps_completed,
        "blew_up": blew_up,
        "max_orbital_distance": recorder.data().max_distance(),
        "mass_drift": recorder.data().mass_drift(),
        "max_deviation": recorder.data().max_deviation(),
        "instability": verdict,
        "threshold": config.threshold,
    });
    recorder.meta_mut().extra.insert("summary".into(), summary);
    let diagnostics = recorder.finish();
    let files = if write {
        Some(emit(&diagnostics, &config.out)?)
    } else {
        None
    };
    Ok(SimulateOutcome {
        diagnostics,
        files,
        steps_completed: run.steps_completed,
        blew_up,
        verdict,
    })
}

/// Values along one sweep axis.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub enum Axis {
    Values(Vec<f64>),
    /// `count` evenly spaced points from `start` to `stop` inclusive.
    Range {
        start: f64,
        stop: f64,
        count: usize,
    },
}

impl Axis {
    pub fn points(&self) -> Vec<f64> {
        match self {
            Axis::Values(v) => v.clone(),
            Axis::Range { start, stop, count } => match count {
                0 => Vec::new(),
                1 => vec![*start],
                n => (0..*n)
                    .map(|i| start + (stop - start) * i as f64 / (n - 1) as f64)
                    .collect(),
            },
        }
    }
}

impl std::str::FromStr for Axis {
    type Err = Error;

    /// `a,b,c` lists values; `start:stop:count` is an even range; an empty string is an empty axis.
    fn from_str(s: &str) -> Result<Self> {
        let bad = || Error::Parse(format!("bad axis {s:?}"));
        let s = s.trim();
        if s.is_empty() {
            return Ok(Axis::Values(Vec::new()));
        }
        let parts: Vec<&str> = s.split(':').collect();
        match parts.as_slice() {
            [a, b, n] => Ok(Axis::Range {
                start: a.trim().parse().map_err(|_| bad())?,
                stop: b.trim().parse().map_err(|_| bad())?,
                count: n.trim().parse().map_err(|_| bad())?,
            }),
            [list] => list
                .split(',')
                .map(|v| v.trim().parse::<f64>().map_err(|_| bad()))
                .collect::<Result<Vec<_>>>()
                .map(Axis::Values),
            _ => Err(bad()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub h: f64,
    pub rho: f64,
    pub assumption1: Option<bool>,
    pub c1: Option<f64>,
    pub assumption2: Option<bool>,
    pub max_growth: Option<f64>,
    pub error: Option<String>,
}

/// Runs [`cmd_check`] on the grid `h x rho2`; an absent axis keeps the template value.
pub fn cmd_sweep(
    template: &RunConfig,
    h_axis: Option<&Axis>,
    rho2_axis: Option<&Axis>,
) -> Vec<SweepRow> {
    let hs = h_axis.map_or_else(|| vec![template.h], Axis::points);
    let rho2s = rho2_axis.map_or_else(|| vec![template.rho2], Axis::points);
    let points: Vec<(f64, f64)> = hs
        .iter()
        .flat_map(|h| rho2s.iter().map(move |r| (*h, *r)))
        .collect();
    points
        .par_iter()
        .map(|&(h, rho2)| {
            let config = RunConfig {
                h,
                rho2,
                ..template.clone()
            };
            match cmd_check(&config) {
                Ok(out) => SweepRow {
                    h,
                    rho: rho2.sqrt(),
                    assumption1: Some(out.assumption1.holds),
                    c1: Some(out.assumption1.c1_certified),
                    assumption2: Some(out.assumption2_holds),
                    max_growth: Some(out.max_growth),
                    error: None,
                },
                Err(e) => SweepRow {
                    h,
                    rho: rho2.sqrt(),
                    assumption1: None,
                    c1: None,
                    assumption2: None,
                    max_growth: None,
                    error: Some(e.to_string()),
                },
            }
        })
        .collect()
}

pub fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut w = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(Vec::new());
    let opt_f = |v: Option<f64>| v.map(|x| format!("{x:.16e}")).unwrap_or_default();
    let opt_b = |v: Option<bool>| v.map(|x| x.to_string()).unwrap_or_default();
    w.write_record([
        "h",
        "rho",
        "assumption1",
        "c1",
        "assumption2",
        "max_growth",
        "error",
    ])
    .expect("in-memory write");
    for r in rows {
        w.write_record([
            format!("{:.16e}", r.h),
            format!("{:.16e}", r.rho),
            opt_b(r.assumption1),
            opt_f(r.c1),
            opt_b(r.assumption2),
            opt_f(r.max_growth),
            r.error.clone().unwrap_or_default(),
        ])
        .expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 output")
}

/// The three reference experiments: stable at `h = 0.04` and `0.044`, unstable at `0.042`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, clap::ValueEnum)]
pub enum Figure {
    Fig1,
    Fig2,
    Fig3,
}

impl Figure {
    pub const ALL: [Figure; 3] = [Figure::Fig1, Figure::Fig2, Figure::Fig3];

    pub fn config(self, base: &RunConfig) -> RunConfig {
        let (h, name) = match self {
            Figure::Fig1 => (0.04, "fig1"),
            Figure::Fig2 => (0.044, "fig2"),
            Figure::Fig3 => (0.042, "fig3"),
        };
        let mut c = RunConfig {
            h,
            run_id: Some(name.into()),
            ..base.clone()
        };
        if self == Figure::Fig3 && c.cadence.is_none() {
            // dense enough to resolve the exponential growth phase
            c.cadence = Some(10);
        }
        c
    }
}

#[derive(Parser, Debug)]
#[command(
    name = "ssfm",
    version,
    about = "Split-step Fourier runs and plane-wave stability checks for the cubic NLS"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Check linear stability and non-resonance for one parameter set.
    Check(ConfigArgs),
    /// Integrate from a random (or loaded) datum and write diagnostics.
    Simulate(ConfigArgs),
    /// Run checks over a grid of step sizes and/or amplitudes.
    Sweep {
        #[command(flatten)]
        config: ConfigArgs,
        /// Step sizes: `a,b,c` or `start:stop:count`.
        #[arg(long = "h-axis")]
        h_axis: Option<Axis>,
        /// Values of rho^2: `a,b,c` or `start:stop:count`.
        #[arg(long = "rho2-axis")]
        rho2_axis: Option<Axis>,
    },
    /// Reproduce the reference experiments.
    Figures {
        #[command(flatten)]
        config: ConfigArgs,
        #[arg(long, value_enum)]
        which: Option<Figure>,
    },
}

#[derive(Args, Debug, Default, Clone)]
pub struct ConfigArgs {
    /// JSON configuration file; flags override its fields.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub h: Option<f64>,
    #[arg(long)]
    pub rho2: Option<f64>,
    #[arg(long = "K")]
    pub k: Option<usize>,
    #[arg(long)]
    pub d: Option<usize>,
    /// Carrier mode, comma separated for d > 1.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    pub ell: Option<Vec<i64>>,
    #[arg(long, allow_hyphen_values = true)]
    pub lambda: Option<f64>,
    #[arg(long)]
    pub scheme: Option<SplitVariant>,
    #[arg(long)]
    pub steps: Option<usize>,
    #[arg(long)]
    pub horizon: Option<f64>,
    #[arg(long)]
    pub s: Option<f64>,
    #[arg(long)]
    pub epsilon: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long = "N")]
    pub n: Option<u32>,
    #[arg(long)]
    pub c2: Option<f64>,
    #[arg(long)]
    pub delta2: Option<f64>,
    /// `5N`-style multiple of N, or a fixed number.
    #[arg(long)]
    pub s2: Option<String>,
    #[arg(long)]
    pub eps_hat: Option<f64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub run_id: Option<String>,
    #[arg(long)]
    pub cadence: Option<usize>,
    #[arg(long)]
    pub exhaustive: bool,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::from_json_file(p)?,
            None => RunConfig::default(),
        };
        macro_rules! set {
            ($($field:ident => $target:ident),* $(,)?) => {
                $(if let Some(v) = &self.$field { c.$target = v.clone().into(); })*
            };
        }
        set!(h => h, rho2 => rho2, k => k, d => d, ell => ell, lambda => lambda, scheme => scheme,
             s => s, epsilon => epsilon, seed => seed, n => n, c2 => c2, delta2 => delta2,
             s2 => s2, eps_hat => eps_hat, out => out);
        if let Some(v) = self.steps {
            c.steps = Some(v);
        }
        if let Some(v) = self.horizon {
            c.horizon = v;
            if self.steps.is_none() {
                c.steps = None;
            }
        }
        if let Some(v) = &self.run_id {
            c.run_id = Some(v.clone());
        }
        if let Some(v) = self.cadence {
            c.cadence = Some(v);
        }
        if self.exhaustive {
            c.exhaustive = true;
        }
        if self.d.is_some() && self.ell.is_none() && c.ell.len() != c.d {
            c.ell = vec![0; c.d];
        }
        c.validate()?;
        Ok(c)
    }
}

fn print_json(value: &impl Serialize) {
    match serde_json::to_string_pretty(value) {
        Ok(s) => println!("{s}"),
        Err(e) => eprintln!("error: {e}"),
    }
}

fn report_simulation(out: &SimulateOutcome) {
    let d = &out.diagnostics;
    eprintln!(
        "{}: {} steps, max orbital distance {:.6e}, mass drift {:.3e}, unstable = {}",
        d.meta.run_id,
        out.steps_completed,
        d.max_distance(),
        d.mass_drift(),
        out.verdict.unstable
    );
    if let Some(f) = &out.files {
        eprintln!(
            "wrote {}, {}, {}",
            f.series.display(),
            f.spectrum.display(),
            f.meta.display()
        );
    }
    if out.blew_up {
        eprintln!("run stopped: non-finite coefficients");
    }
}

fn execute(cli: Cli) -> Result<i32> {
    match cli.command {
        Command::Check(args) => {
            let c = args.resolve()?;
            let out = cmd_check(&c)?;
            print_json(&out);
            eprintln!(
                "assumption 1: {} (c1 = {:.7}, worst j = {}); assumption 2: {}; cfl max h = {:.4e}",
                if out.assumption1.holds {
                    "holds"
                } else {
                    "fails"
                },
                out.assumption1.c1_certified,
                out.assumption1.worst_j,
                if out.assumption2_holds {
                    "holds"
                } else {
                    "fails"
                },
                out.cfl_max_h
            );
            Ok(out.exit_code())
        }
        Command::Simulate(args) => {
            let out = cmd_simulate(&args.resolve()?, true)?;
            report_simulation(&out);
            Ok(out.exit_code())
        }
        Command::Sweep {
            config,
            h_axis,
            rho2_axis,
        } => {
            let c = config.resolve()?;
            let rows = cmd_sweep(&c, h_axis.as_ref(), rho2_axis.as_ref());
            let csv = sweep_csv(&rows);
            fs::create_dir_all(&c.out).map_err(|e| Error::io(&c.out, e))?;
            let path = c.out.join(format!(
                "{}_sweep.csv",
                c.run_id.clone().unwrap_or_else(|| "sweep".into())
            ));
            fs::write(&path, &csv).map_err(|e| Error::io(&path, e))?;
            print!("{csv}");
            let ok = rows
                .iter()
                .all(|r| r.assumption1 == Some(true) && r.assumption2 == Some(true));
            Ok(if ok { EXIT_OK } else { EXIT_ASSUMPTION_FAILED })
        }
        Command::Figures { config, which } => {
            let base = config.resolve()?;
            let figs = which.map_or(Figure::ALL.to_vec(), |f| vec![f]);
            let mut code = EXIT_OK;
            for f in figs {
                let out = cmd_simulate(&f.config(&base), true)?;
                report_simulation(&out);
                code = code.max(out.exit_code());
            }
            Ok(code)
        }
    }
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
        }
    };
    match execute(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            EXIT_CONFIG
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::orbital_distance;

    fn small() -> RunConfig {
        RunConfig {
            k: 8,
            horizon: 4.0,
            n: 2,
            ..RunConfig::default()
        }
    }

    #[test]
    fn datum_norms() {
        for seed in 0..5 {
            let c = RunConfig {
                seed,
                ..RunConfig::default()
            };
            let u = random_initial_datum(&c).unwrap();
            assert!((u.mass().sqrt() - c.rho()).abs() < 1e-14);
            let e = orbital_distance(&u, &c.ell_mode(), c.s).unwrap();
            assert!((e - c.epsilon).abs() < 1e-14);
            assert!(u.coeff(&Mode::from(0)).unwrap().im == 0.0);
        }
    }

    #[test]
    fn datum_with_carrier_off_origin_in_2d() {
        let c = RunConfig {
            d: 2,
            k: 6,
            ell: vec![2, -1],
            s: 2.0,
            ..RunConfig::default()
        };
        let u = random_initial_datum(&c).unwrap();
        assert!((u.mass().sqrt() - c.rho()).abs() < 1e-14);
        assert!((orbital_distance(&u, &c.ell_mode(), 2.0).unwrap() - c.epsilon).abs() < 1e-14);
    }

    #[test]
    fn datum_special_cases() {
        let c = RunConfig {
            epsilon: 0.0,
            ..RunConfig::default()
        };
        let u = random_initial_datum(&c).unwrap();
        assert_eq!(
            u,
            SpectralField::plane_wave(c.grid().unwrap(), c.rho(), &Mode::from(0)).unwrap()
        );
        let c = RunConfig::default();
        assert_eq!(
            random_initial_datum(&c).unwrap(),
            random_initial_datum(&c).unwrap()
        );
        let other = RunConfig {
            seed: 2,
            ..c.clone()
        };
        assert_ne!(
            random_initial_datum(&c).unwrap(),
            random_initial_datum(&other).unwrap()
        );
        // s = 0 puts the whole budget into the L2 norm
        let c = RunConfig {
            s: 0.0,
            rho2: 0.01,
            epsilon: 0.0999,
            ..RunConfig::default()
        };
        assert!(random_initial_datum(&c).is_ok());
    }

    #[test]
    fn config_validation() {
        assert!(RunConfig::default().validate().is_ok());
        let bad = [
            RunConfig {
                epsilon: 1.0,
                ..RunConfig::default()
            },
            RunConfig {
                h: 0.0,
                ..RunConfig::default()
            },
            RunConfig {
                ell: vec![0, 0],
                ..RunConfig::default()
            },
            RunConfig {
                ell: vec![16],
                ..RunConfig::default()
            },
            RunConfig {
                n: 1,
                ..RunConfig::default()
            },
            RunConfig {
                s2: "abc".into(),
                ..RunConfig::default()
            },
        ];
        for c in bad {
            assert!(c.validate().is_err(), "{c:?}");
        }
        let c = RunConfig {
            h: 0.03,
            horizon: 1.0,
            ..RunConfig::default()
        };
        assert_eq!(c.n_steps(), 33);
        assert_eq!(
            RunConfig {
                steps: Some(7),
                ..c
            }
            .n_steps(),
            7
        );
    }

    #[test]
    fn config_json_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        fs::write(
            &p,
            r#"{"K": 8, "h": 0.01, "N": 3, "scheme": "strang-linear-outside"}"#,
        )
        .unwrap();
        let c = RunConfig::from_json_file(&p).unwrap();
        assert_eq!(
            (c.k, c.h, c.n, c.scheme),
            (8, 0.01, 3, SplitVariant::StrangLinearOutside)
        );
        assert_eq!(c.rho2, 0.4);
        fs::write(&p, r#"{"bogus": 1}"#).unwrap();
        assert!(RunConfig::from_json_file(&p).is_err());
    }

    #[test]
    fn flags_override_config() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("c.json");
        fs::write(&p, r#"{"K": 8, "h": 0.01}"#).unwrap();
        let args = ConfigArgs {
            config: Some(p),
            h: Some(0.02),
            ell: Some(vec![-3]),
            ..Default::default()
        };
        let c = args.resolve().unwrap();
        assert_eq!((c.k, c.h, c.ell.clone()), (8, 0.02, vec![-3]));
        let args = ConfigArgs {
            d: Some(2),
            k: Some(4),
            ..Default::default()
        };
        assert_eq!(args.resolve().unwrap().ell, vec![0, 0]);
    }

    #[test]
    fn check_exit_codes() {
        let c = RunConfig {
            n: 3,
            ..RunConfig::default()
        };
        let out = cmd_check(&c).unwrap();
        assert_eq!(out.exit_code(), EXIT_OK);
        assert!(out.assumption1.c1_certified >= 0.2);
        assert_eq!(out.assumption2.len(), 2);
        let out = cmd_check(&RunConfig {
            h: 0.042,
            n: 2,
            ..c
        })
        .unwrap();
        assert_eq!(out.exit_code(), EXIT_ASSUMPTION_FAILED);
        assert_eq!(out.assumption1.worst_j.norm_sq(), 225);
    }

    #[test]
    fn simulate_without_steps_records_initial_state() {
        let c = RunConfig {
            steps: Some(0),
            ..small()
        };
        let out = cmd_simulate(&c, false).unwrap();
        assert_eq!(out.diagnostics.series.len(), 1);
        assert_eq!(out.diagnostics.series[0].deviation, 0.0);
        assert!((out.diagnostics.series[0].orbital_distance - c.epsilon).abs() < 1e-14);
        assert_eq!(out.exit_code(), EXIT_OK);
    }

    #[test]
    fn simulate_is_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        let c = RunConfig {
            out: dir.path().to_path_buf(),
            ..small()
        };
        let a = cmd_simulate(
            &RunConfig {
                run_id: Some("a".into()),
                ..c.clone()
            },
            true,
        )
        .unwrap();
        let b = cmd_simulate(
            &RunConfig {
                run_id: Some("b".into()),
                ..c
            },
            true,
        )
        .unwrap();
        let fa = a.files.unwrap();
        let fb = b.files.unwrap();
        assert_eq!(fs::read(fa.series).unwrap(), fs::read(fb.series).unwrap());
        assert_eq!(
            fs::read(fa.spectrum).unwrap(),
            fs::read(fb.spectrum).unwrap()
        );
    }

    #[test]
    fn sweep_examples() {
        let c = RunConfig {
            n: 2,
            ..RunConfig::default()
        };
        let axis: Axis = "0.04,0.042,0.044".parse().unwrap();
        let rows = cmd_sweep(&c, Some(&axis), None);
        let pattern: Vec<_> = rows.iter().map(|r| r.assumption1).collect();
        assert_eq!(pattern, vec![Some(true), Some(false), Some(true)]);

        let empty: Axis = "".parse().unwrap();
        let rows = cmd_sweep(&c, Some(&empty), None);
        assert!(rows.is_empty());
        assert_eq!(
            sweep_csv(&rows),
            "h,rho,assumption1,c1,assumption2,max_growth,error\n"
        );

        let r: Axis = "0.1:0.3:3".parse().unwrap();
        let rows = cmd_sweep(&c, Some(&axis), Some(&r));
        assert_eq!(rows.len(), 9);
        // per-point failures are recorded, not fatal
        let bad: Axis = "-1,0.04".parse().unwrap();
        let rows = cmd_sweep(&c, Some(&bad), None);
        assert_eq!(rows.len(), 2);
        assert!(rows[0].error.is_some() && rows[1].error.is_none());
    }

    #[test]
    fn axis_parsing() {
        assert_eq!(
            "1:2:3".parse::<Axis>().unwrap().points(),
            vec![1.0, 1.5, 2.0]
        );
        assert_eq!("0.5".parse::<Axis>().unwrap().points(), vec![0.5]);
        assert!("1:2".parse::<Axis>().is_err());
        assert!("a,b".parse::<Axis>().is_err());
    }

    #[test]
    fn cli_exit_codes() {
        assert_eq!(run(["ssfm", "check", "--N", "2"]), EXIT_OK);
        assert_eq!(
            run(["ssfm", "check", "--N", "2", "--h", "0.042"]),
            EXIT_ASSUMPTION_FAILED
        );
        assert_eq!(run(["ssfm", "check", "--h", "-1"]), EXIT_CONFIG);
        assert_eq!(run(["ssfm", "check", "--bogus"]), EXIT_CONFIG);
        assert_eq!(
            run(["ssfm", "check", "--config", "/nonexistent.json"]),
            EXIT_CONFIG
        );
    }
}
