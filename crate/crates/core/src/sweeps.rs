//! Figure datasets as tables with an embedded manifest.

use std::io::Write;
use std::time::{SystemTime, UNIX_EPOCH};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::analytic::{tau_star, DriveConfig, Readout, SnrModel, F_TARGET};
use crate::error::{Error, Result};
use crate::lindblad::{jc_vs_dispersive_error, ComparisonOptions, DEFAULT_KMAX, DEFAULT_N_MAX};
use crate::params::{squeezed_photons, SystemParams};
use crate::spectra::{dos_left, dos_right, linspace, spectrum_db, squeezing_spectrum};

pub const TOOL: &str = "istms";
pub const VERSION: &str = env!("CARGO_PKG_VERSION");
pub const STATUS_OK: &str = "ok";

/// A strictly monotone parameter grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Grid {
    List { values: Vec<f64> },
    Linspace { start: f64, stop: f64, n: usize },
    Logspace { start: f64, stop: f64, n: usize },
}

impl Grid {
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match self {
            Grid::List { values } => values.clone(),
            Grid::Linspace { start, stop, n } => linspace(*start, *stop, *n),
            Grid::Logspace { start, stop, n } => {
                if !(*start > 0.0 && *stop > 0.0) {
                    return Err(Error::Domain("logspace bounds must be positive".into()));
                }
                linspace(start.log10(), stop.log10(), *n).into_iter().map(|e| 10f64.powf(e)).collect()
            }
        };
        if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
            return Err(Error::Domain("grid must be nonempty and finite".into()));
        }
        let up = v.windows(2).all(|w| w[1] > w[0]);
        let down = v.windows(2).all(|w| w[1] < w[0]);
        if !(up || down) {
            return Err(Error::Domain("grid must be strictly monotone".into()));
        }
        Ok(v)
    }
}

/// How a sweep is executed; neither setting changes the numbers produced.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Execution {
    /// Worker threads; `None` uses all available units.
    pub workers: Option<usize>,
    /// Unix seconds recorded in the manifest; `None` reads SOURCE_DATE_EPOCH
    /// and falls back to the clock.
    pub timestamp: Option<u64>,
}

impl Execution {
    pub fn resolved_timestamp(&self) -> u64 {
        if let Some(t) = self.timestamp {
            return t;
        }
        if let Some(t) = std::env::var("SOURCE_DATE_EPOCH").ok().and_then(|s| s.trim().parse().ok()) {
            return t;
        }
        SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_secs()).unwrap_or(0)
    }

    /// Map `f` over `items` on the worker budget, keeping input order.
    pub fn map<T: Sync, R: Send>(&self, items: &[T], f: impl Fn(&T) -> R + Sync + Send) -> Result<Vec<R>> {
        let mut b = rayon::ThreadPoolBuilder::new();
        if let Some(w) = self.workers {
            if w == 0 {
                return Err(Error::Config("worker count must be at least 1".into()));
            }
            b = b.num_threads(w);
        }
        let pool = b.build().map_err(|e| Error::Config(format!("thread pool: {e}")))?;
        Ok(pool.install(|| items.par_iter().map(&f).collect()))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub tool: String,
    pub version: String,
    pub timestamp: u64,
    pub sweep: String,
    pub params: SystemParams,
    pub grid: Value,
    pub settings: Value,
}

impl Manifest {
    pub fn new(sweep: &str, params: SystemParams, grid: Value, settings: Value, exec: &Execution) -> Self {
        Self {
            tool: TOOL.into(),
            version: VERSION.into(),
            timestamp: exec.resolved_timestamp(),
            sweep: sweep.into(),
            params,
            grid,
            settings,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    /// Failed entries are NaN, written as `null` in JSON.
    #[serde(with = "nan_as_null")]
    pub values: Vec<f64>,
    /// `ok`, or a short tag such as `invalid: ...` or `error: ...`.
    pub status: String,
}

mod nan_as_null {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
        s.collect_seq(v.iter().map(|x| x.is_finite().then_some(*x)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Vec<f64>, D::Error> {
        let v: Vec<Option<f64>> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|x| x.unwrap_or(f64::NAN)).collect())
    }
}

impl SweepRow {
    pub fn ok(values: Vec<f64>) -> Self {
        Self { values, status: STATUS_OK.into() }
    }

    pub fn is_ok(&self) -> bool {
        self.status == STATUS_OK
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepResult {
    pub manifest: Manifest,
    pub columns: Vec<String>,
    pub rows: Vec<SweepRow>,
}

fn fmt_value(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.16e}")
    } else {
        "NaN".into()
    }
}

impl SweepResult {
    pub fn column_index(&self, name: &str) -> Option<usize> {
        self.columns.iter().position(|c| c == name)
    }

    /// All values of a column, NaN where a row failed.
    pub fn column(&self, name: &str) -> Result<Vec<f64>> {
        let i = self.column_index(name).ok_or_else(|| Error::Domain(format!("no column named {name}")))?;
        Ok(self.rows.iter().map(|r| r.values[i]).collect())
    }

    pub fn write_csv(&self, mut w: impl Write) -> Result<()> {
        writeln!(w, "# manifest: {}", serde_json::to_string(&self.manifest)?)?;
        let mut cw = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(w);
        let mut header = self.columns.clone();
        header.push("status".into());
        cw.write_record(&header)?;
        for r in &self.rows {
            let mut rec: Vec<String> = r.values.iter().map(|&v| fmt_value(v)).collect();
            rec.push(r.status.clone());
            cw.write_record(&rec)?;
        }
        cw.flush()?;
        Ok(())
    }

    pub fn to_csv_string(&self) -> Result<String> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        String::from_utf8(buf).map_err(|e| Error::Domain(e.to_string()))
    }

    pub fn write_json(&self, mut w: impl Write) -> Result<()> {
        serde_json::to_writer_pretty(&mut w, self)?;
        writeln!(w)?;
        Ok(())
    }

    /// Parse the CSV written by [`SweepResult::write_csv`].
    pub fn read_csv(src: &str) -> Result<Self> {
        let (first, rest) = src.split_once('\n').ok_or_else(|| Error::Config("empty sweep file".into()))?;
        let json = first
            .strip_prefix("# manifest: ")
            .ok_or_else(|| Error::Config("missing manifest line".into()))?;
        let manifest: Manifest = serde_json::from_str(json)?;
        let mut rd = csv::Reader::from_reader(rest.as_bytes());
        let mut columns: Vec<String> = rd.headers()?.iter().map(String::from).collect();
        if columns.pop().as_deref() != Some("status") {
            return Err(Error::Config("last column must be status".into()));
        }
        let mut rows = Vec::new();
        for rec in rd.records() {
            let rec = rec?;
            let n = rec.len();
            if n != columns.len() + 1 {
                return Err(Error::Config(format!("row has {n} fields")));
            }
            let values = rec
                .iter()
                .take(n - 1)
                .map(|s| s.parse::<f64>().map_err(|_| Error::Config(format!("bad number {s:?}"))))
                .collect::<Result<Vec<_>>>()?;
            rows.push(SweepRow { values, status: rec[n - 1].to_string() });
        }
        Ok(Self { manifest, columns, rows })
    }
}

fn grid_json(g: &Grid) -> Value {
    serde_json::to_value(g).unwrap_or(Value::Null)
}

fn nan_row(n: usize, prefix: &[f64], status: String) -> SweepRow {
    let mut values = prefix.to_vec();
    values.resize(n, f64::NAN);
    SweepRow { values, status }
}

fn err_status(e: &Error) -> String {
    format!("error: {e}")
}

// ---------------------------------------------------------------- squeezing spectra

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig2Config {
    pub lambda: f64,
    pub kappa: f64,
    pub chis: Vec<f64>,
    pub omega: Grid,
}

impl Default for Fig2Config {
    fn default() -> Self {
        Self {
            lambda: 0.25,
            kappa: 1.0,
            chis: vec![0.001, 0.1, 0.5, 1.0],
            omega: Grid::Linspace { start: -3.0, stop: 3.0, n: 601 },
        }
    }
}

/// Output spectrum in linear units and dB for each χ, long format.
pub fn fig2_spectrum(cfg: &Fig2Config, exec: &Execution) -> Result<SweepResult> {
    let omega = cfg.omega.values()?;
    let columns: Vec<String> = ["chi", "omega", "s_out", "s_db"].map(String::from).to_vec();
    let mut points = Vec::new();
    for &chi in &cfg.chis {
        for &w in &omega {
            points.push((chi, w));
        }
    }
    let rows = exec.map(&points, |&(chi, w)| {
        let row = Readout::new(chi, cfg.lambda, cfg.kappa)
            .and_then(|r| Ok((squeezing_spectrum(w, &r)?, spectrum_db(w, &r)?)));
        match row {
            Ok((s, db)) => SweepRow::ok(vec![chi, w, s, db]),
            Err(e) => nan_row(4, &[chi, w], err_status(&e)),
        }
    })?;
    let params = SystemParams { lambda: cfg.lambda, kappa: cfg.kappa, ..Default::default() };
    let settings = json!({ "chis": cfg.chis });
    Ok(SweepResult { manifest: Manifest::new("fig2", params, grid_json(&cfg.omega), settings, exec), columns, rows })
}

// ---------------------------------------------------------------- tau* comparison

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LambdaMode {
    Zero,
    /// λ = κ/2 − χ
    Threshold,
}

/// Standard-readout reference at the same total photon number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparator {
    /// The same two-mode apparatus with λ = 0, full time-dependent SNR.
    TwoModeLambdaZero,
    /// A single cavity at its long-time rate, τ* = SNR*²/Γ_std.
    SingleCavityRate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig3Config {
    pub chi: f64,
    pub kappa: f64,
    pub lambda_mode: LambdaMode,
    /// Total intracavity photons n̄ = n̄₀ + n̄_sqz.
    pub nbar: Grid,
    pub comparator: Comparator,
    pub f_target: f64,
}

impl Default for Fig3Config {
    fn default() -> Self {
        Self {
            chi: 0.01,
            kappa: 1.0,
            lambda_mode: LambdaMode::Threshold,
            nbar: Grid::Logspace { start: 1.0, stop: 1000.0, n: 61 },
            comparator: Comparator::TwoModeLambdaZero,
            f_target: F_TARGET,
        }
    }
}

fn standard_tau(cfg: &Fig3Config, nbar: f64) -> Result<f64> {
    match cfg.comparator {
        Comparator::TwoModeLambdaZero => {
            let r = Readout::new(cfg.chi, 0.0, cfg.kappa)?;
            tau_star(&r, &DriveConfig::nbar0(nbar), cfg.f_target, SnrModel::Lossless)
        }
        Comparator::SingleCavityRate => {
            let s = crate::analytic::snr_for_fidelity(cfg.f_target)?;
            let g = crate::analytic::gamma_standard(cfg.chi, cfg.kappa, nbar)?;
            if g <= 0.0 {
                return Err(Error::Domain("standard rate vanishes".into()));
            }
            Ok(s * s / g)
        }
    }
}

/// τ* of squeezed and standard readout against total photon number, with
/// their ratio. Points with n̄ < n̄_sqz + 1 leave too few coherent photons
/// and are marked invalid for the squeezed curve.
pub fn fig3_tau_star(cfg: &Fig3Config, exec: &Execution) -> Result<SweepResult> {
    let nbar = cfg.nbar.values()?;
    let lambda = match cfg.lambda_mode {
        LambdaMode::Zero => 0.0,
        LambdaMode::Threshold => cfg.kappa / 2.0 - cfg.chi,
    };
    let r = Readout::new(cfg.chi, lambda, cfg.kappa)?;
    let nsq = squeezed_photons(lambda, cfg.kappa)?;
    let columns: Vec<String> =
        ["nbar", "nbar0", "n_sqz", "tau_star_istms", "tau_star_standard", "ratio"].map(String::from).to_vec();
    let rows = exec.map(&nbar, |&n| {
        let std = standard_tau(cfg, n);
        let n0 = n - nsq;
        if n < nsq + 1.0 {
            let s = std.as_ref().copied().unwrap_or(f64::NAN);
            return SweepRow {
                values: vec![n, n0, nsq, f64::NAN, s, f64::NAN],
                status: "invalid: nbar below n_sqz + 1".into(),
            };
        }
        let ist = tau_star(&r, &DriveConfig::nbar0(n0), cfg.f_target, SnrModel::Lossless);
        match (ist, std) {
            (Ok(a), Ok(b)) => SweepRow::ok(vec![n, n0, nsq, a, b, b / a]),
            (a, b) => {
                let e = a.as_ref().err().or(b.as_ref().err()).map(err_status).unwrap_or_default();
                SweepRow {
                    values: vec![n, n0, nsq, a.unwrap_or(f64::NAN), b.unwrap_or(f64::NAN), f64::NAN],
                    status: e,
                }
            }
        }
    })?;
    let params = SystemParams { lambda, kappa: cfg.kappa, ..Default::default() };
    let settings = json!({
        "chi": cfg.chi,
        "lambda_mode": cfg.lambda_mode,
        "comparator": cfg.comparator,
        "f_target": cfg.f_target,
        "x_axis": "total nbar = nbar0 + n_sqz",
    });
    Ok(SweepResult { manifest: Manifest::new("fig3", params, grid_json(&cfg.nbar), settings, exec), columns, rows })
}

// ---------------------------------------------------------------- density of states

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig4Config {
    pub j: f64,
    pub kappa: f64,
    pub omega: Grid,
}

impl Default for Fig4Config {
    fn default() -> Self {
        Self { j: 5.0, kappa: 1.0, omega: Grid::Linspace { start: -10.0, stop: 10.0, n: 801 } }
    }
}

/// Density of states of both cavities at λ = 0.
pub fn fig4_dos(cfg: &Fig4Config, exec: &Execution) -> Result<SweepResult> {
    let omega = cfg.omega.values()?;
    if !(cfg.kappa > 0.0) {
        return Err(Error::Domain("kappa must be positive".into()));
    }
    let columns: Vec<String> = ["omega", "dos_right", "dos_left"].map(String::from).to_vec();
    let rows = exec.map(&omega, |&w| SweepRow::ok(vec![w, dos_right(w, cfg.j, cfg.kappa), dos_left(w, cfg.j, cfg.kappa)]))?;
    let params = SystemParams { j: cfg.j, kappa: cfg.kappa, ..Default::default() };
    Ok(SweepResult { manifest: Manifest::new("fig4", params, grid_json(&cfg.omega), json!({}), exec), columns, rows })
}

// ---------------------------------------------------------------- losses

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Loss {
    None,
    External(f64),
    Internal(f64),
}

impl Loss {
    fn model(&self) -> SnrModel {
        match *self {
            Loss::None => SnrModel::Lossless,
            Loss::External(eta) => SnrModel::External(eta),
            Loss::Internal(eps) => SnrModel::Internal(eps),
        }
    }

    /// κ_tot for an output-port rate κ.
    fn kappa_tot(&self, kappa: f64) -> f64 {
        match *self {
            Loss::Internal(eps) => kappa / (1.0 - eps),
            _ => kappa,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig5Config {
    pub chi: f64,
    pub kappa: f64,
    pub losses: Vec<Loss>,
    pub nbar: Grid,
    pub f_target: f64,
}

impl Default for Fig5Config {
    fn default() -> Self {
        Self {
            chi: 0.05,
            kappa: 1.0,
            losses: vec![
                Loss::None,
                Loss::External(0.01),
                Loss::External(0.1),
                Loss::Internal(0.01),
                Loss::Internal(0.1),
            ],
            nbar: Grid::Logspace { start: 1.0, stop: 1000.0, n: 61 },
            f_target: F_TARGET,
        }
    }
}

/// τ* against total photon number for each loss setting, with λ at the
/// threshold κ_tot/2 − χ of that setting.
pub fn fig5_loss(cfg: &Fig5Config, exec: &Execution) -> Result<SweepResult> {
    let nbar = cfg.nbar.values()?;
    for l in &cfg.losses {
        match *l {
            Loss::External(e) if !(0.0..=1.0).contains(&e) => {
                return Err(Error::Domain(format!("eta must lie in [0, 1], got {e}")))
            }
            Loss::Internal(e) if !(0.0..1.0).contains(&e) => {
                return Err(Error::Domain(format!("epsilon must lie in [0, 1), got {e}")))
            }
            _ => {}
        }
    }
    let columns: Vec<String> =
        ["eta", "epsilon", "lambda", "n_sqz", "nbar", "nbar0", "tau_star"].map(String::from).to_vec();
    let mut points = Vec::new();
    for l in &cfg.losses {
        for &n in &nbar {
            points.push((*l, n));
        }
    }
    let rows = exec.map(&points, |&(loss, n)| {
        let (eta, eps) = match loss {
            Loss::None => (0.0, 0.0),
            Loss::External(e) => (e, 0.0),
            Loss::Internal(e) => (0.0, e),
        };
        let kt = loss.kappa_tot(cfg.kappa);
        let lambda = kt / 2.0 - cfg.chi;
        let nsq = match squeezed_photons(lambda, kt) {
            Ok(v) => v,
            Err(e) => return nan_row(7, &[eta, eps, lambda], err_status(&e)),
        };
        let n0 = n - nsq;
        let prefix = [eta, eps, lambda, nsq, n, n0];
        if n < nsq + 1.0 {
            return nan_row(7, &prefix, "invalid: nbar below n_sqz + 1".into());
        }
        let t = Readout::new(cfg.chi, lambda, cfg.kappa)
            .and_then(|r| tau_star(&r, &DriveConfig::nbar0(n0), cfg.f_target, loss.model()));
        match t {
            Ok(t) => SweepRow::ok(vec![eta, eps, lambda, nsq, n, n0, t]),
            Err(e) => nan_row(7, &prefix, err_status(&e)),
        }
    })?;
    let params = SystemParams { kappa: cfg.kappa, ..Default::default() };
    let settings = json!({ "chi": cfg.chi, "losses": cfg.losses, "f_target": cfg.f_target });
    Ok(SweepResult { manifest: Manifest::new("fig5", params, grid_json(&cfg.nbar), settings, exec), columns, rows })
}

// ---------------------------------------------------------------- dispersive vs JC

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Fig6Config {
    pub j: f64,
    pub g: f64,
    pub kappa: f64,
    /// λ in units of κ/2 − χ with χ = g²/(2J).
    pub lambda_fracs: Grid,
    pub n_max: usize,
    pub kmax: usize,
}

impl Default for Fig6Config {
    fn default() -> Self {
        Self {
            j: 10.0,
            g: 1.0,
            kappa: 1.0,
            lambda_fracs: Grid::Linspace { start: 0.125, stop: 1.0, n: 8 },
            n_max: DEFAULT_N_MAX,
            kmax: DEFAULT_KMAX,
        }
    }
}

/// Steady-state errors of the dispersive model against the JC model.
pub fn fig6_jc(cfg: &Fig6Config, exec: &Execution) -> Result<SweepResult> {
    let fracs = cfg.lambda_fracs.values()?;
    if !(cfg.j > 0.0) {
        return Err(Error::Domain("J must be positive".into()));
    }
    let chi0 = cfg.g * cfg.g / (2.0 * cfg.j);
    let columns: Vec<String> = [
        "lambda_frac",
        "lambda",
        "chi",
        "full_error",
        "qubit_error",
        "p_excited",
        "n_even",
        "n_odd",
        "residual",
    ]
    .map(String::from)
    .to_vec();
    let opts = ComparisonOptions { n_max: cfg.n_max, kmax: cfg.kmax, ..Default::default() };
    let rows = exec.map(&fracs, |&f| {
        let lambda = f * (cfg.kappa / 2.0 - chi0);
        let p = SystemParams { j: cfg.j, g: cfg.g, kappa: cfg.kappa, lambda, ..Default::default() };
        match jc_vs_dispersive_error(&p, &opts) {
            Ok(c) => SweepRow::ok(vec![
                f,
                lambda,
                c.chi,
                c.full_error,
                c.qubit_error,
                c.p_excited,
                c.n_even,
                c.n_odd,
                c.residual_jc.max(c.residual_dispersive),
            ]),
            Err(e) => nan_row(9, &[f, lambda], err_status(&e)),
        }
    })?;
    let params = SystemParams { j: cfg.j, g: cfg.g, kappa: cfg.kappa, ..Default::default() };
    let settings = json!({ "n_max": cfg.n_max, "kmax": cfg.kmax, "lambda_unit": "kappa/2 - g^2/(2J)" });
    Ok(SweepResult {
        manifest: Manifest::new("fig6", params, grid_json(&cfg.lambda_fracs), settings, exec),
        columns,
        rows,
    })
}
