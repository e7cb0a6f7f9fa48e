mod svg;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use istms::analytic::{snr_for_fidelity, tau_star, DriveConfig, Readout, SnrModel, F_TARGET};
use istms::lindblad::{DEFAULT_KMAX, DEFAULT_N_MAX};
use istms::params::{derive_chi, squeezed_photons, validity_report, ParamOverrides, DEFAULT_TOL};
use istms::spectra::linspace;
use istms::sweeps::{
    fig2_spectrum, fig3_tau_star, fig4_dos, fig5_loss, fig6_jc, Comparator, Execution, Fig2Config, Fig3Config,
    Fig4Config, Fig5Config, Fig6Config, Grid, LambdaMode, Loss, Manifest, SweepResult, SweepRow,
};
use istms::{Error, Result, SystemParams, ValidityReport};

const CONFIG_ENV: &str = "ISTMS_CONFIG";

#[derive(Parser, Debug)]
#[command(name = "istms", version, about = "Dispersive qubit readout with in-situ two-mode squeezing")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args, Debug)]
struct Common {
    /// TOML parameter file; defaults to $ISTMS_CONFIG when set.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Data file; standard output when absent.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    /// Also write an SVG chart next to --output.
    #[arg(long, global = true)]
    plot: bool,
    /// Worker threads for sweeps (default: all available).
    #[arg(long, global = true)]
    workers: Option<usize>,
    #[command(flatten)]
    params: ParamFlags,
}

#[derive(Args, Debug, Default)]
struct ParamFlags {
    #[arg(long, global = true)]
    omega_c: Option<f64>,
    #[arg(long, global = true)]
    omega_q: Option<f64>,
    #[arg(long, global = true)]
    omega_p: Option<f64>,
    #[arg(long, global = true)]
    j: Option<f64>,
    #[arg(long, global = true)]
    g: Option<f64>,
    #[arg(long, global = true)]
    lambda: Option<f64>,
    #[arg(long, global = true)]
    kappa: Option<f64>,
    #[arg(long, global = true)]
    kappa_int: Option<f64>,
    #[arg(long, global = true)]
    kappa_left_int: Option<f64>,
    #[arg(long, global = true)]
    eta: Option<f64>,
}

impl ParamFlags {
    fn overrides(&self) -> ParamOverrides {
        ParamOverrides {
            omega_c: self.omega_c,
            omega_q: self.omega_q,
            omega_p: self.omega_p,
            j: self.j,
            g: self.g,
            lambda: self.lambda,
            kappa: self.kappa,
            kappa_int: self.kappa_int,
            kappa_left_int: self.kappa_left_int,
            eta: self.eta,
        }
    }
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq, Eq)]
enum Format {
    Csv,
    Json,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ModeArg {
    Zero,
    Threshold,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
enum ComparatorArg {
    TwoMode,
    SingleCavity,
}

#[derive(Args, Debug)]
struct DriveArgs {
    /// Dispersive shift; derived from g, J and lambda when absent.
    #[arg(long)]
    chi: Option<f64>,
    /// Coherent intracavity photons.
    #[arg(long, conflicts_with = "beta")]
    nbar0: Option<f64>,
    /// Input drive amplitude |beta|.
    #[arg(long)]
    beta: Option<f64>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Report the approximation conditions for the given parameters.
    Validate {
        #[arg(long, default_value_t = DEFAULT_TOL)]
        tol: f64,
        /// Total photon number to compare against n_crit.
        #[arg(long)]
        nbar: Option<f64>,
    },
    /// SNR(tau) on a grid ending at --tau.
    Snr {
        #[command(flatten)]
        drive: DriveArgs,
        #[arg(long, default_value_t = 100.0)]
        tau: f64,
        #[arg(long, default_value_t = 50)]
        points: usize,
    },
    /// Measurement time to reach a target fidelity.
    TauStar {
        #[command(flatten)]
        drive: DriveArgs,
        #[arg(long, default_value_t = F_TARGET)]
        f_target: f64,
    },
    /// Output squeezing spectrum for several chi (lambda = kappa/4 by default).
    Spectrum {
        #[arg(long, value_delimiter = ',')]
        chis: Option<Vec<f64>>,
        #[arg(long, default_value_t = -3.0, allow_negative_numbers = true)]
        omega_min: f64,
        #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
        omega_max: f64,
        #[arg(long, default_value_t = 601)]
        points: usize,
    },
    /// Density of states of both cavities at lambda = 0 (J = 5 kappa by default).
    Dos {
        #[arg(long, default_value_t = -10.0, allow_negative_numbers = true)]
        omega_min: f64,
        #[arg(long, default_value_t = 10.0, allow_negative_numbers = true)]
        omega_max: f64,
        #[arg(long, default_value_t = 801)]
        points: usize,
    },
    /// Steady-state error of the dispersive model against the JC model.
    JcCompare {
        /// lambda values in units of kappa/2 - g^2/(2J).
        #[arg(long, value_delimiter = ',')]
        fracs: Option<Vec<f64>>,
        #[arg(long, default_value_t = DEFAULT_N_MAX)]
        n_max: usize,
        #[arg(long, default_value_t = DEFAULT_KMAX)]
        kmax: usize,
    },
    /// tau* against total photon number with external and internal loss.
    Loss {
        #[arg(long, default_value_t = 0.05)]
        chi: f64,
        #[arg(long, value_delimiter = ',')]
        etas: Option<Vec<f64>>,
        #[arg(long, value_delimiter = ',')]
        epsilons: Option<Vec<f64>>,
        #[command(flatten)]
        nbar: NbarGrid,
    },
    /// tau* of squeezed and standard readout at equal total photon number.
    Fig3 {
        #[arg(long, default_value_t = 0.01)]
        chi: f64,
        #[arg(long, value_enum, default_value_t = ModeArg::Threshold)]
        lambda_mode: ModeArg,
        #[arg(long, value_enum, default_value_t = ComparatorArg::TwoMode)]
        comparator: ComparatorArg,
        #[arg(long, default_value_t = F_TARGET)]
        f_target: f64,
        #[command(flatten)]
        nbar: NbarGrid,
    },
}

#[derive(Args, Debug)]
struct NbarGrid {
    #[arg(long, default_value_t = 1.0)]
    nbar_min: f64,
    #[arg(long, default_value_t = 1000.0)]
    nbar_max: f64,
    #[arg(long, default_value_t = 61)]
    points: usize,
}

impl NbarGrid {
    fn grid(&self) -> Grid {
        Grid::Logspace { start: self.nbar_min, stop: self.nbar_max, n: self.points }
    }
}

enum Output {
    Table(SweepResult),
    Report { manifest: Manifest, report: ValidityReport },
}

struct PlotSpec {
    title: &'static str,
    x: &'static str,
    ys: &'static [&'static str],
    group: &'static [&'static str],
    log_x: bool,
    log_y: bool,
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_convergence() { 2 } else { 1 })
        }
    }
}

/// Config file keys overlaid by command-line flags.
fn overrides(common: &Common) -> Result<ParamOverrides> {
    let path = common.config.clone().or_else(|| std::env::var_os(CONFIG_ENV).map(PathBuf::from));
    let file = match path {
        Some(p) => ParamOverrides::from_toml_file(&p)
            .map_err(|e| Error::Config(format!("{}: {e}", p.display())))?,
        None => ParamOverrides::default(),
    };
    Ok(file.merged(&common.params.overrides()))
}

fn resolve(over: &ParamOverrides, base: SystemParams) -> Result<SystemParams> {
    let p = over.apply(base);
    p.validate()?;
    Ok(p)
}

fn readout(p: &SystemParams, chi: Option<f64>) -> Result<Readout> {
    let chi = match chi {
        Some(c) => c,
        None => derive_chi(p)?,
    };
    Readout::new(chi, p.lambda, p.kappa)
}

fn drive(d: &DriveArgs) -> Result<DriveConfig> {
    match (d.nbar0, d.beta) {
        (Some(n), _) => Ok(DriveConfig::nbar0(n)),
        (None, Some(b)) => Ok(DriveConfig::beta(b)),
        (None, None) => Err(Error::Config("one of --nbar0 or --beta is required".into())),
    }
}

fn loss_model(p: &SystemParams) -> Result<SnrModel> {
    match (p.eta > 0.0, p.kappa_int > 0.0) {
        (false, false) => Ok(SnrModel::Lossless),
        (true, false) => Ok(SnrModel::External(p.eta)),
        (false, true) => Ok(SnrModel::Internal(p.epsilon())),
        (true, true) => Err(Error::Config("eta and kappa_int cannot both be nonzero".into())),
    }
}

fn run(cli: Cli) -> Result<()> {
    let over = overrides(&cli.common)?;
    let exec = Execution { workers: cli.common.workers, timestamp: None };
    if cli.common.plot && cli.common.output.is_none() {
        return Err(Error::Config("--plot requires --output".into()));
    }
    let (out, plot) = match &cli.cmd {
        Command::Validate { tol, nbar } => {
            let p = resolve(&over, SystemParams::default())?;
            let report = validity_report(&p, *tol, *nbar);
            let failing: Vec<&str> =
                report.conditions.iter().filter(|c| !c.pass).map(|c| c.name.as_str()).collect();
            if failing.is_empty() {
                eprintln!("all {} conditions hold", report.conditions.len());
            } else {
                eprintln!("conditions not satisfied: {}", failing.join(", "));
            }
            let manifest =
                Manifest::new("validate", p, serde_json::Value::Null, json!({ "tol": tol, "nbar": nbar }), &exec);
            (Output::Report { manifest, report }, None)
        }
        Command::Snr { drive: d, tau, points } => {
            let p = resolve(&over, SystemParams::default())?;
            let r = readout(&p, d.chi)?;
            let dc = drive(d)?;
            let model = loss_model(&p)?;
            if !(*tau > 0.0) || *points == 0 {
                return Err(Error::Domain("--tau must be positive and --points at least 1".into()));
            }
            let taus = linspace(tau / *points as f64, *tau, *points);
            let mut rows = Vec::with_capacity(taus.len());
            for &t in &taus {
                let s = model.eval(t, &r, &dc)?;
                rows.push(SweepRow::ok(vec![
                    t,
                    s.signal,
                    s.noise,
                    s.snr,
                    s.snr * s.snr,
                    s.rate_longtime,
                    s.rate_longtime * t,
                ]));
            }
            let columns = ["tau", "signal", "noise", "snr", "snr_sq", "rate_longtime", "snr_sq_longtime"];
            let grid = json!({ "kind": "linspace", "start": tau / *points as f64, "stop": tau, "n": points });
            let settings = json!({ "chi": r.chi, "drive": dc, "model": model });
            let manifest = Manifest::new("snr", p, grid, settings, &exec);
            let table = SweepResult { manifest, columns: columns.map(String::from).to_vec(), rows };
            let plot = PlotSpec {
                title: "SNR squared",
                x: "tau",
                ys: &["snr_sq", "snr_sq_longtime"],
                group: &[],
                log_x: false,
                log_y: false,
            };
            (Output::Table(table), Some(plot))
        }
        Command::TauStar { drive: d, f_target } => {
            let p = resolve(&over, SystemParams::default())?;
            let r = readout(&p, d.chi)?;
            let dc = drive(d)?;
            let model = loss_model(&p)?;
            let t = tau_star(&r, &dc, *f_target, model)?;
            let n0 = dc.n0(&r)?;
            let row = SweepRow::ok(vec![r.chi, r.lambda, n0, *f_target, snr_for_fidelity(*f_target)?, t]);
            let columns = ["chi", "lambda", "nbar0", "f_target", "snr_target", "tau_star"];
            let manifest = Manifest::new(
                "tau-star",
                p,
                serde_json::Value::Null,
                json!({ "drive": dc, "model": model }),
                &exec,
            );
            (Output::Table(SweepResult { manifest, columns: columns.map(String::from).to_vec(), rows: vec![row] }), None)
        }
        Command::Spectrum { chis, omega_min, omega_max, points } => {
            let d = Fig2Config::default();
            let p = resolve(&over, SystemParams { lambda: d.lambda, kappa: d.kappa, ..Default::default() })?;
            let cfg = Fig2Config {
                lambda: p.lambda,
                kappa: p.kappa,
                chis: chis.clone().unwrap_or(d.chis),
                omega: Grid::Linspace { start: *omega_min, stop: *omega_max, n: *points },
            };
            let plot = PlotSpec {
                title: "Output squeezing spectrum",
                x: "omega",
                ys: &["s_db"],
                group: &["chi"],
                log_x: false,
                log_y: false,
            };
            (Output::Table(with_params(fig2_spectrum(&cfg, &exec)?, p)), Some(plot))
        }
        Command::Dos { omega_min, omega_max, points } => {
            let d = Fig4Config::default();
            let p = resolve(&over, SystemParams { j: d.j, kappa: d.kappa, ..Default::default() })?;
            let cfg = Fig4Config {
                j: p.j,
                kappa: p.kappa,
                omega: Grid::Linspace { start: *omega_min, stop: *omega_max, n: *points },
            };
            let plot = PlotSpec {
                title: "Density of states",
                x: "omega",
                ys: &["dos_right", "dos_left"],
                group: &[],
                log_x: false,
                log_y: false,
            };
            (Output::Table(with_params(fig4_dos(&cfg, &exec)?, p)), Some(plot))
        }
        Command::JcCompare { fracs, n_max, kmax } => {
            let d = Fig6Config::default();
            let p = resolve(&over, SystemParams { j: d.j, g: d.g, kappa: d.kappa, ..Default::default() })?;
            let cfg = Fig6Config {
                j: p.j,
                g: p.g,
                kappa: p.kappa,
                lambda_fracs: fracs.clone().map(|values| Grid::List { values }).unwrap_or(d.lambda_fracs),
                n_max: *n_max,
                kmax: *kmax,
            };
            let table = with_params(fig6_jc(&cfg, &exec)?, p);
            report_failed_rows(&table)?;
            let plot = PlotSpec {
                title: "Dispersive vs JC steady-state error",
                x: "lambda",
                ys: &["full_error", "qubit_error"],
                group: &[],
                log_x: false,
                log_y: false,
            };
            (Output::Table(table), Some(plot))
        }
        Command::Loss { chi, etas, epsilons, nbar } => {
            let p = resolve(&over, SystemParams::default())?;
            let d = Fig5Config::default();
            let losses = match (etas, epsilons) {
                (None, None) => d.losses,
                _ => {
                    let mut v = vec![Loss::None];
                    v.extend(etas.iter().flatten().map(|&e| Loss::External(e)));
                    v.extend(epsilons.iter().flatten().map(|&e| Loss::Internal(e)));
                    v
                }
            };
            let cfg = Fig5Config { chi: *chi, kappa: p.kappa, losses, nbar: nbar.grid(), f_target: d.f_target };
            let plot = PlotSpec {
                title: "tau* with losses",
                x: "nbar",
                ys: &["tau_star"],
                group: &["eta", "epsilon"],
                log_x: true,
                log_y: true,
            };
            (Output::Table(with_params(fig5_loss(&cfg, &exec)?, p)), Some(plot))
        }
        Command::Fig3 { chi, lambda_mode, comparator, f_target, nbar } => {
            let p = resolve(&over, SystemParams::default())?;
            let cfg = Fig3Config {
                chi: *chi,
                kappa: p.kappa,
                lambda_mode: match lambda_mode {
                    ModeArg::Zero => LambdaMode::Zero,
                    ModeArg::Threshold => LambdaMode::Threshold,
                },
                nbar: nbar.grid(),
                comparator: match comparator {
                    ComparatorArg::TwoMode => Comparator::TwoModeLambdaZero,
                    ComparatorArg::SingleCavity => Comparator::SingleCavityRate,
                },
                f_target: *f_target,
            };
            let table = fig3_tau_star(&cfg, &exec)?;
            if let Ok(nsq) = squeezed_photons(table.manifest.params.lambda, p.kappa) {
                eprintln!("n_sqz = {nsq:.6}; points with nbar < n_sqz + 1 are marked invalid");
            }
            let plot = PlotSpec {
                title: "tau* at F = 0.9999",
                x: "nbar",
                ys: &["tau_star_istms", "tau_star_standard"],
                group: &[],
                log_x: true,
                log_y: true,
            };
            (Output::Table(table), Some(plot))
        }
    };
    emit(&out, cli.common.format, cli.common.output.as_deref())?;
    if cli.common.plot {
        let path = cli.common.output.as_deref().expect("checked above").with_extension("svg");
        match (&out, plot) {
            (Output::Table(t), Some(spec)) => {
                std::fs::write(&path, svg::render(&chart(t, &spec)?))?;
                eprintln!("wrote {}", path.display());
            }
            _ => eprintln!("warning: this subcommand has no chart"),
        }
    }
    Ok(())
}

/// Figure sweeps record only the parameters they use; echo the full
/// effective set instead.
fn with_params(mut t: SweepResult, p: SystemParams) -> SweepResult {
    t.manifest.params = p;
    t
}

fn report_failed_rows(t: &SweepResult) -> Result<()> {
    let failed: Vec<&SweepRow> = t.rows.iter().filter(|r| !r.is_ok()).collect();
    if failed.is_empty() {
        return Ok(());
    }
    for r in &failed {
        eprintln!("warning: row failed: {}", r.status);
    }
    if failed.len() == t.rows.len() && failed.iter().all(|r| r.status.contains("converge")) {
        return Err(Error::NoConvergence("every grid point failed to converge".into()));
    }
    Ok(())
}

fn emit(out: &Output, format: Format, path: Option<&Path>) -> Result<()> {
    let mut w: Box<dyn Write> = match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match (out, format) {
        (Output::Table(t), Format::Csv) => t.write_csv(&mut w)?,
        (Output::Table(t), Format::Json) => t.write_json(&mut w)?,
        (Output::Report { manifest, report }, Format::Csv) => {
            writeln!(w, "# manifest: {}", serde_json::to_string(manifest)?)?;
            let mut cw = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(&mut w);
            cw.write_record(["condition", "value", "threshold", "pass"])?;
            for c in &report.conditions {
                cw.write_record([
                    c.name.clone(),
                    format!("{:.16e}", c.value),
                    format!("{:.16e}", c.threshold),
                    c.pass.to_string(),
                ])?;
            }
            cw.flush()?;
        }
        (Output::Report { manifest, report }, Format::Json) => {
            serde_json::to_writer_pretty(&mut w, &json!({ "manifest": manifest, "report": report }))?;
            writeln!(w)?;
        }
    }
    w.flush()?;
    Ok(())
}

fn chart(t: &SweepResult, spec: &PlotSpec) -> Result<svg::Chart> {
    let xi = t.column_index(spec.x).ok_or_else(|| Error::Domain(format!("no column {}", spec.x)))?;
    let gi: Vec<usize> = spec.group.iter().filter_map(|g| t.column_index(g)).collect();
    let mut series: Vec<svg::Series> = Vec::new();
    for y in spec.ys {
        let yi = t.column_index(y).ok_or_else(|| Error::Domain(format!("no column {y}")))?;
        for row in &t.rows {
            let key: Vec<String> = gi.iter().map(|&g| format!("{}={}", t.columns[g], row.values[g])).collect();
            let label = if key.is_empty() {
                y.to_string()
            } else if spec.ys.len() == 1 {
                key.join(" ")
            } else {
                format!("{y} {}", key.join(" "))
            };
            let point = (row.values[xi], if row.is_ok() { row.values[yi] } else { f64::NAN });
            match series.iter_mut().find(|s| s.label == label) {
                Some(s) => s.points.push(point),
                None => series.push(svg::Series { label, points: vec![point] }),
            }
        }
    }
    Ok(svg::Chart {
        title: spec.title.into(),
        x_label: spec.x.into(),
        y_label: spec.ys.join(", "),
        log_x: spec.log_x,
        log_y: spec.log_y,
        series,
    })
}
