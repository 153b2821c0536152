//! `nls-lab`: simulate, verify identities, probe norm equivalence, fit
//! growth and emit reports.
//!
//! Exit codes: 0 success, 1 validation failure (bad flag, config or field),
//! 2 runtime failure (I/O, non-finite blow-up).

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use nls_core::energies::{EnergyKind, EnergySpec, IdentityReport};
use nls_core::integrator::IntegratorKind;
use nls_core::lab::{
    column, fit_growth, load_config, norm_equivalence_probe, read_series, resume_experiment, run_ensemble,
    run_with_options, verify_identity, write_report, FitOptions, GrowthModel, LinePlot, Manifest, Report,
    RunConfig, RunOptions, RunOutcome, DEFAULT_FIT_START,
};
use nls_core::spectral::{Grid, GridSpec};
use nls_core::Error;

/// Binary version plus the library identity recorded in manifests.
fn build_identity() -> &'static str {
    Box::leak(format!("{} ({})", env!("CARGO_PKG_VERSION"), nls_core::lab::CODE_VERSION).into_boxed_str())
}

#[derive(Parser, Debug)]
#[command(name = "nls-lab", version = build_identity(), about = "Defocusing NLS experiment harness")]
struct Cli {
    /// Root under which unnamed runs get numbered directories.
    #[arg(long, global = true, env = "NLS_LAB_OUTPUT_ROOT", default_value = "runs")]
    output_root: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Model {
    Polynomial,
    Exponential,
}

impl From<Model> for GrowthModel {
    fn from(m: Model) -> Self {
        match m {
            Model::Polynomial => GrowthModel::Polynomial,
            Model::Exponential => GrowthModel::Exponential,
        }
    }
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Energy {
    Even,
    Odd,
    F2,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Integrator {
    Strang,
    Rk4,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Format {
    Json,
    Text,
}

/// Config fields that flags may override; flags win over the file.
#[derive(clap::Args, Debug, Default)]
struct Overrides {
    /// params.dt
    #[arg(long)]
    dt: Option<f64>,
    /// params.t_end
    #[arg(long)]
    t_end: Option<f64>,
    /// cadence_steps
    #[arg(long)]
    cadence: Option<u64>,
    /// init.seed of a random datum
    #[arg(long)]
    seed: Option<u64>,
    /// params.integrator
    #[arg(long, value_enum)]
    integrator: Option<Integrator>,
}

impl Overrides {
    fn apply(&self, c: &mut RunConfig) -> Result<(), Error> {
        if let Some(dt) = self.dt {
            c.params.dt = dt;
        }
        if let Some(t) = self.t_end {
            c.params.t_end = t;
        }
        if let Some(n) = self.cadence {
            c.cadence_steps = n;
        }
        if let Some(s) = self.seed {
            if c.init.seed().is_none() {
                return Err(Error::invalid("seed", "the configured datum takes no seed"));
            }
            c.init = c.init.with_seed(s);
        }
        if let Some(i) = self.integrator {
            c.params.integrator = match i {
                Integrator::Strang => IntegratorKind::Strang,
                Integrator::Rk4 => IntegratorKind::Rk4,
            };
        }
        Ok(())
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run an experiment and persist manifest, series and checkpoint.
    Simulate {
        /// TOML config, or a run manifest to re-execute.
        #[arg(long, required_unless_present = "resume")]
        config: Option<PathBuf>,
        /// Run directory; defaults to the config's output_dir, then a new
        /// numbered directory under the output root.
        #[arg(long)]
        output: Option<PathBuf>,
        /// Continue the run in this directory from its checkpoint.
        #[arg(long, conflicts_with_all = ["config", "ensemble"])]
        resume: Option<PathBuf>,
        /// Run N members with seeds seed, seed+1, … in member-NNNN subdirectories.
        #[arg(long)]
        ensemble: Option<usize>,
        /// Worker threads for ensembles.
        #[arg(long, default_value_t = 1)]
        jobs: usize,
        /// Record wall-clock times in the manifest.
        #[arg(long)]
        nondeterministic: bool,
        /// Stop (resumably) at the first record at or after this step.
        #[arg(long)]
        stop_at_step: Option<u64>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Check a modified-energy identity along a trajectory.
    Verify {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum, default_value = "even")]
        energy: Energy,
        #[arg(long, default_value_t = 1)]
        k: usize,
        /// Overrides params.p of the config.
        #[arg(long)]
        p: Option<f64>,
        /// Regularization of |u| for F2.
        #[arg(long, default_value_t = 1e-8)]
        eps: f64,
        /// Differencing widths, multiples of dt · cadence.
        #[arg(long, value_delimiter = ',', required = true)]
        widths: Vec<f64>,
        /// Directory for verify.json and plots/identity.svg.
        #[arg(long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Ratio statistics for ‖∂_t^k u − i^k Δ^k u‖_{H^s} over random data.
    Probe {
        #[arg(long, default_value_t = 2)]
        dim: usize,
        #[arg(long, default_value_t = 64)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 1.0)]
        s: f64,
        #[arg(long, default_value_t = 3.0)]
        p: f64,
        #[arg(long, default_value_t = 32)]
        ensemble: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Write probe.json here.
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Fit a growth law to one recorded column of a run.
    Fit {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, value_enum, default_value = "polynomial")]
        model: Model,
        #[arg(long, default_value = "h2")]
        column: String,
        /// t_min,t_max; defaults to 1,t_end.
        #[arg(long, value_delimiter = ',', num_args = 2)]
        window: Option<Vec<f64>>,
    },
    /// Write report.json and plots into a run directory.
    Report {
        #[arg(long)]
        run: PathBuf,
        #[arg(long, value_enum, default_value = "text")]
        format: Format,
        #[arg(long, value_enum)]
        model: Option<Model>,
        #[arg(long, value_delimiter = ',', num_args = 2)]
        window: Option<Vec<f64>>,
    },
}

fn existing(path: &Path, what: &str) -> Result<(), Error> {
    if path.exists() {
        Ok(())
    } else {
        Err(Error::invalid(what, format!("{} does not exist", path.display())))
    }
}

fn read_config(path: &Path) -> Result<RunConfig, Error> {
    existing(path, "config")?;
    load_config(path)
}

fn window(w: &Option<Vec<f64>>) -> Option<(f64, f64)> {
    w.as_ref().map(|v| (v[0], v[1]))
}

/// First `root/NNNN` that does not exist yet.
fn next_run_dir(root: &Path) -> PathBuf {
    (1..)
        .map(|i| root.join(format!("{i:04}")))
        .find(|p| !p.exists())
        .expect("unbounded range")
}

fn describe(o: &RunOutcome) -> String {
    format!(
        "{}: {:?}, last step {}, {} records written",
        o.dir.display(),
        o.status,
        o.last_step.map(|s| s.to_string()).unwrap_or_else(|| "-".into()),
        o.records_written
    )
}

fn simulate(cli: &Cli, cmd: &Command) -> Result<(), Error> {
    let Command::Simulate {
        config,
        output,
        resume,
        ensemble,
        jobs,
        nondeterministic,
        stop_at_step,
        overrides,
    } = cmd
    else {
        unreachable!()
    };
    if let Some(dir) = resume {
        existing(&dir.join(nls_core::lab::MANIFEST_FILE), "resume")?;
        println!("{}", describe(&resume_experiment(dir)?));
        return Ok(());
    }
    let path = config.as_ref().expect("clap requires --config without --resume");
    let mut c = read_config(path)?;
    overrides.apply(&mut c)?;
    if *nondeterministic {
        c.deterministic = false;
    }
    if let Some(o) = output {
        c.output_dir = Some(o.clone());
    } else if c.output_dir.is_none() {
        c.output_dir = Some(next_run_dir(&cli.output_root));
    }
    c.validate()?;
    match ensemble {
        None => {
            let out = run_with_options(
                &c,
                &RunOptions {
                    resume: false,
                    stop_at_step: *stop_at_step,
                },
            )?;
            println!("{}", describe(&out));
            Ok(())
        }
        Some(n) => {
            if *n == 0 {
                return Err(Error::invalid("ensemble", "must be >= 1"));
            }
            if *jobs == 0 {
                return Err(Error::invalid("jobs", "must be >= 1"));
            }
            let results = run_ensemble(&c, *n, *jobs)?;
            let mut first_err = None;
            for (i, r) in results.into_iter().enumerate() {
                match r {
                    Ok(o) => println!("{}", describe(&o)),
                    Err(e) => {
                        eprintln!("member {i}: {e}");
                        first_err.get_or_insert(e);
                    }
                }
            }
            first_err.map_or(Ok(()), Err)
        }
    }
}

fn print_identity(r: &IdentityReport) {
    println!("{} identity, rhs scale {:.6e}", r.spec.label(), r.rhs_scale);
    println!("{:>12}  {:>14}  {:>14}", "width", "max residual", "relative");
    for (i, w) in r.widths.iter().enumerate() {
        println!("{:>12.6e}  {:>14.6e}  {:>14.6e}", w.h, w.max_residual, r.relative_residual(i));
    }
    match (r.order, r.order_fit_residual) {
        (Some(o), Some(res)) => println!("fitted order {o:.4} (fit rms {res:.2e})"),
        _ => println!("fitted order undefined"),
    }
}

fn write_file(path: &Path, text: &str) -> Result<(), Error> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn verify(cmd: &Command) -> Result<(), Error> {
    let Command::Verify {
        config,
        energy,
        k,
        p,
        eps,
        widths,
        output,
        overrides,
    } = cmd
    else {
        unreachable!()
    };
    let mut c = read_config(config)?;
    overrides.apply(&mut c)?;
    if let Some(p) = p {
        c.params.p = *p;
    }
    let p = c.params.p;
    let spec = EnergySpec {
        kind: match energy {
            Energy::Even => EnergyKind::Even,
            Energy::Odd => EnergyKind::Odd,
            Energy::F2 => EnergyKind::F2,
        },
        k: *k,
        p,
        eps_reg: *eps,
    };
    let report = verify_identity(&c, &spec, widths)?;
    print_identity(&report);
    if let Some(dir) = output {
        write_file(&dir.join("verify.json"), &(report.to_json() + "\n"))?;
        let plot = LinePlot {
            title: format!("{} identity residual", spec.label()),
            x_label: "width h".into(),
            y_label: "max |lhs - rhs|".into(),
            log_x: true,
            log_y: true,
            series: vec![(
                "residual".into(),
                report.widths.iter().map(|w| (w.h, w.max_residual)).collect(),
            )],
        };
        write_file(&dir.join("plots").join("identity.svg"), &plot.to_svg())?;
    }
    Ok(())
}

fn probe(cmd: &Command) -> Result<(), Error> {
    let Command::Probe {
        dim,
        n,
        k,
        s,
        p,
        ensemble,
        seed,
        output,
    } = cmd
    else {
        unreachable!()
    };
    let grid = Grid::new(GridSpec::cube(*dim, *n)?)?;
    let r = norm_equivalence_probe(&grid, *k, *s, *p, *ensemble, *seed)?;
    println!(
        "n = {:?}, k = {}, s = {}, p = {}, data index {}, {} samples, {} skipped",
        r.n, r.k, r.s, r.p, r.data_s, r.samples, r.skipped
    );
    if let (Some(a), Some(b)) = (&r.stats, &r.strong_stats) {
        println!("H^(s+2k-1) ratio: max {:.6e} median {:.6e}", a.max, a.median);
        println!("H^(s+2k)   ratio: max {:.6e} median {:.6e}", b.max, b.median);
    }
    if let Some(dir) = output {
        let text = serde_json::to_string_pretty(&r).expect("probe serializes") + "\n";
        write_file(&dir.join("probe.json"), &text)?;
    }
    Ok(())
}

fn fit(cmd: &Command) -> Result<(), Error> {
    let Command::Fit {
        run,
        model,
        column: name,
        window: w,
    } = cmd
    else {
        unreachable!()
    };
    existing(run, "run")?;
    let manifest = Manifest::read(run)?;
    let records = read_series(run)?;
    let series = column(&records, name)?;
    let t_end = manifest.config.params.t_end;
    let win = window(w).unwrap_or((DEFAULT_FIT_START, t_end.max(DEFAULT_FIT_START)));
    let f = fit_growth(&series, (*model).into(), win, None)?;
    println!(
        "{name}: {:?} exponent_or_rate {:.6} prefactor {:.6e} r2 {:.6} window [{}, {}] samples {}",
        f.model, f.exponent_or_rate, f.prefactor, f.r_squared, f.fit_window.0, f.fit_window.1, f.samples
    );
    Ok(())
}

fn print_report(r: &Report) {
    println!("status {:?}, {} records, regime {}", r.run_status, r.records, r.regime.as_deref().unwrap_or("-"));
    for (name, c) in &r.columns {
        println!(
            "{name:>12}: first {:.6e} last {:.6e} max relative drift {:.3e}",
            c.first, c.last, c.max_relative_drift
        );
    }
    for f in &r.fits {
        match &f.fit {
            Some(fit) => println!(
                "fit {}: {:?} {:.4} (r2 {:.4}), envelope {}, within {}",
                f.column,
                fit.model,
                fit.exponent_or_rate,
                fit.r_squared,
                fit.envelope_exponent.map(|e| e.to_string()).unwrap_or_else(|| "-".into()),
                fit.within_envelope
            ),
            None => println!("fit {}: {}", f.column, f.error.as_deref().unwrap_or("no fit")),
        }
    }
    if let Some(b) = &r.h1_bound {
        println!("H1 bound: max |u|_H1^2 {:.6e} <= {:.6e}: {}", b.max_h1_squared, b.bound, b.holds);
    }
}

fn report(cmd: &Command) -> Result<(), Error> {
    let Command::Report {
        run,
        format,
        model,
        window: w,
    } = cmd
    else {
        unreachable!()
    };
    existing(run, "run")?;
    let r = write_report(
        run,
        &FitOptions {
            model: model.map(Into::into),
            window: window(w),
            columns: None,
        },
    )?;
    match format {
        Format::Json => print!("{}", r.to_json()),
        Format::Text => print_report(&r),
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<(), Error> {
    match &cli.command {
        c @ Command::Simulate { .. } => simulate(cli, c),
        c @ Command::Verify { .. } => verify(c),
        c @ Command::Probe { .. } => probe(c),
        c @ Command::Fit { .. } => fit(c),
        c @ Command::Report { .. } => report(c),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_validation() { 1 } else { 2 })
        }
    }
}
