use std::collections::BTreeMap;
use std::fs::{self, File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicUsize, Ordering};
use std::time::{SystemTime, UNIX_EPOCH};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::init::{make_initial, InitSpec};
use crate::calculus::{dt_of_functional, hamiltonian_integrand, mass_integrand};
use crate::energies::{energy, energy_integrand, identity_integrand, EnergyKind, EnergySpec};
use crate::error::{Error, Result};
use crate::integrator::{evolve, EvolveOptions, NlsParams};
use crate::spectral::{hamiltonian, mass, sobolev_norm, Grid, GridSpec, SpectralField};

pub const MANIFEST_FORMAT: &str = "nls-lab/manifest/1";
pub const CODE_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

pub const MANIFEST_FILE: &str = "manifest.json";
pub const SERIES_FILE: &str = "series.ndjson";
pub const CHECKPOINT_FILE: &str = "checkpoint.bin";
pub const DIAGNOSTIC_FILE: &str = "diagnostic.json";
pub const REPORT_FILE: &str = "report.json";
pub const PLOTS_DIR: &str = "plots";

/// Quantities recorded at every cadence point.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Observables {
    #[serde(default = "yes")]
    pub mass: bool,
    #[serde(default = "yes")]
    pub hamiltonian: bool,
    /// Sobolev indices `s`; each records `‖u‖_{H^s}` as column `h<s>`.
    #[serde(default = "default_sobolev")]
    pub sobolev: Vec<f64>,
    /// Each records the energy as the column named by its label.
    #[serde(default)]
    pub energies: Vec<EnergySpec>,
}

fn yes() -> bool {
    true
}

fn default_sobolev() -> Vec<f64> {
    vec![1.0, 2.0]
}

fn one_step() -> u64 {
    1
}

impl Default for Observables {
    fn default() -> Self {
        Observables {
            mass: true,
            hamiltonian: true,
            sobolev: default_sobolev(),
            energies: Vec::new(),
        }
    }
}

/// Column name for `‖u‖_{H^s}`.
pub fn sobolev_column(s: f64) -> String {
    format!("h{s}")
}

impl Observables {
    /// Column names in recording order.
    pub fn columns(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.mass {
            out.push("mass".to_string());
        }
        if self.hamiltonian {
            out.push("hamiltonian".to_string());
        }
        out.extend(self.sobolev.iter().map(|s| sobolev_column(*s)));
        out.extend(self.energies.iter().map(EnergySpec::label));
        out
    }

    fn evaluate(&self, u: &SpectralField, p: f64) -> Result<Vec<f64>> {
        let mut out = Vec::new();
        if self.mass {
            out.push(mass(u));
        }
        if self.hamiltonian {
            out.push(hamiltonian(u, p));
        }
        for s in &self.sobolev {
            out.push(sobolev_norm(u, *s));
        }
        for e in &self.energies {
            out.push(energy(u, e)?);
        }
        Ok(out)
    }
}

/// Everything needed to reproduce a run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub grid: GridSpec,
    pub params: NlsParams,
    pub init: InitSpec,
    #[serde(default)]
    pub observables: Observables,
    #[serde(default = "one_step")]
    pub cadence_steps: u64,
    /// Run directory; the CLI fills it in when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
    /// When false the manifest also carries wall-clock timestamps; the
    /// series is produced the same way either way.
    #[serde(default = "yes")]
    pub deterministic: bool,
}

impl RunConfig {
    pub fn new(grid: GridSpec, params: NlsParams, init: InitSpec) -> Self {
        RunConfig {
            grid,
            params,
            init,
            observables: Observables::default(),
            cadence_steps: 1,
            output_dir: None,
            deterministic: true,
        }
    }

    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: RunConfig = toml::from_str(text).map_err(|e| Error::format("config", e.message()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        self.params.validate()?;
        if self.grid.dim() != self.params.dim {
            return Err(Error::invalid(
                "params.dim",
                format!("{} but the grid has {} axes", self.params.dim, self.grid.dim()),
            ));
        }
        self.init.validate(self.params.dim)?;
        if self.cadence_steps == 0 {
            return Err(Error::invalid("cadence_steps", "must be >= 1"));
        }
        for s in &self.observables.sobolev {
            if !s.is_finite() {
                return Err(Error::invalid("observables.sobolev", format!("{s} must be finite")));
            }
        }
        for e in &self.observables.energies {
            e.validate()?;
            if e.p != self.params.p {
                return Err(Error::invalid(
                    "observables.energies.p",
                    format!("{} differs from params.p = {}", e.p, self.params.p),
                ));
            }
        }
        let cols = self.observables.columns();
        let mut seen = std::collections::BTreeSet::new();
        for c in &cols {
            if !seen.insert(c) {
                return Err(Error::invalid("observables", format!("column {c} appears twice")));
            }
        }
        Ok(())
    }

    fn output_dir(&self) -> Result<&Path> {
        self.output_dir
            .as_deref()
            .ok_or_else(|| Error::invalid("output_dir", "no run directory given"))
    }
}

/// Load a TOML config, or the config echoed in a run manifest (`.json`).
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    if path.extension().is_some_and(|e| e == "json") {
        let m = Manifest::from_json(&text)?;
        m.config.validate()?;
        return Ok(m.config);
    }
    RunConfig::from_toml_str(&text)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RunStatus {
    Running,
    Interrupted,
    Completed,
    Failed,
}

/// A symbolic identity recorded with the run.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IdentityText {
    pub observable: String,
    /// Integrand of the functional.
    pub integrand: String,
    /// Integrand of its time derivative after integration by parts.
    pub derivative: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct WallClock {
    pub started_unix_ms: u64,
    pub finished_unix_ms: Option<u64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub format: String,
    pub code_version: String,
    pub config: RunConfig,
    /// Observable columns of `series.ndjson`, in recording order.
    pub columns: Vec<String>,
    pub identities: Vec<IdentityText>,
    pub status: RunStatus,
    pub last_step: Option<u64>,
    /// Relative path of the diagnostic file of a failed run.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_clock: Option<WallClock>,
}

impl Manifest {
    pub fn from_json(text: &str) -> Result<Self> {
        let m: Manifest = serde_json::from_str(text).map_err(|e| Error::format("manifest", e))?;
        if m.format != MANIFEST_FORMAT {
            return Err(Error::format("manifest", format!("unknown format {:?}", m.format)));
        }
        Ok(m)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes") + "\n"
    }

    pub fn read(dir: &Path) -> Result<Self> {
        let path = dir.join(MANIFEST_FILE);
        Manifest::from_json(&fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?)
    }
}

fn identities(config: &RunConfig) -> Result<Vec<IdentityText>> {
    let (dim, p) = (config.params.dim, config.params.p);
    let mut out = Vec::new();
    if config.observables.mass {
        let m = mass_integrand(dim);
        out.push(IdentityText {
            observable: "mass".into(),
            integrand: m.to_string(),
            derivative: dt_of_functional(&m, p).map(|e| e.to_string()).unwrap_or_else(|e| e.to_string()),
        });
    }
    if config.observables.hamiltonian {
        if let Ok(h) = hamiltonian_integrand(p, dim) {
            out.push(IdentityText {
                observable: "hamiltonian".into(),
                integrand: h.to_string(),
                derivative: dt_of_functional(&h, p)?.to_string(),
            });
        }
    }
    for e in &config.observables.energies {
        let text = if e.kind == EnergyKind::F2 {
            IdentityText {
                observable: e.label(),
                integrand: "|u_t|^2 - (p-1) r^(p-1) |grad r|^2 - (p-1)/p r^(2p), r = sqrt(|u|^2 + eps^2)".into(),
                derivative: "(p-1)(p-3) r^(p-2) r_t |grad r|^2 + 2(p-1) r^(p-2) r_t |grad u|^2".into(),
            }
        } else {
            IdentityText {
                observable: e.label(),
                integrand: energy_integrand(e, dim)?.to_string(),
                derivative: identity_integrand(e, dim)
                    .map(|nf| nf.to_string())
                    .unwrap_or_else(|err| format!("not derived: {err}")),
            }
        };
        out.push(text);
    }
    Ok(out)
}

/// One line of `series.ndjson`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Record {
    pub step: u64,
    pub t: f64,
    #[serde(flatten)]
    pub values: BTreeMap<String, f64>,
}

impl Record {
    pub fn parse(line: &str) -> Result<Self> {
        let r: Record = serde_json::from_str(line).map_err(|e| Error::format("series record", e))?;
        if !r.t.is_finite() {
            return Err(Error::format("series record", "t is not finite"));
        }
        Ok(r)
    }

    pub fn to_line(&self) -> String {
        serde_json::to_string(self).expect("record serializes") + "\n"
    }
}

pub fn parse_series(text: &str) -> Result<Vec<Record>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            Record::parse(l).map_err(|e| Error::format(format!("series line {}", i + 1), e))
        })
        .collect()
}

pub fn read_series(dir: &Path) -> Result<Vec<Record>> {
    let path = dir.join(SERIES_FILE);
    parse_series(&fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?)
}

/// `(t, value)` pairs of one column.
pub fn column(records: &[Record], name: &str) -> Result<Vec<(f64, f64)>> {
    records
        .iter()
        .map(|r| {
            r.values
                .get(name)
                .map(|v| (r.t, *v))
                .ok_or_else(|| Error::invalid("column", format!("{name} is not recorded")))
        })
        .collect()
}

const CHECKPOINT_MAGIC: &[u8; 8] = b"NLSCKPT1";

/// Spectral state at a recorded step.
///
/// Layout (little endian): magic, step u64, t f64, dim u64, n_j u64 per axis,
/// coefficient count u64, (re, im) f64 pairs, FNV-1a 64 checksum of all
/// preceding bytes.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub step: u64,
    pub t: f64,
    pub n: Vec<usize>,
    pub coeffs: Vec<Complex64>,
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ *b as u64).wrapping_mul(0x0100_0000_01b3))
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl Reader<'_> {
    fn take(&mut self, n: usize) -> Result<&[u8]> {
        if self.buf.len() < n {
            return Err(Error::format("checkpoint", "truncated"));
        }
        let (a, b) = self.buf.split_at(n);
        self.buf = b;
        Ok(a)
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

impl Checkpoint {
    pub fn encode(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(48 + 8 * self.n.len() + 16 * self.coeffs.len());
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&self.step.to_le_bytes());
        out.extend_from_slice(&self.t.to_le_bytes());
        out.extend_from_slice(&(self.n.len() as u64).to_le_bytes());
        for n in &self.n {
            out.extend_from_slice(&(*n as u64).to_le_bytes());
        }
        out.extend_from_slice(&(self.coeffs.len() as u64).to_le_bytes());
        for c in &self.coeffs {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
        let sum = fnv1a(&out);
        out.extend_from_slice(&sum.to_le_bytes());
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 8 + 8 || &bytes[..8] != CHECKPOINT_MAGIC {
            return Err(Error::format("checkpoint", "bad magic"));
        }
        let (body, sum) = bytes.split_at(bytes.len() - 8);
        if fnv1a(body) != u64::from_le_bytes(sum.try_into().expect("8 bytes")) {
            return Err(Error::format("checkpoint", "checksum mismatch"));
        }
        let mut r = Reader { buf: &body[8..] };
        let step = r.u64()?;
        let t = r.f64()?;
        let dim = r.u64()?;
        if !(1..=3).contains(&dim) {
            return Err(Error::format("checkpoint", format!("dimension {dim}")));
        }
        let mut n = Vec::with_capacity(dim as usize);
        let mut total: u64 = 1;
        for _ in 0..dim {
            let nj = r.u64()?;
            total = total
                .checked_mul(nj)
                .ok_or_else(|| Error::format("checkpoint", "grid size overflows"))?;
            n.push(nj as usize);
        }
        let count = r.u64()?;
        if count != total || r.buf.len() as u64 != count.saturating_mul(16) {
            return Err(Error::format("checkpoint", "coefficient count does not match the grid"));
        }
        let mut coeffs = Vec::with_capacity(count as usize);
        for _ in 0..count {
            coeffs.push(Complex64::new(r.f64()?, r.f64()?));
        }
        Ok(Checkpoint { step, t, n, coeffs })
    }
}

/// Write `bytes` to `path` through a sibling temporary file and a rename.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes).map_err(|e| Error::io(&tmp, e))?;
    fs::rename(&tmp, path).map_err(|e| Error::io(path, e))
}

fn unix_ms() -> u64 {
    SystemTime::now().duration_since(UNIX_EPOCH).map(|d| d.as_millis() as u64).unwrap_or(0)
}

/// Diagnostic written when a run produces a non-finite state or observable.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub step: u64,
    pub t: f64,
    pub reason: String,
    /// Observable values at the failing step; non-finite entries are null.
    pub values: BTreeMap<String, Option<f64>>,
    pub last_good_step: Option<u64>,
}

#[derive(Clone, Debug, Default)]
pub struct RunOptions {
    /// Continue from the checkpoint in the run directory.
    pub resume: bool,
    /// Stop (status `interrupted`) at the first record at or after this step.
    pub stop_at_step: Option<u64>,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutcome {
    pub dir: PathBuf,
    pub status: RunStatus,
    pub last_step: Option<u64>,
    /// Records written by this invocation.
    pub records_written: u64,
}

pub fn run_experiment(config: &RunConfig) -> Result<RunOutcome> {
    run_with_options(config, &RunOptions::default())
}

/// Resume the run stored in `dir` from its checkpoint.
pub fn resume_experiment(dir: &Path) -> Result<RunOutcome> {
    let mut config = Manifest::read(dir)?.config;
    config.output_dir = Some(dir.to_path_buf());
    run_with_options(
        &config,
        &RunOptions {
            resume: true,
            stop_at_step: None,
        },
    )
}

fn truncate_series(path: &Path, last_step: u64) -> Result<()> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut kept = String::new();
    for line in text.lines() {
        // A torn final line from an interrupted write is dropped.
        let Ok(r) = Record::parse(line) else { break };
        if r.step > last_step {
            break;
        }
        kept.push_str(line);
        kept.push('\n');
    }
    write_atomic(path, kept.as_bytes())
}

pub fn run_with_options(config: &RunConfig, options: &RunOptions) -> Result<RunOutcome> {
    config.validate()?;
    let dir = config.output_dir()?.to_path_buf();
    let grid = Grid::new(config.grid.clone())?;
    let total = config.params.steps();
    let series_path = dir.join(SERIES_FILE);
    let ckpt_path = dir.join(CHECKPOINT_FILE);

    let mut manifest;
    let u0;
    let start_step;
    if options.resume {
        manifest = Manifest::read(&dir)?;
        if manifest.config.grid != config.grid
            || manifest.config.params != config.params
            || manifest.config.init != config.init
            || manifest.config.observables != config.observables
            || manifest.config.cadence_steps != config.cadence_steps
        {
            return Err(Error::invalid("config", "differs from the manifest of the run being resumed"));
        }
        if manifest.status == RunStatus::Completed {
            return Ok(RunOutcome {
                dir,
                status: RunStatus::Completed,
                last_step: manifest.last_step,
                records_written: 0,
            });
        }
        let bytes = fs::read(&ckpt_path).map_err(|e| Error::io(&ckpt_path, e))?;
        let ck = Checkpoint::decode(&bytes)?;
        if ck.n != config.grid.n {
            return Err(Error::format("checkpoint", "grid differs from the manifest"));
        }
        truncate_series(&series_path, ck.step)?;
        u0 = SpectralField::from_coeffs(&grid, ck.coeffs)?;
        start_step = ck.step;
        manifest.status = RunStatus::Running;
        manifest.last_step = Some(ck.step);
        manifest.diagnostic = None;
    } else {
        fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        u0 = make_initial(&config.init, &grid)?;
        start_step = 0;
        manifest = Manifest {
            format: MANIFEST_FORMAT.into(),
            code_version: CODE_VERSION.into(),
            config: config.clone(),
            columns: config.observables.columns(),
            identities: identities(config)?,
            status: RunStatus::Running,
            last_step: None,
            diagnostic: None,
            wall_clock: (!config.deterministic).then(|| WallClock {
                started_unix_ms: unix_ms(),
                finished_unix_ms: None,
            }),
        };
        for stale in [CHECKPOINT_FILE, DIAGNOSTIC_FILE, REPORT_FILE] {
            let _ = fs::remove_file(dir.join(stale));
        }
        File::create(&series_path).map_err(|e| Error::io(&series_path, e))?;
    }
    write_atomic(&dir.join(MANIFEST_FILE), manifest.to_json().as_bytes())?;

    let mut params = config.params.clone();
    let mut interrupted = false;
    if let Some(stop) = options.stop_at_step {
        let stop = stop.div_ceil(config.cadence_steps) * config.cadence_steps;
        if stop < total {
            params.t_end = stop as f64 * params.dt;
            interrupted = true;
        }
    }

    let mut series = OpenOptions::new()
        .append(true)
        .open(&series_path)
        .map_err(|e| Error::io(&series_path, e))?;
    let columns = manifest.columns.clone();
    let mut written = 0u64;
    let mut last_good: Option<u64> = options.resume.then_some(start_step);
    let mut failure: Option<Diagnostic> = None;

    let result = {
        let mut observer = |step: u64, t: f64, u: &SpectralField| -> Result<()> {
            let vals = config.observables.evaluate(u, config.params.p)?;
            if vals.iter().any(|v| !v.is_finite()) {
                failure = Some(Diagnostic {
                    step,
                    t,
                    reason: "non-finite observable".into(),
                    values: columns
                        .iter()
                        .zip(&vals)
                        .map(|(c, v)| (c.clone(), v.is_finite().then_some(*v)))
                        .collect(),
                    last_good_step: last_good,
                });
                return Err(Error::NonFinite { t, step, path: None });
            }
            let record = Record {
                step,
                t,
                values: columns.iter().cloned().zip(vals).collect(),
            };
            series
                .write_all(record.to_line().as_bytes())
                .map_err(|e| Error::io(&series_path, e))?;
            let ck = Checkpoint {
                step,
                t,
                n: config.grid.n.clone(),
                coeffs: u.coeffs().to_vec(),
            };
            write_atomic(&ckpt_path, &ck.encode())?;
            written += 1;
            last_good = Some(step);
            Ok(())
        };
        evolve(
            &u0,
            &params,
            EvolveOptions {
                cadence_steps: config.cadence_steps,
                keep_states: false,
                start_step,
            },
            &mut observer,
        )
    };

    manifest.last_step = last_good;
    if let Some(w) = manifest.wall_clock.as_mut() {
        w.finished_unix_ms = Some(unix_ms());
    }
    match result {
        Ok(_) => {
            manifest.status = if interrupted {
                RunStatus::Interrupted
            } else {
                RunStatus::Completed
            };
            write_atomic(&dir.join(MANIFEST_FILE), manifest.to_json().as_bytes())?;
            Ok(RunOutcome {
                dir,
                status: manifest.status,
                last_step: last_good,
                records_written: written,
            })
        }
        Err(Error::NonFinite { t, step, .. }) => {
            let diag = failure.unwrap_or(Diagnostic {
                step,
                t,
                reason: "non-finite state".into(),
                values: BTreeMap::new(),
                last_good_step: last_good,
            });
            let path = dir.join(DIAGNOSTIC_FILE);
            let text = serde_json::to_string_pretty(&diag).expect("diagnostic serializes") + "\n";
            write_atomic(&path, text.as_bytes())?;
            manifest.status = RunStatus::Failed;
            manifest.diagnostic = Some(DIAGNOSTIC_FILE.into());
            write_atomic(&dir.join(MANIFEST_FILE), manifest.to_json().as_bytes())?;
            Err(Error::NonFinite {
                t,
                step,
                path: Some(path),
            })
        }
        Err(e) => {
            manifest.status = RunStatus::Failed;
            let _ = write_atomic(&dir.join(MANIFEST_FILE), manifest.to_json().as_bytes());
            Err(e)
        }
    }
}

/// Member `i` of an ensemble: seed `base + i`, directory `member-iiii`.
pub fn ensemble_member(config: &RunConfig, i: usize) -> Result<RunConfig> {
    let base = config
        .init
        .seed()
        .ok_or_else(|| Error::invalid("init.kind", "ensembles need a seeded random datum"))?;
    let mut c = config.clone();
    c.init = config.init.with_seed(base.wrapping_add(i as u64));
    c.output_dir = Some(config.output_dir()?.join(format!("member-{i:04}")));
    Ok(c)
}

/// Run `members` independent members on at most `jobs` threads.
///
/// Results are in member order; a failed member does not stop the others.
pub fn run_ensemble(config: &RunConfig, members: usize, jobs: usize) -> Result<Vec<Result<RunOutcome>>> {
    let configs: Vec<RunConfig> = (0..members).map(|i| ensemble_member(config, i)).collect::<Result<_>>()?;
    let next = AtomicUsize::new(0);
    let slots: Vec<std::sync::Mutex<Option<Result<RunOutcome>>>> =
        (0..members).map(|_| std::sync::Mutex::new(None)).collect();
    std::thread::scope(|scope| {
        for _ in 0..jobs.clamp(1, members.max(1)) {
            scope.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::SeqCst);
                if i >= members {
                    break;
                }
                let r = run_experiment(&configs[i]);
                *slots[i].lock().expect("slot lock") = Some(r);
            });
        }
    });
    Ok(slots
        .into_iter()
        .map(|s| s.into_inner().expect("slot lock").expect("every member ran"))
        .collect())
}
