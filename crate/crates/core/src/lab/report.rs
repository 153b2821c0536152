use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::fit::{envelope, fit_growth, window_sensitivity, Envelope, GrowthFit, GrowthModel, ENVELOPE_MARGIN};
use super::plot::LinePlot;
use super::run::{column, read_series, sobolev_column, Manifest, Record, RunStatus, CODE_VERSION, PLOTS_DIR, REPORT_FILE};
use crate::error::{Error, Result};

pub const REPORT_FORMAT: &str = "nls-lab/report/1";

/// Fractions of the fit window used for the sensitivity study.
pub const SENSITIVITY_FRACTIONS: [f64; 3] = [1.0, 0.5, 0.25];

/// Default fit window start; earlier samples are treated as transient.
pub const DEFAULT_FIT_START: f64 = 1.0;

#[derive(Clone, Debug, Default)]
pub struct FitOptions {
    /// Overrides the regime's envelope model.
    pub model: Option<GrowthModel>,
    /// Defaults to `[1, t_end]`.
    pub window: Option<(f64, f64)>,
    /// Columns to fit; defaults to every Sobolev column.
    pub columns: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnSummary {
    pub first: f64,
    pub last: f64,
    pub min: f64,
    pub max: f64,
    /// `max_t |v(t) − v(0)| / |v(0)|` (absolute when `v(0) = 0`).
    pub max_relative_drift: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ColumnFit {
    pub column: String,
    pub envelope: Option<Envelope>,
    pub fit: Option<GrowthFit>,
    /// Fits over trailing sub-windows, see [`SENSITIVITY_FRACTIONS`].
    pub sensitivity: Vec<GrowthFit>,
    /// Why no fit was produced.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub error: Option<String>,
}

/// `‖u(t)‖_{H¹}² ≤ mass(u₀) + hamiltonian(u₀)` over all samples.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct H1Bound {
    pub bound: f64,
    pub max_h1_squared: f64,
    pub holds: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub format: String,
    pub code_version: String,
    pub run_status: RunStatus,
    pub records: usize,
    pub regime: Option<String>,
    pub columns: BTreeMap<String, ColumnSummary>,
    pub fits: Vec<ColumnFit>,
    pub h1_bound: Option<H1Bound>,
    /// How envelope margins are chosen.
    pub margin_policy: String,
}

impl Report {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes") + "\n"
    }
}

fn summarize(values: &[(f64, f64)]) -> ColumnSummary {
    let first = values[0].1;
    let scale = if first != 0.0 { first.abs() } else { 1.0 };
    ColumnSummary {
        first,
        last: values[values.len() - 1].1,
        min: values.iter().map(|v| v.1).fold(f64::INFINITY, f64::min),
        max: values.iter().map(|v| v.1).fold(f64::NEG_INFINITY, f64::max),
        max_relative_drift: values.iter().map(|v| (v.1 - first).abs() / scale).fold(0.0, f64::max),
    }
}

fn h1_bound(records: &[Record]) -> Option<H1Bound> {
    let first = records.first()?;
    let bound = first.values.get("mass")? + first.values.get("hamiltonian")?;
    let h1 = sobolev_column(1.0);
    let max_h1_squared = records
        .iter()
        .map(|r| r.values.get(&h1).map(|v| v * v))
        .collect::<Option<Vec<f64>>>()?
        .into_iter()
        .fold(0.0, f64::max);
    Some(H1Bound {
        bound,
        max_h1_squared,
        holds: max_h1_squared <= bound * (1.0 + 1e-12),
    })
}

/// Summaries and growth fits for a finished (or partial) run.
pub fn build_report(manifest: &Manifest, records: &[Record], options: &FitOptions) -> Result<Report> {
    if records.is_empty() {
        return Err(Error::InsufficientData("the run has no records".into()));
    }
    let params = &manifest.config.params;
    let regime = params.regime();
    let mut columns = BTreeMap::new();
    for name in &manifest.columns {
        columns.insert(name.clone(), summarize(&column(records, name)?));
    }
    let fit_columns: Vec<(String, Option<f64>)> = match &options.columns {
        Some(cols) => cols
            .iter()
            .map(|c| {
                let s = manifest
                    .config
                    .observables
                    .sobolev
                    .iter()
                    .find(|s| sobolev_column(**s) == *c)
                    .copied();
                (c.clone(), s)
            })
            .collect(),
        None => manifest
            .config
            .observables
            .sobolev
            .iter()
            .map(|s| (sobolev_column(*s), Some(*s)))
            .collect(),
    };
    let window = options.window.unwrap_or((DEFAULT_FIT_START, params.t_end.max(DEFAULT_FIT_START)));
    let mut fits = Vec::new();
    for (name, s) in fit_columns {
        let series = column(records, &name)?;
        let env = match (regime, s) {
            (Some(r), Some(m)) => Some(envelope(r, m, params.p)),
            _ => None,
        };
        let model = options
            .model
            .or(env.as_ref().map(|e| e.model))
            .unwrap_or(GrowthModel::Polynomial);
        let env_exp = env.as_ref().filter(|e| e.model == model).and_then(|e| e.exponent);
        let (fit, error) = match fit_growth(&series, model, window, env_exp) {
            Ok(f) => (Some(f), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let sensitivity = if fit.is_some() {
            window_sensitivity(&series, model, window, env_exp, &SENSITIVITY_FRACTIONS)
        } else {
            Vec::new()
        };
        fits.push(ColumnFit {
            column: name,
            envelope: env,
            fit,
            sensitivity,
            error,
        });
    }
    Ok(Report {
        format: REPORT_FORMAT.into(),
        code_version: CODE_VERSION.into(),
        run_status: manifest.status,
        records: records.len(),
        regime: regime.map(|r| format!("{r:?}")),
        columns,
        fits,
        h1_bound: h1_bound(records),
        margin_policy: format!(
            "within_envelope means exponent <= envelope + {ENVELOPE_MARGIN}; the margin stands in for an unquantified +epsilon and is a policy choice"
        ),
    })
}

/// Build the report of the run in `dir` and write `report.json` and
/// `plots/<column>.svg`. Returns the report.
pub fn write_report(dir: &Path, options: &FitOptions) -> Result<Report> {
    let manifest = Manifest::read(dir)?;
    let records = read_series(dir)?;
    let report = build_report(&manifest, &records, options)?;
    let path = dir.join(REPORT_FILE);
    fs::write(&path, report.to_json()).map_err(|e| Error::io(&path, e))?;
    let plots = dir.join(PLOTS_DIR);
    fs::create_dir_all(&plots).map_err(|e| Error::io(&plots, e))?;
    for name in &manifest.columns {
        let plot = LinePlot {
            title: format!("{name} vs t"),
            x_label: "t".into(),
            y_label: name.clone(),
            log_x: false,
            log_y: false,
            series: vec![(name.clone(), column(&records, name)?)],
        };
        let p = plots.join(format!("{name}.svg"));
        fs::write(&p, plot.to_svg()).map_err(|e| Error::io(&p, e))?;
    }
    Ok(report)
}
