use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use super::gen::{gen_predictors, gen_response, regression_function, SimScenario};
use super::metrics::{
    max_abs_correlation, metric_cdf_deviation, metric_mee_ase, metric_mee_ase_fits, prediction_errors,
    TensorGrid,
};
use crate::backfit::{backfit, AdditiveFit, Backend, FitConfig};
use crate::bandwidth::{cv_select, CvSpec};
use crate::data::{scale_to_unit, Dataset, ScaledView};
use crate::error::{Error, Result};
use crate::rng::{task_stream, SeededRng};
use crate::sampler::{ies_select, lowcon_select, random_select, Method, Subsample};

const ROLE_DATA: u64 = 0;
const ROLE_SURROGATE_CV: u64 = 1;

fn role_subsample(method_index: usize) -> u64 {
    2 + 2 * method_index as u64
}

fn role_cv(method_index: usize) -> u64 {
    3 + 2 * method_index as u64
}

/// How bandwidths are chosen for each subsample fit.
#[derive(Debug, Clone, PartialEq)]
pub enum BandwidthChoice {
    Fixed(Vec<f64>),
    Cv(CvSpec),
}

#[derive(Debug, Clone)]
pub struct BenchConfig {
    pub scenario: SimScenario,
    pub n: usize,
    pub q: u32,
    pub methods: Vec<Method>,
    pub reps: usize,
    /// Points per axis of the [−1.8, 1.8]^p test grid.
    pub grid_per_axis: usize,
    pub cdf_grid: usize,
    pub bandwidths: BandwidthChoice,
    pub fit: FitConfig,
}

impl BenchConfig {
    pub fn new(scenario: SimScenario, n: usize, q: u32) -> Self {
        let p = scenario.p;
        Self {
            scenario,
            n,
            q,
            methods: vec![Method::Ies, Method::Rand],
            reps: 50,
            grid_per_axis: 40,
            cdf_grid: 64,
            bandwidths: BandwidthChoice::Cv(CvSpec::default_for(p)),
            fit: FitConfig::default(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct RealDataConfig {
    pub n: usize,
    pub q: u32,
    pub methods: Vec<Method>,
    pub reps: usize,
    pub seed: u64,
    pub grid_per_axis: usize,
    pub cdf_grid: usize,
    pub bandwidths: BandwidthChoice,
    pub fit: FitConfig,
    /// Bandwidths of the full-data reference fit; cross-validated when `None`.
    pub surrogate_bandwidths: Option<Vec<f64>>,
    /// Grid size of the binned smoother used for the full-data fit.
    pub surrogate_bins: usize,
}

impl RealDataConfig {
    pub fn new(p: usize, n: usize, q: u32) -> Self {
        Self {
            n,
            q,
            methods: vec![Method::Ies, Method::Rand],
            reps: 1,
            seed: 0,
            grid_per_axis: 40,
            cdf_grid: 64,
            bandwidths: BandwidthChoice::Cv(CvSpec::default_for(p)),
            fit: FitConfig::default(),
            surrogate_bandwidths: None,
            surrogate_bins: 512,
        }
    }
}

/// Wall-clock seconds per stage of one (replication, method) task.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct Timing {
    pub subsample_s: f64,
    pub cv_s: f64,
    pub fit_s: f64,
    pub total_s: f64,
}

/// One (replication, method) outcome.
#[derive(Debug, Clone, Serialize)]
pub struct MetricRecord {
    pub scenario: String,
    pub method: String,
    pub replication: usize,
    pub n: usize,
    pub distinct_rows: usize,
    pub mee: Option<f64>,
    pub ase: Option<f64>,
    /// Per column pair (a < b in row-major pair order).
    pub cdf_deviation: Vec<f64>,
    pub max_cdf_deviation: f64,
    pub max_abs_correlation: f64,
    pub ave_pred_error: Option<f64>,
    pub max_pred_error: Option<f64>,
    pub bandwidths: Option<Vec<f64>>,
    pub cv_error: Option<f64>,
    pub iterations: Option<usize>,
    pub converged: Option<bool>,
    pub fit_error: Option<String>,
    #[serde(skip)]
    pub timing: Timing,
}

#[derive(Debug, Clone, Default)]
pub struct BenchmarkReport {
    pub records: Vec<MetricRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub scenario: String,
    pub method: String,
    pub metric: String,
    pub count: usize,
    pub median: f64,
    pub q1: f64,
    pub q3: f64,
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile(sorted: &[f64], prob: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let pos = prob * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// Sibling path `<stem>.<suffix>` next to `path`.
pub fn sidecar_path(path: &Path, suffix: &str) -> PathBuf {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    path.with_file_name(format!("{stem}.{suffix}"))
}

impl BenchmarkReport {
    pub fn for_method<'a>(&'a self, method: &'a str) -> impl Iterator<Item = &'a MetricRecord> + 'a {
        self.records.iter().filter(move |r| r.method == method)
    }

    /// Median of a metric over the records of one method.
    pub fn median(&self, method: &str, metric: impl Fn(&MetricRecord) -> Option<f64>) -> f64 {
        let mut v: Vec<f64> = self.for_method(method).filter_map(metric).filter(|v| v.is_finite()).collect();
        v.sort_by(f64::total_cmp);
        quantile(&v, 0.5)
    }

    /// Median and quartiles per (scenario, method, metric).
    pub fn summary(&self) -> Vec<SummaryRow> {
        type Getter = fn(&MetricRecord) -> Option<f64>;
        let metrics: [(&str, Getter); 6] = [
            ("mee", |r| r.mee),
            ("ase", |r| r.ase),
            ("max_cdf_deviation", |r| Some(r.max_cdf_deviation)),
            ("max_abs_correlation", |r| Some(r.max_abs_correlation)),
            ("ave_pred_error", |r| r.ave_pred_error),
            ("max_pred_error", |r| r.max_pred_error),
        ];
        let mut groups: BTreeMap<(String, String), Vec<&MetricRecord>> = BTreeMap::new();
        for r in &self.records {
            groups.entry((r.scenario.clone(), r.method.clone())).or_default().push(r);
        }
        let mut rows = Vec::new();
        for ((scenario, method), recs) in groups {
            for (name, get) in metrics {
                let mut v: Vec<f64> = recs.iter().filter_map(|r| get(r)).filter(|v| v.is_finite()).collect();
                if v.is_empty() {
                    continue;
                }
                v.sort_by(f64::total_cmp);
                rows.push(SummaryRow {
                    scenario: scenario.clone(),
                    method: method.clone(),
                    metric: name.to_string(),
                    count: v.len(),
                    median: quantile(&v, 0.5),
                    q1: quantile(&v, 0.25),
                    q3: quantile(&v, 0.75),
                });
            }
        }
        rows
    }

    /// JSON lines, one record per line, without timings.
    pub fn write_jsonl(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
        for r in &self.records {
            serde_json::to_writer(&mut w, r)?;
            writeln!(w).map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_timing(&self, path: &Path) -> Result<()> {
        #[derive(Serialize)]
        struct Line<'a> {
            scenario: &'a str,
            method: &'a str,
            replication: usize,
            #[serde(flatten)]
            timing: Timing,
        }
        let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
        for r in &self.records {
            let line = Line {
                scenario: &r.scenario,
                method: &r.method,
                replication: r.replication,
                timing: r.timing,
            };
            serde_json::to_writer(&mut w, &line)?;
            writeln!(w).map_err(|e| Error::io(path, e))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn write_summary_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for row in self.summary() {
            w.serialize(row)?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    /// Report at `path`, plus `<stem>.summary.csv` and `<stem>.timing.jsonl` beside it.
    pub fn write_all(&self, path: &Path) -> Result<()> {
        self.write_jsonl(path)?;
        self.write_summary_csv(&sidecar_path(path, "summary.csv"))?;
        self.write_timing(&sidecar_path(path, "timing.jsonl"))
    }
}

fn select(
    method: Method,
    view: &ScaledView<'_>,
    n: usize,
    q: u32,
    rng: &mut SeededRng,
) -> Result<Subsample> {
    match method {
        Method::Ies => ies_select(view, n, q, rng, false),
        Method::Rand => random_select(view.n_rows(), n, rng),
        Method::Lowcon => lowcon_select(view, n, rng),
    }
}

struct FitOutcome {
    fit: AdditiveFit,
    cv_error: Option<f64>,
    cv_s: f64,
    fit_s: f64,
}

fn fit_subsample(
    sub: &Dataset,
    choice: &BandwidthChoice,
    cfg: &FitConfig,
    rng: &mut SeededRng,
) -> Result<FitOutcome> {
    let t = Instant::now();
    let (h, cv_error) = match choice {
        BandwidthChoice::Fixed(h) => (h.clone(), None),
        BandwidthChoice::Cv(spec) => {
            let r = cv_select(sub, spec, cfg, rng)?;
            (r.bandwidths, Some(r.error))
        }
    };
    let cv_s = t.elapsed().as_secs_f64();
    let t = Instant::now();
    let fit = backfit(sub, &h, cfg)?;
    Ok(FitOutcome {
        fit,
        cv_error,
        cv_s,
        fit_s: t.elapsed().as_secs_f64(),
    })
}

/// Uniformity metrics of scaled subsample rows.
fn uniformity(sub: &Dataset, cdf_grid: usize) -> Result<(Vec<f64>, f64, f64)> {
    let p = sub.n_cols();
    let devs: Vec<f64> = if p >= 2 {
        metric_cdf_deviation(sub.predictors(), p, cdf_grid)?
            .into_iter()
            .map(|d| d.deviation)
            .collect()
    } else {
        Vec::new()
    };
    let max_dev = devs.iter().copied().fold(0.0, f64::max);
    Ok((devs, max_dev, max_abs_correlation(sub.predictors(), p)))
}

/// Simulation study: per replication, generate data, subsample with every
/// method, select bandwidths, fit and score. Records are ordered by
/// (replication, method). Scenarios with p ≠ 3 have no response model and
/// record uniformity metrics only.
pub fn run_benchmark(cfg: &BenchConfig) -> Result<BenchmarkReport> {
    cfg.scenario.validate()?;
    if cfg.methods.is_empty() || cfg.reps == 0 {
        return Err(Error::InvalidArgument("benchmark needs at least one method and one replication".into()));
    }
    let per_rep: Vec<Vec<MetricRecord>> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| run_replication(cfg, rep))
        .collect::<Result<_>>()?;
    Ok(BenchmarkReport {
        records: per_rep.into_iter().flatten().collect(),
    })
}

fn run_replication(cfg: &BenchConfig, rep: usize) -> Result<Vec<MetricRecord>> {
    let s = &cfg.scenario;
    let mut rng = SeededRng::new(s.seed, task_stream(rep as u64, ROLE_DATA));
    let x = gen_predictors(s, &mut rng)?;
    let with_model = s.p == 3;
    let y = if with_model {
        gen_response(&x, s.p, s.misspecify, s.noise_var, &mut rng)?
    } else {
        vec![0.0; s.n_total]
    };
    let names = (1..=s.p).map(|j| format!("x{j}")).collect();
    let data = Dataset::new(x, y, names, "y")?;
    let view = scale_to_unit(&data);
    let grid = with_model.then(|| {
        let g = TensorGrid::from_original_lenient(&view, -1.8, 1.8, cfg.grid_per_axis);
        if !g.inside_unit_cube() {
            log::warn!("replication {rep}: test grid extends past the data range; edge nodes are extrapolated");
        }
        g
    });
    let mut out = Vec::with_capacity(cfg.methods.len());
    for (mi, &method) in cfg.methods.iter().enumerate() {
        let start = Instant::now();
        let mut sub_rng = SeededRng::new(s.seed, task_stream(rep as u64, role_subsample(mi)));
        let sub = select(method, &view, cfg.n, cfg.q, &mut sub_rng)?;
        let subsample_s = start.elapsed().as_secs_f64();
        let sub_data = view.scaled_subset(&sub.indices);
        let (cdf_deviation, max_cdf_deviation, max_abs_correlation) = uniformity(&sub_data, cfg.cdf_grid)?;
        let mut record = MetricRecord {
            scenario: s.label(),
            method: method.to_string(),
            replication: rep,
            n: sub.len(),
            distinct_rows: sub.distinct(),
            mee: None,
            ase: None,
            cdf_deviation,
            max_cdf_deviation,
            max_abs_correlation,
            ave_pred_error: None,
            max_pred_error: None,
            bandwidths: None,
            cv_error: None,
            iterations: None,
            converged: None,
            fit_error: None,
            timing: Timing {
                subsample_s,
                ..Timing::default()
            },
        };
        if let Some(grid) = &grid {
            let mut cv_rng = SeededRng::new(s.seed, task_stream(rep as u64, role_cv(mi)));
            match fit_subsample(&sub_data, &cfg.bandwidths, &cfg.fit, &mut cv_rng) {
                Ok(o) => {
                    let (mee, ase) = metric_mee_ase(&o.fit, |pt| regression_function(pt, s.misspecify), grid);
                    record.mee = Some(mee);
                    record.ase = Some(ase);
                    record.bandwidths = Some(o.fit.bandwidths.clone());
                    record.cv_error = o.cv_error;
                    record.iterations = Some(o.fit.iterations);
                    record.converged = Some(o.fit.converged);
                    record.timing.cv_s = o.cv_s;
                    record.timing.fit_s = o.fit_s;
                }
                Err(e) => record.fit_error = Some(e.to_string()),
            }
        }
        record.timing.total_s = start.elapsed().as_secs_f64();
        out.push(record);
    }
    Ok(out)
}

/// Real-data study: a full-data fit (binned smoothers) serves as the reference
/// surface; each subsample fit is scored on a grid spanning the data's range
/// and by its prediction error on every observed response. The reference fit
/// is recorded under method `full`.
pub fn run_real_data(data: &Dataset, cfg: &RealDataConfig) -> Result<BenchmarkReport> {
    if cfg.methods.is_empty() || cfg.reps == 0 {
        return Err(Error::InvalidArgument("benchmark needs at least one method and one replication".into()));
    }
    let view = scale_to_unit(data);
    let full = view.to_dataset();
    let grid = TensorGrid::unit(&view, cfg.grid_per_axis);
    let surrogate_cfg = FitConfig {
        backend: Backend::Binned {
            bins: cfg.surrogate_bins,
        },
        ..cfg.fit.clone()
    };
    let start = Instant::now();
    let mut rng = SeededRng::new(cfg.seed, task_stream(0, ROLE_SURROGATE_CV));
    let choice = match &cfg.surrogate_bandwidths {
        Some(h) => BandwidthChoice::Fixed(h.clone()),
        None => cfg.bandwidths.clone(),
    };
    let surrogate = fit_subsample(&full, &choice, &surrogate_cfg, &mut rng)?;
    log::info!(
        "full-data reference fit: bandwidths {:?}, {} sweeps, converged {}",
        surrogate.fit.bandwidths,
        surrogate.fit.iterations,
        surrogate.fit.converged
    );
    let (full_ave, full_max) = prediction_errors(&surrogate.fit, &full);
    let (cdf_deviation, max_cdf_deviation, max_abs_correlation) = uniformity(&full, cfg.cdf_grid)?;
    let mut records = vec![MetricRecord {
        scenario: "real-data".into(),
        method: "full".into(),
        replication: 0,
        n: full.n_rows(),
        distinct_rows: full.n_rows(),
        mee: Some(0.0),
        ase: Some(0.0),
        cdf_deviation,
        max_cdf_deviation,
        max_abs_correlation,
        ave_pred_error: Some(full_ave),
        max_pred_error: Some(full_max),
        bandwidths: Some(surrogate.fit.bandwidths.clone()),
        cv_error: surrogate.cv_error,
        iterations: Some(surrogate.fit.iterations),
        converged: Some(surrogate.fit.converged),
        fit_error: None,
        timing: Timing {
            subsample_s: 0.0,
            cv_s: surrogate.cv_s,
            fit_s: surrogate.fit_s,
            total_s: start.elapsed().as_secs_f64(),
        },
    }];
    let per_rep: Vec<Vec<MetricRecord>> = (0..cfg.reps)
        .into_par_iter()
        .map(|rep| -> Result<Vec<MetricRecord>> {
            let mut out = Vec::new();
            for (mi, &method) in cfg.methods.iter().enumerate() {
                let start = Instant::now();
                let mut sub_rng = SeededRng::new(cfg.seed, task_stream(rep as u64, role_subsample(mi)));
                let sub = select(method, &view, cfg.n, cfg.q, &mut sub_rng)?;
                let subsample_s = start.elapsed().as_secs_f64();
                let sub_data = view.scaled_subset(&sub.indices);
                let (cdf_deviation, max_cdf_deviation, max_abs_correlation) =
                    uniformity(&sub_data, cfg.cdf_grid)?;
                let mut record = MetricRecord {
                    scenario: "real-data".into(),
                    method: method.to_string(),
                    replication: rep,
                    n: sub.len(),
                    distinct_rows: sub.distinct(),
                    mee: None,
                    ase: None,
                    cdf_deviation,
                    max_cdf_deviation,
                    max_abs_correlation,
                    ave_pred_error: None,
                    max_pred_error: None,
                    bandwidths: None,
                    cv_error: None,
                    iterations: None,
                    converged: None,
                    fit_error: None,
                    timing: Timing {
                        subsample_s,
                        ..Timing::default()
                    },
                };
                let mut cv_rng = SeededRng::new(cfg.seed, task_stream(rep as u64, role_cv(mi)));
                match fit_subsample(&sub_data, &cfg.bandwidths, &cfg.fit, &mut cv_rng) {
                    Ok(o) => {
                        let (mee, ase) = metric_mee_ase_fits(&o.fit, &surrogate.fit, &grid);
                        let (ave, max) = prediction_errors(&o.fit, &full);
                        record.mee = Some(mee);
                        record.ase = Some(ase);
                        record.ave_pred_error = Some(ave);
                        record.max_pred_error = Some(max);
                        record.bandwidths = Some(o.fit.bandwidths.clone());
                        record.cv_error = o.cv_error;
                        record.iterations = Some(o.fit.iterations);
                        record.converged = Some(o.fit.converged);
                        record.timing.cv_s = o.cv_s;
                        record.timing.fit_s = o.fit_s;
                    }
                    Err(e) => record.fit_error = Some(e.to_string()),
                }
                record.timing.total_s = start.elapsed().as_secs_f64();
                out.push(record);
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    records.extend(per_rep.into_iter().flatten());
    Ok(BenchmarkReport { records })
}
