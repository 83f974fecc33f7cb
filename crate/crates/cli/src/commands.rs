use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};

use anyhow::Context;
use ies_core::backfit::{backfit, FitConfig};
use ies_core::bandwidth::{cv_select, parse_grid, CvSpec, SearchMode};
use ies_core::bench::{run_benchmark, run_real_data, BandwidthChoice, BenchConfig, RealDataConfig, SimScenario};
use ies_core::criterion::{criterion_l, CriterionValue, MembershipMatrix};
use ies_core::data::{load_csv_columns, load_design_csv, scale_to_unit, Dataset};
use ies_core::oa::{construct_oa, default_q, random_oa, verify_strength};
use ies_core::sampler::{audit_scores, ies_select, lowcon_select, random_select, AuditOutcome, Method};
use ies_core::SeededRng;
use serde_json::json;

use crate::{usage, BenchmarkArgs, CriterionArgs, Failure, FitArgs, FitFlags, OaGenArgs, SubsampleArgs};

type CmdResult = Result<(), Failure>;

fn create(path: &Path) -> anyhow::Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("cannot create {}", path.display()))?;
    Ok(BufWriter::new(f))
}

/// Writer on `path`, or stdout when absent.
fn sink(path: Option<&Path>) -> anyhow::Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(create(p)?),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

/// `<dir of input>/<stem of input>.<suffix>`.
fn beside(input: &Path, suffix: &str) -> PathBuf {
    let stem = input.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_else(|| "out".into());
    input.with_file_name(format!("{stem}.{suffix}"))
}

fn write_json(value: &serde_json::Value, path: Option<&Path>) -> anyhow::Result<()> {
    let mut w = sink(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn pick_q(q: Option<u32>, n: usize) -> Result<u32, Failure> {
    match q {
        Some(q) => Ok(q),
        None => default_q(n).ok_or_else(|| usage(format!("no supported level count for n={n}; pass --q"))),
    }
}

fn criterion_json(c: &CriterionValue) -> serde_json::Value {
    json!({
        "n": c.n,
        "p": c.p,
        "q": c.q,
        "l": c.l,
        "lower_bound_weak": c.lower_bound_weak.to_string(),
        "lower_bound_exact": c.lower_bound_exact.map(|b| b.to_string()),
        "gap": c.gap.to_string(),
        "attains_bound": c.attains_bound(),
    })
}

pub(crate) fn oa_gen(a: &OaGenArgs, seed: u64) -> CmdResult {
    let oa = construct_oa(a.q, a.p, a.lambda)?;
    let report = verify_strength(&oa);
    if !report.passed() {
        return Err(Failure::Runtime(anyhow::anyhow!("constructed array failed its strength check")));
    }
    log::info!("OA({}, {}, {}, 2) verified", oa.n_rows(), oa.n_cols(), oa.q());
    let mut w = sink(a.output.as_deref())?;
    let header: Vec<String> = (1..=a.p).map(|j| format!("x{j}")).collect();
    writeln!(w, "{}", header.join(",")).context("write failed")?;
    if a.jitter {
        let sample = random_oa(&oa, &mut SeededRng::new(seed, 0));
        for i in 0..sample.n_rows {
            let row: Vec<String> = sample.row(i).iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", row.join(",")).context("write failed")?;
        }
    } else {
        for row in oa.rows() {
            let row: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(w, "{}", row.join(",")).context("write failed")?;
        }
    }
    w.flush().context("write failed")?;
    Ok(())
}

fn read_indices(path: &Path, n_rows: usize) -> Result<Vec<usize>, Failure> {
    let text = std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    let mut out = Vec::new();
    for (line_no, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let i: usize = line.parse().map_err(|_| {
            Failure::Runtime(anyhow::anyhow!("{}:{}: `{line}` is not a row index", path.display(), line_no + 1))
        })?;
        if i >= n_rows {
            return Err(Failure::Runtime(anyhow::anyhow!(
                "{}:{}: row index {i} out of range for {n_rows} rows",
                path.display(),
                line_no + 1
            )));
        }
        out.push(i);
    }
    Ok(out)
}

pub(crate) fn criterion(a: &CriterionArgs) -> CmdResult {
    let data = match &a.response {
        Some(r) => load_csv_columns(&a.input, r, None)?,
        None => load_design_csv(&a.input)?,
    };
    let rows: Vec<usize> = match &a.indices {
        Some(p) => read_indices(p, data.n_rows())?,
        None => (0..data.n_rows()).collect(),
    };
    if rows.is_empty() {
        return Err(usage("no rows to evaluate"));
    }
    let q = pick_q(a.q, rows.len())?;
    let cells = if a.levels {
        let mut levels = Vec::with_capacity(rows.len() * data.n_cols());
        for &i in &rows {
            for &v in data.row(i) {
                if v.fract() != 0.0 || v < 0.0 {
                    return Err(Failure::Runtime(anyhow::anyhow!("row {i}: `{v}` is not a non-negative integer level")));
                }
                levels.push(v as u32);
            }
        }
        MembershipMatrix::from_levels(levels, data.n_cols(), q)?
    } else if a.unit {
        MembershipMatrix::from_scaled(data.predictors(), data.n_cols(), q)?.select_rows(&rows)
    } else {
        let view = scale_to_unit(&data);
        MembershipMatrix::from_view(&view, q)?.select_rows(&rows)
    };
    write_json(&criterion_json(&criterion_l(&cells)), None)?;
    Ok(())
}

pub(crate) fn subsample(a: &SubsampleArgs, seed: u64) -> CmdResult {
    if a.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    if a.audit && a.method != Method::Ies {
        return Err(usage("--audit applies to --method ies only"));
    }
    let data = load_csv_columns(&a.input, &a.response, a.columns.as_deref())?;
    let q = pick_q(a.q, a.n)?;
    let view = scale_to_unit(&data);
    let mut rng = SeededRng::new(seed, 0);
    let sub = match a.method {
        Method::Ies => ies_select(&view, a.n, q, &mut rng, a.audit)?,
        Method::Rand => random_select(data.n_rows(), a.n, &mut rng)?,
        Method::Lowcon => lowcon_select(&view, a.n, &mut rng)?,
    };
    let cells = MembershipMatrix::from_view(&view, q)?;
    let audit = if a.audit {
        match audit_scores(&sub, &cells)? {
            AuditOutcome::Pass => Some("pass".to_string()),
            AuditOutcome::FailAt(step) => {
                return Err(Failure::Runtime(anyhow::anyhow!("score audit failed at step {step}")));
            }
        }
    } else {
        None
    };
    let crit = criterion_l(&cells.select_rows(&sub.indices));

    let rows_path = a.output.clone().unwrap_or_else(|| beside(&a.input, "subsample.csv"));
    let idx_path = a.emit_indices.clone().unwrap_or_else(|| beside(&a.input, "subsample.idx"));
    data.select_rows(&sub.indices).write_csv(&rows_path)?;
    let mut w = create(&idx_path)?;
    for i in &sub.indices {
        writeln!(w, "{i}").context("write failed")?;
    }
    w.flush().context("write failed")?;
    log::info!("wrote {} and {}", rows_path.display(), idx_path.display());

    write_json(
        &json!({
            "method": sub.method.as_str(),
            "seed": seed,
            "n": sub.len(),
            "distinct_rows": sub.distinct(),
            "q": q,
            "criterion": criterion_json(&crit),
            "audit": audit,
            "rows": rows_path,
            "indices": idx_path,
        }),
        None,
    )?;
    Ok(())
}

fn fit_config(f: &FitFlags) -> FitConfig {
    FitConfig {
        max_iter: f.max_iter,
        tol: f.tol,
        kernel: f.kernel,
        ..FitConfig::default()
    }
}

fn cv_spec(f: &FitFlags, p: usize) -> Result<CvSpec, Failure> {
    let grid = parse_grid(&f.cv_grid).map_err(|e| usage(e.to_string()))?;
    let spec = CvSpec {
        folds: f.cv_folds,
        grid: vec![grid; p],
        mode: if f.full_grid {
            SearchMode::FullGrid
        } else {
            SearchMode::CoordinateDescent { cycles: 2 }
        },
    };
    spec.validate(p).map_err(|e| usage(e.to_string()))?;
    Ok(spec)
}

fn check_bandwidths(h: &[f64], p: usize) -> Result<(), Failure> {
    if h.len() != p {
        return Err(usage(format!("--bandwidths needs {p} values, one per predictor, got {}", h.len())));
    }
    if let Some(bad) = h.iter().find(|&&v| !(v > 0.0 && v.is_finite())) {
        return Err(usage(format!("bandwidth {bad} must be positive")));
    }
    Ok(())
}

pub(crate) fn fit(a: &FitArgs, seed: u64) -> CmdResult {
    if a.fit.bandwidths.is_none() && !a.fit.cv {
        return Err(usage("pass either --bandwidths or --cv"));
    }
    let mut cfg = fit_config(&a.fit);
    cfg.diagnostics = a.diagnostics;
    let data = load_csv_columns(&a.input, &a.response, a.columns.as_deref())?;
    let p = data.n_cols();
    cfg.validate(p).map_err(|e| usage(e.to_string()))?;
    let view = scale_to_unit(&data);
    let scaled = view.to_dataset();

    let (h, cv) = match &a.fit.bandwidths {
        Some(h) => {
            check_bandwidths(h, p)?;
            (h.clone(), None)
        }
        None => {
            let spec = cv_spec(&a.fit, p)?;
            let r = cv_select(&scaled, &spec, &cfg, &mut SeededRng::new(seed, 0))?;
            log::info!("cross-validated bandwidths {:?}, error {}", r.bandwidths, r.error);
            (r.bandwidths.clone(), Some(r))
        }
    };
    let fit = backfit(&scaled, &h, &cfg)?;
    if !fit.converged {
        log::warn!("backfitting stopped after {} sweeps without converging", fit.iterations);
    }

    let comp_path = a.components.clone().unwrap_or_else(|| beside(&a.input, "components.csv"));
    let names = data.column_names();
    let mut header: Vec<String> = names.to_vec();
    header.extend(names.iter().map(|n| format!("m_{n}")));
    header.push("fitted".into());
    header.push(data.response_name().to_string());
    let fitted = fit.fitted();
    let mut rows = Vec::with_capacity(data.n_rows() * header.len());
    for (i, &fitted_i) in fitted.iter().enumerate() {
        rows.extend_from_slice(data.row(i));
        rows.extend(fit.components.iter().map(|m| m[i]));
        rows.push(fitted_i);
    }
    let last = header.pop().unwrap_or_default();
    Dataset::new(rows, data.response().to_vec(), header, last)
        .and_then(|table| table.write_csv(&comp_path))
        .map_err(|e| Failure::Runtime(e.into()))?;

    let scaling: Vec<_> = (0..p)
        .map(|j| json!({"column": names[j], "min": view.col_min()[j], "max": view.col_max()[j]}))
        .collect();
    write_json(
        &json!({
            "input": a.input,
            "response": data.response_name(),
            "predictors": names,
            "kernel": cfg.kernel.name(),
            "scaling": scaling,
            "fit": fit.summary(),
            "cv": cv.map(|r| json!({"folds": a.fit.cv_folds, "bandwidths": r.bandwidths, "error": r.error, "evaluated": r.table.len()})),
            "components": comp_path,
        }),
        a.summary.as_deref(),
    )?;
    Ok(())
}

pub(crate) fn benchmark(a: &BenchmarkArgs, seed: u64) -> CmdResult {
    if a.reps == 0 || a.methods.is_empty() {
        return Err(usage("need at least one method and --reps ≥ 1"));
    }
    if a.n == 0 {
        return Err(usage("--n must be at least 1"));
    }
    let fit = fit_config(&a.fit);
    let q = pick_q(a.q, a.n)?;

    let report = if let Some(path) = &a.real_data {
        let response = a.response.as_deref().ok_or_else(|| usage("--real-data needs --response"))?;
        let mut data = load_csv_columns(path, response, a.columns.as_deref())?;
        if let Some(cols) = &a.log_columns {
            data = data.log_transformed(cols)?;
        }
        let p = data.n_cols();
        if a.n > data.n_rows() {
            return Err(usage(format!("--n {} exceeds the {} rows of {}", a.n, data.n_rows(), path.display())));
        }
        let mut cfg = RealDataConfig::new(p, a.n, q);
        cfg.methods = a.methods.clone();
        cfg.reps = a.reps;
        cfg.seed = seed;
        cfg.grid_per_axis = a.grid_per_axis;
        cfg.cdf_grid = a.cdf_grid;
        cfg.fit = fit;
        cfg.bandwidths = bandwidth_choice(&a.fit, p)?;
        run_real_data(&data, &cfg)?
    } else {
        if a.n > a.n_total {
            return Err(usage(format!("--n {} exceeds --N {}", a.n, a.n_total)));
        }
        let mut scenario = SimScenario::new(a.case, a.n_total);
        scenario.p = a.p;
        scenario.rho = a.rho;
        scenario.noise_var = a.noise_var;
        scenario.misspecify = a.misspecify;
        scenario.seed = seed;
        scenario.validate().map_err(|e| usage(e.to_string()))?;
        let mut cfg = BenchConfig::new(scenario, a.n, q);
        cfg.methods = a.methods.clone();
        cfg.reps = a.reps;
        cfg.grid_per_axis = a.grid_per_axis;
        cfg.cdf_grid = a.cdf_grid;
        cfg.fit = fit;
        cfg.bandwidths = bandwidth_choice(&a.fit, a.p)?;
        run_benchmark(&cfg)?
    };
    report.write_all(&a.out)?;
    log::info!("wrote {} records to {}", report.records.len(), a.out.display());

    let mut out = BufWriter::new(io::stdout().lock());
    writeln!(out, "{:<22} {:<7} {:<20} {:>6} {:>12} {:>12} {:>12}", "scenario", "method", "metric", "count", "median", "q1", "q3")
        .context("write failed")?;
    for r in report.summary() {
        writeln!(
            out,
            "{:<22} {:<7} {:<20} {:>6} {:>12.6} {:>12.6} {:>12.6}",
            r.scenario, r.method, r.metric, r.count, r.median, r.q1, r.q3
        )
        .context("write failed")?;
    }
    out.flush().context("write failed")?;
    Ok(())
}

fn bandwidth_choice(f: &FitFlags, p: usize) -> Result<BandwidthChoice, Failure> {
    match &f.bandwidths {
        Some(h) => {
            check_bandwidths(h, p)?;
            Ok(BandwidthChoice::Fixed(h.clone()))
        }
        None => Ok(BandwidthChoice::Cv(cv_spec(f, p)?)),
    }
}
