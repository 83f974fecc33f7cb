//! K-fold cross-validated bandwidth selection.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use crate::backfit::{backfit, FitConfig};
use crate::data::Dataset;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Fewest rows allowed per fold.
pub const MIN_FOLD_SIZE: usize = 10;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum SearchMode {
    /// Every combination of per-predictor candidates.
    FullGrid,
    /// Optimise one bandwidth at a time, others fixed, for `cycles` passes.
    CoordinateDescent { cycles: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvSpec {
    pub folds: usize,
    /// Candidate bandwidths per predictor, on the scaled [0, 1] axis.
    pub grid: Vec<Vec<f64>>,
    pub mode: SearchMode,
}

impl CvSpec {
    /// 5 folds, {0.05, 0.10, …, 0.95} per predictor, coordinate descent over 2 cycles.
    pub fn default_for(p: usize) -> Self {
        Self {
            folds: 5,
            grid: vec![default_grid(); p],
            mode: SearchMode::CoordinateDescent { cycles: 2 },
        }
    }

    pub fn validate(&self, p: usize) -> Result<()> {
        if self.folds < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 folds, got {}", self.folds)));
        }
        if self.grid.len() != p {
            return Err(Error::LengthMismatch {
                left: self.grid.len(),
                right: p,
            });
        }
        for g in &self.grid {
            if g.is_empty() {
                return Err(Error::InvalidArgument("empty bandwidth candidate list".into()));
            }
            if let Some(bad) = g.iter().find(|&&h| !(h > 0.0 && h <= 1.0)) {
                return Err(Error::InvalidArgument(format!("bandwidth candidate {bad} outside (0, 1]")));
            }
        }
        if let SearchMode::CoordinateDescent { cycles: 0 } = self.mode {
            return Err(Error::InvalidArgument("coordinate descent needs at least one cycle".into()));
        }
        Ok(())
    }
}

/// {0.05, 0.10, …, 0.95}.
pub fn default_grid() -> Vec<f64> {
    (1..=19).map(|k| k as f64 * 0.05).collect()
}

/// Parses `start:stop:step` (inclusive of `stop` up to rounding).
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').map(str::trim).collect();
    let bad = || Error::InvalidArgument(format!("bandwidth grid `{spec}` must look like start:stop:step"));
    if parts.len() != 3 {
        return Err(bad());
    }
    let nums: Vec<f64> = parts
        .iter()
        .map(|s| s.parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let (start, stop, step) = (nums[0], nums[1], nums[2]);
    if !(step > 0.0) || stop < start {
        return Err(bad());
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| start + k as f64 * step).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CvEntry {
    pub bandwidths: Vec<f64>,
    /// Mean squared held-out error; infinite when some fold could not be fitted.
    pub error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct CvResult {
    pub bandwidths: Vec<f64>,
    pub error: f64,
    /// Every evaluated candidate, in evaluation order.
    pub table: Vec<CvEntry>,
}

/// Partition of 0..n into `k` shuffled folds whose sizes differ by at most one.
pub fn assign_folds(n: usize, k: usize, rng: &mut SeededRng) -> Vec<Vec<usize>> {
    let mut idx: Vec<usize> = (0..n).collect();
    idx.shuffle(rng);
    let mut folds = vec![Vec::with_capacity(n / k + 1); k];
    for (pos, i) in idx.into_iter().enumerate() {
        folds[pos % k].push(i);
    }
    folds
}

struct Fold {
    train: Dataset,
    test: Dataset,
}

fn cv_error(folds: &[Fold], h: &[f64], cfg: &FitConfig) -> f64 {
    let mut sse = 0.0;
    let mut count = 0usize;
    for fold in folds {
        let fit = match backfit(&fold.train, h, cfg) {
            Ok(f) => f,
            Err(Error::SingularSmoother { .. }) => return f64::INFINITY,
            Err(e) => {
                log::warn!("cv fit failed for {h:?}: {e}");
                return f64::INFINITY;
            }
        };
        for i in 0..fold.test.n_rows() {
            let r = fold.test.response()[i] - fit.predict(fold.test.row(i));
            sse += r * r;
        }
        count += fold.test.n_rows();
    }
    if sse.is_finite() {
        sse / count as f64
    } else {
        f64::INFINITY
    }
}

fn key(h: &[f64]) -> Vec<u64> {
    h.iter().map(|v| v.to_bits()).collect()
}

fn lex_less(a: &[f64], b: &[f64]) -> bool {
    for (x, y) in a.iter().zip(b) {
        match x.total_cmp(y) {
            std::cmp::Ordering::Less => return true,
            std::cmp::Ordering::Greater => return false,
            std::cmp::Ordering::Equal => {}
        }
    }
    false
}

/// Lowest error, ties to the lexicographically smallest bandwidth vector.
fn best(entries: &[CvEntry]) -> Option<&CvEntry> {
    entries.iter().filter(|e| e.error.is_finite()).fold(None, |acc, e| match acc {
        None => Some(e),
        Some(b) if e.error < b.error || (e.error == b.error && lex_less(&e.bandwidths, &b.bandwidths)) => {
            Some(e)
        }
        keep => keep,
    })
}

/// Chooses per-predictor bandwidths by K-fold cross-validation.
pub fn cv_select(data: &Dataset, spec: &CvSpec, cfg: &FitConfig, rng: &mut SeededRng) -> Result<CvResult> {
    let (n, p) = (data.n_rows(), data.n_cols());
    spec.validate(p)?;
    cfg.validate(p)?;
    if n < spec.folds * MIN_FOLD_SIZE {
        return Err(Error::InvalidArgument(format!(
            "{}-fold cross-validation needs at least {} rows, got {n}",
            spec.folds,
            spec.folds * MIN_FOLD_SIZE
        )));
    }
    let folds: Vec<Fold> = assign_folds(n, spec.folds, rng)
        .into_iter()
        .map(|test_idx| {
            let mut in_test = vec![false; n];
            test_idx.iter().for_each(|&i| in_test[i] = true);
            let train_idx: Vec<usize> = (0..n).filter(|&i| !in_test[i]).collect();
            Fold {
                train: data.select_rows(&train_idx),
                test: data.select_rows(&test_idx),
            }
        })
        .collect();
    let evaluate = |cands: Vec<Vec<f64>>| -> Vec<CvEntry> {
        cands
            .into_par_iter()
            .map(|h| CvEntry {
                error: cv_error(&folds, &h, cfg),
                bandwidths: h,
            })
            .collect()
    };

    let table = match spec.mode {
        SearchMode::FullGrid => {
            let mut cands: Vec<Vec<f64>> = vec![Vec::new()];
            for g in &spec.grid {
                cands = cands
                    .into_iter()
                    .flat_map(|prefix| {
                        g.iter().map(move |&h| {
                            let mut v = prefix.clone();
                            v.push(h);
                            v
                        })
                    })
                    .collect();
            }
            evaluate(cands)
        }
        SearchMode::CoordinateDescent { cycles } => {
            let mut current: Vec<f64> = spec.grid.iter().map(|g| g[g.len() / 2]).collect();
            let mut table: Vec<CvEntry> = Vec::new();
            let mut seen: HashMap<Vec<u64>, usize> = HashMap::new();
            for _ in 0..cycles {
                for j in 0..p {
                    let line: Vec<Vec<f64>> = spec.grid[j]
                        .iter()
                        .map(|&h| {
                            let mut v = current.clone();
                            v[j] = h;
                            v
                        })
                        .collect();
                    let fresh: Vec<Vec<f64>> =
                        line.iter().filter(|h| !seen.contains_key(&key(h))).cloned().collect();
                    for e in evaluate(fresh) {
                        seen.insert(key(&e.bandwidths), table.len());
                        table.push(e);
                    }
                    let on_line: Vec<CvEntry> =
                        line.iter().map(|h| table[seen[&key(h)]].clone()).collect();
                    if let Some(b) = best(&on_line) {
                        current = b.bandwidths.clone();
                    }
                }
            }
            table
        }
    };
    let chosen = best(&table).ok_or(Error::NoValidCandidate)?.clone();
    Ok(CvResult {
        bandwidths: chosen.bandwidths,
        error: chosen.error,
        table,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn data(n: usize, p: usize, seed: u64, f: impl Fn(&[f64]) -> f64) -> Dataset {
        let mut rng = SeededRng::new(seed, 0);
        let rows: Vec<Vec<f64>> = (0..n).map(|_| (0..p).map(|_| rng.random()).collect()).collect();
        let y = rows.iter().map(|r| f(r)).collect();
        Dataset::from_rows(&rows, y).unwrap()
    }

    #[test]
    fn folds_partition_evenly() {
        let folds = assign_folds(103, 5, &mut SeededRng::new(1, 0));
        let sizes: Vec<usize> = folds.iter().map(Vec::len).collect();
        assert!(sizes.iter().max().unwrap() - sizes.iter().min().unwrap() <= 1);
        let mut all: Vec<usize> = folds.concat();
        all.sort_unstable();
        assert_eq!(all, (0..103).collect::<Vec<_>>());
    }

    #[test]
    fn grid_parsing() {
        assert_eq!(parse_grid("0.05:0.95:0.05").unwrap().len(), 19);
        assert_eq!(parse_grid("0.2:0.2:0.1").unwrap(), vec![0.2]);
        assert!(parse_grid("0.2:0.1:0.1").is_err());
        assert!(parse_grid("a:b").is_err());
    }

    #[test]
    fn single_candidate_is_returned() {
        let d = data(100, 2, 2, |x| x[0] + x[1]);
        let spec = CvSpec {
            folds: 5,
            grid: vec![vec![0.4], vec![0.5]],
            mode: SearchMode::FullGrid,
        };
        let r = cv_select(&d, &spec, &FitConfig::default(), &mut SeededRng::new(3, 0)).unwrap();
        assert_eq!(r.bandwidths, vec![0.4, 0.5]);
        assert_eq!(r.table.len(), 1);
    }

    #[test]
    fn linear_truth_prefers_large_bandwidth() {
        let spec = CvSpec {
            folds: 5,
            grid: vec![vec![0.1, 0.3, 0.6, 0.9]],
            mode: SearchMode::FullGrid,
        };
        // noiseless: every candidate reproduces the line, errors differ only by rounding
        let d = data(120, 1, 4, |x| 3.0 * x[0] - 1.0);
        let r = cv_select(&d, &spec, &FitConfig::default(), &mut SeededRng::new(5, 0)).unwrap();
        let e0 = r.table[0].error;
        assert!(r.table.iter().all(|e| (e.error - e0).abs() <= 1e-9 * e0.max(1e-12)));

        let mut noise = SeededRng::new(6, 1);
        let gauss = rand_distr::Normal::new(0.0, 0.3).unwrap();
        let noisy = data(400, 1, 6, |x| 3.0 * x[0] - 1.0);
        let noisy = noisy
            .with_response(noisy.response().iter().map(|y| y + noise.sample(gauss)).collect())
            .unwrap();
        let r = cv_select(&noisy, &spec, &FitConfig::default(), &mut SeededRng::new(5, 0)).unwrap();
        assert!(r.bandwidths[0] >= 0.6, "{:?}", r.table);
        assert!(r.table[0].error > r.table[3].error);
    }

    #[test]
    fn singular_candidates_are_infinite_and_all_bad_errors() {
        let d = data(60, 1, 6, |x| x[0]);
        let spec = CvSpec {
            folds: 3,
            grid: vec![vec![1e-4, 0.5]],
            mode: SearchMode::FullGrid,
        };
        let r = cv_select(&d, &spec, &FitConfig::default(), &mut SeededRng::new(7, 0)).unwrap();
        assert!(r.table[0].error.is_infinite());
        assert_eq!(r.bandwidths, vec![0.5]);
        let only_bad = CvSpec {
            grid: vec![vec![1e-4]],
            ..spec
        };
        assert!(matches!(
            cv_select(&d, &only_bad, &FitConfig::default(), &mut SeededRng::new(7, 0)),
            Err(Error::NoValidCandidate)
        ));
    }

    #[test]
    fn deterministic_and_needs_enough_rows() {
        let d = data(80, 2, 8, |x| (3.0 * x[0]).sin() + x[1] * x[1]);
        let spec = CvSpec {
            folds: 4,
            grid: vec![vec![0.2, 0.4, 0.8]; 2],
            mode: SearchMode::CoordinateDescent { cycles: 2 },
        };
        let a = cv_select(&d, &spec, &FitConfig::default(), &mut SeededRng::new(9, 0)).unwrap();
        let b = cv_select(&d, &spec, &FitConfig::default(), &mut SeededRng::new(9, 0)).unwrap();
        assert_eq!(a.table, b.table);
        assert!(a.table.len() <= 9);
        let small = data(30, 2, 8, |x| x[0]);
        assert!(cv_select(&small, &spec, &FitConfig::default(), &mut SeededRng::new(9, 0)).is_err());
    }
}
