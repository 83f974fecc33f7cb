use rand::Rng;

use super::{AuditTrail, Method, Subsample};
use crate::criterion::{coincidences, MembershipMatrix};
use crate::data::ScaledView;
use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Running similarity l(x | selected) = Σ δ(x, s)² for every row.
#[derive(Debug, Clone)]
pub struct ScoreVector {
    pub l: Vec<u64>,
    pub selected: Vec<bool>,
}

impl ScoreVector {
    pub fn new(n_rows: usize) -> Self {
        Self {
            l: vec![0; n_rows],
            selected: vec![false; n_rows],
        }
    }

    /// Marks `pick` selected and adds δ(x, pick)² to every unselected row.
    pub fn add_point(&mut self, cells: &MembershipMatrix, pick: usize) {
        self.selected[pick] = true;
        let p = cells.n_cols();
        let new_row = cells.row(pick);
        for ((score, &taken), row) in self
            .l
            .iter_mut()
            .zip(&self.selected)
            .zip(cells.cells().chunks_exact(p))
        {
            if !taken {
                let d = coincidences(row, new_row);
                *score += d * d;
            }
        }
    }

    /// Unselected rows achieving the minimum score, in row order.
    pub fn argmin_set(&self) -> (u64, Vec<usize>) {
        let min = self
            .l
            .iter()
            .zip(&self.selected)
            .filter(|(_, &taken)| !taken)
            .map(|(&s, _)| s)
            .min()
            .unwrap_or(0);
        let set = self
            .l
            .iter()
            .zip(&self.selected)
            .enumerate()
            .filter(|(_, (&s, &taken))| !taken && s == min)
            .map(|(i, _)| i)
            .collect();
        (min, set)
    }
}

/// Sequential IES on scaled data at resolution `q`.
///
/// The first row is uniform over all rows; each later row is drawn uniformly
/// from the unselected rows of least l-score. Scores are updated in O(Np) per pick.
pub fn ies_select(
    view: &ScaledView<'_>,
    n: usize,
    q: u32,
    rng: &mut SeededRng,
    audit: bool,
) -> Result<Subsample> {
    let cells = MembershipMatrix::from_view(view, q)?;
    ies_select_cells(&cells, n, rng, audit)
}

/// Sequential IES on a precomputed membership matrix.
pub fn ies_select_cells(
    cells: &MembershipMatrix,
    n: usize,
    rng: &mut SeededRng,
    audit: bool,
) -> Result<Subsample> {
    let total = cells.n_rows();
    if n > total {
        return Err(Error::SubsampleTooLarge {
            n,
            available: total,
        });
    }
    let mut indices = Vec::with_capacity(n);
    let mut trail = audit.then(|| AuditTrail {
        min_scores: Vec::with_capacity(n.saturating_sub(1)),
    });
    if n > 0 {
        let mut scores = ScoreVector::new(total);
        let first = rng.random_range(0..total);
        indices.push(first);
        scores.add_point(cells, first);
        let mut candidates = Vec::new();
        while indices.len() < n {
            let min = collect_argmin(&scores, &mut candidates);
            let pick = candidates[rng.random_range(0..candidates.len())];
            if let Some(t) = trail.as_mut() {
                t.min_scores.push(min);
            }
            indices.push(pick);
            scores.add_point(cells, pick);
        }
    }
    Ok(Subsample {
        indices,
        q_used: Some(cells.q()),
        method: Method::Ies,
        seed: rng.seed(),
        audit: trail,
    })
}

/// Single-pass argmin collection reusing the buffer.
fn collect_argmin(scores: &ScoreVector, out: &mut Vec<usize>) -> u64 {
    out.clear();
    let mut min = u64::MAX;
    for (i, (&s, &taken)) in scores.l.iter().zip(&scores.selected).enumerate() {
        if taken || s > min {
            continue;
        }
        if s < min {
            min = s;
            out.clear();
        }
        out.push(i);
    }
    min
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum AuditOutcome {
    Pass,
    /// Step (position in the subsample) whose pick was not a least-score row.
    FailAt(usize),
}

/// Replays a greedy subsample, recomputing every score from scratch.
pub fn audit_scores(s: &Subsample, cells: &MembershipMatrix) -> Result<AuditOutcome> {
    let trail = s
        .audit
        .as_ref()
        .ok_or_else(|| Error::AuditUnavailable(s.method.to_string()))?;
    let total = cells.n_rows();
    let mut taken = vec![false; total];
    if let Some(&first) = s.indices.first() {
        taken[first] = true;
    }
    for step in 1..s.indices.len() {
        let prefix = &s.indices[..step];
        let score = |x: usize| -> u64 {
            prefix
                .iter()
                .map(|&i| {
                    let d = coincidences(cells.row(i), cells.row(x));
                    d * d
                })
                .sum()
        };
        let min = (0..total).filter(|&x| !taken[x]).map(score).min();
        let pick = s.indices[step];
        if taken[pick] || Some(score(pick)) != min || trail.min_scores.get(step - 1).copied() != min
        {
            return Ok(AuditOutcome::FailAt(step));
        }
        taken[pick] = true;
    }
    Ok(AuditOutcome::Pass)
}
