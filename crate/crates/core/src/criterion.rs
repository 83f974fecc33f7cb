//! Membership matrices and the pairwise-coincidence discrepancy `L`.
//!
//! `L` sums the squared number of shared cells over all row pairs. It is
//! bounded below by a quantity that is attained exactly when every column and
//! every column pair spreads its rows over the cells as evenly as possible.

use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use crate::data::ScaledView;
use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

/// Cell index of every coordinate of a scaled point at resolution `q`.
///
/// x = 1.0 lands in the top cell `q − 1`.
pub fn membership(x: &[f64], q: u32) -> Result<Vec<u32>> {
    x.iter()
        .enumerate()
        .map(|(index, &value)| cell_of(value, q).ok_or(Error::OutOfUnitInterval { index, value }))
        .collect()
}

#[inline]
fn cell_of(value: f64, q: u32) -> Option<u32> {
    if !(0.0..=1.0).contains(&value) {
        return None;
    }
    Some(((value * q as f64).floor() as u32).min(q - 1))
}

/// n×p cell indices in `0..q`, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MembershipMatrix {
    cells: Vec<u32>,
    n_rows: usize,
    n_cols: usize,
    q: u32,
}

impl MembershipMatrix {
    /// From row-major scaled values in [0, 1].
    pub fn from_scaled(values: &[f64], n_cols: usize, q: u32) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidArgument(format!("resolution q must be at least 2, got {q}")));
        }
        if n_cols == 0 || values.len() % n_cols != 0 {
            return Err(Error::InvalidArgument("ragged value matrix".into()));
        }
        let cells = membership(values, q)?;
        Ok(Self {
            n_rows: values.len() / n_cols,
            cells,
            n_cols,
            q,
        })
    }

    pub fn from_view(view: &ScaledView<'_>, q: u32) -> Result<Self> {
        Self::from_scaled(view.values(), view.n_cols(), q)
    }

    /// Wraps precomputed levels (for example an orthogonal array).
    pub fn from_levels(cells: Vec<u32>, n_cols: usize, q: u32) -> Result<Self> {
        if n_cols == 0 || cells.len() % n_cols != 0 {
            return Err(Error::InvalidArgument("ragged level matrix".into()));
        }
        if cells.iter().any(|&c| c >= q) {
            return Err(Error::InvalidArgument(format!("level outside 0..{q}")));
        }
        Ok(Self {
            n_rows: cells.len() / n_cols,
            cells,
            n_cols,
            q,
        })
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn q(&self) -> u32 {
        self.q
    }

    pub fn cells(&self) -> &[u32] {
        &self.cells
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[u32] {
        &self.cells[i * self.n_cols..(i + 1) * self.n_cols]
    }

    pub fn select_rows(&self, indices: &[usize]) -> MembershipMatrix {
        let mut cells = Vec::with_capacity(indices.len() * self.n_cols);
        for &i in indices {
            cells.extend_from_slice(self.row(i));
        }
        MembershipMatrix {
            cells,
            n_rows: indices.len(),
            n_cols: self.n_cols,
            q: self.q,
        }
    }
}

/// Number of coordinates on which two cell vectors coincide.
pub fn delta(z: &[u32], w: &[u32]) -> Result<usize> {
    if z.len() != w.len() {
        return Err(Error::LengthMismatch {
            left: z.len(),
            right: w.len(),
        });
    }
    Ok(coincidences(z, w) as usize)
}

#[inline]
pub(crate) fn coincidences(z: &[u32], w: &[u32]) -> u64 {
    z.iter().zip(w).map(|(a, b)| (a == b) as u64).sum()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CriterionValue {
    pub l: u64,
    pub n: usize,
    pub p: usize,
    pub q: u32,
    /// Bound that holds for every n; equality iff weak strength 1⁻ and 2⁻.
    pub lower_bound_weak: Rational,
    /// Exact-OA bound, present when q² divides n.
    pub lower_bound_exact: Option<Rational>,
    /// `l − lower_bound_weak`.
    pub gap: Rational,
}

impl CriterionValue {
    pub fn attains_bound(&self) -> bool {
        self.gap == Rational::from_integer(0)
    }
}

/// Sum of squared coincidences over all unordered row pairs, with both bounds.
pub fn criterion_l(m: &MembershipMatrix) -> CriterionValue {
    let n = m.n_rows();
    let l: u64 = (0..n)
        .into_par_iter()
        .map(|i| {
            let zi = m.row(i);
            (i + 1..n)
                .map(|k| {
                    let d = coincidences(zi, m.row(k));
                    d * d
                })
                .sum::<u64>()
        })
        .sum();
    let (p, q) = (m.n_cols(), m.q());
    let weak = lower_bound_weak(n, p, q);
    CriterionValue {
        l,
        n,
        p,
        q,
        lower_bound_weak: weak,
        lower_bound_exact: lower_bound_exact(n, p, q).ok(),
        gap: Rational::from_integer(l as i64) - weak,
    }
}

/// n/(2q²)·[n·p·(p+q−1) − (pq)²], valid when q² divides n.
pub fn lower_bound_exact(n: usize, p: usize, q: u32) -> Result<Rational> {
    let q2 = (q as usize) * (q as usize);
    if q2 == 0 || n % q2 != 0 {
        return Err(Error::NotMultipleOfQSquared { n, q2 });
    }
    let (n, p, q) = (n as i64, p as i64, q as i64);
    let bracket = n * p * (p + q - 1) - (p * q) * (p * q);
    Ok(Rational::new(n * bracket, 2 * q * q))
}

/// ⌊a/b⌋²·b + (2⌊a/b⌋+1)·(a − ⌊a/b⌋·b): the least possible sum of squared
/// counts when `a` items are spread over `b` bins.
pub fn h_func(a: u64, b: u64) -> u64 {
    assert!(b >= 1, "h_func needs b >= 1");
    let f = a / b;
    f * f * b + (2 * f + 1) * (a - f * b)
}

/// [p(p−1)·h(n,q²) + p·h(n,q) − n·p²]/2.
pub fn lower_bound_weak(n: usize, p: usize, q: u32) -> Rational {
    let q = q as u64;
    let (n64, p64) = (n as u64, p as u64);
    let numer = (p64 * p64.saturating_sub(1)) as i64 * h_func(n64, q * q) as i64
        + p64 as i64 * h_func(n64, q) as i64
        - (n64 * p64 * p64) as i64;
    Rational::new(numer, 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eq7() -> MembershipMatrix {
        MembershipMatrix::from_levels(vec![0, 0, 0, 0, 1, 1, 1, 0, 1, 1, 1, 0], 3, 2).unwrap()
    }

    fn int(v: i64) -> Rational {
        Rational::from_integer(v)
    }

    #[test]
    fn membership_examples() {
        assert_eq!(membership(&[0.37, 0.99], 16).unwrap(), vec![5, 15]);
        assert_eq!(membership(&[1.0], 16).unwrap(), vec![15]);
        assert_eq!(membership(&[0.0, 0.5], 2).unwrap(), vec![0, 1]);
        assert!(matches!(
            membership(&[0.2, 1.5], 4),
            Err(Error::OutOfUnitInterval { index: 1, .. })
        ));
        assert!(membership(&[-0.01], 4).is_err());
        assert!(membership(&[f64::NAN], 4).is_err());
    }

    #[test]
    fn delta_examples() {
        assert_eq!(delta(&[3, 1, 4], &[3, 1, 4]).unwrap(), 3);
        assert_eq!(delta(&[0, 0, 0], &[0, 1, 1]).unwrap(), 1);
        assert_eq!(delta(&[0, 1], &[1, 0]).unwrap(), 0);
        assert!(delta(&[0, 1], &[1]).is_err());
    }

    #[test]
    fn criterion_examples() {
        let v = criterion_l(&eq7());
        assert_eq!(v.l, 6);
        assert_eq!(v.lower_bound_exact, Some(int(6)));
        assert!(v.attains_bound());

        let single = MembershipMatrix::from_levels(vec![1, 0, 1], 3, 2).unwrap();
        assert_eq!(criterion_l(&single).l, 0);

        let twins = MembershipMatrix::from_levels(vec![2, 0, 1, 1, 2, 0, 1, 1], 4, 3).unwrap();
        assert_eq!(criterion_l(&twins).l, 16);
    }

    #[test]
    fn exact_bound_examples() {
        assert_eq!(lower_bound_exact(4, 3, 2).unwrap(), int(6));
        assert_eq!(lower_bound_exact(8, 3, 2).unwrap(), int(60));
        assert!(lower_bound_exact(5, 3, 2).is_err());
        // λ=2 stacking of the 4-run array
        let stacked =
            MembershipMatrix::from_levels(eq7().cells().repeat(2), 3, 2).unwrap();
        assert_eq!(criterion_l(&stacked).l, 60);
    }

    #[test]
    fn h_examples() {
        assert_eq!(h_func(4, 4), 4);
        assert_eq!(h_func(5, 4), 7);
        assert_eq!(h_func(0, 7), 0);
        assert_eq!(h_func(5, 2), 13);
        assert_eq!(h_func(1, 9), 1);
    }

    #[test]
    fn weak_bound_examples() {
        assert_eq!(lower_bound_weak(4, 3, 2), int(6));
        assert_eq!(lower_bound_weak(5, 2, 2), int(10));
        for p in 1..6 {
            for q in 2..6 {
                assert_eq!(lower_bound_weak(1, p, q), int(0));
            }
        }
    }

    #[test]
    fn bounds_agree_when_q2_divides_n() {
        for q in 2..6u32 {
            for lambda in 1..5usize {
                for p in 1..=(q as usize + 1) {
                    let n = lambda * (q * q) as usize;
                    assert_eq!(lower_bound_weak(n, p, q), lower_bound_exact(n, p, q).unwrap());
                }
            }
        }
    }

    #[test]
    fn from_scaled_rejects_low_q() {
        assert!(MembershipMatrix::from_scaled(&[0.5], 1, 1).is_err());
    }
}
