//! Subsample selection: sequential IES plus random and space-filling baselines.

mod ies;
mod lowcon;

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::SeededRng;

pub use ies::{audit_scores, ies_select, ies_select_cells, AuditOutcome, ScoreVector};
pub use lowcon::{lowcon_select, maximin_lhs, min_pairwise_distance, LHS_CANDIDATES};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Ies,
    Rand,
    /// Simplified LowCon: maximin Latin hypercube matched to nearest rows.
    Lowcon,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Ies => "ies",
            Method::Rand => "rand",
            Method::Lowcon => "lowcon",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ies" => Ok(Method::Ies),
            "rand" | "random" => Ok(Method::Rand),
            "lowcon" => Ok(Method::Lowcon),
            other => Err(Error::InvalidArgument(format!(
                "unknown method `{other}` (expected ies, rand or lowcon)"
            ))),
        }
    }
}

/// Minimum score seen at each greedy step after the first pick.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AuditTrail {
    pub min_scores: Vec<u64>,
}

/// Selected row indices, in selection order.
#[derive(Debug, Clone)]
pub struct Subsample {
    pub indices: Vec<usize>,
    pub q_used: Option<u32>,
    pub method: Method,
    pub seed: u64,
    pub audit: Option<AuditTrail>,
}

impl Subsample {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Number of distinct rows (LowCon may repeat rows).
    pub fn distinct(&self) -> usize {
        let mut v = self.indices.clone();
        v.sort_unstable();
        v.dedup();
        v.len()
    }
}

/// Simple random sample without replacement.
pub fn random_select(n_total: usize, n: usize, rng: &mut SeededRng) -> Result<Subsample> {
    if n > n_total {
        return Err(Error::SubsampleTooLarge {
            n,
            available: n_total,
        });
    }
    let indices = index::sample(rng, n_total, n).into_vec();
    Ok(Subsample {
        indices,
        q_used: None,
        method: Method::Rand,
        seed: rng.seed(),
        audit: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn random_select_basics() {
        let mut rng = SeededRng::new(1, 0);
        let mut all = random_select(10, 10, &mut rng).unwrap().indices;
        all.sort_unstable();
        assert_eq!(all, (0..10).collect::<Vec<_>>());

        let a = random_select(1000, 50, &mut SeededRng::new(9, 3)).unwrap();
        let b = random_select(1000, 50, &mut SeededRng::new(9, 3)).unwrap();
        assert_eq!(a.indices, b.indices);
        assert_eq!(a.distinct(), 50);
        assert!(random_select(5, 6, &mut rng).is_err());
    }

    #[test]
    fn inclusion_frequency_matches_sampling_fraction() {
        // n/N = 0.1 over 10^4 replications; each row's inclusion ~ Binomial(1e4, 0.1)
        let (n_total, n, reps) = (50, 5, 10_000);
        let mut hits = vec![0usize; n_total];
        for r in 0..reps {
            let mut rng = SeededRng::new(77, r);
            for i in random_select(n_total, n, &mut rng).unwrap().indices {
                hits[i] += 1;
            }
        }
        for h in hits {
            let freq = h as f64 / reps as f64;
            assert!((freq - 0.1).abs() <= 0.01, "inclusion frequency {freq}");
        }
    }

    #[test]
    fn method_parsing() {
        assert_eq!("IES".parse::<Method>().unwrap(), Method::Ies);
        assert_eq!("rand".parse::<Method>().unwrap(), Method::Rand);
        assert_eq!("lowcon".parse::<Method>().unwrap(), Method::Lowcon);
        assert!("oss".parse::<Method>().is_err());
        assert_eq!(serde_json::to_string(&Method::Lowcon).unwrap(), "\"lowcon\"");
    }
}
