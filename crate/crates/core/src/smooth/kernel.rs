use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Symmetric kernels supported on [−1, 1].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    #[default]
    Epanechnikov,
    Triangular,
}

impl Kernel {
    #[inline]
    pub fn eval(self, u: f64) -> f64 {
        match self {
            Kernel::Epanechnikov => epanechnikov(u),
            Kernel::Triangular => (1.0 - u.abs()).max(0.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Kernel::Epanechnikov => "epanechnikov",
            Kernel::Triangular => "triangular",
        }
    }

    /// V_0, V_1, V_2 at `x`: (1/n)·Σ (1/h)·K((xᵢ−x)/h)·(xᵢ−x)^t.
    pub fn moments(self, points: &[f64], x: f64, h: f64) -> Result<KernelMoments> {
        check_bandwidth(h)?;
        if points.is_empty() {
            return Err(Error::InvalidArgument("kernel moments need at least one point".into()));
        }
        let (mut s0, mut s1, mut s2) = (0.0, 0.0, 0.0);
        for &p in points {
            let d = p - x;
            let k = self.eval(d / h);
            if k > 0.0 {
                s0 += k;
                s1 += k * d;
                s2 += k * d * d;
            }
        }
        let scale = 1.0 / (points.len() as f64 * h);
        Ok(KernelMoments {
            v0: s0 * scale,
            v1: s1 * scale,
            v2: s2 * scale,
        })
    }
}

impl fmt::Display for Kernel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Kernel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "epanechnikov" | "epa" => Ok(Kernel::Epanechnikov),
            "triangular" | "tri" => Ok(Kernel::Triangular),
            other => Err(Error::InvalidArgument(format!(
                "unknown kernel `{other}` (expected epanechnikov or triangular)"
            ))),
        }
    }
}

/// 0.75·(1 − u²)₊
#[inline]
pub fn epanechnikov(u: f64) -> f64 {
    0.75 * (1.0 - u * u).max(0.0)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelMoments {
    pub v0: f64,
    pub v1: f64,
    pub v2: f64,
}

impl KernelMoments {
    /// V_0·V_2 − V_1², the local design determinant.
    pub fn determinant(&self) -> f64 {
        self.v0 * self.v2 - self.v1 * self.v1
    }
}

/// Single moment V_t with the Epanechnikov kernel.
pub fn kernel_moments(points: &[f64], x: f64, h: f64, t: u32) -> Result<f64> {
    let m = Kernel::Epanechnikov.moments(points, x, h)?;
    match t {
        0 => Ok(m.v0),
        1 => Ok(m.v1),
        2 => Ok(m.v2),
        _ => Err(Error::InvalidArgument(format!("moment order must be 0, 1 or 2, got {t}"))),
    }
}

pub(crate) fn check_bandwidth(h: f64) -> Result<()> {
    if h.is_finite() && h > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("bandwidth must be positive and finite, got {h}")))
    }
}
