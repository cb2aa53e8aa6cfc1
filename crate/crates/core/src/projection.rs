//! Idempotent componentwise maps `[0,1] -> S`.
//!
//! A projection decides which fuzzy values are "the same" once explained: two
//! points are indistinguishable to an explanation when they project to the
//! same point. Threshold projections (α-booleanization) land on `{0,1}` and
//! are the ones used to extract Boolean rules.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", try_from = "RawProjection")]
pub enum Projection {
    /// `1` iff `x >= alpha`, else `0`.
    Threshold { alpha: f64 },
    Identity,
    /// Rounds to the nearest of `levels` uniformly spaced values `j/(levels-1)`.
    Quantize { levels: u32 },
}

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
enum RawProjection {
    Threshold { alpha: f64 },
    Identity,
    Quantize { levels: u32 },
}

impl TryFrom<RawProjection> for Projection {
    type Error = Error;

    fn try_from(raw: RawProjection) -> Result<Self> {
        match raw {
            RawProjection::Threshold { alpha } => Projection::threshold(alpha),
            RawProjection::Identity => Ok(Projection::Identity),
            RawProjection::Quantize { levels } => Projection::quantize(levels),
        }
    }
}

impl Projection {
    /// α-booleanization; `alpha` must lie in `(0, 1]`.
    pub fn threshold(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::invalid(format!(
                "threshold alpha must lie in (0,1], got {alpha}"
            )));
        }
        Ok(Projection::Threshold { alpha })
    }

    pub fn quantize(levels: u32) -> Result<Self> {
        if levels < 2 {
            return Err(Error::invalid(format!(
                "quantize needs at least 2 levels, got {levels}"
            )));
        }
        Ok(Projection::Quantize { levels })
    }

    /// The projection used throughout the experiments, `δ_0.5`.
    pub fn half() -> Self {
        Projection::Threshold { alpha: 0.5 }
    }

    #[inline]
    pub fn apply_scalar(&self, x: f64) -> f64 {
        match *self {
            Projection::Threshold { alpha } => {
                if x >= alpha {
                    1.0
                } else {
                    0.0
                }
            }
            Projection::Identity => x,
            Projection::Quantize { levels } => {
                let steps = f64::from(levels - 1);
                (x * steps).round() / steps
            }
        }
    }

    /// Componentwise application.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        x.iter().map(|&v| self.apply_scalar(v)).collect()
    }

    pub fn apply_in_place(&self, x: &mut [f64]) {
        for v in x.iter_mut() {
            *v = self.apply_scalar(*v);
        }
    }

    /// True when the image is exactly `{0,1}`, which is what truth-table
    /// extraction requires.
    pub fn is_boolean(&self) -> bool {
        matches!(
            self,
            Projection::Threshold { .. } | Projection::Quantize { levels: 2 }
        )
    }

    /// Membership in the declared image set.
    pub fn in_image(&self, v: f64) -> bool {
        match *self {
            Projection::Threshold { .. } => v == 0.0 || v == 1.0,
            Projection::Identity => (0.0..=1.0).contains(&v),
            Projection::Quantize { levels } => {
                let steps = f64::from(levels - 1);
                let j = (v * steps).round();
                (0.0..=steps).contains(&j) && j / steps == v
            }
        }
    }

    /// Index of the image value a scalar lands on. For Boolean projections
    /// this is the bit; used to key δ-classes.
    pub(crate) fn level_of(&self, x: f64) -> u64 {
        match *self {
            Projection::Threshold { alpha } => u64::from(x >= alpha),
            Projection::Identity => x.to_bits(),
            Projection::Quantize { levels } => (x * f64::from(levels - 1)).round() as u64,
        }
    }
}

impl std::fmt::Display for Projection {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Projection::Threshold { alpha } => write!(f, "threshold({alpha})"),
            Projection::Identity => write!(f, "identity"),
            Projection::Quantize { levels } => write!(f, "quantize({levels})"),
        }
    }
}
