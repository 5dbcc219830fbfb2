//! Balanced neighborhoods of zero in the Y factor.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative (to axis extent) matching tolerance for explicit offsets.
pub const OFFSET_RTOL: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StructuringKind {
    /// Open box `|d_k| < h_k`.
    Box { half_widths: Vec<f64> },
    /// Open ellipsoid `sum_k (d_k / a_k)^2 < 1`.
    Ellipsoid { semi_axes: Vec<f64> },
    /// Explicit displacements; a node `z` belongs to `y + W` when
    /// `|z_k - (y_k + v_k)| <= OFFSET_RTOL * extent_k` on every axis for some `v`.
    Offsets { offsets: Vec<Vec<f64>> },
}

/// A structuring set `W`, validated balanced: `0 ∈ W` and `W = -W`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(transparent)]
pub struct StructuringSet(StructuringKind);

impl StructuringSet {
    pub fn new(kind: StructuringKind) -> Result<Self> {
        let positive = |name: &'static str, v: &[f64]| {
            if v.is_empty() {
                return Err(Error::invalid(name, "needs at least one axis"));
            }
            if let Some(k) = v.iter().position(|w| !(w.is_finite() && *w > 0.0)) {
                return Err(Error::invalid(name, format!("entry {k} must be positive and finite")));
            }
            Ok(())
        };
        match &kind {
            StructuringKind::Box { half_widths } => positive("half_widths", half_widths)?,
            StructuringKind::Ellipsoid { semi_axes } => positive("semi_axes", semi_axes)?,
            StructuringKind::Offsets { offsets } => {
                let dim = offsets
                    .first()
                    .map(Vec::len)
                    .ok_or_else(|| Error::Unbalanced("empty offset list".into()))?;
                if dim == 0 || offsets.iter().any(|v| v.len() != dim) {
                    return Err(Error::invalid("offsets", "all offsets need the same nonzero dimension"));
                }
                if offsets.iter().flatten().any(|c| !c.is_finite()) {
                    return Err(Error::invalid("offsets", "non-finite component"));
                }
                if !offsets.iter().any(|v| v.iter().all(|&c| c == 0.0)) {
                    return Err(Error::Unbalanced("zero displacement missing".into()));
                }
                for v in offsets {
                    let neg: Vec<f64> = v.iter().map(|c| -c).collect();
                    if !offsets.contains(&neg) {
                        return Err(Error::Unbalanced(format!("{v:?} present but its negation is not")));
                    }
                }
            }
        }
        Ok(Self(kind))
    }

    pub fn boxed(half_widths: Vec<f64>) -> Result<Self> {
        Self::new(StructuringKind::Box { half_widths })
    }

    pub fn ellipsoid(semi_axes: Vec<f64>) -> Result<Self> {
        Self::new(StructuringKind::Ellipsoid { semi_axes })
    }

    pub fn offsets(offsets: Vec<Vec<f64>>) -> Result<Self> {
        Self::new(StructuringKind::Offsets { offsets })
    }

    pub fn kind(&self) -> &StructuringKind {
        &self.0
    }

    pub fn dim(&self) -> usize {
        match &self.0 {
            StructuringKind::Box { half_widths } => half_widths.len(),
            StructuringKind::Ellipsoid { semi_axes } => semi_axes.len(),
            StructuringKind::Offsets { offsets } => offsets[0].len(),
        }
    }
}

impl<'de> Deserialize<'de> for StructuringSet {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let kind = StructuringKind::deserialize(d)?;
        StructuringSet::new(kind).map_err(serde::de::Error::custom)
    }
}
