//! Sliding-window extremum kernels over index windows.
//!
//! Windows come from [`AxisGrid::ball_windows`]: inclusive `[lo, hi]` pairs
//! with both ends nondecreasing. The monotone wedge (a deque of candidate
//! indices with strictly monotone values) then yields every window extremum
//! with at most `2n` pushes and pops per line.
//!
//! Tie policy: both the wedge and the naive scan return the *last* index
//! attaining the extremum, so the two paths agree bit-for-bit (this matters
//! only for `-0.0` versus `+0.0`).

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::grid::AxisGrid;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Bound {
    Sup,
    Inf,
}

impl Bound {
    /// True when `candidate` should replace `best` (ties replace).
    #[inline]
    pub(crate) fn prefers(self, candidate: f64, best: f64) -> bool {
        match self {
            Bound::Sup => candidate >= best,
            Bound::Inf => candidate <= best,
        }
    }

    pub fn dual(self) -> Bound {
        match self {
            Bound::Sup => Bound::Inf,
            Bound::Inf => Bound::Sup,
        }
    }
}

impl std::str::FromStr for Bound {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sup" => Ok(Bound::Sup),
            "inf" => Ok(Bound::Inf),
            other => Err(Error::invalid("bound", format!("expected sup or inf, got `{other}`"))),
        }
    }
}

/// Window extrema of `values` by the monotone wedge.
pub(crate) fn wedge_extremum(
    values: &[f64],
    windows: &[(usize, usize)],
    bound: Bound,
    out: &mut [f64],
    wedge: &mut VecDeque<usize>,
) {
    debug_assert_eq!(values.len(), windows.len());
    wedge.clear();
    let mut next = 0usize;
    for (i, &(lo, hi)) in windows.iter().enumerate() {
        while next <= hi {
            let v = values[next];
            // drop dominated candidates; ties drop too so the newest survives
            while let Some(&back) = wedge.back() {
                if bound.prefers(v, values[back]) {
                    wedge.pop_back();
                } else {
                    break;
                }
            }
            wedge.push_back(next);
            next += 1;
        }
        while let Some(&front) = wedge.front() {
            if front < lo {
                wedge.pop_front();
            } else {
                break;
            }
        }
        out[i] = values[*wedge.front().expect("window contains its center")];
    }
}

/// Running max/min of `values` over the open interval `(c - radius, c + radius)`
/// around each coordinate of a uniform axis.
///
/// Non-uniform axes are refused with [`Error::NonUniformAxis`]; callers fall
/// back to the naive path.
pub fn sliding_extremum_axis(values: &[f64], coords: &AxisGrid, radius: f64, bound: Bound) -> Result<Vec<f64>> {
    if !coords.is_uniform() {
        return Err(Error::NonUniformAxis {
            factor: "given",
            axis: 0,
        });
    }
    if radius.is_nan() || radius <= 0.0 {
        return Err(Error::invalid("radius", "must be positive"));
    }
    if values.len() != coords.len() {
        return Err(Error::LengthMismatch {
            expected: coords.len(),
            got: values.len(),
        });
    }
    let windows = coords.ball_windows(radius);
    let mut out = vec![0.0; values.len()];
    wedge_extremum(values, &windows, bound, &mut out, &mut VecDeque::new());
    Ok(out)
}

/// Applies the wedge along one axis of a row-major array.
///
/// `len` and `stride` describe the axis; every line along it is processed
/// independently.
pub(crate) fn wedge_along_axis(
    values: &[f64],
    len: usize,
    stride: usize,
    windows: &[(usize, usize)],
    bound: Bound,
) -> Vec<f64> {
    let block = len * stride;
    let mut out = vec![0.0; values.len()];
    out.par_chunks_mut(block).zip(values.par_chunks(block)).for_each_init(
        || (vec![0.0; len], vec![0.0; len], VecDeque::with_capacity(len)),
        |(line, res, wedge), (dst, src)| {
            for inner in 0..stride {
                for j in 0..len {
                    line[j] = src[inner + j * stride];
                }
                wedge_extremum(line, windows, bound, res, wedge);
                for j in 0..len {
                    dst[inner + j * stride] = res[j];
                }
            }
        },
    );
    out
}
