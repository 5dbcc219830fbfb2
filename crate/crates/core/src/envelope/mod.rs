//! Sup/inf envelopes of a sampled function over neighborhoods in one factor.
//!
//! For a radius `α` and the second factor,
//!
//! ```text
//! M(x, y) = max { f(x, z) : z a y-node, d(z, y) < α }
//! m(x, y) = min { f(x, z) : z a y-node, d(z, y) < α }
//! ```
//!
//! Balls are open and clipped to the grid; the center node is always a
//! member, so `m <= f <= M` nodewise. These are grayscale erosion and
//! dilation with a ball structuring element.
//!
//! Two kernels compute the same values:
//! * `Naive` scans the index box of the ball and filters by the metric
//!   (any metric, any axis spacing);
//! * `Separable` runs the monotone-wedge pass axis by axis; it is available
//!   for the `Linf` metric on uniform axes only.

mod kernel;
mod structuring;

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use kernel::{sliding_extremum_axis, Bound};
pub use structuring::{StructuringKind, StructuringSet, OFFSET_RTOL};

use crate::error::{Error, Result};
use crate::function::{Metric, SampledFunction};
use crate::grid::{ProductGrid, Variable};

/// Which kernel actually produced a result.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    Naive,
    Separable,
}

/// Caller's kernel request.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KernelChoice {
    /// Separable when legal, naive otherwise.
    #[default]
    Auto,
    Naive,
    /// Fails with [`Error::KernelUnavailable`] when not legal.
    Separable,
}

impl std::str::FromStr for KernelChoice {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(KernelChoice::Auto),
            "naive" => Ok(KernelChoice::Naive),
            "separable" => Ok(KernelChoice::Separable),
            other => Err(Error::invalid("kernel", format!("unknown kernel `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Neighborhood {
    Ball { radius: f64 },
    Set(StructuringSet),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeParams {
    pub variable: Variable,
    pub bound: Bound,
    pub neighborhood: Neighborhood,
}

impl EnvelopeParams {
    pub fn ball(variable: Variable, bound: Bound, radius: f64) -> Result<Self> {
        check_radius(radius)?;
        Ok(Self {
            variable,
            bound,
            neighborhood: Neighborhood::Ball { radius },
        })
    }
}

#[derive(Debug, Clone)]
pub struct EnvelopeResult {
    pub output: SampledFunction,
    pub params: EnvelopeParams,
    pub kernel: Kernel,
}

#[derive(Serialize)]
struct ParamsHeader<'a> {
    #[serde(flatten)]
    params: &'a EnvelopeParams,
    kernel: Kernel,
}

impl EnvelopeResult {
    /// Function file with a `params` header.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let header = ParamsHeader {
            params: &self.params,
            kernel: self.kernel,
        };
        crate::io::save_with_params(&self.output, &header, path)
    }
}

fn check_radius(radius: f64) -> Result<()> {
    if radius.is_finite() && radius > 0.0 {
        Ok(())
    } else {
        Err(Error::invalid(
            "alpha",
            format!("radius must be positive and finite, got {radius}"),
        ))
    }
}

/// Whether the separable kernel may serve a ball envelope over `var`.
pub fn separable_available(f: &SampledFunction, var: Variable) -> Result<()> {
    if f.metric().factor(var) != Metric::Linf {
        return Err(Error::KernelUnavailable(format!(
            "{} factor uses the l2 metric",
            var.label()
        )));
    }
    uniform_axes(f.grid(), var)
}

fn uniform_axes(grid: &ProductGrid, var: Variable) -> Result<()> {
    match grid.factor(var).iter().position(|a| !a.is_uniform()) {
        Some(axis) => Err(Error::NonUniformAxis {
            factor: var.label(),
            axis,
        }),
        None => Ok(()),
    }
}

fn resolve(choice: KernelChoice, legal: Result<()>) -> Result<Kernel> {
    match (choice, legal) {
        (KernelChoice::Naive, _) => Ok(Kernel::Naive),
        (KernelChoice::Auto, Ok(())) | (KernelChoice::Separable, Ok(())) => Ok(Kernel::Separable),
        (KernelChoice::Auto, Err(_)) => Ok(Kernel::Naive),
        (KernelChoice::Separable, Err(e)) => Err(Error::KernelUnavailable(e.to_string())),
    }
}

/// Ball envelope over `var` with an explicit kernel request.
pub fn ball_envelope(
    f: &SampledFunction,
    var: Variable,
    bound: Bound,
    radius: f64,
    choice: KernelChoice,
) -> Result<EnvelopeResult> {
    let params = EnvelopeParams::ball(var, bound, radius)?;
    let kernel = resolve(choice, separable_available(f, var))?;
    let grid = f.grid();
    let windows: Vec<Vec<(usize, usize)>> = grid.factor(var).iter().map(|a| a.ball_windows(radius)).collect();
    let values = match kernel {
        Kernel::Separable => separable(f.values(), grid, var, &windows, bound),
        Kernel::Naive => match f.metric().factor(var) {
            Metric::Linf => box_scan(f.values(), grid, var, &windows, |_| true, bound),
            Metric::L2 => box_scan(
                f.values(),
                grid,
                var,
                &windows,
                |d| d.iter().fold(0.0, |s, t| s + t * t).sqrt() < radius,
                bound,
            ),
        },
    };
    Ok(EnvelopeResult {
        output: f.with_values(values)?,
        params,
        kernel,
    })
}

/// `M²_α`: sup of `f(x, ·)` over the open ball `B(y; α)` in the second factor.
pub fn ball_sup_second(f: &SampledFunction, alpha: f64) -> Result<EnvelopeResult> {
    ball_envelope(f, Variable::Second, Bound::Sup, alpha, KernelChoice::Auto)
}

/// `m²_α`: inf over `B(y; α)` in the second factor.
pub fn ball_inf_second(f: &SampledFunction, alpha: f64) -> Result<EnvelopeResult> {
    ball_envelope(f, Variable::Second, Bound::Inf, alpha, KernelChoice::Auto)
}

/// `m¹_α`: inf of `f(·, y)` over `B(x; α)` in the first factor.
pub fn ball_inf_first(f: &SampledFunction, alpha: f64) -> Result<EnvelopeResult> {
    ball_envelope(f, Variable::First, Bound::Inf, alpha, KernelChoice::Auto)
}

/// Sup over `B(x; α)` in the first factor.
pub fn ball_sup_first(f: &SampledFunction, alpha: f64) -> Result<EnvelopeResult> {
    ball_envelope(f, Variable::First, Bound::Sup, alpha, KernelChoice::Auto)
}

/// Sup of `f(x, ·)` over the y-nodes in `y + W`, clipped to the grid.
pub fn structuring_sup_second(f: &SampledFunction, w0: &StructuringSet) -> Result<EnvelopeResult> {
    structuring_sup_second_with(f, w0, KernelChoice::Auto)
}

/// As [`structuring_sup_second`] with an explicit kernel; only boxes on
/// uniform axes are separable.
pub fn structuring_sup_second_with(
    f: &SampledFunction,
    w0: &StructuringSet,
    choice: KernelChoice,
) -> Result<EnvelopeResult> {
    let grid = f.grid();
    let var = Variable::Second;
    if w0.dim() != grid.dy() {
        return Err(Error::DimensionMismatch {
            expected: grid.dy(),
            got: w0.dim(),
        });
    }
    let (values, kernel) = match w0.kind() {
        StructuringKind::Box { half_widths } => {
            let kernel = resolve(choice, uniform_axes(grid, var))?;
            let windows = per_axis_windows(grid, var, half_widths);
            let values = match kernel {
                Kernel::Separable => separable(f.values(), grid, var, &windows, Bound::Sup),
                Kernel::Naive => box_scan(f.values(), grid, var, &windows, |_| true, Bound::Sup),
            };
            (values, kernel)
        }
        StructuringKind::Ellipsoid { semi_axes } => {
            let kernel = resolve(
                choice,
                Err(Error::KernelUnavailable("ellipsoids are not separable".into())),
            )?;
            let windows = per_axis_windows(grid, var, semi_axes);
            let member = |d: &[f64]| d.iter().zip(semi_axes).fold(0.0, |s, (t, a)| s + (t / a) * (t / a)) < 1.0;
            (box_scan(f.values(), grid, var, &windows, member, Bound::Sup), kernel)
        }
        StructuringKind::Offsets { offsets } => {
            let kernel = resolve(
                choice,
                Err(Error::KernelUnavailable("offset lists are not separable".into())),
            )?;
            (offset_scan(f.values(), grid, offsets), kernel)
        }
    };
    Ok(EnvelopeResult {
        output: f.with_values(values)?,
        params: EnvelopeParams {
            variable: var,
            bound: Bound::Sup,
            neighborhood: Neighborhood::Set(w0.clone()),
        },
        kernel,
    })
}

/// Inf over `y + W`, computed as `-(sup of -f)`.
pub fn structuring_inf_second(f: &SampledFunction, w0: &StructuringSet) -> Result<EnvelopeResult> {
    let mut res = structuring_sup_second(&f.negate(), w0)?;
    res.output = res.output.negate();
    res.params.bound = Bound::Inf;
    Ok(res)
}

fn per_axis_windows(grid: &ProductGrid, var: Variable, radii: &[f64]) -> Vec<Vec<(usize, usize)>> {
    grid.factor(var)
        .iter()
        .zip(radii)
        .map(|(a, &r)| a.ball_windows(r))
        .collect()
}

fn separable(
    values: &[f64],
    grid: &ProductGrid,
    var: Variable,
    windows: &[Vec<(usize, usize)>],
    bound: Bound,
) -> Vec<f64> {
    let mut cur = values.to_vec();
    for (w, k) in windows.iter().zip(grid.factor_range(var)) {
        cur = kernel::wedge_along_axis(&cur, grid.axis(k).len(), grid.strides()[k], w, bound);
    }
    cur
}

const SCAN_CHUNK: usize = 1024;

/// Extremum over the index box of each node's per-axis windows, keeping the
/// nodes whose coordinate displacement passes `member`. Box order is
/// row-major; ties resolve to the last member scanned.
fn box_scan(
    values: &[f64],
    grid: &ProductGrid,
    var: Variable,
    windows: &[Vec<(usize, usize)>],
    member: impl Fn(&[f64]) -> bool + Sync,
    bound: Bound,
) -> Vec<f64> {
    let axes: Vec<usize> = grid.factor_range(var).collect();
    let strides = grid.strides();
    let mut out = vec![0.0; values.len()];
    out.par_chunks_mut(SCAN_CHUNK).enumerate().for_each(|(ci, chunk)| {
        let nf = axes.len();
        let mut cur = vec![0usize; nf];
        let mut delta = vec![0.0; nf];
        for (o, slot) in chunk.iter_mut().enumerate() {
            let flat = ci * SCAN_CHUNK + o;
            let idx: Vec<usize> = axes.iter().map(|&k| (flat / strides[k]) % grid.axis(k).len()).collect();
            let base = flat - axes.iter().zip(&idx).map(|(&k, &i)| i * strides[k]).sum::<usize>();
            for (m, &i) in idx.iter().enumerate() {
                cur[m] = windows[m][i].0;
            }
            let mut best: Option<f64> = None;
            'scan: loop {
                for m in 0..nf {
                    let c = grid.axis(axes[m]).coords();
                    delta[m] = c[cur[m]] - c[idx[m]];
                }
                if member(&delta) {
                    let at = base + axes.iter().zip(&cur).map(|(&k, &j)| j * strides[k]).sum::<usize>();
                    let v = values[at];
                    if best.is_none_or(|b| bound.prefers(v, b)) {
                        best = Some(v);
                    }
                }
                // odometer, last axis fastest
                let mut m = nf;
                loop {
                    if m == 0 {
                        break 'scan;
                    }
                    m -= 1;
                    if cur[m] < windows[m][idx[m]].1 {
                        cur[m] += 1;
                        break;
                    }
                    cur[m] = windows[m][idx[m]].0;
                }
            }
            *slot = best.expect("center node is always a member");
        }
    });
    out
}

/// Sup over explicitly listed displacements in the second factor.
fn offset_scan(values: &[f64], grid: &ProductGrid, offsets: &[Vec<f64>]) -> Vec<f64> {
    let axes: Vec<usize> = grid.factor_range(Variable::Second).collect();
    let strides = grid.strides();
    let tols: Vec<f64> = axes.iter().map(|&k| OFFSET_RTOL * grid.axis(k).extent()).collect();
    let mut out = vec![0.0; values.len()];
    out.par_chunks_mut(SCAN_CHUNK).enumerate().for_each(|(ci, chunk)| {
        for (o, slot) in chunk.iter_mut().enumerate() {
            let flat = ci * SCAN_CHUNK + o;
            let idx: Vec<usize> = axes.iter().map(|&k| (flat / strides[k]) % grid.axis(k).len()).collect();
            let base = flat - axes.iter().zip(&idx).map(|(&k, &i)| i * strides[k]).sum::<usize>();
            let mut best: Option<f64> = None;
            for v in offsets {
                // matching index range per axis
                let ranges: Vec<(usize, usize)> = axes
                    .iter()
                    .enumerate()
                    .map(|(m, &k)| {
                        let c = grid.axis(k).coords();
                        let t = c[idx[m]] + v[m];
                        let lo = c.partition_point(|&z| z - t < -tols[m]);
                        let hi = c.partition_point(|&z| z - t <= tols[m]);
                        (lo, hi)
                    })
                    .collect();
                if ranges.iter().any(|&(lo, hi)| lo >= hi) {
                    continue;
                }
                let mut cur: Vec<usize> = ranges.iter().map(|r| r.0).collect();
                'scan: loop {
                    let at = base + axes.iter().zip(&cur).map(|(&k, &j)| j * strides[k]).sum::<usize>();
                    let val = values[at];
                    if best.is_none_or(|b| Bound::Sup.prefers(val, b)) {
                        best = Some(val);
                    }
                    let mut m = cur.len();
                    loop {
                        if m == 0 {
                            break 'scan;
                        }
                        m -= 1;
                        if cur[m] + 1 < ranges[m].1 {
                            cur[m] += 1;
                            break;
                        }
                        cur[m] = ranges[m].0;
                    }
                }
            }
            *slot = best.expect("zero displacement matches the center node");
        }
    });
    out
}
