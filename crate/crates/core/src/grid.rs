//! Rectilinear product grids over two finite-dimensional factors `X × Y`.
//!
//! Nodes are ordered row-major over the concatenated axis list, x-axes
//! outermost and y-axes innermost. Every array in the crate uses this order.

use std::ops::Range;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Relative tolerance on spacing used to flag an axis as uniform.
pub const UNIFORM_RTOL: f64 = 1e-12;

/// Which factor of the product an operation acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variable {
    First,
    Second,
}

impl Variable {
    pub fn label(self) -> &'static str {
        match self {
            Variable::First => "x",
            Variable::Second => "y",
        }
    }

    pub fn other(self) -> Variable {
        match self {
            Variable::First => Variable::Second,
            Variable::Second => Variable::First,
        }
    }
}

/// Strictly increasing, finite coordinates along one axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisGrid {
    coords: Vec<f64>,
    uniform: bool,
}

impl AxisGrid {
    pub fn new(coords: Vec<f64>) -> Result<Self> {
        Self::labelled(coords, "x", 0)
    }

    pub(crate) fn labelled(coords: Vec<f64>, factor: &'static str, axis: usize) -> Result<Self> {
        let bad = |index, reason| Error::InvalidAxis {
            factor,
            axis,
            index,
            reason,
        };
        if coords.len() < 2 {
            return Err(bad(coords.len(), "fewer than two coordinates"));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(bad(i, "non-finite coordinate"));
        }
        if let Some(i) = coords.windows(2).position(|w| w[1] <= w[0]) {
            return Err(bad(i + 1, "coordinates not strictly increasing"));
        }
        let h0 = coords[1] - coords[0];
        let uniform = coords
            .windows(2)
            .all(|w| ((w[1] - w[0]) - h0).abs() <= UNIFORM_RTOL * h0.abs());
        Ok(Self { coords, uniform })
    }

    /// `n` evenly spaced coordinates from `start` to `end` inclusive.
    pub fn linspace(start: f64, end: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::invalid("n", "linspace needs at least two points"));
        }
        let step = (end - start) / (n - 1) as f64;
        let mut coords: Vec<f64> = (0..n).map(|i| start + step * i as f64).collect();
        coords[n - 1] = end;
        Self::new(coords)
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn len(&self) -> usize {
        self.coords.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn is_uniform(&self) -> bool {
        self.uniform
    }

    pub fn first(&self) -> f64 {
        self.coords[0]
    }

    pub fn last(&self) -> f64 {
        self.coords[self.coords.len() - 1]
    }

    pub fn extent(&self) -> f64 {
        self.last() - self.first()
    }

    pub fn max_spacing(&self) -> f64 {
        self.coords.windows(2).map(|w| w[1] - w[0]).fold(0.0, f64::max)
    }

    pub fn min_spacing(&self) -> f64 {
        self.coords
            .windows(2)
            .map(|w| w[1] - w[0])
            .fold(f64::INFINITY, f64::min)
    }

    /// Inclusive index window `[lo, hi]` of the open interval `(c - radius, c + radius)`
    /// around every coordinate `c`.
    ///
    /// Membership is `|c_j - c_i| < radius` evaluated in floating point. Both
    /// window ends are nondecreasing in `i` and every window contains `i`.
    pub fn ball_windows(&self, radius: f64) -> Vec<(usize, usize)> {
        let c = &self.coords;
        let n = c.len();
        let mut out = Vec::with_capacity(n);
        let (mut lo, mut hi) = (0usize, 0usize);
        for i in 0..n {
            while lo < i && (c[lo] - c[i]).abs() >= radius {
                lo += 1;
            }
            hi = hi.max(i);
            while hi + 1 < n && (c[hi + 1] - c[i]).abs() < radius {
                hi += 1;
            }
            out.push((lo, hi));
        }
        out
    }

    /// Each cell split into `factor` equal subcells; original coordinates kept bit-exact.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        if factor == 0 {
            return Err(Error::invalid("factor", "must be at least 1"));
        }
        if factor == 1 {
            return Ok(self.clone());
        }
        let len = (self.len() - 1)
            .checked_mul(factor)
            .and_then(|v| v.checked_add(1))
            .ok_or(Error::SizeOverflow)?;
        let mut coords = Vec::with_capacity(len);
        for w in self.coords.windows(2) {
            let (a, b) = (w[0], w[1]);
            coords.push(a);
            for k in 1..factor {
                coords.push(a + (b - a) * (k as f64 / factor as f64));
            }
        }
        coords.push(self.last());
        Self::new(coords)
    }
}

/// The product `X × Y`, each factor a list of axes.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductGrid {
    x_axes: Vec<AxisGrid>,
    y_axes: Vec<AxisGrid>,
    strides: Vec<usize>,
    node_count: usize,
}

impl ProductGrid {
    pub fn new(x_axes: Vec<AxisGrid>, y_axes: Vec<AxisGrid>) -> Result<Self> {
        if x_axes.is_empty() || y_axes.is_empty() {
            return Err(Error::Schema("each factor needs at least one axis".to_string()));
        }
        let lens: Vec<usize> = x_axes.iter().chain(&y_axes).map(AxisGrid::len).collect();
        let mut strides = vec![1usize; lens.len()];
        let mut acc = 1usize;
        for k in (0..lens.len()).rev() {
            strides[k] = acc;
            acc = acc.checked_mul(lens[k]).ok_or(Error::SizeOverflow)?;
        }
        Ok(Self {
            x_axes,
            y_axes,
            strides,
            node_count: acc,
        })
    }

    /// Builds and validates axes from raw coordinate lists.
    pub fn from_coords(x_axes: Vec<Vec<f64>>, y_axes: Vec<Vec<f64>>) -> Result<Self> {
        let xs = x_axes
            .into_iter()
            .enumerate()
            .map(|(k, c)| AxisGrid::labelled(c, "x", k))
            .collect::<Result<Vec<_>>>()?;
        let ys = y_axes
            .into_iter()
            .enumerate()
            .map(|(k, c)| AxisGrid::labelled(c, "y", k))
            .collect::<Result<Vec<_>>>()?;
        Self::new(xs, ys)
    }

    pub fn x_axes(&self) -> &[AxisGrid] {
        &self.x_axes
    }

    pub fn y_axes(&self) -> &[AxisGrid] {
        &self.y_axes
    }

    pub fn factor(&self, var: Variable) -> &[AxisGrid] {
        match var {
            Variable::First => &self.x_axes,
            Variable::Second => &self.y_axes,
        }
    }

    /// Positions of the factor's axes in the concatenated axis list.
    pub fn factor_range(&self, var: Variable) -> Range<usize> {
        match var {
            Variable::First => 0..self.x_axes.len(),
            Variable::Second => self.x_axes.len()..self.x_axes.len() + self.y_axes.len(),
        }
    }

    pub fn axis(&self, k: usize) -> &AxisGrid {
        if k < self.x_axes.len() {
            &self.x_axes[k]
        } else {
            &self.y_axes[k - self.x_axes.len()]
        }
    }

    pub fn axes(&self) -> impl Iterator<Item = &AxisGrid> {
        self.x_axes.iter().chain(&self.y_axes)
    }

    pub fn ndim(&self) -> usize {
        self.x_axes.len() + self.y_axes.len()
    }

    pub fn dx(&self) -> usize {
        self.x_axes.len()
    }

    pub fn dy(&self) -> usize {
        self.y_axes.len()
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.ndim()];
        for (k, s) in self.strides.iter().enumerate() {
            idx[k] = flat / s;
            flat %= s;
        }
        idx
    }

    pub fn flat_index(&self, idx: &[usize]) -> usize {
        idx.iter().zip(&self.strides).map(|(i, s)| i * s).sum()
    }

    /// Coordinates `(x..., y...)` of a node.
    pub fn node_point(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .enumerate()
            .map(|(k, &i)| self.axis(k).coords()[i])
            .collect()
    }

    pub fn max_extent(&self) -> f64 {
        self.axes().map(AxisGrid::extent).fold(0.0, f64::max)
    }

    pub fn factor_max_extent(&self, var: Variable) -> f64 {
        self.factor(var).iter().map(AxisGrid::extent).fold(0.0, f64::max)
    }

    pub fn min_spacing(&self) -> f64 {
        self.axes().map(AxisGrid::min_spacing).fold(f64::INFINITY, f64::min)
    }

    /// Every axis subdivided by `factor`.
    pub fn refine(&self, factor: usize) -> Result<Self> {
        self.refine_factors(factor, factor)
    }

    /// Refines x-axes by `fx` and y-axes by `fy`.
    pub fn refine_factors(&self, fx: usize, fy: usize) -> Result<Self> {
        let xs = self.x_axes.iter().map(|a| a.refine(fx)).collect::<Result<Vec<_>>>()?;
        let ys = self.y_axes.iter().map(|a| a.refine(fy)).collect::<Result<Vec<_>>>()?;
        Self::new(xs, ys)
    }
}

/// Subdivides every axis of `grid` into `factor` subcells per cell.
pub fn refine(grid: &ProductGrid, factor: usize) -> Result<ProductGrid> {
    grid.refine(factor)
}
