//! Real functions tabulated on a [`ProductGrid`].

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, NodeIndex, Result};
use crate::grid::{ProductGrid, Variable};

/// Metric on one finite-dimensional factor.
///
/// `Linf` is `max_k |a_k - b_k|`; `L2` is `sqrt(sum_k (a_k - b_k)^2)` with the
/// sum accumulated in axis order starting from zero.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Metric {
    Linf,
    L2,
}

impl Metric {
    pub fn distance(self, a: &[f64], b: &[f64]) -> f64 {
        match self {
            Metric::Linf => a.iter().zip(b).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max),
            Metric::L2 => a
                .iter()
                .zip(b)
                .map(|(p, q)| (p - q) * (p - q))
                .fold(0.0, |s, d| s + d)
                .sqrt(),
        }
    }
}

impl std::str::FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "linf" => Ok(Metric::Linf),
            "l2" => Ok(Metric::L2),
            other => Err(Error::invalid("metric", format!("unknown metric `{other}`"))),
        }
    }
}

/// Metric choice per factor.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct MetricSpec {
    pub x: Metric,
    pub y: Metric,
}

impl MetricSpec {
    pub const LINF: MetricSpec = MetricSpec {
        x: Metric::Linf,
        y: Metric::Linf,
    };

    pub fn new(x: Metric, y: Metric) -> Self {
        Self { x, y }
    }

    pub fn factor(&self, var: Variable) -> Metric {
        match var {
            Variable::First => self.x,
            Variable::Second => self.y,
        }
    }
}

impl Default for MetricSpec {
    fn default() -> Self {
        Self::LINF
    }
}

/// Finite nodal values of `f : X × Y → ℝ` on a product grid.
///
/// The grid is shared behind an [`Arc`] so derived functions (envelopes,
/// insertions) do not copy coordinates.
#[derive(Debug, Clone)]
pub struct SampledFunction {
    grid: Arc<ProductGrid>,
    metric: MetricSpec,
    values: Vec<f64>,
    name: Option<String>,
}

impl PartialEq for SampledFunction {
    fn eq(&self, other: &Self) -> bool {
        self.same_domain(other) && self.values == other.values && self.name == other.name
    }
}

impl SampledFunction {
    pub fn new(grid: ProductGrid, metric: MetricSpec, values: Vec<f64>) -> Result<Self> {
        Self::on_shared(Arc::new(grid), metric, values)
    }

    pub fn on_shared(grid: Arc<ProductGrid>, metric: MetricSpec, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.node_count() {
            return Err(Error::LengthMismatch {
                expected: grid.node_count(),
                got: values.len(),
            });
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(NodeIndex(grid.multi_index(i))));
        }
        Ok(Self {
            grid,
            metric,
            values,
            name: None,
        })
    }

    /// Samples `f(x, y)` at every node.
    pub fn from_fn(grid: ProductGrid, metric: MetricSpec, f: impl Fn(&[f64], &[f64]) -> f64 + Sync) -> Result<Self> {
        let grid = Arc::new(grid);
        let dx = grid.dx();
        let values = (0..grid.node_count())
            .map(|i| {
                let p = grid.node_point(i);
                f(&p[..dx], &p[dx..])
            })
            .collect();
        Self::on_shared(grid, metric, values)
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = Some(name.into());
        self
    }

    pub fn set_name(&mut self, name: Option<String>) {
        self.name = name;
    }

    pub fn grid(&self) -> &ProductGrid {
        &self.grid
    }

    pub fn shared_grid(&self) -> &Arc<ProductGrid> {
        &self.grid
    }

    pub fn metric(&self) -> MetricSpec {
        self.metric
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f64> {
        self.values
    }

    pub fn name(&self) -> Option<&str> {
        self.name.as_deref()
    }

    pub fn node_count(&self) -> usize {
        self.values.len()
    }

    /// Same grid and metric.
    pub fn same_domain(&self, other: &SampledFunction) -> bool {
        self.metric == other.metric && (Arc::ptr_eq(&self.grid, &other.grid) || *self.grid == *other.grid)
    }

    /// A function on the same grid and metric with new values. The name is dropped.
    pub fn with_values(&self, values: Vec<f64>) -> Result<Self> {
        Self::on_shared(self.grid.clone(), self.metric, values)
    }

    /// Applies `op` nodewise; fails if any result is non-finite.
    pub fn map(&self, op: impl Fn(f64) -> f64) -> Result<Self> {
        self.with_values(self.values.iter().map(|&v| op(v)).collect())
    }

    pub fn negate(&self) -> Self {
        Self {
            grid: self.grid.clone(),
            metric: self.metric,
            values: self.values.iter().map(|v| -v).collect(),
            name: None,
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Multilinear interpolation of the nodal values at `point = (x..., y...)`.
    ///
    /// A component equal to a grid coordinate collapses that axis onto the
    /// node, so evaluation at nodes returns the stored value bit-exactly.
    pub fn eval_at(&self, point: &[f64]) -> Result<f64> {
        let grid = &*self.grid;
        if point.len() != grid.ndim() {
            return Err(Error::DimensionMismatch {
                expected: grid.ndim(),
                got: point.len(),
            });
        }
        // per axis: (index, weight) pairs with weights summing to one
        let mut supports: Vec<[(usize, f64); 2]> = Vec::with_capacity(point.len());
        let mut widths: Vec<usize> = Vec::with_capacity(point.len());
        for (k, &p) in point.iter().enumerate() {
            let axis = grid.axis(k);
            let c = axis.coords();
            if !(p >= axis.first() && p <= axis.last()) {
                return Err(Error::OutOfBounds { component: k, value: p });
            }
            match c.binary_search_by(|v| v.partial_cmp(&p).expect("finite")) {
                Ok(i) => {
                    supports.push([(i, 1.0), (i, 0.0)]);
                    widths.push(1);
                }
                Err(i) => {
                    // c[i-1] < p < c[i]
                    let t = (p - c[i - 1]) / (c[i] - c[i - 1]);
                    supports.push([(i - 1, 1.0 - t), (i, t)]);
                    widths.push(2);
                }
            }
        }
        let strides = grid.strides();
        let corners: usize = widths.iter().product();
        // -0.0 is the additive identity for every f64, including -0.0
        let mut acc = -0.0;
        for corner in 0..corners {
            let mut rem = corner;
            let mut weight = 1.0;
            let mut flat = 0;
            for k in 0..point.len() {
                let pick = rem % widths[k];
                rem /= widths[k];
                let (i, w) = supports[k][pick];
                weight *= w;
                flat += i * strides[k];
            }
            acc += weight * self.values[flat];
        }
        Ok(acc)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::AxisGrid;

    fn unit_grid() -> ProductGrid {
        ProductGrid::new(
            vec![AxisGrid::new(vec![0.0, 1.0]).unwrap()],
            vec![AxisGrid::new(vec![0.0, 1.0]).unwrap()],
        )
        .unwrap()
    }

    #[test]
    fn minimal_grid_holds_four_nodes() {
        let f = SampledFunction::new(unit_grid(), MetricSpec::LINF, vec![0.0, 1.0, 2.0, 3.0]).unwrap();
        assert_eq!(f.node_count(), 4);
    }

    #[test]
    fn rejects_non_finite_with_node_index() {
        let err = SampledFunction::new(unit_grid(), MetricSpec::LINF, vec![0.0, 1.0, f64::NAN, 3.0]).unwrap_err();
        assert_eq!(err.to_string(), "non-finite value at node (1,0)");
    }

    #[test]
    fn rejects_wrong_length() {
        assert!(matches!(
            SampledFunction::new(unit_grid(), MetricSpec::LINF, vec![0.0; 3]),
            Err(Error::LengthMismatch { .. })
        ));
    }

    #[test]
    fn midpoint_of_segment() {
        let f = SampledFunction::new(unit_grid(), MetricSpec::LINF, vec![0.0, 0.0, 1.0, 1.0]).unwrap();
        assert_eq!(f.eval_at(&[0.5, 0.3]).unwrap(), 0.5);
    }

    #[test]
    fn exact_at_nodes() {
        let g = ProductGrid::from_coords(vec![vec![-1.0, 0.1, 0.7]], vec![vec![0.0, 0.3, 2.0]]).unwrap();
        let vals: Vec<f64> = (0..9).map(|i| (i as f64 * 0.37).sin()).collect();
        let f = SampledFunction::new(g, MetricSpec::LINF, vals).unwrap();
        for i in 0..9 {
            let p = f.grid().node_point(i);
            assert_eq!(f.eval_at(&p).unwrap().to_bits(), f.values()[i].to_bits());
        }
    }

    #[test]
    fn outside_box_is_an_error() {
        let f = SampledFunction::new(unit_grid(), MetricSpec::LINF, vec![0.0; 4]).unwrap();
        assert!(matches!(
            f.eval_at(&[1.5, 0.0]),
            Err(Error::OutOfBounds { component: 0, .. })
        ));
        assert!(matches!(f.eval_at(&[0.5]), Err(Error::DimensionMismatch { .. })));
        assert!(f.eval_at(&[f64::NAN, 0.0]).is_err());
    }

    #[test]
    fn metric_distances() {
        assert_eq!(Metric::Linf.distance(&[0.0, 0.0], &[3.0, -4.0]), 4.0);
        assert_eq!(Metric::L2.distance(&[0.0, 0.0], &[3.0, -4.0]), 5.0);
    }
}
