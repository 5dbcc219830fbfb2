//! Analytic test functions with known semicontinuity and Lipschitz behaviour.
//!
//! Step functions read the first coordinate of each factor; the smooth
//! members sum over all coordinates.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::function::{Metric, MetricSpec, SampledFunction};
use crate::grid::ProductGrid;

/// Angular frequency of `lipschitz_sine`.
pub const SINE_FREQUENCY: f64 = 2.0;

/// Names accepted by [`CatalogFunction::from_str`], without parameters.
pub const CATALOG_NAMES: &[&str] = &[
    "constant",
    "affine",
    "lipschitz_sine",
    "step_lsc_x",
    "step_usc_y",
    "mixed_step",
    "unbounded_hyperbola",
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CatalogFunction {
    /// `c`
    Constant(f64),
    /// `1 + sum_k 0.5 (k+1) x_k - sum_k 0.25 (k+1) y_k`
    Affine,
    /// `sum_k sin(2 x_k) + sum_k sin(2 y_k)`
    LipschitzSine,
    /// `[x_0 > 0]`, lower semicontinuous in x
    StepLscX,
    /// `[y_0 >= 0]`, upper semicontinuous in y
    StepUscY,
    /// `[x_0 > 0] - [y_0 > 0]`: lsc in x for every y, usc in y for every x
    MixedStep,
    /// `1 / (sum |x_k| + sum |y_k| + h)` with `h` half the smallest grid spacing
    UnboundedHyperbola,
}

impl CatalogFunction {
    /// Evaluator bound to `grid`'s scale (only the hyperbola needs it).
    pub fn sampler(&self, grid: &ProductGrid) -> Sampler {
        Sampler {
            function: *self,
            offset: 0.5 * grid.min_spacing(),
        }
    }

    /// The function sampled at every node of `grid`, named by its identifier.
    pub fn sample(&self, grid: &ProductGrid, metric: MetricSpec) -> Result<SampledFunction> {
        let sampler = self.sampler(grid);
        sampler.sample(grid, metric)
    }

    /// Lipschitz constants `(Λx, Λy)` under the factor metrics, when finite.
    pub fn lipschitz_constants(&self, grid: &ProductGrid, metric: MetricSpec) -> Option<(f64, f64)> {
        let norm = |coeffs: Vec<f64>, m: Metric| match m {
            // dual norms: l1 for sup-metric, l2 for euclidean
            Metric::Linf => coeffs.iter().map(|c| c.abs()).sum::<f64>(),
            Metric::L2 => coeffs.iter().map(|c| c * c).sum::<f64>().sqrt(),
        };
        let (dx, dy) = (grid.dx(), grid.dy());
        match self {
            CatalogFunction::Constant(_) => Some((0.0, 0.0)),
            CatalogFunction::Affine => Some((
                norm((0..dx).map(|k| 0.5 * (k + 1) as f64).collect(), metric.x),
                norm((0..dy).map(|k| 0.25 * (k + 1) as f64).collect(), metric.y),
            )),
            CatalogFunction::LipschitzSine => Some((
                norm(vec![SINE_FREQUENCY; dx], metric.x),
                norm(vec![SINE_FREQUENCY; dy], metric.y),
            )),
            _ => None,
        }
    }
}

impl fmt::Display for CatalogFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CatalogFunction::Constant(c) => write!(f, "constant({c})"),
            CatalogFunction::Affine => f.write_str("affine"),
            CatalogFunction::LipschitzSine => f.write_str("lipschitz_sine"),
            CatalogFunction::StepLscX => f.write_str("step_lsc_x"),
            CatalogFunction::StepUscY => f.write_str("step_usc_y"),
            CatalogFunction::MixedStep => f.write_str("mixed_step"),
            CatalogFunction::UnboundedHyperbola => f.write_str("unbounded_hyperbola"),
        }
    }
}

impl FromStr for CatalogFunction {
    type Err = Error;

    /// Parses `constant(3)`, `mixed_step`, ... Bare `constant` is rejected: it needs a value.
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if let Some(arg) = s.strip_prefix("constant(").and_then(|r| r.strip_suffix(')')) {
            let c: f64 = arg
                .trim()
                .parse()
                .map_err(|_| Error::invalid("c", format!("`{arg}` is not a number")))?;
            if !c.is_finite() {
                return Err(Error::invalid("c", "must be finite"));
            }
            return Ok(CatalogFunction::Constant(c));
        }
        match s {
            "affine" => Ok(CatalogFunction::Affine),
            "lipschitz_sine" => Ok(CatalogFunction::LipschitzSine),
            "step_lsc_x" => Ok(CatalogFunction::StepLscX),
            "step_usc_y" => Ok(CatalogFunction::StepUscY),
            "mixed_step" => Ok(CatalogFunction::MixedStep),
            "unbounded_hyperbola" => Ok(CatalogFunction::UnboundedHyperbola),
            "constant" => Err(Error::invalid("c", "constant needs a value, e.g. constant(3)")),
            other => Err(Error::UnknownCatalog(other.to_string())),
        }
    }
}

/// A catalog member with its grid-dependent scale fixed.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Sampler {
    function: CatalogFunction,
    offset: f64,
}

impl Sampler {
    pub fn function(&self) -> CatalogFunction {
        self.function
    }

    pub fn eval(&self, x: &[f64], y: &[f64]) -> f64 {
        let ind = |b: bool| if b { 1.0 } else { 0.0 };
        match self.function {
            CatalogFunction::Constant(c) => c,
            CatalogFunction::Affine => {
                let mut v = 1.0;
                for (k, xi) in x.iter().enumerate() {
                    v += 0.5 * (k + 1) as f64 * xi;
                }
                for (k, yi) in y.iter().enumerate() {
                    v -= 0.25 * (k + 1) as f64 * yi;
                }
                v
            }
            CatalogFunction::LipschitzSine => {
                x.iter().map(|t| (SINE_FREQUENCY * t).sin()).sum::<f64>()
                    + y.iter().map(|t| (SINE_FREQUENCY * t).sin()).sum::<f64>()
            }
            CatalogFunction::StepLscX => ind(x[0] > 0.0),
            CatalogFunction::StepUscY => ind(y[0] >= 0.0),
            CatalogFunction::MixedStep => ind(x[0] > 0.0) - ind(y[0] > 0.0),
            CatalogFunction::UnboundedHyperbola => {
                let r: f64 = x.iter().chain(y).map(|t| t.abs()).sum();
                1.0 / (r + self.offset)
            }
        }
    }

    pub fn sample(&self, grid: &ProductGrid, metric: MetricSpec) -> Result<SampledFunction> {
        Ok(
            SampledFunction::from_fn(grid.clone(), metric, |x, y| self.eval(x, y))?
                .with_name(self.function.to_string()),
        )
    }
}

/// Samples the named catalog function on `grid`.
pub fn from_catalog(name: &str, grid: &ProductGrid, metric: MetricSpec) -> Result<SampledFunction> {
    name.parse::<CatalogFunction>()?.sample(grid, metric)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::AxisGrid;

    fn square(n: usize) -> ProductGrid {
        let a = AxisGrid::linspace(-1.0, 1.0, n).unwrap();
        ProductGrid::new(vec![a.clone()], vec![a]).unwrap()
    }

    #[test]
    fn constant_everywhere() {
        let f = from_catalog("constant(3)", &square(5), MetricSpec::LINF).unwrap();
        assert!(f.values().iter().all(|&v| v == 3.0));
        assert_eq!(f.name(), Some("constant(3)"));
    }

    #[test]
    fn mixed_step_formula_at_node() {
        let g = ProductGrid::from_coords(vec![vec![-1.0, 1.0]], vec![vec![-1.0, 1.0]]).unwrap();
        let f = from_catalog("mixed_step", &g, MetricSpec::LINF).unwrap();
        // node (x,y) = (1,-1) is multi-index (1,0)
        assert_eq!(f.values()[g.flat_index(&[1, 0])], 1.0);
        assert_eq!(f.values(), &[0.0, -1.0, 1.0, 0.0]);
    }

    #[test]
    fn unknown_names_rejected() {
        assert!(matches!(
            "wobble".parse::<CatalogFunction>(),
            Err(Error::UnknownCatalog(_))
        ));
        assert!("constant".parse::<CatalogFunction>().is_err());
        assert!("constant(inf)".parse::<CatalogFunction>().is_err());
    }

    #[test]
    fn names_round_trip() {
        for name in [
            "constant(-2.5)",
            "affine",
            "lipschitz_sine",
            "step_lsc_x",
            "step_usc_y",
            "mixed_step",
            "unbounded_hyperbola",
        ] {
            let f: CatalogFunction = name.parse().unwrap();
            assert_eq!(f.to_string(), name);
        }
    }

    #[test]
    fn hyperbola_peaks_at_inverse_offset() {
        let g = square(17);
        let f = from_catalog("unbounded_hyperbola", &g, MetricSpec::LINF).unwrap();
        // spacing 1/8, offset 1/16
        assert_eq!(f.max_abs(), 16.0);
    }

    #[test]
    fn sine_lipschitz_constants() {
        let g = square(5);
        let c = CatalogFunction::LipschitzSine.lipschitz_constants(&g, MetricSpec::LINF);
        assert_eq!(c, Some((2.0, 2.0)));
        assert_eq!(
            CatalogFunction::MixedStep.lipschitz_constants(&g, MetricSpec::LINF),
            None
        );
    }
}
