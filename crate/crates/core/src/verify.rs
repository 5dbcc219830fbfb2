//! Empirical semicontinuity certificates from shrinking-radius deficiencies.
//!
//! At a probe node `p` and radius `r`,
//!
//! ```text
//! lsc deficiency = g(p) - inf_{B(p; r)} g
//! usc deficiency = sup_{B(p; r)} g - g(p)
//! ```
//!
//! Both are `>= 0` (the center is in the ball) and nondecreasing in `r`.
//! A function is certified lsc (usc) when the deficiency at the smallest
//! radius is within tolerance.
//!
//! One grid cannot tell an lsc jump from a usc jump: the nodal pattern
//! `0, 1` fits a jump anywhere between the two nodes. Catalog members
//! therefore go through [`Subject::Analytic`]: the probes stay at the base
//! grid nodes while the function is re-sampled on a grid refined until its
//! spacing is at most half the smallest radius. Plain sampled data
//! ([`Subject::Sampled`]) is measured on its own grid, and the profile
//! records `refinement = 1` so readers know the certificate is single-grid.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::catalog::CatalogFunction;
use crate::envelope::{ball_envelope, ball_inf_second, ball_sup_second, Bound, KernelChoice};
use crate::error::{Error, Result};
use crate::function::{MetricSpec, SampledFunction};
use crate::grid::{ProductGrid, Variable};

/// Number of radii in the default schedule `rho * 2^-k`.
pub const DEFAULT_RADII: usize = 8;

/// Cap on nodes of a refined grid.
pub const MAX_REFINED_NODES: usize = 1 << 22;

/// Strictly decreasing positive radii.
#[derive(Debug, Clone, PartialEq)]
pub struct RadiusSchedule(Vec<f64>);

impl RadiusSchedule {
    pub fn new(radii: Vec<f64>) -> Result<Self> {
        if radii.is_empty() {
            return Err(Error::invalid("radii", "empty radius schedule"));
        }
        if radii.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
            return Err(Error::invalid("radii", "radii must be positive and finite"));
        }
        if radii.windows(2).any(|w| w[1] >= w[0]) {
            return Err(Error::invalid("radii", "radii must be strictly decreasing"));
        }
        Ok(Self(radii))
    }

    /// `rho * 2^-k` for `k = 1..=count`.
    pub fn geometric(rho: f64, count: usize) -> Result<Self> {
        Self::new((1..=count).map(|k| rho * 0.5f64.powi(k as i32)).collect())
    }

    /// Half the largest extent of the probed factors.
    pub fn default_rho(grid: &ProductGrid, scope: Scope) -> f64 {
        0.5 * match scope {
            Scope::Separate(var) => grid.factor_max_extent(var),
            Scope::Joint => grid.max_extent(),
        }
    }

    /// [`DEFAULT_RADII`] halvings of [`RadiusSchedule::default_rho`].
    pub fn default_for(grid: &ProductGrid, scope: Scope) -> Result<Self> {
        Self::geometric(Self::default_rho(grid, scope), DEFAULT_RADII)
    }

    pub fn radii(&self) -> &[f64] {
        &self.0
    }

    pub fn smallest(&self) -> f64 {
        self.0[self.0.len() - 1]
    }
}

/// Which balls the deficiency uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scope {
    /// Balls in one factor, the other coordinate held fixed.
    Separate(Variable),
    /// Products of factor balls (the `Linf` combination of the two metrics).
    Joint,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileMode {
    SeparateFirst,
    SeparateSecond,
    Joint,
}

impl From<Scope> for ProfileMode {
    fn from(s: Scope) -> Self {
        match s {
            Scope::Separate(Variable::First) => ProfileMode::SeparateFirst,
            Scope::Separate(Variable::Second) => ProfileMode::SeparateSecond,
            Scope::Joint => ProfileMode::Joint,
        }
    }
}

/// The semicontinuity being certified.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Property {
    Lsc,
    Usc,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeficiencyProfile {
    pub radii: Vec<f64>,
    pub lsc_deficiency: Vec<f64>,
    pub usc_deficiency: Vec<f64>,
    pub mode: ProfileMode,
    /// Per-axis subdivision applied before measuring; 1 means single-grid.
    pub refinement: usize,
}

impl DeficiencyProfile {
    pub fn deficiency(&self, property: Property) -> &[f64] {
        match property {
            Property::Lsc => &self.lsc_deficiency,
            Property::Usc => &self.usc_deficiency,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Witness {
    /// Multi-index on the probe (base) grid.
    pub node: Vec<usize>,
    pub radius: f64,
    pub deficiency: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CertificationVerdict {
    pub passed: bool,
    pub property: Property,
    pub witness: Option<Witness>,
    /// Deficiency at the smallest radius.
    pub trend: f64,
    pub tol: f64,
}

/// What is being certified.
#[derive(Debug, Clone, Copy)]
pub enum Subject<'a> {
    Sampled(&'a SampledFunction),
    Analytic {
        function: CatalogFunction,
        grid: &'a ProductGrid,
        metric: MetricSpec,
    },
}

impl<'a> From<&'a SampledFunction> for Subject<'a> {
    fn from(f: &'a SampledFunction) -> Self {
        Subject::Sampled(f)
    }
}

impl<'a> Subject<'a> {
    /// Analytic when `f` is named after a catalog member and matches its
    /// sampling exactly; sampled otherwise.
    pub fn infer(f: &'a SampledFunction) -> Subject<'a> {
        let analytic = f.name().and_then(|n| n.parse::<CatalogFunction>().ok()).filter(|c| {
            c.sample(f.grid(), f.metric())
                .map(|s| s.values() == f.values())
                .unwrap_or(false)
        });
        match analytic {
            Some(function) => Subject::Analytic {
                function,
                grid: f.grid(),
                metric: f.metric(),
            },
            None => Subject::Sampled(f),
        }
    }

    pub fn grid(&self) -> &ProductGrid {
        match self {
            Subject::Sampled(f) => f.grid(),
            Subject::Analytic { grid, .. } => grid,
        }
    }

    /// Samples on a grid fine enough for `smallest_radius` along the probed factors.
    fn materialize(&self, scope: Scope, smallest_radius: f64) -> Result<Probed> {
        match *self {
            Subject::Sampled(f) => Ok(Probed {
                fine: f.clone(),
                probes: (0..f.node_count()).collect(),
                base: f.shared_grid().clone(),
                refinement: 1,
            }),
            Subject::Analytic { function, grid, metric } => {
                let (rx, ry) = match scope {
                    Scope::Separate(Variable::First) => (true, false),
                    Scope::Separate(Variable::Second) => (false, true),
                    Scope::Joint => (true, true),
                };
                let spacing = grid
                    .x_axes()
                    .iter()
                    .filter(|_| rx)
                    .chain(grid.y_axes().iter().filter(|_| ry))
                    .map(|a| a.max_spacing())
                    .fold(0.0, f64::max);
                let nodes_at = |m: usize| -> Option<usize> {
                    grid.x_axes()
                        .iter()
                        .map(|a| (a.len(), rx))
                        .chain(grid.y_axes().iter().map(|a| (a.len(), ry)))
                        .try_fold(1usize, |acc, (len, refine)| {
                            let l = if refine {
                                (len - 1).checked_mul(m)?.checked_add(1)?
                            } else {
                                len
                            };
                            acc.checked_mul(l)
                        })
                };
                let mut m = 1usize;
                while spacing / m as f64 > 0.5 * smallest_radius
                    && nodes_at(2 * m).is_some_and(|n| n <= MAX_REFINED_NODES)
                {
                    m *= 2;
                }
                let (mx, my) = (if rx { m } else { 1 }, if ry { m } else { 1 });
                let fine_grid = grid.refine_factors(mx, my)?;
                let sampler = function.sampler(grid);
                let fine = sampler.sample(&fine_grid, metric)?;
                let dx = grid.dx();
                let probes = (0..grid.node_count())
                    .map(|i| {
                        let idx: Vec<usize> = grid
                            .multi_index(i)
                            .iter()
                            .enumerate()
                            .map(|(k, &j)| j * if k < dx { mx } else { my })
                            .collect();
                        fine_grid.flat_index(&idx)
                    })
                    .collect();
                Ok(Probed {
                    fine,
                    probes,
                    base: Arc::new(grid.clone()),
                    refinement: m,
                })
            }
        }
    }
}

struct Probed {
    fine: SampledFunction,
    /// Fine-grid flat index of each base node.
    probes: Vec<usize>,
    base: Arc<ProductGrid>,
    refinement: usize,
}

fn scope_envelope(g: &SampledFunction, scope: Scope, bound: Bound, r: f64) -> Result<SampledFunction> {
    match scope {
        Scope::Separate(var) => Ok(ball_envelope(g, var, bound, r, KernelChoice::Auto)?.output),
        Scope::Joint => {
            let inner = ball_envelope(g, Variable::First, bound, r, KernelChoice::Auto)?.output;
            Ok(ball_envelope(&inner, Variable::Second, bound, r, KernelChoice::Auto)?.output)
        }
    }
}

/// Largest deficiency over probes and the first probe attaining it.
fn worst(g: &[f64], env: &[f64], probes: &[usize], property: Property) -> (f64, usize) {
    let mut best = (0.0, 0usize);
    for (k, &p) in probes.iter().enumerate() {
        let d = match property {
            Property::Lsc => g[p] - env[p],
            Property::Usc => env[p] - g[p],
        };
        if d > best.0 {
            best = (d, k);
        }
    }
    best
}

fn certify(
    probed: &Probed,
    target: &SampledFunction,
    scope: Scope,
    property: Property,
    radii: &RadiusSchedule,
    tol: f64,
) -> Result<(DeficiencyProfile, CertificationVerdict)> {
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::invalid(
            "tol",
            format!("must be finite and nonnegative, got {tol}"),
        ));
    }
    let g = target.values();
    let mut lsc = Vec::with_capacity(radii.radii().len());
    let mut usc = Vec::with_capacity(radii.radii().len());
    let mut last_probe = [(0.0, 0usize); 2];
    for &r in radii.radii() {
        let inf = scope_envelope(target, scope, Bound::Inf, r)?;
        let sup = scope_envelope(target, scope, Bound::Sup, r)?;
        let l = worst(g, inf.values(), &probed.probes, Property::Lsc);
        let u = worst(g, sup.values(), &probed.probes, Property::Usc);
        lsc.push(l.0);
        usc.push(u.0);
        last_probe = [l, u];
    }
    let profile = DeficiencyProfile {
        radii: radii.radii().to_vec(),
        lsc_deficiency: lsc,
        usc_deficiency: usc,
        mode: scope.into(),
        refinement: probed.refinement,
    };
    let (trend, probe) = match property {
        Property::Lsc => last_probe[0],
        Property::Usc => last_probe[1],
    };
    let witness = (trend > 0.0).then(|| Witness {
        node: probed.base.multi_index(probe),
        radius: radii.smallest(),
        deficiency: trend,
    });
    let verdict = CertificationVerdict {
        passed: trend <= tol,
        property,
        witness,
        trend,
        tol,
    };
    Ok((profile, verdict))
}

/// Separate semicontinuity in `var` with the other coordinate held fixed.
pub fn check_separate<'a>(
    subject: impl Into<Subject<'a>>,
    var: Variable,
    property: Property,
    radii: &RadiusSchedule,
    tol: f64,
) -> Result<(DeficiencyProfile, CertificationVerdict)> {
    let subject = subject.into();
    let scope = Scope::Separate(var);
    let probed = subject.materialize(scope, radii.smallest())?;
    certify(&probed, &probed.fine, scope, property, radii, tol)
}

/// `f(·, y)` lower semicontinuous for every `y`.
pub fn check_separate_lsc_first<'a>(
    subject: impl Into<Subject<'a>>,
    radii: &RadiusSchedule,
    tol: f64,
) -> Result<(DeficiencyProfile, CertificationVerdict)> {
    check_separate(subject, Variable::First, Property::Lsc, radii, tol)
}

/// `f(x, ·)` upper semicontinuous for every `x`.
pub fn check_separate_usc_second<'a>(
    subject: impl Into<Subject<'a>>,
    radii: &RadiusSchedule,
    tol: f64,
) -> Result<(DeficiencyProfile, CertificationVerdict)> {
    check_separate(subject, Variable::Second, Property::Usc, radii, tol)
}

pub fn check_separate_usc_first<'a>(
    subject: impl Into<Subject<'a>>,
    radii: &RadiusSchedule,
    tol: f64,
) -> Result<(DeficiencyProfile, CertificationVerdict)> {
    check_separate(subject, Variable::First, Property::Usc, radii, tol)
}

pub fn check_separate_lsc_second<'a>(
    subject: impl Into<Subject<'a>>,
    radii: &RadiusSchedule,
    tol: f64,
) -> Result<(DeficiencyProfile, CertificationVerdict)> {
    check_separate(subject, Variable::Second, Property::Lsc, radii, tol)
}

fn envelope_joint<'a>(
    subject: Subject<'a>,
    alpha: f64,
    bound: Bound,
    radii: &RadiusSchedule,
    tol: f64,
) -> Result<(DeficiencyProfile, CertificationVerdict)> {
    let probed = subject.materialize(Scope::Joint, radii.smallest())?;
    let env = match bound {
        Bound::Sup => ball_sup_second(&probed.fine, alpha)?.output,
        Bound::Inf => ball_inf_second(&probed.fine, alpha)?.output,
    };
    let property = match bound {
        Bound::Sup => Property::Lsc,
        Bound::Inf => Property::Usc,
    };
    certify(&probed, &env, Scope::Joint, property, radii, tol)
}

/// Joint lower semicontinuity of `M²_α` over product balls.
///
/// The caller is expected to have certified `f` lsc in the first variable.
pub fn verify_envelope_joint_lsc<'a>(
    subject: impl Into<Subject<'a>>,
    alpha: f64,
    radii: &RadiusSchedule,
    tol: f64,
) -> Result<(DeficiencyProfile, CertificationVerdict)> {
    envelope_joint(subject.into(), alpha, Bound::Sup, radii, tol)
}

/// Joint upper semicontinuity of `m²_α`.
pub fn verify_envelope_joint_usc<'a>(
    subject: impl Into<Subject<'a>>,
    alpha: f64,
    radii: &RadiusSchedule,
    tol: f64,
) -> Result<(DeficiencyProfile, CertificationVerdict)> {
    envelope_joint(subject.into(), alpha, Bound::Inf, radii, tol)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RefinementRow {
    pub level: usize,
    pub factor: usize,
    pub nodes: usize,
    /// Deficiencies at radius `α`, measured at the base nodes.
    pub lsc_first: f64,
    pub usc_first: f64,
    pub lsc_second: f64,
    pub usc_second: f64,
    pub envelope_max: f64,
    pub envelope_mean: f64,
    /// Smallest change of `M²_α` at a base node since the previous level (0 at level 0).
    pub min_envelope_change: f64,
}

#[derive(Debug, Clone)]
pub struct RefinementStudy {
    pub function: CatalogFunction,
    pub alpha: f64,
    pub rows: Vec<RefinementRow>,
    /// `M²_α` at the base nodes, one vector per level.
    pub envelopes: Vec<Vec<f64>>,
}

impl RefinementStudy {
    /// Sup-envelope values at base nodes never decrease under refinement.
    pub fn envelope_monotone(&self) -> bool {
        self.rows.iter().all(|r| r.min_envelope_change >= 0.0)
    }
}

/// Re-samples `function` on `refine(base, 2^k)` for `k = 0..=levels` and
/// tracks deficiencies and `M²_α` at the base nodes.
pub fn refinement_study(
    function: CatalogFunction,
    base: &ProductGrid,
    metric: MetricSpec,
    levels: usize,
    alpha: f64,
) -> Result<RefinementStudy> {
    if levels == 0 {
        return Err(Error::invalid("levels", "must be at least 1"));
    }
    let sampler = function.sampler(base);
    let mut rows = Vec::with_capacity(levels + 1);
    let mut envelopes: Vec<Vec<f64>> = Vec::with_capacity(levels + 1);
    for level in 0..=levels {
        let factor = 1usize.checked_shl(level as u32).ok_or(Error::SizeOverflow)?;
        let grid = base.refine(factor)?;
        if grid.node_count() > MAX_REFINED_NODES {
            return Err(Error::invalid(
                "levels",
                format!(
                    "level {level} needs {} nodes (cap {MAX_REFINED_NODES})",
                    grid.node_count()
                ),
            ));
        }
        let f = sampler.sample(&grid, metric)?;
        let probes: Vec<usize> = (0..base.node_count())
            .map(|i| {
                let idx: Vec<usize> = base.multi_index(i).iter().map(|j| j * factor).collect();
                grid.flat_index(&idx)
            })
            .collect();
        let g = f.values();
        let def = |var, bound, property| -> Result<f64> {
            let env = ball_envelope(&f, var, bound, alpha, KernelChoice::Auto)?.output;
            Ok(worst(g, env.values(), &probes, property).0)
        };
        let env = ball_sup_second(&f, alpha)?.output;
        let at_probes: Vec<f64> = probes.iter().map(|&p| env.values()[p]).collect();
        let min_change = envelopes.last().map_or(0.0, |prev| {
            at_probes
                .iter()
                .zip(prev)
                .map(|(c, p)| c - p)
                .fold(f64::INFINITY, f64::min)
        });
        rows.push(RefinementRow {
            level,
            factor,
            nodes: grid.node_count(),
            lsc_first: def(Variable::First, Bound::Inf, Property::Lsc)?,
            usc_first: def(Variable::First, Bound::Sup, Property::Usc)?,
            lsc_second: def(Variable::Second, Bound::Inf, Property::Lsc)?,
            usc_second: def(Variable::Second, Bound::Sup, Property::Usc)?,
            envelope_max: at_probes.iter().fold(f64::NEG_INFINITY, |m, &v| m.max(v)),
            envelope_mean: at_probes.iter().sum::<f64>() / at_probes.len() as f64,
            min_envelope_change: min_change,
        });
        envelopes.push(at_probes);
    }
    Ok(RefinementStudy {
        function,
        alpha,
        rows,
        envelopes,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::from_catalog;
    use crate::grid::AxisGrid;

    fn square(n: usize) -> ProductGrid {
        let a = AxisGrid::linspace(-1.0, 1.0, n).unwrap();
        ProductGrid::new(vec![a.clone()], vec![a]).unwrap()
    }

    #[test]
    fn schedule_validation() {
        assert!(RadiusSchedule::new(vec![]).is_err());
        assert!(RadiusSchedule::new(vec![0.5, 0.5]).is_err());
        assert!(RadiusSchedule::new(vec![0.5, -0.1]).is_err());
        let s = RadiusSchedule::geometric(1.0, 3).unwrap();
        assert_eq!(s.radii(), &[0.5, 0.25, 0.125]);
    }

    #[test]
    fn constant_has_no_deficiency() {
        let f = from_catalog("constant(2)", &square(9), MetricSpec::LINF).unwrap();
        let radii = RadiusSchedule::geometric(1.0, 4).unwrap();
        let (p, v) = check_separate_lsc_first(&f, &radii, 1e-9).unwrap();
        assert!(p.lsc_deficiency.iter().chain(&p.usc_deficiency).all(|&d| d == 0.0));
        assert!(v.passed && v.witness.is_none());
        let (_, v) = verify_envelope_joint_lsc(&f, 0.3, &radii, 1e-9).unwrap();
        assert!(v.passed);
    }

    #[test]
    fn infer_recognises_catalog_files() {
        let g = square(9);
        let f = from_catalog("mixed_step", &g, MetricSpec::LINF).unwrap();
        assert!(matches!(Subject::infer(&f), Subject::Analytic { .. }));
        let edited = f.map(|v| v + 1.0).unwrap().with_name("mixed_step");
        assert!(matches!(Subject::infer(&edited), Subject::Sampled(_)));
    }

    #[test]
    fn single_grid_step_seen_above_spacing_only() {
        // spacing 0.25: the step is visible for r > 0.25 and invisible below
        let f = from_catalog("step_usc_y", &square(9), MetricSpec::LINF).unwrap();
        let radii = RadiusSchedule::new(vec![0.5, 0.3, 0.2]).unwrap();
        let (p, _) = check_separate_lsc_second(Subject::Sampled(&f), &radii, 1e-9).unwrap();
        assert_eq!(p.lsc_deficiency, vec![1.0, 1.0, 0.0]);
        assert_eq!(p.refinement, 1);
    }

    #[test]
    fn refinement_levels_checked() {
        assert!(refinement_study(CatalogFunction::MixedStep, &square(5), MetricSpec::LINF, 0, 0.5).is_err());
    }
}
