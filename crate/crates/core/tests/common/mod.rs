//! Reference implementations used as test oracles. Nothing here calls the
//! library's envelope code: every extremum is an exhaustive scan.
#![allow(dead_code)]

use envkit::envelope::{StructuringKind, StructuringSet, OFFSET_RTOL};
use envkit::{AxisGrid, Metric, MetricSpec, ProductGrid, SampledFunction, Variable};
use rand::distributions::Uniform;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn square(n: usize) -> ProductGrid {
    let a = AxisGrid::linspace(-1.0, 1.0, n).unwrap();
    ProductGrid::new(vec![a.clone()], vec![a]).unwrap()
}

/// Multi-indices of the nodes in `var`'s factor that share `i`'s other coordinates.
fn fibre(grid: &ProductGrid, i: usize, var: Variable) -> Vec<usize> {
    let idx = grid.multi_index(i);
    let axes: Vec<usize> = grid.factor_range(var).collect();
    let lens: Vec<usize> = axes.iter().map(|&k| grid.axis(k).len()).collect();
    let total: usize = lens.iter().product();
    (0..total)
        .map(|mut t| {
            let mut j = idx.clone();
            for (m, &k) in axes.iter().enumerate().rev() {
                j[k] = t % lens[m];
                t /= lens[m];
            }
            grid.flat_index(&j)
        })
        .collect()
}

/// Displacement `node_j - node_i` restricted to `var`'s coordinates.
fn displacement(grid: &ProductGrid, i: usize, j: usize, var: Variable) -> Vec<f64> {
    let (pi, pj) = (grid.node_point(i), grid.node_point(j));
    grid.factor_range(var).map(|k| pj[k] - pi[k]).collect()
}

/// Extremum of `values` over the nodes of each fibre whose displacement passes `member`.
pub fn scan(grid: &ProductGrid, values: &[f64], var: Variable, sup: bool, member: impl Fn(&[f64]) -> bool) -> Vec<f64> {
    (0..grid.node_count())
        .map(|i| {
            let mut best = if sup { f64::NEG_INFINITY } else { f64::INFINITY };
            let mut seen = false;
            for j in fibre(grid, i, var) {
                if member(&displacement(grid, i, j, var)) {
                    seen = true;
                    let v = values[j];
                    if (sup && v > best) || (!sup && v < best) {
                        best = v;
                    }
                }
            }
            assert!(seen, "center must be in its own ball");
            best
        })
        .collect()
}

pub fn ball_member(metric: Metric, radius: f64) -> impl Fn(&[f64]) -> bool {
    move |d: &[f64]| match metric {
        Metric::Linf => d.iter().all(|t| t.abs() < radius),
        Metric::L2 => d.iter().fold(0.0, |s, t| s + t * t).sqrt() < radius,
    }
}

/// Exhaustive open-ball envelope.
pub fn ball_oracle(f: &SampledFunction, var: Variable, sup: bool, radius: f64) -> Vec<f64> {
    scan(
        f.grid(),
        f.values(),
        var,
        sup,
        ball_member(f.metric().factor(var), radius),
    )
}

/// Exhaustive extremum over `y + W` in the second factor.
pub fn structuring_oracle(f: &SampledFunction, w: &StructuringSet, sup: bool) -> Vec<f64> {
    let grid = f.grid();
    match w.kind() {
        StructuringKind::Box { half_widths } => scan(grid, f.values(), Variable::Second, sup, |d| {
            d.iter().zip(half_widths).all(|(t, h)| t.abs() < *h)
        }),
        StructuringKind::Ellipsoid { semi_axes } => scan(grid, f.values(), Variable::Second, sup, |d| {
            d.iter().zip(semi_axes).fold(0.0, |s, (t, a)| s + (t / a) * (t / a)) < 1.0
        }),
        StructuringKind::Offsets { offsets } => {
            let axes: Vec<usize> = grid.factor_range(Variable::Second).collect();
            let tols: Vec<f64> = axes.iter().map(|&k| OFFSET_RTOL * grid.axis(k).extent()).collect();
            (0..grid.node_count())
                .map(|i| {
                    let pi = grid.node_point(i);
                    let mut best = if sup { f64::NEG_INFINITY } else { f64::INFINITY };
                    for j in fibre(grid, i, Variable::Second) {
                        let pj = grid.node_point(j);
                        let hit = offsets.iter().any(|v| {
                            axes.iter()
                                .enumerate()
                                .all(|(m, &k)| (pj[k] - (pi[k] + v[m])).abs() <= tols[m])
                        });
                        if hit {
                            let v = f.values()[j];
                            best = if sup { best.max(v) } else { best.min(v) };
                        }
                    }
                    best
                })
                .collect()
        }
    }
}

/// Closed-form inf over `(x0 - r, x0 + r)` of `[x0 > 0]`, restricted to grid nodes.
pub fn step_lsc_inf(coords: &[f64], i: usize, r: f64) -> f64 {
    let any_nonpositive = coords.iter().any(|&c| (c - coords[i]).abs() < r && c <= 0.0);
    if any_nonpositive {
        0.0
    } else {
        1.0
    }
}

/// Closed-form sup of `-[y0 > 0]` over the open ball, restricted to grid nodes.
pub fn neg_step_sup(coords: &[f64], i: usize, r: f64) -> f64 {
    let any_nonpositive = coords.iter().any(|&c| (c - coords[i]).abs() < r && c <= 0.0);
    if any_nonpositive {
        0.0
    } else {
        -1.0
    }
}

pub fn random_axis(rng: &mut impl Rng, len: usize, uniform: bool) -> AxisGrid {
    let a = rng.gen_range(-3.0..1.0);
    let b = a + rng.gen_range(0.5..4.0);
    if uniform || len < 3 {
        return AxisGrid::linspace(a, b, len).unwrap();
    }
    let mut c: Vec<f64> = (0..len).map(|_| rng.gen_range(a..b)).collect();
    c.sort_by(f64::total_cmp);
    c.dedup();
    while c.len() < 2 {
        c.push(c[c.len() - 1] + 1.0);
    }
    AxisGrid::new(c).unwrap()
}

/// Random product grid with at most 64×64 nodes. Factors have one axis
/// most of the time and two otherwise; axes are uniform about half the time.
pub fn random_grid(rng: &mut impl Rng) -> ProductGrid {
    let x = random_factor(rng);
    let y = random_factor(rng);
    ProductGrid::new(x, y).unwrap()
}

fn random_factor(rng: &mut impl Rng) -> Vec<AxisGrid> {
    if rng.gen_bool(0.25) {
        (0..2)
            .map(|_| {
                let n = rng.gen_range(2..=8);
                let u = rng.gen_bool(0.5);
                random_axis(rng, n, u)
            })
            .collect()
    } else {
        let n = rng.gen_range(2..=64);
        let u = rng.gen_bool(0.5);
        vec![random_axis(rng, n, u)]
    }
}

pub fn random_metric(rng: &mut impl Rng) -> MetricSpec {
    let m = |b: bool| if b { Metric::Linf } else { Metric::L2 };
    MetricSpec::new(m(rng.gen_bool(0.5)), m(rng.gen_bool(0.5)))
}

/// Values with plenty of ties (small integers) or continuous noise.
pub fn random_values(rng: &mut impl Rng, n: usize) -> Vec<f64> {
    if rng.gen_bool(0.5) {
        let d = Uniform::new_inclusive(-3i32, 3);
        (0..n).map(|_| d.sample(rng) as f64).collect()
    } else {
        (0..n).map(|_| rng.gen_range(-10.0..10.0)).collect()
    }
}

pub fn random_function(rng: &mut impl Rng) -> SampledFunction {
    let grid = random_grid(rng);
    let metric = random_metric(rng);
    let values = random_values(rng, grid.node_count());
    SampledFunction::new(grid, metric, values).unwrap()
}

/// Radius drawn log-uniformly between a fraction of the smallest spacing and the extent.
pub fn random_radius(rng: &mut impl Rng, grid: &ProductGrid, var: Variable) -> f64 {
    let lo = 0.3
        * grid
            .factor(var)
            .iter()
            .map(|a| a.min_spacing())
            .fold(f64::INFINITY, f64::min);
    let hi = 1.2 * grid.factor_max_extent(var);
    (rng.gen_range(lo.ln()..hi.ln())).exp()
}

/// Random balanced structuring set matching the second factor.
pub fn random_structuring(rng: &mut impl Rng, grid: &ProductGrid) -> StructuringSet {
    let axes = grid.y_axes();
    let widths: Vec<f64> = axes
        .iter()
        .map(|a| rng.gen_range(0.3 * a.min_spacing()..0.8 * a.extent()))
        .collect();
    match rng.gen_range(0..3) {
        0 => StructuringSet::boxed(widths).unwrap(),
        1 => StructuringSet::ellipsoid(widths).unwrap(),
        _ => {
            let mut offsets = vec![vec![0.0; axes.len()]];
            for _ in 0..rng.gen_range(0..4) {
                // node-to-node displacements so that some offsets actually land on nodes
                let v: Vec<f64> = axes
                    .iter()
                    .map(|a| {
                        let c = a.coords();
                        c[rng.gen_range(0..c.len())] - c[rng.gen_range(0..c.len())]
                    })
                    .collect();
                offsets.push(v.iter().map(|t| -t).collect());
                offsets.push(v);
            }
            StructuringSet::offsets(offsets).unwrap()
        }
    }
}

/// Sliding extremum over `{j : |c_j - c_i| < r}` by expanding from `i`;
/// ties keep the largest index, matching the library.
pub fn window_scan(values: &[f64], coords: &[f64], r: f64, sup: bool) -> Vec<f64> {
    let n = values.len();
    (0..n)
        .map(|i| {
            let mut lo = i;
            while lo > 0 && (coords[lo - 1] - coords[i]).abs() < r {
                lo -= 1;
            }
            let mut hi = i;
            while hi + 1 < n && (coords[hi + 1] - coords[i]).abs() < r {
                hi += 1;
            }
            let mut best = values[lo];
            for &v in &values[lo + 1..=hi] {
                if (sup && v >= best) || (!sup && v <= best) {
                    best = v;
                }
            }
            best
        })
        .collect()
}

pub fn bits(v: &[f64]) -> Vec<u64> {
    v.iter().map(|x| x.to_bits()).collect()
}
