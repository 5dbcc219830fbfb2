//! Monotone envelope sequences, continuous insertion and truncation.
//!
//! For radii `α_n = ρ / n` the sequence holds
//!
//! ```text
//! lower_n = m¹_{α_n} f   (inf over the x-ball)
//! upper_n = M²_{α_n} f   (sup over the y-ball)
//! inserted_n = (lower_n + upper_n) / 2
//! ```
//!
//! Shrinking open balls are nested, so `lower_n` rises and `upper_n` falls
//! with `n`, both bracketing `f`. The insertion is continuous under
//! multilinear interpolation and sits between the two columns at every node.

use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::envelope::{ball_inf_first, ball_sup_second};
use crate::error::{Error, NodeIndex, Result};
use crate::function::SampledFunction;
use crate::grid::ProductGrid;
use crate::io;

/// Default radius scale: half the largest axis extent.
pub fn default_rho(grid: &ProductGrid) -> f64 {
    0.5 * grid.max_extent()
}

#[derive(Debug, Clone)]
pub struct EnvelopeStep {
    pub n: usize,
    pub radius: f64,
    pub lower: SampledFunction,
    pub upper: SampledFunction,
    pub inserted: SampledFunction,
}

#[derive(Debug, Clone)]
pub struct EnvelopeSequence {
    base: SampledFunction,
    rho: f64,
    steps: Vec<EnvelopeStep>,
}

fn check_steps(n_steps: usize, rho: f64) -> Result<()> {
    if n_steps == 0 {
        return Err(Error::invalid("n", "must be at least 1"));
    }
    if !(rho.is_finite() && rho > 0.0) {
        return Err(Error::invalid("rho", format!("must be positive and finite, got {rho}")));
    }
    Ok(())
}

/// Builds steps `n = 1..=n_steps` with radii `rho / n`.
pub fn envelope_sequence(f: &SampledFunction, n_steps: usize, rho: f64) -> Result<EnvelopeSequence> {
    check_steps(n_steps, rho)?;
    let steps = (1..=n_steps)
        .into_par_iter()
        .map(|n| {
            let radius = rho / n as f64;
            let lower = ball_inf_first(f, radius)?.output;
            let upper = ball_sup_second(f, radius)?.output;
            let inserted = hahn_insert(&lower, &upper)?;
            Ok(EnvelopeStep {
                n,
                radius,
                lower,
                upper,
                inserted,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(EnvelopeSequence {
        base: f.clone(),
        rho,
        steps,
    })
}

impl EnvelopeSequence {
    /// Assembles a sequence from stored parts and checks every invariant.
    pub fn from_parts(base: SampledFunction, rho: f64, steps: Vec<EnvelopeStep>) -> Result<Self> {
        check_steps(steps.len(), rho)?;
        for (k, s) in steps.iter().enumerate() {
            if s.n != k + 1 {
                return Err(Error::Invariant(format!("step {} stored at position {}", s.n, k + 1)));
            }
            for g in [&s.lower, &s.upper, &s.inserted] {
                if !g.same_domain(&base) {
                    return Err(Error::GridMismatch);
                }
            }
        }
        let seq = Self { base, rho, steps };
        seq.check_invariants()?;
        Ok(seq)
    }

    pub fn base(&self) -> &SampledFunction {
        &self.base
    }

    pub fn rho(&self) -> f64 {
        self.rho
    }

    pub fn steps(&self) -> &[EnvelopeStep] {
        &self.steps
    }

    pub fn last(&self) -> &EnvelopeStep {
        self.steps.last().expect("at least one step")
    }

    /// Sandwich at every step and monotone columns, all exact.
    pub fn check_invariants(&self) -> Result<()> {
        let grid = self.base.grid();
        let node = |i| NodeIndex(grid.multi_index(i));
        let f = self.base.values();
        for s in &self.steps {
            let (lo, up, ins) = (s.lower.values(), s.upper.values(), s.inserted.values());
            for i in 0..f.len() {
                if !(lo[i] <= f[i] && f[i] <= up[i]) {
                    return Err(Error::Invariant(format!(
                        "step {}: lower <= f <= upper fails at node {}",
                        s.n,
                        node(i)
                    )));
                }
                if !(lo[i] <= ins[i] && ins[i] <= up[i]) {
                    return Err(Error::Invariant(format!(
                        "step {}: inserted leaves [lower, upper] at node {}",
                        s.n,
                        node(i)
                    )));
                }
            }
        }
        for w in self.steps.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            for i in 0..f.len() {
                if b.lower.values()[i] < a.lower.values()[i] || b.upper.values()[i] > a.upper.values()[i] {
                    return Err(Error::Invariant(format!(
                        "columns not monotone between steps {} and {} at node {}",
                        a.n,
                        b.n,
                        node(i)
                    )));
                }
            }
        }
        Ok(())
    }

    /// Writes `base.json`, one file per step and column, and `manifest.json`.
    pub fn save_dir(&self, dir: impl AsRef<Path>) -> Result<()> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        io::save(&self.base, dir.join("base.json"))?;
        let mut entries = Vec::with_capacity(self.steps.len());
        for s in &self.steps {
            let file = |col: &str| format!("step_{:04}_{col}.json", s.n);
            let entry = ManifestStep {
                n: s.n,
                radius: s.radius,
                lower: file("lower"),
                upper: file("upper"),
                inserted: file("inserted"),
            };
            io::save(&s.lower, dir.join(&entry.lower))?;
            io::save(&s.upper, dir.join(&entry.upper))?;
            io::save(&s.inserted, dir.join(&entry.inserted))?;
            entries.push(entry);
        }
        let manifest = Manifest {
            format: MANIFEST_FORMAT.to_string(),
            rho: self.rho,
            base: "base.json".to_string(),
            steps: entries,
        };
        io::save_json(&manifest, dir.join("manifest.json"))
    }

    /// Reads a directory written by [`EnvelopeSequence::save_dir`].
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let manifest: Manifest = io::load_json(dir.join("manifest.json"))?;
        if manifest.format != MANIFEST_FORMAT {
            return Err(Error::Schema(format!("unknown manifest format `{}`", manifest.format)));
        }
        let base = io::load(dir.join(&manifest.base))?;
        let shared = base.shared_grid().clone();
        let reattach = |f: SampledFunction| -> Result<SampledFunction> {
            if !f.same_domain(&base) {
                return Err(Error::GridMismatch);
            }
            SampledFunction::on_shared(Arc::clone(&shared), f.metric(), f.into_values())
        };
        let steps = manifest
            .steps
            .iter()
            .map(|m| {
                Ok(EnvelopeStep {
                    n: m.n,
                    radius: m.radius,
                    lower: reattach(io::load(dir.join(&m.lower))?)?,
                    upper: reattach(io::load(dir.join(&m.upper))?)?,
                    inserted: reattach(io::load(dir.join(&m.inserted))?)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_parts(base, manifest.rho, steps)
    }
}

const MANIFEST_FORMAT: &str = "envkit-sequence-v1";

#[derive(Debug, Serialize, Deserialize)]
struct Manifest {
    format: String,
    rho: f64,
    base: String,
    steps: Vec<ManifestStep>,
}

#[derive(Debug, Serialize, Deserialize)]
struct ManifestStep {
    n: usize,
    radius: f64,
    lower: String,
    upper: String,
    inserted: String,
}

/// Continuous function between `lower` and `upper`: the nodal midpoint,
/// continued multilinearly between nodes.
pub fn hahn_insert(lower: &SampledFunction, upper: &SampledFunction) -> Result<SampledFunction> {
    if !lower.same_domain(upper) {
        return Err(Error::GridMismatch);
    }
    let (lo, up) = (lower.values(), upper.values());
    if let Some(i) = (0..lo.len()).find(|&i| lo[i] > up[i]) {
        return Err(Error::SandwichViolation {
            node: NodeIndex(lower.grid().multi_index(i)),
            lower: lo[i],
            upper: up[i],
        });
    }
    let mid = lo
        .iter()
        .zip(up)
        .map(|(&a, &b)| {
            let m = (a + b) * 0.5;
            if m.is_finite() {
                m
            } else {
                a * 0.5 + b * 0.5
            }
        })
        .collect();
    lower.with_values(mid)
}

/// Clamp to `[-level, level]`.
pub fn truncate(f: &SampledFunction, level: f64) -> Result<SampledFunction> {
    if !(level.is_finite() && level > 0.0) {
        return Err(Error::invalid(
            "level",
            format!("must be positive and finite, got {level}"),
        ));
    }
    let mut out = f.map(|v| v.max(-level).min(level))?;
    out.set_name(f.name().map(|n| format!("truncate({n}, {level})")));
    Ok(out)
}

/// `envelope_sequence(truncate(f, k), n_steps, rho)` for clamp levels `k = 1..=n_steps`.
pub fn truncated_sequence(f: &SampledFunction, n_steps: usize, rho: f64) -> Result<Vec<EnvelopeSequence>> {
    check_steps(n_steps, rho)?;
    (1..=n_steps)
        .map(|k| envelope_sequence(&truncate(f, k as f64)?, n_steps, rho))
        .collect()
}

/// Largest `|Δg| / Δc` over pairs of nodes adjacent along one axis.
pub fn nodal_lipschitz(g: &SampledFunction) -> f64 {
    let grid = g.grid();
    let v = g.values();
    let mut best: f64 = 0.0;
    for k in 0..grid.ndim() {
        let axis = grid.axis(k);
        let c = axis.coords();
        let stride = grid.strides()[k];
        let len = axis.len();
        for flat in 0..v.len() {
            let i = (flat / stride) % len;
            if i + 1 < len {
                let slope = (v[flat + stride] - v[flat]).abs() / (c[i + 1] - c[i]);
                best = best.max(slope);
            }
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum NodeStatus {
    Converged,
    Open,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StepGap {
    pub n: usize,
    pub radius: f64,
    pub max_gap: f64,
    pub mean_gap: f64,
    pub insertion_lipschitz: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceReport {
    pub tol: f64,
    pub per_n: Vec<StepGap>,
    /// `upper_N - lower_N` per node.
    pub per_node_gap: Vec<f64>,
    pub verdict_nodes: Vec<NodeStatus>,
    pub grid: Arc<ProductGrid>,
}

impl ConvergenceReport {
    pub fn converged_count(&self) -> usize {
        self.verdict_nodes
            .iter()
            .filter(|s| **s == NodeStatus::Converged)
            .count()
    }

    pub fn all_converged(&self) -> bool {
        self.converged_count() == self.verdict_nodes.len()
    }
}

fn gaps(step: &EnvelopeStep) -> Vec<f64> {
    step.upper
        .values()
        .iter()
        .zip(step.lower.values())
        .map(|(u, l)| u - l)
        .collect()
}

/// Gap statistics per step and a per-node verdict at the last step.
pub fn convergence_report(seq: &EnvelopeSequence, tol: f64) -> Result<ConvergenceReport> {
    if !(tol.is_finite() && tol >= 0.0) {
        return Err(Error::invalid(
            "tol",
            format!("must be finite and nonnegative, got {tol}"),
        ));
    }
    let per_n = seq
        .steps
        .par_iter()
        .map(|s| {
            let g = gaps(s);
            StepGap {
                n: s.n,
                radius: s.radius,
                max_gap: g.iter().fold(0.0, |m, &v| m.max(v)),
                mean_gap: g.iter().sum::<f64>() / g.len() as f64,
                insertion_lipschitz: nodal_lipschitz(&s.inserted),
            }
        })
        .collect();
    let per_node_gap = gaps(seq.last());
    let verdict_nodes = per_node_gap
        .iter()
        .map(|&g| {
            if g <= tol {
                NodeStatus::Converged
            } else {
                NodeStatus::Open
            }
        })
        .collect();
    Ok(ConvergenceReport {
        tol,
        per_n,
        per_node_gap,
        verdict_nodes,
        grid: seq.base.shared_grid().clone(),
    })
}
