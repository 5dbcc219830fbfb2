//! CSV and JSON emitters. Floats use Rust's shortest round-trip formatting,
//! so output is byte-stable across runs.

use std::path::Path;

use serde::Serialize;

use crate::baire::{ConvergenceReport, NodeStatus};
use crate::error::{Error, Result};
use crate::io;
use crate::verify::{CertificationVerdict, DeficiencyProfile, ProfileMode, Property, RefinementStudy};

pub trait CsvReport {
    fn header(&self) -> Vec<String>;
    fn rows(&self) -> Result<Vec<Vec<String>>>;
}

/// Writes `report` to `path` atomically.
pub fn emit_csv(report: &dyn CsvReport, path: impl AsRef<Path>) -> Result<()> {
    let header = report.header();
    let rows = report.rows()?;
    io::write_atomic(path.as_ref(), |w| {
        let mut csv = csv::Writer::from_writer(w);
        csv.write_record(&header)?;
        for r in &rows {
            csv.write_record(r)?;
        }
        csv.flush().map_err(|e| Error::io(path.as_ref(), e))?;
        Ok(())
    })
}

fn strings(header: &[&str]) -> Vec<String> {
    header.iter().map(|s| s.to_string()).collect()
}

/// Per-step gap table: `n,max_gap,mean_gap,insertion_lipschitz`.
///
/// Refuses to emit when `max_gap` increases with `n`.
impl CsvReport for ConvergenceReport {
    fn header(&self) -> Vec<String> {
        strings(&["n", "max_gap", "mean_gap", "insertion_lipschitz"])
    }

    fn rows(&self) -> Result<Vec<Vec<String>>> {
        if let Some(w) = self.per_n.windows(2).find(|w| w[1].max_gap > w[0].max_gap) {
            return Err(Error::Invariant(format!(
                "max_gap rises from {} at n={} to {} at n={}",
                w[0].max_gap, w[0].n, w[1].max_gap, w[1].n
            )));
        }
        Ok(self
            .per_n
            .iter()
            .map(|g| {
                vec![
                    g.n.to_string(),
                    g.max_gap.to_string(),
                    g.mean_gap.to_string(),
                    g.insertion_lipschitz.to_string(),
                ]
            })
            .collect())
    }
}

/// Per-node table at the last step: one index column per axis, then `gap,status`.
pub struct NodeGapTable<'a>(pub &'a ConvergenceReport);

impl CsvReport for NodeGapTable<'_> {
    fn header(&self) -> Vec<String> {
        let g = &self.0.grid;
        (0..g.dx())
            .map(|k| format!("ix{k}"))
            .chain((0..g.dy()).map(|k| format!("iy{k}")))
            .chain(["gap".to_string(), "status".to_string()])
            .collect()
    }

    fn rows(&self) -> Result<Vec<Vec<String>>> {
        let r = self.0;
        Ok((0..r.per_node_gap.len())
            .map(|i| {
                let mut row: Vec<String> = r.grid.multi_index(i).iter().map(usize::to_string).collect();
                row.push(r.per_node_gap[i].to_string());
                row.push(
                    match r.verdict_nodes[i] {
                        NodeStatus::Converged => "converged",
                        NodeStatus::Open => "open",
                    }
                    .to_string(),
                );
                row
            })
            .collect())
    }
}

/// `radius,lsc_deficiency,usc_deficiency`, largest radius first.
impl CsvReport for DeficiencyProfile {
    fn header(&self) -> Vec<String> {
        strings(&["radius", "lsc_deficiency", "usc_deficiency"])
    }

    fn rows(&self) -> Result<Vec<Vec<String>>> {
        Ok(self
            .radii
            .iter()
            .zip(&self.lsc_deficiency)
            .zip(&self.usc_deficiency)
            .map(|((r, l), u)| vec![r.to_string(), l.to_string(), u.to_string()])
            .collect())
    }
}

impl CsvReport for RefinementStudy {
    fn header(&self) -> Vec<String> {
        strings(&[
            "level",
            "factor",
            "nodes",
            "lsc_first",
            "usc_first",
            "lsc_second",
            "usc_second",
            "envelope_max",
            "envelope_mean",
            "min_envelope_change",
        ])
    }

    fn rows(&self) -> Result<Vec<Vec<String>>> {
        Ok(self
            .rows
            .iter()
            .map(|r| {
                vec![
                    r.level.to_string(),
                    r.factor.to_string(),
                    r.nodes.to_string(),
                    r.lsc_first.to_string(),
                    r.usc_first.to_string(),
                    r.lsc_second.to_string(),
                    r.usc_second.to_string(),
                    r.envelope_max.to_string(),
                    r.envelope_mean.to_string(),
                    r.min_envelope_change.to_string(),
                ]
            })
            .collect())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerdictRecord {
    pub passed: bool,
    pub property: Property,
    pub mode: ProfileMode,
    pub witness_node: Option<Vec<usize>>,
    pub witness_radius: Option<f64>,
    pub deficiency: f64,
    pub tol: f64,
    pub resolution: &'static str,
    pub refinement: usize,
}

impl VerdictRecord {
    pub fn new(profile: &DeficiencyProfile, verdict: &CertificationVerdict) -> Self {
        Self {
            passed: verdict.passed,
            property: verdict.property,
            mode: profile.mode,
            witness_node: verdict.witness.as_ref().map(|w| w.node.clone()),
            witness_radius: verdict.witness.as_ref().map(|w| w.radius),
            deficiency: verdict.trend,
            tol: verdict.tol,
            resolution: if profile.refinement > 1 {
                "refined"
            } else {
                "single_grid"
            },
            refinement: profile.refinement,
        }
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        io::save_json(self, path)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baire::{convergence_report, envelope_sequence};
    use crate::catalog::from_catalog;
    use crate::function::MetricSpec;
    use crate::grid::{AxisGrid, ProductGrid};

    #[test]
    fn rising_gap_is_refused() {
        let a = AxisGrid::linspace(-1.0, 1.0, 9).unwrap();
        let g = ProductGrid::new(vec![a.clone()], vec![a]).unwrap();
        let f = from_catalog("mixed_step", &g, MetricSpec::LINF).unwrap();
        let seq = envelope_sequence(&f, 3, 1.0).unwrap();
        let mut rep = convergence_report(&seq, 1e-9).unwrap();
        assert!(rep.rows().is_ok());
        rep.per_n[2].max_gap = rep.per_n[0].max_gap + 1.0;
        assert!(matches!(rep.rows(), Err(Error::Invariant(_))));
        let nodes = NodeGapTable(&rep);
        assert_eq!(nodes.header(), vec!["ix0", "iy0", "gap", "status"]);
        assert_eq!(nodes.rows().unwrap().len(), 81);
    }
}
