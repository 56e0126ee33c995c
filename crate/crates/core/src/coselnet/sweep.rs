use std::io::Write;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::community::greedy_communities;
use super::graph::graph_from_counts;
use super::matrix::{coselection_counts, SelectionMatrix};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub tau_occ: u64,
    pub tau_cos: f64,
    pub n_nodes: usize,
    pub n_edges: usize,
    pub n_components: usize,
    pub n_communities: usize,
    pub modularity: f64,
}

/// Network statistics for every `(tau_occ, tau_cos)` grid cell, occ-major.
/// Cells whose graph has no edges report zero communities and modularity 0.
pub fn threshold_sweep(
    m: &SelectionMatrix,
    occ_grid: &[u64],
    cos_grid: &[f64],
) -> Result<Vec<SweepRow>> {
    if occ_grid.is_empty() || cos_grid.is_empty() {
        return Err(Error::Precondition("empty threshold grid".into()));
    }
    let counts = coselection_counts(m);
    let cells: Vec<(u64, f64)> = occ_grid
        .iter()
        .flat_map(|&o| cos_grid.iter().map(move |&c| (o, c)))
        .collect();
    cells
        .par_iter()
        .map(|&(tau_occ, tau_cos)| {
            let g = graph_from_counts(&counts, m.feature_ids(), tau_occ, tau_cos)?;
            let (n_communities, modularity) = if g.n_edges() == 0 {
                (0, 0.0)
            } else {
                let p = greedy_communities(&g)?;
                (p.n_communities, p.modularity)
            };
            Ok(SweepRow {
                tau_occ,
                tau_cos,
                n_nodes: g.n_nodes(),
                n_edges: g.n_edges(),
                n_components: g.n_components(),
                n_communities,
                modularity,
            })
        })
        .collect()
}

pub fn write_sweep_tsv<W: Write>(rows: &[SweepRow], mut w: W) -> std::io::Result<()> {
    writeln!(
        w,
        "tau_occ\ttau_cos\tn_nodes\tn_edges\tn_components\tn_communities\tmodularity"
    )?;
    for r in rows {
        writeln!(
            w,
            "{}\t{}\t{}\t{}\t{}\t{}\t{}",
            r.tau_occ, r.tau_cos, r.n_nodes, r.n_edges, r.n_components, r.n_communities, r.modularity
        )?;
    }
    Ok(())
}

pub fn save_sweep_tsv(rows: &[SweepRow], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = std::io::BufWriter::new(file);
    write_sweep_tsv(rows, &mut w)
        .and_then(|_| w.flush())
        .map_err(|e| Error::io(path, e))
}

/// Parses `a..b` (inclusive) or a comma list into occurrence thresholds.
pub fn parse_occ_grid(spec: &str) -> Result<Vec<u64>> {
    let bad = || Error::param("sweep", format!("cannot parse occurrence grid `{}`", spec));
    if let Some((a, b)) = spec.split_once("..") {
        let a: u64 = a.trim().parse().map_err(|_| bad())?;
        let b: u64 = b.trim().parse().map_err(|_| bad())?;
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    spec.split(',')
        .map(|s| s.trim().parse().map_err(|_| bad()))
        .collect()
}

/// Parses `a..b:step` (inclusive, step > 0) or a comma list into cosine
/// thresholds. Grid points are `a + i*step` rounded to 12 decimals.
pub fn parse_cos_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::param("sweep", format!("cannot parse cosine grid `{}`", spec));
    if let Some((range, step)) = spec.split_once(':') {
        let (a, b) = range.split_once("..").ok_or_else(bad)?;
        let a: f64 = a.trim().parse().map_err(|_| bad())?;
        let b: f64 = b.trim().parse().map_err(|_| bad())?;
        let step: f64 = step.trim().parse().map_err(|_| bad())?;
        if !(step > 0.0) || a > b {
            return Err(bad());
        }
        let n = ((b - a) / step + 1e-9).floor() as usize;
        return Ok((0..=n)
            .map(|i| ((a + i as f64 * step) * 1e12).round() / 1e12)
            .collect());
    }
    spec.split(',')
        .map(|s| s.trim().parse().map_err(|_| bad()))
        .collect()
}
