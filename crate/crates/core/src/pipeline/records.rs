use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::dataio::GenotypeDataset;
use crate::error::{Error, Result};
use crate::gasel::RunResult;

/// One line of a subsets JSONL file: the best subset of one GA run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubsetRecord {
    pub run: usize,
    pub seed: u64,
    pub fitness: f64,
    pub features: Vec<String>,
    #[serde(default)]
    pub generations: usize,
    #[serde(default)]
    pub evaluations: usize,
    #[serde(default)]
    pub cache_hits: usize,
}

impl SubsetRecord {
    pub fn from_run(run: usize, r: &RunResult, dataset: &GenotypeDataset) -> Self {
        Self {
            run,
            seed: r.seed,
            fitness: r.best_fitness,
            features: r
                .best_subset
                .iter()
                .map(|&j| dataset.feature_ids()[j].clone())
                .collect(),
            generations: r.generations_executed,
            evaluations: r.evaluations_count,
            cache_hits: r.cache_hits,
        }
    }
}

pub fn write_subsets_jsonl<W: Write>(records: &[SubsetRecord], mut w: W) -> Result<()> {
    for r in records {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n").map_err(|e| Error::io("<subsets>", e))?;
    }
    Ok(())
}

pub fn read_subsets_jsonl(path: &Path) -> Result<Vec<SubsetRecord>> {
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: SubsetRecord = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: i + 1,
            column: e.column(),
            message: e.to_string(),
        })?;
        out.push(rec);
    }
    if out.is_empty() {
        return Err(Error::Precondition(format!("{}: no subsets", path.display())));
    }
    Ok(out)
}

/// Feature ids in order of first appearance across the records.
pub fn feature_universe(records: &[SubsetRecord]) -> Vec<String> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for r in records {
        for f in &r.features {
            if seen.insert(f.as_str()) {
                out.push(f.clone());
            }
        }
    }
    out
}
