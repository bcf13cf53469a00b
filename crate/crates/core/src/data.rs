//! Finite samples of discrete variables: container, seeded sampling from an
//! exact distribution, CSV round-trips, and the plug-in empirical law.
//!
//! Rows store state indices (`0..card`) column-per-variable. A dataset can
//! be written to CSV with a JSON schema sidecar carrying the declared
//! cardinalities; reading without a schema infers each cardinality as one
//! plus the largest observed state.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dist::{DiscreteDistribution, VariableMeta};
use crate::{Error, Result};

/// A finite sample of jointly observed discrete variables.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    variables: Vec<VariableMeta>,
    index: BTreeMap<String, usize>,
    rows: Vec<Vec<usize>>,
}

impl Dataset {
    pub fn new(variables: Vec<VariableMeta>, rows: Vec<Vec<usize>>) -> Result<Self> {
        if variables.is_empty() {
            return Err(Error::InvalidDataset("no variables declared".into()));
        }
        let mut index = BTreeMap::new();
        for (i, v) in variables.iter().enumerate() {
            if v.id.is_empty() {
                return Err(Error::InvalidDataset("empty variable id".into()));
            }
            if v.card == 0 {
                return Err(Error::InvalidDataset(format!(
                    "variable `{}` has zero states",
                    v.id
                )));
            }
            if index.insert(v.id.clone(), i).is_some() {
                return Err(Error::DuplicateVariable(v.id.clone()));
            }
        }
        for (r, row) in rows.iter().enumerate() {
            if row.len() != variables.len() {
                return Err(Error::InvalidDataset(format!(
                    "row {r} has {} values, expected {}",
                    row.len(),
                    variables.len()
                )));
            }
            for (v, &s) in variables.iter().zip(row) {
                if s >= v.card {
                    return Err(Error::InvalidDataset(format!(
                        "row {r}: state {s} out of range for `{}` (card {})",
                        v.id, v.card
                    )));
                }
            }
        }
        Ok(Dataset { variables, index, rows })
    }

    pub fn variables(&self) -> &[VariableMeta] {
        &self.variables
    }

    pub fn variable_ids(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.id.clone()).collect()
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn rows(&self) -> &[Vec<usize>] {
        &self.rows
    }

    pub fn position(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownVariable(id.to_string()))
    }

    pub fn positions<S: AsRef<str>>(&self, ids: &[S]) -> Result<Vec<usize>> {
        ids.iter().map(|s| self.position(s.as_ref())).collect()
    }

    pub fn cardinality(&self, id: &str) -> Result<usize> {
        Ok(self.variables[self.position(id)?].card)
    }

    /// Relative frequencies as an exact distribution over the same space.
    pub fn empirical_distribution(&self) -> Result<DiscreteDistribution> {
        if self.rows.is_empty() {
            return Err(Error::InvalidDataset(
                "cannot take the empirical law of an empty sample".into(),
            ));
        }
        let n = self.rows.len() as f64;
        let mut counts: BTreeMap<Vec<usize>, usize> = BTreeMap::new();
        for row in &self.rows {
            *counts.entry(row.clone()).or_insert(0) += 1;
        }
        DiscreteDistribution::new(
            self.variables.clone(),
            counts.into_iter().map(|(k, c)| (k, c as f64 / n)),
        )
    }

    /// Writes one header row of variable ids followed by the state indices.
    pub fn write_csv<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(self.variables.iter().map(|v| v.id.as_str()))?;
        for row in &self.rows {
            w.write_record(row.iter().map(|s| s.to_string()))?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads a CSV written by [`Dataset::write_csv`]. With `schema: None`
    /// the cardinalities are inferred from the data.
    pub fn read_csv<P: AsRef<Path>>(
        path: P,
        schema: Option<Vec<VariableMeta>>,
    ) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let ids: Vec<String> =
            r.headers()?.iter().map(|h| h.trim().to_string()).collect();
        if ids.is_empty() || ids.iter().any(|h| h.is_empty()) {
            return Err(Error::InvalidDataset("missing or empty header".into()));
        }
        let mut rows: Vec<Vec<usize>> = Vec::new();
        for rec in r.records() {
            let rec = rec?;
            let row: Vec<usize> = rec
                .iter()
                .map(|f| {
                    f.trim().parse::<usize>().map_err(|_| {
                        Error::InvalidDataset(format!("non-integer cell `{f}`"))
                    })
                })
                .collect::<Result<_>>()?;
            rows.push(row);
        }
        let variables = match schema {
            Some(vars) => {
                let declared: Vec<String> =
                    vars.iter().map(|v| v.id.clone()).collect();
                if declared != ids {
                    return Err(Error::InvalidDataset(format!(
                        "schema ids {declared:?} do not match header {ids:?}"
                    )));
                }
                vars
            }
            None => ids
                .iter()
                .enumerate()
                .map(|(i, id)| {
                    let max = rows.iter().map(|r| r[i]).max().unwrap_or(0);
                    VariableMeta::new(id.clone(), max + 1)
                })
                .collect(),
        };
        Dataset::new(variables, rows)
    }

    /// Writes the variables (ids and cardinalities) as JSON.
    pub fn write_schema<P: AsRef<Path>>(&self, path: P) -> Result<()> {
        let text = serde_json::to_string_pretty(&self.variables)?;
        std::fs::write(path, text + "\n")?;
        Ok(())
    }

    pub fn read_schema<P: AsRef<Path>>(path: P) -> Result<Vec<VariableMeta>> {
        let text = std::fs::read_to_string(path)?;
        Ok(serde_json::from_str(&text)?)
    }
}

/// Draws `n` i.i.d. rows from `d`, deterministically in `seed`.
pub fn sample_dataset(
    d: &DiscreteDistribution,
    n: usize,
    seed: u64,
) -> Result<Dataset> {
    let mut cumulative: Vec<(&Vec<usize>, f64)> = Vec::with_capacity(d.support_len());
    let mut acc = 0.0;
    for (key, p) in d.iter() {
        acc += p;
        cumulative.push((key, acc));
    }
    let total = acc;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(n);
    for _ in 0..n {
        let u = rng.random::<f64>() * total;
        let idx = cumulative.partition_point(|&(_, c)| c < u);
        let idx = idx.min(cumulative.len() - 1);
        rows.push(cumulative[idx].0.clone());
    }
    Dataset::new(d.variables().to_vec(), rows)
}
