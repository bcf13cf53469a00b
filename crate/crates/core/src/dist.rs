//! Sparse joint probability tables over named finite-state variables.
//!
//! A [`DiscreteDistribution`] stores only the assignments with positive
//! probability; absent assignments have probability zero. State indices are
//! `0..card` per variable and table keys are full assignments in declaration
//! order, which keeps marginalization and grouped summation cheap and
//! deterministic.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::{Error, Result, DEFAULT_NORMALIZATION_TOL, ZERO_CUTOFF};

/// A named variable together with the number of states it can take.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VariableMeta {
    pub id: String,
    pub card: usize,
}

impl VariableMeta {
    pub fn new(id: impl Into<String>, card: usize) -> Self {
        VariableMeta { id: id.into(), card }
    }
}

/// A (possibly partial) assignment of state indices to variables by id.
pub type Assignment = BTreeMap<String, usize>;

/// An exact joint distribution over a fixed, ordered set of variables.
///
/// Invariants enforced at construction: variable ids are unique and
/// non-empty, every table key is a full in-range assignment, probabilities
/// are nonnegative, entries below [`ZERO_CUTOFF`](crate::ZERO_CUTOFF) are
/// dropped, and the total mass is one up to the normalization tolerance.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    variables: Vec<VariableMeta>,
    index: BTreeMap<String, usize>,
    table: BTreeMap<Vec<usize>, f64>,
}

impl DiscreteDistribution {
    /// Builds a distribution from `(full assignment key, probability)`
    /// pairs. Duplicate keys accumulate.
    pub fn new(
        variables: Vec<VariableMeta>,
        entries: impl IntoIterator<Item = (Vec<usize>, f64)>,
    ) -> Result<Self> {
        if variables.is_empty() {
            return Err(Error::InvalidDistribution("no variables".into()));
        }
        let mut index = BTreeMap::new();
        for (i, v) in variables.iter().enumerate() {
            if v.id.is_empty() {
                return Err(Error::InvalidDistribution("empty variable id".into()));
            }
            if v.card == 0 {
                return Err(Error::InvalidDistribution(format!(
                    "variable `{}` has zero states",
                    v.id
                )));
            }
            if index.insert(v.id.clone(), i).is_some() {
                return Err(Error::DuplicateVariable(v.id.clone()));
            }
        }
        let mut table: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for (key, p) in entries {
            if key.len() != variables.len() {
                return Err(Error::InvalidDistribution(format!(
                    "assignment key has {} entries, expected {}",
                    key.len(),
                    variables.len()
                )));
            }
            for (pos, (&s, v)) in key.iter().zip(&variables).enumerate() {
                if s >= v.card {
                    return Err(Error::InvalidDistribution(format!(
                        "state {s} out of range for `{}` (card {}) at position {pos}",
                        v.id, v.card
                    )));
                }
            }
            if p < 0.0 || !p.is_finite() {
                return Err(Error::InvalidDistribution(format!(
                    "probability {p} for key {key:?}"
                )));
            }
            *table.entry(key).or_insert(0.0) += p;
        }
        table.retain(|_, p| *p >= ZERO_CUTOFF);
        let total: f64 = table.values().sum();
        if (total - 1.0).abs() > DEFAULT_NORMALIZATION_TOL {
            return Err(Error::InvalidDistribution(format!(
                "probabilities sum to {total}, expected 1"
            )));
        }
        Ok(DiscreteDistribution { variables, index, table })
    }

    /// Builds a distribution from `(assignment-by-id, probability)` pairs.
    pub fn from_assignments(
        variables: Vec<VariableMeta>,
        entries: impl IntoIterator<Item = (Assignment, f64)>,
    ) -> Result<Self> {
        let ids: Vec<String> = variables.iter().map(|v| v.id.clone()).collect();
        let mut keyed = Vec::new();
        for (a, p) in entries {
            let mut key = Vec::with_capacity(ids.len());
            for id in &ids {
                match a.get(id) {
                    Some(&s) => key.push(s),
                    None => {
                        return Err(Error::InvalidDistribution(format!(
                            "assignment missing variable `{id}`"
                        )))
                    }
                }
            }
            for name in a.keys() {
                if !ids.contains(name) {
                    return Err(Error::UnknownVariable(name.clone()));
                }
            }
            keyed.push((key, p));
        }
        Self::new(variables, keyed)
    }

    pub fn variables(&self) -> &[VariableMeta] {
        &self.variables
    }

    pub fn variable_ids(&self) -> Vec<String> {
        self.variables.iter().map(|v| v.id.clone()).collect()
    }

    pub fn cardinality(&self, id: &str) -> Result<usize> {
        self.position(id).map(|i| self.variables[i].card)
    }

    /// Number of positive-probability assignments.
    pub fn support_len(&self) -> usize {
        self.table.len()
    }

    /// Iterates over `(full key, probability)` in deterministic key order.
    pub fn iter(&self) -> impl Iterator<Item = (&Vec<usize>, f64)> {
        self.table.iter().map(|(k, &p)| (k, p))
    }

    /// Probability of one full assignment key (zero when absent).
    pub fn prob_key(&self, key: &[usize]) -> f64 {
        self.table.get(key).copied().unwrap_or(0.0)
    }

    /// Position of `id` in the variable ordering.
    pub fn position(&self, id: &str) -> Result<usize> {
        self.index
            .get(id)
            .copied()
            .ok_or_else(|| Error::UnknownVariable(id.to_string()))
    }

    /// Positions of several ids, in the order given.
    pub fn positions<S: AsRef<str>>(&self, ids: &[S]) -> Result<Vec<usize>> {
        ids.iter().map(|id| self.position(id.as_ref())).collect()
    }

    /// Marginal probability of a partial assignment (sum over all matching
    /// table entries).
    pub fn prob_of(&self, partial: &Assignment) -> Result<f64> {
        let mut positions = Vec::with_capacity(partial.len());
        for (id, &s) in partial {
            let pos = self.position(id)?;
            if s >= self.variables[pos].card {
                return Err(Error::InvalidDistribution(format!(
                    "state {s} out of range for `{id}`"
                )));
            }
            positions.push((pos, s));
        }
        Ok(self
            .table
            .iter()
            .filter(|(key, _)| positions.iter().all(|&(pos, s)| key[pos] == s))
            .map(|(_, &p)| p)
            .sum())
    }

    /// Converts a full key to an assignment map.
    pub fn key_to_assignment(&self, key: &[usize]) -> Assignment {
        self.variables
            .iter()
            .zip(key)
            .map(|(v, &s)| (v.id.clone(), s))
            .collect()
    }

    /// Grouped probability sums keyed by the sub-assignment at `positions`.
    pub(crate) fn grouped(&self, positions: &[usize]) -> BTreeMap<Vec<usize>, f64> {
        let mut out: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
        for (key, &p) in &self.table {
            let sub: Vec<usize> = positions.iter().map(|&i| key[i]).collect();
            *out.entry(sub).or_insert(0.0) += p;
        }
        out
    }

    /// Marginal distribution over `ids`, preserving this distribution's
    /// variable order (the order of `ids` does not matter).
    pub fn marginal<S: AsRef<str>>(&self, ids: &[S]) -> Result<DiscreteDistribution> {
        let mut requested = BTreeSet::new();
        for id in ids {
            self.position(id.as_ref())?;
            if !requested.insert(id.as_ref().to_string()) {
                return Err(Error::DuplicateVariable(id.as_ref().to_string()));
            }
        }
        if requested.is_empty() {
            return Err(Error::InvalidDistribution(
                "marginal over no variables".into(),
            ));
        }
        let positions: Vec<usize> = self
            .variables
            .iter()
            .enumerate()
            .filter(|(_, v)| requested.contains(&v.id))
            .map(|(i, _)| i)
            .collect();
        let variables: Vec<VariableMeta> =
            positions.iter().map(|&i| self.variables[i].clone()).collect();
        let table = self.grouped(&positions);
        DiscreteDistribution::new(variables, table)
    }

    /// Checks that `other` ranges over the same variable sequence.
    fn check_same_space(&self, other: &DiscreteDistribution) -> Result<()> {
        if self.variables != other.variables {
            return Err(Error::InvalidDistribution(
                "distributions range over different variable spaces".into(),
            ));
        }
        Ok(())
    }
}

/// Total variation distance between two distributions over the same
/// variable space: half the absolute mass difference.
pub fn total_variation(a: &DiscreteDistribution, b: &DiscreteDistribution) -> Result<f64> {
    a.check_same_space(b)?;
    let keys: BTreeSet<&Vec<usize>> = a.table.keys().chain(b.table.keys()).collect();
    let sum: f64 = keys
        .into_iter()
        .map(|k| (a.prob_key(k) - b.prob_key(k)).abs())
        .sum();
    Ok(sum / 2.0)
}

#[derive(Serialize, Deserialize)]
struct TableEntryJson {
    a: Assignment,
    p: f64,
}

#[derive(Serialize, Deserialize)]
struct DistJson {
    variables: Vec<VariableMeta>,
    table: Vec<TableEntryJson>,
}

impl DiscreteDistribution {
    /// Serializes to the on-disk JSON form: variable list plus an explicit
    /// table of positive-probability assignments.
    pub fn to_json(&self) -> serde_json::Value {
        let doc = DistJson {
            variables: self.variables.clone(),
            table: self
                .table
                .iter()
                .map(|(k, &p)| TableEntryJson { a: self.key_to_assignment(k), p })
                .collect(),
        };
        serde_json::to_value(doc).expect("distribution serialization cannot fail")
    }

    pub fn from_json_str(s: &str) -> Result<Self> {
        let doc: DistJson = serde_json::from_str(s)?;
        Self::from_assignments(
            doc.variables,
            doc.table.into_iter().map(|e| (e.a, e.p)),
        )
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json_str(&std::fs::read_to_string(path)?)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut text = serde_json::to_string_pretty(&self.to_json())?;
        text.push('\n');
        std::fs::write(path, text)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn coin_pair() -> DiscreteDistribution {
        // X fair coin, Y = X with probability 0.9.
        DiscreteDistribution::new(
            vec![VariableMeta::new("X", 2), VariableMeta::new("Y", 2)],
            vec![
                (vec![0, 0], 0.45),
                (vec![0, 1], 0.05),
                (vec![1, 0], 0.05),
                (vec![1, 1], 0.45),
            ],
        )
        .unwrap()
    }

    #[test]
    fn rejects_duplicate_variable_ids() {
        let err = DiscreteDistribution::new(
            vec![VariableMeta::new("X", 2), VariableMeta::new("X", 2)],
            vec![(vec![0, 0], 1.0)],
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateVariable(_)));
    }

    #[test]
    fn rejects_out_of_range_state() {
        let err = DiscreteDistribution::new(
            vec![VariableMeta::new("X", 2)],
            vec![(vec![2], 1.0)],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidDistribution(_)));
    }

    #[test]
    fn rejects_unnormalized_table() {
        let err = DiscreteDistribution::new(
            vec![VariableMeta::new("X", 2)],
            vec![(vec![0], 0.6), (vec![1], 0.6)],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidDistribution(_)));
    }

    #[test]
    fn rejects_negative_probability() {
        let err = DiscreteDistribution::new(
            vec![VariableMeta::new("X", 2)],
            vec![(vec![0], 1.2), (vec![1], -0.2)],
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidDistribution(_)));
    }

    #[test]
    fn duplicate_keys_accumulate() {
        let d = DiscreteDistribution::new(
            vec![VariableMeta::new("X", 2)],
            vec![(vec![0], 0.25), (vec![0], 0.25), (vec![1], 0.5)],
        )
        .unwrap();
        assert!((d.prob_key(&[0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn marginal_matches_hand_summation() {
        let d = coin_pair();
        let mx = d.marginal(&["X"]).unwrap();
        assert_eq!(mx.variables().len(), 1);
        assert!((mx.prob_key(&[0]) - 0.5).abs() < 1e-15);
        assert!((mx.prob_key(&[1]) - 0.5).abs() < 1e-15);
        let my = d.marginal(&["Y"]).unwrap();
        assert!((my.prob_key(&[0]) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn marginal_over_all_variables_is_identity() {
        let d = coin_pair();
        let m = d.marginal(&["Y", "X"]).unwrap();
        assert_eq!(m, d);
    }

    #[test]
    fn marginal_rejects_unknown_variable() {
        let d = coin_pair();
        assert!(matches!(
            d.marginal(&["Z"]).unwrap_err(),
            Error::UnknownVariable(_)
        ));
    }

    #[test]
    fn partial_assignment_probability_sums_matches() {
        let d = coin_pair();
        let mut a = Assignment::new();
        a.insert("Y".into(), 0);
        assert!((d.prob_of(&a).unwrap() - 0.5).abs() < 1e-15);
        a.insert("X".into(), 1);
        assert!((d.prob_of(&a).unwrap() - 0.05).abs() < 1e-15);
    }

    #[test]
    fn total_variation_of_identical_tables_is_zero() {
        let d = coin_pair();
        assert_eq!(total_variation(&d, &d).unwrap(), 0.0);
    }

    #[test]
    fn total_variation_matches_hand_value() {
        let d = coin_pair();
        let e = DiscreteDistribution::new(
            vec![VariableMeta::new("X", 2), VariableMeta::new("Y", 2)],
            vec![
                (vec![0, 0], 0.25),
                (vec![0, 1], 0.25),
                (vec![1, 0], 0.25),
                (vec![1, 1], 0.25),
            ],
        )
        .unwrap();
        // |0.45-0.25|*2 + |0.05-0.25|*2 = 0.8, halved = 0.4.
        assert!((total_variation(&d, &e).unwrap() - 0.4).abs() < 1e-15);
    }

    #[test]
    fn total_variation_requires_same_space() {
        let d = coin_pair();
        let e = DiscreteDistribution::new(
            vec![VariableMeta::new("X", 2)],
            vec![(vec![0], 0.5), (vec![1], 0.5)],
        )
        .unwrap();
        assert!(total_variation(&d, &e).is_err());
    }

    #[test]
    fn json_round_trip_preserves_table() {
        let d = coin_pair();
        let text = serde_json::to_string(&d.to_json()).unwrap();
        let back = DiscreteDistribution::from_json_str(&text).unwrap();
        assert_eq!(back, d);
    }

    #[test]
    fn json_missing_assignment_entry_is_rejected() {
        let text = r#"{
            "variables": [{"id":"X","card":2},{"id":"Y","card":2}],
            "table": [{"a":{"X":0},"p":1.0}]
        }"#;
        assert!(DiscreteDistribution::from_json_str(text).is_err());
    }

    #[test]
    fn json_unknown_variable_in_assignment_is_rejected() {
        let text = r#"{
            "variables": [{"id":"X","card":2}],
            "table": [{"a":{"X":0,"Q":1},"p":1.0}]
        }"#;
        assert!(DiscreteDistribution::from_json_str(text).is_err());
    }
}
