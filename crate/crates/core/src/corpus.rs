//! Seeded generators for random benchmark distributions.
//!
//! Three families are produced, all small enough for the exhaustive oracle:
//! full-support tables with Dirichlet-style random weights, tables with
//! structural zeros knocked out at random, and copy-constraint tables that
//! are guaranteed to have several Markov boundaries. Every generator is a
//! pure function of its seed.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::dist::{DiscreteDistribution, VariableMeta};
use crate::{derive_seed, Result};

/// Which construction produced a corpus case.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CaseKind {
    /// Strictly positive joint table.
    FullSupport,
    /// Random cells removed, so conditional measures may be undefined.
    StructuredZeros,
    /// One variable is a deterministic copy of another, forcing at least
    /// two Markov boundaries for the target.
    CopyConstraint,
}

/// A generated distribution together with the query it is meant for.
#[derive(Debug, Clone)]
pub struct CorpusCase {
    pub dist: DiscreteDistribution,
    pub target: String,
    pub scope: Vec<String>,
    pub kind: CaseKind,
}

fn exp_weight(rng: &mut ChaCha8Rng) -> f64 {
    -(1.0 - rng.random::<f64>()).max(1e-12).ln()
}

fn random_cards(rng: &mut ChaCha8Rng, n: usize, max_card: usize) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(2..=max_card)).collect()
}

fn all_keys(cards: &[usize]) -> Vec<Vec<usize>> {
    let total: usize = cards.iter().product();
    let mut keys = Vec::with_capacity(total);
    for mut i in 0..total {
        let mut key = vec![0usize; cards.len()];
        for pos in (0..cards.len()).rev() {
            key[pos] = i % cards[pos];
            i /= cards[pos];
        }
        keys.push(key);
    }
    keys
}

fn dist_from_weights(
    cards: &[usize],
    weights: Vec<(Vec<usize>, f64)>,
) -> Result<DiscreteDistribution> {
    let total: f64 = weights.iter().map(|(_, w)| w).sum();
    let vars: Vec<VariableMeta> = cards
        .iter()
        .enumerate()
        .map(|(i, &c)| VariableMeta::new(format!("V{i}"), c))
        .collect();
    DiscreteDistribution::new(
        vars,
        weights.into_iter().map(|(k, w)| (k, w / total)),
    )
}

/// A strictly positive random table over `var_count` variables with
/// cardinalities drawn from `2..=max_card`.
pub fn random_full_support(
    seed: u64,
    var_count: usize,
    max_card: usize,
) -> Result<DiscreteDistribution> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cards = random_cards(&mut rng, var_count, max_card);
    let weights = all_keys(&cards)
        .into_iter()
        .map(|k| (k, exp_weight(&mut rng)))
        .collect();
    dist_from_weights(&cards, weights)
}

/// Like [`random_full_support`] but each cell is dropped with probability
/// `zero_frac`, producing structural zeros. At least two cells survive.
pub fn random_with_zeros(
    seed: u64,
    var_count: usize,
    max_card: usize,
    zero_frac: f64,
) -> Result<DiscreteDistribution> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let cards = random_cards(&mut rng, var_count, max_card);
    let mut weights: Vec<(Vec<usize>, f64)> = Vec::new();
    for (i, key) in all_keys(&cards).into_iter().enumerate() {
        let w = exp_weight(&mut rng);
        let keep = rng.random::<f64>() >= zero_frac;
        if keep || i < 2 {
            weights.push((key, w));
        }
    }
    dist_from_weights(&cards, weights)
}

/// A table whose target provably has several Markov boundaries: the scope
/// contains a variable and its deterministic copy, either of which renders
/// the rest irrelevant, plus `noise_vars` independent distractors.
///
/// Layout: `V0` is the source, `V1` its copy, `V2..` the distractors, and
/// the last variable is the target, read from `V0` through a random channel
/// whose rows differ by at least 0.2 in total variation.
pub fn random_multi_boundary(seed: u64, noise_vars: usize) -> Result<CorpusCase> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let source_card = rng.random_range(2..=3usize);
    let target_card = 2usize;
    // Source marginal, bounded away from degeneracy.
    let p0 = rng.random_range(0.25..0.75);
    let source_marginal: Vec<f64> = if source_card == 2 {
        vec![p0, 1.0 - p0]
    } else {
        let rest = 1.0 - p0;
        let q = rng.random_range(0.3..0.7);
        vec![p0, rest * q, rest * (1.0 - q)]
    };
    // Channel target|source with rows at least 0.2 apart so every source
    // state changes the target law.
    let mut rows: Vec<f64> = Vec::with_capacity(source_card);
    loop {
        rows.clear();
        for _ in 0..source_card {
            rows.push(rng.random_range(0.05..0.95));
        }
        let apart = (0..source_card).all(|i| {
            (0..source_card).all(|j| i == j || (rows[i] - rows[j]).abs() >= 0.2)
        });
        if apart {
            break;
        }
    }
    let noise_cards: Vec<usize> = (0..noise_vars)
        .map(|_| rng.random_range(2..=3usize))
        .collect();
    let noise_laws: Vec<Vec<f64>> = noise_cards
        .iter()
        .map(|&c| {
            let ws: Vec<f64> = (0..c).map(|_| exp_weight(&mut rng)).collect();
            let t: f64 = ws.iter().sum();
            ws.into_iter().map(|w| w / t).collect()
        })
        .collect();

    let mut cards = vec![source_card, source_card];
    cards.extend(&noise_cards);
    cards.push(target_card);
    let mut entries: Vec<(Vec<usize>, f64)> = Vec::new();
    for key in all_keys(&cards) {
        let s = key[0];
        if key[1] != s {
            continue; // V1 is an exact copy of V0
        }
        let y = key[cards.len() - 1];
        let py1 = rows[s];
        let py = if y == 1 { py1 } else { 1.0 - py1 };
        let mut p = source_marginal[s] * py;
        for (i, law) in noise_laws.iter().enumerate() {
            p *= law[key[2 + i]];
        }
        entries.push((key, p));
    }
    let vars: Vec<VariableMeta> = cards
        .iter()
        .enumerate()
        .map(|(i, &c)| {
            let id = if i == cards.len() - 1 {
                "Y".to_string()
            } else {
                format!("V{i}")
            };
            VariableMeta::new(id, c)
        })
        .collect();
    let dist = DiscreteDistribution::new(vars, entries)?;
    let scope: Vec<String> = (0..cards.len() - 1).map(|i| format!("V{i}")).collect();
    Ok(CorpusCase { dist, target: "Y".to_string(), scope, kind: CaseKind::CopyConstraint })
}

/// Deterministic corpus entry `index` under `seed`, cycling through the
/// three case kinds. Targets are always the last declared variable.
pub fn corpus_case(seed: u64, index: usize) -> Result<CorpusCase> {
    let case_seed = derive_seed(seed, &format!("case:{index}"));
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(case_seed, "shape"));
    match index % 3 {
        0 => {
            let vars = rng.random_range(3..=5usize);
            let dist = random_full_support(case_seed, vars, 3)?;
            Ok(with_default_query(dist, CaseKind::FullSupport))
        }
        1 => {
            let vars = rng.random_range(3..=5usize);
            let zero_frac = rng.random_range(0.2..0.5);
            let dist = random_with_zeros(case_seed, vars, 3, zero_frac)?;
            Ok(with_default_query(dist, CaseKind::StructuredZeros))
        }
        _ => {
            let noise = rng.random_range(0..=2usize);
            random_multi_boundary(case_seed, noise)
        }
    }
}

fn with_default_query(dist: DiscreteDistribution, kind: CaseKind) -> CorpusCase {
    let ids = dist.variable_ids();
    let target = ids.last().expect("at least one variable").clone();
    let scope = ids[..ids.len() - 1].to_vec();
    CorpusCase { dist, target, scope, kind }
}

/// The first `count` corpus cases under `seed`.
pub fn build_corpus(seed: u64, count: usize) -> Result<Vec<CorpusCase>> {
    (0..count).map(|i| corpus_case(seed, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::enumerate_markov_boundaries;
    use crate::DEFAULT_CI_TOL;

    #[test]
    fn generators_are_deterministic_in_the_seed() {
        let a = random_full_support(7, 4, 3).unwrap();
        let b = random_full_support(7, 4, 3).unwrap();
        assert_eq!(a, b);
        let c = random_full_support(8, 4, 3).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn full_support_fills_the_whole_product_space() {
        for seed in 0..5u64 {
            let d = random_full_support(seed, 4, 3).unwrap();
            let full: usize = d.variables().iter().map(|v| v.card).product();
            assert_eq!(d.support_len(), full);
        }
    }

    #[test]
    fn zero_knockout_leaves_a_proper_normalized_table() {
        let mut saw_zeros = false;
        for seed in 0..10u64 {
            let d = random_with_zeros(seed, 4, 3, 0.4).unwrap();
            let full: usize = d.variables().iter().map(|v| v.card).product();
            assert!(d.support_len() >= 2);
            if d.support_len() < full {
                saw_zeros = true;
            }
        }
        assert!(saw_zeros, "knockout never removed a cell across ten seeds");
    }

    #[test]
    fn copy_construction_always_has_multiple_boundaries() {
        for seed in 0..6u64 {
            let case = random_multi_boundary(seed, seed as usize % 3).unwrap();
            let bs = enumerate_markov_boundaries(
                &case.dist,
                &case.target,
                &case.scope,
                DEFAULT_CI_TOL,
            )
            .unwrap();
            assert!(
                bs.boundaries.len() >= 2,
                "seed {seed}: expected several boundaries, got {:?}",
                bs.boundaries
            );
        }
    }

    #[test]
    fn corpus_cycles_through_all_kinds() {
        let cases = build_corpus(42, 6).unwrap();
        assert_eq!(cases.len(), 6);
        assert_eq!(cases[0].kind, CaseKind::FullSupport);
        assert_eq!(cases[1].kind, CaseKind::StructuredZeros);
        assert_eq!(cases[2].kind, CaseKind::CopyConstraint);
        for case in &cases {
            assert!(!case.scope.contains(&case.target));
            assert!(case.scope.len() >= 2);
        }
    }
}
