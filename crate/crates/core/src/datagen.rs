//! Benchmark distributions with certified ground truth.
//!
//! Four ten-predictor benchmarks (`S1`–`S4`) share one template: predictors
//! `X1..X10`, a target `Y` that copies one of three designated source
//! columns chosen by an independent categorical draw with weights
//! 0.8/0.1/0.1, and progressively nastier structure:
//!
//! * `S1` — independent fair-coin predictors; sources `X1,X2,X3`; the
//!   boundary `{X1,X2,X3}` is unique.
//! * `S2` — as `S1` but `X4` duplicates `X2`, so `{X1,X2,X3}` and
//!   `{X1,X3,X4}` are both boundaries.
//! * `S3` — the main source is the parity `Z = X1 xor X2` (never observed
//!   directly); `X9 = X10` are a shared 0.95-fidelity noisy copy of `Z`;
//!   sources `Z,X3,X4`. The boundary `{X1,X2,X3,X4}` is unique, but parity
//!   defeats grow-shrink discovery (no single variable is marginally
//!   informative), i.e. the composition property fails.
//! * `S4` — as `S3` but `X8` duplicates `X1` and `X9` duplicates `X2`
//!   (`X10` stays a 0.95-fidelity noisy copy of `Z`), giving four
//!   boundaries: either copy of `X1` with either copy of `X2`, plus
//!   `{X3,X4}`.
//!
//! Also here: a four-variable example with three-state `Z,X,Y` and binary
//! `W` whose boundaries are `{X,W}` and `{Z,W}` with essential set `{W}`,
//! and the two-boundary confounder triangle where `Z` duplicates `X`.

use std::collections::BTreeMap;

use serde::Serialize;

use crate::data::{sample_dataset, Dataset};
use crate::dist::{DiscreteDistribution, VariableMeta};
use crate::{Error, Result, VarSet};

/// Benchmark identifiers accepted by the generator and the harness.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum SettingId {
    #[serde(rename = "s1")]
    S1,
    #[serde(rename = "s2")]
    S2,
    #[serde(rename = "s3")]
    S3,
    #[serde(rename = "s4")]
    S4,
    #[serde(rename = "fig1")]
    Fig1,
    #[serde(rename = "triangle")]
    Triangle,
}

impl SettingId {
    /// The four Monte Carlo benchmarks.
    pub const BENCHMARKS: [SettingId; 4] =
        [SettingId::S1, SettingId::S2, SettingId::S3, SettingId::S4];

    pub fn parse(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "1" | "s1" => Ok(SettingId::S1),
            "2" | "s2" => Ok(SettingId::S2),
            "3" | "s3" => Ok(SettingId::S3),
            "4" | "s4" => Ok(SettingId::S4),
            "fig1" => Ok(SettingId::Fig1),
            "triangle" => Ok(SettingId::Triangle),
            other => Err(Error::InvalidConfig(format!(
                "unknown setting `{other}` (expected 1-4, s1-s4, fig1, triangle)"
            ))),
        }
    }

    pub fn label(&self) -> &'static str {
        match self {
            SettingId::S1 => "s1",
            SettingId::S2 => "s2",
            SettingId::S3 => "s3",
            SettingId::S4 => "s4",
            SettingId::Fig1 => "fig1",
            SettingId::Triangle => "triangle",
        }
    }

    /// Target variable of the uniqueness question for this benchmark.
    pub fn target(&self) -> &'static str {
        "Y"
    }

    /// Full predictor scope of the uniqueness question.
    pub fn scope(&self) -> Vec<String> {
        match self {
            SettingId::S1 | SettingId::S2 | SettingId::S3 | SettingId::S4 => {
                (1..=10).map(|i| format!("X{i}")).collect()
            }
            SettingId::Fig1 => vec!["Z".into(), "X".into(), "W".into()],
            SettingId::Triangle => vec!["Z".into(), "X".into()],
        }
    }

    /// A reduced scope containing every boundary member plus distractors,
    /// small enough for exhaustive oracle certification.
    pub fn oracle_scope(&self) -> Vec<String> {
        let pick = |ids: &[usize]| ids.iter().map(|i| format!("X{i}")).collect();
        match self {
            SettingId::S1 => pick(&[1, 2, 3, 4, 5]),
            SettingId::S2 => pick(&[1, 2, 3, 4, 5, 6]),
            SettingId::S3 => pick(&[1, 2, 3, 4, 9, 10]),
            SettingId::S4 => pick(&[1, 2, 3, 4, 8, 9, 10]),
            SettingId::Fig1 | SettingId::Triangle => self.scope(),
        }
    }
}

/// Known answers for a benchmark's uniqueness question.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GroundTruth {
    pub boundaries: Vec<VarSet>,
    pub unique: bool,
    /// Whether single-variable associations suffice to grow the boundary
    /// (grow-shrink heuristics rely on this; parity constructions break it).
    pub composition_holds: bool,
}

fn vars_x_y() -> Vec<VariableMeta> {
    let mut vars: Vec<VariableMeta> =
        (1..=10).map(|i| VariableMeta::new(format!("X{i}"), 2)).collect();
    vars.push(VariableMeta::new("Y", 2));
    vars
}

const SOURCE_WEIGHTS: [f64; 3] = [0.8, 0.1, 0.1];
const COPY_FIDELITY: f64 = 0.95;

fn set(ids: &[&str]) -> VarSet {
    ids.iter().map(|s| s.to_string()).collect()
}

/// Enumerates `free` fair coins, maps each draw to the ten predictor
/// columns, mixes over the extra weighted draws, and accumulates the joint
/// law of `(X1..X10, Y)`.
fn accumulate_setting<F>(free: usize, extra: &[Vec<f64>], fill: F) -> DiscreteDistribution
where
    F: Fn(usize, &[usize]) -> ([usize; 10], usize),
{
    let base = 0.5f64.powi(free as i32);
    let mut table: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    let mut extra_states = vec![0usize; extra.len()];
    loop {
        let extra_p: f64 = extra
            .iter()
            .zip(&extra_states)
            .map(|(law, &s)| law[s])
            .product();
        for bits in 0..1usize << free {
            let (x, y) = fill(bits, &extra_states);
            let mut key: Vec<usize> = x.to_vec();
            key.push(y);
            *table.entry(key).or_insert(0.0) += base * extra_p;
        }
        // Odometer over the extra draws.
        let mut pos = 0;
        loop {
            if pos == extra.len() {
                let entries: Vec<(Vec<usize>, f64)> = table.into_iter().collect();
                return DiscreteDistribution::new(vars_x_y(), entries)
                    .expect("constructed law is normalized");
            }
            extra_states[pos] += 1;
            if extra_states[pos] < extra[pos].len() {
                break;
            }
            extra_states[pos] = 0;
            pos += 1;
        }
    }
}

fn bit(bits: usize, i: usize) -> usize {
    bits >> i & 1
}

fn s1() -> DiscreteDistribution {
    accumulate_setting(10, &[SOURCE_WEIGHTS.to_vec()], |bits, extra| {
        let mut x = [0usize; 10];
        for (i, slot) in x.iter_mut().enumerate() {
            *slot = bit(bits, i);
        }
        (x, x[extra[0]])
    })
}

fn s2() -> DiscreteDistribution {
    // Free coins: X1,X2,X3,X5..X10 (9); X4 duplicates X2.
    accumulate_setting(9, &[SOURCE_WEIGHTS.to_vec()], |bits, extra| {
        let mut x = [0usize; 10];
        x[0] = bit(bits, 0);
        x[1] = bit(bits, 1);
        x[2] = bit(bits, 2);
        x[3] = x[1];
        for i in 4..10 {
            *x.get_mut(i).expect("index in range") = bit(bits, i - 1);
        }
        (x, x[extra[0]])
    })
}

fn s3() -> DiscreteDistribution {
    // Free coins: X1..X8; X9 = X10 = parity xor shared flip; sources
    // (parity, X3, X4).
    let flip = vec![COPY_FIDELITY, 1.0 - COPY_FIDELITY];
    accumulate_setting(8, &[SOURCE_WEIGHTS.to_vec(), flip], |bits, extra| {
        let mut x = [0usize; 10];
        for (i, slot) in x.iter_mut().enumerate().take(8) {
            *slot = bit(bits, i);
        }
        let z = x[0] ^ x[1];
        x[8] = z ^ extra[1];
        x[9] = x[8];
        let y = [z, x[2], x[3]][extra[0]];
        (x, y)
    })
}

fn s4() -> DiscreteDistribution {
    // Free coins: X1..X7; X8 = X1, X9 = X2, X10 = noisy parity copy.
    let flip = vec![COPY_FIDELITY, 1.0 - COPY_FIDELITY];
    accumulate_setting(7, &[SOURCE_WEIGHTS.to_vec(), flip], |bits, extra| {
        let mut x = [0usize; 10];
        for (i, slot) in x.iter_mut().enumerate().take(7) {
            *slot = bit(bits, i);
        }
        let z = x[0] ^ x[1];
        x[7] = x[0];
        x[8] = x[1];
        x[9] = z ^ extra[1];
        let y = [z, x[2], x[3]][extra[0]];
        (x, y)
    })
}

/// Exact law over `Z,X,Y` (three states each) and binary `W`. The target's
/// law is pinned down by `(X,W)` and equally by `(Z,W)`: on the bulk of the
/// support `Y = 0` deterministically, while the `Z = X = 2` branch makes
/// `Y ∈ {1,2}` with `W` tilted 3:1 toward `W = 0` when `Y = 1` and 1:3 when
/// `Y = 2`. States `(X,Z)` mismatches never occur, which is exactly the
/// degeneracy that lets two boundaries coexist.
pub fn fig1_distribution() -> DiscreteDistribution {
    let vars = vec![
        VariableMeta::new("Z", 3),
        VariableMeta::new("X", 3),
        VariableMeta::new("Y", 3),
        VariableMeta::new("W", 2),
    ];
    let mut entries: Vec<(Vec<usize>, f64)> = Vec::new();
    for (z, x) in [(0, 0), (0, 1), (1, 0), (1, 1)] {
        for w in 0..2 {
            entries.push((vec![z, x, 0, w], 0.1));
        }
    }
    for (y, w0) in [(1, 0.075), (2, 0.025)] {
        entries.push((vec![2, 2, y, 0], w0));
        entries.push((vec![2, 2, y, 1], 0.1 - w0));
    }
    DiscreteDistribution::new(vars, entries).expect("normalized by construction")
}

/// The two-variable-cause triangle over binary `Z,X,Y`. With `copy = true`,
/// `Z = X` almost surely and `Y` follows `X` with probability 0.9, so `{Z}`
/// and `{X}` are both boundaries of `Y` and arrow-strength measures between
/// `X` and `Y` given `Z` hit zero-probability conditioning events. With
/// `copy = false` the law has full support (`X` follows `Z` with
/// probability 0.8) and a unique boundary `{X}`.
pub fn confounder_triangle(copy: bool) -> DiscreteDistribution {
    let vars = vec![
        VariableMeta::new("Z", 2),
        VariableMeta::new("X", 2),
        VariableMeta::new("Y", 2),
    ];
    let mut entries = Vec::new();
    for z in 0..2usize {
        for x in 0..2usize {
            let px = if copy {
                if x == z {
                    1.0
                } else {
                    0.0
                }
            } else if x == z {
                0.8
            } else {
                0.2
            };
            if px == 0.0 {
                continue;
            }
            for y in 0..2usize {
                let py = if y == x { 0.9 } else { 0.1 };
                entries.push((vec![z, x, y], 0.5 * px * py));
            }
        }
    }
    DiscreteDistribution::new(vars, entries).expect("normalized by construction")
}

/// The exact law and certified ground truth for a benchmark.
pub fn build_exact(id: SettingId) -> (DiscreteDistribution, GroundTruth) {
    match id {
        SettingId::S1 => (
            s1(),
            GroundTruth {
                boundaries: vec![set(&["X1", "X2", "X3"])],
                unique: true,
                composition_holds: true,
            },
        ),
        SettingId::S2 => (
            s2(),
            GroundTruth {
                boundaries: vec![set(&["X1", "X2", "X3"]), set(&["X1", "X3", "X4"])],
                unique: false,
                composition_holds: true,
            },
        ),
        SettingId::S3 => (
            s3(),
            GroundTruth {
                boundaries: vec![set(&["X1", "X2", "X3", "X4"])],
                unique: true,
                composition_holds: false,
            },
        ),
        SettingId::S4 => (
            s4(),
            GroundTruth {
                boundaries: vec![
                    set(&["X1", "X2", "X3", "X4"]),
                    set(&["X2", "X3", "X4", "X8"]),
                    set(&["X1", "X3", "X4", "X9"]),
                    set(&["X3", "X4", "X8", "X9"]),
                ],
                unique: false,
                composition_holds: false,
            },
        ),
        SettingId::Fig1 => (
            fig1_distribution(),
            GroundTruth {
                boundaries: vec![set(&["Z", "W"]), set(&["X", "W"])],
                unique: false,
                composition_holds: true,
            },
        ),
        SettingId::Triangle => (
            confounder_triangle(true),
            GroundTruth {
                boundaries: vec![set(&["Z"]), set(&["X"])],
                unique: false,
                composition_holds: true,
            },
        ),
    }
}

/// `n` i.i.d. rows from the benchmark's exact law, deterministic in `seed`.
pub fn sample_setting(id: SettingId, n: usize, seed: u64) -> Result<Dataset> {
    let (dist, _) = build_exact(id);
    sample_dataset(&dist, n, seed)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::measures::{causal_strength, cmi_exact, MeasureValue};
    use crate::oracle::{enumerate_markov_boundaries, exact_uniqueness, ExactUniqueness};
    use crate::DEFAULT_CI_TOL;

    fn agreement_mass(d: &DiscreteDistribution, a: &str, b: &str) -> f64 {
        let m = d.marginal(&[a, b]).unwrap();
        m.iter().filter(|(k, _)| k[0] == k[1]).map(|(_, p)| p).sum()
    }

    #[test]
    fn s1_marginals_and_source_agreement() {
        let (d, _) = build_exact(SettingId::S1);
        for i in 1..=10 {
            let m = d.marginal(&[format!("X{i}")]).unwrap();
            assert!((m.prob_key(&[0]) - 0.5).abs() < 1e-12);
        }
        assert!((agreement_mass(&d, "X1", "Y") - 0.9).abs() < 1e-12);
        assert!((agreement_mass(&d, "X2", "Y") - 0.55).abs() < 1e-12);
    }

    #[test]
    fn s2_duplicates_x2_into_x4() {
        let (d, _) = build_exact(SettingId::S2);
        let (px2, px4) = (d.position("X2").unwrap(), d.position("X4").unwrap());
        assert!(d.iter().all(|(k, _)| k[px2] == k[px4]));
    }

    #[test]
    fn s3_noisy_parity_copies_agree_and_track_the_parity() {
        let (d, _) = build_exact(SettingId::S3);
        let (p1, p2) = (d.position("X1").unwrap(), d.position("X2").unwrap());
        let (p9, p10) = (d.position("X9").unwrap(), d.position("X10").unwrap());
        assert!(d.iter().all(|(k, _)| k[p9] == k[p10]));
        let track: f64 = d
            .iter()
            .filter(|(k, _)| k[p9] == k[p1] ^ k[p2])
            .map(|(_, p)| p)
            .sum();
        assert!((track - 0.95).abs() < 1e-12);
        // Parity masking: each of X1, X2 is marginally useless for Y.
        assert!(cmi_exact(&d, &["X1"], &["Y"], &[] as &[&str]).unwrap() < 1e-12);
        assert!(cmi_exact(&d, &["X2"], &["Y"], &[] as &[&str]).unwrap() < 1e-12);
    }

    #[test]
    fn s4_copies_both_parity_inputs() {
        let (d, _) = build_exact(SettingId::S4);
        let (p1, p8) = (d.position("X1").unwrap(), d.position("X8").unwrap());
        let (p2, p9) = (d.position("X2").unwrap(), d.position("X9").unwrap());
        assert!(d.iter().all(|(k, _)| k[p1] == k[p8] && k[p2] == k[p9]));
    }

    #[test]
    fn ground_truth_is_certified_by_the_oracle_on_reduced_scopes() {
        for id in [
            SettingId::S1,
            SettingId::S2,
            SettingId::S3,
            SettingId::S4,
            SettingId::Fig1,
            SettingId::Triangle,
        ] {
            let (d, truth) = build_exact(id);
            let scope = id.oracle_scope();
            let mut keep = scope.clone();
            keep.push(id.target().to_string());
            let m = d.marginal(&keep).unwrap();
            let bs =
                enumerate_markov_boundaries(&m, id.target(), &scope, DEFAULT_CI_TOL)
                    .unwrap();
            let mut found = bs.boundaries.clone();
            let mut expected = truth.boundaries.clone();
            found.sort();
            expected.sort();
            assert_eq!(found, expected, "{}", id.label());
            let verdict =
                exact_uniqueness(&m, id.target(), &scope, DEFAULT_CI_TOL).unwrap();
            assert_eq!(verdict.is_unique(), truth.unique, "{}", id.label());
        }
    }

    #[test]
    fn ground_truth_holds_on_the_full_ten_variable_scope() {
        for id in SettingId::BENCHMARKS {
            let (d, truth) = build_exact(id);
            let scope = id.scope();
            let bs =
                enumerate_markov_boundaries(&d, "Y", &scope, DEFAULT_CI_TOL).unwrap();
            let mut found = bs.boundaries.clone();
            let mut expected = truth.boundaries.clone();
            found.sort();
            expected.sort();
            assert_eq!(found, expected, "{}", id.label());
        }
    }

    #[test]
    fn fig1_matches_its_pinned_support_facts() {
        let d = fig1_distribution();
        let pos = |id: &str| d.position(id).unwrap();
        let (pz, px, py, pw) = (pos("Z"), pos("X"), pos("Y"), pos("W"));
        let prob = |z: usize, x: usize, y: usize, w: usize| -> f64 {
            d.iter()
                .filter(|(k, _)| k[pz] == z && k[px] == x && k[py] == y && k[pw] == w)
                .map(|(_, p)| p)
                .sum()
        };
        assert!(prob(1, 0, 0, 0) > 0.0);
        assert!(prob(1, 2, 1, 1) == 0.0);
        let my = d.marginal(&["Y"]).unwrap();
        assert!((my.prob_key(&[0]) - 0.8).abs() < 1e-12);
        assert!((my.prob_key(&[1]) - 0.1).abs() < 1e-12);
        assert!((my.prob_key(&[2]) - 0.1).abs() < 1e-12);
        match exact_uniqueness(&d, "Y", &["Z", "X", "W"], DEFAULT_CI_TOL).unwrap() {
            ExactUniqueness::Multiple { essential, .. } => {
                assert_eq!(essential, set(&["W"]));
            }
            other => panic!("expected multiple boundaries, got {other:?}"),
        }
    }

    #[test]
    fn triangle_variants_behave_as_documented() {
        let degenerate = confounder_triangle(true);
        assert!(
            cmi_exact(&degenerate, &["X"], &["Y"], &["Z"]).unwrap() < 1e-12,
            "conditioning on the copy hides the whole effect"
        );
        assert!(matches!(
            causal_strength(&degenerate, "X", "Y", &["Z"]).unwrap(),
            MeasureValue::Undefined { .. }
        ));
        let full = confounder_triangle(false);
        assert!(matches!(
            causal_strength(&full, "X", "Y", &["Z"]).unwrap(),
            MeasureValue::Finite(_)
        ));
        let bs = enumerate_markov_boundaries(&full, "Y", &["Z", "X"], DEFAULT_CI_TOL)
            .unwrap();
        assert_eq!(bs.boundaries, vec![set(&["X"])]);
    }

    #[test]
    fn sampling_matches_the_law_and_replays_deterministically() {
        let a = sample_setting(SettingId::S1, 1000, 5).unwrap();
        let b = sample_setting(SettingId::S1, 1000, 5).unwrap();
        assert_eq!(a, b);
        let big = sample_setting(SettingId::S1, 100_000, 11).unwrap();
        let (p1, py) =
            (big.position("X1").unwrap(), big.position("Y").unwrap());
        let agree = big.rows().iter().filter(|r| r[p1] == r[py]).count() as f64
            / big.len() as f64;
        assert!((agree - 0.9).abs() < 0.005, "agreement {agree}");
        for i in 1..=10 {
            let p = big.position(&format!("X{i}")).unwrap();
            let ones: f64 = big.rows().iter().map(|r| r[p] as f64).sum::<f64>()
                / big.len() as f64;
            assert!((ones - 0.5).abs() < 4.0 / (big.len() as f64).sqrt());
        }
        let s2 = sample_setting(SettingId::S2, 500, 9).unwrap();
        let (p2, p4) = (s2.position("X2").unwrap(), s2.position("X4").unwrap());
        assert!(s2.rows().iter().all(|r| r[p2] == r[p4]));
    }

    #[test]
    fn setting_ids_parse_from_cli_spellings() {
        assert_eq!(SettingId::parse("1").unwrap(), SettingId::S1);
        assert_eq!(SettingId::parse("S3").unwrap(), SettingId::S3);
        assert_eq!(SettingId::parse("fig1").unwrap(), SettingId::Fig1);
        assert_eq!(SettingId::parse("triangle").unwrap(), SettingId::Triangle);
        assert!(SettingId::parse("s9").is_err());
    }
}
