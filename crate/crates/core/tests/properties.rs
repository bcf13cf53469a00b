//! Randomized invariant checks over seeded distributions: information
//! identities and inequalities, exact/empirical agreement of the plug-in
//! estimator, structural guarantees of the exhaustive boundary search, and
//! determinism of every seeded component.

use proptest::prelude::*;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use mbuniq_core::citest::{cmi_plugin, g2_ci_test_sets, permutation_ci_test_sets, CiDecider};
use mbuniq_core::corpus::{corpus_case, CorpusCase};
use mbuniq_core::data::sample_dataset;
use mbuniq_core::dist::{total_variation, DiscreteDistribution};
use mbuniq_core::mb::kiamb;
use mbuniq_core::measures::cmi_exact;
use mbuniq_core::oracle::{enumerate_markov_boundaries, essential_variables, is_blanket};
use mbuniq_core::perturb::{
    degenerate_conditioning_events, epsilon_noise, singularity_family, NoiseSpec,
};
use mbuniq_core::{derive_seed, VarSet, DEFAULT_CI_TOL};

fn case(seed: u64, idx: usize) -> CorpusCase {
    corpus_case(seed, idx).expect("corpus case")
}

/// Split the variable list into three disjoint blocks (x, y, rest) using a
/// deterministic shuffle derived from `seed`.
fn split_blocks(d: &DiscreteDistribution, seed: u64) -> (String, String, Vec<String>) {
    let mut pool = d.variable_ids();
    let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "blocks"));
    let x = pool.remove(rng.random_range(0..pool.len()));
    let y = pool.remove(rng.random_range(0..pool.len()));
    (x, y, pool)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    /// Shared information is nonnegative and splits across a receiving
    /// block: I(X; Y∪R) = I(X; Y) + I(X; R | Y).
    #[test]
    fn cmi_is_nonnegative_and_chains(seed in any::<u64>(), idx in 0usize..6) {
        let c = case(seed, idx);
        let (x, y, rest) = split_blocks(&c.dist, seed);
        let yr: Vec<String> = [y.clone()].into_iter().chain(rest.iter().cloned()).collect();
        let joint = cmi_exact(&c.dist, &[x.as_str()], &yr, &[] as &[&str]).unwrap();
        let first = cmi_exact(&c.dist, &[x.as_str()], &[y.as_str()], &[] as &[&str]).unwrap();
        let second = cmi_exact(&c.dist, &[x.as_str()], &rest, &[y.as_str()]).unwrap();
        prop_assert!(joint >= -1e-12 && first >= -1e-12 && second >= -1e-12);
        prop_assert!((joint - (first + second)).abs() <= 1e-9,
            "chain rule off: {joint} vs {first} + {second}");
    }

    /// Weak union: moving a variable from the receiving block into the
    /// conditioning set never increases the shared information.
    #[test]
    fn weak_union_never_increases(seed in any::<u64>(), idx in 0usize..6) {
        let c = case(seed, idx);
        let mut pool = c.dist.variable_ids();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "wu"));
        let x = pool.remove(rng.random_range(0..pool.len()));
        let y = pool.remove(rng.random_range(0..pool.len()));
        let w = pool.remove(rng.random_range(0..pool.len()));
        let z = pool;
        let lhs = cmi_exact(&c.dist, &[x.as_str()], &[y.as_str(), w.as_str()], &z).unwrap();
        let zw: Vec<String> = z.iter().cloned().chain([w.clone()]).collect();
        let rhs = cmi_exact(&c.dist, &[x.as_str()], &[y.as_str()], &zw).unwrap();
        prop_assert!(rhs <= lhs + 1e-9, "weak union violated: {rhs} > {lhs}");
    }

    /// Mixing a variable toward uniform never increases its conditional
    /// mutual information with anything else.
    #[test]
    fn noise_is_a_contraction(seed in any::<u64>(), idx in 0usize..6, eps in 0.01f64..0.95) {
        let c = case(seed, idx);
        let (x, y, rest) = split_blocks(&c.dist, seed);
        let card = c.dist.cardinality(&x).unwrap();
        let before = cmi_exact(&c.dist, &[x.as_str()], &[y.as_str()], &rest).unwrap();
        let noised = epsilon_noise(&c.dist, &x, &NoiseSpec::uniform(eps, card)).unwrap();
        let after = cmi_exact(&noised, &[x.as_str()], &[y.as_str()], &rest).unwrap();
        prop_assert!(after <= before + 1e-9, "noise increased dependence: {before} -> {after}");
    }

    /// The plug-in estimate on a sample equals the exact value computed on
    /// that sample's empirical law.
    #[test]
    fn plugin_matches_exact_on_empirical_law(
        seed in any::<u64>(),
        idx in 0usize..6,
        n in 30usize..300,
    ) {
        let c = case(seed, idx);
        let ds = sample_dataset(&c.dist, n, derive_seed(seed, "sample")).unwrap();
        let emp = ds.empirical_distribution().unwrap();
        let (x, y, rest) = split_blocks(&c.dist, seed);
        let plugin = cmi_plugin(&ds, &[x.as_str()], &[y.as_str()], &rest).unwrap();
        let exact = cmi_exact(&emp, &[x.as_str()], &[y.as_str()], &rest).unwrap();
        prop_assert!((plugin - exact).abs() <= 1e-10, "plugin {plugin} vs exact {exact}");
    }

    /// The likelihood-ratio statistic is exactly 2n times the plug-in
    /// estimate, and its p-value is a probability.
    #[test]
    fn g2_statistic_identity(seed in any::<u64>(), idx in 0usize..6, n in 30usize..300) {
        let c = case(seed, idx);
        let ds = sample_dataset(&c.dist, n, derive_seed(seed, "g2")).unwrap();
        let (x, y, rest) = split_blocks(&c.dist, seed);
        let res = g2_ci_test_sets(&ds, &[x.as_str()], &[y.as_str()], &rest, 0.05, None).unwrap();
        let plugin = cmi_plugin(&ds, &[x.as_str()], &[y.as_str()], &rest).unwrap();
        prop_assert!((res.statistic - 2.0 * n as f64 * plugin).abs() <= 1e-9);
        prop_assert!((0.0..=1.0).contains(&res.p_value));
    }

    /// Every enumerated boundary is a blanket, none contains a strictly
    /// smaller blanket, and the essential set is their intersection.
    #[test]
    fn enumerated_boundaries_are_minimal_blankets(seed in any::<u64>(), idx in 0usize..6) {
        let c = case(seed, idx);
        let bs = enumerate_markov_boundaries(&c.dist, &c.target, &c.scope, DEFAULT_CI_TOL)
            .unwrap();
        prop_assert!(!bs.boundaries.is_empty());
        for b in &bs.boundaries {
            prop_assert!(is_blanket(&c.dist, &c.target, &c.scope, b, DEFAULT_CI_TOL).unwrap());
            let members: Vec<&String> = b.iter().collect();
            for mask in 0..(1u32 << members.len()) - 1 {
                let sub: VarSet = members
                    .iter()
                    .enumerate()
                    .filter(|(i, _)| mask & (1 << i) != 0)
                    .map(|(_, v)| (*v).clone())
                    .collect();
                prop_assert!(
                    !is_blanket(&c.dist, &c.target, &c.scope, &sub, DEFAULT_CI_TOL).unwrap(),
                    "proper subset {sub:?} of {b:?} is a blanket"
                );
            }
        }
        let essential =
            essential_variables(&c.dist, &c.target, &c.scope, DEFAULT_CI_TOL).unwrap();
        let intersection: VarSet = c
            .scope
            .iter()
            .filter(|v| bs.boundaries.iter().all(|b| b.contains(*v)))
            .cloned()
            .collect();
        prop_assert_eq!(essential, intersection);
    }

    /// Sampling is a pure function of (law, n, seed).
    #[test]
    fn sampling_is_deterministic(seed in any::<u64>(), idx in 0usize..6, n in 1usize..200) {
        let c = case(seed, idx);
        let a = sample_dataset(&c.dist, n, seed).unwrap();
        let b = sample_dataset(&c.dist, n, seed).unwrap();
        prop_assert_eq!(a.rows(), b.rows());
        prop_assert_eq!(a.len(), n);
    }

    /// The randomized grow-shrink finder is a pure function of its seed.
    #[test]
    fn randomized_finder_is_deterministic(
        seed in any::<u64>(),
        idx in 0usize..6,
        k in 0.0f64..=1.0,
    ) {
        let c = case(seed, idx);
        let ci = CiDecider::exact(&c.dist);
        let a = kiamb(&ci, &c.scope, &c.target, k, seed).unwrap();
        let b = kiamb(&ci, &c.scope, &c.target, k, seed).unwrap();
        prop_assert_eq!(a, b);
    }

    /// Stratified permutation p-values live in [1/(rounds+1), 1] and are
    /// reproducible under a fixed seed.
    #[test]
    fn permutation_p_value_bounds(seed in any::<u64>(), idx in 0usize..6, n in 40usize..160) {
        let c = case(seed, idx);
        let ds = sample_dataset(&c.dist, n, derive_seed(seed, "perm")).unwrap();
        let (x, y, rest) = split_blocks(&c.dist, seed);
        let rounds = 99;
        let run = || {
            permutation_ci_test_sets(
                &ds, &[x.as_str()], &[y.as_str()], &rest, 0.05, rounds, seed,
            )
            .unwrap()
        };
        let a = run();
        prop_assert!(a.p_value >= 1.0 / (rounds as f64 + 1.0) - 1e-12);
        prop_assert!(a.p_value <= 1.0 + 1e-12);
        prop_assert_eq!(a, run());
    }

    /// A vanishing-mass fill lands at total-variation distance exactly eta
    /// from its base law.
    #[test]
    fn singular_fill_distance_is_exact(
        seed in any::<u64>(),
        noise in 0usize..3,
        eta in 1e-6f64..0.4,
    ) {
        let c = mbuniq_core::corpus::random_multi_boundary(seed, noise).unwrap();
        let events = degenerate_conditioning_events(&c.dist, "V0", &["V1"]).unwrap();
        prop_assert!(!events.is_empty(), "copy pair must have degenerate events");
        let (state, ev) = &events[0];
        let free: usize = c
            .dist
            .variable_ids()
            .iter()
            .filter(|v| *v != "V0" && !ev.contains_key(*v))
            .map(|v| c.dist.cardinality(v).unwrap())
            .product();
        let alpha = vec![1.0 / free as f64; free];
        let filled = singularity_family(&c.dist, "V0", *state, ev, eta, &alpha).unwrap();
        let tv = total_variation(&filled, &c.dist).unwrap();
        prop_assert!((tv - eta).abs() <= 1e-12, "distance {tv} vs eta {eta}");
    }

    /// Noising one variable leaves the joint law of all the others exactly
    /// unchanged.
    #[test]
    fn noise_preserves_the_rest(seed in any::<u64>(), idx in 0usize..6, eps in 0.01f64..0.95) {
        let c = case(seed, idx);
        let ids = c.dist.variable_ids();
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, "pick"));
        let x = ids[rng.random_range(0..ids.len())].clone();
        let others: Vec<String> = ids.into_iter().filter(|v| *v != x).collect();
        let card = c.dist.cardinality(&x).unwrap();
        let noised = epsilon_noise(&c.dist, &x, &NoiseSpec::uniform(eps, card)).unwrap();
        let before = c.dist.marginal(&others).unwrap();
        let after = noised.marginal(&others).unwrap();
        prop_assert!(total_variation(&before, &after).unwrap() <= 1e-12);
    }
}
