//! Brute-force ground truth for Markov boundary questions.
//!
//! Everything here works by exhaustive subset search against the exact
//! distribution, so it is only usable on small scopes (hard cap
//! [`MAX_ORACLE_SCOPE`]); its purpose is to certify the scalable algorithms
//! and the generated benchmark distributions, not to be fast.
//!
//! Terminology: a *Markov blanket* of the target within a scope is a subset
//! `M` with the target independent of the rest of the scope given `M`; a
//! *Markov boundary* is an inclusion-minimal blanket. A variable is
//! *essential* if the target depends on it given all other scope variables;
//! the essential set is exactly the intersection of all boundaries, and the
//! boundary is unique precisely when the essential set is itself a blanket.

use serde::Serialize;

use crate::dist::{Assignment, DiscreteDistribution};
use crate::measures::is_ci_exact;
use crate::perturb::{degenerate_conditioning_events, epsilon_noise, NoiseSpec};
use crate::{Error, Result, VarSet};

/// Hard cap on exhaustive boundary enumeration.
pub const MAX_ORACLE_SCOPE: usize = 20;

/// All Markov boundaries of `target` within `scope`, in increasing size
/// then lexicographic order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundarySet {
    pub target: String,
    pub scope: Vec<String>,
    pub boundaries: Vec<VarSet>,
}

/// Verdict of the exhaustive uniqueness check.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub enum ExactUniqueness {
    /// The single boundary (which equals the essential set).
    Unique(VarSet),
    /// Several boundaries; the essential set is their intersection and is
    /// not itself a blanket.
    Multiple { essential: VarSet, boundaries: Vec<VarSet> },
}

impl ExactUniqueness {
    pub fn is_unique(&self) -> bool {
        matches!(self, ExactUniqueness::Unique(_))
    }
}

fn validate_scope<S: AsRef<str>>(
    d: &DiscreteDistribution,
    target: &str,
    scope: &[S],
) -> Result<Vec<String>> {
    d.position(target)?;
    let mut seen = VarSet::new();
    let mut out = Vec::with_capacity(scope.len());
    for s in scope {
        let id = s.as_ref().to_string();
        d.position(&id)?;
        if id == target {
            return Err(Error::OverlappingSets(id));
        }
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateVariable(id));
        }
        out.push(id);
    }
    if out.len() > MAX_ORACLE_SCOPE {
        return Err(Error::ScopeTooLarge(out.len(), MAX_ORACLE_SCOPE));
    }
    Ok(out)
}

fn mask_to_set(scope: &[String], mask: u32) -> VarSet {
    scope
        .iter()
        .enumerate()
        .filter(|(i, _)| mask >> i & 1 == 1)
        .map(|(_, id)| id.clone())
        .collect()
}

/// Is `m` a Markov blanket of `target` within `scope`?
pub fn is_blanket<S: AsRef<str>>(
    d: &DiscreteDistribution,
    target: &str,
    scope: &[S],
    m: &VarSet,
    tol: f64,
) -> Result<bool> {
    let scope = validate_scope(d, target, scope)?;
    for id in m {
        if !scope.contains(id) {
            return Err(Error::UnknownVariable(id.clone()));
        }
    }
    let inside: Vec<String> = m.iter().cloned().collect();
    let outside: Vec<String> =
        scope.iter().filter(|id| !m.contains(*id)).cloned().collect();
    is_ci_exact(d, &outside, &[target], &inside, tol)
}

/// Enumerates every Markov boundary of `target` within `scope` by checking
/// all subsets in increasing-size order and keeping the minimal blankets.
pub fn enumerate_markov_boundaries<S: AsRef<str>>(
    d: &DiscreteDistribution,
    target: &str,
    scope: &[S],
    tol: f64,
) -> Result<BoundarySet> {
    let scope = validate_scope(d, target, scope)?;
    let n = scope.len();
    let mut masks: Vec<u32> = (0..1u32 << n).collect();
    masks.sort_by_key(|m| (m.count_ones(), *m));
    let mut boundary_masks: Vec<u32> = Vec::new();
    for mask in masks {
        // A blanket containing an already-found boundary is not minimal.
        if boundary_masks.iter().any(|&b| b | mask == mask) {
            continue;
        }
        let inside: Vec<String> = scope
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 1)
            .map(|(_, id)| id.clone())
            .collect();
        let outside: Vec<String> = scope
            .iter()
            .enumerate()
            .filter(|(i, _)| mask >> i & 1 == 0)
            .map(|(_, id)| id.clone())
            .collect();
        if is_ci_exact(d, &outside, &[target], &inside, tol)? {
            boundary_masks.push(mask);
        }
    }
    let boundaries: Vec<VarSet> =
        boundary_masks.iter().map(|&m| mask_to_set(&scope, m)).collect();
    Ok(BoundarySet { target: target.to_string(), scope, boundaries })
}

/// The essential variables of `target` within `scope`: those the target
/// still depends on given all the others.
pub fn essential_variables<S: AsRef<str>>(
    d: &DiscreteDistribution,
    target: &str,
    scope: &[S],
    tol: f64,
) -> Result<VarSet> {
    let scope = validate_scope(d, target, scope)?;
    let mut out = VarSet::new();
    for id in &scope {
        let rest: Vec<String> =
            scope.iter().filter(|o| *o != id).cloned().collect();
        if !is_ci_exact(d, &[id.as_str()], &[target], &rest, tol)? {
            out.insert(id.clone());
        }
    }
    Ok(out)
}

/// Exhaustive uniqueness check: the boundary is unique iff the essential
/// set is itself a blanket, in which case it is that boundary.
pub fn exact_uniqueness<S: AsRef<str>>(
    d: &DiscreteDistribution,
    target: &str,
    scope: &[S],
    tol: f64,
) -> Result<ExactUniqueness> {
    let scope = validate_scope(d, target, scope)?;
    let essential = essential_variables(d, target, &scope, tol)?;
    if is_blanket(d, target, &scope, &essential, tol)? {
        Ok(ExactUniqueness::Unique(essential))
    } else {
        let bs = enumerate_markov_boundaries(d, target, &scope, tol)?;
        Ok(ExactUniqueness::Multiple { essential, boundaries: bs.boundaries })
    }
}

/// First degenerate conditioning event between `x` and the joint state of
/// `others`, if any: an `(x-state, assignment)` pair where both sides have
/// positive probability but never co-occur. Such an event exists whenever
/// `x` belongs to some but not all Markov boundaries.
pub fn variation_dependence_witness<S: AsRef<str>>(
    d: &DiscreteDistribution,
    x: &str,
    others: &[S],
) -> Result<Option<(usize, Assignment)>> {
    Ok(degenerate_conditioning_events(d, x, others)?.into_iter().next())
}

/// Applies uniform epsilon-noise to every scope variable outside `m0` and
/// reports whether `m0` is then the *only* Markov boundary. `m0` must be a
/// boundary of the unperturbed distribution.
pub fn noising_isolates_boundary<S: AsRef<str>>(
    d: &DiscreteDistribution,
    target: &str,
    scope: &[S],
    m0: &VarSet,
    epsilon: f64,
    tol: f64,
) -> Result<bool> {
    let scope = validate_scope(d, target, scope)?;
    let before = enumerate_markov_boundaries(d, target, &scope, tol)?;
    if !before.boundaries.contains(m0) {
        return Err(Error::InvalidConfig(format!(
            "{m0:?} is not a Markov boundary of `{target}`"
        )));
    }
    let mut noised = d.clone();
    for id in scope.iter().filter(|id| !m0.contains(*id)) {
        let card = noised.cardinality(id)?;
        noised = epsilon_noise(&noised, id, &NoiseSpec::uniform(epsilon, card))?;
    }
    let after = enumerate_markov_boundaries(&noised, target, &scope, tol)?;
    Ok(after.boundaries.len() == 1 && after.boundaries[0] == *m0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dist::VariableMeta;
    use crate::DEFAULT_CI_TOL;

    const TOL: f64 = DEFAULT_CI_TOL;

    fn dist(
        vars: &[(&str, usize)],
        entries: &[(&[usize], f64)],
    ) -> DiscreteDistribution {
        DiscreteDistribution::new(
            vars.iter().map(|&(id, c)| VariableMeta::new(id, c)).collect(),
            entries.iter().map(|&(k, p)| (k.to_vec(), p)),
        )
        .unwrap()
    }

    fn set(ids: &[&str]) -> VarSet {
        ids.iter().map(|s| s.to_string()).collect()
    }

    /// Z = X almost surely, Y a noisy copy of X.
    fn degenerate_triangle() -> DiscreteDistribution {
        dist(
            &[("Z", 2), ("X", 2), ("Y", 2)],
            &[
                (&[0, 0, 0], 0.45),
                (&[0, 0, 1], 0.05),
                (&[1, 1, 1], 0.45),
                (&[1, 1, 0], 0.05),
            ],
        )
    }

    /// Full-support chain Z -> X -> Y.
    fn full_chain() -> DiscreteDistribution {
        let mut entries = Vec::new();
        for z in 0..2usize {
            for x in 0..2usize {
                for y in 0..2usize {
                    let pz = 0.5;
                    let px = if x == z { 0.8 } else { 0.2 };
                    let py = if y == x { 0.9 } else { 0.1 };
                    entries.push((vec![z, x, y], pz * px * py));
                }
            }
        }
        DiscreteDistribution::new(
            vec![
                VariableMeta::new("Z", 2),
                VariableMeta::new("X", 2),
                VariableMeta::new("Y", 2),
            ],
            entries,
        )
        .unwrap()
    }

    #[test]
    fn degenerate_triangle_has_two_singleton_boundaries() {
        let d = degenerate_triangle();
        let bs = enumerate_markov_boundaries(&d, "Y", &["Z", "X"], TOL).unwrap();
        assert_eq!(bs.boundaries, vec![set(&["Z"]), set(&["X"])]);
    }

    #[test]
    fn full_support_chain_has_unique_boundary() {
        let d = full_chain();
        let bs = enumerate_markov_boundaries(&d, "Y", &["Z", "X"], TOL).unwrap();
        assert_eq!(bs.boundaries, vec![set(&["X"])]);
        match exact_uniqueness(&d, "Y", &["Z", "X"], TOL).unwrap() {
            ExactUniqueness::Unique(m) => assert_eq!(m, set(&["X"])),
            other => panic!("expected unique, got {other:?}"),
        }
    }

    #[test]
    fn essential_set_is_boundary_intersection_on_triangle() {
        let d = degenerate_triangle();
        let e = essential_variables(&d, "Y", &["Z", "X"], TOL).unwrap();
        assert!(e.is_empty(), "intersection of {{Z}} and {{X}} is empty, got {e:?}");
    }

    #[test]
    fn uniqueness_verdict_matches_enumeration_on_triangle() {
        let d = degenerate_triangle();
        match exact_uniqueness(&d, "Y", &["Z", "X"], TOL).unwrap() {
            ExactUniqueness::Multiple { essential, boundaries } => {
                assert!(essential.is_empty());
                assert_eq!(boundaries.len(), 2);
            }
            other => panic!("expected multiple, got {other:?}"),
        }
    }

    #[test]
    fn independent_target_has_the_empty_boundary() {
        let d = dist(
            &[("X", 2), ("Y", 2)],
            &[
                (&[0, 0], 0.35),
                (&[0, 1], 0.35),
                (&[1, 0], 0.15),
                (&[1, 1], 0.15),
            ],
        );
        let bs = enumerate_markov_boundaries(&d, "Y", &["X"], TOL).unwrap();
        assert_eq!(bs.boundaries, vec![VarSet::new()]);
        assert!(exact_uniqueness(&d, "Y", &["X"], TOL).unwrap().is_unique());
    }

    #[test]
    fn boundary_list_is_never_empty() {
        let d = full_chain();
        let bs = enumerate_markov_boundaries(&d, "Y", &["Z", "X"], TOL).unwrap();
        assert!(!bs.boundaries.is_empty());
    }

    #[test]
    fn witness_found_on_triangle_and_absent_on_full_support() {
        let d = degenerate_triangle();
        let w = variation_dependence_witness(&d, "X", &["Z"]).unwrap();
        let (xs, a) = w.expect("degenerate event expected");
        assert_eq!(xs, 0);
        assert_eq!(a.get("Z"), Some(&1));
        let f = full_chain();
        assert!(variation_dependence_witness(&f, "X", &["Z"]).unwrap().is_none());
    }

    #[test]
    fn noising_the_complement_isolates_each_triangle_boundary() {
        let d = degenerate_triangle();
        for keep in [set(&["X"]), set(&["Z"])] {
            let ok =
                noising_isolates_boundary(&d, "Y", &["Z", "X"], &keep, 0.1, TOL)
                    .unwrap();
            assert!(ok, "noising complement of {keep:?} did not isolate it");
        }
    }

    #[test]
    fn noising_rejects_non_boundaries() {
        let d = degenerate_triangle();
        let err = noising_isolates_boundary(
            &d,
            "Y",
            &["Z", "X"],
            &set(&["Z", "X"]),
            0.1,
            TOL,
        )
        .unwrap_err();
        assert!(matches!(err, Error::InvalidConfig(_)));
    }

    #[test]
    fn oversized_scope_is_rejected() {
        let n = MAX_ORACLE_SCOPE + 1;
        let mut vars: Vec<VariableMeta> =
            (0..n).map(|i| VariableMeta::new(format!("V{i}"), 1)).collect();
        vars.push(VariableMeta::new("Y", 1));
        let d = DiscreteDistribution::new(vars, vec![(vec![0; n + 1], 1.0)]).unwrap();
        let scope: Vec<String> = (0..n).map(|i| format!("V{i}")).collect();
        assert!(matches!(
            enumerate_markov_boundaries(&d, "Y", &scope, TOL).unwrap_err(),
            Error::ScopeTooLarge(_, _)
        ));
    }

    #[test]
    fn scope_must_not_contain_target() {
        let d = full_chain();
        assert!(enumerate_markov_boundaries(&d, "Y", &["Y", "X"], TOL).is_err());
    }
}
