//! Markov-boundary discovery and boundary-uniqueness testing, parameterized
//! over a [`CiDecider`] so every procedure runs identically against an exact
//! distribution or a finite sample.
//!
//! Discovery: [`backward_elimination`] starts from the full scope and
//! repeatedly deletes the least-associated variable while the decider lets
//! it; it needs no distributional assumptions. [`kiamb`] is the classic
//! grow-shrink heuristic with randomized candidate selection; it is fast but
//! its correctness needs the composition property, so parity-style
//! constructions defeat it.
//!
//! Uniqueness: [`leave_one_out_uniqueness`] re-discovers a boundary with
//! each member of the reference boundary excluded and asks whether the
//! original boundary is screened off by the replacement;
//! [`essentiality_probe_uniqueness`] directly probes each member of the
//! reference boundary for essentiality; [`essential_set_uniqueness`] builds
//! the essential set and checks whether it is itself a blanket.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::citest::CiDecider;
use crate::{derive_seed, Error, Result, VarSet};

/// What happened to a candidate variable during discovery.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum TraceAction {
    /// Added to the working set (grow phase).
    Added,
    /// Deleted from the working set.
    Removed,
    /// Tested for deletion and retained; ends backward elimination.
    Kept,
}

/// One step of a discovery run, for reproducible audit logs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TraceStep {
    pub variable: String,
    /// Association value that ranked the candidate, when one was computed.
    pub delta: Option<f64>,
    pub action: TraceAction,
}

/// Result of a boundary-discovery run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MbResult {
    pub target: String,
    pub scope: Vec<String>,
    pub boundary: VarSet,
    pub trace: Vec<TraceStep>,
}

/// Why a uniqueness procedure declared multiplicity.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum MultiplicityEvidence {
    /// Excluding `variable` produced `alternative`, which screens the
    /// reference boundary off the target.
    AlternativeBoundary { variable: String, alternative: VarSet },
    /// `variable` sits in the reference boundary yet is inessential given
    /// the rest of the scope.
    InessentialMember { variable: String },
    /// The essential set fails to screen the rest of the scope off the
    /// target, so no single boundary can exist.
    EssentialSetNotBlanket { essential: VarSet },
}

/// Verdict of a uniqueness procedure. `m0` is the reference set the verdict
/// was formed against (a discovered boundary, or the essential set for the
/// essential-set procedure).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UniquenessVerdict {
    pub unique: bool,
    pub m0: VarSet,
    pub evidence: Option<MultiplicityEvidence>,
}

/// Which discovery algorithm a uniqueness procedure should call.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum BoundaryFinder {
    BackwardElimination,
    Kiamb { k: f64 },
}

impl BoundaryFinder {
    pub fn run<S: AsRef<str>>(
        &self,
        ci: &CiDecider,
        scope: &[S],
        y: &str,
        seed: u64,
    ) -> Result<MbResult> {
        match self {
            BoundaryFinder::BackwardElimination => backward_elimination(ci, scope, y),
            BoundaryFinder::Kiamb { k } => kiamb(ci, scope, y, *k, seed),
        }
    }
}

fn validate_scope<S: AsRef<str>>(
    ci: &CiDecider,
    scope: &[S],
    y: &str,
) -> Result<Vec<String>> {
    let known: VarSet = ci.variable_ids().into_iter().collect();
    if !known.contains(y) {
        return Err(Error::UnknownVariable(y.to_string()));
    }
    let mut seen = VarSet::new();
    let mut out = Vec::with_capacity(scope.len());
    for s in scope {
        let id = s.as_ref().to_string();
        if !known.contains(&id) {
            return Err(Error::UnknownVariable(id));
        }
        if id == y {
            return Err(Error::OverlappingSets(id));
        }
        if !seen.insert(id.clone()) {
            return Err(Error::DuplicateVariable(id));
        }
        out.push(id);
    }
    Ok(out)
}

fn without(set: &[String], drop: &str) -> Vec<String> {
    set.iter().filter(|v| v.as_str() != drop).cloned().collect()
}

/// Assumption-free boundary discovery by backward elimination: each round
/// ranks the working set by association with the target given the rest
/// (ties go to the earliest scope position) and deletes the
/// weakest-ranked member whose conditional independence the decider
/// accepts. The search ends only when every remaining member tests
/// dependent, so one strongly retained variable cannot shield weaker ones
/// from deletion.
///
/// In data mode every retention decision is one hypothesis test, and a run
/// over a k-variable scope gives each spurious variable a chance to stick;
/// to keep the chance of retaining *any* spurious variable near the
/// configured level, the run tests at that level divided by the scope size
/// (Bonferroni). Exact deciders are unaffected.
pub fn backward_elimination<S: AsRef<str>>(
    ci: &CiDecider,
    scope: &[S],
    y: &str,
) -> Result<MbResult> {
    let scope = validate_scope(ci, scope, y)?;
    let ci = ci.bonferroni(scope.len());
    let mut m0 = scope.clone();
    let mut trace = Vec::new();
    'rounds: while !m0.is_empty() {
        let mut ranked: Vec<(f64, usize)> = Vec::with_capacity(m0.len());
        for (i, x) in m0.iter().enumerate() {
            let rest = without(&m0, x);
            ranked.push((ci.delta(&[x.as_str()], &[y], &rest)?, i));
        }
        // Stable sort: equal associations stay in scope order.
        ranked.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite associations"));
        for (delta, idx) in ranked {
            let x0 = m0[idx].clone();
            let rest = without(&m0, &x0);
            if ci.is_independent(&[x0.as_str()], &[y], &rest)? {
                trace.push(TraceStep {
                    variable: x0,
                    delta: Some(delta),
                    action: TraceAction::Removed,
                });
                m0.remove(idx);
                continue 'rounds;
            }
            trace.push(TraceStep {
                variable: x0,
                delta: Some(delta),
                action: TraceAction::Kept,
            });
        }
        break;
    }
    Ok(MbResult {
        target: y.to_string(),
        scope,
        boundary: m0.into_iter().collect(),
        trace,
    })
}

/// Grow-shrink discovery with randomized candidate selection. Each grow
/// round takes the conditionally dependent candidates, keeps a random
/// subset holding `max(1, ⌈k·count⌉)` of them, and admits the subset member
/// with the strongest association. The shrink pass then deletes members
/// that have become redundant. Setting `k = 1` recovers the deterministic
/// greedy algorithm; smaller `k` trades determinism for search diversity.
/// Results are reproducible given the seed, but correct only when the
/// sampled law satisfies the composition property. Like
/// [`backward_elimination`], a data-mode run tests at the decider's level
/// divided by the scope size so spurious admissions and retentions are
/// controlled family-wise across the run.
pub fn kiamb<S: AsRef<str>>(
    ci: &CiDecider,
    scope: &[S],
    y: &str,
    k: f64,
    seed: u64,
) -> Result<MbResult> {
    if !(0.0..=1.0).contains(&k) {
        return Err(Error::InvalidConfig(format!(
            "subset fraction k must lie in [0,1], got {k}"
        )));
    }
    let scope = validate_scope(ci, scope, y)?;
    let ci = &ci.bonferroni(scope.len());
    let order = |v: &String| scope.iter().position(|s| s == v).expect("in scope");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut m: Vec<String> = Vec::new();
    let mut trace = Vec::new();
    loop {
        let mut candidates: Vec<String> = Vec::new();
        for x in &scope {
            if m.contains(x) {
                continue;
            }
            if !ci.is_independent(&[x.as_str()], &[y], &m)? {
                candidates.push(x.clone());
            }
        }
        if candidates.is_empty() {
            break;
        }
        let take = ((k * candidates.len() as f64).ceil() as usize).max(1);
        candidates.shuffle(&mut rng);
        let mut pool: Vec<String> = candidates.into_iter().take(take).collect();
        pool.sort_by_key(|v| order(v));
        let mut best: Option<(String, f64)> = None;
        for x in pool {
            let d = ci.delta(&[x.as_str()], &[y], &m)?;
            if best.as_ref().is_none_or(|(_, bd)| d > *bd) {
                best = Some((x, d));
            }
        }
        let (x_star, delta) = best.expect("pool is non-empty");
        trace.push(TraceStep {
            variable: x_star.clone(),
            delta: Some(delta),
            action: TraceAction::Added,
        });
        m.push(x_star);
    }
    for x in m.clone() {
        if !m.contains(&x) {
            continue;
        }
        let rest = without(&m, &x);
        if ci.is_independent(&[x.as_str()], &[y], &rest)? {
            trace.push(TraceStep {
                variable: x.clone(),
                delta: None,
                action: TraceAction::Removed,
            });
            m.retain(|v| v != &x);
        }
    }
    Ok(MbResult {
        target: y.to_string(),
        scope,
        boundary: m.into_iter().collect(),
        trace,
    })
}

/// Leave-one-out uniqueness test. Discovers a reference boundary `M0`, then
/// for each member re-runs discovery with that member excluded from the
/// scope; if any replacement set screens `M0` off the target, a second
/// boundary exists. Members are examined in scope order, so the reported
/// evidence is the earliest witness.
///
/// A multiplicity verdict requires affirmative evidence, so in data mode the
/// screening-off test runs with the sparsity guard disabled (see
/// [`CiDecider::unguarded`]): a guard skip is a refusal to test, not a
/// finding, while a computed acceptance — including the degenerate table
/// that arises when the examined member is an in-sample function of its
/// replacement set — is exactly the screening this procedure looks for.
pub fn leave_one_out_uniqueness<S: AsRef<str>>(
    ci: &CiDecider,
    scope: &[S],
    y: &str,
    finder: &BoundaryFinder,
    seed: u64,
) -> Result<UniquenessVerdict> {
    let scope = validate_scope(ci, scope, y)?;
    let m0 = finder.run(ci, &scope, y, derive_seed(seed, "reference"))?.boundary;
    for xi in scope.iter().filter(|v| m0.contains(*v)) {
        let reduced = without(&scope, xi);
        let mi = finder
            .run(ci, &reduced, y, derive_seed(seed, &format!("loo:{xi}")))?
            .boundary;
        // Test only the part of M0 not already inside Mi, keeping the two
        // compound blocks disjoint; xi itself is always in the difference.
        let extra: Vec<String> =
            m0.iter().filter(|v| !mi.contains(*v)).cloned().collect();
        let mi_vec: Vec<String> = mi.iter().cloned().collect();
        if ci.unguarded().is_independent(&extra, &[y], &mi_vec)? {
            return Ok(UniquenessVerdict {
                unique: false,
                m0,
                evidence: Some(MultiplicityEvidence::AlternativeBoundary {
                    variable: xi.clone(),
                    alternative: mi,
                }),
            });
        }
    }
    Ok(UniquenessVerdict { unique: true, m0, evidence: None })
}

/// Per-member essentiality probe. Discovers a reference boundary and asks,
/// for each member, whether the target is independent of it given the whole
/// remaining scope; any acceptance shows the member is dispensable, so the
/// boundary is not unique. The probes condition on large sets, which makes
/// this procedure powerful in theory but acceptance-prone on small samples.
pub fn essentiality_probe_uniqueness<S: AsRef<str>>(
    ci: &CiDecider,
    scope: &[S],
    y: &str,
    finder: &BoundaryFinder,
    seed: u64,
) -> Result<UniquenessVerdict> {
    let scope = validate_scope(ci, scope, y)?;
    let m0 = finder.run(ci, &scope, y, derive_seed(seed, "reference"))?.boundary;
    for xi in scope.iter().filter(|v| m0.contains(*v)) {
        let rest = without(&scope, xi);
        if ci.is_independent(&[xi.as_str()], &[y], &rest)? {
            return Ok(UniquenessVerdict {
                unique: false,
                m0,
                evidence: Some(MultiplicityEvidence::InessentialMember {
                    variable: xi.clone(),
                }),
            });
        }
    }
    Ok(UniquenessVerdict { unique: true, m0, evidence: None })
}

/// Essential-set benchmark. Marks each scope variable essential when the
/// target depends on it given all the others, then declares uniqueness
/// exactly when the essential set screens the rest of the scope off the
/// target. `m0` in the verdict is the estimated essential set.
pub fn essential_set_uniqueness<S: AsRef<str>>(
    ci: &CiDecider,
    scope: &[S],
    y: &str,
) -> Result<UniquenessVerdict> {
    let scope = validate_scope(ci, scope, y)?;
    let mut essential: Vec<String> = Vec::new();
    for xi in &scope {
        let rest = without(&scope, xi);
        if !ci.is_independent(&[xi.as_str()], &[y], &rest)? {
            essential.push(xi.clone());
        }
    }
    let outside: Vec<String> =
        scope.iter().filter(|v| !essential.contains(*v)).cloned().collect();
    let e: VarSet = essential.iter().cloned().collect();
    if ci.is_independent(&outside, &[y], &essential)? {
        Ok(UniquenessVerdict { unique: true, m0: e, evidence: None })
    } else {
        Ok(UniquenessVerdict {
            unique: false,
            m0: e.clone(),
            evidence: Some(MultiplicityEvidence::EssentialSetNotBlanket {
                essential: e,
            }),
        })
    }
}
