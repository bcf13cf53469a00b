//! Exact information measures on discrete distributions.
//!
//! All measures use natural logarithms and the convention `0·log 0 = 0`.
//! Conditional mutual information is defined for every distribution. Causal
//! strength and path-based mutual information average conditionals of the
//! form `f(y | x', l)` over *all* positive-marginal states `x'`, so they are
//! undefined whenever some required conditioning event `(x', l)` has
//! probability zero while both `f(x') > 0` and `f(l) > 0`. That degenerate
//! event is reported verbatim in [`MeasureValue::Undefined`].

use std::collections::BTreeMap;
use std::collections::BTreeSet;

use serde::Serialize;

use crate::dist::{Assignment, DiscreteDistribution};
use crate::{Error, Result, DEFAULT_CI_TOL, ZERO_CUTOFF};

/// Outcome of a measure that may be undefined on degenerate supports.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum MeasureValue {
    Finite(f64),
    /// The measure required conditioning on this zero-probability event.
    Undefined { conditioning_event: Assignment },
}

impl MeasureValue {
    pub fn finite(&self) -> Option<f64> {
        match self {
            MeasureValue::Finite(v) => Some(*v),
            MeasureValue::Undefined { .. } => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        self.finite().is_some()
    }
}

/// Resolves ids and checks the three blocks are pairwise disjoint.
fn resolve_blocks<X, Y, C>(
    d: &DiscreteDistribution,
    xs: &[X],
    ys: &[Y],
    cond: &[C],
) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)>
where
    X: AsRef<str>,
    Y: AsRef<str>,
    C: AsRef<str>,
{
    let xp = d.positions(xs)?;
    let yp = d.positions(ys)?;
    let cp = d.positions(cond)?;
    let mut seen: BTreeSet<usize> = BTreeSet::new();
    for &p in xp.iter().chain(&yp).chain(&cp) {
        if !seen.insert(p) {
            return Err(Error::OverlappingSets(d.variables()[p].id.clone()));
        }
    }
    let dup = |pos: &[usize]| {
        let set: BTreeSet<usize> = pos.iter().copied().collect();
        set.len() != pos.len()
    };
    if dup(&xp) || dup(&yp) || dup(&cp) {
        return Err(Error::OverlappingSets("duplicate id within a set".into()));
    }
    Ok((xp, yp, cp))
}

type JointTable = BTreeMap<(Vec<usize>, Vec<usize>, Vec<usize>), f64>;

/// Accumulates the joint law over `(x-block, y-block, cond-block)`.
fn joint_blocks(
    d: &DiscreteDistribution,
    xp: &[usize],
    yp: &[usize],
    cp: &[usize],
) -> JointTable {
    let mut out: JointTable = BTreeMap::new();
    for (key, p) in d.iter() {
        let xk: Vec<usize> = xp.iter().map(|&i| key[i]).collect();
        let yk: Vec<usize> = yp.iter().map(|&i| key[i]).collect();
        let ck: Vec<usize> = cp.iter().map(|&i| key[i]).collect();
        *out.entry((xk, yk, ck)).or_insert(0.0) += p;
    }
    out
}

fn sum_over<K: Ord, F: Fn(&(Vec<usize>, Vec<usize>, Vec<usize>)) -> K>(
    joint: &JointTable,
    project: F,
) -> BTreeMap<K, f64> {
    let mut out = BTreeMap::new();
    for (k, &p) in joint {
        *out.entry(project(k)).or_insert(0.0) += p;
    }
    out
}

/// Conditional mutual information `I(X; Y | C)` in nats. Defined for every
/// distribution; the result is nonnegative up to floating-point dust. An
/// empty `xs` or `ys` block yields zero.
pub fn cmi_exact<X, Y, C>(
    d: &DiscreteDistribution,
    xs: &[X],
    ys: &[Y],
    cond: &[C],
) -> Result<f64>
where
    X: AsRef<str>,
    Y: AsRef<str>,
    C: AsRef<str>,
{
    let (xp, yp, cp) = resolve_blocks(d, xs, ys, cond)?;
    if xp.is_empty() || yp.is_empty() {
        return Ok(0.0);
    }
    let joint = joint_blocks(d, &xp, &yp, &cp);
    let p_xc = sum_over(&joint, |(x, _, c)| (x.clone(), c.clone()));
    let p_yc = sum_over(&joint, |(_, y, c)| (y.clone(), c.clone()));
    let p_c = sum_over(&joint, |(_, _, c)| c.clone());
    let mut sum = 0.0;
    for ((x, y, c), &p) in &joint {
        let pxc = p_xc[&(x.clone(), c.clone())];
        let pyc = p_yc[&(y.clone(), c.clone())];
        let pc = p_c[c];
        sum += p * (p * pc / (pxc * pyc)).ln();
    }
    Ok(sum)
}

/// Mutual information `I(X; Y)` in nats.
pub fn mi_exact<X, Y>(d: &DiscreteDistribution, xs: &[X], ys: &[Y]) -> Result<f64>
where
    X: AsRef<str>,
    Y: AsRef<str>,
{
    cmi_exact(d, xs, ys, &[] as &[&str])
}

/// Exact conditional independence: true iff `I(X; Y | C) <= tol`.
pub fn is_ci_exact<X, Y, C>(
    d: &DiscreteDistribution,
    xs: &[X],
    ys: &[Y],
    cond: &[C],
    tol: f64,
) -> Result<bool>
where
    X: AsRef<str>,
    Y: AsRef<str>,
    C: AsRef<str>,
{
    Ok(cmi_exact(d, xs, ys, cond)? <= tol)
}

/// Convenience wrapper for [`is_ci_exact`] with the default tolerance.
pub fn is_ci_exact_default<X, Y, C>(
    d: &DiscreteDistribution,
    xs: &[X],
    ys: &[Y],
    cond: &[C],
) -> Result<bool>
where
    X: AsRef<str>,
    Y: AsRef<str>,
    C: AsRef<str>,
{
    is_ci_exact(d, xs, ys, cond, DEFAULT_CI_TOL)
}

/// Searches for a positive-marginal pair `(a-state, c-assignment)` whose
/// joint probability is zero. Returns the offending event as an assignment
/// over `a_id` and the conditioning block, scanning in deterministic order.
fn zero_conditioning_event(
    a_id: &str,
    a_marginal: &BTreeMap<Vec<usize>, f64>,
    ac_joint: &BTreeMap<(Vec<usize>, Vec<usize>), f64>,
    c_marginal: &BTreeMap<Vec<usize>, f64>,
    cond_ids: &[String],
) -> Option<Assignment> {
    for c_key in c_marginal.keys() {
        for a_key in a_marginal.keys() {
            let joint = ac_joint
                .get(&(a_key.clone(), c_key.clone()))
                .copied()
                .unwrap_or(0.0);
            if joint < ZERO_CUTOFF {
                let mut event = Assignment::new();
                event.insert(a_id.to_string(), a_key[0]);
                for (id, &s) in cond_ids.iter().zip(c_key) {
                    event.insert(id.clone(), s);
                }
                return Some(event);
            }
        }
    }
    None
}

/// Causal strength of `x` on `y` given `cond`:
/// `sum f(x,y,l) · log[ f(y|x,l) / sum_{x'} f(y|x',l) f(x') ]`.
///
/// With an empty `cond` this equals mutual information. It is `Undefined`
/// when some state `x'` with positive marginal never co-occurs with a
/// positive-probability conditioning assignment `l`, since `f(y|x',l)` is
/// then conditioned on a zero-probability event.
pub fn causal_strength<C: AsRef<str>>(
    d: &DiscreteDistribution,
    x: &str,
    y: &str,
    cond: &[C],
) -> Result<MeasureValue> {
    let (xp, yp, cp) = resolve_blocks(d, &[x], &[y], cond)?;
    let cond_ids: Vec<String> = cond.iter().map(|c| c.as_ref().to_string()).collect();
    let joint = joint_blocks(d, &xp, &yp, &cp);
    let p_xc = sum_over(&joint, |(x, _, c)| (x.clone(), c.clone()));
    let p_yc = sum_over(&joint, |(_, y, c)| (y.clone(), c.clone()));
    let p_c = sum_over(&joint, |(_, _, c)| c.clone());
    let p_x = sum_over(&joint, |(x, _, _)| x.clone());

    if let Some(event) = zero_conditioning_event(x, &p_x, &p_xc, &p_c, &cond_ids) {
        return Ok(MeasureValue::Undefined { conditioning_event: event });
    }

    // Mixture denominator per (y, l): sum over x' of f(y|x',l) f(x').
    let mut denom: BTreeMap<(Vec<usize>, Vec<usize>), f64> = BTreeMap::new();
    for ((yk, ck), _) in p_yc.iter().map(|(k, v)| (k.clone(), v)) {
        let mut s = 0.0;
        for (xk, &px) in &p_x {
            let pxc = p_xc[&(xk.clone(), ck.clone())];
            let pxyc = joint
                .get(&(xk.clone(), yk.clone(), ck.clone()))
                .copied()
                .unwrap_or(0.0);
            s += pxyc / pxc * px;
        }
        denom.insert((yk, ck), s);
    }

    let mut sum = 0.0;
    for ((xk, yk, ck), &p) in &joint {
        let y_given_xl = p / p_xc[&(xk.clone(), ck.clone())];
        let dnm = denom[&(yk.clone(), ck.clone())];
        sum += p * (y_given_xl / dnm).ln();
    }
    Ok(MeasureValue::Finite(sum))
}

/// Path-based mutual information of `x` and `y` given `cond`:
/// `sum f(x,y,l) · log[ f(x,y|l) / (f*(x|l) f*(y|l)) ]` where
/// `f*(x|l) = sum_y f(x|y,l) f(y)` and `f*(y|l) = sum_x f(y|x,l) f(x)`.
///
/// With an empty `cond` this equals mutual information. Undefined under the
/// same zero-probability-conditioning rule as [`causal_strength`], applied
/// to both of the starred mixtures.
pub fn pmi<C: AsRef<str>>(
    d: &DiscreteDistribution,
    x: &str,
    y: &str,
    cond: &[C],
) -> Result<MeasureValue> {
    let (xp, yp, cp) = resolve_blocks(d, &[x], &[y], cond)?;
    let cond_ids: Vec<String> = cond.iter().map(|c| c.as_ref().to_string()).collect();
    let joint = joint_blocks(d, &xp, &yp, &cp);
    let p_xc = sum_over(&joint, |(x, _, c)| (x.clone(), c.clone()));
    let p_yc = sum_over(&joint, |(_, y, c)| (y.clone(), c.clone()));
    let p_c = sum_over(&joint, |(_, _, c)| c.clone());
    let p_x = sum_over(&joint, |(x, _, _)| x.clone());
    let p_y = sum_over(&joint, |(_, y, _)| y.clone());

    if let Some(event) = zero_conditioning_event(x, &p_x, &p_xc, &p_c, &cond_ids) {
        return Ok(MeasureValue::Undefined { conditioning_event: event });
    }
    let yc_joint: BTreeMap<(Vec<usize>, Vec<usize>), f64> =
        p_yc.iter().map(|(k, &v)| (k.clone(), v)).collect();
    if let Some(event) = zero_conditioning_event(y, &p_y, &yc_joint, &p_c, &cond_ids) {
        return Ok(MeasureValue::Undefined { conditioning_event: event });
    }

    // f*(y|l) = sum over x' of f(y|x',l) f(x'); f*(x|l) symmetrically.
    let mut star_y: BTreeMap<(Vec<usize>, Vec<usize>), f64> = BTreeMap::new();
    for (yk, ck) in p_yc.keys() {
        let mut s = 0.0;
        for (xk, &px) in &p_x {
            let pxc = p_xc[&(xk.clone(), ck.clone())];
            let pxyc = joint
                .get(&(xk.clone(), yk.clone(), ck.clone()))
                .copied()
                .unwrap_or(0.0);
            s += pxyc / pxc * px;
        }
        star_y.insert((yk.clone(), ck.clone()), s);
    }
    let mut star_x: BTreeMap<(Vec<usize>, Vec<usize>), f64> = BTreeMap::new();
    for (xk, ck) in p_xc.keys() {
        let mut s = 0.0;
        for (yk, &py) in &p_y {
            let pyc = p_yc[&(yk.clone(), ck.clone())];
            let pxyc = joint
                .get(&(xk.clone(), yk.clone(), ck.clone()))
                .copied()
                .unwrap_or(0.0);
            s += pxyc / pyc * py;
        }
        star_x.insert((xk.clone(), ck.clone()), s);
    }

    let mut sum = 0.0;
    for ((xk, yk, ck), &p) in &joint {
        let xy_given_l = p / p_c[ck];
        let sx = star_x[&(xk.clone(), ck.clone())];
        let sy = star_y[&(yk.clone(), ck.clone())];
        sum += p * (xy_given_l / (sx * sy)).ln();
    }
    Ok(MeasureValue::Finite(sum))
}
