//! Perturbations of discrete distributions.
//!
//! Two constructions:
//!
//! - [`epsilon_noise`] replaces a variable by a noisy copy that keeps its
//!   value with probability `1 - epsilon` and otherwise redraws it from a
//!   strictly positive noise law. Noising strictly decreases every
//!   conditional mutual information that was positive and preserves every
//!   one that was zero.
//! - [`singularity_family`] takes a degenerate conditioning event — a pair
//!   `(x-state, conditioning assignment)` with positive marginals but zero
//!   joint probability — and gives it mass `eta`, distributed over the
//!   remaining variables by a caller-chosen law `alpha`; all other mass is
//!   scaled by `1 - eta`. The result is at total-variation distance exactly
//!   `eta` from the input. Different `alpha` choices drive measures such as
//!   causal strength to different limits as `eta → 0`, which is the
//!   discontinuity this family exists to exhibit.
//!
//! One [`singularity_family`] call fills exactly one degenerate event. A
//! distribution can hold several (enumerate them with
//! [`degenerate_conditioning_events`]); causal strength and path-based
//! mutual information become finite once every event has been filled, so
//! chain one call per event.

use std::collections::BTreeMap;

use crate::dist::{Assignment, DiscreteDistribution};
use crate::{Error, Result, ZERO_CUTOFF};

/// An independent noise channel applied to one variable.
#[derive(Debug, Clone)]
pub struct NoiseSpec {
    /// Probability of replacing the value with a draw from `noise_dist`.
    pub epsilon: f64,
    /// Replacement law over the variable's states; strictly positive.
    pub noise_dist: Vec<f64>,
}

impl NoiseSpec {
    /// Uniform replacement noise over `card` states.
    pub fn uniform(epsilon: f64, card: usize) -> Self {
        NoiseSpec { epsilon, noise_dist: vec![1.0 / card as f64; card] }
    }

    fn validate(&self, card: usize) -> Result<()> {
        if !(0.0..=1.0).contains(&self.epsilon) {
            return Err(Error::InvalidNoise(format!(
                "epsilon {} outside [0, 1]",
                self.epsilon
            )));
        }
        if self.noise_dist.len() != card {
            return Err(Error::InvalidNoise(format!(
                "noise law has {} entries, variable has {card} states",
                self.noise_dist.len()
            )));
        }
        if self.noise_dist.iter().any(|&p| p <= 0.0 || !p.is_finite()) {
            return Err(Error::InvalidNoise(
                "noise law must be strictly positive on every state".into(),
            ));
        }
        let total: f64 = self.noise_dist.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidNoise(format!("noise law sums to {total}")));
        }
        Ok(())
    }
}

/// Replaces `var` by its noised copy: with probability `1 - epsilon` the
/// value is kept, otherwise it is redrawn from `spec.noise_dist`
/// independently of everything else. All other variables keep their joint
/// law exactly.
pub fn epsilon_noise(
    d: &DiscreteDistribution,
    var: &str,
    spec: &NoiseSpec,
) -> Result<DiscreteDistribution> {
    let pos = d.position(var)?;
    let card = d.variables()[pos].card;
    spec.validate(card)?;
    if spec.epsilon == 0.0 {
        return Ok(d.clone());
    }
    let mut table: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for (key, p) in d.iter() {
        *table.entry(key.clone()).or_insert(0.0) += (1.0 - spec.epsilon) * p;
        for (s, &w) in spec.noise_dist.iter().enumerate() {
            let mut k = key.clone();
            k[pos] = s;
            *table.entry(k).or_insert(0.0) += spec.epsilon * w * p;
        }
    }
    DiscreteDistribution::new(d.variables().to_vec(), table)
}

/// Lists every degenerate conditioning event for the pair (`x`, `cond`):
/// assignments `(x-state, cond-assignment)` where both marginals are
/// positive but the joint probability is zero. Scanned in ascending x-state
/// order, then ascending conditioning assignment order.
pub fn degenerate_conditioning_events<C: AsRef<str>>(
    d: &DiscreteDistribution,
    x: &str,
    cond: &[C],
) -> Result<Vec<(usize, Assignment)>> {
    let xpos = d.position(x)?;
    let cpos = d.positions(cond)?;
    if cpos.contains(&xpos) {
        return Err(Error::OverlappingSets(x.to_string()));
    }
    let p_x = d.grouped(&[xpos]);
    let p_c = d.grouped(&cpos);
    let joint = d.grouped(&[&[xpos][..], &cpos[..]].concat());
    let cond_ids: Vec<String> = cond.iter().map(|c| c.as_ref().to_string()).collect();
    let mut out = Vec::new();
    for xk in p_x.keys() {
        for ck in p_c.keys() {
            let mut full = xk.clone();
            full.extend_from_slice(ck);
            if joint.get(&full).copied().unwrap_or(0.0) < ZERO_CUTOFF {
                let mut a = Assignment::new();
                for (id, &s) in cond_ids.iter().zip(ck) {
                    a.insert(id.clone(), s);
                }
                out.push((xk[0], a));
            }
        }
    }
    Ok(out)
}

/// Gives mass `eta` to the degenerate event (`x = x_state`, `cond_event`),
/// distributing it over the remaining variables according to `alpha`
/// (indexed over their joint states in variable order, row-major), and
/// scales all existing mass by `1 - eta`.
///
/// Preconditions: `0 < eta < 1`; `alpha` is a probability vector of the
/// right length; the marginals of `x_state` and `cond_event` are positive
/// while their joint probability is zero. The result is always at
/// total-variation distance exactly `eta` from `d`.
pub fn singularity_family(
    d: &DiscreteDistribution,
    x: &str,
    x_state: usize,
    cond_event: &Assignment,
    eta: f64,
    alpha: &[f64],
) -> Result<DiscreteDistribution> {
    if !(eta > 0.0 && eta < 1.0) {
        return Err(Error::InvalidPerturbation(format!(
            "eta {eta} outside (0, 1)"
        )));
    }
    let xpos = d.position(x)?;
    if x_state >= d.variables()[xpos].card {
        return Err(Error::InvalidPerturbation(format!(
            "state {x_state} out of range for `{x}`"
        )));
    }
    let mut cond_pos: BTreeMap<usize, usize> = BTreeMap::new();
    for (id, &s) in cond_event {
        let p = d.position(id)?;
        if p == xpos {
            return Err(Error::OverlappingSets(x.to_string()));
        }
        if s >= d.variables()[p].card {
            return Err(Error::InvalidPerturbation(format!(
                "state {s} out of range for `{id}`"
            )));
        }
        cond_pos.insert(p, s);
    }
    // The remaining variables absorb the new mass.
    let free: Vec<usize> = (0..d.variables().len())
        .filter(|i| *i != xpos && !cond_pos.contains_key(i))
        .collect();
    if free.is_empty() {
        return Err(Error::InvalidPerturbation(
            "x and the conditioning event cover every variable".into(),
        ));
    }
    let alpha_len: usize = free.iter().map(|&i| d.variables()[i].card).product();
    if alpha.len() != alpha_len {
        return Err(Error::InvalidPerturbation(format!(
            "alpha has {} entries, expected {alpha_len}",
            alpha.len()
        )));
    }
    if alpha.iter().any(|&a| a < 0.0 || !a.is_finite()) {
        return Err(Error::InvalidPerturbation("alpha entries must be >= 0".into()));
    }
    let alpha_sum: f64 = alpha.iter().sum();
    if (alpha_sum - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidPerturbation(format!(
            "alpha sums to {alpha_sum}"
        )));
    }

    let mut x_event = Assignment::new();
    x_event.insert(x.to_string(), x_state);
    let mut joint_event = cond_event.clone();
    joint_event.insert(x.to_string(), x_state);
    if d.prob_of(&x_event)? < ZERO_CUTOFF {
        return Err(Error::InvalidPerturbation(format!(
            "`{x}` = {x_state} has zero marginal probability"
        )));
    }
    if d.prob_of(cond_event)? < ZERO_CUTOFF {
        return Err(Error::InvalidPerturbation(
            "conditioning event has zero probability".into(),
        ));
    }
    if d.prob_of(&joint_event)? >= ZERO_CUTOFF {
        return Err(Error::InvalidPerturbation(
            "the designated event already has positive probability".into(),
        ));
    }

    let mut table: BTreeMap<Vec<usize>, f64> = BTreeMap::new();
    for (key, p) in d.iter() {
        table.insert(key.clone(), (1.0 - eta) * p);
    }
    // Enumerate joint states of the free block in row-major order.
    let n = d.variables().len();
    for (j, &a) in alpha.iter().enumerate() {
        if a == 0.0 {
            continue;
        }
        let mut key = vec![0usize; n];
        key[xpos] = x_state;
        for (&p, &s) in cond_pos.iter() {
            key[p] = s;
        }
        let mut rem = j;
        for &i in free.iter().rev() {
            let c = d.variables()[i].card;
            key[i] = rem % c;
            rem /= c;
        }
        *table.entry(key).or_insert(0.0) += eta * a;
    }
    DiscreteDistribution::new(d.variables().to_vec(), table)
}
