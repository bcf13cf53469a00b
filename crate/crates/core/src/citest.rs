//! Conditional-independence decisions and association measures on finite
//! samples.
//!
//! Set-valued queries are reduced to compound variables over the product
//! state space. The G² test uses a per-stratum degrees-of-freedom count over
//! *observed* states, so structural zeros do not inflate the dof and kill
//! power; an optional sparsity guard skips the test entirely (deeming
//! independence) when the sample is too small relative to the nominal table,
//! which is where the chi-square approximation over-rejects badly. A
//! stratified permutation test is available as a slower, assumption-light
//! alternative. [`CiDecider`] packages either an exact distribution or a
//! dataset-plus-test so discovery algorithms can run in both modes.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::data::Dataset;
use crate::dist::DiscreteDistribution;
use crate::measures::{cmi_exact, is_ci_exact};
use crate::{derive_seed, Error, Result};

/// Significance level used when the caller does not choose one.
pub const DEFAULT_ALPHA: f64 = 0.05;
/// Default sparsity guard: skip a G² test (deeming independence) unless the
/// sample has at least this many rows per nominal contingency cell. The
/// chi-square approximation rejects far too often on thin tables — with
/// near-deterministic conditionals the minority cells hold only a handful
/// of expected counts even at tens of rows per nominal cell — so the guard
/// is deliberately high; calibration runs on the shipped benchmarks put the
/// realized level back near the nominal one at this setting.
pub const DEFAULT_MIN_ROWS_PER_CELL: f64 = 40.0;
/// Default number of permutation rounds.
pub const DEFAULT_PERMUTATION_ROUNDS: usize = 199;

/// Outcome of a finite-sample conditional-independence test.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CiTestResult {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    pub independent: bool,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "significance level must lie in (0,1), got {alpha}"
        )));
    }
    Ok(())
}

fn check_nonempty(ds: &Dataset) -> Result<()> {
    if ds.is_empty() {
        return Err(Error::InvalidDataset(
            "cannot test independence on an empty sample".into(),
        ));
    }
    Ok(())
}

fn resolve_blocks<X: AsRef<str>, Y: AsRef<str>, C: AsRef<str>>(
    ds: &Dataset,
    xs: &[X],
    ys: &[Y],
    cond: &[C],
) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let mut seen: BTreeMap<String, ()> = BTreeMap::new();
    let mut resolve = |ids: &mut dyn Iterator<Item = &str>| -> Result<Vec<usize>> {
        let mut out = Vec::new();
        for id in ids {
            if seen.insert(id.to_string(), ()).is_some() {
                return Err(Error::OverlappingSets(id.to_string()));
            }
            out.push(ds.position(id)?);
        }
        Ok(out)
    };
    let xp = resolve(&mut xs.iter().map(|s| s.as_ref()))?;
    let yp = resolve(&mut ys.iter().map(|s| s.as_ref()))?;
    let cp = resolve(&mut cond.iter().map(|s| s.as_ref()))?;
    Ok((xp, yp, cp))
}

/// Mixed-radix encoder mapping a row's states at fixed positions to one
/// compound state.
struct Encoder {
    positions: Vec<usize>,
    strides: Vec<u64>,
    cells: u64,
}

impl Encoder {
    fn new(ds: &Dataset, positions: Vec<usize>) -> Result<Self> {
        let mut strides = vec![0u64; positions.len()];
        let mut acc: u64 = 1;
        for i in (0..positions.len()).rev() {
            strides[i] = acc;
            let card = ds.variables()[positions[i]].card as u64;
            acc = acc.checked_mul(card).ok_or_else(|| {
                Error::InvalidConfig("compound state space overflows u64".into())
            })?;
        }
        Ok(Encoder { positions, strides, cells: acc })
    }

    fn encode(&self, row: &[usize]) -> u64 {
        self.positions
            .iter()
            .zip(&self.strides)
            .map(|(&p, &s)| row[p] as u64 * s)
            .sum()
    }
}

/// Run-length reduction of a sorted slice into (key, count) pairs.
fn runs<T: Copy + PartialEq>(sorted: &[T]) -> Vec<(T, u64)> {
    let mut out: Vec<(T, u64)> = Vec::new();
    for &v in sorted {
        match out.last_mut() {
            Some((k, c)) if *k == v => *c += 1,
            _ => out.push((v, 1)),
        }
    }
    out
}

/// Sums counts over the second key component, keeping the first.
fn reduce_first(pairs: &[((u64, u64), u64)]) -> Vec<(u64, u64)> {
    let mut out: Vec<(u64, u64)> = Vec::new();
    for &((a, _), k) in pairs {
        match out.last_mut() {
            Some((key, c)) if *key == a => *c += k,
            _ => out.push((a, k)),
        }
    }
    out
}

fn lookup2(list: &[((u64, u64), u64)], key: (u64, u64)) -> u64 {
    list[list.partition_point(|&(k, _)| k < key)].1
}

fn lookup1(list: &[(u64, u64)], key: u64) -> u64 {
    list[list.partition_point(|&(k, _)| k < key)].1
}

/// Plug-in conditional mutual information and observed-state degrees of
/// freedom from per-row compound codes `(cond, x, y)`. Counting is done by
/// sort-and-scan rather than hash/tree maps: this is the hot path of the
/// Monte Carlo harness.
fn cmi_and_dof(codes: &[(u64, u64, u64)], n: u64) -> (f64, usize) {
    let mut sorted = codes.to_vec();
    sorted.sort_unstable();
    let triples = runs(&sorted); // distinct (c,x,y), ascending

    let cx_of: Vec<((u64, u64), u64)> = triples.iter().map(|&((c, x, _), k)| ((c, x), k)).collect();
    let n_cx = {
        let mut out: Vec<((u64, u64), u64)> = Vec::new();
        for &(key, k) in &cx_of {
            match out.last_mut() {
                Some((prev, c)) if *prev == key => *c += k,
                _ => out.push((key, k)),
            }
        }
        out
    };
    let n_c = reduce_first(&n_cx);

    let mut cy: Vec<(u64, u64)> = codes.iter().map(|&(c, _, y)| (c, y)).collect();
    cy.sort_unstable();
    let n_cy: Vec<((u64, u64), u64)> = runs(&cy).into_iter().collect();

    let nf = n as f64;
    let mut cmi = 0.0;
    for &((c, x, y), k) in &triples {
        let kf = k as f64;
        let num = kf * lookup1(&n_c, c) as f64;
        let den = lookup2(&n_cx, (c, x)) as f64 * lookup2(&n_cy, (c, y)) as f64;
        cmi += kf / nf * (num / den).ln();
    }

    // Per-stratum observed-state dof: (r_x - 1)(r_y - 1) summed over the
    // conditioning strata that actually occur in the sample.
    let mut dof = 0usize;
    let mut i = 0;
    while i < n_cx.len() {
        let c = n_cx[i].0 .0;
        let mut r_x = 0usize;
        while i < n_cx.len() && n_cx[i].0 .0 == c {
            r_x += 1;
            i += 1;
        }
        let lo = n_cy.partition_point(|&((cc, _), _)| cc < c);
        let hi = n_cy.partition_point(|&((cc, _), _)| cc <= c);
        dof += r_x.saturating_sub(1) * (hi - lo).saturating_sub(1);
    }
    (cmi.max(0.0), dof)
}

/// Per-row `(cond, x, y)` joint-state codes plus the nominal cell count of
/// the full three-way table.
type EncodedTable = (Vec<(u64, u64, u64)>, f64);

fn encode_all(ds: &Dataset, xp: Vec<usize>, yp: Vec<usize>, cp: Vec<usize>) -> Result<EncodedTable> {
    let ex = Encoder::new(ds, xp)?;
    let ey = Encoder::new(ds, yp)?;
    let ec = Encoder::new(ds, cp)?;
    let cells = ex.cells as f64 * ey.cells as f64 * ec.cells as f64;
    let codes = ds
        .rows()
        .iter()
        .map(|row| (ec.encode(row), ex.encode(row), ey.encode(row)))
        .collect();
    Ok((codes, cells))
}

/// Counts over the full product state space of `vars` (zero cells included),
/// summing to the number of rows. With `vars` empty there is a single cell.
pub fn contingency<S: AsRef<str>>(
    ds: &Dataset,
    vars: &[S],
) -> Result<BTreeMap<Vec<usize>, u64>> {
    let positions = ds.positions(vars)?;
    {
        let mut sorted: Vec<&usize> = positions.iter().collect();
        sorted.sort();
        sorted.dedup();
        if sorted.len() != positions.len() {
            return Err(Error::DuplicateVariable(
                "repeated variable in contingency query".into(),
            ));
        }
    }
    let cards: Vec<usize> =
        positions.iter().map(|&p| ds.variables()[p].card).collect();
    let total: usize = cards.iter().product();
    if total > 1 << 24 {
        return Err(Error::InvalidConfig(
            "contingency table would exceed 2^24 cells".into(),
        ));
    }
    let mut table: BTreeMap<Vec<usize>, u64> = BTreeMap::new();
    let mut key = vec![0usize; cards.len()];
    for mut i in 0..total {
        for pos in (0..cards.len()).rev() {
            key[pos] = i % cards[pos];
            i /= cards[pos];
        }
        table.insert(key.clone(), 0);
    }
    for row in ds.rows() {
        let key: Vec<usize> = positions.iter().map(|&p| row[p]).collect();
        *table.get_mut(&key).expect("key within declared ranges") += 1;
    }
    Ok(table)
}

/// Plug-in conditional mutual information (natural log) between the compound
/// variables formed by `xs` and `ys` given the compound of `cond`.
pub fn cmi_plugin<X: AsRef<str>, Y: AsRef<str>, C: AsRef<str>>(
    ds: &Dataset,
    xs: &[X],
    ys: &[Y],
    cond: &[C],
) -> Result<f64> {
    check_nonempty(ds)?;
    let (xp, yp, cp) = resolve_blocks(ds, xs, ys, cond)?;
    if xp.is_empty() || yp.is_empty() {
        return Ok(0.0);
    }
    let (codes, _) = encode_all(ds, xp, yp, cp)?;
    let (cmi, _) = cmi_and_dof(&codes, ds.len() as u64);
    Ok(cmi)
}

/// Set-valued G² likelihood-ratio test: statistic `2n` times the plug-in
/// conditional mutual information, degrees of freedom summed per observed
/// conditioning stratum, p-value from the chi-square upper tail. A stratum
/// dof of zero everywhere means the table cannot witness dependence and the
/// result is independent with p = 1.
///
/// With `min_rows_per_cell = Some(h)` the test is skipped whenever
/// `n < h × (nominal cells)` and the variables are deemed independent —
/// the standard reliability heuristic for constraint-based discovery.
pub fn g2_ci_test_sets<X: AsRef<str>, Y: AsRef<str>, C: AsRef<str>>(
    ds: &Dataset,
    xs: &[X],
    ys: &[Y],
    cond: &[C],
    alpha: f64,
    min_rows_per_cell: Option<f64>,
) -> Result<CiTestResult> {
    check_alpha(alpha)?;
    check_nonempty(ds)?;
    let (xp, yp, cp) = resolve_blocks(ds, xs, ys, cond)?;
    if xp.is_empty() || yp.is_empty() {
        return Ok(CiTestResult { statistic: 0.0, dof: 0, p_value: 1.0, independent: true });
    }
    let (codes, cells) = encode_all(ds, xp, yp, cp)?;
    if let Some(h) = min_rows_per_cell {
        if (ds.len() as f64) < h * cells {
            return Ok(CiTestResult {
                statistic: 0.0,
                dof: 0,
                p_value: 1.0,
                independent: true,
            });
        }
    }
    let n = ds.len() as u64;
    let (cmi, dof) = cmi_and_dof(&codes, n);
    let statistic = 2.0 * n as f64 * cmi;
    if dof == 0 {
        return Ok(CiTestResult { statistic, dof, p_value: 1.0, independent: true });
    }
    let chi = ChiSquared::new(dof as f64).expect("dof >= 1");
    let p_value = chi.sf(statistic).clamp(0.0, 1.0);
    Ok(CiTestResult { statistic, dof, p_value, independent: p_value > alpha })
}

/// Single-pair G² test with the exact textbook behavior (no sparsity guard).
pub fn g2_ci_test<C: AsRef<str>>(
    ds: &Dataset,
    x: &str,
    y: &str,
    cond: &[C],
    alpha: f64,
) -> Result<CiTestResult> {
    g2_ci_test_sets(ds, &[x], &[y], cond, alpha, None)
}

/// Set-valued stratified permutation test: permutes the compound `xs` column
/// within each conditioning stratum and reports
/// `p = (1 + #{permuted CMI ≥ observed}) / (rounds + 1)`.
pub fn permutation_ci_test_sets<X: AsRef<str>, Y: AsRef<str>, C: AsRef<str>>(
    ds: &Dataset,
    xs: &[X],
    ys: &[Y],
    cond: &[C],
    alpha: f64,
    rounds: usize,
    seed: u64,
) -> Result<CiTestResult> {
    check_alpha(alpha)?;
    check_nonempty(ds)?;
    if rounds < 99 {
        return Err(Error::InvalidConfig(format!(
            "permutation test needs at least 99 rounds, got {rounds}"
        )));
    }
    let (xp, yp, cp) = resolve_blocks(ds, xs, ys, cond)?;
    if xp.is_empty() || yp.is_empty() {
        return Ok(CiTestResult { statistic: 0.0, dof: 0, p_value: 1.0, independent: true });
    }
    let (codes, _) = encode_all(ds, xp, yp, cp)?;
    let n = ds.len() as u64;
    let (observed, dof) = cmi_and_dof(&codes, n);
    let mut strata: BTreeMap<u64, Vec<usize>> = BTreeMap::new();
    for (i, &(c, _, _)) in codes.iter().enumerate() {
        strata.entry(c).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut perm: Vec<(u64, u64, u64)> = codes.clone();
    let mut hits = 0usize;
    for _ in 0..rounds {
        for idxs in strata.values() {
            let mut vals: Vec<u64> = idxs.iter().map(|&i| perm[i].1).collect();
            vals.shuffle(&mut rng);
            for (&i, v) in idxs.iter().zip(vals) {
                perm[i].1 = v;
            }
        }
        let (stat, _) = cmi_and_dof(&perm, n);
        if stat >= observed - 1e-12 {
            hits += 1;
        }
    }
    let p_value = (1 + hits) as f64 / (rounds + 1) as f64;
    Ok(CiTestResult {
        statistic: 2.0 * n as f64 * observed,
        dof,
        p_value,
        independent: p_value > alpha,
    })
}

/// Single-pair stratified permutation test.
pub fn permutation_ci_test<C: AsRef<str>>(
    ds: &Dataset,
    x: &str,
    y: &str,
    cond: &[C],
    alpha: f64,
    rounds: usize,
    seed: u64,
) -> Result<CiTestResult> {
    permutation_ci_test_sets(ds, &[x], &[y], cond, alpha, rounds, seed)
}

/// Which finite-sample test a [`CiDecider::Test`] runs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum TestKind {
    #[serde(rename = "g2")]
    G2 { min_rows_per_cell: Option<f64> },
    #[serde(rename = "permutation")]
    Permutation { rounds: usize },
}

impl Default for TestKind {
    fn default() -> Self {
        TestKind::G2 { min_rows_per_cell: Some(DEFAULT_MIN_ROWS_PER_CELL) }
    }
}

/// A uniform oracle answering conditional-independence queries either from
/// an exact distribution or from a sample via a statistical test. Answers
/// are pure functions of the configuration (and seed, for randomized tests):
/// permutation seeds are derived from the query itself, so query order does
/// not matter.
#[derive(Debug, Clone)]
pub enum CiDecider<'a> {
    Exact { dist: &'a DiscreteDistribution, tol: f64 },
    Test { data: &'a Dataset, kind: TestKind, alpha: f64, seed: u64 },
}

impl<'a> CiDecider<'a> {
    /// Exact decider at the default tolerance.
    pub fn exact(dist: &'a DiscreteDistribution) -> Self {
        CiDecider::Exact { dist, tol: crate::DEFAULT_CI_TOL }
    }

    /// G² decider with the default sparsity guard.
    pub fn g2(data: &'a Dataset, alpha: f64) -> Self {
        CiDecider::Test { data, kind: TestKind::default(), alpha, seed: 0 }
    }

    pub fn variable_ids(&self) -> Vec<String> {
        match self {
            CiDecider::Exact { dist, .. } => dist.variable_ids(),
            CiDecider::Test { data, .. } => data.variable_ids(),
        }
    }

    fn query_seed<X: AsRef<str>, Y: AsRef<str>, C: AsRef<str>>(
        seed: u64,
        xs: &[X],
        ys: &[Y],
        cond: &[C],
    ) -> u64 {
        let join = |ids: &mut dyn Iterator<Item = &str>| -> String {
            ids.collect::<Vec<_>>().join(",")
        };
        let label = format!(
            "{}|{}|{}",
            join(&mut xs.iter().map(|s| s.as_ref())),
            join(&mut ys.iter().map(|s| s.as_ref())),
            join(&mut cond.iter().map(|s| s.as_ref()))
        );
        derive_seed(seed, &label)
    }

    /// Is the compound of `xs` independent of the compound of `ys` given
    /// `cond`, per this decider's criterion?
    pub fn is_independent<X: AsRef<str>, Y: AsRef<str>, C: AsRef<str>>(
        &self,
        xs: &[X],
        ys: &[Y],
        cond: &[C],
    ) -> Result<bool> {
        match self {
            CiDecider::Exact { dist, tol } => is_ci_exact(dist, xs, ys, cond, *tol),
            CiDecider::Test { data, kind, alpha, seed } => match kind {
                TestKind::G2 { min_rows_per_cell } => Ok(g2_ci_test_sets(
                    data,
                    xs,
                    ys,
                    cond,
                    *alpha,
                    *min_rows_per_cell,
                )?
                .independent),
                TestKind::Permutation { rounds } => Ok(permutation_ci_test_sets(
                    data,
                    xs,
                    ys,
                    cond,
                    *alpha,
                    *rounds,
                    Self::query_seed(*seed, xs, ys, cond),
                )?
                .independent),
            },
        }
    }

    /// A copy of this decider whose G² tests always run, with the sparsity
    /// guard disabled. The guard's "too thin to test ⇒ treat as
    /// independent" default is the right bias for pruning, but some callers
    /// need an acceptance to be an actual finding — for them a computed
    /// result (including a degenerate table with zero degrees of freedom,
    /// which is genuine in-sample screening) is evidence and a guard skip
    /// is not, so the guard must not answer for the test.
    pub fn unguarded(&self) -> CiDecider<'a> {
        match self {
            CiDecider::Test {
                data,
                kind: TestKind::G2 { .. },
                alpha,
                seed,
            } => CiDecider::Test {
                data,
                kind: TestKind::G2 { min_rows_per_cell: None },
                alpha: *alpha,
                seed: *seed,
            },
            other => other.clone(),
        }
    }

    /// A copy of this decider with the significance level divided by `k`
    /// (Bonferroni), for callers that run a family of `k` related tests and
    /// want to control the chance of any false rejection across the family
    /// rather than per test. Exact deciders are unaffected.
    pub fn bonferroni(&self, k: usize) -> CiDecider<'a> {
        match self {
            CiDecider::Exact { .. } => self.clone(),
            CiDecider::Test { data, kind, alpha, seed } => CiDecider::Test {
                data,
                kind: *kind,
                alpha: alpha / k.max(1) as f64,
                seed: *seed,
            },
        }
    }

    /// Association strength used for candidate ranking: exact conditional
    /// mutual information in exact mode, its plug-in estimate in data mode.
    pub fn delta<X: AsRef<str>, Y: AsRef<str>, C: AsRef<str>>(
        &self,
        xs: &[X],
        ys: &[Y],
        cond: &[C],
    ) -> Result<f64> {
        match self {
            CiDecider::Exact { dist, .. } => cmi_exact(dist, xs, ys, cond),
            CiDecider::Test { data, .. } => cmi_plugin(data, xs, ys, cond),
        }
    }
}
