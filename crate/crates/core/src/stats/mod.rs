//! Contingency tables over event ensembles and the estimators used to
//! interrogate them.
//!
//! Conventions:
//!
//! * correlation estimate Ê = (N_same − N_diff)/N with
//!   stderr = √((1 − Ê²)/N);
//! * per-cell frequencies carry the binomial stderr √(p(1−p)/N);
//! * acceptance-style gates compare at 5 standard errors;
//! * empty strata are always reported, never silently dropped.

pub mod special;

pub use special::chi_square_sf;

use alloc::collections::BTreeMap;
use alloc::vec::Vec;

use crate::math;
use crate::protocols::Ensemble;
use crate::quantum::{
    joint_distribution, MeasAngle, JointDist, Outcome, PureState, QuantumError,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum StatsError {
    #[error("stratum {stratum} at setting pair {pair} has no records")]
    EmptyStratum { stratum: usize, pair: usize },
    #[error("setting pair id {0} out of range")]
    BadPair(usize),
    #[error("stratum index {0} out of range")]
    BadStratum(usize),
    #[error("distributions have different index sets ({0} vs {1} entries)")]
    IndexMismatch(usize, usize),
    #[error("no populated cells to analyze")]
    NoData,
    #[error("a margin of the 2x2 table is zero; association is undefined")]
    DegenerateMargin,
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

/// Which record field plays the candidate common cause.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CauseSelector {
    /// Preparation label (fixed/random-state runs).
    Prep,
    /// Midpoint Bell outcome (swap runs).
    SwapOutcome,
    /// Destination bin (hopper_sort runs).
    Hopper,
    /// Keep/discard flag (classical_filter runs): 1 = kept.
    Kept,
}

impl CauseSelector {
    pub fn value(self, r: &crate::protocols::EventRecord) -> Option<u8> {
        match self {
            CauseSelector::Prep => r.prep.map(|l| l.index() as u8),
            CauseSelector::SwapOutcome => r.swap_outcome.map(|l| l.index() as u8),
            CauseSelector::Hopper => r.hopper,
            CauseSelector::Kept => Some(u8::from(r.kept)),
        }
    }

    pub fn stratum_count(self) -> usize {
        match self {
            CauseSelector::Kept => 2,
            _ => 4,
        }
    }
}

/// Optional stratification applied while tabulating.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Conditioning {
    #[default]
    None,
    By(CauseSelector),
}

/// Outcome counts indexed by `(stratum, setting pair, A, B)`.
///
/// The pair dictionary comes from the ensemble's strategy; cell index is
/// `A.index()*2 + B.index()`. When conditioning is requested, every
/// possible stratum is present even if empty.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    pairs: Vec<(MeasAngle, MeasAngle)>,
    conditioning: Conditioning,
    strata: Vec<Stratum>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Stratum {
    /// Cause value for conditioned tables, `None` for the single
    /// unconditioned stratum.
    pub key: Option<u8>,
    counts: Vec<[u64; 4]>,
}

impl JointTable {
    pub fn pairs(&self) -> &[(MeasAngle, MeasAngle)] {
        &self.pairs
    }

    pub fn pair_count(&self) -> usize {
        self.pairs.len()
    }

    pub fn conditioning(&self) -> Conditioning {
        self.conditioning
    }

    pub fn stratum_count(&self) -> usize {
        self.strata.len()
    }

    pub fn stratum(&self, i: usize) -> Option<&Stratum> {
        self.strata.get(i)
    }

    pub fn counts(&self, stratum: usize, pair: usize) -> Option<[u64; 4]> {
        self.strata.get(stratum)?.counts.get(pair).copied()
    }

    pub fn total(&self, stratum: usize, pair: usize) -> u64 {
        self.counts(stratum, pair)
            .map(|c| c.iter().sum())
            .unwrap_or(0)
    }

    /// Grand total over all strata and pairs.
    pub fn grand_total(&self) -> u64 {
        self.strata
            .iter()
            .flat_map(|s| s.counts.iter())
            .flat_map(|c| c.iter())
            .sum()
    }

    /// Flattened per-stratum counts, one vector per stratum, suitable
    /// for homogeneity tests across tables with the same layout.
    pub fn flatten_stratum(&self, stratum: usize) -> Option<Vec<u64>> {
        Some(
            self.strata
                .get(stratum)?
                .counts
                .iter()
                .flat_map(|c| c.iter().copied())
                .collect(),
        )
    }

    /// Flattened counts over every stratum and pair.
    pub fn flatten(&self) -> Vec<u64> {
        (0..self.stratum_count())
            .flat_map(|s| self.flatten_stratum(s).unwrap())
            .collect()
    }
}

/// Counts outcomes for the records accepted by `filter`, stratified per
/// `conditioning`. Records whose cause field is absent are skipped when
/// conditioning on it.
pub fn tabulate(
    ensemble: &Ensemble,
    filter: impl Fn(&crate::protocols::EventRecord) -> bool,
    conditioning: Conditioning,
) -> JointTable {
    let strategy = &ensemble.config.strategy;
    let pairs: Vec<_> = strategy.pairs().map(|(_, a, b)| (a, b)).collect();
    let stratum_keys: Vec<Option<u8>> = match conditioning {
        Conditioning::None => alloc::vec![None],
        Conditioning::By(sel) => (0..sel.stratum_count()).map(|k| Some(k as u8)).collect(),
    };
    let mut strata: Vec<Stratum> = stratum_keys
        .into_iter()
        .map(|key| Stratum {
            key,
            counts: alloc::vec![[0u64; 4]; pairs.len()],
        })
        .collect();
    for r in &ensemble.records {
        if !filter(r) {
            continue;
        }
        let stratum = match conditioning {
            Conditioning::None => 0,
            Conditioning::By(sel) => match sel.value(r) {
                Some(v) => v as usize,
                None => continue,
            },
        };
        let Some(pair) = strategy.pair_id(r.a, r.b) else {
            debug_assert!(false, "record angles not in strategy");
            continue;
        };
        strata[stratum].counts[pair][r.outcome_a.index() * 2 + r.outcome_b.index()] += 1;
    }
    JointTable {
        pairs,
        conditioning,
        strata,
    }
}

/// Point estimate with its standard error and sample size.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrEstimate {
    pub value: f64,
    pub stderr: f64,
    pub n: u64,
}

impl CorrEstimate {
    /// |value − reference| ≤ k·stderr.
    pub fn within(&self, reference: f64, k: f64) -> bool {
        math::abs(self.value - reference) <= k * self.stderr
    }
}

fn corr_from_counts(c: [u64; 4]) -> Option<CorrEstimate> {
    let n: u64 = c.iter().sum();
    if n == 0 {
        return None;
    }
    let same = (c[0] + c[3]) as f64;
    let diff = (c[1] + c[2]) as f64;
    let value = (same - diff) / n as f64;
    let stderr = math::sqrt((1.0 - value * value).max(0.0) / n as f64);
    Some(CorrEstimate {
        value,
        stderr,
        n,
    })
}

/// Correlation estimate straight from raw outcome pairs; `None` when
/// the iterator is empty.
pub fn corr_of_pairs(
    pairs: impl IntoIterator<Item = (Outcome, Outcome)>,
) -> Option<CorrEstimate> {
    let mut c = [0u64; 4];
    for (a, b) in pairs {
        c[a.index() * 2 + b.index()] += 1;
    }
    corr_from_counts(c)
}

/// Ê = (N_same − N_diff)/N for one setting pair of an unconditioned
/// table (stratum 0).
pub fn corr(table: &JointTable, pair: usize) -> Result<CorrEstimate, StatsError> {
    corr_in(table, 0, pair)
}

/// Per-stratum correlation estimate; empty strata are flagged as errors
/// so callers must surface them.
pub fn corr_in(table: &JointTable, stratum: usize, pair: usize) -> Result<CorrEstimate, StatsError> {
    let s = table.stratum(stratum).ok_or(StatsError::BadStratum(stratum))?;
    let c = *s.counts.get(pair).ok_or(StatsError::BadPair(pair))?;
    corr_from_counts(c).ok_or(StatsError::EmptyStratum { stratum, pair })
}

/// Which of the four CHSH terms carries the minus sign.
///
/// Terms are ordered (a1,b1), (a1,b2), (a2,b1), (a2,b2). On the standard
/// quadruple a ∈ {0, π/2}, b ∈ {π/4, 3π/4} with E = −cos(a−b), only the
/// minus on (a1,b2) reaches |S| = 2√2, so that is the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChshConvention {
    MinusA1B1,
    #[default]
    MinusA1B2,
    MinusA2B1,
    MinusA2B2,
}

impl ChshConvention {
    fn minus_index(self) -> usize {
        match self {
            ChshConvention::MinusA1B1 => 0,
            ChshConvention::MinusA1B2 => 1,
            ChshConvention::MinusA2B1 => 2,
            ChshConvention::MinusA2B2 => 3,
        }
    }

    pub fn sign(self, term: usize) -> f64 {
        if term == self.minus_index() {
            -1.0
        } else {
            1.0
        }
    }

    pub fn token(self) -> &'static str {
        match self {
            ChshConvention::MinusA1B1 => "minus_a1b1",
            ChshConvention::MinusA1B2 => "minus_a1b2",
            ChshConvention::MinusA2B1 => "minus_a2b1",
            ChshConvention::MinusA2B2 => "minus_a2b2",
        }
    }

    pub fn parse(s: &str) -> Option<ChshConvention> {
        match s {
            "minus_a1b1" => Some(ChshConvention::MinusA1B1),
            "minus_a1b2" => Some(ChshConvention::MinusA1B2),
            "minus_a2b1" => Some(ChshConvention::MinusA2B1),
            "minus_a2b2" => Some(ChshConvention::MinusA2B2),
            _ => None,
        }
    }
}

/// CHSH sum over four setting pairs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshReport {
    pub s: f64,
    /// Quadrature combination of the four term stderrs.
    pub stderr: f64,
    pub correlations: [CorrEstimate; 4],
    pub convention: ChshConvention,
    pub analytic: Option<f64>,
    /// |S| exceeds the classical bound 2 by more than 5 stderr.
    pub violates_classical_bound: bool,
}

/// CHSH from an unconditioned table (stratum 0).
pub fn chsh(
    table: &JointTable,
    pair_ids: [usize; 4],
    convention: ChshConvention,
) -> Result<ChshReport, StatsError> {
    chsh_in(table, 0, pair_ids, convention)
}

/// CHSH from one stratum of a conditioned table. `pair_ids` are in term
/// order (a1,b1), (a1,b2), (a2,b1), (a2,b2); for a 2×2 strategy that is
/// `[0, 1, 2, 3]`.
pub fn chsh_in(
    table: &JointTable,
    stratum: usize,
    pair_ids: [usize; 4],
    convention: ChshConvention,
) -> Result<ChshReport, StatsError> {
    let mut correlations = [CorrEstimate {
        value: 0.0,
        stderr: 0.0,
        n: 0,
    }; 4];
    let mut s = 0.0;
    let mut var = 0.0;
    for (term, &pair) in pair_ids.iter().enumerate() {
        let e = corr_in(table, stratum, pair)?;
        correlations[term] = e;
        s += convention.sign(term) * e.value;
        var += e.stderr * e.stderr;
    }
    let stderr = math::sqrt(var);
    Ok(ChshReport {
        s,
        stderr,
        correlations,
        convention,
        analytic: None,
        violates_classical_bound: math::abs(s) > 2.0 + 5.0 * stderr,
    })
}

impl ChshReport {
    pub fn with_analytic(mut self, analytic: f64) -> ChshReport {
        self.analytic = Some(analytic);
        self
    }
}

/// Closed-form CHSH sum for a two-qubit state over four angle pairs.
pub fn analytic_chsh(
    state: &PureState,
    pairs: [(MeasAngle, MeasAngle); 4],
    convention: ChshConvention,
) -> Result<f64, StatsError> {
    let mut s = 0.0;
    for (term, (a, b)) in pairs.into_iter().enumerate() {
        s += convention.sign(term) * joint_distribution(state, a, b)?.correlation();
    }
    Ok(s)
}

/// One factorizability cell: how far P̂(A,B) sits from P̂(A)·P̂(B)
/// within a stratum and setting pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FactCell {
    pub stratum_key: Option<u8>,
    pub pair: usize,
    pub outcome_a: Outcome,
    pub outcome_b: Outcome,
    pub deviation: f64,
    /// Delta-method stderr of the deviation under the multinomial.
    pub stderr: f64,
    pub n: u64,
}

/// Factorizability deviations across all strata and pairs.
#[derive(Debug, Clone, PartialEq)]
pub struct FactReport {
    pub cells: Vec<FactCell>,
    pub max_deviation: f64,
    pub argmax: FactCell,
    /// (stratum key, pair) combinations skipped for lack of records.
    pub skipped: Vec<(Option<u8>, usize)>,
    pub analytic_max: Option<f64>,
}

impl FactReport {
    pub fn with_analytic(mut self, analytic_max: f64) -> FactReport {
        self.analytic_max = Some(analytic_max);
        self
    }
}

/// |P̂(A,B) − P̂(A)P̂(B)| per cell; the maximum is the headline number.
/// Strata/pairs with no records are listed in `skipped`.
pub fn fact_deviation(table: &JointTable) -> Result<FactReport, StatsError> {
    let mut cells = Vec::new();
    let mut skipped = Vec::new();
    for (si, stratum) in table.strata.iter().enumerate() {
        for pair in 0..table.pair_count() {
            let c = table.counts(si, pair).expect("pair in range");
            let n: u64 = c.iter().sum();
            if n == 0 {
                skipped.push((stratum.key, pair));
                continue;
            }
            let p: Vec<f64> = c.iter().map(|&x| x as f64 / n as f64).collect();
            for oa in Outcome::BOTH {
                for ob in Outcome::BOTH {
                    let i = oa.index();
                    let j = ob.index();
                    let p_ab = p[i * 2 + j];
                    let p_a = p[i * 2] + p[i * 2 + 1];
                    let p_b = p[j] + p[2 + j];
                    let deviation = math::abs(p_ab - p_a * p_b);
                    // delta method: g_kl = ∂D/∂p_kl at the plug-in point
                    let mut mean_g = 0.0;
                    let mut mean_g2 = 0.0;
                    for k in 0..2 {
                        for l in 0..2 {
                            let g = f64::from(u8::from(k == i && l == j))
                                - f64::from(u8::from(k == i)) * p_b
                                - f64::from(u8::from(l == j)) * p_a;
                            let w = p[k * 2 + l];
                            mean_g += w * g;
                            mean_g2 += w * g * g;
                        }
                    }
                    let var = ((mean_g2 - mean_g * mean_g) / n as f64).max(0.0);
                    cells.push(FactCell {
                        stratum_key: stratum.key,
                        pair,
                        outcome_a: oa,
                        outcome_b: ob,
                        deviation,
                        stderr: math::sqrt(var),
                        n,
                    });
                }
            }
        }
    }
    let argmax = cells
        .iter()
        .copied()
        .max_by(|x, y| x.deviation.total_cmp(&y.deviation))
        .ok_or(StatsError::NoData)?;
    Ok(FactReport {
        max_deviation: argmax.deviation,
        argmax,
        cells,
        skipped,
        analytic_max: None,
    })
}

/// Closed-form factorizability deviation: max over the four cells of
/// |P(A,B) − P(A)P(B)|.
pub fn fact_deviation_analytic(dist: &JointDist) -> f64 {
    let mut max = 0.0f64;
    for oa in Outcome::BOTH {
        for ob in Outcome::BOTH {
            let d = math::abs(dist.prob(oa, ob) - dist.marginal_a(oa) * dist.marginal_b(ob));
            max = max.max(d);
        }
    }
    max
}

/// Conditional correlation for one value of the candidate common cause.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScreenStratum {
    pub key: u8,
    /// Pearson (phi) correlation of the two readings inside the
    /// stratum. The plain ±1 product mean would conflate biased
    /// conditional marginals with dependence — fixing a cause often
    /// pins each side's reading most of the way — so the margins are
    /// normalized out. `None` when a margin is constant: nothing left
    /// to correlate.
    pub corr: Option<CorrEstimate>,
}

/// Per-stratum correlations after conditioning on a candidate common
/// cause. A screening-off cause drives every stratum correlation to
/// zero; a cause that fails to screen off leaves them large.
#[derive(Debug, Clone, PartialEq)]
pub struct ScreenReport {
    pub strata: Vec<ScreenStratum>,
    pub max_abs_conditional_corr: f64,
    /// Fewer than two distinct cause values were observed, so the
    /// conditioning is vacuous.
    pub degenerate: bool,
}

/// Screening-off summary from raw `(cause, A, B)` triples.
pub fn screening_off_triples(
    triples: impl IntoIterator<Item = (u8, Outcome, Outcome)>,
) -> ScreenReport {
    let mut by_cause: BTreeMap<u8, [[u64; 2]; 2]> = BTreeMap::new();
    for (cause, oa, ob) in triples {
        by_cause.entry(cause).or_default()[oa.index()][ob.index()] += 1;
    }
    let degenerate = by_cause.len() < 2;
    let strata: Vec<ScreenStratum> = by_cause
        .into_iter()
        .map(|(key, counts)| ScreenStratum {
            key,
            corr: phi(counts).ok(),
        })
        .collect();
    let max_abs_conditional_corr = strata
        .iter()
        .filter_map(|s| s.corr.map(|c| math::abs(c.value)))
        .fold(0.0f64, f64::max);
    ScreenReport {
        strata,
        max_abs_conditional_corr,
        degenerate,
    }
}

/// Screening-off summary for an ensemble, conditioning on `cause`.
/// Settings are pooled, which is the intended reading for single-pair
/// strategies; records without the cause field are ignored.
pub fn screening_off(ensemble: &Ensemble, cause: CauseSelector) -> ScreenReport {
    screening_off_triples(
        ensemble
            .records
            .iter()
            .filter_map(|r| cause.value(r).map(|v| (v, r.outcome_a, r.outcome_b))),
    )
}

/// Correlation difference between a sub-ensemble and its super-ensemble
/// at one setting pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectionDeltaReport {
    pub super_corr: CorrEstimate,
    pub sub_corr: CorrEstimate,
    /// sub − super.
    pub delta: f64,
    /// delta over the quadrature-combined stderr.
    pub z_score: f64,
}

/// Quantifies how much stronger (or weaker) the correlation is in a
/// selected sub-ensemble than in the unselected whole.
pub fn selection_delta(
    super_table: &JointTable,
    sub_table: &JointTable,
    pair: usize,
) -> Result<SelectionDeltaReport, StatsError> {
    let super_corr = corr(super_table, pair)?;
    let sub_corr = corr(sub_table, pair)?;
    let delta = sub_corr.value - super_corr.value;
    let denom = math::sqrt(super_corr.stderr * super_corr.stderr + sub_corr.stderr * sub_corr.stderr);
    let z_score = if denom > 0.0 {
        delta / denom
    } else if delta == 0.0 {
        0.0
    } else if delta > 0.0 {
        f64::INFINITY
    } else {
        f64::NEG_INFINITY
    };
    Ok(SelectionDeltaReport {
        super_corr,
        sub_corr,
        delta,
        z_score,
    })
}

/// Empirical table vs closed-form reference for one stratum.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleComparison {
    pub max_abs_deviation: f64,
    /// (pair, A, B) of the worst cell.
    pub max_cell: (usize, Outcome, Outcome),
    /// Worst deviation in units of its binomial stderr.
    pub max_sigmas: f64,
    pub chi_square: f64,
    pub df: u64,
    pub p_value: f64,
    /// Cells with zero analytic probability that were nevertheless
    /// observed.
    pub impossible_observed: u64,
}

impl OracleComparison {
    pub fn within_sigmas(&self, k: f64) -> bool {
        self.max_sigmas <= k && self.impossible_observed == 0
    }
}

/// Compares one stratum of an empirical table against the closed-form
/// outcome distribution of `state` at each setting pair.
pub fn compare_to_analytic(
    table: &JointTable,
    stratum: usize,
    state: &PureState,
) -> Result<OracleComparison, StatsError> {
    const P_ZERO: f64 = 1e-15;
    if table.stratum(stratum).is_none() {
        return Err(StatsError::BadStratum(stratum));
    }
    let mut max_abs_deviation = -1.0;
    let mut max_cell = (0, Outcome::Plus, Outcome::Plus);
    let mut max_sigmas = 0.0f64;
    let mut chi_square = 0.0;
    let mut df = 0i64;
    let mut impossible_observed = 0u64;
    let mut any = false;
    for (pair, &(a, b)) in table.pairs.iter().enumerate() {
        let c = table.counts(stratum, pair).expect("pair in range");
        let n: u64 = c.iter().sum();
        if n == 0 {
            return Err(StatsError::EmptyStratum { stratum, pair });
        }
        any = true;
        let reference = joint_distribution(state, a, b)?;
        let mut pair_cells = 0i64;
        for oa in Outcome::BOTH {
            for ob in Outcome::BOTH {
                let p = reference.prob(oa, ob);
                let observed = c[oa.index() * 2 + ob.index()];
                let f = observed as f64 / n as f64;
                let dev = math::abs(f - p);
                if dev > max_abs_deviation {
                    max_abs_deviation = dev;
                    max_cell = (pair, oa, ob);
                }
                if p <= P_ZERO {
                    impossible_observed += observed;
                    continue;
                }
                let sigma = math::sqrt(p * (1.0 - p) / n as f64);
                let sigmas = if sigma > 0.0 {
                    dev / sigma
                } else if dev == 0.0 {
                    0.0
                } else {
                    f64::INFINITY
                };
                max_sigmas = max_sigmas.max(sigmas);
                let expected = n as f64 * p;
                chi_square += (observed as f64 - expected) * (observed as f64 - expected) / expected;
                pair_cells += 1;
            }
        }
        df += (pair_cells - 1).max(0);
    }
    if !any {
        return Err(StatsError::NoData);
    }
    let df = df.max(1) as u64;
    Ok(OracleComparison {
        max_abs_deviation,
        max_cell,
        max_sigmas,
        chi_square,
        df,
        p_value: special::chi_square_sf(chi_square, df),
        impossible_observed,
    })
}

/// Total variation distance (1/2)Σ|p − q| between two distributions over
/// the same index set.
pub fn tv_distance(p: &[f64], q: &[f64]) -> Result<f64, StatsError> {
    if p.len() != q.len() {
        return Err(StatsError::IndexMismatch(p.len(), q.len()));
    }
    Ok(0.5 * p.iter().zip(q).map(|(x, y)| math::abs(x - y)).sum::<f64>())
}

/// Chi-square test result.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub df: u64,
    pub p_value: f64,
}

/// Pearson chi-square homogeneity test: do the groups share one
/// category distribution? Groups and categories with zero totals drop
/// out of the statistic and the degrees of freedom.
pub fn chi_square_homogeneity(groups: &[Vec<u64>]) -> Result<ChiSquare, StatsError> {
    let k = groups.first().ok_or(StatsError::NoData)?.len();
    if groups.iter().any(|g| g.len() != k) {
        return Err(StatsError::IndexMismatch(
            k,
            groups.iter().map(|g| g.len()).find(|&l| l != k).unwrap_or(k),
        ));
    }
    let row_totals: Vec<u64> = groups.iter().map(|g| g.iter().sum()).collect();
    let col_totals: Vec<u64> = (0..k)
        .map(|j| groups.iter().map(|g| g[j]).sum())
        .collect();
    let grand: u64 = row_totals.iter().sum();
    if grand == 0 {
        return Err(StatsError::NoData);
    }
    let live_rows = row_totals.iter().filter(|&&r| r > 0).count();
    let live_cols = col_totals.iter().filter(|&&c| c > 0).count();
    if live_rows < 2 || live_cols < 2 {
        return Err(StatsError::NoData);
    }
    let mut statistic = 0.0;
    for (gi, g) in groups.iter().enumerate() {
        if row_totals[gi] == 0 {
            continue;
        }
        for j in 0..k {
            if col_totals[j] == 0 {
                continue;
            }
            let expected = row_totals[gi] as f64 * col_totals[j] as f64 / grand as f64;
            let observed = g[j] as f64;
            statistic += (observed - expected) * (observed - expected) / expected;
        }
    }
    let df = ((live_rows - 1) * (live_cols - 1)) as u64;
    Ok(ChiSquare {
        statistic,
        df,
        p_value: special::chi_square_sf(statistic, df),
    })
}

/// Phi coefficient (Pearson correlation of two binary variables) from a
/// 2×2 count table `counts[x][y]`. Errors when a margin is empty.
pub fn phi(counts: [[u64; 2]; 2]) -> Result<CorrEstimate, StatsError> {
    let n11 = counts[1][1] as f64;
    let n10 = counts[1][0] as f64;
    let n01 = counts[0][1] as f64;
    let n00 = counts[0][0] as f64;
    let r1 = n11 + n10;
    let r0 = n01 + n00;
    let c1 = n11 + n01;
    let c0 = n10 + n00;
    if r1 == 0.0 || r0 == 0.0 || c1 == 0.0 || c0 == 0.0 {
        return Err(StatsError::DegenerateMargin);
    }
    let n = r1 + r0;
    let value = (n11 * n00 - n10 * n01) / math::sqrt(r1 * r0 * c1 * c0);
    let stderr = math::sqrt((1.0 - value * value).max(0.0) / n);
    Ok(CorrEstimate {
        value,
        stderr,
        n: n as u64,
    })
}

/// Odds ratio of a 2×2 count table; `None` when the off-diagonal is
/// empty.
pub fn odds_ratio(counts: [[u64; 2]; 2]) -> Option<f64> {
    let n11 = counts[1][1] as f64;
    let n10 = counts[1][0] as f64;
    let n01 = counts[0][1] as f64;
    let n00 = counts[0][0] as f64;
    if n10 == 0.0 || n01 == 0.0 {
        return None;
    }
    Some(n11 * n00 / (n10 * n01))
}
