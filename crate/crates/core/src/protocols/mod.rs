//! Monte Carlo protocol runners producing event ensembles.
//!
//! Five protocols share one event-record shape:
//!
//! * `fixed_state` — both wings measure a fixed Bell pair.
//! * `random_state` — the pair label is drawn uniformly per trial.
//! * `swap` — two Bell pairs and a midpoint Bell measurement on the inner
//!   qubits; the midpoint may be measured before, between, or after the
//!   wings (a bookkeeping choice that cannot change any statistics).
//! * `classical_filter` — no quantum state at all: settings and outcomes
//!   are fair coins, and each record is kept with probability equal to
//!   the singlet's joint outcome probability at those settings. Discarded
//!   records stay in the ensemble with `kept = false`.
//! * `hopper_sort` — same coin-driven records, but every record is routed
//!   (never discarded) to one of four bins by the posterior probability
//!   that each Bell state would have produced it under a uniform prior.
//!
//! Every trial's randomness comes from [`TrialRng::new`](crate::rng::TrialRng)
//! keyed by `(master_seed, trial)`, so an ensemble is a pure function of
//! its config and seed: re-runs, partial runs, and parallel runs agree
//! byte for byte. Within a trial the draw order is fixed and documented
//! on each runner.

pub mod analytic;

pub use analytic::{equivalence_map, zero_probability_combos, EquivalenceReport, ZeroCombo};

use alloc::vec::Vec;
use core::fmt;

use crate::math;
use crate::quantum::{
    bell_measure, bell_state, joint_distribution, measure_qubit, tensor, BellLabel, MeasAngle,
    Outcome, PureState, QuantumError,
};
use crate::rng::TrialRng;

const WEIGHT_SUM_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ProtocolError {
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error("strategy has no angles for side {0}")]
    EmptyAngleList(&'static str),
    #[error("duplicate angle in side {0} at position {1}")]
    DuplicateAngle(&'static str, usize),
    #[error("expected {expected} weights, got {got}")]
    BadWeightCount { expected: usize, got: usize },
    #[error("weight {0} is negative or non-finite")]
    BadWeight(f64),
    #[error("weights sum to {0}, not 1 within 1e-12")]
    WeightSumNotOne(f64),
    #[error("trial count must be at least 1")]
    ZeroTrials,
    #[error("{0} needs a 2x2 strategy with uniform weights (setting bits are fair coins)")]
    NotTwoByTwoUniform(&'static str),
    #[error("expected a {expected} ensemble, got {got}")]
    ProtocolMismatch {
        expected: &'static str,
        got: &'static str,
    },
    #[error("ensembles use different setting strategies")]
    StrategyMismatch,
}

/// Joint distribution over Alice/Bob measurement settings.
///
/// A strategy is a finite list of angles per side plus per-pair weights
/// (row-major over `a × b`). Weights must be non-negative and sum to 1
/// within 1e-12; omitted weights mean the uniform distribution.
#[derive(Debug, Clone, PartialEq)]
pub struct SettingStrategy {
    a_choices: Vec<MeasAngle>,
    b_choices: Vec<MeasAngle>,
    weights: Vec<f64>,
}

impl SettingStrategy {
    pub fn new(
        a_choices: Vec<MeasAngle>,
        b_choices: Vec<MeasAngle>,
        weights: Option<Vec<f64>>,
    ) -> Result<SettingStrategy, ProtocolError> {
        if a_choices.is_empty() {
            return Err(ProtocolError::EmptyAngleList("a"));
        }
        if b_choices.is_empty() {
            return Err(ProtocolError::EmptyAngleList("b"));
        }
        for (side, list) in [("a", &a_choices), ("b", &b_choices)] {
            for i in 1..list.len() {
                if list[..i].contains(&list[i]) {
                    return Err(ProtocolError::DuplicateAngle(side, i));
                }
            }
        }
        let n = a_choices.len() * b_choices.len();
        let weights = match weights {
            None => alloc::vec![1.0 / n as f64; n],
            Some(w) => {
                if w.len() != n {
                    return Err(ProtocolError::BadWeightCount {
                        expected: n,
                        got: w.len(),
                    });
                }
                for &x in &w {
                    if !x.is_finite() || x < 0.0 {
                        return Err(ProtocolError::BadWeight(x));
                    }
                }
                let sum: f64 = w.iter().sum();
                if math::abs(sum - 1.0) > WEIGHT_SUM_TOL {
                    return Err(ProtocolError::WeightSumNotOne(sum));
                }
                w
            }
        };
        Ok(SettingStrategy {
            a_choices,
            b_choices,
            weights,
        })
    }

    /// The standard CHSH quadruple: a ∈ {0, π/2}, b ∈ {π/4, 3π/4},
    /// uniform weights.
    pub fn chsh_quadruple() -> SettingStrategy {
        use core::f64::consts::{FRAC_PI_2, FRAC_PI_4};
        SettingStrategy::new(
            alloc::vec![MeasAngle::new(0.0), MeasAngle::new(FRAC_PI_2)],
            alloc::vec![MeasAngle::new(FRAC_PI_4), MeasAngle::new(3.0 * FRAC_PI_4)],
            None,
        )
        .expect("constant quadruple is valid")
    }

    /// Single fixed setting pair.
    pub fn single(a: MeasAngle, b: MeasAngle) -> SettingStrategy {
        SettingStrategy::new(alloc::vec![a], alloc::vec![b], None)
            .expect("a single pair is always valid")
    }

    pub fn a_choices(&self) -> &[MeasAngle] {
        &self.a_choices
    }

    pub fn b_choices(&self) -> &[MeasAngle] {
        &self.b_choices
    }

    pub fn pair_count(&self) -> usize {
        self.weights.len()
    }

    pub fn a_count(&self) -> usize {
        self.a_choices.len()
    }

    pub fn b_count(&self) -> usize {
        self.b_choices.len()
    }

    /// Angles for a row-major pair id.
    pub fn pair(&self, id: usize) -> (MeasAngle, MeasAngle) {
        let nb = self.b_choices.len();
        (self.a_choices[id / nb], self.b_choices[id % nb])
    }

    pub fn weight(&self, id: usize) -> f64 {
        self.weights[id]
    }

    pub fn pairs(&self) -> impl Iterator<Item = (usize, MeasAngle, MeasAngle)> + '_ {
        (0..self.pair_count()).map(|id| {
            let (a, b) = self.pair(id);
            (id, a, b)
        })
    }

    /// Exact (bitwise) reverse lookup from recorded angles to a pair id.
    pub fn pair_id(&self, a: MeasAngle, b: MeasAngle) -> Option<usize> {
        let ai = self.a_choices.iter().position(|x| x.bits() == a.bits())?;
        let bi = self.b_choices.iter().position(|x| x.bits() == b.bits())?;
        Some(ai * self.b_choices.len() + bi)
    }

    /// Draws a pair id by cumulative-sum inversion (strict inequality,
    /// ascending pair id), so zero-weight pairs are never selected.
    fn sample(&self, u: f64) -> usize {
        let mut acc = 0.0;
        for (id, &w) in self.weights.iter().enumerate() {
            acc += w;
            if u < acc {
                return id;
            }
        }
        self.weights.len() - 1
    }

    fn is_two_by_two_uniform(&self) -> bool {
        self.a_choices.len() == 2
            && self.b_choices.len() == 2
            && self
                .weights
                .iter()
                .all(|&w| math::abs(w - 0.25) <= WEIGHT_SUM_TOL)
    }
}

/// When the midpoint Bell measurement happens relative to the wings.
/// Purely bookkeeping: the three orders commute, and both the analytic
/// tables and the sampled statistics are invariant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Geometry {
    Past,
    Intermediate,
    Future,
}

impl Geometry {
    pub const ALL: [Geometry; 3] = [Geometry::Past, Geometry::Intermediate, Geometry::Future];

    pub fn token(self) -> &'static str {
        match self {
            Geometry::Past => "past",
            Geometry::Intermediate => "intermediate",
            Geometry::Future => "future",
        }
    }

    pub fn parse(s: &str) -> Option<Geometry> {
        match s {
            "past" => Some(Geometry::Past),
            "intermediate" => Some(Geometry::Intermediate),
            "future" => Some(Geometry::Future),
            _ => None,
        }
    }
}

impl fmt::Display for Geometry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Protocol selector plus its per-protocol parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProtocolKind {
    FixedState { label: BellLabel },
    RandomState,
    Swap { geometry: Geometry },
    ClassicalFilter,
    HopperSort,
}

impl ProtocolKind {
    /// Stable identifier used in serialized records.
    pub fn id(&self) -> &'static str {
        match self {
            ProtocolKind::FixedState { .. } => "fixed_state",
            ProtocolKind::RandomState => "random_state",
            ProtocolKind::Swap { .. } => "swap",
            ProtocolKind::ClassicalFilter => "classical_filter",
            ProtocolKind::HopperSort => "hopper_sort",
        }
    }
}

/// Full description of a run: what to execute and how often.
#[derive(Debug, Clone, PartialEq)]
pub struct ProtocolConfig {
    pub kind: ProtocolKind,
    pub strategy: SettingStrategy,
    pub trials: u64,
}

impl ProtocolConfig {
    pub fn new(
        kind: ProtocolKind,
        strategy: SettingStrategy,
        trials: u64,
    ) -> Result<ProtocolConfig, ProtocolError> {
        if trials == 0 {
            return Err(ProtocolError::ZeroTrials);
        }
        match kind {
            ProtocolKind::ClassicalFilter if !strategy.is_two_by_two_uniform() => {
                return Err(ProtocolError::NotTwoByTwoUniform("classical_filter"));
            }
            ProtocolKind::HopperSort if !strategy.is_two_by_two_uniform() => {
                return Err(ProtocolError::NotTwoByTwoUniform("hopper_sort"));
            }
            _ => {}
        }
        Ok(ProtocolConfig {
            kind,
            strategy,
            trials,
        })
    }
}

/// One completed trial.
///
/// Field population follows the protocol: quantum protocols set exactly
/// one of `prep`/`swap_outcome`; `hopper` is set only by `hopper_sort`;
/// `kept` is false only in `classical_filter` ensembles.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EventRecord {
    pub trial: u64,
    pub protocol: ProtocolKind,
    /// Bell label the pair was prepared in (fixed/random state runs).
    pub prep: Option<BellLabel>,
    /// Result of the midpoint Bell measurement (swap runs).
    pub swap_outcome: Option<BellLabel>,
    pub a: MeasAngle,
    pub b: MeasAngle,
    pub outcome_a: Outcome,
    pub outcome_b: Outcome,
    pub kept: bool,
    /// Destination bin of the posterior sorter (hopper_sort runs).
    pub hopper: Option<u8>,
}

/// Ensemble of event records together with everything needed to
/// reproduce it.
#[derive(Debug, Clone, PartialEq)]
pub struct Ensemble {
    pub records: Vec<EventRecord>,
    pub config: ProtocolConfig,
    pub master_seed: u64,
}

impl Ensemble {
    pub fn protocol_id(&self) -> &'static str {
        self.config.kind.id()
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }
}

/// Runs all trials serially. The result depends only on `(config,
/// master_seed)`.
pub fn run(config: &ProtocolConfig, master_seed: u64) -> Result<Ensemble, ProtocolError> {
    let mut records = Vec::with_capacity(config.trials as usize);
    for trial in 0..config.trials {
        records.push(simulate_trial(config, master_seed, trial)?);
    }
    Ok(Ensemble {
        records,
        config: config.clone(),
        master_seed,
    })
}

/// Runs trials on the current rayon pool. Order-preserving collection
/// plus per-trial streams make the output identical to [`run`] for any
/// worker count.
#[cfg(feature = "parallel")]
pub fn run_parallel(config: &ProtocolConfig, master_seed: u64) -> Result<Ensemble, ProtocolError> {
    use rayon::prelude::*;
    let records = (0..config.trials)
        .into_par_iter()
        .map(|trial| simulate_trial(config, master_seed, trial))
        .collect::<Result<Vec<_>, _>>()?;
    Ok(Ensemble {
        records,
        config: config.clone(),
        master_seed,
    })
}

/// Simulates a single trial; pure in `(config, master_seed, trial)`.
pub fn simulate_trial(
    config: &ProtocolConfig,
    master_seed: u64,
    trial: u64,
) -> Result<EventRecord, ProtocolError> {
    let mut rng = TrialRng::new(master_seed, trial);
    match config.kind {
        ProtocolKind::FixedState { label } => {
            fixed_state_trial(config, trial, label, &mut rng)
        }
        ProtocolKind::RandomState => random_state_trial(config, trial, &mut rng),
        ProtocolKind::Swap { geometry } => swap_trial(config, trial, geometry, &mut rng),
        ProtocolKind::ClassicalFilter => filter_trial(config, trial, &mut rng),
        ProtocolKind::HopperSort => hopper_trial(config, trial, &mut rng),
    }
}

/// Measures both wings of `state` (qubit 0 at `a`, qubit 1 at `b`).
fn measure_pair(
    state: &PureState,
    a: MeasAngle,
    b: MeasAngle,
    rng: &mut TrialRng,
) -> Result<(Outcome, Outcome), QuantumError> {
    let (oa, after) = measure_qubit(state, 0, a, rng.uniform())?;
    let (ob, _) = measure_qubit(&after, 1, b, rng.uniform())?;
    Ok((oa, ob))
}

// Draw order: pair, A, B.
fn fixed_state_trial(
    config: &ProtocolConfig,
    trial: u64,
    label: BellLabel,
    rng: &mut TrialRng,
) -> Result<EventRecord, ProtocolError> {
    let (a, b) = config.strategy.pair(config.strategy.sample(rng.uniform()));
    let state = bell_state(label);
    let (oa, ob) = measure_pair(&state, a, b, rng)?;
    Ok(EventRecord {
        trial,
        protocol: config.kind,
        prep: Some(label),
        swap_outcome: None,
        a,
        b,
        outcome_a: oa,
        outcome_b: ob,
        kept: true,
        hopper: None,
    })
}

// Draw order: pair, label, A, B.
fn random_state_trial(
    config: &ProtocolConfig,
    trial: u64,
    rng: &mut TrialRng,
) -> Result<EventRecord, ProtocolError> {
    let (a, b) = config.strategy.pair(config.strategy.sample(rng.uniform()));
    let label = BellLabel::ALL[rng.below(4) as usize];
    let state = bell_state(label);
    let (oa, ob) = measure_pair(&state, a, b, rng)?;
    Ok(EventRecord {
        trial,
        protocol: config.kind,
        prep: Some(label),
        swap_outcome: None,
        a,
        b,
        outcome_a: oa,
        outcome_b: ob,
        kept: true,
        hopper: None,
    })
}

// Draw order: pair, then one uniform per measurement in the geometry's
// order (past: M A B; intermediate: A M B; future: A B M). Qubits:
// wing A = 0, midpoint = (1, 2), wing B = 3.
fn swap_trial(
    config: &ProtocolConfig,
    trial: u64,
    geometry: Geometry,
    rng: &mut TrialRng,
) -> Result<EventRecord, ProtocolError> {
    let (a, b) = config.strategy.pair(config.strategy.sample(rng.uniform()));
    let singlet = bell_state(BellLabel::PsiMinus);
    let mut state = tensor(&singlet, &singlet)?;
    let mut m_outcome = None;
    let mut oa = None;
    let mut ob = None;
    let order: [Step; 3] = match geometry {
        Geometry::Past => [Step::Mid, Step::WingA, Step::WingB],
        Geometry::Intermediate => [Step::WingA, Step::Mid, Step::WingB],
        Geometry::Future => [Step::WingA, Step::WingB, Step::Mid],
    };
    for step in order {
        let u = rng.uniform();
        match step {
            Step::Mid => {
                let (m, next) = bell_measure(&state, 1, 2, u)?;
                m_outcome = Some(m);
                state = next;
            }
            Step::WingA => {
                let (o, next) = measure_qubit(&state, 0, a, u)?;
                oa = Some(o);
                state = next;
            }
            Step::WingB => {
                let (o, next) = measure_qubit(&state, 3, b, u)?;
                ob = Some(o);
                state = next;
            }
        }
    }
    Ok(EventRecord {
        trial,
        protocol: config.kind,
        prep: None,
        swap_outcome: m_outcome,
        a,
        b,
        outcome_a: oa.expect("wing A measured"),
        outcome_b: ob.expect("wing B measured"),
        kept: true,
        hopper: None,
    })
}

#[derive(Clone, Copy)]
enum Step {
    WingA,
    WingB,
    Mid,
}

fn coin_outcome(rng: &mut TrialRng) -> Outcome {
    if rng.bit() {
        Outcome::Plus
    } else {
        Outcome::Minus
    }
}

// Draw order: setting bit a, setting bit b, outcome A, outcome B, keep.
// All coins are fair; the keep draw compares against the singlet's joint
// probability for the sampled settings and outcomes.
fn filter_trial(
    config: &ProtocolConfig,
    trial: u64,
    rng: &mut TrialRng,
) -> Result<EventRecord, ProtocolError> {
    let a = config.strategy.a_choices[rng.bit() as usize];
    let b = config.strategy.b_choices[rng.bit() as usize];
    let oa = coin_outcome(rng);
    let ob = coin_outcome(rng);
    let target = joint_distribution(&bell_state(BellLabel::PsiMinus), a, b)?;
    let kept = rng.uniform() < target.prob(oa, ob);
    Ok(EventRecord {
        trial,
        protocol: config.kind,
        prep: None,
        swap_outcome: None,
        a,
        b,
        outcome_a: oa,
        outcome_b: ob,
        kept,
        hopper: None,
    })
}

/// Posterior over Bell labels given settings and outcomes, under a
/// uniform prior. Normalized explicitly; because the equal-weight Bell
/// mixture is maximally mixed, the evidence term is always 1/4 and the
/// posterior coincides with the forward conditional `P(A,B | a,b,label)`.
pub fn hopper_posterior(
    a: MeasAngle,
    b: MeasAngle,
    outcome_a: Outcome,
    outcome_b: Outcome,
) -> Result<[f64; 4], ProtocolError> {
    let mut post = [0.0f64; 4];
    for label in BellLabel::ALL {
        let d = joint_distribution(&bell_state(label), a, b)?;
        post[label.index()] = 0.25 * d.prob(outcome_a, outcome_b);
    }
    let total: f64 = post.iter().sum();
    for p in &mut post {
        *p /= total;
    }
    Ok(post)
}

// Draw order: setting bit a, setting bit b, outcome A, outcome B, bin.
// The bin draw inverts the posterior's cumulative sum in fixed label
// order with strict inequality. Nothing is ever discarded.
fn hopper_trial(
    config: &ProtocolConfig,
    trial: u64,
    rng: &mut TrialRng,
) -> Result<EventRecord, ProtocolError> {
    let a = config.strategy.a_choices[rng.bit() as usize];
    let b = config.strategy.b_choices[rng.bit() as usize];
    let oa = coin_outcome(rng);
    let ob = coin_outcome(rng);
    let post = hopper_posterior(a, b, oa, ob)?;
    let u = rng.uniform();
    let mut hopper = 3u8;
    let mut acc = 0.0;
    for (i, p) in post.iter().enumerate() {
        acc += p;
        if u < acc {
            hopper = i as u8;
            break;
        }
    }
    Ok(EventRecord {
        trial,
        protocol: config.kind,
        prep: None,
        swap_outcome: None,
        a,
        b,
        outcome_a: oa,
        outcome_b: ob,
        kept: true,
        hopper: Some(hopper),
    })
}

/// Convenience wrapper for a fixed-pair run.
pub fn run_fixed_state(
    label: BellLabel,
    strategy: SettingStrategy,
    trials: u64,
    master_seed: u64,
) -> Result<Ensemble, ProtocolError> {
    run(
        &ProtocolConfig::new(ProtocolKind::FixedState { label }, strategy, trials)?,
        master_seed,
    )
}

/// Convenience wrapper for a uniformly random pair label per trial.
pub fn run_random_state(
    strategy: SettingStrategy,
    trials: u64,
    master_seed: u64,
) -> Result<Ensemble, ProtocolError> {
    run(
        &ProtocolConfig::new(ProtocolKind::RandomState, strategy, trials)?,
        master_seed,
    )
}

/// Convenience wrapper for the entanglement-swapping run.
pub fn run_swap(
    geometry: Geometry,
    strategy: SettingStrategy,
    trials: u64,
    master_seed: u64,
) -> Result<Ensemble, ProtocolError> {
    run(
        &ProtocolConfig::new(ProtocolKind::Swap { geometry }, strategy, trials)?,
        master_seed,
    )
}

/// Convenience wrapper for the classical keep/discard filter.
pub fn run_classical_filter(
    strategy: SettingStrategy,
    trials: u64,
    master_seed: u64,
) -> Result<Ensemble, ProtocolError> {
    run(
        &ProtocolConfig::new(ProtocolKind::ClassicalFilter, strategy, trials)?,
        master_seed,
    )
}

/// Convenience wrapper for the discard-free posterior sorter.
pub fn run_hopper_sort(
    strategy: SettingStrategy,
    trials: u64,
    master_seed: u64,
) -> Result<Ensemble, ProtocolError> {
    run(
        &ProtocolConfig::new(ProtocolKind::HopperSort, strategy, trials)?,
        master_seed,
    )
}
