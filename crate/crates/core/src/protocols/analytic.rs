//! Closed-form references for the protocol runners.
//!
//! Everything here is computed by chaining exact projections, never by
//! sampling, so the results serve as oracles for the Monte Carlo side.

use alloc::vec::Vec;

use super::{Geometry, ProtocolError, ProtocolKind, SettingStrategy, Step};
use crate::quantum::{
    bell_state, joint_distribution, project_bell, project_qubit, tensor, BellLabel, JointDist,
    MeasAngle, Outcome, QuantumError,
};
use crate::stats;

/// Joint distribution over `(midpoint label, A, B)` for the swap run at
/// one setting pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SwapJoint {
    p: [[[f64; 2]; 2]; 4], // [label][A][B]
}

impl SwapJoint {
    pub fn prob(&self, label: BellLabel, a: Outcome, b: Outcome) -> f64 {
        self.p[label.index()][a.index()][b.index()]
    }

    pub fn label_marginal(&self, label: BellLabel) -> f64 {
        let t = self.p[label.index()];
        t[0][0] + t[0][1] + t[1][0] + t[1][1]
    }

    /// Wing distribution conditioned on a midpoint label; `None` if the
    /// label has (numerically) no weight.
    pub fn conditional(&self, label: BellLabel) -> Option<JointDist> {
        let w = self.label_marginal(label);
        if w < 1e-15 {
            return None;
        }
        let t = self.p[label.index()];
        Some(JointDist::from_array([
            t[0][0] / w,
            t[0][1] / w,
            t[1][0] / w,
            t[1][1] / w,
        ]))
    }

    pub fn flatten(&self) -> [f64; 16] {
        let mut out = [0.0; 16];
        let mut k = 0;
        for label in 0..4 {
            for a in 0..2 {
                for b in 0..2 {
                    out[k] = self.p[label][a][b];
                    k += 1;
                }
            }
        }
        out
    }
}

/// Exact `P(label, A, B | a, b)` for the swap run, evaluated by chaining
/// the three projections in the geometry's order. The projectors act on
/// disjoint qubits, so every geometry must (and does) give the same
/// table; callers that only need the numbers can pass any geometry.
pub fn swap_joint(
    geometry: Geometry,
    a: MeasAngle,
    b: MeasAngle,
) -> Result<SwapJoint, QuantumError> {
    let singlet = bell_state(BellLabel::PsiMinus);
    let initial = tensor(&singlet, &singlet)?;
    let order: [Step; 3] = match geometry {
        Geometry::Past => [Step::Mid, Step::WingA, Step::WingB],
        Geometry::Intermediate => [Step::WingA, Step::Mid, Step::WingB],
        Geometry::Future => [Step::WingA, Step::WingB, Step::Mid],
    };
    let mut p = [[[0.0f64; 2]; 2]; 4];
    for label in BellLabel::ALL {
        for oa in Outcome::BOTH {
            for ob in Outcome::BOTH {
                let mut weight = 1.0;
                let mut state = initial.clone();
                for step in order {
                    let (w, next) = match step {
                        Step::Mid => project_bell(&state, 1, 2, label)?,
                        Step::WingA => project_qubit(&state, 0, a, oa)?,
                        Step::WingB => project_qubit(&state, 3, b, ob)?,
                    };
                    weight *= w;
                    match next {
                        Some(s) => state = s,
                        None => {
                            weight = 0.0;
                            break;
                        }
                    }
                }
                p[label.index()][oa.index()][ob.index()] = weight;
            }
        }
    }
    Ok(SwapJoint { p })
}

/// One analytically impossible `(a, b, A, B, label)` tuple.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ZeroCombo {
    pub a: MeasAngle,
    pub b: MeasAngle,
    pub outcome_a: Outcome,
    pub outcome_b: Outcome,
    pub label: BellLabel,
}

/// Enumerates every `(a, b, A, B, label)` tuple on the grid whose joint
/// probability under the swap run is below 1e-12. Output is sorted by
/// `(a, b, A, B, label)` so equal inputs give identical lists.
pub fn zero_probability_combos(
    geometry: Geometry,
    a_grid: &[MeasAngle],
    b_grid: &[MeasAngle],
) -> Result<Vec<ZeroCombo>, QuantumError> {
    let mut out = Vec::new();
    for &a in a_grid {
        for &b in b_grid {
            let joint = swap_joint(geometry, a, b)?;
            for oa in Outcome::BOTH {
                for ob in Outcome::BOTH {
                    for label in BellLabel::ALL {
                        if joint.prob(label, oa, ob) < 1e-12 {
                            out.push(ZeroCombo {
                                a,
                                b,
                                outcome_a: oa,
                                outcome_b: ob,
                                label,
                            });
                        }
                    }
                }
            }
        }
    }
    out.sort_by(|x, y| {
        (x.a, x.b, x.outcome_a.index(), x.outcome_b.index(), x.label.index()).cmp(&(
            y.a,
            y.b,
            y.outcome_a.index(),
            y.outcome_b.index(),
            y.label.index(),
        ))
    });
    Ok(out)
}

/// Analytic distribution over `(setting pair, label, A, B)`, weighted by
/// the strategy. Both the random-state and the swap run project onto
/// this index set.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDist {
    pairs: Vec<(MeasAngle, MeasAngle)>,
    probs: Vec<f64>, // [pair][label][A][B] row-major
}

impl LabeledDist {
    fn index(&self, pair: usize, label: BellLabel, a: Outcome, b: Outcome) -> usize {
        ((pair * 4 + label.index()) * 2 + a.index()) * 2 + b.index()
    }

    pub fn prob(&self, pair: usize, label: BellLabel, a: Outcome, b: Outcome) -> f64 {
        self.probs[self.index(pair, label, a, b)]
    }

    pub fn pairs(&self) -> &[(MeasAngle, MeasAngle)] {
        &self.pairs
    }

    pub fn values(&self) -> &[f64] {
        &self.probs
    }
}

/// `P(pair) · 1/4 · P(A,B | a,b,label)`: the random-state run, with the
/// per-trial label draw written out against each pair.
pub fn random_state_dist(strategy: &SettingStrategy) -> Result<LabeledDist, QuantumError> {
    labeled_dist(strategy, |_, a, b| {
        let mut t = [[[0.0f64; 2]; 2]; 4];
        for label in BellLabel::ALL {
            let d = joint_distribution(&bell_state(label), a, b)?;
            for oa in Outcome::BOTH {
                for ob in Outcome::BOTH {
                    t[label.index()][oa.index()][ob.index()] = 0.25 * d.prob(oa, ob);
                }
            }
        }
        Ok(t)
    })
}

/// `P(pair) · P(label, A, B | a, b)` for the swap run.
pub fn swap_dist(
    strategy: &SettingStrategy,
    geometry: Geometry,
) -> Result<LabeledDist, QuantumError> {
    labeled_dist(strategy, |_, a, b| {
        let j = swap_joint(geometry, a, b)?;
        let mut t = [[[0.0f64; 2]; 2]; 4];
        for label in BellLabel::ALL {
            for oa in Outcome::BOTH {
                for ob in Outcome::BOTH {
                    t[label.index()][oa.index()][ob.index()] = j.prob(label, oa, ob);
                }
            }
        }
        Ok(t)
    })
}

fn labeled_dist(
    strategy: &SettingStrategy,
    mut per_pair: impl FnMut(usize, MeasAngle, MeasAngle) -> Result<[[[f64; 2]; 2]; 4], QuantumError>,
) -> Result<LabeledDist, QuantumError> {
    let mut pairs = Vec::with_capacity(strategy.pair_count());
    let mut probs = Vec::with_capacity(strategy.pair_count() * 16);
    for (id, a, b) in strategy.pairs() {
        pairs.push((a, b));
        let w = strategy.weight(id);
        let t = per_pair(id, a, b)?;
        for label in 0..4 {
            for oa in 0..2 {
                for ob in 0..2 {
                    probs.push(w * t[label][oa][ob]);
                }
            }
        }
    }
    Ok(LabeledDist { pairs, probs })
}

/// Side-by-side analytic tables for a random-state and a swap ensemble
/// under the label identification, plus their total-variation distance.
#[derive(Debug, Clone, PartialEq)]
pub struct EquivalenceReport {
    pub random_state: LabeledDist,
    pub swap: LabeledDist,
    pub tv_distance: f64,
}

/// Pairs the analytic tables of a random-state ensemble and a swap
/// ensemble, identifying each preparation label with the same midpoint
/// label. Requires matching protocols and identical strategies.
pub fn equivalence_map(
    random_state: &super::Ensemble,
    swap: &super::Ensemble,
) -> Result<EquivalenceReport, ProtocolError> {
    equivalence_map_relabeled(random_state, swap, BellLabel::ALL)
}

/// [`equivalence_map`] with an explicit label identification: midpoint
/// label `i` is matched against preparation label `relabel[i]`. Used to
/// show that the equivalence is tight — any other pairing separates the
/// tables.
pub fn equivalence_map_relabeled(
    random_state: &super::Ensemble,
    swap: &super::Ensemble,
    relabel: [BellLabel; 4],
) -> Result<EquivalenceReport, ProtocolError> {
    if random_state.config.kind.id() != "random_state" {
        return Err(ProtocolError::ProtocolMismatch {
            expected: "random_state",
            got: random_state.config.kind.id(),
        });
    }
    let geometry = match swap.config.kind {
        ProtocolKind::Swap { geometry } => geometry,
        other => {
            return Err(ProtocolError::ProtocolMismatch {
                expected: "swap",
                got: other.id(),
            })
        }
    };
    if !strategies_identical(&random_state.config.strategy, &swap.config.strategy) {
        return Err(ProtocolError::StrategyMismatch);
    }
    let v_table = random_state_dist(&random_state.config.strategy)?;
    let w_table = swap_dist(&swap.config.strategy, geometry)?;

    // Re-index the swap table through the label map: position
    // (pair, relabel[label]) receives the swap weight of (pair, label).
    let mut swap_mapped = w_table.clone();
    for pair in 0..w_table.pairs.len() {
        for label in BellLabel::ALL {
            for oa in Outcome::BOTH {
                for ob in Outcome::BOTH {
                    let from = w_table.index(pair, label, oa, ob);
                    let to = w_table.index(pair, relabel[label.index()], oa, ob);
                    swap_mapped.probs[to] = w_table.probs[from];
                }
            }
        }
    }

    let tv = stats::tv_distance(v_table.values(), swap_mapped.values())
        .expect("tables share an index set by construction");
    Ok(EquivalenceReport {
        random_state: v_table,
        swap: swap_mapped,
        tv_distance: tv,
    })
}

fn strategies_identical(x: &SettingStrategy, y: &SettingStrategy) -> bool {
    let angles = |s: &SettingStrategy| {
        (
            s.a_choices().iter().map(|a| a.bits()).collect::<Vec<_>>(),
            s.b_choices().iter().map(|b| b.bits()).collect::<Vec<_>>(),
        )
    };
    angles(x) == angles(y)
        && x.pair_count() == y.pair_count()
        && (0..x.pair_count()).all(|i| x.weight(i) == y.weight(i))
}
