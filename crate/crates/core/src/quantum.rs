//! Pure-state vectors for 1–4 qubits and projective measurement.
//!
//! Conventions used throughout the crate:
//!
//! * Basis index bit order: **qubit 0 is the most significant bit** of the
//!   amplitude index, so a two-qubit state is `(a00, a01, a10, a11)`.
//! * Measurement direction for angle θ:
//!   `|+θ⟩ = cos(θ/2)|0⟩ + sin(θ/2)|1⟩`,
//!   `|−θ⟩ = sin(θ/2)|0⟩ − cos(θ/2)|1⟩`,
//!   reported as outcomes +1 and −1.
//! * The four Bell states carry a fixed index order (PsiMinus, PhiPlus,
//!   PhiMinus, PsiPlus) = 0..3; the singlet comes first. Categorical draws
//!   over Bell labels resolve cumulative sums in this order with strict
//!   inequality, so ties break toward the lower index.
//!
//! States are compared by amplitudes as-is; no global-phase
//! canonicalization is applied anywhere. Closed-form identities hold to
//! 1e-12, chains of projections to 1e-9.

use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use num_complex::Complex64;

use crate::math;

/// Complex amplitude (Cartesian form).
pub type Amplitude = Complex64;

/// Hard cap on register width; tensor products beyond this are rejected.
pub const MAX_QUBITS: usize = 4;

const H: f64 = core::f64::consts::FRAC_1_SQRT_2;
const TAU: f64 = core::f64::consts::TAU;

/// |norm − 1| allowed when accepting a state vector.
const NORM_TOL: f64 = 1e-9;
/// Projection weights below this are treated as numerically degenerate.
const DEGENERATE_WEIGHT: f64 = 1e-15;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum QuantumError {
    #[error("amplitude vector of length {0} does not describe 1..=4 qubits")]
    BadLength(usize),
    #[error("{0} qubits exceed the {MAX_QUBITS}-qubit register limit")]
    TooManyQubits(usize),
    #[error("state norm {0} is not 1 within 1e-9")]
    NotNormalized(f64),
    #[error("non-finite amplitude at basis index {0}")]
    NonFinite(usize),
    #[error("qubit {qubit} out of range for a {n_qubits}-qubit state")]
    QubitOutOfRange { qubit: usize, n_qubits: usize },
    #[error("Bell measurement needs two distinct qubits, got {0} twice")]
    DuplicateQubit(usize),
    #[error("expected a {expected}-qubit state, got {got} qubits")]
    WrongArity { expected: usize, got: usize },
    #[error("projection weight {0:e} is numerically degenerate")]
    DegenerateProjection(f64),
}

/// Measurement angle in radians, normalized to `[0, 2π)` on construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MeasAngle(f64);

impl MeasAngle {
    /// Wraps into `[0, 2π)`. Non-finite input is a caller bug.
    pub fn new(radians: f64) -> MeasAngle {
        assert!(radians.is_finite(), "measurement angle must be finite");
        MeasAngle(math::rem_euclid(radians, TAU))
    }

    pub fn radians(self) -> f64 {
        self.0
    }

    /// Bit pattern, used for exact angle lookups in tables.
    pub fn bits(self) -> u64 {
        self.0.to_bits()
    }

    /// Basis vectors `(|+θ⟩, |−θ⟩)` as real pairs `(⟨0|·⟩, ⟨1|·⟩)`.
    pub(crate) fn basis(self) -> ([f64; 2], [f64; 2]) {
        let c = math::cos(self.0 / 2.0);
        let s = math::sin(self.0 / 2.0);
        ([c, s], [s, -c])
    }
}

// Angles are finite by construction, so total ordering is sound.
impl Eq for MeasAngle {}

impl PartialOrd for MeasAngle {
    fn partial_cmp(&self, other: &Self) -> Option<core::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for MeasAngle {
    fn cmp(&self, other: &Self) -> core::cmp::Ordering {
        self.0.total_cmp(&other.0)
    }
}

impl fmt::Display for MeasAngle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Binary measurement outcome, reported as ±1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Outcome {
    Plus,
    Minus,
}

impl Outcome {
    pub const BOTH: [Outcome; 2] = [Outcome::Plus, Outcome::Minus];

    pub fn value(self) -> i32 {
        match self {
            Outcome::Plus => 1,
            Outcome::Minus => -1,
        }
    }

    pub fn index(self) -> usize {
        match self {
            Outcome::Plus => 0,
            Outcome::Minus => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Outcome> {
        match i {
            0 => Some(Outcome::Plus),
            1 => Some(Outcome::Minus),
            _ => None,
        }
    }
}

impl fmt::Display for Outcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Outcome::Plus => "+1",
            Outcome::Minus => "-1",
        })
    }
}

/// The four maximally entangled two-qubit states, in fixed index order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BellLabel {
    /// (|01⟩ − |10⟩)/√2 — the singlet.
    PsiMinus,
    /// (|00⟩ + |11⟩)/√2.
    PhiPlus,
    /// (|00⟩ − |11⟩)/√2.
    PhiMinus,
    /// (|01⟩ + |10⟩)/√2.
    PsiPlus,
}

impl BellLabel {
    pub const ALL: [BellLabel; 4] = [
        BellLabel::PsiMinus,
        BellLabel::PhiPlus,
        BellLabel::PhiMinus,
        BellLabel::PsiPlus,
    ];

    pub fn index(self) -> usize {
        match self {
            BellLabel::PsiMinus => 0,
            BellLabel::PhiPlus => 1,
            BellLabel::PhiMinus => 2,
            BellLabel::PsiPlus => 3,
        }
    }

    pub fn from_index(i: usize) -> Option<BellLabel> {
        BellLabel::ALL.get(i).copied()
    }

    /// Short serialization token (`psi-`, `phi+`, `phi-`, `psi+`).
    pub fn token(self) -> &'static str {
        match self {
            BellLabel::PsiMinus => "psi-",
            BellLabel::PhiPlus => "phi+",
            BellLabel::PhiMinus => "phi-",
            BellLabel::PsiPlus => "psi+",
        }
    }

    /// Parses the token form; `singlet` is accepted as an alias for `psi-`.
    pub fn parse(s: &str) -> Option<BellLabel> {
        match s {
            "psi-" | "psi_minus" | "singlet" => Some(BellLabel::PsiMinus),
            "phi+" | "phi_plus" => Some(BellLabel::PhiPlus),
            "phi-" | "phi_minus" => Some(BellLabel::PhiMinus),
            "psi+" | "psi_plus" => Some(BellLabel::PsiPlus),
            _ => None,
        }
    }

    /// Amplitude of |b₀b₁⟩ in this Bell state (coefficients are real).
    fn coeff(self, b0: usize, b1: usize) -> f64 {
        let table: [[f64; 2]; 2] = match self {
            BellLabel::PsiMinus => [[0.0, H], [-H, 0.0]],
            BellLabel::PhiPlus => [[H, 0.0], [0.0, H]],
            BellLabel::PhiMinus => [[H, 0.0], [0.0, -H]],
            BellLabel::PsiPlus => [[0.0, H], [H, 0.0]],
        };
        table[b0][b1]
    }
}

impl fmt::Display for BellLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.token())
    }
}

/// Normalized pure state on 1..=4 qubits.
#[derive(Debug, Clone, PartialEq)]
pub struct PureState {
    n_qubits: usize,
    amps: Vec<Amplitude>,
}

impl PureState {
    /// Accepts an amplitude vector of length 2^n for n in 1..=4 with all
    /// entries finite and norm 1 within 1e-9.
    pub fn new(amps: Vec<Amplitude>) -> Result<PureState, QuantumError> {
        let n_qubits = match amps.len() {
            2 => 1,
            4 => 2,
            8 => 3,
            16 => 4,
            other => return Err(QuantumError::BadLength(other)),
        };
        for (i, a) in amps.iter().enumerate() {
            if !a.re.is_finite() || !a.im.is_finite() {
                return Err(QuantumError::NonFinite(i));
            }
        }
        let norm = math::sqrt(amps.iter().map(|a| a.norm_sqr()).sum());
        if math::abs(norm - 1.0) > NORM_TOL {
            return Err(QuantumError::NotNormalized(norm));
        }
        Ok(PureState { n_qubits, amps })
    }

    /// Computational basis state |index⟩ on `n_qubits` qubits.
    pub fn basis_state(n_qubits: usize, index: usize) -> Result<PureState, QuantumError> {
        if n_qubits == 0 || n_qubits > MAX_QUBITS {
            return Err(QuantumError::TooManyQubits(n_qubits));
        }
        let len = 1 << n_qubits;
        if index >= len {
            return Err(QuantumError::BadLength(index));
        }
        let mut amps = vec![Amplitude::new(0.0, 0.0); len];
        amps[index] = Amplitude::new(1.0, 0.0);
        Ok(PureState { n_qubits, amps })
    }

    pub fn n_qubits(&self) -> usize {
        self.n_qubits
    }

    pub fn amplitudes(&self) -> &[Amplitude] {
        &self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    /// Basis-index mask selecting `qubit` (qubit 0 = most significant).
    fn mask(&self, qubit: usize) -> usize {
        1 << (self.n_qubits - 1 - qubit)
    }

    fn check_qubit(&self, qubit: usize) -> Result<(), QuantumError> {
        if qubit >= self.n_qubits {
            return Err(QuantumError::QubitOutOfRange {
                qubit,
                n_qubits: self.n_qubits,
            });
        }
        Ok(())
    }
}

/// Builds one of the four Bell states on qubits (0, 1).
pub fn bell_state(label: BellLabel) -> PureState {
    let mut amps = Vec::with_capacity(4);
    for b0 in 0..2 {
        for b1 in 0..2 {
            amps.push(Amplitude::new(label.coeff(b0, b1), 0.0));
        }
    }
    PureState { n_qubits: 2, amps }
}

/// Tensor product; `left` occupies the high-order qubits of the result.
pub fn tensor(left: &PureState, right: &PureState) -> Result<PureState, QuantumError> {
    let n = left.n_qubits + right.n_qubits;
    if n > MAX_QUBITS {
        return Err(QuantumError::TooManyQubits(n));
    }
    let mut amps = Vec::with_capacity(left.amps.len() * right.amps.len());
    for l in &left.amps {
        for r in &right.amps {
            amps.push(l * r);
        }
    }
    Ok(PureState { n_qubits: n, amps })
}

/// Born probabilities `(p₊, p₋)` for measuring `qubit` along `angle`.
/// The two always sum to the squared norm (1 within 1e-12).
pub fn outcome_probabilities(
    state: &PureState,
    qubit: usize,
    angle: MeasAngle,
) -> Result<(f64, f64), QuantumError> {
    state.check_qubit(qubit)?;
    let (plus, minus) = angle.basis();
    let stride = state.mask(qubit);
    let mut p_plus = 0.0;
    let mut p_minus = 0.0;
    for base in (0..state.amps.len()).step_by(stride * 2) {
        for off in 0..stride {
            let a0 = state.amps[base + off];
            let a1 = state.amps[base + off + stride];
            p_plus += (plus[0] * a0 + plus[1] * a1).norm_sqr();
            p_minus += (minus[0] * a0 + minus[1] * a1).norm_sqr();
        }
    }
    Ok((p_plus, p_minus))
}

/// Projects `qubit` onto the `outcome` direction of `angle`.
///
/// Returns the Born weight and the renormalized post-measurement state,
/// or `None` for the state when the weight is numerically degenerate
/// (below 1e-15).
pub fn project_qubit(
    state: &PureState,
    qubit: usize,
    angle: MeasAngle,
    outcome: Outcome,
) -> Result<(f64, Option<PureState>), QuantumError> {
    state.check_qubit(qubit)?;
    let (plus, minus) = angle.basis();
    let v = match outcome {
        Outcome::Plus => plus,
        Outcome::Minus => minus,
    };
    let stride = state.mask(qubit);
    let mut weight = 0.0;
    let mut amps = vec![Amplitude::new(0.0, 0.0); state.amps.len()];
    for base in (0..state.amps.len()).step_by(stride * 2) {
        for off in 0..stride {
            let i0 = base + off;
            let i1 = i0 + stride;
            let overlap = v[0] * state.amps[i0] + v[1] * state.amps[i1];
            weight += overlap.norm_sqr();
            amps[i0] = v[0] * overlap;
            amps[i1] = v[1] * overlap;
        }
    }
    if weight < DEGENERATE_WEIGHT {
        return Ok((weight, None));
    }
    let scale = 1.0 / math::sqrt(weight);
    for a in &mut amps {
        *a *= scale;
    }
    Ok((
        weight,
        Some(PureState {
            n_qubits: state.n_qubits,
            amps,
        }),
    ))
}

/// Measures `qubit` along `angle` using the uniform draw `u ∈ [0, 1)`:
/// outcome is +1 iff `u < p₊`. Returns the outcome and the collapsed
/// state.
pub fn measure_qubit(
    state: &PureState,
    qubit: usize,
    angle: MeasAngle,
    u: f64,
) -> Result<(Outcome, PureState), QuantumError> {
    debug_assert!((0.0..1.0).contains(&u));
    let (p_plus, _) = outcome_probabilities(state, qubit, angle)?;
    let outcome = if u < p_plus {
        Outcome::Plus
    } else {
        Outcome::Minus
    };
    let (weight, collapsed) = project_qubit(state, qubit, angle, outcome)?;
    match collapsed {
        Some(s) => Ok((outcome, s)),
        None => Err(QuantumError::DegenerateProjection(weight)),
    }
}

/// Projects qubits `(qi, qj)` onto the Bell state `label`, where `qi`
/// carries the first bit of the Bell pattern. Same degeneracy contract as
/// [`project_qubit`].
pub fn project_bell(
    state: &PureState,
    qi: usize,
    qj: usize,
    label: BellLabel,
) -> Result<(f64, Option<PureState>), QuantumError> {
    state.check_qubit(qi)?;
    state.check_qubit(qj)?;
    if qi == qj {
        return Err(QuantumError::DuplicateQubit(qi));
    }
    let mi = state.mask(qi);
    let mj = state.mask(qj);
    let mut weight = 0.0;
    let mut amps = vec![Amplitude::new(0.0, 0.0); state.amps.len()];
    for idx in 0..state.amps.len() {
        if idx & mi != 0 || idx & mj != 0 {
            continue; // visit each group of four once, from its (0,0) member
        }
        let at = |bi: usize, bj: usize| state.amps[idx | (bi * mi) | (bj * mj)];
        let mut overlap = Amplitude::new(0.0, 0.0);
        for bi in 0..2 {
            for bj in 0..2 {
                overlap += label.coeff(bi, bj) * at(bi, bj);
            }
        }
        weight += overlap.norm_sqr();
        for bi in 0..2 {
            for bj in 0..2 {
                amps[idx | (bi * mi) | (bj * mj)] = label.coeff(bi, bj) * overlap;
            }
        }
    }
    if weight < DEGENERATE_WEIGHT {
        return Ok((weight, None));
    }
    let scale = 1.0 / math::sqrt(weight);
    for a in &mut amps {
        *a *= scale;
    }
    Ok((
        weight,
        Some(PureState {
            n_qubits: state.n_qubits,
            amps,
        }),
    ))
}

/// Bell-basis measurement of qubits `(qi, qj)`.
///
/// The label is drawn by cumulative-sum inversion over the fixed Bell
/// index order with strict inequality, so exact zero-weight labels are
/// never selected.
pub fn bell_measure(
    state: &PureState,
    qi: usize,
    qj: usize,
    u: f64,
) -> Result<(BellLabel, PureState), QuantumError> {
    debug_assert!((0.0..1.0).contains(&u));
    state.check_qubit(qi)?;
    state.check_qubit(qj)?;
    if qi == qj {
        return Err(QuantumError::DuplicateQubit(qi));
    }
    let mut weights = [0.0f64; 4];
    for label in BellLabel::ALL {
        let (w, _) = project_bell(state, qi, qj, label)?;
        weights[label.index()] = w;
    }
    let mut chosen = BellLabel::ALL[3];
    let mut acc = 0.0;
    for label in BellLabel::ALL {
        acc += weights[label.index()];
        if u < acc {
            chosen = label;
            break;
        }
    }
    let (weight, collapsed) = project_bell(state, qi, qj, chosen)?;
    match collapsed {
        Some(s) => Ok((chosen, s)),
        None => Err(QuantumError::DegenerateProjection(weight)),
    }
}

/// Joint outcome distribution over `(A, B) ∈ {+1, −1}²`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JointDist {
    p: [f64; 4], // indexed A.index()*2 + B.index()
}

impl JointDist {
    pub fn from_array(p: [f64; 4]) -> JointDist {
        JointDist { p }
    }

    pub fn prob(&self, a: Outcome, b: Outcome) -> f64 {
        self.p[a.index() * 2 + b.index()]
    }

    pub fn as_array(&self) -> [f64; 4] {
        self.p
    }

    pub fn marginal_a(&self, a: Outcome) -> f64 {
        self.p[a.index() * 2] + self.p[a.index() * 2 + 1]
    }

    pub fn marginal_b(&self, b: Outcome) -> f64 {
        self.p[b.index()] + self.p[2 + b.index()]
    }

    /// E[A·B] under this distribution.
    pub fn correlation(&self) -> f64 {
        self.p[0] - self.p[1] - self.p[2] + self.p[3]
    }
}

/// Closed-form joint distribution for measuring qubit 0 along `a` and
/// qubit 1 along `b` of a two-qubit state. Rejects other arities.
pub fn joint_distribution(
    state: &PureState,
    a: MeasAngle,
    b: MeasAngle,
) -> Result<JointDist, QuantumError> {
    if state.n_qubits != 2 {
        return Err(QuantumError::WrongArity {
            expected: 2,
            got: state.n_qubits,
        });
    }
    let (a_plus, a_minus) = a.basis();
    let (b_plus, b_minus) = b.basis();
    let mut p = [0.0f64; 4];
    for (ai, av) in [a_plus, a_minus].iter().enumerate() {
        for (bi, bv) in [b_plus, b_minus].iter().enumerate() {
            let mut overlap = Amplitude::new(0.0, 0.0);
            for i in 0..2 {
                for j in 0..2 {
                    overlap += av[i] * bv[j] * state.amps[i * 2 + j];
                }
            }
            p[ai * 2 + bi] = overlap.norm_sqr();
        }
    }
    Ok(JointDist { p })
}

/// E[A·B] for the closed-form joint distribution.
pub fn correlation(state: &PureState, a: MeasAngle, b: MeasAngle) -> Result<f64, QuantumError> {
    Ok(joint_distribution(state, a, b)?.correlation())
}

/// |⟨a|b⟩|² for states of equal arity.
pub fn fidelity(a: &PureState, b: &PureState) -> Result<f64, QuantumError> {
    if a.n_qubits != b.n_qubits {
        return Err(QuantumError::WrongArity {
            expected: a.n_qubits,
            got: b.n_qubits,
        });
    }
    let mut overlap = Amplitude::new(0.0, 0.0);
    for (x, y) in a.amps.iter().zip(&b.amps) {
        overlap += x.conj() * y;
    }
    Ok(overlap.norm_sqr())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use core::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};

    fn c(re: f64) -> Amplitude {
        Amplitude::new(re, 0.0)
    }

    #[test]
    fn bell_state_amplitudes_are_exact() {
        let psi_minus = bell_state(BellLabel::PsiMinus);
        assert_eq!(
            psi_minus.amplitudes(),
            &[c(0.0), c(H), c(-H), c(0.0)],
            "singlet must be (0, 1/√2, −1/√2, 0)"
        );
        let phi_plus = bell_state(BellLabel::PhiPlus);
        assert_eq!(phi_plus.amplitudes(), &[c(H), c(0.0), c(0.0), c(H)]);
        let phi_minus = bell_state(BellLabel::PhiMinus);
        assert_eq!(phi_minus.amplitudes(), &[c(H), c(0.0), c(0.0), c(-H)]);
        let psi_plus = bell_state(BellLabel::PsiPlus);
        assert_eq!(psi_plus.amplitudes(), &[c(0.0), c(H), c(H), c(0.0)]);
    }

    #[test]
    fn state_validation_rejects_bad_input() {
        assert!(matches!(
            PureState::new(vec![c(1.0); 3]),
            Err(QuantumError::BadLength(3))
        ));
        assert!(matches!(
            PureState::new(vec![c(1.0), c(1.0)]),
            Err(QuantumError::NotNormalized(_))
        ));
        assert!(matches!(
            PureState::new(vec![c(f64::NAN), c(0.0)]),
            Err(QuantumError::NonFinite(0))
        ));
        assert!(PureState::new(vec![c(H), c(H)]).is_ok());
    }

    #[test]
    fn tensor_of_two_singlets_has_hand_expanded_signs() {
        // (|01⟩−|10⟩)/√2 ⊗ (|01⟩−|10⟩)/√2
        //   = (|0101⟩ − |0110⟩ − |1001⟩ + |1010⟩)/2
        let s = bell_state(BellLabel::PsiMinus);
        let full = tensor(&s, &s).unwrap();
        assert_eq!(full.n_qubits(), 4);
        let amps = full.amplitudes();
        for (idx, amp) in amps.iter().enumerate() {
            let expected = match idx {
                0b0101 => 0.5,
                0b0110 => -0.5,
                0b1001 => -0.5,
                0b1010 => 0.5,
                _ => 0.0,
            };
            assert_abs_diff_eq!(amp.re, expected, epsilon = 1e-15);
            assert_eq!(amp.im, 0.0);
        }
    }

    #[test]
    fn tensor_rejects_register_overflow() {
        let four = tensor(
            &bell_state(BellLabel::PhiPlus),
            &bell_state(BellLabel::PhiPlus),
        )
        .unwrap();
        let one = PureState::basis_state(1, 0).unwrap();
        assert!(matches!(
            tensor(&four, &one),
            Err(QuantumError::TooManyQubits(5))
        ));
    }

    #[test]
    fn singlet_marginals_are_uniform_for_any_angle() {
        let s = bell_state(BellLabel::PsiMinus);
        for k in 0..32 {
            let angle = MeasAngle::new(k as f64 * TAU / 32.0);
            for qubit in 0..2 {
                let (p, m) = outcome_probabilities(&s, qubit, angle).unwrap();
                assert_abs_diff_eq!(p, 0.5, epsilon = 1e-12);
                assert_abs_diff_eq!(m, 0.5, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn outcome_probabilities_rejects_bad_qubit() {
        let s = bell_state(BellLabel::PhiPlus);
        assert!(matches!(
            outcome_probabilities(&s, 2, MeasAngle::new(0.0)),
            Err(QuantumError::QubitOutOfRange {
                qubit: 2,
                n_qubits: 2
            })
        ));
    }

    #[test]
    fn measuring_singlet_qubit0_at_zero_collapses_partner() {
        // u = 0.3 < p₊ = 1/2 picks +1, leaving |0⟩|1⟩ exactly.
        let s = bell_state(BellLabel::PsiMinus);
        let (outcome, after) = measure_qubit(&s, 0, MeasAngle::new(0.0), 0.3).unwrap();
        assert_eq!(outcome, Outcome::Plus);
        let target = PureState::basis_state(2, 0b01).unwrap();
        assert!(fidelity(&after, &target).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn projection_onto_orthogonal_direction_is_degenerate() {
        let zero = PureState::basis_state(1, 0).unwrap();
        // ⟨−0|0⟩ = 0: weight 0 and no collapsed state.
        let (w, state) = project_qubit(&zero, 0, MeasAngle::new(0.0), Outcome::Minus).unwrap();
        assert_eq!(w, 0.0);
        assert!(state.is_none());
    }

    #[test]
    fn sampling_a_degenerate_branch_is_an_internal_error() {
        let eps = 1e-8;
        let s = PureState::new(vec![c(eps), c(math::sqrt(1.0 - eps * eps))]).unwrap();
        // p₊ = 1e-16 < 1e-15, and u below it selects the degenerate branch.
        let err = measure_qubit(&s, 0, MeasAngle::new(0.0), 1e-17).unwrap_err();
        assert!(matches!(err, QuantumError::DegenerateProjection(_)));
    }

    #[test]
    fn singlet_joint_distribution_matches_closed_form() {
        // P(same) = (1 − cos Δ)/4, P(diff) = (1 + cos Δ)/4 at Δ = a − b.
        let s = bell_state(BellLabel::PsiMinus);
        let d = joint_distribution(&s, MeasAngle::new(0.0), MeasAngle::new(FRAC_PI_4)).unwrap();
        assert_abs_diff_eq!(
            d.prob(Outcome::Plus, Outcome::Plus),
            0.0732233047033631,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            d.prob(Outcome::Plus, Outcome::Minus),
            0.42677669529663687,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            d.prob(Outcome::Minus, Outcome::Plus),
            0.42677669529663687,
            epsilon = 1e-12
        );
        assert_abs_diff_eq!(
            d.prob(Outcome::Minus, Outcome::Minus),
            0.0732233047033631,
            epsilon = 1e-12
        );
    }

    #[test]
    fn singlet_correlation_is_minus_cosine_of_angle_difference() {
        let s = bell_state(BellLabel::PsiMinus);
        for i in 0..12 {
            for j in 0..12 {
                let a = MeasAngle::new(i as f64 * TAU / 12.0);
                let b = MeasAngle::new(j as f64 * TAU / 12.0);
                let e = correlation(&s, a, b).unwrap();
                assert_abs_diff_eq!(
                    e,
                    -math::cos(a.radians() - b.radians()),
                    epsilon = 1e-12
                );
            }
        }
    }

    #[test]
    fn joint_distribution_rejects_wrong_arity() {
        let one = PureState::basis_state(1, 0).unwrap();
        assert!(matches!(
            joint_distribution(&one, MeasAngle::new(0.0), MeasAngle::new(0.0)),
            Err(QuantumError::WrongArity {
                expected: 2,
                got: 1
            })
        ));
    }

    #[test]
    fn sequential_measurement_order_does_not_matter() {
        // P(A,B) from measuring qubit 0 then 1 must match 1-then-0 and the
        // closed form, for every Bell state and a grid of angle pairs.
        for label in BellLabel::ALL {
            let s = bell_state(label);
            for i in 0..8 {
                for j in 0..8 {
                    let a = MeasAngle::new(i as f64 * TAU / 8.0);
                    let b = MeasAngle::new(j as f64 * TAU / 8.0 + 0.1);
                    let d = joint_distribution(&s, a, b).unwrap();
                    for oa in Outcome::BOTH {
                        for ob in Outcome::BOTH {
                            let p_ab = chain_prob(&s, 0, a, oa, 1, b, ob);
                            let p_ba = chain_prob(&s, 1, b, ob, 0, a, oa);
                            assert_abs_diff_eq!(p_ab, p_ba, epsilon = 1e-12);
                            assert_abs_diff_eq!(p_ab, d.prob(oa, ob), epsilon = 1e-12);
                        }
                    }
                }
            }
        }
    }

    /// P(first outcome, second outcome) via sequential projection.
    fn chain_prob(
        s: &PureState,
        q1: usize,
        ang1: MeasAngle,
        o1: Outcome,
        q2: usize,
        ang2: MeasAngle,
        o2: Outcome,
    ) -> f64 {
        let (w1, after) = project_qubit(s, q1, ang1, o1).unwrap();
        match after {
            None => 0.0,
            Some(state) => {
                let (w2, _) = project_qubit(&state, q2, ang2, o2).unwrap();
                w1 * w2
            }
        }
    }

    #[test]
    fn equal_weight_bell_mixture_is_maximally_mixed() {
        for i in 0..6 {
            for j in 0..6 {
                let a = MeasAngle::new(0.37 + i as f64 * TAU / 6.0);
                let b = MeasAngle::new(1.91 + j as f64 * TAU / 6.0);
                let mut cells = [0.0f64; 4];
                for label in BellLabel::ALL {
                    let d = joint_distribution(&bell_state(label), a, b).unwrap();
                    for (acc, p) in cells.iter_mut().zip(d.as_array()) {
                        *acc += 0.25 * p;
                    }
                }
                for p in cells {
                    assert_abs_diff_eq!(p, 0.25, epsilon = 1e-12);
                }
            }
        }
    }

    /// Product state on qubit pairs ((0,3), (1,2)) of a 4-qubit register,
    /// built index-by-index as an independent reference for the swap
    /// identity.
    fn outer_inner_product(outer: BellLabel, inner: BellLabel) -> PureState {
        let o = bell_state(outer);
        let i = bell_state(inner);
        let mut amps = Vec::with_capacity(16);
        for idx in 0..16usize {
            let x0 = (idx >> 3) & 1;
            let x1 = (idx >> 2) & 1;
            let x2 = (idx >> 1) & 1;
            let x3 = idx & 1;
            amps.push(o.amplitudes()[x0 * 2 + x3] * i.amplitudes()[x1 * 2 + x2]);
        }
        PureState::new(amps).unwrap()
    }

    #[test]
    fn bell_measurement_on_two_singlets_swaps_entanglement() {
        // ψ⁻₀₁ ⊗ ψ⁻₂₃, Bell measurement on (1,2): every label has weight
        // 1/4 and leaves qubits (0,3) in the same-labeled Bell state.
        let s = bell_state(BellLabel::PsiMinus);
        let full = tensor(&s, &s).unwrap();
        for label in BellLabel::ALL {
            let (w, after) = project_bell(&full, 1, 2, label).unwrap();
            assert_abs_diff_eq!(w, 0.25, epsilon = 1e-12);
            let reference = outer_inner_product(label, label);
            let f = fidelity(&after.unwrap(), &reference).unwrap();
            assert!(
                f > 1.0 - 1e-9,
                "fidelity {f} too small for label {label}"
            );
        }
    }

    #[test]
    fn bell_measure_draw_uses_fixed_label_order() {
        let s = bell_state(BellLabel::PsiMinus);
        let full = tensor(&s, &s).unwrap();
        // weights are ≈1/4 each; draws well inside each quarter are
        // unambiguous even with rounding in the cumulative sums
        for (u, expected) in [
            (0.1, BellLabel::PsiMinus),
            (0.3, BellLabel::PhiPlus),
            (0.6, BellLabel::PhiMinus),
            (0.9, BellLabel::PsiPlus),
        ] {
            let (l, _) = bell_measure(&full, 1, 2, u).unwrap();
            assert_eq!(l, expected);
        }
    }

    #[test]
    fn bell_measure_never_selects_zero_weight_labels() {
        // |φ+⟩ has exactly zero overlap with the singlet, so u = 0 must
        // skip past it (strict inequality) and land on φ+.
        let s = bell_state(BellLabel::PhiPlus);
        let (l, _) = bell_measure(&s, 0, 1, 0.0).unwrap();
        assert_eq!(l, BellLabel::PhiPlus);
    }

    #[test]
    fn bell_measure_rejects_duplicate_or_bad_qubits() {
        let s = bell_state(BellLabel::PsiMinus);
        let full = tensor(&s, &s).unwrap();
        assert!(matches!(
            bell_measure(&full, 2, 2, 0.5),
            Err(QuantumError::DuplicateQubit(2))
        ));
        assert!(matches!(
            bell_measure(&full, 0, 4, 0.5),
            Err(QuantumError::QubitOutOfRange { qubit: 4, .. })
        ));
    }

    #[test]
    fn fidelity_separates_bell_states() {
        for x in BellLabel::ALL {
            for y in BellLabel::ALL {
                let f = fidelity(&bell_state(x), &bell_state(y)).unwrap();
                let expected = if x == y { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(f, expected, epsilon = 1e-12);
            }
        }
    }

    #[test]
    fn angles_normalize_into_standard_range() {
        assert_abs_diff_eq!(MeasAngle::new(-FRAC_PI_2).radians(), 1.5 * PI, epsilon = 1e-12);
        assert_abs_diff_eq!(MeasAngle::new(TAU + 0.5).radians(), 0.5, epsilon = 1e-12);
        assert_eq!(MeasAngle::new(0.0).radians(), 0.0);
        assert!(MeasAngle::new(TAU).radians() < 1e-15);
    }

    #[test]
    fn bell_label_round_trips_through_tokens() {
        for label in BellLabel::ALL {
            assert_eq!(BellLabel::parse(label.token()), Some(label));
            assert_eq!(BellLabel::from_index(label.index()), Some(label));
        }
        assert_eq!(BellLabel::parse("singlet"), Some(BellLabel::PsiMinus));
        assert_eq!(BellLabel::parse("bogus"), None);
    }
}
