//! The two-sender, one-receiver preparation protocol.
//!
//! Three parties share a 9-qubit resource built from three GHZ states. The
//! qubits are grouped into trios: Alice holds (1,4,7), Bob holds (2,5,8),
//! and Chika — the receiver — holds (3,6,9). Alice knows only the target's
//! real amplitudes α₁..α₈, Bob only its phases φ₁..φ₈, and the goal is for
//! Chika's trio to end in
//!
//! ```text
//! |Ω⟩ = Σ_k α_{k+1} e^{iφ_{k+1}} |k⟩,   k = 0..7 (big-endian 3-bit kets)
//! ```
//!
//! Alice measures her trio in a *signed-permutation* basis: row r carries
//! the coefficients ±α in a permuted order, with the permutation k ↦ k⊕(r−1)
//! and signs (−1)^{popcount(k & m_r)} for a fixed 3-bit mask m_r. Bob
//! measures in a phase-encoded Hadamard-type basis whose row n has entries
//! (1/(2√2))·(−1)^{popcount(k & m_n)}·e^{−iφ_{k+1}} with the same mask
//! sequence. The masks are chosen so that any two distinct rows of either
//! family are orthogonal for *every* normalized amplitude vector.
//!
//! After both announce their outcomes (r, n), Chika's trio has collapsed to
//! a state that differs from |Ω⟩ by a signed permutation; for r = 1 a
//! diagonal Z-mask always recovers |Ω⟩ exactly, and under extra amplitude
//! or phase symmetries (see [`special_case_constraints`]) more outcomes
//! become recoverable, raising the success probability from 1/8 to 1/4 or 1.

use num_complex::Complex64;
use serde::Serialize;
use std::f64::consts::TAU;
use thiserror::Error;

use crate::tensor::{
    fidelity_pure_vs_mixed, tensor_product_operators, tensor_product_states, LinearOperator,
    PureState, QubitSelection, TensorError, EXACT_TOL,
};

/// Tolerance for declaring a recovery operation perfect: the corrected
/// overlap |⟨target|U|collapsed⟩| must reach 1 − [`CORRECTION_TOL`].
///
/// Recoveries that exist at all are exact up to f64 rounding (~1e-15), while
/// near-misses on generic targets sit far below 1; 1e-9 separates the two
/// regimes with eight orders of margin.
pub const CORRECTION_TOL: f64 = 1e-9;

/// Tolerance for amplitude/phase symmetry checks on supplied targets.
pub const CONSTRAINT_TOL: f64 = 1e-9;

/// The shared mask sequence m_1..m_8 driving both families' signs.
///
/// Row r uses mask `ROW_MASKS[r-1]`. The sequence is a permutation of all
/// eight 3-bit values arranged so that for any two rows r ≠ s the dot
/// product (r−1 ⊕ s−1)·(m_r ⊕ m_s) is odd, which is exactly the condition
/// making the signed-permutation rows mutually orthogonal for arbitrary
/// normalized amplitudes.
const ROW_MASKS: [usize; 8] = [0b000, 0b001, 0b111, 0b010, 0b101, 0b110, 0b011, 0b100];

/// Errors produced by protocol construction and analysis.
#[derive(Debug, Error)]
pub enum ProtocolError {
    /// Underlying register-level failure.
    #[error(transparent)]
    Tensor(#[from] TensorError),
    /// A target flagged normalized missed Σ α² = 1.
    #[error("target norm violation: |Σα² − 1| = {residual:.3e} exceeds {tol:.0e}")]
    NormViolation { residual: f64, tol: f64 },
    /// A NaN or infinite amplitude/phase was rejected.
    #[error("non-finite target parameter at position {position}")]
    NonFinite { position: usize },
    /// A supplied target broke an amplitude-pairing constraint.
    #[error(
        "constraint α{lhs} = α{rhs} for outcome row {r} violated by {difference:.3e} (tolerance {tol:.0e})"
    )]
    ConstraintViolation {
        r: usize,
        lhs: usize,
        rhs: usize,
        difference: f64,
        tol: f64,
    },
    /// Equal-amplitude accounting was requested for an unequal target.
    #[error("amplitudes not all equal: spread {spread:.3e} exceeds {tol:.0e}")]
    AmplitudesNotEqual { spread: f64, tol: f64 },
    /// Zero-phase accounting was requested for a target with live phases.
    #[error("phases not all zero (mod 2π): max deviation {deviation:.3e} exceeds {tol:.0e}")]
    PhasesNotZero { deviation: f64, tol: f64 },
}

/// The state the two senders jointly describe: real amplitudes α₁..α₈
/// (Alice's share of the classical data) and phases φ₁..φ₈ in radians
/// (Bob's share).
///
/// Construction validates finiteness and — unless the unnormalized-allowed
/// flag is used — Σ α² = 1 within [`EXACT_TOL`]. Phases are canonicalized
/// into [0, 2π).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TargetState {
    alphas: [f64; 8],
    phis: [f64; 8],
    allow_unnormalized: bool,
}

impl TargetState {
    /// A normalized target.
    ///
    /// # Errors
    /// [`ProtocolError::NonFinite`] for NaN/Inf inputs,
    /// [`ProtocolError::NormViolation`] when |Σ α² − 1| exceeds
    /// [`EXACT_TOL`].
    pub fn new(alphas: [f64; 8], phis: [f64; 8]) -> Result<Self, ProtocolError> {
        let state = Self::new_unnormalized(alphas, phis)?;
        let residual = state.norm_residual();
        if residual > EXACT_TOL {
            return Err(ProtocolError::NormViolation {
                residual,
                tol: EXACT_TOL,
            });
        }
        Ok(Self {
            allow_unnormalized: false,
            ..state
        })
    }

    /// A target with the unnormalized-allowed flag set, for surface sweeps
    /// that vary one amplitude while pinning the rest.
    ///
    /// # Errors
    /// [`ProtocolError::NonFinite`] for NaN/Inf inputs.
    pub fn new_unnormalized(alphas: [f64; 8], phis: [f64; 8]) -> Result<Self, ProtocolError> {
        for (position, value) in alphas.iter().chain(phis.iter()).enumerate() {
            if !value.is_finite() {
                return Err(ProtocolError::NonFinite { position });
            }
        }
        let phis = phis.map(|p| p.rem_euclid(TAU));
        Ok(Self {
            alphas,
            phis,
            allow_unnormalized: true,
        })
    }

    /// The amplitudes α₁..α₈.
    pub fn alphas(&self) -> &[f64; 8] {
        &self.alphas
    }

    /// The phases φ₁..φ₈, canonicalized into [0, 2π).
    pub fn phis(&self) -> &[f64; 8] {
        &self.phis
    }

    /// Whether this target was built via the unnormalized-allowed path.
    pub fn allows_unnormalized(&self) -> bool {
        self.allow_unnormalized
    }

    /// |Σ α² − 1|.
    pub fn norm_residual(&self) -> f64 {
        (self.alphas.iter().map(|a| a * a).sum::<f64>() - 1.0).abs()
    }

    /// Confirm Σ α² = 1 within [`EXACT_TOL`], regardless of how the target
    /// was constructed.
    pub fn check_normalized(&self) -> Result<(), ProtocolError> {
        let residual = self.norm_residual();
        if residual > EXACT_TOL {
            return Err(ProtocolError::NormViolation {
                residual,
                tol: EXACT_TOL,
            });
        }
        Ok(())
    }

    /// Realize |Ω⟩ = Σ_k α_{k+1} e^{iφ_{k+1}} |k⟩ as a 3-qubit state.
    pub fn realize(&self) -> PureState {
        let amplitudes = (0..8)
            .map(|k| Complex64::from_polar(self.alphas[k], self.phis[k]))
            .collect();
        PureState::new(3, amplitudes).expect("8 finite amplitudes form a 3-qubit state")
    }

    /// The uniform reference target: all α = 1/(2√2), all φ = 0.
    pub fn equal_amplitudes() -> Self {
        let a = 1.0 / (2.0 * 2f64.sqrt());
        Self {
            alphas: [a; 8],
            phis: [0.0; 8],
            allow_unnormalized: false,
        }
    }
}

/// Validate and realize a target in one step.
///
/// # Errors
/// Same as [`TargetState::new`].
pub fn build_target(
    alphas: [f64; 8],
    phis: [f64; 8],
) -> Result<(TargetState, PureState), ProtocolError> {
    let target = TargetState::new(alphas, phis)?;
    let psi = target.realize();
    Ok((target, psi))
}

/// The shared 9-qubit resource and who holds which trio.
#[derive(Debug, Clone)]
pub struct EntangledResource {
    state: PureState,
    alice: QubitSelection,
    bob: QubitSelection,
    chika: QubitSelection,
}

impl EntangledResource {
    /// The 512-amplitude resource state.
    pub fn state(&self) -> &PureState {
        &self.state
    }

    /// Alice's trio (1, 4, 7).
    pub fn alice(&self) -> &QubitSelection {
        &self.alice
    }

    /// Bob's trio (2, 5, 8).
    pub fn bob(&self) -> &QubitSelection {
        &self.bob
    }

    /// Chika's trio (3, 6, 9).
    pub fn chika(&self) -> &QubitSelection {
        &self.chika
    }
}

/// Compose a 9-qubit basis index from per-trio 3-bit indices.
///
/// Bits of `a` land on qubits (1,4,7), bits of `b` on (2,5,8), bits of `c`
/// on (3,6,9); within each trio the index's most significant bit goes to
/// the lowest-numbered qubit.
#[inline]
pub fn compose_trio_index(a: usize, b: usize, c: usize) -> usize {
    let mut k = 0usize;
    for bit in 0..3 {
        k |= ((a >> (2 - bit)) & 1) << (8 - 3 * bit);
        k |= ((b >> (2 - bit)) & 1) << (7 - 3 * bit);
        k |= ((c >> (2 - bit)) & 1) << (6 - 3 * bit);
    }
    k
}

/// Split a 9-qubit basis index into its (alice, bob, chika) trio indices.
#[inline]
pub fn split_trio_index(k: usize) -> (usize, usize, usize) {
    let mut a = 0usize;
    let mut b = 0usize;
    let mut c = 0usize;
    for bit in 0..3 {
        a |= ((k >> (8 - 3 * bit)) & 1) << (2 - bit);
        b |= ((k >> (7 - 3 * bit)) & 1) << (2 - bit);
        c |= ((k >> (6 - 3 * bit)) & 1) << (2 - bit);
    }
    (a, b, c)
}

/// Build the shared resource: three GHZ pairs-of-three whose product equals
///
/// ```text
/// |F⟩ = (1/(2√2)) Σ_{x∈{0,1}³} |x⟩_{147} |x⟩_{258} |x⟩_{369}
/// ```
///
/// i.e. exactly 8 nonzero amplitudes of 1/(2√2) each, on the indices whose
/// three trio-bits agree.
pub fn build_resource() -> EntangledResource {
    let w = 1.0 / 2f64.sqrt();
    let mut ghz_amps = vec![Complex64::ZERO; 8];
    ghz_amps[0] = Complex64::new(w, 0.0);
    ghz_amps[7] = Complex64::new(w, 0.0);
    let ghz = PureState::new(3, ghz_amps).expect("GHZ amplitudes are finite");
    let six = tensor_product_states(&ghz, &ghz).expect("6 qubits within cap");
    let state = tensor_product_states(&six, &ghz).expect("9 qubits within cap");
    EntangledResource {
        state,
        alice: QubitSelection::new(vec![1, 4, 7]).expect("distinct labels"),
        bob: QubitSelection::new(vec![2, 5, 8]).expect("distinct labels"),
        chika: QubitSelection::new(vec![3, 6, 9]).expect("distinct labels"),
    }
}

/// One row of the signed-permutation family: basis ket |k⟩ carries
/// amplitude index `perm[k]` (1-based) with sign `signs[k]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SignedPermutationRow {
    row_index: usize,
    perm: [usize; 8],
    signs: [i8; 8],
}

impl SignedPermutationRow {
    /// Row label r ∈ 1..8.
    pub fn row_index(&self) -> usize {
        self.row_index
    }

    /// 1-based amplitude index carried by each basis ket.
    pub fn perm(&self) -> &[usize; 8] {
        &self.perm
    }

    /// Signs ±1 attached to each basis ket.
    pub fn signs(&self) -> &[i8; 8] {
        &self.signs
    }

    /// The 3-bit mask m with signs[k] = (−1)^{popcount(k & m)}.
    pub fn sign_mask(&self) -> usize {
        ROW_MASKS[self.row_index - 1]
    }

    /// Flip the sign at basis ket `k` — a deliberate-corruption hook for
    /// detector sanity tests.
    ///
    /// # Panics
    /// Panics if `k ≥ 8`.
    pub fn corrupt_sign(&mut self, k: usize) {
        self.signs[k] = -self.signs[k];
    }

    /// Realize the row over a target's amplitudes:
    /// entry k = signs[k] · α_{perm[k]}.
    pub fn realize(&self, target: &TargetState) -> PureState {
        let amplitudes = (0..8)
            .map(|k| {
                Complex64::new(
                    f64::from(self.signs[k]) * target.alphas()[self.perm[k] - 1],
                    0.0,
                )
            })
            .collect();
        PureState::new(3, amplitudes).expect("8 finite real amplitudes")
    }
}

/// The eight signed-permutation rows.
///
/// Row r applies the permutation k ↦ k ⊕ (r−1) and signs
/// (−1)^{popcount(k & m_r)} with the fixed mask sequence; row 1 is the
/// identity with all signs +. Realized over any normalized amplitude
/// vector, the rows are mutually orthonormal.
pub fn signed_permutation_table() -> [SignedPermutationRow; 8] {
    std::array::from_fn(|i| {
        let r = i + 1;
        let mask = ROW_MASKS[i];
        let perm = std::array::from_fn(|k| (k ^ (r - 1)) + 1);
        let signs = std::array::from_fn(|k| {
            if (k & mask).count_ones() % 2 == 0 {
                1
            } else {
                -1
            }
        });
        SignedPermutationRow {
            row_index: r,
            perm,
            signs,
        }
    })
}

/// Both measurement bases, realized for one target.
///
/// Alice's rows depend only on α; Bob's only on φ. Construction verifies
/// each family's Gram matrix is the identity within [`EXACT_TOL`].
#[derive(Debug, Clone)]
pub struct MeasurementBasisPair {
    target: TargetState,
    alice_rows: Vec<PureState>,
    bob_rows: Vec<PureState>,
}

impl MeasurementBasisPair {
    /// The target the bases were built for.
    pub fn target(&self) -> &TargetState {
        &self.target
    }

    /// Alice's rows ϱ_1..ϱ_8 (amplitude-encoded).
    pub fn alice_rows(&self) -> &[PureState] {
        &self.alice_rows
    }

    /// Bob's rows ς_1..ς_8 (phase-encoded).
    pub fn bob_rows(&self) -> &[PureState] {
        &self.bob_rows
    }

    /// Worst Gram-matrix deviation from the identity, per family:
    /// `(alice, bob)`.
    pub fn gram_deviation(&self) -> (f64, f64) {
        (
            gram_deviation(&self.alice_rows),
            gram_deviation(&self.bob_rows),
        )
    }
}

fn gram_deviation(rows: &[PureState]) -> f64 {
    let mut worst = 0.0f64;
    for (i, a) in rows.iter().enumerate() {
        for (j, b) in rows.iter().enumerate() {
            let dot = a.inner(b).expect("rows share a register");
            let expected = if i == j { Complex64::ONE } else { Complex64::ZERO };
            worst = worst.max((dot - expected).norm());
        }
    }
    worst
}

/// Build both bases for a normalized target and verify orthonormality.
///
/// # Errors
/// [`ProtocolError::NormViolation`] for an unnormalized target (the rows
/// would not be unit vectors); a Gram deviation beyond [`EXACT_TOL`] is
/// impossible for the canonical table but reported as a tensor-level
/// normalization error if it ever occurs.
pub fn build_bases(target: &TargetState) -> Result<MeasurementBasisPair, ProtocolError> {
    let pair = build_bases_from_table(target, &signed_permutation_table())?;
    let (alice_dev, bob_dev) = pair.gram_deviation();
    let worst = alice_dev.max(bob_dev);
    if worst > EXACT_TOL {
        return Err(TensorError::NotNormalized {
            residual: worst,
            tol: EXACT_TOL,
        }
        .into());
    }
    Ok(pair)
}

/// Build bases from an explicit row table, skipping the orthonormality
/// check — the injection point for mutation tests that corrupt a sign and
/// expect downstream detectors to fire.
///
/// # Errors
/// [`ProtocolError::NormViolation`] for an unnormalized target.
pub fn build_bases_from_table(
    target: &TargetState,
    table: &[SignedPermutationRow; 8],
) -> Result<MeasurementBasisPair, ProtocolError> {
    target.check_normalized()?;
    let alice_rows = table.iter().map(|row| row.realize(target)).collect();
    let prefactor = 1.0 / (2.0 * 2f64.sqrt());
    let bob_rows = (0..8)
        .map(|i| {
            let mask = ROW_MASKS[i];
            let amplitudes = (0..8)
                .map(|k| {
                    let sign = if (k & mask).count_ones() % 2 == 0 {
                        1.0
                    } else {
                        -1.0
                    };
                    Complex64::from_polar(prefactor * sign, -target.phis()[k])
                })
                .collect();
            PureState::new(3, amplitudes).expect("8 finite amplitudes")
        })
        .collect();
    Ok(MeasurementBasisPair {
        target: target.clone(),
        alice_rows,
        bob_rows,
    })
}

/// One single-qubit correction symbol.
///
/// `XZ` is the product σ_x σ_z (apply Z, then X), i.e. ⎡0 −1⎤⎣1 0⎦.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub enum PauliOp {
    I,
    X,
    Z,
    XZ,
}

impl PauliOp {
    /// Row-major 2 × 2 matrix.
    pub fn matrix(self) -> [Complex64; 4] {
        let o = Complex64::ZERO;
        let l = Complex64::ONE;
        match self {
            PauliOp::I => [l, o, o, l],
            PauliOp::X => [o, l, l, o],
            PauliOp::Z => [l, o, o, -l],
            PauliOp::XZ => [o, -l, l, o],
        }
    }

    fn name(self) -> &'static str {
        match self {
            PauliOp::I => "I",
            PauliOp::X => "X",
            PauliOp::Z => "Z",
            PauliOp::XZ => "XZ",
        }
    }
}

/// A three-qubit correction string for Chika's trio (3, 6, 9), one symbol
/// per qubit in trio order.
///
/// Equality ignores the recorded global phase: two strings are the same
/// correction whenever their symbols agree.
#[derive(Debug, Clone, Serialize)]
pub struct PauliString {
    ops: [PauliOp; 3],
    /// Residual global phase θ (radians) with e^{iθ}·U|collapsed⟩ ≈ |target⟩,
    /// recorded by the correction search when it is not negligible.
    global_phase: Option<f64>,
}

impl PartialEq for PauliString {
    fn eq(&self, other: &Self) -> bool {
        self.ops == other.ops
    }
}

impl Eq for PauliString {}

impl PauliString {
    /// A string from explicit symbols, no phase note.
    pub fn new(ops: [PauliOp; 3]) -> Self {
        Self {
            ops,
            global_phase: None,
        }
    }

    /// The diagonal string Z^mask: qubit t of the trio gets Z exactly when
    /// bit (2−t) of `mask` is set, matching the 3-bit sign-mask convention.
    ///
    /// # Panics
    /// Panics if `mask ≥ 8`.
    pub fn z_mask(mask: usize) -> Self {
        assert!(mask < 8, "mask {mask} is not a 3-bit value");
        Self::from_xz_masks(0, mask)
    }

    /// The string X^{x_mask}·Z^{z_mask} (per qubit: Z first, then X).
    ///
    /// # Panics
    /// Panics if either mask is not a 3-bit value.
    pub fn from_xz_masks(x_mask: usize, z_mask: usize) -> Self {
        assert!(x_mask < 8 && z_mask < 8, "masks must be 3-bit values");
        let ops = std::array::from_fn(|t| {
            let x = (x_mask >> (2 - t)) & 1 == 1;
            let z = (z_mask >> (2 - t)) & 1 == 1;
            match (x, z) {
                (false, false) => PauliOp::I,
                (true, false) => PauliOp::X,
                (false, true) => PauliOp::Z,
                (true, true) => PauliOp::XZ,
            }
        });
        Self {
            ops,
            global_phase: None,
        }
    }

    /// The symbols, trio-ordered.
    pub fn ops(&self) -> &[PauliOp; 3] {
        &self.ops
    }

    /// The recorded residual global phase, if any.
    pub fn global_phase(&self) -> Option<f64> {
        self.global_phase
    }

    /// Realize as an 8 × 8 unitary on the trio register.
    pub fn to_operator(&self) -> LinearOperator {
        let mut op = LinearOperator::new(1, 1, self.ops[0].matrix().to_vec(), true)
            .expect("single symbols are unitary");
        for symbol in &self.ops[1..] {
            let next = LinearOperator::new(1, 1, symbol.matrix().to_vec(), true)
                .expect("single symbols are unitary");
            op = tensor_product_operators(&op, &next).expect("3 qubits within cap");
        }
        op
    }

    /// Apply to a 3-qubit state.
    ///
    /// # Errors
    /// [`TensorError::DimensionMismatch`] unless the state has 3 qubits.
    pub fn apply(&self, psi: &PureState) -> Result<PureState, TensorError> {
        let mut out = psi.clone();
        for (t, symbol) in self.ops.iter().enumerate() {
            out = out.apply_one_qubit(&symbol.matrix(), t + 1)?;
        }
        Ok(out)
    }
}

impl std::fmt::Display for PauliString {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{}⊗{}⊗{}",
            self.ops[0].name(),
            self.ops[1].name(),
            self.ops[2].name()
        )
    }
}

/// One joint measurement outcome: Alice announced r, Bob announced n.
#[derive(Debug, Clone, Serialize)]
pub struct OutcomeRecord {
    /// Alice's outcome, 1..8.
    pub r: usize,
    /// Bob's outcome, 1..8.
    pub n: usize,
    /// Joint outcome probability.
    pub probability: f64,
    /// Chika's collapsed trio state, renormalized.
    pub collapsed: PureState,
    /// A perfect correction, when one exists in the search group.
    pub correction: Option<PauliString>,
    /// Best achievable recovery fidelity |⟨Ω|U|collapsed⟩|² over the
    /// search group (≈1 exactly when `correction` is present).
    pub recovery_fidelity: f64,
}

/// Enumerate all 64 joint outcomes in (r-major, n-minor) order.
///
/// For each pair the receiver's unnormalized collapsed state is the
/// projection ⟨ϱ_r| ⟨ς_n| F⟩, its squared norm is the outcome probability,
/// and the correction search over {I, X, Z, XZ}^⊗3 fills the recovery
/// fields.
///
/// # Errors
/// Tensor-level failures are impossible for well-formed inputs but are
/// propagated rather than unwrapped.
pub fn joint_measure(
    resource: &EntangledResource,
    bases: &MeasurementBasisPair,
) -> Result<Vec<OutcomeRecord>, ProtocolError> {
    let target_psi = bases.target().realize();
    let f_amps = resource.state().amplitudes();
    let mut records = Vec::with_capacity(64);
    for r in 1..=8 {
        let alice_row = &bases.alice_rows()[r - 1];
        for n in 1..=8 {
            let bob_row = &bases.bob_rows()[n - 1];
            let mut collapsed_raw = vec![Complex64::ZERO; 8];
            for (k, &f) in f_amps.iter().enumerate() {
                if f == Complex64::ZERO {
                    continue;
                }
                let (a, b, c) = split_trio_index(k);
                collapsed_raw[c] += alice_row.amp(a).conj() * bob_row.amp(b).conj() * f;
            }
            let probability: f64 = collapsed_raw.iter().map(|z| z.norm_sqr()).sum();
            let collapsed = PureState::new(3, collapsed_raw)?.normalized()?;
            let (best_fidelity, correction) = best_recovery(&collapsed, &target_psi)?;
            records.push(OutcomeRecord {
                r,
                n,
                probability,
                collapsed,
                correction,
                recovery_fidelity: best_fidelity,
            });
        }
    }
    Ok(records)
}

/// Reconstruct the resource from its expansion over both bases and return
/// the max-abs deviation.
///
/// Writing u_{rn} for the unnormalized collapsed state of outcome (r, n),
/// completeness of the two orthonormal families means
/// Σ_{r,n} |ϱ_r⟩|ς_n⟩|u_{rn}⟩, reassembled onto qubits 1–9, must equal |F⟩
/// exactly; the residual is the largest amplitude deviation. Feeding a
/// corrupted row table makes the residual jump above 0.01.
///
/// # Errors
/// Propagates register-level failures (impossible for well-formed inputs).
pub fn expansion_verify(
    resource: &EntangledResource,
    bases: &MeasurementBasisPair,
) -> Result<f64, ProtocolError> {
    let f_amps = resource.state().amplitudes();
    let mut reconstructed = vec![Complex64::ZERO; 512];
    for alice_row in bases.alice_rows() {
        for bob_row in bases.bob_rows() {
            let mut u = [Complex64::ZERO; 8];
            for (k, &f) in f_amps.iter().enumerate() {
                if f == Complex64::ZERO {
                    continue;
                }
                let (a, b, c) = split_trio_index(k);
                u[c] += alice_row.amp(a).conj() * bob_row.amp(b).conj() * f;
            }
            for a in 0..8 {
                let xa = alice_row.amp(a);
                if xa == Complex64::ZERO {
                    continue;
                }
                for b in 0..8 {
                    let xab = xa * bob_row.amp(b);
                    for (c, &uc) in u.iter().enumerate() {
                        reconstructed[compose_trio_index(a, b, c)] += xab * uc;
                    }
                }
            }
        }
    }
    let residual = reconstructed
        .iter()
        .zip(f_amps)
        .map(|(x, y)| (x - y).norm())
        .fold(0.0, f64::max);
    Ok(residual)
}

/// The Z-mask correcting outcome (r = 1, n): its diagonal signs equal
/// Bob's sign row n, so it is `Z^{m_n}` for the row's mask.
///
/// # Panics
/// Panics unless 1 ≤ n ≤ 8.
pub fn correction_for_r1(n: usize) -> PauliString {
    assert!((1..=8).contains(&n), "Bob outcome {n} out of range 1..8");
    PauliString::z_mask(ROW_MASKS[n - 1])
}

/// The amplitude equalities (1-based index pairs, lower index first) under
/// which outcome row r becomes recoverable by a fixed diagonal correction.
///
/// Row r pairs index j with j ⊕ (r−1) (0-based), e.g. r = 2 pairs
/// (α₁, α₂), (α₃, α₄), (α₅, α₆), (α₇, α₈) and r = 8 pairs
/// (α₁, α₈), (α₂, α₇), (α₃, α₆), (α₄, α₅).
///
/// # Panics
/// Panics unless 2 ≤ r ≤ 8.
pub fn special_case_constraints(r: usize) -> Vec<(usize, usize)> {
    assert!((2..=8).contains(&r), "outcome row {r} out of range 2..8");
    let d = r - 1;
    (0..8)
        .filter(|&j| j < (j ^ d))
        .map(|j| (j + 1, (j ^ d) + 1))
        .collect()
}

/// Enforce row r's amplitude equalities on a target and return the
/// constrained target together with the diagonal correction `Z^{m_r}` that
/// recovers outcome (r, n = 1) exactly under those equalities.
///
/// Paired amplitudes must already agree within [`CONSTRAINT_TOL`]; they are
/// then replaced by their exact average and the vector is renormalized, so
/// the returned target satisfies the constraints to machine precision.
///
/// # Errors
/// [`ProtocolError::ConstraintViolation`] naming the first offending pair.
///
/// # Panics
/// Panics unless 2 ≤ r ≤ 8.
pub fn apply_special_case(
    r: usize,
    target: &TargetState,
) -> Result<(TargetState, PauliString), ProtocolError> {
    let mut alphas = *target.alphas();
    for (lhs, rhs) in special_case_constraints(r) {
        let difference = (alphas[lhs - 1] - alphas[rhs - 1]).abs();
        if difference > CONSTRAINT_TOL {
            return Err(ProtocolError::ConstraintViolation {
                r,
                lhs,
                rhs,
                difference,
                tol: CONSTRAINT_TOL,
            });
        }
        let average = 0.5 * (alphas[lhs - 1] + alphas[rhs - 1]);
        alphas[lhs - 1] = average;
        alphas[rhs - 1] = average;
    }
    let norm = alphas.iter().map(|a| a * a).sum::<f64>().sqrt();
    for a in &mut alphas {
        *a /= norm;
    }
    let constrained = TargetState::new(alphas, *target.phis())?;
    Ok((constrained, PauliString::z_mask(ROW_MASKS[r - 1])))
}

/// Search the 64 strings {I, X, Z, XZ}^⊗3 for one mapping `collapsed` onto
/// `target` up to global phase, returning the lexicographically first hit
/// (symbol order I < X < Z < XZ, leading qubit most significant) or `None`.
///
/// A hit requires |⟨target|U|collapsed⟩| ≥ 1 − [`CORRECTION_TOL`].
///
/// # Errors
/// Both states must be 3-qubit and normalized within [`EXACT_TOL`].
pub fn find_correction(
    collapsed: &PureState,
    target: &PureState,
) -> Result<Option<PauliString>, ProtocolError> {
    let (_, correction) = best_recovery(collapsed, target)?;
    Ok(correction)
}

/// Exhaustive recovery search: best |⟨target|U|collapsed⟩|² over the group,
/// plus the first perfect correction in lexicographic order if any.
fn best_recovery(
    collapsed: &PureState,
    target: &PureState,
) -> Result<(f64, Option<PauliString>), ProtocolError> {
    if collapsed.num_qubits() != 3 || target.num_qubits() != 3 {
        return Err(TensorError::DimensionMismatch {
            expected: 8,
            got: collapsed.dim().max(target.dim()),
        }
        .into());
    }
    collapsed.check_normalized(EXACT_TOL).map_err(ProtocolError::from)?;
    target.check_normalized(EXACT_TOL).map_err(ProtocolError::from)?;

    const SYMBOLS: [PauliOp; 4] = [PauliOp::I, PauliOp::X, PauliOp::Z, PauliOp::XZ];
    let mut best = 0.0f64;
    let mut hit: Option<PauliString> = None;
    for &p0 in &SYMBOLS {
        let after0 = collapsed.apply_one_qubit(&p0.matrix(), 1)?;
        for &p1 in &SYMBOLS {
            let after1 = after0.apply_one_qubit(&p1.matrix(), 2)?;
            for &p2 in &SYMBOLS {
                let candidate = after1.apply_one_qubit(&p2.matrix(), 3)?;
                let overlap = target.inner(&candidate)?;
                let magnitude = overlap.norm();
                best = best.max(magnitude * magnitude);
                if hit.is_none() && magnitude >= 1.0 - CORRECTION_TOL {
                    let phase = -overlap.arg();
                    hit = Some(PauliString {
                        ops: [p0, p1, p2],
                        global_phase: if phase.abs() > EXACT_TOL {
                            Some(phase)
                        } else {
                            None
                        },
                    });
                }
            }
        }
    }
    Ok((best.min(1.0), hit))
}

/// The accounting regime for [`success_probability`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SuccessMode {
    /// No symmetry assumed: only r = 1 outcomes are recoverable.
    Generic,
    /// Amplitudes paired per [`special_case_constraints`] for this row.
    Table1(usize),
    /// All amplitudes equal (1/(2√2) after normalization).
    EqualAmplitude,
    /// All phases ≡ 0 (mod 2π).
    ZeroPhase,
}

/// Probability-weighted fraction of the 64 outcomes admitting a perfect
/// correction, after validating that the target actually satisfies the
/// mode's symmetry.
///
/// Generic targets score 1/8, each amplitude-pairing row 1/4, and the
/// equal-amplitude and zero-phase regimes score 1.
///
/// # Errors
/// Symmetry violations surface as the corresponding
/// [`ProtocolError`] variant; the target must be normalized.
pub fn success_probability(
    target: &TargetState,
    mode: SuccessMode,
) -> Result<f64, ProtocolError> {
    target.check_normalized()?;
    match mode {
        SuccessMode::Generic => {}
        SuccessMode::Table1(r) => {
            for (lhs, rhs) in special_case_constraints(r) {
                let difference = (target.alphas()[lhs - 1] - target.alphas()[rhs - 1]).abs();
                if difference > CONSTRAINT_TOL {
                    return Err(ProtocolError::ConstraintViolation {
                        r,
                        lhs,
                        rhs,
                        difference,
                        tol: CONSTRAINT_TOL,
                    });
                }
            }
        }
        SuccessMode::EqualAmplitude => {
            let max = target.alphas().iter().cloned().fold(f64::MIN, f64::max);
            let min = target.alphas().iter().cloned().fold(f64::MAX, f64::min);
            let spread = max - min;
            if spread > CONSTRAINT_TOL {
                return Err(ProtocolError::AmplitudesNotEqual {
                    spread,
                    tol: CONSTRAINT_TOL,
                });
            }
        }
        SuccessMode::ZeroPhase => {
            let deviation = target
                .phis()
                .iter()
                .map(|&p| p.min(TAU - p))
                .fold(0.0, f64::max);
            if deviation > CONSTRAINT_TOL {
                return Err(ProtocolError::PhasesNotZero {
                    deviation,
                    tol: CONSTRAINT_TOL,
                });
            }
        }
    }
    let resource = build_resource();
    let bases = build_bases(target)?;
    let records = joint_measure(&resource, &bases)?;
    Ok(records
        .iter()
        .filter(|rec| rec.correction.is_some())
        .map(|rec| rec.probability)
        .sum())
}

/// Fidelity of a corrected collapse against the target realization,
/// |⟨target|U|collapsed⟩|² — the quantity [`OutcomeRecord::recovery_fidelity`]
/// reports for the chosen correction.
///
/// # Errors
/// Register mismatches propagate from the tensor layer.
pub fn recovery_fidelity(
    correction: &PauliString,
    collapsed: &PureState,
    target: &PureState,
) -> Result<f64, ProtocolError> {
    let corrected = correction.apply(collapsed)?;
    let rho = corrected.to_density();
    Ok(fidelity_pure_vs_mixed(target, &rho)?)
}
