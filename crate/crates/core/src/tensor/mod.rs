//! Dense complex linear algebra over ordered multi-qubit registers.
//!
//! Everything here works on explicit, big-endian qubit registers: qubit 1 is
//! the most significant bit of a basis index, so the 9-qubit ket |000111000⟩
//! reads off positionally (qubits 4–6 set). Registers are capped at
//! [`REGISTER_CAP`] qubits to keep the dense representation honest — the
//! largest object this crate ever manipulates is a 512 × 512 density matrix.
//!
//! All values are immutable after construction and every operation is a pure
//! function, so the types are safe to share across threads.

use num_complex::Complex64;
use thiserror::Error;

mod eigen;

/// Complex scalar used throughout: IEEE-754 double precision components.
///
/// Constructors reject non-finite components, so NaN/Inf never enter a state
/// or operator.
pub type ComplexScalar = Complex64;

/// Maximum register width (qubits) accepted by constructors and products.
///
/// The protocol needs 9 qubits (a 512-dimensional register); the cap leaves
/// headroom for tests while preventing accidental exponential blowups.
pub const REGISTER_CAP: usize = 12;

/// Tolerance for relations that are exact up to f64 rounding (norms,
/// Hermiticity, unitarity, Kraus completeness, trace preservation).
///
/// f64 carries ~15.9 significant digits; with register dimensions ≤ 4096 the
/// accumulated rounding of the operations in this crate stays several orders
/// of magnitude below 1e-12.
pub const EXACT_TOL: f64 = 1e-12;

/// Eigenvalue floor for positive-semidefiniteness checks.
///
/// Slightly negative eigenvalues of magnitude ≲ 1e-10 are attributable to
/// rounding in the Jacobi iteration and do not indicate a genuinely
/// non-physical state.
pub const PSD_FLOOR: f64 = -1e-10;

/// Errors produced by register-level linear algebra.
#[derive(Debug, Error)]
pub enum TensorError {
    /// A register width or vector/matrix length was inconsistent.
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    /// A product would exceed the configured register cap.
    #[error("register of {qubits} qubits exceeds the cap of {cap}")]
    CapacityExceeded { qubits: usize, cap: usize },
    /// A qubit label fell outside the register.
    #[error("qubit {index} out of range for a {register}-qubit register")]
    IndexOutOfRange { index: usize, register: usize },
    /// A qubit selection listed the same label twice.
    #[error("duplicate qubit {index} in selection")]
    DuplicateIndex { index: usize },
    /// A qubit selection was empty where at least one label is required.
    #[error("empty qubit selection")]
    EmptySelection,
    /// A NaN or infinite component was rejected.
    #[error("non-finite component at index {index}")]
    NonFinite { index: usize },
    /// A state flagged as normalized missed Σ|amplitude|² = 1.
    #[error("norm violation: |Σ|amp|² − 1| = {residual:.3e} exceeds {tol:.0e}")]
    NotNormalized { residual: f64, tol: f64 },
    /// A matrix required to be Hermitian was not.
    #[error("Hermiticity violation: max |H − H†| = {deviation:.3e}")]
    NotHermitian { deviation: f64 },
    /// An operator flagged unitary failed O†O = I.
    #[error("unitarity violation: max |O†O − I| = {deviation:.3e}")]
    NotUnitary { deviation: f64 },
    /// A Kraus set flagged trace-preserving failed Σ K†K = I.
    #[error("Kraus completeness violation: max |ΣK†K − I| = {deviation:.3e}")]
    IncompleteKraus { deviation: f64 },
    /// A density matrix failed the opt-in positivity check.
    #[error("not positive semidefinite: smallest eigenvalue {min_eigenvalue:.3e} below floor {floor:.0e}")]
    NotPositiveSemidefinite { min_eigenvalue: f64, floor: f64 },
    /// ⟨ψ|ρ|ψ⟩ came out with a non-negligible imaginary part.
    #[error("fidelity has imaginary part {imag:.3e}")]
    FidelityNotReal { imag: f64 },
    /// A fidelity left [0, 1] by more than rounding allows.
    #[error("fidelity {value} outside [0, 1] beyond tolerance")]
    FidelityOutOfRange { value: f64 },
}

fn check_finite(data: &[Complex64]) -> Result<(), TensorError> {
    for (index, z) in data.iter().enumerate() {
        if !z.re.is_finite() || !z.im.is_finite() {
            return Err(TensorError::NonFinite { index });
        }
    }
    Ok(())
}

fn check_cap(qubits: usize) -> Result<(), TensorError> {
    if qubits == 0 || qubits > REGISTER_CAP {
        return Err(TensorError::CapacityExceeded {
            qubits,
            cap: REGISTER_CAP,
        });
    }
    Ok(())
}

/// Bit of basis index `k` belonging to 1-based qubit `q` in an `n`-qubit
/// register (big-endian: qubit 1 is the most significant bit).
#[inline]
pub fn bit_of(k: usize, q: usize, n: usize) -> usize {
    (k >> (n - q)) & 1
}

/// An ordered list of distinct 1-based qubit labels.
///
/// The order is meaningful: operations that reorder qubits (embedding,
/// partial trace) map the first listed label to the most significant bit of
/// the smaller register.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QubitSelection {
    indices: Vec<usize>,
}

impl QubitSelection {
    /// Build a selection from distinct, nonzero 1-based labels.
    ///
    /// # Errors
    /// [`TensorError::EmptySelection`] for an empty list,
    /// [`TensorError::DuplicateIndex`] for repeated labels,
    /// [`TensorError::IndexOutOfRange`] for a zero label (registers are
    /// 1-based).
    pub fn new(indices: Vec<usize>) -> Result<Self, TensorError> {
        if indices.is_empty() {
            return Err(TensorError::EmptySelection);
        }
        for (pos, &q) in indices.iter().enumerate() {
            if q == 0 {
                return Err(TensorError::IndexOutOfRange {
                    index: 0,
                    register: 0,
                });
            }
            if indices[..pos].contains(&q) {
                return Err(TensorError::DuplicateIndex { index: q });
            }
        }
        Ok(Self { indices })
    }

    /// The labels in selection order.
    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Number of selected qubits.
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    /// True when nothing is selected (unreachable via [`QubitSelection::new`]).
    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }

    /// Confirm every label fits a `register`-qubit register.
    pub fn check_register(&self, register: usize) -> Result<(), TensorError> {
        for &q in &self.indices {
            if q > register {
                return Err(TensorError::IndexOutOfRange { index: q, register });
            }
        }
        Ok(())
    }
}

/// A pure state: 2^n complex amplitudes over a big-endian n-qubit register.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct PureState {
    num_qubits: usize,
    amplitudes: Vec<Complex64>,
}

impl PureState {
    /// Wrap amplitudes for an `num_qubits`-qubit register.
    ///
    /// # Errors
    /// Length must be exactly 2^num_qubits, the register must fit
    /// [`REGISTER_CAP`], and every component must be finite.
    pub fn new(num_qubits: usize, amplitudes: Vec<Complex64>) -> Result<Self, TensorError> {
        check_cap(num_qubits)?;
        let dim = 1usize << num_qubits;
        if amplitudes.len() != dim {
            return Err(TensorError::DimensionMismatch {
                expected: dim,
                got: amplitudes.len(),
            });
        }
        check_finite(&amplitudes)?;
        Ok(Self {
            num_qubits,
            amplitudes,
        })
    }

    /// The computational basis ket |index⟩.
    ///
    /// # Panics
    /// Panics if `index` is out of range for the register; callers construct
    /// basis kets from loop indices, never from external input.
    pub fn basis(num_qubits: usize, index: usize) -> Self {
        let dim = 1usize << num_qubits;
        assert!(index < dim, "basis index {index} out of range for {num_qubits} qubits");
        let mut amplitudes = vec![Complex64::ZERO; dim];
        amplitudes[index] = Complex64::ONE;
        Self {
            num_qubits,
            amplitudes,
        }
    }

    /// Register width in qubits.
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    /// Vector dimension 2^n.
    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    /// All amplitudes, indexed by big-endian basis index.
    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amplitudes
    }

    /// Amplitude of basis ket `k`.
    pub fn amp(&self, k: usize) -> Complex64 {
        self.amplitudes[k]
    }

    /// Euclidean norm ‖ψ‖.
    pub fn norm(&self) -> f64 {
        self.amplitudes
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Confirm Σ|amplitude|² = 1 within `tol`.
    pub fn check_normalized(&self, tol: f64) -> Result<(), TensorError> {
        let residual = (self.norm().powi(2) - 1.0).abs();
        if residual > tol {
            return Err(TensorError::NotNormalized { residual, tol });
        }
        Ok(())
    }

    /// Rescale to unit norm.
    ///
    /// # Errors
    /// [`TensorError::NotNormalized`] when the state is (numerically) zero.
    pub fn normalized(&self) -> Result<Self, TensorError> {
        let norm = self.norm();
        if norm <= f64::EPSILON {
            return Err(TensorError::NotNormalized {
                residual: 1.0,
                tol: EXACT_TOL,
            });
        }
        let amplitudes = self.amplitudes.iter().map(|z| z / norm).collect();
        Ok(Self {
            num_qubits: self.num_qubits,
            amplitudes,
        })
    }

    /// Inner product ⟨self|other⟩ (antilinear in `self`).
    ///
    /// # Errors
    /// [`TensorError::DimensionMismatch`] on unequal registers.
    pub fn inner(&self, other: &Self) -> Result<Complex64, TensorError> {
        if self.num_qubits != other.num_qubits {
            return Err(TensorError::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        Ok(self
            .amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| a.conj() * b)
            .sum())
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.amplitudes
            .iter()
            .zip(&other.amplitudes)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// The rank-one density matrix |ψ⟩⟨ψ|.
    pub fn to_density(&self) -> DensityMatrix {
        let dim = self.dim();
        let mut entries = vec![Complex64::ZERO; dim * dim];
        for r in 0..dim {
            for c in 0..dim {
                entries[r * dim + c] = self.amplitudes[r] * self.amplitudes[c].conj();
            }
        }
        DensityMatrix {
            num_qubits: self.num_qubits,
            entries,
        }
    }

    /// Apply a 2 × 2 operator to one qubit of the register.
    ///
    /// `op` is row-major `[a, b, c, d]` for the matrix ⎡a b⎤⎣c d⎦.
    ///
    /// # Errors
    /// [`TensorError::IndexOutOfRange`] when `qubit` does not name a register
    /// position.
    pub fn apply_one_qubit(&self, op: &[Complex64; 4], qubit: usize) -> Result<Self, TensorError> {
        if qubit == 0 || qubit > self.num_qubits {
            return Err(TensorError::IndexOutOfRange {
                index: qubit,
                register: self.num_qubits,
            });
        }
        let mask = 1usize << (self.num_qubits - qubit);
        let mut amplitudes = self.amplitudes.clone();
        for k in 0..self.dim() {
            if k & mask != 0 {
                continue;
            }
            let k1 = k | mask;
            let x0 = amplitudes[k];
            let x1 = amplitudes[k1];
            amplitudes[k] = op[0] * x0 + op[1] * x1;
            amplitudes[k1] = op[2] * x0 + op[3] * x1;
        }
        Ok(Self {
            num_qubits: self.num_qubits,
            amplitudes,
        })
    }
}

/// Tensor product of two pure states, left operand major:
/// `(a ⊗ b)[i·dim(b) + j] = a[i]·b[j]`.
///
/// # Errors
/// [`TensorError::CapacityExceeded`] when the combined register would pass
/// [`REGISTER_CAP`].
pub fn tensor_product_states(a: &PureState, b: &PureState) -> Result<PureState, TensorError> {
    let qubits = a.num_qubits + b.num_qubits;
    check_cap(qubits)?;
    let mut amplitudes = Vec::with_capacity(a.dim() * b.dim());
    for &x in &a.amplitudes {
        for &y in &b.amplitudes {
            amplitudes.push(x * y);
        }
    }
    Ok(PureState {
        num_qubits: qubits,
        amplitudes,
    })
}

/// A dense linear operator between qubit registers.
///
/// Stored row-major as a 2^out × 2^in grid. Operators flagged unitary are
/// verified (O†O = I within [`EXACT_TOL`]) at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearOperator {
    in_qubits: usize,
    out_qubits: usize,
    entries: Vec<Complex64>,
    unitary: bool,
}

impl LinearOperator {
    /// Wrap a row-major 2^out × 2^in matrix.
    ///
    /// # Errors
    /// Rejects wrong lengths, registers beyond the cap, non-finite entries,
    /// and (when `unitary` is set) failure of O†O = I within [`EXACT_TOL`].
    pub fn new(
        in_qubits: usize,
        out_qubits: usize,
        entries: Vec<Complex64>,
        unitary: bool,
    ) -> Result<Self, TensorError> {
        check_cap(in_qubits)?;
        check_cap(out_qubits)?;
        let rows = 1usize << out_qubits;
        let cols = 1usize << in_qubits;
        if entries.len() != rows * cols {
            return Err(TensorError::DimensionMismatch {
                expected: rows * cols,
                got: entries.len(),
            });
        }
        check_finite(&entries)?;
        let op = Self {
            in_qubits,
            out_qubits,
            entries,
            unitary,
        };
        if unitary {
            let deviation = op.unitarity_deviation();
            if deviation > EXACT_TOL {
                return Err(TensorError::NotUnitary { deviation });
            }
        }
        Ok(op)
    }

    /// Square operator from a row-major 2^n × 2^n grid, not flagged unitary.
    pub fn square(num_qubits: usize, entries: Vec<Complex64>) -> Result<Self, TensorError> {
        Self::new(num_qubits, num_qubits, entries, false)
    }

    /// The identity on an n-qubit register (flagged unitary).
    pub fn identity(num_qubits: usize) -> Self {
        let dim = 1usize << num_qubits;
        let mut entries = vec![Complex64::ZERO; dim * dim];
        for k in 0..dim {
            entries[k * dim + k] = Complex64::ONE;
        }
        Self {
            in_qubits: num_qubits,
            out_qubits: num_qubits,
            entries,
            unitary: true,
        }
    }

    /// Input register width.
    pub fn in_qubits(&self) -> usize {
        self.in_qubits
    }

    /// Output register width.
    pub fn out_qubits(&self) -> usize {
        self.out_qubits
    }

    /// Whether the operator was constructed with the unitary flag.
    pub fn is_unitary_flagged(&self) -> bool {
        self.unitary
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Entry at (row, col).
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * (1usize << self.in_qubits) + col]
    }

    /// max |O†O − I| over all entries.
    pub fn unitarity_deviation(&self) -> f64 {
        let cols = 1usize << self.in_qubits;
        let rows = 1usize << self.out_qubits;
        let mut worst = 0.0f64;
        for i in 0..cols {
            for j in 0..cols {
                let mut sum = Complex64::ZERO;
                for k in 0..rows {
                    sum += self.entries[k * cols + i].conj() * self.entries[k * cols + j];
                }
                let target = if i == j { Complex64::ONE } else { Complex64::ZERO };
                worst = worst.max((sum - target).norm());
            }
        }
        worst
    }

    /// Conjugate transpose O†.
    pub fn adjoint(&self) -> Self {
        let rows = 1usize << self.out_qubits;
        let cols = 1usize << self.in_qubits;
        let mut entries = vec![Complex64::ZERO; rows * cols];
        for r in 0..rows {
            for c in 0..cols {
                entries[c * rows + r] = self.entries[r * cols + c].conj();
            }
        }
        Self {
            in_qubits: self.out_qubits,
            out_qubits: self.in_qubits,
            entries,
            unitary: self.unitary,
        }
    }

    /// Matrix product `self · other`.
    ///
    /// # Errors
    /// [`TensorError::DimensionMismatch`] unless `other`'s output register
    /// equals `self`'s input register.
    pub fn mul(&self, other: &Self) -> Result<Self, TensorError> {
        if self.in_qubits != other.out_qubits {
            return Err(TensorError::DimensionMismatch {
                expected: 1usize << self.in_qubits,
                got: 1usize << other.out_qubits,
            });
        }
        let rows = 1usize << self.out_qubits;
        let mid = 1usize << self.in_qubits;
        let cols = 1usize << other.in_qubits;
        let mut entries = vec![Complex64::ZERO; rows * cols];
        for r in 0..rows {
            for k in 0..mid {
                let lhs = self.entries[r * mid + k];
                if lhs == Complex64::ZERO {
                    continue;
                }
                for c in 0..cols {
                    entries[r * cols + c] += lhs * other.entries[k * cols + c];
                }
            }
        }
        Self::new(other.in_qubits, self.out_qubits, entries, false)
    }

    /// Apply to a pure state: |ψ'⟩ = O|ψ⟩.
    ///
    /// # Errors
    /// [`TensorError::DimensionMismatch`] unless the state lives on the input
    /// register.
    pub fn apply_state(&self, psi: &PureState) -> Result<PureState, TensorError> {
        if psi.num_qubits != self.in_qubits {
            return Err(TensorError::DimensionMismatch {
                expected: 1usize << self.in_qubits,
                got: psi.dim(),
            });
        }
        let rows = 1usize << self.out_qubits;
        let cols = 1usize << self.in_qubits;
        let mut amplitudes = vec![Complex64::ZERO; rows];
        for r in 0..rows {
            let mut sum = Complex64::ZERO;
            for c in 0..cols {
                sum += self.entries[r * cols + c] * psi.amplitudes[c];
            }
            amplitudes[r] = sum;
        }
        PureState::new(self.out_qubits, amplitudes)
    }

    /// Two-sided application O ρ O† to a density matrix.
    ///
    /// # Errors
    /// [`TensorError::DimensionMismatch`] unless ρ lives on the input
    /// register.
    pub fn sandwich(&self, rho: &DensityMatrix) -> Result<DensityMatrix, TensorError> {
        if rho.num_qubits != self.in_qubits {
            return Err(TensorError::DimensionMismatch {
                expected: 1usize << self.in_qubits,
                got: rho.dim(),
            });
        }
        let rows = 1usize << self.out_qubits;
        let cols = 1usize << self.in_qubits;
        // t = O ρ
        let mut t = vec![Complex64::ZERO; rows * cols];
        for r in 0..rows {
            for k in 0..cols {
                let lhs = self.entries[r * cols + k];
                if lhs == Complex64::ZERO {
                    continue;
                }
                for c in 0..cols {
                    t[r * cols + c] += lhs * rho.entries[k * cols + c];
                }
            }
        }
        // result = t O†
        let mut entries = vec![Complex64::ZERO; rows * rows];
        for r in 0..rows {
            for k in 0..cols {
                let lhs = t[r * cols + k];
                if lhs == Complex64::ZERO {
                    continue;
                }
                for c in 0..rows {
                    entries[r * rows + c] += lhs * self.entries[c * cols + k].conj();
                }
            }
        }
        Ok(DensityMatrix {
            num_qubits: self.out_qubits,
            entries,
        })
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }
}

/// Tensor product of two operators, left operand major.
///
/// # Errors
/// [`TensorError::CapacityExceeded`] when either combined register passes
/// [`REGISTER_CAP`].
pub fn tensor_product_operators(
    a: &LinearOperator,
    b: &LinearOperator,
) -> Result<LinearOperator, TensorError> {
    let in_qubits = a.in_qubits + b.in_qubits;
    let out_qubits = a.out_qubits + b.out_qubits;
    check_cap(in_qubits)?;
    check_cap(out_qubits)?;
    let (ar, ac) = (1usize << a.out_qubits, 1usize << a.in_qubits);
    let (br, bc) = (1usize << b.out_qubits, 1usize << b.in_qubits);
    let cols = ac * bc;
    let mut entries = vec![Complex64::ZERO; ar * br * cols];
    for ra in 0..ar {
        for ca in 0..ac {
            let lhs = a.entries[ra * ac + ca];
            if lhs == Complex64::ZERO {
                continue;
            }
            for rb in 0..br {
                for cb in 0..bc {
                    entries[(ra * br + rb) * cols + (ca * bc + cb)] =
                        lhs * b.entries[rb * bc + cb];
                }
            }
        }
    }
    LinearOperator::new(in_qubits, out_qubits, entries, a.unitary && b.unitary)
}

/// A density matrix: Hermitian 2^n × 2^n grid over a big-endian register.
///
/// Hermiticity is enforced at construction (within [`EXACT_TOL`]).
/// Positive-semidefiniteness is deliberately opt-in via
/// [`DensityMatrix::check_psd`] — the eigendecomposition is the only
/// expensive verification and most call sites construct matrices that are
/// PSD by construction.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    num_qubits: usize,
    entries: Vec<Complex64>,
}

impl DensityMatrix {
    /// Wrap a row-major 2^n × 2^n grid.
    ///
    /// # Errors
    /// Rejects wrong lengths, registers beyond the cap, non-finite entries,
    /// and Hermiticity violations beyond [`EXACT_TOL`].
    pub fn new(num_qubits: usize, entries: Vec<Complex64>) -> Result<Self, TensorError> {
        check_cap(num_qubits)?;
        let dim = 1usize << num_qubits;
        if entries.len() != dim * dim {
            return Err(TensorError::DimensionMismatch {
                expected: dim * dim,
                got: entries.len(),
            });
        }
        check_finite(&entries)?;
        let rho = Self {
            num_qubits,
            entries,
        };
        let deviation = rho.hermiticity_deviation();
        if deviation > EXACT_TOL {
            return Err(TensorError::NotHermitian { deviation });
        }
        Ok(rho)
    }

    pub(crate) fn from_raw(num_qubits: usize, entries: Vec<Complex64>) -> Self {
        Self {
            num_qubits,
            entries,
        }
    }

    /// Register width in qubits.
    pub fn num_qubits(&self) -> usize {
        self.num_qubits
    }

    /// Matrix dimension 2^n.
    pub fn dim(&self) -> usize {
        1usize << self.num_qubits
    }

    /// Row-major entries.
    pub fn entries(&self) -> &[Complex64] {
        &self.entries
    }

    /// Entry at (row, col).
    pub fn entry(&self, row: usize, col: usize) -> Complex64 {
        self.entries[row * self.dim() + col]
    }

    /// Trace Σ ρ_kk (complex; real within rounding for valid inputs).
    pub fn trace(&self) -> Complex64 {
        let dim = self.dim();
        (0..dim).map(|k| self.entries[k * dim + k]).sum()
    }

    /// max |ρ − ρ†| over all entries.
    pub fn hermiticity_deviation(&self) -> f64 {
        let dim = self.dim();
        let mut worst = 0.0f64;
        for r in 0..dim {
            for c in r..dim {
                let d = (self.entries[r * dim + c] - self.entries[c * dim + r].conj()).norm();
                worst = worst.max(d);
            }
        }
        worst
    }

    /// Opt-in positivity check: smallest eigenvalue must be ≥ `floor`.
    ///
    /// Runs a cyclic Jacobi eigendecomposition on the real-symmetric
    /// embedding of ρ; intended for small registers (the protocol checks
    /// 3-qubit outputs).
    ///
    /// # Errors
    /// [`TensorError::NotPositiveSemidefinite`] reporting the offending
    /// eigenvalue.
    pub fn check_psd(&self, floor: f64) -> Result<f64, TensorError> {
        let min_eigenvalue = eigen::min_eigenvalue_hermitian(&self.entries, self.dim());
        if min_eigenvalue < floor {
            return Err(TensorError::NotPositiveSemidefinite {
                min_eigenvalue,
                floor,
            });
        }
        Ok(min_eigenvalue)
    }

    /// Entrywise scale by a real factor.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            num_qubits: self.num_qubits,
            entries: self.entries.iter().map(|z| z * factor).collect(),
        }
    }

    /// Entrywise sum with another density-like grid on the same register.
    ///
    /// # Errors
    /// [`TensorError::DimensionMismatch`] on unequal registers.
    pub fn add(&self, other: &Self) -> Result<Self, TensorError> {
        if self.num_qubits != other.num_qubits {
            return Err(TensorError::DimensionMismatch {
                expected: self.dim(),
                got: other.dim(),
            });
        }
        let entries = self
            .entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| a + b)
            .collect();
        Ok(Self {
            num_qubits: self.num_qubits,
            entries,
        })
    }

    /// Largest entrywise deviation from `other`.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.entries
            .iter()
            .zip(&other.entries)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    /// Two-sided single-qubit application K ρ K† in one pass.
    ///
    /// `op` is row-major `[a, b, c, d]`. Each 2 × 2 block of ρ associated
    /// with the chosen qubit is congruence-transformed in place, which is
    /// what makes channel application linear in the matrix size instead of
    /// cubic.
    ///
    /// # Errors
    /// [`TensorError::IndexOutOfRange`] when `qubit` does not name a register
    /// position.
    pub fn sandwich_one_qubit(
        &self,
        op: &[Complex64; 4],
        qubit: usize,
    ) -> Result<Self, TensorError> {
        if qubit == 0 || qubit > self.num_qubits {
            return Err(TensorError::IndexOutOfRange {
                index: qubit,
                register: self.num_qubits,
            });
        }
        let dim = self.dim();
        let mask = 1usize << (self.num_qubits - qubit);
        let (a, b, c, d) = (op[0], op[1], op[2], op[3]);
        let (ac_, bc_, cc_, dc_) = (a.conj(), b.conj(), c.conj(), d.conj());
        let mut entries = self.entries.clone();
        for r in 0..dim {
            if r & mask != 0 {
                continue;
            }
            let r1 = r | mask;
            for col in 0..dim {
                if col & mask != 0 {
                    continue;
                }
                let c1 = col | mask;
                let x00 = entries[r * dim + col];
                let x01 = entries[r * dim + c1];
                let x10 = entries[r1 * dim + col];
                let x11 = entries[r1 * dim + c1];
                // left: t = K X
                let t00 = a * x00 + b * x10;
                let t01 = a * x01 + b * x11;
                let t10 = c * x00 + d * x10;
                let t11 = c * x01 + d * x11;
                // right: Y = t K†
                entries[r * dim + col] = t00 * ac_ + t01 * bc_;
                entries[r * dim + c1] = t00 * cc_ + t01 * dc_;
                entries[r1 * dim + col] = t10 * ac_ + t11 * bc_;
                entries[r1 * dim + c1] = t10 * cc_ + t11 * dc_;
            }
        }
        Ok(Self {
            num_qubits: self.num_qubits,
            entries,
        })
    }
}

impl PureState {
    /// The rank-one density matrix |ψ⟩⟨ψ| (alias used at call sites that
    /// read better with a verb).
    pub fn outer(&self) -> DensityMatrix {
        self.to_density()
    }
}

/// Embed an operator on selected qubits into a larger register, acting as
/// the identity elsewhere.
///
/// `targets` order is respected: the first listed label receives the
/// operator's most significant qubit.
///
/// # Errors
/// Selection must match the operator's (square) register, fit inside
/// `register_size`, and contain no duplicates.
pub fn embed_operator(
    op: &LinearOperator,
    targets: &QubitSelection,
    register_size: usize,
) -> Result<LinearOperator, TensorError> {
    check_cap(register_size)?;
    if op.in_qubits != op.out_qubits {
        return Err(TensorError::DimensionMismatch {
            expected: 1usize << op.out_qubits,
            got: 1usize << op.in_qubits,
        });
    }
    if targets.len() != op.in_qubits {
        return Err(TensorError::DimensionMismatch {
            expected: op.in_qubits,
            got: targets.len(),
        });
    }
    targets.check_register(register_size)?;

    let dim = 1usize << register_size;
    let m = targets.len();
    let op_dim = 1usize << m;
    // Big-endian bit positions (shift amounts) of each target within the
    // full register; targets[0] maps to the operator's most significant bit.
    let shifts: Vec<usize> = targets
        .indices()
        .iter()
        .map(|&q| register_size - q)
        .collect();
    let rest_mask: usize = {
        let mut mask = dim - 1;
        for &s in &shifts {
            mask &= !(1usize << s);
        }
        mask
    };

    let extract = |k: usize| -> usize {
        let mut idx = 0usize;
        for (pos, &s) in shifts.iter().enumerate() {
            idx |= ((k >> s) & 1) << (m - 1 - pos);
        }
        idx
    };

    let mut entries = vec![Complex64::ZERO; dim * dim];
    for row in 0..dim {
        let or = extract(row);
        let row_rest = row & rest_mask;
        // Only columns with identical non-target bits are nonzero.
        for oc in 0..op_dim {
            let v = op.entries[or * op_dim + oc];
            if v == Complex64::ZERO {
                continue;
            }
            let mut col = row_rest;
            for (pos, &s) in shifts.iter().enumerate() {
                col |= ((oc >> (m - 1 - pos)) & 1) << s;
            }
            entries[row * dim + col] = v;
        }
    }
    LinearOperator::new(register_size, register_size, entries, op.unitary)
}

/// Partial trace onto the `keep` selection, tracing out every other qubit.
///
/// The kept qubits are reordered so `keep[0]` becomes the most significant
/// bit of the result. The trace is preserved exactly.
///
/// # Errors
/// Selection must be nonempty (guaranteed by [`QubitSelection`]), fit the
/// register, and contain no duplicates.
pub fn partial_trace(
    rho: &DensityMatrix,
    keep: &QubitSelection,
) -> Result<DensityMatrix, TensorError> {
    keep.check_register(rho.num_qubits)?;
    let n = rho.num_qubits;
    let m = keep.len();
    let dim = rho.dim();
    let keep_shifts: Vec<usize> = keep.indices().iter().map(|&q| n - q).collect();
    let env_shifts: Vec<usize> = (1..=n)
        .filter(|q| !keep.indices().contains(q))
        .map(|q| n - q)
        .collect();

    let compose = |kept: usize, env: usize| -> usize {
        let mut k = 0usize;
        for (pos, &s) in keep_shifts.iter().enumerate() {
            k |= ((kept >> (m - 1 - pos)) & 1) << s;
        }
        for (pos, &s) in env_shifts.iter().enumerate() {
            k |= ((env >> (env_shifts.len() - 1 - pos)) & 1) << s;
        }
        k
    };

    let out_dim = 1usize << m;
    let env_dim = 1usize << env_shifts.len();
    let mut entries = vec![Complex64::ZERO; out_dim * out_dim];
    for a in 0..out_dim {
        for b in 0..out_dim {
            let mut sum = Complex64::ZERO;
            for e in 0..env_dim {
                sum += rho.entries[compose(a, e) * dim + compose(b, e)];
            }
            entries[a * out_dim + b] = sum;
        }
    }
    Ok(DensityMatrix {
        num_qubits: m,
        entries,
    })
}

/// Apply a Kraus map ρ → Σ K_i ρ K_i† with full-register terms.
///
/// When `check_complete` is set the terms are required to satisfy
/// Σ K†K = I within [`EXACT_TOL`] before anything is applied, which is what
/// guarantees the result keeps unit trace.
///
/// # Errors
/// [`TensorError::IncompleteKraus`] on a completeness violation;
/// [`TensorError::DimensionMismatch`] when a term does not act on ρ's
/// register.
pub fn apply_kraus(
    rho: &DensityMatrix,
    terms: &[LinearOperator],
    check_complete: bool,
) -> Result<DensityMatrix, TensorError> {
    if check_complete {
        let deviation = kraus_completeness_deviation(terms, rho.num_qubits)?;
        if deviation > EXACT_TOL {
            return Err(TensorError::IncompleteKraus { deviation });
        }
    }
    let dim = rho.dim();
    let mut acc = DensityMatrix {
        num_qubits: rho.num_qubits,
        entries: vec![Complex64::ZERO; dim * dim],
    };
    for term in terms {
        let piece = term.sandwich(rho)?;
        acc = acc.add(&piece)?;
    }
    Ok(acc)
}

/// max |Σ K†K − I| for a set of square operators on an n-qubit register.
///
/// # Errors
/// [`TensorError::DimensionMismatch`] when a term acts on the wrong register.
pub fn kraus_completeness_deviation(
    terms: &[LinearOperator],
    num_qubits: usize,
) -> Result<f64, TensorError> {
    let dim = 1usize << num_qubits;
    let mut sum = vec![Complex64::ZERO; dim * dim];
    for term in terms {
        if term.in_qubits != num_qubits || term.out_qubits != num_qubits {
            return Err(TensorError::DimensionMismatch {
                expected: dim,
                got: 1usize << term.in_qubits,
            });
        }
        for i in 0..dim {
            for j in 0..dim {
                let mut s = Complex64::ZERO;
                for k in 0..dim {
                    s += term.entries[k * dim + i].conj() * term.entries[k * dim + j];
                }
                sum[i * dim + j] += s;
            }
        }
    }
    let mut worst = 0.0f64;
    for i in 0..dim {
        for j in 0..dim {
            let target = if i == j { Complex64::ONE } else { Complex64::ZERO };
            worst = worst.max((sum[i * dim + j] - target).norm());
        }
    }
    Ok(worst)
}

/// Fidelity ⟨ψ|ρ|ψ⟩ between a normalized pure state and a (possibly
/// sub-normalized) density matrix.
///
/// # Errors
/// Dimension mismatch, a non-normalized ψ, an imaginary part beyond
/// [`EXACT_TOL`], or a value outside [−1e-12, 1 + 1e-12].
pub fn fidelity_pure_vs_mixed(psi: &PureState, rho: &DensityMatrix) -> Result<f64, TensorError> {
    if psi.num_qubits != rho.num_qubits {
        return Err(TensorError::DimensionMismatch {
            expected: rho.dim(),
            got: psi.dim(),
        });
    }
    psi.check_normalized(EXACT_TOL)?;
    let dim = rho.dim();
    let mut value = Complex64::ZERO;
    for r in 0..dim {
        let mut row = Complex64::ZERO;
        for c in 0..dim {
            row += rho.entries[r * dim + c] * psi.amplitudes[c];
        }
        value += psi.amplitudes[r].conj() * row;
    }
    if value.im.abs() > EXACT_TOL {
        return Err(TensorError::FidelityNotReal { imag: value.im });
    }
    if value.re < -EXACT_TOL || value.re > 1.0 + EXACT_TOL {
        return Err(TensorError::FidelityOutOfRange { value: value.re });
    }
    Ok(value.re)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn ghz3() -> PureState {
        let mut amps = vec![Complex64::ZERO; 8];
        let w = 1.0 / 2f64.sqrt();
        amps[0] = c(w, 0.0);
        amps[7] = c(w, 0.0);
        PureState::new(3, amps).unwrap()
    }

    #[test]
    fn basis_tensor_product_is_concatenation() {
        let zero = PureState::basis(1, 0);
        let one = PureState::basis(1, 1);
        let zo = tensor_product_states(&zero, &one).unwrap();
        assert_eq!(zo.num_qubits(), 2);
        assert_eq!(zo.amp(0b01), Complex64::ONE);
        assert_eq!(zo.amplitudes().iter().filter(|z| **z != Complex64::ZERO).count(), 1);
    }

    #[test]
    fn uniform_tensor_uniform_is_uniform() {
        let w = 1.0 / 2f64.sqrt();
        let plus = PureState::new(1, vec![c(w, 0.0), c(w, 0.0)]).unwrap();
        let pp = tensor_product_states(&plus, &plus).unwrap();
        for k in 0..4 {
            assert!((pp.amp(k) - c(0.5, 0.0)).norm() < EXACT_TOL);
        }
    }

    #[test]
    fn triple_ghz_has_eight_supported_amplitudes() {
        let g = ghz3();
        let gg = tensor_product_states(&g, &g).unwrap();
        let ggg = tensor_product_states(&gg, &g).unwrap();
        assert_eq!(ggg.num_qubits(), 9);
        let expected = 1.0 / (2.0 * 2f64.sqrt());
        let support: Vec<usize> = (0..512)
            .filter(|&k| ggg.amp(k) != Complex64::ZERO)
            .collect();
        assert_eq!(support.len(), 8);
        for k in support {
            assert!((ggg.amp(k).re - expected).abs() < EXACT_TOL);
            assert_eq!(ggg.amp(k).im, 0.0);
        }
    }

    #[test]
    fn tensor_product_respects_register_cap() {
        let g = ghz3();
        let mut state = g.clone();
        state = tensor_product_states(&state, &g).unwrap(); // 6
        state = tensor_product_states(&state, &g).unwrap(); // 9
        state = tensor_product_states(&state, &g).unwrap(); // 12
        let err = tensor_product_states(&state, &g).unwrap_err();
        assert!(matches!(err, TensorError::CapacityExceeded { qubits: 15, cap: 12 }));
    }

    #[test]
    fn non_finite_amplitudes_rejected() {
        let err = PureState::new(1, vec![c(f64::NAN, 0.0), Complex64::ZERO]).unwrap_err();
        assert!(matches!(err, TensorError::NonFinite { index: 0 }));
    }

    #[test]
    fn embed_on_whole_register_is_identity_embedding() {
        let sz = LinearOperator::new(1, 1, vec![Complex64::ONE, Complex64::ZERO, Complex64::ZERO, -Complex64::ONE], true).unwrap();
        let sel = QubitSelection::new(vec![1]).unwrap();
        let embedded = embed_operator(&sz, &sel, 1).unwrap();
        assert!(embedded.max_abs_diff(&sz) < EXACT_TOL);
    }

    #[test]
    fn embed_sigma_x_on_second_qubit_flips_low_bit() {
        let sx = LinearOperator::new(1, 1, vec![Complex64::ZERO, Complex64::ONE, Complex64::ONE, Complex64::ZERO], true).unwrap();
        let sel = QubitSelection::new(vec![2]).unwrap();
        let embedded = embed_operator(&sx, &sel, 2).unwrap();
        let out = embedded.apply_state(&PureState::basis(2, 0b00)).unwrap();
        assert!((out.amp(0b01) - Complex64::ONE).norm() < EXACT_TOL);
    }

    #[test]
    fn embed_full_damping_sends_10_to_00() {
        // Single-qubit damping at full strength maps |1⟩ to |0⟩.
        let e1 = LinearOperator::new(
            1,
            1,
            vec![Complex64::ZERO, Complex64::ONE, Complex64::ZERO, Complex64::ZERO],
            false,
        )
        .unwrap();
        let sel = QubitSelection::new(vec![1]).unwrap();
        let embedded = embed_operator(&e1, &sel, 2).unwrap();
        let out = embedded.apply_state(&PureState::basis(2, 0b10)).unwrap();
        assert!((out.amp(0b00) - Complex64::ONE).norm() < EXACT_TOL);
        assert!(out.amplitudes().iter().skip(1).all(|z| z.norm() < EXACT_TOL));
    }

    #[test]
    fn embed_respects_target_order() {
        // A CNOT-like asymmetric operator embedded as (2,1) must differ from (1,2).
        let cnot = LinearOperator::new(
            2,
            2,
            vec![
                Complex64::ONE, Complex64::ZERO, Complex64::ZERO, Complex64::ZERO,
                Complex64::ZERO, Complex64::ONE, Complex64::ZERO, Complex64::ZERO,
                Complex64::ZERO, Complex64::ZERO, Complex64::ZERO, Complex64::ONE,
                Complex64::ZERO, Complex64::ZERO, Complex64::ONE, Complex64::ZERO,
            ],
            true,
        )
        .unwrap();
        let fwd = embed_operator(&cnot, &QubitSelection::new(vec![1, 2]).unwrap(), 2).unwrap();
        let rev = embed_operator(&cnot, &QubitSelection::new(vec![2, 1]).unwrap(), 2).unwrap();
        assert!(fwd.max_abs_diff(&cnot) < EXACT_TOL);
        // Reversed: control is qubit 2 (low bit), so |01⟩ → |11⟩.
        let out = rev.apply_state(&PureState::basis(2, 0b01)).unwrap();
        assert!((out.amp(0b11) - Complex64::ONE).norm() < EXACT_TOL);
    }

    #[test]
    fn partial_trace_of_product_state_keeps_first_qubit() {
        let rho = PureState::basis(2, 0b00).to_density();
        let keep = QubitSelection::new(vec![1]).unwrap();
        let reduced = partial_trace(&rho, &keep).unwrap();
        assert_eq!(reduced.num_qubits(), 1);
        assert!((reduced.entry(0, 0) - Complex64::ONE).norm() < EXACT_TOL);
    }

    #[test]
    fn partial_trace_of_bell_state_is_maximally_mixed() {
        let w = 1.0 / 2f64.sqrt();
        let mut amps = vec![Complex64::ZERO; 4];
        amps[0b00] = c(w, 0.0);
        amps[0b11] = c(w, 0.0);
        let bell = PureState::new(2, amps).unwrap().to_density();
        for q in 1..=2 {
            let keep = QubitSelection::new(vec![q]).unwrap();
            let reduced = partial_trace(&bell, &keep).unwrap();
            assert!((reduced.entry(0, 0) - c(0.5, 0.0)).norm() < EXACT_TOL);
            assert!((reduced.entry(1, 1) - c(0.5, 0.0)).norm() < EXACT_TOL);
            assert!(reduced.entry(0, 1).norm() < EXACT_TOL);
        }
    }

    #[test]
    fn partial_trace_reorders_kept_qubits_as_listed() {
        let rho = PureState::basis(2, 0b01).to_density();
        let swapped = partial_trace(&rho, &QubitSelection::new(vec![2, 1]).unwrap()).unwrap();
        // Kept order (2,1): qubit 2 (=1) becomes the high bit → index 0b10.
        assert!((swapped.entry(0b10, 0b10) - Complex64::ONE).norm() < EXACT_TOL);
    }

    #[test]
    fn identity_kraus_set_leaves_state_unchanged() {
        let rho = ghz3().to_density();
        let out = apply_kraus(&rho, &[LinearOperator::identity(3)], true).unwrap();
        assert!(out.max_abs_diff(&rho) < EXACT_TOL);
    }

    #[test]
    fn full_amplitude_damping_resets_excited_qubit() {
        let e0 = LinearOperator::new(
            1, 1,
            vec![Complex64::ONE, Complex64::ZERO, Complex64::ZERO, Complex64::ZERO],
            false,
        ).unwrap();
        let e1 = LinearOperator::new(
            1, 1,
            vec![Complex64::ZERO, Complex64::ONE, Complex64::ZERO, Complex64::ZERO],
            false,
        ).unwrap();
        let rho = PureState::basis(1, 1).to_density();
        let out = apply_kraus(&rho, &[e0, e1], true).unwrap();
        assert!((out.entry(0, 0) - Complex64::ONE).norm() < EXACT_TOL);
        assert!(out.entry(1, 1).norm() < EXACT_TOL);
    }

    #[test]
    fn incomplete_kraus_set_rejected_when_flagged() {
        let half = LinearOperator::new(
            1, 1,
            vec![c(0.5, 0.0), Complex64::ZERO, Complex64::ZERO, c(0.5, 0.0)],
            false,
        ).unwrap();
        let rho = PureState::basis(1, 0).to_density();
        let err = apply_kraus(&rho, &[half], true).unwrap_err();
        assert!(matches!(err, TensorError::IncompleteKraus { .. }));
    }

    #[test]
    fn fidelity_of_state_with_itself_is_one() {
        let g = ghz3();
        let f = fidelity_pure_vs_mixed(&g, &g.to_density()).unwrap();
        assert!((f - 1.0).abs() < EXACT_TOL);
    }

    #[test]
    fn fidelity_of_orthogonal_states_is_zero() {
        let zero = PureState::basis(1, 0);
        let one = PureState::basis(1, 1).to_density();
        let f = fidelity_pure_vs_mixed(&zero, &one).unwrap();
        assert!(f.abs() < EXACT_TOL);
    }

    #[test]
    fn fidelity_rejects_unnormalized_pure_state() {
        let psi = PureState::new(1, vec![c(2.0, 0.0), Complex64::ZERO]).unwrap();
        let rho = PureState::basis(1, 0).to_density();
        assert!(matches!(
            fidelity_pure_vs_mixed(&psi, &rho),
            Err(TensorError::NotNormalized { .. })
        ));
    }

    #[test]
    fn sandwich_one_qubit_matches_embedded_operator() {
        let op = [c(0.3, 0.1), c(-0.2, 0.4), c(0.7, 0.0), c(0.1, -0.6)];
        let g = ghz3();
        let rho = g.to_density();
        for qubit in 1..=3 {
            let fast = rho.sandwich_one_qubit(&op, qubit).unwrap();
            let full = embed_operator(
                &LinearOperator::new(1, 1, op.to_vec(), false).unwrap(),
                &QubitSelection::new(vec![qubit]).unwrap(),
                3,
            )
            .unwrap();
            let slow = full.sandwich(&rho).unwrap();
            assert!(
                fast.max_abs_diff(&slow) < EXACT_TOL,
                "fast path diverged on qubit {qubit}"
            );
        }
    }

    #[test]
    fn apply_one_qubit_matches_embedded_operator_on_states() {
        let op = [c(0.3, 0.1), c(-0.2, 0.4), c(0.7, 0.0), c(0.1, -0.6)];
        let g = ghz3();
        for qubit in 1..=3 {
            let fast = g.apply_one_qubit(&op, qubit).unwrap();
            let full = embed_operator(
                &LinearOperator::new(1, 1, op.to_vec(), false).unwrap(),
                &QubitSelection::new(vec![qubit]).unwrap(),
                3,
            )
            .unwrap();
            let slow = full.apply_state(&g).unwrap();
            assert!(fast.max_abs_diff(&slow) < EXACT_TOL);
        }
    }

    #[test]
    fn psd_check_accepts_valid_state_and_rejects_negative_matrix() {
        let g = ghz3();
        let min = g.to_density().check_psd(PSD_FLOOR).unwrap();
        assert!(min > PSD_FLOOR);

        // diag(1, -1) is Hermitian but indefinite.
        let bad = DensityMatrix::new(
            1,
            vec![Complex64::ONE, Complex64::ZERO, Complex64::ZERO, -Complex64::ONE],
        )
        .unwrap();
        assert!(matches!(
            bad.check_psd(PSD_FLOOR),
            Err(TensorError::NotPositiveSemidefinite { .. })
        ));
    }

    #[test]
    fn non_hermitian_density_matrix_rejected() {
        let err = DensityMatrix::new(
            1,
            vec![Complex64::ONE, Complex64::ONE, Complex64::ZERO, Complex64::ZERO],
        )
        .unwrap_err();
        assert!(matches!(err, TensorError::NotHermitian { .. }));
    }

    #[test]
    fn unitary_flag_is_verified() {
        let err = LinearOperator::new(
            1,
            1,
            vec![Complex64::ONE, Complex64::ONE, Complex64::ZERO, Complex64::ONE],
            true,
        )
        .unwrap_err();
        assert!(matches!(err, TensorError::NotUnitary { .. }));
    }

    #[test]
    fn selection_rejects_duplicates_and_empty() {
        assert!(matches!(
            QubitSelection::new(vec![]),
            Err(TensorError::EmptySelection)
        ));
        assert!(matches!(
            QubitSelection::new(vec![1, 1]),
            Err(TensorError::DuplicateIndex { index: 1 })
        ));
    }
}
