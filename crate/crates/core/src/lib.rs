//! Joint remote preparation of three-qubit states over three shared
//! GHZ-type resources, with dense-register linear algebra, correlated Kraus
//! noise, and fidelity analysis.
//!
//! The crate is organized in four layers:
//!
//! * [`tensor`] — dense states, operators, and density matrices over
//!   big-endian qubit registers (tensor products, embeddings, partial
//!   trace, Kraus maps, fidelity).
//! * [`protocol`] — the two-party preparation protocol itself: target and
//!   resource construction, the signed-permutation measurement bases, joint
//!   measurement statistics, and Pauli recovery analysis.
//! * [`noise`] — amplitude-damping, phase-damping, and depolarizing noise
//!   applied in a trio-correlated fashion to the senders' qubits, plus the
//!   post-selected output map and closed-form fidelity expressions.
//! * [`sampling`] — seeded random target generation for reproducible
//!   verification sweeps.

pub mod noise;
pub mod protocol;
pub mod sampling;
pub mod tensor;

pub use noise::{
    apply_trio_correlated, compare, eta_grid, fidelity_analytic_printed, fidelity_numeric,
    fidelity_numeric_given, kraus_set, noisy_resource_state, postselect_output, FidelityPoint,
    FidelityReport, KrausSet, NoiseError, NoiseKind, NoiseModelSpec, PostSelectedOutput,
    FIDELITY_AGREEMENT_TOL,
};
pub use protocol::{
    apply_special_case, build_bases, build_bases_from_table, build_resource, build_target,
    compose_trio_index, correction_for_r1, expansion_verify, find_correction, joint_measure,
    recovery_fidelity, signed_permutation_table, special_case_constraints, split_trio_index,
    success_probability, EntangledResource, MeasurementBasisPair, OutcomeRecord, PauliOp,
    PauliString, ProtocolError, SignedPermutationRow, SuccessMode, TargetState, CONSTRAINT_TOL,
    CORRECTION_TOL,
};
pub use sampling::{random_phases, random_target, seeded_rng};
pub use tensor::{
    apply_kraus, bit_of, embed_operator, fidelity_pure_vs_mixed,
    kraus_completeness_deviation, partial_trace, tensor_product_operators,
    tensor_product_states, ComplexScalar, DensityMatrix, LinearOperator, PureState,
    QubitSelection, TensorError, EXACT_TOL, PSD_FLOOR, REGISTER_CAP,
};
