//! Exact counting bounds and dense oracles for translation-invariant
//! states on a ring of qudits.
//!
//! The crate is organized around a small set of closed-form dimension
//! counts (`combinatorics`), a dense exact-diagonalization substrate used
//! to cross-check them (`statevector`), translation-invariant MPS span
//! estimation (`timps`), brickwork circuits with light-cone cutting
//! (`circuits`), and shifted-operator correlation bounds
//! (`correlations`).

pub mod circuits;
pub mod combinatorics;
pub mod correlations;
pub mod error;
pub mod statevector;
pub mod timps;

pub use circuits::{
    apply_circuit, block_factorization, circuit_from_json, circuit_to_json, cut_state,
    gate_mpo_decompose, is_translation_invariant, lightcone_subcircuit, sample_product_state,
    sample_ti_brickwork, ti_circuit_span_rank, BlockFactorization, BrickworkCircuit, GateMpoPair,
    TwoSiteGate,
};
pub use combinatorics::{
    block_decomposition, gamma_exponent, hpoly_dim, min_depth_for_overlap, min_time_estimate,
    mps_dim_bound,
    necklace_count, overlap_bound_exact, overlap_bound_log, sre_dim_bound, BigCount, DepthModel,
    LogBound,
};
pub use correlations::{
    connected_correlation, cycle_bound, expectation_in_sector, near_global_shift_operator,
    shifted_trace, shifted_trace_dense, ConnectedCorrelation, LocalOperator,
};
pub use error::{Error, Result};
pub use statevector::{
    momentum_projector, rho_ti, tails_inequality_check, trace_distance, translate,
    DensityOperator, RingSpec, StateVector,
};
pub use timps::{contract_timps, default_timps_samples, timps_span_rank, SpanEstimate, TimpsTensor};
