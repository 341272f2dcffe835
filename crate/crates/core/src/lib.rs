//! Quasi-Bell entangled coherent states with thermal noise on one mode.
//!
//! States live in a truncated two-mode Fock basis indexed `n1 * (n2_max + 1) + n2`.
//! The crate builds pure and noisy density matrices, bounds the surviving
//! entanglement through a restricted fully entangled fraction, and computes
//! binary minimum-error discrimination probabilities.

pub mod commands;
pub mod discrimination;
pub mod entanglement;
pub mod error;
pub mod fock;
pub mod numerics;
pub mod par;
pub mod quasi_bell;
pub mod sweep;
pub mod thermal;

pub use discrimination::{
    error_sweep, helstrom_error, minimax_error_symmetric, pure_minimax_error, BinaryEnsemble,
    ErrorPoint, ErrorProbability, StatePair, TruncationPolicy,
};
pub use entanglement::{
    entanglement_threshold_scan, eof_lower_bound, fef_closed_form, maximize_fef, EntanglementBound,
    EntanglementScan, FefSearch,
};
pub use error::{QbellError, Result};
pub use fock::{g1, g23, FockIndex, Mode, ThermalParameter, TruncationSpec};
pub use par::Execution;
pub use quasi_bell::{
    build_pure_state, gram_matrix, mean_photon_number, numeric_gram_matrix, GramMatrix,
    PureStateVector, QuasiBellLabel,
};
pub use sweep::SweepResult;
pub use thermal::{
    apply_mode2_pi_rotation, build_thermal_state, photon_number_distribution, DensityMatrix,
    PhotonNumberDistribution,
};
