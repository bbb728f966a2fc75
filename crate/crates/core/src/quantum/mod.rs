//! Quantum simulation: a sparse statevector engine plus an exact EPR-pair network.

pub mod density;
pub mod epr;
pub mod state;

pub use density::{trace_distance, trace_distance_with_bottom, DensityMatrix};
pub use epr::{prep_epr, EprNetwork, MeasurementRecord, PairState, Role};
pub use state::{amplitude_maps_close, Basis, Bb84Descriptor, Register, SparseState, DENSE_QUBIT_LIMIT, NORM_TOLERANCE, PRUNE_THRESHOLD};
