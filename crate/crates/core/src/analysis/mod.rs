//! Metrics on heralded states and trial ensembles: Bell fidelities,
//! logarithmic negativity, ebit rates, simulated tomography, attempt-binned
//! decay curves, curve fits and plot-ready tables.
//!
//! Heralded memory states are compared with Bell states after undoing the
//! memory frame. States heralded by different detectors are rotated by a
//! local Z so that every aligned state targets `|Psi+>`; averaging aligned
//! states gives the both-signature average.

mod binning;
pub mod fit;
mod metrics;
mod rates;
mod table;
mod tomography;

pub use binning::{bin_by_attempts, Bin, BinStats, BinnedCurve};
pub use metrics::{
    aligned_memory_state, average_state, bell_fidelity_from_paulis, log_negativity,
    mean_heralded_state, partial_transpose, BellTarget, Correlators,
};
pub use rates::{barrett_kok_rate, barrett_kok_success_probability, ebit_rate, Bootstrap, RateEstimate};
pub use table::{Cell, Provenance, Table};
pub use tomography::{correlator_stderr, tomography_sample, Estimate, Shots, TomographyEstimate};
