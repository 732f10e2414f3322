//! Simulated social-network upload pipeline.

mod cancel;
mod profile;
mod sim;

pub use cancel::{
    cancellation_capacity, cancellation_experiment, inverse_quantization_table, measure_ber,
    CancellationArithmetic, CancellationReport, RealQuantTable,
};
pub use profile::{ProfileError, SiteProfile, FACEBOOK_LUMA_QUANT};
pub use sim::recompress;
