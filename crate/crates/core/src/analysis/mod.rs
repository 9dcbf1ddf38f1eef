//! Trace post-processing: windowed throughput, clock-edge spectra and the
//! GPRM resource estimate.

mod resources;
mod spectrum;
mod throughput;

pub use resources::{resource_estimate, GprmShape, PortShape, ResourceEstimate, DESTINATION_NOTE};
pub use spectrum::{clock_spectrum, peak_reduction, Spectrum};
pub use throughput::{throughput, ThroughputPoint, ThroughputSeries};

use crate::model::ApbId;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum AnalysisError {
    #[error("no APB {0} in trace")]
    UnknownSink(ApbId),
    #[error("throughput window must be positive")]
    ZeroWindow,
    #[error("edge train shorter than one bin")]
    InsufficientLength,
    #[error("nfft {nfft} must be a power of two holding all {needed} occupied bins")]
    InvalidNfft { nfft: usize, needed: usize },
    #[error("bin width must be positive")]
    InvalidBin,
    #[error("band {lo}..{hi} Hz is empty or outside 0..{nyquist} Hz")]
    BandOutOfRange { lo: f64, hi: f64, nyquist: f64 },
    #[error("spectra differ in resolution or length")]
    MismatchedSpectra,
    #[error("unsupported GPRM shape: {0}")]
    UnsupportedShape(String),
}
