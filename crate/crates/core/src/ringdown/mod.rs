//! Free-decay measurement pipeline: synthetic signals, per-block spectral
//! amplitudes and the exponential decay fit.

pub mod fit;
pub mod io;
pub mod spectrum;
pub mod synth;

pub use fit::{analyze_ringdown, fit_decay, AmplitudeRow, AmplitudeSeries, DecayFit};
pub use spectrum::{block_amplitude, BlockAmplitude, LOW_SNR_THRESHOLD};
pub use synth::{synthesize_ringdown, Block, BlockSchedule, Mode, RingdownParams};
