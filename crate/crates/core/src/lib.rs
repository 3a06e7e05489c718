//! System model and waveform design for symbol-level-precoded
//! faster-than-Nyquist dual-function radar-communication transmitters.
//!
//! The crate is `no_std` with `alloc`; the `std` feature (on by default)
//! only adds wall-clock timing.

#![cfg_attr(not(feature = "std"), no_std)]

extern crate alloc;
#[cfg(feature = "std")]
extern crate std;

pub mod channel;
pub mod ci;
pub mod dims;
pub mod error;
pub mod linalg;
pub mod pulse;
pub mod sensing;
pub mod solver;

pub use nalgebra;
pub use num_complex;

pub use channel::{
    assemble_effective, build_window, sample_comm_channel, sample_trm, whiten, CommChannel, EffectiveChannel,
    SensingPrior, WindowMode, Whitening,
};
pub use ci::{build_ci_system, build_energy_form, ci_margins, min_margin, CISystem, EnergyForm, EnergyMode, SymbolBlock};
pub use dims::Dimensions;
pub use error::{Error, Result};
pub use pulse::{PulseSpec, PulseTables};
pub use sensing::{GradientForm, MmseValue, SensingLift};
pub use solver::{
    Algorithm, DesignOptions, DesignProblem, IterationRecord, QcqpProblem, QpProblem, Solution, SolveReport, Status,
    Subsolver,
};

/// Monotonic timer; reads zero without `std`.
pub(crate) struct Stopwatch {
    #[cfg(feature = "std")]
    start: std::time::Instant,
}

impl Stopwatch {
    pub(crate) fn start() -> Self {
        Self {
            #[cfg(feature = "std")]
            start: std::time::Instant::now(),
        }
    }

    pub(crate) fn elapsed(&self) -> f64 {
        #[cfg(feature = "std")]
        {
            self.start.elapsed().as_secs_f64()
        }
        #[cfg(not(feature = "std"))]
        {
            0.0
        }
    }
}
