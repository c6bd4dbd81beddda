//! Ambient backscatter communication over OFDM carriers.
//!
//! A backscatter device (BD) reflects a legacy OFDM signal and modulates one
//! bit per OFDM symbol onto the reflection. This crate models the slot
//! (`channel`, `ofdm`, `bd`), detects the BD bits at a reader that knows only
//! its own direct channel (`receiver`), evaluates the analytic BER
//! (`analysis`) and runs seeded Monte Carlo sweeps (`montecarlo`).
//!
//! ```
//! use ambc::montecarlo::{Harness, Scheme, SimParams};
//!
//! let params = SimParams { scheme: Scheme::Camf, snr_db: 4.0, slots: 20, seed: 1, ..SimParams::default() };
//! let outcome = Harness::new(1)?.run_point(&params, 0)?;
//! assert_eq!(outcome.total_bits, 20 * 99);
//! # Ok::<(), ambc::Error>(())
//! ```

pub mod analysis;
pub mod bd;
pub mod channel;
mod error;
pub mod montecarlo;
pub mod ofdm;
pub mod receiver;

pub use error::{Error, Result};
pub use num_complex::Complex64;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/system-model.md")]
    mod system_model {}
    #[doc = include_str!("../../../book/src/em-receiver.md")]
    mod em_receiver {}
    #[doc = include_str!("../../../book/src/ber-analysis.md")]
    mod ber_analysis {}
    #[doc = include_str!("../../../book/src/monte-carlo.md")]
    mod monte_carlo {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
