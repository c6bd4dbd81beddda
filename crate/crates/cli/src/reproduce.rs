//! The bundled reference experiments.
//!
//! Every sweep runs CAMF and CUIF with the EM receiver at `L = 32, P = 4,
//! M = 100, α² = 0.2, N_iter = 5` unless it sweeps that parameter:
//!
//! | sweep  | values                      | fixed SNR |
//! |--------|-----------------------------|-----------|
//! | snr_db | 0, 1, …, 8                  |           |
//! | niter  | 1, 2, 3, 5, 10, 20          | 0 dB      |
//! | niter  | 1, 2, 3, 5, 10, 20          | 6 dB      |
//! | alpha2 | 0.05, 0.1, 0.2, 0.3, 0.4    | 6 dB      |
//! | L      | 16, 32, 64, 128             | 6 dB      |
//! | P      | 1, 2, 4, 8                  | 6 dB      |

use ambc::montecarlo::{Axis, Scheme, SimParams};

use crate::args::{default_values, SweepSpec};

/// Slots per point unless overridden with `reproduce --slots`.
pub const REPRODUCE_SLOTS: u64 = 2000;

pub fn reproduce_sweeps(seed: u64, slots: u64) -> Vec<SweepSpec> {
    let base = SimParams {
        slots,
        seed,
        ..SimParams::default()
    };
    let at = |axis: Axis, snr_db: f64| SweepSpec {
        schemes: vec![Scheme::Camf, Scheme::Cuif],
        axis,
        values: default_values(axis),
        base: SimParams {
            snr_db,
            ..base.clone()
        },
    };
    vec![
        at(Axis::SnrDb, 6.0),
        at(Axis::NIter, 0.0),
        at(Axis::NIter, 6.0),
        at(Axis::AlphaSq, 6.0),
        at(Axis::Subcarriers, 6.0),
        at(Axis::Taps, 6.0),
    ]
}
