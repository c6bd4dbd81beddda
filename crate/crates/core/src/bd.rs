//! The backscatter device: bits, transmitter filter and the reflected
//! component seen at the reader.
//!
//! The BD sends one bit per OFDM symbol. With the impulse filter (CUIF) its
//! frequency-domain waveform is `b_m = 1·s_m`. With the matched filter (CAMF)
//! it is `b_m = s_m·κ·g*`, where `g` holds the subcarrier gains of the
//! legacy-to-BD link and `κ = √L/‖g‖`. Both waveforms have `‖b_m‖² = L`.
//!
//! After modulation in the air the reader receives `a_m = β·G·X_m·b_m`, which
//! for CAMF collapses to `β̃·V·x_m·s_m` with `V = diag(|G_l|²)`: every
//! subcarrier's backscatter gain shares the phase of `β̃`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::Rng;

use crate::channel::{ChannelRealization, FreqResponse};
use crate::error::{Error, Result};

/// BD transmitter filter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Filter {
    /// Channel-unaware impulse filter.
    Cuif,
    /// Channel-aware matched filter.
    Camf,
}

impl fmt::Display for Filter {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Filter::Cuif => "CUIF",
            Filter::Camf => "CAMF",
        })
    }
}

impl FromStr for Filter {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "CUIF" => Ok(Filter::Cuif),
            "CAMF" => Ok(Filter::Camf),
            _ => Err(Error::InvalidParam {
                name: "filter",
                reason: format!("unknown BD filter `{s}`"),
            }),
        }
    }
}

/// Antipodal BD bits for one slot.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BdBits {
    s: Vec<i8>,
    pilot_first: bool,
}

impl BdBits {
    pub fn new(s: Vec<i8>, pilot_first: bool) -> Result<Self> {
        if let Some(&bad) = s.iter().find(|&&b| b != 1 && b != -1) {
            return Err(Error::InvalidParam {
                name: "s",
                reason: format!("BD bit {bad} is not ±1"),
            });
        }
        if pilot_first && s.first() != Some(&1) {
            return Err(Error::InvalidParam {
                name: "s",
                reason: "pilot bit must be +1".into(),
            });
        }
        Ok(Self { s, pilot_first })
    }

    /// Uniform random bits; with `pilot_first`, `s_0` is forced to `+1`.
    pub fn random<R: Rng + ?Sized>(len: usize, pilot_first: bool, rng: &mut R) -> Self {
        let s = (0..len)
            .map(|m| {
                let bit: i8 = if rng.random::<bool>() { 1 } else { -1 };
                if pilot_first && m == 0 {
                    1
                } else {
                    bit
                }
            })
            .collect();
        Self { s, pilot_first }
    }

    pub fn as_slice(&self) -> &[i8] {
        &self.s
    }

    pub fn pilot_first(&self) -> bool {
        self.pilot_first
    }

    pub fn len(&self) -> usize {
        self.s.len()
    }

    pub fn is_empty(&self) -> bool {
        self.s.is_empty()
    }
}

/// The frequency-domain BD signal for each OFDM symbol of a slot.
#[derive(Debug, Clone, PartialEq)]
pub struct BdWaveform {
    pub filter: Filter,
    pub symbols: Vec<Vec<Complex64>>,
}

impl BdWaveform {
    pub fn build(filter: Filter, bits: &BdBits, g: &FreqResponse) -> Result<Self> {
        let symbols = bits
            .as_slice()
            .iter()
            .map(|&s| match filter {
                Filter::Cuif => Ok(cuif_waveform(s, g.len())),
                Filter::Camf => camf_waveform(s, g),
            })
            .collect::<Result<_>>()?;
        Ok(Self { filter, symbols })
    }
}

/// `b = 1·s`.
pub fn cuif_waveform(s: i8, subcarriers: usize) -> Vec<Complex64> {
    vec![Complex64::new(f64::from(s), 0.0); subcarriers]
}

/// `b = s·κ·conj(G)` with `κ = √L/‖G‖`.
pub fn camf_waveform(s: i8, g: &FreqResponse) -> Result<Vec<Complex64>> {
    let norm = g.norm();
    if norm == 0.0 {
        return Err(Error::ZeroChannel);
    }
    let scale = f64::from(s) * (g.len() as f64).sqrt() / norm;
    Ok(g.coefficients.iter().map(|c| c.conj() * scale).collect())
}

/// Modulation in the air: `a_l = β·G_l·x_l·b_l` for an arbitrary BD waveform.
pub fn modulate_in_air(
    beta: Complex64,
    g: &FreqResponse,
    x: &[Complex64],
    b: &[Complex64],
) -> Vec<Complex64> {
    g.coefficients
        .iter()
        .zip(x)
        .zip(b)
        .map(|((&g, &x), &b)| beta * g * x * b)
        .collect()
}

/// The reflected component `a_m` for bit `s` riding on OFDM symbol `x`.
pub fn backscatter_component(
    filter: Filter,
    realization: &ChannelRealization,
    x: &[Complex64],
    s: i8,
) -> Result<Vec<Complex64>> {
    if x.len() != realization.subcarriers() {
        return Err(Error::Dimension {
            expected: realization.subcarriers(),
            got: x.len(),
        });
    }
    let s = f64::from(s);
    Ok(match filter {
        Filter::Cuif => realization
            .g_freq
            .coefficients
            .iter()
            .zip(x)
            .map(|(&g, &x)| realization.beta * g * x * s)
            .collect(),
        Filter::Camf => realization
            .v
            .iter()
            .zip(x)
            .map(|(&v, &x)| realization.beta_tilde * v * x * s)
            .collect(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{sample_realization, ChannelModel, Cir};
    use crate::ofdm::{gen_frame, Constellation};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn energy(v: &[Complex64]) -> f64 {
        v.iter().map(|c| c.norm_sqr()).sum()
    }

    fn flat(l: usize) -> FreqResponse {
        FreqResponse {
            coefficients: vec![Complex64::new(1.0, 0.0); l],
        }
    }

    #[test]
    fn cuif_is_all_ones_times_bit() {
        assert_eq!(cuif_waveform(1, 4), vec![Complex64::new(1.0, 0.0); 4]);
        assert_eq!(cuif_waveform(-1, 4), vec![Complex64::new(-1.0, 0.0); 4]);
        assert_eq!(energy(&cuif_waveform(-1, 32)), 32.0);
    }

    #[test]
    fn camf_on_flat_channel_equals_cuif() {
        let b = camf_waveform(1, &flat(8)).unwrap();
        for c in b {
            assert!((c - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        }
    }

    #[test]
    fn camf_rejects_zero_channel() {
        let g = FreqResponse {
            coefficients: vec![Complex64::new(0.0, 0.0); 4],
        };
        assert_eq!(camf_waveform(1, &g), Err(Error::ZeroChannel));
    }

    #[test]
    fn camf_conjugates_channel_phase_and_keeps_energy() {
        let model = ChannelModel::uniform(32, 4, 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for i in 0..10_000 {
            let r = sample_realization(&model, &mut rng).unwrap();
            let s = if i % 2 == 0 { 1 } else { -1 };
            let b = camf_waveform(s, &r.g_freq).unwrap();
            assert!((energy(&b) - 32.0).abs() < 1e-9);
            if i < 100 {
                for (bl, gl) in b.iter().zip(&r.g_freq.coefficients) {
                    // b_l·G_l = s·κ·|G_l|² is real with the sign of s.
                    let prod = bl * gl;
                    assert!(prod.im.abs() <= 1e-12 * prod.norm().max(1e-300));
                    assert_eq!(prod.re.signum(), f64::from(s));
                }
            }
        }
    }

    #[test]
    fn camf_component_two_routes_agree() {
        let model = ChannelModel::uniform(32, 4, 0.2).unwrap();
        let qpsk = Constellation::qpsk();
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..200 {
            let r = sample_realization(&model, &mut rng).unwrap();
            let frame = gen_frame(32, 1, &qpsk, &mut rng).unwrap();
            let x = frame.symbol(0);
            for s in [-1i8, 1] {
                let direct = backscatter_component(Filter::Camf, &r, x, s).unwrap();
                let b = camf_waveform(s, &r.g_freq).unwrap();
                let via_air = modulate_in_air(r.beta, &r.g_freq, x, &b);
                for (a, b) in direct.iter().zip(&via_air) {
                    assert!((a - b).norm() < 1e-12);
                }
                let cuif = backscatter_component(Filter::Cuif, &r, x, s).unwrap();
                let via_air = modulate_in_air(r.beta, &r.g_freq, x, &cuif_waveform(s, 32));
                for (a, b) in cuif.iter().zip(&via_air) {
                    assert!((a - b).norm() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn flat_channel_components_coincide() {
        let one = Cir {
            taps: vec![Complex64::new(1.0, 0.0)],
        };
        let r = ChannelRealization::from_parts(one.clone(), one, 16, 0.3, 1.1).unwrap();
        let x = vec![Complex64::new(1.0, -1.0); 16];
        let camf = backscatter_component(Filter::Camf, &r, &x, -1).unwrap();
        let cuif = backscatter_component(Filter::Cuif, &r, &x, -1).unwrap();
        for (a, b) in camf.iter().zip(&cuif) {
            assert!((a - b).norm() < 1e-14);
            assert!((a - r.beta * x[0] * -1.0).norm() < 1e-14);
        }
    }

    #[test]
    fn no_reflection_no_component() {
        let one = Cir {
            taps: vec![Complex64::new(1.0, 0.0)],
        };
        let r = ChannelRealization::from_parts(one.clone(), one, 4, 0.0, 0.0).unwrap();
        let a = backscatter_component(Filter::Camf, &r, &[Complex64::new(1.0, 1.0); 4], 1).unwrap();
        assert!(a.iter().all(|c| c.norm() == 0.0));
    }

    #[test]
    fn camf_gains_share_common_phase() {
        let model = ChannelModel::uniform(64, 8, 0.2).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        let r = sample_realization(&model, &mut rng).unwrap();
        let phase = r.beta_tilde.arg();
        for gain in r.camf_gain() {
            let d = (gain.arg() - phase).rem_euclid(2.0 * std::f64::consts::PI);
            assert!(d.min(2.0 * std::f64::consts::PI - d) < 1e-12);
        }
    }

    #[test]
    fn pilot_bit_is_forced() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        for _ in 0..50 {
            let bits = BdBits::random(10, true, &mut rng);
            assert_eq!(bits.as_slice()[0], 1);
        }
        assert!(BdBits::new(vec![-1, 1], true).is_err());
        assert!(BdBits::new(vec![0, 1], false).is_err());
    }

    #[test]
    fn waveform_builds_for_each_symbol() {
        let bits = BdBits::new(vec![1, -1, 1], false).unwrap();
        let w = BdWaveform::build(Filter::Camf, &bits, &flat(4)).unwrap();
        assert_eq!(w.symbols.len(), 3);
        assert!(w.symbols.iter().all(|b| (energy(b) - 4.0).abs() < 1e-12));
    }
}
