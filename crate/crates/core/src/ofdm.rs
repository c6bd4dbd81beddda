//! Legacy OFDM frames and per-subcarrier symbol decisions.

use num_complex::Complex64;
use rand::Rng;

use crate::error::{Error, Result};

/// A constant-modulus, zero-mean signal set.
///
/// Point order is significant: it fixes the bit labelling and the
/// tie-break in [`qam_detect`].
#[derive(Debug, Clone, PartialEq)]
pub struct Constellation {
    points: Vec<Complex64>,
    symbol_energy: f64,
}

impl Constellation {
    pub fn new(points: Vec<Complex64>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::BadConstellation("no points"));
        }
        let symbol_energy = points[0].norm_sqr();
        if symbol_energy == 0.0 {
            return Err(Error::BadConstellation("zero symbol energy"));
        }
        if points
            .iter()
            .any(|p| (p.norm_sqr() - symbol_energy).abs() > 1e-12 * symbol_energy)
        {
            return Err(Error::BadConstellation("points must have constant modulus"));
        }
        let mean: Complex64 = points.iter().sum::<Complex64>() / points.len() as f64;
        if mean.norm() > 1e-12 * symbol_energy.sqrt() {
            return Err(Error::BadConstellation("points must have zero mean"));
        }
        Ok(Self {
            points,
            symbol_energy,
        })
    }

    /// Gray-labelled 4-QAM `{±1 ± j}`.
    ///
    /// Index `2·b0 + b1` holds `(1 − 2·b0) + j(1 − 2·b1)`, so the first bit
    /// picks the sign of the real part and the second the imaginary part.
    pub fn qpsk() -> Self {
        Self::new(vec![
            Complex64::new(1.0, 1.0),
            Complex64::new(1.0, -1.0),
            Complex64::new(-1.0, 1.0),
            Complex64::new(-1.0, -1.0),
        ])
        .expect("4-QAM is a valid constellation")
    }

    pub fn points(&self) -> &[Complex64] {
        &self.points
    }

    pub fn symbol_energy(&self) -> f64 {
        self.symbol_energy
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Bit label of the point at `index`, MSB first.
    pub fn label(&self, index: usize) -> Vec<u8> {
        let width = self.points.len().next_power_of_two().trailing_zeros() as usize;
        (0..width).rev().map(|b| ((index >> b) & 1) as u8).collect()
    }
}

/// An `L × M` grid of legacy data symbols, stored one OFDM symbol at a time.
#[derive(Debug, Clone, PartialEq)]
pub struct OfdmFrame {
    subcarriers: usize,
    symbols_per_slot: usize,
    symbols: Vec<Complex64>,
}

impl OfdmFrame {
    pub fn from_symbols(subcarriers: usize, symbols: Vec<Complex64>) -> Result<Self> {
        if subcarriers == 0 || symbols.len() % subcarriers != 0 || symbols.is_empty() {
            return Err(Error::Dimension {
                expected: subcarriers.max(1),
                got: symbols.len(),
            });
        }
        Ok(Self {
            subcarriers,
            symbols_per_slot: symbols.len() / subcarriers,
            symbols,
        })
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn symbols_per_slot(&self) -> usize {
        self.symbols_per_slot
    }

    /// The `m`-th OFDM symbol `x_m`.
    pub fn symbol(&self, m: usize) -> &[Complex64] {
        &self.symbols[m * self.subcarriers..(m + 1) * self.subcarriers]
    }

    pub fn get(&self, l: usize, m: usize) -> Complex64 {
        self.symbols[m * self.subcarriers + l]
    }

    pub fn iter_symbols(&self) -> impl Iterator<Item = &[Complex64]> {
        self.symbols.chunks_exact(self.subcarriers)
    }
}

/// Draws every `x_{l,m}` independently and uniformly from the constellation.
pub fn gen_frame<R: Rng + ?Sized>(
    subcarriers: usize,
    symbols_per_slot: usize,
    constellation: &Constellation,
    rng: &mut R,
) -> Result<OfdmFrame> {
    if subcarriers == 0 || symbols_per_slot == 0 {
        return Err(Error::InvalidParam {
            name: "frame",
            reason: format!("L = {subcarriers}, M = {symbols_per_slot} must both be at least 1"),
        });
    }
    let n = constellation.len();
    let symbols = (0..subcarriers * symbols_per_slot)
        .map(|_| constellation.points[rng.random_range(0..n)])
        .collect();
    OfdmFrame::from_symbols(subcarriers, symbols)
}

/// Minimum-distance decision `argmin_x |y − gain·x|²` over the constellation.
///
/// Ties go to the earliest point, which also covers `gain = 0`.
#[inline]
pub fn qam_detect(y: Complex64, gain: Complex64, constellation: &Constellation) -> Complex64 {
    let mut best = constellation.points[0];
    let mut best_dist = (y - gain * best).norm_sqr();
    for &x in &constellation.points[1..] {
        let dist = (y - gain * x).norm_sqr();
        if dist < best_dist {
            best = x;
            best_dist = dist;
        }
    }
    best
}
