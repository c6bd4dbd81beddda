//! Block-fading multipath Rayleigh channels.
//!
//! A slot sees three links: the legacy transmitter to the reader (`h`), the
//! legacy transmitter to the BD (`g`) and a flat BD-to-reader coefficient
//! `f = e^{jθ}`. Both multipath links are drawn as independent circularly
//! symmetric complex Gaussian taps and mapped onto the `L` subcarriers with
//! an `L`-point DFT.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};

/// Per-tap power delay profile.
#[derive(Debug, Clone, PartialEq)]
pub struct CirProfile {
    variances: Vec<f64>,
}

impl CirProfile {
    pub fn new(variances: Vec<f64>) -> Result<Self> {
        if variances.is_empty() {
            return Err(Error::EmptyProfile);
        }
        if let Some(&bad) = variances.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::BadVariance(bad));
        }
        Ok(Self { variances })
    }

    /// `taps` taps of power `1/taps` each, for unit total average gain.
    pub fn uniform(taps: usize) -> Result<Self> {
        if taps == 0 {
            return Err(Error::EmptyProfile);
        }
        Self::new(vec![1.0 / taps as f64; taps])
    }

    pub fn taps(&self) -> usize {
        self.variances.len()
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn total_power(&self) -> f64 {
        self.variances.iter().sum()
    }

    /// Returns the common tap variance if all taps share one.
    pub fn common_variance(&self) -> Option<f64> {
        let first = self.variances[0];
        self.variances
            .iter()
            .all(|&v| (v - first).abs() <= 1e-12 * first.abs().max(1e-300))
            .then_some(first)
    }
}

/// Channel impulse response.
#[derive(Debug, Clone, PartialEq)]
pub struct Cir {
    pub taps: Vec<Complex64>,
}

impl Cir {
    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|t| t.norm_sqr()).sum()
    }
}

/// Per-subcarrier channel gains.
#[derive(Debug, Clone, PartialEq)]
pub struct FreqResponse {
    pub coefficients: Vec<Complex64>,
}

impl FreqResponse {
    pub fn len(&self) -> usize {
        self.coefficients.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.coefficients.iter().map(|c| c.norm_sqr()).sum()
    }

    pub fn norm(&self) -> f64 {
        self.energy().sqrt()
    }
}

/// Draws one zero-mean CSCG sample of variance `var`.
pub fn cscg<R: Rng + ?Sized>(rng: &mut R, var: f64) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * (0.5 * var).sqrt()
}

pub fn sample_cir<R: Rng + ?Sized>(profile: &CirProfile, rng: &mut R) -> Cir {
    Cir {
        taps: profile.variances.iter().map(|&v| cscg(rng, v)).collect(),
    }
}

/// `H_l = Σ_p h_p e^{-j2πlp/L}`.
pub fn cir_to_freq(cir: &Cir, subcarriers: usize) -> Result<FreqResponse> {
    if subcarriers < cir.taps.len() || subcarriers == 0 {
        return Err(Error::CirTooLong {
            taps: cir.taps.len(),
            subcarriers,
        });
    }
    let l_f = subcarriers as f64;
    let coefficients = (0..subcarriers)
        .map(|l| {
            cir.taps
                .iter()
                .enumerate()
                .map(|(p, &tap)| {
                    // Reduce the exponent modulo L before scaling to keep the
                    // twiddle exact for large l·p.
                    let k = ((l * p) % subcarriers) as f64;
                    tap * Complex64::from_polar(1.0, -2.0 * PI * k / l_f)
                })
                .sum()
        })
        .collect();
    Ok(FreqResponse { coefficients })
}

/// Statistical description of the three links of a slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelModel {
    pub subcarriers: usize,
    pub direct: CirProfile,
    pub bd: CirProfile,
    pub alpha_sq: f64,
}

impl ChannelModel {
    /// Uniform `1/P` profiles on both multipath links.
    pub fn uniform(subcarriers: usize, taps: usize, alpha_sq: f64) -> Result<Self> {
        let model = Self {
            subcarriers,
            direct: CirProfile::uniform(taps)?,
            bd: CirProfile::uniform(taps)?,
            alpha_sq,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn validate(&self) -> Result<()> {
        for taps in [self.direct.taps(), self.bd.taps()] {
            if taps > self.subcarriers {
                return Err(Error::CirTooLong {
                    taps,
                    subcarriers: self.subcarriers,
                });
            }
        }
        if !(self.alpha_sq > 0.0 && self.alpha_sq <= 1.0) {
            return Err(Error::InvalidParam {
                name: "alpha_sq",
                reason: format!("{} is outside (0, 1]", self.alpha_sq),
            });
        }
        Ok(())
    }
}

/// All channel quantities of one slot, with the derived CAMF parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelRealization {
    pub h: Cir,
    pub g: Cir,
    pub h_freq: FreqResponse,
    pub g_freq: FreqResponse,
    /// Flat BD-to-reader gain, unit modulus.
    pub f: Complex64,
    pub theta: f64,
    pub alpha: f64,
    /// `α·f`.
    pub beta: Complex64,
    /// `√L / ‖G‖`.
    pub kappa: f64,
    /// `β·κ`.
    pub beta_tilde: Complex64,
    /// `|G_l|²`.
    pub v: Vec<f64>,
}

impl ChannelRealization {
    pub fn from_parts(h: Cir, g: Cir, subcarriers: usize, alpha: f64, theta: f64) -> Result<Self> {
        let h_freq = cir_to_freq(&h, subcarriers)?;
        let g_freq = cir_to_freq(&g, subcarriers)?;
        Self::from_responses(h, g, h_freq, g_freq, alpha, theta)
    }

    /// Builds a realization from explicit frequency responses. `h` and `g`
    /// are kept as given; callers forcing a response should pass matching taps.
    pub fn from_responses(
        h: Cir,
        g: Cir,
        h_freq: FreqResponse,
        g_freq: FreqResponse,
        alpha: f64,
        theta: f64,
    ) -> Result<Self> {
        if h_freq.len() != g_freq.len() {
            return Err(Error::Dimension {
                expected: h_freq.len(),
                got: g_freq.len(),
            });
        }
        let norm = g_freq.norm();
        if norm == 0.0 {
            return Err(Error::ZeroChannel);
        }
        let f = Complex64::from_polar(1.0, theta);
        let beta = f * alpha;
        let kappa = (g_freq.len() as f64).sqrt() / norm;
        let v = g_freq.coefficients.iter().map(|c| c.norm_sqr()).collect();
        Ok(Self {
            h,
            g,
            h_freq,
            g_freq,
            f,
            theta,
            alpha,
            beta,
            kappa,
            beta_tilde: beta * kappa,
            v,
        })
    }

    pub fn subcarriers(&self) -> usize {
        self.v.len()
    }

    /// The CAMF effective backscatter diagonal `β̃V`.
    pub fn camf_gain(&self) -> Vec<Complex64> {
        self.v.iter().map(|&v| self.beta_tilde * v).collect()
    }

    /// The CUIF effective backscatter diagonal `βG`.
    pub fn cuif_gain(&self) -> Vec<Complex64> {
        self.g_freq.coefficients.iter().map(|&g| self.beta * g).collect()
    }
}

/// Samples `h`, `g` and `θ ~ U[0, 2π)` for one slot.
pub fn sample_realization<R: Rng + ?Sized>(
    model: &ChannelModel,
    rng: &mut R,
) -> Result<ChannelRealization> {
    model.validate()?;
    let h = sample_cir(&model.direct, rng);
    // A zero-energy g is probability zero for any profile with a positive
    // tap; redraw rather than fail, and give up if the profile is all-zero.
    let mut g = sample_cir(&model.bd, rng);
    if model.bd.total_power() == 0.0 {
        return Err(Error::ZeroChannel);
    }
    while g.energy() == 0.0 {
        g = sample_cir(&model.bd, rng);
    }
    let theta = rng.random_range(0.0..2.0 * PI);
    ChannelRealization::from_parts(h, g, model.subcarriers, model.alpha_sq.sqrt(), theta)
}
