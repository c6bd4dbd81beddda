//! Analytic BER of coherent BD detection on Rayleigh multipath.
//!
//! With channels and legacy symbols known at the reader, the CUIF bit error
//! probability conditioned on `G` is `Q(√(2|β|²·E_x·Σ_l|G_l|²/N0))`, and
//! `Σ_l|G_l|² = L·Σ_p|g_p|²` turns the average over `g_p ~ CN(0, σ²_g)` into
//! the classical `P`-branch diversity expression. The same statistic for CAMF
//! uses `|β̃|²·Σ_l|G_l|⁴`, which Cauchy-Schwarz bounds below by the CUIF one.
//!
//! Unknown legacy symbols are handled in two steps: the backscatter is treated
//! as Gaussian interference to get the per-subcarrier 4-QAM symbol error rate,
//! and subcarriers with wrong decisions are dropped, leaving a binomial
//! mixture over the number `k` of usable subcarriers.

use crate::channel::FreqResponse;
use crate::error::{Error, Result};

/// Upper tail of the standard normal, `Q(x) = erfc(x/√2)/2`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

/// `10^(dB/10)`.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Noise level for a given SNR: the data-symbol SNR is `1/N0`.
pub fn n0_from_snr_db(snr_db: f64) -> f64 {
    1.0 / db_to_linear(snr_db)
}

/// `γ_x = E_x/N0` at the given SNR, where SNR is `1/N0`.
pub fn gamma_x_from_snr_db(snr_db: f64, symbol_energy: f64) -> f64 {
    symbol_energy / n0_from_snr_db(snr_db)
}

/// Link parameters entering the closed-form expressions.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkBudget {
    pub subcarriers: usize,
    pub alpha_sq: f64,
    /// `|β|²`, equal to `α²` for a unit-modulus BD-to-reader gain.
    pub beta_sq: f64,
    pub symbol_energy: f64,
    /// `E_x/N0`.
    pub gamma_x: f64,
    pub sigma_g: Vec<f64>,
    pub sigma_h: Vec<f64>,
}

impl LinkBudget {
    /// 4-QAM (`E_x = 2`) with uniform `1/P` profiles on both links.
    pub fn uniform(subcarriers: usize, taps: usize, alpha_sq: f64, snr_db: f64) -> Self {
        let sigma = vec![1.0 / taps as f64; taps];
        Self {
            subcarriers,
            alpha_sq,
            beta_sq: alpha_sq,
            symbol_energy: 2.0,
            gamma_x: gamma_x_from_snr_db(snr_db, 2.0),
            sigma_g: sigma.clone(),
            sigma_h: sigma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |name, v: f64| Error::InvalidParam {
            name,
            reason: format!("{v} must be nonnegative and finite"),
        };
        for (name, v) in [
            ("alpha_sq", self.alpha_sq),
            ("beta_sq", self.beta_sq),
            ("symbol_energy", self.symbol_energy),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(bad(name, v));
            }
        }
        if !(self.gamma_x > 0.0) {
            return Err(Error::InvalidParam {
                name: "gamma_x",
                reason: format!("{} must be positive", self.gamma_x),
            });
        }
        if self.sigma_g.is_empty() || self.sigma_h.is_empty() {
            return Err(Error::EmptyProfile);
        }
        if let Some(&v) = self
            .sigma_g
            .iter()
            .chain(&self.sigma_h)
            .find(|v| !(**v >= 0.0 && v.is_finite()))
        {
            return Err(Error::BadVariance(v));
        }
        Ok(())
    }

    pub fn n0(&self) -> f64 {
        self.symbol_energy / self.gamma_x
    }

    pub fn with_subcarriers(&self, subcarriers: usize) -> Self {
        Self {
            subcarriers,
            ..self.clone()
        }
    }

    fn common_sigma_g(&self) -> Result<f64> {
        let first = self.sigma_g[0];
        if self
            .sigma_g
            .iter()
            .all(|&v| (v - first).abs() <= 1e-12 * first.abs().max(1e-300))
        {
            Ok(first)
        } else {
            Err(Error::UnequalTapVariances)
        }
    }
}

/// CUIF BER given `G`: `Q(√(2|β|²·E_x·Σ_l|G_l|²/N0))`.
pub fn ber_cuif_conditional(g: &FreqResponse, beta_sq: f64, symbol_energy: f64, n0: f64) -> f64 {
    q_function((2.0 * beta_sq * symbol_energy * g.energy() / n0).sqrt())
}

/// The same conditional BER written through the tap energy, using
/// `Σ_l|G_l|² = L·Σ_p|g_p|²`: `Q(√(2|β|²·L·γ_x·Σ_p|g_p|²))`.
pub fn ber_cuif_conditional_taps(
    tap_energy: f64,
    subcarriers: usize,
    beta_sq: f64,
    gamma_x: f64,
) -> f64 {
    q_function((2.0 * beta_sq * subcarriers as f64 * gamma_x * tap_energy).sqrt())
}

/// CAMF BER given `G`: `Q(√(2|β̃|²·E_x·Σ_l|G_l|⁴/N0))`.
pub fn ber_camf_conditional(
    g: &FreqResponse,
    beta_tilde_sq: f64,
    symbol_energy: f64,
    n0: f64,
) -> f64 {
    let fourth: f64 = g.coefficients.iter().map(|c| c.norm_sqr().powi(2)).sum();
    q_function((2.0 * beta_tilde_sq * symbol_energy * fourth / n0).sqrt())
}

/// Average CUIF BER under the two-exponential approximation of `Q`.
pub fn ber_cuif_chiani(budget: &LinkBudget) -> Result<f64> {
    budget.validate()?;
    let snr = budget.subcarriers as f64 * budget.beta_sq * budget.gamma_x;
    let first: f64 = budget
        .sigma_g
        .iter()
        .map(|&s| 1.0 / (1.0 + snr * s))
        .product();
    let second: f64 = budget
        .sigma_g
        .iter()
        .map(|&s| 1.0 / (1.0 + 4.0 / 3.0 * snr * s))
        .product();
    Ok(first / 12.0 + second / 4.0)
}

/// `ln C(n, k)` through the log-gamma function.
pub fn ln_binomial(n: usize, k: usize) -> f64 {
    assert!(k <= n, "C({n}, {k})");
    let (n, k) = (n as f64, k as f64);
    libm::lgamma(n + 1.0) - libm::lgamma(k + 1.0) - libm::lgamma(n - k + 1.0)
}

/// Average BPSK-like error probability with `taps`-fold diversity and
/// per-branch SNR `branch_snr`.
fn diversity_ber(taps: usize, branch_snr: f64) -> f64 {
    let mu = (branch_snr / (1.0 + branch_snr)).sqrt();
    let lo = 0.5 * (1.0 - mu);
    let hi = 0.5 * (1.0 + mu);
    let sum: f64 = (0..taps)
        .map(|p| (ln_binomial(taps - 1 + p, p) + p as f64 * hi.ln()).exp())
        .sum();
    (lo.powi(taps as i32) * sum).clamp(0.0, 0.5)
}

/// Exact average CUIF BER for equal tap variances on the BD link.
pub fn ber_cuif_closed(budget: &LinkBudget) -> Result<f64> {
    budget.validate()?;
    let sigma = budget.common_sigma_g()?;
    let branch = budget.subcarriers as f64 * budget.beta_sq * budget.gamma_x * sigma;
    Ok(diversity_ber(budget.sigma_g.len(), branch))
}

/// Intermediate quantities of the unknown-symbol analysis.
#[derive(Debug, Clone, PartialEq)]
pub struct UnknownSymbolBer {
    /// Noise plus backscatter interference, `N0 + |β|²·E_x·Σ_p σ²_{g,p}`.
    pub k0: f64,
    pub gamma_h: f64,
    /// Per-bit error rate of the legacy 4-QAM decisions.
    pub p_ber: f64,
    /// Per-symbol error rate, `1 − (1 − p_ber)²`.
    pub p_ser: f64,
    /// `Pr(L̂ = k)` for `k = 0..=L`.
    pub weights: Vec<f64>,
    pub ber: f64,
}

/// Binomial mixture `Σ_k Pr(L̂ = k)·P̄_cuif(k)` for a given symbol error rate.
/// The `k = 0` term carries BER 1/2.
pub fn ber_mixture(budget: &LinkBudget, p_ser: f64) -> Result<(Vec<f64>, f64)> {
    budget.validate()?;
    if !(0.0..=1.0).contains(&p_ser) {
        return Err(Error::InvalidParam {
            name: "p_ser",
            reason: format!("{p_ser} is not a probability"),
        });
    }
    let l = budget.subcarriers;
    let weights: Vec<f64> = (0..=l)
        .map(|k| {
            // 0^0 = 1 at the endpoints.
            let good = if k == 0 { 0.0 } else { k as f64 * (1.0 - p_ser).ln() };
            let bad = if k == l { 0.0 } else { (l - k) as f64 * p_ser.ln() };
            (ln_binomial(l, k) + good + bad).exp()
        })
        .collect();
    let mut ber = 0.0;
    for (k, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let term = if k == 0 {
            0.5
        } else {
            ber_cuif_closed(&budget.with_subcarriers(k))?
        };
        ber += w * term;
    }
    Ok((weights, ber.clamp(0.0, 0.5)))
}

/// CUIF BER with legacy symbol errors.
pub fn ber_unknown_symbols(budget: &LinkBudget) -> Result<UnknownSymbolBer> {
    budget.validate()?;
    let k0 = budget.n0() + budget.beta_sq * budget.symbol_energy * budget.sigma_g.iter().sum::<f64>();
    let gamma_h = budget.sigma_h.iter().sum::<f64>() / k0;
    let p_ber = 0.5 * (1.0 - (gamma_h / (1.0 + gamma_h)).sqrt());
    let p_ser = 1.0 - (1.0 - p_ber).powi(2);
    let (weights, ber) = ber_mixture(budget, p_ser)?;
    Ok(UnknownSymbolBer {
        k0,
        gamma_h,
        p_ber,
        p_ser,
        weights,
        ber,
    })
}

/// The two decision statistics compared in the CAMF/CUIF inequality.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DecisionStats {
    /// `‖β̃·V·x‖² = |β|²·E_x·L·Σ_l|G_l|⁴ / Σ_l|G_l|²`.
    pub camf: f64,
    /// `‖β·G·x‖² = |β|²·E_x·Σ_l|G_l|²`.
    pub cuif: f64,
}

pub fn theorem1_gap(g: &FreqResponse, budget: &LinkBudget) -> Result<DecisionStats> {
    let second = g.energy();
    if second == 0.0 {
        return Err(Error::ZeroChannel);
    }
    let fourth: f64 = g.coefficients.iter().map(|c| c.norm_sqr().powi(2)).sum();
    let scale = budget.beta_sq * budget.symbol_energy;
    Ok(DecisionStats {
        camf: scale * g.len() as f64 * fourth / second,
        cuif: scale * second,
    })
}
