//! Reader-side processing of one slot.
//!
//! The slot model is `y_m = H·x_m + a_m + n_m` with `n_m ~ CN(0, N0·I)`. The
//! reader knows `H` but neither the legacy symbols `x_m` nor the BD channel,
//! so the main detector is an EM iteration that alternates between
//!
//! * an E-step: for each OFDM symbol and each bit hypothesis `s`, decide every
//!   `x̂_{l,m}(s)` against the hypothesised gain `H_l + Ṽ_l·s` and turn the
//!   two residual energies into a bit posterior, and
//! * an M-step: solve the per-subcarrier weighted least-squares problem for
//!   `Ṽ_l` and, for CAMF, project the result back onto diagonals whose entries
//!   share one phase.
//!
//! One iteration costs `O(M·L·|X|)`. The genie detector and the energy
//! detector provide the bounds either side.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::Rng;

use crate::bd::Filter;
use crate::channel::{cscg, ChannelRealization, FreqResponse};
use crate::error::{Error, Result};
use crate::ofdm::{qam_detect, Constellation, OfdmFrame};

/// Received frequency-domain samples of one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ReceivedSlot {
    subcarriers: usize,
    symbols_per_slot: usize,
    y: Vec<Complex64>,
    pub n0: f64,
}

impl ReceivedSlot {
    pub fn from_samples(subcarriers: usize, y: Vec<Complex64>, n0: f64) -> Result<Self> {
        if subcarriers == 0 || y.is_empty() || y.len() % subcarriers != 0 {
            return Err(Error::Dimension {
                expected: subcarriers.max(1),
                got: y.len(),
            });
        }
        Ok(Self {
            subcarriers,
            symbols_per_slot: y.len() / subcarriers,
            y,
            n0,
        })
    }

    pub fn subcarriers(&self) -> usize {
        self.subcarriers
    }

    pub fn symbols_per_slot(&self) -> usize {
        self.symbols_per_slot
    }

    pub fn symbol(&self, m: usize) -> &[Complex64] {
        &self.y[m * self.subcarriers..(m + 1) * self.subcarriers]
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.y
    }
}

/// Forms `y_{l,m} = H_l·x_{l,m} + a_{l,m} + n_{l,m}`.
///
/// `components` holds one backscatter vector `a_m` per OFDM symbol; pass an
/// empty slice for a slot without BD.
pub fn receive<R: Rng + ?Sized>(
    h: &FreqResponse,
    frame: &OfdmFrame,
    components: &[Vec<Complex64>],
    n0: f64,
    rng: &mut R,
) -> Result<ReceivedSlot> {
    let l = frame.subcarriers();
    let m = frame.symbols_per_slot();
    if h.len() != l {
        return Err(Error::Dimension {
            expected: l,
            got: h.len(),
        });
    }
    if !components.is_empty() && components.len() != m {
        return Err(Error::Dimension {
            expected: m,
            got: components.len(),
        });
    }
    if let Some(bad) = components.iter().find(|a| a.len() != l) {
        return Err(Error::Dimension {
            expected: l,
            got: bad.len(),
        });
    }
    let mut y = Vec::with_capacity(l * m);
    for (mi, x) in frame.iter_symbols().enumerate() {
        for li in 0..l {
            let mut sample = h.coefficients[li] * x[li];
            if let Some(a) = components.get(mi) {
                sample += a[li];
            }
            if n0 > 0.0 {
                sample += cscg(rng, n0);
            }
            y.push(sample);
        }
    }
    ReceivedSlot::from_samples(l, y, n0)
}

/// Whether the M-step output is projected onto the common-phase set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EmMode {
    /// CAMF: `Ṽ = e^{jθ}·diag(a_l)`, `a_l ≥ 0`.
    CamfConstrained,
    /// CUIF: an arbitrary complex diagonal `βG`.
    CuifUnconstrained,
}

impl From<Filter> for EmMode {
    fn from(filter: Filter) -> Self {
        match filter {
            Filter::Camf => EmMode::CamfConstrained,
            Filter::Cuif => EmMode::CuifUnconstrained,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmConfig {
    /// Maximum number of E/M iterations.
    pub n_iter_max: usize,
    /// Stop once `‖Ṽ^{(i+1)} − Ṽ^{(i)}‖²_F < epsilon`.
    pub epsilon: f64,
    /// Half-width of the uniform error on the initial phase, radians.
    pub initial_phase_error_bound: f64,
    /// `s_0 = +1` is a known pilot used to fix the global sign.
    pub pilot_first: bool,
}

impl Default for EmConfig {
    fn default() -> Self {
        Self {
            n_iter_max: 5,
            epsilon: 1e-6,
            initial_phase_error_bound: PI / 4.0,
            pilot_first: true,
        }
    }
}

impl EmConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_iter_max == 0 {
            return Err(Error::InvalidParam {
                name: "n_iter_max",
                reason: "must be at least 1".into(),
            });
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::InvalidParam {
                name: "epsilon",
                reason: format!("{} must be positive", self.epsilon),
            });
        }
        if !(self.initial_phase_error_bound >= 0.0 && self.initial_phase_error_bound.is_finite()) {
            return Err(Error::InvalidParam {
                name: "initial_phase_error_bound",
                reason: format!("{} must be nonnegative", self.initial_phase_error_bound),
            });
        }
        Ok(())
    }
}

/// Posterior pair `[p(s = −1), p(s = +1)]`.
pub type Posterior = [f64; 2];

const HYPOTHESES: [i8; 2] = [-1, 1];

/// Per-hypothesis legacy symbol decisions `x̂_{l,m}(s)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymbolDecisions {
    subcarriers: usize,
    x_hat: Vec<Complex64>,
}

impl SymbolDecisions {
    /// Decisions for symbol `m` under hypothesis `s`.
    pub fn get(&self, m: usize, s: i8) -> &[Complex64] {
        let start = (2 * m + usize::from(s > 0)) * self.subcarriers;
        &self.x_hat[start..start + self.subcarriers]
    }

    /// Builds decisions from explicit per-symbol vectors for both hypotheses.
    pub fn from_fn(
        subcarriers: usize,
        symbols: usize,
        mut f: impl FnMut(usize, i8, usize) -> Complex64,
    ) -> Self {
        let mut x_hat = Vec::with_capacity(2 * subcarriers * symbols);
        for m in 0..symbols {
            for s in HYPOTHESES {
                for l in 0..subcarriers {
                    x_hat.push(f(m, s, l));
                }
            }
        }
        Self { subcarriers, x_hat }
    }
}

/// Current iterate of the EM receiver.
#[derive(Debug, Clone, PartialEq)]
pub struct EmState {
    pub v_tilde: Vec<Complex64>,
    pub posteriors: Vec<Posterior>,
    pub iteration: usize,
    pub mode: EmMode,
}

impl EmState {
    /// `p^{(0)}(s) = 1/2` for every symbol.
    pub fn initial(v_tilde: Vec<Complex64>, symbols: usize, mode: EmMode) -> Self {
        Self {
            v_tilde,
            posteriors: vec![[0.5, 0.5]; symbols],
            iteration: 0,
            mode,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EStep {
    pub posteriors: Vec<Posterior>,
    pub decisions: SymbolDecisions,
    /// `[ℓ_m(−1), ℓ_m(+1)]` up to the common constant.
    pub log_likelihoods: Vec<[f64; 2]>,
}

/// Numerically stable `1 / (1 + e^{−d})`.
fn logistic(d: f64) -> f64 {
    if d >= 0.0 {
        1.0 / (1.0 + (-d).exp())
    } else {
        let e = d.exp();
        e / (1.0 + e)
    }
}

/// Posterior pair from the two residual energies `Σ_l |y − (H + Ṽs)x̂|²`.
fn posterior_from_residuals(resid_minus: f64, resid_plus: f64, n0: f64) -> Posterior {
    // ℓ(+1) − ℓ(−1); a noiseless slot degenerates to a hard decision.
    let d = if resid_minus == resid_plus {
        0.0
    } else {
        (resid_minus - resid_plus) / n0
    };
    [logistic(-d), logistic(d)]
}

fn check_dims(slot: &ReceivedSlot, h: &FreqResponse, v: &[Complex64]) -> Result<()> {
    for got in [h.len(), v.len()] {
        if got != slot.subcarriers {
            return Err(Error::Dimension {
                expected: slot.subcarriers,
                got,
            });
        }
    }
    Ok(())
}

/// E-step at `Ṽ^{(i)} = v_tilde`.
pub fn em_e_step(
    slot: &ReceivedSlot,
    h: &FreqResponse,
    v_tilde: &[Complex64],
    constellation: &Constellation,
) -> Result<EStep> {
    check_dims(slot, h, v_tilde)?;
    let l = slot.subcarriers;
    let m_count = slot.symbols_per_slot;
    let mut x_hat = Vec::with_capacity(2 * l * m_count);
    let mut posteriors = Vec::with_capacity(m_count);
    let mut log_likelihoods = Vec::with_capacity(m_count);
    let inv_n0 = 1.0 / slot.n0;
    for m in 0..m_count {
        let y = slot.symbol(m);
        let mut resid = [0.0f64; 2];
        for (k, s) in HYPOTHESES.into_iter().enumerate() {
            let s = f64::from(s);
            for li in 0..l {
                let gain = h.coefficients[li] + v_tilde[li] * s;
                let x = qam_detect(y[li], gain, constellation);
                resid[k] += (y[li] - gain * x).norm_sqr();
                x_hat.push(x);
            }
        }
        posteriors.push(posterior_from_residuals(resid[0], resid[1], slot.n0));
        log_likelihoods.push([-resid[0] * inv_n0, -resid[1] * inv_n0]);
    }
    Ok(EStep {
        posteriors,
        decisions: SymbolDecisions {
            subcarriers: l,
            x_hat,
        },
        log_likelihoods,
    })
}

/// Per-subcarrier maximiser `ν̃_l` of the quadratic `Q_l`.
///
/// `ν̃_l = Σ_{m,s} p(s)·s·conj(x̂)·(y − H_l·x̂) / Σ_{m,s} p(s)·|x̂|²`.
pub fn em_m_step_unconstrained(
    slot: &ReceivedSlot,
    h: &FreqResponse,
    posteriors: &[Posterior],
    decisions: &SymbolDecisions,
) -> Result<Vec<Complex64>> {
    let l = slot.subcarriers;
    if h.len() != l {
        return Err(Error::Dimension {
            expected: l,
            got: h.len(),
        });
    }
    if posteriors.len() != slot.symbols_per_slot {
        return Err(Error::Dimension {
            expected: slot.symbols_per_slot,
            got: posteriors.len(),
        });
    }
    let mut num = vec![Complex64::new(0.0, 0.0); l];
    let mut den = vec![0.0f64; l];
    for (m, post) in posteriors.iter().enumerate() {
        let y = slot.symbol(m);
        for (k, s) in HYPOTHESES.into_iter().enumerate() {
            let w = post[k];
            if w == 0.0 {
                continue;
            }
            let ws = w * f64::from(s);
            let x_hat = decisions.get(m, s);
            for li in 0..l {
                let x = x_hat[li];
                num[li] += x.conj() * (y[li] - h.coefficients[li] * x) * ws;
                den[li] += w * x.norm_sqr();
            }
        }
    }
    num.into_iter()
        .zip(den)
        .enumerate()
        .map(|(li, (n, d))| {
            if d > 0.0 {
                Ok(n / d)
            } else {
                Err(Error::SingularMStep(li))
            }
        })
        .collect()
}

/// `Q_l(ν) = −(1/N0)·Σ_{m,s} p(s)·|y_{l,m} − (H_l + ν·s)·x̂_{l,m}(s)|²`.
pub fn q_objective(
    slot: &ReceivedSlot,
    h: &FreqResponse,
    posteriors: &[Posterior],
    decisions: &SymbolDecisions,
    subcarrier: usize,
    nu: Complex64,
) -> f64 {
    let hl = h.coefficients[subcarrier];
    let mut acc = 0.0;
    for (m, post) in posteriors.iter().enumerate() {
        let y = slot.symbol(m)[subcarrier];
        for (k, s) in HYPOTHESES.into_iter().enumerate() {
            let x = decisions.get(m, s)[subcarrier];
            acc += post[k] * (y - (hl + nu * f64::from(s)) * x).norm_sqr();
        }
    }
    -acc / slot.n0
}

/// Projects `ν̃` onto the common-phase set: `e^{jθ̂}·|ν̃_l|` with
/// `θ̂ = ∠(Σ_l ν̃_l / L)`, and `θ̂ = 0` when the sum vanishes.
pub fn project_common_phase(nu: &[Complex64]) -> Vec<Complex64> {
    let sum: Complex64 = nu.iter().sum();
    let theta = if sum.norm_sqr() == 0.0 { 0.0 } else { sum.arg() };
    let rot = Complex64::from_polar(1.0, theta);
    nu.iter().map(|v| rot * v.norm()).collect()
}

/// Output of the EM receiver for one slot.
#[derive(Debug, Clone, PartialEq)]
pub struct DetectionResult {
    pub s_hat: Vec<i8>,
    pub v_tilde_hat: Vec<Complex64>,
    pub posteriors: Vec<Posterior>,
    pub iterations_used: usize,
    pub converged: bool,
}

/// What the initialiser knows about the BD link: the reflection amplitude
/// and the true phase of `f`, of which it sees only a perturbed copy.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InitHint {
    pub alpha: f64,
    pub theta: f64,
}

impl From<&ChannelRealization> for InitHint {
    fn from(r: &ChannelRealization) -> Self {
        Self {
            alpha: r.alpha,
            theta: r.theta,
        }
    }
}

/// `Ṽ^{(0)}_l = α·e^{jθ̂^{(0)}}` with `θ̂^{(0)} = θ + U(−bound, bound)`.
pub fn initial_v_tilde<R: Rng + ?Sized>(
    hint: InitHint,
    subcarriers: usize,
    bound: f64,
    rng: &mut R,
) -> Vec<Complex64> {
    let err = if bound > 0.0 {
        rng.random_range(-bound..bound)
    } else {
        0.0
    };
    vec![Complex64::from_polar(hint.alpha, hint.theta + err); subcarriers]
}

/// Runs EM from a rough phase estimate derived from `hint`.
pub fn em_run<R: Rng + ?Sized>(
    slot: &ReceivedSlot,
    h: &FreqResponse,
    config: &EmConfig,
    mode: EmMode,
    hint: InitHint,
    constellation: &Constellation,
    rng: &mut R,
) -> Result<DetectionResult> {
    config.validate()?;
    let v0 = initial_v_tilde(
        hint,
        slot.subcarriers,
        config.initial_phase_error_bound,
        rng,
    );
    em_run_from(slot, h, config, mode, v0, constellation)
}

/// Runs EM from an explicit `Ṽ^{(0)}`.
///
/// Each iteration is one E-step followed by one M-step. Iteration stops on
/// `‖ΔṼ‖²_F < ε` or after `n_iter_max` iterations; bits are then read off a
/// final E-step at the last iterate.
pub fn em_run_from(
    slot: &ReceivedSlot,
    h: &FreqResponse,
    config: &EmConfig,
    mode: EmMode,
    v0: Vec<Complex64>,
    constellation: &Constellation,
) -> Result<DetectionResult> {
    config.validate()?;
    let mut state = EmState::initial(v0, slot.symbols_per_slot, mode);
    let mut converged = false;
    while state.iteration < config.n_iter_max {
        let e = em_e_step(slot, h, &state.v_tilde, constellation)?;
        let nu = em_m_step_unconstrained(slot, h, &e.posteriors, &e.decisions)?;
        let next = match mode {
            EmMode::CamfConstrained => project_common_phase(&nu),
            EmMode::CuifUnconstrained => nu,
        };
        let delta: f64 = next
            .iter()
            .zip(&state.v_tilde)
            .map(|(a, b)| (a - b).norm_sqr())
            .sum();
        state.v_tilde = next;
        state.posteriors = e.posteriors;
        state.iteration += 1;
        if delta < config.epsilon {
            converged = true;
            break;
        }
    }
    let last = em_e_step(slot, h, &state.v_tilde, constellation)?;
    let mut posteriors = last.posteriors;
    let mut v_tilde_hat = state.v_tilde;
    let mut s_hat: Vec<i8> = posteriors
        .iter()
        .map(|p| if p[1] >= p[0] { 1 } else { -1 })
        .collect();
    // (s, Ṽ) and (−s, −Ṽ) explain the slot equally well; the pilot picks one.
    if config.pilot_first && posteriors.first().is_some_and(|p| p[1] < 0.5) {
        s_hat.iter_mut().for_each(|s| *s = -*s);
        v_tilde_hat.iter_mut().for_each(|v| *v = -*v);
        posteriors.iter_mut().for_each(|p| p.swap(0, 1));
    }
    Ok(DetectionResult {
        s_hat,
        v_tilde_hat,
        posteriors,
        iterations_used: state.iteration,
        converged,
    })
}

/// Coherent detection with every channel and legacy symbol known.
///
/// Picks `s` minimising `‖y_m − (H + C·s)·x_m‖²` with `C = βG` for CUIF and
/// `C = β̃V` for CAMF. Ties resolve to `+1`.
pub fn genie_detect(
    slot: &ReceivedSlot,
    h: &FreqResponse,
    frame: &OfdmFrame,
    realization: &ChannelRealization,
    filter: Filter,
) -> Result<Vec<i8>> {
    let l = slot.subcarriers;
    if frame.subcarriers() != l || frame.symbols_per_slot() != slot.symbols_per_slot {
        return Err(Error::Dimension {
            expected: slot.y.len(),
            got: frame.subcarriers() * frame.symbols_per_slot(),
        });
    }
    let c = match filter {
        Filter::Cuif => realization.cuif_gain(),
        Filter::Camf => realization.camf_gain(),
    };
    check_dims(slot, h, &c)?;
    Ok((0..slot.symbols_per_slot)
        .map(|m| {
            let y = slot.symbol(m);
            let x = frame.symbol(m);
            let mut dist = [0.0f64; 2];
            for (k, s) in HYPOTHESES.into_iter().enumerate() {
                let s = f64::from(s);
                dist[k] = (0..l)
                    .map(|li| (y[li] - (h.coefficients[li] + c[li] * s) * x[li]).norm_sqr())
                    .sum();
            }
            if dist[1] <= dist[0] {
                1
            } else {
                -1
            }
        })
        .collect())
}

/// A positive energy-detector threshold.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Threshold(f64);

impl Threshold {
    pub fn new(tau: f64) -> Result<Self> {
        if tau > 0.0 && tau.is_finite() {
            Ok(Self(tau))
        } else {
            Err(Error::BadThreshold(tau))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

/// `‖y_m‖²`.
pub fn energy_statistic(y: &[Complex64]) -> f64 {
    y.iter().map(|c| c.norm_sqr()).sum()
}

/// On-off decision: `1` iff `‖y_m‖² ≥ τ`.
pub fn energy_detect(y: &[Complex64], tau: Threshold) -> u8 {
    u8::from(energy_statistic(y) >= tau.0)
}

/// Picks the grid threshold with the fewest errors on labelled
/// `(statistic, bit)` calibration pairs. Ties go to the earliest grid point.
pub fn threshold_sweep(calibration: &[(f64, u8)], grid: &[f64]) -> Result<Threshold> {
    if grid.is_empty() {
        return Err(Error::EmptyGrid);
    }
    let mut sorted: Vec<(f64, u8)> = calibration.to_vec();
    sorted.sort_by(|a, b| a.0.total_cmp(&b.0));
    // ones_below[i]: number of label-1 samples among the i smallest statistics.
    let mut ones_below = Vec::with_capacity(sorted.len() + 1);
    ones_below.push(0usize);
    for &(_, bit) in &sorted {
        ones_below.push(ones_below.last().unwrap() + usize::from(bit == 1));
    }
    let total_ones = *ones_below.last().unwrap();
    let mut best: Option<(usize, Threshold)> = None;
    for &tau in grid {
        let tau = Threshold::new(tau)?;
        // Samples strictly below τ decide 0.
        let below = sorted.partition_point(|&(e, _)| e < tau.0);
        let misses = ones_below[below];
        let false_alarms = (sorted.len() - below) - (total_ones - ones_below[below]);
        let errors = misses + false_alarms;
        if best.is_none_or(|(e, _)| errors < e) {
            best = Some((errors, tau));
        }
    }
    Ok(best.expect("grid is nonempty").1)
}

/// Calibration error count of threshold `tau`.
pub fn calibration_errors(calibration: &[(f64, u8)], tau: Threshold) -> usize {
    calibration
        .iter()
        .filter(|&&(e, bit)| u8::from(e >= tau.0) != bit)
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bd::backscatter_component;
    use crate::channel::{sample_realization, ChannelModel};
    use crate::ofdm::gen_frame;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    struct Fixture {
        realization: ChannelRealization,
        frame: OfdmFrame,
        bits: Vec<i8>,
        slot: ReceivedSlot,
    }

    fn fixture(filter: Filter, n0: f64, seed: u64) -> Fixture {
        let qpsk = Constellation::qpsk();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let model = ChannelModel::uniform(32, 4, 0.2).unwrap();
        let realization = sample_realization(&model, &mut rng).unwrap();
        let frame = gen_frame(32, 100, &qpsk, &mut rng).unwrap();
        let bits: Vec<i8> = (0..100)
            .map(|m| if m == 0 || rng.random::<bool>() { 1 } else { -1 })
            .collect();
        let comps: Vec<_> = bits
            .iter()
            .enumerate()
            .map(|(m, &s)| backscatter_component(filter, &realization, frame.symbol(m), s).unwrap())
            .collect();
        let slot = receive(&realization.h_freq, &frame, &comps, n0, &mut rng).unwrap();
        Fixture {
            realization,
            frame,
            bits,
            slot,
        }
    }

    #[test]
    fn noiseless_direct_link_only() {
        let qpsk = Constellation::qpsk();
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let model = ChannelModel::uniform(8, 2, 0.2).unwrap();
        let r = sample_realization(&model, &mut rng).unwrap();
        let frame = gen_frame(8, 3, &qpsk, &mut rng).unwrap();
        let slot = receive(&r.h_freq, &frame, &[], 0.0, &mut rng).unwrap();
        for m in 0..3 {
            for l in 0..8 {
                assert_eq!(slot.symbol(m)[l], r.h_freq.coefficients[l] * frame.get(l, m));
            }
        }
    }

    #[test]
    fn noiseless_camf_slot_has_effective_gain_form() {
        let f = fixture(Filter::Camf, 0.0, 21);
        let r = &f.realization;
        for m in 0..100 {
            for l in 0..32 {
                let want = (r.h_freq.coefficients[l] + r.beta_tilde * r.v[l] * f64::from(f.bits[m]))
                    * f.frame.get(l, m);
                assert!((f.slot.symbol(m)[l] - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn noise_variance_matches_n0() {
        let qpsk = Constellation::qpsk();
        let mut rng = ChaCha8Rng::seed_from_u64(22);
        let h = FreqResponse {
            coefficients: vec![c(0.0, 0.0); 100],
        };
        let frame = gen_frame(100, 1000, &qpsk, &mut rng).unwrap();
        let n0 = 0.37;
        let slot = receive(&h, &frame, &[], n0, &mut rng).unwrap();
        let n = slot.samples().len() as f64;
        let powers: Vec<f64> = slot.samples().iter().map(|s| s.norm_sqr()).collect();
        let mean = powers.iter().sum::<f64>() / n;
        let var = powers.iter().map(|p| (p - mean).powi(2)).sum::<f64>() / (n - 1.0);
        assert!((mean - n0).abs() < 3.0 * (var / n).sqrt(), "{mean}");
    }

    #[test]
    fn zero_v_tilde_gives_flat_posteriors() {
        let f = fixture(Filter::Camf, 0.5, 23);
        let e = em_e_step(&f.slot, &f.realization.h_freq, &[c(0.0, 0.0); 32], &Constellation::qpsk())
            .unwrap();
        for (p, ll) in e.posteriors.iter().zip(&e.log_likelihoods) {
            assert_eq!(ll[0], ll[1]);
            assert_eq!(*p, [0.5, 0.5]);
        }
    }

    #[test]
    fn true_v_tilde_favours_true_bits() {
        let f = fixture(Filter::Camf, 0.0, 24);
        let mut slot = f.slot.clone();
        slot.n0 = 1e-3;
        let e = em_e_step(&slot, &f.realization.h_freq, &f.realization.camf_gain(), &Constellation::qpsk())
            .unwrap();
        for (p, &s) in e.posteriors.iter().zip(&f.bits) {
            let (truth, other) = if s > 0 { (p[1], p[0]) } else { (p[0], p[1]) };
            assert!(truth >= other);
        }
    }

    #[test]
    fn posteriors_stay_normalised_at_extreme_snr() {
        for (n0, seed) in [(1e-12f64, 25), (1e-3, 26), (10.0, 27)] {
            let f = fixture(Filter::Camf, n0.max(1e-6), seed);
            let mut slot = f.slot.clone();
            slot.n0 = n0;
            let e = em_e_step(&slot, &f.realization.h_freq, &f.realization.camf_gain(), &Constellation::qpsk())
                .unwrap();
            for p in &e.posteriors {
                assert!(p.iter().all(|v| v.is_finite() && (0.0..=1.0).contains(v)));
                assert!((p[0] + p[1] - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn m_step_one_point_least_squares() {
        let slot = ReceivedSlot::from_samples(1, vec![c(2.0, 2.0)], 1.0).unwrap();
        let h = FreqResponse {
            coefficients: vec![c(0.0, 0.0)],
        };
        let decisions = SymbolDecisions::from_fn(1, 1, |_, _, _| c(1.0, 1.0));
        let nu = em_m_step_unconstrained(&slot, &h, &[[0.0, 1.0]], &decisions).unwrap();
        assert!((nu[0] - c(2.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn m_step_recovers_true_gain_with_oracle_inputs() {
        let f = fixture(Filter::Cuif, 0.0, 28);
        let mut slot = f.slot.clone();
        slot.n0 = 1.0;
        let posteriors: Vec<Posterior> = f
            .bits
            .iter()
            .map(|&s| if s > 0 { [0.0, 1.0] } else { [1.0, 0.0] })
            .collect();
        let decisions = SymbolDecisions::from_fn(32, 100, |m, _, l| f.frame.get(l, m));
        let nu = em_m_step_unconstrained(&slot, &f.realization.h_freq, &posteriors, &decisions).unwrap();
        for (a, b) in nu.iter().zip(f.realization.cuif_gain()) {
            assert!((a - b).norm() < 1e-9);
        }
    }

    #[test]
    fn m_step_zero_weight_is_singular() {
        let slot = ReceivedSlot::from_samples(1, vec![c(1.0, 0.0)], 1.0).unwrap();
        let h = FreqResponse {
            coefficients: vec![c(1.0, 0.0)],
        };
        let decisions = SymbolDecisions::from_fn(1, 1, |_, _, _| c(0.0, 0.0));
        assert_eq!(
            em_m_step_unconstrained(&slot, &h, &[[0.5, 0.5]], &decisions),
            Err(Error::SingularMStep(0))
        );
    }

    #[test]
    fn projection_fixed_point() {
        let rot = Complex64::from_polar(1.0, 0.7);
        let nu: Vec<_> = [0.3, 1.2, 2.0, 0.01].iter().map(|&m| rot * m).collect();
        let out = project_common_phase(&nu);
        for (a, b) in out.iter().zip(&nu) {
            assert!((a - b).norm() < 1e-12);
        }
    }

    #[test]
    fn projection_two_point_average() {
        let out = project_common_phase(&[c(1.0, 0.0), c(0.0, 1.0)]);
        let want = Complex64::from_polar(1.0, PI / 4.0);
        for v in out {
            assert!((v - want).norm() < 1e-12);
        }
    }

    #[test]
    fn projection_degenerate_sum_uses_zero_phase() {
        let out = project_common_phase(&[c(1.0, 0.0), c(-1.0, 0.0)]);
        assert_eq!(out, vec![c(1.0, 0.0), c(1.0, 0.0)]);
    }

    #[test]
    fn projection_lands_in_common_phase_set() {
        let mut rng = ChaCha8Rng::seed_from_u64(29);
        for _ in 0..100 {
            let nu: Vec<_> = (0..32).map(|_| cscg(&mut rng, 1.0)).collect();
            let out = project_common_phase(&nu);
            let theta = nu.iter().sum::<Complex64>().arg();
            for (o, n) in out.iter().zip(&nu) {
                assert!((o.norm() - n.norm()).abs() < 1e-12);
                if o.norm() > 1e-9 {
                    let d = (o.arg() - theta).rem_euclid(2.0 * PI);
                    assert!(d.min(2.0 * PI - d) < 1e-9);
                }
            }
        }
    }

    #[test]
    fn em_noiseless_camf_from_truth() {
        let f = fixture(Filter::Camf, 0.0, 30);
        let mut slot = f.slot.clone();
        slot.n0 = 1e-4;
        let res = em_run_from(
            &slot,
            &f.realization.h_freq,
            &EmConfig::default(),
            EmMode::CamfConstrained,
            f.realization.camf_gain(),
            &Constellation::qpsk(),
        )
        .unwrap();
        assert_eq!(res.s_hat, f.bits);
        assert!(res.converged);
        assert!(res.iterations_used <= 2);
    }

    #[test]
    fn em_camf_iterates_share_one_phase() {
        let f = fixture(Filter::Camf, 0.25, 31);
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let res = em_run(
            &f.slot,
            &f.realization.h_freq,
            &EmConfig::default(),
            EmMode::CamfConstrained,
            InitHint::from(&f.realization),
            &Constellation::qpsk(),
            &mut rng,
        )
        .unwrap();
        let phase = res.v_tilde_hat.iter().sum::<Complex64>().arg();
        for v in &res.v_tilde_hat {
            if v.norm() > 1e-9 {
                let d = (v.arg() - phase).rem_euclid(2.0 * PI);
                assert!(d.min(2.0 * PI - d) < 1e-9);
            }
        }
        assert_eq!(res.s_hat[0], 1);
        assert!(res.iterations_used <= 5);
    }

    #[test]
    fn pilot_resolves_global_sign() {
        let f = fixture(Filter::Camf, 0.1, 33);
        let h = &f.realization.h_freq;
        let qpsk = Constellation::qpsk();
        let truth = f.realization.camf_gain();
        let flipped: Vec<_> = truth.iter().map(|v| -v).collect();
        let cfg = EmConfig::default();
        let a = em_run_from(&f.slot, h, &cfg, EmMode::CamfConstrained, truth, &qpsk).unwrap();
        let b = em_run_from(&f.slot, h, &cfg, EmMode::CamfConstrained, flipped, &qpsk).unwrap();
        assert_eq!(a.s_hat, b.s_hat);
        assert_eq!(a.s_hat[0], 1);
        for (x, y) in a.v_tilde_hat.iter().zip(&b.v_tilde_hat) {
            assert!((x - y).norm() < 1e-9);
        }
    }

    #[test]
    fn likelihood_surface_is_sign_symmetric() {
        let qpsk = Constellation::qpsk();
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        for seed in 0..20 {
            let filter = if seed % 2 == 0 { Filter::Camf } else { Filter::Cuif };
            let f = fixture(filter, 0.2, 100 + seed);
            let h = &f.realization.h_freq;
            let v: Vec<_> = (0..32)
                .map(|_| c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
                .collect();
            let neg: Vec<_> = v.iter().map(|x| -x).collect();
            let a = em_e_step(&f.slot, h, &v, &qpsk).unwrap();
            let b = em_e_step(&f.slot, h, &neg, &qpsk).unwrap();
            for m in 0..100 {
                assert_eq!(a.log_likelihoods[m], [b.log_likelihoods[m][1], b.log_likelihoods[m][0]]);
                assert_eq!(a.decisions.get(m, 1), b.decisions.get(m, -1));
            }
            let mode = EmMode::from(filter);
            let cfg = EmConfig::default();
            let ra = em_run_from(&f.slot, h, &cfg, mode, v, &qpsk).unwrap();
            let rb = em_run_from(&f.slot, h, &cfg, mode, neg, &qpsk).unwrap();
            assert_eq!(ra.s_hat, rb.s_hat);
            for (x, y) in ra.v_tilde_hat.iter().zip(&rb.v_tilde_hat) {
                assert!((x - y).norm() < 1e-9);
            }
        }
    }

    #[test]
    fn genie_noiseless_is_error_free() {
        for filter in [Filter::Camf, Filter::Cuif] {
            let f = fixture(filter, 0.0, 34);
            let bits = genie_detect(&f.slot, &f.realization.h_freq, &f.frame, &f.realization, filter).unwrap();
            assert_eq!(bits, f.bits);
        }
    }

    #[test]
    fn energy_detector_basics() {
        let tau = Threshold::new(1.0).unwrap();
        assert_eq!(energy_detect(&[c(0.0, 0.0); 4], tau), 0);
        assert_eq!(energy_detect(&[c(1.0, 0.0)], tau), 1);
        assert!(Threshold::new(0.0).is_err());
        let y = [c(1.0, 2.0), c(-3.0, 0.5), c(0.0, -1.0)];
        let direct = 1.0 + 4.0 + 9.0 + 0.25 + 1.0;
        assert!((energy_statistic(&y) - direct).abs() < 1e-12);
    }

    #[test]
    fn sweep_on_separated_classes() {
        let cal = [(1.0, 0), (1.5, 0), (2.0, 0), (5.0, 1), (6.0, 1)];
        let grid: Vec<f64> = (1..=70).map(|i| i as f64 * 0.1).collect();
        let tau = threshold_sweep(&cal, &grid).unwrap();
        assert!(tau.value() > 2.0 && tau.value() <= 5.0);
        assert_eq!(calibration_errors(&cal, tau), 0);
        assert_eq!(threshold_sweep(&cal, &[3.3]).unwrap().value(), 3.3);
        assert_eq!(threshold_sweep(&cal, &[]), Err(Error::EmptyGrid));
    }

    #[test]
    fn sweep_result_is_grid_optimal() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        let cal: Vec<(f64, u8)> = (0..500)
            .map(|_| {
                let bit = u8::from(rng.random::<bool>());
                (rng.random::<f64>() * 2.0 + f64::from(bit), bit)
            })
            .collect();
        let grid: Vec<f64> = (1..100).map(|i| i as f64 * 0.03).collect();
        let tau = threshold_sweep(&cal, &grid).unwrap();
        let best = calibration_errors(&cal, tau);
        for &g in &grid {
            assert!(best <= calibration_errors(&cal, Threshold::new(g).unwrap()));
        }
    }
}
