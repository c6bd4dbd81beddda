//! Slot-level Monte Carlo and parameter sweeps.
//!
//! Every slot draws from its own ChaCha stream keyed by `(seed, stream,
//! slot_index)`, so results do not depend on how slots are spread over
//! workers, and error counts are summed as integers. The stream key is the
//! sweep axis, not the scheme or point, which makes schemes and neighbouring
//! points of one sweep see the same channels, bits and noise.

use std::fmt;
use std::ops::Add;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::{ber_cuif_closed, ber_unknown_symbols, n0_from_snr_db, LinkBudget};
use crate::bd::{backscatter_component, BdBits, Filter};
use crate::channel::{sample_realization, ChannelModel};
use crate::error::{Error, Result};
use crate::ofdm::{gen_frame, Constellation};
use crate::receiver::{
    em_run, energy_detect, energy_statistic, genie_detect, receive, threshold_sweep, EmConfig,
    InitHint, Threshold,
};

/// Threshold comparisons throughout use this many standard errors.
pub const SIGNIFICANCE_SIGMAS: f64 = 3.0;

/// Labelled slots used to pick the energy-detector threshold.
pub const ENERGY_CALIBRATION_SLOTS: u64 = 64;

/// BD filter plus reader algorithm.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Matched-filter BD, constrained EM at the reader.
    Camf,
    /// Impulse-filter BD, unconstrained EM at the reader.
    Cuif,
    /// On-off impulse-filter BD, energy detector with a calibrated threshold.
    Energy,
    GenieCamf,
    GenieCuif,
}

impl Scheme {
    pub const ALL: [Scheme; 5] = [
        Scheme::Camf,
        Scheme::Cuif,
        Scheme::Energy,
        Scheme::GenieCamf,
        Scheme::GenieCuif,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Camf => "CAMF",
            Scheme::Cuif => "CUIF",
            Scheme::Energy => "ENERGY",
            Scheme::GenieCamf => "GENIE_CAMF",
            Scheme::GenieCuif => "GENIE_CUIF",
        }
    }

    pub fn uses_em(self) -> bool {
        matches!(self, Scheme::Camf | Scheme::Cuif)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let upper = s.trim().to_ascii_uppercase().replace('-', "_");
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == upper)
            .ok_or_else(|| Error::InvalidParam {
                name: "scheme",
                reason: format!("unknown scheme `{s}`"),
            })
    }
}

/// Everything needed to simulate one operating point.
#[derive(Debug, Clone, PartialEq)]
pub struct SimParams {
    pub subcarriers: usize,
    pub symbols_per_slot: usize,
    pub taps: usize,
    pub alpha_sq: f64,
    pub snr_db: f64,
    pub scheme: Scheme,
    pub em: EmConfig,
    pub slots: u64,
    pub seed: u64,
}

impl Default for SimParams {
    fn default() -> Self {
        Self {
            subcarriers: 32,
            symbols_per_slot: 100,
            taps: 4,
            alpha_sq: 0.2,
            snr_db: 6.0,
            scheme: Scheme::Camf,
            em: EmConfig::default(),
            slots: 1000,
            seed: 0,
        }
    }
}

impl SimParams {
    pub fn validate(&self) -> Result<()> {
        let invalid = |name, reason: String| Err(Error::InvalidParam { name, reason });
        if self.taps == 0 {
            return invalid("P", "must be at least 1".into());
        }
        if self.subcarriers < self.taps {
            return invalid("L", format!("L = {} is below P = {}", self.subcarriers, self.taps));
        }
        if self.symbols_per_slot == 0 {
            return invalid("M", "must be at least 1".into());
        }
        if self.scheme.uses_em() && self.em.pilot_first && self.symbols_per_slot < 2 {
            return invalid("M", "EM with a pilot needs at least 2 symbols".into());
        }
        if self.slots == 0 {
            return invalid("slots", "must be at least 1".into());
        }
        if !(self.alpha_sq > 0.0 && self.alpha_sq <= 1.0) {
            return invalid("alpha2", format!("{} is outside (0, 1]", self.alpha_sq));
        }
        if !self.snr_db.is_finite() {
            return invalid("snr_db", format!("{} is not finite", self.snr_db));
        }
        self.em.validate()
    }

    pub fn channel_model(&self) -> Result<ChannelModel> {
        ChannelModel::uniform(self.subcarriers, self.taps, self.alpha_sq)
    }

    pub fn n0(&self) -> f64 {
        n0_from_snr_db(self.snr_db)
    }

    pub fn budget(&self) -> LinkBudget {
        LinkBudget::uniform(self.subcarriers, self.taps, self.alpha_sq, self.snr_db)
    }

    /// Copy with one swept parameter replaced.
    pub fn with_axis(&self, axis: Axis, value: f64) -> Result<Self> {
        let mut p = self.clone();
        let integral = |name: &'static str| -> Result<usize> {
            if value >= 0.0 && value.fract() == 0.0 && value <= u32::MAX as f64 {
                Ok(value as usize)
            } else {
                Err(Error::InvalidParam {
                    name,
                    reason: format!("{value} is not a nonnegative integer"),
                })
            }
        };
        match axis {
            Axis::SnrDb => p.snr_db = value,
            Axis::Subcarriers => p.subcarriers = integral("L")?,
            Axis::Taps => p.taps = integral("P")?,
            Axis::AlphaSq => p.alpha_sq = value,
            Axis::NIter => p.em.n_iter_max = integral("niter")?,
        }
        p.validate()?;
        Ok(p)
    }

    pub fn axis_value(&self, axis: Axis) -> f64 {
        match axis {
            Axis::SnrDb => self.snr_db,
            Axis::Subcarriers => self.subcarriers as f64,
            Axis::Taps => self.taps as f64,
            Axis::AlphaSq => self.alpha_sq,
            Axis::NIter => self.em.n_iter_max as f64,
        }
    }
}

/// A sweepable parameter.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Axis {
    SnrDb,
    Subcarriers,
    Taps,
    AlphaSq,
    NIter,
}

impl Axis {
    pub const ALL: [Axis; 5] = [
        Axis::SnrDb,
        Axis::Subcarriers,
        Axis::Taps,
        Axis::AlphaSq,
        Axis::NIter,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Axis::SnrDb => "snr_db",
            Axis::Subcarriers => "L",
            Axis::Taps => "P",
            Axis::AlphaSq => "alpha2",
            Axis::NIter => "niter",
        }
    }

    /// Stream key used for slots of a sweep along this axis.
    pub fn index(self) -> u64 {
        match self {
            Axis::SnrDb => 0,
            Axis::Subcarriers => 1,
            Axis::Taps => 2,
            Axis::AlphaSq => 3,
            Axis::NIter => 4,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Axis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "snr_db" | "snr" => Ok(Axis::SnrDb),
            "L" | "l" => Ok(Axis::Subcarriers),
            "P" | "p" => Ok(Axis::Taps),
            "alpha_sq" | "alpha2" => Ok(Axis::AlphaSq),
            "n_iter" | "niter" => Ok(Axis::NIter),
            _ => Err(Error::InvalidParam {
                name: "axis",
                reason: format!("unknown axis `{s}`"),
            }),
        }
    }
}

const DOMAIN_SLOT: u64 = 0x736c_6f74;
const DOMAIN_CALIBRATION: u64 = 0x6361_6c69;

fn derive_rng(seed: u64, stream: u64, domain: u64, index: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&stream.to_le_bytes());
    key[16..24].copy_from_slice(&domain.to_le_bytes());
    let mut rng = ChaCha8Rng::from_seed(key);
    rng.set_stream(index);
    rng
}

/// The random source of slot `slot_index` in stream `stream`.
pub fn slot_rng(seed: u64, stream: u64, slot_index: u64) -> ChaCha8Rng {
    derive_rng(seed, stream, DOMAIN_SLOT, slot_index)
}

/// Bit error count over the data bits of some slots.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct SlotOutcome {
    pub bit_errors: u64,
    pub total_bits: u64,
}

impl Add for SlotOutcome {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Self {
            bit_errors: self.bit_errors + rhs.bit_errors,
            total_bits: self.total_bits + rhs.total_bits,
        }
    }
}

/// One simulated slot before detection.
struct SlotDraw {
    realization: crate::channel::ChannelRealization,
    frame: crate::ofdm::OfdmFrame,
    /// `±1` per OFDM symbol, before any pilot override.
    raw_bits: Vec<i8>,
}

fn draw_slot<R: Rng>(params: &SimParams, constellation: &Constellation, rng: &mut R) -> Result<SlotDraw> {
    let model = params.channel_model()?;
    let realization = sample_realization(&model, rng)?;
    let frame = gen_frame(params.subcarriers, params.symbols_per_slot, constellation, rng)?;
    let raw_bits = BdBits::random(params.symbols_per_slot, false, rng).as_slice().to_vec();
    Ok(SlotDraw {
        realization,
        frame,
        raw_bits,
    })
}

/// On-off BD: bit `+1` reflects through the impulse filter, `−1` is silent.
fn on_off_components(draw: &SlotDraw) -> Result<Vec<Vec<num_complex::Complex64>>> {
    draw.raw_bits
        .iter()
        .enumerate()
        .map(|(m, &s)| {
            let x = draw.frame.symbol(m);
            if s > 0 {
                backscatter_component(Filter::Cuif, &draw.realization, x, 1)
            } else {
                Ok(vec![num_complex::Complex64::new(0.0, 0.0); x.len()])
            }
        })
        .collect()
}

/// Per-point state shared by all slots: parameters and, for the energy
/// detector, the calibrated threshold.
#[derive(Debug, Clone)]
pub struct PreparedPoint {
    params: SimParams,
    stream: u64,
    constellation: Constellation,
    threshold: Option<Threshold>,
}

impl PreparedPoint {
    pub fn prepare(params: &SimParams, stream: u64) -> Result<Self> {
        params.validate()?;
        let constellation = Constellation::qpsk();
        let threshold = match params.scheme {
            Scheme::Energy => Some(calibrate_energy_threshold(params, stream, &constellation)?),
            _ => None,
        };
        Ok(Self {
            params: params.clone(),
            stream,
            constellation,
            threshold,
        })
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn threshold(&self) -> Option<Threshold> {
        self.threshold
    }

    pub fn run_slot(&self, slot_index: u64) -> Result<SlotOutcome> {
        let p = &self.params;
        let mut rng = slot_rng(p.seed, self.stream, slot_index);
        let draw = draw_slot(p, &self.constellation, &mut rng)?;
        let n0 = p.n0();
        let h = &draw.realization.h_freq;
        match p.scheme {
            Scheme::Energy => {
                let comps = on_off_components(&draw)?;
                let slot = receive(h, &draw.frame, &comps, n0, &mut rng)?;
                let tau = self.threshold.expect("energy threshold calibrated in prepare");
                let errors = draw
                    .raw_bits
                    .iter()
                    .enumerate()
                    .filter(|&(m, &s)| energy_detect(slot.symbol(m), tau) != u8::from(s > 0))
                    .count();
                Ok(SlotOutcome {
                    bit_errors: errors as u64,
                    total_bits: draw.raw_bits.len() as u64,
                })
            }
            scheme => {
                let filter = match scheme {
                    Scheme::Camf | Scheme::GenieCamf => Filter::Camf,
                    _ => Filter::Cuif,
                };
                let pilot = scheme.uses_em() && p.em.pilot_first;
                let mut bits = draw.raw_bits.clone();
                if pilot {
                    bits[0] = 1;
                }
                let comps = bits
                    .iter()
                    .enumerate()
                    .map(|(m, &s)| backscatter_component(filter, &draw.realization, draw.frame.symbol(m), s))
                    .collect::<Result<Vec<_>>>()?;
                let slot = receive(h, &draw.frame, &comps, n0, &mut rng)?;
                let s_hat = if scheme.uses_em() {
                    em_run(
                        &slot,
                        h,
                        &p.em,
                        filter.into(),
                        InitHint::from(&draw.realization),
                        &self.constellation,
                        &mut rng,
                    )?
                    .s_hat
                } else {
                    genie_detect(&slot, h, &draw.frame, &draw.realization, filter)?
                };
                let skip = usize::from(pilot);
                let errors = bits[skip..]
                    .iter()
                    .zip(&s_hat[skip..])
                    .filter(|(a, b)| a != b)
                    .count();
                Ok(SlotOutcome {
                    bit_errors: errors as u64,
                    total_bits: (bits.len() - skip) as u64,
                })
            }
        }
    }
}

fn calibrate_energy_threshold(
    params: &SimParams,
    stream: u64,
    constellation: &Constellation,
) -> Result<Threshold> {
    let mut labelled = Vec::new();
    for i in 0..ENERGY_CALIBRATION_SLOTS {
        let mut rng = derive_rng(params.seed, stream, DOMAIN_CALIBRATION, i);
        let draw = draw_slot(params, constellation, &mut rng)?;
        let comps = on_off_components(&draw)?;
        let slot = receive(&draw.realization.h_freq, &draw.frame, &comps, params.n0(), &mut rng)?;
        for (m, &s) in draw.raw_bits.iter().enumerate() {
            labelled.push((energy_statistic(slot.symbol(m)), u8::from(s > 0)));
        }
    }
    let mut stats: Vec<f64> = labelled.iter().map(|&(e, _)| e).collect();
    stats.sort_by(f64::total_cmp);
    let grid: Vec<f64> = stats
        .windows(2)
        .map(|w| 0.5 * (w[0] + w[1]))
        .filter(|&t| t > 0.0)
        .collect();
    threshold_sweep(&labelled, &grid)
}

/// Simulates one slot of `params` on stream 0.
pub fn run_slot(params: &SimParams, slot_index: u64) -> Result<SlotOutcome> {
    PreparedPoint::prepare(params, 0)?.run_slot(slot_index)
}

/// Aggregated BER at one swept value.
#[derive(Debug, Clone, PartialEq)]
pub struct BerPoint {
    pub swept_value: f64,
    pub bit_errors: u64,
    pub total_bits: u64,
    pub ber: f64,
    pub stderr: f64,
    pub runtime_ms: u64,
}

impl BerPoint {
    pub fn from_counts(swept_value: f64, outcome: SlotOutcome, runtime_ms: u64) -> Self {
        let (ber, stderr) = if outcome.total_bits == 0 {
            (0.0, 0.0)
        } else {
            let n = outcome.total_bits as f64;
            let p = outcome.bit_errors as f64 / n;
            (p, (p * (1.0 - p) / n).sqrt())
        };
        Self {
            swept_value,
            bit_errors: outcome.bit_errors,
            total_bits: outcome.total_bits,
            ber,
            stderr,
            runtime_ms,
        }
    }

    /// An analytic value with no sampling error.
    pub fn exact(swept_value: f64, ber: f64) -> Self {
        Self {
            swept_value,
            bit_errors: 0,
            total_bits: 0,
            ber,
            stderr: 0.0,
            runtime_ms: 0,
        }
    }
}

/// `(b − a) / √(se_a² + se_b²)`, zero when both are exact and equal.
pub fn z_score(a: &BerPoint, b: &BerPoint) -> f64 {
    let diff = b.ber - a.ber;
    let pooled = (a.stderr.powi(2) + b.stderr.powi(2)).sqrt();
    if pooled == 0.0 {
        if diff == 0.0 {
            0.0
        } else {
            diff.signum() * f64::INFINITY
        }
    } else {
        diff / pooled
    }
}

/// Closed-form reference curves.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Analytic {
    /// CUIF with known channels and symbols.
    CuifClosed,
    /// CUIF with legacy symbol errors.
    Mixture,
}

impl Analytic {
    pub fn name(self) -> &'static str {
        match self {
            Analytic::CuifClosed => "ANALYTIC_CUIF",
            Analytic::Mixture => "ANALYTIC_MIX",
        }
    }

    pub fn evaluate(self, params: &SimParams) -> Result<f64> {
        let budget = params.budget();
        match self {
            Analytic::CuifClosed => ber_cuif_closed(&budget),
            Analytic::Mixture => Ok(ber_unknown_symbols(&budget)?.ber),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CurveSource {
    Simulated(Scheme),
    Analytic(Analytic),
}

impl CurveSource {
    pub fn name(self) -> &'static str {
        match self {
            CurveSource::Simulated(s) => s.name(),
            CurveSource::Analytic(a) => a.name(),
        }
    }
}

/// BER against one swept parameter.
#[derive(Debug, Clone, PartialEq)]
pub struct BerCurve {
    pub source: CurveSource,
    pub axis: Axis,
    pub points: Vec<BerPoint>,
    pub params_snapshot: SimParams,
}

impl BerCurve {
    pub fn bers(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.ber).collect()
    }

    pub fn point_at(&self, value: f64) -> Option<&BerPoint> {
        self.points.iter().find(|p| p.swept_value == value)
    }
}

/// Executes slots on a fixed-size worker pool.
pub struct Harness {
    pool: rayon::ThreadPool,
    record_timing: bool,
}

impl Harness {
    pub fn new(workers: usize) -> Result<Self> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers.max(1))
            .build()
            .map_err(|e| Error::InvalidParam {
                name: "workers",
                reason: e.to_string(),
            })?;
        Ok(Self {
            pool,
            record_timing: false,
        })
    }

    /// Record wall time per point; off by default so output is reproducible.
    pub fn with_timing(mut self, on: bool) -> Self {
        self.record_timing = on;
        self
    }

    pub fn workers(&self) -> usize {
        self.pool.current_num_threads()
    }

    pub fn run_point(&self, params: &SimParams, stream: u64) -> Result<SlotOutcome> {
        let prepared = PreparedPoint::prepare(params, stream)?;
        self.pool.install(|| {
            (0..params.slots)
                .into_par_iter()
                .map(|i| prepared.run_slot(i))
                .try_reduce(SlotOutcome::default, |a, b| Ok(a + b))
        })
    }

    /// One point per value, sorted by value.
    pub fn sweep(&self, params: &SimParams, axis: Axis, values: &[f64]) -> Result<BerCurve> {
        if values.is_empty() {
            return Err(Error::InvalidParam {
                name: "values",
                reason: "sweep needs at least one value".into(),
            });
        }
        let mut points = Vec::with_capacity(values.len());
        for &v in values {
            let at = params.with_axis(axis, v).map_err(|e| Error::InvalidParam {
                name: "values",
                reason: format!("{} = {v}: {e}", axis.name()),
            })?;
            let start = Instant::now();
            let outcome = self.run_point(&at, axis.index())?;
            let ms = if self.record_timing {
                start.elapsed().as_millis() as u64
            } else {
                0
            };
            points.push(BerPoint::from_counts(v, outcome, ms));
        }
        points.sort_by(|a, b| a.swept_value.total_cmp(&b.swept_value));
        Ok(BerCurve {
            source: CurveSource::Simulated(params.scheme),
            axis,
            points,
            params_snapshot: params.clone(),
        })
    }
}

/// Analytic curve on the same grid as a sweep.
pub fn analytic_curve(kind: Analytic, params: &SimParams, axis: Axis, values: &[f64]) -> Result<BerCurve> {
    let mut points = values
        .iter()
        .map(|&v| Ok(BerPoint::exact(v, kind.evaluate(&params.with_axis(axis, v)?)?)))
        .collect::<Result<Vec<_>>>()?;
    points.sort_by(|a, b| a.swept_value.total_cmp(&b.swept_value));
    Ok(BerCurve {
        source: CurveSource::Analytic(kind),
        axis,
        points,
        params_snapshot: params.clone(),
    })
}

/// Sign-statistic trend of a sequence.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trend {
    Increasing,
    Decreasing,
    NoTrend,
}

/// Kendall's `S = Σ_{i<j} sign(x_j − x_i)`.
pub fn mann_kendall_s(values: &[f64]) -> i64 {
    let mut s = 0;
    for i in 0..values.len() {
        for j in i + 1..values.len() {
            s += match values[j].partial_cmp(&values[i]) {
                Some(std::cmp::Ordering::Greater) => 1,
                Some(std::cmp::Ordering::Less) => -1,
                _ => 0,
            };
        }
    }
    s
}

/// A trend is declared when at least three quarters of the ordered pairs
/// agree in sign (`|τ| ≥ 0.5`).
pub fn trend(values: &[f64]) -> Trend {
    let n = values.len() as i64;
    let pairs = n * (n - 1) / 2;
    if pairs == 0 {
        return Trend::NoTrend;
    }
    let s = mann_kendall_s(values);
    if 2 * s >= pairs {
        Trend::Increasing
    } else if 2 * s <= -pairs {
        Trend::Decreasing
    } else {
        Trend::NoTrend
    }
}

/// How one curve sits relative to another at a point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    /// First curve lower by at least [`SIGNIFICANCE_SIGMAS`].
    Lower,
    /// First curve higher by at least [`SIGNIFICANCE_SIGMAS`].
    Higher,
    Indistinguishable,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointComparison {
    pub swept_value: f64,
    /// `a − b`.
    pub difference: f64,
    pub pooled_stderr: f64,
    pub verdict: Verdict,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveComparison {
    pub points: Vec<PointComparison>,
    pub trend_a: Trend,
    pub trend_b: Trend,
}

impl CurveComparison {
    /// True when the first curve is nowhere significantly above the second.
    pub fn a_never_higher(&self) -> bool {
        self.points.iter().all(|p| p.verdict != Verdict::Higher)
    }
}

pub fn compare_curves(a: &BerCurve, b: &BerCurve) -> Result<CurveComparison> {
    if a.axis != b.axis {
        return Err(Error::CurveMismatch(format!("axes {} and {}", a.axis, b.axis)));
    }
    if a.points.len() != b.points.len()
        || a.points.iter().zip(&b.points).any(|(p, q)| p.swept_value != q.swept_value)
    {
        return Err(Error::CurveMismatch("swept values differ".into()));
    }
    let points = a
        .points
        .iter()
        .zip(&b.points)
        .map(|(p, q)| {
            let z = z_score(q, p);
            let verdict = if z <= -SIGNIFICANCE_SIGMAS {
                Verdict::Lower
            } else if z >= SIGNIFICANCE_SIGMAS {
                Verdict::Higher
            } else {
                Verdict::Indistinguishable
            };
            PointComparison {
                swept_value: p.swept_value,
                difference: p.ber - q.ber,
                pooled_stderr: (p.stderr.powi(2) + q.stderr.powi(2)).sqrt(),
                verdict,
            }
        })
        .collect();
    Ok(CurveComparison {
        points,
        trend_a: trend(&a.bers()),
        trend_b: trend(&b.bers()),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick(scheme: Scheme) -> SimParams {
        SimParams {
            scheme,
            slots: 20,
            seed: 99,
            ..SimParams::default()
        }
    }

    #[test]
    fn slot_is_deterministic() {
        for scheme in Scheme::ALL {
            let p = quick(scheme);
            assert_eq!(run_slot(&p, 3).unwrap(), run_slot(&p, 3).unwrap());
        }
    }

    #[test]
    fn pilot_excluded_from_denominator() {
        let p = quick(Scheme::Camf);
        assert_eq!(run_slot(&p, 0).unwrap().total_bits, 99);
        let g = quick(Scheme::GenieCuif);
        assert_eq!(run_slot(&g, 0).unwrap().total_bits, 100);
    }

    #[test]
    fn genie_noiseless_limit_is_error_free() {
        let h = Harness::new(1).unwrap();
        for scheme in [Scheme::GenieCamf, Scheme::GenieCuif] {
            let p = SimParams {
                snr_db: 60.0,
                slots: 1000,
                ..quick(scheme)
            };
            assert_eq!(h.run_point(&p, 0).unwrap().bit_errors, 0);
        }
    }

    #[test]
    fn worker_count_does_not_change_totals() {
        let p = SimParams {
            snr_db: 2.0,
            slots: 40,
            ..quick(Scheme::Cuif)
        };
        let one = Harness::new(1).unwrap().run_point(&p, 0).unwrap();
        let four = Harness::new(4).unwrap().run_point(&p, 0).unwrap();
        assert_eq!(one, four);
        let serial = (0..p.slots)
            .rev()
            .map(|i| run_slot(&p, i).unwrap())
            .fold(SlotOutcome::default(), |a, b| a + b);
        assert_eq!(one, serial);
    }

    #[test]
    fn single_value_sweep_matches_point() {
        let h = Harness::new(1).unwrap();
        let p = quick(Scheme::GenieCuif);
        let curve = h.sweep(&p, Axis::SnrDb, &[0.0]).unwrap();
        assert_eq!(curve.points.len(), 1);
        let at = p.with_axis(Axis::SnrDb, 0.0).unwrap();
        let direct = h.run_point(&at, Axis::SnrDb.index()).unwrap();
        assert_eq!(curve.points[0].bit_errors, direct.bit_errors);
        assert_eq!(curve.points[0].total_bits, direct.total_bits);
    }

    #[test]
    fn sweep_sorts_points_and_rejects_bad_values() {
        let h = Harness::new(1).unwrap();
        let p = SimParams {
            slots: 2,
            ..quick(Scheme::GenieCamf)
        };
        let curve = h.sweep(&p, Axis::Taps, &[4.0, 1.0, 2.0]).unwrap();
        let xs: Vec<f64> = curve.points.iter().map(|q| q.swept_value).collect();
        assert_eq!(xs, vec![1.0, 2.0, 4.0]);
        assert!(h.sweep(&p, Axis::Taps, &[64.0]).is_err());
        assert!(h.sweep(&p, Axis::Subcarriers, &[2.5]).is_err());
        assert!(h.sweep(&p, Axis::SnrDb, &[]).is_err());
    }

    #[test]
    fn params_validation() {
        let ok = SimParams::default();
        assert!(ok.validate().is_ok());
        assert!(SimParams { subcarriers: 4, taps: 8, ..ok.clone() }.validate().is_err());
        assert!(SimParams { alpha_sq: 0.0, ..ok.clone() }.validate().is_err());
        assert!(SimParams { slots: 0, ..ok.clone() }.validate().is_err());
        assert!(SimParams { symbols_per_slot: 0, ..ok }.validate().is_err());
    }

    #[test]
    fn ber_point_statistics() {
        let p = BerPoint::from_counts(
            1.0,
            SlotOutcome {
                bit_errors: 25,
                total_bits: 100,
            },
            0,
        );
        assert_eq!(p.ber, 0.25);
        assert!((p.stderr - (0.25f64 * 0.75 / 100.0).sqrt()).abs() < 1e-15);
    }

    fn synthetic(values: &[f64]) -> BerCurve {
        BerCurve {
            source: CurveSource::Simulated(Scheme::Camf),
            axis: Axis::SnrDb,
            points: values
                .iter()
                .enumerate()
                .map(|(i, &b)| BerPoint {
                    swept_value: i as f64,
                    bit_errors: (b * 1e5) as u64,
                    total_bits: 100_000,
                    ber: b,
                    stderr: (b * (1.0 - b) / 1e5).sqrt(),
                    runtime_ms: 0,
                })
                .collect(),
            params_snapshot: SimParams::default(),
        }
    }

    #[test]
    fn identical_curves_compare_equal() {
        let c = synthetic(&[0.1, 0.05, 0.01]);
        let cmp = compare_curves(&c, &c).unwrap();
        assert!(cmp.points.iter().all(|p| p.difference == 0.0 && p.verdict == Verdict::Indistinguishable));
    }

    #[test]
    fn trend_verdicts() {
        assert_eq!(trend(&[0.3, 0.2, 0.1, 0.05]), Trend::Decreasing);
        assert_eq!(trend(&[0.01, 0.02, 0.03]), Trend::Increasing);
        assert_eq!(trend(&[0.1, 0.3, 0.1, 0.3]), Trend::NoTrend);
        assert_eq!(trend(&[0.1]), Trend::NoTrend);
        let cmp = compare_curves(&synthetic(&[0.3, 0.2, 0.1]), &synthetic(&[0.4, 0.4, 0.4])).unwrap();
        assert_eq!(cmp.trend_a, Trend::Decreasing);
        assert!(cmp.a_never_higher());
        assert!(cmp.points.iter().all(|p| p.verdict == Verdict::Lower));
    }

    #[test]
    fn mismatched_axes_rejected() {
        let a = synthetic(&[0.1, 0.2]);
        let mut b = a.clone();
        b.axis = Axis::Taps;
        assert!(compare_curves(&a, &b).is_err());
        let c = synthetic(&[0.1]);
        assert!(compare_curves(&a, &c).is_err());
    }

    #[test]
    fn scheme_and_axis_names_round_trip() {
        for s in Scheme::ALL {
            assert_eq!(s.name().parse::<Scheme>().unwrap(), s);
        }
        for a in Axis::ALL {
            assert_eq!(a.name().parse::<Axis>().unwrap(), a);
        }
    }
}
