//! Closed-form communication metrics, Cramér-Rao bounds, and spectral
//! occupancy measurements.

use std::f64::consts::PI;
use std::sync::OnceLock;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{rng_stream, stream};
use crate::dsp;
use crate::error::{JcsError, Result};
use crate::modulation::{QamFmcwConfig, Scheme, SymbolStream, Waveform};
use crate::signal::ComplexSignal;
use crate::SPEED_OF_LIGHT;

/// Gaussian tail probability `Q(x) = ½·erfc(x/√2)`.
pub fn q_function(x: f64) -> f64 {
    0.5 * libm::erfc(x / std::f64::consts::SQRT_2)
}

fn qam_factor(order: usize) -> f64 {
    let m = order as f64;
    3.0 * m.log2() / (m - 1.0)
}

/// `4·Q(√(3·log2 M/(M−1)·snr))`. Not clamped, so `snr = 0` gives 2.
pub fn qam_ber_bound(order: usize, snr: f64) -> f64 {
    4.0 * q_function((qam_factor(order) * snr).sqrt())
}

/// `e^{−x²/2}/12`.
pub fn q_approx(x: f64) -> f64 {
    (-x * x / 2.0).exp() / 12.0
}

/// `1 − e^{−x²/2}/3`, as printed (this is `1 − 4·q_approx`, not `1 − H(p)`).
pub fn capacity_approx(x: f64) -> f64 {
    1.0 - (-x * x / 2.0).exp() / 3.0
}

/// `(Ns/Tp)·capacity_approx(x)·log2 M` in bit/s.
pub fn throughput(symbols_per_pulse: usize, pulse_duration: f64, order: usize, x: f64) -> f64 {
    symbols_per_pulse as f64 / pulse_duration * capacity_approx(x) * (order as f64).log2()
}

/// `x = √(3·log2 M/(M−1) · P_t·G/(N0·Ns))`, with `P_t` the transmitted pulse
/// energy.
pub fn x_argument(order: usize, pt: f64, gain: f64, n0: f64, symbols_per_pulse: usize) -> f64 {
    (qam_factor(order) * pt * gain / (n0 * symbols_per_pulse as f64)).sqrt()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CommMetrics {
    pub ber_upper: f64,
    pub x_arg: f64,
    pub capacity_bits: f64,
    pub throughput_bps: f64,
}

/// Metrics for a unit-power pulse of duration `Tp` (`P_t = Tp`) received at
/// gain `G` with per-sample noise variance `σ²` at rate `fs` (`N0 = σ²/fs`).
pub fn comm_metrics(
    cfg: &QamFmcwConfig,
    gain: f64,
    noise_variance: f64,
    sample_rate: f64,
) -> CommMetrics {
    let tp = cfg.carrier.pulse_duration;
    let n0 = noise_variance / sample_rate;
    let x = x_argument(cfg.order, tp, gain, n0, cfg.symbols_per_pulse);
    CommMetrics {
        ber_upper: 4.0 * q_function(x),
        x_arg: x,
        capacity_bits: capacity_approx(x),
        throughput_bps: throughput(cfg.symbols_per_pulse, tp, cfg.order, x),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundForm {
    Exact,
    /// Large-`N` form.
    Asymptotic,
    /// Range bound with the denominator `N(3N+1)` as typeset in print.
    AsPrinted,
}

/// Variance bound for the normalized frequency (cycles/sample) of a tone in
/// white noise: `12/((2π)²·γ·N·(N²−1))`, or `12/((2π)²γN³)`.
pub fn crb_frequency(gamma: f64, n: usize, form: BoundForm) -> Result<f64> {
    if !(gamma > 0.0) || n < 2 {
        return Err(JcsError::param("need gamma > 0 and N >= 2"));
    }
    let nf = n as f64;
    let den = match form {
        BoundForm::Exact | BoundForm::AsPrinted => nf * (nf * nf - 1.0),
        BoundForm::Asymptotic => nf * nf * nf,
    };
    Ok(12.0 / ((2.0 * PI).powi(2) * gamma * den))
}

/// Range MSE bound in m² for beat slope `S`, per-sample SNR `γ`, `N` samples
/// spaced `δt` apart:
/// `3c²/(8π²S²δt²γ·N(N+1)(2N+1))`, asymptotically `3c²/(16π²S²δt²γN³)`.
pub fn crb_range_mse(
    slope: f64,
    gamma: f64,
    n: usize,
    sample_interval: f64,
    form: BoundForm,
) -> Result<f64> {
    if !(slope > 0.0 && gamma > 0.0 && sample_interval > 0.0) || n < 1 {
        return Err(JcsError::param("need S > 0, gamma > 0, dt > 0 and N >= 1"));
    }
    let nf = n as f64;
    let c = SPEED_OF_LIGHT;
    let base = 3.0 * c * c / (PI * PI * slope * slope * sample_interval * sample_interval * gamma);
    Ok(match form {
        BoundForm::Exact => base / (8.0 * nf * (nf + 1.0) * (2.0 * nf + 1.0)),
        BoundForm::Asymptotic => base / (16.0 * nf * nf * nf),
        BoundForm::AsPrinted => base / (8.0 * nf * (3.0 * nf + 1.0)),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CrbResult {
    pub freq_var_lb: f64,
    pub range_mse_lb: f64,
    pub gamma: f64,
    pub n: usize,
}

/// Both exact bounds for a beat signal of `n` samples at `sample_rate`.
/// The frequency bound is converted to Hz².
pub fn crb(slope: f64, gamma: f64, n: usize, sample_rate: f64) -> Result<CrbResult> {
    let fv = crb_frequency(gamma, n, BoundForm::Exact)? * sample_rate * sample_rate;
    let rm = crb_range_mse(slope, gamma, n, 1.0 / sample_rate, BoundForm::Exact)?;
    Ok(CrbResult {
        freq_var_lb: fv,
        range_mse_lb: rm,
        gamma,
        n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdEstimate {
    /// Bin centres in Hz, ascending from `−fs/2`.
    pub freqs: Vec<f64>,
    /// Power per Hz.
    pub density: Vec<f64>,
    pub occupied_bw_99: f64,
}

impl PsdEstimate {
    pub fn bin_width(&self) -> f64 {
        if self.freqs.len() > 1 {
            self.freqs[1] - self.freqs[0]
        } else {
            0.0
        }
    }

    /// `Σ density·Δf`.
    pub fn total_power(&self) -> f64 {
        self.density.iter().sum::<f64>() * self.bin_width()
    }
}

/// Averaged periodogram over consecutive non-overlapping segments
/// (rectangular window), normalized to a density so it integrates to the
/// mean signal power.
pub fn estimate_psd(s: &ComplexSignal, segment_len: usize) -> Result<PsdEstimate> {
    if segment_len < 2 {
        return Err(JcsError::param("segment length must be >= 2"));
    }
    if s.len() < 4 * segment_len {
        return Err(JcsError::param(format!(
            "need at least {} samples for segments of {segment_len}, got {}",
            4 * segment_len,
            s.len()
        )));
    }
    let fs = s.sample_rate();
    let segments = s.len() / segment_len;
    let mut power = vec![0.0; segment_len];
    for chunk in s.samples().chunks_exact(segment_len) {
        dsp::accumulate_power(chunk, &mut power);
    }
    let norm = 1.0 / (segments as f64 * segment_len as f64 * fs);
    let half = segment_len / 2;
    let df = fs / segment_len as f64;
    let mut density = Vec::with_capacity(segment_len);
    let mut freqs = Vec::with_capacity(segment_len);
    for i in 0..segment_len {
        let k = (i + segment_len - half) % segment_len;
        density.push(power[k] * norm);
        freqs.push((i as f64 - half as f64) * df);
    }
    let occupied_bw_99 = occupied_bandwidth(&density, df, 0.99);
    Ok(PsdEstimate {
        freqs,
        density,
        occupied_bw_99,
    })
}

/// Width between the `(1−p)/2` and `(1+p)/2` cumulative-power points,
/// counting both edge bins.
pub fn occupied_bandwidth(density: &[f64], bin_width: f64, fraction: f64) -> f64 {
    let total: f64 = density.iter().sum();
    if !(total > 0.0) {
        return 0.0;
    }
    let lo_target = (1.0 - fraction) / 2.0 * total;
    let hi_target = (1.0 + fraction) / 2.0 * total;
    let mut acc = 0.0;
    let mut lo = None;
    let mut hi = density.len() - 1;
    for (i, d) in density.iter().enumerate() {
        acc += d;
        if lo.is_none() && acc >= lo_target {
            lo = Some(i);
        }
        if acc >= hi_target {
            hi = i;
            break;
        }
    }
    let lo = lo.unwrap_or(0);
    (hi - lo + 1) as f64 * bin_width
}

/// `κ` such that a rectangular pulse of length `T` has 99% of its power
/// within `κ/T` (the central band of `sinc²(fT)`).
pub fn rect_obw_constant() -> f64 {
    static KAPPA: OnceLock<f64> = OnceLock::new();
    *KAPPA.get_or_init(|| {
        // Fraction of ∫sinc² = 1 inside [−a, a].
        let inside = |a: f64| -> f64 {
            let steps = ((a * 400.0).ceil() as usize).max(2) * 2;
            let h = a / steps as f64;
            let f = |x: f64| {
                if x == 0.0 {
                    1.0
                } else {
                    let y = (PI * x).sin() / (PI * x);
                    y * y
                }
            };
            let mut s = f(0.0) + f(a);
            for i in 1..steps {
                s += f(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
            }
            2.0 * s * h / 3.0
        };
        let (mut lo, mut hi) = (1.0, 60.0);
        for _ in 0..60 {
            let mid = 0.5 * (lo + hi);
            if inside(mid) < 0.99 {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        lo + hi
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandwidthReport {
    /// Swept bandwidth `S·Tp`.
    pub b_s: f64,
    /// Measured 99% bandwidth of the bare symbol stream.
    pub b_c: f64,
    /// `κ/Ts`.
    pub b_c_nominal: f64,
    pub b_t_measured: f64,
    pub additivity_error: f64,
}

/// Measures `B_t` for the full QAM-FMCW signal and compares it with
/// `B_s + B_c`, averaging 100 pulses of fresh symbols.
pub fn bandwidth_partition_check(cfg: &QamFmcwConfig, sample_rate: f64) -> Result<BandwidthReport> {
    bandwidth_partition_check_with(cfg, sample_rate, 100, 0)
}

pub fn bandwidth_partition_check_with(
    cfg: &QamFmcwConfig,
    sample_rate: f64,
    pulses: usize,
    seed: u64,
) -> Result<BandwidthReport> {
    cfg.validate()?;
    let b_s = cfg.carrier.bandwidth();
    let b_c_nominal = rect_obw_constant() / cfg.symbol_period();
    if !(sample_rate > 2.0 * (b_s + b_c_nominal)) {
        return Err(JcsError::param(format!(
            "sample rate {sample_rate:e} Hz does not exceed 2·(B_s + B_c) = {:e} Hz",
            2.0 * (b_s + b_c_nominal)
        )));
    }
    if pulses < 4 {
        return Err(JcsError::param("need at least 4 pulses"));
    }
    let len = cfg.samples_per_pulse(sample_rate);
    let mut rng = rng_stream(seed, stream::SYMBOLS);
    let mut bare = Vec::with_capacity(len * pulses);
    let mut full = Vec::with_capacity(len * pulses);
    for _ in 0..pulses {
        let sym = SymbolStream::random(Scheme::Qam, cfg.order, cfg.symbols_per_pulse, &mut rng)?;
        let wave = Waveform::new(&sym, *cfg)?;
        let s = wave.sample(sample_rate)?;
        for (n, z) in s.samples().iter().enumerate() {
            let t = n as f64 / sample_rate;
            bare.push(wave.amplitude(t));
            full.push(*z);
        }
    }
    let bare: Vec<Complex64> = bare;
    let b_c = estimate_psd(&ComplexSignal::new(bare, sample_rate, 0.0)?, len)?.occupied_bw_99;
    let b_t = estimate_psd(&ComplexSignal::new(full, sample_rate, 0.0)?, len)?.occupied_bw_99;
    Ok(BandwidthReport {
        b_s,
        b_c,
        b_c_nominal,
        b_t_measured: b_t,
        additivity_error: (b_t - (b_s + b_c)).abs() / (b_s + b_c),
    })
}
