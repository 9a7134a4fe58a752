//! Range estimation from the radar echo.
//!
//! QAM-FMCW: the echo is mixed with the plain chirp into a beat signal whose
//! tone sits at `τ·S`. Two estimators read it: carrier synchronization (peak of
//! the power spectrum) and a frequency-domain ML grid search that matches the
//! full beat spectrum using the known symbols.
//!
//! FSK-SF: the echo is mixed with the transmitted pulse, the output frequency
//! is tracked with a short-time DFT, and the delay is split into a whole number
//! of steps plus a fine offset found by a model-fit search.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::dsp;
use crate::error::{JcsError, Result};
use crate::modulation::{FskSfConfig, QamFmcwConfig, Scheme, SymbolStream, Waveform};
use crate::signal::ComplexSignal;
use crate::waveform::{cis_cycles, synthesize_carrier};
use crate::SPEED_OF_LIGHT;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RangingMethod {
    FreqDomainMl,
    CarrierSync,
    FskSf,
}

impl RangingMethod {
    pub fn name(&self) -> &'static str {
        match self {
            RangingMethod::FreqDomainMl => "freq_domain_ml",
            RangingMethod::CarrierSync => "carrier_sync",
            RangingMethod::FskSf => "fsk_sf",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CarrierSyncTrace {
    /// Delay read off the whole-pulse periodogram, used to place the segments.
    pub coarse_tau: f64,
    /// Final beat-frequency estimate in Hz.
    pub beat_hz: f64,
    pub segments: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlTrace {
    /// `(τ, objective)` for every grid point, in grid order.
    pub objective: Vec<(f64, f64)>,
}

/// Timing of the FSK-SF mixer output around one reference step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FskRangingTrace {
    pub freq_track: FreqTrack,
    /// Whole-step part of the delay, `τ = (k′−1)·Δt + (t₁ − t₀)`.
    pub k_prime_hat: usize,
    /// Start of the reference step.
    pub t0: f64,
    /// Estimated frequency-change instant inside the reference step.
    pub t1_hat: f64,
    /// End of the reference step.
    pub t2: f64,
    /// `(τ, objective)` over the fine-search grid.
    pub objective: Vec<(f64, f64)>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Diagnostics {
    CarrierSync(CarrierSyncTrace),
    FreqDomainMl(MlTrace),
    FskSf(Box<FskRangingTrace>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RangeEstimate {
    pub tau_hat: f64,
    pub d_hat: f64,
    pub method: RangingMethod,
    pub diagnostics: Diagnostics,
}

impl RangeEstimate {
    fn new(tau_hat: f64, method: RangingMethod, diagnostics: Diagnostics) -> Self {
        let tau_hat = tau_hat.max(0.0);
        Self {
            tau_hat,
            d_hat: SPEED_OF_LIGHT * tau_hat / 2.0,
            method,
            diagnostics,
        }
    }
}

/// `lo(t)·conj(r(t))` with `lo` the unmodulated chirp. A point target
/// produces a tone at `+τ·S` carrying the conjugated symbols.
pub fn beat_signal(r: &ComplexSignal, cfg: &QamFmcwConfig) -> Result<ComplexSignal> {
    cfg.validate()?;
    let lo = synthesize_carrier(cfg.carrier, r.sample_rate())?;
    if lo.len() != r.len() {
        return Err(JcsError::param(format!(
            "echo has {} samples, pulse has {}",
            r.len(),
            lo.len()
        )));
    }
    let lo = ComplexSignal::new(lo.into_samples(), r.sample_rate(), r.t_start())?;
    lo.mix_conj(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Segmentation {
    /// One periodogram over the whole pulse.
    WholePulse,
    /// Periodograms of the received symbol intervals, summed. The interval
    /// boundaries come from a whole-pulse first pass.
    SymbolAligned,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CarrierSyncOptions {
    pub interpolate: bool,
    pub segmentation: Segmentation,
    pub zero_pad: usize,
}

impl Default for CarrierSyncOptions {
    fn default() -> Self {
        Self {
            interpolate: true,
            segmentation: Segmentation::SymbolAligned,
            zero_pad: 4,
        }
    }
}

/// Peak frequency in `[0, fs)` of the summed periodograms of `segments`.
fn periodogram_peak(segments: &[&[Complex64]], fs: f64, zero_pad: usize, interpolate: bool) -> f64 {
    let len = segments.iter().map(|s| s.len()).max().unwrap_or(1).max(1);
    let nfft = len * zero_pad.max(1);
    let mut power = vec![0.0; nfft];
    for s in segments {
        dsp::accumulate_power(s, &mut power);
    }
    let pos = dsp::circular_peak(&power, interpolate).max(0.0);
    pos * fs / nfft as f64
}

/// Carrier-synchronization ranging with default options.
pub fn range_carrier_sync(beat: &ComplexSignal, cfg: &QamFmcwConfig) -> Result<RangeEstimate> {
    range_carrier_sync_with(beat, cfg, &CarrierSyncOptions::default())
}

/// Estimates the beat tone `f̂_c` from the power spectrum; `τ̂ = f̂_c/S`.
pub fn range_carrier_sync_with(
    beat: &ComplexSignal,
    cfg: &QamFmcwConfig,
    opts: &CarrierSyncOptions,
) -> Result<RangeEstimate> {
    cfg.validate()?;
    if beat.is_empty() {
        return Err(JcsError::param("beat signal is empty"));
    }
    if beat.is_all_zero() {
        return Err(JcsError::DegenerateSignal(
            "beat signal is identically zero".into(),
        ));
    }
    let fs = beat.sample_rate();
    let slope = cfg.carrier.slope;
    let x = beat.samples();
    // Peaks within one symbol bandwidth below fs are a near-zero beat whose
    // symbol spread leaked to negative frequencies.
    let unwrap = |f: f64| {
        if f > fs - 1.0 / cfg.symbol_period() {
            0.0
        } else {
            f
        }
    };
    let f_whole = unwrap(periodogram_peak(&[x], fs, opts.zero_pad, opts.interpolate));
    let coarse_tau = f_whole / slope;

    let (beat_hz, segments) = match opts.segmentation {
        Segmentation::WholePulse => (f_whole, 1),
        Segmentation::SymbolAligned => {
            let segs = aligned_segments(
                x,
                fs,
                beat.t_start(),
                coarse_tau,
                cfg.symbol_period(),
                cfg.symbols_per_pulse,
            );
            if segs.is_empty() {
                (f_whole, 1)
            } else {
                (
                    unwrap(periodogram_peak(&segs, fs, opts.zero_pad, opts.interpolate)),
                    segs.len(),
                )
            }
        }
    };
    let tau = beat_hz / slope;
    Ok(RangeEstimate::new(
        tau,
        RangingMethod::CarrierSync,
        Diagnostics::CarrierSync(CarrierSyncTrace {
            coarse_tau,
            beat_hz,
            segments,
        }),
    ))
}

/// Received symbol intervals `[τ + nTs, τ + (n+1)Ts]` with one guard sample
/// trimmed at each end. All segments share the length of the first; those
/// running past the pulse are dropped, and if none fits the single remaining
/// stretch after `τ` is used.
fn aligned_segments(
    x: &[Complex64],
    fs: f64,
    t_start: f64,
    tau: f64,
    ts: f64,
    ns: usize,
) -> Vec<&[Complex64]> {
    let n_total = x.len();
    let idx = |t: f64| ((t - t_start) * fs).ceil().max(0.0) as usize;
    let first_a = idx(tau) + 1;
    let first_e = (((tau + ts - t_start) * fs).floor().max(0.0) as usize).saturating_sub(1);
    if first_e < first_a {
        return Vec::new();
    }
    let len = first_e - first_a + 1;
    let mut out = Vec::new();
    for n in 0..ns {
        let a = idx(tau + n as f64 * ts) + 1;
        if a + len <= n_total {
            out.push(&x[a..a + len]);
        }
    }
    if out.is_empty() && first_a + 1 < n_total {
        out.push(&x[first_a..]);
    }
    out
}

/// One-bin delay grid `τ_k = k/(Tp·S)` covering beat frequencies in `[0, fs)`.
pub fn ml_bin_grid(cfg: &QamFmcwConfig, sample_rate: f64) -> Vec<f64> {
    let tp = cfg.carrier.pulse_duration;
    let n = cfg.samples_per_pulse(sample_rate);
    (0..n)
        .map(|k| k as f64 / (tp * cfg.carrier.slope))
        .take_while(|&tau| tau < tp)
        .collect()
}

/// Noiseless beat template for delay `tau` with unit gain and zero reflection
/// phase, evaluated at the sample instants of `like`.
pub fn beat_template(
    cfg: &QamFmcwConfig,
    points: &[Complex64],
    tau: f64,
    fs: f64,
    len: usize,
) -> Vec<Complex64> {
    let c = &cfg.carrier;
    let ts = cfg.symbol_period();
    let phase0 = -0.5 * c.slope * tau * tau + (c.f0 + c.rf_hz) * tau;
    (0..len)
        .map(|n| {
            let t = n as f64 / fs;
            if t < tau {
                return Complex64::new(0.0, 0.0);
            }
            let j = (((t - tau) / ts).floor() as usize).min(points.len() - 1);
            points[j].conj() * cis_cycles(c.slope * tau * t + phase0)
        })
        .collect()
}

/// Frequency-domain ML grid search.
///
/// For each candidate `τ` the noiseless beat spectrum is synthesized from the
/// known symbols and compared with the observed spectrum; the objective is the
/// squared spectral mismatch `Σ_k |R[k] − T_τ[k]|²`. Ties go to the smaller τ.
pub fn range_freq_domain_ml(
    beat: &ComplexSignal,
    cfg: &QamFmcwConfig,
    known: &SymbolStream,
    tau_grid: &[f64],
) -> Result<RangeEstimate> {
    cfg.validate()?;
    if tau_grid.is_empty() {
        return Err(JcsError::param("delay grid is empty"));
    }
    let tp = cfg.carrier.pulse_duration;
    if let Some(&bad) = tau_grid
        .iter()
        .find(|&&t| !(t.is_finite() && (0.0..tp).contains(&t)))
    {
        return Err(JcsError::param(format!("grid delay {bad} outside [0, Tp)")));
    }
    if known.scheme() != Scheme::Qam
        || known.len() != cfg.symbols_per_pulse
        || known.order() != cfg.order
    {
        return Err(JcsError::param(
            "known symbols do not match the configuration",
        ));
    }
    let points = known.points().expect("QAM stream");
    let objective = match bin_indices(beat, cfg, tau_grid) {
        Some(bins) => ml_objective_bins(beat, cfg, &points, tau_grid, &bins),
        None => ml_objective_direct(beat, cfg, &points, tau_grid),
    };
    let mut best = 0;
    for i in 1..objective.len() {
        let (tau, o) = objective[i];
        let (btau, bo) = objective[best];
        if o < bo || (o == bo && tau < btau) {
            best = i;
        }
    }
    Ok(RangeEstimate::new(
        objective[best].0,
        RangingMethod::FreqDomainMl,
        Diagnostics::FreqDomainMl(MlTrace { objective }),
    ))
}

/// Bin indices when every grid delay is an exact DFT bin of the pulse.
fn bin_indices(beat: &ComplexSignal, cfg: &QamFmcwConfig, grid: &[f64]) -> Option<Vec<usize>> {
    let fs = beat.sample_rate();
    let tp = cfg.carrier.pulse_duration;
    let n = beat.len();
    if beat.t_start() != 0.0 || n < 2 || (tp * fs - n as f64).abs() > 1e-6 {
        return None;
    }
    let scale = tp * cfg.carrier.slope;
    grid.iter()
        .map(|&tau| {
            let k = (tau * scale).round();
            ((tau * scale - k).abs() < 1e-9 && k >= 0.0 && (k as usize) < n).then_some(k as usize)
        })
        .collect()
}

/// `N·(‖r‖² + ‖t‖² − 2·Re⟨r, t⟩)`, the spectral mismatch by Parseval.
fn mismatch(n: usize, rr: f64, tt: f64, rt: Complex64) -> f64 {
    (n as f64 * (rr + tt - 2.0 * rt.re)).max(0.0)
}

fn ml_objective_direct(
    beat: &ComplexSignal,
    cfg: &QamFmcwConfig,
    points: &[Complex64],
    grid: &[f64],
) -> Vec<(f64, f64)> {
    let x = beat.samples();
    let fs = beat.sample_rate();
    let rr: f64 = x.iter().map(|z| z.norm_sqr()).sum();
    grid.iter()
        .map(|&tau| {
            let t = beat_template(cfg, points, tau, fs, x.len());
            let tt: f64 = t.iter().map(|z| z.norm_sqr()).sum();
            let rt: Complex64 = x.iter().zip(&t).map(|(a, b)| a * b.conj()).sum();
            (tau, mismatch(x.len(), rr, tt, rt))
        })
        .collect()
}

/// Bin-aligned fast path.
///
/// With `τ_k = k/(Tp·S)` the template is `conj(A_j)·c_k·e^{j2πkn/N}` on the
/// samples of received symbol `j`, so `⟨r, t_k⟩ = conj(c_k)·Σ_j A_j·(G_{b_{j+1}}[k] −
/// G_{b_j}[k])`, where `G_b` is the DFT of `r` truncated to its first `b`
/// samples. For each boundary `j` the truncation point moves slowly with `k`,
/// so `G_b` is kept as a running spectrum and extended one sample at a time.
fn ml_objective_bins(
    beat: &ComplexSignal,
    cfg: &QamFmcwConfig,
    points: &[Complex64],
    grid: &[f64],
    bins: &[usize],
) -> Vec<(f64, f64)> {
    let x = beat.samples();
    let n = x.len();
    let fs = beat.sample_rate();
    let ts = cfg.symbol_period();
    let ns = points.len();
    let rr: f64 = x.iter().map(|z| z.norm_sqr()).sum();

    let boundary = |tau: f64, j: usize| -> usize {
        let b = ((tau + j as f64 * ts) * fs).ceil();
        if b <= 0.0 {
            0
        } else {
            (b as usize).min(n)
        }
    };

    // Candidates visited in ascending delay so every boundary only moves forward.
    let mut order: Vec<usize> = (0..grid.len()).collect();
    order.sort_by(|&a, &b| grid[a].total_cmp(&grid[b]));

    let twiddle: Vec<Complex64> = (0..n).map(|k| cis_cycles(-(k as f64) / n as f64)).collect();
    // h[j][i] = G_{b_j(τ_i)}[k_i]
    let mut h = vec![vec![Complex64::new(0.0, 0.0); grid.len()]; ns + 1];
    for (j, hj) in h.iter_mut().enumerate() {
        let mut b = boundary(grid[order[0]], j);
        let mut g = dsp::fft_padded(&x[..b], n);
        for &i in &order {
            let target = boundary(grid[i], j);
            while b < target {
                // G_{b+1}[k] = G_b[k] + x[b]·e^{-j2πkb/N}
                let step = twiddle[b % n];
                let mut w = Complex64::new(1.0, 0.0);
                for gk in g.iter_mut() {
                    *gk += x[b] * w;
                    w *= step;
                }
                b += 1;
            }
            hj[i] = g[bins[i]];
        }
    }

    let c = &cfg.carrier;
    grid.iter()
        .enumerate()
        .map(|(i, &tau)| {
            let mut rt = Complex64::new(0.0, 0.0);
            let mut tt = 0.0;
            for j in 0..ns {
                let lo = boundary(tau, j);
                let hi = boundary(tau, j + 1);
                rt += points[j] * (h[j + 1][i] - h[j][i]);
                tt += points[j].norm_sqr() * (hi - lo) as f64;
            }
            let ck = cis_cycles(-0.5 * c.slope * tau * tau + (c.f0 + c.rf_hz) * tau);
            (tau, mismatch(n, rr, tt, rt * ck.conj()))
        })
        .collect()
}

/// Per-window peak frequencies of a short-time DFT.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreqTrack {
    /// Window centres in seconds.
    pub times: Vec<f64>,
    /// Peak frequency of each window in Hz, in `(−fs/2, fs/2]`.
    pub freqs: Vec<f64>,
    pub window_len: usize,
    pub hop: usize,
}

/// Rectangular-window short-time DFT, each window zero-padded to at least 8×
/// its length, with a parabolic peak.
pub fn stft_track(r: &ComplexSignal, window_len: usize, hop: usize) -> Result<FreqTrack> {
    if window_len == 0 || hop == 0 {
        return Err(JcsError::param("window length and hop must be >= 1"));
    }
    if window_len > r.len() {
        return Err(JcsError::param(format!(
            "window of {window_len} samples exceeds signal of {}",
            r.len()
        )));
    }
    if r.is_all_zero() {
        return Err(JcsError::DegenerateSignal(
            "signal is identically zero".into(),
        ));
    }
    let fs = r.sample_rate();
    let nfft = (8 * window_len).next_power_of_two().max(64);
    let x = r.samples();
    let mut times = Vec::new();
    let mut freqs = Vec::new();
    let mut power = vec![0.0; nfft];
    let mut start = 0;
    while start + window_len <= x.len() {
        power.iter_mut().for_each(|p| *p = 0.0);
        dsp::accumulate_power(&x[start..start + window_len], &mut power);
        let pos = dsp::circular_peak(&power, true);
        let mut f = pos * fs / nfft as f64;
        if f > fs / 2.0 {
            f -= fs;
        }
        times.push(r.time(start) + (window_len - 1) as f64 / (2.0 * fs));
        freqs.push(f);
        start += hop;
    }
    Ok(FreqTrack {
        times,
        freqs,
        window_len,
        hop,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct FskRangingOptions {
    /// STFT window in samples; default a quarter step.
    pub window_len: Option<usize>,
    /// Default half a window.
    pub hop: Option<usize>,
}

/// Four-step FSK-SF ranging with default tracking options.
pub fn range_fsk_sf(
    r: &ComplexSignal,
    cfg: &FskSfConfig,
    known: &SymbolStream,
) -> Result<RangeEstimate> {
    range_fsk_sf_with(r, cfg, known, &FskRangingOptions::default())
}

/// 1. Track the frequency of `s(t)·conj(r(t))`.
/// 2. Take the most common whole number of steps `q = round(f̂/Δf)`.
/// 3. Fit the delay `τ = (k′−1)·Δt + δ` for `k′` around `q` and `δ` on the
///    sample grid in `(0, Δt]`, matching each window's frequency against the
///    window mean of `f_tx(t) − f_tx(t−τ)`.
/// 4. Report `k′`, the change instant `t₁ = t₀ + δ` and `τ̂`.
pub fn range_fsk_sf_with(
    r: &ComplexSignal,
    cfg: &FskSfConfig,
    known: &SymbolStream,
    opts: &FskRangingOptions,
) -> Result<RangeEstimate> {
    cfg.validate()?;
    let wave = Waveform::new(known, *cfg)?;
    let fs = r.sample_rate();
    let sf = &cfg.carrier;
    let tx = wave.sample(fs)?;
    if tx.len() != r.len() {
        return Err(JcsError::param(format!(
            "echo has {} samples, pulse has {}",
            r.len(),
            tx.len()
        )));
    }
    let per_step = sf.delta_t * fs;
    let window_len = opts
        .window_len
        .unwrap_or_else(|| ((per_step / 4.0).round() as usize).max(2));
    let hop = opts.hop.unwrap_or((window_len / 2).max(1));
    if window_len == 0
        || hop == 0
        || per_step / (hop as f64) < 2.0
        || (window_len as f64) > per_step
    {
        return Err(JcsError::InsufficientResolution(format!(
            "{per_step:.2} samples per step cannot hold two windows \
             (window {window_len}, hop {hop})"
        )));
    }

    let tx = ComplexSignal::new(tx.into_samples(), fs, r.t_start())?;
    let y = tx.mix_conj(r)?;
    let mut track = stft_track(&y, window_len, hop)?;
    let df = sf.delta_f;
    for f in track.freqs.iter_mut() {
        if *f < -df {
            *f += fs;
        }
    }

    // Step 2: dominant whole-step offset. The mixer output is sampled at fs,
    // so offsets beyond fs alias; the alias is picked with the echo onset.
    let onset = energy_onset(r, per_step.round() as usize);
    let after: Vec<f64> = track
        .times
        .iter()
        .zip(&track.freqs)
        .filter(|(&t, _)| t >= onset)
        .map(|(_, &f)| f)
        .collect();
    let q_alias = mode_of_rounded(
        if after.is_empty() {
            &track.freqs
        } else {
            &after
        },
        df,
    );
    let q = unfold_alias(q_alias, df, fs, onset / sf.delta_t, sf.steps);

    // Step 3: joint search over (k′, δ).
    let k_lo = q.saturating_sub(1).max(1);
    let k_hi = (q + 1).clamp(1, sf.steps);
    let tp = sf.pulse_duration();
    let t_gate = (k_hi as f64) * sf.delta_t;
    let starts: Vec<usize> = (0..track.times.len())
        .filter(|&i| r.time(i * hop) >= t_gate)
        .collect();
    if starts.is_empty() {
        return Err(JcsError::InsufficientResolution(
            "no tracking windows after the coarse delay".into(),
        ));
    }
    let f_tx: Vec<f64> = (0..r.len()).map(|n| wave.frequency(r.time(n))).collect();
    let deltas: Vec<f64> = {
        let mut d: Vec<f64> = (1..)
            .map(|j| j as f64 / fs)
            .take_while(|&d| d < sf.delta_t)
            .collect();
        d.push(sf.delta_t);
        d
    };

    let mut objective = Vec::new();
    let mut best: Option<(f64, f64, usize, f64)> = None;
    for kp in k_lo..=k_hi {
        for &delta in &deltas {
            let tau = (kp - 1) as f64 * sf.delta_t + delta;
            if tau >= tp {
                continue;
            }
            let mut cost = 0.0;
            for &i in &starts {
                let s = i * hop;
                let mut model = 0.0;
                for (n, f) in f_tx.iter().enumerate().skip(s).take(window_len) {
                    let u = r.time(n) - tau;
                    model += f - wave.frequency(u.max(0.0));
                }
                let e = track.freqs[i] - model / window_len as f64;
                let e = e - fs * (e / fs).round();
                cost += e * e;
            }
            objective.push((tau, cost));
            if best.is_none_or(|(_, c, _, _)| cost < c) {
                best = Some((tau, cost, kp, delta));
            }
        }
    }
    let (tau, _, k_prime_hat, delta) = best.ok_or_else(|| {
        JcsError::InsufficientResolution("no delay candidate fits inside the pulse".into())
    })?;

    // Step 4: report against the first step wholly covered by the echo.
    let t0 = sf.step_start((k_prime_hat + 1).min(sf.steps));
    let trace = FskRangingTrace {
        freq_track: track,
        k_prime_hat,
        t0,
        t1_hat: t0 + delta,
        t2: t0 + sf.delta_t,
        objective,
    };
    Ok(RangeEstimate::new(
        tau,
        RangingMethod::FskSf,
        Diagnostics::FskSf(Box::new(trace)),
    ))
}

/// Start of the echo: split point of the best two-level least-squares fit
/// to the instantaneous power.
/// Both levels must span at least `min_len` samples, so that a few noisy
/// samples at either end cannot win the split.
fn energy_onset(r: &ComplexSignal, min_len: usize) -> f64 {
    let p: Vec<f64> = r.samples().iter().map(|z| z.norm_sqr()).collect();
    let n = p.len();
    let min_len = min_len.clamp(1, (n / 2).max(1));
    let total: f64 = p.iter().sum();
    let mut head: f64 = p[..min_len - 1].iter().sum();
    let mut best = (0usize, total * total / n as f64);
    for s in min_len..=n.saturating_sub(min_len) {
        head += p[s - 1];
        let tail = total - head;
        let score = head * head / s as f64 + tail * tail / (n - s) as f64;
        if score > best.1 {
            best = (s, score);
        }
    }
    r.time(best.0)
}

/// Whole-step count `round((q_alias·Δf + m·fs)/Δf)` over aliases `m ≥ 0`,
/// choosing the one closest to `steps_hint`.
fn unfold_alias(q_alias: i64, df: f64, fs: f64, steps_hint: f64, max_steps: usize) -> usize {
    let mut best = (q_alias.max(0) as usize, f64::INFINITY);
    for m in 0.. {
        let q = ((q_alias as f64 * df + m as f64 * fs) / df).round();
        if q > max_steps as f64 {
            break;
        }
        if q < 0.0 {
            continue;
        }
        let dist = (q - steps_hint).abs();
        if dist < best.1 {
            best = (q as usize, dist);
        }
    }
    best.0
}

/// Most frequent `round(f/Δf)`, ties to the smaller value.
fn mode_of_rounded(freqs: &[f64], df: f64) -> i64 {
    use std::collections::BTreeMap;
    let mut counts: BTreeMap<i64, usize> = BTreeMap::new();
    for f in freqs {
        *counts.entry((f / df).round() as i64).or_default() += 1;
    }
    let mut best = (0i64, 0usize);
    for (&v, &c) in &counts {
        if c > best.1 {
            best = (v, c);
        }
    }
    best.0
}
