//! Unmodulated radar carriers: linear FMCW chirp and step-frequency ladder.
//!
//! Phases are kept in cycles; `2π` only appears when a phase is turned into a
//! complex exponential. Everything is complex baseband: `f0` is a baseband
//! offset and `rf_hz` records the RF centre frequency, which only matters to
//! the channel (carrier phase of a delayed echo).

use std::f64::consts::TAU;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{JcsError, Result};
use crate::signal::ComplexSignal;

/// `exp(j2π·phase)` for a phase in cycles, reduced mod 1 first so that large
/// accumulated phases keep full precision.
pub fn cis_cycles(phase: f64) -> Complex64 {
    let frac = phase - phase.floor();
    Complex64::from_polar(1.0, TAU * frac)
}

/// Number of samples of a pulse of length `duration` at `sample_rate`.
pub fn samples_in(duration: f64, sample_rate: f64) -> usize {
    (duration * sample_rate).round() as usize
}

/// Linear chirp: instantaneous frequency `slope·t + f0` over `[0, pulse_duration]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FmcwCarrier {
    /// Sweep rate S in Hz/s.
    pub slope: f64,
    /// Start frequency in Hz (baseband).
    pub f0: f64,
    /// Pulse duration Tp in seconds.
    pub pulse_duration: f64,
    /// Initial phase in cycles.
    #[serde(default)]
    pub theta0: f64,
    /// RF centre frequency in Hz; metadata for the channel.
    #[serde(default)]
    pub rf_hz: f64,
}

impl FmcwCarrier {
    pub fn new(slope: f64, f0: f64, pulse_duration: f64) -> Result<Self> {
        let c = Self {
            slope,
            f0,
            pulse_duration,
            theta0: 0.0,
            rf_hz: 0.0,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn with_rf(mut self, rf_hz: f64) -> Self {
        self.rf_hz = rf_hz;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.slope.is_finite() && self.slope > 0.0) {
            return Err(JcsError::param(format!(
                "FMCW slope must be > 0, got {}",
                self.slope
            )));
        }
        if !(self.pulse_duration.is_finite() && self.pulse_duration > 0.0) {
            return Err(JcsError::param(format!(
                "pulse duration must be > 0, got {}",
                self.pulse_duration
            )));
        }
        if !(self.f0.is_finite() && self.f0 >= 0.0) {
            return Err(JcsError::param(format!("f0 must be >= 0, got {}", self.f0)));
        }
        if !self.theta0.is_finite() || !self.rf_hz.is_finite() {
            return Err(JcsError::param("theta0 and rf_hz must be finite"));
        }
        let b = self.bandwidth();
        if !(b.is_finite() && b > 0.0) {
            return Err(JcsError::param("swept bandwidth must be finite and > 0"));
        }
        Ok(())
    }

    /// Swept bandwidth `S·Tp`.
    pub fn bandwidth(&self) -> f64 {
        self.slope * self.pulse_duration
    }

    /// Phase in cycles at time `t ∈ [0, Tp]`.
    pub fn phase(&self, t: f64) -> Result<f64> {
        if !(0.0..=self.pulse_duration).contains(&t) {
            return Err(JcsError::Domain(format!(
                "t = {t} s outside pulse [0, {}]",
                self.pulse_duration
            )));
        }
        Ok(self.phase_unchecked(t))
    }

    pub(crate) fn phase_unchecked(&self, t: f64) -> f64 {
        0.5 * self.slope * t * t + self.f0 * t + self.theta0
    }

    pub fn frequency(&self, t: f64) -> f64 {
        self.slope * t + self.f0
    }
}

/// Free-function form of [`FmcwCarrier::phase`].
pub fn fmcw_phase(t: f64, carrier: &FmcwCarrier) -> Result<f64> {
    carrier.phase(t)
}

/// Step-frequency ladder: `K` steps of length `delta_t`, rising by `delta_f`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SfCarrier {
    pub delta_f: f64,
    pub delta_t: f64,
    pub steps: usize,
    #[serde(default)]
    pub f0: f64,
    #[serde(default)]
    pub theta0: f64,
    #[serde(default)]
    pub rf_hz: f64,
}

impl SfCarrier {
    pub fn new(delta_f: f64, delta_t: f64, steps: usize, f0: f64) -> Result<Self> {
        let c = Self {
            delta_f,
            delta_t,
            steps,
            f0,
            theta0: 0.0,
            rf_hz: 0.0,
        };
        c.validate()?;
        Ok(c)
    }

    /// Ladder with the same swept bandwidth and duration as `fmcw`
    /// (`S·Tp = Δf·K`).
    pub fn matching(fmcw: &FmcwCarrier, steps: usize) -> Result<Self> {
        if steps == 0 {
            return Err(JcsError::param("step count must be >= 1"));
        }
        let k = steps as f64;
        let mut c = Self::new(
            fmcw.bandwidth() / k,
            fmcw.pulse_duration / k,
            steps,
            fmcw.f0,
        )?;
        c.rf_hz = fmcw.rf_hz;
        Ok(c)
    }

    pub fn with_rf(mut self, rf_hz: f64) -> Self {
        self.rf_hz = rf_hz;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(JcsError::param("step count K must be >= 1"));
        }
        if !(self.delta_f.is_finite() && self.delta_f > 0.0) {
            return Err(JcsError::param(format!(
                "delta_f must be > 0, got {}",
                self.delta_f
            )));
        }
        if !(self.delta_t.is_finite() && self.delta_t > 0.0) {
            return Err(JcsError::param(format!(
                "delta_t must be > 0, got {}",
                self.delta_t
            )));
        }
        if !(self.f0.is_finite() && self.f0 >= 0.0) {
            return Err(JcsError::param(format!("f0 must be >= 0, got {}", self.f0)));
        }
        if !(self.theta0.is_finite() && self.rf_hz.is_finite()) {
            return Err(JcsError::param("theta0 and rf_hz must be finite"));
        }
        Ok(())
    }

    pub fn pulse_duration(&self) -> f64 {
        self.steps as f64 * self.delta_t
    }

    pub fn bandwidth(&self) -> f64 {
        self.delta_f * self.steps as f64
    }

    /// 1-based step index `k = min(K, ⌊t/Δt⌋ + 1)`; `t` must be non-negative.
    pub(crate) fn step_index(&self, t: f64) -> usize {
        let k = (t / self.delta_t).floor();
        if k < 0.0 {
            1
        } else {
            (k as usize + 1).min(self.steps)
        }
    }

    /// Start time of 1-based step `k`.
    pub(crate) fn step_start(&self, k: usize) -> f64 {
        (k - 1) as f64 * self.delta_t
    }

    /// Frequency of 1-based step `k`: `(k-1)·Δf + f0`.
    pub(crate) fn step_frequency(&self, k: usize) -> f64 {
        (k - 1) as f64 * self.delta_f + self.f0
    }

    /// Frequency at `t ∈ [0, K·Δt]`.
    pub fn frequency(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        Ok(self.step_frequency(self.step_index(t)))
    }

    fn check_domain(&self, t: f64) -> Result<()> {
        if !(0.0..=self.pulse_duration()).contains(&t) {
            return Err(JcsError::Domain(format!(
                "t = {t} s outside pulse [0, {}]",
                self.pulse_duration()
            )));
        }
        Ok(())
    }

    /// Continuous phase (cycles) accumulated up to `t`.
    pub fn phase(&self, t: f64) -> Result<f64> {
        self.check_domain(t)?;
        Ok(self.phase_unchecked(t))
    }

    pub(crate) fn phase_unchecked(&self, t: f64) -> f64 {
        let k = self.step_index(t);
        let km1 = (k - 1) as f64;
        let at_step_start = self.delta_t * (km1 * self.f0 + self.delta_f * km1 * (km1 - 1.0) * 0.5);
        self.theta0 + at_step_start + self.step_frequency(k) * (t - self.step_start(k))
    }
}

/// Free-function form of [`SfCarrier::frequency`].
pub fn sf_frequency(t: f64, carrier: &SfCarrier) -> Result<f64> {
    carrier.frequency(t)
}

/// Either radar carrier.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Carrier {
    Fmcw(FmcwCarrier),
    Sf(SfCarrier),
}

impl Carrier {
    pub fn pulse_duration(&self) -> f64 {
        match self {
            Carrier::Fmcw(c) => c.pulse_duration,
            Carrier::Sf(c) => c.pulse_duration(),
        }
    }

    pub fn rf_hz(&self) -> f64 {
        match self {
            Carrier::Fmcw(c) => c.rf_hz,
            Carrier::Sf(c) => c.rf_hz,
        }
    }

    pub(crate) fn phase_unchecked(&self, t: f64) -> f64 {
        match self {
            Carrier::Fmcw(c) => c.phase_unchecked(t),
            Carrier::Sf(c) => c.phase_unchecked(t),
        }
    }
}

impl From<FmcwCarrier> for Carrier {
    fn from(c: FmcwCarrier) -> Self {
        Carrier::Fmcw(c)
    }
}

impl From<SfCarrier> for Carrier {
    fn from(c: SfCarrier) -> Self {
        Carrier::Sf(c)
    }
}

/// Unit-amplitude carrier sampled over one pulse: sample `n` is
/// `exp(j2π·θ(n/fs))`.
pub fn synthesize_carrier(carrier: impl Into<Carrier>, sample_rate: f64) -> Result<ComplexSignal> {
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(JcsError::param(format!(
            "sample rate must be > 0, got {sample_rate}"
        )));
    }
    let carrier = carrier.into();
    let n = samples_in(carrier.pulse_duration(), sample_rate);
    ComplexSignal::from_fn(n, sample_rate, |t| cis_cycles(carrier.phase_unchecked(t)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp;

    fn chirp(slope: f64, tp: f64) -> FmcwCarrier {
        FmcwCarrier::new(slope, 0.0, tp).unwrap()
    }

    #[test]
    fn fmcw_phase_values() {
        let c = chirp(30e12, 10e-6);
        assert_eq!(fmcw_phase(0.0, &c).unwrap(), 0.0);
        assert!((fmcw_phase(1e-6, &c).unwrap() - 15.0).abs() < 1e-9);
        let t1 = chirp(29.98e12, 60e-6);
        let expected = 0.5 * 29.98e12 * 60e-6 * 60e-6;
        assert_eq!(fmcw_phase(60e-6, &t1).unwrap(), expected);
    }

    #[test]
    fn fmcw_phase_rejects_outside_pulse() {
        let c = chirp(30e12, 10e-6);
        assert!(matches!(c.phase(-1e-9), Err(JcsError::Domain(_))));
        assert!(matches!(c.phase(10.1e-6), Err(JcsError::Domain(_))));
    }

    #[test]
    fn sf_frequency_steps() {
        let dt = 117.1875e-9;
        let c = SfCarrier::new(1e6, dt, 512, 0.0).unwrap();
        assert_eq!(sf_frequency(0.0, &c).unwrap(), 0.0);
        assert_eq!(sf_frequency(3.5 * dt, &c).unwrap(), 3e6);
        let last = c.pulse_duration() * (1.0 - 1e-12);
        assert_eq!(sf_frequency(last, &c).unwrap(), 511e6);
        assert_eq!(sf_frequency(c.pulse_duration(), &c).unwrap(), 511e6);
        assert!(sf_frequency(c.pulse_duration() * 1.01, &c).is_err());
    }

    #[test]
    fn sf_phase_is_continuous_at_steps() {
        let c = SfCarrier::new(3e6, 100e-9, 16, 1e6).unwrap();
        for k in 2..=16 {
            let tb = c.step_start(k);
            let before = c.phase_unchecked(tb - 1e-15);
            let after = c.phase_unchecked(tb);
            assert!((after - before).abs() < 1e-6, "jump at step {k}");
        }
    }

    #[test]
    fn synthesized_length_and_modulus() {
        let c = chirp(30e12, 10e-6);
        let s = synthesize_carrier(c, 100e6).unwrap();
        assert_eq!(s.len(), 1000);
        assert!(s.samples().iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        assert!(synthesize_carrier(c, 0.0).is_err());
        assert!(synthesize_carrier(c, -5.0).is_err());
    }

    #[test]
    fn equal_bandwidth_pairing() {
        let f = chirp(29.98e12, 60e-6);
        let sf = SfCarrier::matching(&f, 512).unwrap();
        assert_eq!(sf.bandwidth(), f.bandwidth());
        assert_eq!(sf.pulse_duration(), f.pulse_duration);
    }

    #[test]
    fn fmcw_instantaneous_frequency_is_linear() {
        // fs >= 10·B_s; finite difference of the unwrapped phase.
        let c = FmcwCarrier::new(1e12, 0.0, 10e-6).unwrap();
        let fs = 10.0 * c.bandwidth();
        let s = synthesize_carrier(c, fs).unwrap();
        let z = s.samples();
        let mut worst: f64 = 0.0;
        for n in 1..z.len() - 1 {
            let dphi = (z[n + 1] * z[n].conj()).arg();
            let f_est = dphi / TAU * fs;
            // midpoint of the difference interval
            let t_mid = (n as f64 + 0.5) / fs;
            let f_true = c.frequency(t_mid);
            if f_true > 0.0 {
                worst = worst.max(((f_est - f_true) / f_true).abs());
            }
        }
        assert!(worst <= 1e-6, "max relative error {worst}");
    }

    #[test]
    fn sf_segment_dft_peak_matches_step_frequency() {
        let fs = 64e6;
        let c = SfCarrier::new(1e6, 4e-6, 8, 0.0).unwrap();
        let s = synthesize_carrier(c, fs).unwrap();
        let per = samples_in(c.delta_t, fs);
        for k in 1..=c.steps {
            let seg = &s.samples()[(k - 1) * per..k * per];
            let mut p = vec![0.0; per];
            dsp::accumulate_power(seg, &mut p);
            let bin = dsp::argmax(&p) as f64;
            let f = bin * fs / per as f64;
            let expected = sf_frequency(c.step_start(k) + 1e-9, &c).unwrap();
            assert!(
                (f - expected).abs() <= fs / per as f64,
                "step {k}: {f} vs {expected}"
            );
        }
    }
}
