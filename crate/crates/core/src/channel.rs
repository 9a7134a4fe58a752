//! Point-target radar echo and the synchronized one-way communication link.

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{JcsError, Result};
use crate::modulation::{check_rate, SchemeConfig, SymbolStream, Waveform};
use crate::signal::ComplexSignal;
use crate::waveform::{cis_cycles, samples_in};
use crate::SPEED_OF_LIGHT;

/// Independent random streams derived from one seed.
pub mod stream {
    pub const SYMBOLS: u64 = 1;
    pub const RADAR_NOISE: u64 = 2;
    pub const COMM_NOISE: u64 = 3;
    pub const TARGET_PHASE: u64 = 4;
}

/// Generator for `stream` of `seed`.
pub fn rng_stream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Phase added by the reflection, in cycles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Reflection {
    Fixed {
        cycles: f64,
    },
    /// Uniform on `[0, 1)` cycles, drawn from the seed.
    Random,
}

impl Default for Reflection {
    fn default() -> Self {
        Reflection::Fixed { cycles: 0.0 }
    }
}

fn default_c() -> f64 {
    SPEED_OF_LIGHT
}

fn default_gain() -> f64 {
    1.0
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ChannelScenario {
    /// One-way distance to the target in metres.
    pub distance: f64,
    /// Power gain `G`; the received power is `P_r = P_t·G`.
    #[serde(default = "default_gain")]
    pub gain: f64,
    /// Per-sample complex noise variance `σ² = N0·fs`.
    #[serde(default)]
    pub noise_variance: f64,
    #[serde(default = "default_c")]
    pub speed_of_light: f64,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub reflection: Reflection,
}

impl Default for ChannelScenario {
    fn default() -> Self {
        Self {
            distance: 0.0,
            gain: 1.0,
            noise_variance: 0.0,
            speed_of_light: SPEED_OF_LIGHT,
            seed: 0,
            reflection: Reflection::default(),
        }
    }
}

impl ChannelScenario {
    pub fn new(distance: f64, gain: f64, noise_variance: f64, seed: u64) -> Result<Self> {
        let s = Self {
            distance,
            gain,
            noise_variance,
            seed,
            ..Self::default()
        };
        s.validate()?;
        Ok(s)
    }

    /// Sets the noise from a PSD `N0` (W/Hz) at the given sample rate.
    pub fn with_noise_psd(mut self, n0: f64, sample_rate: f64) -> Self {
        self.noise_variance = n0 * sample_rate;
        self
    }

    pub fn noise_psd(&self, sample_rate: f64) -> f64 {
        self.noise_variance / sample_rate
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.distance.is_finite() && self.distance >= 0.0) {
            return Err(JcsError::param(format!(
                "distance must be >= 0, got {}",
                self.distance
            )));
        }
        if !(self.gain.is_finite() && self.gain > 0.0) {
            return Err(JcsError::param(format!(
                "gain must be > 0, got {}",
                self.gain
            )));
        }
        if !(self.noise_variance.is_finite() && self.noise_variance >= 0.0) {
            return Err(JcsError::param(format!(
                "noise variance must be >= 0, got {}",
                self.noise_variance
            )));
        }
        if !(self.speed_of_light.is_finite() && self.speed_of_light > 0.0) {
            return Err(JcsError::param("propagation speed must be > 0"));
        }
        if let Reflection::Fixed { cycles } = self.reflection {
            if !cycles.is_finite() {
                return Err(JcsError::param("reflection phase must be finite"));
            }
        }
        Ok(())
    }

    /// `τ = 2d/c`.
    pub fn round_trip_delay(&self) -> f64 {
        2.0 * self.distance / self.speed_of_light
    }

    pub fn one_way_delay(&self) -> f64 {
        self.distance / self.speed_of_light
    }

    /// Reflection phase for this scenario's seed.
    pub fn reflection_phase(&self) -> f64 {
        match self.reflection {
            Reflection::Fixed { cycles } => cycles,
            Reflection::Random => rng_stream(self.seed, stream::TARGET_PHASE).random::<f64>(),
        }
    }
}

/// Adds circular complex Gaussian noise of total variance `variance`.
pub fn add_noise(samples: &mut [Complex64], variance: f64, rng: &mut impl Rng) {
    if variance <= 0.0 {
        return;
    }
    let s = (variance / 2.0).sqrt();
    for z in samples {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        *z += Complex64::new(s * re, s * im);
    }
}

/// Echo of `wave` from the scenario's target.
///
/// For `t ≥ τ` the sample is `√G·s(t−τ)·exp(−j2π f_rf τ)·exp(j2πψ)`, with
/// the delay applied inside the analytic waveform; earlier samples carry
/// noise only.
pub fn radar_return_waveform(
    wave: &Waveform,
    scen: &ChannelScenario,
    sample_rate: f64,
) -> Result<ComplexSignal> {
    scen.validate()?;
    check_rate(sample_rate)?;
    let tp = wave.pulse_duration();
    let tau = scen.round_trip_delay();
    if tau >= tp {
        return Err(JcsError::Scenario(format!(
            "target beyond unambiguous processing window: τ = {tau:e} s ≥ Tp = {tp:e} s"
        )));
    }
    let amp = scen.gain.sqrt();
    let extra = scen.reflection_phase() - wave.rf_hz() * tau;
    let n = samples_in(tp, sample_rate);
    let mut samples: Vec<Complex64> = (0..n)
        .map(|i| {
            let t = i as f64 / sample_rate;
            if t < tau {
                Complex64::new(0.0, 0.0)
            } else {
                let u = t - tau;
                amp * wave.amplitude(u) * cis_cycles(wave.phase(u) + extra)
            }
        })
        .collect();
    add_noise(
        &mut samples,
        scen.noise_variance,
        &mut rng_stream(scen.seed, stream::RADAR_NOISE),
    );
    ComplexSignal::new(samples, sample_rate, 0.0)
}

/// Radar echo of the pulse carrying `sym`.
pub fn radar_return(
    sym: &SymbolStream,
    cfg: impl Into<SchemeConfig>,
    scen: &ChannelScenario,
    sample_rate: f64,
) -> Result<ComplexSignal> {
    radar_return_waveform(&Waveform::new(sym, cfg)?, scen, sample_rate)
}

/// Signal at a synchronized communication receiver: `√G·s(t)` plus noise.
pub fn comm_received_waveform(
    wave: &Waveform,
    scen: &ChannelScenario,
    sample_rate: f64,
) -> Result<ComplexSignal> {
    scen.validate()?;
    let amp = scen.gain.sqrt();
    let mut samples = wave.sample(sample_rate)?.into_samples();
    for z in samples.iter_mut() {
        *z *= amp;
    }
    add_noise(
        &mut samples,
        scen.noise_variance,
        &mut rng_stream(scen.seed, stream::COMM_NOISE),
    );
    ComplexSignal::new(samples, sample_rate, 0.0)
}

pub fn comm_received(
    sym: &SymbolStream,
    cfg: impl Into<SchemeConfig>,
    scen: &ChannelScenario,
    sample_rate: f64,
) -> Result<ComplexSignal> {
    comm_received_waveform(&Waveform::new(sym, cfg)?, scen, sample_rate)
}
