use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::analysis::rect_obw_constant;
use crate::channel::{ChannelScenario, Reflection};
use crate::error::{JcsError, Result};
use crate::modulation::{FskSfConfig, QamFmcwConfig, SchemeConfig};
use crate::ranging::RangingMethod;
use crate::waveform::{FmcwCarrier, SfCarrier};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeKind {
    QamFmcw,
    FskSf,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Axis {
    /// Per-sample noise variance relative to unit signal power.
    NoisePower,
    SymbolsPerPulse,
    SampleRate,
    ModulationOrder,
    /// Symbols per pulse at a fixed total bandwidth; the chirp slope shrinks
    /// as the symbol bandwidth `κ·Ns/Tp` grows.
    BandwidthSplit,
}

impl Axis {
    pub fn name(&self) -> &'static str {
        match self {
            Axis::NoisePower => "noise_power",
            Axis::SymbolsPerPulse => "symbols_per_pulse",
            Axis::SampleRate => "sample_rate",
            Axis::ModulationOrder => "modulation_order",
            Axis::BandwidthSplit => "bandwidth_split",
        }
    }
}

fn zero() -> f64 {
    0.0
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CarrierParams {
    /// Chirp slope in Hz/s. For FSK-SF the ladder matches `slope·Tp` in
    /// bandwidth.
    pub slope: f64,
    pub pulse_duration: f64,
    #[serde(default = "zero")]
    pub f0: f64,
    #[serde(default = "zero")]
    pub rf_hz: f64,
    /// Number of frequency steps; FSK-SF only.
    #[serde(default)]
    pub steps: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModulationParams {
    pub order: usize,
    pub symbols_per_pulse: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioParams {
    pub distance: f64,
    #[serde(default = "one")]
    pub gain: f64,
    #[serde(default = "zero")]
    pub noise_variance: f64,
    /// Draw a uniform reflection phase per trial.
    #[serde(default)]
    pub random_phase: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepParams {
    pub axis: Axis,
    pub values: Vec<f64>,
    /// Fixed `B_s + B_c` in Hz for the bandwidth-split axis.
    #[serde(default)]
    pub total_bandwidth: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub name: String,
    pub scheme: SchemeKind,
    pub sample_rate: f64,
    pub trials: usize,
    #[serde(default)]
    pub seed: u64,
    /// Ranging estimators to run; empty means the scheme default.
    #[serde(default)]
    pub estimators: Vec<RangingMethod>,
    /// Also run the communication receiver and report SER/BER.
    #[serde(default)]
    pub comm: bool,
    pub carrier: CarrierParams,
    pub modulation: ModulationParams,
    pub scenario: ScenarioParams,
    pub sweep: SweepParams,
}

/// Fully resolved settings for one axis value.
#[derive(Debug, Clone)]
pub struct PointSetup {
    pub scheme: SchemeConfig,
    pub scenario: ChannelScenario,
    pub sample_rate: f64,
}

fn bad(path: &str, msg: impl Into<String>) -> JcsError {
    JcsError::config(path, msg)
}

fn positive(path: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(bad(
            path,
            format!("must be a finite positive number, got {v}"),
        ))
    }
}

fn whole(path: &str, v: f64) -> Result<usize> {
    if v.is_finite() && v >= 1.0 && v.fract() == 0.0 {
        Ok(v as usize)
    } else {
        Err(bad(path, format!("must be a positive integer, got {v}")))
    }
}

/// Dotted key path (`section.key`) of the TOML line holding byte `pos`.
fn key_path_at(text: &str, pos: usize) -> String {
    let pos = pos.min(text.len());
    let head = &text[..pos];
    let line_start = head.rfind('\n').map_or(0, |i| i + 1);
    let line_end = text[pos..].find('\n').map_or(text.len(), |i| pos + i);
    let line = text[line_start..line_end].trim();
    let key = line
        .split_once('=')
        .map(|(k, _)| k.trim().trim_matches('"').to_string());
    let section = head[..line_start]
        .lines()
        .rev()
        .map(str::trim)
        .find(|l| l.starts_with('['))
        .map(|l| l.trim_matches(|c| c == '[' || c == ']').trim().to_string());
    let section = if line.starts_with('[') {
        Some(
            line.trim_matches(|c| c == '[' || c == ']')
                .trim()
                .to_string(),
        )
    } else {
        section
    };
    match (section, key) {
        (Some(s), Some(k)) => format!("{s}.{k}"),
        (None, Some(k)) => k,
        (Some(s), None) => s,
        (None, None) => "<root>".into(),
    }
}

impl ExperimentConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        let cfg: Self = toml::from_str(text).map_err(|e| {
            let path = e
                .span()
                .map(|s| key_path_at(text, s.start))
                .unwrap_or_else(|| "<root>".into());
            bad(&path, e.message().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        Self::from_toml_str(&text)
    }

    pub fn to_toml_string(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    /// Estimators actually run.
    pub fn estimators(&self) -> Vec<RangingMethod> {
        if !self.estimators.is_empty() {
            return self.estimators.clone();
        }
        match self.scheme {
            SchemeKind::QamFmcw => vec![RangingMethod::CarrierSync],
            SchemeKind::FskSf => vec![RangingMethod::FskSf],
        }
    }

    /// Checks every field and every axis point.
    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(bad("trials", "must be >= 1"));
        }
        positive("sample_rate", self.sample_rate)?;
        positive("carrier.slope", self.carrier.slope)?;
        positive("carrier.pulse_duration", self.carrier.pulse_duration)?;
        if !(self.carrier.f0.is_finite() && self.carrier.f0 >= 0.0) {
            return Err(bad("carrier.f0", "must be >= 0"));
        }
        if !self.carrier.rf_hz.is_finite() {
            return Err(bad("carrier.rf_hz", "must be finite"));
        }
        match (self.scheme, self.carrier.steps) {
            (SchemeKind::FskSf, None) => return Err(bad("carrier.steps", "required for fsk_sf")),
            (SchemeKind::FskSf, Some(0)) => return Err(bad("carrier.steps", "must be >= 1")),
            (SchemeKind::QamFmcw, Some(_)) => {
                return Err(bad("carrier.steps", "only valid for fsk_sf"))
            }
            _ => {}
        }
        if !(self.scenario.distance.is_finite() && self.scenario.distance >= 0.0) {
            return Err(bad("scenario.distance", "must be >= 0"));
        }
        positive("scenario.gain", self.scenario.gain)?;
        if !(self.scenario.noise_variance.is_finite() && self.scenario.noise_variance >= 0.0) {
            return Err(bad("scenario.noise_variance", "must be >= 0"));
        }
        for m in self.estimators() {
            let ok = match self.scheme {
                SchemeKind::QamFmcw => m != RangingMethod::FskSf,
                SchemeKind::FskSf => m == RangingMethod::FskSf,
            };
            if !ok {
                return Err(bad(
                    "estimators",
                    format!("{} does not apply to this scheme", m.name()),
                ));
            }
        }
        if self.sweep.values.is_empty() {
            return Err(bad("sweep.values", "must not be empty"));
        }
        if self.sweep.axis == Axis::BandwidthSplit {
            match self.sweep.total_bandwidth {
                Some(b) => positive("sweep.total_bandwidth", b)?,
                None => return Err(bad("sweep.total_bandwidth", "required for bandwidth_split")),
            }
            if self.scheme != SchemeKind::QamFmcw {
                return Err(bad(
                    "sweep.axis",
                    "bandwidth_split applies to qam_fmcw only",
                ));
            }
        }
        for (i, &v) in self.sweep.values.iter().enumerate() {
            self.point(v).map_err(|e| match e {
                JcsError::Config { .. } => e,
                other => bad(&format!("sweep.values[{i}]"), other.to_string()),
            })?;
        }
        Ok(())
    }

    /// Resolves the configuration at axis value `value`.
    pub fn point(&self, value: f64) -> Result<PointSetup> {
        let path = "sweep.values";
        let mut fs = self.sample_rate;
        let mut order = self.modulation.order;
        let mut ns = self.modulation.symbols_per_pulse;
        let mut slope = self.carrier.slope;
        let mut noise = self.scenario.noise_variance;
        let tp = self.carrier.pulse_duration;
        match self.sweep.axis {
            Axis::NoisePower => {
                if !(value.is_finite() && value >= 0.0) {
                    return Err(bad(path, format!("noise power must be >= 0, got {value}")));
                }
                noise = value;
            }
            Axis::SymbolsPerPulse => ns = whole(path, value)?,
            Axis::SampleRate => {
                positive(path, value)?;
                fs = value;
            }
            Axis::ModulationOrder => order = whole(path, value)?,
            Axis::BandwidthSplit => {
                ns = whole(path, value)?;
                let total = self.sweep.total_bandwidth.unwrap_or(0.0);
                let b_c = rect_obw_constant() * ns as f64 / tp;
                if b_c >= total {
                    return Err(bad(
                        path,
                        format!("symbol bandwidth {b_c:e} Hz leaves nothing for sensing"),
                    ));
                }
                slope = (total - b_c) / tp;
            }
        }
        let wrap = |field: &'static str| move |e: JcsError| bad(field, e.to_string());
        let scheme: SchemeConfig = match self.scheme {
            SchemeKind::QamFmcw => {
                let carrier = FmcwCarrier::new(slope, self.carrier.f0, tp)
                    .map_err(wrap("carrier"))?
                    .with_rf(self.carrier.rf_hz);
                QamFmcwConfig::new(order, ns, carrier)
                    .map_err(wrap("modulation"))?
                    .into()
            }
            SchemeKind::FskSf => {
                let fm = FmcwCarrier::new(slope, self.carrier.f0, tp).map_err(wrap("carrier"))?;
                let steps = self.carrier.steps.unwrap_or(0);
                let sf = SfCarrier::matching(&fm, steps)
                    .map_err(wrap("carrier.steps"))?
                    .with_rf(self.carrier.rf_hz);
                FskSfConfig::new(order, ns, sf)
                    .map_err(wrap("modulation"))?
                    .into()
            }
        };
        let scenario = ChannelScenario {
            distance: self.scenario.distance,
            gain: self.scenario.gain,
            noise_variance: noise,
            reflection: if self.scenario.random_phase {
                Reflection::Random
            } else {
                Reflection::default()
            },
            ..ChannelScenario::default()
        };
        if scenario.round_trip_delay() >= tp {
            return Err(bad(
                "scenario.distance",
                "round-trip delay must be shorter than the pulse",
            ));
        }
        Ok(PointSetup {
            scheme,
            scenario,
            sample_rate: fs,
        })
    }
}
