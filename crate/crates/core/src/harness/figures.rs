//! Preset sweeps that regenerate the published figures.

use serde::{Deserialize, Serialize};

use super::config::{
    Axis, CarrierParams, ExperimentConfig, ModulationParams, ScenarioParams, SchemeKind,
    SweepParams,
};
use super::experiment::{run_points, to_records, PointResult, SweepRecord};
use crate::error::{JcsError, Result};
use crate::ranging::RangingMethod;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scale {
    /// 10³ pulses per point.
    Desk,
    /// 5·10⁴ pulses per point.
    Full,
}

impl Scale {
    pub fn trials(&self) -> usize {
        match self {
            Scale::Desk => 1_000,
            Scale::Full => 50_000,
        }
    }
}

impl std::str::FromStr for Scale {
    type Err = JcsError;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "desk" => Ok(Scale::Desk),
            "full" => Ok(Scale::Full),
            other => Err(JcsError::param(format!(
                "unknown scale `{other}` (desk|full)"
            ))),
        }
    }
}

pub const FIGURES: [&str; 6] = ["fig3", "fig4", "fig5", "fig6", "fig7", "fig8"];

/// Noise grid shared by the noise-axis figures.
pub const NOISE_GRID: [f64; 6] = [1e-3, 1e-2, 1e-1, 1.0, 10.0, 100.0];

/// QAM-FMCW reference setup: 100 m, 60 µs, 8 × 16QAM, 29.98 THz/s,
/// 77 GHz carrier, random reflection phase, sampled at 40 Msps.
pub fn qam_reference(trials: usize, seed: u64) -> ExperimentConfig {
    ExperimentConfig {
        name: String::new(),
        scheme: SchemeKind::QamFmcw,
        sample_rate: 40e6,
        trials,
        seed,
        estimators: vec![RangingMethod::CarrierSync],
        comm: false,
        carrier: CarrierParams {
            slope: 29.98e12,
            pulse_duration: 60e-6,
            f0: 0.0,
            rf_hz: 77e9,
            steps: None,
        },
        modulation: ModulationParams {
            order: 16,
            symbols_per_pulse: 8,
        },
        scenario: ScenarioParams {
            distance: 100.0,
            gain: 1.0,
            noise_variance: 0.0,
            random_phase: true,
        },
        sweep: SweepParams {
            axis: Axis::NoisePower,
            values: NOISE_GRID.to_vec(),
            total_bandwidth: None,
        },
    }
}

/// FSK-SF reference setup: 60 µs, 512 steps at the same swept
/// bandwidth as `qam_reference`, 8 × 8-FSK, 136 Msps, 100 m.
pub fn fsk_reference(trials: usize, seed: u64) -> ExperimentConfig {
    let mut c = qam_reference(trials, seed);
    c.scheme = SchemeKind::FskSf;
    c.sample_rate = 136e6;
    c.carrier.steps = Some(512);
    c.modulation.order = 8;
    c.estimators = vec![RangingMethod::FskSf];
    c
}

fn variants<T: Copy>(
    base: &ExperimentConfig,
    values: &[T],
    label: impl Fn(T) -> String,
    apply: impl Fn(&mut ExperimentConfig, T),
) -> Vec<ExperimentConfig> {
    values
        .iter()
        .map(|&v| {
            let mut c = base.clone();
            apply(&mut c, v);
            c.name = label(v);
            c
        })
        .collect()
}

/// Experiment configs making up figure `name`.
pub fn figure_configs(name: &str, scale: Scale, seed: u64) -> Result<Vec<ExperimentConfig>> {
    let n = scale.trials();
    let both = vec![RangingMethod::CarrierSync, RangingMethod::FreqDomainMl];
    let cfgs = match name {
        "fig3" => {
            let mut base = qam_reference(n, seed);
            base.estimators = both;
            variants(
                &base,
                &[50.0, 100.0, 150.0],
                |d| format!("d={d}"),
                |c, d| c.scenario.distance = d,
            )
        }
        "fig4" => {
            let mut base = qam_reference(n, seed);
            base.estimators = both;
            variants(
                &base,
                &[1usize, 2, 4, 8, 16],
                |k| format!("Ns={k}"),
                |c, k| c.modulation.symbols_per_pulse = k,
            )
        }
        "fig5" => variants(
            &qam_reference(n, seed),
            &[25e6, 40e6, 80e6, 160e6],
            |fs| format!("fs={}MHz", fs / 1e6),
            |c, fs| c.sample_rate = fs,
        ),
        "fig6" => variants(
            &qam_reference(n, seed),
            &[4usize, 16, 64],
            |m| format!("M={m}"),
            |c, m| c.modulation.order = m,
        ),
        "fig7" => {
            let mut base = qam_reference(n, seed);
            base.scenario.noise_variance = 1.0;
            base.comm = false;
            base.sweep = SweepParams {
                axis: Axis::BandwidthSplit,
                values: vec![1.0, 2.0, 4.0, 8.0, 16.0],
                total_bandwidth: Some(20e6),
            };
            variants(
                &base,
                &[4usize, 16],
                |m| format!("M={m}"),
                |c, m| c.modulation.order = m,
            )
        }
        "fig8" => {
            let base = fsk_reference(n, seed);
            let mut out = variants(
                &base,
                &[4usize, 8, 16],
                |k| format!("Ns={k},M=8"),
                |c, k| c.modulation.symbols_per_pulse = k,
            );
            out.extend(variants(
                &base,
                &[2usize, 4, 16],
                |m| format!("Ns=8,M={m}"),
                |c, m| c.modulation.order = m,
            ));
            out
        }
        other => {
            return Err(JcsError::param(format!(
                "unknown figure `{other}`; expected one of {}",
                FIGURES.join(", ")
            )))
        }
    };
    Ok(cfgs)
}

/// Raw per-trial results for every series of a figure.
pub fn figure_points(
    name: &str,
    scale: Scale,
    seed: u64,
) -> Result<Vec<(ExperimentConfig, Vec<PointResult>)>> {
    figure_configs(name, scale, seed)?
        .into_iter()
        .map(|c| {
            let p = run_points(&c)?;
            Ok((c, p))
        })
        .collect()
}

/// CSV rows for figure `name`.
pub fn reproduce_figure(name: &str, scale: Scale, seed: u64) -> Result<Vec<SweepRecord>> {
    Ok(figure_points(name, scale, seed)?
        .iter()
        .flat_map(|(c, p)| to_records(p, &c.name))
        .collect())
}
