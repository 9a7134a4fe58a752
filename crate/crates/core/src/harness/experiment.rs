use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::config::{ExperimentConfig, PointSetup, SchemeKind};
use crate::analysis::comm_metrics;
use crate::channel::{comm_received_waveform, radar_return_waveform, rng_stream, stream};
use crate::error::Result;
use crate::modulation::{SchemeConfig, SymbolStream, Waveform};
use crate::ranging::{
    beat_signal, ml_bin_grid, range_carrier_sync, range_freq_domain_ml, range_fsk_sf, RangingMethod,
};
use crate::receiver::{demod_fsk_sf, demod_qam_fmcw};

/// One CSV row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub axis: f64,
    pub series: String,
    pub mean: f64,
    pub std: f64,
    pub trials: usize,
}

/// Raw per-trial values of one metric at one axis point. Trials that failed
/// or produced a non-finite value hold `NaN`.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricSamples {
    pub metric: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PointResult {
    pub axis: f64,
    pub metrics: Vec<MetricSamples>,
}

impl PointResult {
    pub fn get(&self, metric: &str) -> Option<&[f64]> {
        self.metrics
            .iter()
            .find(|m| m.metric == metric)
            .map(|m| m.values.as_slice())
    }
}

/// Seed of trial `trial`, shared by every axis point and series so that
/// comparisons along the sweep use common random numbers.
pub fn trial_seed(master: u64, trial: u64) -> u64 {
    // SplitMix64 finalizer over the pair.
    let mut z = master ^ trial.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

pub fn range_metric(m: RangingMethod) -> String {
    format!("range_sq_err/{}", m.name())
}

fn metric_names(cfg: &ExperimentConfig) -> Vec<String> {
    let mut names: Vec<String> = cfg.estimators().into_iter().map(range_metric).collect();
    if cfg.comm {
        names.push("ser".into());
        names.push("ber".into());
    }
    names
}

/// Runs a single trial and returns one value per metric name, in order.
fn run_trial(cfg: &ExperimentConfig, setup: &PointSetup, seed: u64) -> Vec<f64> {
    let estimators = cfg.estimators();
    let n_metrics = estimators.len() + if cfg.comm { 2 } else { 0 };
    trial_values(cfg, setup, seed, &estimators).unwrap_or_else(|_| vec![f64::NAN; n_metrics])
}

fn trial_values(
    cfg: &ExperimentConfig,
    setup: &PointSetup,
    seed: u64,
    estimators: &[RangingMethod],
) -> Result<Vec<f64>> {
    let fs = setup.sample_rate;
    let scheme = setup.scheme;
    let sym = SymbolStream::random(
        scheme.scheme(),
        scheme.order(),
        scheme.symbols_per_pulse(),
        &mut rng_stream(seed, stream::SYMBOLS),
    )?;
    let wave = Waveform::new(&sym, scheme)?;
    let mut scen = setup.scenario;
    scen.seed = seed;
    let truth = scen.distance;
    let mut out = Vec::with_capacity(estimators.len() + 2);

    let r = radar_return_waveform(&wave, &scen, fs)?;
    match scheme {
        SchemeConfig::QamFmcw(q) => {
            let beat = beat_signal(&r, &q)?;
            for m in estimators {
                let est = match m {
                    RangingMethod::CarrierSync => range_carrier_sync(&beat, &q)?,
                    RangingMethod::FreqDomainMl => {
                        range_freq_domain_ml(&beat, &q, &sym, &ml_bin_grid(&q, fs))?
                    }
                    RangingMethod::FskSf => unreachable!("validated"),
                };
                out.push((est.d_hat - truth).powi(2));
            }
        }
        SchemeConfig::FskSf(f) => {
            for _ in estimators {
                let est = range_fsk_sf(&r, &f, &sym)?;
                out.push((est.d_hat - truth).powi(2));
            }
        }
    }

    if cfg.comm {
        let rx = comm_received_waveform(&wave, &scen, fs)?.scaled(1.0 / scen.gain.sqrt());
        let d = match scheme {
            SchemeConfig::QamFmcw(q) => demod_qam_fmcw(&rx, &q)?,
            SchemeConfig::FskSf(f) => demod_fsk_sf(&rx, &f)?,
        }
        .compare(&sym)?;
        let ns = sym.len() as f64;
        out.push(d.symbol_errors as f64 / ns);
        out.push(d.bit_errors as f64 / (ns * sym.bits_per_symbol() as f64));
    }
    Ok(out)
}

/// Per-trial metric values at every axis point.
pub fn run_points(cfg: &ExperimentConfig) -> Result<Vec<PointResult>> {
    cfg.validate()?;
    let names = metric_names(cfg);
    let seeds: Vec<u64> = (0..cfg.trials as u64)
        .map(|t| trial_seed(cfg.seed, t))
        .collect();
    let mut points = Vec::with_capacity(cfg.sweep.values.len());
    for &v in &cfg.sweep.values {
        let setup = cfg.point(v)?;
        let rows: Vec<Vec<f64>> = seeds
            .par_iter()
            .map(|&s| run_trial(cfg, &setup, s))
            .collect();
        let mut metrics: Vec<MetricSamples> = names
            .iter()
            .map(|n| MetricSamples {
                metric: n.clone(),
                values: Vec::with_capacity(rows.len()),
            })
            .collect();
        for row in rows {
            for (m, x) in metrics.iter_mut().zip(row) {
                m.values.push(if x.is_finite() { x } else { f64::NAN });
            }
        }
        if cfg.scheme == SchemeKind::QamFmcw {
            if let SchemeConfig::QamFmcw(q) = setup.scheme {
                let cm = comm_metrics(
                    &q,
                    setup.scenario.gain,
                    setup.scenario.noise_variance,
                    setup.sample_rate,
                );
                metrics.push(MetricSamples {
                    metric: "throughput_bps".into(),
                    values: vec![cm.throughput_bps],
                });
            }
        }
        points.push(PointResult { axis: v, metrics });
    }
    Ok(points)
}

/// Mean and sample standard deviation of the finite entries, with their count.
pub fn summarize(values: &[f64]) -> (f64, f64, usize) {
    let good: Vec<f64> = values.iter().copied().filter(|x| x.is_finite()).collect();
    let n = good.len();
    if n == 0 {
        return (f64::NAN, f64::NAN, 0);
    }
    let mean = good.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        good.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64
    } else {
        0.0
    };
    (mean, var.sqrt(), n)
}

/// Paired z statistic of `mean(b − a)`; positive when `b` is larger.
pub fn paired_z(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a
        .iter()
        .zip(b)
        .filter(|(x, y)| x.is_finite() && y.is_finite())
        .map(|(x, y)| y - x)
        .collect();
    let (mean, sd, n) = summarize(&d);
    if n < 2 {
        return 0.0;
    }
    if sd == 0.0 {
        return if mean > 0.0 {
            f64::INFINITY
        } else if mean < 0.0 {
            f64::NEG_INFINITY
        } else {
            0.0
        };
    }
    mean / (sd / (n as f64).sqrt())
}

/// Collapses raw points into CSV rows. Series are `metric` or
/// `metric/label`. Trials dropped as non-finite are reported in an extra
/// `warning/dropped_trials/...` row whose mean is the dropped count.
pub fn to_records(points: &[PointResult], label: &str) -> Vec<SweepRecord> {
    let mut out = Vec::new();
    for p in points {
        for m in &p.metrics {
            let series = if label.is_empty() {
                m.metric.clone()
            } else {
                format!("{}/{label}", m.metric)
            };
            let (mean, std, n) = summarize(&m.values);
            let dropped = m.values.len() - n;
            if n > 0 {
                out.push(SweepRecord {
                    axis: p.axis,
                    series: series.clone(),
                    mean,
                    std,
                    trials: n,
                });
            }
            if dropped > 0 {
                out.push(SweepRecord {
                    axis: p.axis,
                    series: format!("warning/dropped_trials/{series}"),
                    mean: dropped as f64,
                    std: 0.0,
                    trials: m.values.len(),
                });
            }
        }
    }
    out
}

/// Runs the sweep and returns its CSV rows.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Vec<SweepRecord>> {
    Ok(to_records(&run_points(cfg)?, &cfg.name))
}
