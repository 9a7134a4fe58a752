//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::f64::consts::PI;
use std::time::{Duration, Instant};

use jcs_core::analysis::{bandwidth_partition_check, crb_range_mse, BoundForm};
use jcs_core::channel::{radar_return, ChannelScenario};
use jcs_core::harness::figures::{fsk_reference, qam_reference, NOISE_GRID};
use jcs_core::harness::{
    figure_configs, paired_z, run_points, summarize, write_csv, ExperimentConfig, PointResult,
    Scale,
};
use jcs_core::modulation::{
    FskSfConfig, QamFmcwConfig, Scheme, SchemeConfig, SymbolStream, Waveform,
};
use jcs_core::ranging::{
    beat_signal, range_carrier_sync, range_carrier_sync_with, range_fsk_sf, CarrierSyncOptions,
    Diagnostics, Segmentation,
};
use jcs_core::receiver::{demod_fsk_sf, demod_qam_fmcw};
use jcs_core::waveform::FmcwCarrier;
use jcs_core::SPEED_OF_LIGHT;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 7;
const CS: &str = "range_sq_err/carrier_sync";
const ML: &str = "range_sq_err/freq_domain_ml";

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn mse(p: &PointResult, metric: &str) -> f64 {
    summarize(p.get(metric).expect("metric present")).0
}

fn points(cfg: &ExperimentConfig) -> Vec<PointResult> {
    run_points(cfg).expect("sweep runs")
}

fn figure(name: &str) -> Vec<(ExperimentConfig, Vec<PointResult>)> {
    figure_configs(name, Scale::Desk, SEED)
        .expect("preset")
        .into_iter()
        .map(|c| {
            let p = points(&c);
            (c, p)
        })
        .collect()
}

fn c1_beat_frequency() -> Outcome {
    let fs = 100e6;
    let carrier = FmcwCarrier::new(30e12, 0.0, 10e-6).unwrap();
    let cfg = QamFmcwConfig::new(4, 1, carrier).unwrap();
    let sym = SymbolStream::new(Scheme::Qam, 4, vec![0]).unwrap();
    let scen = ChannelScenario::new(200.0, 1.0, 0.0, 0).unwrap();
    let r = radar_return(&sym, cfg, &scen, fs).unwrap();
    let beat = beat_signal(&r, &cfg).unwrap();
    let opts = CarrierSyncOptions {
        segmentation: Segmentation::WholePulse,
        ..Default::default()
    };
    let est = range_carrier_sync_with(&beat, &cfg, &opts).unwrap();
    let Diagnostics::CarrierSync(tr) = est.diagnostics else {
        return outcome(false, "missing trace");
    };
    let t_obs = carrier.pulse_duration - scen.round_trip_delay();
    let bin = 1.0 / t_obs;
    let exact = scen.round_trip_delay() * carrier.slope;
    let pass = (tr.beat_hz - 40e6).abs() <= bin && (tr.beat_hz - exact).abs() <= bin;
    outcome(
        pass,
        format!(
            "peak {:.4} MHz, τS {:.4} MHz, bin {:.1} kHz",
            tr.beat_hz / 1e6,
            exact / 1e6,
            bin / 1e3
        ),
    )
}

fn c2_loopback() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let mut errors = Vec::new();
    let fs = 40e6;
    let carrier = FmcwCarrier::new(29.98e12, 0.0, 60e-6).unwrap();
    for m in [4, 16, 64] {
        let cfg = QamFmcwConfig::new(m, 100, carrier).unwrap();
        let mut errs = 0;
        for _ in 0..100 {
            let sym = SymbolStream::random(Scheme::Qam, m, 100, &mut rng).unwrap();
            let s = Waveform::new(&sym, cfg).unwrap().sample(fs).unwrap();
            errs += demod_qam_fmcw(&s, &cfg)
                .unwrap()
                .compare(&sym)
                .unwrap()
                .symbol_errors;
        }
        errors.push((format!("{m}QAM"), errs));
    }
    let t2 = fsk_reference(1, SEED).point(0.0).unwrap();
    let SchemeConfig::FskSf(f) = t2.scheme else {
        unreachable!()
    };
    let cfg = FskSfConfig::new(8, 64, f.carrier).unwrap();
    let mut errs = 0;
    for _ in 0..157 {
        let sym = SymbolStream::random(Scheme::Fsk, 8, 64, &mut rng).unwrap();
        let s = Waveform::new(&sym, cfg)
            .unwrap()
            .sample(t2.sample_rate)
            .unwrap();
        errs += demod_fsk_sf(&s, &cfg)
            .unwrap()
            .compare(&sym)
            .unwrap()
            .symbol_errors;
    }
    errors.push(("8FSK".into(), errs));
    let pass = errors.iter().all(|(_, e)| *e == 0);
    let detail = errors
        .iter()
        .map(|(n, e)| format!("{n} {e}"))
        .collect::<Vec<_>>()
        .join(", ");
    outcome(pass, format!("symbol errors over >= 1e4 symbols: {detail}"))
}

fn c3_noiseless_ranging() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(SEED);
    let t1 = qam_reference(1, SEED).point(0.0).unwrap();
    let SchemeConfig::QamFmcw(q) = t1.scheme else {
        unreachable!()
    };
    let bin_m = SPEED_OF_LIGHT / (2.0 * q.carrier.slope * q.carrier.pulse_duration);
    let mut worst_cs: f64 = 0.0;
    for trial in 0..20 {
        let sym =
            SymbolStream::random(Scheme::Qam, q.order, q.symbols_per_pulse, &mut rng).unwrap();
        let mut scen = t1.scenario;
        scen.seed = trial;
        let r = radar_return(&sym, q, &scen, t1.sample_rate).unwrap();
        let est = range_carrier_sync(&beat_signal(&r, &q).unwrap(), &q).unwrap();
        worst_cs = worst_cs.max((est.d_hat - 100.0).abs());
    }
    let t2 = fsk_reference(1, SEED).point(0.0).unwrap();
    let SchemeConfig::FskSf(f) = t2.scheme else {
        unreachable!()
    };
    let fsk_tol = SPEED_OF_LIGHT / (2.0 * t2.sample_rate);
    let mut worst_fsk: f64 = 0.0;
    for trial in 0..5 {
        let sym =
            SymbolStream::random(Scheme::Fsk, f.order, f.symbols_per_pulse, &mut rng).unwrap();
        let mut scen = t2.scenario;
        scen.seed = trial;
        let r = radar_return(&sym, f, &scen, t2.sample_rate).unwrap();
        let est = range_fsk_sf(&r, &f, &sym).unwrap();
        worst_fsk = worst_fsk.max((est.d_hat - 100.0).abs());
    }
    outcome(
        worst_cs <= bin_m && worst_fsk <= fsk_tol,
        format!(
            "carrier sync worst {worst_cs:.2e} m (bin {bin_m:.4} m), FSK-SF worst {worst_fsk:.3} m (c/2fs {fsk_tol:.3} m)"
        ),
    )
}

fn c4_crb_oracle() -> Outcome {
    let slope = 29.98e12;
    let fs = 40e6;
    let gamma = 0.37;
    let c = SPEED_OF_LIGHT;
    let mut worst: f64 = 0.0;
    let carrier = FmcwCarrier::new(slope, 0.0, 60e-6).unwrap();
    for n in 1..=200usize {
        let closed = crb_range_mse(slope, gamma, n, 1.0 / fs, BoundForm::Exact).unwrap();
        for ns in [1usize, 8, 64] {
            // Fisher information for the beat frequency in Hz,
            // 4π²γδt²·Σ E|A⁽ⁿ⁾|²n². Every symbol slot draws from the same
            // unit-energy constellation, so Ns only changes which slot a
            // sample falls in.
            let cfg = QamFmcwConfig::new(16, ns, carrier).unwrap();
            let pts = cfg.constellation().points();
            let dt = 1.0 / fs;
            let mut slot_energy = vec![0.0; ns];
            for e in slot_energy.iter_mut() {
                *e = pts.iter().map(|p| p.norm_sqr()).sum::<f64>() / pts.len() as f64;
            }
            let sum: f64 = (1..=n)
                .map(|k| slot_energy[cfg.symbol_index((k - 1) as f64 * dt)] * (k * k) as f64)
                .sum();
            let fisher_f = 4.0 * PI * PI * gamma * dt * dt * sum;
            let brute = c * c / (4.0 * slope * slope) / fisher_f;
            worst = worst.max((brute - closed).abs() / closed);
        }
    }
    outcome(
        worst < 1e-12,
        format!("max relative error {worst:.2e} over N = 1..200, Ns ∈ {{1, 8, 64}}"),
    )
}

fn c5_crb_dominance() -> Outcome {
    let mut cfg = qam_reference(10_000, SEED);
    cfg.sweep.values = NOISE_GRID.to_vec();
    let setup = cfg.point(1.0).unwrap();
    let SchemeConfig::QamFmcw(q) = setup.scheme else {
        unreachable!()
    };
    let n = q.samples_per_pulse(cfg.sample_rate);
    let pts = points(&cfg);
    let mut ok = true;
    let mut parts = Vec::new();
    for p in &pts {
        let (mean, std, k) = summarize(p.get(CS).unwrap());
        let gamma = cfg.scenario.gain / p.axis;
        let bound = crb_range_mse(
            q.carrier.slope,
            gamma,
            n,
            1.0 / cfg.sample_rate,
            BoundForm::Exact,
        )
        .unwrap();
        let upper = mean + 3.0 * std / (k as f64).sqrt();
        ok &= upper >= bound;
        parts.push(format!("σ²={}: {:.1}×", p.axis, mean / bound));
    }
    outcome(ok, format!("MSE/CRB {}", parts.join(", ")))
}

fn c6_fig3() -> Outcome {
    let res = figure("fig3");
    let t1 = qam_reference(1, SEED);
    let bin_m = SPEED_OF_LIGHT / (2.0 * t1.carrier.slope * t1.carrier.pulse_duration);
    let top = *NOISE_GRID.last().unwrap();
    let mut ml_worse = true;
    let mut cs_flat = true;
    let mut cs_grows = true;
    let mut parts = Vec::new();
    for (c, pts) in &res {
        for p in pts {
            let cs = mse(p, CS).sqrt();
            let ml = mse(p, ML).sqrt();
            ml_worse &= ml > cs;
            if p.axis < top {
                cs_flat &= cs <= bin_m;
            } else {
                cs_grows &= cs > bin_m;
                parts.push(format!("{} top-noise CS rmse {cs:.2} m", c.name));
            }
        }
    }
    outcome(
        ml_worse && cs_flat && cs_grows,
        format!(
            "ML rmse > CS rmse everywhere: {ml_worse}; CS rmse <= {bin_m:.4} m below σ²={top}: {cs_flat}; {}",
            parts.join(", ")
        ),
    )
}

fn c7_fig6() -> Outcome {
    let res = figure("fig6");
    let last = res[0].1.len() - 1;
    let hi = |i: usize| res[i].1[last].get(CS).unwrap();
    let z_4_16 = paired_z(hi(0), hi(1));
    let z_16_64 = paired_z(hi(1), hi(2));
    let low: Vec<f64> = res.iter().map(|(_, p)| mse(&p[0], CS)).collect();
    let ratio =
        low.iter().cloned().fold(f64::MIN, f64::max) / low.iter().cloned().fold(f64::MAX, f64::min);
    let highs: Vec<String> = res
        .iter()
        .map(|(c, p)| format!("{} {:.3e}", c.name, mse(&p[last], CS)))
        .collect();
    outcome(
        z_4_16 >= 2.0 && z_16_64 >= 2.0 && ratio <= 2.0,
        format!(
            "top-noise MSE {}; paired z 4→16 {z_4_16:+.2}, 16→64 {z_16_64:+.2} (need >= 2); low-noise spread {ratio:.2}×",
            highs.join(", ")
        ),
    )
}

fn c8_fig7() -> Outcome {
    let res = figure("fig7");
    let mut ok = true;
    let mut parts = Vec::new();
    for (c, pts) in &res {
        let thr: Vec<f64> = pts
            .iter()
            .map(|p| p.get("throughput_bps").unwrap()[0])
            .collect();
        let m: Vec<f64> = pts.iter().map(|p| mse(p, CS)).collect();
        let inc = |v: &[f64]| v.windows(2).all(|w| w[1] > w[0]);
        ok &= pts.len() >= 4 && inc(&thr) && inc(&m);
        parts.push(format!(
            "{}: throughput {:.2}→{:.2} Mbit/s, MSE {:.2e}→{:.2e}",
            c.name,
            thr[0] / 1e6,
            thr[thr.len() - 1] / 1e6,
            m[0],
            m[m.len() - 1]
        ));
    }
    let zs: Vec<f64> = (0..res[0].1.len())
        .map(|i| paired_z(res[0].1[i].get(CS).unwrap(), res[1].1[i].get(CS).unwrap()))
        .collect();
    ok &= zs.iter().all(|&z| z > -2.0);
    parts.push(format!(
        "paired z (16QAM − QPSK) {}",
        zs.iter()
            .map(|z| format!("{z:+.1}"))
            .collect::<Vec<_>>()
            .join(" ")
    ));
    outcome(ok, parts.join("; "))
}

fn c9_bandwidth() -> Outcome {
    let b_s = 10e6;
    let ns = 8;
    let kappa = jcs_core::analysis::rect_obw_constant();
    let mut ok = true;
    let mut parts = Vec::new();
    for b_c in [0.1e6, 0.5e6, 1e6, 2e6] {
        let tp = kappa * ns as f64 / b_c;
        let carrier = FmcwCarrier::new(b_s / tp, 0.0, tp).unwrap();
        let cfg = QamFmcwConfig::new(16, ns, carrier).unwrap();
        let fs = 4.0 * (b_s + b_c);
        let rep = bandwidth_partition_check(&cfg, fs).unwrap();
        let err = (rep.b_t_measured - (b_s + b_c)).abs() / (b_s + b_c);
        ok &= err <= 0.15;
        parts.push(format!("B_c {:.1} MHz: {:.1}%", b_c / 1e6, 100.0 * err));
    }
    outcome(
        ok,
        format!("|B_t − (B_s + B_c)|/(B_s + B_c): {}", parts.join(", ")),
    )
}

fn c10_determinism() -> Outcome {
    let run = |workers: usize| -> Vec<u8> {
        let pool = rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .unwrap();
        pool.install(|| {
            let mut cfgs = figure_configs("fig3", Scale::Desk, SEED).unwrap();
            let mut rows = Vec::new();
            for c in cfgs.iter_mut() {
                c.trials = 40;
                rows.extend(jcs_core::harness::run_experiment(c).unwrap());
            }
            let mut buf = Vec::new();
            write_csv(&rows, &mut buf).unwrap();
            buf
        })
    };
    let a = run(1);
    let b = run(1);
    let c = run(3);
    outcome(
        a == b && a == c,
        format!(
            "{} CSV bytes; same seed twice equal: {}, 1 vs 3 workers equal: {}",
            a.len(),
            a == b,
            a == c
        ),
    )
}

type Criterion = (&'static str, Option<Duration>, fn() -> Outcome);

fn main() {
    let criteria: Vec<Criterion> = vec![
        (
            "1 beat frequency",
            Some(Duration::from_secs(1)),
            c1_beat_frequency,
        ),
        (
            "2 noiseless loopback",
            Some(Duration::from_secs(10)),
            c2_loopback,
        ),
        (
            "3 noiseless ranging",
            Some(Duration::from_secs(5)),
            c3_noiseless_ranging,
        ),
        ("4 CRB oracle", None, c4_crb_oracle),
        (
            "5 CRB dominance",
            Some(Duration::from_secs(120)),
            c5_crb_dominance,
        ),
        ("6 fig3 shape", None, c6_fig3),
        ("7 fig6 shape", None, c7_fig6),
        ("8 fig7 tradeoff", None, c8_fig7),
        (
            "9 bandwidth additivity",
            Some(Duration::from_secs(60)),
            c9_bandwidth,
        ),
        ("10 determinism", None, c10_determinism),
    ];
    let mut failed = 0;
    for (name, budget, f) in criteria {
        let start = Instant::now();
        let mut o = f();
        let took = start.elapsed();
        if let Some(b) = budget {
            if took > b {
                o.pass = false;
                o.detail += &format!("; over the {}s budget", b.as_secs());
            }
        }
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} criterion {name} ({:.2}s): {}",
            if o.pass { "PASS" } else { "FAIL" },
            took.as_secs_f64(),
            o.detail
        );
    }
    println!("{failed} of 10 criteria failed");
    if failed > 0 {
        std::process::exit(1);
    }
}
