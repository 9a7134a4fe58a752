use jcs_core::analysis::{
    bandwidth_partition_check_with, estimate_psd, qam_ber_bound, rect_obw_constant,
};
use jcs_core::channel::{add_noise, rng_stream};
use jcs_core::modulation::{FskSfConfig, QamFmcwConfig, Scheme, SymbolStream, Waveform};
use jcs_core::receiver::{demod_fsk_sf, demod_qam_fmcw};
use jcs_core::waveform::{synthesize_carrier, FmcwCarrier, SfCarrier};
use jcs_core::ComplexSignal;
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn scaled(b_s: f64, tp: f64, ns: usize) -> QamFmcwConfig {
    QamFmcwConfig::new(16, ns, FmcwCarrier::new(b_s / tp, 0.0, tp).unwrap()).unwrap()
}

#[test]
fn psd_integrates_to_mean_power() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut x = vec![Complex64::new(0.3, -0.1); 4096];
    add_noise(&mut x, 2.0, &mut rng);
    let s = ComplexSignal::new(x, 1e6, 0.0).unwrap();
    let p = estimate_psd(&s, 256).unwrap();
    assert!((p.total_power() / s.mean_power() - 1.0).abs() < 0.01);
    assert_eq!(p.freqs.len(), 256);
    assert!(p.freqs.windows(2).all(|w| w[1] > w[0]));
    assert!(estimate_psd(&s, 2048).is_err());
}

#[test]
fn unmodulated_chirp_occupies_its_sweep() {
    let b_s = 10e6;
    let fs = 32e6;
    let carrier = FmcwCarrier::new(b_s / 100e-6, 0.0, 100e-6).unwrap();
    let pulse = synthesize_carrier(carrier, fs).unwrap();
    let len = pulse.len();
    let train: Vec<Complex64> = (0..50).flat_map(|_| pulse.samples().to_vec()).collect();
    let p = estimate_psd(&ComplexSignal::new(train, fs, 0.0).unwrap(), len).unwrap();
    assert!(
        (p.occupied_bw_99 / b_s - 1.0).abs() < 0.10,
        "{}",
        p.occupied_bw_99
    );
}

#[test]
fn single_symbol_leaves_only_the_sweep() {
    let rep = bandwidth_partition_check_with(&scaled(10e6, 100e-6, 1), 64e6, 40, 1).unwrap();
    assert!((rep.b_t_measured / rep.b_s - 1.0).abs() < 0.10, "{rep:?}");
}

#[test]
fn fixed_budget_splits_add_up() {
    // Symbol shares of the budget up to about 7%. Past roughly 15% the
    // 99% widths stop adding (the sinc² tail is diluted by the sweep).
    let budget = 12e6;
    let tp = 200e-6;
    let kappa = rect_obw_constant();
    for ns in [1usize, 2, 4, 8] {
        let b_c = kappa * ns as f64 / tp;
        let cfg = scaled(budget - b_c, tp, ns);
        let rep = bandwidth_partition_check_with(&cfg, 32e6, 40, 2).unwrap();
        assert!(
            (rep.b_t_measured / budget - 1.0).abs() < 0.15,
            "Ns {ns}: {rep:?}"
        );
    }
}

#[test]
fn more_symbols_widen_the_signal() {
    let mut last = 0.0;
    for ns in [1usize, 4, 16, 32] {
        let rep = bandwidth_partition_check_with(&scaled(4e6, 50e-6, ns), 64e6, 40, 3).unwrap();
        assert!(
            rep.b_t_measured > last,
            "Ns {ns}: {} after {last}",
            rep.b_t_measured
        );
        last = rep.b_t_measured;
    }
}

#[test]
fn undersampled_partition_is_rejected() {
    assert!(bandwidth_partition_check_with(&scaled(10e6, 100e-6, 8), 15e6, 40, 0).is_err());
}

/// Symbol error rate of QAM-FMCW with per-sample noise `var`.
fn qam_ser(order: usize, var: f64, pulses: usize) -> (f64, f64) {
    let cfg = scaled(2e6, 20e-6, 16);
    let fs = 8e6;
    let per_symbol = cfg.samples_per_pulse(fs) / 16;
    let mut rng = rng_stream(9, 1);
    let mut noise = rng_stream(9, 3);
    let mut errs = 0;
    for _ in 0..pulses {
        let sym = SymbolStream::random(Scheme::Qam, order, 16, &mut rng).unwrap();
        let mut x = Waveform::new(&sym, cfg_with(order, cfg))
            .unwrap()
            .sample(fs)
            .unwrap()
            .into_samples();
        add_noise(&mut x, var, &mut noise);
        let r = ComplexSignal::new(x, fs, 0.0).unwrap();
        errs += demod_qam_fmcw(&r, &cfg_with(order, cfg))
            .unwrap()
            .compare(&sym)
            .unwrap()
            .symbol_errors;
    }
    let es_n0 = per_symbol as f64 / var;
    (
        errs as f64 / (16 * pulses) as f64,
        es_n0 / (order as f64).log2(),
    )
}

fn cfg_with(order: usize, c: QamFmcwConfig) -> QamFmcwConfig {
    QamFmcwConfig::new(order, c.symbols_per_pulse, c.carrier).unwrap()
}

#[test]
fn measured_ser_respects_the_bound_and_falls_with_snr() {
    for order in [4usize, 16] {
        let mut last = 1.0;
        for var in [40.0, 20.0, 10.0] {
            let (ser, snr_bit) = qam_ser(order, var, 400);
            let bound = qam_ber_bound(order, snr_bit);
            assert!(ser <= bound, "M {order} σ² {var}: SER {ser} above {bound}");
            assert!(ser < last, "M {order} σ² {var}: {ser} !< {last}");
            last = ser;
        }
    }
}

#[test]
fn fsk_ser_falls_with_snr() {
    let sf = SfCarrier::new(1e6, 4e-6, 64, 0.0).unwrap();
    let cfg = FskSfConfig::new(8, 8, sf).unwrap();
    let fs = 80e6;
    let mut last = 1.0;
    for var in [800.0, 400.0, 200.0] {
        let mut rng = rng_stream(4, 1);
        let mut noise = rng_stream(4, 3);
        let mut errs = 0;
        for _ in 0..100 {
            let sym = SymbolStream::random(Scheme::Fsk, 8, 8, &mut rng).unwrap();
            let mut x = Waveform::new(&sym, cfg)
                .unwrap()
                .sample(fs)
                .unwrap()
                .into_samples();
            add_noise(&mut x, var, &mut noise);
            let r = ComplexSignal::new(x, fs, 0.0).unwrap();
            errs += demod_fsk_sf(&r, &cfg)
                .unwrap()
                .compare(&sym)
                .unwrap()
                .symbol_errors;
        }
        let ser = errs as f64 / 800.0;
        assert!(ser < last, "σ² {var}: {ser} !< {last}");
        last = ser;
    }
}
