use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use jcs_core::analysis::{bandwidth_partition_check_with, crb_range_mse, estimate_psd, BoundForm};
use jcs_core::channel::{add_noise, rng_stream, stream};
use jcs_core::harness::experiment::to_records;
use jcs_core::harness::figures::fsk_reference;
use jcs_core::harness::{
    figure_configs, run_experiment, write_csv_file, ExperimentConfig, Scale, SweepRecord, FIGURES,
};
use jcs_core::harness::{run_points, RunManifest};
use jcs_core::modulation::{
    FskSfConfig, QamFmcwConfig, Scheme, SchemeConfig, SymbolStream, Waveform,
};
use jcs_core::receiver::{demod_fsk_sf, demod_qam_fmcw};
use jcs_core::waveform::FmcwCarrier;
use jcs_core::ComplexSignal;

#[derive(Parser)]
#[command(
    name = "jcs",
    version,
    about = "Joint communications and sensing waveform simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Args)]
struct Common {
    /// Master seed; overrides the config file.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output directory for CSV and manifest files.
    #[arg(long, global = true, default_value = "out")]
    out: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    workers: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment config.
    Simulate {
        #[arg(long)]
        config: PathBuf,
    },
    /// Regenerate a preset figure sweep (`all` runs every figure).
    Figure {
        name: String,
        #[arg(long, default_value = "desk")]
        scale: Scale,
        /// Trials per point, overriding the scale.
        #[arg(long)]
        trials: Option<usize>,
    },
    /// Averaged-periodogram PSD and bandwidth partition of a QAM-FMCW signal.
    Psd {
        /// Take carrier and modulation from a QAM-FMCW config instead.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Swept bandwidth S·Tp in Hz.
        #[arg(long, default_value_t = 10e6)]
        swept_bandwidth: f64,
        #[arg(long, default_value_t = 100e-6)]
        pulse_duration: f64,
        #[arg(long, default_value_t = 8)]
        symbols_per_pulse: usize,
        #[arg(long, default_value_t = 16)]
        order: usize,
        #[arg(long, default_value_t = 64e6)]
        sample_rate: f64,
        #[arg(long, default_value_t = 100)]
        pulses: usize,
    },
    /// Range CRB table over a per-sample SNR grid.
    Crb {
        #[arg(long, default_value_t = 29.98e12)]
        slope: f64,
        #[arg(long, default_value_t = 40e6)]
        sample_rate: f64,
        #[arg(long, default_value_t = 2400)]
        samples: usize,
    },
    /// Modulate, optionally add noise, demodulate and count errors.
    Demod {
        #[arg(long, value_enum, default_value = "qam")]
        scheme: DemodScheme,
        #[arg(long, default_value_t = 16)]
        order: usize,
        #[arg(long, default_value_t = 10_000)]
        symbols: usize,
        /// Per-sample complex noise variance.
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum DemodScheme {
    Qam,
    Fsk,
}

fn manifest(
    out: &Path,
    stem: &str,
    command: &str,
    seed: u64,
    configs: Vec<ExperimentConfig>,
    start: Instant,
) -> Result<()> {
    let m = RunManifest::new(command, seed, configs, start.elapsed().as_secs_f64());
    let path = out.join(format!("{stem}.manifest.json"));
    m.write(&path)
        .with_context(|| format!("writing {}", path.display()))
}

fn write_rows(out: &Path, stem: &str, rows: &[SweepRecord]) -> Result<PathBuf> {
    let path = out.join(format!("{stem}.csv"));
    write_csv_file(rows, &path).with_context(|| format!("writing {}", path.display()))?;
    Ok(path)
}

fn simulate(config: &Path, common: &Common) -> Result<()> {
    let start = Instant::now();
    let mut cfg = ExperimentConfig::from_file(config)
        .with_context(|| format!("loading {}", config.display()))?;
    if let Some(s) = common.seed {
        cfg.seed = s;
    }
    let rows = run_experiment(&cfg)?;
    let stem = if cfg.name.is_empty() {
        "simulate".to_string()
    } else {
        cfg.name.clone()
    };
    let path = write_rows(&common.out, &stem, &rows)?;
    manifest(&common.out, &stem, "simulate", cfg.seed, vec![cfg], start)?;
    println!("wrote {} rows to {}", rows.len(), path.display());
    Ok(())
}

fn figure(name: &str, scale: Scale, trials: Option<usize>, common: &Common) -> Result<()> {
    let names: Vec<&str> = if name == "all" {
        FIGURES.to_vec()
    } else {
        vec![name]
    };
    let seed = common.seed.unwrap_or(0);
    for n in names {
        let start = Instant::now();
        let mut cfgs = figure_configs(n, scale, seed)?;
        if let Some(t) = trials {
            cfgs.iter_mut().for_each(|c| c.trials = t);
        }
        let mut rows = Vec::new();
        for c in &cfgs {
            rows.extend(to_records(&run_points(c)?, &c.name));
        }
        let path = write_rows(&common.out, n, &rows)?;
        manifest(&common.out, n, &format!("figure {n}"), seed, cfgs, start)?;
        println!(
            "{n}: {} rows to {} in {:.1}s",
            rows.len(),
            path.display(),
            start.elapsed().as_secs_f64()
        );
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn psd(
    config: Option<&Path>,
    swept_bandwidth: f64,
    pulse_duration: f64,
    ns: usize,
    order: usize,
    sample_rate: f64,
    pulses: usize,
    common: &Common,
) -> Result<()> {
    let start = Instant::now();
    let seed = common.seed.unwrap_or(0);
    let (cfg, fs, configs) = match config {
        Some(p) => {
            let c = ExperimentConfig::from_file(p)
                .with_context(|| format!("loading {}", p.display()))?;
            let setup = c.point(c.sweep.values[0])?;
            let SchemeConfig::QamFmcw(q) = setup.scheme else {
                bail!("psd needs a qam_fmcw config");
            };
            (q, setup.sample_rate, vec![c])
        }
        None => {
            let carrier = FmcwCarrier::new(swept_bandwidth / pulse_duration, 0.0, pulse_duration)?;
            (
                QamFmcwConfig::new(order, ns, carrier)?,
                sample_rate,
                Vec::new(),
            )
        }
    };
    let rep = bandwidth_partition_check_with(&cfg, fs, pulses, seed)?;

    let mut rng = rng_stream(seed, stream::SYMBOLS);
    let mut samples = Vec::new();
    for _ in 0..pulses {
        let sym = SymbolStream::random(Scheme::Qam, cfg.order, cfg.symbols_per_pulse, &mut rng)?;
        samples.extend_from_slice(Waveform::new(&sym, cfg)?.sample(fs)?.samples());
    }
    let len = cfg.samples_per_pulse(fs);
    let est = estimate_psd(&ComplexSignal::new(samples, fs, 0.0)?, len)?;

    fs::create_dir_all(&common.out)?;
    let path = common.out.join("psd.csv");
    let mut w = std::io::BufWriter::new(fs::File::create(&path)?);
    writeln!(w, "freq_hz,density")?;
    for (f, d) in est.freqs.iter().zip(&est.density) {
        writeln!(w, "{f},{d}")?;
    }
    w.flush()?;
    manifest(&common.out, "psd", "psd", seed, configs, start)?;
    println!("B_s          {:.4} MHz", rep.b_s / 1e6);
    println!(
        "B_c          {:.4} MHz (nominal {:.4})",
        rep.b_c / 1e6,
        rep.b_c_nominal / 1e6
    );
    println!("B_t measured {:.4} MHz", rep.b_t_measured / 1e6);
    println!("additivity   {:.2}%", 100.0 * rep.additivity_error);
    println!("wrote {}", path.display());
    Ok(())
}

fn crb_table(slope: f64, fs: f64, n: usize, common: &Common) -> Result<()> {
    let start = Instant::now();
    fs::create_dir_all(&common.out)?;
    let path = common.out.join("crb.csv");
    let mut w = std::io::BufWriter::new(fs::File::create(&path)?);
    writeln!(w, "snr_db,gamma,exact_m2,asymptotic_m2,as_printed_m2")?;
    println!(
        "{:>7} {:>12} {:>12} {:>12}",
        "SNR dB", "exact m²", "asymptotic", "as printed"
    );
    for db in (-30..=30).step_by(5) {
        let gamma = 10f64.powf(db as f64 / 10.0);
        let dt = 1.0 / fs;
        let e = crb_range_mse(slope, gamma, n, dt, BoundForm::Exact)?;
        let a = crb_range_mse(slope, gamma, n, dt, BoundForm::Asymptotic)?;
        let p = crb_range_mse(slope, gamma, n, dt, BoundForm::AsPrinted)?;
        writeln!(w, "{db},{gamma},{e},{a},{p}")?;
        println!("{db:>7} {e:>12.4e} {a:>12.4e} {p:>12.4e}");
    }
    w.flush()?;
    manifest(
        &common.out,
        "crb",
        "crb",
        common.seed.unwrap_or(0),
        Vec::new(),
        start,
    )?;
    println!("wrote {}", path.display());
    Ok(())
}

fn demod(
    scheme: DemodScheme,
    order: usize,
    symbols: usize,
    noise: f64,
    common: &Common,
) -> Result<()> {
    let seed = common.seed.unwrap_or(0);
    let t = fsk_reference(1, seed).point(0.0)?;
    let SchemeConfig::FskSf(fsk) = t.scheme else {
        unreachable!()
    };
    let (cfg, fs): (SchemeConfig, f64) = match scheme {
        DemodScheme::Qam => {
            let carrier = FmcwCarrier::new(29.98e12, 0.0, 60e-6)?;
            (QamFmcwConfig::new(order, 8, carrier)?.into(), 40e6)
        }
        DemodScheme::Fsk => (
            FskSfConfig::new(order, 8, fsk.carrier)?.into(),
            t.sample_rate,
        ),
    };
    let per = cfg.symbols_per_pulse();
    let pulses = symbols.div_ceil(per);
    let mut rng = rng_stream(seed, stream::SYMBOLS);
    let mut noise_rng = rng_stream(seed, stream::COMM_NOISE);
    let (mut sym_err, mut bit_err, mut bits) = (0usize, 0usize, 0usize);
    for _ in 0..pulses {
        let sym = SymbolStream::random(cfg.scheme(), order, per, &mut rng)?;
        let s = Waveform::new(&sym, cfg)?.sample(fs)?;
        let mut x = s.samples().to_vec();
        add_noise(&mut x, noise, &mut noise_rng);
        let r = ComplexSignal::new(x, fs, 0.0)?;
        let d = match cfg {
            SchemeConfig::QamFmcw(q) => demod_qam_fmcw(&r, &q)?,
            SchemeConfig::FskSf(f) => demod_fsk_sf(&r, &f)?,
        }
        .compare(&sym)?;
        sym_err += d.symbol_errors;
        bit_err += d.bit_errors;
        bits += per * sym.bits_per_symbol() as usize;
    }
    let n = pulses * per;
    println!(
        "symbols {n}, symbol errors {sym_err} (SER {:.3e}), bit errors {bit_err} (BER {:.3e})",
        sym_err as f64 / n as f64,
        bit_err as f64 / bits as f64
    );
    if noise == 0.0 && sym_err > 0 {
        bail!("noiseless loopback produced {sym_err} symbol errors");
    }
    Ok(())
}

fn main() -> Result<()> {
    let cli = Cli::parse();
    if let Some(n) = cli.common.workers {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global()
            .context("configuring worker pool")?;
    }
    fs::create_dir_all(&cli.common.out)
        .with_context(|| format!("creating {}", cli.common.out.display()))?;
    let c = &cli.common;
    match &cli.command {
        Command::Simulate { config } => simulate(config, c),
        Command::Figure {
            name,
            scale,
            trials,
        } => figure(name, *scale, *trials, c),
        Command::Psd {
            config,
            swept_bandwidth,
            pulse_duration,
            symbols_per_pulse,
            order,
            sample_rate,
            pulses,
        } => psd(
            config.as_deref(),
            *swept_bandwidth,
            *pulse_duration,
            *symbols_per_pulse,
            *order,
            *sample_rate,
            *pulses,
            c,
        ),
        Command::Crb {
            slope,
            sample_rate,
            samples,
        } => crb_table(*slope, *sample_rate, *samples, c),
        Command::Demod {
            scheme,
            order,
            symbols,
            noise,
        } => demod(*scheme, *order, *symbols, *noise, c),
    }
}
