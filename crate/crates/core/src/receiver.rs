//! Synchronized communication receivers and error counting.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{JcsError, Result};
use crate::modulation::{FskSfConfig, QamFmcwConfig, Scheme, SymbolStream};
use crate::signal::ComplexSignal;
use crate::waveform::{cis_cycles, synthesize_carrier};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DemodResult {
    pub symbols: SymbolStream,
    pub symbol_errors: usize,
    pub bit_errors: usize,
    /// RMS error-vector magnitude against the decided points (QAM only).
    pub evm: Option<f64>,
}

impl DemodResult {
    fn decided(symbols: SymbolStream, evm: Option<f64>) -> Self {
        Self {
            symbols,
            symbol_errors: 0,
            bit_errors: 0,
            evm,
        }
    }

    /// Fills the error counts against the transmitted stream.
    pub fn compare(mut self, sent: &SymbolStream) -> Result<Self> {
        if sent.len() != self.symbols.len() || sent.order() != self.symbols.order() {
            return Err(JcsError::param(
                "reference stream does not match the decisions",
            ));
        }
        self.symbol_errors = 0;
        self.bit_errors = 0;
        for (&a, &b) in sent.symbols().iter().zip(self.symbols.symbols()) {
            if a != b {
                self.symbol_errors += 1;
                self.bit_errors += (a ^ b).count_ones() as usize;
            }
        }
        Ok(self)
    }
}

fn check_len(r: &ComplexSignal, expected: usize) -> Result<()> {
    if r.len() != expected {
        return Err(JcsError::param(format!(
            "received {} samples, configuration implies {expected}",
            r.len()
        )));
    }
    Ok(())
}

/// Averages `y` over the samples owned by each symbol.
fn symbol_means(
    y: &[Complex64],
    fs: f64,
    ns: usize,
    index: impl Fn(f64) -> usize,
) -> Vec<Complex64> {
    let mut acc = vec![Complex64::new(0.0, 0.0); ns];
    let mut count = vec![0usize; ns];
    for (n, z) in y.iter().enumerate() {
        let i = index(n as f64 / fs);
        acc[i] += z;
        count[i] += 1;
    }
    acc.iter()
        .zip(&count)
        .map(|(a, &c)| if c > 0 { a / c as f64 } else { *a })
        .collect()
}

/// Mixes with the conjugate chirp, averages per symbol and takes the
/// nearest constellation point. `r` is assumed synchronized and at unit gain.
pub fn demod_qam_fmcw(r: &ComplexSignal, cfg: &QamFmcwConfig) -> Result<DemodResult> {
    cfg.validate()?;
    let fs = r.sample_rate();
    check_len(r, cfg.samples_per_pulse(fs))?;
    let lo = synthesize_carrier(cfg.carrier, fs)?;
    let y = r.mix_conj(&lo)?;
    let means = symbol_means(y.samples(), fs, cfg.symbols_per_pulse, |t| {
        cfg.symbol_index(t)
    });
    let c = cfg.constellation();
    let decisions: Vec<usize> = means.iter().map(|&z| c.decide(z)).collect();
    let (err, refp) = means
        .iter()
        .zip(&decisions)
        .fold((0.0, 0.0), |(e, p), (&z, &s)| {
            let pt = c.point(s);
            (e + (z - pt).norm_sqr(), p + pt.norm_sqr())
        });
    let evm = if refp > 0.0 { (err / refp).sqrt() } else { 0.0 };
    let symbols = SymbolStream::new(Scheme::Qam, cfg.order, decisions)?;
    Ok(DemodResult::decided(symbols, Some(evm)))
}

/// Removes the step ladder, then picks the strongest of the `M` tone
/// hypotheses `m·Δf/M` per symbol with a noncoherent matched-filter bank.
pub fn demod_fsk_sf(r: &ComplexSignal, cfg: &FskSfConfig) -> Result<DemodResult> {
    cfg.validate()?;
    let fs = r.sample_rate();
    check_len(r, cfg.samples_per_pulse(fs))?;
    let lo = synthesize_carrier(cfg.carrier, fs)?;
    let y = r.mix_conj(&lo)?;
    let ns = cfg.symbols_per_pulse;
    let spacing = cfg.tone_spacing();
    let mut banks = vec![vec![Complex64::new(0.0, 0.0); cfg.order]; ns];
    for (n, z) in y.samples().iter().enumerate() {
        let t = n as f64 / fs;
        let j = cfg.symbol_of_step(cfg.carrier.step_index(t));
        for (m, acc) in banks[j].iter_mut().enumerate() {
            *acc += z * cis_cycles(-(m as f64) * spacing * t);
        }
    }
    let decisions = banks
        .iter()
        .map(|bank| {
            let mut best = 0;
            for m in 1..bank.len() {
                if bank[m].norm_sqr() > bank[best].norm_sqr() {
                    best = m;
                }
            }
            best
        })
        .collect();
    let symbols = SymbolStream::new(Scheme::Fsk, cfg.order, decisions)?;
    Ok(DemodResult::decided(symbols, None))
}
