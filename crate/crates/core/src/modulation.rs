//! Symbol mapping and the two modulated waveforms: QAM on an FMCW chirp and
//! continuous-phase FSK on a step-frequency ladder.

use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{JcsError, Result};
use crate::signal::ComplexSignal;
use crate::waveform::{cis_cycles, samples_in, FmcwCarrier, SfCarrier};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Qam,
    Fsk,
}

fn gray(x: usize) -> usize {
    x ^ (x >> 1)
}

fn gray_inverse(mut g: usize) -> usize {
    let mut x = g;
    while g > 1 {
        g >>= 1;
        x ^= g;
    }
    x
}

fn log2_exact(m: usize) -> Option<u32> {
    (m >= 2 && m.is_power_of_two()).then(|| m.trailing_zeros())
}

/// Gray-coded square QAM with unit average energy.
///
/// The symbol integer is its own bit pattern: the upper half of the bits
/// select the in-phase level and the lower half the quadrature level, each
/// through a Gray code, so neighbouring points differ in one bit.
#[derive(Debug, Clone, PartialEq)]
pub struct QamConstellation {
    order: usize,
    side: usize,
    scale: f64,
}

impl QamConstellation {
    pub fn new(order: usize) -> Result<Self> {
        match log2_exact(order) {
            Some(b) if b % 2 == 0 => {}
            _ => {
                return Err(JcsError::param(format!(
                    "QAM order must be a power of 4 (>= 4), got {order}"
                )))
            }
        }
        let side = (order as f64).sqrt().round() as usize;
        let scale = 1.0 / (2.0 * (order as f64 - 1.0) / 3.0).sqrt();
        Ok(Self { order, side, scale })
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.order.trailing_zeros()
    }

    fn half_bits(&self) -> u32 {
        self.bits_per_symbol() / 2
    }

    fn level(&self, idx: usize) -> f64 {
        (2.0 * idx as f64 - (self.side as f64 - 1.0)) * self.scale
    }

    fn nearest_index(&self, x: f64) -> usize {
        let u = (x / self.scale + (self.side as f64 - 1.0)) / 2.0;
        u.round().clamp(0.0, (self.side - 1) as f64) as usize
    }

    /// Constellation point for a symbol in `[0, M)`.
    pub fn point(&self, symbol: usize) -> Complex64 {
        let h = self.half_bits();
        let mask = (1 << h) - 1;
        let gi = symbol >> h;
        let gq = symbol & mask;
        Complex64::new(self.level(gray_inverse(gi)), self.level(gray_inverse(gq)))
    }

    /// Minimum-distance decision.
    pub fn decide(&self, z: Complex64) -> usize {
        let h = self.half_bits();
        let gi = gray(self.nearest_index(z.re));
        let gq = gray(self.nearest_index(z.im));
        (gi << h) | gq
    }

    pub fn points(&self) -> Vec<Complex64> {
        (0..self.order).map(|s| self.point(s)).collect()
    }
}

/// Ordered message symbols for one pulse.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SymbolStream {
    scheme: Scheme,
    order: usize,
    symbols: Vec<usize>,
}

impl SymbolStream {
    pub fn new(scheme: Scheme, order: usize, symbols: Vec<usize>) -> Result<Self> {
        if order < 2 {
            return Err(JcsError::param(format!("order must be >= 2, got {order}")));
        }
        if scheme == Scheme::Qam {
            QamConstellation::new(order)?;
        }
        if let Some(&bad) = symbols.iter().find(|&&s| s >= order) {
            return Err(JcsError::param(format!(
                "symbol {bad} outside [0, {order})"
            )));
        }
        Ok(Self {
            scheme,
            order,
            symbols,
        })
    }

    /// `n` independent uniformly drawn symbols.
    pub fn random(scheme: Scheme, order: usize, n: usize, rng: &mut impl Rng) -> Result<Self> {
        let symbols = (0..n).map(|_| rng.random_range(0..order)).collect();
        Self::new(scheme, order, symbols)
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn symbols(&self) -> &[usize] {
        &self.symbols
    }

    pub fn len(&self) -> usize {
        self.symbols.len()
    }

    pub fn is_empty(&self) -> bool {
        self.symbols.is_empty()
    }

    pub fn bits_per_symbol(&self) -> u32 {
        self.order.trailing_zeros()
    }

    /// Constellation points for a QAM stream; `None` for FSK.
    pub fn points(&self) -> Option<Vec<Complex64>> {
        match self.scheme {
            Scheme::Qam => {
                let c = QamConstellation::new(self.order).ok()?;
                Some(self.symbols.iter().map(|&s| c.point(s)).collect())
            }
            Scheme::Fsk => None,
        }
    }

    /// Bits carried by the stream, most significant bit of each symbol first.
    pub fn to_bits(&self) -> Vec<bool> {
        let b = self.bits_per_symbol();
        self.symbols
            .iter()
            .flat_map(|&s| (0..b).rev().map(move |i| (s >> i) & 1 == 1))
            .collect()
    }
}

/// Groups bits into Gray-coded square-QAM symbols.
pub fn qam_map(bits: &[bool], order: usize) -> Result<SymbolStream> {
    let c = QamConstellation::new(order)?;
    let b = c.bits_per_symbol() as usize;
    if !bits.len().is_multiple_of(b) {
        return Err(JcsError::param(format!(
            "{} bits do not divide into {b}-bit symbols",
            bits.len()
        )));
    }
    let symbols = bits
        .chunks(b)
        .map(|chunk| {
            chunk
                .iter()
                .fold(0usize, |acc, &bit| (acc << 1) | bit as usize)
        })
        .collect();
    SymbolStream::new(Scheme::Qam, order, symbols)
}

/// Inverse of [`qam_map`].
pub fn qam_demap(stream: &SymbolStream) -> Vec<bool> {
    stream.to_bits()
}

/// QAM symbols on an FMCW chirp.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QamFmcwConfig {
    pub order: usize,
    pub symbols_per_pulse: usize,
    pub carrier: FmcwCarrier,
}

impl QamFmcwConfig {
    pub fn new(order: usize, symbols_per_pulse: usize, carrier: FmcwCarrier) -> Result<Self> {
        let c = Self {
            order,
            symbols_per_pulse,
            carrier,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        QamConstellation::new(self.order)?;
        if self.symbols_per_pulse == 0 {
            return Err(JcsError::param("symbols per pulse must be >= 1"));
        }
        self.carrier.validate()
    }

    pub fn constellation(&self) -> QamConstellation {
        QamConstellation::new(self.order).expect("validated order")
    }

    /// `Ts = Tp/Ns`.
    pub fn symbol_period(&self) -> f64 {
        self.carrier.pulse_duration / self.symbols_per_pulse as f64
    }

    /// 0-based index of the symbol active at `t ∈ [0, Tp]`.
    pub fn symbol_index(&self, t: f64) -> usize {
        let n = (t / self.symbol_period()).floor();
        if n <= 0.0 {
            0
        } else {
            (n as usize).min(self.symbols_per_pulse - 1)
        }
    }

    pub fn samples_per_pulse(&self, sample_rate: f64) -> usize {
        samples_in(self.carrier.pulse_duration, sample_rate)
    }

    fn check_stream(&self, sym: &SymbolStream) -> Result<()> {
        if sym.scheme() != Scheme::Qam || sym.order() != self.order {
            return Err(JcsError::param(format!(
                "expected {}-QAM symbols, got {:?} of order {}",
                self.order,
                sym.scheme(),
                sym.order()
            )));
        }
        if sym.len() != self.symbols_per_pulse {
            return Err(JcsError::param(format!(
                "expected {} symbols per pulse, got {}",
                self.symbols_per_pulse,
                sym.len()
            )));
        }
        Ok(())
    }
}

/// Continuous-phase FSK on a step-frequency ladder.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FskSfConfig {
    pub order: usize,
    pub symbols_per_pulse: usize,
    pub carrier: SfCarrier,
}

impl FskSfConfig {
    pub fn new(order: usize, symbols_per_pulse: usize, carrier: SfCarrier) -> Result<Self> {
        let c = Self {
            order,
            symbols_per_pulse,
            carrier,
        };
        c.validate()?;
        Ok(c)
    }

    pub fn validate(&self) -> Result<()> {
        self.carrier.validate()?;
        if log2_exact(self.order).is_none() {
            return Err(JcsError::param(format!(
                "FSK order must be a power of two >= 2, got {}",
                self.order
            )));
        }
        let ns = self.symbols_per_pulse;
        if ns == 0 || !self.carrier.steps.is_multiple_of(ns) {
            return Err(JcsError::param(format!(
                "K/Ns must be a positive integer (K = {}, Ns = {ns})",
                self.carrier.steps
            )));
        }
        Ok(())
    }

    /// Frequency steps per symbol, `K/Ns`.
    pub fn steps_per_symbol(&self) -> usize {
        self.carrier.steps / self.symbols_per_pulse
    }

    pub fn symbol_period(&self) -> f64 {
        self.steps_per_symbol() as f64 * self.carrier.delta_t
    }

    /// Tone spacing `Δf/M`.
    pub fn tone_spacing(&self) -> f64 {
        self.carrier.delta_f / self.order as f64
    }

    /// 0-based symbol carried by 1-based step `k`.
    pub fn symbol_of_step(&self, k: usize) -> usize {
        (k - 1) / self.steps_per_symbol()
    }

    pub fn samples_per_pulse(&self, sample_rate: f64) -> usize {
        samples_in(self.carrier.pulse_duration(), sample_rate)
    }

    fn check_stream(&self, sym: &SymbolStream) -> Result<()> {
        if sym.scheme() != Scheme::Fsk || sym.order() != self.order {
            return Err(JcsError::param(format!(
                "expected {}-FSK symbols, got {:?} of order {}",
                self.order,
                sym.scheme(),
                sym.order()
            )));
        }
        if sym.len() != self.symbols_per_pulse {
            return Err(JcsError::param(format!(
                "expected {} symbols per pulse, got {}",
                self.symbols_per_pulse,
                sym.len()
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "snake_case")]
pub enum SchemeConfig {
    QamFmcw(QamFmcwConfig),
    FskSf(FskSfConfig),
}

impl SchemeConfig {
    pub fn pulse_duration(&self) -> f64 {
        match self {
            SchemeConfig::QamFmcw(c) => c.carrier.pulse_duration,
            SchemeConfig::FskSf(c) => c.carrier.pulse_duration(),
        }
    }

    pub fn rf_hz(&self) -> f64 {
        match self {
            SchemeConfig::QamFmcw(c) => c.carrier.rf_hz,
            SchemeConfig::FskSf(c) => c.carrier.rf_hz,
        }
    }

    pub fn symbols_per_pulse(&self) -> usize {
        match self {
            SchemeConfig::QamFmcw(c) => c.symbols_per_pulse,
            SchemeConfig::FskSf(c) => c.symbols_per_pulse,
        }
    }

    pub fn order(&self) -> usize {
        match self {
            SchemeConfig::QamFmcw(c) => c.order,
            SchemeConfig::FskSf(c) => c.order,
        }
    }

    pub fn scheme(&self) -> Scheme {
        match self {
            SchemeConfig::QamFmcw(_) => Scheme::Qam,
            SchemeConfig::FskSf(_) => Scheme::Fsk,
        }
    }
}

impl From<QamFmcwConfig> for SchemeConfig {
    fn from(c: QamFmcwConfig) -> Self {
        SchemeConfig::QamFmcw(c)
    }
}

impl From<FskSfConfig> for SchemeConfig {
    fn from(c: FskSfConfig) -> Self {
        SchemeConfig::FskSf(c)
    }
}

/// A modulated pulse that can be evaluated at any instant of `[0, Tp]`.
#[derive(Debug, Clone)]
pub enum Waveform {
    Qam {
        cfg: QamFmcwConfig,
        points: Vec<Complex64>,
    },
    Fsk {
        cfg: FskSfConfig,
        symbols: Vec<usize>,
        /// `cum[k]` = sum of the symbol offsets `m` over steps `1..=k`.
        cum: Vec<u64>,
    },
}

impl Waveform {
    pub fn new(sym: &SymbolStream, cfg: impl Into<SchemeConfig>) -> Result<Self> {
        match cfg.into() {
            SchemeConfig::QamFmcw(cfg) => {
                cfg.validate()?;
                cfg.check_stream(sym)?;
                let c = cfg.constellation();
                let points = sym.symbols().iter().map(|&s| c.point(s)).collect();
                Ok(Waveform::Qam { cfg, points })
            }
            SchemeConfig::FskSf(cfg) => {
                cfg.validate()?;
                cfg.check_stream(sym)?;
                let symbols = sym.symbols().to_vec();
                let mut cum = Vec::with_capacity(cfg.carrier.steps + 1);
                cum.push(0u64);
                for k in 1..=cfg.carrier.steps {
                    let m = symbols[cfg.symbol_of_step(k)] as u64;
                    cum.push(cum[k - 1] + m);
                }
                Ok(Waveform::Fsk { cfg, symbols, cum })
            }
        }
    }

    pub fn pulse_duration(&self) -> f64 {
        match self {
            Waveform::Qam { cfg, .. } => cfg.carrier.pulse_duration,
            Waveform::Fsk { cfg, .. } => cfg.carrier.pulse_duration(),
        }
    }

    pub fn rf_hz(&self) -> f64 {
        match self {
            Waveform::Qam { cfg, .. } => cfg.carrier.rf_hz,
            Waveform::Fsk { cfg, .. } => cfg.carrier.rf_hz,
        }
    }

    /// Carrier phase in cycles, including the FSK offsets.
    pub fn phase(&self, t: f64) -> f64 {
        match self {
            Waveform::Qam { cfg, .. } => cfg.carrier.phase_unchecked(t),
            Waveform::Fsk { cfg, symbols, cum } => {
                let c = &cfg.carrier;
                let k = c.step_index(t);
                let spacing = cfg.tone_spacing();
                let m = symbols[cfg.symbol_of_step(k)] as f64;
                c.phase_unchecked(t)
                    + spacing * c.delta_t * cum[k - 1] as f64
                    + spacing * m * (t - c.step_start(k))
            }
        }
    }

    /// Complex amplitude `A(t)`.
    pub fn amplitude(&self, t: f64) -> Complex64 {
        match self {
            Waveform::Qam { cfg, points } => points[cfg.symbol_index(t)],
            Waveform::Fsk { .. } => Complex64::new(1.0, 0.0),
        }
    }

    /// Instantaneous frequency in Hz.
    pub fn frequency(&self, t: f64) -> f64 {
        match self {
            Waveform::Qam { cfg, .. } => cfg.carrier.frequency(t),
            Waveform::Fsk { cfg, symbols, .. } => {
                let c = &cfg.carrier;
                let k = c.step_index(t);
                c.step_frequency(k) + symbols[cfg.symbol_of_step(k)] as f64 * cfg.tone_spacing()
            }
        }
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        self.amplitude(t) * cis_cycles(self.phase(t))
    }

    /// Samples `n/fs` for `n < round(Tp·fs)`.
    pub fn sample(&self, sample_rate: f64) -> Result<ComplexSignal> {
        check_rate(sample_rate)?;
        let n = samples_in(self.pulse_duration(), sample_rate);
        ComplexSignal::from_fn(n, sample_rate, |t| self.eval(t))
    }
}

pub(crate) fn check_rate(sample_rate: f64) -> Result<()> {
    if !(sample_rate.is_finite() && sample_rate > 0.0) {
        return Err(JcsError::param(format!(
            "sample rate must be > 0, got {sample_rate}"
        )));
    }
    Ok(())
}

/// `A_{⌊t/Ts⌋}·exp(j2πθ(t))` sampled over one pulse.
pub fn modulate_qam_fmcw(
    sym: &SymbolStream,
    cfg: &QamFmcwConfig,
    sample_rate: f64,
) -> Result<ComplexSignal> {
    Waveform::new(sym, *cfg)?.sample(sample_rate)
}

/// Continuous-phase FSK-SF pulse: step `k` sits at
/// `(k-1)·Δf + f0 + m·Δf/M` where `m` is the symbol owning the step.
pub fn modulate_fsk_sf(
    sym: &SymbolStream,
    cfg: &FskSfConfig,
    sample_rate: f64,
) -> Result<ComplexSignal> {
    Waveform::new(sym, *cfg)?.sample(sample_rate)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dsp;
    use crate::waveform::synthesize_carrier;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn qam_cfg(order: usize, ns: usize) -> QamFmcwConfig {
        QamFmcwConfig::new(order, ns, FmcwCarrier::new(30e12, 0.0, 10e-6).unwrap()).unwrap()
    }

    #[test]
    fn qpsk_is_constant_modulus() {
        let s = qam_map(&[false, false], 4).unwrap();
        let p = s.points().unwrap()[0];
        assert!((p.norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn constellations_have_unit_energy() {
        for m in [4, 16, 64] {
            let c = QamConstellation::new(m).unwrap();
            let e: f64 = c.points().iter().map(|z| z.norm_sqr()).sum::<f64>() / m as f64;
            assert!((e - 1.0).abs() < 1e-12, "M={m}: {e}");
        }
    }

    #[test]
    fn gray_neighbours_differ_in_one_bit() {
        for m in [4, 16, 64] {
            let c = QamConstellation::new(m).unwrap();
            let pts = c.points();
            let dmin = 2.0 * c.scale;
            for a in 0..m {
                for b in 0..m {
                    if ((pts[a] - pts[b]).norm() - dmin).abs() < 1e-9 {
                        assert_eq!((a ^ b).count_ones(), 1, "M={m} {a} {b}");
                    }
                }
            }
        }
    }

    #[test]
    fn map_demap_round_trip_all_points() {
        for m in [4usize, 16, 64] {
            let c = QamConstellation::new(m).unwrap();
            for s in 0..m {
                assert_eq!(c.decide(c.point(s)), s);
                let bits = SymbolStream::new(Scheme::Qam, m, vec![s])
                    .unwrap()
                    .to_bits();
                assert_eq!(qam_map(&bits, m).unwrap().symbols(), &[s]);
            }
        }
    }

    #[test]
    fn qam_map_rejects_ragged_bits() {
        assert!(matches!(
            qam_map(&[true, false, true], 16),
            Err(JcsError::Parameter(_))
        ));
        assert!(QamConstellation::new(8).is_err());
    }

    #[test]
    fn qam_fmcw_amplitude_is_piecewise_constant() {
        let cfg = qam_cfg(16, 4);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let sym = SymbolStream::random(Scheme::Qam, 16, 4, &mut rng).unwrap();
        let s = modulate_qam_fmcw(&sym, &cfg, 100e6).unwrap();
        let lo = synthesize_carrier(cfg.carrier, 100e6).unwrap();
        let pts = sym.points().unwrap();
        for (n, (x, c)) in s.samples().iter().zip(lo.samples()).enumerate() {
            let a = pts[n / 250];
            assert!((x - a * c).norm() < 1e-12);
        }
    }

    #[test]
    fn qam_fmcw_rejects_wrong_count() {
        let cfg = qam_cfg(4, 8);
        let sym = SymbolStream::new(Scheme::Qam, 4, vec![0; 7]).unwrap();
        assert!(modulate_qam_fmcw(&sym, &cfg, 100e6).is_err());
    }

    #[test]
    fn rotation_propagates_pointwise() {
        // QPSK points rotated by 90° stay in the constellation.
        let cfg = qam_cfg(4, 4);
        let sym = SymbolStream::new(Scheme::Qam, 4, vec![0, 1, 2, 3]).unwrap();
        let c = cfg.constellation();
        let j = Complex64::new(0.0, 1.0);
        let rotated: Vec<usize> = sym
            .symbols()
            .iter()
            .map(|&s| c.decide(c.point(s) * j))
            .collect();
        let rsym = SymbolStream::new(Scheme::Qam, 4, rotated).unwrap();
        let a = modulate_qam_fmcw(&sym, &cfg, 50e6).unwrap();
        let b = modulate_qam_fmcw(&rsym, &cfg, 50e6).unwrap();
        for (x, y) in a.samples().iter().zip(b.samples()) {
            assert!((x * j - y).norm() < 1e-12);
        }
    }

    fn fsk_cfg(order: usize) -> FskSfConfig {
        let sf = SfCarrier::new(1e6, 4e-6, 8, 0.0).unwrap();
        FskSfConfig::new(order, 4, sf).unwrap()
    }

    #[test]
    fn fsk_zero_symbols_equal_carrier() {
        let cfg = fsk_cfg(4);
        let sym = SymbolStream::new(Scheme::Fsk, 4, vec![0; 4]).unwrap();
        let s = modulate_fsk_sf(&sym, &cfg, 32e6).unwrap();
        let c = synthesize_carrier(cfg.carrier, 32e6).unwrap();
        assert_eq!(s.len(), c.len());
        for (x, y) in s.samples().iter().zip(c.samples()) {
            assert!((x - y).norm() < 1e-12);
        }
    }

    #[test]
    fn fsk_step_peaks_and_modulus() {
        let cfg = fsk_cfg(4);
        let fs = 64e6;
        let sym = SymbolStream::new(Scheme::Fsk, 4, vec![3, 1, 0, 2]).unwrap();
        let s = modulate_fsk_sf(&sym, &cfg, fs).unwrap();
        assert!(s.samples().iter().all(|z| (z.norm() - 1.0).abs() < 1e-12));
        let per = samples_in(cfg.carrier.delta_t, fs);
        let nfft = 4096;
        let bin = fs / nfft as f64;
        for k in 1..=cfg.carrier.steps {
            let mut p = vec![0.0; nfft];
            dsp::accumulate_power(&s.samples()[(k - 1) * per..k * per], &mut p);
            let f = dsp::argmax(&p) as f64 * bin;
            let m = sym.symbols()[cfg.symbol_of_step(k)] as f64;
            let expected = (k - 1) as f64 * 1e6 + m * 0.25e6;
            assert!((f - expected).abs() <= bin, "step {k}: {f} vs {expected}");
        }
    }

    #[test]
    fn fsk_rejects_out_of_range_and_bad_ratio() {
        assert!(SymbolStream::new(Scheme::Fsk, 4, vec![4]).is_err());
        let sf = SfCarrier::new(1e6, 4e-6, 8, 0.0).unwrap();
        assert!(FskSfConfig::new(4, 3, sf).is_err());
    }

    #[test]
    fn fsk_blocks_map_steps_to_symbols() {
        let cfg = fsk_cfg(2);
        let owners: Vec<usize> = (1..=8).map(|k| cfg.symbol_of_step(k)).collect();
        assert_eq!(owners, vec![0, 0, 1, 1, 2, 2, 3, 3]);
    }
}
