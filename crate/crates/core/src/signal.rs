//! Uniformly sampled complex signals.

use num_complex::Complex64;

use crate::error::{JcsError, Result};

/// A uniformly sampled complex baseband signal.
///
/// Sample `n` is taken at `t_start + n / sample_rate`.
#[derive(Debug, Clone, PartialEq)]
pub struct ComplexSignal {
    samples: Vec<Complex64>,
    sample_rate: f64,
    t_start: f64,
}

impl ComplexSignal {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64, t_start: f64) -> Result<Self> {
        if !(sample_rate.is_finite() && sample_rate > 0.0) {
            return Err(JcsError::param(format!(
                "sample rate must be positive, got {sample_rate}"
            )));
        }
        if !t_start.is_finite() {
            return Err(JcsError::param("t_start must be finite"));
        }
        if let Some(i) = samples
            .iter()
            .position(|z| !(z.re.is_finite() && z.im.is_finite()))
        {
            return Err(JcsError::param(format!("sample {i} is not finite")));
        }
        Ok(Self {
            samples,
            sample_rate,
            t_start,
        })
    }

    /// Builds a signal by evaluating `f` at every sample instant in `[0, duration)`.
    pub fn from_fn(
        len: usize,
        sample_rate: f64,
        mut f: impl FnMut(f64) -> Complex64,
    ) -> Result<Self> {
        let samples = (0..len).map(|n| f(n as f64 / sample_rate)).collect();
        Self::new(samples, sample_rate, 0.0)
    }

    pub fn samples(&self) -> &[Complex64] {
        &self.samples
    }

    pub fn into_samples(self) -> Vec<Complex64> {
        self.samples
    }

    pub fn sample_rate(&self) -> f64 {
        self.sample_rate
    }

    pub fn t_start(&self) -> f64 {
        self.t_start
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate
    }

    /// Time of sample `n`.
    pub fn time(&self, n: usize) -> f64 {
        self.t_start + n as f64 / self.sample_rate
    }

    /// Mean of `|x|²` over all samples; zero for an empty signal.
    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    pub fn is_all_zero(&self) -> bool {
        self.samples.iter().all(|z| z.re == 0.0 && z.im == 0.0)
    }

    /// Multiplies every sample by a real factor.
    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            samples: self.samples.iter().map(|z| z * factor).collect(),
            sample_rate: self.sample_rate,
            t_start: self.t_start,
        }
    }

    /// Pointwise product `self · conj(other)`. Both signals must share the
    /// same sampling grid.
    pub fn mix_conj(&self, other: &ComplexSignal) -> Result<Self> {
        self.check_same_grid(other)?;
        let samples = self
            .samples
            .iter()
            .zip(&other.samples)
            .map(|(a, b)| a * b.conj())
            .collect();
        Ok(Self {
            samples,
            sample_rate: self.sample_rate,
            t_start: self.t_start,
        })
    }

    fn check_same_grid(&self, other: &ComplexSignal) -> Result<()> {
        if self.len() != other.len() {
            return Err(JcsError::param(format!(
                "length mismatch: {} vs {} samples",
                self.len(),
                other.len()
            )));
        }
        if self.sample_rate != other.sample_rate || self.t_start != other.t_start {
            return Err(JcsError::param("signals are sampled on different grids"));
        }
        Ok(())
    }
}
