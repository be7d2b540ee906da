use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CicConfig {
    pub order: u32,
    pub rate_change: u32,
    pub differential_delay: u32,
}

impl Default for CicConfig {
    fn default() -> Self {
        Self {
            order: 3,
            rate_change: 64,
            differential_delay: 1,
        }
    }
}

impl CicConfig {
    pub fn validate(&self) -> Result<()> {
        if self.order == 0 {
            return Err(Error::param("cic_order", "must be >= 1"));
        }
        if self.rate_change < 2 {
            return Err(Error::param("cic_rate", "must be >= 2"));
        }
        if self.differential_delay == 0 {
            return Err(Error::param("cic_delay", "must be >= 1"));
        }
        // ±1 input needs 2 bits; registers are i64.
        if self.bit_growth() + 2.0 > 64.0 {
            return Err(Error::param("cic_order", "register width exceeds 64 bits"));
        }
        Ok(())
    }

    /// `N * log2(R * M)`; 18 bits for the default 3/64/1.
    pub fn bit_growth(&self) -> f64 {
        self.order as f64 * ((self.rate_change * self.differential_delay) as f64).log2()
    }

    /// DC gain `(R * M)^N`.
    pub fn dc_gain(&self) -> i64 {
        ((self.rate_change * self.differential_delay) as i64).pow(self.order)
    }

    /// Impulse response length in input samples minus one, `N (R M - 1)`.
    pub fn span(&self) -> u64 {
        self.order as u64 * (self.rate_change as u64 * self.differential_delay as u64 - 1)
    }

    /// Magnitude response at `f` for input rate `fs`, normalized to unity DC.
    pub fn magnitude(&self, f: f64, fs: f64) -> f64 {
        let rm = (self.rate_change * self.differential_delay) as f64;
        let den = rm * (std::f64::consts::PI * f / fs).sin();
        if den.abs() < 1e-300 {
            return 1.0;
        }
        let num = (std::f64::consts::PI * f * rm / fs).sin();
        (num / den).abs().powi(self.order as i32)
    }
}

/// Streaming integrator–comb decimator. Registers wrap in two's complement;
/// the output is exact as long as it fits the register, which the bit-growth
/// check guarantees.
#[derive(Debug, Clone)]
pub struct CicDecimator {
    config: CicConfig,
    integrators: Vec<i64>,
    // comb delay lines, M entries per stage
    combs: Vec<Vec<i64>>,
    comb_pos: usize,
    phase: u32,
}

impl CicDecimator {
    pub fn new(config: CicConfig) -> Result<Self> {
        config.validate()?;
        let n = config.order as usize;
        let m = config.differential_delay as usize;
        Ok(Self {
            config,
            integrators: vec![0; n],
            combs: vec![vec![0; m]; n],
            comb_pos: 0,
            phase: 0,
        })
    }

    pub fn config(&self) -> &CicConfig {
        &self.config
    }

    /// Feeds one input sample; returns an output every `rate_change` inputs.
    #[inline]
    pub fn push(&mut self, x: i64) -> Option<i64> {
        let mut acc = x;
        for reg in self.integrators.iter_mut() {
            *reg = reg.wrapping_add(acc);
            acc = *reg;
        }
        self.phase += 1;
        if self.phase < self.config.rate_change {
            return None;
        }
        self.phase = 0;
        let pos = self.comb_pos;
        for line in self.combs.iter_mut() {
            let delayed = line[pos];
            line[pos] = acc;
            acc = acc.wrapping_sub(delayed);
        }
        self.comb_pos = (pos + 1) % self.config.differential_delay as usize;
        Some(acc)
    }
}

/// Decimates a `±1` stream by `rate_change`. Output `k` is taken after input
/// `k * R + R - 1`.
pub fn cic_decimate(bits: &[i8], config: &CicConfig) -> Result<Vec<i64>> {
    let mut cic = CicDecimator::new(*config)?;
    Ok(bits.iter().filter_map(|&b| cic.push(b as i64)).collect())
}
