//! Second decimation stage: a linear-phase FIR that compensates the CIC
//! passband droop and sets the final cutoff, in Q1.15.

use std::f64::consts::PI;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};

use super::CicConfig;

pub const Q15_ONE: i64 = 1 << 15;
/// Signed accumulator width of the fixed-point MAC.
pub const ACCUMULATOR_BITS: u32 = 40;

#[derive(Debug, Clone, PartialEq)]
pub struct FirConfig {
    /// Q1.15 coefficients; they sum to exactly `Q15_ONE`.
    pub taps: Vec<i16>,
    pub rate_change: u32,
    pub cutoff_hz: f64,
    /// Sample rate at the FIR input (Hz).
    pub input_rate_hz: f64,
    /// Input magnitude that corresponds to converter full scale (the CIC DC
    /// gain for a ±1 bitstream).
    pub input_full_scale: i64,
    pub output_bits: u32,
}

impl FirConfig {
    pub fn validate(&self) -> Result<()> {
        if self.taps.is_empty() {
            return Err(Error::param("fir_taps", "must not be empty"));
        }
        if self.rate_change == 0 {
            return Err(Error::param("fir_rate", "must be >= 1"));
        }
        if self.input_full_scale <= 0 {
            return Err(Error::param("input_full_scale", "must be positive"));
        }
        if !(2..=32).contains(&self.output_bits) {
            return Err(Error::param("output_bits", "must lie in [2, 32]"));
        }
        // worst-case |acc| with full-scale input must fit the accumulator
        let l1: i128 = self.taps.iter().map(|&t| (t as i128).abs()).sum();
        if l1 * self.input_full_scale as i128 >= 1i128 << (ACCUMULATOR_BITS - 1) {
            return Err(Error::param(
                "fir_taps",
                "accumulator would overflow 40 bits",
            ));
        }
        Ok(())
    }

    pub fn output_rate_hz(&self) -> f64 {
        self.input_rate_hz / self.rate_change as f64
    }

    /// Complex-free magnitude at `f` (Hz) relative to the FIR input rate.
    pub fn magnitude(&self, f: f64) -> f64 {
        let w = 2.0 * PI * f / self.input_rate_hz;
        let (mut re, mut im) = (0.0, 0.0);
        for (k, &t) in self.taps.iter().enumerate() {
            let h = t as f64 / Q15_ONE as f64;
            re += h * (w * k as f64).cos();
            im -= h * (w * k as f64).sin();
        }
        (re * re + im * im).sqrt()
    }

    /// Group delay in FIR input samples.
    pub fn group_delay(&self) -> f64 {
        (self.taps.len() as f64 - 1.0) / 2.0
    }

    /// Tap listing: two header lines (format id, scale), then one Q1.15
    /// integer per line.
    pub fn write_taps<W: Write>(&self, mut w: W, header_note: Option<&str>) -> Result<()> {
        match header_note {
            Some(note) => writeln!(w, "# format=Q1.15 {note}")?,
            None => writeln!(w, "# format=Q1.15")?,
        }
        writeln!(w, "# scale={Q15_ONE}")?;
        for t in &self.taps {
            writeln!(w, "{t}")?;
        }
        Ok(())
    }

    pub fn read_taps<R: BufRead>(r: R) -> Result<Vec<i16>> {
        let mut lines = r.lines();
        let mut header = |expect: &str| -> Result<()> {
            let line = lines
                .next()
                .ok_or_else(|| Error::format("tap file", "missing header"))??;
            if !line.starts_with(expect) {
                return Err(Error::format(
                    "tap file",
                    format!("expected `{expect}`, got `{line}`"),
                ));
            }
            Ok(())
        };
        header("# format=Q1.15")?;
        header(&format!("# scale={Q15_ONE}"))?;
        lines
            .filter(|l| l.as_ref().map(|l| !l.trim().is_empty()).unwrap_or(true))
            .map(|l| {
                let l = l?;
                l.trim()
                    .parse::<i16>()
                    .map_err(|e| Error::format("tap file", format!("`{l}`: {e}")))
            })
            .collect()
    }
}

/// Targets for the droop-compensating lowpass.
#[derive(Debug, Clone, PartialEq)]
pub struct FirDesignSpec {
    pub num_taps: usize,
    /// −6 dB point of the composite response (Hz).
    pub cutoff_hz: f64,
    pub rate_change: u32,
    pub modulator_rate_hz: f64,
    pub cic: CicConfig,
    pub output_bits: u32,
    pub passband_edge_hz: f64,
    pub max_ripple_db: f64,
    /// Half-width of the bands around multiples of the CIC output rate that
    /// fold onto the signal band.
    pub image_halfwidth_hz: f64,
    pub min_image_rejection_db: f64,
}

impl Default for FirDesignSpec {
    fn default() -> Self {
        Self {
            num_taps: 32,
            cutoff_hz: 500.0,
            rate_change: 2,
            modulator_rate_hz: 128_000.0,
            cic: CicConfig::default(),
            output_bits: 12,
            passband_edge_hz: 400.0,
            max_ripple_db: 0.5,
            image_halfwidth_hz: 100.0,
            min_image_rejection_db: 60.0,
        }
    }
}

impl FirDesignSpec {
    pub fn intermediate_rate_hz(&self) -> f64 {
        self.modulator_rate_hz / self.cic.rate_change as f64
    }
}

/// Measured properties of a quantized design, combined with the CIC.
#[derive(Debug, Clone, PartialEq)]
pub struct DesignReport {
    pub dc_gain: f64,
    pub ripple_db: f64,
    pub cutoff_gain_db: f64,
    pub image_rejection_db: f64,
    pub worst_image_hz: f64,
}

/// Composite CIC × FIR magnitude at `f` on the modulator clock.
pub fn composite_magnitude(
    fir: &FirConfig,
    cic: &CicConfig,
    modulator_rate_hz: f64,
    f: f64,
) -> f64 {
    cic.magnitude(f, modulator_rate_hz) * fir.magnitude(f)
}

fn db(v: f64) -> f64 {
    20.0 * v.max(1e-300).log10()
}

pub fn evaluate_design(fir: &FirConfig, spec: &FirDesignSpec) -> DesignReport {
    let fs = spec.modulator_rate_hz;
    let resp = |f: f64| composite_magnitude(fir, &spec.cic, fs, f);
    let (mut lo, mut hi) = (f64::INFINITY, f64::NEG_INFINITY);
    let steps = 400;
    for i in 0..=steps {
        let g = db(resp(spec.passband_edge_hz * i as f64 / steps as f64));
        lo = lo.min(g);
        hi = hi.max(g);
    }
    let fs2 = spec.intermediate_rate_hz();
    let mut worst = f64::INFINITY;
    let mut worst_hz = 0.0;
    let mut k = 1.0;
    while k * fs2 - spec.image_halfwidth_hz < fs / 2.0 {
        let center = k * fs2;
        let mut f = center - spec.image_halfwidth_hz;
        while f <= (center + spec.image_halfwidth_hz).min(fs / 2.0) {
            let att = -db(resp(f));
            if att < worst {
                worst = att;
                worst_hz = f;
            }
            f += 1.0;
        }
        k += 1.0;
    }
    DesignReport {
        dc_gain: resp(0.0),
        ripple_db: hi - lo,
        cutoff_gain_db: db(resp(spec.cutoff_hz)),
        image_rejection_db: worst,
        worst_image_hz: worst_hz,
    }
}

/// Symmetric Hamming window.
pub fn hamming(n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![1.0];
    }
    (0..n)
        .map(|i| 0.54 - 0.46 * (2.0 * PI * i as f64 / (n - 1) as f64).cos())
        .collect()
}

/// Windowed-sinc lowpass whose passband is pre-emphasized by the inverse
/// CIC response, then quantized to Q1.15 with unity DC gain.
///
/// The ideal impulse response is the inverse transform of
/// `1 / |H_cic(f)|` on `|f| < cutoff`, zero above, integrated numerically.
/// The brick-wall edge puts the composite −6 dB point at the cutoff.
pub fn design_fir(spec: &FirDesignSpec) -> Result<FirConfig> {
    spec.cic.validate()?;
    if spec.num_taps < 2 {
        return Err(Error::param("fir_taps", "need at least 2 taps"));
    }
    let fs2 = spec.intermediate_rate_hz();
    if !(spec.cutoff_hz > 0.0 && spec.cutoff_hz < fs2 / 2.0) {
        return Err(Error::param(
            "cutoff_hz",
            format!(
                "must lie in (0, {}) Hz, the intermediate Nyquist",
                fs2 / 2.0
            ),
        ));
    }
    if spec.rate_change == 0 {
        return Err(Error::param("fir_rate", "must be >= 1"));
    }

    let n = spec.num_taps;
    let center = (n as f64 - 1.0) / 2.0;
    const POINTS: usize = 8192;
    let df = spec.cutoff_hz / POINTS as f64;
    let desired: Vec<(f64, f64)> = (0..POINTS)
        .map(|i| {
            let f = (i as f64 + 0.5) * df;
            (f, 1.0 / spec.cic.magnitude(f, spec.modulator_rate_hz))
        })
        .collect();
    let window = hamming(n);
    let mut ideal: Vec<f64> = (0..n)
        .map(|k| {
            let t = k as f64 - center;
            let integral: f64 = desired
                .iter()
                .map(|&(f, d)| d * (2.0 * PI * f * t / fs2).cos())
                .sum();
            2.0 * integral * df / fs2 * window[k]
        })
        .collect();
    let sum: f64 = ideal.iter().sum();
    for h in ideal.iter_mut() {
        *h /= sum;
    }

    let mut q: Vec<i64> = ideal
        .iter()
        .map(|&h| (h * Q15_ONE as f64).round() as i64)
        .collect();
    // force exact unity DC gain on the center tap(s), keeping symmetry
    let deficit = Q15_ONE - q.iter().sum::<i64>();
    if n % 2 == 1 {
        q[n / 2] += deficit;
    } else {
        debug_assert_eq!(deficit % 2, 0);
        q[n / 2 - 1] += deficit / 2;
        q[n / 2] += deficit / 2;
    }
    let taps = q
        .iter()
        .map(|&v| {
            i16::try_from(v).map_err(|_| Error::DesignInfeasible {
                metric: "tap_range",
                value: v as f64,
                requirement: "every tap within Q1.15".into(),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let fir = FirConfig {
        taps,
        rate_change: spec.rate_change,
        cutoff_hz: spec.cutoff_hz,
        input_rate_hz: fs2,
        input_full_scale: spec.cic.dc_gain(),
        output_bits: spec.output_bits,
    };
    fir.validate()?;

    let report = evaluate_design(&fir, spec);
    if report.ripple_db > spec.max_ripple_db {
        return Err(Error::DesignInfeasible {
            metric: "passband_ripple_db",
            value: report.ripple_db,
            requirement: format!("<= {}", spec.max_ripple_db),
        });
    }
    if report.image_rejection_db < spec.min_image_rejection_db {
        return Err(Error::DesignInfeasible {
            metric: "image_rejection_db",
            value: report.image_rejection_db,
            requirement: format!(">= {}", spec.min_image_rejection_db),
        });
    }
    if (report.cutoff_gain_db + 6.0).abs() > 1.0 {
        return Err(Error::DesignInfeasible {
            metric: "cutoff_gain_db",
            value: report.cutoff_gain_db,
            requirement: "-6 ± 1 dB".into(),
        });
    }
    Ok(fir)
}

/// Streaming fixed-point decimating FIR. Returns raw accumulator values.
#[derive(Debug, Clone)]
pub struct FirDecimator {
    taps: Vec<i64>,
    rate_change: u32,
    history: Vec<i64>,
    pos: usize,
    phase: u32,
}

impl FirDecimator {
    pub fn new(config: &FirConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            taps: config.taps.iter().map(|&t| t as i64).collect(),
            rate_change: config.rate_change,
            history: vec![0; config.taps.len()],
            pos: 0,
            phase: 0,
        })
    }

    /// Output `k` is produced after input `k * R + R - 1`.
    #[inline]
    pub fn push(&mut self, x: i64) -> Option<i64> {
        let n = self.history.len();
        self.history[self.pos] = x;
        self.pos = (self.pos + 1) % n;
        self.phase += 1;
        if self.phase < self.rate_change {
            return None;
        }
        self.phase = 0;
        // history[pos] is now the oldest sample
        let mut acc = 0i64;
        for (k, &t) in self.taps.iter().enumerate() {
            let idx = (self.pos + n - 1 - k) % n;
            acc += t * self.history[idx];
        }
        Some(acc)
    }
}

/// Round half away from zero of `num / den`, `den > 0`.
pub fn div_round_half_away(num: i128, den: i128) -> i128 {
    debug_assert!(den > 0);
    let q = (num.abs() * 2 + den) / (2 * den);
    if num < 0 {
        -q
    } else {
        q
    }
}

/// Maps an accumulator value to a saturated output code. Returns the code
/// and whether it saturated.
pub fn scale_to_code(acc: i64, config: &FirConfig) -> (i32, bool) {
    let half = 1i128 << (config.output_bits - 1);
    let v = div_round_half_away(
        acc as i128 * half,
        config.input_full_scale as i128 * Q15_ONE as i128,
    );
    let (lo, hi) = (-half, half - 1);
    if v > hi {
        (hi as i32, true)
    } else if v < lo {
        (lo as i32, true)
    } else {
        (v as i32, false)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn designed() -> FirConfig {
        design_fir(&FirDesignSpec::default()).unwrap()
    }

    #[test]
    fn taps_are_symmetric_and_sum_to_one() {
        let fir = designed();
        assert_eq!(fir.taps.len(), 32);
        for k in 0..32 {
            assert_eq!(fir.taps[k], fir.taps[31 - k]);
        }
        assert_eq!(fir.taps.iter().map(|&t| t as i64).sum::<i64>(), Q15_ONE);
    }

    #[test]
    fn composite_dc_gain_is_unity() {
        let report = evaluate_design(&designed(), &FirDesignSpec::default());
        assert!((report.dc_gain - 1.0).abs() <= 2f64.powi(-10));
    }

    #[test]
    fn cutoff_above_intermediate_nyquist_rejected() {
        let spec = FirDesignSpec {
            cutoff_hz: 1200.0,
            ..Default::default()
        };
        assert!(matches!(
            design_fir(&spec),
            Err(Error::InvalidParameter { .. })
        ));
    }

    #[test]
    fn impossible_targets_surface_metric() {
        let spec = FirDesignSpec {
            max_ripple_db: 0.001,
            ..Default::default()
        };
        match design_fir(&spec) {
            Err(Error::DesignInfeasible { metric, .. }) => assert_eq!(metric, "passband_ripple_db"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn rounding_is_half_away_from_zero() {
        assert_eq!(div_round_half_away(5, 2), 3);
        assert_eq!(div_round_half_away(-5, 2), -3);
        assert_eq!(div_round_half_away(4, 3), 1);
        assert_eq!(div_round_half_away(-4, 3), -1);
        assert_eq!(div_round_half_away(0, 7), 0);
    }

    #[test]
    fn zero_in_zero_out() {
        let fir = designed();
        let mut d = FirDecimator::new(&fir).unwrap();
        for _ in 0..100 {
            if let Some(acc) = d.push(0) {
                assert_eq!(scale_to_code(acc, &fir), (0, false));
            }
        }
    }

    #[test]
    fn full_scale_dc_saturates() {
        let fir = designed();
        let mut d = FirDecimator::new(&fir).unwrap();
        let mut last = None;
        for _ in 0..100 {
            if let Some(acc) = d.push(fir.input_full_scale) {
                last = Some(scale_to_code(acc, &fir));
            }
        }
        assert_eq!(last, Some((2047, true)));
        let mut d = FirDecimator::new(&fir).unwrap();
        for _ in 0..100 {
            if let Some(acc) = d.push(-fir.input_full_scale) {
                last = Some(scale_to_code(acc, &fir));
            }
        }
        assert_eq!(last, Some((-2048, false)));
    }

    #[test]
    fn tap_file_round_trip() {
        let fir = designed();
        let mut buf = Vec::new();
        fir.write_taps(&mut buf, Some("config_hash=abc")).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text.lines().count(), 34);
        assert_eq!(FirConfig::read_taps(&buf[..]).unwrap(), fir.taps);
    }
}
