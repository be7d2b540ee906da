//! Converter characterization: windowed FFT spectra in dBFS and the usual
//! single-tone metrics (SNR, SNDR, THD, ENOB).

use std::f64::consts::PI;
use std::fmt;
use std::io::Write;

use rustfft::{num_complex::Complex, FftPlanner};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Window {
    #[default]
    Rectangular,
    Hann,
}

impl Window {
    pub fn as_str(&self) -> &'static str {
        match self {
            Window::Rectangular => "rectangular",
            Window::Hann => "hann",
        }
    }

    pub fn coefficients(&self, n: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; n],
            // periodic form: exact three-bin leakage for coherent tones
            Window::Hann => (0..n)
                .map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / n as f64).cos())
                .collect(),
        }
    }
}

impl std::str::FromStr for Window {
    type Err = String;
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "rectangular" | "rect" => Ok(Window::Rectangular),
            "hann" => Ok(Window::Hann),
            other => Err(format!("unknown window `{other}`")),
        }
    }
}

/// One-sided spectrum of a real record, bins `0..=N/2`.
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    pub fft_length: usize,
    pub sample_rate: f64,
    pub window: Window,
    /// Power per bin relative to a full-scale sine, normalized by the
    /// window's noise bandwidth so that summing bins integrates power.
    pub power: Vec<f64>,
    /// Power per bin normalized by the window's coherent gain, so a
    /// full-scale sine centered on a bin reads 1 (0 dBFS).
    pub tone_power: Vec<f64>,
}

impl Spectrum {
    pub fn bin_frequency(&self, k: usize) -> f64 {
        k as f64 * self.sample_rate / self.fft_length as f64
    }

    pub fn mag_dbfs(&self) -> Vec<f64> {
        self.tone_power
            .iter()
            .map(|&p| 10.0 * p.max(1e-40).log10())
            .collect()
    }

    /// Strongest bin, excluding DC and bin 1.
    pub fn peak_bin(&self) -> usize {
        (2..self.power.len())
            .max_by(|&a, &b| self.power[a].total_cmp(&self.power[b]))
            .unwrap_or(0)
    }

    /// Total power (full-scale-sine units), i.e. `mean(x²) / (FS² / 2)`.
    pub fn total_power(&self) -> f64 {
        self.power.iter().sum()
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "freq_hz,mag_dbfs")?;
        for (k, m) in self.mag_dbfs().iter().enumerate() {
            writeln!(w, "{},{}", self.bin_frequency(k), m)?;
        }
        Ok(())
    }
}

/// Spectrum of the first `fft_length` samples, normalized to `full_scale`
/// (peak amplitude of a full-scale sine).
pub fn spectrum(
    samples: &[f64],
    full_scale: f64,
    sample_rate: f64,
    fft_length: usize,
    window: Window,
) -> Result<Spectrum> {
    if !fft_length.is_power_of_two() || fft_length < 4 {
        return Err(Error::param("fft_length", "must be a power of two >= 4"));
    }
    if samples.len() < fft_length {
        return Err(Error::InsufficientSamples {
            needed: fft_length,
            got: samples.len(),
        });
    }
    let w = window.coefficients(fft_length);
    let s1: f64 = w.iter().sum();
    let s2: f64 = w.iter().map(|v| v * v).sum();
    let mut buf: Vec<Complex<f64>> = samples[..fft_length]
        .iter()
        .zip(&w)
        .map(|(&x, &wi)| Complex::new(x * wi, 0.0))
        .collect();
    FftPlanner::new()
        .plan_fft_forward(fft_length)
        .process(&mut buf);

    let half = fft_length / 2;
    let fs2 = full_scale * full_scale / 2.0;
    let mut power = Vec::with_capacity(half + 1);
    let mut tone_power = Vec::with_capacity(half + 1);
    for (k, c) in buf.iter().take(half + 1).enumerate() {
        let m2 = c.norm_sqr();
        let one_sided = if k == 0 || k == half { 1.0 } else { 2.0 };
        power.push(one_sided * m2 / (fft_length as f64 * s2) / fs2);
        tone_power.push(one_sided * m2 / (s1 * s1) / fs2);
    }
    Ok(Spectrum {
        fft_length,
        sample_rate,
        window,
        power,
        tone_power,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumMetrics {
    pub fft_length: usize,
    pub signal_bin: usize,
    pub signal_dbfs: f64,
    pub snr_db: f64,
    pub sndr_db: f64,
    pub thd_db: f64,
    pub enob: f64,
    pub window: Window,
}

/// `(SNDR - 1.76) / 6.02`.
pub fn enob_from_sndr(sndr_db: f64) -> f64 {
    (sndr_db - 1.76) / 6.02
}

fn folded_bin(k: usize, n: usize) -> usize {
    let k = k % n;
    if k > n / 2 {
        n - k
    } else {
        k
    }
}

/// Single-tone metrics. DC and bin 1 are ignored; `skirt_bins` on either
/// side of the tone and of each of the first `harmonic_count` harmonics
/// (2nd, 3rd, …) are attributed to that component. SNDR counts everything
/// else plus harmonics as error; SNR counts only the noise bins and
/// extrapolates their mean density over the harmonic bins.
pub fn snr_sndr(
    spec: &Spectrum,
    signal_bin: usize,
    harmonic_count: usize,
    skirt_bins: usize,
) -> Result<SpectrumMetrics> {
    let n = spec.fft_length;
    let last = spec.power.len() - 1;
    if signal_bin == 0 || signal_bin >= n / 2 {
        return Err(Error::param("signal_bin", "must lie in (0, fft_length/2)"));
    }
    #[derive(Clone, Copy, PartialEq)]
    enum Owner {
        Noise,
        Excluded,
        Signal,
        Harmonic,
    }
    let mut owner = vec![Owner::Noise; last + 1];
    owner[0] = Owner::Excluded;
    owner[1] = Owner::Excluded;
    let span = |c: usize| c.saturating_sub(skirt_bins)..=(c + skirt_bins).min(last);
    for k in span(signal_bin) {
        owner[k] = Owner::Signal;
    }
    for h in 2..(2 + harmonic_count) {
        let b = folded_bin(h * signal_bin, n);
        for k in span(b) {
            if owner[k] == Owner::Noise {
                owner[k] = Owner::Harmonic;
            }
        }
    }
    let (mut sig, mut noise, mut harm) = (0.0, 0.0, 0.0);
    let (mut noise_bins, mut harm_bins) = (0usize, 0usize);
    for (k, &p) in spec.power.iter().enumerate() {
        match owner[k] {
            Owner::Signal => sig += p,
            Owner::Noise => {
                noise += p;
                noise_bins += 1;
            }
            Owner::Harmonic => {
                harm += p;
                harm_bins += 1;
            }
            Owner::Excluded => {}
        }
    }
    let noise_mean = if noise_bins > 0 {
        noise / noise_bins as f64
    } else {
        0.0
    };
    let noise_total = noise + noise_mean * harm_bins as f64;
    let db = |v: f64| 10.0 * v.max(1e-300).log10();
    let sndr_db = db(sig / (noise + harm).max(1e-300));
    Ok(SpectrumMetrics {
        fft_length: n,
        signal_bin,
        signal_dbfs: db(sig),
        snr_db: db(sig / noise_total.max(1e-300)),
        sndr_db,
        thd_db: db(harm.max(1e-300) / sig),
        enob: enob_from_sndr(sndr_db),
        window: spec.window,
    })
}

impl SpectrumMetrics {
    fn pairs(&self) -> Vec<(&'static str, String)> {
        vec![
            ("fft_length", self.fft_length.to_string()),
            ("window", self.window.as_str().to_string()),
            ("signal_bin", self.signal_bin.to_string()),
            ("signal_dbfs", format!("{:.4}", self.signal_dbfs)),
            ("snr_db", format!("{:.4}", self.snr_db)),
            ("sndr_db", format!("{:.4}", self.sndr_db)),
            ("thd_db", format!("{:.4}", self.thd_db)),
            ("enob", format!("{:.4}", self.enob)),
        ]
    }

    /// Flat `key=value` block, one per line.
    pub fn to_key_value(&self) -> String {
        self.pairs()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::json!({
            "fft_length": self.fft_length,
            "window": self.window.as_str(),
            "signal_bin": self.signal_bin,
            "signal_dbfs": self.signal_dbfs,
            "snr_db": self.snr_db,
            "sndr_db": self.sndr_db,
            "thd_db": self.thd_db,
            "enob": self.enob,
        })
        .to_string()
    }
}

impl fmt::Display for SpectrumMetrics {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_key_value())
    }
}

/// Welch power spectral density (units²/Hz), Hann segments with 50 %
/// overlap. Returns `(frequency, psd)` for bins `0..=segment/2`.
pub fn welch_psd(samples: &[f64], sample_rate: f64, segment: usize) -> Result<Vec<(f64, f64)>> {
    if !segment.is_power_of_two() || segment < 8 {
        return Err(Error::param("segment", "must be a power of two >= 8"));
    }
    if samples.len() < segment {
        return Err(Error::InsufficientSamples {
            needed: segment,
            got: samples.len(),
        });
    }
    let w = Window::Hann.coefficients(segment);
    let s2: f64 = w.iter().map(|v| v * v).sum();
    let fft = FftPlanner::new().plan_fft_forward(segment);
    let half = segment / 2;
    let mut acc = vec![0.0; half + 1];
    let mut count = 0usize;
    let mut start = 0;
    let mut buf = vec![Complex::new(0.0, 0.0); segment];
    while start + segment <= samples.len() {
        for (b, (&x, &wi)) in buf.iter_mut().zip(samples[start..].iter().zip(&w)) {
            *b = Complex::new(x * wi, 0.0);
        }
        fft.process(&mut buf);
        for (k, a) in acc.iter_mut().enumerate() {
            let one_sided = if k == 0 || k == half { 1.0 } else { 2.0 };
            *a += one_sided * buf[k].norm_sqr() / (sample_rate * s2);
        }
        count += 1;
        start += segment / 2;
    }
    Ok(acc
        .into_iter()
        .enumerate()
        .map(|(k, a)| (k as f64 * sample_rate / segment as f64, a / count as f64))
        .collect())
}

/// Least-squares slope of `10 log10(psd)` against `log10(f)` over
/// `[f_lo, f_hi]`, in dB per decade. Bins within `guard_hz` of any
/// frequency in `exclude` are skipped.
pub fn spectral_slope_db_per_decade(
    psd: &[(f64, f64)],
    f_lo: f64,
    f_hi: f64,
    exclude: &[f64],
    guard_hz: f64,
) -> f64 {
    let pts: Vec<(f64, f64)> = psd
        .iter()
        .filter(|(f, p)| *f >= f_lo && *f <= f_hi && *p > 0.0)
        .filter(|(f, _)| exclude.iter().all(|e| (f - e).abs() > guard_hz))
        .map(|&(f, p)| (f.log10(), 10.0 * p.log10()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    sxy / sxx
}
