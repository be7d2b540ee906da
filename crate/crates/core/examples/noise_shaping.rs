// Modulator bitstream spectrum: a small tone, then quantization noise that
// climbs at roughly 40 dB per decade.

use std::f64::consts::PI;

use tactile_bp::analysis::{spectral_slope_db_per_decade, welch_psd};
use tactile_bp::frontend::{run_modulator, ModulatorConfig};

pub fn run_example() -> tactile_bp::Result<()> {
    let cfg = ModulatorConfig::voltage();
    let fs = cfg.sample_rate as f64;
    let tone = 250.0;
    let x: Vec<f64> = (0..1 << 19)
        .map(|n| 0.01 * (2.0 * PI * tone * n as f64 / fs).sin())
        .collect();
    let bits = run_modulator(&x, &cfg, Default::default())?;
    let b: Vec<f64> = bits.bits.iter().map(|&v| v as f64).collect();
    let psd = welch_psd(&b, fs, 1 << 13)?;

    let band_db = |lo: f64, hi: f64| {
        let (sum, n) = psd
            .iter()
            .filter(|(f, _)| *f >= lo && *f < hi && (*f - tone).abs() > 50.0)
            .fold((0.0, 0), |(s, n), (_, p)| (s + p, n + 1));
        10.0 * (sum / n as f64).log10()
    };
    println!("{:>18} {:>14}", "band (Hz)", "mean PSD dB/Hz");
    for (lo, hi) in [
        (10.0, 500.0),
        (500.0, 2e3),
        (2e3, 8e3),
        (8e3, 32e3),
        (32e3, 64e3),
    ] {
        println!(
            "{:>18} {:>14.1}",
            format!("{lo:.0}-{hi:.0}"),
            band_db(lo, hi)
        );
    }
    let slope = spectral_slope_db_per_decade(&psd, 1e3, 20e3, &[tone], 50.0);
    println!("\nfitted slope 1-20 kHz: {slope:.1} dB/decade");
    Ok(())
}

#[allow(dead_code)]
fn main() -> tactile_bp::Result<()> {
    run_example()
}
