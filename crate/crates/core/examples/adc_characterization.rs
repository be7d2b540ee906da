// Single-tone test of the converter at a few input levels.

use tactile_bp::commands::adc_characterization;
use tactile_bp::config::RunConfig;

pub fn run_example() -> tactile_bp::Result<()> {
    let config = RunConfig::default();
    let freq = config.adc_test.freq_hz;
    println!(
        "{:>12} {:>10} {:>10} {:>8}",
        "level dBFS", "SNR dB", "SNDR dB", "ENOB"
    );
    for amplitude in [0.91, 0.5, 0.1, 0.01] {
        let r = adc_characterization(amplitude, freq, &config)?;
        println!(
            "{:>12.2} {:>10.2} {:>10.2} {:>8.3}",
            20.0 * f64::log10(amplitude),
            r.metrics.snr_db,
            r.metrics.sndr_db,
            r.metrics.enob
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> tactile_bp::Result<()> {
    run_example()
}
