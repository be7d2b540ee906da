// Full measurement: scan, pick the element over the artery, record it
// continuously, calibrate against a cuff reading and report each beat.

use tactile_bp::config::RunConfig;
use tactile_bp::pipeline::{measure, waveform_correlation};

pub fn run_example() -> tactile_bp::Result<()> {
    let mut config = RunConfig::default();
    config.scene.waveform.systolic_mmhg = 135.0;
    config.scene.waveform.diastolic_mmhg = 85.0;
    config.pipeline.cuff.systolic_mmhg = 135.0;
    config.pipeline.cuff.diastolic_mmhg = 85.0;
    // anchors from the first 4 s only; later beats are predictions
    config.pipeline.calibration_window_s = Some(4.0);
    config.validate()?;

    let setup = config.measurement_setup()?;
    let report = measure(&setup)?;
    print!("{}", report.metrics_text());

    let values: Vec<f64> = report.waveform.iter().map(|w| w.1).collect();
    let summary = setup.beats.detect(&values, report.raw.rate);
    // a beat spans two consecutive systolic peaks, so there is one fewer
    println!(
        "\n{} systolic peaks, {} complete beats",
        summary.peaks.len(),
        summary.beats.len()
    );
    println!("{:>6} {:>10} {:>10} {:>10}", "beat", "t (s)", "sys", "dia");
    for (i, b) in summary.beats.iter().enumerate() {
        println!(
            "{i:>6} {:>10.3} {:>10.1} {:>10.1}",
            report.waveform[b.peak_index].0, b.peak, b.trough
        );
    }
    println!(
        "\ncorrelation with the arterial reference: {:.5}",
        waveform_correlation(&report.waveform, &setup.scene.waveform)
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> tactile_bp::Result<()> {
    run_example()
}
