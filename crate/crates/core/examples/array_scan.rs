// Round-robin scan of the 2x2 array with the vessel over element 1, and
// the resulting per-element pulse amplitude.

use tactile_bp::config::RunConfig;
use tactile_bp::decimation::decimate_capture;
use tactile_bp::frontend::{scan, InputMode};
use tactile_bp::pipeline::{robust_peak_to_peak, select_strongest};

pub fn run_example() -> tactile_bp::Result<()> {
    let mut config = RunConfig::default();
    config.scene.waveform.duration_s = 3.0;
    let scene = config.pressure_scene()?;
    let capture = scan(
        &scene,
        &config.array,
        &config.membrane,
        &config.mux,
        &config.modulator_config(InputMode::Capacitive),
        scene.duration(),
    )?;
    let per_element = decimate_capture(&capture, &config.chain_config()?)?;

    println!(
        "{:>8} {:>8} {:>8} {:>12} {:>10}",
        "element", "visits", "valid", "p2p codes", "coupling"
    );
    for c in &per_element {
        let codes: Vec<f64> = c.valid_codes().iter().map(|&v| v as f64).collect();
        let center = config.array.element_center(c.element)?;
        println!(
            "{:>8} {:>8} {:>8} {:>12.1} {:>10.3}",
            c.element,
            c.segments.len(),
            codes.len(),
            robust_peak_to_peak(&codes),
            scene.coupling_factor(center)
        );
    }
    println!("\nstrongest element: {}", select_strongest(&per_element)?);
    Ok(())
}

#[allow(dead_code)]
fn main() -> tactile_bp::Result<()> {
    run_example()
}
