// Designs the droop-compensating FIR for the default CIC and prints the
// composite response at a few frequencies of interest.

use tactile_bp::decimation::{composite_magnitude, evaluate_design, ChainConfig, FirDesignSpec};

pub fn run_example() -> tactile_bp::Result<()> {
    let spec = FirDesignSpec::default();
    let chain = ChainConfig::design(&spec)?;
    let report = evaluate_design(&chain.fir, &spec);

    println!("taps (Q1.15): {:?}", chain.fir.taps);
    println!(
        "sum of taps:  {}",
        chain.fir.taps.iter().map(|&t| t as i32).sum::<i32>()
    );
    println!("group delay:  {:.3} ms", chain.group_delay() * 1e3);
    println!("passband ripple {:.3} dB", report.ripple_db);
    println!("gain at cutoff  {:.2} dB", report.cutoff_gain_db);
    println!(
        "image rejection {:.1} dB (worst near {} Hz)",
        report.image_rejection_db, report.worst_image_hz
    );
    println!();

    let fs = spec.modulator_rate_hz;
    println!(
        "{:>8} {:>10} {:>10} {:>12}",
        "f (Hz)", "CIC dB", "FIR dB", "total dB"
    );
    for f in [
        0.0, 100.0, 250.0, 400.0, 500.0, 750.0, 1000.0, 1500.0, 2000.0,
    ] {
        let db = |m: f64| 20.0 * m.max(1e-12).log10();
        println!(
            "{f:>8.0} {:>10.3} {:>10.3} {:>12.3}",
            db(chain.cic.magnitude(f, fs)),
            db(chain.fir.magnitude(f)),
            db(composite_magnitude(&chain.fir, &chain.cic, fs, f))
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() -> tactile_bp::Result<()> {
    run_example()
}
