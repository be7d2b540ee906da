//! Two-stage fixed-point decimation, 128 kS/s single-bit → 1 kS/s 12-bit:
//! a 3rd-order CIC (R1 = 64) followed by a 32-tap droop-compensating FIR
//! (R2 = 2).

mod chain;
mod cic;
mod fir;

pub use chain::{
    decimate_capture, decimate_chain, ChainConfig, DecimatedStream, Decimator, ElementCapture,
};
pub use cic::{cic_decimate, CicConfig, CicDecimator};
pub use fir::{
    composite_magnitude, design_fir, div_round_half_away, evaluate_design, hamming, scale_to_code,
    DesignReport, FirConfig, FirDecimator, FirDesignSpec, ACCUMULATOR_BITS, Q15_ONE,
};

/// Full-scale (|x| = 1) magnitude of the 12-bit output code.
pub const OUTPUT_FULL_SCALE: f64 = 2048.0;

/// Applies only the FIR stage to an intermediate-rate integer series.
pub fn fir_decimate(x: &[i64], config: &FirConfig) -> crate::Result<DecimatedStream> {
    let mut fir = FirDecimator::new(config)?;
    let mut saturation_count = 0;
    let samples: Vec<i16> = x
        .iter()
        .filter_map(|&v| fir.push(v))
        .map(|acc| {
            let (code, sat) = scale_to_code(acc, config);
            saturation_count += sat as usize;
            code as i16
        })
        .collect();
    let r2 = config.rate_change as f64;
    Ok(DecimatedStream {
        valid: vec![true; samples.len()],
        samples,
        rate: config.output_rate_hz(),
        element_tag: None,
        start_time: (r2 - 1.0) / config.input_rate_hz,
        group_delay: config.group_delay() / config.input_rate_hz,
        saturation_count,
    })
}
