use proptest::prelude::*;
use tactile_bp::analysis::{spectral_slope_db_per_decade, welch_psd};
use tactile_bp::decimation::{decimate_capture, decimate_chain, ChainConfig, FirDesignSpec};
use tactile_bp::frontend::{
    charge_input, run_modulator, scan, BitStream, ModulatorConfig, MuxSchedule,
};
use tactile_bp::membrane::Membrane;
use tactile_bp::scene::{synth_abp, ArrayLayout, ArterialWaveformSpec, PressureScene};

fn chain() -> ChainConfig {
    ChainConfig::design(&FirDesignSpec::default()).unwrap()
}

fn decimated_mean_for_capacitance(x_target: f64) -> f64 {
    let cfg = ModulatorConfig::default();
    let cs = cfg.cref + x_target * cfg.c_full_scale;
    let x = charge_input(cs, &cfg).unwrap();
    let bits = run_modulator(&vec![x; 1 << 17], &cfg, Default::default()).unwrap();
    let y = decimate_chain(&bits, &chain()).unwrap();
    y.samples.iter().map(|&v| v as f64).sum::<f64>() / y.len() as f64
}

#[test]
fn dc_inputs_are_tracked_within_one_lsb() {
    for x in [-0.5, -0.25, 0.0, 0.25, 0.5] {
        let mean = decimated_mean_for_capacitance(x);
        let expect = 2048.0 * x;
        assert!(
            (mean - expect).abs() <= 1.0,
            "x = {x}: mean {mean}, expected {expect}"
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn dc_tracking_over_the_stable_range(x in -0.7f64..0.7) {
        let mean = decimated_mean_for_capacitance(x);
        prop_assert!((mean - 2048.0 * x).abs() <= 1.0, "x = {}: {}", x, mean);
    }
}

#[test]
fn quantization_noise_rises_at_forty_db_per_decade() {
    let cfg = ModulatorConfig::voltage();
    let fs = cfg.sample_rate as f64;
    let f_tone = 250.0;
    let x: Vec<f64> = (0..1 << 20)
        .map(|n| 0.01 * (2.0 * std::f64::consts::PI * f_tone * n as f64 / fs).sin())
        .collect();
    let bits = run_modulator(&x, &cfg, Default::default()).unwrap();
    let b: Vec<f64> = bits.bits.iter().map(|&v| v as f64).collect();
    let psd = welch_psd(&b, fs, 1 << 14).unwrap();
    let slope = spectral_slope_db_per_decade(&psd, 1000.0, 20_000.0, &[f_tone], 50.0);
    assert!((slope - 40.0).abs() <= 6.0, "slope {slope}");
}

#[test]
fn bitstreams_are_reproducible_under_a_seed() {
    let mut cfg = ModulatorConfig::voltage();
    cfg.noise_rms = 1e-3;
    cfg.seed = 77;
    let x: Vec<f64> = (0..50_000).map(|n| 0.3 * (n as f64 * 1e-3).sin()).collect();
    let a = run_modulator(&x, &cfg, Default::default()).unwrap();
    let b = run_modulator(&x, &cfg, Default::default()).unwrap();
    assert_eq!(a, b);
    cfg.seed = 78;
    assert_ne!(a, run_modulator(&x, &cfg, Default::default()).unwrap());
}

#[test]
fn packed_bitstream_file_round_trips() {
    let x: Vec<f64> = (0..1001).map(|n| 0.5 * (n as f64 * 0.01).sin()).collect();
    let bits = run_modulator(&x, &ModulatorConfig::voltage(), Default::default()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.sdm");
    bits.write_packed(std::fs::File::create(&path).unwrap())
        .unwrap();
    let back = BitStream::read_packed(std::fs::File::open(&path).unwrap()).unwrap();
    assert_eq!(back, bits);
}

fn small_scene(duration_s: f64) -> PressureScene {
    let spec = ArterialWaveformSpec {
        duration_s,
        ..Default::default()
    };
    PressureScene {
        waveform: synth_abp(&spec).unwrap(),
        vessel_position: ArrayLayout::default().element_center(1).unwrap(),
        coupling_width: 100e-6,
        contact_bias: 2000.0,
        backpressure: 8000.0,
    }
}

#[test]
fn round_robin_yields_k_samples_per_visit() {
    let k = 40;
    let schedule = MuxSchedule {
        element_order: vec![0, 1, 2, 3],
        dwell: 128 * k,
        blanking: 256,
    };
    let revolutions = 6;
    let duration = (revolutions * 4 * 128 * k) as f64 / 128_000.0;
    let capture = scan(
        &small_scene(2.0),
        &ArrayLayout::default(),
        &Membrane::default(),
        &schedule,
        &ModulatorConfig::default(),
        duration,
    )
    .unwrap();
    assert_eq!(capture.segments.len(), revolutions * 4);
    let per_element = decimate_capture(&capture, &chain()).unwrap();
    assert_eq!(per_element.len(), 4);
    for c in &per_element {
        assert_eq!(c.segments.len(), revolutions);
        for s in &c.segments {
            assert_eq!(s.len(), k);
            // blanking (2 outputs) plus the filter transient
            assert_eq!(s.valid_count(), k - 2 - 17);
            assert!(s.valid[..19].iter().all(|v| !v));
        }
    }
}

#[test]
fn contiguous_visits_of_one_element_stay_valid() {
    let capture = scan(
        &small_scene(1.0),
        &ArrayLayout::default(),
        &Membrane::default(),
        &MuxSchedule::single(1, 128 * 50),
        &ModulatorConfig::default(),
        0.5,
    )
    .unwrap();
    let per_element = decimate_capture(&capture, &chain()).unwrap();
    let valid: usize = per_element[0]
        .segments
        .iter()
        .map(|s| s.valid_count())
        .sum();
    assert_eq!(valid, 500 - 17);
}
