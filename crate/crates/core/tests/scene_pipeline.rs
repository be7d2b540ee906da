use proptest::prelude::*;
use tactile_bp::config::RunConfig;
use tactile_bp::pipeline::{measure, pearson, waveform_correlation};
use tactile_bp::scene::{synth_abp, ArrayLayout, ArterialWaveformSpec};
use tactile_bp::Error;

/// Strict local maxima more than 2/3 of the way from the minimum to the
/// maximum; deliberately unrelated to the pipeline's beat detector.
fn count_tall_maxima(x: &[f64]) -> usize {
    let (lo, hi) = x
        .iter()
        .fold((f64::MAX, f64::MIN), |(l, h), &v| (l.min(v), h.max(v)));
    let level = lo + (hi - lo) * 2.0 / 3.0;
    (1..x.len() - 1)
        .filter(|&i| x[i] > level && x[i] > x[i - 1] && x[i] >= x[i + 1])
        .count()
}

#[test]
fn ten_seconds_at_sixty_bpm_has_ten_beats() {
    for seed in [0, 1, 2] {
        let w = synth_abp(&ArterialWaveformSpec {
            morphology_seed: seed,
            ..Default::default()
        })
        .unwrap();
        assert_eq!(count_tall_maxima(&w.samples), 10, "seed {seed}");
    }
}

fn min_consecutive_beat_correlation(seed: u64) -> f64 {
    let spec = ArterialWaveformSpec {
        morphology_seed: seed,
        ..Default::default()
    };
    let w = synth_abp(&spec).unwrap();
    let per_beat = (spec.beat_period() * spec.sample_rate_hz).round() as usize;
    let beats: Vec<&[f64]> = w.samples.chunks_exact(per_beat).collect();
    beats
        .windows(2)
        .map(|pair| pearson(pair[0], pair[1]))
        .fold(1.0, f64::min)
}

#[test]
fn identical_beats_without_jitter() {
    assert!(min_consecutive_beat_correlation(0) > 1.0 - 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn consecutive_beats_are_nearly_identical(seed in 1u64..u64::MAX) {
        let r = min_consecutive_beat_correlation(seed);
        prop_assert!(r >= 0.999, "r = {}", r);
    }
}

fn base_config() -> RunConfig {
    RunConfig::parse(include_str!("../configs/measure.cfg")).unwrap()
}

#[test]
fn bundled_scene_recovers_cuff_values() {
    let config = base_config();
    let setup = config.measurement_setup().unwrap();
    let report = measure(&setup).unwrap();
    assert_eq!(report.selected_element, 1);
    assert_eq!(report.beat_count, 10);
    assert!((report.mean_systolic_mmhg - 120.0).abs() <= 2.0);
    assert!((report.mean_diastolic_mmhg - 80.0).abs() <= 2.0);
    let r = waveform_correlation(&report.waveform, &setup.scene.waveform);
    assert!(r >= 0.99, "correlation {r}");
}

#[test]
fn vessel_over_each_element_selects_that_element() {
    let layout = ArrayLayout::default();
    for element in 0..layout.len() {
        let mut config = base_config();
        let [x, y] = layout.element_center(element).unwrap();
        config.scene.vessel_x = x;
        config.scene.vessel_y = y;
        config.scene.waveform.duration_s = 4.0;
        let report = measure(&config.measurement_setup().unwrap()).unwrap();
        assert_eq!(report.selected_element, element);
    }
}

#[test]
fn calibrating_on_a_window_predicts_the_rest() {
    let mut config = base_config();
    config.pipeline.calibration_window_s = Some(4.0);
    config.seed = 11;
    let report = measure(&config.measurement_setup().unwrap()).unwrap();
    let late: Vec<f64> = report
        .waveform
        .iter()
        .filter(|(t, _)| *t > 5.0)
        .map(|w| w.1)
        .collect();
    let max = late.iter().cloned().fold(f64::MIN, f64::max);
    let min = late.iter().cloned().fold(f64::MAX, f64::min);
    assert!((max - 120.0).abs() <= 2.0, "{max}");
    assert!((min - 80.0).abs() <= 2.0, "{min}");
}

/// Times where `x` rises through `level`, linearly interpolated.
fn upward_crossings(t: &[f64], x: &[f64], level: f64) -> Vec<f64> {
    (1..x.len())
        .filter(|&i| x[i - 1] < level && x[i] >= level)
        .map(|i| t[i - 1] + (level - x[i - 1]) / (x[i] - x[i - 1]) * (t[i] - t[i - 1]))
        .collect()
}

#[test]
fn beat_timing_is_delay_compensated() {
    let config = base_config();
    let setup = config.measurement_setup().unwrap();
    let report = measure(&setup).unwrap();
    let truth = &setup.scene.waveform;
    let tt: Vec<f64> = (0..truth.samples.len()).map(|i| truth.time_of(i)).collect();
    let expected = upward_crossings(&tt, &truth.samples, 100.0);
    let (tm, xm): (Vec<f64>, Vec<f64>) = report.waveform.iter().cloned().unzip();
    let measured = upward_crossings(&tm, &xm, 100.0);
    assert_eq!(expected.len(), 10);
    assert_eq!(measured.len(), 10);
    for (m, e) in measured.iter().zip(&expected) {
        assert!((m - e).abs() < 2e-3, "{m} vs {e}");
    }
}

#[test]
fn larger_pulse_gives_larger_raw_swing() {
    let mut last = 0.0;
    for pulse in [10.0, 20.0, 40.0, 60.0] {
        let mut config = base_config();
        config.scene.waveform.diastolic_mmhg = 80.0;
        config.scene.waveform.systolic_mmhg = 80.0 + pulse;
        config.pipeline.cuff.systolic_mmhg = 80.0 + pulse;
        config.scene.waveform.duration_s = 4.0;
        let report = measure(&config.measurement_setup().unwrap()).unwrap();
        let p2p = report.calibration.raw_sys - report.calibration.raw_dia;
        assert!(p2p > last, "pulse {pulse}: {p2p} <= {last}");
        last = p2p;
    }
}

#[test]
fn flat_scene_cannot_be_calibrated() {
    let mut config = base_config();
    config.scene.waveform.systolic_mmhg = 80.05;
    config.scene.waveform.duration_s = 4.0;
    config.pipeline.cuff.systolic_mmhg = 120.0;
    let err = measure(&config.measurement_setup().unwrap()).unwrap_err();
    assert!(matches!(err, Error::CalibrationImpossible(_)), "{err}");
    assert_eq!(err.exit_code(), 4);
}
