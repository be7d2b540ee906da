//! End-to-end measurement: multiplexed scan, strongest-element selection,
//! continuous acquisition of that element, beat extraction and two-point
//! calibration against a cuff reading.

use std::io::Write;

use crate::decimation::{
    decimate_capture, decimate_chain, ChainConfig, DecimatedStream, ElementCapture,
};
use crate::error::{Error, Result};
use crate::frontend::{element_input_series, run_modulator, scan, ModulatorConfig, MuxSchedule};
use crate::membrane::Membrane;
use crate::scene::{ArrayLayout, PressureScene, PressureSeries};

/// Affine raw-code → mmHg map pinned at two anchors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CalibrationMap {
    /// mmHg per code.
    pub gain: f64,
    /// mmHg at code 0.
    pub offset: f64,
    pub raw_sys: f64,
    pub raw_dia: f64,
    pub sys_mmhg: f64,
    pub dia_mmhg: f64,
}

impl CalibrationMap {
    /// Evaluated as an interpolation between the anchors so that both
    /// anchors map back exactly.
    pub fn apply(&self, raw: f64) -> f64 {
        let t = (raw - self.raw_dia) / (self.raw_sys - self.raw_dia);
        (1.0 - t) * self.dia_mmhg + t * self.sys_mmhg
    }
}

pub fn calibrate_two_point(
    raw_sys: f64,
    raw_dia: f64,
    sys_mmhg: f64,
    dia_mmhg: f64,
) -> Result<CalibrationMap> {
    if raw_sys == raw_dia {
        return Err(Error::DegenerateAnchors(raw_sys));
    }
    if !(sys_mmhg > dia_mmhg) {
        return Err(Error::param("cuff", "systolic must exceed diastolic"));
    }
    let gain = (sys_mmhg - dia_mmhg) / (raw_sys - raw_dia);
    if !gain.is_finite() || gain == 0.0 {
        return Err(Error::DegenerateAnchors(raw_sys));
    }
    Ok(CalibrationMap {
        gain,
        offset: dia_mmhg - gain * raw_dia,
        raw_sys,
        raw_dia,
        sys_mmhg,
        dia_mmhg,
    })
}

/// Linear-interpolated percentile of sorted data, `q` in [0, 1].
fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let i = pos.floor() as usize;
    let frac = pos - i as f64;
    if i + 1 < sorted.len() {
        sorted[i] + frac * (sorted[i + 1] - sorted[i])
    } else {
        sorted[i]
    }
}

/// 95th minus 5th percentile.
pub fn robust_peak_to_peak(values: &[f64]) -> f64 {
    if values.is_empty() {
        return 0.0;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    percentile_sorted(&sorted, 0.95) - percentile_sorted(&sorted, 0.05)
}

/// Valid decimated data an element needs before it is ranked.
pub const MIN_VALID_SECONDS: f64 = 0.25;

/// Element with the largest robust peak-to-peak among those with at least
/// [`MIN_VALID_SECONDS`] of valid samples; ties go to the lowest element
/// index.
pub fn select_strongest(per_element: &[ElementCapture]) -> Result<usize> {
    let mut ranked: Vec<(usize, f64)> = per_element
        .iter()
        .filter(|c| {
            let rate = c.segments.first().map(|s| s.rate).unwrap_or(0.0);
            rate > 0.0 && c.valid_codes().len() as f64 >= MIN_VALID_SECONDS * rate
        })
        .map(|c| {
            let codes: Vec<f64> = c.valid_codes().iter().map(|&v| v as f64).collect();
            (c.element, robust_peak_to_peak(&codes))
        })
        .collect();
    ranked.sort_by_key(|&(e, _)| e);
    let mut best: Option<(usize, f64)> = None;
    for (e, p2p) in ranked {
        if best.is_none_or(|(_, b)| p2p > b) {
            best = Some((e, p2p));
        }
    }
    best.map(|(e, _)| e).ok_or(Error::NoValidData)
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeatDetection {
    /// Minimum spacing between accepted systolic peaks (s).
    pub refractory_s: f64,
    /// Peak prominence threshold as a fraction of robust peak-to-peak.
    pub prominence_fraction: f64,
    /// Below this robust peak-to-peak (input units) there is no pulse.
    pub min_pulse: f64,
}

impl Default for BeatDetection {
    fn default() -> Self {
        Self {
            refractory_s: 0.2,
            prominence_fraction: 0.25,
            min_pulse: 8.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Beat {
    pub peak_index: usize,
    pub peak: f64,
    /// Minimum between the previous peak and this one.
    pub trough_index: usize,
    pub trough: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct BeatSummary {
    /// Accepted systolic peaks, by index.
    pub peaks: Vec<(usize, f64)>,
    /// One beat per pair of consecutive peaks.
    pub beats: Vec<Beat>,
}

impl BeatSummary {
    pub fn mean_peak(&self) -> f64 {
        self.peaks.iter().map(|p| p.1).sum::<f64>() / self.peaks.len() as f64
    }

    pub fn mean_trough(&self) -> f64 {
        self.beats.iter().map(|b| b.trough).sum::<f64>() / self.beats.len() as f64
    }
}

fn prominence(x: &[f64], i: usize) -> f64 {
    let h = x[i];
    let mut left = h;
    for &v in x[..i].iter().rev() {
        if v > h {
            break;
        }
        left = left.min(v);
    }
    let mut right = h;
    for &v in &x[i + 1..] {
        if v > h {
            break;
        }
        right = right.min(v);
    }
    h - left.max(right)
}

impl BeatDetection {
    /// Systolic peaks are local maxima with sufficient prominence, thinned
    /// tallest-first to the refractory spacing.
    pub fn detect(&self, x: &[f64], rate: f64) -> BeatSummary {
        let empty = BeatSummary {
            peaks: Vec::new(),
            beats: Vec::new(),
        };
        if x.len() < 3 {
            return empty;
        }
        let p2p = robust_peak_to_peak(x);
        if p2p < self.min_pulse {
            return empty;
        }
        let threshold = self.prominence_fraction * p2p;
        let mut candidates: Vec<usize> = (1..x.len() - 1)
            .filter(|&i| x[i] > x[i - 1] && x[i] >= x[i + 1])
            .filter(|&i| prominence(x, i) >= threshold)
            .collect();
        candidates.sort_by(|&a, &b| x[b].total_cmp(&x[a]).then(a.cmp(&b)));
        let min_gap = (self.refractory_s * rate).ceil() as usize;
        let mut kept: Vec<usize> = Vec::new();
        for c in candidates {
            if kept.iter().all(|&k| k.abs_diff(c) >= min_gap) {
                kept.push(c);
            }
        }
        kept.sort_unstable();
        let beats = kept
            .windows(2)
            .map(|w| {
                let (ti, tv) = (w[0]..=w[1])
                    .map(|j| (j, x[j]))
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .expect("non-empty range");
                Beat {
                    peak_index: w[1],
                    peak: x[w[1]],
                    trough_index: ti,
                    trough: tv,
                }
            })
            .collect();
        BeatSummary {
            peaks: kept.iter().map(|&i| (i, x[i])).collect(),
            beats,
        }
    }
}

/// Hand-cuff systolic/diastolic reference (mmHg).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CuffReading {
    pub systolic_mmhg: f64,
    pub diastolic_mmhg: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementSetup {
    pub scene: PressureScene,
    pub layout: ArrayLayout,
    pub membrane: Membrane,
    pub schedule: MuxSchedule,
    pub modulator: ModulatorConfig,
    pub chain: ChainConfig,
    pub cuff: CuffReading,
    pub beats: BeatDetection,
    /// Seconds from the start of the continuous record used for the
    /// calibration anchors; `None` uses the whole record.
    pub calibration_window_s: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasurementReport {
    pub selected_element: usize,
    /// Robust peak-to-peak code of each scanned element.
    pub element_peak_to_peak: Vec<(usize, f64)>,
    pub calibration: CalibrationMap,
    /// Continuous record of the selected element.
    pub raw: DecimatedStream,
    /// `(t_s, mmHg)`, timestamps compensated for decimation group delay.
    pub waveform: Vec<(f64, f64)>,
    pub beat_count: usize,
    pub mean_systolic_mmhg: f64,
    pub mean_diastolic_mmhg: f64,
}

impl MeasurementReport {
    pub fn write_waveform_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t_s,pressure_mmHg")?;
        for (t, p) in &self.waveform {
            writeln!(w, "{t:.6},{p:.4}")?;
        }
        Ok(())
    }

    pub fn metrics_text(&self) -> String {
        let mut s = String::new();
        s += &format!("selected_element={}\n", self.selected_element);
        for (e, p) in &self.element_peak_to_peak {
            s += &format!("element_{e}_p2p_codes={p:.3}\n");
        }
        s += &format!("gain_mmhg_per_code={:.9}\n", self.calibration.gain);
        s += &format!("offset_mmhg={:.6}\n", self.calibration.offset);
        s += &format!("raw_systolic_code={:.4}\n", self.calibration.raw_sys);
        s += &format!("raw_diastolic_code={:.4}\n", self.calibration.raw_dia);
        s += &format!("beat_count={}\n", self.beat_count);
        s += &format!("mean_systolic_mmhg={:.4}\n", self.mean_systolic_mmhg);
        s += &format!("mean_diastolic_mmhg={:.4}\n", self.mean_diastolic_mmhg);
        s += &format!("group_delay_s={:.9}\n", self.raw.group_delay);
        s
    }
}

/// Pearson correlation of the calibrated waveform with a reference series
/// sampled at the waveform's (delay-compensated) timestamps.
pub fn waveform_correlation(waveform: &[(f64, f64)], truth: &PressureSeries) -> f64 {
    let a: Vec<f64> = waveform.iter().map(|w| w.1).collect();
    let b: Vec<f64> = waveform.iter().map(|w| truth.value_at(w.0)).collect();
    pearson(&a, &b)
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Per-element decimated captures from a multiplexed scan of the scene.
pub fn scan_elements(setup: &MeasurementSetup) -> Result<Vec<ElementCapture>> {
    let capture = scan(
        &setup.scene,
        &setup.layout,
        &setup.membrane,
        &setup.schedule,
        &setup.modulator,
        setup.scene.duration(),
    )?;
    decimate_capture(&capture, &setup.chain)
}

/// Continuous single-element acquisition over the whole scene.
pub fn acquire_element(setup: &MeasurementSetup, element: usize) -> Result<DecimatedStream> {
    let n = (setup.scene.duration() * setup.modulator.sample_rate as f64).round() as usize;
    let x = element_input_series(
        &setup.scene,
        &setup.layout,
        &setup.membrane,
        &setup.modulator,
        element,
        n,
    )?;
    let bits = run_modulator(&x, &setup.modulator, Default::default())?;
    let mut stream = decimate_chain(&bits, &setup.chain)?;
    stream.element_tag = Some(element);
    Ok(stream)
}

pub fn measure(setup: &MeasurementSetup) -> Result<MeasurementReport> {
    let period_guess = 3.0 * setup.beats.refractory_s;
    if setup.scene.duration() < period_guess {
        return Err(Error::param(
            "duration",
            "scene too short for beat detection",
        ));
    }
    let captures = scan_elements(setup)?;
    let selected = select_strongest(&captures)?;
    let element_peak_to_peak = captures
        .iter()
        .map(|c| {
            let codes: Vec<f64> = c.valid_codes().iter().map(|&v| v as f64).collect();
            (c.element, robust_peak_to_peak(&codes))
        })
        .collect();

    let raw = acquire_element(setup, selected)?;
    let codes: Vec<f64> = raw.samples.iter().map(|&v| v as f64).collect();
    let cal_len = match setup.calibration_window_s {
        Some(w) => ((w * raw.rate).round() as usize).min(codes.len()),
        None => codes.len(),
    };
    let anchors = setup.beats.detect(&codes[..cal_len], raw.rate);
    if anchors.peaks.len() < 2 {
        return Err(Error::CalibrationImpossible(format!(
            "{} beat(s) detected, need at least 2",
            anchors.peaks.len()
        )));
    }
    let calibration = calibrate_two_point(
        anchors.mean_peak(),
        anchors.mean_trough(),
        setup.cuff.systolic_mmhg,
        setup.cuff.diastolic_mmhg,
    )?;

    let waveform: Vec<(f64, f64)> = codes
        .iter()
        .enumerate()
        .map(|(i, &c)| (raw.aligned_time(i), calibration.apply(c)))
        .collect();
    let mmhg: Vec<f64> = waveform.iter().map(|w| w.1).collect();
    let detection = BeatDetection {
        min_pulse: setup.beats.min_pulse * calibration.gain.abs(),
        ..setup.beats.clone()
    };
    let stats = detection.detect(&mmhg, raw.rate);
    if stats.beats.is_empty() {
        return Err(Error::CalibrationImpossible(
            "no complete beat in record".into(),
        ));
    }
    Ok(MeasurementReport {
        selected_element: selected,
        element_peak_to_peak,
        calibration,
        beat_count: stats.peaks.len(),
        mean_systolic_mmhg: stats.mean_peak(),
        mean_diastolic_mmhg: stats.mean_trough(),
        raw,
        waveform,
    })
}
