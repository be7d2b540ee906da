//! Synthetic arterial pressure and its spatial coupling onto the sensor array.

use std::io::{BufRead, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Pascal per mmHg.
pub const MMHG_TO_PA: f64 = 133.322;

// Beat morphology on the normalized phase [0, 1): systolic peak plus a
// dicrotic bump.
const SYSTOLIC_PHASE: f64 = 0.15;
const SYSTOLIC_WIDTH: f64 = 0.06;
const DICROTIC_PHASE: f64 = 0.40;
const DICROTIC_WIDTH: f64 = 0.06;
const DICROTIC_RATIO: f64 = 0.3;
// relative; keeps consecutive beats correlated above 0.999
const JITTER: f64 = 0.005;

#[derive(Debug, Clone, PartialEq)]
pub struct ArterialWaveformSpec {
    pub heart_rate_bpm: f64,
    pub systolic_mmhg: f64,
    pub diastolic_mmhg: f64,
    pub duration_s: f64,
    pub sample_rate_hz: f64,
    /// 0 gives identical beats; any other value jitters the morphology per
    /// beat from a seeded generator.
    pub morphology_seed: u64,
}

impl Default for ArterialWaveformSpec {
    fn default() -> Self {
        Self {
            heart_rate_bpm: 60.0,
            systolic_mmhg: 120.0,
            diastolic_mmhg: 80.0,
            duration_s: 10.0,
            sample_rate_hz: 1000.0,
            morphology_seed: 0,
        }
    }
}

impl ArterialWaveformSpec {
    pub fn validate(&self) -> Result<()> {
        if !(self.diastolic_mmhg > 0.0 && self.systolic_mmhg > self.diastolic_mmhg) {
            return Err(Error::InvalidSpec(
                "require systolic > diastolic > 0".into(),
            ));
        }
        if !(20.0..=300.0).contains(&self.heart_rate_bpm) {
            return Err(Error::InvalidSpec(
                "heart rate must lie in [20, 300] bpm".into(),
            ));
        }
        let min_rate = 2.0 * 20.0 * self.heart_rate_bpm / 60.0;
        if !(self.sample_rate_hz > min_rate) {
            return Err(Error::InvalidSpec(format!(
                "sample rate must exceed {min_rate} Hz to cover 20 harmonics"
            )));
        }
        if !(self.duration_s > 0.0 && self.duration_s.is_finite()) {
            return Err(Error::InvalidSpec("duration must be positive".into()));
        }
        Ok(())
    }

    pub fn beat_period(&self) -> f64 {
        60.0 / self.heart_rate_bpm
    }
}

/// Uniformly sampled pressure series in mmHg.
#[derive(Debug, Clone, PartialEq)]
pub struct PressureSeries {
    pub sample_rate_hz: f64,
    pub samples: Vec<f64>,
}

impl PressureSeries {
    pub fn duration(&self) -> f64 {
        self.samples.len() as f64 / self.sample_rate_hz
    }

    pub fn time_of(&self, i: usize) -> f64 {
        i as f64 / self.sample_rate_hz
    }

    /// Linear interpolation, held constant beyond either end.
    pub fn value_at(&self, t: f64) -> f64 {
        let n = self.samples.len();
        if n == 0 {
            return 0.0;
        }
        let pos = t * self.sample_rate_hz;
        if pos <= 0.0 {
            return self.samples[0];
        }
        let i = pos.floor() as usize;
        if i + 1 >= n {
            return self.samples[n - 1];
        }
        let frac = pos - i as f64;
        self.samples[i] + frac * (self.samples[i + 1] - self.samples[i])
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "t_s,pressure_mmHg")?;
        for (i, p) in self.samples.iter().enumerate() {
            writeln!(w, "{},{}", self.time_of(i), p)?;
        }
        Ok(())
    }

    /// Reads `t_s,pressure_mmHg` CSV; `#` lines are skipped. The sample rate
    /// is recovered from the first two timestamps.
    pub fn read_csv<R: BufRead>(r: R) -> Result<Self> {
        let mut header_seen = false;
        let mut times = Vec::new();
        let mut samples = Vec::new();
        for line in r.lines() {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if !header_seen {
                if line != "t_s,pressure_mmHg" {
                    return Err(Error::format(
                        "waveform csv",
                        format!("bad header `{line}`"),
                    ));
                }
                header_seen = true;
                continue;
            }
            let (t, p) = line
                .split_once(',')
                .ok_or_else(|| Error::format("waveform csv", format!("bad row `{line}`")))?;
            let parse = |s: &str| {
                s.parse::<f64>()
                    .map_err(|e| Error::format("waveform csv", format!("`{s}`: {e}")))
            };
            times.push(parse(t)?);
            samples.push(parse(p)?);
        }
        if times.len() < 2 {
            return Err(Error::format("waveform csv", "need at least two samples"));
        }
        let dt = times[1] - times[0];
        if !(dt > 0.0) {
            return Err(Error::format("waveform csv", "timestamps must increase"));
        }
        Ok(Self {
            sample_rate_hz: 1.0 / dt,
            samples,
        })
    }
}

#[derive(Debug, Clone, Copy)]
struct BeatShape {
    sys_phase: f64,
    sys_width: f64,
    dic_phase: f64,
    dic_width: f64,
    dic_ratio: f64,
}

impl BeatShape {
    const NOMINAL: BeatShape = BeatShape {
        sys_phase: SYSTOLIC_PHASE,
        sys_width: SYSTOLIC_WIDTH,
        dic_phase: DICROTIC_PHASE,
        dic_width: DICROTIC_WIDTH,
        dic_ratio: DICROTIC_RATIO,
    };

    fn jittered(rng: &mut ChaCha8Rng) -> BeatShape {
        let mut j = |v: f64| v * (1.0 + rng.gen_range(-JITTER..JITTER));
        BeatShape {
            sys_phase: j(SYSTOLIC_PHASE),
            sys_width: j(SYSTOLIC_WIDTH),
            dic_phase: j(DICROTIC_PHASE),
            dic_width: j(DICROTIC_WIDTH),
            dic_ratio: j(DICROTIC_RATIO),
        }
    }

    /// Unnormalized two-Gaussian pulse, wrapped so that it is periodic in phase.
    fn eval(&self, phase: f64) -> f64 {
        let g = |mu: f64, sigma: f64| {
            (-1..=1)
                .map(|k| {
                    let d = phase - mu - k as f64;
                    (-d * d / (2.0 * sigma * sigma)).exp()
                })
                .sum::<f64>()
        };
        g(self.sys_phase, self.sys_width) + self.dic_ratio * g(self.dic_phase, self.dic_width)
    }
}

/// Two-Gaussian-per-beat arterial waveform. Each beat is affinely rescaled
/// so that its sampled maximum is the systolic and its sampled minimum the
/// diastolic pressure.
pub fn synth_abp(spec: &ArterialWaveformSpec) -> Result<PressureSeries> {
    spec.validate()?;
    let n = (spec.duration_s * spec.sample_rate_hz).round() as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.morphology_seed);
    let mut samples = Vec::with_capacity(n);
    let mut beat = 0usize;
    let mut shape = BeatShape::NOMINAL;
    let mut start = 0usize;
    let pulse = spec.systolic_mmhg - spec.diastolic_mmhg;

    let flush = |samples: &mut Vec<f64>, start: usize| {
        let seg = &mut samples[start..];
        let (lo, hi) = seg
            .iter()
            .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &v| {
                (lo.min(v), hi.max(v))
            });
        let span = hi - lo;
        for v in seg.iter_mut() {
            let u = if span > 0.0 { (*v - lo) / span } else { 0.0 };
            *v = spec.diastolic_mmhg + u * pulse;
        }
    };

    for i in 0..n {
        // beats elapsed; the epsilon keeps exact beat boundaries in the new beat
        let cycles = i as f64 * spec.heart_rate_bpm / (60.0 * spec.sample_rate_hz);
        let b = (cycles + 1e-9).floor() as usize;
        if b != beat || i == 0 {
            if i > 0 {
                flush(&mut samples, start);
                start = i;
            }
            beat = b;
            shape = if spec.morphology_seed == 0 {
                BeatShape::NOMINAL
            } else {
                BeatShape::jittered(&mut rng)
            };
        }
        let phase = (cycles - b as f64).max(0.0);
        samples.push(shape.eval(phase));
    }
    if !samples.is_empty() {
        flush(&mut samples, start);
    }
    Ok(PressureSeries {
        sample_rate_hz: spec.sample_rate_hz,
        samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ArrayLayout {
    pub rows: usize,
    pub cols: usize,
    /// Center-to-center spacing (m).
    pub pitch: f64,
}

impl Default for ArrayLayout {
    fn default() -> Self {
        Self {
            rows: 2,
            cols: 2,
            pitch: 150e-6,
        }
    }
}

impl ArrayLayout {
    pub fn validate(&self, membrane_side: f64) -> Result<()> {
        if self.rows == 0 || self.cols == 0 {
            return Err(Error::param(
                "rows/cols",
                "array must have at least one element",
            ));
        }
        if !(self.pitch > membrane_side) {
            return Err(Error::param(
                "pitch",
                "must exceed the membrane side length",
            ));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.rows * self.cols
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Element centers, row-major, with the array centered on the origin.
    pub fn element_center(&self, element: usize) -> Result<[f64; 2]> {
        if element >= self.len() {
            return Err(Error::IndexOutOfRange {
                index: element,
                len: self.len(),
            });
        }
        let row = element / self.cols;
        let col = element % self.cols;
        let x = (col as f64 - (self.cols as f64 - 1.0) / 2.0) * self.pitch;
        let y = (row as f64 - (self.rows as f64 - 1.0) / 2.0) * self.pitch;
        Ok([x, y])
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PressureScene {
    pub waveform: PressureSeries,
    /// Vessel axis position in the array plane (m).
    pub vessel_position: [f64; 2],
    pub coupling_width: f64,
    /// Static hold-down pressure (Pa).
    pub contact_bias: f64,
    /// Constant backside pressure (Pa).
    pub backpressure: f64,
}

impl PressureScene {
    pub fn validate(&self) -> Result<()> {
        if !(self.coupling_width > 0.0) {
            return Err(Error::param("coupling_width", "must be positive"));
        }
        if !(self.contact_bias >= 0.0) {
            return Err(Error::param("contact_bias", "must be non-negative"));
        }
        Ok(())
    }

    /// Gaussian attenuation of the pulse for an element at `center`.
    pub fn coupling_factor(&self, center: [f64; 2]) -> f64 {
        let dx = center[0] - self.vessel_position[0];
        let dy = center[1] - self.vessel_position[1];
        let d2 = dx * dx + dy * dy;
        (-d2 / (2.0 * self.coupling_width * self.coupling_width)).exp()
    }

    pub fn duration(&self) -> f64 {
        self.waveform.duration()
    }
}

/// Net pressure (Pa) on `element` at time `t`: hold-down bias plus the
/// coupled arterial pressure minus backpressure.
pub fn element_pressure(
    scene: &PressureScene,
    layout: &ArrayLayout,
    element: usize,
    t: f64,
) -> Result<f64> {
    let center = layout.element_center(element)?;
    let coupling = scene.coupling_factor(center);
    Ok(
        scene.contact_bias + scene.waveform.value_at(t) * MMHG_TO_PA * coupling
            - scene.backpressure,
    )
}
