//! Run configuration: flat, sectioned `key = value` text.
//!
//! ```text
//! # comment
//! [scene]
//! heart_rate_bpm = 60
//! ```
//!
//! Comments occupy whole lines. Every key is optional and falls back to the
//! default listed by [`RunConfig::default().emit()`](RunConfig::emit);
//! unknown sections or keys are errors that name the offending key path.
//! `emit` writes every key, and `parse(emit(c)) == c` for any valid `c`.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use sha2::{Digest, Sha256};

use crate::analysis::Window;
use crate::decimation::{ChainConfig, FirDesignSpec};
use crate::error::{Error, Result};
use crate::frontend::{InputMode, ModulatorConfig, MuxSchedule};
use crate::membrane::Membrane;
use crate::pipeline::{BeatDetection, CuffReading, MeasurementSetup};
use crate::scene::{synth_abp, ArrayLayout, ArterialWaveformSpec, PressureScene, PressureSeries};

#[derive(Debug, Clone, PartialEq)]
pub struct SceneSection {
    pub waveform: ArterialWaveformSpec,
    /// `None` derives the morphology seed from the run seed.
    pub morphology_seed: Option<u64>,
    /// Replaces the synthetic waveform when set.
    pub waveform_csv: Option<PathBuf>,
    pub vessel_x: f64,
    pub vessel_y: f64,
    pub coupling_width: f64,
    pub contact_bias_pa: f64,
    pub backpressure_pa: f64,
}

impl Default for SceneSection {
    fn default() -> Self {
        let layout = ArrayLayout::default();
        let [x, y] = layout
            .element_center(1)
            .expect("default array has 4 elements");
        Self {
            waveform: ArterialWaveformSpec::default(),
            morphology_seed: None,
            waveform_csv: None,
            vessel_x: x,
            vessel_y: y,
            coupling_width: 150e-6,
            contact_bias_pa: 2000.0,
            backpressure_pa: 8000.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ModulatorSection {
    pub sample_rate: u64,
    pub b1: f64,
    pub a1: f64,
    pub b2: f64,
    pub a2: f64,
    pub vref: f64,
    /// `None` uses the membrane's rest capacitance.
    pub cref: Option<f64>,
    pub c_full_scale: f64,
    pub noise_rms: f64,
    pub saturation: f64,
}

impl Default for ModulatorSection {
    fn default() -> Self {
        let m = ModulatorConfig::default();
        Self {
            sample_rate: m.sample_rate,
            b1: m.b1,
            a1: m.a1,
            b2: m.b2,
            a2: m.a2,
            vref: m.vref,
            cref: None,
            c_full_scale: m.c_full_scale,
            noise_rms: m.noise_rms,
            saturation: m.saturation,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AnalysisSection {
    pub fft_length: usize,
    pub window: Window,
    pub harmonics: usize,
    pub skirt_bins: usize,
}

impl Default for AnalysisSection {
    fn default() -> Self {
        Self {
            fft_length: 8192,
            window: Window::Rectangular,
            harmonics: 5,
            skirt_bins: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdcTestSection {
    /// Sine amplitude as a fraction of full scale.
    pub amplitude: f64,
    pub freq_hz: f64,
}

impl Default for AdcTestSection {
    fn default() -> Self {
        Self {
            amplitude: 0.91,
            freq_hz: 15.625,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineSection {
    pub cuff: CuffReading,
    pub beats: BeatDetection,
    pub calibration_window_s: Option<f64>,
}

impl Default for PipelineSection {
    fn default() -> Self {
        let w = ArterialWaveformSpec::default();
        Self {
            cuff: CuffReading {
                systolic_mmhg: w.systolic_mmhg,
                diastolic_mmhg: w.diastolic_mmhg,
            },
            beats: BeatDetection::default(),
            calibration_window_s: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RunConfig {
    pub seed: u64,
    pub out_dir: PathBuf,
    pub scene: SceneSection,
    pub array: ArrayLayout,
    pub membrane: Membrane,
    pub modulator: ModulatorSection,
    pub mux: MuxSchedule,
    /// The modulator rate inside is ignored; `modulator.sample_rate` wins.
    pub decimation: FirDesignSpec,
    pub analysis: AnalysisSection,
    pub adc_test: AdcTestSection,
    pub pipeline: PipelineSection,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            out_dir: PathBuf::from("out"),
            scene: SceneSection::default(),
            array: ArrayLayout::default(),
            membrane: Membrane::default(),
            modulator: ModulatorSection::default(),
            mux: MuxSchedule::default(),
            decimation: FirDesignSpec::default(),
            analysis: AnalysisSection::default(),
            adc_test: AdcTestSection::default(),
            pipeline: PipelineSection::default(),
        }
    }
}

struct Entry {
    value: String,
    line: usize,
}

struct Reader {
    entries: BTreeMap<String, Entry>,
}

trait ConfigValue: Sized {
    fn parse_value(s: &str) -> std::result::Result<Self, String>;
    fn emit_value(&self) -> String;
}

macro_rules! via_fromstr {
    ($($t:ty),*) => {$(
        impl ConfigValue for $t {
            fn parse_value(s: &str) -> std::result::Result<Self, String> {
                <$t>::from_str(s).map_err(|e| e.to_string())
            }
            fn emit_value(&self) -> String {
                self.to_string()
            }
        }
    )*};
}
via_fromstr!(u64, u32, usize);

impl ConfigValue for f64 {
    fn parse_value(s: &str) -> std::result::Result<Self, String> {
        let v = f64::from_str(s).map_err(|e| e.to_string())?;
        if v.is_finite() {
            Ok(v)
        } else {
            Err("must be finite".into())
        }
    }
    fn emit_value(&self) -> String {
        format!("{self:?}")
    }
}

impl ConfigValue for PathBuf {
    fn parse_value(s: &str) -> std::result::Result<Self, String> {
        if s.is_empty() {
            Err("path must not be empty".into())
        } else {
            Ok(PathBuf::from(s))
        }
    }
    fn emit_value(&self) -> String {
        self.display().to_string()
    }
}

impl ConfigValue for Window {
    fn parse_value(s: &str) -> std::result::Result<Self, String> {
        Window::from_str(s).map_err(|e| e.to_string())
    }
    fn emit_value(&self) -> String {
        self.as_str().to_string()
    }
}

impl ConfigValue for Vec<usize> {
    fn parse_value(s: &str) -> std::result::Result<Self, String> {
        s.split(',')
            .map(|p| usize::from_str(p.trim()).map_err(|e| format!("{p:?}: {e}")))
            .collect()
    }
    fn emit_value(&self) -> String {
        self.iter()
            .map(|v| v.to_string())
            .collect::<Vec<_>>()
            .join(",")
    }
}

/// `auto` (or `none` for paths) stands for `None`.
impl<T: ConfigValue> ConfigValue for Option<T> {
    fn parse_value(s: &str) -> std::result::Result<Self, String> {
        match s {
            "auto" | "none" => Ok(None),
            _ => T::parse_value(s).map(Some),
        }
    }
    fn emit_value(&self) -> String {
        match self {
            Some(v) => v.emit_value(),
            None => "auto".into(),
        }
    }
}

impl Reader {
    fn parse(text: &str) -> Result<Self> {
        let mut entries = BTreeMap::new();
        let mut section: Option<String> = None;
        for (i, raw) in text.lines().enumerate() {
            let line_no = i + 1;
            let line = raw.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            if let Some(rest) = line.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| {
                        Error::config(format!("line {line_no}"), "unterminated section header")
                    })?
                    .trim();
                if !SECTIONS.contains(&name) {
                    return Err(Error::config(
                        name,
                        format!("unknown section (line {line_no})"),
                    ));
                }
                section = Some(name.to_string());
                continue;
            }
            let (key, value) = line
                .split_once('=')
                .ok_or_else(|| Error::config(format!("line {line_no}"), "expected key = value"))?;
            let section = section.as_deref().ok_or_else(|| {
                Error::config(
                    key.trim(),
                    format!("key outside a section (line {line_no})"),
                )
            })?;
            let path = format!("{section}.{}", key.trim());
            let entry = Entry {
                value: value.trim().to_string(),
                line: line_no,
            };
            if let Some(prev) = entries.insert(path.clone(), entry) {
                return Err(Error::config(
                    path,
                    format!("duplicate key (first on line {})", prev.line),
                ));
            }
        }
        Ok(Self { entries })
    }

    fn take<T: ConfigValue>(&mut self, key: &str, default: T) -> Result<T> {
        match self.entries.remove(key) {
            None => Ok(default),
            Some(e) => T::parse_value(&e.value)
                .map_err(|r| Error::config(key, format!("{r} (line {})", e.line))),
        }
    }

    fn finish(self) -> Result<()> {
        match self.entries.into_iter().next() {
            None => Ok(()),
            Some((k, e)) => Err(Error::config(k, format!("unknown key (line {})", e.line))),
        }
    }
}

const SECTIONS: [&str; 10] = [
    "run",
    "scene",
    "array",
    "membrane",
    "modulator",
    "mux",
    "decimation",
    "analysis",
    "adc_test",
    "pipeline",
];

struct Emitter {
    out: String,
}

impl Emitter {
    fn section(&mut self, name: &str) {
        if !self.out.is_empty() {
            self.out.push('\n');
        }
        let _ = writeln!(self.out, "[{name}]");
    }

    fn kv<T: ConfigValue>(&mut self, key: &str, v: &T) {
        let _ = writeln!(self.out, "{key} = {}", v.emit_value());
    }
}

/// Visits every field once; shared by parsing and emitting so the two
/// cannot drift apart.
macro_rules! fields {
    ($visit:ident, $c:expr) => {{
        $visit!("run", "seed", $c.seed);
        $visit!("run", "out_dir", $c.out_dir);

        $visit!("scene", "heart_rate_bpm", $c.scene.waveform.heart_rate_bpm);
        $visit!("scene", "systolic_mmhg", $c.scene.waveform.systolic_mmhg);
        $visit!("scene", "diastolic_mmhg", $c.scene.waveform.diastolic_mmhg);
        $visit!("scene", "duration_s", $c.scene.waveform.duration_s);
        $visit!("scene", "sample_rate_hz", $c.scene.waveform.sample_rate_hz);
        $visit!("scene", "morphology_seed", $c.scene.morphology_seed);
        $visit!("scene", "waveform_csv", $c.scene.waveform_csv);
        $visit!("scene", "vessel_x", $c.scene.vessel_x);
        $visit!("scene", "vessel_y", $c.scene.vessel_y);
        $visit!("scene", "coupling_width", $c.scene.coupling_width);
        $visit!("scene", "contact_bias_pa", $c.scene.contact_bias_pa);
        $visit!("scene", "backpressure_pa", $c.scene.backpressure_pa);

        $visit!("array", "rows", $c.array.rows);
        $visit!("array", "cols", $c.array.cols);
        $visit!("array", "pitch", $c.array.pitch);

        $visit!("membrane", "side_length", $c.membrane.geometry.side_length);
        $visit!("membrane", "thickness", $c.membrane.geometry.thickness);
        $visit!("membrane", "gap0", $c.membrane.geometry.gap0);
        $visit!(
            "membrane",
            "electrode_coverage",
            $c.membrane.geometry.electrode_coverage
        );
        $visit!(
            "membrane",
            "youngs_modulus",
            $c.membrane.material.youngs_modulus
        );
        $visit!(
            "membrane",
            "poisson_ratio",
            $c.membrane.material.poisson_ratio
        );
        $visit!(
            "membrane",
            "quadrature_points",
            $c.membrane.quadrature_points
        );

        $visit!("modulator", "sample_rate", $c.modulator.sample_rate);
        $visit!("modulator", "b1", $c.modulator.b1);
        $visit!("modulator", "a1", $c.modulator.a1);
        $visit!("modulator", "b2", $c.modulator.b2);
        $visit!("modulator", "a2", $c.modulator.a2);
        $visit!("modulator", "vref", $c.modulator.vref);
        $visit!("modulator", "cref", $c.modulator.cref);
        $visit!("modulator", "c_full_scale", $c.modulator.c_full_scale);
        $visit!("modulator", "noise_rms", $c.modulator.noise_rms);
        $visit!("modulator", "saturation", $c.modulator.saturation);

        $visit!("mux", "element_order", $c.mux.element_order);
        $visit!("mux", "dwell", $c.mux.dwell);
        $visit!("mux", "blanking", $c.mux.blanking);

        $visit!("decimation", "cic_order", $c.decimation.cic.order);
        $visit!("decimation", "cic_rate", $c.decimation.cic.rate_change);
        $visit!(
            "decimation",
            "cic_delay",
            $c.decimation.cic.differential_delay
        );
        $visit!("decimation", "fir_taps", $c.decimation.num_taps);
        $visit!("decimation", "fir_rate", $c.decimation.rate_change);
        $visit!("decimation", "cutoff_hz", $c.decimation.cutoff_hz);
        $visit!("decimation", "output_bits", $c.decimation.output_bits);
        $visit!(
            "decimation",
            "passband_edge_hz",
            $c.decimation.passband_edge_hz
        );
        $visit!("decimation", "max_ripple_db", $c.decimation.max_ripple_db);
        $visit!(
            "decimation",
            "image_halfwidth_hz",
            $c.decimation.image_halfwidth_hz
        );
        $visit!(
            "decimation",
            "min_image_rejection_db",
            $c.decimation.min_image_rejection_db
        );

        $visit!("analysis", "fft_length", $c.analysis.fft_length);
        $visit!("analysis", "window", $c.analysis.window);
        $visit!("analysis", "harmonics", $c.analysis.harmonics);
        $visit!("analysis", "skirt_bins", $c.analysis.skirt_bins);

        $visit!("adc_test", "amplitude", $c.adc_test.amplitude);
        $visit!("adc_test", "freq_hz", $c.adc_test.freq_hz);

        $visit!(
            "pipeline",
            "cuff_systolic_mmhg",
            $c.pipeline.cuff.systolic_mmhg
        );
        $visit!(
            "pipeline",
            "cuff_diastolic_mmhg",
            $c.pipeline.cuff.diastolic_mmhg
        );
        $visit!("pipeline", "refractory_s", $c.pipeline.beats.refractory_s);
        $visit!(
            "pipeline",
            "prominence_fraction",
            $c.pipeline.beats.prominence_fraction
        );
        $visit!("pipeline", "min_pulse_codes", $c.pipeline.beats.min_pulse);
        $visit!(
            "pipeline",
            "calibration_window_s",
            $c.pipeline.calibration_window_s
        );
    }};
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self> {
        let mut reader = Reader::parse(text)?;
        let mut c = RunConfig::default();
        macro_rules! read {
            ($s:literal, $k:literal, $field:expr) => {
                $field = reader.take(concat!($s, ".", $k), $field.clone())?;
            };
        }
        fields!(read, c);
        reader.finish()?;
        c.decimation.modulator_rate_hz = c.modulator.sample_rate as f64;
        c.validate()?;
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::config("--config", format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Canonical text with every key.
    pub fn emit(&self) -> String {
        let mut e = Emitter { out: String::new() };
        let mut current = "";
        macro_rules! write {
            ($s:literal, $k:literal, $field:expr) => {
                if current != $s {
                    e.section($s);
                    current = $s;
                }
                e.kv($k, &$field);
            };
        }
        fields!(write, self);
        let _ = current;
        e.out
    }

    /// Hex SHA-256 of the canonical text, with `run.out_dir` reset so that
    /// the same experiment hashes equally wherever it is written.
    pub fn hash(&self) -> String {
        let canonical = RunConfig {
            out_dir: RunConfig::default().out_dir,
            ..self.clone()
        };
        hex::encode(Sha256::digest(canonical.emit().as_bytes()))
    }

    /// Checks every section, mapping failures to `section.key` paths.
    pub fn validate(&self) -> Result<()> {
        let at = |section: &'static str| {
            move |e: Error| match e {
                Error::InvalidParameter { name, reason } => {
                    Error::config(format!("{section}.{name}"), reason)
                }
                Error::IndexOutOfRange { index, len } => Error::config(
                    format!("{section}.element_order"),
                    format!("element {index} outside an array of {len}"),
                ),
                other => Error::config(section, other.to_string()),
            }
        };
        self.scene.waveform.validate().map_err(at("scene"))?;
        self.scene_shell(PressureSeries {
            sample_rate_hz: 1.0,
            samples: vec![0.0],
        })
        .validate()
        .map_err(at("scene"))?;
        self.membrane.validate().map_err(at("membrane"))?;
        self.array
            .validate(self.membrane.geometry.side_length)
            .map_err(at("array"))?;
        self.modulator_config(InputMode::Capacitive)
            .validate()
            .map_err(at("modulator"))?;
        self.mux.validate(self.array.len()).map_err(at("mux"))?;
        if !self.mux.dwell.is_multiple_of(self.decimation_factor()) {
            return Err(Error::config(
                "mux.dwell",
                format!("must be a multiple of {} clocks", self.decimation_factor()),
            ));
        }
        if !self.analysis.fft_length.is_power_of_two() || self.analysis.fft_length < 16 {
            return Err(Error::config(
                "analysis.fft_length",
                "must be a power of two >= 16",
            ));
        }
        if !(self.adc_test.amplitude > 0.0 && self.adc_test.amplitude < 1.0) {
            return Err(Error::config("adc_test.amplitude", "must lie in (0, 1)"));
        }
        if !(self.adc_test.freq_hz > 0.0) {
            return Err(Error::config("adc_test.freq_hz", "must be positive"));
        }
        let b = &self.pipeline.beats;
        if !(b.refractory_s > 0.0) {
            return Err(Error::config("pipeline.refractory_s", "must be positive"));
        }
        if !(b.prominence_fraction > 0.0 && b.prominence_fraction < 1.0) {
            return Err(Error::config(
                "pipeline.prominence_fraction",
                "must lie in (0, 1)",
            ));
        }
        if !(b.min_pulse >= 0.0) {
            return Err(Error::config(
                "pipeline.min_pulse_codes",
                "must be non-negative",
            ));
        }
        if !(self.pipeline.cuff.systolic_mmhg > self.pipeline.cuff.diastolic_mmhg) {
            return Err(Error::config(
                "pipeline.cuff_systolic_mmhg",
                "must exceed cuff_diastolic_mmhg",
            ));
        }
        if let Some(w) = self.pipeline.calibration_window_s {
            if !(w > 0.0) {
                return Err(Error::config(
                    "pipeline.calibration_window_s",
                    "must be positive",
                ));
            }
        }
        Ok(())
    }

    fn decimation_factor(&self) -> usize {
        (self.decimation.cic.rate_change * self.decimation.rate_change) as usize
    }

    fn scene_shell(&self, waveform: PressureSeries) -> PressureScene {
        PressureScene {
            waveform,
            vessel_position: [self.scene.vessel_x, self.scene.vessel_y],
            coupling_width: self.scene.coupling_width,
            contact_bias: self.scene.contact_bias_pa,
            backpressure: self.scene.backpressure_pa,
        }
    }

    pub fn waveform_spec(&self) -> ArterialWaveformSpec {
        ArterialWaveformSpec {
            morphology_seed: self.scene.morphology_seed.unwrap_or(self.seed),
            ..self.scene.waveform.clone()
        }
    }

    /// Scene waveform: the CSV if configured, otherwise synthesized.
    pub fn pressure_scene(&self) -> Result<PressureScene> {
        let waveform = match &self.scene.waveform_csv {
            Some(path) => {
                let f = std::fs::File::open(path).map_err(|e| {
                    Error::config("scene.waveform_csv", format!("{}: {e}", path.display()))
                })?;
                PressureSeries::read_csv(std::io::BufReader::new(f))?
            }
            None => synth_abp(&self.waveform_spec())?,
        };
        Ok(self.scene_shell(waveform))
    }

    pub fn modulator_config(&self, mode: InputMode) -> ModulatorConfig {
        let m = &self.modulator;
        ModulatorConfig {
            sample_rate: m.sample_rate,
            b1: m.b1,
            a1: m.a1,
            b2: m.b2,
            a2: m.a2,
            vref: m.vref,
            cref: m
                .cref
                .unwrap_or_else(|| self.membrane.geometry.rest_capacitance()),
            c_full_scale: m.c_full_scale,
            input_mode: mode,
            noise_rms: m.noise_rms,
            seed: self.seed,
            saturation: m.saturation,
        }
    }

    pub fn design_spec(&self) -> FirDesignSpec {
        FirDesignSpec {
            modulator_rate_hz: self.modulator.sample_rate as f64,
            ..self.decimation.clone()
        }
    }

    pub fn chain_config(&self) -> Result<ChainConfig> {
        ChainConfig::design(&self.design_spec())
    }

    pub fn measurement_setup(&self) -> Result<MeasurementSetup> {
        Ok(MeasurementSetup {
            scene: self.pressure_scene()?,
            layout: self.array,
            membrane: self.membrane,
            schedule: self.mux.clone(),
            modulator: self.modulator_config(InputMode::Capacitive),
            chain: self.chain_config()?,
            cuff: self.pipeline.cuff,
            beats: self.pipeline.beats.clone(),
            calibration_window_s: self.pipeline.calibration_window_s,
        })
    }
}
