use std::io::Write;

use crate::error::{Error, Result};
use crate::frontend::{BitStream, ScanCapture};

use super::cic::CicDecimator;
use super::fir::{design_fir, scale_to_code, FirDecimator, FirDesignSpec};
use super::{CicConfig, FirConfig};

/// Fixed-point decimated samples.
#[derive(Debug, Clone, PartialEq)]
pub struct DecimatedStream {
    pub samples: Vec<i16>,
    /// Per-sample validity; invalid samples saw filter start-up or blanked bits.
    pub valid: Vec<bool>,
    pub rate: f64,
    pub element_tag: Option<usize>,
    /// Time (s) of the last bit contributing to sample 0.
    pub start_time: f64,
    /// Combined CIC + FIR group delay (s).
    pub group_delay: f64,
    pub saturation_count: usize,
}

impl DecimatedStream {
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn time_of(&self, i: usize) -> f64 {
        self.start_time + i as f64 / self.rate
    }

    /// Time of the input the sample represents, after removing group delay.
    pub fn aligned_time(&self, i: usize) -> f64 {
        self.time_of(i) - self.group_delay
    }

    pub fn valid_samples(&self) -> impl Iterator<Item = i16> + '_ {
        self.samples
            .iter()
            .zip(&self.valid)
            .filter(|(_, &v)| v)
            .map(|(&s, _)| s)
    }

    pub fn valid_count(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    pub fn write_csv_header<W: Write>(mut w: W) -> Result<()> {
        writeln!(w, "t_s,code,element,valid")?;
        Ok(())
    }

    /// Rows `t_s,code,element,valid`; `t_s` is the group-delay aligned time
    /// and `element` is empty for untagged streams.
    pub fn write_csv_rows<W: Write>(&self, mut w: W) -> Result<()> {
        let tag = self.element_tag.map(|e| e.to_string()).unwrap_or_default();
        for i in 0..self.samples.len() {
            writeln!(
                w,
                "{},{},{},{}",
                self.aligned_time(i),
                self.samples[i],
                tag,
                self.valid[i] as u8
            )?;
        }
        Ok(())
    }

    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        Self::write_csv_header(&mut w)?;
        self.write_csv_rows(w)
    }
}

/// CIC → FIR decimation chain configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct ChainConfig {
    pub cic: CicConfig,
    pub fir: FirConfig,
    pub modulator_rate: u64,
}

impl ChainConfig {
    pub fn design(spec: &FirDesignSpec) -> Result<Self> {
        Ok(Self {
            cic: spec.cic,
            fir: design_fir(spec)?,
            modulator_rate: spec.modulator_rate_hz as u64,
        })
    }

    pub fn validate(&self) -> Result<()> {
        self.cic.validate()?;
        self.fir.validate()?;
        let fs2 = self.modulator_rate as f64 / self.cic.rate_change as f64;
        if (fs2 - self.fir.input_rate_hz).abs() > 1e-9 {
            return Err(Error::param(
                "fir.input_rate_hz",
                "does not match modulator rate / CIC rate change",
            ));
        }
        if self.fir.input_full_scale != self.cic.dc_gain() {
            return Err(Error::param(
                "fir.input_full_scale",
                "must equal the CIC DC gain",
            ));
        }
        Ok(())
    }

    /// Total rate change `R1 * R2`.
    pub fn decimation(&self) -> usize {
        (self.cic.rate_change * self.fir.rate_change) as usize
    }

    pub fn output_rate(&self) -> f64 {
        self.modulator_rate as f64 / self.decimation() as f64
    }

    /// Output samples discarded at start-up:
    /// `ceil((ceil(CIC span / R1) + taps - 1) / R2)`; 17 for the defaults.
    pub fn transient_cut(&self) -> usize {
        let r1 = self.cic.rate_change as u64;
        let cic_latency = self.cic.span().div_ceil(r1) as usize;
        (cic_latency + self.fir.taps.len() - 1).div_ceil(self.fir.rate_change as usize)
    }

    /// Group delay (s) of the linear-phase chain.
    pub fn group_delay(&self) -> f64 {
        let fs = self.modulator_rate as f64;
        let cic = self.cic.span() as f64 / 2.0;
        let fir = self.fir.group_delay() * self.cic.rate_change as f64;
        (cic + fir) / fs
    }
}

/// Streaming CIC → FIR → 12-bit quantizer.
#[derive(Debug, Clone)]
pub struct Decimator {
    cic: CicDecimator,
    fir: FirDecimator,
    config: ChainConfig,
    saturations: usize,
}

impl Decimator {
    pub fn new(config: &ChainConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self {
            cic: CicDecimator::new(config.cic)?,
            fir: FirDecimator::new(&config.fir)?,
            config: config.clone(),
            saturations: 0,
        })
    }

    #[inline]
    pub fn push(&mut self, bit: i8) -> Option<i16> {
        let mid = self.cic.push(bit as i64)?;
        let acc = self.fir.push(mid)?;
        let (code, sat) = scale_to_code(acc, &self.config.fir);
        self.saturations += sat as usize;
        Some(code as i16)
    }

    pub fn saturations(&self) -> usize {
        self.saturations
    }
}

/// Decimates a whole bitstream, dropping the first `transient_cut` outputs.
/// Yields `floor(N / 128) - transient_cut` samples for the default chain.
pub fn decimate_chain(bits: &BitStream, config: &ChainConfig) -> Result<DecimatedStream> {
    if bits.sample_rate != config.modulator_rate {
        return Err(Error::param(
            "sample_rate",
            "bitstream rate does not match chain",
        ));
    }
    let mut dec = Decimator::new(config)?;
    let cut = config.transient_cut();
    let samples: Vec<i16> = bits
        .bits
        .iter()
        .filter_map(|&b| dec.push(b))
        .skip(cut)
        .collect();
    let d = config.decimation();
    let fs = config.modulator_rate as f64;
    Ok(DecimatedStream {
        valid: vec![true; samples.len()],
        samples,
        rate: config.output_rate(),
        element_tag: None,
        start_time: ((cut + 1) * d - 1) as f64 / fs,
        group_delay: config.group_delay(),
        saturation_count: dec.saturations(),
    })
}

/// Decimated output of one element across all of its multiplexer visits.
#[derive(Debug, Clone, PartialEq)]
pub struct ElementCapture {
    pub element: usize,
    /// One stream per visit, in acquisition order.
    pub segments: Vec<DecimatedStream>,
}

impl ElementCapture {
    pub fn valid_codes(&self) -> Vec<i16> {
        self.segments
            .iter()
            .flat_map(|s| s.valid_samples())
            .collect()
    }

    pub fn output_samples(&self) -> usize {
        self.segments.iter().map(|s| s.len()).sum()
    }
}

/// Per-element decimation of a multiplexed capture. Each element keeps its
/// own decimator across visits, so a visit of `k * 128` bits yields exactly
/// `k` samples. A sample is valid only when its whole filter support lies
/// after the visit's blanking interval.
pub fn decimate_capture(
    capture: &ScanCapture,
    config: &ChainConfig,
) -> Result<Vec<ElementCapture>> {
    if capture.sample_rate != config.modulator_rate {
        return Err(Error::param(
            "sample_rate",
            "capture rate does not match chain",
        ));
    }
    let d = config.decimation();
    let cut = config.transient_cut();
    let fs = config.modulator_rate as f64;
    let mut out = Vec::new();
    for element in capture.elements() {
        let mut dec = Decimator::new(config)?;
        let mut segments = Vec::new();
        let visits: Vec<_> = capture.segments_for(element).collect();
        // global clock index where the current uninterrupted run of valid
        // bits began, and where the previous visit ended
        let mut run_start = 0u64;
        let mut prev_end: Option<u64> = None;
        for (i, seg) in visits.iter().enumerate() {
            if seg.bits.len() % d != 0 && i + 1 != visits.len() {
                return Err(Error::param(
                    "dwell",
                    format!("must be a multiple of {d} clocks"),
                ));
            }
            if seg.blanking > 0 || prev_end != Some(seg.start) {
                run_start = seg.start + seg.blanking as u64;
            }
            prev_end = Some(seg.start + seg.bits.len() as u64);
            let before = dec.saturations();
            let samples: Vec<i16> = seg.bits.iter().filter_map(|&b| dec.push(b)).collect();
            let valid = (0..samples.len() as u64)
                .map(|j| seg.start + j * d as u64 >= run_start + (cut * d) as u64)
                .collect();
            segments.push(DecimatedStream {
                samples,
                valid,
                rate: config.output_rate(),
                element_tag: Some(element),
                start_time: (seg.start as f64 + d as f64 - 1.0) / fs,
                group_delay: config.group_delay(),
                saturation_count: dec.saturations() - before,
            });
        }
        out.push(ElementCapture { element, segments });
    }
    Ok(out)
}
