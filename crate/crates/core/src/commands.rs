//! The four experiments behind the command-line tool. Every text output
//! starts with a `# config_sha256=<hex>` line; the canonical configuration
//! is written next to the results as `config.txt`.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use crate::analysis::{snr_sndr, spectrum, Spectrum, SpectrumMetrics};
use crate::config::RunConfig;
use crate::decimation::{
    composite_magnitude, decimate_capture, decimate_chain, evaluate_design, DecimatedStream,
    DesignReport, FirConfig, OUTPUT_FULL_SCALE,
};
use crate::error::{Error, Result};
use crate::frontend::{run_modulator, scan, BitStream, InputMode};
use crate::pipeline::{measure, robust_peak_to_peak, MeasurementReport};

fn hash_line(config: &RunConfig) -> String {
    format!("# config_sha256={}\n", config.hash())
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

fn prepare_out(config: &RunConfig) -> Result<PathBuf> {
    let dir = config.out_dir.clone();
    fs::create_dir_all(&dir)?;
    let mut w = create(&dir, "config.txt")?;
    w.write_all(hash_line(config).as_bytes())?;
    w.write_all(config.emit().as_bytes())?;
    w.flush()?;
    Ok(dir)
}

fn db(v: f64) -> f64 {
    20.0 * v.max(1e-20).log10()
}

/// Result of a single-tone converter characterization.
#[derive(Debug, Clone)]
pub struct AdcCharacterization {
    pub output: DecimatedStream,
    pub spectrum: Spectrum,
    pub metrics: SpectrumMetrics,
    /// Modulator bits simulated.
    pub bits: usize,
}

/// Voltage-mode sine through modulator and decimator, analyzed over
/// `analysis.fft_length` output samples after the start-up transient.
pub fn adc_characterization(
    amplitude: f64,
    freq_hz: f64,
    config: &RunConfig,
) -> Result<AdcCharacterization> {
    if !(amplitude > 0.0 && amplitude < 1.0) {
        return Err(Error::config("adc_test.amplitude", "must lie in (0, 1)"));
    }
    let chain = config.chain_config()?;
    let rate = chain.output_rate();
    if !(freq_hz > 0.0 && freq_hz < rate / 2.0) {
        return Err(Error::config(
            "adc_test.freq_hz",
            "must lie in (0, output Nyquist)",
        ));
    }
    let n_fft = config.analysis.fft_length;
    let modulator = config.modulator_config(InputMode::Voltage);
    let fs = modulator.sample_rate as f64;
    let n_bits = (n_fft + chain.transient_cut()) * chain.decimation();
    let w = std::f64::consts::TAU * freq_hz / fs;
    let x: Vec<f64> = (0..n_bits)
        .map(|n| amplitude * (w * n as f64).sin())
        .collect();
    let bits = run_modulator(&x, &modulator, Default::default())?;
    let output = decimate_chain(&bits, &chain)?;
    let codes: Vec<f64> = output.samples[..n_fft].iter().map(|&c| c as f64).collect();
    let spec = spectrum(
        &codes,
        OUTPUT_FULL_SCALE,
        rate,
        n_fft,
        config.analysis.window,
    )?;
    let bin = (freq_hz * n_fft as f64 / rate).round() as usize;
    let metrics = snr_sndr(
        &spec,
        bin,
        config.analysis.harmonics,
        config.analysis.skirt_bins,
    )?;
    Ok(AdcCharacterization {
        output,
        spectrum: spec,
        metrics,
        bits: n_bits,
    })
}

/// Writes `spectrum.csv`, `metrics.txt` and `metrics.json`.
pub fn cmd_adc_test(
    amplitude_fraction: f64,
    freq_hz: f64,
    config: &RunConfig,
) -> Result<AdcCharacterization> {
    let result = adc_characterization(amplitude_fraction, freq_hz, config)?;
    let dir = prepare_out(config)?;
    let header = hash_line(config);

    let mut w = create(&dir, "spectrum.csv")?;
    w.write_all(header.as_bytes())?;
    result.spectrum.write_csv(&mut w)?;
    w.flush()?;

    let mut w = create(&dir, "metrics.txt")?;
    w.write_all(header.as_bytes())?;
    writeln!(w, "amplitude_fs={amplitude_fraction}")?;
    writeln!(w, "freq_hz={freq_hz}")?;
    writeln!(w, "modulator_bits={}", result.bits)?;
    w.write_all(result.metrics.to_key_value().as_bytes())?;
    w.flush()?;

    let mut json: serde_json::Value =
        serde_json::from_str(&result.metrics.to_json()).expect("metrics serialize to an object");
    json["config_sha256"] = config.hash().into();
    json["amplitude_fs"] = amplitude_fraction.into();
    json["freq_hz"] = freq_hz.into();
    let mut w = create(&dir, "metrics.json")?;
    writeln!(w, "{json}")?;
    w.flush()?;
    Ok(result)
}

/// Writes `waveform.csv` (`t_s,pressure_mmHg`) and `report.txt`.
pub fn cmd_measure(config: &RunConfig) -> Result<MeasurementReport> {
    let setup = config.measurement_setup()?;
    let report = measure(&setup)?;
    let dir = prepare_out(config)?;
    let header = hash_line(config);

    let mut w = create(&dir, "waveform.csv")?;
    w.write_all(header.as_bytes())?;
    report.write_waveform_csv(&mut w)?;
    w.flush()?;

    let mut w = create(&dir, "report.txt")?;
    w.write_all(header.as_bytes())?;
    w.write_all(report.metrics_text().as_bytes())?;
    w.flush()?;
    Ok(report)
}

#[derive(Debug, Clone)]
pub struct FilterDesign {
    pub fir: FirConfig,
    pub report: DesignReport,
}

/// Writes `taps.txt`, `response.csv` (0–4 kHz in 1 Hz steps) and
/// `design.txt`.
pub fn cmd_filter_design(config: &RunConfig) -> Result<FilterDesign> {
    let spec = config.design_spec();
    let chain = config.chain_config()?;
    let report = evaluate_design(&chain.fir, &spec);
    let dir = prepare_out(config)?;
    let header = hash_line(config);
    let hash_note = format!("config_sha256={}", config.hash());

    let mut w = create(&dir, "taps.txt")?;
    chain.fir.write_taps(&mut w, Some(&hash_note))?;
    w.flush()?;

    let fs = spec.modulator_rate_hz;
    let mut w = create(&dir, "response.csv")?;
    w.write_all(header.as_bytes())?;
    writeln!(w, "freq_hz,cic_db,fir_db,composite_db")?;
    for f in 0..=4000u32 {
        let f = f as f64;
        writeln!(
            w,
            "{f},{:.4},{:.4},{:.4}",
            db(chain.cic.magnitude(f, fs)),
            db(chain.fir.magnitude(f)),
            db(composite_magnitude(&chain.fir, &chain.cic, fs, f)),
        )?;
    }
    w.flush()?;

    let mut w = create(&dir, "design.txt")?;
    w.write_all(header.as_bytes())?;
    writeln!(w, "taps={}", chain.fir.taps.len())?;
    writeln!(w, "dc_gain={:.6}", report.dc_gain)?;
    writeln!(w, "ripple_db={:.4}", report.ripple_db)?;
    writeln!(w, "cutoff_gain_db={:.4}", report.cutoff_gain_db)?;
    writeln!(w, "image_rejection_db={:.4}", report.image_rejection_db)?;
    writeln!(w, "worst_image_hz={}", report.worst_image_hz)?;
    w.flush()?;
    Ok(FilterDesign {
        fir: chain.fir,
        report,
    })
}

#[derive(Debug, Clone)]
pub struct ScanSummary {
    /// `(element, valid samples, robust peak-to-peak code)`.
    pub elements: Vec<(usize, usize, f64)>,
}

/// Writes `scan.csv` (all decimated visits, time ordered),
/// `element_<k>.sdm` with each element's concatenated bits, and
/// `scan.txt`.
pub fn cmd_scan(config: &RunConfig) -> Result<ScanSummary> {
    let scene = config.pressure_scene()?;
    let modulator = config.modulator_config(InputMode::Capacitive);
    let chain = config.chain_config()?;
    let capture = scan(
        &scene,
        &config.array,
        &config.membrane,
        &config.mux,
        &modulator,
        scene.duration(),
    )?;
    let per_element = decimate_capture(&capture, &chain)?;
    let dir = prepare_out(config)?;
    let header = hash_line(config);

    let mut segments: Vec<&DecimatedStream> =
        per_element.iter().flat_map(|c| c.segments.iter()).collect();
    segments.sort_by(|a, b| a.start_time.total_cmp(&b.start_time));
    let mut w = create(&dir, "scan.csv")?;
    w.write_all(header.as_bytes())?;
    DecimatedStream::write_csv_header(&mut w)?;
    for s in segments {
        s.write_csv_rows(&mut w)?;
    }
    w.flush()?;

    for element in capture.elements() {
        let bits = BitStream {
            sample_rate: capture.sample_rate,
            bits: capture
                .segments_for(element)
                .flat_map(|s| s.bits.iter().copied())
                .collect(),
        };
        let mut w = create(&dir, &format!("element_{element}.sdm"))?;
        bits.write_packed(&mut w)?;
        w.flush()?;
    }

    let elements: Vec<(usize, usize, f64)> = per_element
        .iter()
        .map(|c| {
            let codes: Vec<f64> = c.valid_codes().iter().map(|&v| v as f64).collect();
            (c.element, codes.len(), robust_peak_to_peak(&codes))
        })
        .collect();
    let mut w = create(&dir, "scan.txt")?;
    w.write_all(header.as_bytes())?;
    for (e, n, p2p) in &elements {
        writeln!(w, "element_{e}_valid_samples={n}")?;
        writeln!(w, "element_{e}_p2p_codes={p2p:.3}")?;
    }
    w.flush()?;
    Ok(ScanSummary { elements })
}
