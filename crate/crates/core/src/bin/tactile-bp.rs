use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use tactile_bp::commands::{cmd_adc_test, cmd_filter_design, cmd_measure, cmd_scan};
use tactile_bp::config::RunConfig;
use tactile_bp::Result;

#[derive(Parser)]
#[command(version, about = "Tactile blood-pressure sensor simulator")]
struct Cli {
    /// Configuration file; built-in defaults when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `run.seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `run.out_dir`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Single-tone converter characterization in voltage mode.
    AdcTest {
        /// Amplitude as a fraction of full scale, in (0, 1).
        #[arg(long)]
        amplitude: Option<f64>,
        #[arg(long)]
        freq: Option<f64>,
    },
    /// Scan, select, calibrate and export the pressure waveform.
    Measure,
    /// Design the decimation FIR and export its response.
    FilterDesign,
    /// Multiplexed acquisition with per-element raw dumps.
    Scan,
}

fn run(cli: Cli) -> Result<String> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    if let Some(out) = cli.out {
        config.out_dir = out;
    }
    let summary = match cli.command {
        Command::AdcTest { amplitude, freq } => {
            let a = amplitude.unwrap_or(config.adc_test.amplitude);
            let f = freq.unwrap_or(config.adc_test.freq_hz);
            cmd_adc_test(a, f, &config)?.metrics.to_key_value()
        }
        Command::Measure => cmd_measure(&config)?.metrics_text(),
        Command::FilterDesign => {
            let d = cmd_filter_design(&config)?;
            format!(
                "taps={}\nripple_db={:.4}\ncutoff_gain_db={:.4}\nimage_rejection_db={:.4}\n",
                d.fir.taps.len(),
                d.report.ripple_db,
                d.report.cutoff_gain_db,
                d.report.image_rejection_db
            )
        }
        Command::Scan => cmd_scan(&config)?
            .elements
            .iter()
            .map(|(e, n, p)| format!("element_{e}: {n} valid samples, p2p {p:.1} codes\n"))
            .collect(),
    };
    Ok(summary)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(summary) => {
            print!("{summary}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
