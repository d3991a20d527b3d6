//! `meetbot`: simulate meetings, score traces, estimate DOAs from WAV files
//! and generate scenarios.
//!
//! Exit codes: 0 success, 1 invalid input, 2 I/O failure. Every failure
//! prints exactly one line, `error[validation]: ...` or `error[io]: ...`.

mod config;

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use meetbot::metrics::{self, UeiReport};
use meetbot::sim::{self, GenParams, Scenario, SimError, Trace};
use meetbot::ssl::{estimate_doa, SslError, VoiceActivityDetector};
use meetbot::{wav, AudioFrame, Timestamp};
use thiserror::Error;

use config::Overrides;

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Io(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 1,
            CliError::Io(_) => 2,
        }
    }

    fn tag(&self) -> &'static str {
        match self {
            CliError::Validation(_) => "validation",
            CliError::Io(_) => "io",
        }
    }
}

impl From<SimError> for CliError {
    fn from(e: SimError) -> Self {
        match e {
            SimError::Io(e) => CliError::Io(e.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "meetbot",
    version,
    about = "Meeting-robot attention simulator and evaluator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Run a scenario through the controller and write its trace
    Simulate {
        #[arg(long, value_name = "PATH")]
        scenario: PathBuf,
        /// JSON-Lines trace output
        #[arg(long, value_name = "PATH")]
        out: PathBuf,
        /// CSV summary output [default: trace path with .csv extension]
        #[arg(long, value_name = "PATH")]
        summary: Option<PathBuf>,
        /// Also render the microphone audio to a multi-channel WAV
        #[arg(long, value_name = "PATH")]
        wav: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Score a trace against its scenario
    Evaluate {
        #[arg(long, value_name = "PATH")]
        trace: PathBuf,
        #[arg(long, value_name = "PATH")]
        scenario: PathBuf,
        /// UEI report JSON output
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Estimate one DOA per voice-active frame of a WAV file (CSV on stdout)
    Doa {
        #[arg(long, value_name = "PATH")]
        wav: PathBuf,
        /// Frame length in seconds [default: acoustic.doa_frame_seconds]
        #[arg(long)]
        frame_seconds: Option<f64>,
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Generate a random scenario
    Gen {
        #[arg(long, default_value_t = 3)]
        attendees: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Seconds of scripted speech
        #[arg(long, default_value_t = 60.0)]
        duration: f64,
        /// Event-mode DOA noise, degrees
        #[arg(long, default_value_t = 2.0)]
        doa_noise_sigma: f64,
        /// Output path [default: stdout]
        #[arg(long, value_name = "PATH")]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            // --help and --version
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let first = e
                .to_string()
                .lines()
                .next()
                .unwrap_or_default()
                .trim_start_matches("error: ")
                .to_owned();
            eprintln!("error[validation]: {first}");
            return ExitCode::from(1);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = e.to_string().replace('\n', " ");
            eprintln!("error[{}]: {msg}", e.tag());
            ExitCode::from(e.exit_code())
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Simulate {
            scenario,
            out,
            summary,
            wav,
            overrides,
        } => cmd_simulate(
            &scenario,
            &out,
            summary.as_deref(),
            wav.as_deref(),
            &overrides,
        ),
        Command::Evaluate {
            trace,
            scenario,
            out,
            overrides,
        } => cmd_evaluate(&trace, &scenario, out.as_deref(), &overrides),
        Command::Doa {
            wav,
            frame_seconds,
            overrides,
        } => cmd_doa(&wav, frame_seconds, &overrides),
        Command::Gen {
            attendees,
            seed,
            duration,
            doa_noise_sigma,
            out,
        } => cmd_gen(
            &GenParams {
                attendees,
                seed,
                duration,
                doa_noise_sigma,
            },
            out.as_deref(),
        ),
    }
}

pub(crate) fn read_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, contents: &[u8]) -> Result<(), CliError> {
    fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn load_scenario(path: &Path) -> Result<Scenario, CliError> {
    Scenario::from_json(&read_file(path)?)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

fn cmd_simulate(
    scenario_path: &Path,
    out: &Path,
    summary: Option<&Path>,
    wav_path: Option<&Path>,
    overrides: &Overrides,
) -> Result<(), CliError> {
    let cfg = overrides.resolve()?;
    let scenario = load_scenario(scenario_path)?;
    let output = sim::run(&scenario, &cfg.sim)?;

    write_file(out, output.trace.to_jsonl().as_bytes())?;
    let summary_path = summary.map_or_else(|| out.with_extension("csv"), Path::to_path_buf);
    let mut w = csv::Writer::from_writer(Vec::new());
    for row in &output.summary {
        w.serialize(row).map_err(|e| CliError::Io(e.to_string()))?;
    }
    let bytes = w.into_inner().map_err(|e| CliError::Io(e.to_string()))?;
    write_file(&summary_path, &bytes)?;
    if let Some(p) = wav_path {
        sim::dump_wav(&scenario, &cfg.sim.acoustic, p).map_err(|e| match e {
            SimError::Io(io) => CliError::Io(format!("{}: {io}", p.display())),
            other => other.into(),
        })?;
    }

    let heading = output
        .summary
        .last()
        .map_or(scenario.initial_heading.degrees(), |r| r.heading);
    println!("turns: {}", output.trace.count_turns(None));
    println!("final heading: {heading:.3}");
    Ok(())
}

fn cmd_evaluate(
    trace_path: &Path,
    scenario_path: &Path,
    out: Option<&Path>,
    overrides: &Overrides,
) -> Result<(), CliError> {
    let cfg = overrides.resolve()?;
    let scenario = load_scenario(scenario_path)?;
    let trace = Trace::from_jsonl(&read_file(trace_path)?)
        .map_err(|e| CliError::Validation(format!("{}: {e}", trace_path.display())))?;
    let counts = metrics::count_events(&trace, &scenario, &cfg.metrics)
        .map_err(|e| CliError::Validation(e.to_string()))?;
    let report = UeiReport::from_counts(&counts);

    let e = counts.errors.as_array();
    let o = counts.opportunities.as_array();
    let labels = [
        "unnecessary turns",
        "missed turns",
        "inaccurate turns",
        "misjudged speaker",
        "missed detections",
    ];
    let mut stdout = std::io::stdout().lock();
    let io = |e: std::io::Error| CliError::Io(e.to_string());
    writeln!(
        stdout,
        "{:<4}{:<20}{:>8}{:>8}{:>7}",
        "", "parameter", "errors", "of", "score"
    )
    .map_err(io)?;
    for (i, label) in labels.iter().enumerate() {
        writeln!(
            stdout,
            "p{:<3}{:<20}{:>8}{:>8}{:>7}",
            i + 1,
            label,
            e[i],
            o[i],
            report.scores()[i]
        )
        .map_err(io)?;
    }
    writeln!(stdout, "UEI {:.1}", report.uei).map_err(io)?;

    if let Some(p) = out {
        let json = serde_json::to_string_pretty(&report).expect("report serializes");
        write_file(p, format!("{json}\n").as_bytes())?;
    }
    Ok(())
}

fn cmd_doa(
    wav_path: &Path,
    frame_seconds: Option<f64>,
    overrides: &Overrides,
) -> Result<(), CliError> {
    let cfg = overrides.resolve()?;
    let acoustic = &cfg.sim.acoustic;
    let data =
        wav::read(wav_path).map_err(|e| CliError::Io(format!("{}: {e}", wav_path.display())))?;
    let mics = acoustic.geometry.mic_count();
    if data.channels.len() != mics {
        return Err(CliError::Validation(format!(
            "{} has {} channels but the array geometry has {mics} microphones",
            wav_path.display(),
            data.channels.len()
        )));
    }
    let fs = f64::from(data.sample_rate);
    let seconds = frame_seconds.unwrap_or(acoustic.doa_frame_seconds);
    let frame_len = (seconds * fs).round() as usize;
    if !(seconds.is_finite() && frame_len >= meetbot::ssl::MIN_FRAME_LEN) {
        return Err(CliError::Validation(format!(
            "frame of {seconds} s holds fewer than {} samples",
            meetbot::ssl::MIN_FRAME_LEN
        )));
    }

    let mut vad = VoiceActivityDetector::new(acoustic.vad);
    let mut out = csv::Writer::from_writer(std::io::stdout().lock());
    out.write_record(["timestamp", "angle", "confidence"])
        .map_err(|e| CliError::Io(e.to_string()))?;
    let total = data.channels[0].len();
    let mut start = 0;
    while start + frame_len <= total {
        let channels: Vec<Vec<f64>> = data
            .channels
            .iter()
            .map(|c| c[start..start + frame_len].to_vec())
            .collect();
        let frame = AudioFrame::new(channels, fs, Timestamp::new(start as f64 / fs))
            .map_err(|e| CliError::Validation(e.to_string()))?;
        if vad.update(&frame).is_active() {
            match estimate_doa(&frame, &acoustic.geometry, &acoustic.doa) {
                Ok(est) => out
                    .write_record([
                        format!("{:.3}", est.timestamp.secs()),
                        format!("{:.2}", est.angle.degrees()),
                        format!("{:.4}", est.confidence),
                    ])
                    .map_err(|e| CliError::Io(e.to_string()))?,
                Err(SslError::NoPeak | SslError::NoVoiceActivity) => {}
                Err(e) => return Err(CliError::Validation(e.to_string())),
            }
        }
        start += frame_len;
    }
    out.flush().map_err(|e| CliError::Io(e.to_string()))
}

fn cmd_gen(params: &GenParams, out: Option<&Path>) -> Result<(), CliError> {
    let scenario = sim::generate(params)?;
    let json = format!("{}\n", scenario.to_json_pretty());
    match out {
        Some(p) => write_file(p, json.as_bytes()),
        None => {
            print!("{json}");
            Ok(())
        }
    }
}
