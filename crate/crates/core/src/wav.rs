//! Multi-channel RIFF/WAVE input and output.

use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

/// Decoded audio: one sample vector per channel plus the sample rate.
#[derive(Debug, Clone, PartialEq)]
pub struct WavData {
    pub channels: Vec<Vec<f64>>,
    pub sample_rate: u32,
}

/// Reads 16-bit PCM or 32-bit float WAV, de-interleaving channels.
/// PCM samples are scaled to `[-1, 1)`.
pub fn read(path: &Path) -> Result<WavData, String> {
    let reader = WavReader::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
    let spec = reader.spec();
    let n = spec.channels as usize;
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .into_samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<Result<_, _>>(),
        (SampleFormat::Float, 32) => reader
            .into_samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<Result<_, _>>(),
        (fmt, bits) => return Err(format!("unsupported WAV encoding: {bits}-bit {fmt:?}")),
    }
    .map_err(|e| format!("{}: {e}", path.display()))?;
    let mut channels = vec![Vec::with_capacity(interleaved.len() / n.max(1)); n];
    for (i, s) in interleaved.into_iter().enumerate() {
        channels[i % n].push(s);
    }
    Ok(WavData {
        channels,
        sample_rate: spec.sample_rate,
    })
}

pub fn write_f32(path: &Path, channels: &[Vec<f64>], sample_rate: u32) -> std::io::Result<()> {
    write(path, channels, sample_rate, SampleFormat::Float)
}

pub fn write_pcm16(path: &Path, channels: &[Vec<f64>], sample_rate: u32) -> std::io::Result<()> {
    write(path, channels, sample_rate, SampleFormat::Int)
}

fn write(
    path: &Path,
    channels: &[Vec<f64>],
    sample_rate: u32,
    format: SampleFormat,
) -> std::io::Result<()> {
    let spec = WavSpec {
        channels: channels.len() as u16,
        sample_rate,
        bits_per_sample: if format == SampleFormat::Float {
            32
        } else {
            16
        },
        sample_format: format,
    };
    let to_io = |e: hound::Error| match e {
        hound::Error::IoError(e) => e,
        other => std::io::Error::other(other.to_string()),
    };
    let mut w = WavWriter::create(path, spec).map_err(to_io)?;
    let len = channels.first().map_or(0, |c| c.len());
    for k in 0..len {
        for ch in channels {
            match format {
                SampleFormat::Float => w.write_sample(ch[k] as f32),
                SampleFormat::Int => {
                    w.write_sample((ch[k].clamp(-1.0, 1.0) * 32767.0).round() as i16)
                }
            }
            .map_err(to_io)?;
        }
    }
    w.finalize().map_err(to_io)
}
