use std::path::Path;

use hound::{SampleFormat, WavReader, WavSpec, WavWriter};

use super::Waveform;
use crate::error::{Error, Result};

fn wav_err(path: &Path, reason: impl ToString) -> Error {
    Error::Wav {
        path: path.to_path_buf(),
        reason: reason.to_string(),
    }
}

/// Reads a 16-bit integer or 32-bit float PCM file and averages channels to
/// mono. Integer samples are divided by 32768.
pub fn load_wav(path: impl AsRef<Path>) -> Result<Waveform> {
    let path = path.as_ref();
    let mut reader = WavReader::open(path).map_err(|e| wav_err(path, e))?;
    let spec = reader.spec();
    let channels = spec.channels as usize;
    if channels == 0 {
        return Err(wav_err(path, "no channels"));
    }
    let interleaved: Vec<f64> = match (spec.sample_format, spec.bits_per_sample) {
        (SampleFormat::Int, 16) => reader
            .samples::<i16>()
            .map(|s| s.map(|v| v as f64 / 32768.0))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| wav_err(path, e))?,
        (SampleFormat::Float, 32) => reader
            .samples::<f32>()
            .map(|s| s.map(|v| v as f64))
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| wav_err(path, e))?,
        (fmt, bits) => {
            return Err(wav_err(
                path,
                format!("unsupported encoding: {bits}-bit {fmt:?}"),
            ))
        }
    };
    if interleaved.len() < channels {
        return Err(Error::ZeroLengthAudio);
    }
    let mono = interleaved
        .chunks_exact(channels)
        .map(|frame| frame.iter().sum::<f64>() / channels as f64)
        .collect();
    Waveform::new(mono, spec.sample_rate as f64).map_err(|e| match e {
        Error::ZeroLengthAudio => e,
        other => wav_err(path, other),
    })
}

fn spec(w: &Waveform, bits: u16, format: SampleFormat) -> WavSpec {
    WavSpec {
        channels: 1,
        sample_rate: w.sample_rate().round() as u32,
        bits_per_sample: bits,
        sample_format: format,
    }
}

pub fn write_wav_f32(path: impl AsRef<Path>, w: &Waveform) -> Result<()> {
    let path = path.as_ref();
    let mut writer =
        WavWriter::create(path, spec(w, 32, SampleFormat::Float)).map_err(|e| wav_err(path, e))?;
    for &s in w.samples() {
        writer.write_sample(s as f32).map_err(|e| wav_err(path, e))?;
    }
    writer.finalize().map_err(|e| wav_err(path, e))
}

/// Writes 16-bit PCM, clipping to [-1, 1).
pub fn write_wav_i16(path: impl AsRef<Path>, w: &Waveform) -> Result<()> {
    let path = path.as_ref();
    let mut writer =
        WavWriter::create(path, spec(w, 16, SampleFormat::Int)).map_err(|e| wav_err(path, e))?;
    for &s in w.samples() {
        let v = (s * 32768.0).round().clamp(-32768.0, 32767.0) as i16;
        writer.write_sample(v).map_err(|e| wav_err(path, e))?;
    }
    writer.finalize().map_err(|e| wav_err(path, e))
}
