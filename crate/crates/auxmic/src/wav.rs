//! Multichannel WAV input/output (16-bit PCM and 32-bit float).

use std::path::Path;

use crate::error::{Error, Result};

/// Samples as f64 per channel, deinterleaved.
pub struct WavData {
    pub channels: Vec<Vec<f64>>,
    pub sample_rate: f64,
}

/// Read a PCM (8/16/24/32-bit) or 32-bit float WAV file.
pub fn read_wav(path: &Path) -> Result<WavData> {
    let reader = hound::WavReader::open(path).map_err(|e| Error::wav(path, e))?;
    let spec = reader.spec();
    let num_channels = spec.channels as usize;
    let mut channels = vec![Vec::new(); num_channels];

    match spec.sample_format {
        hound::SampleFormat::Float => {
            for (idx, s) in reader.into_samples::<f32>().enumerate() {
                let s = s.map_err(|e| Error::wav(path, e))?;
                channels[idx % num_channels].push(f64::from(s));
            }
        }
        hound::SampleFormat::Int => {
            let scale = (1i64 << (spec.bits_per_sample - 1)) as f64;
            for (idx, s) in reader.into_samples::<i32>().enumerate() {
                let s = s.map_err(|e| Error::wav(path, e))?;
                channels[idx % num_channels].push(f64::from(s) / scale);
            }
        }
    }

    Ok(WavData {
        channels,
        sample_rate: f64::from(spec.sample_rate),
    })
}

/// Write channels as 32-bit float WAV.
pub fn write_wav_f32(path: &Path, channels: &[Vec<f64>], sample_rate: f64) -> Result<()> {
    if channels.is_empty() {
        return Err(Error::InvalidInput("no channels to write".into()));
    }
    let len = channels[0].len();
    if channels.iter().any(|c| c.len() != len) {
        return Err(Error::InvalidInput(
            "channels differ in length; cannot interleave".into(),
        ));
    }
    let spec = hound::WavSpec {
        channels: channels.len() as u16,
        sample_rate: sample_rate.round() as u32,
        bits_per_sample: 32,
        sample_format: hound::SampleFormat::Float,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| Error::wav(path, e))?;
    for i in 0..len {
        for ch in channels {
            writer
                .write_sample(ch[i] as f32)
                .map_err(|e| Error::wav(path, e))?;
        }
    }
    writer.finalize().map_err(|e| Error::wav(path, e))
}

/// Write channels as 16-bit PCM WAV; samples are clipped to [-1, 1].
pub fn write_wav_i16(path: &Path, channels: &[Vec<f64>], sample_rate: f64) -> Result<()> {
    if channels.is_empty() {
        return Err(Error::InvalidInput("no channels to write".into()));
    }
    let len = channels[0].len();
    if channels.iter().any(|c| c.len() != len) {
        return Err(Error::InvalidInput(
            "channels differ in length; cannot interleave".into(),
        ));
    }
    let spec = hound::WavSpec {
        channels: channels.len() as u16,
        sample_rate: sample_rate.round() as u32,
        bits_per_sample: 16,
        sample_format: hound::SampleFormat::Int,
    };
    let mut writer = hound::WavWriter::create(path, spec).map_err(|e| Error::wav(path, e))?;
    for i in 0..len {
        for ch in channels {
            let s = (ch[i].clamp(-1.0, 1.0) * 32767.0).round() as i16;
            writer.write_sample(s).map_err(|e| Error::wav(path, e))?;
        }
    }
    writer.finalize().map_err(|e| Error::wav(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn float_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.wav");
        let chans = vec![
            (0..256).map(|n| (n as f64 / 77.0).sin() * 0.5).collect::<Vec<_>>(),
            (0..256).map(|n| (n as f64 / 31.0).cos() * 0.25).collect(),
        ];
        write_wav_f32(&path, &chans, 16_000.0).unwrap();
        let back = read_wav(&path).unwrap();
        assert_eq!(back.channels.len(), 2);
        assert_eq!(back.sample_rate, 16_000.0);
        for (a, b) in chans.iter().zip(&back.channels) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-6);
            }
        }
    }

    #[test]
    fn pcm16_round_trip_within_quantization() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t16.wav");
        let chans = vec![(0..64).map(|n| (n as f64 / 10.0).sin() * 0.9).collect::<Vec<_>>()];
        write_wav_i16(&path, &chans, 8_000.0).unwrap();
        let back = read_wav(&path).unwrap();
        for (x, y) in chans[0].iter().zip(&back.channels[0]) {
            assert!((x - y).abs() < 1.0 / 32000.0);
        }
    }

    #[test]
    fn missing_file_reports_path() {
        let err = read_wav(Path::new("/nonexistent/file.wav")).unwrap_err();
        assert_eq!(err.exit_code(), 4);
    }
}
