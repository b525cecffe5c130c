//! RIFF/WAVE PCM 16-bit reader and writer.

use std::path::Path;

use crate::error::{Error, Result};
use crate::stft::Signal;

const FORMAT_PCM: u16 = 1;
const FORMAT_EXTENSIBLE: u16 = 0xFFFE;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WavFormat {
    pub channels: u16,
    pub sample_rate: u32,
    pub bits_per_sample: u16,
}

fn u16_at(b: &[u8], at: usize) -> u16 {
    u16::from_le_bytes([b[at], b[at + 1]])
}

fn u32_at(b: &[u8], at: usize) -> u32 {
    u32::from_le_bytes([b[at], b[at + 1], b[at + 2], b[at + 3]])
}

fn bad(msg: impl Into<String>) -> Error {
    Error::Wav(msg.into())
}

fn parse_fmt(body: &[u8]) -> Result<WavFormat> {
    if body.len() < 16 {
        return Err(bad(format!("fmt chunk too short ({} bytes)", body.len())));
    }
    let mut tag = u16_at(body, 0);
    let channels = u16_at(body, 2);
    let sample_rate = u32_at(body, 4);
    let block_align = u16_at(body, 12);
    let bits_per_sample = u16_at(body, 14);
    if tag == FORMAT_EXTENSIBLE {
        if body.len() < 26 {
            return Err(bad("extensible fmt chunk too short"));
        }
        // first two bytes of the sub-format GUID carry the format tag
        tag = u16_at(body, 24);
    }
    if tag != FORMAT_PCM {
        return Err(bad(format!("unsupported codec (format tag {tag:#06x}); only PCM is read")));
    }
    if bits_per_sample != 16 {
        return Err(bad(format!("unsupported bit depth {bits_per_sample}; only 16-bit PCM is read")));
    }
    if channels == 0 {
        return Err(bad("zero channels"));
    }
    if block_align as u32 != channels as u32 * 2 {
        return Err(bad(format!("block align {block_align} does not match {channels} channels")));
    }
    if sample_rate == 0 {
        return Err(bad("zero sample rate"));
    }
    Ok(WavFormat {
        channels,
        sample_rate,
        bits_per_sample,
    })
}

/// Parses WAV bytes into a mono signal normalised by 1/32768. Multichannel
/// input is averaged per frame.
pub fn parse_wav(bytes: &[u8]) -> Result<(Signal, WavFormat)> {
    if bytes.len() < 12 {
        return Err(bad("truncated RIFF header"));
    }
    if &bytes[0..4] != b"RIFF" {
        return Err(bad("missing RIFF tag"));
    }
    if &bytes[8..12] != b"WAVE" {
        return Err(bad("missing WAVE form type"));
    }

    let mut pos = 12;
    let mut format = None;
    let mut data: Option<&[u8]> = None;
    while pos + 8 <= bytes.len() {
        let id = &bytes[pos..pos + 4];
        let size = u32_at(bytes, pos + 4) as usize;
        let start = pos + 8;
        let end = start
            .checked_add(size)
            .filter(|&e| e <= bytes.len())
            .ok_or_else(|| bad(format!("chunk {:?} runs past end of file", String::from_utf8_lossy(id))))?;
        match id {
            b"fmt " => format = Some(parse_fmt(&bytes[start..end])?),
            b"data" => {
                data = Some(&bytes[start..end]);
                if format.is_some() {
                    break;
                }
            }
            _ => {}
        }
        // chunks are word aligned
        pos = end + (size & 1);
    }

    let format = format.ok_or_else(|| bad("no fmt chunk"))?;
    let data = data.ok_or_else(|| bad("no data chunk"))?;
    let frame_bytes = 2 * format.channels as usize;
    let frames = data.len() / frame_bytes;
    if frames == 0 {
        return Err(bad("data chunk holds no complete frame"));
    }
    let channels = format.channels as f64;
    let samples = data
        .chunks_exact(frame_bytes)
        .map(|frame| {
            let sum: f64 = frame
                .chunks_exact(2)
                .map(|s| i16::from_le_bytes([s[0], s[1]]) as f64 / 32768.0)
                .sum();
            sum / channels
        })
        .collect();
    Ok((Signal::new(samples, format.sample_rate as f64)?, format))
}

pub fn load_wav(path: impl AsRef<Path>) -> Result<Signal> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    parse_wav(&bytes).map(|(s, _)| s)
}

/// Encodes interleaved 16-bit samples as a canonical 44-byte-header WAV.
pub fn encode_wav(samples: &[i16], channels: u16, sample_rate: u32) -> Vec<u8> {
    let data_len = (samples.len() * 2) as u32;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&FORMAT_PCM.to_le_bytes());
    out.extend_from_slice(&channels.to_le_bytes());
    out.extend_from_slice(&sample_rate.to_le_bytes());
    out.extend_from_slice(&(sample_rate * channels as u32 * 2).to_le_bytes());
    out.extend_from_slice(&(channels * 2).to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for s in samples {
        out.extend_from_slice(&s.to_le_bytes());
    }
    out
}

/// Writes a mono signal, scaling by 32768 and saturating to the i16 range.
pub fn write_wav(path: impl AsRef<Path>, signal: &Signal) -> Result<()> {
    let pcm: Vec<i16> = signal
        .samples()
        .iter()
        .map(|x| (x * 32768.0).round().clamp(i16::MIN as f64, i16::MAX as f64) as i16)
        .collect();
    let rate = signal.sample_rate().round() as u32;
    super::export::write_atomic(path.as_ref(), &encode_wav(&pcm, 1, rate))
}
