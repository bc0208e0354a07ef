//! On-disk formats: raw IQ captures with a JSON sidecar, PSDU manifests
//! (one hex PSDU per line) and event logs (one JSON object per line).

use crate::CliError;
use num_complex::Complex32;
use sdr_core::wifi::FrameEvent;
use serde::{Deserialize, Serialize};
use std::fs;
use std::path::{Path, PathBuf};


/// Metadata stored next to an IQ capture as `<capture>.json`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sidecar {
    pub sample_rate_hz: f64,
    pub center_freq_hz: f64,
    pub description: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

pub fn sidecar_path(capture: &Path) -> PathBuf {
    let mut s = capture.as_os_str().to_owned();
    s.push(".json");
    PathBuf::from(s)
}

/// Interleaved I/Q float32 little endian.
pub fn encode_iq(samples: &[Complex32]) -> Vec<u8> {
    let mut out = Vec::with_capacity(samples.len() * 8);
    for s in samples {
        out.extend_from_slice(&s.re.to_le_bytes());
        out.extend_from_slice(&s.im.to_le_bytes());
    }
    out
}

pub fn decode_iq(bytes: &[u8]) -> Result<Vec<Complex32>, CliError> {
    if !bytes.len().is_multiple_of(8) {
        return Err(CliError::Format(format!(
            "IQ data length {} is not a multiple of 8 bytes",
            bytes.len()
        )));
    }
    bytes
        .chunks_exact(8)
        .enumerate()
        .map(|(i, c)| {
            let re = f32::from_le_bytes(c[..4].try_into().unwrap());
            let im = f32::from_le_bytes(c[4..].try_into().unwrap());
            if re.is_finite() && im.is_finite() {
                Ok(Complex32::new(re, im))
            } else {
                Err(CliError::Format(format!("non-finite sample at index {i}")))
            }
        })
        .collect()
}

pub fn write_iq(path: &Path, samples: &[Complex32], sidecar: &Sidecar) -> Result<(), CliError> {
    fs::write(path, encode_iq(samples)).map_err(CliError::io(path))?;
    let meta = sidecar_path(path);
    let text = serde_json::to_string_pretty(sidecar).expect("sidecar serializes");
    fs::write(&meta, text + "\n").map_err(CliError::io(&meta))
}

/// Reads a capture and its sidecar, if one exists.
pub fn read_iq(path: &Path) -> Result<(Vec<Complex32>, Option<Sidecar>), CliError> {
    let bytes = fs::read(path).map_err(CliError::io(path))?;
    let samples = decode_iq(&bytes)?;
    let meta = sidecar_path(path);
    let sidecar = match fs::read_to_string(&meta) {
        Ok(text) => Some(
            serde_json::from_str(&text)
                .map_err(|e| CliError::Format(format!("{}: {e}", meta.display())))?,
        ),
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => None,
        Err(e) => return Err(CliError::io(&meta)(e)),
    };
    Ok((samples, sidecar))
}

pub fn format_manifest(psdus: &[Vec<u8>]) -> String {
    psdus.iter().map(|p| hex::encode(p) + "\n").collect()
}

/// Blank lines are skipped; an empty PSDU cannot be represented.
pub fn parse_manifest(text: &str) -> Result<Vec<Vec<u8>>, CliError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            hex::decode(l.trim())
                .map_err(|e| CliError::Format(format!("manifest line {}: {e}", i + 1)))
        })
        .collect()
}

pub fn format_events(events: &[FrameEvent]) -> String {
    events
        .iter()
        .map(|e| serde_json::to_string(e).expect("event serializes") + "\n")
        .collect()
}

pub fn parse_events(text: &str) -> Result<Vec<FrameEvent>, CliError> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            serde_json::from_str(l)
                .map_err(|e| CliError::Format(format!("events line {}: {e}", i + 1)))
        })
        .collect()
}

pub fn read_text(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(CliError::io(path))
}

pub fn write_text(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(CliError::io(path))
}
