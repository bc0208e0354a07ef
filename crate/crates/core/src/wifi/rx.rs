//! Frame decoding and the batch receiver.
//!
//! A frame owns the samples from its trigger up to the next trigger (or the
//! end of the capture). The streaming blocks apply the same rule, so both
//! paths produce identical events.

use super::coding::{
    bits_to_bytes, check_fcs, deinterleave, descramble, viterbi_decode,
};
use super::equalize::{equalize, estimate_channel, ChannelEstimate};
use super::mapping::demap;
use super::params::*;
use super::signal::{decode_signal, SignalField};
use super::sync::{align_segment, detect_frames, window_offset, CfoCorrector, Trigger};
use super::WifiError;
use crate::accel::FftBackend;
use crate::dsp::Direction;
use num_complex::Complex32;
use serde::{Deserialize, Serialize};
use std::collections::HashMap;
use std::f64::consts::TAU;

/// One decoded frame.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameEvent {
    /// Estimated first sample of the frame (start of the short preamble).
    pub start: u64,
    pub mcs: Mcs,
    pub length: usize,
    pub fcs_ok: bool,
    /// Total frequency offset removed (coarse + fine), Hz.
    pub cfo_applied: f64,
    #[serde(with = "hex_bytes")]
    pub psdu: Vec<u8>,
}

mod hex_bytes {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(b: &[u8], s: S) -> Result<S::Ok, S::Error> {
        let hex: String = b.iter().map(|v| format!("{v:02x}")).collect();
        s.serialize_str(&hex)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<u8>, D::Error> {
        let s = String::deserialize(d)?;
        if s.len() % 2 != 0 {
            return Err(serde::de::Error::custom("odd-length hex"));
        }
        (0..s.len())
            .step_by(2)
            .map(|i| u8::from_str_radix(&s[i..i + 2], 16).map_err(serde::de::Error::custom))
            .collect()
    }
}

/// Frame context carried from alignment to the event.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameMeta {
    pub start: u64,
    pub cfo_hz: f64,
}

/// Turns per-frame FFT outputs (LTF1, LTF2, then symbols) into equalized
/// data carriers.
#[derive(Debug, Clone, Default)]
pub struct FrameEqualizer {
    ltf1: Option<Vec<Complex32>>,
    est: Option<ChannelEstimate>,
    symbol: usize,
    failed: bool,
}

impl FrameEqualizer {
    pub fn new() -> Self {
        Self::default()
    }

    /// `None` while consuming training symbols or after a failure.
    pub fn push(&mut self, freq: &[Complex32]) -> Option<Vec<Complex32>> {
        if self.failed {
            return None;
        }
        let Some(est) = &self.est else {
            match self.ltf1.take() {
                None => self.ltf1 = Some(freq.to_vec()),
                Some(l1) => match estimate_channel(&l1, freq) {
                    Ok(e) => self.est = Some(e),
                    Err(_) => self.failed = true,
                },
            }
            return None;
        };
        match equalize(freq, est, self.symbol) {
            Ok(eq) => {
                self.symbol += 1;
                Some(eq.data)
            }
            Err(_) => {
                self.failed = true;
                None
            }
        }
    }
}

/// Outcome of feeding one equalized symbol to a [`FrameDecoder`].
#[derive(Debug, Clone, PartialEq)]
pub enum DecodeStep {
    NeedMore,
    Failed(WifiError),
    Done(DecodedFrame),
}

#[derive(Debug, Clone, PartialEq)]
pub struct DecodedFrame {
    pub mcs: Mcs,
    pub psdu: Vec<u8>,
    pub fcs_ok: bool,
}

/// SIGNAL then DATA decoding for one frame.
#[derive(Debug, Clone, Default)]
pub struct FrameDecoder {
    signal: Option<SignalField>,
    soft: Vec<f32>,
    symbols: usize,
    finished: bool,
}

impl FrameDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn is_finished(&self) -> bool {
        self.finished
    }

    pub fn push(&mut self, data: &[Complex32]) -> DecodeStep {
        if self.finished {
            return DecodeStep::NeedMore;
        }
        let Some(sig) = self.signal else {
            return match decode_signal(&demap(data, Modulation::Bpsk)) {
                Ok(s) => {
                    self.signal = Some(s);
                    self.soft.reserve(s.mcs.n_symbols(s.length) * s.mcs.n_cbps());
                    DecodeStep::NeedMore
                }
                Err(e) => {
                    self.finished = true;
                    DecodeStep::Failed(e)
                }
            };
        };
        let soft = demap(data, sig.mcs.modulation());
        match deinterleave(&soft, sig.mcs.n_bpsc()) {
            Ok(d) => self.soft.extend(d),
            Err(e) => {
                self.finished = true;
                return DecodeStep::Failed(e);
            }
        }
        self.symbols += 1;
        if self.symbols < sig.mcs.n_symbols(sig.length) {
            return DecodeStep::NeedMore;
        }
        self.finished = true;
        match decode_data(&self.soft, sig) {
            Ok(f) => DecodeStep::Done(f),
            Err(e) => DecodeStep::Failed(e),
        }
    }
}

/// Soft DATA bits (deinterleaved, still punctured) to the PSDU.
pub fn decode_data(soft: &[f32], sig: SignalField) -> Result<DecodedFrame, WifiError> {
    let n_info = SERVICE_BITS + 8 * sig.length + TAIL_BITS;
    let bits = viterbi_decode(soft, sig.mcs.code_rate(), n_info)?;
    let (plain, _seed) = descramble(&bits);
    let psdu = bits_to_bytes(&plain[SERVICE_BITS..SERVICE_BITS + 8 * sig.length]);
    // Short PSDUs carry no FCS; the reserved SERVICE bits stand in.
    let fcs_ok = if psdu.len() >= 4 {
        check_fcs(&psdu)?
    } else {
        plain[7..SERVICE_BITS].iter().all(|&b| b == 0)
    };
    Ok(DecodedFrame {
        mcs: sig.mcs,
        psdu,
        fcs_ok,
    })
}

/// Rotation removing the fine offset, phase zero at the first LTF sample.
pub(crate) fn fine_rotation(fine_hz: f64, sample_rate: f64, rel: i64) -> Complex32 {
    let ph = -(fine_hz / sample_rate * rel as f64).fract() * TAU;
    Complex32::new(ph.cos() as f32, ph.sin() as f32)
}

/// Decodes the frame occupying `seg` (samples from the trigger to the frame
/// boundary, raw).
pub fn decode_segment(
    seg: &[Complex32],
    trigger: Trigger,
    params: &OfdmParams,
    backend: &mut dyn FftBackend,
) -> Option<FrameEvent> {
    let corrected = CfoCorrector::new(trigger.cfo_hz, params.sample_rate).process(seg);
    let align = align_segment(&corrected, params.sample_rate).ok()?;
    let m = align.ltf_start as i64;
    let mut eq = FrameEqualizer::new();
    let mut dec = FrameDecoder::new();
    let mut window = vec![Complex32::new(0.0, 0.0); FFT_SIZE];
    for j in 0.. {
        let ws = m + window_offset(j);
        let we = ws as usize + FFT_SIZE;
        if we > corrected.len() {
            return None;
        }
        for (i, w) in window.iter_mut().enumerate() {
            let a = ws + i as i64;
            *w = corrected[a as usize] * fine_rotation(align.fine_cfo_hz, params.sample_rate, a - m);
        }
        let freq = backend.transform(&window, Direction::Forward).ok()?.output;
        let Some(data) = eq.push(&freq) else {
            if j >= 2 {
                return None;
            }
            continue;
        };
        match dec.push(&data) {
            DecodeStep::NeedMore => {}
            DecodeStep::Failed(_) => return None,
            DecodeStep::Done(f) => {
                let meta = frame_meta(trigger, &align);
                return Some(FrameEvent {
                    start: meta.start,
                    mcs: f.mcs,
                    length: f.psdu.len(),
                    fcs_ok: f.fcs_ok,
                    cfo_applied: meta.cfo_hz,
                    psdu: f.psdu,
                });
            }
        }
    }
    unreachable!()
}

pub(crate) fn frame_meta(trigger: Trigger, align: &super::sync::Alignment) -> FrameMeta {
    let ltf_abs = trigger.index + align.ltf_start as u64;
    FrameMeta {
        start: ltf_abs.saturating_sub((STF_LEN + 32) as u64),
        cfo_hz: trigger.cfo_hz + align.fine_cfo_hz,
    }
}

/// Batch receiver over a finished capture, using the software FFT.
pub fn receive(samples: &[Complex32], params: &OfdmParams) -> Vec<FrameEvent> {
    let mut sw = crate::accel::SoftwareBackend::new();
    receive_with(samples, params, &mut sw)
}

pub fn receive_with(
    samples: &[Complex32],
    params: &OfdmParams,
    backend: &mut dyn FftBackend,
) -> Vec<FrameEvent> {
    let triggers = detect_frames(samples, params);
    let mut events = Vec::new();
    for (i, t) in triggers.iter().enumerate() {
        let end = triggers
            .get(i + 1)
            .map_or(samples.len(), |n| n.index as usize);
        let seg = &samples[t.index as usize..end];
        if let Some(ev) = decode_segment(seg, *t, params, backend) {
            events.push(ev);
        }
    }
    events
}

/// Packet error rate summary.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PerSummary {
    pub sent: usize,
    /// Events produced (frames whose header decoded).
    pub detected: usize,
    /// Sent PSDUs matched exactly by an fcs_ok event.
    pub passed: usize,
    pub per: f64,
}

/// Each fcs_ok event matches at most one identical, not yet matched PSDU.
pub fn compute_per(sent: &[Vec<u8>], events: &[FrameEvent]) -> PerSummary {
    let mut pending: HashMap<&[u8], usize> = HashMap::new();
    for s in sent {
        *pending.entry(s.as_slice()).or_default() += 1;
    }
    let mut passed = 0;
    for e in events.iter().filter(|e| e.fcs_ok) {
        if let Some(c) = pending.get_mut(e.psdu.as_slice()) {
            if *c > 0 {
                *c -= 1;
                passed += 1;
            }
        }
    }
    let per = if sent.is_empty() {
        0.0
    } else {
        1.0 - passed as f64 / sent.len() as f64
    };
    PerSummary {
        sent: sent.len(),
        detected: events.len(),
        passed,
        per,
    }
}
