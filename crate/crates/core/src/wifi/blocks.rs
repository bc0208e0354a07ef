//! Streaming receiver: detector, coarse CFO, alignment, equalizer, decoder
//! and a packet sink, plus a builder for the complete chain.
//!
//! Frames are delimited by consecutive triggers exactly as in
//! [`super::receive_with`], so the graph reproduces the batch events for any
//! chunking or worker count.

use super::params::{Mcs, OfdmParams, FFT_SIZE, N_DATA_CARRIERS};
use super::rx::{fine_rotation, frame_meta, DecodeStep, FrameDecoder, FrameEqualizer, FrameEvent, FrameMeta};
use super::sync::{align_segment, window_offset, Alignment, CfoCorrector, Detector, DetectorConfig, Trigger, ALIGN_SPAN};
use super::WifiError;
use crate::accel::{FftBackend, FftBlock};
use crate::dsp::{Direction, StreamToVector};
use crate::runtime::{
    copy_items, forward_tags, Block, BlockError, FlowGraph, ItemKind, Tag, TagValue, VectorSource,
    WorkIo, WorkStatus,
};
use num_complex::Complex32;
use std::collections::BTreeMap;
use std::sync::{Arc, Mutex};

const FRAME_START: &str = "frame_start";
const FRAME: &str = "frame";

/// Passes samples through and tags each trigger with `frame_start` (coarse
/// CFO in Hz). Holds back the detector's lookahead until end of stream.
pub struct DetectorBlock {
    det: Detector,
}

impl DetectorBlock {
    pub fn new(params: &OfdmParams) -> Self {
        Self::with_config(DetectorConfig::default(), params)
    }

    pub fn with_config(cfg: DetectorConfig, params: &OfdmParams) -> Self {
        Self {
            det: Detector::new(cfg, params),
        }
    }
}

impl Block for DetectorBlock {
    fn input_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Complex32]
    }

    fn output_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Complex32]
    }

    fn min_input_items(&self, _port: usize) -> usize {
        self.det.config().span()
    }

    fn work(&mut self, io: &mut WorkIo<'_>) -> Result<WorkStatus, BlockError> {
        let span = self.det.config().span();
        let (input, out) = (&mut io.inputs[0], &mut io.outputs[0]);
        let avail = input.items();
        let space = out.space();
        let x = input.slice::<Complex32>();
        let mut done = 0;
        if avail >= span {
            if input.offset() != self.det.position() {
                return Err(BlockError::new("detector lost stream position"));
            }
            let lim = avail.min(space + span - 1);
            let (count, triggers) = self.det.process(&x[..lim]);
            copy_items(input, out, count);
            forward_tags(input, out, count);
            for t in triggers {
                out.add_tag(t.index, FRAME_START, TagValue::F64(t.cfo_hz));
            }
            input.consume(count);
            done = count;
        }
        if input.is_eos() && avail - done < span {
            let rest = (avail - done).min(space - done);
            copy_items(input, out, rest);
            forward_tags(input, out, rest);
            input.consume(rest);
        }
        Ok(WorkStatus::Ok)
    }
}

/// Removes the coarse offset announced by each `frame_start` tag, phase
/// zero at the tag. Samples before the first tag pass unchanged.
pub struct CfoBlock {
    sample_rate: f64,
    rot: Option<CfoCorrector>,
}

impl CfoBlock {
    pub fn new(params: &OfdmParams) -> Self {
        Self {
            sample_rate: params.sample_rate,
            rot: None,
        }
    }
}

impl Block for CfoBlock {
    fn input_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Complex32]
    }

    fn output_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Complex32]
    }

    fn work(&mut self, io: &mut WorkIo<'_>) -> Result<WorkStatus, BlockError> {
        let (input, out) = (&mut io.inputs[0], &mut io.outputs[0]);
        let n = input.items().min(out.space());
        let x = &input.slice::<Complex32>()[..n];
        let base = input.offset();
        let mut tags = input
            .tags()
            .iter()
            .filter(|t| t.key == FRAME_START && t.offset < base + n as u64)
            .peekable();
        let y = &mut out.slice_mut::<Complex32>()[..n];
        for (i, (o, v)) in y.iter_mut().zip(x).enumerate() {
            while let Some(t) = tags.next_if(|t| t.offset <= base + i as u64) {
                let cfo = t.value.as_f64().unwrap_or(0.0);
                self.rot = Some(CfoCorrector::new(cfo, self.sample_rate));
            }
            *o = match &mut self.rot {
                Some(r) => r.rotate(*v),
                None => *v,
            };
        }
        out.produce(n);
        forward_tags(input, out, n);
        input.consume(n);
        Ok(WorkStatus::Ok)
    }
}

enum AlignState {
    Pending,
    Ready(Alignment),
    Failed,
}

struct FrameBuf {
    trigger: Trigger,
    /// Samples from relative index `base` on (relative to the trigger).
    buf: Vec<Complex32>,
    base: usize,
    len: usize,
    align: AlignState,
    next_window: usize,
    closed: bool,
}

impl FrameBuf {
    fn new(trigger: Trigger) -> Self {
        Self {
            trigger,
            buf: Vec::with_capacity(ALIGN_SPAN),
            base: 0,
            len: 0,
            align: AlignState::Pending,
            next_window: 0,
            closed: false,
        }
    }

    fn ingest(&mut self, x: &[Complex32], sample_rate: f64) {
        self.len += x.len();
        if matches!(self.align, AlignState::Failed) {
            self.base = self.len;
            return;
        }
        self.buf.extend_from_slice(x);
        if matches!(self.align, AlignState::Pending) && self.len >= ALIGN_SPAN {
            self.align = match align_segment(&self.buf[..ALIGN_SPAN], sample_rate) {
                Ok(a) => AlignState::Ready(a),
                Err(_) => AlignState::Failed,
            };
        }
    }

    fn close(&mut self) {
        self.closed = true;
        if matches!(self.align, AlignState::Pending) {
            self.align = AlignState::Failed;
        }
    }

    /// Relative start of the next window if it lies entirely in the buffer.
    fn ready_window(&self) -> Option<(usize, Alignment)> {
        let AlignState::Ready(a) = self.align else {
            return None;
        };
        let s = (a.ltf_start as i64 + window_offset(self.next_window)) as usize;
        (s + FFT_SIZE <= self.len).then_some((s, a))
    }
}

/// Locates each frame's long training field and emits its FFT windows
/// (LTF1, LTF2, then one per OFDM symbol) back to back as 64-sample blocks,
/// fine-CFO corrected. The first window carries a `frame` tag
/// `{start, cfo}`. Windows never extend past the next trigger.
pub struct AlignBlock {
    sample_rate: f64,
    frame: Option<FrameBuf>,
}

impl AlignBlock {
    pub fn new(params: &OfdmParams) -> Self {
        Self {
            sample_rate: params.sample_rate,
            frame: None,
        }
    }

    /// Emits ready windows; false when one is ready but there is no room.
    fn emit(&mut self, out: &mut crate::runtime::OutputWindow<'_>) -> bool {
        let Some(f) = &mut self.frame else {
            return true;
        };
        while let Some((s, a)) = f.ready_window() {
            if out.remaining() < FFT_SIZE {
                return false;
            }
            if f.next_window == 0 {
                let meta = frame_meta(f.trigger, &a);
                let mut d = BTreeMap::new();
                d.insert("start".to_string(), TagValue::U64(meta.start));
                d.insert("cfo".to_string(), TagValue::F64(meta.cfo_hz));
                out.add_tag(out.offset() + out.produced() as u64, FRAME, TagValue::Dict(d));
            }
            let m = a.ltf_start as i64;
            let w: Vec<Complex32> = (s..s + FFT_SIZE)
                .map(|r| f.buf[r - f.base] * fine_rotation(a.fine_cfo_hz, self.sample_rate, r as i64 - m))
                .collect();
            out.push(&w);
            f.next_window += 1;
            let next = (a.ltf_start as i64 + window_offset(f.next_window)) as usize;
            let stale = (next - f.base).min(f.buf.len());
            if stale >= 8192 {
                f.buf.drain(..stale);
                f.base += stale;
            }
        }
        if f.closed {
            self.frame = None;
        }
        true
    }
}

impl Block for AlignBlock {
    fn input_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Complex32]
    }

    fn output_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Complex32]
    }

    fn min_output_space(&self, _port: usize) -> usize {
        FFT_SIZE
    }

    fn work(&mut self, io: &mut WorkIo<'_>) -> Result<WorkStatus, BlockError> {
        let (input, out) = (&mut io.inputs[0], &mut io.outputs[0]);
        let x = input.slice::<Complex32>();
        let items = input.items();
        let base = input.offset();
        let starts: Vec<&Tag> = input.tags().iter().filter(|t| t.key == FRAME_START).collect();
        let mut pos = 0;
        loop {
            if !self.emit(out) {
                break;
            }
            let abs = base + pos as u64;
            let current = self.frame.as_ref().map(|f| f.trigger.index);
            let next = starts
                .iter()
                .find(|t| t.offset >= abs && current.is_none_or(|c| t.offset > c));
            match &mut self.frame {
                None => match next {
                    Some(t) => {
                        pos = (t.offset - base) as usize;
                        self.frame = Some(FrameBuf::new(Trigger {
                            index: t.offset,
                            cfo_hz: t.value.as_f64().unwrap_or(0.0),
                        }));
                    }
                    None => {
                        pos = items;
                        break;
                    }
                },
                Some(f) => {
                    let end = next.map_or(items, |t| (t.offset - base) as usize);
                    if pos < end {
                        f.ingest(&x[pos..end], self.sample_rate);
                        pos = end;
                    }
                    if next.is_some() || (input.is_eos() && pos == items) {
                        f.close();
                    } else {
                        // Out of input: emit what is ready and wait.
                        self.emit(out);
                        break;
                    }
                }
            }
        }
        input.consume(pos);
        Ok(WorkStatus::Ok)
    }
}

/// Channel estimation and equalization per frame: 64-point spectra in,
/// 48 data carriers out from the SIGNAL symbol on. The `frame` tag moves to
/// the SIGNAL output.
pub struct EqualizerBlock {
    frame: Option<(FrameEqualizer, Option<TagValue>)>,
}

impl EqualizerBlock {
    pub fn new() -> Self {
        Self { frame: None }
    }
}

impl Default for EqualizerBlock {
    fn default() -> Self {
        Self::new()
    }
}

impl Block for EqualizerBlock {
    fn input_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::ComplexVector(FFT_SIZE)]
    }

    fn output_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::ComplexVector(N_DATA_CARRIERS)]
    }

    fn work(&mut self, io: &mut WorkIo<'_>) -> Result<WorkStatus, BlockError> {
        let (input, out) = (&mut io.inputs[0], &mut io.outputs[0]);
        let n = input.items().min(out.space());
        let x = input.slice::<Complex32>();
        let base = input.offset();
        for v in 0..n {
            let abs = base + v as u64;
            if let Some(t) = input.tags().iter().find(|t| t.offset == abs && t.key == FRAME) {
                self.frame = Some((FrameEqualizer::new(), Some(t.value.clone())));
            }
            if let Some((eq, tag)) = &mut self.frame {
                if let Some(d) = eq.push(&x[v * FFT_SIZE..(v + 1) * FFT_SIZE]) {
                    if let Some(tag) = tag.take() {
                        out.add_tag(out.offset() + out.produced() as u64, FRAME, tag);
                    }
                    out.push(&d);
                }
            }
        }
        input.consume(n);
        Ok(WorkStatus::Ok)
    }
}

/// SIGNAL and DATA decoding. Emits each PSDU as bytes; the first byte
/// carries a `frame` tag `{start, cfo, mcs, fcs_ok, len}`.
pub struct DecoderBlock {
    frame: Option<(FrameDecoder, FrameMeta)>,
    pending: Vec<u8>,
    sent: usize,
    pending_tag: Option<TagValue>,
}

impl DecoderBlock {
    pub fn new() -> Self {
        Self {
            frame: None,
            pending: Vec::new(),
            sent: 0,
            pending_tag: None,
        }
    }

    fn flush(&mut self, out: &mut crate::runtime::OutputWindow<'_>) -> bool {
        let n = (self.pending.len() - self.sent).min(out.remaining());
        if n > 0 {
            if let Some(tag) = self.pending_tag.take() {
                out.add_tag(out.offset() + out.produced() as u64, FRAME, tag);
            }
            out.push(&self.pending[self.sent..self.sent + n]);
            self.sent += n;
        }
        if self.sent == self.pending.len() {
            self.pending.clear();
            self.sent = 0;
            true
        } else {
            false
        }
    }
}

impl Default for DecoderBlock {
    fn default() -> Self {
        Self::new()
    }
}

fn meta_from(tag: &TagValue) -> FrameMeta {
    FrameMeta {
        start: tag.get("start").and_then(TagValue::as_u64).unwrap_or(0),
        cfo_hz: tag.get("cfo").and_then(TagValue::as_f64).unwrap_or(0.0),
    }
}

impl Block for DecoderBlock {
    fn input_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::ComplexVector(N_DATA_CARRIERS)]
    }

    fn output_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Byte]
    }

    fn work(&mut self, io: &mut WorkIo<'_>) -> Result<WorkStatus, BlockError> {
        let (input, out) = (&mut io.inputs[0], &mut io.outputs[0]);
        if !self.flush(out) {
            return Ok(WorkStatus::Ok);
        }
        let x = input.slice::<Complex32>();
        let base = input.offset();
        let mut v = 0;
        while v < input.items() {
            let abs = base + v as u64;
            if let Some(t) = input.tags().iter().find(|t| t.offset == abs && t.key == FRAME) {
                self.frame = Some((FrameDecoder::new(), meta_from(&t.value)));
            }
            let sym = &x[v * N_DATA_CARRIERS..(v + 1) * N_DATA_CARRIERS];
            v += 1;
            let Some((dec, meta)) = &mut self.frame else {
                continue;
            };
            if let DecodeStep::Done(f) = dec.push(sym) {
                let mut d = BTreeMap::new();
                d.insert("start".to_string(), TagValue::U64(meta.start));
                d.insert("cfo".to_string(), TagValue::F64(meta.cfo_hz));
                d.insert("mcs".to_string(), TagValue::Str(f.mcs.name().to_string()));
                d.insert("fcs_ok".to_string(), TagValue::Bool(f.fcs_ok));
                d.insert("len".to_string(), TagValue::U64(f.psdu.len() as u64));
                self.pending_tag = Some(TagValue::Dict(d));
                self.pending = f.psdu;
                self.frame = None;
                if !self.flush(out) {
                    break;
                }
            }
        }
        input.consume(v);
        Ok(WorkStatus::Ok)
    }
}

/// Shared view of the events collected by a [`PacketSink`].
#[derive(Debug, Clone, Default)]
pub struct EventHandle {
    events: Arc<Mutex<Vec<FrameEvent>>>,
}

impl EventHandle {
    pub fn events(&self) -> Vec<FrameEvent> {
        self.events.lock().unwrap_or_else(|e| e.into_inner()).clone()
    }
}

/// Reassembles tagged PSDU bytes into [`FrameEvent`]s.
pub struct PacketSink {
    current: Option<(FrameEvent, usize)>,
    handle: EventHandle,
}

impl PacketSink {
    pub fn new() -> (Self, EventHandle) {
        let handle = EventHandle::default();
        (
            Self {
                current: None,
                handle: handle.clone(),
            },
            handle,
        )
    }
}

fn event_from(tag: &TagValue) -> Option<(FrameEvent, usize)> {
    let len = tag.get("len")?.as_u64()? as usize;
    let mcs: Mcs = match tag.get("mcs")? {
        TagValue::Str(s) => s.parse().ok()?,
        _ => return None,
    };
    let fcs_ok = matches!(tag.get("fcs_ok")?, TagValue::Bool(true));
    let meta = meta_from(tag);
    Some((
        FrameEvent {
            start: meta.start,
            mcs,
            length: len,
            fcs_ok,
            cfo_applied: meta.cfo_hz,
            psdu: Vec::with_capacity(len),
        },
        len,
    ))
}

impl Block for PacketSink {
    fn input_kinds(&self) -> Vec<ItemKind> {
        vec![ItemKind::Byte]
    }

    fn output_kinds(&self) -> Vec<ItemKind> {
        Vec::new()
    }

    fn work(&mut self, io: &mut WorkIo<'_>) -> Result<WorkStatus, BlockError> {
        let input = &mut io.inputs[0];
        let x = input.slice::<u8>();
        let base = input.offset();
        for (i, &b) in x.iter().enumerate() {
            let abs = base + i as u64;
            if let Some(t) = input.tags().iter().find(|t| t.offset == abs && t.key == FRAME) {
                self.current = event_from(&t.value);
            }
            if let Some((ev, len)) = &mut self.current {
                ev.psdu.push(b);
                if ev.psdu.len() == *len {
                    let (ev, _) = self.current.take().expect("frame in progress");
                    self.handle
                        .events
                        .lock()
                        .unwrap_or_else(|e| e.into_inner())
                        .push(ev);
                }
            }
        }
        input.consume(x.len());
        Ok(WorkStatus::Ok)
    }
}

/// A complete receiver graph and the handle to its decoded events.
pub struct ReceiverGraph {
    pub graph: FlowGraph,
    pub events: EventHandle,
}

/// Builds `source -> detect -> cfo -> align -> s2v -> fft -> equalizer ->
/// decoder -> sink`. The source must produce `Complex32` samples.
pub fn build_receiver(
    source: Box<dyn Block>,
    params: &OfdmParams,
    backend: Box<dyn FftBackend>,
) -> Result<ReceiverGraph, WifiError> {
    let g = |e: crate::runtime::GraphError| WifiError::Graph(e.to_string());
    let mut graph = FlowGraph::new();
    let fft = FftBlock::new(backend, FFT_SIZE, Direction::Forward)
        .map_err(|e| WifiError::Backend(e.to_string()))?;
    let (sink, events) = PacketSink::new();
    let ids = [
        graph.add_boxed("src", source).map_err(g)?,
        graph.add_block("detect", DetectorBlock::new(params)).map_err(g)?,
        graph.add_block("cfo", CfoBlock::new(params)).map_err(g)?,
        graph.add_block("align", AlignBlock::new(params)).map_err(g)?,
        graph
            .add_block("s2v", StreamToVector::new(FFT_SIZE).map_err(|e| WifiError::Graph(e.to_string()))?)
            .map_err(g)?,
        graph.add_block("fft", fft).map_err(g)?,
        graph.add_block("equalizer", EqualizerBlock::new()).map_err(g)?,
        graph.add_block("decoder", DecoderBlock::new()).map_err(g)?,
        graph.add_block("sink", sink).map_err(g)?,
    ];
    graph.chain(&ids).map_err(g)?;
    Ok(ReceiverGraph { graph, events })
}

impl ReceiverGraph {
    /// Receiver fed from an in-memory capture.
    pub fn from_samples(
        samples: Vec<Complex32>,
        params: &OfdmParams,
        backend: Box<dyn FftBackend>,
    ) -> Result<Self, WifiError> {
        build_receiver(Box::new(VectorSource::new(samples)), params, backend)
    }
}
