//! IEEE 802.11p OFDM physical layer: reference transmitter, receiver
//! functions, streaming receiver blocks and a channel simulator.
//!
//! All timing follows the 10 MHz channel (64-point FFT, 16-sample guard).

mod blocks;
mod channel;
pub mod coding;
mod equalize;
pub mod mapping;
mod params;
mod rx;
mod signal;
mod sync;
mod tx;

pub use blocks::{
    build_receiver, AlignBlock, CfoBlock, DecoderBlock, DetectorBlock, EqualizerBlock, EventHandle,
    PacketSink, ReceiverGraph,
};
pub use channel::{apply_channel, build_capture, ChannelConfig};
pub use equalize::{equalize, estimate_channel, ChannelEstimate, Equalized, MIN_GAIN};
pub use params::*;
pub use rx::{
    compute_per, decode_data, decode_segment, receive, receive_with, DecodeStep, DecodedFrame,
    FrameDecoder, FrameEqualizer, FrameEvent, FrameMeta, PerSummary,
};
pub use signal::{decode_signal, SignalError, SignalField};
pub use sync::{
    align_symbols, correct_cfo, detect_frames, detect_frames_with, window_offset, Alignment,
    CfoCorrector, Detector, DetectorConfig, Trigger, ALIGN_SEARCH, ALIGN_SPAN, ALIGN_THRESHOLD,
    WINDOW_BACKOFF,
};
pub use tx::{data_bits, encode_frame, ltf_period, ltf_time, ofdm_symbol, stf_time, symbol_freq};

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum WifiError {
    #[error("PSDU length {0} outside 1..=4095")]
    LengthOutOfRange(usize),
    #[error("length mismatch: expected {expected}, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("scrambler seed {0:#04x} outside 1..=127")]
    InvalidSeed(u8),
    #[error("{0} bytes cannot hold a frame check sequence")]
    FcsTooShort(usize),
    #[error("long training field not found")]
    AlignmentFailed,
    #[error("channel estimate has a null carrier")]
    DegenerateChannel,
    #[error("pilots carry no usable phase reference")]
    DegeneratePilots,
    #[error(transparent)]
    Signal(#[from] SignalError),
    #[error("FFT backend: {0}")]
    Backend(String),
    #[error("graph: {0}")]
    Graph(String),
}
