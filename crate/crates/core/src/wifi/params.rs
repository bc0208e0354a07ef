//! OFDM numerology and modulation/coding schemes.

use num_complex::Complex32;
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

pub const FFT_SIZE: usize = 64;
pub const CP_LEN: usize = 16;
pub const SYMBOL_LEN: usize = FFT_SIZE + CP_LEN;
pub const STF_LEN: usize = 160;
pub const LTF_LEN: usize = 160;
pub const PREAMBLE_LEN: usize = STF_LEN + LTF_LEN;
pub const N_DATA_CARRIERS: usize = 48;
pub const SERVICE_BITS: usize = 16;
pub const TAIL_BITS: usize = 6;
pub const MAX_PSDU: usize = 4095;

/// Pilot subcarriers and their base values before polarity.
pub const PILOT_CARRIERS: [i32; 4] = [-21, -7, 7, 21];
pub const PILOT_VALUES: [f32; 4] = [1.0, 1.0, 1.0, -1.0];

/// Long training symbol on carriers -26..=26.
pub const LTF_SEQ: [i8; 53] = [
    1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 1, 1, -1, -1, 1, 1, -1, 1, -1, 1, 1, 1, 1, 0, 1,
    -1, -1, 1, 1, -1, 1, -1, 1, -1, -1, -1, -1, -1, 1, 1, -1, -1, 1, -1, 1, -1, 1, 1, 1, 1,
];

/// Short training symbol: (carrier, sign of 1+j), scaled by sqrt(13/6).
pub const STF_CARRIERS: [(i32, f32); 12] = [
    (-24, 1.0),
    (-20, -1.0),
    (-16, 1.0),
    (-12, -1.0),
    (-8, -1.0),
    (-4, 1.0),
    (4, -1.0),
    (8, -1.0),
    (12, 1.0),
    (16, 1.0),
    (20, 1.0),
    (24, 1.0),
];

/// FFT bin of a signed carrier index.
pub fn bin(k: i32) -> usize {
    k.rem_euclid(FFT_SIZE as i32) as usize
}

/// Data carriers in transmission order (ascending from -26).
pub fn data_carriers() -> [i32; N_DATA_CARRIERS] {
    let mut out = [0; N_DATA_CARRIERS];
    let mut i = 0;
    for k in -26..=26 {
        if k != 0 && !PILOT_CARRIERS.contains(&k) {
            out[i] = k;
            i += 1;
        }
    }
    out
}

/// Frequency-domain LTF reference, indexed by FFT bin.
pub fn ltf_freq() -> [Complex32; FFT_SIZE] {
    let mut x = [Complex32::new(0.0, 0.0); FFT_SIZE];
    for (i, &v) in LTF_SEQ.iter().enumerate() {
        x[bin(i as i32 - 26)] = Complex32::new(v as f32, 0.0);
    }
    x
}

/// Frequency-domain STF, indexed by FFT bin.
pub fn stf_freq() -> [Complex32; FFT_SIZE] {
    let s = (13.0f32 / 6.0).sqrt();
    let mut x = [Complex32::new(0.0, 0.0); FFT_SIZE];
    for &(k, sign) in &STF_CARRIERS {
        x[bin(k)] = Complex32::new(sign * s, sign * s);
    }
    x
}

/// Pilot polarity p_0..p_126: the all-ones scrambler output, 0 -> +1, 1 -> -1.
pub fn pilot_polarity() -> [f32; 127] {
    let seq = super::coding::scrambler_sequence(0x7f, 127);
    let mut p = [0.0; 127];
    for (i, b) in seq.iter().enumerate() {
        p[i] = if *b == 0 { 1.0 } else { -1.0 };
    }
    p
}

/// Channel numerology. Only the sample rate varies (10 MHz for 802.11p,
/// 20 MHz for full-clocked operation); the carrier plan is fixed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OfdmParams {
    pub sample_rate: f64,
}

impl Default for OfdmParams {
    fn default() -> Self {
        Self { sample_rate: 10e6 }
    }
}

impl OfdmParams {
    pub fn full_clocked() -> Self {
        Self { sample_rate: 20e6 }
    }

    pub fn subcarrier_spacing(&self) -> f64 {
        self.sample_rate / FFT_SIZE as f64
    }

    pub fn fft_size(&self) -> usize {
        FFT_SIZE
    }

    pub fn cp_len(&self) -> usize {
        CP_LEN
    }

    pub fn data_carriers(&self) -> [i32; N_DATA_CARRIERS] {
        data_carriers()
    }

    pub fn pilot_carriers(&self) -> [i32; 4] {
        PILOT_CARRIERS
    }

    /// Carriers carrying nothing: DC and the guard bands.
    pub fn null_carriers(&self) -> Vec<i32> {
        (-32i32..32).filter(|k| *k == 0 || k.abs() > 26).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Modulation {
    Bpsk,
    Qpsk,
    Qam16,
    Qam64,
}

impl Modulation {
    /// Coded bits per subcarrier.
    pub fn bits_per_symbol(self) -> usize {
        match self {
            Modulation::Bpsk => 1,
            Modulation::Qpsk => 2,
            Modulation::Qam16 => 4,
            Modulation::Qam64 => 6,
        }
    }

    pub const ALL: [Modulation; 4] = [
        Modulation::Bpsk,
        Modulation::Qpsk,
        Modulation::Qam16,
        Modulation::Qam64,
    ];
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum CodeRate {
    Half,
    TwoThirds,
    ThreeQuarters,
}

impl CodeRate {
    /// Mother-code (rate 1/2) output bits kept, one period at a time.
    pub fn puncture_pattern(self) -> &'static [bool] {
        match self {
            CodeRate::Half => &[true, true],
            CodeRate::TwoThirds => &[true, true, true, false],
            CodeRate::ThreeQuarters => &[true, true, true, false, false, true],
        }
    }

    pub const ALL: [CodeRate; 3] = [CodeRate::Half, CodeRate::TwoThirds, CodeRate::ThreeQuarters];
}

/// The eight rate combinations of the OFDM PHY.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Mcs {
    #[serde(rename = "bpsk-1/2")]
    Bpsk12,
    #[serde(rename = "bpsk-3/4")]
    Bpsk34,
    #[serde(rename = "qpsk-1/2")]
    Qpsk12,
    #[serde(rename = "qpsk-3/4")]
    Qpsk34,
    #[serde(rename = "qam16-1/2")]
    Qam16_12,
    #[serde(rename = "qam16-3/4")]
    Qam16_34,
    #[serde(rename = "qam64-2/3")]
    Qam64_23,
    #[serde(rename = "qam64-3/4")]
    Qam64_34,
}

impl Mcs {
    pub const ALL: [Mcs; 8] = [
        Mcs::Bpsk12,
        Mcs::Bpsk34,
        Mcs::Qpsk12,
        Mcs::Qpsk34,
        Mcs::Qam16_12,
        Mcs::Qam16_34,
        Mcs::Qam64_23,
        Mcs::Qam64_34,
    ];

    pub fn modulation(self) -> Modulation {
        match self {
            Mcs::Bpsk12 | Mcs::Bpsk34 => Modulation::Bpsk,
            Mcs::Qpsk12 | Mcs::Qpsk34 => Modulation::Qpsk,
            Mcs::Qam16_12 | Mcs::Qam16_34 => Modulation::Qam16,
            Mcs::Qam64_23 | Mcs::Qam64_34 => Modulation::Qam64,
        }
    }

    pub fn code_rate(self) -> CodeRate {
        match self {
            Mcs::Bpsk12 | Mcs::Qpsk12 | Mcs::Qam16_12 => CodeRate::Half,
            Mcs::Qam64_23 => CodeRate::TwoThirds,
            _ => CodeRate::ThreeQuarters,
        }
    }

    /// Coded bits per subcarrier.
    pub fn n_bpsc(self) -> usize {
        self.modulation().bits_per_symbol()
    }

    /// Coded bits per OFDM symbol.
    pub fn n_cbps(self) -> usize {
        N_DATA_CARRIERS * self.n_bpsc()
    }

    /// Data bits per OFDM symbol.
    pub fn n_dbps(self) -> usize {
        match self.code_rate() {
            CodeRate::Half => self.n_cbps() / 2,
            CodeRate::TwoThirds => self.n_cbps() * 2 / 3,
            CodeRate::ThreeQuarters => self.n_cbps() * 3 / 4,
        }
    }

    /// Rate bits R1..R4 in transmission order.
    pub fn rate_bits(self) -> [u8; 4] {
        match self {
            Mcs::Bpsk12 => [1, 1, 0, 1],
            Mcs::Bpsk34 => [1, 1, 1, 1],
            Mcs::Qpsk12 => [0, 1, 0, 1],
            Mcs::Qpsk34 => [0, 1, 1, 1],
            Mcs::Qam16_12 => [1, 0, 0, 1],
            Mcs::Qam16_34 => [1, 0, 1, 1],
            Mcs::Qam64_23 => [0, 0, 0, 1],
            Mcs::Qam64_34 => [0, 0, 1, 1],
        }
    }

    pub fn from_rate_bits(bits: [u8; 4]) -> Option<Mcs> {
        Mcs::ALL.into_iter().find(|m| m.rate_bits() == bits)
    }

    /// Data rate in Mb/s at the given sample rate.
    pub fn data_rate_mbps(self, params: &OfdmParams) -> f64 {
        let symbol_s = SYMBOL_LEN as f64 / params.sample_rate;
        self.n_dbps() as f64 / symbol_s / 1e6
    }

    /// OFDM data symbols needed for a PSDU of `len` bytes.
    pub fn n_symbols(self, len: usize) -> usize {
        (SERVICE_BITS + 8 * len + TAIL_BITS).div_ceil(self.n_dbps())
    }

    pub fn name(self) -> &'static str {
        match self {
            Mcs::Bpsk12 => "bpsk-1/2",
            Mcs::Bpsk34 => "bpsk-3/4",
            Mcs::Qpsk12 => "qpsk-1/2",
            Mcs::Qpsk34 => "qpsk-3/4",
            Mcs::Qam16_12 => "qam16-1/2",
            Mcs::Qam16_34 => "qam16-3/4",
            Mcs::Qam64_23 => "qam64-2/3",
            Mcs::Qam64_34 => "qam64-3/4",
        }
    }
}

impl fmt::Display for Mcs {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Mcs {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let lower = s.to_ascii_lowercase();
        Mcs::ALL
            .into_iter()
            .find(|m| m.name() == lower)
            .ok_or_else(|| {
                let names: Vec<_> = Mcs::ALL.iter().map(|m| m.name()).collect();
                format!("unknown MCS '{s}' (expected one of {})", names.join(", "))
            })
    }
}

/// Total frame length in samples.
pub fn frame_len(mcs: Mcs, psdu_len: usize) -> usize {
    PREAMBLE_LEN + SYMBOL_LEN * (1 + mcs.n_symbols(psdu_len))
}
