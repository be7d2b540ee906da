//! Capacitive front end: transducer chain, analog multiplexer and the ΣΔ
//! modulator, plus the packed bitstream file format.

mod modulator;
mod mux;

use std::io::{Read, Write};

pub use modulator::{
    charge_input, run_modulator, step, voltage_input, InputMode, Modulator, ModulatorConfig,
    ModulatorState, BENCH_NOISE_RMS,
};
pub use mux::{element_input_series, scan, MuxSchedule, ScanCapture, ScanSegment};

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"SDM1";
const HEADER_LEN: usize = 16;

/// Single-bit modulator output, one `±1` per modulator clock.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct BitStream {
    pub sample_rate: u64,
    pub bits: Vec<i8>,
}

impl BitStream {
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Packed binary form: `SDM1`, sample rate (u64 LE), bit count (u32 LE),
    /// then bits LSB-first within each byte (`1` ↔ `+1`).
    pub fn write_packed<W: Write>(&self, mut w: W) -> Result<()> {
        let count = u32::try_from(self.bits.len())
            .map_err(|_| Error::format("bitstream", "more than u32::MAX bits"))?;
        let mut header = [0u8; HEADER_LEN];
        header[..4].copy_from_slice(MAGIC);
        header[4..12].copy_from_slice(&self.sample_rate.to_le_bytes());
        header[12..16].copy_from_slice(&count.to_le_bytes());
        w.write_all(&header)?;
        let mut packed = vec![0u8; self.bits.len().div_ceil(8)];
        for (i, &b) in self.bits.iter().enumerate() {
            if b > 0 {
                packed[i / 8] |= 1 << (i % 8);
            }
        }
        w.write_all(&packed)?;
        Ok(())
    }

    pub fn read_packed<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; HEADER_LEN];
        r.read_exact(&mut header)?;
        if &header[..4] != MAGIC {
            return Err(Error::format("bitstream", "bad magic"));
        }
        let sample_rate = u64::from_le_bytes(header[4..12].try_into().expect("8 bytes"));
        let count = u32::from_le_bytes(header[12..16].try_into().expect("4 bytes")) as usize;
        let mut packed = vec![0u8; count.div_ceil(8)];
        r.read_exact(&mut packed)
            .map_err(|_| Error::format("bitstream", "truncated payload"))?;
        let bits = (0..count)
            .map(|i| {
                if packed[i / 8] >> (i % 8) & 1 == 1 {
                    1
                } else {
                    -1
                }
            })
            .collect();
        Ok(Self { sample_rate, bits })
    }

    /// Debug dump, `n,bit` with `bit` in {-1, 1}.
    pub fn write_csv<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "n,bit")?;
        for (n, b) in self.bits.iter().enumerate() {
            writeln!(w, "{n},{b}")?;
        }
        Ok(())
    }
}
