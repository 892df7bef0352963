//! On-disk formats for state vectors and support spaces.
//!
//! Both formats are a single JSON header line terminated by `\n`, followed
//! by raw little-endian f64 pairs (real, imaginary) for every amplitude.
//! State amplitudes appear in index order; support bases appear column by
//! column. The header carries everything needed to size the payload, so a
//! truncated file is always detected.

use crate::linalg::C64;
use crate::peps::{StateVector, SupportSpace};
use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::io::{Read, Write};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum SerializeError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("header: {0}")]
    Header(#[from] serde_json::Error),
    #[error("expected a {expected} file, found {found}")]
    WrongKind { expected: String, found: String },
    #[error("payload holds {got} amplitudes, header promises {expected}")]
    Truncated { expected: usize, got: usize },
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct StateHeader {
    kind: String,
    site_order: Vec<usize>,
    dims: Vec<usize>,
    norm: f64,
}

#[derive(Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
struct SupportHeader {
    kind: String,
    ambient: usize,
    rank: usize,
    tol: f64,
}

const STATE_KIND: &str = "state-vector";
const SUPPORT_KIND: &str = "support-space";

fn write_amplitudes<W: Write>(w: &mut W, amps: &[C64]) -> std::io::Result<()> {
    let mut buf = Vec::with_capacity(amps.len() * 16);
    for a in amps {
        buf.extend_from_slice(&a.re.to_le_bytes());
        buf.extend_from_slice(&a.im.to_le_bytes());
    }
    w.write_all(&buf)
}

fn read_amplitudes<R: Read>(r: &mut R, expected: usize) -> Result<Vec<C64>, SerializeError> {
    let mut bytes = Vec::new();
    r.read_to_end(&mut bytes)?;
    let got = bytes.len() / 16;
    if got != expected || bytes.len() % 16 != 0 {
        return Err(SerializeError::Truncated { expected, got });
    }
    let mut out = Vec::with_capacity(expected);
    for chunk in bytes.chunks_exact(16) {
        let re = f64::from_le_bytes(chunk[..8].try_into().unwrap());
        let im = f64::from_le_bytes(chunk[8..].try_into().unwrap());
        out.push(C64::new(re, im));
    }
    Ok(out)
}

fn read_header_line<R: Read>(r: &mut R) -> Result<String, SerializeError> {
    let mut line = Vec::new();
    let mut byte = [0u8; 1];
    loop {
        r.read_exact(&mut byte)?;
        if byte[0] == b'\n' {
            break;
        }
        line.push(byte[0]);
    }
    String::from_utf8(line)
        .map_err(|e| SerializeError::Io(std::io::Error::new(std::io::ErrorKind::InvalidData, e)))
}

pub fn write_state<W: Write>(w: &mut W, state: &StateVector) -> Result<(), SerializeError> {
    let header = StateHeader {
        kind: STATE_KIND.to_string(),
        site_order: state.site_order.clone(),
        dims: state.dims.clone(),
        norm: state.norm,
    };
    serde_json::to_writer(&mut *w, &header)?;
    w.write_all(b"\n")?;
    write_amplitudes(w, &state.amplitudes)?;
    Ok(())
}

pub fn read_state<R: Read>(r: &mut R) -> Result<StateVector, SerializeError> {
    let header: StateHeader = serde_json::from_str(&read_header_line(r)?)?;
    if header.kind != STATE_KIND {
        return Err(SerializeError::WrongKind {
            expected: STATE_KIND.to_string(),
            found: header.kind,
        });
    }
    let total: usize = header.dims.iter().product();
    let amplitudes = read_amplitudes(r, total)?;
    Ok(StateVector {
        site_order: header.site_order,
        dims: header.dims,
        amplitudes,
        norm: header.norm,
    })
}

pub fn write_support<W: Write>(w: &mut W, space: &SupportSpace) -> Result<(), SerializeError> {
    let header = SupportHeader {
        kind: SUPPORT_KIND.to_string(),
        ambient: space.ambient,
        rank: space.rank,
        tol: space.tol,
    };
    serde_json::to_writer(&mut *w, &header)?;
    w.write_all(b"\n")?;
    write_amplitudes(w, space.basis.as_slice())?;
    Ok(())
}

pub fn read_support<R: Read>(r: &mut R) -> Result<SupportSpace, SerializeError> {
    let header: SupportHeader = serde_json::from_str(&read_header_line(r)?)?;
    if header.kind != SUPPORT_KIND {
        return Err(SerializeError::WrongKind {
            expected: SUPPORT_KIND.to_string(),
            found: header.kind,
        });
    }
    let amps = read_amplitudes(r, header.ambient * header.rank)?;
    let basis = DMatrix::from_column_slice(header.ambient, header.rank, &amps);
    Ok(SupportSpace {
        ambient: header.ambient,
        basis,
        rank: header.rank,
        tol: header.tol,
    })
}
