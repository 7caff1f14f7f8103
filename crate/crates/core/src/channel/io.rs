//! Binary replay format for channel realizations.
//!
//! Layout, all integers and floats little-endian:
//!
//! | bytes | content |
//! |---|---|
//! | 8 | magic `RISCHAN\0` |
//! | 4 | format version (`u32`, currently 1) |
//! | 16 | `n_tx`, `n_ris`, `n_users`, `n_rx` (`u32` each) |
//! | … | `G`, then `U_1..U_K`, then `D_1..D_K` |
//!
//! Every matrix is stored row-major as `(re, im)` pairs of `f64`.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use super::ChannelSet;
use crate::error::{Error, Result};
use crate::linalg::{CMat, C64};

pub const MAGIC: &[u8; 8] = b"RISCHAN\0";
pub const VERSION: u32 = 1;

fn put_matrix<W: Write>(out: &mut W, m: &CMat) -> Result<()> {
    for r in 0..m.nrows() {
        for c in 0..m.ncols() {
            let z = m[(r, c)];
            out.write_all(&z.re.to_le_bytes())?;
            out.write_all(&z.im.to_le_bytes())?;
        }
    }
    Ok(())
}

fn get_u32<R: Read>(inp: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    inp.read_exact(&mut b)?;
    Ok(u32::from_le_bytes(b))
}

fn get_f64<R: Read>(inp: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    inp.read_exact(&mut b)?;
    Ok(f64::from_le_bytes(b))
}

fn get_matrix<R: Read>(inp: &mut R, rows: usize, cols: usize) -> Result<CMat> {
    let mut m = CMat::zeros(rows, cols);
    for r in 0..rows {
        for c in 0..cols {
            let re = get_f64(inp)?;
            let im = get_f64(inp)?;
            m[(r, c)] = C64::new(re, im);
        }
    }
    Ok(m)
}

pub fn write_channel<W: Write>(out: &mut W, ch: &ChannelSet) -> Result<()> {
    out.write_all(MAGIC)?;
    out.write_all(&VERSION.to_le_bytes())?;
    for d in [ch.n_tx(), ch.n_ris(), ch.n_users(), ch.n_rx()] {
        let d = u32::try_from(d).map_err(|_| Error::Format(format!("dimension {d} exceeds u32")))?;
        out.write_all(&d.to_le_bytes())?;
    }
    put_matrix(out, &ch.bs_ris)?;
    for u in &ch.ris_user {
        put_matrix(out, u)?;
    }
    for d in &ch.direct {
        put_matrix(out, d)?;
    }
    Ok(())
}

pub fn read_channel<R: Read>(inp: &mut R) -> Result<ChannelSet> {
    let mut magic = [0u8; 8];
    inp.read_exact(&mut magic)?;
    if &magic != MAGIC {
        return Err(Error::Format("bad magic".into()));
    }
    let version = get_u32(inp)?;
    if version != VERSION {
        return Err(Error::Format(format!("unsupported version {version}")));
    }
    let n_tx = get_u32(inp)? as usize;
    let n_ris = get_u32(inp)? as usize;
    let n_users = get_u32(inp)? as usize;
    let n_rx = get_u32(inp)? as usize;
    let bs_ris = get_matrix(inp, n_ris, n_tx)?;
    let ris_user = (0..n_users)
        .map(|_| get_matrix(inp, n_rx, n_ris))
        .collect::<Result<_>>()?;
    let direct = (0..n_users)
        .map(|_| get_matrix(inp, n_rx, n_tx))
        .collect::<Result<_>>()?;
    Ok(ChannelSet {
        bs_ris,
        ris_user,
        direct,
    })
}

pub fn save(path: &Path, ch: &ChannelSet) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_channel(&mut out, ch)?;
    out.flush()?;
    Ok(())
}

pub fn load(path: &Path) -> Result<ChannelSet> {
    read_channel(&mut BufReader::new(File::open(path)?))
}
