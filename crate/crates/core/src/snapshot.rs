//! Binary field snapshots and checkpoints.
//!
//! Layout: magic `V2DF`, then `version`, `N` and `count` as little-endian
//! u32, then `count` fields, each an (N+1)×(N+1) box of little-endian f64
//! (re, im) pairs over wavenumbers k₁, l₁ ∈ [−N/2, N/2] in row-major order
//! (k₁ slow), stored at offset N/2. A coefficient on a Nyquist line appears
//! twice in the box (at ±N/2); it is written as equal halves at both
//! positions and summed on read. Checkpoints are snapshots with count 2
//! (older, newer) followed by the level as a little-endian u64.

use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::Path;

use rustfft::num_complex::Complex64;

use crate::error::{Error, Result};
use crate::field::SpectralField;
use crate::grid::Grid;
use crate::norms::StatePair;

pub const MAGIC: &[u8; 4] = b"V2DF";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 16;

fn box_entries(n: usize) -> usize {
    (n + 1) * (n + 1)
}

fn encode_field(field: &SpectralField, out: &mut Vec<u8>) {
    let g = field.grid();
    let n = g.n();
    let half = (n / 2) as i64;
    for k in -half..=half {
        let kn = k.abs() == half;
        for l in -half..=half {
            let ln = l.abs() == half;
            let mut c = field.coeff(k, l);
            if kn {
                c *= 0.5;
            }
            if ln {
                c *= 0.5;
            }
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
    }
}

fn decode_field(grid: Grid, bytes: &[u8]) -> SpectralField {
    let n = grid.n();
    let side = n + 1;
    let half = n / 2;
    let entry = |bk: usize, bl: usize| -> Complex64 {
        let off = 16 * (bk * side + bl);
        let re = f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap());
        let im = f64::from_le_bytes(bytes[off + 8..off + 16].try_into().unwrap());
        Complex64::new(re, im)
    };
    let mut coeffs = vec![Complex64::default(); grid.len()];
    for i in 0..n {
        let k = grid.wavenumber(i);
        let bk = (k + half as i64) as usize;
        let rows: &[usize] = if bk == n { &[0, n] } else { &[bk] };
        for j in 0..n {
            let l = grid.wavenumber(j);
            let bl = (l + half as i64) as usize;
            let cols: &[usize] = if bl == n { &[0, n] } else { &[bl] };
            let c = match (rows.len(), cols.len()) {
                (1, 1) => entry(rows[0], cols[0]),
                (2, 1) => entry(rows[0], cols[0]) + entry(rows[1], cols[0]),
                (1, 2) => entry(rows[0], cols[0]) + entry(rows[0], cols[1]),
                _ => (entry(0, 0) + entry(0, n)) + (entry(n, 0) + entry(n, n)),
            };
            coeffs[i * n + j] = c;
        }
    }
    SpectralField::from_coeffs(grid, coeffs).expect("length matches grid")
}

fn header(n: usize, count: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + count * 16 * box_entries(n));
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(n as u32).to_le_bytes());
    out.extend_from_slice(&(count as u32).to_le_bytes());
    out
}

/// Serializes fields sharing one grid.
pub fn encode_snapshot(fields: &[SpectralField]) -> Result<Vec<u8>> {
    let Some(first) = fields.first() else {
        return Err(Error::Degenerate("snapshot needs at least one field".into()));
    };
    for f in &fields[1..] {
        first.check_same_grid(f)?;
    }
    let mut out = header(first.grid().n(), fields.len());
    for f in fields {
        encode_field(f, &mut out);
    }
    Ok(out)
}

struct Parsed {
    grid: Grid,
    count: usize,
    body_end: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Parsed> {
    if bytes.len() < HEADER_LEN {
        return Err(Error::Corrupt(format!("{} bytes is shorter than the header", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Corrupt("bad magic".into()));
    }
    let word = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let version = word(4);
    if version != VERSION {
        return Err(Error::Corrupt(format!("unsupported version {version}, expected {VERSION}")));
    }
    let n = word(8) as usize;
    let grid = Grid::new(n).map_err(|_| Error::Corrupt(format!("invalid grid size {n}")))?;
    let count = word(12) as usize;
    let body_end = HEADER_LEN + count * 16 * box_entries(n);
    if bytes.len() < body_end {
        return Err(Error::Corrupt(format!(
            "truncated: {} bytes, expected at least {body_end}",
            bytes.len()
        )));
    }
    Ok(Parsed { grid, count, body_end })
}

fn decode_body(p: &Parsed, bytes: &[u8]) -> Vec<SpectralField> {
    let stride = 16 * box_entries(p.grid.n());
    (0..p.count)
        .map(|c| decode_field(p.grid, &bytes[HEADER_LEN + c * stride..HEADER_LEN + (c + 1) * stride]))
        .collect()
}

pub fn decode_snapshot(bytes: &[u8]) -> Result<Vec<SpectralField>> {
    let p = parse_header(bytes)?;
    if bytes.len() != p.body_end {
        return Err(Error::Corrupt(format!(
            "{} trailing bytes after {} fields",
            bytes.len() - p.body_end,
            p.count
        )));
    }
    Ok(decode_body(&p, bytes))
}

fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    {
        let mut w = BufWriter::new(File::create(&tmp)?);
        w.write_all(bytes)?;
        w.into_inner().map_err(|e| e.into_error())?.sync_all()?;
    }
    std::fs::rename(&tmp, path)?;
    Ok(())
}

fn read_all(path: &Path) -> Result<Vec<u8>> {
    let mut bytes = Vec::new();
    File::open(path)?.read_to_end(&mut bytes)?;
    Ok(bytes)
}

pub fn write_snapshot(path: &Path, fields: &[SpectralField]) -> Result<()> {
    write_atomic(path, &encode_snapshot(fields)?)
}

pub fn read_snapshot(path: &Path) -> Result<Vec<SpectralField>> {
    decode_snapshot(&read_all(path)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub pair: StatePair,
    pub step: u64,
}

pub fn encode_checkpoint(pair: &StatePair, step: u64) -> Result<Vec<u8>> {
    let mut out = encode_snapshot(&[pair.older.clone(), pair.newer.clone()])?;
    out.extend_from_slice(&step.to_le_bytes());
    Ok(out)
}

/// Decodes a checkpoint; with `expected` set, a different grid is an error.
pub fn decode_checkpoint(bytes: &[u8], expected: Option<Grid>) -> Result<Checkpoint> {
    let p = parse_header(bytes)?;
    if p.count != 2 {
        return Err(Error::Corrupt(format!("checkpoint holds {} fields, expected 2", p.count)));
    }
    if let Some(g) = expected {
        if g != p.grid {
            return Err(Error::GridMismatch {
                left: g.n(),
                right: p.grid.n(),
            });
        }
    }
    if bytes.len() != p.body_end + 8 {
        return Err(Error::Corrupt(format!(
            "checkpoint is {} bytes, expected {}",
            bytes.len(),
            p.body_end + 8
        )));
    }
    let step = u64::from_le_bytes(bytes[p.body_end..].try_into().unwrap());
    let mut fields = decode_body(&p, bytes);
    let newer = fields.pop().unwrap();
    let older = fields.pop().unwrap();
    let pair = StatePair::new(older, newer).map_err(|e| Error::Corrupt(e.to_string()))?;
    Ok(Checkpoint { pair, step })
}

pub fn checkpoint_write(path: &Path, pair: &StatePair, step: u64) -> Result<()> {
    write_atomic(path, &encode_checkpoint(pair, step)?)
}

pub fn checkpoint_read(path: &Path, expected: Option<Grid>) -> Result<Checkpoint> {
    decode_checkpoint(&read_all(path)?, expected)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::init::random_initial_field;

    fn full_spectrum(n: usize, seed: u64) -> SpectralField {
        // Fill every mode, Nyquist lines included, with a Hermitian field.
        let g = Grid::new(n).unwrap();
        let values: Vec<f64> = (0..g.len())
            .map(|i| ((i as f64 + 0.5) * (seed as f64 + 1.3)).sin())
            .collect();
        let mut f = crate::field::forward_transform(&values, g).unwrap();
        f.zero_mean();
        f
    }

    #[test]
    fn roundtrip_is_bitwise() {
        for n in [4, 8, 16] {
            let a = full_spectrum(n, 1);
            let b = full_spectrum(n, 2);
            let bytes = encode_snapshot(&[a.clone(), b.clone()]).unwrap();
            assert_eq!(bytes.len(), 16 + 2 * 16 * (n + 1) * (n + 1));
            let back = decode_snapshot(&bytes).unwrap();
            assert_eq!(back, vec![a, b]);
        }
    }

    #[test]
    fn box_is_symmetric_on_nyquist_lines() {
        let a = full_spectrum(8, 3);
        let bytes = encode_snapshot(&[a.clone()]).unwrap();
        let re = |bk: usize, bl: usize| {
            let off = 16 + 16 * (bk * 9 + bl);
            f64::from_le_bytes(bytes[off..off + 8].try_into().unwrap())
        };
        assert_eq!(re(0, 3), re(8, 3));
        assert_eq!(re(0, 3) * 2.0, a.coeff(4, -1).re);
    }

    #[test]
    fn checkpoint_roundtrip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("c.v2dc");
        let pair = StatePair::new(
            random_initial_field(1, 16, -1.0, 1.0).unwrap(),
            random_initial_field(2, 16, -1.0, 1.0).unwrap(),
        )
        .unwrap();
        checkpoint_write(&path, &pair, 500).unwrap();
        let c = checkpoint_read(&path, Some(Grid::new(16).unwrap())).unwrap();
        assert_eq!(c.pair, pair);
        assert_eq!(c.step, 500);

        assert!(matches!(
            checkpoint_read(&path, Some(Grid::new(32).unwrap())),
            Err(Error::GridMismatch { .. })
        ));

        let bytes = read_all(&path).unwrap();
        for cut in [0, 10, 16, bytes.len() / 2, bytes.len() - 1] {
            assert!(matches!(decode_checkpoint(&bytes[..cut], None), Err(Error::Corrupt(_))));
        }
        let mut bad = bytes.clone();
        bad[4] = 9;
        assert!(matches!(decode_checkpoint(&bad, None), Err(Error::Corrupt(_))));
    }
}
