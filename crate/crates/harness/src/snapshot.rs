//! Binary snapshots of velocity states.
//!
//! Layout, all integers and floats little-endian:
//!
//! ```text
//! "HSN1"  version:u32  nx:u32 ny:u32 nz:u32  field_count:u32
//! per field: name_len:u32 name:utf8 parity:u8 (re:f64 im:f64) * nx*ny*nz
//! time:f64  system_len:u32 system:utf8
//! crc32:u32   (over every preceding byte)
//! ```
//!
//! Coefficients are stored in the grid's storage order, `kx` slowest.
//! A grid with `nz = 1` is the horizontal grid of a 2D state.

use crate::error::{HarnessError, Result};
use hydrostat_core::{Grid, Parity, SpectralField, State64, System, VelocityState};
use num_complex::Complex;
use std::path::Path;

pub const MAGIC: &[u8; 4] = b"HSN1";
pub const VERSION: u32 = 1;
const FIELD_NAMES: [&str; 3] = ["v1", "v2", "w"];

pub fn encode(state: &State64) -> Vec<u8> {
    let g = state.grid();
    let mut out = Vec::with_capacity(64 + 3 * 16 * g.len());
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    for n in [g.nx(), g.ny(), g.nz()] {
        out.extend_from_slice(&(n as u32).to_le_bytes());
    }
    out.extend_from_slice(&3u32.to_le_bytes());
    for (name, f) in FIELD_NAMES.iter().zip(state.components()) {
        put_str(&mut out, name);
        out.push(f.parity().code());
        for c in f.coeffs() {
            out.extend_from_slice(&c.re.to_le_bytes());
            out.extend_from_slice(&c.im.to_le_bytes());
        }
    }
    out.extend_from_slice(&state.time.to_le_bytes());
    put_str(&mut out, state.system.name());
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    out
}

fn put_str(out: &mut Vec<u8>, s: &str) {
    out.extend_from_slice(&(s.len() as u32).to_le_bytes());
    out.extend_from_slice(s.as_bytes());
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn fail<T>(&self, offset: usize, msg: impl Into<String>) -> Result<T> {
        Err(HarnessError::Format { offset, msg: msg.into() })
    }

    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        match self.pos.checked_add(n).and_then(|end| self.bytes.get(self.pos..end)) {
            Some(s) => {
                self.pos += n;
                Ok(s)
            }
            _ => self.fail(self.pos, format!("truncated while reading {what}")),
        }
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn f64(&mut self, what: &str) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn str(&mut self, what: &str) -> Result<String> {
        let len = self.u32(what)? as usize;
        let at = self.pos;
        let raw = self.take(len, what)?;
        match std::str::from_utf8(raw) {
            Ok(s) => Ok(s.to_string()),
            Err(_) => self.fail(at, format!("{what} is not UTF-8")),
        }
    }
}

pub fn decode(bytes: &[u8]) -> Result<State64> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4, "magic")? != MAGIC {
        return r.fail(0, "bad magic");
    }
    let version = r.u32("version")?;
    if version != VERSION {
        return r.fail(4, format!("unsupported version {version}"));
    }
    let dims_at = r.pos;
    let (nx, ny, nz) = (r.u32("nx")? as usize, r.u32("ny")? as usize, r.u32("nz")? as usize);
    // Checked before the grid is built so a corrupt header cannot force a huge allocation.
    let need = nx.checked_mul(ny).and_then(|n| n.checked_mul(nz)).and_then(|n| n.checked_mul(16));
    let Some(need) = need.filter(|&n| n.saturating_mul(3) <= bytes.len()) else {
        return r.fail(dims_at, format!("{nx}x{ny}x{nz} grid does not fit in {} bytes", bytes.len()));
    };
    let grid = match nz {
        1 => Grid::horizontal_grid(nx, ny),
        _ => Grid::new(nx, ny, nz),
    };
    let grid = match grid {
        Ok(g) => g,
        Err(e) => return r.fail(dims_at, e.to_string()),
    };
    let count_at = r.pos;
    let count = r.u32("field count")?;
    if count != 3 {
        return r.fail(count_at, format!("expected 3 fields, found {count}"));
    }
    let mut fields = Vec::with_capacity(3);
    for expected in FIELD_NAMES {
        let at = r.pos;
        let name = r.str("field name")?;
        if name != expected {
            return r.fail(at, format!("expected field '{expected}', found '{name}'"));
        }
        let at = r.pos;
        let code = r.take(1, "parity")?[0];
        let Some(parity) = Parity::from_code(code) else {
            return r.fail(at, format!("parity code {code}"));
        };
        let raw = r.take(need, "coefficients")?;
        let coeffs = raw
            .chunks_exact(16)
            .map(|c| {
                Complex::new(
                    f64::from_le_bytes(c[..8].try_into().unwrap()),
                    f64::from_le_bytes(c[8..].try_into().unwrap()),
                )
            })
            .collect();
        fields.push(SpectralField::from_coeffs(grid.clone(), coeffs, parity)?);
    }
    let time = r.f64("time")?;
    let at = r.pos;
    let name = r.str("system")?;
    let Some(system) = System::parse(&name) else {
        return r.fail(at, format!("unknown system '{name}'"));
    };
    let crc_at = r.pos;
    let stored = r.u32("crc")?;
    if r.pos != bytes.len() {
        return r.fail(r.pos, format!("{} trailing byte(s)", bytes.len() - r.pos));
    }
    let actual = crc32fast::hash(&bytes[..crc_at]);
    if stored != actual {
        return r.fail(crc_at, format!("crc mismatch: stored {stored:08x}, computed {actual:08x}"));
    }
    let w = fields.pop().unwrap();
    let v2 = fields.pop().unwrap();
    let v1 = fields.pop().unwrap();
    Ok(VelocityState::new(v1, v2, w, system, time)?)
}

pub fn save_snapshot(state: &State64, path: &Path) -> Result<()> {
    std::fs::write(path, encode(state))?;
    Ok(())
}

pub fn load_snapshot(path: &Path) -> Result<State64> {
    decode(&std::fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use hydrostat_core::initial::{generate_initial_data, Recipe};

    fn state() -> State64 {
        let g = Grid::new(4, 6, 8).unwrap();
        let mut u = generate_initial_data(Recipe::BandlimitedRandom, 9, &g).unwrap();
        u.time = 0.125;
        u
    }

    fn format_offset<T: std::fmt::Debug>(r: Result<T>) -> usize {
        match r {
            Err(HarnessError::Format { offset, .. }) => offset,
            other => panic!("expected a format error, got {other:?}"),
        }
    }

    #[test]
    fn round_trip_is_bit_exact() {
        let u = state();
        let bytes = encode(&u);
        let back = decode(&bytes).unwrap();
        assert_eq!(back.system, u.system);
        assert_eq!(back.time.to_bits(), u.time.to_bits());
        for (a, b) in back.components().iter().zip(u.components()) {
            assert_eq!(a.parity(), b.parity());
            assert!(a.coeffs().iter().zip(b.coeffs()).all(|(x, y)| x.re.to_bits() == y.re.to_bits() && x.im.to_bits() == y.im.to_bits()));
        }
        assert_eq!(encode(&back), bytes);
    }

    #[test]
    fn header_layout() {
        let bytes = encode(&state());
        assert_eq!(&bytes[..4], b"HSN1");
        assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 4);
        assert_eq!(u32::from_le_bytes(bytes[16..20].try_into().unwrap()), 8);
        assert_eq!(u32::from_le_bytes(bytes[20..24].try_into().unwrap()), 3);
        assert_eq!(&bytes[24..30], &[2, 0, 0, 0, b'v', b'1']);
        assert_eq!(bytes[30], 0);
        let n = bytes.len();
        let crc = u32::from_le_bytes(bytes[n - 4..].try_into().unwrap());
        assert_eq!(crc, crc32fast::hash(&bytes[..n - 4]));
    }

    #[test]
    fn malformed_files_are_rejected() {
        let bytes = encode(&state());
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert_eq!(format_offset(decode(&bad)), 0);
        let mut bumped = bytes.clone();
        bumped[4] = 2;
        assert_eq!(format_offset(decode(&bumped)), 4);
        assert!(format_offset(decode(&bytes[..bytes.len() - 1])) > 0);
        assert_eq!(format_offset(decode(&bytes[..100])), 8);
        let mut flipped = bytes.clone();
        flipped[200] ^= 1;
        assert_eq!(format_offset(decode(&flipped)), bytes.len() - 4);
        let mut odd = bytes.clone();
        odd[8] = 5;
        assert_eq!(format_offset(decode(&odd)), 8);
        let mut huge = bytes.clone();
        huge[8..12].copy_from_slice(&u32::MAX.to_le_bytes());
        assert_eq!(format_offset(decode(&huge)), 8);
    }

    #[test]
    fn horizontal_states_round_trip() {
        let h = Grid::horizontal_grid(8, 8).unwrap();
        let u = generate_initial_data(Recipe::TaylorGreen2d, 0, &h).unwrap();
        let mut u = u;
        u.system = System::Ns2d;
        assert_eq!(decode(&encode(&u)).unwrap(), u);
    }
}
