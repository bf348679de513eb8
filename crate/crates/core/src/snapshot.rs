//! Binary snapshot container.
//!
//! Layout (little-endian): magic `LUPESNAP`, format version `u32`, `nx ny nz`
//! as `u32`, `lx ly h t` as `f64`, step index `u64`, array count `u32`, then
//! per array a `u8` name length, the UTF-8 name, a `u64` sample count and the
//! samples as `f64` in x-fastest order.

use std::path::Path;

use crate::domain::Domain;
use crate::error::{Error, Result};
use crate::field::{HVecField, ScalarField, State};
use crate::grid::{Dims, GridSpec};
use crate::operators::vertical_velocity;

pub const MAGIC: &[u8; 8] = b"LUPESNAP";
pub const VERSION: u32 = 1;
const ARRAYS: [&str; 5] = ["v_star_x", "v_star_y", "temp", "salt", "w"];

/// Contents of a snapshot file.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub grid: GridSpec,
    pub state: State,
    /// Diagnosed vertical velocity at cell centres.
    pub w: ScalarField,
}

impl Snapshot {
    pub fn new(state: &State, domain: &Domain) -> Self {
        let g = domain.grid();
        Snapshot {
            grid: GridSpec {
                nx: g.nx(),
                ny: g.ny(),
                nz: g.nz(),
                lx: g.lx(),
                ly: g.ly(),
                h: g.depth(),
            },
            state: state.clone(),
            w: vertical_velocity(&state.v_star, domain).centers,
        }
    }

    pub fn encode(&self) -> Vec<u8> {
        let s = &self.state;
        let mut out = Vec::with_capacity(64 + 5 * 8 * s.dims().len());
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        for n in [self.grid.nx, self.grid.ny, self.grid.nz] {
            out.extend_from_slice(&(n as u32).to_le_bytes());
        }
        for v in [self.grid.lx, self.grid.ly, self.grid.h, s.t] {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out.extend_from_slice(&s.step_index.to_le_bytes());
        out.extend_from_slice(&(ARRAYS.len() as u32).to_le_bytes());
        let fields = [&s.v_star.x, &s.v_star.y, &s.temp, &s.salt, &self.w];
        for (name, f) in ARRAYS.iter().zip(fields) {
            out.push(name.len() as u8);
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(f.as_slice().len() as u64).to_le_bytes());
            for v in f.as_slice() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        out
    }

    pub fn decode(bytes: &[u8]) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != MAGIC {
            return Err(Error::Snapshot("bad magic".into()));
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::SnapshotVersion {
                found: version,
                supported: VERSION,
            });
        }
        let (nx, ny, nz) = (r.u32()? as usize, r.u32()? as usize, r.u32()? as usize);
        let (lx, ly, h, t) = (r.f64()?, r.f64()?, r.f64()?, r.f64()?);
        let step_index = r.u64()?;
        let count = r.u32()? as usize;
        let dims = Dims { nx, ny, nz };
        let mut arrays: Vec<(String, ScalarField)> = Vec::with_capacity(count);
        for _ in 0..count {
            let len = r.take(1)?[0] as usize;
            let name = String::from_utf8(r.take(len)?.to_vec())
                .map_err(|_| Error::Snapshot("array name is not UTF-8".into()))?;
            let n = r.u64()? as usize;
            if n != dims.len() {
                return Err(Error::Snapshot(format!(
                    "array '{name}' has {n} samples, grid needs {}",
                    dims.len()
                )));
            }
            let raw = r.take(n.checked_mul(8).ok_or_else(|| Error::Snapshot("array too large".into()))?)?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            arrays.push((name, ScalarField::from_vec(dims, data)?));
        }
        if r.pos != bytes.len() {
            return Err(Error::Snapshot("trailing bytes after last array".into()));
        }
        let mut get = |name: &str| {
            arrays
                .iter()
                .position(|(n, _)| n == name)
                .map(|i| arrays.swap_remove(i).1)
                .ok_or_else(|| Error::Snapshot(format!("missing array '{name}'")))
        };
        let (vx, vy, temp, salt, w) = (get("v_star_x")?, get("v_star_y")?, get("temp")?, get("salt")?, get("w")?);
        Ok(Snapshot {
            grid: GridSpec { nx, ny, nz, lx, ly, h },
            state: State {
                v_star: HVecField { x: vx, y: vy },
                temp,
                salt,
                t,
                step_index,
            },
            w,
        })
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.bytes.len());
        match end {
            Some(e) => {
                let s = &self.bytes[self.pos..e];
                self.pos = e;
                Ok(s)
            }
            None => Err(Error::Snapshot(format!("truncated file at byte {}", self.pos))),
        }
    }
    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().expect("4 bytes")))
    }
    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().expect("8 bytes")))
    }
}

pub fn write_snapshot(path: impl AsRef<Path>, state: &State, domain: &Domain) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, Snapshot::new(state, domain).encode()).map_err(|e| Error::io(path, e))
}

pub fn read_snapshot(path: impl AsRef<Path>) -> Result<Snapshot> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| Error::io(path, e))?;
    Snapshot::decode(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::make_grid;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_state(d: &Domain, seed: u64) -> State {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dims = d.dims();
        let mut f = || {
            ScalarField::from_vec(dims, (0..dims.len()).map(|_| rng.random::<f64>() * 1e3 - 5e2).collect()).unwrap()
        };
        State {
            v_star: HVecField { x: f(), y: f() },
            temp: f(),
            salt: f(),
            t: 12.625,
            step_index: 99,
        }
    }

    #[test]
    fn round_trip_is_bitwise() {
        let d = Domain::new(make_grid(8, 4, 3, 10.0, 5.0, 2.0).unwrap());
        let s = random_state(&d, 3);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.snap");
        write_snapshot(&p, &s, &d).unwrap();
        let back = read_snapshot(&p).unwrap();
        assert_eq!(back.state, s);
        assert_eq!(back.grid.lx.to_bits(), 10.0f64.to_bits());
        assert_eq!(back, Snapshot::new(&s, &d));
    }

    #[test]
    fn corrupted_magic_version_and_truncation() {
        let d = Domain::new(make_grid(4, 4, 2, 1.0, 1.0, 1.0).unwrap());
        let bytes = Snapshot::new(&random_state(&d, 1), &d).encode();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(Snapshot::decode(&bad), Err(Error::Snapshot(_))));
        let mut v2 = bytes.clone();
        v2[8..12].copy_from_slice(&(VERSION + 1).to_le_bytes());
        assert!(matches!(
            Snapshot::decode(&v2),
            Err(Error::SnapshotVersion { found: 2, supported: 1 })
        ));
        assert!(Snapshot::decode(&bytes[..bytes.len() - 3]).is_err());
        assert!(Snapshot::decode(&bytes[..20]).is_err());
    }
}
