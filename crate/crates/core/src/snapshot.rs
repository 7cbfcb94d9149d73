//! Binary field snapshots.
//!
//! Layout: a 64-byte header followed by `nx * ny * 9` little-endian `f64`,
//! row-major (`j` outer, `i` inner), the nine conserved components of a cell
//! stored together in slot order.
//!
//! | offset | type    | field                               |
//! |--------|---------|-------------------------------------|
//! | 0      | [u8; 8] | magic `GLMMHD01`                    |
//! | 8      | u32     | level (`nx = ny = 2^level`)         |
//! | 12     | u32     | nx                                  |
//! | 16     | u32     | ny                                  |
//! | 20     | u32     | boundary (0 Neumann, 1 periodic)    |
//! | 24     | f64     | t                                   |
//! | 32     | f64     | gamma                               |
//! | 40     | -       | zero padding to 64                  |
//!
//! The domain is not stored; it comes with the run's configuration.

use std::fs;
use std::io::Write;
use std::path::Path;

use crate::error::{Error, Result};
use crate::fv::{apply_boundary, Boundary, Domain, UniformGrid};
use crate::physics::{ConservedState, NVAR};

pub const MAGIC: &[u8; 8] = b"GLMMHD01";
pub const HEADER_LEN: usize = 64;

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub t: f64,
    pub gamma: f64,
    pub grid: UniformGrid,
}

pub fn encode(grid: &UniformGrid, t: f64, gamma: f64) -> Vec<u8> {
    let mut buf = Vec::with_capacity(HEADER_LEN + grid.cell_count() * NVAR * 8);
    buf.extend_from_slice(MAGIC);
    buf.extend_from_slice(&(grid.level().unwrap_or(0) as u32).to_le_bytes());
    buf.extend_from_slice(&(grid.nx as u32).to_le_bytes());
    buf.extend_from_slice(&(grid.ny as u32).to_le_bytes());
    let b: u32 = match grid.boundary {
        Boundary::Neumann => 0,
        Boundary::Periodic => 1,
    };
    buf.extend_from_slice(&b.to_le_bytes());
    buf.extend_from_slice(&t.to_le_bytes());
    buf.extend_from_slice(&gamma.to_le_bytes());
    buf.resize(HEADER_LEN, 0);
    for (_, _, q) in grid.interior() {
        for v in q.to_array() {
            buf.extend_from_slice(&v.to_le_bytes());
        }
    }
    buf
}

pub fn decode(bytes: &[u8], domain: Domain, path: &Path) -> Result<Snapshot> {
    let bad = |reason: String| Error::Snapshot {
        path: path.to_path_buf(),
        reason,
    };
    if bytes.len() < HEADER_LEN || &bytes[..8] != MAGIC {
        return Err(bad("missing magic".into()));
    }
    let u32_at = |o: usize| u32::from_le_bytes(bytes[o..o + 4].try_into().unwrap());
    let f64_at = |o: usize| f64::from_le_bytes(bytes[o..o + 8].try_into().unwrap());
    let (nx, ny) = (u32_at(12) as usize, u32_at(16) as usize);
    let boundary = match u32_at(20) {
        0 => Boundary::Neumann,
        1 => Boundary::Periodic,
        b => return Err(bad(format!("unknown boundary code {b}"))),
    };
    if nx == 0 || ny == 0 {
        return Err(bad("empty grid".into()));
    }
    let expected = HEADER_LEN + nx * ny * NVAR * 8;
    if bytes.len() != expected {
        return Err(bad(format!("expected {expected} bytes, found {}", bytes.len())));
    }
    let mut grid = UniformGrid::new(nx, ny, domain, boundary);
    if grid.level().map(u32::from) != Some(u32_at(8)) && grid.level().is_some() {
        return Err(bad(format!("level {} does not match {nx}x{ny}", u32_at(8))));
    }
    let mut o = HEADER_LEN;
    for j in 0..ny {
        for i in 0..nx {
            let mut a = [0.0; NVAR];
            for v in a.iter_mut() {
                *v = f64_at(o);
                o += 8;
            }
            grid.set(i, j, ConservedState::from_array(a));
        }
    }
    apply_boundary(&mut grid);
    Ok(Snapshot {
        t: f64_at(24),
        gamma: f64_at(32),
        grid,
    })
}

pub fn save(path: &Path, grid: &UniformGrid, t: f64, gamma: f64) -> Result<()> {
    let mut f = fs::File::create(path)?;
    f.write_all(&encode(grid, t, gamma))?;
    Ok(())
}

pub fn load(path: &Path, domain: Domain) -> Result<Snapshot> {
    decode(&fs::read(path)?, domain, path)
}
