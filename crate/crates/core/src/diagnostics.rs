//! Scalar diagnostics and error norms.
//!
//! Integrals take `(cell area, state)` pairs so the same code serves uniform
//! grids and quadtree leaves.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fv::UniformGrid;
use crate::mr::QuadtreeMesh;
use crate::physics::ConservedState;

/// Area-weighted cells of a uniform grid.
pub fn grid_cells(grid: &UniformGrid) -> impl Iterator<Item = (f64, &ConservedState)> + '_ {
    let a = grid.cell_area();
    grid.interior().map(move |(_, _, q)| (a, q))
}

/// Area-weighted leaves of a quadtree.
pub fn mesh_cells(mesh: &QuadtreeMesh) -> impl Iterator<Item = (f64, &ConservedState)> + '_ {
    mesh.leaves().map(move |(l, _, _, q)| (mesh.cell_area(l), q))
}

/// Largest `|dBx/dx + dBy/dy|` by centred differences. The grid's ghost
/// layers supply the boundary neighbours.
pub fn bdiv_max(grid: &UniformGrid) -> f64 {
    let mut m = 0.0f64;
    for j in 0..grid.ny as isize {
        for i in 0..grid.nx as isize {
            let ddx = (grid.at(i + 1, j).bx - grid.at(i - 1, j).bx) / (2.0 * grid.dx);
            let ddy = (grid.at(i, j + 1).by - grid.at(i, j - 1).by) / (2.0 * grid.dy);
            m = m.max((ddx + ddy).abs());
        }
    }
    m
}

/// Divergence of a quadtree solution on the uniform grid of its finest leaves.
pub fn bdiv_max_mesh(mesh: &QuadtreeMesh) -> f64 {
    bdiv_max(&mesh.to_uniform(mesh.finest_leaf_level()))
}

#[inline]
fn kinetic_magnetic(q: &ConservedState) -> f64 {
    let (ux, uy, uz) = (q.mx / q.rho, q.my / q.rho, q.mz / q.rho);
    ux * ux + uy * uy + uz * uz + q.b_squared()
}

/// `sum (|u|^2 + |B|^2) dA`.
pub fn energy_integral<'a>(cells: impl IntoIterator<Item = (f64, &'a ConservedState)>) -> f64 {
    cells.into_iter().map(|(a, q)| kinetic_magnetic(q) * a).sum()
}

/// Domain mean of `|u|^2 + |B|^2`; the energy reported in diagnostics.
pub fn mean_energy<'a>(cells: impl IntoIterator<Item = (f64, &'a ConservedState)>, area: f64) -> f64 {
    energy_integral(cells) / area
}

/// `B . (u x B)`, zero in exact arithmetic.
#[inline]
fn helicity_density(q: &ConservedState) -> f64 {
    let (ux, uy, uz) = (q.mx / q.rho, q.my / q.rho, q.mz / q.rho);
    let (bx, by, bz) = (q.bx, q.by, q.bz);
    bx * (uy * bz - uz * by) + by * (uz * bx - ux * bz) + bz * (ux * by - uy * bx)
}

/// `a sum B . (u x B) dA`.
pub fn helicity_rate<'a>(cells: impl IntoIterator<Item = (f64, &'a ConservedState)>, a: f64) -> f64 {
    a * cells
        .into_iter()
        .map(|(area, q)| helicity_density(q) * area)
        .sum::<f64>()
}

/// `sum |rho_run - rho_ref| dA` on the run's grid, with the reference
/// averaged down to that resolution.
pub fn l1_density_error(run: &UniformGrid, reference: &UniformGrid) -> Result<f64> {
    if run.domain != reference.domain {
        return Err(Error::IncompatibleDomains(format!(
            "{:?} vs {:?}",
            run.domain, reference.domain
        )));
    }
    if reference.nx < run.nx
        || reference.ny < run.ny
        || !reference.nx.is_multiple_of(run.nx)
        || !reference.ny.is_multiple_of(run.ny)
    {
        return Err(Error::IncompatibleDomains(format!(
            "reference {}x{} cannot be averaged onto {}x{}",
            reference.nx, reference.ny, run.nx, run.ny
        )));
    }
    let (rx, ry) = (reference.nx / run.nx, reference.ny / run.ny);
    let w = 1.0 / (rx * ry) as f64;
    let mut err = 0.0;
    for (i, j, q) in run.interior() {
        let mut sum = 0.0;
        for jj in j * ry..(j + 1) * ry {
            for ii in i * rx..(i + 1) * rx {
                sum += reference.get(ii, jj).rho;
            }
        }
        err += (q.rho - w * sum).abs();
    }
    Ok(err * run.cell_area())
}

pub const CSV_HEADER: &str = "t,dt,ch,bdiv_max,energy,helicity_rate,leaf_count,virtual_count,dc_running";

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRecord {
    pub t: f64,
    pub dt: f64,
    pub ch: f64,
    pub bdiv_max: f64,
    /// Domain mean of `|u|^2 + |B|^2`.
    pub energy: f64,
    pub helicity_rate: f64,
    pub leaf_count: usize,
    pub virtual_count: usize,
    /// Running compression ratio in percent.
    pub dc_running: f64,
}

impl DiagnosticsRecord {
    /// One CSV row; floats use the shortest round-tripping representation.
    pub fn csv_row(&self) -> String {
        format!(
            "{:e},{:e},{:e},{:e},{:e},{:e},{},{},{:e}",
            self.t,
            self.dt,
            self.ch,
            self.bdiv_max,
            self.energy,
            self.helicity_rate,
            self.leaf_count,
            self.virtual_count,
            self.dc_running
        )
    }

    pub fn parse_csv_row(line: &str) -> Result<Self> {
        let f: Vec<&str> = line.trim().split(',').collect();
        if f.len() != 9 {
            return Err(Error::Config(format!("expected 9 columns, got {}", f.len())));
        }
        let num = |k: usize| -> Result<f64> {
            f[k].parse()
                .map_err(|_| Error::Config(format!("bad number `{}` in column {k}", f[k])))
        };
        let int = |k: usize| -> Result<usize> {
            f[k].parse()
                .map_err(|_| Error::Config(format!("bad count `{}` in column {k}", f[k])))
        };
        Ok(Self {
            t: num(0)?,
            dt: num(1)?,
            ch: num(2)?,
            bdiv_max: num(3)?,
            energy: num(4)?,
            helicity_rate: num(5)?,
            leaf_count: int(6)?,
            virtual_count: int(7)?,
            dc_running: num(8)?,
        })
    }

    pub fn is_valid(&self) -> bool {
        [self.t, self.dt, self.ch, self.bdiv_max, self.energy, self.helicity_rate, self.dc_running]
            .iter()
            .all(|v| v.is_finite())
            && self.bdiv_max >= 0.0
    }
}
