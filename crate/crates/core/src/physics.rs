//! GLM-MHD state vectors, the ideal-gas closure and the physical fluxes.
//!
//! Conserved slot order is fixed everywhere in the crate (snapshots, CSV,
//! FFI buffers): `(rho, E, rho*ux, rho*uy, rho*uz, Bx, By, Bz, psi)`.

use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Sub};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of evolved components.
pub const NVAR: usize = 9;

/// Slot indices into [`ConservedState::to_array`].
pub mod slot {
    pub const RHO: usize = 0;
    pub const ENERGY: usize = 1;
    pub const MX: usize = 2;
    pub const MY: usize = 3;
    pub const MZ: usize = 4;
    pub const BX: usize = 5;
    pub const BY: usize = 6;
    pub const BZ: usize = 7;
    pub const PSI: usize = 8;
}

/// Thermal pressures in `(-PRESSURE_FLOOR, 0]` are treated as roundoff and
/// clamped to the floor; anything lower is an error.
pub const PRESSURE_FLOOR: f64 = 1e-12;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct ConservedState {
    pub rho: f64,
    pub energy: f64,
    pub mx: f64,
    pub my: f64,
    pub mz: f64,
    pub bx: f64,
    pub by: f64,
    pub bz: f64,
    pub psi: f64,
}

/// Interface or physical flux; same slot layout as the conserved vector.
pub type FluxVector = ConservedState;

#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct PrimitiveState {
    pub rho: f64,
    pub p: f64,
    pub ux: f64,
    pub uy: f64,
    pub uz: f64,
    pub bx: f64,
    pub by: f64,
    pub bz: f64,
    pub psi: f64,
}

/// Parameters of the GLM cleaning and the time integrator.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlmParams {
    pub c_cfl: f64,
    /// Hyperbolic cleaning speed; recomputed every step from `dt`.
    pub ch: f64,
    /// Ratio `c_p^2 / c_h`.
    pub cp2_over_ch: f64,
    pub gamma: f64,
}

impl Default for GlmParams {
    fn default() -> Self {
        Self {
            c_cfl: 0.3,
            ch: 1.0,
            cp2_over_ch: 0.18,
            gamma: 5.0 / 3.0,
        }
    }
}

impl GlmParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.c_cfl > 0.0 && self.c_cfl < 1.0) {
            return Err(Error::Config(format!("CFL coefficient {} not in (0,1)", self.c_cfl)));
        }
        if !(self.cp2_over_ch > 0.0) {
            return Err(Error::Config(format!("cp2_over_ch {} must be positive", self.cp2_over_ch)));
        }
        if !(self.gamma > 1.0) {
            return Err(Error::Config(format!("gamma {} must exceed 1", self.gamma)));
        }
        Ok(())
    }
}

impl ConservedState {
    pub const ZERO: Self = Self::from_array([0.0; NVAR]);

    #[inline]
    pub const fn from_array(a: [f64; NVAR]) -> Self {
        Self {
            rho: a[0],
            energy: a[1],
            mx: a[2],
            my: a[3],
            mz: a[4],
            bx: a[5],
            by: a[6],
            bz: a[7],
            psi: a[8],
        }
    }

    #[inline]
    pub const fn to_array(self) -> [f64; NVAR] {
        [
            self.rho, self.energy, self.mx, self.my, self.mz, self.bx, self.by, self.bz, self.psi,
        ]
    }

    #[inline]
    pub fn map(self, f: impl Fn(f64) -> f64) -> Self {
        Self::from_array(self.to_array().map(f))
    }

    #[inline]
    pub fn zip(self, other: Self, f: impl Fn(f64, f64) -> f64) -> Self {
        let a = self.to_array();
        let b = other.to_array();
        Self::from_array(std::array::from_fn(|k| f(a[k], b[k])))
    }

    /// Exchange the roles of the x and y axes.
    #[inline]
    pub fn swap_xy(self) -> Self {
        Self {
            mx: self.my,
            my: self.mx,
            bx: self.by,
            by: self.bx,
            ..self
        }
    }

    #[inline]
    pub fn b_squared(&self) -> f64 {
        self.bx * self.bx + self.by * self.by + self.bz * self.bz
    }

    /// Thermal pressure from the ideal-gas law, with the roundoff floor applied.
    pub fn pressure(&self, gamma: f64) -> Result<f64> {
        if !(self.rho > 0.0) {
            return Err(Error::NonPositiveDensity { rho: self.rho });
        }
        let kinetic = 0.5 * (self.mx * self.mx + self.my * self.my + self.mz * self.mz) / self.rho;
        let p = (gamma - 1.0) * (self.energy - kinetic - 0.5 * self.b_squared());
        floor_pressure(p)
    }

    pub fn is_finite(&self) -> bool {
        self.to_array().iter().all(|v| v.is_finite())
    }
}

fn floor_pressure(p: f64) -> Result<f64> {
    if p > 0.0 {
        Ok(p)
    } else if p > -PRESSURE_FLOOR {
        log::warn!("thermal pressure {p:e} clamped to floor {PRESSURE_FLOOR:e}");
        Ok(PRESSURE_FLOOR)
    } else {
        Err(Error::NonPositivePressure { p })
    }
}

impl Index<usize> for ConservedState {
    type Output = f64;
    fn index(&self, k: usize) -> &f64 {
        match k {
            0 => &self.rho,
            1 => &self.energy,
            2 => &self.mx,
            3 => &self.my,
            4 => &self.mz,
            5 => &self.bx,
            6 => &self.by,
            7 => &self.bz,
            8 => &self.psi,
            _ => panic!("conserved slot {k} out of range"),
        }
    }
}

impl IndexMut<usize> for ConservedState {
    fn index_mut(&mut self, k: usize) -> &mut f64 {
        match k {
            0 => &mut self.rho,
            1 => &mut self.energy,
            2 => &mut self.mx,
            3 => &mut self.my,
            4 => &mut self.mz,
            5 => &mut self.bx,
            6 => &mut self.by,
            7 => &mut self.bz,
            8 => &mut self.psi,
            _ => panic!("conserved slot {k} out of range"),
        }
    }
}

impl Add for ConservedState {
    type Output = Self;
    #[inline]
    fn add(self, rhs: Self) -> Self {
        self.zip(rhs, |a, b| a + b)
    }
}

impl AddAssign for ConservedState {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Sub for ConservedState {
    type Output = Self;
    #[inline]
    fn sub(self, rhs: Self) -> Self {
        self.zip(rhs, |a, b| a - b)
    }
}

impl Mul<ConservedState> for f64 {
    type Output = ConservedState;
    #[inline]
    fn mul(self, rhs: ConservedState) -> ConservedState {
        rhs.map(|v| self * v)
    }
}

impl PrimitiveState {
    #[inline]
    pub fn b_squared(&self) -> f64 {
        self.bx * self.bx + self.by * self.by + self.bz * self.bz
    }

    #[inline]
    pub fn total_pressure(&self) -> f64 {
        self.p + 0.5 * self.b_squared()
    }

    #[inline]
    pub fn u_dot_b(&self) -> f64 {
        self.ux * self.bx + self.uy * self.by + self.uz * self.bz
    }

    pub fn swap_xy(self) -> Self {
        Self {
            ux: self.uy,
            uy: self.ux,
            bx: self.by,
            by: self.bx,
            ..self
        }
    }
}

pub fn to_primitive(q: &ConservedState, gamma: f64) -> Result<PrimitiveState> {
    let p = q.pressure(gamma)?;
    let inv_rho = 1.0 / q.rho;
    Ok(PrimitiveState {
        rho: q.rho,
        p,
        ux: q.mx * inv_rho,
        uy: q.my * inv_rho,
        uz: q.mz * inv_rho,
        bx: q.bx,
        by: q.by,
        bz: q.bz,
        psi: q.psi,
    })
}

pub fn to_conserved(w: &PrimitiveState, gamma: f64) -> Result<ConservedState> {
    if !(w.rho > 0.0) {
        return Err(Error::NonPositiveDensity { rho: w.rho });
    }
    if !(w.p > 0.0) {
        return Err(Error::NonPositivePressure { p: w.p });
    }
    let u2 = w.ux * w.ux + w.uy * w.uy + w.uz * w.uz;
    Ok(ConservedState {
        rho: w.rho,
        energy: w.p / (gamma - 1.0) + 0.5 * w.rho * u2 + 0.5 * w.b_squared(),
        mx: w.rho * w.ux,
        my: w.rho * w.uy,
        mz: w.rho * w.uz,
        bx: w.bx,
        by: w.by,
        bz: w.bz,
        psi: w.psi,
    })
}

/// x-flux given both views of the same state. `q` supplies the energy so the
/// flux stays consistent with the stored conserved data bit for bit.
#[inline]
pub(crate) fn flux_x_parts(q: &ConservedState, w: &PrimitiveState, ch: f64) -> FluxVector {
    let pt = w.total_pressure();
    let ub = w.u_dot_b();
    FluxVector {
        rho: q.mx,
        energy: (q.energy + pt) * w.ux - ub * w.bx,
        mx: q.mx * w.ux + pt - w.bx * w.bx,
        my: q.my * w.ux - w.bx * w.by,
        mz: q.mz * w.ux - w.bx * w.bz,
        bx: w.psi,
        by: w.ux * w.by - w.bx * w.uy,
        bz: w.ux * w.bz - w.bx * w.uz,
        psi: ch * ch * w.bx,
    }
}

pub fn physical_flux_x(q: &ConservedState, gamma: f64, ch: f64) -> Result<FluxVector> {
    let w = to_primitive(q, gamma)?;
    Ok(flux_x_parts(q, &w, ch))
}

pub fn physical_flux_y(q: &ConservedState, gamma: f64, ch: f64) -> Result<FluxVector> {
    let w = to_primitive(q, gamma)?;
    let pt = w.total_pressure();
    let ub = w.u_dot_b();
    Ok(FluxVector {
        rho: q.my,
        energy: (q.energy + pt) * w.uy - ub * w.by,
        mx: q.mx * w.uy - w.by * w.bx,
        my: q.my * w.uy + pt - w.by * w.by,
        mz: q.mz * w.uy - w.by * w.bz,
        bx: w.uy * w.bx - w.by * w.ux,
        by: w.psi,
        bz: w.uy * w.bz - w.by * w.uz,
        psi: ch * ch * w.by,
    })
}

pub fn sound_speed(w: &PrimitiveState, gamma: f64) -> f64 {
    (gamma * w.p / w.rho).sqrt()
}

/// Fast magnetoacoustic speed along a direction whose normal field is `bn`.
pub fn fast_speed(w: &PrimitiveState, bn: f64, gamma: f64) -> f64 {
    let gp = gamma * w.p;
    let sum = gp + w.b_squared();
    let mut disc = sum * sum - 4.0 * gp * bn * bn;
    debug_assert!(disc >= -1e-15 * sum * sum, "negative fast-speed discriminant {disc}");
    if disc < 0.0 {
        disc = 0.0;
    }
    ((sum + disc.sqrt()) / (2.0 * w.rho)).sqrt()
}

/// Cleaning speed `c_cfl * min(dx, dy) / dt`.
pub fn compute_ch(dx: f64, dy: f64, dt: f64, c_cfl: f64) -> Result<f64> {
    if !(dt > 0.0) {
        return Err(Error::ZeroTimeStep { dt });
    }
    Ok(c_cfl * dx.min(dy) / dt)
}
