//! Interface fluxes: the exact solve of the decoupled `(B_n, psi)` pair and the
//! five-wave HLLD solver for the other seven components.
//!
//! The x-direction solver is the primitive; the y-direction flux is obtained by
//! exchanging the axes, which the GLM-MHD system is invariant under.
//!
//! Intermediate states are written as increments on the outer states (for
//! example `S_M = u_L + ...` rather than a ratio of two sums). This is the same
//! algebra, arranged so that identical left and right states reproduce the
//! physical flux exactly rather than to within roundoff.

use crate::error::{Error, Result};
use crate::physics::{
    fast_speed, flux_x_parts, to_primitive, ConservedState, FluxVector, PrimitiveState,
};

/// Relative size below which the tangential-update denominator is treated as zero.
pub const DEGENERATE_TOL: f64 = 1e-12;
/// Relative size below which the normal field is treated as zero.
pub const BN_ZERO_TOL: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Direction {
    X,
    Y,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GlmInterfaceSolution {
    pub bn_m: f64,
    pub psi_m: f64,
}

impl GlmInterfaceSolution {
    /// Flux contribution for the `(B_n, psi)` slots.
    #[inline]
    pub fn flux(&self, ch: f64) -> (f64, f64) {
        (self.psi_m, ch * ch * self.bn_m)
    }
}

/// Exact Riemann solution of `B_t + psi_x = 0, psi_t + ch^2 B_x = 0` at `x/t = 0`.
pub fn glm_interface(
    bn_l: f64,
    psi_l: f64,
    bn_r: f64,
    psi_r: f64,
    ch: f64,
) -> Result<GlmInterfaceSolution> {
    if !(ch > 0.0) {
        return Err(Error::NonPositiveCh { ch });
    }
    Ok(GlmInterfaceSolution {
        bn_m: 0.5 * (bn_l + bn_r) - (psi_r - psi_l) / (2.0 * ch),
        psi_m: 0.5 * (psi_l + psi_r) - 0.5 * ch * (bn_r - bn_l),
    })
}

/// Outer signal speeds `(S_L, S_R)` from the fast speeds of both states.
/// The normal field is taken from each state's `bx`.
pub fn hlld_speeds(wl: &PrimitiveState, wr: &PrimitiveState, gamma: f64) -> (f64, f64) {
    let cf = fast_speed(wl, wl.bx, gamma).max(fast_speed(wr, wr.bx, gamma));
    (wl.ux.min(wr.ux) - cf, wl.ux.max(wr.ux) + cf)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HlldWaveFan {
    pub s_l: f64,
    pub s_l_star: f64,
    pub s_m: f64,
    pub s_r_star: f64,
    pub s_r: f64,
    pub q_l_star: ConservedState,
    pub q_l_2star: ConservedState,
    pub q_r_2star: ConservedState,
    pub q_r_star: ConservedState,
    pub pt_star: f64,
    /// The normal field vanished and the Alfven stage was skipped.
    pub bn_zero: bool,
    /// The tangential-update denominator vanished on the left / right side.
    pub degenerate_l: bool,
    pub degenerate_r: bool,
}

struct StarSide {
    q: ConservedState,
    uy: f64,
    uz: f64,
    degenerate: bool,
}

#[inline]
fn star_side(
    q: &ConservedState,
    w: &PrimitiveState,
    s: f64,
    s_m: f64,
    pt: f64,
    pt_star: f64,
    bx: f64,
) -> StarSide {
    let smu = s - w.ux;
    let ssm = s - s_m;
    let ratio = smu / ssm;
    let rho = w.rho * ratio;

    let bx2 = bx * bx;
    let rsmu = w.rho * smu;
    let den = rsmu * ssm - bx2;
    let num = rsmu * smu - bx2;
    let degenerate = den.abs() < DEGENERATE_TOL * (rsmu * smu).max(bx2);

    let (uy, uz, by, bz) = if degenerate {
        (w.uy, w.uz, 0.0, 0.0)
    } else {
        let f = bx * (s_m - w.ux) / den;
        let g = num / den;
        (w.uy - w.by * f, w.uz - w.bz * f, w.by * g, w.bz * g)
    };

    let ub = w.u_dot_b();
    let ub_star = s_m * bx + uy * by + uz * bz;
    let energy = q.energy * ratio + (pt_star * s_m - pt * w.ux + bx * (ub - ub_star)) / ssm;

    StarSide {
        q: ConservedState {
            rho,
            energy,
            mx: q.mx * ratio + rho * (s_m - w.ux),
            my: q.my * ratio + rho * (uy - w.uy),
            mz: q.mz * ratio + rho * (uz - w.uz),
            bx,
            by,
            bz,
            psi: q.psi,
        },
        uy,
        uz,
        degenerate,
    }
}

struct Fan {
    fan: HlldWaveFan,
    wl: PrimitiveState,
    wr: PrimitiveState,
}

fn build_fan(ql: &ConservedState, qr: &ConservedState, gamma: f64) -> Result<Fan> {
    let wl = to_primitive(ql, gamma)?;
    let wr = to_primitive(qr, gamma)?;
    let bx = ql.bx;
    debug_assert_eq!(ql.bx, qr.bx, "normal field must be resolved before the HLLD fan");

    let (s_l, s_r) = hlld_speeds(&wl, &wr, gamma);
    let ptl = wl.total_pressure();
    let ptr = wr.total_pressure();

    let a_l = (s_l - wl.ux) * wl.rho;
    let a_r = (s_r - wr.ux) * wr.rho;
    let den = a_r - a_l;
    let du = wr.ux - wl.ux;
    let dpt = ptr - ptl;
    let s_m = wl.ux + (a_r * du - dpt) / den;
    let pt_star = ptl + (a_l * a_r * du - a_l * dpt) / den;

    let l = star_side(ql, &wl, s_l, s_m, ptl, pt_star, bx);
    let r = star_side(qr, &wr, s_r, s_m, ptr, pt_star, bx);

    let bmag = wl.b_squared().max(wr.b_squared()).sqrt();
    let bn_zero = bx.abs() < BN_ZERO_TOL * (bmag + wl.p.max(wr.p).sqrt());

    let mut fan = HlldWaveFan {
        s_l,
        s_l_star: s_m,
        s_m,
        s_r_star: s_m,
        s_r,
        q_l_star: l.q,
        q_l_2star: l.q,
        q_r_2star: r.q,
        q_r_star: r.q,
        pt_star,
        bn_zero,
        degenerate_l: l.degenerate,
        degenerate_r: r.degenerate,
    };

    if !bn_zero {
        let sq_l = l.q.rho.sqrt();
        let sq_r = r.q.rho.sqrt();
        let sum = sq_l + sq_r;
        let sgn = if bx >= 0.0 { 1.0 } else { -1.0 };
        fan.s_l_star = s_m - bx.abs() / sq_l;
        fan.s_r_star = s_m + bx.abs() / sq_r;

        let (lq, rq) = (l.q, r.q);
        let uy = l.uy + (sq_r * (r.uy - l.uy) + (rq.by - lq.by) * sgn) / sum;
        let uz = l.uz + (sq_r * (r.uz - l.uz) + (rq.bz - lq.bz) * sgn) / sum;
        let by = lq.by + (sq_l * (rq.by - lq.by) + sq_l * sq_r * (r.uy - l.uy) * sgn) / sum;
        let bz = lq.bz + (sq_l * (rq.bz - lq.bz) + sq_l * sq_r * (r.uz - l.uz) * sgn) / sum;
        let ub2 = s_m * bx + uy * by + uz * bz;

        let double = |side: &StarSide, sq: f64, sign: f64| {
            let q = side.q;
            let ub1 = s_m * bx + side.uy * q.by + side.uz * q.bz;
            ConservedState {
                energy: q.energy + sign * sq * (ub1 - ub2) * sgn,
                my: q.my + q.rho * (uy - side.uy),
                mz: q.mz + q.rho * (uz - side.uz),
                by,
                bz,
                ..q
            }
        };
        fan.q_l_2star = double(&l, sq_l, -1.0);
        fan.q_r_2star = double(&r, sq_r, 1.0);
    }

    Ok(Fan { fan, wl, wr })
}

/// Full HLLD wave fan for two states sharing the same normal field `bx`.
pub fn hlld_fan(ql: &ConservedState, qr: &ConservedState, gamma: f64) -> Result<HlldWaveFan> {
    Ok(build_fan(ql, qr, gamma)?.fan)
}

/// Replace the normal field by the resolved interface value while keeping
/// the thermal pressure.
#[inline]
fn with_normal_field(q: &ConservedState, bn: f64) -> ConservedState {
    ConservedState {
        energy: q.energy + 0.5 * (bn * bn - q.bx * q.bx),
        bx: bn,
        ..*q
    }
}

/// GLM-HLLD interface flux in the x direction.
pub fn hlld_flux(
    ql: &ConservedState,
    qr: &ConservedState,
    gamma: f64,
    ch: f64,
) -> Result<FluxVector> {
    let glm = glm_interface(ql.bx, ql.psi, qr.bx, qr.psi, ch)?;
    let ql = with_normal_field(ql, glm.bn_m);
    let qr = with_normal_field(qr, glm.bn_m);
    let Fan { fan, wl, wr } = build_fan(&ql, &qr, gamma)?;

    let mut flux = if fan.s_l > 0.0 {
        flux_x_parts(&ql, &wl, ch)
    } else if fan.s_r < 0.0 {
        flux_x_parts(&qr, &wr, ch)
    } else if fan.s_m >= 0.0 {
        let f = flux_x_parts(&ql, &wl, ch);
        let f_star = f + fan.s_l * (fan.q_l_star - ql);
        if fan.s_l_star >= 0.0 {
            f_star
        } else {
            f_star + fan.s_l_star * (fan.q_l_2star - fan.q_l_star)
        }
    } else {
        let f = flux_x_parts(&qr, &wr, ch);
        let f_star = f + fan.s_r * (fan.q_r_star - qr);
        if fan.s_r_star <= 0.0 {
            f_star
        } else {
            f_star + fan.s_r_star * (fan.q_r_2star - fan.q_r_star)
        }
    };

    let (f_bn, f_psi) = glm.flux(ch);
    flux.bx = f_bn;
    flux.psi = f_psi;

    if !flux.is_finite() {
        return Err(Error::solver(
            "hlld_flux",
            format!("non-finite flux {flux:?} for fan {fan:?}"),
        ));
    }
    Ok(flux)
}

/// Interface flux along `dir`.
#[inline]
pub fn interface_flux(
    dir: Direction,
    ql: &ConservedState,
    qr: &ConservedState,
    gamma: f64,
    ch: f64,
) -> Result<FluxVector> {
    match dir {
        Direction::X => hlld_flux(ql, qr, gamma, ch),
        Direction::Y => Ok(hlld_flux(&ql.swap_xy(), &qr.swap_xy(), gamma, ch)?.swap_xy()),
    }
}
