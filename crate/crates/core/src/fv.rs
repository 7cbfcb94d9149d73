//! Uniform-grid finite volumes: x-then-y dimensional splitting, Heun time
//! integration, CFL control, exponential psi damping and ghost-cell boundaries.
//!
//! The MR engine reuses [`heun_average`], [`psi_damping_factor`] and
//! [`cfl_time_step`] so that a keep-all adaptive run performs the same
//! floating-point operations as this solver.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::physics::{compute_ch, fast_speed, to_primitive, ConservedState, GlmParams};
use crate::riemann::{interface_flux, Direction};

/// Ghost layers kept around the interior.
pub const GHOST: usize = 2;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Boundary {
    /// Zero-gradient copy of the nearest interior cell.
    #[default]
    Neumann,
    Periodic,
}

/// Axis-aligned rectangle `[x0, x0 + width] x [y0, y0 + height]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Domain {
    pub x0: f64,
    pub y0: f64,
    pub width: f64,
    pub height: f64,
}

impl Default for Domain {
    fn default() -> Self {
        Self {
            x0: -1.0,
            y0: -1.0,
            width: 2.0,
            height: 2.0,
        }
    }
}

impl Domain {
    pub fn area(&self) -> f64 {
        self.width * self.height
    }
}

/// Net amount of each conserved quantity that entered the domain through its
/// boundary during a step, already multiplied by `dt` and the face lengths.
pub type BoundaryBudget = ConservedState;

#[derive(Clone, Debug, PartialEq)]
pub struct UniformGrid {
    pub nx: usize,
    pub ny: usize,
    pub dx: f64,
    pub dy: f64,
    pub domain: Domain,
    pub boundary: Boundary,
    /// Row-major with `GHOST` layers on every side.
    cells: Vec<ConservedState>,
}

impl UniformGrid {
    pub fn new(nx: usize, ny: usize, domain: Domain, boundary: Boundary) -> Self {
        assert!(nx > 0 && ny > 0, "grid needs at least one cell");
        Self {
            nx,
            ny,
            dx: domain.width / nx as f64,
            dy: domain.height / ny as f64,
            domain,
            boundary,
            cells: vec![ConservedState::ZERO; (nx + 2 * GHOST) * (ny + 2 * GHOST)],
        }
    }

    /// `2^level x 2^level` cells.
    pub fn with_level(level: u8, domain: Domain, boundary: Boundary) -> Self {
        let n = 1usize << level;
        Self::new(n, n, domain, boundary)
    }

    /// `log2(nx)` when the grid is square with a power-of-two size.
    pub fn level(&self) -> Option<u8> {
        (self.nx == self.ny && self.nx.is_power_of_two()).then(|| self.nx.trailing_zeros() as u8)
    }

    pub fn cell_count(&self) -> usize {
        self.nx * self.ny
    }

    pub fn cell_area(&self) -> f64 {
        self.dx * self.dy
    }

    pub fn center(&self, i: usize, j: usize) -> (f64, f64) {
        (
            self.domain.x0 + (i as f64 + 0.5) * self.dx,
            self.domain.y0 + (j as f64 + 0.5) * self.dy,
        )
    }

    #[inline]
    fn index(&self, i: isize, j: isize) -> usize {
        let g = GHOST as isize;
        debug_assert!(i >= -g && i < self.nx as isize + g && j >= -g && j < self.ny as isize + g);
        ((j + g) as usize) * (self.nx + 2 * GHOST) + (i + g) as usize
    }

    /// Interior or ghost cell; ghost indices run from `-GHOST`.
    #[inline]
    pub fn at(&self, i: isize, j: isize) -> &ConservedState {
        &self.cells[self.index(i, j)]
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> &ConservedState {
        self.at(i as isize, j as isize)
    }

    #[inline]
    pub fn get_mut(&mut self, i: usize, j: usize) -> &mut ConservedState {
        let k = self.index(i as isize, j as isize);
        &mut self.cells[k]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, q: ConservedState) {
        *self.get_mut(i, j) = q;
    }

    /// Interior cells in row-major order.
    pub fn interior(&self) -> impl Iterator<Item = (usize, usize, &ConservedState)> + '_ {
        (0..self.ny).flat_map(move |j| (0..self.nx).map(move |i| (i, j, self.get(i, j))))
    }

    pub fn fill(&mut self, f: impl Fn(f64, f64) -> ConservedState) {
        for j in 0..self.ny {
            for i in 0..self.nx {
                let (x, y) = self.center(i, j);
                self.set(i, j, f(x, y));
            }
        }
    }

    /// Area-weighted sum of every component over the interior.
    pub fn totals(&self) -> ConservedState {
        let mut sum = ConservedState::ZERO;
        for (_, _, q) in self.interior() {
            sum += *q;
        }
        self.cell_area() * sum
    }

    pub fn map_interior(&mut self, f: impl Fn(&ConservedState) -> ConservedState) {
        for j in 0..self.ny {
            for i in 0..self.nx {
                let q = f(self.get(i, j));
                self.set(i, j, q);
            }
        }
    }
}

/// Fill the ghost layers from the interior according to the grid's boundary.
pub fn apply_boundary(grid: &mut UniformGrid) {
    match grid.boundary {
        Boundary::Neumann => apply_neumann(grid),
        Boundary::Periodic => apply_periodic(grid),
    }
}

/// Zero-gradient ghost cells on all four sides, all components.
pub fn apply_neumann(grid: &mut UniformGrid) {
    fill_ghosts(grid, |k, n| k.clamp(0, n as isize - 1));
}

pub fn apply_periodic(grid: &mut UniformGrid) {
    fill_ghosts(grid, |k, n| k.rem_euclid(n as isize));
}

fn fill_ghosts(grid: &mut UniformGrid, map: impl Fn(isize, usize) -> isize) {
    let g = GHOST as isize;
    let (nx, ny) = (grid.nx as isize, grid.ny as isize);
    for j in -g..ny + g {
        for i in -g..nx + g {
            if (0..nx).contains(&i) && (0..ny).contains(&j) {
                continue;
            }
            let src = *grid.at(map(i, grid.nx), map(j, grid.ny));
            let k = grid.index(i, j);
            grid.cells[k] = src;
        }
    }
}

/// One forward-Euler update along `dir` using the current ghost layers.
fn sweep(
    grid: &mut UniformGrid,
    dir: Direction,
    gamma: f64,
    ch: f64,
    dt: f64,
) -> Result<BoundaryBudget> {
    let (n_along, n_across, h_along, h_across) = match dir {
        Direction::X => (grid.nx, grid.ny, grid.dx, grid.dy),
        Direction::Y => (grid.ny, grid.nx, grid.dy, grid.dx),
    };
    let cell = |g: &UniformGrid, a: isize, b: usize| -> ConservedState {
        match dir {
            Direction::X => *g.at(a, b as isize),
            Direction::Y => *g.at(b as isize, a),
        }
    };
    let dtdh = dt / h_along;
    let mut budget = ConservedState::ZERO;
    let mut fluxes = vec![ConservedState::ZERO; n_along + 1];
    for b in 0..n_across {
        for (a, f) in fluxes.iter_mut().enumerate() {
            let a = a as isize;
            let ql = cell(grid, a - 1, b);
            let qr = cell(grid, a, b);
            *f = interface_flux(dir, &ql, &qr, gamma, ch).map_err(|e| {
                let (i, j) = match dir {
                    Direction::X => (a, b as isize),
                    Direction::Y => (b as isize, a),
                };
                e.at(format!("{dir:?}-sweep interface before cell ({i}, {j})"))
            })?;
        }
        budget += fluxes[0] - fluxes[n_along];
        for a in 0..n_along {
            let (i, j) = match dir {
                Direction::X => (a, b),
                Direction::Y => (b, a),
            };
            let q = grid.get_mut(i, j);
            *q = *q - dtdh * (fluxes[a + 1] - fluxes[a]);
        }
    }
    Ok((dt * h_across) * budget)
}

/// Update every interior cell with the x-direction interface fluxes.
/// Ghost layers must already be filled.
pub fn sweep_x(grid: &mut UniformGrid, gamma: f64, ch: f64, dt: f64) -> Result<BoundaryBudget> {
    sweep(grid, Direction::X, gamma, ch, dt)
}

pub fn sweep_y(grid: &mut UniformGrid, gamma: f64, ch: f64, dt: f64) -> Result<BoundaryBudget> {
    sweep(grid, Direction::Y, gamma, ch, dt)
}

/// Multiplier applied to psi by the parabolic source over `dt`:
/// `exp(-dt ch^2 / c_p^2)` with `c_p^2 = cp2_over_ch * ch`.
#[inline]
pub fn psi_damping_factor(dt: f64, ch: f64, cp2_over_ch: f64) -> f64 {
    (-dt * ch / cp2_over_ch).exp()
}

pub fn damp_psi(grid: &mut UniformGrid, dt: f64, ch: f64, cp2_over_ch: f64) {
    let f = psi_damping_factor(dt, ch, cp2_over_ch);
    grid.map_interior(|q| ConservedState { psi: q.psi * f, ..*q });
}

/// Second stage of Heun's method: the mean of the old state and the twice
/// advanced state.
#[inline]
pub fn heun_average(q0: &ConservedState, q2: &ConservedState) -> ConservedState {
    0.5 * (*q0 + *q2)
}

/// `c_cfl * min(dx / (|u_x| + c_fx), dy / (|u_y| + c_fy))` over `states`.
pub fn cfl_time_step<'a>(
    states: impl IntoIterator<Item = &'a ConservedState>,
    dx: f64,
    dy: f64,
    gamma: f64,
    c_cfl: f64,
) -> Result<f64> {
    let mut best = f64::INFINITY;
    let mut any = false;
    for q in states {
        any = true;
        let w = to_primitive(q, gamma)?;
        let sx = w.ux.abs() + fast_speed(&w, w.bx, gamma);
        let sy = w.uy.abs() + fast_speed(&w, w.by, gamma);
        best = best.min(dx / sx).min(dy / sy);
    }
    if !any {
        return Err(Error::EmptyGrid);
    }
    Ok(c_cfl * best)
}

pub fn compute_dt(grid: &UniformGrid, gamma: f64, c_cfl: f64) -> Result<f64> {
    cfl_time_step(grid.interior().map(|(_, _, q)| q), grid.dx, grid.dy, gamma, c_cfl)
}

/// Time bookkeeping; the last step is clipped to land on `t_end` exactly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TimeController {
    pub t: f64,
    pub dt: f64,
    pub c_cfl: f64,
    pub t_end: f64,
}

impl TimeController {
    pub fn new(t_end: f64, c_cfl: f64) -> Self {
        Self {
            t: 0.0,
            dt: 0.0,
            c_cfl,
            t_end,
        }
    }

    pub fn finished(&self) -> bool {
        self.t >= self.t_end
    }

    /// Clip a CFL step so it does not pass `t_end` or the next `stop` time.
    pub fn clip(&self, dt_raw: f64, stop: Option<f64>) -> f64 {
        let mut target = self.t_end;
        if let Some(s) = stop {
            if s > self.t && s < target {
                target = s;
            }
        }
        if self.t + dt_raw >= target {
            target - self.t
        } else {
            dt_raw
        }
    }

    /// Advance by `dt`; lands exactly on `t_end` when `dt` was clipped to it.
    pub fn advance(&mut self, dt: f64, stop: Option<f64>) {
        self.dt = dt;
        let next = self.t + dt;
        self.t = match stop {
            Some(s) if (next - s).abs() <= 1e-14 * s.abs().max(1.0) => s,
            _ if (next - self.t_end).abs() <= 1e-14 * self.t_end.abs().max(1.0) => self.t_end,
            _ => next,
        };
    }
}

/// Physical and numerical parameters of a step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepParams {
    pub gamma: f64,
    pub ch: f64,
    pub cp2_over_ch: f64,
    /// Damp psi after every split stage instead of once after the Heun average.
    pub psi_damp_per_stage: bool,
}

impl StepParams {
    pub fn new(glm: &GlmParams, psi_damp_per_stage: bool) -> Self {
        Self {
            gamma: glm.gamma,
            ch: glm.ch,
            cp2_over_ch: glm.cp2_over_ch,
            psi_damp_per_stage,
        }
    }
}

/// `sweep_y . sweep_x`, plus psi damping when it is applied per stage.
pub fn split_step(grid: &mut UniformGrid, dt: f64, params: &StepParams) -> Result<BoundaryBudget> {
    apply_boundary(grid);
    let bx = sweep_x(grid, params.gamma, params.ch, dt)?;
    apply_boundary(grid);
    let by = sweep_y(grid, params.gamma, params.ch, dt)?;
    if params.psi_damp_per_stage {
        damp_psi(grid, dt, params.ch, params.cp2_over_ch);
    }
    Ok(bx + by)
}

/// One Heun step of size `dt` with `params.ch` frozen. Returns the boundary
/// budget of the step: the change of `grid.totals()` in exact arithmetic.
pub fn rk2_step(grid: &mut UniformGrid, dt: f64, params: &StepParams) -> Result<BoundaryBudget> {
    let q0 = grid.clone();
    let b1 = split_step(grid, dt, params)?;
    let b2 = split_step(grid, dt, params)?;
    for j in 0..grid.ny {
        for i in 0..grid.nx {
            let q = heun_average(q0.get(i, j), grid.get(i, j));
            grid.set(i, j, q);
        }
    }
    if !params.psi_damp_per_stage {
        damp_psi(grid, dt, params.ch, params.cp2_over_ch);
    }
    apply_boundary(grid);
    Ok(0.5 * (b1 + b2))
}

/// Result of [`advance_uniform`]: the step size, cleaning speed and budget.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct StepReport {
    pub dt: f64,
    pub ch: f64,
    pub budget: BoundaryBudget,
}

/// CFL step selection, `c_h` update and one Heun step on a uniform grid.
pub fn advance_uniform(
    grid: &mut UniformGrid,
    clock: &mut TimeController,
    glm: &GlmParams,
    psi_damp_per_stage: bool,
    stop: Option<f64>,
) -> Result<StepReport> {
    let dt_raw = compute_dt(grid, glm.gamma, glm.c_cfl)?;
    let dt = clock.clip(dt_raw, stop);
    // c_h comes from the unclipped CFL step: a short final step would
    // otherwise inflate the cleaning speed past the stability limit.
    let ch = compute_ch(grid.dx, grid.dy, dt_raw, glm.c_cfl)?;
    let params = StepParams {
        ch,
        ..StepParams::new(glm, psi_damp_per_stage)
    };
    let budget = rk2_step(grid, dt, &params)?;
    clock.advance(dt, stop);
    Ok(StepReport { dt, ch, budget })
}
