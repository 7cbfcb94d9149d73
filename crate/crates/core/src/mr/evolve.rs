use crate::error::{Error, Result};
use crate::fv::{
    cfl_time_step, heun_average, psi_damping_factor, BoundaryBudget, StepParams, TimeController,
};
use crate::physics::{compute_ch, ConservedState, GlmParams};
use crate::riemann::{interface_flux, Direction};

use super::adapt::{coarsen, refine_for_evolution};
use super::mesh::{NodeKind, QuadtreeMesh};
use super::threshold::ThresholdPolicy;

/// Per-level face-flux buffers reused across sweeps.
#[derive(Clone, Debug, Default)]
pub struct FluxWorkspace {
    faces: Vec<Vec<ConservedState>>,
}

impl FluxWorkspace {
    fn prepare(&mut self, mesh: &QuadtreeMesh) {
        if self.faces.len() != mesh.max_level() as usize + 1 {
            self.faces = (0..=mesh.max_level())
                .map(|l| {
                    let n = mesh.n(l);
                    vec![ConservedState::ZERO; (n + 1) * n]
                })
                .collect();
        }
    }
}

/// `(i, j)` of the cell at position `along` on line `across`.
#[inline]
fn cell(dir: Direction, along: usize, across: usize) -> (usize, usize) {
    match dir {
        Direction::X => (along, across),
        Direction::Y => (across, along),
    }
}

#[inline]
fn usable(k: NodeKind) -> bool {
    matches!(k, NodeKind::Leaf | NodeKind::Virtual)
}

/// Forward-Euler update of every leaf along `dir`.
///
/// A face is evaluated on the finer of its two sides: same-level leaves share
/// a face directly, a leaf next to a coarser leaf uses that leaf's virtual
/// child, and a coarse leaf next to finer leaves takes the mean of the two
/// fine-face fluxes. Both sides of a level jump therefore see the same
/// fluxes and the update is conservative.
fn sweep(
    mesh: &mut QuadtreeMesh,
    ws: &mut FluxWorkspace,
    dir: Direction,
    gamma: f64,
    ch: f64,
    dt: f64,
) -> Result<BoundaryBudget> {
    ws.prepare(mesh);
    mesh.refresh_virtual();
    let top = mesh.max_level();

    for l in 0..=top {
        let n = mesh.n(l);
        let buf = &mut ws.faces[l as usize];
        for b in 0..n {
            for f in 0..=n {
                let a_l = mesh.wrap(l, f as i64 - 1);
                let a_r = mesh.wrap(l, f as i64);
                let (il, jl) = cell(dir, a_l, b);
                let (ir, jr) = cell(dir, a_r, b);
                let (kl, kr) = (mesh.kind(l, il, jl), mesh.kind(l, ir, jr));
                let need = (kl == NodeKind::Leaf && usable(kr)) || (kr == NodeKind::Leaf && usable(kl));
                if !need {
                    continue;
                }
                buf[b * (n + 1) + f] =
                    interface_flux(dir, mesh.value(l, il, jl), mesh.value(l, ir, jr), gamma, ch)
                        .map_err(|e| e.at(format!("{dir:?}-sweep level {l} face {f} line {b}")))?;
            }
        }
    }

    let mut budget = ConservedState::ZERO;
    for l in 0..=top {
        let n = mesh.n(l);
        let (h_along, h_across) = match dir {
            Direction::X => (mesh.dx(l), mesh.dy(l)),
            Direction::Y => (mesh.dy(l), mesh.dx(l)),
        };
        let dtdh = dt / h_along;
        for b in 0..n {
            for a in 0..n {
                let (i, j) = cell(dir, a, b);
                if mesh.kind(l, i, j) != NodeKind::Leaf {
                    continue;
                }
                let face = |f: usize, nbr: i64| -> ConservedState {
                    let (ni, nj) = cell(dir, mesh.wrap(l, nbr), b);
                    if mesh.kind(l, ni, nj) == NodeKind::Internal {
                        let fine = &ws.faces[l as usize + 1];
                        let m = 2 * n + 1;
                        0.5 * (fine[2 * b * m + 2 * f] + fine[(2 * b + 1) * m + 2 * f])
                    } else {
                        ws.faces[l as usize][b * (n + 1) + f]
                    }
                };
                let fl = face(a, a as i64 - 1);
                let fr = face(a + 1, a as i64 + 1);
                if a == 0 {
                    budget += (dt * h_across) * fl;
                }
                if a + 1 == n {
                    budget += (-dt * h_across) * fr;
                }
                let q = mesh.value_mut(l, i, j);
                *q = *q - dtdh * (fr - fl);
            }
        }
    }
    mesh.project_all();
    Ok(budget)
}

fn damp_leaves(mesh: &mut QuadtreeMesh, dt: f64, ch: f64, cp2_over_ch: f64) {
    let f = psi_damping_factor(dt, ch, cp2_over_ch);
    for (l, i, j) in mesh.leaf_positions() {
        let q = mesh.value_mut(l, i, j);
        q.psi *= f;
    }
    mesh.project_all();
}

fn split_step(
    mesh: &mut QuadtreeMesh,
    ws: &mut FluxWorkspace,
    dt: f64,
    params: &StepParams,
) -> Result<BoundaryBudget> {
    let bx = sweep(mesh, ws, Direction::X, params.gamma, params.ch, dt)?;
    let by = sweep(mesh, ws, Direction::Y, params.gamma, params.ch, dt)?;
    if params.psi_damp_per_stage {
        damp_leaves(mesh, dt, params.ch, params.cp2_over_ch);
    }
    Ok(bx + by)
}

/// One Heun step of the leaves on a fixed mesh. Virtual leaves must already
/// be installed.
pub fn rk2_leaf_step(
    mesh: &mut QuadtreeMesh,
    ws: &mut FluxWorkspace,
    dt: f64,
    params: &StepParams,
) -> Result<BoundaryBudget> {
    let leaves = mesh.leaf_positions();
    let q0: Vec<ConservedState> = leaves.iter().map(|&(l, i, j)| *mesh.value(l, i, j)).collect();
    let b1 = split_step(mesh, ws, dt, params)?;
    let b2 = split_step(mesh, ws, dt, params)?;
    for (&(l, i, j), old) in leaves.iter().zip(&q0) {
        let q = mesh.value_mut(l, i, j);
        *q = heun_average(old, q);
    }
    if params.psi_damp_per_stage {
        mesh.project_all();
    } else {
        damp_leaves(mesh, dt, params.ch, params.cp2_over_ch);
    }
    Ok(0.5 * (b1 + b2))
}

/// Outcome of one adaptive step.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MrStepReport {
    pub dt: f64,
    pub ch: f64,
    pub budget: BoundaryBudget,
    /// Leaves advanced in time.
    pub leaves_evolved: usize,
    pub virtual_count: usize,
    /// Leaves of the adapted mesh at the end of the step.
    pub leaves_after: usize,
}

impl MrStepReport {
    /// Cells held during the evolution: leaves plus virtual leaves.
    pub fn memory_cells(&self) -> usize {
        self.leaves_evolved + self.virtual_count
    }
}

/// Refinement, evolution on the extended mesh, then coarsening.
pub fn mr_step(
    mesh: &mut QuadtreeMesh,
    ws: &mut FluxWorkspace,
    clock: &mut TimeController,
    glm: &GlmParams,
    policy: &ThresholdPolicy,
    psi_damp_per_stage: bool,
    stop: Option<f64>,
) -> Result<MrStepReport> {
    refine_for_evolution(mesh, policy)?;
    let virtual_count = mesh.install_virtual_leaves();
    let leaves_evolved = mesh.leaf_count();

    let finest = mesh.finest_leaf_level();
    let (dx, dy) = (mesh.dx(finest), mesh.dy(finest));
    let dt_raw = cfl_time_step(mesh.leaves().map(|(_, _, _, q)| q), dx, dy, glm.gamma, glm.c_cfl)?;
    let dt = clock.clip(dt_raw, stop);
    if !(dt > 0.0) {
        return Err(Error::ZeroTimeStep { dt });
    }
    let ch = compute_ch(dx, dy, dt_raw, glm.c_cfl)?;
    let params = StepParams {
        ch,
        ..StepParams::new(glm, psi_damp_per_stage)
    };
    let step = rk2_leaf_step(mesh, ws, dt, &params);
    mesh.clear_virtual_leaves();
    let budget = step?;

    coarsen(mesh, policy)?;
    clock.advance(dt, stop);
    Ok(MrStepReport {
        dt,
        ch,
        budget,
        leaves_evolved,
        virtual_count,
        leaves_after: mesh.leaf_count(),
    })
}

/// Leaf counts of the adapted mesh after every step.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct CompressionHistory {
    pub leaf_counts: Vec<usize>,
    /// Cells of the uniform finest grid.
    pub full_cells: usize,
}

impl CompressionHistory {
    pub fn new(max_level: u8) -> Self {
        Self {
            leaf_counts: Vec::new(),
            full_cells: 1usize << (2 * max_level as usize),
        }
    }

    pub fn push(&mut self, leaves: usize) {
        self.leaf_counts.push(leaves);
    }
}

/// `100 sum(C_n) / (N_full N)` in percent.
pub fn compression_ratio(history: &CompressionHistory) -> Result<f64> {
    if history.leaf_counts.is_empty() {
        return Err(Error::EmptyHistory);
    }
    let sum: usize = history.leaf_counts.iter().sum();
    Ok(100.0 * sum as f64 / (history.full_cells as f64 * history.leaf_counts.len() as f64))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fv::{rk2_step, Boundary, Domain, UniformGrid};
    use crate::physics::{to_conserved, PrimitiveState, NVAR};

    const GAMMA: f64 = 5.0 / 3.0;

    fn state(rho: f64, p: f64, u: [f64; 3], b: [f64; 3]) -> ConservedState {
        to_conserved(
            &PrimitiveState {
                rho,
                p,
                ux: u[0],
                uy: u[1],
                uz: u[2],
                bx: b[0],
                by: b[1],
                bz: b[2],
                psi: 0.0,
            },
            GAMMA,
        )
        .unwrap()
    }

    fn blast(x: f64, y: f64) -> ConservedState {
        if x * x + y * y < 0.2 {
            state(2.0, 5.0, [0.1, 0.0, 0.0], [0.5, 0.3, 0.1])
        } else {
            state(1.0, 1.0, [0.0, 0.2, 0.0], [0.5, 0.3, 0.1])
        }
    }

    #[test]
    fn compression_examples() {
        let mut h = CompressionHistory::new(3);
        assert!(matches!(compression_ratio(&h), Err(Error::EmptyHistory)));
        h.push(64);
        h.push(64);
        assert_eq!(compression_ratio(&h).unwrap(), 100.0);
        let mut half = CompressionHistory::new(3);
        for _ in 0..5 {
            half.push(32);
        }
        assert_eq!(compression_ratio(&half).unwrap(), 50.0);
    }

    #[test]
    fn full_mesh_step_equals_uniform_step() {
        for boundary in [Boundary::Neumann, Boundary::Periodic] {
            let mut grid = UniformGrid::with_level(4, Domain::default(), boundary);
            grid.fill(blast);
            let mut mesh = QuadtreeMesh::from_uniform(&grid).unwrap();
            let params = StepParams {
                gamma: GAMMA,
                ch: 2.0,
                cp2_over_ch: 0.18,
                psi_damp_per_stage: false,
            };
            let mut ws = FluxWorkspace::default();
            for _ in 0..3 {
                rk2_step(&mut grid, 0.01, &params).unwrap();
                rk2_leaf_step(&mut mesh, &mut ws, 0.01, &params).unwrap();
            }
            for (i, j, q) in grid.interior() {
                assert_eq!(q, mesh.value(4, i, j), "{boundary:?} cell ({i},{j})");
            }
        }
    }

    #[test]
    fn level_jump_budget_closes() {
        let policy = ThresholdPolicy::harten(0.05, 4.0, 5);
        let mut mesh = QuadtreeMesh::full(5, Domain::default(), Boundary::Periodic, blast);
        coarsen(&mut mesh, &policy).unwrap();
        assert!(mesh.level_histogram().iter().filter(|c| **c > 0).count() > 1);
        let mut ws = FluxWorkspace::default();
        let mut clock = TimeController::new(0.05, 0.3);
        let glm = GlmParams::default();
        while !clock.finished() {
            let before = mesh.totals();
            let r = mr_step(&mut mesh, &mut ws, &mut clock, &glm, &policy, false, None).unwrap();
            let after = mesh.totals();
            mesh.check_graded().unwrap();
            assert!(r.virtual_count > 0);
            for k in 0..8 {
                let d = after[k] - before[k] - r.budget[k];
                assert!(d.abs() <= 1e-12 * before[k].abs().max(1.0), "slot {k}: {d}");
            }
            assert!(r.budget.to_array().iter().take(NVAR).all(|b| b.abs() < 1e-13));
        }
    }

    #[test]
    fn static_state_keeps_root_only_mesh() {
        let policy = ThresholdPolicy::harten(0.01, 4.0, 4);
        let c = state(1.0, 1.0, [0.0; 3], [0.3, 0.2, 0.0]);
        let mut mesh = QuadtreeMesh::root(4, Domain::default(), Boundary::Neumann, c);
        let mut ws = FluxWorkspace::default();
        let mut clock = TimeController::new(0.1, 0.3);
        let r = mr_step(&mut mesh, &mut ws, &mut clock, &GlmParams::default(), &policy, false, None).unwrap();
        assert_eq!(r.leaves_after, 1);
        assert_eq!(r.virtual_count, 0);
        assert_eq!(*mesh.value(0, 0, 0), c);
    }
}
