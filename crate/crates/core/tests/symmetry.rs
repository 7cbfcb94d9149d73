//! Mirror equivariance of the uniform solver on the four-quadrant data.

use glmmhd::fv::{advance_uniform, apply_boundary, Boundary, Domain, TimeController, UniformGrid};
use glmmhd::physics::{ConservedState, GlmParams};
use glmmhd::problems::RiemannQuadrants;

fn evolve(f: impl Fn(f64, f64) -> ConservedState) -> UniformGrid {
    let mut g = UniformGrid::with_level(5, Domain::default(), Boundary::Neumann);
    g.fill(f);
    apply_boundary(&mut g);
    let glm = GlmParams::default();
    let mut clock = TimeController::new(0.05, glm.c_cfl);
    while !clock.finished() {
        advance_uniform(&mut g, &mut clock, &glm, false, None).unwrap();
    }
    g
}

// psi is a scalar: a mirror flips the normal vector components only.
fn flip_x(q: ConservedState) -> ConservedState {
    ConservedState { mx: -q.mx, bx: -q.bx, ..q }
}

fn flip_y(q: ConservedState) -> ConservedState {
    ConservedState { my: -q.my, by: -q.by, ..q }
}

fn max_diff(a: &UniformGrid, b: &UniformGrid, map: impl Fn(usize, usize) -> (usize, usize), m: fn(ConservedState) -> ConservedState) -> f64 {
    let mut worst = 0.0f64;
    for (i, j, q) in a.interior() {
        let (k, l) = map(i, j);
        let p = m(*b.get(k, l));
        for s in 0..9 {
            worst = worst.max((q[s] - p[s]).abs());
        }
    }
    worst
}

#[test]
fn solver_commutes_with_mirrors() {
    let r = RiemannQuadrants::standard();
    let a = evolve(|x, y| r.state_at(x, y));
    let n = a.nx;
    let bx = evolve(|x, y| flip_x(r.state_at(-x, y)));
    let by = evolve(|x, y| flip_y(r.state_at(x, -y)));
    assert!(max_diff(&a, &bx, |i, j| (n - 1 - i, j), flip_x) < 1e-13);
    assert!(max_diff(&a, &by, |i, j| (i, n - 1 - j), flip_y) < 1e-13);
}
