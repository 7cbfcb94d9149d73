//! Cell-average multiresolution on a graded quadtree.
//!
//! Each step refines where details are significant, advances the leaves with
//! the finite-volume scheme (fluxes across level jumps are evaluated on the
//! finer side and shared), then coarsens where details have become small.

mod adapt;
mod evolve;
mod mesh;
pub mod predict;
mod threshold;

pub use adapt::{coarsen, compute_details, refine_for_evolution, DetailCoefficients, QuartetDetails};
pub use evolve::{
    compression_ratio, mr_step, rk2_leaf_step, CompressionHistory, FluxWorkspace, MrStepReport,
};
pub use mesh::{NodeKind, QuadtreeMesh};
pub use predict::{predict, project};
pub use threshold::{threshold_level, ThresholdMode, ThresholdPolicy};

/// Full tree at `max_level` from a pointwise initial condition, coarsened once.
pub fn initial_mesh(
    max_level: u8,
    domain: crate::fv::Domain,
    boundary: crate::fv::Boundary,
    policy: &ThresholdPolicy,
    f: impl Fn(f64, f64) -> crate::physics::ConservedState,
) -> crate::Result<QuadtreeMesh> {
    let mut mesh = QuadtreeMesh::full(max_level, domain, boundary, f);
    coarsen(&mut mesh, policy)?;
    Ok(mesh)
}
