use crate::error::Result;
use crate::physics::{ConservedState, NVAR};

use super::mesh::{NodeKind, QuadtreeMesh};
use super::threshold::ThresholdPolicy;

/// Details of one sibling quartet.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuartetDetails {
    /// Level of the parent.
    pub level: u8,
    pub i: usize,
    pub j: usize,
    /// Details of the children `(1,0)`, `(0,1)` and `(1,1)`; the `(0,0)`
    /// detail is minus their sum because prediction conserves the mean.
    pub d: [ConservedState; 3],
}

impl QuartetDetails {
    pub fn all_four(&self) -> [ConservedState; 4] {
        [-1.0 * ((self.d[0] + self.d[1]) + self.d[2]), self.d[0], self.d[1], self.d[2]]
    }

    pub fn max_normalized(&self, scales: &[f64; NVAR]) -> f64 {
        self.all_four()
            .iter()
            .fold(0.0f64, |m, d| m.max(QuadtreeMesh::normalized(d, scales)))
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct DetailCoefficients {
    pub quartets: Vec<QuartetDetails>,
}

impl DetailCoefficients {
    /// Largest `|detail|` over all quartets and components.
    pub fn max_abs(&self) -> f64 {
        self.quartets
            .iter()
            .flat_map(|q| q.all_four())
            .flat_map(|d| d.to_array())
            .fold(0.0f64, |m, v| m.max(v.abs()))
    }
}

/// Details of every internal node's children.
pub fn compute_details(mesh: &mut QuadtreeMesh) -> DetailCoefficients {
    let internal: Vec<_> = mesh
        .nodes_of(NodeKind::Internal)
        .map(|(l, i, j, _)| (l, i, j))
        .collect();
    let quartets = internal
        .into_iter()
        .map(|(l, i, j)| QuartetDetails {
            level: l,
            i,
            j,
            d: [
                mesh.detail(l + 1, 2 * i + 1, 2 * j),
                mesh.detail(l + 1, 2 * i, 2 * j + 1),
                mesh.detail(l + 1, 2 * i + 1, 2 * j + 1),
            ],
        })
        .collect();
    DetailCoefficients { quartets }
}

/// Merge every quartet of leaves whose details all fall strictly below the
/// threshold of the parent level, finest first, when gradedness allows.
/// Returns the number of merges.
pub fn coarsen(mesh: &mut QuadtreeMesh, policy: &ThresholdPolicy) -> Result<usize> {
    let scales = mesh.component_scales();
    let mut merged = 0;
    for l in (0..mesh.max_level()).rev() {
        let eps = policy.level(l)?;
        let n = mesh.n(l);
        for j in 0..n {
            for i in 0..n {
                if mesh.kind(l, i, j) != NodeKind::Internal || !mesh.can_merge(l, i, j) {
                    continue;
                }
                let mut worst = 0.0f64;
                for b in 0..2 {
                    for a in 0..2 {
                        let d = mesh.detail(l + 1, 2 * i + a, 2 * j + b);
                        worst = worst.max(QuadtreeMesh::normalized(&d, &scales));
                    }
                }
                if worst < eps {
                    mesh.merge(l, i, j);
                    merged += 1;
                }
            }
        }
    }
    Ok(merged)
}

/// Extend the mesh so it can hold the solution one step ahead: every leaf
/// whose detail reaches half the threshold has its same-level neighbours
/// created and, below the finest level, is split. Returns the number of
/// significant leaves.
pub fn refine_for_evolution(mesh: &mut QuadtreeMesh, policy: &ThresholdPolicy) -> Result<usize> {
    let scales = mesh.component_scales();
    let mut significant = Vec::new();
    for (l, i, j) in mesh.leaf_positions() {
        if l == 0 {
            continue;
        }
        let eps = policy.level(l - 1)?;
        let d = mesh.detail(l, i, j);
        if QuadtreeMesh::normalized(&d, &scales) >= 0.5 * eps {
            significant.push((l, i, j));
        }
    }
    for &(l, i, j) in &significant {
        let nbrs: Vec<_> = mesh.neighbours(l, i, j).collect();
        for (ni, nj) in nbrs {
            mesh.ensure_node(l, ni, nj)?;
        }
        if l < mesh.max_level() {
            mesh.refine_leaf(l, i, j)?;
        }
    }
    mesh.project_all();
    Ok(significant.len())
}
