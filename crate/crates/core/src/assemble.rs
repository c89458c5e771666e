//! Sublevel-set decomposition and assembly of the weighted Dirichlet pencil.

use std::collections::VecDeque;

use crate::eigcount::SymFactor;
use crate::error::{Error, Result};
use crate::model::{AssembledPencil, PotentialField, SublevelDecomposition};
use crate::sparse::SymSparse;

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct ClassifyOptions {
    /// Accept `e > 0` for exploration.
    pub allow_positive: bool,
}

pub fn classify_nodes(v: &PotentialField, e: f64) -> Result<SublevelDecomposition> {
    classify_nodes_with(v, e, ClassifyOptions::default())
}

pub fn classify_nodes_with(
    v: &PotentialField,
    e: f64,
    opts: ClassifyOptions,
) -> Result<SublevelDecomposition> {
    if !e.is_finite() {
        return Err(Error::Precondition(format!("energy level {e} is not finite")));
    }
    if e > 0.0 && !opts.allow_positive {
        return Err(Error::PositiveEnergy(e));
    }
    let grid = v.grid();
    let total = grid.node_count();
    let inside: Vec<bool> = v.values().iter().map(|&x| x < e).collect();
    let interior: Vec<usize> = (0..total).filter(|&i| inside[i]).collect();
    if interior.is_empty() {
        return Err(Error::EmptySublevel);
    }

    let mut is_boundary = vec![false; total];
    let mut edges = Vec::new();
    for &i in &interior {
        for j in grid.neighbors(i) {
            if inside[j] {
                if i < j {
                    edges.push((i, j));
                }
            } else {
                is_boundary[j] = true;
                edges.push((i.min(j), i.max(j)));
            }
        }
    }
    edges.sort_unstable();
    let boundary: Vec<usize> = (0..total).filter(|&i| is_boundary[i]).collect();

    let mut label = vec![usize::MAX; total];
    let mut components = Vec::new();
    for &start in &interior {
        if label[start] != usize::MAX {
            continue;
        }
        let id = components.len();
        let mut members = vec![start];
        let mut touches_boundary = false;
        label[start] = id;
        let mut queue = VecDeque::from([start]);
        while let Some(x) = queue.pop_front() {
            for y in grid.neighbors(x) {
                if inside[y] {
                    if label[y] == usize::MAX {
                        label[y] = id;
                        members.push(y);
                        queue.push_back(y);
                    }
                } else {
                    touches_boundary = true;
                }
            }
        }
        if !touches_boundary {
            return Err(Error::DetachedComponent {
                component: id,
                size: members.len(),
            });
        }
        members.sort_unstable();
        components.push(members);
    }

    // Extreme points of I ∪ B are boundary nodes: every interior node is the
    // midpoint of two of its neighbours.
    let mut diameter: f64 = 0.0;
    for (k, &a) in boundary.iter().enumerate() {
        for &b in &boundary[k + 1..] {
            diameter = diameter.max(grid.distance(a, b));
        }
    }

    Ok(SublevelDecomposition {
        level: e,
        interior,
        boundary,
        edges,
        components,
        diameter,
    })
}

/// Builds `K`, `M` and `σ` and checks that the Dirichlet block is positive
/// definite.
pub fn assemble_pencil(dec: &SublevelDecomposition, v: &PotentialField) -> Result<AssembledPencil> {
    let grid = v.grid();
    let n = grid.dimension() as i32;
    let h = grid.spacing();
    let e = dec.level;

    let mut nodes: Vec<usize> = dec.interior.iter().chain(&dec.boundary).copied().collect();
    nodes.sort_unstable();
    let mut local = vec![usize::MAX; grid.node_count()];
    for (k, &g) in nodes.iter().enumerate() {
        local[g] = k;
    }

    let w = h.powi(n - 2);
    let mut triplets = Vec::with_capacity(3 * dec.edges.len());
    for &(a, b) in &dec.edges {
        let (la, lb) = (local[a], local[b]);
        if la == usize::MAX || lb == usize::MAX {
            return Err(Error::Precondition(format!(
                "edge ({a}, {b}) leaves the decomposition"
            )));
        }
        triplets.push((la, la, w));
        triplets.push((lb, lb, w));
        triplets.push((la, lb, -w));
    }
    let stiffness = SymSparse::from_triplets(nodes.len(), triplets);

    let cell = grid.cell_volume();
    let mut mass = vec![0.0; nodes.len()];
    for &i in &dec.interior {
        mass[local[i]] = (e - v.values()[i]).max(0.0) * cell;
    }
    let interior: Vec<usize> = dec.interior.iter().map(|&i| local[i]).collect();
    let boundary: Vec<usize> = dec.boundary.iter().map(|&b| local[b]).collect();

    let mut in_interior = vec![false; grid.node_count()];
    for &i in &dec.interior {
        in_interior[i] = true;
    }
    let face = h.powi(n - 1);
    let sigma = dec
        .boundary
        .iter()
        .map(|&b| grid.neighbors(b).filter(|&j| in_interior[j]).count() as f64 * face)
        .collect();

    let pencil = AssembledPencil {
        grid: grid.clone(),
        level: e,
        nodes,
        stiffness,
        mass,
        interior,
        boundary,
        sigma,
    };
    let inr = SymFactor::of_sparse(&pencil.dirichlet_stiffness())?.inertia();
    if inr.n_plus != pencil.interior.len() {
        return Err(Error::SingularDirichletBlock {
            index: inr.n_plus,
            pivot: 0.0,
        });
    }
    Ok(pencil)
}

/// `classify_nodes_with` followed by `assemble_pencil`.
pub fn sublevel_pencil(v: &PotentialField, e: f64, opts: ClassifyOptions) -> Result<AssembledPencil> {
    let dec = classify_nodes_with(v, e, opts)?;
    assemble_pencil(&dec, v)
}
