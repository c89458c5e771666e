//! The Schrödinger operator `-Δ + V` on the box with Dirichlet walls, its
//! bound-state count, the comparison with the weighted sublevel pencil, and
//! the exact Dirichlet spectrum of a cube.

use log::warn;
use serde::{Deserialize, Serialize};

use crate::assemble::{sublevel_pencil, ClassifyOptions};
use crate::eigcount::{self, SymFactor};
use crate::error::{Error, Result};
use crate::model::{PotentialField, SpectralSummary};
use crate::sparse::SymSparse;

/// `(K_Ω + diag(V hⁿ), hⁿ I)` on the nodes off the box faces.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SchrodingerPencil {
    /// Grid index of each unknown.
    pub nodes: Vec<usize>,
    pub laplacian: SymSparse,
    pub potential: Vec<f64>,
    pub cell_volume: f64,
}

impl SchrodingerPencil {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    /// `K_Ω + diag(V hⁿ)`.
    pub fn operator(&self) -> SymSparse {
        self.laplacian.add_diagonal(&self.potential)
    }

    pub fn mass(&self) -> Vec<f64> {
        vec![self.cell_volume; self.order()]
    }
}

pub fn assemble_schrodinger(v: &PotentialField) -> SchrodingerPencil {
    let grid = v.grid();
    let n = grid.dimension() as i32;
    let h = grid.spacing();
    let nodes: Vec<usize> = (0..grid.node_count())
        .filter(|&i| !grid.on_box_boundary(i))
        .collect();
    let mut local = vec![usize::MAX; grid.node_count()];
    for (k, &g) in nodes.iter().enumerate() {
        local[g] = k;
    }
    let w = h.powi(n - 2);
    let mut triplets = Vec::with_capacity(nodes.len() * (1 + grid.dimension()));
    for (k, &g) in nodes.iter().enumerate() {
        triplets.push((k, k, 2.0 * grid.dimension() as f64 * w));
        for j in grid.neighbors(g) {
            if local[j] != usize::MAX && j > g {
                triplets.push((k, local[j], -w));
            }
        }
    }
    let cell = grid.cell_volume();
    SchrodingerPencil {
        potential: nodes.iter().map(|&g| v.values()[g] * cell).collect(),
        laplacian: SymSparse::from_triplets(nodes.len(), triplets),
        nodes,
        cell_volume: cell,
    }
}

/// `n₋(K_Ω + diag((V - e) hⁿ))`, the number of eigenvalues below `e`.
pub fn schrodinger_count(v: &PotentialField, e: f64) -> Result<usize> {
    let sp = assemble_schrodinger(v);
    let inr = SymFactor::of_sparse(&sp.operator().shifted(e, &sp.mass()))?.inertia();
    if inr.n_zero > 0 {
        return Err(Error::OnEigenvalue {
            shift: e,
            object: "Schrödinger operator",
        });
    }
    Ok(inr.n_minus)
}

/// Dense spectrum of the discrete Schrödinger operator.
pub fn schrodinger_spectrum(v: &PotentialField, want_vectors: bool) -> Result<SpectralSummary> {
    let sp = assemble_schrodinger(v);
    eigcount::pencil_eigs(&sp.operator(), &sp.mass(), want_vectors).map(|s| s.with_label("schrodinger"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReductionCheck {
    pub n_schrodinger: usize,
    pub n_weighted_full: usize,
    pub inequality_holds: bool,
    /// The potential had a positive part that was removed.
    pub clamped: bool,
}

/// Compares the bound states of `-Δ + V` below `e` with the eigenvalues
/// below `λ` of the weighted pencil on `{V < e}`. `V` is clamped to be
/// nonpositive first.
pub fn reduction_check(v: &PotentialField, e: f64, lambda: f64) -> Result<ReductionCheck> {
    if lambda < 1.0 {
        return Err(Error::Precondition(format!("λ = {lambda} must be at least 1")));
    }
    if e > 0.0 {
        return Err(Error::PositiveEnergy(e));
    }
    let clamped = v.values().iter().any(|&x| x > 0.0);
    let field = if clamped {
        warn!("potential has a positive part; clamping to V ≤ 0 for the reduction check");
        v.clamped_nonpositive()
    } else {
        v.clone()
    };
    let n_schrodinger = schrodinger_count(&field, e)?;
    let n_weighted_full = match sublevel_pencil(&field, e, ClassifyOptions::default()) {
        Ok(p) => eigcount::count_below(&p.stiffness, &p.mass, lambda)?,
        Err(Error::EmptySublevel) => 0,
        Err(other) => return Err(other),
    };
    Ok(ReductionCheck {
        n_schrodinger,
        n_weighted_full,
        inequality_holds: n_schrodinger <= n_weighted_full,
        clamped,
    })
}

/// Largest `μ L² / π²` accepted by `box_exact_count`.
pub const ENUMERATION_CAP: f64 = 1e6;

/// `#{k ∈ ℤ₊ⁿ : (π/L)² |k|² ≤ μ}`, the Dirichlet counting function of the
/// cube of side `L`.
pub fn box_exact_count(n: usize, side: f64, mu: f64) -> Result<u64> {
    if n == 0 {
        return Err(Error::Precondition("dimension must be positive".into()));
    }
    if !(mu >= 0.0) || !(side > 0.0) {
        return Err(Error::Precondition(format!("need μ ≥ 0 and L > 0, got {mu}, {side}")));
    }
    let radius_sq = mu * side * side / (std::f64::consts::PI * std::f64::consts::PI);
    if radius_sq > ENUMERATION_CAP {
        return Err(Error::EnumerationCap {
            radius_sq,
            cap: ENUMERATION_CAP,
        });
    }
    Ok(lattice_count(n, radius_sq))
}

fn lattice_count(dim: usize, r2: f64) -> u64 {
    if r2 < 1.0 {
        return 0;
    }
    if dim == 1 {
        let mut k = r2.sqrt().floor() as u64;
        while ((k + 1) * (k + 1)) as f64 <= r2 {
            k += 1;
        }
        while k > 0 && (k * k) as f64 > r2 {
            k -= 1;
        }
        return k;
    }
    let mut total = 0;
    let mut k = 1u64;
    while ((k * k) as f64) <= r2 {
        total += lattice_count(dim - 1, r2 - (k * k) as f64);
        k += 1;
    }
    total
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::GridSpec;

    #[test]
    fn free_path_spectrum() {
        let g = GridSpec::cube(1, 0.0, 4.0, 5).unwrap();
        let v = PotentialField::from_values(g, vec![0.0; 5]).unwrap();
        let s = schrodinger_spectrum(&v, false).unwrap();
        let r2 = 2f64.sqrt();
        for (a, b) in s.eigenvalues.iter().zip([2.0 - r2, 2.0, 2.0 + r2]) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn constant_potential_shifts_spectrum() {
        let g = GridSpec::cube(2, 0.0, 1.0, 7).unwrap();
        let zero = PotentialField::from_values(g.clone(), vec![0.0; 49]).unwrap();
        let shifted = PotentialField::from_values(g, vec![-0.75; 49]).unwrap();
        let a = schrodinger_spectrum(&zero, false).unwrap();
        let b = schrodinger_spectrum(&shifted, false).unwrap();
        for (x, y) in a.eigenvalues.iter().zip(&b.eigenvalues) {
            assert!((x - 0.75 - y).abs() < 1e-9);
        }
    }

    #[test]
    fn cube_counts() {
        let pi2 = std::f64::consts::PI.powi(2);
        assert_eq!(box_exact_count(3, 1.0, 3.0 * pi2 * (1.0 - 1e-12)).unwrap(), 0);
        assert_eq!(box_exact_count(3, 1.0, 3.0 * pi2).unwrap(), 1);
        assert_eq!(box_exact_count(3, 1.0, 100.0).unwrap(), 7);
        assert!(matches!(
            box_exact_count(3, 1.0, 1e7 * pi2),
            Err(Error::EnumerationCap { .. })
        ));
    }

    #[test]
    fn empty_sublevel_reduction() {
        let g = GridSpec::cube(2, 0.0, 1.0, 6).unwrap();
        let v = PotentialField::from_values(g, vec![0.0; 36]).unwrap();
        let r = reduction_check(&v, -0.5, 1.0).unwrap();
        assert_eq!((r.n_schrodinger, r.n_weighted_full, r.inequality_holds), (0, 0, true));
    }
}
