//! Eigenvalue counting through matrix inertia.
//!
//! By Sylvester's law of inertia, the number of eigenvalues of the pencil
//! `(K, M)` below `λ` equals the number of negative pivots in any
//! `L D Lᵀ` factorization of `K - λM`. One factorization per shift gives an
//! exact integer count; no eigenvalues are computed. Dense eigensolvers are
//! kept only as an oracle for testing and for the heat-trace quantities
//! that need the full spectrum.

mod band;
mod dense;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

pub use band::BandLdl;
pub use dense::DenseLdl;

use crate::error::{Error, Result};
use crate::model::{Inertia, SpectralSummary};
use crate::sparse::SymSparse;

/// Largest order accepted by the dense eigensolver and the dense fallback.
pub const DENSE_CAP: usize = 4000;

/// Below this order sparse matrices go straight to the dense factorization.
const DENSE_CUTOVER: usize = 48;

/// Relative threshold under which a pivot counts as zero.
pub const ZERO_PIVOT_REL: f64 = 1e-12;

/// Relative nudge applied to a shift that lands on a spectrum.
pub const NUDGE_REL: f64 = 1e-9;

pub(crate) fn zero_pivot_tolerance(max_abs: f64) -> f64 {
    ZERO_PIVOT_REL * max_abs
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub(crate) enum Block {
    One { at: usize, d: f64 },
    Two { at: usize, d11: f64, d21: f64, d22: f64 },
}

impl Block {
    fn span(&self) -> (usize, usize) {
        match *self {
            Block::One { at, .. } => (at, 1),
            Block::Two { at, .. } => (at, 2),
        }
    }

    fn solve_diagonal(&self, y: &mut [f64]) {
        match *self {
            Block::One { at, d } => y[at] /= d,
            Block::Two { at, d11, d21, d22 } => {
                let det = d11 * d22 - d21 * d21;
                let (a, b) = (y[at], y[at + 1]);
                y[at] = (d22 * a - d21 * b) / det;
                y[at + 1] = (d11 * b - d21 * a) / det;
            }
        }
    }
}

fn classify_value(v: f64, tau0: f64) -> Inertia {
    let mut out = Inertia::default();
    if v.abs() <= tau0 {
        out.n_zero = 1;
    } else if v < 0.0 {
        out.n_minus = 1;
    } else {
        out.n_plus = 1;
    }
    out
}

pub(crate) fn classify_block(block: &Block, tau0: f64) -> Inertia {
    match *block {
        Block::One { d, .. } => classify_value(d, tau0),
        Block::Two { d11, d21, d22, .. } => {
            let mean = 0.5 * (d11 + d22);
            let rad = (0.25 * (d11 - d22).powi(2) + d21 * d21).sqrt();
            classify_value(mean - rad, tau0) + classify_value(mean + rad, tau0)
        }
    }
}

/// A symmetric-indefinite factorization from whichever backend applied.
#[derive(Clone, Debug)]
pub enum SymFactor {
    Dense(DenseLdl),
    Band(BandLdl),
}

impl SymFactor {
    pub fn of_dense(a: &DMatrix<f64>) -> Result<Self> {
        if a.nrows() > DENSE_CAP {
            return Err(Error::SizeCap {
                order: a.nrows(),
                cap: DENSE_CAP,
            });
        }
        DenseLdl::factor(a).map(SymFactor::Dense)
    }

    pub fn of_sparse(a: &SymSparse) -> Result<Self> {
        let n = a.order();
        if let Some(i) = (0..n).find(|&i| a.row(i).iter().any(|(_, v)| !v.is_finite())) {
            return Err(Error::FactorizationBreakdown {
                index: i,
                pivot: f64::NAN,
            });
        }
        let bw = a.bandwidth();
        if n <= DENSE_CUTOVER || 3 * bw >= n {
            return Self::of_dense(&a.to_dense());
        }
        let tau0 = zero_pivot_tolerance(a.max_abs());
        match BandLdl::factor(a, tau0) {
            Some(f) => Ok(SymFactor::Band(f)),
            None if n <= DENSE_CAP => Self::of_dense(&a.to_dense()),
            None => Err(Error::FactorizationBreakdown {
                index: n,
                pivot: f64::NAN,
            }),
        }
    }

    pub fn inertia(&self) -> Inertia {
        match self {
            SymFactor::Dense(f) => f.inertia(),
            SymFactor::Band(f) => f.inertia(),
        }
    }

    pub fn solve_in_place(&self, b: &mut [f64]) {
        match self {
            SymFactor::Dense(f) => f.solve_in_place(b),
            SymFactor::Band(f) => f.solve_in_place(b),
        }
    }

    /// Solves for every column of `rhs`.
    pub fn solve_columns(&self, rhs: &DMatrix<f64>) -> DMatrix<f64> {
        let mut out = rhs.clone();
        for mut c in out.column_iter_mut() {
            let mut v: Vec<f64> = c.iter().copied().collect();
            self.solve_in_place(&mut v);
            c.copy_from_slice(&v);
        }
        out
    }
}

/// Inertia of a dense symmetric matrix.
pub fn inertia(a: &DMatrix<f64>) -> Result<Inertia> {
    SymFactor::of_dense(a).map(|f| f.inertia())
}

/// Inertia of a sparse symmetric matrix (banded fast path).
pub fn inertia_sparse(a: &SymSparse) -> Result<Inertia> {
    SymFactor::of_sparse(a).map(|f| f.inertia())
}

fn null_support(mass: &[f64]) -> Vec<usize> {
    (0..mass.len()).filter(|&i| mass[i] == 0.0).collect()
}

/// Checks that `K` is positive definite on the coordinates where `M` vanishes.
pub fn check_definite_on_null(k: &SymSparse, mass: &[f64]) -> Result<()> {
    if mass.len() != k.order() {
        return Err(Error::DimensionMismatch(format!(
            "mass has {} entries for order {}",
            mass.len(),
            k.order()
        )));
    }
    if let Some(i) = mass.iter().position(|&m| m < 0.0 || !m.is_finite()) {
        return Err(Error::Precondition(format!("mass entry {i} is negative")));
    }
    let z = null_support(mass);
    if z.is_empty() {
        return Ok(());
    }
    let inr = inertia_sparse(&k.principal(&z))?;
    if inr.n_plus != z.len() {
        return Err(Error::Precondition(
            "stiffness is not positive definite on the null space of the mass".into(),
        ));
    }
    Ok(())
}

/// Number of finite eigenvalues of `(K, M)` strictly below `λ`, as
/// `n₋(K - λM)`. Fails with `OnEigenvalue` when `K - λM` is singular.
pub fn count_below(k: &SymSparse, mass: &[f64], lambda: f64) -> Result<usize> {
    check_definite_on_null(k, mass)?;
    count_below_unchecked(k, mass, lambda)
}

pub(crate) fn count_below_unchecked(k: &SymSparse, mass: &[f64], lambda: f64) -> Result<usize> {
    let inr = inertia_sparse(&k.shifted(lambda, mass))?;
    if inr.n_zero > 0 {
        return Err(Error::OnEigenvalue {
            shift: lambda,
            object: "K - λM",
        });
    }
    Ok(inr.n_minus)
}

/// Retries `f` with `λ(1 + 10⁻⁹)ʲ` while it reports `OnEigenvalue`.
pub fn with_nudge<T>(lambda: f64, mut f: impl FnMut(f64) -> Result<T>) -> Result<(f64, T)> {
    let mut l = lambda;
    for _ in 0..8 {
        match f(l) {
            Err(Error::OnEigenvalue { .. }) | Err(Error::ResolventViolation { .. }) => {
                l = if l == 0.0 { NUDGE_REL } else { l * (1.0 + NUDGE_REL) };
            }
            other => return other.map(|v| (l, v)),
        }
    }
    f(l).map(|v| (l, v))
}

/// The `k`-th smallest finite eigenvalue (1-based) by bisection on counts.
pub fn kth_eigenvalue(k: &SymSparse, mass: &[f64], index: usize, rel_tol: f64) -> Result<f64> {
    check_definite_on_null(k, mass)?;
    let finite = mass.iter().filter(|&&m| m > 0.0).count();
    if index == 0 || index > finite {
        return Err(Error::Precondition(format!(
            "eigenvalue index {index} outside 1..={finite}"
        )));
    }
    let count = |l: f64| with_nudge(l, |s| count_below_unchecked(k, mass, s)).map(|r| r.1);
    let (mut lo, mut hi) = (-1.0f64, 1.0f64);
    while count(lo)? >= index {
        lo *= 2.0;
    }
    while count(hi)? < index {
        hi *= 2.0;
    }
    while hi - lo > rel_tol * hi.abs().max(lo.abs()).max(f64::MIN_POSITIVE) {
        let mid = 0.5 * (lo + hi);
        if count(mid)? >= index {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Summary of the counting data of a pencil at one shift.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CountAt {
    pub lambda: f64,
    pub count: usize,
}

/// All finite eigenvalues of `(K, M)` with `M` diagonal, by eliminating the
/// massless coordinates and calling the dense symmetric eigensolver.
pub fn pencil_eigs(k: &SymSparse, mass: &[f64], want_vectors: bool) -> Result<SpectralSummary> {
    let n = k.order();
    if n > DENSE_CAP {
        return Err(Error::SizeCap {
            order: n,
            cap: DENSE_CAP,
        });
    }
    check_definite_on_null(k, mass)?;
    let p: Vec<usize> = (0..n).filter(|&i| mass[i] > 0.0).collect();
    if p.is_empty() {
        return Ok(SpectralSummary {
            label: "pencil".into(),
            eigenvalues: Vec::new(),
            eigenvectors: want_vectors.then(|| DMatrix::zeros(n, 0)),
        });
    }
    let z = null_support(mass);
    let kd = k.to_dense();
    let kpp = kd.select_rows(&p).select_columns(&p);
    let (reduced, elim) = if z.is_empty() {
        (kpp, None)
    } else {
        let kzz = kd.select_rows(&z).select_columns(&z);
        let kzp = kd.select_rows(&z).select_columns(&p);
        let chol = kzz.cholesky().ok_or_else(|| {
            Error::Precondition("stiffness is not positive definite on null(M)".into())
        })?;
        let x = chol.solve(&kzp);
        (kpp - kzp.transpose() * &x, Some(x))
    };
    let scale: Vec<f64> = p.iter().map(|&i| 1.0 / mass[i].sqrt()).collect();
    let mut a = reduced;
    for j in 0..a.ncols() {
        for i in 0..a.nrows() {
            a[(i, j)] *= scale[i] * scale[j];
        }
    }
    let a = 0.5 * (&a + a.transpose());

    if !want_vectors {
        let mut ev: Vec<f64> = a.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        return Ok(SpectralSummary {
            label: "pencil".into(),
            eigenvalues: ev,
            eigenvectors: None,
        });
    }
    let eig = a.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let mut vectors = DMatrix::zeros(n, p.len());
    for (col, &src) in order.iter().enumerate() {
        let y = eig.eigenvectors.column(src);
        let up = DVector::from_iterator(p.len(), y.iter().zip(&scale).map(|(v, s)| v * s));
        for (r, &i) in p.iter().enumerate() {
            vectors[(i, col)] = up[r];
        }
        if let Some(x) = &elim {
            let uz = -(x * &up);
            for (r, &i) in z.iter().enumerate() {
                vectors[(i, col)] = uz[r];
            }
        }
    }
    Ok(SpectralSummary {
        label: "pencil".into(),
        eigenvalues: order.iter().map(|&i| eig.eigenvalues[i]).collect(),
        eigenvectors: Some(vectors),
    })
}

impl SpectralSummary {
    pub fn with_label(mut self, label: impl Into<String>) -> Self {
        self.label = label.into();
        self
    }

    /// `#{μ_i < λ}`.
    pub fn count_below(&self, lambda: f64) -> usize {
        self.eigenvalues.partition_point(|&m| m < lambda)
    }
}

/// `Σ_i exp(-t μ_i)`; requires `t > 0`.
pub fn heat_trace(s: &SpectralSummary, t: f64) -> f64 {
    assert!(t > 0.0, "heat trace needs t > 0");
    s.eigenvalues.iter().map(|&m| (-t * m).exp()).sum()
}

/// Exact `L² → L^∞` norm of the semigroup `exp(-tL)` on the weighted space,
/// `max_x (Σ_k e^{-2tμ_k} u_k(x)²)^{1/2}` for weight-orthonormal `u_k`.
pub fn two_infinity_norm(s: &SpectralSummary, weights: &[f64], t: f64) -> Result<f64> {
    let v = s.eigenvectors.as_ref().ok_or(Error::MissingVectors)?;
    if weights.len() != v.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for vectors of length {}",
            weights.len(),
            v.nrows()
        )));
    }
    let decay: Vec<f64> = s.eigenvalues.iter().map(|&m| (-2.0 * t * m).exp()).collect();
    let best = (0..v.nrows())
        .map(|x| {
            (0..v.ncols())
                .map(|k| decay[k] * v[(x, k)] * v[(x, k)])
                .sum::<f64>()
        })
        .fold(0.0, f64::max);
    Ok(best.sqrt())
}
