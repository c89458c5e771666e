//! Absorption-to-reflection machinery on the boundary of a sublevel set.
//!
//! Everything here is the Schur complement of `K - λM` onto the boundary
//! nodes `B`. Since `M` vanishes on `B`, the off-diagonal and boundary
//! blocks of the shifted matrix are those of `K`.

use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::eigcount::{self, SymFactor};
use crate::error::{Error, Result};
use crate::model::{AssembledPencil, Inertia, SpectralSummary};
use crate::sparse::SymSparse;

/// Harmonic boundary measures and their densities, aligned with
/// `AssembledPencil::boundary`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryMeasures {
    /// `μ_e,b = Σ_i M_ii P₀[i, b]`.
    pub mu_e: Vec<f64>,
    /// `ν_e,b = Σ_i hⁿ P₀[i, b]`.
    pub nu_e: Vec<f64>,
    pub sigma: Vec<f64>,
}

impl BoundaryMeasures {
    pub fn dmu_dsigma(&self) -> Vec<f64> {
        self.mu_e.iter().zip(&self.sigma).map(|(m, s)| m / s).collect()
    }

    pub fn dnu_dsigma(&self) -> Vec<f64> {
        self.nu_e.iter().zip(&self.sigma).map(|(m, s)| m / s).collect()
    }

    pub fn dnu_dmu(&self) -> Vec<f64> {
        self.nu_e.iter().zip(&self.mu_e).map(|(n, m)| n / m).collect()
    }

    pub fn total_mu(&self) -> f64 {
        self.mu_e.iter().sum()
    }

    pub fn total_nu(&self) -> f64 {
        self.nu_e.iter().sum()
    }
}

/// Factorization of the Dirichlet block `K_II - λM_II`; rejects shifts on
/// the Dirichlet spectrum.
pub fn dirichlet_factor(p: &AssembledPencil, lambda: f64) -> Result<SymFactor> {
    let a = p.dirichlet_stiffness().shifted(lambda, &p.interior_mass());
    let f = SymFactor::of_sparse(&a)?;
    if f.inertia().n_zero > 0 {
        return Err(Error::ResolventViolation { lambda });
    }
    Ok(f)
}

/// The dense interior-boundary block `K_IB`.
pub fn coupling_block(p: &AssembledPencil) -> DMatrix<f64> {
    p.stiffness.block(&p.interior, &p.boundary)
}

fn poisson_from(f: &SymFactor, k_ib: &DMatrix<f64>) -> DMatrix<f64> {
    -f.solve_columns(k_ib)
}

/// `P_λ = -(K_II - λM_II)⁻¹ K_IB`, of shape `|I| × |B|`.
pub fn poisson_matrix(p: &AssembledPencil, lambda: f64) -> Result<DMatrix<f64>> {
    let f = dirichlet_factor(p, lambda)?;
    Ok(poisson_from(&f, &coupling_block(p)))
}

/// The λ-harmonic extension of `phi` as a vector over all local nodes.
pub fn harmonic_extension(p: &AssembledPencil, lambda: f64, phi: &[f64]) -> Result<Vec<f64>> {
    if phi.len() != p.boundary.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} boundary values for {} boundary nodes",
            phi.len(),
            p.boundary.len()
        )));
    }
    let f = dirichlet_factor(p, lambda)?;
    let mut u = vec![0.0; p.order()];
    for (&b, &v) in p.boundary.iter().zip(phi) {
        u[b] = v;
    }
    let ku = p.stiffness.mul_vec(&u);
    let mut rhs: Vec<f64> = p.interior.iter().map(|&i| -ku[i]).collect();
    f.solve_in_place(&mut rhs);
    for (&i, v) in p.interior.iter().zip(rhs) {
        u[i] = v;
    }
    Ok(u)
}

/// `𝒟[u] - λ‖u‖²_M` for a full local vector.
pub fn shifted_energy(p: &AssembledPencil, lambda: f64, u: &[f64]) -> f64 {
    let mass: f64 = u.iter().zip(&p.mass).map(|(x, m)| m * x * x).sum();
    p.stiffness.quad_form(u) - lambda * mass
}

fn symmetrize(a: DMatrix<f64>) -> DMatrix<f64> {
    0.5 * (&a + a.transpose())
}

/// `S(λ) = K_BB + K_BI P_λ` on the boundary nodes.
pub fn schur_form(p: &AssembledPencil, lambda: f64) -> Result<DMatrix<f64>> {
    let pl = poisson_matrix(p, lambda)?;
    Ok(schur_from(p, &pl))
}

fn schur_from(p: &AssembledPencil, pl: &DMatrix<f64>) -> DMatrix<f64> {
    let k_bb = p.stiffness.block(&p.boundary, &p.boundary);
    let k_bi = p.stiffness.block(&p.boundary, &p.interior);
    symmetrize(k_bb + k_bi * pl)
}

pub fn boundary_measures(p: &AssembledPencil) -> Result<BoundaryMeasures> {
    let p0 = poisson_matrix(p, 0.0)?;
    Ok(measures_from(p, &p0))
}

fn measures_from(p: &AssembledPencil, p0: &DMatrix<f64>) -> BoundaryMeasures {
    let m = DVector::from_vec(p.interior_mass());
    let ones = DVector::from_element(p.interior.len(), p.cell_volume());
    BoundaryMeasures {
        mu_e: (p0.transpose() * m).iter().copied().collect(),
        nu_e: (p0.transpose() * ones).iter().copied().collect(),
        sigma: p.sigma.clone(),
    }
}

/// The shared λ-independent data of one pencil.
#[derive(Clone, Debug)]
pub struct BoundaryData {
    pub p0: DMatrix<f64>,
    pub s0: DMatrix<f64>,
    pub measures: BoundaryMeasures,
}

pub fn boundary_data(p: &AssembledPencil) -> Result<BoundaryData> {
    let p0 = poisson_matrix(p, 0.0)?;
    let s0 = schur_from(p, &p0);
    let measures = measures_from(p, &p0);
    Ok(BoundaryData { p0, s0, measures })
}

/// Spectrum of the Dirichlet pencil `(K_II, M_II)`.
pub fn dirichlet_spectrum(p: &AssembledPencil, want_vectors: bool) -> Result<SpectralSummary> {
    eigcount::pencil_eigs(&p.dirichlet_stiffness(), &p.interior_mass(), want_vectors)
        .map(|s| s.with_label("dirichlet"))
}

/// `sup_μ |λμ / (μ - λ)|` over a positive spectrum. The function is monotone
/// on each side of its pole, so only the extreme eigenvalues and the two
/// neighbours of `λ` are evaluated.
pub fn a_lambda_norm(spectrum: &SpectralSummary, lambda: f64) -> Result<f64> {
    let ev = &spectrum.eigenvalues;
    if ev.is_empty() {
        return Err(Error::Precondition("empty Dirichlet spectrum".into()));
    }
    if let Some(&bad) = ev.iter().find(|&&m| !(m > 0.0)) {
        return Err(Error::Precondition(format!(
            "Dirichlet eigenvalue {bad} is not positive"
        )));
    }
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let f = |m: f64| (lambda * m / (m - lambda)).abs();
    let k = ev.partition_point(|&m| m < lambda);
    let mut candidates = vec![ev[0], ev[ev.len() - 1]];
    if k < ev.len() {
        if ev[k] == lambda {
            return Err(Error::OnEigenvalue {
                shift: lambda,
                object: "Dirichlet pencil",
            });
        }
        candidates.push(ev[k]);
    }
    if k > 0 {
        candidates.push(ev[k - 1]);
    }
    Ok(candidates.into_iter().map(f).fold(0.0, f64::max))
}

/// `a_lambda_norm` without a dense spectrum: the four eigenvalues it needs
/// are located by bisection on inertia counts to relative accuracy `rel_tol`.
pub fn a_lambda_norm_by_counts(p: &AssembledPencil, lambda: f64, rel_tol: f64) -> Result<f64> {
    if lambda == 0.0 {
        return Ok(0.0);
    }
    let k_ii = p.dirichlet_stiffness();
    let m_ii = p.interior_mass();
    let total = m_ii.len();
    let below = eigcount::count_below(&k_ii, &m_ii, lambda)?;
    let mut idx = vec![1, total];
    if below > 0 {
        idx.push(below);
    }
    if below < total {
        idx.push(below + 1);
    }
    let mut best: f64 = 0.0;
    for j in idx {
        let m = eigcount::kth_eigenvalue(&k_ii, &m_ii, j, rel_tol)?;
        best = best.max((lambda * m / (m - lambda)).abs());
    }
    Ok(best)
}

fn norm2(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// Relative norm of `K_II (u^λ - u⁰)_I - λ (M u^λ)_I` for the two harmonic
/// extensions of `phi`.
pub fn verify_isomorphism(p: &AssembledPencil, lambda: f64, phi: &[f64]) -> Result<f64> {
    let ul = harmonic_extension(p, lambda, phi)?;
    let u0 = harmonic_extension(p, 0.0, phi)?;
    let mut diff = vec![0.0; p.order()];
    for &i in &p.interior {
        diff[i] = ul[i] - u0[i];
    }
    let kd = p.stiffness.mul_vec(&diff);
    let lhs: Vec<f64> = p.interior.iter().map(|&i| kd[i]).collect();
    let rhs: Vec<f64> = p.interior.iter().map(|&i| lambda * p.mass[i] * ul[i]).collect();
    let res: Vec<f64> = lhs.iter().zip(&rhs).map(|(a, b)| a - b).collect();
    let scale = norm2(&lhs).max(norm2(&rhs));
    Ok(if scale == 0.0 { 0.0 } else { norm2(&res) / scale })
}

/// Relative entrywise residual of `S(0) - S(λ) = λ P₀ᵀ M_II (K_II - λM_II)⁻¹ K_II P₀`.
pub fn shift_identity_residual(p: &AssembledPencil, lambda: f64) -> Result<f64> {
    let f = dirichlet_factor(p, lambda)?;
    let k_ib = coupling_block(p);
    let p0 = poisson_from(&dirichlet_factor(p, 0.0)?, &k_ib);
    let pl = poisson_from(&f, &k_ib);
    let lhs = schur_from(p, &p0) - schur_from(p, &pl);

    let kii = p.dirichlet_stiffness();
    let mut x = DMatrix::zeros(p0.nrows(), p0.ncols());
    for (c, col) in p0.column_iter().enumerate() {
        let v: Vec<f64> = col.iter().copied().collect();
        x.set_column(c, &DVector::from_vec(kii.mul_vec(&v)));
    }
    let mut y = f.solve_columns(&x);
    for (r, m) in p.interior_mass().iter().enumerate() {
        y.row_mut(r).scale_mut(*m);
    }
    let rhs = lambda * p0.transpose() * y;
    let scale = lhs.amax().max(rhs.amax());
    Ok(if scale == 0.0 {
        0.0
    } else {
        (lhs - rhs).amax() / scale
    })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplittingCounts {
    pub n_full: usize,
    pub n_dir: usize,
    pub n_a2r_nonpos: usize,
    pub identity_holds: bool,
}

fn strict_negatives(inr: Inertia, shift: f64, object: &'static str) -> Result<usize> {
    if inr.n_zero > 0 {
        return Err(Error::OnEigenvalue { shift, object });
    }
    Ok(inr.n_minus)
}

/// The three counts of the boundary splitting at `λ`, each from its own
/// factorization.
pub fn splitting_counts(p: &AssembledPencil, lambda: f64) -> Result<SplittingCounts> {
    let full = SymFactor::of_sparse(&p.stiffness.shifted(lambda, &p.mass))?.inertia();
    let n_full = strict_negatives(full, lambda, "K - λM")?;
    let dir = SymFactor::of_sparse(&p.dirichlet_stiffness().shifted(lambda, &p.interior_mass()))?;
    let n_dir = strict_negatives(dir.inertia(), lambda, "Dirichlet block")?;
    let s = schur_from(p, &poisson_from(&dir, &coupling_block(p)));
    let n_a2r_nonpos = strict_negatives(eigcount::inertia(&s)?, lambda, "S(λ)")?;
    Ok(SplittingCounts {
        n_full,
        n_dir,
        n_a2r_nonpos,
        identity_holds: n_full == n_dir + n_a2r_nonpos,
    })
}

/// Spectrum of `(S(0), diag μ_e)` and the count `n₋(S(0) - γ diag μ_e)`.
pub fn a2r_spectrum_and_count(
    s0: &DMatrix<f64>,
    bm: &BoundaryMeasures,
    gamma: f64,
) -> Result<(SpectralSummary, usize)> {
    let spec = eigcount::pencil_eigs(&SymSparse::from_dense(s0), &bm.mu_e, false)?
        .with_label("absorption-to-reflection");
    let count = a2r_count(s0, bm, gamma)?;
    Ok((spec, count))
}

/// `n₋(S(0) - γ diag μ_e)` by one dense factorization.
pub fn a2r_count(s0: &DMatrix<f64>, bm: &BoundaryMeasures, gamma: f64) -> Result<usize> {
    let mut a = s0.clone();
    for (i, m) in bm.mu_e.iter().enumerate() {
        a[(i, i)] -= gamma * m;
    }
    strict_negatives(eigcount::inertia(&a)?, gamma, "S(0) - γμ")
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct RadonNikodym {
    pub dmu_dsigma_p: f64,
    pub dnu_dsigma_inf: f64,
    pub dnu_dmu_inf: f64,
}

/// `‖dμ_e/dσ‖_{L^p(σ)}`, `‖dν_e/dσ‖_∞`, `‖dν_e/dμ_e‖_∞`.
pub fn radon_nikodym_report(bm: &BoundaryMeasures, p: f64) -> RadonNikodym {
    let dmu = bm.dmu_dsigma();
    let lp = dmu
        .iter()
        .zip(&bm.sigma)
        .map(|(d, s)| s * d.powf(p))
        .sum::<f64>()
        .powf(1.0 / p);
    RadonNikodym {
        dmu_dsigma_p: lp,
        dnu_dsigma_inf: bm.dnu_dsigma().into_iter().fold(0.0, f64::max),
        dnu_dmu_inf: bm.dnu_dmu().into_iter().fold(0.0, f64::max),
    }
}

/// Empirical two-sided constant relating the discrete Poisson kernel
/// `P₀[x, y] / σ_y` to `d(x, ∂U) / |x - y|ⁿ`. The first `samples` pairs of
/// a seeded shuffle of all (interior, boundary) pairs are used, so larger
/// sample counts see a superset. Pairs in different components are skipped.
pub fn estimate_poisson_constant(
    p: &AssembledPencil,
    p0: &DMatrix<f64>,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let n = p.grid.dimension();
    if n < 2 {
        return Err(Error::DimensionTooLow { n, min: 2 });
    }
    let dist_to_boundary: Vec<f64> = p
        .interior
        .iter()
        .map(|&i| {
            p.boundary
                .iter()
                .map(|&b| p.grid.distance(p.nodes[i], p.nodes[b]))
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    let mut pairs: Vec<(usize, usize)> = (0..p.interior.len())
        .flat_map(|x| (0..p.boundary.len()).map(move |y| (x, y)))
        .collect();
    pairs.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let mut c: f64 = 1.0;
    for &(x, y) in pairs.iter().take(samples) {
        let kernel = p0[(x, y)] / p.sigma[y];
        if kernel <= 0.0 {
            continue;
        }
        let r = p.grid.distance(p.nodes[p.interior[x]], p.nodes[p.boundary[y]]);
        let model = dist_to_boundary[x] / r.powi(n as i32);
        let ratio = kernel / model;
        c = c.max(ratio).max(1.0 / ratio);
    }
    Ok(c)
}

/// `diag(μ_e) - P₀ᵀ M_II P₀`, positive semidefinite by Jensen's inequality
/// on the probability rows of `P₀`.
pub fn contraction_gap(p: &AssembledPencil, data: &BoundaryData) -> DMatrix<f64> {
    let mut mp = data.p0.clone();
    for (r, m) in p.interior_mass().iter().enumerate() {
        mp.row_mut(r).scale_mut(*m);
    }
    let mut out = -(data.p0.transpose() * mp);
    for (i, m) in data.measures.mu_e.iter().enumerate() {
        out[(i, i)] += m;
    }
    symmetrize(out)
}
