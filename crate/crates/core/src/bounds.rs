//! Closed-form Weyl-type constants and bound evaluators.
//!
//! The Sobolev-type bounds are stated for `n ≥ 3` only and every evaluator
//! rejects lower dimensions. Constants the theory leaves unspecified (the
//! Lieb constant `L_n`, the trace-Sobolev remainder `b`, the Poisson-kernel
//! constant `c_P`) are inputs; `estimate_b` gives an empirical lower
//! estimate of `b`.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma;

use crate::a2r::BoundaryMeasures;
use crate::eigcount::pencil_eigs;
use crate::error::{Error, Result};
use crate::model::PotentialField;
use crate::sparse::SymSparse;

/// Which measure of the unit sphere `ω_n` denotes.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OmegaConvention {
    /// `π^{n/2} / Γ(1 + n/2)`, volume of the unit ball in `ℝⁿ`.
    BallVolume,
    /// `2π^{n/2} / Γ(n/2)`, area of the unit sphere in `ℝⁿ`.
    #[default]
    SphereArea,
}

pub fn omega(n: usize, convention: OmegaConvention) -> f64 {
    let h = n as f64 / 2.0;
    match convention {
        OmegaConvention::BallVolume => PI.powf(h) / gamma(1.0 + h),
        OmegaConvention::SphereArea => 2.0 * PI.powf(h) / gamma(h),
    }
}

fn require_dim(n: usize) -> Result<()> {
    if n < 3 {
        return Err(Error::DimensionTooLow { n, min: 3 });
    }
    Ok(())
}

/// `C_n = (4π)^{-n/2} / Γ(1 + n/2)`.
pub fn classical_constant(n: usize) -> f64 {
    let h = n as f64 / 2.0;
    (4.0 * PI).powf(-h) / gamma(1.0 + h)
}

/// Sharp Sobolev constant `S_n = (n(n-2)π)⁻¹ (Γ(n)/Γ(n/2))^{2/n}`.
pub fn sobolev_constant(n: usize) -> Result<f64> {
    require_dim(n)?;
    let nf = n as f64;
    Ok((gamma(nf) / gamma(nf / 2.0)).powf(2.0 / nf) / (nf * (nf - 2.0) * PI))
}

/// `(r, S_r)` with `r = n*(1 - 1/p)`, `n* = 2n/(n-2)`, `S_r = S_n ‖W‖_p^{2/r}`.
pub fn weighted_sobolev(n: usize, p: f64, norm_wp: f64) -> Result<(f64, f64)> {
    require_dim(n)?;
    let nf = n as f64;
    if !(p > nf / 2.0) {
        return Err(Error::Precondition(format!("exponent p = {p} must exceed n/2 = {}", nf / 2.0)));
    }
    let n_star = 2.0 * nf / (nf - 2.0);
    let r = n_star * (1.0 - 1.0 / p);
    Ok((r, sobolev_constant(n)? * norm_wp.powf(2.0 / r)))
}

/// `2r / (r - 2)`, the dimension-like exponent attached to a Sobolev exponent `r > 2`.
pub fn conjugate_dimension(r: f64) -> f64 {
    2.0 * r / (r - 2.0)
}

/// `e^{2d} S_nᵈ ‖W‖₁² ‖W‖_p^{d-2} λᵈ`.
pub fn dirichlet_count_bound(n: usize, p: f64, norm_w1: f64, norm_wp: f64, lambda: f64) -> Result<f64> {
    if lambda < 0.0 {
        return Err(Error::Precondition(format!("λ = {lambda} is negative")));
    }
    let (r, _) = weighted_sobolev(n, p, norm_wp)?;
    let d = conjugate_dimension(r);
    let s_n = sobolev_constant(n)?;
    Ok((2.0 * d).exp() * s_n.powf(d) * norm_w1 * norm_w1 * norm_wp.powf(d - 2.0) * lambda.powf(d))
}

/// `(e (d/4) S_r)^{d/4} t^{-d/4}`.
pub fn ultracontractivity_bound(d: f64, s_r: f64, t: f64) -> f64 {
    (std::f64::consts::E * d / 4.0 * s_r).powf(d / 4.0) * t.powf(-d / 4.0)
}

/// `‖W‖₁² (e d S_r)ᵈ t^{-d}`.
pub fn trace_bound(d: f64, s_r: f64, norm_w1: f64, t: f64) -> f64 {
    norm_w1 * norm_w1 * (std::f64::consts::E * d * s_r).powf(d) * t.powf(-d)
}

/// Trace-Sobolev exponent and constant `(q, S)` with `q = 2(n-1)/(n-2)` and
/// `S = (2/(n-2)) ω_n^{1/(1-n)}`.
pub fn trace_sobolev_constants(n: usize, convention: OmegaConvention) -> Result<(f64, f64)> {
    require_dim(n)?;
    let nf = n as f64;
    let q = 2.0 * (nf - 1.0) / (nf - 2.0);
    let s = 2.0 / (nf - 2.0) * omega(n, convention).powf(1.0 / (1.0 - nf));
    Ok((q, s))
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundaryConstants {
    pub s: f64,
    pub m: f64,
    pub c1: f64,
    pub c2: f64,
}

/// `s = q(1 - 1/p)`, `m = 2s/(s-2)`, `c₁ = S k^{2/s}`, `c₂ = b k^{2/s} ‖dν/dμ‖_∞`
/// with `k = ‖dμ_e/dσ‖_p`.
pub fn boundary_bound_constants(
    n: usize,
    p: f64,
    trace_s: f64,
    b: f64,
    norm_dmu_dsigma_p: f64,
    norm_dnu_dmu_inf: f64,
) -> Result<BoundaryConstants> {
    require_dim(n)?;
    let nf = n as f64;
    let q = 2.0 * (nf - 1.0) / (nf - 2.0);
    let s = q * (1.0 - 1.0 / p);
    // exact arithmetic would give s = 2 at p = n - 1
    if s <= 2.0 + 1e-12 {
        return Err(Error::SubcriticalExponent { s });
    }
    let k = norm_dmu_dsigma_p.powf(2.0 / s);
    Ok(BoundaryConstants {
        s,
        m: conjugate_dimension(s),
        c1: trace_s * k,
        c2: b * k * norm_dnu_dmu_inf,
    })
}

/// `e^{2m} ‖W‖₁² (c₁γ + c₂)^m`.
pub fn a2r_count_bound(m: f64, c1: f64, c2: f64, norm_w1: f64, gamma: f64) -> f64 {
    (2.0 * m).exp() * norm_w1 * norm_w1 * (c1 * gamma + c2).max(0.0).powf(m)
}

/// `(e m c₁)^m ‖W‖₁² e^{(c₂/c₁)t} t^{-m}`.
pub fn a2r_trace_bound(m: f64, c1: f64, c2: f64, norm_w1: f64, t: f64) -> f64 {
    (std::f64::consts::E * m * c1).powf(m) * norm_w1 * norm_w1 * (c2 / c1 * t).exp() * t.powf(-m)
}

/// `(e (m/4) c₁)^{m/4} e^{(c₂/c₁)t} t^{-m/4}`.
pub fn a2r_ultracontractivity_bound(m: f64, c1: f64, c2: f64, t: f64) -> f64 {
    (std::f64::consts::E * m / 4.0 * c1).powf(m / 4.0) * (c2 / c1 * t).exp() * t.powf(-m / 4.0)
}

/// `c_P ω_{n-1} diam`, the bound on `dν_e/dσ` from the two-sided Poisson
/// kernel estimate.
pub fn harmonic_density_bound(c_p: f64, n: usize, diameter: f64, convention: OmegaConvention) -> f64 {
    c_p * omega(n - 1, convention) * diameter
}

/// Empirical lower estimate of the trace-Sobolev remainder constant `b`:
/// the running maximum of
/// `(‖φ‖²_{L^q(σ)} - S φᵀS(0)φ) / ‖φ‖²_{L²(ν_e)}` over the constant vector,
/// the lowest Steklov eigenvectors of `(S(0), diag μ_e)` and seeded
/// Gaussian vectors, in that order. Returns the estimate after each sample.
pub fn estimate_b_trajectory(
    s0: &DMatrix<f64>,
    bm: &BoundaryMeasures,
    q: f64,
    trace_s: f64,
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>> {
    let nb = bm.sigma.len();
    let quotient = |phi: &[f64]| {
        let lq = bm
            .sigma
            .iter()
            .zip(phi)
            .map(|(s, v)| s * v.abs().powf(q))
            .sum::<f64>()
            .powf(2.0 / q);
        let energy: f64 = phi
            .iter()
            .enumerate()
            .map(|(i, a)| a * (0..nb).map(|j| s0[(i, j)] * phi[j]).sum::<f64>())
            .sum();
        let l2: f64 = bm.nu_e.iter().zip(phi).map(|(w, v)| w * v * v).sum();
        (lq - trace_s * energy) / l2
    };

    let mut candidates: Vec<Vec<f64>> = vec![vec![1.0; nb]];
    let steklov = pencil_eigs(&SymSparse::from_dense(s0), &bm.mu_e, true)?;
    if let Some(v) = &steklov.eigenvectors {
        for c in 1..v.ncols().min(11) {
            candidates.push(v.column(c).iter().copied().collect());
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(samples);
    let mut best = f64::NEG_INFINITY;
    for k in 0..samples {
        let phi = if k < candidates.len() {
            std::mem::take(&mut candidates[k])
        } else {
            (0..nb).map(|_| StandardNormal.sample(&mut rng)).collect()
        };
        best = best.max(quotient(&phi));
        out.push(best);
    }
    Ok(out)
}

/// Final value of `estimate_b_trajectory`.
pub fn estimate_b(
    s0: &DMatrix<f64>,
    bm: &BoundaryMeasures,
    q: f64,
    trace_s: f64,
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let t = estimate_b_trajectory(s0, bm, q, trace_s, samples.max(1), seed)?;
    Ok(*t.last().expect("at least one sample"))
}

/// Pólya right-hand side `C_n |Ω| μ^{n/2}`.
pub fn polya_weyl_bound(n: usize, volume: f64, mu: f64) -> Result<f64> {
    if mu < 0.0 {
        return Err(Error::Precondition(format!("μ = {mu} is negative")));
    }
    Ok(classical_constant(n) * volume * mu.powf(n as f64 / 2.0))
}

/// Lieb right-hand side `L_n ∫ (V - μ)₋^{n/2} dx` by node quadrature.
pub fn lieb_bound(v: &PotentialField, mu: f64, lieb_constant: Option<f64>) -> Result<f64> {
    let l_n = lieb_constant.ok_or(Error::MissingConstant("lieb_constant"))?;
    let n = v.grid().dimension() as f64;
    let w = v.grid().cell_volume();
    let integral: f64 = v
        .values()
        .iter()
        .map(|&x| (mu - x).max(0.0).powf(n / 2.0) * w)
        .sum();
    Ok(l_n * integral)
}

/// Every derived constant of the bound chain for one `(n, p)` and potential
/// norms, with the boundary part present when its inputs are.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundConstants {
    pub n: usize,
    pub p: f64,
    pub n_star: f64,
    pub r: f64,
    pub sobolev_n: f64,
    pub sobolev_r: f64,
    pub d: f64,
    pub q: f64,
    pub trace_sobolev: f64,
    pub classical: f64,
    pub convention: OmegaConvention,
    pub boundary: Option<BoundaryConstants>,
    pub b: Option<f64>,
    pub lieb: Option<f64>,
}

impl BoundConstants {
    pub fn new(n: usize, p: f64, norm_wp: f64, convention: OmegaConvention) -> Result<Self> {
        let (r, sobolev_r) = weighted_sobolev(n, p, norm_wp)?;
        let (q, trace_sobolev) = trace_sobolev_constants(n, convention)?;
        let nf = n as f64;
        Ok(BoundConstants {
            n,
            p,
            n_star: 2.0 * nf / (nf - 2.0),
            r,
            sobolev_n: sobolev_constant(n)?,
            sobolev_r,
            d: conjugate_dimension(r),
            q,
            trace_sobolev,
            classical: classical_constant(n),
            convention,
            boundary: None,
            b: None,
            lieb: None,
        })
    }

    /// Largest disagreement between each exponent and its recovery from the
    /// conjugate relation `2d/r = d - 2`.
    pub fn chain_defect(&self) -> f64 {
        let mut defect = (2.0 * self.d / self.r - (self.d - 2.0)).abs();
        defect = defect.max((self.r - conjugate_dimension(self.d)).abs());
        if let Some(bc) = &self.boundary {
            defect = defect.max((2.0 * bc.m / bc.s - (bc.m - 2.0)).abs());
            defect = defect.max((bc.s - conjugate_dimension(bc.m)).abs());
        }
        defect
    }
}
