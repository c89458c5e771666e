//! Domain types shared by every stage of the pipeline.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use log::warn;
use nalgebra::DMatrix;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::sparse::SymSparse;

pub const DEFAULT_NODE_CAP: usize = 200_000;

/// Uniform node-centred lattice on an axis-aligned box. Nodes include the
/// box faces; linear indices run with axis 0 slowest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSpec {
    lower: Vec<f64>,
    upper: Vec<f64>,
    resolution: Vec<usize>,
    spacing: f64,
}

impl GridSpec {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>, resolution: Vec<usize>) -> Result<Self> {
        Self::with_cap(lower, upper, resolution, DEFAULT_NODE_CAP)
    }

    pub fn with_cap(
        lower: Vec<f64>,
        upper: Vec<f64>,
        resolution: Vec<usize>,
        cap: usize,
    ) -> Result<Self> {
        let n = resolution.len();
        if !(1..=3).contains(&n) {
            return Err(Error::InvalidGrid(format!("dimension {n} not in 1..=3")));
        }
        if lower.len() != n || upper.len() != n {
            return Err(Error::InvalidGrid("box and resolution lengths differ".into()));
        }
        if let Some(r) = resolution.iter().find(|&&r| r < 3) {
            return Err(Error::InvalidGrid(format!("resolution {r} < 3")));
        }
        let spacings: Vec<f64> = (0..n)
            .map(|i| (upper[i] - lower[i]) / (resolution[i] - 1) as f64)
            .collect();
        if spacings.iter().any(|h| !(h.is_finite() && *h > 0.0)) {
            return Err(Error::InvalidGrid("box must have positive finite extent".into()));
        }
        let h = spacings[0];
        if spacings.iter().any(|s| (s - h).abs() > 1e-12 * h) {
            return Err(Error::InvalidGrid(format!(
                "spacings {spacings:?} are not isotropic"
            )));
        }
        let nodes: usize = resolution.iter().product();
        if nodes > cap {
            return Err(Error::NodeCap { nodes, cap });
        }
        Ok(GridSpec {
            lower,
            upper,
            resolution,
            spacing: h,
        })
    }

    /// `[a, b]^n` with `res` nodes per axis.
    pub fn cube(n: usize, a: f64, b: f64, res: usize) -> Result<Self> {
        Self::new(vec![a; n], vec![b; n], vec![res; n])
    }

    pub fn dimension(&self) -> usize {
        self.resolution.len()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn resolution(&self) -> &[usize] {
        &self.resolution
    }

    pub fn node_count(&self) -> usize {
        self.resolution.iter().product()
    }

    /// `h^n`, the lumped quadrature weight of one node.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dimension() as i32)
    }

    pub fn multi_index(&self, mut idx: usize) -> [usize; 3] {
        let mut out = [0; 3];
        for axis in (0..self.dimension()).rev() {
            out[axis] = idx % self.resolution[axis];
            idx /= self.resolution[axis];
        }
        out
    }

    pub fn linear_index(&self, mi: &[usize]) -> usize {
        mi.iter()
            .zip(&self.resolution)
            .fold(0, |acc, (&i, &r)| acc * r + i)
    }

    pub fn coords(&self, idx: usize) -> Vec<f64> {
        let mi = self.multi_index(idx);
        (0..self.dimension())
            .map(|a| self.lower[a] + mi[a] as f64 * self.spacing)
            .collect()
    }

    pub fn distance(&self, a: usize, b: usize) -> f64 {
        let (ma, mb) = (self.multi_index(a), self.multi_index(b));
        (0..self.dimension())
            .map(|k| (ma[k] as f64 - mb[k] as f64).powi(2))
            .sum::<f64>()
            .sqrt()
            * self.spacing
    }

    pub fn on_box_boundary(&self, idx: usize) -> bool {
        let mi = self.multi_index(idx);
        (0..self.dimension()).any(|a| mi[a] == 0 || mi[a] + 1 == self.resolution[a])
    }

    /// Grid neighbours along the `2n` stencil directions.
    pub fn neighbors(&self, idx: usize) -> impl Iterator<Item = usize> + '_ {
        let mi = self.multi_index(idx);
        let mut stride = vec![1usize; self.dimension()];
        for a in (0..self.dimension().saturating_sub(1)).rev() {
            stride[a] = stride[a + 1] * self.resolution[a + 1];
        }
        (0..self.dimension()).flat_map(move |a| {
            let down = (mi[a] > 0).then(|| idx - stride[a]);
            let up = (mi[a] + 1 < self.resolution[a]).then(|| idx + stride[a]);
            down.into_iter().chain(up)
        })
    }
}

/// Analytic description of a sampled potential.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum PotentialFamily {
    /// `-depth` on the open ball, zero outside.
    BallWell {
        center: Vec<f64>,
        radius: f64,
        depth: f64,
    },
    /// `-depth * exp(-|x - c|^2 / (2 width^2))`.
    GaussianWell {
        center: Vec<f64>,
        width: f64,
        depth: f64,
    },
    /// Sum of the listed wells.
    MultiWell { wells: Vec<PotentialFamily> },
    /// Random sine series with modes `1..=cutoff` per axis; vanishes on the box faces.
    BandLimitedRandom {
        seed: u64,
        cutoff: usize,
        amplitude: f64,
    },
    /// Node values given explicitly, in linear index order.
    Sampled { values: Vec<f64> },
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CachedNorm {
    pub level: f64,
    pub exponent: f64,
    pub value: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PotentialField {
    grid: GridSpec,
    values: Vec<f64>,
    family: PotentialFamily,
    norms: Vec<CachedNorm>,
}

impl PotentialField {
    pub fn from_values(grid: GridSpec, values: Vec<f64>) -> Result<Self> {
        build_potential(&PotentialFamily::Sampled { values }, &grid)
    }

    pub fn grid(&self) -> &GridSpec {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn family(&self) -> &PotentialFamily {
        &self.family
    }

    pub fn cached_norms(&self) -> &[CachedNorm] {
        &self.norms
    }

    /// Returns a copy carrying `‖(V-e)_-‖_p` for each requested `(e, p)`.
    pub fn with_cached_norms(mut self, requests: &[(f64, f64)]) -> Self {
        for &(e, p) in requests {
            if self.lookup(e, p).is_none() {
                let value = self.compute_norm(e, p);
                self.norms.push(CachedNorm {
                    level: e,
                    exponent: p,
                    value,
                });
            }
        }
        self
    }

    fn lookup(&self, e: f64, p: f64) -> Option<f64> {
        self.norms
            .iter()
            .find(|c| c.level == e && c.exponent == p)
            .map(|c| c.value)
    }

    fn compute_norm(&self, e: f64, p: f64) -> f64 {
        let w = self.grid.cell_volume();
        let sum: f64 = self
            .values
            .iter()
            .map(|&v| (e - v).max(0.0).powf(p) * w)
            .sum();
        sum.powf(1.0 / p)
    }

    /// `‖(V-e)_-‖_{L^p}` by node quadrature `Σ w(x_i)^p h^n`.
    pub fn negative_part_norm(&self, e: f64, p: f64) -> f64 {
        self.lookup(e, p).unwrap_or_else(|| self.compute_norm(e, p))
    }

    /// `V` with its positive part removed.
    pub fn clamped_nonpositive(&self) -> PotentialField {
        let values: Vec<f64> = self.values.iter().map(|v| v.min(0.0)).collect();
        PotentialField {
            grid: self.grid.clone(),
            values: values.clone(),
            family: PotentialFamily::Sampled { values },
            norms: Vec::new(),
        }
    }
}

pub fn build_potential(family: &PotentialFamily, grid: &GridSpec) -> Result<PotentialField> {
    let n = grid.dimension();
    let values: Vec<f64> = match family {
        PotentialFamily::Sampled { values } => {
            if values.len() != grid.node_count() {
                return Err(Error::DimensionMismatch(format!(
                    "{} sampled values for {} nodes",
                    values.len(),
                    grid.node_count()
                )));
            }
            values.clone()
        }
        _ => {
            let eval = sampler(family, grid)?;
            (0..grid.node_count()).map(|i| eval(&grid.coords(i))).collect()
        }
    };
    if let Some(index) = values.iter().position(|v| !v.is_finite()) {
        return Err(Error::NonFinitePotential { index });
    }
    warn_if_outside(family, grid, n);
    Ok(PotentialField {
        grid: grid.clone(),
        values,
        family: family.clone(),
        norms: Vec::new(),
    })
}

type Sampler = Box<dyn Fn(&[f64]) -> f64>;

fn check_center(center: &[f64], n: usize) -> Result<()> {
    if center.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "well centre has {} coordinates in dimension {n}",
            center.len()
        )));
    }
    Ok(())
}

fn sampler(family: &PotentialFamily, grid: &GridSpec) -> Result<Sampler> {
    let n = grid.dimension();
    Ok(match family.clone() {
        PotentialFamily::BallWell {
            center,
            radius,
            depth,
        } => {
            check_center(&center, n)?;
            Box::new(move |x| {
                let r2: f64 = x.iter().zip(&center).map(|(a, c)| (a - c).powi(2)).sum();
                if r2 < radius * radius {
                    -depth
                } else {
                    0.0
                }
            })
        }
        PotentialFamily::GaussianWell {
            center,
            width,
            depth,
        } => {
            check_center(&center, n)?;
            Box::new(move |x| {
                let r2: f64 = x.iter().zip(&center).map(|(a, c)| (a - c).powi(2)).sum();
                -depth * (-r2 / (2.0 * width * width)).exp()
            })
        }
        PotentialFamily::MultiWell { wells } => {
            let parts = wells
                .iter()
                .map(|w| sampler(w, grid))
                .collect::<Result<Vec<_>>>()?;
            Box::new(move |x| parts.iter().map(|f| f(x)).sum())
        }
        PotentialFamily::BandLimitedRandom {
            seed,
            cutoff,
            amplitude,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let cutoff = cutoff.max(1);
            let modes: Vec<Vec<usize>> = (0..cutoff.pow(n as u32))
                .map(|mut m| {
                    (0..n)
                        .map(|_| {
                            let k = m % cutoff + 1;
                            m /= cutoff;
                            k
                        })
                        .collect()
                })
                .collect();
            let scale = 1.0 / (modes.len() as f64).sqrt();
            let coeffs: Vec<f64> = modes
                .iter()
                .map(|k| {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let kk: f64 = k.iter().map(|&v| (v * v) as f64).sum::<f64>().sqrt();
                    z * scale / kk
                })
                .collect();
            let lower = grid.lower().to_vec();
            let extent: Vec<f64> = grid
                .upper()
                .iter()
                .zip(grid.lower())
                .map(|(b, a)| b - a)
                .collect();
            Box::new(move |x| {
                let s: f64 = modes
                    .iter()
                    .zip(&coeffs)
                    .map(|(k, c)| {
                        c * (0..x.len())
                            .map(|a| (k[a] as f64 * PI * (x[a] - lower[a]) / extent[a]).sin())
                            .product::<f64>()
                    })
                    .sum();
                amplitude * s
            })
        }
        PotentialFamily::Sampled { .. } => unreachable!("sampled values bypass the sampler"),
    })
}

fn warn_if_outside(family: &PotentialFamily, grid: &GridSpec, n: usize) {
    let support = |center: &[f64], reach: f64| {
        (0..n).any(|a| center[a] - reach < grid.lower()[a] || center[a] + reach > grid.upper()[a])
    };
    match family {
        PotentialFamily::BallWell { center, radius, .. } if support(center, *radius) => {
            warn!("ball well support exceeds the box; the well is truncated")
        }
        PotentialFamily::GaussianWell { center, width, .. } if support(center, 3.0 * width) => {
            warn!("gaussian well does not decay before the box edge")
        }
        PotentialFamily::MultiWell { wells } => {
            wells.iter().for_each(|w| warn_if_outside(w, grid, n))
        }
        _ => {}
    }
}

/// Interior nodes `{V < e}`, their exterior neighbours, and the edges of
/// the weighted Dirichlet form. Indices are grid linear indices.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SublevelDecomposition {
    pub level: f64,
    pub interior: Vec<usize>,
    pub boundary: Vec<usize>,
    pub edges: Vec<(usize, usize)>,
    pub components: Vec<Vec<usize>>,
    pub diameter: f64,
}

/// Stiffness `K`, lumped mass `M` and boundary surface weights `σ` over the
/// node set `I ∪ B`, in ascending grid order.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct AssembledPencil {
    pub grid: GridSpec,
    pub level: f64,
    /// Grid index of each local node.
    pub nodes: Vec<usize>,
    pub stiffness: SymSparse,
    pub mass: Vec<f64>,
    /// Local positions of interior nodes.
    pub interior: Vec<usize>,
    /// Local positions of boundary nodes.
    pub boundary: Vec<usize>,
    /// Surface weight of each boundary node, aligned with `boundary`.
    pub sigma: Vec<f64>,
}

impl AssembledPencil {
    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn cell_volume(&self) -> f64 {
        self.grid.cell_volume()
    }

    pub fn dirichlet_stiffness(&self) -> SymSparse {
        self.stiffness.principal(&self.interior)
    }

    pub fn interior_mass(&self) -> Vec<f64> {
        self.interior.iter().map(|&i| self.mass[i]).collect()
    }

    /// `(V - e)_-` on interior nodes.
    pub fn interior_weights(&self) -> Vec<f64> {
        let w = self.cell_volume();
        self.interior.iter().map(|&i| self.mass[i] / w).collect()
    }

    pub fn coords(&self, local: usize) -> Vec<f64> {
        self.grid.coords(self.nodes[local])
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Inertia {
    pub n_minus: usize,
    pub n_zero: usize,
    pub n_plus: usize,
}

impl Inertia {
    pub fn order(&self) -> usize {
        self.n_minus + self.n_zero + self.n_plus
    }
}

impl std::ops::Add for Inertia {
    type Output = Inertia;
    fn add(self, o: Inertia) -> Inertia {
        Inertia {
            n_minus: self.n_minus + o.n_minus,
            n_zero: self.n_zero + o.n_zero,
            n_plus: self.n_plus + o.n_plus,
        }
    }
}

/// Sorted finite eigenvalues of a pencil, optionally with mass-orthonormal
/// eigenvectors stored as columns.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SpectralSummary {
    pub label: String,
    pub eigenvalues: Vec<f64>,
    pub eigenvectors: Option<DMatrix<f64>>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Holds,
    Violated,
    NotApplicable,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Verdict::Holds => "holds",
            Verdict::Violated => "violated",
            Verdict::NotApplicable => "not-applicable",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum Measured {
    Count(u64),
    Real(f64),
}

impl Measured {
    pub fn as_f64(&self) -> f64 {
        match *self {
            Measured::Count(c) => c as f64,
            Measured::Real(v) => v,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub inputs: BTreeMap<String, f64>,
    /// Name and value of the evaluation variable (`lambda`, `gamma`, `t`, `mu`).
    pub at: (String, f64),
    pub rhs: f64,
    pub lhs: Option<Measured>,
    pub verdict: Verdict,
    pub notes: Vec<String>,
}

impl BoundReport {
    /// Verdict is `Holds` iff `lhs <= rhs (1 + rel_tol)`; integer measurements
    /// use `rel_tol = 0`.
    pub fn evaluate(
        name: impl Into<String>,
        inputs: BTreeMap<String, f64>,
        at: (&str, f64),
        rhs: f64,
        lhs: Measured,
        rel_tol: f64,
    ) -> Self {
        let tol = match lhs {
            Measured::Count(_) => 0.0,
            Measured::Real(_) => rel_tol * rhs.abs(),
        };
        let verdict = if lhs.as_f64() <= rhs + tol {
            Verdict::Holds
        } else {
            Verdict::Violated
        };
        BoundReport {
            name: name.into(),
            inputs,
            at: (at.0.to_string(), at.1),
            rhs,
            lhs: Some(lhs),
            verdict,
            notes: Vec::new(),
        }
    }

    pub fn not_applicable(name: impl Into<String>, reason: impl Into<String>) -> Self {
        BoundReport {
            name: name.into(),
            inputs: BTreeMap::new(),
            at: (String::new(), f64::NAN),
            rhs: f64::NAN,
            lhs: None,
            verdict: Verdict::NotApplicable,
            notes: vec![reason.into()],
        }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.notes.push(note.into());
        self
    }
}
