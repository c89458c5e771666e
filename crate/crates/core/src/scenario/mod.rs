//! Configuration-driven sweeps over energy levels and spectral shifts.

mod config;
mod report;

use std::collections::BTreeMap;

use log::info;
use rayon::prelude::*;

pub use config::{
    log_grid, ConstantsSection, GridSection, LambdaScale, LevelsSection, OutputSection, PencilSection,
    ScenarioConfig, SweepSection,
};
pub use report::{
    read_csv, to_json, write_csv, write_outputs, ConstantSource, EmpiricalConstant, LevelReport,
    ScenarioReport, SweepRow, CSV_COLUMNS, SCHEMA_VERSION,
};

use crate::a2r::{self, BoundaryData};
use crate::assemble::{assemble_pencil, classify_nodes_with, ClassifyOptions};
use crate::bounds::{self, BoundConstants};
use crate::eigcount::{self, with_nudge, DENSE_CAP};
use crate::error::{Error, Result};
use crate::model::{AssembledPencil, BoundReport, Measured, PotentialField, SpectralSummary, Verdict};
use crate::schrodinger;

/// Relative slack for bound verdicts on real-valued measurements.
pub const REAL_TOLERANCE: f64 = 1e-9;

/// Eigenvectors are computed only up to this Dirichlet order.
const VECTOR_CAP: usize = 1500;

#[derive(Clone, Debug, PartialEq)]
pub struct ScenarioOutcome {
    pub rows: Vec<SweepRow>,
    pub report: ScenarioReport,
}

impl ScenarioOutcome {
    /// 1 if any identity that must always hold failed, else 0.
    pub fn exit_code(&self) -> i32 {
        i32::from(!self.report.must_hold_failures.is_empty())
    }
}

pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutcome> {
    let (rows, levels) = if let Some((k, m)) = cfg.explicit_pencil() {
        (run_explicit(cfg, &k, &m)?, Vec::new())
    } else {
        let field = cfg.build_field()?;
        let mut rows = Vec::new();
        let mut levels = Vec::new();
        for &e in &cfg.levels.energies {
            info!("scenario {}: level e = {e}", cfg.scenario_id);
            let (r, l) = run_level(cfg, &field, e)?;
            rows.extend(r);
            levels.push(l);
        }
        (rows, levels)
    };
    let mut failures: Vec<String> = rows
        .iter()
        .filter(|r| !r.must_hold_ok())
        .map(|r| {
            format!(
                "e = {:?}, lambda = {}: N_full = {}, N_dir = {:?}, N_a2r_nonpos = {:?}, N_a2r_gamma = {:?}",
                r.e, r.lambda, r.n_full, r.n_dir, r.n_a2r_nonpos, r.n_a2r_gamma
            )
        })
        .collect();
    for l in &levels {
        if let Some(red) = &l.reduction {
            if !red.inequality_holds {
                failures.push(format!(
                    "e = {}: Schrödinger count {} exceeds weighted count {}",
                    l.e, red.n_schrodinger, red.n_weighted_full
                ));
            }
        }
    }
    Ok(ScenarioOutcome {
        rows,
        report: ScenarioReport {
            schema_version: SCHEMA_VERSION,
            scenario_id: cfg.scenario_id.clone(),
            seed: cfg.seed,
            levels,
            must_hold_failures: failures,
        },
    })
}

fn run_explicit(cfg: &ScenarioConfig, k: &crate::sparse::SymSparse, m: &[f64]) -> Result<Vec<SweepRow>> {
    let scale = match cfg.sweeps.lambda_scale {
        LambdaScale::Absolute => 1.0,
        LambdaScale::Dirichlet => eigcount::kth_eigenvalue(k, m, 1, 1e-12)?,
    };
    cfg.sweeps
        .lambda_grid()
        .into_iter()
        .map(|l| {
            let (lam, n) = with_nudge(l * scale, |s| eigcount::count_below(k, m, s))?;
            Ok(SweepRow::count_only(&cfg.scenario_id, None, lam, n))
        })
        .collect()
}

fn inputs(pairs: &[(&str, f64)]) -> BTreeMap<String, f64> {
    pairs.iter().map(|(k, v)| (k.to_string(), *v)).collect()
}

struct LevelContext<'a> {
    cfg: &'a ScenarioConfig,
    pencil: AssembledPencil,
    data: BoundaryData,
    spectrum: Option<SpectralSummary>,
    constants: Option<BoundConstants>,
    norm_w1: f64,
    norm_wp: f64,
}

impl LevelContext<'_> {
    fn gamma_at(&self, lambda: f64) -> Result<f64> {
        match &self.spectrum {
            Some(s) => a2r::a_lambda_norm(s, lambda),
            None => a2r::a_lambda_norm_by_counts(&self.pencil, lambda, 1e-10),
        }
    }

    fn point(&self, e: f64, lambda: f64) -> Result<SweepRow> {
        let (lambda, (split, gamma)) = with_nudge(lambda, |l| {
            let s = a2r::splitting_counts(&self.pencil, l)?;
            Ok((s, self.gamma_at(l)?))
        })?;
        let (gamma_used, n_a2r_gamma) =
            with_nudge(gamma, |g| a2r::a2r_count(&self.data.s0, &self.data.measures, g))?;
        let mut row = SweepRow::count_only(&self.cfg.scenario_id, Some(e), lambda, split.n_full);
        row.n_dir = Some(split.n_dir);
        row.n_a2r_nonpos = Some(split.n_a2r_nonpos);
        row.identity_holds = Some(split.identity_holds);
        row.gamma = Some(gamma_used);
        row.n_a2r_gamma = Some(n_a2r_gamma);
        row.a_lambda_norm = Some(gamma);
        row.verdict_inequality = if split.n_full <= split.n_dir + n_a2r_gamma {
            Verdict::Holds
        } else {
            Verdict::Violated
        };
        if let Some(c) = &self.constants {
            let rhs = bounds::dirichlet_count_bound(c.n, c.p, self.norm_w1, self.norm_wp, lambda)?;
            row.bound_thm54 = Some(rhs);
            row.verdict_thm54 = verdict(rhs, Measured::Count(split.n_dir as u64));
            let t = c.d / lambda;
            row.t = Some(t);
            let tb = bounds::trace_bound(c.d, c.sobolev_r, self.norm_w1, t);
            row.trace_bound = Some(tb);
            if let Some(s) = &self.spectrum {
                let ht = eigcount::heat_trace(s, t);
                row.heat_trace_t = Some(ht);
                row.verdict_trace = verdict(tb, Measured::Real(ht));
            }
            if let Some(bc) = &c.boundary {
                let rhs = bounds::a2r_count_bound(bc.m, bc.c1, bc.c2, self.norm_w1, gamma_used);
                row.bound_thm59 = Some(rhs);
                row.verdict_thm59 = verdict(rhs, Measured::Count(n_a2r_gamma as u64));
            }
        }
        Ok(row)
    }
}

fn verdict(rhs: f64, lhs: Measured) -> Verdict {
    BoundReport::evaluate("", BTreeMap::new(), ("", 0.0), rhs, lhs, REAL_TOLERANCE).verdict
}

fn empty_level(cfg: &ScenarioConfig, e: f64, norm_w1: f64, norm_wp: f64) -> (Vec<SweepRow>, LevelReport) {
    let rows = cfg
        .sweeps
        .lambda_grid()
        .into_iter()
        .map(|l| {
            let mut r = SweepRow::count_only(&cfg.scenario_id, Some(e), l, 0);
            r.n_dir = Some(0);
            r.n_a2r_nonpos = Some(0);
            r.identity_holds = Some(true);
            r.n_a2r_gamma = Some(0);
            r.verdict_inequality = Verdict::Holds;
            r
        })
        .collect();
    let report = LevelReport {
        e,
        interior_nodes: 0,
        boundary_nodes: 0,
        components: 0,
        diameter: 0.0,
        norm_w1,
        norm_wp,
        first_dirichlet_eigenvalue: None,
        constants: None,
        b: None,
        c_p: None,
        radon_nikodym: None,
        reduction: None,
        bounds: Vec::new(),
        notes: vec!["sublevel set is empty; every count is zero and lambda is taken as absolute".into()],
    };
    (rows, report)
}

fn run_level(cfg: &ScenarioConfig, field: &PotentialField, e: f64) -> Result<(Vec<SweepRow>, LevelReport)> {
    let sw = &cfg.sweeps;
    let n = field.grid().dimension();
    let field = field.clone().with_cached_norms(&[(e, 1.0), (e, sw.p)]);
    let norm_w1 = field.negative_part_norm(e, 1.0);
    let norm_wp = field.negative_part_norm(e, sw.p);
    let opts = ClassifyOptions {
        allow_positive: cfg.levels.allow_positive,
    };
    let dec = match classify_nodes_with(&field, e, opts) {
        Err(Error::EmptySublevel) => return Ok(empty_level(cfg, e, norm_w1, norm_wp)),
        other => other?,
    };
    let pencil = assemble_pencil(&dec, &field)?;
    let mut notes = Vec::new();

    let n_int = pencil.interior.len();
    let spectrum = if n_int <= DENSE_CAP {
        Some(a2r::dirichlet_spectrum(&pencil, n_int <= VECTOR_CAP)?)
    } else {
        notes.push(format!(
            "Dirichlet order {n_int} exceeds the dense cap; heat traces skipped"
        ));
        None
    };
    let mu1 = match &spectrum {
        Some(s) => s.eigenvalues[0],
        None => eigcount::kth_eigenvalue(&pencil.dirichlet_stiffness(), &pencil.interior_mass(), 1, 1e-12)?,
    };
    let data = a2r::boundary_data(&pencil)?;
    let rn = a2r::radon_nikodym_report(&data.measures, sw.p);

    let conv = cfg.constants.omega_convention;
    let mut constants = if n >= 3 {
        match BoundConstants::new(n, sw.p, norm_wp, conv) {
            Ok(c) => Some(c),
            Err(err) => {
                notes.push(format!("bound constants unavailable: {err}"));
                None
            }
        }
    } else {
        notes.push(format!("dimension {n} < 3: bound evaluators not applicable"));
        None
    };

    let b = match (cfg.constants.b, &constants) {
        (Some(v), _) => Some(EmpiricalConstant {
            value: v,
            source: ConstantSource::Configured,
        }),
        (None, Some(c)) => Some(EmpiricalConstant {
            value: bounds::estimate_b(&data.s0, &data.measures, c.q, c.trace_sobolev, sw.b_samples, cfg.seed)?,
            source: ConstantSource::Estimated,
        }),
        (None, None) => None,
    };
    let c_p = match cfg.constants.c_p {
        Some(v) => Some(EmpiricalConstant {
            value: v,
            source: ConstantSource::Configured,
        }),
        None if n >= 2 => Some(EmpiricalConstant {
            value: a2r::estimate_poisson_constant(&pencil, &data.p0, sw.poisson_samples, cfg.seed)?,
            source: ConstantSource::Estimated,
        }),
        None => None,
    };
    if let (Some(c), Some(b)) = (constants.as_mut(), &b) {
        c.b = Some(b.value);
        c.lieb = cfg.constants.lieb_constant;
        match bounds::boundary_bound_constants(n, sw.p, c.trace_sobolev, b.value, rn.dmu_dsigma_p, rn.dnu_dmu_inf) {
            Ok(bc) => c.boundary = Some(bc),
            Err(err) => notes.push(format!("boundary bound unavailable: {err}")),
        }
    }

    let scale = match sw.lambda_scale {
        LambdaScale::Absolute => 1.0,
        LambdaScale::Dirichlet => mu1,
    };
    let ctx = LevelContext {
        cfg,
        pencil,
        data,
        spectrum,
        constants,
        norm_w1,
        norm_wp,
    };
    let rows: Vec<SweepRow> = sw
        .lambda_grid()
        .par_iter()
        .map(|&l| ctx.point(e, l * scale))
        .collect::<Result<_>>()?;

    let mut reports = row_reports(&ctx, &rows);
    reports.extend(time_reports(&ctx)?);
    reports.extend(density_reports(&ctx, &rn, c_p.as_ref().map(|c| c.value), dec.diameter));
    if let Some(l) = cfg.constants.lieb_constant {
        if n >= 3 {
            match schrodinger::schrodinger_count(&field, e) {
                Ok(count) => {
                    let rhs = bounds::lieb_bound(&field, e, Some(l))?;
                    reports.push(BoundReport::evaluate(
                        "lieb",
                        inputs(&[("lieb_constant", l)]),
                        ("mu", e),
                        rhs,
                        Measured::Count(count as u64),
                        0.0,
                    ));
                }
                Err(err) => notes.push(format!("Lieb comparison skipped: {err}")),
            }
        }
    }

    let reduction = if e <= 0.0 {
        match with_nudge(sw.reduction_lambda, |l| schrodinger::reduction_check(&field, e, l)) {
            Ok((_, r)) => Some(r),
            Err(err) => {
                notes.push(format!("reduction check skipped: {err}"));
                None
            }
        }
    } else {
        notes.push("reduction check needs e <= 0".into());
        None
    };

    let report = LevelReport {
        e,
        interior_nodes: dec.interior.len(),
        boundary_nodes: dec.boundary.len(),
        components: dec.components.len(),
        diameter: dec.diameter,
        norm_w1,
        norm_wp,
        first_dirichlet_eigenvalue: Some(mu1),
        constants: ctx.constants.clone(),
        b,
        c_p,
        radon_nikodym: Some(rn),
        reduction,
        bounds: reports,
        notes,
    };
    Ok((rows, report))
}

fn row_reports(ctx: &LevelContext, rows: &[SweepRow]) -> Vec<BoundReport> {
    let Some(c) = &ctx.constants else {
        return Vec::new();
    };
    let mut out = Vec::new();
    for r in rows {
        if let (Some(rhs), Some(n_dir)) = (r.bound_thm54, r.n_dir) {
            out.push(BoundReport::evaluate(
                "dirichlet-count",
                inputs(&[
                    ("n", c.n as f64),
                    ("p", c.p),
                    ("d", c.d),
                    ("sobolev_n", c.sobolev_n),
                    ("norm_w1", ctx.norm_w1),
                    ("norm_wp", ctx.norm_wp),
                ]),
                ("lambda", r.lambda),
                rhs,
                Measured::Count(n_dir as u64),
                0.0,
            ));
        }
        if let (Some(rhs), Some(count), Some(gamma), Some(bc)) =
            (r.bound_thm59, r.n_a2r_gamma, r.gamma, &c.boundary)
        {
            out.push(BoundReport::evaluate(
                "a2r-count",
                inputs(&[("m", bc.m), ("c1", bc.c1), ("c2", bc.c2), ("norm_w1", ctx.norm_w1)]),
                ("gamma", gamma),
                rhs,
                Measured::Count(count as u64),
                0.0,
            ));
        }
    }
    out
}

fn time_reports(ctx: &LevelContext) -> Result<Vec<BoundReport>> {
    let Some(c) = &ctx.constants else {
        return Ok(Vec::new());
    };
    let mut out = Vec::new();
    let weights = ctx.pencil.interior_mass();
    let steklov = if ctx.data.s0.nrows() <= VECTOR_CAP {
        Some(eigcount::pencil_eigs(
            &crate::sparse::SymSparse::from_dense(&ctx.data.s0),
            &ctx.data.measures.mu_e,
            true,
        )?)
    } else {
        None
    };
    for t in ctx.cfg.sweeps.t_grid() {
        if let Some(s) = &ctx.spectrum {
            out.push(BoundReport::evaluate(
                "dirichlet-heat-trace",
                inputs(&[("d", c.d), ("sobolev_r", c.sobolev_r), ("norm_w1", ctx.norm_w1)]),
                ("t", t),
                bounds::trace_bound(c.d, c.sobolev_r, ctx.norm_w1, t),
                Measured::Real(eigcount::heat_trace(s, t)),
                REAL_TOLERANCE,
            ));
            if s.eigenvectors.is_some() {
                out.push(BoundReport::evaluate(
                    "dirichlet-ultracontractivity",
                    inputs(&[("d", c.d), ("sobolev_r", c.sobolev_r)]),
                    ("t", t),
                    bounds::ultracontractivity_bound(c.d, c.sobolev_r, t),
                    Measured::Real(eigcount::two_infinity_norm(s, &weights, t)?),
                    REAL_TOLERANCE,
                ));
            }
        }
        if let (Some(bc), Some(s)) = (&c.boundary, &steklov) {
            let ins = inputs(&[("m", bc.m), ("c1", bc.c1), ("c2", bc.c2), ("norm_w1", ctx.norm_w1)]);
            out.push(BoundReport::evaluate(
                "a2r-heat-trace",
                ins.clone(),
                ("t", t),
                bounds::a2r_trace_bound(bc.m, bc.c1, bc.c2, ctx.norm_w1, t),
                Measured::Real(eigcount::heat_trace(s, t)),
                REAL_TOLERANCE,
            ));
            out.push(BoundReport::evaluate(
                "a2r-ultracontractivity",
                ins,
                ("t", t),
                bounds::a2r_ultracontractivity_bound(bc.m, bc.c1, bc.c2, t),
                Measured::Real(eigcount::two_infinity_norm(s, &ctx.data.measures.mu_e, t)?),
                REAL_TOLERANCE,
            ));
        }
    }
    Ok(out)
}

fn density_reports(
    ctx: &LevelContext,
    rn: &a2r::RadonNikodym,
    c_p: Option<f64>,
    diameter: f64,
) -> Vec<BoundReport> {
    let p = ctx.cfg.sweeps.p;
    let n = ctx.pencil.grid.dimension();
    let mut out = vec![BoundReport::evaluate(
        "density-holder",
        inputs(&[("p", p), ("dnu_dsigma_inf", rn.dnu_dsigma_inf), ("norm_wp", ctx.norm_wp)]),
        ("p", p),
        rn.dnu_dsigma_inf.powf(1.0 - 1.0 / p) * ctx.norm_wp,
        Measured::Real(rn.dmu_dsigma_p),
        REAL_TOLERANCE,
    )];
    if let Some(c) = c_p {
        if n >= 2 {
            let conv = ctx.cfg.constants.omega_convention;
            out.push(
                BoundReport::evaluate(
                    "harmonic-density",
                    inputs(&[("c_p", c), ("diameter", diameter)]),
                    ("diameter", diameter),
                    bounds::harmonic_density_bound(c, n, diameter, conv),
                    Measured::Real(rn.dnu_dsigma_inf),
                    REAL_TOLERANCE,
                )
                .with_note("c_p is an empirical estimate unless configured"),
            );
        }
    }
    out
}
