//! Acceptance suite. Prints one PASS/FAIL line per criterion, followed by
//! indented detail lines, and exits nonzero if any criterion fails. The
//! bound-suite criterion is a measurement: its failures are printed as
//! findings and do not change the exit status.

use std::path::{Path, PathBuf};
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use sublevel::a2r::{
    a2r_count, a_lambda_norm, boundary_data, contraction_gap, dirichlet_spectrum, schur_form,
    shift_identity_residual, splitting_counts, verify_isomorphism,
};
use sublevel::assemble::{sublevel_pencil, ClassifyOptions};
use sublevel::bounds::polya_weyl_bound;
use sublevel::eigcount::{count_below, pencil_eigs, with_nudge};
use sublevel::model::{build_potential, AssembledPencil, GridSpec, PotentialFamily, Verdict};
use sublevel::scenario::{run_scenario, to_json, write_csv, ScenarioConfig};
use sublevel::schrodinger::{box_exact_count, reduction_check};
use sublevel::sparse::SymSparse;
use sublevel::Error;

/// Residual limit for the shift identity and the extension isomorphism.
const RESIDUAL_TOL: f64 = 1e-10;
/// Slack for quadratic-form inequalities, relative to the form scale.
const FORM_TOL: f64 = 1e-10;
const RANDOM_SCENARIOS: usize = 100;
const BOUNDARY_VECTORS: usize = 100;
const RANDOM_PENCILS: usize = 500;
/// Criterion whose failures are findings about the bounds, not defects.
const FINDING_ONLY: usize = 7;
/// Multiples of the first Dirichlet eigenvalue probed in each random scenario.
const LAMBDA_MULTIPLES: [f64; 6] = [0.4, 0.9, 1.7, 3.0, 5.0, 8.0];

struct Outcome {
    pass: bool,
    summary: String,
    details: Vec<String>,
}

fn scenarios_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

fn uniform(rng: &mut ChaCha8Rng, a: f64, b: f64) -> f64 {
    rng.random_range(a..b)
}

fn center(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| uniform(rng, -0.6, 0.6)).collect()
}

/// A random 2D or 3D well and a level with a nonempty sublevel set.
fn random_scenario(index: usize) -> (String, AssembledPencil) {
    let mut rng = ChaCha8Rng::seed_from_u64(1000 + index as u64);
    let n = if index % 2 == 0 { 2 } else { 3 };
    loop {
        let res = if n == 2 {
            rng.random_range(17..=35)
        } else {
            rng.random_range(9..=15)
        };
        let grid = GridSpec::cube(n, -2.0, 2.0, res).unwrap();
        let (fam, kind) = match index % 4 {
            0 | 1 => {
                let c = center(&mut rng, n);
                (
                    PotentialFamily::BallWell {
                        center: c,
                        radius: uniform(&mut rng, 0.6, 1.3),
                        depth: uniform(&mut rng, 2.0, 15.0),
                    },
                    "ball",
                )
            }
            2 => {
                let c = center(&mut rng, n);
                (
                    PotentialFamily::GaussianWell {
                        center: c,
                        width: uniform(&mut rng, 0.3, 0.8),
                        depth: uniform(&mut rng, 2.0, 15.0),
                    },
                    "gaussian",
                )
            }
            _ => {
                if rng.random_bool(0.5) {
                    let (a, b) = (center(&mut rng, n), center(&mut rng, n));
                    (
                        PotentialFamily::MultiWell {
                            wells: vec![
                                PotentialFamily::GaussianWell {
                                    center: a,
                                    width: uniform(&mut rng, 0.25, 0.5),
                                    depth: uniform(&mut rng, 4.0, 12.0),
                                },
                                PotentialFamily::GaussianWell {
                                    center: b,
                                    width: uniform(&mut rng, 0.25, 0.5),
                                    depth: uniform(&mut rng, 4.0, 12.0),
                                },
                            ],
                        },
                        "two-well",
                    )
                } else {
                    (
                        PotentialFamily::BandLimitedRandom {
                            seed: rng.random(),
                            cutoff: 3,
                            amplitude: uniform(&mut rng, 5.0, 15.0),
                        },
                        "band-limited",
                    )
                }
            }
        };
        let v = build_potential(&fam, &grid).unwrap();
        let vmin = v.values().iter().copied().fold(f64::INFINITY, f64::min);
        if vmin >= 0.0 {
            continue;
        }
        let e = vmin * uniform(&mut rng, 0.15, 0.7);
        match sublevel_pencil(&v, e, ClassifyOptions::default()) {
            Ok(p) if p.interior.len() >= 2 => {
                return (format!("#{index} {n}D {kind} res {res} e {e:.3}"), p);
            }
            Ok(_) | Err(Error::EmptySublevel) => continue,
            Err(other) => panic!("scenario {index}: {other}"),
        }
    }
}

#[derive(Default)]
struct ScenarioResult {
    points: usize,
    identity_failures: Vec<String>,
    inequality_failures: Vec<String>,
    max_identity_residual: f64,
    max_isomorphism_residual: f64,
    residual_checked: bool,
    contraction_failures: usize,
    lower_bound_failures: usize,
    form_checks: usize,
}

fn check_scenario(index: usize) -> ScenarioResult {
    let (label, p) = random_scenario(index);
    let mut rng = ChaCha8Rng::seed_from_u64(5000 + index as u64);
    let mut out = ScenarioResult::default();
    let spec = dirichlet_spectrum(&p, false).unwrap();
    let data = boundary_data(&p).unwrap();
    let mu = DMatrix::from_diagonal(&DVector::from_vec(data.measures.mu_e.clone()));
    let nb = p.boundary.len();
    let random_phi = |rng: &mut ChaCha8Rng| DVector::from_fn(nb, |_, _| rng.random_range(-1.0..1.0));

    let gap = contraction_gap(&p, &data);
    let gap_scale = mu.amax();
    for _ in 0..BOUNDARY_VECTORS {
        let phi = random_phi(&mut rng);
        out.form_checks += 1;
        if phi.dot(&(&gap * &phi)) < -FORM_TOL * gap_scale * phi.norm_squared() {
            out.contraction_failures += 1;
        }
    }

    out.residual_checked = p.order() <= 2000;
    let mu1 = spec.eigenvalues[0];
    for m in LAMBDA_MULTIPLES {
        let (lam, (counts, s_lam, gamma)) = with_nudge(m * mu1, |l| {
            let counts = splitting_counts(&p, l)?;
            let s = schur_form(&p, l)?;
            let g = a_lambda_norm(&spec, l)?;
            Ok((counts, s, g))
        })
        .unwrap();
        out.points += 1;
        if !counts.identity_holds {
            out.identity_failures.push(format!("{label} λ = {lam}: {counts:?}"));
        }
        let n_a2r = a2r_count(&data.s0, &data.measures, gamma).unwrap();
        if counts.n_full > counts.n_dir + n_a2r {
            out.inequality_failures.push(format!(
                "{label} λ = {lam}: N_full {} > N_dir {} + {n_a2r}",
                counts.n_full, counts.n_dir
            ));
        }
        let lower = &data.s0 - gamma * &mu;
        for _ in 0..BOUNDARY_VECTORS {
            let phi = random_phi(&mut rng);
            let a = phi.dot(&(&s_lam * &phi));
            let b = phi.dot(&(&lower * &phi));
            out.form_checks += 1;
            if a < b - FORM_TOL * a.abs().max(b.abs()).max(1e-300) {
                out.lower_bound_failures += 1;
            }
        }
        if out.residual_checked {
            out.max_identity_residual = out
                .max_identity_residual
                .max(shift_identity_residual(&p, lam).unwrap());
            let phi: Vec<f64> = random_phi(&mut rng).iter().copied().collect();
            out.max_isomorphism_residual = out
                .max_isomorphism_residual
                .max(verify_isomorphism(&p, lam, &phi).unwrap());
        }
    }
    out
}

fn random_scenario_criteria() -> [Outcome; 4] {
    let start = Instant::now();
    let results: Vec<ScenarioResult> = (0..RANDOM_SCENARIOS).into_par_iter().map(check_scenario).collect();
    let secs = start.elapsed().as_secs_f64();
    let points: usize = results.iter().map(|r| r.points).sum();

    let id_fail: Vec<String> = results.iter().flat_map(|r| r.identity_failures.clone()).collect();
    let c1 = Outcome {
        pass: id_fail.is_empty() && secs <= 300.0,
        summary: format!(
            "exact splitting identity: {}/{points} sweep points on {RANDOM_SCENARIOS} random 2D/3D scenarios, {secs:.1} s (limit 300 s)",
            points - id_fail.len()
        ),
        details: id_fail,
    };

    let ineq_fail: Vec<String> = results.iter().flat_map(|r| r.inequality_failures.clone()).collect();
    let c2 = Outcome {
        pass: ineq_fail.is_empty(),
        summary: format!(
            "splitting inequality with γ = ‖λA_λ‖: {}/{points} sweep points",
            points - ineq_fail.len()
        ),
        details: ineq_fail,
    };

    let checked: Vec<&ScenarioResult> = results.iter().filter(|r| r.residual_checked).collect();
    let id_res = checked.iter().map(|r| r.max_identity_residual).fold(0.0, f64::max);
    let iso_res = checked.iter().map(|r| r.max_isomorphism_residual).fold(0.0, f64::max);
    let c4 = Outcome {
        pass: !checked.is_empty() && id_res <= RESIDUAL_TOL && iso_res <= RESIDUAL_TOL,
        summary: format!(
            "shift identity / isomorphism residuals: max {id_res:.2e} / {iso_res:.2e} on {} pencils of order <= 2000 (limit {RESIDUAL_TOL:e})",
            checked.len()
        ),
        details: vec![],
    };

    let checks: usize = results.iter().map(|r| r.form_checks).sum();
    let cf: usize = results.iter().map(|r| r.contraction_failures).sum();
    let lf: usize = results.iter().map(|r| r.lower_bound_failures).sum();
    let c5 = Outcome {
        pass: cf == 0 && lf == 0,
        summary: format!(
            "contraction and shifted-form lower bound: {} of {checks} random boundary vectors hold ({cf} contraction, {lf} lower-bound failures)",
            checks - cf - lf
        ),
        details: vec![],
    };
    [c1, c2, c4, c5]
}

fn ball_well_config() -> ScenarioConfig {
    ScenarioConfig::load(&scenarios_dir().join("ball_well_3d.cfg")).unwrap()
}

fn reduction_sweep() -> Outcome {
    let cfg = ball_well_config();
    let v = cfg.build_field().unwrap();
    let depth = -v.values().iter().copied().fold(f64::INFINITY, f64::min);
    let mut details = Vec::new();
    let mut holds = 0;
    let levels: Vec<f64> = (0..10).map(|k| -depth * (k as f64 + 0.5) / 10.0).collect();
    for &e in &levels {
        let (_, r) = with_nudge(1.0, |l| reduction_check(&v, e, l)).unwrap();
        if r.inequality_holds {
            holds += 1;
        }
        details.push(format!(
            "e = {e:.2}: N_schrodinger {} <= N_weighted {}",
            r.n_schrodinger, r.n_weighted_full
        ));
    }
    Outcome {
        pass: holds == levels.len(),
        summary: format!(
            "bound-state reduction on the 3D ball well: {holds}/{} levels",
            levels.len()
        ),
        details,
    }
}

fn weyl_oracle() -> Outcome {
    let start = Instant::now();
    let seven = box_exact_count(3, 1.0, 100.0).unwrap();
    let mut worst: f64 = 0.0;
    let mut polya_ok = true;
    let mut mu: f64 = 1.0;
    let mut points = 0;
    while mu <= 1e4 {
        let n = box_exact_count(3, 1.0, mu).unwrap() as f64;
        let rhs = polya_weyl_bound(3, 1.0, mu).unwrap();
        polya_ok &= n <= rhs;
        worst = worst.max(n / rhs);
        points += 1;
        mu *= 1.1;
    }
    let ratio = box_exact_count(3, 1.0, 1e4).unwrap() as f64 / polya_weyl_bound(3, 1.0, 1e4).unwrap();
    let secs = start.elapsed().as_secs_f64();
    Outcome {
        pass: seven == 7 && polya_ok && (0.85..=1.0).contains(&ratio) && secs <= 30.0,
        summary: format!(
            "cube counts: N(100) = {seven}, Pólya on {points} log-spaced μ <= 1e4 (max ratio {worst:.4}), Weyl ratio at 1e4 = {ratio:.4}, {secs:.2} s"
        ),
        details: vec![],
    }
}

fn bound_suite() -> Outcome {
    let mut per_res = Vec::new();
    let mut details = Vec::new();
    let mut violations = 0;
    for res in [17usize, 21] {
        let mut cfg = ball_well_config();
        cfg.grid.as_mut().unwrap().resolution = vec![res; 3];
        let out = run_scenario(&cfg).unwrap();
        let mut entries = Vec::new();
        for level in &out.report.levels {
            for b in &level.bounds {
                if b.verdict == Verdict::Violated {
                    violations += 1;
                    details.push(format!("finding: res {res} e {} {} at {:?}", level.e, b.name, b.at));
                }
                let lhs = b.lhs.map(|m| m.as_f64());
                entries.push((b.name.clone(), lhs, b.rhs));
            }
        }
        per_res.push(entries);
    }
    // Pair entries by position; both runs use the same relative λ and t grids.
    let (coarse, fine) = (&per_res[0], &per_res[1]);
    let mut names: Vec<String> = coarse.iter().map(|e| e.0.clone()).collect();
    names.sort();
    names.dedup();
    let mut monotone = true;
    for name in names {
        let mut gaps = (0.0, 0.0, 0usize);
        for (a, b) in coarse.iter().zip(fine) {
            assert_eq!(a.0, b.0, "bound lists differ between resolutions");
            if a.0 != name {
                continue;
            }
            if let (Some(la), Some(lb)) = (a.1, b.1) {
                if la > 0.0 && lb > 0.0 && a.2.is_finite() && b.2.is_finite() {
                    gaps.0 += (a.2 / la).ln();
                    gaps.1 += (b.2 / lb).ln();
                    gaps.2 += 1;
                }
            }
        }
        if gaps.2 == 0 {
            continue;
        }
        let (g17, g21) = (gaps.0 / gaps.2 as f64, gaps.1 / gaps.2 as f64);
        let ok = g21 <= g17 + 1e-9 * g17.abs().max(1.0);
        monotone &= ok;
        details.push(format!(
            "{name}: mean log(rhs/lhs) {g17:.4} at res 17, {g21:.4} at res 21 over {} points{}",
            gaps.2,
            if ok { "" } else { "  <- gap grows" }
        ));
    }
    Outcome {
        pass: violations == 0 && monotone,
        summary: format!(
            "bound suite on the 3D ball well at resolutions 17 and 21: {violations} violations, gap {} under refinement",
            if monotone { "nonincreasing" } else { "not nonincreasing" }
        ),
        details,
    }
}

fn random_pencil(rng: &mut ChaCha8Rng) -> (SymSparse, Vec<f64>) {
    let n = rng.random_range(1..=64);
    let banded = rng.random_bool(0.5);
    let with_null = rng.random_bool(0.5);
    let bw = if banded { rng.random_range(1..=4) } else { n };
    let mut b = DMatrix::<f64>::zeros(n, n);
    for i in 0..n {
        for j in i..n.min(i + bw + 1) {
            let v = rng.random_range(-1.0..1.0);
            b[(i, j)] = v;
            b[(j, i)] = v;
        }
    }
    let k = if with_null {
        // Positive definite so the massless coordinates can be eliminated.
        let shift = -b.symmetric_eigenvalues().min() + rng.random_range(0.1..1.0);
        b + DMatrix::identity(n, n) * shift
    } else {
        b
    };
    let mass: Vec<f64> = (0..n)
        .map(|_| {
            if with_null && rng.random_bool(0.3) {
                0.0
            } else {
                rng.random_range(0.1..2.0)
            }
        })
        .collect();
    (SymSparse::from_dense(&k), mass)
}

fn oracle_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut agree = 0;
    let mut details = Vec::new();
    for case in 0..RANDOM_PENCILS {
        let (k, m) = random_pencil(&mut rng);
        let spec = pencil_eigs(&k, &m, false).unwrap();
        let ev = &spec.eigenvalues;
        // A shift between two eigenvalues, clear of both.
        let lambda = if ev.is_empty() {
            1.0
        } else {
            let j = rng.random_range(0..=ev.len());
            match j {
                0 => ev[0] - 1.0,
                j if j == ev.len() => ev[j - 1] + 1.0,
                j => 0.5 * (ev[j - 1] + ev[j]),
            }
        };
        let near = ev.iter().any(|&x| (x - lambda).abs() <= 1e-9 * x.abs().max(1.0));
        let count = if near {
            with_nudge(lambda, |l| count_below(&k, &m, l)).map(|(l, c)| (c, spec.count_below(l)))
        } else {
            count_below(&k, &m, lambda).map(|c| (c, spec.count_below(lambda)))
        };
        match count {
            Ok((a, b)) if a == b => agree += 1,
            Ok((a, b)) => details.push(format!("case {case}: inertia {a}, eigensolver {b}")),
            Err(e) => details.push(format!("case {case}: {e}")),
        }
    }
    Outcome {
        pass: agree == RANDOM_PENCILS,
        summary: format!("inertia counts vs dense eigensolver: {agree}/{RANDOM_PENCILS} random pencils of order <= 64"),
        details,
    }
}

fn render(cfg: &ScenarioConfig) -> (Vec<u8>, String) {
    let out = run_scenario(cfg).unwrap();
    let mut csv = Vec::new();
    write_csv(&out.rows, &mut csv).unwrap();
    (csv, to_json(&out.report).unwrap())
}

fn determinism() -> Outcome {
    let mut configs: Vec<PathBuf> = std::fs::read_dir(scenarios_dir())
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.extension().is_some_and(|x| x == "cfg"))
        .collect();
    configs.sort();
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    let mut same = 0;
    let mut details = Vec::new();
    for path in &configs {
        let cfg = ScenarioConfig::load(path).unwrap();
        let a = render(&cfg);
        let b = render(&cfg);
        let c = single.install(|| render(&cfg));
        if a == b && a == c {
            same += 1;
        } else {
            details.push(format!("{} differs between runs", path.display()));
        }
    }
    Outcome {
        pass: !configs.is_empty() && same == configs.len(),
        summary: format!(
            "determinism: {same}/{} bundled configs byte-identical across two runs and a single-thread run",
            configs.len()
        ),
        details,
    }
}

fn main() {
    let start = Instant::now();
    let [c1, c2, c4, c5] = random_scenario_criteria();
    let criteria = [
        (1, c1),
        (2, c2),
        (3, reduction_sweep()),
        (4, c4),
        (5, c5),
        (6, weyl_oracle()),
        (7, bound_suite()),
        (8, oracle_equivalence()),
        (9, determinism()),
    ];
    let mut failed = 0;
    let mut fatal = 0;
    for (id, o) in &criteria {
        let finding = *id == FINDING_ONLY && !o.pass;
        println!(
            "{} [{id}] {}{}",
            if o.pass { "PASS" } else { "FAIL" },
            o.summary,
            if finding { " (reported as a finding)" } else { "" }
        );
        for d in &o.details {
            println!("       {d}");
        }
        failed += usize::from(!o.pass);
        fatal += usize::from(!o.pass && !finding);
    }
    println!(
        "acceptance: {}/{} criteria pass in {:.1} s",
        criteria.len() - failed,
        criteria.len(),
        start.elapsed().as_secs_f64()
    );
    if fatal > 0 {
        std::process::exit(1);
    }
}
