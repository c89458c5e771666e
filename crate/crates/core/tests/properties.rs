use nalgebra::DMatrix;
use proptest::prelude::*;

use sublevel::eigcount::{self, count_below, BandLdl, SymFactor, ZERO_PIVOT_REL};
use sublevel::model::{Inertia, Verdict};
use sublevel::scenario::{read_csv, write_csv, ScenarioConfig, SweepRow};
use sublevel::sparse::SymSparse;

/// Inertia from the symmetric eigensolver, or `None` when an eigenvalue
/// sits too close to zero for the sign to be trusted.
fn eig_inertia(a: &DMatrix<f64>) -> Option<Inertia> {
    let ev = a.symmetric_eigenvalues();
    let scale = a.amax().max(1.0);
    if ev.iter().any(|v| v.abs() < 1e-7 * scale) {
        return None;
    }
    Some(Inertia {
        n_minus: ev.iter().filter(|&&v| v < 0.0).count(),
        n_zero: 0,
        n_plus: ev.iter().filter(|&&v| v > 0.0).count(),
    })
}

fn symmetric(n: usize, vals: &[f64]) -> DMatrix<f64> {
    let mut a = DMatrix::zeros(n, n);
    let mut it = vals.iter().cycle();
    for j in 0..n {
        for i in j..n {
            let v = *it.next().unwrap();
            a[(i, j)] = v;
            a[(j, i)] = v;
        }
    }
    a
}

fn banded(n: usize, bw: usize, vals: &[f64], shift: f64) -> SymSparse {
    let mut t = Vec::new();
    let mut it = vals.iter().cycle();
    for i in 0..n {
        for j in i..(i + bw + 1).min(n) {
            let v = *it.next().unwrap();
            t.push((i, j, if i == j { v + shift } else { v }));
        }
    }
    SymSparse::from_triplets(n, t)
}

fn sym_strategy(max_n: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (2..=max_n).prop_flat_map(|n| {
        prop::collection::vec(-4.0f64..4.0, n * (n + 1) / 2).prop_map(move |v| symmetric(n, &v))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn band_factor_agrees_with_eigenvalues(
        n in 49usize..120,
        bw in 1usize..5,
        vals in prop::collection::vec(-3.0f64..3.0, 64),
        shift in -2.0f64..6.0,
    ) {
        let a = banded(n, bw, &vals, shift);
        let Some(oracle) = eig_inertia(&a.to_dense()) else { return Ok(()) };
        let via_dispatch = SymFactor::of_sparse(&a).unwrap().inertia();
        prop_assert_eq!(via_dispatch, oracle);
        if let Some(f) = BandLdl::factor(&a, ZERO_PIVOT_REL * a.max_abs()) {
            prop_assert_eq!(f.inertia(), oracle);
            let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.37).sin()).collect();
            let mut x = b.clone();
            f.solve_in_place(&mut x);
            let r = a.mul_vec(&x);
            let res = r.iter().zip(&b).map(|(u, v)| (u - v).abs()).fold(0.0, f64::max);
            let xn = x.iter().map(|v| v.abs()).fold(0.0, f64::max);
            prop_assert!(res <= 1e-8 * (1.0 + a.max_abs() * xn), "residual {}", res);
        }
    }

    #[test]
    fn small_band_factor_agrees_with_eigenvalues(
        n in 1usize..30,
        bw in 1usize..4,
        vals in prop::collection::vec(-3.0f64..3.0, 32),
        shift in -2.0f64..6.0,
    ) {
        let a = banded(n, bw, &vals, shift);
        let Some(oracle) = eig_inertia(&a.to_dense()) else { return Ok(()) };
        if let Some(f) = BandLdl::factor(&a, ZERO_PIVOT_REL * a.max_abs()) {
            prop_assert_eq!(f.inertia(), oracle);
        }
    }

    #[test]
    fn sylvester_congruence_preserves_inertia(
        a in sym_strategy(12),
        lower in prop::collection::vec(-2.0f64..2.0, 78),
    ) {
        let n = a.nrows();
        let mut p = DMatrix::<f64>::identity(n, n);
        let mut it = lower.iter().cycle();
        for j in 0..n {
            for i in j + 1..n {
                p[(i, j)] = *it.next().unwrap();
            }
        }
        let congruent = p.transpose() * &a * &p;
        let Some(oracle) = eig_inertia(&a) else { return Ok(()) };
        prop_assert_eq!(eigcount::inertia(&a).unwrap(), oracle);
        if eig_inertia(&congruent).is_some() {
            prop_assert_eq!(eigcount::inertia(&congruent).unwrap(), oracle);
        }
    }

    #[test]
    fn schur_complement_inertia_is_additive(a in sym_strategy(12), split in 1usize..11) {
        let n = a.nrows();
        let k = split.min(n - 1);
        let a11 = a.view((0, 0), (k, k)).into_owned();
        let a12 = a.view((0, k), (k, n - k)).into_owned();
        let a22 = a.view((k, k), (n - k, n - k)).into_owned();
        let (Some(_), Some(whole)) = (eig_inertia(&a11), eig_inertia(&a)) else { return Ok(()) };
        let Some(inv) = a11.clone().try_inverse() else { return Ok(()) };
        let schur = &a22 - a12.transpose() * inv * &a12;
        let schur = 0.5 * (&schur + schur.transpose());
        if eig_inertia(&schur).is_none() {
            return Ok(());
        }
        let lhs = eigcount::inertia(&a).unwrap();
        let rhs = eigcount::inertia(&a11).unwrap() + eigcount::inertia(&schur).unwrap();
        prop_assert_eq!(lhs, whole);
        prop_assert_eq!(lhs, rhs);
    }

    #[test]
    fn pencil_count_matches_regularized_eigenvalues(
        n in 2usize..14,
        vals in prop::collection::vec(-1.0f64..1.0, 196),
        masses in prop::collection::vec(0.0f64..2.0, 14),
        zero_mask in prop::collection::vec(any::<bool>(), 14),
        lambda in 0.05f64..6.0,
    ) {
        // K = BᵀB + I/2 is positive definite, so the null space of M is harmless.
        let b = DMatrix::from_iterator(n, n, vals.iter().copied().take(n * n));
        let k = b.transpose() * &b + DMatrix::<f64>::identity(n, n) * 0.5;
        let m: Vec<f64> = (0..n)
            .map(|i| if zero_mask[i] { 0.0 } else { 0.1 + masses[i] })
            .collect();
        // Finite eigenvalues of (K, M + εI) converge to those of (K, M);
        // the massless directions escape to order 1/ε.
        let eps = 1e-11;
        let mut h = k.clone();
        for i in 0..n {
            for j in 0..n {
                h[(i, j)] /= ((m[i] + eps) * (m[j] + eps)).sqrt();
            }
        }
        let ev = h.symmetric_eigenvalues();
        if ev.iter().any(|&v| (v - lambda).abs() < 1e-6 * lambda.max(1.0)) {
            return Ok(());
        }
        let oracle = ev.iter().filter(|&&v| v < lambda).count();
        let got = count_below(&SymSparse::from_dense(&k), &m, lambda).unwrap();
        prop_assert_eq!(got, oracle);
    }

    #[test]
    fn sweep_rows_survive_csv(
        lambda in 1e-3f64..1e3,
        n_full in 0usize..1000,
        n_dir in 0usize..1000,
        gamma in prop::option::of(1e-3f64..1e6),
        holds in prop::option::of(any::<bool>()),
    ) {
        let mut row = SweepRow::count_only("p", Some(-1.5), lambda, n_full);
        row.n_dir = Some(n_dir);
        row.gamma = gamma;
        row.identity_holds = holds;
        row.verdict_thm54 = Verdict::Violated;
        let mut buf = Vec::new();
        write_csv(std::slice::from_ref(&row), &mut buf).unwrap();
        let back = read_csv(std::str::from_utf8(&buf).unwrap()).unwrap();
        prop_assert_eq!(back, vec![row]);
    }

    #[test]
    fn configs_survive_toml(
        res in 3usize..40,
        depth in 0.1f64..100.0,
        width in 0.05f64..2.0,
        seed in any::<u32>(),
        energies in prop::collection::vec(-50.0f64..-0.01, 1..4),
    ) {
        let text = format!(
            "scenario_id = \"rt\"\nseed = {seed}\n[grid]\nlower = [-1.0, -1.0]\nupper = [1.0, 1.0]\n\
             resolution = [{res}, {res}]\n[potential]\nfamily = \"gaussian_well\"\ncenter = [0.0, 0.0]\n\
             width = {width:?}\ndepth = {depth:?}\n[levels]\nenergies = {energies:?}\n"
        );
        let cfg = ScenarioConfig::from_toml(&text).unwrap();
        let again = ScenarioConfig::from_toml(&cfg.to_toml().unwrap()).unwrap();
        prop_assert_eq!(again, cfg);
    }
}
