use std::sync::OnceLock;

use cavity_ef::cli::{format_num, RunConfig};
use cavity_ef::efactor::{
    eph_potential_exact, eph_potential_general, factorize, pnc_deviation, reconstruction_error, FactorizedState,
    FullState,
};
use cavity_ef::eigensolver::solve_lowest;
use cavity_ef::lcao_dho::{
    dho_overlap, dho_overlap_quadrature, dho_q_element, peak_height_formula, ApproxModel, Branch,
};
use cavity_ef::model::{assemble_coupled_hamiltonian, Grid2D, GridSpec, ModelParams, SymmetricOperator};
use cavity_ef::quadrature::{laguerre, laguerre_direct};
use proptest::prelude::*;

fn params() -> impl Strategy<Value = ModelParams> {
    (0.0..1.0f64, 0.2..0.8f64).prop_map(|(l, w)| ModelParams::default().with_coupling(l, w))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn adw_asymmetry_is_linear(x in -8.0..8.0f64) {
        let p = ModelParams::default();
        let d = p.adw_potential(x) - p.adw_potential(-x);
        prop_assert!((d - 2.0 * p.efield * x).abs() < 1e-12);
    }

    #[test]
    fn photon_potential_vanishes_at_displaced_centre(p in params(), x in -6.0..6.0f64) {
        prop_assume!(p.lambda_c > 0.0);
        prop_assert!(p.photon_potential(p.photon_center(x), x).abs() < 1e-12);
        prop_assert!(p.photon_potential(p.photon_center(x) + 0.3, x) > 0.0);
    }

    #[test]
    fn laguerre_forms_agree(n in 0usize..15, x in 0.0..8.0f64) {
        let a = laguerre(n, 1.0, x);
        let b = laguerre_direct(n, 1.0, x);
        prop_assert!((a - b).abs() <= 1e-8 * b.abs().max(1.0));
    }

    #[test]
    fn overlap_bounded_and_matches_quadrature(n in 1usize..6, p in params()) {
        let o = dho_overlap(n, &p).unwrap();
        prop_assert!(o.abs() <= 1.0);
        prop_assert!((o - dho_overlap_quadrature(n, &p).unwrap()).abs() < 1e-10);
    }

    #[test]
    fn q_element_is_overlap_over_displacement(n in 1usize..6, p in params()) {
        prop_assume!(p.lambda_c > 0.05);
        let q = dho_q_element(n, &p).unwrap();
        let o = dho_overlap(n, &p).unwrap();
        prop_assert!((q - o / (2.0 * p.lambda_c * p.a)).abs() < 1e-10);
    }

    #[test]
    fn kinetic_term_at_origin_obeys_peak_formula(n in 1usize..4, p in params(), plus in any::<bool>()) {
        let branch = if plus { Branch::Plus } else { Branch::Minus };
        let m = ApproxModel::new(n, branch, &p).unwrap();
        let h = peak_height_formula(m.overlap, branch, &p);
        prop_assert!((m.kinetic(0.0) - h).abs() < 1e-12 * h.max(1.0));
    }

    #[test]
    fn marginal_normalized(n in 1usize..4, p in params(), plus in any::<bool>()) {
        let branch = if plus { Branch::Plus } else { Branch::Minus };
        let m = ApproxModel::new(n, branch, &p).unwrap();
        let dx = 0.01;
        let s: f64 = (-1500..=1500).map(|i| m.marginal(i as f64 * dx).powi(2)).sum::<f64>() * dx;
        prop_assert!((s - 1.0).abs() < 1e-6);
    }

    #[test]
    fn csv_numbers_round_trip(v in any::<f64>()) {
        prop_assume!(v.is_finite());
        prop_assert_eq!(format_num(v).parse::<f64>().unwrap().to_bits(), v.to_bits());
    }

    #[test]
    fn config_round_trips(p in params(), nx in 20usize..400, nq in 20usize..400, k in 1usize..10, tol in 1e-12..1e-6f64) {
        let mut cfg = RunConfig::default();
        cfg.model = p;
        cfg.grid.nx = nx;
        cfg.grid.nq = nq;
        cfg.solver.k = k;
        cfg.solver.tol = tol;
        let back = RunConfig::from_toml(&cfg.to_toml()).unwrap();
        prop_assert_eq!(back, cfg);
    }
}

fn small_grid(p: &ModelParams) -> Grid2D {
    GridSpec {
        nx: 31,
        nq: 29,
        ..GridSpec::default()
    }
    .build(p)
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn coupled_operator_symmetric(p in params(), seed in any::<u64>()) {
        let g = small_grid(&p);
        let h = assemble_coupled_hamiltonian(&g, &p).unwrap();
        let n = h.dim();
        let mut s = seed | 1;
        let mut rnd = || {
            s ^= s << 13;
            s ^= s >> 7;
            s ^= s << 17;
            (s >> 11) as f64 / (1u64 << 53) as f64 - 0.5
        };
        let u: Vec<f64> = (0..n).map(|_| rnd()).collect();
        let v: Vec<f64> = (0..n).map(|_| rnd()).collect();
        let (mut hu, mut hv) = (vec![0.0; n], vec![0.0; n]);
        h.apply(&u, &mut hu);
        h.apply(&v, &mut hv);
        let a: f64 = v.iter().zip(&hu).map(|(x, y)| x * y).sum();
        let b: f64 = u.iter().zip(&hv).map(|(x, y)| x * y).sum();
        prop_assert!((a - b).abs() <= 1e-10 * a.abs().max(1.0));
    }

    /// Random smooth states: PNC and Φχ = Ψ hold by construction.
    #[test]
    fn factorization_of_arbitrary_states(p in params(), c in prop::collection::vec(-1.0..1.0f64, 4)) {
        let g = small_grid(&p);
        let mut psi: Vec<f64> = Vec::with_capacity(g.dim());
        for &x in g.x.nodes() {
            for &q in g.q.nodes() {
                let env = (-(x * x) / 8.0 - p.omega_c * q * q / 2.0).exp();
                psi.push(env * (1.0 + c[0] * x + c[1] * q + c[2] * x * q + c[3] * (x - q).sin()));
            }
        }
        let norm = (psi.iter().map(|v| v * v).sum::<f64>() * g.dx() * g.dq()).sqrt();
        prop_assume!(norm > 1e-6);
        let state = FullState { psi: psi.iter().map(|v| v / norm).collect(), energy: 0.0, index: 0 };
        let f = factorize(&state, &g).unwrap();
        prop_assert!(pnc_deviation(&f, &g) < 1e-10);
        prop_assert!(reconstruction_error(&f, &state, &g) < 1e-12);
    }
}

fn reference_state() -> &'static (Grid2D, ModelParams, FactorizedState) {
    static CELL: OnceLock<(Grid2D, ModelParams, FactorizedState)> = OnceLock::new();
    CELL.get_or_init(|| {
        let p = ModelParams::default().with_coupling(0.5, 0.39495042);
        let g = GridSpec::reduced().build(&p).unwrap();
        let h = assemble_coupled_hamiltonian(&g, &p).unwrap();
        let res = solve_lowest(&h, 2, 1e-10).unwrap();
        let st = FullState::from_pair(&res.pairs[1], &g, 1);
        let f = factorize(&st, &g).unwrap();
        (g, p, f)
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn potential_is_gauge_invariant(a in -2.0..2.0f64, k in 0.1..2.0f64, b in -0.5..0.5f64) {
        let (g, p, f) = reference_state();
        let exact = eph_potential_exact(f, g, p);
        let moved = f.to_complex().gauge_transform(g, |x| a * (k * x).sin() + b * x * x, |x| a * k * (k * x).cos() + 2.0 * b * x);
        let general = eph_potential_general(&moved, g, p);
        for i in 0..exact.x.len() {
            if exact.mask[i] {
                let scale = exact.total[i].abs().max(1.0);
                prop_assert!((exact.total[i] - general.total[i]).abs() < 1e-8 * scale);
            }
        }
    }
}
