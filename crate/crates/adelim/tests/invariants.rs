//! Property checks across modules, driven through the public API.

use adelim::cp::{self, DEFAULT_TOL};
use adelim::elimination::{eliminate, gauge_transform, second_order_cp_gauge, CompositeModel, GaugeSeq};
use adelim::jc::{self, JCParams};
use adelim::linalg::{self, c};
use adelim::spectral::{self, diagonalize, pseudo_inverse, propagator};
use adelim::dispersive::DispersiveParams;
use adelim::random;
use adelim::{Operator, SuperOp};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn model(seed: u64, da: usize, db: usize) -> CompositeModel {
    random::composite_model(&mut rng(seed), da, db)
}

/// Qubits coupled through three traceless `A_k` and three generic `B_k`, so
/// `eta` can be positive definite on the whole traceless operator space of `B`.
fn traceless_model(seed: u64) -> CompositeModel {
    let mut r = rng(seed);
    let fast = random::lindbladian(&mut r, 2, 2);
    let slow = random::lindbladian(&mut r, 2, 1).superop();
    let terms: Vec<(Operator, Operator)> = (0..3)
        .map(|_| {
            let a = random::hermitian(&mut r, 2);
            let a = a.sub(&Operator::identity(2).scale(a.trace() * 0.5));
            (a, random::hermitian(&mut r, 2))
        })
        .collect();
    let mut h = Operator::zeros(4);
    for (a, b) in &terms {
        h = h.add(&a.dag().kron(b));
    }
    CompositeModel::new(fast, slow, h, Some(terms)).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn eigenbasis_is_biorthonormal(seed in any::<u64>(), d in 2usize..4, nj in 1usize..4) {
        let l = random::lindbladian(&mut rng(seed), d, nj);
        let spec = diagonalize(&l.superop()).unwrap();
        prop_assert!(spec.biorthonormality_defect() < 1e-9);
    }

    #[test]
    fn pseudo_inverse_kills_trace_and_keeps_hermiticity(seed in any::<u64>(), d in 2usize..4) {
        let s = random::lindbladian(&mut rng(seed), d, 2).superop();
        let p = pseudo_inverse(&s, &diagonalize(&s).unwrap()).unwrap();
        let scale = p.max_abs().max(1.0);
        prop_assert!(p.trace_annihilation_defect() < 1e-10 * scale);
        let a = random::ginibre(&mut rng(seed ^ 1), d);
        let lhs = p.apply_op(&a.dag()).unwrap();
        let rhs = p.apply_op(&a).unwrap().dag();
        prop_assert!(lhs.dist(&rhs) < 1e-10 * scale);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn reduced_generators_annihilate_trace(seed in any::<u64>(), da in 2usize..4, db in 2usize..4) {
        let m = model(seed, da, db);
        let e = eliminate(&m, 3, &GaugeSeq::zero(db)).unwrap();
        for n in 0..=3 {
            let ls = e.ls(n);
            let scale = ls.max_abs().max(1.0);
            prop_assert!(ls.trace_annihilation_defect() < 1e-10 * scale, "order {}", n);
            prop_assert!(ls.hermiticity_preservation_defect() < 1e-10 * scale, "order {}", n);
        }
    }

    #[test]
    fn second_order_generator_is_lindblad(seed in any::<u64>(), da in 2usize..4, db in 2usize..4) {
        let m = model(seed, da, db);
        let e = eliminate(&m, 2, &GaugeSeq::zero(db)).unwrap();
        for eps in [1e-3, 1e-2] {
            let v = cp::is_lindbladian(&e.ls_sum(eps, 2), DEFAULT_TOL).unwrap();
            prop_assert!(v.is_lindblad, "eps {} min {:e}", eps, v.min_projected_eig);
        }
    }

    #[test]
    fn third_order_generator_is_lindblad_when_eta_is_invertible(seed in any::<u64>()) {
        let m = traceless_model(seed);
        let cg = second_order_cp_gauge(&m, 1.0);
        prop_assume!(cg.is_ok());
        let eta_min = linalg::min_eig_hermitian(&cg.unwrap().eta.view()).unwrap();
        prop_assume!(eta_min > 1e-3);
        let e = eliminate(&m, 3, &GaugeSeq::zero(2)).unwrap();
        // the eps^2 eta part has to dominate the third-order term
        let eps = (0.1 * eta_min / e.ls(3).max_abs().max(1.0)).min(1e-3);
        // tolerance scaled to the eps^2 part so the check is not absorbed by DEFAULT_TOL
        let v = cp::is_lindbladian(&e.ls_sum(eps, 3), 1e-3 * eps * eps * eta_min).unwrap();
        prop_assert!(v.is_lindblad,
            "eps {:e}, min {:e}, eta_min {:e}", eps, v.min_projected_eig, eta_min);
    }

    #[test]
    fn first_order_assignment_negativity_is_second_order(seed in any::<u64>()) {
        let m = model(seed, 2, 2);
        let e = eliminate(&m, 1, &GaugeSeq::zero(2)).unwrap();
        let min = |eps: f64| {
            let k = e.k(0).add(&e.k(1).scale(c(eps, 0.0)));
            cp::is_completely_positive_map(&k, DEFAULT_TOL).unwrap().min_choi_eig
        };
        for eps in [1e-2, 5e-3, 2.5e-3] {
            let v = min(eps);
            // Choi of K_0 is rho_A (x) |I>><<I|, so the first-order term can only
            // push eigenvalues below zero through its component off that support.
            prop_assert!(v >= -1e3 * eps * eps, "eps {} min {:e}", eps, v);
        }
        let (a, b) = (min(1e-2), min(5e-3));
        prop_assert!(a > -1e-13 || a / b > 3.0, "{:e} {:e}", a, b);
    }
}

#[test]
fn random_lindbladians_generate_cp_semigroups() {
    let mut r = rng(1000);
    for k in 0..1000 {
        let d = 2 + k % 2;
        let l = random::lindbladian(&mut r, d, 1 + k % 3);
        let s = l.superop();
        let v = cp::is_lindbladian(&s, DEFAULT_TOL).unwrap();
        assert!(v.is_lindblad, "draw {k}");
        assert!(v.reconstruct().sub(&s).max_abs() <= 1e-8 * s.max_abs(), "draw {k}");
        for t in [0.1, 1.0, 10.0] {
            let p = propagator(&s, t).unwrap();
            assert!(cp::is_completely_positive(&p, DEFAULT_TOL).unwrap().is_cp, "draw {k}, t {t}");
        }
    }
}

/// `-int_0^T (e^{Lt} - P0) dt` by composite Simpson with `T = 40 / gap`.
fn simpson_pseudo_inverse(s: &SuperOp, rho: &Operator, gap: f64) -> SuperOp {
    let n = s.dim() * s.dim();
    let p0 = SuperOp::from_fn(s.dim(), |x| rho.scale(x.trace()));
    let t_end = 40.0 / gap;
    let steps = 2 * ((t_end / 0.01).ceil() as usize / 2);
    let h = t_end / steps as f64;
    let step = propagator(s, h).unwrap();
    let mut e = SuperOp::identity(s.dim());
    let mut acc = SuperOp::zeros(s.dim());
    for k in 0..=steps {
        let w = if k == 0 || k == steps {
            1.0
        } else if k % 2 == 1 {
            4.0
        } else {
            2.0
        };
        acc = acc.add(&e.sub(&p0).scale(c(w * h / 3.0, 0.0)));
        e = e.compose(&step);
    }
    assert_eq!(acc.mat().nrows(), n);
    acc.scale(c(-1.0, 0.0))
}

#[test]
fn pseudo_inverse_matches_time_integral() {
    for (omega, delta, kappa) in [(0.5, 0.5, 1.0), (1.0, -0.3, 1.0), (0.2, 2.0, 0.5)] {
        let l = DispersiveParams::new(vec![0.0, 0.0], omega, delta, kappa).unwrap().qubit();
        let s = l.superop();
        let ss = spectral::steady_state(&l).unwrap();
        let p = pseudo_inverse(&s, &diagonalize(&s).unwrap()).unwrap();
        let q = simpson_pseudo_inverse(&s, &ss.rho, ss.gap);
        let rel = p.sub(&q).max_abs() / p.max_abs();
        assert!(rel < 1e-6, "({omega}, {delta}, {kappa}): {rel:e}");
    }
}

#[test]
fn jc_second_order_generator_is_lindblad() {
    for (g, n_th, delta) in [(0.02, 0.5, 0.0), (0.05, 1.0, 0.2), (0.1, 1.0, 0.0), (0.1, 0.3, -0.5)] {
        let p = JCParams::new(g, 1.0, delta, n_th, 20).unwrap();
        let e = jc::engine_expansion(&p, 2).unwrap();
        let l2 = jc::engine_generator(&p, &e);
        assert!(cp::is_lindbladian(&l2, DEFAULT_TOL).unwrap().is_lindblad, "g {g}");
    }
}

#[test]
fn jc_fourth_order_propagator_is_not_cp_in_any_tested_gauge() {
    let p = JCParams::new(0.05, 1.0, 0.0, 1.0, 40).unwrap();
    let eps = p.series_variable();
    let exp = jc::engine_expansion(&p, 4).unwrap();
    let rates = jc::qubit_rates(&jc::engine_generator(&p, &exp)).unwrap();
    assert!(rates.gamma_phi < 0.0);
    let t_star = cp::cp_violation_window(1.0 / rates.inv_t1, 1.0 / rates.inv_t2).unwrap();
    let t = 0.5 * t_star;
    let mut r = rng(44);
    for k in 0..10 {
        let ops: Vec<SuperOp> = (0..4)
            .map(|_| random::lindbladian(&mut r, 2, 2).superop().scale(c(0.3, 0.0)))
            .collect();
        let gauge = GaugeSeq::new(2, ops).unwrap();
        let eg = gauge_transform(&exp, &gauge, eps).unwrap();
        let prop = propagator(&eg.ls_sum(eps, 4), t).unwrap();
        let (w, _) = linalg::eig(&prop.mat().view()).unwrap();
        let wpg = cp::wpg_spectrum_feasible([w[0], w[1], w[2], w[3]]).unwrap();
        assert!(!wpg.feasible, "gauge {k}: {:?}", wpg.s);
        assert!(!cp::is_completely_positive(&prop, DEFAULT_TOL).unwrap().is_cp, "gauge {k}");
    }
}
