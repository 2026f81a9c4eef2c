//! Finite-difference gradient oracle, exact cone invariance of the flow, and
//! independent quadrature checks of the penalized energy.

mod common;

use common::adaptive_simpson;
use descent_vi_core::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn problem(extent: f64, n: usize, psi: f64, eps: f64) -> PenaltyProblem {
    let g = build_grid(1, &[extent], &[n]).unwrap();
    let nl = model_power(1.5, true).unwrap();
    let ob = Obstacle::constant(&g, psi).unwrap();
    PenaltyProblem::new(g, nl, ob, eps).unwrap()
}

/// Random smooth field (low sine modes) so finite differences of the energy
/// are truncation-dominated, with every node pushed a stated margin away
/// from the kink set `{u = psi}`.
fn smooth_random(grid: &Grid, rng: &mut impl Rng, amp: f64) -> Field {
    let l = grid.extents()[0];
    let c: Vec<f64> = (0..6).map(|_| rng.gen_range(-amp..amp)).collect();
    grid.field_from_fn(|x| {
        c.iter()
            .enumerate()
            .map(|(k, ck)| ck * ((k + 1) as f64 * std::f64::consts::PI * x[0] / l).sin())
            .sum()
    })
}

fn push_from_kink(pp: &PenaltyProblem, mut u: Field) -> Field {
    let psi = &pp.obstacle().values;
    let margin = 1e-3 * u.linf_norm().max(0.1);
    for i in 0..u.len() {
        let d = u[i] - psi[i];
        if d.abs() < margin {
            u[i] = if d >= 0.0 { psi[i] + margin } else { psi[i] - margin };
        }
    }
    u
}

/// Directions whose pairing with the gradient is not degenerate; relative
/// error of a directional derivative is meaningless for near-orthogonal h.
fn aligned_direction(pp: &PenaltyProblem, g: &Field, rng: &mut impl Rng) -> Field {
    loop {
        let h = smooth_random(pp.grid(), rng, 1.0);
        let pairing = pp.eps_inner(g, &h).unwrap();
        let gn = pp.eps_norm(g).unwrap();
        let hn = pp.eps_norm(&h).unwrap();
        if pairing.abs() >= 0.1 * gn * hn {
            return h;
        }
    }
}

#[test]
fn directional_derivative_matches_gradient() {
    let pp = problem(1.0, 96, 0.5, 0.05);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let t = 1e-8;
    for _ in 0..20 {
        let u = push_from_kink(&pp, smooth_random(pp.grid(), &mut rng, 1.0));
        let g = pp.grad_eps(&u).unwrap();
        let h = aligned_direction(&pp, &g, &mut rng);
        let pairing = pp.eps_inner(&g, &h).unwrap();
        let e0 = pp.energy(&u).unwrap();
        let e1 = pp.energy(&u.lin_comb(1.0, &h, t)).unwrap();
        let fd = (e1 - e0) / t;
        assert!(
            (fd - pairing).abs() <= 1e-5 * pairing.abs(),
            "fd {fd} vs pairing {pairing}"
        );
    }
}

#[test]
fn energy_checked_against_independent_quadrature() {
    // With the obstacle effectively infinite, the energy reduces to
    // ½∫|u'|² − ∫|u|^{s+1}/(s+1); rebuild both terms from scratch.
    let pp = problem(1.0, 128, 1e6, 1.0);
    let g = pp.grid();
    let u = g.field_from_fn(|x| (std::f64::consts::PI * x[0]).sin() - 0.3 * (7.0 * x[0]).cos());
    let h = g.spacing()[0];
    let n = g.counts()[0];
    let mut grad_energy = 0.0;
    let mut prev = 0.0;
    for i in 0..=n {
        let cur = if i < n { u[i] } else { 0.0 };
        grad_energy += ((cur - prev) / h).powi(2) * h;
        prev = cur;
    }
    let prim: f64 = u.iter().map(|&v| v.abs().powf(2.5) / 2.5).sum::<f64>() * h;
    let expect = 0.5 * grad_energy - prim;
    let got = pp.energy(&u).unwrap();
    assert!((got - expect).abs() <= 1e-12 * (1.0 + expect.abs()));
}

#[test]
fn primitive_agrees_with_adaptive_quadrature_of_p() {
    let nl = model_power(1.7, true).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..40 {
        let xi: f64 = rng.gen_range(-6.0..6.0);
        let q = adaptive_simpson(&|t| nl.eval_p(&[0.3], t), 0.0, xi, 1e-12);
        let p = nl.eval_primitive(&[0.3], xi);
        assert!((q - p).abs() <= 1e-8 * (1.0 + p.abs()), "xi={xi}: {q} vs {p}");
    }
    // and for a spatially weighted model
    let w = model_power_weighted(1.5, |x: &[f64]| 1.0 + 0.5 * x[0], 1.0, 1.5).unwrap();
    for _ in 0..20 {
        let xi: f64 = rng.gen_range(-4.0..4.0);
        let x = [rng.gen_range(0.0..1.0)];
        let q = adaptive_simpson(&|t| w.eval_p(&x, t), 0.0, xi, 1e-12);
        assert!((q - w.eval_primitive(&x, xi)).abs() <= 1e-8 * (1.0 + q.abs()));
    }
}

#[test]
fn a_eps_cone_invariance_exact_on_bundled_obstacles() {
    let g = build_grid(1, &[1.0], &[48]).unwrap();
    let nl = model_power(1.5, true).unwrap();
    let obstacles = vec![
        Obstacle::constant(&g, 0.5).unwrap(),
        Obstacle::tent(&g, 1.0).unwrap(),
        Obstacle::two_bump(&g, 0.1, 1.0).unwrap(),
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for ob in obstacles {
        for &eps in &[1.0, 0.1, 0.01] {
            let pp = PenaltyProblem::new(g.clone(), nl.clone(), ob.clone(), eps).unwrap();
            for _ in 0..12 {
                let u = Field::from(
                    (0..48).map(|_| rng.gen_range(0.0..2.0)).collect::<Vec<f64>>(),
                );
                let au = pp.a_eps(&u).unwrap();
                assert!(au.min_value() >= 0.0, "cone violated");
                let un = u.scaled(-1.0);
                let aun = pp.a_eps(&un).unwrap();
                assert!(aun.max_value() <= 0.0, "negative cone violated");
            }
        }
    }
}

#[test]
fn flow_iterates_stay_in_cone_with_zero_tolerance() {
    let g = build_grid(1, &[1.0], &[40]).unwrap();
    let nl = model_power(1.5, true).unwrap();
    let ob = Obstacle::two_bump(&g, 0.2, 1.5).unwrap();
    let pp = PenaltyProblem::new(g.clone(), nl, ob, 0.05).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let seed = Field::from((0..40).map(|_| rng.gen_range(0.0..1.0)).collect::<Vec<f64>>());
    let params = FlowParams { max_steps: 200, ..FlowParams::default() };
    let mut violations = 0usize;
    let _ = flow_to_critical_traced(&pp, &seed, &params, &mut |_row, field| {
        if field.min_value() < 0.0 {
            violations += 1;
        }
    })
    .unwrap();
    assert_eq!(violations, 0);
}

#[test]
fn converged_endpoint_satisfies_weak_form() {
    // Certificate: the endpoint re-solves the penalized equation tested
    // against random fields.
    let g = build_grid(1, &[8.0], &[96]).unwrap();
    let nl = model_power(1.5, true).unwrap();
    let ob = Obstacle::constant(&g, 0.5).unwrap();
    let pp = PenaltyProblem::new(g.clone(), nl, ob, 0.1).unwrap();
    let cfg = SearchConfig {
        flow: FlowParams { tol: 1e-9, ..FlowParams::default() },
        ..SearchConfig::default()
    };
    let slot = find_positive(&pp, &cfg).unwrap();
    assert!(slot.found);
    let u = &slot.field;
    let u_norm = pp.eps_norm(u).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for _ in 0..10 {
        let v = Field::from((0..96).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<f64>>());
        let r = pp.weak_form_residual(u, &v).unwrap();
        let bound = 1e-9 * pp.eps_norm(&v).unwrap() * (1.0 + u_norm);
        assert!(r.abs() <= bound, "weak residual {r} vs bound {bound}");
    }
    // fixed-point residual matches the termination contract
    assert!(pp.grad_norm(u).unwrap() <= 1e-9);
}
