//! Three-solution search on the 2D unit square.

mod common;

use descent_vi_core::*;

#[test]
fn triple_on_unit_square_with_nodal_domains() {
    let g = build_grid(2, &[1.0, 1.0], &[32, 32]).unwrap();
    let nl = model_power(1.5, true).unwrap();
    let ob = Obstacle::constant(&g, 1e6).unwrap();
    let pp = PenaltyProblem::new(g.clone(), nl, ob, 1.0).unwrap();
    let cfg = SearchConfig {
        t0: 0.1,
        r_seed: 100.0,
        r1: 100.0,
        angle_count: 8,
        bisect_depth: 50,
        part_tol: 1e-3,
        rho0: 1e-2,
        flow: FlowParams {
            tol: 1e-4,
            max_steps: 50_000,
            ..FlowParams::default()
        },
        probe_max_steps: 3000,
        sc_tol: Some(1e-3),
    };
    let rep = solve_triple(&pp, &cfg).unwrap();
    assert!(rep.positive.found && rep.negative.found && rep.sign_changing.found);
    assert!(rep.distinct);

    // positive solution has a single nodal domain, the sign-changing one at
    // least two (flood fill over {u > 0} and {u < 0})
    assert_eq!(nodal_domains(&g, &rep.positive.field, 1e-9).unwrap(), 1);
    assert!(nodal_domains(&g, &rep.sign_changing.field, 1e-9).unwrap() >= 2);

    // mirrored pair
    let mirror = rep.negative.field.lin_comb(1.0, &rep.positive.field, 1.0);
    assert!(mirror.linf_norm() <= 1e-8);
}
