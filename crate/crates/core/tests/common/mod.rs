//! Shared oracles and helpers for the integration tests.
//!
//! Everything here is implemented independently of the solver's own
//! evaluation paths: the shooting oracle marches the three-point recurrence
//! directly, the obstacle oracle is a primal-dual active-set solver with its
//! own Newton inner loop, and quadrature/energy oracles re-derive their
//! quantities from scratch.

#![allow(dead_code)]

use descent_vi_core::{build_grid, Field, Grid, Nonlinearity};

/// Adaptive Simpson quadrature of `f` over `[a, b]`.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, fa: f64, b: f64, fb: f64) -> (f64, f64) {
        let m = 0.5 * (a + b);
        let fm = f(m);
        ((b - a) / 6.0 * (fa + 4.0 * fm + fb), fm)
    }
    fn rec(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        fa: f64,
        b: f64,
        fb: f64,
        whole: f64,
        fm: f64,
        tol: f64,
        depth: usize,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let (left, flm) = simpson(f, a, fa, m, fm);
        let (right, frm) = simpson(f, m, fm, b, fb);
        if depth == 0 || (left + right - whole).abs() <= 15.0 * tol {
            left + right + (left + right - whole) / 15.0
        } else {
            rec(f, a, fa, m, fm, left, flm, tol / 2.0, depth - 1)
                + rec(f, m, fm, b, fb, right, frm, tol / 2.0, depth - 1)
        }
    }
    let fa = f(a);
    let fb = f(b);
    let (whole, fm) = simpson(f, a, fa, b, fb);
    rec(f, a, fa, b, fb, whole, fm, tol, 40)
}

// ---------------------------------------------------------------------------
// Discrete shooting oracle for -u'' = p(u) on the same grid stencil.

/// March the interior stencil `u_{i+1} = 2 u_i - u_{i-1} - h² p(u_i)` from
/// `u_0 = 0`, `u_1 = h * slope`; returns the trailing value `u_{n+1}` (clamped
/// to ±1e30 on blowup) and the interior nodal values.
pub fn shoot(nl: &Nonlinearity, h: f64, n: usize, slope: f64) -> (f64, Vec<f64>) {
    let mut interior = Vec::with_capacity(n);
    let mut prev = 0.0f64; // u_0
    let mut cur = h * slope; // u_1 at x = h
    for i in 1..=n {
        interior.push(cur);
        let x = [i as f64 * h];
        let next = 2.0 * cur - prev - h * h * nl.eval_p(&x, cur);
        if !next.is_finite() || next.abs() > 1e30 {
            return (next.clamp(-1e30, 1e30), interior);
        }
        prev = cur;
        cur = next;
    }
    // `cur` now holds u_{n+1}
    (cur, interior)
}

fn sign_changes(v: &[f64], tol: f64) -> usize {
    let mut last = 0.0f64;
    let mut count = 0usize;
    for &x in v {
        if x.abs() <= tol {
            continue;
        }
        if last != 0.0 && last * x < 0.0 {
            count += 1;
        }
        last = x;
    }
    count
}

/// Discrete-shooting solution of the boundary value problem on a 1D grid:
/// bisect the initial slope until `u_{n+1} = 0`, selecting the root whose
/// field has the requested number of interior sign changes. `slope > 0`
/// seeds start upward.
pub fn shooting_solution(
    nl: &Nonlinearity,
    grid: &Grid,
    interior_sign_changes: usize,
    positive_first: bool,
) -> Option<Field> {
    assert_eq!(grid.dimension(), 1);
    let n = grid.counts()[0];
    let h = grid.spacing()[0];
    let orient = if positive_first { 1.0 } else { -1.0 };
    let f = |a: f64| shoot(nl, h, n, orient * a).0 * orient;

    // scan slopes geometrically, bracket the sign changes of the end value
    let mut brackets = Vec::new();
    let mut a_prev = 1e-4;
    let mut f_prev = f(a_prev);
    let mut a = a_prev * 1.05;
    while a < 1e9 {
        let fa = f(a);
        if f_prev.is_finite() && fa.is_finite() && f_prev * fa < 0.0 {
            brackets.push((a_prev, a));
        }
        a_prev = a;
        f_prev = fa;
        a *= 1.05;
    }
    for (mut lo, mut hi) in brackets {
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(lo) * f(mid) <= 0.0 {
                hi = mid;
            } else {
                lo = mid;
            }
        }
        let root = 0.5 * (lo + hi);
        let (_, field) = shoot(nl, h, n, orient * root);
        let amp = field.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if sign_changes(&field, 1e-9 * amp) == interior_sign_changes {
            let first_sig = field.iter().find(|v| v.abs() > 1e-9 * amp).copied().unwrap_or(0.0);
            if (first_sig > 0.0) == positive_first {
                return Some(Field::from(field));
            }
        }
    }
    None
}

// ---------------------------------------------------------------------------
// Primal-dual active-set oracle for the obstacle problem
//   min ½‖u‖² − ∫P(u)  subject to  u <= ψ  (nodal, on a 1D grid)

pub struct ActiveSetSolution {
    pub field: Field,
    pub multiplier: Vec<f64>,
    pub active: Vec<bool>,
    /// max |stencil(u) - p(u)| over inactive nodes, the oracle's own
    /// consistency certificate.
    pub kkt_stationarity: f64,
    pub kkt_min_multiplier: f64,
    pub iterations: usize,
}

fn stencil_residual(nl: &Nonlinearity, grid: &Grid, u: &[f64]) -> Vec<f64> {
    let n = u.len();
    let h2 = grid.spacing()[0] * grid.spacing()[0];
    (0..n)
        .map(|i| {
            let l = if i > 0 { u[i - 1] } else { 0.0 };
            let r = if i + 1 < n { u[i + 1] } else { 0.0 };
            let x = [(i as f64 + 1.0) * grid.spacing()[0]];
            (2.0 * u[i] - l - r) / h2 - nl.eval_p(&x, u[i])
        })
        .collect()
}

/// Damped Newton solve of the PDE on the inactive set with `u = ψ` pinned on
/// the active set; tridiagonal Jacobian solved by Thomas elimination.
fn newton_on_inactive(
    nl: &Nonlinearity,
    grid: &Grid,
    psi: &[f64],
    active: &[bool],
    u: &mut Vec<f64>,
) -> bool {
    let n = u.len();
    let h = grid.spacing()[0];
    let h2 = h * h;
    for i in 0..n {
        if active[i] {
            u[i] = psi[i];
        }
    }
    for _ in 0..80 {
        let res = stencil_residual(nl, grid, u);
        let mut worst = 0.0f64;
        for i in 0..n {
            if !active[i] {
                worst = worst.max(res[i].abs());
            }
        }
        let scale = 1.0 + u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if worst <= 1e-12 * scale {
            return true;
        }
        // assemble tridiagonal Jacobian on inactive nodes
        let idx: Vec<usize> = (0..n).filter(|&i| !active[i]).collect();
        let m = idx.len();
        if m == 0 {
            return true;
        }
        let mut sub = vec![0.0; m];
        let mut diag = vec![0.0; m];
        let mut sup = vec![0.0; m];
        let mut rhs = vec![0.0; m];
        let pos_of = {
            let mut map = vec![usize::MAX; n];
            for (k, &i) in idx.iter().enumerate() {
                map[i] = k;
            }
            map
        };
        let dp = |xi: f64, x: f64| -> f64 {
            let e = 1e-6 * (1.0 + xi.abs());
            (nl.eval_p(&[x], xi + e) - nl.eval_p(&[x], xi - e)) / (2.0 * e)
        };
        for (k, &i) in idx.iter().enumerate() {
            let x = (i as f64 + 1.0) * h;
            diag[k] = 2.0 / h2 - dp(u[i], x);
            rhs[k] = -res[i];
            if i > 0 && !active[i - 1] {
                sub[k] = -1.0 / h2;
                let _ = pos_of[i - 1];
            }
            if i + 1 < n && !active[i + 1] {
                sup[k] = -1.0 / h2;
            }
        }
        // Thomas elimination (non-contiguous inactive runs are separated by
        // active nodes, where sub/sup are zero, so one sweep handles all runs)
        for k in 1..m {
            if idx[k] == idx[k - 1] + 1 && sub[k] != 0.0 {
                let w = sub[k] / diag[k - 1];
                diag[k] -= w * sup[k - 1];
                rhs[k] -= w * rhs[k - 1];
            }
        }
        let mut delta = vec![0.0; m];
        for k in (0..m).rev() {
            let mut v = rhs[k];
            if k + 1 < m && idx[k + 1] == idx[k] + 1 && sup[k] != 0.0 {
                v -= sup[k] * delta[k + 1];
            }
            delta[k] = v / diag[k];
        }
        let mut t = 1.0;
        loop {
            let mut trial = u.clone();
            for (k, &i) in idx.iter().enumerate() {
                trial[i] += t * delta[k];
            }
            let tres = stencil_residual(nl, grid, &trial);
            let tworst = idx.iter().map(|&i| tres[i].abs()).fold(0.0f64, f64::max);
            if tworst < worst || t < 1e-4 {
                *u = trial;
                break;
            }
            t *= 0.5;
        }
    }
    false
}

/// Primal-dual active-set solve of the upper-obstacle problem.
/// `start` seeds the iteration (capped at ψ).
pub fn active_set_oracle(
    nl: &Nonlinearity,
    grid: &Grid,
    psi: &Field,
    start: &Field,
) -> ActiveSetSolution {
    let n = psi.len();
    let mut u: Vec<f64> = start
        .iter()
        .zip(psi.iter())
        .map(|(&a, &b)| a.min(b))
        .collect();
    let mut active: Vec<bool> = (0..n).map(|i| psi[i] - u[i] <= 0.0).collect();
    let mut mu = vec![0.0; n];
    let mut iters = 0usize;
    for _ in 0..60 {
        iters += 1;
        newton_on_inactive(nl, grid, psi, &active, &mut u);
        let res = stencil_residual(nl, grid, &u);
        for i in 0..n {
            mu[i] = if active[i] { -res[i] } else { 0.0 };
        }
        let scale = 1.0 + u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let next: Vec<bool> = (0..n)
            .map(|i| mu[i] + (u[i] - psi[i]) / scale * 1e6 > 0.0)
            .collect();
        if next == active {
            break;
        }
        active = next;
    }
    let res = stencil_residual(nl, grid, &u);
    let mut stat = 0.0f64;
    let mut min_mu = f64::INFINITY;
    for i in 0..n {
        if active[i] {
            min_mu = min_mu.min(mu[i]);
        } else {
            stat = stat.max(res[i].abs());
        }
    }
    if min_mu == f64::INFINITY {
        min_mu = 0.0;
    }
    ActiveSetSolution {
        field: Field::from(u),
        multiplier: mu,
        active,
        kkt_stationarity: stat,
        kkt_min_multiplier: min_mu,
        iterations: iters,
    }
}

// ---------------------------------------------------------------------------
// misc helpers

/// Restrict a field on a fine 1D grid to a coarse one whose nodes are an
/// exact subset (fine count = (coarse+1)*k - 1).
pub fn restrict_nested(fine: &Field, fine_n: usize, coarse_n: usize) -> Field {
    let k = (fine_n + 1) / (coarse_n + 1);
    assert_eq!((coarse_n + 1) * k - 1, fine_n, "grids are not nested");
    Field::from(
        (1..=coarse_n)
            .map(|i| fine[i * k - 1])
            .collect::<Vec<f64>>(),
    )
}

/// Local quadratic interpolation of a 1D nodal field (zero boundary) at `x`.
pub fn interp_quadratic(grid: &Grid, u: &Field, x: f64) -> f64 {
    let h = grid.spacing()[0];
    let n = grid.counts()[0];
    let val = |i: isize| -> f64 {
        if i < 1 || i > n as isize {
            0.0
        } else {
            u[(i - 1) as usize]
        }
    };
    let j = (x / h).floor() as isize; // between node j and j+1 (0 = boundary)
    let jc = j.clamp(1, n as isize);
    let (x0, x1, x2) = (
        (jc - 1) as f64 * h,
        jc as f64 * h,
        (jc + 1) as f64 * h,
    );
    let (y0, y1, y2) = (val(jc - 1), val(jc), val(jc + 1));
    let l0 = (x - x1) * (x - x2) / ((x0 - x1) * (x0 - x2));
    let l1 = (x - x0) * (x - x2) / ((x1 - x0) * (x1 - x2));
    let l2 = (x - x0) * (x - x1) / ((x2 - x0) * (x2 - x1));
    y0 * l0 + y1 * l1 + y2 * l2
}

pub fn max_abs_diff(a: &Field, b: &Field) -> f64 {
    a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0f64, f64::max)
}

pub fn grid_1d(extent: f64, n: usize) -> Grid {
    build_grid(1, &[extent], &[n]).unwrap()
}

// ---------------------------------------------------------------------------
// benchmark configurations shared by the integration and acceptance tests

use descent_vi_core::{
    FlowParams, Nonlinearity as Nl, Obstacle, PenaltyProblem, Schedule, SearchConfig,
};

/// Unconstrained benchmark: 1D interval of length 2, `ψ ≡ 10⁶`, `ε = 1`.
pub fn unconstrained_problem(n: usize) -> (Grid, Nl, Obstacle, PenaltyProblem) {
    let g = grid_1d(2.0, n);
    let nl = descent_vi_core::model_power(1.5, true).unwrap();
    let ob = Obstacle::constant(&g, 1e6).unwrap();
    let pp = PenaltyProblem::new(g.clone(), nl.clone(), ob.clone(), 1.0).unwrap();
    (g, nl, ob, pp)
}

pub fn unconstrained_search() -> SearchConfig {
    SearchConfig {
        t0: 0.1,
        r_seed: 1000.0,
        r1: 1000.0,
        angle_count: 16,
        bisect_depth: 55,
        part_tol: 1e-3,
        rho0: 1e-2,
        flow: FlowParams {
            tol: 1e-6,
            max_steps: 200_000,
            ..FlowParams::default()
        },
        probe_max_steps: 5000,
        sc_tol: Some(1e-5),
    }
}

/// Obstacle-active benchmark: 1D interval of length 8, `ψ ≡ 0.5`.
pub fn obstacle_setup(n: usize) -> (Grid, Nl, Obstacle, SearchConfig, Schedule) {
    let g = grid_1d(8.0, n);
    let nl = descent_vi_core::model_power(1.5, true).unwrap();
    let ob = Obstacle::constant(&g, 0.5).unwrap();
    let cfg = SearchConfig {
        t0: 0.1,
        r_seed: 1.0,
        r1: 1.0,
        angle_count: 16,
        bisect_depth: 55,
        part_tol: 1e-3,
        rho0: 1e-2,
        flow: FlowParams {
            tol: 1e-8,
            max_steps: 200_000,
            ..FlowParams::default()
        },
        probe_max_steps: 5000,
        sc_tol: Some(1e-6),
    };
    let sched = Schedule {
        eps0: 0.1,
        gamma: 0.5,
        max_stages: 12,
        tol_feas: 1e-3,
    };
    (g, nl, ob, cfg, sched)
}
