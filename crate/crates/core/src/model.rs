//! Nonlinearities, obstacles, and sampling-based checks of the growth
//! hypotheses the solver relies on.
//!
//! All checks here are falsification by sampling, not proof; every report
//! records the sample count it was run with.

use crate::error::{Error, Result};
use crate::grid::{h1_inner, lq_norm, Field, Grid};
use crate::penalty::orthonormalize_h1;
use crate::EigenPair;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use std::sync::Arc;

type ScalarFn = Arc<dyn Fn(&[f64], f64) -> f64 + Send + Sync>;

/// A nonlinearity `p(x, ξ)` with primitive `P(x, ξ) = ∫₀^ξ p(x, t) dt` and
/// the growth data used by the energy estimates.
#[derive(Clone)]
pub struct Nonlinearity {
    p: ScalarFn,
    primitive: ScalarFn,
    /// Growth exponent `s > 1`: `|p| <= a1 + a2 |ξ|^s`.
    pub s: f64,
    pub a1: f64,
    pub a2: f64,
    /// Superlinearity constants: `P(x,ξ) >= a3 |ξ|^{s+1} - a4`.
    pub a3: f64,
    pub a4: f64,
    /// Radius beyond which `0 < (s+1) P <= ξ p` is required.
    pub r: f64,
}

impl std::fmt::Debug for Nonlinearity {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Nonlinearity")
            .field("s", &self.s)
            .field("a1", &self.a1)
            .field("a2", &self.a2)
            .field("a3", &self.a3)
            .field("a4", &self.a4)
            .field("r", &self.r)
            .finish()
    }
}

impl Nonlinearity {
    pub fn new(
        p: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
        primitive: impl Fn(&[f64], f64) -> f64 + Send + Sync + 'static,
        s: f64,
        a1: f64,
        a2: f64,
        a3: f64,
        a4: f64,
        r: f64,
    ) -> Self {
        Nonlinearity {
            p: Arc::new(p),
            primitive: Arc::new(primitive),
            s,
            a1,
            a2,
            a3,
            a4,
            r,
        }
    }

    #[inline]
    pub fn eval_p(&self, x: &[f64], xi: f64) -> f64 {
        (self.p)(x, xi)
    }

    #[inline]
    pub fn eval_primitive(&self, x: &[f64], xi: f64) -> f64 {
        (self.primitive)(x, xi)
    }
}

// sign(ξ)·|ξ|^s computed so that |p(ξ)| equals |ξ|^s exactly and oddness is
// exact in floating point.
#[inline]
fn odd_power(xi: f64, s: f64) -> f64 {
    if xi >= 0.0 {
        xi.powf(s)
    } else {
        -(-xi).powf(s)
    }
}

/// The model power nonlinearity `p(x,ξ) = |ξ|^{s-1} ξ` with primitive
/// `P = |ξ|^{s+1}/(s+1)`. Satisfies the growth hypotheses with equality:
/// `a1 = 0, a2 = 1, a3 = 1/(s+1), a4 = 0`.
///
/// The intended range is `1 < s < 2`; outside it construction fails in
/// strict mode and logs a warning otherwise.
pub fn model_power(s: f64, strict: bool) -> Result<Nonlinearity> {
    if !(s > 1.0 && s < 2.0) {
        if strict {
            return Err(Error::config(format!(
                "model_power requires 1 < s < 2 in strict mode, got {s}"
            )));
        }
        log::warn!("model_power: exponent s = {s} outside (1, 2)");
    }
    if !(s > 0.0) {
        return Err(Error::config(format!("model_power: s must be positive, got {s}")));
    }
    let sp = s;
    Ok(Nonlinearity::new(
        move |_x, xi| odd_power(xi, sp),
        move |_x, xi| xi.abs().powf(sp + 1.0) / (sp + 1.0),
        s,
        0.0,
        1.0,
        1.0 / (s + 1.0),
        0.0,
        1.0,
    ))
}

/// Spatially weighted power model `p = c(x) |ξ|^{s-1} ξ` with
/// `0 < c_min <= c(x) <= c_max`; used to exercise x-dependence.
pub fn model_power_weighted(
    s: f64,
    weight: impl Fn(&[f64]) -> f64 + Send + Sync + Clone + 'static,
    c_min: f64,
    c_max: f64,
) -> Result<Nonlinearity> {
    if !(c_min > 0.0 && c_max >= c_min) {
        return Err(Error::config(format!(
            "weight bounds must satisfy 0 < c_min <= c_max, got {c_min}, {c_max}"
        )));
    }
    let w2 = weight.clone();
    Ok(Nonlinearity::new(
        move |x, xi| weight(x) * odd_power(xi, s),
        move |x, xi| w2(x) * xi.abs().powf(s + 1.0) / (s + 1.0),
        s,
        0.0,
        c_max,
        c_min / (s + 1.0),
        0.0,
        1.0,
    ))
}

/// Upper obstacle: nodal values of `ψ` on a grid. Boundary values are 0 by
/// the Dirichlet convention; `boundary_adjacent_nonneg` records whether all
/// nodal values next to the boundary are nonnegative (a warning is logged
/// when they are not).
#[derive(Debug, Clone)]
pub struct Obstacle {
    pub values: Field,
    pub boundary_adjacent_nonneg: bool,
}

impl Obstacle {
    pub fn from_field(grid: &Grid, values: Field) -> Result<Self> {
        grid.check_conforms(&values)?;
        if !values.is_finite() {
            return Err(Error::contract("obstacle values must be finite".to_string()));
        }
        let ok = boundary_adjacent_nonneg(grid, &values);
        if !ok {
            log::warn!("obstacle has negative values adjacent to the boundary");
        }
        Ok(Obstacle {
            values,
            boundary_adjacent_nonneg: ok,
        })
    }

    /// Constant obstacle `ψ ≡ level`.
    pub fn constant(grid: &Grid, level: f64) -> Result<Self> {
        Obstacle::from_field(grid, grid.field_from_fn(|_| level))
    }

    /// Tent obstacle: peak `height` at the domain center, 0 at the boundary.
    pub fn tent(grid: &Grid, height: f64) -> Result<Self> {
        let ex: Vec<f64> = grid.extents().to_vec();
        let dim = grid.dimension();
        Obstacle::from_field(
            grid,
            grid.field_from_fn(move |x| {
                let mut v = height;
                for a in 0..dim {
                    v *= 1.0 - (2.0 * x[a] / ex[a] - 1.0).abs();
                }
                v
            }),
        )
    }

    /// Two raised-cosine bumps of height `high` over a small base level
    /// `low`; most of the domain sits at `low`, forcing obstacle activity.
    pub fn two_bump(grid: &Grid, low: f64, high: f64) -> Result<Self> {
        let ex: Vec<f64> = grid.extents().to_vec();
        let dim = grid.dimension();
        Obstacle::from_field(
            grid,
            grid.field_from_fn(move |x| {
                let lx = ex[0];
                let w = lx / 10.0;
                let mut bump = 0.0;
                for c in [lx / 4.0, 3.0 * lx / 4.0] {
                    let d = (x[0] - c).abs();
                    if d < w {
                        let mut b = (std::f64::consts::PI * d / (2.0 * w)).cos().powi(2);
                        if dim == 2 {
                            b *= 1.0 - (2.0 * x[1] / ex[1] - 1.0).abs();
                        }
                        bump += b;
                    }
                }
                low + (high - low) * bump.min(1.0)
            }),
        )
    }
}

fn boundary_adjacent_nonneg(grid: &Grid, v: &Field) -> bool {
    match grid.dimension() {
        1 => {
            let n = grid.counts()[0];
            v[0] >= 0.0 && v[n - 1] >= 0.0
        }
        _ => {
            let nx = grid.counts()[0];
            let ny = grid.counts()[1];
            (0..nx * ny).all(|i| {
                let ix = i % nx;
                let iy = i / nx;
                if ix == 0 || ix == nx - 1 || iy == 0 || iy == ny - 1 {
                    v[i] >= 0.0
                } else {
                    true
                }
            })
        }
    }
}

/// Sampling box and constants for the growth checks.
#[derive(Debug, Clone)]
pub struct GrowthCheckParams {
    /// δ in the refined growth bound `|p| <= δ|ξ| + C_δ |ξ|^s`.
    pub delta: f64,
    pub c_delta: f64,
    /// ξ sampled uniformly in `[-xi_max, xi_max]`.
    pub xi_max: f64,
    /// x sampled uniformly in the box `[0, x_extents]`.
    pub x_extents: Vec<f64>,
    pub seed: u64,
}

impl Default for GrowthCheckParams {
    fn default() -> Self {
        GrowthCheckParams {
            delta: 0.1,
            c_delta: 2.0,
            xi_max: 10.0,
            x_extents: vec![1.0],
            seed: 7,
        }
    }
}

/// Outcome of one sampled hypothesis check.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisCheckResult {
    pub name: String,
    pub passed: bool,
    /// Largest violation observed (0 when the check passed).
    pub worst_violation: f64,
    pub detail: String,
}

/// Sampling report over all growth hypotheses.
#[derive(Debug, Clone, Serialize)]
pub struct HypothesisReport {
    pub sample_count: usize,
    pub note: String,
    pub checks: Vec<HypothesisCheckResult>,
}

impl HypothesisReport {
    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
    pub fn check(&self, name: &str) -> Option<&HypothesisCheckResult> {
        self.checks.iter().find(|c| c.name == name)
    }
}

// Rounding slack for checks that the model satisfies with equality.
const CHECK_SLACK: f64 = 1e-12;

/// Check the growth hypotheses on a random sample of `(x, ξ)` points.
///
/// H1: `|p| <= a1 + a2 |ξ|^s`; H2: `|p|/|ξ| -> 0` along a shrinking ξ-mesh;
/// H3: `ξ p(x,ξ) > 0` for `ξ != 0`; H4: `0 < (s+1)P <= ξ p` for `|ξ| >= r`;
/// plus the derived bounds `P >= a3|ξ|^{s+1} - a4` and
/// `|p| <= δ|ξ| + C_δ|ξ|^s`.
pub fn check_hypotheses(
    nl: &Nonlinearity,
    params: &GrowthCheckParams,
    sample_count: usize,
) -> Result<HypothesisReport> {
    if sample_count < 1 {
        return Err(Error::contract("sample_count must be >= 1".to_string()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let dim = params.x_extents.len();
    let mut xs: Vec<Vec<f64>> = Vec::with_capacity(sample_count);
    let mut xis: Vec<f64> = Vec::with_capacity(sample_count);
    for _ in 0..sample_count {
        let x: Vec<f64> = (0..dim)
            .map(|a| rng.gen_range(0.0..=params.x_extents[a]))
            .collect();
        xs.push(x);
        xis.push(rng.gen_range(-params.xi_max..=params.xi_max));
    }

    let mut checks = Vec::new();

    // H1
    {
        let mut worst = 0.0f64;
        for (x, &xi) in xs.iter().zip(&xis) {
            let lhs = nl.eval_p(x, xi).abs();
            let rhs = nl.a1 + nl.a2 * xi.abs().powf(nl.s);
            worst = worst.max(lhs - rhs - CHECK_SLACK * (1.0 + rhs));
        }
        checks.push(HypothesisCheckResult {
            name: "H1".into(),
            passed: worst <= 0.0,
            worst_violation: worst.max(0.0),
            detail: format!("|p| <= a1 + a2|xi|^s with a1={}, a2={}", nl.a1, nl.a2),
        });
    }

    // H2: ratio |p|/|xi| along a geometric mesh from min(1, xi_max) down by 1e-8.
    {
        let xi0 = params.xi_max.min(1.0);
        let m = 30;
        let mut ratios = Vec::with_capacity(m);
        for j in 0..m {
            let xi = xi0 * (1e-8f64).powf(j as f64 / (m - 1) as f64);
            let r = xs
                .iter()
                .take(64.min(xs.len()))
                .map(|x| nl.eval_p(x, xi).abs() / xi)
                .fold(0.0f64, f64::max);
            ratios.push(r);
        }
        let first = ratios[0];
        let last = *ratios.last().unwrap();
        let passed = last <= 0.1 * first + CHECK_SLACK;
        checks.push(HypothesisCheckResult {
            name: "H2".into(),
            passed,
            worst_violation: if passed { 0.0 } else { last / first.max(1e-300) },
            detail: format!("|p|/|xi| fell from {first:.3e} to {last:.3e} as xi -> 0"),
        });
    }

    // H3
    {
        let mut worst = 0.0f64;
        for (x, &xi) in xs.iter().zip(&xis) {
            if xi.abs() > 1e-12 {
                let v = xi * nl.eval_p(x, xi);
                if v <= 0.0 {
                    worst = worst.max(-v + f64::MIN_POSITIVE);
                }
            }
        }
        checks.push(HypothesisCheckResult {
            name: "H3".into(),
            passed: worst == 0.0,
            worst_violation: worst,
            detail: "xi * p(x, xi) > 0 for xi != 0".into(),
        });
    }

    // H4 on |xi| >= r
    {
        let mut worst = 0.0f64;
        let mut tested = 0usize;
        for (x, &xi) in xs.iter().zip(&xis) {
            if xi.abs() >= nl.r {
                tested += 1;
                let sp = (nl.s + 1.0) * nl.eval_primitive(x, xi);
                let xp = xi * nl.eval_p(x, xi);
                worst = worst.max(sp - xp - CHECK_SLACK * (1.0 + xp.abs()));
                if sp <= 0.0 {
                    worst = worst.max(-sp + f64::MIN_POSITIVE);
                }
            }
        }
        checks.push(HypothesisCheckResult {
            name: "H4".into(),
            passed: worst <= 0.0,
            worst_violation: worst.max(0.0),
            detail: format!("0 < (s+1)P <= xi p on |xi| >= r = {} ({tested} samples)", nl.r),
        });
    }

    // P >= a3 |xi|^{s+1} - a4
    {
        let mut worst = 0.0f64;
        for (x, &xi) in xs.iter().zip(&xis) {
            let lhs = nl.eval_primitive(x, xi);
            let rhs = nl.a3 * xi.abs().powf(nl.s + 1.0) - nl.a4;
            worst = worst.max(rhs - lhs - CHECK_SLACK * (1.0 + rhs.abs()));
        }
        checks.push(HypothesisCheckResult {
            name: "primitive_lower_bound".into(),
            passed: worst <= 0.0,
            worst_violation: worst.max(0.0),
            detail: format!("P >= a3|xi|^(s+1) - a4 with a3={}, a4={}", nl.a3, nl.a4),
        });
    }

    // |p| <= delta |xi| + C_delta |xi|^s
    {
        let mut worst = 0.0f64;
        for (x, &xi) in xs.iter().zip(&xis) {
            let lhs = nl.eval_p(x, xi).abs();
            let rhs = params.delta * xi.abs() + params.c_delta * xi.abs().powf(nl.s);
            worst = worst.max(lhs - rhs - CHECK_SLACK * (1.0 + rhs));
        }
        checks.push(HypothesisCheckResult {
            name: "refined_growth".into(),
            passed: worst <= 0.0,
            worst_violation: worst.max(0.0),
            detail: format!(
                "|p| <= delta|xi| + C_delta|xi|^s with delta={}, C_delta={}",
                params.delta, params.c_delta
            ),
        });
    }

    Ok(HypothesisReport {
        sample_count,
        note: format!("sampled on {sample_count} points; falsification only, not a proof"),
        checks,
    })
}

/// Report for the geometric hypothesis tying the obstacle to the spectral
/// plane `Y = span{φ1, φ2}`.
#[derive(Debug, Clone, Serialize)]
pub struct H5Report {
    pub r1: f64,
    /// max over sampled `u` in the closed ball of the max nodal value of `u - ψ`
    /// (must be <= 0).
    pub max_constraint_violation: f64,
    /// max of `Q(u)` over sampled `u` on the sphere (must be < 0).
    pub max_q_on_sphere: f64,
    pub q_at_origin: f64,
    pub constraint_passed: bool,
    pub q_passed: bool,
    pub theta_samples: usize,
    pub radial_samples: usize,
    pub note: String,
}

impl H5Report {
    pub fn passed(&self) -> bool {
        self.constraint_passed && self.q_passed
    }
}

/// `Q(u) = ½‖u‖² − a₃ ∫|u|^{s+1} + a₄ |Ω|`.
pub fn q_functional(grid: &Grid, nl: &Nonlinearity, u: &Field) -> Result<f64> {
    let nrm2 = h1_inner(grid, u, u)?;
    let lsp = lq_norm(grid, u, nl.s + 1.0)?;
    Ok(0.5 * nrm2 - nl.a3 * lsp.powf(nl.s + 1.0) + nl.a4 * grid.domain_volume())
}

/// Sample the two clauses of the spectral-plane hypothesis at radius `r1`:
/// `u <= ψ` for all `u` in the closed ball of the H¹-orthonormalized span of
/// the first two eigenfields, and `Q(u) < 0` on its boundary sphere.
pub fn check_h5(
    grid: &Grid,
    nl: &Nonlinearity,
    obstacle: &Obstacle,
    r1: f64,
    eigens: &[EigenPair],
) -> Result<H5Report> {
    if !(r1 > 0.0) {
        return Err(Error::contract(format!("r1 must be positive, got {r1}")));
    }
    if eigens.len() < 2 {
        return Err(Error::contract("check_h5 requires two eigenpairs".to_string()));
    }
    let (e1, e2) = orthonormalize_h1(grid, &eigens[0], &eigens[1])?;
    let theta_samples = 64;
    let radial_samples = 9;
    let mut max_violation = f64::NEG_INFINITY;
    let mut max_q = f64::NEG_INFINITY;
    for it in 0..theta_samples {
        let theta = 2.0 * std::f64::consts::PI * it as f64 / theta_samples as f64;
        let dir = e1.lin_comb(theta.cos(), &e2, theta.sin());
        for ir in 1..=radial_samples {
            let t = ir as f64 / radial_samples as f64;
            let u = dir.scaled(t * r1);
            let viol = u
                .iter()
                .zip(obstacle.values.iter())
                .map(|(a, b)| a - b)
                .fold(f64::NEG_INFINITY, f64::max);
            max_violation = max_violation.max(viol);
            if ir == radial_samples {
                max_q = max_q.max(q_functional(grid, nl, &u)?);
            }
        }
    }
    // center of the ball
    let zero = Field::zeros(grid.interior_count());
    let viol0 = zero
        .iter()
        .zip(obstacle.values.iter())
        .map(|(a, b)| a - b)
        .fold(f64::NEG_INFINITY, f64::max);
    max_violation = max_violation.max(viol0);
    let q0 = nl.a4 * grid.domain_volume();

    Ok(H5Report {
        r1,
        max_constraint_violation: max_violation,
        max_q_on_sphere: max_q,
        q_at_origin: q0,
        constraint_passed: max_violation <= 0.0,
        q_passed: max_q < 0.0,
        theta_samples,
        radial_samples,
        note: format!(
            "sampled on {} ball points; falsification only",
            theta_samples * radial_samples + 1
        ),
    })
}

/// Diagnostic estimate of the embedding constant `S_q`: the max of
/// `|u|_q / ‖u‖` over a random sample of fields.
pub fn embedding_constant_estimate(grid: &Grid, q: f64, samples: usize, seed: u64) -> Result<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = grid.interior_count();
    let mut best = 0.0f64;
    for _ in 0..samples {
        let u = Field::from((0..n).map(|_| rng.gen_range(-1.0..1.0)).collect::<Vec<_>>());
        let nq = lq_norm(grid, &u, q)?;
        let h1 = h1_inner(grid, &u, &u)?.sqrt();
        if h1 > 0.0 {
            best = best.max(nq / h1);
        }
    }
    Ok(best)
}
