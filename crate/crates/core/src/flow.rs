//! Discrete descending flow `du/dt = A_ε u − u` with monotone energy and
//! exact cone invariance.
//!
//! Each step is the frozen-coefficient exponential Euler update
//! `u⁺ = e^{-h} u + (1 − e^{-h}) A_ε u`, a convex combination of `u` and
//! `A_ε u` for every step size. Steps are accepted only when the energy does
//! not increase beyond a tiny slack; the step size adapts by backtracking.

use crate::error::{Error, Result};
use crate::grid::{h1_norm, l2_norm, Field, Grid};
use crate::penalty::PenaltyProblem;
use serde::Serialize;
use std::collections::VecDeque;

/// Sign classification of a field by the H¹ norms of its nodal parts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Trivial,
    Positive,
    Negative,
    SignChanging,
}

impl std::fmt::Display for Classification {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            Classification::Trivial => "trivial",
            Classification::Positive => "positive",
            Classification::Negative => "negative",
            Classification::SignChanging => "sign_changing",
        };
        f.write_str(s)
    }
}

/// Why a flow run stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum TerminationReason {
    /// Gradient norm reached the tolerance.
    Converged,
    /// Step budget exhausted.
    MaxSteps,
    /// Step size pinned at the minimum with no energy progress.
    Stagnated,
    /// Iterates left the configured norm/energy caps (superlinear blowup).
    Diverged,
}

/// Flow control parameters.
#[derive(Debug, Clone, Serialize)]
pub struct FlowParams {
    pub tol: f64,
    pub max_steps: usize,
    pub h_init: f64,
    pub h_min: f64,
    pub h_max: f64,
    /// Consecutive no-progress steps at `h_min` before reporting stagnation.
    pub patience: usize,
    /// Accepted steps may increase energy by at most this much.
    pub energy_slack: f64,
    /// `‖u‖_ε` beyond which the run is declared divergent.
    pub divergence_norm_cap: f64,
    /// Energy below which the run is declared divergent.
    pub divergence_energy_floor: f64,
}

impl Default for FlowParams {
    fn default() -> Self {
        FlowParams {
            tol: 1e-8,
            max_steps: 100_000,
            h_init: 0.1,
            h_min: 1e-6,
            h_max: 1.0,
            patience: 50,
            energy_slack: 1e-12,
            divergence_norm_cap: 1e8,
            divergence_energy_floor: -1e14,
        }
    }
}

impl FlowParams {
    fn validate(&self) -> Result<()> {
        if !(self.tol > 0.0) {
            return Err(Error::contract(format!("flow tol must be > 0, got {}", self.tol)));
        }
        if !(self.h_min > 0.0 && self.h_min <= self.h_init && self.h_init <= self.h_max) {
            return Err(Error::contract(format!(
                "flow step sizes must satisfy 0 < h_min <= h_init <= h_max, got {} {} {}",
                self.h_min, self.h_init, self.h_max
            )));
        }
        Ok(())
    }
}

/// One accepted step of a flow trace.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct TraceRow {
    pub step: usize,
    pub h_step: f64,
    pub energy: f64,
    pub grad_norm: f64,
}

/// Result of driving the flow to a critical point (or giving up).
#[derive(Debug, Clone, Serialize)]
pub struct CriticalPointReport {
    #[serde(skip)]
    pub field: Field,
    pub grad_norm: f64,
    pub energy: f64,
    pub iterations: usize,
    pub reason: TerminationReason,
    /// Ring buffer of (energy, grad_norm) over the most recent accepted steps.
    #[serde(skip)]
    pub history: VecDeque<(f64, f64)>,
}

const HISTORY_CAP: usize = 1024;

/// One exponential-Euler step `u⁺ = e^{-h} u + (1 − e^{-h}) A_ε u`.
pub fn flow_step(pp: &PenaltyProblem, u: &Field, h_step: f64) -> Result<Field> {
    if !(h_step > 0.0) {
        return Err(Error::contract(format!("h_step must be > 0, got {h_step}")));
    }
    let au = pp.a_eps(u)?;
    Ok(combine(u, &au, h_step))
}

// Convex combination with nonnegative coefficients; keeps sign-definite
// inputs sign-definite with no tolerance.
fn combine(u: &Field, au: &Field, h: f64) -> Field {
    let decay = (-h).exp();
    let gain = -(-h).exp_m1();
    u.lin_comb(decay, au, gain)
}

/// Drive the flow from `u0` until the gradient norm falls below `tol`,
/// the step budget runs out, the run stagnates at `h_min`, or it diverges.
pub fn flow_to_critical(pp: &PenaltyProblem, u0: &Field, params: &FlowParams) -> Result<CriticalPointReport> {
    flow_to_critical_traced(pp, u0, params, &mut |_row, _field| {})
}

/// Same as [`flow_to_critical`] with a callback invoked on every accepted
/// step (and on the initial state as step 0).
pub fn flow_to_critical_traced(
    pp: &PenaltyProblem,
    u0: &Field,
    params: &FlowParams,
    on_accept: &mut dyn FnMut(&TraceRow, &Field),
) -> Result<CriticalPointReport> {
    params.validate()?;
    pp.grid().check_conforms(u0)?;
    if !u0.is_finite() {
        return Err(Error::numerical(format!(
            "flow seed has nonfinite entry at node {}",
            u0.first_nonfinite().unwrap_or(0)
        )));
    }

    let mut u = u0.clone();
    let mut energy = pp.energy(&u)?;
    let mut au = pp.a_eps(&u)?;
    let mut gnorm = pp.residual_eps_norm(&u, &au)?;
    let mut history: VecDeque<(f64, f64)> = VecDeque::with_capacity(HISTORY_CAP);
    history.push_back((energy, gnorm));
    on_accept(
        &TraceRow { step: 0, h_step: 0.0, energy, grad_norm: gnorm },
        &u,
    );

    let mut h = params.h_init;
    let mut steps = 0usize;
    let mut stagnant = 0usize;

    loop {
        if gnorm <= params.tol {
            return Ok(report(u, gnorm, energy, steps, TerminationReason::Converged, history));
        }
        if steps >= params.max_steps {
            return Ok(report(u, gnorm, energy, steps, TerminationReason::MaxSteps, history));
        }
        if pp.eps_norm(&u)? >= params.divergence_norm_cap
            || energy <= params.divergence_energy_floor
        {
            return Ok(report(u, gnorm, energy, steps, TerminationReason::Diverged, history));
        }
        if stagnant >= params.patience {
            return Ok(report(u, gnorm, energy, steps, TerminationReason::Stagnated, history));
        }

        let candidate = combine(&u, &au, h);
        if !candidate.is_finite() {
            return Err(Error::numerical(format!(
                "flow step produced nonfinite value at node {}",
                candidate.first_nonfinite().unwrap_or(0)
            )));
        }
        let cand_energy = pp.energy(&candidate)?;
        steps += 1;
        if cand_energy <= energy + params.energy_slack {
            let progressed = energy - cand_energy > params.energy_slack;
            u = candidate;
            energy = cand_energy;
            au = pp.a_eps(&u)?;
            gnorm = pp.residual_eps_norm(&u, &au)?;
            if history.len() == HISTORY_CAP {
                history.pop_front();
            }
            history.push_back((energy, gnorm));
            on_accept(
                &TraceRow { step: steps, h_step: h, energy, grad_norm: gnorm },
                &u,
            );
            if h <= params.h_min * 1.000001 && !progressed {
                stagnant += 1;
            } else {
                stagnant = 0;
            }
            h = (h * 1.2).min(params.h_max);
        } else if h > params.h_min {
            h = (h * 0.5).max(params.h_min);
        } else {
            stagnant += 1;
        }
    }
}

fn report(
    field: Field,
    grad_norm: f64,
    energy: f64,
    iterations: usize,
    reason: TerminationReason,
    history: VecDeque<(f64, f64)>,
) -> CriticalPointReport {
    CriticalPointReport { field, grad_norm, energy, iterations, reason, history }
}

/// Classify a field by the H¹ norms of its nodal positive/negative parts.
pub fn classify(grid: &Grid, u: &Field, part_tol: f64) -> Result<Classification> {
    if part_tol < 0.0 {
        return Err(Error::contract(format!("part_tol must be >= 0, got {part_tol}")));
    }
    let plus = h1_norm(grid, &u.pos_part())?;
    let minus = h1_norm(grid, &u.neg_part())?;
    Ok(match (plus > part_tol, minus > part_tol) {
        (false, false) => Classification::Trivial,
        (true, false) => Classification::Positive,
        (false, true) => Classification::Negative,
        (true, true) => Classification::SignChanging,
    })
}

/// Converged field together with its classification and residual diagnostics.
#[derive(Debug, Clone, Serialize)]
pub struct SolutionReport {
    pub classification: Classification,
    pub energy: f64,
    pub grad_norm: f64,
    pub iterations: usize,
    pub reason: TerminationReason,
    pub part_norm_plus: f64,
    pub part_norm_minus: f64,
    pub feasibility_max: f64,
    pub feasibility_l2: f64,
    pub fixed_point_residual: f64,
    #[serde(skip)]
    pub field: Field,
}

impl SolutionReport {
    pub fn assess(pp: &PenaltyProblem, report: CriticalPointReport, part_tol: f64) -> Result<Self> {
        let grid = pp.grid();
        let class = classify(grid, &report.field, part_tol)?;
        let plus = h1_norm(grid, &report.field.pos_part())?;
        let minus = h1_norm(grid, &report.field.neg_part())?;
        let overshoot = Field::from(
            report
                .field
                .iter()
                .zip(pp.obstacle().values.iter())
                .map(|(&u, &p)| (u - p).max(0.0))
                .collect::<Vec<_>>(),
        );
        let fres = pp.grad_norm(&report.field)?;
        Ok(SolutionReport {
            classification: class,
            energy: report.energy,
            grad_norm: report.grad_norm,
            iterations: report.iterations,
            reason: report.reason,
            part_norm_plus: plus,
            part_norm_minus: minus,
            feasibility_max: overshoot.max_value().max(0.0),
            feasibility_l2: l2_norm(grid, &overshoot)?,
            fixed_point_residual: fres,
            field: report.field,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::{build_grid, eigenpairs};
    use crate::model::{model_power, Obstacle};

    fn problem(n: usize, psi: f64, eps: f64) -> PenaltyProblem {
        let g = build_grid(1, &[1.0], &[n]).unwrap();
        let nl = model_power(1.5, true).unwrap();
        let ob = Obstacle::constant(&g, psi).unwrap();
        PenaltyProblem::new(g, nl, ob, eps).unwrap()
    }

    #[test]
    fn zero_seed_converges_immediately() {
        let pp = problem(32, 0.5, 0.1);
        let rep = flow_to_critical(&pp, &Field::zeros(32), &FlowParams::default()).unwrap();
        assert_eq!(rep.reason, TerminationReason::Converged);
        assert_eq!(rep.iterations, 0);
        assert_eq!(rep.field.linf_norm(), 0.0);
    }

    #[test]
    fn fixed_point_is_preserved_to_roundoff() {
        let pp = problem(32, 1e6, 0.5);
        let z = Field::zeros(32);
        let stepped = flow_step(&pp, &z, 0.3).unwrap();
        assert_eq!(stepped.linf_norm(), 0.0);

        // a generic field: u+ stays within roundoff of u when A u == u is forced
        let u = pp.grid().field_from_fn(|x| (3.0 * x[0]).sin());
        let au = pp.a_eps(&u).unwrap();
        let res = u.lin_comb(1.0, &au, -1.0);
        let step = flow_step(&pp, &u, 0.7).unwrap();
        let moved = step.lin_comb(1.0, &u, -1.0).linf_norm();
        // |u+ - u| = (1 - e^-h) |Au - u|
        assert!(moved <= 0.6 * res.linf_norm() + 1e-14);
    }

    #[test]
    fn small_steps_approximate_the_vector_field() {
        let pp = problem(24, 0.4, 0.2);
        let u = pp.grid().field_from_fn(|x| 0.3 * (7.0 * x[0]).sin());
        let au = pp.a_eps(&u).unwrap();
        let v = au.lin_comb(1.0, &u, -1.0); // A u - u
        let mut prev_err = f64::INFINITY;
        for &h in &[1e-2, 1e-3, 1e-4] {
            let up = flow_step(&pp, &u, h).unwrap();
            let fd = up.lin_comb(1.0 / h, &u, -1.0 / h);
            let err = fd.lin_comb(1.0, &v, -1.0).linf_norm() / v.linf_norm();
            assert!(err < 1.5 * h / 2.0 * 10.0); // O(h)
            assert!(err < prev_err);
            prev_err = err;
        }
    }

    #[test]
    fn convex_combination_keeps_cone_exactly() {
        let pp = problem(40, 0.3, 0.05);
        let mut u = pp.grid().field_from_fn(|x| (17.0 * x[0]).sin().abs());
        for k in 0..30 {
            u = flow_step(&pp, &u, 0.05 + 0.1 * (k as f64 % 7.0)).unwrap();
            assert!(u.min_value() >= 0.0, "negative entry after step {k}");
        }
    }

    #[test]
    fn energy_is_monotone_along_accepted_steps() {
        let pp = problem(48, 1e6, 1.0);
        let e = eigenpairs(pp.grid(), 1).unwrap();
        let seed = e[0].field.scaled(5.0);
        let mut energies = Vec::new();
        let params = FlowParams { max_steps: 300, ..FlowParams::default() };
        let _ = flow_to_critical_traced(&pp, &seed, &params, &mut |row, _| {
            energies.push(row.energy);
        })
        .unwrap();
        for w in energies.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }

    #[test]
    fn small_seed_flows_to_trivial_critical_point() {
        // Near the origin the energy is positive definite, so small cone
        // seeds descend into the trivial well.
        let pp = problem(64, 1e6, 1.0);
        let e = eigenpairs(pp.grid(), 1).unwrap();
        let seed = e[0].field.scaled(0.1);
        let rep = flow_to_critical(&pp, &seed, &FlowParams::default()).unwrap();
        assert_eq!(rep.reason, TerminationReason::Converged);
        assert_eq!(classify(pp.grid(), &rep.field, 1e-3).unwrap(), Classification::Trivial);
    }

    #[test]
    fn blowup_is_reported_as_divergence() {
        let pp = problem(64, 1e6, 1.0);
        let e = eigenpairs(pp.grid(), 1).unwrap();
        // far beyond the mountain ridge: descent escapes to -infinity energy
        let seed = e[0].field.scaled(600.0);
        let rep = flow_to_critical(&pp, &seed, &FlowParams::default()).unwrap();
        assert_eq!(rep.reason, TerminationReason::Diverged);
    }

    #[test]
    fn classify_examples() {
        let g = build_grid(1, &[1.0], &[32]).unwrap();
        let e = eigenpairs(&g, 2).unwrap();
        assert_eq!(classify(&g, &e[0].field, 1e-6).unwrap(), Classification::Positive);
        assert_eq!(classify(&g, &e[1].field, 1e-6).unwrap(), Classification::SignChanging);
        assert_eq!(classify(&g, &Field::zeros(32), 0.0).unwrap(), Classification::Trivial);
        assert_eq!(
            classify(&g, &e[0].field.scaled(-1.0), 1e-6).unwrap(),
            Classification::Negative
        );
    }
}
