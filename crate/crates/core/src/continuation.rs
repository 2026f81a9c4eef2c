//! Continuation of penalized solutions as the penalty parameter decreases,
//! with warm starts and a discrete KKT certificate for the limiting
//! variational inequality.

use crate::error::{Error, Result};
use crate::flow::{classify, flow_to_critical, Classification};
use crate::grid::{apply_neg_laplacian, eigenpairs, h1_inner, h1_norm, l2_norm, Field, Grid};
use crate::model::{Nonlinearity, Obstacle};
use crate::multisol::{find_negative, find_positive, find_sign_changing, SearchConfig, SolutionSlot};
use crate::penalty::{orthonormalize_h1, PenaltyProblem};
use serde::Serialize;

/// Which solution family the continuation tracks.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    Positive,
    Negative,
    SignChanging,
}

impl Branch {
    pub fn expected_class(self) -> Classification {
        match self {
            Branch::Positive => Classification::Positive,
            Branch::Negative => Classification::Negative,
            Branch::SignChanging => Classification::SignChanging,
        }
    }
}

impl std::fmt::Display for Branch {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Branch::Positive => f.write_str("positive"),
            Branch::Negative => f.write_str("negative"),
            Branch::SignChanging => f.write_str("sign_changing"),
        }
    }
}

/// Geometric penalty schedule `ε_n = ε₀ γⁿ`.
#[derive(Debug, Clone, Serialize)]
pub struct Schedule {
    pub eps0: f64,
    pub gamma: f64,
    pub max_stages: usize,
    /// Stop once the L² feasibility defect falls below this.
    pub tol_feas: f64,
}

impl Schedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps0 > 0.0) {
            return Err(Error::config(format!("eps0 must be positive, got {}", self.eps0)));
        }
        if !(self.gamma > 0.0 && self.gamma < 1.0) {
            return Err(Error::config(format!("gamma must lie in (0,1), got {}", self.gamma)));
        }
        if self.max_stages == 0 {
            return Err(Error::config("schedule needs at least one stage"));
        }
        if !(self.tol_feas > 0.0) {
            return Err(Error::config(format!("tol_feas must be positive, got {}", self.tol_feas)));
        }
        Ok(())
    }
}

/// Per-stage record of the continuation.
#[derive(Debug, Clone, Serialize)]
pub struct StageRow {
    pub n: usize,
    pub eps: f64,
    pub energy: f64,
    pub norm: f64,
    pub norm_plus: f64,
    pub norm_minus: f64,
    pub feas_l2: f64,
}

/// KKT-style residuals of a field for the obstacle problem.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ViResiduals {
    /// max over nodes of `(ω − ψ)⁺`.
    pub feasibility: f64,
    /// max over inactive nodes (`ω < ψ − tol_act`) of `|Δ_h ω + p(x, ω)|`.
    pub stationarity: f64,
    /// max over nodes of `|min(ψ − ω, Δ_h ω + p(x, ω))|`.
    pub complementarity: f64,
}

/// Certificate assembled by [`continue_to_vi`].
#[derive(Debug, Clone, Serialize)]
pub struct ViCertificate {
    pub branch: Branch,
    pub stages: Vec<StageRow>,
    pub residuals: ViResiduals,
    pub feasibility_l2: f64,
    pub part_norm_plus: f64,
    pub part_norm_minus: f64,
    /// min over the default admissible test fields of the VI pairing.
    pub vi_test_min: f64,
    /// Numerical energy ceiling from the spectral-plane ball of radius `r1`.
    pub sigma_hat: f64,
    /// `max_n feas_n² / ε_n` — the empirical constant of the √ε feasibility law.
    pub c_hat: f64,
    /// `‖ω_n − ω_N‖` over the last stages (most recent last).
    pub strong_limit_tail: Vec<f64>,
    pub tol_act: f64,
    pub r1: f64,
    pub gamma_relaxed: bool,
    pub final_eps: f64,
    pub final_energy: f64,
    pub final_grad_norm: f64,
    #[serde(skip)]
    pub final_field: Field,
}

fn overshoot(grid: &Grid, obstacle: &Obstacle, u: &Field) -> Field {
    let _ = grid;
    Field::from(
        u.iter()
            .zip(obstacle.values.iter())
            .map(|(&a, &b)| (a - b).max(0.0))
            .collect::<Vec<f64>>(),
    )
}

fn stage_row(
    grid: &Grid,
    obstacle: &Obstacle,
    pp: &PenaltyProblem,
    n: usize,
    u: &Field,
) -> Result<StageRow> {
    Ok(StageRow {
        n,
        eps: pp.eps(),
        energy: pp.energy(u)?,
        norm: h1_norm(grid, u)?,
        norm_plus: h1_norm(grid, &u.pos_part())?,
        norm_minus: h1_norm(grid, &u.neg_part())?,
        feas_l2: l2_norm(grid, &overshoot(grid, obstacle, u))?,
    })
}

fn branch_search(pp: &PenaltyProblem, cfg: &SearchConfig, branch: Branch) -> Result<SolutionSlot> {
    Ok(match branch {
        Branch::Positive => find_positive(pp, cfg)?,
        Branch::Negative => find_negative(pp, cfg)?,
        Branch::SignChanging => find_sign_changing(pp, cfg)?.0,
    })
}

/// Solve the penalized problem along the schedule with warm starts,
/// re-running the full branch search whenever a warm start collapses to a
/// different classification, and relaxing the decay factor to `√γ` once
/// before giving up. Returns the certificate for the final field.
pub fn continue_to_vi(
    grid: &Grid,
    nl: &Nonlinearity,
    obstacle: &Obstacle,
    cfg: &SearchConfig,
    schedule: &Schedule,
    branch: Branch,
) -> Result<ViCertificate> {
    schedule.validate()?;
    cfg.validate()?;
    let expected = branch.expected_class();
    let class_tol = cfg.part_tol;
    let stage_flow = match branch {
        Branch::SignChanging => crate::flow::FlowParams {
            tol: cfg.sc_tol.unwrap_or(cfg.flow.tol),
            ..cfg.flow.clone()
        },
        _ => cfg.flow.clone(),
    };

    let mut eps = schedule.eps0;
    let mut gamma = schedule.gamma;
    let mut relaxed = false;

    let pp0 = PenaltyProblem::new(grid.clone(), nl.clone(), obstacle.clone(), eps)?;
    let slot = branch_search(&pp0, cfg, branch)?;
    if !slot.found {
        return Err(Error::BranchLost {
            stage: 0,
            detail: slot
                .not_found_reason
                .unwrap_or_else(|| "stage-0 search failed".into()),
        });
    }
    let mut omega = slot.field;
    let mut grad_norm = slot.grad_norm;
    let mut energy = slot.energy;
    let mut stages = vec![stage_row(grid, obstacle, &pp0, 0, &omega)?];
    let mut fields = vec![omega.clone()];
    let mut final_eps = eps;

    let mut n = 0usize;
    while stages.last().unwrap().feas_l2 > schedule.tol_feas && n + 1 < schedule.max_stages {
        n += 1;
        eps *= gamma;
        let pp = PenaltyProblem::new(grid.clone(), nl.clone(), obstacle.clone(), eps)?;
        let warm = flow_to_critical(&pp, &omega, &stage_flow)?;
        let class = classify(grid, &warm.field, class_tol)?;
        let accepted = if class == expected {
            energy = warm.energy;
            grad_norm = warm.grad_norm;
            omega = warm.field;
            true
        } else {
            log::warn!(
                "stage {n}: warm start collapsed to {class}, re-running the {branch} search"
            );
            let slot = branch_search(&pp, cfg, branch)?;
            if slot.found {
                energy = slot.energy;
                grad_norm = slot.grad_norm;
                omega = slot.field;
                true
            } else if !relaxed {
                relaxed = true;
                gamma = gamma.sqrt();
                eps /= schedule.gamma; // undo, retry this stage more gently
                eps *= gamma;
                let pp = PenaltyProblem::new(grid.clone(), nl.clone(), obstacle.clone(), eps)?;
                let warm = flow_to_critical(&pp, &omega, &stage_flow)?;
                let class = classify(grid, &warm.field, class_tol)?;
                if class == expected {
                    energy = warm.energy;
                    grad_norm = warm.grad_norm;
                    omega = warm.field;
                    true
                } else {
                    let slot = branch_search(&pp, cfg, branch)?;
                    if slot.found {
                        energy = slot.energy;
                        grad_norm = slot.grad_norm;
                        omega = slot.field;
                        true
                    } else {
                        false
                    }
                }
            } else {
                false
            }
        };
        if !accepted {
            return Err(Error::BranchLost {
                stage: n,
                detail: format!("warm start and recovery both left the {branch} branch"),
            });
        }
        let pp_now = PenaltyProblem::new(grid.clone(), nl.clone(), obstacle.clone(), eps)?;
        stages.push(stage_row(grid, obstacle, &pp_now, n, &omega)?);
        fields.push(omega.clone());
        final_eps = eps;
    }

    let tol_act = (10.0 * schedule.tol_feas).max(1e-6);
    let residuals = vi_residuals(grid, nl, obstacle, &omega, tol_act)?;
    let v_list = default_vi_test_fields(grid, obstacle, &omega);
    let vi_vals = sample_vi_tests(grid, nl, obstacle, &omega, &v_list)?;
    let vi_test_min = vi_vals.iter().copied().fold(f64::INFINITY, f64::min);
    let sig = sigma_hat(grid, nl, cfg.r1, 33, 64)?;

    let c_hat = stages
        .iter()
        .map(|r| r.feas_l2 * r.feas_l2 / r.eps)
        .fold(0.0f64, f64::max);
    let tail_len = fields.len().min(4);
    let last = fields.len() - 1;
    let strong_limit_tail = (fields.len() - tail_len..=last)
        .map(|i| {
            let diff = fields[i].lin_comb(1.0, &fields[last], -1.0);
            h1_norm(grid, &diff)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(ViCertificate {
        branch,
        residuals,
        feasibility_l2: stages.last().unwrap().feas_l2,
        part_norm_plus: h1_norm(grid, &omega.pos_part())?,
        part_norm_minus: h1_norm(grid, &omega.neg_part())?,
        vi_test_min,
        sigma_hat: sig,
        c_hat,
        strong_limit_tail,
        tol_act,
        r1: cfg.r1,
        gamma_relaxed: relaxed,
        final_eps,
        final_energy: energy,
        final_grad_norm: grad_norm,
        final_field: omega,
        stages,
    })
}

/// Discrete KKT residuals: with `r = Δ_h ω + p(x, ω)` (the multiplier
/// density), feasibility is the largest overshoot, stationarity the largest
/// `|r|` on inactive nodes, and complementarity the largest
/// `|min(ψ − ω, r)|`.
pub fn vi_residuals(
    grid: &Grid,
    nl: &Nonlinearity,
    obstacle: &Obstacle,
    omega: &Field,
    tol_act: f64,
) -> Result<ViResiduals> {
    grid.check_conforms(omega)?;
    let neg_lap = apply_neg_laplacian(grid, omega)?;
    let dim = grid.dimension();
    let mut feas = 0.0f64;
    let mut stat = 0.0f64;
    let mut compl = 0.0f64;
    for i in 0..omega.len() {
        let c = grid.coord(i);
        let r = nl.eval_p(&c[..dim], omega[i]) - neg_lap[i];
        let gap = obstacle.values[i] - omega[i];
        feas = feas.max(-gap);
        if gap > tol_act {
            stat = stat.max(r.abs());
        }
        compl = compl.max(gap.min(r).abs());
    }
    Ok(ViResiduals {
        feasibility: feas.max(0.0),
        stationarity: stat,
        complementarity: compl,
    })
}

/// The VI pairing `⟨ω, v−ω⟩ − Σ p(x,ω)(v−ω) vol` for each admissible test
/// field; every `v` must satisfy `v <= ψ` nodally.
pub fn sample_vi_tests(
    grid: &Grid,
    nl: &Nonlinearity,
    obstacle: &Obstacle,
    omega: &Field,
    v_list: &[Field],
) -> Result<Vec<f64>> {
    grid.check_conforms(omega)?;
    let vol = grid.cell_volume();
    let dim = grid.dimension();
    let mut out = Vec::with_capacity(v_list.len());
    for (k, v) in v_list.iter().enumerate() {
        grid.check_conforms(v)?;
        if let Some(i) = v
            .iter()
            .zip(obstacle.values.iter())
            .position(|(&a, &b)| a > b)
        {
            return Err(Error::contract(format!(
                "test field {k} is inadmissible: v > psi at node {i}"
            )));
        }
        let diff = v.lin_comb(1.0, omega, -1.0);
        let a = h1_inner(grid, omega, &diff)?;
        let mut rhs = 0.0;
        for i in 0..omega.len() {
            let c = grid.coord(i);
            rhs += nl.eval_p(&c[..dim], omega[i]) * diff[i];
        }
        out.push(a - rhs * vol);
    }
    Ok(out)
}

/// Deterministic admissible test fields: ψ-capped multiples of ω, localized
/// bumps added to and removed from ω (capped), and zero when admissible.
pub fn default_vi_test_fields(grid: &Grid, obstacle: &Obstacle, omega: &Field) -> Vec<Field> {
    let psi = &obstacle.values;
    let cap = |f: Field| -> Field {
        Field::from(
            f.iter()
                .zip(psi.iter())
                .map(|(&a, &b)| a.min(b))
                .collect::<Vec<f64>>(),
        )
    };
    let mut list = Vec::new();
    for &c in &[0.0, 0.25, 0.5, 0.75, 0.9, 1.0, 1.1, 1.5] {
        list.push(cap(omega.scaled(c)));
    }
    let amp = 0.1 * omega.linf_norm().max(1e-6);
    let ex = grid.extents();
    let dim = grid.dimension();
    for &frac in &[0.25, 0.5, 0.75] {
        for &sign in &[1.0, -1.0] {
            let bump = grid.field_from_fn(|x| {
                let mut b = 1.0;
                for a in 0..dim {
                    let d = (x[a] / ex[a] - frac).abs();
                    b *= (1.0 - 4.0 * d).max(0.0);
                }
                sign * amp * b
            });
            list.push(cap(omega.lin_comb(1.0, &bump, 1.0)));
        }
    }
    // zero is admissible only for nonnegative obstacles
    if psi.min_value() >= 0.0 {
        list.push(Field::zeros(omega.len()));
    }
    list
}

/// Numerical energy ceiling: max over `t ∈ [0,1]` and an angle mesh of
/// `t²/2 · r1² − Σ P(x, t u) vol` with `u` on the H¹ sphere of radius `r1`
/// in the span of the first two eigenfields.
pub fn sigma_hat(grid: &Grid, nl: &Nonlinearity, r1: f64, t_steps: usize, theta_steps: usize) -> Result<f64> {
    if !(r1 > 0.0) {
        return Err(Error::contract(format!("r1 must be positive, got {r1}")));
    }
    let eig = eigenpairs(grid, 2)?;
    let (e1, e2) = orthonormalize_h1(grid, &eig[0], &eig[1])?;
    let vol = grid.cell_volume();
    let dim = grid.dimension();
    let mut best = f64::NEG_INFINITY;
    for it in 0..theta_steps {
        let th = 2.0 * std::f64::consts::PI * it as f64 / theta_steps as f64;
        let u = e1.lin_comb(th.cos(), &e2, th.sin()).scaled(r1);
        for is in 0..=t_steps {
            let t = is as f64 / t_steps as f64;
            let mut prim = 0.0;
            for i in 0..u.len() {
                let c = grid.coord(i);
                prim += nl.eval_primitive(&c[..dim], t * u[i]);
            }
            best = best.max(0.5 * t * t * r1 * r1 - prim * vol);
        }
    }
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::build_grid;
    use crate::model::{model_power, Obstacle};

    #[test]
    fn schedule_validation() {
        let ok = Schedule { eps0: 0.1, gamma: 0.5, max_stages: 5, tol_feas: 1e-6 };
        assert!(ok.validate().is_ok());
        assert!(Schedule { gamma: 1.5, ..ok.clone() }.validate().is_err());
        assert!(Schedule { eps0: 0.0, ..ok.clone() }.validate().is_err());
        assert!(Schedule { tol_feas: 0.0, ..ok }.validate().is_err());
    }

    #[test]
    fn residuals_for_fully_active_field() {
        // omega = psi with Delta psi + p(psi) >= 0: zero feasibility and
        // complementarity, stationarity vacuous.
        let g = build_grid(1, &[1.0], &[48]).unwrap();
        let nl = model_power(1.5, true).unwrap();
        let e = crate::grid::eigenpairs(&g, 1).unwrap();
        let psi = e[0].field.scaled(-1.0); // negative: -lam*psi > 0 dominates p
        let ob = Obstacle::from_field(&g, psi.clone()).unwrap();
        let r = vi_residuals(&g, &nl, &ob, &psi, 1e-6).unwrap();
        assert_eq!(r.feasibility, 0.0);
        assert!(r.complementarity < 1e-12);
        assert_eq!(r.stationarity, 0.0);
    }

    #[test]
    fn vi_test_of_omega_itself_is_zero() {
        let g = build_grid(1, &[1.0], &[32]).unwrap();
        let nl = model_power(1.5, true).unwrap();
        let ob = Obstacle::constant(&g, 2.0).unwrap();
        let omega = g.field_from_fn(|x| (std::f64::consts::PI * x[0]).sin());
        let vals = sample_vi_tests(&g, &nl, &ob, &omega, &[omega.clone()]).unwrap();
        assert_eq!(vals[0], 0.0);
    }

    #[test]
    fn inadmissible_test_field_is_rejected() {
        let g = build_grid(1, &[1.0], &[16]).unwrap();
        let nl = model_power(1.5, true).unwrap();
        let ob = Obstacle::constant(&g, 0.5).unwrap();
        let omega = Field::zeros(16);
        let bad = g.field_from_fn(|_| 1.0);
        assert!(sample_vi_tests(&g, &nl, &ob, &omega, &[bad]).is_err());
    }

    #[test]
    fn default_test_fields_are_admissible() {
        let g = build_grid(1, &[1.0], &[32]).unwrap();
        let ob = Obstacle::constant(&g, 0.5).unwrap();
        let omega = g.field_from_fn(|x| 0.8 * (std::f64::consts::PI * x[0]).sin());
        for v in default_vi_test_fields(&g, &ob, &omega) {
            assert!(v.iter().zip(ob.values.iter()).all(|(&a, &b)| a <= b));
        }
    }

    #[test]
    fn sigma_hat_is_positive_for_small_radius() {
        let g = build_grid(1, &[1.0], &[32]).unwrap();
        let nl = model_power(1.5, true).unwrap();
        // tiny radius: the quadratic term dominates, so the max is ~ r^2/2 at t=1
        let s = sigma_hat(&g, &nl, 0.01, 8, 16).unwrap();
        assert!(s > 0.0 && s < 1e-3);
    }
}
