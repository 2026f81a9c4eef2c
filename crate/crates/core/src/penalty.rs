//! The penalized problem: energy, the solution operator `K_ε`, the nodal
//! operator `F_ε`, their composition `A_ε`, and the gradient `u - A_ε u` of
//! the penalized energy in the shifted norm `‖·‖_ε`.

use crate::error::{Error, Result};
use crate::flow::Classification;
use crate::grid::{h1_inner, l2_norm, Field, Grid};
use crate::linalg::BandedCholesky;
use crate::model::{Nonlinearity, Obstacle};
use crate::EigenPair;

/// A grid + model + penalty parameter `ε`, with the factorized linear
/// operator `(-Δ_h + (1/ε) I)` cached for reuse across flow steps.
///
/// Immutable after construction; evaluations on distinct fields may run
/// concurrently.
#[derive(Debug, Clone)]
pub struct PenaltyProblem {
    grid: Grid,
    nonlinearity: Nonlinearity,
    obstacle: Obstacle,
    eps: f64,
    chol: std::sync::Arc<BandedCholesky>,
}

impl PenaltyProblem {
    pub fn new(grid: Grid, nonlinearity: Nonlinearity, obstacle: Obstacle, eps: f64) -> Result<Self> {
        if !(eps > 0.0) || !eps.is_finite() {
            return Err(Error::config(format!("penalty parameter must be positive, got {eps}")));
        }
        grid.check_conforms(&obstacle.values)?;
        let band = grid.shifted_stiffness_band(1.0 / eps);
        let chol = BandedCholesky::factor(&band)?;
        Ok(PenaltyProblem {
            grid,
            nonlinearity,
            obstacle,
            eps,
            chol: std::sync::Arc::new(chol),
        })
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn nonlinearity(&self) -> &Nonlinearity {
        &self.nonlinearity
    }

    pub fn obstacle(&self) -> &Obstacle {
        &self.obstacle
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    /// Penalized energy
    /// `I_ε(u) = ½‖u‖² + (1/2ε) Σ ((u-ψ)⁺)² vol − Σ P(x,u) vol`.
    pub fn energy(&self, u: &Field) -> Result<f64> {
        self.grid.check_conforms(u)?;
        let vol = self.grid.cell_volume();
        let h1 = h1_inner(&self.grid, u, u)?;
        let mut pen = 0.0;
        let mut prim = 0.0;
        let dim = self.grid.dimension();
        for (i, (&ui, &psi)) in u.iter().zip(self.obstacle.values.iter()).enumerate() {
            let d = ui - psi;
            if d > 0.0 {
                pen += d * d;
            }
            let c = self.grid.coord(i);
            prim += self.nonlinearity.eval_primitive(&c[..dim], ui);
        }
        let val = 0.5 * h1 + pen * vol / (2.0 * self.eps) - prim * vol;
        if !val.is_finite() {
            let idx = u.first_nonfinite().unwrap_or(0);
            return Err(Error::numerical(format!(
                "energy is nonfinite (first suspect node {idx})"
            )));
        }
        Ok(val)
    }

    /// Same energy written through `‖u‖_ε² − |u|₂²/ε`; equal to [`Self::energy`]
    /// up to roundoff. Exposed for the consistency test.
    pub fn energy_via_eps_norm(&self, u: &Field) -> Result<f64> {
        let vol = self.grid.cell_volume();
        let h1 = h1_inner(&self.grid, u, u)?;
        let l2sq = u.iter().map(|v| v * v).sum::<f64>() * vol;
        let eps_norm_sq = h1 + l2sq / self.eps;
        let mut pen = 0.0;
        let mut prim = 0.0;
        let dim = self.grid.dimension();
        for (i, (&ui, &psi)) in u.iter().zip(self.obstacle.values.iter()).enumerate() {
            let d = ui - psi;
            if d > 0.0 {
                pen += d * d;
            }
            let c = self.grid.coord(i);
            prim += self.nonlinearity.eval_primitive(&c[..dim], ui);
        }
        Ok(0.5 * eps_norm_sq + pen * vol / (2.0 * self.eps) - prim * vol - l2sq / (2.0 * self.eps))
    }

    /// Nodal operator `F_ε u = p(x,u) + (1/ε)(u − (u−ψ)⁺)`.
    ///
    /// Computed in this order so that for `u >= 0`, `ψ >= 0` the result is
    /// nonnegative exactly: `(u−ψ)⁺ <= u` holds in floating point, and only
    /// nonnegative quantities are added afterwards.
    pub fn f_eps(&self, u: &Field) -> Result<Field> {
        self.grid.check_conforms(u)?;
        let dim = self.grid.dimension();
        let mut out = Vec::with_capacity(u.len());
        for (i, (&ui, &psi)) in u.iter().zip(self.obstacle.values.iter()).enumerate() {
            let d = ui - psi;
            let plus = if d > 0.0 { d } else { 0.0 };
            let c = self.grid.coord(i);
            out.push(self.nonlinearity.eval_p(&c[..dim], ui) + (ui - plus) / self.eps);
        }
        Ok(Field::from(out))
    }

    /// Solution operator: solve `(-Δ_h + (1/ε) I) w = v`.
    ///
    /// The banded Cholesky of the M-matrix never subtracts during the
    /// substitutions, so sign-definite right-hand sides give sign-definite
    /// solutions with no tolerance. The solve is symmetrized over the grid's
    /// index reversal (a symmetry of the operator), which keeps reflection-
    /// antisymmetric data exactly antisymmetric along the flow.
    pub fn k_eps(&self, v: &Field) -> Result<Field> {
        self.grid.check_conforms(v)?;
        let w1 = self.chol.solve(v);
        let mut rv: Vec<f64> = v.iter().rev().copied().collect();
        rv = self.chol.solve(&rv);
        let out: Vec<f64> = w1
            .iter()
            .zip(rv.iter().rev())
            .map(|(a, b)| 0.5 * (a + b))
            .collect();
        Ok(Field::from(out))
    }

    /// `A_ε = K_ε ∘ F_ε`. Maps the nonnegative cone into itself when the
    /// obstacle is nonnegative and the nonlinearity has the sign of `u`.
    pub fn a_eps(&self, u: &Field) -> Result<Field> {
        let f = self.f_eps(u)?;
        self.k_eps(&f)
    }

    /// Gradient of the penalized energy with respect to `⟨·,·⟩_ε`:
    /// `I'_ε(u) = u − A_ε u`.
    pub fn grad_eps(&self, u: &Field) -> Result<Field> {
        let au = self.a_eps(u)?;
        Ok(u.lin_comb(1.0, &au, -1.0))
    }

    /// `‖g‖_ε = sqrt(∫|∇g|² + |g|₂²/ε)`.
    pub fn eps_norm(&self, g: &Field) -> Result<f64> {
        let h1 = h1_inner(&self.grid, g, g)?;
        let l2 = l2_norm(&self.grid, g)?;
        Ok((h1.max(0.0) + l2 * l2 / self.eps).sqrt())
    }

    /// `⟨u, v⟩_ε = ∫∇u·∇v + (1/ε)∫uv`.
    pub fn eps_inner(&self, u: &Field, v: &Field) -> Result<f64> {
        let h1 = h1_inner(&self.grid, u, v)?;
        let vol = self.grid.cell_volume();
        let l2: f64 = u.iter().zip(v.iter()).map(|(a, b)| a * b).sum::<f64>() * vol;
        Ok(h1 + l2 / self.eps)
    }

    /// `‖u − A_ε u‖_ε` with `A_ε u` already computed.
    pub fn residual_eps_norm(&self, u: &Field, au: &Field) -> Result<f64> {
        let g = u.lin_comb(1.0, au, -1.0);
        self.eps_norm(&g)
    }

    pub fn grad_norm(&self, u: &Field) -> Result<f64> {
        let g = self.grad_eps(u)?;
        self.eps_norm(&g)
    }

    /// Weak-form residual of the penalized equation against a test field:
    /// `⟨u,v⟩ + (1/ε)Σ(u−ψ)⁺ v vol − Σ p(x,u) v vol`.
    pub fn weak_form_residual(&self, u: &Field, v: &Field) -> Result<f64> {
        self.grid.check_conforms(u)?;
        self.grid.check_conforms(v)?;
        let vol = self.grid.cell_volume();
        let a = h1_inner(&self.grid, u, v)?;
        let dim = self.grid.dimension();
        let mut pen = 0.0;
        let mut rhs = 0.0;
        for (i, ((&ui, &vi), &psi)) in u
            .iter()
            .zip(v.iter())
            .zip(self.obstacle.values.iter())
            .enumerate()
        {
            let d = ui - psi;
            if d > 0.0 {
                pen += d * vi;
            }
            let c = self.grid.coord(i);
            rhs += self.nonlinearity.eval_p(&c[..dim], ui) * vi;
        }
        Ok(a + pen * vol / self.eps - rhs * vol)
    }

    /// Classify by the H¹ norms of nodal positive/negative parts.
    pub fn classify(&self, u: &Field, part_tol: f64) -> Result<Classification> {
        crate::flow::classify(&self.grid, u, part_tol)
    }
}

/// H¹-orthonormalize the first two eigenfields (Gram–Schmidt in the H¹
/// inner product). For exact eigenpairs this reduces to `φ_i / sqrt(λ_i)`.
pub fn orthonormalize_h1(grid: &Grid, e1: &EigenPair, e2: &EigenPair) -> Result<(Field, Field)> {
    let n1 = h1_inner(grid, &e1.field, &e1.field)?.sqrt();
    if n1 <= 0.0 {
        return Err(Error::numerical("degenerate first eigenfield".to_string()));
    }
    let b1 = e1.field.scaled(1.0 / n1);
    let proj = h1_inner(grid, &e2.field, &b1)?;
    let n2_raw = h1_inner(grid, &e2.field, &e2.field)?.sqrt();
    // Distinct eigenfields are orthogonal; a projection at rounding level is
    // noise, and subtracting it would contaminate the field's parity class.
    let raw = if proj.abs() > 1e-8 * n2_raw {
        e2.field.lin_comb(1.0, &b1, -proj)
    } else {
        e2.field.clone()
    };
    let n2 = h1_inner(grid, &raw, &raw)?.sqrt();
    if n2 <= 0.0 {
        return Err(Error::numerical("degenerate second eigenfield".to_string()));
    }
    Ok((b1, raw.scaled(1.0 / n2)))
}
