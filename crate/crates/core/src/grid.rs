//! Uniform finite-difference grids with homogeneous Dirichlet boundary,
//! nodal fields, discrete operators and Laplacian eigenpairs.
//!
//! Only interior nodes enter the unknown vector; boundary values are
//! identically zero. The quadrature weight of every interior node is the cell
//! volume (`h` in 1D, `h_x * h_y` in 2D), so sums of nodal values times the
//! cell volume approximate integrals over the domain.

use crate::error::{Error, Result};
use crate::linalg::{dense_symmetric_eigen, BandMatrix};
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use std::ops::{Deref, DerefMut};

/// Discretized rectangular domain (1D interval or 2D rectangle).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid {
    dimension: usize,
    extents: Vec<f64>,
    counts: Vec<usize>,
    spacing: Vec<f64>,
}

/// Nodal values of a function on the interior nodes of a grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Field(Vec<f64>);

/// Eigenvalue/eigenfield pair of the discrete negative Laplacian.
///
/// The eigenfield is normalized to unit (quadrature-weighted) L²-norm and the
/// sign is fixed so the nodal value nearest the domain center is nonnegative.
#[derive(Debug, Clone)]
pub struct EigenPair {
    pub value: f64,
    pub field: Field,
}

impl Deref for Field {
    type Target = [f64];
    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for Field {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

impl From<Vec<f64>> for Field {
    fn from(v: Vec<f64>) -> Self {
        Field(v)
    }
}

impl Field {
    pub fn zeros(n: usize) -> Self {
        Field(vec![0.0; n])
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Nodal positive part `max(u, 0)`.
    pub fn pos_part(&self) -> Field {
        Field(self.0.iter().map(|&v| if v > 0.0 { v } else { 0.0 }).collect())
    }

    /// Nodal negative part `max(-u, 0)`.
    pub fn neg_part(&self) -> Field {
        Field(self.0.iter().map(|&v| if v < 0.0 { -v } else { 0.0 }).collect())
    }

    pub fn scaled(&self, c: f64) -> Field {
        Field(self.0.iter().map(|v| c * v).collect())
    }

    /// `a * self + b * other`, elementwise.
    pub fn lin_comb(&self, a: f64, other: &Field, b: f64) -> Field {
        debug_assert_eq!(self.len(), other.len());
        Field(
            self.0
                .iter()
                .zip(other.0.iter())
                .map(|(&x, &y)| a * x + b * y)
                .collect(),
        )
    }

    pub fn min_value(&self) -> f64 {
        self.0.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.0.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn linf_norm(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|v| v.is_finite())
    }

    /// Index of the first nonfinite entry, if any.
    pub fn first_nonfinite(&self) -> Option<usize> {
        self.0.iter().position(|v| !v.is_finite())
    }
}

/// Build a grid. `extents` are physical side lengths, `interior_counts` the
/// number of interior nodes per axis; the spacing is `extent / (count + 1)`.
pub fn build_grid(dimension: usize, extents: &[f64], interior_counts: &[usize]) -> Result<Grid> {
    if dimension != 1 && dimension != 2 {
        return Err(Error::config(format!(
            "dimension must be 1 or 2, got {dimension}"
        )));
    }
    if extents.len() != dimension || interior_counts.len() != dimension {
        return Err(Error::config(format!(
            "expected {dimension} extents and counts, got {} and {}",
            extents.len(),
            interior_counts.len()
        )));
    }
    for &e in extents {
        if !(e > 0.0) || !e.is_finite() {
            return Err(Error::config(format!("extents must be positive, got {e}")));
        }
    }
    for &c in interior_counts {
        if c < 3 {
            return Err(Error::config(format!(
                "interior counts must be at least 3, got {c}"
            )));
        }
    }
    let spacing = extents
        .iter()
        .zip(interior_counts)
        .map(|(&e, &c)| e / (c as f64 + 1.0))
        .collect();
    Ok(Grid {
        dimension,
        extents: extents.to_vec(),
        counts: interior_counts.to_vec(),
        spacing,
    })
}

impl Grid {
    pub fn dimension(&self) -> usize {
        self.dimension
    }

    pub fn extents(&self) -> &[f64] {
        &self.extents
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    pub fn spacing(&self) -> &[f64] {
        &self.spacing
    }

    /// Total number of interior nodes (the length of a conforming [`Field`]).
    pub fn interior_count(&self) -> usize {
        self.counts.iter().product()
    }

    /// Quadrature weight of each interior node.
    pub fn cell_volume(&self) -> f64 {
        self.spacing.iter().product()
    }

    /// Measure of the full domain.
    pub fn domain_volume(&self) -> f64 {
        self.extents.iter().product()
    }

    /// Coordinates of an interior node; the second entry is 0 in 1D.
    pub fn coord(&self, idx: usize) -> [f64; 2] {
        match self.dimension {
            1 => [(idx as f64 + 1.0) * self.spacing[0], 0.0],
            _ => {
                let nx = self.counts[0];
                let ix = idx % nx;
                let iy = idx / nx;
                [
                    (ix as f64 + 1.0) * self.spacing[0],
                    (iy as f64 + 1.0) * self.spacing[1],
                ]
            }
        }
    }

    /// Index of the interior node closest to the domain center.
    pub fn center_index(&self) -> usize {
        match self.dimension {
            1 => (self.counts[0] - 1) / 2,
            _ => {
                let ix = (self.counts[0] - 1) / 2;
                let iy = (self.counts[1] - 1) / 2;
                iy * self.counts[0] + ix
            }
        }
    }

    /// Evaluate a function of the node coordinates into a field.
    pub fn field_from_fn(&self, f: impl Fn(&[f64]) -> f64) -> Field {
        let n = self.interior_count();
        let mut v = Vec::with_capacity(n);
        for idx in 0..n {
            let c = self.coord(idx);
            v.push(f(&c[..self.dimension]));
        }
        Field(v)
    }

    pub fn check_conforms(&self, u: &Field) -> Result<()> {
        if u.len() != self.interior_count() {
            return Err(Error::contract(format!(
                "field length {} does not match grid interior count {}",
                u.len(),
                self.interior_count()
            )));
        }
        Ok(())
    }

    /// Lower band of `(-Δ_h + shift I)`, the standard 3-point / 5-point
    /// stencil with Dirichlet closure. For `shift >= 0` this is an M-matrix.
    pub fn shifted_stiffness_band(&self, shift: f64) -> BandMatrix {
        let n = self.interior_count();
        match self.dimension {
            1 => {
                let h2 = self.spacing[0] * self.spacing[0];
                let mut a = BandMatrix::zeros(n, 1);
                for i in 0..n {
                    a.set(i, i, 2.0 / h2 + shift);
                    if i > 0 {
                        a.set(i, i - 1, -1.0 / h2);
                    }
                }
                a
            }
            _ => {
                let nx = self.counts[0];
                let hx2 = self.spacing[0] * self.spacing[0];
                let hy2 = self.spacing[1] * self.spacing[1];
                let mut a = BandMatrix::zeros(n, nx);
                for i in 0..n {
                    a.set(i, i, 2.0 / hx2 + 2.0 / hy2 + shift);
                    if i % nx != 0 {
                        a.set(i, i - 1, -1.0 / hx2);
                    }
                    if i >= nx {
                        a.set(i, i - nx, -1.0 / hy2);
                    }
                }
                a
            }
        }
    }
}

/// Apply the discrete negative Laplacian `(-Δ_h u)` with Dirichlet closure.
pub fn apply_neg_laplacian(grid: &Grid, u: &Field) -> Result<Field> {
    grid.check_conforms(u)?;
    let n = grid.interior_count();
    let mut out = vec![0.0; n];
    match grid.dimension {
        1 => {
            let h2 = grid.spacing[0] * grid.spacing[0];
            for i in 0..n {
                let left = if i > 0 { u[i - 1] } else { 0.0 };
                let right = if i + 1 < n { u[i + 1] } else { 0.0 };
                out[i] = (2.0 * u[i] - left - right) / h2;
            }
        }
        _ => {
            let nx = grid.counts[0];
            let ny = grid.counts[1];
            let hx2 = grid.spacing[0] * grid.spacing[0];
            let hy2 = grid.spacing[1] * grid.spacing[1];
            for iy in 0..ny {
                for ix in 0..nx {
                    let i = iy * nx + ix;
                    let l = if ix > 0 { u[i - 1] } else { 0.0 };
                    let r = if ix + 1 < nx { u[i + 1] } else { 0.0 };
                    let d = if iy > 0 { u[i - nx] } else { 0.0 };
                    let t = if iy + 1 < ny { u[i + nx] } else { 0.0 };
                    out[i] = (2.0 * u[i] - l - r) / hx2 + (2.0 * u[i] - d - t) / hy2;
                }
            }
        }
    }
    Ok(Field(out))
}

/// Discrete H¹ inner product `∫ ∇u · ∇v`, realized as the edge sum
/// `Σ (Δu)(Δv)/h² · cellvol` over all grid edges including the Dirichlet
/// boundary closure. Algebraically this equals `uᵀ(-Δ_h)v · cellvol`; the
/// edge form is symmetric in `u, v` by construction and a sum of squares for
/// `u = v`.
pub fn h1_inner(grid: &Grid, u: &Field, v: &Field) -> Result<f64> {
    grid.check_conforms(u)?;
    grid.check_conforms(v)?;
    let vol = grid.cell_volume();
    let mut acc = 0.0;
    match grid.dimension {
        1 => {
            let n = grid.counts[0];
            let w = vol / (grid.spacing[0] * grid.spacing[0]);
            let mut prev_u = 0.0;
            let mut prev_v = 0.0;
            for i in 0..n {
                acc += (u[i] - prev_u) * (v[i] - prev_v) * w;
                prev_u = u[i];
                prev_v = v[i];
            }
            acc += prev_u * prev_v * w; // closing edge to the right boundary
        }
        _ => {
            let nx = grid.counts[0];
            let ny = grid.counts[1];
            let wx = vol / (grid.spacing[0] * grid.spacing[0]);
            let wy = vol / (grid.spacing[1] * grid.spacing[1]);
            for iy in 0..ny {
                let mut prev_u = 0.0;
                let mut prev_v = 0.0;
                for ix in 0..nx {
                    let i = iy * nx + ix;
                    acc += (u[i] - prev_u) * (v[i] - prev_v) * wx;
                    prev_u = u[i];
                    prev_v = v[i];
                }
                acc += prev_u * prev_v * wx;
            }
            for ix in 0..nx {
                let mut prev_u = 0.0;
                let mut prev_v = 0.0;
                for iy in 0..ny {
                    let i = iy * nx + ix;
                    acc += (u[i] - prev_u) * (v[i] - prev_v) * wy;
                    prev_u = u[i];
                    prev_v = v[i];
                }
                acc += prev_u * prev_v * wy;
            }
        }
    }
    Ok(acc)
}

/// Discrete H¹ (semi)norm `‖u‖ = sqrt(∫ |∇u|²)`.
pub fn h1_norm(grid: &Grid, u: &Field) -> Result<f64> {
    Ok(h1_inner(grid, u, u)?.max(0.0).sqrt())
}

/// Quadrature-weighted Lq norm `(Σ |u_i|^q · cellvol)^{1/q}` for `q >= 1`.
pub fn lq_norm(grid: &Grid, u: &Field, q: f64) -> Result<f64> {
    if !(q >= 1.0) {
        return Err(Error::contract(format!("lq_norm requires q >= 1, got {q}")));
    }
    grid.check_conforms(u)?;
    let vol = grid.cell_volume();
    if q == 2.0 {
        let s: f64 = u.iter().map(|v| v * v).sum();
        return Ok((s * vol).sqrt());
    }
    let s: f64 = u.iter().map(|v| v.abs().powf(q)).sum();
    Ok((s * vol).powf(1.0 / q))
}

/// Weighted L² norm, a common special case.
pub fn l2_norm(grid: &Grid, u: &Field) -> Result<f64> {
    lq_norm(grid, u, 2.0)
}

fn normalize_eigenfield(grid: &Grid, mut v: Vec<f64>) -> Field {
    let vol = grid.cell_volume();
    let nrm = (v.iter().map(|x| x * x).sum::<f64>() * vol).sqrt();
    if nrm > 0.0 {
        for x in v.iter_mut() {
            *x /= nrm;
        }
    }
    let mut f = Field(v);
    fix_sign(grid, &mut f);
    f
}

// Sign convention: nodal value nearest the domain center nonnegative; when
// that value is numerically zero (antisymmetric modes), the first nodal value
// of significant magnitude is made positive instead.
fn fix_sign(grid: &Grid, f: &mut Field) {
    let tol = 1e-8 * f.linf_norm();
    let c = grid.center_index();
    let pivot = if f[c].abs() > tol {
        f[c]
    } else {
        match f.iter().find(|v| v.abs() > tol) {
            Some(&v) => v,
            None => return,
        }
    };
    if pivot < 0.0 {
        for x in f.iter_mut() {
            *x = -*x;
        }
    }
}

fn eigen_1d_axis(extent: f64, count: usize) -> Vec<(f64, Vec<f64>)> {
    let h = extent / (count as f64 + 1.0);
    let mut a = BandMatrix::zeros(count, 1);
    for i in 0..count {
        a.set(i, i, 2.0 / (h * h));
        if i > 0 {
            a.set(i, i - 1, -1.0 / (h * h));
        }
    }
    let mut pairs = dense_symmetric_eigen(&a);
    // The 1D spectrum is simple and the operator commutes with the grid
    // reversal, so every eigenvector is either symmetric or antisymmetric.
    // Project onto the dominant parity class so the symmetry holds exactly,
    // not just to roundoff; flows seeded from these fields then preserve it.
    for (_, v) in pairs.iter_mut() {
        let n = v.len();
        let mut sym = 0.0;
        let mut asym = 0.0;
        for i in 0..n {
            sym += (v[i] + v[n - 1 - i]).powi(2);
            asym += (v[i] - v[n - 1 - i]).powi(2);
        }
        let keep_sym = sym >= asym;
        for i in 0..n.div_ceil(2) {
            let j = n - 1 - i;
            let (a_i, a_j) = (v[i], v[j]);
            if keep_sym {
                let m = 0.5 * (a_i + a_j);
                v[i] = m;
                v[j] = m;
            } else {
                let m = 0.5 * (a_i - a_j);
                v[i] = m;
                v[j] = -m;
            }
        }
        if !keep_sym && n % 2 == 1 {
            v[n / 2] = 0.0;
        }
    }
    pairs
}

/// The `k` smallest eigenpairs of `-Δ_h`, ascending.
///
/// 1D grids use a dense symmetric eigensolver. 2D tensor-product grids
/// combine the per-axis 1D eigenpairs (eigenvalues add, eigenfields are outer
/// products), which keeps exactly degenerate pairs in a deterministic,
/// separable orientation.
pub fn eigenpairs(grid: &Grid, k: usize) -> Result<Vec<EigenPair>> {
    let n = grid.interior_count();
    if k < 1 || k > n {
        return Err(Error::contract(format!(
            "eigenpair count must be in 1..={n}, got {k}"
        )));
    }
    let pairs: Vec<EigenPair> = match grid.dimension {
        1 => eigen_1d_axis(grid.extents[0], grid.counts[0])
            .into_iter()
            .take(k)
            .map(|(lam, v)| EigenPair {
                value: lam,
                field: normalize_eigenfield(grid, v),
            })
            .collect(),
        _ => {
            let ex = eigen_1d_axis(grid.extents[0], grid.counts[0]);
            let ey = eigen_1d_axis(grid.extents[1], grid.counts[1]);
            let kx = k.min(grid.counts[0]);
            let ky = k.min(grid.counts[1]);
            let mut combos: Vec<(f64, usize, usize)> = Vec::with_capacity(kx * ky);
            for (i, (lx, _)) in ex.iter().enumerate().take(kx) {
                for (j, (ly, _)) in ey.iter().enumerate().take(ky) {
                    combos.push((lx + ly, i, j));
                }
            }
            combos.sort_by(|a, b| a.0.total_cmp(&b.0));
            let nx = grid.counts[0];
            let ny = grid.counts[1];
            combos
                .into_iter()
                .take(k)
                .map(|(lam, i, j)| {
                    let vx = &ex[i].1;
                    let vy = &ey[j].1;
                    let mut v = Vec::with_capacity(nx * ny);
                    for iy in 0..ny {
                        for ix in 0..nx {
                            v.push(vx[ix] * vy[iy]);
                        }
                    }
                    EigenPair {
                        value: lam,
                        field: normalize_eigenfield(grid, v),
                    }
                })
                .collect()
        }
    };
    // Residual contract: (-Δ_h) φ = λ φ to 1e-10 relative.
    for p in &pairs {
        let r = apply_neg_laplacian(grid, &p.field)?;
        let mut num = 0.0;
        let mut den = 0.0;
        for (ri, fi) in r.iter().zip(p.field.iter()) {
            num += (ri - p.value * fi).powi(2);
            den += (p.value * fi).powi(2);
        }
        if num.sqrt() > 1e-10 * den.sqrt().max(1e-300) {
            return Err(Error::numerical(format!(
                "eigenpair residual {:.3e} exceeds 1e-10 for eigenvalue {}",
                num.sqrt() / den.sqrt(),
                p.value
            )));
        }
    }
    Ok(pairs)
}

/// CSV serialization: coordinate columns then the value column.
pub fn field_to_csv(grid: &Grid, u: &Field) -> Result<String> {
    grid.check_conforms(u)?;
    let mut s = String::new();
    if grid.dimension == 1 {
        s.push_str("x,value\n");
        for (i, v) in u.iter().enumerate() {
            let c = grid.coord(i);
            writeln!(s, "{},{}", c[0], v).unwrap();
        }
    } else {
        s.push_str("x,y,value\n");
        for (i, v) in u.iter().enumerate() {
            let c = grid.coord(i);
            writeln!(s, "{},{},{}", c[0], c[1], v).unwrap();
        }
    }
    Ok(s)
}

/// JSON serialization of a field as a bare array of nodal values.
pub fn field_to_json(u: &Field) -> String {
    serde_json::to_string(u.as_slice()).expect("field serialization")
}

/// JSON header describing the grid.
pub fn grid_to_json(grid: &Grid) -> String {
    serde_json::json!({
        "dimension": grid.dimension,
        "extents": grid.extents,
        "counts": grid.counts,
    })
    .to_string()
}
