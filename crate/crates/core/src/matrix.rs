//! Dense complex linear algebra shared by every rate expression.
//!
//! Everything here works on small Hermitian positive semidefinite matrices
//! (covariances of a handful of antennas), so the routines favour robustness
//! over asymptotic speed: Cholesky for every `det(I + S)`, an explicit
//! zero-pivot-tolerant factorization for singular covariances, and symmetric
//! eigendecompositions only where water-filling needs the eigenmodes.
//!
//! Logarithms are natural inside the crate and converted to bits once, at the
//! public surface.

use nalgebra::{DMatrix, SymmetricEigen};
use num_complex::Complex;

use crate::error::{Error, Result};

pub type C64 = Complex<f64>;

/// Dense complex matrix, stored by nalgebra in column-major order.
pub type CMatrix = DMatrix<C64>;

/// Componentwise tolerance for accepting a matrix as Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;
/// Minimum eigenvalue still accepted as positive semidefinite.
pub const PSD_TOL: f64 = 1e-10;
/// Ridge added to a singular conditioning block before giving up.
pub const SCHUR_RIDGE: f64 = 1e-10;

pub(crate) const LN_2: f64 = std::f64::consts::LN_2;

#[inline]
pub(crate) fn nats_to_bits(x: f64) -> f64 {
    x / LN_2
}

#[inline]
pub(crate) fn c(re: f64) -> C64 {
    C64::new(re, 0.0)
}

/// A Hermitian positive semidefinite matrix.
///
/// Construction symmetrizes the input with its conjugate transpose, so the
/// stored matrix is exactly Hermitian even when the source carried rounding
/// noise.
#[derive(Debug, Clone, PartialEq)]
pub struct HermitianPsd {
    m: CMatrix,
}

impl HermitianPsd {
    /// Validates `m` and wraps it.
    ///
    /// Tolerances scale with the largest entry magnitude so that large
    /// covariances are not rejected for rounding noise.
    pub fn new(m: CMatrix) -> Result<Self> {
        if !m.is_square() {
            return Err(Error::Invariant(format!(
                "covariance must be square, got {}x{}",
                m.nrows(),
                m.ncols()
            )));
        }
        if m.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::Invariant("covariance has non-finite entries".into()));
        }
        let scale = m.iter().map(|z| z.norm()).fold(1.0, f64::max);
        let n = m.nrows();
        for i in 0..n {
            for j in 0..=i {
                let d = (m[(i, j)] - m[(j, i)].conj()).norm();
                if d > HERMITIAN_TOL * scale {
                    return Err(Error::Invariant(format!(
                        "matrix is not Hermitian: entry ({i},{j}) differs from its mirror by {d:e}"
                    )));
                }
            }
        }
        let out = Self::from_hermitian(m);
        let min_eig = out.min_eigenvalue();
        if min_eig < -PSD_TOL * scale {
            return Err(Error::Invariant(format!(
                "matrix is not positive semidefinite: minimum eigenvalue {min_eig:e}"
            )));
        }
        Ok(out)
    }

    /// `F F†`, which is PSD by construction.
    pub fn from_factor(factor: &CMatrix) -> Self {
        Self::from_hermitian(factor * factor.adjoint())
    }

    /// Symmetrizes without checking definiteness. Callers guarantee PSD.
    pub(crate) fn from_hermitian(m: CMatrix) -> Self {
        let adj = m.adjoint();
        Self {
            m: (m + adj).scale(0.5),
        }
    }

    pub fn zeros(n: usize) -> Self {
        Self {
            m: CMatrix::zeros(n, n),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self {
            m: CMatrix::identity(n, n),
        }
    }

    pub fn from_real_diagonal(diag: &[f64]) -> Result<Self> {
        if let Some(d) = diag.iter().find(|d| !(**d >= 0.0)) {
            return Err(Error::Invariant(format!("negative diagonal entry {d}")));
        }
        let n = diag.len();
        Ok(Self {
            m: CMatrix::from_fn(n, n, |i, j| if i == j { c(diag[i]) } else { c(0.0) }),
        })
    }

    /// Builds from a real symmetric matrix given row by row.
    pub fn from_real_rows(rows: &[&[f64]]) -> Result<Self> {
        let n = rows.len();
        if rows.iter().any(|r| r.len() != n) {
            return Err(Error::Invariant("rows must form a square matrix".into()));
        }
        Self::new(CMatrix::from_fn(n, n, |i, j| c(rows[i][j])))
    }

    pub fn dim(&self) -> usize {
        self.m.nrows()
    }

    pub fn as_matrix(&self) -> &CMatrix {
        &self.m
    }

    pub fn into_matrix(self) -> CMatrix {
        self.m
    }

    pub fn trace(&self) -> f64 {
        self.m.diagonal().iter().map(|z| z.re).sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self {
            m: self.m.scale(factor),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.m.iter().all(|z| *z == c(0.0))
    }

    /// Eigenvalues in ascending order.
    pub fn eigenvalues(&self) -> Vec<f64> {
        if self.dim() == 0 {
            return Vec::new();
        }
        let mut ev: Vec<f64> = self.m.clone().symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        ev
    }

    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues().first().copied().unwrap_or(0.0)
    }
}

/// `log₂ det(I + m)` via the Cholesky factor of `I + m`.
pub fn log_det_plus_identity(m: &HermitianPsd) -> Result<f64> {
    ln_det_plus_identity(m.as_matrix()).map(nats_to_bits)
}

/// `ln det(I + m)` for a Hermitian `m`. Fails if `I + m` is not positive definite.
pub(crate) fn ln_det_plus_identity(m: &CMatrix) -> Result<f64> {
    if m.nrows() == 1 {
        let v = 1.0 + m[(0, 0)].re;
        if !(v > 0.0) {
            return Err(Error::Domain(format!("I + m is not positive definite ({v:e})")));
        }
        return Ok(v.ln());
    }
    let mut shifted = m.clone();
    for i in 0..shifted.nrows() {
        shifted[(i, i)] += c(1.0);
    }
    ln_det_pd(shifted)
}

/// `ln det(m)` for Hermitian positive definite `m`.
pub(crate) fn ln_det_pd(m: CMatrix) -> Result<f64> {
    let n = m.nrows();
    if n == 0 {
        return Ok(0.0);
    }
    if n == 1 {
        let v = m[(0, 0)].re;
        if !(v > 0.0) {
            return Err(Error::Domain(format!("matrix is not positive definite ({v:e})")));
        }
        return Ok(v.ln());
    }
    let l = cholesky(&m).ok_or_else(|| Error::Domain("matrix is not positive definite".into()))?;
    let mut acc = 0.0;
    for i in 0..n {
        acc += l[(i, i)].re.ln();
    }
    Ok(2.0 * acc)
}

/// Lower Cholesky factor of a Hermitian matrix, reading only its lower
/// triangle. `None` unless every pivot is real and strictly positive.
pub(crate) fn cholesky(m: &CMatrix) -> Option<CMatrix> {
    let n = m.nrows();
    let mut l = CMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m[(j, j)].re;
        for k in 0..j {
            d -= l[(j, k)].norm_sqr();
        }
        if !(d > 0.0) {
            return None;
        }
        let djj = d.sqrt();
        l[(j, j)] = c(djj);
        for i in j + 1..n {
            let mut s = m[(i, j)];
            for k in 0..j {
                s -= l[(i, k)] * l[(j, k)].conj();
            }
            l[(i, j)] = s / djj;
        }
    }
    Some(l)
}

/// Solves `L X = B` for lower-triangular `L` with a nonzero diagonal.
pub(crate) fn solve_lower(l: &CMatrix, b: &CMatrix) -> CMatrix {
    let n = l.nrows();
    let mut x = b.clone();
    for col in 0..x.ncols() {
        for i in 0..n {
            let mut s = x[(i, col)];
            for k in 0..i {
                s -= l[(i, k)] * x[(k, col)];
            }
            x[(i, col)] = s / l[(i, i)];
        }
    }
    x
}

/// `H S H†`, symmetrized.
pub(crate) fn congruence(h: &CMatrix, s: &CMatrix) -> CMatrix {
    let out = h * s * h.adjoint();
    let adj = out.adjoint();
    (out + adj).scale(0.5)
}

/// Conditional covariance from a partitioned joint covariance.
#[derive(Debug, Clone)]
pub struct ConditionalCov {
    pub cov: HermitianPsd,
    /// Set when the conditioning block was singular and a ridge was added.
    pub ridged: bool,
}

/// Schur complement `Σ_u − Γ Σ_x⁻¹ Γ†` of the lower-right block of
/// `joint = [Σ_u Γ; Γ† Σ_x]`, where `Σ_u` is the leading `split × split` block.
///
/// A singular `Σ_x` gets a ridge of [`SCHUR_RIDGE`]; if it is still singular
/// the call fails with a domain error.
pub fn schur_conditional_cov(joint: &HermitianPsd, split: usize) -> Result<ConditionalCov> {
    let n = joint.dim();
    if split > n {
        return Err(Error::Argument(format!(
            "split {split} exceeds joint dimension {n}"
        )));
    }
    let k = n - split;
    let a = joint.as_matrix();
    let sigma_u = a.view((0, 0), (split, split)).into_owned();
    if k == 0 || split == 0 {
        return Ok(ConditionalCov {
            cov: HermitianPsd::from_hermitian(sigma_u),
            ridged: false,
        });
    }
    let gamma = a.view((0, split), (split, k)).into_owned();
    let sigma_x = a.view((split, split), (k, k)).into_owned();

    let (l, ridged) = match cholesky(&sigma_x) {
        Some(l) => (l, false),
        None => {
            let mut r = sigma_x;
            for i in 0..k {
                r[(i, i)] += c(SCHUR_RIDGE);
            }
            let l = cholesky(&r).ok_or_else(|| {
                Error::Domain("conditioning block is singular even after ridge".into())
            })?;
            (l, true)
        }
    };
    // Γ Σ_x⁻¹ Γ† = W† W with W = L⁻¹ Γ†.
    let w = solve_lower(&l, &gamma.adjoint());
    let cov = sigma_u - w.adjoint() * w;
    Ok(ConditionalCov {
        cov: HermitianPsd::from_hermitian(cov),
        ridged,
    })
}

/// `F F†`, rescaled by `budget / tr` only when its trace exceeds `budget`.
pub fn project_psd_trace(factor: &CMatrix, budget: f64) -> Result<HermitianPsd> {
    if !(budget > 0.0) {
        return Err(Error::Argument(format!("trace budget must be positive, got {budget}")));
    }
    let s = HermitianPsd::from_factor(factor);
    let tr = s.trace();
    if tr > budget {
        Ok(s.scaled(budget / tr))
    } else {
        Ok(s)
    }
}

/// Lower-triangular `L` with `L L† = m`, tolerating singular `m`.
///
/// Pivots at or below `1e-12` times the largest diagonal entry are treated as
/// zero and their column is left empty, which is exact for PSD input.
pub fn psd_factor(m: &HermitianPsd) -> CMatrix {
    let n = m.dim();
    let mut a = m.as_matrix().clone();
    let mut l = CMatrix::zeros(n, n);
    let scale = (0..n).map(|i| a[(i, i)].re).fold(0.0, f64::max);
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE);
    for j in 0..n {
        let d = a[(j, j)].re;
        if d <= tol {
            continue;
        }
        let s = d.sqrt();
        l[(j, j)] = c(s);
        for i in j + 1..n {
            l[(i, j)] = a[(i, j)] / s;
        }
        for i in j + 1..n {
            for k in j + 1..=i {
                let upd = l[(i, j)] * l[(k, j)].conj();
                a[(i, k)] -= upd;
            }
        }
    }
    l
}

/// Water-filling solution of `max log det(I + gain·H S H†)` over `tr(S) ≤ budget`.
#[derive(Debug, Clone)]
pub struct WaterFill {
    pub cov: HermitianPsd,
    /// Optimal value in bits.
    pub bits: f64,
}

pub fn water_fill(h: &CMatrix, gain: f64, budget: f64) -> Result<WaterFill> {
    if gain < 0.0 || budget < 0.0 {
        return Err(Error::Argument("gain and budget must be nonnegative".into()));
    }
    let n = h.ncols();
    let gram = HermitianPsd::from_hermitian(h.adjoint() * h);
    let eig = SymmetricEigen::new(gram.into_matrix());
    let lambdas: Vec<f64> = eig.eigenvalues.iter().map(|l| (gain * l).max(0.0)).collect();

    let mut order: Vec<usize> = (0..n).filter(|&i| lambdas[i] > 1e-14).collect();
    order.sort_by(|&a, &b| lambdas[b].total_cmp(&lambdas[a]));

    // Water level: largest active set whose level keeps every mode above its floor.
    let mut powers = vec![0.0; n];
    let mut active = order.len();
    while active > 0 {
        let inv_sum: f64 = order[..active].iter().map(|&i| 1.0 / lambdas[i]).sum();
        let level = (budget + inv_sum) / active as f64;
        let weakest = order[active - 1];
        if level - 1.0 / lambdas[weakest] > 0.0 {
            for &i in &order[..active] {
                powers[i] = level - 1.0 / lambdas[i];
            }
            break;
        }
        active -= 1;
    }

    let v = &eig.eigenvectors;
    let mut cov = CMatrix::zeros(n, n);
    let mut nats = 0.0;
    for i in 0..n {
        if powers[i] > 0.0 {
            let col = v.column(i);
            cov += (col * col.adjoint()).scale(powers[i]);
            nats += (1.0 + lambdas[i] * powers[i]).ln();
        }
    }
    Ok(WaterFill {
        cov: HermitianPsd::from_hermitian(cov),
        bits: nats_to_bits(nats),
    })
}
