use nalgebra::DMatrix;
use num_complex::Complex64;

use super::CMatrix;
use crate::error::{Error, Result};

/// Largest relative anti-Hermitian part tolerated in `Ω^{1/2} Z Ω^{-1/2}`.
pub const HERMITIAN_TOL: f64 = 1e-8;

/// `Z = V diag(λ) V⁻¹` with real, ascending eigenvalues.
///
/// `Z` itself is not Hermitian, but `S = Ω^{1/2} Z Ω^{-1/2} = Ω^{-1/2}HᴴHΩ^{-1/2}`
/// is. With `S = U Λ Uᴴ` we get `V = Ω^{-1/2} U` and `V⁻¹ = Uᴴ Ω^{1/2}`, so no
/// general eigensolver or explicit inverse is needed. The columns of `V` are not
/// unit norm; the eigenvalue-derivative formula is invariant to that scaling.
#[derive(Debug, Clone, PartialEq)]
pub struct GainEigensystem {
    pub z: CMatrix,
    pub v: CMatrix,
    pub v_inv: CMatrix,
    pub eigenvalues: Vec<f64>,
}

impl GainEigensystem {
    pub fn min_eigenvalue(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max_eigenvalue(&self) -> f64 {
        *self.eigenvalues.last().expect("non-empty spectrum")
    }

    /// Smallest gap between consecutive eigenvalues (`+∞` when M = 1).
    pub fn min_gap(&self) -> f64 {
        self.eigenvalues.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }

    /// `‖V diag(λ) V⁻¹ - Z‖_F / ‖Z‖_F`.
    pub fn reconstruction_residual(&self) -> f64 {
        let d = CMatrix::from_diagonal(&nalgebra::DVector::from_iterator(
            self.eigenvalues.len(),
            self.eigenvalues.iter().map(|&l| Complex64::new(l, 0.0)),
        ));
        (&self.v * d * &self.v_inv - &self.z).norm() / self.z.norm()
    }
}

/// Decomposes `z = Ω⁻¹HᴴH` given the diagonal of `Ω^{-1/2}`.
pub fn eigendecompose_gain(z: &CMatrix, omega_inv_sqrt: &[f64]) -> Result<GainEigensystem> {
    let m = z.nrows();
    if z.ncols() != m || omega_inv_sqrt.len() != m {
        return Err(Error::Dimension(format!(
            "gain matrix is {}x{}, Ω has {} entries",
            z.nrows(),
            z.ncols(),
            omega_inv_sqrt.len()
        )));
    }
    let w = omega_inv_sqrt;
    let s = CMatrix::from_fn(m, m, |i, j| z[(i, j)] * (w[j] / w[i]));
    let asymmetry = (&s - s.adjoint()).norm() / s.norm();
    if !(asymmetry <= HERMITIAN_TOL) {
        return Err(Error::NotHermitian { asymmetry });
    }
    let s = (&s + s.adjoint()).scale(0.5);
    let eig = s.symmetric_eigen();

    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .total_cmp(&eig.eigenvalues[b])
            .then_with(|| lead_phase(&eig.eigenvectors, a).total_cmp(&lead_phase(&eig.eigenvectors, b)))
    });

    let u = CMatrix::from_fn(m, m, |i, c| eig.eigenvectors[(i, order[c])]);
    let eigenvalues = order.iter().map(|&c| eig.eigenvalues[c]).collect();
    let v = CMatrix::from_fn(m, m, |i, c| u[(i, c)] * w[i]);
    let v_inv = CMatrix::from_fn(m, m, |r, j| u[(j, r)].conj() / w[j]);
    Ok(GainEigensystem { z: z.clone(), v, v_inv, eigenvalues })
}

/// Phase of the first non-negligible component, used to order tied eigenvalues.
fn lead_phase(vectors: &DMatrix<Complex64>, col: usize) -> f64 {
    vectors.column(col).iter().find(|c| c.norm() > 1e-8).map_or(0.0, |c| c.arg())
}
