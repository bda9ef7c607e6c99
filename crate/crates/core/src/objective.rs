//! Total transmit power `f(x) = Σ_i 1/λ_i{Z}` and its gradient.
//!
//! The gradient has three implementations that share nothing but the
//! scenario:
//!
//! * [`gradient_closed_form`]: eigenvalue derivatives
//!   `∂λ_i/∂x_n = [V⁻¹]_{i,:} (∂Z/∂x_n) [V]_{:,i}` chained through `-1/λ_i²`;
//! * [`gradient_finite_difference`]: perturb one coordinate at a time and
//!   re-evaluate `f`;
//! * [`gradient_trace_form`]: `∂f/∂x_n = -tr{Z⁻² ∂Z/∂x_n}` with `Z⁻¹` from an LU
//!   inverse and `∂Z/∂x_n` differentiated through `H(x)` instead of the
//!   entrywise closed form.

use log::warn;
use nalgebra::DVector;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::channel::{
    channel_matrix, eigendecompose_gain, gain_matrix, gain_matrix_from_channel, gain_matrix_partials, zf_combiner,
    CMatrix, GainEigensystem,
};
use crate::error::{Error, Result};
use crate::scenario::Scenario;

/// `Z` is singular when `λ_min ≤ SINGULAR_TOL · λ_max`.
pub const SINGULAR_TOL: f64 = 1e-12;
/// Spectrum gap (relative to `λ_max`) below which the eigenvalue derivatives are
/// considered ill-defined.
pub const DEGENERATE_GAP_TOL: f64 = 1e-8;
/// Largest imaginary residue of an eigenvalue derivative, relative to the
/// magnitude bound of the product it comes from.
pub const IMAG_RESIDUE_TOL: f64 = 1e-9;
pub const DEFAULT_FD_STEP: f64 = 1e-6;

/// What to do when eigenvalues of `Z` (nearly) coincide.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DegeneratePolicy {
    /// Log a warning and fall back to the trace identity.
    #[default]
    TraceFallback,
    Abort,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Difference {
    /// `[f(x + εe_n) - f(x)] / ε`
    Forward,
    /// `[f(x + εe_n) - f(x - εe_n)] / 2ε`
    #[default]
    Central,
}

/// Which computation produced a [`Gradient`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum GradientRoute {
    ClosedForm,
    /// Closed form requested but the spectrum was degenerate.
    TraceFallback,
    TraceForm,
    FiniteDifference,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Gradient {
    values: Vec<f64>,
    route: GradientRoute,
}

impl Gradient {
    pub fn new(values: Vec<f64>, route: GradientRoute) -> Self {
        Self { values, route }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.values
    }

    pub fn route(&self) -> GradientRoute {
        self.route
    }

    pub fn norm_squared(&self) -> f64 {
        self.values.iter().map(|g| g * g).sum()
    }

    pub fn norm(&self) -> f64 {
        self.norm_squared().sqrt()
    }
}

/// Objective value and gradient at one point, sharing a single eigendecomposition.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub objective: f64,
    pub gradient: Gradient,
    pub eigensystem: GainEigensystem,
}

fn check_nonsingular(eigenvalues: &[f64]) -> Result<()> {
    let min = eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if min > SINGULAR_TOL * max && min.is_finite() {
        Ok(())
    } else {
        Err(Error::SingularGain { min, max })
    }
}

/// Eigendecomposition of `Z(x)`, rejecting singular gain matrices.
pub fn gain_eigensystem(x: &[f64], scenario: &Scenario) -> Result<GainEigensystem> {
    let eig = eigendecompose_gain(&gain_matrix(x, scenario), &scenario.omega_inv_sqrt())?;
    check_nonsingular(&eig.eigenvalues)?;
    Ok(eig)
}

/// `f(x) = Σ_i 1/λ_i{Z}`, the minimum total power meeting every rate target.
pub fn total_power_objective(x: &[f64], scenario: &Scenario) -> Result<f64> {
    let eig = gain_eigensystem(x, scenario)?;
    Ok(eig.eigenvalues.iter().map(|l| 1.0 / l).sum())
}

/// The four equal expressions for the minimum total power.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveFaces {
    /// `Σ_i ‖[H(HᴴH)⁻¹]_{:,i}‖² ε_i σ²`
    pub column_norm_sum: f64,
    /// `‖H(HᴴH)⁻¹ Ω^{1/2}‖_F²`
    pub frobenius: f64,
    /// `tr{(Ω⁻¹HᴴH)⁻¹}`
    pub trace_inverse: f64,
    /// `Σ_i 1/λ_i{Z}`
    pub eigen_reciprocal_sum: f64,
}

impl ObjectiveFaces {
    pub fn values(&self) -> [f64; 4] {
        [self.column_norm_sum, self.frobenius, self.trace_inverse, self.eigen_reciprocal_sum]
    }

    /// `(max - min) / min` over the four faces.
    pub fn relative_spread(&self) -> f64 {
        let v = self.values();
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        (hi - lo) / lo
    }
}

pub fn objective_faces(x: &[f64], scenario: &Scenario) -> Result<ObjectiveFaces> {
    let h = channel_matrix(x, scenario);
    let w = zf_combiner(&h)?;
    let omega = scenario.omega();

    let column_norm_sum = w.column_iter().zip(&omega).map(|(c, o)| c.norm_squared() * o).sum();

    let sqrt_omega = CMatrix::from_diagonal(&DVector::from_iterator(
        omega.len(),
        omega.iter().map(|o| Complex64::new(o.sqrt(), 0.0)),
    ));
    let frobenius = (&w * sqrt_omega).norm_squared();

    let z = gain_matrix_from_channel(&h, scenario);
    let trace_inverse = z.lu().try_inverse().ok_or(Error::SingularGain { min: 0.0, max: f64::NAN })?.trace().re;

    let eigen_reciprocal_sum = total_power_objective(x, scenario)?;
    Ok(ObjectiveFaces { column_norm_sum, frobenius, trace_inverse, eigen_reciprocal_sum })
}

/// Gradient from an eigensystem of `Z` and the partials `∂Z/∂x_n`.
///
/// `g_n = Σ_i -[V⁻¹]_{i,:} (∂Z/∂x_n) [V]_{:,i} / λ_i²`. Each eigenvalue
/// derivative must be real up to [`IMAG_RESIDUE_TOL`]; the check fails loudly
/// instead of dropping a genuine imaginary part.
pub fn gradient_from_eigensystem(eig: &GainEigensystem, partials: &[CMatrix]) -> Result<Vec<f64>> {
    let m = eig.eigenvalues.len();
    partials
        .iter()
        .map(|dz| {
            let mut g = 0.0;
            for i in 0..m {
                let row = eig.v_inv.row(i);
                let col = eig.v.column(i);
                let dlambda = (row * dz * col)[(0, 0)];
                let bound = row.norm() * dz.norm() * col.norm();
                if dlambda.im.abs() > IMAG_RESIDUE_TOL * bound.max(1.0) {
                    return Err(Error::ImaginaryResidue { residue: dlambda.im.abs() });
                }
                let lambda = eig.eigenvalues[i];
                g -= dlambda.re / (lambda * lambda);
            }
            Ok(g)
        })
        .collect()
}

/// Objective, gradient and eigensystem at `x` with the closed-form gradient.
pub fn evaluate(x: &[f64], scenario: &Scenario, policy: DegeneratePolicy) -> Result<Evaluation> {
    let eig = gain_eigensystem(x, scenario)?;
    let objective = eig.eigenvalues.iter().map(|l| 1.0 / l).sum();
    let gap = eig.min_gap();
    let gradient = if gap < DEGENERATE_GAP_TOL * eig.max_eigenvalue() {
        match policy {
            DegeneratePolicy::Abort => return Err(Error::DegenerateSpectrum { gap }),
            DegeneratePolicy::TraceFallback => {
                warn!("eigenvalue gap {gap:e} below tolerance; using the trace identity for the gradient");
                let values = gradient_trace_form(x, scenario)?.into_inner();
                Gradient::new(values, GradientRoute::TraceFallback)
            }
        }
    } else {
        let values = gradient_from_eigensystem(&eig, &gain_matrix_partials(x, scenario))?;
        Gradient::new(values, GradientRoute::ClosedForm)
    };
    Ok(Evaluation { objective, gradient, eigensystem: eig })
}

/// Closed-form gradient, falling back to the trace identity on a degenerate spectrum.
pub fn gradient_closed_form(x: &[f64], scenario: &Scenario) -> Result<Gradient> {
    gradient_closed_form_with(x, scenario, DegeneratePolicy::TraceFallback)
}

pub fn gradient_closed_form_with(x: &[f64], scenario: &Scenario, policy: DegeneratePolicy) -> Result<Gradient> {
    evaluate(x, scenario, policy).map(|e| e.gradient)
}

/// Gradient by coordinate-wise finite differences of [`total_power_objective`].
pub fn gradient_finite_difference(
    x: &[f64],
    scenario: &Scenario,
    epsilon: f64,
    scheme: Difference,
) -> Result<Gradient> {
    if !(epsilon > 0.0) {
        return Err(Error::Dimension(format!("finite-difference step must be positive, got {epsilon}")));
    }
    let base = match scheme {
        Difference::Forward => Some(total_power_objective(x, scenario)?),
        Difference::Central => None,
    };
    let mut probe = x.to_vec();
    let mut values = Vec::with_capacity(x.len());
    for n in 0..x.len() {
        probe[n] = x[n] + epsilon;
        let plus = total_power_objective(&probe, scenario)?;
        let g = match base {
            Some(f0) => (plus - f0) / epsilon,
            None => {
                probe[n] = x[n] - epsilon;
                let minus = total_power_objective(&probe, scenario)?;
                (plus - minus) / (2.0 * epsilon)
            }
        };
        probe[n] = x[n];
        values.push(g);
    }
    Ok(Gradient::new(values, GradientRoute::FiniteDifference))
}

/// `g_n = -tr{Z⁻² ∂Z/∂x_n}`; well defined for repeated eigenvalues.
pub fn gradient_trace_form(x: &[f64], scenario: &Scenario) -> Result<Gradient> {
    let h = channel_matrix(x, scenario);
    let z = gain_matrix_from_channel(&h, scenario);

    let guard = eigendecompose_gain(&z, &scenario.omega_inv_sqrt())?;
    check_nonsingular(&guard.eigenvalues)?;

    let z_inv =
        z.lu().try_inverse().ok_or(Error::SingularGain { min: guard.min_eigenvalue(), max: guard.max_eigenvalue() })?;
    let z_inv_sq = &z_inv * &z_inv;

    let h = h.as_matrix();
    let k = scenario.wavenumber();
    let s = scenario.sines();
    let omega = scenario.omega();
    let m = s.len();

    let values = (0..x.len())
        .map(|n| {
            // Only row n of H depends on x_n: ∂H_{n,i} = j k sin θ_i H_{n,i}.
            let dz = CMatrix::from_fn(m, m, |i, j| {
                let pair = h[(n, i)].conj() * h[(n, j)];
                pair * Complex64::new(0.0, k * (s[j] - s[i])) / omega[i]
            });
            let t = (&z_inv_sq * dz).trace();
            if t.im.abs() > IMAG_RESIDUE_TOL * t.norm().max(1.0) {
                return Err(Error::ImaginaryResidue { residue: t.im.abs() });
            }
            Ok(-t.re)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(Gradient::new(values, GradientRoute::TraceForm))
}
