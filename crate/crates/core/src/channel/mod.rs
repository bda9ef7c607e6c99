//! Line-of-sight channel model, zero-forcing reception and the gain matrix
//! `Z = Ω⁻¹HᴴH` whose eigenvalues drive the power objective.

mod eigen;
mod simulate;

use std::f64::consts::FRAC_PI_2;

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub use eigen::{eigendecompose_gain, GainEigensystem, HERMITIAN_TOL};
pub use simulate::{simulate_uplink_sinr, UplinkSimulation};

use crate::error::{Error, Result};
use crate::scenario::Scenario;

pub type CMatrix = DMatrix<Complex64>;

/// HᴴH is declared rank deficient when its smallest eigenvalue falls below this
/// fraction of the largest.
pub const RANK_TOL: f64 = 1e-10;

/// `H(x)`: N×M, column `i` is the steering vector of user `i`.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelMatrix(CMatrix);

impl ChannelMatrix {
    pub fn as_matrix(&self) -> &CMatrix {
        &self.0
    }

    pub fn into_matrix(self) -> CMatrix {
        self.0
    }

    pub fn num_antennas(&self) -> usize {
        self.0.nrows()
    }

    pub fn num_users(&self) -> usize {
        self.0.ncols()
    }
}

/// Per-user transmit powers (linear units).
#[derive(Debug, Clone, PartialEq)]
pub struct PowerAllocation(Vec<f64>);

impl PowerAllocation {
    pub fn new(p: Vec<f64>) -> Self {
        Self(p)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn total(&self) -> f64 {
        self.0.iter().sum()
    }

    pub fn scaled(&self, factor: f64) -> Self {
        Self(self.0.iter().map(|p| p * factor).collect())
    }
}

/// Entry `n` is `exp(j (2π/λ) x_n sin θ)`.
pub fn steering_vector(x: &[f64], theta: f64, wavelength: f64) -> DVector<Complex64> {
    let k = 2.0 * std::f64::consts::PI / wavelength * theta.sin();
    DVector::from_iterator(x.len(), x.iter().map(|&xn| Complex64::cis(k * xn)))
}

pub fn channel_matrix(x: &[f64], scenario: &Scenario) -> ChannelMatrix {
    let lambda = scenario.config().wavelength;
    let columns: Vec<_> = scenario.config().aoas.iter().map(|&theta| steering_vector(x, theta, lambda)).collect();
    ChannelMatrix(CMatrix::from_columns(&columns))
}

/// Spectrum extremes of a Hermitian PSD matrix.
fn hermitian_extremes(g: &CMatrix) -> (f64, f64) {
    let eig = g.clone().symmetric_eigen();
    let min = eig.eigenvalues.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eig.eigenvalues.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    (min, max)
}

/// `W = H (HᴴH)⁻¹`, so that `WᴴH = I`.
pub fn zf_combiner(h: &ChannelMatrix) -> Result<CMatrix> {
    let h = h.as_matrix();
    let gram = h.adjoint() * h;
    let (min, max) = hermitian_extremes(&gram);
    if !(min > RANK_TOL * max) {
        return Err(Error::RankDeficient { condition_number: max / min.max(0.0) });
    }
    let inv = gram.cholesky().ok_or(Error::RankDeficient { condition_number: max / min })?.inverse();
    Ok(h * inv)
}

/// General linear-receiver SINR for combiner `w`, with interference from every
/// other user and noise `‖w_i‖²σ²`.
pub fn sinr_general(w: &CMatrix, h: &ChannelMatrix, p: &[f64], sigma2: f64) -> Vec<f64> {
    let h = h.as_matrix();
    let m = h.ncols();
    // Entry (i, k) is w_iᴴ h_k.
    let cross = w.adjoint() * h;
    (0..m)
        .map(|i| {
            let signal = p[i] * cross[(i, i)].norm_sqr();
            let interference: f64 = (0..m).filter(|&k| k != i).map(|k| p[k] * cross[(i, k)].norm_sqr()).sum();
            let noise = w.column(i).norm_squared() * sigma2;
            signal / (interference + noise)
        })
        .collect()
}

/// `‖[H(HᴴH)⁻¹]_{:,i}‖²` for every user.
pub fn zf_column_norms_sq(x: &[f64], scenario: &Scenario) -> Result<Vec<f64>> {
    let w = zf_combiner(&channel_matrix(x, scenario))?;
    Ok(w.column_iter().map(|c| c.norm_squared()).collect())
}

/// Zero-forcing SINR: `P_i / (‖[H(HᴴH)⁻¹]_{:,i}‖² σ²)`.
pub fn sinr_zf(x: &[f64], scenario: &Scenario, p: &PowerAllocation) -> Result<Vec<f64>> {
    let sigma2 = scenario.noise_power();
    Ok(zf_column_norms_sq(x, scenario)?.iter().zip(p.as_slice()).map(|(c, pi)| pi / (c * sigma2)).collect())
}

/// Smallest powers meeting every rate target with equality under ZF.
pub fn min_powers(x: &[f64], scenario: &Scenario) -> Result<PowerAllocation> {
    let sigma2 = scenario.noise_power();
    let p = zf_column_norms_sq(x, scenario)?.iter().zip(scenario.epsilons()).map(|(c, eps)| c * eps * sigma2).collect();
    Ok(PowerAllocation(p))
}

/// `Z` by direct summation: `[Z]_{ij} = (1/(ε_iσ²)) Σ_k exp(j(2π/λ) x_k (sin θ_j - sin θ_i))`.
pub fn gain_matrix(x: &[f64], scenario: &Scenario) -> CMatrix {
    let s = scenario.sines();
    let omega = scenario.omega();
    let k = scenario.wavenumber();
    let m = s.len();
    CMatrix::from_fn(m, m, |i, j| {
        let d = s[j] - s[i];
        let sum: Complex64 = x.iter().map(|&xk| Complex64::cis(k * xk * d)).sum();
        sum / omega[i]
    })
}

/// `Z` by matrix product: `Ω⁻¹ HᴴH`.
pub fn gain_matrix_from_channel(h: &ChannelMatrix, scenario: &Scenario) -> CMatrix {
    let h = h.as_matrix();
    let mut z = h.adjoint() * h;
    for (i, w) in scenario.omega().iter().enumerate() {
        z.row_mut(i).unscale_mut(*w);
    }
    z
}

/// `∂Z/∂x_n` for 0-based antenna index `n`.
///
/// `[∂Z/∂x_n]_{ij} = (1/(ε_iσ²)) (2π/λ)(sin θ_j - sin θ_i) exp(j[(2π/λ) x_n (sin θ_j - sin θ_i) + π/2])`.
pub fn gain_matrix_partial(x: &[f64], scenario: &Scenario, n: usize) -> Result<CMatrix> {
    if n >= x.len() {
        return Err(Error::IndexOutOfRange { index: n, len: x.len() });
    }
    let s = scenario.sines();
    let omega = scenario.omega();
    let k = scenario.wavenumber();
    let xn = x[n];
    Ok(CMatrix::from_fn(s.len(), s.len(), |i, j| {
        let d = s[j] - s[i];
        Complex64::from_polar(k * d / omega[i], k * xn * d + FRAC_PI_2)
    }))
}

/// `∂Z/∂x_n` for every antenna.
pub fn gain_matrix_partials(x: &[f64], scenario: &Scenario) -> Vec<CMatrix> {
    (0..x.len()).map(|n| gain_matrix_partial(x, scenario, n).expect("index in range")).collect()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use proptest::prelude::*;

    use super::*;
    use crate::scenario::{InitStrategy, ScenarioConfig};

    fn reference() -> Scenario {
        ScenarioConfig::reference().validate().unwrap()
    }

    fn single_user() -> Scenario {
        ScenarioConfig {
            num_users: 1,
            num_antennas: 4,
            wavelength: 1.0,
            aoas: vec![0.3],
            noise_power: 2.0,
            rate_targets: vec![1.5],
            span: 4.5,
            min_spacing: 0.5,
        }
        .validate()
        .unwrap()
    }

    const X0: [f64; 4] = [0.0, 1.5, 3.0, 4.5];

    fn max_abs_diff(a: &CMatrix, b: &CMatrix) -> f64 {
        (a - b).iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    #[test]
    fn steering_vector_trivial_angles() {
        let v = steering_vector(&[0.0, 0.5], 0.0, 1.0);
        assert!((v[0] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        assert!((v[1] - Complex64::new(1.0, 0.0)).norm() < 1e-15);
        let v = steering_vector(&[0.0, 0.5], PI / 2.0, 1.0);
        assert!((v[1] - Complex64::new(-1.0, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn steering_vector_matches_scalar_oracle() {
        let theta = PI / 16.0;
        let v = steering_vector(&X0, theta, 1.0);
        for (n, &xn) in X0.iter().enumerate() {
            let phase = 2.0 * PI * xn * theta.sin();
            let expect = Complex64::new(phase.cos(), phase.sin());
            assert!((v[n] - expect).norm() < 1e-14);
        }
    }

    #[test]
    fn channel_columns_have_norm_sqrt_n() {
        let s = reference();
        let h = channel_matrix(&X0, &s);
        assert_eq!(h.as_matrix().shape(), (4, 3));
        for c in h.as_matrix().column_iter() {
            assert!((c.norm() - 2.0).abs() < 1e-14);
        }
        for entry in h.as_matrix().iter() {
            assert!((entry.norm() - 1.0).abs() < 1e-15);
        }
        let single = single_user();
        let h1 = channel_matrix(&X0, &single);
        assert_eq!(h1.as_matrix().column(0).into_owned(), steering_vector(&X0, 0.3, 1.0));
    }

    #[test]
    fn single_user_combiner_is_matched_filter() {
        let s = single_user();
        let h = channel_matrix(&X0, &s);
        let w = zf_combiner(&h).unwrap();
        let expect = h.as_matrix() / Complex64::new(4.0, 0.0);
        assert!(max_abs_diff(&w, &expect) < 1e-14);

        let gamma = sinr_general(&w, &h, &[1.0], 1.0);
        assert!((gamma[0] - 4.0).abs() < 1e-12);
    }

    #[test]
    fn zf_inverts_the_channel() {
        let s = reference();
        let h = channel_matrix(&X0, &s);
        let w = zf_combiner(&h).unwrap();
        let residual = (w.adjoint() * h.as_matrix() - CMatrix::identity(3, 3)).norm();
        assert!(residual < 1e-9, "{residual}");
    }

    #[test]
    fn identical_columns_are_rank_deficient() {
        let s = reference();
        let mut h = channel_matrix(&X0, &s).into_matrix();
        let first = h.column(0).into_owned();
        h.set_column(1, &first);
        assert!(matches!(zf_combiner(&ChannelMatrix(h)), Err(Error::RankDeficient { .. })));
    }

    #[test]
    fn zero_power_gives_zero_sinr() {
        let s = reference();
        let h = channel_matrix(&X0, &s);
        let w = zf_combiner(&h).unwrap();
        assert_eq!(sinr_general(&w, &h, &[0.0; 3], 1.0), vec![0.0; 3]);
    }

    #[test]
    fn min_powers_meet_targets_with_equality() {
        let s = reference();
        let p = min_powers(&X0, &s).unwrap();
        for g in sinr_zf(&X0, &s, &p).unwrap() {
            assert!((g - 1.0).abs() < 1e-9);
        }
        let doubled = sinr_zf(&X0, &s, &p.scaled(2.0)).unwrap();
        for g in doubled {
            assert!((g - 2.0).abs() < 1e-9);
        }

        let single = single_user();
        let p1 = min_powers(&X0, &single).unwrap();
        let eps = 2f64.powf(1.5) - 1.0;
        assert!((p1.as_slice()[0] - eps * 2.0 / 4.0).abs() < 1e-14);
        let gamma = sinr_zf(&X0, &single, &p1).unwrap();
        assert!((gamma[0] - eps).abs() < 1e-12);
    }

    #[test]
    fn min_powers_scale_with_noise() {
        let s = reference();
        let mut cfg = ScenarioConfig::reference();
        cfg.noise_power = 3.5;
        let loud = cfg.validate().unwrap();
        let p = min_powers(&X0, &s).unwrap();
        let q = min_powers(&X0, &loud).unwrap();
        for (a, b) in p.as_slice().iter().zip(q.as_slice()) {
            assert!((b - 3.5 * a).abs() < 1e-12 * b);
        }
    }

    #[test]
    fn gain_matrix_diagonal_and_single_user() {
        let s = reference();
        let z = gain_matrix(&X0, &s);
        for i in 0..3 {
            assert!((z[(i, i)] - Complex64::new(4.0, 0.0)).norm() < 1e-14);
        }
        let single = single_user();
        let eps = 2f64.powf(1.5) - 1.0;
        for x in [X0.to_vec(), vec![0.1, 1.3, 2.9, 4.4]] {
            let z1 = gain_matrix(&x, &single);
            assert!((z1[(0, 0)].re - 4.0 / (eps * 2.0)).abs() < 1e-14);
            assert!(z1[(0, 0)].im.abs() < 1e-15);
        }
    }

    #[test]
    fn gain_matrix_matches_summation_oracle() {
        let s = reference();
        let z = gain_matrix(&X0, &s);
        let sines: Vec<f64> = [PI / 16.0, PI / 10.0, PI / 2.0].iter().map(|t: &f64| t.sin()).collect();
        for i in 0..3 {
            for j in 0..3 {
                let (mut re, mut im) = (0.0, 0.0);
                for &xk in &X0 {
                    let phase = 2.0 * PI * xk * (sines[j] - sines[i]);
                    re += phase.cos();
                    im += phase.sin();
                }
                assert!((z[(i, j)].re - re).abs() < 1e-12);
                assert!((z[(i, j)].im - im).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn partial_diagonal_vanishes_and_index_is_checked() {
        let s = reference();
        for n in 0..4 {
            let dz = gain_matrix_partial(&X0, &s, n).unwrap();
            for i in 0..3 {
                assert_eq!(dz[(i, i)].norm(), 0.0);
            }
        }
        assert!(matches!(gain_matrix_partial(&X0, &s, 4), Err(Error::IndexOutOfRange { index: 4, len: 4 })));
        let dz1 = gain_matrix_partial(&X0, &single_user(), 2).unwrap();
        assert_eq!(dz1.shape(), (1, 1));
        assert_eq!(dz1[(0, 0)].norm(), 0.0);
    }

    fn random_feasible(s: &Scenario, seed: u64) -> Vec<f64> {
        s.initial_positions(InitStrategy::SeededRandom(seed)).into_inner()
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn two_routes_to_the_gain_matrix_agree(seed in any::<u64>()) {
            let s = reference();
            let x = random_feasible(&s, seed);
            let direct = gain_matrix(&x, &s);
            let product = gain_matrix_from_channel(&channel_matrix(&x, &s), &s);
            prop_assert!(max_abs_diff(&direct, &product) <= 1e-10);
        }

        #[test]
        fn partials_match_central_differences(seed in any::<u64>(), n in 0usize..4) {
            let s = reference();
            let x = random_feasible(&s, seed);
            let h = 1e-6;
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[n] += h;
            xm[n] -= h;
            let fd = (gain_matrix(&xp, &s) - gain_matrix(&xm, &s)) / Complex64::new(2.0 * h, 0.0);
            let dz = gain_matrix_partial(&x, &s, n).unwrap();
            for (a, b) in dz.iter().zip(fd.iter()) {
                prop_assert!((a - b).norm() <= 1e-6 * b.norm().max(1.0), "{a} vs {b}");
            }
        }

        #[test]
        fn zf_residual_and_sinr_consistency(seed in any::<u64>(), p in proptest::collection::vec(0.01f64..10.0, 3)) {
            let s = reference();
            let x = random_feasible(&s, seed);
            let h = channel_matrix(&x, &s);
            let w = zf_combiner(&h).unwrap();
            let residual = (w.adjoint() * h.as_matrix() - CMatrix::identity(3, 3)).norm();
            prop_assert!(residual <= 1e-9);

            let general = sinr_general(&w, &h, &p, s.noise_power());
            let zf = sinr_zf(&x, &s, &PowerAllocation::new(p.clone())).unwrap();
            for (a, b) in general.iter().zip(&zf) {
                prop_assert!((a - b).abs() <= 1e-9 * b.max(1.0));
            }
        }
    }
}
