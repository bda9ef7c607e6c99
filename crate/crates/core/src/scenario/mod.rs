//! Problem instances: users, array geometry, rate targets and the per-antenna
//! movement boxes.
//!
//! A [`ScenarioConfig`] is plain data. Running it through [`validate_scenario`]
//! produces a [`Scenario`], which additionally carries the rate thresholds
//! `ε_i = 2^{r_i} - 1` and the [`FeasibleRegions`]. Everything downstream takes a
//! `&Scenario`, so an unvalidated configuration never reaches the numerics.

mod file;

use std::f64::consts::FRAC_PI_2;
use std::ops::Deref;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

pub use file::{format_angle, parse_angle, ScenarioFile};

use crate::error::{Error, Result, ValidationIssue, ValidationReport};

/// Two sines closer than this are treated as the same direction.
pub const DUPLICATE_SINE_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScenarioConfig {
    pub num_users: usize,
    pub num_antennas: usize,
    pub wavelength: f64,
    /// Angles of arrival in radians, one per user.
    pub aoas: Vec<f64>,
    pub noise_power: f64,
    /// Minimum rates in bits/s/Hz, one per user.
    pub rate_targets: Vec<f64>,
    pub span: f64,
    pub min_spacing: f64,
}

impl ScenarioConfig {
    /// Three users at π/16, π/10 and π/2, four antennas over a 4.5λ span with
    /// half-wavelength minimum spacing, unit noise power and 1 bit/s/Hz targets.
    pub fn reference() -> Self {
        use std::f64::consts::PI;
        Self {
            num_users: 3,
            num_antennas: 4,
            wavelength: 1.0,
            aoas: vec![PI / 16.0, PI / 10.0, PI / 2.0],
            noise_power: 1.0,
            rate_targets: vec![1.0; 3],
            span: 4.5,
            min_spacing: 0.5,
        }
    }

    pub fn with_span(mut self, span: f64) -> Self {
        self.span = span;
        self
    }

    pub fn with_antennas(mut self, num_antennas: usize) -> Self {
        self.num_antennas = num_antennas;
        self
    }

    /// Sets every user's rate target to `rate`.
    pub fn with_uniform_rate(mut self, rate: f64) -> Self {
        self.rate_targets = vec![rate; self.num_users];
        self
    }

    pub fn validate(self) -> std::result::Result<Scenario, ValidationReport> {
        validate_scenario(self)
    }
}

/// `ε_i = 2^{r_i} - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEpsilons(Vec<f64>);

impl RateEpsilons {
    pub fn from_rates(rates: &[f64]) -> Self {
        Self(rates.iter().map(|r| r.exp2() - 1.0).collect())
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }
}

/// Per-antenna movement boxes `[F_i, G_i]`.
///
/// The boxes are disjoint, equally wide and separated by exactly `d_min`, so any
/// choice of one point per box respects the minimum spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct FeasibleRegions {
    lower: Vec<f64>,
    upper: Vec<f64>,
    min_spacing: f64,
}

impl FeasibleRegions {
    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }

    pub fn min_spacing(&self) -> f64 {
        self.min_spacing
    }

    /// Common box width `(L - (N-1) d_min) / N`.
    pub fn width(&self) -> f64 {
        self.upper[0] - self.lower[0]
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.len() == self.len()
            && x.iter().zip(self.lower.iter().zip(&self.upper)).all(|(&xi, (&lo, &hi))| lo <= xi && xi <= hi)
    }

    /// Nearest point of the box product: a per-coordinate clamp.
    pub fn clamp(&self, x: &[f64]) -> AntennaPositions {
        assert_eq!(x.len(), self.len(), "position vector length must match the number of boxes");
        let clamped = x
            .iter()
            .zip(self.lower.iter().zip(&self.upper))
            .map(|(&xi, (&lo, &hi))| {
                if xi < lo {
                    lo
                } else if xi > hi {
                    hi
                } else {
                    xi
                }
            })
            .collect();
        AntennaPositions(clamped)
    }
}

/// Antenna coordinates along the array axis, in the same length unit as λ.
#[derive(Debug, Clone, PartialEq)]
pub struct AntennaPositions(Vec<f64>);

impl AntennaPositions {
    pub fn new(x: Vec<f64>) -> Self {
        Self(x)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Smallest gap between neighbouring antennas (`+∞` for a single antenna).
    pub fn min_gap(&self) -> f64 {
        self.0.windows(2).map(|w| w[1] - w[0]).fold(f64::INFINITY, f64::min)
    }
}

impl Deref for AntennaPositions {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl From<Vec<f64>> for AntennaPositions {
    fn from(x: Vec<f64>) -> Self {
        Self(x)
    }
}

/// How the first iterate is placed inside the boxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum InitStrategy {
    /// Centre of every box.
    Midpoint,
    /// Equally spaced over `[0, L]`, clamped into the boxes.
    #[default]
    EndpointsUniform,
    /// Uniform in each box from a seeded stream.
    SeededRandom(u64),
}

/// A validated problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    config: ScenarioConfig,
    epsilons: RateEpsilons,
    regions: FeasibleRegions,
    sines: Vec<f64>,
}

impl Scenario {
    pub fn config(&self) -> &ScenarioConfig {
        &self.config
    }

    pub fn num_users(&self) -> usize {
        self.config.num_users
    }

    pub fn num_antennas(&self) -> usize {
        self.config.num_antennas
    }

    pub fn epsilons(&self) -> &[f64] {
        self.epsilons.as_slice()
    }

    pub fn regions(&self) -> &FeasibleRegions {
        &self.regions
    }

    /// `sin θ_i` for every user.
    pub fn sines(&self) -> &[f64] {
        &self.sines
    }

    pub fn noise_power(&self) -> f64 {
        self.config.noise_power
    }

    /// `2π / λ`.
    pub fn wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.config.wavelength
    }

    /// Diagonal of Ω: `ε_i σ²`.
    pub fn omega(&self) -> Vec<f64> {
        self.epsilons().iter().map(|e| e * self.config.noise_power).collect()
    }

    /// Diagonal of Ω^{-1/2}.
    pub fn omega_inv_sqrt(&self) -> Vec<f64> {
        self.omega().iter().map(|w| 1.0 / w.sqrt()).collect()
    }

    pub fn initial_positions(&self, strategy: InitStrategy) -> AntennaPositions {
        initial_positions(&self.regions, self.config.span, strategy)
    }
}

/// Builds the boxes `F_i = w(i-1) + (i-1) d_min`, `G_i = w i + (i-1) d_min` with
/// `w = (L - (N-1) d_min) / N` (1-based `i`).
pub fn build_feasible_regions(span: f64, num_antennas: usize, min_spacing: f64) -> Result<FeasibleRegions> {
    let infeasible = Error::InfeasibleGeometry { span, antennas: num_antennas, min_spacing };
    if num_antennas == 0 || !(min_spacing >= 0.0) || !span.is_finite() {
        return Err(infeasible);
    }
    let n = num_antennas as f64;
    let slack = span - (n - 1.0) * min_spacing;
    if !(slack > 0.0) {
        return Err(infeasible);
    }
    let width = slack / n;
    let (lower, mut upper): (Vec<f64>, Vec<f64>) = (0..num_antennas)
        .map(|k| {
            let k = k as f64;
            (width * k + k * min_spacing, width * (k + 1.0) + k * min_spacing)
        })
        .unzip();
    // The formula gives G_N = L up to rounding; pin it.
    upper[num_antennas - 1] = span;
    Ok(FeasibleRegions { lower, upper, min_spacing })
}

/// Checks every invariant of `cfg` and reports all violations at once.
pub fn validate_scenario(cfg: ScenarioConfig) -> std::result::Result<Scenario, ValidationReport> {
    let mut issues = Vec::new();
    let m = cfg.num_users;
    let n = cfg.num_antennas;

    if m == 0 {
        issues.push(ValidationIssue::Empty { field: "num_users" });
    }
    if n == 0 {
        issues.push(ValidationIssue::Empty { field: "num_antennas" });
    }
    if n < m {
        issues.push(ValidationIssue::TooFewAntennas { users: m, antennas: n });
    }
    for (field, value) in [
        ("wavelength", cfg.wavelength),
        ("noise_power", cfg.noise_power),
        ("span", cfg.span),
        ("min_spacing", cfg.min_spacing),
    ] {
        if !(value > 0.0 && value.is_finite()) {
            issues.push(ValidationIssue::NonPositive { field, value });
        }
    }
    if cfg.aoas.len() != m {
        issues.push(ValidationIssue::LengthMismatch { field: "aoas", expected: m, found: cfg.aoas.len() });
    }
    if cfg.rate_targets.len() != m {
        issues.push(ValidationIssue::LengthMismatch {
            field: "rate_targets",
            expected: m,
            found: cfg.rate_targets.len(),
        });
    }
    for &r in &cfg.rate_targets {
        if !(r > 0.0 && r.is_finite()) {
            issues.push(ValidationIssue::NonPositive { field: "rate_targets", value: r });
        }
    }
    for (user, &theta) in cfg.aoas.iter().enumerate() {
        if !(theta > -FRAC_PI_2 && theta <= FRAC_PI_2) {
            issues.push(ValidationIssue::AoaOutOfRange { user, theta });
        }
    }
    let sines: Vec<f64> = cfg.aoas.iter().map(|t| t.sin()).collect();
    for i in 0..sines.len() {
        for j in i + 1..sines.len() {
            if (sines[i] - sines[j]).abs() <= DUPLICATE_SINE_TOL {
                issues.push(ValidationIssue::DuplicateSine { first: i, second: j });
            }
        }
    }
    let regions = if n > 0 && cfg.span.is_finite() && cfg.min_spacing >= 0.0 {
        match build_feasible_regions(cfg.span, n, cfg.min_spacing) {
            Ok(r) => Some(r),
            Err(_) => {
                issues.push(ValidationIssue::InfeasibleGeometry {
                    span: cfg.span,
                    antennas: n,
                    min_spacing: cfg.min_spacing,
                });
                None
            }
        }
    } else {
        None
    };

    match regions {
        Some(regions) if issues.is_empty() => {
            let epsilons = RateEpsilons::from_rates(&cfg.rate_targets);
            Ok(Scenario { config: cfg, epsilons, regions, sines })
        }
        _ => Err(ValidationReport { issues }),
    }
}

/// First iterate for the optimizer. `span` is only used by
/// [`InitStrategy::EndpointsUniform`].
pub fn initial_positions(regions: &FeasibleRegions, span: f64, strategy: InitStrategy) -> AntennaPositions {
    let n = regions.len();
    match strategy {
        InitStrategy::Midpoint => {
            regions.lower().iter().zip(regions.upper()).map(|(lo, hi)| 0.5 * (lo + hi)).collect::<Vec<_>>().into()
        }
        InitStrategy::EndpointsUniform => {
            let raw: Vec<f64> =
                if n == 1 { vec![0.0] } else { (0..n).map(|i| span * i as f64 / (n - 1) as f64).collect() };
            regions.clamp(&raw)
        }
        InitStrategy::SeededRandom(seed) => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            sample_in_boxes(regions, &mut rng)
        }
    }
}

/// One independent uniform draw per box: `x_i = F_i + U(0,1) (G_i - F_i)`.
pub fn sample_in_boxes<R: Rng + ?Sized>(regions: &FeasibleRegions, rng: &mut R) -> AntennaPositions {
    regions
        .lower()
        .iter()
        .zip(regions.upper())
        .map(|(&lo, &hi)| lo + rng.random::<f64>() * (hi - lo))
        .collect::<Vec<_>>()
        .into()
}

#[cfg(test)]
mod tests {
    use std::f64::consts::PI;

    use proptest::prelude::*;

    use super::*;

    fn assert_slice_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() <= tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn regions_for_reference_geometry() {
        let r = build_feasible_regions(4.5, 4, 0.5).unwrap();
        assert_slice_close(r.lower(), &[0.0, 1.25, 2.5, 3.75], 1e-15);
        assert_slice_close(r.upper(), &[0.75, 2.0, 3.25, 4.5], 1e-15);
    }

    #[test]
    fn single_antenna_spans_everything() {
        let r = build_feasible_regions(1.0, 1, 0.5).unwrap();
        assert_eq!(r.lower(), &[0.0]);
        assert_eq!(r.upper(), &[1.0]);
    }

    #[test]
    fn too_short_span_is_rejected() {
        assert!(matches!(build_feasible_regions(1.0, 3, 0.5), Err(Error::InfeasibleGeometry { .. })));
        // boundary case L == (N-1) d_min
        assert!(build_feasible_regions(1.0, 3, 0.5).is_err());
        assert!(build_feasible_regions(0.99, 3, 0.5).is_err());
    }

    #[test]
    fn reference_scenario_validates() {
        let s = ScenarioConfig::reference().validate().unwrap();
        assert_eq!(s.epsilons(), &[1.0, 1.0, 1.0]);
        assert_eq!(s.regions().len(), 4);
    }

    #[test]
    fn duplicate_sines_are_reported() {
        let mut cfg = ScenarioConfig::reference();
        cfg.aoas = vec![PI / 6.0, PI / 6.0, PI / 2.0];
        let report = cfg.validate().unwrap_err();
        assert!(report.to_string().contains("duplicate sin θ"), "{report}");

        // π - π/6 has the same sine but lies outside the admissible range.
        let mut cfg = ScenarioConfig::reference();
        cfg.aoas = vec![PI / 6.0, PI - PI / 6.0, PI / 2.0];
        let report = cfg.validate().unwrap_err();
        assert!(report.issues.iter().any(|i| matches!(i, ValidationIssue::AoaOutOfRange { user: 1, .. })));
        assert!(report.issues.iter().any(|i| matches!(i, ValidationIssue::DuplicateSine { .. })));
    }

    #[test]
    fn too_few_antennas_is_reported() {
        let cfg = ScenarioConfig::reference().with_antennas(2);
        let report = cfg.validate().unwrap_err();
        assert!(report.to_string().contains("N < M"));
    }

    #[test]
    fn all_violations_are_aggregated() {
        let cfg = ScenarioConfig {
            num_users: 2,
            num_antennas: 3,
            wavelength: 1.0,
            aoas: vec![0.1, 0.1],
            noise_power: -1.0,
            rate_targets: vec![1.0, 0.0],
            span: 0.5,
            min_spacing: 0.5,
        };
        let report = cfg.validate().unwrap_err();
        assert_eq!(report.issues.len(), 4, "{report}");
    }

    #[test]
    fn initial_positions_strategies() {
        let s = ScenarioConfig::reference().validate().unwrap();
        assert_slice_close(&s.initial_positions(InitStrategy::EndpointsUniform), &[0.0, 1.5, 3.0, 4.5], 1e-15);
        assert_slice_close(&s.initial_positions(InitStrategy::Midpoint), &[0.375, 1.625, 2.875, 4.125], 1e-15);

        let r = build_feasible_regions(1.0, 1, 0.5).unwrap();
        assert_eq!(initial_positions(&r, 1.0, InitStrategy::Midpoint).as_slice(), &[0.5]);

        let a = s.initial_positions(InitStrategy::SeededRandom(9));
        let b = s.initial_positions(InitStrategy::SeededRandom(9));
        assert_eq!(a, b);
        assert!(s.regions().contains(&a));
    }

    #[test]
    fn endpoints_uniform_always_lands_in_the_boxes() {
        // x_k = k L/(N-1) = k (w + d_min) + k w/(N-1), and k w/(N-1) <= w.
        for (span, n, d_min) in [(2.0, 3, 0.8), (3.1, 4, 1.0), (10.0, 7, 0.5), (1.0, 2, 0.99)] {
            let r = build_feasible_regions(span, n, d_min).unwrap();
            let x = initial_positions(&r, span, InitStrategy::EndpointsUniform);
            assert!(r.contains(&x), "{x:?}");
            assert_eq!(x[0], 0.0);
            assert_eq!(x[n - 1], span);
        }
    }

    proptest! {
        #[test]
        fn any_box_sample_respects_min_spacing(
            n in 1usize..10,
            d_min in 0.05f64..2.0,
            extra in 0.01f64..10.0,
            seed in any::<u64>(),
        ) {
            let span = (n as f64 - 1.0) * d_min + extra;
            let r = build_feasible_regions(span, n, d_min).unwrap();
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = sample_in_boxes(&r, &mut rng);
            prop_assert!(r.contains(&x));
            prop_assert!(x.min_gap() >= d_min * (1.0 - 1e-12));

            // widths equal, interleaving strict, F_1 = 0, G_N = L
            let w = r.width();
            for i in 0..n {
                prop_assert!((r.upper()[i] - r.lower()[i] - w).abs() <= 1e-12 * span.max(1.0));
                prop_assert!(r.lower()[i] < r.upper()[i]);
                if i + 1 < n {
                    prop_assert!(r.upper()[i] < r.lower()[i + 1]);
                }
            }
            prop_assert_eq!(r.lower()[0], 0.0);
            prop_assert_eq!(r.upper()[n - 1], span);
        }

        #[test]
        fn validation_is_total(
            m in 0usize..5,
            n in 0usize..6,
            span in -1.0f64..10.0,
            noise in -1.0f64..2.0,
            angles in proptest::collection::vec(-4.0f64..4.0, 0..6),
        ) {
            let cfg = ScenarioConfig {
                num_users: m,
                num_antennas: n,
                wavelength: 1.0,
                aoas: angles,
                noise_power: noise,
                rate_targets: vec![1.0; m],
                span,
                min_spacing: 0.5,
            };
            match validate_scenario(cfg) {
                Ok(s) => prop_assert!(s.num_antennas() >= s.num_users()),
                Err(report) => prop_assert!(!report.issues.is_empty()),
            }
        }
    }
}
