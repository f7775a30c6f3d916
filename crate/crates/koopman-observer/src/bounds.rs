//! Probabilistic error-bound machinery: Monte Carlo estimates of the
//! dictionary structure matrices, entrywise variance matrices, the conic
//! constant c̃, and the sample-size requirement d₀.

use nalgebra::{DMatrix, DVector};

use crate::dict::Dictionary;
use crate::error::{Error, Result};
use crate::linalg::{spectral_norm, sym_eig_min, symmetrize};
use crate::samples::SampleSet;

/// Everything the data-requirement computation produces, kept together so it
/// can be serialized and audited.
#[derive(Debug, Clone)]
pub struct BoundReport {
    pub c_r: f64,
    pub delta: f64,
    pub r1: DMatrix<f64>,
    pub r2: DMatrix<f64>,
    /// Entrywise variances, stored as the squared quantities.
    pub sigma1_sq: DMatrix<f64>,
    pub sigma2_sq: DMatrix<f64>,
    pub a_norm: f64,
    pub cinv_norm: f64,
    pub c_tilde: f64,
    /// Required sample count, floored at 1.
    pub d0: u64,
    /// The same quantity before the ceiling — exactly proportional to 1/δ.
    pub d0_raw: f64,
    pub mc_points: usize,
}

impl BoundReport {
    pub fn invariants_hold(&self) -> bool {
        self.r2 == symmetrize(&self.r2)
            && sym_eig_min(&self.r2) > -1e-10
            && self.sigma1_sq.iter().all(|&v| v >= 0.0)
            && self.sigma2_sq.iter().all(|&v| v >= 0.0)
            && self.d0 >= 1
    }
}

/// Monte Carlo estimates of (R₁)_{ij} = ⟨φ_i, ⟨∇φ_j, f⟩⟩ and the Gram matrix
/// (R₂)_{ij} = ⟨φ_i, φ_j⟩ under the uniform sampling measure (which absorbs
/// the 1/|𝒳| normalization). Indices run over all N+1 observables.
pub fn estimate_structure_matrices(
    dict: &Dictionary,
    samples: &SampleSet,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if samples.is_empty() {
        return Err(Error::DegenerateData("no samples for estimation".into()));
    }
    let m = dict.full_dim();
    let mut r1 = DMatrix::zeros(m, m);
    let mut r2 = DMatrix::zeros(m, m);
    for j in 0..samples.len() {
        let phi = dict.lift(samples.state(j))?;
        let jac = dict.lift_gradient(samples.state(j))?;
        let gact = jac * DVector::from_column_slice(samples.derivative(j));
        r1 += &phi * gact.transpose();
        r2 += &phi * phi.transpose();
    }
    let d = samples.len() as f64;
    r1 /= d;
    r2 /= d;
    Ok((r1, symmetrize(&r2)))
}

/// Entrywise empirical variances of the two Monte Carlo integrands, returned
/// as squared quantities with floating-point cancellation clamped at zero.
pub fn estimate_variance_matrices(
    dict: &Dictionary,
    samples: &SampleSet,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if samples.is_empty() {
        return Err(Error::DegenerateData("no samples for estimation".into()));
    }
    let m = dict.full_dim();
    let mut mean1 = DMatrix::zeros(m, m);
    let mut mean1_sq = DMatrix::zeros(m, m);
    let mut mean2 = DMatrix::zeros(m, m);
    let mut mean2_sq = DMatrix::zeros(m, m);
    for j in 0..samples.len() {
        let phi = dict.lift(samples.state(j))?;
        let jac = dict.lift_gradient(samples.state(j))?;
        let gact = jac * DVector::from_column_slice(samples.derivative(j));
        for i in 0..m {
            for k in 0..m {
                let t1 = phi[i] * gact[k];
                let t2 = phi[i] * phi[k];
                mean1[(i, k)] += t1;
                mean1_sq[(i, k)] += t1 * t1;
                mean2[(i, k)] += t2;
                mean2_sq[(i, k)] += t2 * t2;
            }
        }
    }
    let d = samples.len() as f64;
    let var = |sq: &DMatrix<f64>, mean: &DMatrix<f64>| {
        DMatrix::from_fn(m, m, |i, k| {
            (sq[(i, k)] / d - (mean[(i, k)] / d).powi(2)).max(0.0)
        })
    };
    Ok((var(&mean1_sq, &mean1), var(&mean2_sq, &mean2)))
}

/// c̃ = min{1, 1/(‖A‖·‖C⁻¹‖)} · ‖A‖·c_r / (2‖A‖·‖C⁻¹‖ + c_r).
pub fn compute_ctilde(c_r: f64, a_norm: f64, cinv_norm: f64) -> Result<f64> {
    if c_r <= 0.0 || a_norm <= 0.0 || cinv_norm <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "compute_ctilde needs positive inputs (c_r={c_r}, a_norm={a_norm}, cinv_norm={cinv_norm})"
        )));
    }
    let cap = 1.0f64.min(1.0 / (a_norm * cinv_norm));
    Ok(cap * (a_norm * c_r) / (2.0 * a_norm * cinv_norm + c_r))
}

/// The sample-size requirement before the integer ceiling; exactly
/// proportional to 1/δ.
pub fn required_data_raw(
    n_reduced: usize,
    delta: f64,
    c_tilde: f64,
    sigma1_sq: &DMatrix<f64>,
    sigma2_sq: &DMatrix<f64>,
) -> Result<f64> {
    if !(0.0..1.0).contains(&delta) || delta == 0.0 {
        return Err(Error::InvalidArgument(format!(
            "delta must lie in (0,1), got {delta}"
        )));
    }
    if c_tilde <= 0.0 {
        return Err(Error::UnboundedRequirement);
    }
    let n = n_reduced;
    let s_max = sigma1_sq.sum().max(sigma2_sq.sum());
    Ok(((n + 1) * (n + 1)) as f64 / (c_tilde * c_tilde * delta / 3.0) * s_max)
}

/// Required sample count d₀ = ceil of the raw bound, floored at 1.
pub fn required_data(
    n_reduced: usize,
    delta: f64,
    c_tilde: f64,
    sigma1_sq: &DMatrix<f64>,
    sigma2_sq: &DMatrix<f64>,
) -> Result<u64> {
    let raw = required_data_raw(n_reduced, delta, c_tilde, sigma1_sq, sigma2_sq)?;
    Ok((raw.ceil() as u64).max(1))
}

/// Run all three estimators and assemble the report. ‖A‖ is taken as the
/// spectral norm of R₂⁻¹R₁ (the compressed-generator representation) and
/// ‖C⁻¹‖ as that of R₂⁻¹.
pub fn build_bound_report(
    dict: &Dictionary,
    samples: &SampleSet,
    c_r: f64,
    delta: f64,
) -> Result<BoundReport> {
    if c_r <= 0.0 {
        // c̃ would vanish and no finite sample count satisfies the bound
        return Err(Error::UnboundedRequirement);
    }
    let (r1, r2) = estimate_structure_matrices(dict, samples)?;
    let (sigma1_sq, sigma2_sq) = estimate_variance_matrices(dict, samples)?;
    let min_eig = sym_eig_min(&r2);
    if min_eig <= 1e-12 * spectral_norm(&r2) {
        return Err(Error::IllConditionedDictionary { min_eig });
    }
    let chol = r2
        .clone()
        .cholesky()
        .ok_or(Error::IllConditionedDictionary { min_eig })?;
    let r2_inv = chol.inverse();
    let a_norm = spectral_norm(&(&r2_inv * &r1));
    let cinv_norm = spectral_norm(&r2_inv);
    let c_tilde = compute_ctilde(c_r, a_norm, cinv_norm)?;
    let n_reduced = dict.reduced_dim();
    let d0_raw = required_data_raw(n_reduced, delta, c_tilde, &sigma1_sq, &sigma2_sq)?;
    let d0 = required_data(n_reduced, delta, c_tilde, &sigma1_sq, &sigma2_sq)?;
    Ok(BoundReport {
        c_r,
        delta,
        r1,
        r2,
        sigma1_sq,
        sigma2_sq,
        a_norm,
        cinv_norm,
        c_tilde,
        d0,
        d0_raw,
        mc_points: samples.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dict::Observable;
    use crate::systems::{example_a, sample_uniform};
    use approx::assert_relative_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn scalar_linear_samples(d: usize, seed: u64) -> SampleSet {
        // xdot = -x uniformly on [-1, 1]
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let states: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let derivs: Vec<f64> = states.iter().map(|x| -x).collect();
        SampleSet::new(1, states, derivs).unwrap()
    }

    fn linear_dict() -> Dictionary {
        Dictionary::new(1, vec![Observable::constant(), Observable::coordinate(0)]).unwrap()
    }

    #[test]
    fn constant_only_dictionary() {
        let dict = Dictionary::new_unchecked(1, vec![Observable::constant()]);
        let s = scalar_linear_samples(100, 1);
        let (r1, r2) = estimate_structure_matrices(&dict, &s).unwrap();
        assert_eq!(r2[(0, 0)], 1.0);
        assert_eq!(r1[(0, 0)], 0.0);
        let (_, s2) = estimate_variance_matrices(&dict, &s).unwrap();
        assert_eq!(s2[(0, 0)], 0.0);
    }

    #[test]
    fn linear_dictionary_matches_analytic_moments() {
        let s = scalar_linear_samples(100_000, 5);
        let dict = linear_dict();
        let (r1, r2) = estimate_structure_matrices(&dict, &s).unwrap();
        // (1/2)∫ x² dx over [-1,1] = 1/3; cross moments vanish
        assert_relative_eq!(r2[(0, 0)], 1.0, epsilon = 1e-12);
        assert!((r2[(1, 1)] - 1.0 / 3.0).abs() < 2e-2);
        assert!(r2[(0, 1)].abs() < 2e-2);
        // ⟨x, ℒx⟩ = -1/3, ⟨1, ℒx⟩ = mean(-x) → 0, ℒ1 = 0 exactly
        assert!((r1[(1, 1)] + 1.0 / 3.0).abs() < 2e-2);
        assert!(r1[(0, 1)].abs() < 2e-2);
        assert_eq!(r1[(0, 0)], 0.0);
        assert_eq!(r1[(1, 0)], 0.0);

        let (s1, s2) = estimate_variance_matrices(&dict, &s).unwrap();
        // Var(x·x) = E[x⁴] − E[x²]² = 1/5 − 1/9 = 4/45
        assert!((s2[(1, 1)] - 4.0 / 45.0).abs() < 2e-2);
        // integrand of (Σ₁)_{11} is x·(-x): same variance
        assert!((s1[(1, 1)] - 4.0 / 45.0).abs() < 2e-2);
    }

    #[test]
    fn zero_derivatives_zero_sigma1() {
        let states: Vec<f64> = (0..50).map(|i| (i as f64) / 50.0 - 0.5).collect();
        let derivs = vec![0.0; 50];
        let s = SampleSet::new(1, states, derivs).unwrap();
        let (s1, _) = estimate_variance_matrices(&linear_dict(), &s).unwrap();
        assert_eq!(s1.sum(), 0.0);
    }

    #[test]
    fn ctilde_hand_values() {
        assert_relative_eq!(compute_ctilde(2.0, 1.0, 1.0).unwrap(), 0.5);
        assert_relative_eq!(compute_ctilde(2.0, 2.0, 1.0).unwrap(), 1.0 / 3.0, epsilon = 1e-15);
        assert!(compute_ctilde(1e-12, 1.0, 1.0).unwrap() < 1e-11);
        assert!(compute_ctilde(0.0, 1.0, 1.0).is_err());
        assert!(compute_ctilde(1.0, -1.0, 1.0).is_err());
    }

    #[test]
    fn required_data_floor_and_scaling() {
        let z = DMatrix::zeros(3, 3);
        assert_eq!(required_data(2, 0.1, 0.5, &z, &z).unwrap(), 1);

        let mut s1 = DMatrix::zeros(3, 3);
        s1[(0, 0)] = 0.7;
        s1[(2, 1)] = 0.09;
        let s2 = DMatrix::from_element(3, 3, 0.01);
        let raw1 = required_data_raw(2, 0.2, 0.3, &s1, &s2).unwrap();
        let raw2 = required_data_raw(2, 0.1, 0.3, &s1, &s2).unwrap();
        assert_eq!(raw2, 2.0 * raw1); // bit-exact: the bound is ∝ 1/δ
        let d1 = required_data(2, 0.2, 0.3, &s1, &s2).unwrap();
        let d2 = required_data(2, 0.1, 0.3, &s1, &s2).unwrap();
        assert!(d2 as i64 - 2 * d1 as i64 <= 1 && 2 * d1 as i64 - (d2 as i64) <= 1);

        assert!(matches!(
            required_data(2, 0.1, 0.0, &s1, &s2),
            Err(Error::UnboundedRequirement)
        ));
        assert!(required_data(2, 0.0, 0.5, &s1, &s2).is_err());
        assert!(required_data(2, 1.0, 0.5, &s1, &s2).is_err());
    }

    #[test]
    fn report_on_benchmark_data() {
        let sys = example_a(-2.0, -1.0).unwrap();
        let s = sample_uniform(&sys, 5000, 1).unwrap();
        let rep = build_bound_report(sys.dict(), &s, 0.1, 0.1).unwrap();
        assert!(rep.invariants_hold());
        assert!(rep.d0 >= 1);
        assert!(rep.a_norm > 0.0 && rep.cinv_norm > 0.0);

        // halving delta doubles the raw requirement bit-exactly
        let rep2 = build_bound_report(sys.dict(), &s, 0.1, 0.05).unwrap();
        assert_eq!(rep2.d0_raw, 2.0 * rep.d0_raw);

        // d0 non-increasing in c_r over a 10-point sweep
        let mut last = u64::MAX;
        for i in 1..=10 {
            let cr = 0.05 * i as f64;
            let r = build_bound_report(sys.dict(), &s, cr, 0.1).unwrap();
            assert!(r.d0 <= last, "d0 must be non-increasing in c_r");
            last = r.d0;
        }

        // and non-increasing in delta
        let mut last = u64::MAX;
        for i in 1..=10 {
            let delta = 0.05 * i as f64;
            let r = build_bound_report(sys.dict(), &s, 0.1, delta).unwrap();
            assert!(r.d0 <= last, "d0 must be non-increasing in delta");
            last = r.d0;
        }
    }

    #[test]
    fn duplicate_observable_is_ill_conditioned() {
        let dict = Dictionary::new_unchecked(
            1,
            vec![
                Observable::constant(),
                Observable::coordinate(0),
                Observable::coordinate(0),
            ],
        );
        let s = scalar_linear_samples(200, 3);
        let err = build_bound_report(&dict, &s, 0.1, 0.1).unwrap_err();
        assert!(matches!(err, Error::IllConditionedDictionary { .. }));
    }

    #[test]
    fn zero_cr_is_unbounded() {
        let sys = example_a(-2.0, -1.0).unwrap();
        let s = sample_uniform(&sys, 100, 1).unwrap();
        assert!(matches!(
            build_bound_report(sys.dict(), &s, 0.0, 0.1),
            Err(Error::UnboundedRequirement)
        ));
    }

    #[test]
    fn gram_estimate_stays_within_monte_carlo_tolerance() {
        let dict = linear_dict();
        for &d in &[1000usize, 4000, 16000] {
            let s = scalar_linear_samples(d, 17);
            let (_, r2) = estimate_structure_matrices(&dict, &s).unwrap();
            let exact = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 1.0 / 3.0]);
            let err = (r2 - exact).norm();
            assert!(err < 3.0 / (d as f64).sqrt(), "d={d}: err={err}");
        }
    }
}
