//! Generator-form EDMD: build the lifted data matrices and fit the surrogate
//! generator by least squares.

use nalgebra::DMatrix;

use crate::dict::Dictionary;
use crate::error::{Error, Result};
use crate::linalg::pseudoinverse;
use crate::samples::SampleSet;

/// The fitted N×N generator matrix together with its (N+1)×(N+1) embedding
/// (zero first row and column) and fit diagnostics.
#[derive(Debug, Clone)]
pub struct GeneratorSurrogate {
    pub a: DMatrix<f64>,
    pub full_form: DMatrix<f64>,
    pub residual_fro: f64,
    pub rank_x: usize,
}

impl GeneratorSurrogate {
    /// True when the lifted data matrix X failed to reach full row rank; the
    /// fit is then the minimum-norm least-squares solution.
    pub fn is_rank_deficient(&self) -> bool {
        self.rank_x < self.a.nrows()
    }
}

/// Column j of X is Φ̄(xⱼ); column j of Y is ⟨∇φ_k(xⱼ), ẋⱼ⟩ for k = 1..N —
/// the generator applied along the measured derivative.
pub fn build_data_matrices(
    dict: &Dictionary,
    samples: &SampleSet,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    if samples.n() != dict.n() {
        return Err(Error::DimensionMismatch(format!(
            "samples have state dimension {}, dictionary expects {}",
            samples.n(),
            dict.n()
        )));
    }
    let n_red = dict.reduced_dim();
    let d = samples.len();
    let mut x = DMatrix::zeros(n_red, d);
    let mut y = DMatrix::zeros(n_red, d);
    for j in 0..d {
        let phibar = dict.lift_reduced(samples.state(j))?;
        let ldot = dict.generator_action_reduced(samples.state(j), samples.derivative(j))?;
        x.set_column(j, &phibar);
        y.set_column(j, &ldot);
    }
    Ok((x, y))
}

/// A = Y·X⁺, the minimizer of ‖Y − AX‖_F (minimum-norm when X is rank
/// deficient — flagged, not fatal).
pub fn fit_generator(x: &DMatrix<f64>, y: &DMatrix<f64>, rank_tol: f64) -> Result<GeneratorSurrogate> {
    if x.ncols() != y.ncols() || x.nrows() != y.nrows() {
        return Err(Error::DimensionMismatch(format!(
            "X is {}×{}, Y is {}×{}",
            x.nrows(),
            x.ncols(),
            y.nrows(),
            y.ncols()
        )));
    }
    if x.ncols() == 0 {
        return Err(Error::DegenerateData("no data columns".into()));
    }
    if !x.iter().chain(y.iter()).all(|v| v.is_finite()) {
        return Err(Error::DegenerateData(
            "data matrices contain non-finite entries".into(),
        ));
    }
    let (x_pinv, rank_x) = pseudoinverse(x, rank_tol)?;
    let a = y * x_pinv;
    let residual_fro = (y - &a * x).norm();
    let n_red = x.nrows();
    let mut full_form = DMatrix::zeros(n_red + 1, n_red + 1);
    full_form.view_mut((1, 1), (n_red, n_red)).copy_from(&a);
    Ok(GeneratorSurrogate {
        a,
        full_form,
        residual_fro,
        rank_x,
    })
}

/// Empirical conic remainder constant: max over validation samples of
/// ‖Yⱼ − A·Xⱼ‖ / ‖Xⱼ‖, skipping columns with Φ̄(xⱼ) = 0.
pub fn empirical_remainder_bound(
    dict: &Dictionary,
    a: &DMatrix<f64>,
    validation: &SampleSet,
) -> Result<f64> {
    let (x, y) = build_data_matrices(dict, validation)?;
    let mut best: Option<f64> = None;
    for j in 0..x.ncols() {
        let xj = x.column(j);
        let norm_x = xj.norm();
        if norm_x == 0.0 {
            continue;
        }
        let r = (y.column(j) - a * xj).norm() / norm_x;
        best = Some(best.map_or(r, |b| b.max(r)));
    }
    best.ok_or_else(|| {
        Error::DegenerateData(
            "every validation sample lifts to the zero vector; no conic ratio defined".into(),
        )
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::{by_name, example_a, sample_uniform};
    use approx::assert_relative_eq;
    use nalgebra::DVector;

    #[test]
    fn data_matrix_columns_match_hand_computation() {
        let sys = example_a(-2.0, -1.0).unwrap();
        let s = SampleSet::new(2, vec![1.0, 1.0], vec![-2.0, 0.0]).unwrap();
        let (x, y) = build_data_matrices(sys.dict(), &s).unwrap();
        let xc: Vec<f64> = x.column(0).iter().copied().collect();
        let yc: Vec<f64> = y.column(0).iter().copied().collect();
        assert_relative_eq!(xc[0], 1.0);
        assert_relative_eq!(xc[1], 1.0);
        assert_relative_eq!(xc[2], 4.0 / 3.0, epsilon = 1e-14);
        assert_relative_eq!(yc[0], -2.0);
        assert_relative_eq!(yc[1], 0.0);
        // d/dt of (x2 + x1^2/3) along (xdot1, xdot2) = (-2, 0) is (2/3)(-2)
        assert_relative_eq!(yc[2], -4.0 / 3.0, epsilon = 1e-14);
    }

    #[test]
    fn zero_state_and_derivative_give_zero_columns() {
        let sys = example_a(-2.0, -1.0).unwrap();
        let s = SampleSet::new(2, vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
        let (x, y) = build_data_matrices(sys.dict(), &s).unwrap();
        assert_eq!(x.column(0).norm(), 0.0);
        assert_eq!(y.column(0).norm(), 0.0);
    }

    #[test]
    fn recovers_reference_generator_from_samples() {
        let sys = example_a(-2.0, -1.0).unwrap();
        let s = sample_uniform(&sys, 5000, 1).unwrap();
        let (x, y) = build_data_matrices(sys.dict(), &s).unwrap();
        let fit = fit_generator(&x, &y, 1e-10).unwrap();
        let expected =
            DMatrix::from_row_slice(3, 3, &[-2.0, 0.0, 0.0, 0.0, -4.0, 3.0, 0.0, 0.0, -1.0]);
        for i in 0..3 {
            for j in 0..3 {
                assert!(
                    (fit.a[(i, j)] - expected[(i, j)]).abs() < 5e-3,
                    "entry ({i},{j}): {} vs {}",
                    fit.a[(i, j)],
                    expected[(i, j)]
                );
            }
        }
        // invariant dictionary + exact derivatives: residual is numerically zero
        assert!(fit.residual_fro / y.norm() <= 1e-8);
        assert!(!fit.is_rank_deficient());
        // full form embeds A with a zero first row and column
        assert_eq!(fit.full_form.nrows(), 4);
        assert!(fit.full_form.row(0).iter().all(|&v| v == 0.0));
        assert!(fit.full_form.column(0).iter().all(|&v| v == 0.0));
        assert_eq!(fit.full_form.view((1, 1), (3, 3)), fit.a.view((0, 0), (3, 3)));
    }

    #[test]
    fn cstr_fit_leaves_a_positive_residual() {
        // the quadratic lifting is not invariant for the reactor chain
        let sys = by_name("cstr").unwrap();
        let s = sample_uniform(&sys, 5000, 1).unwrap();
        let (x, y) = build_data_matrices(sys.dict(), &s).unwrap();
        let fit = fit_generator(&x, &y, 1e-10).unwrap();
        assert!(fit.residual_fro / y.norm() > 1e-8);
        assert!(!fit.is_rank_deficient());
    }

    #[test]
    fn zero_target_gives_zero_generator() {
        let x = DMatrix::from_row_slice(2, 3, &[1.0, 2.0, 0.5, -1.0, 0.3, 0.8]);
        let y = DMatrix::zeros(2, 3);
        let fit = fit_generator(&x, &y, 1e-10).unwrap();
        assert_eq!(fit.a.norm(), 0.0);
        assert_eq!(fit.residual_fro, 0.0);
    }

    #[test]
    fn rank_deficiency_is_flagged_not_fatal() {
        // one sample cannot span a 3-dimensional lifted space
        let sys = example_a(-2.0, -1.0).unwrap();
        let s = sample_uniform(&sys, 1, 5).unwrap();
        let (x, y) = build_data_matrices(sys.dict(), &s).unwrap();
        let fit = fit_generator(&x, &y, 1e-10).unwrap();
        assert!(fit.is_rank_deficient());
        assert!(fit.rank_x == 1);
    }

    #[test]
    fn least_squares_beats_perturbations() {
        let sys = example_a(-2.0, -1.0).unwrap();
        let s = sample_uniform(&sys, 200, 9).unwrap();
        let (x, y) = build_data_matrices(sys.dict(), &s).unwrap();
        let fit = fit_generator(&x, &y, 1e-10).unwrap();
        let base = (&y - &fit.a * &x).norm();
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(11);
        for _ in 0..50 {
            let mut delta = DMatrix::zeros(3, 3);
            for v in delta.iter_mut() {
                *v = rand::Rng::random_range(&mut rng, -1.0..1.0);
            }
            let delta = delta.clone() * (1e-3 / delta.norm());
            let a_pert: DMatrix<f64> = &fit.a + delta;
            let resid: DMatrix<f64> = &y - &a_pert * &x;
            assert!(resid.norm() >= base);
        }
    }

    #[test]
    fn exact_linear_recovery() {
        // data generated by xdot = Mx with the linear dictionary recovers M
        let m = DMatrix::from_row_slice(2, 2, &[-1.0, 0.5, 0.2, -3.0]);
        let mut rng = <rand_chacha::ChaCha8Rng as rand::SeedableRng>::seed_from_u64(21);
        let mut states = Vec::new();
        let mut derivs = Vec::new();
        for _ in 0..40 {
            let x = DVector::from_fn(2, |_, _| rand::Rng::random_range(&mut rng, -1.0..1.0));
            let xd = &m * &x;
            states.extend_from_slice(x.as_slice());
            derivs.extend_from_slice(xd.as_slice());
        }
        let s = SampleSet::new(2, states, derivs).unwrap();
        let dict = Dictionary::new(
            2,
            vec![
                crate::dict::Observable::constant(),
                crate::dict::Observable::coordinate(0),
                crate::dict::Observable::coordinate(1),
            ],
        )
        .unwrap();
        let (x, y) = build_data_matrices(&dict, &s).unwrap();
        let fit = fit_generator(&x, &y, 1e-10).unwrap();
        assert!((fit.a - m).norm() < 1e-10);
    }

    #[test]
    fn remainder_bound_on_invariant_and_perturbed_generators() {
        let sys = example_a(-2.0, -1.0).unwrap();
        let validation = sample_uniform(&sys, 1000, 2).unwrap();
        let a_ref = sys.reference_generator().unwrap();
        let cr = empirical_remainder_bound(sys.dict(), a_ref, &validation).unwrap();
        assert!(cr <= 1e-9, "invariant lifting should have ~zero remainder, got {cr}");
        // shifting A by 0.1·I makes the conic ratio exactly 0.1
        let perturbed = a_ref + DMatrix::identity(3, 3) * 0.1;
        let cr = empirical_remainder_bound(sys.dict(), &perturbed, &validation).unwrap();
        assert_relative_eq!(cr, 0.1, epsilon = 1e-12);
    }

    #[test]
    fn remainder_bound_rejects_all_zero_validation() {
        let sys = example_a(-2.0, -1.0).unwrap();
        let s = SampleSet::new(2, vec![0.0, 0.0], vec![0.0, 0.0]).unwrap();
        let a_ref = sys.reference_generator().unwrap();
        assert!(empirical_remainder_bound(sys.dict(), a_ref, &s).is_err());
    }

    #[test]
    fn fit_is_deterministic() {
        let sys = example_a(-2.0, -1.0).unwrap();
        let s = sample_uniform(&sys, 500, 13).unwrap();
        let (x, y) = build_data_matrices(sys.dict(), &s).unwrap();
        let f1 = fit_generator(&x, &y, 1e-10).unwrap();
        let f2 = fit_generator(&x, &y, 1e-10).unwrap();
        assert_eq!(f1.a.as_slice(), f2.a.as_slice());
    }
}
