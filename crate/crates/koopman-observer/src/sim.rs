//! Fixed-step RK4 integration of the nonlinear plant and the lifted observer,
//! plus decay-rate fitting on recorded error norms.

use nalgebra::{DMatrix, DVector};

use crate::dict::Dictionary;
use crate::error::{Error, Result};
use crate::systems::BenchmarkSystem;

/// States beyond this norm count as blow-up and truncate the run.
const BLOWUP_LIMIT: f64 = 1e12;

/// A plant-only run: one state column per grid instant.
#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: DMatrix<f64>,
    /// True when the run stopped early because the state left the finite range.
    pub truncated: bool,
}

/// A joint plant/observer run on a shared time grid (one column per instant).
#[derive(Debug, Clone)]
pub struct SimulationRecord {
    pub times: Vec<f64>,
    pub x_true: DMatrix<f64>,
    /// Φ̄(x(t)): the lifted true state.
    pub phibar_true: DMatrix<f64>,
    /// Observer lifted state Φ̂(t).
    pub phi_hat: DMatrix<f64>,
    /// Reconstructed estimate: the coordinate entries of Φ̂.
    pub x_hat: DMatrix<f64>,
    pub e_lifted_norm: Vec<f64>,
    pub e_state_norm: Vec<f64>,
    pub truncated: bool,
}

fn grid_steps(t_final: f64, h: f64) -> Result<usize> {
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::InvalidArgument("step size must be positive".into()));
    }
    if !(t_final >= h) || !t_final.is_finite() {
        return Err(Error::InvalidArgument(
            "horizon must be at least one step".into(),
        ));
    }
    Ok((t_final / h).round() as usize)
}

fn rk4_step(deriv: &mut dyn FnMut(&DVector<f64>) -> DVector<f64>, z: &DVector<f64>, h: f64) -> DVector<f64> {
    let k1 = deriv(z);
    let k2 = deriv(&(z + &k1 * (h / 2.0)));
    let k3 = deriv(&(z + &k2 * (h / 2.0)));
    let k4 = deriv(&(z + &k3 * h));
    z + (k1 + k2 * 2.0 + k3 * 2.0 + k4) * (h / 6.0)
}

fn blew_up(z: &DVector<f64>) -> bool {
    !z.iter().all(|v| v.is_finite()) || z.norm() > BLOWUP_LIMIT
}

/// Classical fixed-step RK4 for ẋ = f(x) from `x0` over `[0, t_final]`.
/// Blow-up truncates the trajectory rather than erroring, so callers can still
/// inspect how far the run got.
pub fn integrate_plant(
    system: &BenchmarkSystem,
    x0: &[f64],
    t_final: f64,
    h: f64,
) -> Result<Trajectory> {
    let n = system.n();
    if x0.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "initial state has {} entries, system has {n}",
            x0.len()
        )));
    }
    let steps = grid_steps(t_final, h)?;
    let mut deriv = |z: &DVector<f64>| system.f_vec(z.as_slice());

    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(steps + 1);
    let mut z = DVector::from_column_slice(x0);
    let mut truncated = false;
    cols.push(z.clone());
    for _ in 0..steps {
        z = rk4_step(&mut deriv, &z, h);
        if blew_up(&z) {
            truncated = true;
            break;
        }
        cols.push(z.clone());
    }
    let times: Vec<f64> = (0..cols.len()).map(|k| k as f64 * h).collect();
    Ok(Trajectory {
        times,
        states: DMatrix::from_columns(&cols),
        truncated,
    })
}

/// Co-integrate the plant ẋ = f(x) and the observer
/// dΦ̂/dt = AΦ̂ + L(y − CΦ̂) with y = C·Φ̄(x), on one grid. The observer's RK4
/// stages see the output lifted from the plant's matching stage states, and
/// Φ̂(0) = Φ̄(x̂₀).
#[allow(clippy::too_many_arguments)]
pub fn run_observer(
    a: &DMatrix<f64>,
    c: &DMatrix<f64>,
    l: &DMatrix<f64>,
    dict: &Dictionary,
    system: &BenchmarkSystem,
    x0: &[f64],
    xhat0: &[f64],
    t_final: f64,
    h: f64,
) -> Result<SimulationRecord> {
    let n = system.n();
    let nn = dict.reduced_dim();
    if dict.n() != n {
        return Err(Error::DimensionMismatch(
            "dictionary state dimension differs from the system's".into(),
        ));
    }
    if a.nrows() != nn || a.ncols() != nn {
        return Err(Error::DimensionMismatch(format!(
            "A must be {nn}×{nn} for this dictionary"
        )));
    }
    if c.ncols() != nn || l.nrows() != nn || l.ncols() != c.nrows() {
        return Err(Error::DimensionMismatch(
            "C and L must be m×N and N×m".into(),
        ));
    }
    if x0.len() != n || xhat0.len() != n {
        return Err(Error::DimensionMismatch(
            "initial states must match the plant dimension".into(),
        ));
    }
    let steps = grid_steps(t_final, h)?;

    // augmented state z = (x, Φ̂)
    let mut z = DVector::zeros(n + nn);
    z.rows_mut(0, n).copy_from(&DVector::from_column_slice(x0));
    z.rows_mut(n, nn).copy_from(&dict.lift_reduced(xhat0)?);

    let mut failed_lift = None;
    let mut deriv = |zz: &DVector<f64>| -> DVector<f64> {
        let x = zz.rows(0, n).clone_owned();
        let phi_hat = zz.rows(n, nn).clone_owned();
        let mut out = DVector::zeros(n + nn);
        out.rows_mut(0, n).copy_from(&system.f_vec(x.as_slice()));
        match dict.lift_reduced(x.as_slice()) {
            Ok(phibar) => {
                let innovation = c * phibar - c * &phi_hat;
                out.rows_mut(n, nn).copy_from(&(a * &phi_hat + l * innovation));
            }
            Err(e) => {
                // poisoned stage: force truncation at this step
                failed_lift = Some(e);
                out.fill(f64::NAN);
            }
        }
        out
    };

    let mut cols: Vec<DVector<f64>> = Vec::with_capacity(steps + 1);
    cols.push(z.clone());
    let mut truncated = false;
    for _ in 0..steps {
        z = rk4_step(&mut deriv, &z, h);
        if blew_up(&z) {
            truncated = true;
            break;
        }
        cols.push(z.clone());
    }
    drop(deriv);
    if cols.len() <= 1 {
        if let Some(e) = failed_lift {
            return Err(e);
        }
    }

    let k = cols.len();
    let times: Vec<f64> = (0..k).map(|i| i as f64 * h).collect();
    let mut x_true = DMatrix::zeros(n, k);
    let mut phibar_true = DMatrix::zeros(nn, k);
    let mut phi_hat = DMatrix::zeros(nn, k);
    let mut x_hat = DMatrix::zeros(n, k);
    let mut e_lifted_norm = Vec::with_capacity(k);
    let mut e_state_norm = Vec::with_capacity(k);
    for (i, col) in cols.iter().enumerate() {
        let x = col.rows(0, n).clone_owned();
        let ph = col.rows(n, nn).clone_owned();
        let phibar = dict.lift_reduced(x.as_slice())?;
        x_true.set_column(i, &x);
        phibar_true.set_column(i, &phibar);
        phi_hat.set_column(i, &ph);
        let xh = ph.rows(0, n).clone_owned();
        x_hat.set_column(i, &xh);
        e_lifted_norm.push((&phibar - &ph).norm());
        e_state_norm.push((&x - &xh).norm());
    }

    Ok(SimulationRecord {
        times,
        x_true,
        phibar_true,
        phi_hat,
        x_hat,
        e_lifted_norm,
        e_state_norm,
        truncated,
    })
}

/// Least-squares fit of log‖e(t)‖ against t on the tail of the run, skipping
/// the transient: returns (α̂, M̂) for the model ‖e(t)‖ ≈ M̂·e^{−α̂t}. Instants
/// with ‖e‖ < 1e−12 are excluded; fewer than 3 usable points is an error.
pub fn fit_decay_rate(times: &[f64], error_norms: &[f64], burn_in: f64) -> Result<(f64, f64)> {
    if times.len() != error_norms.len() {
        return Err(Error::DimensionMismatch(
            "times and error norms differ in length".into(),
        ));
    }
    if !(0.0..1.0).contains(&burn_in) {
        return Err(Error::InvalidArgument(
            "burn-in must be a fraction in [0, 1)".into(),
        ));
    }
    let t_final = times.last().copied().unwrap_or(0.0);
    let cut = burn_in * t_final;
    let pts: Vec<(f64, f64)> = times
        .iter()
        .zip(error_norms)
        .filter(|(t, e)| **t >= cut && **e >= 1e-12)
        .map(|(t, e)| (*t, e.ln()))
        .collect();
    if pts.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} usable points after burn-in; need at least 3",
            pts.len()
        )));
    }
    let m = pts.len() as f64;
    let sum_t: f64 = pts.iter().map(|(t, _)| t).sum();
    let sum_y: f64 = pts.iter().map(|(_, y)| y).sum();
    let sum_tt: f64 = pts.iter().map(|(t, _)| t * t).sum();
    let sum_ty: f64 = pts.iter().map(|(t, y)| t * y).sum();
    let denom = m * sum_tt - sum_t * sum_t;
    if denom.abs() < 1e-300 {
        return Err(Error::InsufficientData(
            "degenerate time window for the rate fit".into(),
        ));
    }
    let slope = (m * sum_ty - sum_t * sum_y) / denom;
    let intercept = (sum_y - slope * sum_t) / m;
    Ok((-slope, intercept.exp()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dict::{Observable, OutputMap};
    use crate::systems;
    use approx::assert_relative_eq;

    fn scalar_decay_system() -> BenchmarkSystem {
        let dict = Dictionary::new(1, vec![Observable::constant(), Observable::coordinate(0)])
            .unwrap();
        BenchmarkSystem::new(
            "scalar-decay",
            1,
            |x, out| out[0] = -x[0],
            dict,
            vec![(-1.0, 1.0)],
            OutputMap::new(DMatrix::from_element(1, 1, 1.0)).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn scalar_plant_matches_exponential() {
        let sys = scalar_decay_system();
        let traj = integrate_plant(&sys, &[1.0], 1.0, 1e-3).unwrap();
        assert!(!traj.truncated);
        assert_eq!(traj.times.len(), 1001);
        let x1 = traj.states[(0, 1000)];
        assert_relative_eq!(x1, (-1.0f64).exp(), epsilon = 1e-9);
    }

    #[test]
    fn equilibrium_stays_at_zero() {
        let sys = systems::example_a(-2.0, -1.0).unwrap();
        let traj = integrate_plant(&sys, &[0.0, 0.0], 1.0, 1e-2).unwrap();
        assert_eq!(traj.states.amax(), 0.0);
    }

    #[test]
    fn example_a_first_coordinate_decays_at_rho() {
        let sys = systems::example_a(-2.0, -1.0).unwrap();
        let traj = integrate_plant(&sys, &[1.0, 1.0], 1.0, 1e-3).unwrap();
        let k = traj.times.len() - 1;
        assert_relative_eq!(traj.times[k], 1.0, epsilon = 1e-12);
        assert_relative_eq!(traj.states[(0, k)], (-2.0f64).exp(), epsilon = 1e-6);
        assert_relative_eq!(traj.states[(0, k)], 0.13534, epsilon = 1e-5);
    }

    #[test]
    fn blowup_truncates_instead_of_erroring() {
        let dict = Dictionary::new(1, vec![Observable::constant(), Observable::coordinate(0)])
            .unwrap();
        let sys = BenchmarkSystem::new(
            "explode",
            1,
            |x, out| out[0] = x[0] * x[0], // finite-time escape from x0 > 0
            dict,
            vec![(-1.0, 1.0)],
            OutputMap::new(DMatrix::from_element(1, 1, 1.0)).unwrap(),
        )
        .unwrap();
        let traj = integrate_plant(&sys, &[1.0], 5.0, 1e-3).unwrap();
        assert!(traj.truncated);
        assert!(traj.times.len() < 5001);
    }

    #[test]
    fn rk4_error_shrinks_sixteenfold_when_halving_h() {
        let sys = scalar_decay_system();
        let exact = (-1.0f64).exp();
        let mut errs = Vec::new();
        for h in [0.05, 0.025] {
            let traj = integrate_plant(&sys, &[1.0], 1.0, h).unwrap();
            let k = traj.times.len() - 1;
            errs.push((traj.states[(0, k)] - exact).abs());
        }
        let ratio = errs[0] / errs[1];
        assert!(
            (12.0..=20.0).contains(&ratio),
            "4th-order step halving gave ratio {ratio}"
        );
    }

    #[test]
    fn scalar_observer_error_follows_closed_form() {
        // ẋ = −x, Φ̄ = x, A = [−1], C = [1], L = [2]: the error obeys
        // ė = −(1+2)e, so e(1) = e(0)·e⁻³
        let sys = scalar_decay_system();
        let a = DMatrix::from_element(1, 1, -1.0);
        let c = DMatrix::from_element(1, 1, 1.0);
        let l = DMatrix::from_element(1, 1, 2.0);
        let rec = run_observer(&a, &c, &l, sys.dict(), &sys, &[1.0], &[0.5], 1.0, 1e-3).unwrap();
        let e0 = rec.e_lifted_norm[0];
        assert_relative_eq!(e0, 0.5, epsilon = 1e-12);
        let k = rec.times.len() - 1;
        assert_relative_eq!(
            rec.e_lifted_norm[k],
            e0 * (-3.0f64).exp(),
            epsilon = 1e-7
        );
    }

    #[test]
    fn exact_model_and_matched_start_keep_error_at_zero() {
        let sys = systems::example_a(-2.0, -1.0).unwrap();
        let a = sys.reference_generator().unwrap().clone();
        let c = sys.output().matrix().clone();
        let l = DMatrix::zeros(3, 1);
        let x0 = [0.4, -0.3];
        let rec = run_observer(&a, &c, &l, sys.dict(), &sys, &x0, &x0, 2.0, 1e-3).unwrap();
        let worst = rec
            .e_lifted_norm
            .iter()
            .fold(0.0f64, |m, v| m.max(*v));
        assert!(worst <= 1e-8, "worst lifted error {worst}");
    }

    #[test]
    fn state_error_never_exceeds_lifted_error() {
        let sys = systems::example_a(-2.0, -1.0).unwrap();
        let a = sys.reference_generator().unwrap().clone();
        let c = sys.output().matrix().clone();
        let l = DMatrix::from_column_slice(3, 1, &[0.1, 0.2, 0.05]);
        let rec =
            run_observer(&a, &c, &l, sys.dict(), &sys, &[0.8, 0.6], &[-0.2, 0.1], 3.0, 1e-3)
                .unwrap();
        for k in 0..rec.times.len() {
            assert!(rec.e_state_norm[k] <= rec.e_lifted_norm[k] + 1e-12);
        }
    }

    #[test]
    fn decay_fit_recovers_known_exponentials() {
        let times: Vec<f64> = (0..=500).map(|k| k as f64 * 0.01).collect();
        let errs: Vec<f64> = times.iter().map(|t| (-2.0 * t).exp()).collect();
        let (alpha, m) = fit_decay_rate(&times, &errs, 0.1).unwrap();
        assert_relative_eq!(alpha, 2.0, epsilon = 1e-6);
        assert_relative_eq!(m, 1.0, epsilon = 1e-6);

        let flat: Vec<f64> = times.iter().map(|_| 0.7).collect();
        let (alpha0, m0) = fit_decay_rate(&times, &flat, 0.1).unwrap();
        assert!(alpha0.abs() <= 1e-9);
        assert_relative_eq!(m0, 0.7, epsilon = 1e-9);
    }

    #[test]
    fn decay_fit_needs_three_points() {
        let times = vec![0.0, 1.0, 2.0, 3.0];
        let errs = vec![1.0, 0.5, 1e-15, 1e-16]; // only two usable
        assert!(matches!(
            fit_decay_rate(&times, &errs, 0.0),
            Err(Error::InsufficientData(_))
        ));
    }
}
