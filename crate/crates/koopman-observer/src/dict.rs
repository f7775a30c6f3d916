//! Observable dictionaries and the lifting maps built from them.
//!
//! A dictionary is an ordered list of scalar observables φ₀..φ_N with analytic
//! gradients. Index 0 is always the constant 1 and indices 1..n are the state
//! coordinates, so the full lifting Φ(x) carries the state and the reduced
//! lifting Φ̄(x) (constant dropped) vanishes at the origin.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

type EvalFn = Box<dyn Fn(&[f64]) -> f64 + Send + Sync>;
type GradFn = Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// A scalar observable with its analytic gradient.
pub struct Observable {
    label: String,
    eval: EvalFn,
    grad: GradFn,
}

impl Observable {
    pub fn new(
        label: impl Into<String>,
        eval: impl Fn(&[f64]) -> f64 + Send + Sync + 'static,
        grad: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Observable {
            label: label.into(),
            eval: Box::new(eval),
            grad: Box::new(grad),
        }
    }

    /// The constant observable φ ≡ 1.
    pub fn constant() -> Self {
        Observable::new("1", |_| 1.0, |_, g| g.fill(0.0))
    }

    /// The coordinate observable φ(x) = x_i (zero-based i).
    pub fn coordinate(i: usize) -> Self {
        Observable::new(
            format!("x{}", i + 1),
            move |x: &[f64]| x[i],
            move |_, g| {
                g.fill(0.0);
                g[i] = 1.0;
            },
        )
    }

    /// Monomial ∏ x_i^{e_i} with analytic gradient.
    pub fn monomial(exponents: Vec<u32>) -> Self {
        let label = monomial_label(&exponents);
        let exps_eval = exponents.clone();
        let exps_grad = exponents;
        Observable::new(
            label,
            move |x: &[f64]| {
                exps_eval
                    .iter()
                    .zip(x)
                    .map(|(&e, &xi)| xi.powi(e as i32))
                    .product()
            },
            move |x: &[f64], g: &mut [f64]| {
                for (i, gi) in g.iter_mut().enumerate() {
                    let ei = exps_grad[i];
                    if ei == 0 {
                        *gi = 0.0;
                        continue;
                    }
                    let mut v = ei as f64 * x[i].powi(ei as i32 - 1);
                    for (j, &ej) in exps_grad.iter().enumerate() {
                        if j != i {
                            v *= x[j].powi(ej as i32);
                        }
                    }
                    *gi = v;
                }
            },
        )
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        (self.eval)(x)
    }

    pub fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        (self.grad)(x, out)
    }
}

fn monomial_label(exps: &[u32]) -> String {
    let mut s = String::new();
    for (i, &e) in exps.iter().enumerate() {
        match e {
            0 => {}
            1 => s.push_str(&format!("x{}", i + 1)),
            _ => s.push_str(&format!("x{}^{}", i + 1, e)),
        }
    }
    if s.is_empty() {
        s.push('1');
    }
    s
}

/// All monomial observables on ℝⁿ up to the given total degree, graded-lex
/// ordered: the constant first, then the coordinates, then higher degrees.
pub fn monomials(n: usize, max_degree: u32) -> Vec<Observable> {
    let mut out = Vec::new();
    for deg in 0..=max_degree {
        let mut idx = vec![0u32; n];
        emit_degree(&mut idx, 0, deg, &mut out);
    }
    out
}

fn emit_degree(idx: &mut Vec<u32>, pos: usize, remaining: u32, out: &mut Vec<Observable>) {
    if pos == idx.len() - 1 {
        idx[pos] = remaining;
        out.push(Observable::monomial(idx.clone()));
        return;
    }
    for e in (0..=remaining).rev() {
        idx[pos] = e;
        emit_degree(idx, pos + 1, remaining - e, out);
    }
}

/// Ordered observables φ₀..φ_N over ℝⁿ defining the lifting.
pub struct Dictionary {
    n: usize,
    observables: Vec<Observable>,
}

impl Dictionary {
    /// Build and validate: φ₀ ≡ 1, φ₁..φ_n are the coordinates, every
    /// non-constant observable vanishes at 0, N ≥ n, and the analytic
    /// gradients match central finite differences at random probe points.
    pub fn new(n: usize, observables: Vec<Observable>) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidDictionary("state dimension is zero".into()));
        }
        if observables.len() < n + 1 {
            return Err(Error::InvalidDictionary(format!(
                "need at least {} observables (constant + coordinates), got {}",
                n + 1,
                observables.len()
            )));
        }
        let dict = Dictionary { n, observables };

        let origin = vec![0.0; n];
        let mut rng = ChaCha8Rng::seed_from_u64(0x0b5e);
        let mut probes = vec![origin.clone()];
        for _ in 0..8 {
            probes.push((0..n).map(|_| rng.random_range(-1.0..1.0)).collect());
        }

        for (k, obs) in dict.observables.iter().enumerate() {
            for p in &probes {
                let v = obs.eval(p);
                if !v.is_finite() {
                    return Err(Error::InvalidDictionary(format!(
                        "observable {k} ('{}') is non-finite at a probe point",
                        obs.label()
                    )));
                }
                if k == 0 && (v - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidDictionary(
                        "observable 0 must be the constant 1".into(),
                    ));
                }
                if (1..=n).contains(&k) && (v - p[k - 1]).abs() > 1e-12 {
                    return Err(Error::InvalidDictionary(format!(
                        "observable {k} must be the coordinate x{k}"
                    )));
                }
            }
            if k >= 1 && obs.eval(&origin).abs() > 1e-12 {
                return Err(Error::InvalidDictionary(format!(
                    "observable {k} ('{}') does not vanish at the origin",
                    obs.label()
                )));
            }
        }

        dict.check_gradients(&probes[1..], 1e-6)?;
        Ok(dict)
    }

    /// Skip validation; for observables whose invariants are known by construction.
    pub fn new_unchecked(n: usize, observables: Vec<Observable>) -> Self {
        Dictionary { n, observables }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// N: dimension of the reduced lifting (constant observable dropped).
    pub fn reduced_dim(&self) -> usize {
        self.observables.len() - 1
    }

    pub fn full_dim(&self) -> usize {
        self.observables.len()
    }

    pub fn labels(&self) -> Vec<&str> {
        self.observables.iter().map(|o| o.label()).collect()
    }

    pub fn observable(&self, k: usize) -> &Observable {
        &self.observables[k]
    }

    /// Φ(x) = [1, xᵀ, φ_{n+1}(x), …]ᵀ ∈ ℝ^{N+1}.
    pub fn lift(&self, x: &[f64]) -> Result<DVector<f64>> {
        self.check_dim(x)?;
        let mut v = DVector::zeros(self.full_dim());
        for (k, obs) in self.observables.iter().enumerate() {
            let val = obs.eval(x);
            if !val.is_finite() {
                return Err(Error::InvalidDictionary(format!(
                    "observable {k} ('{}') evaluated to a non-finite value",
                    obs.label()
                )));
            }
            v[k] = val;
        }
        Ok(v)
    }

    /// Φ̄(x): the last N entries of Φ(x); Φ̄(0) = 0.
    pub fn lift_reduced(&self, x: &[f64]) -> Result<DVector<f64>> {
        let full = self.lift(x)?;
        Ok(full.rows(1, self.reduced_dim()).into_owned())
    }

    /// Jacobian of the full lifting: row k is ∇φ_k(x)ᵀ; row 0 is zero.
    pub fn lift_gradient(&self, x: &[f64]) -> Result<DMatrix<f64>> {
        self.check_dim(x)?;
        let mut jac = DMatrix::zeros(self.full_dim(), self.n);
        let mut row = vec![0.0; self.n];
        for (k, obs) in self.observables.iter().enumerate() {
            obs.grad_into(x, &mut row);
            for (i, &g) in row.iter().enumerate() {
                if !g.is_finite() {
                    return Err(Error::InvalidDictionary(format!(
                        "gradient of observable {k} ('{}') is non-finite",
                        obs.label()
                    )));
                }
                jac[(k, i)] = g;
            }
        }
        Ok(jac)
    }

    /// ⟨∇φ_k(x), ẋ⟩ for k = 1..N — the generator applied to the reduced
    /// lifting with the vector field read from measured derivatives.
    pub fn generator_action_reduced(&self, x: &[f64], xdot: &[f64]) -> Result<DVector<f64>> {
        if xdot.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "derivative has length {}, state dimension is {}",
                xdot.len(),
                self.n
            )));
        }
        let jac = self.lift_gradient(x)?;
        let xd = DVector::from_column_slice(xdot);
        let full = jac * xd;
        Ok(full.rows(1, self.reduced_dim()).into_owned())
    }

    pub fn selector(&self) -> StateSelector {
        StateSelector {
            n: self.n,
            reduced_dim: self.reduced_dim(),
        }
    }

    /// Compare analytic gradients against central finite differences at the
    /// given points; tolerance is relative to max(1, row norms).
    pub fn check_gradients(&self, points: &[Vec<f64>], tol: f64) -> Result<()> {
        for p in points {
            for (k, obs) in self.observables.iter().enumerate() {
                let mut analytic = vec![0.0; self.n];
                obs.grad_into(p, &mut analytic);
                let fd = finite_difference_gradient(obs, p, 1e-5);
                let diff: f64 = analytic
                    .iter()
                    .zip(&fd)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum::<f64>()
                    .sqrt();
                let scale = analytic
                    .iter()
                    .map(|a| a.abs())
                    .fold(1.0f64, f64::max);
                if diff > tol * scale {
                    return Err(Error::InvalidDictionary(format!(
                        "gradient of observable {k} ('{}') disagrees with finite \
                         differences (|Δ| = {diff:.3e})",
                        obs.label()
                    )));
                }
            }
        }
        Ok(())
    }

    fn check_dim(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.n {
            return Err(Error::DimensionMismatch(format!(
                "state has length {}, dictionary expects {}",
                x.len(),
                self.n
            )));
        }
        Ok(())
    }
}

/// Central finite-difference gradient of a single observable.
pub fn finite_difference_gradient(obs: &Observable, x: &[f64], h: f64) -> Vec<f64> {
    let mut g = vec![0.0; x.len()];
    let mut xp = x.to_vec();
    for i in 0..x.len() {
        let x0 = x[i];
        xp[i] = x0 + h;
        let fp = obs.eval(&xp);
        xp[i] = x0 - h;
        let fm = obs.eval(&xp);
        xp[i] = x0;
        g[i] = (fp - fm) / (2.0 * h);
    }
    g
}

/// S = [I_n 0]: selects the state coordinates from the reduced lifted vector,
/// so S·Φ̄(x) = x.
#[derive(Debug, Clone, Copy)]
pub struct StateSelector {
    n: usize,
    reduced_dim: usize,
}

impl StateSelector {
    pub fn apply(&self, phibar: &DVector<f64>) -> DVector<f64> {
        phibar.rows(0, self.n).into_owned()
    }

    pub fn matrix(&self) -> DMatrix<f64> {
        let mut s = DMatrix::zeros(self.n, self.reduced_dim);
        for i in 0..self.n {
            s[(i, i)] = 1.0;
        }
        s
    }
}

/// Output map y = C·Φ̄(x).
#[derive(Debug, Clone)]
pub struct OutputMap {
    c: DMatrix<f64>,
}

impl OutputMap {
    pub fn new(c: DMatrix<f64>) -> Result<Self> {
        if c.nrows() == 0 {
            return Err(Error::InvalidArgument(
                "output map needs at least one row".into(),
            ));
        }
        for i in 0..c.nrows() {
            if c.row(i).iter().all(|&v| v == 0.0) {
                return Err(Error::InvalidArgument(format!(
                    "output map row {i} is identically zero"
                )));
            }
        }
        Ok(OutputMap { c })
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.c
    }

    pub fn output_dim(&self) -> usize {
        self.c.nrows()
    }

    pub fn apply(&self, phibar: &DVector<f64>) -> DVector<f64> {
        &self.c * phibar
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn quad_dict() -> Dictionary {
        // 1, x1, x2, x1^2 on R^2
        let mut obs = vec![
            Observable::constant(),
            Observable::coordinate(0),
            Observable::coordinate(1),
        ];
        obs.push(Observable::monomial(vec![2, 0]));
        Dictionary::new(2, obs).unwrap()
    }

    #[test]
    fn lift_has_constant_leading_entry_and_vanishing_tail_at_origin() {
        let d = quad_dict();
        let phi0 = d.lift(&[0.0, 0.0]).unwrap();
        assert_eq!(phi0.as_slice(), &[1.0, 0.0, 0.0, 0.0]);
        let phibar0 = d.lift_reduced(&[0.0, 0.0]).unwrap();
        assert_eq!(phibar0.as_slice(), &[0.0, 0.0, 0.0]);
    }

    #[test]
    fn linear_dictionary_lift_is_affine_prefix() {
        let obs = vec![
            Observable::constant(),
            Observable::coordinate(0),
            Observable::coordinate(1),
        ];
        let d = Dictionary::new(2, obs).unwrap();
        let phi = d.lift(&[0.3, -0.7]).unwrap();
        assert_eq!(phi.as_slice(), &[1.0, 0.3, -0.7]);
    }

    #[test]
    fn gradient_rows() {
        let d = quad_dict();
        let jac = d.lift_gradient(&[1.0, 1.0]).unwrap();
        assert_eq!(jac.row(0).iter().copied().collect::<Vec<_>>(), [0.0, 0.0]);
        assert_eq!(jac.row(1).iter().copied().collect::<Vec<_>>(), [1.0, 0.0]);
        assert_eq!(jac.row(2).iter().copied().collect::<Vec<_>>(), [0.0, 1.0]);
        assert_eq!(jac.row(3).iter().copied().collect::<Vec<_>>(), [2.0, 0.0]);
    }

    #[test]
    fn selector_recovers_state() {
        let d = quad_dict();
        let x = [0.4, -0.9];
        let phibar = d.lift_reduced(&x).unwrap();
        let back = d.selector().apply(&phibar);
        assert_eq!(back.as_slice(), &x);
    }

    #[test]
    fn rejects_non_vanishing_observable() {
        let obs = vec![
            Observable::constant(),
            Observable::coordinate(0),
            Observable::new("x1+1", |x: &[f64]| x[0] + 1.0, |_, g| g[0] = 1.0),
        ];
        assert!(Dictionary::new(1, obs).is_err());
    }

    #[test]
    fn rejects_wrong_gradient() {
        let obs = vec![
            Observable::constant(),
            Observable::coordinate(0),
            Observable::new("x1^2", |x: &[f64]| x[0] * x[0], |_, g| g[0] = 1.0),
        ];
        assert!(Dictionary::new(1, obs).is_err());
    }

    #[test]
    fn monomial_catalog_order_and_count() {
        let ms = monomials(2, 2);
        let labels: Vec<_> = ms.iter().map(|m| m.label().to_string()).collect();
        assert_eq!(labels, ["1", "x1", "x2", "x1^2", "x1x2", "x2^2"]);
        let d = Dictionary::new(2, ms).unwrap();
        assert_eq!(d.reduced_dim(), 5);
        let phi = d.lift(&[2.0, 3.0]).unwrap();
        assert_eq!(phi.as_slice(), &[1.0, 2.0, 3.0, 4.0, 6.0, 9.0]);
    }

    #[test]
    fn monomial_gradient_matches_finite_differences_at_random_points() {
        let d = Dictionary::new(3, monomials(3, 3)).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let points: Vec<Vec<f64>> = (0..20)
            .map(|_| (0..3).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        d.check_gradients(&points, 1e-6).unwrap();
    }

    #[test]
    fn output_map_rejects_zero_row() {
        let c = DMatrix::from_row_slice(1, 3, &[0.0, 0.0, 0.0]);
        assert!(OutputMap::new(c).is_err());
        let c = DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]);
        let m = OutputMap::new(c).unwrap();
        assert_eq!(m.output_dim(), 1);
        let y = m.apply(&DVector::from_column_slice(&[2.0, 3.0, 5.0]));
        assert_relative_eq!(y[0], 5.0);
    }
}
