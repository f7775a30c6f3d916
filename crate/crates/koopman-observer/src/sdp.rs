//! A small dense semidefinite-program solver: maximize cᵀv subject to affine
//! symmetric matrix constraints (⪯ 0 / ⪰ 0) and linear equalities.
//!
//! The method is a log-det barrier path-following scheme with equality-
//! constrained Newton centering. Every variable carries an implicit box
//! |v_k| ≤ var_bound so the barrier domain is compact (otherwise −log det is
//! unbounded along directions that only grow slacks). Strict feasibility is
//! obtained by a uniform-slack phase 1 when the caller cannot provide an
//! interior starting point; phase 1 also certifies infeasibility through its
//! duality gap. "Optimal" results are never trusted from the solver loop:
//! each constraint is re-evaluated by an eigenvalue check and the status is
//! downgraded if anything fails.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::linalg::{pseudoinverse, sym_eig_max, sym_eig_min};

/// Constraint sense: the affine matrix expression is ⪯ 0 or ⪰ 0.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Sense {
    NegSemidef,
    PosSemidef,
}

/// F(v) = constant + Σ v_k·coeff_k, constrained to the given sense.
#[derive(Debug, Clone)]
pub struct AffineMatrixConstraint {
    pub constant: DMatrix<f64>,
    pub coeffs: Vec<(usize, DMatrix<f64>)>,
    pub sense: Sense,
}

impl AffineMatrixConstraint {
    pub fn neg_semidef(constant: DMatrix<f64>, coeffs: Vec<(usize, DMatrix<f64>)>) -> Self {
        AffineMatrixConstraint {
            constant,
            coeffs,
            sense: Sense::NegSemidef,
        }
    }

    pub fn pos_semidef(constant: DMatrix<f64>, coeffs: Vec<(usize, DMatrix<f64>)>) -> Self {
        AffineMatrixConstraint {
            constant,
            coeffs,
            sense: Sense::PosSemidef,
        }
    }

    pub fn eval(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let mut m = self.constant.clone();
        for (k, c) in &self.coeffs {
            m += c * v[*k];
        }
        m
    }

    fn validate(&self, nvars: usize) -> Result<()> {
        let k = self.constant.nrows();
        if self.constant.ncols() != k {
            return Err(Error::DimensionMismatch(
                "constraint constant is not square".into(),
            ));
        }
        let sym_tol = 1e-12 * (1.0 + self.constant.amax());
        if (&self.constant - self.constant.transpose()).amax() > sym_tol {
            return Err(Error::InvalidArgument(
                "constraint constant is not symmetric".into(),
            ));
        }
        for (id, c) in &self.coeffs {
            if *id >= nvars {
                return Err(Error::DimensionMismatch(format!(
                    "constraint references variable {id}, but there are only {nvars}"
                )));
            }
            if c.nrows() != k || c.ncols() != k {
                return Err(Error::DimensionMismatch(
                    "coefficient dimension differs from the constant's".into(),
                ));
            }
            if (c - c.transpose()).amax() > 1e-12 * (1.0 + c.amax()) {
                return Err(Error::InvalidArgument(
                    "constraint coefficient is not symmetric".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Σ coeffs·v = rhs.
#[derive(Debug, Clone)]
pub struct LinearEquality {
    pub coeffs: Vec<(usize, f64)>,
    pub rhs: f64,
}

#[derive(Debug, Clone)]
pub struct SdpOptions {
    pub max_iter: usize,
    pub tol_feas: f64,
    pub tol_gap: f64,
    /// Implicit bound |v_k| ≤ var_bound keeping the barrier domain compact.
    pub var_bound: f64,
    /// Strictly feasible warm start (must satisfy the equalities); phase 1 is
    /// skipped when it is interior.
    pub initial_point: Option<DVector<f64>>,
}

impl Default for SdpOptions {
    fn default() -> Self {
        SdpOptions {
            max_iter: 500,
            tol_feas: 1e-8,
            tol_gap: 1e-9,
            var_bound: 1e4,
            initial_point: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SdpStatus {
    Optimal,
    InfeasibleCertified,
    MaxIterations,
}

#[derive(Debug, Clone)]
pub struct SdpSolution {
    pub values: DVector<f64>,
    pub objective: f64,
    pub status: SdpStatus,
    /// Total Newton steps across both phases.
    pub iterations: usize,
    /// Worst constraint-side eigenvalue violation at the returned point.
    pub primal_residual: f64,
    pub equality_residual: f64,
    /// Barrier duality-gap estimate at termination.
    pub gap: f64,
    /// Objective value after each phase-2 centering (monotone for a working
    /// path-follower).
    pub centering_objectives: Vec<f64>,
}

/// Canonical block: F(v) ⪯ 0.
struct Block {
    constant: DMatrix<f64>,
    coeffs: Vec<(usize, DMatrix<f64>)>,
}

impl Block {
    fn slack(&self, v: &DVector<f64>) -> DMatrix<f64> {
        let mut s = -self.constant.clone();
        for (k, c) in &self.coeffs {
            s -= c * v[*k];
        }
        s
    }

    fn dim(&self) -> usize {
        self.constant.nrows()
    }
}

fn canonicalize(constraints: &[AffineMatrixConstraint]) -> Vec<Block> {
    constraints
        .iter()
        .map(|c| match c.sense {
            Sense::NegSemidef => Block {
                constant: c.constant.clone(),
                coeffs: c.coeffs.clone(),
            },
            Sense::PosSemidef => Block {
                constant: -c.constant.clone(),
                coeffs: c.coeffs.iter().map(|(k, m)| (*k, -m)).collect(),
            },
        })
        .collect()
}

fn box_blocks(nvars: usize, bound: f64) -> Vec<Block> {
    let mut out = Vec::with_capacity(2 * nvars);
    for k in 0..nvars {
        out.push(Block {
            constant: DMatrix::from_element(1, 1, -bound),
            coeffs: vec![(k, DMatrix::from_element(1, 1, 1.0))],
        });
        out.push(Block {
            constant: DMatrix::from_element(1, 1, -bound),
            coeffs: vec![(k, DMatrix::from_element(1, 1, -1.0))],
        });
    }
    out
}

/// All slacks PD (by Cholesky) — strict interiority.
fn interior(blocks: &[Block], v: &DVector<f64>) -> bool {
    blocks.iter().all(|b| b.slack(v).cholesky().is_some())
}

fn log_det_sum(blocks: &[Block], v: &DVector<f64>) -> Option<f64> {
    let mut total = 0.0;
    for b in blocks {
        let chol = b.slack(v).cholesky()?;
        total += 2.0 * chol.l().diagonal().iter().map(|d| d.ln()).sum::<f64>();
    }
    Some(total)
}

struct KktContext<'a> {
    blocks: &'a [Block],
    eq_a: &'a DMatrix<f64>,
    /// Pseudoinverse of eq_a, used to project Newton directions exactly onto
    /// the equality manifold's null space (the ridge-regularized KKT solve
    /// alone lets iterates drift off it).
    eq_pinv: Option<&'a DMatrix<f64>>,
    c: &'a DVector<f64>,
    nvars: usize,
}

enum StepOutcome {
    /// Newton decrement below threshold: the iterate is (numerically) central.
    Centered,
    Progress,
    /// No usable descent left at this τ (noise floor); not certificate-grade.
    Stuck,
    /// Linear algebra or line search failure.
    Stalled,
}

impl KktContext<'_> {
    /// Barrier objective f_τ(v) = −τ·cᵀv − Σ log det S(v); None outside the domain.
    fn barrier_value(&self, tau: f64, v: &DVector<f64>) -> Option<f64> {
        Some(-tau * self.c.dot(v) - log_det_sum(self.blocks, v)?)
    }

    /// One equality-respecting Newton step on the τ-barrier.
    fn newton_step(&self, tau: f64, v: &mut DVector<f64>) -> StepOutcome {
        let n = self.nvars;
        let mut grad = -self.c * tau;
        let mut hess = DMatrix::<f64>::zeros(n, n);
        for b in self.blocks {
            let s = b.slack(v);
            let Some(chol) = s.cholesky() else {
                return StepOutcome::Stalled;
            };
            let w = chol.inverse();
            let ms: Vec<(usize, DMatrix<f64>)> = b
                .coeffs
                .iter()
                .map(|(k, f)| (*k, &w * f))
                .collect();
            for (k, m) in &ms {
                grad[*k] += m.trace();
            }
            for i in 0..ms.len() {
                let (ki, mi) = &ms[i];
                let mi_t = mi.transpose();
                for (kj, mj) in ms.iter().skip(i) {
                    let t = mi_t.component_mul(mj).sum();
                    hess[(*ki, *kj)] += t;
                    if ki != kj {
                        hess[(*kj, *ki)] += t;
                    }
                }
            }
        }

        // Jacobi scaling tames the wild diagonal spread (box-only variables
        // have H_kk ~ 1/bound² while active slacks push 1/s²); the equality
        // rows are folded into one symmetric indefinite KKT matrix solved by
        // pivoted LU — a Schur-complement route cancels catastrophically here.
        let d: DVector<f64> = DVector::from_fn(n, |k, _| {
            let h = hess[(k, k)];
            if h > 1e-300 {
                1.0 / h.sqrt()
            } else {
                1.0
            }
        });
        let p = self.eq_a.nrows();
        let dim = n + p;
        let mut rhs = DVector::zeros(dim);
        for k in 0..n {
            rhs[k] = -grad[k] * d[k];
        }
        let mut delta = None;
        for ridge in [1e-14, 1e-10, 1e-6] {
            let mut kkt = DMatrix::zeros(dim, dim);
            for i in 0..n {
                for j in 0..n {
                    kkt[(i, j)] = hess[(i, j)] * d[i] * d[j];
                }
                kkt[(i, i)] += ridge;
            }
            for r in 0..p {
                // scale each equality row to unit norm in the scaled variables
                let mut row: Vec<f64> = (0..n).map(|k| self.eq_a[(r, k)] * d[k]).collect();
                let nrm = row.iter().map(|v| v * v).sum::<f64>().sqrt().max(1e-300);
                for v in &mut row {
                    *v /= nrm;
                }
                for k in 0..n {
                    kkt[(n + r, k)] = row[k];
                    kkt[(k, n + r)] = row[k];
                }
            }
            let lu = kkt.lu();
            if let Some(z) = lu.solve(&rhs) {
                if z.iter().all(|v| v.is_finite()) {
                    let mut dv = DVector::zeros(n);
                    for k in 0..n {
                        dv[k] = z[k] * d[k];
                    }
                    delta = Some(dv);
                    break;
                }
            }
        }
        let Some(mut delta) = delta else {
            return StepOutcome::Stalled;
        };
        if let Some(pinv) = self.eq_pinv {
            delta -= pinv * (self.eq_a * &delta);
        }

        let lambda_sq = (&hess * &delta).dot(&delta);
        if !lambda_sq.is_finite() {
            return StepOutcome::Stalled;
        }
        if std::env::var_os("SDP_TRACE").is_some() {
            eprintln!("tau={tau:.3e} lambda_sq={lambda_sq:.6e} v={:?}", v.as_slice());
        }
        if lambda_sq / 2.0 <= 1e-10 {
            return StepOutcome::Centered;
        }

        // backtrack into the PD domain, then Armijo on the barrier objective
        let f0 = match self.barrier_value(tau, v) {
            Some(f) => f,
            None => return StepOutcome::Stalled,
        };
        let slope = grad.dot(&delta); // = −λ² on the equality manifold
        if slope >= 0.0 {
            // the computed direction is not a descent direction: round-off has
            // swamped the solve, so this is the noise floor for the current τ
            return StepOutcome::Stuck;
        }
        let mut sigma = 1.0;
        loop {
            let trial = &*v + &delta * sigma;
            if interior(self.blocks, &trial) {
                break;
            }
            sigma *= 0.8;
            if sigma < 1e-14 {
                return StepOutcome::Stalled;
            }
        }
        loop {
            let trial = &*v + &delta * sigma;
            if let Some(f) = self.barrier_value(tau, &trial) {
                if f <= f0 + 0.25 * sigma * slope {
                    if f0 - f <= 1e-14 * (1.0 + f0.abs()) {
                        return StepOutcome::Stuck;
                    }
                    *v = trial;
                    return StepOutcome::Progress;
                }
            }
            sigma *= 0.5;
            if sigma < 1e-14 {
                return StepOutcome::Stalled;
            }
        }
    }

    /// Newton iterations at fixed τ until centered, stalled, or out of budget.
    fn center(&self, tau: f64, v: &mut DVector<f64>, budget: &mut usize) -> StepOutcome {
        loop {
            if *budget == 0 {
                return StepOutcome::Stalled;
            }
            *budget -= 1;
            match self.newton_step(tau, v) {
                StepOutcome::Centered => return StepOutcome::Centered,
                StepOutcome::Stuck => return StepOutcome::Stuck,
                StepOutcome::Stalled => return StepOutcome::Stalled,
                StepOutcome::Progress => {}
            }
        }
    }
}

enum Phase1Outcome {
    Feasible(DVector<f64>),
    Infeasible { slack: f64, gap: f64 },
    Stalled,
}

/// Minimize a uniform slack s over all blocks; exit as soon as the iterate is
/// strictly inside the original constraints, certify infeasibility when the
/// centered slack minus the duality gap stays positive.
fn phase1(
    blocks: &[Block],
    eq_a: &DMatrix<f64>,
    eq_pinv: Option<&DMatrix<f64>>,
    v0: &DVector<f64>,
    budget: &mut usize,
) -> Phase1Outcome {
    let nvars = v0.len();
    let s_idx = nvars;
    let aug_blocks: Vec<Block> = blocks
        .iter()
        .map(|b| {
            let k = b.dim();
            let mut coeffs = b.coeffs.clone();
            coeffs.push((s_idx, -DMatrix::identity(k, k)));
            Block {
                constant: b.constant.clone(),
                coeffs,
            }
        })
        .collect();
    let s0 = blocks
        .iter()
        .map(|b| sym_eig_max(&(-b.slack(v0))))
        .fold(f64::NEG_INFINITY, f64::max)
        + 1.0;
    let mut v = v0.clone().insert_row(s_idx, s0);

    // equalities untouched: pad with a zero column for s (and the projector
    // with a zero row — the pseudoinverse of [A 0] is [A⁺; 0])
    let eq_aug = if eq_a.nrows() == 0 {
        DMatrix::zeros(0, nvars + 1)
    } else {
        eq_a.clone().insert_column(nvars, 0.0)
    };
    let pinv_aug = eq_pinv.map(|p| p.clone().insert_row(nvars, 0.0));
    let mut c = DVector::zeros(nvars + 1);
    c[s_idx] = -1.0; // maximize −s

    let ctx = KktContext {
        blocks: &aug_blocks,
        eq_a: &eq_aug,
        eq_pinv: pinv_aug.as_ref(),
        c: &c,
        nvars: nvars + 1,
    };
    let m_total: f64 = aug_blocks.iter().map(|b| b.dim() as f64).sum();
    let mut tau = 1.0;
    loop {
        let outcome = ctx.center(tau, &mut v, budget);
        let s = v[s_idx];
        if s <= -1e-9 {
            return Phase1Outcome::Feasible(v.rows(0, nvars).into_owned());
        }
        let gap = m_total / tau;
        if matches!(outcome, StepOutcome::Centered) && s - gap > 0.0 {
            return Phase1Outcome::Infeasible { slack: s, gap };
        }
        if matches!(outcome, StepOutcome::Stalled) || *budget == 0 {
            return Phase1Outcome::Stalled;
        }
        if gap <= 1e-12 {
            // slack pinned to ~0 from above: numerically on the boundary,
            // treat as infeasible-for-strict-interior
            return if s > 0.0 {
                Phase1Outcome::Infeasible { slack: s, gap }
            } else {
                Phase1Outcome::Feasible(v.rows(0, nvars).into_owned())
            };
        }
        tau *= 10.0;
    }
}

/// Maximize cᵀv subject to the given matrix constraints and equalities.
pub fn solve(
    constraints: &[AffineMatrixConstraint],
    equalities: &[LinearEquality],
    objective: &DVector<f64>,
    opts: &SdpOptions,
) -> Result<SdpSolution> {
    let nvars = objective.len();
    if nvars == 0 {
        return Err(Error::InvalidArgument("no decision variables".into()));
    }
    if constraints.is_empty() {
        return Err(Error::InvalidArgument(
            "need at least one matrix constraint".into(),
        ));
    }
    for c in constraints {
        c.validate(nvars)?;
    }
    let mut eq_a = DMatrix::zeros(equalities.len(), nvars);
    let mut eq_b = DVector::zeros(equalities.len());
    for (i, eq) in equalities.iter().enumerate() {
        for (k, coeff) in &eq.coeffs {
            if *k >= nvars {
                return Err(Error::DimensionMismatch(format!(
                    "equality references variable {k}, but there are only {nvars}"
                )));
            }
            eq_a[(i, *k)] += coeff;
        }
        eq_b[i] = eq.rhs;
    }

    let user_blocks = canonicalize(constraints);
    let mut blocks = user_blocks;
    blocks.extend(box_blocks(nvars, opts.var_bound));

    let eq_pinv = if eq_a.nrows() == 0 {
        None
    } else {
        Some(pseudoinverse(&eq_a, 1e-12)?.0)
    };

    // starting point: caller's warm start when interior, else the min-norm
    // equality solution pushed inside by phase 1
    let mut budget = opts.max_iter;
    let warm_ok = opts.initial_point.as_ref().is_some_and(|p| {
        p.len() == nvars
            && (eq_a.nrows() == 0 || (&eq_a * p - &eq_b).amax() < 1e-9 * (1.0 + eq_b.amax()))
            && interior(&blocks, p)
    });
    let v_start = if warm_ok {
        opts.initial_point.clone().unwrap()
    } else {
        let v0 = match &eq_pinv {
            None => DVector::zeros(nvars),
            Some(pinv) => pinv * &eq_b,
        };
        let strict = interior(&blocks, &v0)
            && blocks
                .iter()
                .map(|b| sym_eig_min(&b.slack(&v0)))
                .fold(f64::INFINITY, f64::min)
                > 1e-8;
        if strict {
            v0
        } else {
            match phase1(&blocks, &eq_a, eq_pinv.as_ref(), &v0, &mut budget) {
                Phase1Outcome::Feasible(v) => v,
                Phase1Outcome::Infeasible { slack, gap } => {
                    return Ok(SdpSolution {
                        values: v0.clone(),
                        objective: f64::NEG_INFINITY,
                        status: SdpStatus::InfeasibleCertified,
                        iterations: opts.max_iter - budget,
                        primal_residual: slack,
                        equality_residual: if eq_a.nrows() == 0 {
                            0.0
                        } else {
                            (&eq_a * &v0 - &eq_b).amax()
                        },
                        gap,
                        centering_objectives: Vec::new(),
                    });
                }
                Phase1Outcome::Stalled => {
                    return Ok(finish(
                        constraints,
                        &eq_a,
                        &eq_b,
                        objective,
                        v0,
                        SdpStatus::MaxIterations,
                        opts.max_iter - budget,
                        f64::INFINITY,
                        Vec::new(),
                        opts,
                    ));
                }
            }
        }
    };

    // phase 2: path following on the real objective
    let ctx = KktContext {
        blocks: &blocks,
        eq_a: &eq_a,
        eq_pinv: eq_pinv.as_ref(),
        c: objective,
        nvars,
    };
    let m_total: f64 = blocks.iter().map(|b| b.dim() as f64).sum();
    let mut v = v_start;
    let mut tau = 1.0;
    let mut centering_objectives = Vec::new();
    let mut gap;
    let status = loop {
        let outcome = ctx.center(tau, &mut v, &mut budget);
        centering_objectives.push(objective.dot(&v));
        gap = m_total / tau;
        match outcome {
            // Stuck means the noise floor at this τ — the iterate is as close
            // to central as f64 allows, so continue the path like Centered
            StepOutcome::Centered | StepOutcome::Stuck => {
                if gap <= opts.tol_gap {
                    break SdpStatus::Optimal;
                }
            }
            StepOutcome::Stalled => {
                // honest termination: accept what we have if the gap is already
                // small and the recheck below passes, otherwise flag it
                break if gap <= 1e-6 {
                    SdpStatus::Optimal
                } else {
                    SdpStatus::MaxIterations
                };
            }
            StepOutcome::Progress => unreachable!("center loops until terminal"),
        }
        if budget == 0 {
            break SdpStatus::MaxIterations;
        }
        tau *= 10.0;
        if tau > 1e18 {
            break SdpStatus::Optimal;
        }
    };

    Ok(finish(
        constraints,
        &eq_a,
        &eq_b,
        objective,
        v,
        status,
        opts.max_iter - budget,
        gap,
        centering_objectives,
        opts,
    ))
}

/// Assemble the solution record, re-checking every constraint by direct
/// eigenvalue evaluation and downgrading "optimal" when anything fails.
#[allow(clippy::too_many_arguments)]
fn finish(
    constraints: &[AffineMatrixConstraint],
    eq_a: &DMatrix<f64>,
    eq_b: &DVector<f64>,
    objective: &DVector<f64>,
    v: DVector<f64>,
    status: SdpStatus,
    iterations: usize,
    gap: f64,
    centering_objectives: Vec<f64>,
    opts: &SdpOptions,
) -> SdpSolution {
    let mut primal = 0.0f64;
    for c in constraints {
        let m = c.eval(&v);
        let violation = match c.sense {
            Sense::NegSemidef => sym_eig_max(&m),
            Sense::PosSemidef => -sym_eig_min(&m),
        };
        primal = primal.max(violation);
    }
    let eq_res = if eq_a.nrows() == 0 {
        0.0
    } else {
        (eq_a * &v - eq_b).amax()
    };
    let mut status = status;
    if status == SdpStatus::Optimal
        && (primal > opts.tol_feas || eq_res > opts.tol_feas * (1.0 + eq_b.amax()))
    {
        status = SdpStatus::MaxIterations;
    }
    SdpSolution {
        objective: objective.dot(&v),
        values: v,
        status,
        iterations,
        primal_residual: primal,
        equality_residual: eq_res,
        gap,
        centering_objectives,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn m1(v: f64) -> DMatrix<f64> {
        DMatrix::from_element(1, 1, v)
    }

    #[test]
    fn scalar_max_slack() {
        // max t s.t. −1 + t ≤ 0
        let cons = vec![AffineMatrixConstraint::neg_semidef(
            m1(-1.0),
            vec![(0, m1(1.0))],
        )];
        let sol = solve(&cons, &[], &DVector::from_vec(vec![1.0]), &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert_relative_eq!(sol.objective, 1.0, epsilon = 1e-6);
    }

    #[test]
    fn matrix_max_slack_hits_min_eigenvalue() {
        // max t s.t. diag(−3,−5) + tI ⪯ 0 ⇒ t* = 3
        let a0 = DMatrix::from_row_slice(2, 2, &[-3.0, 0.0, 0.0, -5.0]);
        let cons = vec![AffineMatrixConstraint::neg_semidef(
            a0,
            vec![(0, DMatrix::identity(2, 2))],
        )];
        let sol = solve(&cons, &[], &DVector::from_vec(vec![1.0]), &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert_relative_eq!(sol.objective, 3.0, epsilon = 1e-6);
    }

    #[test]
    fn contradictory_scalars_certified_infeasible() {
        // t ≤ 0 and t ≥ 1 cannot hold together
        let cons = vec![
            AffineMatrixConstraint::neg_semidef(m1(0.0), vec![(0, m1(1.0))]),
            AffineMatrixConstraint::pos_semidef(m1(-1.0), vec![(0, m1(1.0))]),
        ];
        let sol = solve(&cons, &[], &DVector::from_vec(vec![1.0]), &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::InfeasibleCertified);
    }

    #[test]
    fn pos_semidef_sense() {
        // max t s.t. 5 − t ≥ 0 ⇒ t* = 5
        let cons = vec![AffineMatrixConstraint::pos_semidef(
            m1(5.0),
            vec![(0, m1(-1.0))],
        )];
        let sol = solve(&cons, &[], &DVector::from_vec(vec![1.0]), &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert_relative_eq!(sol.objective, 5.0, epsilon = 1e-6);
    }

    #[test]
    fn equality_constrained_optimum() {
        // max x s.t. x + y = 1, y + 3 ≥ 0 ⇒ x* = 4 at y = −3
        let cons = vec![AffineMatrixConstraint::pos_semidef(
            m1(3.0),
            vec![(1, m1(1.0))],
        )];
        let eqs = vec![LinearEquality {
            coeffs: vec![(0, 1.0), (1, 1.0)],
            rhs: 1.0,
        }];
        let sol = solve(
            &cons,
            &eqs,
            &DVector::from_vec(vec![1.0, 0.0]),
            &SdpOptions::default(),
        )
        .unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert_relative_eq!(sol.objective, 4.0, epsilon = 1e-5);
        assert_relative_eq!(sol.values[0] + sol.values[1], 1.0, epsilon = 1e-9);
    }

    #[test]
    fn coupled_block_problem() {
        // max t s.t. [[−2, t],[t, −2]] ⪯ 0 ⇒ |t| ≤ 2, t* = 2
        let mut off = DMatrix::zeros(2, 2);
        off[(0, 1)] = 1.0;
        off[(1, 0)] = 1.0;
        let cons = vec![AffineMatrixConstraint::neg_semidef(
            DMatrix::from_row_slice(2, 2, &[-2.0, 0.0, 0.0, -2.0]),
            vec![(0, off)],
        )];
        let sol = solve(&cons, &[], &DVector::from_vec(vec![1.0]), &SdpOptions::default()).unwrap();
        assert_eq!(sol.status, SdpStatus::Optimal);
        assert_relative_eq!(sol.objective, 2.0, epsilon = 1e-6);
    }

    #[test]
    fn warm_start_is_used_and_deterministic() {
        let a0 = DMatrix::from_row_slice(2, 2, &[-3.0, 0.0, 0.0, -5.0]);
        let cons = vec![AffineMatrixConstraint::neg_semidef(
            a0,
            vec![(0, DMatrix::identity(2, 2))],
        )];
        let mut opts = SdpOptions::default();
        opts.initial_point = Some(DVector::from_vec(vec![1.0]));
        let s1 = solve(&cons, &[], &DVector::from_vec(vec![1.0]), &opts).unwrap();
        let s2 = solve(&cons, &[], &DVector::from_vec(vec![1.0]), &opts).unwrap();
        assert_eq!(s1.values.as_slice(), s2.values.as_slice());
        assert_eq!(s1.status, SdpStatus::Optimal);
        assert_relative_eq!(s1.objective, 3.0, epsilon = 1e-6);
    }

    #[test]
    fn centering_objectives_are_monotone() {
        let a0 = DMatrix::from_row_slice(2, 2, &[-3.0, 0.0, 0.0, -5.0]);
        let cons = vec![AffineMatrixConstraint::neg_semidef(
            a0,
            vec![(0, DMatrix::identity(2, 2))],
        )];
        let sol = solve(&cons, &[], &DVector::from_vec(vec![1.0]), &SdpOptions::default()).unwrap();
        for w in sol.centering_objectives.windows(2) {
            assert!(w[1] >= w[0] - 1e-9, "objective regressed: {w:?}");
        }
    }

    #[test]
    fn rejects_asymmetric_input() {
        let bad = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0]);
        let cons = vec![AffineMatrixConstraint::neg_semidef(bad, vec![])];
        assert!(solve(&cons, &[], &DVector::from_vec(vec![1.0]), &SdpOptions::default()).is_err());
    }
}
