//! Built-in benchmark systems: a two-state polynomial system with an exactly
//! invariant quadratic lifting, and a two-CSTR-in-series chain in deviation
//! coordinates. Both expose their lifting dictionary, sampling box, and output
//! map; sampling is seeded and reproducible.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::dict::{Dictionary, Observable, OutputMap};
use crate::error::{Error, Result};
use crate::samples::SampleSet;

type VectorField = Box<dyn Fn(&[f64], &mut [f64]) + Send + Sync>;

/// A system in deviation coordinates (equilibrium at the origin) together
/// with its lifting dictionary, sampling box, and output map.
pub struct BenchmarkSystem {
    name: String,
    n: usize,
    f: VectorField,
    dict: Dictionary,
    domain: Vec<(f64, f64)>,
    output: OutputMap,
    params: Vec<(String, f64)>,
    reference_generator: Option<DMatrix<f64>>,
}

impl BenchmarkSystem {
    pub fn new(
        name: impl Into<String>,
        n: usize,
        f: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        dict: Dictionary,
        domain: Vec<(f64, f64)>,
        output: OutputMap,
    ) -> Result<Self> {
        let sys = BenchmarkSystem {
            name: name.into(),
            n,
            f: Box::new(f),
            dict,
            domain,
            output,
            params: Vec::new(),
            reference_generator: None,
        };
        let f0 = sys.f_vec(&vec![0.0; n]);
        let worst = f0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if worst > 1e-9 {
            return Err(Error::InvalidArgument(format!(
                "origin is not an equilibrium: |f(0)|_inf = {worst:.3e}"
            )));
        }
        Ok(sys)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn dict(&self) -> &Dictionary {
        &self.dict
    }

    pub fn into_dictionary(self) -> Dictionary {
        self.dict
    }

    pub fn domain(&self) -> &[(f64, f64)] {
        &self.domain
    }

    pub fn output(&self) -> &OutputMap {
        &self.output
    }

    pub fn params(&self) -> &[(String, f64)] {
        &self.params
    }

    /// Exact lifted generator, available when the dictionary is invariant.
    pub fn reference_generator(&self) -> Option<&DMatrix<f64>> {
        self.reference_generator.as_ref()
    }

    pub fn f(&self, x: &[f64], out: &mut [f64]) {
        (self.f)(x, out)
    }

    pub fn f_vec(&self, x: &[f64]) -> DVector<f64> {
        let mut out = vec![0.0; self.n];
        (self.f)(x, &mut out);
        DVector::from_vec(out)
    }
}

/// ẋ₁ = ρx₁, ẋ₂ = τ(x₂ − x₁²) with ρ, τ < 0 and τ ≠ 2ρ; the quadratic lifting
/// Φ̄ = [x₁, x₂, x₂ − τ/(τ−2ρ)·x₁²] spans an exactly invariant subspace, with
/// lifted generator [[ρ,0,0],[0,2ρ,τ−2ρ],[0,0,τ]].
pub fn example_a(rho: f64, tau: f64) -> Result<BenchmarkSystem> {
    if rho >= 0.0 || tau >= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "need rho < 0 and tau < 0 for asymptotic stability (got rho={rho}, tau={tau})"
        )));
    }
    if tau == 2.0 * rho {
        return Err(Error::InvalidArgument(
            "tau = 2*rho makes the lifting coefficient singular".into(),
        ));
    }
    let c = tau / (tau - 2.0 * rho);
    let obs = vec![
        Observable::constant(),
        Observable::coordinate(0),
        Observable::coordinate(1),
        Observable::new(
            format!("x2{}{:.6}*x1^2", if c >= 0.0 { "-" } else { "+" }, c.abs()),
            move |x: &[f64]| x[1] - c * x[0] * x[0],
            move |x: &[f64], g: &mut [f64]| {
                g[0] = -2.0 * c * x[0];
                g[1] = 1.0;
            },
        ),
    ];
    let dict = Dictionary::new(2, obs)?;
    let output = OutputMap::new(DMatrix::from_row_slice(1, 3, &[1.0, 1.0, 0.0]))?;
    let reference = DMatrix::from_row_slice(
        3,
        3,
        &[rho, 0.0, 0.0, 0.0, 2.0 * rho, tau - 2.0 * rho, 0.0, 0.0, tau],
    );
    let mut sys = BenchmarkSystem::new(
        "example-a",
        2,
        move |x: &[f64], out: &mut [f64]| {
            out[0] = rho * x[0];
            out[1] = tau * (x[1] - x[0] * x[0]);
        },
        dict,
        vec![(-1.0, 1.0), (-1.0, 1.0)],
        output,
    )?;
    sys.params = vec![("rho".into(), rho), ("tau".into(), tau)];
    sys.reference_generator = Some(reference);
    Ok(sys)
}

/// Physical parameters of the two-CSTR chain. Defaults are the benchmark's
/// table values; concentrations kmol/m³, flows m³/h, volumes m³, temperatures
/// K, activation energy kJ/kmol scaled consistently with R in kJ/(kmol·K).
#[derive(Debug, Clone, Copy)]
pub struct CstrParams {
    pub t1: f64,
    pub t2: f64,
    pub f10: f64,
    pub f20: f64,
    pub v1: f64,
    pub v2: f64,
    pub ca1s: f64,
    pub ca2s: f64,
    pub k0: f64,
    pub e_act: f64,
    pub r_gas: f64,
}

impl Default for CstrParams {
    fn default() -> Self {
        CstrParams {
            t1: 400.0,
            t2: 300.0,
            f10: 5.0,
            f20: 5.0,
            v1: 1.0,
            v2: 1.0,
            ca1s: 2.0000,
            ca2s: 2.9852,
            k0: 8.46e6,
            e_act: 5e4,
            r_gas: 8.314,
        }
    }
}

/// Arrhenius rate k₀·e^{−E/(RT)}.
pub fn rate_constant(k0: f64, e_act: f64, r_gas: f64, temp: f64) -> f64 {
    k0 * (-e_act / (r_gas * temp)).exp()
}

/// Inlet concentrations implied by the quoted steady state: back-solve both
/// balances at equilibrium. The table lists steady-state concentrations but
/// not the inlets, so these are reconstructed rather than hard-coded.
pub fn reconstruct_inlets(p: &CstrParams) -> (f64, f64) {
    let k1 = rate_constant(p.k0, p.e_act, p.r_gas, p.t1);
    let k2 = rate_constant(p.k0, p.e_act, p.r_gas, p.t2);
    let ca10 = p.ca1s + p.v1 / p.f10 * k1 * p.ca1s * p.ca1s;
    let ca20 = ((p.f10 + p.f20) * p.ca2s + p.v2 * k2 * p.ca2s * p.ca2s - p.f10 * p.ca1s) / p.f20;
    (ca10, ca20)
}

/// Right-hand side of both balances evaluated at the steady state for the
/// given inlets — how far the quoted equilibrium is from exact.
pub fn steady_state_residual(p: &CstrParams, inlets: (f64, f64)) -> (f64, f64) {
    let k1 = rate_constant(p.k0, p.e_act, p.r_gas, p.t1);
    let k2 = rate_constant(p.k0, p.e_act, p.r_gas, p.t2);
    let f1 = p.f10 / p.v1 * (inlets.0 - p.ca1s) - k1 * p.ca1s * p.ca1s;
    let f2 = p.f20 / p.v2 * inlets.1 + p.f10 / p.v2 * p.ca1s
        - (p.f10 + p.f20) / p.v2 * p.ca2s
        - k2 * p.ca2s * p.ca2s;
    (f1, f2)
}

/// Two CSTRs in series in deviation coordinates x = (C_A1 − C_A1s, C_A2 − C_A2s),
/// quadratic lifting Φ̄ = [x₁, x₂, x₁², x₂², x₁x₂] (not exactly invariant),
/// output y measuring x₂ + x₁², sampling box ±0.05 around the steady state.
pub fn cstr_chain(p: CstrParams, inlets: (f64, f64)) -> Result<BenchmarkSystem> {
    if [p.t1, p.t2, p.f10, p.f20, p.v1, p.v2, p.ca1s, p.ca2s, p.k0, p.e_act, p.r_gas]
        .iter()
        .any(|&v| v <= 0.0)
    {
        return Err(Error::InvalidArgument(
            "all CSTR physical parameters must be positive".into(),
        ));
    }
    let (r1, r2) = steady_state_residual(&p, inlets);
    let worst = r1.abs().max(r2.abs());
    if worst > 1e-6 {
        return Err(Error::InvalidArgument(format!(
            "inlets ({}, {}) are inconsistent with the quoted steady state: \
             |f(0)|_inf = {worst:.3e} (reconstruct_inlets gives a consistent pair)",
            inlets.0, inlets.1
        )));
    }
    let k1 = rate_constant(p.k0, p.e_act, p.r_gas, p.t1);
    let k2 = rate_constant(p.k0, p.e_act, p.r_gas, p.t2);
    let obs = vec![
        Observable::constant(),
        Observable::coordinate(0),
        Observable::coordinate(1),
        Observable::monomial(vec![2, 0]),
        Observable::monomial(vec![0, 2]),
        Observable::monomial(vec![1, 1]),
    ];
    let dict = Dictionary::new(2, obs)?;
    let output = OutputMap::new(DMatrix::from_row_slice(1, 5, &[0.0, 1.0, 1.0, 0.0, 0.0]))?;
    let (ca10, ca20) = inlets;
    let mut sys = BenchmarkSystem::new(
        "cstr",
        2,
        move |x: &[f64], out: &mut [f64]| {
            let ca1 = x[0] + p.ca1s;
            let ca2 = x[1] + p.ca2s;
            out[0] = p.f10 / p.v1 * (ca10 - ca1) - k1 * ca1 * ca1;
            out[1] = p.f20 / p.v2 * ca20 + p.f10 / p.v2 * ca1
                - (p.f10 + p.f20) / p.v2 * ca2
                - k2 * ca2 * ca2;
        },
        dict,
        vec![(-0.05, 0.05), (-0.05, 0.05)],
        output,
    )?;
    sys.params = vec![
        ("t1".into(), p.t1),
        ("t2".into(), p.t2),
        ("f10".into(), p.f10),
        ("f20".into(), p.f20),
        ("v1".into(), p.v1),
        ("v2".into(), p.v2),
        ("ca1s".into(), p.ca1s),
        ("ca2s".into(), p.ca2s),
        ("k0".into(), p.k0),
        ("e_act".into(), p.e_act),
        ("r_gas".into(), p.r_gas),
        ("ca10".into(), ca10),
        ("ca20".into(), ca20),
    ];
    Ok(sys)
}

/// Resolve a built-in system by name ("example-a" or "cstr").
pub fn by_name(name: &str) -> Result<BenchmarkSystem> {
    match name {
        "example-a" => example_a(-2.0, -1.0),
        "cstr" => {
            let p = CstrParams::default();
            let inlets = reconstruct_inlets(&p);
            cstr_chain(p, inlets)
        }
        other => Err(Error::Config(format!(
            "unknown system '{other}' (built-ins: example-a, cstr)"
        ))),
    }
}

/// d i.i.d. uniform draws on the system's sampling box with ẋ = f(x);
/// deterministic per seed.
pub fn sample_uniform(system: &BenchmarkSystem, d: usize, seed: u64) -> Result<SampleSet> {
    if d == 0 {
        return Err(Error::InvalidArgument("sample count must be >= 1".into()));
    }
    let n = system.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut states = Vec::with_capacity(d * n);
    let mut derivs = Vec::with_capacity(d * n);
    let mut x = vec![0.0; n];
    let mut xdot = vec![0.0; n];
    for _ in 0..d {
        for (i, &(lo, hi)) in system.domain().iter().enumerate() {
            x[i] = lo + (hi - lo) * rng.random::<f64>();
        }
        system.f(&x, &mut xdot);
        states.extend_from_slice(&x);
        derivs.extend_from_slice(&xdot);
    }
    Ok(SampleSet::new(n, states, derivs)?
        .with_seed(seed)
        .with_domain(system.domain().to_vec()))
}

/// d uniform draws of initial states on the box (no derivatives); used to
/// seed simulation runs.
pub fn sample_initial_states(system: &BenchmarkSystem, d: usize, seed: u64) -> Vec<Vec<f64>> {
    let n = system.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(d);
    for _ in 0..d {
        let mut x = vec![0.0; n];
        for (i, &(lo, hi)) in system.domain().iter().enumerate() {
            x[i] = lo + (hi - lo) * rng.random::<f64>();
        }
        out.push(x);
    }
    out
}
