//! Synthesize an observer gain with a certified exponential decay rate by
//! solving the max-slack matrix-inequality program, then verify the returned
//! certificate independently.
//!
//! Run with: cargo run --example synthesize

use koopman_observer::edmd::{build_data_matrices, empirical_remainder_bound, fit_generator};
use koopman_observer::linalg::spectral_abscissa;
use koopman_observer::lmi::{certify, preflight_check, solve_feasibility, LmiProblem};
use koopman_observer::systems::{by_name, sample_uniform};

fn main() -> koopman_observer::error::Result<()> {
    let system = by_name("example-a")?;
    let samples = sample_uniform(&system, 5000, 1)?;
    let (x, y) = build_data_matrices(system.dict(), &samples)?;
    let fit = fit_generator(&x, &y, 1e-10)?;
    let validation = sample_uniform(&system, 1000, 2)?;
    let c_r = empirical_remainder_bound(system.dict(), &fit.a, &validation)?;

    let a = fit.a;
    let c = system.output().matrix().clone();
    println!("open-loop spectral abscissa: {:.4}", spectral_abscissa(&a));
    println!("remainder bound c_r = {:.3e}\n", c_r);

    // The decay rate is limited by the open-loop lifted spectrum: the error
    // dynamics A - LC inherit the modes the output cannot move. Preflight
    // rejects rates beyond that ceiling before any solve.
    for alpha in [0.1, 0.9, 1.1] {
        let pf = preflight_check(&a, alpha);
        println!(
            "alpha = {alpha}: preflight {} (margin {:+.3})",
            if pf.pass { "ok" } else { "REJECTED" },
            pf.margin
        );
    }

    // Solve at a demanding but attainable rate.
    let alpha = 0.9;
    let prob = LmiProblem::new(a.clone(), c.clone(), alpha, c_r)?;
    let result = solve_feasibility(&prob)?;
    println!("\nalpha = {alpha}: feasible = {}, slack = {:.4e}", result.feasible, result.slack);
    println!("gain L (|L| = {:.3}):", result.l.norm());
    for i in 0..result.l.nrows() {
        let row: Vec<String> = (0..result.l.ncols()).map(|j| format!("{:9.4}", result.l[(i, j)])).collect();
        println!("  [{}]", row.join(" "));
    }
    println!("closed-loop abscissa: {:.4} (need < {:.1})", result.closedloop_abscissa, -alpha);

    // Re-check the certificate from scratch: closed-loop rate, the assembled
    // inequality at the returned point, and the Schur-complement route.
    let cert = certify(&a, &c, &result.l, alpha, &result.p_phi, &result.p_e, result.lambda, c_r)?;
    println!("\ncertificate:");
    println!("  closed-loop abscissa {:.4}", cert.closedloop_abscissa);
    println!("  inequality max eig   {:.3e}", cert.lmi_max_eig);
    println!("  Schur route max eig  {:.3e}", cert.schur_max_eig);
    if cert.passed() {
        println!("  all checks passed");
    } else {
        println!("  FAILED: {:?}", cert.failures);
    }
    assert!(cert.passed());

    Ok(())
}
