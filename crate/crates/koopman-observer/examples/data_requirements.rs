//! How much data does a trustworthy surrogate need?  Sweep the remainder
//! bound c_r and the failure probability delta and watch the required sample
//! count d0 respond.
//!
//! Run with: cargo run --example data_requirements

use koopman_observer::bounds::{build_bound_report, required_data_raw};
use koopman_observer::systems::{by_name, sample_uniform};

fn main() -> koopman_observer::error::Result<()> {
    let system = by_name("example-a")?;
    // The structure and variance estimates come from a Monte Carlo pass over
    // sampled data; the report is deterministic per (samples, c_r, delta).
    let samples = sample_uniform(&system, 4000, 11)?;

    println!("{:>8} {:>14} {:>14}", "c_r", "c_tilde", "d0");
    let mut last = u64::MAX;
    for k in 0..8 {
        let c_r = 0.05 * 2f64.powi(k);
        let report = build_bound_report(system.dict(), &samples, c_r, 0.1)?;
        println!("{:>8.3} {:>14.4e} {:>14}", c_r, report.c_tilde, report.d0);
        // A looser admissible remainder is easier to certify: d0 never grows.
        assert!(report.d0 <= last);
        last = report.d0;
    }

    // The raw (pre-ceiling) requirement scales exactly like 1/delta.
    let report = build_bound_report(system.dict(), &samples, 0.2, 0.1)?;
    let halved = required_data_raw(
        system.dict().reduced_dim(),
        0.05,
        report.c_tilde,
        &report.sigma1_sq,
        &report.sigma2_sq,
    )?;
    println!("\ndelta 0.1 -> raw {:.6e}", report.d0_raw);
    println!("delta 0.05 -> raw {:.6e} (x{:.1})", halved, halved / report.d0_raw);
    assert_eq!(halved, 2.0 * report.d0_raw);

    println!(
        "\nstructure estimates: |A| ~ {:.3}, |Gram^-1| ~ {:.3}, {} Monte Carlo points",
        report.a_norm, report.cinv_norm, report.mc_points
    );
    assert!(report.invariants_hold());

    Ok(())
}
