//! Build a dictionary of observables, lift a state through it, and sanity-check
//! the hand-coded gradients against finite differences.
//!
//! Run with: cargo run --example lifting

use koopman_observer::dict::{finite_difference_gradient, monomials, Dictionary, Observable};

fn main() -> koopman_observer::error::Result<()> {
    // All monomials of (x1, x2) up to degree 2: 1, x1, x2, x1^2, x1*x2, x2^2.
    let obs = monomials(2, 2);
    let dict = Dictionary::new(2, obs)?;

    println!("dictionary on R^{}:", dict.n());
    for label in dict.labels() {
        println!("  {label}");
    }
    println!("full dim {}, reduced dim {}", dict.full_dim(), dict.reduced_dim());

    // The reduced lifting drops the constant observable, so Phi_bar(0) = 0 and
    // the origin of the lifted system matches the origin of the plant.
    let x = [0.3, -0.7];
    let phibar = dict.lift_reduced(&x)?;
    println!("\nPhi_bar({:?}) = {:?}", x, phibar.as_slice());
    let zero = dict.lift_reduced(&[0.0, 0.0])?;
    assert!(zero.iter().all(|v| *v == 0.0), "reduced lifting must vanish at 0");

    // The first n reduced coordinates are the state itself; the selector pulls
    // them back out of a lifted vector.
    let sel = dict.selector();
    let back = sel.apply(&phibar);
    println!("selector recovers x = {:?}", back.as_slice());
    assert!((back[0] - x[0]).abs() < 1e-15 && (back[1] - x[1]).abs() < 1e-15);

    // Gradients drive the generator data matrix Y, so they have to be right.
    // Compare every observable's analytic gradient against central differences.
    let probes = vec![vec![0.3, -0.7], vec![-0.9, 0.2], vec![0.5, 0.5]];
    dict.check_gradients(&probes, 1e-6)?;
    println!("\nanalytic gradients agree with finite differences at {} probe points", probes.len());

    // The same check by hand for one observable, to show what it does.
    let phi = Observable::monomial(vec![1, 1]); // x1 * x2
    let mut grad = vec![0.0; 2];
    phi.grad_into(&x, &mut grad);
    let fd = finite_difference_gradient(&phi, &x, 1e-6);
    println!("grad({}) at {:?}: analytic {:?}, central-difference {:?}", phi.label(), x, grad, fd);

    Ok(())
}
