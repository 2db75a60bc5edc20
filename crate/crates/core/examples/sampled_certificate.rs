//! Sampled check of the decay condition for a nonlinear system.
//!
//! The pendulum's stated quadratic certificate is refuted by sampling; a
//! counterexample pair is printed.

use stoch_symbolic::certificate::check_nonlinear_condition;
use stoch_symbolic::model::catalog;

fn main() -> stoch_symbolic::Result<()> {
    let sys = catalog::pendulum();
    let cert = catalog::pendulum_certificate();
    let report = check_nonlinear_condition(&sys, &cert, 20_000, 1)?;
    println!("samples: {}, worst margin: {:.4}, holds: {}", report.samples, report.worst_margin, report.ok);
    if let Some(w) = report.witness {
        println!("counterexample: x = {:?}, x' = {:?}, z = {:?}, u = {:?}", w.x, w.x_prime, w.z, w.u);
    }
    let probe = sys.lipschitz_probe(10_000, 2);
    println!("empirical Lipschitz constants: Lx ≈ {:.3}, Lu ≈ {:.3} (declared {:.3}, {:.3})", probe.lx, probe.lu, sys.lipschitz.lx, sys.lipschitz.lu);
    Ok(())
}
