//! Pointwise, finite-horizon and infinite-horizon violation bounds.

use stoch_symbolic::model::{catalog, BoxUnion};
use stoch_symbolic::probounds::{alpha_sup, bound_finite_horizon, bound_infinite_horizon, markov_pointwise, sbf_from_certificate};

fn main() -> stoch_symbolic::Result<()> {
    let pend = catalog::pendulum();
    let cert = catalog::pendulum_certificate();
    let g = cert.gains(&pend)?;
    let alpha = alpha_sup(&cert, &pend, &pend.domain, 10_000, 1)?;
    println!("pendulum α = {alpha:.5}");
    for epsilon in [0.2, 0.28, 0.5] {
        println!("  pointwise ε = 0.085, ϵ = {epsilon}: {:.4}", markov_pointwise(0.085, epsilon)?);
    }
    for n in [1, 9, 50] {
        let v = bound_finite_horizon(alpha, g.kappa, &g.alpha_lo, 2, 0.305, n, 3.0)?;
        println!("  finite horizon N = {n}: violation ≤ {v:.4}");
    }

    let dc = catalog::dc_motor();
    let z = BoxUnion::single(vec![[-5.0, 5.0], [-0.25, 0.25]])?;
    println!("DC motor α on Z = {:.4}", alpha_sup(&catalog::dc_motor_certificate(2), &dc, &z, 10_000, 1)?);
    let phi = sbf_from_certificate(&catalog::dc_motor_certificate(2), Some(&dc))?;
    for x0 in [[0.1, 0.0], [0.13, 0.05]] {
        let p = phi.at_start(&x0);
        println!("  φ({x0:?}) = {p:.4}, infinite horizon bound {:.4}", bound_infinite_horizon(p, 0.08, 1.0)?);
    }
    Ok(())
}
