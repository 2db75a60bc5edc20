//! Moment-gap bounds h(σ, τ) and the smallest precision each route admits.

use stoch_symbolic::certificate::{h_general, h_quadratic, NormConvention};
use stoch_symbolic::model::catalog;
use stoch_symbolic::quantizer::{eps_lower_bound_kl, eps_lower_bound_lyapunov};

fn main() -> stoch_symbolic::Result<()> {
    let sys = catalog::pendulum();
    let cert = catalog::pendulum_certificate();
    let g = cert.gains(&sys)?;
    println!("{:>5} {:>12} {:>10} {:>10} {:>12}", "τ", "h", "ε (kl)", "ε (lyap)", "h closed");
    for tau in [0.5, 1.0, 2.0, 3.0, 5.0] {
        let h = h_general(&g, cert.hessian_sup(), &sys, 2, tau, 256, NormConvention::Euclidean)?;
        let kl = eps_lower_bound_kl(&g.beta, h, tau, 2).map_or("-".into(), |v| format!("{v:.4}"));
        let ly = eps_lower_bound_lyapunov(&g, h, tau, 2).map_or("-".into(), |v| format!("{v:.4}"));
        let closed = h_quadratic(&cert.p, 2, cert.kappa_tilde, &sys, tau)?;
        println!("{tau:>5} {h:>12.4e} {kl:>10} {ly:>10} {closed:>12.4e}");
    }
    Ok(())
}
