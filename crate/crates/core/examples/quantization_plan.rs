//! Searches state and input spacings for both routes on the pendulum.

use stoch_symbolic::certificate::{h_general, NormConvention};
use stoch_symbolic::model::catalog;
use stoch_symbolic::quantizer::{plan, PlanRequest, Route};

fn main() -> stoch_symbolic::Result<()> {
    let sys = catalog::pendulum();
    let cert = catalog::pendulum_certificate();
    let g = cert.gains(&sys)?;
    let tau = 3.0;
    let h = h_general(&g, cert.hessian_sup(), &sys, 2, tau, 256, NormConvention::Euclidean)?;
    for (route, eps) in [(Route::Kl, 0.085), (Route::Kl, 0.2), (Route::Lyapunov, 0.6)] {
        let req = PlanRequest { eps, tau, route, q: 2, eta: None, mu: None, inputs_finite: false };
        match plan(&req, &g, h, sys.domain.span()?, sys.input_set.span()?) {
            Ok(p) => println!("{route:?} ε = {eps}: η = {:.5}, μ = {:.6}", p.eta, p.mu),
            Err(e) => println!("{route:?} ε = {eps}: {e}"),
        }
    }
    Ok(())
}
