//! Closed-loop Monte Carlo of the DC motor with a reach-and-stay controller.
//! Writes the moment series as CSV to stdout.

use stoch_symbolic::abstraction::{input_list, Abstraction, BuildOptions};
use stoch_symbolic::model::{catalog, BoxUnion};
use stoch_symbolic::quantizer::{QuantizationPlan, Route};
use stoch_symbolic::stochsim::{csv, monte_carlo, SimConfig};
use stoch_symbolic::synthesis::{solve_spec, SpecTemplate};

fn main() -> stoch_symbolic::Result<()> {
    let sys = catalog::dc_motor();
    let plan = QuantizationPlan { tau: 0.01, eta: 0.05, mu: 0.0, eps: 1.0, q: 1, route: Route::Lyapunov, h_at_tau: 0.0 };
    let (a, _) = Abstraction::build(&sys, plan, input_list(&sys, 0.1)?, &BuildOptions::default())?;
    let w = BoxUnion::single(vec![[4.5, 5.0], [-0.25, 0.25]])?;
    let z = BoxUnion::single(vec![[-5.0, 5.0], [-0.25, 0.25]])?;
    let spec = SpecTemplate::ReachStayWhile { w: w.clone().into(), z: z.clone().into() };
    let c = solve_spec(&a, &spec, &[vec![-5.0, 0.0]])?;
    let cfg = SimConfig { dt: 1e-4, runs: 50, horizon: 1.0, master_seed: 1, record_stride: 500 };
    let stats = monte_carlo(&sys, &c, &[-5.0, 0.0], &cfg, &[("W".into(), w), ("Z".into(), z)], 1, false)?;
    eprintln!("left-winning-region rate: {:.4}", stats.left_rate);
    csv::write_stats(std::io::stdout().lock(), &stats)
}
