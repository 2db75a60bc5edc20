//! Builds a coarse pendulum abstraction, writes it to disk and reads it back.

use stoch_symbolic::abstraction::{input_list, Abstraction, BuildOptions};
use stoch_symbolic::model::catalog;
use stoch_symbolic::quantizer::{QuantizationPlan, Route};

fn main() -> stoch_symbolic::Result<()> {
    let sys = catalog::pendulum();
    let plan = QuantizationPlan { tau: 3.0, eta: 0.02, mu: 0.0, eps: 0.2, q: 2, route: Route::Kl, h_at_tau: 0.0 };
    let inputs = input_list(&sys, 0.5)?;
    let (a, report) = Abstraction::build(&sys, plan, inputs, &BuildOptions::default())?;
    println!("{} states × {} inputs, {} substeps", a.num_states(), a.num_inputs(), report.substeps);
    println!("largest relation gap: {:.2e} (η/2 = {})", a.max_relation_gap(&sys, 2000, report.substeps, 1)?, plan.eta / 2.0);
    let path = std::env::temp_dir().join("pendulum-coarse.ssym");
    a.save(&path)?;
    let back = Abstraction::load(&path)?;
    println!("wrote {} ({} bytes), reload identical: {}", path.display(), std::fs::metadata(&path)?.len(), back == a);
    Ok(())
}
