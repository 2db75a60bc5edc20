//! Synthesises the sequential visit-then-stay pendulum controller on a coarse grid.

use stoch_symbolic::abstraction::{input_list, Abstraction, BuildOptions};
use stoch_symbolic::model::{catalog, BoxUnion};
use stoch_symbolic::quantizer::{QuantizationPlan, Route};
use stoch_symbolic::synthesis::{solve_spec, Region, SpecTemplate};

fn main() -> stoch_symbolic::Result<()> {
    let sys = catalog::pendulum();
    let plan = QuantizationPlan { tau: 3.0, eta: 0.01, mu: 0.0, eps: 0.2, q: 2, route: Route::Kl, h_at_tau: 0.0 };
    let (a, _) = Abstraction::build(&sys, plan, input_list(&sys, 0.5)?, &BuildOptions::default())?;
    let w1: Region = BoxUnion::single(vec![[0.48, 0.58], [-1.0, 1.0]])?.into();
    let w2: Region = BoxUnion::single(vec![[-0.58, -0.48], [-1.0, 1.0]])?.into();
    let spec = SpecTemplate::SeqThenStay { sequence: vec![w1.clone(), w2], last: w1 };
    let c = solve_spec(&a, &spec, &[vec![0.0, 0.0]])?;
    println!("winning states per phase: {:?}", c.winning_counts());
    println!("closed under the abstraction: {}", c.check_closure(&a));
    let (mut x, mut phase) = (vec![0.0, 0.0], 0);
    for step in 0..5 {
        let (i, p) = c.refine_index(&x, phase)?;
        phase = p;
        x = a.state_coords(a.successor(a.grid.snap(&x) as usize, i) as usize);
        println!("step {step}: input {:?} -> x = ({:.3}, {:.3}), phase {phase}", a.inputs[i], x[0], x[1]);
    }
    Ok(())
}
