//! Checks the DC-motor matrix inequality and prints the gains it implies.

use stoch_symbolic::certificate::{check_lmi, lmi_margin};
use stoch_symbolic::model::catalog;

fn main() -> stoch_symbolic::Result<()> {
    let sys = catalog::dc_motor();
    let (a, _) = sys.drift.linear_parts().expect("linear drift");
    let p = catalog::dc_motor_p();
    for kappa_hat in [20.0, 40.0, 44.0] {
        let (lmax, tol) = lmi_margin(a, &sys.sigmas, &p, kappa_hat)?;
        let ok = check_lmi(a, &sys.sigmas, &p, kappa_hat)?;
        println!("κ̂ = {kappa_hat:>4}: λ_max = {lmax:+.4e} (tol {tol:.1e}) -> {}", if ok { "holds" } else { "fails" });
    }
    let g = catalog::dc_motor_certificate(1).gains(&sys)?;
    println!("q = 1 gains: α̲ = {}, ᾱ = {}, κ = {}, ρ = {}", g.alpha_lo, g.alpha_hi, g.kappa, g.rho);
    println!("β = {}, γ = {}, γ̂ = {}", g.beta, g.gamma, g.gamma_hat);
    Ok(())
}
