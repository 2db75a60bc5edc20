//! The two benchmark systems with their physical constants.

use super::boxes::BoxUnion;
use super::system::{Drift, Lipschitz, SystemSpec};
use super::gains::GainFn;
use crate::certificate::{Certificate, UserGains};
use crate::linalg::Mat;

/// Damped pendulum with multiplicative noise 0.03·x on one Brownian motion,
/// D = [−1, 1]², U = [−1.5, 1.5].
pub fn pendulum() -> SystemSpec {
    let (g, l, mass, k) = (9.8, 0.5, 0.6, 2.0);
    SystemSpec::new(
        Drift::Pendulum { g, l, mass, k },
        vec![Mat::identity(2, 2) * 0.03],
        Lipschitz { lx: g / l + k / mass, lu: 1.0 / (mass * l * l), z: 0.03 },
        BoxUnion::single(vec![[-1.5, 1.5]]).unwrap(),
        BoxUnion::single(vec![[-1.0, 1.0], [-1.0, 1.0]]).unwrap(),
    )
    .unwrap()
}

/// The DC-motor drift matrices (A, B).
pub fn dc_motor_matrices() -> (Mat, Mat) {
    let (b, j, k, l, r) = (1e-4, 25e-5, 5e-2, 3e-4, 0.5);
    let a = Mat::from_row_slice(2, 2, &[-b / j, k / j, -k / l, -r / l]);
    let bm = Mat::from_row_slice(2, 1, &[0.0, 1.0 / l]);
    (a, bm)
}

/// Linear DC motor with noise 0.15·xᵢ on independent Brownian motions,
/// D = [−5, 5]², U = [−0.5, 0.5].
pub fn dc_motor() -> SystemSpec {
    let (a, b) = dc_motor_matrices();
    let lx = (0..2)
        .map(|i| a.row(i).iter().map(|v| v.abs()).sum::<f64>())
        .fold(0.0, f64::max);
    let lu = b.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    SystemSpec::new(
        Drift::Linear { a, b },
        vec![
            Mat::from_row_slice(2, 2, &[0.15, 0.0, 0.0, 0.0]),
            Mat::from_row_slice(2, 2, &[0.0, 0.0, 0.0, 0.15]),
        ],
        Lipschitz { lx, lu, z: 0.15 },
        BoxUnion::single(vec![[-0.5, 0.5]]).unwrap(),
        BoxUnion::single(vec![[-5.0, 5.0], [-5.0, 5.0]]).unwrap(),
    )
    .unwrap()
}

/// Plain-quadratic pendulum certificate, P = [[1.5, 0.3], [0.3, 1.5]], q = 2,
/// α̲ = 1.2r, ᾱ = 3.6r, κ = 0.7691, ρ = 8.76r.
pub fn pendulum_certificate() -> Certificate {
    let gains = UserGains {
        alpha_lo: GainFn::linear(1.2),
        alpha_hi: GainFn::linear(3.6),
        kappa: 0.7691,
        rho: GainFn::linear(8.76),
    };
    Certificate::plain(Mat::from_row_slice(2, 2, &[1.5, 0.3, 0.3, 1.5]), 2, gains).unwrap()
}

/// DC-motor LMI matrix P.
pub fn dc_motor_p() -> Mat {
    Mat::from_row_slice(2, 2, &[1.2201, 0.2224, 0.2224, 1.2248])
}

/// Scaled certificate from the LMI with κ̂ = 40 at moment order q.
pub fn dc_motor_certificate(q: u32) -> Certificate {
    Certificate::from_lmi(dc_motor_p(), q, 40.0).unwrap()
}
