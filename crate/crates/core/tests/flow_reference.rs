//! Integrator convergence on the reference-scale bilinear run: halving the
//! Euler step changes the final loss by less than 1% over a fixed horizon.

use revlab::bilinear::{forward_loss, init_theta, integrate_flow, FlowOptions, ThetaInit};
use revlab::datasets::build_bilinear_pairs;
use revlab::numerics::Rng;

#[test]
fn halving_dt_changes_final_loss_below_one_percent() {
    let rng = Rng::new(99);
    let pairs = build_bilinear_pairs(64, 8, 512, &mut rng.substream("dataset")).unwrap();
    let params = init_theta(
        &ThetaInit::Gaussian { sigma: 1e-3 },
        &pairs,
        &mut rng.substream("init"),
    )
    .unwrap();
    let l0 = forward_loss(&params, &pairs);

    // fixed horizon t = 150 at both resolutions
    let coarse = integrate_flow(&params, &pairs, &FlowOptions::euler(0.1, 1500, 250)).unwrap();
    let fine = integrate_flow(&params, &pairs, &FlowOptions::euler(0.05, 3000, 500)).unwrap();
    let a = *coarse.train_loss.last().unwrap();
    let b = *fine.train_loss.last().unwrap();
    assert!(a < l0 && b < l0);
    assert_eq!(coarse.times.last(), fine.times.last());
    let rel = (a - b).abs() / a;
    assert!(rel < 0.01, "final losses {a} vs {b} differ by {rel:.4}");
}
