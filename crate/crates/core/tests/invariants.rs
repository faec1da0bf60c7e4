//! Cross-module invariants, checked on random inputs.

use std::f64::consts::PI;
use std::sync::Arc;

use gkdv_core::direction::maximize_f;
use gkdv_core::evolution::{evolve, gwp_equivalence_sweep, EvolveOptions};
use gkdv_core::groundstate::{build_ground_state, scalar_q, sharp_constant, GroundStateProfile};
use gkdv_core::model::gn_check;
use gkdv_core::spectral::{spectral_report, OperatorKind, GAP_FLOOR};
use gkdv_core::{FieldPair, Grid, ModelParams};
use proptest::prelude::*;

fn unit_state(params: &ModelParams, grid: Arc<Grid>) -> GroundStateProfile {
    let set = maximize_f(params, 1024).unwrap();
    build_ground_state(params, 1.0, grid, &set.points[0]).unwrap()
}

/// `−Q'' + ωQ − Q^{2k+1}` with `Q''` differentiated by hand from the closed form.
fn analytic_residual(omega: f64, k: u32, x: f64) -> f64 {
    let kf = k as f64;
    let z = kf * omega.sqrt() * x;
    let (sech, tanh) = (1.0 / z.cosh(), z.tanh());
    let amp = ((kf + 1.0) * omega).powf(1.0 / (2.0 * kf));
    let s = sech.powf(1.0 / kf);
    let q = amp * s;
    let qxx = amp * omega * s * (tanh * tanh - kf * sech * sech);
    -qxx + omega * q - q.powi(2 * k as i32 + 1)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn profile_scaling(omega in 0.05f64..20.0, x in -5.0f64..5.0, k in 1u32..6) {
        let lhs = scalar_q(omega, k, x);
        let rhs = omega.powf(1.0 / (2.0 * k as f64)) * scalar_q(1.0, k, omega.sqrt() * x);
        prop_assert!((lhs - rhs).abs() <= 1e-14 * rhs.max(1e-300));
    }

    #[test]
    fn profile_solves_scalar_equation(x in -6.0f64..6.0, k in 1u32..5, omega in 0.25f64..4.0) {
        prop_assert!(analytic_residual(omega, k, x).abs() < 1e-10);
        prop_assert!(scalar_q(omega, k, x) >= scalar_q(omega, k, x.abs() + 0.1));
    }

    #[test]
    fn profile_finite_difference(x in -3.0f64..3.0, k in 1u32..4) {
        // the rounding floor of the centred stencil is about 4ε|Q|/h²
        let h = 1e-4;
        let q = |x| scalar_q(1.0, k, x);
        let qxx = (q(x + h) - 2.0 * q(x) + q(x - h)) / (h * h);
        let r = -qxx + q(x) - q(x).powi(2 * k as i32 + 1);
        prop_assert!(r.abs() < 1e-6);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn amplitudes_and_samples(b in 0.5f64..20.0, a in 0.5f64..3.0) {
        let grid = Grid::new(256, 20.0 * PI).unwrap();
        for params in [ModelParams::focusing(3, a, b, 0.0, 0.0).unwrap(), ModelParams::focusing(2, a, b, a, a).unwrap()] {
            let set = maximize_f(&params, 1024).unwrap();
            for p in &set.points {
                let gs = build_ground_state(&params, 1.0, grid.clone(), p).unwrap();
                let norm = gs.alpha * gs.alpha + gs.beta * gs.beta;
                let expect = gs.f_max.powf(-1.0 / params.kf());
                prop_assert!((norm - expect).abs() < 1e-13 * expect);
                for (i, &x) in grid.x().iter().enumerate() {
                    let (u, v) = gs.closed_form(x);
                    prop_assert!((gs.pair.u()[i] - u).abs() <= 1e-14);
                    prop_assert!((gs.pair.v()[i] - v).abs() <= 1e-14);
                }
            }
        }
    }

    #[test]
    fn gagliardo_nirenberg_bound(
        amp_u in 0.0f64..3.0, amp_v in 0.0f64..3.0,
        w_u in 0.4f64..3.0, w_v in 0.4f64..3.0,
        shift in -4.0f64..4.0,
    ) {
        prop_assume!(amp_u + amp_v > 1e-3);
        let grid = Grid::new(2048, 20.0 * PI).unwrap();
        let params = ModelParams::focusing(2, 1.0, 4.0, 1.0, 1.0).unwrap();
        let gs = unit_state(&params, grid.clone());
        let kopt = sharp_constant(&params, &gs).unwrap().kopt;
        let pair = FieldPair::from_fn(grid, |x| {
            (amp_u * (-(w_u * x).powi(2)).exp(), -amp_v / (w_v * (x - shift)).cosh())
        }).unwrap();
        prop_assert!(gn_check(&params, &pair, kopt).holds);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn threshold_equivalence_any_seed(seed in any::<u64>()) {
        let params = ModelParams::focusing(3, 1.0, 8.0, 0.0, 0.0).unwrap();
        let gs = unit_state(&params, Grid::new(1024, 20.0 * PI).unwrap());
        let sweep = gwp_equivalence_sweep(&params, &gs, 10, seed).unwrap();
        prop_assert_eq!(sweep.hip2_mismatches, 0);
        prop_assert_eq!(sweep.hip1_mismatches, 0);
    }
}

#[test]
fn resolution_convergence() {
    let params = ModelParams::focusing(2, 1.0, 4.0, 1.0, 1.0).unwrap();
    let opts = EvolveOptions { record_every: 1000, ..EvolveOptions::new(1e-3, 1.0) };
    let coarse_grid = Grid::new(1024, 20.0 * PI).unwrap();
    let fine_grid = Grid::new(2048, 20.0 * PI).unwrap();
    let coarse = evolve(&params, &unit_state(&params, coarse_grid).pair, &opts).unwrap().final_pair;
    let fine = evolve(&params, &unit_state(&params, fine_grid).pair, &opts).unwrap().final_pair;
    // every other fine point coincides with a coarse point
    let (mut diff, mut norm) = (0.0, 0.0);
    for i in 0..1024 {
        let (uc, vc) = (coarse.u()[i], coarse.v()[i]);
        let (uf, vf) = (fine.u()[2 * i], fine.v()[2 * i]);
        diff += (uc - uf).powi(2) + (vc - vf).powi(2);
        norm += uf * uf + vf * vf;
    }
    let rel = (diff / norm).sqrt();
    assert!(rel < 1e-8, "{rel}");
}

#[test]
fn negative_counts_stable_under_refinement() {
    let params = ModelParams::focusing(3, 1.0, 8.0, 0.0, 0.0).unwrap();
    let dir = maximize_f(&params, 1024).unwrap().points[0];
    let counts = |n: usize| {
        let rep = spectral_report(&params, 1.0, &dir, &Grid::new(n, 20.0 * PI).unwrap(), GAP_FLOOR).unwrap();
        [OperatorKind::L1, OperatorKind::L2, OperatorKind::MinusChannel]
            .map(|k| rep.channel(k).unwrap().counts.n_negative)
    };
    let coarse = counts(1024);
    assert_eq!(coarse, [1, 0, 0]);
    assert_eq!(coarse, counts(2048));
}
