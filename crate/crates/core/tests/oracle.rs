//! Property tests against the brute-force tensor-product reference.

mod common;

use common::{eigenvalues, symmetric_block};
use proptest::prelude::*;
use pspin::exactdiag::{self, SectorOperator};
use pspin::semiclassical::{self, Landscape};
use pspin::{model, spinwave, AnnealPoint, ModelParams};

fn params() -> impl Strategy<Value = ModelParams> {
    (prop::sample::select(vec![3u32, 5, 7, 9]), 2u32..=5).prop_map(|(p, k)| ModelParams::new(p, k).unwrap())
}

fn point() -> impl Strategy<Value = AnnealPoint> {
    (0.0..=1.0f64, 0.0..=1.0f64).prop_map(|(l, s)| AnnealPoint::new(l, s).unwrap())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn sector_block_equals_tensor_product(n in 1usize..=8, m in params(), pt in point()) {
        let (block, leak) = symmetric_block(n, m, pt);
        prop_assert!(leak < 1e-10);
        let op = SectorOperator::new(n, m, pt).unwrap();
        let dense = op.to_dense();
        prop_assert!((&dense - &block).abs().max() < 1e-10);
        let ours = eigenvalues(dense);
        let reference = eigenvalues(block);
        for (a, b) in ours.iter().zip(&reference) {
            prop_assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn ground_energy_per_spin_approaches_semiclassical(m in params(), pt in point()) {
        // Coherent states give the semi-classical energy up to O(1/N).
        let n = 200;
        let op = SectorOperator::new(n, m, pt).unwrap();
        let e0 = exactdiag::lowest_eigenpairs(&op, 1).unwrap().ground_energy() / n as f64;
        let classical = m.ground_state(pt).energy;
        prop_assert!((e0 - classical).abs() < 0.05, "{e0} vs {classical}");
    }

    #[test]
    fn ground_state_is_a_stationary_minimum(m in params(), pt in point()) {
        let st = semiclassical::find_theta0(pt, m);
        let grid_min = (0..=4096)
            .map(|i| model::energy(std::f64::consts::PI * i as f64 / 4096.0, pt, m))
            .fold(f64::INFINITY, f64::min);
        prop_assert!(st.energy <= grid_min + 1e-12);
        prop_assert!((st.energy - model::energy(st.theta0, pt, m)).abs() < 1e-15);
    }

    #[test]
    fn gap_identity(m in params(), pt in point()) {
        let g = spinwave::gap(pt, m);
        if let Some(gap) = g.gap {
            prop_assert!((gap * gap - (g.delta * g.delta - 4.0 * g.gamma * g.gamma)).abs() < 1e-9 * g.delta.powi(2).max(1.0));
        }
    }
}
