use std::sync::Arc;

use blocksplit::validation::random_desk_instance;
use blocksplit::{BlockVector, GramSide, LinOp, SubspaceProjector};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn random_block(rng: &mut ChaCha8Rng, dims: &[usize]) -> BlockVector {
    BlockVector::from_blocks(
        dims.iter()
            .map(|&n| (0..n).map(|_| rng.random_range(-2.0..2.0)).collect())
            .collect(),
    )
}

proptest! {
    #[test]
    fn stacked_adjoint_identity(seed in 0u64..5000, vseed in any::<u64>()) {
        let spec = random_desk_instance(seed).unwrap();
        let grid = spec.grid();
        let mut rng = ChaCha8Rng::seed_from_u64(vseed);
        let x = random_block(&mut rng, grid.primal_dims());
        let v = random_block(&mut rng, grid.dual_dims());
        let lhs = grid.apply_stacked(&x).unwrap().dot(&v);
        let rhs = x.dot(&grid.apply_stacked_adjoint(&v).unwrap());
        prop_assert!((lhs - rhs).abs() <= 1e-12 * (1.0 + lhs.abs()));
    }

    #[test]
    fn projector_lands_on_graph_and_is_orthogonal(seed in 0u64..5000, vseed in any::<u64>()) {
        let spec = random_desk_instance(seed).unwrap();
        let grid = spec.shared_grid();
        let mut rng = ChaCha8Rng::seed_from_u64(vseed);
        let z = random_block(&mut rng, grid.primal_dims());
        let y = random_block(&mut rng, grid.dual_dims());
        for side in [GramSide::Primal, GramSide::Dual] {
            let proj = SubspaceProjector::build_with_side(grid.clone(), side).unwrap();
            let (t, lt) = proj.project(&z, &y).unwrap();
            prop_assert!(grid.apply_stacked(&t).unwrap().distance(&lt) <= 1e-10);
            // residual is orthogonal to the graph: r_z + L* r_y = 0
            let rz = z.sub(&t).unwrap();
            let ry = y.sub(&lt).unwrap();
            let mut normal = grid.apply_stacked_adjoint(&ry).unwrap();
            normal.axpy(1.0, &rz);
            prop_assert!(normal.norm() <= 1e-9);
            let (t2, lt2) = proj.project(&t, &lt).unwrap();
            prop_assert!(t2.distance(&t) + lt2.distance(&lt) <= 1e-10);
        }
    }
}

#[test]
fn operator_adjoints_match_dense_transpose() {
    let ops = [
        LinOp::RowSelect { side: 4, row: 2 },
        LinOp::Difference { side: 3 },
        LinOp::RowFunctional {
            u: vec![1.0, -2.0, 0.5],
        },
        LinOp::Scaled { alpha: -1.5, dim: 2 },
    ];
    for op in ops {
        let d = op.to_dense();
        let v: Vec<f64> = (0..op.out_dim()).map(|j| (j as f64 * 0.7).sin()).collect();
        let want = d.transpose() * nalgebra::DVector::from_vec(v.clone());
        let got = op.adjoint(&v);
        for (a, b) in got.iter().zip(want.iter()) {
            assert!((a - b).abs() < 1e-14, "{op:?}");
        }
    }
}

#[test]
fn both_gram_sides_give_the_same_projection() {
    let spec = random_desk_instance(11).unwrap();
    let grid: Arc<_> = spec.shared_grid();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let z = random_block(&mut rng, grid.primal_dims());
    let y = random_block(&mut rng, grid.dual_dims());
    let a = SubspaceProjector::build_with_side(grid.clone(), GramSide::Primal)
        .unwrap()
        .project(&z, &y)
        .unwrap();
    let b = SubspaceProjector::build_with_side(grid, GramSide::Dual)
        .unwrap()
        .project(&z, &y)
        .unwrap();
    assert!(a.0.distance(&b.0) + a.1.distance(&b.1) < 1e-10);
}
