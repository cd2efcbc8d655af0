//! Grasp-matrix checks against independent elimination-based oracles,
//! plus randomized structural invariants of the nullspace bases.

mod common;

use nalgebra::{DMatrix, DVector};
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use slingloiter_core::geometry::{Mat3, Rotation, Vec3};
use slingloiter_core::grasp::{
    build_grasp, hamiltonian_pairs, nullspace_orthonormal, pairwise_nullspace, GraspSystem,
    LoadModel, PairSet,
};
use slingloiter_core::planner::{distribute_forces, feasibility_margins, static_wrench_std};
use slingloiter_core::STANDARD_GRAVITY;

fn paper_three_cable_load() -> LoadModel {
    LoadModel::new(
        1.0,
        Mat3::from_diagonal_element(0.01),
        vec![
            Vec3::new(0.259, 0.034, 0.399),
            Vec3::new(-0.156, 0.269, 0.556),
            Vec3::new(-0.1223, -0.1399, 0.1778),
        ],
        0.1,
        0.1,
    )
    .unwrap()
}

fn bar_load() -> LoadModel {
    LoadModel::new(
        1.0,
        Mat3::from_diagonal_element(0.01),
        vec![Vec3::new(0.5, 0.0, 0.0), Vec3::new(-0.5, 0.0, 0.0)],
        0.1,
        0.1,
    )
    .unwrap()
}

fn generic_load(n: usize) -> LoadModel {
    let anchors = vec![
        Vec3::new(0.3, 0.2, 0.1),
        Vec3::new(-0.25, 0.3, -0.15),
        Vec3::new(-0.2, -0.3, 0.2),
        Vec3::new(0.25, -0.2, -0.25),
        Vec3::new(0.05, 0.05, 0.35),
    ];
    LoadModel::new(
        1.0,
        Mat3::from_diagonal_element(0.01),
        anchors[..n].to_vec(),
        0.1,
        0.1,
    )
    .unwrap()
}

fn random_load(rng: &mut StdRng, n: usize) -> LoadModel {
    // Rejection keeps anchors pairwise separated so the geometry stays
    // well-conditioned.
    loop {
        let anchors: Vec<Vec3> = (0..n)
            .map(|_| Vec3::new(rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5), rng.gen_range(-0.5..0.5)))
            .collect();
        let mut ok = true;
        for i in 0..n {
            for j in (i + 1)..n {
                if (anchors[i] - anchors[j]).norm() < 0.05 {
                    ok = false;
                }
            }
        }
        if ok {
            return LoadModel::new(1.0, Mat3::from_diagonal_element(0.01), anchors, 0.1, 0.1)
                .unwrap();
        }
    }
}

fn random_rotation(rng: &mut StdRng) -> Rotation {
    Rotation::exp(&Vec3::new(
        rng.gen_range(-3.0..3.0),
        rng.gen_range(-3.0..3.0),
        rng.gen_range(-3.0..3.0),
    ))
}

#[test]
fn paper_grasp_has_full_rank_by_elimination() {
    let g = build_grasp(&paper_three_cable_load(), &Rotation::identity());
    assert_eq!(common::gauss_rank(&common::rows_of(&g), 1e-10), 6);
}

#[test]
fn balancing_forces_match_min_norm_oracle() {
    let load = paper_three_cable_load();
    let gs = GraspSystem::with_default_pairs(&load, Vec3::zeros(), Rotation::identity(), 0)
        .unwrap();
    let w = static_wrench_std(&load);
    let f = distribute_forces(&gs, &w, &DVector::zeros(3)).unwrap();

    // Residual check through an independent matrix-vector product.
    let rows = common::rows_of(gs.grasp_matrix());
    let gf = common::matvec(&rows, f.as_slice());
    let residual: f64 = gf
        .iter()
        .zip(w.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    assert!(residual < 1e-9, "residual {residual}");

    // Full-row-rank case: the pseudo-inverse solution is the unique
    // minimum-norm one, reproduced here by the normal-equations oracle.
    let oracle = common::min_norm_solution(&rows, w.as_slice());
    let diff: f64 = oracle
        .iter()
        .zip(f.as_slice())
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    assert!(diff < 1e-9, "oracle mismatch {diff}");
}

#[test]
fn bar_balancing_force_is_symmetric_and_orthogonal_to_nullspace() {
    let load = bar_load();
    let gs = GraspSystem::with_default_pairs(&load, Vec3::zeros(), Rotation::identity(), 0)
        .unwrap();
    let f = distribute_forces(&gs, &static_wrench_std(&load), &DVector::zeros(1)).unwrap();
    let expected = [0.0, 0.0, 4.905, 0.0, 0.0, 4.905];
    for (a, b) in f.iter().zip(expected) {
        assert!((a - b).abs() < 1e-9);
    }
    // Minimum-norm solutions carry no nullspace component.
    let null_dir = [1.0, 0.0, 0.0, -1.0, 0.0, 0.0];
    let along: f64 = f.iter().zip(null_dir).map(|(a, b)| a * b).sum();
    assert!(along.abs() < 1e-9);
}

#[test]
fn nullity_matches_three_n_minus_six_for_generic_anchors() {
    for n in [3usize, 4, 5] {
        let load = generic_load(n);
        let g = build_grasp(&load, &Rotation::identity());
        let (_, nullity) = nullspace_orthonormal(&g);
        assert_eq!(nullity, 3 * n - 6, "n = {n}");
        assert_eq!(common::gauss_rank(&common::rows_of(&g), 1e-10), 6);
    }
}

#[test]
fn complete_pairwise_set_spans_the_nullspace() {
    // The complete pairwise set has n(n-1)/2 columns; its rank saturates at
    // the nullity, so redundant columns appear from five cables on.
    for n in [3usize, 4, 5] {
        let load = generic_load(n);
        let basis =
            pairwise_nullspace(&load, &Rotation::identity(), &PairSet::complete(n)).unwrap();
        let rank = common::gauss_rank(&common::rows_of(&basis), 1e-10);
        assert_eq!(rank, 3 * n - 6, "n = {n}");
    }
    assert_eq!(PairSet::complete(5).len(), 10);
}

#[test]
fn pairwise_and_orthonormal_bases_span_the_same_space_for_three_cables() {
    let load = paper_three_cable_load();
    let attitude = Rotation::from_rpy(0.2, -0.4, 0.9);
    let g = build_grasp(&load, &attitude);
    let (ortho, nullity) = nullspace_orthonormal(&g);
    assert_eq!(nullity, 3);
    let pair = pairwise_nullspace(&load, &attitude, &hamiltonian_pairs(3, 0).unwrap()).unwrap();

    // Orthonormalize the pairwise basis by elimination-free Gram-Schmidt,
    // then measure the largest principal angle through the projection
    // residual: sin(theta_max) = |(I - P_pair) Q_ortho|.
    let qr = pair.clone().qr();
    let q1 = qr.q();
    let projected = &ortho - &q1 * (q1.transpose() * &ortho);
    let sin_theta = projected.norm();
    assert!(sin_theta < 1e-8, "principal angle sin = {sin_theta}");
}

#[test]
fn pairwise_columns_stay_in_the_nullspace_across_random_configurations() {
    let mut rng = StdRng::seed_from_u64(7);
    for _ in 0..100 {
        let n = rng.gen_range(1..=5usize);
        let load = random_load(&mut rng, n);
        let attitude = random_rotation(&mut rng);
        let g = build_grasp(&load, &attitude);
        let pairs = PairSet::complete(n);
        let basis = pairwise_nullspace(&load, &attitude, &pairs).unwrap();
        for c in 0..basis.ncols() {
            let residual = (&g * basis.column(c).clone_owned()).norm();
            assert!(residual < 1e-9, "n = {n}, column {c}, residual {residual}");
        }
        let (ortho, nullity) = nullspace_orthonormal(&g);
        for c in 0..nullity {
            let residual = (&g * ortho.column(c).clone_owned()).norm();
            assert!(residual < 1e-9);
        }
        let gram = ortho.transpose() * &ortho;
        assert!((gram - DMatrix::identity(nullity, nullity)).norm() < 1e-9);
    }
}

#[test]
fn feasibility_margins_match_oracle_and_golden_values() {
    let load = paper_three_cable_load();
    let gs = GraspSystem::with_default_pairs(&load, Vec3::zeros(), Rotation::identity(), 0)
        .unwrap();
    let margins = feasibility_margins(&gs, &load, STANDARD_GRAVITY).unwrap();

    // Oracle route: minimum-norm balancing forces from the normal
    // equations, plane normals from explicit cross products.
    let rows = common::rows_of(gs.grasp_matrix());
    let w = static_wrench_std(&load);
    let f0 = common::min_norm_solution(&rows, w.as_slice());
    let unit = |v: Vec3| v / v.norm();
    let b01 = unit(load.anchors[0] - load.anchors[1]);
    let b12 = unit(load.anchors[1] - load.anchors[2]);
    let b02 = unit(load.anchors[0] - load.anchors[2]);
    let planes = [[b01, b02], [b01, b12], [b12, b02]];
    for (cable, dirs) in planes.iter().enumerate() {
        let normal = unit(dirs[0].cross(&dirs[1]));
        let f0_i = Vec3::new(f0[3 * cable], f0[3 * cable + 1], f0[3 * cable + 2]);
        let oracle = f0_i.dot(&normal).abs();
        assert!(
            (margins[cable] - oracle).abs() < 1e-9,
            "cable {cable}: {} vs oracle {oracle}",
            margins[cable]
        );
    }

    // Frozen values from the oracle route; all well above 0.1 N.
    let golden = [2.406060539991924, 1.4103104041022292, 3.296494332117418];
    for (cable, &g) in golden.iter().enumerate() {
        assert!((margins[cable] - g).abs() < 1e-9, "cable {cable}");
        assert!(margins[cable] > 0.1);
    }
}

#[test]
fn margins_are_invariant_under_translation() {
    let load = paper_three_cable_load();
    let at_origin =
        GraspSystem::with_default_pairs(&load, Vec3::zeros(), Rotation::identity(), 0).unwrap();
    let shifted = GraspSystem::with_default_pairs(
        &load,
        Vec3::new(5.0, -3.0, 12.0),
        Rotation::identity(),
        0,
    )
    .unwrap();
    let a = feasibility_margins(&at_origin, &load, STANDARD_GRAVITY).unwrap();
    let b = feasibility_margins(&shifted, &load, STANDARD_GRAVITY).unwrap();
    for (x, y) in a.iter().zip(&b) {
        assert_eq!(x, y);
    }
}

#[test]
fn coplanar_construction_gives_zero_margin() {
    // Anchors in the x-z plane: every pair direction lies in that plane,
    // the static wrench is vertical, and the minimum-norm forces of a
    // geometry mirror-symmetric in y have no y component. Each balancing
    // force then lies inside its pair plane and the margins collapse.
    let load = LoadModel::new(
        1.0,
        Mat3::from_diagonal_element(0.01),
        vec![
            Vec3::new(0.4, 0.0, 0.0),
            Vec3::new(-0.3, 0.0, 0.1),
            Vec3::new(0.0, 0.0, 0.5),
        ],
        0.1,
        0.1,
    )
    .unwrap();
    let gs = GraspSystem::with_default_pairs(&load, Vec3::zeros(), Rotation::identity(), 0)
        .unwrap();
    let margins = feasibility_margins(&gs, &load, STANDARD_GRAVITY).unwrap();
    for (cable, m) in margins.iter().enumerate() {
        assert!(*m < 1e-9, "cable {cable} margin {m}");
    }
}

#[test]
fn collinear_anchors_are_rejected_for_margins() {
    let load = LoadModel::new(
        1.0,
        Mat3::from_diagonal_element(0.01),
        vec![
            Vec3::new(-0.4, 0.0, 0.0),
            Vec3::new(0.0, 0.0, 0.0),
            Vec3::new(0.4, 0.0, 0.0),
        ],
        0.1,
        0.1,
    )
    .unwrap();
    let gs = GraspSystem::with_default_pairs(&load, Vec3::zeros(), Rotation::identity(), 0)
        .unwrap();
    assert!(matches!(
        feasibility_margins(&gs, &load, STANDARD_GRAVITY),
        Err(slingloiter_core::Error::DegenerateGeometry(_))
    ));
}
