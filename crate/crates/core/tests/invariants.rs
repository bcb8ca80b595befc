//! Structural invariants checked over randomized inputs.

use std::sync::Arc;

use maxwell_ocp::adapt::{mark_cells, mark_max_strategy, mark_union};
use maxwell_ocp::control::project_box;
use maxwell_ocp::estimator::IndicatorField;
use maxwell_ocp::mesh::{
    bisect_marked, build_structured_domain, extract_topology, mesh_quality_stats, DomainKind,
    TetMesh,
};
use maxwell_ocp::nedelec::{assemble_stiffness, FESpace};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn domain(i: usize) -> DomainKind {
    [
        DomainKind::UnitCube,
        DomainKind::LShape,
        DomainKind::CubeWithInnerBox,
    ][i % 3]
}

/// The inner box of the two-subdomain cube needs a resolution divisible by 4.
fn coarsest(kind: DomainKind) -> usize {
    if kind == DomainKind::CubeWithInnerBox {
        4
    } else {
        1
    }
}

/// A structured mesh followed by a few rounds of random local refinement.
fn random_mesh(kind: DomainKind, rounds: usize, seed: u64) -> TetMesh {
    let mut mesh = build_structured_domain(kind, coarsest(kind)).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..rounds {
        let marked: Vec<usize> = (0..mesh.num_cells())
            .filter(|_| rng.random_bool(0.2))
            .collect();
        mesh = bisect_marked(&mesh, &marked).unwrap();
    }
    mesh
}

#[test]
fn stiffness_annihilates_discrete_gradients() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for trial in 0..100 {
        let mesh = random_mesh(domain(trial), trial % 4, trial as u64);
        let space = FESpace::new(Arc::new(mesh)).unwrap();
        let per_subdomain: Vec<f64> = (0..space.mesh().num_subdomains())
            .map(|_| rng.random_range(1e-3..10.0))
            .collect();
        let chi: Vec<f64> = space
            .mesh()
            .subdomains()
            .iter()
            .map(|&s| per_subdomain[s])
            .collect();
        let k = assemble_stiffness(&space, &chi).unwrap();
        let psi: Vec<f64> = (0..space.mesh().num_vertices())
            .map(|_| rng.random_range(-1.0..1.0))
            .collect();
        let g = space.discrete_gradient(&psi);
        let k_norm = norm(k.values());
        let ratio = norm(&k.mul_vec(&g)) / (k_norm * norm(&g));
        worst = worst.max(ratio);
    }
    assert!(worst <= 1e-12, "kernel ratio {worst:e}");
}

#[test]
fn full_refinement_keeps_dihedral_floor() {
    let mut mesh = build_structured_domain(DomainKind::UnitCube, 1).unwrap();
    let round0 = mesh_quality_stats(&mesh).min_dihedral;
    for round in 1..=10 {
        let all: Vec<usize> = (0..mesh.num_cells()).collect();
        let before = mesh.num_cells();
        mesh = bisect_marked(&mesh, &all).unwrap();
        assert!(mesh.num_cells() >= 2 * before);
        extract_topology(&mesh).unwrap();
        let q = mesh_quality_stats(&mesh);
        assert!(
            q.min_dihedral >= 0.1 * round0,
            "round {round}: {} deg vs {} deg",
            q.min_dihedral.to_degrees(),
            round0.to_degrees()
        );
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn random_refinement_stays_conforming(kind in 0usize..3, seed in any::<u64>()) {
        let mut mesh = build_structured_domain(domain(kind), coarsest(domain(kind))).unwrap();
        let volume: f64 = (0..mesh.num_cells()).map(|c| mesh.volume(c)).sum();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..10 {
            let p = rng.random_range(0.02..0.3);
            let mut marked: Vec<usize> = (0..mesh.num_cells()).filter(|_| rng.random_bool(p)).collect();
            if marked.is_empty() {
                marked.push(rng.random_range(0..mesh.num_cells()));
            }
            let before = mesh.num_cells();
            let labels_before: Vec<f64> = (0..mesh.num_subdomains())
                .map(|s| (0..before).filter(|&c| mesh.subdomain(c) == s).map(|c| mesh.volume(c)).sum())
                .collect();
            mesh = bisect_marked(&mesh, &marked).unwrap();
            prop_assert!(mesh.num_cells() > before);
            prop_assert!(extract_topology(&mesh).is_ok());
            for (s, v) in labels_before.iter().enumerate() {
                let after: f64 = (0..mesh.num_cells()).filter(|&c| mesh.subdomain(c) == s).map(|c| mesh.volume(c)).sum();
                prop_assert!((after - v).abs() <= 1e-12 * volume);
            }
        }
        let total: f64 = (0..mesh.num_cells()).map(|c| mesh.volume(c)).sum();
        prop_assert!((total - volume).abs() <= 1e-12 * volume);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn projection_is_idempotent(
        raw in prop::collection::vec((-100.0f64..100.0, -10.0f64..10.0, 0.0f64..10.0), 1..6)
    ) {
        let v: Vec<f64> = raw.iter().map(|r| r.0).collect();
        let lower: Vec<f64> = raw.iter().map(|r| r.1).collect();
        let upper: Vec<f64> = raw.iter().map(|r| r.1 + r.2).collect();
        let once = project_box(&v, &lower, &upper).unwrap();
        let twice = project_box(once.values(), &lower, &upper).unwrap();
        prop_assert_eq!(once.values(), twice.values());
        prop_assert!(once.is_admissible());
        for k in 0..v.len() {
            if v[k] >= lower[k] && v[k] <= upper[k] {
                prop_assert_eq!(once.values()[k], v[k]);
            }
        }
    }

    #[test]
    fn max_marking_is_exact(
        values in prop::collection::vec(0.0f64..1.0, 1..200),
        theta in 0.01f64..=1.0
    ) {
        let marked = mark_max_strategy(&values, theta).unwrap();
        let max = values.iter().cloned().fold(0.0, f64::max);
        for (i, &v) in values.iter().enumerate() {
            prop_assert_eq!(marked.contains(&i), v >= theta * max);
        }
        prop_assert!(marked.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn union_marking_covers_both_indicators(
        pairs in prop::collection::vec((0.0f64..1.0, 0.0f64..1.0), 1..100),
        theta in 0.01f64..=1.0
    ) {
        let st: Vec<f64> = pairs.iter().map(|p| p.0).collect();
        let adj: Vec<f64> = pairs.iter().map(|p| p.1).collect();
        let a = mark_max_strategy(&st, theta).unwrap();
        let b = mark_max_strategy(&adj, theta).unwrap();
        let u = mark_union(&a, &b);
        let field = IndicatorField::new(st, adj);
        prop_assert_eq!(&mark_cells(&field, theta).unwrap(), &u);
        for i in 0..pairs.len() {
            prop_assert_eq!(u.contains(&i), a.contains(&i) || b.contains(&i));
        }
    }
}
