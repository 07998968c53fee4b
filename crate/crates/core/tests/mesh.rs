//! Refinement invariants on random marks and where adaptivity concentrates.

use mixed_dbc::mesh::{Mesh, Point};
use mixed_dbc::problems::example2;
use mixed_dbc::verify::run_adaptive_study_with;
use proptest::prelude::*;

fn total_area(mesh: &Mesh) -> f64 {
    (0..mesh.n_triangles()).map(|t| mesh.area(t)).sum()
}

fn check(mesh: &Mesh, area: f64) {
    assert_eq!(mesh.euler_characteristic(), 1);
    mesh.check_conformity().unwrap();
    assert!((0..mesh.n_triangles()).all(|t| mesh.area(t) > 0.0));
    assert!((total_area(mesh) - area).abs() < 1e-12);
    let boundary_len: f64 = mesh.boundary_edges().map(|e| mesh.edge_length(e)).sum();
    assert!((boundary_len - if area == 3.0 { 8.0 } else { 4.0 }).abs() < 1e-12);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn nvb_keeps_mesh_valid(marks in prop::collection::vec(prop::collection::vec(any::<prop::sample::Index>(), 1..6), 1..6), square in any::<bool>()) {
        let mut mesh = if square { Mesh::unit_square(2).unwrap() } else { Mesh::lshape() };
        let area = total_area(&mesh);
        let angle = mesh.min_angle();
        for round in &marks {
            let marked: Vec<usize> = round.iter().map(|i| i.index(mesh.n_triangles())).collect();
            let before = mesh.n_triangles();
            mesh = mesh.nvb_refine(&marked).unwrap();
            prop_assert!(mesh.n_triangles() > before);
            check(&mesh, area);
            // bisection of right isosceles triangles only produces similar ones
            prop_assert!((mesh.min_angle() - angle).abs() < 1e-12);
        }
    }
}

#[test]
fn empty_marking_is_identity() {
    let mesh = Mesh::lshape();
    let same = mesh.nvb_refine(&[]).unwrap();
    assert_eq!(same.to_text(), mesh.to_text());
    assert!(mesh.nvb_refine(&[6]).is_err());
}

#[test]
fn adaptivity_concentrates_at_reentrant_corner() {
    let mut final_mesh = None;
    run_adaptive_study_with(&example2(), 0.4, 8_000, |_, mesh, _, _| {
        final_mesh = Some(mesh.clone());
        Ok(())
    })
    .unwrap();
    let mesh = final_mesh.unwrap();
    let smallest = (0..mesh.n_triangles()).min_by(|&a, &b| mesh.area(a).total_cmp(&mesh.area(b))).unwrap();
    assert!(mesh.centroid(smallest).norm() < 0.05, "smallest element at {:?}", mesh.centroid(smallest));
    // the element touching the far corner stays much coarser than the finest one
    let far_corner = Point::new(-0.99, 0.99);
    let t_far = (0..mesh.n_triangles())
        .min_by(|&a, &b| (mesh.centroid(a) - far_corner).norm().total_cmp(&(mesh.centroid(b) - far_corner).norm()))
        .unwrap();
    assert!(
        mesh.area(t_far) > 100.0 * mesh.area(smallest),
        "far {} vs smallest {}",
        mesh.area(t_far),
        mesh.area(smallest)
    );
}
