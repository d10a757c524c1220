use metastab::compatibility::{
    habit_solutions, middle_eigenvalue_gap, rank_one_rotations, rank_one_test, twin_solutions, Classification,
    RankOne,
};
use metastab::linalg::{outer, Rotation};
use metastab::presets::{cualni_u1, cualni_variants, terephthalic};
use metastab::{Mat3, Stretch, Vec3};
use nalgebra::Matrix3;
use proptest::prelude::*;

#[test]
fn terephthalic_spectrum_has_no_connection() {
    let r = middle_eigenvalue_gap(&terephthalic());
    let expected = [0.825, 0.939, 1.339];
    for (got, want) in r.eigenvalues.iter().zip(expected) {
        assert!((got - want).abs() <= 1e-3, "{got} vs {want}");
    }
    assert_eq!(r.classification, Classification::NoConnection);
    assert_eq!(r.classification.label(), "no_rank_one_connection");
}

#[test]
fn identity_well_is_coincident() {
    let r = middle_eigenvalue_gap(&Stretch::identity());
    assert_eq!(r.classification, Classification::Coincident);
}

#[test]
fn cualni_variant_pairs_have_two_twins() {
    let v = cualni_variants();
    let q = Rotation::from_axis_angle(&Vec3::new(0.2, -1.0, 0.4), 0.9).unwrap();
    let mut pairs = 0;
    for i in 0..6 {
        for j in 0..6 {
            if i == j {
                continue;
            }
            let f = q.matrix() * v[i];
            let sols = twin_solutions(&f, &Stretch::new(v[j]).unwrap()).unwrap();
            if sols.is_empty() {
                continue;
            }
            pairs += 1;
            assert_eq!(sols.len(), 2);
            for s in &sols {
                let res = (s.rotation.matrix() * v[j] - f - outer(&s.a, &s.n)).norm();
                assert!(res <= 1e-10 * f.norm());
                assert!((s.n.norm() - 1.0).abs() < 1e-12);
            }
            assert!((sols[0].shear() - sols[1].shear()).norm() > 1e-6);
        }
    }
    assert!(pairs > 0);
}

#[test]
fn twin_count_is_invariant_under_left_rotation() {
    let v = cualni_variants();
    let u2 = Stretch::new(v[1]).unwrap();
    for angle in [0.0, 0.3, 1.7] {
        let q = Rotation::from_axis_angle(&Vec3::new(1.0, 1.0, 0.0), angle).unwrap();
        assert_eq!(twin_solutions(&(q.matrix() * v[0]), &u2).unwrap().len(), 2);
    }
}

#[test]
fn coincident_wells_rejected() {
    let u = cualni_u1();
    assert!(twin_solutions(u.matrix(), &u).is_err());
}

#[test]
fn habit_planes_of_compatible_pair() {
    let v = cualni_variants();
    let twin = twin_solutions(&v[0], &Stretch::new(v[2]).unwrap()).unwrap()[0];
    let sols = habit_solutions(&cualni_u1(), &twin).unwrap();
    assert!(!sols.is_empty());
    for h in &sols {
        assert!(h.lambda > 0.0 && h.lambda < 1.0);
        let f = v[0] + twin.shear() * h.lambda;
        // independent check: det(FᵀF − 1) = 0 and middle eigenvalue 1
        let c = f.transpose() * f;
        assert!((c - Mat3::identity()).determinant().abs() < 1e-9);
        let mut ev: Vec<f64> = c.symmetric_eigenvalues().iter().copied().collect();
        ev.sort_by(f64::total_cmp);
        assert!((ev[1] - 1.0).abs() < 1e-6);
        let res = (h.rotation.matrix() * f - Mat3::identity() - outer(&h.b, &h.m)).norm();
        assert!(res < 1e-9);
    }
}

fn vec3() -> impl Strategy<Value = Vec3> {
    proptest::array::uniform3(-1.0f64..1.0).prop_map(Vec3::from)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn rank_one_perturbations_are_detected(
        m in proptest::array::uniform9(-2.0f64..2.0),
        a in vec3(),
        n in vec3(),
    ) {
        prop_assume!(a.norm() > 0.1 && n.norm() > 0.1);
        let base = Matrix3::from_row_slice(&m);
        let shear = outer(&a, &n);
        match rank_one_test(&base, &(base + shear)) {
            RankOne::Connected { a: ra, n: rn, degenerate } => {
                prop_assert!(!degenerate);
                prop_assert!((outer(&ra, &rn) - shear).norm() < 1e-10 * (1.0 + base.norm()));
            }
            other => prop_assert!(false, "{:?}", other),
        }
    }

    #[test]
    fn rank_one_rotation_residuals(axis in vec3(), angle in 0.0f64..3.0, pick in 0usize..6) {
        prop_assume!(axis.norm() > 0.1);
        let v = cualni_variants();
        let q = Rotation::from_axis_angle(&axis, angle).unwrap();
        let f = q.matrix() * v[0];
        let g = v[pick];
        if pick == 0 {
            prop_assert!(rank_one_rotations(&f, &g).is_err());
        } else {
            for s in rank_one_rotations(&f, &g).unwrap() {
                prop_assert!(s.residual <= 1e-10 * f.norm());
                prop_assert!((s.rotation.matrix() * g - f - s.shear()).norm() <= 1e-10 * f.norm());
            }
        }
    }
}
