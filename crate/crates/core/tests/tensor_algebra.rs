use bihlab::error::TensorError;
use bihlab::tensor::*;
use proptest::prelude::*;

fn vec3() -> impl Strategy<Value = Vec3> {
    prop::array::uniform3(-10.0f64..10.0).prop_map(Vec3)
}

fn mat3() -> impl Strategy<Value = Mat3> {
    prop::array::uniform3(prop::array::uniform3(-10.0f64..10.0)).prop_map(Mat3)
}

// cross product written out by components, independent of spn
fn cross(a: &Vec3, b: &Vec3) -> [f64; 3] {
    let (a, b) = (a.0, b.0);
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

#[test]
fn spn_applied_to_a_vector_is_the_cross_product() {
    let v = spn(&Vec3::new(1.0, 2.0, 3.0)).mul_vec(&Vec3::new(4.0, 5.0, 6.0));
    assert_eq!(v.0, [-3.0, 6.0, -3.0]);
    assert_eq!(spn(&Vec3::new(0.0, 0.0, 0.0)), Mat3::zero());
}

#[test]
fn spn_inv_rejects_a_matrix_with_a_small_symmetric_part() {
    let m = spn(&Vec3::new(1.0, -2.0, 0.5));
    let perturbed = Mat3::from_fn(|i, j| m.0[i][j] + if i == j { 1e-3 } else { 0.0 });
    assert!(matches!(spn_inv(&perturbed), Err(TensorError::NotSkew { .. })));
    assert_eq!(spn_inv(&Mat3::zero()).unwrap().0, [0.0; 3]);
}

#[test]
fn trace_and_deviator_of_multiples_of_the_identity() {
    assert_eq!(tr(&Mat3::identity()), 3.0);
    assert_eq!(dev(&Mat3::scalar(-2.5)).max_abs(), 0.0);
    assert_eq!(iota_t_adj(&Mat3::identity()).0, [0.0; 8]);
}

proptest! {
    #[test]
    fn spn_matches_cross(a in vec3(), b in vec3()) {
        let got = spn(&a).mul_vec(&b).0;
        let want = cross(&a, &b);
        for i in 0..3 {
            prop_assert!((got[i] - want[i]).abs() <= 1e-12 * (1.0 + want[i].abs()));
        }
    }

    #[test]
    fn spn_inv_round_trip(a in vec3()) {
        let back = spn_inv(&spn(&a)).unwrap();
        prop_assert_eq!(back.0, a.0);
    }

    #[test]
    fn sym_of_spn_vanishes(a in vec3()) {
        prop_assert_eq!(sym(&spn(&a)).max_abs(), 0.0);
    }

    #[test]
    fn sym_embedding_of_its_adjoint_is_the_symmetric_part(m in mat3()) {
        let got = iota_s(&iota_s_adj(&m));
        let want = Mat3::from_fn(|i, j| 0.5 * (m.0[i][j] + m.0[j][i]));
        prop_assert!(Mat3::from_fn(|i, j| got.0[i][j] - want.0[i][j]).max_abs() <= 1e-12 * (1.0 + m.max_abs()));
    }

    #[test]
    fn dev_embedding_of_its_adjoint_is_the_deviator(m in mat3()) {
        let got = iota_t(&iota_t_adj(&m));
        let t = (m.0[0][0] + m.0[1][1] + m.0[2][2]) / 3.0;
        let want = Mat3::from_fn(|i, j| m.0[i][j] - if i == j { t } else { 0.0 });
        prop_assert!(Mat3::from_fn(|i, j| got.0[i][j] - want.0[i][j]).max_abs() <= 1e-12 * (1.0 + m.max_abs()));
    }

    #[test]
    fn sym_adjoint_kills_skew_matrices(a in vec3()) {
        prop_assert_eq!(iota_s_adj(&spn(&a)).0, [0.0; 6]);
    }

    #[test]
    fn sym_plus_skw_is_the_matrix(m in mat3()) {
        let s = sym(&m);
        let k = skw(&m);
        prop_assert!(Mat3::from_fn(|i, j| s.0[i][j] + k.0[i][j] - m.0[i][j]).max_abs() <= 1e-13 * (1.0 + m.max_abs()));
    }
}
