//! Pointwise algebra of vectors and 3×3 tensors.
//!
//! Symmetric tensors are stored by their six raw entries
//! `(11, 22, 33, 12, 13, 23)` and deviatoric tensors by the eight entries
//! `(11, 12, 13, 21, 22, 23, 31, 32)` with `33 = -(11 + 22)`. Neither
//! storage is orthonormal for the Frobenius product; the pulled-back Gram
//! matrices [`SYM_GRAM`] and [`DEV_GRAM`] make the embeddings isometric:
//! `⟨ι x, ι y⟩_F = xᵀ G y`. All coefficients involved are dyadic or thirds,
//! so the embeddings stay exact when composed with integer stencils.

use std::ops::{Add, Mul, Neg, Sub};

use crate::error::TensorError;

/// Default relative tolerance for algebraic hypotheses such as `sym M = 0`.
pub const TAU_ALG: f64 = 1e-12;

/// Index pairs of the compact symmetric components.
pub const SYM_COMPONENTS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (0, 1), (0, 2), (1, 2)];

/// Index pairs of the compact deviatoric components; entry 33 is implied.
pub const DEV_COMPONENTS: [(usize, usize); 8] = [
    (0, 0),
    (0, 1),
    (0, 2),
    (1, 0),
    (1, 1),
    (1, 2),
    (2, 0),
    (2, 1),
];

/// Frobenius Gram matrix of the symmetric embedding in compact coordinates.
pub const SYM_GRAM: [[f64; 6]; 6] = [
    [1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 2.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0, 2.0, 0.0],
    [0.0, 0.0, 0.0, 0.0, 0.0, 2.0],
];

/// Frobenius Gram matrix of the deviatoric embedding in compact coordinates.
/// The diagonal pair couples through the implied 33 entry.
pub const DEV_GRAM: [[f64; 8]; 8] = [
    [2.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0],
    [0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0],
    [1.0, 0.0, 0.0, 0.0, 2.0, 0.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0],
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 0.0],
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0],
];

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Vec3(pub [f64; 3]);

/// General 3×3 tensor, row-major.
#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Mat3(pub [[f64; 3]; 3]);

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct SymMat3(pub [f64; 6]);

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct DevMat3(pub [f64; 8]);

impl Vec3 {
    pub fn new(a: f64, b: f64, c: f64) -> Self {
        Vec3([a, b, c])
    }

    pub fn dot(&self, other: &Vec3) -> f64 {
        self.0.iter().zip(other.0.iter()).map(|(a, b)| a * b).sum()
    }

    pub fn cross(&self, other: &Vec3) -> Vec3 {
        let [a1, a2, a3] = self.0;
        let [b1, b2, b3] = other.0;
        Vec3([a2 * b3 - a3 * b2, a3 * b1 - a1 * b3, a1 * b2 - a2 * b1])
    }

    pub fn norm(&self) -> f64 {
        self.dot(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, rhs: Vec3) -> Vec3 {
        Vec3(std::array::from_fn(|i| self.0[i] + rhs.0[i]))
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, rhs: Vec3) -> Vec3 {
        Vec3(std::array::from_fn(|i| self.0[i] - rhs.0[i]))
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3(self.0.map(|v| -v))
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, rhs: f64) -> Vec3 {
        Vec3(self.0.map(|v| v * rhs))
    }
}

impl Mat3 {
    pub fn zero() -> Self {
        Mat3([[0.0; 3]; 3])
    }

    pub fn identity() -> Self {
        Mat3::scalar(1.0)
    }

    /// `u id`
    pub fn scalar(u: f64) -> Self {
        let mut m = Mat3::zero();
        for i in 0..3 {
            m.0[i][i] = u;
        }
        m
    }

    pub fn from_fn(f: impl Fn(usize, usize) -> f64) -> Self {
        Mat3(std::array::from_fn(|i| std::array::from_fn(|j| f(i, j))))
    }

    pub fn transpose(&self) -> Mat3 {
        Mat3::from_fn(|i, j| self.0[j][i])
    }

    pub fn mul_vec(&self, v: &Vec3) -> Vec3 {
        Vec3(std::array::from_fn(|i| {
            (0..3).map(|j| self.0[i][j] * v.0[j]).sum()
        }))
    }

    pub fn matmul(&self, other: &Mat3) -> Mat3 {
        Mat3::from_fn(|i, j| (0..3).map(|k| self.0[i][k] * other.0[k][j]).sum())
    }

    pub fn frobenius(&self, other: &Mat3) -> f64 {
        let mut s = 0.0;
        for i in 0..3 {
            for j in 0..3 {
                s += self.0[i][j] * other.0[i][j];
            }
        }
        s
    }

    pub fn norm(&self) -> f64 {
        self.frobenius(self).sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.0.iter().flatten().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Flattened row-major entries.
    pub fn to_array(&self) -> [f64; 9] {
        std::array::from_fn(|k| self.0[k / 3][k % 3])
    }

    pub fn from_array(a: &[f64]) -> Mat3 {
        Mat3::from_fn(|i, j| a[3 * i + j])
    }
}

impl Add for Mat3 {
    type Output = Mat3;
    fn add(self, rhs: Mat3) -> Mat3 {
        Mat3::from_fn(|i, j| self.0[i][j] + rhs.0[i][j])
    }
}

impl Sub for Mat3 {
    type Output = Mat3;
    fn sub(self, rhs: Mat3) -> Mat3 {
        Mat3::from_fn(|i, j| self.0[i][j] - rhs.0[i][j])
    }
}

impl Neg for Mat3 {
    type Output = Mat3;
    fn neg(self) -> Mat3 {
        Mat3::from_fn(|i, j| -self.0[i][j])
    }
}

impl Mul<f64> for Mat3 {
    type Output = Mat3;
    fn mul(self, rhs: f64) -> Mat3 {
        Mat3::from_fn(|i, j| self.0[i][j] * rhs)
    }
}

impl SymMat3 {
    /// Compact inner product pulled back through `ι_S`.
    pub fn inner(&self, other: &SymMat3) -> f64 {
        let (a, b) = (&self.0, &other.0);
        a[0] * b[0] + a[1] * b[1] + a[2] * b[2] + 2.0 * (a[3] * b[3] + a[4] * b[4] + a[5] * b[5])
    }
}

impl DevMat3 {
    /// Compact inner product pulled back through `ι_T`.
    pub fn inner(&self, other: &DevMat3) -> f64 {
        let mut s = 0.0;
        for i in 0..8 {
            for j in 0..8 {
                s += self.0[i] * DEV_GRAM[i][j] * other.0[j];
            }
        }
        s
    }
}

/// The skew matrix with `spn(v) w = v × w`.
pub fn spn(v: &Vec3) -> Mat3 {
    let [a1, a2, a3] = v.0;
    Mat3([[0.0, -a3, a2], [a3, 0.0, -a1], [-a2, a1, 0.0]])
}

/// Inverse of [`spn`] on skew matrices; reads off the skew part.
pub fn spn_inv(m: &Mat3) -> Result<Vec3, TensorError> {
    spn_inv_with_tol(m, TAU_ALG)
}

pub fn spn_inv_with_tol(m: &Mat3, tol: f64) -> Result<Vec3, TensorError> {
    let sym_norm = sym(m).norm();
    let norm = m.norm();
    if sym_norm > tol * norm {
        return Err(TensorError::NotSkew {
            relative: sym_norm / norm,
        });
    }
    Ok(spn_inv_skw(m))
}

/// `spn⁻¹ skw M` without the hypothesis check.
pub fn spn_inv_skw(m: &Mat3) -> Vec3 {
    let a = &m.0;
    Vec3([
        0.5 * (a[2][1] - a[1][2]),
        0.5 * (a[0][2] - a[2][0]),
        0.5 * (a[1][0] - a[0][1]),
    ])
}

pub fn sym(m: &Mat3) -> Mat3 {
    Mat3::from_fn(|i, j| 0.5 * (m.0[i][j] + m.0[j][i]))
}

pub fn skw(m: &Mat3) -> Mat3 {
    Mat3::from_fn(|i, j| 0.5 * (m.0[i][j] - m.0[j][i]))
}

pub fn tr(m: &Mat3) -> f64 {
    m.0[0][0] + m.0[1][1] + m.0[2][2]
}

pub fn dev(m: &Mat3) -> Mat3 {
    *m - Mat3::scalar(tr(m) / 3.0)
}

pub fn iota_s(x: &SymMat3) -> Mat3 {
    let mut m = Mat3::zero();
    for (c, &(i, j)) in SYM_COMPONENTS.iter().enumerate() {
        m.0[i][j] = x.0[c];
        m.0[j][i] = x.0[c];
    }
    m
}

/// Adjoint of [`iota_s`] with respect to the Frobenius product and [`SymMat3::inner`].
pub fn iota_s_adj(m: &Mat3) -> SymMat3 {
    SymMat3(SYM_COMPONENTS.map(|(i, j)| 0.5 * (m.0[i][j] + m.0[j][i])))
}

pub fn iota_t(x: &DevMat3) -> Mat3 {
    let mut m = Mat3::zero();
    for (c, &(i, j)) in DEV_COMPONENTS.iter().enumerate() {
        m.0[i][j] = x.0[c];
    }
    m.0[2][2] = -(x.0[0] + x.0[4]);
    m
}

/// Adjoint of [`iota_t`] with respect to the Frobenius product and [`DevMat3::inner`].
pub fn iota_t_adj(m: &Mat3) -> DevMat3 {
    let d = dev(m);
    DevMat3(DEV_COMPONENTS.map(|(i, j)| d.0[i][j]))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn arb_vec() -> impl Strategy<Value = Vec3> {
        prop::array::uniform3(-10.0f64..10.0).prop_map(Vec3)
    }

    fn arb_mat() -> impl Strategy<Value = Mat3> {
        prop::array::uniform9(-10.0f64..10.0).prop_map(|a| Mat3::from_array(&a))
    }

    #[test]
    fn spn_matches_displayed_matrix() {
        let m = spn(&Vec3::new(1.0, 0.0, 0.0));
        assert_eq!(m.0, [[0.0, 0.0, 0.0], [0.0, 0.0, -1.0], [0.0, 1.0, 0.0]]);
        assert_eq!(spn(&Vec3::default()), Mat3::zero());
        let w = spn(&Vec3::new(1.0, 2.0, 3.0)).mul_vec(&Vec3::new(4.0, 5.0, 6.0));
        assert_eq!(w, Vec3::new(-3.0, 6.0, -3.0));
    }

    #[test]
    fn spn_inv_round_trip_and_errors() {
        let v = Vec3::new(1.0, 2.0, 3.0);
        assert_eq!(spn_inv(&spn(&v)).unwrap(), v);
        assert_eq!(spn_inv(&Mat3::zero()).unwrap(), Vec3::default());
        let bad = spn(&v) + Mat3::identity() * 1e-3;
        assert!(matches!(spn_inv(&bad), Err(TensorError::NotSkew { .. })));
    }

    #[test]
    fn projector_examples() {
        assert_eq!(dev(&Mat3::scalar(4.5)).max_abs(), 0.0);
        assert_eq!(sym(&spn(&Vec3::new(0.3, -1.2, 7.0))).max_abs(), 0.0);
        assert_eq!(tr(&Mat3::identity()), 3.0);
    }

    #[test]
    fn embedding_adjoint_examples() {
        let skew = spn(&Vec3::new(1.0, -2.0, 0.5));
        assert_eq!(iota_s_adj(&skew), SymMat3::default());
        assert_eq!(iota_t_adj(&Mat3::identity()), DevMat3::default());
    }

    #[test]
    fn compact_grams_match_embeddings() {
        for a in 0..6 {
            for b in 0..6 {
                let mut x = SymMat3::default();
                let mut y = SymMat3::default();
                x.0[a] = 1.0;
                y.0[b] = 1.0;
                assert_eq!(iota_s(&x).frobenius(&iota_s(&y)), SYM_GRAM[a][b]);
            }
        }
        for a in 0..8 {
            for b in 0..8 {
                let mut x = DevMat3::default();
                let mut y = DevMat3::default();
                x.0[a] = 1.0;
                y.0[b] = 1.0;
                assert_eq!(iota_t(&x).frobenius(&iota_t(&y)), DEV_GRAM[a][b]);
            }
        }
    }

    proptest! {
        #[test]
        fn spn_is_antisymmetric_product(v in arb_vec(), w in arb_vec()) {
            let lhs = spn(&v).mul_vec(&w);
            let rhs = -spn(&w).mul_vec(&v);
            prop_assert!((lhs - rhs).max_abs() <= 1e-13 * (1.0 + v.norm() * w.norm()));
            prop_assert!((lhs - v.cross(&w)).max_abs() <= 1e-13 * (1.0 + v.norm() * w.norm()));
        }

        #[test]
        fn sym_skw_split_and_dev_commutes(m in arb_mat()) {
            prop_assert!((sym(&m) + skw(&m) - m).max_abs() <= 1e-14 * (1.0 + m.norm()));
            prop_assert!(tr(&dev(&m)).abs() <= 1e-13 * (1.0 + m.norm()));
            prop_assert!((dev(&sym(&m)) - sym(&dev(&m))).max_abs() <= 1e-14 * (1.0 + m.norm()));
        }

        #[test]
        fn embeddings_are_exact_left_inverses(x in prop::array::uniform6(-5.0f64..5.0), y in prop::array::uniform8(-5.0f64..5.0)) {
            prop_assert_eq!(iota_s_adj(&iota_s(&SymMat3(x))), SymMat3(x));
            let back = iota_t_adj(&iota_t(&DevMat3(y)));
            for k in 0..8 {
                prop_assert!((back.0[k] - y[k]).abs() <= 1e-14 * (1.0 + y[k].abs()));
            }
        }

        #[test]
        fn embeddings_are_adjoint_and_project(m in arb_mat(), x in prop::array::uniform6(-5.0f64..5.0), y in prop::array::uniform8(-5.0f64..5.0)) {
            let (x, y) = (SymMat3(x), DevMat3(y));
            let scale = 1.0 + m.norm() * 10.0;
            prop_assert!((iota_s(&x).frobenius(&m) - x.inner(&iota_s_adj(&m))).abs() <= 1e-13 * scale);
            prop_assert!((iota_t(&y).frobenius(&m) - y.inner(&iota_t_adj(&m))).abs() <= 1e-13 * scale);
            prop_assert!((iota_s(&iota_s_adj(&m)) - sym(&m)).max_abs() <= 1e-14 * scale);
            prop_assert!((iota_t(&iota_t_adj(&m)) - dev(&m)).max_abs() <= 1e-14 * scale);
        }
    }
}
