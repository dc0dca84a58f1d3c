use bihlab::complex::{build_complex, dual_complex, HilbertComplex, Weight, Weights};
use bihlab::grid::{build_domain, partition_boundary, DomainShape, FaceSelector, GridSpec};
use bihlab::hodge::random_field;
use bihlab::linalg::{norm, sub, Csr};
use bihlab::masks::MIN_WIDTHS;
use bihlab::ops::{weighted_adjoint, Which};

fn complex(which: Which, sel: FaceSelector, weights: Weights) -> HilbertComplex {
    let g = GridSpec::cube(5, 0.25).unwrap();
    let d = build_domain(g, &DomainShape::FullBox).unwrap();
    let p = partition_boundary(&d, &sel);
    build_complex(which, &d, &p, &MIN_WIDTHS, &weights).unwrap()
}

fn rel_diff(a: &Csr, b: &Csr) -> f64 {
    a.combine(1.0, b, -1.0).max_abs() / a.max_abs().max(b.max_abs())
}

#[test]
fn composites_vanish_on_the_six_cube() {
    let g = GridSpec::cube(6, 0.2).unwrap();
    let d = build_domain(g, &DomainShape::FullBox).unwrap();
    for sel in [FaceSelector::AllN, FaceSelector::AllT, FaceSelector::half_split(&g, 1)] {
        let p = partition_boundary(&d, &sel);
        for which in [Which::First, Which::Second] {
            let c = build_complex(which, &d, &p, &MIN_WIDTHS, &Weights::identity()).unwrap();
            assert_eq!(c.composite_max(), [0.0, 0.0]);
        }
    }
}

#[test]
fn dual_of_the_dual_is_the_complex() {
    for which in [Which::First, Which::Second] {
        let c = complex(which, FaceSelector::AllT, Weights::random(2));
        let cc = dual_complex(&dual_complex(&c).unwrap()).unwrap();
        assert_eq!(cc.dims(), c.dims());
        for k in 0..3 {
            assert!(rel_diff(&cc.d[k], &c.d[k]) <= 1e-12, "level {k}");
        }
    }
}

#[test]
fn adjoint_is_an_involution() {
    let c = complex(Which::First, FaceSelector::AllN, Weights::identity());
    for k in 0..3 {
        let (m0, m1) = (&c.spaces[k].mass, &c.spaces[k + 1].mass);
        let back = weighted_adjoint(&weighted_adjoint(&c.d[k], m0, m1).unwrap(), m1, m0).unwrap();
        assert!(rel_diff(&back, &c.d[k]) <= 1e-12);
    }
}

#[test]
fn adjoint_range_is_orthogonal_to_the_end_kernel() {
    for which in [Which::First, Which::Second] {
        let c = complex(which, FaceSelector::AllN, Weights::random(5));
        assert!(c.head.active);
        let y = random_field(c.spaces[1].dim(), 3);
        let x = c.adjoint(0).unwrap().apply(&y);
        let p = c.head.project(&x, &c.spaces[0].mass);
        assert!(c.norm(0, &p) <= 1e-8 * c.norm(0, &x));
        let rest = c.head.complement(&x, &c.spaces[0].mass);
        assert!(norm(&sub(&rest, &x)) <= 1e-8 * norm(&x));
    }
}

#[test]
fn scaled_weights_keep_the_operators() {
    let a = complex(Which::Second, FaceSelector::AllT, Weights::identity());
    let b = complex(Which::Second, FaceSelector::AllT, Weights { eps: Weight::Scaled(2.0), mu: Weight::Identity });
    assert_eq!(a.dims(), b.dims());
    for k in 0..3 {
        assert_eq!(rel_diff(&a.d[k], &b.d[k]), 0.0);
    }
}
