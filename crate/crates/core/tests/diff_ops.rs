use bihlab::grid::{GridSpec, LatticeBox};
use bihlab::ops::{assemble, assemble_biharmonic_ops, assemble_vector_ops, partial, symbols};
use bihlab::stencil::SymOp;

const N: usize = 6;

fn node_box(h: f64) -> (LatticeBox, f64) {
    (GridSpec::cube(N, h).unwrap().node_box(), h)
}

/// Samples `f(point)` on the box, component-slowest.
fn sample(bx: &LatticeBox, ncomp: usize, f: impl Fn(usize, [f64; 3]) -> f64) -> Vec<f64> {
    let n = bx.len();
    let mut out = vec![0.0; ncomp * n];
    for c in 0..ncomp {
        for s in 0..n {
            let p = bx.point(s);
            out[c * n + s] = f(c, [p[0] as f64, p[1] as f64, p[2] as f64]);
        }
    }
    out
}

/// Sites whose coordinates all lie at most `N - 1 - reach` steps from the low corner.
fn inner(bx: &LatticeBox, reach: i32) -> Vec<usize> {
    (0..bx.len())
        .filter(|&s| bx.point(s).iter().zip(bx.lo).all(|(&x, lo)| x - lo <= N as i32 - 1 - reach))
        .collect()
}

fn max_on(values: &[f64], ncomp: usize, n: usize, sites: &[usize], f: impl Fn(usize, f64) -> f64) -> f64 {
    let mut m: f64 = 0.0;
    for c in 0..ncomp {
        for &s in sites {
            m = m.max(f(c, values[c * n + s]).abs());
        }
    }
    m
}

#[test]
fn first_partial_of_the_coordinate_is_one() {
    let (bx, h) = node_box(0.25);
    let u = sample(&bx, 1, |_, x| x[0] * h);
    let du = partial(0, &bx, h).apply(&u);
    let sites = inner(&bx, 1);
    assert_eq!(max_on(&du, 1, bx.len(), &sites, |_, v| v - 1.0), 0.0);
    let constant = vec![2.5; bx.len()];
    assert_eq!(partial(2, &bx, h).apply(&constant).iter().fold(0.0f64, |m, v| m.max(v.abs())), 0.0);
}

#[test]
fn partials_commute_exactly() {
    let (bx, h) = node_box(0.2);
    let a = partial(0, &bx, h).compose(&partial(1, &bx, h));
    let b = partial(1, &bx, h).compose(&partial(0, &bx, h));
    assert!(a.sub(&b).unwrap().is_zero());
}

#[test]
fn rot_grad_vanishes_and_div_of_the_position_field_is_three() {
    let (bx, h) = node_box(1.0);
    let v = assemble_vector_ops(&bx, h);
    assert!(v.rot.compose(&v.grad).is_zero());
    assert!(v.div.compose(&v.rot).is_zero());
    let x = sample(&bx, 3, |c, p| p[c]);
    let d = v.div.apply(&x);
    assert_eq!(max_on(&d, 1, bx.len(), &inner(&bx, 1), |_, v| v - 3.0), 0.0);
}

#[test]
fn trace_of_grad_is_div_as_operators() {
    let (bx, h) = node_box(0.5);
    let tr_grad = assemble(&symbols::tr().compose(&symbols::grad_rows()), &bx, h);
    let div = assemble(&symbols::div(), &bx, h);
    assert!(tr_grad.sub(&div).unwrap().is_zero());
}

#[test]
fn gradgrad_kills_affine_functions() {
    let (bx, h) = node_box(1.0);
    let op = assemble(&symbols::gradgrad(), &bx, h);
    let sites = inner(&bx, 2);
    for q in [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]] {
        let u = sample(&bx, 1, |_, x| q[0] * x[0] + q[1] * x[1] + q[2] * x[2] + 1.0);
        let out = op.apply(&u);
        assert_eq!(max_on(&out, out.len() / bx.len(), bx.len(), &sites, |_, v| v), 0.0);
    }
}

#[test]
fn devgrad_kills_raviart_thomas_fields() {
    let (bx, h) = node_box(1.0);
    let op = assemble(&symbols::dev_grad(), &bx, h);
    let sites = inner(&bx, 1);
    let rt: [(f64, [f64; 3]); 4] = [(1.0, [0.0; 3]), (0.0, [1.0, 0.0, 0.0]), (0.0, [0.0, 1.0, 0.0]), (0.0, [0.0, 0.0, 1.0])];
    for (a, q) in rt {
        let v = sample(&bx, 3, |c, x| a * x[c] + q[c]);
        let out = op.apply(&v);
        assert!(max_on(&out, out.len() / bx.len(), bx.len(), &sites, |_, v| v) <= 1e-14);
    }
}

#[test]
fn biharmonic_composites_are_exactly_zero() {
    let (bx, h) = node_box(0.2);
    let b = assemble_biharmonic_ops(&bx, h);
    assert!(b.rot_s.compose(&b.gradgrad).is_zero());
    assert!(b.div_t.compose(&b.rot_s).is_zero());
    assert!(b.sym_rot_t.compose(&b.dev_grad).is_zero());
    assert!(b.div_div_s.compose(&b.sym_rot_t).is_zero());
    assert_eq!(b.div_t.compose(&b.rot_s).max_abs(), 0.0);
}

#[test]
fn symbol_shapes() {
    let shapes: [(SymOp, usize, usize); 6] = [
        (symbols::gradgrad(), 6, 1),
        (symbols::rot_s(), 8, 6),
        (symbols::div_t(), 3, 8),
        (symbols::dev_grad(), 8, 3),
        (symbols::sym_rot_t(), 6, 8),
        (symbols::div_div_s(), 1, 6),
    ];
    for (s, rows, cols) in shapes {
        assert_eq!((s.rows, s.cols), (rows, cols));
    }
}
