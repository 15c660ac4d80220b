use nalgebra::DMatrix;

use super::StateSpaceModel;
use crate::error::{dim_err, Error, Result};
use crate::numerics::inverse;
use crate::scalar::Real;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FeedbackSign {
    Negative,
    Positive,
}

fn stack_blocks<T: Real>(blocks: &[&[&DMatrix<T>]]) -> DMatrix<T> {
    let rows: usize = blocks.iter().map(|r| r[0].nrows()).sum();
    let cols: usize = blocks[0].iter().map(|m| m.ncols()).sum();
    let mut out = DMatrix::zeros(rows, cols);
    let mut r0 = 0;
    for row in blocks {
        let mut c0 = 0;
        for m in row.iter() {
            out.view_mut((r0, c0), m.shape()).copy_from(*m);
            c0 += m.ncols();
        }
        r0 += row[0].nrows();
    }
    out
}

/// `second ∘ first`: the output of `first` drives `second`.
pub fn series<T: Real>(first: &StateSpaceModel<T>, second: &StateSpaceModel<T>) -> Result<StateSpaceModel<T>> {
    if first.outputs() != second.inputs() {
        return Err(dim_err("series connection", first.outputs(), second.inputs()));
    }
    let (n1, n2) = (first.order(), second.order());
    let z12 = DMatrix::zeros(n1, n2);
    let a21 = second.b() * first.c();
    let a = stack_blocks(&[&[first.a(), &z12], &[&a21, second.a()]]);
    let b2 = second.b() * first.d();
    let b = stack_blocks(&[&[first.b()], &[&b2]]);
    let c1 = second.d() * first.c();
    let c = stack_blocks(&[&[&c1, second.c()]]);
    StateSpaceModel::new(a, b, c, second.d() * first.d())
}

/// `g1 + g2` with a shared input.
pub fn parallel<T: Real>(g1: &StateSpaceModel<T>, g2: &StateSpaceModel<T>) -> Result<StateSpaceModel<T>> {
    if g1.inputs() != g2.inputs() || g1.outputs() != g2.outputs() {
        return Err(dim_err(
            "parallel connection",
            format!("{}x{}", g1.outputs(), g1.inputs()),
            format!("{}x{}", g2.outputs(), g2.inputs()),
        ));
    }
    let z12 = DMatrix::zeros(g1.order(), g2.order());
    let z21 = DMatrix::zeros(g2.order(), g1.order());
    let a = stack_blocks(&[&[g1.a(), &z12], &[&z21, g2.a()]]);
    let b = stack_blocks(&[&[g1.b()], &[g2.b()]]);
    let c = stack_blocks(&[&[g1.c(), g2.c()]]);
    StateSpaceModel::new(a, b, c, g1.d() + g2.d())
}

/// `g1 − g2`.
pub fn subtract<T: Real>(g1: &StateSpaceModel<T>, g2: &StateSpaceModel<T>) -> Result<StateSpaceModel<T>> {
    parallel(g1, &g2.negated())
}

/// Block-diagonal `diag(g1, g2)`.
pub fn diagonal<T: Real>(g1: &StateSpaceModel<T>, g2: &StateSpaceModel<T>) -> Result<StateSpaceModel<T>> {
    let blk = |x: &DMatrix<T>, y: &DMatrix<T>| {
        let zxy = DMatrix::zeros(x.nrows(), y.ncols());
        let zyx = DMatrix::zeros(y.nrows(), x.ncols());
        stack_blocks(&[&[x, &zxy], &[&zyx, y]])
    };
    StateSpaceModel::new(blk(g1.a(), g2.a()), blk(g1.b(), g2.b()), blk(g1.c(), g2.c()), blk(g1.d(), g2.d()))
}

/// Closed loop from `r` to `y` with `u = r ∓ K y` and `y = G u`.
pub fn feedback<T: Real>(
    g: &StateSpaceModel<T>,
    k: &StateSpaceModel<T>,
    sign: FeedbackSign,
) -> Result<StateSpaceModel<T>> {
    if g.outputs() != k.inputs() || k.outputs() != g.inputs() {
        return Err(dim_err(
            "feedback connection",
            format!("K {}x{}", g.inputs(), g.outputs()),
            format!("K {}x{}", k.outputs(), k.inputs()),
        ));
    }
    let s = match sign {
        FeedbackSign::Negative => -T::one(),
        FeedbackSign::Positive => T::one(),
    };
    let m = g.inputs();
    // u = r + s·(Ck xk + Dk y), y = Cg xg + Dg u  ⇒  u = E (r + s Ck xk + s Dk Cg xg), E = (I − s Dk Dg)⁻¹.
    let e_inv = DMatrix::identity(m, m) - k.d() * g.d() * s;
    let e = inverse(&e_inv, "feedback").map_err(|_| Error::AlgebraicLoop)?;
    let (ag, bg, cg, dg) = (g.a(), g.b(), g.c(), g.d());
    let (ak, bk, ck, dk) = (k.a(), k.b(), k.c(), k.d());
    // Input expressed in states and reference.
    let u_xg = &e * dk * cg * s;
    let u_xk = &e * ck * s;
    let u_r = e.clone();
    let y_xg = cg + dg * &u_xg;
    let y_xk = dg * &u_xk;
    let y_r = dg * &u_r;
    let a11 = ag + bg * &u_xg;
    let a12 = bg * &u_xk;
    let a21 = bk * &y_xg;
    let a22 = ak + bk * &y_xk;
    let a = stack_blocks(&[&[&a11, &a12], &[&a21, &a22]]);
    let b1 = bg * &u_r;
    let b2 = bk * &y_r;
    let b = stack_blocks(&[&[&b1], &[&b2]]);
    let c = stack_blocks(&[&[&y_xg, &y_xk]]);
    StateSpaceModel::new(a, b, c, y_r)
}
