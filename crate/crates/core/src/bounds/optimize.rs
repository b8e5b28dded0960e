//! Choosing the sparsity prior `S`.

use super::{thm4_bound, thm5_bound, BoundQuery, BoundResult, Theorem};
use crate::{Error, Result, Scalar};

/// Grid points scanned before refining.
pub const DEFAULT_GRID: usize = 1000;
/// Upper end of the search interval is `1 − S_MAX_GAP`.
pub const S_MAX_GAP: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SparsityOptimum<T> {
    pub s: T,
    pub bound: BoundResult<T>,
}

/// Minimises a unimodal `f` on `[lo, hi]` to an interval of width `tol`.
pub fn golden_section_min<T: Scalar>(f: impl Fn(T) -> T, mut lo: T, mut hi: T, tol: T) -> (T, T) {
    let inv_phi = T::of((5f64.sqrt() - 1.0) / 2.0);
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = f(b);
        }
        if a == b {
            break;
        }
    }
    if fa <= fb {
        (a, fa)
    } else {
        (b, fb)
    }
}

/// The `S` minimising the Thm 4 or Thm 5 bound for `query`'s `(m, r, δ)`;
/// `query.s` is ignored. Works on the unclamped value so flat clamped regions
/// do not hide the minimum.
pub fn optimize_sparsity<T: Scalar>(query: &BoundQuery<T>, theorem: Theorem, tol: T) -> Result<SparsityOptimum<T>> {
    let eval = |s: T| -> Result<BoundResult<T>> {
        match theorem {
            Theorem::T4 => thm4_bound(query.m, query.r, query.delta, s),
            Theorem::T5 => thm5_bound(query.m, query.r, query.delta, s, query.r_emp),
            other => Err(Error::Config(format!("sparsity only enters Thm 4 and Thm 5, not {other}"))),
        }
    };
    #[allow(clippy::neg_cmp_op_on_partial_ord)] // rejects NaN too
    if !(tol > T::zero()) {
        return Err(Error::domain("tolerance", tol.to_f64_lossy(), "(0, inf)"));
    }
    eval(T::zero())?;

    let gap = T::of(S_MAX_GAP).max(T::epsilon());
    let hi = T::one() - gap;
    let n = DEFAULT_GRID;
    let at = |i: usize| hi * T::of_usize(i) / T::of_usize(n - 1);
    let raw = |s: T| eval(s).map(|b| b.raw).unwrap_or_else(|_| T::infinity());

    let mut best = 0;
    let mut best_val = raw(at(0));
    for i in 1..n {
        let v = raw(at(i));
        if v < best_val {
            best = i;
            best_val = v;
        }
    }
    let lo = at(best.saturating_sub(1));
    let up = at((best + 1).min(n - 1));
    let (s_ref, v_ref) = golden_section_min(raw, lo, up, tol);

    let mut s = at(best);
    if v_ref < best_val {
        s = s_ref;
    }
    let zero = raw(T::zero());
    if zero <= raw(s) {
        s = T::zero();
    }
    Ok(SparsityOptimum { s, bound: eval(s)? })
}
