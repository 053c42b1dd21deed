//! Intrinsic characterization of truncated multiplication operators:
//! invariance residuals, the defect decomposition
//! `T - S T S* = v ⊗ k0 + k0 ⊗ w`, extraction of the `(2,2)` symbol entry,
//! symbol recovery and the zero-symbol test.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harmonic::{min_grid, AnalyticPoly, CircleFunction, ZERO};
use crate::linalg::{adjoint_mul, c, lstsq, matmul, op_norm, orth_complement, outer, CMat, CVec};
use crate::modelspace::{ModelSpace, ModelVector, RawPair};
use crate::symbols::{compress_symbol, defect_leak, interior_norm, SymbolEntry, SymbolMatrix};
use crate::tolerances::{DEFAULT_GRID, EPS_DELTA, MODEL_GRID, TOL_LIMIT};

/// Coefficients below this are dropped from recovered symbols.
const TRIM: f64 = 1e-11;

/// Orthonormal coordinates of `interior ⊖ C x`.
fn interior_perp(space: &ModelSpace, x: &CVec) -> CMat {
    let e = space.interior();
    let y = e.adjoint() * x;
    if y.norm() == 0.0 {
        return e.clone();
    }
    let y = CMat::from_columns(&[y.normalize()]);
    matmul(e, &orth_complement(&y, e.ncols()))
}

/// Invariance residuals of an operator.
#[derive(Clone, Copy, Debug, Serialize, PartialEq)]
pub struct InvarianceReport {
    /// `||E^H (T - S* T S) E||` over interior vectors orthogonal to `ktilde0`.
    pub interior: f64,
    /// `||Q (T - S* T S) Q||` on the whole truncated space.
    pub full: f64,
    /// The adjoint-side residual `||E'^H (T - S T S*) E'||`, `E' ⊥ k0`.
    pub adjoint_interior: f64,
}

/// `||Q (T - S_u* T S_u) Q||` with `Q` the projection onto `ktilde0^⊥`,
/// measured on interior vectors.
pub fn invariance_residual(space: &ModelSpace, t: &CMat) -> f64 {
    let s = space.su();
    let e = interior_perp(space, &space.ktilde0().coords);
    let re = matmul(t, &e) - matmul(&adjoint_mul(s, t), &matmul(s, &e));
    op_norm(&adjoint_mul(&e, &re))
}

pub fn invariance_report(space: &ModelSpace, t: &CMat) -> InvarianceReport {
    let s = space.su();
    let kt = &space.ktilde0().coords;
    let k0 = &space.k0().coords;
    let r = t - matmul(&adjoint_mul(s, t), s);
    let e = interior_perp(space, kt);
    let interior = op_norm(&adjoint_mul(&e, &matmul(&r, &e)));
    let q = CMat::identity(space.dim(), space.dim()) - outer(kt, kt) / c(space.k_norm_sqr());
    let full = op_norm(&matmul(&q, &matmul(&r, &q)));
    let ra = t - matmul(&matmul(s, t), &s.adjoint());
    let e2 = interior_perp(space, k0);
    let adjoint_interior = op_norm(&adjoint_mul(&e2, &matmul(&ra, &e2)));
    InvarianceReport { interior, full, adjoint_interior }
}

/// `T - S T S* = v ⊗ k + k ⊗ w` with the gauge `<v, k> = 0`.
#[derive(Clone, Debug)]
pub struct DefectDecomposition {
    pub v: ModelVector,
    pub w: ModelVector,
    /// Residual on interior vectors.
    pub residual: f64,
    /// Residual on the whole truncated space.
    pub residual_full: f64,
}

fn decompose_with(space: &ModelSpace, t: &CMat, s: &CMat, k: &CVec) -> DefectDecomposition {
    let nk = space.k_norm_sqr();
    let d = t - matmul(&matmul(s, t), &s.adjoint());
    let dk = &d * k;
    let proj = k * (k.dotc(&dk) / c(nk));
    let v = (&dk - proj) / c(nk);
    let w = d.adjoint() * k / c(nk);
    let rest = &d - outer(&v, k) - outer(k, &w);
    DefectDecomposition {
        residual: interior_norm(space, &rest),
        residual_full: op_norm(&rest),
        v: ModelVector::new(v),
        w: ModelVector::new(w),
    }
}

/// Decomposes `T - S_u T S_u*`. Fails when the residual exceeds `10 tol_accept`.
pub fn defect_decompose(space: &ModelSpace, t: &CMat, tol_accept: f64) -> Result<DefectDecomposition> {
    let dd = decompose_with(space, t, space.su(), &space.k0().coords);
    if dd.residual > 10.0 * tol_accept {
        return Err(Error::NotInvariant { residual: dd.residual, tol: 10.0 * tol_accept });
    }
    Ok(dd)
}

/// The adjoint-side decomposition `T - S_u* T S_u = v ⊗ ktilde0 + ktilde0 ⊗ w`.
pub fn defect_decompose_adjoint(space: &ModelSpace, t: &CMat) -> DefectDecomposition {
    let s = space.su().adjoint();
    decompose_with(space, t, &s, &space.ktilde0().coords)
}

/// Result of [`extract_d`].
#[derive(Clone, Debug, Serialize)]
pub struct DExtraction {
    pub d: CircleFunction,
    /// Largest change of `<T x_n, x_m>` under `(n, m) -> (n + 1, m + 1)`,
    /// i.e. the step `T_{k+1} - T_k` of the iteration `S^k T S*^k` tested on
    /// the family `x_n`.
    pub iteration_step: f64,
    /// Residual of the deconvolution `d Delta^2 = measured`.
    pub deconvolution_residual: f64,
    /// `||S T' S* - T'||` on interior vectors for `T' = A_{diag(0, d)}`.
    pub fixed_point_residual: f64,
}

/// Recovers the `(2,2)` entry `d` of any symbol of `T`.
///
/// The vectors `x_n = 0 ⊕ Delta chi^(-n)`, `n > deg u`, lie in `H_u` and
/// satisfy `S_u* x_n = x_{n+1}`. Hence `<S^k T S*^k x_n, x_m> =
/// <T x_{n+k}, x_{m+k}>`, and for a truncated multiplication operator this
/// equals the Fourier coefficient `(d Delta^2)^(n - m)` for every `k`.
/// The limit of the iteration is read off the Toeplitz structure directly,
/// and `d` follows by least-squares deconvolution against `Delta^2`.
pub fn extract_d(space: &ModelSpace, t: &CMat) -> Result<DExtraction> {
    if space.is_inner() || space.delta_sq().l2_norm() < EPS_DELTA * EPS_DELTA {
        return Err(Error::NotDetermined);
    }
    let deg = space.deg_u() as i64;
    let hi = space.interior_order() as i64;
    let lo = deg + 1;
    let count = (hi - lo + 1) as usize;
    let mut xs = Vec::with_capacity(count);
    for n in lo..=hi {
        xs.push(space.coords_of(&RawPair::second(CircleFunction::monomial(-n, c(1.0), MODEL_GRID))));
    }
    let mut gram = CMat::zeros(count, count);
    for (i, xn) in xs.iter().enumerate() {
        let txn = t * xn;
        for (j, xm) in xs.iter().enumerate() {
            gram[(i, j)] = xm.dotc(&txn);
        }
    }
    let mut step: f64 = 0.0;
    for i in 0..count - 1 {
        for j in 0..count - 1 {
            step = step.max((gram[(i + 1, j + 1)] - gram[(i, j)]).norm());
        }
    }
    // measured[l + L] = (d Delta^2)^(l), averaged along the diagonal n - m = l
    let l_max = (count - 1) as i64;
    let mut measured = CVec::zeros((2 * l_max + 1) as usize);
    for l in -l_max..=l_max {
        let mut acc = ZERO;
        let mut num = 0.0;
        for i in 0..count as i64 {
            let j = i - l;
            if j >= 0 && j < count as i64 {
                acc += gram[(i as usize, j as usize)];
                num += 1.0;
            }
        }
        measured[(l + l_max) as usize] = acc / num;
    }
    let k_max = (l_max - deg).max(0);
    let d2 = space.delta_sq();
    let mut conv = CMat::zeros((2 * l_max + 1) as usize, (2 * k_max + 1) as usize);
    for l in -l_max..=l_max {
        for k in -k_max..=k_max {
            conv[((l + l_max) as usize, (k + k_max) as usize)] = d2.coeff(l - k);
        }
    }
    let sol = lstsq(&conv, &measured, 1e-13);
    let deconvolution_residual = (&conv * &sol - &measured).norm();
    let d = CircleFunction::new(sol.iter().copied().collect(), min_grid(k_max as usize).max(DEFAULT_GRID))?
        .trimmed(TRIM);

    let tp = compress_symbol(space, &SymbolMatrix::diag(SymbolEntry::zero(), SymbolEntry::plain(d.clone())));
    let s = space.su();
    let fixed_point_residual = interior_norm(space, &(matmul(&matmul(s, &tp), &s.adjoint()) - &tp));
    Ok(DExtraction { d, iteration_step: step, deconvolution_residual, fixed_point_residual })
}

/// Outcome of [`recover_symbol`].
#[derive(Clone, Debug)]
pub struct Recovery {
    pub symbol: SymbolMatrix,
    pub decomposition: DefectDecomposition,
    pub extraction: DExtraction,
    /// `||(A_F - T) E||` on interior vectors.
    pub certificate: f64,
    /// `||A_F - T||` on the whole truncated space.
    pub certificate_full: f64,
}

/// Builds a symbol for an invariant `T`:
/// `F = [[a1 + conj(a2), conj(b)], [c, d]]` from `v = a1 ⊕ c`, `w = a2 ⊕ b`
/// and the extracted `d`.
pub fn recover_symbol(space: &ModelSpace, t: &CMat, tol_accept: f64) -> Result<Recovery> {
    let inv = invariance_residual(space, t);
    if inv > tol_accept {
        return Err(Error::NotInvariant { residual: inv, tol: tol_accept });
    }
    let decomposition = defect_decompose(space, t, tol_accept)?;
    let extraction = match extract_d(space, t) {
        Ok(x) => x,
        Err(Error::NotDetermined) => DExtraction {
            d: CircleFunction::zero(DEFAULT_GRID),
            iteration_step: 0.0,
            deconvolution_residual: 0.0,
            fixed_point_residual: 0.0,
        },
        Err(e) => return Err(e),
    };
    let v = space.raw_of(&decomposition.v.coords);
    let w = space.raw_of(&decomposition.w.coords);
    let a = &v.f + &w.f.conj();
    let symbol = SymbolMatrix::new(
        SymbolEntry::plain(a),
        SymbolEntry::scaled(w.h.conj()),
        SymbolEntry::scaled(v.h.clone()),
        SymbolEntry::plain(extraction.d.clone()),
    )
    .trimmed(TRIM);
    let diff = compress_symbol(space, &symbol) - t;
    Ok(Recovery {
        certificate: interior_norm(space, &diff),
        certificate_full: op_norm(&diff),
        symbol,
        decomposition,
        extraction,
    })
}

/// Outcome of [`zero_symbol_test`].
#[derive(Clone, Debug, Serialize)]
pub struct ZeroSymbolReport {
    pub is_zero: bool,
    /// Structural and operator-norm verdicts disagree.
    pub inconsistent: bool,
    pub f1: AnalyticPoly,
    pub f2: AnalyticPoly,
    /// `sup |a - u f1 - conj(u f2)|`.
    pub residual_a: f64,
    /// `sup |c - Delta f1|` on `{Delta > eps_delta}`.
    pub residual_c: f64,
    /// `sup |b - Delta conj(f2)|` on `{Delta > eps_delta}`.
    pub residual_b: f64,
    /// `sup |d|` on `{Delta > eps_delta}`.
    pub residual_d: f64,
    /// `||A_F E||` on interior vectors.
    pub operator_norm: f64,
    pub structural_tol: f64,
    pub operator_tol: f64,
}

/// Least-squares fit of an analytic polynomial `p` of degree `<= k` to
/// `target = Delta p` on the grid nodes where `Delta > eps_delta`.
fn fit_analytic(target: &[Complex64], delta: &[f64], mask: &[bool], k: usize) -> CircleFunction {
    let g = target.len();
    let rows: Vec<usize> = (0..g).filter(|&i| mask[i]).collect();
    let mut a = CMat::zeros(rows.len(), k + 1);
    let mut b = CVec::zeros(rows.len());
    for (r, &i) in rows.iter().enumerate() {
        let z = Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * i as f64 / g as f64);
        let mut p = c(1.0);
        for j in 0..=k {
            a[(r, j)] = p * delta[i];
            p *= z;
        }
        b[r] = target[i];
    }
    if rows.is_empty() {
        return CircleFunction::zero(DEFAULT_GRID);
    }
    let sol = lstsq(&a, &b, 1e-13);
    let taylor: Vec<_> = sol.iter().copied().collect();
    CircleFunction::from_taylor(&taylor, DEFAULT_GRID).trimmed(TRIM)
}

/// Decides whether `A_F = 0` by the structural criterion
/// `a = u f1 + conj(u f2)`, `c = Delta f1`, `b = Delta conj(f2)`, `d = 0`
/// on `{Delta != 0}`, and cross-checks against the compressed operator.
pub fn zero_symbol_test(space: &ModelSpace, f: &SymbolMatrix, structural_tol: f64) -> ZeroSymbolReport {
    let u = space.u().as_fn();
    let order = f.order() + space.deg_u() + 4;
    let g = min_grid(2 * order).max(DEFAULT_GRID);
    let d2 = space.delta_sq();
    let delta: Vec<f64> = d2.values_on(g).iter().map(|z| z.re.max(0.0).sqrt()).collect();
    let mask: Vec<bool> = delta.iter().map(|&x| x > EPS_DELTA).collect();
    let av = f.a.values_on(g, d2);
    let bv = f.b.values_on(g, d2);
    let cv = f.c.values_on(g, d2);
    let dv = f.d.values_on(g, d2);
    let k = order.min(g / 4);
    let f1 = fit_analytic(&cv, &delta, &mask, k);
    let bconj: Vec<_> = bv.iter().map(|z| z.conj()).collect();
    let f2 = fit_analytic(&bconj, &delta, &mask, k);
    let f1v = f1.values_on(g);
    let f2v = f2.values_on(g);
    let uv = u.values_on(g);
    let sup = |vals: &mut dyn Iterator<Item = f64>| vals.fold(0.0, f64::max);
    let residual_a = sup(&mut (0..g).map(|i| (av[i] - uv[i] * f1v[i] - (uv[i] * f2v[i]).conj()).norm()));
    let residual_c = sup(&mut (0..g).filter(|&i| mask[i]).map(|i| (cv[i] - f1v[i] * delta[i]).norm()));
    let residual_b =
        sup(&mut (0..g).filter(|&i| mask[i]).map(|i| (bv[i] - f2v[i].conj() * delta[i]).norm()));
    let residual_d = sup(&mut (0..g).filter(|&i| mask[i]).map(|i| dv[i].norm()));
    let operator_norm = interior_norm(space, &compress_symbol(space, f));
    let operator_tol = defect_leak(space).tolerance();
    let structural =
        residual_a.max(residual_b).max(residual_c).max(residual_d) <= structural_tol;
    let operator = operator_norm <= operator_tol.max(structural_tol);
    ZeroSymbolReport {
        is_zero: structural && operator,
        inconsistent: structural != operator,
        f1: AnalyticPoly::try_from_fn(f1).expect("fit is analytic"),
        f2: AnalyticPoly::try_from_fn(f2).expect("fit is analytic"),
        residual_a,
        residual_c,
        residual_b,
        residual_d,
        operator_norm,
        structural_tol,
        operator_tol,
    }
}

/// The zero symbol `[[u f1 + conj(u f2), Delta conj(f2)], [Delta f1, 0]]`.
pub fn zero_symbol(u: &AnalyticPoly, f1: &AnalyticPoly, f2: &AnalyticPoly) -> SymbolMatrix {
    let uf1 = u.as_fn().product(f1.as_fn());
    let uf2 = u.as_fn().product(f2.as_fn());
    SymbolMatrix::new(
        SymbolEntry::plain(&uf1 + &uf2.conj()),
        SymbolEntry::scaled(f2.as_fn().conj()),
        SymbolEntry::scaled(f1.as_fn().clone()),
        SymbolEntry::zero(),
    )
}

/// Default convergence tolerance of the `d` extraction.
pub fn limit_tolerance() -> f64 {
    TOL_LIMIT
}
