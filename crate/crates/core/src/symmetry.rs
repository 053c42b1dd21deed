//! The conjugation `C(f ⊕ g) = (χ̄uf̄ + χ̄Δḡ) ⊕ (χ̄Δf̄ - χ̄ūḡ)` on `K`, its
//! restriction `C_u` to `H_u`, and the split of an operator into
//! `C_u`-symmetric and skew-symmetric parts.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::harmonic::ONE;
use crate::invariance::{invariance_residual, recover_symbol};
use crate::linalg::{adjoint_mul, c, conj_mat, matmul, op_norm, CMat, CVec};
use crate::modelspace::{ModelSpace, RawPair};
use crate::symbols::{compress_symbol, interior_norm, SymbolEntry, SymbolMatrix};
use crate::tolerances::{EPS_DELTA, TOL_CONJ};

const TRIM: f64 = 1e-11;

/// `C` on raw pairs `f ⊕ Δh`: the image is `f' ⊕ Δh'` with
/// `f' = χ̄(u f̄ + Δ² h̄)` and `h' = χ̄(f̄ - ū h̄)`.
pub fn conjugate_raw(space: &ModelSpace, x: &RawPair) -> RawPair {
    let u = space.u().as_fn();
    let fb = x.f.conj();
    let hb = x.h.conj();
    let f = (&u.product(&fb) + &space.delta_sq().product(&hb)).shift(-1);
    let h = (&fb - &u.conj().product(&hb)).shift(-1);
    RawPair::new(f, h)
}

/// `C_u` as `x -> mc · conj(x)` in orthonormal coordinates.
#[derive(Clone, Debug)]
pub struct ConjugationRep {
    pub mc: CMat,
    pub report: ConjugationReport,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ConjugationReport {
    /// `||(mc conj(mc) - I) E||` on interior vectors.
    pub involution: f64,
    /// `||Y^H Y - I||` for `Y = mc conj(E)`.
    pub isometry: f64,
    /// `||C_u k0 - ktilde0||`.
    pub k0_image: f64,
    /// Largest squared distance of `C e` from `H_u^(N)` over unit interior
    /// vectors `e`.
    pub invariance_defect: f64,
    /// `||(C_u S_u* C_u - S_u) E||`.
    pub shift_symmetry: f64,
}

impl ConjugationRep {
    /// `C_u x`.
    pub fn apply(&self, x: &CVec) -> CVec {
        &self.mc * x.map(|z| z.conj())
    }

    /// Matrix of `C_u T* C_u`.
    pub fn conjugate_adjoint(&self, t: &CMat) -> CMat {
        matmul(&matmul(&self.mc, &t.transpose()), &conj_mat(&self.mc))
    }
}

#[allow(non_snake_case)]
pub fn build_Cu(space: &ModelSpace) -> Result<ConjugationRep> {
    build_cu(space)
}

/// Builds `C_u` on `H_u^(N)`. Fails when an interior vector leaves the
/// space under `C` by more than `10 tol_conj`.
pub fn build_cu(space: &ModelSpace) -> Result<ConjugationRep> {
    let dim = space.dim();
    let mut mc = CMat::zeros(dim, dim);
    for j in 0..dim {
        let mut e = CVec::zeros(dim);
        e[j] = ONE;
        mc.set_column(j, &space.coords_of(&conjugate_raw(space, &space.raw_of(&e))));
    }
    let e = space.interior();
    let k = e.ncols();
    let mut invariance_defect: f64 = 0.0;
    for j in 0..k {
        let y = conjugate_raw(space, &space.raw_of(&e.column(j).into_owned()));
        let gap = space.raw_norm_sqr(&y) - space.coords_of(&y).norm_squared();
        invariance_defect = invariance_defect.max(gap.abs());
    }
    let involution = op_norm(&matmul(&(matmul(&mc, &conj_mat(&mc)) - CMat::identity(dim, dim)), e));
    let y = matmul(&mc, &conj_mat(e));
    let isometry = op_norm(&(adjoint_mul(&y, &y) - CMat::identity(k, k)));
    let k0 = &space.k0().coords;
    let k0_image = (&mc * k0.map(|z| z.conj()) - &space.ktilde0().coords).norm();
    let s = space.su();
    let shift_symmetry = interior_norm(space, &(matmul(&matmul(&mc, &s.transpose()), &conj_mat(&mc)) - s));
    let report = ConjugationReport { involution, isometry, k0_image, invariance_defect, shift_symmetry };
    if invariance_defect > 10.0 * TOL_CONJ {
        return Err(Error::Residual {
            what: "conjugation leaves the truncated space".into(),
            residual: invariance_defect,
            tol: 10.0 * TOL_CONJ,
        });
    }
    Ok(ConjugationRep { mc, report })
}

/// `h = Δ(d - a) + u c + ū b`, split as `plain + Δ·scaled`. `A_F` is
/// `C_u`-symmetric when `h` vanishes on `{Δ > 0}`; `h` is unchanged by
/// adding a zero symbol.
pub fn symmetry_residual_symbol(space: &ModelSpace, f: &SymbolMatrix) -> SymbolEntry {
    let u = space.u().as_fn();
    let ub = u.conj();
    let d2 = space.delta_sq();
    let plain = &(&d2.product(&(&f.d.scaled - &f.a.scaled)) + &u.product(&f.c.plain)) + &ub.product(&f.b.plain);
    let scaled = &(&(&f.d.plain - &f.a.plain) + &u.product(&f.c.scaled)) + &ub.product(&f.b.scaled);
    SymbolEntry::new(plain, scaled).trimmed(TRIM)
}

/// `sup |h|` on the grid nodes where `Δ > eps_delta`.
pub fn symmetry_residual_sup(space: &ModelSpace, f: &SymbolMatrix, grid: usize) -> f64 {
    let h = symmetry_residual_symbol(space, f);
    let d2 = space.delta_sq();
    let vals = h.values_on(grid, d2);
    let dv = d2.values_on(grid);
    vals.iter()
        .zip(&dv)
        .filter(|(_, d)| d.re.max(0.0).sqrt() > EPS_DELTA)
        .map(|(v, _)| v.norm())
        .fold(0.0, f64::max)
}

/// `T = T1 + T2` with `C_u T1* C_u = T1` and `C_u T2* C_u = -T2`.
#[derive(Clone, Debug)]
pub struct SymmetricDecomposition {
    pub t1: CMat,
    pub t2: CMat,
    pub report: DecompositionReport,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct DecompositionReport {
    /// `||T - T1 - T2||`.
    pub sum_residual: f64,
    /// `||(C_u T1* C_u - T1) E||`.
    pub symmetric_residual: f64,
    /// `||(C_u T2* C_u + T2) E||`.
    pub skew_residual: f64,
    pub t1_norm: f64,
    pub t2_norm: f64,
    pub t1_invariance: f64,
    pub t2_invariance: f64,
}

pub fn decompose_symmetric(space: &ModelSpace, cu: &ConjugationRep, t: &CMat) -> SymmetricDecomposition {
    let ct = cu.conjugate_adjoint(t);
    let t1 = (t + &ct) * c(0.5);
    let t2 = (t - &ct) * c(0.5);
    let report = DecompositionReport {
        sum_residual: op_norm(&(t - &t1 - &t2)),
        symmetric_residual: interior_norm(space, &(cu.conjugate_adjoint(&t1) - &t1)),
        skew_residual: interior_norm(space, &(cu.conjugate_adjoint(&t2) + &t2)),
        t1_norm: interior_norm(space, &t1),
        t2_norm: interior_norm(space, &t2),
        t1_invariance: invariance_residual(space, &t1),
        t2_invariance: invariance_residual(space, &t2),
    };
    SymmetricDecomposition { t1, t2, report }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SymmetryKind {
    Symmetric,
    Skew,
}

#[derive(Clone, Debug)]
pub struct CanonicalSymbol {
    pub symbol: SymbolMatrix,
    /// For the skew kind, the function `f` of `[[-Δf, uf], [ūf, Δf]]`.
    pub skew_function: Option<SymbolEntry>,
    /// `||(A_F - T) E||` on interior vectors.
    pub certificate: f64,
    /// `sup |h|` of the canonical symbol on `{Δ > eps_delta}` (symmetric kind).
    pub symmetry_residual: f64,
}

/// The symbol `[[-Δf, uf], [ūf, Δf]]`.
pub fn skew_symbol(space: &ModelSpace, f: &SymbolEntry) -> SymbolMatrix {
    let u = space.u().as_fn();
    let d2 = space.delta_sq();
    let delta_f = SymbolEntry::new(d2.product(&f.scaled), f.plain.clone());
    SymbolMatrix::new(delta_f.scale(c(-1.0)), f.times(u), f.times(&u.conj()), delta_f)
}

/// Canonical symbol of a certified symmetric or skew truncated
/// multiplication operator.
///
/// Symmetric: `[[a, b], [c, a - ūβ - uγ]]` with `b = Δβ`, `c = Δγ` taken
/// from a recovered symbol. Skew: `f = h/2` where `h` is the symmetry
/// residual of a recovered symbol, since `h = 2f` for the skew form.
pub fn canonical_symbols(space: &ModelSpace, t: &CMat, kind: SymmetryKind, tol_accept: f64) -> Result<CanonicalSymbol> {
    let rec = recover_symbol(space, t, tol_accept)?;
    let f = rec.symbol;
    let (symbol, skew_function) = match kind {
        SymmetryKind::Symmetric => {
            // recovered b, c are Δ-scaled and a, d plain, so h = Δ(d - a + ūβ + uγ)
            let h = symmetry_residual_symbol(space, &f);
            let d = SymbolEntry::new(&f.d.plain - &h.scaled, f.d.scaled.clone());
            (SymbolMatrix::new(f.a.clone(), f.b.clone(), f.c.clone(), d).trimmed(TRIM), None)
        }
        SymmetryKind::Skew => {
            let h = symmetry_residual_symbol(space, &f);
            let g = h.scale(c(0.5));
            (skew_symbol(space, &g).trimmed(TRIM), Some(g))
        }
    };
    let certificate = interior_norm(space, &(compress_symbol(space, &symbol) - t));
    let symmetry_residual = match kind {
        SymmetryKind::Symmetric => symmetry_residual_sup(space, &symbol, 1024),
        SymmetryKind::Skew => 0.0,
    };
    Ok(CanonicalSymbol { symbol, skew_function, certificate, symmetry_residual })
}
