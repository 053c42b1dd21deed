//! Symbols `F = [[a, b], [c, d]]`, their compressions `A_F = P_{H_u} M_F`,
//! and the distinguished operators `S_u` and `X_mu`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::harmonic::{AnalyticPoly, CircleFunction, ONE, ZERO};
use crate::linalg::{adjoint_mul, matmul, op_norm, outer, CMat};
use crate::modelspace::ModelSpace;
use crate::tolerances::{calibrated, DEFAULT_GRID};

/// Dense matrix of an operator on `H_u^(N)` in the orthonormal basis.
pub type OperatorMatrix = CMat;

/// A symbol entry `plain + Delta * scaled`.
///
/// Entries of `H_u`-compatible symbols naturally carry a factor `Delta`
/// (for instance the lower-left entry `Delta c` of a commutant symbol).
/// Keeping that factor symbolic means every inner product it enters only
/// involves the exact coefficients of `Delta^2`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolEntry {
    pub plain: CircleFunction,
    pub scaled: CircleFunction,
}

impl SymbolEntry {
    pub fn new(plain: CircleFunction, scaled: CircleFunction) -> Self {
        Self { plain, scaled }
    }

    pub fn zero() -> Self {
        Self::plain(CircleFunction::zero(DEFAULT_GRID))
    }

    pub fn plain(f: CircleFunction) -> Self {
        let g = f.grid_size();
        Self { plain: f, scaled: CircleFunction::zero(g) }
    }

    /// `Delta * f`.
    pub fn scaled(f: CircleFunction) -> Self {
        let g = f.grid_size();
        Self { plain: CircleFunction::zero(g), scaled: f }
    }

    pub fn constant(z: Complex64) -> Self {
        Self::plain(CircleFunction::constant(z, DEFAULT_GRID))
    }

    pub fn conj(&self) -> Self {
        Self { plain: self.plain.conj(), scaled: self.scaled.conj() }
    }

    pub fn add(&self, o: &Self) -> Self {
        Self { plain: &self.plain + &o.plain, scaled: &self.scaled + &o.scaled }
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self { plain: &self.plain - &o.plain, scaled: &self.scaled - &o.scaled }
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self { plain: self.plain.scale(s), scaled: self.scaled.scale(s) }
    }

    /// Multiplication by a plain function.
    pub fn times(&self, f: &CircleFunction) -> Self {
        Self { plain: self.plain.product(f), scaled: self.scaled.product(f) }
    }

    /// Product of two entries; needs `Delta^2`.
    pub fn product(&self, o: &Self, delta_sq: &CircleFunction) -> Self {
        let plain = &self.plain.product(&o.plain)
            + &self.scaled.product(&o.scaled).product(delta_sq);
        let scaled = &self.plain.product(&o.scaled) + &self.scaled.product(&o.plain);
        Self { plain, scaled }
    }

    /// Drops negligible outer coefficients of both parts.
    pub fn trimmed(&self, tol: f64) -> Self {
        Self { plain: self.plain.trimmed(tol), scaled: self.scaled.trimmed(tol) }
    }

    pub fn order(&self) -> usize {
        self.plain.order().max(self.scaled.order())
    }

    /// No `Delta` factor.
    pub fn is_plain(&self) -> bool {
        self.scaled.coeffs().iter().all(|z| *z == ZERO)
    }

    /// Pointwise values on a uniform grid of `g` nodes, with `Delta` taken as
    /// the nonnegative root of the exact `Delta^2`.
    pub fn values_on(&self, g: usize, delta_sq: &CircleFunction) -> Vec<Complex64> {
        let p = self.plain.values_on(g);
        let s = self.scaled.values_on(g);
        let d = delta_sq.values_on(g);
        p.iter().zip(&s).zip(&d).map(|((p, s), d)| p + s * d.re.max(0.0).sqrt()).collect()
    }

    /// Fourier coefficients of `entry * Delta^k` for `k` in `0..=2`.
    fn weighted(&self, k: u32, space: &ModelSpace) -> CircleFunction {
        let delta = space.delta();
        let d2 = space.delta_sq();
        let times_delta = |f: &CircleFunction| {
            if f.coeffs().iter().all(|z| *z == ZERO) {
                f.clone()
            } else {
                f.product(delta)
            }
        };
        match k {
            0 => &self.plain + &times_delta(&self.scaled),
            1 => &times_delta(&self.plain) + &self.scaled.product(d2),
            _ => &self.plain.product(d2) + &times_delta(&self.scaled.product(d2)),
        }
    }
}

/// `F = [[a, b], [c, d]]`.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolMatrix {
    pub a: SymbolEntry,
    pub b: SymbolEntry,
    pub c: SymbolEntry,
    pub d: SymbolEntry,
}

impl SymbolMatrix {
    pub fn new(a: SymbolEntry, b: SymbolEntry, c: SymbolEntry, d: SymbolEntry) -> Self {
        Self { a, b, c, d }
    }

    pub fn zero() -> Self {
        Self::new(SymbolEntry::zero(), SymbolEntry::zero(), SymbolEntry::zero(), SymbolEntry::zero())
    }

    pub fn identity() -> Self {
        Self::diag(SymbolEntry::constant(ONE), SymbolEntry::constant(ONE))
    }

    pub fn diag(a: SymbolEntry, d: SymbolEntry) -> Self {
        Self::new(a, SymbolEntry::zero(), SymbolEntry::zero(), d)
    }

    /// `diag(chi, chi)`, a symbol of `S_u`.
    pub fn shift() -> Self {
        let chi = SymbolEntry::plain(CircleFunction::chi(DEFAULT_GRID));
        Self::diag(chi.clone(), chi)
    }

    /// `F* = [[conj a, conj c], [conj b, conj d]]`.
    pub fn adjoint(&self) -> Self {
        Self::new(self.a.conj(), self.c.conj(), self.b.conj(), self.d.conj())
    }

    pub fn add(&self, o: &Self) -> Self {
        Self::new(self.a.add(&o.a), self.b.add(&o.b), self.c.add(&o.c), self.d.add(&o.d))
    }

    pub fn sub(&self, o: &Self) -> Self {
        Self::new(self.a.sub(&o.a), self.b.sub(&o.b), self.c.sub(&o.c), self.d.sub(&o.d))
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self::new(self.a.scale(s), self.b.scale(s), self.c.scale(s), self.d.scale(s))
    }

    pub fn trimmed(&self, tol: f64) -> Self {
        Self::new(self.a.trimmed(tol), self.b.trimmed(tol), self.c.trimmed(tol), self.d.trimmed(tol))
    }

    pub fn entries(&self) -> [&SymbolEntry; 4] {
        [&self.a, &self.b, &self.c, &self.d]
    }

    pub fn order(&self) -> usize {
        self.entries().iter().map(|e| e.order()).max().unwrap_or(0)
    }
}

/// The rank-one symbol `[[chi conj(u), chi Delta], [0, 0]]` of `k0 ⊗ ktilde0`.
pub fn rank_one_symbol(u: &AnalyticPoly) -> SymbolMatrix {
    let chi = CircleFunction::chi(DEFAULT_GRID);
    SymbolMatrix::new(
        SymbolEntry::plain(u.as_fn().conj().product(&chi)),
        SymbolEntry::scaled(chi),
        SymbolEntry::zero(),
        SymbolEntry::zero(),
    )
}

/// Matrix of `A_F = P_{H_u} M_F |_{H_u}` in the orthonormal basis.
pub fn compress_symbol(space: &ModelSpace, f: &SymbolMatrix) -> OperatorMatrix {
    let n = space.order() as i64;
    let fa = f.a.weighted(0, space);
    let fb = f.b.weighted(1, space);
    let fc = f.c.weighted(1, space);
    let fd = f.d.weighted(2, space);
    let fl = (n + 1) as usize;
    let len = space.raw_len();
    let mut tm = CMat::zeros(len, len);
    let hi = |k: i64| (fl as i64 + k + n) as usize;
    for l in 0..=n {
        for k in 0..=n {
            tm[(l as usize, k as usize)] = fa.coeff(l - k);
        }
        for k in -n..=n {
            tm[(l as usize, hi(k))] = fb.coeff(l - k);
        }
    }
    for l in -n..=n {
        for k in 0..=n {
            tm[(hi(l), k as usize)] = fc.coeff(l - k);
        }
        for k in -n..=n {
            tm[(hi(l), hi(k))] = fd.coeff(l - k);
        }
    }
    let b = space.onb();
    matmul(&adjoint_mul(b, &tm), b)
}

pub(crate) fn build_su_uncached(space: &ModelSpace) -> OperatorMatrix {
    compress_symbol(space, &SymbolMatrix::shift())
}

/// Matrix of `S_u = P_{H_u} U |_{H_u}`.
pub fn build_su(space: &ModelSpace) -> OperatorMatrix {
    space.su().clone()
}

/// `X_mu = S_u + (mu + u(0)) k0 ⊗ ktilde0 / ||ktilde0||^2`.
pub fn build_xmu(space: &ModelSpace, mu: Complex64) -> OperatorMatrix {
    let coef = (mu + space.u().at_zero()) / space.k_norm_sqr();
    space.su() + outer(&space.k0().coords, &space.ktilde0().coords) * coef
}

/// `[[a, 0], [Delta c, a - u c]]`, whose compression commutes with `S_u`.
pub fn commutant_symbol(u: &AnalyticPoly, a: &AnalyticPoly, c: &CircleFunction) -> SymbolMatrix {
    let uc = u.as_fn().product(c);
    SymbolMatrix::new(
        SymbolEntry::plain(a.as_fn().clone()),
        SymbolEntry::zero(),
        SymbolEntry::scaled(c.clone()),
        SymbolEntry::plain(a.as_fn() - &uc),
    )
}

/// Recovers `(a, c)` from a commutant-form symbol.
pub fn commutant_parts(u: &AnalyticPoly, f: &SymbolMatrix, tol: f64) -> Result<(AnalyticPoly, CircleFunction)> {
    let small = |g: &CircleFunction| g.l2_norm() <= tol;
    if !small(&f.b.plain) || !small(&f.b.scaled) {
        return Err(Error::NotCommutantForm("upper-right entry is not zero".into()));
    }
    if !small(&f.a.scaled) || !small(&f.c.plain) || !small(&f.d.scaled) {
        return Err(Error::NotCommutantForm("entries carry the wrong Delta factors".into()));
    }
    if !small(&f.a.plain.project_minus()) {
        return Err(Error::NotCommutantForm("upper-left entry is not analytic".into()));
    }
    let a = f.a.plain.project_plus();
    let c = f.c.scaled.clone();
    let expected = a.as_fn() - &u.as_fn().product(&c);
    if !small(&(&f.d.plain - &expected)) {
        return Err(Error::NotCommutantForm("lower-right entry differs from a - u c".into()));
    }
    Ok((a, c))
}

/// Product law `a'' = a a'`, `c'' = a c' + a' c - u c c'` for commutant symbols.
pub fn symbol_product(u: &AnalyticPoly, f: &SymbolMatrix, g: &SymbolMatrix) -> Result<SymbolMatrix> {
    let (a1, c1) = commutant_parts(u, f, 1e-12)?;
    let (a2, c2) = commutant_parts(u, g, 1e-12)?;
    let a = AnalyticPoly::try_from_fn(a1.as_fn().product(a2.as_fn()))?;
    let c = &(&a1.as_fn().product(&c2) + &a2.as_fn().product(&c1))
        - &u.as_fn().product(&c1).product(&c2);
    Ok(commutant_symbol(u, &a, &c))
}

/// `||M E||` for the interior basis `E`: the action of `M` on exact
/// elements of `H_u`, free of window truncation.
pub fn interior_norm(space: &ModelSpace, m: &CMat) -> f64 {
    op_norm(&matmul(m, space.interior()))
}

/// Residuals of the defect identities `I - S S* = k0 ⊗ k0` and
/// `I - S* S = ktilde0 ⊗ ktilde0`.
#[derive(Clone, Copy, Debug, Serialize, Deserialize, PartialEq)]
pub struct DefectLeak {
    /// On interior vectors.
    pub left: f64,
    pub right: f64,
    /// On the whole truncated space, boundary included.
    pub left_full: f64,
    pub right_full: f64,
}

impl DefectLeak {
    /// The larger interior residual; the basis for calibrated tolerances.
    pub fn leak(&self) -> f64 {
        self.left.max(self.right)
    }

    pub fn tolerance(&self) -> f64 {
        calibrated(self.leak())
    }
}

pub fn defect_leak(space: &ModelSpace) -> DefectLeak {
    let s = space.su();
    let id = CMat::identity(space.dim(), space.dim());
    let k0 = &space.k0().coords;
    let kt = &space.ktilde0().coords;
    let l = &id - matmul(s, &s.adjoint()) - outer(k0, k0);
    let r = &id - adjoint_mul(s, s) - outer(kt, kt);
    DefectLeak {
        left: interior_norm(space, &l),
        right: interior_norm(space, &r),
        left_full: op_norm(&l),
        right_full: op_norm(&r),
    }
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum EntryRepr {
    Bare(CircleFunction),
    Split {
        #[serde(default)]
        plain: Option<CircleFunction>,
        #[serde(default)]
        scaled: Option<CircleFunction>,
    },
}

impl Serialize for SymbolEntry {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        EntryRepr::Split { plain: Some(self.plain.clone()), scaled: Some(self.scaled.clone()) }
            .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymbolEntry {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        Ok(match EntryRepr::deserialize(d)? {
            EntryRepr::Bare(f) => SymbolEntry::plain(f),
            EntryRepr::Split { plain, scaled } => SymbolEntry::new(
                plain.unwrap_or_else(|| CircleFunction::zero(DEFAULT_GRID)),
                scaled.unwrap_or_else(|| CircleFunction::zero(DEFAULT_GRID)),
            ),
        })
    }
}

#[derive(Serialize, Deserialize)]
struct MatrixRepr {
    a: Option<SymbolEntry>,
    b: Option<SymbolEntry>,
    c: Option<SymbolEntry>,
    d: Option<SymbolEntry>,
    #[serde(default)]
    grid_size: Option<usize>,
}

impl Serialize for SymbolMatrix {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        let grid = self.entries().iter().map(|e| e.plain.grid_size()).max();
        MatrixRepr {
            a: Some(self.a.clone()),
            b: Some(self.b.clone()),
            c: Some(self.c.clone()),
            d: Some(self.d.clone()),
            grid_size: grid,
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for SymbolMatrix {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let r = MatrixRepr::deserialize(d)?;
        let e = |x: Option<SymbolEntry>| x.unwrap_or_else(SymbolEntry::zero);
        Ok(SymbolMatrix::new(e(r.a), e(r.b), e(r.c), e(r.d)))
    }
}
