//! Möbius transport of the model: `u_α = (u - α)/(1 - conj(α) u)`, the
//! function matrix `F_α` and the unitary `V_α : H_u -> H_{u_α}` given by
//! multiplication with `F_α`.

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::harmonic::{convolve, AnalyticPoly, CircleFunction, ONE, ZERO};
use crate::linalg::{adjoint_mul, c, matmul, op_norm, CMat, CVec};
use crate::modelspace::{ModelSpace, RawPair};
use crate::symbols::{build_xmu, interior_norm, SymbolEntry, SymbolMatrix};
use crate::tolerances::{DEFAULT_GRID, MODEL_GRID, TOL_EXP, TOL_STRICT};

/// Grid used for the pointwise identities.
const CHECK_GRID: usize = 4096;

/// Taylor coefficients of `1/(1 - w)` up to degree `deg`, for a polynomial
/// `w` with `|w(0)| < 1`.
fn reciprocal_series(w: &[Complex64], deg: usize) -> Vec<Complex64> {
    let mut q = vec![ZERO; deg + 1];
    let lead = ONE - w.first().copied().unwrap_or(ZERO);
    for n in 0..=deg {
        let mut acc = if n == 0 { ONE } else { ZERO };
        for k in 1..w.len().min(n + 1) {
            acc += w[k] * q[n - k];
        }
        q[n] = acc / lead;
    }
    q
}

fn truncated_product(a: &[Complex64], b: &[Complex64], deg: usize) -> Vec<Complex64> {
    let mut p = convolve(a, b);
    p.resize(deg + 1, ZERO);
    p
}

fn check_alpha(alpha: Complex64) -> Result<()> {
    if !alpha.is_finite() || alpha.norm() >= 1.0 - TOL_STRICT {
        return Err(Error::BadAlpha { modulus: alpha.norm() });
    }
    Ok(())
}

/// `u_α` as a Taylor polynomial together with the sup-norm error of the
/// truncation.
#[derive(Clone, Debug, Serialize)]
pub struct MobiusTransport {
    pub u_alpha: AnalyticPoly,
    /// `sup |u_α(poly) - (u - α)/(1 - conj(α) u)|` on the check grid.
    pub expansion_residual: f64,
    /// `sup |Δ_α(from u_α) - sqrt(1 - |α|^2) Δ / |1 - conj(α) u||`.
    pub delta_identity: f64,
    /// The degree cap was reached before the tail fell below `tol_exp`.
    pub capped: bool,
    /// The capped expansion was scaled back into the closed unit disc.
    pub rescaled: bool,
}

impl MobiusTransport {
    /// `Δ_α` on `g` grid points, computed from the polynomial `u_α`.
    pub fn delta_alpha_values(&self, g: usize) -> Vec<f64> {
        delta_values(&self.u_alpha, g)
    }
}

fn delta_values(u: &AnalyticPoly, g: usize) -> Vec<f64> {
    u.as_fn().values_on(g).iter().map(|z| (1.0 - z.norm_sqr()).max(0.0).sqrt()).collect()
}

/// Expands `u_α` as a polynomial of degree at most `max_degree`.
pub fn mobius_transport(u: &AnalyticPoly, alpha: Complex64, max_degree: usize) -> Result<MobiusTransport> {
    check_alpha(alpha)?;
    crate::harmonic::check_purely_contractive(u)?;
    let taylor = u.taylor();
    let w: Vec<_> = taylor.iter().map(|z| alpha.conj() * z).collect();
    let mut num = taylor.clone();
    num[0] -= alpha;
    let q = reciprocal_series(&w, max_degree);
    let mut ua = truncated_product(&num, &q, max_degree);
    let capped = ua.last().map_or(false, |z| z.norm() > TOL_EXP);
    while ua.len() > 1 && ua.last().map_or(false, |z| z.norm() < TOL_EXP * 1e-3) {
        ua.pop();
    }
    let mut u_alpha = AnalyticPoly::with_grid(&ua, DEFAULT_GRID);
    // a capped expansion of a boundary-touching u may overshoot the unit disc
    let mut rescaled = false;
    if let Err(Error::SupNormExceeded { sup }) = crate::harmonic::check_purely_contractive(&u_alpha) {
        let k = (1.0 - f64::EPSILON) / sup;
        ua.iter_mut().for_each(|z| *z *= k);
        u_alpha = AnalyticPoly::with_grid(&ua, DEFAULT_GRID);
        rescaled = true;
    }

    let uv = u.as_fn().values_on(CHECK_GRID);
    let uav = u_alpha.as_fn().values_on(CHECK_GRID);
    let s = (1.0 - alpha.norm_sqr()).sqrt();
    let mut expansion_residual: f64 = 0.0;
    let mut delta_identity: f64 = 0.0;
    for (z, za) in uv.iter().zip(&uav) {
        let den = ONE - alpha.conj() * z;
        expansion_residual = expansion_residual.max((za - (z - alpha) / den).norm());
        let d = (1.0 - z.norm_sqr()).max(0.0).sqrt();
        let da = (1.0 - za.norm_sqr()).max(0.0).sqrt();
        delta_identity = delta_identity.max((da - s * d / den.norm()).abs());
    }
    Ok(MobiusTransport { u_alpha, expansion_residual, delta_identity, capped, rescaled })
}

/// `F_α` as a symbol matrix. The `(2,1)` and `(2,2)` entries are not
/// polynomial; their Fourier series are cut at `order`.
pub fn f_alpha_symbol(u: &AnalyticPoly, alpha: Complex64, order: usize) -> Result<SymbolMatrix> {
    check_alpha(alpha)?;
    let s = (1.0 - alpha.norm_sqr()).sqrt();
    let w: Vec<_> = u.taylor().iter().map(|z| alpha.conj() * z).collect();
    let q: Vec<_> = reciprocal_series(&w, order).iter().map(|z| z * s).collect();
    let g = crate::harmonic::min_grid(order).max(MODEL_GRID);
    let uv = u.as_fn().values_on(g);
    let c21: Vec<_> = uv.iter().map(|z| alpha.conj() / (ONE - alpha.conj() * z).norm()).collect();
    let c22: Vec<_> = uv
        .iter()
        .map(|z| {
            let den = ONE - alpha.conj() * z;
            den / den.norm()
        })
        .collect();
    let grid = crate::harmonic::min_grid(order).max(DEFAULT_GRID);
    let fix = |f: CircleFunction| f.with_grid(grid);
    Ok(SymbolMatrix::new(
        SymbolEntry::plain(CircleFunction::from_taylor(&q, grid)),
        SymbolEntry::zero(),
        SymbolEntry::scaled(fix(CircleFunction::from_grid(&c21, order)?)?.trimmed(TOL_EXP)),
        SymbolEntry::plain(fix(CircleFunction::from_grid(&c22, order)?)?.trimmed(TOL_EXP)),
    ))
}

/// Pointwise values of `F_α` for data `(u, Δ)` at one grid node.
fn f_alpha_at(z: Complex64, d: f64, alpha: Complex64) -> [Complex64; 4] {
    let s = (1.0 - alpha.norm_sqr()).sqrt();
    let den = ONE - alpha.conj() * z;
    [c(s) / den, ZERO, alpha.conj() * d / den.norm(), den / den.norm()]
}

fn mul2(x: [Complex64; 4], y: [Complex64; 4]) -> [Complex64; 4] {
    [
        x[0] * y[0] + x[1] * y[2],
        x[0] * y[1] + x[1] * y[3],
        x[2] * y[0] + x[3] * y[2],
        x[2] * y[1] + x[3] * y[3],
    ]
}

/// `max |F_α F_α^{-1} - I|` over the grid, with `F_α^{-1}` evaluated as
/// `F_{-α}` at `u_α` and `Δ_α`.
pub fn inverse_identity(u: &AnalyticPoly, mt: &MobiusTransport, alpha: Complex64) -> f64 {
    let uv = u.as_fn().values_on(CHECK_GRID);
    let uav = mt.u_alpha.as_fn().values_on(CHECK_GRID);
    let mut worst: f64 = 0.0;
    for (z, za) in uv.iter().zip(&uav) {
        let f = f_alpha_at(*z, (1.0 - z.norm_sqr()).max(0.0).sqrt(), alpha);
        let g = f_alpha_at(*za, (1.0 - za.norm_sqr()).max(0.0).sqrt(), -alpha);
        for p in [mul2(f, g), mul2(g, f)] {
            let e = [p[0] - ONE, p[1], p[2], p[3] - ONE];
            worst = worst.max(e.iter().map(|x| x.norm()).fold(0.0, f64::max));
        }
    }
    worst
}

/// `M_{F_α}` on raw pairs: `f ⊕ Δ h` goes to `f_α ⊕ Δ_α h_α` with
/// `f_α = s f / (1 - conj(α) u)` (cut at degree `deg`) and
/// `h_α = (conj(α) f + (1 - conj(α) u) h) / s`, `s = sqrt(1 - |α|^2)`.
pub fn apply_f_alpha(u: &AnalyticPoly, alpha: Complex64, x: &RawPair, deg: usize) -> RawPair {
    let s = (1.0 - alpha.norm_sqr()).sqrt();
    let w: Vec<_> = u.taylor().iter().map(|z| alpha.conj() * z).collect();
    let q = reciprocal_series(&w, deg);
    let f: Vec<_> = (0..=x.f.order().min(deg)).map(|j| x.f.coeff(j as i64)).collect();
    let fa: Vec<_> = truncated_product(&f, &q, deg).iter().map(|z| z * s).collect();
    let g = x.h.grid_size().max(x.f.grid_size());
    let f_fn = CircleFunction::from_taylor(&f, g);
    let one_minus = &CircleFunction::constant(ONE, g) - &u.as_fn().scale(alpha.conj()).with_grid(g).expect("grid");
    let ha = (&f_fn.scale(alpha.conj()) + &one_minus.product(&x.h)).scale(c(1.0 / s));
    RawPair::new(CircleFunction::from_taylor(&fa, g), ha)
}

/// Transport data between `H_u^(N)` and `H_{u_α}^(N)`.
#[derive(Debug)]
pub struct CrofootData {
    pub alpha: Complex64,
    pub transport: MobiusTransport,
    pub f_alpha: SymbolMatrix,
    /// `dim(H_{u_α}^(N)) x dim(H_u^(N))`, phase fixed by `<V k0, k0^α> > 0`.
    pub v: CMat,
    pub target: ModelSpace,
    pub metrics: CrofootMetrics,
}

/// Defect metrics of [`CrofootData`].
#[derive(Clone, Copy, Debug, Serialize)]
pub struct CrofootMetrics {
    /// `||(V^H V - I) E||` on interior vectors.
    pub isometry_defect: f64,
    /// `||V^H V - I||` on the whole truncated space.
    pub isometry_defect_full: f64,
    /// Largest squared distance of the image of a unit interior vector from
    /// `H_{u_α}^(N)`.
    pub range_defect: f64,
    pub inverse_identity: f64,
    /// `|<V k0, k0^α>|` before the phase was fixed.
    pub k0_overlap: f64,
}

impl CrofootData {
    pub fn leak(&self) -> f64 {
        self.metrics.isometry_defect
    }

    pub fn report(&self) -> CrofootReport {
        CrofootReport {
            alpha: [self.alpha.re, self.alpha.im],
            u_alpha: self.transport.u_alpha.clone(),
            expansion_residual: self.transport.expansion_residual,
            delta_identity: self.transport.delta_identity,
            capped: self.transport.capped,
            metrics: self.metrics,
        }
    }
}

/// Serializable summary of [`CrofootData`].
#[derive(Clone, Debug, Serialize)]
pub struct CrofootReport {
    pub alpha: [f64; 2],
    pub u_alpha: AnalyticPoly,
    pub expansion_residual: f64,
    pub delta_identity: f64,
    pub capped: bool,
    pub metrics: CrofootMetrics,
}

/// Builds `H_{u_α}^(N)` and the matrix of `V_α`.
pub fn build_crofoot(space: &ModelSpace, alpha: Complex64) -> Result<CrofootData> {
    let n = space.order();
    let u = space.u();
    let transport = mobius_transport(u, alpha, n - 2)?;
    let target = ModelSpace::build(&transport.u_alpha, n)?;
    let dim = space.dim();
    let mut v = CMat::zeros(target.dim(), dim);
    for j in 0..dim {
        let mut e = CVec::zeros(dim);
        e[j] = ONE;
        let y = apply_f_alpha(u, alpha, &space.raw_of(&e), n);
        v.set_column(j, &target.coords_of(&y));
    }
    let z = target.k0().coords.dotc(&(&v * &space.k0().coords));
    if z.norm() > TOL_STRICT {
        v *= z.conj() / z.norm();
    }

    let e = space.interior();
    let ve = matmul(&v, e);
    let k = e.ncols();
    let isometry_defect = op_norm(&(adjoint_mul(&ve, &ve) - CMat::identity(k, k)));
    let isometry_defect_full = op_norm(&(adjoint_mul(&v, &v) - CMat::identity(dim, dim)));
    let mut range_defect: f64 = 0.0;
    for j in 0..k {
        let y = apply_f_alpha(u, alpha, &space.raw_of(&e.column(j).into_owned()), n);
        let gap = target.raw_norm_sqr(&y) - ve.column(j).norm_squared();
        range_defect = range_defect.max(gap.abs());
    }
    let metrics = CrofootMetrics {
        isometry_defect,
        isometry_defect_full,
        range_defect,
        inverse_identity: inverse_identity(u, &transport, alpha),
        k0_overlap: z.norm(),
    };
    Ok(CrofootData {
        alpha,
        f_alpha: f_alpha_symbol(u, alpha, 4 * n)?,
        transport,
        v,
        target,
        metrics,
    })
}

/// `V T V^H` on `H_{u_α}^(N)`.
pub fn transport_operator(cd: &CrofootData, t: &CMat) -> Result<CMat> {
    if t.nrows() != cd.v.ncols() || t.ncols() != cd.v.ncols() {
        let got = if t.nrows() != cd.v.ncols() { t.nrows() } else { t.ncols() };
        return Err(Error::Dimension { expected: cd.v.ncols(), got });
    }
    Ok(matmul(&matmul(&cd.v, t), &cd.v.adjoint()))
}

/// `sup |conj(u_α) f_α + Δ_α g_α - s (conj(u) f + Δ g) / (1 - α conj(u))|`
/// on the grid, for `x = f ⊕ Δ h`. The transported pair is evaluated
/// exactly, without cutting the series of `f_α`.
pub fn membership_transport_residual(u: &AnalyticPoly, mt: &MobiusTransport, alpha: Complex64, x: &RawPair) -> f64 {
    let g = CHECK_GRID;
    let s = (1.0 - alpha.norm_sqr()).sqrt();
    let uv = u.as_fn().values_on(g);
    let uav = mt.u_alpha.as_fn().values_on(g);
    let fv = x.f.values_on(g);
    let hv = x.h.values_on(g);
    let mut worst: f64 = 0.0;
    for i in 0..g {
        let (z, za) = (uv[i], uav[i]);
        let d2 = 1.0 - z.norm_sqr();
        let den = ONE - alpha.conj() * z;
        let fa = s * fv[i] / den;
        let ha = (alpha.conj() * fv[i] + den * hv[i]) / s;
        let da2 = 1.0 - za.norm_sqr();
        let lhs = za.conj() * fa + da2 * ha;
        let rhs = s * (z.conj() * fv[i] + d2 * hv[i]) / den.conj();
        worst = worst.max((lhs - rhs).norm());
    }
    worst
}

/// `α = (u(0) + μ)/(1 + conj(u(0)) μ)`. Then `V_α X_μ = S_{u_α} V_α` and
/// `u_α(0) = -μ (1 + u(0) conj(μ))/(1 + conj(u(0)) μ)`, which is `-μ` up
/// to a unimodular factor.
pub fn xmu_alpha(u0: Complex64, mu: Complex64) -> Result<Complex64> {
    let den = ONE + u0.conj() * mu;
    if den.norm() <= TOL_STRICT {
        return Err(Error::BadAlpha { modulus: f64::INFINITY });
    }
    let alpha = (u0 + mu) / den;
    check_alpha(alpha)?;
    Ok(alpha)
}

/// Link between `X_μ` on `H_u` and `S_{u_α}` on `H_{u_α}`.
#[derive(Clone, Debug, Serialize)]
pub struct XmuLink {
    pub alpha: [f64; 2],
    pub u_alpha_at_zero: [f64; 2],
    /// `| |u_α(0)| - |μ| |`.
    pub modulus_residual: f64,
    /// `||(V X_μ - S_{u_α} V) E||` on interior vectors.
    pub intertwining: f64,
    pub isometry_defect: f64,
}

pub fn xmu_link(space: &ModelSpace, mu: Complex64) -> Result<XmuLink> {
    let alpha = xmu_alpha(space.u().at_zero(), mu)?;
    let cd = build_crofoot(space, alpha)?;
    let x = build_xmu(space, mu);
    let r = matmul(&cd.v, &x) - matmul(cd.target.su(), &cd.v);
    let ua0 = cd.transport.u_alpha.at_zero();
    Ok(XmuLink {
        alpha: [alpha.re, alpha.im],
        u_alpha_at_zero: [ua0.re, ua0.im],
        modulus_residual: (ua0.norm() - mu.norm()).abs(),
        intertwining: interior_norm(space, &r),
        isometry_defect: cd.metrics.isometry_defect,
    })
}

/// Transport by `α` followed by transport of `H_{u_α}` by `-α`, compared
/// with the identity embedding of `H_u` up to a unimodular constant.
#[derive(Clone, Copy, Debug, Serialize)]
pub struct Coherence {
    /// `sup |u_{α,-α} - u|` on the grid.
    pub function_residual: f64,
    /// `min_λ ||(W - λ B) E||` with `W` the composed map and `B` the basis change.
    pub operator_residual: f64,
    pub phase: [f64; 2],
}

pub fn composition_coherence(space: &ModelSpace, alpha: Complex64) -> Result<Coherence> {
    let first = build_crofoot(space, alpha)?;
    let second = build_crofoot(&first.target, -alpha)?;
    let back = &second.target;
    let uv = space.u().as_fn().values_on(DEFAULT_GRID);
    let bv = back.u().as_fn().values_on(DEFAULT_GRID);
    let function_residual = uv.iter().zip(&bv).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    let e = space.interior();
    let w = matmul(&second.v, &matmul(&first.v, e));
    let mut b = CMat::zeros(back.dim(), e.ncols());
    for j in 0..e.ncols() {
        b.set_column(j, &back.coords_of(&space.raw_of(&e.column(j).into_owned())));
    }
    let overlap = b.dotc(&w);
    let lambda = if overlap.norm() > 0.0 { overlap / overlap.norm() } else { ONE };
    Ok(Coherence {
        function_residual,
        operator_residual: op_norm(&(w - b * lambda)),
        phase: [lambda.re, lambda.im],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::invariance::invariance_residual;
    use crate::linalg::outer;

    fn chi_half() -> AnalyticPoly {
        AnalyticPoly::from_real(&[0.0, 0.5])
    }

    #[test]
    fn mobius_examples() {
        let u = AnalyticPoly::from_real(&[0.3, 0.4]);
        let mt = mobius_transport(&u, ZERO, 30).unwrap();
        assert!((mt.u_alpha.as_fn() - u.as_fn()).l2_norm() < 1e-15);

        let mt = mobius_transport(&chi_half(), c(0.5), 40).unwrap();
        assert!((mt.u_alpha.at_zero() + 0.5).norm() < 1e-15);
        assert!(mt.u_alpha.as_fn().eval(ONE).norm() < 1e-12);
        assert!((mt.delta_alpha_values(64)[0] - 1.0).abs() < 1e-12);
        assert!(mt.expansion_residual < TOL_EXP && mt.delta_identity < 1e-10);
        assert!(!mt.capped && !mt.rescaled);

        let mt = mobius_transport(&AnalyticPoly::from_real(&[0.0, 1.0]), c(0.4), 60).unwrap();
        assert!(mt.delta_alpha_values(256).iter().all(|d| *d < 1e-7));

        assert!(matches!(mobius_transport(&u, c(1.0), 10), Err(Error::BadAlpha { .. })));
    }

    #[test]
    fn alpha_zero_is_identity() {
        let s = ModelSpace::build(&chi_half(), 16).unwrap();
        let cd = build_crofoot(&s, ZERO).unwrap();
        assert!((&cd.v - CMat::identity(s.dim(), s.dim())).norm() < 1e-12);
        let diff = cd.f_alpha.sub(&SymbolMatrix::identity());
        assert!(diff.entries().iter().all(|e| e.plain.l2_norm() + e.scaled.l2_norm() < 1e-12));
    }

    #[test]
    fn crofoot_isometry_and_transport() {
        let s = ModelSpace::build(&chi_half(), 32).unwrap();
        let cd = build_crofoot(&s, c(0.5)).unwrap();
        assert!(cd.metrics.isometry_defect < 1e-12, "{:?}", cd.metrics);
        assert!(cd.metrics.range_defect < 1e-12);
        assert!(cd.metrics.inverse_identity < 1e-10);
        let z = cd.target.k0().coords.dotc(&(&cd.v * &s.k0().coords));
        assert!(z.im.abs() < 1e-12 && z.re > 0.0);

        let t = transport_operator(&cd, s.su()).unwrap();
        assert!(invariance_residual(&cd.target, &t) < 1e-10);
        let k0 = &s.k0().coords;
        let r0 = invariance_residual(&s, &outer(k0, k0));
        let r1 = invariance_residual(&cd.target, &transport_operator(&cd, &outer(k0, k0)).unwrap());
        assert!(r1 > 0.5 * r0, "{r0} {r1}");
        assert!(transport_operator(&cd, &CMat::zeros(3, 3)).is_err());

        let e = s.interior();
        for j in 0..e.ncols() {
            let x = s.raw_of(&e.column(j).into_owned());
            assert!(membership_transport_residual(s.u(), &cd.transport, c(0.5), &x) < 1e-10);
        }
    }

    #[test]
    fn xmu_intertwining() {
        for u in [AnalyticPoly::from_real(&[0.3, 0.4]), chi_half()] {
            let s = ModelSpace::build(&u, 24).unwrap();
            for mu in [c(0.5), Complex64::new(0.2, 0.4)] {
                let link = xmu_link(&s, mu).unwrap();
                assert!(link.intertwining < 1e-10, "{link:?}");
                assert!(link.modulus_residual < 1e-12);
            }
        }
        assert!(xmu_alpha(ZERO, c(1.0)).is_err());
    }

    #[test]
    fn coherence_returns_to_start() {
        let s = ModelSpace::build(&AnalyticPoly::from_real(&[0.3, 0.4]), 24).unwrap();
        let co = composition_coherence(&s, Complex64::new(0.0, 0.5)).unwrap();
        assert!(co.function_residual < 1e-12 && co.operator_residual < 1e-10, "{co:?}");
    }
}
