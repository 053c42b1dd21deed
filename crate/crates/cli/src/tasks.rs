//! Task execution against model spaces at each truncation order.

use std::path::{Path, PathBuf};

use mslab_core::crofoot::{build_crofoot, composition_coherence, transport_operator, xmu_link};
use mslab_core::families::{random_symbol, random_zero_symbol};
use mslab_core::harmonic::CircleFunction;
use mslab_core::invariance::{extract_d, invariance_residual, recover_symbol, zero_symbol_test};
use mslab_core::io::{matrix_from_rows, read_json, space_summary, MatrixRows};
use mslab_core::linalg::{op_norm, outer, singular_values, CMat};
use mslab_core::modelspace::ModelSpace;
use mslab_core::symbols::{
    build_xmu, compress_symbol, defect_leak, rank_one_symbol, SymbolEntry, SymbolMatrix,
};
use mslab_core::symmetry::{build_cu, canonical_symbols, decompose_symmetric, SymmetryKind};
use mslab_core::tolerances::{calibrated, Tolerances, TOL_MEMBER, TOL_ORTH, TOL_VEC};
use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{resolve, Expectation, ExperimentConfig, OperatorSpec, SymbolSource, TaskSpec};
use crate::report::{Check, OrderResult, Report, TaskReport};

type Outcome = Result<(Vec<Check>, Value), String>;

/// An operator description instantiated once per task, then compressed at
/// every order.
enum Template {
    Shift,
    Identity,
    K0K0,
    RankOne,
    Xmu(Complex64),
    Symbol(SymbolMatrix),
    Matrix(CMat),
}

struct Op {
    label: String,
    matrix: CMat,
    symbol: Option<SymbolMatrix>,
}

impl Template {
    fn instantiate(&self, space: &ModelSpace, label: String) -> Result<Op, String> {
        let (matrix, symbol) = match self {
            Template::Shift => (space.su().clone(), Some(SymbolMatrix::shift())),
            Template::Identity => (CMat::identity(space.dim(), space.dim()), Some(SymbolMatrix::identity())),
            Template::K0K0 => {
                let k = &space.k0().coords;
                (outer(k, k), None)
            }
            Template::RankOne => {
                let f = rank_one_symbol(space.u());
                (compress_symbol(space, &f), Some(f))
            }
            Template::Xmu(mu) => (build_xmu(space, *mu), None),
            Template::Symbol(f) => (compress_symbol(space, f), Some(f.clone())),
            Template::Matrix(m) => {
                if m.nrows() != space.dim() || m.ncols() != space.dim() {
                    return Err(format!(
                        "matrix operator is {}x{}, space has dimension {}",
                        m.nrows(),
                        m.ncols(),
                        space.dim()
                    ));
                }
                (m.clone(), None)
            }
        };
        Ok(Op { label, matrix, symbol })
    }
}

pub struct Runner {
    config: ExperimentConfig,
    base: PathBuf,
    seed: u64,
    tol: Tolerances,
    spaces: Vec<Result<ModelSpace, String>>,
}

impl Runner {
    pub fn new(config: ExperimentConfig, base: &Path, seed: Option<u64>) -> Self {
        let seed = seed.unwrap_or(config.seed);
        let u = config.u.poly();
        let spaces = config.orders.iter().map(|&n| ModelSpace::build(&u, n).map_err(|e| e.to_string())).collect();
        let tol = config.tolerances;
        Self { config, base: base.to_path_buf(), seed, tol, spaces }
    }

    pub fn config(&self) -> &ExperimentConfig {
        &self.config
    }

    /// Space at the given order, or at the first configured order.
    pub fn space(&self, n: Option<usize>) -> Result<&ModelSpace, String> {
        let i = match n {
            None => 0,
            Some(n) => self
                .config
                .orders
                .iter()
                .position(|&m| m == n)
                .ok_or_else(|| format!("order {n} is not configured"))?,
        };
        self.spaces[i].as_ref().map_err(Clone::clone)
    }

    fn rng(&self, index: usize) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(self.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15).wrapping_add(index as u64))
    }

    pub fn load_symbol(&self, s: &SymbolSource) -> Result<SymbolMatrix, String> {
        match s {
            SymbolSource::Inline(f) => Ok(f.clone()),
            SymbolSource::File { file } => {
                let p = resolve(&self.base, file);
                read_json(&p).map_err(|e| format!("{}: {e}", p.display()))
            }
        }
    }

    fn templates(&self, spec: &OperatorSpec, index: usize) -> Result<Vec<(String, Template)>, String> {
        Ok(match spec {
            OperatorSpec::Shift => vec![("S_u".into(), Template::Shift)],
            OperatorSpec::Identity => vec![("I".into(), Template::Identity)],
            OperatorSpec::K0K0 => vec![("k0⊗k0".into(), Template::K0K0)],
            OperatorSpec::RankOne => vec![("k0⊗ktilde0".into(), Template::RankOne)],
            OperatorSpec::Xmu { mu } => vec![(format!("X_mu({})", mu.value()), Template::Xmu(mu.value()))],
            OperatorSpec::Symbol { symbol } => vec![("symbol".into(), Template::Symbol(self.load_symbol(symbol)?))],
            OperatorSpec::Matrix { file } => {
                let p = resolve(&self.base, file);
                let rows: MatrixRows = read_json(&p).map_err(|e| format!("{}: {e}", p.display()))?;
                vec![("matrix".into(), Template::Matrix(matrix_from_rows(&rows).map_err(|e| e.to_string())?))]
            }
            OperatorSpec::RandomSymbols { count, order } => {
                let mut rng = self.rng(index);
                (0..*count)
                    .map(|i| (format!("random[{i}]"), Template::Symbol(random_symbol(&mut rng, *order))))
                    .collect()
            }
        })
    }

    /// Runs every task; failures are recorded per task and order.
    pub fn run(&self) -> Report {
        let tasks: Vec<TaskReport> =
            self.config.tasks.iter().enumerate().map(|(i, t)| self.run_task(i, t)).collect();
        let pass = tasks.iter().all(|t| t.pass);
        Report {
            tool: "mslab".into(),
            version: env!("CARGO_PKG_VERSION").into(),
            seed: self.seed,
            config: self.config.clone(),
            tasks,
            pass,
        }
    }

    fn run_task(&self, index: usize, task: &TaskSpec) -> TaskReport {
        let prepared = self.prepare(index, task);
        let mut results = Vec::new();
        let mut previous_d: Option<CircleFunction> = None;
        for (i, &n) in self.config.orders.iter().enumerate() {
            let outcome = match (&self.spaces[i], &prepared) {
                (Err(e), _) => Err(e.clone()),
                (_, Err(e)) => Err(e.clone()),
                (Ok(space), Ok(p)) => self.run_at(space, task, p, &mut previous_d),
            };
            results.push(match outcome {
                Ok((checks, metrics)) => OrderResult { n, checks, metrics, error: None },
                Err(e) => OrderResult { n, checks: Vec::new(), metrics: Value::Null, error: Some(e) },
            });
        }
        TaskReport::new(index, task.name(), results)
    }

    fn prepare(&self, index: usize, task: &TaskSpec) -> Result<Prepared, String> {
        Ok(match task {
            TaskSpec::Invariance { operator, .. }
            | TaskSpec::Recover { operator }
            | TaskSpec::Symmetry { operator }
            | TaskSpec::Dsweep { operator } => Prepared::Ops(self.templates(operator, index)?),
            TaskSpec::ZeroTest { symbols, random, .. } => {
                let mut out = Vec::new();
                for (i, s) in symbols.iter().enumerate() {
                    out.push((format!("symbol[{i}]"), self.load_symbol(s)?));
                }
                let mut rng = self.rng(index);
                let u = self.config.u.poly();
                for i in 0..*random {
                    out.push((format!("random_zero[{i}]"), random_zero_symbol(&mut rng, &u, 3)));
                }
                Prepared::Symbols(out)
            }
            _ => Prepared::Nothing,
        })
    }

    fn run_at(&self, space: &ModelSpace, task: &TaskSpec, p: &Prepared, previous_d: &mut Option<CircleFunction>) -> Outcome {
        let ops = |p: &Prepared| -> Result<Vec<Op>, String> {
            match p {
                Prepared::Ops(t) => t.iter().map(|(l, t)| t.instantiate(space, l.clone())).collect(),
                _ => Ok(Vec::new()),
            }
        };
        match task {
            TaskSpec::Build => task_build(space, &self.tol),
            TaskSpec::Invariance { expect, .. } => task_invariance(space, &ops(p)?, *expect, &self.tol),
            TaskSpec::Recover { .. } => task_recover(space, &ops(p)?, &self.tol),
            TaskSpec::ZeroTest { expect_zero, .. } => match p {
                Prepared::Symbols(s) => task_zero(space, s, *expect_zero, &self.tol),
                _ => unreachable!("zero_test prepares symbols"),
            },
            TaskSpec::Crofoot { alpha } => task_crofoot(space, alpha.value(), &self.tol),
            TaskSpec::Symmetry { .. } => task_symmetry(space, &ops(p)?, &self.tol),
            TaskSpec::Xmu { mu } => task_xmu(space, mu.value(), &self.tol),
            TaskSpec::Dsweep { .. } => task_dsweep(space, &ops(p)?, previous_d, &self.tol),
            TaskSpec::NoncommutativeExample => task_noncommutative(space),
        }
    }
}

enum Prepared {
    Nothing,
    Ops(Vec<(String, Template)>),
    Symbols(Vec<(String, SymbolMatrix)>),
}

fn tol_calibrated(space: &ModelSpace) -> f64 {
    calibrated(defect_leak(space).leak())
}

fn task_build(space: &ModelSpace, tol: &Tolerances) -> Outcome {
    let d = space.diagnostics();
    let leak = defect_leak(space);
    let u0 = space.u().at_zero();
    let kn = (space.k_norm_sqr() - (1.0 - u0.norm_sqr())).abs();
    let checks = vec![
        Check::at_most("orthonormality", "onb is orthonormal in the weighted inner product", d.orthonormality, TOL_ORTH),
        Check::at_most("generator_orthogonality", "onb is orthogonal to the generators of G", d.generator_orthogonality, TOL_ORTH),
        Check::at_most("membership", "onb vectors satisfy the finite-order membership constraints", d.membership, TOL_MEMBER),
        Check::at_most("k0_mismatch", "closed-form k0 lies in the truncated space", d.k0_mismatch, TOL_VEC),
        Check::at_most("ktilde0_mismatch", "closed-form ktilde0 lies in the truncated space", d.ktilde0_mismatch, TOL_VEC),
        Check::at_most("k_norm", "||k0||^2 = ||ktilde0||^2 = 1 - |u(0)|^2", kn, TOL_VEC),
        Check::at_most("defect_identities", "I - S S* = k0⊗k0/|k0|^2 and I - S* S = ktilde0⊗ktilde0/|k0|^2 on interior vectors", leak.leak(), tol.tol_accept),
    ];
    Ok((checks, json!({ "space": space_summary(space), "leak": leak })))
}

fn task_invariance(space: &ModelSpace, ops: &[Op], expect: Expectation, tol: &Tolerances) -> Outcome {
    let tinv = tol_calibrated(space);
    let mut checks = Vec::new();
    let mut metrics = Vec::new();
    for op in ops {
        let r = invariance_residual(space, &op.matrix);
        checks.push(match expect {
            Expectation::Invariant => Check::at_most(
                &format!("residual {}", op.label),
                "Q(T - S* T S)Q = 0 off ktilde0",
                r,
                tinv,
            ),
            Expectation::NotInvariant => Check::at_least(
                &format!("residual {}", op.label),
                "operator is not a truncated multiplication operator",
                r,
                tol.tol_accept,
            ),
        });
        metrics.push(json!({ "operator": op.label, "residual": r }));
    }
    Ok((checks, json!({ "tol_inv": tinv, "operators": metrics })))
}

fn task_recover(space: &ModelSpace, ops: &[Op], tol: &Tolerances) -> Outcome {
    let mut checks = Vec::new();
    let mut metrics = Vec::new();
    for op in ops {
        let rec = recover_symbol(space, &op.matrix, tol.tol_accept).map_err(|e| format!("{}: {e}", op.label))?;
        checks.push(Check::at_most(
            &format!("certificate {}", op.label),
            "A_F = T for the recovered symbol F",
            rec.certificate,
            tol.tol_accept,
        ));
        let mut m = json!({
            "operator": op.label,
            "symbol": rec.symbol,
            "certificate_full": rec.certificate_full,
            "decomposition_residual": rec.decomposition.residual,
            "extraction": rec.extraction,
        });
        if let Some(f) = &op.symbol {
            let z = zero_symbol_test(space, &f.sub(&rec.symbol), tol.tol_accept);
            checks.push(Check::equals(
                &format!("zero_difference {}", op.label),
                "F - F_rec is a zero symbol",
                f64::from(u8::from(z.is_zero && !z.inconsistent)),
                1.0,
            ));
            m["difference_test"] = json!(z);
        }
        metrics.push(m);
    }
    Ok((checks, json!({ "operators": metrics })))
}

fn task_zero(space: &ModelSpace, symbols: &[(String, SymbolMatrix)], expect: bool, tol: &Tolerances) -> Outcome {
    let mut checks = Vec::new();
    let mut metrics = Vec::new();
    for (label, f) in symbols {
        let z = zero_symbol_test(space, f, tol.tol_accept);
        checks.push(Check::equals(
            &format!("verdict {label}"),
            if expect { "A_F = 0 with structural witnesses" } else { "A_F != 0" },
            f64::from(u8::from(z.is_zero == expect && !z.inconsistent)),
            1.0,
        ));
        if expect {
            checks.push(Check::at_most(&format!("norm {label}"), "||A_F|| = 0 on interior vectors", z.operator_norm, z.operator_tol.max(tol.tol_accept)));
        }
        metrics.push(json!({ "symbol": label, "report": z }));
    }
    Ok((checks, json!({ "symbols": metrics })))
}

fn task_crofoot(space: &ModelSpace, alpha: Complex64, tol: &Tolerances) -> Outcome {
    let cd = build_crofoot(space, alpha).map_err(|e| e.to_string())?;
    let t = transport_operator(&cd, space.su()).map_err(|e| e.to_string())?;
    let transported = invariance_residual(&cd.target, &t);
    let k0 = &space.k0().coords;
    let kk = outer(k0, k0);
    let before = invariance_residual(space, &kk);
    let after = invariance_residual(&cd.target, &transport_operator(&cd, &kk).map_err(|e| e.to_string())?);
    let co = composition_coherence(space, alpha).map_err(|e| e.to_string())?;
    let m = &cd.metrics;
    let checks = vec![
        Check::at_most("isometry", "V*V = I on interior vectors", m.isometry_defect, 10.0 * tol.tol_accept),
        Check::at_most("range", "V maps interior vectors into H_{u_alpha}", m.range_defect, tol.tol_accept),
        Check::at_most("delta_identity", "Delta_alpha = (1-|alpha|^2)^(1/2) Delta / |1 - conj(alpha) u|", cd.transport.delta_identity, tol.roundoff_floor),
        Check::at_most("inverse_identity", "F_alpha F_alpha^(-1) = I on the grid", m.inverse_identity, tol.roundoff_floor),
        Check::at_most("transported_shift", "V S_u V* is a truncated multiplication operator", transported, tol.tol_accept),
        Check::at_least("transported_k0k0", "V (k0⊗k0) V* stays non-invariant", after, 0.5 * before),
        Check::at_most("coherence", "transport by alpha then -alpha returns to the start up to a phase", co.operator_residual, tol.tol_accept),
    ];
    Ok((checks, json!({ "crofoot": cd.report(), "coherence": co, "k0k0_residuals": [before, after] })))
}

fn task_symmetry(space: &ModelSpace, ops: &[Op], tol: &Tolerances) -> Outcome {
    let cu = build_cu(space).map_err(|e| e.to_string())?;
    let r = cu.report;
    let mut checks = vec![
        Check::at_most("involution", "C_u^2 = I", r.involution, tol.tol_conj),
        Check::at_most("isometry", "<C x, C y> = <y, x>", r.isometry, tol.tol_conj),
        Check::at_most("k0_image", "C_u k0 = ktilde0", r.k0_image, tol.tol_conj),
        Check::at_most("shift_symmetry", "C_u S_u* C_u = S_u", r.shift_symmetry, 10.0 * tol.tol_accept),
    ];
    let mut metrics = Vec::new();
    for op in ops {
        let d = decompose_symmetric(space, &cu, &op.matrix);
        let dr = d.report;
        checks.push(Check::at_most(&format!("sum {}", op.label), "T = T1 + T2", dr.sum_residual, 1e-14 * (1.0 + op_norm(&op.matrix))));
        checks.push(Check::at_most(&format!("symmetric {}", op.label), "C_u T1* C_u = T1", dr.symmetric_residual, tol.tol_conj));
        checks.push(Check::at_most(&format!("skew {}", op.label), "C_u T2* C_u = -T2", dr.skew_residual, tol.tol_conj));
        let mut m = json!({ "operator": op.label, "decomposition": dr });
        if invariance_residual(space, &op.matrix) <= tol.tol_accept {
            for (kind, part, name) in [(SymmetryKind::Symmetric, &d.t1, "t1"), (SymmetryKind::Skew, &d.t2, "t2")] {
                let cs = canonical_symbols(space, part, kind, tol.tol_accept).map_err(|e| format!("{}: {e}", op.label))?;
                checks.push(Check::at_most(
                    &format!("canonical_{name} {}", op.label),
                    "the canonical symbol reproduces the part",
                    cs.certificate,
                    tol.tol_accept,
                ));
                m[format!("canonical_{name}")] = json!({ "symbol": cs.symbol, "certificate": cs.certificate });
            }
        }
        metrics.push(m);
    }
    Ok((checks, json!({ "conjugation": r, "operators": metrics })))
}

fn task_xmu(space: &ModelSpace, mu: Complex64, tol: &Tolerances) -> Outcome {
    let x = build_xmu(space, mu);
    let sv = singular_values(&(x * space.interior()));
    let mut checks = Vec::new();
    let mut metrics = json!({ "singular_values": sv });
    if (mu.norm() - 1.0).abs() <= 1e-12 {
        let dev = sv.iter().map(|s| (s - 1.0).abs()).fold(0.0, f64::max);
        checks.push(Check::at_most("unitary", "X_mu is unitary for |mu| = 1", dev, 1e-4));
    } else {
        let below = sv.iter().filter(|&&s| s < 1.0 - 1e-3).count();
        checks.push(Check::equals("defect_count", "X_mu has exactly one singular value below 1", below as f64, 1.0));
        let smallest = sv.last().copied().unwrap_or(f64::NAN);
        checks.push(Check::at_most("smallest", "the deficient singular value is |mu|", (smallest - mu.norm()).abs(), tol.tol_accept));
        let link = xmu_link(space, mu).map_err(|e| e.to_string())?;
        metrics["crofoot_link"] = json!(link);
    }
    Ok((checks, metrics))
}

fn task_dsweep(space: &ModelSpace, ops: &[Op], previous: &mut Option<CircleFunction>, tol: &Tolerances) -> Outcome {
    let op = ops.first().ok_or("dsweep needs an operator")?;
    let x = extract_d(space, &op.matrix).map_err(|e| e.to_string())?;
    let mut checks = vec![
        Check::at_most("iteration_step", "S^k T S*^k is stationary on the test family", x.iteration_step, tol.tol_limit),
        Check::at_most("fixed_point", "S T' S* = T' for T' = A_diag(0,d)", x.fixed_point_residual, tol.tol_limit),
    ];
    if let Some(prev) = previous.as_ref() {
        let change = (&x.d - prev).l2_norm();
        checks.push(Check::at_most("d_change", "d agrees with the previous order", change, tol.tol_accept));
    }
    if let Some(f) = &op.symbol {
        if let Ok(rec) = recover_symbol(space, &op.matrix, tol.tol_accept) {
            let z = zero_symbol_test(space, &f.sub(&rec.symbol), tol.tol_accept);
            checks.push(Check::at_most("d_error", "extracted d equals the symbol's d on {Delta > eps}", z.residual_d, tol.tol_accept));
        }
    }
    *previous = Some(x.d.clone());
    Ok((checks, json!({ "operator": op.label, "extraction": x })))
}

fn task_noncommutative(space: &ModelSpace) -> Outcome {
    if space.u().taylor().iter().any(|z| z.norm() != 0.0) {
        return Err("noncommutative_example needs u = 0".into());
    }
    let g = CircleFunction::monomial(-1, Complex64::new(1.0, 0.0), 64);
    let t1 = compress_symbol(space, &SymbolMatrix::diag(SymbolEntry::constant(Complex64::new(1.0, 0.0)), SymbolEntry::zero()));
    let t2 = compress_symbol(space, &SymbolMatrix::new(SymbolEntry::zero(), SymbolEntry::zero(), SymbolEntry::plain(g), SymbolEntry::zero()));
    let checks = vec![
        Check::at_most("t1t2", "T1 T2 = 0", op_norm(&(&t1 * &t2)), 1e-9),
        Check::at_most("t2t1", "T2 T1 = T2", op_norm(&(&t2 * &t1 - &t2)), 1e-9),
        Check::at_least("t2_norm", "T2 != 0, so T1 T2 != T2 T1", op_norm(&t2), 0.5),
    ];
    Ok((checks, Value::Null))
}
