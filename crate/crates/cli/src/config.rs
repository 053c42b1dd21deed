//! Experiment configuration files.

use std::path::{Path, PathBuf};

use mslab_core::harmonic::AnalyticPoly;
use mslab_core::symbols::SymbolMatrix;
use mslab_core::tolerances::Tolerances;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// A complex number written as `x` or `[re, im]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Cx {
    Real(f64),
    Pair([f64; 2]),
}

impl Cx {
    pub fn value(self) -> Complex64 {
        match self {
            Cx::Real(x) => Complex64::new(x, 0.0),
            Cx::Pair([re, im]) => Complex64::new(re, im),
        }
    }
}

/// Taylor coefficients of `u`, real or `[re, im]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Coeffs(pub Vec<Cx>);

impl Coeffs {
    pub fn poly(&self) -> AnalyticPoly {
        let c: Vec<_> = self.0.iter().map(|z| z.value()).collect();
        AnalyticPoly::new(&c)
    }
}

/// Inline symbol or a path to a JSON symbol file.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SymbolSource {
    File {
        file: PathBuf,
    },
    Inline(SymbolMatrix),
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum OperatorSpec {
    /// `S_u`.
    Shift,
    Identity,
    /// `k0 ⊗ k0`, not a truncated multiplication operator.
    K0K0,
    /// `k0 ⊗ ktilde0`.
    RankOne,
    Xmu { mu: Cx },
    Symbol { symbol: SymbolSource },
    /// Dense matrix file in orthonormal coordinates; only valid at the
    /// matching dimension.
    Matrix { file: PathBuf },
    /// Seeded random symbols with `a`, `d` plain and `b`, `c` carrying `Δ`.
    RandomSymbols { count: usize, order: usize },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Expectation {
    #[default]
    Invariant,
    NotInvariant,
}

fn yes() -> bool {
    true
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(tag = "task", rename_all = "snake_case", deny_unknown_fields)]
pub enum TaskSpec {
    Build,
    Invariance {
        operator: OperatorSpec,
        #[serde(default)]
        expect: Expectation,
    },
    Recover {
        operator: OperatorSpec,
    },
    ZeroTest {
        #[serde(default)]
        symbols: Vec<SymbolSource>,
        /// Number of seeded random zero symbols to add.
        #[serde(default)]
        random: usize,
        #[serde(default = "yes")]
        expect_zero: bool,
    },
    Crofoot {
        alpha: Cx,
    },
    Symmetry {
        operator: OperatorSpec,
    },
    Xmu {
        mu: Cx,
    },
    Dsweep {
        operator: OperatorSpec,
    },
    NoncommutativeExample,
}

impl TaskSpec {
    pub fn name(&self) -> &'static str {
        match self {
            TaskSpec::Build => "build",
            TaskSpec::Invariance { .. } => "invariance",
            TaskSpec::Recover { .. } => "recover",
            TaskSpec::ZeroTest { .. } => "zero_test",
            TaskSpec::Crofoot { .. } => "crofoot",
            TaskSpec::Symmetry { .. } => "symmetry",
            TaskSpec::Xmu { .. } => "xmu",
            TaskSpec::Dsweep { .. } => "dsweep",
            TaskSpec::NoncommutativeExample => "noncommutative_example",
        }
    }
}

fn default_orders() -> Vec<usize> {
    vec![16, 32, 64, 128]
}

#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub u: Coeffs,
    #[serde(default = "default_orders", alias = "N")]
    pub orders: Vec<usize>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub tolerances: Tolerances,
    #[serde(default)]
    pub tasks: Vec<TaskSpec>,
}

impl ExperimentConfig {
    pub fn parse(text: &str) -> Result<Self, String> {
        let cfg: Self = serde_json::from_str(text).map_err(|e| format!("schema error: {e}"))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, String> {
        let text = std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
        Self::parse(&text)
    }

    fn validate(&self) -> Result<(), String> {
        if self.u.0.is_empty() {
            return Err("schema error: u needs at least one coefficient".into());
        }
        if self.orders.is_empty() {
            return Err("schema error: orders must not be empty".into());
        }
        if self.orders.windows(2).any(|w| w[1] <= w[0]) {
            return Err("schema error: orders must be strictly ascending".into());
        }
        Ok(())
    }
}

/// Resolves relative file references against the config directory.
pub fn resolve(base: &Path, p: &Path) -> PathBuf {
    if p.is_absolute() {
        p.to_path_buf()
    } else {
        base.join(p)
    }
}
