//! TOML run configuration.

use std::path::{Path, PathBuf};

use arh_core::componentwise::{TruncationRule, DEFAULT_BETA_U};
use arh_core::metrics::ThresholdCurve;
use arh_core::scenario::{validate, Regime, ScenarioSpec};
use arh_core::smoothing::{DEFAULT_ELL, DEFAULT_Q};
use arh_core::wavelet::{WaveletFamily, DEFAULT_J0, DEFAULT_LEVELS};
use serde::{Deserialize, Serialize};

use crate::BenchError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MethodKind {
    DiagKnown,
    DiagUnknown,
    Bosq,
    Guillas,
    Wavelet,
    Besse,
    Kernel,
}

impl MethodKind {
    pub fn name(self) -> &'static str {
        match self {
            MethodKind::DiagKnown => "diag_known",
            MethodKind::DiagUnknown => "diag_unknown",
            MethodKind::Bosq => "bosq",
            MethodKind::Guillas => "guillas",
            MethodKind::Wavelet => "wavelet",
            MethodKind::Besse => "besse",
            MethodKind::Kernel => "kernel",
        }
    }

    pub fn needs_truncation(self) -> bool {
        !matches!(self, MethodKind::Besse | MethodKind::Kernel)
    }

    /// Methods that work on sampled curves rather than coefficients.
    pub fn curve_level(self) -> bool {
        matches!(self, MethodKind::Wavelet | MethodKind::Besse | MethodKind::Kernel)
    }

    pub fn diagonal_only(self) -> bool {
        matches!(self, MethodKind::DiagKnown | MethodKind::DiagUnknown)
    }
}

/// Which error norm scores a method.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ErrorMetric {
    /// Truncated norm for componentwise methods (diagonal or kernel form by
    /// regime), full norm for curve-level methods.
    #[default]
    Auto,
    DiagTruncated,
    KernelLiteral,
    KernelApplied,
    Full,
}

/// One method with its parameters. Unused keys for a kind are rejected by
/// [`BenchConfig::check`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MethodSpec {
    pub kind: MethodKind,
    /// Column label; defaults to the kind name.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub truncation: Option<TruncationRule>,
    /// Pinned `k_n`, one per sample size; overrides `truncation`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k_n: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta_u: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub family: Option<WaveletFamily>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub j0: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub levels: Option<usize>,
    /// Wavelet λ; defaults to the scenario value `λ̂^M`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub lambda: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub ell: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub h: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub smooth_penalty: Option<f64>,
    #[serde(default)]
    pub metric: ErrorMetric,
}

impl MethodSpec {
    pub fn new(kind: MethodKind) -> Self {
        Self {
            kind,
            label: None,
            truncation: None,
            k_n: None,
            beta_u: None,
            family: None,
            j0: None,
            levels: None,
            lambda: None,
            ell: None,
            q: None,
            h: None,
            smooth_penalty: None,
            metric: ErrorMetric::Auto,
        }
    }

    pub fn with_truncation(mut self, rule: TruncationRule) -> Self {
        self.truncation = Some(rule);
        self
    }

    pub fn label(&self) -> String {
        self.label.clone().unwrap_or_else(|| self.kind.name().to_string())
    }

    pub fn beta_u(&self) -> f64 {
        self.beta_u.unwrap_or(DEFAULT_BETA_U)
    }

    pub fn family(&self) -> WaveletFamily {
        self.family.unwrap_or(WaveletFamily::Haar)
    }

    pub fn j0(&self) -> usize {
        self.j0.unwrap_or(DEFAULT_J0)
    }

    pub fn levels(&self) -> usize {
        self.levels.unwrap_or(DEFAULT_LEVELS)
    }

    pub fn ell(&self) -> f64 {
        self.ell.unwrap_or(DEFAULT_ELL)
    }

    pub fn q(&self) -> usize {
        self.q.unwrap_or(DEFAULT_Q)
    }

    pub fn smooth_penalty(&self) -> f64 {
        self.smooth_penalty.unwrap_or(DEFAULT_ELL)
    }

    fn check(&self, regime: Regime, sizes: usize) -> Result<(), BenchError> {
        let bad = |msg: String| Err(BenchError::Config(format!("method {}: {msg}", self.label())));
        let k = self.kind;
        if k.diagonal_only() && regime != Regime::Diagonal {
            return bad(format!("needs a diagonal scenario, got {}", regime.name()));
        }
        if k.needs_truncation() {
            match (&self.truncation, &self.k_n) {
                (None, None) => return bad("needs `truncation` or `k_n`".into()),
                (_, Some(list)) if list.len() != sizes => {
                    return bad(format!("{} pinned k_n for {sizes} sample sizes", list.len()))
                }
                (_, Some(list)) if list.contains(&0) => return bad("k_n must be at least 1".into()),
                _ => {}
            }
        } else if self.truncation.is_some() || self.k_n.is_some() {
            return bad("takes no truncation".into());
        }
        let unused = |set: bool, key: &str, ok: bool| if set && !ok { Some(key.to_string()) } else { None };
        let stray: Vec<String> = [
            unused(self.beta_u.is_some(), "beta_u", k == MethodKind::Guillas),
            unused(self.family.is_some(), "family", k == MethodKind::Wavelet),
            unused(self.j0.is_some(), "j0", k == MethodKind::Wavelet),
            unused(self.levels.is_some(), "levels", k == MethodKind::Wavelet),
            unused(self.lambda.is_some(), "lambda", k == MethodKind::Wavelet),
            unused(self.ell.is_some(), "ell", k == MethodKind::Besse),
            unused(self.q.is_some(), "q", k == MethodKind::Besse),
            unused(self.h.is_some(), "h", k == MethodKind::Kernel),
            unused(self.smooth_penalty.is_some(), "smooth_penalty", k == MethodKind::Kernel),
        ]
        .into_iter()
        .flatten()
        .collect();
        if !stray.is_empty() {
            return bad(format!("unused keys {}", stray.join(", ")));
        }
        if k == MethodKind::Kernel {
            match self.h {
                Some(h) if h > 0.0 => {}
                _ => return bad("needs a positive bandwidth `h`".into()),
            }
        }
        if k == MethodKind::Besse && self.q() == 0 {
            return bad("q must be at least 1".into());
        }
        if k == MethodKind::Wavelet && self.j0() >= self.levels() {
            return bad("needs j0 < levels".into());
        }
        if let Some(l) = self.lambda {
            if !(l >= 0.0) {
                return bad("lambda must be nonnegative".into());
            }
        }
        let metric_ok = match self.metric {
            ErrorMetric::Auto | ErrorMetric::Full => true,
            ErrorMetric::DiagTruncated => !k.curve_level() && regime == Regime::Diagonal,
            ErrorMetric::KernelLiteral | ErrorMetric::KernelApplied => !k.curve_level(),
        };
        if !metric_ok {
            return bad(format!("metric {:?} does not apply", self.metric));
        }
        Ok(())
    }
}

/// Quadrature and output grid steps on `(0, 4)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "default_a")]
    pub a: f64,
    #[serde(default = "default_b")]
    pub b: f64,
    /// Step of the grid carrying the coefficient-level error norms.
    #[serde(default = "default_quad_step")]
    pub quad_step: f64,
    /// Step of the grid on which curve-level methods see the data.
    #[serde(default = "default_curve_step")]
    pub curve_step: f64,
}

fn default_a() -> f64 {
    0.0
}
fn default_b() -> f64 {
    4.0
}
fn default_quad_step() -> f64 {
    0.01
}
fn default_curve_step() -> f64 {
    0.06
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { a: default_a(), b: default_b(), quad_step: default_quad_step(), curve_step: default_curve_step() }
    }
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("bench-out")
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchConfig {
    /// Scenario id written in the `scenario` column.
    pub name: String,
    pub scenario: ScenarioSpec,
    pub methods: Vec<MethodSpec>,
    pub sample_sizes: Vec<usize>,
    pub replications: usize,
    pub threshold: ThresholdCurve,
    pub seed_base: u64,
    /// Worker threads; 0 uses every core.
    #[serde(default)]
    pub workers: usize,
    #[serde(default = "default_out_dir")]
    pub out_dir: PathBuf,
    #[serde(default)]
    pub grid: GridSpec,
}

impl BenchConfig {
    pub fn from_toml(text: &str) -> Result<Self, BenchError> {
        toml::from_str(text).map_err(|e| BenchError::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self, BenchError> {
        let text = std::fs::read_to_string(path).map_err(|e| BenchError::Io(path.to_path_buf(), e))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn check(&self) -> Result<(), BenchError> {
        if self.name.is_empty() || self.name.contains([',', '"', '\n']) {
            return Err(BenchError::Config(format!("scenario name {:?} is not a plain identifier", self.name)));
        }
        if self.replications == 0 {
            return Err(BenchError::Config("replications must be at least 1".into()));
        }
        if self.sample_sizes.is_empty() {
            return Err(BenchError::Config("sample_sizes is empty".into()));
        }
        if let Some(n) = self.sample_sizes.iter().find(|&&n| n < 4) {
            return Err(BenchError::Config(format!("sample size {n} is below 4")));
        }
        if self.methods.is_empty() {
            return Err(BenchError::Config("no methods configured".into()));
        }
        let mut labels: Vec<String> = self.methods.iter().map(MethodSpec::label).collect();
        labels.sort();
        if let Some(w) = labels.windows(2).find(|w| w[0] == w[1]) {
            return Err(BenchError::Config(format!("duplicate method label {}", w[0])));
        }
        if labels.iter().any(|l| l.contains([',', '"', '\n'])) {
            return Err(BenchError::Config("method labels must not contain commas or quotes".into()));
        }
        ThresholdCurve::new(self.threshold.beta, self.threshold.rate)?;
        let g = self.grid;
        if !(g.a < g.b && g.quad_step > 0.0 && g.curve_step > 0.0) {
            return Err(BenchError::Config("invalid grid".into()));
        }
        for m in &self.methods {
            m.check(self.scenario.regime, self.sample_sizes.len())?;
        }
        validate(&self.scenario)?;
        Ok(())
    }
}
