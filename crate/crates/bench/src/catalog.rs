//! The 24 scenarios of the comparative study and their desk-scale variants.
//!
//! The published truncation levels sit one below the ceiling of each rule
//! (with one exception at `n = 1750`, `α = 6.5`). Full-scale configs pin the
//! published values; desk-scale configs apply the rule with `offset = −1`.

use std::fmt::Write as _;
use std::path::PathBuf;

use arh_core::componentwise::{k_of, TruncationRule};
use arh_core::metrics::{Rate, ThresholdCurve};
use arh_core::scenario::{Regime, ScenarioSpec};

use crate::config::{BenchConfig, GridSpec, MethodKind, MethodSpec};

pub const FULL_REPLICATIONS: usize = 500;
pub const DESK_REPLICATIONS: usize = 100;
pub const DEFAULT_SEED_BASE: u64 = 20_170_101;

const K_LN_LARGE: [usize; 10] = [10, 11, 11, 11, 12, 12, 12, 12, 12, 12];
const K_POW_LARGE_15: [usize; 10] = [3, 3, 3, 3, 4, 4, 4, 4, 4, 4];
const K_POW_LARGE_24: [usize; 10] = [2, 2, 2, 2, 3, 3, 3, 3, 3, 3];
const K_LN_SMALL: [usize; 13] = [6, 7, 7, 7, 7, 8, 8, 8, 8, 8, 8, 8, 8];
const K_ROOT_65: [usize; 13] = [2, 2, 2, 3, 3, 3, 3, 3, 3, 3, 3, 3, 3];
const K_ROOT_10: [usize; 13] = [1, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2, 2];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SizeFamily {
    /// `n_t = 35000 + 40000 (t − 1)`, `t = 1..10`.
    Large,
    /// `n_t = 750 + 500 (t − 1)`, `t = 1..13`.
    Small,
}

impl SizeFamily {
    pub fn full_sizes(self) -> Vec<usize> {
        match self {
            SizeFamily::Large => (0..10).map(|t| 35_000 + 40_000 * t).collect(),
            SizeFamily::Small => (0..13).map(|t| 750 + 500 * t).collect(),
        }
    }

    /// Capped at 8000 for the large family and 2250 for the small one.
    pub fn desk_sizes(self) -> Vec<usize> {
        match self {
            SizeFamily::Large => vec![2_000, 8_000],
            SizeFamily::Small => vec![750, 1_250, 1_750, 2_250],
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StudyScenario {
    pub id: u32,
    pub regime: Regime,
    pub delta1: f64,
    pub truncation: TruncationRule,
    /// Truncation levels at the published sample sizes.
    pub published_k: Vec<usize>,
    pub threshold: ThresholdCurve,
    pub sizes: SizeFamily,
    /// Kernel bandwidths; empty when the kernel and penalized methods are
    /// not run.
    pub bandwidths: Vec<f64>,
}

impl StudyScenario {
    pub fn name(&self) -> String {
        format!("scenario{}", self.id)
    }

    /// Methods compared in this scenario; `pinned` fixes `k_n` per sample size
    /// instead of applying the rule.
    pub fn methods(&self, pinned: Option<&[usize]>) -> Vec<MethodSpec> {
        let truncated = |kind| match pinned {
            Some(k) => MethodSpec { k_n: Some(k.to_vec()), ..MethodSpec::new(kind) },
            None => MethodSpec::new(kind).with_truncation(self.truncation),
        };
        let mut out = Vec::new();
        if self.regime == Regime::Diagonal {
            out.push(truncated(MethodKind::DiagUnknown));
        }
        if self.sizes == SizeFamily::Small {
            out.push(truncated(MethodKind::Wavelet));
        }
        out.push(truncated(MethodKind::Bosq));
        out.push(truncated(MethodKind::Guillas));
        if !self.bandwidths.is_empty() {
            out.push(MethodSpec { q: Some(10), ..MethodSpec::new(MethodKind::Besse) });
            for &h in &self.bandwidths {
                out.push(MethodSpec { h: Some(h), label: Some(format!("kernel_h{h}")), ..MethodSpec::new(MethodKind::Kernel) });
            }
        }
        out
    }

    pub fn config(&self, desk: bool) -> BenchConfig {
        let (suffix, sizes, replications, methods) = if desk {
            ("-desk", self.sizes.desk_sizes(), DESK_REPLICATIONS, self.methods(None))
        } else {
            ("", self.sizes.full_sizes(), FULL_REPLICATIONS, self.methods(Some(&self.published_k)))
        };
        BenchConfig {
            name: format!("{}{suffix}", self.name()),
            scenario: ScenarioSpec::new(self.regime, self.delta1),
            methods,
            sample_sizes: sizes,
            replications,
            threshold: self.threshold,
            seed_base: DEFAULT_SEED_BASE,
            workers: 0,
            out_dir: PathBuf::from("bench-out").join(format!("{}{suffix}", self.name())),
            grid: GridSpec::default(),
        }
    }

    /// Rule values at `sizes`.
    pub fn k_values(&self, sizes: &[usize]) -> Vec<usize> {
        sizes.iter().map(|&n| k_of(&self.truncation, n, self.delta1)).collect()
    }
}

fn threshold(beta: f64, rate: Rate) -> ThresholdCurve {
    ThresholdCurve { beta, rate }
}

/// Scenarios 1–24 in order.
pub fn study_scenarios() -> Vec<StudyScenario> {
    let ln = TruncationRule::log_ceil().with_offset(-1);
    let pow = TruncationRule::power_rate().with_offset(-1);
    let root = |alpha| TruncationRule::root_alpha(alpha).with_offset(-1);
    let half = threshold(0.65, Rate::Half);
    let mut out = Vec::with_capacity(24);
    let mut push = |regime, delta1, (truncation, k): (TruncationRule, &[usize]), threshold, sizes, bandwidths: &[f64]| {
        let id = out.len() as u32 + 1;
        out.push(StudyScenario {
            id,
            regime,
            delta1,
            truncation,
            published_k: k.to_vec(),
            threshold,
            sizes,
            bandwidths: bandwidths.to_vec(),
        });
    };

    let large = |d: f64| [(ln, &K_LN_LARGE[..]), (pow, if d < 2.0 { &K_POW_LARGE_15[..] } else { &K_POW_LARGE_24[..] })];
    // 1–4
    for i in 0..2 {
        for d in [1.5, 2.4] {
            push(Regime::Diagonal, d, large(d)[i], half, SizeFamily::Large, &[]);
        }
    }
    // 5–8 pseudo-diagonal, 9–12 non-diagonal
    for (regime, beta) in [(Regime::PseudoDiagonal, 0.3), (Regime::NonDiagonal, 1.25)] {
        for i in 0..2 {
            for d in [1.5, 2.4] {
                push(regime, d, large(d)[i], threshold(beta, Rate::Third), SizeFamily::Large, &[]);
            }
        }
    }
    let small_ln = (ln, &K_LN_SMALL[..]);
    let root_65 = (root(6.5), &K_ROOT_65[..]);
    let root_10 = (root(10.0), &K_ROOT_10[..]);
    // 13–16
    push(Regime::Diagonal, 1.5, small_ln, half, SizeFamily::Small, &[0.15, 0.25]);
    push(Regime::Diagonal, 2.4, small_ln, half, SizeFamily::Small, &[0.15, 0.25]);
    push(Regime::Diagonal, 1.5, root_65, half, SizeFamily::Small, &[]);
    push(Regime::Diagonal, 2.4, root_10, half, SizeFamily::Small, &[]);
    // 17–20 pseudo-diagonal, 21–24 non-diagonal
    for (regime, beta) in [(Regime::PseudoDiagonal, 0.3), (Regime::NonDiagonal, 1.25)] {
        let t = threshold(beta, Rate::Third);
        push(regime, 1.5, small_ln, t, SizeFamily::Small, &[1.2, 1.7]);
        push(regime, 2.4, small_ln, t, SizeFamily::Small, &[1.2, 1.7]);
        push(regime, 1.5, root_65, t, SizeFamily::Small, &[]);
        push(regime, 2.4, root_10, t, SizeFamily::Small, &[]);
    }
    out
}

pub fn find(id: &str) -> Option<BenchConfig> {
    let id = id.trim();
    let (base, desk) = match id.strip_suffix("-desk") {
        Some(b) => (b, true),
        None => (id, false),
    };
    let num: u32 = base.strip_prefix("scenario").unwrap_or(base).parse().ok()?;
    study_scenarios().into_iter().find(|s| s.id == num).map(|s| s.config(desk))
}

/// Human-readable listing of every scenario with its pinned parameters.
pub fn describe() -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{:<11} {:<15} {:>6} {:<24} {:>5} {:<5} {:<20} methods", "id", "regime", "delta1", "k_n", "beta", "rate", "h_n");
    for sc in study_scenarios() {
        let h = if sc.bandwidths.is_empty() {
            "-".to_string()
        } else {
            sc.bandwidths.iter().map(|h| h.to_string()).collect::<Vec<_>>().join(", ")
        };
        let methods: Vec<String> = sc.methods(None).iter().map(MethodSpec::label).collect();
        let _ = writeln!(
            s,
            "{:<11} {:<15} {:>6} {:<24} {:>5} {:<5} {:<20} {}",
            sc.name(),
            sc.regime.name(),
            sc.delta1,
            sc.truncation.label(),
            sc.threshold.beta,
            match sc.threshold.rate {
                Rate::Half => "1/2",
                Rate::Third => "1/3",
            },
            h,
            methods.join(" ")
        );
        let full = sc.sizes.full_sizes();
        let desk = sc.sizes.desk_sizes();
        let _ = writeln!(s, "            full:  N = {FULL_REPLICATIONS}, n = {full:?}, k_n = {:?}", sc.published_k);
        let _ = writeln!(s, "            desk ({}-desk): N = {DESK_REPLICATIONS}, n = {desk:?}, k_n = {:?}", sc.name(), sc.k_values(&desk));
    }
    s
}
