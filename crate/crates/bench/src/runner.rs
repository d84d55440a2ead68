//! Replication loop: simulate, fit every method, score, aggregate.

use std::collections::BTreeMap;
use std::sync::Arc;
use std::time::Instant;

use arh_core::componentwise::{bosq, diag_known, diag_unknown, guillas, k_of, GuillasFloor};
use arh_core::grid::{reconstruct, sine_basis, BasisSystem, Grid};
use arh_core::metrics::{
    diag_truncated_error, f_count, full_error, kernel_truncated_error, ub_bound, ErrorRecord, KernelErrorMode,
};
use arh_core::predictor::PredictorModel;
use arh_core::scenario::{validate, Regime, ScenarioOperators};
use arh_core::simulate::{curves_of, simulate};
use arh_core::smoothing::{besse_with_smoother, kernel_from_smoothed, PenalizedSmoother};
use arh_core::wavelet::{as_predictor, lambda_from_scenario, WaveletConfig};
use arh_core::{ArhError, CoeffSeries, Curve};
use rayon::prelude::*;

use crate::config::{BenchConfig, ErrorMetric, MethodKind, MethodSpec};
use crate::table::{ResultRow, ResultTable};
use crate::BenchError;

pub const RNG_NAME: &str = "ChaCha20Rng::seed_from_u64 (rand_chacha 0.9), StandardNormal (rand_distr 0.5)";
pub const SEED_RULE: &str = "seed_base + splitmix64((n << 32) | l), wrapping";

#[derive(Debug, Clone, Copy, Default)]
pub struct RunOptions {
    /// Worker threads; 0 uses every core.
    pub workers: usize,
    /// Fill the `wall_ms` column.
    pub timing: bool,
}

#[derive(Debug, Clone)]
pub struct RunOutput {
    pub table: ResultTable,
    /// Every replication's records, by sample size then replication then
    /// method.
    pub records: Vec<ErrorRecord>,
    pub seeds: BTreeMap<usize, Vec<u64>>,
    pub diagnostics: Vec<String>,
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn replication_seed(seed_base: u64, n: usize, l: usize) -> u64 {
    seed_base.wrapping_add(splitmix64(((n as u64) << 32) | l as u64))
}

/// Per-method state that does not depend on the replication.
enum Prepared {
    Componentwise,
    Wavelet(WaveletConfig),
    Besse(PenalizedSmoother),
    Kernel(PenalizedSmoother),
}

struct Context<'a> {
    cfg: &'a BenchConfig,
    ops: ScenarioOperators,
    quad: BasisSystem,
    curve: Option<BasisSystem>,
    prepared: Vec<Prepared>,
}

impl<'a> Context<'a> {
    fn new(cfg: &'a BenchConfig) -> Result<Self, BenchError> {
        let ops = validate(&cfg.scenario)?;
        let g = cfg.grid;
        let quad = sine_basis(&Arc::new(Grid::new(g.a, g.b, g.quad_step)?), ops.m())?;
        let curve = if cfg.methods.iter().any(|m| m.kind.curve_level()) {
            Some(sine_basis(&Arc::new(Grid::new(g.a, g.b, g.curve_step)?), ops.m())?)
        } else {
            None
        };
        let mut prepared = Vec::with_capacity(cfg.methods.len());
        for m in &cfg.methods {
            prepared.push(match m.kind {
                MethodKind::Wavelet => {
                    let mut w = WaveletConfig::new(m.family(), 0.0);
                    w.j0 = m.j0();
                    w.levels = m.levels();
                    w.lambda = m.lambda.unwrap_or_else(|| lambda_from_scenario(&ops, w.dyadic_len()));
                    w.check()?;
                    Prepared::Wavelet(w)
                }
                MethodKind::Besse => Prepared::Besse(PenalizedSmoother::new(curve.as_ref().unwrap().grid(), m.ell())?),
                MethodKind::Kernel => {
                    Prepared::Kernel(PenalizedSmoother::new(curve.as_ref().unwrap().grid(), m.smooth_penalty())?)
                }
                _ => Prepared::Componentwise,
            });
        }
        Ok(Self { cfg, ops, quad, curve, prepared })
    }

    fn k_for(&self, method: &MethodSpec, size_index: usize, n: usize) -> Option<usize> {
        if !method.kind.needs_truncation() {
            return None;
        }
        if let Some(list) = &method.k_n {
            return Some(list[size_index]);
        }
        method.truncation.map(|rule| k_of(&rule, n, self.cfg.scenario.delta1))
    }

    fn metric(&self, method: &MethodSpec) -> ErrorMetric {
        match method.metric {
            ErrorMetric::Auto if method.kind.curve_level() => ErrorMetric::Full,
            ErrorMetric::Auto if self.ops.spec.regime == Regime::Diagonal => ErrorMetric::DiagTruncated,
            ErrorMetric::Auto => ErrorMetric::KernelLiteral,
            other => other,
        }
    }
}

struct Scored {
    error: f64,
    aux: BTreeMap<String, f64>,
}

fn fit_and_score(
    ctx: &Context,
    idx: usize,
    k: Option<usize>,
    series: &CoeffSeries,
    curves: Option<&[Curve]>,
) -> Result<Scored, ArhError> {
    let method = &ctx.cfg.methods[idx];
    let ops = &ctx.ops;
    let last = series.last();
    let mut aux = BTreeMap::new();
    let kk = || k.expect("truncating method has k_n");
    let model = match (&ctx.prepared[idx], method.kind) {
        (_, MethodKind::DiagKnown) => PredictorModel::Diagonal(diag_known(series, kk())?),
        (_, MethodKind::DiagUnknown) => {
            if ops.spec.regime == Regime::Diagonal {
                aux.insert("ub".to_string(), ub_bound(series, ops, kk())?.total);
            }
            PredictorModel::Diagonal(diag_unknown(series, kk())?)
        }
        (_, MethodKind::Bosq) => PredictorModel::Matrix(bosq(series, kk())?),
        (_, MethodKind::Guillas) => {
            let k = kk();
            if k > ops.m() {
                return Err(ArhError::InvalidParameter(format!("k_n = {k} exceeds M = {}", ops.m())));
            }
            PredictorModel::Matrix(guillas(series, k, method.beta_u(), GuillasFloor::True(ops.c_eigs[k - 1]))?)
        }
        (Prepared::Wavelet(w), _) => PredictorModel::Wavelet(as_predictor(curves.unwrap(), kk(), w)?),
        (Prepared::Besse(sm), _) => PredictorModel::Penalized(besse_with_smoother(curves.unwrap(), method.q(), sm.clone())?),
        (Prepared::Kernel(sm), _) => {
            let h = method.h.expect("checked bandwidth");
            let curves = curves.unwrap();
            let smoothed = curves.iter().map(|c| sm.smooth(c)).collect::<Result<Vec<_>, _>>()?;
            let probe = kernel_from_smoothed(&smoothed, h, curves.last().unwrap())?;
            aux.insert("nearest_fallback".to_string(), if probe.nearest_fallback { 1.0 } else { 0.0 });
            PredictorModel::Kernel { smoothed, h }
        }
        (Prepared::Componentwise, _) => unreachable!("curve-level method without state"),
    };
    let basis = if method.kind.curve_level() { ctx.curve.as_ref().unwrap() } else { &ctx.quad };
    let input = match curves {
        Some(c) if method.kind.curve_level() => c.last().unwrap().clone(),
        _ => reconstruct(last.as_slice(), basis)?,
    };
    let pred = model.predict_curve(&last, &input, basis)?;
    let error = match ctx.metric(method) {
        ErrorMetric::DiagTruncated => diag_truncated_error(&ops.rho_diag(), &last, kk(), &pred, basis)?,
        ErrorMetric::KernelLiteral => {
            kernel_truncated_error(&ops.rho, &last, kk(), &pred, basis, KernelErrorMode::Literal)?
        }
        ErrorMetric::KernelApplied => kernel_truncated_error(&ops.rho, &last, kk(), &pred, basis, KernelErrorMode::Applied)?,
        ErrorMetric::Full | ErrorMetric::Auto => full_error(&ops.rho, &last, &pred, basis)?,
    };
    Ok(Scored { error, aux })
}

struct Replication {
    records: Vec<ErrorRecord>,
    failures: Vec<Option<String>>,
    elapsed_ms: Vec<f64>,
}

fn replicate(ctx: &Context, size_index: usize, n: usize, l: usize, seed: u64, timing: bool) -> Result<Replication, BenchError> {
    let series = simulate(&ctx.ops, n, seed)?;
    let curves = match &ctx.curve {
        Some(b) => Some(curves_of(&series, b)?),
        None => None,
    };
    let xi = ctx.cfg.threshold.xi(n as f64);
    let mut records = Vec::with_capacity(ctx.cfg.methods.len());
    let mut elapsed_ms = Vec::with_capacity(ctx.cfg.methods.len());
    let mut failures = Vec::with_capacity(ctx.cfg.methods.len());
    for (idx, method) in ctx.cfg.methods.iter().enumerate() {
        let start = timing.then(Instant::now);
        let k = ctx.k_for(method, size_index, n);
        let scored = fit_and_score(ctx, idx, k, &series, curves.as_deref());
        let (error_norm, aux) = match scored {
            Ok(s) => {
                failures.push(None);
                (s.error, s.aux)
            }
            Err(e) => {
                failures.push(Some(e.to_string()));
                (f64::INFINITY, BTreeMap::new())
            }
        };
        records.push(ErrorRecord {
            replication: l,
            n,
            k_n: k.unwrap_or(0),
            method: method.label(),
            error_norm,
            exceeded: !(error_norm <= xi),
            aux,
        });
        elapsed_ms.push(start.map_or(0.0, |s| s.elapsed().as_secs_f64() * 1e3));
    }
    Ok(Replication { records, failures, elapsed_ms })
}

fn median(mut v: Vec<f64>) -> Option<f64> {
    if v.is_empty() {
        return None;
    }
    v.sort_by(f64::total_cmp);
    let k = v.len();
    Some(if k % 2 == 1 { v[k / 2] } else { 0.5 * (v[k / 2 - 1] + v[k / 2]) })
}

fn mean(v: &[f64]) -> Option<f64> {
    (!v.is_empty()).then(|| v.iter().sum::<f64>() / v.len() as f64)
}

pub fn run(cfg: &BenchConfig, opts: &RunOptions) -> Result<RunOutput, BenchError> {
    cfg.check()?;
    let ctx = Context::new(cfg)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.workers)
        .build()
        .map_err(|e| BenchError::Pool(e.to_string()))?;

    let mut table = ResultTable::default();
    let mut all_records = Vec::new();
    let mut seeds = BTreeMap::new();
    let mut diagnostics = Vec::new();
    for (si, &n) in cfg.sample_sizes.iter().enumerate() {
        let cell_seeds: Vec<u64> = (0..cfg.replications).map(|l| replication_seed(cfg.seed_base, n, l)).collect();
        let reps: Vec<Replication> = pool.install(|| {
            cell_seeds
                .par_iter()
                .enumerate()
                .map(|(l, &seed)| replicate(&ctx, si, n, l, seed, opts.timing))
                .collect::<Result<Vec<_>, _>>()
        })?;
        seeds.insert(n, cell_seeds);

        for (idx, method) in cfg.methods.iter().enumerate() {
            let records: Vec<ErrorRecord> = reps.iter().map(|r| r.records[idx].clone()).collect();
            let failures = records.iter().filter(|r| r.failed()).count();
            let finite: Vec<f64> = records.iter().filter(|r| !r.failed()).map(|r| r.error_norm).collect();
            let ubs: Vec<f64> = records.iter().filter_map(|r| r.aux.get("ub").copied()).collect();
            let aborted = 2 * failures > cfg.replications;
            if failures > 0 {
                let first = reps.iter().find_map(|r| r.failures[idx].clone());
                diagnostics.push(format!(
                    "{} n={n}: {failures}/{} replications failed{} ({})",
                    method.label(),
                    cfg.replications,
                    if aborted { ", cell aborted" } else { "" },
                    first.unwrap_or_default()
                ));
            }
            let f_num = if aborted { None } else { Some(f_count(&records, &cfg.threshold)?.num) };
            let wall_ms = opts.timing.then(|| reps.iter().map(|r| r.elapsed_ms[idx]).sum::<f64>());
            table.rows.push(ResultRow {
                scenario: cfg.name.clone(),
                method: method.label(),
                n,
                k_n: ctx.k_for(method, si, n),
                f_num,
                f_den: cfg.replications,
                mean_err: if aborted { None } else { mean(&finite) },
                median_err: if aborted { None } else { median(finite) },
                mean_ub: if aborted { None } else { mean(&ubs) },
                failures,
                wall_ms,
            });
            all_records.extend(records);
        }
    }
    Ok(RunOutput { table, records: all_records, seeds, diagnostics })
}
