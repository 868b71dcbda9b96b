//! Discrimination measures between changed and unchanged vertices and the
//! repeated-simulation experiment driver.
//!
//! For one score vector, `phi` estimates `P[z_changed > z_unchanged]` by
//! resampling; `eta = logit(phi)` and `eta_bar^t = eta^t - eta^{t-1}`.

use std::collections::BTreeMap;

use rand::Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::baselines::ActivitySource;
use crate::dcsbm::{generate_sequence, ScenarioSpec, ThetaMode};
use crate::error::{CdpError, Result};
use crate::pipeline::{
    activity_from_vectors, activity_sequence, cdp_from_embeddings, embed_sequence, CdpConfig,
    Method, ScoreSeries,
};
use crate::procrustes::{GpaOptions, ScoreVector};
use crate::seed;
use crate::spectral::DEFAULT_EPSILON;

/// Resample size used for `phi`.
pub const DEFAULT_SAMPLES: usize = 100_000;

/// Resampling estimate of `P[changed > unchanged]`, clamped to
/// `[1/(2N), 1 - 1/(2N)]` so its log odds stay finite. Ties do not count.
pub fn estimate_phi<R: Rng + ?Sized>(
    changed: &[f64],
    unchanged: &[f64],
    samples: usize,
    rng: &mut R,
) -> Result<f64> {
    if changed.is_empty() || unchanged.is_empty() {
        return Err(CdpError::EmptyPartition);
    }
    if samples == 0 {
        return Err(CdpError::InvalidConfig("phi needs at least one sample".into()));
    }
    let mut wins = 0usize;
    for _ in 0..samples {
        let a = changed[rng.random_range(0..changed.len())];
        let b = unchanged[rng.random_range(0..unchanged.len())];
        if a > b {
            wins += 1;
        }
    }
    let n = samples as f64;
    let lo = 0.5 / n;
    Ok((wins as f64 / n).clamp(lo, 1.0 - lo))
}

/// `ln(phi / (1 - phi))`; `phi` must lie strictly inside `(0, 1)`.
pub fn log_odds(phi: f64) -> f64 {
    debug_assert!(phi > 0.0 && phi < 1.0, "log odds of {phi}");
    (phi / (1.0 - phi)).ln()
}

pub fn log_odds_ratio(phi_t: f64, phi_prev: f64) -> f64 {
    log_odds(phi_t) - log_odds(phi_prev)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Alternative {
    Greater,
    Less,
    TwoSided,
}

impl Alternative {
    pub fn as_str(self) -> &'static str {
        match self {
            Alternative::Greater => "greater",
            Alternative::Less => "less",
            Alternative::TwoSided => "two_sided",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SignTest {
    pub p_value: f64,
    pub positives: usize,
    pub negatives: usize,
    pub ties: usize,
}

/// Exact binomial sign test on the paired differences `a_i - b_i`, ties dropped.
pub fn sign_test(a: &[f64], b: &[f64], alternative: Alternative) -> Result<SignTest> {
    if a.len() != b.len() {
        return Err(CdpError::ShapeMismatch {
            expected: format!("{} pairs", a.len()),
            found: format!("{} pairs", b.len()),
        });
    }
    let (mut positives, mut negatives, mut ties) = (0, 0, 0);
    for (x, y) in a.iter().zip(b) {
        match x.partial_cmp(y) {
            Some(std::cmp::Ordering::Greater) => positives += 1,
            Some(std::cmp::Ordering::Less) => negatives += 1,
            _ => ties += 1,
        }
    }
    let n = positives + negatives;
    if n == 0 {
        return Err(CdpError::Undefined);
    }
    let pmf = binomial_half_pmf(n);
    let upper = |k: usize| pmf[k..].iter().sum::<f64>().min(1.0);
    let lower = |k: usize| pmf[..=k].iter().sum::<f64>().min(1.0);
    let p_value = match alternative {
        Alternative::Greater => upper(positives),
        Alternative::Less => lower(positives),
        Alternative::TwoSided => (2.0 * upper(positives).min(lower(positives))).min(1.0),
    };
    Ok(SignTest {
        p_value,
        positives,
        negatives,
        ties,
    })
}

/// `P[X = k]` for `X ~ Binomial(n, 1/2)`, `k = 0..=n`.
fn binomial_half_pmf(n: usize) -> Vec<f64> {
    let ln_fact: Vec<f64> = std::iter::once(0.0)
        .chain((1..=n).scan(0.0, |acc, i| {
            *acc += (i as f64).ln();
            Some(*acc)
        }))
        .collect();
    let ln_half_n = n as f64 * 0.5f64.ln();
    (0..=n)
        .map(|k| (ln_fact[n] - ln_fact[k] - ln_fact[n - k] + ln_half_n).exp())
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentConfig {
    pub methods: Vec<Method>,
    pub windows: Vec<usize>,
    pub runs: usize,
    /// Run `r` uses base seed `seed ^ r`.
    pub seed: u64,
    pub samples: usize,
    pub epsilon: f64,
    pub theta_mode: ThetaMode,
    pub gpa: GpaOptions,
    pub activity_source: ActivitySource,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            methods: Method::ALL.to_vec(),
            windows: vec![1, 5, 10],
            runs: 100,
            seed: 0,
            samples: DEFAULT_SAMPLES,
            epsilon: DEFAULT_EPSILON,
            theta_mode: ThetaMode::Redraw,
            gpa: GpaOptions::default(),
            activity_source: ActivitySource::Raw,
        }
    }
}

/// One `(method, window, run, t)` measurement.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerfRecord {
    pub scenario: String,
    pub method: Method,
    pub window: usize,
    pub run: usize,
    pub t: usize,
    pub phi: f64,
    pub eta: f64,
    /// Missing at the first scored instant.
    pub eta_bar: Option<f64>,
}

/// `eta` of method `a` against method `b` at one instant, across runs.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Comparison {
    pub window: usize,
    pub t: usize,
    pub a: Method,
    pub b: Method,
    pub alternative: Alternative,
    /// `None` when every run is tied.
    pub p_value: Option<f64>,
    /// Fraction of runs with `eta_a > eta_b`.
    pub proportion: f64,
    pub runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TimingRow {
    pub method: Method,
    pub window: usize,
    /// Mean seconds to build one snapshot's feature.
    pub embed_secs: f64,
    /// Mean seconds for one instant's profile plus scores.
    pub score_secs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SummaryRow {
    pub method: Method,
    pub window: usize,
    pub t: usize,
    pub runs: usize,
    pub eta_q1: f64,
    pub eta_median: f64,
    pub eta_q3: f64,
    pub eta_bar_q1: Option<f64>,
    pub eta_bar_median: Option<f64>,
    pub eta_bar_q3: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub scenario: String,
    pub change_time: usize,
    pub runs: usize,
    /// Sorted by `(method, window, run, t)`.
    pub records: Vec<PerfRecord>,
    pub comparisons: Vec<Comparison>,
    pub timings: Vec<TimingRow>,
}

impl ExperimentReport {
    fn select(&self, method: Method, window: usize, t: usize) -> impl Iterator<Item = &PerfRecord> {
        self.records
            .iter()
            .filter(move |r| r.method == method && r.window == window && r.t == t)
    }

    /// `eta` at `t` for every run, in run order.
    pub fn eta(&self, method: Method, window: usize, t: usize) -> Vec<f64> {
        self.select(method, window, t).map(|r| r.eta).collect()
    }

    /// `eta_bar` at `t` for every run that has one, in run order.
    pub fn eta_bar(&self, method: Method, window: usize, t: usize) -> Vec<f64> {
        self.select(method, window, t).filter_map(|r| r.eta_bar).collect()
    }

    /// Quartiles of `eta` and `eta_bar` per `(method, window, t)`.
    pub fn summary(&self) -> Vec<SummaryRow> {
        let mut groups: BTreeMap<(Method, usize, usize), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
        for r in &self.records {
            let entry = groups.entry((r.method, r.window, r.t)).or_default();
            entry.0.push(r.eta);
            if let Some(b) = r.eta_bar {
                entry.1.push(b);
            }
        }
        groups
            .into_iter()
            .map(|((method, window, t), (eta, eta_bar))| {
                let q = |xs: &[f64], p: f64| (!xs.is_empty()).then(|| quantile(xs, p));
                SummaryRow {
                    method,
                    window,
                    t,
                    runs: eta.len(),
                    eta_q1: quantile(&eta, 0.25),
                    eta_median: quantile(&eta, 0.5),
                    eta_q3: quantile(&eta, 0.75),
                    eta_bar_q1: q(&eta_bar, 0.25),
                    eta_bar_median: q(&eta_bar, 0.5),
                    eta_bar_q3: q(&eta_bar, 0.75),
                }
            })
            .collect()
    }
}

/// Linear-interpolation quantile of a nonempty sample.
pub fn quantile(xs: &[f64], p: f64) -> f64 {
    let mut sorted = xs.to_vec();
    sorted.sort_by(f64::total_cmp);
    let pos = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

pub fn median(xs: &[f64]) -> f64 {
    quantile(xs, 0.5)
}

/// `phi`, `eta` and `eta_bar` for every scored instant of one series.
pub fn performance_series(
    scenario: &str,
    series: &ScoreSeries,
    changed: &[usize],
    unchanged: &[usize],
    run: usize,
    samples: usize,
    seed: u64,
) -> Result<Vec<PerfRecord>> {
    let mut out: Vec<PerfRecord> = Vec::with_capacity(series.scores.len());
    let mut prev: Option<(usize, f64)> = None;
    for (&t, scores) in &series.scores {
        let phi = phi_for(scores, changed, unchanged, samples, seed).map_err(CdpError::at(t))?;
        let eta_bar = prev
            .filter(|&(pt, _)| pt + 1 == t)
            .map(|(_, prev_phi)| log_odds_ratio(phi, prev_phi));
        out.push(PerfRecord {
            scenario: scenario.to_string(),
            method: series.method,
            window: series.window,
            run,
            t,
            phi,
            eta: log_odds(phi),
            eta_bar,
        });
        prev = Some((t, phi));
    }
    Ok(out)
}

fn phi_for(
    scores: &ScoreVector,
    changed: &[usize],
    unchanged: &[usize],
    samples: usize,
    seed: u64,
) -> Result<f64> {
    let pick = |idx: &[usize]| idx.iter().map(|&i| scores.z[i]).collect::<Vec<_>>();
    let mut rng = seed::rng(seed, &[scores.t as u64]);
    estimate_phi(&pick(changed), &pick(unchanged), samples, &mut rng)
}

const SIM_STREAM: u64 = 1;
const RANK_STREAM: u64 = 2;
const PHI_STREAM: u64 = 3;

struct RunOutput {
    records: Vec<PerfRecord>,
    timings: Vec<(Method, usize, f64, f64)>,
}

fn run_once(spec: &ScenarioSpec, cfg: &ExperimentConfig, run: usize) -> Result<RunOutput> {
    let base = seed::run_seed(cfg.seed, run);
    let seq = generate_sequence(spec, seed::derive(base, &[SIM_STREAM]), cfg.theta_mode)?;
    let changed = &spec.changed;
    let unchanged = spec.unchanged();

    let mut records = Vec::new();
    let mut timings = Vec::new();
    let mut push = |series: ScoreSeries, embed_secs: f64| -> Result<()> {
        let phi_seed = seed::derive(
            base,
            &[PHI_STREAM, series.method as u64, series.window as u64],
        );
        records.extend(performance_series(
            &spec.name,
            &series,
            changed,
            &unchanged,
            run,
            cfg.samples,
            phi_seed,
        )?);
        timings.push((series.method, series.window, embed_secs, series.timings.mean_score()));
        Ok(())
    };

    let base_config = CdpConfig {
        epsilon_rank: cfg.epsilon,
        seed: seed::derive(base, &[RANK_STREAM]),
        gpa: cfg.gpa,
        activity_source: cfg.activity_source,
        ..CdpConfig::default()
    };

    if cfg.methods.contains(&Method::Cdp) {
        let (embeddings, secs) = embed_sequence(&seq.snapshots, &base_config)?;
        let embed_secs = mean_of(secs.values());
        for &w in &cfg.windows {
            let series = cdp_from_embeddings(&embeddings, &base_config.with_window(w))?;
            push(series, embed_secs)?;
        }
    }
    let activity_methods: Vec<Method> = cfg
        .methods
        .iter()
        .copied()
        .filter(|m| *m != Method::Cdp)
        .collect();
    if !activity_methods.is_empty() {
        let (vectors, secs) = activity_sequence(&seq.snapshots, &base_config)?;
        let embed_secs = mean_of(secs.values());
        for &m in &activity_methods {
            for &w in &cfg.windows {
                let series = activity_from_vectors(m, &vectors, &base_config.with_window(w))?;
                push(series, embed_secs)?;
            }
        }
    }
    Ok(RunOutput { records, timings })
}

fn mean_of<'a>(xs: impl Iterator<Item = &'a f64>) -> f64 {
    let v: Vec<f64> = xs.copied().collect();
    if v.is_empty() {
        0.0
    } else {
        v.iter().sum::<f64>() / v.len() as f64
    }
}

/// Simulates `cfg.runs` sequences of `spec`, scores each with every
/// requested method and window, and compares the methods' `eta` at the
/// change onset.
pub fn run_experiment(spec: &ScenarioSpec, cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    if cfg.runs == 0 {
        return Err(CdpError::InvalidConfig("runs must be at least 1".into()));
    }
    if cfg.methods.is_empty() || cfg.windows.is_empty() {
        return Err(CdpError::InvalidConfig("need at least one method and window".into()));
    }
    for &w in &cfg.windows {
        if w == 0 {
            return Err(CdpError::InvalidConfig("window must be at least 1".into()));
        }
        spec.change.validate(spec.t_len, w)?;
    }
    if spec.changed.is_empty() || spec.changed.len() == spec.n() {
        return Err(CdpError::EmptyPartition);
    }

    let outputs = (0..cfg.runs)
        .into_par_iter()
        .map(|run| run_once(spec, cfg, run))
        .collect::<Result<Vec<_>>>()?;

    let mut records = Vec::new();
    let mut timing_acc: BTreeMap<(Method, usize), (f64, f64, usize)> = BTreeMap::new();
    for out in outputs {
        records.extend(out.records);
        for (m, w, e, s) in out.timings {
            let acc = timing_acc.entry((m, w)).or_default();
            acc.0 += e;
            acc.1 += s;
            acc.2 += 1;
        }
    }
    records.sort_by_key(|r| (r.method, r.window, r.run, r.t));

    let timings = timing_acc
        .into_iter()
        .map(|((method, window), (e, s, c))| TimingRow {
            method,
            window,
            embed_secs: e / c as f64,
            score_secs: s / c as f64,
        })
        .collect();

    let mut report = ExperimentReport {
        scenario: spec.name.clone(),
        change_time: spec.change.onset(),
        runs: cfg.runs,
        records,
        comparisons: Vec::new(),
        timings,
    };
    report.comparisons = compare_methods(&report, &cfg.methods, &cfg.windows);
    Ok(report)
}

fn compare_methods(report: &ExperimentReport, methods: &[Method], windows: &[usize]) -> Vec<Comparison> {
    let pairs = [
        (Method::Cdp, Method::Act),
        (Method::Cdp, Method::Actm),
        (Method::Actm, Method::Act),
    ];
    let t = report.change_time;
    let mut out = Vec::new();
    for &window in windows {
        for &(a, b) in &pairs {
            if !(methods.contains(&a) && methods.contains(&b)) {
                continue;
            }
            let ea = report.eta(a, window, t);
            let eb = report.eta(b, window, t);
            let wins = ea.iter().zip(&eb).filter(|(x, y)| x > y).count();
            let p_value = sign_test(&ea, &eb, Alternative::Greater).ok().map(|s| s.p_value);
            out.push(Comparison {
                window,
                t,
                a,
                b,
                alternative: Alternative::Greater,
                p_value,
                proportion: wins as f64 / ea.len().max(1) as f64,
                runs: ea.len(),
            });
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dcsbm::{ChangeType, Scenario};

    #[test]
    fn separated_scores_clamp_high() {
        let mut rng = seed::rng(1, &[]);
        let phi = estimate_phi(&[10.0; 5], &[1.0; 7], 1000, &mut rng).unwrap();
        assert_eq!(phi, 1.0 - 1.0 / 2000.0);
    }

    #[test]
    fn tied_scores_clamp_low() {
        let mut rng = seed::rng(1, &[]);
        let phi = estimate_phi(&[3.0; 5], &[3.0; 5], 1000, &mut rng).unwrap();
        assert_eq!(phi, 1.0 / 2000.0);
    }

    #[test]
    fn empty_partition() {
        let mut rng = seed::rng(1, &[]);
        assert!(matches!(
            estimate_phi(&[], &[1.0], 10, &mut rng),
            Err(CdpError::EmptyPartition)
        ));
    }

    #[test]
    fn log_odds_values() {
        assert_eq!(log_odds(0.5), 0.0);
        assert_close!(log_odds(0.9), 9f64.ln(), 1e-12);
        assert_close!(log_odds(0.1), -9f64.ln(), 1e-12);
        assert_eq!(log_odds_ratio(0.3, 0.3), 0.0);
        assert_close!(log_odds_ratio(0.9, 0.5), 9f64.ln(), 1e-12);
        assert_close!(log_odds_ratio(0.5, 0.9), -9f64.ln(), 1e-12);
    }

    #[test]
    fn sign_test_all_positive() {
        let a = [2.0; 10];
        let b = [1.0; 10];
        let s = sign_test(&a, &b, Alternative::Greater).unwrap();
        assert_close!(s.p_value, 9.765625e-4, 1e-15);
        assert_eq!(s.positives, 10);
    }

    #[test]
    fn sign_test_matches_enumeration() {
        // Exhaustive: count sign patterns of 10 fair coins.
        let count_at_least = |k: u32| (0u32..1024).filter(|m| m.count_ones() >= k).count() as f64 / 1024.0;
        let count_at_most = |k: u32| (0u32..1024).filter(|m| m.count_ones() <= k).count() as f64 / 1024.0;

        let a: Vec<f64> = (0..10).map(|i| if i < 5 { 1.0 } else { -1.0 }).collect();
        let b = [0.0; 10];
        let s = sign_test(&a, &b, Alternative::TwoSided).unwrap();
        assert_eq!(s.p_value, 1.0);
        assert!(2.0 * count_at_most(5).min(count_at_least(5)) >= 1.0);

        let a: Vec<f64> = (0..10).map(|i| if i < 8 { 1.0 } else { -1.0 }).collect();
        let g = sign_test(&a, &b, Alternative::Greater).unwrap();
        assert_close!(g.p_value, count_at_least(8), 1e-14);
        let l = sign_test(&a, &b, Alternative::Less).unwrap();
        assert_close!(l.p_value, count_at_most(8), 1e-14);
        let t = sign_test(&a, &b, Alternative::TwoSided).unwrap();
        assert_close!(t.p_value, 2.0 * count_at_least(8), 1e-14);
    }

    #[test]
    fn sign_test_drops_ties() {
        let s = sign_test(&[1.0, 2.0, 3.0], &[1.0, 1.0, 1.0], Alternative::Greater).unwrap();
        assert_eq!((s.positives, s.negatives, s.ties), (2, 0, 1));
        assert_close!(s.p_value, 0.25, 1e-15);
        assert!(matches!(
            sign_test(&[1.0; 4], &[1.0; 4], Alternative::Greater),
            Err(CdpError::Undefined)
        ));
    }

    #[test]
    fn quantiles() {
        let xs = [4.0, 1.0, 3.0, 2.0];
        assert_eq!(median(&xs), 2.5);
        assert_eq!(quantile(&xs, 0.0), 1.0);
        assert_eq!(quantile(&xs, 1.0), 4.0);
        assert_eq!(quantile(&xs, 0.25), 1.75);
    }

    #[test]
    fn tiny_experiment_shapes() {
        let spec = ScenarioSpec::catalog(
            Scenario::GroupChange,
            ChangeType::Point { t_star: 4 },
            5,
            Some(0.1),
        )
        .unwrap();
        let cfg = ExperimentConfig {
            windows: vec![1, 2],
            runs: 2,
            samples: 2000,
            ..ExperimentConfig::default()
        };
        let report = run_experiment(&spec, &cfg).unwrap();
        // 3 methods x 2 windows x 2 runs; window 1 scores t=2..5, window 2 t=3..5.
        assert_eq!(report.records.len(), 3 * 2 * (4 + 3));
        assert_eq!(report.comparisons.len(), 2 * 3);
        assert_eq!(report.timings.len(), 6);
        assert_eq!(report.eta(Method::Cdp, 1, 4).len(), 2);
        let again = run_experiment(&spec, &cfg).unwrap();
        assert_eq!(report.records, again.records);
        let first = report
            .records
            .iter()
            .find(|r| r.method == Method::Cdp && r.window == 2)
            .unwrap();
        assert_eq!(first.t, 3);
        assert!(first.eta_bar.is_none());
    }
}
