//! End-to-end change detection over a snapshot sequence.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{act_scores, activity, actm_scores, ActivitySource, ActivityVector};
use crate::error::{CdpError, Result};
use crate::graph::{representation_matrix, Snapshot};
use crate::procrustes::{change_scores, profile_embedding, GpaOptions, ScoreVector};
use crate::spectral::{embed, Embedding, DEFAULT_EPSILON};

/// Default z-score above which a vertex is flagged.
pub const DEFAULT_THRESHOLD: f64 = 5.0;

/// Below this the score spread is treated as zero.
const DEGENERATE_SD: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Cdp,
    Act,
    Actm,
}

impl Method {
    pub const ALL: [Method; 3] = [Method::Cdp, Method::Act, Method::Actm];

    pub fn as_str(self) -> &'static str {
        match self {
            Method::Cdp => "cdp",
            Method::Act => "act",
            Method::Actm => "actm",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = CdpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "cdp" => Ok(Method::Cdp),
            "act" => Ok(Method::Act),
            "actm" => Ok(Method::Actm),
            other => Err(CdpError::InvalidConfig(format!("unknown method `{other}`"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CdpConfig {
    pub window: usize,
    pub epsilon_rank: f64,
    pub zscore_threshold: f64,
    /// Seed for rank selection, shared by every snapshot.
    pub seed: u64,
    pub gpa: GpaOptions,
    /// Matrix the ACT/ACTM baselines read.
    pub activity_source: ActivitySource,
}

impl Default for CdpConfig {
    fn default() -> Self {
        Self {
            window: 5,
            epsilon_rank: DEFAULT_EPSILON,
            zscore_threshold: DEFAULT_THRESHOLD,
            seed: 0,
            gpa: GpaOptions::default(),
            activity_source: ActivitySource::Raw,
        }
    }
}

impl CdpConfig {
    pub fn with_window(mut self, window: usize) -> Self {
        self.window = window;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.window < 1 {
            return Err(CdpError::InvalidConfig("window must be at least 1".into()));
        }
        if !(self.epsilon_rank > 0.0) {
            return Err(CdpError::InvalidConfig(format!(
                "epsilon must be positive, got {}",
                self.epsilon_rank
            )));
        }
        if !self.zscore_threshold.is_finite() {
            return Err(CdpError::InvalidConfig("threshold must be finite".into()));
        }
        Ok(())
    }
}

/// Z-scores of one score vector and the vertices above the threshold.
#[derive(Debug, Clone, PartialEq)]
pub struct Normalized {
    pub zscores: Vec<f64>,
    pub detections: Vec<usize>,
    /// Scores had (numerically) no spread; nothing is flagged.
    pub degenerate: bool,
}

/// Standardizes by the sample mean and sample standard deviation and flags
/// every vertex whose z-score strictly exceeds `threshold`.
pub fn normalize_and_detect(z: &[f64], threshold: f64) -> Result<Normalized> {
    let n = z.len();
    if n < 2 {
        return Err(CdpError::TooFewVertices { n, min: 2 });
    }
    let mean = z.iter().sum::<f64>() / n as f64;
    let var = z.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    let sd = var.sqrt();
    if !(sd >= DEGENERATE_SD) {
        return Ok(Normalized {
            zscores: vec![0.0; n],
            detections: Vec::new(),
            degenerate: true,
        });
    }
    let zscores: Vec<f64> = z.iter().map(|x| (x - mean) / sd).collect();
    let detections = zscores
        .iter()
        .enumerate()
        .filter(|(_, &s)| s > threshold)
        .map(|(i, _)| i)
        .collect();
    Ok(Normalized {
        zscores,
        detections,
        degenerate: false,
    })
}

/// Wall-clock seconds spent per time instant.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct StageTimings {
    /// Building the per-snapshot feature (embedding or activity vector).
    pub embed: BTreeMap<usize, f64>,
    /// Profile construction plus scoring.
    pub score: BTreeMap<usize, f64>,
}

impl StageTimings {
    pub fn mean_embed(&self) -> f64 {
        mean(self.embed.values())
    }

    pub fn mean_score(&self) -> f64 {
        mean(self.score.values())
    }
}

fn mean<'a>(xs: impl Iterator<Item = &'a f64>) -> f64 {
    let (sum, count) = xs.fold((0.0, 0usize), |(s, c), x| (s + x, c + 1));
    if count == 0 {
        0.0
    } else {
        sum / count as f64
    }
}

/// Scores for every time instant after the first `window`. Instants
/// `t <= window` have no entry.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreSeries {
    pub method: Method,
    pub window: usize,
    pub n: usize,
    pub scores: BTreeMap<usize, ScoreVector>,
    pub zscores: BTreeMap<usize, Vec<f64>>,
    pub detections: BTreeMap<usize, Vec<usize>>,
    pub degenerate: BTreeMap<usize, bool>,
    /// Embedding dimension per instant (CDP only).
    pub dims: BTreeMap<usize, usize>,
    pub timings: StageTimings,
}

impl ScoreSeries {
    fn new(method: Method, window: usize, n: usize) -> Self {
        Self {
            method,
            window,
            n,
            scores: BTreeMap::new(),
            zscores: BTreeMap::new(),
            detections: BTreeMap::new(),
            degenerate: BTreeMap::new(),
            dims: BTreeMap::new(),
            timings: StageTimings::default(),
        }
    }

    fn insert(&mut self, scores: ScoreVector, threshold: f64) -> Result<()> {
        let t = scores.t;
        let norm = normalize_and_detect(&scores.z, threshold).map_err(CdpError::at(t))?;
        self.zscores.insert(t, norm.zscores);
        self.detections.insert(t, norm.detections);
        self.degenerate.insert(t, norm.degenerate);
        self.scores.insert(t, scores);
        Ok(())
    }

    pub fn times(&self) -> impl Iterator<Item = usize> + '_ {
        self.scores.keys().copied()
    }

    /// Fraction of vertices flagged at `t`.
    pub fn detection_fraction(&self, t: usize) -> Option<f64> {
        self.detections
            .get(&t)
            .map(|d| d.len() as f64 / self.n as f64)
    }
}

fn check_sequence(snapshots: &[Snapshot], config: &CdpConfig) -> Result<usize> {
    config.validate()?;
    let first = snapshots
        .first()
        .ok_or_else(|| CdpError::InvalidConfig("no snapshots".into()))?;
    if snapshots.len() <= config.window {
        return Err(CdpError::InvalidConfig(format!(
            "need more than {} snapshots for window {}, got {}",
            config.window,
            config.window,
            snapshots.len()
        )));
    }
    let n = first.n();
    for s in snapshots {
        if s.n() != n {
            return Err(CdpError::AtTime {
                t: s.t(),
                source: Box::new(CdpError::ShapeMismatch {
                    expected: format!("{n} vertices"),
                    found: format!("{} vertices", s.n()),
                }),
            });
        }
    }
    Ok(n)
}

/// Embeds one snapshot. Rank selection uses the same `seed` at every `t`,
/// so identical snapshots always get identical embeddings.
pub fn embed_snapshot(snapshot: &Snapshot, epsilon: f64, seed: u64) -> Result<Embedding> {
    let t = snapshot.t();
    let rep = representation_matrix(snapshot).map_err(CdpError::at(t))?;
    let mut e = embed(&rep.m, epsilon, seed).map_err(CdpError::at(t))?;
    e.t = t;
    Ok(e)
}

fn timed<T>(f: impl FnOnce() -> Result<T>) -> Result<(T, f64)> {
    let start = Instant::now();
    let out = f()?;
    Ok((out, start.elapsed().as_secs_f64()))
}

/// Change detection with spectral embeddings and Procrustes profiles.
pub fn run_cdp(snapshots: &[Snapshot], config: &CdpConfig) -> Result<ScoreSeries> {
    check_sequence(snapshots, config)?;
    let (embeddings, embed_secs) = embed_sequence(snapshots, config)?;
    let mut series = cdp_from_embeddings(&embeddings, config)?;
    series.timings.embed = embed_secs;
    Ok(series)
}

/// Embeds every snapshot; also returns the seconds spent on each.
pub fn embed_sequence(
    snapshots: &[Snapshot],
    config: &CdpConfig,
) -> Result<(Vec<Embedding>, BTreeMap<usize, f64>)> {
    let embedded = snapshots
        .par_iter()
        .map(|s| timed(|| embed_snapshot(s, config.epsilon_rank, config.seed)))
        .collect::<Result<Vec<_>>>()?;
    let secs = embedded.iter().map(|(e, s)| (e.t, *s)).collect();
    Ok((embedded.into_iter().map(|(e, _)| e).collect(), secs))
}

/// Profile and score stage of CDP on precomputed embeddings.
pub fn cdp_from_embeddings(embeddings: &[Embedding], config: &CdpConfig) -> Result<ScoreSeries> {
    config.validate()?;
    let w = config.window;
    if embeddings.len() <= w {
        return Err(CdpError::InvalidConfig(format!(
            "need more than {w} embeddings, got {}",
            embeddings.len()
        )));
    }
    let n = embeddings[0].n();
    let mut series = ScoreSeries::new(Method::Cdp, w, n);
    for e in embeddings {
        series.dims.insert(e.t, e.d());
    }

    let scored = (w..embeddings.len())
        .into_par_iter()
        .map(|pos| {
            let current = &embeddings[pos];
            timed(|| {
                let profile = profile_embedding(&embeddings[pos - w..pos], config.gpa)?;
                change_scores(current, &profile, config.gpa)
            })
            .map_err(CdpError::at(current.t))
        })
        .collect::<Result<Vec<_>>>()?;
    for (z, secs) in scored {
        series.timings.score.insert(z.t, secs);
        series.insert(z, config.zscore_threshold)?;
    }
    Ok(series)
}

/// Activity vector of every snapshot; also returns the seconds spent on each.
pub fn activity_sequence(
    snapshots: &[Snapshot],
    config: &CdpConfig,
) -> Result<(Vec<ActivityVector>, BTreeMap<usize, f64>)> {
    let source = config.activity_source;
    let vectors = snapshots
        .par_iter()
        .map(|s| timed(|| activity(s, source)).map_err(CdpError::at(s.t())))
        .collect::<Result<Vec<_>>>()?;
    let secs = vectors.iter().map(|(a, s)| (a.t, *s)).collect();
    Ok((vectors.into_iter().map(|(a, _)| a).collect(), secs))
}

/// ACT or ACTM scoring on precomputed activity vectors.
pub fn activity_from_vectors(
    method: Method,
    activities: &[ActivityVector],
    config: &CdpConfig,
) -> Result<ScoreSeries> {
    config.validate()?;
    let w = config.window;
    if activities.len() <= w {
        return Err(CdpError::InvalidConfig(format!(
            "need more than {w} activity vectors, got {}",
            activities.len()
        )));
    }
    let mut series = ScoreSeries::new(method, w, activities[0].u.len());
    for pos in w..activities.len() {
        let current = &activities[pos];
        let window = &activities[pos - w..pos];
        let (z, secs) = timed(|| match method {
            Method::Act => act_scores(window, current),
            Method::Actm => actm_scores(window, current),
            Method::Cdp => Err(CdpError::InvalidConfig("cdp is not an activity method".into())),
        })
        .map_err(CdpError::at(current.t))?;
        series.timings.score.insert(z.t, secs);
        series.insert(z, config.zscore_threshold)?;
    }
    Ok(series)
}

/// ACT or ACTM over a snapshot sequence.
pub fn run_activity(
    method: Method,
    snapshots: &[Snapshot],
    config: &CdpConfig,
) -> Result<ScoreSeries> {
    check_sequence(snapshots, config)?;
    let (activities, embed_secs) = activity_sequence(snapshots, config)?;
    let mut series = activity_from_vectors(method, &activities, config)?;
    series.timings.embed = embed_secs;
    Ok(series)
}

/// Dispatches to [`run_cdp`] or [`run_activity`].
pub fn run_method(method: Method, snapshots: &[Snapshot], config: &CdpConfig) -> Result<ScoreSeries> {
    match method {
        Method::Cdp => run_cdp(snapshots, config),
        Method::Act | Method::Actm => run_activity(method, snapshots, config),
    }
}
