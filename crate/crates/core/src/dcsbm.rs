//! Degree-corrected stochastic block model simulator.
//!
//! Edge weights are Poisson with mean `theta_i * theta_j * psi[c_i, c_j]`,
//! where `psi[r, s] = B[r, s] * g_r * g_s` is the expected number of edges
//! between blocks `r` and `s` and `B = lambda * B_planted + (1 - lambda) * nu 11^T`.
//! Degree parameters follow a power law and are normalized to sum to one
//! within each block.

use std::fmt;
use std::str::FromStr;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{CdpError, Result};
use crate::graph::Snapshot;
use crate::seed;

pub const ALPHA: f64 = 0.01;
pub const BETA: f64 = 0.02;
pub const GAMMA: f64 = 0.03;
pub const NU: f64 = 0.0025;
pub const LAMBDA: f64 = 0.8;
pub const THETA_MIN: f64 = 1.0;
pub const POWER_LAW_SHAPE: f64 = 2.5;

pub const SEQUENCE_LENGTH: usize = 30;
pub const CHANGE_TIME: usize = 21;
pub const INTERVAL_END: usize = 30;

/// Distribution of the degree parameters inside one block.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum ThetaLaw {
    /// Density `(shape - 1) / theta_min * (theta / theta_min)^(-shape)` on `[theta_min, inf)`.
    PowerLaw { theta_min: f64, shape: f64 },
    /// Every vertex gets the same value (hence `1 / g_r` after normalization).
    Constant,
}

impl ThetaLaw {
    pub fn default_power_law() -> Self {
        ThetaLaw::PowerLaw {
            theta_min: THETA_MIN,
            shape: POWER_LAW_SHAPE,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DcsbmModel {
    /// Block sizes `g`; vertices are assigned to blocks contiguously.
    pub sizes: Vec<usize>,
    pub planted: DMatrix<f64>,
    pub nu: f64,
    pub lambda: f64,
    pub theta_laws: Vec<ThetaLaw>,
}

impl DcsbmModel {
    pub fn new(
        sizes: Vec<usize>,
        planted: DMatrix<f64>,
        nu: f64,
        lambda: f64,
        theta_laws: Vec<ThetaLaw>,
    ) -> Result<Self> {
        let model = Self {
            sizes,
            planted,
            nu,
            lambda,
            theta_laws,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn k(&self) -> usize {
        self.sizes.len()
    }

    pub fn n(&self) -> usize {
        self.sizes.iter().sum()
    }

    /// Block label of every vertex.
    pub fn memberships(&self) -> Vec<usize> {
        self.sizes
            .iter()
            .enumerate()
            .flat_map(|(r, &g)| std::iter::repeat_n(r, g))
            .collect()
    }

    /// First vertex index of every block, plus `n` at the end.
    pub fn block_starts(&self) -> Vec<usize> {
        let mut starts = vec![0];
        for g in &self.sizes {
            starts.push(starts.last().unwrap() + g);
        }
        starts
    }

    pub fn validate(&self) -> Result<()> {
        let k = self.k();
        if self.planted.shape() != (k, k) {
            return Err(CdpError::ShapeMismatch {
                expected: format!("{k}x{k} planted matrix"),
                found: format!("{:?}", self.planted.shape()),
            });
        }
        if self.theta_laws.len() != k {
            return Err(CdpError::ShapeMismatch {
                expected: format!("{k} theta laws"),
                found: format!("{}", self.theta_laws.len()),
            });
        }
        for (name, v) in [("nu", self.nu), ("lambda", self.lambda)] {
            if !(0.0..=1.0).contains(&v) {
                return Err(CdpError::InvalidConfig(format!("{name}={v} outside [0, 1]")));
            }
        }
        for law in &self.theta_laws {
            if let ThetaLaw::PowerLaw { theta_min, shape } = *law {
                if !(shape > 1.0) {
                    return Err(CdpError::InvalidShape(shape));
                }
                if !(theta_min > 0.0) {
                    return Err(CdpError::InvalidConfig(format!(
                        "theta_min must be positive, got {theta_min}"
                    )));
                }
            }
        }
        block_matrix(self).map(|_| ())
    }

    /// Same model with every block size multiplied by `scale` and rounded.
    pub fn scaled(mut self, scale: f64) -> Result<Self> {
        if !(scale > 0.0 && scale.is_finite()) {
            return Err(CdpError::InvalidConfig(format!("scale must be positive, got {scale}")));
        }
        self.sizes = self
            .sizes
            .iter()
            .map(|&g| (g as f64 * scale).round() as usize)
            .collect();
        Ok(self)
    }
}

/// `B = lambda * B_planted + (1 - lambda) * nu 11^T`.
pub fn block_matrix(model: &DcsbmModel) -> Result<DMatrix<f64>> {
    let b = model
        .planted
        .map(|p| model.lambda * p + (1.0 - model.lambda) * model.nu);
    for i in 0..b.nrows() {
        for j in 0..b.ncols() {
            let value = b[(i, j)];
            if !(0.0..=1.0).contains(&value) {
                return Err(CdpError::InvalidProbability { row: i, col: j, value });
            }
            if b[(i, j)] != b[(j, i)] {
                return Err(CdpError::NotSymmetric { row: i, col: j });
            }
        }
    }
    Ok(b)
}

/// Expected edge counts between blocks, `psi[r, s] = B[r, s] * g_r * g_s`.
pub fn psi(model: &DcsbmModel) -> Result<DMatrix<f64>> {
    let b = block_matrix(model)?;
    Ok(DMatrix::from_fn(model.k(), model.k(), |r, s| {
        b[(r, s)] * model.sizes[r] as f64 * model.sizes[s] as f64
    }))
}

/// One inverse-CDF draw from the power law.
pub fn sample_power_law<R: Rng + ?Sized>(theta_min: f64, shape: f64, rng: &mut R) -> f64 {
    let u: f64 = rng.random();
    theta_min * (1.0 - u).powf(-1.0 / (shape - 1.0))
}

/// Degree parameters for every vertex, normalized to sum to one per block.
pub fn sample_theta<R: Rng + ?Sized>(model: &DcsbmModel, rng: &mut R) -> Result<Vec<f64>> {
    model.validate()?;
    let mut theta = Vec::with_capacity(model.n());
    for (&g, law) in model.sizes.iter().zip(&model.theta_laws) {
        match *law {
            ThetaLaw::Constant => theta.extend(std::iter::repeat_n(1.0 / g as f64, g)),
            ThetaLaw::PowerLaw { theta_min, shape } => {
                let draws: Vec<f64> = (0..g).map(|_| sample_power_law(theta_min, shape, rng)).collect();
                let total: f64 = draws.iter().sum();
                theta.extend(draws.into_iter().map(|x| x / total));
            }
        }
    }
    Ok(theta)
}

/// Mean of edge `(i, j)`: `theta_i * theta_j * psi[c_i, c_j]`.
pub fn edge_means(model: &DcsbmModel, theta: &[f64]) -> Result<DMatrix<f64>> {
    let n = model.n();
    if theta.len() != n {
        return Err(CdpError::ShapeMismatch {
            expected: format!("{n} degree parameters"),
            found: format!("{}", theta.len()),
        });
    }
    let psi = psi(model)?;
    let c = model.memberships();
    Ok(DMatrix::from_fn(n, n, |i, j| {
        if i == j {
            0.0
        } else {
            theta[i] * theta[j] * psi[(c[i], c[j])]
        }
    }))
}

/// Draws one symmetric weight matrix with a zero diagonal.
pub fn sample_snapshot<R: Rng + ?Sized>(
    model: &DcsbmModel,
    theta: &[f64],
    t: usize,
    rng: &mut R,
) -> Result<Snapshot> {
    let means = edge_means(model, theta)?;
    let n = model.n();
    let mut w = DMatrix::zeros(n, n);
    for j in 1..n {
        for i in 0..j {
            let mean = means[(i, j)];
            let x = if mean > 0.0 {
                Poisson::new(mean)
                    .map_err(|e| CdpError::InvalidConfig(format!("Poisson mean {mean}: {e}")))?
                    .sample(rng)
            } else {
                0.0
            };
            w[(i, j)] = x;
            w[(j, i)] = x;
        }
    }
    Snapshot::new(t, w)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ModelName {
    M1,
    M2,
    M3,
    M4,
    M5,
    M6,
}

impl FromStr for ModelName {
    type Err = CdpError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "M1" => Ok(ModelName::M1),
            "M2" => Ok(ModelName::M2),
            "M3" => Ok(ModelName::M3),
            "M4" => Ok(ModelName::M4),
            "M5" => Ok(ModelName::M5),
            "M6" => Ok(ModelName::M6),
            _ => Err(CdpError::UnknownModel(s.to_string())),
        }
    }
}

/// The six reference models at `n = 900`, optionally with every block size
/// multiplied by `scale`.
pub fn catalog(name: ModelName, scale: Option<f64>) -> Result<DcsbmModel> {
    let diag = |v: &[f64]| DMatrix::from_diagonal(&nalgebra::DVector::from_column_slice(v));
    let pl = ThetaLaw::default_power_law();
    let (sizes, planted, laws) = match name {
        ModelName::M1 => (vec![300, 300, 300], diag(&[ALPHA, BETA, GAMMA]), vec![pl; 3]),
        ModelName::M2 => (
            vec![150, 150, 300, 300],
            diag(&[ALPHA, ALPHA, BETA, GAMMA]),
            vec![pl; 4],
        ),
        ModelName::M3 => (vec![300, 300, 300], diag(&[ALPHA, BETA, 0.1 * GAMMA]), vec![pl; 3]),
        ModelName::M4 => (vec![150, 450, 300], diag(&[ALPHA, BETA, GAMMA]), vec![pl; 3]),
        ModelName::M5 => (
            vec![300, 300, 300],
            diag(&[ALPHA, BETA, GAMMA]),
            vec![ThetaLaw::Constant, pl, pl],
        ),
        ModelName::M6 => (
            vec![300, 300, 300],
            DMatrix::from_row_slice(
                3,
                3,
                &[
                    0.5 * ALPHA,
                    0.5 * ALPHA,
                    0.0,
                    0.5 * ALPHA,
                    BETA - 0.5 * ALPHA,
                    0.0,
                    0.0,
                    0.0,
                    GAMMA,
                ],
            ),
            vec![pl; 3],
        ),
    };
    let model = DcsbmModel::new(sizes, planted, NU, LAMBDA, laws)?;
    match scale {
        Some(s) => model.scaled(s),
        None => Ok(model),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Scenario {
    GroupChange,
    Split,
    Merge,
    Form,
    Fragment,
    HeteroToHomo,
    HomoToHetero,
    SimpleToComplex,
    ComplexToSimple,
}

impl Scenario {
    pub const ALL: [Scenario; 9] = [
        Scenario::GroupChange,
        Scenario::Split,
        Scenario::Merge,
        Scenario::Form,
        Scenario::Fragment,
        Scenario::HeteroToHomo,
        Scenario::HomoToHetero,
        Scenario::SimpleToComplex,
        Scenario::ComplexToSimple,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Scenario::GroupChange => "group-change",
            Scenario::Split => "split",
            Scenario::Merge => "merge",
            Scenario::Form => "form",
            Scenario::Fragment => "fragment",
            Scenario::HeteroToHomo => "hetero-to-homo",
            Scenario::HomoToHetero => "homo-to-hetero",
            Scenario::SimpleToComplex => "simple-to-complex",
            Scenario::ComplexToSimple => "complex-to-simple",
        }
    }

    /// Models before and after the change.
    pub fn models(self) -> (ModelName, ModelName) {
        use ModelName::*;
        match self {
            Scenario::GroupChange => (M1, M4),
            Scenario::Split => (M1, M2),
            Scenario::Merge => (M2, M1),
            Scenario::Form => (M3, M1),
            Scenario::Fragment => (M1, M3),
            Scenario::HeteroToHomo => (M1, M5),
            Scenario::HomoToHetero => (M5, M1),
            Scenario::SimpleToComplex => (M1, M6),
            Scenario::ComplexToSimple => (M6, M1),
        }
    }

    /// Changed vertices expressed as a range of equal-thirds blocks.
    fn changed_thirds(self) -> std::ops::Range<usize> {
        match self {
            Scenario::GroupChange | Scenario::SimpleToComplex | Scenario::ComplexToSimple => 0..2,
            Scenario::Split | Scenario::Merge | Scenario::HeteroToHomo | Scenario::HomoToHetero => 0..1,
            Scenario::Form | Scenario::Fragment => 2..3,
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Scenario {
    type Err = CdpError;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.as_str() == s)
            .ok_or_else(|| CdpError::UnknownScenario(s.to_string()))
    }
}

/// When the generating model switches.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase")]
pub enum ChangeType {
    /// Only `t_star` is drawn from the changed model.
    Point { t_star: usize },
    /// `start..=end` are drawn from the changed model.
    Interval { start: usize, end: usize },
}

impl ChangeType {
    pub fn default_point() -> Self {
        ChangeType::Point { t_star: CHANGE_TIME }
    }

    pub fn default_interval() -> Self {
        ChangeType::Interval {
            start: CHANGE_TIME,
            end: INTERVAL_END,
        }
    }

    pub fn is_changed(&self, t: usize) -> bool {
        match *self {
            ChangeType::Point { t_star } => t == t_star,
            ChangeType::Interval { start, end } => (start..=end).contains(&t),
        }
    }

    /// First instant drawn from the changed model.
    pub fn onset(&self) -> usize {
        match *self {
            ChangeType::Point { t_star } => t_star,
            ChangeType::Interval { start, .. } => start,
        }
    }

    /// Checks `window < onset` and that the change fits in `t_len` instants.
    pub fn validate(&self, t_len: usize, window: usize) -> Result<()> {
        let ok = match *self {
            ChangeType::Point { t_star } => window < t_star && t_star <= t_len,
            ChangeType::Interval { start, end } => window < start && start < end && end <= t_len,
        };
        if ok {
            Ok(())
        } else {
            Err(CdpError::InvalidConfig(format!(
                "change {self:?} does not fit T={t_len} with window {window}"
            )))
        }
    }
}

impl fmt::Display for ChangeType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ChangeType::Point { .. } => f.write_str("point"),
            ChangeType::Interval { .. } => f.write_str("interval"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioSpec {
    pub name: String,
    pub f0: DcsbmModel,
    pub f1: DcsbmModel,
    pub change: ChangeType,
    pub t_len: usize,
    /// 0-based indices of the vertices whose behaviour changes.
    pub changed: Vec<usize>,
}

impl ScenarioSpec {
    pub fn new(
        name: impl Into<String>,
        f0: DcsbmModel,
        f1: DcsbmModel,
        change: ChangeType,
        t_len: usize,
        changed: Vec<usize>,
    ) -> Result<Self> {
        if f0.n() != f1.n() {
            return Err(CdpError::InvalidConfig(format!(
                "models disagree on vertex count: {} vs {}",
                f0.n(),
                f1.n()
            )));
        }
        if f0.n() < 2 {
            return Err(CdpError::TooFewVertices { n: f0.n(), min: 2 });
        }
        if let Some(&bad) = changed.iter().find(|&&v| v >= f0.n()) {
            return Err(CdpError::InvalidConfig(format!("changed vertex {bad} out of range")));
        }
        change.validate(t_len, 0)?;
        Ok(Self {
            name: name.into(),
            f0,
            f1,
            change,
            t_len,
            changed,
        })
    }

    /// One of the nine reference scenarios.
    pub fn catalog(
        scenario: Scenario,
        change: ChangeType,
        t_len: usize,
        scale: Option<f64>,
    ) -> Result<Self> {
        let (m0, m1) = scenario.models();
        let f0 = catalog(m0, scale)?;
        let f1 = catalog(m1, scale)?;
        let reference = catalog(ModelName::M1, scale)?;
        let starts = reference.block_starts();
        let thirds = scenario.changed_thirds();
        let changed = (starts[thirds.start]..starts[thirds.end]).collect();
        Self::new(scenario.as_str(), f0, f1, change, t_len, changed)
    }

    pub fn n(&self) -> usize {
        self.f0.n()
    }

    pub fn model_at(&self, t: usize) -> &DcsbmModel {
        if self.change.is_changed(t) {
            &self.f1
        } else {
            &self.f0
        }
    }

    /// Complement of `changed`.
    pub fn unchanged(&self) -> Vec<usize> {
        let mut mask = vec![false; self.n()];
        for &v in &self.changed {
            mask[v] = true;
        }
        (0..self.n()).filter(|&v| !mask[v]).collect()
    }
}

/// Whether degree parameters are redrawn for every snapshot.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ThetaMode {
    #[default]
    Redraw,
    /// One draw per model, reused for every snapshot of that model.
    Frozen,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub scenario: String,
    pub n: usize,
    pub t_len: usize,
    pub change: ChangeType,
    pub changed: Vec<usize>,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SimulatedSequence {
    pub snapshots: Vec<Snapshot>,
    pub truth: GroundTruth,
}

/// Draws `spec.t_len` snapshots. Snapshot `t` uses a generator derived from
/// `(seed, t)`, so the sequence does not depend on evaluation order.
pub fn generate_sequence(spec: &ScenarioSpec, seed: u64, mode: ThetaMode) -> Result<SimulatedSequence> {
    let frozen = match mode {
        ThetaMode::Frozen => Some((
            sample_theta(&spec.f0, &mut seed::rng(seed, &[0, 0]))?,
            sample_theta(&spec.f1, &mut seed::rng(seed, &[0, 1]))?,
        )),
        ThetaMode::Redraw => None,
    };
    let snapshots = (1..=spec.t_len)
        .map(|t| {
            let changed = spec.change.is_changed(t);
            let model = spec.model_at(t);
            let mut rng = seed::rng(seed, &[t as u64]);
            let theta = match &frozen {
                Some((a, b)) => if changed { b.clone() } else { a.clone() },
                None => sample_theta(model, &mut rng)?,
            };
            sample_snapshot(model, &theta, t, &mut rng)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(SimulatedSequence {
        snapshots,
        truth: GroundTruth {
            scenario: spec.name.clone(),
            n: spec.n(),
            t_len: spec.t_len,
            change: spec.change,
            changed: spec.changed.clone(),
            seed,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn m1_block_matrix_and_psi() {
        let m1 = catalog(ModelName::M1, None).unwrap();
        let b = block_matrix(&m1).unwrap();
        assert_close!(b[(0, 0)], 0.8 * 0.01 + 0.2 * 0.0025, 1e-15);
        assert_close!(b[(0, 0)], 0.0085, 1e-15);
        assert_close!(b[(0, 1)], 0.0005, 1e-15);
        let p = psi(&m1).unwrap();
        assert_close!(p[(0, 1)], 45.0, 1e-10);
    }

    #[test]
    fn m4_psi() {
        let m4 = catalog(ModelName::M4, None).unwrap();
        assert_eq!(m4.sizes, vec![150, 450, 300]);
        assert_close!(psi(&m4).unwrap()[(0, 0)], 191.25, 1e-10);
    }

    #[test]
    fn lambda_extremes() {
        let mut m = catalog(ModelName::M1, None).unwrap();
        m.lambda = 0.0;
        assert!(block_matrix(&m).unwrap().iter().all(|&b| (b - NU).abs() < 1e-18));
        m.lambda = 1.0;
        assert_eq!(block_matrix(&m).unwrap(), m.planted);
    }

    #[test]
    fn invalid_probability() {
        let mut m = catalog(ModelName::M1, None).unwrap();
        m.planted[(0, 0)] = 2.0;
        assert!(matches!(block_matrix(&m), Err(CdpError::InvalidProbability { .. })));
    }

    #[test]
    fn empty_block_has_zero_psi() {
        let mut m = catalog(ModelName::M1, None).unwrap();
        m.sizes[1] = 0;
        let p = psi(&m).unwrap();
        assert!(p.row(1).iter().all(|&x| x == 0.0));
        assert!(p.column(1).iter().all(|&x| x == 0.0));
    }

    #[test]
    fn catalog_entries() {
        let m1 = catalog(ModelName::M1, None).unwrap();
        assert_eq!(m1.k(), 3);
        assert_eq!(m1.sizes, vec![300, 300, 300]);
        assert_eq!(m1.planted.diagonal().as_slice(), &[0.01, 0.02, 0.03]);
        let m3 = catalog(ModelName::M3, None).unwrap();
        assert_close!(m3.planted[(2, 2)], 0.003, 1e-15);
        let m2 = catalog(ModelName::M2, None).unwrap();
        assert_eq!(m2.sizes, vec![150, 150, 300, 300]);
        let m6 = catalog(ModelName::M6, None).unwrap();
        assert_close!(m6.planted[(1, 1)], 0.015, 1e-15);
        assert_eq!(m6.planted[(0, 1)], 0.005);
        let scaled = catalog(ModelName::M1, Some(1.0 / 3.0)).unwrap();
        assert_eq!(scaled.sizes, vec![100, 100, 100]);
        assert!("M7".parse::<ModelName>().is_err());
    }

    #[test]
    fn constant_theta_is_uniform() {
        let m5 = catalog(ModelName::M5, None).unwrap();
        let theta = sample_theta(&m5, &mut seed::rng(1, &[])).unwrap();
        assert!(theta[..300].iter().all(|&x| x == 1.0 / 300.0));
    }

    #[test]
    fn power_law_theta_sums_to_one_per_block() {
        let m = catalog(ModelName::M2, None).unwrap();
        let theta = sample_theta(&m, &mut seed::rng(2, &[])).unwrap();
        let starts = m.block_starts();
        for r in 0..m.k() {
            let s: f64 = theta[starts[r]..starts[r + 1]].iter().sum();
            assert_close!(s, 1.0, 1e-12);
        }
    }

    #[test]
    fn bad_shape_rejected() {
        let mut m = catalog(ModelName::M1, None).unwrap();
        m.theta_laws[0] = ThetaLaw::PowerLaw { theta_min: 1.0, shape: 1.0 };
        assert!(matches!(
            sample_theta(&m, &mut seed::rng(0, &[])),
            Err(CdpError::InvalidShape(_))
        ));
    }

    #[test]
    fn zero_theta_gives_empty_graph() {
        let m = catalog(ModelName::M1, Some(0.01)).unwrap();
        let s = sample_snapshot(&m, &vec![0.0; m.n()], 1, &mut seed::rng(0, &[])).unwrap();
        assert!(s.is_empty());
    }

    #[test]
    fn snapshot_is_symmetric_with_zero_diagonal() {
        let m = catalog(ModelName::M1, Some(0.1)).unwrap();
        let mut rng = seed::rng(5, &[]);
        let theta = sample_theta(&m, &mut rng).unwrap();
        let s = sample_snapshot(&m, &theta, 1, &mut rng).unwrap();
        let w = s.weights();
        assert_eq!(w, &w.transpose());
        assert!(w.diagonal().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn scenario_catalog() {
        let spec = ScenarioSpec::catalog(
            Scenario::GroupChange,
            ChangeType::default_point(),
            SEQUENCE_LENGTH,
            None,
        )
        .unwrap();
        assert_eq!(spec.f0, catalog(ModelName::M1, None).unwrap());
        assert_eq!(spec.f1, catalog(ModelName::M4, None).unwrap());
        assert_eq!(spec.changed, (0..600).collect::<Vec<_>>());
        assert_eq!(spec.unchanged(), (600..900).collect::<Vec<_>>());

        let form = ScenarioSpec::catalog(Scenario::Form, ChangeType::default_point(), 30, None).unwrap();
        assert_eq!(form.changed, (600..900).collect::<Vec<_>>());

        for sc in Scenario::ALL {
            let spec = ScenarioSpec::catalog(sc, ChangeType::default_point(), 30, None).unwrap();
            assert_eq!(spec.f0.n(), spec.f1.n());
            assert_eq!(spec.f0.lambda, spec.f1.lambda);
            assert_eq!(spec.f0.nu, spec.f1.nu);
            assert_eq!(sc.as_str().parse::<Scenario>().unwrap(), sc);
        }
        assert!(matches!("melt".parse::<Scenario>(), Err(CdpError::UnknownScenario(_))));
    }

    #[test]
    fn change_types_select_models() {
        let p = ChangeType::default_point();
        let changed: Vec<_> = (1..=30).filter(|&t| p.is_changed(t)).collect();
        assert_eq!(changed, vec![21]);
        let i = ChangeType::default_interval();
        let changed: Vec<_> = (1..=30).filter(|&t| i.is_changed(t)).collect();
        assert_eq!(changed, (21..=30).collect::<Vec<_>>());
        assert!(ChangeType::Point { t_star: 5 }.validate(30, 5).is_err());
        assert!(ChangeType::Interval { start: 21, end: 21 }.validate(30, 5).is_err());
    }

    #[test]
    fn generate_uses_changed_model_at_the_right_times() {
        let spec = ScenarioSpec::catalog(
            Scenario::GroupChange,
            ChangeType::Point { t_star: 3 },
            4,
            Some(0.1),
        )
        .unwrap();
        let a = generate_sequence(&spec, 9, ThetaMode::Redraw).unwrap();
        let b = generate_sequence(&spec, 9, ThetaMode::Redraw).unwrap();
        assert_eq!(a.snapshots, b.snapshots);
        assert_eq!(a.snapshots.len(), 4);
        assert_eq!(a.snapshots.iter().map(|s| s.t()).collect::<Vec<_>>(), vec![1, 2, 3, 4]);
        assert_eq!(a.truth.changed, (0..60).collect::<Vec<_>>());
        assert!(std::ptr::eq(spec.model_at(3), &spec.f1));
        assert!(std::ptr::eq(spec.model_at(4), &spec.f0));
    }
}
