//! Generalized orthogonal Procrustes alignment of embeddings and the
//! per-vertex change score built on it.

use nalgebra::DMatrix;

use crate::error::{CdpError, Result};
use crate::spectral::Embedding;

const DEGENERATE_NORM: f64 = 1e-14;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GpaOptions {
    /// Stop once `||mu_prev - mu||_F^2` is at or below this.
    pub threshold: f64,
    pub max_iter: usize,
}

impl Default for GpaOptions {
    fn default() -> Self {
        Self {
            threshold: 1e-10,
            max_iter: 100,
        }
    }
}

/// Centers the columns of `x` and scales the result to unit Frobenius norm.
pub fn pre_shape(x: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let mut centered = x.clone();
    for mut col in centered.column_iter_mut() {
        let mean = col.mean();
        col.add_scalar_mut(-mean);
    }
    let norm = centered.norm();
    if !(norm >= DEGENERATE_NORM) {
        return Err(CdpError::DegenerateShape);
    }
    Ok(centered / norm)
}

/// Orthogonal `G` minimizing `||shape * G - target||_F`: with
/// `target^T shape = U S V^T`, `G = V U^T`.
pub fn optimal_rotation(target: &DMatrix<f64>, shape: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    same_shape(target, shape)?;
    let cross = target.transpose() * shape;
    let svd = cross.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => unreachable!("SVD requested with both factors"),
    };
    Ok(v_t.transpose() * u.transpose())
}

fn same_shape(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<()> {
    if a.shape() != b.shape() {
        return Err(CdpError::ShapeMismatch {
            expected: format!("{:?}", a.shape()),
            found: format!("{:?}", b.shape()),
        });
    }
    Ok(())
}

#[derive(Debug, Clone)]
pub struct AlignmentResult {
    pub mean: DMatrix<f64>,
    pub aligned: Vec<DMatrix<f64>>,
    pub rotations: Vec<DMatrix<f64>>,
    pub iterations: usize,
    pub final_d: f64,
    pub converged: bool,
    /// `sum_i ||aligned_i - mean||_F^2` after each pass.
    pub objective_trace: Vec<f64>,
}

/// Iterative generalized Procrustes alignment.
///
/// The running mean starts as the first input matrix as given (not its
/// pre-shape); every pass rotates each pre-shape onto the running mean,
/// averages, and stops once the mean moves by at most `opts.threshold` in
/// squared Frobenius norm. Hitting `max_iter` is reported through
/// `converged`, not as an error.
pub fn gpa_align(matrices: &[DMatrix<f64>], opts: GpaOptions) -> Result<AlignmentResult> {
    let first = matrices
        .first()
        .ok_or_else(|| CdpError::InvalidConfig("alignment needs at least one matrix".into()))?;
    for m in &matrices[1..] {
        same_shape(first, m)?;
    }
    let shapes = matrices.iter().map(pre_shape).collect::<Result<Vec<_>>>()?;
    let w = shapes.len() as f64;

    let mut reference = first.clone();
    let mut aligned = shapes.clone();
    let mut rotations = Vec::new();
    let mut objective_trace = Vec::new();
    let mut final_d = f64::INFINITY;
    let mut iterations = 0;

    while final_d > opts.threshold && iterations < opts.max_iter {
        rotations = shapes
            .iter()
            .map(|s| optimal_rotation(&reference, s))
            .collect::<Result<Vec<_>>>()?;
        aligned = shapes.iter().zip(&rotations).map(|(s, g)| s * g).collect();

        let mut mean = DMatrix::zeros(first.nrows(), first.ncols());
        for a in &aligned {
            mean += a;
        }
        mean /= w;

        final_d = (&reference - &mean).norm_squared();
        objective_trace.push(aligned.iter().map(|a| (a - &mean).norm_squared()).sum());
        reference = mean;
        iterations += 1;
    }

    Ok(AlignmentResult {
        mean: reference,
        aligned,
        rotations,
        iterations,
        final_d,
        converged: final_d <= opts.threshold,
        objective_trace,
    })
}

/// Appends zero columns up to `d_max`.
pub fn pad_to_dim(x: &DMatrix<f64>, d_max: usize) -> Result<DMatrix<f64>> {
    let d = x.ncols();
    if d > d_max {
        return Err(CdpError::DimensionError { d, d_max });
    }
    Ok(x.clone().resize_horizontally(d_max, 0.0))
}

/// GPA mean of a window of embeddings, padded to the largest dimension in
/// the window. A single-element window yields that embedding's pre-shape.
pub fn profile_embedding(window: &[Embedding], opts: GpaOptions) -> Result<Embedding> {
    let last = window
        .last()
        .ok_or_else(|| CdpError::InvalidConfig("profile window is empty".into()))?;
    if window.len() == 1 {
        return Ok(Embedding::new(last.t, pre_shape(&last.x)?));
    }
    let d_max = window.iter().map(Embedding::d).max().unwrap_or(0);
    let padded = window
        .iter()
        .map(|e| pad_to_dim(&e.x, d_max))
        .collect::<Result<Vec<_>>>()?;
    let result = gpa_align(&padded, opts)?;
    Ok(Embedding::new(last.t, result.mean))
}

/// Change scores of one time instant.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreVector {
    pub z: Vec<f64>,
    pub t: usize,
}

/// Aligns `current` and `profile` with each other and scores vertex `i` by
/// `||current_i - profile_i||^2 / ||mean||_F` on the aligned rows.
pub fn change_scores(
    current: &Embedding,
    profile: &Embedding,
    opts: GpaOptions,
) -> Result<ScoreVector> {
    if current.n() != profile.n() {
        return Err(CdpError::ShapeMismatch {
            expected: format!("{} rows", profile.n()),
            found: format!("{} rows", current.n()),
        });
    }
    let d_max = current.d().max(profile.d());
    let pair = [pad_to_dim(&current.x, d_max)?, pad_to_dim(&profile.x, d_max)?];
    let aligned = gpa_align(&pair, opts)?;
    let scale = aligned.mean.norm();
    let diff = &aligned.aligned[0] - &aligned.aligned[1];
    let z = diff
        .row_iter()
        .map(|row| row.norm_squared() / scale)
        .collect();
    Ok(ScoreVector { z, t: current.t })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn rotation(angle: f64) -> DMatrix<f64> {
        let (s, c) = angle.sin_cos();
        DMatrix::from_row_slice(2, 2, &[c, -s, s, c])
    }

    fn random(n: usize, d: usize, seed: u64) -> DMatrix<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        DMatrix::from_fn(n, d, |_, _| rng.random::<f64>() - 0.5)
    }

    #[test]
    fn pre_shape_two_points() {
        let x = DMatrix::from_column_slice(2, 1, &[1.0, 3.0]);
        let p = pre_shape(&x).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_close!(p[(0, 0)], -h, 1e-15);
        assert_close!(p[(1, 0)], h, 1e-15);
        let again = pre_shape(&p).unwrap();
        assert!((again - &p).amax() < 1e-15);
    }

    #[test]
    fn pre_shape_rejects_constant_columns() {
        let x = DMatrix::from_element(4, 2, 3.0);
        assert!(matches!(pre_shape(&x), Err(CdpError::DegenerateShape)));
    }

    #[test]
    fn rotation_undoes_planar_rotation() {
        let mu = pre_shape(&DMatrix::from_row_slice(3, 2, &[1.0, 0.0, 0.0, 2.0, -1.0, 0.5])).unwrap();
        let r = rotation(std::f64::consts::FRAC_PI_2);
        let shape = &mu * &r;
        let g = optimal_rotation(&mu, &shape).unwrap();
        assert!((&g - rotation(-std::f64::consts::FRAC_PI_2)).amax() < 1e-10);
        assert!((shape * g - &mu).amax() < 1e-10);

        let g = optimal_rotation(&mu, &mu).unwrap();
        assert!((g - DMatrix::identity(2, 2)).amax() < 1e-12);
    }

    #[test]
    fn identical_copies_converge_fast() {
        let x = random(10, 3, 1);
        let res = gpa_align(&[x.clone(), x.clone(), x.clone()], GpaOptions::default()).unwrap();
        assert!(res.converged);
        assert!(res.iterations <= 2, "{} passes", res.iterations);
        let p = pre_shape(&x).unwrap();
        assert!((&res.mean - &p).amax() < 1e-10);
        for a in &res.aligned {
            assert!((a - &res.aligned[0]).amax() < 1e-10);
        }
    }

    #[test]
    fn rotations_are_orthogonal_and_mean_is_average() {
        let mats: Vec<_> = (0..4).map(|s| random(12, 3, s)).collect();
        let res = gpa_align(&mats, GpaOptions::default()).unwrap();
        for g in &res.rotations {
            assert!((g.transpose() * g - DMatrix::identity(3, 3)).amax() < 1e-8);
        }
        let mut avg = DMatrix::zeros(12, 3);
        for a in &res.aligned {
            avg += a;
        }
        avg /= 4.0;
        assert!((avg - &res.mean).amax() < 1e-10);
    }

    #[test]
    fn padding() {
        let x = random(3, 2, 0);
        let p = pad_to_dim(&x, 4).unwrap();
        assert_eq!(p.shape(), (3, 4));
        assert_eq!(p.columns(0, 2), x.columns(0, 2));
        assert!(p.columns(2, 2).iter().all(|&v| v == 0.0));
        assert_eq!(pad_to_dim(&x, 2).unwrap(), x);
        assert!(matches!(pad_to_dim(&x, 1), Err(CdpError::DimensionError { d: 2, d_max: 1 })));
    }

    #[test]
    fn single_window_profile_is_pre_shape() {
        let e = Embedding::new(4, random(6, 2, 9));
        let p = profile_embedding(std::slice::from_ref(&e), GpaOptions::default()).unwrap();
        assert_eq!(p.x, pre_shape(&e.x).unwrap());
        assert_eq!(p.t, 4);
    }

    #[test]
    fn profile_pads_mixed_dimensions() {
        let a = Embedding::new(1, random(8, 2, 1));
        let b = Embedding::new(2, random(8, 3, 2));
        let p = profile_embedding(&[a, b], GpaOptions::default()).unwrap();
        assert_eq!(p.d(), 3);
    }

    #[test]
    fn identical_profile_scores_zero() {
        let e = Embedding::new(2, random(15, 2, 3));
        let z = change_scores(&e, &e, GpaOptions::default()).unwrap();
        assert!(z.z.iter().all(|&v| v.abs() < 1e-10));
    }

    #[test]
    fn perturbed_row_has_the_top_score() {
        let profile = random(20, 2, 4);
        let mut current = profile.clone();
        let row_norm = current.row(7).norm();
        current[(7, 0)] += 10.0 * row_norm;
        current[(7, 1)] -= 10.0 * row_norm;
        let z = change_scores(
            &Embedding::new(1, current),
            &Embedding::new(0, profile),
            GpaOptions::default(),
        )
        .unwrap();
        let argmax = z
            .z
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .unwrap()
            .0;
        assert_eq!(argmax, 7);
    }

    #[test]
    fn mismatched_rows_rejected() {
        let a = Embedding::new(0, random(5, 2, 0));
        let b = Embedding::new(0, random(6, 2, 0));
        assert!(matches!(
            change_scores(&a, &b, GpaOptions::default()),
            Err(CdpError::ShapeMismatch { .. })
        ));
    }
}
