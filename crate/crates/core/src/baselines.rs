//! Activity-vector baselines.
//!
//! Each snapshot is summarized by its principal eigenvector (eigenvector
//! centrality). ACT compares the current activity vector with the leading
//! left singular vector of the window of past activity vectors; ACTM
//! compares it with its orthogonal projection onto the whole window span.

use nalgebra::{DMatrix, DVector};

use crate::error::{CdpError, Result};
use crate::graph::{log_transform, max_scale, Snapshot};
use crate::procrustes::ScoreVector;
use crate::spectral::RANK_TOL;

/// Which matrix the activity vector is computed from.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum ActivitySource {
    /// The adjacency matrix as observed.
    #[default]
    Raw,
    /// The log-transformed, max-scaled adjacency matrix.
    Scaled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ActivityVector {
    pub u: DVector<f64>,
    pub t: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ProfileVector {
    pub r: DVector<f64>,
    pub basis_rank: usize,
}

/// Unit principal eigenvector of the snapshot, signed so its entries sum to
/// a nonnegative value.
pub fn activity(snapshot: &Snapshot, source: ActivitySource) -> Result<ActivityVector> {
    if snapshot.is_empty() {
        return Err(CdpError::EmptyGraph);
    }
    let w = match source {
        ActivitySource::Raw => snapshot.weights().clone(),
        ActivitySource::Scaled => max_scale(&log_transform(snapshot.weights())?)?,
    };
    let eig = w.symmetric_eigen();
    let top = eig.eigenvalues.imax();
    let mut u = eig.eigenvectors.column(top).into_owned();
    u.normalize_mut();
    if u.sum() < 0.0 {
        u.neg_mut();
    }
    Ok(ActivityVector { u, t: snapshot.t() })
}

/// Left singular vectors of the `n x w` window matrix with nonzero singular
/// value, strongest first.
fn window_basis(window: &[ActivityVector]) -> Result<Vec<DVector<f64>>> {
    let first = window
        .first()
        .ok_or_else(|| CdpError::InvalidConfig("activity window is empty".into()))?;
    let n = first.u.len();
    if let Some(bad) = window.iter().find(|a| a.u.len() != n) {
        return Err(CdpError::ShapeMismatch {
            expected: format!("length {n}"),
            found: format!("length {}", bad.u.len()),
        });
    }
    let columns: Vec<_> = window.iter().rev().map(|a| a.u.clone()).collect();
    let matrix = DMatrix::from_columns(&columns);
    let svd = matrix.svd(true, false);
    let u = svd.u.expect("left singular vectors requested");

    let mut order: Vec<usize> = (0..svd.singular_values.len()).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    let top = svd.singular_values[order[0]];
    Ok(order
        .into_iter()
        .filter(|&j| top > 0.0 && svd.singular_values[j] > RANK_TOL * top)
        .map(|j| u.column(j).into_owned())
        .collect())
}

fn check_current(window: &[ActivityVector], current: &ActivityVector) -> Result<()> {
    if let Some(first) = window.first() {
        if first.u.len() != current.u.len() {
            return Err(CdpError::ShapeMismatch {
                expected: format!("length {}", first.u.len()),
                found: format!("length {}", current.u.len()),
            });
        }
    }
    Ok(())
}

/// Leading left singular vector of the window, signed to agree with `current`.
pub fn act_profile(window: &[ActivityVector], current: &ActivityVector) -> Result<ProfileVector> {
    check_current(window, current)?;
    let basis = window_basis(window)?;
    let mut r = basis
        .first()
        .cloned()
        .unwrap_or_else(|| DVector::zeros(current.u.len()));
    if r.dot(&current.u) < 0.0 {
        r.neg_mut();
    }
    Ok(ProfileVector { r, basis_rank: basis.len() })
}

/// Orthogonal projection of `current` onto the span of the window.
pub fn actm_profile(window: &[ActivityVector], current: &ActivityVector) -> Result<ProfileVector> {
    check_current(window, current)?;
    let basis = window_basis(window)?;
    let mut r = DVector::zeros(current.u.len());
    for b in &basis {
        r.axpy(b.dot(&current.u), b, 1.0);
    }
    Ok(ProfileVector { r, basis_rank: basis.len() })
}

fn abs_diff(profile: &ProfileVector, current: &ActivityVector) -> ScoreVector {
    ScoreVector {
        z: profile
            .r
            .iter()
            .zip(current.u.iter())
            .map(|(r, u)| (r - u).abs())
            .collect(),
        t: current.t,
    }
}

/// `z_i = |r_i - u_i|` against the leading window direction.
pub fn act_scores(window: &[ActivityVector], current: &ActivityVector) -> Result<ScoreVector> {
    Ok(abs_diff(&act_profile(window, current)?, current))
}

/// `z_i = |rbar_i - u_i|` against the projection onto the window span.
pub fn actm_scores(window: &[ActivityVector], current: &ActivityVector) -> Result<ScoreVector> {
    Ok(abs_diff(&actm_profile(window, current)?, current))
}
