//! Snapshot orthonormalization in the inner product induced by a fixed
//! reference operator.

use crate::error::{Error, Result};
use crate::numerics::CsrMatrix;

/// Snapshots whose image norm falls below this fraction of its starting
/// value during orthogonalization are dropped as numerically dependent.
const REJECT_REL: f64 = 1e-12;

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Orthonormalizes `snapshots` in the inner product `(u, v) = (M u) · (M v)`
/// by modified Gram-Schmidt with a second projection pass.
///
/// Returns the basis vectors plus the indices of the snapshots that
/// survived; near-dependent snapshots are rejected rather than normalized
/// into noise.  The metric images `M ξ` are carried along and updated by
/// linearity, so `M` is applied once per snapshot.
pub fn orthonormalize(
    snapshots: &[Vec<f64>],
    metric: &CsrMatrix,
) -> Result<(Vec<Vec<f64>>, Vec<usize>)> {
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(snapshots.len());
    let mut images: Vec<Vec<f64>> = Vec::with_capacity(snapshots.len());
    let mut kept = Vec::with_capacity(snapshots.len());

    for (idx, snap) in snapshots.iter().enumerate() {
        let mut v = snap.clone();
        let mut mv = metric.matvec(&v);
        let scale = norm2(&mv);
        if scale == 0.0 {
            continue;
        }
        for _pass in 0..2 {
            for (b, mb) in basis.iter().zip(&images) {
                let proj = dot(&mv, mb);
                for k in 0..v.len() {
                    v[k] -= proj * b[k];
                    mv[k] -= proj * mb[k];
                }
            }
        }
        let remaining = norm2(&mv);
        if remaining <= REJECT_REL * scale {
            continue;
        }
        let inv = 1.0 / remaining;
        for x in &mut v {
            *x *= inv;
        }
        for x in &mut mv {
            *x *= inv;
        }
        basis.push(v);
        images.push(mv);
        kept.push(idx);
    }

    if basis.is_empty() {
        return Err(Error::EmptyBasis);
    }
    Ok((basis, kept))
}
