//! Continuous relaxation of the assignment and the gradients of the soft
//! Mahalanobis distance.

use std::ops::{Deref, DerefMut};

use nalgebra::DVector;

use crate::balance::{Assignment, DesignContext};
use crate::error::{Error, Result};

const EXP_CLAMP: f64 = 500.0;
const ONE_BELOW: f64 = 1.0 - f64::EPSILON / 2.0;

/// Latent scores driving the relaxed assignment.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentState(Vec<f64>);

impl LatentState {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if let Some(i) = theta.iter().position(|t| !t.is_finite()) {
            return Err(Error::InvalidInput(format!("latent score {i} is not finite")));
        }
        Ok(Self(theta))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for LatentState {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

impl DerefMut for LatentState {
    fn deref_mut(&mut self) -> &mut [f64] {
        &mut self.0
    }
}

/// Temperature-scaled logistic map `1 / (1 + exp(-theta / delta))`, kept
/// strictly inside `(0, 1)`.
pub fn soft_assignment(theta: &[f64], delta: f64) -> Vec<f64> {
    let mut out = vec![0.0; theta.len()];
    soft_assignment_into(theta, delta, &mut out);
    out
}

pub(crate) fn soft_assignment_into(theta: &[f64], delta: f64, out: &mut [f64]) {
    debug_assert!(delta > 0.0);
    for (o, &t) in out.iter_mut().zip(theta) {
        let x = (t / delta).clamp(-EXP_CLAMP, EXP_CLAMP);
        let s = 1.0 / (1.0 + (-x).exp());
        *o = s.clamp(f64::MIN_POSITIVE, ONE_BELOW);
    }
}

/// Partial derivatives of the soft Mahalanobis distance with respect to
/// the soft weights:
///
/// `dM/dz_i = g' [ (X_i - m1) / n1 + (X_i - m0) / n0 ]`, `g = 2 Sigma^{-1} delta`,
///
/// where `m1`, `m0` are the soft-weighted arm means and `n1`, `n0` the soft
/// arm sizes.
pub fn grad_soft_mahalanobis(ctx: &DesignContext, ztilde: &[f64]) -> Result<Vec<f64>> {
    let mut out = vec![0.0; ztilde.len()];
    grad_soft_into(ctx, ztilde, &mut out)?;
    Ok(out)
}

pub(crate) fn grad_soft_into(ctx: &DesignContext, ztilde: &[f64], out: &mut [f64]) -> Result<()> {
    let (n1, n0) = ctx.soft_group_sizes(ztilde)?;
    let x = ctx.x();
    let z = DVector::from_column_slice(ztilde);
    let treated_sum = x.tr_mul(&z);
    let total = x.row_sum().transpose();
    let m1 = &treated_sum / n1;
    let m0 = (total - treated_sum) / n0;
    let g = ctx.sigma_inv() * (&m1 - &m0) * 2.0;

    let xg = x * &g;
    let scale = 1.0 / n1 + 1.0 / n0;
    let offset = g.dot(&m1) / n1 + g.dot(&m0) / n0;
    for (o, v) in out.iter_mut().zip(xg.iter()) {
        *o = v * scale - offset;
    }
    Ok(())
}

/// Gradient of the soft Mahalanobis distance with respect to the latent
/// scores: the soft-weight gradient scaled by `z (1 - z) / delta`.
pub fn grad_latent(ctx: &DesignContext, theta: &[f64], delta: f64) -> Result<Vec<f64>> {
    let ztilde = soft_assignment(theta, delta);
    let mut grad = grad_soft_mahalanobis(ctx, &ztilde)?;
    for (g, z) in grad.iter_mut().zip(&ztilde) {
        *g *= z * (1.0 - z) / delta;
    }
    Ok(grad)
}

/// Treats the `n1` units with the largest scores; ties go to the lower index.
pub fn project_top_n1(theta: &[f64], n1: usize) -> Assignment {
    let n = theta.len();
    assert!(n1 >= 1 && n1 < n, "need 1 <= n1 < n");
    let mut idx: Vec<usize> = (0..n).collect();
    idx.select_nth_unstable_by(n1 - 1, |&a, &b| {
        theta[b].total_cmp(&theta[a]).then(a.cmp(&b))
    });
    Assignment::from_treated(n, idx[..n1].iter().copied())
}
