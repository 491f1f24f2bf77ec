use nalgebra::{DMatrix, DVector};

use super::chi2::chi2_quantile;
use super::covariates::CovariateMatrix;
use crate::error::{Error, Result};

/// Smallest soft group size accepted by the soft Mahalanobis distance.
pub const SOFT_GROUP_FLOOR: f64 = 1e-6;

/// Reciprocal condition number below which the covariance is rejected.
const RCOND_FLOOR: f64 = 1e-12;

/// Binary treatment vector; `true` is treatment.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Assignment {
    z: Vec<bool>,
}

impl Assignment {
    pub fn new(z: Vec<bool>) -> Self {
        Self { z }
    }

    pub fn from_treated(n: usize, treated: impl IntoIterator<Item = usize>) -> Self {
        let mut z = vec![false; n];
        for i in treated {
            z[i] = true;
        }
        Self { z }
    }

    pub fn len(&self) -> usize {
        self.z.len()
    }

    pub fn is_empty(&self) -> bool {
        self.z.is_empty()
    }

    pub fn n_treated(&self) -> usize {
        self.z.iter().filter(|&&t| t).count()
    }

    pub fn is_treated(&self, i: usize) -> bool {
        self.z[i]
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.z
    }

    pub fn treated(&self) -> impl Iterator<Item = usize> + '_ {
        self.z.iter().enumerate().filter(|(_, &t)| t).map(|(i, _)| i)
    }

    pub fn weights(&self) -> Vec<f64> {
        self.z.iter().map(|&t| if t { 1.0 } else { 0.0 }).collect()
    }

    pub fn complement(&self) -> Self {
        Self {
            z: self.z.iter().map(|t| !t).collect(),
        }
    }

    pub(crate) fn swap(&mut self, treated: usize, control: usize) {
        debug_assert!(self.z[treated] && !self.z[control]);
        self.z[treated] = false;
        self.z[control] = true;
    }
}

/// Immutable experiment frame shared by every sampler and test.
#[derive(Debug, Clone)]
pub struct DesignContext {
    covariates: CovariateMatrix,
    n1: usize,
    n0: usize,
    sample_cov: DMatrix<f64>,
    sigma_inv: DMatrix<f64>,
    threshold_a: f64,
    p_accept: f64,
}

impl DesignContext {
    /// Builds the frame for `n1` treated units with acceptance probability
    /// `p_accept`; the threshold is the `p_accept` quantile of chi-squared
    /// with `d` degrees of freedom.
    pub fn build(covariates: CovariateMatrix, n1: usize, p_accept: f64) -> Result<Self> {
        let (n, d) = (covariates.n(), covariates.d());
        if n1 == 0 || n1 >= n {
            return Err(Error::InvalidInput(format!(
                "treated count must satisfy 0 < n1 < n (n1 = {n1}, n = {n})"
            )));
        }
        if n <= d {
            return Err(Error::InvalidInput(format!(
                "need more units than covariates (n = {n}, d = {d})"
            )));
        }
        if !(p_accept > 0.0 && p_accept < 1.0) {
            return Err(Error::InvalidInput(format!(
                "acceptance probability must be in (0, 1), got {p_accept}"
            )));
        }
        let n0 = n - n1;
        let sample_cov = covariates.sample_covariance();
        let scale = n as f64 / (n1 as f64 * n0 as f64);
        let sigma = &sample_cov * scale;

        check_conditioning(&sample_cov)?;
        let chol = sigma.clone().cholesky().ok_or_else(|| {
            Error::Singular("Cholesky factorization failed; covariance is not positive definite".into())
        })?;
        let mut sigma_inv = chol.inverse();
        let t = sigma_inv.transpose();
        sigma_inv += t;
        sigma_inv *= 0.5;

        let threshold_a = chi2_quantile(p_accept, d)?;
        Ok(Self {
            covariates,
            n1,
            n0,
            sample_cov,
            sigma_inv,
            threshold_a,
            p_accept,
        })
    }

    pub fn covariates(&self) -> &CovariateMatrix {
        &self.covariates
    }

    pub fn x(&self) -> &DMatrix<f64> {
        self.covariates.values()
    }

    pub fn n(&self) -> usize {
        self.n1 + self.n0
    }

    pub fn d(&self) -> usize {
        self.covariates.d()
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n0(&self) -> usize {
        self.n0
    }

    pub fn sample_cov(&self) -> &DMatrix<f64> {
        &self.sample_cov
    }

    /// `(n / (n1 n0)) * S^2_X`, the covariance of the mean difference under
    /// complete randomization.
    pub fn sigma(&self) -> DMatrix<f64> {
        &self.sample_cov * (self.n() as f64 / (self.n1 as f64 * self.n0 as f64))
    }

    pub fn sigma_inv(&self) -> &DMatrix<f64> {
        &self.sigma_inv
    }

    pub fn threshold_a(&self) -> f64 {
        self.threshold_a
    }

    pub fn p_accept(&self) -> f64 {
        self.p_accept
    }

    pub fn validate(&self, z: &Assignment) -> Result<()> {
        if z.len() != self.n() {
            return Err(Error::InvalidInput(format!(
                "assignment has length {}, expected {}",
                z.len(),
                self.n()
            )));
        }
        let treated = z.n_treated();
        if treated != self.n1 {
            return Err(Error::InvalidInput(format!(
                "assignment treats {treated} units, expected {}",
                self.n1
            )));
        }
        Ok(())
    }

    /// Weighted mean difference `X'w / n_w1 - X'(1-w) / n_w0` for weights in
    /// `[0, 1]`, with `n_w1 = sum(w)` and `n_w0 = n - n_w1`.
    pub fn mean_difference(&self, w: &[f64]) -> Result<DVector<f64>> {
        let (n1w, n0w) = self.soft_group_sizes(w)?;
        let coef = DVector::from_iterator(
            w.len(),
            w.iter().map(|&wi| wi / n1w - (1.0 - wi) / n0w),
        );
        Ok(self.x().tr_mul(&coef))
    }

    pub(crate) fn soft_group_sizes(&self, w: &[f64]) -> Result<(f64, f64)> {
        assert_eq!(w.len(), self.n(), "weight vector length must equal n");
        let n1w: f64 = w.iter().sum();
        let n0w = self.n() as f64 - n1w;
        if !(n1w >= SOFT_GROUP_FLOOR && n0w >= SOFT_GROUP_FLOOR) {
            return Err(Error::DegenerateGroups {
                treated: n1w,
                control: n0w,
            });
        }
        Ok((n1w, n0w))
    }

    /// `delta' Sigma^{-1} delta`, clamped at zero against rounding.
    pub fn quadratic_form(&self, delta: &DVector<f64>) -> f64 {
        let v = &self.sigma_inv * delta;
        delta.dot(&v).max(0.0)
    }

    /// Mahalanobis distance for hard or soft assignments. Soft weights keep
    /// the hard-assignment `Sigma^{-1}` computed at build time.
    pub fn mahalanobis(&self, w: &[f64]) -> Result<f64> {
        let delta = self.mean_difference(w)?;
        Ok(self.quadratic_form(&delta))
    }

    /// Mahalanobis distance of a binary assignment. Panics if the length is
    /// not `n` or one arm is empty.
    pub fn assignment_mahalanobis(&self, z: &Assignment) -> f64 {
        assert_eq!(z.len(), self.n(), "assignment length must equal n");
        let n1 = z.n_treated();
        assert!(n1 > 0 && n1 < z.len(), "both arms must be non-empty");
        let (inv1, inv0) = (1.0 / n1 as f64, 1.0 / (z.len() - n1) as f64);
        let coef = DVector::from_iterator(
            z.len(),
            z.as_slice().iter().map(|&t| if t { inv1 } else { -inv0 }),
        );
        self.quadratic_form(&self.x().tr_mul(&coef))
    }

    pub fn is_balanced(&self, z: &Assignment) -> bool {
        self.assignment_mahalanobis(z) <= self.threshold_a
    }
}

fn check_conditioning(cov: &DMatrix<f64>) -> Result<()> {
    let d = cov.nrows();
    let diag_max = (0..d).map(|j| cov[(j, j)]).fold(0.0f64, f64::max);
    let constant: Vec<usize> = (0..d)
        .filter(|&j| cov[(j, j)] <= RCOND_FLOOR * diag_max.max(f64::MIN_POSITIVE))
        .collect();
    if !constant.is_empty() {
        return Err(Error::Singular(format!(
            "covariate column(s) {constant:?} are constant; drop them and retry"
        )));
    }

    let eig = cov.clone().symmetric_eigen();
    let (mut imin, mut lmin, mut lmax) = (0, f64::INFINITY, f64::NEG_INFINITY);
    for (i, &l) in eig.eigenvalues.iter().enumerate() {
        if l < lmin {
            lmin = l;
            imin = i;
        }
        lmax = lmax.max(l);
    }
    if lmax.is_nan() || lmax <= 0.0 || lmin / lmax < RCOND_FLOOR {
        let v = eig.eigenvectors.column(imin);
        let vmax = v.amax();
        let involved: Vec<usize> = (0..d).filter(|&j| v[j].abs() > 0.05 * vmax).collect();
        return Err(Error::Singular(format!(
            "covariate columns {involved:?} are collinear (reciprocal condition number {:.2e}); \
             drop a linearly dependent column and retry",
            (lmin / lmax).max(0.0)
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn small_x() -> CovariateMatrix {
        CovariateMatrix::from_rows(&[
            vec![1.0, 2.0],
            vec![-1.0, 0.0],
            vec![2.0, -1.0],
            vec![0.0, 1.0],
            vec![-2.0, 2.0],
            vec![1.0, -2.0],
        ])
        .unwrap()
    }

    #[test]
    fn one_covariate_inverse_by_hand() {
        let x = CovariateMatrix::from_rows(&[vec![1.0], vec![-1.0], vec![1.0], vec![-1.0]]).unwrap();
        let ctx = DesignContext::build(x, 2, 0.01).unwrap();
        assert_relative_eq!(ctx.sample_cov()[(0, 0)], 4.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(ctx.sigma_inv()[(0, 0)], 0.75, epsilon = 1e-14);
    }

    #[test]
    fn inverse_identity() {
        let ctx = DesignContext::build(small_x(), 3, 0.1).unwrap();
        let prod = ctx.sigma_inv() * ctx.sigma();
        let eye = DMatrix::<f64>::identity(2, 2);
        assert!((prod - eye).amax() < 1e-8);
    }

    #[test]
    fn duplicated_column_is_singular() {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, i as f64, (i * i) as f64]).collect();
        let x = CovariateMatrix::from_rows(&rows).unwrap();
        match DesignContext::build(x, 4, 0.01) {
            Err(Error::Singular(msg)) => {
                assert!(msg.contains("collinear"), "{msg}");
                assert!(msg.contains("[0, 1]"), "{msg}");
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn constant_column_is_singular() {
        let rows: Vec<Vec<f64>> = (0..8).map(|i| vec![i as f64, 3.0]).collect();
        let x = CovariateMatrix::from_rows(&rows).unwrap();
        match DesignContext::build(x, 4, 0.01) {
            Err(Error::Singular(msg)) => assert!(msg.contains("[1]"), "{msg}"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_bad_arm_sizes() {
        assert!(DesignContext::build(small_x(), 0, 0.1).is_err());
        assert!(DesignContext::build(small_x(), 6, 0.1).is_err());
        assert!(DesignContext::build(small_x(), 3, 1.0).is_err());
        let wide = CovariateMatrix::from_rows(&vec![vec![0.0, 1.0, 2.0, 3.0]; 4]).unwrap();
        assert!(DesignContext::build(wide, 2, 0.1).is_err());
    }

    #[test]
    fn zero_for_mirrored_pairs() {
        // Rows i and n-1-i identical; treat one of each pair.
        let x = CovariateMatrix::from_rows(&[
            vec![1.0, 2.0],
            vec![-1.0, 0.5],
            vec![3.0, -1.0],
            vec![3.0, -1.0],
            vec![-1.0, 0.5],
            vec![1.0, 2.0],
        ])
        .unwrap();
        let ctx = DesignContext::build(x, 3, 0.1).unwrap();
        let z = Assignment::from_treated(6, [0, 1, 2]);
        assert!(ctx.assignment_mahalanobis(&z) < 1e-24);
    }

    #[test]
    fn hard_and_soft_paths_agree() {
        let ctx = DesignContext::build(small_x(), 3, 0.1).unwrap();
        let z = Assignment::from_treated(6, [0, 2, 5]);
        let hard = ctx.assignment_mahalanobis(&z);
        let soft = ctx.mahalanobis(&z.weights()).unwrap();
        assert_relative_eq!(hard, soft, max_relative = 1e-14);
    }

    #[test]
    fn degenerate_soft_groups() {
        let ctx = DesignContext::build(small_x(), 3, 0.1).unwrap();
        assert!(matches!(
            ctx.mahalanobis(&[0.0; 6]),
            Err(Error::DegenerateGroups { .. })
        ));
        assert!(matches!(
            ctx.mahalanobis(&[1.0; 6]),
            Err(Error::DegenerateGroups { .. })
        ));
        assert!(ctx.mahalanobis(&[1e-5; 6]).is_ok());
    }

    #[test]
    fn validate_checks_counts() {
        let ctx = DesignContext::build(small_x(), 3, 0.1).unwrap();
        assert!(ctx.validate(&Assignment::from_treated(6, [0, 1, 2])).is_ok());
        assert!(ctx.validate(&Assignment::from_treated(6, [0, 1])).is_err());
        assert!(ctx.validate(&Assignment::from_treated(5, [0, 1, 2])).is_err());
    }
}
