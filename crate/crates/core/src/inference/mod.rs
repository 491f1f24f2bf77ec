//! Difference-in-means estimation and randomization inference conditional
//! on the sampler that produced the assignment.
//!
//! The test statistic is the difference in means computed in the imputed
//! null world. For `H0(tau0)` the p-value counts reference draws whose
//! centered statistic `|T_b - tau0|` strictly exceeds `|tau_hat - tau0|`:
//!
//! `p = (1 + #{b : |T_b - tau0| > |tau_hat - tau0|}) / (B + 1)`.

use std::ops::Deref;

use serde::Serialize;

use crate::balance::{Assignment, DesignContext};
use crate::error::{Error, Result};
use crate::par;
use crate::samplers::Sampler;
use crate::seed;

/// Observed (or imputed) outcomes, one per unit.
#[derive(Debug, Clone, PartialEq)]
pub struct OutcomeVector(Vec<f64>);

impl OutcomeVector {
    pub fn new(y: Vec<f64>) -> Result<Self> {
        if let Some(i) = y.iter().position(|v| !v.is_finite()) {
            return Err(Error::InvalidInput(format!("outcome {i} is not finite")));
        }
        Ok(Self(y))
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl Deref for OutcomeVector {
    type Target = [f64];

    fn deref(&self) -> &[f64] {
        &self.0
    }
}

/// `mean(y | treated) - mean(y | control)`.
pub fn diff_in_means(y: &[f64], z: &Assignment) -> f64 {
    assert_eq!(y.len(), z.len(), "outcome and assignment lengths differ");
    let (mut s1, mut s0, mut n1) = (0.0, 0.0, 0usize);
    for (&yi, &t) in y.iter().zip(z.as_slice()) {
        if t {
            s1 += yi;
            n1 += 1;
        } else {
            s0 += yi;
        }
    }
    let n0 = y.len() - n1;
    s1 / n1 as f64 - s0 / n0 as f64
}

/// Conservative Neyman standard error `sqrt(s1^2 / n1 + s0^2 / n0)`.
pub fn neyman_se(y: &[f64], z: &Assignment) -> f64 {
    let arm = |treated: bool| {
        let v: Vec<f64> = y
            .iter()
            .zip(z.as_slice())
            .filter(|(_, &t)| t == treated)
            .map(|(&yi, _)| yi)
            .collect();
        let k = v.len() as f64;
        let mean = v.iter().sum::<f64>() / k;
        let var = v.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (k - 1.0);
        var / k
    };
    (arm(true) + arm(false)).sqrt()
}

/// Potential outcomes `(Y(0), Y(1))` under the constant-effect null
/// `Y_i(1) - Y_i(0) = tau0`.
pub fn impute_potential_outcomes(
    y: &[f64],
    z: &Assignment,
    tau0: f64,
) -> (OutcomeVector, OutcomeVector) {
    assert_eq!(y.len(), z.len(), "outcome and assignment lengths differ");
    let mut y0 = Vec::with_capacity(y.len());
    let mut y1 = Vec::with_capacity(y.len());
    for (&yi, &t) in y.iter().zip(z.as_slice()) {
        if t {
            y0.push(yi - tau0);
            y1.push(yi);
        } else {
            y0.push(yi);
            y1.push(yi + tau0);
        }
    }
    (OutcomeVector(y0), OutcomeVector(y1))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct FrtResult {
    pub p_value: f64,
    /// Difference in means on the observed data.
    pub observed_stat: f64,
    pub n_reference: usize,
    pub tau_null: f64,
}

/// Draws `b` reference assignments from `sampler`; draw `i` uses the stream
/// derived from `(seed, i)`.
pub fn reference_draws(
    ctx: &DesignContext,
    sampler: &Sampler,
    b: usize,
    seed: u64,
) -> Result<Vec<Assignment>> {
    par::try_map_range(b, |i| {
        let mut rng = seed::stream(seed, &[i as u64]);
        sampler
            .draw(ctx, &mut rng)
            .map(|d| d.assignment)
            .map_err(|e| Error::ReferenceDraw {
                index: i,
                source: Box::new(e),
            })
    })
}

/// p-value of `H0(tau0)` against reference draws from `refs`.
pub fn p_value_from_reference(
    y: &[f64],
    z_obs: &Assignment,
    tau0: f64,
    refs: &[Assignment],
) -> FrtResult {
    let observed = diff_in_means(y, z_obs);
    let observed_dev = (observed - tau0).abs();
    let (y0, y1) = impute_potential_outcomes(y, z_obs, tau0);
    let mut null_world = vec![0.0; y.len()];
    let exceed = refs
        .iter()
        .filter(|zb| {
            for (i, out) in null_world.iter_mut().enumerate() {
                *out = if zb.is_treated(i) { y1[i] } else { y0[i] };
            }
            (diff_in_means(&null_world, zb) - tau0).abs() > observed_dev
        })
        .count();
    FrtResult {
        p_value: (1 + exceed) as f64 / (refs.len() + 1) as f64,
        observed_stat: observed,
        n_reference: refs.len(),
        tau_null: tau0,
    }
}

/// Fisher randomization test of `H0(tau0)` with `b` reference draws from
/// the same sampler that generated `z_obs`.
pub fn frt_p_value(
    ctx: &DesignContext,
    y: &[f64],
    z_obs: &Assignment,
    tau0: f64,
    sampler: &Sampler,
    b: usize,
    seed: u64,
) -> Result<FrtResult> {
    if b == 0 {
        return Err(Error::InvalidInput("need at least one reference draw".into()));
    }
    if y.len() != ctx.n() {
        return Err(Error::InvalidInput(format!(
            "outcome length {} does not match n = {}",
            y.len(),
            ctx.n()
        )));
    }
    ctx.validate(z_obs)?;
    let refs = reference_draws(ctx, sampler, b, seed)?;
    Ok(p_value_from_reference(y, z_obs, tau0, &refs))
}

/// Evenly spaced hypothesized effects `lo, lo + step, ..., hi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Grid {
    pub lo: f64,
    pub hi: f64,
    pub step: f64,
}

impl Grid {
    pub const DEFAULT_INTERVALS: usize = 200;

    pub fn new(lo: f64, hi: f64, step: f64) -> Result<Self> {
        let grid = Self { lo, hi, step };
        if !(lo < hi && step > 0.0 && lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidInput(format!(
                "grid needs lo < hi and step > 0 (lo = {lo}, hi = {hi}, step = {step})"
            )));
        }
        if grid.len() < 3 {
            return Err(Error::InvalidInput("grid needs at least 3 points".into()));
        }
        Ok(grid)
    }

    /// `tau_hat +/- 5 SE` with 201 points; SE is the Neyman estimate.
    pub fn around_estimate(y: &[f64], z: &Assignment) -> Result<Self> {
        let center = diff_in_means(y, z);
        let mut half = 5.0 * neyman_se(y, z);
        if half.is_nan() || half <= 0.0 {
            half = 1e-8_f64.max(center.abs() * 1e-8);
        }
        Self::new(
            center - half,
            center + half,
            2.0 * half / Self::DEFAULT_INTERVALS as f64,
        )
    }

    pub fn len(&self) -> usize {
        ((self.hi - self.lo) / self.step + 1e-9).floor() as usize + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn point(&self, k: usize) -> f64 {
        let v = self.lo + k as f64 * self.step;
        // Snap the last point onto `hi` when the step divides the range.
        if (self.hi - v).abs() <= 1e-9 * self.step {
            self.hi
        } else {
            v
        }
    }

    pub fn points(&self) -> impl Iterator<Item = f64> + '_ {
        (0..self.len()).map(|k| self.point(k))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConfidenceInterval {
    pub lower: f64,
    pub upper: f64,
    pub alpha: f64,
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub grid_step: f64,
    /// An end point sits on the grid boundary, so the interval may be cut off.
    pub truncated: bool,
}

impl ConfidenceInterval {
    pub fn contains(&self, tau: f64) -> bool {
        self.lower <= tau && tau <= self.upper
    }
}

/// Seed used for the reference set at grid point `k`.
pub fn grid_point_seed(seed: u64, k: usize) -> u64 {
    seed::derive(seed, &[k as u64])
}

/// p-values at every grid point, each with its own fresh reference set.
pub fn p_value_profile(
    ctx: &DesignContext,
    y: &[f64],
    z_obs: &Assignment,
    sampler: &Sampler,
    b: usize,
    grid: &Grid,
    seed: u64,
) -> Result<Vec<FrtResult>> {
    par::try_map_range(grid.len(), |k| {
        frt_p_value(ctx, y, z_obs, grid.point(k), sampler, b, grid_point_seed(seed, k))
    })
}

/// Interval from a profile: the smallest and largest grid points with
/// `p >= alpha`.
pub fn interval_from_profile(
    profile: &[FrtResult],
    alpha: f64,
    grid: &Grid,
) -> Result<ConfidenceInterval> {
    let accepted: Vec<usize> = (0..profile.len())
        .filter(|&k| profile[k].p_value >= alpha)
        .collect();
    let (Some(&first), Some(&last)) = (accepted.first(), accepted.last()) else {
        let max_p = profile.iter().map(|r| r.p_value).fold(0.0, f64::max);
        return Err(Error::EmptyInterval { max_p });
    };
    Ok(ConfidenceInterval {
        lower: profile[first].tau_null,
        upper: profile[last].tau_null,
        alpha,
        grid_lo: grid.lo,
        grid_hi: grid.hi,
        grid_step: grid.step,
        truncated: first == 0 || last + 1 == profile.len(),
    })
}

/// `(1 - alpha)` confidence interval by inverting the randomization test
/// over `grid`.
#[allow(clippy::too_many_arguments)]
pub fn invert_ci(
    ctx: &DesignContext,
    y: &[f64],
    z_obs: &Assignment,
    alpha: f64,
    sampler: &Sampler,
    b: usize,
    grid: &Grid,
    seed: u64,
) -> Result<ConfidenceInterval> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidInput(format!("alpha must be in (0, 1), got {alpha}")));
    }
    let profile = p_value_profile(ctx, y, z_obs, sampler, b, grid, seed)?;
    let ci = interval_from_profile(&profile, alpha, grid)?;
    if ci.truncated {
        log::warn!(
            "confidence interval touches the grid boundary [{}, {}]; it may be truncated",
            grid.lo,
            grid.hi
        );
    }
    Ok(ci)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn z(bits: &[u8]) -> Assignment {
        Assignment::new(bits.iter().map(|&b| b == 1).collect())
    }

    #[test]
    fn difference_in_means_by_hand() {
        assert_eq!(diff_in_means(&[1.0, 2.0, 3.0, 4.0], &z(&[1, 1, 0, 0])), -2.0);
        assert_eq!(diff_in_means(&[3.0; 4], &z(&[1, 0, 1, 0])), 0.0);
        let y = [0.5, 1.5, -2.0, 4.0, 1.0];
        let shifted: Vec<f64> = y.iter().map(|v| v + 10.0).collect();
        let zz = z(&[1, 0, 0, 1, 1]);
        assert!((diff_in_means(&y, &zz) - diff_in_means(&shifted, &zz)).abs() < 1e-12);
    }

    #[test]
    fn imputation_by_hand() {
        let (y0, y1) = impute_potential_outcomes(&[5.0, 7.0], &z(&[1, 0]), 2.0);
        assert_eq!(&y0[..], &[3.0, 7.0]);
        assert_eq!(&y1[..], &[5.0, 9.0]);
        let (y0, y1) = impute_potential_outcomes(&[5.0, 7.0], &z(&[1, 0]), 0.0);
        assert_eq!(y0, y1);
        assert_eq!(&y0[..], &[5.0, 7.0]);
    }

    #[test]
    fn p_value_extremes() {
        let y = [10.0, 10.0, 0.0, 0.0];
        let obs = z(&[1, 1, 0, 0]);
        // Every reference statistic is smaller in magnitude.
        let refs = vec![z(&[1, 0, 1, 0]), z(&[0, 1, 1, 0]), z(&[1, 0, 0, 1])];
        let r = p_value_from_reference(&y, &obs, 0.0, &refs);
        assert_eq!(r.p_value, 0.25);
        assert_eq!(r.observed_stat, 10.0);

        let y = [1.0, 2.0, 3.0, 4.0];
        let r = p_value_from_reference(&y, &z(&[1, 0, 0, 1]), 0.0, &[z(&[1, 1, 0, 0]), z(&[0, 0, 1, 1])]);
        assert_eq!(r.observed_stat, 0.0);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn ties_are_not_counted() {
        let y = [3.0, 1.0, 2.0, 0.0];
        let obs = z(&[1, 1, 0, 0]);
        let r = p_value_from_reference(&y, &obs, 0.7, &[obs.clone(), obs.clone()]);
        assert_eq!(r.p_value, 1.0 / 3.0);
    }

    #[test]
    fn grid_shape() {
        let g = Grid::new(-1.0, 1.0, 0.5).unwrap();
        assert_eq!(g.points().collect::<Vec<_>>(), vec![-1.0, -0.5, 0.0, 0.5, 1.0]);
        assert!(Grid::new(0.0, 1.0, 0.6).is_err());
        let g = Grid::new(0.0, 1.0, 0.4).unwrap();
        assert_eq!(g.len(), 3);
        assert!((g.point(2) - 0.8).abs() < 1e-15);
        let g = Grid::new(-0.3, 0.3, 0.6 / 200.0).unwrap();
        assert_eq!(g.len(), 201);
        assert_eq!(g.point(200), 0.3);
        assert!(Grid::new(1.0, 0.0, 0.1).is_err());
        assert!(Grid::new(0.0, 1.0, 0.0).is_err());
    }

    #[test]
    fn empty_and_truncated_intervals() {
        let grid = Grid::new(0.0, 2.0, 1.0).unwrap();
        let mk = |ps: [f64; 3]| -> Vec<FrtResult> {
            ps.iter()
                .enumerate()
                .map(|(k, &p)| FrtResult {
                    p_value: p,
                    observed_stat: 0.0,
                    n_reference: 9,
                    tau_null: grid.point(k),
                })
                .collect()
        };
        match interval_from_profile(&mk([0.01, 0.02, 0.03]), 0.05, &grid) {
            Err(Error::EmptyInterval { max_p }) => assert_eq!(max_p, 0.03),
            other => panic!("unexpected {other:?}"),
        }
        let ci = interval_from_profile(&mk([0.01, 0.5, 0.02]), 0.05, &grid).unwrap();
        assert_eq!((ci.lower, ci.upper, ci.truncated), (1.0, 1.0, false));
        let ci = interval_from_profile(&mk([0.3, 0.5, 0.02]), 0.05, &grid).unwrap();
        assert!(ci.truncated);
    }

    #[test]
    fn outcome_vector_rejects_nan() {
        assert!(OutcomeVector::new(vec![1.0, f64::INFINITY]).is_err());
    }
}
