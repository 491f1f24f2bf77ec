use std::time::Instant;

use rand::Rng;

use super::BalanceDraw;
use crate::balance::{Assignment, DesignContext};
use crate::error::{Error, Result};

/// Complete randomization: uniform over assignments with exactly `n1`
/// treated units, by a partial Fisher-Yates shuffle.
pub fn sample_cr<R: Rng + ?Sized>(ctx: &DesignContext, rng: &mut R) -> Assignment {
    let n = ctx.n();
    let mut idx: Vec<usize> = (0..n).collect();
    for i in 0..ctx.n1() {
        let j = rng.random_range(i..n);
        idx.swap(i, j);
    }
    Assignment::from_treated(n, idx[..ctx.n1()].iter().copied())
}

/// Acceptance-rejection rerandomization: complete randomizations until the
/// first with `M <= a`. `iterations` is the number of draws made.
pub fn sample_arr<R: Rng + ?Sized>(
    ctx: &DesignContext,
    rng: &mut R,
    max_draws: u64,
) -> Result<BalanceDraw> {
    if max_draws == 0 {
        return Err(Error::InvalidInput("ARR needs max_draws >= 1".into()));
    }
    let start = Instant::now();
    let mut best_m = f64::INFINITY;
    for draw in 1..=max_draws {
        let z = sample_cr(ctx, rng);
        let m = ctx.assignment_mahalanobis(&z);
        if m <= ctx.threshold_a() {
            return Ok(BalanceDraw {
                assignment: z,
                m_value: m,
                iterations: draw,
                elapsed: start.elapsed(),
            });
        }
        best_m = best_m.min(m);
    }
    Err(Error::BudgetExhausted {
        method: "arr",
        budget: max_draws,
        best_m,
    })
}
