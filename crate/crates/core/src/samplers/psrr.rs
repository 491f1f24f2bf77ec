use std::time::Instant;

use rand::Rng;

use super::{sample_cr, BalanceDraw};
use crate::balance::{Assignment, DesignContext};
use crate::error::{Error, Result};

struct Arms {
    treated: Vec<usize>,
    control: Vec<usize>,
}

impl Arms {
    fn of(z: &Assignment) -> Self {
        let (treated, control) = (0..z.len()).partition(|&i| z.is_treated(i));
        Self { treated, control }
    }
}

/// Pair-switching rerandomization.
///
/// Starting from a complete randomization, proposes swapping one uniformly
/// chosen treated unit with one uniformly chosen control unit and keeps the
/// swap only if it strictly lowers `M`. After `n` consecutive rejected
/// proposals the search restarts from a fresh complete randomization.
/// `iterations` counts swap proposals; the budget is `max_sweeps * n`
/// proposals.
pub fn sample_psrr<R: Rng + ?Sized>(
    ctx: &DesignContext,
    rng: &mut R,
    max_sweeps: u64,
) -> Result<BalanceDraw> {
    if max_sweeps == 0 {
        return Err(Error::InvalidInput("PSRR needs max_sweeps >= 1".into()));
    }
    let start = Instant::now();
    let n = ctx.n() as u64;
    let budget = max_sweeps.saturating_mul(n);
    let a = ctx.threshold_a();

    let mut z = sample_cr(ctx, rng);
    let mut m = ctx.assignment_mahalanobis(&z);
    let mut arms = Arms::of(&z);
    let mut best_m = m;
    let mut proposals = 0u64;
    let mut stale = 0u64;

    while m > a {
        if proposals == budget {
            return Err(Error::BudgetExhausted {
                method: "psrr",
                budget,
                best_m,
            });
        }
        let ti = rng.random_range(0..arms.treated.len());
        let ci = rng.random_range(0..arms.control.len());
        let (t, c) = (arms.treated[ti], arms.control[ci]);
        z.swap(t, c);
        proposals += 1;

        let candidate = ctx.assignment_mahalanobis(&z);
        if candidate < m {
            m = candidate;
            best_m = best_m.min(m);
            arms.treated[ti] = c;
            arms.control[ci] = t;
            stale = 0;
        } else {
            z.swap(c, t);
            stale += 1;
            if stale >= n && m > a {
                z = sample_cr(ctx, rng);
                m = ctx.assignment_mahalanobis(&z);
                best_m = best_m.min(m);
                arms = Arms::of(&z);
                stale = 0;
            }
        }
    }

    Ok(BalanceDraw {
        assignment: z,
        m_value: m,
        iterations: proposals,
        elapsed: start.elapsed(),
    })
}
