use crate::balance::Assignment;

/// Every assignment of `n1` treated among `n` units.
pub fn all_assignments(n: usize, n1: usize) -> Vec<Assignment> {
    (0u64..1 << n)
        .filter(|mask| mask.count_ones() as usize == n1)
        .map(|mask| Assignment::from_treated(n, (0..n).filter(|&i| mask >> i & 1 == 1)))
        .collect()
}
