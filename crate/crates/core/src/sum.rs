//! Fixed-order pairwise summation.

use std::ops::Add;

use num_traits::Zero;

const LEAF: usize = 8;

/// Sums `term(0) + … + term(n - 1)` by recursive halving.
///
/// The tree shape depends only on `n`, so results are reproducible bit for
/// bit for a fixed input order.
pub(crate) fn pairwise<T, F>(n: usize, term: F) -> T
where
    T: Copy + Zero + Add<Output = T>,
    F: Fn(usize) -> T,
{
    fn rec<T, F>(lo: usize, hi: usize, term: &F) -> T
    where
        T: Copy + Zero + Add<Output = T>,
        F: Fn(usize) -> T,
    {
        if hi - lo <= LEAF {
            let mut acc = T::zero();
            for i in lo..hi {
                acc = acc + term(i);
            }
            acc
        } else {
            let mid = lo + (hi - lo) / 2;
            rec(lo, mid, term) + rec(mid, hi, term)
        }
    }
    rec(0, n, &term)
}
