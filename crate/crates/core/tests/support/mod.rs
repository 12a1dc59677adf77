//! Oracles shared by the integration tests.
#![allow(dead_code)]

use lablab::betting::BettingList;
use lablab::{Amount, Exact};
use num_bigint::BigInt;
use rand::Rng;

pub fn ex(n: i64, d: u64) -> Exact {
    Exact::from_ratio(n, d)
}

/// Good list built from its first entry and a sorted difference sequence:
/// `a_1 = num / den`, differences `k_i a_1 / steps` with `k_i` sorted.
pub fn good_list(num: i64, den: u64, mut ks: Vec<u32>, steps: u32) -> BettingList<Exact> {
    ks.sort_unstable();
    let a1 = ex(num, den);
    let mut entries = vec![a1.clone()];
    for k in ks {
        let d = &a1 * ex(k.min(steps) as i64, steps as u64);
        let next = entries.last().unwrap() + d;
        entries.push(next);
    }
    BettingList::new(entries).unwrap()
}

pub fn random_good_list<R: Rng>(rng: &mut R, max_len: usize) -> BettingList<Exact> {
    let len = rng.random_range(1..=max_len);
    let steps = rng.random_range(1..=12);
    let ks = (1..len).map(|_| rng.random_range(0..=steps)).collect();
    good_list(rng.random_range(1..=20), rng.random_range(1..=6), ks, steps)
}

/// `r <= √(2/l) + 2/l` by squaring, in exact arithmetic.
pub fn within_sqrt_form(r: &Exact, l: usize) -> bool {
    let two_over_l = ex(2, l as u64);
    let d = r - &two_over_l;
    d < ex(0, 1) || &d * &d <= two_over_l
}

/// Counts, for every depth `n <= depth`, the outcome sequences of length `n`
/// that leave the length walk from `l0` alive, split by their number of wins.
pub fn alive_path_counts(l0: usize, depth: usize) -> Vec<Vec<u64>> {
    fn walk(l: usize, n: usize, wins: usize, depth: usize, counts: &mut [Vec<u64>]) {
        counts[n][wins] += 1;
        if n == depth {
            return;
        }
        walk(l + 1, n + 1, wins, depth, counts);
        if l > 2 {
            walk(l - 2, n + 1, wins + 1, depth, counts);
        }
    }
    let mut counts = vec![vec![0u64; depth + 1]; depth + 1];
    walk(l0, 0, 0, depth, &mut counts);
    counts
}

/// `P(N >= n)` for `n = 0..=depth` by summing the enumerated paths.
pub fn enumerated_survival(l0: usize, p: &Exact, depth: usize) -> Vec<Exact> {
    let counts = alive_path_counts(l0, depth);
    let q = ex(1, 1) - p;
    let pow = |x: &Exact, k: usize| num_traits::pow(x.clone(), k);
    let mut out = vec![ex(1, 1)];
    for n in 1..=depth {
        // P(N >= n) = P(alive after n - 1 coups)
        let m = n - 1;
        let total = counts[m]
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > 0)
            .map(|(w, &c)| Exact::from_integer(BigInt::from(c)) * pow(p, w) * pow(&q, m - w))
            .fold(ex(0, 1), |a, b| a + b);
        out.push(total);
    }
    out
}
