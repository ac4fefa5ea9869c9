//! Storage layout for interaction tensors on strictly increasing site tuples.
//!
//! Pairs `i < j` and triples `i < j < k` are stored in colexicographic
//! order, so that `pair_index(i, j) = C(j, 2) + i` and
//! `triple_index(i, j, k) = C(k, 3) + C(j, 2) + i`.  All site indices are
//! zero-based.

use crate::error::{Error, Result};

pub(crate) fn num_pairs(n: usize) -> usize {
    n * n.saturating_sub(1) / 2
}

pub(crate) fn num_triples(n: usize) -> usize {
    n * n.saturating_sub(1) * n.saturating_sub(2) / 6
}

#[inline]
pub(crate) fn pair_index(i: usize, j: usize) -> usize {
    debug_assert!(i < j);
    j * (j - 1) / 2 + i
}

#[inline]
pub(crate) fn triple_index(i: usize, j: usize, k: usize) -> usize {
    debug_assert!(i < j && j < k);
    k * (k - 1) * (k - 2) / 6 + j * (j - 1) / 2 + i
}

/// All pairs `(i, j)` with `i < j < n`, in lexicographic order.
pub fn pairs(n: usize) -> impl Iterator<Item = (usize, usize)> {
    (0..n).flat_map(move |i| (i + 1..n).map(move |j| (i, j)))
}

/// All triples `(i, j, k)` with `i < j < k < n`, in lexicographic order.
pub fn triples(n: usize) -> impl Iterator<Item = (usize, usize, usize)> {
    (0..n).flat_map(move |i| {
        (i + 1..n).flat_map(move |j| (j + 1..n).map(move |k| (i, j, k)))
    })
}

/// Sorts `sites` ascending and applies the same permutation to `spins`.
/// Fails on repeated or out-of-range sites.
pub(crate) fn canonicalize<T: Copy>(
    n: usize,
    sites: &mut [usize],
    spins: &mut [T],
) -> Result<()> {
    debug_assert!(spins.is_empty() || spins.len() == sites.len());
    for &s in sites.iter() {
        if s >= n {
            return Err(Error::SiteOutOfRange { site: s, n });
        }
    }
    // insertion sort; tuples have at most three entries
    for a in 1..sites.len() {
        let mut b = a;
        while b > 0 && sites[b - 1] > sites[b] {
            sites.swap(b - 1, b);
            if !spins.is_empty() {
                spins.swap(b - 1, b);
            }
            b -= 1;
        }
    }
    for w in sites.windows(2) {
        if w[0] == w[1] {
            return Err(Error::RepeatedSite(w[0]));
        }
    }
    Ok(())
}

/// Value of spin `site` (+1 or -1) in configuration `config` of `n` sites.
///
/// Site 0 is the most significant bit; a clear bit means +1, matching the
/// computational basis order of the quantum models (σ₃ eigenvalue +1 first).
#[inline]
pub(crate) fn spin(config: usize, n: usize, site: usize) -> f64 {
    if (config >> (n - 1 - site)) & 1 == 0 {
        1.0
    } else {
        -1.0
    }
}
