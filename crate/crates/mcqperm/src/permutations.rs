//! Deterministic construction of the named permutation subsets.
//!
//! All builders return [`PermutationSet`]s over `n` display positions. Random
//! subsets are sampled without replacement from the lexicographic full set by
//! a partial Fisher-Yates shuffle driven by a keyed ChaCha8 stream (see
//! [`crate::rng`]); the stream key is `("perm-sample", seed, n, size,
//! sample_index)`, so the same inputs yield byte-identical members on every
//! platform, independent of call order or threading.

use crate::error::{Error, Result};
use crate::rng::{self, KeyPart};
use crate::types::{factorial, Permutation, PermutationSet, SubsetKind};

/// Default ceiling on option counts for full-set enumeration (6! = 720).
pub const DEFAULT_FULL_CAP: usize = 6;

fn check_option_count(n: usize) -> Result<()> {
    if n < 2 {
        return Err(Error::InvalidBenchmark(format!(
            "permutation subsets need at least 2 options, got {n}"
        )));
    }
    Ok(())
}

/// The single identity permutation.
pub fn original_set(n: usize) -> Result<PermutationSet> {
    check_option_count(n)?;
    PermutationSet::new(SubsetKind::Original, vec![Permutation::identity(n)], None)
}

/// Original order followed by the full reversal.
pub fn oi_set(n: usize) -> Result<PermutationSet> {
    check_option_count(n)?;
    let reversed = Permutation::new((0..n).rev().collect())?;
    PermutationSet::new(
        SubsetKind::Oi,
        vec![Permutation::identity(n), reversed],
        None,
    )
}

/// The n circular shifts; member k shows option `(p + k) mod n` at display
/// position `p`, so member 0 is the identity.
pub fn cyclic_set(n: usize) -> Result<PermutationSet> {
    check_option_count(n)?;
    let members = (0..n)
        .map(|k| Permutation::new((0..n).map(|p| (p + k) % n).collect()))
        .collect::<Result<Vec<_>>>()?;
    PermutationSet::new(SubsetKind::Cyclic, members, None)
}

/// All n! permutations in lexicographic order of their arrangements, refused
/// above [`DEFAULT_FULL_CAP`] options.
pub fn full_set(n: usize) -> Result<PermutationSet> {
    full_set_capped(n, DEFAULT_FULL_CAP)
}

/// As [`full_set`] with an explicit cap on the option count.
pub fn full_set_capped(n: usize, cap: usize) -> Result<PermutationSet> {
    check_option_count(n)?;
    if n > cap {
        return Err(Error::PermutationCap {
            n,
            size: factorial(n),
            cap: factorial(cap),
        });
    }
    PermutationSet::new(SubsetKind::Full, enumerate_lexicographic(n), None)
}

/// Generates 0..n! arrangements in lexicographic order via repeated
/// next-permutation steps.
fn enumerate_lexicographic(n: usize) -> Vec<Permutation> {
    let mut current: Vec<usize> = (0..n).collect();
    let mut out = Vec::with_capacity(factorial(n) as usize);
    loop {
        out.push(Permutation::new(current.clone()).expect("arrangement is a bijection"));
        if !next_lexicographic(&mut current) {
            return out;
        }
    }
}

/// Advances `arr` to its lexicographic successor in place; false at the last.
fn next_lexicographic(arr: &mut [usize]) -> bool {
    let n = arr.len();
    let Some(pivot) = (0..n.saturating_sub(1)).rev().find(|&i| arr[i] < arr[i + 1]) else {
        return false;
    };
    let swap = (pivot + 1..n).rev().find(|&j| arr[j] > arr[pivot]).unwrap();
    arr.swap(pivot, swap);
    arr[pivot + 1..].reverse();
    true
}

/// `size` distinct permutations sampled without replacement from the full set.
/// Tagged `random2` when `size == 2`, otherwise `randomL`. The identity
/// permutation is not forced in; whichever member is sampled first anchors the
/// order-sensitive metrics.
pub fn random_subset(n: usize, size: usize, seed: u64) -> Result<PermutationSet> {
    let kind = if size == 2 {
        SubsetKind::Random2
    } else {
        SubsetKind::RandomL
    };
    random_subset_as(kind, n, size, seed, 0)
}

fn random_subset_as(
    kind: SubsetKind,
    n: usize,
    size: usize,
    seed: u64,
    sample_index: u64,
) -> Result<PermutationSet> {
    check_option_count(n)?;
    let available = factorial(n);
    if size as u64 > available {
        return Err(Error::InfeasibleSample {
            n,
            requested: size,
            available,
        });
    }
    if size == 0 {
        return Err(Error::Usage("sample size must be at least 1".into()));
    }
    let full = enumerate_lexicographic(n);
    let mut rng = rng::stream(
        "perm-sample",
        &[
            KeyPart::Int(seed),
            KeyPart::Int(n as u64),
            KeyPart::Int(size as u64),
            KeyPart::Int(sample_index),
        ],
    );
    // Partial Fisher-Yates over the full-set indices.
    let mut pool: Vec<usize> = (0..full.len()).collect();
    for i in 0..size {
        let j = i + rng::uniform_index(&mut rng, (pool.len() - i) as u64) as usize;
        pool.swap(i, j);
    }
    let members = pool[..size].iter().map(|&i| full[i].clone()).collect();
    PermutationSet::new(kind, members, Some(seed))
}

/// `count` independent random subsets for the permutation-choice stability
/// analysis. Each sample draws from its own keyed stream, so samples do not
/// depend on evaluation order. Requires strictly more permutations than the
/// sample consumes; otherwise every sample would be the same set and the
/// benchmark is degenerate for this analysis.
pub fn permutation_samples(
    n: usize,
    size: usize,
    count: usize,
    seed: u64,
) -> Result<Vec<PermutationSet>> {
    check_option_count(n)?;
    if count == 0 {
        return Err(Error::Usage("sample count must be at least 1".into()));
    }
    let available = factorial(n);
    if available <= size as u64 {
        return Err(Error::DegenerateBenchmark {
            n,
            size,
            available,
        });
    }
    let kind = if size == 2 {
        SubsetKind::Random2
    } else {
        SubsetKind::RandomL
    };
    (0..count)
        .map(|i| random_subset_as(kind, n, size, seed, i as u64))
        .collect()
}

/// Builds the subset a CLI request names. `seed` is consulted only by the
/// random kinds.
pub fn build_subset(kind: SubsetKind, n: usize, seed: u64) -> Result<PermutationSet> {
    match kind {
        SubsetKind::Original => original_set(n),
        SubsetKind::Oi => oi_set(n),
        SubsetKind::Cyclic => cyclic_set(n),
        SubsetKind::Full => full_set(n),
        SubsetKind::Random2 => random_subset_as(SubsetKind::Random2, n, 2, seed, 0),
        SubsetKind::RandomL => random_subset_as(SubsetKind::RandomL, n, n, seed, 0),
    }
}
