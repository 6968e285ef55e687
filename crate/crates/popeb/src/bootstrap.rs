//! Bootstrap resampling over observation indices.
//!
//! A resampled dataset is stored as per-observation multiplicities rather
//! than copied observations: every downstream fit consumes weighted
//! sufficient statistics, so resample counts are all that is ever needed
//! and a candidate costs O(n) memory regardless of observation size.

use rand::Rng;

use crate::error::{Error, Result};

/// Integer resample multiplicities for one candidate dataset.
///
/// Counts always sum to the dataset size: a resample holds exactly as many
/// observations as the original. Label 0 is reserved for the identity
/// candidate (all counts 1), i.e. the observed dataset itself.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CandidateWeights {
    label: usize,
    counts: Vec<u32>,
}

impl CandidateWeights {
    /// The identity candidate: every observation appears exactly once.
    pub fn identity(n: usize) -> Self {
        CandidateWeights {
            label: 0,
            counts: vec![1; n],
        }
    }

    /// Wraps explicit counts, enforcing `sum(counts) == counts.len()`.
    pub fn from_counts(label: usize, counts: Vec<u32>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::invalid("candidate weights must cover at least one observation"));
        }
        let total: u64 = counts.iter().map(|&c| c as u64).sum();
        if total != counts.len() as u64 {
            return Err(Error::invalid(format!(
                "candidate counts sum to {total}, expected {}",
                counts.len()
            )));
        }
        Ok(CandidateWeights { label, counts })
    }

    /// Bypasses the sum invariant. Degenerate weight vectors (e.g. all
    /// zeros) are unreachable through the public constructors but needed to
    /// exercise the no-data identity of the conjugate updates.
    #[cfg(test)]
    pub(crate) fn unchecked_for_tests(label: usize, counts: Vec<u32>) -> Self {
        CandidateWeights { label, counts }
    }

    pub fn label(&self) -> usize {
        self.label
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        false // at least one observation by construction
    }

    pub fn count(&self, i: usize) -> u32 {
        self.counts[i]
    }

    pub fn is_identity(&self) -> bool {
        self.counts.iter().all(|&c| c == 1)
    }

    /// Indices with positive multiplicity.
    pub fn iter_nonzero(&self) -> impl Iterator<Item = (usize, u32)> + '_ {
        self.counts
            .iter()
            .enumerate()
            .filter(|&(_, &c)| c > 0)
            .map(|(i, &c)| (i, c))
    }
}

/// Draws one bootstrap resample of `n` observations: a multinomial draw of
/// `n` trials over `n` equiprobable cells.
pub fn bootstrap_sample<R: Rng>(n: usize, label: usize, rng: &mut R) -> CandidateWeights {
    debug_assert!(n >= 1);
    let mut counts = vec![0u32; n];
    for _ in 0..n {
        counts[rng.gen_range(0..n)] += 1;
    }
    CandidateWeights { label, counts }
}

/// Builds the candidate set scored by every POP-EB routine: `total`
/// candidates where candidate 0 is the identity (the observed dataset) and
/// candidates `1..total` are independent bootstrap resamples. `total` is
/// therefore the entire scoring budget.
pub fn make_candidate_set<R: Rng>(
    n: usize,
    total: usize,
    rng: &mut R,
) -> Result<Vec<CandidateWeights>> {
    if total == 0 {
        return Err(Error::invalid("candidate set size must be at least 1"));
    }
    if n == 0 {
        return Err(Error::invalid("cannot resample an empty dataset"));
    }
    let mut out = Vec::with_capacity(total);
    out.push(CandidateWeights::identity(n));
    for b in 1..total {
        out.push(bootstrap_sample(n, b, rng));
    }
    Ok(out)
}
