use std::ops::Range;

use crate::error::{Error, Result};

pub const DEFAULT_FOLDS: usize = 10;

/// Contiguous, disjoint, covering folds over a time-ordered row sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FoldPlan {
    n: usize,
    folds: Vec<Range<usize>>,
}

/// Splits `0..n` into `k` contiguous blocks whose sizes differ by at most
/// one; the earliest blocks take the remainder.
pub fn contiguous_kfold(n: usize, k: usize) -> Result<FoldPlan> {
    if k < 2 {
        return Err(Error::Precondition(format!("need at least 2 folds, got {k}")));
    }
    if n < k {
        return Err(Error::Precondition(format!("{n} rows cannot fill {k} folds")));
    }
    let (base, extra) = (n / k, n % k);
    let mut start = 0;
    let folds = (0..k)
        .map(|j| {
            let len = base + usize::from(j < extra);
            let r = start..start + len;
            start += len;
            r
        })
        .collect();
    Ok(FoldPlan { n, folds })
}

impl FoldPlan {
    pub fn k(&self) -> usize {
        self.folds.len()
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn test(&self, j: usize) -> Range<usize> {
        self.folds[j].clone()
    }

    /// Every index outside fold `j`, in order.
    pub fn train(&self, j: usize) -> impl Iterator<Item = usize> + '_ {
        let t = self.folds[j].clone();
        (0..self.n).filter(move |i| !t.contains(i))
    }

    pub fn folds(&self) -> &[Range<usize>] {
        &self.folds
    }
}
