//! Branch-space combinatorics.
//!
//! A branch assigns to each coordinate `n` a class value in `{1..h(n)}`,
//! where `h` is a finite sequence of class counts. This module builds
//! families of branches that disagree everywhere beyond per-member
//! thresholds, interleaves two branches by parity, and decides tail
//! equality (agreement on all coordinates at or beyond a cutoff).

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum BranchError {
    #[error("class counts must be nonempty")]
    EmptyCounts,
    #[error("class count at index {index} is {value}; every count must be at least 1")]
    CountTooSmall { index: usize, value: u32 },
    #[error("class counts are not strictly increasing at index {index}")]
    NotStrictlyIncreasing { index: usize },
    #[error("depth too small: no coordinate has more than {needed} classes, cannot fit {k} branches")]
    DepthTooSmall { needed: u32, k: usize },
    #[error("depth {depth} is below the required minimum {required} (cutoff + 2)")]
    DepthBelowCutoff { depth: usize, required: usize },
    #[error("depth {depth} exceeds the {available} available class counts")]
    DepthExceedsCounts { depth: usize, available: usize },
    #[error("branch value {value} at coordinate {coord} is outside 1..={count}")]
    ValueOutOfRange { coord: usize, value: u32, count: u32 },
    #[error("branch length {found} does not match expected length {expected}")]
    LengthMismatch { expected: usize, found: usize },
    #[error("branch index {index} is out of range for a family of {k} members")]
    IndexOutOfRange { index: usize, k: usize },
    #[error("interleaving requires two distinct branch indices, got {0} twice")]
    EqualIndices(usize),
}

/// The sequence of class counts `h(0), h(1), ...` truncated to finite length.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    counts: Vec<u32>,
    strictly_increasing: bool,
    all_at_least_two: bool,
}

impl ClassCounts {
    /// Validates a raw count sequence. With `require_strict` set, the
    /// sequence must be strictly increasing; either way the constructor
    /// records whether it is, and whether every entry is at least 2.
    pub fn new(raw: Vec<u32>, require_strict: bool) -> Result<Self, BranchError> {
        if raw.is_empty() {
            return Err(BranchError::EmptyCounts);
        }
        for (index, &value) in raw.iter().enumerate() {
            if value < 1 {
                return Err(BranchError::CountTooSmall { index, value });
            }
        }
        let mut strictly_increasing = true;
        for index in 1..raw.len() {
            if raw[index] <= raw[index - 1] {
                if require_strict {
                    return Err(BranchError::NotStrictlyIncreasing { index });
                }
                strictly_increasing = false;
                break;
            }
        }
        let all_at_least_two = raw.iter().all(|&value| value >= 2);
        Ok(Self {
            counts: raw,
            strictly_increasing,
            all_at_least_two,
        })
    }

    /// The default counts `h(n) = n + 2` up to the given depth: the smallest
    /// strictly increasing sequence with `h(0) = 2`.
    pub fn default_increasing(depth: usize) -> Self {
        let counts = (0..depth).map(|n| n as u32 + 2).collect();
        Self {
            counts,
            strictly_increasing: true,
            all_at_least_two: true,
        }
    }

    pub fn len(&self) -> usize {
        self.counts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }

    pub fn get(&self, n: usize) -> u32 {
        self.counts[n]
    }

    pub fn values(&self) -> &[u32] {
        &self.counts
    }

    pub fn strictly_increasing(&self) -> bool {
        self.strictly_increasing
    }

    pub fn all_at_least_two(&self) -> bool {
        self.all_at_least_two
    }

    /// A copy restricted to the first `depth` coordinates.
    pub fn truncated(&self, depth: usize) -> Result<Self, BranchError> {
        if depth > self.counts.len() {
            return Err(BranchError::DepthExceedsCounts {
                depth,
                available: self.counts.len(),
            });
        }
        if depth == 0 {
            return Err(BranchError::EmptyCounts);
        }
        ClassCounts::new(self.counts[..depth].to_vec(), false)
    }

    /// Threshold sequence `N_0..N_{k-1}`: `N_i` is the least coordinate
    /// whose class count exceeds `i`. Requires strictly increasing counts.
    pub fn thresholds(&self, k: usize) -> Result<Vec<usize>, BranchError> {
        if !self.strictly_increasing {
            return Err(BranchError::NotStrictlyIncreasing { index: 0 });
        }
        let mut result = Vec::with_capacity(k);
        let mut n = 0usize;
        for i in 0..k {
            while n < self.counts.len() && u64::from(self.counts[n]) <= i as u64 {
                n += 1;
            }
            if n == self.counts.len() {
                return Err(BranchError::DepthTooSmall {
                    needed: i as u32,
                    k,
                });
            }
            result.push(n);
        }
        Ok(result)
    }
}

/// A finite branch: one class value per coordinate, 1-based.
///
/// Canonical serialization is the value sequence in coordinate order.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Branch {
    values: Vec<u32>,
}

impl Branch {
    /// Wraps a raw value sequence without checking it against any counts.
    pub fn from_values(values: Vec<u32>) -> Self {
        Self { values }
    }

    /// Validates the values against the counts: same length, and
    /// `1 <= values[n] <= counts[n]` at every coordinate.
    pub fn checked(values: Vec<u32>, counts: &ClassCounts) -> Result<Self, BranchError> {
        if values.len() != counts.len() {
            return Err(BranchError::LengthMismatch {
                expected: counts.len(),
                found: values.len(),
            });
        }
        for (coord, &value) in values.iter().enumerate() {
            if value < 1 || value > counts.get(coord) {
                return Err(BranchError::ValueOutOfRange {
                    coord,
                    value,
                    count: counts.get(coord),
                });
            }
        }
        Ok(Self { values })
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn value_at(&self, n: usize) -> u32 {
        self.values[n]
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    /// True iff both branches agree on every coordinate in `[from, len)`.
    pub fn tail_equal(&self, other: &Branch, from: usize) -> Result<bool, BranchError> {
        if self.values.len() != other.values.len() {
            return Err(BranchError::LengthMismatch {
                expected: self.values.len(),
                found: other.values.len(),
            });
        }
        let start = from.min(self.values.len());
        Ok(self.values[start..] == other.values[start..])
    }
}

/// Every branch over the given counts, in lexicographic order. The result
/// has product-of-counts length; intended for desk-scale counts only.
pub fn enumerate_branches(counts: &ClassCounts) -> Vec<Branch> {
    let mut prefixes: Vec<Vec<u32>> = vec![Vec::new()];
    for n in 0..counts.len() {
        let mut next = Vec::with_capacity(prefixes.len() * counts.get(n) as usize);
        for prefix in &prefixes {
            for value in 1..=counts.get(n) {
                let mut extended = prefix.clone();
                extended.push(value);
                next.push(extended);
            }
        }
        prefixes = next;
    }
    prefixes.into_iter().map(Branch::from_values).collect()
}

/// A family `f_0..f_{k-1}` of branches over common counts, together with
/// the thresholds beyond which distinct members never agree, and the
/// cutoff `c = N_{k-1}` used as the tail-equality horizon.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BranchFamily {
    counts: ClassCounts,
    members: Vec<Branch>,
    thresholds: Vec<usize>,
    cutoff: usize,
}

impl BranchFamily {
    /// Deterministic greedy construction at the given depth: member `i`
    /// takes value 1 below its threshold `N_i`, and from `N_i` on the
    /// least value unused by members `0..i` at that coordinate.
    ///
    /// Requires strictly increasing counts of length at least `depth`,
    /// and `depth >= N_{k-1} + 2` so the tail `[c, depth)` contains both
    /// an even and an odd coordinate.
    pub fn build(counts: &ClassCounts, k: usize, depth: usize) -> Result<Self, BranchError> {
        if depth > counts.len() {
            return Err(BranchError::DepthExceedsCounts {
                depth,
                available: counts.len(),
            });
        }
        if !counts.strictly_increasing() {
            return Err(BranchError::NotStrictlyIncreasing { index: 0 });
        }
        let counts = counts.truncated(depth)?;
        let thresholds = counts.thresholds(k)?;
        let cutoff = thresholds.last().copied().unwrap_or(0);
        if depth < cutoff + 2 {
            return Err(BranchError::DepthBelowCutoff {
                depth,
                required: cutoff + 2,
            });
        }
        let mut members: Vec<Branch> = Vec::with_capacity(k);
        for i in 0..k {
            let mut values = Vec::with_capacity(depth);
            for n in 0..depth {
                if n < thresholds[i] {
                    values.push(1);
                } else {
                    // counts[n] > i here, so an unused value always exists.
                    let used: Vec<u32> = members.iter().map(|f| f.value_at(n)).collect();
                    let value = (1..=counts.get(n))
                        .find(|v| !used.contains(v))
                        .expect("threshold guarantees a free value");
                    values.push(value);
                }
            }
            members.push(Branch::from_values(values));
        }
        Ok(Self {
            counts,
            members,
            thresholds,
            cutoff,
        })
    }

    pub fn counts(&self) -> &ClassCounts {
        &self.counts
    }

    /// Number of members `k`.
    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// Common branch length `m`.
    pub fn depth(&self) -> usize {
        self.counts.len()
    }

    pub fn member(&self, i: usize) -> &Branch {
        &self.members[i]
    }

    pub fn members(&self) -> &[Branch] {
        &self.members
    }

    pub fn threshold(&self, i: usize) -> usize {
        self.thresholds[i]
    }

    pub fn thresholds(&self) -> &[usize] {
        &self.thresholds
    }

    pub fn cutoff(&self) -> usize {
        self.cutoff
    }

    /// The interleaved branch `d_{i,j}`: member `i`'s value at even
    /// coordinates, member `j`'s at odd ones. Defined only for `i != j`.
    pub fn interleave(&self, i: usize, j: usize) -> Result<Branch, BranchError> {
        if i == j {
            return Err(BranchError::EqualIndices(i));
        }
        for index in [i, j] {
            if index >= self.members.len() {
                return Err(BranchError::IndexOutOfRange {
                    index,
                    k: self.members.len(),
                });
            }
        }
        let values = (0..self.depth())
            .map(|n| {
                if n % 2 == 0 {
                    self.members[i].value_at(n)
                } else {
                    self.members[j].value_at(n)
                }
            })
            .collect();
        Ok(Branch::from_values(values))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn counts(raw: &[u32]) -> ClassCounts {
        ClassCounts::new(raw.to_vec(), false).unwrap()
    }

    #[test]
    fn validate_strict_counts() {
        let c = ClassCounts::new(vec![2, 3, 4, 5], true).unwrap();
        assert_eq!(c.len(), 4);
        assert!(c.strictly_increasing());
        assert!(c.all_at_least_two());
    }

    #[test]
    fn validate_rejects_non_strict_under_flag() {
        let err = ClassCounts::new(vec![2, 2, 2], true).unwrap_err();
        assert_eq!(err, BranchError::NotStrictlyIncreasing { index: 1 });
    }

    #[test]
    fn validate_accepts_non_strict_without_flag() {
        let c = ClassCounts::new(vec![2, 2, 2], false).unwrap();
        assert!(!c.strictly_increasing());
        assert!(c.all_at_least_two());
    }

    #[test]
    fn validate_rejects_empty_and_zero() {
        assert_eq!(
            ClassCounts::new(vec![], false).unwrap_err(),
            BranchError::EmptyCounts
        );
        assert_eq!(
            ClassCounts::new(vec![2, 0], false).unwrap_err(),
            BranchError::CountTooSmall { index: 1, value: 0 }
        );
    }

    #[test]
    fn thresholds_for_default_counts() {
        let c = counts(&[2, 3, 4, 5]);
        assert_eq!(c.thresholds(4).unwrap(), vec![0, 0, 1, 2]);
        assert_eq!(c.thresholds(1).unwrap(), vec![0]);
    }

    #[test]
    fn thresholds_reject_shallow_counts() {
        let c = counts(&[2, 3]);
        assert_eq!(
            c.thresholds(4).unwrap_err(),
            BranchError::DepthTooSmall { needed: 3, k: 4 }
        );
    }

    #[test]
    fn build_family_default_example() {
        let c = counts(&[2, 3, 4, 5]);
        let fam = BranchFamily::build(&c, 4, 4).unwrap();
        assert_eq!(fam.thresholds(), &[0, 0, 1, 2]);
        assert_eq!(fam.cutoff(), 2);
        assert_eq!(fam.member(0).values(), &[1, 1, 1, 1]);
        assert_eq!(fam.member(1).values(), &[2, 2, 2, 2]);
        assert_eq!(fam.member(2).values(), &[1, 3, 3, 3]);
        assert_eq!(fam.member(3).values(), &[1, 1, 4, 4]);
    }

    #[test]
    fn build_family_single_member() {
        let c = counts(&[2, 3, 4, 5]);
        let fam = BranchFamily::build(&c, 1, 4).unwrap();
        assert_eq!(fam.member(0).values(), &[1, 1, 1, 1]);
    }

    #[test]
    fn build_family_rejects_depth_below_cutoff() {
        let c = counts(&[2, 3, 4, 5]);
        assert_eq!(
            BranchFamily::build(&c, 4, 3).unwrap_err(),
            BranchError::DepthBelowCutoff {
                depth: 3,
                required: 4
            }
        );
    }

    #[test]
    fn interleave_examples() {
        let c = counts(&[2, 3, 4, 5]);
        let fam = BranchFamily::build(&c, 4, 4).unwrap();
        assert_eq!(fam.interleave(0, 1).unwrap().values(), &[1, 2, 1, 2]);
        assert_eq!(fam.interleave(1, 0).unwrap().values(), &[2, 1, 2, 1]);
        assert_eq!(fam.interleave(2, 2).unwrap_err(), BranchError::EqualIndices(2));
    }

    #[test]
    fn tail_equal_examples() {
        let f = Branch::from_values(vec![1, 2, 1, 2]);
        let g = Branch::from_values(vec![9, 2, 1, 2]);
        assert!(f.tail_equal(&g, 1).unwrap());
        let a = Branch::from_values(vec![1, 1, 1, 1]);
        let b = Branch::from_values(vec![2, 2, 2, 2]);
        assert!(!a.tail_equal(&b, 2).unwrap());
        assert!(a.tail_equal(&a, 0).unwrap());
        let short = Branch::from_values(vec![1, 2]);
        assert!(f.tail_equal(&short, 0).is_err());
    }

    #[test]
    fn family_separation_invariant_exhaustive() {
        // Distinct members never agree at or beyond the larger threshold.
        for k in 0..=5usize {
            for extra in 0..3usize {
                let depth = 4 + extra + k.saturating_sub(2);
                let c = ClassCounts::default_increasing(depth);
                let fam = BranchFamily::build(&c, k, depth).unwrap();
                for j in 0..k {
                    for i in 0..j {
                        for n in fam.threshold(j)..depth {
                            assert_ne!(
                                fam.member(i).value_at(n),
                                fam.member(j).value_at(n),
                                "members {i},{j} agree at {n}"
                            );
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn interleaved_branch_avoids_both_parents_at_cutoff() {
        let c = counts(&[2, 3, 4, 5]);
        let fam = BranchFamily::build(&c, 4, 4).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                if i == j {
                    continue;
                }
                let d = fam.interleave(i, j).unwrap();
                assert!(!d.tail_equal(fam.member(i), fam.cutoff()).unwrap());
                assert!(!d.tail_equal(fam.member(j), fam.cutoff()).unwrap());
            }
        }
    }

    #[test]
    fn build_family_is_deterministic() {
        let c = counts(&[2, 3, 4, 5, 6]);
        let a = BranchFamily::build(&c, 4, 5).unwrap();
        let b = BranchFamily::build(&c, 4, 5).unwrap();
        assert_eq!(
            serde_json::to_string(&a).unwrap(),
            serde_json::to_string(&b).unwrap()
        );
    }

    proptest! {
        #[test]
        fn tail_equal_is_equivalence_and_monotone(
            xs in proptest::collection::vec(1u32..5, 6),
            ys in proptest::collection::vec(1u32..5, 6),
            zs in proptest::collection::vec(1u32..5, 6),
            c in 0usize..7,
        ) {
            let f = Branch::from_values(xs);
            let g = Branch::from_values(ys);
            let h = Branch::from_values(zs);
            // reflexive, symmetric, transitive at fixed cutoff
            prop_assert!(f.tail_equal(&f, c).unwrap());
            prop_assert_eq!(f.tail_equal(&g, c).unwrap(), g.tail_equal(&f, c).unwrap());
            if f.tail_equal(&g, c).unwrap() && g.tail_equal(&h, c).unwrap() {
                prop_assert!(f.tail_equal(&h, c).unwrap());
            }
            // agreement from c implies agreement from any later cutoff
            if f.tail_equal(&g, c).unwrap() {
                for later in c..=6 {
                    prop_assert!(f.tail_equal(&g, later).unwrap());
                }
            }
        }
    }
}
