//! Reduct constructions.
//!
//! `block_partition` converts an arbitrary all-at-least-2 count sequence
//! into a strictly increasing one by grouping consecutive coordinates into
//! minimal blocks with strictly growing products; `coarsen` rewrites a
//! structure to one relation per block (the meet of the block). For
//! structures with independent unary predicates, `cb_reduct` derives one
//! two-class equivalence relation per predicate from the level-`n`
//! dichotomy formulas over the prefix tree.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::branches::ClassCounts;
use crate::structures::{EqStructure, StructureError};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReductError {
    #[error("count at index {index} is {value}; block partitioning requires every count >= 2")]
    CountBelowTwo { index: usize, value: u32 },
    #[error("block product overflowed u64 at index {index}")]
    ProductOverflow { index: usize },
    #[error("blocks must tile an initial segment: expected start {expected}, got {found}")]
    BlocksNotContiguous { expected: usize, found: usize },
    #[error("block [{start}, {end}) is empty or reversed")]
    EmptyBlock { start: usize, end: usize },
    #[error("block products must strictly increase: {previous} then {next}")]
    ProductsNotIncreasing { previous: u64, next: u64 },
    #[error("block [{start}, {end}) exceeds the {relations} relations of the structure")]
    BlockOutOfRange {
        start: usize,
        end: usize,
        relations: usize,
    },
    #[error("predicate index {index} out of range for {predicates} predicates")]
    PredicateOutOfRange { index: usize, predicates: usize },
    #[error("element index {index} out of range for {size} elements")]
    ElementOutOfRange { index: usize, size: usize },
    #[error("unary structure file: {0}")]
    Schema(String),
    #[error("unary structure file is not valid JSON: {0}")]
    Json(String),
    #[error(transparent)]
    Structure(#[from] StructureError),
}

impl From<serde_json::Error> for ReductError {
    fn from(error: serde_json::Error) -> Self {
        ReductError::Json(error.to_string())
    }
}

/// Consecutive index blocks `[start, end)` with strictly increasing
/// products of the underlying counts. A trailing remainder whose product
/// cannot extend the increase is recorded, not silently lost.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BlockPartition {
    blocks: Vec<(usize, usize)>,
    products: Vec<u64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    dropped: Option<(usize, usize)>,
}

impl BlockPartition {
    /// Validates explicitly given blocks against the counts: nonempty,
    /// tiling an initial segment in order, products strictly increasing.
    pub fn from_blocks(
        blocks: Vec<(usize, usize)>,
        counts: &ClassCounts,
    ) -> Result<Self, ReductError> {
        let mut expected = 0usize;
        let mut products = Vec::with_capacity(blocks.len());
        let mut previous = 0u64;
        for &(start, end) in &blocks {
            if start != expected {
                return Err(ReductError::BlocksNotContiguous {
                    expected,
                    found: start,
                });
            }
            if end <= start {
                return Err(ReductError::EmptyBlock { start, end });
            }
            let mut product = 1u64;
            for index in start..end {
                product = product
                    .checked_mul(u64::from(counts.get(index)))
                    .ok_or(ReductError::ProductOverflow { index })?;
            }
            if product <= previous {
                return Err(ReductError::ProductsNotIncreasing {
                    previous,
                    next: product,
                });
            }
            products.push(product);
            previous = product;
            expected = end;
        }
        let dropped = (expected < counts.len()).then_some((expected, counts.len()));
        Ok(Self {
            blocks,
            products,
            dropped,
        })
    }

    pub fn blocks(&self) -> &[(usize, usize)] {
        &self.blocks
    }

    pub fn products(&self) -> &[u64] {
        &self.products
    }

    pub fn dropped(&self) -> Option<(usize, usize)> {
        self.dropped
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    /// The products reinterpreted as a strictly increasing count sequence.
    pub fn products_as_counts(&self) -> Result<ClassCounts, ReductError> {
        let counts = self
            .products
            .iter()
            .map(|&p| u32::try_from(p).map_err(|_| ReductError::ProductOverflow { index: 0 }))
            .collect::<Result<Vec<u32>, _>>()?;
        ClassCounts::new(counts, true).map_err(|_| ReductError::ProductsNotIncreasing {
            previous: 0,
            next: 0,
        })
    }
}

/// Greedy minimal blocks: each block is the shortest interval whose
/// product strictly exceeds the previous block's product (the first, the
/// shortest with product above 1). Requires every count at least 2; a
/// remainder too small to extend the increase is dropped and reported.
pub fn block_partition(counts: &ClassCounts) -> Result<BlockPartition, ReductError> {
    for (index, &value) in counts.values().iter().enumerate() {
        if value < 2 {
            return Err(ReductError::CountBelowTwo { index, value });
        }
    }
    let total = counts.len();
    let mut blocks = Vec::new();
    let mut products = Vec::new();
    let mut dropped = None;
    let mut start = 0usize;
    let mut previous = 1u64;
    while start < total {
        let mut product = 1u64;
        let mut end = start;
        while end < total && product <= previous {
            product = product
                .checked_mul(u64::from(counts.get(end)))
                .ok_or(ReductError::ProductOverflow { index: end })?;
            end += 1;
        }
        if product > previous {
            blocks.push((start, end));
            products.push(product);
            previous = product;
            start = end;
        } else {
            dropped = Some((start, total));
            break;
        }
    }
    Ok(BlockPartition {
        blocks,
        products,
        dropped,
    })
}

/// One relation per block, each the meet of the block's relations.
pub fn coarsen(
    structure: &EqStructure,
    partition: &BlockPartition,
) -> Result<EqStructure, ReductError> {
    let relations = structure.relation_count();
    let mut rows = Vec::with_capacity(partition.len());
    for &(start, end) in partition.blocks() {
        if end > relations {
            return Err(ReductError::BlockOutOfRange {
                start,
                end,
                relations,
            });
        }
        let indices: Vec<usize> = (start..end).collect();
        rows.push(structure.meet_partition(&indices)?.labels().to_vec());
    }
    Ok(EqStructure::from_labels(rows)?)
}

/// A finite structure in a language of independent unary predicates:
/// each element is its membership bit vector.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct UnaryStructure {
    predicates: usize,
    bits: Vec<Vec<bool>>,
}

impl UnaryStructure {
    pub fn new(predicates: usize, bits: Vec<Vec<bool>>) -> Result<Self, ReductError> {
        for (index, row) in bits.iter().enumerate() {
            if row.len() != predicates {
                return Err(ReductError::Schema(format!(
                    "element {index} has {} bits, expected {predicates}",
                    row.len()
                )));
            }
        }
        Ok(Self { predicates, bits })
    }

    /// One element per bit pattern: the full `2^predicates`-element
    /// structure, patterns in lexicographic order.
    pub fn full_pattern(predicates: usize) -> Self {
        assert!(predicates < 32, "full pattern limited to desk scale");
        let bits = (0..1u32 << predicates)
            .map(|row| {
                (0..predicates)
                    .map(|n| row & (1 << (predicates - 1 - n)) != 0)
                    .collect()
            })
            .collect();
        Self { predicates, bits }
    }

    pub fn size(&self) -> usize {
        self.bits.len()
    }

    pub fn predicate_count(&self) -> usize {
        self.predicates
    }

    pub fn bit(&self, element: usize, predicate: usize) -> bool {
        self.bits[element][predicate]
    }

    pub fn bits(&self) -> &[Vec<bool>] {
        &self.bits
    }

    /// Value of the level-`n` dichotomy at an element.
    ///
    /// With `phi_eta(x)` asserting that the first `|eta|` bits of `x` equal
    /// `eta`, an element satisfies exactly one `phi_eta` at level `n` (its
    /// own prefix), so the conjunction "every satisfied level-`n` formula
    /// extends by 0" holds exactly when bit `n` is 0. Returns 0 in that
    /// case and 1 otherwise; one of the two dichotomy formulas always
    /// holds, so the result is total.
    pub fn delta_value(&self, predicate: usize, element: usize) -> Result<u8, ReductError> {
        if predicate >= self.predicates {
            return Err(ReductError::PredicateOutOfRange {
                index: predicate,
                predicates: self.predicates,
            });
        }
        if element >= self.bits.len() {
            return Err(ReductError::ElementOutOfRange {
                index: element,
                size: self.bits.len(),
            });
        }
        Ok(u8::from(self.bits[element][predicate]))
    }

    pub fn to_json(&self) -> String {
        let file = UnaryFile {
            size: self.bits.len(),
            predicates: self.predicates,
            bits: self
                .bits
                .iter()
                .map(|row| row.iter().map(|&b| u8::from(b)).collect())
                .collect(),
        };
        let mut out = serde_json::to_string_pretty(&file).expect("serializable");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self, ReductError> {
        let file: UnaryFile = serde_json::from_str(text)?;
        if file.bits.len() != file.size {
            return Err(ReductError::Schema(format!(
                "{} bit rows for size {}",
                file.bits.len(),
                file.size
            )));
        }
        let bits = file
            .bits
            .iter()
            .enumerate()
            .map(|(index, row)| {
                row.iter()
                    .map(|&bit| match bit {
                        0 => Ok(false),
                        1 => Ok(true),
                        other => Err(ReductError::Schema(format!(
                            "element {index} has bit value {other}, expected 0 or 1"
                        ))),
                    })
                    .collect::<Result<Vec<bool>, _>>()
            })
            .collect::<Result<Vec<Vec<bool>>, _>>()?;
        UnaryStructure::new(file.predicates, bits)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct UnaryFile {
    size: usize,
    predicates: usize,
    bits: Vec<Vec<u8>>,
}

/// The structure of dichotomy relations: relation `n` identifies elements
/// with equal level-`n` delta value, which on a unary structure is the
/// bit-`n` split. Every relation has at most two classes.
pub fn cb_reduct(unary: &UnaryStructure) -> EqStructure {
    let rows = (0..unary.predicate_count())
        .map(|n| {
            (0..unary.size())
                .map(|x| u32::from(unary.delta_value(n, x).expect("indices in range")))
                .collect()
        })
        .collect();
    EqStructure::from_labels(rows).expect("rows share the element count")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::branches::enumerate_branches;
    use crate::structures::{build_ambient, TaggedElement};
    use proptest::prelude::*;

    fn counts(raw: &[u32]) -> ClassCounts {
        ClassCounts::new(raw.to_vec(), false).unwrap()
    }

    fn full_structure(c: &ClassCounts) -> EqStructure {
        let elements: Vec<TaggedElement> = enumerate_branches(c)
            .into_iter()
            .map(TaggedElement::a)
            .collect();
        build_ambient(c, &elements).unwrap()
    }

    #[test]
    fn block_partition_examples() {
        let bp = block_partition(&counts(&[2, 2, 2, 2, 2, 2])).unwrap();
        assert_eq!(bp.blocks(), &[(0, 1), (1, 3), (3, 6)]);
        assert_eq!(bp.products(), &[2, 4, 8]);
        assert_eq!(bp.dropped(), None);

        let bp = block_partition(&counts(&[2, 3, 4, 5])).unwrap();
        assert_eq!(bp.blocks(), &[(0, 1), (1, 2), (2, 3), (3, 4)]);
        assert_eq!(bp.products(), &[2, 3, 4, 5]);

        let bp = block_partition(&counts(&[3, 2, 2])).unwrap();
        assert_eq!(bp.blocks(), &[(0, 1), (1, 3)]);
        assert_eq!(bp.products(), &[3, 4]);
    }

    #[test]
    fn block_partition_reports_dropped_remainder() {
        let bp = block_partition(&counts(&[2, 2])).unwrap();
        assert_eq!(bp.blocks(), &[(0, 1)]);
        assert_eq!(bp.dropped(), Some((1, 2)));
    }

    #[test]
    fn block_partition_rejects_small_counts() {
        assert_eq!(
            block_partition(&counts(&[2, 1, 2])).unwrap_err(),
            ReductError::CountBelowTwo { index: 1, value: 1 }
        );
    }

    #[test]
    fn coarsen_examples() {
        let c = counts(&[2, 2, 2]);
        let s = full_structure(&c);
        let bp = BlockPartition::from_blocks(vec![(0, 1), (1, 3)], &c).unwrap();
        let coarse = coarsen(&s, &bp).unwrap();
        assert_eq!(coarse.relation_count(), 2);
        assert_eq!(coarse.relation_partition(0).class_count(), 2);
        assert_eq!(coarse.relation_partition(1).class_count(), 4);

        // singleton blocks copy the structure relation by relation
        let singles = BlockPartition::from_blocks(vec![(0, 1), (1, 2), (2, 3)], &c).unwrap();
        let copy = coarsen(&s, &singles).unwrap();
        for n in 0..3 {
            assert_eq!(copy.relation_labels(n), s.relation_labels(n));
        }

        // one block covering everything is the all-relation meet
        let whole = BlockPartition::from_blocks(vec![(0, 3)], &c).unwrap();
        let meet = coarsen(&s, &whole).unwrap();
        assert_eq!(meet.relation_count(), 1);
        assert_eq!(
            meet.relation_labels(0),
            s.e_infinity().labels()
        );
    }

    #[test]
    fn coarsen_rejects_out_of_range_blocks() {
        let c = counts(&[2, 2]);
        let s = full_structure(&c);
        let bad = BlockPartition::from_blocks(vec![(0, 3)], &counts(&[2, 2, 2])).unwrap();
        assert!(matches!(
            coarsen(&s, &bad),
            Err(ReductError::BlockOutOfRange { .. })
        ));
    }

    #[test]
    fn coarsened_full_structure_cross_cuts_at_the_products() {
        for raw in [vec![2, 2, 2], vec![3, 2, 2], vec![2, 2, 3, 2]] {
            let c = counts(&raw);
            let s = full_structure(&c);
            let bp = block_partition(&c).unwrap();
            let coarse = coarsen(&s, &bp).unwrap();
            let product_counts = bp.products_as_counts().unwrap();
            let report = coarse.check_cross_cutting(&product_counts).unwrap();
            assert!(report.passed(), "counts {raw:?}");
        }
    }

    #[test]
    fn coarsening_composes() {
        let c = counts(&[2, 2, 2, 2, 2, 2]);
        let s = full_structure(&c);
        let first = block_partition(&c).unwrap();
        let coarse = coarsen(&s, &first).unwrap();
        // regroup the three blocks as {0} and {1,2}
        let second = BlockPartition::from_blocks(
            vec![(0, 1), (1, 3)],
            &first.products_as_counts().unwrap(),
        )
        .unwrap();
        let twice = coarsen(&coarse, &second).unwrap();
        let composed = BlockPartition::from_blocks(vec![(0, 1), (1, 6)], &c).unwrap();
        let once = coarsen(&s, &composed).unwrap();
        assert_eq!(twice, once);
    }

    #[test]
    fn delta_value_examples() {
        let u = UnaryStructure::new(
            3,
            vec![
                vec![true, false, true],
                vec![false, false, false],
                vec![true, true, true],
            ],
        )
        .unwrap();
        assert_eq!(u.delta_value(1, 0).unwrap(), 0);
        for n in 0..3 {
            assert_eq!(u.delta_value(n, 1).unwrap(), 0);
        }
        assert_eq!(u.delta_value(2, 2).unwrap(), 1);
        assert!(matches!(
            u.delta_value(3, 0),
            Err(ReductError::PredicateOutOfRange { .. })
        ));
    }

    /// Literal evaluation of the level-`n` dichotomy formulas over the
    /// full prefix tree, as an oracle for `delta_value`.
    fn delta_oracle(u: &UnaryStructure, n: usize, x: usize) -> (bool, bool) {
        let phi = |eta: &[bool], x: usize| eta.iter().enumerate().all(|(i, &b)| u.bit(x, i) == b);
        let mut delta0 = true;
        let mut delta1 = true;
        for mask in 0u32..(1 << n) {
            let eta: Vec<bool> = (0..n).map(|i| mask & (1 << (n - 1 - i)) != 0).collect();
            if phi(&eta, x) {
                let mut eta0 = eta.clone();
                eta0.push(false);
                let mut eta1 = eta;
                eta1.push(true);
                delta0 &= phi(&eta0, x);
                delta1 &= phi(&eta1, x);
            }
        }
        (delta0, delta1)
    }

    #[test]
    fn delta_value_matches_the_formula_oracle() {
        for predicates in 1..=4usize {
            let u = UnaryStructure::full_pattern(predicates);
            for x in 0..u.size() {
                for n in 0..predicates {
                    let (delta0, delta1) = delta_oracle(&u, n, x);
                    // the dichotomy is total and exclusive on unary structures
                    assert!(delta0 ^ delta1);
                    assert_eq!(u.delta_value(n, x).unwrap(), u8::from(!delta0));
                }
            }
        }
    }

    #[test]
    fn cb_reduct_of_full_pattern() {
        let u = UnaryStructure::full_pattern(3);
        let s = cb_reduct(&u);
        assert_eq!(s.relation_count(), 3);
        for n in 0..3 {
            assert_eq!(s.relation_partition(n).class_count(), 2);
        }
        assert_eq!(s.e_infinity().class_count(), 8);
        let two = ClassCounts::new(vec![2, 2, 2], false).unwrap();
        assert!(s.check_cross_cutting(&two).unwrap().passed());
    }

    #[test]
    fn cb_reduct_degenerate_cases() {
        let single = UnaryStructure::new(2, vec![vec![true, false]]).unwrap();
        let s = cb_reduct(&single);
        for n in 0..2 {
            assert_eq!(s.relation_partition(n).class_count(), 1);
        }

        let twins = UnaryStructure::new(2, vec![vec![true, false]; 2]).unwrap();
        let s = cb_reduct(&twins);
        for n in 0..2 {
            assert_eq!(s.relation_partition(n).class_count(), 1);
        }
        assert_eq!(s.e_infinity().size_multiset(), vec![2]);
    }

    #[test]
    fn unary_json_round_trip() {
        let u = UnaryStructure::full_pattern(2);
        let back = UnaryStructure::from_json(&u.to_json()).unwrap();
        assert_eq!(u, back);
        assert!(UnaryStructure::from_json(
            r#"{"size": 1, "predicates": 1, "bits": [[2]]}"#
        )
        .is_err());
    }

    proptest! {
        #[test]
        fn block_products_strictly_increase(
            raw in proptest::collection::vec(2u32..10, 1..=20)
        ) {
            let bp = block_partition(&counts(&raw)).unwrap();
            for window in bp.products().windows(2) {
                prop_assert!(window[0] < window[1]);
            }
            // blocks tile an initial segment with no gaps
            let mut expected = 0usize;
            for &(start, end) in bp.blocks() {
                prop_assert_eq!(start, expected);
                prop_assert!(end > start);
                expected = end;
            }
            match bp.dropped() {
                Some((start, end)) => {
                    prop_assert_eq!(start, expected);
                    prop_assert_eq!(end, raw.len());
                }
                None => prop_assert_eq!(expected, raw.len()),
            }
        }

        #[test]
        fn cb_reduct_relations_have_at_most_two_classes(
            bits in proptest::collection::vec(
                proptest::collection::vec(proptest::bool::ANY, 4), 0..=12)
        ) {
            let u = UnaryStructure::new(4, bits).unwrap();
            let s = cb_reduct(&u);
            for n in 0..s.relation_count() {
                prop_assert!(s.relation_partition(n).class_count() <= 2);
            }
        }
    }
}
