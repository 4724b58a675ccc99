//! Finite structures in a language of equivalence relations.
//!
//! Each relation is stored as one class label per element, normalized to
//! `0..classes` in order of first occurrence. Construction from tagged
//! branches follows two rules: elements with the same branch are related
//! under every relation regardless of tag, and two elements are related
//! under relation `n` exactly when their branches agree at coordinate `n`.
//!
//! The module also provides partition meets, the all-relation meet
//! (`e_infinity`), the cross-cutting check (every nonempty subset of
//! relations meets to exactly the product number of classes), and a
//! brute-force isomorphism search whose witnesses are re-checkable by an
//! independent validator.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::branches::{Branch, ClassCounts};

/// Subset enumeration in the cross-cut check is exponential in the
/// relation count; refuse beyond this many relations.
pub const MAX_CROSSCUT_RELATIONS: usize = 16;

/// Default element cap for the isomorphism search.
pub const MAX_ISO_SIZE: usize = 64;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StructureError {
    #[error("duplicate element: branch {branch:?} with tag {tag}")]
    DuplicateElement { branch: Vec<u32>, tag: Tag },
    #[error("branch incompatible with counts: {0}")]
    BadBranch(#[from] crate::branches::BranchError),
    #[error("relation index {index} out of range for {relations} relations")]
    RelationOutOfRange { index: usize, relations: usize },
    #[error("relation {relation} has {found} labels, expected {expected}")]
    LabelLengthMismatch {
        relation: usize,
        expected: usize,
        found: usize,
    },
    #[error("cross-cut check supports at most {max} relations, structure has {found}")]
    CrossCutBoundExceeded { max: usize, found: usize },
    #[error("isomorphism search supports at most {max} elements, structure has {found}")]
    IsoSizeBoundExceeded { max: usize, found: usize },
    #[error("structures have different relation counts ({left} vs {right})")]
    RelationCountMismatch { left: usize, right: usize },
    #[error("structure file: {0}")]
    Schema(String),
    #[error("structure file is not valid JSON: {0}")]
    Json(String),
}

impl From<serde_json::Error> for StructureError {
    fn from(error: serde_json::Error) -> Self {
        StructureError::Json(error.to_string())
    }
}

/// Which of the two paired sorts an element came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Tag {
    A,
    B,
}

impl std::fmt::Display for Tag {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Tag::A => write!(f, "A"),
            Tag::B => write!(f, "B"),
        }
    }
}

/// A branch together with its sort tag; the identity of an element in an
/// ambient structure.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct TaggedElement {
    pub branch: Branch,
    pub tag: Tag,
}

impl TaggedElement {
    pub fn a(branch: Branch) -> Self {
        Self {
            branch,
            tag: Tag::A,
        }
    }

    pub fn b(branch: Branch) -> Self {
        Self {
            branch,
            tag: Tag::B,
        }
    }
}

/// A partition of `0..len` given by normalized class labels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Partition {
    labels: Vec<u32>,
    classes: usize,
}

impl Partition {
    /// Normalizes arbitrary keys into labels `0..classes` by first occurrence.
    pub fn from_keys<K: std::hash::Hash + Eq>(keys: impl IntoIterator<Item = K>) -> Self {
        let mut seen: HashMap<K, u32> = HashMap::new();
        let mut labels = Vec::new();
        for key in keys {
            let next = seen.len() as u32;
            let label = *seen.entry(key).or_insert(next);
            labels.push(label);
        }
        let classes = seen.len();
        Self { labels, classes }
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.classes
    }

    pub fn same_class(&self, u: usize, v: usize) -> bool {
        self.labels[u] == self.labels[v]
    }

    /// Class membership lists, indexed by label.
    pub fn class_members(&self) -> Vec<Vec<usize>> {
        let mut members = vec![Vec::new(); self.classes];
        for (element, &label) in self.labels.iter().enumerate() {
            members[label as usize].push(element);
        }
        members
    }

    /// Class sizes in ascending order (an isomorphism invariant).
    pub fn size_multiset(&self) -> Vec<usize> {
        let mut sizes: Vec<usize> = self.class_members().iter().map(Vec::len).collect();
        sizes.sort_unstable();
        sizes
    }
}

/// A finite structure whose relations are all equivalence relations,
/// stored as normalized per-element class labels. `origin`, when present,
/// certifies each element as a tagged branch.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EqStructure {
    size: usize,
    labels: Vec<Vec<u32>>,
    origin: Option<Vec<TaggedElement>>,
}

impl EqStructure {
    /// Builds from raw labels, renormalizing each relation.
    pub fn from_labels(raw: Vec<Vec<u32>>) -> Result<Self, StructureError> {
        let size = raw.first().map_or(0, Vec::len);
        for (relation, row) in raw.iter().enumerate() {
            if row.len() != size {
                return Err(StructureError::LabelLengthMismatch {
                    relation,
                    expected: size,
                    found: row.len(),
                });
            }
        }
        let labels = raw
            .into_iter()
            .map(|row| Partition::from_keys(row).labels)
            .collect();
        Ok(Self {
            size,
            labels,
            origin: None,
        })
    }

    pub(crate) fn with_origin(mut self, origin: Vec<TaggedElement>) -> Self {
        self.origin = Some(origin);
        self
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn relation_count(&self) -> usize {
        self.labels.len()
    }

    pub fn relation_labels(&self, n: usize) -> &[u32] {
        &self.labels[n]
    }

    pub fn label(&self, n: usize, element: usize) -> u32 {
        self.labels[n][element]
    }

    pub fn origin(&self) -> Option<&[TaggedElement]> {
        self.origin.as_deref()
    }

    pub fn relation_partition(&self, n: usize) -> Partition {
        Partition::from_keys(self.labels[n].iter().copied())
    }

    /// The element-wise label column across all relations; recovers the
    /// branch up to renaming of values when no certificate is present.
    pub fn label_column(&self, element: usize) -> Vec<u32> {
        self.labels.iter().map(|row| row[element]).collect()
    }

    /// Meet (common refinement) of the selected relations. An empty
    /// selection yields the one-class partition by convention.
    pub fn meet_partition(&self, relations: &[usize]) -> Result<Partition, StructureError> {
        for &index in relations {
            if index >= self.labels.len() {
                return Err(StructureError::RelationOutOfRange {
                    index,
                    relations: self.labels.len(),
                });
            }
        }
        let keys = (0..self.size).map(|element| {
            relations
                .iter()
                .map(|&n| self.labels[n][element])
                .collect::<Vec<u32>>()
        });
        Ok(Partition::from_keys(keys))
    }

    /// The meet over all relations.
    pub fn e_infinity(&self) -> Partition {
        let all: Vec<usize> = (0..self.labels.len()).collect();
        self.meet_partition(&all).expect("indices in range")
    }

    /// Checks that every nonempty subset `F` of relations meets to exactly
    /// the product of the corresponding counts, with the default relation
    /// bound.
    pub fn check_cross_cutting(&self, counts: &ClassCounts) -> Result<CrossCutReport, StructureError> {
        self.check_cross_cutting_bounded(counts, MAX_CROSSCUT_RELATIONS)
    }

    pub fn check_cross_cutting_bounded(
        &self,
        counts: &ClassCounts,
        max_relations: usize,
    ) -> Result<CrossCutReport, StructureError> {
        let m = self.labels.len();
        if m > max_relations {
            return Err(StructureError::CrossCutBoundExceeded {
                max: max_relations,
                found: m,
            });
        }
        if counts.len() != m {
            return Err(StructureError::RelationCountMismatch {
                left: m,
                right: counts.len(),
            });
        }
        let mut checked = 0usize;
        for mask in 1u32..(1u32 << m) {
            let subset: Vec<usize> = (0..m).filter(|&n| mask & (1 << n) != 0).collect();
            let expected = subset
                .iter()
                .try_fold(1u64, |acc, &n| acc.checked_mul(u64::from(counts.get(n))))
                .unwrap_or(u64::MAX);
            let actual = self.meet_partition(&subset)?.class_count() as u64;
            checked += 1;
            if actual != expected {
                return Ok(CrossCutReport {
                    subsets_checked: checked,
                    failure: Some(CrossCutFailure {
                        subset,
                        expected,
                        actual,
                    }),
                });
            }
        }
        Ok(CrossCutReport {
            subsets_checked: checked,
            failure: None,
        })
    }

    pub fn to_json(&self) -> String {
        let file = StructureFile::from(self);
        let mut out = serde_json::to_string_pretty(&file).expect("serializable");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self, StructureError> {
        let file: StructureFile = serde_json::from_str(text)?;
        file.try_into()
    }
}

/// Builds the ambient structure on the given tagged branches: relation `n`
/// groups elements by branch value at coordinate `n`, ignoring tags.
pub fn build_ambient(
    counts: &ClassCounts,
    elements: &[TaggedElement],
) -> Result<EqStructure, StructureError> {
    let mut seen: HashMap<(&[u32], Tag), ()> = HashMap::new();
    for element in elements {
        Branch::checked(element.branch.values().to_vec(), counts)?;
        if seen
            .insert((element.branch.values(), element.tag), ())
            .is_some()
        {
            return Err(StructureError::DuplicateElement {
                branch: element.branch.values().to_vec(),
                tag: element.tag,
            });
        }
    }
    let labels = (0..counts.len())
        .map(|n| {
            Partition::from_keys(elements.iter().map(|e| e.branch.value_at(n)))
                .labels()
                .to_vec()
        })
        .collect();
    Ok(EqStructure {
        size: elements.len(),
        labels,
        origin: None,
    }
    .with_origin(elements.to_vec()))
}

/// Outcome of the cross-cutting check: either every subset matched, or the
/// first failing subset in mask order with expected and actual counts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CrossCutReport {
    pub subsets_checked: usize,
    pub failure: Option<CrossCutFailure>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CrossCutFailure {
    pub subset: Vec<usize>,
    pub expected: u64,
    pub actual: u64,
}

impl CrossCutReport {
    pub fn passed(&self) -> bool {
        self.failure.is_none()
    }
}

/// A claimed isomorphism: element `u` of the left structure maps to
/// `mapping[u]` in the right one.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IsoWitness {
    mapping: Vec<usize>,
}

impl IsoWitness {
    pub fn new(mapping: Vec<usize>) -> Self {
        Self { mapping }
    }

    pub fn identity(size: usize) -> Self {
        Self {
            mapping: (0..size).collect(),
        }
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn apply(&self, element: usize) -> usize {
        self.mapping[element]
    }

    /// Independent check against the raw label data: the mapping must be a
    /// bijection and preserve every relation in both directions. Shares no
    /// state with the search that produced the witness.
    pub fn validate(&self, left: &EqStructure, right: &EqStructure) -> bool {
        if left.size() != right.size()
            || left.relation_count() != right.relation_count()
            || self.mapping.len() != left.size()
        {
            return false;
        }
        let mut hit = vec![false; right.size()];
        for &image in &self.mapping {
            if image >= right.size() || hit[image] {
                return false;
            }
            hit[image] = true;
        }
        for n in 0..left.relation_count() {
            for u in 0..left.size() {
                for v in (u + 1)..left.size() {
                    let same_left = left.label(n, u) == left.label(n, v);
                    let same_right =
                        right.label(n, self.mapping[u]) == right.label(n, self.mapping[v]);
                    if same_left != same_right {
                        return false;
                    }
                }
            }
        }
        true
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct IsoOptions {
    pub max_size: usize,
    /// With pruning off, the invariant prechecks and the class-size
    /// candidate filter are skipped; the verdict and the returned witness
    /// must not change, only the runtime.
    pub prune: bool,
}

impl Default for IsoOptions {
    fn default() -> Self {
        Self {
            max_size: MAX_ISO_SIZE,
            prune: true,
        }
    }
}

/// Per-element invariant used for search ordering and (under pruning) for
/// candidate filtering: the element's meet-class size followed by its
/// class size under each relation.
fn signatures(s: &EqStructure) -> Vec<Vec<usize>> {
    let meet = s.e_infinity();
    let meet_sizes: Vec<usize> = {
        let members = meet.class_members();
        meet.labels()
            .iter()
            .map(|&label| members[label as usize].len())
            .collect()
    };
    let mut sigs = vec![Vec::with_capacity(s.relation_count() + 1); s.size()];
    for (element, sig) in sigs.iter_mut().enumerate() {
        sig.push(meet_sizes[element]);
    }
    for n in 0..s.relation_count() {
        let partition = s.relation_partition(n);
        let members = partition.class_members();
        for (element, sig) in sigs.iter_mut().enumerate() {
            sig.push(members[partition.labels()[element] as usize].len());
        }
    }
    sigs
}

fn sorted_size_multisets(s: &EqStructure) -> Vec<Vec<usize>> {
    (0..s.relation_count())
        .map(|n| s.relation_partition(n).size_multiset())
        .collect()
}

pub fn find_isomorphism(
    left: &EqStructure,
    right: &EqStructure,
) -> Result<Option<IsoWitness>, StructureError> {
    find_isomorphism_with(left, right, IsoOptions::default())
}

/// Backtracking search for an isomorphism, deterministic: elements of both
/// structures are ordered by (meet-class size, per-relation class sizes,
/// index) and the first witness in that search order is returned.
pub fn find_isomorphism_with(
    left: &EqStructure,
    right: &EqStructure,
    options: IsoOptions,
) -> Result<Option<IsoWitness>, StructureError> {
    if left.relation_count() != right.relation_count() {
        return Err(StructureError::RelationCountMismatch {
            left: left.relation_count(),
            right: right.relation_count(),
        });
    }
    for s in [left, right] {
        if s.size() > options.max_size {
            return Err(StructureError::IsoSizeBoundExceeded {
                max: options.max_size,
                found: s.size(),
            });
        }
    }
    if left.size() != right.size() {
        return Ok(None);
    }
    if options.prune {
        if sorted_size_multisets(left) != sorted_size_multisets(right) {
            return Ok(None);
        }
        if left.e_infinity().size_multiset() != right.e_infinity().size_multiset() {
            return Ok(None);
        }
    }

    let size = left.size();
    let sig_left = signatures(left);
    let sig_right = signatures(right);
    let order = |sigs: &[Vec<usize>]| {
        let mut order: Vec<usize> = (0..size).collect();
        order.sort_by(|&a, &b| sigs[a].cmp(&sigs[b]).then(a.cmp(&b)));
        order
    };
    let left_order = order(&sig_left);
    let right_order = order(&sig_right);

    let class_count = |s: &EqStructure, n: usize| {
        s.relation_labels(n)
            .iter()
            .map(|&l| l as usize + 1)
            .max()
            .unwrap_or(0)
    };
    let mut state = Search {
        left,
        right,
        left_order: &left_order,
        right_order: &right_order,
        sig_left: &sig_left,
        sig_right: &sig_right,
        prune: options.prune,
        mapping: vec![None; size],
        used: vec![false; size],
        left_to_right: (0..left.relation_count())
            .map(|n| vec![None; class_count(left, n)])
            .collect(),
        right_to_left: (0..right.relation_count())
            .map(|n| vec![None; class_count(right, n)])
            .collect(),
    };
    Ok(state.run(0).map(IsoWitness::new))
}

/// Backtracking state: the partial element assignment plus, per relation,
/// the class correspondence it forces in both directions.
struct Search<'a> {
    left: &'a EqStructure,
    right: &'a EqStructure,
    left_order: &'a [usize],
    right_order: &'a [usize],
    sig_left: &'a [Vec<usize>],
    sig_right: &'a [Vec<usize>],
    prune: bool,
    mapping: Vec<Option<usize>>,
    used: Vec<bool>,
    left_to_right: Vec<Vec<Option<u32>>>,
    right_to_left: Vec<Vec<Option<u32>>>,
}

impl Search<'_> {
    fn run(&mut self, depth: usize) -> Option<Vec<usize>> {
        if depth == self.left.size() {
            return Some(self.mapping.iter().map(|x| x.unwrap()).collect());
        }
        let u = self.left_order[depth];
        for position in 0..self.right.size() {
            let x = self.right_order[position];
            if self.used[x] {
                continue;
            }
            if self.prune && self.sig_right[x] != self.sig_left[u] {
                continue;
            }
            let (consistent, bound) = self.bind(u, x);
            if consistent {
                self.mapping[u] = Some(x);
                self.used[x] = true;
                if let Some(witness) = self.run(depth + 1) {
                    return Some(witness);
                }
                self.mapping[u] = None;
                self.used[x] = false;
            }
            self.unbind(u, x, &bound);
        }
        None
    }

    /// Records the class correspondences implied by mapping `u` to `x`.
    /// Returns whether they are consistent with what is already bound, and
    /// which relations acquired a new binding (to be undone either way).
    fn bind(&mut self, u: usize, x: usize) -> (bool, Vec<usize>) {
        let mut bound = Vec::new();
        for n in 0..self.left.relation_count() {
            let cl = self.left.label(n, u) as usize;
            let cr = self.right.label(n, x) as usize;
            match (self.left_to_right[n][cl], self.right_to_left[n][cr]) {
                (None, None) => {
                    self.left_to_right[n][cl] = Some(cr as u32);
                    self.right_to_left[n][cr] = Some(cl as u32);
                    bound.push(n);
                }
                (Some(r), Some(l)) if r as usize == cr && l as usize == cl => {}
                _ => return (false, bound),
            }
        }
        (true, bound)
    }

    fn unbind(&mut self, u: usize, x: usize, bound: &[usize]) {
        for &n in bound {
            let cl = self.left.label(n, u) as usize;
            let cr = self.right.label(n, x) as usize;
            self.left_to_right[n][cl] = None;
            self.right_to_left[n][cr] = None;
        }
    }
}

// --- file format ---------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
struct RelationEntry {
    name: String,
    labels: Vec<u32>,
}

#[derive(Debug, Serialize, Deserialize)]
struct StructureFile {
    size: usize,
    relations: Vec<RelationEntry>,
    #[serde(skip_serializing_if = "Option::is_none")]
    branches: Option<Vec<Vec<u32>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    tags: Option<Vec<String>>,
}

impl From<&EqStructure> for StructureFile {
    fn from(s: &EqStructure) -> Self {
        let relations = s
            .labels
            .iter()
            .enumerate()
            .map(|(n, labels)| RelationEntry {
                name: format!("E{n}"),
                labels: labels.clone(),
            })
            .collect();
        let (branches, tags) = match &s.origin {
            Some(origin) => (
                Some(origin.iter().map(|e| e.branch.values().to_vec()).collect()),
                Some(origin.iter().map(|e| e.tag.to_string()).collect()),
            ),
            None => (None, None),
        };
        Self {
            size: s.size,
            relations,
            branches,
            tags,
        }
    }
}

impl TryFrom<StructureFile> for EqStructure {
    type Error = StructureError;

    fn try_from(file: StructureFile) -> Result<Self, StructureError> {
        let raw: Vec<Vec<u32>> = file.relations.into_iter().map(|r| r.labels).collect();
        for (relation, row) in raw.iter().enumerate() {
            if row.len() != file.size {
                return Err(StructureError::Schema(format!(
                    "relation {relation} has {} labels, size field says {}",
                    row.len(),
                    file.size
                )));
            }
        }
        let structure = EqStructure::from_labels(raw)?;
        let origin = match (file.branches, file.tags) {
            (None, None) => None,
            (None, Some(_)) => {
                return Err(StructureError::Schema(
                    "tags present without branches".into(),
                ))
            }
            (Some(branches), tags) => {
                if branches.len() != file.size {
                    return Err(StructureError::Schema(format!(
                        "{} branches for {} elements",
                        branches.len(),
                        file.size
                    )));
                }
                let tags = match tags {
                    Some(tags) => {
                        if tags.len() != file.size {
                            return Err(StructureError::Schema(format!(
                                "{} tags for {} elements",
                                tags.len(),
                                file.size
                            )));
                        }
                        tags.into_iter()
                            .map(|t| match t.as_str() {
                                "A" => Ok(Tag::A),
                                "B" => Ok(Tag::B),
                                other => Err(StructureError::Schema(format!(
                                    "unknown tag {other:?}, expected \"A\" or \"B\""
                                ))),
                            })
                            .collect::<Result<Vec<_>, _>>()?
                    }
                    None => vec![Tag::A; file.size],
                };
                let elements: Vec<TaggedElement> = branches
                    .into_iter()
                    .zip(tags)
                    .map(|(values, tag)| TaggedElement {
                        branch: Branch::from_values(values),
                        tag,
                    })
                    .collect();
                // Certificate must agree with the labels: same-coordinate
                // branch values coincide exactly when labels do.
                for (n, labels) in structure.labels.iter().enumerate() {
                    let mut by_class: HashMap<u32, u32> = HashMap::new();
                    let mut by_value: HashMap<u32, u32> = HashMap::new();
                    for (element, &label) in labels.iter().enumerate() {
                        let branch = &elements[element].branch;
                        if branch.len() != structure.labels.len() {
                            return Err(StructureError::Schema(format!(
                                "branch for element {element} has length {}, expected {}",
                                branch.len(),
                                structure.labels.len()
                            )));
                        }
                        let value = branch.value_at(n);
                        let prior_value = by_class.entry(label).or_insert(value);
                        let prior_label = by_value.entry(value).or_insert(label);
                        if *prior_value != value || *prior_label != label {
                            return Err(StructureError::Schema(format!(
                                "branch certificate disagrees with relation {n} at element {element}"
                            )));
                        }
                    }
                }
                Some(elements)
            }
        };
        Ok(match origin {
            Some(origin) => structure.with_origin(origin),
            None => structure,
        })
    }
}
