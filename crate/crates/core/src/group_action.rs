//! The truncated product group of coordinate-wise permutations and its
//! action on branches.
//!
//! A group element carries one permutation of `{1..h(n)}` per coordinate
//! and acts on a branch value-by-value. `respecting_element` constructs,
//! for a permutation of the family indices, an element whose action
//! carries each family member onto the tail-equivalence class of its
//! image: at coordinate `n` the member `j` is pinned to its target
//! exactly when both its own threshold and its image's threshold have
//! been passed, which keeps the pinned values injective on both sides.

use thiserror::Error;

use crate::branches::{Branch, BranchFamily, ClassCounts};
use crate::structures::{EqStructure, IsoWitness, Tag};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ActionError {
    #[error("coordinate {coord}: images {images:?} are not a permutation of 1..={size}")]
    NotAPermutation {
        coord: usize,
        size: u32,
        images: Vec<u32>,
    },
    #[error("element has {element} coordinates, branch has {branch}")]
    LengthMismatch { element: usize, branch: usize },
    #[error("branch value {value} at coordinate {coord} is outside 1..={size}")]
    ValueOutOfRange { coord: usize, value: u32, size: u32 },
    #[error("sigma {0:?} is not a permutation of 0..{1}")]
    SigmaNotPermutation(Vec<usize>, usize),
    #[error("constraint collision at coordinate {coord}: value {value} already assigned")]
    ConstraintCollision { coord: usize, value: u32 },
    #[error("structure has no branch certificate")]
    MissingOrigin,
    #[error("closure failure: image of branch {branch:?} (tag {tag}) is not in the structure")]
    ClosureFailure { branch: Vec<u32>, tag: Tag },
    #[error("induced map failed the automorphism check")]
    NotAutomorphism,
}

/// One permutation per coordinate; `perms[n]` lists the images of
/// `1..=h(n)` in order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GroupElement {
    perms: Vec<Vec<u32>>,
}

impl GroupElement {
    pub fn identity(counts: &ClassCounts) -> Self {
        let perms = (0..counts.len())
            .map(|n| (1..=counts.get(n)).collect())
            .collect();
        Self { perms }
    }

    /// Validates that every coordinate is a genuine permutation.
    pub fn from_images(perms: Vec<Vec<u32>>) -> Result<Self, ActionError> {
        for (coord, images) in perms.iter().enumerate() {
            let size = images.len() as u32;
            let mut seen = vec![false; images.len()];
            for &image in images {
                if image < 1 || image > size || seen[(image - 1) as usize] {
                    return Err(ActionError::NotAPermutation {
                        coord,
                        size,
                        images: images.clone(),
                    });
                }
                seen[(image - 1) as usize] = true;
            }
        }
        Ok(Self { perms })
    }

    pub fn coordinates(&self) -> usize {
        self.perms.len()
    }

    pub fn degree_at(&self, n: usize) -> u32 {
        self.perms[n].len() as u32
    }

    pub fn image_at(&self, n: usize, value: u32) -> u32 {
        self.perms[n][(value - 1) as usize]
    }

    pub fn images(&self) -> &[Vec<u32>] {
        &self.perms
    }

    /// Coordinate-wise action on a branch.
    pub fn act(&self, branch: &Branch) -> Result<Branch, ActionError> {
        if branch.len() != self.perms.len() {
            return Err(ActionError::LengthMismatch {
                element: self.perms.len(),
                branch: branch.len(),
            });
        }
        let mut values = Vec::with_capacity(branch.len());
        for (coord, &value) in branch.values().iter().enumerate() {
            let size = self.degree_at(coord);
            if value < 1 || value > size {
                return Err(ActionError::ValueOutOfRange { coord, value, size });
            }
            values.push(self.image_at(coord, value));
        }
        Ok(Branch::from_values(values))
    }

    /// Composition in action order: `a.compose(&b)` acts as `a` after `b`.
    pub fn compose(&self, other: &GroupElement) -> Result<GroupElement, ActionError> {
        if self.perms.len() != other.perms.len() {
            return Err(ActionError::LengthMismatch {
                element: self.perms.len(),
                branch: other.perms.len(),
            });
        }
        let perms = self
            .perms
            .iter()
            .zip(&other.perms)
            .enumerate()
            .map(|(coord, (first, second))| {
                if first.len() != second.len() {
                    return Err(ActionError::NotAPermutation {
                        coord,
                        size: first.len() as u32,
                        images: second.clone(),
                    });
                }
                Ok(second.iter().map(|&v| first[(v - 1) as usize]).collect())
            })
            .collect::<Result<Vec<Vec<u32>>, _>>()?;
        Ok(GroupElement { perms })
    }

    pub fn inverse(&self) -> GroupElement {
        let perms = self
            .perms
            .iter()
            .map(|images| {
                let mut inverse = vec![0u32; images.len()];
                for (index, &image) in images.iter().enumerate() {
                    inverse[(image - 1) as usize] = index as u32 + 1;
                }
                inverse
            })
            .collect();
        GroupElement { perms }
    }
}

/// Serialized form: one line per coordinate listing the images of
/// `1..=h(n)` in order.
impl std::fmt::Display for GroupElement {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        for images in &self.perms {
            let line: Vec<String> = images.iter().map(u32::to_string).collect();
            writeln!(f, "{}", line.join(" "))?;
        }
        Ok(())
    }
}

fn check_sigma(sigma: &[usize], k: usize) -> Result<(), ActionError> {
    let mut seen = vec![false; k];
    if sigma.len() != k {
        return Err(ActionError::SigmaNotPermutation(sigma.to_vec(), k));
    }
    for &image in sigma {
        if image >= k || seen[image] {
            return Err(ActionError::SigmaNotPermutation(sigma.to_vec(), k));
        }
        seen[image] = true;
    }
    Ok(())
}

/// Constructs a group element respecting `sigma`: member `j` of the family
/// is mapped onto the tail class of member `sigma(j)`.
///
/// At coordinate `n`, the value `f_j(n)` is pinned to `f_{sigma(j)}(n)` for
/// every `j` with `max(N_j, N_{sigma(j)}) <= n`; pinned sources are then
/// pairwise distinct by the family invariant, and so are the pinned
/// targets (the invariant applied to the image indices). The partial
/// permutation is completed by sending the remaining values to the
/// remaining targets in increasing order. The result satisfies
/// `act(g, f_i)` tail-equal to `f_{sigma(i)}` from `max(N_i, N_{sigma(i)})`.
pub fn respecting_element(
    family: &BranchFamily,
    sigma: &[usize],
) -> Result<GroupElement, ActionError> {
    let k = family.len();
    check_sigma(sigma, k)?;
    let counts = family.counts();
    let mut perms = Vec::with_capacity(family.depth());
    for n in 0..family.depth() {
        let size = counts.get(n) as usize;
        let mut image: Vec<Option<u32>> = vec![None; size];
        let mut target_taken = vec![false; size];
        for j in 0..k {
            if family.threshold(j).max(family.threshold(sigma[j])) > n {
                continue;
            }
            let source = family.member(j).value_at(n);
            let target = family.member(sigma[j]).value_at(n);
            let slot = &mut image[(source - 1) as usize];
            match slot {
                Some(existing) if *existing == target => {}
                Some(_) => {
                    return Err(ActionError::ConstraintCollision {
                        coord: n,
                        value: source,
                    })
                }
                None => {
                    if target_taken[(target - 1) as usize] {
                        return Err(ActionError::ConstraintCollision {
                            coord: n,
                            value: target,
                        });
                    }
                    *slot = Some(target);
                    target_taken[(target - 1) as usize] = true;
                }
            }
        }
        let mut free_targets = (1..=size as u32).filter(|&v| !target_taken[(v - 1) as usize]);
        let images = image
            .into_iter()
            .map(|slot| match slot {
                Some(target) => target,
                None => free_targets.next().expect("counts of free slots match"),
            })
            .collect();
        perms.push(images);
    }
    Ok(GroupElement { perms })
}

/// One verified tail-agreement obligation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TailCheck {
    /// Family indices involved: `[i]` for a member check, `[i, j]` for an
    /// interleaved-pair check.
    pub indices: Vec<usize>,
    pub cutoff: usize,
    pub ok: bool,
}

/// Result of checking a group element against both respect contracts:
/// every member lands on its image's tail class, and every interleaved
/// pair lands on the interleaving of the image indices.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RespectReport {
    pub member_checks: Vec<TailCheck>,
    pub pair_checks: Vec<TailCheck>,
}

impl RespectReport {
    pub fn all_ok(&self) -> bool {
        self.member_checks.iter().all(|c| c.ok) && self.pair_checks.iter().all(|c| c.ok)
    }

    pub fn check_count(&self) -> usize {
        self.member_checks.len() + self.pair_checks.len()
    }
}

/// Verifies the respect contracts for `g` against the family and `sigma`.
/// Member `i` is checked at cutoff `max(N_i, N_{sigma(i)})`; the pair
/// `(i, j)` at the maximum of all four thresholds involved.
pub fn check_respects(
    family: &BranchFamily,
    sigma: &[usize],
    g: &GroupElement,
) -> Result<RespectReport, ActionError> {
    let k = family.len();
    check_sigma(sigma, k)?;
    let mut member_checks = Vec::with_capacity(k);
    for i in 0..k {
        let cutoff = family.threshold(i).max(family.threshold(sigma[i]));
        let image = g.act(family.member(i))?;
        let ok = image
            .tail_equal(family.member(sigma[i]), cutoff)
            .expect("family branches share a length");
        member_checks.push(TailCheck {
            indices: vec![i],
            cutoff,
            ok,
        });
    }
    let mut pair_checks = Vec::new();
    for i in 0..k {
        for j in 0..k {
            if i == j {
                continue;
            }
            let cutoff = family
                .threshold(i)
                .max(family.threshold(j))
                .max(family.threshold(sigma[i]))
                .max(family.threshold(sigma[j]));
            let interleaved = family.interleave(i, j).expect("distinct indices");
            let expected = family
                .interleave(sigma[i], sigma[j])
                .expect("sigma is a bijection");
            let image = g.act(&interleaved)?;
            let ok = image
                .tail_equal(&expected, cutoff)
                .expect("family branches share a length");
            pair_checks.push(TailCheck {
                indices: vec![i, j],
                cutoff,
                ok,
            });
        }
    }
    Ok(RespectReport {
        member_checks,
        pair_checks,
    })
}

/// The element bijection induced by `g` on a structure with a branch
/// certificate: each tagged branch maps to its image under the action,
/// which must again be an element of the structure. The returned witness
/// has been verified to be an automorphism.
pub fn induced_automorphism(
    g: &GroupElement,
    structure: &EqStructure,
) -> Result<IsoWitness, ActionError> {
    let origin = structure.origin().ok_or(ActionError::MissingOrigin)?;
    let index_of: std::collections::HashMap<(&[u32], Tag), usize> = origin
        .iter()
        .enumerate()
        .map(|(index, element)| ((element.branch.values(), element.tag), index))
        .collect();
    let mut mapping = Vec::with_capacity(origin.len());
    for element in origin {
        let image = g.act(&element.branch)?;
        match index_of.get(&(image.values(), element.tag)) {
            Some(&target) => mapping.push(target),
            None => {
                return Err(ActionError::ClosureFailure {
                    branch: element.branch.values().to_vec(),
                    tag: element.tag,
                })
            }
        }
    }
    let witness = IsoWitness::new(mapping);
    if !witness.validate(structure, structure) {
        return Err(ActionError::NotAutomorphism);
    }
    Ok(witness)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::structures::{build_ambient, TaggedElement};
    use itertools::Itertools;

    fn counts(raw: &[u32]) -> ClassCounts {
        ClassCounts::new(raw.to_vec(), false).unwrap()
    }

    fn default_family(k: usize, depth: usize) -> BranchFamily {
        BranchFamily::build(&ClassCounts::default_increasing(depth), k, depth).unwrap()
    }

    #[test]
    fn act_examples() {
        let c = counts(&[2, 3, 4, 5]);
        let swap_everywhere = GroupElement::from_images(vec![
            vec![2, 1],
            vec![2, 1, 3],
            vec![2, 1, 3, 4],
            vec![2, 1, 3, 4, 5],
        ])
        .unwrap();
        let f = Branch::from_values(vec![1, 1, 1, 1]);
        assert_eq!(swap_everywhere.act(&f).unwrap().values(), &[2, 2, 2, 2]);

        let identity = GroupElement::identity(&c);
        let g = Branch::from_values(vec![1, 3, 3, 3]);
        assert_eq!(identity.act(&g).unwrap(), g);

        let first_only = GroupElement::from_images(vec![
            vec![2, 1],
            vec![1, 2, 3],
            vec![1, 2, 3, 4],
            vec![1, 2, 3, 4, 5],
        ])
        .unwrap();
        assert_eq!(first_only.act(&g).unwrap().values(), &[2, 3, 3, 3]);
    }

    #[test]
    fn act_rejects_mismatches() {
        let c = counts(&[2, 3]);
        let identity = GroupElement::identity(&c);
        let short = Branch::from_values(vec![1]);
        assert!(matches!(
            identity.act(&short),
            Err(ActionError::LengthMismatch { .. })
        ));
        let out = Branch::from_values(vec![1, 9]);
        assert!(matches!(
            identity.act(&out),
            Err(ActionError::ValueOutOfRange { .. })
        ));
    }

    #[test]
    fn from_images_rejects_non_bijections() {
        assert!(matches!(
            GroupElement::from_images(vec![vec![1, 1]]),
            Err(ActionError::NotAPermutation { .. })
        ));
        assert!(matches!(
            GroupElement::from_images(vec![vec![0, 1]]),
            Err(ActionError::NotAPermutation { .. })
        ));
    }

    /// All group elements for small counts, by cartesian product of the
    /// coordinate symmetric groups.
    fn all_elements(c: &ClassCounts) -> Vec<GroupElement> {
        let mut result = vec![Vec::new()];
        for n in 0..c.len() {
            let perms: Vec<Vec<u32>> = (1..=c.get(n)).permutations(c.get(n) as usize).collect();
            let mut next = Vec::new();
            for prefix in &result {
                for perm in &perms {
                    let mut extended: Vec<Vec<u32>> = prefix.clone();
                    extended.push(perm.clone());
                    next.push(extended);
                }
            }
            result = next;
        }
        result
            .into_iter()
            .map(|perms| GroupElement::from_images(perms).unwrap())
            .collect()
    }

    #[test]
    fn action_axioms_exhaustive_at_small_counts() {
        let c = counts(&[2, 3]);
        let elements = all_elements(&c);
        assert_eq!(elements.len(), 12);
        let branches: Vec<Branch> = crate::branches::enumerate_branches(&c);
        let identity = GroupElement::identity(&c);
        for f in &branches {
            assert_eq!(identity.act(f).unwrap(), *f);
        }
        for g in &elements {
            for h in &elements {
                let composed = g.compose(h).unwrap();
                for f in &branches {
                    assert_eq!(
                        composed.act(f).unwrap(),
                        g.act(&h.act(f).unwrap()).unwrap()
                    );
                }
            }
            let inverse = g.inverse();
            assert_eq!(g.compose(&inverse).unwrap(), identity);
            assert_eq!(inverse.compose(g).unwrap(), identity);
        }
    }

    #[test]
    fn any_element_preserves_tail_classes() {
        let c = counts(&[2, 3]);
        let branches = crate::branches::enumerate_branches(&c);
        for g in all_elements(&c) {
            for f in &branches {
                for h in &branches {
                    for cutoff in 0..=2 {
                        assert_eq!(
                            f.tail_equal(h, cutoff).unwrap(),
                            g.act(f)
                                .unwrap()
                                .tail_equal(&g.act(h).unwrap(), cutoff)
                                .unwrap()
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn respecting_swap_of_two_members() {
        let fam = default_family(2, 4);
        let g = respecting_element(&fam, &[1, 0]).unwrap();
        // every coordinate swaps f_0(n) with f_1(n), so the images are exact
        assert_eq!(g.act(fam.member(0)).unwrap(), *fam.member(1));
        assert_eq!(g.act(fam.member(1)).unwrap(), *fam.member(0));
        assert!(check_respects(&fam, &[1, 0], &g).unwrap().all_ok());
    }

    #[test]
    fn respecting_identity_fixes_members() {
        for k in 1..=4 {
            let fam = default_family(k, 4.max(k));
            let sigma: Vec<usize> = (0..k).collect();
            let g = respecting_element(&fam, &sigma).unwrap();
            for i in 0..k {
                assert!(g
                    .act(fam.member(i))
                    .unwrap()
                    .tail_equal(fam.member(i), fam.threshold(i))
                    .unwrap());
            }
        }
    }

    #[test]
    fn respecting_double_transposition() {
        let fam = default_family(4, 4);
        let sigma = [1, 0, 3, 2];
        let g = respecting_element(&fam, &sigma).unwrap();
        let report = check_respects(&fam, &sigma, &g).unwrap();
        assert!(report.all_ok());
        // the pinned cutoff for member 2 is max(N_2, N_3) = 2
        assert_eq!(report.member_checks[2].cutoff, 2);
        assert!(g
            .act(fam.member(2))
            .unwrap()
            .tail_equal(fam.member(3), 2)
            .unwrap());
    }

    /// No group element can carry f_0 and f_2 onto f_0 and f_3 from the
    /// family thresholds alone: at coordinate 1 both targets are the value
    /// 1, while the sources differ. The achievable cutoff for a member is
    /// max of its own and its image's threshold, which is what
    /// `respecting_element` guarantees.
    #[test]
    fn family_threshold_cutoff_unachievable_for_some_sigma() {
        let fam = default_family(4, 4);
        let sigma = [0, 1, 3, 2];
        let n = 1;
        assert!(fam.threshold(0) <= n && fam.threshold(2) <= n);
        let source_a = fam.member(0).value_at(n);
        let source_b = fam.member(2).value_at(n);
        let target_a = fam.member(sigma[0]).value_at(n);
        let target_b = fam.member(sigma[2]).value_at(n);
        assert_ne!(source_a, source_b);
        assert_eq!(target_a, target_b);
        // the construction still succeeds, at the adjusted cutoffs
        let g = respecting_element(&fam, &sigma).unwrap();
        assert!(check_respects(&fam, &sigma, &g).unwrap().all_ok());
    }

    #[test]
    fn respect_contracts_hold_for_all_small_families() {
        for k in 1..=5usize {
            let depth = 4.max(k);
            let fam = default_family(k, depth);
            for sigma in (0..k).permutations(k) {
                let g = respecting_element(&fam, &sigma).unwrap();
                let report = check_respects(&fam, &sigma, &g).unwrap();
                assert!(report.all_ok(), "k={k} sigma={sigma:?}");
            }
        }
    }

    #[test]
    fn induced_automorphism_on_full_branch_structure() {
        let c = counts(&[2, 3]);
        let elements: Vec<TaggedElement> = crate::branches::enumerate_branches(&c)
            .into_iter()
            .map(TaggedElement::a)
            .collect();
        let s = build_ambient(&c, &elements).unwrap();
        // the full branch set is closed under every group element
        for g in all_elements(&c) {
            let witness = induced_automorphism(&g, &s).unwrap();
            assert!(witness.validate(&s, &s));
        }
    }

    #[test]
    fn induced_automorphism_reports_missing_image() {
        let c = counts(&[2, 3]);
        let lone = vec![TaggedElement::a(Branch::from_values(vec![1, 1]))];
        let s = build_ambient(&c, &lone).unwrap();
        let swap = GroupElement::from_images(vec![vec![2, 1], vec![1, 2, 3]]).unwrap();
        let err = induced_automorphism(&swap, &s).unwrap_err();
        assert_eq!(
            err,
            ActionError::ClosureFailure {
                branch: vec![1, 1],
                tag: Tag::A,
            }
        );
    }

    #[test]
    fn induced_automorphism_on_an_encoded_graph() {
        // two vertices joined both ways, transported along the swap: the
        // respecting element maps every universe branch exactly, so the
        // closure precondition holds
        let fam = default_family(2, 4);
        let c = fam.counts().clone();
        let d01 = fam.interleave(0, 1).unwrap();
        let d10 = fam.interleave(1, 0).unwrap();
        let elements = vec![
            TaggedElement::a(fam.member(0).clone()),
            TaggedElement::a(fam.member(1).clone()),
            TaggedElement::a(d01.clone()),
            TaggedElement::b(d01),
            TaggedElement::a(d10.clone()),
            TaggedElement::b(d10),
        ];
        let s = build_ambient(&c, &elements).unwrap();
        let g = respecting_element(&fam, &[1, 0]).unwrap();
        let witness = induced_automorphism(&g, &s).unwrap();
        assert!(witness.validate(&s, &s));
        // vertices swap, edge pairs swap
        assert_eq!(witness.apply(0), 1);
        assert_eq!(witness.apply(2), 4);
        assert_eq!(witness.apply(3), 5);
    }

    #[test]
    fn display_lists_images_per_coordinate() {
        let g = GroupElement::from_images(vec![vec![2, 1], vec![1, 3, 2]]).unwrap();
        assert_eq!(g.to_string(), "2 1\n1 3 2\n");
    }
}
