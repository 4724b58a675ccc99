//! The verification battery: every claim the library stands on, run
//! exhaustively at desk scale with exact expectations.
//!
//! Each criterion returns a pass/fail result with a deterministic detail
//! string; randomized criteria draw from a fixed-seed stream so repeated
//! runs produce byte-identical reports. Runtime ceilings are enforced
//! internally and deliberately kept out of the report text.

use std::time::{Duration, Instant};

use itertools::Itertools;
use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::branches::{enumerate_branches, BranchFamily, ClassCounts};
use crate::group_action::{check_respects, respecting_element};
use crate::reducts::{block_partition, cb_reduct, UnaryStructure};
use crate::reduction::{
    encode, enumerate_digraphs, graph_isomorphisms, graphs_isomorphic, roundtrip, transport_iso,
    ReductionParams,
};
use crate::structures::{build_ambient, find_isomorphism_with, IsoOptions, TaggedElement};

const SUITE_SEED: u64 = 0x5eed_cafe;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CriterionResult {
    pub index: usize,
    pub name: &'static str,
    pub pass: bool,
    pub detail: String,
}

impl CriterionResult {
    fn pass(index: usize, name: &'static str, detail: String) -> Self {
        Self {
            index,
            name,
            pass: true,
            detail,
        }
    }

    fn fail(index: usize, name: &'static str, detail: String) -> Self {
        Self {
            index,
            name,
            pass: false,
            detail,
        }
    }

    /// The one-line report form: `criterion N (name): PASS/FAIL — detail`.
    pub fn line(&self) -> String {
        format!(
            "criterion {} ({}): {} — {}",
            self.index,
            self.name,
            if self.pass { "PASS" } else { "FAIL" },
            self.detail
        )
    }
}

pub fn run_all() -> Vec<CriterionResult> {
    vec![
        criterion_1_roundtrip(),
        criterion_2_encoding_iff(),
        criterion_3_respect_contracts(),
        criterion_4_transport(),
        criterion_5_cross_cutting(),
        criterion_6_block_partition(),
        criterion_7_cb_reduct(),
        criterion_8_prune_independence(),
    ]
}

pub fn all_pass(results: &[CriterionResult]) -> bool {
    results.iter().all(|r| r.pass)
}

/// Criterion 1: every directed irreflexive graph on 3 and on 4 vertices
/// decodes back to exactly itself after certificate relabeling, within the
/// runtime ceiling.
pub fn criterion_1_roundtrip() -> CriterionResult {
    const INDEX: usize = 1;
    const NAME: &str = "encode/decode round trip";
    let started = Instant::now();
    let mut cases = 0usize;
    for vertices in [3usize, 4] {
        let params = match ReductionParams::default_for(vertices) {
            Ok(params) => params,
            Err(error) => return CriterionResult::fail(INDEX, NAME, error.to_string()),
        };
        for (mask, graph) in enumerate_digraphs(vertices).iter().enumerate() {
            match roundtrip(graph, &params) {
                Ok(report) if report.pass => cases += 1,
                Ok(_) => {
                    return CriterionResult::fail(
                        INDEX,
                        NAME,
                        format!("graph {vertices}v#{mask} did not round-trip exactly"),
                    )
                }
                Err(error) => {
                    return CriterionResult::fail(
                        INDEX,
                        NAME,
                        format!("graph {vertices}v#{mask}: {error}"),
                    )
                }
            }
        }
    }
    if started.elapsed() > Duration::from_secs(10) {
        return CriterionResult::fail(INDEX, NAME, "exceeded the 10 second ceiling".into());
    }
    CriterionResult::pass(
        INDEX,
        NAME,
        format!("{cases} graphs round-tripped exactly (64 on 3 vertices, 4096 on 4)"),
    )
}

fn three_vertex_verdicts(
    options: IsoOptions,
) -> Result<Vec<Option<crate::structures::IsoWitness>>, String> {
    let params = ReductionParams::default_for(3).map_err(|e| e.to_string())?;
    let graphs = enumerate_digraphs(3);
    let encodes = graphs
        .iter()
        .map(|graph| encode(graph, &params).map(|(s, _)| s))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| e.to_string())?;
    let mut verdicts = Vec::with_capacity(graphs.len() * graphs.len());
    for left in 0..graphs.len() {
        for right in 0..graphs.len() {
            let witness = find_isomorphism_with(&encodes[left], &encodes[right], options)
                .map_err(|e| e.to_string())?;
            verdicts.push(witness);
        }
    }
    Ok(verdicts)
}

/// Criterion 2: over all 64 x 64 ordered pairs of 3-vertex digraphs, the
/// structure-side search finds an isomorphism exactly when the graphs are
/// isomorphic (decided by brute force over all 6 vertex bijections), and
/// every witness found revalidates.
pub fn criterion_2_encoding_iff() -> CriterionResult {
    const INDEX: usize = 2;
    const NAME: &str = "encoding preserves and reflects isomorphism";
    let started = Instant::now();
    let graphs = enumerate_digraphs(3);
    let verdicts = match three_vertex_verdicts(IsoOptions::default()) {
        Ok(verdicts) => verdicts,
        Err(error) => return CriterionResult::fail(INDEX, NAME, error),
    };
    let params = ReductionParams::default_for(3).expect("default parameters");
    let mut isomorphic_pairs = 0usize;
    for left in 0..graphs.len() {
        for right in 0..graphs.len() {
            let witness = &verdicts[left * graphs.len() + right];
            let oracle = graphs_isomorphic(&graphs[left], &graphs[right]);
            if witness.is_some() != oracle {
                return CriterionResult::fail(
                    INDEX,
                    NAME,
                    format!(
                        "pair (#{left}, #{right}): structures {} but graphs {}",
                        if witness.is_some() {
                            "isomorphic"
                        } else {
                            "non-isomorphic"
                        },
                        if oracle { "isomorphic" } else { "non-isomorphic" },
                    ),
                );
            }
            if let Some(witness) = witness {
                isomorphic_pairs += 1;
                let (left_structure, _) = encode(&graphs[left], &params).expect("encodable");
                let (right_structure, _) = encode(&graphs[right], &params).expect("encodable");
                if !witness.validate(&left_structure, &right_structure) {
                    return CriterionResult::fail(
                        INDEX,
                        NAME,
                        format!("pair (#{left}, #{right}): witness failed revalidation"),
                    );
                }
            }
        }
    }
    if started.elapsed() > Duration::from_secs(60) {
        return CriterionResult::fail(INDEX, NAME, "exceeded the 60 second ceiling".into());
    }
    CriterionResult::pass(
        INDEX,
        NAME,
        format!("4096 ordered pairs agree with the brute-force graph oracle ({isomorphic_pairs} isomorphic)"),
    )
}

/// Criterion 3: for the default 4-member family and each of the 24 index
/// permutations, the constructed group element carries every member onto
/// its image's tail class (cutoff max of the two thresholds involved) and
/// every interleaved pair onto the image pair (cutoff max of all four).
pub fn criterion_3_respect_contracts() -> CriterionResult {
    const INDEX: usize = 3;
    const NAME: &str = "respecting elements satisfy both tail contracts";
    let started = Instant::now();
    let counts = ClassCounts::default_increasing(4);
    let family = match BranchFamily::build(&counts, 4, 4) {
        Ok(family) => family,
        Err(error) => return CriterionResult::fail(INDEX, NAME, error.to_string()),
    };
    let mut checks = 0usize;
    for sigma in (0..4usize).permutations(4) {
        let g = match respecting_element(&family, &sigma) {
            Ok(g) => g,
            Err(error) => {
                return CriterionResult::fail(
                    INDEX,
                    NAME,
                    format!("sigma {sigma:?}: {error}"),
                )
            }
        };
        let report = match check_respects(&family, &sigma, &g) {
            Ok(report) => report,
            Err(error) => {
                return CriterionResult::fail(
                    INDEX,
                    NAME,
                    format!("sigma {sigma:?}: {error}"),
                )
            }
        };
        if !report.all_ok() {
            return CriterionResult::fail(
                INDEX,
                NAME,
                format!("sigma {sigma:?}: a tail contract failed"),
            );
        }
        checks += report.check_count();
    }
    if started.elapsed() > Duration::from_secs(1) {
        return CriterionResult::fail(INDEX, NAME, "exceeded the 1 second ceiling".into());
    }
    CriterionResult::pass(
        INDEX,
        NAME,
        format!("{checks} tail checks across 24 permutations"),
    )
}

/// Criterion 4: every automorphism of every 3-vertex digraph transports to
/// a structure isomorphism that the independent checker validates.
pub fn criterion_4_transport() -> CriterionResult {
    const INDEX: usize = 4;
    const NAME: &str = "graph automorphisms transport to structure automorphisms";
    let params = match ReductionParams::default_for(3) {
        Ok(params) => params,
        Err(error) => return CriterionResult::fail(INDEX, NAME, error.to_string()),
    };
    let mut transported = 0usize;
    for (mask, graph) in enumerate_digraphs(3).iter().enumerate() {
        for sigma in graph_isomorphisms(graph, graph) {
            // transport_iso validates with the independent checker and
            // errors instead of returning an unchecked witness
            if let Err(error) = transport_iso(graph, graph, &sigma, &params) {
                return CriterionResult::fail(
                    INDEX,
                    NAME,
                    format!("graph #{mask}, sigma {sigma:?}: {error}"),
                );
            }
            transported += 1;
        }
    }
    CriterionResult::pass(
        INDEX,
        NAME,
        format!("{transported} automorphisms across 64 graphs transported and validated"),
    )
}

/// Criterion 5: the full branch structure for counts [2, 3, 4] meets every
/// nonempty relation subset to exactly the product class count.
pub fn criterion_5_cross_cutting() -> CriterionResult {
    const INDEX: usize = 5;
    const NAME: &str = "cross-cutting counts on the full branch structure";
    let counts = match ClassCounts::new(vec![2, 3, 4], true) {
        Ok(counts) => counts,
        Err(error) => return CriterionResult::fail(INDEX, NAME, error.to_string()),
    };
    let elements: Vec<TaggedElement> = enumerate_branches(&counts)
        .into_iter()
        .map(TaggedElement::a)
        .collect();
    let structure = match build_ambient(&counts, &elements) {
        Ok(structure) => structure,
        Err(error) => return CriterionResult::fail(INDEX, NAME, error.to_string()),
    };
    // frozen expectations, subsets in mask order
    let expected = [
        (vec![0], 2u64),
        (vec![1], 3),
        (vec![0, 1], 6),
        (vec![2], 4),
        (vec![0, 2], 8),
        (vec![1, 2], 12),
        (vec![0, 1, 2], 24),
    ];
    let mut observed = Vec::with_capacity(expected.len());
    for (subset, want) in &expected {
        let got = match structure.meet_partition(subset) {
            Ok(partition) => partition.class_count() as u64,
            Err(error) => return CriterionResult::fail(INDEX, NAME, error.to_string()),
        };
        if got != *want {
            return CriterionResult::fail(
                INDEX,
                NAME,
                format!("subset {subset:?}: {got} classes, expected {want}"),
            );
        }
        observed.push(got);
    }
    let report = match structure.check_cross_cutting(&counts) {
        Ok(report) => report,
        Err(error) => return CriterionResult::fail(INDEX, NAME, error.to_string()),
    };
    if !report.passed() {
        return CriterionResult::fail(INDEX, NAME, format!("{:?}", report.failure));
    }
    CriterionResult::pass(
        INDEX,
        NAME,
        format!("{} subsets with class counts {observed:?}", report.subsets_checked),
    )
}

/// Criterion 6: blocks for six 2s are exactly {0}, {1,2}, {3,4,5} with
/// products 2, 4, 8; 200 fixed-seed random count sequences (length <= 20,
/// entries 2..9) all give strictly increasing products tiling an initial
/// segment.
pub fn criterion_6_block_partition() -> CriterionResult {
    const INDEX: usize = 6;
    const NAME: &str = "block partition of class counts";
    let counts = ClassCounts::new(vec![2; 6], false).expect("valid counts");
    let partition = match block_partition(&counts) {
        Ok(partition) => partition,
        Err(error) => return CriterionResult::fail(INDEX, NAME, error.to_string()),
    };
    if partition.blocks() != [(0, 1), (1, 3), (3, 6)] || partition.products() != [2, 4, 8] {
        return CriterionResult::fail(
            INDEX,
            NAME,
            format!(
                "six 2s gave blocks {:?} with products {:?}",
                partition.blocks(),
                partition.products()
            ),
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED);
    for case in 0..200usize {
        let length = 1 + (rng.next_u32() as usize) % 20;
        let raw: Vec<u32> = (0..length).map(|_| 2 + rng.next_u32() % 8).collect();
        let counts = ClassCounts::new(raw.clone(), false).expect("entries at least 2");
        let partition = match block_partition(&counts) {
            Ok(partition) => partition,
            Err(error) => {
                return CriterionResult::fail(INDEX, NAME, format!("case {case}: {error}"))
            }
        };
        let increasing = partition.products().windows(2).all(|w| w[0] < w[1]);
        let mut expected_start = 0usize;
        let mut tiles = true;
        for &(start, end) in partition.blocks() {
            tiles &= start == expected_start && end > start;
            expected_start = end;
        }
        tiles &= match partition.dropped() {
            Some((start, end)) => start == expected_start && end == raw.len(),
            None => expected_start == raw.len(),
        };
        if !increasing || !tiles {
            return CriterionResult::fail(
                INDEX,
                NAME,
                format!("case {case} (counts {raw:?}) violated the block invariants"),
            );
        }
    }
    CriterionResult::pass(
        INDEX,
        NAME,
        "fixed case exact; 200 random sequences tile with strictly increasing products".into(),
    )
}

/// Criterion 7: the dichotomy reduct of the full 8-element, 3-predicate
/// pattern structure has three 2-class relations meeting to 8 classes; on
/// 100 fixed-seed random unary structures every relation has at most 2
/// classes.
pub fn criterion_7_cb_reduct() -> CriterionResult {
    const INDEX: usize = 7;
    const NAME: &str = "two-class reduct of unary structures";
    let full = UnaryStructure::full_pattern(3);
    let reduct = cb_reduct(&full);
    let class_counts: Vec<usize> = (0..reduct.relation_count())
        .map(|n| reduct.relation_partition(n).class_count())
        .collect();
    let meet = reduct.e_infinity().class_count();
    if class_counts != [2, 2, 2] || meet != 8 {
        return CriterionResult::fail(
            INDEX,
            NAME,
            format!("full pattern gave relations {class_counts:?} with meet {meet}"),
        );
    }
    let mut rng = ChaCha8Rng::seed_from_u64(SUITE_SEED ^ 0x7);
    for case in 0..100usize {
        let predicates = 1 + (rng.next_u32() as usize) % 6;
        let size = (rng.next_u32() as usize) % 17;
        let bits: Vec<Vec<bool>> = (0..size)
            .map(|_| (0..predicates).map(|_| rng.next_u32() % 2 == 1).collect())
            .collect();
        let unary = UnaryStructure::new(predicates, bits).expect("rows built to width");
        let reduct = cb_reduct(&unary);
        for n in 0..reduct.relation_count() {
            let classes = reduct.relation_partition(n).class_count();
            if classes > 2 {
                return CriterionResult::fail(
                    INDEX,
                    NAME,
                    format!("case {case}: relation {n} has {classes} classes"),
                );
            }
        }
    }
    CriterionResult::pass(
        INDEX,
        NAME,
        "full pattern gives [2, 2, 2] with meet 8; 100 random structures stay within 2 classes"
            .into(),
    )
}

/// Criterion 8: rerunning criterion 2's pair matrix with pruning disabled
/// reproduces identical results, witness for witness.
pub fn criterion_8_prune_independence() -> CriterionResult {
    const INDEX: usize = 8;
    const NAME: &str = "pruning does not change verdicts";
    let pruned = match three_vertex_verdicts(IsoOptions::default()) {
        Ok(verdicts) => verdicts,
        Err(error) => return CriterionResult::fail(INDEX, NAME, error),
    };
    let plain = match three_vertex_verdicts(IsoOptions {
        prune: false,
        ..IsoOptions::default()
    }) {
        Ok(verdicts) => verdicts,
        Err(error) => return CriterionResult::fail(INDEX, NAME, error),
    };
    if pruned.len() != plain.len() {
        return CriterionResult::fail(INDEX, NAME, "verdict matrices differ in size".into());
    }
    for (pair, (with_prune, without_prune)) in pruned.iter().zip(&plain).enumerate() {
        if with_prune != without_prune {
            return CriterionResult::fail(
                INDEX,
                NAME,
                format!("pair #{pair} differs between pruned and unpruned runs"),
            );
        }
    }
    CriterionResult::pass(
        INDEX,
        NAME,
        format!("{} verdicts identical with pruning disabled", plain.len()),
    )
}
