//! Finite structures built from cross-cutting equivalence relations.
//!
//! The library works at a fixed finite depth `m` with a class-count
//! sequence `h(0)..h(m-1)`. Its pieces:
//!
//! - [`branches`]: the branch space (one value in `{1..h(n)}` per
//!   coordinate), greedy families whose members disagree beyond explicit
//!   thresholds, parity interleavings, and tail equality.
//! - [`group_action`]: the product of coordinate symmetric groups acting
//!   on branches, and elements respecting a permutation of the family.
//! - [`structures`]: structures whose relations are equivalence relations
//!   stored as normalized labels, partition meets, the cross-cutting
//!   check, and a brute-force isomorphism search with an independent
//!   witness checker.
//! - [`reduction`]: encoding directed irreflexive graphs as structures
//!   (vertices become singleton meet classes, edges become pairs), the
//!   decoder, and isomorphism transport.
//! - [`reducts`]: block coarsening that turns arbitrary counts into
//!   strictly increasing ones, and the two-class dichotomy reduct of
//!   unary-predicate structures.
//! - [`suite`]: the exhaustive desk-scale verification battery.

pub mod branches;
pub mod group_action;
pub mod reducts;
pub mod reduction;
pub mod structures;
pub mod suite;

pub use branches::{enumerate_branches, Branch, BranchError, BranchFamily, ClassCounts};
pub use group_action::{
    check_respects, induced_automorphism, respecting_element, ActionError, GroupElement,
    RespectReport,
};
pub use reduction::{
    decode, decode_with_elements, encode, enumerate_digraphs, graph_isomorphisms,
    graphs_isomorphic, is_graph_isomorphism, ordered_pairs, roundtrip, transport_iso, Certificate,
    ElementRole, Graph, ReductionError, ReductionParams, RoundtripReport,
};
pub use reducts::{block_partition, cb_reduct, coarsen, BlockPartition, ReductError, UnaryStructure};
pub use structures::{
    build_ambient, find_isomorphism, find_isomorphism_with, CrossCutReport, EqStructure,
    IsoOptions, IsoWitness, Partition, StructureError, Tag, TaggedElement,
};
