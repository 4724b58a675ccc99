//! Encoding directed irreflexive graphs as structures and back.
//!
//! A graph on `k` vertices is encoded over a branch family `f_0..f_{k-1}`:
//! each vertex `i` contributes the single element `a_{f_i}`, and each edge
//! `(i, j)` contributes the pair `a_d, b_d` for the interleaved branch
//! `d = d_{i,j}`. Vertices are exactly the one-element meet classes of the
//! result and edges the two-element ones, so the decoder recovers the
//! graph by matching each pair branch against the singletons on the even
//! and odd tail coordinates beyond the family cutoff. Graph isomorphisms
//! transport to structure isomorphisms through a respecting group element.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::branches::{BranchError, BranchFamily, ClassCounts};
use crate::group_action::{check_respects, respecting_element, ActionError};
use crate::structures::{build_ambient, EqStructure, IsoWitness, StructureError, Tag, TaggedElement};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ReductionError {
    #[error("edge ({0}, {1}) is a loop; graphs are irreflexive")]
    LoopEdge(usize, usize),
    #[error("edge ({from}, {to}) mentions a vertex outside 0..{vertices}")]
    EdgeOutOfRange {
        from: usize,
        to: usize,
        vertices: usize,
    },
    #[error("graph has {graph} vertices but the parameters were built for {params}")]
    VertexCountMismatch { graph: usize, params: usize },
    #[error("structure has {structure} relations but the parameters have depth {params}")]
    DepthMismatch { structure: usize, params: usize },
    #[error("meet class of size {size} found; a valid encoding has only sizes 1 and 2")]
    ClassTooLarge { size: usize },
    #[error("malformed encoding: pair branch {branch:?} matches {matches} singletons on the {parity} tail")]
    TailMatch {
        branch: Vec<u32>,
        parity: &'static str,
        matches: usize,
    },
    #[error("malformed encoding: pair branch {branch:?} decodes to a loop at vertex {vertex}")]
    DecodedLoop { branch: Vec<u32>, vertex: usize },
    #[error("malformed encoding: two pair classes decode to the same edge ({0}, {1})")]
    DuplicateDecodedEdge(usize, usize),
    #[error("sigma {0:?} is not an isomorphism between the given graphs")]
    NotGraphIsomorphism(Vec<usize>),
    #[error("transported mapping failed the independent witness check")]
    TransportInvalid,
    #[error("respect contract violated during transport")]
    RespectContractFailed,
    #[error(transparent)]
    Branch(#[from] BranchError),
    #[error(transparent)]
    Structure(#[from] StructureError),
    #[error(transparent)]
    Action(#[from] ActionError),
    #[error("graph file is not valid JSON: {0}")]
    Json(String),
}

impl From<serde_json::Error> for ReductionError {
    fn from(error: serde_json::Error) -> Self {
        ReductionError::Json(error.to_string())
    }
}

/// A finite irreflexive graph with ordered edges. Undirected graphs are
/// stored symmetric-closed at construction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    vertices: usize,
    edges: BTreeSet<(usize, usize)>,
    directed: bool,
}

impl Graph {
    pub fn new(
        vertices: usize,
        edges: impl IntoIterator<Item = (usize, usize)>,
        directed: bool,
    ) -> Result<Self, ReductionError> {
        let mut set = BTreeSet::new();
        for (from, to) in edges {
            if from == to {
                return Err(ReductionError::LoopEdge(from, to));
            }
            if from >= vertices || to >= vertices {
                return Err(ReductionError::EdgeOutOfRange { from, to, vertices });
            }
            set.insert((from, to));
            if !directed {
                set.insert((to, from));
            }
        }
        Ok(Self {
            vertices,
            edges: set,
            directed,
        })
    }

    pub fn empty(vertices: usize) -> Self {
        Self {
            vertices,
            edges: BTreeSet::new(),
            directed: true,
        }
    }

    pub fn vertex_count(&self) -> usize {
        self.vertices
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn has_edge(&self, from: usize, to: usize) -> bool {
        self.edges.contains(&(from, to))
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn is_directed(&self) -> bool {
        self.directed
    }

    /// Vertex count and edge set coincide (directedness flags are ignored:
    /// an undirected graph equals its symmetric closure read as directed).
    pub fn same_presentation(&self, other: &Graph) -> bool {
        self.vertices == other.vertices && self.edges == other.edges
    }

    pub fn to_json(&self) -> String {
        let file = GraphFile {
            vertices: self.vertices,
            edges: self.edges.iter().copied().collect(),
            directed: self.directed,
        };
        let mut out = serde_json::to_string_pretty(&file).expect("serializable");
        out.push('\n');
        out
    }

    pub fn from_json(text: &str) -> Result<Self, ReductionError> {
        let file: GraphFile = serde_json::from_str(text)?;
        Graph::new(file.vertices, file.edges, file.directed)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct GraphFile {
    vertices: usize,
    edges: Vec<(usize, usize)>,
    directed: bool,
}

/// The ordered vertex pairs of a `vertices`-element set, lexicographic.
pub fn ordered_pairs(vertices: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::new();
    for i in 0..vertices {
        for j in 0..vertices {
            if i != j {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

/// All `2^(n(n-1))` directed irreflexive graphs on exactly `vertices`
/// vertices, in edge-mask order. The mask doubles as a replayable case key.
pub fn enumerate_digraphs(vertices: usize) -> Vec<Graph> {
    let pairs = ordered_pairs(vertices);
    assert!(pairs.len() < 64, "enumeration limited to desk scale");
    (0u64..(1u64 << pairs.len()))
        .map(|mask| {
            let edges = pairs
                .iter()
                .enumerate()
                .filter(|(bit, _)| mask & (1 << bit) != 0)
                .map(|(_, &pair)| pair);
            Graph::new(vertices, edges, true).expect("pairs are loop-free and in range")
        })
        .collect()
}

/// Whether `sigma` is a graph isomorphism from `left` onto `right`.
pub fn is_graph_isomorphism(left: &Graph, right: &Graph, sigma: &[usize]) -> bool {
    if left.vertices != right.vertices || sigma.len() != left.vertices {
        return false;
    }
    let mut seen = vec![false; left.vertices];
    for &image in sigma {
        if image >= left.vertices || seen[image] {
            return false;
        }
        seen[image] = true;
    }
    for (i, j) in ordered_pairs(left.vertices) {
        if left.has_edge(i, j) != right.has_edge(sigma[i], sigma[j]) {
            return false;
        }
    }
    true
}

/// All isomorphisms between two graphs, by brute force over the vertex
/// bijections in lexicographic order. The graph-side oracle for the
/// completeness check; independent of the structure-side search.
pub fn graph_isomorphisms(left: &Graph, right: &Graph) -> Vec<Vec<usize>> {
    if left.vertices != right.vertices {
        return Vec::new();
    }
    (0..left.vertices)
        .permutations(left.vertices)
        .filter(|sigma| is_graph_isomorphism(left, right, sigma))
        .collect()
}

pub fn graphs_isomorphic(left: &Graph, right: &Graph) -> bool {
    if left.vertices != right.vertices || left.edge_count() != right.edge_count() {
        return false;
    }
    (0..left.vertices)
        .permutations(left.vertices)
        .any(|sigma| is_graph_isomorphism(left, right, &sigma))
}

/// Everything the encoding of a `k`-vertex graph needs: the class counts
/// truncated to the working depth and the branch family with its
/// thresholds and cutoff.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReductionParams {
    family: BranchFamily,
}

impl ReductionParams {
    pub fn new(counts: &ClassCounts, vertices: usize, depth: usize) -> Result<Self, ReductionError> {
        let family = BranchFamily::build(counts, vertices, depth)?;
        Ok(Self { family })
    }

    /// Default parameters for `k` vertices: counts `h(n) = n + 2` (the
    /// smallest strictly increasing counts admitting `k` branches) at
    /// depth `max(4, N_{k-1} + 2)`.
    pub fn default_for(vertices: usize) -> Result<Self, ReductionError> {
        let depth = 4.max(vertices);
        Self::new(&ClassCounts::default_increasing(depth), vertices, depth)
    }

    pub fn vertex_count(&self) -> usize {
        self.family.len()
    }

    pub fn depth(&self) -> usize {
        self.family.depth()
    }

    pub fn cutoff(&self) -> usize {
        self.family.cutoff()
    }

    pub fn counts(&self) -> &ClassCounts {
        self.family.counts()
    }

    pub fn thresholds(&self) -> &[usize] {
        self.family.thresholds()
    }

    pub fn family(&self) -> &BranchFamily {
        &self.family
    }
}

/// Where each element of an encoded structure came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum ElementRole {
    Vertex(usize),
    Edge { from: usize, to: usize, tag: Tag },
}

/// Maps every element of an encoded structure back to the vertex or edge
/// it encodes.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Certificate {
    roles: Vec<ElementRole>,
}

impl Certificate {
    pub fn roles(&self) -> &[ElementRole] {
        &self.roles
    }

    pub fn role(&self, element: usize) -> ElementRole {
        self.roles[element]
    }

    pub fn element_of(&self, role: ElementRole) -> Option<usize> {
        self.roles.iter().position(|&r| r == role)
    }
}

/// Encodes a graph: one `A`-tagged family branch per vertex, one `A`/`B`
/// pair on the interleaved branch per edge. The structure size is always
/// `k + 2 * edges`.
pub fn encode(
    graph: &Graph,
    params: &ReductionParams,
) -> Result<(EqStructure, Certificate), ReductionError> {
    if graph.vertex_count() != params.vertex_count() {
        return Err(ReductionError::VertexCountMismatch {
            graph: graph.vertex_count(),
            params: params.vertex_count(),
        });
    }
    let family = params.family();
    let mut elements = Vec::with_capacity(graph.vertex_count() + 2 * graph.edge_count());
    let mut roles = Vec::with_capacity(elements.capacity());
    for i in 0..graph.vertex_count() {
        elements.push(TaggedElement::a(family.member(i).clone()));
        roles.push(ElementRole::Vertex(i));
    }
    for (from, to) in graph.edges() {
        let pair_branch = family.interleave(from, to)?;
        elements.push(TaggedElement::a(pair_branch.clone()));
        roles.push(ElementRole::Edge {
            from,
            to,
            tag: Tag::A,
        });
        elements.push(TaggedElement::b(pair_branch));
        roles.push(ElementRole::Edge {
            from,
            to,
            tag: Tag::B,
        });
    }
    let structure = build_ambient(params.counts(), &elements)?;
    Ok((structure, Certificate { roles }))
}

/// Decodes a structure back to a graph, additionally reporting which
/// element realizes each decoded vertex.
///
/// Branches are taken from the certificate when present, otherwise each
/// element's label column stands in for its branch (the decoder only ever
/// compares coordinates for equality). Singleton meet classes become
/// vertices, numbered in lexicographic branch order; each doubleton's
/// branch is matched against the singletons on the even and the odd tail
/// beyond the cutoff to produce an edge.
pub fn decode_with_elements(
    structure: &EqStructure,
    params: &ReductionParams,
) -> Result<(Graph, Vec<usize>), ReductionError> {
    if structure.relation_count() != params.depth() {
        return Err(ReductionError::DepthMismatch {
            structure: structure.relation_count(),
            params: params.depth(),
        });
    }
    let column = |element: usize| -> Vec<u32> {
        match structure.origin() {
            Some(origin) => origin[element].branch.values().to_vec(),
            None => structure.label_column(element),
        }
    };
    let mut singletons: Vec<(Vec<u32>, usize)> = Vec::new();
    let mut pairs: Vec<Vec<u32>> = Vec::new();
    for class in structure.e_infinity().class_members() {
        match class.len() {
            1 => singletons.push((column(class[0]), class[0])),
            2 => pairs.push(column(class[0])),
            size => return Err(ReductionError::ClassTooLarge { size }),
        }
    }
    singletons.sort();
    let vertex_elements: Vec<usize> = singletons.iter().map(|(_, element)| *element).collect();
    let vertex_columns: Vec<&Vec<u32>> = singletons.iter().map(|(column, _)| column).collect();

    let cutoff = params.cutoff();
    let depth = params.depth();
    let tail_match = |pair: &[u32], parity: usize| -> Result<usize, ReductionError> {
        let matches: Vec<usize> = (0..vertex_columns.len())
            .filter(|&v| {
                (cutoff..depth)
                    .filter(|n| n % 2 == parity)
                    .all(|n| pair[n] == vertex_columns[v][n])
            })
            .collect();
        match matches.as_slice() {
            [unique] => Ok(*unique),
            _ => Err(ReductionError::TailMatch {
                branch: pair.to_vec(),
                parity: if parity == 0 { "even" } else { "odd" },
                matches: matches.len(),
            }),
        }
    };

    let mut edges = BTreeSet::new();
    for pair in &pairs {
        let from = tail_match(pair, 0)?;
        let to = tail_match(pair, 1)?;
        if from == to {
            return Err(ReductionError::DecodedLoop {
                branch: pair.clone(),
                vertex: from,
            });
        }
        if !edges.insert((from, to)) {
            return Err(ReductionError::DuplicateDecodedEdge(from, to));
        }
    }
    let graph = Graph::new(vertex_elements.len(), edges, true)?;
    Ok((graph, vertex_elements))
}

pub fn decode(
    structure: &EqStructure,
    params: &ReductionParams,
) -> Result<Graph, ReductionError> {
    decode_with_elements(structure, params).map(|(graph, _)| graph)
}

/// Transports a graph isomorphism to a structure isomorphism: builds a
/// respecting group element for `sigma`, verifies its respect contracts,
/// maps vertex elements along `sigma` and pair elements along the induced
/// pair map, and validates the result with the independent checker.
pub fn transport_iso(
    left: &Graph,
    right: &Graph,
    sigma: &[usize],
    params: &ReductionParams,
) -> Result<IsoWitness, ReductionError> {
    if left.vertex_count() != params.vertex_count() {
        return Err(ReductionError::VertexCountMismatch {
            graph: left.vertex_count(),
            params: params.vertex_count(),
        });
    }
    if !is_graph_isomorphism(left, right, sigma) {
        return Err(ReductionError::NotGraphIsomorphism(sigma.to_vec()));
    }
    let g = respecting_element(params.family(), sigma)?;
    if !check_respects(params.family(), sigma, &g)?.all_ok() {
        return Err(ReductionError::RespectContractFailed);
    }
    let (left_structure, left_cert) = encode(left, params)?;
    let (right_structure, right_cert) = encode(right, params)?;
    let right_index: HashMap<ElementRole, usize> = right_cert
        .roles()
        .iter()
        .enumerate()
        .map(|(index, &role)| (role, index))
        .collect();
    let mapping = left_cert
        .roles()
        .iter()
        .map(|role| {
            let image = match *role {
                ElementRole::Vertex(i) => ElementRole::Vertex(sigma[i]),
                ElementRole::Edge { from, to, tag } => ElementRole::Edge {
                    from: sigma[from],
                    to: sigma[to],
                    tag,
                },
            };
            right_index
                .get(&image)
                .copied()
                .ok_or(ReductionError::TransportInvalid)
        })
        .collect::<Result<Vec<usize>, _>>()?;
    let witness = IsoWitness::new(mapping);
    if !witness.validate(&left_structure, &right_structure) {
        return Err(ReductionError::TransportInvalid);
    }
    Ok(witness)
}

/// Encode-then-decode verdict for one graph, with the meet-class size
/// histogram of the encoded structure.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RoundtripReport {
    pub pass: bool,
    pub structure_size: usize,
    /// meet-class size -> number of classes of that size
    pub class_histogram: BTreeMap<usize, usize>,
    pub decoded_vertices: usize,
    pub decoded_edges: usize,
}

/// Encodes, decodes, relabels the decoded graph through the certificate,
/// and compares with the input exactly.
pub fn roundtrip(graph: &Graph, params: &ReductionParams) -> Result<RoundtripReport, ReductionError> {
    let (structure, certificate) = encode(graph, params)?;
    let mut class_histogram = BTreeMap::new();
    for class in structure.e_infinity().class_members() {
        *class_histogram.entry(class.len()).or_insert(0usize) += 1;
    }
    let (decoded, vertex_elements) = decode_with_elements(&structure, params)?;
    let mut pass = decoded.vertex_count() == graph.vertex_count();
    let mut relabel = Vec::with_capacity(vertex_elements.len());
    for &element in &vertex_elements {
        match certificate.role(element) {
            ElementRole::Vertex(original) => relabel.push(original),
            ElementRole::Edge { .. } => {
                pass = false;
                relabel.push(0);
            }
        }
    }
    if pass {
        let relabeled: BTreeSet<(usize, usize)> = decoded
            .edges()
            .map(|(from, to)| (relabel[from], relabel[to]))
            .collect();
        let original: BTreeSet<(usize, usize)> = graph.edges().collect();
        pass = relabeled == original;
    }
    Ok(RoundtripReport {
        pass,
        structure_size: structure.size(),
        class_histogram,
        decoded_vertices: decoded.vertex_count(),
        decoded_edges: decoded.edge_count(),
    })
}
