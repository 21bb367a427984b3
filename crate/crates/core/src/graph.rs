//! The type–predicate graph.
//!
//! Nodes are entity types and predicates. A triple `(e1, r, e2)` links every
//! type of `e1` to `r` and `r` to every type of `e2`. Neighborhoods used for
//! attention are undirected and always contain the node itself.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use thiserror::Error;

use crate::kg::KnowledgeGraph;
use crate::Symbol;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GraphError {
    #[error("node `{0}` must start with `tp:` or `pr:`")]
    BadNodeName(alloc::string::String),
    #[error("edge {0} -- {1} does not join a type and a predicate")]
    NotBipartite(GraphNode, GraphNode),
    #[error("node index {0} out of range")]
    IndexOutOfRange(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum NodeKind {
    Type,
    Predicate,
}

/// A graph node, written `tp:<id>` or `pr:<id>`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GraphNode {
    pub kind: NodeKind,
    pub id: Symbol,
}

impl GraphNode {
    pub fn type_node(id: &str) -> Self {
        GraphNode {
            kind: NodeKind::Type,
            id: Symbol::new(id),
        }
    }

    pub fn predicate(id: &str) -> Self {
        GraphNode {
            kind: NodeKind::Predicate,
            id: Symbol::new(id),
        }
    }
}

impl fmt::Display for GraphNode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.kind {
            NodeKind::Type => write!(f, "tp:{}", self.id),
            NodeKind::Predicate => write!(f, "pr:{}", self.id),
        }
    }
}

impl FromStr for GraphNode {
    type Err = GraphError;

    fn from_str(s: &str) -> Result<Self, GraphError> {
        match (s.strip_prefix("tp:"), s.strip_prefix("pr:")) {
            (Some(id), _) if !id.is_empty() => Ok(GraphNode::type_node(id)),
            (_, Some(id)) if !id.is_empty() => Ok(GraphNode::predicate(id)),
            _ => Err(GraphError::BadNodeName(s.into())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct TypePredicateGraph {
    nodes: Vec<GraphNode>,
    /// Directed links as witnessed: (type, predicate) for subject types,
    /// (predicate, type) for object types.
    links: BTreeSet<(usize, usize)>,
    /// Sorted neighbor lists, self included.
    neighbors: Vec<Vec<usize>>,
}

impl TypePredicateGraph {
    pub fn build(kg: &KnowledgeGraph) -> Self {
        let types: BTreeSet<Symbol> = kg.types().cloned().collect();
        let mut links: BTreeSet<(GraphNode, GraphNode)> = BTreeSet::new();
        for t in kg.triples() {
            let r = GraphNode {
                kind: NodeKind::Predicate,
                id: t.predicate.clone(),
            };
            for tp in kg.types_of(&t.subject) {
                links.insert((GraphNode::type_node(tp), r.clone()));
            }
            for tp in kg.types_of(&t.object) {
                links.insert((r.clone(), GraphNode::type_node(tp)));
            }
        }
        let nodes: Vec<GraphNode> = types
            .into_iter()
            .map(|id| GraphNode {
                kind: NodeKind::Type,
                id,
            })
            .chain(kg.predicates().iter().map(|id| GraphNode {
                kind: NodeKind::Predicate,
                id: id.clone(),
            }))
            .collect();
        // every link was built from kg data, so it is bipartite and known
        Self::from_links(nodes, links).expect("links reference known nodes")
    }

    /// Builds a graph from explicit nodes and directed links.
    ///
    /// Nodes are put in canonical order (types sorted, then predicates
    /// sorted); links must join a type and a predicate.
    pub fn from_links(
        nodes: impl IntoIterator<Item = GraphNode>,
        links: impl IntoIterator<Item = (GraphNode, GraphNode)>,
    ) -> Result<Self, GraphError> {
        let links: Vec<(GraphNode, GraphNode)> = links.into_iter().collect();
        let mut node_set: BTreeSet<GraphNode> = nodes.into_iter().collect();
        for (a, b) in &links {
            if a.kind == b.kind {
                return Err(GraphError::NotBipartite(a.clone(), b.clone()));
            }
            node_set.insert(a.clone());
            node_set.insert(b.clone());
        }
        // NodeKind::Type < NodeKind::Predicate, so this is types then predicates
        let nodes: Vec<GraphNode> = node_set.into_iter().collect();
        let position: BTreeMap<&GraphNode, usize> =
            nodes.iter().enumerate().map(|(i, n)| (n, i)).collect();
        let index_links: BTreeSet<(usize, usize)> = links
            .iter()
            .map(|(a, b)| (position[a], position[b]))
            .collect();
        let mut g = TypePredicateGraph {
            neighbors: Vec::new(),
            links: index_links,
            nodes,
        };
        g.rebuild_neighbors();
        Ok(g)
    }

    /// A graph over arbitrary node indices `0..n` with undirected `edges`.
    ///
    /// Nodes are named `tp:n<i>` so the result is still a valid graph value;
    /// intended for numeric experiments where bipartiteness is irrelevant.
    pub fn from_adjacency(n: usize, edges: &[(usize, usize)]) -> Result<Self, GraphError> {
        if let Some(&(a, b)) = edges.iter().find(|(a, b)| *a >= n || *b >= n) {
            return Err(GraphError::IndexOutOfRange(a.max(b)));
        }
        let mut g = TypePredicateGraph {
            nodes: (0..n)
                .map(|i| GraphNode::type_node(&alloc::format!("n{i:05}")))
                .collect(),
            links: edges.iter().copied().collect(),
            neighbors: Vec::new(),
        };
        g.rebuild_neighbors();
        Ok(g)
    }

    fn rebuild_neighbors(&mut self) {
        let mut adj: Vec<BTreeSet<usize>> = (0..self.nodes.len())
            .map(|i| BTreeSet::from([i]))
            .collect();
        for &(a, b) in &self.links {
            adj[a].insert(b);
            adj[b].insert(a);
        }
        self.neighbors = adj.into_iter().map(|s| s.into_iter().collect()).collect();
    }

    /// The same graph with node `i` of the result being node `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self, GraphError> {
        let n = self.nodes.len();
        let mut inverse = alloc::vec![usize::MAX; n];
        for (new, &old) in perm.iter().enumerate() {
            if old >= n {
                return Err(GraphError::IndexOutOfRange(old));
            }
            inverse[old] = new;
        }
        if let Some(missing) = inverse.iter().position(|&v| v == usize::MAX) {
            return Err(GraphError::IndexOutOfRange(missing));
        }
        let mut g = TypePredicateGraph {
            nodes: perm.iter().map(|&old| self.nodes[old].clone()).collect(),
            links: self
                .links
                .iter()
                .map(|&(a, b)| (inverse[a], inverse[b]))
                .collect(),
            neighbors: Vec::new(),
        };
        g.rebuild_neighbors();
        Ok(g)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[GraphNode] {
        &self.nodes
    }

    pub fn index_of(&self, node: &GraphNode) -> Option<usize> {
        self.nodes.iter().position(|n| n == node)
    }

    /// Neighborhood of node `i` including `i` itself, ascending.
    pub fn neighbors(&self, i: usize) -> &[usize] {
        &self.neighbors[i]
    }

    /// Directed witnessed links as node pairs.
    pub fn links(&self) -> impl Iterator<Item = (&GraphNode, &GraphNode)> {
        self.links
            .iter()
            .map(|&(a, b)| (&self.nodes[a], &self.nodes[b]))
    }

    pub fn has_link(&self, from: &GraphNode, to: &GraphNode) -> bool {
        match (self.index_of(from), self.index_of(to)) {
            (Some(a), Some(b)) => self.links.contains(&(a, b)),
            _ => false,
        }
    }

    /// Nodes that take part in no link.
    pub fn isolated(&self) -> impl Iterator<Item = &GraphNode> {
        self.neighbors
            .iter()
            .enumerate()
            .filter(|(_, nb)| nb.len() == 1)
            .map(|(i, _)| &self.nodes[i])
    }
}
