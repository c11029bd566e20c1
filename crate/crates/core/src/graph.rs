//! Social and federation graphs plus the degree and connectivity metrics
//! shared by the experiment modules.
//!
//! Connectivity is always weak: edge direction is ignored when grouping
//! nodes into components.

use std::collections::BTreeMap;

use crate::ecosystem::Ecosystem;
use crate::error::{Error, Result};
use crate::unionfind::UnionFind;

/// Read-only view over a directed graph with string-labelled nodes.
pub trait DirectedGraph {
    fn node_count(&self) -> usize;
    fn node_id(&self, node: usize) -> &str;
    /// Edges as (source, target) node indices.
    fn edges(&self) -> &[(u32, u32)];
}

/// User-level follower graph: `a -> b` means `a` follows `b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SocialGraph {
    nodes: Vec<String>,
    edges: Vec<(u32, u32)>,
}

impl SocialGraph {
    pub fn from_ecosystem(eco: &Ecosystem) -> Self {
        Self {
            nodes: eco.users().iter().map(|u| u.id.clone()).collect(),
            edges: eco.follows().to_vec(),
        }
    }

    /// Builds a graph from explicit nodes and edges, rejecting out-of-range
    /// endpoints, self-loops and duplicate edges.
    pub fn new(nodes: Vec<String>, edges: Vec<(u32, u32)>) -> Result<Self> {
        let n = nodes.len() as u32;
        let mut seen = std::collections::HashSet::with_capacity(edges.len());
        for &(a, b) in &edges {
            if a >= n || b >= n {
                return Err(Error::invalid(format!("edge ({a}, {b}) out of range")));
            }
            if a == b {
                return Err(Error::invalid(format!("self-loop on node {a}")));
            }
            if !seen.insert((a, b)) {
                return Err(Error::invalid(format!("duplicate edge ({a}, {b})")));
            }
        }
        Ok(Self { nodes, edges })
    }
}

impl DirectedGraph for SocialGraph {
    fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn node_id(&self, node: usize) -> &str {
        &self.nodes[node]
    }

    fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }
}

/// Instance-level graph induced from the social graph. An edge `a -> b`
/// exists when at least one user on `a` follows a user on `b`, `a != b`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FederationGraph {
    nodes: Vec<String>,
    edges: Vec<(u32, u32)>,
    weights: Vec<u32>,
}

impl FederationGraph {
    /// Number of underlying follow pairs per edge, aligned with `edges()`.
    /// Connectivity metrics ignore it.
    pub fn weights(&self) -> &[u32] {
        &self.weights
    }

    /// Distinct neighbours per instance, ignoring direction.
    pub fn connection_counts(&self) -> Vec<usize> {
        let mut pairs: Vec<(u32, u32)> = self
            .edges
            .iter()
            .map(|&(a, b)| (a.min(b), a.max(b)))
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        let mut counts = vec![0; self.nodes.len()];
        for (a, b) in pairs {
            counts[a as usize] += 1;
            counts[b as usize] += 1;
        }
        counts
    }
}

impl DirectedGraph for FederationGraph {
    fn node_count(&self) -> usize {
        self.nodes.len()
    }

    fn node_id(&self, node: usize) -> &str {
        &self.nodes[node]
    }

    fn edges(&self) -> &[(u32, u32)] {
        &self.edges
    }
}

/// Induces the federation graph. Every instance is a node, isolated or not;
/// intra-instance follows produce no edge. Edges come out sorted.
///
/// The builder already rejects dangling references, so this cannot fail.
pub fn induce_federation_graph(eco: &Ecosystem) -> FederationGraph {
    let mut counts: BTreeMap<(u32, u32), u32> = BTreeMap::new();
    for &(u, v) in eco.follows() {
        let a = eco.user_instance(u as usize) as u32;
        let b = eco.user_instance(v as usize) as u32;
        if a != b {
            *counts.entry((a, b)).or_default() += 1;
        }
    }
    let (edges, weights) = counts.into_iter().unzip();
    FederationGraph {
        nodes: eco.instances().iter().map(|i| i.id.clone()).collect(),
        edges,
        weights,
    }
}

/// Histogram of out-degrees as ascending `(degree, node count)` pairs.
pub fn out_degree_distribution<G: DirectedGraph + ?Sized>(graph: &G) -> Vec<(usize, usize)> {
    let mut degree = vec![0usize; graph.node_count()];
    for &(a, _) in graph.edges() {
        degree[a as usize] += 1;
    }
    let mut hist: BTreeMap<usize, usize> = BTreeMap::new();
    for d in degree {
        *hist.entry(d).or_default() += 1;
    }
    hist.into_iter().collect()
}

/// `P(D >= d)` for every degree present in a distribution.
pub fn complementary_cdf(distribution: &[(usize, usize)]) -> Vec<(usize, f64)> {
    let total: usize = distribution.iter().map(|&(_, c)| c).sum();
    let mut remaining = total;
    distribution
        .iter()
        .map(|&(d, c)| {
            let p = remaining as f64 / total as f64;
            remaining -= c;
            (d, p)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ComponentSummary {
    pub lcc_size: usize,
    /// All weak components, singletons included.
    pub component_count: usize,
    /// Node ids of the largest component, sorted ascending. Among equally
    /// large components the one holding the lowest node index wins.
    pub lcc_membership: Vec<String>,
}

pub fn largest_component<G: DirectedGraph + ?Sized>(graph: &G) -> ComponentSummary {
    let n = graph.node_count();
    let comps = WeakComponents::compute(n, graph.edges().iter().copied(), None);
    let mut lcc_membership: Vec<String> = match comps.lcc_root {
        Some(root) => {
            let mut uf = comps.uf;
            (0..n as u32)
                .filter(|&v| uf.find(v) == root)
                .map(|v| graph.node_id(v as usize).to_string())
                .collect()
        }
        None => Vec::new(),
    };
    lcc_membership.sort();
    ComponentSummary {
        lcc_size: comps.lcc_size,
        component_count: comps.component_count,
        lcc_membership,
    }
}

/// Weak components over the live subset of a node range.
pub(crate) struct WeakComponents {
    pub lcc_size: usize,
    pub component_count: usize,
    pub lcc_root: Option<u32>,
    uf: UnionFind,
}

impl WeakComponents {
    /// Edges touching a dead node are skipped; dead nodes are not counted.
    pub fn compute(
        n: usize,
        edges: impl IntoIterator<Item = (u32, u32)>,
        alive: Option<&[bool]>,
    ) -> Self {
        let live = |v: u32| alive.is_none_or(|a| a[v as usize]);
        let mut uf = UnionFind::new(n);
        for (a, b) in edges {
            if live(a) && live(b) {
                uf.union(a, b);
            }
        }
        let mut lcc_size = 0;
        let mut component_count = 0;
        let mut lcc_root = None;
        for v in 0..n as u32 {
            if !live(v) {
                continue;
            }
            let root = uf.find(v);
            if root == v {
                component_count += 1;
            }
            let size = uf.root_size(root) as usize;
            if size > lcc_size {
                lcc_size = size;
                lcc_root = Some(root);
            }
        }
        Self {
            lcc_size,
            component_count,
            lcc_root,
            uf,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::test_fixtures::three_instance_chain;

    fn graph(n: usize, edges: &[(u32, u32)]) -> SocialGraph {
        let nodes = (0..n).map(|i| format!("n{i:02}")).collect();
        SocialGraph::new(nodes, edges.to_vec()).unwrap()
    }

    #[test]
    fn federation_edges_follow_cross_instance_follows() {
        let eco = three_instance_chain();
        let fed = induce_federation_graph(&eco);
        assert_eq!(fed.node_count(), 3);
        let named: Vec<(&str, &str)> = fed
            .edges()
            .iter()
            .map(|&(a, b)| (fed.node_id(a as usize), fed.node_id(b as usize)))
            .collect();
        assert_eq!(named, vec![("i1", "i2"), ("i2", "i3")]);
        assert_eq!(fed.weights(), &[1, 1]);
    }

    #[test]
    fn no_follows_gives_isolated_instances() {
        let mut b = Ecosystem::builder();
        b.add_as("a", "US").unwrap();
        for i in ["i1", "i2"] {
            b.add_instance(crate::Instance::new(i, "a", "US")).unwrap();
        }
        b.add_user("u1", "i1").unwrap();
        let fed = induce_federation_graph(&b.build());
        assert_eq!(fed.node_count(), 2);
        assert!(fed.edges().is_empty());
    }

    #[test]
    fn intra_instance_follows_are_not_federation_edges() {
        let mut b = Ecosystem::builder();
        b.add_as("a", "US").unwrap();
        b.add_instance(crate::Instance::new("i1", "a", "US")).unwrap();
        b.add_user("u1", "i1").unwrap();
        b.add_user("u2", "i1").unwrap();
        b.add_follow("u1", "u2").unwrap();
        assert!(induce_federation_graph(&b.build()).edges().is_empty());
    }

    #[test]
    fn weights_count_underlying_follows() {
        let mut b = Ecosystem::builder();
        b.add_as("a", "US").unwrap();
        b.add_instance(crate::Instance::new("i1", "a", "US")).unwrap();
        b.add_instance(crate::Instance::new("i2", "a", "US")).unwrap();
        for (u, i) in [("u1", "i1"), ("u2", "i1"), ("v1", "i2")] {
            b.add_user(u, i).unwrap();
        }
        b.add_follow("u1", "v1").unwrap();
        b.add_follow("u2", "v1").unwrap();
        b.add_follow("v1", "u1").unwrap();
        let fed = induce_federation_graph(&b.build());
        assert_eq!(fed.edges(), &[(0, 1), (1, 0)]);
        assert_eq!(fed.weights(), &[2, 1]);
        assert_eq!(fed.connection_counts(), vec![1, 1]);
    }

    #[test]
    fn out_degree_examples() {
        // a->b, a->c, b->c
        let g = graph(3, &[(0, 1), (0, 2), (1, 2)]);
        assert_eq!(out_degree_distribution(&g), vec![(0, 1), (1, 1), (2, 1)]);
        assert!(out_degree_distribution(&graph(0, &[])).is_empty());
        let star = graph(6, &[(0, 1), (0, 2), (0, 3), (0, 4), (0, 5)]);
        assert_eq!(out_degree_distribution(&star), vec![(0, 5), (5, 1)]);
    }

    #[test]
    fn ccdf_starts_at_one() {
        let ccdf = complementary_cdf(&[(0, 5), (5, 1)]);
        assert_eq!(ccdf, vec![(0, 1.0), (5, 1.0 / 6.0)]);
    }

    #[test]
    fn component_examples() {
        // a->b, c->d, e isolated
        let s = largest_component(&graph(5, &[(0, 1), (2, 3)]));
        assert_eq!((s.lcc_size, s.component_count), (2, 3));
        assert_eq!(s.lcc_membership, vec!["n00", "n01"]);

        let chain: Vec<(u32, u32)> = (0..9).map(|i| (i, i + 1)).collect();
        let s = largest_component(&graph(10, &chain));
        assert_eq!((s.lcc_size, s.component_count), (10, 1));

        let s = largest_component(&graph(0, &[]));
        assert_eq!((s.lcc_size, s.component_count), (0, 0));
        assert!(s.lcc_membership.is_empty());
    }

    #[test]
    fn direction_is_ignored() {
        // 0 -> 1 <- 2 is one weak component
        let s = largest_component(&graph(3, &[(0, 1), (2, 1)]));
        assert_eq!((s.lcc_size, s.component_count), (3, 1));
    }

    #[test]
    fn invalid_graphs_are_rejected() {
        let nodes = vec!["a".to_string(), "b".to_string()];
        assert!(SocialGraph::new(nodes.clone(), vec![(0, 0)]).is_err());
        assert!(SocialGraph::new(nodes.clone(), vec![(0, 2)]).is_err());
        assert!(SocialGraph::new(nodes, vec![(0, 1), (0, 1)]).is_err());
    }
}
