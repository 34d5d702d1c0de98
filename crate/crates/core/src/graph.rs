//! Causal DAGs: validation, topological order, ancestor sets and
//! Erdős–Rényi generation.

use alloc::collections::{BTreeSet, BinaryHeap};
use alloc::format;
use alloc::vec::Vec;
use core::cmp::Reverse;

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed;

/// Directed acyclic graph over `d` variables.
///
/// Immutable once built; the topological order and ancestor sets are computed
/// up front by [`CausalGraph::from_edges`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CausalGraph {
    d: usize,
    edges: BTreeSet<(usize, usize)>,
    parents: Vec<Vec<usize>>,
    topo_order: Vec<usize>,
    ancestors: Vec<Vec<usize>>,
}

/// JSON shape of a graph file: `{"d": 3, "edges": [[0, 1], [1, 2]]}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GraphFile {
    pub d: usize,
    pub edges: Vec<[usize; 2]>,
}

impl CausalGraph {
    /// Validates an edge set and computes topological order and ancestors.
    ///
    /// The order is Kahn's algorithm with ties broken by ascending node index,
    /// so it is a pure function of the edge set.
    pub fn from_edges<I>(d: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut edge_set = BTreeSet::new();
        for (u, v) in edges {
            for idx in [u, v] {
                if idx >= d {
                    return Err(Error::Index { index: idx, len: d });
                }
            }
            if u == v {
                return Err(Error::Cycle { node: u });
            }
            edge_set.insert((u, v));
        }

        let mut parents = alloc::vec![Vec::new(); d];
        let mut children = alloc::vec![Vec::new(); d];
        let mut indegree = alloc::vec![0usize; d];
        for &(u, v) in &edge_set {
            parents[v].push(u);
            children[u].push(v);
            indegree[v] += 1;
        }

        let mut ready: BinaryHeap<Reverse<usize>> = (0..d).filter(|&v| indegree[v] == 0).map(Reverse).collect();
        let mut topo_order = Vec::with_capacity(d);
        while let Some(Reverse(u)) = ready.pop() {
            topo_order.push(u);
            for &v in &children[u] {
                indegree[v] -= 1;
                if indegree[v] == 0 {
                    ready.push(Reverse(v));
                }
            }
        }
        if topo_order.len() != d {
            let node = (0..d).find(|&v| indegree[v] > 0).unwrap_or(0);
            return Err(Error::Cycle { node });
        }

        let mut ancestor_sets: Vec<BTreeSet<usize>> = alloc::vec![BTreeSet::new(); d];
        for &v in &topo_order {
            let mut acc = BTreeSet::new();
            for &p in &parents[v] {
                acc.insert(p);
                acc.extend(ancestor_sets[p].iter().copied());
            }
            ancestor_sets[v] = acc;
        }

        Ok(Self {
            d,
            edges: edge_set,
            parents,
            topo_order,
            ancestors: ancestor_sets.into_iter().map(|s| s.into_iter().collect()).collect(),
        })
    }

    /// Graph with no edges.
    pub fn empty(d: usize) -> Self {
        Self::from_edges(d, core::iter::empty()).expect("empty graph is acyclic")
    }

    pub fn from_file(file: &GraphFile) -> Result<Self> {
        Self::from_edges(file.d, file.edges.iter().map(|e| (e[0], e[1])))
    }

    pub fn to_file(&self) -> GraphFile {
        GraphFile {
            d: self.d,
            edges: self.edges.iter().map(|&(u, v)| [u, v]).collect(),
        }
    }

    /// Samples an Erdős–Rényi DAG with the given expected degree.
    ///
    /// Every unordered pair is connected with probability
    /// `min(1, expected_degree / (d - 1))` and oriented along a uniformly random
    /// node permutation, which makes the result acyclic by construction.
    pub fn erdos_renyi(d: usize, expected_degree: f64, seed: u64) -> Result<Self> {
        if d < 2 {
            return Err(Error::Argument(format!("need at least 2 nodes, got {d}")));
        }
        if !(expected_degree >= 0.0) || !expected_degree.is_finite() {
            return Err(Error::Argument(format!(
                "expected degree must be a finite non-negative number, got {expected_degree}"
            )));
        }
        let p = (expected_degree / (d - 1) as f64).min(1.0);
        let mut rng = seed::rng(seed);

        let mut perm: Vec<usize> = (0..d).collect();
        perm.shuffle(&mut rng);
        let mut rank = alloc::vec![0usize; d];
        for (pos, &node) in perm.iter().enumerate() {
            rank[node] = pos;
        }

        let mut edges = Vec::new();
        for u in 0..d {
            for v in (u + 1)..d {
                if rng.random::<f64>() < p {
                    if rank[u] < rank[v] {
                        edges.push((u, v));
                    } else {
                        edges.push((v, u));
                    }
                }
            }
        }
        Self::from_edges(d, edges)
    }

    #[inline]
    pub fn node_count(&self) -> usize {
        self.d
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.edges.iter().copied()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn topo_order(&self) -> &[usize] {
        &self.topo_order
    }

    /// Direct parents of `j`, ascending.
    pub fn parents(&self, j: usize) -> Result<&[usize]> {
        self.check(j)?;
        Ok(&self.parents[j])
    }

    /// Ancestors of `j` (transitive closure of parents), ascending.
    pub fn ancestors(&self, j: usize) -> Result<&[usize]> {
        self.check(j)?;
        Ok(&self.ancestors[j])
    }

    pub fn is_source(&self, j: usize) -> bool {
        self.parents[j].is_empty()
    }

    /// Whether a directed path `from -> ... -> to` of length ≥ 1 exists.
    pub fn has_path(&self, from: usize, to: usize) -> bool {
        let mut seen = alloc::vec![false; self.d];
        let mut stack = alloc::vec![from];
        while let Some(u) = stack.pop() {
            for &(a, b) in self.edges.range((u, 0)..(u + 1, 0)) {
                debug_assert_eq!(a, u);
                if b == to {
                    return true;
                }
                if !seen[b] {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        false
    }

    fn check(&self, j: usize) -> Result<()> {
        if j >= self.d {
            Err(Error::Index { index: j, len: self.d })
        } else {
            Ok(())
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn empty_graph_identity_order() {
        let g = CausalGraph::from_edges(3, []).unwrap();
        assert_eq!(g.topo_order(), &[0, 1, 2]);
        for j in 0..3 {
            assert!(g.ancestors(j).unwrap().is_empty());
        }
    }

    #[test]
    fn chain_ancestors() {
        let g = CausalGraph::from_edges(3, [(0, 1), (1, 2)]).unwrap();
        assert_eq!(g.ancestors(0).unwrap(), &[] as &[usize]);
        assert_eq!(g.ancestors(2).unwrap(), &[0, 1]);
    }

    #[test]
    fn collider_ancestors() {
        let g = CausalGraph::from_edges(3, [(0, 2), (1, 2)]).unwrap();
        assert_eq!(g.ancestors(2).unwrap(), &[0, 1]);
        assert_eq!(g.parents(2).unwrap(), &[0, 1]);
    }

    #[test]
    fn two_cycle_rejected() {
        assert!(matches!(
            CausalGraph::from_edges(2, [(0, 1), (1, 0)]),
            Err(Error::Cycle { .. })
        ));
        assert!(matches!(CausalGraph::from_edges(2, [(1, 1)]), Err(Error::Cycle { .. })));
    }

    #[test]
    fn out_of_range_rejected() {
        assert_eq!(
            CausalGraph::from_edges(2, [(0, 2)]),
            Err(Error::Index { index: 2, len: 2 })
        );
        let g = CausalGraph::empty(2);
        assert!(g.ancestors(5).is_err());
    }

    #[test]
    fn tie_break_ascending() {
        // 2 -> 0; ready set starts {1, 2}; 1 first, then 2, then 0
        let g = CausalGraph::from_edges(3, [(2, 0)]).unwrap();
        assert_eq!(g.topo_order(), &[1, 2, 0]);
    }

    #[test]
    fn erdos_renyi_extremes() {
        let g = CausalGraph::erdos_renyi(6, 0.0, 3).unwrap();
        assert_eq!(g.edge_count(), 0);
        let g = CausalGraph::erdos_renyi(6, 5.0, 3).unwrap();
        assert_eq!(g.edge_count(), 15);
        let g = CausalGraph::erdos_renyi(6, 40.0, 3).unwrap();
        assert_eq!(g.edge_count(), 15);
    }

    #[test]
    fn erdos_renyi_arguments() {
        assert!(matches!(CausalGraph::erdos_renyi(1, 1.0, 0), Err(Error::Argument(_))));
        assert!(matches!(CausalGraph::erdos_renyi(4, -0.5, 0), Err(Error::Argument(_))));
    }

    #[test]
    fn file_round_trip() {
        let g = CausalGraph::from_edges(4, [(0, 3), (1, 3), (3, 2)]).unwrap();
        let f = g.to_file();
        assert_eq!(f.edges, vec![[0, 3], [1, 3], [3, 2]]);
        assert_eq!(CausalGraph::from_file(&f).unwrap(), g);
    }
}
