//! Matroid constraints over the module ground set `{0, .., n-1}`.
//!
//! Four families are supported: free, uniform, partition and graphic. Rank is computed
//! by a closed form per family; independence, span and circuits are derived from rank.

use std::cmp::Ordering;

use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum MatroidError {
    #[error("element {element} out of range for ground set of size {n}")]
    OutOfRange { element: usize, n: usize },
    #[error("partition blocks must be disjoint and cover the ground set: {0}")]
    BadPartition(String),
    #[error("partition has {blocks} blocks but {caps} capacities")]
    CapsMismatch { blocks: usize, caps: usize },
    #[error("graphic matroid has {edges} edges but the ground set has {n} elements")]
    EdgeCount { edges: usize, n: usize },
    #[error("edge {edge} endpoint {vertex} outside vertex range 0..{vertices}")]
    BadEndpoint {
        edge: usize,
        vertex: usize,
        vertices: usize,
    },
    #[error("set is not independent")]
    NotIndependent,
    #[error("element {0} is not spanned by the set")]
    NotSpanned(usize),
}

/// The family-specific data of a matroid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Family {
    Free,
    Uniform {
        k: usize,
    },
    /// `block_of[e]` indexes into `caps`.
    Partition {
        blocks: Vec<Vec<usize>>,
        caps: Vec<usize>,
        block_of: Vec<usize>,
    },
    /// Edge `e` joins vertices `edges[e].0` and `edges[e].1` (0-based).
    Graphic {
        vertices: usize,
        edges: Vec<(usize, usize)>,
    },
}

/// A matroid on ground set `{0, .., n-1}`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Matroid {
    n: usize,
    family: Family,
}

impl Matroid {
    pub fn free(n: usize) -> Self {
        Matroid {
            n,
            family: Family::Free,
        }
    }

    pub fn uniform(n: usize, k: usize) -> Self {
        Matroid {
            n,
            family: Family::Uniform { k },
        }
    }

    /// `blocks` must be a disjoint cover of `{0, .., n-1}`.
    pub fn partition(n: usize, blocks: Vec<Vec<usize>>, caps: Vec<usize>) -> Result<Self, MatroidError> {
        if blocks.len() != caps.len() {
            return Err(MatroidError::CapsMismatch {
                blocks: blocks.len(),
                caps: caps.len(),
            });
        }
        let mut block_of = vec![usize::MAX; n];
        for (b, block) in blocks.iter().enumerate() {
            for &e in block {
                if e >= n {
                    return Err(MatroidError::OutOfRange { element: e, n });
                }
                if block_of[e] != usize::MAX {
                    return Err(MatroidError::BadPartition(format!("element {e} appears twice")));
                }
                block_of[e] = b;
            }
        }
        if let Some(e) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(MatroidError::BadPartition(format!("element {e} is in no block")));
        }
        Ok(Matroid {
            n,
            family: Family::Partition { blocks, caps, block_of },
        })
    }

    /// Edges are listed in module order, with 0-based endpoints.
    pub fn graphic(vertices: usize, edges: Vec<(usize, usize)>) -> Result<Self, MatroidError> {
        for (e, &(u, w)) in edges.iter().enumerate() {
            for vertex in [u, w] {
                if vertex >= vertices {
                    return Err(MatroidError::BadEndpoint {
                        edge: e,
                        vertex,
                        vertices,
                    });
                }
            }
        }
        Ok(Matroid {
            n: edges.len(),
            family: Family::Graphic { vertices, edges },
        })
    }

    pub fn ground_size(&self) -> usize {
        self.n
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn is_free(&self) -> bool {
        matches!(self.family, Family::Free)
    }

    pub fn family_name(&self) -> &'static str {
        match self.family {
            Family::Free => "free",
            Family::Uniform { .. } => "uniform",
            Family::Partition { .. } => "partition",
            Family::Graphic { .. } => "graphic",
        }
    }

    pub fn check_elements(&self, set: &[usize]) -> Result<(), MatroidError> {
        match set.iter().find(|&&e| e >= self.n) {
            Some(&element) => Err(MatroidError::OutOfRange { element, n: self.n }),
            None => Ok(()),
        }
    }

    /// Rank of a set of distinct in-range elements.
    pub fn rank_of(&self, set: &[usize]) -> usize {
        match &self.family {
            Family::Free => set.len(),
            Family::Uniform { k } => set.len().min(*k),
            Family::Partition { caps, block_of, .. } => {
                let mut counts = vec![0usize; caps.len()];
                for &e in set {
                    counts[block_of[e]] += 1;
                }
                counts.iter().zip(caps).map(|(&c, &cap)| c.min(cap)).sum()
            }
            Family::Graphic { vertices, edges } => {
                let mut uf = UnionFind::new(*vertices);
                set.iter().filter(|&&e| uf.union(edges[e].0, edges[e].1)).count()
            }
        }
    }

    /// Independence of a set of distinct in-range elements.
    pub fn independent(&self, set: &[usize]) -> bool {
        match &self.family {
            Family::Free => true,
            Family::Uniform { k } => set.len() <= *k,
            _ => self.rank_of(set) == set.len(),
        }
    }

    /// Whether `set ∪ {e}` is independent, for `set` independent and `e ∉ set`.
    pub fn independent_with(&self, set: &[usize], e: usize) -> bool {
        let mut s = Vec::with_capacity(set.len() + 1);
        s.extend_from_slice(set);
        s.push(e);
        self.independent(&s)
    }

    /// `rank(set ∪ {e}) == rank(set)`.
    pub fn spans(&self, set: &[usize], e: usize) -> bool {
        if set.contains(&e) {
            return true;
        }
        let mut with = set.to_vec();
        with.push(e);
        self.rank_of(&with) == self.rank_of(set)
    }

    /// The unique circuit in `g ∪ {e}`, sorted ascending. Requires `g` independent and
    /// `e ∉ g` spanned by `g`.
    pub fn circuit(&self, g: &[usize], e: usize) -> Vec<usize> {
        let mut all = g.to_vec();
        all.push(e);
        let mut circuit: Vec<usize> = (0..all.len())
            .filter(|&skip| {
                let rest: Vec<usize> = all
                    .iter()
                    .enumerate()
                    .filter(|&(k, _)| k != skip)
                    .map(|(_, &x)| x)
                    .collect();
                self.independent(&rest)
            })
            .map(|k| all[k])
            .collect();
        circuit.sort_unstable();
        circuit
    }

    pub fn is_independent(&self, set: &[usize]) -> Result<bool, MatroidError> {
        let set = self.normalize(set)?;
        Ok(self.independent(&set))
    }

    pub fn rank(&self, set: &[usize]) -> Result<usize, MatroidError> {
        let set = self.normalize(set)?;
        Ok(self.rank_of(&set))
    }

    pub fn span_contains(&self, set: &[usize], e: usize) -> Result<bool, MatroidError> {
        let set = self.normalize(set)?;
        self.check_elements(&[e])?;
        Ok(self.spans(&set, e))
    }

    pub fn fundamental_circuit(&self, g: &[usize], e: usize) -> Result<Vec<usize>, MatroidError> {
        let g = self.normalize(g)?;
        self.check_elements(&[e])?;
        if !self.independent(&g) {
            return Err(MatroidError::NotIndependent);
        }
        if g.contains(&e) || !self.spans(&g, e) {
            return Err(MatroidError::NotSpanned(e));
        }
        Ok(self.circuit(&g, e))
    }

    /// Matroid greedy on `ground`: descending weight, ties to the lower index, keeping an
    /// element when it preserves independence. Elements of weight `<= 0` are never taken.
    pub fn max_weight_independent(&self, weights: &[Scalar], ground: &[usize]) -> Vec<usize> {
        let mut order: Vec<usize> = ground.iter().copied().filter(|&e| weights[e].is_positive()).collect();
        order.sort_by(|&a, &b| match weights[b].cmp(&weights[a]) {
            Ordering::Equal => a.cmp(&b),
            o => o,
        });
        order.dedup();
        let mut chosen = Vec::new();
        for e in order {
            if self.independent_with(&chosen, e) {
                chosen.push(e);
            }
        }
        chosen.sort_unstable();
        chosen
    }

    fn normalize(&self, set: &[usize]) -> Result<Vec<usize>, MatroidError> {
        self.check_elements(set)?;
        let mut s = set.to_vec();
        s.sort_unstable();
        s.dedup();
        Ok(s)
    }
}

struct UnionFind {
    parent: Vec<usize>,
}

impl UnionFind {
    fn new(n: usize) -> Self {
        UnionFind {
            parent: (0..n).collect(),
        }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    /// Returns false when `a` and `b` were already connected.
    fn union(&mut self, a: usize, b: usize) -> bool {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        self.parent[ra] = rb;
        true
    }
}
