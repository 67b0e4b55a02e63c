//! Maximum clique by branch and bound with a greedy-coloring bound.
//!
//! Vertices are processed in degeneracy order; each subproblem is the set of neighbors
//! that come later in that order (at most the degeneracy), solved on local bitsets.
//! A global work budget bounds the search on large dense graphs.

use crate::graph::{degeneracy_order, Graph};

/// Outcome of [`clique_number`]. `lower` is always the size of `witness`, a real clique.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CliqueResult {
    pub lower: usize,
    pub exact: bool,
    pub witness: Vec<usize>,
}

#[derive(Clone)]
struct Bits(Vec<u64>);

impl Bits {
    fn zeros(len: usize) -> Self {
        Bits(vec![0; len.div_ceil(64)])
    }

    #[inline]
    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    #[inline]
    fn clear(&mut self, i: usize) {
        self.0[i / 64] &= !(1 << (i % 64));
    }

    fn is_empty(&self) -> bool {
        self.0.iter().all(|&w| w == 0)
    }

    fn and(&self, other: &Bits) -> Bits {
        Bits(self.0.iter().zip(&other.0).map(|(a, b)| a & b).collect())
    }

    fn first(&self) -> Option<usize> {
        self.0
            .iter()
            .enumerate()
            .find(|(_, &w)| w != 0)
            .map(|(i, w)| i * 64 + w.trailing_zeros() as usize)
    }
}

struct Search<'a> {
    adj: &'a [Bits],
    best: usize,
    best_set: Vec<usize>,
    work: u64,
    budget: u64,
    aborted: bool,
}

impl Search<'_> {
    /// Greedy color classes over `p`; returns vertices in nondecreasing color with their colors.
    fn color_sort(&self, p: &Bits) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        let mut uncolored = p.clone();
        let mut color = 0;
        while !uncolored.is_empty() {
            color += 1;
            let mut q = uncolored.clone();
            while let Some(v) = q.first() {
                q.clear(v);
                uncolored.clear(v);
                for (qw, aw) in q.0.iter_mut().zip(&self.adj[v].0) {
                    *qw &= !aw;
                }
                out.push((v, color));
            }
        }
        out
    }

    fn expand(&mut self, r: &mut Vec<usize>, mut p: Bits) {
        self.work += 1;
        if self.work > self.budget {
            self.aborted = true;
            return;
        }
        let order = self.color_sort(&p);
        for &(v, color) in order.iter().rev() {
            if r.len() + color <= self.best {
                return;
            }
            r.push(v);
            let next = p.and(&self.adj[v]);
            if next.is_empty() {
                if r.len() > self.best {
                    self.best = r.len();
                    self.best_set = r.clone();
                }
            } else {
                self.expand(r, next);
            }
            r.pop();
            p.clear(v);
            if self.aborted {
                return;
            }
        }
    }
}

/// Maximum clique with a node-expansion `budget`. When the budget runs out the best clique
/// found so far is returned with `exact = false`.
pub fn clique_number(g: &Graph, budget: u64) -> CliqueResult {
    let n = g.n();
    if n == 0 {
        return CliqueResult { lower: 0, exact: true, witness: Vec::new() };
    }
    let (order, _) = degeneracy_order(g);
    let mut rank = vec![0usize; n];
    for (i, &v) in order.iter().enumerate() {
        rank[v] = i;
    }

    let mut best = vec![order[n - 1]];
    let mut work = 0u64;
    let mut exact = true;
    let mut local = vec![u32::MAX; n];

    // Late vertices in degeneracy order sit in the densest cores; process them first so
    // the bound tightens early.
    for &v in order.iter().rev() {
        let cand: Vec<usize> = g
            .neighbors(v)
            .iter()
            .map(|&w| w as usize)
            .filter(|&w| rank[w] > rank[v])
            .collect();
        if cand.len() < best.len() {
            continue;
        }
        for (i, &w) in cand.iter().enumerate() {
            local[w] = i as u32;
        }
        let k = cand.len();
        let mut adj = vec![Bits::zeros(k); k];
        for (i, &w) in cand.iter().enumerate() {
            work += g.degree(w) as u64 / 64 + 1;
            for &x in g.neighbors(w) {
                let j = local[x as usize];
                if j != u32::MAX {
                    adj[i].set(j as usize);
                }
            }
        }
        for &w in &cand {
            local[w] = u32::MAX;
        }
        let mut all = Bits::zeros(k);
        (0..k).for_each(|i| all.set(i));

        let mut search = Search {
            adj: &adj,
            best: best.len() - 1,
            best_set: Vec::new(),
            work,
            budget,
            aborted: false,
        };
        search.expand(&mut Vec::new(), all);
        work = search.work;
        if !search.best_set.is_empty() {
            let mut clique: Vec<usize> = search.best_set.iter().map(|&i| cand[i]).collect();
            clique.push(v);
            best = clique;
        }
        if search.aborted || work > budget {
            exact = false;
            break;
        }
    }
    best.sort_unstable();
    CliqueResult { lower: best.len(), exact, witness: best }
}
