//! Vertex colorings: greedy orderings, DSATUR, exact branch and bound, and a brute-force
//! reference for tiny graphs. The distance-l chromatic number is the chromatic number of
//! the l-th graph power.

use std::cmp::Reverse;
use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::clique::clique_number;
use crate::graph::{degeneracy_order, graph_power, Graph};
use crate::{Error, Result};

/// Which procedure produced a [`Coloring`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ColoringMethod {
    GreedyGiven,
    GreedyRandom,
    GreedySmallestLast,
    Dsatur,
    Exact,
}

impl fmt::Display for ColoringMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ColoringMethod::GreedyGiven => "greedy-given",
            ColoringMethod::GreedyRandom => "greedy-random",
            ColoringMethod::GreedySmallestLast => "greedy-smallest-last",
            ColoringMethod::Dsatur => "dsatur",
            ColoringMethod::Exact => "exact",
        })
    }
}

/// A vertex coloring with colors canonicalized by first occurrence in vertex order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Coloring {
    pub colors: Vec<u32>,
    pub num_colors: usize,
    pub method: ColoringMethod,
}

impl Coloring {
    fn canonical(raw: &[u32], method: ColoringMethod) -> Self {
        let mut relabel: Vec<u32> = Vec::new();
        let mut seen = vec![u32::MAX; raw.iter().map(|&c| c as usize + 1).max().unwrap_or(0)];
        let colors = raw
            .iter()
            .map(|&c| {
                if seen[c as usize] == u32::MAX {
                    seen[c as usize] = relabel.len() as u32;
                    relabel.push(c);
                }
                seen[c as usize]
            })
            .collect();
        Coloring { colors, num_colors: relabel.len(), method }
    }

    /// No edge of `g` joins two vertices of the same color.
    pub fn is_proper(&self, g: &Graph) -> bool {
        self.colors.len() == g.n()
            && g.edges().all(|(i, j)| self.colors[i] != self.colors[j])
            && self.num_colors == self.colors.iter().map(|&c| c as usize + 1).max().unwrap_or(0)
    }

    /// One `"index color"` line per vertex.
    pub fn write_to<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (i, c) in self.colors.iter().enumerate() {
            writeln!(out, "{i} {c}")?;
        }
        out.flush()
    }
}

/// Vertex orderings for [`greedy_color`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Ordering {
    Given(Vec<usize>),
    SmallestLast,
    Random(u64),
}

/// First-fit coloring along `ordering`. Uses at most `max_degree + 1` colors.
pub fn greedy_color(g: &Graph, ordering: &Ordering) -> Result<Coloring> {
    let n = g.n();
    let (order, method) = match ordering {
        Ordering::Given(seq) => {
            let mut seen = vec![false; n];
            if seq.len() != n || seq.iter().any(|&v| v >= n || std::mem::replace(&mut seen[v], true)) {
                return Err(Error::Usage("greedy ordering must be a permutation of the vertices".into()));
            }
            (seq.clone(), ColoringMethod::GreedyGiven)
        }
        Ordering::SmallestLast => {
            let (mut order, _) = degeneracy_order(g);
            order.reverse();
            (order, ColoringMethod::GreedySmallestLast)
        }
        Ordering::Random(seed) => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut ChaCha8Rng::seed_from_u64(*seed));
            (order, ColoringMethod::GreedyRandom)
        }
    };
    let mut colors = vec![u32::MAX; n];
    // blocked[c] == v marks color c as used by a neighbor of v.
    let mut blocked: Vec<usize> = Vec::new();
    for &v in &order {
        for &w in g.neighbors(v) {
            let c = colors[w as usize];
            if c != u32::MAX {
                let c = c as usize;
                if c >= blocked.len() {
                    blocked.resize(c + 1, usize::MAX);
                }
                blocked[c] = v;
            }
        }
        let c = (0..).find(|&c| c >= blocked.len() || blocked[c] != v).unwrap();
        colors[v] = c as u32;
    }
    Ok(Coloring::canonical(&colors, method))
}

/// DSATUR: repeatedly color the uncolored vertex with the most distinct neighbor colors,
/// breaking ties by larger degree and then smaller index, with its smallest free color.
pub fn dsatur(g: &Graph) -> Coloring {
    let n = g.n();
    let words = (crate::graph::max_degree(g) + 1).div_ceil(64);
    let mut neighbor_colors = vec![0u64; n * words];
    let mut colors = vec![u32::MAX; n];
    let mut queue = Tournament::new((0..n).map(|v| (g.degree(v) as u64) << 32).collect());

    while let Some(v) = queue.top() {
        let row = &neighbor_colors[v * words..(v + 1) * words];
        let c = row
            .iter()
            .enumerate()
            .find(|(_, &w)| w != u64::MAX)
            .map(|(i, w)| i * 64 + w.trailing_ones() as usize)
            .expect("a free color always exists below max_degree + 1");
        colors[v] = c as u32;
        queue.remove(v);
        let (word, bit) = (c / 64, 1u64 << (c % 64));
        for &w in g.neighbors(v) {
            let w = w as usize;
            if colors[w] != u32::MAX {
                continue;
            }
            let cell = &mut neighbor_colors[w * words + word];
            if *cell & bit == 0 {
                *cell |= bit;
                queue.raise(w, queue.key(w) + 1);
            }
        }
    }
    Coloring::canonical(&colors, ColoringMethod::Dsatur)
}

/// Max tournament tree over vertices. Keys store `degree << 32 | saturation`; comparisons
/// rank by saturation, then degree, then the smaller index.
struct Tournament {
    keys: Vec<u64>,
    tree: Vec<u32>,
    leaves: usize,
}

impl Tournament {
    const NONE: u32 = u32::MAX;

    fn new(static_keys: Vec<u64>) -> Self {
        let n = static_keys.len();
        let leaves = n.next_power_of_two().max(1);
        let mut tree = vec![Self::NONE; 2 * leaves];
        for v in 0..n {
            tree[leaves + v] = v as u32;
        }
        let mut t = Tournament { keys: static_keys, tree, leaves };
        for i in (1..leaves).rev() {
            t.tree[i] = t.winner(t.tree[2 * i], t.tree[2 * i + 1]);
        }
        t
    }

    /// Priority used for comparisons: saturation first, then degree.
    fn priority(&self, v: u32) -> u64 {
        let k = self.keys[v as usize];
        k.rotate_right(32)
    }

    fn winner(&self, a: u32, b: u32) -> u32 {
        match (a, b) {
            (Self::NONE, x) | (x, Self::NONE) => x,
            _ if self.priority(b) > self.priority(a) => b,
            _ => a,
        }
    }

    fn top(&self) -> Option<usize> {
        (self.tree[1] != Self::NONE).then(|| self.tree[1] as usize)
    }

    fn key(&self, v: usize) -> u64 {
        self.keys[v]
    }

    fn replay(&mut self, v: usize) {
        let mut i = (self.leaves + v) / 2;
        while i >= 1 {
            self.tree[i] = self.winner(self.tree[2 * i], self.tree[2 * i + 1]);
            i /= 2;
        }
    }

    fn raise(&mut self, v: usize, key: u64) {
        self.keys[v] = key;
        self.replay(v);
    }

    fn remove(&mut self, v: usize) {
        self.tree[self.leaves + v] = Self::NONE;
        self.replay(v);
    }
}

/// Certified bounds on a chromatic number.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChromaticEstimate {
    pub lower: usize,
    pub upper: usize,
    /// `lower == upper` was certified; then `upper` is the chromatic number.
    pub exact: bool,
    /// A proper coloring with `upper` colors.
    pub coloring: Coloring,
}

/// Exact DSATUR-style search on one connected graph, looking for colorings with fewer
/// than `upper` colors. Clique vertices are fixed to distinct colors up front.
struct ExactSearch<'a> {
    g: &'a Graph,
    upper: usize,
    lower: usize,
    best: Vec<u32>,
    colors: Vec<u32>,
    // counts[v * width + c]: neighbors of v with color c.
    counts: Vec<u32>,
    width: usize,
    sat: Vec<usize>,
    nodes: u64,
    budget: u64,
    aborted: bool,
}

impl ExactSearch<'_> {
    fn assign(&mut self, v: usize, c: usize) {
        self.colors[v] = c as u32;
        for &w in self.g.neighbors(v) {
            let slot = &mut self.counts[w as usize * self.width + c];
            if *slot == 0 {
                self.sat[w as usize] += 1;
            }
            *slot += 1;
        }
    }

    fn unassign(&mut self, v: usize, c: usize) {
        self.colors[v] = u32::MAX;
        for &w in self.g.neighbors(v) {
            let slot = &mut self.counts[w as usize * self.width + c];
            *slot -= 1;
            if *slot == 0 {
                self.sat[w as usize] -= 1;
            }
        }
    }

    fn pick(&self) -> Option<usize> {
        let mut best: Option<(usize, usize, usize)> = None;
        for v in 0..self.g.n() {
            if self.colors[v] != u32::MAX {
                continue;
            }
            let key = (self.sat[v], self.g.degree(v));
            if best.is_none_or(|(s, d, _)| key > (s, d)) {
                best = Some((key.0, key.1, v));
            }
        }
        best.map(|(_, _, v)| v)
    }

    /// Returns true when the search should stop (optimum certified or budget spent).
    fn search(&mut self, used: usize) -> bool {
        self.nodes += 1;
        if self.nodes > self.budget {
            self.aborted = true;
            return true;
        }
        let Some(v) = self.pick() else {
            self.upper = used;
            self.best = self.colors.clone();
            return self.upper <= self.lower;
        };
        let mut c = 0;
        while c <= used && c + 1 < self.upper {
            if self.counts[v * self.width + c] == 0 {
                self.assign(v, c);
                let stop = self.search(used.max(c + 1));
                self.unassign(v, c);
                if stop {
                    return true;
                }
            }
            c += 1;
        }
        false
    }
}

/// Vertices that survive repeatedly deleting vertices of degree below `k`, and the deleted
/// vertices in deletion order. `g` is `k`-colorable iff the surviving core is.
fn k_core(g: &Graph, k: usize) -> (Vec<usize>, Vec<usize>) {
    let n = g.n();
    let mut degree: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let mut removed = vec![false; n];
    let mut order = Vec::new();
    let mut stack: Vec<usize> = (0..n).filter(|&v| degree[v] < k).collect();
    stack.iter().for_each(|&v| removed[v] = true);
    while let Some(v) = stack.pop() {
        order.push(v);
        for &w in g.neighbors(v) {
            let w = w as usize;
            degree[w] -= 1;
            if !removed[w] && degree[w] < k {
                removed[w] = true;
                stack.push(w);
            }
        }
    }
    ((0..n).filter(|&v| !removed[v]).collect(), order)
}

/// Looks for a coloring of `g` with at most `k` colors: branch and bound on the `k`-core,
/// then first-fit over the peeled vertices in reverse deletion order. `Ok(None)` means no
/// such coloring exists; `Err(())` means the node budget ran out first.
fn color_with_at_most(g: &Graph, k: usize, budget: &mut u64) -> std::result::Result<Option<Vec<u32>>, ()> {
    let (core, peeled) = k_core(g, k);
    let mut colors = vec![u32::MAX; g.n()];
    if !core.is_empty() {
        let h = g.induced(&core);
        let clique = clique_number(&h, *budget);
        if clique.lower > k {
            return Ok(None);
        }
        let mut s = ExactSearch {
            g: &h,
            upper: k + 1,
            // Any coloring of the core within `k` colors settles the question.
            lower: k,
            best: Vec::new(),
            colors: vec![u32::MAX; h.n()],
            counts: vec![0; h.n() * (k + 1)],
            width: k + 1,
            sat: vec![0; h.n()],
            nodes: 0,
            budget: *budget,
            aborted: false,
        };
        for (c, &v) in clique.witness.iter().enumerate() {
            s.assign(v, c);
        }
        s.search(clique.witness.len());
        *budget = budget.saturating_sub(s.nodes);
        if s.best.is_empty() {
            return if s.aborted { Err(()) } else { Ok(None) };
        }
        for (local, &v) in core.iter().enumerate() {
            colors[v] = s.best[local];
        }
    }
    let mut taken = vec![false; k];
    for &v in peeled.iter().rev() {
        taken.iter_mut().for_each(|t| *t = false);
        for &w in g.neighbors(v) {
            let c = colors[w as usize];
            if c != u32::MAX {
                taken[c as usize] = true;
            }
        }
        // At deletion `v` had fewer than `k` neighbors left, and exactly those are colored now.
        colors[v] = taken.iter().position(|&t| !t).expect("peeled vertex has a free color") as u32;
    }
    Ok(Some(colors))
}

fn exact_connected(g: &Graph, budget: u64, floor: usize) -> ChromaticEstimate {
    let heuristic = dsatur(g);
    let clique = clique_number(g, budget);
    let lower = clique.lower.max(1);
    let mut upper = heuristic.num_colors;
    let mut best = heuristic.colors.clone();
    let mut exact = lower == upper;
    let mut remaining = budget;
    // `floor` is a chromatic lower bound already established elsewhere; this component
    // cannot raise the overall answer once its upper bound drops to it.
    while !exact && upper > floor {
        match color_with_at_most(g, upper - 1, &mut remaining) {
            Ok(Some(colors)) => {
                let c = Coloring::canonical(&colors, ColoringMethod::Exact);
                upper = c.num_colors;
                best = c.colors;
                exact = upper <= lower;
            }
            Ok(None) => exact = true,
            Err(()) => break,
        }
    }
    ChromaticEstimate {
        lower: if exact { upper } else { lower },
        upper,
        exact,
        coloring: Coloring::canonical(&best, ColoringMethod::Exact),
    }
}

/// Exact chromatic number by branch and bound, solved per connected component.
///
/// `budget` caps search nodes per component (and clique expansions). If it runs out the
/// result carries the best certified bracket with `exact = false`.
pub fn exact_chromatic(g: &Graph, budget: u64) -> ChromaticEstimate {
    let n = g.n();
    let mut colors = vec![0u32; n];
    let mut lower = usize::from(n > 0);
    let mut upper = lower;
    let mut all_exact = true;
    let mut components = g.components();
    components.sort_by_key(|c| Reverse(c.len()));
    for comp in components {
        let sub = g.induced(&comp);
        let est = exact_connected(&sub, budget, lower);
        for (local, &v) in comp.iter().enumerate() {
            colors[v] = est.coloring.colors[local];
        }
        lower = lower.max(est.lower);
        upper = upper.max(est.upper);
        // An inexact component matters only if it could exceed the certified lower bound.
        if !est.exact && est.upper > lower {
            all_exact = false;
        }
    }
    let exact = all_exact || lower == upper;
    ChromaticEstimate {
        lower: if exact { upper } else { lower },
        upper,
        exact,
        coloring: Coloring::canonical(&colors, ColoringMethod::Exact),
    }
}

/// Smallest number of colors admitting a proper coloring, by enumerating every partition
/// of the vertex set into color classes (restricted growth strings). Only for `n <= 10`.
pub fn chromatic_bruteforce(g: &Graph) -> Result<usize> {
    let n = g.n();
    if n > 10 {
        return Err(Error::Usage(format!("brute-force chromatic number limited to n <= 10, got {n}")));
    }
    if n == 0 {
        return Ok(0);
    }
    let edges: Vec<(usize, usize)> = g.edges().collect();
    let mut assignment = vec![0usize; n];
    let mut best = n;
    // Odometer over restricted growth strings: a[i] <= 1 + max(a[..i]).
    loop {
        if edges.iter().all(|&(i, j)| assignment[i] != assignment[j]) {
            let k = assignment.iter().max().unwrap() + 1;
            best = best.min(k);
        }
        let mut i = n - 1;
        loop {
            if i == 0 {
                return Ok(best);
            }
            let prefix_max = assignment[..i].iter().copied().max().unwrap();
            if assignment[i] <= prefix_max {
                assignment[i] += 1;
                assignment[i + 1..].iter_mut().for_each(|a| *a = 0);
                break;
            }
            i -= 1;
        }
    }
}

/// How a chromatic number is estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Method {
    Exact,
    Dsatur,
    Greedy,
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "exact" => Ok(Method::Exact),
            "dsatur" => Ok(Method::Dsatur),
            "greedy" => Ok(Method::Greedy),
            _ => Err(Error::Usage(format!("unknown coloring method '{s}'"))),
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Exact => "exact",
            Method::Dsatur => "dsatur",
            Method::Greedy => "greedy",
        })
    }
}

/// Bracket for `chi(g)`: exact search, or a heuristic upper bound with a clique lower bound.
pub fn estimate_chromatic(g: &Graph, method: Method, budget: u64) -> ChromaticEstimate {
    let coloring = match method {
        Method::Exact => return exact_chromatic(g, budget),
        Method::Dsatur => dsatur(g),
        Method::Greedy => greedy_color(g, &Ordering::SmallestLast).expect("internal ordering is a permutation"),
    };
    let lower = clique_number(g, budget).lower;
    let upper = coloring.num_colors;
    ChromaticEstimate { lower, upper, exact: lower == upper, coloring }
}

/// Bracket for the distance-`l` chromatic number, i.e. the chromatic number of `g^l`.
pub fn distant_chromatic(g: &Graph, l: usize, method: Method, budget: u64) -> Result<ChromaticEstimate> {
    let power = graph_power(g, l)?;
    Ok(estimate_chromatic(&power, method, budget))
}
