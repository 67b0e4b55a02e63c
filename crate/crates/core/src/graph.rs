//! Geometric graph construction, graph powers and edge-list serialization.

use std::io::{BufRead, Write};

use rayon::prelude::*;

use crate::geometry::{Norm, PointCloud, Points};
use crate::{Error, Result};

/// Undirected simple graph in compressed sparse row form.
///
/// Neighbor lists are strictly increasing and symmetric; there are no self-loops.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Graph { offsets: vec![0; n + 1], targets: Vec::new() }
    }

    /// Builds from per-vertex neighbor lists that are already sorted and symmetric.
    fn from_sorted_lists(lists: Vec<Vec<u32>>) -> Self {
        let mut offsets = Vec::with_capacity(lists.len() + 1);
        offsets.push(0);
        let total = lists.iter().map(Vec::len).sum();
        let mut targets = Vec::with_capacity(total);
        for list in lists {
            targets.extend_from_slice(&list);
            offsets.push(targets.len());
        }
        Graph { offsets, targets }
    }

    /// Builds from an undirected edge list; duplicates are merged, self-loops rejected.
    pub fn from_edges(n: usize, edges: &[(usize, usize)]) -> Result<Self> {
        let mut lists = vec![Vec::new(); n];
        for &(i, j) in edges {
            if i >= n || j >= n {
                return Err(Error::Usage(format!("edge ({i}, {j}) out of range for n = {n}")));
            }
            if i == j {
                return Err(Error::Usage(format!("self-loop at vertex {i}")));
            }
            lists[i].push(j as u32);
            lists[j].push(i as u32);
        }
        for list in &mut lists {
            list.sort_unstable();
            list.dedup();
        }
        Ok(Graph::from_sorted_lists(lists))
    }

    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    /// Edges `(i, j)` with `i < j`, in lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |i| {
            self.neighbors(i)
                .iter()
                .filter(move |&&j| (j as usize) > i)
                .map(move |&j| (i, j as usize))
        })
    }

    /// True when every edge of `self` is an edge of `other` (same vertex count required).
    pub fn is_subgraph_of(&self, other: &Graph) -> bool {
        self.n() == other.n()
            && (0..self.n()).all(|v| is_sorted_subset(self.neighbors(v), other.neighbors(v)))
    }

    /// Checks symmetry, sortedness and absence of self-loops.
    pub fn validate(&self) -> Result<()> {
        for v in 0..self.n() {
            let nb = self.neighbors(v);
            if nb.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Invariant(format!("neighbors of {v} not strictly sorted")));
            }
            for &w in nb {
                let w = w as usize;
                if w == v || w >= self.n() || !self.has_edge(w, v) {
                    return Err(Error::Invariant(format!("bad adjacency entry {v} -> {w}")));
                }
            }
        }
        Ok(())
    }

    /// Subgraph induced by `vertices`, relabelled `0..vertices.len()` in the given order.
    pub fn induced(&self, vertices: &[usize]) -> Graph {
        let mut local = vec![u32::MAX; self.n()];
        for (i, &v) in vertices.iter().enumerate() {
            local[v] = i as u32;
        }
        let lists = vertices
            .iter()
            .map(|&v| {
                let mut list: Vec<u32> = self
                    .neighbors(v)
                    .iter()
                    .map(|&w| local[w as usize])
                    .filter(|&w| w != u32::MAX)
                    .collect();
                list.sort_unstable();
                list
            })
            .collect();
        Graph::from_sorted_lists(lists)
    }

    /// Connected components, each sorted, ordered by smallest member.
    pub fn components(&self) -> Vec<Vec<usize>> {
        let mut seen = vec![false; self.n()];
        let mut out = Vec::new();
        for s in 0..self.n() {
            if seen[s] {
                continue;
            }
            seen[s] = true;
            let mut comp = vec![s];
            let mut head = 0;
            while head < comp.len() {
                let u = comp[head];
                head += 1;
                for &w in self.neighbors(u) {
                    if !seen[w as usize] {
                        seen[w as usize] = true;
                        comp.push(w as usize);
                    }
                }
            }
            comp.sort_unstable();
            out.push(comp);
        }
        out
    }
}

fn is_sorted_subset(small: &[u32], big: &[u32]) -> bool {
    let mut it = big.iter();
    small.iter().all(|x| it.by_ref().any(|y| y == x))
}

/// Maximum degree, `0` for edgeless graphs.
pub fn max_degree(g: &Graph) -> usize {
    (0..g.n()).map(|v| g.degree(v)).max().unwrap_or(0)
}

/// Smallest-degree-first removal order (Matula–Beck) and the core number of each vertex.
pub fn degeneracy_order(g: &Graph) -> (Vec<usize>, Vec<usize>) {
    let n = g.n();
    let mut deg: Vec<usize> = (0..n).map(|v| g.degree(v)).collect();
    let max_deg = deg.iter().copied().max().unwrap_or(0);
    // Bucket sort vertices by current degree; `pos` indexes into `vert`.
    let mut bin = vec![0usize; max_deg + 2];
    for &d in &deg {
        bin[d + 1] += 1;
    }
    for i in 1..bin.len() {
        bin[i] += bin[i - 1];
    }
    let mut vert = vec![0usize; n];
    let mut pos = vec![0usize; n];
    {
        let mut next = bin.clone();
        for v in 0..n {
            pos[v] = next[deg[v]];
            vert[pos[v]] = v;
            next[deg[v]] += 1;
        }
    }
    for i in 0..n {
        let v = vert[i];
        for &w in g.neighbors(v) {
            let w = w as usize;
            if deg[w] > deg[v] {
                let dw = deg[w];
                let pw = pos[w];
                let start = bin[dw];
                let u = vert[start];
                if u != w {
                    vert.swap(pw, start);
                    pos[u] = pw;
                    pos[w] = start;
                }
                bin[dw] += 1;
                deg[w] -= 1;
            }
        }
    }
    (vert, deg)
}

/// Uniform grid over a point set with cell side slightly above `radius`, so any two
/// points at l^p distance `< radius` (any `p >= 1`) sit in cells differing by at most
/// one along every axis.
pub(crate) struct CellGrid<'a> {
    points: &'a Points,
    keys: Vec<i64>,
    order: Vec<u32>,
    cells: Vec<(usize, usize)>,
    offsets: Vec<Vec<i64>>,
}

impl<'a> CellGrid<'a> {
    pub(crate) fn new(points: &'a Points, radius: f64) -> Self {
        let d = points.dim();
        let n = points.len();
        let side = radius * (1.0 + 1e-6);
        let mut lo = vec![f64::INFINITY; d];
        for p in points.iter() {
            for (l, &c) in lo.iter_mut().zip(p) {
                *l = l.min(c);
            }
        }
        let mut keys = vec![0i64; n * d];
        for (i, p) in points.iter().enumerate() {
            for a in 0..d {
                keys[i * d + a] = ((p[a] - lo[a]) / side).floor() as i64;
            }
        }
        let key = |i: usize| &keys[i * d..(i + 1) * d];
        let mut order: Vec<u32> = (0..n as u32).collect();
        order.sort_by(|&a, &b| key(a as usize).cmp(key(b as usize)).then(a.cmp(&b)));
        let mut cells = Vec::new();
        let mut start = 0;
        for i in 1..=n {
            if i == n || key(order[i] as usize) != key(order[start] as usize) {
                cells.push((start, i));
                start = i;
            }
        }
        let mut offsets = vec![Vec::new()];
        for _ in 0..d {
            offsets = offsets
                .into_iter()
                .flat_map(|o: Vec<i64>| {
                    (-1..=1).map(move |s| {
                        let mut o = o.clone();
                        o.push(s);
                        o
                    })
                })
                .collect();
        }
        CellGrid { points, keys, order, cells, offsets }
    }

    fn key(&self, i: usize) -> &[i64] {
        let d = self.points.dim();
        &self.keys[i * d..(i + 1) * d]
    }

    fn find_cell(&self, key: &[i64]) -> Option<(usize, usize)> {
        self.cells
            .binary_search_by(|&(s, _)| self.key(self.order[s] as usize).cmp(key))
            .ok()
            .map(|c| self.cells[c])
    }

    /// Calls `f(j)` for every point `j` (including `i` itself) in the 3^d cell block around `i`.
    #[inline]
    pub(crate) fn for_each_candidate(&self, i: usize, mut f: impl FnMut(usize)) {
        let home = self.key(i);
        let mut probe = vec![0i64; home.len()];
        for off in &self.offsets {
            for (p, (h, o)) in probe.iter_mut().zip(home.iter().zip(off)) {
                *p = h + o;
            }
            if let Some((s, e)) = self.find_cell(&probe) {
                for &j in &self.order[s..e] {
                    f(j as usize);
                }
            }
        }
    }
}

fn within(points: &Points, norm: Norm, radius: f64, i: usize, j: usize) -> bool {
    norm.distance(points.point(i), points.point(j)) < radius
}

/// Geometric graph: `{i, j}` is an edge iff `||X_i - X_j||_p < r` (strict).
pub fn build_graph(cloud: &PointCloud) -> Graph {
    let points = &cloud.points;
    let grid = CellGrid::new(points, cloud.radius);
    let lists = (0..points.len())
        .into_par_iter()
        .map(|i| {
            let mut list = Vec::new();
            grid.for_each_candidate(i, |j| {
                if j != i && within(points, cloud.norm, cloud.radius, i, j) {
                    list.push(j as u32);
                }
            });
            list.sort_unstable();
            list
        })
        .collect();
    Graph::from_sorted_lists(lists)
}

/// Quadratic all-pairs construction, the reference for [`build_graph`].
pub fn build_graph_bruteforce(cloud: &PointCloud) -> Graph {
    let points = &cloud.points;
    let n = points.len();
    let lists = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| j != i && within(points, cloud.norm, cloud.radius, i, j))
                .map(|j| j as u32)
                .collect()
        })
        .collect();
    Graph::from_sorted_lists(lists)
}

/// The `l`-th power: `{i, j}` is an edge iff `0 < d_G(i, j) <= l`.
///
/// One depth-limited BFS per source vertex; sources run in parallel.
pub fn graph_power(g: &Graph, l: usize) -> Result<Graph> {
    if l == 0 {
        return Err(Error::Usage("graph power needs l >= 1".into()));
    }
    if l == 1 {
        return Ok(g.clone());
    }
    let n = g.n();
    let lists = (0..n)
        .into_par_iter()
        .map_init(
            || (vec![u32::MAX; n], Vec::new(), Vec::new()),
            |(mark, frontier, next), s| {
                let stamp = s as u32;
                mark[s] = stamp;
                frontier.clear();
                frontier.push(s as u32);
                let mut reached = Vec::new();
                for _ in 0..l {
                    next.clear();
                    for &u in frontier.iter() {
                        for &w in g.neighbors(u as usize) {
                            if mark[w as usize] != stamp {
                                mark[w as usize] = stamp;
                                next.push(w);
                                reached.push(w);
                            }
                        }
                    }
                    if next.is_empty() {
                        break;
                    }
                    std::mem::swap(frontier, next);
                }
                reached.sort_unstable();
                reached
            },
        )
        .collect();
    Ok(Graph::from_sorted_lists(lists))
}

/// Writes the `"n m"` header followed by one sorted `"i j"` line per edge, `i < j`.
pub fn write_edgelist<W: Write>(g: &Graph, mut out: W) -> std::io::Result<()> {
    writeln!(out, "{} {}", g.n(), g.edge_count())?;
    for (i, j) in g.edges() {
        writeln!(out, "{i} {j}")?;
    }
    out.flush()
}

/// Parses the format produced by [`write_edgelist`].
pub fn read_edgelist<R: BufRead>(input: R) -> Result<Graph> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Usage("empty edge list".into()))??;
    let mut fields = header.split_whitespace().map(str::parse::<usize>);
    let (n, m) = match (fields.next(), fields.next(), fields.next()) {
        (Some(Ok(n)), Some(Ok(m)), None) => (n, m),
        _ => return Err(Error::Usage(format!("bad edge-list header '{header}'"))),
    };
    let mut edges = Vec::with_capacity(m);
    for line in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let mut f = line.split_whitespace().map(str::parse::<usize>);
        match (f.next(), f.next(), f.next()) {
            (Some(Ok(i)), Some(Ok(j)), None) if i < j => edges.push((i, j)),
            _ => return Err(Error::Usage(format!("bad edge line '{line}'"))),
        }
    }
    let g = Graph::from_edges(n, &edges)?;
    if edges.len() != m || g.edge_count() != m {
        return Err(Error::Usage(format!(
            "edge list declares {m} edges but contains {} distinct",
            g.edge_count()
        )));
    }
    Ok(g)
}


#[cfg(test)]
mod tests {
    use super::fixtures::*;
    use super::*;
    use crate::geometry::{sample_points, Density};
    use proptest::prelude::*;

    fn cloud(rows: &[Vec<f64>], r: f64, norm: Norm) -> PointCloud {
        PointCloud::new(Points::from_rows(rows).unwrap(), r, norm).unwrap()
    }

    #[test]
    fn boundary_distance_is_not_an_edge() {
        let c = cloud(&[vec![0.0, 0.0], vec![1.0, 0.0]], 1.0, Norm::P(2.0));
        assert_eq!(build_graph(&c).edge_count(), 0);
        assert_eq!(build_graph_bruteforce(&c).edge_count(), 0);
        let c = cloud(&[vec![0.0, 0.0], vec![0.5, 0.0]], 1.0, Norm::P(2.0));
        assert_eq!(build_graph(&c).edge_count(), 1);
    }

    #[test]
    fn single_point() {
        let g = build_graph(&cloud(&[vec![0.3, 0.3]], 0.1, Norm::P(2.0)));
        assert_eq!((g.n(), g.edge_count()), (1, 0));
    }

    #[test]
    fn sparse_and_clique_clouds() {
        let far: Vec<Vec<f64>> = (0..10).map(|i| vec![i as f64, 0.0]).collect();
        assert_eq!(build_graph(&cloud(&far, 0.9, Norm::P(2.0))).edge_count(), 0);
        // All points within a ball of radius r/2 around the origin.
        let tight: Vec<Vec<f64>> = (0..12)
            .map(|i| {
                let a = i as f64;
                vec![0.24 * a.cos() * (a / 12.0), 0.24 * a.sin() * (a / 12.0)]
            })
            .collect();
        let g = build_graph(&cloud(&tight, 0.5, Norm::P(2.0)));
        assert_eq!(g, complete(12));
    }

    #[test]
    fn power_examples() {
        let g = petersen();
        assert_eq!(graph_power(&g, 1).unwrap(), g);
        assert_eq!(graph_power(&path(3), 2).unwrap(), complete(3));
        let g = Graph::from_edges(3, &[(0, 1)]).unwrap();
        assert_eq!(graph_power(&g, 5).unwrap(), g);
        // Petersen has diameter 2.
        assert_eq!(graph_power(&petersen(), 2).unwrap(), complete(10));
        assert!(graph_power(&g, 0).is_err());
    }

    #[test]
    fn max_degree_examples() {
        assert_eq!(max_degree(&complete(4)), 3);
        assert_eq!(max_degree(&star(5)), 5);
        assert_eq!(max_degree(&Graph::empty(3)), 0);
    }

    #[test]
    fn degeneracy_of_known_graphs() {
        let (order, core) = degeneracy_order(&complete(5));
        assert_eq!(order.len(), 5);
        assert!(core.iter().all(|&c| c == 4));
        let (_, core) = degeneracy_order(&star(4));
        assert!(core.iter().all(|&c| c == 1));
        let (_, core) = degeneracy_order(&petersen());
        assert!(core.iter().all(|&c| c == 3));
    }

    #[test]
    fn edgelist_of_adjacent_pair() {
        let g = build_graph(&cloud(&[vec![0.0, 0.0], vec![0.5, 0.0]], 1.0, Norm::P(2.0)));
        let mut buf = Vec::new();
        write_edgelist(&g, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "2 1\n0 1\n");
    }

    #[test]
    fn edgelist_rejects_garbage() {
        assert!(read_edgelist("3 1\n1 0\n".as_bytes()).is_err());
        assert!(read_edgelist("3 2\n0 1\n".as_bytes()).is_err());
        assert!(read_edgelist("3\n".as_bytes()).is_err());
        assert!(read_edgelist("2 1\n0 5\n".as_bytes()).is_err());
    }

    #[test]
    fn components_and_induced() {
        let g = Graph::from_edges(5, &[(0, 3), (3, 4), (1, 2)]).unwrap();
        assert_eq!(g.components(), vec![vec![0, 3, 4], vec![1, 2]]);
        let sub = g.induced(&[0, 3, 4]);
        assert_eq!(sub, path(3));
    }

    fn arb_cloud(max_n: usize) -> impl Strategy<Value = PointCloud> {
        (1usize..=3, 1usize..=max_n, any::<u64>(), 0.01f64..0.4, prop_oneof![Just(Norm::P(1.0)), Just(Norm::P(2.0)), Just(Norm::Inf)])
            .prop_map(|(d, n, seed, r, norm)| {
                PointCloud::new(sample_points(n, Density::UniformCube, d, seed).unwrap(), r, norm).unwrap()
            })
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn cell_list_matches_bruteforce(c in arb_cloud(500)) {
            let fast = build_graph(&c);
            fast.validate().unwrap();
            prop_assert_eq!(fast, build_graph_bruteforce(&c));
        }

        #[test]
        fn powers_are_nested(c in arb_cloud(150), l in 1usize..4) {
            let g = build_graph(&c);
            let a = graph_power(&g, l).unwrap();
            let b = graph_power(&g, l + 1).unwrap();
            a.validate().unwrap();
            prop_assert!(g.is_subgraph_of(&a));
            prop_assert!(a.is_subgraph_of(&b));
        }

        #[test]
        fn power_fits_inside_scaled_radius(c in arb_cloud(200), l in 1usize..4) {
            let g_l = graph_power(&build_graph(&c), l).unwrap();
            let g_prime = build_graph(&c.with_radius(l as f64 * c.radius).unwrap());
            prop_assert!(g_l.is_subgraph_of(&g_prime));
        }

        #[test]
        fn edgelist_round_trip(c in arb_cloud(120)) {
            let g = build_graph(&c);
            let mut buf = Vec::new();
            write_edgelist(&g, &mut buf).unwrap();
            prop_assert_eq!(read_edgelist(buf.as_slice()).unwrap(), g);
        }
    }
}
