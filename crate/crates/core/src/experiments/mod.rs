//! Monte-Carlo trials on sampled geometric graphs.
//!
//! A trial samples one cloud, builds `G` at radius `r`, its `l`-th power `G^l` and the
//! comparison graph `G'` at radius `l r` on the same points, then brackets the three
//! chromatic numbers and collects the auxiliary statistics. Since `G ⊆ G^l ⊆ G'`, any
//! coloring of a larger graph also colors the smaller ones, which is used to tighten the
//! upper bounds so that `chi <= chi_l <= chi'` holds for the reported uppers even when
//! they come from heuristics.

mod report;

pub use report::{
    aggregate, read_trial_csv, run_experiment, spearman, write_trial_csv, Check, ExperimentConfig,
    ExperimentReport, GridSummary, Manifest, Suite, Summary, Thresholds, Trend,
};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::clique::clique_number;
use crate::coloring::{estimate_chromatic, ChromaticEstimate, Method};
use crate::geometry::{radius_for, sample_points, Density, Norm, PointCloud, RadiusSchedule};
use crate::graph::{build_graph, graph_power, max_degree, CellGrid, Graph};
use crate::theory::k_n;
use crate::{Error, Result};

/// How chromatic numbers are bracketed inside a trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColoringPolicy {
    pub method: Method,
    /// With `Method::Exact`, graphs above this many vertices fall back to DSATUR.
    pub exact_max_n: usize,
    /// Node budget for exact search and for clique lower bounds.
    pub budget: u64,
}

impl Default for ColoringPolicy {
    fn default() -> Self {
        ColoringPolicy { method: Method::Dsatur, exact_max_n: 120, budget: 2_000_000 }
    }
}

impl ColoringPolicy {
    pub fn exact() -> Self {
        ColoringPolicy { method: Method::Exact, ..Default::default() }
    }

    fn estimate(&self, g: &Graph) -> ChromaticEstimate {
        let method = match self.method {
            Method::Exact if g.n() > self.exact_max_n => Method::Dsatur,
            m => m,
        };
        estimate_chromatic(g, method, self.budget)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialConfig {
    pub n: usize,
    pub d: usize,
    pub norm: Norm,
    pub l: usize,
    pub density: Density,
    pub schedule: RadiusSchedule,
    pub seed: u64,
    pub policy: ColoringPolicy,
}

/// `[lower, upper]` bounds on a chromatic number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Bracket {
    pub lower: usize,
    pub upper: usize,
}

impl Bracket {
    pub fn is_exact(&self) -> bool {
        self.lower == self.upper
    }
}

/// Statistics of one cloud at radius `r` and power `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct CloudStats {
    pub chi: Bracket,
    pub chi_l: Bracket,
    pub chi_prime: Bracket,
    pub omega: usize,
    pub max_deg_power: usize,
    pub violations: u64,
    pub scan_max: usize,
}

/// One Monte-Carlo sample.
///
/// `max_deg_power` is not part of the CSV trial table and reads back as zero.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialRecord {
    pub seed: u64,
    pub n: usize,
    pub d: usize,
    pub norm: Norm,
    pub l: usize,
    pub schedule: RadiusSchedule,
    pub r: f64,
    pub nrd: f64,
    pub chi: Bracket,
    pub chi_l: Bracket,
    pub chi_prime: Bracket,
    pub omega: usize,
    pub max_deg_power: usize,
    pub violations: u64,
    pub scan_max: usize,
    pub k_n: Option<f64>,
    pub ratio: f64,
    pub normalized_ratio: f64,
}

/// SplitMix64 finalizer.
pub fn splitmix64(x: u64) -> u64 {
    let mut z = x.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Per-trial seed: `splitmix64(splitmix64(base ^ splitmix64(n_index)) ^ trial_index)`.
///
/// Depends only on grid coordinates, never on scheduling.
pub fn trial_seed(base_seed: u64, n_index: usize, trial_index: usize) -> u64 {
    splitmix64(splitmix64(base_seed ^ splitmix64(n_index as u64)) ^ trial_index as u64)
}

/// Number of unordered pairs with `||X_i - X_j|| < l r` but graph distance `> l` in `g`.
///
/// Candidates come from a cell grid at radius `l r`; graph distances from a BFS of depth
/// `l` around each vertex.
pub fn lemma4_violations(cloud: &PointCloud, g: &Graph, l: usize) -> Result<u64> {
    if l == 0 {
        return Err(Error::Usage("violation count needs l >= 1".into()));
    }
    if g.n() != cloud.len() {
        return Err(Error::Usage(format!(
            "graph has {} vertices but cloud has {} points",
            g.n(),
            cloud.len()
        )));
    }
    let reach = l as f64 * cloud.radius;
    let points = &cloud.points;
    let grid = CellGrid::new(points, reach);
    let n = g.n();
    let count = (0..n)
        .into_par_iter()
        .map_init(
            || (vec![u32::MAX; n], Vec::new(), Vec::new()),
            |(mark, frontier, next), s| {
                let stamp = s as u32;
                mark[s] = stamp;
                frontier.clear();
                frontier.push(s as u32);
                for _ in 0..l {
                    next.clear();
                    for &u in frontier.iter() {
                        for &w in g.neighbors(u as usize) {
                            if mark[w as usize] != stamp {
                                mark[w as usize] = stamp;
                                next.push(w);
                            }
                        }
                    }
                    std::mem::swap(frontier, next);
                }
                let mut missing = 0u64;
                grid.for_each_candidate(s, |j| {
                    if j > s
                        && mark[j] != stamp
                        && cloud.norm.distance(points.point(s), points.point(j)) < reach
                    {
                        missing += 1;
                    }
                });
                missing
            },
        )
        .sum();
    Ok(count)
}

/// Largest number of sample points in an open `r`-ball centred at a sample point.
///
/// A lower bound on the scan statistic over all centres in R^d.
pub fn scan_max(cloud: &PointCloud) -> usize {
    let points = &cloud.points;
    let grid = CellGrid::new(points, cloud.radius);
    (0..points.len())
        .into_par_iter()
        .map(|i| {
            let mut count = 0;
            grid.for_each_candidate(i, |j| {
                if cloud.norm.distance(points.point(i), points.point(j)) < cloud.radius {
                    count += 1;
                }
            });
            count
        })
        .max()
        .unwrap_or(0)
}

/// The integer `a` maximising the fraction of values in `{a, a + 1}` (ties to the smaller
/// `a`), together with that fraction.
pub fn focusing_mass(values: &[usize]) -> Result<(usize, f64)> {
    if values.is_empty() {
        return Err(Error::Usage("focusing mass needs at least one value".into()));
    }
    let mut sorted = values.to_vec();
    sorted.sort_unstable();
    let mut best = (sorted[0], 0usize);
    for (i, &a) in sorted.iter().enumerate() {
        if i > 0 && sorted[i - 1] == a {
            continue;
        }
        let inside = sorted[i..].iter().take_while(|&&v| v <= a + 1).count();
        if inside > best.1 {
            best = (a, inside);
        }
    }
    Ok((best.0, best.1 as f64 / values.len() as f64))
}

/// Brackets `chi(G)`, `chi(G^l)` and `chi(G')` for a cloud and collects the trial statistics.
pub fn evaluate_cloud(cloud: &PointCloud, l: usize, policy: &ColoringPolicy) -> Result<CloudStats> {
    if l == 0 {
        return Err(Error::Usage("l must be at least 1".into()));
    }
    let g = build_graph(cloud);
    let g_l = graph_power(&g, l)?;
    let g_prime = build_graph(&cloud.with_radius(l as f64 * cloud.radius)?);
    if !g_l.is_subgraph_of(&g_prime) {
        return Err(Error::Invariant("G^l is not contained in G(X, l r)".into()));
    }

    let e = policy.estimate(&g);
    let e_l = policy.estimate(&g_l);
    let e_p = policy.estimate(&g_prime);
    if e.exact && e_l.exact && e_p.exact && !(e.upper <= e_l.upper && e_l.upper <= e_p.upper) {
        return Err(Error::Invariant(format!(
            "exact sandwich failed: chi = {}, chi_l = {}, chi' = {}",
            e.upper, e_l.upper, e_p.upper
        )));
    }
    for (est, graph) in [(&e, &g), (&e_l, &g_l), (&e_p, &g_prime)] {
        if !est.coloring.is_proper(graph) || est.lower > est.upper {
            return Err(Error::Invariant("estimate returned an improper coloring".into()));
        }
    }

    let chi = Bracket { lower: e.lower, upper: e.upper.min(e_l.upper).min(e_p.upper) };
    let chi_l = Bracket { lower: e_l.lower.max(chi.lower), upper: e_l.upper.min(e_p.upper) };
    let chi_prime = Bracket { lower: e_p.lower.max(chi_l.lower), upper: e_p.upper };

    let omega = if matches!(policy.method, Method::Exact) && g.n() <= policy.exact_max_n {
        clique_number(&g, policy.budget).lower
    } else {
        e.lower
    };

    Ok(CloudStats {
        chi,
        chi_l,
        chi_prime,
        omega,
        max_deg_power: max_degree(&g_l),
        // G^l ⊆ G', so the pairs of G' missing from G^l are exactly the violating pairs.
        violations: (g_prime.edge_count() - g_l.edge_count()) as u64,
        scan_max: scan_max(cloud),
    })
}

/// Samples one cloud and computes every statistic of a [`TrialRecord`].
pub fn run_trial(cfg: &TrialConfig) -> Result<TrialRecord> {
    if cfg.l == 0 {
        return Err(Error::Usage("l must be at least 1".into()));
    }
    let r = radius_for(cfg.schedule, cfg.n, cfg.d)?;
    let points = sample_points(cfg.n, cfg.density, cfg.d, cfg.seed)?;
    let cloud = PointCloud::new(points, r, cfg.norm)?;
    let stats = evaluate_cloud(&cloud, cfg.l, &cfg.policy)?;
    let nrd = cfg.schedule.target(cfg.n);
    let ratio = stats.chi_l.upper as f64 / stats.chi.upper as f64;
    Ok(TrialRecord {
        seed: cfg.seed,
        n: cfg.n,
        d: cfg.d,
        norm: cfg.norm,
        l: cfg.l,
        schedule: cfg.schedule,
        r,
        nrd,
        chi: stats.chi,
        chi_l: stats.chi_l,
        chi_prime: stats.chi_prime,
        omega: stats.omega,
        max_deg_power: stats.max_deg_power,
        violations: stats.violations,
        scan_max: stats.scan_max,
        k_n: k_n(cfg.n as f64, nrd).ok(),
        ratio,
        normalized_ratio: ratio / (cfg.l as f64).powi(cfg.d as i32),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coloring::exact_chromatic;
    use crate::geometry::Points;
    use proptest::prelude::*;

    fn cloud(rows: &[Vec<f64>], r: f64) -> PointCloud {
        PointCloud::new(Points::from_rows(rows).unwrap(), r, Norm::P(2.0)).unwrap()
    }

    fn small_config(l: usize, seed: u64) -> TrialConfig {
        TrialConfig {
            n: 40,
            d: 2,
            norm: Norm::P(2.0),
            l,
            density: Density::UniformCube,
            schedule: RadiusSchedule::Conn { t: 1.0 },
            seed,
            policy: ColoringPolicy::exact(),
        }
    }

    #[test]
    fn two_point_violation() {
        let c = cloud(&[vec![0.0, 0.0], vec![1.5, 0.0]], 1.0);
        let g = build_graph(&c);
        assert_eq!(lemma4_violations(&c, &g, 2).unwrap(), 1);
        assert_eq!(lemma4_violations(&c, &g, 1).unwrap(), 0);
        let stats = evaluate_cloud(&c, 2, &ColoringPolicy::exact()).unwrap();
        assert_eq!(stats.violations, 1);
    }

    #[test]
    fn dense_cluster_has_no_violations() {
        let rows: Vec<Vec<f64>> = (0..15).map(|i| vec![0.03 * i as f64, 0.01 * (i % 4) as f64]).collect();
        let c = cloud(&rows, 1.0);
        let g = build_graph(&c);
        for l in 1..=4 {
            assert_eq!(lemma4_violations(&c, &g, l).unwrap(), 0);
        }
    }

    #[test]
    fn scan_examples() {
        let same = vec![vec![0.2, 0.2]; 7];
        assert_eq!(scan_max(&cloud(&same, 0.1)), 7);
        assert_eq!(scan_max(&cloud(&[vec![0.0, 0.0], vec![3.0, 0.0]], 1.0)), 1);
    }

    #[test]
    fn focusing_examples() {
        assert_eq!(focusing_mass(&[3, 3, 3, 4, 4]).unwrap(), (3, 1.0));
        assert_eq!(focusing_mass(&[2, 4, 6]).unwrap(), (2, 1.0 / 3.0));
        assert_eq!(focusing_mass(&[5, 5, 6, 6, 6, 9]).unwrap(), (5, 5.0 / 6.0));
        assert!(focusing_mass(&[]).is_err());
    }

    #[test]
    fn l_one_trial_is_degenerate() {
        for seed in 0..5 {
            let rec = run_trial(&small_config(1, seed)).unwrap();
            assert_eq!(rec.chi, rec.chi_l);
            assert_eq!(rec.chi_l, rec.chi_prime);
            assert_eq!(rec.violations, 0);
            assert_eq!(rec.ratio, 1.0);
        }
    }

    #[test]
    fn exact_trial_sandwich() {
        for seed in 0..10 {
            let rec = run_trial(&small_config(2, seed)).unwrap();
            assert!(rec.chi.is_exact() && rec.chi_l.is_exact() && rec.chi_prime.is_exact());
            assert!(rec.chi.upper <= rec.chi_l.upper && rec.chi_l.upper <= rec.chi_prime.upper);
            assert!(rec.omega <= rec.chi.upper);
        }
    }

    #[test]
    fn exact_trial_matches_direct_computation() {
        let cfg = small_config(2, 77);
        let rec = run_trial(&cfg).unwrap();
        let r = radius_for(cfg.schedule, cfg.n, cfg.d).unwrap();
        let c = PointCloud::new(sample_points(cfg.n, cfg.density, cfg.d, cfg.seed).unwrap(), r, cfg.norm).unwrap();
        let g = build_graph(&c);
        assert_eq!(rec.chi.upper, exact_chromatic(&g, u64::MAX).upper);
        assert_eq!(rec.chi_l.upper, exact_chromatic(&graph_power(&g, 2).unwrap(), u64::MAX).upper);
        assert_eq!(rec.violations, lemma4_violations(&c, &g, 2).unwrap());
    }

    #[test]
    fn trials_are_deterministic() {
        let cfg = TrialConfig { n: 500, policy: ColoringPolicy::default(), ..small_config(2, 5) };
        assert_eq!(run_trial(&cfg).unwrap(), run_trial(&cfg).unwrap());
    }

    #[test]
    fn sub_regime_k_n_present() {
        let cfg = TrialConfig {
            n: 300,
            schedule: RadiusSchedule::Sub { b: 0.5 },
            policy: ColoringPolicy::default(),
            ..small_config(2, 1)
        };
        assert!(run_trial(&cfg).unwrap().k_n.is_some());
        let conn = TrialConfig { schedule: RadiusSchedule::Conn { t: 2.0 }, ..cfg };
        assert!(run_trial(&conn).unwrap().k_n.is_none());
    }

    #[test]
    fn seeds_spread() {
        let mut seeds: Vec<u64> = (0..10).flat_map(|i| (0..100).map(move |t| trial_seed(7, i, t))).collect();
        seeds.sort_unstable();
        seeds.dedup();
        assert_eq!(seeds.len(), 1000);
        assert_eq!(trial_seed(7, 3, 4), trial_seed(7, 3, 4));
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(40))]

        #[test]
        fn violation_routes_agree(n in 2usize..300, seed in any::<u64>(), l in 1usize..5, d in 1usize..=3) {
            let r = radius_for(RadiusSchedule::Conn { t: 0.7 }, n.max(3), d).unwrap();
            let c = PointCloud::new(sample_points(n, Density::UniformCube, d, seed).unwrap(), r, Norm::P(2.0)).unwrap();
            let g = build_graph(&c);
            let direct = lemma4_violations(&c, &g, l).unwrap();
            let g_prime = build_graph(&c.with_radius(l as f64 * r).unwrap());
            let g_l = graph_power(&g, l).unwrap();
            prop_assert_eq!(direct, (g_prime.edge_count() - g_l.edge_count()) as u64);
            if l == 1 {
                prop_assert_eq!(direct, 0);
            }
        }

        #[test]
        fn scan_max_is_max_degree_plus_one(n in 1usize..300, seed in any::<u64>()) {
            let c = PointCloud::new(sample_points(n, Density::Gaussian, 2, seed).unwrap(), 0.3, Norm::Inf).unwrap();
            prop_assert_eq!(scan_max(&c), max_degree(&build_graph(&c)) + 1);
        }

        #[test]
        fn focusing_dominates_single_values(values in prop::collection::vec(0usize..12, 1..60)) {
            let (_, mass) = focusing_mass(&values).unwrap();
            for &v in &values {
                let single = values.iter().filter(|&&x| x == v).count() as f64 / values.len() as f64;
                prop_assert!(mass >= single);
            }
        }

        #[test]
        fn normalized_ratio_in_bracket(seed in any::<u64>(), l in 1usize..4) {
            let cfg = TrialConfig { n: 250, seed, l, policy: ColoringPolicy::default(), ..small_config(l, 0) };
            let rec = run_trial(&cfg).unwrap();
            let scale = (l as f64).powi(2);
            prop_assert!(rec.normalized_ratio >= 1.0 / scale);
            prop_assert!(rec.normalized_ratio <= rec.chi_prime.upper as f64 / (scale * rec.chi.lower as f64));
            prop_assert!(rec.chi.lower <= rec.chi.upper);
        }
    }
}
