//! Experiment suites, aggregation and report serialization.

use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{focusing_mass, run_trial, trial_seed, Bracket, ColoringPolicy, TrialConfig, TrialRecord};
use crate::geometry::{radius_for, Density, Norm, RadiusSchedule};
use crate::{Error, Result};

/// Which limit law a suite probes, and therefore which trend checks it reports.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    /// Concentration of `chi_l` on two consecutive integers (subconnectivity).
    Focusing,
    /// `chi_l / (l^d chi) -> 1`.
    Super,
    /// `chi_l / (l^d chi) -> c` with `c` in `[l^-d, 1]`.
    Conn,
    /// `chi_l / chi -> 1`.
    Sub,
    /// Pairs close in space but far in the graph become rare.
    Lemma4,
    /// `n r^d = n^-eps`: only boundedness of `chi_l`.
    Sparse,
}

impl Suite {
    pub fn for_schedule(schedule: &RadiusSchedule) -> Suite {
        match schedule {
            RadiusSchedule::Sub { .. } => Suite::Sub,
            RadiusSchedule::Conn { .. } => Suite::Conn,
            RadiusSchedule::Super { .. } => Suite::Super,
            RadiusSchedule::Sparse { .. } => Suite::Sparse,
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Suite::Focusing => "focusing",
            Suite::Super => "super",
            Suite::Conn => "conn",
            Suite::Sub => "sub",
            Suite::Lemma4 => "lemma4",
            Suite::Sparse => "sparse",
        })
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "focusing" => Ok(Suite::Focusing),
            "super" => Ok(Suite::Super),
            "conn" => Ok(Suite::Conn),
            "sub" => Ok(Suite::Sub),
            "lemma4" => Ok(Suite::Lemma4),
            "sparse" => Ok(Suite::Sparse),
            _ => Err(Error::Usage(format!("unknown suite '{s}'"))),
        }
    }
}

/// Pass/fail thresholds for the finite-n trend checks.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// Minimum two-point focusing mass at every grid point.
    pub focusing_mass: f64,
    /// Upper bound on `chi_l` across the grid in the sparse regime.
    pub sparse_chi_bound: usize,
    /// Slack for floating-point comparisons of ratios.
    pub tolerance: f64,
}

impl Default for Thresholds {
    fn default() -> Self {
        Thresholds { focusing_mass: 0.8, sparse_chi_bound: 6, tolerance: 1e-12 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub suite: Suite,
    pub grid: Vec<usize>,
    pub trials: usize,
    pub base_seed: u64,
    pub d: usize,
    pub norm: Norm,
    pub l: usize,
    pub density: Density,
    pub schedule: RadiusSchedule,
    pub policy: ColoringPolicy,
    pub thresholds: Thresholds,
}

impl ExperimentConfig {
    /// A suite with the given schedule and defaults elsewhere (`d = 2`, `p = 2`, uniform cube).
    pub fn new(suite: Suite, schedule: RadiusSchedule, l: usize, grid: Vec<usize>, trials: usize, base_seed: u64) -> Self {
        ExperimentConfig {
            suite,
            grid,
            trials,
            base_seed,
            d: 2,
            norm: Norm::P(2.0),
            l,
            density: Density::UniformCube,
            schedule,
            policy: ColoringPolicy::default(),
            thresholds: Thresholds::default(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.grid.is_empty() {
            return Err(Error::Usage("experiment grid is empty".into()));
        }
        if self.trials == 0 {
            return Err(Error::Usage("need at least one trial per grid point".into()));
        }
        if self.l == 0 {
            return Err(Error::Usage("l must be at least 1".into()));
        }
        for &n in &self.grid {
            radius_for(self.schedule, n, self.d)
                .map_err(|e| Error::Usage(format!("grid point n = {n}: {e}")))?;
        }
        Ok(())
    }

    fn trial_configs(&self) -> Vec<TrialConfig> {
        self.grid
            .iter()
            .enumerate()
            .flat_map(|(ni, &n)| {
                (0..self.trials).map(move |ti| TrialConfig {
                    n,
                    d: self.d,
                    norm: self.norm,
                    l: self.l,
                    density: self.density,
                    schedule: self.schedule,
                    seed: trial_seed(self.base_seed, ni, ti),
                    policy: self.policy,
                })
            })
            .collect()
    }
}

/// Aggregates over the trials at one grid point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub n: usize,
    pub trials: usize,
    pub r: f64,
    pub nrd: f64,
    pub k_n: Option<f64>,
    pub median_chi: f64,
    pub median_chi_l: f64,
    pub median_ratio: f64,
    pub median_norm_ratio: f64,
    pub q25_norm_ratio: f64,
    pub q75_norm_ratio: f64,
    pub min_norm_ratio: f64,
    pub max_norm_ratio: f64,
    /// Median of `chi_l.lower / chi.upper` and `chi_l.upper / chi.lower`.
    pub median_ratio_bracket: [f64; 2],
    pub exact_fraction: f64,
    pub mean_violations: f64,
    pub zero_violation_fraction: f64,
    pub focusing_a: usize,
    pub focusing_mass: f64,
    pub median_scan_max: f64,
}

/// Spearman rank correlations of per-n medians against n.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub spearman_ratio: Option<f64>,
    pub spearman_norm_ratio: Option<f64>,
    pub spearman_zero_violation: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub per_n: Vec<GridSummary>,
    pub trend: Trend,
    pub checks: Vec<Check>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: String,
    pub base_seed: u64,
    pub seeds: Vec<u64>,
    pub threads: usize,
    pub wall_time_secs: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub config: ExperimentConfig,
    pub records: Vec<TrialRecord>,
    pub summary: Summary,
    pub manifest: Manifest,
}

impl ExperimentReport {
    pub fn all_checks_pass(&self) -> bool {
        self.summary.checks.iter().all(|c| c.passed)
    }

    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        write_trial_csv(&self.records, out)
    }

    /// JSON document with the configuration, aggregates, trend statistics and manifest.
    pub fn summary_json(&self) -> String {
        #[derive(Serialize)]
        struct Doc<'a> {
            config: &'a ExperimentConfig,
            summary: &'a Summary,
            manifest: &'a Manifest,
        }
        let doc = Doc { config: &self.config, summary: &self.summary, manifest: &self.manifest };
        let mut s = serde_json::to_string_pretty(&doc).expect("report serializes");
        s.push('\n');
        s
    }
}

fn annotate(err: Error, seed: u64) -> Error {
    match err {
        Error::Usage(m) => Error::Usage(format!("trial seed {seed}: {m}")),
        Error::Domain(m) => Error::Domain(format!("trial seed {seed}: {m}")),
        Error::Invariant(m) => Error::Invariant(format!("trial seed {seed}: {m}")),
        Error::Io(e) => Error::Io(e),
    }
}

/// Runs every trial of the grid in parallel and aggregates in trial-index order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentReport> {
    config.validate()?;
    let start = Instant::now();
    let jobs = config.trial_configs();
    let outcomes: Vec<Result<TrialRecord>> = jobs.par_iter().map(run_trial).collect();
    let mut records = Vec::with_capacity(outcomes.len());
    for (job, outcome) in jobs.iter().zip(outcomes) {
        records.push(outcome.map_err(|e| annotate(e, job.seed))?);
    }
    let summary = aggregate(&records, config.suite, &config.thresholds);
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        base_seed: config.base_seed,
        seeds: jobs.iter().map(|j| j.seed).collect(),
        threads: rayon::current_num_threads(),
        wall_time_secs: start.elapsed().as_secs_f64(),
    };
    Ok(ExperimentReport { config: config.clone(), records, summary, manifest })
}

/// Linear-interpolation quantile of already sorted values.
fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn sorted(values: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v
}

fn ranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut out = vec![0.0; values.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && values[idx[j + 1]] == values[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

/// Spearman rank correlation with average ranks for ties; `None` when either side is constant.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    if x.len() != y.len() || x.len() < 2 {
        return None;
    }
    let (rx, ry) = (ranks(x), ranks(y));
    let n = rx.len() as f64;
    let (mx, my) = (rx.iter().sum::<f64>() / n, ry.iter().sum::<f64>() / n);
    let cov: f64 = rx.iter().zip(&ry).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = rx.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = ry.iter().map(|b| (b - my).powi(2)).sum();
    (vx > 0.0 && vy > 0.0).then(|| cov / (vx * vy).sqrt())
}

fn summarize_point(group: &[&TrialRecord]) -> GridSummary {
    let first = group[0];
    let count = group.len() as f64;
    let med = |f: &dyn Fn(&TrialRecord) -> f64| quantile(&sorted(group.iter().map(|r| f(r))), 0.5);
    let norm = sorted(group.iter().map(|r| r.normalized_ratio));
    let chi_l: Vec<usize> = group.iter().map(|r| r.chi_l.upper).collect();
    let (focusing_a, mass) = focusing_mass(&chi_l).expect("group is nonempty");
    GridSummary {
        n: first.n,
        trials: group.len(),
        r: first.r,
        nrd: first.nrd,
        k_n: first.k_n,
        median_chi: med(&|r| r.chi.upper as f64),
        median_chi_l: med(&|r| r.chi_l.upper as f64),
        median_ratio: med(&|r| r.ratio),
        median_norm_ratio: quantile(&norm, 0.5),
        q25_norm_ratio: quantile(&norm, 0.25),
        q75_norm_ratio: quantile(&norm, 0.75),
        min_norm_ratio: norm[0],
        max_norm_ratio: norm[norm.len() - 1],
        median_ratio_bracket: [
            med(&|r| r.chi_l.lower as f64 / r.chi.upper as f64),
            med(&|r| r.chi_l.upper as f64 / r.chi.lower as f64),
        ],
        exact_fraction: group
            .iter()
            .filter(|r| r.chi.is_exact() && r.chi_l.is_exact() && r.chi_prime.is_exact())
            .count() as f64
            / count,
        mean_violations: group.iter().map(|r| r.violations as f64).sum::<f64>() / count,
        zero_violation_fraction: group.iter().filter(|r| r.violations == 0).count() as f64 / count,
        focusing_a,
        focusing_mass: mass,
        median_scan_max: med(&|r| r.scan_max as f64),
    }
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check { name: name.to_string(), passed, detail }
}

fn nonincreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] <= w[0])
}

fn nondecreasing(v: &[f64]) -> bool {
    v.windows(2).all(|w| w[1] >= w[0])
}

/// Aggregates, trend statistics and checks. A pure function of the trial table, so the
/// summary can be recomputed from a CSV read back with [`read_trial_csv`].
pub fn aggregate(records: &[TrialRecord], suite: Suite, thresholds: &Thresholds) -> Summary {
    let mut grid: Vec<usize> = Vec::new();
    for r in records {
        if !grid.contains(&r.n) {
            grid.push(r.n);
        }
    }
    let per_n: Vec<GridSummary> = grid
        .iter()
        .map(|&n| summarize_point(&records.iter().filter(|r| r.n == n).collect::<Vec<_>>()))
        .collect();

    let ns: Vec<f64> = per_n.iter().map(|g| g.n as f64).collect();
    let ratio: Vec<f64> = per_n.iter().map(|g| g.median_ratio).collect();
    let norm: Vec<f64> = per_n.iter().map(|g| g.median_norm_ratio).collect();
    let zero: Vec<f64> = per_n.iter().map(|g| g.zero_violation_fraction).collect();
    let trend = Trend {
        spearman_ratio: spearman(&ns, &ratio),
        spearman_norm_ratio: spearman(&ns, &norm),
        spearman_zero_violation: spearman(&ns, &zero),
    };

    let tol = thresholds.tolerance;
    let mut checks = Vec::new();
    let bracket_ok = records.iter().all(|r| {
        let scale = (r.l as f64).powi(r.d as i32);
        r.normalized_ratio >= 1.0 / scale - tol
            && r.normalized_ratio <= r.chi_prime.upper as f64 / (scale * r.chi.lower as f64) + tol
    });
    checks.push(check(
        "norm_ratio_bracket",
        bracket_ok,
        "every trial has l^-d <= chi_l/(l^d chi) <= chi'/(l^d omega)".into(),
    ));
    let exact_sandwich = records
        .iter()
        .filter(|r| r.chi.is_exact() && r.chi_l.is_exact() && r.chi_prime.is_exact())
        .all(|r| r.chi.upper <= r.chi_l.upper && r.chi_l.upper <= r.chi_prime.upper);
    checks.push(check("exact_sandwich", exact_sandwich, "chi <= chi_l <= chi' on exact trials".into()));
    if records.iter().any(|r| r.l == 1) {
        let ok = records.iter().filter(|r| r.l == 1).all(|r| r.violations == 0);
        checks.push(check("l1_no_violations", ok, "no violating pairs when l = 1".into()));
    }

    match suite {
        Suite::Sub => {
            checks.push(check(
                "median_ratio_nonincreasing",
                nonincreasing(&ratio),
                format!("medians of chi_l/chi: {ratio:?}"),
            ));
            let strict = ratio.len() >= 2 && ratio[ratio.len() - 1] < ratio[0];
            checks.push(check("median_ratio_decreased", strict, format!("first {:?}, last {:?}", ratio.first(), ratio.last())));
        }
        Suite::Super => {
            checks.push(check(
                "median_norm_ratio_nondecreasing",
                nondecreasing(&norm),
                format!("medians of chi_l/(l^d chi): {norm:?}"),
            ));
            let ok = records.iter().all(|r| {
                let scale = (r.l as f64).powi(r.d as i32);
                r.normalized_ratio >= 1.0 / scale - tol
                    && r.normalized_ratio <= r.chi_prime.upper as f64 / (scale * r.chi.upper as f64) + tol
            });
            checks.push(check("super_bracket", ok, "l^-d <= chi_l/(l^d chi) <= chi'/(l^d chi)".into()));
        }
        Suite::Conn => {
            let ok = records.iter().all(|r| r.normalized_ratio >= (r.l as f64).powi(-(r.d as i32)) - tol);
            checks.push(check("conn_lower_bound", ok, "chi_l/(l^d chi) >= l^-d".into()));
        }
        Suite::Lemma4 => {
            checks.push(check(
                "zero_violation_fraction_nondecreasing",
                nondecreasing(&zero),
                format!("fractions of violation-free trials: {zero:?}"),
            ));
            let last = zero.last().copied().unwrap_or(0.0);
            checks.push(check("zero_violation_at_largest_n", last == 1.0, format!("{last}")));
        }
        Suite::Focusing => {
            let masses: Vec<f64> = per_n.iter().map(|g| g.focusing_mass).collect();
            let ok = masses.iter().all(|&m| m >= thresholds.focusing_mass);
            checks.push(check(
                "focusing_mass",
                ok,
                format!("masses {masses:?} against threshold {}", thresholds.focusing_mass),
            ));
        }
        Suite::Sparse => {
            let max = records.iter().map(|r| r.chi_l.upper).max().unwrap_or(0);
            checks.push(check(
                "sparse_bounded",
                max <= thresholds.sparse_chi_bound,
                format!("max chi_l {max} against bound {}", thresholds.sparse_chi_bound),
            ));
        }
    }
    Summary { per_n, trend, checks }
}

#[derive(Debug, Serialize, Deserialize)]
struct CsvRow {
    seed: u64,
    n: usize,
    d: usize,
    p: String,
    l: usize,
    regime: String,
    param: f64,
    r: f64,
    nrd: f64,
    chi_lo: usize,
    chi_hi: usize,
    chil_lo: usize,
    chil_hi: usize,
    chip_lo: usize,
    chip_hi: usize,
    omega: usize,
    viol: u64,
    scan_max: usize,
    k_n: Option<f64>,
    ratio: f64,
    norm_ratio: f64,
}

/// Writes the trial table with the fixed column order
/// `seed,n,d,p,l,regime,param,r,nrd,chi_lo,chi_hi,chil_lo,chil_hi,chip_lo,chip_hi,omega,viol,scan_max,k_n,ratio,norm_ratio`.
pub fn write_trial_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(CsvRow {
            seed: r.seed,
            n: r.n,
            d: r.d,
            p: r.norm.to_string(),
            l: r.l,
            regime: r.schedule.name().to_string(),
            param: r.schedule.param(),
            r: r.r,
            nrd: r.nrd,
            chi_lo: r.chi.lower,
            chi_hi: r.chi.upper,
            chil_lo: r.chi_l.lower,
            chil_hi: r.chi_l.upper,
            chip_lo: r.chi_prime.lower,
            chip_hi: r.chi_prime.upper,
            omega: r.omega,
            viol: r.violations,
            scan_max: r.scan_max,
            k_n: r.k_n,
            ratio: r.ratio,
            norm_ratio: r.normalized_ratio,
        })
        .map_err(csv_error)?;
    }
    w.flush()?;
    Ok(())
}

fn csv_error(e: csv::Error) -> Error {
    if e.is_io_error() {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => Error::Io(io),
            _ => unreachable!(),
        }
    } else {
        Error::Usage(format!("malformed trial table: {e}"))
    }
}

/// Reads a table written by [`write_trial_csv`].
pub fn read_trial_csv<R: Read>(input: R) -> Result<Vec<TrialRecord>> {
    let mut reader = csv::Reader::from_reader(input);
    reader
        .deserialize::<CsvRow>()
        .map(|row| {
            let row = row.map_err(csv_error)?;
            let schedule: RadiusSchedule = format!("{}:{}", row.regime, row.param).parse()?;
            Ok(TrialRecord {
                seed: row.seed,
                n: row.n,
                d: row.d,
                norm: row.p.parse()?,
                l: row.l,
                schedule,
                r: row.r,
                nrd: row.nrd,
                chi: Bracket { lower: row.chi_lo, upper: row.chi_hi },
                chi_l: Bracket { lower: row.chil_lo, upper: row.chil_hi },
                chi_prime: Bracket { lower: row.chip_lo, upper: row.chip_hi },
                omega: row.omega,
                max_deg_power: 0,
                violations: row.viol,
                scan_max: row.scan_max,
                k_n: row.k_n,
                ratio: row.ratio,
                normalized_ratio: row.norm_ratio,
            })
        })
        .collect()
}
