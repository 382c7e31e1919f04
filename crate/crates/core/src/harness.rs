//! Benchmark pairs, the experiment pipeline and summary statistics.
//!
//! Seeds: the pair for grid cell `c` (row-major over t, s, k) and replicate
//! `r` uses `split_seed(split_seed(root, c), r)`. From a pair seed, stream 0
//! draws the first tree, stream 1 the TBR walk, stream 2 the parsimony
//! bound and stream 3 the solver's own bound.

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::sync::mpsc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bounds::{dmp_lower_bound, BoundBudget};
use crate::error::HarnessError;
use crate::kernel::{kernelize, Ruleset};
use crate::pipeline::{split_seed, tbr_distance_report, SolveOptions};
use crate::solver::{ProofStatus, SolveBudget};
use crate::tbr::{random_tbr_walk, random_tree};
use crate::tree::PhyloTree;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub taxa_grid: Vec<usize>,
    pub skew_grid: Vec<u32>,
    pub moves_grid: Vec<usize>,
    pub replicates: usize,
    pub seed: u64,
    pub bound: BoundBudget,
    pub solve: SolveBudget,
    pub preserve_chains: bool,
    pub use_clusters: bool,
    /// Worker threads; `None` uses the rayon default.
    pub threads: Option<usize>,
}

impl ExperimentConfig {
    /// The grid used for quick runs: 18 cells with 3 replicates each.
    pub fn scaled() -> Self {
        ExperimentConfig {
            taxa_grid: vec![20, 40, 60],
            skew_grid: vec![50, 90],
            moves_grid: vec![3, 5, 8],
            replicates: 3,
            seed: 1,
            bound: BoundBudget::samples(10_000),
            solve: SolveBudget::nodes(5_000_000),
            preserve_chains: true,
            use_clusters: true,
            threads: None,
        }
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        if self.taxa_grid.is_empty() || self.skew_grid.is_empty() || self.moves_grid.is_empty() {
            return Err(HarnessError::Parameter("grids must be nonempty".into()));
        }
        if self.replicates == 0 {
            return Err(HarnessError::Parameter("replicates must be at least 1".into()));
        }
        if let Some(&t) = self.taxa_grid.iter().find(|&&t| t < 4) {
            return Err(HarnessError::Parameter(format!("t = {t} is below 4")));
        }
        if let Some(&s) = self.skew_grid.iter().find(|&&s| s > 100) {
            return Err(HarnessError::Parameter(format!("skew {s} is above 100")));
        }
        Ok(())
    }

    /// `(t, s, k)` cells in row-major order.
    pub fn cells(&self) -> Vec<(usize, u32, usize)> {
        let mut out = Vec::new();
        for &t in &self.taxa_grid {
            for &s in &self.skew_grid {
                for &k in &self.moves_grid {
                    out.push((t, s, k));
                }
            }
        }
        out
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ThetaSource {
    Exact,
    MpLowerBound,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub struct StageTimes {
    pub kernel: Duration,
    pub bound: Duration,
    pub solve: Duration,
}

/// One pair of the experiment. Runtimes are kept out of the CSV so that
/// tables are reproducible.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatRow {
    pub schema: u32,
    pub t: usize,
    pub s: u32,
    pub k: usize,
    pub replicate: usize,
    pub seed: u64,
    /// Taxa left by the subtree reduction.
    pub s_taxa: usize,
    /// Taxa left by the subtree and chain reductions.
    pub sc_taxa: usize,
    /// Taxa left by all seven reductions.
    pub scn_taxa: usize,
    pub param_reductions: usize,
    pub dmp_lb: usize,
    pub d_tbr_exact: Option<usize>,
    /// Best distance found, exact or not.
    pub d_upper: usize,
    pub theta: usize,
    pub theta_source: ThetaSource,
    pub f_k: Option<f64>,
    pub nodes: u64,
    /// Variables of the model for the fully reduced pair, and how many the
    /// preserved chains fix to zero.
    pub vars: usize,
    pub fixed_zero: usize,
    #[serde(skip)]
    pub runtimes: StageTimes,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairManifest {
    pub seed: u64,
    pub tree_seed: u64,
    pub walk_seed: u64,
}

/// `T` drawn with skew `s`, and `T'` after `k` random TBR moves on `T`.
pub fn generate_pair(t: usize, s: u32, k: usize, seed: u64) -> Result<(PhyloTree, PhyloTree, PairManifest), HarnessError> {
    if t < 4 {
        return Err(HarnessError::Parameter(format!("t = {t} is below 4")));
    }
    if s > 100 {
        return Err(HarnessError::Parameter(format!("skew {s} is above 100")));
    }
    let manifest = PairManifest { seed, tree_seed: split_seed(seed, 0), walk_seed: split_seed(seed, 1) };
    let a = random_tree(t, s as f64, &mut ChaCha8Rng::seed_from_u64(manifest.tree_seed))?;
    let b = random_tbr_walk(&a, k, &mut ChaCha8Rng::seed_from_u64(manifest.walk_seed));
    Ok((a, b, manifest))
}

/// Seed of the pair for cell `cell` and replicate `replicate`.
pub fn pair_seed(root: u64, cell: usize, replicate: usize) -> u64 {
    split_seed(split_seed(root, cell as u64), replicate as u64)
}

/// Position of a pair in the grid, copied into its row.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PairId {
    pub t: usize,
    pub s: u32,
    pub k: usize,
    pub replicate: usize,
    pub seed: u64,
}

/// Measures one pair.
pub fn analyze_pair(a: &PhyloTree, b: &PhyloTree, id: PairId, config: &ExperimentConfig) -> Result<StatRow, HarnessError> {
    let clock = Instant::now();
    let s_red = kernelize(a, b, Ruleset::SubtreeOnly)?;
    let sc_red = kernelize(a, b, Ruleset::SubtreeChain)?;
    let scn_red = kernelize(a, b, Ruleset::AllSeven)?;
    let kernel_time = clock.elapsed();

    let clock = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(split_seed(id.seed, 2));
    let (x, y) = &s_red.reduced;
    let dmp_lb = dmp_lower_bound(x, y, &config.bound, &mut rng)?.value;
    let bound_time = clock.elapsed();

    let clock = Instant::now();
    let options = SolveOptions {
        ruleset: Some(Ruleset::AllSeven),
        preserve_chains: config.preserve_chains,
        use_clusters: config.use_clusters,
        budget: config.solve,
        bound: config.bound,
        seed: split_seed(id.seed, 3),
    };
    let report = tbr_distance_report(a, b, &options)?;
    let solve_time = clock.elapsed();
    let r = &report.result;
    let exact = (r.proof_status == ProofStatus::Optimal).then_some(r.distance);

    let (x, y) = &scn_red.reduced;
    let (vars, fixed_zero) = if scn_red.is_trivial() {
        (x.num_edges(), 0)
    } else {
        let m = crate::model::build_model(x, y, true)?;
        (m.num_variables(), m.fixed_zero().len())
    };
    let (theta, theta_source) = match exact {
        Some(d) => (d, ThetaSource::Exact),
        None => (dmp_lb.max(report.dmp_lower + scn_red.parameter_reduction), ThetaSource::MpLowerBound),
    };
    Ok(StatRow {
        schema: SCHEMA_VERSION,
        t: id.t,
        s: id.s,
        k: id.k,
        replicate: id.replicate,
        seed: id.seed,
        s_taxa: s_red.num_taxa(),
        sc_taxa: sc_red.num_taxa(),
        scn_taxa: scn_red.num_taxa(),
        param_reductions: scn_red.parameter_reduction,
        dmp_lb,
        d_tbr_exact: exact,
        d_upper: r.distance,
        theta,
        theta_source,
        f_k: (theta > 0).then(|| scn_red.num_taxa() as f64 / theta as f64),
        nodes: r.nodes_explored,
        vars,
        fixed_zero,
        runtimes: StageTimes { kernel: kernel_time, bound: bound_time, solve: solve_time },
    })
}

/// Runs the grid, writing rows to `out` in grid order as they become
/// available, and per-stage runtimes to `timing` if given.
pub fn run_experiment<W: Write, V: Write>(
    config: &ExperimentConfig,
    out: W,
    timing: Option<V>,
) -> Result<Vec<StatRow>, HarnessError> {
    config.validate()?;
    let mut jobs = Vec::new();
    for (c, (t, s, k)) in config.cells().into_iter().enumerate() {
        for replicate in 0..config.replicates {
            jobs.push(PairId { t, s, k, replicate, seed: pair_seed(config.seed, c, replicate) });
        }
    }
    let work = |id: &PairId| -> Result<StatRow, HarnessError> {
        let (a, b, _) = generate_pair(id.t, id.s, id.k, id.seed)?;
        analyze_pair(&a, &b, *id, config)
    };
    let (tx, rx) = mpsc::channel::<(usize, Result<StatRow, HarnessError>)>();
    let pool = match config.threads {
        Some(n) => Some(
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .map_err(|e| HarnessError::Parameter(e.to_string()))?,
        ),
        None => None,
    };
    std::thread::scope(|scope| {
        scope.spawn(move || {
            let run = move || {
                jobs.par_iter().enumerate().for_each_with(tx, |tx, (i, id)| {
                    let _ = tx.send((i, work(id)));
                })
            };
            match &pool {
                Some(p) => p.install(run),
                None => run(),
            }
        });
        write_rows(rx, out, timing)
    })
}

/// Writes rows in job order, holding back those that finish early.
fn write_rows<W: Write, V: Write>(
    rx: mpsc::Receiver<(usize, Result<StatRow, HarnessError>)>,
    out: W,
    timing: Option<V>,
) -> Result<Vec<StatRow>, HarnessError> {
    let mut csv_out = csv::Writer::from_writer(out);
    let mut time_out = timing.map(csv::Writer::from_writer);
    if let Some(w) = time_out.as_mut() {
        w.write_record(["t", "s", "k", "replicate", "kernel_ms", "bound_ms", "solve_ms"])?;
    }
    let mut pending = BTreeMap::new();
    let mut rows = Vec::new();
    for (i, row) in rx {
        pending.insert(i, row);
        while let Some(row) = pending.remove(&rows.len()) {
            let row: StatRow = row?;
            csv_out.serialize(&row)?;
            csv_out.flush()?;
            if let Some(w) = time_out.as_mut() {
                let ms = |d: Duration| format!("{:.3}", d.as_secs_f64() * 1e3);
                let rt = &row.runtimes;
                w.write_record([
                    row.t.to_string(),
                    row.s.to_string(),
                    row.k.to_string(),
                    row.replicate.to_string(),
                    ms(rt.kernel),
                    ms(rt.bound),
                    ms(rt.solve),
                ])?;
                w.flush()?;
            }
            rows.push(row);
        }
    }
    Ok(rows)
}

/// Reads rows written by [`run_experiment`].
pub fn read_rows<R: std::io::Read>(input: R) -> Result<Vec<StatRow>, HarnessError> {
    let mut reader = csv::Reader::from_reader(input);
    let rows: Vec<StatRow> = reader.deserialize().collect::<Result<_, _>>()?;
    if let Some(r) = rows.iter().find(|r| r.schema != SCHEMA_VERSION) {
        return Err(HarnessError::Parameter(format!("schema version {} is not {SCHEMA_VERSION}", r.schema)));
    }
    Ok(rows)
}

/// Mean share of taxa left by each ruleset, in percent.
#[derive(Clone, Debug, PartialEq)]
pub struct Remaining {
    pub rows: usize,
    pub subtree: f64,
    pub subtree_chain: f64,
    pub all: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Summary {
    /// Keyed by `(t, k)`.
    pub remaining: BTreeMap<(usize, usize), Remaining>,
    /// Number of rows per count of parameter-reducing steps.
    pub param_histogram: BTreeMap<usize, usize>,
    /// Rows with an exact distance.
    pub exact_rows: usize,
    /// Exact rows where the parsimony bound is strictly below the distance.
    pub dmp_below_exact: usize,
    pub max_dmp_gap: usize,
    pub max_f_k: Option<f64>,
    /// Mean share of variables fixed by chain preservation, in percent,
    /// over rows whose reduced model has variables.
    pub mean_fixed_share: Option<f64>,
}

impl Summary {
    /// Share of exact rows where the parsimony bound is tight.
    pub fn dmp_equality_fraction(&self) -> Option<f64> {
        (self.exact_rows > 0).then(|| (self.exact_rows - self.dmp_below_exact) as f64 / self.exact_rows as f64)
    }
}

pub fn compute_stats(rows: &[StatRow]) -> Result<Summary, HarnessError> {
    if rows.is_empty() {
        return Err(HarnessError::EmptyTable);
    }
    let mut sums: BTreeMap<(usize, usize), (usize, f64, f64, f64)> = BTreeMap::new();
    let mut param_histogram = BTreeMap::new();
    let (mut exact_rows, mut below, mut gap) = (0, 0, 0);
    let mut max_f_k: Option<f64> = None;
    let (mut share_sum, mut share_rows) = (0.0, 0usize);
    for r in rows {
        let e = sums.entry((r.t, r.k)).or_default();
        let pct = |x: usize| 100.0 * x as f64 / r.t as f64;
        *e = (e.0 + 1, e.1 + pct(r.s_taxa), e.2 + pct(r.sc_taxa), e.3 + pct(r.scn_taxa));
        *param_histogram.entry(r.param_reductions).or_insert(0) += 1;
        if let Some(d) = r.d_tbr_exact {
            exact_rows += 1;
            if r.dmp_lb < d {
                below += 1;
            }
            gap = gap.max(d.saturating_sub(r.dmp_lb));
        }
        if let Some(f) = r.f_k {
            max_f_k = Some(max_f_k.map_or(f, |m| m.max(f)));
        }
        if r.vars > 0 {
            share_sum += 100.0 * r.fixed_zero as f64 / r.vars as f64;
            share_rows += 1;
        }
    }
    let remaining = sums
        .into_iter()
        .map(|(key, (n, a, b, c))| {
            let n_f = n as f64;
            (key, Remaining { rows: n, subtree: a / n_f, subtree_chain: b / n_f, all: c / n_f })
        })
        .collect();
    Ok(Summary {
        remaining,
        param_histogram,
        exact_rows,
        dmp_below_exact: below,
        max_dmp_gap: gap,
        max_f_k,
        mean_fixed_share: (share_rows > 0).then(|| share_sum / share_rows as f64),
    })
}

impl fmt::Display for Summary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "remaining taxa (%)")?;
        writeln!(f, "{:>4} {:>3} {:>5} {:>8} {:>8} {:>8}", "t", "k", "rows", "s", "sc", "scn")?;
        for ((t, k), r) in &self.remaining {
            writeln!(f, "{t:>4} {k:>3} {:>5} {:>8.1} {:>8.1} {:>8.1}", r.rows, r.subtree, r.subtree_chain, r.all)?;
        }
        writeln!(f, "parameter reductions (count: rows)")?;
        for (c, n) in &self.param_histogram {
            writeln!(f, "  {c}: {n}")?;
        }
        writeln!(f, "exact rows: {}", self.exact_rows)?;
        if let Some(q) = self.dmp_equality_fraction() {
            writeln!(f, "d_MP tight on {:.1}% of exact rows, max gap {}", 100.0 * q, self.max_dmp_gap)?;
        }
        if let Some(m) = self.max_f_k {
            writeln!(f, "max f(k): {m:.3}")?;
        }
        if let Some(s) = self.mean_fixed_share {
            writeln!(f, "variables fixed by chain preservation: {s:.2}% on average")?;
        }
        Ok(())
    }
}
