use std::fmt::Write as _;
use std::fs;
use std::io::{self, Read, Write};
use std::path::{Path, PathBuf};
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use tbr_core::{
    brute_force_tbr, build_model, compute_stats, dmp_lower_bound, export_lp, generate_pair, greedy_upper_bound,
    kernelize, parse_newick_lines, read_rows, run_experiment, tbr_distance_report, write_newick, BoundBudget,
    ExperimentConfig, PhyloTree, Ruleset, SolveBudget, SolveOptions,
};

#[derive(Parser)]
#[command(name = "tbr", version, about = "TBR distance, kernelization and bounds for unrooted binary trees")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Root seed for every random choice.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Reductions applied before solving.
    #[arg(long, global = true, default_value = "all", value_parser = parse_ruleset)]
    ruleset: RulesetArg,
    #[arg(long, global = true, value_enum, default_value_t = Switch::On)]
    preserve_chains: Switch,
    #[arg(long, global = true, value_enum, default_value_t = Switch::On)]
    clusters: Switch,
    /// Characters sampled for the parsimony lower bound.
    #[arg(long, global = true, default_value_t = 1000)]
    budget_samples: u64,
    /// Wall-clock limit for the exact solver, in seconds.
    #[arg(long, global = true)]
    time_cap: Option<f64>,
    /// Branch-and-bound node limit (deterministic, unlike the time cap).
    #[arg(long, global = true)]
    max_nodes: Option<u64>,
    /// Write the result here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy)]
struct RulesetArg(Option<Ruleset>);

fn parse_ruleset(s: &str) -> Result<RulesetArg, String> {
    if s == "none" {
        return Ok(RulesetArg(None));
    }
    s.parse().map(|r| RulesetArg(Some(r)))
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Switch {
    On,
    Off,
}

#[derive(Subcommand)]
enum Command {
    /// Draw a random tree and a copy after k random TBR moves.
    Generate {
        #[arg(long, short = 't')]
        taxa: usize,
        #[arg(long, short = 's', default_value_t = 50)]
        skew: u32,
        #[arg(long, short = 'k')]
        moves: usize,
    },
    /// Apply the reduction rules and print the reduced pair and trace.
    Kernelize { input: PathBuf },
    /// Parsimony lower bound and greedy upper bound.
    Bound { input: PathBuf },
    /// Exact TBR distance.
    Solve { input: PathBuf },
    /// Exhaustive distance for pairs of at most 10 taxa.
    Oracle { input: PathBuf },
    /// Run a grid of generated pairs and write one CSV row per pair.
    Experiment {
        #[arg(long, value_delimiter = ',', default_values_t = [20, 40, 60])]
        taxa: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [50, 90])]
        skew: Vec<u32>,
        #[arg(long, value_delimiter = ',', default_values_t = [3, 5, 8])]
        moves: Vec<usize>,
        #[arg(long, default_value_t = 3)]
        replicates: usize,
        #[arg(long)]
        threads: Option<usize>,
        /// Per-stage runtimes, kept apart so the main table is reproducible.
        #[arg(long)]
        timing: Option<PathBuf>,
    },
    /// Summarize an experiment CSV.
    Stats { input: PathBuf },
    /// The hitting-set model in LP format.
    ExportLp { input: PathBuf },
}

impl Global {
    fn budget(&self) -> SolveBudget {
        SolveBudget { max_nodes: self.max_nodes, time_cap: self.time_cap.map(Duration::from_secs_f64) }
    }

    fn options(&self) -> SolveOptions {
        SolveOptions {
            ruleset: self.ruleset.0,
            preserve_chains: self.preserve_chains == Switch::On,
            use_clusters: self.clusters == Switch::On,
            budget: self.budget(),
            bound: BoundBudget::samples(self.budget_samples),
            seed: self.seed,
        }
    }

    fn emit(&self, text: &str) -> Result<()> {
        match &self.out {
            Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display())),
            None => io::stdout().write_all(text.as_bytes()).context("writing stdout"),
        }
    }
}

fn read_input(path: &Path) -> Result<String> {
    if path.as_os_str() == "-" {
        let mut s = String::new();
        io::stdin().read_to_string(&mut s)?;
        return Ok(s);
    }
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

/// Two trees, one Newick string per line.
fn read_pair(path: &Path) -> Result<(PhyloTree, PhyloTree)> {
    let text = read_input(path)?;
    let trees = parse_newick_lines(&text).map_err(|(line, e)| anyhow::anyhow!("{}:{line}: {e}", path.display()))?;
    match <[PhyloTree; 2]>::try_from(trees) {
        Ok([a, b]) => Ok((a, b)),
        Err(v) => bail!("{}: expected 2 trees, found {}", path.display(), v.len()),
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = &cli.global;
    let mut out = String::new();
    match &cli.command {
        Command::Generate { taxa, skew, moves } => {
            let (a, b, m) = generate_pair(*taxa, *skew, *moves, g.seed)?;
            writeln!(out, "{}\n{}", write_newick(&a), write_newick(&b))?;
            eprintln!("seed={} tree_seed={} walk_seed={}", m.seed, m.tree_seed, m.walk_seed);
        }
        Command::Kernelize { input } => {
            let (a, b) = read_pair(input)?;
            let Some(rs) = g.ruleset.0 else { bail!("kernelize needs a ruleset other than none") };
            let k = kernelize(&a, &b, rs)?;
            writeln!(out, "{}\n{}", write_newick(&k.reduced.0), write_newick(&k.reduced.1))?;
            writeln!(out, "# ruleset={rs} taxa={}->{} parameter_reduction={}", a.num_taxa(), k.num_taxa(), k.parameter_reduction)?;
            for s in &k.trace {
                writeln!(out, "# {s}")?;
            }
        }
        Command::Bound { input } => {
            let (a, b) = read_pair(input)?;
            let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
            let r = dmp_lower_bound(&a, &b, &BoundBudget::samples(g.budget_samples), &mut rng)?;
            let model = build_model(&a, &b, false)?;
            let (_, upper) = greedy_upper_bound(&model);
            writeln!(out, "dmp_lower={} samples={} elapsed_ms={:.1}", r.value, r.samples_taken, r.elapsed.as_secs_f64() * 1e3)?;
            if let Some(c) = &r.best_character {
                writeln!(out, "character={c}")?;
            }
            writeln!(out, "greedy_upper={upper}")?;
        }
        Command::Solve { input } => {
            let (a, b) = read_pair(input)?;
            let rep = tbr_distance_report(&a, &b, &g.options())?;
            let r = &rep.result;
            if let Some(k) = &rep.kernel {
                writeln!(out, "kernel taxa={}->{} parameter_reduction={}", a.num_taxa(), k.num_taxa(), k.parameter_reduction)?;
            }
            writeln!(out, "dmp_lower={}", rep.dmp_lower)?;
            writeln!(out, "nodes={} bounds={}..{} status={}", r.nodes_explored, r.bounds_used.0, r.bounds_used.1, r.proof_status)?;
            writeln!(out, "forest={}", r.forest)?;
            writeln!(out, "distance={}", r.distance)?;
        }
        Command::Oracle { input } => {
            let (a, b) = read_pair(input)?;
            let r = brute_force_tbr(&a, &b)?;
            writeln!(out, "forest={}\ndistance={}", r.forest, r.d_tbr)?;
        }
        Command::Experiment { taxa, skew, moves, replicates, threads, timing } => {
            let config = ExperimentConfig {
                taxa_grid: taxa.clone(),
                skew_grid: skew.clone(),
                moves_grid: moves.clone(),
                replicates: *replicates,
                seed: g.seed,
                bound: BoundBudget::samples(g.budget_samples),
                solve: g.budget(),
                preserve_chains: g.preserve_chains == Switch::On,
                use_clusters: g.clusters == Switch::On,
                threads: *threads,
            };
            let sink: Box<dyn Write> = match &g.out {
                Some(p) => Box::new(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
                None => Box::new(io::stdout().lock()),
            };
            let timing = match timing {
                Some(p) => Some(fs::File::create(p).with_context(|| format!("creating {}", p.display()))?),
                None => None,
            };
            let rows = run_experiment(&config, sink, timing)?;
            eprint!("{}", compute_stats(&rows)?);
            return Ok(());
        }
        Command::Stats { input } => {
            let rows = read_rows(read_input(input)?.as_bytes())?;
            write!(out, "{}", compute_stats(&rows)?)?;
        }
        Command::ExportLp { input } => {
            let (a, b) = read_pair(input)?;
            out = export_lp(&build_model(&a, &b, g.preserve_chains == Switch::On)?);
        }
    }
    g.emit(&out)
}

fn main() {
    if let Err(e) = run(Cli::parse()) {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}
