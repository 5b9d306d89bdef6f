use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use clap::{Args, Parser, Subcommand};
use eqpo_bench::experiment::{default_variants, effective_config, topology_seed, GroundTruth};
use eqpo_bench::oracle::oracle_check_with;
use eqpo_bench::{run_experiment, ExperimentSpec};
use eqpo_core::optimizer::Optimizer;
use eqpo_core::pareto::accuracy;
use eqpo_core::{generate_topology, run, AlgorithmConfig, Topology, Variant};

#[derive(Parser)]
#[command(name = "eqpo-bench", version, about = "Pareto route optimization experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Full Monte-Carlo experiment, one CSV row per (n_nodes, run, variant).
    Run(CommonArgs),
    /// Check the full-search variant against the exhaustive front.
    OracleCheck {
        #[command(flatten)]
        common: CommonArgs,
        /// Drop one front member before comparing (self-test of the checker).
        #[arg(long, hide = true)]
        inject_fault: bool,
    },
    /// One topology with a verbose trace.
    Single(CommonArgs),
    /// Dump every route of one topology with its utility and front membership.
    Enumerate(CommonArgs),
}

#[derive(Args, Clone)]
struct CommonArgs {
    /// Node counts, e.g. `5,6,7` or `5..9`.
    #[arg(long)]
    nodes: Option<String>,
    #[arg(long)]
    runs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Restrict to one variant: eqpo, bta-eqpo or bta-eqpo-full-search.
    #[arg(long)]
    variant: Option<Variant>,
    /// Back-trace depth(s) for bta-eqpo, e.g. `2` or `0,1,2,4`.
    #[arg(long)]
    backtrace_n: Option<String>,
    /// Output file (CSV for `run`, JSON for the others; default stdout).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Experiment spec (TOML or JSON); flags override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Emit the per-stage trace as a JSON event log.
    #[arg(long)]
    trace: bool,
}

fn parse_list(text: &str) -> anyhow::Result<Vec<usize>> {
    if let Some((a, b)) = text.split_once("..") {
        let (a, b): (usize, usize) = (a.trim().parse()?, b.trim().trim_start_matches('=').parse()?);
        return Ok((a..=b).collect());
    }
    text.split(',').map(|s| Ok(s.trim().parse()?)).collect()
}

impl CommonArgs {
    fn spec(&self) -> anyhow::Result<ExperimentSpec> {
        let mut spec = match &self.config {
            Some(path) => ExperimentSpec::from_file(path)?,
            None => ExperimentSpec::new(vec![8], 100, 0),
        };
        if let Some(nodes) = &self.nodes {
            spec.node_counts = parse_list(nodes).context("--nodes")?;
        }
        if let Some(runs) = self.runs {
            spec.runs = runs;
        }
        if let Some(seed) = self.seed {
            spec.base_seed = seed;
        }
        let depths = self.backtrace_n.as_deref().map(parse_list).transpose().context("--backtrace-n")?;
        match (self.variant, depths) {
            (Some(Variant::BtaEqpo), Some(ds)) | (None, Some(ds)) => {
                spec.variants = ds.into_iter().map(AlgorithmConfig::bta).collect()
            }
            (Some(Variant::BtaEqpo), None) => spec.variants = vec![AlgorithmConfig::bta(2)],
            (Some(v), _) => spec.variants = vec![AlgorithmConfig::new(v, 0)],
            (None, None) if self.config.is_none() => spec.variants = default_variants(),
            (None, None) => {}
        }
        if let Some(out) = &self.out {
            spec.output_path = Some(out.clone());
        }
        Ok(spec)
    }

    fn single_topology(&self) -> anyhow::Result<(ExperimentSpec, usize, u64, Topology)> {
        let spec = self.spec()?;
        let n_nodes = spec.node_counts[0];
        let seed = topology_seed(spec.base_seed, n_nodes, 0);
        let topology = generate_topology(n_nodes, seed, spec.channel)?;
        Ok((spec, n_nodes, seed, topology))
    }
}

fn emit(out: Option<&PathBuf>, text: &str) -> anyhow::Result<()> {
    match out {
        Some(path) => std::fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn cmd_run(args: &CommonArgs) -> anyhow::Result<ExitCode> {
    let spec = args.spec()?;
    let table = run_experiment(&spec)?;
    let csv = table.to_csv_string()?;
    emit(spec.output_path.as_ref(), &csv)?;
    for a in &table.aggregates {
        eprintln!(
            "n_nodes={} {:<22} n={} runs={} L_P={:.1} L_S={:.1} Pd={:.2e} 1-C={:.2e}",
            a.n_nodes,
            a.label,
            a.n,
            a.runs,
            a.parallel_cfes.mean,
            a.sequential_cfes.mean,
            a.misdetection_rate.mean,
            1.0 - a.completion.mean,
        );
    }
    Ok(ExitCode::SUCCESS)
}

fn cmd_oracle_check(args: &CommonArgs, inject_fault: bool) -> anyhow::Result<ExitCode> {
    let spec = args.spec()?;
    let fixture_dir = spec.output_path.clone().unwrap_or_else(|| PathBuf::from("oracle-fixtures"));
    let report = oracle_check_with(&spec, Some(&fixture_dir), |topology, config, seed| {
        let mut front = run(topology, config, seed)?.front;
        if inject_fault {
            front = eqpo_core::pareto::non_dominated_set(
                front.iter().skip(1).map(|(r, u)| (r.clone(), *u)),
                config.dominance,
            );
        }
        Ok(front)
    })?;
    println!("oracle-check: {}/{} runs match the exhaustive front", report.pass_count(), report.checked);
    for f in &report.failures {
        let where_ = f.fixture_path.as_ref().map(|p| p.display().to_string()).unwrap_or_default();
        println!("  mismatch n_nodes={} run={} seed={} fixture={}", f.n_nodes, f.run, f.seed, where_);
    }
    Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::FAILURE })
}

fn cmd_single(args: &CommonArgs) -> anyhow::Result<ExitCode> {
    let (spec, n_nodes, seed, topology) = args.single_topology()?;
    let mut truth = GroundTruth::new(topology.clone())?;
    let mut results = Vec::new();
    for config in &spec.variants {
        let config = effective_config(config, n_nodes);
        let out = Optimizer::new(&topology, config, seed)?.run()?;
        let true_front = truth.front(config.dominance).clone();
        let acc = accuracy(&out.front, &truth.all_routes, &true_front, config.dominance)?;
        let mut entry = serde_json::json!({
            "variant": config.variant,
            "n": config.backtrace_depth_n,
            "ledger": out.ledger,
            "accuracy": acc,
            "front": out.front,
        });
        if args.trace {
            entry["trace"] = serde_json::to_value(&out.trace)?;
        }
        results.push(entry);
    }
    let doc = serde_json::json!({
        "seed": seed,
        "topology": topology,
        "true_front": truth.front(spec.variants[0].dominance),
        "results": results,
    });
    emit(spec.output_path.as_ref(), &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    Ok(ExitCode::SUCCESS)
}

fn cmd_enumerate(args: &CommonArgs) -> anyhow::Result<ExitCode> {
    let (spec, _, seed, topology) = args.single_topology()?;
    let mut truth = GroundTruth::new(topology.clone())?;
    let front = truth.front(spec.variants[0].dominance).clone();
    let routes: Vec<_> = truth
        .all_routes
        .iter()
        .map(|(route, uv)| {
            serde_json::json!({
                "route": route,
                "stage": route.stage(),
                "ber": uv.ber,
                "power_loss": uv.power_loss,
                "delay": uv.delay,
                "pareto_optimal": front.contains(route),
            })
        })
        .collect();
    let doc = serde_json::json!({ "seed": seed, "topology": topology, "routes": routes });
    emit(spec.output_path.as_ref(), &(serde_json::to_string_pretty(&doc)? + "\n"))?;
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Run(args) => cmd_run(args),
        Command::OracleCheck { common, inject_fault } => cmd_oracle_check(common, *inject_fault),
        Command::Single(args) => cmd_single(args),
        Command::Enumerate(args) => {
            if args.trace {
                Err(anyhow::anyhow!("--trace applies to `single` only"))
            } else {
                cmd_enumerate(args)
            }
        }
    };
    match result {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}
