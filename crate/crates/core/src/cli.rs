//! Subcommand front end.
//!
//! Exit codes: 0 success, 1 domain failure (generation, validation,
//! numeric), 2 usage error. Machine output goes to stdout, diagnostics to
//! stderr. `THRESHNET_SEED` supplies the default seed where one applies.

use crate::arch::{build_network, export_dot, validate_graph, ArchConfig, NetworkGraph, Preset};
use crate::cost::{
    compare_reports, format_count, reference_cost, relative_to_reference, summarize, CostReport,
};
use crate::engine;
use crate::sweep::sensitivity_report;
use crate::tables::{verify_all, RowOutcome};
use crate::topology::{build_block_topology, ConnectionMode};
use clap::{Args, Parser, Subcommand, ValueEnum};
use std::fmt;
use std::path::{Path, PathBuf};

#[derive(Parser, Debug)]
#[command(
    name = "thresholdnet",
    version,
    about = "Threshold-pruned dense CNN topologies: generate, verify, build, cost and certify"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Generate one block's connection table.
    Topology {
        /// Number of layers in the block.
        #[arg(long)]
        layers: usize,
        /// Connection rule: dense, sparse, harmonic, threshold-ab, threshold-bc.
        #[arg(long)]
        mode: ModeName,
        /// Threshold for the threshold modes; window width for sparse.
        #[arg(long)]
        threshold: Option<usize>,
        #[arg(long, value_enum, default_value_t = TopologyFormat::Table)]
        format: TopologyFormat,
    },
    /// Diff the generators against the embedded reference tables.
    VerifyTables,
    /// Build a network graph and print it as JSON.
    Build {
        #[command(flatten)]
        source: ConfigSource,
        /// Override the (square) input resolution.
        #[arg(long)]
        resolution: Option<usize>,
        /// Write the JSON here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Parameter / MAC / FLOP / traffic accounting for one network.
    Summarize {
        #[command(flatten)]
        source: ConfigSource,
        #[arg(long)]
        resolution: Option<usize>,
        /// Machine-readable JSON report on stdout.
        #[arg(long, conflicts_with = "csv")]
        json: bool,
        /// Per-node CSV on stdout.
        #[arg(long)]
        csv: bool,
    },
    /// Side-by-side cost comparison of two networks.
    Compare {
        /// Preset name or config path.
        a: String,
        /// Preset name or config path.
        b: String,
        #[arg(long)]
        resolution: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Write the architecture as a Graphviz file.
    ExportDot {
        #[command(flatten)]
        source: ConfigSource,
        #[arg(long)]
        out: PathBuf,
    },
    /// Print the recipe-sensitivity report for the threshold presets.
    Sweep,
    /// Overfit a tiny network on a synthetic batch; prints the loss CSV.
    TrainToy {
        /// Custom recipe; defaults to the built-in desk-scale net.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 200)]
        steps: usize,
        #[arg(long, default_value_t = 0.05)]
        lr: f64,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, default_value_t = 8)]
        samples: usize,
        /// Write the CSV here instead of stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check analytic gradients against central finite differences.
    Gradcheck {
        /// Custom recipe; defaults to the built-in micro-graphs.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, default_value_t = 1e-4)]
        tol: f64,
        #[arg(long)]
        seed: Option<u64>,
    },
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
pub struct ConfigSource {
    /// Built-in recipe: densenet121, thresholdnet_v1 or thresholdnet_v2.
    #[arg(long)]
    preset: Option<String>,
    /// Flat key-value recipe file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum ModeName {
    Dense,
    Sparse,
    Harmonic,
    ThresholdAb,
    ThresholdBc,
}

#[derive(ValueEnum, Clone, Copy, Debug)]
pub enum TopologyFormat {
    Table,
    Json,
    Dot,
}

/// Failures routed to exit codes.
enum CliError {
    /// Exit 2: flag combination the type system cannot reject.
    Usage(String),
    /// Exit 1: generation, validation or numeric failure.
    Domain(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Domain(m) => f.write_str(m),
        }
    }
}

fn domain(err: impl fmt::Display) -> CliError {
    CliError::Domain(err.to_string())
}

/// Runs a parsed invocation and returns the process exit code.
pub fn run(cli: Cli) -> i32 {
    match dispatch(cli.command) {
        Ok(()) => 0,
        Err(CliError::Domain(message)) => {
            eprintln!("error: {message}");
            1
        }
        Err(CliError::Usage(message)) => {
            eprintln!("usage error: {message}");
            2
        }
    }
}

fn dispatch(command: Command) -> Result<(), CliError> {
    match command {
        Command::Topology { layers, mode, threshold, format } => {
            run_topology(layers, mode, threshold, format)
        }
        Command::VerifyTables => run_verify_tables(),
        Command::Build { source, resolution, out } => run_build(&source, resolution, out),
        Command::Summarize { source, resolution, json, csv } => {
            run_summarize(&source, resolution, json, csv)
        }
        Command::Compare { a, b, resolution, json } => run_compare(&a, &b, resolution, json),
        Command::ExportDot { source, out } => run_export_dot(&source, &out),
        Command::Sweep => {
            print!("{}", sensitivity_report());
            Ok(())
        }
        Command::TrainToy { config, steps, lr, seed, samples, out } => {
            run_train_toy(config.as_deref(), steps, lr, resolve_seed(seed), samples, out.as_deref())
        }
        Command::Gradcheck { config, tol, seed } => {
            run_gradcheck(config.as_deref(), tol, resolve_seed(seed))
        }
    }
}

/// Flag, then `THRESHNET_SEED`, then 7.
fn resolve_seed(flag: Option<u64>) -> u64 {
    flag.or_else(|| std::env::var("THRESHNET_SEED").ok().and_then(|v| v.parse().ok()))
        .unwrap_or(7)
}

fn resolve_mode(
    name: ModeName,
    threshold: Option<usize>,
) -> Result<ConnectionMode, CliError> {
    let required = |param: &str| {
        threshold.ok_or_else(|| {
            CliError::Usage(format!("--threshold is required for this mode ({param})"))
        })
    };
    let forbidden = |mode: &str| {
        if threshold.is_some() {
            Err(CliError::Usage(format!("--threshold does not apply to mode '{mode}'")))
        } else {
            Ok(())
        }
    };
    let mode = match name {
        ModeName::Dense => {
            forbidden("dense")?;
            ConnectionMode::Dense
        }
        ModeName::Harmonic => {
            forbidden("harmonic")?;
            ConnectionMode::Harmonic
        }
        ModeName::Sparse => ConnectionMode::SparseWindow { window: required("window width")? },
        ModeName::ThresholdAb => {
            ConnectionMode::ThresholdAb { threshold: required("switch layer")? }
        }
        ModeName::ThresholdBc => {
            ConnectionMode::ThresholdBc { threshold: required("switch layer")? }
        }
    };
    mode.validate().map_err(|e| CliError::Usage(e.to_string()))?;
    Ok(mode)
}

fn run_topology(
    layers: usize,
    mode: ModeName,
    threshold: Option<usize>,
    format: TopologyFormat,
) -> Result<(), CliError> {
    let mode = resolve_mode(mode, threshold)?;
    let topo = build_block_topology(layers, mode).map_err(domain)?;
    match format {
        TopologyFormat::Table => println!("{}", topo.to_table()),
        TopologyFormat::Json => println!("{}", topo.to_json()),
        TopologyFormat::Dot => print!("{}", topo.to_dot()),
    }
    Ok(())
}

fn run_verify_tables() -> Result<(), CliError> {
    let reports = verify_all();
    let mut failed = false;
    for report in &reports {
        let total = report.rows.len();
        if report.documented_deviations == 0 && report.unexpected_mismatches == 0 {
            println!("{}: {}/{} rows match", report.name, report.matched, total);
        } else {
            println!(
                "{}: {}/{} rows match, {} documented deviation(s), {} unexpected mismatch(es)",
                report.name,
                report.matched,
                total,
                report.documented_deviations,
                report.unexpected_mismatches
            );
        }
        for (layer, outcome) in &report.rows {
            match outcome {
                RowOutcome::Match => {}
                RowOutcome::DocumentedDeviation { printed, generated } => println!(
                    "  layer {layer}: printed '{printed}', generated '{generated}' (documented deviation)"
                ),
                RowOutcome::Mismatch { printed, generated } => {
                    failed = true;
                    println!("  layer {layer}: printed '{printed}', generated '{generated}' MISMATCH");
                }
            }
        }
        match report.claimed_total {
            Some(claimed) if claimed != report.printed_total => println!(
                "  totals: generated {}, printed rows sum to {}, text claims {} (logged discrepancy)",
                report.generated_total, report.printed_total, claimed
            ),
            _ => println!(
                "  totals: generated {}, printed rows sum to {}",
                report.generated_total, report.printed_total
            ),
        }
    }
    if failed {
        return Err(CliError::Domain("reference table verification failed".into()));
    }
    Ok(())
}

impl ConfigSource {
    fn load(&self) -> Result<(String, ArchConfig), CliError> {
        if let Some(name) = &self.preset {
            let preset: Preset = name.parse().map_err(domain)?;
            return Ok((preset.name().to_string(), preset.config()));
        }
        let path = self.config.as_ref().expect("clap enforces one source");
        load_config(path)
    }
}

fn load_config(path: &Path) -> Result<(String, ArchConfig), CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Domain(format!("cannot read {}: {e}", path.display())))?;
    let cfg = ArchConfig::from_flat(&text).map_err(domain)?;
    let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
    Ok((name, cfg))
}

fn build_from(source: &ConfigSource, resolution: Option<usize>) -> Result<(String, ArchConfig, NetworkGraph), CliError> {
    let (name, mut cfg) = source.load()?;
    if let Some(size) = resolution {
        cfg = cfg.with_resolution(size);
    }
    let graph = build_network(&cfg).map_err(domain)?;
    let violations = validate_graph(&graph);
    if !violations.is_empty() {
        return Err(CliError::Domain(format!(
            "graph validation failed: {}",
            violations.iter().map(|v| v.to_string()).collect::<Vec<_>>().join("; ")
        )));
    }
    Ok((name, cfg, graph))
}

fn run_build(
    source: &ConfigSource,
    resolution: Option<usize>,
    out: Option<PathBuf>,
) -> Result<(), CliError> {
    let (name, _cfg, graph) = build_from(source, resolution)?;
    eprintln!("{name}: {} nodes, {} weighted layers", graph.nodes.len(), graph.weighted_layer_count());
    for stage in &graph.stages {
        eprintln!("  {:<20} {}", stage.name, stage.output_shape);
    }
    let json = graph.to_json();
    match out {
        Some(path) => std::fs::write(&path, json)
            .map_err(|e| CliError::Domain(format!("cannot write {}: {e}", path.display())))?,
        None => println!("{json}"),
    }
    Ok(())
}

fn reference_line(name: &str, report: &CostReport) -> Option<String> {
    let preset: Preset = name.parse().ok()?;
    let reference = reference_cost(preset);
    Some(format!(
        "published reference: {} params ({:+.2}%), {} MAdds ({:+.2}%)",
        format_count(reference.params as u64),
        100.0 * relative_to_reference(report.totals.params, reference.params),
        format_count(reference.madds as u64),
        100.0 * relative_to_reference(report.totals.macs, reference.madds),
    ))
}

fn run_summarize(
    source: &ConfigSource,
    resolution: Option<usize>,
    json: bool,
    csv: bool,
) -> Result<(), CliError> {
    let (name, cfg, graph) = build_from(source, resolution)?;
    let report = summarize(&graph).map_err(domain)?;
    if json {
        let value = serde_json::json!({
            "name": name,
            "input": [cfg.input_channels, cfg.input_height, cfg.input_width],
            "block_depths": cfg.block_depths(),
            "blocks": cfg.blocks,
            "totals": report.totals,
            "per_node": report.per_node,
        });
        println!("{}", serde_json::to_string_pretty(&value).expect("json"));
        return Ok(());
    }
    if csv {
        print!("{}", report.to_csv());
        return Ok(());
    }
    println!("network: {name}  input: {}x{}x{}", cfg.input_channels, cfg.input_height, cfg.input_width);
    println!(
        "blocks:  {}",
        cfg.blocks
            .iter()
            .map(|b| format!("{}x{}", b.mode, b.depth))
            .collect::<Vec<_>>()
            .join(", ")
    );
    println!("#Params  {:>10}  ({})", format_count(report.totals.params), report.totals.params);
    println!("#MAdds   {:>10}  ({})", format_count(report.totals.macs), report.totals.macs);
    println!("#FLOPS   {:>10}  ({})", format_count(report.totals.flops), report.totals.flops);
    println!(
        "traffic  {:>10}  elements ({} at 4 B/element)",
        format_count(report.totals.traffic_elements),
        format_count(report.traffic_bytes(4)),
    );
    if let Some(line) = reference_line(&name, &report) {
        println!("{line}");
    }
    Ok(())
}

fn load_operand(operand: &str, resolution: Option<usize>) -> Result<(String, CostReport), CliError> {
    let source = if operand.parse::<Preset>().is_ok() {
        ConfigSource { preset: Some(operand.to_string()), config: None }
    } else {
        ConfigSource { preset: None, config: Some(PathBuf::from(operand)) }
    };
    let (name, _cfg, graph) = build_from(&source, resolution)?;
    let report = summarize(&graph).map_err(domain)?;
    Ok((name, report))
}

fn run_compare(
    a: &str,
    b: &str,
    resolution: Option<usize>,
    json: bool,
) -> Result<(), CliError> {
    let (name_a, report_a) = load_operand(a, resolution)?;
    let (name_b, report_b) = load_operand(b, resolution)?;
    let comparison = compare_reports(&report_a, &report_b);
    if json {
        let value = serde_json::json!({
            "a": { "name": name_a, "totals": report_a.totals },
            "b": { "name": name_b, "totals": report_b.totals },
            "deltas": comparison.metrics,
        });
        println!("{}", serde_json::to_string_pretty(&value).expect("json"));
        return Ok(());
    }
    println!("{:<10} {:>16} {:>16} {:>16} {:>9}", "metric", name_a, name_b, "delta", "relative");
    for metric in &comparison.metrics {
        println!(
            "{:<10} {:>16} {:>16} {:>16} {:>8.1}%",
            metric.metric,
            format_count(metric.a),
            format_count(metric.b),
            metric.delta,
            100.0 * metric.relative
        );
    }
    for (name, report) in [(&name_a, &report_a), (&name_b, &report_b)] {
        if let Some(line) = reference_line(name, report) {
            println!("{name}: {line}");
        }
    }
    Ok(())
}

fn run_export_dot(source: &ConfigSource, out: &Path) -> Result<(), CliError> {
    let (name, cfg) = source.load()?;
    let dot = export_dot(&cfg, &name).map_err(domain)?;
    std::fs::write(out, dot)
        .map_err(|e| CliError::Domain(format!("cannot write {}: {e}", out.display())))?;
    eprintln!("wrote {}", out.display());
    Ok(())
}

fn run_train_toy(
    config: Option<&Path>,
    steps: usize,
    lr: f64,
    seed: u64,
    samples: usize,
    out: Option<&Path>,
) -> Result<(), CliError> {
    if samples == 0 || samples > 64 {
        return Err(CliError::Usage("--samples must be in 1..=64".into()));
    }
    let cfg = match config {
        Some(path) => load_config(path)?.1,
        None => crate::arch::toy(),
    };
    let graph = build_network(&cfg).map_err(domain)?;
    let mut model = engine::init_weights(&graph, seed);
    let classes = model.classes().map_err(domain)?;
    let (inputs, labels) = engine::synthetic_dataset(
        samples,
        classes,
        cfg.input_channels,
        cfg.input_height,
        cfg.input_width,
        seed,
    );
    let trace = engine::train_toy(&mut model, &inputs, &labels, steps, lr).map_err(domain)?;
    let csv = engine::trace_to_csv(&trace);
    match out {
        Some(path) => std::fs::write(path, csv)
            .map_err(|e| CliError::Domain(format!("cannot write {}: {e}", path.display())))?,
        None => print!("{csv}"),
    }
    if let Some(final_loss) = trace.last() {
        eprintln!("{steps} steps at lr {lr}: loss {:.6} -> {final_loss:.6}", trace[0]);
    }
    Ok(())
}

fn run_gradcheck(config: Option<&Path>, tol: f64, seed: u64) -> Result<(), CliError> {
    let graphs: Vec<(String, NetworkGraph)> = match config {
        Some(path) => {
            let (name, cfg) = load_config(path)?;
            vec![(name, build_network(&cfg).map_err(domain)?)]
        }
        None => vec![
            ("unit-chain".into(), engine::unit_chain_micrograph()),
            ("branching".into(), engine::branching_micrograph()),
        ],
    };
    let mut all_passed = true;
    for (name, graph) in &graphs {
        let report = engine::grad_check(graph, tol, seed).map_err(domain)?;
        println!("{name}: {report}");
        all_passed &= report.passed;
    }
    if !all_passed {
        return Err(CliError::Domain("gradient check failed".into()));
    }
    Ok(())
}
