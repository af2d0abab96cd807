use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use bfsynth::aiger::{parse_aiger, write_aiger, OutputManifest};
use bfsynth::bench::{gen_factorization, gen_random_spec};
use bfsynth::cegar::CegarVariant;
use bfsynth::pipeline::{synthesize, verify, Extraction, OrderMode, VerificationReport};
use bfsynth::schedule::SynthConfig;
use bfsynth::{FormulaRef, Manager, VarTable};

#[derive(Parser)]
#[command(
    name = "bfsynth",
    version,
    about = "Skolem function synthesis for Boolean relational specifications"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Synthesize functions for the outputs of an AIGER specification.
    Synth(SynthArgs),
    /// Generate benchmark specifications.
    #[command(subcommand)]
    Bench(BenchCmd),
}

#[derive(Clone, Copy, ValueEnum)]
enum ExtractArg {
    /// g_i = ¬γ_i at the root.
    Gamma,
    /// g_i = δ_i at the root.
    Delta,
}

#[derive(Clone, Copy, ValueEnum)]
enum OrderArg {
    /// Outputs sorted by transitive fan-in size.
    Fanin,
    /// Manifest order.
    Given,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    /// Refine δ components to exactness.
    Exact,
    /// Refine δ components only far enough for extraction.
    Adequate,
}

#[derive(Args)]
struct SynthArgs {
    /// Specification in ASCII AIGER with one output.
    spec: PathBuf,
    /// JSON manifest naming the input variables to synthesize.
    #[arg(long)]
    outputs: PathBuf,
    /// Worker threads.
    #[arg(long, default_value_t = default_workers())]
    workers: usize,
    /// Refinement budget per internal node in seconds; 0 limits refinement
    /// to the root.
    #[arg(long)]
    cegar_timeout: Option<f64>,
    /// Wall-clock budget for the whole run in seconds.
    #[arg(long)]
    global_timeout: Option<f64>,
    #[arg(long, value_enum, default_value_t = ExtractArg::Gamma)]
    extract: ExtractArg,
    #[arg(long, value_enum, default_value_t = OrderArg::Fanin)]
    order: OrderArg,
    #[arg(long, value_enum, default_value_t = VariantArg::Exact)]
    cegar_variant: VariantArg,
    /// Rewrite recognized ITE/XOR patterns before synthesis.
    #[arg(long)]
    detect_ops: bool,
    /// SAT-check the synthesized functions against the specification.
    #[arg(long)]
    verify: bool,
    /// Write run statistics as JSON lines.
    #[arg(long)]
    dump_stats: Option<PathBuf>,
    /// Seed for solver tie-breaking.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Function vector destination (default: <spec>.skolem.aag).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BenchCmd {
    /// φ(X, Y): X equals the product of the two n-bit factors Y, neither 1.
    Factorization {
        #[arg(long)]
        bits: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Seeded random DAG over x1..xm, y1..yn.
    Random {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 30)]
        nodes: u32,
        #[arg(long, default_value_t = 3)]
        inputs: usize,
        #[arg(long, default_value_t = 3)]
        outputs: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn default_workers() -> usize {
    std::thread::available_parallelism()
        .map(|n| n.get())
        .unwrap_or(1)
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(cli: Cli) -> Result<ExitCode> {
    match cli.cmd {
        Cmd::Synth(args) => synth(args),
        Cmd::Bench(cmd) => {
            bench(cmd)?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn synth(args: SynthArgs) -> Result<ExitCode> {
    let text = fs::read_to_string(&args.spec)
        .with_context(|| format!("reading {}", args.spec.display()))?;
    let manifest_text = fs::read_to_string(&args.outputs)
        .with_context(|| format!("reading {}", args.outputs.display()))?;
    let manifest: OutputManifest =
        serde_json::from_str(&manifest_text).context("parsing output manifest")?;

    let mgr = Manager::new();
    let (mut root, vars) = parse_aiger(&mgr, &text, &manifest)?;
    if args.detect_ops {
        root = mgr.detect_ops(root);
    }

    let mut cfg = SynthConfig::default();
    cfg.workers = args.workers.max(1);
    cfg.global_timeout = args.global_timeout.map(Duration::from_secs_f64);
    cfg.cegar_node_timeout = args.cegar_timeout.map(Duration::from_secs_f64);
    cfg.cegar.variant = match args.cegar_variant {
        VariantArg::Exact => CegarVariant::Exact,
        VariantArg::Adequate => CegarVariant::SkolemAdequate,
    };
    cfg.cegar.solver.seed = args.seed;
    let extraction = match args.extract {
        ExtractArg::Gamma => Extraction::Gamma,
        ExtractArg::Delta => Extraction::Delta,
    };
    let order = match args.order {
        OrderArg::Fanin => OrderMode::FaninCount,
        OrderArg::Given => OrderMode::Given,
    };

    let start = Instant::now();
    let res = synthesize(&mgr, root, &vars, &cfg, extraction, order)?;
    let synth_wall = start.elapsed();

    println!(
        "synthesized {} functions from {} nodes in {:.3}s ({} workers, root {})",
        res.skolem.outputs.len(),
        res.stats.total_nodes,
        synth_wall.as_secs_f64(),
        cfg.workers,
        if res.root_exact { "exact" } else { "refined" }
    );
    for (&y, &f) in res.skolem.outputs.iter().zip(&res.skolem.f) {
        let support: Vec<String> = mgr
            .support(f)
            .into_iter()
            .map(|v| mgr.var_name(v))
            .collect();
        println!(
            "  {} <- {} nodes, support {{{}}}",
            mgr.var_name(y),
            mgr.reachable_count(f),
            support.join(", ")
        );
    }

    let named: Vec<(String, FormulaRef)> = res
        .skolem
        .outputs
        .iter()
        .zip(&res.skolem.f)
        .map(|(&y, &f)| (mgr.var_name(y), f))
        .collect();
    let out_path = args
        .out
        .clone()
        .unwrap_or_else(|| args.spec.with_extension("skolem.aag"));
    let doc = write_aiger(&mgr, &res.vars.inputs, &named)?;
    fs::write(&out_path, doc).with_context(|| format!("writing {}", out_path.display()))?;
    let result_manifest = OutputManifest {
        outputs: named.iter().map(|(n, _)| n.clone()).collect(),
        order: None,
    };
    let manifest_path = out_path.with_extension("json");
    fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&result_manifest)? + "\n",
    )
    .with_context(|| format!("writing {}", manifest_path.display()))?;
    println!(
        "wrote {} and {}",
        out_path.display(),
        manifest_path.display()
    );

    if let Some(path) = &args.dump_stats {
        let mut lines = String::new();
        let summary = serde_json::json!({
            "spec": args.spec.display().to_string(),
            "workers": cfg.workers,
            "root_exact": res.root_exact,
            "synth_micros": synth_wall.as_micros() as u64,
            "total_nodes": res.stats.total_nodes,
            "tasks_run": res.stats.tasks_run,
            "requeues": res.stats.requeues,
            "node_timeout_engaged": res.stats.node_timeout_engaged,
            "cegar": res.stats.cegar,
        });
        lines.push_str(&summary.to_string());
        lines.push('\n');
        for node in &res.stats.per_node {
            lines.push_str(&serde_json::to_string(node)?);
            lines.push('\n');
        }
        fs::write(path, lines).with_context(|| format!("writing {}", path.display()))?;
    }

    if !args.verify {
        return Ok(ExitCode::SUCCESS);
    }
    let vstart = Instant::now();
    let report = verify(&mgr, root, &res.vars, &res.skolem, &cfg.cegar.solver);
    match report {
        VerificationReport::Verified => {
            println!("verification: ok ({:.3}s)", vstart.elapsed().as_secs_f64());
            Ok(ExitCode::SUCCESS)
        }
        VerificationReport::Falsified { witness } => {
            let point: Vec<String> = witness
                .iter()
                .map(|(v, b)| format!("{}={}", mgr.var_name(*v), u8::from(*b)))
                .collect();
            eprintln!("verification: failed at {}", point.join(" "));
            Ok(ExitCode::from(2))
        }
        VerificationReport::Unknown { reason } => {
            eprintln!("verification: inconclusive ({reason})");
            Ok(ExitCode::from(2))
        }
    }
}

fn bench(cmd: BenchCmd) -> Result<()> {
    let mgr = Manager::new();
    let (root, vars, default_name): (FormulaRef, VarTable, String) = match &cmd {
        BenchCmd::Factorization { bits, .. } => {
            if !(2..=8).contains(bits) {
                bail!("--bits must lie in 2..=8");
            }
            let (root, vars) = gen_factorization(&mgr, *bits);
            (root, vars, format!("factorization{bits}.aag"))
        }
        BenchCmd::Random {
            seed,
            nodes,
            inputs,
            outputs,
            ..
        } => {
            if *inputs == 0 && *outputs == 0 {
                bail!("the spec needs at least one variable");
            }
            let (root, vars) = gen_random_spec(&mgr, *seed, *nodes, *inputs, *outputs);
            (root, vars, format!("random_s{seed}.aag"))
        }
    };
    let out = match &cmd {
        BenchCmd::Factorization { out, .. } | BenchCmd::Random { out, .. } => out
            .clone()
            .unwrap_or_else(|| PathBuf::from(default_name)),
    };
    let circuit_inputs: Vec<_> = vars.inputs.iter().chain(&vars.outputs).copied().collect();
    let doc = write_aiger(&mgr, &circuit_inputs, &[("phi".into(), root)])?;
    fs::write(&out, doc).with_context(|| format!("writing {}", out.display()))?;
    let manifest = OutputManifest {
        outputs: vars.outputs.iter().map(|&v| mgr.var_name(v)).collect(),
        order: None,
    };
    let manifest_path = out.with_extension("json");
    fs::write(
        &manifest_path,
        serde_json::to_string_pretty(&manifest)? + "\n",
    )
    .with_context(|| format!("writing {}", manifest_path.display()))?;
    println!("wrote {} and {}", out.display(), manifest_path.display());
    Ok(())
}
