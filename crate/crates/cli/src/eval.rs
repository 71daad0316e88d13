use std::fs;
use std::path::PathBuf;

use anyhow::Context;
use clap::Args;
use culprit_core::config::{RunConfig, RunManifest};
use culprit_core::eval::{load_dataset, run_benchmark, EvalConfig};
use culprit_core::synth::{generate_many, SynthParams};
use culprit_core::Stage;

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Directory with one subdirectory per subject.
    #[arg(long)]
    dataset: PathBuf,
    /// TOML run configuration (voting, stages, workers).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory; defaults to the configured one.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    workers: Option<usize>,
    /// Skip the stage-2 and voting-mode ablation rows.
    #[arg(long)]
    no_ablations: bool,
    /// Skip bisection cost simulation.
    #[arg(long)]
    no_costs: bool,
}

pub fn run(args: EvalArgs) -> anyhow::Result<()> {
    let mut cfg = match &args.config {
        Some(p) => RunConfig::load(p).map_err(|e| e.in_stage(Stage::Ingest))?,
        None => RunConfig::default(),
    };
    if let Some(o) = &args.out {
        cfg.paths.out = o.clone();
    }
    if let Some(w) = args.workers {
        cfg.workers = w;
    }
    cfg.validate()?;
    let eval_cfg = EvalConfig {
        voting: cfg.voting,
        select_relevant: cfg.stages.select_relevant,
        ablations: !args.no_ablations,
        costs: !args.no_costs,
        workers: cfg.workers,
    };
    let subjects = load_dataset(&args.dataset).map_err(|e| e.in_stage(Stage::Ingest))?;
    let report = run_benchmark(subjects, &eval_cfg)?;

    let out = &cfg.paths.out;
    fs::create_dir_all(out).with_context(|| format!("creating {}", out.display()))?;
    report.write(out)?;
    let mut manifest = RunManifest::new("eval", &cfg);
    manifest.add_input(&args.dataset)?;
    manifest.write(out)?;

    print!("{}", report.to_csv());
    if let Some(c) = report.costs {
        println!(
            "bisection over {} subjects: weighted {:.2}, standard {:.2}, standard on full history {:.2} (fewer probes in {}, more in {})",
            c.subjects,
            c.mean_weighted,
            c.mean_standard_reduced,
            c.mean_standard_full,
            c.weighted_fewer,
            c.weighted_more
        );
    }
    if let Some(d) = report.dominance {
        if !(d.lower_bound_le_random && d.random_le_method) {
            eprintln!("warning: expected lower-bound <= random <= method in MRR; got {d:?}");
        }
    }
    for f in &report.failures {
        eprintln!("subject {} failed: {}", f.id, f.error);
    }
    eprintln!("results written to {}", out.display());
    Ok(())
}

#[derive(Args, Debug)]
pub struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 20)]
    count: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 60)]
    history: usize,
    #[arg(long, default_value_t = 12)]
    touching: usize,
    #[arg(long, default_value_t = 20)]
    elements: usize,
    #[arg(long, default_value_t = 2.0)]
    recency: f64,
}

pub fn synth(args: SynthArgs) -> anyhow::Result<()> {
    let params = SynthParams {
        history: args.history,
        touching: args.touching,
        elements: args.elements,
        recency: args.recency,
        ..SynthParams::default()
    };
    for s in generate_many("synth", args.count, &params, args.seed)? {
        s.write(&args.out)?;
    }
    eprintln!("{} subjects written to {}", args.count, args.out.display());
    Ok(())
}
