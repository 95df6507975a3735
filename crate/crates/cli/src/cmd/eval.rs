use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{anyhow, Context, Result};
use clap::Args;
use rayon::prelude::*;
use serde::Serialize;

use revchain_core::evalgen::{
    aggregate, judge, parse_baseline_reply, prediction_from_outcome, render_baseline_prompt, BaselineMethod,
    EvalReport, RunMetadata, Verdict,
};
use revchain_core::registry::load_dataset;
use revchain_core::resolvers::{ChatMessage, ChatRequest};
use revchain_core::{plan_query, EngineError, TaskInstance};

use crate::config::{EngineFlags, FileConfig, ResolverChoice, RunConfig};
use crate::resolve::ResolverFactory;

#[derive(Args, Debug)]
pub struct EvalArgs {
    #[arg(long)]
    pub dataset: PathBuf,
    /// Output directory for report.json, report.txt, run.json and traces
    #[arg(long, default_value = "eval-out")]
    pub out: PathBuf,
    #[arg(long)]
    pub workers: Option<usize>,
    /// Grade a single-prompt baseline instead of the planner
    #[arg(long, value_name = "zero-shot|few-shot|zero-shot-cot|few-shot-cot")]
    pub baseline: Option<String>,
    /// Row label in the text table; defaults to the strategy or baseline name
    #[arg(long)]
    pub label: Option<String>,
    #[command(flatten)]
    pub engine: EngineFlags,
}

struct InstanceRun {
    verdict: Verdict,
    status: &'static str,
    trace_jsonl: String,
    resolver_calls: usize,
    anomalies: usize,
}

#[derive(Serialize)]
struct RunFile<'a> {
    #[serde(flatten)]
    metadata: &'a RunMetadata,
    method: &'a str,
    skipped_samples: Vec<String>,
    statuses: BTreeMap<&'static str, usize>,
    resolver_calls: usize,
    anomalies: usize,
}

fn unix_now() -> u64 {
    SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0)
}

fn write(dir: &Path, name: &str, text: &str) -> Result<()> {
    let path = dir.join(name);
    std::fs::write(&path, text).with_context(|| format!("writing {}", path.display()))
}

fn plan_one(inst: &TaskInstance, factory: &ResolverFactory, config: &RunConfig) -> Result<InstanceRun> {
    let mut resolver = factory.make(&inst.id, &inst.gold_plans)?;
    let outcome = match plan_query(
        &inst.query,
        &inst.context,
        &inst.pool,
        &mut resolver,
        &config.strategy,
    ) {
        Ok(o) => o,
        Err(EngineError::Resolver { source, trace }) => {
            return Err(anyhow!(
                "instance `{}`: resolver failed after {} events: {source}",
                inst.id,
                trace.len()
            ))
        }
        Err(e) => return Err(anyhow!("instance `{}`: {e}", inst.id)),
    };
    Ok(InstanceRun {
        verdict: judge(&inst.id, &prediction_from_outcome(&outcome), &inst.gold_plans),
        status: outcome.status.label(),
        trace_jsonl: outcome.trace.to_jsonl(Some(&inst.id)),
        resolver_calls: outcome.trace.resolver_calls(),
        anomalies: outcome.trace.anomalies().len(),
    })
}

fn baseline_one(
    inst: &TaskInstance,
    method: BaselineMethod,
    factory: &ResolverFactory,
) -> Result<InstanceRun> {
    let client = factory.chat_client()?;
    let request = ChatRequest {
        model: client.config().model_name.clone(),
        messages: vec![ChatMessage::new("user", render_baseline_prompt(method, inst))],
        temperature: client.config().temperature,
    };
    let reply = client
        .chat(&inst.id, &request)
        .with_context(|| format!("instance `{}`", inst.id))?;
    let prediction = parse_baseline_reply(&reply);
    Ok(InstanceRun {
        verdict: judge(&inst.id, &prediction, &inst.gold_plans),
        status: "baseline",
        trace_jsonl: String::new(),
        resolver_calls: 1,
        anomalies: 0,
    })
}

pub fn run(args: EvalArgs, file: &FileConfig) -> Result<i32> {
    let started = unix_now();
    let config = RunConfig::resolve(&args.engine, file, args.workers)?;
    let baseline = args
        .baseline
        .as_deref()
        .map(|b| b.parse::<BaselineMethod>().map_err(anyhow::Error::msg))
        .transpose()?;
    let loaded = load_dataset(&args.dataset, config.strict)?;
    for s in &loaded.skipped {
        tracing::warn!(id = %s.id, error = %s.error, "skipping sample");
    }
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let request_log = (config.resolver == ResolverChoice::Prompt).then(|| args.out.join("requests.jsonl"));
    let factory = ResolverFactory::build(&config, request_log)?;

    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.workers)
        .build()
        .context("starting worker pool")?;
    let runs: Vec<InstanceRun> = pool.install(|| {
        loaded
            .instances
            .par_iter()
            .map(|inst| match baseline {
                Some(method) => baseline_one(inst, method, &factory),
                None => plan_one(inst, &factory, &config),
            })
            .collect::<Result<Vec<_>>>()
    })?;

    let verdicts: Vec<Verdict> = runs.iter().map(|r| r.verdict.clone()).collect();
    let mut report: EvalReport = aggregate(&verdicts, &loaded.instances);
    let method = match (&args.label, baseline) {
        (Some(l), _) => l.clone(),
        (None, Some(m)) => m.as_str().to_string(),
        (None, None) => config.strategy.mode.as_str().to_string(),
    };
    let metadata = RunMetadata {
        resolver: config.resolver.label(),
        strategy: baseline.map_or_else(
            || config.strategy.mode.as_str().to_string(),
            |m| m.as_str().to_string(),
        ),
        dataset: Some(args.dataset.display().to_string()),
        workers: config.workers,
        started_unix: started,
        finished_unix: unix_now(),
    };
    let mut statuses = BTreeMap::new();
    for r in &runs {
        *statuses.entry(r.status).or_default() += 1;
    }
    let run_file = RunFile {
        metadata: &metadata,
        method: &method,
        skipped_samples: loaded.skipped.iter().map(|s| s.id.clone()).collect(),
        statuses,
        resolver_calls: runs.iter().map(|r| r.resolver_calls).sum(),
        anomalies: runs.iter().map(|r| r.anomalies).sum(),
    };
    report.metadata = Some(metadata.clone());

    let table = report.text_table(&method);
    write(&args.out, "report.json", &report.to_json())?;
    write(&args.out, "report.txt", &table)?;
    write(
        &args.out,
        "run.json",
        &(serde_json::to_string_pretty(&run_file)? + "\n"),
    )?;
    if baseline.is_none() {
        let traces: String = runs.iter().map(|r| r.trace_jsonl.as_str()).collect();
        write(&args.out, "traces.jsonl", &traces)?;
    }
    print!("{table}");
    Ok(0)
}
