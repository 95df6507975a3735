use std::collections::BTreeMap;
use std::io::{BufRead, IsTerminal, Write};
use std::path::PathBuf;

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;

use revchain_core::plan::render_node;
use revchain_core::registry::{load_dataset, load_pool};
use revchain_core::{
    fill_ask_user, parse_call_expr, plan_query, Fact, PlanNode, PlanStatus, PlanningOutcome,
};

use crate::config::{EngineFlags, FileConfig, RunConfig};
use crate::resolve::ResolverFactory;
use crate::trace_fmt::format_trace;

#[derive(Args, Debug)]
pub struct PlanArgs {
    /// The user request; overrides the dataset query
    #[arg(long)]
    pub query: Option<String>,
    /// API pool JSON (array of APIs, or an object with `APIs`)
    #[arg(long)]
    pub pool: Option<PathBuf>,
    /// Gold call expression, required by the oracle resolver
    #[arg(long)]
    pub gold: Option<String>,
    /// Take pool, query, context and gold from a dataset sample
    #[arg(long, conflicts_with = "pool")]
    pub dataset: Option<PathBuf>,
    /// Sample id within --dataset
    #[arg(long)]
    pub instance: Option<String>,
    /// Known fact, repeatable
    #[arg(long = "context", value_name = "KEY=VALUE")]
    pub context: Vec<String>,
    /// Leave ASK_USER placeholders instead of asking on the terminal
    #[arg(long)]
    pub no_interactive: bool,
    /// Write the trace as JSON lines
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
    /// Record prompt-resolver exchanges as JSON lines
    #[arg(long)]
    pub request_log: Option<PathBuf>,
    #[command(flatten)]
    pub engine: EngineFlags,
}

fn show(plan: Option<&PlanNode>) -> String {
    match plan {
        Some(p) => render_node(p).unwrap_or_else(|_| p.to_string()),
        None => "(no plan)".into(),
    }
}

pub fn run(args: PlanArgs, file: &FileConfig) -> Result<i32> {
    let config = RunConfig::resolve(&args.engine, file, None)?;

    let (id, pool, mut query, mut context, mut gold) = match &args.dataset {
        Some(path) => {
            let loaded = load_dataset(path, config.strict)?;
            let inst = match &args.instance {
                Some(id) => loaded
                    .instances
                    .into_iter()
                    .find(|i| &i.id == id)
                    .ok_or_else(|| anyhow!("no sample `{id}` in {}", path.display()))?,
                None if loaded.instances.len() == 1 => loaded.instances.into_iter().next().expect("one"),
                None => bail!(
                    "{} holds several samples; pick one with --instance",
                    path.display()
                ),
            };
            (
                inst.id,
                inst.pool,
                Some(inst.query),
                inst.context,
                inst.gold_plans,
            )
        }
        None => {
            let path = args
                .pool
                .as_ref()
                .ok_or_else(|| anyhow!("give --pool or --dataset"))?;
            let pool = load_pool(path)?;
            (
                args.instance.clone().unwrap_or_else(|| "cli".into()),
                pool,
                None,
                Vec::new(),
                Vec::new(),
            )
        }
    };
    if let Some(q) = args.query {
        query = Some(q);
    }
    let query = query.ok_or_else(|| anyhow!("give --query"))?;
    for kv in &args.context {
        let (k, v) = kv
            .split_once('=')
            .ok_or_else(|| anyhow!("context `{kv}` is not KEY=VALUE"))?;
        context.push(Fact::new(k.trim(), v.trim()));
    }
    if let Some(expr) = &args.gold {
        gold = parse_call_expr(expr).context("parsing --gold")?;
    }

    let factory = ResolverFactory::build(&config, args.request_log.clone())?;
    let mut resolver = factory.make(&id, &gold)?;
    let outcome = plan_query(&query, &context, &pool, &mut resolver, &config.strategy)?;

    eprint!("{}", format_trace(&outcome.trace));
    if let Some(path) = &args.trace_out {
        std::fs::write(path, outcome.trace.to_jsonl(Some(&id)))
            .with_context(|| format!("writing {}", path.display()))?;
    }
    println!("{}", show(outcome.plan.as_ref()));

    let outcome = match outcome.status {
        PlanStatus::NeedsUserInput if !args.no_interactive && std::io::stdin().is_terminal() => {
            let filled = ask_on_terminal(&outcome, config.strict)?;
            println!("{}", show(filled.plan.as_ref()));
            filled
        }
        _ => outcome,
    };
    Ok(match &outcome.status {
        PlanStatus::Complete => 0,
        PlanStatus::NeedsUserInput => {
            for q in outcome.pending_questions() {
                eprintln!("unanswered: {q}");
            }
            2
        }
        PlanStatus::Failed(detail) => {
            eprintln!("planning failed: {detail}");
            1
        }
    })
}

/// One line per question; an empty line leaves the question open.
fn ask_on_terminal(outcome: &PlanningOutcome, strict: bool) -> Result<PlanningOutcome> {
    let stdin = std::io::stdin();
    let mut answers = BTreeMap::new();
    for question in outcome.pending_questions() {
        eprint!("{question} ");
        std::io::stderr().flush()?;
        let mut line = String::new();
        if stdin.lock().read_line(&mut line)? == 0 {
            break;
        }
        let answer = line.trim();
        if !answer.is_empty() {
            answers.insert(question, answer.to_string());
        }
    }
    let (filled, _) = fill_ask_user(outcome, &answers, strict)?;
    Ok(filled)
}
