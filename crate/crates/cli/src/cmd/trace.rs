use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::{Args, Subcommand};

use revchain_core::engine::TraceLine;
use revchain_core::PlanningTrace;

use crate::trace_fmt::format_trace;

#[derive(Subcommand, Debug)]
pub enum TraceCommand {
    /// Print a trace file as a readable listing
    Show(ShowArgs),
}

#[derive(Args, Debug)]
pub struct ShowArgs {
    pub file: PathBuf,
    /// Only this instance of a multi-instance trace
    #[arg(long)]
    pub instance: Option<String>,
}

pub fn run(cmd: TraceCommand) -> Result<i32> {
    let TraceCommand::Show(args) = cmd;
    let text =
        std::fs::read_to_string(&args.file).with_context(|| format!("reading {}", args.file.display()))?;
    let mut sessions: BTreeMap<String, PlanningTrace> = BTreeMap::new();
    let mut order = Vec::new();
    for (n, line) in text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty()) {
        let parsed: TraceLine = serde_json::from_str(line).with_context(|| format!("line {}", n + 1))?;
        let event = parsed.event().with_context(|| format!("line {}", n + 1))?;
        let id = parsed.instance.unwrap_or_default();
        if !sessions.contains_key(&id) {
            order.push(id.clone());
        }
        sessions.entry(id).or_default().push(event);
    }
    if let Some(wanted) = &args.instance {
        if !sessions.contains_key(wanted) {
            bail!("no events for instance `{wanted}`");
        }
        order.retain(|id| id == wanted);
    }
    for id in order {
        if !id.is_empty() {
            println!("[{id}]");
        }
        print!("{}", format_trace(&sessions[&id]));
    }
    Ok(0)
}
