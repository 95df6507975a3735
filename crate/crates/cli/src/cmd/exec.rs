use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use clap::Args;

use revchain_core::executor::CallRecord;
use revchain_core::{execute, parse_call_expr, MockEnv};

#[derive(Args, Debug)]
pub struct ExecArgs {
    /// Call expression to run
    pub plan: String,
    /// Mock environment JSON, or an object of environments keyed by instance id
    #[arg(long)]
    pub env: PathBuf,
    /// Instance whose environment to use from a keyed file
    #[arg(long)]
    pub instance: Option<String>,
    /// Print the result as JSON
    #[arg(long)]
    pub json: bool,
}

pub fn load_env(path: &Path, instance: Option<&str>) -> Result<MockEnv> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    if let Ok(env) = MockEnv::from_json(&text) {
        return Ok(env);
    }
    let mut keyed: BTreeMap<String, MockEnv> = serde_json::from_str(&text)
        .with_context(|| format!("{} is not a mock environment", path.display()))?;
    match instance {
        Some(id) => keyed
            .remove(id)
            .ok_or_else(|| anyhow!("{} has no environment for `{id}`", path.display())),
        None if keyed.len() == 1 => Ok(keyed.into_values().next().expect("one")),
        None => bail!(
            "{} holds several environments; pick one with --instance",
            path.display()
        ),
    }
}

fn call_line(record: &CallRecord) -> String {
    let args: Vec<String> = record
        .args
        .iter()
        .map(|(k, v)| format!("{k}='{}'", v.replace('\\', "\\\\").replace('\'', "\\'")))
        .collect();
    format!("{}({})", record.api_name, args.join(", "))
}

pub fn run(args: ExecArgs) -> Result<i32> {
    let roots = parse_call_expr(&args.plan).context("parsing plan")?;
    let env = load_env(&args.env, args.instance.as_deref())?;
    let mut results = Vec::new();
    for root in &roots {
        match execute(root, &env) {
            Ok(r) => results.push(r),
            Err(e) => {
                for c in &e.calls {
                    eprintln!("{:>3}. {} -> {}", c.order_index + 1, call_line(c), c.output);
                }
                bail!("{e}");
            }
        }
    }
    if args.json {
        println!("{}", serde_json::to_string_pretty(&results)?);
        return Ok(0);
    }
    for result in &results {
        for c in &result.calls {
            println!("{:>3}. {} -> {}", c.order_index + 1, call_line(c), c.output);
        }
        println!("result: {}", result.output);
    }
    Ok(0)
}
