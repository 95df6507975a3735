use std::collections::BTreeMap;
use std::path::PathBuf;

use anyhow::{anyhow, Context, Result};
use clap::Args;
use serde::Serialize;

use revchain_core::evalgen::{generate_tasks, GenConfig, GenStats};
use revchain_core::registry::serialize_dataset;

use crate::config::FileConfig;

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long)]
    pub seed: Option<u64>,
    /// Number of instances
    #[arg(long)]
    pub count: Option<usize>,
    /// Depth probability, repeatable; replaces the default distribution
    #[arg(long = "depth", value_name = "DEPTH=P")]
    pub depth: Vec<String>,
    #[arg(long, value_name = "MIN-MAX")]
    pub pool_size: Option<String>,
    #[arg(long = "args", value_name = "MIN-MAX")]
    pub args_per_api: Option<String>,
    #[arg(long)]
    pub distractor_share: Option<f64>,
    #[arg(long)]
    pub branch_probability: Option<f64>,
    /// Directory for dataset.json, env.json and gen.json
    #[arg(long, default_value = "gen-out")]
    pub out: PathBuf,
}

fn range(s: &str) -> Result<(usize, usize)> {
    let (a, b) = s.split_once(['-', ',']).map_or((s, s), |(a, b)| (a, b));
    Ok((
        a.trim().parse().with_context(|| format!("bad range `{s}`"))?,
        b.trim().parse().with_context(|| format!("bad range `{s}`"))?,
    ))
}

fn depths<'a>(pairs: impl IntoIterator<Item = (&'a str, f64)>) -> Result<BTreeMap<usize, f64>> {
    pairs
        .into_iter()
        .map(|(d, p)| Ok((d.trim().parse().with_context(|| format!("bad depth `{d}`"))?, p)))
        .collect()
}

#[derive(Serialize)]
struct GenFile<'a> {
    config: &'a GenConfig,
    stats: GenStats,
}

pub fn build_config(args: &GenArgs, file: &FileConfig) -> Result<GenConfig> {
    let g = &file.gen;
    let mut config = GenConfig::default();
    if let Some(s) = args.seed.or(g.seed) {
        config.seed = s;
    }
    if let Some(n) = args.count.or(g.count) {
        config.instance_count = n;
    }
    if !args.depth.is_empty() {
        let parsed = args
            .depth
            .iter()
            .map(|kv| {
                let (d, p) = kv
                    .split_once('=')
                    .ok_or_else(|| anyhow!("`{kv}` is not DEPTH=P"))?;
                Ok((
                    d,
                    p.trim()
                        .parse::<f64>()
                        .with_context(|| format!("bad probability in `{kv}`"))?,
                ))
            })
            .collect::<Result<Vec<_>>>()?;
        config.depth_distribution = depths(parsed)?;
    } else if let Some(map) = &g.depth_distribution {
        config.depth_distribution = depths(map.iter().map(|(k, v)| (k.as_str(), *v)))?;
    }
    if let Some(r) = &args.pool_size {
        config.pool_size = range(r)?;
    } else if let Some(r) = g.pool_size {
        config.pool_size = r;
    }
    if let Some(r) = &args.args_per_api {
        config.args_per_api = range(r)?;
    } else if let Some(r) = g.args_per_api {
        config.args_per_api = r;
    }
    if let Some(p) = args.distractor_share.or(g.distractor_type_share) {
        config.distractor_type_share = p;
    }
    if let Some(p) = args.branch_probability.or(g.branch_probability) {
        config.branch_probability = p;
    }
    Ok(config)
}

pub fn run(args: GenArgs, file: &FileConfig) -> Result<i32> {
    let config = build_config(&args, file)?;
    let corpus = generate_tasks(&config)?;
    std::fs::create_dir_all(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    let stats = corpus.stats();
    std::fs::write(
        args.out.join("dataset.json"),
        serialize_dataset(&corpus.instances)?,
    )?;
    std::fs::write(args.out.join("env.json"), corpus.envs_json())?;
    let meta = GenFile {
        config: &config,
        stats: stats.clone(),
    };
    std::fs::write(
        args.out.join("gen.json"),
        serde_json::to_string_pretty(&meta)? + "\n",
    )?;

    let levels: Vec<String> = stats.per_level.iter().map(|(l, n)| format!("{l}={n}")).collect();
    println!(
        "{} instances ({}), {:.2} calls per plan, {:.2} APIs per pool -> {}",
        stats.instances,
        levels.join(", "),
        stats.average_calls,
        stats.average_pool_size,
        args.out.display()
    );
    Ok(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges() {
        assert_eq!(range("3-9").unwrap(), (3, 9));
        assert_eq!(range("4").unwrap(), (4, 4));
        assert!(range("a-b").is_err());
    }
}
