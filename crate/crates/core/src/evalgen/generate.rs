//! Seeded synthetic task generation.
//!
//! Each instance is built around a gold plan of a drawn nesting depth. Every
//! call in the plan is a fresh API whose output type matches the argument it
//! fills; the remaining arguments carry literals that the templated query
//! states exactly once. Unused distractor APIs pad the pool, half of them
//! (by default) returning a type that some gold argument needs.

use std::collections::{BTreeMap, BTreeSet};

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::executor::{Behavior, MockEnv};
use crate::plan::{Binding, PlanNode};
use crate::registry::{ApiPool, ApiSpec, Level, TaskInstance, ValueType};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Category {
    pub name: String,
    /// CamelCase nouns used to build API names.
    pub entities: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct GenConfig {
    pub seed: u64,
    pub instance_count: usize,
    /// Probability of each gold nesting depth, 1 to 5.
    pub depth_distribution: BTreeMap<usize, f64>,
    pub pool_size: (usize, usize),
    pub args_per_api: (usize, usize),
    /// Chance that a distractor returns a type some gold argument takes.
    pub distractor_type_share: f64,
    /// Chance that a spare literal argument of an inner call becomes an
    /// extra one-call branch instead.
    pub branch_probability: f64,
    pub categories: Vec<Category>,
}

impl Default for GenConfig {
    fn default() -> Self {
        GenConfig {
            seed: 0,
            instance_count: 100,
            depth_distribution: default_depth_distribution(),
            pool_size: (5, 12),
            args_per_api: (1, 3),
            distractor_type_share: 0.5,
            branch_probability: 0.25,
            categories: default_categories(),
        }
    }
}

/// Level proportions 798 : 693 : 59, placed at depths 2, 3 and 4.
pub fn default_depth_distribution() -> BTreeMap<usize, f64> {
    let total = 1550.0;
    BTreeMap::from([(2, 798.0 / total), (3, 693.0 / total), (4, 59.0 / total)])
}

pub fn default_categories() -> Vec<Category> {
    let table: [(&str, &[&str]); 20] = [
        (
            "Geocoding",
            &["Direction", "Route", "Distance", "Address", "Coordinates"],
        ),
        ("Weather", &["Weather", "Forecast", "Temperature", "Humidity"]),
        ("Book", &["Book", "Author", "ReadingList", "Chapter"]),
        ("Transportation", &["Flight", "Train", "Ticket", "Seat"]),
        ("Music", &["Song", "Playlist", "Concert", "Album"]),
        ("Food & Drink", &["Restaurant", "Table", "Menu", "Dish"]),
        ("Entertainment", &["Movie", "Showtime", "Cinema", "Play"]),
        ("Shopping", &["Product", "Store", "Price", "Order"]),
        ("Health", &["Exercise", "Hospital", "Doctor", "Appointment"]),
        ("Travel", &["Hotel", "Baggage", "Trip", "Room"]),
        ("Database", &["Inventory", "Record", "Entry", "Table"]),
        ("Calculator", &["Tax", "Calorie", "Cost", "Discount"]),
        ("Email", &["Email", "User", "Message", "Mailbox"]),
        ("Finance", &["Investment", "Account", "Rate", "Loan"]),
        ("Convertor", &["Age", "Unit", "Code", "Hotel"]),
        ("Clothes", &["Outfit", "Clothing", "Size", "Fabric"]),
        ("Time", &["Time", "Event", "Calendar", "Timezone"]),
        ("Activity", &["Activity", "DayOut", "Booking", "Tour"]),
        ("Currency Exchange", &["Currency", "ExchangeRate", "Wallet"]),
        ("Search", &["FuelPrice", "Listing", "Result", "Station"]),
    ];
    table
        .iter()
        .map(|(name, entities)| Category {
            name: name.to_string(),
            entities: entities.iter().map(|e| e.to_string()).collect(),
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
pub enum GenError {
    #[error("invalid generator configuration: {0}")]
    InvalidConfig(String),
    #[error("unsatisfiable generator configuration: {0}")]
    Unsatisfiable(String),
}

impl GenConfig {
    pub fn validate(&self) -> Result<(), GenError> {
        let bad = |m: String| Err(GenError::InvalidConfig(m));
        if self.depth_distribution.is_empty() {
            return bad("depth_distribution is empty".into());
        }
        for (&depth, &p) in &self.depth_distribution {
            if !(1..=5).contains(&depth) {
                return bad(format!("depth {depth} outside 1..=5"));
            }
            if !p.is_finite() || p < 0.0 {
                return bad(format!(
                    "probability {p} for depth {depth} is not a non-negative number"
                ));
            }
        }
        let sum: f64 = self.depth_distribution.values().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return bad(format!("depth probabilities sum to {sum}, not 1"));
        }
        let (pmin, pmax) = self.pool_size;
        if pmin == 0 || pmin > pmax {
            return bad(format!("pool_size range {pmin}..={pmax} is empty or starts at 0"));
        }
        let (amin, amax) = self.args_per_api;
        if amin == 0 || amin > amax || amax > 6 {
            return bad(format!(
                "args_per_api range {amin}..={amax} must lie within 1..=6"
            ));
        }
        for (name, p) in [
            ("distractor_type_share", self.distractor_type_share),
            ("branch_probability", self.branch_probability),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return bad(format!("{name} must lie in [0, 1]"));
            }
        }
        if self.categories.is_empty() || self.categories.iter().any(|c| c.entities.is_empty()) {
            return bad("every category needs at least one entity".into());
        }
        let deepest = self
            .depth_distribution
            .iter()
            .filter(|(_, p)| **p > 0.0)
            .map(|(d, _)| *d)
            .max()
            .unwrap_or(1);
        if pmax < deepest {
            return Err(GenError::Unsatisfiable(format!(
                "depth {deepest} needs at least {deepest} APIs but pool_size is at most {pmax}"
            )));
        }
        Ok(())
    }

    /// Instance counts per depth by largest-remainder apportionment.
    pub fn depth_counts(&self) -> BTreeMap<usize, usize> {
        let n = self.instance_count;
        let mut counts: BTreeMap<usize, usize> = BTreeMap::new();
        let mut remainders = Vec::new();
        for (&d, &p) in &self.depth_distribution {
            let exact = p * n as f64;
            let floor = exact.floor() as usize;
            counts.insert(d, floor);
            remainders.push((exact - floor as f64, d));
        }
        let assigned: usize = counts.values().sum();
        remainders.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
        for (_, d) in remainders.into_iter().take(n.saturating_sub(assigned)) {
            *counts.get_mut(&d).expect("depth present") += 1;
        }
        counts
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenStats {
    pub instances: usize,
    pub per_level: BTreeMap<Level, usize>,
    pub per_depth: BTreeMap<usize, usize>,
    pub average_calls: f64,
    pub average_pool_size: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedCorpus {
    pub instances: Vec<TaskInstance>,
    /// Digest behaviours for every pool API, keyed by instance id.
    pub envs: BTreeMap<String, MockEnv>,
}

impl GeneratedCorpus {
    pub fn stats(&self) -> GenStats {
        let n = self.instances.len();
        let mut per_level: BTreeMap<Level, usize> = Level::ALL.iter().map(|l| (*l, 0)).collect();
        let mut per_depth = BTreeMap::new();
        let mut calls = 0usize;
        let mut pool = 0usize;
        for inst in &self.instances {
            *per_level.entry(inst.level).or_default() += 1;
            *per_depth.entry(inst.depth()).or_default() += 1;
            calls += inst.gold_plans.iter().map(PlanNode::call_count).sum::<usize>();
            pool += inst.pool.len();
        }
        let avg = |x: usize| if n == 0 { 0.0 } else { x as f64 / n as f64 };
        GenStats {
            instances: n,
            per_level,
            per_depth,
            average_calls: avg(calls),
            average_pool_size: avg(pool),
        }
    }

    /// The environments as one JSON object keyed by instance id.
    pub fn envs_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(&self.envs).expect("envs serialize");
        s.push('\n');
        s
    }
}

pub fn generate_tasks(config: &GenConfig) -> Result<GeneratedCorpus, GenError> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut depths: Vec<usize> = config
        .depth_counts()
        .into_iter()
        .flat_map(|(d, c)| std::iter::repeat_n(d, c))
        .collect();
    depths.shuffle(&mut rng);

    let mut instances = Vec::with_capacity(depths.len());
    let mut envs = BTreeMap::new();
    for (index, depth) in depths.into_iter().enumerate() {
        let id = format!("gen-{}-{index:05}", config.seed);
        let (instance, env) = loop {
            if let Some(built) = build_instance(&mut rng, config, &id, depth) {
                break built;
            }
        };
        envs.insert(id, env);
        instances.push(instance);
    }
    Ok(GeneratedCorpus { instances, envs })
}

const VERBS: [&str; 14] = [
    "Get",
    "Find",
    "Search",
    "Lookup",
    "Check",
    "Fetch",
    "Recommend",
    "Estimate",
    "Compute",
    "Reserve",
    "Verify",
    "List",
    "Plan",
    "Select",
];

const STRING_ARGS: [&str; 10] = [
    "city",
    "keyword",
    "location",
    "language",
    "category",
    "title",
    "person_name",
    "country",
    "genre",
    "brand",
];
const INTEGER_ARGS: [&str; 6] = ["quantity", "guests", "year", "duration", "limit", "floor"];
const FLOAT_ARGS: [&str; 5] = ["amount", "budget", "max_price", "weight", "distance"];
const DATE_ARGS: [&str; 4] = ["date", "start_date", "end_date", "deadline"];
const TIME_ARGS: [&str; 3] = ["start_time", "end_time", "arrival_time"];
const ID_PREFIX_ARGS: [&str; 4] = ["account", "member", "voucher", "device"];

const CITIES: [&str; 16] = [
    "Paris", "Oslo", "Lima", "Nairobi", "Seoul", "Lisbon", "Denver", "Hanoi", "Quito", "Dublin", "Cairo",
    "Perth", "Vienna", "Osaka", "Tunis", "Zagreb",
];
const PEOPLE: [&str; 14] = [
    "Alice", "Bruno", "Chen", "Dalia", "Emeka", "Fatima", "Goran", "Hana", "Ivan", "Jonas", "Keiko", "Lucas",
    "Mira", "Nadia",
];
const COUNTRIES: [&str; 10] = [
    "Peru", "Kenya", "Norway", "Chile", "Ghana", "Iceland", "Vietnam", "Portugal", "Canada", "Japan",
];
const LANGUAGES: [&str; 8] = [
    "Spanish", "Swahili", "Korean", "Greek", "Hindi", "Finnish", "Tagalog", "Polish",
];
const WORDS: [&str; 20] = [
    "jazz", "vegan", "hiking", "sci-fi", "linen", "espresso", "orchid", "marble", "comedy", "retro",
    "cobalt", "maple", "saffron", "violin", "tundra", "quartz", "lagoon", "harbor", "meadow", "falcon",
];
const OPENINGS: [&str; 5] = ["Please", "Could you", "I need you to", "Help me", "Can you"];

#[derive(Clone, Copy, PartialEq, Eq)]
enum Role {
    Root,
    Inner,
    Leaf,
}

struct Builder<'a> {
    rng: &'a mut ChaCha8Rng,
    config: &'a GenConfig,
    category: &'a Category,
    used_names: BTreeSet<String>,
    used_arg_names: BTreeSet<String>,
    used_entities: BTreeSet<String>,
    used_values: BTreeSet<String>,
    /// (argument name, value) in plan order, for the query.
    literals: Vec<(String, String)>,
    apis: Vec<ApiSpec>,
    arg_types: BTreeSet<ValueType>,
}

fn snake(camel: &str) -> String {
    let mut out = String::new();
    for (i, c) in camel.chars().enumerate() {
        if c.is_ascii_uppercase() {
            if i > 0 {
                out.push('_');
            }
            out.push(c.to_ascii_lowercase());
        } else {
            out.push(c);
        }
    }
    out
}

fn words(name: &str) -> String {
    snake(name).replace('_', " ")
}

fn human_arg(name: &str) -> String {
    name.replace('_', " ")
}

impl Builder<'_> {
    fn entity(&mut self) -> String {
        let fresh: Vec<&String> = self
            .category
            .entities
            .iter()
            .filter(|e| !self.used_entities.contains(*e))
            .collect();
        let pick = match fresh.choose(self.rng) {
            Some(e) => (*e).clone(),
            None => {
                let all: Vec<&String> = self
                    .config
                    .categories
                    .iter()
                    .flat_map(|c| &c.entities)
                    .filter(|e| !self.used_entities.contains(*e))
                    .collect();
                match all.choose(self.rng) {
                    Some(e) => (*e).clone(),
                    None => format!("Item{}", self.used_entities.len()),
                }
            }
        };
        self.used_entities.insert(pick.clone());
        pick
    }

    fn api_name(&mut self, entity: &str, converter: bool) -> String {
        for attempt in 0.. {
            let base = if converter && attempt == 0 {
                format!("{entity}Name2ID")
            } else {
                let verb = VERBS.choose(self.rng).expect("verbs");
                format!("{verb}{entity}")
            };
            let name = if attempt < 8 {
                base
            } else {
                format!("{base}{attempt}")
            };
            if self.used_names.insert(name.clone()) {
                return name;
            }
        }
        unreachable!()
    }

    fn output_name(entity: &str, ty: ValueType) -> String {
        let e = snake(entity);
        match ty {
            ValueType::Identifier => format!("{e}_ID"),
            ValueType::Integer => format!("{e}_count"),
            ValueType::Float => format!("{e}_amount"),
            ValueType::Date => format!("{e}_date"),
            ValueType::Time => format!("{e}_time"),
            _ => format!("{e}_name"),
        }
    }

    fn literal_type(&mut self) -> ValueType {
        let types = [
            (ValueType::String, 5),
            (ValueType::Integer, 2),
            (ValueType::Float, 1),
            (ValueType::Date, 2),
            (ValueType::Time, 1),
            (ValueType::Identifier, 1),
        ];
        types.choose_weighted(self.rng, |t| t.1).expect("weights").0
    }

    fn chain_type(&mut self) -> ValueType {
        let types = [
            (ValueType::Identifier, 5),
            (ValueType::String, 2),
            (ValueType::Float, 1),
            (ValueType::Integer, 1),
            (ValueType::Date, 1),
        ];
        types.choose_weighted(self.rng, |t| t.1).expect("weights").0
    }

    fn literal_arg_name(&mut self, ty: ValueType) -> String {
        let pool: Vec<String> = match ty {
            ValueType::String => STRING_ARGS.iter().map(|s| s.to_string()).collect(),
            ValueType::Integer => INTEGER_ARGS.iter().map(|s| s.to_string()).collect(),
            ValueType::Float => FLOAT_ARGS.iter().map(|s| s.to_string()).collect(),
            ValueType::Date => DATE_ARGS.iter().map(|s| s.to_string()).collect(),
            ValueType::Time => TIME_ARGS.iter().map(|s| s.to_string()).collect(),
            _ => ID_PREFIX_ARGS.iter().map(|s| format!("{s}_ID")).collect(),
        };
        let fresh: Vec<&String> = pool
            .iter()
            .filter(|n| !self.used_arg_names.contains(*n))
            .collect();
        let name = match fresh.choose(self.rng) {
            Some(n) => (*n).clone(),
            None => {
                let base = pool.choose(self.rng).expect("names").clone();
                (2..)
                    .map(|i| format!("{base}_{i}"))
                    .find(|n| !self.used_arg_names.contains(n))
                    .expect("unbounded")
            }
        };
        self.used_arg_names.insert(name.clone());
        name
    }

    fn literal_value(&mut self, name: &str, ty: ValueType) -> String {
        for _ in 0..200 {
            let v = match ty {
                ValueType::Integer => self.rng.random_range(100..1000).to_string(),
                ValueType::Float => {
                    let whole = self.rng.random_range(2..500);
                    let cents = loop {
                        let c: u32 = self.rng.random_range(1..100);
                        if !c.is_multiple_of(10) {
                            break c;
                        }
                    };
                    format!("{whole}.{cents:02}")
                }
                ValueType::Date => format!(
                    "2024-{:02}-{:02}",
                    self.rng.random_range(1..13),
                    self.rng.random_range(1..29)
                ),
                ValueType::Time => format!(
                    "{:02}:{:02}",
                    self.rng.random_range(6..22),
                    [0, 15, 30, 45].choose(self.rng).expect("minutes")
                ),
                ValueType::Identifier => format!(
                    "{}-{}",
                    ["AC", "MB", "VC", "DV", "RX"].choose(self.rng).expect("prefixes"),
                    self.rng.random_range(1000..10000)
                ),
                _ => {
                    let list: &[&str] = if name.contains("country") {
                        &COUNTRIES
                    } else if name.contains("language") {
                        &LANGUAGES
                    } else if name.contains("city") || name.contains("location") {
                        &CITIES
                    } else if name.contains("person") {
                        &PEOPLE
                    } else {
                        &WORDS
                    };
                    list.choose(self.rng).expect("values").to_string()
                }
            };
            if self.used_values.insert(v.clone()) {
                return v;
            }
        }
        // the value lists are far larger than any plan's literal count
        let v = format!("value-{}", self.used_values.len());
        self.used_values.insert(v.clone());
        v
    }

    /// Builds one gold call at `level` (root = 1) of a plan with the given
    /// depth, returning the node and its output type.
    fn node(
        &mut self,
        role: Role,
        level: usize,
        depth: usize,
        out_ty: ValueType,
        budget: &mut usize,
    ) -> PlanNode {
        let entity = self.entity();
        let converter = out_ty == ValueType::Identifier && role != Role::Root && self.rng.random_bool(0.3);
        let name = self.api_name(&entity, converter);
        let out_name = if role == Role::Root {
            format!("{}_status", snake(&entity))
        } else {
            Self::output_name(&entity, out_ty)
        };
        let verb_phrase = name
            .strip_suffix(&entity)
            .map(|verb| format!("{} the {}", verb.to_lowercase(), words(&entity)))
            .unwrap_or_else(|| format!("turn a {} name into its ID", words(&entity)));
        let mut spec = ApiSpec::new(name.clone(), verb_phrase);
        let mut node = PlanNode::new(name);

        let (amin, amax) = self.config.args_per_api;
        let n_args = self.rng.random_range(amin..=amax);
        let chain_slot = if role == Role::Leaf {
            None
        } else {
            Some(self.rng.random_range(0..n_args))
        };
        for slot in 0..n_args {
            if Some(slot) == chain_slot {
                let ty = self.chain_type();
                let child_role = if level + 1 == depth {
                    Role::Leaf
                } else {
                    Role::Inner
                };
                let child = self.node(child_role, level + 1, depth, ty, budget);
                let arg_name = self.apis.last().expect("child pushed").output.name.clone();
                self.used_arg_names.insert(arg_name.clone());
                let desc = format!("the {}", human_arg(&arg_name));
                spec = spec.arg(arg_name.clone(), desc, ty);
                self.arg_types.insert(ty);
                node = node.with(arg_name, Binding::SubCall(Box::new(child)));
                continue;
            }
            // a spare argument may become a one-call branch if depth allows
            let branch = role != Role::Leaf
                && level < depth
                && *budget > 0
                && self.rng.random_bool(self.config.branch_probability);
            if branch {
                let ty = self.chain_type();
                *budget -= 1;
                let child = self.node(Role::Leaf, level + 1, depth, ty, budget);
                let arg_name = self.apis.last().expect("child pushed").output.name.clone();
                self.used_arg_names.insert(arg_name.clone());
                spec = spec.arg(arg_name.clone(), format!("the {}", human_arg(&arg_name)), ty);
                self.arg_types.insert(ty);
                node = node.with(arg_name, Binding::SubCall(Box::new(child)));
                continue;
            }
            let ty = self.literal_type();
            let arg_name = self.literal_arg_name(ty);
            let value = self.literal_value(&arg_name, ty);
            spec = spec.arg(arg_name.clone(), format!("the {}", human_arg(&arg_name)), ty);
            self.arg_types.insert(ty);
            self.literals.push((arg_name.clone(), value.clone()));
            node = node.with(arg_name, Binding::typed_literal(value, ty));
        }
        let out_desc = format!("the {}", human_arg(&out_name));
        spec = spec.output(
            out_name,
            out_desc,
            if role == Role::Root {
                ValueType::String
            } else {
                out_ty
            },
        );
        self.apis.push(spec);
        node
    }

    fn distractor(&mut self) -> ApiSpec {
        let gold_types: Vec<ValueType> = self.arg_types.iter().copied().collect();
        let ty = if !gold_types.is_empty() && self.rng.random_bool(self.config.distractor_type_share) {
            *gold_types.choose(self.rng).expect("non-empty")
        } else {
            let others: Vec<ValueType> = [
                ValueType::String,
                ValueType::Integer,
                ValueType::Float,
                ValueType::Date,
                ValueType::Time,
                ValueType::Identifier,
                ValueType::Boolean,
            ]
            .into_iter()
            .filter(|t| !gold_types.contains(t))
            .collect();
            others.choose(self.rng).copied().unwrap_or(ValueType::Boolean)
        };
        let entity = self.entity();
        let name = self.api_name(&entity, false);
        let verb = name.strip_suffix(&entity).unwrap_or("get").to_lowercase();
        let n_args = self
            .rng
            .random_range(self.config.args_per_api.0..=self.config.args_per_api.1);
        let mut spec = ApiSpec::new(name, format!("{verb} the {}", words(&entity)));
        let mut taken = BTreeSet::new();
        for _ in 0..n_args {
            let at = self.literal_type();
            let pool: &[&str] = match at {
                ValueType::String => &STRING_ARGS,
                ValueType::Integer => &INTEGER_ARGS,
                ValueType::Float => &FLOAT_ARGS,
                ValueType::Date => &DATE_ARGS,
                ValueType::Time => &TIME_ARGS,
                _ => &ID_PREFIX_ARGS,
            };
            let base = pool.choose(self.rng).expect("names");
            let arg = if at == ValueType::Identifier {
                format!("{base}_ID")
            } else {
                base.to_string()
            };
            if taken.insert(arg.clone()) {
                spec = spec.arg(arg.clone(), format!("the {}", human_arg(&arg)), at);
            }
        }
        let out = Self::output_name(&entity, ty);
        let out_desc = format!("the {}", human_arg(&out));
        spec.output(out, out_desc, ty)
    }
}

fn render_query(rng: &mut ChaCha8Rng, root_description: &str, literals: &[(String, String)]) -> String {
    let opening = OPENINGS.choose(rng).expect("openings");
    let mut q = format!("{opening} {root_description}");
    if literals.is_empty() {
        q.push('.');
        return q;
    }
    let clauses: Vec<String> = literals
        .iter()
        .map(|(name, value)| format!("the {} is {value}", human_arg(name)))
        .collect();
    q.push_str(" where ");
    match clauses.split_last() {
        Some((last, [])) => q.push_str(last),
        Some((last, init)) => {
            q.push_str(&init.join(", "));
            q.push_str(" and ");
            q.push_str(last);
        }
        None => {}
    }
    q.push('.');
    q
}

fn build_instance(
    rng: &mut ChaCha8Rng,
    config: &GenConfig,
    id: &str,
    depth: usize,
) -> Option<(TaskInstance, MockEnv)> {
    let (pmin, pmax) = config.pool_size;
    let pool_size = rng.random_range(pmin.max(depth)..=pmax);
    let category = config.categories.choose(rng).expect("validated non-empty");
    let mut builder = Builder {
        rng,
        config,
        category,
        used_names: BTreeSet::new(),
        used_arg_names: BTreeSet::new(),
        used_entities: BTreeSet::new(),
        used_values: BTreeSet::new(),
        literals: Vec::new(),
        apis: Vec::new(),
        arg_types: BTreeSet::new(),
    };
    // the spine always fits; branches spend whatever pool room is left
    let mut branch_budget = pool_size - depth;
    let root_role = if depth == 1 { Role::Leaf } else { Role::Root };
    let gold = builder.node(root_role, 1, depth, ValueType::String, &mut branch_budget);
    if crate::plan::nesting_depth(&gold) != depth {
        return None;
    }
    while builder.apis.len() < pool_size {
        let d = builder.distractor();
        builder.apis.push(d);
    }

    let root_description = builder
        .apis
        .iter()
        .find(|a| a.name == gold.api_name)
        .map(|a| a.description.clone())
        .expect("root registered");
    let query = render_query(builder.rng, &root_description, &builder.literals);
    for (_, value) in &builder.literals {
        if query.matches(value.as_str()).count() != 1 {
            return None;
        }
    }

    let mut apis = builder.apis;
    apis.shuffle(builder.rng);
    let mut env = MockEnv::new();
    for api in &apis {
        env.register_behavior(api.name.clone(), Behavior::digest(api.output.name.clone()));
    }
    let pool = ApiPool::new(apis);
    if !pool.validate().is_empty() {
        return None;
    }
    Some((TaskInstance::new(id, pool, query, Vec::new(), vec![gold]), env))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::registry::serialize_dataset;

    #[test]
    fn same_seed_same_bytes() {
        let cfg = GenConfig {
            seed: 11,
            instance_count: 40,
            ..Default::default()
        };
        let a = generate_tasks(&cfg).unwrap();
        let b = generate_tasks(&cfg).unwrap();
        assert_eq!(
            serialize_dataset(&a.instances).unwrap(),
            serialize_dataset(&b.instances).unwrap()
        );
        assert_eq!(a.envs_json(), b.envs_json());
        let c = generate_tasks(&GenConfig { seed: 12, ..cfg }).unwrap();
        assert_ne!(
            serialize_dataset(&a.instances).unwrap(),
            serialize_dataset(&c.instances).unwrap()
        );
    }

    #[test]
    fn depth_one_single_call() {
        let cfg = GenConfig {
            seed: 7,
            instance_count: 1,
            depth_distribution: BTreeMap::from([(1, 1.0)]),
            ..Default::default()
        };
        let corpus = generate_tasks(&cfg).unwrap();
        let inst = &corpus.instances[0];
        assert_eq!(inst.gold_plans[0].call_count(), 1);
        assert_eq!(inst.level, Level::L1);
        for (_, _, b) in inst.gold_plans[0].bindings_with_paths() {
            let Binding::Literal { text, .. } = b else {
                panic!("depth 1 has only literals")
            };
            assert_eq!(inst.query.matches(text.as_str()).count(), 1, "{}", inst.query);
        }
    }

    #[test]
    fn apportionment_is_exact() {
        let cfg = GenConfig {
            instance_count: 500,
            ..Default::default()
        };
        let counts = cfg.depth_counts();
        assert_eq!(counts.values().sum::<usize>(), 500);
        assert_eq!(counts[&2], 257);
        assert_eq!(counts[&3], 224);
        assert_eq!(counts[&4], 19);
    }

    #[test]
    fn unsatisfiable_and_invalid_configs() {
        let deep = GenConfig {
            depth_distribution: BTreeMap::from([(5, 1.0)]),
            pool_size: (2, 3),
            ..Default::default()
        };
        assert!(matches!(deep.validate(), Err(GenError::Unsatisfiable(_))));
        let skewed = GenConfig {
            depth_distribution: BTreeMap::from([(2, 0.5), (3, 0.4)]),
            ..Default::default()
        };
        assert!(matches!(skewed.validate(), Err(GenError::InvalidConfig(_))));
    }

    #[test]
    fn gold_edges_are_type_consistent() {
        let corpus = generate_tasks(&GenConfig {
            seed: 3,
            instance_count: 60,
            ..Default::default()
        })
        .unwrap();
        for inst in &corpus.instances {
            assert!(inst.dangling_references().is_empty());
            assert!(inst.pool.validate().is_empty());
            inst.gold_plans[0].visit(&mut |node| {
                let spec = inst.pool.lookup(&node.api_name).unwrap();
                assert_eq!(spec.arguments.len(), node.bindings.len());
                for (arg, b) in &node.bindings {
                    let at = spec.argument(arg).unwrap().value_type;
                    if let Binding::SubCall(child) = b {
                        assert_eq!(inst.pool.lookup(&child.api_name).unwrap().output.value_type, at);
                    }
                }
            });
            assert!(inst.pool.len() >= inst.gold_plans[0].call_count());
        }
    }
}
