//! `gamlp`: equivalence-class counting, construction checks, walk fitting
//! and community-detection benchmarks from the command line.

mod config;

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::{json, Value};

use gamlp_core::constructions::{self, TreeSpec, DEFAULT_TREE_BUDGET};
use gamlp_core::experiments::{babai_sweep, fit_walk_task, parity_features, WalkTaskConfig};
use gamlp_core::gamlp::{self as ga, EquivMode, LogisticConfig};
use gamlp_core::generators::random_regular;
use gamlp_core::graph::{load_edge_list, load_edge_list_relabel, load_features, GraphCollection, NodeFeatures};
use gamlp_core::operators::{parse_operator_list, OperatorFamily};
use gamlp_core::report::EquivalenceReport;
use gamlp_core::sbm::{self, BenchMethod, BenchParams};
use gamlp_core::scalar::Tower;
use gamlp_core::{wl, Error};

use config::RunConfig;

#[derive(Parser, Debug)]
#[command(name = "gamlp", version, about = "GNN vs graph-augmented MLP expressivity experiments")]
struct Cli {
    /// Write the JSON report here (a CSV table goes next to it); stdout otherwise.
    #[arg(long, global = true)]
    output: Option<PathBuf>,
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Numeric tower for operator families: int, rational or float.
    #[arg(long, global = true, value_parser = parse_tower)]
    tower: Option<Tower>,
    /// Ignore node features and use a single uniform label.
    #[arg(long, global = true)]
    features_removed: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Count WL (GNN) equivalence classes for K' = 0..K.
    WlClasses {
        #[command(flatten)]
        input: GraphInput,
        #[arg(long)]
        k: u32,
    },
    /// Count GA-MLP equivalence classes for an operator family.
    GamlpClasses {
        #[command(flatten)]
        input: GraphInput,
        /// Operator family, e.g. `I,A^1..A^5`.
        #[arg(long)]
        omega: String,
        /// exact, rounded, walk or degree-pair (default: exact, rounded for float).
        #[arg(long)]
        mode: Option<String>,
    },
    /// Regress attributed walk counts with the WL table and ridge readouts.
    FitWalkTask(FitArgs),
    /// Run construction verifiers (all when no name is given).
    Verify { names: Vec<String> },
    /// Exhaustive tree enumeration against the counting bounds.
    Enumerate(EnumArgs),
    /// Stochastic block model benchmarks.
    Sbm {
        #[command(subcommand)]
        command: SbmCommand,
    },
    /// Degree-threshold identifier vs degree-pair fingerprint on random graphs.
    Babai {
        #[arg(long, default_value_t = 30)]
        n: usize,
        #[arg(long, default_value_t = 500)]
        graphs: usize,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
    },
    /// Named constructions.
    Constructions {
        #[command(subcommand)]
        command: ConstructionsCommand,
    },
}

#[derive(Args, Debug)]
struct GraphInput {
    /// Edge-list files or directories of edge-list files.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// `node label` lines for a single input graph.
    #[arg(long)]
    features: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = ScopeArg::Node)]
    scope: ScopeArg,
    /// Node ids are arbitrary tokens; assign dense ids in order of appearance.
    #[arg(long)]
    relabel: bool,
}

#[derive(ValueEnum, Clone, Copy, Debug, PartialEq)]
enum ScopeArg {
    Node,
    Graph,
}

#[derive(Args, Debug)]
struct FitArgs {
    /// Edge list to use; a random regular graph is generated otherwise.
    #[arg(long)]
    graph: Option<PathBuf>,
    #[arg(long, default_value_t = 1000)]
    rrg_n: usize,
    #[arg(long, default_value_t = 6)]
    rrg_d: usize,
    /// Walk length; the target counts all-blue walks.
    #[arg(long, default_value_t = 4)]
    length: usize,
    /// Explicit feature tuple such as `1,0,1`, overriding `--length`.
    #[arg(long, value_delimiter = ',')]
    tuple: Option<Vec<u32>>,
    #[arg(long, default_value_t = 300)]
    train: usize,
    #[arg(long, default_value_t = 1e-6)]
    lambda: f64,
}

#[derive(Args, Debug)]
struct EnumArgs {
    #[arg(long)]
    m: usize,
    #[arg(long)]
    k: usize,
    /// Level profile `q_0,...,q_K` of feature-0 counts (full m-ary trees).
    #[arg(long, value_delimiter = ',')]
    q: Option<Vec<u64>>,
    /// Enumerate every profile with 2^k − 2^(k−2) ≤ q_k ≤ m^k/2 for k ≥ 2.
    #[arg(long)]
    lemma2: bool,
    /// Full m-ary trees instead of aggregation trees.
    #[arg(long)]
    full: bool,
    #[arg(long, default_value_t = DEFAULT_TREE_BUDGET)]
    budget: u64,
}

#[derive(Subcommand, Debug)]
enum SbmCommand {
    /// Overlap over several seeds; Bethe-Hessian clustering unless `--omega` is given.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[arg(long, default_value_t = 1000)]
    n: usize,
    #[arg(long)]
    a: Option<f64>,
    #[arg(long)]
    b: Option<f64>,
    /// Named (a, b) setting, e.g. `snr-2.08`.
    #[arg(long)]
    preset: Option<String>,
    /// Number of seeds, starting at `--seed`.
    #[arg(long, default_value_t = 10)]
    seeds: u64,
    /// Base operator for GA-MLP features, e.g. `A` or `BH(8,auto)`.
    #[arg(long)]
    omega: Option<String>,
    /// Largest power of the base operator.
    #[arg(long, default_value_t = 30)]
    k: u32,
    #[arg(long, default_value_t = 8.0)]
    kappa: f64,
    #[arg(long)]
    no_normalize: bool,
    #[arg(long, default_value_t = 0.5)]
    train_frac: f64,
    #[arg(long, default_value_t = 0.1)]
    lr: f64,
    #[arg(long, default_value_t = 500)]
    epochs: usize,
    #[arg(long, default_value_t = 1e-4)]
    l2: f64,
}

#[derive(Subcommand, Debug)]
enum ConstructionsCommand {
    List,
    Verify { name: String },
}

fn parse_tower(s: &str) -> Result<Tower, String> {
    s.parse::<Tower>().map_err(|e| e.to_string())
}

/// Command outcome that maps to a non-zero exit code.
#[derive(Debug)]
enum Failure {
    /// Bad usage or unreadable input (exit 2).
    Input(String),
    /// A check ran and did not hold (exit 1).
    Check(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::NoConvergence { .. } | Error::NonFiniteLoss { .. } | Error::Singular(_) => Failure::Check(e.to_string()),
            _ => Failure::Input(e.to_string()),
        }
    }
}

type CmdResult = Result<Output, Failure>;

/// JSON payload, optional CSV table, and whether every check passed.
struct Output {
    report: Value,
    csv: Option<String>,
    passed: bool,
}

impl Output {
    fn ok(report: impl Serialize, csv: Option<String>) -> Output {
        Output { report: serde_json::to_value(report).expect("reports serialize"), csv, passed: true }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Input(format!("cannot read {}: {e}", path.display())))
}

fn expand_inputs(paths: &[PathBuf]) -> Result<Vec<PathBuf>, Failure> {
    let mut files = Vec::new();
    for p in paths {
        let meta = fs::metadata(p).map_err(|e| Failure::Input(format!("cannot read {}: {e}", p.display())))?;
        if meta.is_dir() {
            let mut entries: Vec<PathBuf> = fs::read_dir(p)
                .map_err(|e| Failure::Input(format!("cannot list {}: {e}", p.display())))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|e| e.is_file())
                .collect();
            entries.sort();
            files.extend(entries);
        } else {
            files.push(p.clone());
        }
    }
    Ok(files)
}

fn with_path(path: &Path, e: Error) -> Failure {
    Failure::Input(format!("{}: {e}", path.display()))
}

fn load_collection(input: &GraphInput, features_removed: bool) -> Result<GraphCollection, Failure> {
    let files = expand_inputs(&input.inputs)?;
    if files.is_empty() {
        return Err(Failure::Input("no input graphs".into()));
    }
    if input.features.is_some() && files.len() != 1 {
        return Err(Failure::Input("--features needs exactly one input graph".into()));
    }
    let mut c = GraphCollection::new();
    for file in &files {
        let text = read(file)?;
        let g = if input.relabel {
            load_edge_list_relabel(&text).map(|(g, _)| g)
        } else {
            load_edge_list(&text)
        }
        .map_err(|e| with_path(file, e))?;
        let features = match (&input.features, features_removed) {
            (Some(path), false) => Some(load_features(&read(path)?, g.n()).map_err(|e| with_path(path, e))?),
            _ => None,
        };
        c.push(file.display().to_string(), g, features)?;
    }
    Ok(c)
}

fn report_csv(r: &EquivalenceReport) -> String {
    let mut s = String::from("k,classes\n");
    for c in &r.per_k {
        let _ = writeln!(s, "{},{}", c.k, c.classes);
    }
    s
}

fn input_config(cfg: &mut RunConfig, input: &GraphInput) {
    cfg.inputs = input.inputs.clone();
    cfg.set("scope", format!("{:?}", input.scope).to_lowercase());
    if let Some(f) = &input.features {
        cfg.set("features", f.display());
    }
    if input.relabel {
        cfg.set("relabel", true);
    }
}

fn cmd_wl_classes(input: &GraphInput, k: u32, cli: &Cli, cfg: &mut RunConfig) -> CmdResult {
    input_config(cfg, input);
    cfg.k = Some(k);
    let c = load_collection(input, cli.features_removed)?;
    let r = match input.scope {
        ScopeArg::Node => wl::count_node_classes(&c, k as usize),
        ScopeArg::Graph => wl::count_graph_classes(&c, k as usize),
    };
    Ok(Output::ok(&r, Some(report_csv(&r))))
}

fn cmd_gamlp_classes(input: &GraphInput, omega: &str, mode: Option<&str>, cli: &Cli, cfg: &mut RunConfig) -> CmdResult {
    input_config(cfg, input);
    cfg.omega = Some(omega.into());
    let members = parse_operator_list(omega)?;
    let family = match cli.tower {
        Some(t) => OperatorFamily::new(members, t)?,
        None => OperatorFamily::exact_or_float(members)?,
    };
    cfg.tower = Some(family.tower().name().into());
    let mode: EquivMode = match mode {
        Some(m) => m.parse().map_err(Failure::Input)?,
        None if family.tower() == Tower::Float => EquivMode::RoundedFeatures,
        None => EquivMode::ExactFeatures,
    };
    cfg.set("mode", mode.name());
    let c = load_collection(input, cli.features_removed)?;
    let r = match input.scope {
        ScopeArg::Node => ga::count_node_classes(&c, &family, mode)?,
        ScopeArg::Graph => ga::count_graph_classes(&c, &family, mode)?,
    };
    Ok(Output::ok(&r, Some(report_csv(&r))))
}

fn cmd_fit_walk_task(args: &FitArgs, cli: &Cli, cfg: &mut RunConfig) -> CmdResult {
    let tuple = args.tuple.clone().unwrap_or_else(|| vec![1; args.length]);
    if tuple.is_empty() {
        return Err(Failure::Input("walk length must be at least 1".into()));
    }
    let g = match &args.graph {
        Some(path) => {
            cfg.inputs = vec![path.clone()];
            load_edge_list(&read(path)?).map_err(|e| with_path(path, e))?
        }
        None => {
            cfg.set("rrg_n", args.rrg_n);
            cfg.set("rrg_d", args.rrg_d);
            random_regular(args.rrg_n, args.rrg_d, &mut ChaCha8Rng::seed_from_u64(cli.seed))?
        }
    };
    cfg.seeds = vec![cli.seed];
    cfg.k = Some(tuple.len() as u32);
    cfg.set("tuple", tuple.iter().map(ToString::to_string).collect::<Vec<_>>().join(","));
    cfg.set("train", args.train);
    cfg.set("lambda", args.lambda);
    let f = if cli.features_removed { NodeFeatures::uniform(g.n()) } else { parity_features(g.n()) };
    let r = fit_walk_task(&g, &f, &tuple, WalkTaskConfig { train: args.train, seed: cli.seed, lambda: args.lambda })?;
    let mut csv = String::from("method,train_nmse,test_nmse\n");
    for m in &r.methods {
        let _ = writeln!(csv, "{},{},{}", m.method, m.train_nmse, m.test_nmse);
    }
    Ok(Output::ok(&r, Some(csv)))
}

fn run_verifiers(names: &[String]) -> CmdResult {
    let names: Vec<String> = if names.is_empty() {
        constructions::NAMES.iter().map(|s| s.to_string()).collect()
    } else {
        names.to_vec()
    };
    let mut results = Vec::new();
    for name in &names {
        let v = constructions::verify(name)?;
        for c in v.checks.iter().filter(|c| !c.passed) {
            eprintln!("{name}: FAILED {} {}", c.description, c.detail);
        }
        results.push(v);
    }
    let passed = results.iter().all(|v| v.passed);
    let mut csv = String::from("construction,passed\n");
    for v in &results {
        let _ = writeln!(csv, "{},{}", v.name, v.passed);
    }
    Ok(Output { passed, ..Output::ok(&results, Some(csv)) })
}

fn cmd_enumerate(args: &EnumArgs, cfg: &mut RunConfig) -> CmdResult {
    cfg.k = Some(args.k as u32);
    cfg.set("m", args.m);
    cfg.set("budget", args.budget);
    let reports = if args.lemma2 {
        cfg.set("lemma2", true);
        constructions::lemma2_tuples(args.m, args.k)
            .into_iter()
            .map(|q| constructions::enumerate_full_mary(&TreeSpec { m: args.m, k: args.k, q: Some(q) }))
            .collect::<Result<Vec<_>, _>>()?
    } else if args.full || args.q.is_some() {
        if let Some(q) = &args.q {
            cfg.set("q", q.iter().map(ToString::to_string).collect::<Vec<_>>().join(","));
        }
        cfg.set("full", true);
        let spec = TreeSpec { m: args.m, k: args.k, q: args.q.clone() };
        spec.validate()?;
        vec![constructions::enumerate_full_mary(&spec)?]
    } else {
        vec![constructions::enumerate_agg_trees(args.m, args.k, args.budget)?.0]
    };
    let passed = reports.iter().all(|r| r.satisfied);
    let mut csv = String::from("m,K,q,count,bound,satisfied\n");
    for r in &reports {
        let q = r.q.as_ref().map(|q| q.iter().map(ToString::to_string).collect::<Vec<_>>().join(" ")).unwrap_or_default();
        let _ = writeln!(csv, "{},{},{},{},{},{}", r.m, r.k, q, r.count, r.bound, r.satisfied);
    }
    let report = if reports.len() == 1 && !args.lemma2 { json!(reports[0]) } else { json!(reports) };
    Ok(Output { passed, ..Output::ok(report, Some(csv)) })
}

fn cmd_sbm_bench(args: &BenchArgs, cli: &Cli, cfg: &mut RunConfig) -> CmdResult {
    let (a, b) = match (&args.preset, args.a, args.b) {
        (Some(p), None, None) => sbm::preset(p)?,
        (None, Some(a), Some(b)) => (a, b),
        _ => return Err(Failure::Input("give either --preset or both --a and --b".into())),
    };
    let seeds: Vec<u64> = (cli.seed..cli.seed + args.seeds).collect();
    cfg.seeds = seeds.clone();
    cfg.set("n", args.n);
    cfg.set("a", a);
    cfg.set("b", b);
    let method = match &args.omega {
        None => {
            cfg.set("kappa", args.kappa);
            BenchMethod::BetheHessian { kappa: args.kappa }
        }
        Some(base) => {
            let family = sbm::power_family(base, args.k)?;
            cfg.omega = Some(family.text());
            cfg.k = Some(args.k);
            cfg.normalize = !args.no_normalize;
            cfg.tower = Some(Tower::Float.name().into());
            cfg.set("train_frac", args.train_frac);
            cfg.set("lr", args.lr);
            cfg.set("epochs", args.epochs);
            cfg.set("l2", args.l2);
            BenchMethod::Gamlp {
                omega: family.text(),
                normalize: !args.no_normalize,
                train_frac: args.train_frac,
                logistic: LogisticConfig { lr: args.lr, epochs: args.epochs, l2: args.l2 },
            }
        }
    };
    let r = sbm::bench(BenchParams { n: args.n, a, b, seeds }, method)?;
    let mut csv = String::from("seed,overlap\n");
    for (s, o) in r.params.seeds.iter().zip(&r.per_seed) {
        let _ = writeln!(csv, "{s},{o}");
    }
    Ok(Output::ok(&r, Some(csv)))
}

fn cmd_babai(n: usize, graphs: usize, p: f64, cli: &Cli, cfg: &mut RunConfig) -> CmdResult {
    cfg.seeds = vec![cli.seed];
    cfg.set("n", n);
    cfg.set("graphs", graphs);
    cfg.set("p", p);
    let r = babai_sweep(n, graphs, p, cli.seed)?;
    let passed = r.violations == 0;
    Ok(Output { passed, ..Output::ok(&r, None) })
}

fn cmd_list() -> CmdResult {
    let items: Vec<Value> = constructions::NAMES
        .iter()
        .map(|name| {
            let c = constructions::build(name)?;
            let members: Vec<Value> = c
                .members
                .iter()
                .map(|m| json!({"label": m.label, "nodes": m.graph.n(), "edges": m.graph.edge_count()}))
                .collect();
            Ok(json!({"name": name, "members": members}))
        })
        .collect::<Result<_, Error>>()?;
    Ok(Output::ok(items, None))
}

fn dispatch(cli: &Cli, cfg: &mut RunConfig) -> CmdResult {
    match &cli.command {
        Command::WlClasses { input, k } => cmd_wl_classes(input, *k, cli, cfg),
        Command::GamlpClasses { input, omega, mode } => cmd_gamlp_classes(input, omega, mode.as_deref(), cli, cfg),
        Command::FitWalkTask(args) => cmd_fit_walk_task(args, cli, cfg),
        Command::Verify { names } => {
            cfg.set("names", names.join(","));
            run_verifiers(names)
        }
        Command::Enumerate(args) => cmd_enumerate(args, cfg),
        Command::Sbm { command: SbmCommand::Bench(args) } => cmd_sbm_bench(args, cli, cfg),
        Command::Babai { n, graphs, p } => cmd_babai(*n, *graphs, *p, cli, cfg),
        Command::Constructions { command: ConstructionsCommand::List } => cmd_list(),
        Command::Constructions { command: ConstructionsCommand::Verify { name } } => {
            cfg.set("names", name);
            run_verifiers(std::slice::from_ref(name))
        }
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::WlClasses { .. } => "wl-classes",
        Command::GamlpClasses { .. } => "gamlp-classes",
        Command::FitWalkTask(_) => "fit-walk-task",
        Command::Verify { .. } => "verify",
        Command::Enumerate(_) => "enumerate",
        Command::Sbm { .. } => "sbm bench",
        Command::Babai { .. } => "babai",
        Command::Constructions { command: ConstructionsCommand::List } => "constructions list",
        Command::Constructions { .. } => "constructions verify",
    }
}

fn emit(cfg: &RunConfig, out: &Output) -> Result<(), Failure> {
    let doc = json!({"config": cfg.to_string(), "report": out.report});
    let text = serde_json::to_string_pretty(&doc).expect("values serialize") + "\n";
    match &cfg.output {
        Some(path) => {
            let write = |p: &Path, s: &str| fs::write(p, s).map_err(|e| Failure::Input(format!("cannot write {}: {e}", p.display())));
            write(path, &text)?;
            if let Some(csv) = &out.csv {
                write(&path.with_extension("csv"), csv)?;
            }
        }
        None => print!("{text}"),
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<bool, Failure> {
    if let Some(t) = cli.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .map_err(|e| Failure::Input(format!("thread pool: {e}")))?;
    }
    let mut cfg = RunConfig::new(command_name(&cli.command));
    cfg.output = cli.output.clone();
    cfg.features_removed = cli.features_removed;
    if let Some(t) = cli.tower {
        cfg.tower = Some(t.name().into());
    }
    let out = dispatch(cli, &mut cfg)?;
    emit(&cfg, &out)?;
    Ok(out.passed)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Check(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Input(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}
