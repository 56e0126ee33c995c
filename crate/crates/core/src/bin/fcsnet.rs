use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use fcsnet::coselnet::{
    build_selection_matrix, graph_from_counts, coselection_counts, greedy_communities,
    parse_cos_grid, parse_occ_grid, save_sweep_tsv, threshold_sweep, CommunitySet,
};
use fcsnet::crs::{compute_crs, evaluate_crs, write_evaluation_tsv, CrsMatrix};
use fcsnet::dataio::{load_dataset, DatasetFormat, GenotypeDataset};
use fcsnet::gasel::run_batch;
use fcsnet::mlcore::ModelKind;
use fcsnet::pipeline::{
    feature_universe, overfit, read_subsets_jsonl, repro_sim, write_subsets_jsonl,
    OverfitOptions, PipelineConfig, Provenance, Scale, SubsetRecord,
};
use fcsnet::seed::{stage_seed, Stage};
use fcsnet::subtype::{cut_tree, summarize_clusters, ward_dendrogram, within_ss_curve, WardVariant};
use fcsnet::synthgen::{generate, make_xor_model, ModelEcho, SynthConfig};
use fcsnet::{Error, Result};

/// Feature co-selection networks from GA wrapper feature selection.
#[derive(Parser)]
#[command(name = "fcsnet", version, about)]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// JSON configuration file (sections: seed, ga, ml, network, crs).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads; defaults to all cores. Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// More log output (repeatable).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a case-control dataset with a planted two-locus interaction.
    Synth(SynthArgs),
    /// Run independent GA feature-selection runs and write their best subsets.
    Select(SelectArgs),
    /// Build the co-selection network and detect communities.
    Network(NetworkArgs),
    /// Compute community risk scores for a target dataset.
    Crs(CrsArgs),
    /// Per-community AUC and t-test of a risk-score table.
    CrsEval(CrsEvalArgs),
    /// Ward clustering of individuals in risk-score space.
    Subtype(SubtypeArgs),
    /// Holdout overfitting check of the full pipeline.
    Overfit(OverfitArgs),
    /// Simulation study with both fitness kinds.
    ReproSim(ReproSimArgs),
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 0.4)]
    heritability: f64,
    /// Minor allele frequency of both functional loci.
    #[arg(long, default_value_t = 0.5)]
    maf: f64,
    #[arg(long, default_value_t = 400)]
    cases: usize,
    #[arg(long, default_value_t = 400)]
    controls: usize,
    /// Total feature count, functional loci included.
    #[arg(long, default_value_t = 100)]
    features: usize,
    #[arg(long, default_value_t = 0.05)]
    noise_maf_min: f64,
    #[arg(long, default_value_t = 0.5)]
    noise_maf_max: f64,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ModelArg {
    Lr,
    Dt,
    Rf,
}

impl ModelArg {
    fn name(self) -> &'static str {
        match self {
            ModelArg::Lr => "lr",
            ModelArg::Dt => "dt",
            ModelArg::Rf => "rf",
        }
    }
}

#[derive(Args)]
struct SelectArgs {
    #[arg(long)]
    data: PathBuf,
    /// Number of independent GA runs.
    #[arg(long, default_value_t = 1000)]
    runs: usize,
    /// Fitness model; defaults to the configured `ga.fitness_kind`.
    #[arg(long, value_enum)]
    fitness: Option<ModelArg>,
    /// Population size [default: 200]
    #[arg(long)]
    pop_size: Option<usize>,
    /// Generations [default: 50]
    #[arg(long)]
    ngen: Option<usize>,
    /// Tournament size [default: 3]
    #[arg(long)]
    tour_size: Option<usize>,
    /// Crossover probability [default: 0.5]
    #[arg(long)]
    cxpb: Option<f64>,
    /// Mutation probability [default: 0.2]
    #[arg(long)]
    mutpb: Option<f64>,
    /// Maximum subset size [default: 5]
    #[arg(long)]
    size_limit: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// JSONL output, one best subset per line.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct NetworkArgs {
    #[arg(long)]
    subsets: PathBuf,
    /// Dataset whose column order fixes node order; otherwise first appearance.
    #[arg(long)]
    data: Option<PathBuf>,
    /// Minimum co-occurrence [default: 5]
    #[arg(long)]
    tau_occ: Option<u64>,
    /// Minimum cosine similarity [default: 0.09]
    #[arg(long)]
    tau_cos: Option<f64>,
    /// Edge list TSV.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    communities: PathBuf,
    /// Directory for one feature-id list per community.
    #[arg(long)]
    lists_dir: Option<PathBuf>,
    /// Threshold grids, e.g. `occ=1..10 cos=0.00..0.20:0.01`.
    #[arg(long, num_args = 1..)]
    sweep: Vec<String>,
    #[arg(long)]
    sweep_out: Option<PathBuf>,
}

#[derive(Args)]
struct CrsArgs {
    #[arg(long)]
    train: PathBuf,
    #[arg(long)]
    target: PathBuf,
    #[arg(long)]
    communities: PathBuf,
    /// Model kinds; defaults to the configured list (lr, dt, rf). With more
    /// than one, each output name gets a `.<model>` infix.
    #[arg(long, value_enum, value_delimiter = ',')]
    model: Vec<ModelArg>,
    /// Resampling runs [default: 1000]
    #[arg(long)]
    resamples: Option<usize>,
    /// Training fraction per resample [default: 0.8]
    #[arg(long)]
    fraction: Option<f64>,
    /// Smallest community scored [default: 3]
    #[arg(long)]
    min_size: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CrsEvalArgs {
    /// Score table with a `label` column.
    #[arg(long)]
    crs: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum VariantArg {
    D,
    D2,
    DUnsquared,
}

#[derive(Args)]
struct SubtypeArgs {
    #[arg(long)]
    crs: PathBuf,
    /// Cluster only rows with label 1.
    #[arg(long)]
    cases_only: bool,
    #[arg(long, default_value_t = 4)]
    k: usize,
    #[arg(long, value_enum, default_value = "d")]
    variant: VariantArg,
    /// Cluster assignment TSV.
    #[arg(long)]
    out: PathBuf,
    /// Tidy per-cluster summary TSV.
    #[arg(long)]
    summary: Option<PathBuf>,
    /// Merge list TSV.
    #[arg(long)]
    dendrogram: Option<PathBuf>,
    /// Within-cluster sum of squares for k = 2..10.
    #[arg(long)]
    ss_out: Option<PathBuf>,
}

#[derive(Args)]
struct OverfitArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long, default_value_t = 1000)]
    runs: usize,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    #[arg(long)]
    seed: Option<u64>,
    /// JSON report.
    #[arg(long)]
    out: PathBuf,
    /// Evaluation table TSV.
    #[arg(long)]
    tsv: Option<PathBuf>,
}

#[derive(Args)]
struct ReproSimArgs {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value = "desk")]
    scale: String,
    /// JSON report; the summary goes to stdout.
    #[arg(long)]
    out: PathBuf,
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<()> {
    std::fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    write_file(path, text.as_bytes())
}

fn load(path: &Path) -> Result<GenotypeDataset> {
    load_dataset(path, DatasetFormat::Tsv)
}

struct Ctx {
    config: PipelineConfig,
    config_path: Option<PathBuf>,
}

impl Ctx {
    fn provenance(&self, command: &str, inputs: &[&Path], outputs: &[&Path]) -> Result<()> {
        let mut all: Vec<&Path> = self.config_path.iter().map(PathBuf::as_path).collect();
        all.extend_from_slice(inputs);
        let p = Provenance::new(command, self.config.sha256(), self.config.seed, &all)?;
        for o in outputs {
            p.write_for(o)?;
        }
        Ok(())
    }
}

fn synth(ctx: &Ctx, a: &SynthArgs) -> Result<()> {
    if a.features < 2 {
        return Err(Error::Parameter {
            name: "features",
            message: "must be at least 2".into(),
        });
    }
    let model = make_xor_model(a.heritability, a.maf)?;
    let cfg = SynthConfig {
        n_cases: a.cases,
        n_controls: a.controls,
        n_noise_features: a.features - 2,
        noise_maf_range: (a.noise_maf_min, a.noise_maf_max),
        seed: stage_seed(ctx.config.seed, Stage::Synth),
        functional_positions: None,
    };
    let out = generate(&model, &cfg)?;
    out.dataset.save_tsv(&a.out)?;
    let echo_path = with_suffix(&a.out, ".model.json");
    write_json(&echo_path, &ModelEcho::new(&model, &cfg, &out)?)?;
    ctx.provenance("synth", &[], &[&a.out, &echo_path])
}

fn with_suffix(path: &Path, suffix: &str) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(suffix);
    path.with_file_name(name)
}

/// `crs.tsv` + `dt` -> `crs.dt.tsv`
fn with_infix(path: &Path, infix: &str) -> PathBuf {
    let stem = path.file_stem().unwrap_or_default().to_string_lossy();
    let name = match path.extension() {
        Some(ext) => format!("{}.{}.{}", stem, infix, ext.to_string_lossy()),
        None => format!("{}.{}", stem, infix),
    };
    path.with_file_name(name)
}

fn select(ctx: &Ctx, a: &SelectArgs) -> Result<()> {
    let data = load(&a.data)?;
    let cfg = &ctx.config.ga;
    let seed = stage_seed(ctx.config.seed, Stage::Select);
    let results = run_batch(&data, cfg, a.runs, seed)?;
    let records: Vec<SubsetRecord> = results
        .iter()
        .enumerate()
        .map(|(i, r)| SubsetRecord::from_run(i, r, &data))
        .collect();
    let mut buf = Vec::new();
    write_subsets_jsonl(&records, &mut buf)?;
    write_file(&a.out, &buf)?;
    ctx.provenance("select", &[&a.data], &[&a.out])
}

fn network(ctx: &Ctx, a: &NetworkArgs) -> Result<()> {
    let records = read_subsets_jsonl(&a.subsets)?;
    let mut inputs: Vec<&Path> = vec![&a.subsets];
    let ids = match &a.data {
        Some(p) => {
            inputs.push(p);
            load(p)?.feature_ids().to_vec()
        }
        None => feature_universe(&records),
    };
    let gamma: Vec<Vec<String>> = records.into_iter().map(|r| r.features).collect();
    let m = build_selection_matrix(&gamma, &ids)?;
    let counts = coselection_counts(&m);
    let net = &ctx.config.network;
    let graph = graph_from_counts(&counts, m.feature_ids(), net.tau_occ, net.tau_cos)?;
    graph.save_edges_tsv(&a.out)?;
    let mut outputs: Vec<PathBuf> = vec![a.out.clone(), a.communities.clone()];
    if graph.n_edges() == 0 {
        return Err(Error::Runtime(format!(
            "no edges survive tau_occ {} and tau_cos {}",
            net.tau_occ, net.tau_cos
        )));
    }
    let partition = greedy_communities(&graph)?;
    let set = CommunitySet::from_partition(&graph, &partition);
    set.save(&a.communities)?;
    if let Some(dir) = &a.lists_dir {
        set.write_lists(dir)?;
    }
    log::info!(
        "{} nodes, {} edges, {} communities, modularity {:.4}",
        graph.n_nodes(),
        graph.n_edges(),
        partition.n_communities,
        partition.modularity
    );
    let (occ_grid, cos_grid) = sweep_grids(ctx, &a.sweep)?;
    if let (Some(occ), Some(cos)) = (occ_grid, cos_grid) {
        let path = a.sweep_out.clone().ok_or_else(|| Error::Parameter {
            name: "sweep-out",
            message: "required with --sweep".into(),
        })?;
        let rows = threshold_sweep(&m, &occ, &cos)?;
        save_sweep_tsv(&rows, &path)?;
        outputs.push(path);
    }
    let outputs: Vec<&Path> = outputs.iter().map(PathBuf::as_path).collect();
    ctx.provenance("network", &inputs, &outputs)
}

type Grids = (Option<Vec<u64>>, Option<Vec<f64>>);

fn sweep_grids(ctx: &Ctx, specs: &[String]) -> Result<Grids> {
    let mut occ = ctx.config.network.occ_grid.clone();
    let mut cos = ctx.config.network.cos_grid.clone();
    for s in specs {
        match s.split_once('=') {
            Some(("occ", v)) => occ = Some(v.to_string()),
            Some(("cos", v)) => cos = Some(v.to_string()),
            _ => {
                return Err(Error::Parameter {
                    name: "sweep",
                    message: format!("`{}` is not occ=... or cos=...", s),
                })
            }
        }
    }
    match (occ, cos) {
        (None, None) => Ok((None, None)),
        (Some(o), Some(c)) => Ok((Some(parse_occ_grid(&o)?), Some(parse_cos_grid(&c)?))),
        _ => Err(Error::Parameter {
            name: "sweep",
            message: "needs both an occ and a cos grid".into(),
        }),
    }
}

fn crs(ctx: &Ctx, a: &CrsArgs) -> Result<()> {
    let train = load(&a.train)?;
    let target = load(&a.target)?;
    let set = CommunitySet::load(&a.communities)?;
    let mut cfg = ctx.config.crs.clone();
    cfg.seed = stage_seed(ctx.config.seed, Stage::Crs);
    let kinds: Vec<ModelKind> = if a.model.is_empty() {
        cfg.model_kinds.clone()
    } else {
        a.model
            .iter()
            .map(|m| ctx.config.ml.kind(m.name()))
            .collect::<Result<_>>()?
    };
    let mut outputs = Vec::new();
    for kind in &kinds {
        let out = compute_crs(&train, &target, &set, kind, &cfg)?;
        if !out.excluded.is_empty() {
            eprintln!(
                "{}: skipped communities below {} features: {}",
                kind.short_name(),
                cfg.min_community_size,
                out.excluded.join(", ")
            );
        }
        let path = if kinds.len() == 1 {
            a.out.clone()
        } else {
            with_infix(&a.out, kind.short_name())
        };
        out.matrix.save_tsv(&path)?;
        outputs.push(path);
    }
    let outputs: Vec<&Path> = outputs.iter().map(PathBuf::as_path).collect();
    ctx.provenance("crs", &[&a.train, &a.target, &a.communities], &outputs)
}

fn crs_eval(ctx: &Ctx, a: &CrsEvalArgs) -> Result<()> {
    let m = CrsMatrix::load_tsv(&a.crs)?;
    let labels = m.labels.clone().ok_or_else(|| {
        Error::Dataset(format!("{}: no `label` column", a.crs.display()))
    })?;
    let rows = evaluate_crs(&m, &labels)?;
    let mut buf = Vec::new();
    write_evaluation_tsv(&rows, &mut buf).map_err(|e| Error::io(&a.out, e))?;
    write_file(&a.out, &buf)?;
    ctx.provenance("crs-eval", &[&a.crs], &[&a.out])
}

fn subtype(ctx: &Ctx, a: &SubtypeArgs) -> Result<()> {
    let mut m = CrsMatrix::load_tsv(&a.crs)?;
    if a.cases_only {
        m = m.cases_only()?;
    }
    let points: Vec<Vec<f64>> = (0..m.n_samples()).map(|i| m.row(i)).collect();
    let variant = match a.variant {
        VariantArg::D => WardVariant::D,
        VariantArg::D2 => WardVariant::D2,
        VariantArg::DUnsquared => WardVariant::DUnsquared,
    };
    let dendrogram = ward_dendrogram(&points, variant)?;
    let assignment = cut_tree(&dendrogram, a.k)?;
    let mut text = String::from("sample_id\tcluster\n");
    for (id, c) in m.sample_ids.iter().zip(&assignment) {
        text.push_str(&format!("{}\t{}\n", id, c));
    }
    write_file(&a.out, text.as_bytes())?;
    let mut outputs = vec![a.out.clone()];
    if let Some(path) = &a.summary {
        let s = summarize_clusters(&points, &assignment, &m.sample_ids, &m.community_labels)?;
        let mut buf = Vec::new();
        s.write_tidy_tsv(&mut buf).map_err(|e| Error::io(path, e))?;
        write_file(path, &buf)?;
        outputs.push(path.clone());
    }
    if let Some(path) = &a.dendrogram {
        let mut buf = Vec::new();
        dendrogram.write_tsv(&mut buf).map_err(|e| Error::io(path, e))?;
        write_file(path, &buf)?;
        outputs.push(path.clone());
    }
    let curve = within_ss_curve(&points, &dendrogram, 2..=10)?;
    let mut ss = String::from("k\twithin_ss\n");
    for (k, v) in &curve {
        ss.push_str(&format!("{}\t{}\n", k, v));
    }
    match &a.ss_out {
        Some(path) => {
            write_file(path, ss.as_bytes())?;
            outputs.push(path.clone());
        }
        None => eprint!("{}", ss),
    }
    let outputs: Vec<&Path> = outputs.iter().map(PathBuf::as_path).collect();
    ctx.provenance("subtype", &[&a.crs], &outputs)
}

fn overfit_cmd(ctx: &Ctx, a: &OverfitArgs) -> Result<()> {
    let data = load(&a.data)?;
    let report = overfit(
        &data,
        &ctx.config,
        &OverfitOptions {
            runs: a.runs,
            test_fraction: a.test_fraction,
        },
    )?;
    write_json(&a.out, &report)?;
    let mut outputs = vec![a.out.clone()];
    if let Some(path) = &a.tsv {
        write_file(path, report.to_tsv().as_bytes())?;
        outputs.push(path.clone());
    }
    print!("{}", report.to_tsv());
    let outputs: Vec<&Path> = outputs.iter().map(PathBuf::as_path).collect();
    ctx.provenance("overfit", &[&a.data], &outputs)
}

fn repro_sim_cmd(ctx: &Ctx, a: &ReproSimArgs) -> Result<()> {
    let scale: Scale = a.scale.parse()?;
    let report = repro_sim(a.seed, scale)?;
    write_json(&a.out, &report)?;
    print!("{}", report.summary());
    ctx.provenance("repro-sim", &[], &[&a.out])
}

/// Folds command-line overrides into the configuration.
fn effective_config(cli: &Cli) -> Result<PipelineConfig> {
    let mut cfg = match &cli.global.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    match &cli.command {
        Command::Synth(a) => set(&mut cfg.seed, a.seed),
        Command::Select(a) => {
            set(&mut cfg.seed, a.seed);
            if let Some(f) = a.fitness {
                cfg.ga.fitness_kind = cfg.ml.kind(f.name())?;
            }
            set(&mut cfg.ga.pop_size, a.pop_size);
            set(&mut cfg.ga.ngen, a.ngen);
            set(&mut cfg.ga.tour_size, a.tour_size);
            set(&mut cfg.ga.cxpb, a.cxpb);
            set(&mut cfg.ga.mutpb, a.mutpb);
            set(&mut cfg.ga.size_limit, a.size_limit);
        }
        Command::Network(a) => {
            set(&mut cfg.network.tau_occ, a.tau_occ);
            set(&mut cfg.network.tau_cos, a.tau_cos);
        }
        Command::Crs(a) => {
            set(&mut cfg.seed, a.seed);
            set(&mut cfg.crs.n_resamples, a.resamples);
            set(&mut cfg.crs.sample_fraction, a.fraction);
            set(&mut cfg.crs.min_community_size, a.min_size);
        }
        Command::Overfit(a) => set(&mut cfg.seed, a.seed),
        Command::ReproSim(a) => cfg.seed = a.seed,
        Command::CrsEval(_) | Command::Subtype(_) => {}
    }
    cfg.validate()?;
    Ok(cfg)
}

fn set<T>(slot: &mut T, value: Option<T>) {
    if let Some(v) = value {
        *slot = v;
    }
}

fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.global.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Error::Runtime(format!("thread pool: {}", e)))?;
    }
    let ctx = Ctx {
        config: effective_config(&cli)?,
        config_path: cli.global.config.clone(),
    };
    match &cli.command {
        Command::Synth(a) => synth(&ctx, a),
        Command::Select(a) => select(&ctx, a),
        Command::Network(a) => network(&ctx, a),
        Command::Crs(a) => crs(&ctx, a),
        Command::CrsEval(a) => crs_eval(&ctx, a),
        Command::Subtype(a) => subtype(&ctx, a),
        Command::Overfit(a) => overfit_cmd(&ctx, a),
        Command::ReproSim(a) => repro_sim_cmd(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.global.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e);
            ExitCode::from(if e.is_validation() { 2 } else { 3 })
        }
    }
}
