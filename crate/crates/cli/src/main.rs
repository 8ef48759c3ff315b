//! Command-line front end: space enumeration and degeneracy reports,
//! spherical embedding, weight fitting, chain sampling, end-to-end
//! generation, and goodness-of-fit summaries.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use elsrgm::{
    baseline_from_atoms, cell_diameter, degeneracy_report, diameters_to_csv,
    enumerate_iso_classes, enumerate_labeled, feature_vector, fit_pi, format_edge_list,
    generate_run, kl_trace_csv, mcmc_dp_sample, mh_sample, parse_edge_list,
    random_walk_neighborhood, spherical_embedding, summarize, vmf_sample, DpOptions, DpRunReport,
    Embedding, EnumOptions, Error, FeatureSpace, FeatureSpec, FeatureVector, FitOptions,
    GenerateConfig, GenerateOutcome, Graph, MhOptions, MixtureModel, Result, WalkOptions,
};

const GOF_STATS: [&str; 4] = ["degree", "esp", "triad", "geodesic"];

/// stdout writes tolerate a closed pipe (e.g. `elsrgm enumerate | head`).
fn say(text: &str) {
    use std::io::Write;
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
}

macro_rules! sayln {
    ($($arg:tt)*) => {{
        let mut text = format!($($arg)*);
        text.push('\n');
        say(&text);
    }};
}

#[derive(Parser)]
#[command(name = "elsrgm", version, about = "Latent-space graph generation and ERGM diagnostics")]
struct Cli {
    /// Worker thread cap; the ELSRGM_THREADS variable is the fallback.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Enumerate labeled graphs on n nodes into a feature-weight table.
    Enumerate {
        #[arg(long)]
        nodes: usize,
        /// Comma-separated feature tags (edge, triangle, kstarK) or "experiment".
        #[arg(long, default_value = "edge,triangle")]
        features: String,
        /// CSV output path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Permit n = 8 despite the cost.
        #[arg(long)]
        allow_large: bool,
        /// Skip witness graphs.
        #[arg(long)]
        no_witnesses: bool,
    },
    /// List one representative per isomorphism class on n nodes.
    Iso {
        #[arg(long)]
        nodes: usize,
        /// JSON output path (array of edge lists); stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Hamming diameter of every feature fiber on n nodes.
    Diameter {
        #[arg(long)]
        nodes: usize,
        #[arg(long, default_value = "edge,triangle")]
        features: String,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        allow_large: bool,
    },
    /// Degeneracy report for a target feature vector in an enumerated space.
    Degeneracy {
        /// Feature-space CSV produced by `enumerate`.
        #[arg(long)]
        space: PathBuf,
        #[arg(long)]
        nodes: usize,
        /// Edge-list file whose feature vector is the target.
        #[arg(long, conflicts_with = "feature")]
        graph: Option<PathBuf>,
        /// Target feature vector as comma-separated counts.
        #[arg(long)]
        feature: Option<String>,
        /// JSON output path; stdout when absent.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Embed the random-walk neighborhood of an example graph on a sphere.
    Embed {
        /// Edge-list file of the example graph.
        #[arg(long)]
        example: PathBuf,
        #[arg(long, default_value = "edge,triangle")]
        features: String,
        #[arg(long, default_value_t = 2000)]
        walk_steps: u64,
        /// Cap on toggles away from the example during the walk.
        #[arg(long)]
        max_edit: Option<u32>,
        /// Jump back to the example every R steps.
        #[arg(long)]
        restart_every: Option<u64>,
        /// Embedding dimension; automatic when absent.
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        /// Embedding JSON path; a sibling .graphs.json lists the member graphs.
        #[arg(long)]
        out: PathBuf,
    },
    /// Fit mixture weights over the atoms of an embedding.
    Fit {
        #[arg(long)]
        embedding: PathBuf,
        /// JSON array of member edge lists aligned with the embedding rows.
        #[arg(long)]
        graphs: PathBuf,
        #[arg(long, default_value_t = 140.0)]
        kappa: f64,
        #[arg(long, default_value_t = 400.0)]
        kappa_h: f64,
        #[arg(long, default_value_t = 0.5)]
        alpha: f64,
        #[arg(long, default_value_t = 5000)]
        mc_samples: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Model JSON path; a sibling .graphs.json lists the atom graphs.
        #[arg(long)]
        out: PathBuf,
    },
    /// Draw graphs from a fitted model by Dirichlet-process (default) or
    /// plain Metropolis-Hastings chains.
    Sample {
        #[arg(long)]
        model: PathBuf,
        /// JSON array of atom edge lists (sibling of the model file).
        #[arg(long)]
        graphs: PathBuf,
        /// Edge-list file of the example graph that seeds each chain.
        #[arg(long)]
        example: PathBuf,
        /// Embedding JSON; required unless --mh is set.
        #[arg(long)]
        embedding: Option<PathBuf>,
        /// Feature tags for placing newly found graphs; must match the embedding.
        #[arg(long, default_value = "edge,triangle")]
        features: String,
        #[arg(long, default_value_t = 1000)]
        t: u64,
        #[arg(long, default_value_t = 100)]
        count: usize,
        #[arg(long)]
        seed: Option<u64>,
        /// Reuse one drawn target direction for every chain.
        #[arg(long)]
        shared_target: bool,
        /// Metropolis-Hastings on the fixed atom set, no atom growth.
        #[arg(long)]
        mh: bool,
        /// New atoms between weight refits; 0 disables.
        #[arg(long, default_value_t = 25)]
        refit_every: usize,
        #[arg(long, default_value_t = 5000)]
        mc_samples: usize,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// End-to-end generation: walk, embed, fit, and sample from one example.
    Generate {
        #[arg(long)]
        example: PathBuf,
        /// JSON config; missing fields take the defaults, flags override.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        features: Option<String>,
        #[arg(long)]
        walk_steps: Option<u64>,
        #[arg(long)]
        walk_max_edit: Option<u32>,
        #[arg(long)]
        restart_every: Option<u64>,
        #[arg(long)]
        walk_seed: Option<u64>,
        #[arg(long)]
        p: Option<usize>,
        #[arg(long)]
        kappa: Option<f64>,
        #[arg(long)]
        kappa_h: Option<f64>,
        #[arg(long)]
        alpha: Option<f64>,
        #[arg(long)]
        t_steps: Option<u64>,
        #[arg(long)]
        sample_count: Option<usize>,
        #[arg(long)]
        mc_samples: Option<usize>,
        #[arg(long)]
        refit_every: Option<usize>,
        #[arg(long)]
        reembed_every: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        shared_target: bool,
        #[arg(long)]
        out_dir: PathBuf,
    },
    /// Goodness-of-fit summary of generated samples against an observed graph.
    Gof {
        /// Edge-list file of the observed graph.
        #[arg(long)]
        observed: PathBuf,
        /// Directory of generated .edges files.
        #[arg(long)]
        samples_dir: PathBuf,
        /// CSV output path; stdout when absent.
        #[arg(long)]
        out_csv: Option<PathBuf>,
        /// Directory for per-statistic SVG box plots.
        #[arg(long)]
        svg_dir: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads(cli.threads);
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

fn init_threads(fl: Option<usize>) {
    let n = fl.or_else(|| {
        std::env::var("ELSRGM_THREADS")
            .ok()
            .and_then(|v| v.parse().ok())
    });
    if let Some(n) = n.filter(|&n| n > 0) {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
}

/// 2 input or configuration, 3 unsupported size or dimension, 4 numerical.
fn exit_code(e: &Error) -> u8 {
    match e {
        Error::UnsupportedSize(_) | Error::UnsupportedDimension(_) => 3,
        Error::Numerical(_) => 4,
        _ => 2,
    }
}

fn run(cmd: Command) -> Result<()> {
    match cmd {
        Command::Enumerate { nodes, features, out, allow_large, no_witnesses } => {
            let spec = parse_spec(&features)?;
            let opts = EnumOptions { allow_large, witnesses: !no_witnesses };
            let space = enumerate_labeled(nodes, &spec, opts)?;
            let to_file = emit(&out, &space.to_csv()?)?;
            note(
                to_file,
                format!("cells: {}, labeled graphs: {}", space.support.len(), space.total_weight()),
            );
            Ok(())
        }
        Command::Iso { nodes, out } => {
            let atlas = enumerate_iso_classes(nodes)?;
            let lists: Vec<String> = atlas.classes.iter().map(|c| format_edge_list(&c.rep)).collect();
            let to_file = emit(&out, &json_pretty(&lists))?;
            note(to_file, format!("classes: {}", atlas.classes.len()));
            Ok(())
        }
        Command::Diameter { nodes, features, out, allow_large } => {
            let spec = parse_spec(&features)?;
            let atlas = enumerate_iso_classes(nodes)?;
            let opts = EnumOptions { allow_large, witnesses: true };
            let space = enumerate_labeled(nodes, &spec, opts)?;
            let diameters = cell_diameter(&atlas, &space)?;
            let to_file = emit(&out, &diameters_to_csv(&space, &diameters)?)?;
            let widest = diameters.values().copied().max().unwrap_or(0);
            note(to_file, format!("cells: {}, max diameter: {}", diameters.len(), widest));
            Ok(())
        }
        Command::Degeneracy { space, nodes, graph, feature, out } => {
            let table = FeatureSpace::from_csv(&fs::read_to_string(&space)?, nodes)?;
            let x_star = match (&graph, &feature) {
                (Some(path), None) => feature_vector(&load_graph(path)?, &table.spec)?,
                (None, Some(text)) => parse_feature(text)?,
                _ => return Err(Error::input("give exactly one of --graph and --feature")),
            };
            let report = degeneracy_report(&table, &x_star)?;
            let to_file = emit(&out, &json_pretty(&report))?;
            note(
                to_file,
                format!(
                    "type1_diverging: {}, type2_degenerate: {}",
                    report.type1_diverging, report.type2_degenerate
                ),
            );
            Ok(())
        }
        Command::Embed {
            example, features, walk_steps, max_edit, restart_every, p, seed, out,
        } => {
            let center = load_graph(&example)?;
            let spec = parse_spec(&features)?;
            let seed = resolve_seed(seed);
            let opts = WalkOptions { max_edit, restart_every };
            let nb = random_walk_neighborhood(&center, walk_steps, opts, seed);
            let feats: Vec<FeatureVector> = nb
                .members
                .iter()
                .map(|g| feature_vector(g, &spec))
                .collect::<Result<_>>()?;
            let emb: Embedding = spherical_embedding(&feats, p)?;
            fs::write(&out, emb.to_json())?;
            let lists: Vec<String> = nb.members.iter().map(format_edge_list).collect();
            fs::write(graphs_sibling(&out), json_pretty(&lists))?;
            sayln!("members: {}, p: {}, radius: {:.6}", nb.members.len(), emb.p, emb.radius);
            Ok(())
        }
        Command::Fit { embedding, graphs, kappa, kappa_h, alpha, mc_samples, seed, out } => {
            let emb: Embedding = Embedding::from_json(&fs::read_to_string(&embedding)?)?;
            let members = load_graph_list(&graphs)?;
            if members.len() != emb.points.len() {
                return Err(Error::input(format!(
                    "{} graphs for {} embedded atoms",
                    members.len(),
                    emb.points.len()
                )));
            }
            let baseline = baseline_from_atoms(&emb.points, kappa)?;
            let seed = resolve_seed(seed);
            let fit_opts = FitOptions { mc_samples, seed, ..FitOptions::default() };
            let fit = fit_pi(&emb.points, &baseline, kappa_h, &fit_opts)?;
            let kl = *fit.trace.last().expect("fit trace is non-empty");
            let model = MixtureModel::new(emb.points.clone(), fit.pi, kappa_h, baseline, alpha, members)?;
            let (model_json, graphs_json) = model.to_json_parts();
            fs::write(&out, model_json)?;
            fs::write(graphs_sibling(&out), graphs_json)?;
            sayln!("atoms: {}, kl: {:.6}", model.k(), kl);
            Ok(())
        }
        Command::Sample {
            model, graphs, example, embedding, features, t, count, seed, shared_target, mh,
            refit_every, mc_samples, out_dir,
        } => cmd_sample(SampleArgs {
            model, graphs, example, embedding, features, t, count, seed, shared_target, mh,
            refit_every, mc_samples, out_dir,
        }),
        Command::Generate {
            example, config, features, walk_steps, walk_max_edit, restart_every, walk_seed, p,
            kappa, kappa_h, alpha, t_steps, sample_count, mc_samples, refit_every, reembed_every,
            seed, shared_target, out_dir,
        } => {
            let mut file_has_seed = false;
            let mut cfg = match &config {
                Some(path) => {
                    let value: serde_json::Value =
                        serde_json::from_str(&fs::read_to_string(path)?)
                            .map_err(|e| Error::config(format!("bad config JSON: {e}")))?;
                    file_has_seed = value.get("seed").is_some();
                    serde_json::from_value::<GenerateConfig>(value)
                        .map_err(|e| Error::config(format!("bad config JSON: {e}")))?
                }
                None => GenerateConfig::default(),
            };
            if let Some(text) = features {
                cfg.spec = parse_spec(&text)?;
            }
            if let Some(v) = walk_steps {
                cfg.walk_steps = v;
            }
            if let Some(v) = walk_max_edit {
                cfg.walk_max_edit = Some(v);
            }
            if let Some(v) = restart_every {
                cfg.restart_every = Some(v);
            }
            if let Some(v) = walk_seed {
                cfg.walk_seed = Some(v);
            }
            if let Some(v) = p {
                cfg.p_override = Some(v);
            }
            if let Some(v) = kappa {
                cfg.kappa = v;
            }
            if let Some(v) = kappa_h {
                cfg.kappa_h = v;
            }
            if let Some(v) = alpha {
                cfg.alpha = v;
            }
            if let Some(v) = t_steps {
                cfg.t_steps = v;
            }
            if let Some(v) = sample_count {
                cfg.sample_count = v;
            }
            if let Some(v) = mc_samples {
                cfg.mc_samples = v;
            }
            if let Some(v) = refit_every {
                cfg.refit_every = v;
            }
            if let Some(v) = reembed_every {
                cfg.reembed_every = v;
            }
            if shared_target {
                cfg.shared_target = true;
            }
            cfg.seed = match seed {
                Some(s) => s,
                None if file_has_seed => cfg.seed,
                None => rand::random(),
            };
            sayln!("seed: {}", cfg.seed);
            let center = load_graph(&example)?;
            let run: GenerateOutcome = generate_run(&center, &cfg)?;
            fs::create_dir_all(&out_dir)?;
            for (i, g) in run.samples.iter().enumerate() {
                fs::write(out_dir.join(format!("sample_{i:04}.edges")), format_edge_list(g))?;
            }
            fs::write(out_dir.join("manifest.json"), run.manifest.to_json())?;
            fs::write(out_dir.join("kl_trace.csv"), kl_trace_csv(&run.kl_trace))?;
            let (model_json, graphs_json) = run.model.to_json_parts();
            fs::write(out_dir.join("model.json"), model_json)?;
            fs::write(out_dir.join("model.graphs.json"), graphs_json)?;
            fs::write(out_dir.join("embedding.json"), run.embedding.to_json())?;
            let summary = summarize(&center, &run.samples)?;
            fs::write(out_dir.join("gof.csv"), summary.to_csv())?;
            for stat in GOF_STATS {
                if let Some(svg) = summary.to_svg(stat) {
                    fs::write(out_dir.join(format!("gof_{stat}.svg")), svg)?;
                }
            }
            let covered = summary.rows.iter().filter(|r| r.covered).count();
            sayln!(
                "neighborhood: {} graphs, p: {}, radius: {:.6}",
                run.manifest.neighborhood_size, run.manifest.embedding_p, run.manifest.radius
            );
            sayln!(
                "atoms: {} -> {}, refits: {}, samples: {}",
                run.manifest.initial_k,
                run.manifest.final_k,
                run.manifest.refit_count,
                run.samples.len()
            );
            sayln!("gof coverage: {covered}/{}", summary.rows.len());
            Ok(())
        }
        Command::Gof { observed, samples_dir, out_csv, svg_dir } => {
            let center = load_graph(&observed)?;
            let mut paths: Vec<PathBuf> = fs::read_dir(&samples_dir)?
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| p.extension().is_some_and(|x| x == "edges"))
                .collect();
            paths.sort();
            if paths.is_empty() {
                return Err(Error::input(format!(
                    "no .edges files in {}",
                    samples_dir.display()
                )));
            }
            let samples: Vec<Graph> = paths.iter().map(|p| load_graph(p)).collect::<Result<_>>()?;
            let summary = summarize(&center, &samples)?;
            let to_file = emit(&out_csv, &summary.to_csv())?;
            if let Some(dir) = &svg_dir {
                fs::create_dir_all(dir)?;
                for stat in GOF_STATS {
                    if let Some(svg) = summary.to_svg(stat) {
                        fs::write(dir.join(format!("gof_{stat}.svg")), svg)?;
                    }
                }
            }
            let covered = summary.rows.iter().filter(|r| r.covered).count();
            note(
                to_file,
                format!("samples: {}, coverage: {covered}/{}", samples.len(), summary.rows.len()),
            );
            Ok(())
        }
    }
}

struct SampleArgs {
    model: PathBuf,
    graphs: PathBuf,
    example: PathBuf,
    embedding: Option<PathBuf>,
    features: String,
    t: u64,
    count: usize,
    seed: Option<u64>,
    shared_target: bool,
    mh: bool,
    refit_every: usize,
    mc_samples: usize,
    out_dir: PathBuf,
}

#[derive(Serialize)]
struct ChainRecord {
    index: usize,
    chain_seed: u64,
    t: u64,
    accepted: u64,
    acceptance_rate: f64,
    y_star: Vec<f64>,
}

#[derive(Serialize)]
struct SampleRunManifest {
    version: String,
    mode: String,
    seed: u64,
    t: u64,
    count: usize,
    shared_target: bool,
    features: Vec<String>,
    refit_every: usize,
    mc_samples: usize,
    alpha: f64,
    initial_k: usize,
    final_k: usize,
    new_graph_count: usize,
    samples: Vec<ChainRecord>,
}

fn cmd_sample(args: SampleArgs) -> Result<()> {
    let mut model: MixtureModel =
        MixtureModel::from_json_parts(&fs::read_to_string(&args.model)?, &fs::read_to_string(&args.graphs)?)?;
    let center = load_graph(&args.example)?;
    let spec = parse_spec(&args.features)?;
    let seed = resolve_seed(args.seed);
    fs::create_dir_all(&args.out_dir)?;

    // Seed order mirrors the end-to-end pipeline: fit seed, then the shared
    // target draw when requested, then one seed per chain.
    let mut master = ChaCha8Rng::seed_from_u64(seed);
    let fit_seed: u64 = master.gen();
    let shared: Option<Vec<f64>> = if args.shared_target {
        let mut target_rng = ChaCha8Rng::seed_from_u64(master.gen());
        Some(vmf_sample(&model.baseline, &mut target_rng)?)
    } else {
        None
    };
    let chain_seeds: Vec<u64> = (0..args.count).map(|_| master.gen()).collect();

    let initial_k = model.k();
    let mut records = Vec::with_capacity(args.count);
    let mut kl_trace: Vec<(usize, f64)> = Vec::new();
    let mut report: Option<DpRunReport> = None;
    let mut embedding: Option<Embedding> = match &args.embedding {
        Some(path) => Some(Embedding::from_json(&fs::read_to_string(path)?)?),
        None => None,
    };
    if !args.mh && embedding.is_none() {
        return Err(Error::input("Dirichlet-process sampling needs --embedding (or pass --mh)"));
    }

    for (i, &chain_seed) in chain_seeds.iter().enumerate() {
        let (g, state) = if args.mh {
            let opts = MhOptions { y_star: shared.clone(), init: None };
            mh_sample(&model, &center, args.t, chain_seed, &opts)?
        } else {
            let opts = DpOptions {
                spec: spec.clone(),
                y_star: shared.clone(),
                init: None,
                refit_every: args.refit_every,
                fit: FitOptions { mc_samples: args.mc_samples, seed: fit_seed, ..FitOptions::default() },
            };
            let emb = embedding.as_ref().expect("checked above");
            let out = mcmc_dp_sample(&model, emb, &center, args.t, chain_seed, &opts)?;
            model = out.model;
            embedding = Some(out.embedding);
            kl_trace.extend(out.kl_values.iter().copied());
            match &mut report {
                Some(r) => r.merge(&out.report),
                None => report = Some(out.report),
            }
            (out.final_graph, out.state)
        };
        fs::write(args.out_dir.join(format!("sample_{i:04}.edges")), format_edge_list(&g))?;
        records.push(ChainRecord {
            index: i,
            chain_seed,
            t: state.t,
            accepted: state.accepted,
            acceptance_rate: state.accepted as f64 / state.t as f64,
            y_star: state.y_star,
        });
    }

    let new_graph_count = report.as_ref().map_or(0, |r| r.new_graphs.len());
    let manifest = SampleRunManifest {
        version: env!("CARGO_PKG_VERSION").into(),
        mode: if args.mh { "mh".into() } else { "dp".into() },
        seed,
        t: args.t,
        count: args.count,
        shared_target: args.shared_target,
        features: spec.tags(),
        refit_every: args.refit_every,
        mc_samples: args.mc_samples,
        alpha: model.alpha,
        initial_k,
        final_k: model.k(),
        new_graph_count,
        samples: records,
    };
    fs::write(args.out_dir.join("manifest.json"), json_pretty(&manifest))?;
    if !args.mh {
        fs::write(args.out_dir.join("kl_trace.csv"), kl_trace_csv(&kl_trace))?;
    }
    sayln!("samples: {}, atoms: {initial_k} -> {}, new graphs: {new_graph_count}", args.count, model.k());
    Ok(())
}

/// Comma-separated tags, or "experiment" for the 12-statistic set.
fn parse_spec(text: &str) -> Result<FeatureSpec> {
    if text.trim() == "experiment" {
        return Ok(FeatureSpec::experiment());
    }
    let tags: Vec<String> = text
        .split(',')
        .map(|t| t.trim().to_string())
        .filter(|t| !t.is_empty())
        .collect();
    FeatureSpec::parse_tags(&tags)
}

fn parse_feature(text: &str) -> Result<FeatureVector> {
    let counts: Vec<u64> = text
        .split(',')
        .map(|v| {
            v.trim()
                .parse()
                .map_err(|_| Error::input(format!("bad feature count {:?}", v.trim())))
        })
        .collect::<Result<_>>()?;
    if counts.is_empty() {
        return Err(Error::input("empty feature vector"));
    }
    Ok(FeatureVector(counts))
}

fn load_graph(path: &Path) -> Result<Graph> {
    parse_edge_list(&fs::read_to_string(path)?, None)
}

fn load_graph_list(path: &Path) -> Result<Vec<Graph>> {
    let lists: Vec<String> = serde_json::from_str(&fs::read_to_string(path)?)
        .map_err(|e| Error::input(format!("bad graph list JSON: {e}")))?;
    lists.iter().map(|t| parse_edge_list(t, None)).collect()
}

/// Synthesizes a seed when absent and always prints the one in effect.
fn resolve_seed(seed: Option<u64>) -> u64 {
    let s = seed.unwrap_or_else(rand::random);
    sayln!("seed: {s}");
    s
}

fn json_pretty<T: Serialize>(value: &T) -> String {
    let mut text = serde_json::to_string_pretty(value).expect("value serializes");
    text.push('\n');
    text
}

/// model.json -> model.graphs.json.
fn graphs_sibling(path: &Path) -> PathBuf {
    let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("out");
    match path.extension().and_then(|s| s.to_str()) {
        Some(ext) => path.with_file_name(format!("{stem}.graphs.{ext}")),
        None => path.with_file_name(format!("{stem}.graphs")),
    }
}

/// Data goes to the file when given, else to stdout; returns which.
fn emit(out: &Option<PathBuf>, data: &str) -> Result<bool> {
    match out {
        Some(path) => {
            fs::write(path, data)?;
            Ok(true)
        }
        None => {
            say(data);
            Ok(false)
        }
    }
}

/// Summary lines share stdout only when the data went to a file.
fn note(to_file: bool, msg: String) {
    if to_file {
        sayln!("{msg}");
    } else {
        eprintln!("{msg}");
    }
}
