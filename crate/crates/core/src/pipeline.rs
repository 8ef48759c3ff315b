//! End-to-end generation: random-walk neighborhood around an example graph,
//! spherical embedding of its feature vectors, baseline and mixture
//! estimation, then repeated Dirichlet-process chains with periodic full
//! re-embedding as new graphs accumulate.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embed::{
    dissimilarity_matrix, embedding_with_radius_hint, spherical_embedding, Embedding,
};
use crate::error::{Error, Result};
use crate::features::{feature_vector, FeatureSpec, FeatureVector};
use crate::graph::{random_walk_neighborhood, Graph, Neighborhood, WalkOptions};
use crate::linalg::norm2;
use crate::mixture::{fit_pi, FitOptions, MixtureModel};
use crate::sampler::{mcmc_dp_sample, DpOptions, DpRunReport};
use crate::scalar::SampleReal;
use crate::vmf::{vmf_sample, VmfParams};

/// Full parameter set of a generation run. Serializable so runs can be
/// configured from a JSON file; missing fields take the defaults.
#[derive(Clone, Debug, Serialize, Deserialize)]
#[serde(default)]
pub struct GenerateConfig {
    pub spec: FeatureSpec,
    pub walk_steps: u64,
    pub walk_max_edit: Option<u32>,
    pub restart_every: Option<u64>,
    /// Separate walk seed; derived from `seed` when absent.
    pub walk_seed: Option<u64>,
    pub p_override: Option<usize>,
    /// Baseline concentration.
    pub kappa: f64,
    /// Kernel bandwidth.
    pub kappa_h: f64,
    /// Dirichlet-process mass for unseen graphs.
    pub alpha: f64,
    /// Chain length per generated sample.
    pub t_steps: u64,
    pub sample_count: usize,
    /// Monte-Carlo proposal count of the weight fit.
    pub mc_samples: usize,
    /// New atoms between weight refits inside a chain; 0 disables.
    pub refit_every: usize,
    /// New atoms between full re-embeddings across chains; 0 disables.
    pub reembed_every: usize,
    pub seed: u64,
    /// Reuse one drawn target direction for every sample instead of a fresh
    /// draw per chain.
    pub shared_target: bool,
}

impl Default for GenerateConfig {
    fn default() -> Self {
        GenerateConfig {
            spec: FeatureSpec::edge_triangle(),
            walk_steps: 2000,
            walk_max_edit: None,
            restart_every: None,
            walk_seed: None,
            p_override: None,
            kappa: 140.0,
            kappa_h: 400.0,
            alpha: 0.5,
            t_steps: 1000,
            sample_count: 100,
            mc_samples: 5000,
            refit_every: 25,
            reembed_every: 25,
            seed: 0,
            shared_target: false,
        }
    }
}

/// Per-sample chain record in the run manifest.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleManifest<T = f64> {
    pub index: usize,
    pub chain_seed: u64,
    pub t: u64,
    pub accepted: u64,
    pub acceptance_rate: f64,
    pub y_star: Vec<T>,
}

/// Everything needed to reproduce and audit a run: effective parameters,
/// derived quantities, and per-sample chain records.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest<T = f64> {
    pub version: String,
    pub seed: u64,
    pub walk_seed: u64,
    pub spec: Vec<String>,
    pub walk_steps: u64,
    pub walk_max_edit: Option<u32>,
    pub restart_every: Option<u64>,
    pub kappa: f64,
    pub kappa_h: f64,
    pub alpha: f64,
    pub t_steps: u64,
    pub sample_count: usize,
    pub mc_samples: usize,
    pub refit_every: usize,
    pub reembed_every: usize,
    pub shared_target: bool,
    pub neighborhood_size: usize,
    pub embedding_p: usize,
    pub radius: T,
    pub initial_k: usize,
    pub final_k: usize,
    pub refit_count: usize,
    pub samples: Vec<SampleManifest<T>>,
}

impl<T: Serialize> RunManifest<T> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("manifest serializes")
    }
}

#[derive(Clone, Debug)]
pub struct GenerateOutcome<T = f64> {
    pub samples: Vec<Graph>,
    pub manifest: RunManifest<T>,
    /// (atom count, KL objective) after the initial fit and every refit.
    pub kl_trace: Vec<(usize, T)>,
    pub report: DpRunReport,
    pub model: MixtureModel<T>,
    pub embedding: Embedding<T>,
    pub neighborhood: Neighborhood,
}

fn validate(cfg: &GenerateConfig) -> Result<()> {
    if cfg.t_steps < 1 {
        return Err(Error::input("t_steps must be at least 1"));
    }
    if cfg.sample_count < 1 {
        return Err(Error::input("sample_count must be at least 1"));
    }
    if !(cfg.kappa.is_finite() && cfg.kappa >= 0.0) {
        return Err(Error::input("kappa must be finite and non-negative"));
    }
    if !(cfg.kappa_h.is_finite() && cfg.kappa_h > 0.0) {
        return Err(Error::input("kappa_h must be finite and positive"));
    }
    if !(cfg.alpha.is_finite() && cfg.alpha >= 0.0) {
        return Err(Error::input("alpha must be finite and non-negative"));
    }
    Ok(())
}

/// Mean direction of the embedded atoms as the baseline center.
pub fn baseline_from_atoms<T: SampleReal>(points: &[Vec<T>], kappa: f64) -> Result<VmfParams<T>> {
    let p = points[0].len();
    let mut mean = vec![T::zero(); p];
    for point in points {
        for (m, &v) in mean.iter_mut().zip(point) {
            *m += v;
        }
    }
    let n = norm2(&mean);
    if n <= T::of(1e-9) {
        return Err(Error::numerical(
            "embedded atoms have no mean direction; change the walk seed or feature spec",
        ));
    }
    for v in mean.iter_mut() {
        *v /= n;
    }
    VmfParams::new(mean, T::of(kappa))
}

fn fit_options(cfg: &GenerateConfig, fit_seed: u64) -> FitOptions {
    FitOptions {
        mc_samples: cfg.mc_samples,
        seed: fit_seed,
        ..FitOptions::default()
    }
}

/// Runs the whole pipeline. Deterministic in `cfg.seed`: the walk seed, fit
/// seed, and per-chain seeds all derive from it in a fixed order.
pub fn generate_run<T: SampleReal>(
    example: &Graph,
    cfg: &GenerateConfig,
) -> Result<GenerateOutcome<T>> {
    validate(cfg)?;
    let mut master = ChaCha8Rng::seed_from_u64(cfg.seed);
    let walk_seed = cfg.walk_seed.unwrap_or_else(|| master.gen());
    let fit_seed: u64 = master.gen();

    let walk_opts = WalkOptions {
        max_edit: cfg.walk_max_edit,
        restart_every: cfg.restart_every,
    };
    let nbhd = random_walk_neighborhood(example, cfg.walk_steps, walk_opts, walk_seed);
    let too_small = |k: usize, p: String| {
        Error::input(format!(
            "neighborhood has only {k} distinct graphs but the embedding needs \
             at least {p}; increase walk_steps or relax walk_max_edit"
        ))
    };
    if nbhd.members.len() < 3 {
        return Err(too_small(nbhd.members.len(), "p + 1 >= 3".into()));
    }
    let features: Vec<FeatureVector> = nbhd
        .members
        .iter()
        .map(|g| feature_vector(g, &cfg.spec))
        .collect::<Result<_>>()?;
    let mut emb = spherical_embedding::<T>(&features, cfg.p_override)?;
    if nbhd.members.len() < emb.p + 1 {
        return Err(too_small(nbhd.members.len(), format!("p + 1 = {}", emb.p + 1)));
    }
    // re-embeds keep this dimension so targets and traces stay comparable
    let p_pin = Some(emb.p);
    let embedding_p = emb.p;

    let mut baseline = baseline_from_atoms(&emb.points, cfg.kappa)?;
    let fit_opts = fit_options(cfg, fit_seed);
    let fit = fit_pi(&emb.points, &baseline, T::of(cfg.kappa_h), &fit_opts)?;
    let mut kl_trace: Vec<(usize, T)> =
        vec![(emb.points.len(), *fit.trace.last().expect("non-empty trace"))];
    let mut model = MixtureModel::new(
        emb.points.clone(),
        fit.pi,
        T::of(cfg.kappa_h),
        baseline.clone(),
        T::of(cfg.alpha),
        nbhd.members.clone(),
    )?;

    let shared_y: Option<Vec<T>> = if cfg.shared_target {
        let mut yrng = ChaCha8Rng::seed_from_u64(master.gen());
        Some(vmf_sample(&baseline, &mut yrng)?)
    } else {
        None
    };

    let initial_k = model.k();
    let mut report = DpRunReport {
        initial_k,
        final_k: initial_k,
        new_graphs: Vec::new(),
        refit_count: 0,
        samples: Vec::new(),
    };
    let mut samples = Vec::with_capacity(cfg.sample_count);
    let mut manifests = Vec::with_capacity(cfg.sample_count);
    let mut new_since_reembed = 0usize;
    let mut refit_count = 0usize;

    for index in 0..cfg.sample_count {
        let chain_seed: u64 = master.gen();
        let opts = DpOptions {
            spec: cfg.spec.clone(),
            y_star: shared_y.clone(),
            init: None,
            refit_every: cfg.refit_every,
            fit: fit_opts.clone(),
        };
        let out = mcmc_dp_sample(&model, &emb, example, cfg.t_steps, chain_seed, &opts)?;
        new_since_reembed += out.report.new_graphs.len();
        refit_count += out.report.refit_count;
        report.merge(&out.report);
        kl_trace.extend(out.kl_values.iter().copied());
        samples.push(out.final_graph.clone());
        report.samples.push(out.final_graph);
        manifests.push(SampleManifest {
            index,
            chain_seed,
            t: out.state.t,
            accepted: out.state.accepted,
            acceptance_rate: out.state.accepted as f64 / out.state.t as f64,
            y_star: out.state.y_star.clone(),
        });
        model = out.model;
        emb = out.embedding;

        if cfg.reembed_every > 0 && new_since_reembed >= cfg.reembed_every {
            // the atom set grows incrementally, so the previous radius seeds
            // a narrow search instead of a full bracket scan
            let d = dissimilarity_matrix::<T>(&emb.source_features)?;
            let cap = emb.source_features[0].0.len().max(2);
            emb = embedding_with_radius_hint(
                &d,
                emb.source_features.clone(),
                p_pin,
                cap,
                Some(emb.radius),
            )?;
            baseline = baseline_from_atoms(&emb.points, cfg.kappa)?;
            let fit = fit_pi(&emb.points, &baseline, T::of(cfg.kappa_h), &fit_opts)?;
            kl_trace.push((emb.points.len(), *fit.trace.last().expect("non-empty trace")));
            model = MixtureModel::new(
                emb.points.clone(),
                fit.pi,
                T::of(cfg.kappa_h),
                baseline.clone(),
                T::of(cfg.alpha),
                model.graphs.clone(),
            )?;
            refit_count += 1;
            new_since_reembed = 0;
        }
    }
    report.refit_count = refit_count;

    let manifest = RunManifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        seed: cfg.seed,
        walk_seed,
        spec: cfg.spec.tags(),
        walk_steps: cfg.walk_steps,
        walk_max_edit: cfg.walk_max_edit,
        restart_every: cfg.restart_every,
        kappa: cfg.kappa,
        kappa_h: cfg.kappa_h,
        alpha: cfg.alpha,
        t_steps: cfg.t_steps,
        sample_count: cfg.sample_count,
        mc_samples: cfg.mc_samples,
        refit_every: cfg.refit_every,
        reembed_every: cfg.reembed_every,
        shared_target: cfg.shared_target,
        neighborhood_size: nbhd.members.len(),
        embedding_p,
        radius: emb.radius,
        initial_k,
        final_k: report.final_k,
        refit_count,
        samples: manifests,
    };

    Ok(GenerateOutcome {
        samples,
        manifest,
        kl_trace,
        report,
        model,
        embedding: emb,
        neighborhood: nbhd,
    })
}

/// KL trace as CSV: atom count, KL objective.
pub fn kl_trace_csv<T: SampleReal>(trace: &[(usize, T)]) -> String {
    let mut out = String::from("atoms,kl\n");
    for &(k, v) in trace {
        out.push_str(&format!("{k},{}\n", v.to_f64().expect("finite")));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::make_graph;

    fn small_cfg() -> GenerateConfig {
        GenerateConfig {
            walk_steps: 150,
            walk_max_edit: Some(2),
            kappa: 5.0,
            kappa_h: 20.0,
            alpha: 2.0,
            t_steps: 120,
            sample_count: 3,
            mc_samples: 200,
            refit_every: 8,
            reembed_every: 0,
            seed: 1,
            ..GenerateConfig::default()
        }
    }

    fn example_graph() -> Graph {
        make_graph(5, &[(0, 1), (1, 2), (2, 3), (3, 4)]).unwrap()
    }

    #[test]
    fn end_to_end_small_run() {
        let out: GenerateOutcome = generate_run(&example_graph(), &small_cfg()).unwrap();
        assert_eq!(out.samples.len(), 3);
        assert!(out.samples.iter().all(|g| g.n() == 5));
        assert_eq!(out.manifest.samples.len(), 3);
        for (i, s) in out.manifest.samples.iter().enumerate() {
            assert_eq!(s.index, i);
            assert_eq!(s.t, 120);
            assert!((0.0..=1.0).contains(&s.acceptance_rate));
            assert_eq!(s.y_star.len(), out.manifest.embedding_p);
        }
        assert_eq!(out.report.final_k, out.report.initial_k + out.report.new_graphs.len());
        assert_eq!(out.model.k(), out.report.final_k);
        assert_eq!(out.embedding.points.len(), out.report.final_k);
        assert_eq!(out.model.graphs.len(), out.report.final_k);
        assert!(!out.kl_trace.is_empty());
        assert_eq!(out.kl_trace[0].0, out.report.initial_k);
        let total: f64 = out.model.pi.iter().sum();
        assert!((total - 1.0).abs() < 1e-9);
        assert_eq!(out.manifest.final_k, out.report.final_k);
        assert_eq!(out.manifest.neighborhood_size, out.neighborhood.members.len());
    }

    #[test]
    fn runs_are_deterministic_in_seed() {
        let a: GenerateOutcome = generate_run(&example_graph(), &small_cfg()).unwrap();
        let b: GenerateOutcome = generate_run(&example_graph(), &small_cfg()).unwrap();
        assert_eq!(a.manifest.to_json(), b.manifest.to_json());
        assert_eq!(a.samples, b.samples);
        assert_eq!(a.kl_trace.len(), b.kl_trace.len());
        let mut other = small_cfg();
        other.seed = 2;
        let c: GenerateOutcome = generate_run(&example_graph(), &other).unwrap();
        assert!(c.manifest.to_json() != a.manifest.to_json());
    }

    #[test]
    fn tiny_neighborhood_is_actionable() {
        let mut cfg = small_cfg();
        cfg.walk_steps = 0;
        let err = generate_run::<f64>(&example_graph(), &cfg).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("neighborhood"), "{msg}");
        assert!(msg.contains("walk_steps"), "{msg}");
    }

    #[test]
    fn shared_target_reuses_one_direction() {
        let mut cfg = small_cfg();
        cfg.shared_target = true;
        let out: GenerateOutcome = generate_run(&example_graph(), &cfg).unwrap();
        let first = &out.manifest.samples[0].y_star;
        assert!(out.manifest.samples.iter().all(|s| &s.y_star == first));

        cfg.shared_target = false;
        let out: GenerateOutcome = generate_run(&example_graph(), &cfg).unwrap();
        let first = out.manifest.samples[0].y_star.clone();
        assert!(out.manifest.samples.iter().any(|s| s.y_star != first));
    }

    #[test]
    fn reembedding_keeps_model_consistent() {
        let mut cfg = small_cfg();
        cfg.reembed_every = 3;
        cfg.alpha = 10.0;
        cfg.t_steps = 50;
        cfg.sample_count = 2;
        let out: GenerateOutcome = generate_run(&example_graph(), &cfg).unwrap();
        // discovery plus a low cadence forces at least one re-embed refit
        assert!(out.kl_trace.len() >= 2, "trace {:?}", out.kl_trace);
        assert_eq!(out.model.k(), out.embedding.points.len());
        assert_eq!(out.model.p(), out.manifest.embedding_p);
        for atom in &out.model.atoms {
            assert!((norm2(atom) - 1.0).abs() < 1e-9);
        }
        let csv = kl_trace_csv(&out.kl_trace);
        assert!(csv.starts_with("atoms,kl\n"));
        assert_eq!(csv.lines().count(), out.kl_trace.len() + 1);
    }

    #[test]
    fn config_json_round_trip_with_defaults() {
        let cfg = GenerateConfig::default();
        assert_eq!(cfg.kappa, 140.0);
        assert_eq!(cfg.kappa_h, 400.0);
        assert_eq!(cfg.alpha, 0.5);
        assert_eq!(cfg.t_steps, 1000);
        assert_eq!(cfg.sample_count, 100);
        // sparse JSON fills everything else from the defaults
        let sparse: GenerateConfig = serde_json::from_str(r#"{"kappa": 9.5, "seed": 7}"#).unwrap();
        assert_eq!(sparse.kappa, 9.5);
        assert_eq!(sparse.seed, 7);
        assert_eq!(sparse.kappa_h, 400.0);
        let text = serde_json::to_string(&sparse).unwrap();
        let back: GenerateConfig = serde_json::from_str(&text).unwrap();
        assert_eq!(back.kappa, 9.5);
        assert_eq!(back.t_steps, 1000);
    }
}
