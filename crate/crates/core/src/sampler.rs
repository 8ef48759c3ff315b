//! Graph generation: direct multinomial draws on enumerated spaces,
//! Metropolis-Hastings toward a drawn spherical target, and the
//! Dirichlet-process variant that appends atoms for newly accepted graphs.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::embed::{out_of_sample, Embedding};
use crate::error::{Error, Result};
use crate::features::{feature_vector, FeatureSpec};
use crate::graph::{index_pair, pair_count, toggle_edge, Graph};
use crate::mixture::{
    fit_pi, log_component_scores, log_dp_score, FitOptions, MixtureModel,
};
use crate::scalar::{Real, SampleReal};
use crate::vmf::vmf_sample;

/// Snapshot of a finished chain. `occupancy[k]` counts the steps spent at
/// atom k (indices follow the model's atom order, including atoms appended
/// mid-run by the Dirichlet-process variant).
#[derive(Clone, Debug)]
pub struct ChainState<T = f64> {
    pub current: Graph,
    pub t: u64,
    pub accepted: u64,
    pub y_star: Vec<T>,
    pub rng_state: ChaCha8Rng,
    pub occupancy: Vec<u64>,
}

/// Bookkeeping for a Dirichlet-process run.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DpRunReport {
    pub initial_k: usize,
    pub final_k: usize,
    pub new_graphs: Vec<Graph>,
    pub refit_count: usize,
    pub samples: Vec<Graph>,
}

impl DpRunReport {
    /// Folds a later run's report into this one: atom counts advance, new
    /// graphs and samples concatenate.
    pub fn merge(&mut self, later: &DpRunReport) {
        self.final_k = later.final_k;
        self.new_graphs.extend(later.new_graphs.iter().cloned());
        self.refit_count += later.refit_count;
        self.samples.extend(later.samples.iter().cloned());
    }
}

#[derive(Clone, Debug, Default)]
pub struct MhOptions<T = f64> {
    /// Fixed spherical target; drawn from the baseline when absent.
    pub y_star: Option<Vec<T>>,
    /// Fixed initial graph; a 1-or-2 toggle perturbation of the example when
    /// absent.
    pub init: Option<Graph>,
}

#[derive(Clone, Debug)]
pub struct DpOptions<T = f64> {
    /// Feature map used to place newly discovered graphs on the sphere.
    pub spec: FeatureSpec,
    pub y_star: Option<Vec<T>>,
    pub init: Option<Graph>,
    /// Number of newly appended atoms that triggers a weight refit; 0 turns
    /// refitting off.
    pub refit_every: usize,
    pub fit: FitOptions,
}

#[derive(Clone, Debug)]
pub struct DpOutcome<T = f64> {
    pub final_graph: Graph,
    pub state: ChainState<T>,
    pub model: MixtureModel<T>,
    pub embedding: Embedding<T>,
    pub report: DpRunReport,
    /// (atom count, final KL objective) of each refit, in order.
    pub kl_values: Vec<(usize, T)>,
}

/// Exact multinomial sampling over an enumerated atom set.
pub fn direct_sample<T: SampleReal>(
    graphs: &[Graph],
    pi: &[T],
    count: usize,
    seed: u64,
) -> Result<Vec<Graph>> {
    if graphs.is_empty() || graphs.len() != pi.len() {
        return Err(Error::input("graphs and weights must align and be non-empty"));
    }
    let total: T = pi.iter().copied().sum();
    if pi.iter().any(|&w| w < T::zero()) || (total - T::one()).abs() > T::of(1e-9) {
        return Err(Error::input("weights must be a normalized distribution"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let u: T = T::open01(&mut rng);
        let mut acc = T::zero();
        let mut pick = graphs.len() - 1;
        for (k, &w) in pi.iter().enumerate() {
            acc += w;
            if u < acc {
                pick = k;
                break;
            }
        }
        out.push(graphs[pick].clone());
    }
    Ok(out)
}

/// Uniformly toggles one of the C(n,2) pairs.
pub fn propose<R: Rng + ?Sized>(g: &Graph, rng: &mut R) -> Graph {
    let n = g.n();
    let k = rng.gen_range(0..pair_count(n));
    let (i, j) = index_pair(n, k);
    toggle_edge(g, i, j).expect("indices from index_pair are valid")
}

/// MH acceptance probability min(1, exp(score_to - score_from)).
pub fn acceptance_probability<T: Real>(score_from: T, score_to: T) -> T {
    if score_to >= score_from {
        T::one()
    } else {
        (score_to - score_from).exp()
    }
}

/// 1-or-2 uniform pair toggles of the example graph.
pub(crate) fn perturbed_init<R: Rng + ?Sized>(example: &Graph, rng: &mut R) -> Graph {
    let toggles = rng.gen_range(1..=2u32);
    let mut g = example.clone();
    for _ in 0..toggles {
        g = propose(&g, rng);
    }
    g
}

fn atom_index(model: &MixtureModel<impl Real>) -> HashMap<Graph, usize> {
    model
        .graphs
        .iter()
        .enumerate()
        .map(|(k, g)| (g.clone(), k))
        .collect()
}

fn require_same_n(example: &Graph, model: &MixtureModel<impl Real>) -> Result<()> {
    if model.graphs.iter().any(|g| g.n() != example.n()) {
        return Err(Error::input(
            "model graphs and example graph disagree on node count",
        ));
    }
    Ok(())
}

/// Metropolis-Hastings on a fully enumerated atom set: draws the target
/// y* from the baseline (unless fixed), starts from a perturbed example, and
/// runs `t` steps against the posterior scores pi_k h_k(y*). Proposals
/// leaving the atom set are a consistency error.
pub fn mh_sample<T: SampleReal>(
    model: &MixtureModel<T>,
    example: &Graph,
    t: u64,
    seed: u64,
    opts: &MhOptions<T>,
) -> Result<(Graph, ChainState<T>)> {
    if t < 1 {
        return Err(Error::input("chain length must be at least 1"));
    }
    require_same_n(example, model)?;
    let index = atom_index(model);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y_star = match &opts.y_star {
        Some(y) => y.clone(),
        None => vmf_sample(&model.baseline, &mut rng)?,
    };
    let scores = log_component_scores(model, &y_star)?;
    let mut current = match &opts.init {
        Some(g) => g.clone(),
        None => perturbed_init(example, &mut rng),
    };
    let mut current_idx = *index.get(&current).ok_or_else(|| {
        Error::input("initial graph has no atom in the enumerated model")
    })?;
    let mut occupancy = vec![0u64; model.k()];
    let mut accepted = 0u64;
    for _ in 0..t {
        let cand = propose(&current, &mut rng);
        let u: T = T::open01(&mut rng);
        let cand_idx = *index.get(&cand).ok_or_else(|| {
            Error::input(
                "proposal left the atom set: the model does not enumerate every reachable graph",
            )
        })?;
        if u < acceptance_probability(scores[current_idx], scores[cand_idx]) {
            current = cand;
            current_idx = cand_idx;
            accepted += 1;
        }
        occupancy[current_idx] += 1;
    }
    let state = ChainState {
        current: current.clone(),
        t,
        accepted,
        y_star,
        rng_state: rng,
        occupancy,
    };
    Ok((current, state))
}

/// Dirichlet-process chain: proposals outside the atom set are scored with
/// the reserved mass alpha/(K+alpha) u_p; accepted new graphs are placed by
/// out-of-sample embedding and appended with a provisional weight of
/// alpha/(K+alpha), with full weight refits every `refit_every` new atoms.
pub fn mcmc_dp_sample<T: SampleReal>(
    model: &MixtureModel<T>,
    embedding: &Embedding<T>,
    example: &Graph,
    t: u64,
    seed: u64,
    opts: &DpOptions<T>,
) -> Result<DpOutcome<T>> {
    if t < 1 {
        return Err(Error::input("chain length must be at least 1"));
    }
    require_same_n(example, model)?;
    if embedding.points.len() != model.k() {
        return Err(Error::input(
            "embedding and mixture disagree on the atom count",
        ));
    }
    let mut model = model.clone();
    let mut embedding = embedding.clone();
    let mut index = atom_index(&model);
    let initial_k = model.k();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let y_star = match &opts.y_star {
        Some(y) => y.clone(),
        None => vmf_sample(&model.baseline, &mut rng)?,
    };
    let mut scores = log_component_scores(&model, &y_star)?;
    let log_c = crate::vmf::vmf_log_normalizer(model.p(), model.kappa_h);
    let mut current = match &opts.init {
        Some(g) => g.clone(),
        None => perturbed_init(example, &mut rng),
    };
    // the starting point may itself be unseen; give it an atom up front
    let mut occupancy = vec![0u64; model.k()];
    let mut new_graphs: Vec<Graph> = Vec::new();
    let mut kl_values: Vec<(usize, T)> = Vec::new();
    let mut refit_count = 0usize;
    let mut new_since_refit = 0usize;

    let append_atom = |g: &Graph,
                           model: &mut MixtureModel<T>,
                           embedding: &mut Embedding<T>,
                           index: &mut HashMap<Graph, usize>,
                           scores: &mut Vec<T>,
                           occupancy: &mut Vec<u64>,
                           new_graphs: &mut Vec<Graph>|
     -> Result<usize> {
        let x = feature_vector(g, &opts.spec)?;
        let placed = out_of_sample(embedding, &x)?;
        let k_old = T::of(model.k() as f64);
        let w_new = model.alpha / (k_old + model.alpha);
        let keep = T::one() - w_new;
        for w in model.pi.iter_mut() {
            *w *= keep;
        }
        for s in scores.iter_mut() {
            *s += keep.ln();
        }
        model.pi.push(w_new);
        model.atoms.push(placed.point.clone());
        model.graphs.push(g.clone());
        embedding.points.push(placed.point.clone());
        embedding.source_features.push(x);
        let score = w_new.ln() + log_c + model.kappa_h * crate::linalg::dot(&placed.point, &y_star);
        scores.push(score);
        occupancy.push(0);
        new_graphs.push(g.clone());
        let idx = model.k() - 1;
        index.insert(g.clone(), idx);
        Ok(idx)
    };

    let mut current_idx = match index.get(&current) {
        Some(&k) => k,
        None => {
            if model.alpha <= T::zero() {
                return Err(Error::input(
                    "initial graph has no atom and alpha is zero; it can never be scored",
                ));
            }
            let idx = append_atom(
                &current,
                &mut model,
                &mut embedding,
                &mut index,
                &mut scores,
                &mut occupancy,
                &mut new_graphs,
            )?;
            new_since_refit += 1;
            idx
        }
    };
    let mut accepted = 0u64;
    for _ in 0..t {
        let cand = propose(&current, &mut rng);
        let u: T = T::open01(&mut rng);
        let cand_idx = index.get(&cand).copied();
        let cand_score = match cand_idx {
            Some(k) => scores[k],
            None => log_dp_score(&model),
        };
        if u < acceptance_probability(scores[current_idx], cand_score) {
            current_idx = match cand_idx {
                Some(k) => k,
                None => {
                    let idx = append_atom(
                        &cand,
                        &mut model,
                        &mut embedding,
                        &mut index,
                        &mut scores,
                        &mut occupancy,
                        &mut new_graphs,
                    )?;
                    new_since_refit += 1;
                    idx
                }
            };
            current = cand;
            accepted += 1;
            if opts.refit_every > 0 && new_since_refit >= opts.refit_every {
                let fit = fit_pi(&model.atoms, &model.baseline, model.kappa_h, &opts.fit)?;
                model.pi = fit.pi;
                kl_values.push((model.k(), *fit.trace.last().expect("trace is non-empty")));
                scores = log_component_scores(&model, &y_star)?;
                refit_count += 1;
                new_since_refit = 0;
            }
        }
        occupancy[current_idx] += 1;
    }
    let report = DpRunReport {
        initial_k,
        final_k: model.k(),
        new_graphs,
        refit_count,
        samples: vec![current.clone()],
    };
    let state = ChainState {
        current: current.clone(),
        t,
        accepted,
        y_star,
        rng_state: rng,
        occupancy,
    };
    Ok(DpOutcome {
        final_graph: current,
        state,
        model,
        embedding,
        report,
        kl_values,
    })
}
