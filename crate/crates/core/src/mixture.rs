//! Kernel mixture over embedded graph atoms: shared-concentration vMF kernels
//! weighted on the simplex, an optional Dirichlet-process mass for unseen
//! graphs, and simplex weight estimation by mirror descent on a Monte-Carlo
//! KL objective.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Row-chunk size for order-preserving parallel reductions.
const REDUCE_CHUNK: usize = 256;
use crate::graph::{format_edge_list, parse_edge_list, Graph};
use crate::linalg::{dot, norm2};
use crate::scalar::{Real, SampleReal};
use crate::vmf::{vmf_log_density, vmf_log_normalizer, vmf_sample, VmfParams};

#[derive(Clone, Debug, PartialEq)]
pub struct MixtureModel<T = f64> {
    /// K unit-norm atom coordinates on S^{p-1}.
    pub atoms: Vec<Vec<T>>,
    /// Simplex weights over atoms.
    pub pi: Vec<T>,
    /// Shared kernel concentration.
    pub kappa_h: T,
    pub baseline: VmfParams<T>,
    /// Dirichlet-process concentration; zero disables the unseen-graph mass.
    pub alpha: T,
    /// graphs[k] is the graph realized at atom k.
    pub graphs: Vec<Graph>,
}

impl<T: Real> MixtureModel<T> {
    pub fn new(
        atoms: Vec<Vec<T>>,
        pi: Vec<T>,
        kappa_h: T,
        baseline: VmfParams<T>,
        alpha: T,
        graphs: Vec<Graph>,
    ) -> Result<Self> {
        if atoms.is_empty() {
            return Err(Error::input("mixture needs at least one atom"));
        }
        if atoms.len() != pi.len() || atoms.len() != graphs.len() {
            return Err(Error::input(
                "atoms, weights, and graphs must have equal length",
            ));
        }
        let p = baseline.p();
        let mut atoms = atoms;
        for a in atoms.iter_mut() {
            if a.len() != p {
                return Err(Error::input("atom dimension differs from the baseline"));
            }
            let n = norm2(a);
            if (n - T::one()).abs() > T::of(1e-6) {
                return Err(Error::input(format!("atom norm {n} is off the sphere")));
            }
            // renormalize only beyond ULP noise so reloading is bit-stable
            if (n - T::one()).abs() > T::of(1e-12) {
                for v in a.iter_mut() {
                    *v /= n;
                }
            }
        }
        if !(kappa_h > T::zero()) || !kappa_h.is_finite() {
            return Err(Error::input("kappa_h must be positive and finite"));
        }
        if alpha < T::zero() || !alpha.is_finite() {
            return Err(Error::input("alpha must be non-negative and finite"));
        }
        let mut pi = pi;
        let total: T = pi.iter().copied().sum();
        if pi.iter().any(|&w| w < T::zero() || !w.is_finite())
            || (total - T::one()).abs() > T::of(1e-9)
        {
            return Err(Error::input("pi must be non-negative and sum to 1"));
        }
        if (total - T::one()).abs() > T::of(1e-12) {
            for w in pi.iter_mut() {
                *w /= total;
            }
        }
        Ok(MixtureModel {
            atoms,
            pi,
            kappa_h,
            baseline,
            alpha,
            graphs,
        })
    }

    pub fn k(&self) -> usize {
        self.atoms.len()
    }

    pub fn p(&self) -> usize {
        self.baseline.p()
    }
}

/// Exact log inverse surface area of S^{p-1}; the uniform density constant.
pub fn log_uniform_density<T: Real>(p: usize) -> T {
    vmf_log_normalizer(p, T::zero())
}

/// ln pi_k + ln h_k(y) for every atom. Zero-weight atoms yield -inf.
pub fn log_component_scores<T: Real>(model: &MixtureModel<T>, y: &[T]) -> Result<Vec<T>> {
    if y.len() != model.p() {
        return Err(Error::input("point dimension differs from the mixture"));
    }
    let n = norm2(y);
    if (n - T::one()).abs() > T::of(1e-6) {
        return Err(Error::input(format!("point norm {n} is off the sphere")));
    }
    let log_c = vmf_log_normalizer(model.p(), model.kappa_h);
    Ok(model
        .atoms
        .iter()
        .zip(&model.pi)
        .map(|(atom, &w)| {
            if w > T::zero() {
                w.ln() + log_c + model.kappa_h * dot(atom, y)
            } else {
                T::neg_infinity()
            }
        })
        .collect())
}

/// ln of the reserved mass alpha/(K+alpha) times the uniform density; -inf
/// when alpha is zero. Used unnormalized as the score of an unseen graph.
pub fn log_dp_score<T: Real>(model: &MixtureModel<T>) -> T {
    if model.alpha <= T::zero() {
        return T::neg_infinity();
    }
    let k = T::of(model.k() as f64);
    (model.alpha / (k + model.alpha)).ln() + log_uniform_density::<T>(model.p())
}

fn log_sum_exp<T: Real>(terms: &[T]) -> T {
    let mut m = T::neg_infinity();
    for &t in terms {
        if t > m {
            m = t;
        }
    }
    if m == T::neg_infinity() {
        return m;
    }
    let s: T = terms.iter().map(|&t| (t - m).exp()).sum();
    m + s.ln()
}

/// Log mixture density; with `include_dp` the unnormalized DP mass is added.
pub fn mixture_log_density<T: Real>(
    y: &[T],
    model: &MixtureModel<T>,
    include_dp: bool,
) -> Result<T> {
    let mut terms = log_component_scores(model, y)?;
    if include_dp {
        terms.push(log_dp_score(model));
    }
    Ok(log_sum_exp(&terms))
}

/// Monte-Carlo KL(fhat || f) estimator on a fixed proposal sample from the
/// baseline. The weight matrix W[m][k] = h_k(z_m) / f(z_m) is precomputed, so
/// objective and gradient evaluations are linear passes.
pub struct KlEstimator<T = f64> {
    w: Vec<Vec<T>>,
}

impl<T: SampleReal> KlEstimator<T> {
    /// Draws an even number of proposal points (pairs by reflection through
    /// the mean axis, which preserves the baseline density) and tabulates
    /// kernel-to-baseline ratios.
    pub fn new(
        atoms: &[Vec<T>],
        baseline: &VmfParams<T>,
        kappa_h: T,
        m: usize,
        seed: u64,
    ) -> Result<Self> {
        if m < 100 {
            return Err(Error::config("KL estimation needs at least 100 MC samples"));
        }
        let p = baseline.p();
        if atoms.iter().any(|a| a.len() != p) {
            return Err(Error::input("atom dimension differs from the baseline"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pairs = m.div_ceil(2);
        let log_c = vmf_log_normalizer(p, kappa_h);
        let mut points = Vec::with_capacity(pairs * 2);
        for _ in 0..pairs {
            let z = vmf_sample(baseline, &mut rng)?;
            let axis = dot(&baseline.mu, &z);
            let reflected: Vec<T> = baseline
                .mu
                .iter()
                .zip(&z)
                .map(|(&mu_i, &z_i)| T::of(2.0) * axis * mu_i - z_i)
                .collect();
            points.push(z);
            points.push(reflected);
        }
        let w = points
            .par_iter()
            .map(|point| {
                let log_f = vmf_log_density(point, baseline)?;
                Ok(atoms
                    .iter()
                    .map(|a| (log_c + kappa_h * dot(a, point) - log_f).exp())
                    .collect())
            })
            .collect::<Result<Vec<Vec<T>>>>()?;
        Ok(KlEstimator { w })
    }

    pub fn m(&self) -> usize {
        self.w.len()
    }

    /// (1/M) sum_m s_m ln s_m with s_m = sum_k pi_k W[m][k]; the s -> 0 limit
    /// contributes zero. Fixed-size chunks reduced in index order keep the
    /// result identical for any worker count.
    pub fn objective(&self, pi: &[T]) -> T {
        let partials: Vec<T> = self
            .w
            .par_chunks(REDUCE_CHUNK)
            .map(|chunk| {
                let mut acc = T::zero();
                for row in chunk {
                    let s: T = row.iter().zip(pi).map(|(&w, &p)| w * p).sum();
                    if s > T::zero() {
                        acc += s * s.ln();
                    }
                }
                acc
            })
            .collect();
        let mut acc = T::zero();
        for p in partials {
            acc += p;
        }
        acc / T::of(self.m() as f64)
    }

    pub fn gradient(&self, pi: &[T]) -> Vec<T> {
        let k = pi.len();
        let partials: Vec<Vec<T>> = self
            .w
            .par_chunks(REDUCE_CHUNK)
            .map(|chunk| {
                let mut g = vec![T::zero(); k];
                for row in chunk {
                    let s: T = row.iter().zip(pi).map(|(&w, &p)| w * p).sum();
                    if s > T::zero() {
                        let factor = s.ln() + T::one();
                        for (gi, &wi) in g.iter_mut().zip(row) {
                            *gi += wi * factor;
                        }
                    }
                }
                g
            })
            .collect();
        let mut g = vec![T::zero(); k];
        for partial in partials {
            for (gi, pi_val) in g.iter_mut().zip(partial) {
                *gi += pi_val;
            }
        }
        let m = T::of(self.m() as f64);
        for gi in g.iter_mut() {
            *gi /= m;
        }
        g
    }
}

#[derive(Clone, Debug)]
pub struct FitOptions {
    /// Monte-Carlo proposal sample size M; at least 100.
    pub mc_samples: usize,
    pub seed: u64,
    pub max_iter: usize,
    /// Relative objective change that stops the iteration.
    pub rel_tol: f64,
}

impl Default for FitOptions {
    fn default() -> Self {
        FitOptions {
            mc_samples: 5000,
            seed: 0,
            max_iter: 500,
            rel_tol: 1e-9,
        }
    }
}

#[derive(Clone, Debug)]
pub struct FitResult<T = f64> {
    pub pi: Vec<T>,
    /// Accepted objective values, starting at the initial point; guaranteed
    /// non-increasing.
    pub trace: Vec<T>,
}

/// Minimizes the Monte-Carlo KL estimate over the simplex by multiplicative
/// mirror-descent updates with backtracking; initialization pi_k prop f(y_k).
pub fn fit_pi<T: SampleReal>(
    atoms: &[Vec<T>],
    baseline: &VmfParams<T>,
    kappa_h: T,
    opts: &FitOptions,
) -> Result<FitResult<T>> {
    if atoms.is_empty() {
        return Err(Error::input("cannot fit weights for zero atoms"));
    }
    let est = KlEstimator::new(atoms, baseline, kappa_h, opts.mc_samples, opts.seed)?;
    let k = atoms.len();
    // pi0 prop f(y_k), computed via a stabilized softmax of log densities
    let logs: Vec<T> = atoms
        .iter()
        .map(|a| vmf_log_density(a, baseline))
        .collect::<Result<_>>()?;
    let top = logs.iter().copied().fold(T::neg_infinity(), T::max);
    let mut pi: Vec<T> = logs.iter().map(|&l| (l - top).exp()).collect();
    let total: T = pi.iter().copied().sum();
    for w in pi.iter_mut() {
        *w /= total;
    }
    let mut trace = vec![est.objective(&pi)];
    if k == 1 {
        return Ok(FitResult { pi, trace });
    }
    for t in 0..opts.max_iter {
        let g = est.gradient(&pi);
        let mut eta = T::of(0.5 / (1.0 + t as f64));
        let current = *trace.last().expect("trace is non-empty");
        let mut improved = false;
        for _ in 0..40 {
            let mut logit: Vec<T> = pi
                .iter()
                .zip(&g)
                .map(|(&w, &gi)| {
                    if w > T::zero() {
                        w.ln() - eta * gi
                    } else {
                        T::neg_infinity()
                    }
                })
                .collect();
            let m = logit.iter().copied().fold(T::neg_infinity(), T::max);
            for l in logit.iter_mut() {
                *l -= m;
            }
            let mut cand: Vec<T> = logit.iter().map(|&l| l.exp()).collect();
            let z: T = cand.iter().copied().sum();
            for w in cand.iter_mut() {
                *w /= z;
            }
            let value = est.objective(&cand);
            if value <= current {
                pi = cand;
                trace.push(value);
                improved = true;
                break;
            }
            eta /= T::of(2.0);
        }
        if !improved {
            break;
        }
        let len = trace.len();
        let prev = trace[len - 2];
        let now = trace[len - 1];
        if (prev - now).abs() <= T::of(opts.rel_tol) * prev.abs().max(T::one()) {
            break;
        }
    }
    Ok(FitResult { pi, trace })
}

/// Serialized form: graphs are referenced by index into a sibling edge-list
/// array so the model file stays numeric.
#[derive(Serialize, Deserialize)]
struct MixtureJson<T> {
    atoms: Vec<Vec<T>>,
    pi: Vec<T>,
    kappa_h: T,
    baseline: VmfParams<T>,
    alpha: T,
    graph_refs: Vec<usize>,
}

impl<T: Real + Serialize + for<'de> Deserialize<'de>> MixtureModel<T> {
    /// Returns (model JSON, sibling graph JSON): the sibling is an array of
    /// edge-list strings indexed by `graph_refs`.
    pub fn to_json_parts(&self) -> (String, String) {
        let body = MixtureJson {
            atoms: self.atoms.clone(),
            pi: self.pi.clone(),
            kappa_h: self.kappa_h,
            baseline: self.baseline.clone(),
            alpha: self.alpha,
            graph_refs: (0..self.k()).collect(),
        };
        let graphs: Vec<String> = self.graphs.iter().map(format_edge_list).collect();
        (
            serde_json::to_string_pretty(&body).expect("mixture serializes"),
            serde_json::to_string_pretty(&graphs).expect("graph list serializes"),
        )
    }

    pub fn from_json_parts(model_text: &str, graphs_text: &str) -> Result<Self> {
        let body: MixtureJson<T> = serde_json::from_str(model_text)
            .map_err(|e| Error::input(format!("bad mixture JSON: {e}")))?;
        let edge_lists: Vec<String> = serde_json::from_str(graphs_text)
            .map_err(|e| Error::input(format!("bad graph list JSON: {e}")))?;
        let mut graphs = Vec::with_capacity(body.graph_refs.len());
        for &r in &body.graph_refs {
            let text = edge_lists
                .get(r)
                .ok_or_else(|| Error::input(format!("graph reference {r} out of range")))?;
            graphs.push(parse_edge_list(text, None)?);
        }
        MixtureModel::new(
            body.atoms,
            body.pi,
            body.kappa_h,
            body.baseline,
            body.alpha,
            graphs,
        )
    }
}
