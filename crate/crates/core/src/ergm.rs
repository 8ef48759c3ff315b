//! Exact ERGM distributions over enumerated feature spaces: log-space pmf,
//! maximum-likelihood fitting, weighted-mode search, extended hulls with
//! log-weights, and degeneracy classification.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::hull::{classify_hull, rational_from_f64};
use crate::linalg::solve_dense;
use crate::space::FeatureSpace;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ErgmParams {
    pub theta: Vec<f64>,
}

impl ErgmParams {
    pub fn new(theta: Vec<f64>) -> Result<Self> {
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(Error::input("theta entries must be finite"));
        }
        Ok(ErgmParams { theta })
    }

    pub fn zeros(d: usize) -> Self {
        ErgmParams {
            theta: vec![0.0; d],
        }
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ErgmFit {
    pub theta_hat: ErgmParams,
    pub converged: bool,
    /// sup-norm of E[x] - x* at the returned parameters
    pub mean_gap: f64,
    /// parameter norm left the budget, or the iteration cap was hit
    pub diverging: bool,
    pub log_z: f64,
    pub iterations: u32,
}

#[derive(Clone, Copy, Debug)]
pub struct MleOptions {
    pub grad_tol: f64,
    pub max_iter: u32,
    pub theta_budget: f64,
}

impl Default for MleOptions {
    fn default() -> Self {
        MleOptions {
            grad_tol: 1e-6,
            max_iter: 500,
            theta_budget: 50.0,
        }
    }
}

/// Support flattened to parallel arrays in deterministic (BTreeMap) order.
struct Prepared {
    keys: Vec<FeatureVector>,
    xs: Vec<Vec<f64>>,
    lnw: Vec<f64>,
    d: usize,
}

fn prepare(space: &FeatureSpace) -> Prepared {
    let mut keys = Vec::with_capacity(space.support.len());
    let mut xs = Vec::with_capacity(space.support.len());
    let mut lnw = Vec::with_capacity(space.support.len());
    for (x, &w) in &space.support {
        keys.push(x.clone());
        xs.push(x.as_f64());
        lnw.push((w as f64).ln());
    }
    Prepared {
        keys,
        xs,
        lnw,
        d: space.spec.d(),
    }
}

fn check_dim(p: &Prepared, theta: &[f64]) -> Result<()> {
    if theta.len() != p.d {
        return Err(Error::input(format!(
            "theta dimension {} does not match feature dimension {}",
            theta.len(),
            p.d
        )));
    }
    Ok(())
}

/// log Z and per-point probabilities, max-subtracted.
fn log_z_probs(p: &Prepared, theta: &[f64]) -> (f64, Vec<f64>) {
    let scores: Vec<f64> = p
        .xs
        .iter()
        .zip(&p.lnw)
        .map(|(x, lw)| lw + x.iter().zip(theta).map(|(a, b)| a * b).sum::<f64>())
        .collect();
    let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let sum: f64 = scores.iter().map(|s| (s - m).exp()).sum();
    let log_z = m + sum.ln();
    let probs = scores.iter().map(|s| (s - log_z).exp()).collect();
    (log_z, probs)
}

fn mean_of(p: &Prepared, probs: &[f64]) -> Vec<f64> {
    let mut mean = vec![0.0; p.d];
    for (x, &pr) in p.xs.iter().zip(probs) {
        for k in 0..p.d {
            mean[k] += pr * x[k];
        }
    }
    mean
}

fn cov_of(p: &Prepared, probs: &[f64], mean: &[f64]) -> Vec<f64> {
    let d = p.d;
    let mut cov = vec![0.0; d * d];
    for (x, &pr) in p.xs.iter().zip(probs) {
        for a in 0..d {
            let da = x[a] - mean[a];
            for b in 0..d {
                cov[a * d + b] += pr * da * (x[b] - mean[b]);
            }
        }
    }
    cov
}

/// P(x) proportional to w(x) exp<theta, x>, normalized in log space.
pub fn ergm_pmf(space: &FeatureSpace, params: &ErgmParams) -> Result<BTreeMap<FeatureVector, f64>> {
    let p = prepare(space);
    check_dim(&p, &params.theta)?;
    if params.theta.iter().any(|t| !t.is_finite()) {
        return Err(Error::input("theta entries must be finite"));
    }
    let (_, probs) = log_z_probs(&p, &params.theta);
    Ok(p.keys.into_iter().zip(probs).collect())
}

/// Exact existence check for feature dimension 1 or 2: the MLE exists iff
/// the target lies in the relative interior of the support's convex hull.
/// None when the dimension is beyond the exact-geometry budget.
fn target_in_relative_interior(space: &FeatureSpace, x_star: &[f64]) -> Result<Option<bool>> {
    let d = space.spec.d();
    match d {
        1 => {
            let lo = *space.support.keys().next().unwrap().0.first().unwrap() as f64;
            let hi = *space.support.keys().next_back().unwrap().0.first().unwrap() as f64;
            Ok(Some(x_star[0] > lo && x_star[0] < hi))
        }
        2 => {
            // classify the union of the support and the target; the target is
            // in the relative interior iff it is off the union's boundary
            let mut rats: Vec<Vec<_>> = space
                .support
                .keys()
                .map(|x| {
                    x.0.iter()
                        .map(|&v| rational_from_f64(v as f64))
                        .collect::<Result<Vec<_>>>()
                })
                .collect::<Result<Vec<_>>>()?;
            rats.push(
                x_star
                    .iter()
                    .map(|&v| rational_from_f64(v))
                    .collect::<Result<Vec<_>>>()?,
            );
            let c = classify_hull(&rats)?;
            let target_idx = rats.len() - 1;
            Ok(Some(c.boundary.binary_search(&target_idx).is_err()))
        }
        _ => Ok(None),
    }
}

/// Mean-matching MLE on the enumerated space: Newton steps on the exact
/// log-likelihood with a backtracking gradient-ascent fallback.
///
/// For feature dimension at most 2 the existence of a finite MLE is decided
/// exactly; boundary and exterior targets come back flagged as diverging.
pub fn ergm_mle_real(space: &FeatureSpace, x_star: &[f64], opts: MleOptions) -> Result<ErgmFit> {
    let p = prepare(space);
    check_dim(&p, x_star)?;
    if x_star.iter().any(|v| !v.is_finite()) {
        return Err(Error::input("target entries must be finite"));
    }
    let interior = target_in_relative_interior(space, x_star)?;
    let d = p.d;
    let loglik = |theta: &[f64], log_z: f64| -> f64 {
        x_star.iter().zip(theta).map(|(a, b)| a * b).sum::<f64>() - log_z
    };
    let mut theta = vec![0.0; d];
    let mut diverging = false;
    let mut converged = false;
    let mut iterations = 0u32;
    let (mut log_z, mut probs) = log_z_probs(&p, &theta);
    let mut mean = mean_of(&p, &probs);
    let mut gap = gap_inf(&mean, x_star);
    while iterations < opts.max_iter {
        iterations += 1;
        let grad: Vec<f64> = (0..d).map(|k| x_star[k] - mean[k]).collect();
        if grad.iter().all(|g| g.abs() <= opts.grad_tol) {
            converged = true;
            break;
        }
        let cov = cov_of(&p, &probs, &mean);
        let base_ll = loglik(&theta, log_z);
        let newton = solve_dense(d, cov, grad.clone());
        let mut moved = false;
        if let Some(step) = newton {
            if step.iter().all(|s| s.is_finite()) {
                let mut scale = 1.0f64;
                for _ in 0..40 {
                    let cand: Vec<f64> = (0..d).map(|k| theta[k] + scale * step[k]).collect();
                    let (lz, _) = log_z_probs(&p, &cand);
                    if loglik(&cand, lz) > base_ll {
                        theta = cand;
                        moved = true;
                        break;
                    }
                    scale *= 0.5;
                }
            }
        }
        if !moved {
            // gradient ascent with Armijo backtracking on the exact objective
            let g2: f64 = grad.iter().map(|g| g * g).sum();
            let mut eta = 1.0f64;
            for _ in 0..60 {
                let cand: Vec<f64> = (0..d).map(|k| theta[k] + eta * grad[k]).collect();
                let (lz, _) = log_z_probs(&p, &cand);
                if loglik(&cand, lz) >= base_ll + 1e-4 * eta * g2 {
                    theta = cand;
                    moved = true;
                    break;
                }
                eta *= 0.5;
            }
        }
        if !moved {
            // no ascent step found at machine precision; treat as stalled
            break;
        }
        let refreshed = log_z_probs(&p, &theta);
        log_z = refreshed.0;
        probs = refreshed.1;
        mean = mean_of(&p, &probs);
        gap = gap_inf(&mean, x_star);
        if theta.iter().any(|t| t.abs() > opts.theta_budget) {
            diverging = true;
            break;
        }
    }
    if !converged && iterations >= opts.max_iter {
        diverging = true;
    }
    if interior == Some(false) {
        // proven non-existence: any finite parameters are a truncation artifact
        diverging = true;
        converged = false;
    }
    Ok(ErgmFit {
        theta_hat: ErgmParams { theta },
        converged,
        mean_gap: gap,
        diverging,
        log_z,
        iterations,
    })
}

pub fn ergm_mle(space: &FeatureSpace, x_star: &FeatureVector, opts: MleOptions) -> Result<ErgmFit> {
    ergm_mle_real(space, &x_star.as_f64(), opts)
}

fn gap_inf(mean: &[f64], target: &[f64]) -> f64 {
    mean.iter()
        .zip(target)
        .map(|(m, t)| (m - t).abs())
        .fold(0.0, f64::max)
}

/// All maximizers of ln w(x) + <theta, x>, ties within 1e-12 in log space.
pub fn ergm_mode(space: &FeatureSpace, params: &ErgmParams) -> Result<Vec<FeatureVector>> {
    let p = prepare(space);
    check_dim(&p, &params.theta)?;
    let scores: Vec<f64> = p
        .xs
        .iter()
        .zip(&p.lnw)
        .map(|(x, lw)| {
            lw + x
                .iter()
                .zip(&params.theta)
                .map(|(a, b)| a * b)
                .sum::<f64>()
        })
        .collect();
    let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(p.keys
        .into_iter()
        .zip(scores)
        .filter(|(_, s)| m - s <= 1e-12)
        .map(|(k, _)| k)
        .collect())
}

#[derive(Clone, Debug)]
pub struct ExtendedFeatureSet {
    /// (feature value, ln weight) in deterministic support order.
    pub points: Vec<(FeatureVector, f64)>,
    pub hull_vertices: Vec<usize>,
    pub boundary: Vec<usize>,
    pub affine_dim: usize,
}

impl ExtendedFeatureSet {
    pub fn index_of(&self, x: &FeatureVector) -> Option<usize> {
        self.points.iter().position(|(p, _)| p == x)
    }

    pub fn is_boundary(&self, x: &FeatureVector) -> Option<bool> {
        self.index_of(x).map(|i| self.boundary.binary_search(&i).is_ok())
    }

    pub fn is_vertex(&self, x: &FeatureVector) -> Option<bool> {
        self.index_of(x)
            .map(|i| self.hull_vertices.binary_search(&i).is_ok())
    }
}

/// Exact hull classification of {(x, ln w(x))}; feature dimension 1 or 2 only.
pub fn extended_hull(space: &FeatureSpace) -> Result<ExtendedFeatureSet> {
    let d = space.spec.d();
    if d != 1 && d != 2 {
        return Err(Error::unsupported_dimension(format!(
            "extended hull supports feature dimension 1 or 2, got {d}"
        )));
    }
    let mut points = Vec::with_capacity(space.support.len());
    let mut rats = Vec::with_capacity(space.support.len());
    for (x, &w) in &space.support {
        let lnw = (w as f64).ln();
        let mut coords: Vec<_> = x
            .0
            .iter()
            .map(|&v| rational_from_f64(v as f64))
            .collect::<Result<Vec<_>>>()?;
        coords.push(rational_from_f64(lnw)?);
        points.push((x.clone(), lnw));
        rats.push(coords);
    }
    let c = classify_hull(&rats)?;
    Ok(ExtendedFeatureSet {
        points,
        hull_vertices: c.vertices,
        boundary: c.boundary,
        affine_dim: c.affine_dim,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct DegeneracyReport {
    pub x_star: FeatureVector,
    /// (x*, ln w(x*)) lies on the relative boundary of the extended hull
    pub extended_boundary: bool,
    pub extended_vertex: bool,
    pub fit: ErgmFit,
    pub mode: Vec<FeatureVector>,
    pub mass_at_x_star: f64,
    pub mass_at_mode: f64,
    /// diverging MLE (type I)
    pub type1_diverging: bool,
    /// mode set is not {x*} and the mode carries more mass than x*
    pub type2_degenerate: bool,
}

pub fn degeneracy_report(space: &FeatureSpace, x_star: &FeatureVector) -> Result<DegeneracyReport> {
    if !space.support.contains_key(x_star) {
        return Err(Error::input(format!(
            "target feature {x_star} is not realizable in this space"
        )));
    }
    let ext = extended_hull(space)?;
    let extended_boundary = ext.is_boundary(x_star).unwrap_or(false);
    let extended_vertex = ext.is_vertex(x_star).unwrap_or(false);
    let fit = ergm_mle(space, x_star, MleOptions::default())?;
    let mode = ergm_mode(space, &fit.theta_hat)?;
    let pmf = ergm_pmf(space, &fit.theta_hat)?;
    let mass_at_x_star = pmf.get(x_star).copied().unwrap_or(0.0);
    let mass_at_mode = mode
        .iter()
        .filter_map(|m| pmf.get(m).copied())
        .fold(0.0, f64::max);
    let mode_is_exactly_target = mode.len() == 1 && mode[0] == *x_star;
    let type2_degenerate = !mode_is_exactly_target && mass_at_mode > mass_at_x_star;
    Ok(DegeneracyReport {
        x_star: x_star.clone(),
        extended_boundary,
        extended_vertex,
        fit: fit.clone(),
        mode,
        mass_at_x_star,
        mass_at_mode,
        type1_diverging: fit.diverging,
        type2_degenerate,
    })
}
