//! Spherical multidimensional scaling: a radius search drives the smallest
//! Gram eigenvalue toward zero, eigendecomposition yields coordinates on the
//! unit sphere, and new points are placed by a least-squares fit against the
//! existing atoms.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::linalg::{jacobi_eigh, min_eigenvalue_lanczos, norm2, solve_dense, top_eigh_lanczos, Eigh};
use crate::scalar::Real;

/// Symmetric non-negative dissimilarities with zero diagonal.
#[derive(Clone, Debug, PartialEq)]
pub struct Dissimilarity<T = f64> {
    d: Vec<Vec<T>>,
}

impl<T: Real> Dissimilarity<T> {
    pub fn new(d: Vec<Vec<T>>) -> Result<Self> {
        let k = d.len();
        if k < 2 {
            return Err(Error::input("dissimilarity matrix needs at least 2 points"));
        }
        for (i, row) in d.iter().enumerate() {
            if row.len() != k {
                return Err(Error::input("dissimilarity matrix must be square"));
            }
            if row[i] != T::zero() {
                return Err(Error::input("dissimilarity diagonal must be zero"));
            }
            for (j, &v) in row.iter().enumerate() {
                if !v.is_finite() || v < T::zero() {
                    return Err(Error::input("dissimilarities must be finite non-negative"));
                }
                if v != d[j][i] {
                    return Err(Error::input("dissimilarity matrix must be symmetric"));
                }
            }
        }
        Ok(Dissimilarity { d })
    }

    pub fn k(&self) -> usize {
        self.d.len()
    }

    pub fn rows(&self) -> &[Vec<T>] {
        &self.d
    }

    pub fn max_entry(&self) -> T {
        let mut m = T::zero();
        for row in &self.d {
            for &v in row {
                if v > m {
                    m = v;
                }
            }
        }
        m
    }
}

/// Euclidean distance between two feature vectors of equal dimension.
pub fn feature_distance<T: Real>(a: &FeatureVector, b: &FeatureVector) -> Result<T> {
    if a.0.len() != b.0.len() {
        return Err(Error::input(format!(
            "feature dimension mismatch: {} vs {}",
            a.0.len(),
            b.0.len()
        )));
    }
    let mut acc = 0.0f64;
    for (&x, &y) in a.0.iter().zip(&b.0) {
        let diff = x as i128 - y as i128;
        let diff = diff as f64;
        acc += diff * diff;
    }
    Ok(T::of(acc.sqrt()))
}

/// Pairwise Euclidean distances; requires at least two distinct features.
pub fn dissimilarity_matrix<T: Real>(features: &[FeatureVector]) -> Result<Dissimilarity<T>> {
    if features.len() < 2 {
        return Err(Error::input("need at least 2 feature vectors"));
    }
    if features.iter().all(|f| f == &features[0]) {
        return Err(Error::input(
            "all feature vectors are identical: dissimilarities are degenerate",
        ));
    }
    let k = features.len();
    let mut d = vec![vec![T::zero(); k]; k];
    for i in 0..k {
        for j in (i + 1)..k {
            let v = feature_distance(&features[i], &features[j])?;
            d[i][j] = v;
            d[j][i] = v;
        }
    }
    Dissimilarity::new(d)
}

/// Z_ij = r^2 cos(d_ij / r); r must keep every angle within [0, pi].
pub fn gram_from_radius<T: Real>(d: &Dissimilarity<T>, r: T) -> Result<Vec<T>> {
    let bound = d.max_entry() / T::PI();
    if r < bound * (T::one() - T::of(1e-12)) {
        return Err(Error::input(format!(
            "radius {r} is below the angular feasibility bound {bound}"
        )));
    }
    let k = d.k();
    let r2 = r * r;
    let mut z = vec![T::zero(); k * k];
    for i in 0..k {
        z[i * k + i] = r2;
        for j in (i + 1)..k {
            let v = r2 * (d.rows()[i][j] / r).cos();
            z[i * k + j] = v;
            z[j * k + i] = v;
        }
    }
    Ok(z)
}

/// Above this size the radius search tracks the smallest eigenvalue with
/// Lanczos instead of a full Jacobi decomposition.
const DENSE_EIG_LIMIT: usize = 128;

fn min_eigenvalue<T: Real>(k: usize, z: &[T]) -> T {
    if k <= DENSE_EIG_LIMIT {
        *jacobi_eigh(k, z)
            .values
            .last()
            .expect("matrix is non-empty")
    } else {
        min_eigenvalue_lanczos(k, z, 120, 0x5eed)
    }
}

fn top_eigh<T: Real>(k: usize, z: &[T], want: usize) -> Eigh<T> {
    if k <= DENSE_EIG_LIMIT {
        jacobi_eigh(k, z)
    } else {
        top_eigh_lanczos(k, z, want, 160.max(want * 8), 0x5eed)
    }
}

fn radius_objective<T: Real>(d: &Dissimilarity<T>, r: T) -> T {
    let z = gram_from_radius(d, r).expect("radius chosen within the feasible bracket");
    min_eigenvalue(d.k(), &z).abs()
}

/// Minimizes |lambda_min(Z(r))| over [max d / pi, 10 max d] by a coarse grid
/// plus golden-section refinement; ties resolve toward the smaller radius.
pub fn optimal_radius<T: Real>(d: &Dissimilarity<T>) -> Result<T> {
    let max_d = d.max_entry();
    if max_d <= T::zero() {
        return Err(Error::numerical(
            "radius search bracket collapsed: all dissimilarities are zero",
        ));
    }
    let r_lo = max_d / T::PI();
    let r_hi = T::of(10.0) * max_d;
    Ok(search_radius(d, r_lo, r_hi, 256))
}

/// Refines a radius around a previous estimate with a narrow scan; a minimum
/// pressing against the local bracket falls back to the full search.
pub fn optimal_radius_near<T: Real>(d: &Dissimilarity<T>, r0: T) -> Result<T> {
    let max_d = d.max_entry();
    if max_d <= T::zero() {
        return Err(Error::numerical(
            "radius search bracket collapsed: all dissimilarities are zero",
        ));
    }
    let floor = max_d / T::PI();
    if !(r0 > floor) {
        return optimal_radius(d);
    }
    let lo = (T::of(0.7) * r0).max(floor);
    let hi = T::of(1.5) * r0;
    let r = search_radius(d, lo, hi, 32);
    let margin = T::of(0.02) * (hi - lo);
    if r - lo <= margin || hi - r <= margin {
        return optimal_radius(d);
    }
    Ok(r)
}

fn search_radius<T: Real>(d: &Dissimilarity<T>, r_lo: T, r_hi: T, grid: usize) -> T {
    let step = (r_hi - r_lo) / T::of((grid - 1) as f64);
    let mut best_i = 0usize;
    let mut best_f = T::infinity();
    for i in 0..grid {
        let r = r_lo + step * T::of(i as f64);
        let f = radius_objective(d, r);
        if f < best_f {
            best_f = f;
            best_i = i;
        }
    }
    let mut a = r_lo + step * T::of(best_i.saturating_sub(1) as f64);
    let mut b = r_lo + step * T::of((best_i + 1).min(grid - 1) as f64);
    let phi = T::of(0.618_033_988_749_894_9);
    let mut c = b - phi * (b - a);
    let mut e = a + phi * (b - a);
    let mut fc = radius_objective(d, c);
    let mut fe = radius_objective(d, e);
    // termination floor respects the scalar's precision so f32 still converges
    let rel_tol = T::of(1e-10).max(T::of(8.0) * T::epsilon());
    while b - a > rel_tol * b {
        if fc <= fe {
            b = e;
            e = c;
            fe = fc;
            c = b - phi * (b - a);
            fc = radius_objective(d, c);
        } else {
            a = c;
            c = e;
            fc = fe;
            e = a + phi * (b - a);
            fe = radius_objective(d, e);
        }
    }
    // smallest radius among the final candidates wins ties
    let mut best = (radius_objective(d, a), a);
    for r in [c, e, b] {
        let f = radius_objective(d, r);
        if f < best.0 {
            best = (f, r);
        }
    }
    best.1
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Embedding<T = f64> {
    /// K unit rows in R^p.
    pub points: Vec<Vec<T>>,
    pub p: usize,
    pub radius: T,
    pub source_features: Vec<FeatureVector>,
    /// Top-p eigenvalues of the normalized Gram, negatives clamped to zero.
    pub eigen_spectrum: Vec<T>,
    /// Number of strictly positive retained eigenvalues; below p when the
    /// requested dimension exceeds the positive-spectrum rank.
    pub effective_p: usize,
    /// Total magnitude clamped away from retained negative eigenvalues.
    pub clamped_mass: T,
}

/// Placement produced by [`out_of_sample`]; `fallback` records that the
/// least-squares system degenerated and the nearest source point was used.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Placement<T = f64> {
    pub point: Vec<T>,
    pub fallback: bool,
}

impl<T: Real + Serialize + for<'de> Deserialize<'de>> Embedding<T> {
    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("embedding serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::input(format!("bad embedding JSON: {e}")))
    }
}

/// Embeds a dissimilarity matrix on the sphere of searched radius. `p` is the
/// requested dimension; when absent, the count of eigenvalues at least
/// 1e-8 * lambda_max is used, floored at 2 and capped at `p_cap`.
pub fn embedding_from_dissimilarity<T: Real>(
    d: &Dissimilarity<T>,
    source_features: Vec<FeatureVector>,
    p: Option<usize>,
    p_cap: usize,
) -> Result<Embedding<T>> {
    embedding_with_radius_hint(d, source_features, p, p_cap, None)
}

/// Same embedding, but a previous radius seeds a narrow search; incremental
/// re-embeddings drift slowly, so the full bracket scan is usually skipped.
pub fn embedding_with_radius_hint<T: Real>(
    d: &Dissimilarity<T>,
    source_features: Vec<FeatureVector>,
    p: Option<usize>,
    p_cap: usize,
    radius_hint: Option<T>,
) -> Result<Embedding<T>> {
    let k = d.k();
    let radius = match radius_hint {
        Some(r0) => optimal_radius_near(d, r0)?,
        None => optimal_radius(d)?,
    };
    let z = gram_from_radius(d, radius)?;
    let r2 = radius * radius;
    let zhat: Vec<T> = z.iter().map(|&v| v / r2).collect();
    let want = p.unwrap_or(2).max(p_cap.max(2)).min(k);
    let eig = top_eigh(k, &zhat, want);
    let lambda_max = eig.values.first().copied().unwrap_or_else(T::zero).max(T::zero());
    let p_req = match p {
        Some(p) => {
            if p < 2 {
                return Err(Error::input("embedding dimension must be at least 2"));
            }
            p
        }
        None => {
            let thresh = T::of(1e-8) * lambda_max;
            let auto = eig.values.iter().filter(|&&v| v >= thresh && v > T::zero()).count();
            auto.clamp(2, p_cap.max(2))
        }
    };
    let p_used = p_req.min(k);
    let mut spectrum = Vec::with_capacity(p_used);
    let mut clamped_mass = T::zero();
    let mut effective_p = 0usize;
    for i in 0..p_used {
        // a truncated decomposition may stop early on an exactly low-rank
        // Gram; missing trailing eigenvalues are zero
        let v = eig.values.get(i).copied().unwrap_or_else(T::zero);
        if v > T::zero() {
            spectrum.push(v);
            effective_p += 1;
        } else {
            clamped_mass += -v;
            spectrum.push(T::zero());
        }
    }
    // rows of U sqrt(Lambda), sign-canonicalized per eigenvector, then unit
    let mut points = vec![vec![T::zero(); p_used]; k];
    for (col, lam) in spectrum.iter().enumerate() {
        let Some(vec_col) = eig.vectors.get(col) else {
            continue;
        };
        let mut sign = T::one();
        let mut best_abs = T::zero();
        for &u in vec_col {
            if u.abs() > best_abs {
                best_abs = u.abs();
                sign = if u < T::zero() { -T::one() } else { T::one() };
            }
        }
        let scale = sign * lam.sqrt();
        for (row, point) in points.iter_mut().enumerate() {
            point[col] = vec_col[row] * scale;
        }
    }
    for point in points.iter_mut() {
        let n = norm2(point);
        if n > T::of(1e-12) {
            for v in point.iter_mut() {
                *v /= n;
            }
        } else {
            point[0] = T::one();
        }
    }
    Ok(Embedding {
        points,
        p: p_used,
        radius,
        source_features,
        eigen_spectrum: spectrum,
        effective_p,
        clamped_mass,
    })
}

/// Full pipeline from feature vectors: Euclidean dissimilarities, radius
/// search, and eigendecomposition. The automatic dimension is capped at the
/// feature dimension.
pub fn spherical_embedding<T: Real>(
    features: &[FeatureVector],
    p: Option<usize>,
) -> Result<Embedding<T>> {
    let d = dissimilarity_matrix::<T>(features)?;
    let cap = features[0].0.len().max(2);
    embedding_from_dissimilarity(&d, features.to_vec(), p, cap)
}

/// Least-squares placement of a new feature vector: minimize over y the sum of
/// (<point_k, y> - cos(d_k / r))^2, then project to the sphere. Degenerate
/// systems fall back to the nearest source point.
pub fn out_of_sample<T: Real>(emb: &Embedding<T>, x_new: &FeatureVector) -> Result<Placement<T>> {
    if emb.source_features.is_empty() {
        return Err(Error::input(
            "embedding has no source features for out-of-sample placement",
        ));
    }
    let k = emb.points.len();
    let p = emb.p;
    let mut targets = Vec::with_capacity(k);
    let mut nearest = (T::infinity(), 0usize);
    for (i, feat) in emb.source_features.iter().enumerate() {
        let dk: T = feature_distance(feat, x_new)?;
        if dk < nearest.0 {
            nearest = (dk, i);
        }
        let angle = (dk / emb.radius).min(T::PI());
        targets.push(angle.cos());
    }
    // normal equations (P^T P) y = P^T c
    let mut ata = vec![T::zero(); p * p];
    let mut atc = vec![T::zero(); p];
    for (point, &c) in emb.points.iter().zip(&targets) {
        for a in 0..p {
            atc[a] += point[a] * c;
            for b in 0..p {
                ata[a * p + b] += point[a] * point[b];
            }
        }
    }
    let solution = solve_dense(p, ata, atc);
    let y = match solution {
        Some(y) if norm2(&y) > T::of(1e-9) => y,
        _ => {
            return Ok(Placement {
                point: emb.points[nearest.1].clone(),
                fallback: true,
            })
        }
    };
    let mut y = y;
    let n = norm2(&y);
    for v in y.iter_mut() {
        *v /= n;
    }
    Ok(Placement { point: y, fallback: false })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dot;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn fv(v: &[u64]) -> FeatureVector {
        FeatureVector(v.to_vec())
    }

    /// Geodesic distances between random unit vectors scaled to radius rho.
    fn sphere_dissimilarity(n: usize, rho: f64, seed: u64) -> (Dissimilarity<f64>, Vec<Vec<f64>>) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut pts = Vec::with_capacity(n);
        for _ in 0..n {
            let v: Vec<f64> = crate::vmf::uniform_sphere(3, &mut rng);
            pts.push(v);
        }
        let mut d = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in (i + 1)..n {
                let c = dot(&pts[i], &pts[j]).clamp(-1.0, 1.0);
                let v = rho * c.acos();
                d[i][j] = v;
                d[j][i] = v;
            }
        }
        (Dissimilarity::new(d).unwrap(), pts)
    }

    #[test]
    fn distance_examples() {
        let d = dissimilarity_matrix::<f64>(&[fv(&[0, 0]), fv(&[3, 4])]).unwrap();
        assert_eq!(d.rows()[0][1], 5.0);
        assert_eq!(d.rows()[1][0], 5.0);
        assert_eq!(d.rows()[0][0], 0.0);
        // repeated features give zero entries but stay valid while any pair differs
        let d = dissimilarity_matrix::<f64>(&[fv(&[1, 2]), fv(&[1, 2]), fv(&[4, 6])]).unwrap();
        assert_eq!(d.rows()[0][1], 0.0);
        assert_eq!(d.rows()[0][2], 5.0);
        assert!(dissimilarity_matrix::<f64>(&[fv(&[1]), fv(&[1])]).is_err());
        assert!(dissimilarity_matrix::<f64>(&[fv(&[1]), fv(&[1, 2])]).is_err());
    }

    #[test]
    fn gram_examples() {
        let d = Dissimilarity::new(vec![
            vec![0.0, 0.0],
            vec![0.0, 0.0],
        ]);
        // fully-zero matrix is fine for the Gram even though the radius search rejects it
        let d = d.unwrap();
        let z = gram_from_radius(&d, 2.0).unwrap();
        assert_eq!(z, vec![4.0, 4.0, 4.0, 4.0]);

        let r = 3.0f64;
        let dist = std::f64::consts::FRAC_PI_2 * r;
        let d = Dissimilarity::new(vec![vec![0.0, dist], vec![dist, 0.0]]).unwrap();
        let z = gram_from_radius(&d, r).unwrap();
        assert!(z[1].abs() < 1e-12);

        // below the feasibility bound
        assert!(gram_from_radius(&d, dist / std::f64::consts::PI * 0.999).is_err());
    }

    #[test]
    fn gram_equilateral_spectrum() {
        let a = 2.0 * std::f64::consts::FRAC_PI_3;
        let d = Dissimilarity::new(vec![
            vec![0.0, a, a],
            vec![a, 0.0, a],
            vec![a, a, 0.0],
        ])
        .unwrap();
        let z = gram_from_radius(&d, 1.0).unwrap();
        let eig = jacobi_eigh(3, &z);
        assert!((eig.values[0] - 1.5).abs() < 1e-12);
        assert!((eig.values[1] - 1.5).abs() < 1e-12);
        assert!(eig.values[2].abs() < 1e-12);
    }

    #[test]
    fn radius_recovers_known_sphere() {
        for rho in [1.0, 2.5] {
            let (d, _) = sphere_dissimilarity(40, rho, 11);
            let r = optimal_radius(&d).unwrap();
            assert!(
                (r - rho).abs() / rho < 1e-3,
                "rho={rho}: recovered {r}"
            );
        }
    }

    #[test]
    fn radius_two_points_takes_bracket_minimum() {
        let d = Dissimilarity::new(vec![vec![0.0, 2.0], vec![2.0, 0.0]]).unwrap();
        let r = optimal_radius(&d).unwrap();
        let lo = 2.0 / std::f64::consts::PI;
        assert!((r - lo) / lo < 1e-5, "r={r} lo={lo}");
    }

    #[test]
    fn radius_scale_equivariant() {
        let (d, _) = sphere_dissimilarity(15, 1.0, 5);
        let r1 = optimal_radius(&d).unwrap();
        let c = 3.7;
        let scaled: Vec<Vec<f64>> = d
            .rows()
            .iter()
            .map(|row| row.iter().map(|&v| v * c).collect())
            .collect();
        let r2 = optimal_radius(&Dissimilarity::new(scaled).unwrap()).unwrap();
        assert!((r2 - c * r1).abs() / (c * r1) < 1e-4, "{r2} vs {}", c * r1);
    }

    #[test]
    fn radius_rejects_degenerate() {
        let d = Dissimilarity::new(vec![vec![0.0, 0.0], vec![0.0, 0.0]]).unwrap();
        assert!(optimal_radius(&d).is_err());
    }

    #[test]
    fn embedding_equilateral_triangle() {
        let feats = vec![fv(&[0, 0, 1]), fv(&[0, 1, 0]), fv(&[1, 0, 0])];
        let emb = spherical_embedding::<f64>(&feats, Some(2)).unwrap();
        assert_eq!(emb.p, 2);
        for point in &emb.points {
            assert!((norm2(point) - 1.0).abs() < 1e-9);
        }
        for i in 0..3 {
            for j in (i + 1)..3 {
                let c = dot(&emb.points[i], &emb.points[j]);
                assert!((c + 0.5).abs() < 1e-6, "pair {i}{j}: cos {c}");
            }
        }
    }

    #[test]
    fn embedding_two_points_antipodal() {
        let feats = vec![fv(&[0, 0]), fv(&[6, 8])];
        let emb = spherical_embedding::<f64>(&feats, None).unwrap();
        assert_eq!(emb.points.len(), 2);
        let c = dot(&emb.points[0], &emb.points[1]);
        assert!((c + 1.0).abs() < 1e-9, "cos {c}");
    }

    #[test]
    fn embedding_recovers_sphere_gram() {
        let (d, _) = sphere_dissimilarity(50, 1.0, 23);
        let emb = embedding_from_dissimilarity(&d, Vec::new(), Some(3), 3).unwrap();
        let z = gram_from_radius(&d, emb.radius).unwrap();
        let r2 = emb.radius * emb.radius;
        let k = d.k();
        let mut resid = 0.0f64;
        for i in 0..k {
            for j in 0..k {
                let got = dot(&emb.points[i], &emb.points[j]);
                let want = z[i * k + j] / r2;
                resid += (got - want).powi(2);
            }
        }
        assert!(resid.sqrt() < 1e-6, "Frobenius residual {}", resid.sqrt());
    }

    #[test]
    fn gram_residual_monotone_in_p() {
        let (d, _) = sphere_dissimilarity(30, 1.0, 37);
        let mut prev = f64::INFINITY;
        for p in [2usize, 3, 4] {
            let emb = embedding_from_dissimilarity(&d, Vec::new(), Some(p), 4).unwrap();
            let z = gram_from_radius(&d, emb.radius).unwrap();
            let r2 = emb.radius * emb.radius;
            let k = d.k();
            let mut resid = 0.0f64;
            for i in 0..k {
                for j in 0..k {
                    let got = dot(&emb.points[i], &emb.points[j]);
                    resid += (got - z[i * k + j] / r2).powi(2);
                }
            }
            let resid = resid.sqrt();
            assert!(resid <= prev + 1e-9, "p={p}: {resid} > {prev}");
            prev = resid;
        }
    }

    #[test]
    fn out_of_sample_matches_source() {
        let feats = vec![fv(&[0, 0, 9]), fv(&[0, 9, 0]), fv(&[9, 0, 0]), fv(&[3, 3, 3])];
        let emb = spherical_embedding::<f64>(&feats, Some(3)).unwrap();
        for (i, f) in feats.iter().enumerate() {
            let placed = out_of_sample(&emb, f).unwrap();
            assert!(!placed.fallback);
            let c = dot(&placed.point, &emb.points[i]).clamp(-1.0, 1.0);
            assert!(c.acos() < 1e-6, "source {i}: angle {}", c.acos());
        }
    }

    #[test]
    fn out_of_sample_respects_symmetry() {
        let feats = vec![fv(&[20, 0]), fv(&[0, 20]), fv(&[5, 5])];
        let emb = spherical_embedding::<f64>(&feats, Some(2)).unwrap();
        let placed = out_of_sample(&emb, &fv(&[10, 10])).unwrap();
        assert!(!placed.fallback);
        let c0 = dot(&placed.point, &emb.points[0]);
        let c1 = dot(&placed.point, &emb.points[1]);
        assert!((c0 - c1).abs() < 1e-6, "{c0} vs {c1}");
    }

    #[test]
    fn out_of_sample_fallback_on_degenerate_system() {
        let feats = vec![fv(&[0]), fv(&[10])];
        let emb = spherical_embedding::<f64>(&feats, Some(2)).unwrap();
        // antipodal pair spans a single direction; equidistant target degenerates
        let placed = out_of_sample(&emb, &fv(&[5])).unwrap();
        assert!(placed.fallback);
        assert_eq!(placed.point, emb.points[0]);
    }

    #[test]
    fn out_of_sample_tracks_full_reembedding() {
        // integer points near a sphere of radius 50
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let mut feats: Vec<FeatureVector> = Vec::new();
        while feats.len() < 35 {
            let v: Vec<f64> = crate::vmf::uniform_sphere(3, &mut rng);
            let f = FeatureVector(
                v.iter()
                    .map(|x| ((x * 50.0) + 60.0).round() as u64)
                    .collect(),
            );
            if !feats.contains(&f) {
                feats.push(f);
            }
        }
        let (held, sources) = feats.split_at(10);
        let emb = spherical_embedding::<f64>(&sources.to_vec(), Some(3)).unwrap();
        let full = spherical_embedding::<f64>(&feats, Some(3)).unwrap();
        let mut errs: Vec<f64> = Vec::new();
        for (i, f) in held.iter().enumerate() {
            let placed = out_of_sample(&emb, f).unwrap();
            // compare angles to each source atom between the two embeddings
            let mut worst: f64 = 0.0;
            for (j, _) in sources.iter().enumerate() {
                let a1 = dot(&placed.point, &emb.points[j]).clamp(-1.0, 1.0).acos();
                let a2 = dot(&full.points[i], &full.points[10 + j])
                    .clamp(-1.0, 1.0)
                    .acos();
                worst = worst.max((a1 - a2).abs());
            }
            errs.push(worst);
        }
        errs.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let median = errs[errs.len() / 2];
        assert!(median <= 0.1, "median angular discrepancy {median}");
    }

    #[test]
    fn permutation_equivariance() {
        let feats = vec![
            fv(&[0, 1]),
            fv(&[4, 0]),
            fv(&[9, 3]),
            fv(&[2, 7]),
            fv(&[6, 6]),
        ];
        let perm = [3usize, 0, 4, 1, 2];
        let permuted: Vec<FeatureVector> = perm.iter().map(|&i| feats[i].clone()).collect();
        let a = spherical_embedding::<f64>(&feats, Some(2)).unwrap();
        let b = spherical_embedding::<f64>(&permuted, Some(2)).unwrap();
        assert!((a.radius - b.radius).abs() < 1e-9 * a.radius);
        for (new_row, &old_row) in perm.iter().enumerate() {
            for c in 0..2 {
                assert!(
                    (a.points[old_row][c] - b.points[new_row][c]).abs() < 1e-7,
                    "row {old_row}"
                );
            }
        }
    }

    #[test]
    fn embedding_json_round_trip() {
        let feats = vec![fv(&[0, 0, 1]), fv(&[0, 1, 0]), fv(&[1, 0, 0])];
        let emb = spherical_embedding::<f64>(&feats, Some(2)).unwrap();
        let text = emb.to_json();
        let back = Embedding::<f64>::from_json(&text).unwrap();
        assert_eq!(emb, back);
    }

    #[test]
    fn spearman_on_noisy_sphere() {
        let (d, _) = sphere_dissimilarity(25, 1.0, 99);
        let mut rng = ChaCha8Rng::seed_from_u64(100);
        let noisy: Vec<Vec<f64>> = d
            .rows()
            .iter()
            .enumerate()
            .map(|(i, row)| {
                row.iter()
                    .enumerate()
                    .map(|(j, &v)| {
                        if i == j {
                            0.0
                        } else {
                            (v * (1.0 + 0.02 * (rng.gen::<f64>() - 0.5))).max(1e-9)
                        }
                    })
                    .collect()
            })
            .collect();
        let mut sym = noisy.clone();
        for i in 0..25 {
            for j in 0..i {
                sym[i][j] = sym[j][i];
            }
        }
        let d = Dissimilarity::new(sym).unwrap();
        let emb = embedding_from_dissimilarity(&d, Vec::new(), Some(3), 3).unwrap();
        let mut input = Vec::new();
        let mut angle = Vec::new();
        for i in 0..25 {
            for j in (i + 1)..25 {
                input.push(d.rows()[i][j]);
                angle.push(dot(&emb.points[i], &emb.points[j]).clamp(-1.0, 1.0).acos());
            }
        }
        let rho = spearman(&input, &angle);
        assert!(rho >= 0.95, "Spearman {rho}");
    }

    fn rank(v: &[f64]) -> Vec<f64> {
        let mut idx: Vec<usize> = (0..v.len()).collect();
        idx.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
        let mut r = vec![0.0; v.len()];
        for (pos, &i) in idx.iter().enumerate() {
            r[i] = pos as f64;
        }
        r
    }

    fn spearman(a: &[f64], b: &[f64]) -> f64 {
        let ra = rank(a);
        let rb = rank(b);
        let n = a.len() as f64;
        let mean = (n - 1.0) / 2.0;
        let mut num = 0.0;
        let mut da = 0.0;
        let mut db = 0.0;
        for i in 0..a.len() {
            num += (ra[i] - mean) * (rb[i] - mean);
            da += (ra[i] - mean).powi(2);
            db += (rb[i] - mean).powi(2);
        }
        num / (da * db).sqrt()
    }
}
