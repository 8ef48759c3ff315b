//! Exact convex-hull classification in ambient dimension 2 and 3.
//!
//! Every predicate runs in exact integer arithmetic after a lossless per-axis
//! rescale of the rational inputs, so vertex and relative-boundary membership
//! are decided without epsilon tuning. Degenerate point sets dispatch on the
//! affine rank: a rank-0 set is all vertices by convention, rank 1 keeps the
//! two extremes, rank 2 inside ambient 3 projects onto the common plane.

use std::collections::{BTreeSet, HashSet};

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct HullClassification {
    /// Affine dimension of the point set (0 to ambient dimension).
    pub affine_dim: usize,
    /// Indices of extreme points, ascending.
    pub vertices: Vec<usize>,
    /// Indices on the relative boundary (vertices included), ascending.
    pub boundary: Vec<usize>,
}

/// Exact conversion; every finite f64 is a dyadic rational.
pub fn rational_from_f64(x: f64) -> Result<BigRational> {
    BigRational::from_float(x)
        .ok_or_else(|| Error::numerical(format!("non-finite value {x} has no rational form")))
}

/// Classify hull vertices and relative-boundary membership of rational points
/// in ambient dimension 2 or 3.
pub fn classify_hull(points: &[Vec<BigRational>]) -> Result<HullClassification> {
    if points.is_empty() {
        return Err(Error::input("empty point set"));
    }
    let ambient = points[0].len();
    if ambient != 2 && ambient != 3 {
        return Err(Error::unsupported_dimension(format!(
            "hull classification supports ambient dimension 2 or 3, got {ambient}"
        )));
    }
    if points.iter().any(|p| p.len() != ambient) {
        return Err(Error::input("ragged point dimensions"));
    }
    let scaled = scale_axes(points);
    if let Some(small) = try_i128(&scaled) {
        Ok(match ambient {
            2 => {
                let pts: Vec<[i128; 2]> = small.iter().map(|p| [p[0], p[1]]).collect();
                classify2(&pts)
            }
            _ => {
                let pts: Vec<[i128; 3]> = small.iter().map(|p| [p[0], p[1], p[2]]).collect();
                classify3(&pts)
            }
        })
    } else {
        Ok(match ambient {
            2 => {
                let pts: Vec<[BigInt; 2]> = scaled
                    .iter()
                    .map(|p| [p[0].clone(), p[1].clone()])
                    .collect();
                classify2(&pts)
            }
            _ => {
                let pts: Vec<[BigInt; 3]> = scaled
                    .iter()
                    .map(|p| [p[0].clone(), p[1].clone(), p[2].clone()])
                    .collect();
                classify3(&pts)
            }
        })
    }
}

/// All exact maximizers of sum_j theta_j p_j + p_last over extended points.
pub fn exact_argmax(points: &[Vec<BigRational>], theta: &[BigRational]) -> Result<Vec<usize>> {
    if points.is_empty() {
        return Err(Error::input("empty point set"));
    }
    let ambient = points[0].len();
    if theta.len() + 1 != ambient {
        return Err(Error::input(format!(
            "theta dimension {} does not match extended dimension {}",
            theta.len(),
            ambient
        )));
    }
    let score = |p: &Vec<BigRational>| -> BigRational {
        let mut s = p[ambient - 1].clone();
        for (t, x) in theta.iter().zip(p.iter()) {
            s += t * x;
        }
        s
    };
    let mut best = score(&points[0]);
    let mut arg = vec![0usize];
    for (i, p) in points.iter().enumerate().skip(1) {
        let s = score(p);
        match s.cmp(&best) {
            std::cmp::Ordering::Greater => {
                best = s;
                arg = vec![i];
            }
            std::cmp::Ordering::Equal => arg.push(i),
            std::cmp::Ordering::Less => {}
        }
    }
    Ok(arg)
}

/// Per-axis lossless rescale to integers (multiply by the denominator lcm).
fn scale_axes(points: &[Vec<BigRational>]) -> Vec<Vec<BigInt>> {
    let ambient = points[0].len();
    let mut scale = vec![BigInt::from(1u32); ambient];
    for axis in 0..ambient {
        for p in points {
            scale[axis] = scale[axis].lcm(p[axis].denom());
        }
    }
    points
        .iter()
        .map(|p| {
            (0..ambient)
                .map(|a| p[a].numer() * (&scale[a] / p[a].denom()))
                .collect()
        })
        .collect()
}

/// Downcast when the predicate magnitude bound 48 B1 B2 B3 stays inside i128.
fn try_i128(points: &[Vec<BigInt>]) -> Option<Vec<Vec<i128>>> {
    let ambient = points[0].len();
    let mut max_abs = vec![BigInt::from(1u32); ambient];
    for p in points {
        for a in 0..ambient {
            let v = p[a].abs();
            if v > max_abs[a] {
                max_abs[a] = v;
            }
        }
    }
    let mut bound = BigInt::from(48u32);
    for a in 0..ambient {
        bound *= &max_abs[a];
    }
    if ambient == 2 {
        // 2D predicates are quadratic, reuse the cubic bound as a cover
        bound *= &max_abs[0];
    }
    if bound >= BigInt::from(2u8).pow(126) {
        return None;
    }
    Some(
        points
            .iter()
            .map(|p| p.iter().map(|v| v.to_i128().unwrap()).collect())
            .collect(),
    )
}

trait HullInt:
    Clone + Ord + Eq + std::hash::Hash + Zero + Signed + Integer + Send + Sync + std::fmt::Debug
{
}
impl HullInt for i128 {}
impl HullInt for BigInt {}

fn sub<T: HullInt, const D: usize>(a: &[T; D], b: &[T; D]) -> [T; D] {
    std::array::from_fn(|k| a[k].clone() - b[k].clone())
}

fn cross3<T: HullInt>(u: &[T; 3], v: &[T; 3]) -> [T; 3] {
    [
        u[1].clone() * v[2].clone() - u[2].clone() * v[1].clone(),
        u[2].clone() * v[0].clone() - u[0].clone() * v[2].clone(),
        u[0].clone() * v[1].clone() - u[1].clone() * v[0].clone(),
    ]
}

fn dot<T: HullInt, const D: usize>(u: &[T; D], v: &[T; D]) -> T {
    let mut s = T::zero();
    for k in 0..D {
        s = s + u[k].clone() * v[k].clone();
    }
    s
}

fn cross2<T: HullInt>(o: &[T; 2], a: &[T; 2], b: &[T; 2]) -> T {
    (a[0].clone() - o[0].clone()) * (b[1].clone() - o[1].clone())
        - (a[1].clone() - o[1].clone()) * (b[0].clone() - o[0].clone())
}

/// Rank-1 case: order along the line, keep the two extremes.
fn classify_line<T: HullInt, const D: usize>(pts: &[[T; D]]) -> HullClassification {
    let origin = &pts[0];
    let dir = pts
        .iter()
        .find(|p| *p != origin)
        .map(|p| sub(p, origin))
        .expect("rank 1 set has a distinct pair");
    let ts: Vec<T> = pts.iter().map(|p| dot(&sub(p, origin), &dir)).collect();
    let lo = ts.iter().min().unwrap();
    let hi = ts.iter().max().unwrap();
    let mut vertices = BTreeSet::new();
    for (i, t) in ts.iter().enumerate() {
        if t == lo || t == hi {
            vertices.insert(i);
        }
    }
    HullClassification {
        affine_dim: 1,
        boundary: vertices.iter().copied().collect(),
        vertices: vertices.into_iter().collect(),
    }
}

fn all_equal<T: HullInt, const D: usize>(pts: &[[T; D]]) -> bool {
    pts.iter().all(|p| p == &pts[0])
}

/// Ambient-2 classification with internal rank dispatch.
fn classify2<T: HullInt>(pts: &[[T; 2]]) -> HullClassification {
    if all_equal(pts) {
        return HullClassification {
            affine_dim: 0,
            vertices: (0..pts.len()).collect(),
            boundary: (0..pts.len()).collect(),
        };
    }
    let origin = &pts[0];
    let probe = pts.iter().find(|p| *p != origin).unwrap();
    if pts
        .iter()
        .all(|p| cross2(origin, probe, p).is_zero())
    {
        return classify_line(pts);
    }

    // monotone chain with strict turns only
    let mut order: Vec<usize> = (0..pts.len()).collect();
    order.sort_by(|&i, &j| pts[i].cmp(&pts[j]));
    let build = |idx: &[usize]| -> Vec<usize> {
        let mut chain: Vec<usize> = Vec::new();
        for &i in idx {
            while chain.len() >= 2 {
                let o = chain[chain.len() - 2];
                let a = chain[chain.len() - 1];
                if cross2(&pts[o], &pts[a], &pts[i]) <= T::zero() {
                    chain.pop();
                } else {
                    break;
                }
            }
            chain.push(i);
        }
        chain
    };
    let lower = build(&order);
    let rev: Vec<usize> = order.iter().rev().copied().collect();
    let upper = build(&rev);
    let mut cycle: Vec<usize> = Vec::new();
    cycle.extend_from_slice(&lower[..lower.len() - 1]);
    cycle.extend_from_slice(&upper[..upper.len() - 1]);
    let vertices: BTreeSet<usize> = cycle.iter().copied().collect();

    let mut boundary = vertices.clone();
    let on_segment = |a: &[T; 2], b: &[T; 2], p: &[T; 2]| -> bool {
        if !cross2(a, b, p).is_zero() {
            return false;
        }
        (0..2).all(|k| {
            let (lo, hi) = if a[k] <= b[k] {
                (&a[k], &b[k])
            } else {
                (&b[k], &a[k])
            };
            lo <= &p[k] && &p[k] <= hi
        })
    };
    for i in 0..pts.len() {
        if boundary.contains(&i) {
            continue;
        }
        for e in 0..cycle.len() {
            let a = &pts[cycle[e]];
            let b = &pts[cycle[(e + 1) % cycle.len()]];
            if on_segment(a, b, &pts[i]) {
                boundary.insert(i);
                break;
            }
        }
    }
    HullClassification {
        affine_dim: 2,
        vertices: vertices.into_iter().collect(),
        boundary: boundary.into_iter().collect(),
    }
}

/// Drop the axis with the largest normal component; injective on the plane.
fn project_plane<T: HullInt>(pts: &[[T; 3]], normal: &[T; 3]) -> Vec<[T; 2]> {
    let drop = (0..3)
        .max_by(|&a, &b| normal[a].abs().cmp(&normal[b].abs()))
        .unwrap();
    let keep: Vec<usize> = (0..3).filter(|&k| k != drop).collect();
    pts.iter()
        .map(|p| [p[keep[0]].clone(), p[keep[1]].clone()])
        .collect()
}

/// Ambient-3 classification by supporting-plane enumeration over point triples.
fn classify3<T: HullInt>(pts: &[[T; 3]]) -> HullClassification {
    let k = pts.len();
    if all_equal(pts) {
        return HullClassification {
            affine_dim: 0,
            vertices: (0..k).collect(),
            boundary: (0..k).collect(),
        };
    }
    let origin = &pts[0];
    let probe = pts.iter().find(|p| *p != origin).unwrap();
    let dir = sub(probe, origin);
    let second = pts
        .iter()
        .find(|p| !cross3(&dir, &sub(p, origin)).iter().all(T::is_zero));
    let second = match second {
        None => return classify_line(pts),
        Some(p) => p,
    };
    let normal = cross3(&dir, &sub(second, origin));
    if pts
        .iter()
        .all(|p| dot(&normal, &sub(p, origin)).is_zero())
    {
        let flat = project_plane(pts, &normal);
        let mut c = classify2(&flat);
        c.affine_dim = 2;
        return c;
    }

    // deterministic shuffled scan order speeds up the mixed-sign early exit
    let scan_order: Vec<usize> = {
        let mut idx: Vec<usize> = (0..k).collect();
        let mut state: u64 = 0x9e3779b97f4a7c15;
        for i in (1..k).rev() {
            state = state
                .wrapping_mul(6364136223846793005)
                .wrapping_add(1442695040888963407);
            let j = (state >> 33) as usize % (i + 1);
            idx.swap(i, j);
        }
        idx
    };

    let normalize_key = |n: &[T; 3], off: &T| -> (T, T, T, T) {
        let mut g = n[0].gcd(&n[1]).gcd(&n[2]).gcd(off);
        if g.is_zero() {
            g = T::one();
        }
        let mut parts = [
            n[0].clone() / g.clone(),
            n[1].clone() / g.clone(),
            n[2].clone() / g.clone(),
            off.clone() / g,
        ];
        if let Some(first) = parts.iter().find(|v| !v.is_zero()) {
            if first.is_negative() {
                for p in parts.iter_mut() {
                    *p = -p.clone();
                }
            }
        }
        let [a, b, c, d] = parts;
        (a, b, c, d)
    };

    let per_a: Vec<(BTreeSet<usize>, BTreeSet<usize>)> = (0..k)
        .into_par_iter()
        .map(|a| {
            let mut vertices = BTreeSet::new();
            let mut boundary = BTreeSet::new();
            let mut seen: HashSet<(T, T, T, T)> = HashSet::new();
            for b in (a + 1)..k {
                let u = sub(&pts[b], &pts[a]);
                for c in (b + 1)..k {
                    let n = cross3(&u, &sub(&pts[c], &pts[a]));
                    if n.iter().all(T::is_zero) {
                        continue;
                    }
                    let off = dot(&n, &pts[a]);
                    let key = normalize_key(&n, &off);
                    if seen.contains(&key) {
                        continue;
                    }
                    let mut saw_pos = false;
                    let mut saw_neg = false;
                    let mut supporting = true;
                    for &i in &scan_order {
                        let s = dot(&n, &pts[i]) - off.clone();
                        if s.is_positive() {
                            saw_pos = true;
                        } else if s.is_negative() {
                            saw_neg = true;
                        }
                        if saw_pos && saw_neg {
                            supporting = false;
                            break;
                        }
                    }
                    if !supporting {
                        continue;
                    }
                    seen.insert(key);
                    let on: Vec<usize> = (0..k)
                        .filter(|&i| (dot(&n, &pts[i]) - off.clone()).is_zero())
                        .collect();
                    boundary.extend(on.iter().copied());
                    let face_pts: Vec<[T; 3]> = on.iter().map(|&i| pts[i].clone()).collect();
                    let flat = project_plane(&face_pts, &n);
                    let sub_c = classify2(&flat);
                    vertices.extend(sub_c.vertices.iter().map(|&j| on[j]));
                }
            }
            (vertices, boundary)
        })
        .collect();

    let mut vertices = BTreeSet::new();
    let mut boundary = BTreeSet::new();
    for (v, b) in per_a {
        vertices.extend(v);
        boundary.extend(b);
    }
    HullClassification {
        affine_dim: 3,
        vertices: vertices.into_iter().collect(),
        boundary: boundary.into_iter().collect(),
    }
}
