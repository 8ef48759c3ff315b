//! Subgraph-count feature statistics: edges, triangles, k-stars.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub enum FeatureTerm {
    Edge,
    /// k-star with arity k >= 2: sum over nodes of C(deg, k).
    KStar(u32),
    Triangle,
}

impl FeatureTerm {
    pub fn tag(&self) -> String {
        match self {
            FeatureTerm::Edge => "edge".into(),
            FeatureTerm::KStar(k) => format!("kstar{k}"),
            FeatureTerm::Triangle => "triangle".into(),
        }
    }

    pub fn parse(tag: &str) -> Result<Self> {
        match tag {
            "edge" => Ok(FeatureTerm::Edge),
            "triangle" => Ok(FeatureTerm::Triangle),
            _ => {
                if let Some(rest) = tag.strip_prefix("kstar") {
                    let k: u32 = rest
                        .parse()
                        .map_err(|_| Error::input(format!("bad feature tag {tag:?}")))?;
                    if k < 2 {
                        return Err(Error::input(format!("kstar arity must be >= 2, got {k}")));
                    }
                    Ok(FeatureTerm::KStar(k))
                } else {
                    Err(Error::input(format!("unknown feature tag {tag:?}")))
                }
            }
        }
    }
}

impl fmt::Display for FeatureTerm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.tag())
    }
}

impl Serialize for FeatureTerm {
    fn serialize<S: serde::Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&self.tag())
    }
}

impl<'de> Deserialize<'de> for FeatureTerm {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(d)?;
        FeatureTerm::parse(&s).map_err(serde::de::Error::custom)
    }
}

/// Ordered, duplicate-free list of feature terms.
#[derive(Clone, PartialEq, Eq, Hash, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureSpec {
    terms: Vec<FeatureTerm>,
}

impl FeatureSpec {
    pub fn new(terms: Vec<FeatureTerm>) -> Result<Self> {
        if terms.is_empty() {
            return Err(Error::input("feature spec must be non-empty"));
        }
        let mut seen = std::collections::HashSet::new();
        for t in &terms {
            if let FeatureTerm::KStar(k) = t {
                if *k < 2 {
                    return Err(Error::input(format!("kstar arity must be >= 2, got {k}")));
                }
            }
            if !seen.insert(*t) {
                return Err(Error::input(format!("duplicate feature tag {t}")));
            }
        }
        Ok(FeatureSpec { terms })
    }

    pub fn edge_triangle() -> Self {
        FeatureSpec::new(vec![FeatureTerm::Edge, FeatureTerm::Triangle]).unwrap()
    }

    /// The experiment vector (edge, 2-star .. 11-star, triangle), d = 12.
    pub fn experiment() -> Self {
        let mut terms = vec![FeatureTerm::Edge];
        terms.extend((2..=11).map(FeatureTerm::KStar));
        terms.push(FeatureTerm::Triangle);
        FeatureSpec::new(terms).unwrap()
    }

    pub fn parse_tags(tags: &[String]) -> Result<Self> {
        let terms = tags
            .iter()
            .map(|t| FeatureTerm::parse(t))
            .collect::<Result<Vec<_>>>()?;
        FeatureSpec::new(terms)
    }

    pub fn terms(&self) -> &[FeatureTerm] {
        &self.terms
    }

    pub fn d(&self) -> usize {
        self.terms.len()
    }

    pub fn tags(&self) -> Vec<String> {
        self.terms.iter().map(|t| t.tag()).collect()
    }
}

/// Integer counts aligned with a FeatureSpec.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FeatureVector(pub Vec<u64>);

impl FeatureVector {
    pub fn d(&self) -> usize {
        self.0.len()
    }

    pub fn as_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&v| v as f64).collect()
    }
}

impl fmt::Display for FeatureVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, v) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ", ")?;
            }
            write!(f, "{v}")?;
        }
        write!(f, ")")
    }
}

pub fn count_edges(g: &Graph) -> u64 {
    g.edge_count()
}

/// Popcount of N(i) ∩ N(j) over edges, each triangle hit three times.
pub fn count_triangles(g: &Graph) -> u64 {
    let adj = g.adjacency_rows();
    let mut total: u64 = 0;
    for (i, j) in g.edges() {
        total += adj.common_neighbors(i, j) as u64;
    }
    total / 3
}

pub fn count_kstars(g: &Graph, k: u32) -> Result<u64> {
    if k < 2 {
        return Err(Error::input(format!("kstar arity must be >= 2, got {k}")));
    }
    Ok(g.degrees().iter().map(|&d| binomial(d as u64, k as u64)).sum())
}

/// Exact C(n, k) in u64; fits comfortably for n <= 255 at the arities used here.
pub fn binomial(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: u64 = 1;
    for i in 0..k {
        acc = acc * (n - i) / (i + 1);
    }
    acc
}

/// Counts in spec order. Stars of arity beyond every degree contribute 0.
pub fn feature_vector(g: &Graph, spec: &FeatureSpec) -> Result<FeatureVector> {
    let mut deg_cache: Option<Vec<u32>> = None;
    let mut out = Vec::with_capacity(spec.d());
    for term in spec.terms() {
        let v = match term {
            FeatureTerm::Edge => count_edges(g),
            FeatureTerm::Triangle => count_triangles(g),
            FeatureTerm::KStar(k) => {
                let deg = deg_cache.get_or_insert_with(|| g.degrees());
                deg.iter().map(|&d| binomial(d as u64, *k as u64)).sum()
            }
        };
        out.push(v);
    }
    Ok(FeatureVector(out))
}

/// Change in each feature if the (i, j) edge of g were toggled.
/// Signed deltas aligned with spec order; g itself is not modified.
pub fn toggle_deltas(g: &Graph, i: usize, j: usize, spec: &FeatureSpec) -> Vec<i64> {
    let adding = !g.has_edge(i, j);
    let sign: i64 = if adding { 1 } else { -1 };
    let deg = g.degrees();
    let adj = g.adjacency_rows();
    let common = adj.common_neighbors(i, j) as i64;
    spec.terms()
        .iter()
        .map(|term| match term {
            FeatureTerm::Edge => sign,
            FeatureTerm::Triangle => sign * common,
            FeatureTerm::KStar(k) => {
                let delta_at = |d: u64| {
                    let (lo, hi) = if adding { (d, d + 1) } else { (d - 1, d) };
                    (binomial(hi, *k as u64) - binomial(lo, *k as u64)) as i64
                };
                sign * (delta_at(deg[i] as u64) + delta_at(deg[j] as u64))
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{make_graph, toggle_edge, Graph};

    #[test]
    fn edge_counts() {
        assert_eq!(count_edges(&Graph::complete(4)), 6);
        assert_eq!(count_edges(&Graph::empty(5)), 0);
        let path = make_graph(4, &[(0, 1), (1, 2), (2, 3)]).unwrap();
        assert_eq!(count_edges(&path), 3);
    }

    #[test]
    fn triangle_counts() {
        assert_eq!(count_triangles(&Graph::complete(4)), 4);
        let forest = make_graph(6, &[(0, 1), (1, 2), (3, 4)]).unwrap();
        assert_eq!(count_triangles(&forest), 0);
        let k5_minus = toggle_edge(&Graph::complete(5), 0, 1).unwrap();
        assert_eq!(count_triangles(&k5_minus), 7);
    }

    #[test]
    fn kstar_counts() {
        assert_eq!(count_kstars(&Graph::complete(3), 2).unwrap(), 3);
        assert_eq!(count_kstars(&Graph::complete(4), 2).unwrap(), 12);
        let star = make_graph(4, &[(0, 1), (0, 2), (0, 3)]).unwrap();
        assert_eq!(count_kstars(&star, 3).unwrap(), 1);
        assert!(count_kstars(&star, 1).is_err());
    }

    #[test]
    fn vectors() {
        let spec = FeatureSpec::edge_triangle();
        assert_eq!(
            feature_vector(&Graph::complete(3), &spec).unwrap(),
            FeatureVector(vec![3, 1])
        );
        assert_eq!(
            feature_vector(&Graph::complete(8), &spec).unwrap(),
            FeatureVector(vec![28, 56])
        );
        let exp = FeatureSpec::experiment();
        assert_eq!(exp.d(), 12);
        assert_eq!(
            feature_vector(&Graph::empty(8), &exp).unwrap(),
            FeatureVector(vec![0; 12])
        );
    }

    #[test]
    fn spec_tags_round_trip() {
        let exp = FeatureSpec::experiment();
        let back = FeatureSpec::parse_tags(&exp.tags()).unwrap();
        assert_eq!(back, exp);
        assert!(FeatureSpec::parse_tags(&["edge".into(), "edge".into()]).is_err());
        assert!(FeatureSpec::parse_tags(&["kstar1".into()]).is_err());
        assert!(FeatureSpec::parse_tags(&[]).is_err());
        let json = serde_json::to_string(&exp).unwrap();
        assert!(json.starts_with("[\"edge\",\"kstar2\""));
        let parsed: FeatureSpec = serde_json::from_str(&json).unwrap();
        assert_eq!(parsed, exp);
    }

    #[test]
    fn deltas_match_recompute() {
        let spec = FeatureSpec::new(vec![
            FeatureTerm::Edge,
            FeatureTerm::KStar(2),
            FeatureTerm::KStar(3),
            FeatureTerm::Triangle,
        ])
        .unwrap();
        let g = make_graph(6, &[(0, 1), (1, 2), (2, 3), (0, 2), (4, 5), (1, 4)]).unwrap();
        for i in 0..6 {
            for j in (i + 1)..6 {
                let before = feature_vector(&g, &spec).unwrap();
                let after = feature_vector(&toggle_edge(&g, i, j).unwrap(), &spec).unwrap();
                let deltas = toggle_deltas(&g, i, j, &spec);
                for t in 0..spec.d() {
                    assert_eq!(
                        after.0[t] as i64 - before.0[t] as i64,
                        deltas[t],
                        "term {t} at pair ({i},{j})"
                    );
                }
            }
        }
    }
}
