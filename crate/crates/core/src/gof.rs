//! Goodness-of-fit statistics (degree, edgewise shared partners, triad
//! census, geodesic distances) and box-plot summaries of simulated sample
//! sets against an observed graph.

use std::collections::VecDeque;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::Graph;

/// Per-graph statistic set. Every distribution holds proportions in [0,1]
/// summing to 1 whenever its denominator (nodes, edges, triples, pairs) is
/// nonzero.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GofStats {
    pub n: usize,
    /// Share of nodes with degree d, for d in 0..n.
    pub degree: Vec<f64>,
    /// Share of edges whose endpoints have exactly k common neighbors, for
    /// k in 0..n-1. None when the graph has no edges.
    pub esp: Option<Vec<f64>>,
    /// Share of 3-node sets with 0, 1, 2, or 3 edges among them.
    pub triad: [f64; 4],
    /// Share of unordered pairs at geodesic distance d, index d-1; trailing
    /// zero buckets are trimmed.
    pub geodesic_finite: Vec<f64>,
    /// Share of unordered pairs with no connecting path.
    pub geodesic_inf: f64,
}

impl GofStats {
    pub fn of(g: &Graph) -> GofStats {
        let (geodesic_finite, geodesic_inf) = geodesic_distribution(g);
        GofStats {
            n: g.n(),
            degree: degree_distribution(g),
            esp: esp_distribution(g),
            triad: triad_census(g),
            geodesic_finite,
            geodesic_inf,
        }
    }
}

/// Share of nodes with each degree 0..n.
pub fn degree_distribution(g: &Graph) -> Vec<f64> {
    let n = g.n();
    let mut hist = vec![0.0; n];
    for d in g.degrees() {
        hist[d as usize] += 1.0;
    }
    for v in hist.iter_mut() {
        *v /= n as f64;
    }
    hist
}

/// Share of edges with exactly k shared partners; None for edgeless graphs.
pub fn esp_distribution(g: &Graph) -> Option<Vec<f64>> {
    let n = g.n();
    let edges = g.edges();
    if edges.is_empty() {
        return None;
    }
    let mut hist = vec![0.0; n - 1];
    for &(i, j) in &edges {
        let mut shared = 0usize;
        for k in 0..n {
            if k != i && k != j && g.has_edge(i, k) && g.has_edge(j, k) {
                shared += 1;
            }
        }
        hist[shared] += 1.0;
    }
    let m = edges.len() as f64;
    for v in hist.iter_mut() {
        *v /= m;
    }
    Some(hist)
}

/// Share of node triples with 0..3 edges among them; all zeros when n < 3.
pub fn triad_census(g: &Graph) -> [f64; 4] {
    let n = g.n();
    let mut counts = [0.0f64; 4];
    if n < 3 {
        return counts;
    }
    for i in 0..n {
        for j in i + 1..n {
            let ij = g.has_edge(i, j) as usize;
            for k in j + 1..n {
                let e = ij + g.has_edge(i, k) as usize + g.has_edge(j, k) as usize;
                counts[e] += 1.0;
            }
        }
    }
    let total: f64 = counts.iter().sum();
    for v in counts.iter_mut() {
        *v /= total;
    }
    counts
}

/// Breadth-first geodesic distribution over unordered pairs: shares at each
/// finite distance (index d-1) plus the unreachable share.
pub fn geodesic_distribution(g: &Graph) -> (Vec<f64>, f64) {
    let n = g.n();
    if n < 2 {
        return (Vec::new(), 0.0);
    }
    let adj: Vec<Vec<usize>> = (0..n)
        .map(|i| (0..n).filter(|&j| g.has_edge(i, j)).collect())
        .collect();
    let mut finite = vec![0u64; n];
    let mut inf = 0u64;
    let mut dist = vec![usize::MAX; n];
    let mut queue = VecDeque::new();
    for s in 0..n {
        dist.fill(usize::MAX);
        dist[s] = 0;
        queue.clear();
        queue.push_back(s);
        while let Some(u) = queue.pop_front() {
            for &v in &adj[u] {
                if dist[v] == usize::MAX {
                    dist[v] = dist[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        for &d in dist.iter().skip(s + 1) {
            if d == usize::MAX {
                inf += 1;
            } else {
                finite[d - 1] += 1;
            }
        }
    }
    let pairs = (n * (n - 1) / 2) as f64;
    let max_d = finite.iter().rposition(|&c| c > 0).map_or(0, |i| i + 1);
    let shares = finite[..max_d].iter().map(|&c| c as f64 / pairs).collect();
    (shares, inf as f64 / pairs)
}

/// One summarized bucket of one statistic family.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BucketSummary {
    pub statistic: String,
    pub bucket: String,
    pub observed: f64,
    pub min: f64,
    pub q1: f64,
    pub median: f64,
    pub q3: f64,
    pub max: f64,
    /// Observed value lies within [min, max] of the simulated values.
    pub covered: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GofSummary {
    pub sample_count: usize,
    pub rows: Vec<BucketSummary>,
}

/// Quantile of an ascending slice by the median-of-sorted convention: the
/// value at fractional position q * (len - 1), linearly interpolated.
pub fn quantile_sorted(sorted: &[f64], q: f64) -> f64 {
    let m = sorted.len();
    assert!(m > 0 && (0.0..=1.0).contains(&q));
    if m == 1 {
        return sorted[0];
    }
    let pos = q * (m - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

fn push_rows(
    rows: &mut Vec<BucketSummary>,
    statistic: &str,
    labels: &[String],
    observed: &[f64],
    per_sample: &[Vec<f64>],
) {
    for (b, label) in labels.iter().enumerate() {
        let mut vals: Vec<f64> = per_sample.iter().map(|v| v[b]).collect();
        vals.sort_by(|a, b| a.partial_cmp(b).expect("proportions are finite"));
        let (min, max) = (vals[0], vals[vals.len() - 1]);
        let obs = observed[b];
        rows.push(BucketSummary {
            statistic: statistic.to_string(),
            bucket: label.clone(),
            observed: obs,
            min,
            q1: quantile_sorted(&vals, 0.25),
            median: quantile_sorted(&vals, 0.5),
            q3: quantile_sorted(&vals, 0.75),
            max,
            covered: obs >= min && obs <= max,
        })
    }
}

/// Pads a ragged geodesic vector to `len` finite buckets plus the infinity
/// bucket appended last.
fn geodesic_padded(stats: &GofStats, len: usize) -> Vec<f64> {
    let mut v = stats.geodesic_finite.clone();
    v.resize(len, 0.0);
    v.push(stats.geodesic_inf);
    v
}

fn esp_padded(stats: &GofStats) -> Vec<f64> {
    match &stats.esp {
        Some(v) => v.clone(),
        None => vec![0.0; stats.n.saturating_sub(1)],
    }
}

/// Per-sample statistics in parallel, reduced to per-bucket quantiles and
/// coverage of the observed graph. Bucket ranges are unioned across all
/// graphs; buckets absent from a graph count as 0.
pub fn summarize(observed: &Graph, samples: &[Graph]) -> Result<GofSummary> {
    if samples.is_empty() {
        return Err(Error::input("sample set is empty"));
    }
    if samples.iter().any(|s| s.n() != observed.n()) {
        return Err(Error::input(
            "samples must have the same node count as the observed graph",
        ));
    }
    let obs = GofStats::of(observed);
    let sample_stats: Vec<GofStats> = samples.par_iter().map(GofStats::of).collect();

    let mut rows = Vec::new();
    let n = observed.n();
    let labels: Vec<String> = (0..n).map(|d| d.to_string()).collect();
    let degree_samples: Vec<Vec<f64>> =
        sample_stats.iter().map(|s| s.degree.clone()).collect();
    push_rows(&mut rows, "degree", &labels, &obs.degree, &degree_samples);

    let esp_labels: Vec<String> = (0..n.saturating_sub(1)).map(|k| k.to_string()).collect();
    let esp_samples: Vec<Vec<f64>> = sample_stats.iter().map(esp_padded).collect();
    push_rows(&mut rows, "esp", &esp_labels, &esp_padded(&obs), &esp_samples);

    let triad_labels: Vec<String> = (0..4).map(|e| e.to_string()).collect();
    let triad_samples: Vec<Vec<f64>> =
        sample_stats.iter().map(|s| s.triad.to_vec()).collect();
    push_rows(&mut rows, "triad", &triad_labels, &obs.triad, &triad_samples);

    let geo_len = sample_stats
        .iter()
        .map(|s| s.geodesic_finite.len())
        .chain([obs.geodesic_finite.len()])
        .max()
        .unwrap();
    let mut geo_labels: Vec<String> = (1..=geo_len).map(|d| d.to_string()).collect();
    geo_labels.push("inf".to_string());
    let geo_samples: Vec<Vec<f64>> = sample_stats
        .iter()
        .map(|s| geodesic_padded(s, geo_len))
        .collect();
    push_rows(
        &mut rows,
        "geodesic",
        &geo_labels,
        &geodesic_padded(&obs, geo_len),
        &geo_samples,
    );

    Ok(GofSummary {
        sample_count: samples.len(),
        rows,
    })
}

impl GofSummary {
    /// statistic, bucket, observed, min, q1, median, q3, max, covered.
    pub fn to_csv(&self) -> String {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "statistic", "bucket", "observed", "min", "q1", "median", "q3", "max", "covered",
        ])
        .expect("write to memory");
        for r in &self.rows {
            w.write_record([
                r.statistic.as_str(),
                r.bucket.as_str(),
                &r.observed.to_string(),
                &r.min.to_string(),
                &r.q1.to_string(),
                &r.median.to_string(),
                &r.q3.to_string(),
                &r.max.to_string(),
                if r.covered { "true" } else { "false" },
            ])
            .expect("write to memory");
        }
        String::from_utf8(w.into_inner().expect("flush to memory")).expect("utf8 csv")
    }

    /// Standalone box-plot SVG for one statistic family: whisker min..max,
    /// box q1..q3, median tick, and a solid line through the observed
    /// values. None when the family has no rows.
    pub fn to_svg(&self, statistic: &str) -> Option<String> {
        let rows: Vec<&BucketSummary> =
            self.rows.iter().filter(|r| r.statistic == statistic).collect();
        if rows.is_empty() {
            return None;
        }
        let (left, top, slot, plot_h, bottom) = (48.0, 24.0, 36.0, 220.0, 36.0);
        let width = left + slot * rows.len() as f64 + 16.0;
        let height = top + plot_h + bottom;
        let y = |v: f64| top + (1.0 - v) * plot_h;
        let mut s = String::new();
        s.push_str(&format!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{width}\" height=\"{height}\" \
             viewBox=\"0 0 {width} {height}\">\n"
        ));
        s.push_str(&format!(
            "  <text x=\"{left}\" y=\"14\" font-family=\"sans-serif\" font-size=\"12\">{statistic}</text>\n"
        ));
        // y axis with ticks at 0, 0.5, 1
        s.push_str(&format!(
            "  <line x1=\"{left}\" y1=\"{}\" x2=\"{left}\" y2=\"{}\" stroke=\"black\"/>\n",
            y(1.0),
            y(0.0)
        ));
        for tick in [0.0, 0.5, 1.0] {
            let ty = y(tick);
            s.push_str(&format!(
                "  <line x1=\"{}\" y1=\"{ty}\" x2=\"{left}\" y2=\"{ty}\" stroke=\"black\"/>\n",
                left - 4.0
            ));
            s.push_str(&format!(
                "  <text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" \
                 text-anchor=\"end\">{tick}</text>\n",
                left - 6.0,
                ty + 3.0
            ));
        }
        let mut observed_pts = Vec::new();
        for (i, r) in rows.iter().enumerate() {
            let cx = left + slot * (i as f64 + 0.5);
            let half = slot * 0.3;
            s.push_str(&format!(
                "  <line x1=\"{cx}\" y1=\"{}\" x2=\"{cx}\" y2=\"{}\" stroke=\"gray\"/>\n",
                y(r.max),
                y(r.min)
            ));
            s.push_str(&format!(
                "  <rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"#cfe2f3\" \
                 stroke=\"black\"/>\n",
                cx - half,
                y(r.q3),
                2.0 * half,
                (y(r.q1) - y(r.q3)).max(0.5)
            ));
            s.push_str(&format!(
                "  <line x1=\"{}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\" \
                 stroke-width=\"1.5\"/>\n",
                cx - half,
                y(r.median),
                cx + half,
                y(r.median)
            ));
            s.push_str(&format!(
                "  <text x=\"{cx}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"10\" \
                 text-anchor=\"middle\">{}</text>\n",
                top + plot_h + 14.0,
                r.bucket
            ));
            observed_pts.push(format!("{cx},{}", y(r.observed)));
        }
        s.push_str(&format!(
            "  <polyline points=\"{}\" fill=\"none\" stroke=\"crimson\" stroke-width=\"2\"/>\n",
            observed_pts.join(" ")
        ));
        s.push_str("</svg>\n");
        Some(s)
    }
}
