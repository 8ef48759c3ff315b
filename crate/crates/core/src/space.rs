//! Exhaustive enumeration of small graph spaces: weighted feature supports,
//! isomorphism-class atlases with perturbation adjacency, and cell diameters.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::features::{binomial, FeatureSpec, FeatureTerm, FeatureVector};
use crate::graph::{canonical_form, pair_count, CanonicalCode, Graph};

pub const ENUM_MAX_NODES: usize = 8;

pub fn factorial(n: u64) -> u64 {
    (1..=n).product()
}

/// The weighted feature support of all labeled n-node graphs.
#[derive(Clone, Debug)]
pub struct FeatureSpace {
    pub spec: FeatureSpec,
    pub n: usize,
    /// feature value -> number of labeled graphs attaining it
    pub support: BTreeMap<FeatureVector, u64>,
    /// one example graph per feature value (smallest bitset seen)
    pub witnesses: Option<BTreeMap<FeatureVector, Graph>>,
}

impl FeatureSpace {
    pub fn total_weight(&self) -> u64 {
        self.support.values().sum()
    }

    /// CSV rows: feature entries in spec order, then `weight`.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        let mut header = self.spec.tags();
        header.push("weight".into());
        w.write_record(&header).map_err(csv_err)?;
        for (x, weight) in &self.support {
            let mut row: Vec<String> = x.0.iter().map(|v| v.to_string()).collect();
            row.push(weight.to_string());
            w.write_record(&row).map_err(csv_err)?;
        }
        let bytes = w.into_inner().map_err(|e| Error::input(e.to_string()))?;
        String::from_utf8(bytes).map_err(|e| Error::input(e.to_string()))
    }

    pub fn from_csv(text: &str, n: usize) -> Result<FeatureSpace> {
        let mut r = csv::Reader::from_reader(text.as_bytes());
        let header = r.headers().map_err(csv_err)?.clone();
        let cols: Vec<String> = header.iter().map(|s| s.to_string()).collect();
        if cols.last().map(String::as_str) != Some("weight") {
            return Err(Error::input("support CSV must end with a `weight` column"));
        }
        let spec = FeatureSpec::parse_tags(&cols[..cols.len() - 1])?;
        let mut support = BTreeMap::new();
        for rec in r.records() {
            let rec = rec.map_err(csv_err)?;
            if rec.len() != cols.len() {
                return Err(Error::input("ragged support CSV row"));
            }
            let parse = |s: &str| {
                s.parse::<u64>()
                    .map_err(|_| Error::input(format!("bad count {s:?} in support CSV")))
            };
            let mut vals = Vec::with_capacity(cols.len() - 1);
            for s in rec.iter().take(cols.len() - 1) {
                vals.push(parse(s)?);
            }
            let weight = parse(&rec[cols.len() - 1])?;
            support.insert(FeatureVector(vals), weight);
        }
        Ok(FeatureSpace {
            spec,
            n,
            support,
            witnesses: None,
        })
    }
}

fn csv_err(e: csv::Error) -> Error {
    Error::input(format!("csv: {e}"))
}

/// Allocation-free feature counts for an inline-bitset graph (n <= 11).
fn features_from_bits(n: usize, word: u64, spec: &FeatureSpec) -> FeatureVector {
    debug_assert!(pair_count(n) <= 64);
    let mut deg = [0u8; 12];
    let mut adj = [0u16; 12];
    let mut edges = 0u64;
    let mut w = word;
    // walk set bits, recovering (i, j) from the lexicographic pair index
    let mut row_start = 0usize;
    let mut row = 0usize;
    while w != 0 {
        let idx = w.trailing_zeros() as usize;
        w &= w - 1;
        while idx >= row_start + (n - 1 - row) {
            row_start += n - 1 - row;
            row += 1;
        }
        let i = row;
        let j = i + 1 + (idx - row_start);
        deg[i] += 1;
        deg[j] += 1;
        adj[i] |= 1 << j;
        adj[j] |= 1 << i;
        edges += 1;
    }
    let mut tri = 0u64;
    if spec
        .terms()
        .iter()
        .any(|t| matches!(t, FeatureTerm::Triangle))
    {
        let mut w = word;
        let mut row_start = 0usize;
        let mut row = 0usize;
        while w != 0 {
            let idx = w.trailing_zeros() as usize;
            w &= w - 1;
            while idx >= row_start + (n - 1 - row) {
                row_start += n - 1 - row;
                row += 1;
            }
            let i = row;
            let j = i + 1 + (idx - row_start);
            tri += (adj[i] & adj[j]).count_ones() as u64;
        }
        tri /= 3;
    }
    let values = spec
        .terms()
        .iter()
        .map(|t| match t {
            FeatureTerm::Edge => edges,
            FeatureTerm::Triangle => tri,
            FeatureTerm::KStar(k) => (0..n).map(|v| binomial(deg[v] as u64, *k as u64)).sum(),
        })
        .collect();
    FeatureVector(values)
}

#[derive(Clone, Copy, Debug)]
pub struct EnumOptions {
    /// Run the full 2^28 labeled sweep for n = 8 instead of the atlas route.
    pub allow_large: bool,
    pub witnesses: bool,
}

impl Default for EnumOptions {
    fn default() -> Self {
        EnumOptions {
            allow_large: false,
            witnesses: true,
        }
    }
}

/// Exact weighted support over all 2^C(n,2) labeled graphs.
///
/// n <= 7 sweeps the full bitset range in parallel. n = 8 derives weights
/// n!/|Aut| from the isomorphism atlas unless `allow_large` forces the sweep.
pub fn enumerate_labeled(n: usize, spec: &FeatureSpec, opts: EnumOptions) -> Result<FeatureSpace> {
    if n == 0 || n > ENUM_MAX_NODES {
        return Err(Error::unsupported_size(format!(
            "labeled enumeration supports 1 <= n <= {ENUM_MAX_NODES} \
             (n = 9 already has 2^36 labeled graphs); got {n}"
        )));
    }
    if n == 8 && !opts.allow_large {
        let atlas = enumerate_iso_classes(n)?;
        return space_from_atlas(&atlas, spec, opts.witnesses);
    }
    let total: u64 = 1u64 << pair_count(n);
    let chunk: u64 = 1 << 16;
    let n_chunks = (total + chunk - 1) / chunk;
    type Cell = (u64, Option<u64>);
    let merged: BTreeMap<FeatureVector, Cell> = (0..n_chunks)
        .into_par_iter()
        .map(|c| {
            let mut local: BTreeMap<FeatureVector, Cell> = BTreeMap::new();
            let lo = c * chunk;
            let hi = total.min(lo + chunk);
            for word in lo..hi {
                let x = features_from_bits(n, word, spec);
                let e = local.entry(x).or_insert((0, None));
                e.0 += 1;
                if opts.witnesses && e.1.is_none() {
                    e.1 = Some(word);
                }
            }
            local
        })
        .reduce(BTreeMap::new, |mut a, b| {
            for (k, (cnt, wit)) in b {
                let e = a.entry(k).or_insert((0, None));
                e.0 += cnt;
                e.1 = match (e.1, wit) {
                    (Some(x), Some(y)) => Some(x.min(y)),
                    (x, y) => x.or(y),
                };
            }
            a
        });
    let mut support = BTreeMap::new();
    let mut witnesses = BTreeMap::new();
    for (x, (cnt, wit)) in merged {
        if let Some(w) = wit {
            witnesses.insert(x.clone(), Graph::from_bits(n, w));
        }
        support.insert(x, cnt);
    }
    Ok(FeatureSpace {
        spec: spec.clone(),
        n,
        support,
        witnesses: opts.witnesses.then_some(witnesses),
    })
}

fn space_from_atlas(atlas: &IsoAtlas, spec: &FeatureSpec, witnesses: bool) -> Result<FeatureSpace> {
    let n = atlas.n;
    let nfact = factorial(n as u64);
    let mut support: BTreeMap<FeatureVector, u64> = BTreeMap::new();
    let mut wit: BTreeMap<FeatureVector, Graph> = BTreeMap::new();
    for class in &atlas.classes {
        let x = crate::features::feature_vector(&class.rep, spec)?;
        *support.entry(x.clone()).or_insert(0) += nfact / class.code.aut_count;
        if witnesses {
            wit.entry(x).or_insert_with(|| class.rep.clone());
        }
    }
    Ok(FeatureSpace {
        spec: spec.clone(),
        n,
        support,
        witnesses: witnesses.then_some(wit),
    })
}

// ---------------------------------------------------------------------------
// Isomorphism atlas
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct IsoClass {
    pub code: CanonicalCode,
    pub rep: Graph,
}

#[derive(Clone, Debug)]
pub struct IsoAtlas {
    pub n: usize,
    /// classes sorted by canonical code
    pub classes: Vec<IsoClass>,
    /// perturbation adjacency: class u ~ class v iff one toggle maps between them
    pub perturbation: Vec<Vec<u32>>,
}

/// All isomorphism classes by canonical augmentation: extend each (n-1)-node
/// class with every neighborhood mask of a new node, dedup by canonical code.
pub fn enumerate_iso_classes(n: usize) -> Result<IsoAtlas> {
    if n == 0 || n > ENUM_MAX_NODES {
        return Err(Error::unsupported_size(format!(
            "isomorphism enumeration supports 1 <= n <= {ENUM_MAX_NODES}, got {n}"
        )));
    }
    let mut reps: Vec<Graph> = vec![Graph::empty(1)];
    for m in 2..=n {
        let candidates: Vec<(Vec<u8>, u64, Graph)> = reps
            .par_iter()
            .flat_map_iter(|base| {
                let base_edges = base.edges();
                (0u64..(1u64 << (m - 1))).map(move |mask| {
                    let mut edges = base_edges.clone();
                    for v in 0..(m - 1) {
                        if mask >> v & 1 == 1 {
                            edges.push((v, m - 1));
                        }
                    }
                    let g = crate::graph::make_graph(m, &edges).expect("valid augmentation");
                    let code = canonical_form(&g).expect("within canonical budget");
                    (code.code, code.aut_count, g)
                })
            })
            .collect();
        let mut by_code: BTreeMap<Vec<u8>, Graph> = BTreeMap::new();
        for (code, _aut, g) in candidates {
            match by_code.get(&code) {
                Some(prev) if prev <= &g => {}
                _ => {
                    by_code.insert(code, g);
                }
            }
        }
        reps = by_code.into_values().collect();
    }
    let classes: Vec<IsoClass> = reps
        .into_par_iter()
        .map(|rep| {
            let code = canonical_form(&rep).expect("within canonical budget");
            IsoClass { code, rep }
        })
        .collect();
    let mut classes = classes;
    classes.sort_by(|a, b| a.code.code.cmp(&b.code.code));

    let index: std::collections::HashMap<Vec<u8>, u32> = classes
        .iter()
        .enumerate()
        .map(|(i, c)| (c.code.code.clone(), i as u32))
        .collect();
    let perturbation: Vec<Vec<u32>> = classes
        .par_iter()
        .map(|class| {
            let mut nbrs: Vec<u32> = Vec::new();
            for i in 0..n {
                for j in (i + 1)..n {
                    let t = crate::graph::toggle_edge(&class.rep, i, j).expect("in range");
                    let code = canonical_form(&t).expect("within budget").code;
                    nbrs.push(index[&code]);
                }
            }
            nbrs.sort_unstable();
            nbrs.dedup();
            nbrs
        })
        .collect();
    Ok(IsoAtlas {
        n,
        classes,
        perturbation,
    })
}

impl IsoAtlas {
    pub fn len(&self) -> usize {
        self.classes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.classes.is_empty()
    }

    /// Sum over classes of n!/|Aut|; equals 2^C(n,2) when the atlas is complete.
    pub fn labeled_total(&self) -> u64 {
        let nfact = factorial(self.n as u64);
        self.classes.iter().map(|c| nfact / c.code.aut_count).sum()
    }

    pub fn to_json(&self) -> Result<String> {
        let classes: Vec<ClassJson> = self
            .classes
            .iter()
            .map(|c| ClassJson {
                code: c.code.to_hex(),
                aut: c.code.aut_count,
                edges: c.rep.edges(),
            })
            .collect();
        let doc = AtlasJson {
            n: self.n,
            classes,
            perturbation: self.perturbation.clone(),
        };
        serde_json::to_string_pretty(&doc).map_err(|e| Error::input(e.to_string()))
    }

    pub fn from_json(text: &str) -> Result<IsoAtlas> {
        let doc: AtlasJson =
            serde_json::from_str(text).map_err(|e| Error::input(format!("atlas json: {e}")))?;
        let classes = doc
            .classes
            .into_iter()
            .map(|c| {
                let mut code = CanonicalCode::from_hex(&c.code)?;
                code.aut_count = c.aut;
                Ok(IsoClass {
                    code,
                    rep: crate::graph::make_graph(doc.n, &c.edges)?,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(IsoAtlas {
            n: doc.n,
            classes,
            perturbation: doc.perturbation,
        })
    }
}

#[derive(Serialize, Deserialize)]
struct AtlasJson {
    n: usize,
    classes: Vec<ClassJson>,
    perturbation: Vec<Vec<u32>>,
}

#[derive(Serialize, Deserialize)]
struct ClassJson {
    code: String,
    aut: u64,
    edges: Vec<(usize, usize)>,
}

// ---------------------------------------------------------------------------
// Cell diameters
// ---------------------------------------------------------------------------

/// Per feature cell, the maximum perturbation-graph distance between classes
/// in the cell. Single-class cells have diameter 0.
pub fn cell_diameter(
    atlas: &IsoAtlas,
    space: &FeatureSpace,
) -> Result<BTreeMap<FeatureVector, u32>> {
    if atlas.n != space.n {
        return Err(Error::input(format!(
            "atlas n = {} but space n = {}",
            atlas.n, space.n
        )));
    }
    let mut cells: BTreeMap<FeatureVector, Vec<u32>> = BTreeMap::new();
    for (idx, class) in atlas.classes.iter().enumerate() {
        let x = crate::features::feature_vector(&class.rep, &space.spec)?;
        cells.entry(x).or_default().push(idx as u32);
    }
    let bfs = |start: u32| -> Vec<u32> {
        let mut dist = vec![u32::MAX; atlas.classes.len()];
        let mut queue = std::collections::VecDeque::new();
        dist[start as usize] = 0;
        queue.push_back(start);
        while let Some(u) = queue.pop_front() {
            for &v in &atlas.perturbation[u as usize] {
                if dist[v as usize] == u32::MAX {
                    dist[v as usize] = dist[u as usize] + 1;
                    queue.push_back(v);
                }
            }
        }
        dist
    };
    let entries: Vec<(FeatureVector, u32)> = cells
        .into_iter()
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(x, members)| {
            let mut diam = 0u32;
            if members.len() > 1 {
                for &m in &members {
                    let dist = bfs(m);
                    for &other in &members {
                        diam = diam.max(dist[other as usize]);
                    }
                }
            }
            (x, diam)
        })
        .collect();
    Ok(entries.into_iter().collect())
}

/// CSV rows for cell diameters: feature entries, weight, diameter.
pub fn diameters_to_csv(
    space: &FeatureSpace,
    diameters: &BTreeMap<FeatureVector, u32>,
) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = space.spec.tags();
    header.push("weight".into());
    header.push("diameter".into());
    w.write_record(&header).map_err(csv_err)?;
    for (x, diam) in diameters {
        let mut row: Vec<String> = x.0.iter().map(|v| v.to_string()).collect();
        row.push(space.support.get(x).copied().unwrap_or(0).to_string());
        row.push(diam.to_string());
        w.write_record(&row).map_err(csv_err)?;
    }
    let bytes = w.into_inner().map_err(|e| Error::input(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::input(e.to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn n3_support_matches_hand_enumeration() {
        let spec = FeatureSpec::edge_triangle();
        let space = enumerate_labeled(3, &spec, EnumOptions::default()).unwrap();
        let expect: BTreeMap<FeatureVector, u64> = [
            (FeatureVector(vec![0, 0]), 1),
            (FeatureVector(vec![1, 0]), 3),
            (FeatureVector(vec![2, 0]), 3),
            (FeatureVector(vec![3, 1]), 1),
        ]
        .into_iter()
        .collect();
        assert_eq!(space.support, expect);
        assert_eq!(space.total_weight(), 8);
    }

    #[test]
    fn small_class_counts() {
        assert_eq!(enumerate_iso_classes(1).unwrap().len(), 1);
        assert_eq!(enumerate_iso_classes(2).unwrap().len(), 2);
        assert_eq!(enumerate_iso_classes(3).unwrap().len(), 4);
        assert_eq!(enumerate_iso_classes(4).unwrap().len(), 11);
        assert_eq!(enumerate_iso_classes(5).unwrap().len(), 34);
        assert_eq!(enumerate_iso_classes(6).unwrap().len(), 156);
    }

    #[test]
    fn labeled_totals_from_atlas() {
        for n in 1..=6usize {
            let atlas = enumerate_iso_classes(n).unwrap();
            assert_eq!(atlas.labeled_total(), 1u64 << pair_count(n));
        }
    }

    #[test]
    fn sweep_matches_atlas_for_n5() {
        let spec = FeatureSpec::edge_triangle();
        let swept = enumerate_labeled(5, &spec, EnumOptions::default()).unwrap();
        let atlas = enumerate_iso_classes(5).unwrap();
        let derived = space_from_atlas(&atlas, &spec, false).unwrap();
        assert_eq!(swept.support, derived.support);
    }

    #[test]
    fn enumeration_caps() {
        let spec = FeatureSpec::edge_triangle();
        assert!(matches!(
            enumerate_labeled(9, &spec, EnumOptions::default()),
            Err(Error::UnsupportedSize(_))
        ));
        assert!(matches!(
            enumerate_iso_classes(9),
            Err(Error::UnsupportedSize(_))
        ));
    }

    #[test]
    fn perturbation_connected_and_bounded() {
        let atlas = enumerate_iso_classes(5).unwrap();
        for nbrs in &atlas.perturbation {
            assert!(nbrs.len() <= pair_count(5));
        }
        let mut seen = vec![false; atlas.len()];
        let mut stack = vec![0u32];
        seen[0] = true;
        while let Some(u) = stack.pop() {
            for &v in &atlas.perturbation[u as usize] {
                if !seen[v as usize] {
                    seen[v as usize] = true;
                    stack.push(v);
                }
            }
        }
        assert!(seen.iter().all(|&s| s));
    }

    #[test]
    fn empty_and_complete_cells_have_zero_diameter() {
        let spec = FeatureSpec::edge_triangle();
        let atlas = enumerate_iso_classes(4).unwrap();
        let space = enumerate_labeled(4, &spec, EnumOptions::default()).unwrap();
        let diam = cell_diameter(&atlas, &space).unwrap();
        assert_eq!(diam[&FeatureVector(vec![0, 0])], 0);
        assert_eq!(diam[&FeatureVector(vec![6, 4])], 0);
    }

    #[test]
    fn csv_round_trip() {
        let spec = FeatureSpec::edge_triangle();
        let space = enumerate_labeled(4, &spec, EnumOptions::default()).unwrap();
        let csv = space.to_csv().unwrap();
        let back = FeatureSpace::from_csv(&csv, 4).unwrap();
        assert_eq!(back.support, space.support);
        assert_eq!(back.spec, space.spec);
    }

    #[test]
    fn atlas_json_round_trip() {
        let atlas = enumerate_iso_classes(4).unwrap();
        let json = atlas.to_json().unwrap();
        let back = IsoAtlas::from_json(&json).unwrap();
        assert_eq!(back.len(), atlas.len());
        assert_eq!(back.perturbation, atlas.perturbation);
        for (a, b) in atlas.classes.iter().zip(back.classes.iter()) {
            assert_eq!(a.code.code, b.code.code);
            assert_eq!(a.code.aut_count, b.code.aut_count);
            assert_eq!(a.rep, b.rep);
        }
    }
}
