//! Simple undirected labeled graphs on up to 256 nodes.
//!
//! Edges live in a triangular bitset over the C(n,2) unordered pairs in
//! lexicographic order (0,1),(0,2),...,(n-2,n-1). Graphs with C(n,2) <= 64
//! (n <= 11) stay in a single machine word.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

pub const MAX_NODES: usize = 256;

/// Number of unordered pairs on n nodes.
pub fn pair_count(n: usize) -> usize {
    n * (n - 1) / 2
}

/// Bit position of pair (i, j), i < j, in lexicographic order.
#[inline]
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i < j && j < n);
    i * (2 * n - i - 1) / 2 + (j - i - 1)
}

/// Inverse of `pair_index`.
pub fn index_pair(n: usize, mut idx: usize) -> (usize, usize) {
    debug_assert!(idx < pair_count(n));
    let mut i = 0usize;
    loop {
        let row = n - 1 - i;
        if idx < row {
            return (i, i + 1 + idx);
        }
        idx -= row;
        i += 1;
    }
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
enum Bits {
    Inline(u64),
    Heap(Box<[u64]>),
}

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Graph {
    n: u16,
    bits: Bits,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        assert!(n >= 1 && n <= MAX_NODES, "node count out of range");
        let bits = if pair_count(n) <= 64 {
            Bits::Inline(0)
        } else {
            Bits::Heap(vec![0u64; (pair_count(n) + 63) / 64].into_boxed_slice())
        };
        Graph { n: n as u16, bits }
    }

    pub fn complete(n: usize) -> Self {
        let mut g = Graph::empty(n);
        for idx in 0..pair_count(n) {
            g.set_bit(idx, true);
        }
        g
    }

    /// Build an n-node graph directly from a pair bitset word (n <= 11).
    pub fn from_bits(n: usize, bits: u64) -> Self {
        assert!(pair_count(n) <= 64, "from_bits needs C(n,2) <= 64");
        let mask = if pair_count(n) == 64 {
            u64::MAX
        } else {
            (1u64 << pair_count(n)) - 1
        };
        Graph {
            n: n as u16,
            bits: Bits::Inline(bits & mask),
        }
    }

    pub fn n(&self) -> usize {
        self.n as usize
    }

    #[inline]
    fn get_bit(&self, idx: usize) -> bool {
        match &self.bits {
            Bits::Inline(w) => (w >> idx) & 1 == 1,
            Bits::Heap(ws) => (ws[idx / 64] >> (idx % 64)) & 1 == 1,
        }
    }

    #[inline]
    fn set_bit(&mut self, idx: usize, value: bool) {
        match &mut self.bits {
            Bits::Inline(w) => {
                if value {
                    *w |= 1 << idx;
                } else {
                    *w &= !(1 << idx);
                }
            }
            Bits::Heap(ws) => {
                if value {
                    ws[idx / 64] |= 1 << (idx % 64);
                } else {
                    ws[idx / 64] &= !(1 << (idx % 64));
                }
            }
        }
    }

    fn check_pair(&self, i: usize, j: usize) -> Result<(usize, usize)> {
        if i == j {
            return Err(Error::input(format!("self-loop at node {i}")));
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        if b >= self.n() {
            return Err(Error::input(format!(
                "node index {b} out of range for {} nodes",
                self.n()
            )));
        }
        Ok((a, b))
    }

    pub fn has_edge(&self, i: usize, j: usize) -> bool {
        if i == j || i >= self.n() || j >= self.n() {
            return false;
        }
        let (a, b) = if i < j { (i, j) } else { (j, i) };
        self.get_bit(pair_index(self.n(), a, b))
    }

    pub fn edge_count(&self) -> u64 {
        match &self.bits {
            Bits::Inline(w) => w.count_ones() as u64,
            Bits::Heap(ws) => ws.iter().map(|w| w.count_ones() as u64).sum(),
        }
    }

    pub fn edges(&self) -> Vec<(usize, usize)> {
        let n = self.n();
        let mut out = Vec::with_capacity(self.edge_count() as usize);
        for idx in 0..pair_count(n) {
            if self.get_bit(idx) {
                out.push(index_pair(n, idx));
            }
        }
        out
    }

    pub fn degrees(&self) -> Vec<u32> {
        let mut deg = vec![0u32; self.n()];
        for (i, j) in self.edges() {
            deg[i] += 1;
            deg[j] += 1;
        }
        deg
    }

    /// Adjacency rows as node bitsets, `words` u64 words per row.
    pub fn adjacency_rows(&self) -> AdjacencyRows {
        let n = self.n();
        let words = (n + 63) / 64;
        let mut rows = vec![0u64; n * words];
        for (i, j) in self.edges() {
            rows[i * words + j / 64] |= 1 << (j % 64);
            rows[j * words + i / 64] |= 1 << (i % 64);
        }
        AdjacencyRows { words, rows }
    }

    /// Apply a node relabeling: node v becomes perm[v].
    pub fn relabel(&self, perm: &[usize]) -> Graph {
        assert_eq!(perm.len(), self.n(), "permutation length mismatch");
        let mut g = Graph::empty(self.n());
        for (i, j) in self.edges() {
            let (a, b) = (perm[i], perm[j]);
            let (a, b) = if a < b { (a, b) } else { (b, a) };
            g.set_bit(pair_index(self.n(), a, b), true);
        }
        g
    }

    /// Inline bitset word, if this graph fits in one (C(n,2) <= 64).
    pub fn bits_u64(&self) -> Option<u64> {
        match &self.bits {
            Bits::Inline(w) => Some(*w),
            Bits::Heap(_) => None,
        }
    }

    /// Labeled-graph identity as bytes: node count then little-endian bitset.
    pub fn identity_bytes(&self) -> Vec<u8> {
        let mut out = vec![self.n as u8];
        let n = self.n();
        let nbytes = (pair_count(n) + 7) / 8;
        let mut bytes = vec![0u8; nbytes];
        for idx in 0..pair_count(n) {
            if self.get_bit(idx) {
                bytes[idx / 8] |= 1 << (idx % 8);
            }
        }
        out.extend_from_slice(&bytes);
        out
    }
}

impl fmt::Debug for Graph {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Graph(n={}, edges={:?})", self.n, self.edges())
    }
}

pub struct AdjacencyRows {
    words: usize,
    rows: Vec<u64>,
}

impl AdjacencyRows {
    #[inline]
    pub fn row(&self, i: usize) -> &[u64] {
        &self.rows[i * self.words..(i + 1) * self.words]
    }

    /// |N(i) ∩ N(j)|.
    #[inline]
    pub fn common_neighbors(&self, i: usize, j: usize) -> u32 {
        let (a, b) = (self.row(i), self.row(j));
        a.iter().zip(b).map(|(x, y)| (x & y).count_ones()).sum()
    }
}

pub fn make_graph(n: usize, edge_list: &[(usize, usize)]) -> Result<Graph> {
    if n == 0 || n > MAX_NODES {
        return Err(Error::input(format!(
            "node count must be in 1..={MAX_NODES}, got {n}"
        )));
    }
    let mut g = Graph::empty(n);
    for &(i, j) in edge_list {
        let (a, b) = g.check_pair(i, j)?;
        g.set_bit(pair_index(n, a, b), true);
    }
    Ok(g)
}

/// Value-semantics edge flip: returns a copy differing in exactly the (i,j) bit.
pub fn toggle_edge(g: &Graph, i: usize, j: usize) -> Result<Graph> {
    let (a, b) = g.check_pair(i, j)?;
    let idx = pair_index(g.n(), a, b);
    let mut out = g.clone();
    out.set_bit(idx, !g.get_bit(idx));
    Ok(out)
}

/// Number of unordered pairs whose edge bit differs.
pub fn hamming_distance(a: &Graph, b: &Graph) -> Result<u64> {
    if a.n != b.n {
        return Err(Error::input(format!(
            "node count mismatch: {} vs {}",
            a.n, b.n
        )));
    }
    let d = match (&a.bits, &b.bits) {
        (Bits::Inline(x), Bits::Inline(y)) => (x ^ y).count_ones() as u64,
        (Bits::Heap(xs), Bits::Heap(ys)) => xs
            .iter()
            .zip(ys.iter())
            .map(|(x, y)| (x ^ y).count_ones() as u64)
            .sum(),
        _ => unreachable!("same n implies same backing"),
    };
    Ok(d)
}

// ---------------------------------------------------------------------------
// Canonical form
// ---------------------------------------------------------------------------

pub const CANONICAL_MAX_NODES: usize = 10;

#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Debug)]
pub struct CanonicalCode {
    /// Node count byte followed by the canonical pair bitset, little-endian bits.
    pub code: Vec<u8>,
    /// Order of the automorphism group.
    pub aut_count: u64,
}

impl CanonicalCode {
    pub fn to_hex(&self) -> String {
        self.code.iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn from_hex(s: &str) -> Result<Self> {
        if s.len() % 2 != 0 {
            return Err(Error::input("odd-length hex code"));
        }
        let code = (0..s.len() / 2)
            .map(|k| u8::from_str_radix(&s[2 * k..2 * k + 2], 16))
            .collect::<std::result::Result<Vec<u8>, _>>()
            .map_err(|e| Error::input(format!("bad hex code: {e}")))?;
        Ok(CanonicalCode { code, aut_count: 1 })
    }
}

/// Stable vertex coloring: iterated refinement of (color, sorted neighbor colors).
/// Color ranks are identifier-free, so equal across isomorphic graphs.
fn wl_colors(g: &Graph) -> Vec<u32> {
    let n = g.n();
    let adj: Vec<Vec<usize>> = {
        let mut a = vec![Vec::new(); n];
        for (i, j) in g.edges() {
            a[i].push(j);
            a[j].push(i);
        }
        a
    };
    let mut colors: Vec<u32> = adj.iter().map(|nb| nb.len() as u32).collect();
    {
        // normalize initial degrees to dense ranks by sorted value
        let mut vals: Vec<u32> = colors.clone();
        vals.sort_unstable();
        vals.dedup();
        for c in colors.iter_mut() {
            *c = vals.binary_search(c).unwrap() as u32;
        }
    }
    loop {
        let mut keys: Vec<(u32, Vec<u32>)> = (0..n)
            .map(|v| {
                let mut nb: Vec<u32> = adj[v].iter().map(|&u| colors[u]).collect();
                nb.sort_unstable();
                (colors[v], nb)
            })
            .collect();
        let mut sorted = keys.clone();
        sorted.sort();
        sorted.dedup();
        let next: Vec<u32> = keys
            .drain(..)
            .map(|k| sorted.binary_search(&k).unwrap() as u32)
            .collect();
        if next == colors {
            return colors;
        }
        colors = next;
    }
}

/// Canonical form by refinement plus backtracking search.
///
/// Orders vertices by stable color rank, then maximizes the adjacency
/// bitstring (bits appended column-wise: for position k, bits to positions
/// 0..k). The number of orderings achieving the maximum is |Aut(g)|.
pub fn canonical_form(g: &Graph) -> Result<CanonicalCode> {
    let n = g.n();
    if n > CANONICAL_MAX_NODES {
        return Err(Error::unsupported_size(format!(
            "canonical form supports n <= {CANONICAL_MAX_NODES}, got {n}"
        )));
    }
    let colors = wl_colors(g);
    // position block k gets vertices of color rank block_color[k]
    let mut by_color: Vec<(u32, usize)> = colors.iter().cloned().zip(0..n).collect();
    by_color.sort();
    let position_color: Vec<u32> = by_color.iter().map(|&(c, _)| c).collect();

    let adj: Vec<u64> = {
        // node-adjacency rows as single words (n <= 10)
        let mut rows = vec![0u64; n];
        for (i, j) in g.edges() {
            rows[i] |= 1 << j;
            rows[j] |= 1 << i;
        }
        rows
    };

    struct Search {
        n: usize,
        adj: Vec<u64>,
        colors: Vec<u32>,
        position_color: Vec<u32>,
        // segment k = packed adjacency bits of position k vs 0..k, bit (i,k) at weight 2^(k-1-i)
        best: Vec<u32>,
        valid: usize,
        count: u64,
        placed: Vec<usize>,
        used: u64,
    }

    impl Search {
        fn dfs(&mut self, k: usize) {
            if k == self.n {
                self.count += 1;
                return;
            }
            let want = self.position_color[k];
            for u in 0..self.n {
                if self.used >> u & 1 == 1 || self.colors[u] != want {
                    continue;
                }
                let mut seg: u32 = 0;
                for (w, &v) in self.placed[..k].iter().enumerate() {
                    seg |= (((self.adj[v] >> u) & 1) as u32) << (k - 1 - w);
                }
                if k < self.valid {
                    if seg < self.best[k] {
                        continue;
                    }
                    if seg > self.best[k] {
                        self.best[k] = seg;
                        self.valid = k + 1;
                        self.count = 0;
                    }
                } else {
                    self.best[k] = seg;
                    self.valid = k + 1;
                }
                self.used |= 1 << u;
                self.placed[k] = u;
                self.dfs(k + 1);
                self.used &= !(1 << u);
            }
        }
    }

    let mut s = Search {
        n,
        adj,
        colors,
        position_color,
        best: vec![0u32; n],
        valid: 0,
        count: 0,
        placed: vec![0usize; n],
        used: 0,
    };
    s.dfs(0);

    // repack best segments into the lexicographic pair-bit layout
    let mut canon = Graph::empty(n);
    for k in 1..n {
        for i in 0..k {
            if s.best[k] >> (k - 1 - i) & 1 == 1 {
                canon.set_bit(pair_index(n, i, k), true);
            }
        }
    }
    Ok(CanonicalCode {
        code: canon.identity_bytes(),
        aut_count: s.count,
    })
}

// ---------------------------------------------------------------------------
// Random-walk neighborhoods
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct Neighborhood {
    pub center: Graph,
    /// Distinct visited graphs in first-visit order; members[0] == center.
    pub members: Vec<Graph>,
    pub max_edit: Option<u32>,
}

#[derive(Clone, Copy, Debug, Default)]
pub struct WalkOptions {
    pub max_edit: Option<u32>,
    /// Jump back to the center after this many steps (off by default).
    pub restart_every: Option<u64>,
}

/// Uniform single-toggle random walk collecting every distinct visited graph.
/// Proposals beyond `max_edit` toggles from the center are rejected in place.
pub fn random_walk_neighborhood(
    center: &Graph,
    steps: u64,
    opts: WalkOptions,
    seed: u64,
) -> Neighborhood {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = center.n();
    let pairs = pair_count(n);
    let mut members = vec![center.clone()];
    let mut seen: std::collections::HashSet<Graph> = members.iter().cloned().collect();
    let mut current = center.clone();
    for step in 0..steps {
        if let Some(r) = opts.restart_every {
            if r > 0 && step > 0 && step % r == 0 {
                current = center.clone();
            }
        }
        let idx = rng.gen_range(0..pairs);
        let (i, j) = index_pair(n, idx);
        let candidate = toggle_edge(&current, i, j).expect("in-range toggle");
        if let Some(cap) = opts.max_edit {
            let d = hamming_distance(center, &candidate).expect("same n");
            if d > cap as u64 {
                continue;
            }
        }
        if seen.insert(candidate.clone()) {
            members.push(candidate.clone());
        }
        current = candidate;
    }
    Neighborhood {
        center: center.clone(),
        members,
        max_edit: opts.max_edit,
    }
}

// ---------------------------------------------------------------------------
// Edge-list text format
// ---------------------------------------------------------------------------

/// Parse `i j` pairs, one per line; `#` starts a comment; blank lines skipped.
/// Node count is max index + 1 unless overridden by the `nodes` argument or a
/// `# nodes: N` header comment (which our own writer emits).
pub fn parse_edge_list(text: &str, nodes: Option<usize>) -> Result<Graph> {
    let mut edges: Vec<(usize, usize)> = Vec::new();
    let mut max_idx: Option<usize> = None;
    let mut header_nodes: Option<usize> = None;
    for (lineno, raw) in text.lines().enumerate() {
        let line = match raw.find('#') {
            Some(pos) => {
                if let Some(rest) = raw[pos..].strip_prefix("# nodes:") {
                    if let Ok(n) = rest.trim().parse::<usize>() {
                        header_nodes = Some(n);
                    }
                }
                &raw[..pos]
            }
            None => raw,
        };
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut it = line.split_whitespace();
        let (a, b) = match (it.next(), it.next(), it.next()) {
            (Some(a), Some(b), None) => (a, b),
            _ => {
                return Err(Error::input(format!(
                    "line {}: expected two node indices, got {line:?}",
                    lineno + 1
                )))
            }
        };
        let parse = |tok: &str| {
            tok.parse::<usize>()
                .map_err(|_| Error::input(format!("line {}: bad node index {tok:?}", lineno + 1)))
        };
        let (i, j) = (parse(a)?, parse(b)?);
        if i == j {
            return Err(Error::input(format!(
                "line {}: self-loop at node {i}",
                lineno + 1
            )));
        }
        max_idx = Some(max_idx.map_or(i.max(j), |m| m.max(i).max(j)));
        edges.push((i, j));
    }
    let n = match (nodes.or(header_nodes), max_idx) {
        (Some(n), _) => n,
        (None, Some(m)) => m + 1,
        (None, None) => {
            return Err(Error::input(
                "empty edge list and no node count given; cannot infer node count",
            ))
        }
    };
    make_graph(n, &edges)
}

pub fn format_edge_list(g: &Graph) -> String {
    let mut out = String::new();
    out.push_str(&format!("# nodes: {}\n", g.n()));
    for (i, j) in g.edges() {
        out.push_str(&format!("{i} {j}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_index_round_trip() {
        for n in [2usize, 3, 5, 11, 12, 40] {
            for idx in 0..pair_count(n) {
                let (i, j) = index_pair(n, idx);
                assert!(i < j && j < n);
                assert_eq!(pair_index(n, i, j), idx);
            }
        }
    }

    #[test]
    fn make_graph_examples() {
        let k3 = make_graph(3, &[(0, 1), (1, 2), (0, 2)]).unwrap();
        assert_eq!(k3.edge_count(), 3);
        let empty = make_graph(4, &[]).unwrap();
        assert_eq!(empty.edge_count(), 0);
        let dedup = make_graph(3, &[(1, 0), (0, 1)]).unwrap();
        assert_eq!(dedup.edge_count(), 1);
        assert!(make_graph(3, &[(0, 3)]).is_err());
        assert!(make_graph(3, &[(1, 1)]).is_err());
    }

    #[test]
    fn toggle_examples() {
        let e3 = Graph::empty(3);
        let g = toggle_edge(&e3, 0, 1).unwrap();
        assert_eq!(g.edge_count(), 1);
        assert_eq!(toggle_edge(&g, 0, 1).unwrap(), e3);
        let k3 = Graph::complete(3);
        let path = toggle_edge(&k3, 0, 2).unwrap();
        assert_eq!(path.edge_count(), 2);
        assert!(toggle_edge(&e3, 1, 1).is_err());
        assert!(toggle_edge(&e3, 0, 5).is_err());
    }

    #[test]
    fn hamming_examples() {
        let k3 = Graph::complete(3);
        let e3 = Graph::empty(3);
        assert_eq!(hamming_distance(&k3, &e3).unwrap(), 3);
        assert_eq!(hamming_distance(&k3, &k3).unwrap(), 0);
        let path = make_graph(3, &[(0, 1), (1, 2)]).unwrap();
        assert_eq!(hamming_distance(&path, &k3).unwrap(), 1);
        assert!(hamming_distance(&k3, &Graph::empty(4)).is_err());
    }

    #[test]
    fn heap_backed_graphs() {
        let n = 40; // C(40,2) = 780 > 64
        let mut g = Graph::empty(n);
        assert!(g.bits_u64().is_none());
        g = toggle_edge(&g, 0, 39).unwrap();
        g = toggle_edge(&g, 17, 22).unwrap();
        assert_eq!(g.edge_count(), 2);
        assert!(g.has_edge(39, 0));
        assert_eq!(hamming_distance(&g, &Graph::empty(n)).unwrap(), 2);
        let k = Graph::complete(n);
        assert_eq!(k.edge_count(), pair_count(n) as u64);
    }

    #[test]
    fn canonical_k3_and_paths() {
        let k3 = Graph::complete(3);
        let c = canonical_form(&k3).unwrap();
        assert_eq!(c.aut_count, 6);
        for perm in [[0, 1, 2], [1, 0, 2], [2, 1, 0], [1, 2, 0]] {
            assert_eq!(canonical_form(&k3.relabel(&perm)).unwrap().code, c.code);
        }
        let p1 = make_graph(3, &[(0, 1), (1, 2)]).unwrap();
        let p2 = make_graph(3, &[(1, 0), (0, 2)]).unwrap();
        assert_eq!(
            canonical_form(&p1).unwrap().code,
            canonical_form(&p2).unwrap().code
        );
        assert_eq!(canonical_form(&p1).unwrap().aut_count, 2);
    }

    #[test]
    fn canonical_codes_n3_distinct() {
        let mut codes = std::collections::HashSet::new();
        for bits in 0u64..8 {
            codes.insert(canonical_form(&Graph::from_bits(3, bits)).unwrap().code);
        }
        assert_eq!(codes.len(), 4);
    }

    #[test]
    fn canonical_rejects_large() {
        assert!(canonical_form(&Graph::empty(11)).is_err());
    }

    #[test]
    fn walk_zero_steps() {
        let g = make_graph(4, &[(0, 1)]).unwrap();
        let nb = random_walk_neighborhood(&g, 0, WalkOptions::default(), 7);
        assert_eq!(nb.members.len(), 1);
        assert_eq!(nb.members[0], g);
    }

    #[test]
    fn walk_respects_cap_and_seed() {
        let g = Graph::empty(8);
        let opts = WalkOptions {
            max_edit: Some(3),
            ..Default::default()
        };
        let nb1 = random_walk_neighborhood(&g, 4000, opts, 42);
        let nb2 = random_walk_neighborhood(&g, 4000, opts, 42);
        assert_eq!(nb1.members, nb2.members);
        assert!(nb1.members.len() > 100);
        for m in &nb1.members {
            assert!(hamming_distance(&g, m).unwrap() <= 3);
        }
        let nb3 = random_walk_neighborhood(&g, 4000, opts, 43);
        assert_ne!(nb1.members, nb3.members);
    }

    #[test]
    fn edge_list_round_trip() {
        let g = make_graph(5, &[(0, 1), (2, 4), (1, 3)]).unwrap();
        let txt = format_edge_list(&g);
        let back = parse_edge_list(&txt, None).unwrap();
        assert_eq!(back, g);
    }

    #[test]
    fn edge_list_parsing() {
        let g = parse_edge_list("# comment\n0 1\n\n2 3 # trailing\n", None).unwrap();
        assert_eq!(g.n(), 4);
        assert_eq!(g.edge_count(), 2);
        let g = parse_edge_list("0 1\n", Some(6)).unwrap();
        assert_eq!(g.n(), 6);
        assert!(parse_edge_list("0\n", None).is_err());
        assert!(parse_edge_list("0 0\n", None).is_err());
        assert!(parse_edge_list("0 x\n", None).is_err());
        assert!(parse_edge_list("", None).is_err());
        assert!(parse_edge_list("# only comments\n", Some(3)).is_ok());
        assert!(parse_edge_list("0 9\n", Some(4)).is_err());
    }
}
