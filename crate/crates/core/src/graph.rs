//! Immutable sparse undirected simple graphs.
//!
//! Adjacency is stored in compressed sparse row form: `offsets[v]..offsets[v + 1]`
//! indexes the strictly increasing neighbor list of `v` inside `targets`.
//! Constructors either merge rows that are already sorted or go through
//! `Graph::build`, which sorts and deduplicates.

use std::collections::hash_map::Entry;
use std::collections::HashMap;
use std::collections::VecDeque;
use std::fmt::Write as _;
use std::path::Path;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Graph {
    offsets: Vec<usize>,
    targets: Vec<u32>,
}

/// Seed for a reproducible random stream. Two equal seeds always produce the
/// same sequence of draws.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RngSeed {
    pub seed: u64,
    pub stream_id: u64,
}

impl RngSeed {
    pub fn new(seed: u64, stream_id: u64) -> Self {
        Self { seed, stream_id }
    }

    pub fn rng(&self) -> ChaCha8Rng {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        rng.set_stream(self.stream_id);
        rng
    }
}

/// The `r`-ball around a vertex as an induced subgraph. The center is always
/// local id 0.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct RootedSubgraph {
    pub root: usize,
    pub graph: Graph,
    pub original_ids: Vec<usize>,
}

impl Graph {
    pub fn empty(n: usize) -> Self {
        Self {
            offsets: vec![0; n + 1],
            targets: Vec::new(),
        }
    }

    pub fn complete(n: usize) -> Self {
        let edges = (0..n).flat_map(|u| (u + 1..n).map(move |v| (u as u32, v as u32)));
        Self::build(n, edges)
    }

    /// Builds a graph from an edge list, rejecting self-loops and out-of-range
    /// endpoints. Repeated edges collapse to one.
    pub fn from_edges<I>(n: usize, edges: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, usize)>,
    {
        let mut checked = Vec::new();
        for (u, v) in edges {
            if u >= n || v >= n {
                return param(format!("edge ({u}, {v}) out of range for n = {n}"));
            }
            if u == v {
                return param(format!("self-loop at vertex {u}"));
            }
            checked.push((u as u32, v as u32));
        }
        Ok(Self::build(n, checked))
    }

    /// Endpoints must be distinct and `< n`; duplicates are removed.
    pub(crate) fn build<I>(n: usize, edges: I) -> Self
    where
        I: IntoIterator<Item = (u32, u32)>,
    {
        assert!(n <= u32::MAX as usize, "vertex count exceeds u32 range");
        let edges: Vec<(u32, u32)> = edges.into_iter().collect();
        let mut degree = vec![0usize; n];
        for &(u, v) in &edges {
            debug_assert!(u != v);
            degree[u as usize] += 1;
            degree[v as usize] += 1;
        }
        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        let mut acc = 0;
        for d in &degree {
            acc += d;
            offsets.push(acc);
        }
        let mut cursor = offsets[..n].to_vec();
        let mut targets = vec![0u32; acc];
        for &(u, v) in &edges {
            targets[cursor[u as usize]] = v;
            cursor[u as usize] += 1;
            targets[cursor[v as usize]] = u;
            cursor[v as usize] += 1;
        }
        drop(edges);

        // sort each row and squeeze out duplicates in place
        let mut write = 0;
        let mut new_offsets = Vec::with_capacity(n + 1);
        new_offsets.push(0);
        for v in 0..n {
            let (start, end) = (offsets[v], offsets[v + 1]);
            targets[start..end].sort_unstable();
            let mut last = None;
            for i in start..end {
                let t = targets[i];
                if last != Some(t) {
                    targets[write] = t;
                    write += 1;
                    last = Some(t);
                }
            }
            new_offsets.push(write);
        }
        targets.truncate(write);
        let g = Self {
            offsets: new_offsets,
            targets,
        };
        debug_assert!(g.is_valid());
        g
    }

    fn from_csr_unchecked(offsets: Vec<usize>, targets: Vec<u32>) -> Self {
        let g = Self { offsets, targets };
        debug_assert!(g.is_valid());
        g
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.offsets.len() - 1
    }

    #[inline]
    pub fn edge_count(&self) -> usize {
        self.targets.len() / 2
    }

    #[inline]
    pub fn degree(&self, v: usize) -> usize {
        self.offsets[v + 1] - self.offsets[v]
    }

    #[inline]
    pub fn neighbors(&self, v: usize) -> &[u32] {
        &self.targets[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn degrees(&self) -> Vec<usize> {
        (0..self.n()).map(|v| self.degree(v)).collect()
    }

    pub fn max_degree(&self) -> usize {
        (0..self.n()).map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn has_edge(&self, u: usize, v: usize) -> bool {
        u < self.n() && v < self.n() && self.neighbors(u).binary_search(&(v as u32)).is_ok()
    }

    /// Edges as `(u, v)` with `u < v`, in increasing lexicographic order.
    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.n()).flat_map(move |u| {
            self.neighbors(u)
                .iter()
                .filter(move |&&v| (v as usize) > u)
                .map(move |&v| (u, v as usize))
        })
    }

    /// Symmetric, loop-free, strictly increasing adjacency rows.
    pub fn is_valid(&self) -> bool {
        let n = self.n();
        if self.offsets[0] != 0 || *self.offsets.last().unwrap() != self.targets.len() {
            return false;
        }
        if !self.targets.len().is_multiple_of(2) {
            return false;
        }
        for v in 0..n {
            if self.offsets[v] > self.offsets[v + 1] {
                return false;
            }
            let row = self.neighbors(v);
            if row.windows(2).any(|w| w[0] >= w[1]) {
                return false;
            }
            for &u in row {
                let u = u as usize;
                if u >= n || u == v || !self.has_edge(u, v) {
                    return false;
                }
            }
        }
        true
    }

    pub fn check_vertex(&self, v: usize) -> Result<()> {
        if v >= self.n() {
            return param(format!("vertex {v} out of range for n = {}", self.n()));
        }
        Ok(())
    }
}

/// Samples G(n, p). Pairs are visited in linearized order and the gap to the
/// next present edge is drawn from a geometric distribution, so the expected
/// work is O(n + n^2 p).
pub fn generate_er(n: usize, p: f64, seed: RngSeed) -> Result<Graph> {
    generate_er_with(n, p, &mut seed.rng())
}

pub fn generate_er_with<R: Rng + ?Sized>(n: usize, p: f64, rng: &mut R) -> Result<Graph> {
    if !(0.0..=1.0).contains(&p) {
        return param(format!("edge probability {p} outside [0, 1]"));
    }
    if n < 2 || p == 0.0 {
        return Ok(Graph::empty(n));
    }
    if p == 1.0 {
        return Ok(Graph::complete(n));
    }
    let log_q = (-p).ln_1p();
    let mut edges = Vec::with_capacity(((n as f64) * (n as f64 - 1.0) * p * 0.5 * 1.1) as usize + 16);
    // Batagelj-Brandes skipping: row v, column w < v
    let mut v: u64 = 1;
    let mut w: i64 = -1;
    let n64 = n as u64;
    while v < n64 {
        let r: f64 = rng.gen();
        let skip = ((1.0 - r).ln() / log_q).floor();
        if skip >= (n64 * n64) as f64 {
            break;
        }
        w += 1 + skip as i64;
        while w >= v as i64 && v < n64 {
            w -= v as i64;
            v += 1;
        }
        if v < n64 {
            edges.push((w as u32, v as u32));
        }
    }
    Ok(Graph::build(n, edges))
}

fn check_same_size(g1: &Graph, g2: &Graph) -> Result<()> {
    if g1.n() != g2.n() {
        return param(format!("vertex counts differ: {} vs {}", g1.n(), g2.n()));
    }
    Ok(())
}

fn merge_rows(g1: &Graph, g2: &Graph, keep_common: bool) -> Graph {
    let n = g1.n();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut targets = Vec::with_capacity(g1.targets.len() + g2.targets.len());
    offsets.push(0);
    for v in 0..n {
        let (a, b) = (g1.neighbors(v), g2.neighbors(v));
        let (mut i, mut j) = (0, 0);
        while i < a.len() && j < b.len() {
            match a[i].cmp(&b[j]) {
                std::cmp::Ordering::Less => {
                    targets.push(a[i]);
                    i += 1;
                }
                std::cmp::Ordering::Greater => {
                    targets.push(b[j]);
                    j += 1;
                }
                std::cmp::Ordering::Equal => {
                    if keep_common {
                        targets.push(a[i]);
                    }
                    i += 1;
                    j += 1;
                }
            }
        }
        targets.extend_from_slice(&a[i..]);
        targets.extend_from_slice(&b[j..]);
        offsets.push(targets.len());
    }
    Graph::from_csr_unchecked(offsets, targets)
}

/// Edge set union.
pub fn union_graph(g1: &Graph, g2: &Graph) -> Result<Graph> {
    check_same_size(g1, g2)?;
    Ok(merge_rows(g1, g2, true))
}

/// Symmetric difference of the edge sets.
pub fn xor_graph(g1: &Graph, g2: &Graph) -> Result<Graph> {
    check_same_size(g1, g2)?;
    Ok(merge_rows(g1, g2, false))
}

/// Relabels vertex `v` as `pi[v]`.
pub fn permute(g: &Graph, pi: &[usize]) -> Result<Graph> {
    check_permutation(pi, g.n())?;
    Ok(Graph::build(
        g.n(),
        g.edges().map(|(u, v)| (pi[u] as u32, pi[v] as u32)),
    ))
}

pub fn check_permutation(pi: &[usize], n: usize) -> Result<()> {
    if pi.len() != n {
        return param(format!("permutation has length {}, expected {n}", pi.len()));
    }
    let mut seen = vec![false; n];
    for &x in pi {
        if x >= n || seen[x] {
            return param(format!("map is not a bijection on 0..{n} (image {x})"));
        }
        seen[x] = true;
    }
    Ok(())
}

pub fn invert_permutation(pi: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; pi.len()];
    for (i, &x) in pi.iter().enumerate() {
        inv[x] = i;
    }
    inv
}

/// Uniform random permutation of `0..n` (Fisher-Yates).
pub fn random_permutation<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Vec<usize> {
    let mut pi: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        let j = rng.gen_range(0..=i);
        pi.swap(i, j);
    }
    pi
}

/// Induced subgraph on every vertex within distance `r` of `v`. Local ids follow
/// BFS discovery order, so the root is 0.
pub fn neighborhood(g: &Graph, v: usize, r: usize) -> Result<RootedSubgraph> {
    g.check_vertex(v)?;
    let mut local: HashMap<u32, u32> = HashMap::new();
    let mut original_ids = vec![v];
    local.insert(v as u32, 0);
    let mut queue = VecDeque::from([(v as u32, 0usize)]);
    while let Some((x, dist)) = queue.pop_front() {
        if dist == r {
            continue;
        }
        for &y in g.neighbors(x as usize) {
            if let Entry::Vacant(slot) = local.entry(y) {
                slot.insert(original_ids.len() as u32);
                original_ids.push(y as usize);
                queue.push_back((y, dist + 1));
            }
        }
    }
    let mut edges = Vec::new();
    for (i, &x) in original_ids.iter().enumerate() {
        for y in g.neighbors(x) {
            if let Some(&j) = local.get(y) {
                if (j as usize) > i {
                    edges.push((i as u32, j));
                }
            }
        }
    }
    Ok(RootedSubgraph {
        root: 0,
        graph: Graph::build(original_ids.len(), edges),
        original_ids,
    })
}

/// Size of the 2-ball around every vertex (the center included).
pub fn two_ball_sizes(g: &Graph) -> Vec<usize> {
    let n = g.n();
    let mut stamp = vec![u32::MAX; n];
    (0..n)
        .map(|v| {
            let tag = v as u32;
            stamp[v] = tag;
            let mut count = 1;
            for &u in g.neighbors(v) {
                if stamp[u as usize] != tag {
                    stamp[u as usize] = tag;
                    count += 1;
                }
                for &w in g.neighbors(u as usize) {
                    if stamp[w as usize] != tag {
                        stamp[w as usize] = tag;
                        count += 1;
                    }
                }
            }
            count
        })
        .collect()
}

/// Text form: a header `n m`, then `m` lines `u v` with `u < v`, sorted.
pub fn write_edge_list(g: &Graph) -> String {
    let mut out = String::with_capacity(16 + g.edge_count() * 12);
    let _ = writeln!(out, "{} {}", g.n(), g.edge_count());
    for (u, v) in g.edges() {
        let _ = writeln!(out, "{u} {v}");
    }
    out
}

pub fn read_edge_list(text: &str) -> Result<Graph> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

    let parse_pair = |line: usize, l: &str| -> Result<(usize, usize)> {
        let mut it = l.split_whitespace();
        let bad = || Error::Parse {
            line,
            msg: format!("expected two non-negative integers, got {l:?}"),
        };
        let a = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        let b = it.next().ok_or_else(bad)?.parse().map_err(|_| bad())?;
        if it.next().is_some() {
            return Err(bad());
        }
        Ok((a, b))
    };

    let (hline, header) = lines.next().ok_or(Error::Parse {
        line: 1,
        msg: "missing header line".into(),
    })?;
    let (n, m) = parse_pair(hline, header)?;
    if n > u32::MAX as usize {
        return Err(Error::Parse {
            line: hline,
            msg: format!("vertex count {n} too large"),
        });
    }
    let mut edges = Vec::with_capacity(m);
    let mut seen = std::collections::HashSet::with_capacity(m);
    for (line, l) in lines.by_ref() {
        let (u, v) = parse_pair(line, l)?;
        let err = |msg: String| Error::Parse { line, msg };
        if u >= n || v >= n {
            return Err(err(format!("vertex id out of range for n = {n}")));
        }
        if u == v {
            return Err(err(format!("self-loop at vertex {u}")));
        }
        let key = (u.min(v), u.max(v));
        if !seen.insert(key) {
            return Err(err(format!("duplicate edge ({}, {})", key.0, key.1)));
        }
        edges.push((key.0 as u32, key.1 as u32));
    }
    if edges.len() != m {
        return Err(Error::Parse {
            line: hline,
            msg: format!("header declares {m} edges, found {}", edges.len()),
        });
    }
    Ok(Graph::build(n, edges))
}

pub fn read_edge_list_file(path: impl AsRef<Path>) -> Result<Graph> {
    read_edge_list(&std::fs::read_to_string(path)?)
}

pub fn write_edge_list_file(g: &Graph, path: impl AsRef<Path>) -> Result<()> {
    std::fs::write(path, write_edge_list(g))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path(n: usize) -> Graph {
        Graph::from_edges(n, (1..n).map(|i| (i - 1, i))).unwrap()
    }

    fn bfs_dist(g: &Graph, s: usize) -> Vec<usize> {
        let mut dist = vec![usize::MAX; g.n()];
        dist[s] = 0;
        let mut q = VecDeque::from([s]);
        while let Some(x) = q.pop_front() {
            for &y in g.neighbors(x) {
                if dist[y as usize] == usize::MAX {
                    dist[y as usize] = dist[x] + 1;
                    q.push_back(y as usize);
                }
            }
        }
        dist
    }

    #[test]
    fn er_extremes() {
        let s = RngSeed::new(3, 0);
        assert_eq!(generate_er(4, 0.0, s).unwrap().edge_count(), 0);
        let k4 = generate_er(4, 1.0, s).unwrap();
        assert_eq!(k4.edge_count(), 6);
        assert_eq!(k4, Graph::complete(4));
        assert!(generate_er(4, 1.5, s).is_err());
        assert!(generate_er(4, -0.1, s).is_err());
    }

    #[test]
    fn er_large_sparse_is_reproducible_and_near_mean() {
        let s = RngSeed::new(11, 4);
        let g = generate_er(100_000, 1e-4, s).unwrap();
        assert!(g.is_valid());
        let pairs = 100_000f64 * 99_999.0 / 2.0;
        let mean = pairs * 1e-4;
        let sd = (pairs * 1e-4 * (1.0 - 1e-4)).sqrt();
        assert!((g.edge_count() as f64 - mean).abs() < 4.0 * sd, "{}", g.edge_count());
        assert_eq!(g, generate_er(100_000, 1e-4, s).unwrap());
        assert_ne!(g, generate_er(100_000, 1e-4, RngSeed::new(11, 5)).unwrap());
    }

    #[test]
    fn er_mean_over_trials() {
        let (n, p) = (1000usize, 0.01);
        let pairs = (n * (n - 1) / 2) as f64;
        let trials = 1000;
        let total: usize = (0..trials)
            .map(|t| generate_er(n, p, RngSeed::new(99, t)).unwrap().edge_count())
            .sum();
        let mean = total as f64 / trials as f64;
        let se = (pairs * p * (1.0 - p) / trials as f64).sqrt();
        assert!((mean - pairs * p).abs() < 3.0 * se, "mean {mean}");
    }

    #[test]
    fn union_and_xor_examples() {
        let p3 = path(3);
        let e02 = Graph::from_edges(3, [(0, 2)]).unwrap();
        assert_eq!(union_graph(&p3, &e02).unwrap(), Graph::complete(3));
        assert_eq!(union_graph(&p3, &Graph::empty(3)).unwrap(), p3);
        assert_eq!(union_graph(&p3, &p3).unwrap(), p3);

        let tri = Graph::complete(3);
        let e01 = Graph::from_edges(3, [(0, 1)]).unwrap();
        let expect = Graph::from_edges(3, [(1, 2), (0, 2)]).unwrap();
        assert_eq!(xor_graph(&tri, &e01).unwrap(), expect);
        assert_eq!(xor_graph(&tri, &tri).unwrap(), Graph::empty(3));
        assert_eq!(xor_graph(&tri, &Graph::empty(3)).unwrap(), tri);
        assert!(union_graph(&tri, &Graph::empty(4)).is_err());
        assert!(xor_graph(&tri, &Graph::empty(4)).is_err());
    }

    #[test]
    fn permute_examples() {
        let p3 = path(3);
        assert_eq!(permute(&p3, &[0, 1, 2]).unwrap(), p3);
        assert_eq!(permute(&p3, &[2, 1, 0]).unwrap(), p3);
        let k4 = Graph::complete(4);
        assert_eq!(permute(&k4, &[3, 0, 2, 1]).unwrap(), k4);
        assert!(permute(&p3, &[0, 0, 1]).is_err());
        assert!(permute(&p3, &[0, 1]).is_err());
        assert!(permute(&p3, &[0, 1, 3]).is_err());
        let pi = [1, 2, 0];
        let q = permute(&p3, &pi).unwrap();
        assert_eq!(permute(&q, &invert_permutation(&pi)).unwrap(), p3);
    }

    #[test]
    fn neighborhood_examples() {
        let g = path(5);
        let sub = neighborhood(&g, 2, 1).unwrap();
        assert_eq!(sub.root, 0);
        assert_eq!(sub.original_ids[0], 2);
        let mut ids = sub.original_ids.clone();
        ids.sort();
        assert_eq!(ids, vec![1, 2, 3]);
        assert_eq!(sub.graph.edge_count(), 2);

        let z = neighborhood(&g, 4, 0).unwrap();
        assert_eq!(z.graph, Graph::empty(1));
        let k4 = neighborhood(&Graph::complete(4), 0, 1).unwrap();
        assert_eq!(k4.graph, Graph::complete(4));
        assert!(neighborhood(&g, 5, 1).is_err());
    }

    #[test]
    fn neighborhood_matches_bfs_oracle() {
        for t in 0..20 {
            let g = generate_er(60, 0.06, RngSeed::new(5, t)).unwrap();
            for v in [0, 17, 59] {
                let dist = bfs_dist(&g, v);
                for r in 0..4 {
                    let sub = neighborhood(&g, v, r).unwrap();
                    let mut got = sub.original_ids.clone();
                    got.sort();
                    let want: Vec<usize> = (0..g.n()).filter(|&u| dist[u] <= r).collect();
                    assert_eq!(got, want);
                    // induced: every parent edge among included vertices is present
                    let induced = g
                        .edges()
                        .filter(|&(a, b)| dist[a] <= r && dist[b] <= r)
                        .count();
                    assert_eq!(sub.graph.edge_count(), induced);
                }
            }
        }
    }

    #[test]
    fn edge_list_examples() {
        assert_eq!(read_edge_list("3 0").unwrap(), Graph::empty(3));
        assert_eq!(read_edge_list("3 2\n0 1\n1 2").unwrap(), path(3));
        match read_edge_list("2 1\n1 1") {
            Err(Error::Parse { line: 2, .. }) => {}
            other => panic!("expected self-loop parse error, got {other:?}"),
        }
        assert!(matches!(
            read_edge_list("3 2\n0 1\n1 0"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            read_edge_list("3 1\n0 7"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            read_edge_list("3 1\n0 x"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(read_edge_list("3 2\n0 1").is_err());
        assert!(read_edge_list("").is_err());
    }

    #[test]
    fn two_ball_sizes_ring() {
        let ring = Graph::from_edges(10, (0..10).map(|i| (i, (i + 1) % 10))).unwrap();
        assert!(two_ball_sizes(&ring).iter().all(|&s| s == 5));
    }
}
