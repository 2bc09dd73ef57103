//! Vertex signatures.
//!
//! A depth-2 label is the degree profile of a vertex: its neighbors' degrees in
//! decreasing order. A depth-3 label is the multiset of the neighbors' color
//! count lists under the degree-mod-m coloring. Both are functions of a
//! bounded-radius neighborhood, so isomorphic graphs carry the same labels.
//!
//! [`LabelTable`] holds the labels of a whole graph compactly: depth-3 count
//! lists are interned into a sorted alphabet and each vertex stores the sorted
//! ranks of its neighbors' lists. Ranks are assigned in lexicographic order of
//! the lists, so comparing rank sequences orders labels exactly as comparing
//! the sorted lists would.

use std::collections::hash_map::DefaultHasher;
use std::collections::HashMap;
use std::fmt::Write as _;
use std::hash::{Hash, Hasher};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::coloring::{
    color_count_list, count_table, default_modulus, mod_color_classes, ColorAssignment,
    ColorCountList,
};
use crate::error::{param, Result};
use crate::graph::Graph;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "u8", into = "u8")]
pub enum Depth {
    Two,
    Three,
}

impl TryFrom<u8> for Depth {
    type Error = String;
    fn try_from(d: u8) -> std::result::Result<Self, String> {
        match d {
            2 => Ok(Depth::Two),
            3 => Ok(Depth::Three),
            _ => Err(format!("depth must be 2 or 3, got {d}")),
        }
    }
}

impl From<Depth> for u8 {
    fn from(d: Depth) -> u8 {
        match d {
            Depth::Two => 2,
            Depth::Three => 3,
        }
    }
}

/// Neighbor degrees in decreasing order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct DegreeProfile(pub Vec<u32>);

/// The multiset of the neighbors' color count lists, kept in sorted order.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Signature {
    pub m: usize,
    pub lists: Vec<ColorCountList>,
}

impl Signature {
    /// Length-prefixed little-endian encoding: `m`, the list count, then the
    /// counts of every list in order.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(8 + 4 * self.m * self.lists.len());
        out.extend_from_slice(&(self.m as u32).to_le_bytes());
        out.extend_from_slice(&(self.lists.len() as u32).to_le_bytes());
        for l in &self.lists {
            for &c in &l.0 {
                out.extend_from_slice(&c.to_le_bytes());
            }
        }
        out
    }
}

impl std::fmt::Display for Signature {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_char('{')?;
        for (i, l) in self.lists.iter().enumerate() {
            if i > 0 {
                f.write_char(',')?;
            }
            write_list(f, &l.0)?;
        }
        f.write_char('}')
    }
}

fn write_list<W: std::fmt::Write>(f: &mut W, xs: &[u32]) -> std::fmt::Result {
    f.write_char('[')?;
    for (i, x) in xs.iter().enumerate() {
        if i > 0 {
            f.write_char(',')?;
        }
        write!(f, "{x}")?;
    }
    f.write_char(']')
}

/// `exclude_center` drops the center vertex from each neighbor's count list,
/// i.e. uses `l(u, V \ {v})` instead of `l(u)`.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SignatureOptions {
    pub exclude_center: bool,
}

pub fn depth2_signature(g: &Graph, v: usize) -> Result<DegreeProfile> {
    g.check_vertex(v)?;
    let mut d: Vec<u32> = g
        .neighbors(v)
        .iter()
        .map(|&u| g.degree(u as usize) as u32)
        .collect();
    d.sort_unstable_by(|a, b| b.cmp(a));
    Ok(DegreeProfile(d))
}

pub fn depth3_signature(g: &Graph, ca: &ColorAssignment, v: usize) -> Result<Signature> {
    depth3_signature_with(g, ca, v, SignatureOptions::default())
}

pub fn depth3_signature_with(
    g: &Graph,
    ca: &ColorAssignment,
    v: usize,
    opts: SignatureOptions,
) -> Result<Signature> {
    g.check_vertex(v)?;
    let mut lists = Vec::with_capacity(g.degree(v));
    for &u in g.neighbors(v) {
        let mut l = color_count_list(g, ca, u as usize, None)?;
        if opts.exclude_center {
            l.0[ca.color(v) as usize] -= 1;
        }
        lists.push(l);
    }
    lists.sort_unstable();
    Ok(Signature { m: ca.m, lists })
}

/// Per-vertex canonical labels for one graph.
#[derive(Clone, Debug)]
pub struct LabelTable {
    depth: Depth,
    m: Option<usize>,
    offsets: Vec<usize>,
    data: Vec<u32>,
    // depth 3 only: interned count lists, row-major, lexicographically sorted
    alphabet: Arc<Vec<u32>>,
}

impl LabelTable {
    pub fn depth(&self) -> Depth {
        self.depth
    }

    pub fn m(&self) -> Option<usize> {
        self.m
    }

    pub fn len(&self) -> usize {
        self.offsets.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Comparable key of vertex `v`. Keys from tables built together (or
    /// from depth-2 tables) are comparable across graphs.
    #[inline]
    pub fn key(&self, v: usize) -> &[u32] {
        &self.data[self.offsets[v]..self.offsets[v + 1]]
    }

    pub fn keys(&self) -> impl Iterator<Item = &[u32]> + '_ {
        (0..self.len()).map(move |v| self.key(v))
    }

    pub fn degree_profile(&self, v: usize) -> Option<DegreeProfile> {
        (self.depth == Depth::Two).then(|| DegreeProfile(self.key(v).to_vec()))
    }

    pub fn signature(&self, v: usize) -> Option<Signature> {
        let m = self.m?;
        Some(Signature {
            m,
            lists: self
                .key(v)
                .iter()
                .map(|&r| ColorCountList(self.row(r).to_vec()))
                .collect(),
        })
    }

    fn row(&self, rank: u32) -> &[u32] {
        let m = self.m.unwrap_or(0);
        &self.alphabet[rank as usize * m..(rank as usize + 1) * m]
    }

    /// Human-readable canonical string: `[d1,d2,...]` at depth 2 and
    /// `{[..],[..],...}` at depth 3.
    pub fn render(&self, v: usize) -> String {
        let mut s = String::new();
        match self.depth {
            Depth::Two => {
                let _ = write_list(&mut s, self.key(v));
            }
            Depth::Three => {
                s.push('{');
                for (i, &r) in self.key(v).iter().enumerate() {
                    if i > 0 {
                        s.push(',');
                    }
                    let _ = write_list(&mut s, self.row(r));
                }
                s.push('}');
            }
        }
        s
    }

    pub fn to_json(&self) -> serde_json::Value {
        let depth: u8 = self.depth.into();
        serde_json::Value::Array(
            (0..self.len())
                .map(|v| serde_json::json!({"vertex": v, "depth": depth, "label": self.render(v)}))
                .collect(),
        )
    }
}

/// Labels for every vertex of `g`. Depth 3 uses `m` if given, otherwise the
/// default modulus for the graph's edge density.
pub fn all_signatures(g: &Graph, depth: Depth, m: Option<usize>) -> Result<LabelTable> {
    let mut tables = joint_signatures(&[g], depth, m, SignatureOptions::default())?;
    Ok(tables.pop().unwrap())
}

/// Labels several graphs against one shared alphabet so their keys can be
/// compared with each other. With `m` unset, the first graph picks it.
pub fn joint_signatures(
    graphs: &[&Graph],
    depth: Depth,
    m: Option<usize>,
    opts: SignatureOptions,
) -> Result<Vec<LabelTable>> {
    match depth {
        Depth::Two => Ok(graphs.iter().map(|g| depth2_table(g)).collect()),
        Depth::Three => {
            let m = match m {
                Some(m) => m,
                None => graphs.first().map_or(1, |g| default_modulus(g)),
            };
            depth3_tables(graphs, m, opts)
        }
    }
}

fn depth2_table(g: &Graph) -> LabelTable {
    let n = g.n();
    let mut offsets = Vec::with_capacity(n + 1);
    let mut data = Vec::with_capacity(2 * g.edge_count());
    offsets.push(0);
    for v in 0..n {
        let start = data.len();
        data.extend(g.neighbors(v).iter().map(|&u| g.degree(u as usize) as u32));
        data[start..].sort_unstable_by(|a, b| b.cmp(a));
        offsets.push(data.len());
    }
    LabelTable {
        depth: Depth::Two,
        m: None,
        offsets,
        data,
        alphabet: Arc::new(Vec::new()),
    }
}

fn depth3_tables(graphs: &[&Graph], m: usize, opts: SignatureOptions) -> Result<Vec<LabelTable>> {
    let cas = graphs
        .iter()
        .map(|g| mod_color_classes(g, m))
        .collect::<Result<Vec<_>>>()?;
    let cells: usize = graphs
        .iter()
        .map(|g| if opts.exclude_center { 2 * g.edge_count() } else { g.n() })
        .sum::<usize>()
        .saturating_mul(m);
    if cells > (1usize << 32) {
        return param(format!("count table of {cells} cells is too large (m = {m})"));
    }

    // one row per vertex, or one per directed edge when the center is excluded
    let mut rows = Vec::with_capacity(cells);
    for (g, ca) in graphs.iter().zip(&cas) {
        let table = count_table(g, ca);
        if opts.exclude_center {
            for v in 0..g.n() {
                let cv = ca.color(v) as usize;
                for &u in g.neighbors(v) {
                    let start = rows.len();
                    rows.extend_from_slice(&table[u as usize * m..(u as usize + 1) * m]);
                    rows[start + cv] -= 1;
                }
            }
        } else {
            rows.extend_from_slice(&table);
        }
    }
    let (alphabet, ranks) = intern_rows(&rows, m);
    drop(rows);
    let alphabet = Arc::new(alphabet);

    let mut tables = Vec::with_capacity(graphs.len());
    let mut base = 0usize;
    for g in graphs {
        let n = g.n();
        let mut offsets = Vec::with_capacity(n + 1);
        let mut data = Vec::with_capacity(2 * g.edge_count());
        offsets.push(0);
        let mut edge_cursor = base;
        for v in 0..n {
            let start = data.len();
            if opts.exclude_center {
                let d = g.degree(v);
                data.extend_from_slice(&ranks[edge_cursor..edge_cursor + d]);
                edge_cursor += d;
            } else {
                data.extend(g.neighbors(v).iter().map(|&u| ranks[base + u as usize]));
            }
            data[start..].sort_unstable();
            offsets.push(data.len());
        }
        base = if opts.exclude_center { edge_cursor } else { base + n };
        tables.push(LabelTable {
            depth: Depth::Three,
            m: Some(m),
            offsets,
            data,
            alphabet: Arc::clone(&alphabet),
        });
    }
    Ok(tables)
}

/// Sorts the distinct `m`-wide rows lexicographically and returns them with
/// the rank of every input row.
fn intern_rows(rows: &[u32], m: usize) -> (Vec<u32>, Vec<u32>) {
    if m == 0 {
        return (Vec::new(), Vec::new());
    }
    let count = rows.len() / m;
    let row = |i: u32| &rows[i as usize * m..(i as usize + 1) * m];
    let mut order: Vec<u32> = (0..count as u32).collect();
    order.sort_unstable_by(|&a, &b| row(a).cmp(row(b)));
    let mut ranks = vec![0u32; count];
    let mut alphabet = Vec::new();
    let mut next = 0u32;
    for (i, &idx) in order.iter().enumerate() {
        if i == 0 || row(order[i - 1]) != row(idx) {
            alphabet.extend_from_slice(row(idx));
            next += 1;
        }
        ranks[idx as usize] = next - 1;
    }
    (alphabet, ranks)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct UniquenessReport {
    pub all_unique: bool,
    pub duplicate_groups: Vec<Vec<usize>>,
    pub depth: Depth,
}

impl UniquenessReport {
    pub fn colliding_vertices(&self) -> usize {
        self.duplicate_groups.iter().map(Vec::len).sum()
    }
}

pub fn uniqueness_report(labels: &LabelTable) -> UniquenessReport {
    let groups = duplicate_groups(labels.len(), |v| labels.key(v));
    UniquenessReport {
        all_unique: groups.is_empty(),
        duplicate_groups: groups,
        depth: labels.depth,
    }
}

/// Groups of at least two indices whose keys are equal. Candidates are bucketed
/// by a 64-bit hash and then confirmed by full comparison, so hash collisions
/// never merge distinct keys. Groups are sorted, and ordered by first member.
pub fn duplicate_groups<'a, F>(n: usize, key: F) -> Vec<Vec<usize>>
where
    F: Fn(usize) -> &'a [u32],
{
    let mut buckets: HashMap<u64, Vec<usize>> = HashMap::with_capacity(n);
    for v in 0..n {
        let mut h = DefaultHasher::new();
        key(v).hash(&mut h);
        buckets.entry(h.finish()).or_default().push(v);
    }
    let mut groups = Vec::new();
    for (_, mut members) in buckets {
        if members.len() < 2 {
            continue;
        }
        members.sort_unstable_by(|&a, &b| key(a).cmp(key(b)).then(a.cmp(&b)));
        let mut start = 0;
        for i in 1..=members.len() {
            if i == members.len() || key(members[i]) != key(members[start]) {
                if i - start >= 2 {
                    groups.push(members[start..i].to_vec());
                }
                start = i;
            }
        }
    }
    groups.sort_unstable();
    groups
}
