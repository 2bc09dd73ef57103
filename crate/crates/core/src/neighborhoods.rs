//! Searching for distinct vertices with isomorphic 2-neighborhoods.
//!
//! Vertices are split into atypical ones (degree far from `(n - 1) p`), good
//! ones (typical, no atypical neighbor, tree-shaped 2-ball) and the rest. For
//! good vertices the 2-ball is a depth-2 tree, so its isomorphism type is
//! exactly the degree profile. Candidates are bucketed by degree profile and
//! every reported pair is confirmed with a rooted AHU code or, for balls with
//! cycles, an exhaustive rooted search (VF2 beyond the small-graph oracle).

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{param, Result};
use crate::graph::{neighborhood, Graph, RootedSubgraph};
use crate::isomorph::{brute_force_rooted_isomorphic, BRUTE_FORCE_MAX_N};
use crate::refinement::refine_from;
use crate::signatures::depth2_signature;

/// Smallest n for which `ln ln n` is positive enough to define the threshold.
pub const MIN_CLASSIFY_N: usize = 16;

/// Cap on the number of pairs listed in a report; the groups are always complete.
pub const MAX_REPORTED_PAIRS: usize = 100_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GoodVertexPartition {
    pub atypical: Vec<usize>,
    pub good: Vec<usize>,
    pub non_tree: Vec<usize>,
    pub n: usize,
    pub p: f64,
    pub threshold: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CollisionMethod {
    DegreeProfileTree,
    Ahu,
    BruteForce,
    Vf2,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CollisionPair {
    pub u: usize,
    pub v: usize,
    pub method: CollisionMethod,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CollisionReport {
    pub pairs: Vec<CollisionPair>,
    /// Verified classes of at least two vertices with isomorphic 2-balls.
    pub groups: Vec<Vec<usize>>,
    pub pairs_truncated: bool,
    pub good_count: usize,
    pub profile_count: usize,
}

impl CollisionReport {
    pub fn collision_found(&self) -> bool {
        !self.groups.is_empty()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProfileCount {
    pub count: usize,
    pub bound: f64,
}

pub fn is_tree(sub: &RootedSubgraph) -> bool {
    sub.graph.edge_count() + 1 == sub.graph.n()
}

pub fn atypical_threshold(n: usize, p: f64) -> f64 {
    let nf = n as f64;
    3.0 * (nf * p * nf.ln().ln()).sqrt()
}

pub fn classify_good(g: &Graph, p: f64) -> Result<GoodVertexPartition> {
    let n = g.n();
    if n < MIN_CLASSIFY_N {
        return param(format!("classification needs n >= {MIN_CLASSIFY_N}, got {n}"));
    }
    if !(0.0..=1.0).contains(&p) {
        return param(format!("edge probability {p} outside [0, 1]"));
    }
    let threshold = atypical_threshold(n, p);
    let mean = (n as f64 - 1.0) * p;
    let is_atypical: Vec<bool> = (0..n)
        .map(|v| (g.degree(v) as f64 - mean).abs() >= threshold)
        .collect();
    let tree: Vec<bool> = two_ball_is_tree(g);
    let mut part = GoodVertexPartition {
        atypical: Vec::new(),
        good: Vec::new(),
        non_tree: Vec::new(),
        n,
        p,
        threshold,
    };
    for v in 0..n {
        if is_atypical[v] {
            part.atypical.push(v);
        }
        if !tree[v] {
            part.non_tree.push(v);
        }
        let clean = !g.neighbors(v).iter().any(|&u| is_atypical[u as usize]);
        if !is_atypical[v] && clean && tree[v] {
            part.good.push(v);
        }
    }
    Ok(part)
}

/// Whether each vertex's induced 2-ball is a tree, by counting vertices and
/// induced edges with a stamp array.
fn two_ball_is_tree(g: &Graph) -> Vec<bool> {
    let n = g.n();
    let mut stamp = vec![u32::MAX; n];
    let mut ball = Vec::new();
    (0..n)
        .map(|v| {
            let tag = v as u32;
            ball.clear();
            stamp[v] = tag;
            ball.push(v as u32);
            for &u in g.neighbors(v) {
                if stamp[u as usize] != tag {
                    stamp[u as usize] = tag;
                    ball.push(u);
                }
            }
            let first_layer = ball.len();
            for i in 1..first_layer {
                for &w in g.neighbors(ball[i] as usize) {
                    if stamp[w as usize] != tag {
                        stamp[w as usize] = tag;
                        ball.push(w);
                    }
                }
            }
            let twice_edges: usize = ball
                .iter()
                .map(|&x| {
                    g.neighbors(x as usize)
                        .iter()
                        .filter(|&&y| stamp[y as usize] == tag)
                        .count()
                })
                .sum();
            twice_edges / 2 + 1 == ball.len()
        })
        .collect()
}

/// Rooted canonical code of a tree: `(` + sorted child codes + `)` per vertex,
/// built bottom-up. Rooted trees are isomorphic iff their codes are equal.
pub fn ahu_code(sub: &RootedSubgraph) -> Result<Vec<u8>> {
    if !is_tree(sub) {
        return param("AHU code requires a tree");
    }
    let g = &sub.graph;
    let n = g.n();
    let mut parent = vec![usize::MAX; n];
    let mut order = Vec::with_capacity(n);
    let mut seen = vec![false; n];
    seen[sub.root] = true;
    order.push(sub.root);
    let mut i = 0;
    while i < order.len() {
        let x = order[i];
        for &y in g.neighbors(x) {
            let y = y as usize;
            if !seen[y] {
                seen[y] = true;
                parent[y] = x;
                order.push(y);
            }
        }
        i += 1;
    }
    if order.len() != n {
        return param("AHU code requires a connected tree");
    }
    let mut codes: Vec<Vec<u8>> = vec![Vec::new(); n];
    let mut children: Vec<Vec<Vec<u8>>> = vec![Vec::new(); n];
    for &x in order.iter().rev() {
        let mut kids = std::mem::take(&mut children[x]);
        kids.sort_unstable();
        let mut code = Vec::with_capacity(2 + kids.iter().map(Vec::len).sum::<usize>());
        code.push(b'(');
        for k in kids {
            code.extend_from_slice(&k);
        }
        code.push(b')');
        if parent[x] == usize::MAX {
            codes[x] = code;
        } else {
            children[parent[x]].push(code);
        }
    }
    Ok(std::mem::take(&mut codes[sub.root]))
}

/// BFS distance from the root inside the ball.
fn layers(sub: &RootedSubgraph) -> Vec<u32> {
    let g = &sub.graph;
    let mut dist = vec![u32::MAX; g.n()];
    let mut queue = std::collections::VecDeque::from([sub.root]);
    dist[sub.root] = 0;
    while let Some(x) = queue.pop_front() {
        for &y in g.neighbors(x) {
            if dist[y as usize] == u32::MAX {
                dist[y as usize] = dist[x] + 1;
                queue.push_back(y as usize);
            }
        }
    }
    dist
}

fn to_petgraph(g: &Graph, weights: &[u32]) -> petgraph::graph::UnGraph<u32, ()> {
    let mut pg = petgraph::graph::UnGraph::with_capacity(g.n(), g.edge_count());
    let ids: Vec<_> = weights.iter().map(|&w| pg.add_node(w)).collect();
    for (u, v) in g.edges() {
        pg.add_edge(ids[u], ids[v], ());
    }
    pg
}

/// Exact rooted isomorphism test for balls of any size.
///
/// Both balls are colored by distance from the root and refined jointly.
/// Different color histograms, or roots in different classes, rule out an
/// isomorphism; otherwise VF2 searches for a color-preserving bijection.
pub fn rooted_balls_isomorphic(a: &RootedSubgraph, b: &RootedSubgraph) -> bool {
    let (na, nb) = (a.graph.n(), b.graph.n());
    if na != nb || a.graph.edge_count() != b.graph.edge_count() {
        return false;
    }
    let joint = Graph::from_edges(
        na + nb,
        a.graph.edges().chain(b.graph.edges().map(|(u, v)| (u + na, v + na))),
    )
    .expect("disjoint union of valid graphs");
    let mut init = layers(a);
    init.extend(layers(b));
    let colors = refine_from(&joint, &init, None).colors;
    if colors[a.root] != colors[na + b.root] {
        return false;
    }
    let (mut ca, mut cb) = (colors[..na].to_vec(), colors[na..].to_vec());
    ca.sort_unstable();
    cb.sort_unstable();
    if ca != cb {
        return false;
    }
    petgraph::algo::is_isomorphic_matching(
        &to_petgraph(&a.graph, &colors[..na]),
        &to_petgraph(&b.graph, &colors[na..]),
        |x, y| x == y,
        |_, _| true,
    )
}

/// Rooted isomorphism of two non-tree balls: the exhaustive oracle when both
/// fit it, VF2 otherwise.
fn cyclic_balls_isomorphic(a: &RootedSubgraph, b: &RootedSubgraph) -> (bool, CollisionMethod) {
    if a.graph.n() <= BRUTE_FORCE_MAX_N && b.graph.n() <= BRUTE_FORCE_MAX_N {
        let iso = brute_force_rooted_isomorphic(&a.graph, a.root, &b.graph, b.root)
            .expect("ball within brute-force size");
        (iso.is_some(), CollisionMethod::BruteForce)
    } else {
        (rooted_balls_isomorphic(a, b), CollisionMethod::Vf2)
    }
}

/// Finds vertex pairs with isomorphic rooted 2-neighborhoods.
///
/// All vertices are bucketed by degree profile (which fixes the degree). Each
/// bucket is split into verified classes; for graphs with at least
/// [`MIN_CLASSIFY_N`] vertices the good set is computed with `p` and pairs of
/// good vertices are reported as degree-profile collisions, after their AHU
/// codes are checked to agree.
pub fn find_2nbr_collisions(g: &Graph, p: f64) -> CollisionReport {
    let n = g.n();
    let partition = if n >= MIN_CLASSIFY_N && (0.0..=1.0).contains(&p) {
        classify_good(g, p).ok()
    } else {
        None
    };
    let mut is_good = vec![false; n];
    if let Some(part) = &partition {
        for &v in &part.good {
            is_good[v] = true;
        }
    }

    let mut buckets: BTreeMap<Vec<u32>, Vec<usize>> = BTreeMap::new();
    for v in 0..n {
        buckets
            .entry(depth2_signature(g, v).expect("vertex in range").0)
            .or_default()
            .push(v);
    }
    let profile_count = partition
        .as_ref()
        .map_or(0, |part| count_distinct_profiles(g, &part.good));

    // each group carries the method that verified it, `None` for tree codes
    let mut groups: Vec<(Vec<usize>, Option<CollisionMethod>)> = Vec::new();
    for members in buckets.values().filter(|m| m.len() >= 2) {
        let mut tree_classes: BTreeMap<Vec<u8>, Vec<usize>> = BTreeMap::new();
        let mut cyclic_classes: Vec<(RootedSubgraph, Vec<usize>, CollisionMethod)> = Vec::new();
        let good_in_bucket: Vec<usize> = members.iter().copied().filter(|&v| is_good[v]).collect();
        for &v in members {
            let sub = neighborhood(g, v, 2).expect("vertex in range");
            if is_tree(&sub) {
                let code = ahu_code(&sub).expect("checked tree");
                tree_classes.entry(code).or_default().push(v);
                continue;
            }
            let home = cyclic_classes.iter_mut().find_map(|(rep, class, method)| {
                let (iso, how) = cyclic_balls_isomorphic(rep, &sub);
                iso.then(|| {
                    *method = (*method).max(how);
                    class
                })
            });
            match home {
                Some(class) => class.push(v),
                None => cyclic_classes.push((sub, vec![v], CollisionMethod::BruteForce)),
            }
        }
        // good vertices sharing a profile must share a tree code
        if good_in_bucket.len() >= 2 {
            let holder = tree_classes
                .values()
                .find(|c| c.contains(&good_in_bucket[0]))
                .expect("good vertices have tree balls");
            assert!(
                good_in_bucket.iter().all(|v| holder.contains(v)),
                "good vertices with equal degree profiles have non-isomorphic 2-balls"
            );
        }
        for class in tree_classes.into_values().filter(|c| c.len() >= 2) {
            groups.push((class, None));
        }
        for (_, class, method) in cyclic_classes.into_iter().filter(|c| c.1.len() >= 2) {
            groups.push((class, Some(method)));
        }
    }
    groups.sort();

    let mut pairs = Vec::new();
    let mut truncated = false;
    'outer: for (class, cyclic) in &groups {
        for (i, &u) in class.iter().enumerate() {
            for &v in &class[i + 1..] {
                if pairs.len() == MAX_REPORTED_PAIRS {
                    truncated = true;
                    break 'outer;
                }
                let method = if let Some(m) = cyclic {
                    *m
                } else if is_good[u] && is_good[v] {
                    CollisionMethod::DegreeProfileTree
                } else {
                    CollisionMethod::Ahu
                };
                pairs.push(CollisionPair { u, v, method });
            }
        }
    }
    CollisionReport {
        pairs,
        groups: groups.into_iter().map(|(c, _)| c).collect(),
        pairs_truncated: truncated,
        good_count: partition.as_ref().map_or(0, |p| p.good.len()),
        profile_count,
    }
}

/// Number of distinct degree profiles among `vertices`.
pub fn count_distinct_profiles(g: &Graph, vertices: &[usize]) -> usize {
    let mut profiles: Vec<Vec<u32>> = vertices
        .iter()
        .map(|&v| depth2_signature(g, v).expect("vertex in range").0)
        .collect();
    profiles.sort_unstable();
    profiles.dedup();
    profiles.len()
}

/// `exp(4 sqrt(np ln ln n) ln(np))`, the ceiling on distinct good-vertex profiles.
pub fn profile_count_bound(n: usize, p: f64) -> f64 {
    let nf = n as f64;
    let np = nf * p;
    (4.0 * (np * nf.ln().ln()).sqrt() * np.ln()).exp()
}

/// Distinct degree profiles among good vertices, with the analytic bound.
pub fn count_degree_profiles(g: &Graph, p: f64) -> Result<ProfileCount> {
    let part = classify_good(g, p)?;
    Ok(ProfileCount {
        count: count_distinct_profiles(g, &part.good),
        bound: profile_count_bound(g.n(), p),
    })
}
