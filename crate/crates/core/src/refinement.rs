//! Color refinement seeded with the degree-mod-m coloring.
//!
//! Each round replaces a vertex color by the pair (current color, sorted
//! multiset of neighbor colors) and renumbers the distinct pairs densely in
//! lexicographic order. Renumbering is a global sort, so one round costs
//! O((n + |E|) log n) and ids never depend on the input vertex numbering.

use serde::{Deserialize, Serialize};

use crate::coloring::{mod_color_classes, ColorAssignment};
use crate::error::Result;
use crate::graph::Graph;

const CERT_MAGIC: &[u8; 4] = b"GCR1";
const CANONICAL_ROUNDS: usize = 3;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct StableColoring {
    pub colors: Vec<u32>,
    pub rounds: usize,
    pub class_count: usize,
    pub discrete: bool,
    /// False when `max_rounds` stopped the iteration before a round failed to
    /// split any class.
    pub stable: bool,
}

/// One refinement round. Returns the new dense colors, the number of classes
/// and, when requested, the sorted distinct keys as
/// `[old color, degree, neighbor colors...]` records.
fn refine_round(g: &Graph, colors: &[u32], keep_keys: bool) -> (Vec<u32>, usize, Vec<u32>) {
    let n = g.n();
    let mut data = Vec::with_capacity(2 * g.edge_count());
    let mut offsets = Vec::with_capacity(n + 1);
    offsets.push(0usize);
    for v in 0..n {
        let start = data.len();
        data.extend(g.neighbors(v).iter().map(|&u| colors[u as usize]));
        data[start..].sort_unstable();
        offsets.push(data.len());
    }
    let multiset = |v: u32| &data[offsets[v as usize]..offsets[v as usize + 1]];
    let mut order: Vec<u32> = (0..n as u32).collect();
    order.sort_unstable_by(|&a, &b| {
        colors[a as usize]
            .cmp(&colors[b as usize])
            .then_with(|| multiset(a).cmp(multiset(b)))
    });
    let mut next = vec![0u32; n];
    let mut keys = Vec::new();
    let mut id = 0u32;
    for (i, &v) in order.iter().enumerate() {
        let fresh = i == 0 || {
            let u = order[i - 1];
            colors[u as usize] != colors[v as usize] || multiset(u) != multiset(v)
        };
        if fresh {
            id += 1;
            if keep_keys {
                keys.push(colors[v as usize]);
                keys.push(multiset(v).len() as u32);
                keys.extend_from_slice(multiset(v));
            }
        }
        next[v as usize] = id - 1;
    }
    (next, id as usize, keys)
}

/// Dense renumbering of arbitrary initial colors, ordered by color value.
fn densify(colors: &[u32]) -> (Vec<u32>, usize) {
    let mut distinct: Vec<u32> = colors.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    let dense = colors
        .iter()
        .map(|c| distinct.binary_search(c).unwrap() as u32)
        .collect();
    (dense, distinct.len())
}

pub fn refine(g: &Graph, initial: &ColorAssignment, max_rounds: Option<usize>) -> StableColoring {
    refine_from(g, &initial.colors, max_rounds)
}

/// Refines until a round leaves the class count unchanged, or `max_rounds`
/// rounds have run.
pub fn refine_from(g: &Graph, initial: &[u32], max_rounds: Option<usize>) -> StableColoring {
    assert_eq!(initial.len(), g.n(), "initial coloring does not match graph");
    let n = g.n();
    let (mut colors, mut classes) = densify(initial);
    let limit = max_rounds.unwrap_or(usize::MAX).min(n.max(1));
    let mut rounds = 0;
    let mut stable = false;
    while rounds < limit {
        let (next, count, _) = refine_round(g, &colors, false);
        rounds += 1;
        debug_assert!(count >= classes);
        let split = count > classes;
        colors = next;
        classes = count;
        if !split {
            stable = true;
            break;
        }
    }
    StableColoring {
        colors,
        rounds,
        class_count: classes,
        discrete: classes == n,
        stable,
    }
}

/// Three refinement rounds from the degree-mod-m coloring, plus a certificate.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CanonicalLabeling {
    pub m: usize,
    pub labels: Vec<u32>,
    pub class_count: usize,
    pub all_unique: bool,
    pub certificate: Vec<u8>,
}

/// Runs exactly three rounds. The certificate records `n`, `m`, the sorted
/// initial color multiset, the sorted class keys of every round, and the edge
/// list rewritten in final class ids and sorted. Isomorphic graphs always get
/// equal certificates; when labels are all unique, equal certificates also
/// imply isomorphism.
pub fn canonical_label(g: &Graph, m: usize) -> Result<CanonicalLabeling> {
    let ca = mod_color_classes(g, m)?;
    let n = g.n();
    let mut cert = Vec::new();
    let push = |cert: &mut Vec<u8>, x: u64| cert.extend_from_slice(&x.to_le_bytes());
    cert.extend_from_slice(CERT_MAGIC);
    push(&mut cert, n as u64);
    push(&mut cert, m as u64);
    for &s in &ca.class_sizes {
        push(&mut cert, s as u64);
    }

    // initial ids are the color values themselves, so the class-size vector
    // above fixes what each id means
    let mut colors = ca.colors.clone();
    let mut classes = 0;
    for _ in 0..CANONICAL_ROUNDS {
        let (next, count, keys) = refine_round(g, &colors, true);
        push(&mut cert, count as u64);
        push(&mut cert, keys.len() as u64);
        for k in keys {
            cert.extend_from_slice(&k.to_le_bytes());
        }
        colors = next;
        classes = count;
    }
    // how many vertices landed in each final class
    let mut sizes = vec![0u64; classes];
    for &c in &colors {
        sizes[c as usize] += 1;
    }
    for s in sizes {
        push(&mut cert, s);
    }
    let mut edges: Vec<(u32, u32)> = g
        .edges()
        .map(|(u, v)| {
            let (a, b) = (colors[u], colors[v]);
            (a.min(b), a.max(b))
        })
        .collect();
    edges.sort_unstable();
    push(&mut cert, edges.len() as u64);
    for (a, b) in edges {
        cert.extend_from_slice(&a.to_le_bytes());
        cert.extend_from_slice(&b.to_le_bytes());
    }
    Ok(CanonicalLabeling {
        m,
        all_unique: classes == n,
        class_count: classes,
        labels: colors,
        certificate: cert,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate_er, permute, random_permutation, RngSeed};
    use crate::signatures::{all_signatures, Depth};

    fn path(n: usize) -> Graph {
        Graph::from_edges(n, (1..n).map(|i| (i - 1, i))).unwrap()
    }

    fn cycle(n: usize) -> Graph {
        Graph::from_edges(n, (0..n).map(|i| (i, (i + 1) % n))).unwrap()
    }

    fn classes(colors: &[u32]) -> Vec<Vec<usize>> {
        let mut groups: std::collections::BTreeMap<u32, Vec<usize>> = Default::default();
        for (v, &c) in colors.iter().enumerate() {
            groups.entry(c).or_default().push(v);
        }
        let mut out: Vec<_> = groups.into_values().collect();
        out.sort();
        out
    }

    #[test]
    fn cycle_is_one_class() {
        let g = cycle(9);
        let s = refine(&g, &mod_color_classes(&g, 4).unwrap(), None);
        assert_eq!(s.class_count, 1);
        assert_eq!(s.rounds, 1);
        assert!(s.stable && !s.discrete);
    }

    #[test]
    fn small_paths() {
        let p3 = path(3);
        let ca = mod_color_classes(&p3, 2).unwrap();
        assert_eq!(ca.colors, vec![1, 0, 1]);
        let s = refine(&p3, &ca, None);
        assert_eq!(classes(&s.colors), vec![vec![0, 2], vec![1]]);
        assert_eq!(s.rounds, 1);

        let p4 = path(4);
        let ca = mod_color_classes(&p4, 2).unwrap();
        assert_eq!(ca.colors, vec![1, 0, 0, 1]);
        let s = refine(&p4, &ca, None);
        assert_eq!(classes(&s.colors), vec![vec![0, 3], vec![1, 2]]);
        assert!(s.stable);

        // longer paths keep splitting by distance to the ends
        let p7 = path(7);
        let s = refine(&p7, &mod_color_classes(&p7, 2).unwrap(), None);
        assert_eq!(s.class_count, 4);
        assert!(s.rounds <= 7);
    }

    #[test]
    fn max_rounds_cuts_short() {
        let p9 = path(9);
        let s = refine(&p9, &mod_color_classes(&p9, 2).unwrap(), Some(1));
        assert_eq!(s.rounds, 1);
        assert!(!s.stable);
    }

    #[test]
    fn monotone_and_idempotent() {
        for t in 0..10 {
            let g = generate_er(120, 0.03, RngSeed::new(12, t)).unwrap();
            let ca = mod_color_classes(&g, 3).unwrap();
            let mut prev = 0;
            for r in 1..6 {
                let s = refine(&g, &ca, Some(r));
                assert!(s.class_count >= prev);
                prev = s.class_count;
            }
            let s = refine(&g, &ca, None);
            let again = refine_from(&g, &s.colors, None);
            assert_eq!(again.colors, s.colors);
            assert_eq!(again.rounds, 1);
        }
    }

    #[test]
    fn three_rounds_refine_depth3_signatures() {
        for t in 0..20 {
            let g = generate_er(150 + 2 * t as usize, 0.025, RngSeed::new(77, t)).unwrap();
            let m = 4;
            let cl = canonical_label(&g, m).unwrap();
            let sig = all_signatures(&g, Depth::Three, Some(m)).unwrap();
            for u in 0..g.n() {
                for v in u + 1..g.n() {
                    if cl.labels[u] == cl.labels[v] {
                        assert_eq!(sig.key(u), sig.key(v));
                    }
                }
            }
        }
    }

    #[test]
    fn certificates() {
        let e1 = canonical_label(&Graph::empty(6), 3).unwrap();
        let e2 = canonical_label(&Graph::empty(6), 3).unwrap();
        assert_eq!(e1.certificate, e2.certificate);
        assert!(e1.labels.iter().all(|&l| l == 0));
        assert_ne!(e1.certificate, canonical_label(&Graph::empty(7), 3).unwrap().certificate);

        let p3 = canonical_label(&path(3), 2).unwrap();
        let k3 = canonical_label(&Graph::complete(3), 2).unwrap();
        assert_ne!(p3.certificate, k3.certificate);

        let mut unique_seen = 0;
        for t in 0..10 {
            let g = generate_er(300, 0.03, RngSeed::new(31, t)).unwrap();
            let pi = random_permutation(g.n(), &mut RngSeed::new(32, t).rng());
            let h = permute(&g, &pi).unwrap();
            let a = canonical_label(&g, 5).unwrap();
            let b = canonical_label(&h, 5).unwrap();
            assert_eq!(a.certificate, b.certificate);
            for v in 0..g.n() {
                assert_eq!(a.labels[v], b.labels[pi[v]]);
            }
            unique_seen += a.all_unique as usize;
            // a single extra edge changes the certificate
            let (u, w) = (0..g.n())
                .flat_map(|u| (u + 1..g.n()).map(move |w| (u, w)))
                .find(|&(u, w)| !g.has_edge(u, w))
                .unwrap();
            let plus = crate::graph::union_graph(&g, &Graph::from_edges(g.n(), [(u, w)]).unwrap())
                .unwrap();
            assert_ne!(canonical_label(&plus, 5).unwrap().certificate, a.certificate);
        }
        assert!(unique_seen > 0);
    }
}
