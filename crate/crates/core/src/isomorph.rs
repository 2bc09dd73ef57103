//! Isomorphism matching by sorted vertex labels, with an exhaustive oracle for
//! small graphs.

use serde::{Deserialize, Serialize};

use crate::coloring::default_modulus;
use crate::error::{Error, Result};
use crate::graph::{check_permutation, Graph};
use crate::signatures::{duplicate_groups, joint_signatures, Depth, SignatureOptions};

pub const BRUTE_FORCE_MAX_N: usize = 10;

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Witness {
    VertexCount { n1: usize, n2: usize },
    /// First position where the sorted label sequences disagree.
    LabelRank { rank: usize },
    /// Labels are unique and agree as multisets, but the only candidate map
    /// breaks the edge `(u, v)` of the first graph.
    EdgeNotPreserved { u: usize, v: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum MatchOutcome {
    /// `permutation[v]` is the vertex of the second graph matched to `v`.
    Matched { permutation: Vec<usize> },
    Ambiguous {
        groups_g1: Vec<Vec<usize>>,
        groups_g2: Vec<Vec<usize>>,
    },
    NonIsomorphic { witness: Witness },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchResult {
    #[serde(flatten)]
    pub outcome: MatchOutcome,
    pub verified: bool,
    pub m: Option<usize>,
}

impl MatchResult {
    pub fn is_matched(&self) -> bool {
        matches!(self.outcome, MatchOutcome::Matched { .. })
    }
}

/// Labels both graphs, sorts the labels and pairs vertices by rank.
///
/// Different sorted label sequences prove non-isomorphism. Equal sequences with
/// a repeated label give `Ambiguous`. Otherwise the rank pairing is the only
/// candidate isomorphism and is checked edge by edge before it is returned.
pub fn match_by_signatures(g1: &Graph, g2: &Graph, depth: Depth, m: Option<usize>) -> MatchResult {
    if g1.n() != g2.n() {
        return MatchResult {
            outcome: MatchOutcome::NonIsomorphic {
                witness: Witness::VertexCount {
                    n1: g1.n(),
                    n2: g2.n(),
                },
            },
            verified: false,
            m: None,
        };
    }
    let m = match depth {
        Depth::Two => None,
        Depth::Three => Some(m.unwrap_or_else(|| default_modulus(g1))),
    };
    let tables = joint_signatures(&[g1, g2], depth, m, SignatureOptions::default())
        .expect("modulus is positive and both graphs fit the count table");
    let (t1, t2) = (&tables[0], &tables[1]);
    let n = g1.n();

    let sorted = |t: &crate::signatures::LabelTable| {
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| t.key(a).cmp(t.key(b)).then(a.cmp(&b)));
        order
    };
    let (o1, o2) = (sorted(t1), sorted(t2));
    if let Some(rank) = (0..n).find(|&i| t1.key(o1[i]) != t2.key(o2[i])) {
        return MatchResult {
            outcome: MatchOutcome::NonIsomorphic {
                witness: Witness::LabelRank { rank },
            },
            verified: false,
            m,
        };
    }

    let has_tie = |t: &crate::signatures::LabelTable, o: &[usize]| {
        o.windows(2).any(|w| t.key(w[0]) == t.key(w[1]))
    };
    if has_tie(t1, &o1) || has_tie(t2, &o2) {
        return MatchResult {
            outcome: MatchOutcome::Ambiguous {
                groups_g1: duplicate_groups(n, |v| t1.key(v)),
                groups_g2: duplicate_groups(n, |v| t2.key(v)),
            },
            verified: false,
            m,
        };
    }

    let mut pi = vec![0usize; n];
    for i in 0..n {
        pi[o1[i]] = o2[i];
    }
    match first_broken_edge(g1, g2, &pi) {
        None => MatchResult {
            outcome: MatchOutcome::Matched { permutation: pi },
            verified: true,
            m,
        },
        Some((u, v)) => MatchResult {
            outcome: MatchOutcome::NonIsomorphic {
                witness: Witness::EdgeNotPreserved { u, v },
            },
            verified: false,
            m,
        },
    }
}

/// For a bijection `pi`, the first edge of `g1` whose image is missing from
/// `g2`; `(n, n)` stands in for an edge-count mismatch.
fn first_broken_edge(g1: &Graph, g2: &Graph, pi: &[usize]) -> Option<(usize, usize)> {
    let n = g1.n();
    if g1.edge_count() != g2.edge_count() {
        return Some((n, n));
    }
    let mut mark = vec![usize::MAX; n];
    for u in 0..n {
        for &w in g2.neighbors(pi[u]) {
            mark[w as usize] = u;
        }
        for &v in g1.neighbors(u) {
            if mark[pi[v as usize]] != u {
                return Some((u, v as usize));
            }
        }
    }
    None
}

/// True iff `pi` maps the edges of `g1` exactly onto the edges of `g2`.
pub fn verify_isomorphism(g1: &Graph, g2: &Graph, pi: &[usize]) -> bool {
    g1.n() == g2.n() && check_permutation(pi, g1.n()).is_ok() && first_broken_edge(g1, g2, pi).is_none()
}

/// Exhaustive search for an isomorphism, pruned by degree. Candidates are
/// tried in increasing order, so the identity is found first when it works.
pub fn brute_force_isomorphic(g1: &Graph, g2: &Graph) -> Result<Option<Vec<usize>>> {
    brute_force_search(g1, g2, None)
}

/// Like [`brute_force_isomorphic`], restricted to maps sending `r1` to `r2`.
pub fn brute_force_rooted_isomorphic(
    g1: &Graph,
    r1: usize,
    g2: &Graph,
    r2: usize,
) -> Result<Option<Vec<usize>>> {
    g1.check_vertex(r1)?;
    g2.check_vertex(r2)?;
    brute_force_search(g1, g2, Some((r1, r2)))
}

fn brute_force_search(
    g1: &Graph,
    g2: &Graph,
    fixed: Option<(usize, usize)>,
) -> Result<Option<Vec<usize>>> {
    let n = g1.n().max(g2.n());
    if n > BRUTE_FORCE_MAX_N {
        return Err(Error::SizeGuard {
            n,
            max: BRUTE_FORCE_MAX_N,
        });
    }
    if g1.n() != g2.n() || g1.edge_count() != g2.edge_count() {
        return Ok(None);
    }
    let mut d1 = g1.degrees();
    let mut d2 = g2.degrees();
    d1.sort_unstable();
    d2.sort_unstable();
    if d1 != d2 {
        return Ok(None);
    }

    struct Search<'a> {
        g1: &'a Graph,
        g2: &'a Graph,
        map: Vec<usize>,
        used: Vec<bool>,
        fixed: Option<(usize, usize)>,
    }
    impl Search<'_> {
        fn extend(&mut self, u: usize) -> bool {
            let n = self.g1.n();
            if u == n {
                return true;
            }
            for w in 0..n {
                if self.used[w] || self.g1.degree(u) != self.g2.degree(w) {
                    continue;
                }
                if let Some((a, b)) = self.fixed {
                    if (u == a) != (w == b) {
                        continue;
                    }
                }
                let consistent =
                    (0..u).all(|x| self.g1.has_edge(u, x) == self.g2.has_edge(w, self.map[x]));
                if !consistent {
                    continue;
                }
                self.map[u] = w;
                self.used[w] = true;
                if self.extend(u + 1) {
                    return true;
                }
                self.used[w] = false;
            }
            false
        }
    }
    let mut s = Search {
        g1,
        g2,
        map: vec![0; g1.n()],
        used: vec![false; g1.n()],
        fixed,
    };
    Ok(s.extend(0).then_some(s.map))
}
