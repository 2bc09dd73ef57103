//! Degree-mod-m color classes and color count lists.

use serde::{Deserialize, Serialize};

use crate::error::{param, Error, Result};
use crate::graph::Graph;

/// Bisection tolerance for the minimum-degree constant.
pub const EPSILON_STAR_TOL: f64 = 1e-9;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColorAssignment {
    pub m: usize,
    pub colors: Vec<u32>,
    pub class_sizes: Vec<usize>,
}

impl ColorAssignment {
    #[inline]
    pub fn color(&self, v: usize) -> u32 {
        self.colors[v]
    }

    pub fn n(&self) -> usize {
        self.colors.len()
    }

    fn check_against(&self, g: &Graph) -> Result<()> {
        if self.colors.len() != g.n() {
            return param(format!(
                "color assignment covers {} vertices, graph has {}",
                self.colors.len(),
                g.n()
            ));
        }
        Ok(())
    }
}

/// Neighbor counts per color class, indexed by color.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ColorCountList(pub Vec<u32>);

impl ColorCountList {
    pub fn total(&self) -> u64 {
        self.0.iter().map(|&c| c as u64).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Regime {
    Random,
    Smoothed,
}

impl std::str::FromStr for Regime {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "random" => Ok(Regime::Random),
            "smoothed" => Ok(Regime::Smoothed),
            _ => param(format!("unknown regime {s:?}")),
        }
    }
}

/// The number of color classes together with the constants it was derived
/// from. `epsilon_star` and `delta` are only defined in the random regime.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusChoice {
    pub m: usize,
    pub epsilon_star: Option<f64>,
    pub delta: Option<f64>,
    pub regime: Regime,
}

/// Colors every vertex by its degree modulo `m`.
pub fn mod_color_classes(g: &Graph, m: usize) -> Result<ColorAssignment> {
    if m == 0 {
        return param("modulus m must be at least 1");
    }
    let mut class_sizes = vec![0usize; m];
    let colors = (0..g.n())
        .map(|v| {
            let c = g.degree(v) % m;
            class_sizes[c] += 1;
            c as u32
        })
        .collect();
    Ok(ColorAssignment {
        m,
        colors,
        class_sizes,
    })
}

/// Counts the neighbors of `v` in each color class, optionally restricted to
/// the vertices flagged in `subset`.
pub fn color_count_list(
    g: &Graph,
    ca: &ColorAssignment,
    v: usize,
    subset: Option<&[bool]>,
) -> Result<ColorCountList> {
    ca.check_against(g)?;
    g.check_vertex(v)?;
    if let Some(s) = subset {
        if s.len() != g.n() {
            return param(format!("subset mask has length {}, expected {}", s.len(), g.n()));
        }
    }
    let mut counts = vec![0u32; ca.m];
    for &u in g.neighbors(v) {
        if subset.is_none_or(|s| s[u as usize]) {
            counts[ca.colors[u as usize] as usize] += 1;
        }
    }
    Ok(ColorCountList(counts))
}

/// All full-set count lists as one row-major `n x m` table.
pub(crate) fn count_table(g: &Graph, ca: &ColorAssignment) -> Vec<u32> {
    let m = ca.m;
    let mut table = vec![0u32; g.n() * m];
    for v in 0..g.n() {
        let row = &mut table[v * m..(v + 1) * m];
        for &u in g.neighbors(v) {
            row[ca.colors[u as usize] as usize] += 1;
        }
    }
    table
}

fn chernoff_exponent(delta: f64) -> f64 {
    if delta >= 1.0 {
        1.0
    } else {
        delta + (1.0 - delta) * (-delta).ln_1p()
    }
}

/// Minimum-degree constant for `np = a ln n`: returns `1 - d` where `d` is the
/// smallest value in (0, 1) with `a (d + (1 - d) ln(1 - d)) > 1`.
pub fn epsilon_star_solve(a: f64) -> Result<f64> {
    if !a.is_finite() || a <= 1.0 {
        return param(format!("epsilon* needs a > 1, got {a}"));
    }
    let target = 1.0 / a;
    // f is increasing on [0, 1] from 0 to 1
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while hi - lo > EPSILON_STAR_TOL {
        let mid = 0.5 * (lo + hi);
        if chernoff_exponent(mid) > target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut delta = hi + EPSILON_STAR_TOL;
    if delta >= 1.0 {
        delta = hi;
    }
    let eps = 1.0 - delta;
    if eps.is_nan() || eps <= 0.0 {
        return Err(Error::Regime(format!(
            "a = {a} is too close to 1 to resolve epsilon* at tolerance {EPSILON_STAR_TOL}"
        )));
    }
    debug_assert!(a * chernoff_exponent(delta) > 1.0);
    Ok(eps)
}

/// Picks the modulus for an `(n, p)` instance.
///
/// Random regime: with `a = np / ln n = 1 + delta`, `m = ceil(3e / (eps* a))`.
/// Smoothed regime: `m = ceil(ln n)`.
pub fn choose_m(n: usize, p: f64, regime: Regime) -> Result<ModulusChoice> {
    match regime {
        Regime::Smoothed => {
            if n < 2 {
                return param("smoothed regime needs n >= 2");
            }
            Ok(ModulusChoice {
                m: smoothed_m(n),
                epsilon_star: None,
                delta: None,
                regime,
            })
        }
        Regime::Random => {
            if !(0.0..=1.0).contains(&p) {
                return param(format!("edge probability {p} outside [0, 1]"));
            }
            if n < 2 {
                return Err(Error::Regime("random regime needs n >= 2".into()));
            }
            let ln_n = (n as f64).ln();
            let a = n as f64 * p / ln_n;
            if a <= 1.0 {
                return Err(Error::Regime(format!(
                    "np = {:.4} is not above ln n = {ln_n:.4}",
                    n as f64 * p
                )));
            }
            let eps = epsilon_star_solve(a)?;
            let m = (3.0 * std::f64::consts::E / (eps * a)).ceil().max(1.0) as usize;
            Ok(ModulusChoice {
                m,
                epsilon_star: Some(eps),
                delta: Some(a - 1.0),
                regime,
            })
        }
    }
}

/// Modulus used when the caller does not supply one: the random-regime rule at
/// the empirical edge density, falling back to `ceil(ln n)` below connectivity.
pub fn default_modulus(g: &Graph) -> usize {
    let n = g.n();
    if n < 2 {
        return 1;
    }
    let p = 2.0 * g.edge_count() as f64 / (n as f64 * (n as f64 - 1.0));
    choose_m(n, p, Regime::Random)
        .map(|c| c.m)
        .unwrap_or_else(|_| smoothed_m(n))
}

pub fn smoothed_m(n: usize) -> usize {
    ((n as f64).ln().ceil() as usize).max(1)
}
