//! Exact solver: every basic feasible solution has at most two positive
//! entries, so enumerating singletons and pairs finds all optimal vertices.

use serde::Serialize;

use super::TailLp;

/// Pairs whose 2×2 determinant is below this are treated as singular.
pub const DETERMINANT_EPS: f64 = 1e-14;
/// Relative objective gap under which two distinct vertices tie.
pub const TIE_REL_TOL: f64 = 1e-9;
/// Basic values below this are snapped to zero.
const ZERO_SNAP: f64 = 1e-14;

/// Shape of the optimal solution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum CaseTag {
    /// Unique optimum with two positive entries `i < j`.
    TwoFactor { i: usize, j: usize },
    /// Unique optimum with a single positive entry.
    OneFactor { i: usize },
    /// Several optimal vertices.
    NonUnique,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LpSolution {
    /// An optimal point; for non-unique programs the first optimal vertex in
    /// lexicographic support order.
    pub kappa: Vec<f64>,
    pub objective: f64,
    pub support: Vec<usize>,
    pub unique: bool,
    /// `(κ̂_1, κ̂_2)` dual multipliers of the two constraints, reported for a
    /// unique two-factor optimum.
    pub dual: Option<(f64, f64)>,
    pub case_tag: CaseTag,
    /// Supports of all optimal vertices (a single entry when unique).
    pub optimal_supports: Vec<Vec<usize>>,
}

impl LpSolution {
    /// One-factor optimum with `a_i = b_i`: both constraints are tight.
    pub fn is_balanced_one_factor(&self, lp: &TailLp) -> bool {
        match self.case_tag {
            CaseTag::OneFactor { i } => lp.a()[i] == lp.b()[i],
            _ => false,
        }
    }
}

#[derive(Debug, Clone)]
struct Vertex {
    /// `(index, value)` with positive values, sorted by index.
    entries: Vec<(usize, f64)>,
    objective: f64,
}

impl Vertex {
    fn support(&self) -> Vec<usize> {
        self.entries.iter().map(|e| e.0).collect()
    }

    fn same_point(&self, other: &Vertex) -> bool {
        self.entries.len() == other.entries.len()
            && self.entries.iter().zip(&other.entries).all(|(x, y)| {
                x.0 == y.0 && (x.1 - y.1).abs() <= 1e-12 * x.1.abs().max(y.1.abs())
            })
    }
}

fn pair_vertex(lp: &TailLp, i: usize, j: usize) -> Option<Vertex> {
    let (a, b) = (lp.a(), lp.b());
    let det = a[i] * b[j] - a[j] * b[i];
    if det.abs() <= DETERMINANT_EPS {
        return None;
    }
    let snap = |v: f64| if v.abs() < ZERO_SNAP { 0.0 } else { v };
    let ki = snap((b[j] - a[j]) / det);
    let kj = snap((a[i] - b[i]) / det);
    if ki < 0.0 || kj < 0.0 {
        return None;
    }
    let entries: Vec<_> = [(i, ki), (j, kj)].into_iter().filter(|e| e.1 > 0.0).collect();
    if entries.is_empty() {
        return None;
    }
    Some(Vertex { objective: ki + kj, entries })
}

fn vertices(lp: &TailLp) -> Vec<Vertex> {
    let (a, b) = (lp.a(), lp.b());
    let n = lp.len();
    let mut out = Vec::new();
    for i in 0..n {
        if a[i] > 0.0 && b[i] > 0.0 {
            let k = (1.0 / a[i]).max(1.0 / b[i]);
            out.push(Vertex { entries: vec![(i, k)], objective: k });
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            if let Some(v) = pair_vertex(lp, i, j) {
                out.push(v);
            }
        }
    }
    out
}

/// Solves the program exactly. A validated [`TailLp`] is always feasible and
/// bounded, so this cannot fail.
pub fn solve_lp(lp: &TailLp) -> LpSolution {
    let all = vertices(lp);
    let best = all
        .iter()
        .map(|v| v.objective)
        .fold(f64::INFINITY, f64::min);
    let mut optimal: Vec<Vertex> = Vec::new();
    for v in all {
        if v.objective <= best * (1.0 + TIE_REL_TOL) && !optimal.iter().any(|o| o.same_point(&v)) {
            optimal.push(v);
        }
    }
    optimal.sort_by_key(|x| x.support());
    let unique = optimal.len() == 1;
    let chosen = &optimal[0];
    let mut kappa = vec![0.0; lp.len()];
    for &(i, v) in &chosen.entries {
        kappa[i] = v;
    }
    let support = chosen.support();
    let (case_tag, dual) = if !unique {
        (CaseTag::NonUnique, None)
    } else if let [i, j] = support[..] {
        let (a, b) = (lp.a(), lp.b());
        let det = a[i] * b[j] - a[j] * b[i];
        let dual = ((b[j] - b[i]) / det, (a[i] - a[j]) / det);
        (CaseTag::TwoFactor { i, j }, Some(dual))
    } else {
        (CaseTag::OneFactor { i: support[0] }, None)
    };
    LpSolution {
        kappa,
        objective: chosen.objective,
        support,
        unique,
        dual,
        case_tag,
        optimal_supports: optimal.iter().map(Vertex::support).collect(),
    }
}
