//! Max-Cut instances, cut evaluation, hyperplane rounding and an exhaustive
//! oracle.
//!
//! Sign conventions: the adjacency matrix is `A_G`, the Burer-Monteiro cost
//! matrix is `A = -A_G`, and the solver minimizes `F(x) = -<x, A x> =
//! <x, A_G x>`. Those are the only places the sign flips.

use rand::Rng;
use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use std::fmt::Write as _;
use std::io::BufRead;
use thiserror::Error;

use crate::geometry::{dot, uniform_on_sphere, PointOnM};
use crate::objective::{ObjectiveError, SymmetricCostMatrix};

/// Largest `n` accepted by [`brute_force_maxcut`].
pub const BRUTE_FORCE_MAX_N: usize = 24;
/// Largest `n` for which [`bm_cut_report`] runs the exhaustive oracle.
pub const REPORT_ORACLE_MAX_N: usize = 20;

#[derive(Debug, Error)]
pub enum MaxCutError {
    #[error("line {line}: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: duplicate edge ({i}, {j})")]
    DuplicateEdge { line: usize, i: usize, j: usize },
    #[error("line {line}: vertex index out of range 1..={n}")]
    IndexOutOfRange { line: usize, n: usize },
    #[error("header declares {declared} edges, found {found}")]
    EdgeCountMismatch { declared: usize, found: usize },
    #[error("assignment has length {found}, graph has {expected} vertices")]
    LengthMismatch { expected: usize, found: usize },
    #[error("point has {found} factors, graph has {expected} vertices")]
    PointMismatch { expected: usize, found: usize },
    #[error("exhaustive search limited to n <= {max}, got {n}")]
    TooLarge { n: usize, max: usize },
    #[error("rounding needs at least one sample")]
    NoSamples,
    #[error("failed to read graph: {0}")]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Objective(#[from] ObjectiveError),
}

/// Assignment of every vertex to a side, `+1` or `-1`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CutAssignment(pub Vec<i8>);

impl CutAssignment {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn flipped(&self) -> Self {
        Self(self.0.iter().map(|s| -s).collect())
    }
}

/// An undirected weighted edge between 0-indexed vertices, `i < j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub i: usize,
    pub j: usize,
    pub w: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GraphInstance {
    n: usize,
    edges: Vec<Edge>,
    cost: SymmetricCostMatrix,
}

impl GraphInstance {
    /// Builds a graph from 0-indexed edges.
    pub fn new(n: usize, edges: Vec<Edge>) -> Result<Self, MaxCutError> {
        let cost = SymmetricCostMatrix::from_entries(n, edges.iter().map(|e| (e.i, e.j, -e.w)))?;
        Ok(Self { n, edges, cost })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// The Burer-Monteiro cost matrix `A = -A_G`.
    pub fn cost_matrix(&self) -> &SymmetricCostMatrix {
        &self.cost
    }

    /// Text in the edge-list format accepted by [`parse_graph`].
    pub fn to_edge_list(&self) -> String {
        let mut out = format!("{} {}\n", self.n, self.edges.len());
        for e in &self.edges {
            writeln!(out, "{} {} {}", e.i + 1, e.j + 1, e.w).expect("write to string");
        }
        out
    }
}

fn fields(line: &str) -> impl Iterator<Item = &str> {
    line.split([' ', '\t']).filter(|f| !f.is_empty())
}

fn parse_field<T: std::str::FromStr>(
    tok: Option<&str>,
    line: usize,
    what: &str,
) -> Result<T, MaxCutError> {
    let tok = tok.ok_or_else(|| MaxCutError::Malformed {
        line,
        message: format!("missing {what}"),
    })?;
    tok.parse().map_err(|_| MaxCutError::Malformed {
        line,
        message: format!("invalid {what} {tok:?}"),
    })
}

/// Parses the `n m` header followed by `m` lines `i j w` (1-indexed).
/// Lines end in LF or CRLF; fields are separated by runs of spaces or tabs;
/// blank lines are skipped.
pub fn parse_graph<R: BufRead>(reader: R) -> Result<GraphInstance, MaxCutError> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    let mut seen = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let line = line.strip_suffix('\r').unwrap_or(&line);
        if !line.is_ascii() {
            return Err(MaxCutError::Malformed {
                line: line_no,
                message: "non-ASCII input".into(),
            });
        }
        let mut toks = fields(line);
        let first = toks.next();
        if first.is_none() {
            continue;
        }
        match header {
            None => {
                let n: usize = parse_field(first, line_no, "vertex count")?;
                let m: usize = parse_field(toks.next(), line_no, "edge count")?;
                if n == 0 {
                    return Err(MaxCutError::Malformed {
                        line: line_no,
                        message: "vertex count must be positive".into(),
                    });
                }
                if toks.next().is_some() {
                    return Err(MaxCutError::Malformed {
                        line: line_no,
                        message: "header has extra fields".into(),
                    });
                }
                header = Some((n, m));
            }
            Some((n, _)) => {
                let i: usize = parse_field(first, line_no, "vertex index")?;
                let j: usize = parse_field(toks.next(), line_no, "vertex index")?;
                let w: f64 = parse_field(toks.next(), line_no, "weight")?;
                if toks.next().is_some() {
                    return Err(MaxCutError::Malformed {
                        line: line_no,
                        message: "edge line has extra fields".into(),
                    });
                }
                if !w.is_finite() {
                    return Err(MaxCutError::Malformed {
                        line: line_no,
                        message: "weight must be finite".into(),
                    });
                }
                if i == 0 || j == 0 || i > n || j > n {
                    return Err(MaxCutError::IndexOutOfRange { line: line_no, n });
                }
                if i == j {
                    return Err(MaxCutError::Malformed {
                        line: line_no,
                        message: "self-loop".into(),
                    });
                }
                let (i, j) = if i < j {
                    (i - 1, j - 1)
                } else {
                    (j - 1, i - 1)
                };
                if !seen.insert((i, j)) {
                    return Err(MaxCutError::DuplicateEdge {
                        line: line_no,
                        i: i + 1,
                        j: j + 1,
                    });
                }
                edges.push(Edge { i, j, w });
            }
        }
    }
    let (n, m) = header.ok_or(MaxCutError::Malformed {
        line: 1,
        message: "missing header".into(),
    })?;
    if edges.len() != m {
        return Err(MaxCutError::EdgeCountMismatch {
            declared: m,
            found: edges.len(),
        });
    }
    GraphInstance::new(n, edges)
}

pub fn parse_graph_str(text: &str) -> Result<GraphInstance, MaxCutError> {
    parse_graph(text.as_bytes())
}

/// Total weight of edges whose endpoints lie on different sides.
pub fn cut_value(g: &GraphInstance, cut: &CutAssignment) -> Result<f64, MaxCutError> {
    if cut.len() != g.n {
        return Err(MaxCutError::LengthMismatch {
            expected: g.n,
            found: cut.len(),
        });
    }
    Ok(g.edges
        .iter()
        .filter(|e| cut.0[e.i] != cut.0[e.j])
        .map(|e| e.w)
        .sum())
}

/// Signs `sgn <x_i, r>` for a hyperplane normal `r`, with `0 -> +1`.
pub fn hyperplane_signs(x: &PointOnM, normal: &[f64]) -> CutAssignment {
    CutAssignment(
        x.factors()
            .map(|row| if dot(row, normal) < 0.0 { -1 } else { 1 })
            .collect(),
    )
}

/// Best cut over `samples` uniformly random hyperplanes; ties keep the
/// first occurrence.
pub fn gw_round<R: Rng + ?Sized>(
    x: &PointOnM,
    g: &GraphInstance,
    samples: usize,
    rng: &mut R,
) -> Result<(CutAssignment, f64), MaxCutError> {
    if samples == 0 {
        return Err(MaxCutError::NoSamples);
    }
    if x.shape().n() != g.n {
        return Err(MaxCutError::PointMismatch {
            expected: g.n,
            found: x.shape().n(),
        });
    }
    let mut best: Option<(CutAssignment, f64)> = None;
    for _ in 0..samples {
        let r = uniform_on_sphere(x.shape().ambient(), rng);
        let cut = hyperplane_signs(x, &r);
        let value = cut_value(g, &cut)?;
        if best.as_ref().is_none_or(|(_, b)| value > *b) {
            best = Some((cut, value));
        }
    }
    Ok(best.expect("samples >= 1"))
}

/// Exact maximum cut by enumerating the `2^{n-1}` assignments with vertex 0
/// on the `+1` side, visiting them in Gray-code order.
pub fn brute_force_maxcut(g: &GraphInstance) -> Result<(CutAssignment, f64), MaxCutError> {
    if g.n > BRUTE_FORCE_MAX_N {
        return Err(MaxCutError::TooLarge {
            n: g.n,
            max: BRUTE_FORCE_MAX_N,
        });
    }
    let mut adjacency = vec![Vec::new(); g.n];
    for e in &g.edges {
        adjacency[e.i].push((e.j, e.w));
        adjacency[e.j].push((e.i, e.w));
    }
    let mut signs = vec![1i8; g.n];
    let mut value = 0.0;
    let mut best_value = 0.0;
    let mut best_signs = signs.clone();
    let free = g.n - 1;
    for step in 1u64..(1u64 << free) {
        // Vertex flipped between consecutive Gray codes.
        let v = step.trailing_zeros() as usize + 1;
        let s = signs[v];
        let delta: f64 = adjacency[v]
            .iter()
            .map(|&(u, w)| if signs[u] == s { w } else { -w })
            .sum();
        signs[v] = -s;
        value += delta;
        if value > best_value {
            best_value = value;
            best_signs.copy_from_slice(&signs);
        }
    }
    let best = CutAssignment(best_signs);
    // Recompute exactly to avoid accumulated rounding in the running sum.
    let exact = cut_value(g, &best)?;
    Ok((best, exact))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutReport {
    /// `<x, A x>` with `A = -A_G`.
    pub quadratic_value: f64,
    /// Relaxed cut value `sum_edges w (1 - <x_i, x_j>) / 2`.
    pub relaxed_cut: f64,
    pub best_cut: f64,
    pub best_assignment: CutAssignment,
    pub samples: usize,
    pub brute_force_optimum: Option<f64>,
    /// `best_cut / brute_force_optimum` when the oracle ran and the optimum
    /// is positive.
    pub ratio_to_optimum: Option<f64>,
}

pub fn bm_cut_report<R: Rng + ?Sized>(
    g: &GraphInstance,
    x: &PointOnM,
    samples: usize,
    rng: &mut R,
) -> Result<CutReport, MaxCutError> {
    let quadratic_value = g.cost.quadratic_form(x)?;
    let relaxed_cut = g
        .edges
        .iter()
        .map(|e| e.w * (1.0 - dot(x.factor(e.i), x.factor(e.j))) / 2.0)
        .sum();
    let (best_assignment, best_cut) = gw_round(x, g, samples, rng)?;
    let brute_force_optimum = if g.n <= REPORT_ORACLE_MAX_N {
        Some(brute_force_maxcut(g)?.1)
    } else {
        None
    };
    let ratio_to_optimum = brute_force_optimum
        .filter(|&opt| opt > 0.0)
        .map(|opt| best_cut / opt);
    Ok(CutReport {
        quadratic_value,
        relaxed_cut,
        best_cut,
        best_assignment,
        samples,
        brute_force_optimum,
        ratio_to_optimum,
    })
}

/// Unit-weight cycle on `n` vertices.
pub fn cycle_graph(n: usize) -> GraphInstance {
    let edges = (0..n)
        .map(|i| {
            let j = (i + 1) % n;
            Edge {
                i: i.min(j),
                j: i.max(j),
                w: 1.0,
            }
        })
        .collect();
    GraphInstance::new(n, edges).expect("cycle is a valid graph")
}

/// Unit-weight complete graph on `n` vertices.
pub fn complete_graph(n: usize) -> GraphInstance {
    let edges = (0..n)
        .flat_map(|i| (i + 1..n).map(move |j| Edge { i, j, w: 1.0 }))
        .collect();
    GraphInstance::new(n, edges).expect("complete graph is valid")
}
