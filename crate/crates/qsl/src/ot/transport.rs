//! Exact transport between small atomic laws, and W₂ between Gaussians.

use super::{invalid, OtError};
use crate::signals::{Atom, Cov2};
use serde::{Deserialize, Serialize};

pub const MAX_ATOMS: usize = 16;
const MASS_TOL: f64 = 1e-9;
const FLOW_EPS: f64 = 1e-15;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct PlanarAtom {
    pub point: [f64; 2],
    pub weight: f64,
}

impl PlanarAtom {
    pub fn new(x: f64, p: f64, weight: f64) -> Self {
        Self { point: [x, p], weight }
    }

    /// (Re α, Im α) of a single-mode atom.
    pub fn from_atom(a: &Atom) -> Result<Self, OtError> {
        match a.point.as_slice() {
            [z] => Ok(Self::new(z.re, z.im, a.weight)),
            _ => Err(invalid("atoms", "planar transport needs single-mode atoms")),
        }
    }
}

struct Edge {
    to: usize,
    cap: f64,
    cost: f64,
    rev: usize,
}

struct Graph {
    adj: Vec<Vec<Edge>>,
}

impl Graph {
    fn new(n: usize) -> Self {
        Self { adj: (0..n).map(|_| Vec::new()).collect() }
    }

    fn add(&mut self, u: usize, v: usize, cap: f64, cost: f64) {
        let (ru, rv) = (self.adj[v].len(), self.adj[u].len());
        self.adj[u].push(Edge { to: v, cap, cost, rev: ru });
        self.adj[v].push(Edge { to: u, cap: 0.0, cost: -cost, rev: rv });
    }

    /// Successive shortest paths (Bellman–Ford); returns (flow, cost).
    fn min_cost_flow(&mut self, s: usize, t: usize, want: f64) -> (f64, f64) {
        let n = self.adj.len();
        let (mut flow, mut cost) = (0.0, 0.0);
        while want - flow > FLOW_EPS {
            let mut dist = vec![f64::INFINITY; n];
            let mut prev: Vec<Option<(usize, usize)>> = vec![None; n];
            dist[s] = 0.0;
            for _ in 0..n {
                let mut changed = false;
                for u in 0..n {
                    if dist[u] == f64::INFINITY {
                        continue;
                    }
                    for (i, e) in self.adj[u].iter().enumerate() {
                        if e.cap > FLOW_EPS && dist[u] + e.cost < dist[e.to] - 1e-15 {
                            dist[e.to] = dist[u] + e.cost;
                            prev[e.to] = Some((u, i));
                            changed = true;
                        }
                    }
                }
                if !changed {
                    break;
                }
            }
            if dist[t] == f64::INFINITY {
                break;
            }
            let mut push = want - flow;
            let mut v = t;
            while let Some((u, i)) = prev[v] {
                push = push.min(self.adj[u][i].cap);
                v = u;
            }
            let mut v = t;
            while let Some((u, i)) = prev[v] {
                self.adj[u][i].cap -= push;
                let (to, rev) = (self.adj[u][i].to, self.adj[u][i].rev);
                self.adj[to][rev].cap += push;
                v = u;
            }
            flow += push;
            cost += push * dist[t];
        }
        (flow, cost)
    }
}

/// min over couplings π of Σ π_ij·cost(i, j).
pub fn transport_cost(wp: &[f64], wq: &[f64], cost: impl Fn(usize, usize) -> f64) -> Result<f64, OtError> {
    for (name, w) in [("p", wp), ("q", wq)] {
        if w.is_empty() {
            return Err(invalid(name, "no atoms"));
        }
        if w.len() > MAX_ATOMS {
            return Err(OtError::TooManyAtoms(w.len(), MAX_ATOMS));
        }
        if w.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
            return Err(invalid(name, "weights must be finite and nonnegative"));
        }
    }
    let (sp, sq): (f64, f64) = (wp.iter().sum(), wq.iter().sum());
    if (sp - sq).abs() > MASS_TOL {
        return Err(OtError::MassMismatch(sp, sq));
    }
    let (m, n) = (wp.len(), wq.len());
    let (s, t) = (0, m + n + 1);
    let mut g = Graph::new(m + n + 2);
    for (i, &w) in wp.iter().enumerate() {
        g.add(s, 1 + i, w, 0.0);
    }
    // rescale q to p's total so the flow saturates both sides
    for (j, &w) in wq.iter().enumerate() {
        g.add(1 + m + j, t, w * sp / sq, 0.0);
    }
    for i in 0..m {
        for j in 0..n {
            g.add(1 + i, 1 + m + j, f64::INFINITY, cost(i, j));
        }
    }
    let (_, c) = g.min_cost_flow(s, t, sp);
    Ok(c.max(0.0))
}

fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)
}

/// Exact W₁ under Euclidean ground cost in ℝ².
pub fn w1_discrete(p: &[PlanarAtom], q: &[PlanarAtom]) -> Result<f64, OtError> {
    let wp: Vec<f64> = p.iter().map(|a| a.weight).collect();
    let wq: Vec<f64> = q.iter().map(|a| a.weight).collect();
    transport_cost(&wp, &wq, |i, j| dist2(p[i].point, q[j].point).sqrt())
}

/// Exact W₂ for atomic laws in ℝ².
pub fn w2_discrete(p: &[PlanarAtom], q: &[PlanarAtom]) -> Result<f64, OtError> {
    let wp: Vec<f64> = p.iter().map(|a| a.weight).collect();
    let wq: Vec<f64> = q.iter().map(|a| a.weight).collect();
    Ok(transport_cost(&wp, &wq, |i, j| dist2(p[i].point, q[j].point))?.sqrt())
}

/// √(‖m0−m1‖² + tr S0 + tr S1 − 2 tr((S0^{1/2} S1 S0^{1/2})^{1/2})).
pub fn w2_gaussian(m0: [f64; 2], s0: &Cov2, m1: [f64; 2], s1: &Cov2) -> Result<f64, OtError> {
    s0.check_psd("s0").map_err(|_| OtError::NotPsd)?;
    s1.check_psd("s1").map_err(|_| OtError::NotPsd)?;
    let r = s0.sqrt();
    let cross = Cov2::sandwich(&r, s1).sqrt().trace();
    let d2 = dist2(m0, m1) + s0.trace() + s1.trace() - 2.0 * cross;
    Ok(d2.max(0.0).sqrt())
}
