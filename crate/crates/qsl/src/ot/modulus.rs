//! Grid search for the ambiguity modulus of restricted homodyne: the largest
//! W₁ separation between family members whose per-angle outcome laws are
//! within η in total variation.

use super::{invalid, tv_1d, tv_centered_gaussians, w1_discrete, w2_discrete, w2_gaussian, Distribution1D, OtError, PlanarAtom};
use crate::signals::{Atom, Cov2, DisplacementLaw};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{FRAC_2_PI, PI, SQRT_2};

const FEAS_SLACK: f64 = 1e-9;
const LOWER_ANGLES: usize = 180;
const REFINE_HALVINGS: u32 = 8;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum ModulusFamily {
    /// Centered Gaussians over every valid (σx², σp², c) on the grid.
    GaussianGrid { sigma_x2: Vec<f64>, sigma_p2: Vec<f64>, c: Vec<f64> },
    /// ½δ(a, b) + ½δ(−a, −b) for each (a, b), and
    /// ½δ(a, −b−ε) + ½δ(−a, b+ε) for each (a, b, ε).
    DeltaGrid { a: Vec<f64>, b: Vec<f64>, eps: Vec<f64> },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusMeasurement {
    pub angles: Vec<f64>,
    pub r: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModulusBracket {
    pub eta: f64,
    pub lower: f64,
    pub upper: f64,
    pub witness_pair: (String, String),
    pub witness_params: (Vec<f64>, Vec<f64>),
    pub evaluations: usize,
}

impl ModulusBracket {
    pub fn to_json(&self) -> serde_json::Value {
        serde_json::json!({
            "eta": self.eta,
            "lower": self.lower,
            "upper": self.upper,
            "witness_params": [self.witness_params.0, self.witness_params.1],
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
enum Member {
    Gauss(Cov2),
    /// (a, b, ε, diagonal?)
    Delta(f64, f64, f64, bool),
}

impl Member {
    fn params(&self) -> Vec<f64> {
        match *self {
            Member::Gauss(s) => vec![s.sigma_x2, s.sigma_p2, s.c],
            Member::Delta(a, b, e, diag) => vec![a, b, e, if diag { 1.0 } else { -1.0 }],
        }
    }

    fn with_params(&self, p: &[f64]) -> Member {
        match *self {
            Member::Gauss(_) => Member::Gauss(Cov2::new(p[0], p[1], p[2])),
            Member::Delta(.., diag) => Member::Delta(p[0], p[1], if diag { 0.0 } else { p[2] }, diag),
        }
    }

    fn valid(&self) -> bool {
        match *self {
            Member::Gauss(s) => s.check_psd("cov").is_ok(),
            Member::Delta(a, b, e, _) => a >= 0.0 && b >= 0.0 && e >= 0.0 && (a + b + e).is_finite(),
        }
    }

    fn atoms(&self) -> Vec<PlanarAtom> {
        match *self {
            Member::Delta(a, b, e, diag) => {
                let y = if diag { b } else { -(b + e) };
                vec![PlanarAtom::new(a, y, 0.5), PlanarAtom::new(-a, -y, 0.5)]
            }
            Member::Gauss(_) => Vec::new(),
        }
    }

    fn law(&self) -> DisplacementLaw {
        match *self {
            Member::Gauss(s) => DisplacementLaw::GaussianCentered { cov: s },
            Member::Delta(..) => DisplacementLaw::DeltaMixture {
                atoms: self.atoms().iter().map(|a| Atom::single(a.point[0], a.point[1], a.weight)).collect(),
            },
        }
    }

    /// Homodyne outcome at angle θ: √2·uᵀα + N(0, ν).
    fn outcome(&self, theta: f64, nu: f64) -> Result<Distribution1D, OtError> {
        let (s, c) = theta.sin_cos();
        match *self {
            Member::Gauss(cov) => Distribution1D::gaussian(0.0, 2.0 * cov.quad([c, s]) + nu),
            Member::Delta(..) => Distribution1D::mixture(
                self.atoms().iter().map(|a| (a.weight, SQRT_2 * (c * a.point[0] + s * a.point[1]), nu)).collect(),
            ),
        }
    }
}

fn tv_outcomes(p: &Distribution1D, q: &Distribution1D) -> Result<f64, OtError> {
    match (p, q) {
        (Distribution1D::Gaussian { var: a, .. }, Distribution1D::Gaussian { var: b, .. }) => Ok(tv_centered_gaussians(*a, *b)),
        (Distribution1D::Mixture { components: a }, Distribution1D::Mixture { components: b }) => {
            let key = |v: &Vec<(f64, f64, f64)>| {
                let mut v = v.clone();
                v.sort_by(|x, y| x.1.total_cmp(&y.1));
                v
            };
            if key(a) == key(b) {
                Ok(0.0)
            } else {
                tv_1d(p, q)
            }
        }
        _ => tv_1d(p, q),
    }
}

/// max over directions of the 1-D W₁ between projected centered Gaussians,
/// √(2/π)·|√(uᵀΣ₁u) − √(uᵀΣ₂u)|.
fn gaussian_w1_lower(s1: &Cov2, s2: &Cov2) -> f64 {
    let f = |t: f64| {
        let u = [t.cos(), t.sin()];
        FRAC_2_PI.sqrt() * (s1.quad(u).max(0.0).sqrt() - s2.quad(u).max(0.0).sqrt()).abs()
    };
    let step = PI / LOWER_ANGLES as f64;
    let (mut best_t, mut best) = (0.0, f(0.0));
    for k in 1..LOWER_ANGLES {
        let t = k as f64 * step;
        let v = f(t);
        if v > best {
            best = v;
            best_t = t;
        }
    }
    // golden-section on the bracketing cell
    let (mut a, mut b) = (best_t - step, best_t + step);
    let g = 0.5 * (5f64.sqrt() - 1.0);
    for _ in 0..60 {
        let (x1, x2) = (b - g * (b - a), a + g * (b - a));
        if f(x1) >= f(x2) {
            b = x2;
        } else {
            a = x1;
        }
    }
    best.max(f(0.5 * (a + b)))
}

struct Ctx<'a> {
    angles: &'a [f64],
    nu: f64,
    eta: f64,
}

impl Ctx<'_> {
    fn feasible(&self, p: &Member, q: &Member) -> Result<bool, OtError> {
        if p == q {
            return Ok(true);
        }
        let mut tv = 0.0;
        for &th in self.angles {
            tv += tv_outcomes(&p.outcome(th, self.nu)?, &q.outcome(th, self.nu)?)?;
            if tv > self.eta + FEAS_SLACK {
                return Ok(false);
            }
        }
        Ok(true)
    }

    fn lower(&self, p: &Member, q: &Member) -> Result<f64, OtError> {
        Ok(match (p, q) {
            (Member::Gauss(a), Member::Gauss(b)) => gaussian_w1_lower(a, b),
            _ => w1_discrete(&p.atoms(), &q.atoms())?,
        })
    }

    fn upper(&self, p: &Member, q: &Member) -> Result<f64, OtError> {
        Ok(match (p, q) {
            (Member::Gauss(a), Member::Gauss(b)) => w2_gaussian([0.0; 2], a, [0.0; 2], b)?,
            _ => w2_discrete(&p.atoms(), &q.atoms())?,
        })
    }

    /// Lower bound if the pair is feasible.
    fn score(&self, p: &Member, q: &Member) -> Result<Option<f64>, OtError> {
        if !(p.valid() && q.valid()) || !self.feasible(p, q)? {
            return Ok(None);
        }
        Ok(Some(self.lower(p, q)?))
    }
}

fn check_grid(name: &str, v: &[f64]) -> Result<(), OtError> {
    if v.is_empty() || v.iter().any(|x| !x.is_finite()) {
        return Err(invalid(name, "grid must be nonempty and finite"));
    }
    Ok(())
}

fn members(family: &ModulusFamily) -> Result<Vec<Member>, OtError> {
    let mut out = Vec::new();
    match family {
        ModulusFamily::GaussianGrid { sigma_x2, sigma_p2, c } => {
            for (n, v) in [("sigma_x2", sigma_x2), ("sigma_p2", sigma_p2), ("c", c)] {
                check_grid(n, v)?;
            }
            for &x in sigma_x2 {
                for &p in sigma_p2 {
                    for &cc in c {
                        let m = Member::Gauss(Cov2::new(x, p, cc));
                        if m.valid() {
                            out.push(m);
                        }
                    }
                }
            }
        }
        ModulusFamily::DeltaGrid { a, b, eps } => {
            for (n, v) in [("a", a), ("b", b), ("eps", eps)] {
                check_grid(n, v)?;
            }
            for &x in a {
                for &y in b {
                    out.push(Member::Delta(x, y, 0.0, true));
                    for &e in eps {
                        out.push(Member::Delta(x, y, e, false));
                    }
                }
            }
            out.retain(Member::valid);
        }
    }
    if out.is_empty() {
        return Err(OtError::EmptyFeasible("no valid family member on the grid".into()));
    }
    Ok(out)
}

fn bounds(family: &ModulusFamily) -> Vec<(f64, f64, f64)> {
    let span = |v: &Vec<f64>| {
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let step = if v.len() > 1 { (hi - lo) / (2.0 * (v.len() - 1) as f64) } else { 0.0 };
        (lo, hi, step)
    };
    match family {
        ModulusFamily::GaussianGrid { sigma_x2, sigma_p2, c } => vec![span(sigma_x2), span(sigma_p2), span(c)],
        ModulusFamily::DeltaGrid { a, b, eps } => vec![span(a), span(b), span(eps)],
    }
}

/// Grid search over pairs (including identical pairs) for the largest W₁
/// lower bound subject to Σ_θ TV ≤ η, then coordinate refinement inside the
/// grid's bounding box. `budget` caps pair evaluations.
pub fn ambiguity_modulus(family: &ModulusFamily, meas: &ModulusMeasurement, eta: f64, budget: usize) -> Result<ModulusBracket, OtError> {
    if !(eta >= 0.0 && eta.is_finite()) {
        return Err(invalid("eta", "must be finite and nonnegative"));
    }
    if meas.angles.is_empty() || meas.angles.iter().any(|t| !t.is_finite()) {
        return Err(invalid("angles", "need at least one finite angle"));
    }
    if budget == 0 {
        return Err(invalid("budget", "must be positive"));
    }
    let r = crate::channels::SqueezeParam::new(meas.r).map_err(|e| invalid("r", e.to_string()))?;
    let ctx = Ctx { angles: &meas.angles, nu: r.nu(), eta };
    let ms = members(family)?;
    let pairs: Vec<(usize, usize)> = (0..ms.len()).flat_map(|i| (i..ms.len()).map(move |j| (i, j))).take(budget).collect();
    let scores: Vec<Option<f64>> = pairs
        .par_iter()
        .map(|&(i, j)| ctx.score(&ms[i], &ms[j]))
        .collect::<Result<_, _>>()?;
    let mut evaluations = pairs.len();
    let mut best: Option<(f64, Member, Member)> = None;
    for (&(i, j), s) in pairs.iter().zip(&scores) {
        if let Some(v) = s {
            if best.as_ref().is_none_or(|b| *v > b.0) {
                best = Some((*v, ms[i], ms[j]));
            }
        }
    }
    let (mut lower, mut p, mut q) =
        best.ok_or_else(|| OtError::EmptyFeasible("no feasible pair within the budget".into()))?;

    if lower > 0.0 {
        let bx = bounds(family);
        let mut x: Vec<f64> = p.params()[..3].iter().chain(&q.params()[..3]).copied().collect();
        let mut scale = 1.0;
        'refine: for _ in 0..REFINE_HALVINGS {
            let mut improved = true;
            while improved {
                improved = false;
                for k in 0..6 {
                    let (lo, hi, step) = bx[k % 3];
                    if step == 0.0 {
                        continue;
                    }
                    for dir in [-1.0, 1.0] {
                        if evaluations >= budget {
                            break 'refine;
                        }
                        let mut y = x.clone();
                        y[k] = (y[k] + dir * step * scale).clamp(lo, hi);
                        if y[k] == x[k] {
                            continue;
                        }
                        evaluations += 1;
                        let (np, nq) = (p.with_params(&y[..3]), q.with_params(&y[3..]));
                        if let Some(v) = ctx.score(&np, &nq)? {
                            if v > lower + 1e-12 {
                                lower = v;
                                x = y;
                                p = np;
                                q = nq;
                                improved = true;
                            }
                        }
                    }
                }
            }
            scale *= 0.5;
        }
    }
    let upper = ctx.upper(&p, &q)?.max(lower);
    Ok(ModulusBracket {
        eta,
        lower,
        upper,
        witness_pair: (p.law().descriptor(), q.law().descriptor()),
        witness_params: (p.params(), q.params()),
        evaluations,
    })
}
