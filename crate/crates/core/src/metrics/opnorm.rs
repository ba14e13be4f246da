//! Operator norm `‖T‖` and minimal gain `m(T) = min_{‖x‖=1} ‖Tx‖`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::DMatrix;
use num_traits::{One, Signed, Zero};

use crate::lp::{LinearProgram, LpOutcome};
use crate::map::LinearMap;
use crate::matrix::Matrix;
use crate::optimize::{golden_section, nelder_mead, NelderMeadOptions};
use crate::rational::{rat_to_f64, Rat};
use crate::spaces::{spread_directions, NormSpec, NormedSpace};

/// Relative accuracy targeted by the two-dimensional angular certificate.
pub const ANGULAR_REL_TOL: f64 = 1e-10;
/// Evaluation cap of the angular certificate.
pub const ANGULAR_MAX_EVALS: usize = 2_000_000;
/// Declared tolerance of uncertified sampled estimates.
pub const SAMPLED_TOL: f64 = 1e-6;
/// Relative safety margin applied to double-precision norm evaluations.
const ROUNDING: f64 = 1e-13;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Method {
    /// Zero-dimensional domain, or rank deficiency for the gain.
    Trivial,
    /// Rational arithmetic over ball vertices or per-facet linear programs.
    Exact,
    /// Maximum over domain vertices in double precision.
    Vertices,
    /// Maximum of domain dual norms over codomain facets.
    Facets,
    /// Lipschitz branch-and-bound over the angle of a two-dimensional domain.
    Angular,
    /// Singular values (Euclidean domain and codomain).
    Singular,
    /// Minimization over each domain facet in double precision.
    FacetSearch,
    /// Scaled signed permutation between equal ℓ_p spaces.
    Monomial,
    /// Multistart search; the bound is an estimate, not a certificate.
    Sampled,
}

/// Two-sided bound on a nonnegative quantity.
#[derive(Debug, Clone, PartialEq)]
pub struct Bound {
    pub value: f64,
    pub lower: f64,
    pub upper: f64,
    pub exact: Option<Rat>,
    pub method: Method,
    /// Whether `[lower, upper]` is guaranteed to contain the true value.
    pub certified: bool,
}

impl Bound {
    fn exact(v: Rat) -> Self {
        let f = rat_to_f64(&v);
        Bound {
            value: f,
            lower: f,
            upper: f,
            exact: Some(v),
            method: Method::Exact,
            certified: true,
        }
    }

    fn trivial(v: f64) -> Self {
        Bound {
            value: v,
            lower: v,
            upper: v,
            exact: None,
            method: Method::Trivial,
            certified: true,
        }
    }

    fn float(value: f64, rel_tol: f64, method: Method) -> Self {
        let tol = rel_tol + ROUNDING;
        Bound {
            value,
            lower: (value * (1.0 - tol)).max(0.0),
            upper: value * (1.0 + tol),
            exact: None,
            method,
            certified: true,
        }
    }

    fn interval(lower: f64, upper: f64, method: Method) -> Self {
        Bound {
            value: 0.5 * (lower + upper),
            lower: (lower * (1.0 - ROUNDING)).max(0.0),
            upper: upper * (1.0 + ROUNDING),
            exact: None,
            method,
            certified: true,
        }
    }

    fn estimate(value: f64) -> Self {
        Bound {
            value,
            lower: value,
            upper: value,
            exact: None,
            method: Method::Sampled,
            certified: false,
        }
    }

    /// Relative width of the bracket (0 for exact values).
    pub fn tolerance(&self) -> f64 {
        if self.exact.is_some() || self.value == 0.0 {
            0.0
        } else if !self.certified {
            SAMPLED_TOL
        } else {
            (self.upper - self.lower) / self.value
        }
    }
}

fn exact_apply(rows: &[Vec<Rat>], x: &[Rat]) -> Vec<Rat> {
    rows.iter()
        .map(|r| {
            r.iter()
                .zip(x)
                .filter(|(a, b)| !a.is_zero() && !b.is_zero())
                .fold(Rat::zero(), |acc, (a, b)| acc + a * b)
        })
        .collect()
}

/// One representative per antipodal pair of unit-ball vertices, when cheaply known.
pub fn half_vertices(e: &NormedSpace) -> Option<Vec<Vec<Rat>>> {
    if let NormSpec::Lp { p } = e.spec() {
        if *p == 1.0 {
            return Some(crate::polytope::unit_vectors(e.dim()));
        }
    }
    let b = e.polytope()?;
    Some(b.vertices().iter().filter(|v| first_positive(v)).cloned().collect())
}

fn first_positive(v: &[Rat]) -> bool {
    v.iter().find(|x| !x.is_zero()).is_some_and(|x| x.is_positive())
}

/// One representative per antipodal pair of unit-ball facets, when cheaply known.
pub fn half_facets(f: &NormedSpace) -> Option<Vec<Vec<Rat>>> {
    if let NormSpec::Lp { p } = f.spec() {
        if p.is_infinite() {
            return Some(crate::polytope::unit_vectors(f.dim()));
        }
    }
    let b = f.polytope()?;
    Some(b.facets().iter().filter(|v| first_positive(v)).cloned().collect())
}

fn to_f64(vs: &[Vec<Rat>]) -> Vec<Vec<f64>> {
    vs.iter().map(|v| v.iter().map(rat_to_f64).collect()).collect()
}

fn is_euclidean(e: &NormedSpace) -> bool {
    e.is_hilbert()
}

fn singular_values(m: &Matrix) -> Vec<f64> {
    let a: DMatrix<f64> = m.to_nalgebra();
    let mut s: Vec<f64> = a.singular_values().iter().copied().collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// `max ‖Tu‖` over unit-vector samples: a lower bound on `‖T‖`, exact up to
/// rounding when the samples include every ball vertex.
pub fn fast_norm(f: &NormedSpace, m: &Matrix, samples: &[Vec<f64>]) -> f64 {
    let mut buf = vec![0.0; m.rows()];
    let mut best: f64 = 0.0;
    for u in samples {
        m.apply_into(u, &mut buf);
        best = best.max(f.norm(&buf));
    }
    best
}

/// `‖T‖` with a certificate whenever one is available.
pub fn operator_norm(t: &LinearMap) -> Bound {
    operator_norm_of(t.domain(), t.codomain(), t.matrix())
}

pub fn operator_norm_of(e: &NormedSpace, f: &NormedSpace, m: &Matrix) -> Bound {
    let d = e.dim();
    if d == 0 || f.dim() == 0 || m.is_zero() {
        let mut b = Bound::trivial(0.0);
        b.exact = Some(Rat::zero());
        return b;
    }
    if d == 1 {
        return one_dim_gain(e, f, m);
    }
    if let Some(b) = monomial(e, f, m, Goal::Max) {
        return b;
    }
    if let Some(vs) = half_vertices(e) {
        // exact path: rational image of each vertex
        if f.is_polyhedral() && vs.len() <= 4096 {
            let rows = m.exact_rows();
            let mut best: Option<Rat> = Some(Rat::zero());
            for v in &vs {
                match f.norm_exact(&exact_apply(&rows, v)) {
                    Some(n) => {
                        if best.as_ref().is_some_and(|b| n > *b) {
                            best = Some(n);
                        }
                    }
                    None => {
                        best = None;
                        break;
                    }
                }
            }
            if let Some(b) = best {
                return Bound::exact(b);
            }
        }
        let vf = to_f64(&vs);
        let value = vf
            .iter()
            .map(|v| f.norm(&m.apply(v)))
            .fold(0.0, f64::max);
        return Bound::float(value, f.norm_tolerance(), Method::Vertices);
    }
    if let Some(fs) = half_facets(f) {
        let mt = m.transpose();
        let duals: Option<Vec<f64>> = to_f64(&fs)
            .iter()
            .map(|b| e.dual_norm(&mt.apply(b)))
            .collect();
        if let Some(ds) = duals {
            let value = ds.into_iter().fold(0.0, f64::max);
            return Bound::float(value, e.norm_tolerance(), Method::Facets);
        }
    }
    if is_euclidean(e) && is_euclidean(f) {
        let s = singular_values(m);
        return Bound::float(s[0], 1e-12, Method::Singular);
    }
    if d == 2 {
        return angular(e, f, m, Goal::Max, ANGULAR_REL_TOL, ANGULAR_MAX_EVALS);
    }
    sampled_extreme(e, f, m, Goal::Max)
}

/// A matrix with one nonzero per row and column between ℓ_p spaces with the
/// same `p` scales each coordinate: the extremes are the extreme `|entries|`.
fn monomial(e: &NormedSpace, f: &NormedSpace, m: &Matrix, goal: Goal) -> Option<Bound> {
    match (e.spec(), f.spec()) {
        (NormSpec::Lp { p }, NormSpec::Lp { p: q }) if p == q && e.dim() == f.dim() => {}
        _ => return None,
    }
    let n = e.dim();
    let mut picked: Vec<(usize, usize)> = Vec::with_capacity(n);
    for i in 0..n {
        let nz: Vec<usize> = (0..n).filter(|&j| m.get(i, j) != 0.0).collect();
        if nz.len() != 1 {
            return None;
        }
        picked.push((i, nz[0]));
    }
    let mut cols: Vec<usize> = picked.iter().map(|&(_, j)| j).collect();
    cols.sort_unstable();
    cols.dedup();
    if cols.len() != n {
        return None;
    }
    let pick = |a: f64, b: f64| match goal {
        Goal::Max => a.max(b),
        Goal::Min => a.min(b),
    };
    if m.is_exact() {
        let rows = m.exact_rows();
        let vals = picked.iter().map(|&(i, j)| rows[i][j].abs());
        let v = match goal {
            Goal::Max => vals.max(),
            Goal::Min => vals.min(),
        }?;
        return Some(Bound::exact(v));
    }
    let start = match goal {
        Goal::Max => 0.0,
        Goal::Min => f64::INFINITY,
    };
    let v = picked.iter().map(|&(i, j)| m.get(i, j).abs()).fold(start, pick);
    let mut b = Bound::float(v, 0.0, Method::Monomial);
    b.lower = v;
    b.upper = v;
    Some(b)
}

fn one_dim_gain(e: &NormedSpace, f: &NormedSpace, m: &Matrix) -> Bound {
    let one = [Rat::one()];
    if let (Some(a), Some(b)) = (e.norm_exact(&one), f.norm_exact(&m.apply_exact(&one))) {
        if !a.is_zero() {
            return Bound::exact(b / a);
        }
    }
    let v = f.norm(&m.apply(&[1.0])) / e.norm(&[1.0]);
    Bound::float(v, e.norm_tolerance() + f.norm_tolerance(), Method::Vertices)
}

/// `m(T)`; zero exactly when `T` is not injective.
pub fn min_gain(t: &LinearMap) -> Bound {
    min_gain_of(t.domain(), t.codomain(), t.matrix())
}

pub fn min_gain_of(e: &NormedSpace, f: &NormedSpace, m: &Matrix) -> Bound {
    let d = e.dim();
    if d == 0 {
        return Bound::trivial(f64::INFINITY);
    }
    if m.rank() < d {
        return Bound::exact(Rat::zero());
    }
    if d == 1 {
        return one_dim_gain(e, f, m);
    }
    if let Some(b) = monomial(e, f, m, Goal::Min) {
        return b;
    }
    if let (Some(b), true) = (e.polytope(), f.is_polyhedral()) {
        if let Some(v) = exact_min_gain(&b.facets().to_vec(), f, m) {
            return Bound::exact(v);
        }
    }
    if is_euclidean(e) && is_euclidean(f) {
        let s = singular_values(m);
        return Bound::float(*s.last().unwrap_or(&0.0), 1e-12, Method::Singular);
    }
    if d == 2 {
        return angular(e, f, m, Goal::Min, ANGULAR_REL_TOL, ANGULAR_MAX_EVALS);
    }
    if let Some(b) = e.polytope() {
        return facet_search_min(&b.facets().to_vec(), &to_f64(b.vertices()), f, m);
    }
    sampled_extreme(e, f, m, Goal::Min)
}

/// LP epigraph of a polyhedral codomain norm: rows `r` with `‖y‖ = max_r <r, y>`,
/// or the coordinatewise description of ℓ₁.
enum Epigraph {
    Facets(Vec<Vec<Rat>>),
    L1,
}

fn epigraph(f: &NormedSpace) -> Option<Epigraph> {
    if let NormSpec::Lp { p } = f.spec() {
        if *p == 1.0 {
            return Some(Epigraph::L1);
        }
        if p.is_infinite() {
            let n = f.dim();
            let mut rows = crate::polytope::unit_vectors(n);
            rows.extend(crate::polytope::unit_vectors(n).into_iter().map(|v| v.into_iter().map(|x| -x).collect()));
            return Some(Epigraph::Facets(rows));
        }
    }
    f.polytope().map(|b| Epigraph::Facets(b.facets().to_vec()))
}

/// Exact `m(T)` for a polytope domain: minimize the codomain norm over each
/// facet of the domain ball (one facet per antipodal pair).
fn exact_min_gain(facets: &[Vec<Rat>], f: &NormedSpace, m: &Matrix) -> Option<Rat> {
    let epi = epigraph(f)?;
    let rows = m.exact_rows();
    let d = m.cols();
    let k = m.rows();
    let extra = match &epi {
        Epigraph::Facets(_) => 1,
        Epigraph::L1 => k,
    };
    let nv = d + extra;
    let mut best: Option<Rat> = None;
    for a in facets.iter().filter(|a| first_positive(a)) {
        let mut obj = vec![Rat::zero(); nv];
        for o in obj.iter_mut().skip(d) {
            *o = Rat::one();
        }
        let mut lp = LinearProgram::new(nv, obj);
        let mut eq = a.clone();
        eq.resize(nv, Rat::zero());
        lp.add_eq(eq, Rat::one());
        for c in facets {
            let mut row = c.clone();
            row.resize(nv, Rat::zero());
            lp.add_le(row, Rat::one());
        }
        match &epi {
            Epigraph::Facets(bs) => {
                // <b, T x> - t <= 0
                for b in bs {
                    let mut row: Vec<Rat> = (0..d)
                        .map(|j| {
                            rows.iter()
                                .zip(b)
                                .fold(Rat::zero(), |acc, (r, bi)| acc + bi * &r[j])
                        })
                        .collect();
                    row.push(-Rat::one());
                    lp.add_le(row, Rat::zero());
                }
            }
            Epigraph::L1 => {
                // ±(T x)_i - s_i <= 0
                for (i, r) in rows.iter().enumerate() {
                    for sign in [Rat::one(), -Rat::one()] {
                        let mut row: Vec<Rat> = r.iter().map(|x| x * &sign).collect();
                        row.resize(nv, Rat::zero());
                        row[d + i] = -Rat::one();
                        lp.add_le(row, Rat::zero());
                    }
                }
            }
        }
        match lp.solve() {
            LpOutcome::Optimal { value, .. } => {
                if best.as_ref().is_none_or(|b| value < *b) {
                    best = Some(value);
                }
            }
            _ => return None,
        }
    }
    best
}

/// Double-precision minimization over each facet of a polytope domain
/// (softmax weights over the facet's vertices). Not certified.
fn facet_search_min(facets: &[Vec<Rat>], vertices: &[Vec<f64>], f: &NormedSpace, m: &Matrix) -> Bound {
    let mut best = f64::INFINITY;
    for a in facets.iter().filter(|a| first_positive(a)) {
        let af: Vec<f64> = a.iter().map(rat_to_f64).collect();
        let on: Vec<&Vec<f64>> = vertices
            .iter()
            .filter(|v| (v.iter().zip(&af).map(|(x, y)| x * y).sum::<f64>() - 1.0).abs() < 1e-12)
            .collect();
        let mut obj = |z: &[f64]| {
            let mx = z.iter().fold(f64::NEG_INFINITY, |a, b| a.max(*b));
            let w: Vec<f64> = z.iter().map(|v| (v - mx).exp()).collect();
            let s: f64 = w.iter().sum();
            let mut x = vec![0.0; m.cols()];
            for (wi, v) in w.iter().zip(&on) {
                for (xj, vj) in x.iter_mut().zip(v.iter()) {
                    *xj += wi / s * vj;
                }
            }
            f.norm(&m.apply(&x))
        };
        let (_, v, _) = nelder_mead(
            &mut obj,
            &vec![0.0; on.len()],
            NelderMeadOptions {
                initial_step: 1.0,
                max_evals: 4000,
                ..Default::default()
            },
        );
        for vtx in &on {
            best = best.min(f.norm(&m.apply(vtx)));
        }
        best = best.min(v);
    }
    Bound {
        method: Method::FacetSearch,
        ..Bound::estimate(best)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Goal {
    Max,
    Min,
}

/// Uncertified multistart estimate for domains without a usable structure.
fn sampled_extreme(e: &NormedSpace, f: &NormedSpace, m: &Matrix, goal: Goal) -> Bound {
    let d = e.dim();
    let ratio = |x: &[f64]| {
        let n = e.norm(x);
        if n <= 0.0 {
            return f64::NAN;
        }
        f.norm(&m.apply(x)) / n
    };
    let sign = if goal == Goal::Max { -1.0 } else { 1.0 };
    let dirs = spread_directions(d, 64 * d);
    let mut scored: Vec<(f64, usize)> = dirs
        .iter()
        .enumerate()
        .map(|(i, u)| (sign * ratio(u), i))
        .filter(|(v, _)| v.is_finite())
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let mut best = scored.first().map_or(f64::INFINITY, |s| s.0);
    for &(_, i) in scored.iter().take(4) {
        let mut obj = |x: &[f64]| {
            let r = ratio(x);
            if r.is_finite() {
                sign * r
            } else {
                f64::INFINITY
            }
        };
        let (_, v, _) = nelder_mead(
            &mut obj,
            &dirs[i],
            NelderMeadOptions {
                initial_step: 0.2,
                max_evals: 3000,
                ..Default::default()
            },
        );
        best = best.min(v);
    }
    Bound::estimate(sign * best)
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    key: f64,
    center: f64,
    half: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    fn cmp(&self, other: &Self) -> Ordering {
        self.key
            .total_cmp(&other.key)
            .then(other.center.total_cmp(&self.center))
    }
}

/// Certified bracket for `max` or `min` over the unit sphere of a
/// two-dimensional domain of `‖Tu‖ / ‖u‖`, `u = (cos θ, sin θ)`, `θ ∈ [0, π]`.
///
/// On `|θ − c| ≤ h` the numerator moves by at most `L_N h` and the denominator by
/// at most `L_D h`, where `L_N = (‖Te₁‖² + ‖Te₂‖²)^{1/2}` and
/// `L_D = (‖e₁‖² + ‖e₂‖²)^{1/2}`.
pub(crate) fn angular(
    e: &NormedSpace,
    f: &NormedSpace,
    m: &Matrix,
    goal: Goal,
    rel_tol: f64,
    max_evals: usize,
) -> Bound {
    let rel = (e.norm_tolerance() + f.norm_tolerance()).max(rel_tol);
    let te1 = f.norm(&m.col_f64(0));
    let te2 = f.norm(&m.col_f64(1));
    let ln = (te1 * te1 + te2 * te2).sqrt() * (1.0 + 1e-12);
    let ld = (e.norm(&[1.0, 0.0]).powi(2) + e.norm(&[0.0, 1.0]).powi(2)).sqrt() * (1.0 + 1e-12);
    let eval = |t: f64| {
        let u = [t.cos(), t.sin()];
        (f.norm(&m.apply(&u)), e.norm(&u))
    };
    let bounds = |c: f64, h: f64| -> (f64, f64, f64) {
        let (n0, d0) = eval(c);
        let val = n0 / d0;
        let mut hi = if d0 > ld * h {
            (n0 + ln * h) / (d0 - ld * h)
        } else {
            f64::INFINITY
        };
        let mut lo = (n0 - ln * h).max(0.0) / (d0 + ld * h);
        // cone bound: the arc lies in the cone over the two endpoint sphere
        // points a', b', and a functional φ gives ‖x‖ ≥ φ(x)/‖φ‖_*
        if h < 0.5 {
            let ends = [c - h, c + h].map(|t| {
                let u = [t.cos(), t.sin()];
                let du = e.norm(&u);
                let a = [u[0] / du, u[1] / du];
                (a, m.apply(&a))
            });
            match goal {
                Goal::Max => {
                    let u = [c.cos(), c.sin()];
                    if let Some(phi) = supporting(e, &u) {
                        let ratios: Vec<f64> = ends
                            .iter()
                            .map(|(a, ta)| {
                                let pa = phi[0] * a[0] + phi[1] * a[1];
                                if pa > 0.0 {
                                    f.norm(ta) / pa
                                } else {
                                    f64::INFINITY
                                }
                            })
                            .collect();
                        hi = hi.min(ratios[0].max(ratios[1]));
                    }
                }
                Goal::Min => {
                    let y = m.apply(&[c.cos(), c.sin()]);
                    if let Some(psi) = supporting(f, &y) {
                        let v = ends
                            .iter()
                            .map(|(_, ta)| ta.iter().zip(&psi).map(|(x, w)| x * w).sum::<f64>())
                            .fold(f64::INFINITY, f64::min);
                        lo = lo.max(v);
                    }
                }
            }
        }
        (val, lo, hi)
    };
    let mut heap = BinaryHeap::new();
    let init = 64;
    let h0 = std::f64::consts::PI / (2 * init) as f64;
    let mut best = match goal {
        Goal::Max => 0.0,
        Goal::Min => f64::INFINITY,
    };
    let mut evals = 0usize;
    let push = |heap: &mut BinaryHeap<Cell>, best: &mut f64, c: f64, h: f64| {
        let (val, lo, hi) = bounds(c, h);
        match goal {
            Goal::Max => {
                *best = best.max(val);
                heap.push(Cell {
                    key: hi,
                    center: c,
                    half: h,
                });
            }
            Goal::Min => {
                *best = best.min(val);
                heap.push(Cell {
                    key: -lo,
                    center: c,
                    half: h,
                });
            }
        }
    };
    for i in 0..init {
        let c = (2 * i + 1) as f64 * h0;
        push(&mut heap, &mut best, c, h0);
        evals += 1;
    }
    loop {
        let top = *heap.peek().expect("nonempty");
        let bound = match goal {
            Goal::Max => top.key,
            Goal::Min => -top.key,
        };
        let done = match goal {
            Goal::Max => bound <= best * (1.0 + rel),
            Goal::Min => bound >= best * (1.0 - rel),
        };
        if done || evals >= max_evals {
            let (lower, upper) = match goal {
                Goal::Max => (best, bound.max(best)),
                Goal::Min => (bound.min(best), best),
            };
            let mut b = Bound::interval(lower, upper, Method::Angular);
            b.value = best;
            return b;
        }
        heap.pop();
        let h = top.half / 2.0;
        push(&mut heap, &mut best, top.center - h, h);
        push(&mut heap, &mut best, top.center + h, h);
        evals += 2;
    }
}

/// Numerical gradient of the norm at `x`, divided by its dual norm: a functional
/// of dual norm 1 that nearly norms `x`. `None` without a closed-form dual norm.
fn supporting(s: &NormedSpace, x: &[f64]) -> Option<Vec<f64>> {
    let scale = x.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    let step = 1e-6 * scale;
    let mut g = Vec::with_capacity(x.len());
    let mut y = x.to_vec();
    for i in 0..x.len() {
        y[i] = x[i] + step;
        let up = s.norm(&y);
        y[i] = x[i] - step;
        let down = s.norm(&y);
        y[i] = x[i];
        g.push((up - down) / (2.0 * step));
    }
    let d = s.dual_norm(&g)?;
    if !(d > 0.0) || !d.is_finite() {
        return None;
    }
    // pad the dual norm so the functional stays in the dual ball after rounding
    let d = d * (1.0 + 1e-14);
    Some(g.into_iter().map(|v| v / d).collect())
}

/// Best double-precision value of `min_θ ‖Tu‖/‖u‖` over a sample plus a golden
/// refinement; an upper bound on `m(T)` up to rounding. Two-dimensional domains.
pub(crate) fn gain_upper_2d(e: &NormedSpace, f: &NormedSpace, m: &Matrix, samples: usize) -> f64 {
    let ratio = |t: f64| {
        let u = [t.cos(), t.sin()];
        f.norm(&m.apply(&u)) / e.norm(&u)
    };
    let step = std::f64::consts::PI / samples as f64;
    let (mut bt, mut bv) = (0.0, f64::INFINITY);
    for i in 0..samples {
        let t = i as f64 * step;
        let v = ratio(t);
        if v < bv {
            bv = v;
            bt = t;
        }
    }
    let (_, v) = golden_section(ratio, bt - step, bt + step, 1e-10);
    bv.min(v)
}

/// Best double-precision value of `max ‖Tu‖/‖u‖`; a lower bound on `‖T‖` up to
/// rounding. Two-dimensional domains.
pub(crate) fn norm_lower_2d(e: &NormedSpace, f: &NormedSpace, m: &Matrix, samples: usize) -> f64 {
    if let Some(vs) = half_vertices(e) {
        return to_f64(&vs)
            .iter()
            .map(|v| f.norm(&m.apply(v)))
            .fold(0.0, f64::max);
    }
    let ratio = |t: f64| {
        let u = [t.cos(), t.sin()];
        -f.norm(&m.apply(&u)) / e.norm(&u)
    };
    let step = std::f64::consts::PI / samples as f64;
    let (mut bt, mut bv) = (0.0, f64::INFINITY);
    for i in 0..samples {
        let t = i as f64 * step;
        let v = ratio(t);
        if v < bv {
            bv = v;
            bt = t;
        }
    }
    let (_, v) = golden_section(ratio, bt - step, bt + step, 1e-10);
    -(bv.min(v))
}

/// Upper bound on `max_j ‖e_j*‖` style constants: dual norms of the coordinate
/// functionals of `e`, computed exactly or by a convex search.
pub fn coordinate_dual_norms(e: &NormedSpace) -> Vec<f64> {
    (0..e.dim())
        .map(|j| match e.coordinate_bound(j) {
            Some(v) => v,
            None => coordinate_functional_norm(e, j),
        })
        .collect()
}

/// `sup_{‖x‖ ≤ 1} |x_j| = 1 / min_{x_j = 1} ‖x‖`.
pub fn coordinate_functional_norm(e: &NormedSpace, j: usize) -> f64 {
    let d = e.dim();
    if d == 1 {
        return 1.0 / e.norm(&[1.0]);
    }
    let mut obj = |s: &[f64]| {
        let mut x = Vec::with_capacity(d);
        let mut it = s.iter();
        for i in 0..d {
            x.push(if i == j { 1.0 } else { *it.next().unwrap_or(&0.0) });
        }
        e.norm(&x)
    };
    let (_, v) = crate::optimize::minimize_convex(&mut obj, &vec![0.0; d - 1], 1e-10);
    // the search value is an upper bound on the minimum; pad before inverting
    1.0 / (v * (1.0 - 1e-8))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};

    fn sp(p: f64, n: usize) -> NormedSpace {
        NormedSpace::lp(p, n).unwrap()
    }

    fn map(e: &NormedSpace, f: &NormedSpace, rows: &[&[i64]]) -> LinearMap {
        let r: Vec<Vec<Rat>> = rows
            .iter()
            .map(|r| r.iter().map(|&x| rat_int(x)).collect())
            .collect();
        LinearMap::new(e, f, Matrix::from_rows_rat(&r).unwrap()).unwrap()
    }

    #[test]
    fn vertex_examples() {
        let (l1, li) = (sp(1.0, 2), sp(f64::INFINITY, 2));
        let id = Matrix::identity(2);
        assert_eq!(operator_norm_of(&l1, &li, &id).exact, Some(rat_int(1)));
        assert_eq!(operator_norm_of(&li, &l1, &id).exact, Some(rat_int(2)));
        let t = map(&sp(3.0, 2), &sp(3.0, 2), &[&[3, 0], &[0, -5]]);
        let b = operator_norm(&t);
        assert!(b.lower <= 5.0 && 5.0 <= b.upper && b.upper - b.lower < 1e-8, "{b:?}");
    }

    #[test]
    fn gain_examples() {
        let (l1, l2) = (sp(1.0, 2), sp(2.0, 2));
        let b = min_gain_of(&l1, &l2, &Matrix::identity(2));
        let s = 0.5f64.sqrt();
        assert!(b.lower <= s && s <= b.upper && b.upper - b.lower < 1e-9, "{b:?}");
        assert_eq!(min_gain(&map(&l1, &l1, &[&[1, 1], &[2, 2]])).exact, Some(rat_int(0)));
        let iso = map(&l1, &sp(f64::INFINITY, 2), &[&[1, 1], &[1, -1]]);
        assert_eq!(min_gain(&iso).exact, Some(rat_int(1)));
        assert_eq!(operator_norm(&iso).exact, Some(rat_int(1)));
    }

    #[test]
    fn exact_gain_matches_brute_force() {
        // ℓ∞² → ℓ₁³, gain is attained on the boundary of the square
        let t = map(&sp(f64::INFINITY, 2), &sp(1.0, 3), &[&[1, 2], &[0, 1], &[3, -1]]);
        let g = min_gain(&t).exact.unwrap();
        let mut best = f64::INFINITY;
        for i in 0..=4000 {
            let s = -1.0 + i as f64 / 2000.0;
            for x in [[1.0, s], [s, 1.0]] {
                best = best.min(sp(1.0, 3).norm(&t.apply(&x)));
            }
        }
        assert!((rat_to_f64(&g) - best).abs() < 1e-3, "{g} {best}");
        assert!(rat_to_f64(&g) <= best + 1e-12);
    }

    #[test]
    fn angular_certificate_brackets_smooth_case() {
        let (e, f) = (sp(1.5, 2), sp(4.0, 2));
        let m = Matrix::from_rows_f64(&[vec![1.0, 0.3], vec![-0.2, 0.8]]).unwrap();
        let hi = operator_norm_of(&e, &f, &m);
        let lo = min_gain_of(&e, &f, &m);
        assert_eq!(hi.method, Method::Angular);
        let mut mx: f64 = 0.0;
        let mut mn = f64::INFINITY;
        for i in 0..200_000 {
            let t = std::f64::consts::PI * i as f64 / 200_000.0;
            let u = [t.cos(), t.sin()];
            let r = f.norm(&m.apply(&u)) / e.norm(&u);
            mx = mx.max(r);
            mn = mn.min(r);
        }
        assert!(hi.lower <= mx * (1.0 + 1e-12) && mx <= hi.upper, "{hi:?} {mx}");
        assert!(lo.lower <= mn && mn <= lo.upper * (1.0 + 1e-12), "{lo:?} {mn}");
        assert!(hi.upper - hi.lower < 1e-8 && lo.upper - lo.lower < 1e-8);
    }

    #[test]
    fn one_dimensional_and_zero() {
        let e = NormedSpace::vertex_ball(1, &[vec![rat(2, 1)]]).unwrap();
        let t = LinearMap::new(&e, &sp(1.0, 1), Matrix::from_rows_rat(&[vec![rat(3, 1)]]).unwrap()).unwrap();
        assert_eq!(operator_norm(&t).exact, Some(rat(6, 1)));
        let z = LinearMap::zero(&sp(2.0, 2), &sp(2.0, 3));
        assert_eq!(operator_norm(&z).value, 0.0);
        assert_eq!(min_gain(&z).value, 0.0);
    }

    #[test]
    fn euclidean_uses_singular_values() {
        let t = map(&sp(2.0, 2), &sp(2.0, 2), &[&[3, 1], &[0, 4]]);
        let b = operator_norm(&t);
        assert_eq!(b.method, Method::Singular);
        // oracle: eigenvalues of TᵀT = [[9,3],[3,17]] are 13 ± 5
        assert!((b.value - 18f64.sqrt()).abs() < 1e-12);
        assert!((min_gain(&t).value - 8f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn coordinate_functionals() {
        let e = NormedSpace::subspace(&sp(2.0, 3), &[vec![rat_int(1), rat_int(1), rat_int(0)], vec![rat_int(0), rat_int(1), rat_int(1)]]).unwrap();
        // Gram = [[2,1],[1,2]], inverse diagonal 2/3
        let v = coordinate_functional_norm(&e, 0);
        assert!((v - (2.0f64 / 3.0).sqrt()).abs() < 1e-6, "{v}");
    }
}
