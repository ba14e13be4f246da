//! Centrally symmetric polytopes as unit balls, carried in both vertex and
//! facet form over exact rationals.

use std::collections::HashSet;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpOutcome};
use crate::rational::{dot, rank, rat_to_f64, solve, Rat};

/// Upper bound on the number of d-subsets examined during vertex enumeration.
pub const ENUMERATION_BUDGET: u64 = 3_000_000;

#[derive(Debug, Clone)]
pub struct Polytope {
    dim: usize,
    vertices: Vec<Vec<Rat>>,
    facets: Vec<Vec<Rat>>,
    vertices_f64: Vec<Vec<f64>>,
    facets_f64: Vec<Vec<f64>>,
}

impl PartialEq for Polytope {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && same_set(&self.vertices, &other.vertices)
    }
}

fn same_set(a: &[Vec<Rat>], b: &[Vec<Rat>]) -> bool {
    a.len() == b.len() && {
        let s: HashSet<&Vec<Rat>> = a.iter().collect();
        b.iter().all(|v| s.contains(v))
    }
}

/// Adds `-v` for every `v`, drops zero vectors and duplicates; order is deterministic.
pub fn symmetrize(points: &[Vec<Rat>]) -> Vec<Vec<Rat>> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for p in points {
        if p.iter().all(Zero::is_zero) {
            continue;
        }
        let neg: Vec<Rat> = p.iter().map(|x| -x.clone()).collect();
        for q in [p.clone(), neg] {
            if seen.insert(q.clone()) {
                out.push(q);
            }
        }
    }
    out
}

fn binomial(n: usize, k: usize) -> u64 {
    if k > n {
        return 0;
    }
    let mut r: u64 = 1;
    for i in 0..k as u64 {
        r = r.saturating_mul(n as u64 - i) / (i + 1);
    }
    r
}

/// Float solve of a square system with partial pivoting. `None` when a pivot is
/// too small relative to the matrix scale to trust the answer.
fn solve_f64(a: &[&[f64]], dim: usize) -> Option<Vec<f64>> {
    let scale = a.iter().flat_map(|r| r.iter()).fold(0.0f64, |m, v| m.max(v.abs()));
    if scale == 0.0 {
        return None;
    }
    let mut m: Vec<Vec<f64>> = a
        .iter()
        .map(|r| {
            let mut row = r.to_vec();
            row.push(1.0);
            row
        })
        .collect();
    for c in 0..dim {
        let p = (c..dim).max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))?;
        if m[p][c].abs() < 1e-9 * scale {
            return None;
        }
        m.swap(c, p);
        for r in 0..dim {
            if r != c {
                let f = m[r][c] / m[c][c];
                if f != 0.0 {
                    for k in c..=dim {
                        m[r][k] -= f * m[c][k];
                    }
                }
            }
        }
    }
    Some((0..dim).map(|i| m[i][dim] / m[i][i]).collect())
}

/// Extreme points of `{x : <a, x> <= 1 for a in constraints}` (assumed bounded).
/// A float solve screens out clearly infeasible subsets; every survivor and every
/// ill-conditioned subset is decided in exact arithmetic.
pub fn enumerate_vertices(dim: usize, constraints: &[Vec<Rat>]) -> Result<Vec<Vec<Rat>>> {
    if dim == 0 {
        return Ok(Vec::new());
    }
    let m = constraints.len();
    if binomial(m, dim) > ENUMERATION_BUDGET {
        return Err(Error::Budget(format!(
            "vertex enumeration over {m} constraints in dimension {dim}"
        )));
    }
    let cf = to_f64(constraints);
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    let ones = vec![Rat::one(); dim];
    let mut idx: Vec<usize> = (0..dim).collect();
    loop {
        let rows: Vec<&[f64]> = idx.iter().map(|&i| cf[i].as_slice()).collect();
        let screened_out = solve_f64(&rows, dim).is_some_and(|x| {
            cf.iter().any(|a| {
                let (v, mag) = a.iter().zip(&x).fold((0.0, 0.0), |(v, mag), (p, q)| (v + p * q, mag + (p * q).abs()));
                v > 1.0 + 1e-7 * (1.0 + mag)
            })
        });
        if !screened_out {
            let sub: Vec<Vec<Rat>> = idx.iter().map(|&i| constraints[i].clone()).collect();
            if let Some(x) = solve(&sub, &ones) {
                let feasible = constraints.iter().all(|a| dot(a, &x) <= Rat::one());
                if feasible && seen.insert(x.clone()) {
                    out.push(x);
                }
            }
        }
        // next combination
        let mut i = dim;
        loop {
            if i == 0 {
                return Ok(out);
            }
            i -= 1;
            if idx[i] < m - dim + i {
                idx[i] += 1;
                for j in i + 1..dim {
                    idx[j] = idx[j - 1] + 1;
                }
                break;
            }
        }
    }
}

/// Points of a generating set that are extreme: those whose tight facets span.
fn extreme(dim: usize, points: &[Vec<Rat>], facets: &[Vec<Rat>]) -> Vec<Vec<Rat>> {
    points
        .iter()
        .filter(|p| {
            let tight: Vec<Vec<Rat>> = facets.iter().filter(|a| dot(a, p).is_one()).cloned().collect();
            tight.len() >= dim && rank(&tight) == dim
        })
        .cloned()
        .collect()
}

fn to_f64(vs: &[Vec<Rat>]) -> Vec<Vec<f64>> {
    vs.iter()
        .map(|v| v.iter().map(rat_to_f64).collect())
        .collect()
}

impl Polytope {
    fn assemble(dim: usize, vertices: Vec<Vec<Rat>>, facets: Vec<Vec<Rat>>) -> Self {
        let vertices_f64 = to_f64(&vertices);
        let facets_f64 = to_f64(&facets);
        Polytope {
            dim,
            vertices,
            facets,
            vertices_f64,
            facets_f64,
        }
    }

    /// Unit ball `conv(±points)`; interior points are discarded.
    pub fn from_vertices(dim: usize, points: &[Vec<Rat>]) -> Result<Self> {
        check_len(dim, points)?;
        let pts = symmetrize(points);
        if pts.is_empty() {
            return Err(Error::param("empty vertex set"));
        }
        let r = rank(&pts);
        if r < dim {
            return Err(Error::NotFullDimensional { rank: r, dim });
        }
        let facets = enumerate_vertices(dim, &pts)?;
        let vertices = extreme(dim, &pts, &facets);
        Ok(Self::assemble(dim, vertices, facets))
    }

    /// Unit ball `{x : <a, x> <= 1}` for every `a` in `±functionals`.
    pub fn from_facets(dim: usize, functionals: &[Vec<Rat>]) -> Result<Self> {
        check_len(dim, functionals)?;
        let fs = symmetrize(functionals);
        if fs.is_empty() {
            return Err(Error::param("empty functional set"));
        }
        let r = rank(&fs);
        if r < dim {
            return Err(Error::NotFullDimensional { rank: r, dim });
        }
        let vertices = enumerate_vertices(dim, &fs)?;
        let facets = extreme(dim, &fs, &vertices);
        Ok(Self::assemble(dim, vertices, facets))
    }

    /// The ℓ₁ ball (cross-polytope).
    pub fn cross(dim: usize) -> Self {
        let vertices = symmetrize(&unit_vectors(dim));
        let facets = sign_vectors(dim);
        Self::assemble(dim, vertices, facets)
    }

    /// The ℓ∞ ball (cube).
    pub fn cube(dim: usize) -> Self {
        Self::cross(dim).polar()
    }

    /// ℓ₁-sum: `conv(B_P × 0 ∪ 0 × B_Q)`.
    pub fn l1_sum(p: &Polytope, q: &Polytope) -> Self {
        let (dp, dq) = (p.dim, q.dim);
        let mut vertices = Vec::new();
        for v in &p.vertices {
            let mut w = v.clone();
            w.extend(std::iter::repeat_n(Rat::zero(), dq));
            vertices.push(w);
        }
        for v in &q.vertices {
            let mut w = vec![Rat::zero(); dp];
            w.extend(v.iter().cloned());
            vertices.push(w);
        }
        let mut facets = Vec::new();
        for a in &p.facets {
            for b in &q.facets {
                let mut f = a.clone();
                f.extend(b.iter().cloned());
                facets.push(f);
            }
        }
        Self::assemble(dp + dq, vertices, facets)
    }

    /// ℓ∞-sum: `B_P × B_Q`.
    pub fn linf_sum(p: &Polytope, q: &Polytope) -> Self {
        Self::l1_sum(&p.polar(), &q.polar()).polar()
    }

    /// Polar body: vertices and facets swap roles.
    pub fn polar(&self) -> Self {
        Self::assemble(self.dim, self.facets.clone(), self.vertices.clone())
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn vertices(&self) -> &[Vec<Rat>] {
        &self.vertices
    }

    pub fn facets(&self) -> &[Vec<Rat>] {
        &self.facets
    }

    pub fn vertices_f64(&self) -> &[Vec<f64>] {
        &self.vertices_f64
    }

    pub fn facets_f64(&self) -> &[Vec<f64>] {
        &self.facets_f64
    }

    /// Exact gauge `max_a <a, x>`.
    pub fn gauge(&self, x: &[Rat]) -> Rat {
        self.facets
            .iter()
            .map(|a| dot(a, x))
            .fold(Rat::zero(), |m, v| if v > m { v } else { m })
    }

    pub fn gauge_f64(&self, x: &[f64]) -> f64 {
        self.facets_f64
            .iter()
            .map(|a| a.iter().zip(x).map(|(p, q)| p * q).sum::<f64>())
            .fold(0.0, f64::max)
    }

    /// Dual norm `max_v <v, f>` of a functional.
    pub fn dual_gauge(&self, f: &[Rat]) -> Rat {
        self.vertices
            .iter()
            .map(|v| dot(v, f))
            .fold(Rat::zero(), |m, v| if v > m { v } else { m })
    }

    pub fn dual_gauge_f64(&self, f: &[f64]) -> f64 {
        self.vertices_f64
            .iter()
            .map(|v| v.iter().zip(f).map(|(p, q)| p * q).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn contains_vertex(&self, v: &[Rat]) -> bool {
        self.vertices.iter().any(|w| w.as_slice() == v)
    }
}

fn check_len(dim: usize, pts: &[Vec<Rat>]) -> Result<()> {
    for p in pts {
        if p.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: p.len(),
            });
        }
    }
    Ok(())
}

pub fn unit_vectors(dim: usize) -> Vec<Vec<Rat>> {
    (0..dim)
        .map(|i| {
            (0..dim)
                .map(|j| if i == j { Rat::one() } else { Rat::zero() })
                .collect()
        })
        .collect()
}

pub fn sign_vectors(dim: usize) -> Vec<Vec<Rat>> {
    (0..1u64 << dim)
        .map(|mask| {
            (0..dim)
                .map(|j| {
                    if mask >> j & 1 == 1 {
                        -Rat::one()
                    } else {
                        Rat::one()
                    }
                })
                .collect()
        })
        .collect()
}

/// Gauge of `conv(±points)` at `x` as the linear program
/// `min Σ|λ_i|  s.t.  x = Σ λ_i v_i`. `None` when `x` is outside the span.
pub fn gauge_lp(points: &[Vec<Rat>], x: &[Rat]) -> Option<Rat> {
    let k = points.len();
    let d = x.len();
    // variables λ⁺ (k), λ⁻ (k); nonnegativity added as rows since the LP has free vars
    let mut lp = LinearProgram::new(2 * k, vec![Rat::one(); 2 * k]);
    for i in 0..d {
        let mut row = vec![Rat::zero(); 2 * k];
        for (j, p) in points.iter().enumerate() {
            row[j] = p[i].clone();
            row[k + j] = -p[i].clone();
        }
        lp.add_eq(row, x[i].clone());
    }
    for j in 0..2 * k {
        let mut row = vec![Rat::zero(); 2 * k];
        row[j] = -Rat::one();
        lp.add_le(row, Rat::zero());
    }
    match lp.solve() {
        LpOutcome::Optimal { value, .. } => Some(value.abs()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};

    fn v(xs: &[i64]) -> Vec<Rat> {
        xs.iter().map(|&x| rat_int(x)).collect()
    }

    #[test]
    fn cross_polytope_polar_is_cube() {
        let p = Polytope::from_vertices(2, &[v(&[1, 0]), v(&[0, 1])]).unwrap();
        assert_eq!(p.vertices().len(), 4);
        assert_eq!(p.facets().len(), 4);
        let expect: HashSet<Vec<Rat>> = sign_vectors(2).into_iter().collect();
        assert!(p.facets().iter().all(|f| expect.contains(f)));
        assert_eq!(p, Polytope::cross(2));
        assert_eq!(p.polar(), Polytope::cube(2));
    }

    #[test]
    fn interior_points_are_pruned() {
        let p = Polytope::from_vertices(
            2,
            &[v(&[1, 0]), v(&[0, 1]), v(&[0, 0]), vec![rat(1, 4), rat(1, 4)]],
        )
        .unwrap();
        assert_eq!(p, Polytope::cross(2));
    }

    #[test]
    fn gauge_lp_matches_facet_gauge() {
        let p = Polytope::from_vertices(2, &[v(&[2, 1]), v(&[-1, 3]), v(&[1, 1])]).unwrap();
        for x in [v(&[1, 1]), v(&[3, -2]), vec![rat(1, 3), rat(-7, 5)]] {
            assert_eq!(gauge_lp(p.vertices(), &x).unwrap(), p.gauge(&x));
        }
    }

    #[test]
    fn sums_of_balls() {
        let s = Polytope::l1_sum(&Polytope::cross(1), &Polytope::cross(2));
        assert_eq!(s, Polytope::cross(3));
        let c = Polytope::linf_sum(&Polytope::cube(1), &Polytope::cube(2));
        assert_eq!(c, Polytope::cube(3));
    }

    #[test]
    fn rejects_degenerate_sets() {
        let err = Polytope::from_vertices(2, &[v(&[1, 1]), v(&[2, 2])]).unwrap_err();
        assert_eq!(err, Error::NotFullDimensional { rank: 1, dim: 2 });
        assert!(Polytope::from_vertices(2, &[]).is_err());
    }
}
