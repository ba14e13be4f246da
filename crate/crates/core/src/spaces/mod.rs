//! Finite-dimensional normed and pseudonormed spaces.

mod json;

use std::fmt;
use std::sync::{Arc, OnceLock};

use num_traits::{Signed, Zero};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpOutcome};
use crate::matrix::Matrix;
use crate::optimize::minimize_convex;
use crate::polytope::{gauge_lp, symmetrize, Polytope};
use crate::rational::{null_space, rank, rat_from_f64, rat_to_f64, Rat};

pub use json::{MapDesc, Num, SpaceDesc};

/// Tolerance reported for ℓ_p evaluations in double precision.
pub const LP_FLOAT_TOL: f64 = 1e-12;
/// Tolerance of the convex search used for quotients of smooth hosts.
pub const QUOTIENT_TOL: f64 = 1e-9;
/// Polytope balls with more vertices or facets than this are not materialized.
pub const POLYTOPE_SIZE_CAP: usize = 4096;

#[derive(Debug, Clone)]
pub enum NormSpec {
    Lp {
        p: f64,
    },
    /// ℓ_p^n(ℓ_q^k): `n` blocks of length `k`, block `i` at coordinates `i*k..(i+1)*k`.
    LpLq {
        p: f64,
        q: f64,
        n: usize,
        k: usize,
    },
    VertexBall {
        vertices: Vec<Vec<Rat>>,
        ball: Option<Arc<Polytope>>,
    },
    FacetBall {
        functionals: Vec<Vec<Rat>>,
        ball: Arc<Polytope>,
    },
    /// `‖x‖ = ‖map · x‖_host`.
    Pullback {
        host: NormedSpace,
        map: Matrix,
    },
    PSum {
        p: f64,
        left: NormedSpace,
        right: NormedSpace,
    },
    /// `host / span(kernel)` in coordinates `y = projection · x`; `lift` is a right
    /// inverse of `projection` and the columns of `kernel` span its null space.
    Quotient {
        host: NormedSpace,
        kernel: Matrix,
        projection: Matrix,
        lift: Matrix,
    },
}

#[derive(Debug)]
struct Inner {
    dim: usize,
    spec: NormSpec,
    polytope: OnceLock<Option<Arc<Polytope>>>,
}

/// Immutable, cheaply clonable handle to a normed space.
#[derive(Clone)]
pub struct NormedSpace(Arc<Inner>);

impl fmt::Debug for NormedSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "NormedSpace({})", self.label())
    }
}

/// Outcome of a norm evaluation.
#[derive(Debug, Clone, PartialEq)]
pub enum NormValue {
    Finite {
        value: f64,
        exact: Option<Rat>,
        tolerance: f64,
    },
    /// The vector lies outside the span of a degenerate vertex ball.
    Infinite,
}

impl NormValue {
    pub fn value(&self) -> f64 {
        match self {
            NormValue::Finite { value, .. } => *value,
            NormValue::Infinite => f64::INFINITY,
        }
    }
}

fn check_exponent(p: f64) -> Result<()> {
    if p.is_nan() || p < 1.0 {
        return Err(Error::param(format!("exponent {p} must lie in [1, inf]")));
    }
    Ok(())
}

/// Conjugate exponent `p'` with `1/p + 1/p' = 1`.
pub fn conjugate(p: f64) -> f64 {
    if p == 1.0 {
        f64::INFINITY
    } else if p.is_infinite() {
        1.0
    } else {
        p / (p - 1.0)
    }
}

pub fn lp_norm(x: &[f64], p: f64) -> f64 {
    if p == 1.0 {
        x.iter().map(|v| v.abs()).sum()
    } else if p == 2.0 {
        x.iter().map(|v| v * v).sum::<f64>().sqrt()
    } else if p.is_infinite() {
        x.iter().fold(0.0, |m, v| m.max(v.abs()))
    } else {
        let m = x.iter().fold(0.0, |m: f64, v| m.max(v.abs()));
        if m == 0.0 {
            return 0.0;
        }
        m * x.iter().map(|v| (v.abs() / m).powf(p)).sum::<f64>().powf(1.0 / p)
    }
}

fn lp_norm_exact(x: &[Rat], p: f64) -> Option<Rat> {
    if p == 1.0 || x.len() <= 1 {
        Some(x.iter().fold(Rat::zero(), |a, v| a + v.abs()))
    } else if p.is_infinite() {
        Some(
            x.iter()
                .map(Signed::abs)
                .fold(Rat::zero(), |m, v| if v > m { v } else { m }),
        )
    } else {
        None
    }
}

fn is_poly_exponent(p: f64) -> bool {
    p == 1.0 || p.is_infinite()
}

/// Exponents of ℓ_p^n(ℓ_q^k) with the one acting on single coordinates replaced by 1.
fn block_exponents(p: f64, q: f64, n: usize, k: usize) -> (f64, f64) {
    (if n == 1 { 1.0 } else { p }, if k == 1 { 1.0 } else { q })
}

impl NormedSpace {
    fn build(dim: usize, spec: NormSpec) -> Self {
        NormedSpace(Arc::new(Inner {
            dim,
            spec,
            polytope: OnceLock::new(),
        }))
    }

    /// ℓ_p^n, `p` in `[1, ∞]` (`f64::INFINITY` for ∞).
    pub fn lp(p: f64, n: usize) -> Result<Self> {
        check_exponent(p)?;
        Ok(Self::build(n, NormSpec::Lp { p }))
    }

    /// ℓ_p^n(ℓ_q^k).
    pub fn lplq(p: f64, q: f64, n: usize, k: usize) -> Result<Self> {
        check_exponent(p)?;
        check_exponent(q)?;
        if n == 0 || k == 0 {
            return Err(Error::param("lplq block counts must be positive"));
        }
        Ok(Self::build(n * k, NormSpec::LpLq { p, q, n, k }))
    }

    /// Unit ball `conv(±vertices)`. Input is symmetrized. A non-spanning set is
    /// accepted and yields an extended norm that is infinite off the span.
    pub fn vertex_ball(dim: usize, vertices: &[Vec<Rat>]) -> Result<Self> {
        if vertices.is_empty() {
            return Err(Error::param("empty vertex set"));
        }
        for v in vertices {
            if v.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: v.len(),
                });
            }
        }
        let sym = symmetrize(vertices);
        if sym.is_empty() {
            return Err(Error::param("vertex set contains only the origin"));
        }
        let ball = match Polytope::from_vertices(dim, &sym) {
            Ok(p) => Some(Arc::new(p)),
            Err(Error::NotFullDimensional { .. }) => None,
            Err(e) => return Err(e),
        };
        let vertices = match &ball {
            Some(b) => b.vertices().to_vec(),
            None => sym,
        };
        Ok(Self::build(dim, NormSpec::VertexBall { vertices, ball }))
    }

    /// Unit ball `{x : <a, x> <= 1}` over `±functionals`.
    pub fn facet_ball(dim: usize, functionals: &[Vec<Rat>]) -> Result<Self> {
        if functionals.is_empty() {
            return Err(Error::param("empty functional set"));
        }
        let ball = Arc::new(Polytope::from_facets(dim, functionals)?);
        Ok(Self::build(
            dim,
            NormSpec::FacetBall {
                functionals: ball.facets().to_vec(),
                ball,
            },
        ))
    }

    pub fn from_polytope(p: Polytope) -> Self {
        let dim = p.dim();
        let ball = Arc::new(p);
        Self::build(
            dim,
            NormSpec::VertexBall {
                vertices: ball.vertices().to_vec(),
                ball: Some(ball),
            },
        )
    }

    /// `‖x‖ := ‖map · x‖_host`; a pseudonorm when `map` is not injective.
    pub fn pullback(host: &NormedSpace, map: Matrix) -> Result<Self> {
        if map.rows() != host.dim() {
            return Err(Error::DimensionMismatch {
                expected: host.dim(),
                got: map.rows(),
            });
        }
        Ok(Self::build(
            map.cols(),
            NormSpec::Pullback {
                host: host.clone(),
                map,
            },
        ))
    }

    /// Subspace spanned by `basis` (host vectors), in coefficient coordinates.
    pub fn subspace(host: &NormedSpace, basis: &[Vec<Rat>]) -> Result<Self> {
        let m = Matrix::from_cols_rat(host.dim(), basis)?;
        if m.rank() < basis.len() {
            return Err(Error::Dependent("subspace basis".into()));
        }
        Self::pullback(host, m)
    }

    /// `left ⊕_p right`.
    pub fn p_sum(left: &NormedSpace, right: &NormedSpace, p: f64) -> Result<Self> {
        check_exponent(p)?;
        Ok(Self::build(
            left.dim() + right.dim(),
            NormSpec::PSum {
                p,
                left: left.clone(),
                right: right.clone(),
            },
        ))
    }

    /// `host / span(kernel)`; kernel vectors may be dependent.
    pub fn quotient(host: &NormedSpace, kernel: &[Vec<Rat>]) -> Result<Self> {
        let m = host.dim();
        for v in kernel {
            if v.len() != m {
                return Err(Error::DimensionMismatch {
                    expected: m,
                    got: v.len(),
                });
            }
        }
        // projection rows span the annihilator of the kernel
        let ann = null_space(kernel, m);
        let q = ann.len();
        let kernel_basis = if kernel.is_empty() {
            Matrix::zeros(m, 0)
        } else {
            Matrix::from_cols_rat(m, &null_space(&ann_or_empty(&ann, m), m))?
        };
        let projection = if q == 0 {
            Matrix::zeros(0, m)
        } else {
            Matrix::from_rows_rat(&ann)?
        };
        // lift = Pᵀ (P Pᵀ)⁻¹
        let lift = if q == 0 {
            Matrix::zeros(m, 0)
        } else {
            let pt = projection.transpose();
            let gram = projection.mul(&pt)?;
            let inv = crate::rational::inverse(&gram.exact_rows())
                .ok_or_else(|| Error::param("singular projection"))?;
            pt.mul(&Matrix::from_rows_rat(&inv)?)?
        };
        Ok(Self::build(
            q,
            NormSpec::Quotient {
                host: host.clone(),
                kernel: kernel_basis,
                projection,
                lift,
            },
        ))
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    /// Switches a polytope norm between its vertex and facet representations.
    /// The norm itself is unchanged, so applying it twice returns the original description.
    pub fn dualize(&self) -> Result<Self> {
        match self.spec() {
            NormSpec::VertexBall { ball: Some(b), .. } => Ok(Self::build(
                self.dim(),
                NormSpec::FacetBall {
                    functionals: b.facets().to_vec(),
                    ball: b.clone(),
                },
            )),
            NormSpec::VertexBall { vertices, ball: None } => Err(Error::NotFullDimensional {
                rank: span_rank(vertices),
                dim: self.dim(),
            }),
            NormSpec::FacetBall { ball, .. } => Ok(Self::build(
                self.dim(),
                NormSpec::VertexBall {
                    vertices: ball.vertices().to_vec(),
                    ball: Some(ball.clone()),
                },
            )),
            _ => Err(Error::NotPolytope(self.label())),
        }
    }

    /// Vertex list of a vertex-ball description or facet list of a facet-ball description.
    pub fn polytope_description(&self) -> Option<&[Vec<Rat>]> {
        match self.spec() {
            NormSpec::VertexBall { vertices, .. } => Some(vertices),
            NormSpec::FacetBall { functionals, .. } => Some(functionals),
            _ => None,
        }
    }


    pub fn spec(&self) -> &NormSpec {
        &self.0.spec
    }

    pub fn ptr_eq(&self, other: &NormedSpace) -> bool {
        Arc::ptr_eq(&self.0, &other.0)
    }

    /// Quotient projection `host → self`, when this is a quotient.
    pub fn quotient_projection(&self) -> Option<&Matrix> {
        match self.spec() {
            NormSpec::Quotient { projection, .. } => Some(projection),
            _ => None,
        }
    }

    pub fn label(&self) -> String {
        let d = self.dim();
        let exp = |p: f64| {
            if p.is_infinite() {
                "inf".to_string()
            } else {
                format!("{p}")
            }
        };
        match self.spec() {
            NormSpec::Lp { p } => format!("l{}^{d}", exp(*p)),
            NormSpec::LpLq { p, q, n, k } => {
                format!("l{}^{n}(l{}^{k})", exp(*p), exp(*q))
            }
            NormSpec::VertexBall { vertices, .. } => format!("vertices[{}]^{d}", vertices.len()),
            NormSpec::FacetBall { functionals, .. } => {
                format!("facets[{}]^{d}", functionals.len())
            }
            NormSpec::Pullback { host, .. } => format!("pullback^{d}({})", host.label()),
            NormSpec::PSum { p, left, right } => {
                format!("({} +{} {})", left.label(), exp(*p), right.label())
            }
            NormSpec::Quotient { host, .. } => format!("quotient^{d}({})", host.label()),
        }
    }

    /// True when the norm is the gauge of a polytope (exact rational arithmetic applies).
    pub fn is_polyhedral(&self) -> bool {
        match self.spec() {
            NormSpec::Lp { p } => is_poly_exponent(*p),
            NormSpec::LpLq { p, q, n, k } => {
                let (p, q) = block_exponents(*p, *q, *n, *k);
                is_poly_exponent(p) && is_poly_exponent(q)
            }
            NormSpec::VertexBall { .. } | NormSpec::FacetBall { .. } => true,
            NormSpec::Pullback { host, .. } => host.is_polyhedral(),
            NormSpec::PSum { p, left, right } => {
                is_poly_exponent(*p) && left.is_polyhedral() && right.is_polyhedral()
            }
            NormSpec::Quotient { host, .. } => host.is_polyhedral(),
        }
    }

    /// Euclidean space (ℓ₂^n or ℓ₂^n(ℓ₂^k)).
    pub fn is_hilbert(&self) -> bool {
        match self.spec() {
            NormSpec::Lp { p } => *p == 2.0,
            NormSpec::LpLq { p, q, .. } => *p == 2.0 && *q == 2.0,
            _ => false,
        }
    }

    /// Explicit unit-ball polytope (both representations), when the norm is
    /// polyhedral, positive definite and small enough to materialize.
    pub fn polytope(&self) -> Option<Arc<Polytope>> {
        self.0
            .polytope
            .get_or_init(|| self.compute_polytope().map(Arc::new))
            .clone()
    }

    fn compute_polytope(&self) -> Option<Polytope> {
        let small = |n: usize| n < 12 && (1usize << n) <= POLYTOPE_SIZE_CAP;
        let d = self.dim();
        if d == 0 {
            return None;
        }
        match self.spec() {
            NormSpec::Lp { p } if *p == 1.0 && small(d) => Some(Polytope::cross(d)),
            NormSpec::Lp { p } if p.is_infinite() && small(d) => Some(Polytope::cube(d)),
            NormSpec::LpLq { p, q, n, k } if self.is_polyhedral() => {
                let (p, q) = block_exponents(*p, *q, *n, *k);
                let inner = NormedSpace::lp(q, *k).ok()?.polytope()?;
                let mut acc = (*inner).clone();
                for _ in 1..*n {
                    acc = if p == 1.0 {
                        Polytope::l1_sum(&acc, &inner)
                    } else {
                        Polytope::linf_sum(&acc, &inner)
                    };
                    if acc.vertices().len() > POLYTOPE_SIZE_CAP
                        || acc.facets().len() > POLYTOPE_SIZE_CAP
                    {
                        return None;
                    }
                }
                Some(acc)
            }
            NormSpec::VertexBall { ball, .. } => ball.as_deref().cloned(),
            NormSpec::FacetBall { ball, .. } => Some((**ball).clone()),
            NormSpec::Pullback { host, map } => {
                if map.rank() < d {
                    return None;
                }
                let hp = host.polytope()?;
                let at = map.transpose();
                let fs: Vec<Vec<Rat>> = hp.facets().iter().map(|a| at.apply_exact(a)).collect();
                let fs = symmetrize(&fs);
                Polytope::from_facets(d, &fs).ok()
            }
            NormSpec::PSum { p, left, right } if is_poly_exponent(*p) => {
                let (l, r) = (left.polytope()?, right.polytope()?);
                let s = if *p == 1.0 {
                    Polytope::l1_sum(&l, &r)
                } else {
                    Polytope::linf_sum(&l, &r)
                };
                (s.vertices().len() <= POLYTOPE_SIZE_CAP && s.facets().len() <= POLYTOPE_SIZE_CAP)
                    .then_some(s)
            }
            NormSpec::Quotient {
                host, projection, ..
            } => {
                let hp = host.polytope()?;
                let pts: Vec<Vec<Rat>> = hp
                    .vertices()
                    .iter()
                    .map(|v| projection.apply_exact(v))
                    .collect();
                Polytope::from_vertices(d, &pts).ok()
            }
            _ => None,
        }
    }

    /// Fast double-precision norm. Returns `+∞` off the span of a degenerate vertex ball.
    pub fn norm(&self, x: &[f64]) -> f64 {
        debug_assert_eq!(x.len(), self.dim());
        match self.spec() {
            NormSpec::Lp { p } => lp_norm(x, *p),
            NormSpec::LpLq { p, q, k, .. } => {
                let blocks: Vec<f64> = x.chunks(*k).map(|b| lp_norm(b, *q)).collect();
                lp_norm(&blocks, *p)
            }
            NormSpec::VertexBall { ball: Some(b), .. } | NormSpec::FacetBall { ball: b, .. } => {
                b.gauge_f64(x)
            }
            NormSpec::VertexBall { vertices, ball: None } => {
                degenerate_gauge_f64(vertices, x).unwrap_or(f64::INFINITY)
            }
            NormSpec::Pullback { host, map } => host.norm(&map.apply(x)),
            NormSpec::PSum { p, left, right } => {
                let (a, b) = x.split_at(left.dim());
                lp_norm(&[left.norm(a), right.norm(b)], *p)
            }
            NormSpec::Quotient {
                host, kernel, lift, ..
            } => {
                if let Some(b) = self.polytope() {
                    return b.gauge_f64(x);
                }
                if self.dim() == 0 {
                    return 0.0;
                }
                let base = lift.apply(x);
                let r = kernel.cols();
                if r == 0 {
                    return host.norm(&base);
                }
                let mut f = |s: &[f64]| {
                    let mut z = base.clone();
                    let ks = kernel.apply(s);
                    for (zi, ki) in z.iter_mut().zip(&ks) {
                        *zi += ki;
                    }
                    host.norm(&z)
                };
                minimize_convex(&mut f, &vec![0.0; r], QUOTIENT_TOL * 1e-2).1
            }
        }
    }

    /// Exact norm for polyhedral norms; `None` otherwise (or off the span of a
    /// degenerate vertex ball).
    pub fn norm_exact(&self, x: &[Rat]) -> Option<Rat> {
        match self.spec() {
            NormSpec::Lp { p } => lp_norm_exact(x, *p),
            NormSpec::LpLq { p, q, k, .. } => {
                let blocks: Option<Vec<Rat>> =
                    x.chunks(*k).map(|b| lp_norm_exact(b, *q)).collect();
                lp_norm_exact(&blocks?, *p)
            }
            NormSpec::VertexBall { ball: Some(b), .. } | NormSpec::FacetBall { ball: b, .. } => {
                Some(b.gauge(x))
            }
            NormSpec::VertexBall { vertices, ball: None } => gauge_lp(vertices, x),
            NormSpec::Pullback { host, map } => host.norm_exact(&map.apply_exact(x)),
            NormSpec::PSum { p, left, right } => {
                let (a, b) = x.split_at(left.dim());
                lp_norm_exact(&[left.norm_exact(a)?, right.norm_exact(b)?], *p)
            }
            NormSpec::Quotient { .. } => {
                if self.dim() == 0 {
                    return Some(Rat::zero());
                }
                self.polytope().map(|b| b.gauge(x))
            }
        }
    }

    /// Norm evaluation with its exactness report.
    pub fn norm_eval(&self, x: &[f64]) -> Result<NormValue> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        if self.is_polyhedral() {
            let xr: Vec<Rat> = x.iter().map(|&v| rat_from_f64(v)).collect::<Result<_>>()?;
            if let Some(v) = self.norm_exact(&xr) {
                return Ok(NormValue::Finite {
                    value: rat_to_f64(&v),
                    exact: Some(v),
                    tolerance: 0.0,
                });
            }
            if matches!(self.spec(), NormSpec::VertexBall { ball: None, .. }) {
                return Ok(NormValue::Infinite);
            }
        }
        let value = self.norm(x);
        if value.is_infinite() {
            return Ok(NormValue::Infinite);
        }
        Ok(NormValue::Finite {
            value,
            exact: None,
            tolerance: self.norm_tolerance(),
        })
    }

    /// Exact evaluation for rational input.
    pub fn norm_eval_exact(&self, x: &[Rat]) -> Result<NormValue> {
        if x.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                expected: self.dim(),
                got: x.len(),
            });
        }
        match self.norm_exact(x) {
            Some(v) => Ok(NormValue::Finite {
                value: rat_to_f64(&v),
                exact: Some(v),
                tolerance: 0.0,
            }),
            None if matches!(self.spec(), NormSpec::VertexBall { ball: None, .. }) => {
                Ok(NormValue::Infinite)
            }
            None => {
                let xf: Vec<f64> = x.iter().map(rat_to_f64).collect();
                self.norm_eval(&xf)
            }
        }
    }

    /// Relative tolerance of [`NormedSpace::norm`] for this space.
    pub fn norm_tolerance(&self) -> f64 {
        match self.spec() {
            NormSpec::Quotient { host, .. } if self.polytope().is_none() => {
                QUOTIENT_TOL.max(host.norm_tolerance())
            }
            NormSpec::Pullback { host, .. } => host.norm_tolerance(),
            NormSpec::PSum { left, right, .. } => left.norm_tolerance().max(right.norm_tolerance()),
            _ if self.is_polyhedral() => 0.0,
            _ => LP_FLOAT_TOL,
        }
    }

    /// Dual norm of a functional given in the dual coordinates, when available in closed form.
    pub fn dual_norm(&self, f: &[f64]) -> Option<f64> {
        match self.spec() {
            NormSpec::Lp { p } => Some(lp_norm(f, conjugate(*p))),
            NormSpec::LpLq { p, q, k, .. } => {
                let blocks: Vec<f64> = f.chunks(*k).map(|b| lp_norm(b, conjugate(*q))).collect();
                Some(lp_norm(&blocks, conjugate(*p)))
            }
            NormSpec::PSum { p, left, right } => {
                let (a, b) = f.split_at(left.dim());
                Some(lp_norm(&[left.dual_norm(a)?, right.dual_norm(b)?], conjugate(*p)))
            }
            NormSpec::Quotient {
                host, projection, ..
            } => host.dual_norm(&projection.transpose().apply(f)),
            NormSpec::Pullback { host, map } if map.rows() == map.cols() && !host.is_polyhedral() => {
                // ‖φ‖_* = ‖M^{-T} φ‖_{host*}
                let inv = map.to_nalgebra().try_inverse()?;
                let g = inv.transpose() * nalgebra::DVector::from_column_slice(f);
                host.dual_norm(g.as_slice())
            }
            _ => self.polytope().map(|b| b.dual_gauge_f64(f)),
        }
    }

    /// `max_{‖x‖ ≤ 1} |x_j|`, an upper bound on the coordinate functional's norm.
    pub fn coordinate_bound(&self, j: usize) -> Option<f64> {
        let mut e = vec![0.0; self.dim()];
        e[j] = 1.0;
        self.dual_norm(&e)
    }

    /// Deterministic sample of unit vectors: polytope vertices when available,
    /// plus evenly spread directions.
    pub fn sphere_samples(&self, count: usize) -> Vec<Vec<f64>> {
        let d = self.dim();
        let mut out: Vec<Vec<f64>> = Vec::new();
        if d == 0 {
            return out;
        }
        if let Some(b) = self.polytope() {
            out.extend(b.vertices_f64().iter().cloned());
        }
        let dirs = spread_directions(d, count);
        for u in dirs {
            let n = self.norm(&u);
            if n.is_finite() && n > 0.0 {
                out.push(u.iter().map(|v| v / n).collect());
            }
        }
        out
    }

    /// Structural equality (same norm description up to polytope vertex order).
    pub fn same_as(&self, other: &NormedSpace) -> bool {
        if self.ptr_eq(other) {
            return true;
        }
        if self.dim() != other.dim() {
            return false;
        }
        match (self.spec(), other.spec()) {
            (NormSpec::Lp { p: a }, NormSpec::Lp { p: b }) => a == b || self.dim() <= 1,
            (
                NormSpec::LpLq { p, q, n, k },
                NormSpec::LpLq {
                    p: p2,
                    q: q2,
                    n: n2,
                    k: k2,
                },
            ) => p == p2 && q == q2 && n == n2 && k == k2,
            (
                NormSpec::Pullback { host, map },
                NormSpec::Pullback {
                    host: h2,
                    map: m2,
                },
            ) => host.same_as(h2) && map == m2,
            (
                NormSpec::PSum { p, left, right },
                NormSpec::PSum {
                    p: p2,
                    left: l2,
                    right: r2,
                },
            ) => p == p2 && left.same_as(l2) && right.same_as(r2),
            _ => match (self.polytope(), other.polytope()) {
                (Some(a), Some(b)) if self.is_polyhedral() && other.is_polyhedral() => a == b,
                _ => false,
            },
        }
    }
}

fn ann_or_empty(ann: &[Vec<Rat>], m: usize) -> Vec<Vec<Rat>> {
    if ann.is_empty() {
        vec![vec![Rat::zero(); m]]
    } else {
        ann.to_vec()
    }
}

fn degenerate_gauge_f64(vertices: &[Vec<Rat>], x: &[f64]) -> Option<f64> {
    let k = vertices.len();
    let mut lp = LinearProgram::<f64>::new(2 * k, vec![1.0; 2 * k]);
    for (i, xi) in x.iter().enumerate() {
        let mut row = vec![0.0; 2 * k];
        for (j, v) in vertices.iter().enumerate() {
            let vi = rat_to_f64(&v[i]);
            row[j] = vi;
            row[k + j] = -vi;
        }
        lp.add_eq(row, *xi);
    }
    for j in 0..2 * k {
        let mut row = vec![0.0; 2 * k];
        row[j] = -1.0;
        lp.add_le(row, 0.0);
    }
    match lp.solve() {
        LpOutcome::Optimal { value, .. } => Some(value.abs()),
        _ => None,
    }
}

/// Evenly spread directions in `ℝ^d` (deterministic).
pub fn spread_directions(d: usize, count: usize) -> Vec<Vec<f64>> {
    match d {
        0 => Vec::new(),
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..count.max(4))
            .map(|i| {
                let t = std::f64::consts::TAU * i as f64 / count.max(4) as f64;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            // Fibonacci sphere
            let n = count.max(8);
            let golden = std::f64::consts::PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|i| {
                    let z = 1.0 - 2.0 * (i as f64 + 0.5) / n as f64;
                    let r = (1.0 - z * z).sqrt();
                    let t = golden * i as f64;
                    vec![r * t.cos(), r * t.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_d1c5 ^ d as u64);
            let mut out: Vec<Vec<f64>> = Vec::new();
            for i in 0..d {
                let mut e = vec![0.0; d];
                e[i] = 1.0;
                out.push(e.clone());
                e[i] = -1.0;
                out.push(e);
            }
            while out.len() < count.max(2 * d) {
                let g: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
                out.push(g);
            }
            out
        }
    }
}

/// Rank of a family of rational vectors.
pub fn span_rank(vs: &[Vec<Rat>]) -> usize {
    if vs.is_empty() {
        0
    } else {
        rank(vs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};

    fn r(xs: &[i64]) -> Vec<Rat> {
        xs.iter().map(|&x| rat_int(x)).collect()
    }

    #[test]
    fn lp_examples() {
        let e = NormedSpace::lp(2.0, 2).unwrap();
        assert!((e.norm(&[3.0, 4.0]) - 5.0).abs() < 1e-15);
        let m = NormedSpace::lplq(1.0, f64::INFINITY, 2, 2).unwrap();
        let v = m.norm_eval(&[1.0, 2.0, 3.0, -1.0]).unwrap();
        assert_eq!(v.value(), 5.0);
        assert!(matches!(v, NormValue::Finite { exact: Some(_), .. }));
        let b = NormedSpace::vertex_ball(2, &[r(&[1, 0]), r(&[0, 1])]).unwrap();
        assert_eq!(b.norm_exact(&r(&[1, 1])).unwrap(), rat_int(2));
    }

    #[test]
    fn dimension_mismatch_and_degenerate_ball() {
        let e = NormedSpace::lp(1.0, 2).unwrap();
        assert!(matches!(
            e.norm_eval(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
        let line = NormedSpace::vertex_ball(2, &[r(&[1, 1])]).unwrap();
        assert_eq!(line.norm_eval(&[1.0, 0.0]).unwrap(), NormValue::Infinite);
        assert_eq!(line.norm_eval(&[2.0, 2.0]).unwrap().value(), 2.0);
        assert!(NormedSpace::lp(0.5, 2).is_err());
        assert!(NormedSpace::vertex_ball(2, &[]).is_err());
    }

    #[test]
    fn constructor_examples() {
        let s = NormedSpace::p_sum(
            &NormedSpace::lp(1.0, 2).unwrap(),
            &NormedSpace::lp(1.0, 3).unwrap(),
            1.0,
        )
        .unwrap();
        let l5 = NormedSpace::lp(1.0, 5).unwrap();
        let x = [1.0, -2.0, 0.5, 3.0, -0.25];
        assert_eq!(s.norm(&x), l5.norm(&x));
        let sub = NormedSpace::subspace(&NormedSpace::lp(f64::INFINITY, 2).unwrap(), &[r(&[1, 1])])
            .unwrap();
        assert_eq!(sub.norm_exact(&[rat(-3, 2)]).unwrap(), rat(3, 2));
        // oracle: min_s |1+s| + |s| = 1 and min_s max(|1+s|, |s|) = 1/2
        let oracle = |p: f64| {
            (0..=2000)
                .map(|i| {
                    let s = -2.0 + 0.002 * i as f64;
                    lp_norm(&[1.0 + s, -s], p)
                })
                .fold(f64::INFINITY, f64::min)
        };
        for (p, expected) in [(1.0, rat_int(1)), (f64::INFINITY, rat(1, 2))] {
            let q = NormedSpace::quotient(&NormedSpace::lp(p, 2).unwrap(), &[r(&[1, -1])]).unwrap();
            assert_eq!(q.dim(), 1);
            let class = q.quotient_projection().unwrap().apply_exact(&r(&[1, 0]));
            let v = q.norm_exact(&class).unwrap();
            assert_eq!(v, expected);
            assert!((rat_to_f64(&v) - oracle(p)).abs() < 1e-9);
        }
    }

    #[test]
    fn quotient_degenerate_cases() {
        let host = NormedSpace::lp(2.0, 2).unwrap();
        let full = NormedSpace::quotient(&host, &[r(&[1, 0]), r(&[0, 1])]).unwrap();
        assert_eq!(full.dim(), 0);
        let none = NormedSpace::quotient(&host, &[]).unwrap();
        assert_eq!(none.dim(), 2);
        let x = [0.3, -1.7];
        let y = none.quotient_projection().unwrap().apply(&x);
        assert!((none.norm(&y) - host.norm(&x)).abs() < 1e-12);
    }

    #[test]
    fn smooth_quotient_uses_convex_search() {
        // ℓ₂² / span(1,1): class of e₁ has norm 1/√2
        let q = NormedSpace::quotient(&NormedSpace::lp(2.0, 2).unwrap(), &[r(&[1, 1])]).unwrap();
        let y = q.quotient_projection().unwrap().apply(&[1.0, 0.0]);
        assert!((q.norm(&y) - 0.5f64.sqrt()).abs() < 1e-9);
        assert!(q.norm_tolerance() >= QUOTIENT_TOL);
    }

    #[test]
    fn dual_norms() {
        let e = NormedSpace::lp(1.0, 3).unwrap();
        assert_eq!(e.dual_norm(&[1.0, -3.0, 2.0]), Some(3.0));
        let v = NormedSpace::vertex_ball(2, &[r(&[1, 0]), r(&[0, 1])]).unwrap();
        assert_eq!(v.dual_norm(&[1.0, -3.0]), Some(3.0));
    }

    #[test]
    fn pullback_of_injective_map_is_polyhedral_norm() {
        let host = NormedSpace::lp(1.0, 3).unwrap();
        let a = Matrix::from_rows_rat(&[r(&[1, 0]), r(&[0, 1]), r(&[1, 1])]).unwrap();
        let s = NormedSpace::pullback(&host, a).unwrap();
        let p = s.polytope().unwrap();
        assert_eq!(p.gauge(&r(&[1, 1])), rat_int(4));
        let flat = NormedSpace::pullback(&host, Matrix::from_rows_rat(&[r(&[1, 1]), r(&[0, 0]), r(&[0, 0])]).unwrap()).unwrap();
        assert!(flat.polytope().is_none());
        assert_eq!(flat.norm(&[1.0, -1.0]), 0.0);
    }

    #[test]
    fn single_coordinate_blocks_are_polyhedral() {
        let cols = NormedSpace::lplq(1.0, 4.0, 2, 1).unwrap();
        let rows = NormedSpace::lplq(3.0, f64::INFINITY, 1, 2).unwrap();
        assert!(cols.is_polyhedral() && rows.is_polyhedral());
        assert_eq!(cols.norm_exact(&r(&[2, -3])), Some(rat_int(5)));
        assert_eq!(rows.norm_exact(&r(&[2, -3])), Some(rat_int(3)));
        assert_eq!(cols.polytope().unwrap().vertices().len(), 4);
        assert!(!NormedSpace::lplq(1.0, 4.0, 2, 2).unwrap().is_polyhedral());
    }
}
