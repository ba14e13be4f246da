//! Host reflection, pushout and Hilbert amalgams, and the complemented copies of
//! ℓ_p^n and ℓ_q^k inside ℓ_p^n(ℓ_q^k).

use num_traits::{One, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::map::LinearMap;
use crate::matrix::Matrix;
use crate::metrics::opnorm::operator_norm_of;
use crate::metrics::{embedding_defect, EmbeddingCertificate};
use crate::rational::{rat, rat_int, rank, Rat};
use crate::spaces::{NormSpec, NormedSpace};

/// Isometry tolerance for the inputs of [`hilbert_amalgam`].
pub const HILBERT_ISOMETRY_TOL: f64 = 1e-9;

/// `G ⊇ E` as its first `dim E` coordinates, with `ψ : G → F` onto.
#[derive(Debug, Clone)]
pub struct Reflection {
    pub g: NormedSpace,
    pub psi: LinearMap,
}

/// Extends `φ : E → F` to an onto map `ψ : G → F` by adjoining coordinate
/// vectors of `F` outside the range of `φ`; `G` carries the pulled-back
/// (pseudo)norm, so `ψ` is an isometry. It is a norm iff `φ` is injective.
pub fn host_reflection(phi: &LinearMap) -> Result<Reflection> {
    let f = phi.codomain();
    let (n, d) = (f.dim(), phi.domain().dim());
    let mut cols: Vec<Vec<Rat>> = (0..d).map(|j| phi.matrix().exact_col(j)).collect();
    let mut r = rank(&cols);
    for i in 0..n {
        if r == n {
            break;
        }
        let mut e = vec![Rat::zero(); n];
        e[i] = Rat::one();
        cols.push(e);
        let r2 = rank(&cols);
        if r2 > r {
            r = r2;
        } else {
            cols.pop();
        }
    }
    // floats convert exactly to dyadic rationals
    let m = Matrix::from_cols_rat(n, &cols)?;
    let g = NormedSpace::pullback(f, m.clone())?;
    let psi = LinearMap::new(&g, f, m)?;
    Ok(Reflection { g, psi })
}

/// Amalgam of `ψ_G ∘ φ` and `ψ_H ∘ φ` in a common space `K`.
#[derive(Debug, Clone)]
pub struct AmalgamResult {
    pub k: NormedSpace,
    pub iota_g: LinearMap,
    pub iota_h: LinearMap,
    /// `‖ι_G ψ_G φ − ι_H ψ_H φ‖`.
    pub discrepancy: f64,
    pub discrepancy_exact: Option<Rat>,
    pub iota_g_cert: EmbeddingCertificate,
    pub iota_h_cert: EmbeddingCertificate,
}

impl AmalgamResult {
    pub fn iota_defects(&self) -> (f64, f64) {
        (self.iota_g_cert.defect, self.iota_h_cert.defect)
    }

    /// Both inclusions isometric and the square commutes, in exact arithmetic.
    pub fn is_exact_isometric(&self) -> bool {
        self.discrepancy_exact.as_ref().is_some_and(|d| d.is_zero())
            && [&self.iota_g_cert, &self.iota_h_cert]
                .iter()
                .all(|c| c.norm.exact.as_ref().is_some_and(|v| v.is_one()) && c.gain.exact.as_ref().is_some_and(|v| v.is_one()))
    }
}

fn check_chain(phi: &LinearMap, psi_g: &LinearMap, psi_h: &LinearMap) -> Result<()> {
    for (name, psi) in [("ψ_G", psi_g), ("ψ_H", psi_h)] {
        if psi.domain().dim() != phi.codomain().dim() {
            return Err(Error::param(format!(
                "{name} has domain dimension {}, φ has codomain dimension {}",
                psi.domain().dim(),
                phi.codomain().dim()
            )));
        }
    }
    Ok(())
}

fn finish(
    phi: &LinearMap,
    psi_g: &LinearMap,
    psi_h: &LinearMap,
    k: NormedSpace,
    ig: Matrix,
    ih: Matrix,
) -> Result<AmalgamResult> {
    let iota_g = LinearMap::new(psi_g.codomain(), &k, ig)?;
    let iota_h = LinearMap::new(psi_h.codomain(), &k, ih)?;
    let a = iota_g.compose(psi_g)?.compose(phi)?;
    let b = iota_h.compose(psi_h)?.compose(phi)?;
    let diff = a.difference(&b)?;
    let bound = operator_norm_of(diff.domain(), diff.codomain(), diff.matrix());
    let discrepancy_exact = if diff.matrix().is_exact() && diff.matrix().is_zero() {
        Some(Rat::zero())
    } else {
        bound.exact.clone()
    };
    Ok(AmalgamResult {
        iota_g_cert: embedding_defect(&iota_g),
        iota_h_cert: embedding_defect(&iota_h),
        k,
        iota_g,
        iota_h,
        discrepancy: bound.upper,
        discrepancy_exact,
    })
}

/// `K = (G ⊕₁ H) / {(ψ_G f, −ψ_H f)}` with the two canonical maps. For `F = {0}`
/// this is `G ⊕₁ H` itself.
pub fn pushout_amalgam(phi: &LinearMap, psi_g: &LinearMap, psi_h: &LinearMap) -> Result<AmalgamResult> {
    check_chain(phi, psi_g, psi_h)?;
    let (g, h) = (psi_g.codomain(), psi_h.codomain());
    let (dg, dh, df) = (g.dim(), h.dim(), phi.codomain().dim());
    let sum = NormedSpace::p_sum(g, h, 1.0)?;
    let inj_g = Matrix::identity(dg).vstack(&Matrix::zeros(dh, dg))?;
    let inj_h = Matrix::zeros(dg, dh).vstack(&Matrix::identity(dh))?;
    if df == 0 {
        return finish(phi, psi_g, psi_h, sum, inj_g, inj_h);
    }
    let neg = psi_h.matrix().scale_rat(&rat_int(-1));
    let delta = psi_g.matrix().vstack(&neg)?;
    let kernel: Vec<Vec<Rat>> = (0..df).map(|j| delta.exact_col(j)).collect();
    let k = NormedSpace::quotient(&sum, &kernel)?;
    let proj = k.quotient_projection().expect("quotient").clone();
    let ig = proj.mul(&inj_g)?;
    let ih = proj.mul(&inj_h)?;
    finish(phi, psi_g, psi_h, k, ig, ih)
}

/// Orthonormal completion of the columns of `a` (assumed orthonormal) in ℝ^n.
fn complement(a: &Matrix) -> Vec<Vec<f64>> {
    let n = a.rows();
    let mut basis: Vec<Vec<f64>> = (0..a.cols()).map(|j| a.col_f64(j)).collect();
    let mut extra = Vec::new();
    for i in 0..n {
        if basis.len() == n {
            break;
        }
        let mut v = vec![0.0; n];
        v[i] = 1.0;
        // two passes of Gram–Schmidt for stability
        for _ in 0..2 {
            for b in &basis {
                let c: f64 = v.iter().zip(b).map(|(x, y)| x * y).sum();
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-8 {
            let u: Vec<f64> = v.iter().map(|x| x / norm).collect();
            basis.push(u.clone());
            extra.push(u);
        }
    }
    extra
}

fn require_hilbert(s: &NormedSpace, name: &str) -> Result<()> {
    match s.spec() {
        NormSpec::Lp { p } if *p == 2.0 => Ok(()),
        _ => Err(Error::param(format!("{name} is not a Euclidean ℓ₂^n space"))),
    }
}

/// Amalgam of Euclidean spaces: the copies of `ψ(F)` are identified and the
/// orthogonal complements glued orthogonally, so `K = ℓ₂^{f + (g−f) + (h−f)}`.
pub fn hilbert_amalgam(phi: &LinearMap, psi_g: &LinearMap, psi_h: &LinearMap) -> Result<AmalgamResult> {
    check_chain(phi, psi_g, psi_h)?;
    for (s, name) in [
        (phi.domain(), "E"),
        (phi.codomain(), "F"),
        (psi_g.codomain(), "G"),
        (psi_h.codomain(), "H"),
    ] {
        require_hilbert(s, name)?;
    }
    for (psi, name) in [(psi_g, "ψ_G"), (psi_h, "ψ_H")] {
        let c = embedding_defect(psi);
        if c.defect > HILBERT_ISOMETRY_TOL {
            return Err(Error::param(format!("{name} is not isometric (defect {:.3e})", c.defect)));
        }
    }
    let (dg, dh, df) = (psi_g.codomain().dim(), psi_h.codomain().dim(), phi.codomain().dim());
    let cg = complement(psi_g.matrix());
    let ch = complement(psi_h.matrix());
    let dk = df + cg.len() + ch.len();
    let k = NormedSpace::lp(2.0, dk)?;
    let build = |psi: &Matrix, comp: &[Vec<f64>], offset: usize, cols: usize| -> Result<Matrix> {
        let mut data = vec![0.0; dk * cols];
        for j in 0..cols {
            for i in 0..df {
                data[i * cols + j] = psi.get(j, i);
            }
            for (r, v) in comp.iter().enumerate() {
                data[(offset + r) * cols + j] = v[j];
            }
        }
        Matrix::from_f64(dk, cols, data)
    };
    let ig = build(psi_g.matrix(), &cg, df, dg)?;
    let ih = build(psi_h.matrix(), &ch, df + cg.len(), dh)?;
    finish(phi, psi_g, psi_h, k, ig, ih)
}

/// The four maps `J_p, Q_p, J_q, Q_q` on `ℓ_p^n(ℓ_q^k)` with measurements.
#[derive(Debug, Clone)]
pub struct Complemented {
    pub j_p: LinearMap,
    pub q_p: LinearMap,
    pub j_q: LinearMap,
    pub q_q: LinearMap,
    /// Largest `|log(‖Jx‖/‖x‖)|` over the sample.
    pub j_p_defect: f64,
    pub j_q_defect: f64,
    /// `max |Q∘J − Id|` entrywise; zero in exact arithmetic when available.
    pub qj_p_error: f64,
    pub qj_q_error: f64,
    pub qj_exact: bool,
    /// Largest `‖JQx‖/‖x‖` over the sample.
    pub jq_p_norm: f64,
    pub jq_q_norm: f64,
    pub samples: usize,
}

/// `base^{-r}` for `r ∈ [0, 1]`, exact when `r ∈ {0, 1}` or `base = 1`.
fn inv_root(base: usize, r: f64) -> (f64, Option<Rat>) {
    let x = (base as f64).powf(-r);
    let exact = if base == 1 || r == 0.0 {
        Some(Rat::one())
    } else if r == 1.0 {
        Some(rat(1, base as i64))
    } else {
        None
    };
    (x, exact)
}

fn make_matrix(rows: usize, cols: usize, f: impl Fn(usize, usize) -> (f64, Option<Rat>)) -> Result<Matrix> {
    let cells: Vec<(f64, Option<Rat>)> = (0..rows * cols).map(|i| f(i / cols, i % cols)).collect();
    if cells.iter().all(|c| c.1.is_some()) {
        Matrix::from_rat(rows, cols, cells.into_iter().map(|c| c.1.expect("exact")).collect())
    } else {
        Matrix::from_f64(rows, cols, cells.into_iter().map(|c| c.0).collect())
    }
}

fn zero_cell() -> (f64, Option<Rat>) {
    (0.0, Some(Rat::zero()))
}

/// [`lplq_with`] with 10⁴ samples.
pub fn lplq_complemented(p: f64, q: f64, n: usize, k: usize) -> Result<Complemented> {
    lplq_with(p, q, n, k, 10_000, 0x5eed)
}

pub fn lplq_with(p: f64, q: f64, n: usize, k: usize, samples: usize, seed: u64) -> Result<Complemented> {
    let x = NormedSpace::lplq(p, q, n, k)?;
    let lpn = NormedSpace::lp(p, n)?;
    let lqk = NormedSpace::lp(q, k)?;
    let u = inv_root(k, 1.0 / q);
    let u_star = inv_root(k, 1.0 - 1.0 / q);
    let v = inv_root(n, 1.0 / p);
    let v_star = inv_root(n, 1.0 - 1.0 / p);
    let j_p = make_matrix(n * k, n, |r, c| if r / k == c { u.clone() } else { zero_cell() })?;
    let q_p = make_matrix(n, n * k, |r, c| if c / k == r { u_star.clone() } else { zero_cell() })?;
    let j_q = make_matrix(n * k, k, |r, c| if r % k == c { v.clone() } else { zero_cell() })?;
    let q_q = make_matrix(k, n * k, |r, c| if c % k == r { v_star.clone() } else { zero_cell() })?;
    let j_p = LinearMap::new(&lpn, &x, j_p)?;
    let q_p = LinearMap::new(&x, &lpn, q_p)?;
    let j_q = LinearMap::new(&lqk, &x, j_q)?;
    let q_q = LinearMap::new(&x, &lqk, q_q)?;
    let qj_p = q_p.compose(&j_p)?;
    let qj_q = q_q.compose(&j_q)?;
    let qj_exact = qj_p.matrix().is_exact() && qj_q.matrix().is_exact();
    let err = |m: &LinearMap| m.matrix().max_abs_diff(&Matrix::identity(m.matrix().rows()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut gauss = |d: usize| -> Vec<f64> { (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect() };
    let defect_of = |j: &LinearMap, xs: &[Vec<f64>]| {
        xs.iter()
            .filter(|x| j.domain().norm(x) > 0.0)
            .map(|x| (j.codomain().norm(&j.apply(x)) / j.domain().norm(x)).ln().abs())
            .fold(0.0, f64::max)
    };
    let basis = |d: usize| -> Vec<Vec<f64>> {
        (0..d)
            .map(|i| {
                let mut e = vec![0.0; d];
                e[i] = 1.0;
                e
            })
            .collect()
    };
    let mut xs_p = basis(n);
    let mut xs_q = basis(k);
    let mut xs = basis(n * k);
    for _ in 0..samples {
        xs_p.push(gauss(n));
        xs_q.push(gauss(k));
        xs.push(gauss(n * k));
    }
    let jq_p = j_p.compose(&q_p)?;
    let jq_q = j_q.compose(&q_q)?;
    let ratio = |m: &LinearMap| {
        xs.iter()
            .map(|y| x.norm(&m.apply(y)) / x.norm(y))
            .fold(0.0, f64::max)
    };
    Ok(Complemented {
        j_p_defect: defect_of(&j_p, &xs_p),
        j_q_defect: defect_of(&j_q, &xs_q),
        qj_p_error: err(&qj_p),
        qj_q_error: err(&qj_q),
        qj_exact,
        jq_p_norm: ratio(&jq_p),
        jq_q_norm: ratio(&jq_q),
        samples,
        j_p,
        q_p,
        j_q,
        q_q,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spaces::lp_norm;

    fn sp(p: f64, n: usize) -> NormedSpace {
        NormedSpace::lp(p, n).unwrap()
    }

    fn map(e: &NormedSpace, f: &NormedSpace, rows: &[&[i64]]) -> LinearMap {
        let r: Vec<Vec<Rat>> = rows.iter().map(|r| r.iter().map(|&x| rat_int(x)).collect()).collect();
        LinearMap::new(e, f, Matrix::from_rows_rat(&r).unwrap()).unwrap()
    }

    #[test]
    fn reflection_examples() {
        let e = sp(1.0, 2);
        let r = host_reflection(&LinearMap::identity(&e)).unwrap();
        assert_eq!(r.g.dim(), 2);
        assert_eq!(r.psi.matrix().exact_data(), Matrix::identity(2).exact_data());
        for x in [[1.0, -2.0], [0.5, 0.25]] {
            assert_eq!(r.g.norm(&x), e.norm(&x));
        }

        let inc = map(&sp(2.0, 1), &sp(2.0, 2), &[&[1], &[0]]);
        let r = host_reflection(&inc).unwrap();
        assert_eq!(r.g.dim(), 2);
        let c = embedding_defect(&r.psi);
        assert!(c.defect.abs() < 1e-9 && r.psi.rank() == 2);

        let zero = map(&sp(1.0, 1), &sp(1.0, 1), &[&[0]]);
        let r = host_reflection(&zero).unwrap();
        assert_eq!(r.g.dim(), 2);
        assert_eq!(r.g.norm(&[3.0, 0.0]), 0.0);
        assert_eq!(r.g.norm(&[0.0, 2.0]), 2.0);
    }

    #[test]
    fn pushout_over_zero_is_l1_sum() {
        let z = NormedSpace::lp(1.0, 0).unwrap();
        let g = sp(2.0, 2);
        let h = sp(1.0, 1);
        let a = pushout_amalgam(&LinearMap::identity(&z), &LinearMap::zero(&z, &g), &LinearMap::zero(&z, &h)).unwrap();
        assert_eq!(a.k.dim(), 3);
        assert_eq!(a.discrepancy, 0.0);
        let x = [3.0, 4.0, -2.0];
        assert!((a.k.norm(&x) - 7.0).abs() < 1e-12);
        assert!(a.iota_defects().0.abs() < 1e-9 && a.iota_defects().1.abs() < 1e-9);
    }

    #[test]
    fn pushout_of_identities_is_isometric_copy() {
        let f = NormedSpace::vertex_ball(2, &[vec![rat(1, 1), rat(0, 1)], vec![rat(1, 2), rat(1, 1)]]).unwrap();
        let id = LinearMap::identity(&f);
        let a = pushout_amalgam(&id, &id, &id).unwrap();
        assert!(a.is_exact_isometric());
        assert_eq!(a.k.dim(), 2);
        // oracle: the class of (f, 0) has norm ‖f‖ (LP over translates)
        let lift = a.iota_g.matrix();
        assert_eq!(lift.exact_data(), a.iota_h.matrix().exact_data());
    }

    #[test]
    fn perturbed_pushout_measured() {
        let line = sp(1.0, 1);
        let g = sp(1.0, 2);
        let psi_g = map(&line, &g, &[&[1], &[0]]);
        let psi_h = LinearMap::new(&line, &g, Matrix::from_rows_rat(&[vec![rat(11, 10)], vec![rat(0, 1)]]).unwrap()).unwrap();
        let a = pushout_amalgam(&LinearMap::identity(&line), &psi_g, &psi_h).unwrap();
        let (dg, dh) = a.iota_defects();
        assert!(dg <= 0.1 + 1e-9 && dh <= 0.1 + 1e-9, "{dg} {dh}");
        // hand computation: ι_G isometric, ι_H has gain 1/1.1
        assert!(dg.abs() < 1e-12);
        assert!((dh - 1.1f64.ln()).abs() < 1e-12);
        assert_eq!(a.discrepancy_exact, Some(Rat::zero()));
    }

    #[test]
    fn hilbert_examples() {
        let line = sp(2.0, 1);
        let plane = sp(2.0, 2);
        let s = std::f64::consts::FRAC_1_SQRT_2;
        let psi_g = map(&line, &plane, &[&[1], &[0]]);
        let psi_h = LinearMap::new(&line, &plane, Matrix::from_f64(2, 1, vec![s, s]).unwrap()).unwrap();
        let a = hilbert_amalgam(&LinearMap::identity(&line), &psi_g, &psi_h).unwrap();
        assert_eq!(a.k.dim(), 3);
        assert!(a.discrepancy <= 1e-12);
        // oracle: inner products of images
        let ig = a.iota_g.matrix();
        let ih = a.iota_h.matrix();
        let gram = |m: &Matrix| m.transpose().mul(m).unwrap();
        assert!(gram(ig).max_abs_diff(&Matrix::identity(2)) < 1e-12);
        assert!(gram(ih).max_abs_diff(&Matrix::identity(2)) < 1e-12);
        assert!(hilbert_amalgam(&LinearMap::identity(&line), &psi_g, &psi_h.scaled(&rat(2, 1))).is_err());
        assert!(hilbert_amalgam(&LinearMap::identity(&sp(1.0, 1)), &psi_g, &psi_h).is_err());
    }

    #[test]
    fn lplq_examples() {
        let c = lplq_complemented(1.5, 3.0, 1, 1).unwrap();
        for m in [&c.j_p, &c.q_p, &c.j_q, &c.q_q] {
            assert!(m.matrix().max_abs_diff(&Matrix::identity(1)) < 1e-15);
        }
        let c = lplq_complemented(1.0, 2.0, 2, 2).unwrap();
        assert!(c.qj_p_error < 1e-12 && c.qj_q_error == 0.0);
        assert!(c.jq_p_norm <= 1.0 + 1e-6 && c.jq_q_norm <= 1.0 + 1e-6);
        assert!(c.j_p_defect <= 1e-12 && c.j_q_defect <= 1e-12);
        let c = lplq_complemented(1.0, 1.0, 2, 3).unwrap();
        assert!(c.qj_exact && c.qj_p_error == 0.0);
        let u: Vec<f64> = c.j_p.matrix().col_f64(0);
        assert!((lp_norm(&u, 1.0) - 1.0).abs() < 1e-15);
    }
}
