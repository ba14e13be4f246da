//! Embedding defects, K-equivalence and the perturbation bound.

use nalgebra::DMatrix;
use num_traits::{One, Zero};

use super::opnorm::{coordinate_dual_norms, min_gain_of, operator_norm_of, Bound};
use crate::error::{Error, Result};
use crate::map::LinearMap;
use crate::matrix::Matrix;
use crate::rational::{rat_from_f64, rat_to_f64, Rat};
use crate::spaces::NormedSpace;

/// Declared tolerance for strict comparisons at the float layer.
pub const STRICT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Exactness {
    Exact,
    /// Certified relative tolerance of the underlying norm bounds.
    Tolerance(f64),
    /// Uncertified estimate with a declared tolerance.
    Estimate(f64),
}

/// A map with bounds on its defect `max(log ‖T‖, −log m(T))`.
#[derive(Debug, Clone)]
pub struct EmbeddingCertificate {
    pub map: LinearMap,
    pub norm: Bound,
    pub gain: Bound,
    /// Upper bound on `log ‖T‖`.
    pub upper: f64,
    /// Upper bound on `−log m(T)`.
    pub lower: f64,
    /// `max(upper, lower)`.
    pub defect: f64,
    /// Lower bound on the true defect.
    pub defect_lower: f64,
    pub exactness: Exactness,
}

impl EmbeddingCertificate {
    pub fn is_exact(&self) -> bool {
        self.exactness == Exactness::Exact
    }

    /// `T ∈ Emb_C`, judged on the certified upper bound.
    pub fn within(&self, c: f64) -> bool {
        self.defect <= c
    }

    /// Upper bound on `log(‖T‖ / m(T))`, the Banach–Mazur value of an onto map.
    pub fn distortion(&self) -> f64 {
        self.upper + self.lower
    }

    /// Exact `‖T‖ / m(T)` when both are rational and `m(T) > 0`.
    pub fn distortion_exact(&self) -> Option<Rat> {
        match (&self.norm.exact, &self.gain.exact) {
            (Some(n), Some(m)) if !m.is_zero() => Some(n / m),
            _ => None,
        }
    }

    /// Exact test `defect ≤ log k` for rational `k`.
    pub fn within_exp_exact(&self, k: &Rat) -> Option<bool> {
        let (n, m) = (self.norm.exact.as_ref()?, self.gain.exact.as_ref()?);
        Some(n <= k && m * k >= Rat::one())
    }
}

/// Defect certificate of `t`. A zero-dimensional domain has defect 0; a
/// non-injective map has defect `+∞`.
pub fn embedding_defect(t: &LinearMap) -> EmbeddingCertificate {
    let (e, f, m) = (t.domain(), t.codomain(), t.matrix());
    if e.dim() == 0 {
        let z = operator_norm_of(e, f, m);
        return EmbeddingCertificate {
            map: t.clone(),
            norm: z.clone(),
            gain: z,
            upper: 0.0,
            lower: 0.0,
            defect: 0.0,
            defect_lower: 0.0,
            exactness: Exactness::Exact,
        };
    }
    let norm = operator_norm_of(e, f, m);
    let gain = min_gain_of(e, f, m);
    certificate_from(t.clone(), norm, gain)
}

pub(crate) fn certificate_from(map: LinearMap, norm: Bound, gain: Bound) -> EmbeddingCertificate {
    let upper = norm.upper.ln();
    let lower = -gain.lower.ln();
    let defect = upper.max(lower);
    let defect_lower = norm.lower.ln().max(-gain.upper.ln()).min(defect);
    let exactness = if norm.exact.is_some() && gain.exact.is_some() {
        Exactness::Exact
    } else if !norm.certified || !gain.certified {
        Exactness::Estimate(norm.tolerance().max(gain.tolerance()))
    } else {
        Exactness::Tolerance(norm.tolerance().max(gain.tolerance()))
    };
    EmbeddingCertificate {
        map,
        norm,
        gain,
        upper,
        lower,
        defect,
        defect_lower,
        exactness,
    }
}

/// Outcome of a `(<K)`-equivalence test.
#[derive(Debug, Clone, PartialEq)]
pub struct KVerdict {
    pub equivalent: bool,
    /// The float-layer verdict fell within the declared tolerance of `log K`.
    pub boundary: bool,
    pub exact: bool,
    pub defect: f64,
}

/// Whether `x_i ↦ y_i` extends to a map `span(xs) → F` of defect `< log K`.
pub fn k_equivalent(
    e: &NormedSpace,
    xs: &[Vec<Rat>],
    f: &NormedSpace,
    ys: &[Vec<Rat>],
    k: f64,
) -> Result<KVerdict> {
    if k.is_nan() || k <= 1.0 {
        return Err(Error::param("K must exceed 1"));
    }
    if xs.len() != ys.len() {
        return Err(Error::DimensionMismatch {
            expected: xs.len(),
            got: ys.len(),
        });
    }
    let x = Matrix::from_cols_rat(e.dim(), xs)?;
    if x.rank() < xs.len() {
        return Err(Error::Dependent("xs".into()));
    }
    let span = NormedSpace::pullback(e, x)?;
    let y = Matrix::from_cols_rat(f.dim(), ys)?;
    let cert = embedding_defect(&LinearMap::new(&span, f, y)?);
    let kr = rat_from_f64(k)?;
    if let (Some(n), Some(g)) = (&cert.norm.exact, &cert.gain.exact) {
        // strict: ‖T‖ < K and m(T)·K > 1
        return Ok(KVerdict {
            equivalent: *n < kr && g * &kr > Rat::one(),
            boundary: false,
            exact: true,
            defect: cert.defect,
        });
    }
    let lk = k.ln();
    let (equivalent, boundary) = if cert.defect < lk - STRICT_TOL {
        (true, false)
    } else if cert.defect_lower > lk + STRICT_TOL {
        (false, false)
    } else {
        (cert.defect < lk, true)
    };
    Ok(KVerdict {
        equivalent,
        boundary,
        exact: false,
        defect: cert.defect,
    })
}

/// Quantitative perturbation estimate for a basis `e_i` of a subspace of `X`.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbationBound {
    /// `ε · Σ ‖f_i‖` with `f_i` the dual functionals of the basis on its span.
    pub delta: f64,
    pub delta_exact: Option<Rat>,
    /// `log((1 + δ) / (1 − δ))`.
    pub defect_bound: f64,
    /// `δ`, a bound on `‖T − Id‖`.
    pub opdiff_bound: f64,
    pub functional_norms: Vec<f64>,
}

impl PerturbationBound {
    /// `(1 + δ) / (1 − δ)` as a rational when `δ` is exact.
    pub fn ratio_exact(&self) -> Option<Rat> {
        let d = self.delta_exact.as_ref()?;
        Some((Rat::one() + d) / (Rat::one() - d))
    }
}

/// Norms of the coordinate functionals of `span(basis)` inside `x`, exact when
/// the span carries a polytope norm.
pub fn dual_functional_norms(x: &NormedSpace, basis: &[Vec<Rat>]) -> Result<(Vec<f64>, Option<Vec<Rat>>)> {
    let b = Matrix::from_cols_rat(x.dim(), basis)?;
    if b.rank() < basis.len() {
        return Err(Error::Dependent("basis".into()));
    }
    let n = basis.len();
    let span = NormedSpace::pullback(x, b.clone())?;
    if let Some(p) = span.polytope() {
        let exact: Vec<Rat> = (0..n)
            .map(|i| {
                let mut e = vec![Rat::zero(); n];
                e[i] = Rat::one();
                p.dual_gauge(&e)
            })
            .collect();
        return Ok((exact.iter().map(rat_to_f64).collect(), Some(exact)));
    }
    if x.is_hilbert() {
        let bm = b.to_nalgebra();
        let gram: DMatrix<f64> = bm.transpose() * &bm;
        let inv = gram
            .try_inverse()
            .ok_or_else(|| Error::Dependent("basis".into()))?;
        return Ok(((0..n).map(|i| inv[(i, i)].sqrt() * (1.0 + 1e-12)).collect(), None));
    }
    Ok((coordinate_dual_norms(&span), None))
}

pub fn perturbation_bound(x: &NormedSpace, basis: &[Vec<Rat>], eps: f64) -> Result<PerturbationBound> {
    if eps.is_nan() || eps < 0.0 {
        return Err(Error::param("epsilon must be nonnegative"));
    }
    let (norms, exact) = dual_functional_norms(x, basis)?;
    let delta_exact = match exact {
        Some(ns) => {
            let e = rat_from_f64(eps)?;
            Some(ns.iter().fold(Rat::zero(), |a, v| a + v) * e)
        }
        None => None,
    };
    let delta = match &delta_exact {
        Some(d) => rat_to_f64(d),
        None => eps * norms.iter().sum::<f64>(),
    };
    let too_big = match &delta_exact {
        Some(d) => *d >= Rat::one(),
        None => delta >= 1.0,
    };
    if too_big {
        return Err(Error::Validity(format!(
            "delta = {delta} must be below 1 for the perturbation estimate"
        )));
    }
    Ok(PerturbationBound {
        delta,
        delta_exact,
        defect_bound: ((1.0 + delta) / (1.0 - delta)).ln(),
        opdiff_bound: delta,
        functional_norms: norms,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int};

    fn sp(p: f64, n: usize) -> NormedSpace {
        NormedSpace::lp(p, n).unwrap()
    }

    fn r(xs: &[i64]) -> Vec<Rat> {
        xs.iter().map(|&x| rat_int(x)).collect()
    }

    fn map(e: &NormedSpace, f: &NormedSpace, rows: &[&[i64]]) -> LinearMap {
        let rows: Vec<Vec<Rat>> = rows.iter().map(|x| r(x)).collect();
        LinearMap::new(e, f, Matrix::from_rows_rat(&rows).unwrap()).unwrap()
    }

    #[test]
    fn defect_examples() {
        let c = embedding_defect(&map(&sp(1.0, 2), &sp(f64::INFINITY, 2), &[&[1, 1], &[1, -1]]));
        assert_eq!(c.defect, 0.0);
        assert!(c.is_exact());
        let c = embedding_defect(&map(&sp(2.0, 2), &sp(2.0, 2), &[&[2, 0], &[0, 2]]));
        assert!((c.defect - 2f64.ln()).abs() < 1e-11);
        let c = embedding_defect(&LinearMap::new(&sp(1.0, 2), &sp(2.0, 2), Matrix::identity(2)).unwrap());
        assert!((c.defect - 0.5f64.sqrt().recip().ln()).abs() < 1e-9, "{}", c.defect);
        let z = embedding_defect(&LinearMap::zero(&sp(1.0, 2), &sp(1.0, 2)));
        assert_eq!(z.defect, f64::INFINITY);
    }

    #[test]
    fn k_equivalence_examples() {
        let xs = vec![r(&[1, 0]), r(&[0, 1])];
        let v = k_equivalent(&sp(1.0, 2), &xs, &sp(1.0, 2), &xs, 1.0001).unwrap();
        assert!(v.equivalent && v.exact);
        // oracle: ‖Id: ℓ₁² → ℓ∞²‖ = 1 and m = 1/2, so the defect is exactly log 2
        let v = k_equivalent(&sp(1.0, 2), &xs, &sp(f64::INFINITY, 2), &xs, 2.0).unwrap();
        assert!(!v.equivalent && v.exact);
        assert!((v.defect - 2f64.ln()).abs() < 1e-15);
        let v = k_equivalent(&sp(2.0, 1), &[r(&[3])], &sp(2.0, 1), &[r(&[1])], 2.0).unwrap();
        assert!(!v.equivalent);
        assert!(matches!(
            k_equivalent(&sp(1.0, 2), &[r(&[1, 1]), r(&[2, 2])], &sp(1.0, 2), &xs, 2.0),
            Err(Error::Dependent(_))
        ));
    }

    #[test]
    fn perturbation_examples() {
        let b = perturbation_bound(&sp(2.0, 2), &[r(&[1, 0]), r(&[0, 1])], 0.0).unwrap();
        assert_eq!((b.delta, b.defect_bound), (0.0, 0.0));
        let b = perturbation_bound(&sp(2.0, 2), &[r(&[1, 0]), r(&[0, 1])], 0.1).unwrap();
        assert!((b.delta - 0.2).abs() < 1e-11);
        assert!((b.defect_bound - 1.5f64.ln()).abs() < 1e-10);
        let b = perturbation_bound(&sp(2.0, 1), &[r(&[1])], 0.3).unwrap();
        let x1 = LinearMap::new(
            &NormedSpace::pullback(&sp(2.0, 1), Matrix::identity(1)).unwrap(),
            &sp(2.0, 1),
            Matrix::from_rows_rat(&[vec![rat(5, 4)]]).unwrap(),
        )
        .unwrap();
        let measured = embedding_defect(&x1).defect;
        assert!((measured - 1.25f64.ln()).abs() < 1e-10);
        assert!(measured <= b.defect_bound);
        assert!((b.defect_bound - (1.3f64 / 0.7).ln()).abs() < 1e-12);
        assert!(matches!(
            perturbation_bound(&sp(1.0, 2), &[r(&[1, 0]), r(&[0, 1])], 0.5),
            Err(Error::Validity(_))
        ));
    }
}
