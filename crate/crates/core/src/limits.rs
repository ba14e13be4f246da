//! Finite prefixes of directed systems `E_1 → E_2 → …` with summable defects.
//!
//! Stages are numbered from 1: `f_n : E_n → E_{n+1}` has defect at most `ε_n`,
//! and `r_n = Σ_{j ≥ n} ε_j` bounds the defect of `f_{n,∞}`.

use crate::error::{Error, Result};
use crate::map::LinearMap;
use crate::metrics::{embedding_defect, EmbeddingCertificate};
use crate::spaces::NormedSpace;

/// Slack allowed when checking a declared defect against its certificate.
pub const INSERT_TOL: f64 = 1e-9;

/// What the producer promises about the defects beyond the stored prefix.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tail {
    /// Nothing is known; limit queries are refused.
    Unknown,
    /// The system stops: all later maps are identities.
    Finite,
    /// Later defects satisfy `ε_{j+1} ≤ ratio · ε_j`, `ratio < 1`.
    Geometric { ratio: f64 },
    /// Explicit bound on the sum of all defects after the prefix.
    Beyond(f64),
}

#[derive(Debug, Clone)]
pub struct LimitSystem {
    spaces: Vec<NormedSpace>,
    maps: Vec<LinearMap>,
    defects: Vec<f64>,
    tail: Tail,
}

/// `[lo, hi]` containing the limit norm of a vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Bracket {
    pub lo: f64,
    pub hi: f64,
    /// `‖f_{n,k} x‖`.
    pub value: f64,
    /// `r_k`.
    pub tail: f64,
}

impl Bracket {
    pub fn contains(&self, v: f64) -> bool {
        self.lo <= v && v <= self.hi
    }
}

#[derive(Debug, Clone)]
pub struct CompositionCheck {
    pub map: LinearMap,
    pub certificate: EmbeddingCertificate,
    /// `Σ_{j=n}^{k−1} ε_j`.
    pub bound: f64,
}

impl CompositionCheck {
    pub fn holds(&self) -> bool {
        self.certificate.defect <= self.bound + INSERT_TOL
    }
}

/// A stage space standing in for the limit.
#[derive(Debug, Clone)]
pub struct Finalized {
    pub space: NormedSpace,
    pub stage: usize,
    /// Bound on `d_BM(E_m, lim)`: `2 r_m`.
    pub certificate: f64,
}

impl LimitSystem {
    pub fn new(first: NormedSpace) -> Self {
        LimitSystem {
            spaces: vec![first],
            maps: Vec::new(),
            defects: Vec::new(),
            tail: Tail::Unknown,
        }
    }

    pub fn with_tail(mut self, tail: Tail) -> Self {
        self.tail = tail;
        self
    }

    pub fn set_tail(&mut self, tail: Tail) -> Result<()> {
        if let Tail::Geometric { ratio } = tail {
            if !(0.0..1.0).contains(&ratio) {
                return Err(Error::param("geometric tail ratio must lie in [0, 1)"));
            }
        }
        if let Tail::Beyond(b) = tail {
            if !(b >= 0.0) || !b.is_finite() {
                return Err(Error::param("tail bound must be finite and nonnegative"));
            }
        }
        self.tail = tail;
        Ok(())
    }

    pub fn tail_kind(&self) -> Tail {
        self.tail
    }

    /// Appends `f_n : E_n → E_{n+1}` after checking its certified defect is at most `epsilon`.
    pub fn push(&mut self, map: LinearMap, epsilon: f64) -> Result<EmbeddingCertificate> {
        let last = self.spaces.last().expect("nonempty");
        if map.domain().dim() != last.dim() {
            return Err(Error::DimensionMismatch {
                expected: last.dim(),
                got: map.domain().dim(),
            });
        }
        if !(epsilon >= 0.0) || !epsilon.is_finite() {
            return Err(Error::param("defects must be finite and nonnegative"));
        }
        let map = map.with_spaces(last, map.codomain())?;
        let cert = embedding_defect(&map);
        if cert.defect > epsilon + INSERT_TOL {
            return Err(Error::Validity(format!(
                "map {} has defect {:.6e} above the declared {:.6e}",
                self.maps.len() + 1,
                cert.defect,
                epsilon
            )));
        }
        self.spaces.push(map.codomain().clone());
        self.maps.push(map);
        self.defects.push(epsilon);
        Ok(cert)
    }

    /// Number of stored spaces.
    pub fn len(&self) -> usize {
        self.spaces.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// `E_n`, `1 ≤ n ≤ len`.
    pub fn space(&self, n: usize) -> Result<&NormedSpace> {
        self.check(n)?;
        Ok(&self.spaces[n - 1])
    }

    /// `f_n`, `1 ≤ n < len`.
    pub fn map(&self, n: usize) -> Result<&LinearMap> {
        if n == 0 || n >= self.spaces.len() {
            return Err(Error::Index(format!("no map f_{n} in a prefix of {} spaces", self.len())));
        }
        Ok(&self.maps[n - 1])
    }

    pub fn defects(&self) -> &[f64] {
        &self.defects
    }

    fn check(&self, n: usize) -> Result<()> {
        if n == 0 || n > self.spaces.len() {
            return Err(Error::Index(format!("stage {n} outside 1..={}", self.len())));
        }
        Ok(())
    }

    /// `Σ_{j=n}^{k−1} ε_j`.
    pub fn partial_sum(&self, n: usize, k: usize) -> f64 {
        self.defects[n - 1..k - 1].iter().sum()
    }

    /// `r_n = Σ_{j ≥ n} ε_j`, using the declared tail beyond the prefix.
    pub fn tail(&self, n: usize) -> Result<f64> {
        self.check(n)?;
        let stored = self.partial_sum(n, self.len());
        let beyond = match self.tail {
            Tail::Unknown => return Err(Error::Refused("the tail of the system is unknown".into())),
            Tail::Finite => 0.0,
            Tail::Beyond(b) => b,
            Tail::Geometric { ratio } => self.defects.last().map_or(0.0, |e| e * ratio / (1.0 - ratio)),
        };
        Ok(stored + beyond)
    }

    /// `f_{n,k} = f_{k−1} ∘ … ∘ f_n`, with `f_{n,n} = Id`.
    pub fn compose(&self, n: usize, k: usize) -> Result<LinearMap> {
        self.check(n)?;
        self.check(k)?;
        if n > k {
            return Err(Error::Index(format!("cannot compose from stage {n} back to {k}")));
        }
        let mut acc = LinearMap::identity(&self.spaces[n - 1]);
        for f in &self.maps[n - 1..k - 1] {
            acc = f.compose(&acc)?;
        }
        Ok(acc)
    }

    /// `f_{n,k}` with its measured defect and the bound `Σ_{j=n}^{k−1} ε_j`.
    pub fn compose_checked(&self, n: usize, k: usize) -> Result<CompositionCheck> {
        let map = self.compose(n, k)?;
        let certificate = embedding_defect(&map);
        Ok(CompositionCheck {
            map,
            certificate,
            bound: self.partial_sum(n, k),
        })
    }

    /// Bracket on `‖f_{n,∞} x‖` from stage `k`: `e^{∓r_k} ‖f_{n,k} x‖`.
    pub fn limit_norm(&self, n: usize, x: &[f64], k: usize) -> Result<Bracket> {
        self.check(n)?;
        if x.len() != self.spaces[n - 1].dim() {
            return Err(Error::DimensionMismatch {
                expected: self.spaces[n - 1].dim(),
                got: x.len(),
            });
        }
        let tail = self.tail(k)?;
        let f = self.compose(n, k)?;
        let value = self.spaces[k - 1].norm(&f.apply(x));
        Ok(Bracket {
            lo: (-tail).exp() * value,
            hi: tail.exp() * value,
            value,
            tail,
        })
    }

    /// `‖f_{n,k} x − f_{m,k} y‖`: the images agree up to stage `k` within this
    /// distance. Equality in the limit is never asserted.
    pub fn agreement(&self, n: usize, x: &[f64], m: usize, y: &[f64], k: usize) -> Result<f64> {
        let a = self.compose(n, k)?.apply(x);
        let b = self.compose(m, k)?.apply(y);
        let d: Vec<f64> = a.iter().zip(&b).map(|(u, v)| u - v).collect();
        Ok(self.spaces[k - 1].norm(&d))
    }

    /// Earliest stage `m` after which the dimension is constant and `r_m ≤ tol`.
    pub fn finalize_bounded(&self, tol: f64) -> Result<Finalized> {
        let dims: Vec<usize> = self.spaces.iter().map(|s| s.dim()).collect();
        let last = *dims.last().expect("nonempty");
        let mut start = dims.len();
        while start > 1 && dims[start - 2] == last {
            start -= 1;
        }
        if start == dims.len() && dims.len() > 1 {
            return Err(Error::Refused(format!(
                "dimensions have not stabilized within the {} supplied stages",
                dims.len()
            )));
        }
        for m in start..=dims.len() {
            let r = self.tail(m)?;
            if r <= tol {
                return Ok(Finalized {
                    space: self.spaces[m - 1].clone(),
                    stage: m,
                    certificate: 2.0 * r,
                });
            }
        }
        Err(Error::Refused(format!("no stored stage has tail below {tol:e}")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::Matrix;
    use crate::rational::rat_from_f64;

    fn line() -> NormedSpace {
        NormedSpace::lp(2.0, 1).unwrap()
    }

    fn scalar(s: f64) -> LinearMap {
        LinearMap::new(&line(), &line(), Matrix::from_f64(1, 1, vec![s]).unwrap()).unwrap()
    }

    #[test]
    fn compose_examples() {
        let mut sys = LimitSystem::new(line());
        sys.push(scalar(1.1), 1.1f64.ln()).unwrap();
        sys.push(scalar(1.2), 1.2f64.ln()).unwrap();
        let f = sys.compose(1, 3).unwrap();
        assert!((f.matrix().get(0, 0) - 1.32).abs() < 1e-15);
        assert_eq!(sys.compose(2, 2).unwrap().matrix().get(0, 0), 1.0);
        assert!(sys.compose_checked(1, 3).unwrap().holds());
        assert!(matches!(sys.compose(1, 4), Err(Error::Index(_))));
        assert!(matches!(sys.compose(3, 1), Err(Error::Index(_))));
    }

    #[test]
    fn insertion_checks_defect() {
        let mut sys = LimitSystem::new(line());
        assert!(matches!(sys.push(scalar(2.0), 0.5), Err(Error::Validity(_))));
        assert_eq!(sys.len(), 1);
    }

    #[test]
    fn constant_system_bracket() {
        let e = NormedSpace::lp(1.0, 2).unwrap();
        let mut sys = LimitSystem::new(e.clone()).with_tail(Tail::Geometric { ratio: 0.5 });
        for n in 1..10 {
            sys.push(LinearMap::identity(&e), 0.5f64.powi(n)).unwrap();
        }
        let b = sys.limit_norm(1, &[0.25, -0.75], 10).unwrap();
        assert!((b.tail - 0.5f64.powi(9)).abs() < 1e-15);
        assert!(b.lo >= 1.0 - 0.002 && b.hi <= 1.0 + 0.002);
        assert!(b.contains(1.0));
        let z = sys.limit_norm(3, &[0.0, 0.0], 10).unwrap();
        assert_eq!((z.lo, z.hi), (0.0, 0.0));
    }

    #[test]
    fn scalar_product_system() {
        let mut sys = LimitSystem::new(line());
        for n in 1..30 {
            let d = 0.5f64.powi(n);
            sys.push(scalar(1.0 + d), (1.0 + d).ln()).unwrap();
        }
        // ln(1 + 2^{-j}) ≤ 2^{-j}; the stored last term bounds the geometric rest
        sys.set_tail(Tail::Beyond(0.5f64.powi(29))).unwrap();
        let truth: f64 = (1..200).map(|n| 1.0 + 0.5f64.powi(n)).product();
        for k in 1..=30 {
            let b = sys.limit_norm(1, &[1.0], k).unwrap();
            assert!(b.contains(truth), "k={k} {b:?} {truth}");
        }
    }

    #[test]
    fn unknown_tail_is_refused() {
        let sys = LimitSystem::new(line());
        assert!(matches!(sys.limit_norm(1, &[1.0], 1), Err(Error::Refused(_))));
    }

    #[test]
    fn finalize_examples() {
        let e = NormedSpace::lp(1.0, 2).unwrap();
        let mut sys = LimitSystem::new(e.clone()).with_tail(Tail::Finite);
        for _ in 0..3 {
            sys.push(LinearMap::identity(&e), 0.0).unwrap();
        }
        let fin = sys.finalize_bounded(1e-12).unwrap();
        assert_eq!((fin.stage, fin.certificate), (1, 0.0));

        // dims 1, 2, 3, 3, 3
        let mut sys = LimitSystem::new(NormedSpace::lp(1.0, 1).unwrap()).with_tail(Tail::Finite);
        for n in 1..=2 {
            let (a, b) = (NormedSpace::lp(1.0, n).unwrap(), NormedSpace::lp(1.0, n + 1).unwrap());
            let mut m = Matrix::zeros(n + 1, n).exact_data();
            for i in 0..n {
                m[i * n + i] = rat_from_f64(1.0).unwrap();
            }
            sys.push(LinearMap::new(&a, &b, Matrix::from_rat(n + 1, n, m).unwrap()).unwrap(), 0.0)
                .unwrap();
        }
        let l3 = NormedSpace::lp(1.0, 3).unwrap();
        assert!(matches!(sys.finalize_bounded(0.1), Err(Error::Refused(_))));
        sys.push(LinearMap::identity(&l3), 0.0).unwrap();
        sys.push(LinearMap::identity(&l3), 0.0).unwrap();
        assert_eq!(sys.finalize_bounded(0.1).unwrap().stage, 3);
    }
}
