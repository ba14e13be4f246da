//! Enumerable classes of finite-dimensional spaces and probes of their
//! joint-embedding, amalgamation and homogeneity properties.

mod amalgamation;
mod cofinal;
mod embed;
mod isometry;
mod orbits;

pub use amalgamation::{
    amalg_pair_check, check_challenges, gap_probe, generate_challenges, replay, Attempt, Challenge, ChallengeOutcome, ChallengeStatus, Counterexample, GapCandidate,
    GapReport, SearchStats, Verdict, AMALGAM_ETA,
};
pub use cofinal::{cofinal_probe, coordinate_chain, probe_with, subset_slack, CofinalReport, CofinalRow};
pub use embed::{lq_into_lpn, LqEmbedding};
pub use isometry::{
    isometries_between, iso_group, perturb_within, random_isometry, random_orthogonal, random_signed_permutation,
    transitivity_defect, TransitivityReport, ISO_VERTEX_CAP,
};
pub use orbits::{orbit_covering_estimate, OrbitEstimate, OrbitSpace};

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::map::LinearMap;
use crate::matrix::Matrix;
use crate::metrics::{best_embedding, embedding_defect, EmbeddingCertificate};
use crate::rational::Rat;
use crate::spaces::{NormSpec, NormedSpace};

/// Default acceptance threshold of the membership oracle.
pub const TAU_CLASS: f64 = 1e-6;
const MEMBER_BUDGET: usize = 400;

#[derive(Debug, Clone)]
pub enum ClassKind {
    /// `{ℓ_p^n}`; enumeration stops at `max_dim`, membership is the whole family.
    Lp { p: f64, max_dim: usize },
    /// `{ℓ_p^n(ℓ_q^k)}`.
    LpLq { p: f64, q: f64, max_n: usize, max_k: usize },
    /// Subspaces of a fixed space.
    Age { space: NormedSpace },
    Explicit { members: Vec<NormedSpace> },
}

#[derive(Debug, Clone)]
pub struct ClassGenerator {
    pub name: String,
    pub kind: ClassKind,
    pub tau: f64,
}

#[derive(Debug, Clone)]
pub struct Membership {
    /// Upper bound on the Banach–Mazur-style distance to the nearest member.
    pub defect: f64,
    pub accepted: bool,
    pub tau: f64,
    pub nearest: Option<String>,
}

impl ClassGenerator {
    fn build(name: String, kind: ClassKind) -> Self {
        ClassGenerator { name, kind, tau: TAU_CLASS }
    }

    pub fn lp(p: f64, max_dim: usize) -> Result<Self> {
        if !(p >= 1.0) || max_dim == 0 {
            return Err(Error::param("lp class needs p ≥ 1 and a positive dimension cap"));
        }
        Ok(Self::build(format!("lp:{p}:max{max_dim}"), ClassKind::Lp { p, max_dim }))
    }

    pub fn hilbert(max_dim: usize) -> Result<Self> {
        Self::lp(2.0, max_dim)
    }

    pub fn lplq(p: f64, q: f64, max_n: usize, max_k: usize) -> Result<Self> {
        if !(p >= 1.0 && q >= 1.0) || max_n == 0 || max_k == 0 {
            return Err(Error::param("lplq class needs p, q ≥ 1 and positive caps"));
        }
        Ok(Self::build(
            format!("lplq:{p}:{q}:max{max_n}:max{max_k}"),
            ClassKind::LpLq { p, q, max_n, max_k },
        ))
    }

    pub fn age(space: &NormedSpace) -> Self {
        Self::build(format!("age({})", space.label()), ClassKind::Age { space: space.clone() })
    }

    pub fn explicit(name: &str, members: Vec<NormedSpace>) -> Result<Self> {
        if members.is_empty() {
            return Err(Error::param("explicit class needs at least one member"));
        }
        Ok(Self::build(name.to_string(), ClassKind::Explicit { members }))
    }

    pub fn with_tau(mut self, tau: f64) -> Self {
        self.tau = tau;
        self
    }

    /// Parses `lp:P[:maxN]`, `l2[:maxN]` and `lplq:P:Q[:maxN[:maxK]]`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let num = |t: &str| -> Result<f64> {
            match t {
                "inf" => Ok(f64::INFINITY),
                _ => t.parse::<f64>().map_err(|_| Error::param(format!("bad number {t:?} in class {s:?}"))),
            }
        };
        let cap = |t: Option<&&str>, default: usize| -> Result<usize> {
            match t {
                None => Ok(default),
                Some(t) => t
                    .trim_start_matches("max")
                    .parse::<usize>()
                    .map_err(|_| Error::param(format!("bad cap {t:?} in class {s:?}"))),
            }
        };
        match parts.first().copied() {
            Some("lp") if parts.len() >= 2 && parts.len() <= 3 => Self::lp(num(parts[1])?, cap(parts.get(2), 4)?),
            Some("l2") if parts.len() <= 2 => Self::hilbert(cap(parts.get(1), 4)?),
            Some("lplq") if parts.len() >= 3 && parts.len() <= 5 => Self::lplq(
                num(parts[1])?,
                num(parts[2])?,
                cap(parts.get(3), 2)?,
                cap(parts.get(4), 2)?,
            ),
            _ => Err(Error::param(format!(
                "unknown class {s:?}; expected lp:P[:maxN], l2[:maxN] or lplq:P:Q[:maxN[:maxK]]"
            ))),
        }
    }

    /// Finite, deterministic list of members within the caps.
    pub fn enumerate(&self) -> Vec<NormedSpace> {
        match &self.kind {
            ClassKind::Lp { p, max_dim } => (1..=*max_dim).map(|n| NormedSpace::lp(*p, n).expect("valid p")).collect(),
            ClassKind::LpLq { p, q, max_n, max_k } => (1..=*max_n)
                .flat_map(|n| (1..=*max_k).map(move |k| (n, k)))
                .map(|(n, k)| NormedSpace::lplq(*p, *q, n, k).expect("valid exponents"))
                .collect(),
            ClassKind::Age { space } => {
                let d = space.dim();
                let mut out: Vec<NormedSpace> = (1..d)
                    .map(|k| {
                        let basis: Vec<Vec<Rat>> = (0..k).map(|i| unit_rat(d, i)).collect();
                        NormedSpace::subspace(space, &basis).expect("independent basis")
                    })
                    .collect();
                out.push(space.clone());
                out
            }
            ClassKind::Explicit { members } => members.clone(),
        }
    }

    /// Largest dimension of an enumerated member.
    pub fn max_dim(&self) -> usize {
        self.enumerate().iter().map(NormedSpace::dim).max().unwrap_or(0)
    }

    /// Family members of dimension `d` (not limited by the enumeration caps for
    /// the ℓ_p and ℓ_p(ℓ_q) families).
    pub fn members_of_dim(&self, d: usize) -> Vec<NormedSpace> {
        match &self.kind {
            ClassKind::Lp { p, .. } => vec![NormedSpace::lp(*p, d).expect("valid p")],
            ClassKind::LpLq { p, q, .. } => (1..=d)
                .filter(|n| d % n == 0)
                .map(|n| NormedSpace::lplq(*p, *q, n, d / n).expect("valid exponents"))
                .collect(),
            ClassKind::Age { .. } | ClassKind::Explicit { .. } => {
                self.enumerate().into_iter().filter(|m| m.dim() == d).collect()
            }
        }
    }

    /// Upper bound on the distance from `e` to the class, via searched maps in
    /// both directions against each member of the same dimension.
    pub fn membership(&self, e: &NormedSpace) -> Result<Membership> {
        let d = e.dim();
        let mut best = f64::INFINITY;
        let mut nearest = None;
        if let ClassKind::Age { space } = &self.kind {
            if d <= space.dim() {
                if e.same_as(space) {
                    best = 0.0;
                } else {
                    best = best_embedding(e, space, MEMBER_BUDGET, 0)?.distortion();
                }
                nearest = Some(space.label());
            }
        } else {
            for m in self.members_of_dim(d) {
                let v = if e.same_as(&m) {
                    0.0
                } else {
                    let fwd = best_embedding(e, &m, MEMBER_BUDGET, 0)?.distortion();
                    if fwd <= self.tau {
                        fwd
                    } else {
                        fwd.min(best_embedding(&m, e, MEMBER_BUDGET, 0)?.distortion())
                    }
                };
                if v < best {
                    best = v;
                    nearest = Some(m.label());
                }
                if best == 0.0 {
                    break;
                }
            }
        }
        Ok(Membership {
            defect: best,
            accepted: best <= self.tau,
            tau: self.tau,
            nearest,
        })
    }

    pub fn member_defect(&self, e: &NormedSpace) -> Result<f64> {
        Ok(self.membership(e)?.defect)
    }

    pub fn accepts(&self, e: &NormedSpace) -> Result<bool> {
        Ok(self.membership(e)?.accepted)
    }
}

fn unit_rat(n: usize, i: usize) -> Vec<Rat> {
    (0..n).map(|j| if i == j { Rat::one() } else { Rat::zero() }).collect()
}

/// Coordinate inclusion `ℝ^d → ℝ^n` at `offset`.
fn inclusion(n: usize, d: usize, offset: usize) -> Matrix {
    let mut data = vec![Rat::zero(); n * d];
    for j in 0..d {
        data[(offset + j) * d + j] = Rat::one();
    }
    Matrix::from_rat(n, d, data).expect("shape")
}

/// Joint embedding witness.
#[derive(Debug, Clone)]
pub struct Jep {
    pub h: NormedSpace,
    pub iso_f: EmbeddingCertificate,
    pub iso_g: EmbeddingCertificate,
}

/// A member `H` of the class with embeddings of both `F` and `G`.
pub fn jep_witness(class: &ClassGenerator, f: &NormedSpace, g: &NormedSpace) -> Result<Jep> {
    for (name, x) in [("F", f), ("G", g)] {
        let m = class.membership(x)?;
        if !m.accepted {
            return Err(Error::Refused(format!(
                "{name} = {} is not accepted by {} (distance {:.3e} > τ = {:.1e})",
                x.label(),
                class.name,
                m.defect,
                m.tau
            )));
        }
    }
    let (n, m) = (f.dim(), g.dim());
    let block_maps = |h: &NormedSpace, fm: Matrix, gm: Matrix| -> Result<Jep> {
        Ok(Jep {
            h: h.clone(),
            iso_f: embedding_defect(&LinearMap::new(f, h, fm)?),
            iso_g: embedding_defect(&LinearMap::new(g, h, gm)?),
        })
    };
    match &class.kind {
        ClassKind::Lp { p, .. } => {
            let h = NormedSpace::lp(*p, n + m)?;
            let onto = |x: &NormedSpace| -> Result<Matrix> {
                if x.same_as(&NormedSpace::lp(*p, x.dim())?) {
                    Ok(Matrix::identity(x.dim()))
                } else {
                    Ok(best_embedding(x, &NormedSpace::lp(*p, x.dim())?, MEMBER_BUDGET, 0)?.map.matrix().clone())
                }
            };
            let fm = inclusion(n + m, n, 0).mul(&onto(f)?)?;
            let gm = inclusion(n + m, m, n).mul(&onto(g)?)?;
            block_maps(&h, fm, gm)
        }
        ClassKind::LpLq { p, q, .. } => match (f.spec(), g.spec()) {
            (NormSpec::LpLq { n: nf, k: kf, .. }, NormSpec::LpLq { n: ng, k: kg, .. }) => {
                let k = (*kf).max(*kg);
                let h = NormedSpace::lplq(*p, *q, nf + ng, k)?;
                let blocks = |blocks: usize, kk: usize, first: usize| -> Matrix {
                    let mut data = vec![Rat::zero(); h.dim() * blocks * kk];
                    for b in 0..blocks {
                        for t in 0..kk {
                            let col = b * kk + t;
                            let row = (first + b) * k + t;
                            data[row * blocks * kk + col] = Rat::one();
                        }
                    }
                    Matrix::from_rat(h.dim(), blocks * kk, data).expect("shape")
                };
                block_maps(&h, blocks(*nf, *kf, 0), blocks(*ng, *kg, *nf))
            }
            _ => generic_jep(class, f, g),
        },
        _ => generic_jep(class, f, g),
    }
}

fn generic_jep(class: &ClassGenerator, f: &NormedSpace, g: &NormedSpace) -> Result<Jep> {
    let h = NormedSpace::p_sum(f, g, 1.0)?;
    let m = class.membership(&h)?;
    if !m.accepted {
        return Err(Error::Refused(format!(
            "{} lacks a member accepting both {} and {} (⊕₁ sum at distance {:.3e})",
            class.name,
            f.label(),
            g.label(),
            m.defect
        )));
    }
    let (n, k) = (f.dim(), g.dim());
    Ok(Jep {
        iso_f: embedding_defect(&LinearMap::new(f, &h, inclusion(n + k, n, 0))?),
        iso_g: embedding_defect(&LinearMap::new(g, &h, inclusion(n + k, k, n))?),
        h,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::rat_int;

    #[test]
    fn parse_and_enumerate() {
        let c = ClassGenerator::parse("lp:1:max3").unwrap();
        let names: Vec<String> = c.enumerate().iter().map(|s| s.label()).collect();
        assert_eq!(names, ["l1^1", "l1^2", "l1^3"]);
        assert_eq!(ClassGenerator::parse("lplq:1:4").unwrap().enumerate().len(), 4);
        assert!(ClassGenerator::parse("lq:1").is_err());
        // enumeration is deterministic
        let again: Vec<String> = c.enumerate().iter().map(|s| s.label()).collect();
        assert_eq!(names, again);
    }

    #[test]
    fn enumerated_members_are_accepted() {
        let x = NormedSpace::lp(f64::INFINITY, 3).unwrap();
        for c in [
            ClassGenerator::parse("lp:1:max3").unwrap(),
            ClassGenerator::parse("lplq:1:2:max2:max2").unwrap(),
            ClassGenerator::age(&x),
        ] {
            for m in c.enumerate() {
                assert!(c.member_defect(&m).unwrap() <= 1e-9, "{} in {}", m.label(), c.name);
            }
        }
    }

    #[test]
    fn isometric_copies_are_accepted() {
        let c = ClassGenerator::lp(1.0, 2).unwrap();
        assert!(c.accepts(&NormedSpace::lp(f64::INFINITY, 2).unwrap()).unwrap());
        let mem = c.membership(&NormedSpace::lp(2.0, 2).unwrap()).unwrap();
        assert!(!mem.accepted);
        assert!(mem.defect >= 0.5 * 2f64.ln() - 1e-6);
    }

    #[test]
    fn jep_for_lp_is_isometric() {
        let c = ClassGenerator::lp(1.0, 3).unwrap();
        let f = NormedSpace::lp(1.0, 2).unwrap();
        let g = NormedSpace::lp(1.0, 3).unwrap();
        let j = jep_witness(&c, &f, &g).unwrap();
        assert_eq!(j.h.label(), "l1^5");
        assert!(j.iso_f.is_exact() && j.iso_f.defect == 0.0);
        assert!(j.iso_g.is_exact() && j.iso_g.defect == 0.0);
        let same = jep_witness(&c, &f, &f).unwrap();
        assert_eq!(same.h.label(), "l1^4");
    }

    #[test]
    fn jep_for_lplq_pads_blocks() {
        let c = ClassGenerator::lplq(1.0, 2.0, 2, 3).unwrap();
        let f = NormedSpace::lplq(1.0, 2.0, 1, 2).unwrap();
        let g = NormedSpace::lplq(1.0, 2.0, 2, 3).unwrap();
        let j = jep_witness(&c, &f, &g).unwrap();
        assert_eq!(j.h.dim(), 9);
        assert!(j.iso_f.defect <= 1e-9 && j.iso_g.defect <= 1e-9);
    }

    #[test]
    fn jep_for_polytopes_uses_l1_sum() {
        let hex = NormedSpace::vertex_ball(
            2,
            &[vec![rat_int(2), rat_int(0)], vec![rat_int(1), rat_int(2)], vec![rat_int(-1), rat_int(2)]],
        )
        .unwrap();
        let sq = NormedSpace::lp(f64::INFINITY, 2).unwrap();
        let c = ClassGenerator::explicit("polytopes", vec![hex.clone(), sq.clone(), NormedSpace::p_sum(&hex, &sq, 1.0).unwrap()])
            .unwrap();
        let j = jep_witness(&c, &hex, &sq).unwrap();
        assert!(j.iso_f.is_exact() && j.iso_f.defect == 0.0);
        assert!(j.iso_g.is_exact() && j.iso_g.defect == 0.0);
        // a class without the sum reports the gap instead of failing hard
        let small = ClassGenerator::explicit("two", vec![hex.clone(), sq.clone()]).unwrap();
        assert!(matches!(jep_witness(&small, &hex, &sq), Err(Error::Refused(_))));
    }
}
