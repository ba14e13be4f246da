//! One-sided testing of amalgamation triples and guarded amalgamation.
//!
//! A challenge is a pair `ψ_G: F → G`, `ψ_H: F → H` of δ-embeddings into class
//! members. Each challenge is met by constructing amalgams and checking that
//! the amalgam space lies in the class; only an exhaustive search over exact
//! isometries can establish that a challenge resists.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::isometry::{isometries_between, iso_group, perturb_within, random_isometry};
use super::{ClassGenerator, ClassKind};
use crate::constructions::{hilbert_amalgam, pushout_amalgam};
use crate::error::{Error, Result};
use crate::map::LinearMap;
use crate::matrix::Matrix;
use crate::metrics::opnorm::operator_norm_of;
use crate::metrics::{best_embedding, embedding_defect};
use crate::spaces::{NormSpec, NormedSpace};

/// Defect allowed for the amalgam inclusions before they count as isometric.
pub const AMALGAM_ETA: f64 = 1e-4;
const SEARCH_BUDGET: usize = 400;
/// Pushout amalgams above this dimension, or of non-polyhedral spaces, are not
/// membership-tested for the ℓ_p families (quotient norms make the search expensive).
const PUSHOUT_DIM_CAP: usize = 3;

#[derive(Debug, Clone)]
pub struct Challenge {
    pub g: NormedSpace,
    pub psi_g: LinearMap,
    pub h: NormedSpace,
    pub psi_h: LinearMap,
    /// `inclusion`, `permuted` or `random`.
    pub kind: &'static str,
}

#[derive(Debug, Clone)]
pub struct Attempt {
    pub method: String,
    pub k: String,
    /// Upper bound on `‖ι_G ψ_G φ − ι_H ψ_H φ‖`.
    pub discrepancy: f64,
    /// Certified lower bound on the same quantity.
    pub discrepancy_lower: f64,
    pub iota_defects: (f64, f64),
    pub class_defect: f64,
    pub in_class: bool,
}

impl Attempt {
    fn succeeds(&self, eps: f64) -> bool {
        self.in_class && self.iota_defects.0 <= AMALGAM_ETA && self.iota_defects.1 <= AMALGAM_ETA && self.discrepancy < eps
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ChallengeStatus {
    Amalgamated,
    /// Every isometric amalgam in the class was examined and all of them miss ε.
    Resisted,
    Inconclusive,
}

#[derive(Debug, Clone)]
pub struct ChallengeOutcome {
    pub index: usize,
    pub kind: &'static str,
    pub g: String,
    pub h: String,
    pub status: ChallengeStatus,
    /// Smallest discrepancy among in-class attempts (∞ if none).
    pub best_discrepancy: f64,
    pub attempts: Vec<Attempt>,
    pub note: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SearchStats {
    pub challenges: usize,
    pub amalgamated: usize,
    pub inconclusive: usize,
    /// Largest best discrepancy over amalgamated challenges.
    pub max_discrepancy: f64,
    pub outcomes: Vec<ChallengeOutcome>,
    pub tau: f64,
    pub eta: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct Counterexample {
    pub reason: String,
    /// The index and data of the resisting challenge; `None` when φ itself
    /// violates the side condition.
    pub challenge: Option<(usize, Challenge)>,
    /// Certified lower bound on the violating quantity.
    pub value: f64,
    pub epsilon: f64,
    pub stats: Option<SearchStats>,
}

impl Counterexample {
    pub fn margin(&self) -> f64 {
        self.value - self.epsilon
    }
}

#[derive(Debug, Clone)]
pub enum Verdict {
    Falsified(Box<Counterexample>),
    NoCounterexampleFound(SearchStats),
}

impl Verdict {
    pub fn is_falsified(&self) -> bool {
        matches!(self, Verdict::Falsified(_))
    }

    pub fn stats(&self) -> Option<&SearchStats> {
        match self {
            Verdict::Falsified(c) => c.stats.as_ref(),
            Verdict::NoCounterexampleFound(s) => Some(s),
        }
    }
}

fn challenge_rng(seed: u64, index: usize) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed ^ (index as u64 + 1).wrapping_mul(0x9e37_79b9_7f4a_7c15))
}

/// Base δ-embedding of `f` into `g`, if one is found.
fn base_embedding(f: &NormedSpace, g: &NormedSpace, delta: f64) -> Result<Option<Matrix>> {
    if f.same_as(g) {
        return Ok(Some(Matrix::identity(f.dim())));
    }
    let c = best_embedding(f, g, SEARCH_BUDGET, 0)?;
    Ok((c.defect <= delta + 1e-9).then(|| c.map.matrix().clone()))
}

/// Seeded challenges for `F` against the class at level δ.
pub fn generate_challenges(
    class: &ClassGenerator,
    f: &NormedSpace,
    delta: f64,
    count: usize,
    seed: u64,
) -> Result<Vec<Challenge>> {
    let members: Vec<NormedSpace> = class.enumerate().into_iter().filter(|m| m.dim() >= f.dim()).collect();
    if members.is_empty() {
        return Err(Error::param(format!(
            "{} has no member of dimension ≥ {}",
            class.name,
            f.dim()
        )));
    }
    let bases: Vec<Option<Matrix>> = members
        .par_iter()
        .map(|m| base_embedding(f, m, delta))
        .collect::<Result<_>>()?;
    let valid: Vec<(NormedSpace, Matrix)> = members
        .into_iter()
        .zip(bases)
        .filter_map(|(m, b)| b.map(|b| (m, b)))
        .collect();
    if valid.is_empty() {
        return Err(Error::Refused(format!(
            "no member of {} admits a found δ-embedding of {}",
            class.name,
            f.label()
        )));
    }
    (0..count)
        .map(|i| {
            let mut rng = challenge_rng(seed, i);
            let kind = ["inclusion", "permuted", "random"][i % 3];
            let side = |rng: &mut ChaCha8Rng| -> Result<(NormedSpace, LinearMap)> {
                let (g, base) = &valid[rng.random_range(0..valid.len())];
                let m = match kind {
                    "inclusion" => base.clone(),
                    "permuted" => random_isometry(g, rng).mul(base)?,
                    _ if f.dim() == 1 => {
                        // a random direction, rescaled to defect at most δ
                        let v: Vec<f64> = (0..g.dim()).map(|_| rng.sample(StandardNormal)).collect();
                        let t = f.norm(&[1.0]) / g.norm(&v) * (delta * (2.0 * rng.random::<f64>() - 1.0)).exp();
                        Matrix::from_f64(g.dim(), 1, v.iter().map(|x| x * t).collect())?
                    }
                    _ => {
                        let j = random_isometry(g, rng).mul(base)?;
                        perturb_within(f, g, j, delta, rng)?
                    }
                };
                Ok((g.clone(), LinearMap::new(f, g, m)?))
            };
            let (g, psi_g) = side(&mut rng)?;
            let (h, psi_h) = side(&mut rng)?;
            Ok(Challenge { g, psi_g, h, psi_h, kind })
        })
        .collect()
}

fn discrepancy(phi: &LinearMap, k: &NormedSpace, ig: &Matrix, psi_g: &LinearMap, ih: &Matrix, psi_h: &LinearMap) -> Result<(f64, f64)> {
    let a = ig.mul(psi_g.matrix())?.mul(phi.matrix())?;
    let b = ih.mul(psi_h.matrix())?.mul(phi.matrix())?;
    let d = a.sub(&b)?;
    if d.is_exact() && d.is_zero() {
        return Ok((0.0, 0.0));
    }
    let bound = operator_norm_of(phi.domain(), k, &d);
    Ok((bound.upper, if bound.certified { bound.lower } else { 0.0 }))
}

/// Disjoint-support amalgam for `F` one-dimensional and `G = ℓ_p^a`, `H = ℓ_p^b`:
/// `K = ℓ_p^{ab}`, `ι_G e_i = Σ_j y_j/‖y‖ e_{ij}`, `ι_H e_j = Σ_i x_i/‖x‖ e_{ij}`.
fn product_attempt(phi: &LinearMap, ch: &Challenge, p: f64) -> Result<Option<Attempt>> {
    let is_lp = |s: &NormedSpace| matches!(s.spec(), NormSpec::Lp { p: q } if *q == p);
    if phi.codomain().dim() != 1 || !is_lp(&ch.g) || !is_lp(&ch.h) {
        return Ok(None);
    }
    let x = ch.psi_g.matrix().col_f64(0);
    let y = ch.psi_h.matrix().col_f64(0);
    let (nx, ny) = (ch.g.norm(&x), ch.h.norm(&y));
    if nx == 0.0 || ny == 0.0 {
        return Ok(None);
    }
    let (a, b) = (x.len(), y.len());
    let k = NormedSpace::lp(p, a * b)?;
    let mut ig = vec![0.0; a * b * a];
    let mut ih = vec![0.0; a * b * b];
    for i in 0..a {
        for j in 0..b {
            ig[(i * b + j) * a + i] = y[j] / ny;
            ih[(i * b + j) * b + j] = x[i] / nx;
        }
    }
    let ig = Matrix::from_f64(a * b, a, ig)?;
    let ih = Matrix::from_f64(a * b, b, ih)?;
    let cg = embedding_defect(&LinearMap::new(&ch.g, &k, ig.clone())?);
    let ch_ = embedding_defect(&LinearMap::new(&ch.h, &k, ih.clone())?);
    let (hi, lo) = discrepancy(phi, &k, &ig, &ch.psi_g, &ih, &ch.psi_h)?;
    Ok(Some(Attempt {
        method: "disjoint-support product".into(),
        k: k.label(),
        discrepancy: hi,
        discrepancy_lower: lo,
        iota_defects: (cg.defect, ch_.defect),
        class_defect: 0.0,
        in_class: true,
    }))
}

/// Orthogonal amalgam of the isometric parts `U` of the polar decompositions
/// `ψ = U P`, measured against the original ψ's.
fn polar_attempt(phi: &LinearMap, ch: &Challenge, class: &ClassGenerator) -> Result<Attempt> {
    let isometric_part = |psi: &LinearMap| -> Result<LinearMap> {
        let svd = psi.matrix().to_nalgebra().svd(true, true);
        let (u, vt) = (svd.u.expect("u requested"), svd.v_t.expect("v_t requested"));
        LinearMap::new(psi.domain(), psi.codomain(), Matrix::from_nalgebra(&(u * vt))?)
    };
    let (ug, uh) = (isometric_part(&ch.psi_g)?, isometric_part(&ch.psi_h)?);
    let r = hilbert_amalgam(phi, &ug, &uh)?;
    let (hi, lo) = discrepancy(phi, &r.k, r.iota_g.matrix(), &ch.psi_g, r.iota_h.matrix(), &ch.psi_h)?;
    let mut a = from_result("orthogonal after polar decomposition", r, class, true)?;
    a.discrepancy = hi;
    a.discrepancy_lower = lo;
    Ok(a)
}

fn from_result(method: &str, r: crate::constructions::AmalgamResult, class: &ClassGenerator, check: bool) -> Result<Attempt> {
    let (class_defect, in_class) = if check {
        let m = class.membership(&r.k)?;
        (m.defect, m.accepted)
    } else {
        (f64::INFINITY, false)
    };
    let lower = match &r.discrepancy_exact {
        Some(v) => crate::rational::rat_to_f64(v),
        None => 0.0,
    };
    Ok(Attempt {
        method: method.into(),
        k: r.k.label(),
        discrepancy: r.discrepancy,
        discrepancy_lower: lower,
        iota_defects: r.iota_defects(),
        class_defect,
        in_class,
    })
}

/// Minimum discrepancy over pairs of exact isometries `G → K`, `H → K`.
fn exhaustive_attempt(phi: &LinearMap, ch: &Challenge, k: &NormedSpace) -> Result<Attempt> {
    let sg = isometries_between(&ch.g, k)?;
    let sh = isometries_between(&ch.h, k)?;
    let mut best = (f64::INFINITY, f64::INFINITY);
    for s in &sg {
        for t in &sh {
            let (hi, lo) = discrepancy(phi, k, s, &ch.psi_g, t, &ch.psi_h)?;
            best = (best.0.min(hi), best.1.min(lo));
        }
    }
    Ok(Attempt {
        method: format!("exhaustive isometries ({}×{})", sg.len(), sh.len()),
        k: k.label(),
        discrepancy: best.0,
        discrepancy_lower: best.1,
        iota_defects: (0.0, 0.0),
        class_defect: 0.0,
        in_class: !sg.is_empty() && !sh.is_empty(),
    })
}

/// Near-isometric inclusions into a larger member, aligned over `Iso(K)`.
fn member_search_attempt(phi: &LinearMap, ch: &Challenge, k: &NormedSpace) -> Result<Attempt> {
    let ig = best_embedding(&ch.g, k, SEARCH_BUDGET, 0)?;
    let ih = best_embedding(&ch.h, k, SEARCH_BUDGET, 0)?;
    let group: Vec<Matrix> = match iso_group(k) {
        Ok(g) => g.into_iter().map(|t| t.matrix().clone()).collect(),
        Err(_) => vec![Matrix::identity(k.dim())],
    };
    let mut best = (f64::INFINITY, 0.0);
    for t in &group {
        let tg = t.mul(ig.map.matrix())?;
        let (hi, lo) = discrepancy(phi, k, &tg, &ch.psi_g, ih.map.matrix(), &ch.psi_h)?;
        if hi < best.0 {
            best = (hi, lo);
        }
    }
    Ok(Attempt {
        method: format!("member search over Iso(K) ({} elements)", group.len()),
        k: k.label(),
        discrepancy: best.0,
        discrepancy_lower: best.1,
        iota_defects: (ig.defect, ih.defect),
        class_defect: 0.0,
        in_class: true,
    })
}

fn evaluate(class: &ClassGenerator, phi: &LinearMap, eps: f64, index: usize, ch: &Challenge) -> ChallengeOutcome {
    let mut attempts: Vec<Attempt> = Vec::new();
    let mut notes: Vec<String> = Vec::new();
    let mut exhaustive_lower: Option<f64> = None;
    let done = |a: &[Attempt]| a.iter().any(|x| x.succeeds(eps));
    fn push(r: Result<Option<Attempt>>, attempts: &mut Vec<Attempt>, notes: &mut Vec<String>) {
        match r {
            Ok(Some(a)) => attempts.push(a),
            Ok(None) => {}
            Err(e) => notes.push(e.to_string()),
        }
    }
    let (dg, dh) = (ch.g.dim(), ch.h.dim());
    match &class.kind {
        ClassKind::Lp { p, .. } => {
            if *p == 2.0 {
                push(
                    hilbert_amalgam(phi, &ch.psi_g, &ch.psi_h).and_then(|r| from_result("orthogonal", r, class, true).map(Some)),
                    &mut attempts,
                    &mut notes,
                );
                if !done(&attempts) {
                    push(polar_attempt(phi, ch, class).map(Some), &mut attempts, &mut notes);
                }
            }
            if !done(&attempts) {
                push(product_attempt(phi, ch, *p), &mut attempts, &mut notes);
            }
        }
        ClassKind::LpLq { .. } => {}
        ClassKind::Age { .. } | ClassKind::Explicit { .. } => {
            let d = dg.max(dh);
            let all_fit = class.max_dim() == d && dg == dh;
            let mut covered = all_fit;
            let mut lower = f64::INFINITY;
            for k in class.members_of_dim(d) {
                if done(&attempts) {
                    break;
                }
                if dg == dh && k.polytope().is_some() {
                    match exhaustive_attempt(phi, ch, &k) {
                        Ok(a) => {
                            lower = lower.min(a.discrepancy_lower);
                            attempts.push(a);
                        }
                        Err(e) => {
                            covered = false;
                            notes.push(e.to_string());
                        }
                    }
                } else {
                    covered = false;
                }
            }
            if covered {
                exhaustive_lower = Some(lower);
            }
            for k in class.enumerate().into_iter().filter(|k| k.dim() > d).take(3) {
                if done(&attempts) {
                    break;
                }
                push(member_search_attempt(phi, ch, &k).map(Some), &mut attempts, &mut notes);
            }
        }
    }
    if !done(&attempts) {
        let k_dim = dg + dh - phi.codomain().dim();
        let local = matches!(class.kind, ClassKind::Age { .. } | ClassKind::Explicit { .. });
        let polyhedral = ch.g.is_polyhedral() && ch.h.is_polyhedral();
        if local || (k_dim <= PUSHOUT_DIM_CAP && polyhedral) {
            push(
                pushout_amalgam(phi, &ch.psi_g, &ch.psi_h).and_then(|r| from_result("pushout", r, class, true).map(Some)),
                &mut attempts,
                    &mut notes,
            );
        } else if !polyhedral {
            notes.push("pushout of non-polyhedral spaces not membership-tested".into());
        } else {
            notes.push(format!("pushout of dimension {k_dim} not membership-tested"));
        }
    }
    let best = attempts
        .iter()
        .filter(|a| a.in_class)
        .map(|a| a.discrepancy)
        .fold(f64::INFINITY, f64::min);
    let status = if done(&attempts) {
        ChallengeStatus::Amalgamated
    } else if exhaustive_lower.is_some_and(|l| l >= eps) {
        ChallengeStatus::Resisted
    } else {
        ChallengeStatus::Inconclusive
    };
    ChallengeOutcome {
        index,
        kind: ch.kind,
        g: ch.g.label(),
        h: ch.h.label(),
        status,
        best_discrepancy: best,
        attempts,
        note: (!notes.is_empty()).then(|| notes.join("; ")),
    }
}

/// Tests whether `(E, F, φ)` behaves as a (class, ε, δ)-amalgamation triple on
/// `budget` seeded challenges.
pub fn amalg_pair_check(
    class: &ClassGenerator,
    phi: &LinearMap,
    eps: f64,
    delta: f64,
    budget: usize,
    seed: u64,
) -> Result<Verdict> {
    if !(eps > 0.0) || !(delta >= 0.0) {
        return Err(Error::param("ε must be positive and δ nonnegative"));
    }
    let pc = embedding_defect(phi);
    if pc.defect_lower >= eps {
        return Ok(Verdict::Falsified(Box::new(Counterexample {
            reason: format!("φ has defect ≥ {:.6e}, not below ε", pc.defect_lower),
            challenge: None,
            value: pc.defect_lower,
            epsilon: eps,
            stats: None,
        })));
    }
    if pc.defect >= eps {
        return Err(Error::Refused(format!(
            "φ defect bracket [{:.3e}, {:.3e}] straddles ε",
            pc.defect_lower, pc.defect
        )));
    }
    let challenges = generate_challenges(class, phi.codomain(), delta, budget, seed)?;
    check_challenges(class, phi, eps, delta, &challenges, seed)
}

/// Evaluates a fixed challenge set.
pub fn check_challenges(
    class: &ClassGenerator,
    phi: &LinearMap,
    eps: f64,
    delta: f64,
    challenges: &[Challenge],
    seed: u64,
) -> Result<Verdict> {
    let outcomes: Vec<ChallengeOutcome> = challenges
        .par_iter()
        .enumerate()
        .map(|(i, ch)| evaluate(class, phi, eps, i, ch))
        .collect();
    let amalgamated = outcomes.iter().filter(|o| o.status == ChallengeStatus::Amalgamated).count();
    let inconclusive = outcomes.iter().filter(|o| o.status == ChallengeStatus::Inconclusive).count();
    let max_discrepancy = outcomes
        .iter()
        .filter(|o| o.status == ChallengeStatus::Amalgamated)
        .map(|o| o.best_discrepancy)
        .fold(0.0, f64::max);
    let resisted = outcomes.iter().position(|o| o.status == ChallengeStatus::Resisted);
    let stats = SearchStats {
        challenges: challenges.len(),
        amalgamated,
        inconclusive,
        max_discrepancy,
        outcomes,
        tau: class.tau,
        eta: AMALGAM_ETA,
        epsilon: eps,
        delta,
        seed,
    };
    Ok(match resisted {
        Some(i) => {
            let value = stats.outcomes[i]
                .attempts
                .iter()
                .filter(|a| a.method.starts_with("exhaustive"))
                .map(|a| a.discrepancy_lower)
                .fold(f64::INFINITY, f64::min);
            Verdict::Falsified(Box::new(Counterexample {
                reason: format!(
                    "challenge {i} ({} → {}, {}) has no isometric amalgam in the class within ε",
                    stats.outcomes[i].g, stats.outcomes[i].h, stats.outcomes[i].kind
                ),
                challenge: Some((i, challenges[i].clone())),
                value,
                epsilon: eps,
                stats: Some(stats),
            }))
        }
        None => Verdict::NoCounterexampleFound(stats),
    })
}

/// Re-evaluates a bundled challenge; returns the certified lower discrepancy.
pub fn replay(class: &ClassGenerator, phi: &LinearMap, cx: &Counterexample) -> Result<f64> {
    match &cx.challenge {
        None => Ok(embedding_defect(phi).defect_lower),
        Some((i, ch)) => {
            let o = evaluate(class, phi, cx.epsilon, *i, ch);
            Ok(o.attempts
                .iter()
                .filter(|a| a.method.starts_with("exhaustive"))
                .map(|a| a.discrepancy_lower)
                .fold(f64::INFINITY, f64::min))
        }
    }
}

#[derive(Debug, Clone)]
pub struct GapCandidate {
    pub f: String,
    pub phi_defect: f64,
    pub delta: f64,
    pub falsified: bool,
    pub amalgamated: usize,
    pub challenges: usize,
    pub max_discrepancy: f64,
}

#[derive(Debug, Clone)]
pub struct GapReport {
    pub candidates: Vec<GapCandidate>,
    /// Index of the best-scoring candidate: no counterexample, most challenges
    /// amalgamated, then the largest δ.
    pub best: Option<usize>,
    pub epsilon: f64,
}

/// Searches guard triples `(F, φ, δ)` for `E`; a positive report is evidence only.
pub fn gap_probe(class: &ClassGenerator, e: &NormedSpace, eps: f64, budget: usize, seed: u64) -> Result<GapReport> {
    let members: Vec<NormedSpace> = class.enumerate().into_iter().filter(|m| m.dim() >= e.dim()).collect();
    if members.is_empty() {
        return Err(Error::param(format!("{} has no member of dimension ≥ {}", class.name, e.dim())));
    }
    let deltas = [eps / 4.0, eps / 8.0, eps / 16.0];
    let per = (budget / (members.len() * deltas.len())).max(3);
    let mut candidates = Vec::new();
    for f in &members {
        let phi = if e.same_as(f) {
            LinearMap::identity(e)
        } else {
            best_embedding(e, f, SEARCH_BUDGET, seed)?.map
        };
        let phi_defect = embedding_defect(&phi).defect;
        if phi_defect >= eps {
            continue;
        }
        let mut first_clean = false;
        for &delta in &deltas {
            let verdict = match amalg_pair_check(class, &phi, eps, delta, per, seed) {
                Ok(v) => v,
                Err(Error::Refused(_)) => continue,
                Err(err) => return Err(err),
            };
            let stats = verdict.stats();
            let cand = GapCandidate {
                f: f.label(),
                phi_defect,
                delta,
                falsified: verdict.is_falsified(),
                amalgamated: stats.map_or(0, |s| s.amalgamated),
                challenges: stats.map_or(0, |s| s.challenges),
                max_discrepancy: stats.map_or(f64::INFINITY, |s| s.max_discrepancy),
            };
            first_clean = !cand.falsified && cand.amalgamated == cand.challenges;
            candidates.push(cand);
            if first_clean {
                break;
            }
        }
        if first_clean {
            break;
        }
    }
    let best = (0..candidates.len())
        .filter(|&i| !candidates[i].falsified)
        .max_by(|&a, &b| {
            let (x, y) = (&candidates[a], &candidates[b]);
            (x.amalgamated * y.challenges.max(1))
                .cmp(&(y.amalgamated * x.challenges.max(1)))
                .then(x.delta.total_cmp(&y.delta))
                .then(b.cmp(&a))
        });
    Ok(GapReport { candidates, best, epsilon: eps })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn lp(p: f64, n: usize) -> NormedSpace {
        NormedSpace::lp(p, n).unwrap()
    }

    #[test]
    fn hilbert_class_amalgamates_exactly() {
        let class = ClassGenerator::hilbert(4).unwrap();
        for d in 1..=2 {
            let e = lp(2.0, d);
            let v = amalg_pair_check(&class, &LinearMap::identity(&e), 1e-3, 0.0, 12, 5).unwrap();
            let Verdict::NoCounterexampleFound(s) = v else { panic!("falsified") };
            assert_eq!(s.amalgamated, 12);
            assert!(s.max_discrepancy <= 1e-8, "{}", s.max_discrepancy);
        }
    }

    #[test]
    fn hilbert_class_absorbs_perturbed_embeddings() {
        let class = ClassGenerator::hilbert(4).unwrap();
        let e = lp(2.0, 2);
        let delta = 0.05;
        let v = amalg_pair_check(&class, &LinearMap::identity(&e), 0.15, delta, 15, 9).unwrap();
        let Verdict::NoCounterexampleFound(s) = v else { panic!("falsified") };
        assert_eq!(s.amalgamated, 15);
        // ψ = U P with ‖P − Id‖ ≤ e^δ − 1 on both sides
        assert!(s.max_discrepancy <= delta.exp() - (-delta).exp() + 1e-9, "{}", s.max_discrepancy);
    }

    #[test]
    fn l1_class_over_a_line() {
        let class = ClassGenerator::lp(1.0, 3).unwrap();
        let e = lp(1.0, 1);
        let v = amalg_pair_check(&class, &LinearMap::identity(&e), 0.05, 0.01, 30, 7).unwrap();
        let Verdict::NoCounterexampleFound(s) = v else { panic!("falsified") };
        assert_eq!(s.amalgamated, s.challenges);
        // oracle: the product amalgam misses by |‖x‖ − ‖y‖| ≤ e^δ − e^{−δ}
        assert!(s.max_discrepancy <= 0.01f64.exp() - (-0.01f64).exp() + 1e-9);
    }

    #[test]
    fn large_epsilon_is_trivial() {
        let class = ClassGenerator::lp(1.0, 2).unwrap();
        let e = lp(1.0, 1);
        let v = amalg_pair_check(&class, &LinearMap::identity(&e), 10f64.ln(), 1e-6, 9, 1).unwrap();
        assert!(!v.is_falsified());
    }

    #[test]
    fn side_condition_falsifies() {
        let class = ClassGenerator::lp(1.0, 2).unwrap();
        let e = lp(1.0, 1);
        let phi = LinearMap::identity(&e).scaled(&crate::rational::rat_int(2));
        let Verdict::Falsified(cx) = amalg_pair_check(&class, &phi, 0.1, 0.0, 3, 1).unwrap() else {
            panic!("side condition not caught")
        };
        assert!(cx.margin() >= 1e-6);
        assert!(replay(&class, &phi, &cx).unwrap() >= cx.epsilon - 1e-6);
    }

    #[test]
    fn finite_class_can_resist() {
        // the only 2-dimensional member is ℓ∞²; challenges sending e₁ to a vertex
        // and to an edge midpoint cannot be matched by isometries
        let x = lp(f64::INFINITY, 2);
        let class = ClassGenerator::explicit("square", vec![x.clone()]).unwrap();
        let f = lp(f64::INFINITY, 1);
        let phi = LinearMap::identity(&f);
        let to = |v: [f64; 2]| LinearMap::new(&f, &x, Matrix::from_f64(2, 1, v.to_vec()).unwrap()).unwrap();
        let ch = Challenge {
            g: x.clone(),
            psi_g: to([1.0, 1.0]),
            h: x.clone(),
            psi_h: to([1.0, 0.0]),
            kind: "inclusion",
        };
        let v = check_challenges(&class, &phi, 0.5, 0.0, &[ch], 0).unwrap();
        let Verdict::Falsified(cx) = v else { panic!("expected resistance") };
        assert!(cx.margin() >= 1e-6);
        let again = replay(&class, &phi, &cx).unwrap();
        assert!(again >= cx.epsilon - 1e-6, "{again}");
    }

    #[test]
    fn gap_probe_on_age_of_square() {
        let x = lp(f64::INFINITY, 2);
        let class = ClassGenerator::age(&x);
        let r = gap_probe(&class, &x, 0.2, 24, 3).unwrap();
        let best = &r.candidates[r.best.unwrap()];
        assert_eq!(best.f, x.label());
        assert!(!best.falsified);
        assert_eq!(best.amalgamated, best.challenges);
    }
}
