//! Finite-horizon referee and strategies for the Banach–Mazur game.
//!
//! Player I moves at odd stages, Player II at even ones. Move `n` supplies the
//! space `E_n`, the map `f_{n−1}: E_{n−1} → E_n` (absent at stage 1) and
//! `ε_n < ε_{n−1}`; the map must have defect at most `ε_{n−1}` and `E_n` must
//! be accepted by the class oracle.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::classes::{perturb_within, random_isometry, ClassGenerator, Membership};
use crate::error::{Error, Result};
use crate::limits::{LimitSystem, Tail};
use crate::map::LinearMap;
use crate::matrix::Matrix;
use crate::metrics::{best_embedding, embedding_defect, epsilon_net};
use crate::spaces::NormedSpace;

/// Default legality tolerance on certified defects.
pub const REFEREE_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Player {
    I,
    II,
}

impl Player {
    pub fn at(stage: usize) -> Player {
        if stage % 2 == 1 {
            Player::I
        } else {
            Player::II
        }
    }
}

#[derive(Debug, Clone)]
pub struct Move {
    pub space: NormedSpace,
    /// Map from the previous space; `None` for the opening move.
    pub map: Option<LinearMap>,
    pub epsilon: f64,
    pub note: Option<String>,
}

impl Move {
    pub fn new(space: NormedSpace, map: Option<LinearMap>, epsilon: f64) -> Self {
        Move { space, map, epsilon, note: None }
    }

    pub fn with_note(mut self, note: impl Into<String>) -> Self {
        self.note = Some(note.into());
        self
    }

    /// The always-legal move: previous space, identity, half the previous ε.
    pub fn replay(history: &[PlayedMove]) -> Result<Move> {
        let last = history.last().ok_or_else(|| Error::param("nothing to replay at the opening"))?;
        Ok(Move::new(
            last.space.clone(),
            Some(LinearMap::identity(&last.space)),
            last.epsilon / 2.0,
        ))
    }
}

/// A move accepted by the referee, with its checks.
#[derive(Debug, Clone)]
pub struct PlayedMove {
    pub stage: usize,
    pub by: Player,
    pub space: NormedSpace,
    pub map: Option<LinearMap>,
    pub epsilon: f64,
    /// Certified defect of the map.
    pub map_defect: Option<f64>,
    pub class_defect: f64,
    pub note: Option<String>,
}

#[derive(Debug, Clone)]
pub struct Forfeit {
    pub player: Player,
    pub stage: usize,
    pub reason: String,
    /// The strategy failed to produce a move (as opposed to breaking a rule).
    pub numerical: bool,
}

#[derive(Debug, Clone)]
pub struct TargetEstimate {
    pub target: String,
    /// Upper bound on `d_BM(E_h, target)`.
    pub stage_distance: f64,
    /// `stage_distance + tail_certificate`.
    pub upper: f64,
}

#[derive(Debug, Clone)]
pub struct GameTranscript {
    pub moves: Vec<PlayedMove>,
    pub legal: bool,
    pub forfeit: Option<Forfeit>,
    pub horizon: usize,
    pub horizon_space: Option<NormedSpace>,
    /// `Σ_{j ≥ h} ε_j` under the halving discipline: `4ε_h`.
    pub declared_tail: f64,
    /// `2 ·` declared tail: bound on `d_BM(E_h, lim)`.
    pub tail_certificate: f64,
    pub target_estimate: Option<TargetEstimate>,
    /// Stages `1..=h` with declared defects `ε_j + tol`.
    pub system: Option<LimitSystem>,
    pub tol: f64,
    pub tau: f64,
    pub class: String,
    pub seed: u64,
}

pub trait Strategy {
    fn name(&self) -> String;
    /// The next move given the accepted history; an error forfeits.
    fn next_move(&mut self, history: &[PlayedMove], class: &ClassGenerator, seed: u64) -> Result<Move>;
}

fn stage_seed(seed: u64, stage: usize) -> u64 {
    seed ^ (stage as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Upper bound on `d_BM(a, b)` from searched maps in both directions.
fn bm_upper(a: &NormedSpace, b: &NormedSpace, seed: u64) -> Result<f64> {
    if a.dim() != b.dim() {
        return Ok(f64::INFINITY);
    }
    if a.same_as(b) {
        return Ok(0.0);
    }
    let fwd = best_embedding(a, b, 800, seed)?.distortion();
    let bwd = best_embedding(b, a, 800, seed)?.distortion();
    Ok(fwd.min(bwd))
}

/// Plays `horizon` stages, stopping at the first illegal move or forfeit.
pub fn referee(
    s1: &mut dyn Strategy,
    s2: &mut dyn Strategy,
    horizon: usize,
    class: &ClassGenerator,
    tol: f64,
    seed: u64,
    target: Option<&NormedSpace>,
) -> Result<GameTranscript> {
    if horizon < 2 || horizon % 2 == 1 {
        return Err(Error::param("the horizon must be an even integer ≥ 2"));
    }
    if !(tol >= 0.0) {
        return Err(Error::param("tolerance must be nonnegative"));
    }
    let mut moves: Vec<PlayedMove> = Vec::new();
    let mut forfeit = None;
    let mut system: Option<LimitSystem> = None;
    for stage in 1..=horizon {
        let by = Player::at(stage);
        let strategy: &mut dyn Strategy = if by == Player::I { &mut *s1 } else { &mut *s2 };
        let mv = match strategy.next_move(&moves, class, stage_seed(seed, stage)) {
            Ok(m) => m,
            Err(e) => {
                forfeit = Some(Forfeit {
                    player: by,
                    stage,
                    reason: format!("{} produced no move: {e}", strategy.name()),
                    numerical: true,
                });
                break;
            }
        };
        let violation = |reason: String| Forfeit { player: by, stage, reason, numerical: false };
        let prev = moves.last();
        if !(mv.epsilon > 0.0) || !mv.epsilon.is_finite() {
            forfeit = Some(violation(format!("ε = {} is not positive", mv.epsilon)));
            break;
        }
        if let Some(p) = prev {
            if mv.epsilon >= p.epsilon {
                forfeit = Some(violation(format!(
                    "ε = {:.6e} does not decrease from {:.6e}",
                    mv.epsilon, p.epsilon
                )));
                break;
            }
        }
        let mut map_defect = None;
        match (prev, &mv.map) {
            (None, None) => {}
            (None, Some(_)) => {
                forfeit = Some(violation("the opening move carries a map".into()));
                break;
            }
            (Some(_), None) => {
                forfeit = Some(violation("missing map from the previous space".into()));
                break;
            }
            (Some(p), Some(f)) => {
                if f.domain().dim() != p.space.dim() || f.codomain().dim() != mv.space.dim() {
                    forfeit = Some(violation("map dimensions do not match the spaces".into()));
                    break;
                }
                let f = f.with_spaces(&p.space, &mv.space)?;
                let c = embedding_defect(&f);
                if c.defect > p.epsilon + tol {
                    forfeit = Some(violation(format!(
                        "map defect {:.6e} exceeds ε = {:.6e} + tol",
                        c.defect, p.epsilon
                    )));
                    break;
                }
                map_defect = Some(c.defect);
            }
        }
        let Membership { defect: class_defect, accepted, .. } = class.membership(&mv.space)?;
        if !accepted {
            forfeit = Some(violation(format!(
                "{} is not accepted by {} (distance {:.3e})",
                mv.space.label(),
                class.name,
                class_defect
            )));
            break;
        }
        match (&mut system, &mv.map, prev) {
            (None, _, _) => system = Some(LimitSystem::new(mv.space.clone())),
            (Some(sys), Some(f), Some(p)) => {
                sys.push(f.with_spaces(&p.space, &mv.space)?, p.epsilon + tol)?;
            }
            _ => unreachable!("checked above"),
        }
        moves.push(PlayedMove {
            stage,
            by,
            space: mv.space,
            map: mv.map,
            epsilon: mv.epsilon,
            map_defect,
            class_defect,
            note: mv.note,
        });
    }
    let legal = forfeit.is_none() && moves.len() == horizon;
    let (horizon_space, declared_tail) = if legal {
        let last = moves.last().expect("horizon ≥ 2");
        (Some(last.space.clone()), 4.0 * last.epsilon)
    } else {
        (None, f64::INFINITY)
    };
    if let Some(sys) = system.as_mut() {
        if legal {
            sys.set_tail(Tail::Beyond(declared_tail))?;
        }
    }
    let tail_certificate = 2.0 * declared_tail;
    let target_estimate = match (target, &horizon_space) {
        (Some(t), Some(h)) => {
            let d = bm_upper(h, t, seed)?;
            Some(TargetEstimate {
                target: t.label(),
                stage_distance: d,
                upper: d + tail_certificate,
            })
        }
        _ => None,
    };
    Ok(GameTranscript {
        moves,
        legal,
        forfeit,
        horizon,
        horizon_space,
        declared_tail,
        tail_certificate,
        target_estimate,
        system,
        tol,
        tau: class.tau,
        class: class.name.clone(),
        seed,
    })
}

/// Replays the previous space with the identity and half the ε; opens with a
/// fixed space.
#[derive(Debug, Clone)]
pub struct Replay {
    pub opening: NormedSpace,
    pub eps1: f64,
}

impl Strategy for Replay {
    fn name(&self) -> String {
        "replay".into()
    }

    fn next_move(&mut self, history: &[PlayedMove], _: &ClassGenerator, _: u64) -> Result<Move> {
        if history.is_empty() {
            return Ok(Move::new(self.opening.clone(), None, self.eps1));
        }
        Move::replay(history)
    }
}

/// Always answers with the target space `E` and half the ε.
#[derive(Debug, Clone)]
pub struct FiniteDimTarget {
    pub target: NormedSpace,
    pub eps1: f64,
    /// Search budgets tried in turn before forfeiting.
    pub budgets: Vec<usize>,
}

impl FiniteDimTarget {
    pub fn new(target: &NormedSpace, eps1: f64) -> Result<Self> {
        if target.dim() == 0 {
            return Err(Error::param("the target must be nonzero"));
        }
        Ok(FiniteDimTarget {
            target: target.clone(),
            eps1,
            budgets: vec![400, 2000, 8000],
        })
    }
}

impl Strategy for FiniteDimTarget {
    fn name(&self) -> String {
        format!("finite-target({})", self.target.label())
    }

    fn next_move(&mut self, history: &[PlayedMove], _: &ClassGenerator, seed: u64) -> Result<Move> {
        let Some(last) = history.last() else {
            return Ok(Move::new(self.target.clone(), None, self.eps1));
        };
        let eps = last.epsilon / 2.0;
        if last.space.same_as(&self.target) {
            let id = LinearMap::identity(&last.space).with_spaces(&last.space, &self.target)?;
            return Ok(Move::new(self.target.clone(), Some(id), eps));
        }
        if last.space.dim() > self.target.dim() {
            return Err(Error::Refused(format!(
                "{} does not fit into {}",
                last.space.label(),
                self.target.label()
            )));
        }
        let mut best = f64::INFINITY;
        for &b in &self.budgets {
            let c = best_embedding(&last.space, &self.target, b, seed)?;
            best = best.min(c.defect);
            if c.defect <= last.epsilon {
                return Ok(Move::new(self.target.clone(), Some(c.map), eps)
                    .with_note(format!("search budget {b}, defect {:.3e}", c.defect)));
            }
        }
        Err(Error::Budget(format!(
            "best defect {best:.3e} above ε = {:.3e} after budget {}",
            last.epsilon,
            self.budgets.last().copied().unwrap_or(0)
        )))
    }
}

/// Plays a random class member reachable by a found map of defect ≤ ε/2,
/// composed with a random isometry and a small perturbation.
#[derive(Debug, Clone)]
pub struct RandomLegal {
    pub eps1: f64,
    pub seed: u64,
    pub tries: usize,
}

impl RandomLegal {
    pub fn new(eps1: f64, seed: u64) -> Self {
        RandomLegal { eps1, seed, tries: 4 }
    }
}

impl Strategy for RandomLegal {
    fn name(&self) -> String {
        "random-legal".into()
    }

    fn next_move(&mut self, history: &[PlayedMove], class: &ClassGenerator, seed: u64) -> Result<Move> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ self.seed.rotate_left(17));
        let members = class.enumerate();
        let Some(last) = history.last() else {
            let m = members[rng.random_range(0..members.len())].clone();
            return Ok(Move::new(m, None, self.eps1));
        };
        if members.len() == 1 {
            return Move::replay(history).map(|m| m.with_note("single-member class"));
        }
        let mut options: Vec<NormedSpace> = members.into_iter().filter(|m| m.dim() >= last.space.dim()).collect();
        for i in (1..options.len()).rev() {
            options.swap(i, rng.random_range(0..=i));
        }
        let budget = last.epsilon / 2.0;
        for f in options.into_iter().take(self.tries) {
            let base = if last.space.same_as(&f) {
                Matrix::identity(f.dim())
            } else {
                let c = best_embedding(&last.space, &f, 400, seed)?;
                if c.defect > budget {
                    continue;
                }
                c.map.matrix().clone()
            };
            let m = random_isometry(&f, &mut rng).mul(&base)?;
            let m = perturb_within(&last.space, &f, m, budget, &mut rng)?;
            let map = LinearMap::new(&last.space, &f, m)?;
            if embedding_defect(&map).defect > budget {
                continue;
            }
            let eps = last.epsilon * rng.random_range(0.3..0.9);
            return Ok(Move::new(f, Some(map), eps));
        }
        Move::replay(history).map(|m| m.with_note("no legal extension found; replay"))
    }
}

/// Challenge extension supplied to [`NetSpoiler`]: given the current space and
/// ε, returns the next space, a map into it and the next ε.
pub type Oracle = Box<dyn FnMut(&NormedSpace, f64) -> Option<(NormedSpace, LinearMap, f64)> + Send>;

/// The oracle that always extends by `⊕₁ ℝ`.
pub fn extend_by_line() -> Oracle {
    Box::new(|current: &NormedSpace, eps: f64| {
        let line = NormedSpace::lp(1.0, 1).ok()?;
        let next = NormedSpace::p_sum(current, &line, 1.0).ok()?;
        let d = current.dim();
        let inc = Matrix::identity(d).vstack(&Matrix::zeros(1, d)).ok()?;
        let map = LinearMap::new(current, &next, inc).ok()?;
        Some((next, map, eps / 2.0))
    })
}

/// Player I skeleton: opens with `(E, γ)`, keeps θ-nets of `Emb_{5γ}(E, E_n)`
/// and plays the extensions chosen by the oracle.
pub struct NetSpoiler {
    pub e: NormedSpace,
    pub gamma: f64,
    pub theta: f64,
    pub net_budget: usize,
    pub oracle: Oracle,
    /// Net sizes (or `None` when the grid exceeded the budget) per move.
    pub nets: Vec<Option<usize>>,
}

impl NetSpoiler {
    /// `γ = ε/9`.
    pub fn new(e: &NormedSpace, eps: f64, oracle: Oracle) -> Self {
        NetSpoiler {
            e: e.clone(),
            gamma: eps / 9.0,
            theta: 0.5,
            net_budget: 200_000,
            oracle,
            nets: Vec::new(),
        }
    }
}

impl Strategy for NetSpoiler {
    fn name(&self) -> String {
        format!("net-spoiler({})", self.e.label())
    }

    fn next_move(&mut self, history: &[PlayedMove], _: &ClassGenerator, _: u64) -> Result<Move> {
        let Some(last) = history.last() else {
            return Ok(Move::new(self.e.clone(), None, self.gamma));
        };
        let net = if self.e.dim() <= last.space.dim() {
            epsilon_net(&self.e, &last.space, 5.0 * self.gamma, self.theta, self.net_budget)
                .ok()
                .map(|n| n.members.len())
        } else {
            None
        };
        self.nets.push(net);
        let note = match net {
            Some(k) => format!("net of {k} maps"),
            None => "net skipped (grid budget)".into(),
        };
        match (self.oracle)(&last.space, last.epsilon) {
            Some((space, map, eps)) if eps < last.epsilon => Ok(Move::new(space, Some(map), eps).with_note(note)),
            _ => Move::replay(history).map(|m| m.with_note(format!("{note}; oracle declined, replay"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l1(n: usize) -> NormedSpace {
        NormedSpace::lp(1.0, n).unwrap()
    }

    struct NonDecreasing;
    impl Strategy for NonDecreasing {
        fn name(&self) -> String {
            "bad".into()
        }
        fn next_move(&mut self, h: &[PlayedMove], _: &ClassGenerator, _: u64) -> Result<Move> {
            let last = h.last().unwrap();
            Ok(Move::new(last.space.clone(), Some(LinearMap::identity(&last.space)), last.epsilon))
        }
    }

    #[test]
    fn replay_game_is_legal() {
        let class = ClassGenerator::lp(1.0, 3).unwrap();
        let e = l1(2);
        let mut a = Replay { opening: e.clone(), eps1: 0.1 };
        let mut b = Replay { opening: e.clone(), eps1: 0.1 };
        let t = referee(&mut a, &mut b, 6, &class, REFEREE_TOL, 1, None).unwrap();
        assert!(t.legal);
        assert!(t.horizon_space.as_ref().unwrap().same_as(&e));
        let eps6 = 0.1 / 32.0;
        assert!((t.declared_tail - 4.0 * eps6).abs() < 1e-15);
        assert_eq!(t.tail_certificate, 2.0 * t.declared_tail);
    }

    #[test]
    fn non_decreasing_epsilon_forfeits() {
        let class = ClassGenerator::lp(1.0, 3).unwrap();
        let mut a = Replay { opening: l1(1), eps1: 0.1 };
        let t = referee(&mut a, &mut NonDecreasing, 4, &class, REFEREE_TOL, 0, None).unwrap();
        assert!(!t.legal);
        let f = t.forfeit.unwrap();
        assert_eq!((f.player, f.stage), (Player::II, 2));
    }

    #[test]
    fn finite_target_against_itself_uses_identities() {
        let e = l1(3);
        let class = ClassGenerator::age(&e);
        let mut a = Replay { opening: e.clone(), eps1: 0.1 };
        let mut b = FiniteDimTarget::new(&e, 0.1).unwrap();
        let t = referee(&mut a, &mut b, 4, &class, REFEREE_TOL, 0, Some(&e)).unwrap();
        assert!(t.legal);
        for m in &t.moves[1..] {
            assert_eq!(m.map_defect, Some(0.0));
        }
        assert_eq!(t.target_estimate.unwrap().stage_distance, 0.0);
    }

    /// Opponent that climbs the coordinate subspaces of the target.
    struct Ladder(NormedSpace);
    impl Strategy for Ladder {
        fn name(&self) -> String {
            "ladder".into()
        }
        fn next_move(&mut self, h: &[PlayedMove], class: &ClassGenerator, _: u64) -> Result<Move> {
            let sub = class.enumerate()[0].clone();
            match h.last() {
                None => Ok(Move::new(sub, None, 0.1)),
                Some(last) => {
                    let m = LinearMap::identity(&last.space).with_spaces(&last.space, &last.space)?;
                    let _ = &self.0;
                    Ok(Move::new(last.space.clone(), Some(m), last.epsilon * 0.6))
                }
            }
        }
    }

    #[test]
    fn finite_target_embeds_subspaces() {
        let e = l1(3);
        let class = ClassGenerator::age(&e);
        let mut b = FiniteDimTarget::new(&e, 0.1).unwrap();
        let t = referee(&mut Ladder(e.clone()), &mut b, 4, &class, REFEREE_TOL, 0, Some(&e)).unwrap();
        assert!(t.legal, "{:?}", t.forfeit);
        assert!(t.moves[1].map_defect.unwrap() <= 1e-6);
    }

    #[test]
    fn random_legal_hilbert_plays_are_legal() {
        let class = ClassGenerator::hilbert(4).unwrap();
        for seed in 0..5 {
            let mut a = RandomLegal::new(0.1, seed);
            let mut b = RandomLegal::new(0.1, seed + 100);
            let t = referee(&mut a, &mut b, 6, &class, REFEREE_TOL, seed, None).unwrap();
            assert!(t.legal, "{:?}", t.forfeit);
        }
    }

    #[test]
    fn single_member_class_reduces_to_replay() {
        let e = l1(2);
        let class = ClassGenerator::explicit("one", vec![e.clone()]).unwrap();
        let mut a = RandomLegal::new(0.1, 3);
        let mut b = RandomLegal::new(0.1, 4);
        let t = referee(&mut a, &mut b, 4, &class, REFEREE_TOL, 0, None).unwrap();
        assert!(t.legal);
        for m in &t.moves[1..] {
            assert!(m.map.as_ref().unwrap().matrix().max_abs_diff(&Matrix::identity(2)) == 0.0);
            assert_eq!(m.note.as_deref(), Some("single-member class"));
        }
    }

    #[test]
    fn net_spoiler_with_line_oracle_is_legal() {
        let class = ClassGenerator::lp(1.0, 8).unwrap();
        let mut a = NetSpoiler::new(&l1(1), 0.9, extend_by_line());
        let mut b = Replay { opening: l1(1), eps1: 0.1 };
        let t = referee(&mut a, &mut b, 6, &class, REFEREE_TOL, 0, None).unwrap();
        assert!(t.legal, "{:?}", t.forfeit);
        assert_eq!(t.horizon_space.unwrap().dim(), 3);
        assert!(a.nets[0].is_some());
    }

    #[test]
    fn referee_certificates_hold() {
        let e = l1(3);
        let class = ClassGenerator::age(&e);
        let mut a = RandomLegal::new(0.1, 9);
        let mut b = FiniteDimTarget::new(&e, 0.1).unwrap();
        let t = referee(&mut a, &mut b, 6, &class, REFEREE_TOL, 9, Some(&e)).unwrap();
        assert!(t.legal, "{:?}", t.forfeit);
        let sys = t.system.as_ref().unwrap();
        for n in 1..=6 {
            let c = sys.compose_checked(n, 6).unwrap();
            let raw: f64 = t.moves[n - 1..5].iter().map(|m| m.epsilon).sum();
            assert!(c.certificate.defect <= raw + 6.0 * REFEREE_TOL + 1e-12);
        }
    }
}
