//! The thirteen acceptance criteria, each with its own oracle.

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::PathBuf;
use std::time::Instant;

use fdban_core::classes::{
    amalg_pair_check, iso_group, lq_into_lpn, orbit_covering_estimate, perturb_within,
    ClassGenerator, ChallengeStatus, OrbitSpace, Verdict,
};
use fdban_core::constructions::{lplq_complemented, pushout_amalgam};
use fdban_core::game::{referee, FiniteDimTarget, RandomLegal, REFEREE_TOL};
use fdban_core::limits::{LimitSystem, Tail};
use fdban_core::metrics::{banach_mazur, embedding_defect, operator_norm_of, perturbation_bound};
use fdban_core::polytope::{sign_vectors, unit_vectors};
use fdban_core::rational::{rat, rat_int, rat_to_f64};
use fdban_core::{Error, LinearMap, Matrix, NormedSpace, Rat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::Value;

/// Runs the CLI on an argument vector and returns `(exit code, stdout bytes)`.
pub type Exec<'a> = &'a dyn Fn(&[String]) -> (i32, Vec<u8>);

#[derive(Debug, Clone)]
pub struct CriterionResult {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl CriterionResult {
    /// One line for logs; timing is kept out of reports.
    pub fn line(&self) -> String {
        format!(
            "criterion {:>2} {:<4} {:<36} {} ({:.1}s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.detail,
            self.seconds
        )
    }
}

type Check = Result<String, String>;

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn core<T>(r: fdban_core::Result<T>) -> Result<T, String> {
    r.map_err(|e: Error| e.to_string())
}

pub const NAMES: [&str; 13] = [
    "exact-layer banach-mazur",
    "planar bracket l1 vs l2",
    "composition law",
    "perturbation estimate",
    "directed limits",
    "game soundness",
    "pushout amalgam",
    "euclidean amalgamation",
    "isometry groups",
    "lq into lp^N numerics",
    "complemented embeddings",
    "orbit covering echo",
    "cli determinism",
];

/// Runs the selected criteria (all when `only` is `None`).
pub fn run_all(only: Option<&[u32]>, exec: Exec) -> Vec<CriterionResult> {
    (1..=13u32)
        .filter(|id| only.is_none_or(|o| o.contains(id)))
        .map(|id| run_one(id, exec))
        .collect()
}

pub fn run_one(id: u32, exec: Exec) -> CriterionResult {
    let start = Instant::now();
    let outcome = catch_unwind(AssertUnwindSafe(|| match id {
        1 => c01_exact_bm(),
        2 => c02_planar_bracket(),
        3 => c03_composition(),
        4 => c04_perturbation(),
        5 => c05_limits(),
        6 => c06_game(),
        7 => c07_pushout(),
        8 => c08_hilbert(),
        9 => c09_isometry_groups(),
        10 => c10_lq_embeddings(),
        11 => c11_complemented(),
        12 => c12_orbits(),
        13 => c13_determinism(exec),
        _ => Err(format!("no criterion {id}")),
    }))
    .unwrap_or_else(|p| {
        let msg = p
            .downcast_ref::<String>()
            .cloned()
            .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
            .unwrap_or_else(|| "panic".into());
        Err(format!("panicked: {msg}"))
    });
    let seconds = start.elapsed().as_secs_f64();
    let (passed, detail) = match outcome {
        Ok(d) => (true, d),
        Err(d) => (false, d),
    };
    CriterionResult {
        id,
        name: NAMES.get(id as usize - 1).copied().unwrap_or("unknown"),
        passed,
        detail,
        seconds,
    }
}

fn within_time(start: Instant, limit: f64, what: &str) -> Result<f64, String> {
    let t = start.elapsed().as_secs_f64();
    ensure(t < limit, || format!("{what} took {t:.1}s, limit {limit}s"))?;
    Ok(t)
}

fn sp(p: f64, n: usize) -> NormedSpace {
    NormedSpace::lp(p, n).expect("valid exponent")
}

/// A full-dimensional symmetric polytope with small integer vertices.
fn random_polytope(dim: usize, rng: &mut ChaCha8Rng) -> NormedSpace {
    loop {
        let count = rng.random_range(dim..=dim + 3);
        let pts: Vec<Vec<Rat>> = (0..count)
            .map(|_| (0..dim).map(|_| rat_int(rng.random_range(-4..=4))).collect())
            .collect();
        if let Ok(s) = NormedSpace::vertex_ball(dim, &pts) {
            if s.polytope().is_some() {
                return s;
            }
        }
    }
}

fn random_injective(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Matrix {
    loop {
        let data: Vec<Rat> = (0..rows * cols).map(|_| rat_int(rng.random_range(-3..=3))).collect();
        let m = Matrix::from_rat(rows, cols, data).expect("sizes");
        if m.rank() == cols {
            return m;
        }
    }
}

/// Signed permutation matrices mapping the ball of `x` onto itself, by brute force.
fn signed_permutation_symmetries(x: &NormedSpace) -> usize {
    let n = x.dim();
    let mut count = 0;
    let mut perm: Vec<usize> = (0..n).collect();
    let probes: Vec<Vec<f64>> = x.sphere_samples(64);
    loop {
        for mask in 0..(1u32 << n) {
            let apply = |v: &[f64]| -> Vec<f64> {
                (0..n)
                    .map(|i| {
                        let s = if mask >> i & 1 == 1 { -1.0 } else { 1.0 };
                        s * v[perm[i]]
                    })
                    .collect()
            };
            if probes.iter().all(|v| (x.norm(&apply(v)) - x.norm(v)).abs() < 1e-12) {
                count += 1;
            }
        }
        // next permutation in lexicographic order
        let Some(i) = (0..n.saturating_sub(1)).rev().find(|&i| perm[i] < perm[i + 1]) else {
            break;
        };
        let j = (i + 1..n).rev().find(|&j| perm[j] > perm[i]).expect("successor");
        perm.swap(i, j);
        perm[i + 1..].reverse();
    }
    count
}

fn c01_exact_bm() -> Check {
    let start = Instant::now();
    let (l1, linf) = (sp(1.0, 2), sp(f64::INFINITY, 2));
    let bm = core(banach_mazur(&l1, &linf, 400, 1))?;
    ensure(bm.upper <= 1e-9, || format!("d(ℓ₁², ℓ∞²) upper {}", bm.upper))?;
    ensure(bm.witness.is_exact(), || "witness is not exact".into())?;
    // oracle: an onto isometry maps the four vertices ±e_i of the cross-polytope
    // to points of ℓ∞-norm one and its inverse maps (±1, ±1) to ℓ₁-norm one
    let w = bm.witness.map.clone();
    let (t, forward) = if w.domain().same_as(&l1) { (w.matrix().clone(), true) } else { (w.matrix().clone(), false) };
    let t_inv_rows = fdban_core::rational::inverse(&t.exact_rows()).ok_or("witness is singular")?;
    let t_inv = core(Matrix::from_rows_rat(&t_inv_rows))?;
    let (to_cube, to_cross) = if forward { (t, t_inv) } else { (t_inv, t) };
    for v in unit_vectors(2) {
        let img = to_cube.apply_exact(&v);
        ensure(linf.norm_exact(&img) == Some(Rat::from_integer(1.into())), || format!("vertex {v:?} not on the cube"))?;
    }
    for v in sign_vectors(2) {
        let img = to_cross.apply_exact(&v);
        ensure(l1.norm_exact(&img) == Some(Rat::from_integer(1.into())), || format!("vertex {v:?} not on the cross-polytope"))?;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(101);
    for i in 0..20 {
        let e = random_polytope(rng.random_range(2..=3), &mut rng);
        let b = core(banach_mazur(&e, &e, 100, i))?;
        ensure(b.upper == 0.0, || format!("d(E, E) = {} for {}", b.upper, e.label()))?;
    }
    let t = within_time(start, 5.0, "criterion 1")?;
    Ok(format!("d(ℓ₁²,ℓ∞²) ≤ {:.1e}, 20 self-distances 0, {t:.2}s", bm.upper))
}

fn c02_planar_bracket() -> Check {
    let start = Instant::now();
    let bm = core(banach_mazur(&sp(1.0, 2), &sp(2.0, 2), 400, 2))?;
    let target = 0.5 * 2f64.ln();
    ensure(bm.upper <= target + 1e-3, || format!("upper {} > log√2 + 1e-3", bm.upper))?;
    ensure(bm.lower_certified && bm.lower >= target - 1e-2, || format!("lower {} < log√2 − 1e-2", bm.lower))?;
    let t = within_time(start, 60.0, "criterion 2")?;
    Ok(format!("[{:.5}, {:.5}] around log√2 = {target:.5}, {t:.1}s", bm.lower, bm.upper))
}

fn c03_composition() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(303);
    let mut worst = f64::NEG_INFINITY;
    for _ in 0..1000 {
        let d1 = 2;
        let d2 = rng.random_range(2..=3);
        let d3 = rng.random_range(d2..=3);
        let (e, f, g) = (random_polytope(d1, &mut rng), random_polytope(d2, &mut rng), random_polytope(d3, &mut rng));
        let t = core(LinearMap::new(&e, &f, random_injective(d2, d1, &mut rng)))?;
        let s = core(LinearMap::new(&f, &g, random_injective(d3, d2, &mut rng)))?;
        let st = core(s.compose(&t))?;
        let (a, b, c) = (embedding_defect(&s).defect, embedding_defect(&t).defect, embedding_defect(&st).defect);
        ensure(c <= a + b + 1e-9, || format!("defect(S∘T) = {c} > {a} + {b}"))?;
        worst = worst.max(c - a - b);
    }
    Ok(format!("1000 triples, max defect(S∘T) − defect(S) − defect(T) = {worst:.3e}"))
}

fn c04_perturbation() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(404);
    let one = Rat::from_integer(1.into());
    let mut done = 0;
    let mut tightest = f64::INFINITY;
    while done < 200 {
        let n = rng.random_range(2..=3);
        let x = random_polytope(n, &mut rng);
        let k = rng.random_range(1..=n);
        let basis: Vec<Vec<Rat>> = (0..k).map(|_| (0..n).map(|_| rat_int(rng.random_range(-3..=3))).collect()).collect();
        let Ok(b0) = perturbation_bound(&x, &basis, 0.0) else { continue };
        let total: f64 = b0.functional_norms.iter().sum();
        // dyadic ε = u/1024 so the float handed over is exact; δ = ε Σ‖f_i‖ ≤ 0.9
        let max_u = ((921.6 / total).floor() as i64).max(1);
        let eps = rat(rng.random_range(1..=max_u), 1024);
        let pb = core(perturbation_bound(&x, &basis, rat_to_f64(&eps)))?;
        let delta = pb.delta_exact.clone().ok_or("perturbation bound is not exact")?;
        if delta >= one {
            continue;
        }
        let mut cols = Vec::new();
        for e in &basis {
            let z: Vec<Rat> = (0..n).map(|_| rat_int(rng.random_range(-5..=5))).collect();
            let zn = x.norm_exact(&z).ok_or("no exact norm")?;
            let scale = if zn == Rat::from_integer(0.into()) { Rat::from_integer(0.into()) } else { &eps * rat(rng.random_range(0..=10), 10) / zn };
            cols.push(e.iter().zip(&z).map(|(a, b)| a + b * &scale).collect::<Vec<Rat>>());
        }
        let b = core(Matrix::from_cols_rat(n, &basis))?;
        let y = core(Matrix::from_cols_rat(n, &cols))?;
        let span = core(NormedSpace::pullback(&x, b.clone()))?;
        let t = core(LinearMap::new(&span, &x, y.clone()))?;
        let cert = embedding_defect(&t);
        ensure(cert.is_exact(), || "defect not exact".into())?;
        let (nt, mt) = (cert.norm.exact.clone().ok_or("norm")?, cert.gain.exact.clone().ok_or("gain")?);
        ensure(nt <= &one + &delta && mt >= &one - &delta, || format!("‖T‖ = {nt}, m(T) = {mt}, δ = {delta}"))?;
        ensure(cert.defect <= pb.defect_bound + 1e-12, || format!("defect {} > bound {}", cert.defect, pb.defect_bound))?;
        let diff = operator_norm_of(&span, &x, &core(y.sub(&b))?);
        let d = diff.exact.ok_or("‖T − Id‖ not exact")?;
        ensure(d <= delta, || format!("‖T − Id‖ = {d} > δ = {delta}"))?;
        tightest = tightest.min(pb.defect_bound - cert.defect);
        done += 1;
    }
    Ok(format!("200 exact instances, least slack {tightest:.3e}"))
}

fn c05_limits() -> Check {
    // constant identities with ε_n = 2^{-n}/10 and a geometric tail
    let x = sp(1.0, 2);
    let mut sys = LimitSystem::new(x.clone());
    let stages = 8;
    let eps = |n: usize| 0.1 * 0.5f64.powi(n as i32);
    for n in 1..stages {
        core(sys.push(LinearMap::identity(&x), eps(n)))?;
    }
    core(sys.set_tail(Tail::Geometric { ratio: 0.5 }))?;
    for k in 1..=stages {
        let r = 2.0 * eps(k);
        let b = core(sys.limit_norm(1, &[0.5, -0.5], k))?;
        ensure(b.contains(1.0), || format!("bracket at {k} misses 1"))?;
        ensure((b.lo - (-r).exp()).abs() <= 1e-15 && (b.hi - r.exp()).abs() <= 1e-15, || {
            format!("bracket [{}, {}] at {k}, expected [e^-{r}, e^{r}]", b.lo, b.hi)
        })?;
    }
    // scalar systems x ↦ (1 + δ_n) x with δ_n = 2^{-n}/4
    let line = sp(1.0, 1);
    let delta = |n: usize| 0.25 * 0.5f64.powi(n as i32);
    let mut scal = LimitSystem::new(line.clone());
    for n in 1..stages {
        let m = core(Matrix::from_rows_rat(&[vec![&rat_int(1) + rat(1, 4 << n)]]))?;
        core(scal.push(core(LinearMap::new(&line, &line, m))?, (1.0 + delta(n)).ln()))?;
    }
    core(scal.set_tail(Tail::Beyond(delta(stages - 1))))?;
    let product: f64 = (1..200).map(|n| 1.0 + delta(n)).product();
    for k in 1..=stages {
        let b = core(scal.limit_norm(1, &[1.0], k))?;
        ensure(b.contains(product), || format!("Π(1+δ) = {product} outside [{}, {}] at {k}", b.lo, b.hi))?;
    }
    // composition law on random chains
    let mut rng = ChaCha8Rng::seed_from_u64(505);
    for _ in 0..100 {
        let len = rng.random_range(3..=5);
        let mut dim = 2;
        let mut sys = LimitSystem::new(random_polytope(dim, &mut rng));
        for _ in 1..len {
            let next_dim = if dim < 3 && rng.random_bool(0.3) { dim + 1 } else { dim };
            let next = random_polytope(next_dim, &mut rng);
            let prev = core(sys.space(sys.len()))?.clone();
            let f = core(LinearMap::new(&prev, &next, random_injective(next_dim, dim, &mut rng)))?;
            let d = embedding_defect(&f).defect;
            core(sys.push(f, d))?;
            dim = next_dim;
        }
        for n in 1..=sys.len() {
            for k in n..=sys.len() {
                let c = core(sys.compose_checked(n, k))?;
                ensure(c.holds(), || format!("compose({n},{k}) defect {} > Σε = {}", c.certificate.defect, c.bound))?;
            }
        }
    }
    Ok(format!("identity brackets exact, Π(1+δ_n) = {product:.12} in all brackets, 100 chains obey Σε"))
}

fn c06_game() -> Check {
    let start = Instant::now();
    let target = sp(1.0, 3);
    let class = ClassGenerator::age(&target);
    let mut worst: f64 = 0.0;
    for seed in 0..20u64 {
        let mut first = RandomLegal::new(0.1, seed);
        let mut second = core(FiniteDimTarget::new(&target, 0.1))?;
        let t = core(referee(&mut first, &mut second, 12, &class, REFEREE_TOL, seed, Some(&target)))?;
        ensure(t.legal, || format!("seed {seed}: illegal transcript {:?}", t.forfeit))?;
        let upper = t.target_estimate.as_ref().map_or(f64::INFINITY, |e| e.upper);
        ensure(upper <= 0.05, || format!("seed {seed}: upper {upper}"))?;
        worst = worst.max(upper);
    }
    let t = within_time(start, 300.0, "criterion 6")?;
    Ok(format!("20 seeds legal, max target upper {worst:.3e}, {t:.1}s"))
}

/// An isometric copy of `f`: either `A·B_F` with `ψ = A`, or `F ⊕₁ ℝ` with the inclusion.
fn isometric_extension(f: &NormedSpace, rng: &mut ChaCha8Rng) -> Result<(NormedSpace, Matrix), String> {
    let d = f.dim();
    if rng.random_bool(0.5) {
        let line = sp(1.0, 1);
        let g = core(NormedSpace::p_sum(f, &line, if rng.random_bool(0.5) { 1.0 } else { f64::INFINITY }))?;
        let inc = core(Matrix::identity(d).vstack(&Matrix::zeros(1, d)))?;
        Ok((g, inc))
    } else {
        let a = random_injective(d, d, rng);
        let verts = f.polytope().ok_or("not a polytope")?.vertices().to_vec();
        let image: Vec<Vec<Rat>> = verts.iter().map(|v| a.apply_exact(v)).collect();
        Ok((core(NormedSpace::vertex_ball(d, &image))?, a))
    }
}

fn c07_pushout() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(707);
    for i in 0..50 {
        let f = random_polytope(2, &mut rng);
        let e_dim = rng.random_range(1..=2);
        let b = random_injective(2, e_dim, &mut rng);
        let e = core(NormedSpace::pullback(&f, b.clone()))?;
        let phi = core(LinearMap::new(&e, &f, b))?;
        let (g, pg) = isometric_extension(&f, &mut rng)?;
        let (h, ph) = isometric_extension(&f, &mut rng)?;
        let a = core(pushout_amalgam(&phi, &core(LinearMap::new(&f, &g, pg))?, &core(LinearMap::new(&f, &h, ph))?))?;
        ensure(a.is_exact_isometric(), || format!("instance {i}: not exactly isometric"))?;
        ensure(a.iota_defects() == (0.0, 0.0) && a.discrepancy == 0.0, || format!("instance {i}: {:?}", a.iota_defects()))?;
    }
    // regression set: ψ's perturbed to certified defect ≤ 0.1
    let mut worst: f64 = 0.0;
    for i in 0..20 {
        let f = if i % 2 == 0 { sp(1.0, 2) } else { random_polytope(2, &mut rng) };
        let phi = LinearMap::identity(&f);
        let mut psis = Vec::new();
        while psis.len() < 2 {
            let (g, m) = isometric_extension(&f, &mut rng)?;
            let m = rationalize(&core(perturb_within(&f, &g, m, 0.09, &mut rng))?);
            let psi = core(LinearMap::new(&f, &g, m))?;
            let d = embedding_defect(&psi).defect;
            if d <= 0.1 {
                psis.push(psi);
            }
        }
        let a = core(pushout_amalgam(&phi, &psis[0], &psis[1]))?;
        let (dg, dh) = a.iota_defects();
        ensure(dg <= 0.2 + 1e-9 && dh <= 0.2 + 1e-9, || format!("regression {i}: ι defects {dg}, {dh}"))?;
        worst = worst.max(dg).max(dh);
    }
    Ok(format!("50 exact instances isometric, 20 perturbed with ι defects ≤ {worst:.4}"))
}

/// Rounds to a grid of 2^-8 so the pushout runs in exact arithmetic with small denominators.
fn rationalize(m: &Matrix) -> Matrix {
    let data: Vec<Rat> = m
        .data()
        .iter()
        .map(|v| Rat::new(((v * 256.0).round() as i64).into(), 256.into()))
        .collect();
    Matrix::from_rat(m.rows(), m.cols(), data).expect("sizes")
}

fn c08_hilbert() -> Check {
    let class = core(ClassGenerator::hilbert(4))?;
    let e = sp(2.0, 2);
    let phi = LinearMap::identity(&e);
    let v = core(amalg_pair_check(&class, &phi, 0.1, 0.0, 100, 8))?;
    let Verdict::NoCounterexampleFound(stats) = v else {
        return Err("Euclidean class falsified".into());
    };
    ensure(stats.challenges == 100, || format!("{} challenges", stats.challenges))?;
    let worst = stats.outcomes.iter().map(|o| o.best_discrepancy).fold(0.0, f64::max);
    ensure(stats.outcomes.iter().all(|o| o.status == ChallengeStatus::Amalgamated), || {
        format!("{} of 100 amalgamated", stats.amalgamated)
    })?;
    ensure(worst <= 1e-8, || format!("discrepancy {worst}"))?;
    Ok(format!("100 challenges amalgamated, max discrepancy {worst:.2e}"))
}

fn c09_isometry_groups() -> Check {
    for x in [sp(1.0, 2), sp(f64::INFINITY, 2)] {
        let g = core(iso_group(&x))?;
        let oracle = signed_permutation_symmetries(&x);
        ensure(g.len() == 8 && oracle == 8, || format!("{}: order {} (brute force {oracle})", x.label(), g.len()))?;
        for a in &g {
            for b in &g {
                let ab = core(a.matrix().mul(b.matrix()))?;
                ensure(g.iter().any(|c| c.matrix().exact_data() == ab.exact_data()), || "not closed".into())?;
            }
        }
    }
    let asym = core(NormedSpace::vertex_ball(
        2,
        &[vec![rat_int(1), rat_int(0)], vec![rat(1, 3), rat_int(1)], vec![rat(-2, 3), rat(2, 3)]],
    ))?;
    let g = core(iso_group(&asym))?;
    ensure(g.len() == 2, || format!("asymmetric hexagon has {} isometries", g.len()))?;
    let id = Matrix::identity(2);
    let minus = id.scale_rat(&rat_int(-1));
    ensure(
        g.iter().all(|m| m.matrix().exact_data() == id.exact_data() || m.matrix().exact_data() == minus.exact_data()),
        || "group is not {±Id}".into(),
    )?;
    Ok("|Iso(ℓ₁²)| = |Iso(ℓ∞²)| = 8, closed; hexagon gives {±Id}".into())
}

fn c10_lq_embeddings() -> Check {
    let start = Instant::now();
    let a = core(lq_into_lpn(2.0, 1.0, 0.05, 128, 0))?;
    ensure(a.met, || format!("ℓ₂ → ℓ₁^N defect {}", a.certificate.defect))?;
    // oracle: equiangular rows are within sec(π/2N) of the Euclidean norm
    let sec = 0.5 * (1.0 / (std::f64::consts::PI / (2.0 * a.n as f64)).cos()).ln();
    ensure(a.certificate.defect <= sec + 1e-9, || format!("defect {} above equiangular {sec}", a.certificate.defect))?;
    let b = core(lq_into_lpn(1.5, 1.0, 0.1, 256, 0))?;
    ensure(b.met, || format!("ℓ_1.5 → ℓ₁^N defect {}", b.certificate.defect))?;
    match lq_into_lpn(4.0, 1.0, 0.1, 64, 0) {
        Err(Error::Refused(msg)) if msg.contains("q = p, q = 2 or p < q < 2") => {}
        other => return Err(format!("(4, 1) not refused: {other:?}")),
    }
    let t = within_time(start, 600.0, "criterion 10")?;
    Ok(format!(
        "ℓ₂→ℓ₁^{} defect {:.4}, ℓ_1.5→ℓ₁^{} defect {:.4}, (4,1) refused, {t:.1}s",
        a.n, a.certificate.defect, b.n, b.certificate.defect
    ))
}

fn c11_complemented() -> Check {
    let mut worst = (0.0f64, 0.0f64, 0.0f64);
    for (p, q, n, k) in [(1.0, 2.0, 2, 2), (2.0, 3.0, 3, 2), (3.0, 1.0, 2, 3)] {
        let c = core(lplq_complemented(p, q, n, k))?;
        ensure(c.samples == 10_000, || format!("{} samples", c.samples))?;
        let jd = c.j_p_defect.max(c.j_q_defect);
        let qj = c.qj_p_error.max(c.qj_q_error);
        let jq = c.jq_p_norm.max(c.jq_q_norm);
        ensure(jd <= 1e-12, || format!("({p},{q},{n},{k}): J defect {jd}"))?;
        ensure(qj <= 1e-12, || format!("({p},{q},{n},{k}): Q∘J error {qj}"))?;
        ensure(jq <= 1.0 + 1e-6, || format!("({p},{q},{n},{k}): ‖J∘Q‖ {jq}"))?;
        worst = (worst.0.max(jd), worst.1.max(qj), worst.2.max(jq));
    }
    Ok(format!("J defect ≤ {:.1e}, Q∘J error ≤ {:.1e}, ‖JQ‖ ≤ {:.9}", worst.0, worst.1, worst.2))
}

fn c12_orbits() -> Check {
    let est = |n: usize| orbit_covering_estimate(OrbitSpace::Lp { p: 1.0, n }, 1, None, 0.2, 20_000, 1).map(|e| e.count);
    let (a, b) = (core(est(6))?, core(est(8))?);
    let (lo, hi) = (a.min(b) as f64, a.max(b) as f64);
    ensure(hi - lo <= 0.2 * hi, || format!("N=6: {a}, N=8: {b} differ by more than 20%"))?;
    for n in [2, 6, 8] {
        let e = core(orbit_covering_estimate(OrbitSpace::Lp { p: 2.0, n }, 1, Some(0.0), 0.2, 2_000, 1))?;
        ensure(e.count == 1, || format!("ℓ₂^{n}: {} orbits", e.count))?;
    }
    Ok(format!("ℓ₁⁶: {a}, ℓ₁⁸: {b} (within 20%), ℓ₂^N spheres: 1"))
}

/// Input files for the determinism runs.
struct Scratch(PathBuf);

impl Scratch {
    fn new() -> Result<Self, String> {
        let nanos = std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.subsec_nanos())
            .unwrap_or(0);
        let dir = std::env::temp_dir().join(format!("fdban-selftest-{}-{nanos}", std::process::id()));
        std::fs::create_dir_all(&dir).map_err(|e| e.to_string())?;
        Ok(Scratch(dir))
    }

    fn write(&self, name: &str, body: &str) -> Result<String, String> {
        let p = self.0.join(name);
        std::fs::write(&p, body).map_err(|e| e.to_string())?;
        Ok(p.to_string_lossy().into_owned())
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

/// The argument vectors exercised by the determinism check, with the files they read.
pub fn acceptance_commands(dir: &std::path::Path) -> Result<Vec<Vec<String>>, String> {
    let w = |name: &str, body: &str| -> Result<String, String> {
        let p = dir.join(name);
        std::fs::write(&p, body).map_err(|e| e.to_string())?;
        Ok(p.to_string_lossy().into_owned())
    };
    let l1_2 = w("l1-2.json", r#"{"kind":"lp","p":1,"dim":2}"#)?;
    let linf_2 = w("linf-2.json", r#"{"kind":"lp","p":"inf","dim":2}"#)?;
    let l2_2 = w("l2-2.json", r#"{"kind":"lp","p":2,"dim":2}"#)?;
    let l1_3 = w("l1-3.json", r#"{"kind":"lp","p":1,"dim":3}"#)?;
    let amalg = w(
        "amalgam.json",
        r#"{"e":{"kind":"lp","p":1,"dim":1},"f":{"kind":"lp","p":1,"dim":2},
            "g":{"kind":"lp","p":1,"dim":3},"h":{"kind":"lp","p":"inf","dim":2},
            "phi":{"rows":2,"cols":1,"entries":[[1],[0]]},
            "psi_g":{"rows":3,"cols":2,"entries":[[1,0],[0,1],[0,0]]},
            "psi_h":{"rows":2,"cols":2,"entries":[[1,1],[1,-1]]}}"#,
    )?;
    let limit = w(
        "limit.json",
        r#"{"spaces":[{"kind":"lp","p":1,"dim":1},{"kind":"lp","p":1,"dim":1},{"kind":"lp","p":1,"dim":1}],
            "maps":[{"rows":1,"cols":1,"entries":[["9/8"]]},{"rows":1,"cols":1,"entries":[["17/16"]]}],
            "epsilons":[0.118,0.061],"tail":{"kind":"beyond","bound":0.0625},
            "vectors":[{"stage":1,"x":[1.0]}]}"#,
    )?;
    let s = |v: &[&str]| v.iter().map(|t| t.to_string()).collect::<Vec<String>>();
    Ok(vec![
        s(&["bm", &l1_2, &linf_2]),
        s(&["bm", &l1_2, &l2_2, "--seed", "2"]),
        s(&["embed", "--lq", "2", "--lp", "1", "--target", "0.05", "--nmax", "128"]),
        s(&["amalgamate", &amalg]),
        s(&["limit", &limit]),
        s(&["game", "--target", &l1_3, "--horizon", "12", "--seed", "7"]),
        s(&["class", "probe-gap", "--class", "lplq:1:4", "--E", &l1_2, "--eps", "0.05", "--budget", "100", "--seed", "7"]),
        s(&["class", "check", "--class", "l2:4", "--phi", &w(
            "phi-l2.json",
            r#"{"e":{"kind":"lp","p":2,"dim":1},"f":{"kind":"lp","p":2,"dim":2},"phi":{"rows":2,"cols":1,"entries":[[1],[0]]}}"#,
        )?, "--eps", "0.1", "--delta", "0.05", "--budget", "20", "--seed", "3"]),
        s(&["orbit", "--space", "lp:1:8", "--n", "1", "--eps", "0.2", "--samples", "20000"]),
    ])
}

fn c13_determinism(exec: Exec) -> Check {
    let scratch = Scratch::new()?;
    let _ = scratch.write("README", "scratch inputs for fdban selftest\n")?;
    let commands = acceptance_commands(&scratch.0)?;
    for argv in &commands {
        let (c1, out1) = exec(argv);
        let (c2, out2) = exec(argv);
        ensure(c1 == 0 && c2 == 0, || format!("{argv:?} exited {c1}/{c2}"))?;
        ensure(out1 == out2, || format!("{argv:?}: reports differ"))?;
        let v: Value = serde_json::from_slice(&out1).map_err(|e| format!("{argv:?}: {e}"))?;
        ensure(v.get("wall_time_seconds").is_none(), || "report carries wall time".into())?;
        if argv[0] == "game" {
            // the declared tolerance must be the one the referee applied
            ensure(v["tolerances"]["referee_tolerance"] == serde_json::json!(REFEREE_TOL), || {
                format!("game tolerances {}", v["tolerances"])
            })?;
        }
    }
    Ok(format!("{} commands byte-identical across two runs", commands.len()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn brute_force_symmetry_oracle() {
        assert_eq!(signed_permutation_symmetries(&sp(1.0, 3)), 48);
        assert_eq!(signed_permutation_symmetries(&sp(2.0, 2)), 8);
    }

    #[test]
    fn random_polytopes_are_full_dimensional() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for d in 1..=3 {
            assert_eq!(random_polytope(d, &mut rng).dim(), d);
        }
    }

    #[test]
    fn isometric_extensions_are_isometric() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let f = random_polytope(2, &mut rng);
        for _ in 0..6 {
            let (g, m) = isometric_extension(&f, &mut rng).unwrap();
            assert_eq!(embedding_defect(&LinearMap::new(&f, &g, m).unwrap()).defect, 0.0);
        }
    }

    #[test]
    fn unknown_criterion_fails() {
        let r = run_one(14, &|_: &[String]| (0, Vec::new()));
        assert!(!r.passed);
    }
}
