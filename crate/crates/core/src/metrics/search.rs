//! Multistart search for low-defect embeddings and Banach–Mazur upper bounds.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use super::defect::{embedding_defect, EmbeddingCertificate};
use super::opnorm::half_vertices;
use crate::error::{Error, Result};
use crate::map::LinearMap;
use crate::matrix::Matrix;
use crate::optimize::{nelder_mead, NelderMeadOptions};
use crate::rational::{inverse, rank, rat_from_f64, rat_to_f64, Rat};
use crate::spaces::{NormSpec, NormedSpace};

/// Number of vertex-to-vertex seeds tried before local search.
const VERTEX_SEED_CAP: usize = 512;
/// Raw seeds kept for certification next to the refined ones.
const CERTIFY_RAW: usize = 3;
/// Seed objective below which a candidate is certified before any refinement.
const EARLY_EXIT: f64 = 1e-12;

struct Objective<'a> {
    f: &'a NormedSpace,
    samples: Vec<Vec<f64>>,
    rows: usize,
    cols: usize,
}

impl Objective<'_> {
    /// `log(max ‖Au‖ / min ‖Au‖)` over the unit-vector sample.
    fn eval(&self, a: &[f64]) -> f64 {
        let mut buf = vec![0.0; self.rows];
        let (mut hi, mut lo) = (0.0f64, f64::INFINITY);
        for u in &self.samples {
            for (i, b) in buf.iter_mut().enumerate() {
                *b = a[i * self.cols..(i + 1) * self.cols]
                    .iter()
                    .zip(u)
                    .map(|(x, y)| x * y)
                    .sum();
            }
            let n = self.f.norm(&buf);
            hi = hi.max(n);
            lo = lo.min(n);
        }
        if !(lo > 1e-300) || !hi.is_finite() {
            return f64::INFINITY;
        }
        (hi / lo).ln()
    }
}

fn pullback_of<'a>(e: &'a NormedSpace, f: &NormedSpace) -> Option<&'a Matrix> {
    match e.spec() {
        NormSpec::Pullback { host, map } if host.same_as(f) => Some(map),
        _ => None,
    }
}

fn coordinate_inclusion(rows: usize, cols: usize) -> Matrix {
    let mut d = vec![Rat::from_integer(0.into()); rows * cols];
    for j in 0..cols.min(rows) {
        d[j * cols + j] = Rat::from_integer(1.into());
    }
    Matrix::from_rat(rows, cols, d).expect("shape")
}

/// Maps a basis of `E`-vertices to tuples of `F`-vertices (with signs).
fn vertex_seeds(e: &NormedSpace, f: &NormedSpace, rng: &mut ChaCha8Rng) -> Vec<Matrix> {
    let (Some(ve), Some(vf)) = (half_vertices(e), half_vertices(f)) else {
        return Vec::new();
    };
    let d = e.dim();
    // greedy basis of E among its vertices
    let mut basis: Vec<Vec<Rat>> = Vec::new();
    for v in &ve {
        let mut trial = basis.clone();
        trial.push(v.clone());
        if rank(&trial) == trial.len() {
            basis = trial;
        }
        if basis.len() == d {
            break;
        }
    }
    if basis.len() < d {
        return Vec::new();
    }
    let b = Matrix::from_cols_rat(d, &basis).expect("shape");
    let Some(binv) = inverse(&b.exact_rows()) else {
        return Vec::new();
    };
    let binv = Matrix::from_rows_rat(&binv).expect("shape");
    let choices = 2 * vf.len();
    let total = (choices as f64).powi(d as i32);
    let pick = |idx: &[usize]| -> Matrix {
        let cols: Vec<Vec<Rat>> = idx
            .iter()
            .map(|&c| {
                let v = &vf[c / 2];
                if c % 2 == 0 {
                    v.clone()
                } else {
                    v.iter().map(|x| -x).collect()
                }
            })
            .collect();
        Matrix::from_cols_rat(f.dim(), &cols)
            .expect("shape")
            .mul(&binv)
            .expect("shape")
    };
    let mut out = Vec::new();
    if total <= VERTEX_SEED_CAP as f64 {
        let total = total as usize;
        for mut k in 0..total {
            let mut idx = vec![0; d];
            for slot in idx.iter_mut() {
                *slot = k % choices;
                k /= choices;
            }
            out.push(pick(&idx));
        }
    } else {
        for _ in 0..VERTEX_SEED_CAP {
            let idx: Vec<usize> = (0..d).map(|_| rng.random_range(0..choices)).collect();
            out.push(pick(&idx));
        }
    }
    out
}

fn gaussian(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    (0..rows * cols).map(|_| rng.sample(StandardNormal)).collect()
}

/// Random matrix with orthonormal columns (Gram–Schmidt on a Gaussian sample).
fn orthonormal(rows: usize, cols: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let g = gaussian(rows, cols, rng);
    let mut q: Vec<Vec<f64>> = Vec::new();
    for j in 0..cols {
        let mut v: Vec<f64> = (0..rows).map(|i| g[i * cols + j]).collect();
        for w in &q {
            let d: f64 = v.iter().zip(w).map(|(a, b)| a * b).sum();
            for (a, b) in v.iter_mut().zip(w) {
                *a -= d * b;
            }
        }
        let n = v.iter().map(|a| a * a).sum::<f64>().sqrt().max(1e-300);
        q.push(v.iter().map(|a| a / n).collect());
    }
    (0..rows * cols).map(|k| q[k % cols][k / cols]).collect()
}

fn equiangular(rows: usize) -> Matrix {
    let data = (0..rows)
        .flat_map(|k| {
            let t = std::f64::consts::PI * k as f64 / rows as f64;
            [t.cos(), t.sin()]
        })
        .collect();
    Matrix::from_f64(rows, 2, data).expect("finite")
}

/// Rescales `t` by `1/√(‖T‖·m(T))` so that both halves of the defect balance.
pub fn balance(cert: &EmbeddingCertificate) -> Result<EmbeddingCertificate> {
    let n = cert.norm.value;
    let m = cert.gain.value;
    if !(n > 0.0 && m > 0.0 && n.is_finite() && m.is_finite()) {
        return Ok(cert.clone());
    }
    let s = 1.0 / (n * m).sqrt();
    if (s - 1.0).abs() < 1e-15 {
        return Ok(cert.clone());
    }
    let scaled = cert.map.scaled(&rat_from_f64(s)?);
    let c2 = embedding_defect(&scaled);
    Ok(if c2.defect <= cert.defect { c2 } else { cert.clone() })
}

/// Lowest-defect map `E → F` found by a seeded multistart search. The
/// result is an upper bound on the optimal defect, never a claim of optimality.
pub fn best_embedding(
    e: &NormedSpace,
    f: &NormedSpace,
    budget: usize,
    seed: u64,
) -> Result<EmbeddingCertificate> {
    let (d, n) = (e.dim(), f.dim());
    if d > n {
        return Err(Error::param(format!(
            "cannot embed a {d}-dimensional space into a {n}-dimensional one"
        )));
    }
    if d == 0 {
        return Ok(embedding_defect(&LinearMap::zero(e, f)));
    }
    if e.same_as(f) {
        return balance(&embedding_defect(&LinearMap::identity(e)));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut seeds: Vec<Matrix> = Vec::new();
    if let Some(a) = pullback_of(e, f) {
        seeds.push(a.clone());
    }
    if let Some(a) = pullback_of(f, e) {
        if a.rows() == a.cols() {
            if let Some(inv) = inverse(&a.exact_rows()) {
                seeds.push(Matrix::from_rows_rat(&inv)?);
            }
        }
    }
    seeds.push(coordinate_inclusion(n, d));
    seeds.extend(vertex_seeds(e, f, &mut rng));
    if d == 2 && n > 2 {
        seeds.push(equiangular(n));
    }
    let n_random = 8 + budget / 200;
    for k in 0..n_random {
        let data = if k % 2 == 0 {
            orthonormal(n, d, &mut rng)
        } else {
            gaussian(n, d, &mut rng)
        };
        seeds.push(Matrix::from_f64(n, d, data)?);
    }

    let sample_count = if d == 2 { 96 } else { 40 * d };
    let obj = Objective {
        f,
        samples: e.sphere_samples(sample_count),
        rows: n,
        cols: d,
    };
    let mut scored: Vec<(f64, usize)> = seeds
        .par_iter()
        .enumerate()
        .map(|(i, s)| (obj.eval(s.data()), i))
        .collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    let certify = |m: &Matrix| -> Result<EmbeddingCertificate> {
        balance(&embedding_defect(&LinearMap::new(e, f, m.clone())?))
    };
    let mut best: Option<EmbeddingCertificate> = None;
    let consider = |c: EmbeddingCertificate, best: &mut Option<EmbeddingCertificate>| {
        if best.as_ref().is_none_or(|b| c.defect < b.defect) {
            *best = Some(c);
        }
    };
    for &(v, i) in scored.iter().take(CERTIFY_RAW) {
        if v.is_finite() {
            consider(certify(&seeds[i])?, &mut best);
        }
    }
    if best.as_ref().is_some_and(|b| b.defect <= EARLY_EXIT) {
        return Ok(best.expect("checked"));
    }

    let restarts = (budget / 400).clamp(2, 8).min(scored.len());
    let per = (budget / restarts).max(50);
    let refined: Vec<(f64, usize, Vec<f64>)> = scored
        .iter()
        .take(restarts)
        .collect::<Vec<_>>()
        .par_iter()
        .map(|&&(_, i)| {
            let x0 = seeds[i].data().to_vec();
            let scale = x0.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-3);
            let mut f = |x: &[f64]| obj.eval(x);
            let (x, v, _) = nelder_mead(
                &mut f,
                &x0,
                NelderMeadOptions {
                    initial_step: 0.1 * scale,
                    max_evals: per,
                    f_tol: 1e-13,
                    x_tol: 1e-12 * scale,
                },
            );
            (v, i, x)
        })
        .collect();
    let mut refined = refined;
    refined.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    for (v, _, x) in refined.iter().take(3) {
        if v.is_finite() {
            consider(certify(&Matrix::from_f64(n, d, x.clone())?)?, &mut best);
        }
    }
    best.ok_or_else(|| Error::Budget("no injective candidate found".into()))
}

/// Banach–Mazur bracket `[lower, upper]` for `log d(E, F)`.
#[derive(Debug, Clone)]
pub struct BanachMazur {
    pub upper: f64,
    pub lower: f64,
    /// Map realizing `upper`, from the first space to the second when possible.
    pub witness: EmbeddingCertificate,
    pub lower_certified: bool,
    pub lower_cells: usize,
}

/// Upper bound by searching both directions; certified lower bound in dimension ≤ 2.
pub fn banach_mazur(e: &NormedSpace, f: &NormedSpace, budget: usize, seed: u64) -> Result<BanachMazur> {
    if e.dim() != f.dim() {
        return Err(Error::DimensionMismatch {
            expected: e.dim(),
            got: f.dim(),
        });
    }
    let fwd = best_embedding(e, f, budget, seed)?;
    let bwd = best_embedding(f, e, budget, seed)?;
    let mut witness = fwd;
    if let Some(c) = invert(&bwd)? {
        if c.distortion() < witness.distortion() {
            witness = c;
        }
    }
    let mut upper = witness.distortion().max(0.0);
    if let Some(r) = witness.distortion_exact() {
        upper = rat_to_f64(&r).ln().max(0.0);
    }
    let (lower, lower_certified, cells) = match e.dim() {
        _ if upper == 0.0 => (0.0, true, 0),
        0 | 1 => (0.0, true, 0),
        2 => {
            let lb = super::bm_lower::lower_bound_2d(e, f, upper, super::bm_lower::DEFAULT_GAP, super::bm_lower::DEFAULT_CELLS)?;
            (lb.value.min(upper), true, lb.cells)
        }
        _ => (0.0, true, 0),
    };
    Ok(BanachMazur {
        upper,
        lower,
        witness,
        lower_certified,
        lower_cells: cells,
    })
}

/// Inverse certificate of an onto map (`E → F` becomes `F → E`).
fn invert(c: &EmbeddingCertificate) -> Result<Option<EmbeddingCertificate>> {
    let m = c.map.matrix();
    if m.rows() != m.cols() || c.gain.value <= 0.0 {
        return Ok(None);
    }
    let Some(inv) = inverse(&m.exact_rows()) else {
        return Ok(None);
    };
    let inv = Matrix::from_rows_rat(&inv)?;
    let map = LinearMap::new(c.map.codomain(), c.map.domain(), inv)?;
    Ok(Some(balance(&embedding_defect(&map))?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sp(p: f64, n: usize) -> NormedSpace {
        NormedSpace::lp(p, n).unwrap()
    }

    #[test]
    fn identity_and_isometric_pairs() {
        let e = sp(3.0, 2);
        assert_eq!(best_embedding(&e, &e, 500, 1).unwrap().defect, 0.0);
        let c = best_embedding(&sp(1.0, 2), &sp(f64::INFINITY, 2), 500, 1).unwrap();
        assert!(c.defect <= 1e-9 && c.is_exact(), "{}", c.defect);
        assert!(best_embedding(&sp(1.0, 3), &sp(1.0, 2), 100, 1).is_err());
    }

    #[test]
    fn deterministic_given_seed() {
        let (e, f) = (sp(2.0, 2), sp(1.0, 3));
        let a = best_embedding(&e, &f, 800, 9).unwrap();
        let b = best_embedding(&e, &f, 800, 9).unwrap();
        assert_eq!(a.map.matrix(), b.map.matrix());
        assert_eq!(a.defect, b.defect);
    }
}
