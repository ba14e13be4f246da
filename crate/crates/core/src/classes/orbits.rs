//! Sampled covering numbers of `(B_X)^n ∕∕ Iso(X)` and `Emb_C(ℓ_p^n, X) ∕∕ Iso(X)`.
//!
//! For `p ≠ 2` the group is the signed permutations and a tuple is
//! canonicalized by sign-normalizing and sorting its coordinate rows; for
//! `n = 1` this is the sorted vector of absolute values and the canonical
//! distance is the exact quotient distance. For `p = 2` the quotient distance
//! `min_U ‖X − UY‖_F = (‖X‖² + ‖Y‖² − 2‖YXᵀ‖_*)^{1/2}` is computed from Gram
//! matrices, which are complete invariants of the orthogonal action.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Exp1, StandardNormal};

use crate::error::{Error, Result};
use crate::spaces::lp_norm;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OrbitSpace {
    Lp { p: f64, n: usize },
}

impl OrbitSpace {
    fn p(&self) -> f64 {
        match self {
            OrbitSpace::Lp { p, .. } => *p,
        }
    }

    fn dim(&self) -> usize {
        match self {
            OrbitSpace::Lp { n, .. } => *n,
        }
    }

    /// Parses `lp:P:N` or `l2:N`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || Error::param(format!("unsupported orbit space {s:?}; expected lp:P:N or l2:N"));
        let num = |t: &str| if t == "inf" { Ok(f64::INFINITY) } else { t.parse::<f64>().map_err(|_| bad()) };
        let (p, n) = match parts.as_slice() {
            ["lp", p, n] => (num(p)?, n.parse::<usize>().map_err(|_| bad())?),
            ["l2", n] => (2.0, n.parse::<usize>().map_err(|_| bad())?),
            _ => return Err(bad()),
        };
        if !(p >= 1.0) || n == 0 {
            return Err(bad());
        }
        Ok(OrbitSpace::Lp { p, n })
    }
}

#[derive(Debug, Clone)]
pub struct OrbitEstimate {
    pub count: usize,
    pub samples: usize,
    /// `signed permutations` or `orthogonal`.
    pub group: &'static str,
    /// Radius of the cover actually used (≤ ε, from the dyadic grid `2^{k/16}`).
    pub radius: f64,
    /// Zero when the quotient distance is computed exactly for the group.
    pub sampling_error: f64,
}

const GRID_STEPS: f64 = 16.0;

/// Uniform point of the unit ball of `ℓ_p^N`.
fn ball_point<R: Rng>(p: f64, n: usize, rng: &mut R) -> Vec<f64> {
    if p.is_infinite() {
        return (0..n).map(|_| rng.random_range(-1.0..=1.0)).collect();
    }
    // generalized Gaussian directions with an exponential radial correction
    let g: Vec<f64> = (0..n)
        .map(|_| {
            let r: f64 = rand_distr::Gamma::new(1.0 / p, 1.0).expect("shape").sample(rng);
            let s = if rng.random_bool(0.5) { 1.0 } else { -1.0 };
            s * r.powf(1.0 / p)
        })
        .collect();
    let z: f64 = Exp1.sample(rng);
    let denom = (g.iter().map(|v| v.abs().powf(p)).sum::<f64>() + z).powf(1.0 / p);
    g.into_iter().map(|v| v / denom).collect()
}

fn unit_point<R: Rng>(p: f64, n: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..n).map(|_| StandardNormal.sample(rng)).collect();
        let nv = lp_norm(&v, p);
        if nv > 0.0 {
            return v.into_iter().map(|x| x / nv).collect();
        }
    }
}

/// A tuple as `N × n` row-major data.
type Tuple = Vec<f64>;

fn canonical_signed(t: &Tuple, n_rows: usize, n: usize) -> Tuple {
    let mut rows: Vec<Vec<f64>> = (0..n_rows).map(|i| t[i * n..(i + 1) * n].to_vec()).collect();
    for r in &mut rows {
        if let Some(first) = r.iter().find(|v| **v != 0.0) {
            if *first < 0.0 {
                r.iter_mut().for_each(|v| *v = -*v);
            }
        }
    }
    rows.sort_by(|a, b| {
        b.iter()
            .map(|v| v.abs())
            .zip(a.iter().map(|v| v.abs()))
            .map(|(x, y)| x.total_cmp(&y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| b.iter().zip(a).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne()).unwrap_or(std::cmp::Ordering::Equal))
    });
    rows.concat()
}

fn signed_distance(a: &Tuple, b: &Tuple, n_rows: usize, n: usize, p: f64) -> f64 {
    (0..n)
        .map(|j| {
            let d: Vec<f64> = (0..n_rows).map(|i| a[i * n + j] - b[i * n + j]).collect();
            lp_norm(&d, p)
        })
        .fold(0.0, f64::max)
}

/// Gram matrix `XᵀX` and its square root.
fn gram(x: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let g = x.transpose() * x;
    let eig = g.clone().symmetric_eigen();
    let sqrt_vals = eig.eigenvalues.map(|v| v.max(0.0).sqrt());
    let root = &eig.eigenvectors * DMatrix::from_diagonal(&sqrt_vals) * eig.eigenvectors.transpose();
    (g, root)
}

/// `min_U ‖X − UY‖_F` from Gram data: the nuclear norm of `Y Xᵀ` is
/// `Σ √λ_i(√G_X G_Y √G_X)`.
fn orthogonal_distance(a: &(DMatrix<f64>, DMatrix<f64>), b: &(DMatrix<f64>, DMatrix<f64>)) -> f64 {
    let s = &a.1 * &b.0 * &a.1;
    let s = (&s + s.transpose()) * 0.5;
    let nuclear: f64 = s.symmetric_eigenvalues().iter().map(|v| v.max(0.0).sqrt()).sum();
    (a.0.trace() + b.0.trace() - 2.0 * nuclear).max(0.0).sqrt()
}

/// Greedy cover size at radius `r`.
fn greedy(count: usize, r: f64, dist: &dyn Fn(usize, usize) -> f64) -> usize {
    let mut centres: Vec<usize> = Vec::new();
    for i in 0..count {
        if !centres.iter().any(|&c| dist(c, i) <= r) {
            centres.push(i);
        }
    }
    centres.len()
}

/// Covering estimate of the quotient by `Iso(X)` at radius `ε`. With `c =
/// None` tuples are drawn from `(B_X)^n`; with `Some(C)` from `Emb_C(ℓ_p^n, X)`
/// (for `n = 1`: vectors with norm in `[e^{-C}, e^C]`).
///
/// The cover size is the least greedy count over grid radii `2^{k/16} ∈ (ε/2, ε]`;
/// a greedy cover at radius `r ≤ ε/2` is never smaller, so the estimate is
/// nonincreasing in `ε`.
pub fn orbit_covering_estimate(
    x: OrbitSpace,
    n: usize,
    c: Option<f64>,
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<OrbitEstimate> {
    if n == 0 || !(eps > 0.0) || samples == 0 {
        return Err(Error::param("tuple length, ε and samples must be positive"));
    }
    let (p, dim) = (x.p(), x.dim());
    if c.is_some_and(|c| c < 0.0) {
        return Err(Error::param("C must be nonnegative"));
    }
    if c.is_some() && n > 1 && n > dim {
        return Err(Error::param("no embeddings of a larger space"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tuples: Vec<Tuple> = Vec::with_capacity(samples);
    let mut tries = 0usize;
    while tuples.len() < samples {
        tries += 1;
        if tries > 200 * samples {
            return Err(Error::Budget("rejection sampling of Emb_C accepted too few tuples".into()));
        }
        let cols: Vec<Vec<f64>> = match c {
            None => (0..n).map(|_| ball_point(p, dim, &mut rng)).collect(),
            Some(cc) if n == 1 => {
                let s = (cc * (2.0 * rng.random::<f64>() - 1.0)).exp();
                vec![unit_point(p, dim, &mut rng).into_iter().map(|v| v * s).collect()]
            }
            Some(cc) => {
                let cols: Vec<Vec<f64>> = (0..n).map(|_| unit_point(p, dim, &mut rng)).collect();
                // accept when the sampled ratios stay inside [e^{-C}, e^C]
                let ok = crate::spaces::spread_directions(n, 64).iter().all(|u| {
                    let y: Vec<f64> = (0..dim).map(|i| cols.iter().zip(u).map(|(col, t)| col[i] * t).sum()).collect();
                    let r = lp_norm(&y, p) / lp_norm(u, p);
                    r.ln().abs() <= cc
                });
                if !ok {
                    continue;
                }
                cols
            }
        };
        tuples.push((0..dim).flat_map(|i| cols.iter().map(move |col| col[i])).collect());
    }
    let kmax = (eps.log2() * GRID_STEPS).floor() as i64;
    let radii: Vec<f64> = (0..GRID_STEPS as i64).map(|j| 2f64.powf((kmax - j) as f64 / GRID_STEPS)).collect();
    let (count, radius, group, err) = if p == 2.0 {
        let mats: Vec<(DMatrix<f64>, DMatrix<f64>)> =
            tuples.iter().map(|t| gram(&DMatrix::from_row_slice(dim, n, t))).collect();
        let dist = |a: usize, b: usize| orthogonal_distance(&mats[a], &mats[b]);
        let (cnt, r) = best_cover(samples, &radii, &dist);
                (cnt, r, "orthogonal", if n == 1 { 0.0 } else { f64::NAN })
    } else {
        let canon: Vec<Tuple> = tuples.iter().map(|t| canonical_signed(t, dim, n)).collect();
        let dist = |a: usize, b: usize| signed_distance(&canon[a], &canon[b], dim, n, p);
        let (cnt, r) = best_cover(samples, &radii, &dist);
        (cnt, r, "signed permutations", if n == 1 { 0.0 } else { f64::NAN })
    };
    Ok(OrbitEstimate {
        count,
        samples,
        group,
        radius,
        sampling_error: err,
    })
}

fn best_cover(samples: usize, radii: &[f64], dist: &(dyn Fn(usize, usize) -> f64 + Sync)) -> (usize, f64) {
    use rayon::prelude::*;
    radii
        .par_iter()
        .map(|&r| (greedy(samples, r, dist), r))
        .collect::<Vec<_>>()
        .into_iter()
        .min_by(|a, b| a.0.cmp(&b.0).then(b.1.total_cmp(&a.1)))
        .expect("nonempty grid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_of_euclidean_space_is_one_orbit() {
        let x = OrbitSpace::Lp { p: 2.0, n: 5 };
        let r = orbit_covering_estimate(x, 1, Some(0.0), 0.01, 500, 3).unwrap();
        assert_eq!(r.count, 1);
    }

    #[test]
    fn diameter_bound() {
        let x = OrbitSpace::Lp { p: 1.0, n: 6 };
        assert_eq!(orbit_covering_estimate(x, 1, None, 2.0, 800, 1).unwrap().count, 1);
    }

    #[test]
    fn canonical_form_is_group_invariant() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let (dim, n) = (5, 2);
        let t: Tuple = (0..dim * n).map(|_| StandardNormal.sample(&mut rng)).collect();
        // apply a signed permutation to the rows
        let perm = [3, 0, 4, 1, 2];
        let signs = [1.0, -1.0, -1.0, 1.0, -1.0];
        let mut u = vec![0.0; dim * n];
        for i in 0..dim {
            for j in 0..n {
                u[perm[i] * n + j] = signs[i] * t[i * n + j];
            }
        }
        assert_eq!(canonical_signed(&t, dim, n), canonical_signed(&u, dim, n));
    }

    #[test]
    fn estimate_is_monotone_in_epsilon() {
        let x = OrbitSpace::Lp { p: 1.0, n: 4 };
        let mut last = usize::MAX;
        for eps in [0.15, 0.2, 0.3, 0.45, 0.7] {
            let c = orbit_covering_estimate(x, 1, None, eps, 1500, 2).unwrap().count;
            assert!(c <= last);
            last = c;
        }
    }
}
