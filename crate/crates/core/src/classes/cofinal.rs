//! Sampled cofinality probes inside a host space.

use nalgebra::{DMatrix, DVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::metrics::best_embedding;
use crate::optimize::minimize_convex;
use crate::spaces::{spread_directions, NormedSpace};

#[derive(Debug, Clone)]
pub struct CofinalRow {
    pub label: String,
    pub dim: usize,
    /// Upper bound on `max_{x ∈ S_E} d(x, S_F)` over the sampled net (`⊆_ε` slack).
    pub slack: f64,
    /// `E ⊆_ε F` on the sample.
    pub within: bool,
    /// Defect of the best map `E → F` found (class-level `Emb_ε(E, F) ≠ ∅`).
    pub emb_defect: f64,
}

#[derive(Debug, Clone)]
pub struct CofinalReport {
    pub host: String,
    pub e_basis: Vec<Vec<f64>>,
    pub epsilon: f64,
    pub samples: usize,
    /// Relation deciding `within`; `emb_defect` reports the class-level one.
    pub relation: &'static str,
    pub rows: Vec<CofinalRow>,
    /// First candidate with `E ⊆_ε F`.
    pub best: Option<usize>,
}

fn check_basis(host: &NormedSpace, basis: &[Vec<f64>]) -> Result<()> {
    if let Some(v) = basis.iter().find(|v| v.len() != host.dim()) {
        return Err(Error::DimensionMismatch { expected: host.dim(), got: v.len() });
    }
    Ok(())
}

fn combine(basis: &[Vec<f64>], c: &[f64]) -> Vec<f64> {
    let n = basis.first().map_or(0, Vec::len);
    let mut out = vec![0.0; n];
    for (b, &t) in basis.iter().zip(c) {
        for (o, v) in out.iter_mut().zip(b) {
            *o += t * v;
        }
    }
    out
}

/// Unit vectors of `E` (in host coordinates) on a deterministic spread.
fn sphere_of(host: &NormedSpace, basis: &[Vec<f64>], samples: usize) -> Vec<Vec<f64>> {
    spread_directions(basis.len(), samples)
        .into_iter()
        .filter_map(|c| {
            let x = combine(basis, &c);
            let n = host.norm(&x);
            (n > 0.0).then(|| x.iter().map(|v| v / n).collect())
        })
        .collect()
}

/// Per-point upper bounds on `d(x, S_F)`.
fn distances(host: &NormedSpace, xs: &[Vec<f64>], f_basis: &[Vec<f64>]) -> Vec<f64> {
    if f_basis.is_empty() {
        return vec![f64::INFINITY; xs.len()];
    }
    let n = host.dim();
    let b = DMatrix::from_fn(n, f_basis.len(), |i, j| f_basis[j][i]);
    let svd = b.clone().svd(true, true);
    xs.iter()
        .map(|x| {
            let c0 = svd
                .solve(&DVector::from_column_slice(x), 1e-12)
                .map(|v| v.as_slice().to_vec())
                .unwrap_or_else(|_| vec![0.0; f_basis.len()]);
            let resid = |c: &[f64]| {
                let y = combine(f_basis, c);
                host.norm(&x.iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<_>>())
            };
            let c = if resid(&c0) <= 1e-14 {
                c0
            } else {
                let mut obj = |c: &[f64]| resid(c);
                minimize_convex(&mut obj, &c0, 1e-10).0
            };
            let y = combine(f_basis, &c);
            let ny = host.norm(&y);
            if ny == 0.0 {
                return f64::INFINITY;
            }
            host.norm(&x.iter().zip(&y).map(|(a, b)| a - b / ny).collect::<Vec<_>>())
        })
        .collect()
}

/// `max_{x} d(x, S_F)` over sampled unit vectors `x` of `E`.
pub fn subset_slack(host: &NormedSpace, e_basis: &[Vec<f64>], f_basis: &[Vec<f64>], samples: usize) -> Result<f64> {
    check_basis(host, e_basis)?;
    check_basis(host, f_basis)?;
    let xs = sphere_of(host, e_basis, samples);
    Ok(distances(host, &xs, f_basis).into_iter().fold(0.0, f64::max))
}

/// Coordinate subspaces `span(e_1, …, e_k)`, `k = 1..=n`, labelled by `prefix^k`.
pub fn coordinate_chain(prefix: &str, n: usize) -> Vec<(String, Vec<Vec<f64>>)> {
    (1..=n)
        .map(|k| {
            let basis = (0..k)
                .map(|i| {
                    let mut e = vec![0.0; n];
                    e[i] = 1.0;
                    e
                })
                .collect();
            (format!("{prefix}^{k}"), basis)
        })
        .collect()
}

fn contains(outer: &[Vec<f64>], inner: &[Vec<f64>]) -> bool {
    let mut all: Vec<Vec<f64>> = outer.to_vec();
    all.extend(inner.iter().cloned());
    let m = Matrix::from_rows_f64(&all).expect("finite");
    m.rank() == Matrix::from_rows_f64(outer).expect("finite").rank()
}

/// Samples a random `e_dim`-dimensional `E` in the host and reports, for each
/// candidate member realized in the host, the `⊆_ε` slack. Along nested
/// candidates the per-point witnesses are carried forward, so slack is
/// nonincreasing in that case.
pub fn cofinal_probe(
    host: &NormedSpace,
    e_dim: usize,
    candidates: &[(String, Vec<Vec<f64>>)],
    eps: f64,
    samples: usize,
    seed: u64,
) -> Result<CofinalReport> {
    let n = host.dim();
    if e_dim == 0 || e_dim > n {
        return Err(Error::param(format!("cannot sample a {e_dim}-dimensional subspace of {}", host.label())));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let e_basis: Vec<Vec<f64>> = (0..e_dim)
        .map(|_| (0..n).map(|_| StandardNormal.sample(&mut rng)).collect())
        .collect();
    probe_with(host, e_basis, candidates, eps, samples)
}

/// As [`cofinal_probe`] with a given `E`.
pub fn probe_with(
    host: &NormedSpace,
    e_basis: Vec<Vec<f64>>,
    candidates: &[(String, Vec<Vec<f64>>)],
    eps: f64,
    samples: usize,
) -> Result<CofinalReport> {
    check_basis(host, &e_basis)?;
    let e_space = NormedSpace::pullback(host, Matrix::from_cols_f64(host.dim(), &e_basis)?)?;
    let xs = sphere_of(host, &e_basis, samples);
    let mut rows = Vec::new();
    let mut prev: Option<(Vec<Vec<f64>>, Vec<f64>)> = None;
    for (label, basis) in candidates {
        check_basis(host, basis)?;
        let mut d = distances(host, &xs, basis);
        if let Some((pb, pd)) = &prev {
            if contains(basis, pb) {
                for (a, b) in d.iter_mut().zip(pd) {
                    *a = a.min(*b);
                }
            }
        }
        let slack = d.iter().copied().fold(0.0, f64::max);
        let emb_defect = if basis.len() >= e_basis.len() {
            let f_space = NormedSpace::pullback(host, Matrix::from_cols_f64(host.dim(), basis)?)?;
            best_embedding(&e_space, &f_space, 400, 0)?.defect
        } else {
            f64::INFINITY
        };
        rows.push(CofinalRow {
            label: label.clone(),
            dim: basis.len(),
            slack,
            within: slack <= eps,
            emb_defect,
        });
        prev = Some((basis.clone(), d));
    }
    let best = rows.iter().position(|r| r.within);
    Ok(CofinalReport {
        host: host.label(),
        e_basis,
        epsilon: eps,
        samples,
        relation: "⊆_ε",
        rows,
        best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn literal_subspace_has_zero_slack() {
        let host = NormedSpace::lp(1.0, 3).unwrap();
        let e = vec![vec![1.0, 2.0, 0.0]];
        let f = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
        assert!(subset_slack(&host, &e, &f, 16).unwrap() <= 1e-12);
        let diag = vec![vec![1.0, 1.0]];
        let whole = coordinate_chain("l1", 2).pop().unwrap().1;
        assert!(subset_slack(&NormedSpace::lp(1.0, 2).unwrap(), &diag, &whole, 16).unwrap() <= 1e-12);
    }

    #[test]
    fn coordinate_chain_slack_decreases() {
        let host = NormedSpace::lp(1.0, 4).unwrap();
        let r = cofinal_probe(&host, 2, &coordinate_chain("l1", 4), 0.1, 48, 9).unwrap();
        let slacks: Vec<f64> = r.rows.iter().map(|x| x.slack).collect();
        for w in slacks.windows(2) {
            assert!(w[1] <= w[0] + 1e-12, "{slacks:?}");
        }
        assert!(slacks[3] <= 1e-9);
        assert!(r.rows[3].within);
    }

    #[test]
    fn mismatched_basis_is_rejected() {
        let host = NormedSpace::lp(1.0, 3).unwrap();
        assert!(subset_slack(&host, &[vec![1.0, 0.0]], &[vec![1.0, 0.0, 0.0]], 8).is_err());
    }
}
