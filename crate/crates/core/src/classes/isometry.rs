//! Linear isometries of polytope norms and the ε-transitivity defect.

use std::collections::HashSet;

use num_traits::{One, Zero};
use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::map::LinearMap;
use crate::matrix::Matrix;
use crate::metrics::embedding_defect;
use crate::metrics::opnorm::{coordinate_dual_norms, operator_norm_of};
use crate::metrics::epsilon_net;
use crate::rational::{inverse, rank, Rat};
use crate::spaces::{NormSpec, NormedSpace};

/// Largest vertex count accepted by [`iso_group`].
pub const ISO_VERTEX_CAP: usize = 40;

fn ball_vertices(x: &NormedSpace) -> Result<Vec<Vec<Rat>>> {
    let b = x
        .polytope()
        .ok_or_else(|| Error::NotPolytope(format!("{} has no polytope unit ball", x.label())))?;
    if b.vertices().len() > ISO_VERTEX_CAP {
        return Err(Error::Budget(format!(
            "{} ball vertices exceed the isometry search cap {ISO_VERTEX_CAP}",
            b.vertices().len()
        )));
    }
    Ok(b.vertices().to_vec())
}

/// All linear bijections carrying the unit ball of `a` onto that of `b`, as
/// exact matrices. Both spaces must be polytopes of the same dimension.
pub fn isometries_between(a: &NormedSpace, b: &NormedSpace) -> Result<Vec<Matrix>> {
    let d = a.dim();
    if b.dim() != d {
        return Err(Error::DimensionMismatch { expected: d, got: b.dim() });
    }
    if d == 0 {
        return Ok(vec![Matrix::zeros(0, 0)]);
    }
    let va = ball_vertices(a)?;
    let vb = ball_vertices(b)?;
    if va.len() != vb.len() {
        return Ok(Vec::new());
    }
    let targets: HashSet<Vec<Rat>> = vb.iter().cloned().collect();
    // a basis of ℝ^d made of vertices of `a`
    let mut basis: Vec<Vec<Rat>> = Vec::new();
    for v in &va {
        basis.push(v.clone());
        if rank(&basis) < basis.len() {
            basis.pop();
        }
        if basis.len() == d {
            break;
        }
    }
    // columns are basis vectors: B = basisᵀ
    let bmat: Vec<Vec<Rat>> = (0..d).map(|i| basis.iter().map(|v| v[i].clone()).collect()).collect();
    let binv = inverse(&bmat).ok_or(Error::NotFullDimensional { rank: basis.len(), dim: d })?;
    let mut out = Vec::new();
    let mut choice = vec![0usize; d];
    let m = vb.len();
    loop {
        let distinct = (0..d).all(|i| (0..i).all(|j| choice[i] != choice[j]));
        if distinct {
            // T = W B⁻¹ with W having the chosen images as columns
            let t: Vec<Vec<Rat>> = (0..d)
                .map(|r| {
                    (0..d)
                        .map(|c| {
                            (0..d).fold(Rat::zero(), |acc, s| acc + &vb[choice[s]][r] * &binv[s][c])
                        })
                        .collect()
                })
                .collect();
            let mut seen: HashSet<Vec<Rat>> = HashSet::with_capacity(va.len());
            let maps_onto = va.iter().all(|v| {
                let img: Vec<Rat> = t
                    .iter()
                    .map(|row| row.iter().zip(v).fold(Rat::zero(), |acc, (x, y)| acc + x * y))
                    .collect();
                targets.contains(&img) && seen.insert(img)
            });
            if maps_onto {
                out.push(Matrix::from_rows_rat(&t)?);
            }
        }
        // next tuple
        let mut i = 0;
        loop {
            if i == d {
                return Ok(out);
            }
            choice[i] += 1;
            if choice[i] < m {
                break;
            }
            choice[i] = 0;
            i += 1;
        }
    }
}

/// The isometry group of a polytope space; closure under products and inverses
/// is verified.
pub fn iso_group(x: &NormedSpace) -> Result<Vec<LinearMap>> {
    let mats = isometries_between(x, x)?;
    let keys: HashSet<Vec<Rat>> = mats.iter().map(|m| m.exact_data()).collect();
    for a in &mats {
        for b in &mats {
            if !keys.contains(&a.mul(b)?.exact_data()) {
                return Err(Error::Validity("isometry set is not closed under composition".into()));
            }
        }
        let inv = inverse(&a.exact_rows()).ok_or(Error::Validity("singular isometry".into()))?;
        if !keys.contains(&Matrix::from_rows_rat(&inv)?.exact_data()) {
            return Err(Error::Validity("isometry set is not closed under inverses".into()));
        }
    }
    mats.into_iter().map(|m| LinearMap::new(x, x, m)).collect()
}

/// Random signed permutation matrix.
pub fn random_signed_permutation<R: Rng>(n: usize, rng: &mut R) -> Matrix {
    let mut perm: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        perm.swap(i, rng.random_range(0..=i));
    }
    let mut data = vec![Rat::zero(); n * n];
    for (i, &j) in perm.iter().enumerate() {
        data[i * n + j] = if rng.random_bool(0.5) { Rat::one() } else { -Rat::one() };
    }
    Matrix::from_rat(n, n, data).expect("square")
}

/// Random orthogonal matrix (Gram–Schmidt of a Gaussian matrix).
pub fn random_orthogonal<R: Rng>(n: usize, rng: &mut R) -> Matrix {
    let mut cols: Vec<Vec<f64>> = Vec::with_capacity(n);
    while cols.len() < n {
        let mut v: Vec<f64> = (0..n).map(|_| rng.sample(StandardNormal)).collect();
        for _ in 0..2 {
            for c in &cols {
                let dot: f64 = v.iter().zip(c).map(|(a, b)| a * b).sum();
                for (x, y) in v.iter_mut().zip(c) {
                    *x -= dot * y;
                }
            }
        }
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-6 {
            cols.push(v.into_iter().map(|x| x / norm).collect());
        }
    }
    Matrix::from_cols_f64(n, &cols).expect("square")
}

/// A random linear isometry of `x` when its group is known in closed form
/// (ℓ_p, ℓ_p(ℓ_q), small polytopes); the identity otherwise.
pub fn random_isometry<R: Rng>(x: &NormedSpace, rng: &mut R) -> Matrix {
    let n = x.dim();
    match x.spec() {
        NormSpec::Lp { p } if *p == 2.0 => random_orthogonal(n, rng),
        NormSpec::Lp { .. } => random_signed_permutation(n, rng),
        NormSpec::LpLq { p, q, n: blocks, k } => {
            // permute blocks, then act inside each block
            let outer = random_signed_permutation(*blocks, rng);
            let mut data = vec![0.0; n * n];
            for bi in 0..*blocks {
                let bj = (0..*blocks).find(|&j| outer.get(bi, j) != 0.0).expect("permutation");
                let inner = if *q == 2.0 {
                    random_orthogonal(*k, rng)
                } else {
                    random_signed_permutation(*k, rng)
                };
                let _ = p;
                for r in 0..*k {
                    for c in 0..*k {
                        data[(bi * k + r) * n + bj * k + c] = inner.get(r, c);
                    }
                }
            }
            Matrix::from_f64(n, n, data).expect("square")
        }
        _ => match iso_group(x) {
            Ok(g) if !g.is_empty() => g[rng.random_range(0..g.len())].matrix().clone(),
            _ => Matrix::identity(n),
        },
    }
}

/// Adds seeded Gaussian noise to `m: F → G`, shrinking it until the
/// certified defect is at most `delta`; returns `m` unchanged if that fails.
pub fn perturb_within<R: Rng>(f: &NormedSpace, g: &NormedSpace, m: Matrix, delta: f64, rng: &mut R) -> Result<Matrix> {
    if delta <= 0.0 {
        return Ok(m);
    }
    let (n, d) = (m.rows(), m.cols());
    let gn: Vec<f64> = (0..n)
        .map(|i| {
            let mut e = vec![0.0; n];
            e[i] = 1.0;
            g.norm(&e)
        })
        .collect();
    let fd = coordinate_dual_norms(f);
    let noise: Vec<f64> = (0..n * d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    let lip: f64 = noise
        .iter()
        .enumerate()
        .map(|(k, v)| v.abs() * gn[k / d] * fd[k % d])
        .sum();
    if lip == 0.0 {
        return Ok(m);
    }
    // start at a relative perturbation of δ/2 and shrink until the defect fits
    let mut s = 0.5 * delta / lip;
    for _ in 0..8 {
        let cand = m.add(&Matrix::from_f64(n, d, noise.iter().map(|v| v * s).collect())?)?;
        if embedding_defect(&LinearMap::new(f, g, cand.clone())?).defect <= delta {
            return Ok(cand);
        }
        s /= 2.0;
    }
    Ok(m)
}

#[derive(Debug, Clone)]
pub struct TransitivityReport {
    /// Upper estimate of the least ε for which `Iso(X)` acts ε-transitively on `Emb_δ(F, X)`.
    pub value: f64,
    /// Maximum over net pairs before the slack is added.
    pub net_value: f64,
    /// `2θ`: net resolution on both sides of a pair.
    pub slack: f64,
    pub net_size: usize,
    pub group_order: usize,
}

/// `max_{φ,ψ ∈ N} min_{T ∈ Iso(X)} ‖ψ − Tφ‖ + 2θ` over a θ-net `N` of `Emb_δ(F, X)`,
/// with `F` the span of `basis` in `X`.
pub fn transitivity_defect(
    x: &NormedSpace,
    basis: &[Vec<Rat>],
    delta: f64,
    theta: f64,
    budget: usize,
) -> Result<TransitivityReport> {
    let f = NormedSpace::subspace(x, basis)?;
    let group = iso_group(x)?;
    if f.dim() == 1 && x.dim() == 1 {
        // Emb_δ is two intervals of scalars of norm in [e^{-δ}, e^δ]; ±Id matches signs
        let value = delta.exp() - (-delta).exp();
        return Ok(TransitivityReport {
            value,
            net_value: value,
            slack: 0.0,
            net_size: 0,
            group_order: group.len(),
        });
    }
    let net = epsilon_net(&f, x, delta, theta, budget)?;
    let members: Vec<&Matrix> = net.members.iter().map(|m| m.map.matrix()).collect();
    let mut worst: f64 = 0.0;
    for phi in &members {
        let images: Vec<Matrix> = group
            .iter()
            .map(|t| t.matrix().mul(phi).expect("shapes"))
            .collect();
        for psi in &members {
            let best = images
                .iter()
                .map(|tp| operator_norm_of(&f, x, &psi.sub(tp).expect("shapes")).upper)
                .fold(f64::INFINITY, f64::min);
            worst = worst.max(best);
        }
    }
    Ok(TransitivityReport {
        value: worst + 2.0 * theta,
        net_value: worst,
        slack: 2.0 * theta,
        net_size: members.len(),
        group_order: group.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::embedding_defect;
    use crate::rational::{rat, rat_int};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sp(p: f64, n: usize) -> NormedSpace {
        NormedSpace::lp(p, n).unwrap()
    }

    /// Brute-force oracle: signed permutation matrices preserving the norm on all ball vertices.
    fn signed_permutations_preserving(x: &NormedSpace) -> usize {
        let n = x.dim();
        let mut count = 0;
        let perms: Vec<Vec<usize>> = if n == 2 { vec![vec![0, 1], vec![1, 0]] } else { unreachable!() };
        for p in &perms {
            for signs in 0..(1 << n) {
                let m: Vec<f64> = (0..n * n)
                    .map(|k| {
                        let (i, j) = (k / n, k % n);
                        if p[i] == j {
                            if signs >> i & 1 == 1 { -1.0 } else { 1.0 }
                        } else {
                            0.0
                        }
                    })
                    .collect();
                let m = Matrix::from_f64(n, n, m).unwrap();
                let ok = x
                    .polytope()
                    .unwrap()
                    .vertices_f64()
                    .iter()
                    .all(|v| (x.norm(&m.apply(v)) - 1.0).abs() < 1e-12);
                count += ok as usize;
            }
        }
        count
    }

    #[test]
    fn groups_of_order_eight() {
        for x in [sp(1.0, 2), sp(f64::INFINITY, 2)] {
            let g = iso_group(&x).unwrap();
            assert_eq!(g.len(), 8);
            assert_eq!(g.len(), signed_permutations_preserving(&x));
            for t in &g {
                let c = embedding_defect(t);
                assert!(c.is_exact() && c.defect == 0.0);
            }
        }
    }

    #[test]
    fn asymmetric_hexagon_has_only_plus_minus_identity() {
        // a hexagon perturbed from the regular one by seeded rational offsets
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let base = [(2, 0), (1, 2), (-1, 2)];
        let verts: Vec<Vec<Rat>> = base
            .iter()
            .map(|&(a, b)| {
                let da = rng.random_range(1..5);
                let db = rng.random_range(1..5);
                vec![rat(a * 10 + da, 10), rat(b * 10 + db, 10)]
            })
            .collect();
        let x = NormedSpace::vertex_ball(2, &verts).unwrap();
        let g = iso_group(&x).unwrap();
        assert_eq!(g.len(), 2);
        let mut data: Vec<Vec<Rat>> = g.iter().map(|t| t.matrix().exact_data()).collect();
        data.sort();
        let id = Matrix::identity(2).exact_data();
        let neg: Vec<Rat> = id.iter().map(|v| -v).collect();
        let mut expected = vec![id, neg];
        expected.sort();
        assert_eq!(data, expected);
    }

    #[test]
    fn vertex_cap_is_enforced() {
        let verts: Vec<Vec<Rat>> = (0..25).map(|i| vec![rat_int(i), rat_int(i * i - 300)]).collect();
        let x = NormedSpace::vertex_ball(2, &verts).unwrap();
        if x.polytope().unwrap().vertices().len() > ISO_VERTEX_CAP {
            assert!(matches!(iso_group(&x), Err(Error::Budget(_))));
        }
    }

    #[test]
    fn transitivity_in_one_dimension_is_zero() {
        let x = sp(1.0, 1);
        let r = transitivity_defect(&x, &[vec![rat_int(1)]], 0.0, 0.5, 10_000).unwrap();
        assert_eq!(r.value, 0.0);
        assert_eq!(r.group_order, 2);
    }

    #[test]
    fn transitivity_of_whole_space() {
        let x = sp(f64::INFINITY, 2);
        let basis = vec![vec![rat_int(1), rat_int(0)], vec![rat_int(0), rat_int(1)]];
        let theta = 1.0;
        let r = transitivity_defect(&x, &basis, 0.0, theta, 2_000_000).unwrap();
        // every net member is within θ of an isometry, so pairs differ by at most 2θ after matching
        assert!(r.net_value <= 2.0 * theta + 1e-9, "{r:?}");
        assert!(r.value <= 4.0 * theta + 1e-9);
    }
}
