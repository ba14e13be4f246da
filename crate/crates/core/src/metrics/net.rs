//! Finite θ-nets of `Emb_C(E, F)` in the operator norm.
//!
//! Entries of any `T ∈ Emb_C` satisfy `|T_ij| ≤ e^C ‖f_i*‖ ‖e_j‖`, and moving
//! an entry by `η` moves `T` by at most `η ‖f_i‖ ‖e_j*‖`. A grid anchored at 0
//! with pitch `h` therefore has every `T` within `r = h/2 · Σ ‖f_i‖ ‖e_j*‖` of a
//! grid point, which itself is `r`-close to `Emb_C`. Grid points that survive
//! that necessary test are thinned greedily at radius `θ − r`.

use rayon::prelude::*;

use super::defect::embedding_defect;
use super::opnorm::{coordinate_dual_norms, half_vertices};
use crate::error::{Error, Result};
use crate::map::LinearMap;
use crate::matrix::Matrix;
use crate::rational::rat_to_f64;
use crate::spaces::NormedSpace;

/// Default cap on the number of grid points examined.
pub const DEFAULT_NET_BUDGET: usize = 2_000_000;
const SAMPLES: usize = 64;

#[derive(Debug, Clone)]
pub struct NetMember {
    pub map: LinearMap,
    /// Certified upper bound on the member's defect.
    pub defect: f64,
}

#[derive(Debug, Clone)]
pub struct EpsilonNet {
    pub members: Vec<NetMember>,
    /// Every map of `Emb_C(E, F)` lies within this operator distance of a member.
    pub covering_radius: f64,
    /// Distance from any map of `Emb_C` to the grid.
    pub grid_radius: f64,
    pub pitch: f64,
    pub grid_points: usize,
    /// Grid points passing the necessary membership test.
    pub candidates: usize,
    /// Defect bound shared by every grid point within `grid_radius` of `Emb_C`.
    pub slack_defect: f64,
}

struct Metric {
    dom: NormedSpace,
    cod: NormedSpace,
    /// Half the ball vertices of the domain, if it is a polytope.
    vertices: Option<Vec<Vec<f64>>>,
    /// `‖f_i‖ ‖e_j*‖` in row-major order.
    weights: Vec<f64>,
}

impl Metric {
    /// Upper bound on `‖A − B‖`.
    fn distance(&self, a: &[f64], b: &[f64]) -> f64 {
        let diff: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
        let lipschitz: f64 = diff.iter().zip(&self.weights).map(|(d, w)| d.abs() * w).sum();
        match &self.vertices {
            Some(vs) => {
                let m = Matrix::from_f64(self.cod.dim(), self.dom.dim(), diff).expect("finite");
                let exact = vs
                    .iter()
                    .map(|v| self.cod.norm(&m.apply(v)))
                    .fold(0.0, f64::max);
                (exact * (1.0 + 1e-12)).min(lipschitz)
            }
            None => lipschitz,
        }
    }
}

/// A θ-net of `Emb_C(E, F)`, refusing when the grid would exceed `budget` points.
pub fn epsilon_net(e: &NormedSpace, f: &NormedSpace, c: f64, theta: f64, budget: usize) -> Result<EpsilonNet> {
    if !(theta > 0.0) || !theta.is_finite() {
        return Err(Error::param("θ must be positive and finite"));
    }
    if !(c >= 0.0) || !c.is_finite() {
        return Err(Error::param("C must be nonnegative and finite"));
    }
    let (d, n) = (e.dim(), f.dim());
    if d == 0 {
        let map = LinearMap::zero(e, f);
        return Ok(EpsilonNet {
            members: vec![NetMember { map, defect: 0.0 }],
            covering_radius: 0.0,
            grid_radius: 0.0,
            pitch: 0.0,
            grid_points: 1,
            candidates: 1,
            slack_defect: 0.0,
        });
    }
    if d > n {
        return Err(Error::param("no embeddings into a space of smaller dimension"));
    }
    let basis_norms_f: Vec<f64> = (0..n).map(|i| f.norm(&unit(n, i))).collect();
    let basis_norms_e: Vec<f64> = (0..d).map(|j| e.norm(&unit(d, j))).collect();
    let dual_e = coordinate_dual_norms(e);
    let dual_f = coordinate_dual_norms(f);
    let weights: Vec<f64> = (0..n)
        .flat_map(|i| (0..d).map(move |j| (i, j)))
        .map(|(i, j)| basis_norms_f[i] * dual_e[j])
        .collect();
    let cs: f64 = weights.iter().sum();
    let (hi, lo) = (c.exp(), (-c).exp());
    let r = theta.min(lo) / 4.0;
    let pitch = 2.0 * r / cs;
    let mut axes: Vec<Vec<f64>> = Vec::with_capacity(n * d);
    let mut grid_points: usize = 1;
    for i in 0..n {
        for j in 0..d {
            let bound = hi * dual_f[i] * basis_norms_e[j];
            let k = (bound / pitch).ceil() as i64;
            let axis: Vec<f64> = (-k..=k).map(|t| t as f64 * pitch).collect();
            grid_points = grid_points
                .checked_mul(axis.len())
                .filter(|&g| g <= budget)
                .ok_or(Error::Budget(format!(
                    "ε-net grid exceeds {budget} points (pitch {pitch:.3e})"
                )))?;
            axes.push(axis);
        }
    }
    let samples = e.sphere_samples(SAMPLES);
    let keep_hi = hi + r;
    let keep_lo = lo - r;
    let mut candidates: Vec<(f64, usize, Vec<f64>)> = (0..grid_points)
        .into_par_iter()
        .filter_map(|idx| {
            let entries = grid_entry(&axes, idx);
            let m = Matrix::from_f64(n, d, entries.clone()).expect("finite");
            let (mut big, mut small) = (0.0f64, f64::INFINITY);
            for u in &samples {
                let v = f.norm(&m.apply(u));
                big = big.max(v);
                small = small.min(v);
            }
            (big <= keep_hi && small >= keep_lo).then(|| (big.ln().max(-small.ln()), idx, entries))
        })
        .collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    let metric = Metric {
        dom: e.clone(),
        cod: f.clone(),
        vertices: half_vertices(e).map(|vs| vs.iter().map(|v| v.iter().map(rat_to_f64).collect()).collect()),
        weights,
    };
    let radius = theta - r;
    let mut centres: Vec<Vec<f64>> = Vec::new();
    for (_, _, s) in &candidates {
        if !centres.iter().any(|t| metric.distance(s, t) <= radius) {
            centres.push(s.clone());
        }
    }
    let members = centres
        .into_par_iter()
        .map(|s| {
            let map = LinearMap::new(e, f, Matrix::from_f64(n, d, s).expect("finite")).expect("shape");
            let defect = embedding_defect(&map).defect;
            NetMember { map, defect }
        })
        .collect();
    Ok(EpsilonNet {
        members,
        covering_radius: theta,
        grid_radius: r,
        pitch,
        grid_points,
        candidates: candidates.len(),
        slack_defect: (hi + r).ln().max(-(lo - r).ln()),
    })
}

fn unit(n: usize, i: usize) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[i] = 1.0;
    v
}

fn grid_entry(axes: &[Vec<f64>], mut idx: usize) -> Vec<f64> {
    axes.iter()
        .map(|a| {
            let v = a[idx % a.len()];
            idx /= a.len();
            v
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line() -> NormedSpace {
        NormedSpace::lp(1.0, 1).unwrap()
    }

    #[test]
    fn one_dimensional_net_covers_both_intervals() {
        let net = epsilon_net(&line(), &line(), 2f64.ln(), 3.0, DEFAULT_NET_BUDGET).unwrap();
        assert!(net.members.len() <= 2);
        let pts: Vec<f64> = net.members.iter().map(|m| m.map.matrix().get(0, 0)).collect();
        // oracle: every scalar with |t| in [1/2, 2] is within 3 of a member
        for k in 0..=600 {
            let t = 0.5 + 1.5 * k as f64 / 600.0;
            for s in [t, -t] {
                assert!(pts.iter().any(|p| (p - s).abs() <= 3.0), "{s} uncovered by {pts:?}");
            }
        }
    }

    #[test]
    fn large_theta_gives_singleton() {
        let net = epsilon_net(&line(), &line(), 2f64.ln(), 5.0, DEFAULT_NET_BUDGET).unwrap();
        assert_eq!(net.members.len(), 1);
    }

    #[test]
    fn unit_vectors_of_linf_plane() {
        let f = NormedSpace::lp(f64::INFINITY, 2).unwrap();
        let net = epsilon_net(&line(), &f, 0.0, 0.5, DEFAULT_NET_BUDGET).unwrap();
        // oracle: walk the four edges of the ℓ∞ sphere
        for k in 0..400 {
            let s = -1.0 + 2.0 * k as f64 / 400.0;
            for p in [[1.0, s], [-1.0, s], [s, 1.0], [s, -1.0]] {
                let close = net.members.iter().any(|m| {
                    let q = m.map.matrix().col_f64(0);
                    (q[0] - p[0]).abs().max((q[1] - p[1]).abs()) <= 0.5
                });
                assert!(close, "{p:?} uncovered");
            }
        }
        for m in &net.members {
            assert!(m.defect <= net.slack_defect + 1e-12);
        }
    }

    #[test]
    fn grid_overflow_is_an_error() {
        let e = NormedSpace::lp(2.0, 2).unwrap();
        let err = epsilon_net(&e, &e, 0.1, 1e-3, 1000).unwrap_err();
        assert!(matches!(err, Error::Budget(_)));
    }
}
