//! Certified lower bound for the Banach–Mazur distance of two planes.
//!
//! Every invertible `T` is, up to a positive scalar and a sign, a matrix whose
//! largest entry equals `+1`. The four faces `{T_k = 1, |T_l| ≤ 1}` are covered
//! by cubes in the remaining three entries. On a cube with centre `T_c` and
//! half-width `η`, every `T` satisfies `‖T − T_c‖ ≤ s`, where
//! `s = η Σ_{(i,j) ≠ k} ‖f_i‖ ‖e_j*‖`, hence
//! `log(‖T‖/m(T)) ≥ log((‖T_c‖ − s)/(m(T_c) + s))`.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use super::opnorm::{coordinate_dual_norms, gain_upper_2d, norm_lower_2d};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::spaces::NormedSpace;

/// Target gap between the search upper bound and the certified lower bound.
pub const DEFAULT_GAP: f64 = 5e-3;
/// Cell budget of the branch-and-bound.
pub const DEFAULT_CELLS: usize = 4_000_000;
const ANGLE_SAMPLES: usize = 64;
const BATCH: usize = 512;

#[derive(Debug, Clone, PartialEq)]
pub struct LowerBound {
    pub value: f64,
    pub cells: usize,
    /// The gap target was met before the cell budget ran out.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy)]
struct Cell {
    bound: f64,
    face: usize,
    center: [f64; 3],
    half: f64,
}

impl PartialEq for Cell {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}
impl Eq for Cell {}
impl PartialOrd for Cell {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Cell {
    // min-heap on the bound, deterministic tie-break
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .bound
            .total_cmp(&self.bound)
            .then(other.face.cmp(&self.face))
            .then(other.center[0].total_cmp(&self.center[0]))
            .then(other.center[1].total_cmp(&self.center[1]))
            .then(other.center[2].total_cmp(&self.center[2]))
    }
}

struct Setup<'a> {
    dom: &'a NormedSpace,
    cod: &'a NormedSpace,
    /// `‖f_i‖ ‖e_j*‖` indexed by entry `2i + j`.
    weights: [f64; 4],
}

impl Setup<'_> {
    fn matrix(face: usize, c: &[f64; 3]) -> Matrix {
        let mut data = [0.0; 4];
        let mut it = c.iter();
        for (k, slot) in data.iter_mut().enumerate() {
            *slot = if k == face { 1.0 } else { *it.next().expect("three") };
        }
        Matrix::from_f64(2, 2, data.to_vec()).expect("finite")
    }

    fn bound(&self, face: usize, c: &[f64; 3], half: f64) -> f64 {
        let t = Self::matrix(face, c);
        let s: f64 = (0..4)
            .filter(|&k| k != face)
            .map(|k| self.weights[k])
            .sum::<f64>()
            * half
            * (1.0 + 1e-12);
        let n_lo = norm_lower_2d(self.dom, self.cod, &t, ANGLE_SAMPLES) * (1.0 - 1e-12);
        let m_up = gain_upper_2d(self.dom, self.cod, &t, ANGLE_SAMPLES) * (1.0 + 1e-12);
        if n_lo <= s {
            return 0.0;
        }
        ((n_lo - s) / (m_up + s)).ln().max(0.0)
    }
}

/// Lower bound on `log d_BM(E, F)` for two-dimensional spaces; `r_best` is a
/// known upper bound (cells above it are discarded).
pub fn lower_bound_2d(
    e: &NormedSpace,
    f: &NormedSpace,
    r_best: f64,
    gap: f64,
    max_cells: usize,
) -> Result<LowerBound> {
    if e.dim() != 2 || f.dim() != 2 {
        return Err(Error::param("the certified lower bound is implemented for planes only"));
    }
    // distance is symmetric; prefer a polytope domain (vertex norms are exact)
    let (dom, cod) = if e.polytope().is_some() || f.polytope().is_none() {
        (e, f)
    } else {
        (f, e)
    };
    let fn_norms = [cod.norm(&[1.0, 0.0]), cod.norm(&[0.0, 1.0])];
    let duals = coordinate_dual_norms(dom);
    let mut weights = [0.0; 4];
    for i in 0..2 {
        for j in 0..2 {
            weights[2 * i + j] = fn_norms[i] * duals[j];
        }
    }
    let setup = Setup { dom, cod, weights };
    let mut initial = Vec::new();
    let k0 = 4;
    let h0 = 1.0 / k0 as f64;
    for face in 0..4 {
        for a in 0..k0 {
            for b in 0..k0 {
                for c in 0..k0 {
                    let coord = |i: usize| -1.0 + (2 * i + 1) as f64 * h0;
                    initial.push((face, [coord(a), coord(b), coord(c)], h0));
                }
            }
        }
    }
    let mut cells = 0usize;
    let mut heap = BinaryHeap::new();
    let evaluate = |batch: &[(usize, [f64; 3], f64)]| -> Vec<Cell> {
        batch
            .par_iter()
            .map(|&(face, center, half)| Cell {
                bound: setup.bound(face, &center, half),
                face,
                center,
                half,
            })
            .collect()
    };
    for c in evaluate(&initial) {
        cells += 1;
        if c.bound < r_best {
            heap.push(c);
        }
    }
    let target = r_best - gap;
    loop {
        let Some(top) = heap.peek() else {
            return Ok(LowerBound {
                value: r_best.max(0.0),
                cells,
                converged: true,
            });
        };
        if top.bound >= target || cells >= max_cells {
            return Ok(LowerBound {
                value: top.bound.min(r_best).max(0.0),
                cells,
                converged: top.bound >= target,
            });
        }
        let mut children = Vec::with_capacity(8 * BATCH);
        while children.len() < 8 * BATCH {
            match heap.peek() {
                Some(c) if c.bound < target => {
                    let c = heap.pop().expect("peeked");
                    let h = c.half / 2.0;
                    for mask in 0..8 {
                        let mut center = c.center;
                        for (d, x) in center.iter_mut().enumerate() {
                            *x += if mask >> d & 1 == 1 { h } else { -h };
                        }
                        children.push((c.face, center, h));
                    }
                }
                _ => break,
            }
        }
        for c in evaluate(&children) {
            cells += 1;
            if c.bound < r_best {
                heap.push(c);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn isometric_pair_has_zero_lower_bound() {
        let e = NormedSpace::lp(1.0, 2).unwrap();
        let f = NormedSpace::lp(f64::INFINITY, 2).unwrap();
        let lb = lower_bound_2d(&e, &f, 0.0, 1e-3, 10_000).unwrap();
        assert_eq!(lb.value, 0.0);
    }

    #[test]
    fn l1_l2_bound_is_valid_and_tight() {
        let e = NormedSpace::lp(1.0, 2).unwrap();
        let f = NormedSpace::lp(2.0, 2).unwrap();
        let r = 0.5 * 2f64.ln();
        let lb = lower_bound_2d(&e, &f, r, 5e-3, DEFAULT_CELLS).unwrap();
        assert!(lb.value <= r + 1e-12, "{lb:?}");
        assert!(lb.value >= r - 1e-2, "{lb:?}");
    }
}
