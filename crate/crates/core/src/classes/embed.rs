//! Near-isometric embeddings `ℓ_q² → ℓ_p^N` from discretized spectral measures.
//!
//! When `ℓ_q²` embeds isometrically into `L_p`, there is a symmetric measure
//! `μ` on the circle with `‖x‖_q^p = ∫ |⟨x, u⟩|^p dμ(u)`. Restricting `μ` to
//! `N` equally spaced directions `u_k` gives nonnegative weights `w_k`, found by
//! a linear program minimizing the worst relative error on a finer set of
//! directions; the rows `w_k^{1/p} u_k` form the embedding.

use crate::error::{Error, Result};
use crate::lp::{LinearProgram, LpOutcome};
use crate::map::LinearMap;
use crate::matrix::Matrix;
use crate::metrics::{balance, embedding_defect, EmbeddingCertificate};
use crate::spaces::{lp_norm, NormedSpace};

const FIRST_N: usize = 8;
const LP_DIRECTION_CAP: usize = 64;

#[derive(Debug, Clone)]
pub struct LqEmbedding {
    pub certificate: EmbeddingCertificate,
    /// Number of nonzero rows.
    pub n: usize,
    pub target: f64,
    pub met: bool,
    /// `(directions, certified defect)` per round.
    pub rounds: Vec<(usize, f64)>,
}

fn admissible(q: f64, p: f64) -> bool {
    q == p || q == 2.0 || (p < q && q < 2.0)
}

fn weights(q: f64, p: f64, dirs: usize) -> Option<Vec<f64>> {
    let probes = 4 * dirs;
    let angle = |k: usize, m: usize| std::f64::consts::PI * (k as f64 + 0.5) / m as f64;
    let us: Vec<[f64; 2]> = (0..dirs).map(|k| [angle(k, dirs).cos(), angle(k, dirs).sin()]).collect();
    // variables w_0..w_{dirs-1}, t
    let mut objective = vec![0.0; dirs + 1];
    objective[dirs] = 1.0;
    let mut lp = LinearProgram::new(dirs + 1, objective);
    for j in 0..probes {
        let a = std::f64::consts::PI * j as f64 / probes as f64;
        let x = [a.cos(), a.sin()];
        let b = lp_norm(&x, q).powf(p);
        let row: Vec<f64> = us.iter().map(|u| (x[0] * u[0] + x[1] * u[1]).abs().powf(p) / b).collect();
        let mut up = row.clone();
        up.push(-1.0);
        lp.add_le(up, 1.0);
        let mut down: Vec<f64> = row.iter().map(|v| -v).collect();
        down.push(-1.0);
        lp.add_le(down, -1.0);
    }
    for k in 0..dirs {
        let mut c = vec![0.0; dirs + 1];
        c[k] = -1.0;
        lp.add_le(c, 0.0);
    }
    match lp.solve() {
        LpOutcome::Optimal { x, .. } => Some(x[..dirs].iter().map(|w| w.max(0.0)).collect()),
        _ => None,
    }
}

fn rows_matrix(p: f64, w: &[f64]) -> Result<Matrix> {
    let dirs = w.len();
    let mut data = Vec::new();
    for (k, &wk) in w.iter().enumerate() {
        if wk > 1e-12 {
            let a = std::f64::consts::PI * (k as f64 + 0.5) / dirs as f64;
            let s = wk.powf(1.0 / p);
            data.push(vec![s * a.cos(), s * a.sin()]);
        }
    }
    Matrix::from_rows_f64(&data)
}

/// Searches `T: ℓ_q² → ℓ_p^N`, `N ≤ nmax`, with certified defect ≤ `target`,
/// doubling the number of directions each round.
pub fn lq_into_lpn(q: f64, p: f64, target: f64, nmax: usize, seed: u64) -> Result<LqEmbedding> {
    let _ = seed;
    if !(p >= 1.0 && q >= 1.0) {
        return Err(Error::param("exponents must be at least 1"));
    }
    if !admissible(q, p) {
        return Err(Error::Refused(format!(
            "ℓ_{q} does not embed isometrically into L_{p}: the L_p(L_q) dichotomy allows only q = p, q = 2 or p < q < 2"
        )));
    }
    if !(target > 0.0) {
        return Err(Error::param("target defect must be positive"));
    }
    let dom = NormedSpace::lp(q, 2)?;
    if q == p {
        if nmax < 2 {
            return Err(Error::param("need N ≥ 2"));
        }
        let cod = NormedSpace::lp(p, 2)?;
        let cert = embedding_defect(&LinearMap::identity(&dom).with_spaces(&dom, &cod)?);
        return Ok(LqEmbedding {
            met: cert.defect <= target,
            n: 2,
            target,
            rounds: vec![(2, cert.defect)],
            certificate: cert,
        });
    }
    let mut rounds = Vec::new();
    let mut best: Option<(EmbeddingCertificate, usize)> = None;
    let mut dirs = FIRST_N.min(nmax).max(2);
    loop {
        let w = weights(q, p, dirs.min(LP_DIRECTION_CAP)).ok_or(Error::Lp("spectral weight program failed"))?;
        let m = rows_matrix(p, &w)?;
        let n = m.rows();
        if n >= 2 && n <= nmax {
            let cod = NormedSpace::lp(p, n)?;
            let cert = balance(&embedding_defect(&LinearMap::new(&dom, &cod, m)?))?;
            rounds.push((dirs, cert.defect));
            if best.as_ref().is_none_or(|(b, _)| cert.defect < b.defect) {
                best = Some((cert, n));
            }
        }
        if best.as_ref().is_some_and(|(b, _)| b.defect <= target) || dirs >= nmax.min(LP_DIRECTION_CAP) {
            break;
        }
        dirs = (2 * dirs).min(nmax);
    }
    let (certificate, n) = best.ok_or_else(|| Error::Budget(format!("no embedding with N ≤ {nmax}")))?;
    Ok(LqEmbedding {
        met: certificate.defect <= target,
        n,
        target,
        rounds,
        certificate,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn equal_exponents_give_the_inclusion() {
        let r = lq_into_lpn(3.0, 3.0, 1e-3, 8, 0).unwrap();
        assert_eq!(r.certificate.defect, 0.0);
        assert!(r.met);
    }

    #[test]
    fn euclidean_plane_into_l1() {
        let r = lq_into_lpn(2.0, 1.0, 0.05, 128, 0).unwrap();
        assert!(r.met, "{:?}", r.rounds);
        // oracle: N equiangular rows give max/min ratio sec(π/2N)
        let n = r.n as f64;
        let equiangular = 0.5 * (1.0 / (std::f64::consts::PI / (2.0 * n)).cos()).ln();
        assert!(r.certificate.defect <= equiangular + 1e-6, "{} vs {equiangular}", r.certificate.defect);
    }

    #[test]
    fn refusal_cites_the_dichotomy() {
        let Err(Error::Refused(msg)) = lq_into_lpn(4.0, 1.0, 0.1, 64, 0) else { panic!() };
        assert!(msg.contains("q = p, q = 2 or p < q < 2"));
    }
}
