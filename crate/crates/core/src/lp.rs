//! Dense two-phase simplex with Bland's rule, generic over [`Field`].
//!
//! Over `BigRational` every pivot is exact, so optimal values are certified.
//! The same code runs over `f64` for large float instances.

use crate::rational::Field;

/// `minimize objective · x` over free `x` subject to `le` rows (`a · x <= b`) and
/// `eq` rows (`a · x = b`).
#[derive(Debug, Clone)]
pub struct LinearProgram<T> {
    pub n_vars: usize,
    pub objective: Vec<T>,
    pub le: Vec<(Vec<T>, T)>,
    pub eq: Vec<(Vec<T>, T)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome<T> {
    Optimal { value: T, x: Vec<T> },
    Infeasible,
    Unbounded,
}

impl<T> LpOutcome<T> {
    pub fn optimal(self) -> Option<(T, Vec<T>)> {
        match self {
            LpOutcome::Optimal { value, x } => Some((value, x)),
            _ => None,
        }
    }
}

impl<T: Field> LinearProgram<T> {
    pub fn new(n_vars: usize, objective: Vec<T>) -> Self {
        assert_eq!(objective.len(), n_vars);
        Self {
            n_vars,
            objective,
            le: Vec::new(),
            eq: Vec::new(),
        }
    }

    pub fn add_le(&mut self, a: Vec<T>, b: T) {
        debug_assert_eq!(a.len(), self.n_vars);
        self.le.push((a, b));
    }

    pub fn add_eq(&mut self, a: Vec<T>, b: T) {
        debug_assert_eq!(a.len(), self.n_vars);
        self.eq.push((a, b));
    }

    pub fn solve(&self) -> LpOutcome<T> {
        Tableau::build(self).run(self)
    }
}

struct Tableau<T> {
    rows: Vec<Vec<T>>,
    basis: Vec<usize>,
    n_struct: usize,
    n_cols: usize,
    first_artificial: usize,
}

impl<T: Field> Tableau<T> {
    fn build(lp: &LinearProgram<T>) -> Self {
        let n = lp.n_vars;
        let n_le = lp.le.len();
        let m = n_le + lp.eq.len();
        let n_struct = 2 * n;
        let first_artificial = n_struct + n_le;
        let n_cols = first_artificial + m;
        let mut rows = Vec::with_capacity(m);
        let mut basis = Vec::with_capacity(m);
        let all = lp
            .le
            .iter()
            .map(|r| (r, true))
            .chain(lp.eq.iter().map(|r| (r, false)));
        for (i, ((a, b), is_le)) in all.enumerate() {
            let flip = b.is_negative();
            let sgn = |v: &T| if flip { -v.clone() } else { v.clone() };
            let mut row = vec![T::zero(); n_cols + 1];
            for j in 0..n {
                row[j] = sgn(&a[j]);
                row[n + j] = -sgn(&a[j]);
            }
            if is_le {
                row[n_struct + i] = if flip { -T::one() } else { T::one() };
            }
            row[first_artificial + i] = T::one();
            row[n_cols] = sgn(b);
            rows.push(row);
            basis.push(first_artificial + i);
        }
        Tableau {
            rows,
            basis,
            n_struct,
            n_cols,
            first_artificial,
        }
    }

    fn pivot(&mut self, r: usize, c: usize) {
        let inv = T::one() / self.rows[r][c].clone();
        for v in self.rows[r].iter_mut() {
            if !v.near_zero() {
                *v = v.clone() * inv.clone();
            } else {
                *v = T::zero();
            }
        }
        let pivot_row = self.rows[r].clone();
        for (i, row) in self.rows.iter_mut().enumerate() {
            if i == r || row[c].near_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, p) in row.iter_mut().zip(&pivot_row) {
                if !p.near_zero() {
                    *v = v.clone() - f.clone() * p.clone();
                }
            }
            row[c] = T::zero();
        }
        self.basis[r] = c;
    }

    /// Minimizes `cost` (indexed by column) over the current tableau.
    /// Returns `false` when unbounded.
    fn optimize(&mut self, cost: &[T], allowed: usize) -> bool {
        loop {
            // reduced costs d_j = c_j - c_B · column_j
            let mut entering = None;
            for j in 0..allowed {
                if self.basis.contains(&j) {
                    continue;
                }
                let mut d = cost[j].clone();
                for (i, row) in self.rows.iter().enumerate() {
                    if !row[j].near_zero() {
                        d = d - cost[self.basis[i]].clone() * row[j].clone();
                    }
                }
                if d.is_negative() {
                    entering = Some(j);
                    break;
                }
            }
            let Some(c) = entering else { return true };
            let mut leave: Option<(usize, T)> = None;
            for (i, row) in self.rows.iter().enumerate() {
                if row[c].is_positive() {
                    let ratio = row[self.n_cols].clone() / row[c].clone();
                    let better = match &leave {
                        None => true,
                        Some((li, lr)) => {
                            ratio < *lr
                                || (!(ratio.clone() - lr.clone()).is_positive()
                                    && !(lr.clone() - ratio.clone()).is_positive()
                                    && self.basis[i] < self.basis[*li])
                        }
                    };
                    if better {
                        leave = Some((i, ratio));
                    }
                }
            }
            let Some((r, _)) = leave else { return false };
            self.pivot(r, c);
        }
    }

    fn run(mut self, lp: &LinearProgram<T>) -> LpOutcome<T> {
        let n = lp.n_vars;
        // phase 1
        let mut cost1 = vec![T::zero(); self.n_cols];
        for c in cost1.iter_mut().skip(self.first_artificial) {
            *c = T::one();
        }
        self.optimize(&cost1, self.n_cols);
        let infeas = self
            .rows
            .iter()
            .zip(&self.basis)
            .filter(|(_, &b)| b >= self.first_artificial)
            .fold(T::zero(), |acc, (row, _)| acc + row[self.n_cols].clone());
        if infeas.is_positive() {
            return LpOutcome::Infeasible;
        }
        // drive artificials out of the basis; drop redundant rows
        let mut i = 0;
        while i < self.rows.len() {
            if self.basis[i] >= self.first_artificial {
                let col = (0..self.first_artificial).find(|&j| !self.rows[i][j].near_zero());
                match col {
                    Some(j) => {
                        self.pivot(i, j);
                        i += 1;
                    }
                    None => {
                        self.rows.remove(i);
                        self.basis.remove(i);
                    }
                }
            } else {
                i += 1;
            }
        }
        // phase 2
        let mut cost2 = vec![T::zero(); self.n_cols];
        for j in 0..n {
            cost2[j] = lp.objective[j].clone();
            cost2[n + j] = -lp.objective[j].clone();
        }
        if !self.optimize(&cost2, self.first_artificial) {
            return LpOutcome::Unbounded;
        }
        let mut vals = vec![T::zero(); self.n_struct];
        for (row, &b) in self.rows.iter().zip(&self.basis) {
            if b < self.n_struct {
                vals[b] = row[self.n_cols].clone();
            }
        }
        let x: Vec<T> = (0..n).map(|j| vals[j].clone() - vals[n + j].clone()).collect();
        let value = x
            .iter()
            .zip(&lp.objective)
            .fold(T::zero(), |acc, (a, b)| acc + a.clone() * b.clone());
        LpOutcome::Optimal { value, x }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{rat, rat_int, Rat};

    #[test]
    fn exact_small_program() {
        // min -x - y  s.t. x + 2y <= 4, 3x + y <= 6  -> optimum at (8/5, 6/5)
        let mut lp = LinearProgram::<Rat>::new(2, vec![rat_int(-1), rat_int(-1)]);
        lp.add_le(vec![rat_int(1), rat_int(2)], rat_int(4));
        lp.add_le(vec![rat_int(3), rat_int(1)], rat_int(6));
        lp.add_le(vec![rat_int(-1), rat_int(0)], rat_int(0));
        lp.add_le(vec![rat_int(0), rat_int(-1)], rat_int(0));
        let (v, x) = lp.solve().optimal().unwrap();
        assert_eq!(v, rat(-14, 5));
        assert_eq!(x, vec![rat(8, 5), rat(6, 5)]);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::<f64>::new(1, vec![1.0]);
        lp.add_le(vec![1.0], -1.0);
        lp.add_le(vec![-1.0], -1.0);
        assert_eq!(lp.solve(), LpOutcome::Infeasible);
        let lp = LinearProgram::<f64>::new(1, vec![1.0]);
        assert_eq!(lp.solve(), LpOutcome::Unbounded);
    }

    #[test]
    fn equality_with_negative_rhs() {
        // min |x| style: min t s.t. x - t <= 0, -x - t <= 0, x = -3
        let mut lp = LinearProgram::<Rat>::new(2, vec![rat_int(0), rat_int(1)]);
        lp.add_le(vec![rat_int(1), rat_int(-1)], rat_int(0));
        lp.add_le(vec![rat_int(-1), rat_int(-1)], rat_int(0));
        lp.add_eq(vec![rat_int(1), rat_int(0)], rat_int(-3));
        let (v, _) = lp.solve().optimal().unwrap();
        assert_eq!(v, rat_int(3));
    }
}
