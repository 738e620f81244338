//! Dense two-phase simplex with Bland's rule.
//!
//! Sized for the small feasibility and optimization problems in this crate
//! (a few hundred variables at most). With `Rational` every pivot is exact,
//! so certificates can be checked with `==`.

use crate::scalar::Scalar;
use crate::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Relation {
    Le,
    Ge,
    Eq,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Sense {
    Max,
    Min,
}

#[derive(Clone, Debug)]
struct Row<T> {
    coeffs: Vec<T>,
    rel: Relation,
    rhs: T,
}

/// `opt c·x` subject to linear rows and `x >= 0`.
#[derive(Clone, Debug)]
pub struct LinearProgram<T> {
    num_vars: usize,
    objective: Vec<T>,
    sense: Sense,
    rows: Vec<Row<T>>,
    max_pivots: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub enum LpOutcome<T> {
    Optimal { x: Vec<T>, value: T },
    Infeasible,
    Unbounded,
}

impl<T> LpOutcome<T> {
    pub fn solution(&self) -> Option<&[T]> {
        match self {
            LpOutcome::Optimal { x, .. } => Some(x),
            _ => None,
        }
    }

    pub fn is_feasible(&self) -> bool {
        !matches!(self, LpOutcome::Infeasible)
    }
}

impl<T: Scalar> LinearProgram<T> {
    /// Pure feasibility problem (zero objective).
    pub fn new(num_vars: usize) -> Self {
        Self {
            num_vars,
            objective: vec![T::zero(); num_vars],
            sense: Sense::Max,
            rows: Vec::new(),
            max_pivots: 100_000,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.num_vars
    }

    pub fn num_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn maximize(mut self, c: Vec<T>) -> Self {
        assert_eq!(c.len(), self.num_vars, "objective length");
        self.objective = c;
        self.sense = Sense::Max;
        self
    }

    pub fn minimize(mut self, c: Vec<T>) -> Self {
        assert_eq!(c.len(), self.num_vars, "objective length");
        self.objective = c;
        self.sense = Sense::Min;
        self
    }

    pub fn add(&mut self, coeffs: Vec<T>, rel: Relation, rhs: T) {
        assert_eq!(coeffs.len(), self.num_vars, "constraint length");
        self.rows.push(Row { coeffs, rel, rhs });
    }

    /// Adds a row given as sparse `(index, coefficient)` pairs.
    pub fn add_sparse(&mut self, terms: &[(usize, T)], rel: Relation, rhs: T) {
        let mut coeffs = vec![T::zero(); self.num_vars];
        for (j, c) in terms {
            coeffs[*j] = coeffs[*j].clone() + c.clone();
        }
        self.add(coeffs, rel, rhs);
    }

    pub fn solve(&self) -> Result<LpOutcome<T>> {
        Tableau::build(self).run(self)
    }
}

struct Tableau<T> {
    // m rows, each of width ncols + 1 (last entry is the rhs)
    a: Vec<Vec<T>>,
    basis: Vec<usize>,
    ncols: usize,
    n_struct: usize,
    artificial_from: usize,
    pivots: usize,
}

impl<T: Scalar> Tableau<T> {
    fn build(lp: &LinearProgram<T>) -> Self {
        let n = lp.num_vars;
        let rows: Vec<Row<T>> = lp
            .rows
            .iter()
            .map(|r| {
                if r.rhs < T::zero() {
                    Row {
                        coeffs: r.coeffs.iter().map(|c| -c.clone()).collect(),
                        rel: match r.rel {
                            Relation::Le => Relation::Ge,
                            Relation::Ge => Relation::Le,
                            Relation::Eq => Relation::Eq,
                        },
                        rhs: -r.rhs.clone(),
                    }
                } else {
                    r.clone()
                }
            })
            .collect();
        let n_slack = rows.iter().filter(|r| r.rel != Relation::Eq).count();
        let n_art = rows.iter().filter(|r| r.rel != Relation::Le).count();
        let artificial_from = n + n_slack;
        let ncols = artificial_from + n_art;
        let mut a = Vec::with_capacity(rows.len());
        let mut basis = Vec::with_capacity(rows.len());
        let (mut s, mut art) = (n, artificial_from);
        for r in rows {
            let mut line = vec![T::zero(); ncols + 1];
            line[..n].clone_from_slice(&r.coeffs);
            line[ncols] = r.rhs;
            match r.rel {
                Relation::Le => {
                    line[s] = T::one();
                    basis.push(s);
                    s += 1;
                }
                Relation::Ge => {
                    line[s] = -T::one();
                    s += 1;
                    line[art] = T::one();
                    basis.push(art);
                    art += 1;
                }
                Relation::Eq => {
                    line[art] = T::one();
                    basis.push(art);
                    art += 1;
                }
            }
            a.push(line);
        }
        Self {
            a,
            basis,
            ncols,
            n_struct: n,
            artificial_from,
            pivots: 0,
        }
    }

    fn pivot(&mut self, r: usize, c: usize, obj: &mut [T]) {
        let p = self.a[r][c].clone();
        for v in self.a[r].iter_mut() {
            *v = v.clone() / p.clone();
        }
        let prow = self.a[r].clone();
        for (i, row) in self.a.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&prow) {
                if !pv.is_zero() {
                    *v = v.clone() - f.clone() * pv.clone();
                }
            }
            row[c] = T::zero();
        }
        if !obj[c].is_zero() {
            let f = obj[c].clone();
            for (v, pv) in obj.iter_mut().zip(&prow) {
                if !pv.is_zero() {
                    *v = v.clone() - f.clone() * pv.clone();
                }
            }
            obj[c] = T::zero();
        }
        self.basis[r] = c;
        self.pivots += 1;
    }

    /// Reduced-cost row for minimizing `cost` over the current basis.
    fn reduced(&self, cost: &[T]) -> Vec<T> {
        let mut obj: Vec<T> = cost.to_vec();
        obj.push(T::zero());
        for (i, &b) in self.basis.iter().enumerate() {
            if !obj[b].is_zero() {
                let f = obj[b].clone();
                for (v, av) in obj.iter_mut().zip(&self.a[i]) {
                    *v = v.clone() - f.clone() * av.clone();
                }
            }
        }
        obj
    }

    /// Minimizes the objective row; `allowed` bounds entering columns.
    fn iterate(&mut self, obj: &mut [T], allowed: usize, max_pivots: usize) -> Result<bool> {
        let piv_tol = if T::EXACT { T::zero() } else { T::tol() };
        loop {
            if self.pivots > max_pivots {
                return Err(Error::Numerical(format!(
                    "simplex exceeded {max_pivots} pivots"
                )));
            }
            let entering = (0..allowed).find(|&j| obj[j] < -piv_tol.clone());
            let Some(c) = entering else {
                return Ok(true);
            };
            let mut best: Option<(usize, T)> = None;
            for i in 0..self.a.len() {
                let aic = &self.a[i][c];
                if *aic > piv_tol {
                    let ratio = self.a[i][self.ncols].clone() / aic.clone();
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br || (ratio == br && self.basis[i] < self.basis[bi]) {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match best {
                None => return Ok(false),
                Some((r, _)) => self.pivot(r, c, obj),
            }
        }
    }

    fn run(mut self, lp: &LinearProgram<T>) -> Result<LpOutcome<T>> {
        let piv_tol = if T::EXACT { T::zero() } else { T::tol() };
        // Phase 1: minimize the sum of artificials.
        if self.artificial_from < self.ncols {
            let mut cost = vec![T::zero(); self.ncols];
            for c in cost.iter_mut().skip(self.artificial_from) {
                *c = T::one();
            }
            let mut obj = self.reduced(&cost);
            self.iterate(&mut obj, self.ncols, lp.max_pivots)?;
            let infeas = -obj[self.ncols].clone();
            if infeas > T::lp_tol() {
                return Ok(LpOutcome::Infeasible);
            }
            // Drive remaining artificials out of the basis or drop redundant rows.
            let mut i = 0;
            while i < self.a.len() {
                if self.basis[i] >= self.artificial_from {
                    let col = (0..self.artificial_from).find(|&j| self.a[i][j].abs() > piv_tol);
                    match col {
                        Some(j) => {
                            let mut dummy = vec![T::zero(); self.ncols + 1];
                            self.pivot(i, j, &mut dummy);
                            i += 1;
                        }
                        None => {
                            self.a.remove(i);
                            self.basis.remove(i);
                        }
                    }
                } else {
                    i += 1;
                }
            }
        }
        // Phase 2 on the structural and slack columns.
        let mut cost = vec![T::zero(); self.ncols];
        for (j, c) in lp.objective.iter().enumerate() {
            cost[j] = match lp.sense {
                Sense::Min => c.clone(),
                Sense::Max => -c.clone(),
            };
        }
        let mut obj = self.reduced(&cost);
        let bounded = self.iterate(&mut obj, self.artificial_from, lp.max_pivots)?;
        if !bounded {
            return Ok(LpOutcome::Unbounded);
        }
        let mut x = vec![T::zero(); self.n_struct];
        for (i, &b) in self.basis.iter().enumerate() {
            if b < self.n_struct {
                let v = self.a[i][self.ncols].clone();
                // Clamp float dust below zero.
                x[b] = if v < T::zero() { T::zero() } else { v };
            }
        }
        let value = crate::scalar::dot(&lp.objective, &x);
        Ok(LpOutcome::Optimal { x, value })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn r(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    #[test]
    fn textbook_maximum() {
        // max 2x + 3y; 2x + y <= 18, 6x + 5y <= 60, 2x + 5y <= 40
        let mut lp = LinearProgram::new(2).maximize(vec![r(2, 1), r(3, 1)]);
        lp.add(vec![r(2, 1), r(1, 1)], Relation::Le, r(18, 1));
        lp.add(vec![r(6, 1), r(5, 1)], Relation::Le, r(60, 1));
        lp.add(vec![r(2, 1), r(5, 1)], Relation::Le, r(40, 1));
        match lp.solve().unwrap() {
            LpOutcome::Optimal { x, value } => {
                assert_eq!(value, r(28, 1));
                assert_eq!(x, vec![r(5, 1), r(6, 1)]);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn equality_and_ge_rows() {
        // min x + y; x + y = 1, x >= 1/3
        let mut lp = LinearProgram::new(2).minimize(vec![1.0, 1.0]);
        lp.add(vec![1.0, 1.0], Relation::Eq, 1.0);
        lp.add(vec![1.0, 0.0], Relation::Ge, 1.0 / 3.0);
        let out = lp.solve().unwrap();
        let x = out.solution().unwrap();
        assert!((x[0] + x[1] - 1.0).abs() < 1e-12);
        assert!(x[0] >= 1.0 / 3.0 - 1e-12);
    }

    #[test]
    fn detects_infeasible_and_unbounded() {
        let mut lp = LinearProgram::<f64>::new(1);
        lp.add(vec![1.0], Relation::Le, 1.0);
        lp.add(vec![1.0], Relation::Ge, 2.0);
        assert_eq!(lp.solve().unwrap(), LpOutcome::Infeasible);

        let mut lp = LinearProgram::new(1).maximize(vec![1.0]);
        lp.add(vec![1.0], Relation::Ge, 0.0);
        assert_eq!(lp.solve().unwrap(), LpOutcome::Unbounded);
    }

    #[test]
    fn redundant_equalities() {
        let mut lp = LinearProgram::new(2).maximize(vec![r(1, 1), r(0, 1)]);
        lp.add(vec![r(1, 1), r(1, 1)], Relation::Eq, r(1, 1));
        lp.add(vec![r(2, 1), r(2, 1)], Relation::Eq, r(2, 1));
        lp.add(vec![r(-1, 1), r(-1, 1)], Relation::Eq, r(-1, 1));
        match lp.solve().unwrap() {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, r(1, 1)),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn degenerate_cycling_instance() {
        // Beale's example cycles under the textbook rule; Bland's rule terminates.
        let mut lp = LinearProgram::new(4).minimize(vec![r(-3, 4), r(20, 1), r(-1, 2), r(6, 1)]);
        lp.add(vec![r(1, 4), r(-8, 1), r(-1, 1), r(9, 1)], Relation::Le, r(0, 1));
        lp.add(vec![r(1, 2), r(-12, 1), r(-1, 2), r(3, 1)], Relation::Le, r(0, 1));
        lp.add(vec![r(0, 1), r(0, 1), r(1, 1), r(0, 1)], Relation::Le, r(1, 1));
        match lp.solve().unwrap() {
            LpOutcome::Optimal { value, .. } => assert_eq!(value, r(-5, 4)),
            other => panic!("{other:?}"),
        }
    }
}
