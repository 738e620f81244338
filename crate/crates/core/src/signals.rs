//! Finite signal structures, Bayesian updating and belief distributions.

use serde::Serialize;

use crate::scalar::{sum, Scalar};
use crate::{Error, Result};

/// Row-stochastic matrix from states to realizations.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SignalStructure<T> {
    pub states: Vec<String>,
    pub realizations: Vec<String>,
    pub matrix: Vec<Vec<T>>,
}

fn row_sum_ok<T: Scalar>(s: &T) -> bool {
    s.approx_eq(&T::one())
}

pub(crate) fn default_labels(prefix: &str, n: usize) -> Vec<String> {
    (0..n).map(|i| format!("{prefix}{i}")).collect()
}

impl<T: Scalar> SignalStructure<T> {
    pub fn new(states: Vec<String>, realizations: Vec<String>, matrix: Vec<Vec<T>>) -> Result<Self> {
        if matrix.len() != states.len() || states.is_empty() {
            return Err(Error::Dimension(format!(
                "{} rows for {} states",
                matrix.len(),
                states.len()
            )));
        }
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != realizations.len() {
                return Err(Error::Dimension(format!(
                    "row {i} has {} entries for {} realizations",
                    row.len(),
                    realizations.len()
                )));
            }
            if row.iter().any(|x| *x < T::zero()) {
                return Err(Error::Invariant(format!("row {i} has a negative entry")));
            }
            let s = sum(row);
            if !row_sum_ok(&s) {
                return Err(Error::Invariant(format!("row {i} sums to {s}, not 1")));
            }
        }
        Ok(Self {
            states,
            realizations,
            matrix,
        })
    }

    /// Matrix with generated labels `t0..`, `x0..`.
    pub fn from_matrix(matrix: Vec<Vec<T>>) -> Result<Self> {
        let n = matrix.len();
        let k = matrix.first().map_or(0, Vec::len);
        Self::new(default_labels("t", n), default_labels("x", k), matrix)
    }

    /// Builds from integer ratio rows, `rows[i][j] = (num, den)`.
    pub fn from_ratios(rows: &[&[(i64, i64)]]) -> Result<Self> {
        Self::from_matrix(
            rows.iter()
                .map(|r| r.iter().map(|&(n, d)| T::ratio(n, d)).collect())
                .collect(),
        )
    }

    /// Symmetric binary signal: realization `a` has probability `q` in state 0.
    pub fn binary_symmetric(q: T) -> Self {
        let p = T::one() - q.clone();
        Self {
            states: vec!["A".into(), "B".into()],
            realizations: vec!["a".into(), "b".into()],
            matrix: vec![vec![q.clone(), p.clone()], vec![p, q]],
        }
    }

    /// Identity signal on `n` states (full revelation).
    pub fn revealing(n: usize) -> Self {
        let matrix = (0..n)
            .map(|i| (0..n).map(|j| if i == j { T::one() } else { T::zero() }).collect())
            .collect();
        Self {
            states: default_labels("t", n),
            realizations: default_labels("x", n),
            matrix,
        }
    }

    /// Single-realization signal on `n` states.
    pub fn uninformative(n: usize) -> Self {
        Self {
            states: default_labels("t", n),
            realizations: vec!["x0".into()],
            matrix: vec![vec![T::one()]; n],
        }
    }

    pub fn num_states(&self) -> usize {
        self.matrix.len()
    }

    pub fn num_realizations(&self) -> usize {
        self.realizations.len()
    }

    pub fn entry(&self, state: usize, x: usize) -> &T {
        &self.matrix[state][x]
    }

    pub fn column(&self, x: usize) -> Vec<T> {
        self.matrix.iter().map(|r| r[x].clone()).collect()
    }

    /// Unconditional probability of each realization.
    pub fn marginal(&self, prior: &[T]) -> Vec<T> {
        (0..self.num_realizations())
            .map(|x| {
                self.matrix
                    .iter()
                    .zip(prior)
                    .fold(T::zero(), |acc, (row, p)| acc + row[x].clone() * p.clone())
            })
            .collect()
    }

    pub fn to_f64(&self) -> SignalStructure<f64> {
        SignalStructure {
            states: self.states.clone(),
            realizations: self.realizations.clone(),
            matrix: self
                .matrix
                .iter()
                .map(|r| r.iter().map(Scalar::to_f64_lossy).collect())
                .collect(),
        }
    }

    /// Merges realizations with identical columns up to scale, i.e. equal posteriors.
    pub fn merge_duplicate_realizations(&self) -> Self {
        let mut cols: Vec<Vec<T>> = Vec::new();
        let mut labels = Vec::<String>::new();
        for x in 0..self.num_realizations() {
            let c = self.column(x);
            let total = sum(&c);
            if total.is_zero() {
                continue;
            }
            let found = cols.iter_mut().zip(labels.iter_mut()).find(|(existing, _)| {
                let et = sum(existing);
                existing
                    .iter()
                    .zip(&c)
                    .all(|(a, b)| (a.clone() * total.clone()).approx_eq(&(b.clone() * et.clone())))
            });
            match found {
                Some((existing, label)) => {
                    for (a, b) in existing.iter_mut().zip(&c) {
                        *a = a.clone() + b.clone();
                    }
                    label.push('+');
                    label.push_str(&self.realizations[x]);
                }
                None => {
                    cols.push(c);
                    labels.push(self.realizations[x].clone());
                }
            }
        }
        let matrix = (0..self.num_states())
            .map(|i| cols.iter().map(|c| c[i].clone()).collect())
            .collect();
        Self {
            states: self.states.clone(),
            realizations: labels,
            matrix,
        }
    }
}

pub fn check_prior<T: Scalar>(prior: &[T], n: usize) -> Result<()> {
    if prior.len() != n {
        return Err(Error::Dimension(format!(
            "prior has {} entries, expected {n}",
            prior.len()
        )));
    }
    if prior.iter().any(|p| *p < T::zero()) {
        return Err(Error::Invariant("prior has a negative entry".into()));
    }
    let s = sum(prior);
    if !row_sum_ok(&s) {
        return Err(Error::Invariant(format!("prior sums to {s}, not 1")));
    }
    Ok(())
}

/// Bayes' rule for a single realization.
pub fn posterior_update<T: Scalar>(prior: &[T], signal: &SignalStructure<T>, x: usize) -> Result<Vec<T>> {
    check_prior(prior, signal.num_states())?;
    if x >= signal.num_realizations() {
        return Err(Error::Invalid(format!("realization index {x} out of range")));
    }
    let joint: Vec<T> = prior
        .iter()
        .zip(&signal.matrix)
        .map(|(p, row)| p.clone() * row[x].clone())
        .collect();
    let px = sum(&joint);
    if px <= T::zero() {
        return Err(Error::ZeroProbability(x));
    }
    Ok(joint.into_iter().map(|j| j / px.clone()).collect())
}

/// Finitely supported distribution over beliefs.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BeliefDistribution<T> {
    pub support: Vec<Vec<T>>,
    pub weights: Vec<T>,
}

/// Equality slack for belief vectors when merging support points.
pub fn belief_tol<T: Scalar>() -> T {
    if T::EXACT {
        T::zero()
    } else {
        T::from_f64_lossy(1e-10)
    }
}

pub fn beliefs_equal<T: Scalar>(a: &[T], b: &[T]) -> bool {
    let tol = belief_tol::<T>();
    a.len() == b.len()
        && a.iter()
            .zip(b)
            .all(|(x, y)| (x.clone() - y.clone()).abs() <= tol)
}

impl<T: Scalar> BeliefDistribution<T> {
    pub fn new(support: Vec<Vec<T>>, weights: Vec<T>) -> Result<Self> {
        if support.len() != weights.len() || support.is_empty() {
            return Err(Error::Dimension(format!(
                "{} support points and {} weights",
                support.len(),
                weights.len()
            )));
        }
        let n = support[0].len();
        for (i, b) in support.iter().enumerate() {
            if b.len() != n {
                return Err(Error::Dimension(format!("belief {i} has the wrong length")));
            }
            check_prior(b, n).map_err(|e| Error::Invariant(format!("belief {i}: {e}")))?;
        }
        check_prior(&weights, weights.len()).map_err(|e| Error::Invariant(format!("weights: {e}")))?;
        Ok(Self { support, weights })
    }

    pub fn point_mass(belief: Vec<T>) -> Self {
        Self {
            support: vec![belief],
            weights: vec![T::one()],
        }
    }

    pub fn dim(&self) -> usize {
        self.support.first().map_or(0, Vec::len)
    }

    pub fn len(&self) -> usize {
        self.support.len()
    }

    pub fn is_empty(&self) -> bool {
        self.support.is_empty()
    }

    /// Weighted mean belief.
    pub fn mean(&self) -> Vec<T> {
        let mut m = vec![T::zero(); self.dim()];
        for (b, w) in self.support.iter().zip(&self.weights) {
            for (mi, bi) in m.iter_mut().zip(b) {
                *mi = mi.clone() + w.clone() * bi.clone();
            }
        }
        m
    }

    /// Merges equal beliefs and drops zero weights.
    pub fn merged(&self) -> Self {
        let mut support: Vec<Vec<T>> = Vec::new();
        let mut weights: Vec<T> = Vec::new();
        for (b, w) in self.support.iter().zip(&self.weights) {
            if w.is_zero() {
                continue;
            }
            match support.iter().position(|s| beliefs_equal(s, b)) {
                Some(i) => weights[i] = weights[i].clone() + w.clone(),
                None => {
                    support.push(b.clone());
                    weights.push(w.clone());
                }
            }
        }
        Self { support, weights }
    }

    /// Same support points with the same weights, in any order.
    pub fn same_as(&self, other: &Self) -> bool {
        let a = self.merged();
        let b = other.merged();
        a.len() == b.len()
            && a.support.iter().zip(&a.weights).all(|(s, w)| {
                b.support
                    .iter()
                    .zip(&b.weights)
                    .any(|(t, v)| beliefs_equal(s, t) && (w.clone() - v.clone()).abs() <= belief_tol())
            })
    }

    /// `E_τ[f(q)]`.
    pub fn expect(&self, f: impl Fn(&[T]) -> T) -> T {
        self.support
            .iter()
            .zip(&self.weights)
            .fold(T::zero(), |acc, (b, w)| acc + w.clone() * f(b))
    }

    pub fn to_f64(&self) -> BeliefDistribution<f64> {
        BeliefDistribution {
            support: self
                .support
                .iter()
                .map(|b| b.iter().map(Scalar::to_f64_lossy).collect())
                .collect(),
            weights: self.weights.iter().map(Scalar::to_f64_lossy).collect(),
        }
    }
}

/// Distribution of posteriors induced by a signal, one point per
/// positive-probability realization, with equal posteriors merged.
pub fn induced_posteriors<T: Scalar>(prior: &[T], signal: &SignalStructure<T>) -> Result<BeliefDistribution<T>> {
    check_prior(prior, signal.num_states())?;
    let marg = signal.marginal(prior);
    let mut support = Vec::new();
    let mut weights = Vec::new();
    for (x, px) in marg.iter().enumerate() {
        if *px <= T::zero() {
            continue;
        }
        support.push(posterior_update(prior, signal, x)?);
        weights.push(px.clone());
    }
    Ok(BeliefDistribution { support, weights }.merged())
}

pub fn is_bayes_plausible<T: Scalar>(prior: &[T], dist: &BeliefDistribution<T>) -> bool {
    dist.dim() == prior.len() && beliefs_equal(&dist.mean(), prior)
}

/// Signal inducing `dist` from `prior`: `σ(x|θ) = q_x(θ) τ(q_x) / p(θ)`.
pub fn signal_from_posteriors<T: Scalar>(prior: &[T], dist: &BeliefDistribution<T>) -> Result<SignalStructure<T>> {
    check_prior(prior, prior.len())?;
    if prior.iter().any(|p| p.is_zero()) {
        return Err(Error::Precondition("prior must be interior".into()));
    }
    if !is_bayes_plausible(prior, dist) {
        return Err(Error::Precondition(
            "belief distribution is not Bayes plausible for this prior".into(),
        ));
    }
    let d = dist.merged();
    let matrix: Vec<Vec<T>> = prior
        .iter()
        .enumerate()
        .map(|(th, p)| {
            let mut row: Vec<T> = d
                .support
                .iter()
                .zip(&d.weights)
                .map(|(q, w)| q[th].clone() * w.clone() / p.clone())
                .collect();
            // Absorb float dust so rows are exactly stochastic.
            if !T::EXACT {
                let s = sum(&row);
                for v in row.iter_mut() {
                    *v = v.clone() / s.clone();
                }
            }
            row
        })
        .collect();
    let states = default_labels("t", prior.len());
    let realizations = default_labels("q", d.len());
    SignalStructure::new(states, realizations, matrix)
}

/// Joint table over (covariate, group, type) with a binary score per covariate.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PopulationModel<T> {
    /// `mass[c][g][theta]`
    pub mass: Vec<[[T; 2]; 2]>,
    pub score: Vec<u8>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupRates<T> {
    pub base_rate: T,
    pub false_positive: T,
    pub false_negative: T,
    pub ppv: T,
    /// `P(θ=1 | S=0, g)`, needed for calibration at score 0.
    pub npv_complement: Option<T>,
    /// `FP − RHS` of the identity; `None` when the RHS is undefined (PPV = 0 or p = 1).
    pub identity_residual: Option<T>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct FairnessReport<T> {
    pub groups: [GroupRates<T>; 2],
    pub equal_false_positive: bool,
    pub equal_false_negative: bool,
    pub calibrated: bool,
    pub base_rates_differ: bool,
    /// Both groups have `0 < PPV < 1` and `FN < 1`, where the identity pins down the base rate.
    pub nondegenerate: bool,
}

impl<T> FairnessReport<T> {
    pub fn criteria_held(&self) -> usize {
        [self.equal_false_positive, self.equal_false_negative, self.calibrated]
            .iter()
            .filter(|&&b| b)
            .count()
    }

    /// At most two criteria hold whenever base rates differ in a nondegenerate table.
    pub fn impossibility_respected(&self) -> bool {
        !(self.base_rates_differ && self.nondegenerate && self.criteria_held() == 3)
    }
}

fn ratio_or_undefined<T: Scalar>(num: T, den: T, what: &str, g: usize) -> Result<T> {
    if den <= T::zero() {
        return Err(Error::Undefined(format!("{what} in group {g}")));
    }
    Ok(num / den)
}

pub fn fairness_report<T: Scalar>(pop: &PopulationModel<T>) -> Result<FairnessReport<T>> {
    if pop.mass.len() != pop.score.len() {
        return Err(Error::Dimension("one score per covariate is required".into()));
    }
    if pop.score.iter().any(|&s| s > 1) {
        return Err(Error::Invalid("scores must be 0 or 1".into()));
    }
    let mut total = T::zero();
    for cell in &pop.mass {
        for g in cell {
            for v in g {
                if *v < T::zero() {
                    return Err(Error::Invariant("population table has a negative entry".into()));
                }
                total = total + v.clone();
            }
        }
    }
    if !row_sum_ok(&total) {
        return Err(Error::Invariant(format!("population table sums to {total}, not 1")));
    }
    let mut groups = Vec::with_capacity(2);
    for g in 0..2 {
        // joint[s][theta] within group g
        let mut joint = [[T::zero(), T::zero()], [T::zero(), T::zero()]];
        for (c, cell) in pop.mass.iter().enumerate() {
            let s = pop.score[c] as usize;
            for th in 0..2 {
                joint[s][th] = joint[s][th].clone() + cell[g][th].clone();
            }
        }
        let theta1 = joint[0][1].clone() + joint[1][1].clone();
        let theta0 = joint[0][0].clone() + joint[1][0].clone();
        let s1 = joint[1][0].clone() + joint[1][1].clone();
        let s0 = joint[0][0].clone() + joint[0][1].clone();
        let mass_g = theta0.clone() + theta1.clone();
        let base_rate = ratio_or_undefined(theta1.clone(), mass_g, "base rate", g)?;
        let false_positive = ratio_or_undefined(joint[1][0].clone(), theta0.clone(), "P(S=1 | θ=0)", g)?;
        let false_negative = ratio_or_undefined(joint[0][1].clone(), theta1.clone(), "P(S=0 | θ=1)", g)?;
        let ppv = ratio_or_undefined(joint[1][1].clone(), s1, "P(θ=1 | S=1)", g)?;
        let npv_complement = if s0 > T::zero() {
            Some(joint[0][1].clone() / s0)
        } else {
            None
        };
        let identity_residual = if ppv > T::zero() && base_rate < T::one() {
            let rhs = base_rate.clone() / (T::one() - base_rate.clone())
                * ((T::one() - ppv.clone()) / ppv.clone())
                * (T::one() - false_negative.clone());
            Some(false_positive.clone() - rhs)
        } else {
            None
        };
        groups.push(GroupRates {
            base_rate,
            false_positive,
            false_negative,
            ppv,
            npv_complement,
            identity_residual,
        });
    }
    let g1 = groups.pop().expect("two groups");
    let g0 = groups.pop().expect("two groups");
    let calibrated = g0.ppv.approx_eq(&g1.ppv)
        && match (&g0.npv_complement, &g1.npv_complement) {
            (Some(a), Some(b)) => a.approx_eq(b),
            (None, None) => true,
            _ => false,
        };
    let nondeg = |r: &GroupRates<T>| r.ppv > T::zero() && r.ppv < T::one() && r.false_negative < T::one();
    Ok(FairnessReport {
        equal_false_positive: g0.false_positive.approx_eq(&g1.false_positive),
        equal_false_negative: g0.false_negative.approx_eq(&g1.false_negative),
        calibrated,
        base_rates_differ: !g0.base_rate.approx_eq(&g1.base_rate),
        nondegenerate: nondeg(&g0) && nondeg(&g1),
        groups: [g0, g1],
    })
}
