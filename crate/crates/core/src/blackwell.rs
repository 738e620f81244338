//! Garblings, decision-problem values, feasible action tables, mean-preserving spreads.

use rand::Rng;
use serde::Serialize;

use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::scalar::{dot, sum, Scalar};
use crate::signals::{beliefs_equal, check_prior, default_labels, BeliefDistribution, SignalStructure};
use crate::{Error, Result};

/// Actions with a utility table `utility[a][θ]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecisionProblem<T> {
    pub actions: Vec<String>,
    pub utility: Vec<Vec<T>>,
}

impl<T: Scalar> DecisionProblem<T> {
    pub fn new(actions: Vec<String>, utility: Vec<Vec<T>>) -> Result<Self> {
        if actions.is_empty() || actions.len() != utility.len() {
            return Err(Error::Dimension(format!(
                "{} action labels and {} utility rows",
                actions.len(),
                utility.len()
            )));
        }
        let n = utility[0].len();
        if n == 0 || utility.iter().any(|r| r.len() != n) {
            return Err(Error::Dimension("utility rows must share a nonzero state count".into()));
        }
        if utility.iter().flatten().any(|u| !u.to_f64_lossy().is_finite()) {
            return Err(Error::Invalid("utilities must be finite".into()));
        }
        Ok(Self { actions, utility })
    }

    pub fn from_table(utility: Vec<Vec<T>>) -> Result<Self> {
        Self::new(default_labels("a", utility.len()), utility)
    }

    /// `u(a, θ) = 1` when `a == θ`.
    pub fn matching(n: usize) -> Self {
        let utility = (0..n)
            .map(|a| (0..n).map(|t| if a == t { T::one() } else { T::zero() }).collect())
            .collect();
        Self::from_table(utility).expect("square table")
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn num_states(&self) -> usize {
        self.utility[0].len()
    }

    /// Best action against an (unnormalized) weight vector over states, with its payoff.
    pub fn best_response(&self, weights: &[T]) -> (usize, T) {
        let mut best = (0, dot(&self.utility[0], weights));
        for a in 1..self.num_actions() {
            let v = dot(&self.utility[a], weights);
            if v > best.1 {
                best = (a, v);
            }
        }
        best
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct DecisionValue<T> {
    /// Expected payoff when acting optimally after each realization.
    pub gross: T,
    /// Expected payoff of the best action under the prior alone.
    pub prior_value: T,
    /// `gross - prior_value`.
    pub value: T,
    /// Optimal action per realization (`None` for zero-probability realizations).
    pub policy: Vec<Option<usize>>,
}

pub fn decision_value<T: Scalar>(
    prior: &[T],
    signal: &SignalStructure<T>,
    problem: &DecisionProblem<T>,
) -> Result<DecisionValue<T>> {
    let n = signal.num_states();
    check_prior(prior, n)?;
    if problem.num_states() != n {
        return Err(Error::Dimension(format!(
            "decision problem has {} states, signal has {n}",
            problem.num_states()
        )));
    }
    let mut gross = T::zero();
    let mut policy = Vec::with_capacity(signal.num_realizations());
    for x in 0..signal.num_realizations() {
        let joint: Vec<T> = (0..n)
            .map(|t| prior[t].clone() * signal.entry(t, x).clone())
            .collect();
        if sum(&joint) <= T::zero() {
            policy.push(None);
            continue;
        }
        let (a, v) = problem.best_response(&joint);
        gross = gross + v;
        policy.push(Some(a));
    }
    let (_, prior_value) = problem.best_response(prior);
    let mut value = gross.clone() - prior_value.clone();
    if value < T::zero() && value.approx_eq(&T::zero()) {
        value = T::zero();
    }
    Ok(DecisionValue { gross, prior_value, value, policy })
}

/// Row-stochastic `M` with `Q M = P`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GarblingCertificate<T> {
    pub kernel: Vec<Vec<T>>,
    pub residual: T,
}

fn same_states<T: Scalar>(q: &SignalStructure<T>, p: &SignalStructure<T>) -> Result<()> {
    if q.num_states() != p.num_states() {
        return Err(Error::Dimension(format!(
            "signals have {} and {} states",
            q.num_states(),
            p.num_states()
        )));
    }
    Ok(())
}

/// Max-abs entry of `Q M - P` over the listed states.
pub fn reconstruction_residual<T: Scalar>(
    q: &SignalStructure<T>,
    p: &SignalStructure<T>,
    kernel: &[Vec<T>],
    states: &[usize],
) -> T {
    let mut worst = T::zero();
    for &t in states {
        for y in 0..p.num_realizations() {
            let mut v = T::zero();
            for (x, row) in kernel.iter().enumerate() {
                v = v + q.entry(t, x).clone() * row[y].clone();
            }
            worst = worst.max_of((v - p.entry(t, y).clone()).abs());
        }
    }
    worst
}

/// Smallest achievable max-abs residual of `Q M - P` over row-stochastic `M`,
/// restricted to `states`, with the minimizing kernel.
pub fn min_garbling_residual<T: Scalar>(
    q: &SignalStructure<T>,
    p: &SignalStructure<T>,
    states: &[usize],
) -> Result<(T, Vec<Vec<T>>)> {
    same_states(q, p)?;
    let (nx, ny) = (q.num_realizations(), p.num_realizations());
    let nv = nx * ny + 1;
    let t_var = nx * ny;
    let mut c = vec![T::zero(); nv];
    c[t_var] = T::one();
    let mut lp = LinearProgram::new(nv).minimize(c);
    for x in 0..nx {
        let terms: Vec<(usize, T)> = (0..ny).map(|y| (x * ny + y, T::one())).collect();
        lp.add_sparse(&terms, Relation::Eq, T::one());
    }
    for &s in states {
        for y in 0..ny {
            let mut terms: Vec<(usize, T)> = (0..nx)
                .filter(|&x| !q.entry(s, x).is_zero())
                .map(|x| (x * ny + y, q.entry(s, x).clone()))
                .collect();
            // Σ_x q M - P <= t and >= -t
            terms.push((t_var, -T::one()));
            lp.add_sparse(&terms, Relation::Le, p.entry(s, y).clone());
            let last = terms.len() - 1;
            terms[last].1 = T::one();
            lp.add_sparse(&terms, Relation::Ge, p.entry(s, y).clone());
        }
    }
    match lp.solve()? {
        LpOutcome::Optimal { x, .. } => {
            let kernel: Vec<Vec<T>> = (0..nx).map(|i| x[i * ny..(i + 1) * ny].to_vec()).collect();
            let res = reconstruction_residual(q, p, &kernel, states);
            Ok((res, kernel))
        }
        other => Err(Error::Numerical(format!("residual program ended as {other:?}"))),
    }
}

/// Whether `p` is a garbling of `q`; returns the kernel when it is.
pub fn garbling_test<T: Scalar>(
    q: &SignalStructure<T>,
    p: &SignalStructure<T>,
) -> Result<Option<GarblingCertificate<T>>> {
    let states: Vec<usize> = (0..q.num_states()).collect();
    let (residual, kernel) = min_garbling_residual(q, p, &states)?;
    if residual > T::lp_tol() {
        return Ok(None);
    }
    Ok(Some(canonical(q, p, &states, residual, kernel)?))
}

fn canonical<T: Scalar>(
    q: &SignalStructure<T>,
    p: &SignalStructure<T>,
    states: &[usize],
    residual: T,
    kernel: Vec<Vec<T>>,
) -> Result<GarblingCertificate<T>> {
    let kernel = ordered_kernel(q, p, states, &residual)?.unwrap_or(kernel);
    let residual = reconstruction_residual(q, p, &kernel, states);
    Ok(GarblingCertificate { kernel, residual })
}

/// Among kernels within `slack` of reproducing `p`, the one moving least mass between
/// distant positions in the listed realization orders. Makes the certificate canonical
/// when `q` has realizations with proportional likelihoods.
fn ordered_kernel<T: Scalar>(
    q: &SignalStructure<T>,
    p: &SignalStructure<T>,
    states: &[usize],
    slack: &T,
) -> Result<Option<Vec<Vec<T>>>> {
    let (nx, ny) = (q.num_realizations(), p.num_realizations());
    let pos = |i: usize, n: usize| if n > 1 { T::ratio(i as i64, n as i64 - 1) } else { T::zero() };
    let c: Vec<T> = (0..nx)
        .flat_map(|x| (0..ny).map(move |y| (x, y)))
        .map(|(x, y)| (pos(x, nx) - pos(y, ny)).abs())
        .collect();
    let mut lp = LinearProgram::new(nx * ny).minimize(c);
    for x in 0..nx {
        let terms: Vec<(usize, T)> = (0..ny).map(|y| (x * ny + y, T::one())).collect();
        lp.add_sparse(&terms, Relation::Eq, T::one());
    }
    for &s in states {
        for y in 0..ny {
            let terms: Vec<(usize, T)> = (0..nx)
                .filter(|&x| !q.entry(s, x).is_zero())
                .map(|x| (x * ny + y, q.entry(s, x).clone()))
                .collect();
            if slack.is_zero() {
                lp.add_sparse(&terms, Relation::Eq, p.entry(s, y).clone());
            } else {
                lp.add_sparse(&terms, Relation::Le, p.entry(s, y).clone() + slack.clone());
                lp.add_sparse(&terms, Relation::Ge, p.entry(s, y).clone() - slack.clone());
            }
        }
    }
    Ok(match lp.solve()? {
        LpOutcome::Optimal { x, .. } => Some((0..nx).map(|i| x[i * ny..(i + 1) * ny].to_vec()).collect()),
        _ => None,
    })
}

/// Mixing kernel `α` with `σ α = d`, where `d[θ][a]` is a state-to-action table.
pub fn feasible_test<T: Scalar>(signal: &SignalStructure<T>, d: &[Vec<T>]) -> Result<Option<Vec<Vec<T>>>> {
    if d.len() != signal.num_states() || d.is_empty() {
        return Err(Error::Dimension("action table needs one row per state".into()));
    }
    let na = d[0].len();
    if na == 0 || d.iter().any(|r| r.len() != na) {
        return Err(Error::Dimension("action table rows differ in length".into()));
    }
    for (i, r) in d.iter().enumerate() {
        check_prior(r, na).map_err(|e| Error::Invariant(format!("action row {i}: {e}")))?;
    }
    let as_signal = SignalStructure::from_matrix(d.to_vec())?;
    Ok(garbling_test(signal, &as_signal)?.map(|c| c.kernel))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BlackwellRelation {
    Equivalent,
    FirstStrictlyMore,
    SecondStrictlyMore,
    Incomparable,
    /// Residual in the gap between the garbling tolerance and the strictness guard.
    Borderline,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BlackwellComparison<T> {
    /// Kernel showing the second signal is a garbling of the first.
    pub first_dominates: Option<GarblingCertificate<T>>,
    pub second_dominates: Option<GarblingCertificate<T>>,
    pub forward_residual: T,
    pub reverse_residual: T,
    pub relation: BlackwellRelation,
}

fn strict_gap<T: Scalar>() -> T {
    if T::EXACT {
        T::zero()
    } else {
        T::from_f64_lossy(1e-7)
    }
}

/// Garbling tests in both directions, restricted to states with positive prior mass.
pub fn blackwell_compare<T: Scalar>(
    prior: &[T],
    first: &SignalStructure<T>,
    second: &SignalStructure<T>,
) -> Result<BlackwellComparison<T>> {
    same_states(first, second)?;
    check_prior(prior, first.num_states())?;
    let states: Vec<usize> = (0..prior.len()).filter(|&i| prior[i] > T::zero()).collect();
    let (fr, fk) = min_garbling_residual(first, second, &states)?;
    let (rr, rk) = min_garbling_residual(second, first, &states)?;
    let tol = T::lp_tol();
    let gap = strict_gap::<T>();
    let fwd = fr <= tol;
    let rev = rr <= tol;
    let relation = match (fwd, rev) {
        (true, true) => BlackwellRelation::Equivalent,
        (true, false) if rr > gap => BlackwellRelation::FirstStrictlyMore,
        (false, true) if fr > gap => BlackwellRelation::SecondStrictlyMore,
        (false, false) if fr > gap && rr > gap => BlackwellRelation::Incomparable,
        _ => BlackwellRelation::Borderline,
    };
    let first_dominates = if fwd { Some(canonical(first, second, &states, fr.clone(), fk)?) } else { None };
    let second_dominates = if rev { Some(canonical(second, first, &states, rr.clone(), rk)?) } else { None };
    Ok(BlackwellComparison {
        first_dominates,
        second_dominates,
        forward_residual: fr,
        reverse_residual: rr,
        relation,
    })
}

/// Kernel from the support of `g` (rows) to the support of `f` (columns)
/// witnessing that `f` is a mean-preserving spread of `g`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpreadKernel<T> {
    pub coarse: BeliefDistribution<T>,
    pub fine: BeliefDistribution<T>,
    pub kernel: Vec<Vec<T>>,
}

impl<T: Scalar> SpreadKernel<T> {
    /// Distribution of the fine beliefs obtained by pushing `coarse` through the kernel.
    pub fn pushforward(&self) -> Vec<T> {
        (0..self.fine.len())
            .map(|i| {
                self.coarse
                    .weights
                    .iter()
                    .zip(&self.kernel)
                    .fold(T::zero(), |acc, (w, row)| acc + w.clone() * row[i].clone())
            })
            .collect()
    }
}

/// Whether `f` is a mean-preserving spread of `g`.
pub fn mps_test<T: Scalar>(f: &BeliefDistribution<T>, g: &BeliefDistribution<T>) -> Result<Option<SpreadKernel<T>>> {
    if f.dim() != g.dim() {
        return Err(Error::Dimension("belief distributions live on different simplices".into()));
    }
    let (f, g) = (f.merged(), g.merged());
    if !beliefs_equal(&f.mean(), &g.mean()) {
        return Ok(None);
    }
    let (nf, ng, d) = (f.len(), g.len(), f.dim());
    let idx = |j: usize, i: usize| j * nf + i;
    let mut lp = LinearProgram::new(ng * nf);
    for j in 0..ng {
        let terms: Vec<(usize, T)> = (0..nf).map(|i| (idx(j, i), T::one())).collect();
        lp.add_sparse(&terms, Relation::Eq, T::one());
        // barycenter of row j equals the coarse belief, coordinate by coordinate
        for k in 0..d.saturating_sub(1) {
            let terms: Vec<(usize, T)> = (0..nf).map(|i| (idx(j, i), f.support[i][k].clone())).collect();
            lp.add_sparse(&terms, Relation::Eq, g.support[j][k].clone());
        }
    }
    for i in 0..nf {
        let terms: Vec<(usize, T)> = (0..ng).map(|j| (idx(j, i), g.weights[j].clone())).collect();
        lp.add_sparse(&terms, Relation::Eq, f.weights[i].clone());
    }
    Ok(match lp.solve()? {
        LpOutcome::Optimal { x, .. } => {
            let kernel = (0..ng).map(|j| x[j * nf..(j + 1) * nf].to_vec()).collect();
            Some(SpreadKernel { coarse: g, fine: f, kernel })
        }
        _ => None,
    })
}

/// `f` dominates `g` in the convex order.
pub fn convex_order_test<T: Scalar>(f: &BeliefDistribution<T>, g: &BeliefDistribution<T>) -> Result<bool> {
    Ok(mps_test(f, g)?.is_some())
}

/// Max of affine functions `b + a·x` on beliefs.
#[derive(Clone, Debug, PartialEq)]
pub struct MaxAffine {
    pub pieces: Vec<(Vec<f64>, f64)>,
}

impl MaxAffine {
    pub fn random<R: Rng + ?Sized>(rng: &mut R, dim: usize, max_pieces: usize) -> Self {
        let k = rng.random_range(1..=max_pieces.max(1));
        let pieces = (0..k)
            .map(|_| {
                let a = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
                (a, rng.random_range(-1.0..1.0))
            })
            .collect();
        Self { pieces }
    }

    pub fn eval(&self, x: &[f64]) -> f64 {
        self.pieces
            .iter()
            .map(|(a, b)| b + a.iter().zip(x).map(|(u, v)| u * v).sum::<f64>())
            .fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn expect(&self, dist: &BeliefDistribution<f64>) -> f64 {
        dist.support.iter().zip(&dist.weights).map(|(b, w)| w * self.eval(b)).sum()
    }
}

/// Number of sampled convex functions with `E_f φ < E_g φ` beyond `1e-9`.
pub fn convex_function_violations<R: Rng + ?Sized>(
    rng: &mut R,
    f: &BeliefDistribution<f64>,
    g: &BeliefDistribution<f64>,
    samples: usize,
) -> usize {
    (0..samples)
        .filter(|_| {
            let phi = MaxAffine::random(rng, f.dim(), 5);
            phi.expect(f) < phi.expect(g) - 1e-9
        })
        .count()
}

pub fn random_stochastic_row<R: Rng + ?Sized>(rng: &mut R, n: usize) -> Vec<f64> {
    let w: Vec<f64> = (0..n).map(|_| rng.random::<f64>() + 1e-3).collect();
    let s: f64 = w.iter().sum();
    w.into_iter().map(|v| v / s).collect()
}

pub fn random_signal<R: Rng + ?Sized>(rng: &mut R, states: usize, realizations: usize) -> SignalStructure<f64> {
    let m = (0..states).map(|_| random_stochastic_row(rng, realizations)).collect();
    SignalStructure::from_matrix(m).expect("stochastic rows")
}

/// Signal `σ M` for a random kernel `M`.
pub fn random_garbling<R: Rng + ?Sized>(rng: &mut R, signal: &SignalStructure<f64>, realizations: usize) -> SignalStructure<f64> {
    let kernel: Vec<Vec<f64>> = (0..signal.num_realizations())
        .map(|_| random_stochastic_row(rng, realizations))
        .collect();
    let m = (0..signal.num_states())
        .map(|t| {
            (0..realizations)
                .map(|y| (0..signal.num_realizations()).map(|x| signal.entry(t, x) * kernel[x][y]).sum())
                .collect()
        })
        .collect();
    SignalStructure::from_matrix(m).expect("stochastic rows")
}

pub fn random_problem<R: Rng + ?Sized>(rng: &mut R, actions: usize, states: usize) -> DecisionProblem<f64> {
    let u = (0..actions)
        .map(|_| (0..states).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    DecisionProblem::from_table(u).expect("finite table")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;
    use crate::signals::induced_posteriors;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn r(n: i64, d: i64) -> Rational {
        Rational::ratio(n, d)
    }

    fn p_signal() -> SignalStructure<Rational> {
        SignalStructure::from_ratios(&[&[(3, 4), (1, 4)], &[(1, 4), (3, 4)]]).unwrap()
    }

    fn q_signal() -> SignalStructure<Rational> {
        SignalStructure::from_ratios(&[
            &[(9, 16), (3, 16), (3, 16), (1, 16)],
            &[(1, 16), (3, 16), (3, 16), (9, 16)],
        ])
        .unwrap()
    }

    #[test]
    fn forgetting_kernel() {
        let cert = garbling_test(&q_signal(), &p_signal()).unwrap().unwrap();
        assert_eq!(cert.residual, r(0, 1));
        let (one, zero) = (r(1, 1), r(0, 1));
        assert_eq!(
            cert.kernel,
            vec![
                vec![one.clone(), zero.clone()],
                vec![one.clone(), zero.clone()],
                vec![zero.clone(), one.clone()],
                vec![zero, one]
            ]
        );
        assert_eq!(reconstruction_residual(&q_signal(), &p_signal(), &cert.kernel, &[0, 1]), r(0, 1));
        assert!(garbling_test(&p_signal(), &q_signal()).unwrap().is_none());
    }

    #[test]
    fn identity_garbles_anything() {
        let id = SignalStructure::<Rational>::revealing(2);
        let cert = garbling_test(&id, &p_signal()).unwrap().unwrap();
        assert_eq!(cert.kernel, p_signal().matrix);
    }

    #[test]
    fn symmetric_binary_order() {
        let weak = SignalStructure::binary_symmetric(r(3, 5));
        let strong = SignalStructure::binary_symmetric(r(4, 5));
        assert!(garbling_test(&strong, &weak).unwrap().is_some());
        assert!(garbling_test(&weak, &strong).unwrap().is_none());
        let c = blackwell_compare(&[r(1, 2), r(1, 2)], &strong, &weak).unwrap();
        assert_eq!(c.relation, BlackwellRelation::FirstStrictlyMore);
    }

    #[test]
    fn three_realization_exercise() {
        let p = SignalStructure::from_ratios(&[&[(2, 3), (1, 3), (0, 1)], &[(0, 1), (1, 3), (2, 3)]]).unwrap();
        let q = SignalStructure::from_ratios(&[&[(1, 6), (5, 6)], &[(5, 6), (1, 6)]]).unwrap();
        assert!(garbling_test(&p, &q).unwrap().is_some());
        let c = blackwell_compare(&[r(1, 2), r(1, 2)], &p, &q).unwrap();
        assert_eq!(c.relation, BlackwellRelation::FirstStrictlyMore);
    }

    #[test]
    fn incomparable_pair() {
        let s = SignalStructure::from_ratios(&[&[(1, 1), (0, 1)], &[(0, 1), (1, 1)], &[(0, 1), (1, 1)]]).unwrap();
        let s2 = SignalStructure::from_ratios(&[&[(1, 1), (0, 1)], &[(0, 1), (1, 1)], &[(1, 1), (0, 1)]]).unwrap();
        let prior = vec![r(1, 3); 3];
        let c = blackwell_compare(&prior, &s, &s2).unwrap();
        assert_eq!(c.relation, BlackwellRelation::Incomparable);
        let u = DecisionProblem::from_table(vec![
            vec![r(1, 1), r(0, 1), r(0, 1)],
            vec![r(0, 1), r(1, 1), r(1, 1)],
        ])
        .unwrap();
        let u2 = DecisionProblem::from_table(vec![
            vec![r(1, 1), r(0, 1), r(1, 1)],
            vec![r(0, 1), r(1, 1), r(0, 1)],
        ])
        .unwrap();
        let v = |sig: &SignalStructure<Rational>, d: &DecisionProblem<Rational>| decision_value(&prior, sig, d).unwrap().value;
        assert!(v(&s, &u) > v(&s2, &u));
        assert!(v(&s2, &u2) > v(&s, &u2));
    }

    #[test]
    fn matching_value() {
        let prior = [r(1, 2), r(1, 2)];
        let q = r(7, 10);
        let dv = decision_value(&prior, &SignalStructure::binary_symmetric(q.clone()), &DecisionProblem::matching(2)).unwrap();
        assert_eq!(dv.gross, q.clone());
        assert_eq!(dv.value, q - r(1, 2));
        let none = decision_value(&prior, &SignalStructure::uninformative(2), &DecisionProblem::matching(2)).unwrap();
        assert_eq!(none.value, r(0, 1));
        // a second independent draw adds nothing for matching
        let vp = decision_value(&prior, &p_signal(), &DecisionProblem::matching(2)).unwrap();
        let vq = decision_value(&prior, &q_signal(), &DecisionProblem::matching(2)).unwrap();
        assert_eq!(vp.value, vq.value);
    }

    #[test]
    fn feasible_tables() {
        let sig = p_signal();
        assert!(feasible_test(&sig, &sig.matrix).unwrap().is_some());
        let d = vec![vec![r(1, 3), r(2, 3)], vec![r(1, 3), r(2, 3)]];
        assert!(feasible_test(&sig, &d).unwrap().is_some());
        let rev = SignalStructure::<Rational>::revealing(2);
        let d2 = vec![vec![r(1, 5), r(4, 5)], vec![r(1, 1), r(0, 1)]];
        assert_eq!(feasible_test(&rev, &d2).unwrap().unwrap(), d2);
        assert!(feasible_test(&sig, &d2).unwrap().is_none());
    }

    #[test]
    fn spread_of_the_example() {
        let prior = [r(1, 2), r(1, 2)];
        let fq = induced_posteriors(&prior, &q_signal()).unwrap();
        let fp = induced_posteriors(&prior, &p_signal()).unwrap();
        let k = mps_test(&fq, &fp).unwrap().unwrap();
        assert_eq!(k.pushforward(), k.fine.weights);
        for (j, row) in k.kernel.iter().enumerate() {
            let mut w: Vec<Rational> = row.iter().filter(|v| **v > r(0, 1)).cloned().collect();
            w.sort();
            assert_eq!(w, vec![r(3, 8), r(5, 8)], "row {j}");
        }
        assert!(mps_test(&fp, &fq).unwrap().is_none());
        assert!(mps_test(&fp, &fp).unwrap().is_some());
    }

    #[test]
    fn degenerate_versus_revealing() {
        let prior = vec![r(1, 3), r(2, 3)];
        let point = BeliefDistribution::point_mass(prior.clone());
        let full = induced_posteriors(&prior, &SignalStructure::revealing(2)).unwrap();
        assert!(convex_order_test(&full, &point).unwrap());
        assert!(!convex_order_test(&point, &full).unwrap());
    }

    #[test]
    fn random_garblings_lose_value() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..20 {
            let s = random_signal(&mut rng, 3, 3);
            let g = random_garbling(&mut rng, &s, 2);
            assert!(garbling_test(&s, &g).unwrap().is_some());
            let prior = random_stochastic_row(&mut rng, 3);
            let d = random_problem(&mut rng, 3, 3);
            let vs = decision_value(&prior, &s, &d).unwrap().value;
            let vg = decision_value(&prior, &g, &d).unwrap().value;
            assert!(vs >= vg - 1e-9);
        }
    }

    #[test]
    fn convex_functions_respect_spreads() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let prior = [0.5, 0.5];
        let fq = induced_posteriors(&prior, &q_signal().to_f64()).unwrap();
        let fp = induced_posteriors(&prior, &p_signal().to_f64()).unwrap();
        assert_eq!(convex_function_violations(&mut rng, &fq, &fp, 200), 0);
    }
}
