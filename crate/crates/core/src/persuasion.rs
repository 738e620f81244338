//! Bayesian persuasion with a single receiver and finitely many states and actions.

use rand::Rng;
use serde::Serialize;

use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::scalar::{dot, sum, Scalar};
use crate::signals::{check_prior, default_labels, BeliefDistribution, SignalStructure};
use crate::{Error, Result};

/// Payoff tables are indexed `[action][state]`.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PersuasionInstance<T> {
    pub states: Vec<String>,
    pub prior: Vec<T>,
    pub actions: Vec<String>,
    pub u_receiver: Vec<Vec<T>>,
    pub u_sender: Vec<Vec<T>>,
}

impl<T: Scalar> PersuasionInstance<T> {
    pub fn new(
        states: Vec<String>,
        prior: Vec<T>,
        actions: Vec<String>,
        u_receiver: Vec<Vec<T>>,
        u_sender: Vec<Vec<T>>,
    ) -> Result<Self> {
        let inst = Self { states, prior, actions, u_receiver, u_sender };
        inst.validate()?;
        Ok(inst)
    }

    /// Unlabelled instance.
    pub fn from_tables(prior: Vec<T>, u_receiver: Vec<Vec<T>>, u_sender: Vec<Vec<T>>) -> Result<Self> {
        let (n, m) = (prior.len(), u_receiver.len());
        Self::new(default_labels("t", n), prior, default_labels("a", m), u_receiver, u_sender)
    }

    pub fn validate(&self) -> Result<()> {
        let (n, m) = (self.states.len(), self.actions.len());
        if n == 0 || m == 0 {
            return Err(Error::Invalid("need at least one state and one action".into()));
        }
        check_prior(&self.prior, n)?;
        for (name, t) in [("receiver", &self.u_receiver), ("sender", &self.u_sender)] {
            if t.len() != m || t.iter().any(|r| r.len() != n) {
                return Err(Error::Dimension(format!("{name} payoffs must be actions × states")));
            }
        }
        Ok(())
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn with_prior(&self, prior: Vec<T>) -> Result<Self> {
        let mut out = self.clone();
        out.prior = prior;
        out.validate()?;
        Ok(out)
    }

    /// Sender payoff equal to minus the receiver's.
    pub fn zero_sum(prior: Vec<T>, u_receiver: Vec<Vec<T>>) -> Result<Self> {
        let u_sender = u_receiver.iter().map(|r| r.iter().map(|v| -v.clone()).collect()).collect();
        Self::from_tables(prior, u_receiver, u_sender)
    }
}

/// Receiver's choice: highest expected payoff, then highest sender payoff, then lowest index.
pub fn receiver_action<T: Scalar>(inst: &PersuasionInstance<T>, belief: &[T]) -> Result<usize> {
    check_prior(belief, inst.num_states())?;
    Ok(choose(inst, belief))
}

fn choose<T: Scalar>(inst: &PersuasionInstance<T>, belief: &[T]) -> usize {
    let ur: Vec<T> = inst.u_receiver.iter().map(|r| dot(r, belief)).collect();
    let best = ur.iter().cloned().fold(ur[0].clone(), T::max_of);
    let mut pick: Option<(usize, T)> = None;
    for (a, v) in ur.iter().enumerate() {
        if !v.ge_tol(&best) {
            continue;
        }
        let us = dot(&inst.u_sender[a], belief);
        match &pick {
            Some((_, s)) if !(us.clone() - s.clone() > T::tol()) => {}
            _ => pick = Some((a, us)),
        }
    }
    pick.expect("some action attains the maximum").0
}

/// Sender's expected payoff when the receiver holds `belief`.
pub fn sender_value<T: Scalar>(inst: &PersuasionInstance<T>, belief: &[T]) -> Result<T> {
    let a = receiver_action(inst, belief)?;
    Ok(dot(&inst.u_sender[a], belief))
}

fn binary_belief<T: Scalar>(mu: &T) -> [T; 2] {
    [mu.clone(), T::one() - mu.clone()]
}

/// Concave envelope of the sender value for two states, over the probability `μ` of the first state.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct Envelope<T> {
    /// Points where the receiver's choice can change, with the sender value there.
    pub breakpoints: Vec<(T, T)>,
    /// Vertices of the envelope, increasing in `μ`.
    pub hull: Vec<(T, T)>,
}

impl<T: Scalar> Envelope<T> {
    pub fn eval(&self, mu: &T) -> Result<T> {
        if *mu < T::zero() || *mu > T::one() {
            return Err(Error::Invalid(format!("belief {mu} outside [0,1]")));
        }
        for w in self.hull.windows(2) {
            let ((x0, y0), (x1, y1)) = (&w[0], &w[1]);
            if mu >= x0 && mu <= x1 {
                if x1 == x0 {
                    return Ok(y0.clone().max_of(y1.clone()));
                }
                let t = (mu.clone() - x0.clone()) / (x1.clone() - x0.clone());
                return Ok(y0.clone() + t * (y1.clone() - y0.clone()));
            }
        }
        Ok(self.hull[0].1.clone())
    }
}

/// Upper concave envelope of the sender value for a two-state instance.
pub fn concavify_1d<T: Scalar>(inst: &PersuasionInstance<T>) -> Result<Envelope<T>> {
    inst.validate()?;
    if inst.num_states() != 2 {
        return Err(Error::Precondition(format!("concavification needs 2 states, got {}", inst.num_states())));
    }
    // receiver payoff of a at μ: b_a + μ (a_a − b_a)
    let lines: Vec<(T, T)> = inst
        .u_receiver
        .iter()
        .map(|r| (r[1].clone(), r[0].clone() - r[1].clone()))
        .collect();
    let mut xs = vec![T::zero(), T::one()];
    for i in 0..lines.len() {
        for j in 0..i {
            let ds = lines[i].1.clone() - lines[j].1.clone();
            if ds.is_zero() {
                continue;
            }
            let x = (lines[j].0.clone() - lines[i].0.clone()) / ds;
            if x > T::zero() && x < T::one() {
                xs.push(x);
            }
        }
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    xs.dedup_by(|a, b| a.approx_eq(b));
    let breakpoints: Vec<(T, T)> = xs
        .iter()
        .map(|x| {
            let b = binary_belief(x);
            let v = dot(&inst.u_sender[choose(inst, &b)], &b);
            (x.clone(), v)
        })
        .collect();
    Ok(Envelope { hull: upper_hull(&breakpoints), breakpoints })
}

/// Upper hull of points sorted by abscissa (monotone chain).
fn upper_hull<T: Scalar>(pts: &[(T, T)]) -> Vec<(T, T)> {
    let mut h: Vec<(T, T)> = Vec::new();
    for p in pts {
        while h.len() >= 2 {
            let (o, a) = (&h[h.len() - 2], &h[h.len() - 1]);
            // drop a unless it lies strictly above segment o–p
            let cross = (a.0.clone() - o.0.clone()) * (p.1.clone() - o.1.clone())
                - (a.1.clone() - o.1.clone()) * (p.0.clone() - o.0.clone());
            if cross >= -T::tol() {
                h.pop();
            } else {
                break;
            }
        }
        h.push(p.clone());
    }
    h
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PersuasionSolution<T> {
    pub value: T,
    /// Sender value with no information.
    pub no_information: T,
    /// Rows are states, realizations are recommended actions.
    pub signal: SignalStructure<T>,
    /// Action recommended by each realization.
    pub recommendations: Vec<usize>,
    pub posteriors: BeliefDistribution<T>,
}

impl<T: Scalar> PersuasionSolution<T> {
    pub fn benefits(&self) -> bool {
        self.value.clone() - self.no_information.clone() > T::lp_tol()
    }
}

/// Sender-optimal signal from the obedience program over action recommendations,
/// reduced to at most one more posterior than there are states.
pub fn optimal_signal<T: Scalar>(inst: &PersuasionInstance<T>) -> Result<PersuasionSolution<T>> {
    inst.validate()?;
    let (n, m) = (inst.num_states(), inst.num_actions());
    let var = |a: usize, t: usize| a * n + t;
    let mut obj = vec![T::zero(); n * m];
    for a in 0..m {
        for t in 0..n {
            obj[var(a, t)] = inst.prior[t].clone() * inst.u_sender[a][t].clone();
        }
    }
    let mut lp = LinearProgram::new(n * m).maximize(obj);
    for t in 0..n {
        let terms: Vec<(usize, T)> = (0..m).map(|a| (var(a, t), T::one())).collect();
        lp.add_sparse(&terms, Relation::Eq, T::one());
    }
    for a in 0..m {
        for b in 0..m {
            if a == b {
                continue;
            }
            let terms: Vec<(usize, T)> = (0..n)
                .map(|t| {
                    let gain = inst.u_receiver[a][t].clone() - inst.u_receiver[b][t].clone();
                    (var(a, t), inst.prior[t].clone() * gain)
                })
                .collect();
            lp.add_sparse(&terms, Relation::Ge, T::zero());
        }
    }
    let x = match lp.solve()? {
        LpOutcome::Optimal { x, .. } => x,
        other => {
            return Err(Error::Numerical(format!(
                "obedience program ended as {:?} for instance {inst:?}",
                std::mem::discriminant(&other)
            )))
        }
    };
    // posterior and weight per recommended action
    let mut points: Vec<(usize, Vec<T>, T)> = Vec::new();
    for a in 0..m {
        let joint: Vec<T> = (0..n).map(|t| inst.prior[t].clone() * x[var(a, t)].clone().max_of(T::zero())).collect();
        let w = sum(&joint);
        // float dust would otherwise yield spurious, disobedient posteriors
        if w > T::lp_tol() {
            points.push((a, joint.into_iter().map(|j| j / w.clone()).collect(), w));
        }
    }
    let total = points.iter().fold(T::zero(), |s, p| s + p.2.clone());
    let points = points.into_iter().map(|(a, b, w)| (a, b, w / total.clone())).collect();
    let points = reduce_support(inst, points)?;
    let value = points
        .iter()
        .map(|(a, b, w)| w.clone() * dot(&inst.u_sender[*a], b))
        .fold(T::zero(), |s, v| s + v);
    let matrix: Vec<Vec<T>> = (0..n)
        .map(|t| {
            if inst.prior[t].is_zero() {
                let mut row = vec![T::zero(); points.len()];
                row[0] = T::one();
                return row;
            }
            points
                .iter()
                .map(|(_, b, w)| w.clone() * b[t].clone() / inst.prior[t].clone())
                .collect()
        })
        .collect();
    let signal = SignalStructure::new(
        inst.states.clone(),
        points.iter().map(|(a, _, _)| inst.actions[*a].clone()).collect(),
        matrix,
    )?;
    let posteriors = BeliefDistribution::new(
        points.iter().map(|p| p.1.clone()).collect(),
        points.iter().map(|p| p.2.clone()).collect(),
    )?;
    let no_information = sender_value(inst, &inst.prior)?;
    Ok(PersuasionSolution {
        value,
        no_information,
        signal,
        recommendations: points.iter().map(|p| p.0).collect(),
        posteriors,
    })
}

// Basic optimal reweighting keeps at most (states + 1) posteriors.
fn reduce_support<T: Scalar>(inst: &PersuasionInstance<T>, points: Vec<(usize, Vec<T>, T)>) -> Result<Vec<(usize, Vec<T>, T)>> {
    let n = inst.num_states();
    if points.len() <= n + 1 {
        return Ok(points);
    }
    let k = points.len();
    let c: Vec<T> = points.iter().map(|(a, b, _)| dot(&inst.u_sender[*a], b)).collect();
    let mut lp = LinearProgram::new(k).maximize(c);
    lp.add(vec![T::one(); k], Relation::Eq, T::one());
    for t in 0..n {
        lp.add(points.iter().map(|p| p.1[t].clone()).collect(), Relation::Eq, inst.prior[t].clone());
    }
    match lp.solve()? {
        LpOutcome::Optimal { x, .. } => Ok(points
            .into_iter()
            .zip(x)
            .filter(|(_, w)| *w > T::zero())
            .map(|((a, b, _), w)| (a, b, w))
            .collect()),
        _ => Err(Error::Numerical("support reduction failed".into())),
    }
}

/// The judge and prosecutor: states (guilty, innocent), actions (convict, acquit).
pub fn prosecutor<T: Scalar>(prior_guilty: T) -> Result<PersuasionInstance<T>> {
    let (o, z) = (T::one(), T::zero());
    PersuasionInstance::new(
        vec!["guilty".into(), "innocent".into()],
        vec![prior_guilty.clone(), T::one() - prior_guilty],
        vec!["convict".into(), "acquit".into()],
        vec![vec![o.clone(), z.clone()], vec![z.clone(), o.clone()]],
        vec![vec![o.clone(), o], vec![z.clone(), z]],
    )
}

/// Student and employer: states (L, H), positions (l, m, h).
pub fn student_employer<T: Scalar>(prior_low: T) -> Result<PersuasionInstance<T>> {
    let i = |v: i64| T::ratio(v, 1);
    PersuasionInstance::new(
        vec!["L".into(), "H".into()],
        vec![prior_low.clone(), T::one() - prior_low],
        vec!["l".into(), "m".into(), "h".into()],
        vec![vec![i(0), i(0)], vec![i(-1), i(0)], vec![i(-1), i(1)]],
        vec![vec![i(-1), i(-1)], vec![i(0), i(0)], vec![i(1), i(1)]],
    )
}

/// Two states, `actions` actions, payoffs uniform on a grid of step 1/100 in [-1, 1].
pub fn random_binary_instance<R: Rng + ?Sized>(rng: &mut R, actions: usize) -> PersuasionInstance<f64> {
    let mut draw = || rng.random_range(-100i32..=100) as f64 / 100.0;
    let ur: Vec<Vec<f64>> = (0..actions).map(|_| vec![draw(), draw()]).collect();
    let us: Vec<Vec<f64>> = (0..actions).map(|_| vec![draw(), draw()]).collect();
    let p = rng.random_range(1..100) as f64 / 100.0;
    PersuasionInstance::from_tables(vec![p, 1.0 - p], ur, us).expect("well-formed")
}
