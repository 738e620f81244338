//! Model uncertainty and misspecification: asymptotic beliefs under a step-density
//! model of signal accuracy, KL-minimizer limits, and Berk–Nash equilibrium checks.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::infocost::kl;
use crate::learning::path_rng;
use crate::lp::{LinearProgram, LpOutcome, Relation};
use crate::signals::check_prior;
use crate::{Error, Result};

/// Slack allowed in best-reply comparisons.
pub const OPTIMALITY_TOL: f64 = 1e-9;
/// Two divergences closer than this are treated as tied.
pub const DIVERGENCE_TIE: f64 = 1e-12;

/// Two agents, each unsure of the accuracy `γ` of a symmetric binary signal,
/// with a step density concentrated on a window of width `λ` around `γ^i`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AcyModel {
    /// Each agent's prior probability of `A`.
    pub prior_a: [f64; 2],
    pub gamma: [f64; 2],
    pub eps: f64,
    pub lambda: f64,
}

impl AcyModel {
    pub fn new(prior_a: [f64; 2], gamma: [f64; 2], eps: f64, lambda: f64) -> Result<Self> {
        let m = Self { prior_a, gamma, eps, lambda };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::Invariant("eps must lie in (0,1)".into()));
        }
        if !(self.lambda > 0.0 && self.lambda <= 1.0) {
            return Err(Error::Invariant("lambda must lie in (0,1]".into()));
        }
        for i in 0..2 {
            if !(self.gamma[i] > 0.5 && self.gamma[i] < 1.0) {
                return Err(Error::Invariant(format!("gamma of agent {} must lie in (1/2,1)", i + 1)));
            }
            if !(self.prior_a[i] > 0.0 && self.prior_a[i] < 1.0) {
                return Err(Error::Invariant(format!("prior of agent {} must lie in (0,1)", i + 1)));
            }
        }
        Ok(())
    }

    /// Small-uncertainty regime: windows disjoint from each other and from their mirrors.
    pub fn check_regime(&self) -> Result<()> {
        let gap = (self.gamma[0] - self.gamma[1]).abs();
        if self.lambda >= gap {
            return Err(Error::Invariant(format!(
                "lambda {} must be below the gap {gap} between the two accuracies",
                self.lambda
            )));
        }
        if self.gamma.iter().any(|g| g - self.lambda / 2.0 <= 0.5) {
            return Err(Error::Invariant("each window must lie strictly above 1/2".into()));
        }
        Ok(())
    }

    fn agent(&self, agent: usize) -> Result<usize> {
        if agent >= 2 {
            return Err(Error::UnknownAgent(agent));
        }
        Ok(agent)
    }

    pub fn density(&self, agent: usize, g: f64) -> Result<f64> {
        let i = self.agent(agent)?;
        let half = self.lambda / 2.0;
        let inside = g > self.gamma[i] - half && g < self.gamma[i] + half;
        Ok(if inside { self.eps + (1.0 - self.eps) / self.lambda } else { self.eps })
    }

    /// Limiting likelihood ratio of `B` to `A` at long-run frequency `rho` of `a`.
    pub fn likelihood_ratio(&self, agent: usize, rho: f64) -> Result<f64> {
        Ok(self.density(agent, 1.0 - rho)? / self.density(agent, rho)?)
    }

    pub fn asymptotic_belief(&self, agent: usize, rho: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&rho) {
            return Err(Error::Invalid(format!("frequency {rho} outside [0,1]")));
        }
        let p = self.prior_a[self.agent(agent)?];
        Ok(1.0 / (1.0 + (1.0 - p) / p * self.likelihood_ratio(agent, rho)?))
    }

    /// `|φ¹ − φ²|` at each frequency. With `require_regime` the small-uncertainty
    /// conditions are enforced first.
    pub fn disagreement_profile(&self, rhos: &[f64], require_regime: bool) -> Result<Vec<f64>> {
        if require_regime {
            self.check_regime()?;
        }
        rhos.iter()
            .map(|&r| Ok((self.asymptotic_belief(0, r)? - self.asymptotic_belief(1, r)?).abs()))
            .collect()
    }
}

/// Limiting belief in `A` for an agent certain that the accuracy is `gamma`.
pub fn dogmatic_asymptotic_belief(prior_a: f64, gamma: f64, rho: f64) -> f64 {
    if gamma == 0.5 || rho == 0.5 {
        return prior_a;
    }
    let favours_a = (rho > 0.5) == (gamma > 0.5);
    if favours_a {
        1.0
    } else {
        0.0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BerkLimit {
    /// `D(f* ‖ f_θ)` in nats, per parameter.
    pub divergences: Vec<f64>,
    pub argmin: Vec<usize>,
}

fn argmin_set(values: &[f64], keep: impl Fn(usize) -> bool) -> Vec<usize> {
    let best = values
        .iter()
        .enumerate()
        .filter(|(i, _)| keep(*i))
        .map(|(_, v)| *v)
        .fold(f64::INFINITY, f64::min);
    (0..values.len())
        .filter(|&i| keep(i))
        .filter(|&i| values[i] == best || (values[i] - best).abs() <= DIVERGENCE_TIE)
        .collect()
}

/// Parameters whose densities are KL-closest to the true density.
pub fn berk_limit(densities: &[Vec<f64>], truth: &[f64]) -> Result<BerkLimit> {
    berk_limit_with_prior(None, densities, truth)
}

/// As [`berk_limit`], ignoring parameters without prior mass.
pub fn berk_limit_with_prior(prior: Option<&[f64]>, densities: &[Vec<f64>], truth: &[f64]) -> Result<BerkLimit> {
    if densities.is_empty() {
        return Err(Error::Invalid("no parameters".into()));
    }
    if let Some(p) = prior {
        check_prior(p, densities.len())?;
    }
    let divergences = densities.iter().map(|f| kl(truth, f)).collect::<Result<Vec<f64>>>()?;
    let charged = |i: usize| prior.is_none_or(|p| p[i] > 0.0);
    if (0..divergences.len()).filter(|&i| charged(i)).all(|i| divergences[i].is_infinite()) {
        return Err(Error::Precondition(
            "every parameter assigns zero probability to some realization the truth produces".into(),
        ));
    }
    let argmin = argmin_set(&divergences, charged);
    Ok(BerkLimit { divergences, argmin })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MisspecSimReport {
    pub paths: usize,
    pub horizon: usize,
    pub threshold: f64,
    pub argmin: Vec<usize>,
    /// Share of paths with posterior mass on the argmin set at least `threshold` at the horizon.
    pub fraction_at_horizon: f64,
    /// Share of paths reaching the threshold at some period up to the horizon.
    pub fraction_ever: f64,
    pub median_at_horizon: f64,
}

/// Posterior mass on the KL-minimizing set along paths drawn from `truth`.
pub fn misspecified_learning_sim(
    prior: &[f64],
    densities: &[Vec<f64>],
    truth: &[f64],
    n_paths: usize,
    t: usize,
    threshold: f64,
    seed: u64,
) -> Result<MisspecSimReport> {
    let limit = berk_limit_with_prior(Some(prior), densities, truth)?;
    if n_paths == 0 {
        return Err(Error::Invalid("need at least one path".into()));
    }
    let draw = WeightedIndex::new(truth).map_err(|e| Error::Invalid(e.to_string()))?;
    let ln_f: Vec<Vec<f64>> = densities
        .iter()
        .map(|r| r.iter().map(|v| if *v > 0.0 { v.ln() } else { f64::NEG_INFINITY }).collect())
        .collect();
    let ln_prior: Vec<f64> = prior.iter().map(|v| if *v > 0.0 { v.ln() } else { f64::NEG_INFINITY }).collect();
    let in_set: Vec<bool> = (0..densities.len()).map(|i| limit.argmin.contains(&i)).collect();
    let mass = |logw: &[f64]| -> f64 {
        let m = logw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let (mut num, mut den) = (0.0, 0.0);
        for (i, l) in logw.iter().enumerate() {
            let w = (l - m).exp();
            den += w;
            if in_set[i] {
                num += w;
            }
        }
        num / den
    };
    let results: Vec<(f64, bool)> = (0..n_paths)
        .into_par_iter()
        .map(|p| {
            let mut rng = path_rng(seed, p);
            let mut logw = ln_prior.clone();
            let mut ever = mass(&logw) >= threshold;
            for _ in 0..t {
                let x = draw.sample(&mut rng);
                for (l, row) in logw.iter_mut().zip(&ln_f) {
                    *l += row[x];
                }
                if !ever && mass(&logw) >= threshold {
                    ever = true;
                }
            }
            (mass(&logw), ever)
        })
        .collect();
    let mut finals: Vec<f64> = results.iter().map(|r| r.0).collect();
    finals.sort_by(|a, b| a.total_cmp(b));
    Ok(MisspecSimReport {
        paths: n_paths,
        horizon: t,
        threshold,
        argmin: limit.argmin,
        fraction_at_horizon: finals.iter().filter(|v| **v >= threshold).count() as f64 / n_paths as f64,
        fraction_ever: results.iter().filter(|r| r.1).count() as f64 / n_paths as f64,
        median_at_horizon: finals[n_paths / 2],
    })
}

/// One parameter of a subjective model: `q[s][a][y]`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ParamTable {
    #[serde(default)]
    pub name: String,
    pub q: Vec<Vec<Vec<f64>>>,
}

/// Single agent who observes a signal, acts, and sees a consequence.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SubjectiveModel {
    pub states: Vec<String>,
    pub signals: Vec<String>,
    pub actions: Vec<String>,
    pub consequences: Vec<String>,
    /// `joint[ω][s]`
    pub joint: Vec<Vec<f64>>,
    /// `feedback[a][ω]` is the consequence index.
    pub feedback: Vec<Vec<usize>>,
    /// `utility[a][y]`
    pub utility: Vec<Vec<f64>>,
    pub params: Vec<ParamTable>,
}

fn check_param_tables(params: &[ParamTable], ns: usize, na: usize, ny: usize, who: &str) -> Result<()> {
    if params.is_empty() {
        return Err(Error::Invalid(format!("{who}: no parameters")));
    }
    for (k, p) in params.iter().enumerate() {
        if p.q.len() != ns || p.q.iter().any(|r| r.len() != na || r.iter().any(|c| c.len() != ny)) {
            return Err(Error::Dimension(format!("{who}: parameter {k} has the wrong shape")));
        }
        for row in p.q.iter().flatten() {
            check_prior(row, ny).map_err(|e| Error::Invariant(format!("{who}: parameter {k}: {e}")))?;
        }
    }
    Ok(())
}

fn check_strategy(sigma: &[Vec<f64>], ns: usize, na: usize) -> Result<()> {
    if sigma.len() != ns {
        return Err(Error::Dimension("strategy needs one row per signal".into()));
    }
    for row in sigma {
        check_prior(row, na).map_err(|e| Error::Invalid(format!("strategy row: {e}")))?;
    }
    Ok(())
}

impl SubjectiveModel {
    pub fn validate(&self) -> Result<()> {
        let (nw, ns, na, ny) = (self.states.len(), self.signals.len(), self.actions.len(), self.consequences.len());
        if nw == 0 || ns == 0 || na == 0 || ny == 0 {
            return Err(Error::Invalid("states, signals, actions and consequences must be non-empty".into()));
        }
        if self.joint.len() != nw || self.joint.iter().any(|r| r.len() != ns) {
            return Err(Error::Dimension("joint must be states × signals".into()));
        }
        let flat: Vec<f64> = self.joint.iter().flatten().copied().collect();
        check_prior(&flat, nw * ns).map_err(|e| Error::Invariant(format!("joint: {e}")))?;
        if self.feedback.len() != na || self.feedback.iter().any(|r| r.len() != nw || r.iter().any(|y| *y >= ny)) {
            return Err(Error::Dimension("feedback must map actions × states to consequences".into()));
        }
        if self.utility.len() != na || self.utility.iter().any(|r| r.len() != ny || r.iter().any(|u| !u.is_finite())) {
            return Err(Error::Dimension("utility must be a finite actions × consequences table".into()));
        }
        check_param_tables(&self.params, ns, na, ny, "model")
    }

    pub fn signal_marginal(&self) -> Vec<f64> {
        (0..self.signals.len()).map(|s| self.joint.iter().map(|r| r[s]).sum()).collect()
    }

    /// True `Q(y | s, a)`; rows of null signals are uniform.
    pub fn objective(&self) -> Vec<Vec<Vec<f64>>> {
        let ny = self.consequences.len();
        let ps = self.signal_marginal();
        (0..self.signals.len())
            .map(|s| {
                (0..self.actions.len())
                    .map(|a| {
                        if ps[s] <= 0.0 {
                            return vec![1.0 / ny as f64; ny];
                        }
                        let mut row = vec![0.0; ny];
                        for (w, jr) in self.joint.iter().enumerate() {
                            row[self.feedback[a][w]] += jr[s] / ps[s];
                        }
                        row
                    })
                    .collect()
            })
            .collect()
    }

    pub fn check(&self, sigma: &[Vec<f64>]) -> Result<BerkNashReport> {
        self.validate()?;
        check_strategy(sigma, self.signals.len(), self.actions.len())?;
        let ps = self.signal_marginal();
        let weights: Vec<Vec<f64>> = sigma.iter().zip(&ps).map(|(row, p)| row.iter().map(|s| s * p).collect()).collect();
        assess(self.objective(), &weights, &self.params, &self.utility, sigma)
    }

    pub fn pure_strategies(&self) -> Vec<Vec<usize>> {
        pure_profiles(&vec![self.actions.len(); self.signals.len()])
    }

    /// Pure strategies that pass [`SubjectiveModel::check`], as action indices per signal.
    pub fn enumerate(&self) -> Result<Vec<Vec<usize>>> {
        self.validate()?;
        let na = self.actions.len();
        let mut out = Vec::new();
        for choice in self.pure_strategies() {
            if self.check(&pure_rows(&choice, na))?.equilibrium {
                out.push(choice);
            }
        }
        Ok(out)
    }

    /// Embedding as a one-player game.
    pub fn as_game(&self) -> GameModel {
        let mut joint = Vec::new();
        for (w, row) in self.joint.iter().enumerate() {
            for (s, p) in row.iter().enumerate() {
                if *p > 0.0 {
                    joint.push(JointEntry { state: w, signals: vec![s], prob: *p });
                }
            }
        }
        GameModel {
            states: self.states.clone(),
            joint,
            players: vec![PlayerSpec {
                name: "agent".into(),
                signals: self.signals.clone(),
                actions: self.actions.clone(),
                consequences: self.consequences.clone(),
                feedback: (0..self.states.len()).map(|w| (0..self.actions.len()).map(|a| self.feedback[a][w]).collect()).collect(),
                utility: self.utility.clone(),
                params: self.params.clone(),
            }],
        }
    }
}

/// Rows of a pure strategy.
pub fn pure_rows(choice: &[usize], num_actions: usize) -> Vec<Vec<f64>> {
    choice
        .iter()
        .map(|&a| {
            let mut r = vec![0.0; num_actions];
            r[a] = 1.0;
            r
        })
        .collect()
}

/// Every vector `v` with `v[i] < radix[i]`, first coordinate most significant.
pub fn pure_profiles(radix: &[usize]) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for &r in radix {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..r).map(move |a| {
                    let mut q = p.clone();
                    q.push(a);
                    q
                })
            })
            .collect();
    }
    out
}

/// Outcome of a Berk–Nash check for one agent.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct BerkNashReport {
    /// Objective `Q(y | s, a)`.
    pub objective: Vec<Vec<Vec<f64>>>,
    /// `K(σ, θ)` in nats.
    pub divergence: Vec<f64>,
    pub minimizers: Vec<usize>,
    /// A belief over parameters (zero off the minimizers) under which σ is optimal.
    pub belief: Option<Vec<f64>>,
    pub equilibrium: bool,
}

impl BerkNashReport {
    pub fn divergence_in_base(&self, base: f64) -> Vec<f64> {
        self.divergence.iter().map(|k| k / base.ln()).collect()
    }
}

/// Weighted divergence of one parameter's tables from the objective ones.
pub fn weighted_divergence(objective: &[Vec<Vec<f64>>], weights: &[Vec<f64>], q: &[Vec<Vec<f64>>]) -> f64 {
    let mut k = 0.0;
    for s in 0..objective.len() {
        for a in 0..objective[s].len() {
            let w = weights[s][a];
            if w <= 0.0 {
                continue;
            }
            for (y, &p) in objective[s][a].iter().enumerate() {
                if p <= 0.0 {
                    continue;
                }
                let r = q[s][a][y];
                if r <= 0.0 {
                    return f64::INFINITY;
                }
                k += w * p * (p / r).ln();
            }
        }
    }
    k
}

fn assess(
    objective: Vec<Vec<Vec<f64>>>,
    weights: &[Vec<f64>],
    params: &[ParamTable],
    utility: &[Vec<f64>],
    sigma: &[Vec<f64>],
) -> Result<BerkNashReport> {
    let divergence: Vec<f64> = params.iter().map(|p| weighted_divergence(&objective, weights, &p.q)).collect();
    let minimizers = argmin_set(&divergence, |_| true);
    let na = utility.len();
    // value[k][s][a] under parameter minimizers[k]
    let value: Vec<Vec<Vec<f64>>> = minimizers
        .iter()
        .map(|&k| {
            params[k]
                .q
                .iter()
                .map(|rows| (0..na).map(|a| rows[a].iter().zip(&utility[a]).map(|(q, u)| q * u).sum()).collect())
                .collect()
        })
        .collect();
    let n = minimizers.len();
    let mut lp = LinearProgram::<f64>::new(n);
    lp.add(vec![1.0; n], Relation::Eq, 1.0);
    for (s, row) in sigma.iter().enumerate() {
        for (a, &pr) in row.iter().enumerate() {
            if pr <= 0.0 {
                continue;
            }
            for b in 0..na {
                if b == a {
                    continue;
                }
                let coeffs: Vec<f64> = (0..n).map(|k| value[k][s][a] - value[k][s][b]).collect();
                lp.add(coeffs, Relation::Ge, -OPTIMALITY_TOL);
            }
        }
    }
    let belief = match lp.solve()? {
        LpOutcome::Optimal { x, .. } => {
            let mut mu = vec![0.0; params.len()];
            for (k, &i) in minimizers.iter().enumerate() {
                mu[i] = x[k].max(0.0);
            }
            Some(mu)
        }
        LpOutcome::Infeasible => None,
        LpOutcome::Unbounded => return Err(Error::Numerical("feasibility program reported unbounded".into())),
    };
    Ok(BerkNashReport {
        objective,
        divergence,
        minimizers,
        equilibrium: belief.is_some(),
        belief,
    })
}

/// A draw of the state and every player's signal.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JointEntry {
    pub state: usize,
    pub signals: Vec<usize>,
    pub prob: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlayerSpec {
    #[serde(default)]
    pub name: String,
    pub signals: Vec<String>,
    pub actions: Vec<String>,
    pub consequences: Vec<String>,
    /// `feedback[ω][profile]`, where `profile` indexes action profiles with player 0 most significant.
    pub feedback: Vec<Vec<usize>>,
    pub utility: Vec<Vec<f64>>,
    pub params: Vec<ParamTable>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GameModel {
    pub states: Vec<String>,
    pub joint: Vec<JointEntry>,
    pub players: Vec<PlayerSpec>,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GameReport {
    pub players: Vec<BerkNashReport>,
    pub equilibrium: bool,
}

impl GameModel {
    pub fn action_counts(&self) -> Vec<usize> {
        self.players.iter().map(|p| p.actions.len()).collect()
    }

    fn profile_index(&self, actions: &[usize]) -> usize {
        actions.iter().zip(self.action_counts()).fold(0, |acc, (a, n)| acc * n + a)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.players.len();
        if n == 0 || self.states.is_empty() {
            return Err(Error::Invalid("need at least one player and one state".into()));
        }
        let nprof: usize = self.action_counts().iter().product();
        for e in &self.joint {
            if e.state >= self.states.len() || e.signals.len() != n {
                return Err(Error::Dimension("joint entry has the wrong shape".into()));
            }
            if e.signals.iter().zip(&self.players).any(|(s, p)| *s >= p.signals.len()) {
                return Err(Error::Dimension("joint entry names an unknown signal".into()));
            }
            if !(e.prob >= 0.0) {
                return Err(Error::Invariant("joint probabilities must be non-negative".into()));
            }
        }
        let total: f64 = self.joint.iter().map(|e| e.prob).sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::Invariant(format!("joint probabilities sum to {total}")));
        }
        for (i, p) in self.players.iter().enumerate() {
            let (ns, na, ny) = (p.signals.len(), p.actions.len(), p.consequences.len());
            if ns == 0 || na == 0 || ny == 0 {
                return Err(Error::Invalid(format!("player {i} has an empty signal, action or consequence set")));
            }
            if p.feedback.len() != self.states.len() || p.feedback.iter().any(|r| r.len() != nprof || r.iter().any(|y| *y >= ny)) {
                return Err(Error::Dimension(format!("player {i}: feedback must map states × action profiles to consequences")));
            }
            if p.utility.len() != na || p.utility.iter().any(|r| r.len() != ny || r.iter().any(|u| !u.is_finite())) {
                return Err(Error::Dimension(format!("player {i}: utility must be a finite actions × consequences table")));
            }
            check_param_tables(&p.params, ns, na, ny, &format!("player {i}"))?;
            let marg = self.signal_marginal(i);
            if marg.iter().any(|m| *m <= 0.0) {
                return Err(Error::Invariant(format!("player {i}: every signal needs positive probability")));
            }
        }
        Ok(())
    }

    pub fn signal_marginal(&self, i: usize) -> Vec<f64> {
        let mut m = vec![0.0; self.players[i].signals.len()];
        for e in &self.joint {
            m[e.signals[i]] += e.prob;
        }
        m
    }

    /// Player `i`'s objective `Q(y | s_i, a_i)` given the others' strategies.
    pub fn objective(&self, i: usize, profile: &[Vec<Vec<f64>>]) -> Vec<Vec<Vec<f64>>> {
        let me = &self.players[i];
        let counts = self.action_counts();
        let marg = self.signal_marginal(i);
        let mut q = vec![vec![vec![0.0; me.consequences.len()]; me.actions.len()]; me.signals.len()];
        let others: Vec<usize> = (0..self.players.len()).filter(|&j| j != i).collect();
        let other_profiles = pure_profiles(&others.iter().map(|&j| counts[j]).collect::<Vec<_>>());
        for e in &self.joint {
            if e.prob <= 0.0 {
                continue;
            }
            let s = e.signals[i];
            for op in &other_profiles {
                let w: f64 = others.iter().zip(op).map(|(&j, &a)| profile[j][e.signals[j]][a]).product();
                if w <= 0.0 {
                    continue;
                }
                let mut actions = vec![0; self.players.len()];
                for (&j, &a) in others.iter().zip(op) {
                    actions[j] = a;
                }
                for a in 0..me.actions.len() {
                    actions[i] = a;
                    let y = me.feedback[e.state][self.profile_index(&actions)];
                    q[s][a][y] += e.prob * w / marg[s];
                }
            }
        }
        q
    }

    pub fn check(&self, profile: &[Vec<Vec<f64>>]) -> Result<GameReport> {
        self.validate()?;
        if profile.len() != self.players.len() {
            return Err(Error::Dimension("one strategy per player".into()));
        }
        let mut players = Vec::with_capacity(self.players.len());
        for (i, p) in self.players.iter().enumerate() {
            check_strategy(&profile[i], p.signals.len(), p.actions.len())?;
        }
        for (i, p) in self.players.iter().enumerate() {
            let marg = self.signal_marginal(i);
            let weights: Vec<Vec<f64>> = profile[i].iter().zip(&marg).map(|(row, m)| row.iter().map(|s| s * m).collect()).collect();
            players.push(assess(self.objective(i, profile), &weights, &p.params, &p.utility, &profile[i])?);
        }
        let equilibrium = players.iter().all(|r| r.equilibrium);
        Ok(GameReport { players, equilibrium })
    }

    /// Pure profiles passing [`GameModel::check`]; each entry lists per-player action indices per signal.
    pub fn enumerate(&self) -> Result<Vec<Vec<Vec<usize>>>> {
        self.validate()?;
        let per_player: Vec<Vec<Vec<usize>>> = self
            .players
            .iter()
            .map(|p| pure_profiles(&vec![p.actions.len(); p.signals.len()]))
            .collect();
        let combos = pure_profiles(&per_player.iter().map(Vec::len).collect::<Vec<_>>());
        let found: Vec<Option<Vec<Vec<usize>>>> = combos
            .par_iter()
            .map(|c| {
                let choice: Vec<Vec<usize>> = c.iter().enumerate().map(|(i, &k)| per_player[i][k].clone()).collect();
                let rows: Vec<Vec<Vec<f64>>> = choice
                    .iter()
                    .zip(&self.players)
                    .map(|(ch, p)| pure_rows(ch, p.actions.len()))
                    .collect();
                self.check(&rows).map(|r| r.equilibrium.then_some(choice))
            })
            .collect::<Result<_>>()?;
        Ok(found.into_iter().flatten().collect())
    }
}

/// The researcher example: good/bad project, positive/negative reaction, high/low effort.
pub fn researcher_example() -> SubjectiveModel {
    let s = |v: &[&str]| v.iter().map(|x| x.to_string()).collect::<Vec<_>>();
    SubjectiveModel {
        states: s(&["g", "b"]),
        signals: s(&["+", "-"]),
        actions: s(&["H", "L"]),
        consequences: s(&["A", "R"]),
        joint: vec![vec![1.0 / 3.0, 1.0 / 6.0], vec![1.0 / 6.0, 1.0 / 3.0]],
        feedback: vec![vec![0, 1], vec![1, 1]],
        utility: vec![vec![1.0, -1.0], vec![2.0, 0.0]],
        params: vec![
            ParamTable {
                name: "theta1".into(),
                q: vec![
                    vec![vec![0.75, 0.25], vec![0.0, 1.0]],
                    vec![vec![0.5, 0.5], vec![0.0, 1.0]],
                ],
            },
            ParamTable {
                name: "theta2".into(),
                q: vec![
                    vec![vec![2.0 / 3.0, 1.0 / 3.0], vec![0.1, 0.9]],
                    vec![vec![1.0 / 3.0, 2.0 / 3.0], vec![0.1, 0.9]],
                ],
            },
        ],
    }
}
