//! Partition models: knowledge and belief operators, common knowledge,
//! agreement, dialogues and the email game.

use std::collections::{BTreeMap, HashSet};

use serde::Serialize;

use crate::event::EventSet;
use crate::scalar::{sum, Scalar};
use crate::{Error, Result};

/// Finite state space with a common prior and one information partition per agent.
#[derive(Clone, Debug)]
pub struct PartitionModel<T> {
    states: Vec<String>,
    prior: Vec<T>,
    agents: Vec<String>,
    partitions: Vec<Vec<Vec<usize>>>,
    // cell[agent][state] = index of the block holding `state`
    cell: Vec<Vec<usize>>,
}

impl<T: Scalar> PartitionModel<T> {
    /// Validates and builds a model.
    ///
    /// Requires a normalized prior, partitions that cover the state space with
    /// disjoint nonempty blocks, and positive prior mass on every block.
    pub fn new(
        states: Vec<String>,
        prior: Vec<T>,
        agents: Vec<String>,
        partitions: Vec<Vec<Vec<usize>>>,
    ) -> Result<Self> {
        let n = states.len();
        if n == 0 {
            return Err(Error::Invalid("state space is empty".into()));
        }
        if prior.len() != n {
            return Err(Error::Dimension(format!(
                "prior has {} entries for {n} states",
                prior.len()
            )));
        }
        if agents.len() != partitions.len() || agents.is_empty() {
            return Err(Error::Invalid(format!(
                "{} agent names for {} partitions",
                agents.len(),
                partitions.len()
            )));
        }
        if prior.iter().any(|p| *p < T::zero()) {
            return Err(Error::Invariant("prior entries must be nonnegative".into()));
        }
        let total = sum(&prior);
        if !close_to_one(&total) {
            return Err(Error::Invariant(format!("prior sums to {total}, not 1")));
        }
        let mut cell = Vec::with_capacity(agents.len());
        for (a, blocks) in partitions.iter().enumerate() {
            let mut owner = vec![usize::MAX; n];
            for (b, block) in blocks.iter().enumerate() {
                if block.is_empty() {
                    return Err(Error::Invariant(format!(
                        "agent {} has an empty partition block",
                        agents[a]
                    )));
                }
                for &s in block {
                    if s >= n {
                        return Err(Error::Invalid(format!(
                            "agent {} lists state index {s} outside the state space",
                            agents[a]
                        )));
                    }
                    if owner[s] != usize::MAX {
                        return Err(Error::Invariant(format!(
                            "agent {}'s blocks are not disjoint (state {} appears twice)",
                            agents[a], states[s]
                        )));
                    }
                    owner[s] = b;
                }
                let mass = block.iter().fold(T::zero(), |acc, &s| acc + prior[s].clone());
                if mass <= T::zero() {
                    let names: Vec<&str> = block.iter().map(|&s| states[s].as_str()).collect();
                    return Err(Error::Invariant(format!(
                        "every partition block must have positive prior mass; agent {} block {{{}}} has mass 0",
                        agents[a],
                        names.join(",")
                    )));
                }
            }
            if let Some(s) = owner.iter().position(|&o| o == usize::MAX) {
                return Err(Error::Invariant(format!(
                    "agent {}'s blocks do not cover state {}",
                    agents[a], states[s]
                )));
            }
            cell.push(owner);
        }
        Ok(Self {
            states,
            prior,
            agents,
            partitions,
            cell,
        })
    }

    /// States labelled `1..=n`, agents labelled `1..=k`, blocks given as 1-based labels.
    pub fn numbered(prior: Vec<T>, partitions: &[Vec<Vec<usize>>]) -> Result<Self> {
        let n = prior.len();
        let states = (1..=n).map(|i| i.to_string()).collect();
        let agents = (1..=partitions.len()).map(|i| i.to_string()).collect();
        let mut parts = Vec::with_capacity(partitions.len());
        for p in partitions {
            let mut blocks = Vec::with_capacity(p.len());
            for b in p {
                let mut block = Vec::with_capacity(b.len());
                for &s in b {
                    if s == 0 || s > n {
                        return Err(Error::Invalid(format!("state label {s} outside 1..={n}")));
                    }
                    block.push(s - 1);
                }
                blocks.push(block);
            }
            parts.push(blocks);
        }
        Self::new(states, prior, agents, parts)
    }

    /// Uniform prior over `1..=n`.
    pub fn uniform(n: usize, partitions: &[Vec<Vec<usize>>]) -> Result<Self> {
        let prior = vec![T::ratio(1, n as i64); n];
        Self::numbered(prior, partitions)
    }

    pub fn num_states(&self) -> usize {
        self.states.len()
    }

    pub fn num_agents(&self) -> usize {
        self.agents.len()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn agents(&self) -> &[String] {
        &self.agents
    }

    pub fn prior(&self) -> &[T] {
        &self.prior
    }

    pub fn partition(&self, agent: usize) -> Result<&[Vec<usize>]> {
        self.partitions
            .get(agent)
            .map(Vec::as_slice)
            .ok_or(Error::UnknownAgent(agent))
    }

    /// The block of `agent`'s partition that contains `state`.
    pub fn block(&self, agent: usize, state: usize) -> Result<&[usize]> {
        let owner = self.cell.get(agent).ok_or(Error::UnknownAgent(agent))?;
        let b = *owner.get(state).ok_or_else(|| self.bad_state(state))?;
        Ok(&self.partitions[agent][b])
    }

    pub fn event(&self, idx: impl IntoIterator<Item = usize>) -> Result<EventSet> {
        EventSet::from_indices(self.num_states(), idx)
    }

    /// Event from 1-based state labels.
    pub fn event_1based(&self, labels: &[usize]) -> Result<EventSet> {
        if labels.contains(&0) {
            return Err(Error::Invalid("state labels start at 1".into()));
        }
        self.event(labels.iter().map(|s| s - 1))
    }

    pub fn full_event(&self) -> EventSet {
        EventSet::full(self.num_states())
    }

    fn bad_state(&self, s: usize) -> Error {
        Error::Invalid(format!("state index {s} outside {} states", self.num_states()))
    }

    fn check_event(&self, e: &EventSet) -> Result<()> {
        if e.universe_size() != self.num_states() {
            return Err(Error::Dimension(format!(
                "event over {} states, model has {}",
                e.universe_size(),
                self.num_states()
            )));
        }
        Ok(())
    }

    fn check_agent(&self, a: usize) -> Result<()> {
        if a >= self.num_agents() {
            return Err(Error::UnknownAgent(a));
        }
        Ok(())
    }

    fn mass(&self, idx: impl IntoIterator<Item = usize>) -> T {
        idx.into_iter()
            .fold(T::zero(), |acc, s| acc + self.prior[s].clone())
    }

    /// `K_i(A)` for a single agent.
    pub fn knows(&self, agent: usize, event: &EventSet) -> Result<EventSet> {
        self.check_agent(agent)?;
        self.check_event(event)?;
        let mut out = EventSet::empty(self.num_states());
        for block in &self.partitions[agent] {
            if event.contains_all(block) {
                for &s in block {
                    out.insert(s);
                }
            }
        }
        Ok(out)
    }

    /// States where every agent in `agents` knows `event`.
    pub fn knowledge_operator(&self, agents: &[usize], event: &EventSet) -> Result<EventSet> {
        if agents.is_empty() {
            return Err(Error::Invalid("agent set is empty".into()));
        }
        let mut out = event.clone();
        self.check_event(event)?;
        for &a in agents {
            out = out.intersection(&self.knows(a, event)?);
        }
        Ok(out)
    }

    /// Mutual knowledge `K(A)` over all agents.
    pub fn mutual_knowledge(&self, event: &EventSet) -> Result<EventSet> {
        let all: Vec<usize> = (0..self.num_agents()).collect();
        self.knowledge_operator(&all, event)
    }

    /// Common knowledge by iterating mutual knowledge to its fixed point.
    pub fn common_knowledge_iterated(&self, event: &EventSet) -> Result<EventSet> {
        let mut cur = self.mutual_knowledge(event)?;
        // K(B) ⊆ B, so the chain is decreasing and stops within |Ω| steps.
        loop {
            let next = self.mutual_knowledge(&cur)?;
            if next == cur {
                return Ok(cur);
            }
            cur = next;
        }
    }

    /// Finest common coarsening of all partitions.
    ///
    /// Computed as connected components of "some agent's block holds both
    /// states". Blocks are sorted, and listed by smallest state.
    pub fn meet(&self) -> Vec<Vec<usize>> {
        let n = self.num_states();
        let mut comp = vec![usize::MAX; n];
        let mut blocks = Vec::new();
        for start in 0..n {
            if comp[start] != usize::MAX {
                continue;
            }
            let id = blocks.len();
            let mut members = vec![start];
            comp[start] = id;
            let mut head = 0;
            while head < members.len() {
                let s = members[head];
                head += 1;
                for a in 0..self.num_agents() {
                    for &t in &self.partitions[a][self.cell[a][s]] {
                        if comp[t] == usize::MAX {
                            comp[t] = id;
                            members.push(t);
                        }
                    }
                }
            }
            members.sort_unstable();
            blocks.push(members);
        }
        blocks
    }

    /// Common knowledge at `state` via the meet block containing it.
    pub fn common_knowledge_via_meet(&self, event: &EventSet, state: usize) -> Result<bool> {
        self.check_event(event)?;
        if state >= self.num_states() {
            return Err(self.bad_state(state));
        }
        let block = self
            .meet()
            .into_iter()
            .find(|b| b.contains(&state))
            .expect("meet covers every state");
        Ok(event.contains_all(&block))
    }

    /// `A ⊆ K(A)`.
    pub fn is_evident(&self, event: &EventSet) -> Result<bool> {
        Ok(event.is_subset(&self.mutual_knowledge(event)?))
    }

    /// Common knowledge at `state` via an evident event `E` with `state ∈ E ⊆ K(A)`.
    ///
    /// The smallest evident event containing `state` is grown directly from
    /// the evident-event condition; any witness contains it.
    pub fn common_knowledge_via_evident(&self, event: &EventSet, state: usize) -> Result<bool> {
        self.check_event(event)?;
        if state >= self.num_states() {
            return Err(self.bad_state(state));
        }
        let mut e = EventSet::empty(self.num_states());
        e.insert(state);
        loop {
            let mut grown = e.clone();
            for s in e.iter() {
                for a in 0..self.num_agents() {
                    for &t in self.block(a, s)? {
                        grown.insert(t);
                    }
                }
            }
            if grown == e {
                break;
            }
            e = grown;
        }
        debug_assert!(self.is_evident(&e)?);
        Ok(e.is_subset(&self.mutual_knowledge(event)?))
    }

    /// `P(A | Π_i(ω))`.
    pub fn event_posterior(&self, agent: usize, event: &EventSet, state: usize) -> Result<T> {
        self.check_event(event)?;
        let block = self.block(agent, state)?;
        let den = self.mass(block.iter().copied());
        let num = self.mass(block.iter().copied().filter(|&s| event.contains(s)));
        Ok(num / den)
    }

    /// `B_i^p(A) = {ω : P(A | Π_i(ω)) ≥ p}`, ties included.
    pub fn p_belief(&self, agent: usize, event: &EventSet, p: &T) -> Result<EventSet> {
        self.check_agent(agent)?;
        self.check_event(event)?;
        let mut out = EventSet::empty(self.num_states());
        for block in &self.partitions[agent] {
            let den = self.mass(block.iter().copied());
            let num = self.mass(block.iter().copied().filter(|&s| event.contains(s)));
            if (num / den).ge_tol(p) {
                for &s in block {
                    out.insert(s);
                }
            }
        }
        Ok(out)
    }

    fn everyone_p_believes(&self, event: &EventSet, p: &T) -> Result<EventSet> {
        let mut out = self.full_event();
        for a in 0..self.num_agents() {
            out = out.intersection(&self.p_belief(a, event, p)?);
        }
        Ok(out)
    }

    /// Common p-belief: the intersection over all levels of iterated
    /// "everyone p-believes".
    ///
    /// The level sets need not be nested, so iteration runs until a level
    /// repeats; from then on the sequence cycles and adds nothing new.
    pub fn common_p_belief(&self, event: &EventSet, p: &T) -> Result<EventSet> {
        let mut seen = HashSet::new();
        let mut cur = self.everyone_p_believes(event, p)?;
        let mut acc = cur.clone();
        while seen.insert(cur.clone()) {
            cur = self.everyone_p_believes(&cur, p)?;
            acc = acc.intersection(&cur);
        }
        Ok(acc)
    }

    /// Posteriors at `state` and whether they are common knowledge there.
    pub fn agreement_check(&self, event: &EventSet, state: usize) -> Result<AgreementReport<T>> {
        if self.num_agents() < 2 {
            return Err(Error::Precondition("agreement needs two or more agents".into()));
        }
        let mut posteriors = Vec::with_capacity(self.num_agents());
        let mut level = self.full_event();
        for a in 0..self.num_agents() {
            let q = self.event_posterior(a, event, state)?;
            let mut same = EventSet::empty(self.num_states());
            for s in 0..self.num_states() {
                if self.event_posterior(a, event, s)?.approx_eq(&q) {
                    same.insert(s);
                }
            }
            level = level.intersection(&same);
            posteriors.push(q);
        }
        let common = self.common_knowledge_via_meet(&level, state)?;
        let equal = posteriors.windows(2).all(|w| w[0].approx_eq(&w[1]));
        Ok(AgreementReport {
            posteriors,
            common_knowledge: common,
            violation: common && !equal,
        })
    }

    /// Announcement dialogue: each round every agent announces `P(A | own cell)`,
    /// then every agent refines their partition by the level sets of all
    /// announcement functions. Stops once no partition changes.
    pub fn gp_dialogue(&self, event: &EventSet, state: usize, max_rounds: usize) -> Result<Vec<Vec<T>>> {
        self.check_event(event)?;
        if state >= self.num_states() {
            return Err(self.bad_state(state));
        }
        let n = self.num_states();
        let k = self.num_agents();
        // labels[a][s]: current cell id of state s for agent a
        let mut labels: Vec<Vec<usize>> = self.cell.clone();
        let mut transcript = Vec::new();
        for _ in 0..max_rounds {
            let mut announce: Vec<Vec<T>> = Vec::with_capacity(k);
            for lab in &labels {
                let mut num: BTreeMap<usize, T> = BTreeMap::new();
                let mut den: BTreeMap<usize, T> = BTreeMap::new();
                for s in 0..n {
                    let d = den.entry(lab[s]).or_insert_with(T::zero);
                    *d = d.clone() + self.prior[s].clone();
                    let e = num.entry(lab[s]).or_insert_with(T::zero);
                    if event.contains(s) {
                        *e = e.clone() + self.prior[s].clone();
                    }
                }
                announce.push((0..n).map(|s| num[&lab[s]].clone() / den[&lab[s]].clone()).collect());
            }
            transcript.push(announce.iter().map(|f| f[state].clone()).collect());
            // Public information: the tuple of announced values at each state.
            let public = class_ids(n, |s, t| {
                announce.iter().all(|f| f[s].approx_eq(&f[t]))
            });
            let mut changed = false;
            for lab in labels.iter_mut() {
                let refined = class_ids(n, |s, t| lab[s] == lab[t] && public[s] == public[t]);
                if distinct(&refined) != distinct(lab) {
                    changed = true;
                }
                *lab = refined;
            }
            if !changed {
                return Ok(transcript);
            }
        }
        Err(Error::Numerical(format!(
            "dialogue did not settle within {max_rounds} rounds"
        )))
    }
}

fn close_to_one<T: Scalar>(x: &T) -> bool {
    if T::EXACT {
        x.is_one()
    } else {
        (x.clone() - T::one()).abs() <= T::from_f64_lossy(1e-9)
    }
}

// Assigns class ids to 0..n under an equivalence relation.
fn class_ids(n: usize, same: impl Fn(usize, usize) -> bool) -> Vec<usize> {
    let mut ids = vec![usize::MAX; n];
    let mut next = 0;
    for s in 0..n {
        if ids[s] != usize::MAX {
            continue;
        }
        for t in s..n {
            if ids[t] == usize::MAX && same(s, t) {
                ids[t] = next;
            }
        }
        next += 1;
    }
    ids
}

fn distinct(ids: &[usize]) -> usize {
    ids.iter().collect::<HashSet<_>>().len()
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AgreementReport<T> {
    pub posteriors: Vec<T>,
    pub common_knowledge: bool,
    /// Common knowledge of unequal posteriors; must never be set.
    pub violation: bool,
}

/// Email game inputs, stored raw and checked by [`EmailGameParams::validate`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct EmailGameParams {
    pub p_b: f64,
    pub eps: f64,
    pub l: f64,
    pub m: f64,
    pub t_max: usize,
}

impl EmailGameParams {
    pub fn validate(&self) -> Result<()> {
        if !(1.0 - self.p_b > 0.5 && self.p_b > 0.0) {
            return Err(Error::Precondition(format!(
                "need 0 < p and 1 - p > 1/2, got p = {}",
                self.p_b
            )));
        }
        if !(self.l > self.m && self.m > 0.0) {
            return Err(Error::Precondition(format!(
                "need L > M > 0, got L = {}, M = {}",
                self.l, self.m
            )));
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return Err(Error::Precondition(format!("need 0 < eps < 1, got {}", self.eps)));
        }
        if self.t_max == 0 {
            return Err(Error::Precondition("t_max must be at least 1".into()));
        }
        Ok(())
    }

    /// Posterior weight on "my last message was lost" for a positive type.
    pub fn z(&self) -> f64 {
        self.eps / (self.eps + (1.0 - self.eps) * self.eps)
    }

    /// Type-0 player 2's posterior on the `a` state.
    pub fn type0_posterior_a(&self) -> f64 {
        (1.0 - self.p_b) / (1.0 - self.p_b + self.p_b * self.eps)
    }

    /// Prior mass of state `k` in the untruncated model.
    fn mass(&self, k: usize) -> f64 {
        if k == 0 {
            1.0 - self.p_b
        } else {
            self.p_b * self.eps * (1.0 - self.eps).powi(k as i32 - 1)
        }
    }
}

/// Label of email-game state `k`: `(a,0,0)` then `(b, ceil(k/2), floor(k/2))`.
pub fn email_state_label(k: usize) -> String {
    if k == 0 {
        "(a,0,0)".to_string()
    } else {
        format!("(b,{},{})", k.div_ceil(2), k / 2)
    }
}

/// Truncated email-game partition model with `2 t_max + 1` states.
///
/// The tail mass beyond `(b, t_max, t_max)` is lumped into that state, so
/// player 2's last block is that state alone.
pub fn email_game_model(params: &EmailGameParams) -> Result<PartitionModel<f64>> {
    params.validate()?;
    let last = 2 * params.t_max;
    let mut prior: Vec<f64> = (0..last).map(|k| params.mass(k)).collect();
    prior.push(params.p_b * (1.0 - params.eps).powi(last as i32 - 1));
    let states = (0..=last).map(email_state_label).collect();
    let mut p1 = vec![vec![0]];
    for t in 1..=params.t_max {
        p1.push(vec![2 * t - 1, 2 * t]);
    }
    let mut p2 = vec![vec![0, 1]];
    for t in 1..params.t_max {
        p2.push(vec![2 * t, 2 * t + 1]);
    }
    p2.push(vec![last]);
    PartitionModel::new(states, prior, vec!["1".into(), "2".into()], vec![p1, p2])
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmailStep {
    pub player: usize,
    pub type_level: usize,
    /// Lower bound on the payoff of A given the certified prefix.
    pub payoff_a_low: f64,
    /// Upper bound on the payoff of B given the certified prefix.
    pub payoff_b_high: f64,
    pub strict: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EmailEquilibrium {
    /// `actions[i][t]` is player `i+1`'s action at type `t`.
    pub actions: Vec<Vec<char>>,
    pub steps: Vec<EmailStep>,
    /// Every inductive step held strictly.
    pub unique: bool,
    pub verified_through: usize,
}

// Payoff to the player choosing `own` against `other` in payoff state `b_state`.
fn email_payoff(params: &EmailGameParams, b_state: bool, own: char, other: char) -> f64 {
    match (b_state, own, other) {
        (false, 'A', 'A') => params.m,
        (true, 'B', 'B') => params.m,
        (_, 'A', _) => 0.0,
        (_, 'B', 'A') => -params.l,
        _ => 0.0,
    }
}

/// Runs the induction that pins down play type by type.
///
/// Starting from player 1 playing A at type 0, each later type is certified
/// when A's worst-case payoff (opponent plays A only on certified types)
/// strictly beats B's best case. Posteriors use the untruncated prior, so the
/// lumped tail state of [`email_game_model`] does not distort the last type.
pub fn email_game_equilibrium(params: &EmailGameParams) -> Result<EmailEquilibrium> {
    params.validate()?;
    let t_max = params.t_max;
    // certified[i][t]
    let mut certified = vec![vec![false; t_max + 1]; 2];
    certified[0][0] = true;
    let mut steps = Vec::new();
    let mut unique = true;
    let opp_type = |player: usize, k: usize| -> usize {
        if player == 0 {
            k / 2
        } else {
            k.div_ceil(2)
        }
    };
    let block = |player: usize, t: usize| -> Vec<usize> {
        match (player, t) {
            (0, 0) => vec![0],
            (0, t) => vec![2 * t - 1, 2 * t],
            (1, t) => vec![2 * t, 2 * t + 1],
            _ => unreachable!(),
        }
    };
    let mut order = vec![(1usize, 0usize)];
    for t in 1..=t_max {
        order.push((0, t));
        order.push((1, t));
    }
    for (player, t) in order {
        let states = block(player, t);
        let total: f64 = states.iter().map(|&k| params.mass(k)).sum();
        let (mut a_low, mut b_high) = (0.0, 0.0);
        for &k in &states {
            let w = params.mass(k) / total;
            let b_state = k > 0;
            let ot = opp_type(player, k);
            let known = ot <= t_max && certified[1 - player][ot];
            let opts: &[char] = if known { &['A'] } else { &['A', 'B'] };
            let a = opts
                .iter()
                .map(|&o| email_payoff(params, b_state, 'A', o))
                .fold(f64::INFINITY, f64::min);
            let b = opts
                .iter()
                .map(|&o| email_payoff(params, b_state, 'B', o))
                .fold(f64::NEG_INFINITY, f64::max);
            a_low += w * a;
            b_high += w * b;
        }
        let strict = a_low > b_high;
        unique &= strict;
        certified[player][t] = strict;
        steps.push(EmailStep {
            player: player + 1,
            type_level: t,
            payoff_a_low: a_low,
            payoff_b_high: b_high,
            strict,
        });
    }
    let actions = certified
        .iter()
        .map(|row| row.iter().map(|&c| if c { 'A' } else { '?' }).collect())
        .collect();
    Ok(EmailEquilibrium {
        actions,
        steps,
        unique,
        verified_through: t_max,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::Rational;

    fn example13() -> PartitionModel<Rational> {
        PartitionModel::uniform(
            6,
            &[
                vec![vec![1, 2, 3], vec![4, 5], vec![6]],
                vec![vec![1, 2], vec![3, 4], vec![5], vec![6]],
            ],
        )
        .unwrap()
    }

    fn labels(e: &EventSet) -> Vec<usize> {
        e.iter().map(|s| s + 1).collect()
    }

    #[test]
    fn knowledge_example() {
        let m = example13();
        let a = m.event_1based(&[3, 4, 5, 6]).unwrap();
        assert_eq!(labels(&m.knows(0, &a).unwrap()), vec![4, 5, 6]);
        assert_eq!(labels(&m.knows(1, &a).unwrap()), vec![3, 4, 5, 6]);
        assert_eq!(labels(&m.knowledge_operator(&[0, 1], &a).unwrap()), vec![4, 5, 6]);
        assert_eq!(m.knows(0, &m.full_event()).unwrap(), m.full_event());
        assert_eq!(m.knows(2, &a), Err(Error::UnknownAgent(2)));
    }

    #[test]
    fn iterated_common_knowledge_chain() {
        let m = example13();
        let a = m.event_1based(&[3, 4, 5, 6]).unwrap();
        // {4,5,6} -> {5,6} -> {6}
        assert_eq!(labels(&m.common_knowledge_iterated(&a).unwrap()), vec![6]);
        assert_eq!(m.common_knowledge_iterated(&m.full_event()).unwrap(), m.full_event());
    }

    #[test]
    fn meet_and_ck_predicates() {
        let m = example13();
        assert_eq!(m.meet(), vec![vec![0, 1, 2, 3, 4], vec![5]]);
        let a = m.event_1based(&[1, 2, 3, 4, 5]).unwrap();
        assert!(m.common_knowledge_via_meet(&a, 0).unwrap());
        assert!(m.common_knowledge_via_evident(&a, 0).unwrap());
        let b = m.event_1based(&[3, 4, 5, 6]).unwrap();
        assert!(!m.common_knowledge_via_meet(&b, 3).unwrap());
        assert!(!m.common_knowledge_via_evident(&b, 3).unwrap());
        assert!(m.common_knowledge_via_meet(&b, 5).unwrap());
    }

    #[test]
    fn posteriors_and_p_belief() {
        let m = example13();
        let a = m.event_1based(&[2, 3]).unwrap();
        assert_eq!(m.event_posterior(1, &a, 0).unwrap(), Rational::ratio(1, 2));
        let b = m.p_belief(1, &a, &Rational::ratio(1, 2)).unwrap();
        assert_eq!(labels(&b), vec![1, 2, 3, 4]);
        let a34 = m.event_1based(&[3, 4]).unwrap();
        assert_eq!(labels(&m.p_belief(1, &a34, &Rational::ratio(1, 2)).unwrap()), vec![3, 4]);
        let b0 = m.p_belief(0, &a34, &Rational::ratio(0, 1)).unwrap();
        assert_eq!(b0, m.full_event());
    }

    #[test]
    fn one_belief_differs_from_knowledge() {
        // Agent 2's singleton {1} would carry zero mass, so only agent 1 is modelled.
        let m = PartitionModel::numbered(
            vec![Rational::ratio(0, 1), Rational::ratio(1, 2), Rational::ratio(1, 2)],
            &[vec![vec![1, 2], vec![3]]],
        )
        .unwrap();
        let a = m.event_1based(&[2]).unwrap();
        assert!(m.knows(0, &a).unwrap().is_empty());
        assert_eq!(labels(&m.p_belief(0, &a, &Rational::ratio(1, 1)).unwrap()), vec![1, 2]);
    }

    #[test]
    fn zero_mass_block_rejected() {
        let err = PartitionModel::numbered(
            vec![Rational::ratio(0, 1), Rational::ratio(1, 2), Rational::ratio(1, 2)],
            &[vec![vec![1, 2], vec![3]], vec![vec![1], vec![2], vec![3]]],
        )
        .unwrap_err();
        assert!(matches!(err, Error::Invariant(ref s) if s.contains("positive prior mass")));
    }

    #[test]
    fn agreement_examples() {
        let pooled = PartitionModel::<Rational>::uniform(
            4,
            &[vec![vec![1, 2], vec![3, 4]], vec![vec![1, 3], vec![2, 4]]],
        )
        .unwrap();
        let a = pooled.event_1based(&[1, 4]).unwrap();
        let r = pooled.agreement_check(&a, 0).unwrap();
        assert_eq!(r.posteriors, vec![Rational::ratio(1, 2), Rational::ratio(1, 2)]);
        assert!(r.common_knowledge && !r.violation);

        let aumann = PartitionModel::<Rational>::uniform(
            4,
            &[vec![vec![1, 2], vec![3, 4]], vec![vec![1, 2, 3], vec![4]]],
        )
        .unwrap();
        let a = aumann.event_1based(&[1, 4]).unwrap();
        let r = aumann.agreement_check(&a, 1).unwrap();
        assert_eq!(r.posteriors, vec![Rational::ratio(1, 2), Rational::ratio(1, 3)]);
        assert!(!r.common_knowledge && !r.violation);
    }

    #[test]
    fn dialogue_bob_carly() {
        let m = PartitionModel::<Rational>::uniform(
            9,
            &[
                vec![vec![1, 2, 3], vec![4, 5, 6], vec![7, 8, 9]],
                vec![vec![1, 2, 3, 4], vec![5, 6, 7, 8], vec![9]],
            ],
        )
        .unwrap();
        let a = m.event_1based(&[3, 4]).unwrap();
        let t = m.gp_dialogue(&a, 0, 20).unwrap();
        let third = Rational::ratio(1, 3);
        let half = Rational::ratio(1, 2);
        assert_eq!(
            t,
            vec![
                vec![third.clone(), half.clone()],
                vec![third.clone(), half],
                vec![third.clone(), third]
            ]
        );
    }

    #[test]
    fn dialogue_pooled_one_round() {
        let m = PartitionModel::<Rational>::uniform(
            4,
            &[vec![vec![1, 2], vec![3, 4]], vec![vec![1, 3], vec![2, 4]]],
        )
        .unwrap();
        let a = m.event_1based(&[1, 4]).unwrap();
        let t = m.gp_dialogue(&a, 0, 10).unwrap();
        assert_eq!(t.len(), 1);
        assert_eq!(t[0], vec![Rational::ratio(1, 2), Rational::ratio(1, 2)]);
    }

    #[test]
    fn email_game_values() {
        let p = EmailGameParams {
            p_b: 0.4,
            eps: 0.1,
            l: 2.0,
            m: 1.0,
            t_max: 50,
        };
        assert!((p.type0_posterior_a() - 0.6 / 0.64).abs() < 1e-15);
        assert!((p.z() - 1.0 / 1.9).abs() < 1e-15);
        let eq = email_game_equilibrium(&p).unwrap();
        assert!(eq.unique);
        assert!(eq.actions.iter().all(|row| row.iter().all(|&c| c == 'A')));
        let model = email_game_model(&p).unwrap();
        assert_eq!(model.num_states(), 101);
        assert!((sum(model.prior()) - 1.0).abs() < 1e-12);
        assert_eq!(model.block(1, 100).unwrap(), &[100]);
        assert_eq!(email_state_label(3), "(b,2,1)");
    }

    #[test]
    fn email_game_rejects_bad_params() {
        let bad = EmailGameParams {
            p_b: 0.6,
            eps: 0.1,
            l: 2.0,
            m: 1.0,
            t_max: 5,
        };
        assert!(email_game_equilibrium(&bad).is_err());
    }
}
