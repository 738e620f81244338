//! Randomized structural properties. Every suite runs from a fixed proptest seed.

use infonomics_core::blackwell::{
    blackwell_compare, decision_value, feasible_test, garbling_test, mps_test, random_garbling, random_problem,
    random_signal, random_stochastic_row,
};
use infonomics_core::gaussian::{multivariate_posterior, JointGaussian, ScalarGaussianModel};
use infonomics_core::infocost::{
    conditional_entropy, cost_entropy_reduction, cost_variance_reduction, dilute, entropy, inverse_square_beta, kl,
    pst_cost,
};
use infonomics_core::learning::{
    batch_posterior, consistency_sim, kls_disagreement_check, sequential_posterior, LearningEnvironment,
};
use infonomics_core::misspec::{
    berk_limit_with_prior, dogmatic_asymptotic_belief, pure_rows, weighted_divergence, AcyModel, ParamTable,
    SubjectiveModel,
};
use infonomics_core::orders::{
    additive_family, affiliation_check, fosd_check, mlrp_check, more_favorable_check, posterior_fosd_property,
    ConditionalFamily, FiniteDensity,
};
use infonomics_core::persuasion::{concavify_1d, optimal_signal, random_binary_instance, sender_value, PersuasionInstance};
use infonomics_core::signals::{
    fairness_report, induced_posteriors, is_bayes_plausible, posterior_update, signal_from_posteriors, PopulationModel,
};
use infonomics_core::{EventSet, PartitionModel, Rational, Scalar, SignalStructure};
use proptest::prelude::*;
use proptest::test_runner::RngSeed;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn config(cases: u32, seed: u64) -> ProptestConfig {
    ProptestConfig {
        cases,
        rng_seed: RngSeed::Fixed(seed),
        failure_persistence: None,
        ..ProptestConfig::default()
    }
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn random_partition<R: Rng>(rng: &mut R, n: usize) -> Vec<Vec<usize>> {
    let k = rng.random_range(1..=n);
    let mut blocks = vec![Vec::new(); k];
    for s in 1..=n {
        blocks[rng.random_range(0..k)].push(s);
    }
    blocks.retain(|b| !b.is_empty());
    blocks
}

fn random_model(seed: u64, agents: usize) -> PartitionModel<f64> {
    let mut r = rng(seed);
    let n = r.random_range(2..=8);
    let prior = random_stochastic_row(&mut r, n).iter().map(|p| 0.05 / n as f64 + 0.95 * p).collect::<Vec<_>>();
    let s: f64 = prior.iter().sum();
    let prior = prior.iter().map(|p| p / s).collect();
    let parts: Vec<Vec<Vec<usize>>> = (0..agents).map(|_| random_partition(&mut r, n)).collect();
    PartitionModel::numbered(prior, &parts).unwrap()
}

fn random_event<R: Rng>(rng: &mut R, n: usize) -> EventSet {
    EventSet::from_indices(n, (0..n).filter(|_| rng.random_bool(0.5))).unwrap()
}

proptest! {
    #![proptest_config(config(128, 101))]

    #[test]
    fn knowledge_operator_laws(seed in any::<u64>()) {
        let m = random_model(seed, 2);
        let mut r = rng(seed ^ 1);
        let a = random_event(&mut r, m.num_states());
        let k = m.mutual_knowledge(&a).unwrap();
        for i in 0..2 {
            let ki = m.knows(i, &a).unwrap();
            prop_assert!(ki.is_subset(&a));
            let neg = m.knows(i, &ki.complement()).unwrap().complement();
            prop_assert_eq!(neg, ki.clone());
            let j = 1 - i;
            prop_assert!(m.knows(i, &m.knows(j, &a).unwrap()).unwrap().is_subset(&k));
        }
    }

    #[test]
    fn common_knowledge_characterizations(seed in any::<u64>()) {
        let m = random_model(seed, 2);
        let mut r = rng(seed ^ 2);
        let a = random_event(&mut r, m.num_states());
        let ck = m.common_knowledge_iterated(&a).unwrap();
        let mut via_meet = EventSet::empty(m.num_states());
        for b in m.meet() {
            if a.contains_all(&b) {
                for s in b { via_meet.insert(s); }
            }
        }
        prop_assert_eq!(&ck, &via_meet);
        for s in 0..m.num_states() {
            prop_assert_eq!(m.common_knowledge_via_evident(&a, s).unwrap(), ck.contains(s));
        }
        // evident events are unions of meet blocks
        let union_of_blocks = m.meet().iter().all(|b| b.iter().all(|s| a.contains(*s)) || b.iter().all(|s| !a.contains(*s)));
        prop_assert_eq!(m.is_evident(&a).unwrap(), union_of_blocks);
    }

    #[test]
    fn meet_ignores_agent_order(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(2..=8);
        let parts: Vec<Vec<Vec<usize>>> = (0..3).map(|_| random_partition(&mut r, n)).collect();
        let rev: Vec<Vec<Vec<usize>>> = parts.iter().rev().cloned().collect();
        let a = PartitionModel::<f64>::uniform(n, &parts).unwrap();
        let b = PartitionModel::<f64>::uniform(n, &rev).unwrap();
        let norm = |mut v: Vec<Vec<usize>>| { for b in v.iter_mut() { b.sort(); } v.sort(); v };
        prop_assert_eq!(norm(a.meet()), norm(b.meet()));
    }

    #[test]
    fn no_agreeing_to_disagree(seed in any::<u64>()) {
        let m = random_model(seed, 2);
        let mut r = rng(seed ^ 3);
        let a = random_event(&mut r, m.num_states());
        for s in 0..m.num_states() {
            prop_assert!(!m.agreement_check(&a, s).unwrap().violation);
        }
    }

    #[test]
    fn dialogue_terminates_in_agreement(seed in any::<u64>()) {
        let m = random_model(seed, 2);
        let mut r = rng(seed ^ 4);
        let a = random_event(&mut r, m.num_states());
        let s = r.random_range(0..m.num_states());
        let bound = m.partition(0).unwrap().len() + m.partition(1).unwrap().len();
        let t = m.gp_dialogue(&a, s, 64).unwrap();
        prop_assert!(t.len() < bound.max(2));
        let last = t.last().unwrap();
        prop_assert!((last[0] - last[1]).abs() < 1e-12);
    }

    #[test]
    fn common_p_belief_shrinks_in_p(seed in any::<u64>()) {
        let m = random_model(seed, 2);
        let mut r = rng(seed ^ 5);
        let a = random_event(&mut r, m.num_states());
        let ps = [0.2, 0.4, 0.6, 0.8, 0.95, 1.0];
        let sets: Vec<EventSet> = ps.iter().map(|p| m.common_p_belief(&a, p).unwrap()).collect();
        for w in sets.windows(2) {
            prop_assert!(w[1].is_subset(&w[0]));
        }
    }
}

fn interior_prior<R: Rng>(rng: &mut R, n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|_| rng.random_range(0.1..1.0)).collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

proptest! {
    #![proptest_config(config(128, 202))]

    #[test]
    fn beliefs_are_a_martingale(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (n, k) = (r.random_range(2..5), r.random_range(2..5));
        let prior = random_stochastic_row(&mut r, n);
        let sig = random_signal(&mut r, n, k);
        let marg = sig.marginal(&prior);
        let mut mean = vec![0.0; n];
        for x in 0..k {
            if marg[x] <= 0.0 { continue; }
            let post = posterior_update(&prior, &sig, x).unwrap();
            for t in 0..n { mean[t] += marg[x] * post[t]; }
        }
        for t in 0..n { prop_assert!((mean[t] - prior[t]).abs() < 1e-12); }
        prop_assert!(is_bayes_plausible(&prior, &induced_posteriors(&prior, &sig).unwrap()));
    }

    #[test]
    fn posterior_round_trip(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (n, k) = (r.random_range(2..5), r.random_range(2..5));
        let prior = interior_prior(&mut r, n);
        let sig = random_signal(&mut r, n, k);
        let dist = induced_posteriors(&prior, &sig).unwrap();
        let back = signal_from_posteriors(&prior, &dist).unwrap();
        let again = induced_posteriors(&prior, &back).unwrap();
        prop_assert!(dist.same_as(&again));
        prop_assert!(induced_posteriors(&prior, &sig.merge_duplicate_realizations()).unwrap().same_as(&dist));
    }

    #[test]
    fn duplicate_realizations_share_posteriors(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(2..5);
        let prior = interior_prior(&mut r, n);
        let base = random_signal(&mut r, n, 3);
        // split realization 0 into two proportional copies
        let split = r.random_range(0.1..0.9);
        let rows: Vec<Vec<f64>> = base.matrix.iter().map(|row| vec![row[0] * split, row[0] * (1.0 - split), row[1], row[2]]).collect();
        let fine = SignalStructure::from_matrix(rows).unwrap();
        let a = posterior_update(&prior, &fine, 0).unwrap();
        let b = posterior_update(&prior, &fine, 1).unwrap();
        let c = posterior_update(&prior, &base, 0).unwrap();
        let merged = fine.merge_duplicate_realizations();
        prop_assert_eq!(merged.num_realizations(), 3);
        for t in 0..n {
            prop_assert!((a[t] - c[t]).abs() < 1e-12 && (b[t] - c[t]).abs() < 1e-12);
        }
    }

    #[test]
    fn fairness_identity_holds(seed in any::<u64>()) {
        let mut r = rng(seed);
        let cov = r.random_range(2..5);
        let mut mass = Vec::new();
        let mut total = 0.0;
        for _ in 0..cov {
            let cell = [[r.random_range(0.01..1.0), r.random_range(0.01..1.0)], [r.random_range(0.01..1.0), r.random_range(0.01..1.0)]];
            total += cell.iter().flatten().sum::<f64>();
            mass.push(cell);
        }
        for cell in mass.iter_mut() { for g in cell.iter_mut() { for v in g.iter_mut() { *v /= total; } } }
        let mut score: Vec<u8> = (0..cov).map(|_| r.random_range(0..2)).collect();
        score[0] = 0;
        score[1] = 1;
        let rep = fairness_report(&PopulationModel { mass, score }).unwrap();
        for g in &rep.groups {
            if let Some(res) = g.identity_residual { prop_assert!(res.abs() < 1e-12); }
        }
        prop_assert!(rep.impossibility_respected());
    }
}

/// Rows `∝ w_x c_x^θ` with increasing `c`: totally positive of order two.
fn tp2_rows<R: Rng>(rng: &mut R, m: usize, k: usize) -> Vec<Vec<f64>> {
    let mut c: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..3.0)).collect();
    c.sort_by(|a, b| a.total_cmp(b));
    let w: Vec<f64> = (0..k).map(|_| rng.random_range(0.1..1.0)).collect();
    (0..m)
        .map(|t| {
            let row: Vec<f64> = (0..k).map(|x| w[x] * c[x].powi(t as i32)).collect();
            let s: f64 = row.iter().sum();
            row.into_iter().map(|v| v / s).collect()
        })
        .collect()
}

fn random_family(seed: u64) -> ConditionalFamily<f64> {
    let mut r = rng(seed);
    let (m, k) = (r.random_range(2..5), r.random_range(2..6));
    let rows = if r.random_bool(0.5) {
        tp2_rows(&mut r, m, k)
    } else {
        (0..m).map(|_| interior_prior(&mut r, k)).collect()
    };
    ConditionalFamily::on_indices(rows).unwrap()
}

proptest! {
    #![proptest_config(config(160, 303))]

    #[test]
    fn affiliation_matches_mlrp(seed in any::<u64>()) {
        let fam = random_family(seed);
        let mut r = rng(seed ^ 7);
        let prior = interior_prior(&mut r, fam.num_params());
        prop_assert_eq!(affiliation_check(&fam.joint(&prior)).unwrap(), mlrp_check(&fam, false));
    }

    #[test]
    fn mlrp_orders_posteriors(seed in any::<u64>()) {
        let fam = random_family(seed);
        if mlrp_check(&fam, false) {
            let mut r = rng(seed ^ 8);
            for _ in 0..100 {
                let prior = interior_prior(&mut r, fam.num_params());
                prop_assert!(posterior_fosd_property(&prior, &fam).unwrap());
            }
        }
    }

    #[test]
    fn favorable_pairs_match_mlrp(seed in any::<u64>()) {
        let fam = random_family(seed);
        let k = fam.num_realizations();
        let all = (0..k).all(|x| (0..x).all(|xp| more_favorable_check(&fam, x, xp).unwrap()));
        prop_assert_eq!(all, mlrp_check(&fam, false));
    }

    #[test]
    fn log_concave_noise_gives_mlrp(seed in any::<u64>(), logistic in any::<bool>()) {
        let mut r = rng(seed);
        let half = r.random_range(1..5);
        let scale = r.random_range(0.5..3.0);
        let noise: Vec<f64> = (0..=2 * half)
            .map(|j| {
                let z = (j as f64 - half as f64) / scale;
                if logistic { let e = (-z).exp(); e / (1.0 + e).powi(2) } else { (-z * z / 2.0).exp() }
            })
            .collect();
        let s: f64 = noise.iter().sum();
        let noise: Vec<f64> = noise.into_iter().map(|v| v / s).collect();
        let fam = additive_family(r.random_range(2..6), &noise).unwrap();
        prop_assert!(mlrp_check(&fam, false));
    }

    #[test]
    fn fosd_is_a_partial_order(seed in any::<u64>()) {
        let mut r = rng(seed);
        let k = r.random_range(2..6);
        // sorted cdfs make dominance chains likely
        let mut ds: Vec<Vec<f64>> = (0..3).map(|_| random_stochastic_row(&mut r, k)).collect();
        ds.sort_by(|a, b| a[0].total_cmp(&b[0]));
        let f: Vec<FiniteDensity<f64>> = ds.into_iter().map(|d| FiniteDensity::on_indices(d).unwrap()).collect();
        for a in &f {
            prop_assert!(fosd_check(a, a).unwrap());
            for b in &f {
                if fosd_check(a, b).unwrap() && fosd_check(b, a).unwrap() {
                    prop_assert!(a.mass.iter().zip(&b.mass).all(|(x, y)| (x - y).abs() < 1e-9));
                }
                for c in &f {
                    if fosd_check(a, b).unwrap() && fosd_check(b, c).unwrap() {
                        prop_assert!(fosd_check(a, c).unwrap());
                    }
                }
            }
        }
    }
}

proptest! {
    #![proptest_config(config(48, 404))]

    #[test]
    fn garbling_lowers_decision_value(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (n, k) = (r.random_range(2..4), r.random_range(2..5));
        let fine = random_signal(&mut r, n, k);
        let kc = r.random_range(1..5);
        let coarse = random_garbling(&mut r, &fine, kc);
        prop_assert!(garbling_test(&fine, &coarse).unwrap().is_some());
        for _ in 0..20 {
            let prior = random_stochastic_row(&mut r, n);
            let na = r.random_range(2..5);
            let prob = random_problem(&mut r, na, n);
            let vf = decision_value(&prior, &fine, &prob).unwrap().value;
            let vc = decision_value(&prior, &coarse, &prob).unwrap().value;
            prop_assert!(vf >= vc - 1e-9);
            prop_assert!(vc >= 0.0);
        }
        let none = SignalStructure::uninformative(n);
        let prob = random_problem(&mut r, 3, n);
        prop_assert_eq!(decision_value(&random_stochastic_row(&mut r, n), &none, &prob).unwrap().value, 0.0);
    }

    #[test]
    fn garbling_iff_mean_preserving_spread(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(2..4);
        let prior = interior_prior(&mut r, n);
        let (ka, kb) = (r.random_range(2..4), r.random_range(1..4));
        let a = random_signal(&mut r, n, ka);
        let b = if r.random_bool(0.5) { random_garbling(&mut r, &a, kb) } else { random_signal(&mut r, n, kb.max(2)) };
        let cmp = blackwell_compare(&prior, &a, &b).unwrap();
        let fa = induced_posteriors(&prior, &a).unwrap();
        let fb = induced_posteriors(&prior, &b).unwrap();
        // skip numerically borderline pairs
        if cmp.forward_residual > 1e-7 || cmp.forward_residual < 1e-10 {
            prop_assert_eq!(cmp.first_dominates.is_some(), mps_test(&fa, &fb).unwrap().is_some());
        }
    }

    #[test]
    fn feasible_sets_shrink_under_garbling(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(2..4);
        let fine = random_signal(&mut r, n, 3);
        let coarse = random_garbling(&mut r, &fine, 2);
        for _ in 0..5 {
            let alpha: Vec<Vec<f64>> = (0..coarse.num_realizations()).map(|_| random_stochastic_row(&mut r, 2)).collect();
            // d = coarse · α is feasible for the coarse signal by construction
            let d: Vec<Vec<f64>> = coarse.matrix.iter().map(|row| (0..2).map(|a| row.iter().zip(&alpha).map(|(p, al)| p * al[a]).sum()).collect()).collect();
            prop_assert!(feasible_test(&coarse, &d).unwrap().is_some());
            prop_assert!(feasible_test(&fine, &d).unwrap().is_some());
        }
    }
}

proptest! {
    #![proptest_config(config(64, 505))]

    #[test]
    fn gaussian_precision_adds(mu in -5.0f64..5.0, vt in 0.1f64..10.0, ve in 0.1f64..10.0, x in -10.0f64..10.0) {
        let m = ScalarGaussianModel::new(mu, vt, ve).unwrap();
        let p = m.posterior(x);
        prop_assert!((1.0 / p.variance - (1.0 / vt + 1.0 / ve)).abs() < 1e-9 * (1.0 / p.variance));
    }

    #[test]
    fn gaussian_covariance_ignores_data(seed in any::<u64>()) {
        let mut r = rng(seed);
        let d = 4;
        let a: Vec<Vec<f64>> = (0..d).map(|_| (0..d).map(|_| r.random_range(-1.0..1.0)).collect()).collect();
        let cov: Vec<Vec<f64>> = (0..d).map(|i| (0..d).map(|j| (0..d).map(|k| a[i][k] * a[j][k]).sum::<f64>() + if i == j { 0.5 } else { 0.0 }).collect()).collect();
        let j = JointGaussian::new(vec![0.0; d], cov, 2).unwrap();
        let p1 = multivariate_posterior(&j, &[r.random_range(-3.0..3.0), r.random_range(-3.0..3.0)]).unwrap();
        let p2 = multivariate_posterior(&j, &[r.random_range(-3.0..3.0), r.random_range(-3.0..3.0)]).unwrap();
        prop_assert_eq!(p1.cov, p2.cov);
    }

    #[test]
    fn entropy_chain_rule_and_conditioning(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (a, b) = (r.random_range(2..5), r.random_range(2..5));
        let flat = random_stochastic_row(&mut r, a * b);
        let joint: Vec<Vec<f64>> = flat.chunks(b).map(|c| c.to_vec()).collect();
        let px: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
        let py: Vec<f64> = (0..b).map(|j| joint.iter().map(|r| r[j]).sum()).collect();
        let hxy = entropy(&flat).unwrap();
        let hy_x = conditional_entropy(&joint).unwrap();
        prop_assert!((hxy - entropy(&px).unwrap() - hy_x).abs() < 1e-12);
        prop_assert!(hy_x <= entropy(&py).unwrap() + 1e-12);
        let indep: Vec<Vec<f64>> = px.iter().map(|x| py.iter().map(|y| x * y).collect()).collect();
        prop_assert!((conditional_entropy(&indep).unwrap() - entropy(&py).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn entropy_kl_identity_and_convexity(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(2..7);
        let p = random_stochastic_row(&mut r, n);
        let u = vec![1.0 / n as f64; n];
        prop_assert!((entropy(&p).unwrap() - ((n as f64).ln() - kl(&p, &u).unwrap())).abs() < 1e-12);
        let (p2, q1, q2) = (random_stochastic_row(&mut r, n), interior_prior(&mut r, n), interior_prior(&mut r, n));
        let l: f64 = r.random_range(0.0..1.0);
        let mix = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| l * x + (1.0 - l) * y).collect::<Vec<_>>();
        let lhs = kl(&mix(&p, &p2), &mix(&q1, &q2)).unwrap();
        prop_assert!(lhs <= l * kl(&p, &q1).unwrap() + (1.0 - l) * kl(&p2, &q2).unwrap() + 1e-12);
    }

    #[test]
    fn pst_dilution_linear(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(2..4);
        let k = r.random_range(2..4);
        let sig = random_signal(&mut r, n, k);
        let beta = inverse_square_beta(&(0..n).map(|i| i as f64).collect::<Vec<_>>());
        let alpha = r.random_range(0.05..1.0);
        let c = pst_cost(&sig, &beta).unwrap();
        prop_assert!((pst_cost(&dilute(&sig, alpha).unwrap(), &beta).unwrap() - alpha * c).abs() < 1e-10);
    }

    #[test]
    fn ups_costs_respect_blackwell(seed in any::<u64>()) {
        let mut r = rng(seed);
        let n = r.random_range(2..4);
        let prior = interior_prior(&mut r, n);
        let fine = random_signal(&mut r, n, 3);
        let coarse = random_garbling(&mut r, &fine, 2);
        let (df, dc) = (induced_posteriors(&prior, &fine).unwrap(), induced_posteriors(&prior, &coarse).unwrap());
        prop_assert!(cost_entropy_reduction(&prior, &df).unwrap() >= cost_entropy_reduction(&prior, &dc).unwrap() - 1e-12);
        prop_assert!(cost_variance_reduction(&prior, &df).unwrap() >= cost_variance_reduction(&prior, &dc).unwrap() - 1e-12);
    }
}

fn rat(n: i64, d: i64) -> Rational {
    Rational::ratio(n, d)
}

fn normalize_r(v: Vec<Rational>) -> Vec<Rational> {
    let s = v.iter().fold(rat(0, 1), |a, b| a + b);
    v.into_iter().map(|x| x / s.clone()).collect()
}

/// Random exact instance satisfying the disagreement-chain assumptions.
fn kls_instance(seed: u64) -> (Vec<Rational>, Vec<Rational>, Vec<Rational>, SignalStructure<Rational>, SignalStructure<Rational>) {
    let mut r = rng(seed);
    let m = r.random_range(2..4);
    let k = r.random_range(2..4);
    let thetas: Vec<Rational> = (0..m as i64).map(|t| rat(t, 1)).collect();
    let prior_a = normalize_r((0..m).map(|_| rat(r.random_range(1..6), 1)).collect());
    let mut g: Vec<i64> = (0..m).map(|_| r.random_range(1..6)).collect();
    g.sort();
    let prior_b = normalize_r(prior_a.iter().zip(&g).map(|(p, gi)| p * rat(*gi, 1)).collect());
    let mut c: Vec<i64> = (0..k).map(|_| r.random_range(1..5)).collect();
    c.sort();
    let w: Vec<i64> = (0..k).map(|_| r.random_range(1..5)).collect();
    let fine_rows: Vec<Vec<Rational>> = (0..m)
        .map(|t| normalize_r((0..k).map(|x| rat(w[x] * c[x].pow(t as u32), 1)).collect()))
        .collect();
    // TP2 kernel keeps monotone likelihood ratios after garbling
    let kk = r.random_range(1..3);
    let mut e: Vec<i64> = (0..kk).map(|_| r.random_range(1..4)).collect();
    e.sort();
    let v: Vec<i64> = (0..kk).map(|_| r.random_range(1..4)).collect();
    let kernel: Vec<Vec<Rational>> = (0..k)
        .map(|x| normalize_r((0..kk).map(|y| rat(v[y] * e[y].pow(x as u32), 1)).collect()))
        .collect();
    let coarse_rows: Vec<Vec<Rational>> = fine_rows
        .iter()
        .map(|row| (0..kk).map(|y| row.iter().zip(&kernel).fold(rat(0, 1), |s, (p, kr)| s + p * &kr[y])).collect())
        .collect();
    (
        thetas,
        prior_a,
        prior_b,
        SignalStructure::from_matrix(fine_rows).unwrap(),
        SignalStructure::from_matrix(coarse_rows).unwrap(),
    )
}

#[test]
fn kls_chain_exact_on_random_instances() {
    for seed in 0..100u64 {
        let (thetas, pa, pb, fine, coarse) = kls_instance(seed);
        let rep = kls_disagreement_check(&thetas, &pa, &pb, &fine, &coarse).unwrap();
        assert!(rep.ab_chain_holds, "seed {seed}: {rep:?}");
        assert!(rep.mu_a <= rep.mu_ab_fine && rep.mu_ab_fine <= rep.mu_ab_coarse && rep.mu_ab_coarse <= rep.mu_b);
    }
}

proptest! {
    #![proptest_config(config(32, 606))]

    #[test]
    fn updating_ignores_order(seed in any::<u64>()) {
        let mut r = rng(seed);
        let (m, k) = (r.random_range(2..5), r.random_range(2..5));
        let env = LearningEnvironment::new(
            (0..m).map(|i| i as f64).collect(),
            interior_prior(&mut r, m),
            (0..m).map(|_| interior_prior(&mut r, k)).collect(),
            0,
            0,
        ).unwrap();
        let mut obs: Vec<usize> = (0..40).map(|_| r.random_range(0..k)).collect();
        let a = sequential_posterior(&env, &obs).unwrap();
        let mut counts = vec![0; k];
        for x in &obs { counts[*x] += 1; }
        obs.reverse();
        let b = sequential_posterior(&env, &obs).unwrap();
        let c = batch_posterior(&env, &counts).unwrap();
        for t in 0..m {
            prop_assert!((a[40][t] - b[40][t]).abs() < 1e-12);
            prop_assert!((a[40][t] - c[t]).abs() < 1e-12);
        }
    }
}

#[test]
fn log_space_matches_direct_updating() {
    let mut r = rng(77);
    let env = LearningEnvironment::new(
        vec![0.0, 1.0, 2.0],
        vec![0.3, 0.3, 0.4],
        vec![vec![0.5, 0.5], vec![0.52, 0.48], vec![0.55, 0.45]],
        1,
        0,
    )
    .unwrap();
    let obs: Vec<usize> = (0..10_000).map(|_| usize::from(r.random_bool(0.48))).collect();
    let traj = sequential_posterior(&env, &obs).unwrap();
    let mut direct = env.prior.clone();
    for (t, &x) in obs.iter().enumerate() {
        let w: Vec<f64> = direct.iter().zip(&env.densities).map(|(p, f)| p * f[x]).collect();
        let s: f64 = w.iter().sum();
        direct = w.into_iter().map(|v| v / s).collect();
        for i in 0..3 {
            assert!((direct[i] - traj[t + 1][i]).abs() < 1e-10);
        }
    }
}

#[test]
fn consistency_improves_with_horizon() {
    let env = LearningEnvironment::binary(0.6, 0.5).unwrap();
    let avg = |t: usize| -> f64 { (0..5).map(|s| consistency_sim(&env, 400, t, 0.05, s).unwrap().fraction).sum::<f64>() / 5.0 };
    let fr: Vec<f64> = [10, 40, 160, 640].iter().map(|t| avg(*t)).collect();
    for w in fr.windows(2) {
        assert!(w[1] >= w[0], "{fr:?}");
    }
}

fn random_subjective(seed: u64) -> SubjectiveModel {
    let mut r = rng(seed);
    let s = |p: &str, n: usize| (0..n).map(|i| format!("{p}{i}")).collect::<Vec<_>>();
    let flat = interior_prior(&mut r, 4);
    let params = (0..r.random_range(1..4))
        .map(|i| ParamTable {
            name: format!("p{i}"),
            q: (0..2).map(|_| (0..2).map(|_| interior_prior(&mut r, 2)).collect()).collect(),
        })
        .collect();
    SubjectiveModel {
        states: s("w", 2),
        signals: s("s", 2),
        actions: s("a", 2),
        consequences: s("y", 2),
        joint: vec![flat[..2].to_vec(), flat[2..].to_vec()],
        feedback: (0..2).map(|_| (0..2).map(|_| r.random_range(0..2)).collect()).collect(),
        utility: (0..2).map(|_| (0..2).map(|_| r.random_range(-2.0..2.0)).collect()).collect(),
        params,
    }
}

proptest! {
    #![proptest_config(config(50, 707))]

    #[test]
    fn berk_nash_enumeration_rechecks(seed in any::<u64>()) {
        let m = random_subjective(seed);
        let found = m.enumerate().unwrap();
        // independent recomputation of the weighted divergence and best replies
        let ps: Vec<f64> = (0..2).map(|s| m.joint[0][s] + m.joint[1][s]).collect();
        for choice in &found {
            let mut k = vec![0.0; m.params.len()];
            for (i, p) in m.params.iter().enumerate() {
                for s in 0..2 {
                    let a = choice[s];
                    let mut truth = [0.0; 2];
                    for w in 0..2 { truth[m.feedback[a][w]] += m.joint[w][s] / ps[s]; }
                    for y in 0..2 {
                        if truth[y] > 0.0 { k[i] += ps[s] * truth[y] * (truth[y] / p.q[s][a][y]).ln(); }
                    }
                }
            }
            let best = k.iter().cloned().fold(f64::INFINITY, f64::min);
            let report = m.check(&pure_rows(choice, 2)).unwrap();
            for (a, b) in k.iter().zip(&report.divergence) { prop_assert!((a - b).abs() < 1e-12); }
            let mu = report.belief.clone().unwrap();
            for (i, w) in mu.iter().enumerate() {
                if *w > 1e-12 { prop_assert!(k[i] - best <= 1e-12); }
            }
            for s in 0..2 {
                let val = |a: usize| -> f64 { (0..m.params.len()).map(|i| mu[i] * (0..2).map(|y| m.params[i].q[s][a][y] * m.utility[a][y]).sum::<f64>()).sum() };
                prop_assert!(val(choice[s]) >= val(1 - choice[s]) - 1e-8);
            }
        }
    }

    #[test]
    fn weighted_divergence_vanishes_only_at_truth(seed in any::<u64>()) {
        let m = random_subjective(seed);
        let obj = m.objective();
        let ps = m.signal_marginal();
        let sigma = vec![vec![0.5, 0.5], vec![1.0, 0.0]];
        let w: Vec<Vec<f64>> = sigma.iter().zip(&ps).map(|(r, p)| r.iter().map(|s| s * p).collect()).collect();
        for p in &m.params {
            let k = weighted_divergence(&obj, &w, &p.q);
            prop_assert!(k >= 0.0);
        }
        prop_assert_eq!(weighted_divergence(&obj, &w, &obj), 0.0);
        let mut off = obj.clone();
        off[1][1] = vec![0.5, 0.5];
        if (obj[1][1][0] - 0.5).abs() > 1e-6 {
            // cell (1,1) has zero weight, so the divergence ignores it
            prop_assert_eq!(weighted_divergence(&obj, &w, &off), 0.0);
            off[0][0] = vec![0.5, 0.5];
            if (obj[0][0][0] - 0.5).abs() > 1e-6 { prop_assert!(weighted_divergence(&obj, &w, &off) > 0.0); }
        }
    }

    #[test]
    fn berk_limit_ignores_unweighted_parameters(seed in any::<u64>()) {
        let mut r = rng(seed);
        let k = r.random_range(2..5);
        let dens: Vec<Vec<f64>> = (0..3).map(|_| interior_prior(&mut r, k)).collect();
        let truth = interior_prior(&mut r, k);
        let base = berk_limit_with_prior(Some(&[0.5, 0.5, 0.0][..]), &dens, &truth).unwrap();
        let mut more = dens.clone();
        more.push(truth.clone());
        let ext = berk_limit_with_prior(Some(&[0.5, 0.5, 0.0, 0.0][..]), &more, &truth).unwrap();
        prop_assert_eq!(base.argmin, ext.argmin);
    }

    #[test]
    fn acy_recovers_dogmatic_limit(g1 in 0.56f64..0.7, g2 in 0.75f64..0.95, p1 in 0.1f64..0.9, p2 in 0.1f64..0.9) {
        let m = AcyModel::new([p1, p2], [g1, g2], 1e-10, 1e-4).unwrap();
        for (i, g) in [g1, g2].into_iter().enumerate() {
            for rho in [g, 1.0 - g] {
                let lim = dogmatic_asymptotic_belief(m.prior_a[i], g, rho);
                prop_assert!((m.asymptotic_belief(i, rho).unwrap() - lim).abs() < 1e-5);
            }
        }
    }
}

proptest! {
    #![proptest_config(config(200, 808))]

    #[test]
    fn persuasion_lp_matches_envelope(seed in any::<u64>()) {
        let mut r = rng(seed);
        let na = r.random_range(2..6);
        let inst = random_binary_instance(&mut r, na);
        let sol = optimal_signal(&inst).unwrap();
        let env = concavify_1d(&inst).unwrap();
        let v = env.eval(&inst.prior[0]).unwrap();
        prop_assert!((sol.value - v).abs() < 1e-9);
        prop_assert!(sol.value >= sender_value(&inst, &inst.prior).unwrap() - 1e-9);
        prop_assert!(is_bayes_plausible(&inst.prior, &sol.posteriors));
        prop_assert!(sol.posteriors.len() <= inst.num_states() + 1);
        for (x, &a) in sol.recommendations.iter().enumerate() {
            let post = &sol.posteriors.support[x];
            let ua: f64 = inst.u_receiver[a].iter().zip(post).map(|(u, p)| u * p).sum();
            for b in 0..inst.num_actions() {
                let ub: f64 = inst.u_receiver[b].iter().zip(post).map(|(u, p)| u * p).sum();
                prop_assert!(ua >= ub - 1e-9);
            }
        }
        for (x, y) in &env.breakpoints {
            prop_assert!(env.eval(x).unwrap() >= *y - 1e-12);
        }
    }

    #[test]
    fn zero_sum_never_benefits(seed in any::<u64>()) {
        let mut r = rng(seed);
        let k = r.random_range(2..5);
        let ur: Vec<Vec<f64>> = (0..k).map(|_| vec![r.random_range(-1.0..1.0), r.random_range(-1.0..1.0)]).collect();
        let p = r.random_range(0.01..0.99);
        let inst = PersuasionInstance::zero_sum(vec![p, 1.0 - p], ur).unwrap();
        prop_assert!(!optimal_signal(&inst).unwrap().benefits());
        let env = concavify_1d(&inst).unwrap();
        for i in 0..=20 {
            let mu = i as f64 / 20.0;
            let vhat = sender_value(&inst, &[mu, 1.0 - mu]).unwrap();
            prop_assert!((env.eval(&mu).unwrap() - vhat).abs() < 1e-9);
        }
    }
}
