//! Workloads shared by the benchmarks.

use infonomics_core::learning::{LearningEnvironment, TwoAgentSignalModel};
use infonomics_core::persuasion::{random_binary_instance, PersuasionInstance};
use infonomics_core::{blackwell::random_signal, PartitionModel, Rational, SignalStructure};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// `agents` random partitions of `n` states, each state assigned to one of `blocks` cells.
pub fn random_partition_model(n: usize, agents: usize, blocks: usize, seed: u64) -> PartitionModel<f64> {
    use rand::Rng;
    let mut r = rng(seed);
    let parts: Vec<Vec<Vec<usize>>> = (0..agents)
        .map(|_| {
            let mut cells = vec![Vec::new(); blocks];
            for s in 1..=n {
                cells[r.random_range(0..blocks)].push(s);
            }
            cells.retain(|c| !c.is_empty());
            cells
        })
        .collect();
    PartitionModel::uniform(n, &parts).expect("valid partitions")
}

pub fn signal_pair(states: usize, fine: usize, coarse: usize, seed: u64) -> (SignalStructure<f64>, SignalStructure<f64>) {
    let mut r = rng(seed);
    let a = random_signal(&mut r, states, fine);
    let b = random_signal(&mut r, states, coarse);
    (a, b)
}

pub fn binary_signal_exact() -> SignalStructure<Rational> {
    SignalStructure::from_ratios(&[&[(3, 4), (1, 4)], &[(1, 4), (3, 4)]]).expect("stochastic rows")
}

pub fn coin_environment() -> LearningEnvironment {
    let grid: Vec<f64> = (1..10).map(|i| i as f64 / 10.0).collect();
    let prior = vec![1.0 / 9.0; 9];
    LearningEnvironment::coin(grid, prior, 6).expect("valid environment")
}

pub fn independent_two_agent() -> TwoAgentSignalModel {
    let m = vec![vec![0.7, 0.3], vec![0.3, 0.7]];
    TwoAgentSignalModel::conditionally_independent(&m, &m).expect("valid model")
}

pub fn persuasion_instances(count: usize, actions: usize, seed: u64) -> Vec<PersuasionInstance<f64>> {
    let mut r = rng(seed);
    (0..count).map(|_| random_binary_instance(&mut r, actions)).collect()
}
