mod common;

use common::{bandit_greedy_choice, random_models, RandomStage};
use debunk::agents::DqnConfig;
use debunk::agents::{
    build_policy, q_select, select_multi_debunkers, FspModel, FspSample, PolicyKind, QPolicy,
    ReplayBuffer, Transition,
};
use debunk::env::CampaignState;
use debunk::nn::AdamConfig;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use statrs::distribution::{ChiSquared, ContinuousCDF};

#[test]
fn dqn_learns_two_node_bandit() {
    for seed in 0..3 {
        assert_eq!(bandit_greedy_choice(seed, 200), 0, "seed {seed}");
    }
}

#[test]
fn fully_exploring_selection_is_uniform_over_legal_nodes() {
    let q = [5.0, -1.0, 0.3, 9.0, 2.0, 0.0, 1.0, 4.0];
    let legal = [0, 2, 3, 5, 6, 7];
    let mut rng = ChaCha8Rng::seed_from_u64(31);
    let draws = 10_000;
    let mut counts = [0usize; 8];
    for _ in 0..draws {
        counts[q_select(&q, &legal, 1.0, &mut rng).unwrap()] += 1;
    }
    assert_eq!(counts[1] + counts[4], 0);
    let expected = draws as f64 / legal.len() as f64;
    let stat: f64 = legal
        .iter()
        .map(|&i| (counts[i] as f64 - expected).powi(2) / expected)
        .sum();
    let critical = ChiSquared::new((legal.len() - 1) as f64)
        .unwrap()
        .inverse_cdf(0.99);
    assert!(stat < critical, "chi-square {stat} >= {critical}");
}

#[test]
fn greedy_choice_ignores_constant_shift_and_single_legal_node() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..200 {
        let q: Vec<f64> = (0..10).map(|_| rng.random_range(-3.0..3.0)).collect();
        let legal: Vec<usize> = (0..10).filter(|_| rng.random::<bool>()).collect();
        if legal.is_empty() {
            assert!(q_select(&q, &legal, 0.0, &mut rng).is_err());
            continue;
        }
        let c = rng.random_range(-100.0..100.0);
        let shifted: Vec<f64> = q.iter().map(|v| v + c).collect();
        assert_eq!(
            q_select(&q, &legal, 0.0, &mut rng).unwrap(),
            q_select(&shifted, &legal, 0.0, &mut rng).unwrap()
        );
        assert_eq!(q_select(&q, &legal[..1], 0.0, &mut rng).unwrap(), legal[0]);
    }
}

#[test]
fn replay_sampling_is_uniform() {
    let mut buf = ReplayBuffer::new(100).unwrap();
    for i in 0..100usize {
        buf.push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut counts = [0usize; 100];
    let batches = 10_000;
    for _ in 0..batches {
        for &&i in buf.sample(&mut rng, 10).unwrap().iter() {
            counts[i] += 1;
        }
    }
    let total = (batches * 10) as f64;
    let p = 0.01;
    let (mean, sd) = (total * p, (total * p * (1.0 - p)).sqrt());
    for (i, c) in counts.iter().enumerate() {
        assert!(
            (*c as f64 - mean).abs() <= 3.0 * sd,
            "item {i}: {c} vs {mean} ± {sd}"
        );
    }
}

fn zero_dynamics_memory(n: usize) -> (ReplayBuffer<FspSample>, CampaignState) {
    let e = [2.0, 1.0, 0.0, 3.0, 1.0];
    let mut data = vec![0.0; 4 * n];
    data.extend(&e[..n]);
    let state = CampaignState::from_vec(data).unwrap();
    let mut mem = ReplayBuffer::new(100).unwrap();
    for u in 0..n {
        mem.push(FspSample {
            state: state.clone(),
            actions: vec![u],
            next_state: state.clone(),
        });
    }
    (mem, state)
}

#[test]
fn predictor_learns_zero_dynamics() {
    let n = 5;
    let (mem, state) = zero_dynamics_memory(n);
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut fsp = FspModel::new(n, AdamConfig::default(), &mut rng);
    let mse = |fsp: &FspModel| -> f64 {
        let mut total = 0.0;
        for u in 0..n {
            let p = fsp.predict(&state, &[u]).unwrap();
            total += p
                .as_slice()
                .iter()
                .zip(state.as_slice())
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>();
        }
        total / (n * 5 * n) as f64
    };
    let mut reached = None;
    for step in 1..=2000 {
        let loss = fsp.train_step(&mem, 4, &mut rng).unwrap();
        assert!(loss.is_finite() && loss >= 0.0);
        if step % 50 == 0 && mse(&fsp) < 1e-3 {
            reached = Some(step);
            break;
        }
    }
    assert!(reached.is_some(), "final mse {}", mse(&fsp));
}

#[test]
fn predictor_training_is_deterministic() {
    let n = 3;
    let (mem, state) = zero_dynamics_memory(n);
    let run = || {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let mut fsp = FspModel::new(n, AdamConfig::default(), &mut rng);
        let losses: Vec<f64> = (0..20)
            .map(|_| fsp.train_step(&mem, 2, &mut rng).unwrap())
            .collect();
        (losses, fsp.predict(&state, &[1, 2]).unwrap())
    };
    assert_eq!(run(), run());
}

#[test]
fn dqn_losses_are_finite_and_nonnegative() {
    let n = 4;
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let cfg = DqnConfig {
        hidden: vec![16],
        ..DqnConfig::default()
    };
    let mut policy = QPolicy::new(n, &[0], &cfg, &mut rng).unwrap();
    let mut buf = ReplayBuffer::new(64).unwrap();
    for _ in 0..64 {
        let s = RandomStage::draw(&mut rng, n);
        let t = RandomStage::draw(&mut rng, n);
        buf.push(Transition {
            state: s.state,
            action: rng.random_range(1..n),
            reward: rng.random_range(0.0..3.0),
            next_state: t.state,
            done: rng.random::<f64>() < 0.1,
        });
    }
    for _ in 0..300 {
        let loss = policy.train_step(&buf, 16, &mut rng).unwrap();
        assert!(loss.is_finite() && loss >= 0.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn every_policy_respects_budget_and_spreaders(seed in any::<u64>(), n in 2usize..12) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let models = random_models(&mut rng, n);
        let stage = RandomStage::draw(&mut rng, n);
        for kind in PolicyKind::COMPARED {
            let mut policy = build_policy(kind, &models).unwrap();
            let action = policy.select(&stage.context(0), &mut rng).unwrap();
            prop_assert!(action.validate(&stage.costs, &stage.spreaders, stage.budget).is_ok());
            prop_assert!(action.cost(&stage.costs) <= stage.budget);
        }
        let fsp = models.fsp.as_ref().unwrap();
        let action = select_multi_debunkers(
            models.q.as_ref().unwrap(), fsp, &stage.state, &stage.costs, &stage.spreaders, stage.budget,
        ).unwrap();
        prop_assert!(action.debunkers.len() <= n - stage.spreaders.len());
        prop_assert!(action.cost(&stage.costs) <= stage.budget);
    }
}
