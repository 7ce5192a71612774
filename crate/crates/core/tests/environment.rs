use debunk::env::{
    build_state, run_stage, Action, Campaign, CampaignConfig, CampaignLogs, StageRng, StageSchedule,
};
use debunk::hawkes::{EventLog, HawkesParams, NewsKind};
use debunk::network::{assign_costs, erdos_renyi, SocialGraph};
use debunk::scenario::{Scenario, SyntheticConfig};
use ndarray::Array2;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn mean_edge_count_matches_binomial_expectation() {
    let total: usize = (0..100)
        .map(|s| erdos_renyi(100, 0.02, s).unwrap().edge_count())
        .sum();
    let mean = total as f64 / 100.0;
    assert!((mean - 198.0).abs() / 198.0 < 0.10, "mean edges {mean}");
}

#[test]
fn follower_counts_are_row_sums_and_costs_are_monotone() {
    for seed in 0..20 {
        let g = assign_costs(erdos_renyi(40, 0.1, seed).unwrap(), 1.0, 5.0).unwrap();
        let b = g.adjacency();
        let e = g.follower_counts();
        for i in 0..g.n() {
            assert_eq!(b.row(i).sum() as usize, e[i]);
        }
        let c = g.costs().unwrap();
        for i in 0..g.n() {
            for j in 0..g.n() {
                if e[i] <= e[j] {
                    assert!(c[i] <= c[j]);
                }
            }
        }
        assert_eq!(
            g,
            erdos_renyi(40, 0.1, seed)
                .map(|g| assign_costs(g, 1.0, 5.0).unwrap())
                .unwrap()
        );
    }
}

fn poisson_scenario() -> Scenario {
    // followers of 0 are 1 and 2, so node 0's exposure counts their posts
    let g = SocialGraph::from_edges(3, [(0, 1), (0, 2), (2, 0)]).unwrap();
    let g = assign_costs(g, 1.0, 5.0).unwrap();
    let p = HawkesParams::new(
        Array2::zeros((3, 3)),
        1.0,
        vec![0.1, 0.0, 0.0],
        vec![0.1; 3],
    )
    .unwrap();
    Scenario::new(g, p, vec![]).unwrap()
}

#[test]
fn boost_raises_mitigation_exposure_by_boost_at_poisson_limit() {
    let scenario = poisson_scenario();
    let config = CampaignConfig::default();
    let schedule = StageSchedule::from_boundaries(vec![0.0, 100.0]).unwrap();
    let seeds = 50;
    let exposure = |action: &Action| -> Vec<f64> {
        let mut mean = vec![0.0; 3];
        for seed in 0..seeds {
            let mut logs = CampaignLogs::new(100.0);
            let mut rng = StageRng::from_seed(seed);
            run_stage(
                &scenario, &config, &mut logs, &schedule, 0, 50.0, action, &mut rng,
            )
            .unwrap();
            let rates: Vec<f64> = logs
                .mitigation
                .counts_between(3, NewsKind::Mitigation, 0.0, 100.0)
                .into_iter()
                .map(|c| c as f64 / 100.0)
                .collect();
            for (m, x) in mean.iter_mut().zip(scenario.graph.exposure(&rates, false)) {
                *m += x / seeds as f64;
            }
        }
        mean
    };
    let base = exposure(&Action::empty());
    let boosted = exposure(&Action::new(vec![1]));
    let gain: Vec<f64> = boosted.iter().zip(&base).map(|(b, a)| b - a).collect();
    // node 1's posts count toward node 0 only
    assert!(
        (gain[0] - config.boost).abs() / config.boost < 0.10,
        "gain {gain:?}"
    );
    assert!(gain[1].abs() < 0.1 && gain[2].abs() < 0.1, "gain {gain:?}");
}

fn random_action(c: &Campaign, rng: &mut ChaCha8Rng) -> Action {
    let mut nodes: Vec<usize> = (0..c.scenario().n())
        .filter(|i| !c.scenario().is_spreader(*i))
        .collect();
    nodes.shuffle(rng);
    let mut spent = 0.0;
    let mut picked = Vec::new();
    for i in nodes {
        let cost = c.scenario().costs()[i];
        if spent + cost <= c.budget() && rng.random::<f64>() < 0.5 {
            spent += cost;
            picked.push(i);
        }
    }
    Action::new(picked)
}

#[test]
fn campaign_invariants_hold_under_random_actions() {
    let cfg = SyntheticConfig {
        n: 30,
        density: 0.1,
        ..SyntheticConfig::default()
    };
    let scenario = Scenario::synthetic(&cfg, 3).unwrap();
    let before = scenario.params.clone();
    let config = CampaignConfig::default();
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    for seed in 0..5 {
        let mut c = Campaign::new(&scenario, &config, seed).unwrap();
        while !c.is_done() {
            let action = random_action(&c, &mut rng);
            assert!(action.cost(scenario.costs()) <= c.budget());
            let out = c.step(&action).unwrap();
            assert!(out.reward >= 0.0);
            assert_eq!(out.next_state.dim(), 5 * scenario.n());
            for kind in NewsKind::ALL {
                assert!(out.next_state.y(kind).iter().all(|v| *v >= 0.0));
                assert!(out.next_state.z(kind).iter().all(|v| *v >= 0.0));
            }
        }
        assert_eq!(c.rewards().len(), config.num_stages);
    }
    assert_eq!(scenario.params, before);
}

#[test]
fn campaigns_replay_identically_and_share_fake_noise() {
    let scenario = Scenario::synthetic(
        &SyntheticConfig {
            n: 30,
            ..SyntheticConfig::default()
        },
        9,
    )
    .unwrap();
    let config = CampaignConfig::default();
    let run = |pick: bool| {
        let mut c = Campaign::new(&scenario, &config, 77).unwrap();
        while !c.is_done() {
            let action = if pick {
                let cheapest = (0..30)
                    .filter(|i| !scenario.is_spreader(*i))
                    .find(|&i| scenario.costs()[i] <= c.budget());
                Action::new(cheapest.into_iter().collect())
            } else {
                Action::empty()
            };
            c.step(&action).unwrap();
        }
        (
            c.logs().clone(),
            c.rewards().to_vec(),
            c.schedule().clone(),
            c.budgets().to_vec(),
        )
    };
    let a = run(true);
    let b = run(true);
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
    let none = run(false);
    assert_eq!(a.2, none.2);
    assert_eq!(a.3, none.3);
    assert_eq!(a.0.fake, none.0.fake);
}

#[test]
fn state_built_from_single_event_matches_hand_value() {
    let g = assign_costs(SocialGraph::from_edges(2, [(0, 1)]).unwrap(), 1.0, 5.0).unwrap();
    let mut a = Array2::zeros((2, 2));
    a[[0, 1]] = 0.3;
    let p = HawkesParams::new(a, 1.0, vec![0.0; 2], vec![0.0; 2]).unwrap();
    let fake = EventLog::from_events(
        vec![debunk::hawkes::Event {
            user: 1,
            time: 0.0,
            kind: NewsKind::Fake,
        }],
        1.0,
    )
    .unwrap();
    let s = build_state(&p, &g, &fake, &EventLog::new(1.0), 1.0, 25.0);
    assert!((s.y(NewsKind::Fake)[0] - 0.3 * (-1.0f64).exp()).abs() < 1e-12);
    assert_eq!(s.followers(), &[1.0, 0.0]);
}
