use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rescale_rl::agents::{DdpgAgent, DdpgConfig, StoredTransition};
use rescale_rl::envs::{Bandit, Env};
use rescale_rl::harness::{evaluate_final, run_experiment, ExperimentConfig};

#[test]
fn a2c_solves_unit_chain() {
    let cfg = ExperimentConfig::parse("env=chain\nenv.magnitude=1\nframes=200000\ntrials=5\n").unwrap();
    let logs = run_experiment(&cfg).unwrap();
    // one goal reward per episode is the best possible raw return
    let solved = logs
        .iter()
        .filter(|l| evaluate_final(std::slice::from_ref(l)).unwrap() >= 0.95)
        .count();
    assert!(solved >= 4, "solved {solved}/5");
}

#[test]
fn ddpg_critic_fits_bandit_payoff() {
    let bandit = Bandit::new(1.0, 0.3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let cfg = DdpgConfig {
        hidden: vec![32, 32],
        warmup: 64,
        noise_std: 0.3,
        ..DdpgConfig::default()
    };
    let mut agent = DdpgAgent::new(1, &bandit.action_space(), cfg, &mut rng).unwrap();
    let s = vec![1.0];
    for _ in 0..4000 {
        let a = agent.act(&s, true, &mut rng).unwrap();
        agent
            .remember(StoredTransition {
                state: s.clone(),
                action: a.clone(),
                reward: bandit.expected_reward(a[0]),
                next_state: s.clone(),
                terminal: true,
            })
            .unwrap();
        agent.update(&mut rng).unwrap();
    }
    let mu = agent.act(&s, false, &mut rng).unwrap();
    let q = agent.q_value(&s, &mu).unwrap();
    let truth = bandit.expected_reward(mu[0]);
    assert!((q - truth).abs() < 1e-2, "Q={q} true={truth} at a={}", mu[0]);
    assert!((mu[0] - bandit.target()).abs() < 0.1, "a={}", mu[0]);
}
