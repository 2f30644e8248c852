use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use ecomarl_core::{make_env, AgentAction, EnvConfig, EnvId};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn env_step(c: &mut Criterion) {
    let mut group = c.benchmark_group("env_step");
    for env_id in EnvId::ALL {
        let mut env = make_env(&EnvConfig::new(env_id).with_seed(1)).unwrap();
        let spec = env.spec().clone();
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let actions: Vec<Vec<AgentAction>> = (0..64)
            .map(|_| {
                (0..spec.agent_count)
                    .map(|_| AgentAction {
                        discrete: spec.discrete_branches.iter().map(|&b| rng.random_range(0..b)).collect(),
                        continuous: (0..spec.continuous_actions).map(|_| rng.random_range(-1.0..1.0)).collect(),
                    })
                    .collect()
            })
            .collect();
        let mut i = 0;
        group.bench_function(BenchmarkId::from_parameter(env_id), |b| {
            b.iter(|| {
                let out = env.step(&actions[i % actions.len()]).unwrap();
                i += 1;
                if out.episode_done {
                    env.reset(i as u64);
                }
                out.rewards[0]
            })
        });
    }
    group.finish();
}

fn wfc_agent_scaling(c: &mut Criterion) {
    let mut group = c.benchmark_group("wfc_step_by_agents");
    for n in [1, 4, 16] {
        let mut env = make_env(&EnvConfig::new(EnvId::Wfc).with_seed(3).with_agents(n)).unwrap();
        let actions: Vec<AgentAction> = (0..n).map(|a| AgentAction::discrete(vec![a % 3])).collect();
        group.bench_function(BenchmarkId::from_parameter(n), |b| {
            b.iter(|| {
                let out = env.step(&actions).unwrap();
                if out.episode_done {
                    env.reset(4);
                }
            })
        });
    }
    group.finish();
}

criterion_group!(benches, env_step, wfc_agent_scaling);
criterion_main!(benches);
