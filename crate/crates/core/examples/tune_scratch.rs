// scratch harness for picking desk-scale acceptance parameters; not part
// of the deliverable surface
use chargeplan::agent::{act, Policy};
use chargeplan::baselines;
use chargeplan::netdata::{generate_synthetic, DemandProfile};
use chargeplan::utility::{score, ChargerCatalog, ChargingPlan, UtilityParams};
use chargeplan::{Action, Environment};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn fixed_rollout(env: &mut Environment, action: Action) -> f64 {
    env.reset().unwrap();
    loop {
        if env.step(action).unwrap().done {
            break;
        }
    }
    env.state().prev_score
}

fn random_rollout(env: &mut Environment, rng: &mut ChaCha8Rng) -> f64 {
    env.reset().unwrap();
    loop {
        let a = Action::from_code(rng.random_range(0..5)).unwrap();
        if env.step(a).unwrap().done {
            break;
        }
    }
    env.state().prev_score
}

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let arrival_scale: f64 = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(0.005);
    let rho_target: f64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0.3);
    let budget: f64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(60_000.0);
    let net_seed: u64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(1);

    let net = generate_synthetic(10, 10, net_seed, DemandProfile::Hotspot).unwrap();
    let catalog = ChargerCatalog::default();
    let params = UtilityParams {
        budget_eur: budget,
        arrival_scale,
        ..UtilityParams::default()
    };
    let empty = ChargingPlan::new();

    let bb = baselines::best_benefit(&empty, budget, &net, &catalog, &params, rho_target);
    let hd = baselines::highest_demand(&empty, budget, &net, &catalog, &params, rho_target);
    let sg = baselines::score_greedy(&empty, budget, &net, &catalog, &params);
    println!(
        "as={arrival_scale} rt={rho_target} B={budget} seed={net_seed}: best_benefit={:.4} ({} st), highest_demand={:.4} ({} st), score_greedy={:.4} ({} st)",
        score(&bb, &net, &catalog, &params).unwrap(), bb.len(),
        score(&hd, &net, &catalog, &params).unwrap(), hd.len(),
        score(&sg, &net, &catalog, &params).unwrap(), sg.len(),
    );

    let mut env = Environment::new(&net, &catalog, &params, rho_target, empty.clone()).unwrap();
    let fb = fixed_rollout(&mut env, Action::CreateByBenefit);
    let fd = fixed_rollout(&mut env, Action::CreateByDemand);
    let mut rng = ChaCha8Rng::seed_from_u64(999);
    let mut rand_scores = Vec::new();
    for _ in 0..20 {
        rand_scores.push(random_rollout(&mut env, &mut rng));
    }
    let rand_mean = rand_scores.iter().sum::<f64>() / rand_scores.len() as f64;
    println!(
        "  fixed_benefit={fb:.4} fixed_demand={fd:.4} random_mean={rand_mean:.4} (min {:.4} max {:.4})",
        rand_scores.iter().cloned().fold(f64::INFINITY, f64::min),
        rand_scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
    );

    // cheap DQN probe if a 5th arg requests episodes
    if let Some(episodes) = args.get(5).and_then(|s| s.parse::<usize>().ok()) {
        let gamma: f64 = std::env::args().nth(6).and_then(|s| s.parse().ok()).unwrap_or(0.9);
        let config = chargeplan::agent::TrainConfig {
            episodes_max: episodes,
            gamma,
            update_every: 2,
            hidden_layers: vec![64, 64],
            seed: 7,
            ..Default::default()
        };
        let t0 = std::time::Instant::now();
        let outcome = chargeplan::agent::train(&mut env, &config).unwrap();
        let (plan, _) = chargeplan::agent::evaluate_policy(&outcome.policy, &mut env).unwrap();
        let s = score(&plan, &net, &catalog, &params).unwrap();
        println!(
            "  dqn({episodes} ep, {:.1}s): eval={s:.4} best_train={:.4} ({} st)",
            t0.elapsed().as_secs_f64(),
            outcome.best_score,
            plan.len()
        );
        // keep the policy path exercised end to end
        let mut rng2 = ChaCha8Rng::seed_from_u64(1);
        let mut obs = env.reset().unwrap();
        let p = Policy::new(env.observation_len(), &[8], &mut rng2);
        let _ = act(&p, &obs, 0.5, &mut rng2);
        obs = env.step(Action::CreateByDemand).unwrap().observation;
        let _ = obs;
    }
}
