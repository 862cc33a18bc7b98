//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::collections::BTreeMap;
use std::time::{Duration, Instant};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use convsim::agents::{objective, Agent, AgentKind, AgentSpec, FeatureVector, PolicyModel};
use convsim::attribution::{attribute, AttributionConfig, CreditedExample, Scheme};
use convsim::env::{
    apply_click_update, click_prob, organic_view_probs, sale_prob, sample_catalog, EnvConfig, Event, ProductCatalog,
    Timeline, UserState,
};
use convsim::harness::abtest::run_arms;
use convsim::harness::experiment::{ProbeTarget, RankSettings};
use convsim::harness::{
    generate_logs, rank_schemes, run_ab_test, run_probe, train_agents, training_attribution, ExperimentSpec,
};

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn within_budget(elapsed: Duration, budget: Duration) -> bool {
    elapsed <= budget
}

// ---------------------------------------------------------------- 1

fn random_timeline(rng: &mut ChaCha8Rng, user_id: u64, num_products: usize) -> Timeline {
    let n = rng.random_range(0..=20);
    let mut t = 0u32;
    let mut timeline = Timeline::new(user_id);
    for _ in 0..n {
        t += rng.random_range(0..3);
        let p = rng.random_range(0..num_products);
        let event = match rng.random_range(0..3) {
            0 => Event::organic(t, user_id, p),
            1 => Event::bandit(t, user_id, p, rng.random_bool(0.6)),
            _ => Event::conversion(t, user_id, p),
        };
        timeline.events.push(event);
    }
    timeline
}

/// For every (click, sale) pair, the click earns the sale if it comes
/// before the sale, lies within the window, matches the product when
/// required, and no qualifying click sits between them.
fn brute_force_credits(timeline: &Timeline, cfg: &AttributionConfig) -> (BTreeMap<usize, f64>, usize) {
    let ev = &timeline.events;
    let clicked = |i: usize| -> Option<usize> {
        match ev[i].kind {
            convsim::env::EventKind::Bandit { recommended, clicked: true } => Some(recommended),
            _ => None,
        }
    };
    let sold = |j: usize| -> Option<usize> {
        match ev[j].kind {
            convsim::env::EventKind::Conversion { product } => Some(product),
            _ => None,
        }
    };
    let qualifies = |i: usize, j: usize| -> bool {
        let (Some(a), Some(p)) = (clicked(i), sold(j)) else {
            return false;
        };
        i < j && (!cfg.match_product || a == p) && cfg.window.is_none_or(|w| ev[j].t - ev[i].t <= w)
    };
    let mut credits = BTreeMap::new();
    for i in 0..ev.len() {
        if clicked(i).is_none() {
            continue;
        }
        let mut total = 0.0;
        for j in 0..ev.len() {
            let shadowed = (i + 1..j).any(|k| {
                clicked(k).is_some_and(|a| !cfg.match_product || Some(a) == sold(j))
            });
            if qualifies(i, j) && !shadowed {
                total += match cfg.scheme {
                    Scheme::LastClick => 1.0,
                    _ => cfg.gamma.powi((ev[j].t - ev[i].t) as i32),
                };
            }
        }
        if cfg.scheme == Scheme::BaselineSubtracted {
            total -= cfg.baseline;
        }
        credits.insert(i, total);
    }
    let unattributed = (0..ev.len())
        .filter(|&j| sold(j).is_some())
        .filter(|&j| {
            // The nearest preceding eligible click, if any, must be within
            // the window.
            let nearest = (0..j).rev().find(|&i| {
                clicked(i).is_some_and(|a| !cfg.match_product || Some(a) == sold(j))
            });
            nearest.is_none_or(|i| !qualifies(i, j))
        })
        .count();
    (credits, unattributed)
}

fn criterion_1() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut compared = 0;
    let mut mismatches = 0;
    for u in 0..1000 {
        let timeline = random_timeline(&mut rng, u, 4);
        let base = AttributionConfig {
            scheme: Scheme::LastClick,
            gamma: rng.random_range(0.05..=1.0),
            window: if rng.random_bool(0.5) { Some(rng.random_range(1..6)) } else { None },
            match_product: rng.random_bool(0.5),
            baseline: rng.random_range(0.0..0.5),
        };
        for scheme in Scheme::ALL {
            let cfg = AttributionConfig { scheme, ..base.clone() };
            let got = attribute(&timeline, &cfg);
            let (credits, unattributed) = brute_force_credits(&timeline, &cfg);
            let bit_equal = got.credits.len() == credits.len()
                && got
                    .credits
                    .iter()
                    .zip(&credits)
                    .all(|((p, c), (q, d))| p == q && c.to_bits() == d.to_bits());
            if !bit_equal || got.unattributed != unattributed {
                mismatches += 1;
            }
            compared += 1;
        }
    }
    let elapsed = start.elapsed();
    outcome(
        mismatches == 0 && within_budget(elapsed, Duration::from_secs(5)),
        format!("{compared} credit maps over 1000 timelines, {mismatches} mismatches, {:.2?}", elapsed),
    )
}

// ---------------------------------------------------------------- 2

fn criterion_2() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst = 0.0f64;
    for s in 0..100 {
        let config = EnvConfig {
            kappa: rng.random_range(0.0..=1.0),
            ..Default::default()
        };
        let catalog = sample_catalog(&config, &mut ChaCha8Rng::seed_from_u64(s));
        let omega: Vec<f64> = (0..config.embed_dim).map(|_| rng.random_range(-3.0..3.0)).collect();
        let mut user = UserState::from_omega(omega.clone());
        let clicks: Vec<usize> = (0..rng.random_range(0..=10)).map(|_| rng.random_range(0..config.num_products)).collect();
        for &a in &clicks {
            apply_click_update(&mut user, &catalog, a, config.kappa).unwrap();
        }
        let n = clicks.len() as i32;
        let k = config.kappa;
        for d in 0..config.embed_dim {
            let mut closed = (1.0 - k).powi(n) * omega[d];
            for (i, &a) in clicks.iter().enumerate() {
                closed += k * (1.0 - k).powi(n - (i as i32 + 1)) * catalog.conversion_embed.row(a)[d];
            }
            worst = worst.max((closed - user.delta[d]).abs());
        }
    }
    outcome(worst <= 1e-12, format!("max |iterated - closed form| = {worst:.3e} over 100 sequences"))
}

// ---------------------------------------------------------------- 3

fn criterion_3() -> Outcome {
    let mut spec = ExperimentSpec {
        n_train_users: 1000,
        n_eval_users: 2000,
        n_bootstrap: 200,
        common_random_numbers: true,
        ..Default::default()
    };
    spec.env.kappa = 0.0;
    spec.env.sale_scale = 0.5;
    spec.probe.n_users = 2000;
    let catalog = spec.build_catalog();

    let probe = run_probe(&spec, &catalog, 4).unwrap();
    let nonzero_probes = probe.deltas.iter().filter(|d| **d != 0.0).count();

    let logs = generate_logs(&spec, &catalog, 4, None).unwrap();
    let attr = training_attribution(&spec, &logs);
    let agents: Vec<Agent> = train_agents(&spec, &logs, &attr, 4).into_iter().map(|(a, _)| a).collect();
    let arms = run_arms(&catalog, &spec.env, &agents, spec.eval_seed(), spec.n_eval_users, true, &attr, 4).unwrap();
    let mut differing_users = 0;
    for arm in &arms[1..] {
        differing_users += arm
            .outcomes
            .iter()
            .zip(&arms[0].outcomes)
            .filter(|(a, b)| a.sales != b.sales)
            .count();
    }
    let sales: f64 = arms[0].outcomes.iter().map(|o| o.sales).sum();
    outcome(
        nonzero_probes == 0 && differing_users == 0 && sales > 0.0,
        format!(
            "{nonzero_probes}/2000 nonzero probe deltas; {differing_users} per-user sales differences across {} CRN arms ({} sales per arm)",
            arms.len(),
            sales
        ),
    )
}

// ---------------------------------------------------------------- 4

fn criterion_4() -> Outcome {
    let start = Instant::now();
    let mut spec = ExperimentSpec::default();
    spec.env.kappa = 0.5;
    spec.env.lambda_corr = 1.0;
    spec.probe.n_users = 2000;
    spec.probe.target = ProbeTarget::MaxAlignment;
    let summary = run_probe(&spec, &spec.build_catalog(), 4).unwrap();
    let elapsed = start.elapsed();
    outcome(
        summary.mean_delta > 0.0 && summary.ci.lo > 0.0 && within_budget(elapsed, Duration::from_secs(30)),
        format!(
            "mean delta {:.4}, 95% CI [{:.4}, {:.4}] over 2000 users, {:.2?}",
            summary.mean_delta, summary.ci.lo, summary.ci.hi, elapsed
        ),
    )
}

// ---------------------------------------------------------------- 5

/// One-sided sign test: P(X >= wins) for X ~ Binomial(n, 1/2).
fn sign_test_p(wins: u64, n: u64) -> f64 {
    let choose = |n: u64, k: u64| (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64);
    (wins..=n).map(|k| choose(n, k)).sum::<f64>() / 2f64.powi(n as i32)
}

fn criterion_5() -> Outcome {
    let start = Instant::now();
    let (mut bs_wins, mut disc_wins) = (0u64, 0u64);
    let mut rows = Vec::new();
    for seed in 0..20u64 {
        let mut spec = ExperimentSpec::bias_scenario();
        spec.env.master_seed = seed;
        spec.rank = RankSettings { n_contexts: 1000 };
        let catalog = spec.build_catalog();
        let logs = generate_logs(&spec, &catalog, 4, None).unwrap();
        let attr = training_attribution(&spec, &logs);
        let ranks = rank_schemes(&spec, &catalog, &logs, &attr).unwrap();
        let tau = |s: Scheme| ranks.iter().find(|r| r.scheme == s).and_then(|r| r.mean_tau).unwrap_or(f64::NEG_INFINITY);
        let (lc, disc, bs) = (tau(Scheme::LastClick), tau(Scheme::DiscountedLastClick), tau(Scheme::BaselineSubtracted));
        bs_wins += u64::from(bs > lc);
        disc_wins += u64::from(disc > lc);
        rows.push(format!("{lc:.3}/{disc:.3}/{bs:.3}"));
    }
    let elapsed = start.elapsed();
    let p = sign_test_p(bs_wins, 20);
    println!("    per-seed mean tau last_click/discounted/baseline_subtracted: {}", rows.join(" "));
    outcome(
        bs_wins >= 16 && p < 0.05 && within_budget(elapsed, Duration::from_secs(300)),
        format!(
            "baseline-subtracted beats last-click in {bs_wins}/20 seeds (sign test p = {p:.4}); discounted beats last-click in {disc_wins}/20; {:.2?}",
            elapsed
        ),
    )
}

// ---------------------------------------------------------------- 6

fn criterion_6() -> Outcome {
    let mut spec = ExperimentSpec::bias_scenario();
    spec.n_eval_users = 10_000;
    spec.common_random_numbers = true;
    spec.agents = [
        AgentKind::Random,
        AgentKind::Popularity,
        AgentKind::ClickBandit,
        AgentKind::LastClickSales,
        AgentKind::DiscountedSales,
        AgentKind::BaselineSubtractedSales,
    ]
    .into_iter()
    .map(AgentSpec::new)
    .collect();
    let catalog = spec.build_catalog();
    let logs = generate_logs(&spec, &catalog, 4, None).unwrap();
    let attr = training_attribution(&spec, &logs);
    let agents: Vec<Agent> = train_agents(&spec, &logs, &attr, 4).into_iter().map(|(a, _)| a).collect();
    let report = run_ab_test(&spec, &catalog, &agents, &attr, 4).unwrap();

    let sales = |label: &str| report.agent(label).unwrap().sales_per_user;
    let others = ["random", "popularity", "click_bandit"];
    let best_other = others.iter().copied().max_by(|a, b| sales(a).total_cmp(&sales(b))).unwrap();
    let mut lines = Vec::new();
    let mut any_pass = false;
    for candidate in ["discounted_sales", "baseline_subtracted_sales"] {
        let beats_all = others.iter().chain(&["last_click_sales"]).all(|b| sales(candidate) >= sales(b));
        let vs_best = report.difference(candidate, best_other).unwrap();
        let vs_lc = report.difference(candidate, "last_click_sales").unwrap();
        let pass = beats_all && vs_best.ci.lo > 0.0;
        any_pass |= pass;
        lines.push(format!(
            "{candidate} {:.4}: vs {best_other} {:+.4} [{:+.4}, {:+.4}], vs last_click_sales {:+.4} [{:+.4}, {:+.4}]{}",
            sales(candidate),
            vs_best.mean,
            vs_best.ci.lo,
            vs_best.ci.hi,
            vs_lc.mean,
            vs_lc.ci.lo,
            vs_lc.ci.hi,
            if pass { "" } else { " (not met)" }
        ));
    }
    let table: Vec<String> = report.agents.iter().map(|m| format!("{}={:.4}", m.agent, m.sales_per_user)).collect();
    println!("    sales/user: {}", table.join(" "));
    for l in &lines {
        println!("    {l}");
    }
    outcome(any_pass, format!("10000 eval users per arm under common random numbers; best non-attribution baseline {best_other}"))
}

// ---------------------------------------------------------------- 7

fn criterion_7() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (p, dim) = (4, 5);
    let examples: Vec<CreditedExample> = (0..60)
        .map(|_| CreditedExample {
            features: FeatureVector::from_vec((0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()),
            action: rng.random_range(0..p),
            credit: match rng.random_range(0..3) {
                0 => 0.0,
                1 => rng.random_range(0.0..2.0),
                _ => -rng.random_range(0.0..1.0),
            },
        })
        .collect();
    let l2 = 1e-2;
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let w: Vec<f64> = (0..p * dim).map(|_| rng.random_range(-2.0..2.0)).collect();
        let (_, grad) = objective(&PolicyModel::from_weights(p, dim, w.clone()), &examples, l2);
        for i in 0..w.len() {
            let at = |delta: f64| {
                let mut v = w.clone();
                v[i] += delta;
                objective(&PolicyModel::from_weights(p, dim, v), &examples, l2).0
            };
            let numeric = (at(h) - at(-h)) / (2.0 * h);
            let rel = (grad[i] - numeric).abs() / grad[i].abs().max(numeric.abs()).max(1e-6);
            worst = worst.max(rel);
        }
    }
    outcome(worst <= 1e-4, format!("max relative gradient error {worst:.3e} at 50 random points"))
}

// ---------------------------------------------------------------- 8

fn criterion_8() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("config.toml");
    std::fs::write(&config, "schema_version = 1\nn_train_users = 3000\n").unwrap();
    let run = |out: &str, threads: &str| {
        let status = std::process::Command::new(env!("CARGO_BIN_EXE_convsim"))
            .args(["--config", config.to_str().unwrap(), "--seed", "42", "--parallel", threads, "--out"])
            .arg(dir.path().join(out))
            .arg("simulate")
            .output()
            .unwrap();
        assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
        std::fs::read(dir.path().join(out).join("logs.jsonl")).unwrap()
    };
    let serial = run("serial", "1");
    let again = run("again", "1");
    let parallel = run("parallel", "8");
    outcome(
        serial == again && serial == parallel && !serial.is_empty(),
        format!("{} bytes; serial rerun identical: {}; 8-way identical: {}", serial.len(), serial == again, serial == parallel),
    )
}

// ---------------------------------------------------------------- 9

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_sum = 0.0f64;
    let mut out_of_range = 0;
    let mut catalogs: Vec<(EnvConfig, ProductCatalog)> = Vec::new();
    for s in 0..10 {
        let config = EnvConfig {
            num_products: rng.random_range(2..30),
            embed_dim: rng.random_range(1..8),
            ctr_offset: rng.random_range(-8.0..2.0),
            sale_offset: rng.random_range(-8.0..2.0),
            sale_scale: rng.random_range(0.0..=1.0),
            lambda_corr: rng.random_range(-1.0..=1.0),
            ..Default::default()
        };
        let catalog = sample_catalog(&config, &mut ChaCha8Rng::seed_from_u64(100 + s));
        catalogs.push((config, catalog));
    }
    for i in 0..100_000 {
        let (config, catalog) = &catalogs[i % catalogs.len()];
        let scale = [1.0, 10.0, 200.0][i % 3];
        let omega: Vec<f64> = (0..config.embed_dim).map(|_| scale * rng.random_range(-1.0..1.0)).collect();
        let mut user = UserState::from_omega(omega);
        user.delta.iter_mut().for_each(|d| *d = scale * rng.random_range(-1.0..1.0));
        let probs = organic_view_probs(catalog, &user);
        worst_sum = worst_sum.max((probs.iter().sum::<f64>() - 1.0).abs());
        let a = rng.random_range(0..config.num_products);
        let emitted = probs
            .iter()
            .copied()
            .chain([click_prob(catalog, &user, a, config), sale_prob(catalog, &user, a, config)]);
        out_of_range += emitted.filter(|p| !(0.0..=1.0).contains(p)).count();
    }
    outcome(
        worst_sum <= 1e-12 && out_of_range == 0,
        format!("max |sum - 1| = {worst_sum:.3e}; {out_of_range} probabilities outside [0, 1] over 1e5 states"),
    )
}

fn main() {
    let criteria: [Criterion; 9] = [
        ("attribution matches brute force", criterion_1),
        ("closed-form click state", criterion_2),
        ("kappa = 0 null", criterion_3),
        ("positive incrementality", criterion_4),
        ("ranking of incremental actions", criterion_5),
        ("A/B on the bias scenario", criterion_6),
        ("gradient check", criterion_7),
        ("CLI determinism, serial vs parallel", criterion_8),
        ("probability hygiene", criterion_9),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let result = check();
        let tag = if result.pass { "PASS" } else { "FAIL" };
        println!("[{tag}] criterion {}: {name}: {}", i + 1, result.detail);
        failed += usize::from(!result.pass);
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
