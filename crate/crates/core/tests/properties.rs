use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use rissim::attacker::stack_weighted;
use rissim::channel::{build_cascade_operator, sample_ris_links, LinkCorrelation};
use rissim::exec::Execution;
use rissim::harness::{
    parse_schemes, run_campaign, AttackMode, CampaignSpec, EvalParams, PreparedScenario,
    RateStat, SweepSpec, SweepVar, TrialContext, Weights,
};
use rissim::linalg::{vec_of, CMat, C64};
use rissim::receiver::ReceiverMode;
use rissim::scenario::LinkGains;
use rissim::SystemConfig;

#[test]
fn uncorrelated_bs_ris_covariance_is_scaled_identity() {
    let cfg = SystemConfig {
        bs_antennas: 3,
        ris_elements: 4,
        ..SystemConfig::default()
    };
    let gains = LinkGains::new(&cfg).unwrap();
    let corr = LinkCorrelation::new(&cfg);
    let mut rng = ChaCha8Rng::seed_from_u64(17);
    let dim = cfg.bs_antennas * cfg.ris_elements;
    let mut acc = CMat::zeros(dim, dim);
    let draws = 100_000;
    for _ in 0..draws {
        let (g, _) = sample_ris_links(&cfg, &gains, &corr, &mut rng);
        let v = vec_of(&g);
        acc.ger(C64::new(1.0, 0.0), &v, &v.conjugate(), C64::new(1.0, 0.0));
    }
    let empirical = acc / C64::new(draws as f64, 0.0);
    let target = CMat::identity(dim, dim) * C64::new(gains.bs_ris, 0.0);
    let deviation = (&empirical - &target).norm() / target.norm();
    assert!(deviation <= 0.05, "relative Frobenius deviation {deviation}");
}

/// Paper scenario at 30 dBm over 200 trials: optimized attack beats Disco on
/// its own objective, and the rate ordering of the schemes holds.
#[test]
fn paper_scale_orderings() {
    let cfg = SystemConfig {
        power_dbm: 30.0,
        ..SystemConfig::default()
    };
    let scenario = PreparedScenario::new(cfg.clone()).unwrap();
    let params = EvalParams::from(&cfg);
    let trials = 200;

    struct Trial {
        optimized_wins: bool,
        rates: [f64; 5],
        sane: bool,
    }
    let per_trial = Execution::default().map(trials, |t| {
        let ctx = TrialContext::new(&scenario, t as u64).unwrap();
        let opt = ctx.attack(AttackMode::Optimized(Weights::Configured)).unwrap();
        let disco = ctx.attack(AttackMode::Disco).unwrap();
        let safe = ctx.attack(AttackMode::None).unwrap();

        let g = &ctx.channels.bs_ris;
        let ops: Vec<CMat> = ctx
            .channels
            .ris_user
            .iter()
            .map(|f| build_cascade_operator(g, f).unwrap())
            .collect();
        let op = stack_weighted(&ops, &cfg.nu).unwrap();
        let optimized_wins = op.objective(&opt.profile.theta) > op.objective(&disco.profile.theta);

        let runs = [
            (&safe, ReceiverMode::Unmitigated),
            (&opt, ReceiverMode::HarnessMitigation),
            (&opt, ReceiverMode::FullMitigation),
            (&opt, ReceiverMode::Unmitigated),
            (&disco, ReceiverMode::Unmitigated),
        ];
        let mut rates = [0.0; 5];
        let mut sane = true;
        for (i, (outcome, mode)) in runs.into_iter().enumerate() {
            let rec = ctx.evaluate(outcome, mode, &params).unwrap();
            rates[i] = rec.system_rate;
            for s in rec.users.iter().flat_map(|u| &u.breakdown.symbols) {
                for x in [s.signal, s.inter_symbol, s.ris, s.noise, s.sinr] {
                    sane &= x.is_finite() && x >= 0.0;
                }
            }
        }
        Trial {
            optimized_wins,
            rates,
            sane,
        }
    });

    assert!(per_trial.iter().all(|t| t.sane), "non-finite or negative SINR component");
    let wins = per_trial.iter().filter(|t| t.optimized_wins).count();
    assert!(wins * 100 >= 99 * trials, "optimized beat disco in {wins}/{trials} trials");

    let mean = |i: usize| {
        RateStat::from_samples(&per_trial.iter().map(|t| t.rates[i]).collect::<Vec<_>>()).mean
    };
    let [safe, hmit, fmit, unmit, disco] = [0, 1, 2, 3, 4].map(mean);
    assert!(safe > hmit, "safe {safe} vs hmit {hmit}");
    assert!(hmit > fmit, "hmit {hmit} vs fmit {fmit}");
    assert!(fmit > unmit, "fmit {fmit} vs unmit {unmit}");
    assert!(unmit < disco, "opt {unmit} vs disco {disco}");
}

#[test]
fn means_do_not_depend_on_trial_order() {
    let cfg = SystemConfig {
        ris_elements: 16,
        iterations: 30,
        ..SystemConfig::default()
    };
    let spec = CampaignSpec {
        sweep: SweepSpec::single(SweepVar::PowerDbm, 20.0),
        schemes: parse_schemes("opt+unmit").unwrap(),
        trials: 64,
        execution: Execution::Sequential,
    };
    let result = run_campaign(&cfg, &spec).unwrap();
    let mut samples = result.cells[0].system_samples.clone();
    let reference = RateStat::from_samples(&samples);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..20 {
        samples.shuffle(&mut rng);
        let stat = RateStat::from_samples(&samples);
        assert!((stat.mean - reference.mean).abs() <= 1e-12 * reference.mean.abs());
        assert!((stat.ci95 - reference.ci95).abs() <= 1e-12 * reference.ci95.abs());
    }
}

#[test]
fn execution_strategy_does_not_change_results() {
    let cfg = SystemConfig {
        ris_elements: 16,
        iterations: 30,
        ..SystemConfig::default()
    };
    let run = |execution| {
        let spec = CampaignSpec {
            sweep: SweepSpec {
                var: SweepVar::RisX,
                values: vec![25.0, 35.0],
            },
            schemes: parse_schemes("safe,disco+fmit,opt+hmit").unwrap(),
            trials: 6,
            execution,
        };
        run_campaign(&cfg, &spec).unwrap()
    };
    let seq = run(Execution::Sequential);
    let par = run(Execution::ParallelWith { threads: 3 });
    for (a, b) in seq.cells.iter().zip(&par.cells) {
        assert_eq!(a.system_samples, b.system_samples);
        assert_eq!(a.user_samples, b.user_samples);
    }
}
