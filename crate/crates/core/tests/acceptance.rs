//! Acceptance gate: one test per release criterion, each printing a single
//! PASS line with its measured numbers (visible with --nocapture; a failed
//! criterion fails its test). Training-based criteria use fixed documented
//! seeds and the default hyperparameters.

mod common;

use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use gadget_qec::analysis::{
    binomial, enumerate_errors, qhb, verify_distance_at_least, DetectionCache, QhbVariant,
    VerifyOutcome, DEFAULT_VERIFY_BUDGET,
};
use gadget_qec::circuit::Circuit;
use gadget_qec::env::{Done, Env, EnvConfig};
use gadget_qec::gadgets::{derive_cross_pattern, expansion_len, rule_table, Orientation};
use gadget_qec::nn::Mlp;
use gadget_qec::pauli::PauliString;
use gadget_qec::pipeline::{dedup, normalize};
use gadget_qec::tableau::StabilizerTableau;
use gadget_qec::trainer::{max_return_targets, run_curriculum, StepRecord, TrajectoryBatch, TrainerConfig};

fn p(s: &str) -> PauliString {
    s.parse().unwrap()
}

fn steane() -> StabilizerTableau {
    StabilizerTableau::new(
        7,
        1,
        vec![
            p("IIIXXXX"),
            p("IXXIIXX"),
            p("XIXIXIX"),
            p("IIIZZZZ"),
            p("IZZIIZZ"),
            p("ZIZIZIZ"),
        ],
    )
    .unwrap()
}

#[test]
fn criterion_01_rule_tables_match_reference() {
    let start = Instant::now();
    let cases: [(u8, Orientation, &[&str], &[&str]); 5] = [
        (0, Orientation::A, &["XX", "IX"], &["ZI", "ZZ"]),
        (0, Orientation::B, &["XI", "XX"], &["ZZ", "IZ"]),
        (1, Orientation::A, &["IX", "XX"], &["ZZ", "ZI"]),
        (
            2,
            Orientation::A,
            &["XIXI", "IXXX", "XXXX", "IXXI"],
            &["IZZI", "ZZZZ", "ZZZI", "IZIZ"],
        ),
        (
            3,
            Orientation::A,
            &[
                "XIXIXIII", "IXXXIXII", "XXIIXIXI", "IXIIXXIX", "XIXXXIIX", "IXIXIXXI",
                "IIXIIXXX", "IIIXXIXI",
            ],
            &[],
        ),
    ];
    for (level, orientation, x_expected, z_expected) in cases {
        let t = rule_table(level, orientation).unwrap();
        let x: Vec<String> = t.x_rules.iter().map(|r| r.to_string()).collect();
        assert_eq!(x, x_expected, "X rules, level {level} {orientation:?}");
        if !z_expected.is_empty() {
            let z: Vec<String> = t.z_rules.iter().map(|r| r.to_string()).collect();
            assert_eq!(z, z_expected, "Z rules, level {level} {orientation:?}");
        }
    }
    let dcx8 = rule_table(3, Orientation::A).unwrap();
    assert_eq!(dcx8.max_output_weight(), 5);
    let elapsed = start.elapsed();
    assert!(elapsed.as_secs_f64() < 1.0, "took {elapsed:?}");
    println!(
        "criterion 1 PASS: CX/DCX/DCX4/DCX8 tables exact, DCX8 max weight 5, {:.3}s",
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_02_cross_pattern_derivation() {
    let start = Instant::now();
    let cp = derive_cross_pattern().unwrap();
    let elapsed = start.elapsed();
    assert!(
        !cp.leaf_candidates.is_empty(),
        "no four-DCX pattern reproduces the 4-qubit tables"
    );
    assert!(
        !cp.block_candidates.is_empty(),
        "no block lift reproduces the 8-qubit table"
    );
    // the leaf winner and the block winner realize the same cross shape
    let shape = |pat: &[(usize, usize); 4]| {
        let mut s: Vec<(usize, usize)> = pat
            .iter()
            .map(|&(a, b)| (a.min(b), a.max(b)))
            .collect();
        s.sort_unstable();
        s
    };
    assert_eq!(shape(&cp.leaf), shape(&cp.block));
    assert!(
        elapsed.as_secs_f64() < 10.0,
        "search took {:.3}s",
        elapsed.as_secs_f64()
    );
    println!(
        "criterion 2 PASS: {} leaf / {} block candidate(s), shared shape, {:.3}s",
        cp.leaf_candidates.len(),
        cp.block_candidates.len(),
        elapsed.as_secs_f64()
    );
}

#[test]
fn criterion_03_expansion_counts() {
    let expected = [2usize, 8, 32, 128, 512];
    for (level, want) in (1u8..=5).zip(expected) {
        assert_eq!(expansion_len(level), want, "level {level}");
        let g = gadget_qec::gadgets::Gadget {
            level,
            orientation: Orientation::A,
            anchor: 0,
            n: 64,
        };
        assert_eq!(g.expand().unwrap().len(), want, "level {level} expansion");
    }
    println!("criterion 3 PASS: expansion counts 2, 8, 32, 128, 512");
}

#[test]
fn criterion_04_qhb_golay_is_perfect() {
    let r = qhb(23, 1, 7, QhbVariant::SelfDualCss);
    assert_eq!(r.bound_lhs, 2048);
    assert_eq!(r.bound_rhs, 2048);
    assert!(r.satisfied && r.perfect && !r.even_distance);
    println!(
        "criterion 4 PASS: (23,1,7) self-dual QHB {} = {}",
        r.bound_lhs, r.bound_rhs
    );
}

#[test]
fn criterion_05_verification_oracle() {
    let st = steane();
    assert!(verify_distance_at_least(&st, 3, DEFAULT_VERIFY_BUDGET)
        .unwrap()
        .holds());
    match verify_distance_at_least(&st, 4, DEFAULT_VERIFY_BUDGET).unwrap() {
        VerifyOutcome::Fails { witness } => {
            let w: PauliString = witness.parse().unwrap();
            assert_eq!(w.weight(), 3, "witness {witness} should have weight 3");
        }
        other => panic!("expected distance-4 failure, got {other:?}"),
    }

    // detectability vs dense codespace-projector oracle
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    let mut checked = 0usize;
    while checked < 200 {
        let n = rng.gen_range(2..=5);
        let k = rng.gen_range(1..n);
        let tab = common::random_css_tableau(n, k, &mut rng);
        let proj = common::projector(&tab);
        let cache = DetectionCache::new(&tab);
        for _ in 0..4 {
            let w = rng.gen_range(1..=n);
            let mut support: Vec<usize> = (0..n).collect();
            for i in (1..support.len()).rev() {
                support.swap(i, rng.gen_range(0..=i));
            }
            support.truncate(w);
            let e = if rng.gen_bool(0.5) {
                PauliString::from_supports(n, &support, &[])
            } else {
                PauliString::from_supports(n, &[], &support)
            };
            let dense = common::detectable_dense(&proj, &common::pauli_dense(&e), 1e-9);
            assert_eq!(cache.is_detectable(&e), dense, "n={n} k={k} error {e}");
            checked += 1;
        }
    }
    println!("criterion 5 PASS: Steane d=3 holds / d=4 fails; {checked} projector-oracle cases agree");
}

#[test]
fn criterion_06_error_enumeration_counts() {
    let mut cases = 0usize;
    for n in 2..=16usize {
        for d in 2..=n {
            let es = enumerate_errors(n, d, 0.1).unwrap();
            let per_type: u128 = (1..=d as u128 - 1).map(|w| binomial(n as u128, w)).sum();
            assert_eq!(es.len() as u128, 2 * per_type, "n={n} d={d}");
            cases += 1;
        }
    }
    println!("criterion 6 PASS: error counts match the binomial sums on {cases} (n, d) pairs");
}

#[test]
fn criterion_07_maxppo_targets_match_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for gamma in [1.0f64, 0.99] {
        for _ in 0..1000 {
            let len = rng.gen_range(1..=12);
            let rewards: Vec<f64> = (0..len).map(|_| rng.gen_range(-2.0..2.0)).collect();
            let batch = TrajectoryBatch {
                steps: rewards
                    .iter()
                    .enumerate()
                    .map(|(i, &reward)| StepRecord {
                        obs: Vec::new(),
                        action: 0,
                        reward,
                        log_prob: 0.0,
                        value: 0.0,
                        episode: 0,
                        last_of_episode: i + 1 == len,
                    })
                    .collect(),
                episodes: 1,
                successes: 0,
            };
            let got = max_return_targets(&batch, gamma);
            for t in 0..len {
                // exhaustive oracle: best discounted partial sum over all
                // stopping points j >= t
                let mut best = f64::NEG_INFINITY;
                for j in t..len {
                    let sum: f64 = (t..=j).map(|i| gamma.powi((i - t) as i32) * rewards[i]).sum();
                    best = best.max(sum);
                }
                assert!(
                    (got[t] - best).abs() < 1e-12,
                    "gamma={gamma} t={t} got {} want {best}",
                    got[t]
                );
            }
        }
    }
    println!("criterion 7 PASS: 1000 sequences x gamma in {{1, 0.99}} match the exhaustive oracle to 1e-12");
}

#[test]
fn criterion_08_gradient_check() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut net = Mlp::new(&[9, 14, 11, 5], &mut rng);
    let x = ndarray::Array2::from_shape_fn((3, 9), |_| rng.gen_range(-1.0..1.0));
    let c = ndarray::Array2::from_shape_fn((3, 5), |_| rng.gen_range(-1.0..1.0));

    let loss = |net: &Mlp| -> f64 { (net.forward(x.view()) * &c).sum() };
    let (_, cache) = net.forward_train(x.view());
    let grads = net.backward(&cache, c.view());
    let analytic = {
        // flatten in the same order as param_vec
        let mut v = Vec::new();
        for (w, b) in grads.weights.iter().zip(&grads.biases) {
            v.extend(w.iter().copied());
            v.extend(b.iter().copied());
        }
        v
    };
    let mut params = net.param_vec();
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let i = rng.gen_range(0..params.len());
        let h = 1e-5;
        let orig = params[i];
        params[i] = orig + h;
        net.set_param_vec(&params);
        let up = loss(&net);
        params[i] = orig - h;
        net.set_param_vec(&params);
        let down = loss(&net);
        params[i] = orig;
        net.set_param_vec(&params);
        let numeric = (up - down) / (2.0 * h);
        let rel = (analytic[i] - numeric).abs() / analytic[i].abs().max(numeric.abs()).max(1e-8);
        worst = worst.max(rel);
        assert!(rel < 1e-4, "param {i}: analytic {} vs numeric {numeric}", analytic[i]);
    }
    println!("criterion 8 PASS: 20 probes, worst relative error {worst:.2e}");
}

/// Verify a discovered circuit end to end: evaluate the tableau, check CSS
/// form, and run the exhaustive distance verifier.
fn assert_discovery(c: &Circuit, n: usize, k: usize, d: usize) {
    assert_eq!((c.n, c.k, c.d), (n, k, d));
    let t = c.evaluate().unwrap();
    assert!(t.is_css());
    assert!(
        verify_distance_at_least(&t, d, DEFAULT_VERIFY_BUDGET)
            .unwrap()
            .holds(),
        "[[{n},{k},{d}]] discovery fails verification"
    );
}

#[test]
fn criterion_09_end_to_end_discovery() {
    // documented seeds: [[7,1,3]] seed 0, [[9,1,3]] seed 0, [[13,1,4]] seed 0.
    // the n=13 run uses a 60-step episode budget with a 128-step rollout so
    // complete episodes fit in one collection window
    let start = Instant::now();
    let mut summary = Vec::new();
    for (n, d, levels, seed, cap, max_steps, rollout) in [
        (7usize, 3usize, vec![0u8], 0u64, 2000usize, 30usize, 64usize),
        (9, 3, vec![0], 0, 2000, 30, 64),
        (13, 4, vec![0, 1], 0, 5000, 60, 128),
    ] {
        let mut env_cfg = EnvConfig::new(n, 1, d, levels.clone());
        env_cfg.max_steps = max_steps;
        let cfg = TrainerConfig {
            seed,
            epochs_per_stage: cap,
            rollout_len: rollout,
            patience: 800,
            ..TrainerConfig::default()
        };
        let (_, result) = run_curriculum(&env_cfg, &cfg).unwrap();
        let epoch = result
            .first_success_epoch
            .iter()
            .find(|&&(stage_d, _)| stage_d == d)
            .map(|&(_, e)| e)
            .unwrap_or_else(|| panic!("[[{n},1,{d}]] not discovered within {cap} epochs"));
        assert!(epoch <= cap, "[[{n},1,{d}]] needed {epoch} epochs");
        assert!(!result.circuits.is_empty());
        for c in &result.circuits {
            if c.d == d {
                assert_discovery(c, n, 1, d);
            }
        }
        summary.push(format!("[[{n},1,{d}]] seed {seed} @ epoch {epoch}"));
    }
    println!(
        "criterion 9 PASS: {} ({:.0}s)",
        summary.join(", "),
        start.elapsed().as_secs_f64()
    );
}

#[test]
fn criterion_10_gadget_speedup_ordering() {
    // scaled speedup check on [[13,1,4]]: 3 seeds per arm, runs that never
    // succeed are censored at cap+1 epochs
    let start = Instant::now();
    let seeds = [11u64, 12, 13];
    let cap = 2000usize;
    let mut curves = String::from("arm,seed,epoch,stage_d,success_rate,mean_normalized_return\n");
    let mut medians = Vec::new();
    for (arm, levels) in [("cx", vec![0u8]), ("cx+dcx", vec![0u8, 1])] {
        let mut epochs: Vec<usize> = Vec::new();
        for &seed in &seeds {
            let mut env_cfg = EnvConfig::new(13, 1, 4, levels.clone());
            env_cfg.max_steps = 60;
            let cfg = TrainerConfig {
                seed,
                epochs_per_stage: cap,
                rollout_len: 128,
                patience: 800,
                ..TrainerConfig::default()
            };
            let (_, result) = run_curriculum(&env_cfg, &cfg).unwrap();
            let e = result
                .first_success_epoch
                .iter()
                .find(|&&(stage_d, _)| stage_d == 4)
                .map(|&(_, e)| e)
                .unwrap_or(cap + 1);
            epochs.push(e);
            for r in &result.log {
                curves.push_str(&format!(
                    "{arm},{seed},{},{},{:.4},{:.4}\n",
                    r.epoch, r.stage_d, r.success_rate, r.mean_normalized_return
                ));
            }
        }
        epochs.sort_unstable();
        medians.push((arm, epochs[1], epochs.clone()));
    }
    let csv_path = std::path::Path::new(env!("CARGO_TARGET_TMPDIR")).join("speedup_curves.csv");
    std::fs::write(&csv_path, curves).unwrap();
    let (cx_arm, cx_median, cx_epochs) = &medians[0];
    let (gadget_arm, gadget_median, gadget_epochs) = &medians[1];
    assert!(
        gadget_median < cx_median,
        "median epochs-to-success: {gadget_arm} {gadget_median} (runs {gadget_epochs:?}) vs {cx_arm} {cx_median} (runs {cx_epochs:?})"
    );
    println!(
        "criterion 10 PASS: [[13,1,4]] median epochs {gadget_arm} {gadget_median} < {cx_arm} {cx_median} \
         (runs {gadget_epochs:?} vs {cx_epochs:?}, cap {cap}); curves at {} ({:.0}s)",
        csv_path.display(),
        start.elapsed().as_secs_f64()
    );
}

fn random_circuit(rng: &mut impl Rng) -> Circuit {
    let n = rng.gen_range(5..10);
    let mut env = Env::new(EnvConfig::new(n, 1, 3, vec![0, 1])).unwrap();
    env.reset().unwrap();
    for _ in 0..rng.gen_range(1..6) {
        let a = rng.gen_range(0..env.n_actions());
        if env.step(a).unwrap().2 != Done::No {
            break;
        }
    }
    env.export_circuit()
}

fn permuted(c: &Circuit, perm: &[usize]) -> Circuit {
    Circuit {
        n: c.n,
        k: c.k,
        d: c.d,
        logical: c.logical.iter().map(|&q| perm[q]).collect(),
        h: c.h.iter().map(|&q| perm[q]).collect(),
        bells: c.bells.iter().map(|&(a, b)| (perm[a], perm[b])).collect(),
        actions: Vec::new(),
        cx: c.cx.iter().map(|&(a, b)| (perm[a], perm[b])).collect(),
    }
}

#[test]
fn criterion_11_normalization_and_dedup() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut circuits = Vec::new();
    for _ in 0..100 {
        let c = random_circuit(&mut rng);
        let once = normalize(&c);
        assert_eq!(normalize(&once), once, "normalize not idempotent");
        // two random label permutations of the same circuit agree
        let flat = once.clone();
        let mut perm1: Vec<usize> = (0..c.n).collect();
        let mut perm2: Vec<usize> = (0..c.n).collect();
        for i in (1..c.n).rev() {
            perm1.swap(i, rng.gen_range(0..=i));
            perm2.swap(i, rng.gen_range(0..=i));
        }
        let v1 = normalize(&permuted(&flat, &perm1));
        let v2 = normalize(&permuted(&flat, &perm2));
        assert_eq!(v1, v2, "permuted variants normalize differently");
        assert_eq!(v1, flat);
        circuits.push(c);
    }
    // dedup over the corpus plus duplicates of it
    let mut with_dupes = circuits.clone();
    with_dupes.extend(circuits.iter().cloned());
    let report = dedup(with_dupes);
    let keys: Vec<_> = report
        .kept
        .iter()
        .map(|c| c.evaluate().unwrap().canonical_key())
        .collect();
    for i in 0..keys.len() {
        for j in i + 1..keys.len() {
            assert_ne!(keys[i], keys[j], "dedup kept duplicate canonical forms");
        }
    }
    assert!(report.discarded >= circuits.len());
    println!(
        "criterion 11 PASS: 100 circuits idempotent + permutation-invariant; dedup kept {} of {} (pairwise distinct)",
        report.kept.len(),
        200
    );
}

#[test]
fn criterion_12_reward_telescoping() {
    let mut rng = ChaCha8Rng::seed_from_u64(12);
    for case in 0..100 {
        let n = rng.gen_range(5..10);
        let d = rng.gen_range(2..4);
        let mut env = Env::new(EnvConfig::new(n, 1, d, vec![0, 1])).unwrap();
        env.reset().unwrap();
        let initial = env.sigma_kl_initial();
        let mut total = 0.0;
        loop {
            let a = rng.gen_range(0..env.n_actions());
            let (_, r, done) = env.step(a).unwrap();
            total += r;
            if done != Done::No {
                break;
            }
        }
        let diff = (total - (initial - env.sigma_kl())).abs();
        assert!(diff < 1e-9, "case {case}: telescoping residual {diff}");
    }
    println!("criterion 12 PASS: 100 trajectories telescope to 1e-9");
}
