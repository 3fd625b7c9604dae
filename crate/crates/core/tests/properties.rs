use dualbeam::channel::{generate_trajectory_seeded, mmwave_channel_at, sub6_channel_at};
use dualbeam::codebook::build_codebook;
use dualbeam::config::{Panel, ScenarioConfig};
use dualbeam::dataset::{
    decode_dataset, decode_scores, encode_dataset, encode_scores, generate_dataset, split_dataset,
    ScoresFile,
};
use dualbeam::eval::{best_n_indicator, random_scores};
use dualbeam::linalg::{CMat, C64};
use dualbeam::precoding::{assemble_precoder, mutual_information_rf, RfPrecoder, RfSelection};
use dualbeam::scores::PredictionScores;
use dualbeam::search::{candidate_set_search, exhaustive_search};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

fn small_cfg(rf_chains: usize, codebook_size: usize) -> ScenarioConfig {
    ScenarioConfig {
        bs_sub6_panel: Panel::new(2, 2),
        bs_mmwave_panel: Panel::new(2, 4),
        ue_mmwave_panel: Panel::new(1, 2),
        sub6_subcarriers: 4,
        mmwave_subcarriers: 3,
        rf_chains,
        streams: rf_chains,
        codebook_size,
        seq_len: 2,
        cluster_count: 4,
        ..ScenarioConfig::default()
    }
}

fn random_channel(seed: u64, rows: usize, cols: usize, k: usize) -> Vec<CMat> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..k)
        .map(|_| {
            CMat::from_fn(rows, cols, |_, _| {
                let re: f64 = rng.sample(StandardNormal);
                let im: f64 = rng.sample(StandardNormal);
                C64::new(re, im)
            })
        })
        .collect()
}

fn selection(n_rf: usize, c: usize, raw: &[usize]) -> RfSelection {
    RfSelection::from_tuple(&raw.iter().take(2 * n_rf).map(|i| i % c).collect::<Vec<_>>())
}

fn shape() -> impl Strategy<Value = (usize, usize)> {
    prop_oneof![Just((1, 4)), Just((2, 4)), Just((2, 3)), Just((1, 8))]
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn assembled_gram_is_twice_identity(
        (n_rf, c) in shape(),
        raw in prop::collection::vec(0usize..64, 4),
    ) {
        let cfg = small_cfg(n_rf, c);
        let cb = build_codebook(&cfg).unwrap();
        let rf = assemble_precoder(&selection(n_rf, c, &raw), &cb, &cfg).unwrap();
        let g = rf.gram();
        let err = g.max_abs_diff(&CMat::identity(n_rf).scale(C64::new(2.0, 0.0)));
        prop_assert!(err <= 1e-10, "Gram error {err}");
    }

    #[test]
    fn mi_is_zero_at_zero_snr_and_grows_with_snr(
        (n_rf, c) in shape(),
        raw in prop::collection::vec(0usize..64, 4),
        seed in any::<u64>(),
    ) {
        let cfg = small_cfg(n_rf, c);
        let cb = build_codebook(&cfg).unwrap();
        let rf = assemble_precoder(&selection(n_rf, c, &raw), &cb, &cfg).unwrap();
        let h = random_channel(seed, 2 * cfg.n_rx(), 2 * cfg.n_tx(), 3);
        prop_assert_eq!(mutual_information_rf(&h, &rf, 0.0).unwrap(), 0.0);
        let mut prev = 0.0;
        for rho in [0.1, 1.0, 10.0, 100.0] {
            let mi = mutual_information_rf(&h, &rf, rho).unwrap();
            prop_assert!(mi > prev, "rho {rho}: {mi} <= {prev}");
            prev = mi;
        }
    }

    #[test]
    fn mi_ignores_chain_phases(
        raw in prop::collection::vec(0usize..64, 4),
        phases in prop::collection::vec(0.0f64..std::f64::consts::TAU, 2),
        seed in any::<u64>(),
    ) {
        let cfg = small_cfg(2, 4);
        let cb = build_codebook(&cfg).unwrap();
        let rf = assemble_precoder(&selection(2, 4, &raw), &cb, &cfg).unwrap();
        let h = random_channel(seed, 2 * cfg.n_rx(), 2 * cfg.n_tx(), 2);
        let rotated = RfPrecoder {
            f_rf: CMat::from_fn(rf.f_rf.rows(), 2, |r, col| {
                rf.f_rf[(r, col)] * C64::from_polar(1.0, phases[col])
            }),
        };
        let a = mutual_information_rf(&h, &rf, 10.0).unwrap();
        let b = mutual_information_rf(&h, &rotated, 10.0).unwrap();
        prop_assert!((a - b).abs() <= 1e-9);
    }

    #[test]
    fn candidate_search_is_bounded_and_monotone(
        (n_rf, c) in shape(),
        seed in any::<u64>(),
    ) {
        let cfg = small_cfg(n_rf, c);
        let cb = build_codebook(&cfg).unwrap();
        let h = random_channel(seed, 2 * cfg.n_rx(), 2 * cfg.n_tx(), 2);
        let full = exhaustive_search(&h, &cb, &cfg, 10.0).unwrap();
        let scores = random_scores(seed, 0, n_rf, c).unwrap();
        let mut prev = f64::NEG_INFINITY;
        for n in 1..=c {
            let cand = candidate_set_search(&h, &cb, &cfg, 10.0, &scores, n).unwrap();
            prop_assert!(cand.mi <= full.mi + 1e-12);
            prop_assert!(cand.mi >= prev);
            prop_assert_eq!(cand.evaluated, (n as u64).pow(2 * n_rf as u32));
            prev = cand.mi;
        }
        prop_assert_eq!(prev, full.mi);
    }

    #[test]
    fn best_n_indicator_is_monotone_in_n(
        (n_rf, c) in shape(),
        seed in any::<u64>(),
        raw in prop::collection::vec(0usize..64, 4),
    ) {
        let scores = random_scores(seed, 1, n_rf, c).unwrap();
        let label = selection(n_rf, c, &raw);
        let hits: Vec<bool> = (1..=c).map(|n| best_n_indicator(&scores, &label, n).unwrap()).collect();
        prop_assert!(hits.windows(2).all(|w| !w[0] || w[1]));
        prop_assert!(hits[c - 1]);
        let one_hot = PredictionScores::one_hot(n_rf, c, &label.tuple()).unwrap();
        prop_assert!(best_n_indicator(&one_hot, &label, 1).unwrap());
    }

    #[test]
    fn scores_file_round_trips(
        count in 0usize..5,
        seed in any::<u64>(),
    ) {
        let file = ScoresFile {
            rf_chains: 2,
            codebook_size: 3,
            scores: (0..count).map(|i| random_scores(seed, i as u64, 2, 3).unwrap()).collect(),
        };
        let bytes = encode_scores(&file).unwrap();
        let back = decode_scores(&bytes).unwrap();
        prop_assert_eq!(&back, &file);
        prop_assert_eq!(encode_scores(&back).unwrap(), bytes);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn dataset_round_trips_byte_for_byte(
        seed in any::<u64>(),
        count in 0usize..4,
        snr in prop_oneof![Just(f64::INFINITY), -10.0f64..30.0],
        linked in any::<bool>(),
    ) {
        let cfg = ScenarioConfig { seed, trajectory_linked: linked, ..small_cfg(1, 4) };
        let ds = generate_dataset(&cfg, count, snr).unwrap();
        let bytes = encode_dataset(&ds).unwrap();
        let back = decode_dataset(&bytes).unwrap();
        prop_assert_eq!(encode_dataset(&back).unwrap(), bytes);
        prop_assert_eq!(back.len(), count);
    }

    #[test]
    fn split_partitions_the_samples(
        seed in any::<u64>(),
        count in 1usize..9,
        fraction in 0.05f64..0.95,
    ) {
        let ds = generate_dataset(&small_cfg(1, 2), count, f64::INFINITY).unwrap();
        let (train, test) = split_dataset(&ds, fraction, seed).unwrap();
        prop_assert_eq!(train.len(), (fraction * count as f64 + 0.5).floor() as usize);
        prop_assert_eq!(train.len() + test.len(), count);
        for s in &ds.samples {
            let found = train.samples.iter().chain(&test.samples).filter(|t| *t == s).count();
            prop_assert!(found >= 1);
        }
        let (again, _) = split_dataset(&ds, fraction, seed).unwrap();
        prop_assert_eq!(again, train);
    }

    #[test]
    fn channels_are_continuous_in_time(seed in any::<u64>()) {
        // 1 us at 30 km/h: Doppler rotates each cluster by under 5e-3 rad.
        let cfg = ScenarioConfig {
            seed,
            sample_interval_s: 1e-6,
            mmwave_subcarriers: 8,
            sub6_subcarriers: 8,
            ..ScenarioConfig::default()
        };
        let traj = generate_trajectory_seeded(&cfg, cfg.seq_len + 1, seed).unwrap();
        let rel = |x: &CMat, y: &CMat| {
            let d = x.add(&y.scale(C64::new(-1.0, 0.0))).unwrap();
            (d.frobenius_norm_sqr() / x.frobenius_norm_sqr()).sqrt()
        };
        let a = mmwave_channel_at(&cfg, &traj, 0).unwrap();
        let b = mmwave_channel_at(&cfg, &traj, 1).unwrap();
        for (x, y) in a.h.iter().zip(&b.h) {
            let d = rel(x, y);
            prop_assert!(d < 1e-2, "mmWave relative change {d}");
        }
        let a = sub6_channel_at(&cfg, &traj, 0).unwrap();
        let b = sub6_channel_at(&cfg, &traj, 1).unwrap();
        prop_assert!(rel(&a.h, &b.h) < 1e-2);
    }
}

#[test]
fn channel_power_is_normalized_on_average() {
    let cfg = small_cfg(1, 4);
    let (mut mm, mut s6) = (0.0, 0.0);
    let seeds = 1000;
    for seed in 0..seeds {
        let traj = generate_trajectory_seeded(&cfg, cfg.seq_len + 1, seed).unwrap();
        let m = mmwave_channel_at(&cfg, &traj, 0).unwrap();
        mm +=
            m.h.iter()
                .map(|h| h.frobenius_norm_sqr() / (h.rows() * h.cols()) as f64)
                .sum::<f64>()
                / m.h.len() as f64;
        let s = sub6_channel_at(&cfg, &traj, 0).unwrap();
        s6 += s.h.frobenius_norm_sqr() / (s.h.rows() * s.h.cols()) as f64;
    }
    let (mm, s6) = (mm / seeds as f64, s6 / seeds as f64);
    assert!((mm - 1.0).abs() < 0.1, "mmWave mean entry power {mm}");
    assert!((s6 - 1.0).abs() < 0.1, "sub-6 mean entry power {s6}");
}
