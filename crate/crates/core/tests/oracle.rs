//! Cross-checks against the nalgebra reference computations. The pinned
//! instance counts live in the acceptance suite.

mod common;

use common::*;
use dualbeam::codebook::build_codebook;
use dualbeam::config::{Panel, ScenarioConfig};
use dualbeam::dataset::generate_dataset;
use dualbeam::linalg::CMat;
use dualbeam::search::exhaustive_search;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[test]
fn zero_channel_ties_resolve_like_the_oracle() {
    let cfg = cfg_for(Panel::new(2, 4), Panel::new(1, 2), 2, 3);
    let cb = build_codebook(&cfg).unwrap();
    let h = vec![CMat::zeros(2 * cfg.n_rx(), 2 * cfg.n_tx()); 2];
    let got = exhaustive_search(&h, &cb, &cfg, 10.0).unwrap();
    let h_na: Vec<NMat> = h.iter().map(to_na).collect();
    let (tuple, mi) = naive_search(&h_na, &cb, 2, cfg.n_tx(), 10.0);
    assert_eq!(got.selection.tuple(), tuple);
    assert_eq!(tuple, vec![0; 4]);
    assert_eq!((got.mi, mi), (0.0, 0.0));
}

#[test]
fn random_instances_agree_with_the_oracle() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for c in 2..=5 {
        let cfg = cfg_for(Panel::new(2, 4), Panel::new(1, 2), 2, c);
        let cb = build_codebook(&cfg).unwrap();
        let h = random_channel(&mut rng, 2 * cfg.n_rx(), 2 * cfg.n_tx(), 2);
        let got = exhaustive_search(&h, &cb, &cfg, 5.0).unwrap();
        let h_na: Vec<NMat> = h.iter().map(to_na).collect();
        let (tuple, mi) = naive_search(&h_na, &cb, 2, cfg.n_tx(), 5.0);
        assert_eq!(got.selection.tuple(), tuple);
        assert!((got.mi - mi).abs() <= 1e-12);
    }
}

#[test]
fn desk_labels_match_naive_enumeration() {
    let cfg = ScenarioConfig::desk();
    let ds = generate_dataset(&cfg, 100, f64::INFINITY).unwrap();
    let cb = build_codebook(&cfg).unwrap();
    let rho = cfg.mmwave_snr_linear();
    let (n_rx2, n_tx) = (2 * cfg.n_rx(), cfg.n_tx());
    let l = cb.codeword_len();
    let n_rf = cfg.rf_chains;
    for (i, sample) in ds.samples.iter().enumerate() {
        let h: Vec<NMat> = sample
            .mmwave_matrices(&ds.header)
            .unwrap()
            .iter()
            .map(to_na)
            .collect();
        // Per subcarrier, polarization, chain and codeword: H restricted to
        // the chain's subarray times the codeword.
        let cols: Vec<Vec<Vec<Vec<NMat>>>> = h
            .iter()
            .map(|hk| {
                (0..2)
                    .map(|pol| {
                        (0..n_rf)
                            .map(|r| {
                                let block = hk.columns(pol * n_tx + r * l, l);
                                cb.codewords
                                    .iter()
                                    .map(|cw| block * NMat::from_column_slice(l, 1, &cw.f))
                                    .collect()
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect();
        let mut best = (Vec::new(), f64::NEG_INFINITY);
        for plus in tuples(cb.len(), n_rf) {
            for minus in tuples(cb.len(), n_rf) {
                let mut mi = 0.0;
                for ck in &cols {
                    let mut m = NMat::identity(n_rx2, n_rx2);
                    for r in 0..n_rf {
                        let a = &ck[0][r][plus[r]] + &ck[1][r][minus[r]];
                        // Column norms of F_rf are all 2 for unit-norm codewords.
                        m += (&a * a.adjoint()).scale(rho / 2.0);
                    }
                    mi += m.lu().determinant().re.log2();
                }
                if mi > best.1 {
                    best = ([plus.clone(), minus].concat(), mi);
                }
            }
        }
        let label = sample.label.as_ref().unwrap();
        assert_eq!(label.selection.tuple(), best.0, "sample {i}");
        assert!(
            (label.optimal_mi - best.1).abs() < 1e-9 * best.1.max(1.0),
            "sample {i}"
        );
    }
}
