use proptest::prelude::*;
use xdmt_core::channel::{log_det_capacity, sample_channel_set, ChannelSet, Snr};
use xdmt_core::dmt::{Scheme, SwitchFraction};
use xdmt_core::linalg::ComplexMatrix;
use xdmt_core::outage::{
    dof_check, dof_check_with_threads, estimate_diversity_slope, estimate_outage,
    outage_event_onoff_ia, outage_event_onoff_iaa, OutageConfig,
};

fn sf(a: f64) -> SwitchFraction {
    SwitchFraction::new(a).unwrap()
}

fn config(scheme: Scheme, a: f64, r: f64, snr_db: &[f64], trials: u64, seed: u64) -> OutageConfig {
    OutageConfig {
        scheme,
        a: sf(a),
        r,
        snr_db: snr_db.to_vec(),
        trials,
        seed,
        threads: None,
    }
}

fn sigma(p: f64, n: u64) -> f64 {
    (p * (1.0 - p) / n as f64).sqrt()
}

#[test]
fn zero_rate_never_outages() {
    let cfg = config(Scheme::OnOffIaa, 0.3, 0.0, &[0.0, 20.0, 40.0], 20_000, 1);
    for e in estimate_outage(&cfg).unwrap() {
        assert_eq!(e.outage_count, 0);
        assert_eq!(e.p_hat, 0.0);
    }
}

#[test]
fn outage_decreases_with_snr() {
    let n = 1_000_000;
    let cfg = config(Scheme::OnOffIa, 0.2, 0.9, &[20.0, 30.0, 40.0], n, 3);
    let est = estimate_outage(&cfg).unwrap();
    for w in est.windows(2) {
        let slack = 3.0 * (sigma(w[0].p_hat, n) + sigma(w[1].p_hat, n));
        assert!(w[1].p_hat <= w[0].p_hat + slack, "{w:?}");
    }
    assert!(est[2].p_hat < est[0].p_hat);
}

#[test]
fn outage_increases_with_rate() {
    let n = 200_000;
    let mut last = 0.0;
    for r in [0.6, 0.8, 1.0, 1.2] {
        let est = estimate_outage(&config(Scheme::OnOffIa, 0.5, r, &[20.0], n, 4)).unwrap();
        // Same seed, same channels: the event only grows with r.
        assert!(est[0].p_hat >= last, "r={r}");
        last = est[0].p_hat;
    }
}

/// `ch` with row or column `k` of link `(rx, tx)` multiplied by `s`.
fn boost(ch: &ChannelSet, rx: usize, tx: usize, row: bool, k: usize, s: f64) -> ChannelSet {
    let mut out = ch.clone();
    let link = out.link_mut(rx, tx);
    for j in 0..2 {
        let idx = if row { (k, j) } else { (j, k) };
        link[idx] *= s;
    }
    out
}

#[test]
fn stronger_channels_never_cause_outage() {
    // Scaling a whole row or column raises H H^H in the PSD order, so every
    // log-det term grows, as do the single-coefficient terms.
    let snr = Snr::from_db(20.0).unwrap();
    let cases = [(0.0, 0.9), (0.4, 1.0), (1.0, 1.1)];
    for i in 0..2000 {
        let ch = sample_channel_set(5, i);
        for (rx, tx) in [(1, 1), (1, 2), (2, 1), (2, 2)] {
            for row in [true, false] {
                for k in 0..2 {
                    let boosted = boost(&ch, rx, tx, row, k, 3.0);
                    for (a, r) in cases {
                        if outage_event_onoff_ia(&boosted, sf(a), r, snr) {
                            assert!(outage_event_onoff_ia(&ch, sf(a), r, snr));
                        }
                        if outage_event_onoff_iaa(&boosted, sf(a), r, snr) {
                            assert!(outage_event_onoff_iaa(&ch, sf(a), r, snr));
                        }
                    }
                }
            }
        }
        // Coefficients that only enter through single-coefficient gains.
        let mut boosted = ch.clone();
        boosted.h22[(0, 0)] *= 3.0;
        boosted.h21[(0, 0)] *= 3.0;
        for (a, r) in cases {
            if outage_event_onoff_ia(&boosted, sf(a), r, snr) {
                assert!(outage_event_onoff_ia(&ch, sf(a), r, snr));
            }
            if outage_event_onoff_iaa(&boosted, sf(a), r, snr) {
                assert!(outage_event_onoff_iaa(&ch, sf(a), r, snr));
            }
        }
    }
}

#[test]
fn single_entry_boost_can_hurt_the_log_det_term() {
    // Raising one entry can cancel the 2x2 minor, so monotonicity holds per
    // row or column, not per entry.
    let snr = Snr::from_db(30.0).unwrap();
    let h = ComplexMatrix::from_real(2, 2, &[1.0, 1.0, 0.5, 2.0]).unwrap();
    let ch = ChannelSet::uniform(h).unwrap();
    let mut boosted = ch.clone();
    boosted.h11[(1, 0)] *= 4.0;
    assert!(log_det_capacity(&boosted.h11, snr) < log_det_capacity(&ch.h11, snr));
}

#[test]
fn alamouti_gains_dominate_on_shared_draws() {
    let n = 300_000;
    for (a, r) in [(0.3, 0.9), (0.7, 1.1), (1.0, 1.0)] {
        let snr_db = [20.0, 40.0];
        let ia = estimate_outage(&config(Scheme::OnOffIa, a, r, &snr_db, n, 9)).unwrap();
        let iaa = estimate_outage(&config(Scheme::OnOffIaa, a, r, &snr_db, n, 9)).unwrap();
        for (x, y) in ia.iter().zip(&iaa) {
            assert!(y.outage_count <= x.outage_count, "a={a} r={r}: {y:?} vs {x:?}");
            assert!(y.p_hat <= x.p_hat + 3.0 * sigma(x.p_hat, n));
        }
    }
}

#[test]
fn counts_do_not_depend_on_worker_count() {
    let mut cfg = config(Scheme::OnOffIa, 0.2, 0.9, &[20.0, 30.0], 200_000, 42);
    cfg.threads = Some(1);
    let one = estimate_outage(&cfg).unwrap();
    cfg.threads = Some(8);
    let eight = estimate_outage(&cfg).unwrap();
    assert_eq!(one, eight);
    cfg.threads = None;
    assert_eq!(one, estimate_outage(&cfg).unwrap());
}

#[test]
fn confidence_intervals_are_calibrated() {
    let n = 1_000_000;
    let reps: Vec<_> = (0..100)
        .map(|k| estimate_outage(&config(Scheme::OnOffIa, 0.2, 0.9, &[30.0], n, 1000 + k)).unwrap()[0].clone())
        .collect();
    let pooled = reps.iter().map(|e| e.outage_count).sum::<u64>() as f64 / (100 * n) as f64;
    let covered = reps
        .iter()
        .filter(|e| {
            let (lo, hi) = e.interval();
            (lo..=hi).contains(&pooled)
        })
        .count();
    assert!(covered >= 93, "{covered}/100 intervals cover {pooled}");
}

#[test]
fn alamouti_always_on_slope_near_one_half() {
    let cfg = config(Scheme::IaAlamoutiFixed, 1.0, 1.0, &[20.0, 30.0, 40.0, 50.0, 60.0], 1_000_000, 17);
    let slope = estimate_diversity_slope(&estimate_outage(&cfg).unwrap()).unwrap();
    assert!((slope.slope - 0.5).abs() < 0.1, "{slope:?}");
}

#[test]
fn dof_estimate_near_four_thirds() {
    let lo = Snr::from_db(40.0).unwrap();
    let hi = Snr::from_db(80.0).unwrap();
    let est = dof_check(200, lo, hi, 5).unwrap();
    assert!((1.28..=1.39).contains(&est.dof), "{est:?}");
    let threaded = dof_check_with_threads(200, lo, hi, 5, Some(4)).unwrap();
    assert_eq!(est, threaded);
    // A wider range dilutes the finite-SNR offset.
    let wide = dof_check(200, lo, Snr::from_db(120.0).unwrap(), 5).unwrap();
    assert!((wide.dof - 4.0 / 3.0).abs() < (est.dof - 4.0 / 3.0).abs());
}

#[test]
fn dof_check_rejects_narrow_ranges() {
    let lo = Snr::from_db(40.0).unwrap();
    assert!(dof_check(10, lo, Snr::from_db(50.0).unwrap(), 1).is_err());
    assert!(dof_check(0, lo, Snr::from_db(80.0).unwrap(), 1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn event_is_monotone_in_rate(seed in any::<u64>(), a in 0.0f64..=1.0, r in 0.0f64..1.3, dr in 0.0f64..0.2, db in 0.0f64..60.0) {
        let ch = sample_channel_set(seed, 0);
        let snr = Snr::from_db(db).unwrap();
        if outage_event_onoff_ia(&ch, sf(a), r, snr) {
            prop_assert!(outage_event_onoff_ia(&ch, sf(a), r + dr, snr));
        }
        if outage_event_onoff_iaa(&ch, sf(a), r, snr) {
            prop_assert!(outage_event_onoff_iaa(&ch, sf(a), r + dr, snr));
        }
        // Alamouti gains contain the single-coefficient gains.
        if outage_event_onoff_iaa(&ch, sf(a), r, snr) {
            prop_assert!(outage_event_onoff_ia(&ch, sf(a), r, snr));
        }
    }

    #[test]
    fn event_is_monotone_in_snr_at_fixed_rate_target(seed in any::<u64>(), a in 0.0f64..=1.0, db in 0.0f64..60.0, ddb in 0.0f64..20.0) {
        // With the rate pinned (r log2 rho held fixed) more SNR only helps.
        let ch = sample_channel_set(seed, 1);
        let lo = Snr::from_db(db).unwrap();
        let hi = Snr::from_db(db + ddb).unwrap();
        let rate = 4.0;
        let r_lo = rate / lo.log2().max(1e-9);
        let r_hi = rate / hi.log2().max(1e-9);
        prop_assume!(db > 1.0);
        if outage_event_onoff_ia(&ch, sf(a), r_hi, hi) {
            prop_assert!(outage_event_onoff_ia(&ch, sf(a), r_lo, lo));
        }
    }
}
