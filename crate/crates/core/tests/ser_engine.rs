use kmsdf::ser_engine::{
    conditional_ser, coop_ser, end_to_end_ser, link_ser_quadrature, link_ser_series, LinkEvaluator, LinkParams,
    ModulationParams, NetworkParams,
};
use kmsdf::SeriesControl;
use proptest::prelude::*;

const SCHEMES: [&str; 7] = ["bpsk", "bfsk", "8psk", "4pam", "qpsk", "dpsk", "16qam"];

fn uniform(kappa: f64, mu: f64, mean: f64, m: &str) -> NetworkParams {
    let l = LinkParams::siso(kappa, mu, mean).unwrap();
    NetworkParams {
        sr: l,
        sd: l,
        rd: l,
        modulation: m.parse().unwrap(),
    }
}

fn db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

#[test]
fn series_agrees_with_quadrature_where_it_converges() {
    let ctl = SeriesControl::with_terms(120).unwrap();
    let mut checked = 0;
    for name in SCHEMES {
        let m: ModulationParams = name.parse().unwrap();
        for &(k, mu, g, ap) in &[
            (0.5, 1.0, 20.0, 1u32),
            (1.0, 0.5, 5.0, 1),
            (2.0, 1.5, 8.0, 2),
            (3.0, 1.0, 100.0, 1),
        ] {
            let tx = if ap == 2 { 2 } else { 1 };
            let link = LinkParams::new(k, mu, g, tx, 1).unwrap();
            let s = link_ser_series(&link, &m, &ctl).unwrap();
            if !s.converged {
                continue;
            }
            checked += 1;
            let q = link_ser_quadrature(&link, &m).unwrap();
            assert!(
                ((s.value - q) / q).abs() < 1e-6,
                "{name} {k} {mu} {g}: {} vs {q}",
                s.value
            );
            if m.c == 0.0 {
                assert_eq!(s.i2, 0.0);
            }
        }
    }
    assert!(checked >= 20, "only {checked} converged cells");
}

#[test]
fn more_los_and_more_clusters_lower_the_ser() {
    let q = LinkEvaluator::Quadrature;
    let g = db(20.0);
    let by_kappa: Vec<f64> = [0.0, 1.0, 2.0, 4.0]
        .iter()
        .map(|&k| end_to_end_ser(&uniform(k, 1.0, g, "qpsk"), &q).unwrap())
        .collect();
    assert!(by_kappa.windows(2).all(|w| w[1] < w[0]), "{by_kappa:?}");
    let by_mu: Vec<f64> = [1.0, 2.0, 3.0]
        .iter()
        .map(|&mu| end_to_end_ser(&uniform(1.0, mu, g, "qpsk"), &q).unwrap())
        .collect();
    assert!(by_mu.windows(2).all(|w| w[1] < w[0]), "{by_mu:?}");
}

#[test]
fn relay_mu_matters_more_than_relay_kappa() {
    let q = LinkEvaluator::Quadrature;
    let g = db(15.0);
    let base = uniform(1.0, 1.0, g, "4qam");
    let with_rd = |k: f64, mu: f64| NetworkParams {
        rd: LinkParams::siso(k, mu, g).unwrap(),
        ..base
    };
    let p0 = end_to_end_ser(&base, &q).unwrap();
    let dmu = p0 - end_to_end_ser(&with_rd(1.0, 2.0), &q).unwrap();
    let dk = p0 - end_to_end_ser(&with_rd(2.0, 1.0), &q).unwrap();
    assert!(dmu > dk && dk > 0.0, "dmu={dmu} dk={dk}");
}

#[test]
fn symmetric_links_square_the_branch_ser() {
    let net = uniform(2.0, 1.5, 8.0, "dpsk");
    let q = LinkEvaluator::Quadrature;
    let p = link_ser_quadrature(&net.sd, &net.modulation).unwrap();
    assert!((coop_ser(&net, &q).unwrap() - p * p).abs() <= 1e-15 * p * p);
}

#[test]
fn series_evaluator_composition_matches_quadrature() {
    let net = uniform(1.0, 1.0, db(15.0), "qpsk");
    let a = end_to_end_ser(&net, &LinkEvaluator::Quadrature).unwrap();
    let b = end_to_end_ser(&net, &LinkEvaluator::Series(SeriesControl::with_terms(100).unwrap())).unwrap();
    assert!(((a - b) / a).abs() < 1e-6);
}

fn scheme() -> impl Strategy<Value = &'static str> {
    prop::sample::select(SCHEMES.to_vec())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn end_to_end_is_non_increasing_in_each_hop(
        name in scheme(),
        kappa in 0.0f64..5.0,
        mu in 0.5f64..4.0,
        base_db in -5.0f64..25.0,
        hop in 0usize..3,
    ) {
        let q = LinkEvaluator::Quadrature;
        let net = uniform(kappa, mu, db(base_db), name);
        let mut prev = end_to_end_ser(&net, &q).unwrap();
        prop_assert!((0.0..=1.0).contains(&prev));
        for step in 1..=4 {
            let g = db(base_db + 3.0 * step as f64);
            let mut n = net;
            match hop {
                0 => n.sr = n.sr.with_mean_snr(g),
                1 => n.sd = n.sd.with_mean_snr(g),
                _ => n.rd = n.rd.with_mean_snr(g),
            }
            let v = end_to_end_ser(&n, &q).unwrap();
            prop_assert!(v <= prev * (1.0 + 1e-12), "hop {} step {}: {} > {}", hop, step, v, prev);
            prev = v;
        }
    }

    #[test]
    fn link_ser_is_a_probability_below_the_zero_snr_value(
        name in scheme(),
        kappa in 0.0f64..8.0,
        mu in 0.3f64..6.0,
        mean_db in -20.0f64..40.0,
        tx in 1u32..3,
        rx in 1u32..3,
    ) {
        let m: ModulationParams = name.parse().unwrap();
        let link = LinkParams::new(kappa, mu, db(mean_db), tx, rx).unwrap();
        let v = link_ser_quadrature(&link, &m).unwrap();
        prop_assert!(v >= 0.0 && v <= conditional_ser(&m, 0.0) + 1e-12);
        let s = link_ser_series(&link, &m, &SeriesControl::with_terms(20).unwrap()).unwrap();
        prop_assert!((0.0..=1.0).contains(&s.value));
    }
}
