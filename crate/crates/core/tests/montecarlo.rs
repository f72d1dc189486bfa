mod common;

use common::{ks_critical, ks_distance, normal_cdf};
use kmsdf::montecarlo::{merge, run, run_partition, simulate_link_physical};
use kmsdf::ser_engine::{
    end_to_end_ser, link_ser_quadrature, LinkEvaluator, LinkParams, ModulationParams, NetworkParams,
};
use kmsdf::{SimConfig, SimMode};

fn uniform(kappa: f64, mu: f64, mean: f64, m: ModulationParams) -> NetworkParams {
    let l = LinkParams::siso(kappa, mu, mean).unwrap();
    NetworkParams {
        sr: l,
        sd: l,
        rd: l,
        modulation: m,
    }
}

#[test]
fn model_faithful_is_unbiased() {
    for (kappa, mu, seed) in [(1.0, 1.0, 1u64), (2.0, 0.5, 2)] {
        let net = uniform(kappa, mu, 10.0, ModulationParams::qpsk());
        let want = end_to_end_ser(&net, &LinkEvaluator::Quadrature).unwrap();
        let r = run(&SimConfig::new(net, SimMode::ModelFaithful, 1_000_000, seed).with_partitions(4)).unwrap();
        assert!(r.contains(want), "{want} not in [{}, {}]", r.ci99_low, r.ci99_high);
    }
}

#[test]
fn partition_estimates_are_binomial() {
    let net = uniform(1.0, 1.0, 10.0, ModulationParams::qpsk());
    let p = end_to_end_ser(&net, &LinkEvaluator::Quadrature).unwrap();
    let parts = 200u32;
    let cfg = SimConfig::new(net, SimMode::ModelFaithful, parts as u64 * 5000, 77).with_partitions(parts);
    let results: Vec<_> = (0..parts).map(|i| run_partition(&cfg, i).unwrap()).collect();
    let mut z: Vec<f64> = results
        .iter()
        .map(|r| {
            let n = r.trials as f64;
            (r.errors as f64 - n * p) / (n * p * (1.0 - p)).sqrt()
        })
        .collect();
    z.sort_by(f64::total_cmp);
    let cdf: Vec<f64> = z.iter().map(|&x| normal_cdf(x)).collect();
    assert!(ks_distance(&z, &cdf) < ks_critical(z.len()));

    let pooled = merge(&results).unwrap();
    assert_eq!(pooled.trials, cfg.trials);
    assert_eq!(pooled, run(&cfg).unwrap());
    let errors: u64 = results.iter().map(|r| r.errors).sum();
    assert_eq!(pooled.ser, errors as f64 / cfg.trials as f64);
}

#[test]
fn physical_rayleigh_bpsk_link() {
    let link = LinkParams::siso(1e-12, 1.0, 1.0).unwrap();
    let r = simulate_link_physical(&link, &ModulationParams::bpsk(), 1_000_000, 3).unwrap();
    let exact = 0.5 * (1.0 - 0.5f64.sqrt());
    assert!(r.contains(exact), "{exact} not in [{}, {}]", r.ci99_low, r.ci99_high);
}

#[test]
fn physical_links_match_quadrature() {
    let cases = [
        (LinkParams::new(2.0, 1.0, 3.0, 1, 1).unwrap(), ModulationParams::qpsk()),
        (
            LinkParams::new(1.0, 1.5, 4.0, 2, 2).unwrap(),
            ModulationParams::qam(4).unwrap(),
        ),
        (LinkParams::new(0.5, 0.7, 2.0, 1, 2).unwrap(), ModulationParams::bpsk()),
    ];
    for (i, (link, m)) in cases.iter().enumerate() {
        let want = link_ser_quadrature(link, m).unwrap();
        let r = simulate_link_physical(link, m, 1_000_000, 10 + i as u64).unwrap();
        assert!(
            r.contains(want),
            "case {i}: {want} not in [{}, {}]",
            r.ci99_low,
            r.ci99_high
        );
    }
}

#[test]
fn alamouti_has_diversity_two() {
    let m = ModulationParams::bpsk();
    let ser = |db: f64, trials: u64| {
        let link = LinkParams::new(1e-12, 1.0, 10f64.powf(db / 10.0), 2, 1).unwrap();
        simulate_link_physical(&link, &m, trials, 4).unwrap().ser
    };
    let slope = (ser(30.0, 40_000_000) / ser(20.0, 2_000_000)).log10();
    assert!((-2.3..=-1.7).contains(&slope), "slope {slope}");
}

#[test]
fn physical_and_model_faithful_are_comparable() {
    let net = uniform(1.0, 1.0, 10.0, ModulationParams::qpsk());
    let model = run(&SimConfig::new(net, SimMode::ModelFaithful, 200_000, 8)).unwrap();
    let phys = run(&SimConfig::new(net, SimMode::Physical, 200_000, 8)).unwrap();
    assert!(model.errors > 0 && phys.errors > 0);
    let ratio = phys.ser / model.ser;
    assert!(
        (0.1..10.0).contains(&ratio),
        "physical {} vs model {}",
        phys.ser,
        model.ser
    );
}
