//! Quick invariant checks run by `kmsdf selftest`.

use kmsdf::montecarlo;
use kmsdf::quadrature::integrate_to_infinity;
use kmsdf::ser_engine::{end_to_end_ser, link_ser_quadrature, link_ser_series};
use kmsdf::sweep::{run_sweep, to_csv_string};
use kmsdf::{
    Evaluator, KappaMuParams, LinkEvaluator, LinkParams, ModulationParams, NetworkParams, Result, SeriesControl,
    SimConfig, SimMode, SweepSpec,
};

use crate::Failure;

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn uniform(kappa: f64, mu: f64, mean: f64, m: ModulationParams) -> Result<NetworkParams> {
    let l = LinkParams::siso(kappa, mu, mean)?;
    Ok(NetworkParams {
        sr: l,
        sd: l,
        rd: l,
        modulation: m,
    })
}

fn mgf_identity() -> Result<bool> {
    let mut ok = true;
    for &(k, mu, g, ap) in &[(0.5, 0.5, 0.5, 1u32), (3.0, 2.5, 10.0, 4), (5.0, 1.0, 2.0, 2)] {
        let p = KappaMuParams::new(k, mu, g, ap)?;
        for &s in &[0.1, 1.0, 5.0] {
            let lt = integrate_to_infinity(
                |x| {
                    if x > 0.0 {
                        (-s * x).exp() * p.pdf(x).unwrap_or(0.0)
                    } else {
                        0.0
                    }
                },
                0.0,
                g,
                1e-12,
            )?;
            ok &= rel(p.mgf(s)?, lt.value) <= 1e-8;
        }
    }
    Ok(ok)
}

fn rayleigh_anchor() -> Result<bool> {
    let mut ok = true;
    for &g in &[0.5, 1.0, 5.0, 20.0] {
        let v = link_ser_quadrature(&LinkParams::siso(1e-12, 1.0, g)?, &ModulationParams::bpsk())?;
        ok &= (v - 0.5 * (1.0 - (g / (1.0 + g)).sqrt())).abs() <= 1e-9;
    }
    Ok(ok)
}

fn series_vs_quadrature() -> Result<bool> {
    let link = LinkParams::new(2.0, 1.5, 8.0, 2, 1)?;
    let m = ModulationParams::qpsk();
    let s = link_ser_series(&link, &m, &SeriesControl::with_terms(40)?)?;
    Ok(rel(s.value, link_ser_quadrature(&link, &m)?) <= 1e-6)
}

fn simulation_unbiased() -> Result<bool> {
    let net = uniform(1.0, 1.0, 10.0, ModulationParams::qpsk())?;
    let want = end_to_end_ser(&net, &LinkEvaluator::Quadrature)?;
    let r = montecarlo::run(&SimConfig::new(net, SimMode::ModelFaithful, 200_000, 1).with_partitions(4))?;
    Ok(r.contains(want))
}

fn kappa_ordering() -> Result<bool> {
    let g = 100.0;
    let mut prev = f64::INFINITY;
    for &k in &[0.0, 1.0, 2.0, 4.0] {
        let v = end_to_end_ser(
            &uniform(k, 1.0, g, ModulationParams::qpsk())?,
            &LinkEvaluator::Quadrature,
        )?;
        if v >= prev {
            return Ok(false);
        }
        prev = v;
    }
    Ok(true)
}

fn sweep_determinism() -> Result<bool> {
    let mut spec = SweepSpec::new(uniform(1.0, 1.0, 1.0, ModulationParams::qam(4)?)?, 0.0, 10.0, 5.0);
    spec.evaluators = vec![Evaluator::Quadrature, Evaluator::McModel];
    spec.trials = 20_000;
    Ok(to_csv_string(&run_sweep(&spec)?) == to_csv_string(&run_sweep(&spec)?))
}

type Check = (&'static str, fn() -> Result<bool>);

pub fn run() -> std::result::Result<(), Failure> {
    let checks: [Check; 6] = [
        ("mgf matches Laplace transform of pdf", mgf_identity),
        ("Rayleigh BPSK closed form", rayleigh_anchor),
        ("series agrees with quadrature", series_vs_quadrature),
        ("model-faithful simulation covers analysis", simulation_unbiased),
        ("SER falls as kappa grows", kappa_ordering),
        ("sweep CSV is deterministic", sweep_determinism),
    ];
    let mut failed = 0;
    for (name, check) in checks {
        let verdict = match check() {
            Ok(true) => "PASS".to_string(),
            Ok(false) => "FAIL".to_string(),
            Err(e) => format!("FAIL ({e})"),
        };
        if verdict != "PASS" {
            failed += 1;
        }
        println!("{verdict:>4}  {name}");
    }
    match failed {
        0 => Ok(()),
        n => Err(Failure::Numeric(format!("{n} self-test checks failed"))),
    }
}
