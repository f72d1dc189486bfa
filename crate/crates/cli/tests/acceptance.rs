//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::panic::{self, AssertUnwindSafe};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use kmsdf::montecarlo::{self, simulate_link_physical};
use kmsdf::quadrature::integrate_to_infinity;
use kmsdf::rng::StreamKey;
use kmsdf::ser_engine::{end_to_end_ser, link_ser_quadrature, link_ser_series};
use kmsdf::sweep::{figure_preset, run_sweep, PresetDefaults};
use kmsdf::{
    Evaluator, FigureName, KappaMuParams, LinkEvaluator, LinkParams, ModulationParams, NetworkParams, SeriesControl,
    SimConfig, SimMode,
};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn rel(a: f64, b: f64) -> f64 {
    ((a - b) / b).abs()
}

fn within(limit: Duration, start: Instant) -> (bool, String) {
    let t = start.elapsed();
    (t < limit, format!("{:.1}s of {}s", t.as_secs_f64(), limit.as_secs()))
}

fn db(x: f64) -> f64 {
    10f64.powf(x / 10.0)
}

fn uniform(kappa: f64, mu: f64, mean: f64, m: ModulationParams) -> NetworkParams {
    let l = LinkParams::siso(kappa, mu, mean).unwrap();
    NetworkParams {
        sr: l,
        sd: l,
        rd: l,
        modulation: m,
    }
}

fn density_grid() -> Vec<KappaMuParams> {
    let mut out = Vec::new();
    for &k in &[0.5, 1.0, 3.0, 5.0] {
        for &mu in &[0.5, 1.0, 2.5, 4.0] {
            for &g in &[0.5, 2.0, 10.0] {
                for &ap in &[1u32, 2, 4] {
                    out.push(KappaMuParams::new(k, mu, g, ap).unwrap());
                }
            }
        }
    }
    out
}

fn pdf_moment(p: &KappaMuParams, weight: impl Fn(f64) -> f64) -> f64 {
    integrate_to_infinity(
        |x| if x > 0.0 { weight(x) * p.pdf(x).unwrap() } else { 0.0 },
        0.0,
        p.mean_snr,
        1e-13,
    )
    .unwrap()
    .value
}

fn mgf_identity() -> Verdict {
    let start = Instant::now();
    let mut worst = 0.0f64;
    for p in density_grid() {
        for &s in &[0.1, 1.0, 5.0] {
            let lt = pdf_moment(&p, |x| (-s * x).exp());
            worst = worst.max(rel(p.mgf(s).unwrap(), lt));
        }
    }
    let (fast, time) = within(Duration::from_secs(60), start);
    verdict(
        worst <= 1e-8 && fast,
        format!("max relative error {worst:.2e} (limit 1e-8), {time}"),
    )
}

fn pdf_normalization() -> Verdict {
    let (mut mass_err, mut mean_err) = (0.0f64, 0.0f64);
    for p in density_grid() {
        mass_err = mass_err.max((pdf_moment(&p, |_| 1.0) - 1.0).abs());
        mean_err = mean_err.max(rel(pdf_moment(&p, |x| x), p.mean_snr));
    }
    verdict(
        mass_err <= 1e-8 && mean_err <= 1e-6,
        format!("max |mass - 1| {mass_err:.2e} (limit 1e-8), max mean error {mean_err:.2e} (limit 1e-6)"),
    )
}

fn series_vs_quadrature() -> Verdict {
    let start = Instant::now();
    let schemes = ["bpsk", "bfsk", "8psk", "4pam", "qpsk", "dpsk", "16qam"];
    let ctl = |n| SeriesControl::with_terms(n).unwrap();
    let (c15, c30, c40) = (ctl(15), ctl(30), ctl(40));
    let (mut cells, mut rel_fail, mut trunc_fail) = (0, 0, 0);
    let (mut worst_rel, mut worst_trunc) = (0.0f64, 0.0f64);
    for name in schemes {
        let m: ModulationParams = name.parse().unwrap();
        for &k in &[0.5, 1.0, 3.0] {
            for &mu in &[0.5, 1.0, 2.0, 4.0] {
                for &(tx, rx) in &[(1u32, 1u32), (2, 1), (2, 2)] {
                    for &g in &[1.0, 5.0, 20.0] {
                        let link = LinkParams::new(k, mu, g, tx, rx).unwrap();
                        let q = link_ser_quadrature(&link, &m).unwrap();
                        let s40 = link_ser_series(&link, &m, &c40).unwrap().value;
                        let s15 = link_ser_series(&link, &m, &c15).unwrap().value;
                        let s30 = link_ser_series(&link, &m, &c30).unwrap().value;
                        let r = rel(s40, q);
                        let t = (s15 - s30).abs();
                        cells += 1;
                        rel_fail += usize::from(r.is_nan() || r > 1e-6);
                        trunc_fail += usize::from(t.is_nan() || t > 1e-4);
                        worst_rel = worst_rel.max(r);
                        worst_trunc = worst_trunc.max(t);
                    }
                }
            }
        }
    }
    let (fast, time) = within(Duration::from_secs(300), start);
    verdict(
        rel_fail == 0 && trunc_fail == 0 && fast,
        format!(
            "{rel_fail}/{cells} cells above 1e-6 relative at 40 terms (worst {worst_rel:.2e}); \
             {trunc_fail}/{cells} cells with |S15 - S30| above 1e-4 (worst {worst_trunc:.2e}); {time}"
        ),
    )
}

fn rayleigh_anchor() -> Verdict {
    let mut worst = 0.0f64;
    for &g in &[0.5, 1.0, 5.0, 20.0] {
        let v = link_ser_quadrature(&LinkParams::siso(1e-12, 1.0, g).unwrap(), &ModulationParams::bpsk()).unwrap();
        worst = worst.max((v - 0.5 * (1.0 - (g / (1.0 + g)).sqrt())).abs());
    }
    verdict(worst <= 1e-9, format!("max absolute error {worst:.2e} (limit 1e-9)"))
}

fn sampler_fidelity() -> Verdict {
    let grid = [
        (0.0, 1.0, 1.0, 1u32),
        (0.5, 0.5, 2.0, 1),
        (1.0, 1.0, 1.0, 2),
        (2.0, 1.5, 3.0, 1),
        (3.0, 2.0, 5.0, 4),
        (5.0, 4.0, 0.5, 1),
    ];
    let n_ks = 100_000;
    let crit = 1.95 / (n_ks as f64).sqrt();
    let mut fails = Vec::new();
    let mut worst_ks = 0.0f64;
    for (i, &(k, mu, g, ap)) in grid.iter().enumerate() {
        let p = KappaMuParams::new(k, mu, g, ap).unwrap();
        let mut rng = StreamKey::new(2024, i as u64).stream(0);
        let xs: Vec<f64> = (0..1_000_000).map(|_| p.sample_snr(&mut rng)).collect();

        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let m2 = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / n;
        let m4 = xs.iter().map(|x| (x - mean).powi(4)).sum::<f64>() / n;
        let var = m2 * n / (n - 1.0);
        if (mean - p.mean()).abs() > 3.0 * (m2 / n).sqrt() {
            fails.push(format!("mean at point {i}"));
        }
        if (var - p.variance()).abs() > 3.0 * ((m4 - m2 * m2) / n).sqrt() {
            fails.push(format!("variance at point {i}"));
        }

        let mut sample = xs[..n_ks].to_vec();
        sample.sort_by(f64::total_cmp);
        let cdf = p.cdf_at_sorted(&sample).unwrap();
        let m = n_ks as f64;
        let d = cdf
            .iter()
            .enumerate()
            .map(|(j, &f)| (f - j as f64 / m).abs().max(((j + 1) as f64 / m - f).abs()))
            .fold(0.0, f64::max);
        worst_ks = worst_ks.max(d);
        if d >= crit {
            fails.push(format!("KS at point {i} ({d:.4})"));
        }
    }
    verdict(
        fails.is_empty(),
        format!(
            "worst KS {worst_ks:.4} (limit {crit:.4}); failures: {}",
            if fails.is_empty() {
                "none".into()
            } else {
                fails.join(", ")
            }
        ),
    )
}

fn analytic_vs_simulation() -> Verdict {
    let start = Instant::now();
    let mut inside = 0;
    let mut cells = 0;
    let mut misses = Vec::new();
    for m in [ModulationParams::qpsk(), ModulationParams::qam(4).unwrap()] {
        for &(k, mu) in &[(1.0, 1.0), (3.0, 2.0)] {
            for &snr in &[5.0, 10.0, 15.0] {
                let net = uniform(k, mu, db(snr), m);
                let want = end_to_end_ser(&net, &LinkEvaluator::Quadrature).unwrap();
                let seed = 1000 + cells as u64;
                let r =
                    montecarlo::run(&SimConfig::new(net, SimMode::ModelFaithful, 1_000_000, seed).with_partitions(4))
                        .unwrap();
                cells += 1;
                if r.contains(want) {
                    inside += 1;
                } else {
                    misses.push(format!("{} k={k} mu={mu} {snr}dB", m.scheme));
                }
            }
        }
    }
    let (fast, time) = within(Duration::from_secs(600), start);
    verdict(
        inside >= 11 && fast,
        format!("{inside}/{cells} cells inside the 99% interval (need 11); misses: {misses:?}; {time}"),
    )
}

fn figure_shapes() -> Verdict {
    let defaults = PresetDefaults {
        evaluators: vec![Evaluator::Quadrature],
        ..PresetDefaults::default()
    };
    let curves = |name| -> Vec<Vec<(f64, f64)>> {
        figure_preset(name, &defaults)
            .unwrap()
            .iter()
            .map(|spec| {
                run_sweep(spec)
                    .unwrap()
                    .iter()
                    .map(|r| (r.snr_db, r.ser.unwrap()))
                    .collect()
            })
            .collect()
    };
    let ordered = |cs: &[Vec<(f64, f64)>], from_db: f64| {
        (0..cs[0].len())
            .filter(|&i| cs[0][i].0 >= from_db)
            .all(|i| cs.windows(2).all(|w| w[1][i].1 < w[0][i].1))
    };
    let fig1 = curves(FigureName::Fig1);
    let fig1_ok = ordered(&fig1, 5.0);
    let fig3 = curves(FigureName::Fig3);
    let fig3_ok = ordered(&fig3, f64::NEG_INFINITY);
    // fig5 curves: (kappa_RD, mu_RD) = (1,1), (2,1), (1,2), (2,2)
    let fig5 = curves(FigureName::Fig5);
    let at15 = fig5[0].iter().position(|r| (r.0 - 15.0).abs() < 1e-9).unwrap();
    let base = fig5[0][at15].1;
    let d_kappa = base - fig5[1][at15].1;
    let d_mu = base - fig5[2][at15].1;
    let fig5_ok = d_mu > d_kappa;
    verdict(
        fig1_ok && fig3_ok && fig5_ok,
        format!(
            "fig1 ordered by kappa from 5 dB: {fig1_ok}; fig3 ordered by mu: {fig3_ok}; \
             fig5 at 15 dB: mu_RD+1 gains {d_mu:.3e}, kappa_RD+1 gains {d_kappa:.3e}"
        ),
    )
}

fn physical_sanity() -> Verdict {
    let m = ModulationParams::bpsk();
    let mut lines = Vec::new();
    let mut ok = true;
    for &(tx, k) in &[(1u32, 1e-12), (1, 2.0), (2, 1e-12), (2, 2.0)] {
        let link = LinkParams::new(k, 1.0, 5.0, tx, 1).unwrap();
        let want = link_ser_quadrature(&link, &m).unwrap();
        let r = simulate_link_physical(&link, &m, 1_000_000, 77 + tx as u64).unwrap();
        ok &= r.contains(want);
        lines.push(format!(
            "{tx}x1 k={k}: {:.4e} in [{:.4e}, {:.4e}]? {}",
            want,
            r.ci99_low,
            r.ci99_high,
            r.contains(want)
        ));
    }
    let net = uniform(1.0, 1.0, 10.0, ModulationParams::qpsk());
    let model = montecarlo::run(&SimConfig::new(net, SimMode::ModelFaithful, 1_000_000, 5).with_partitions(4));
    let phys = montecarlo::run(&SimConfig::new(net, SimMode::Physical, 1_000_000, 5).with_partitions(4));
    match (model, phys) {
        (Ok(a), Ok(b)) => lines.push(format!(
            "end-to-end QPSK 10 dB: physical {:.4e}, model-faithful {:.4e}, gap {:+.4e}",
            b.ser,
            a.ser,
            b.ser - a.ser
        )),
        (a, b) => {
            ok = false;
            lines.push(format!("end-to-end comparison failed: {:?} / {:?}", a.err(), b.err()));
        }
    }
    verdict(ok, lines.join("; "))
}

fn sweep_determinism() -> Verdict {
    let run = || {
        Command::new(env!("CARGO_BIN_EXE_kmsdf"))
            .args([
                "sweep",
                "--snr-stop",
                "20",
                "--snr-step",
                "5",
                "--evaluators",
                "quadrature,series,mc_model,mc_physical",
                "--trials",
                "50000",
                "--seed",
                "42",
            ])
            .output()
            .unwrap()
    };
    let (a, b) = (run(), run());
    let ok = a.status.success() && b.status.success() && a.stdout == b.stdout && !a.stdout.is_empty();
    verdict(
        ok,
        format!("{} bytes, identical: {}", a.stdout.len(), a.stdout == b.stdout),
    )
}

type Criterion = (&'static str, fn() -> Verdict);

fn main() -> ExitCode {
    let criteria: [Criterion; 9] = [
        ("MGF closed form equals numeric Laplace transform", mgf_identity),
        ("PDF normalization and mean", pdf_normalization),
        ("series versus quadrature", series_vs_quadrature),
        ("Rayleigh BPSK anchor", rayleigh_anchor),
        ("sampler fidelity", sampler_fidelity),
        ("analysis inside model-faithful 99% interval", analytic_vs_simulation),
        ("figure-shape reproduction", figure_shapes),
        ("physical-mode sanity", physical_sanity),
        ("sweep determinism", sweep_determinism),
    ];
    let mut failed = 0;
    for (i, (title, check)) in criteria.into_iter().enumerate() {
        let v = panic::catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|e| {
            let msg = e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            verdict(false, format!("panicked: {msg}"))
        });
        if !v.pass {
            failed += 1;
        }
        println!(
            "criterion {}: {} {title}: {}",
            i + 1,
            if v.pass { "PASS" } else { "FAIL" },
            v.detail
        );
    }
    println!("acceptance: {} of 9 criteria passed", 9 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
