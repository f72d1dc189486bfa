//! SNR sweeps over a network, figure presets and CSV output.

use std::fmt;
use std::io::{self, Write};
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::montecarlo::{self, SimConfig, SimMode};
use crate::rng::mix_seed;
use crate::ser_engine::{
    compose_end_to_end, end_to_end_ser, link_ser_series, LinkEvaluator, LinkParams, ModulationParams, NetworkParams,
    Scheme,
};
use crate::specfun::SeriesControl;

/// Exact CSV header written by [`write_csv`].
pub const CSV_HEADER: &str = "snr_db,evaluator,ser,ci99_low,ci99_high,trials,converged";

/// Default per-index term budget of the series evaluator in sweeps.
pub const DEFAULT_SERIES_TERMS: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Evaluator {
    Series,
    Quadrature,
    McModel,
    McPhysical,
}

impl Evaluator {
    pub fn name(&self) -> &'static str {
        match self {
            Evaluator::Series => "series",
            Evaluator::Quadrature => "quadrature",
            Evaluator::McModel => "mc_model",
            Evaluator::McPhysical => "mc_physical",
        }
    }
}

impl fmt::Display for Evaluator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Evaluator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim() {
            "series" => Ok(Evaluator::Series),
            "quadrature" => Ok(Evaluator::Quadrature),
            "mc_model" => Ok(Evaluator::McModel),
            "mc_physical" => Ok(Evaluator::McPhysical),
            other => Err(Error::Usage(format!(
                "unknown evaluator '{other}' (expected series, quadrature, mc_model, mc_physical)"
            ))),
        }
    }
}

/// Fixed mean SNRs (dB) that replace the swept value on individual hops.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct LinkSnrOverrides {
    pub sr_db: Option<f64>,
    pub sd_db: Option<f64>,
    pub rd_db: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    /// Short curve name, used for file names of figure presets.
    pub label: String,
    pub snr_db_start: f64,
    pub snr_db_stop: f64,
    pub snr_db_step: f64,
    /// Template network; the mean SNR of every hop is replaced per point.
    pub net: NetworkParams,
    pub overrides: LinkSnrOverrides,
    pub evaluators: Vec<Evaluator>,
    pub trials: u64,
    pub seed: u64,
    pub partitions: u32,
    pub series_terms: usize,
}

impl SweepSpec {
    pub fn new(net: NetworkParams, snr_db_start: f64, snr_db_stop: f64, snr_db_step: f64) -> Self {
        SweepSpec {
            label: String::new(),
            snr_db_start,
            snr_db_stop,
            snr_db_step,
            net,
            overrides: LinkSnrOverrides::default(),
            evaluators: vec![Evaluator::Quadrature],
            trials: 100_000,
            seed: 1,
            partitions: 8,
            series_terms: DEFAULT_SERIES_TERMS,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.snr_db_start, self.snr_db_stop, self.snr_db_step]
            .iter()
            .all(|v| v.is_finite());
        if !finite || self.snr_db_start > self.snr_db_stop {
            return Err(Error::Usage("SNR range needs finite start <= stop".into()));
        }
        if !(self.snr_db_step > 0.0) {
            return Err(Error::Usage("SNR step must be positive".into()));
        }
        if self.evaluators.is_empty() {
            return Err(Error::Usage("at least one evaluator is required".into()));
        }
        let uses_mc = self
            .evaluators
            .iter()
            .any(|e| matches!(e, Evaluator::McModel | Evaluator::McPhysical));
        if uses_mc && (self.trials < 1 || self.partitions < 1 || self.partitions as u64 > self.trials) {
            return Err(Error::Usage(
                "Monte Carlo evaluators need trials >= partitions >= 1".into(),
            ));
        }
        SeriesControl::with_terms(self.series_terms).map_err(|e| Error::Usage(e.to_string()))?;
        self.net.validate().map_err(|e| Error::Usage(e.to_string()))
    }

    /// SNR grid in dB.
    pub fn snr_points(&self) -> Vec<f64> {
        let n = ((self.snr_db_stop - self.snr_db_start) / self.snr_db_step + 1e-9).floor() as usize + 1;
        (0..n)
            .map(|i| self.snr_db_start + i as f64 * self.snr_db_step)
            .collect()
    }

    /// The network at one sweep point.
    pub fn network_at(&self, snr_db: f64) -> NetworkParams {
        let lin = |db: f64| 10f64.powf(db / 10.0);
        let o = &self.overrides;
        NetworkParams {
            sr: self.net.sr.with_mean_snr(lin(o.sr_db.unwrap_or(snr_db))),
            sd: self.net.sd.with_mean_snr(lin(o.sd_db.unwrap_or(snr_db))),
            rd: self.net.rd.with_mean_snr(lin(o.rd_db.unwrap_or(snr_db))),
            modulation: self.net.modulation,
        }
    }
}

/// One evaluator's value at one SNR point.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub snr_db: f64,
    pub evaluator: Evaluator,
    /// `None` when the evaluator failed at this point.
    pub ser: Option<f64>,
    pub ci99_low: Option<f64>,
    pub ci99_high: Option<f64>,
    pub trials: Option<u64>,
    /// Series evaluator only.
    pub converged: Option<bool>,
    pub error: Option<String>,
}

impl SweepRow {
    fn analytic(snr_db: f64, evaluator: Evaluator, ser: f64, converged: Option<bool>) -> Self {
        SweepRow {
            snr_db,
            evaluator,
            ser: Some(ser),
            ci99_low: None,
            ci99_high: None,
            trials: None,
            converged,
            error: None,
        }
    }

    fn failed(snr_db: f64, evaluator: Evaluator, err: &Error) -> Self {
        SweepRow {
            snr_db,
            evaluator,
            ser: None,
            ci99_low: None,
            ci99_high: None,
            trials: None,
            converged: None,
            error: Some(err.to_string()),
        }
    }
}

/// End-to-end SER from the raw series on every hop, with its convergence flag.
pub fn series_end_to_end(net: &NetworkParams, ctl: &SeriesControl) -> Result<(f64, bool)> {
    net.validate()?;
    let m = &net.modulation;
    let sr = link_ser_series(&net.sr, m, ctl)?;
    let sd = link_ser_series(&net.sd, m, ctl)?;
    let rd = link_ser_series(&net.rd, m, ctl)?;
    let value = compose_end_to_end(sr.value, sd.value, sd.value * rd.value);
    Ok((value, sr.converged && sd.converged && rd.converged))
}

fn evaluate(spec: &SweepSpec, point: usize, snr_db: f64, ev: Evaluator) -> SweepRow {
    let net = spec.network_at(snr_db);
    let outcome = match ev {
        Evaluator::Quadrature => {
            end_to_end_ser(&net, &LinkEvaluator::Quadrature).map(|v| SweepRow::analytic(snr_db, ev, v, None))
        }
        Evaluator::Series => SeriesControl::with_terms(spec.series_terms)
            .and_then(|ctl| series_end_to_end(&net, &ctl))
            .map(|(v, conv)| SweepRow::analytic(snr_db, ev, v, Some(conv))),
        Evaluator::McModel | Evaluator::McPhysical => {
            let mode = if ev == Evaluator::McModel {
                SimMode::ModelFaithful
            } else {
                SimMode::Physical
            };
            let cfg = SimConfig::new(net, mode, spec.trials, mix_seed(spec.seed, point as u64))
                .with_partitions(spec.partitions);
            montecarlo::run(&cfg).map(|r| SweepRow {
                snr_db,
                evaluator: ev,
                ser: Some(r.ser),
                ci99_low: Some(r.ci99_low),
                ci99_high: Some(r.ci99_high),
                trials: Some(r.trials),
                converged: None,
                error: None,
            })
        }
    };
    outcome.unwrap_or_else(|e| SweepRow::failed(snr_db, ev, &e))
}

/// Evaluates every requested evaluator at every SNR point.
///
/// Rows come out ordered by SNR, then by the order of `spec.evaluators`.
/// A failing evaluator yields a row with `ser = None` and the sweep goes on.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let jobs: Vec<(usize, f64, Evaluator)> = spec
        .snr_points()
        .into_iter()
        .enumerate()
        .flat_map(|(i, snr)| spec.evaluators.iter().map(move |&e| (i, snr, e)))
        .collect();
    Ok(jobs
        .into_par_iter()
        .map(|(i, snr, e)| evaluate(spec, i, snr, e))
        .collect())
}

fn opt_f64(v: Option<f64>) -> String {
    v.map(|x| format!("{x:e}")).unwrap_or_default()
}

pub fn write_csv<W: Write>(rows: &[SweepRow], mut out: W) -> io::Result<()> {
    writeln!(out, "{CSV_HEADER}")?;
    for r in rows {
        let ser = match r.ser {
            Some(v) => format!("{v:e}"),
            None => "ERR".to_string(),
        };
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            r.snr_db,
            r.evaluator,
            ser,
            opt_f64(r.ci99_low),
            opt_f64(r.ci99_high),
            r.trials.map(|t| t.to_string()).unwrap_or_default(),
            r.converged.map(|c| if c { "1" } else { "0" }).unwrap_or(""),
        )?;
    }
    Ok(())
}

pub fn to_csv_string(rows: &[SweepRow]) -> String {
    let mut buf = Vec::new();
    write_csv(rows, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("csv is utf-8")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FigureName {
    Fig1,
    Fig2,
    Fig3,
    Fig4,
    Fig5,
}

impl FigureName {
    pub const ALL: [FigureName; 5] = [
        FigureName::Fig1,
        FigureName::Fig2,
        FigureName::Fig3,
        FigureName::Fig4,
        FigureName::Fig5,
    ];
}

impl fmt::Display for FigureName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let n = FigureName::ALL.iter().position(|x| x == self).expect("listed") + 1;
        write!(f, "fig{n}")
    }
}

impl FromStr for FigureName {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        FigureName::ALL
            .into_iter()
            .find(|f| f.to_string() == s.trim().to_ascii_lowercase())
            .ok_or_else(|| Error::Usage(format!("unknown figure '{s}' (expected fig1..fig5)")))
    }
}

/// Value sets and sweep settings used to build the figure presets.
///
/// The curves are reconstructions: the parameter values are declared here
/// rather than taken from any published plot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PresetDefaults {
    pub kappas: Vec<f64>,
    pub mus: Vec<f64>,
    /// mu held fixed while kappa varies (fig1, fig2).
    pub fixed_mu: f64,
    /// kappa held fixed while mu varies (fig3).
    pub fixed_kappa: f64,
    /// (mu_SR, mu_RD) pairs of fig4.
    pub mu_pairs: Vec<(f64, f64)>,
    /// (kappa_RD, mu_RD) pairs of fig5.
    pub rd_pairs: Vec<(f64, f64)>,
    pub snr_db_start: f64,
    pub snr_db_stop: f64,
    pub snr_db_step: f64,
    pub evaluators: Vec<Evaluator>,
    pub trials: u64,
    pub seed: u64,
    pub partitions: u32,
    pub series_terms: usize,
}

impl Default for PresetDefaults {
    fn default() -> Self {
        let pairs = vec![(1.0, 1.0), (2.0, 1.0), (1.0, 2.0), (2.0, 2.0)];
        PresetDefaults {
            kappas: vec![0.0, 1.0, 2.0, 4.0],
            mus: vec![1.0, 2.0, 3.0],
            fixed_mu: 1.0,
            fixed_kappa: 1.0,
            mu_pairs: pairs.clone(),
            rd_pairs: pairs,
            snr_db_start: 0.0,
            snr_db_stop: 30.0,
            snr_db_step: 2.5,
            evaluators: vec![Evaluator::Quadrature, Evaluator::Series, Evaluator::McModel],
            trials: 100_000,
            seed: 1,
            partitions: 8,
            series_terms: DEFAULT_SERIES_TERMS,
        }
    }
}

fn uniform_net(kappa: f64, mu: f64, modulation: ModulationParams) -> Result<NetworkParams> {
    let l = LinkParams::siso(kappa, mu, 1.0)?;
    Ok(NetworkParams {
        sr: l,
        sd: l,
        rd: l,
        modulation,
    })
}

/// The sweep specs making up one figure, one per curve.
pub fn figure_preset(name: FigureName, d: &PresetDefaults) -> Result<Vec<SweepSpec>> {
    let qpsk = ModulationParams::new(Scheme::Qpsk)?;
    let qam4 = ModulationParams::new(Scheme::Mqam(4))?;
    let mut curves: Vec<(String, NetworkParams)> = Vec::new();
    match name {
        FigureName::Fig1 | FigureName::Fig2 => {
            let m = if name == FigureName::Fig1 { qpsk } else { qam4 };
            for &k in &d.kappas {
                curves.push((format!("kappa{k}_mu{}", d.fixed_mu), uniform_net(k, d.fixed_mu, m)?));
            }
        }
        FigureName::Fig3 => {
            for &mu in &d.mus {
                curves.push((
                    format!("kappa{}_mu{mu}", d.fixed_kappa),
                    uniform_net(d.fixed_kappa, mu, qpsk)?,
                ));
            }
        }
        FigureName::Fig4 => {
            for &(mu_sr, mu_rd) in &d.mu_pairs {
                let net = NetworkParams {
                    sr: LinkParams::siso(1.0, mu_sr, 1.0)?,
                    sd: LinkParams::siso(1.0, 1.0, 1.0)?,
                    rd: LinkParams::siso(1.0, mu_rd, 1.0)?,
                    modulation: qam4,
                };
                curves.push((format!("musr{mu_sr}_murd{mu_rd}"), net));
            }
        }
        FigureName::Fig5 => {
            for &(k_rd, mu_rd) in &d.rd_pairs {
                let net = NetworkParams {
                    rd: LinkParams::siso(k_rd, mu_rd, 1.0)?,
                    ..uniform_net(1.0, 1.0, qam4)?
                };
                curves.push((format!("kappard{k_rd}_murd{mu_rd}"), net));
            }
        }
    }
    Ok(curves
        .into_iter()
        .map(|(label, net)| SweepSpec {
            label,
            evaluators: d.evaluators.clone(),
            trials: d.trials,
            seed: d.seed,
            partitions: d.partitions,
            series_terms: d.series_terms,
            ..SweepSpec::new(net, d.snr_db_start, d.snr_db_stop, d.snr_db_step)
        })
        .collect())
}
