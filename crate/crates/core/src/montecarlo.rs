//! Monte Carlo estimates of the end-to-end SER.
//!
//! Two trial models are available:
//!
//! * [`SimMode::ModelFaithful`] draws the three hop SNRs and turns each into
//!   a Bernoulli error with the conditional SER. The destination errs when
//!   the relay erred and the direct link erred, or when the relay decoded and
//!   both the direct and the relayed branch erred. Its expectation is exactly
//!   the analytical end-to-end SER.
//! * [`SimMode::Physical`] transmits actual symbols: Alamouti (2 transmit
//!   antennas) or plain transmission, coherent combining at the relay,
//!   forwarding only on correct detection, and MRC of the direct and relayed
//!   statistics at the destination.
//!
//! Trials are split into contiguous partitions. Partition `p` owns the
//! streams keyed by `(seed, p)`, and trial `t` of that partition reads
//! stream `t`, so results do not depend on scheduling.

use num_complex::Complex64;
use rand::Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kappa_mu::KappaMuParams;
use crate::rng::StreamKey;
use crate::ser_engine::{conditional_ser, LinkParams, ModulationParams, NetworkParams, Scheme};

/// Two-sided 99% standard normal quantile.
pub const Z99: f64 = 2.5758293035489004;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SimMode {
    ModelFaithful,
    Physical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub net: NetworkParams,
    pub mode: SimMode,
    pub trials: u64,
    pub seed: u64,
    pub partitions: u32,
}

impl SimConfig {
    pub fn new(net: NetworkParams, mode: SimMode, trials: u64, seed: u64) -> Self {
        SimConfig {
            net,
            mode,
            trials,
            seed,
            partitions: 1,
        }
    }

    pub fn with_partitions(mut self, partitions: u32) -> Self {
        self.partitions = partitions;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials < 1 {
            return Err(Error::Contract("simulation needs at least one trial".into()));
        }
        if self.partitions < 1 || self.partitions as u64 > self.trials {
            return Err(Error::Contract(format!(
                "partitions must be in 1..={}, got {}",
                self.trials, self.partitions
            )));
        }
        self.net.validate()?;
        if self.mode == SimMode::Physical {
            for link in [&self.net.sr, &self.net.sd, &self.net.rd] {
                check_physical_link(link)?;
            }
            check_physical_scheme(&self.net.modulation)?;
        }
        Ok(())
    }

    /// Trials handled by `partition`.
    pub fn partition_trials(&self, partition: u32) -> u64 {
        let p = self.partitions as u64;
        let base = self.trials / p;
        base + u64::from((partition as u64) < self.trials % p)
    }

    /// Hash identifying (network, mode, seed); partitions of one run share it.
    pub fn config_hash(&self) -> u64 {
        let json = serde_json::to_string(&(&self.net, self.mode, self.seed)).expect("config serializes");
        fnv1a(json.as_bytes())
    }
}

fn fnv1a(bytes: &[u8]) -> u64 {
    bytes.iter().fold(0xcbf2_9ce4_8422_2325u64, |h, &b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

fn check_physical_link(link: &LinkParams) -> Result<()> {
    if !(1..=2).contains(&link.tx_antennas) || !(1..=2).contains(&link.rx_antennas) {
        return Err(Error::Contract(format!(
            "physical mode supports 1 or 2 antennas per node, got {}x{}",
            link.tx_antennas, link.rx_antennas
        )));
    }
    Ok(())
}

fn check_physical_scheme(m: &ModulationParams) -> Result<()> {
    match m.scheme {
        Scheme::Bpsk | Scheme::Qpsk | Scheme::Mqam(4) => Ok(()),
        other => Err(Error::Contract(format!(
            "physical mode supports bpsk, qpsk and 4-qam, not {other}"
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimResult {
    pub trials: u64,
    pub errors: u64,
    pub ser: f64,
    pub ci99_low: f64,
    pub ci99_high: f64,
    pub seed: u64,
    pub mode: SimMode,
    pub config_hash: u64,
}

impl SimResult {
    fn new(trials: u64, errors: u64, seed: u64, mode: SimMode, config_hash: u64) -> Self {
        let (lo, hi) = wilson_interval(errors, trials, Z99);
        SimResult {
            trials,
            errors,
            ser: errors as f64 / trials as f64,
            ci99_low: lo,
            ci99_high: hi,
            seed,
            mode,
            config_hash,
        }
    }

    pub fn contains(&self, p: f64) -> bool {
        self.ci99_low <= p && p <= self.ci99_high
    }
}

/// Wilson score interval for `errors` successes out of `trials`.
pub fn wilson_interval(errors: u64, trials: u64, z: f64) -> (f64, f64) {
    if trials == 0 {
        return (0.0, 1.0);
    }
    let n = trials as f64;
    let p = errors as f64 / n;
    let z2 = z * z;
    let denom = 1.0 + z2 / n;
    let center = (p + z2 / (2.0 * n)) / denom;
    let half = z / denom * (p * (1.0 - p) / n + z2 / (4.0 * n * n)).sqrt();
    ((center - half).max(0.0).min(p), (center + half).min(1.0).max(p))
}

/// Pools results of partitions of the same configuration.
pub fn merge(results: &[SimResult]) -> Result<SimResult> {
    let first = results
        .first()
        .ok_or_else(|| Error::Contract("nothing to merge".into()))?;
    if results
        .iter()
        .any(|r| r.mode != first.mode || r.config_hash != first.config_hash)
    {
        return Err(Error::Contract(
            "cannot merge results of different configurations".into(),
        ));
    }
    let trials = results.iter().map(|r| r.trials).sum();
    let errors = results.iter().map(|r| r.errors).sum();
    Ok(SimResult::new(
        trials,
        errors,
        first.seed,
        first.mode,
        first.config_hash,
    ))
}

/// Runs one partition on its own; merging all partitions reproduces [`run`].
pub fn run_partition(cfg: &SimConfig, partition: u32) -> Result<SimResult> {
    cfg.validate()?;
    if partition >= cfg.partitions {
        return Err(Error::Contract(format!("partition {partition} out of range")));
    }
    let key = StreamKey::new(cfg.seed, partition as u64);
    let n = cfg.partition_trials(partition);
    let net = &cfg.net;
    let errors = (0..n)
        .filter(|&t| {
            let mut rng = key.stream(t);
            match cfg.mode {
                SimMode::ModelFaithful => model_faithful_trial(net, &mut rng),
                SimMode::Physical => physical_trial(net, &mut rng),
            }
        })
        .count() as u64;
    Ok(SimResult::new(n, errors, cfg.seed, cfg.mode, cfg.config_hash()))
}

/// Runs all partitions in parallel and pools them.
pub fn run(cfg: &SimConfig) -> Result<SimResult> {
    cfg.validate()?;
    let parts = (0..cfg.partitions)
        .into_par_iter()
        .map(|p| run_partition(cfg, p))
        .collect::<Result<Vec<_>>>()?;
    merge(&parts)
}

pub fn run_model_faithful(cfg: &SimConfig) -> Result<SimResult> {
    if cfg.mode != SimMode::ModelFaithful {
        return Err(Error::Contract("configuration is not in model-faithful mode".into()));
    }
    run(cfg)
}

pub fn run_physical(cfg: &SimConfig) -> Result<SimResult> {
    if cfg.mode != SimMode::Physical {
        return Err(Error::Contract("configuration is not in physical mode".into()));
    }
    run(cfg)
}

fn model_faithful_trial<R: Rng>(net: &NetworkParams, rng: &mut R) -> bool {
    let m = &net.modulation;
    let g_sr = net.sr.fading.sample_snr(rng);
    let g_sd = net.sd.fading.sample_snr(rng);
    let g_rd = net.rd.fading.sample_snr(rng);
    let relay_err = rng.random::<f64>() < conditional_ser(m, g_sr);
    let direct_err = rng.random::<f64>() < conditional_ser(m, g_sd);
    let relayed_err = rng.random::<f64>() < conditional_ser(m, g_rd);
    if relay_err {
        direct_err
    } else {
        direct_err && relayed_err
    }
}

/// Symbols of the physical model.
///
/// Each quadrature component carries amplitude `sqrt(b/2)` so that, with
/// noise variance `1/gbar` per complex sample, the per-link conditional SER
/// is the modulation's `a Q(sqrt(b g)) - c Q(sqrt(b g))^2`.
#[derive(Debug, Clone, Copy)]
struct Constellation {
    amp: f64,
    complex: bool,
}

impl Constellation {
    fn new(m: &ModulationParams) -> Self {
        Constellation {
            amp: (m.b / 2.0).sqrt(),
            complex: !matches!(m.scheme, Scheme::Bpsk),
        }
    }

    fn draw<R: Rng>(&self, rng: &mut R) -> Complex64 {
        let re = if rng.random::<bool>() { self.amp } else { -self.amp };
        let im = if !self.complex {
            0.0
        } else if rng.random::<bool>() {
            self.amp
        } else {
            -self.amp
        };
        Complex64::new(re, im)
    }

    fn detect(&self, z: Complex64) -> Complex64 {
        let re = if z.re >= 0.0 { self.amp } else { -self.amp };
        let im = if !self.complex {
            0.0
        } else if z.im >= 0.0 {
            self.amp
        } else {
            -self.amp
        };
        Complex64::new(re, im)
    }
}

/// Combined statistic for the first symbol of a block: `z = gain * s + noise`.
#[derive(Debug, Clone, Copy)]
struct Branch {
    z: Complex64,
    gain: f64,
    noise_var: f64,
}

fn complex_noise<R: Rng>(rng: &mut R, var: f64) -> Complex64 {
    let sd = (0.5 * var).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re * sd, im * sd)
}

/// Transmits the block `(s1, s2)` over one hop and combines it for `s1`.
///
/// Transmit power is split evenly over the transmit antennas and the noise
/// variance is `rx / gbar`, so the combined SNR has mean `gbar`.
fn transmit<R: Rng>(link: &LinkParams, s1: Complex64, s2: Complex64, rng: &mut R) -> Branch {
    let element = KappaMuParams {
        mean_snr: 1.0,
        antenna_product: 1,
        ..link.fading
    };
    let nt = link.tx_antennas as usize;
    let nr = link.rx_antennas as usize;
    let n0 = nr as f64 / link.fading.mean_snr;
    let scale = 1.0 / (nt as f64).sqrt();
    let mut z = Complex64::new(0.0, 0.0);
    let mut norm2 = 0.0;
    for _ in 0..nr {
        let mut h = [Complex64::new(0.0, 0.0); 2];
        for hi in h.iter_mut().take(nt) {
            let (mag, phase) = element.sample_envelope(rng).expect("single element");
            *hi = Complex64::from_polar(mag, phase);
            norm2 += mag * mag;
        }
        if nt == 1 {
            let r = h[0] * s1 * scale + complex_noise(rng, n0);
            z += h[0].conj() * r;
        } else {
            let r1 = (h[0] * s1 + h[1] * s2) * scale + complex_noise(rng, n0);
            let r2 = (-h[0] * s2.conj() + h[1] * s1.conj()) * scale + complex_noise(rng, n0);
            z += h[0].conj() * r1 + h[1] * r2.conj();
        }
    }
    Branch {
        z,
        gain: norm2 * scale,
        noise_var: norm2 * n0,
    }
}

fn physical_trial<R: Rng>(net: &NetworkParams, rng: &mut R) -> bool {
    let cons = Constellation::new(&net.modulation);
    let s1 = cons.draw(rng);
    let s2 = cons.draw(rng);

    let at_relay = transmit(&net.sr, s1, s2, rng);
    let direct = transmit(&net.sd, s1, s2, rng);
    let relay_ok = cons.detect(at_relay.z) == s1;

    let mut branches = vec![direct];
    if relay_ok {
        // The partner symbol cancels in the combiner, so whatever the relay
        // decided for it does not affect s1.
        branches.push(transmit(&net.rd, s1, s2, rng));
    }
    let mut z = Complex64::new(0.0, 0.0);
    for b in &branches {
        if b.noise_var > 0.0 {
            z += b.z * (b.gain / b.noise_var);
        }
    }
    cons.detect(z) != s1
}

/// Physical simulation of a single hop with the relay removed.
pub fn simulate_link_physical(link: &LinkParams, m: &ModulationParams, trials: u64, seed: u64) -> Result<SimResult> {
    link.validate()?;
    check_physical_link(link)?;
    check_physical_scheme(m)?;
    if trials < 1 {
        return Err(Error::Contract("simulation needs at least one trial".into()));
    }
    let cons = Constellation::new(m);
    let hash = fnv1a(
        serde_json::to_string(&(link, m, seed))
            .expect("link serializes")
            .as_bytes(),
    );
    let key = StreamKey::new(seed, u64::MAX);
    let errors = (0..trials)
        .into_par_iter()
        .filter(|&t| {
            let mut rng = key.stream(t);
            let s1 = cons.draw(&mut rng);
            let s2 = cons.draw(&mut rng);
            let b = transmit(link, s1, s2, &mut rng);
            cons.detect(b.z) != s1
        })
        .count() as u64;
    Ok(SimResult::new(trials, errors, seed, SimMode::Physical, hash))
}
