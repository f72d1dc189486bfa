//! Average symbol error rate of a link and of the relay network.
//!
//! The conditional SER at SNR `g` is `a Q(sqrt(b g)) - c Q(sqrt(b g))^2` with
//! `(a, b, c)` set by the modulation. Averaging over the fading with the
//! MGF approach gives
//!
//! ```text
//! P = (a/pi) int_0^{pi/2} M(b / (2 sin^2 t)) dt - (c/pi) int_0^{pi/4} M(b / (2 sin^2 t)) dt
//! ```
//!
//! which [`link_ser_quadrature`] integrates directly. [`link_ser_series`]
//! evaluates the same two integrals through Humbert's `Phi_1` and the
//! confluent Lauricella `Phi_1^(3)`. With `A = m(1+k)`, `B = b gbar / (2A)`:
//!
//! ```text
//! I1 = (a/pi) e^{-mk} (sqrt(B)/2) X^{m+1/2} G(m+1/2) sqrt(pi) / G(m+1)
//!        * Phi_1(m+1/2, 1; m+1; X, m k X),                      X = 1/(1+B)
//! I2 = (c/pi) e^{-mk} (sqrt(B)/2) Z^{m+1/2} / (m+1/2)
//!        * Phi_1^(3)(m+1/2, 1, 1/2; m+3/2; Z, Y, m k Z),        Z = 1/(1+2B), Y = (1+B)/(1+2B)
//! ```

use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI};
use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kappa_mu::KappaMuParams;
use crate::quadrature::gauss_legendre;
use crate::specfun::{gaussian_q, humbert_phi1, lauricella_phi1_3, log_gamma, SeriesControl};

/// Modulation family. Sized families carry their constellation order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    Bpsk,
    Bfsk,
    Mpsk(u32),
    Mpam(u32),
    Qpsk,
    /// Coherently detected, differentially encoded PSK.
    Dpsk,
    Mqam(u32),
}

impl Scheme {
    /// Constellation size.
    pub fn order(&self) -> u32 {
        match *self {
            Scheme::Bpsk | Scheme::Bfsk | Scheme::Dpsk => 2,
            Scheme::Qpsk => 4,
            Scheme::Mpsk(m) | Scheme::Mpam(m) | Scheme::Mqam(m) => m,
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Scheme::Bpsk => write!(f, "bpsk"),
            Scheme::Bfsk => write!(f, "bfsk"),
            Scheme::Mpsk(m) => write!(f, "{m}-psk"),
            Scheme::Mpam(m) => write!(f, "{m}-pam"),
            Scheme::Qpsk => write!(f, "qpsk"),
            Scheme::Dpsk => write!(f, "dpsk"),
            Scheme::Mqam(m) => write!(f, "{m}-qam"),
        }
    }
}

/// The `(a, b, c)` triple of the conditional SER for one scheme.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModulationParams {
    pub scheme: Scheme,
    pub a: f64,
    pub b: f64,
    pub c: f64,
}

impl ModulationParams {
    pub fn new(scheme: Scheme) -> Result<Self> {
        let (a, b, c) = match scheme {
            Scheme::Bpsk => (1.0, 2.0, 0.0),
            Scheme::Bfsk => (1.0, 1.0, 0.0),
            Scheme::Qpsk => (2.0, 2.0, 1.0),
            Scheme::Dpsk => (2.0, 2.0, 2.0),
            Scheme::Mpsk(m) => {
                check_power_of_two(m)?;
                let s = (PI / m as f64).sin();
                (2.0, 2.0 * s * s, 0.0)
            }
            Scheme::Mpam(m) => {
                check_power_of_two(m)?;
                let mf = m as f64;
                (2.0 * (mf - 1.0) / mf, 6.0 / (mf * mf - 1.0), 0.0)
            }
            Scheme::Mqam(m) => {
                check_power_of_two(m)?;
                let root = (m as f64).sqrt();
                if m < 4 || root.fract() != 0.0 {
                    return Err(Error::Domain(format!("M-QAM needs a square order >= 4, got {m}")));
                }
                let r = (root - 1.0) / root;
                (4.0 * r, 3.0 / (m as f64 - 1.0), 4.0 * r * r)
            }
        };
        Ok(ModulationParams { scheme, a, b, c })
    }

    pub fn bpsk() -> Self {
        Self::new(Scheme::Bpsk).expect("table entry")
    }

    pub fn qpsk() -> Self {
        Self::new(Scheme::Qpsk).expect("table entry")
    }

    pub fn qam(m: u32) -> Result<Self> {
        Self::new(Scheme::Mqam(m))
    }

    /// Checks that `(a, b, c)` are the table values for `scheme`.
    pub fn validate(&self) -> Result<()> {
        let table = Self::new(self.scheme)?;
        if table.a != self.a || table.b != self.b || table.c != self.c {
            return Err(Error::Domain(format!(
                "modulation coefficients ({}, {}, {}) do not match {}",
                self.a, self.b, self.c, self.scheme
            )));
        }
        Ok(())
    }
}

fn check_power_of_two(m: u32) -> Result<()> {
    if m < 2 || !m.is_power_of_two() {
        return Err(Error::Domain(format!(
            "constellation size must be a power of two >= 2, got {m}"
        )));
    }
    Ok(())
}

impl FromStr for ModulationParams {
    type Err = Error;

    /// Accepts `bpsk`, `bfsk`, `qpsk`, `dpsk` and sized names such as `8psk`,
    /// `8-psk`, `4pam`, `16qam`, `16-QAM`.
    fn from_str(s: &str) -> Result<Self> {
        let name: String = s
            .trim()
            .to_ascii_lowercase()
            .chars()
            .filter(|c| *c != '-' && *c != '_')
            .collect();
        let scheme = match name.as_str() {
            "bpsk" => Scheme::Bpsk,
            "bfsk" => Scheme::Bfsk,
            "qpsk" => Scheme::Qpsk,
            "dpsk" => Scheme::Dpsk,
            _ => {
                let digits: String = name.chars().take_while(|c| c.is_ascii_digit()).collect();
                let family = &name[digits.len()..];
                let m: u32 = digits
                    .parse()
                    .map_err(|_| Error::Usage(format!("unknown modulation '{s}'")))?;
                match family {
                    "psk" => Scheme::Mpsk(m),
                    "pam" => Scheme::Mpam(m),
                    "qam" => Scheme::Mqam(m),
                    _ => return Err(Error::Usage(format!("unknown modulation '{s}'"))),
                }
            }
        };
        ModulationParams::new(scheme).map_err(|e| Error::Usage(format!("modulation '{s}': {e}")))
    }
}

/// One hop: per-element kappa-mu fading and the hop's antenna counts.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinkParams {
    /// Fading of the combined SNR; `antenna_product = tx_antennas * rx_antennas`.
    pub fading: KappaMuParams,
    pub tx_antennas: u32,
    pub rx_antennas: u32,
}

impl LinkParams {
    pub fn new(kappa: f64, mu: f64, mean_snr: f64, tx_antennas: u32, rx_antennas: u32) -> Result<Self> {
        let link = LinkParams {
            fading: KappaMuParams {
                kappa,
                mu,
                mean_snr,
                antenna_product: tx_antennas.saturating_mul(rx_antennas),
            },
            tx_antennas,
            rx_antennas,
        };
        link.validate()?;
        Ok(link)
    }

    /// Single-antenna link.
    pub fn siso(kappa: f64, mu: f64, mean_snr: f64) -> Result<Self> {
        Self::new(kappa, mu, mean_snr, 1, 1)
    }

    pub fn validate(&self) -> Result<()> {
        if self.tx_antennas < 1 || self.rx_antennas < 1 {
            return Err(Error::Domain("antenna counts must be >= 1".into()));
        }
        if self.fading.antenna_product != self.tx_antennas * self.rx_antennas {
            return Err(Error::Domain(format!(
                "antenna product {} does not equal {} x {}",
                self.fading.antenna_product, self.tx_antennas, self.rx_antennas
            )));
        }
        self.fading.validate()
    }

    pub fn with_mean_snr(mut self, mean_snr: f64) -> Self {
        self.fading.mean_snr = mean_snr;
        self
    }
}

/// Source, relay and destination with their three hops.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NetworkParams {
    pub sr: LinkParams,
    pub sd: LinkParams,
    pub rd: LinkParams,
    pub modulation: ModulationParams,
}

impl NetworkParams {
    pub fn validate(&self) -> Result<()> {
        self.sr.validate()?;
        self.sd.validate()?;
        self.rd.validate()?;
        self.modulation.validate()?;
        if self.sr.tx_antennas != self.sd.tx_antennas
            || self.sr.rx_antennas != self.rd.tx_antennas
            || self.sd.rx_antennas != self.rd.rx_antennas
        {
            return Err(Error::Domain(
                "antenna counts of the three hops are inconsistent".into(),
            ));
        }
        Ok(())
    }
}

/// Conditional SER at instantaneous SNR `gamma`.
pub fn conditional_ser(m: &ModulationParams, gamma: f64) -> f64 {
    let q = gaussian_q((m.b * gamma.max(0.0)).sqrt());
    (m.a * q - m.c * q * q).clamp(0.0, 1.0)
}

const QUAD_START_NODES: usize = 64;
const QUAD_MAX_NODES: usize = 1024;
const QUAD_REL_TOL: f64 = 1e-10;

/// `int_0^upper M(b / (2 sin^2 t)) dt` by Gauss-Legendre with node doubling.
fn mgf_angle_integral(fading: &KappaMuParams, b: f64, upper: f64) -> Result<f64> {
    let integrand = |t: f64| {
        let s = t.sin();
        if s == 0.0 {
            0.0
        } else {
            fading.ln_mgf_unchecked(b / (2.0 * s * s)).exp()
        }
    };
    // The integrand rises from 0 over an angular width of about sqrt(B);
    // give that layer its own panel when it is narrow.
    let big_b = b * fading.mean_snr / (2.0 * fading.shape() * (1.0 + fading.kappa));
    let split = 10.0 * big_b.sqrt();
    let panels: Vec<(f64, f64)> = if split < 0.5 * upper {
        vec![(0.0, split), (split, upper)]
    } else {
        vec![(0.0, upper)]
    };
    let eval = |n: usize| -> f64 {
        let rule = gauss_legendre(n);
        panels.iter().map(|&(lo, hi)| rule.integrate(integrand, lo, hi)).sum()
    };
    let mut n = QUAD_START_NODES;
    let mut prev = eval(n);
    loop {
        n *= 2;
        let cur = eval(n);
        if (cur - prev).abs() <= QUAD_REL_TOL * cur.abs() {
            return Ok(cur);
        }
        if n >= QUAD_MAX_NODES {
            return Err(Error::Quadrature {
                what: format!("MGF angle integral on [0, {upper}]"),
                estimate: cur,
                previous: prev,
                nodes: n,
            });
        }
        prev = cur;
    }
}

/// Average SER of one link by quadrature of the MGF integrals.
pub fn link_ser_quadrature(link: &LinkParams, m: &ModulationParams) -> Result<f64> {
    link.validate()?;
    let i1 = mgf_angle_integral(&link.fading, m.b, FRAC_PI_2)?;
    let i2 = if m.c == 0.0 {
        0.0
    } else {
        mgf_angle_integral(&link.fading, m.b, FRAC_PI_4)?
    };
    Ok((m.a / PI * i1 - m.c / PI * i2).clamp(0.0, 1.0))
}

/// Series evaluation of one link's SER with its diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesSer {
    /// `I1 - I2`, clipped to `[0, 1]`.
    pub value: f64,
    pub i1: f64,
    pub i2: f64,
    /// Both series stopped on tolerance before the term cap.
    pub converged: bool,
    /// Whether clipping changed the value.
    pub clipped: bool,
    pub terms_i1: Vec<usize>,
    pub terms_i2: Vec<usize>,
}

static CLIP_COUNT: AtomicU64 = AtomicU64::new(0);

/// Number of series results clipped into `[0, 1]` so far in this process.
pub fn series_clip_count() -> u64 {
    CLIP_COUNT.load(Ordering::Relaxed)
}

/// Average SER of one link through the hypergeometric series.
pub fn link_ser_series(link: &LinkParams, m: &ModulationParams, ctl: &SeriesControl) -> Result<SeriesSer> {
    link.validate()?;
    ctl.validate()?;
    let f = &link.fading;
    let shape = f.shape();
    let k = f.kappa;
    let big_a = shape * (1.0 + k);
    let big_b = m.b * f.mean_snr / (2.0 * big_a);
    let mk = shape * k;
    let half = shape + 0.5;
    // common factor e^{-mk} sqrt(B) / (2 pi)
    let ln_common = -mk + 0.5 * big_b.ln() - (2.0 * PI).ln();

    let x = 1.0 / (1.0 + big_b);
    let phi1 = humbert_phi1(half, 1.0, shape + 1.0, x, mk * x, ctl)?;
    let ln_pref1 = ln_common + half * x.ln() + log_gamma(half)? + 0.5 * PI.ln() - log_gamma(shape + 1.0)?;
    let i1 = m.a * phi1.sum.sign * (ln_pref1 + phi1.sum.ln_abs).exp();

    let (i2, conv2, terms_i2) = if m.c == 0.0 {
        (0.0, true, Vec::new())
    } else {
        let z = 1.0 / (1.0 + 2.0 * big_b);
        let y = (1.0 + big_b) / (1.0 + 2.0 * big_b);
        let phi = lauricella_phi1_3(half, 1.0, 0.5, shape + 1.5, z, y, mk * z, ctl)?;
        let ln_pref2 = ln_common + half * z.ln() - half.ln();
        (
            m.c * phi.sum.sign * (ln_pref2 + phi.sum.ln_abs).exp(),
            phi.converged,
            phi.terms,
        )
    };

    let raw = i1 - i2;
    let value = raw.clamp(0.0, 1.0);
    let clipped = value != raw;
    if clipped {
        CLIP_COUNT.fetch_add(1, Ordering::Relaxed);
    }
    Ok(SeriesSer {
        value,
        i1,
        i2,
        converged: phi1.converged && conv2,
        clipped,
        terms_i1: phi1.terms,
        terms_i2,
    })
}

/// How per-link SERs are computed when composing the network SER.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum LinkEvaluator {
    #[default]
    Quadrature,
    /// Series first; quadrature when the series does not converge.
    Series(SeriesControl),
}

pub fn link_ser(link: &LinkParams, m: &ModulationParams, eval: &LinkEvaluator) -> Result<f64> {
    match eval {
        LinkEvaluator::Quadrature => link_ser_quadrature(link, m),
        LinkEvaluator::Series(ctl) => {
            let s = link_ser_series(link, m, ctl)?;
            if s.converged {
                Ok(s.value)
            } else {
                link_ser_quadrature(link, m)
            }
        }
    }
}

/// Error probability of the cooperation mode: both the direct and the
/// relayed branch are in error, `P(sd) * P(rd)`.
pub fn coop_ser(net: &NetworkParams, eval: &LinkEvaluator) -> Result<f64> {
    Ok(link_ser(&net.sd, &net.modulation, eval)? * link_ser(&net.rd, &net.modulation, eval)?)
}

/// `P(sr) P(sd) + (1 - P(sr)) P_coop`.
pub fn compose_end_to_end(p_sr: f64, p_sd: f64, p_coop: f64) -> f64 {
    (p_sr * p_sd + (1.0 - p_sr) * p_coop).clamp(0.0, 1.0)
}

/// End-to-end SER of the selective decode-and-forward network.
pub fn end_to_end_ser(net: &NetworkParams, eval: &LinkEvaluator) -> Result<f64> {
    net.validate()?;
    let m = &net.modulation;
    let p_sr = link_ser(&net.sr, m, eval)?;
    let p_sd = link_ser(&net.sd, m, eval)?;
    let p_rd = link_ser(&net.rd, m, eval)?;
    Ok(compose_end_to_end(p_sr, p_sd, p_sd * p_rd))
}
