//! The kappa-mu distribution of a hop's instantaneous post-combining SNR.
//!
//! With an orthogonal STBC over `N_t x N_r` antennas whose elements fade
//! i.i.d. kappa-mu, the combined SNR is again kappa-mu with the same `kappa`
//! and cluster parameter `m = mu * N_t * N_r`. Every formula here works with
//! that effective shape `m` only.
//!
//! Power density (mean `gbar`):
//!
//! ```text
//! f(g) = m (1+k)^((m+1)/2) / (k^((m-1)/2) e^(m k) gbar^((m+1)/2))
//!        * g^((m-1)/2) e^(-m (1+k) g / gbar) I_{m-1}(2 m sqrt(k (1+k) g / gbar))
//! ```
//!
//! Equivalently `g = gbar * G / (m (1+k))` with `G ~ Gamma(m + P, 1)` and
//! `P ~ Poisson(m k)`, which is how [`KappaMuParams::sample_snr`] draws.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::quadrature;
use crate::specfun::ln_bessel_i;

/// Below this `kappa` the density switches to its Gamma (Nakagami-m power) limit.
pub const KAPPA_ZERO_THRESHOLD: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct KappaMuParams {
    /// Ratio of dominant-component power to scattered power.
    pub kappa: f64,
    /// Cluster parameter of one antenna element.
    pub mu: f64,
    /// Mean SNR, linear scale.
    pub mean_snr: f64,
    /// Transmit x receive antenna count folded into the shape.
    pub antenna_product: u32,
}

impl KappaMuParams {
    pub fn new(kappa: f64, mu: f64, mean_snr: f64, antenna_product: u32) -> Result<Self> {
        let p = KappaMuParams {
            kappa,
            mu,
            mean_snr,
            antenna_product,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.kappa >= 0.0) || !self.kappa.is_finite() {
            return Err(Error::Domain(format!("kappa must be >= 0, got {}", self.kappa)));
        }
        if !(self.mu > 0.0) || !self.mu.is_finite() {
            return Err(Error::Domain(format!("mu must be > 0, got {}", self.mu)));
        }
        if !(self.mean_snr > 0.0) || !self.mean_snr.is_finite() {
            return Err(Error::Domain(format!("mean SNR must be > 0, got {}", self.mean_snr)));
        }
        if self.antenna_product < 1 {
            return Err(Error::Domain("antenna product must be >= 1".into()));
        }
        Ok(())
    }

    /// Effective shape `m = mu * antenna_product`.
    pub fn shape(&self) -> f64 {
        self.mu * self.antenna_product as f64
    }

    pub fn with_mean_snr(mut self, mean_snr: f64) -> Self {
        self.mean_snr = mean_snr;
        self
    }

    pub fn mean(&self) -> f64 {
        self.mean_snr
    }

    pub fn variance(&self) -> f64 {
        let m = self.shape();
        let k = self.kappa;
        self.mean_snr * self.mean_snr * (1.0 + 2.0 * k) / (m * (1.0 + k) * (1.0 + k))
    }

    /// Density of the SNR at `gamma > 0`.
    pub fn pdf(&self, gamma: f64) -> Result<f64> {
        self.validate()?;
        if !(gamma > 0.0) || !gamma.is_finite() {
            return Err(Error::Domain(format!("pdf requires gamma > 0, got {gamma}")));
        }
        Ok(self.ln_pdf_unchecked(gamma).exp())
    }

    pub(crate) fn ln_pdf_unchecked(&self, gamma: f64) -> f64 {
        let m = self.shape();
        let k = self.kappa;
        let gbar = self.mean_snr;
        if gamma <= 0.0 {
            return f64::NEG_INFINITY;
        }
        if k < KAPPA_ZERO_THRESHOLD {
            return m * m.ln() - libm::lgamma_r(m).0 + (m - 1.0) * gamma.ln() - m * gbar.ln() - m * gamma / gbar;
        }
        let arg = 2.0 * m * (k * (1.0 + k) * gamma / gbar).sqrt();
        m.ln() + 0.5 * (m + 1.0) * (1.0 + k).ln() - 0.5 * (m - 1.0) * k.ln() - m * k - 0.5 * (m + 1.0) * gbar.ln()
            + 0.5 * (m - 1.0) * gamma.ln()
            - m * (1.0 + k) * gamma / gbar
            + ln_bessel_i(m - 1.0, arg)
    }

    /// Closed-form moment generating function `E[exp(-s g)]`, `s >= 0`.
    pub fn mgf(&self, s: f64) -> Result<f64> {
        self.validate()?;
        if !(s >= 0.0) {
            return Err(Error::Domain(format!("mgf requires s >= 0, got {s}")));
        }
        Ok(self.ln_mgf_unchecked(s).exp())
    }

    /// `ln M(s) = -m ln(1 + s gbar / (m (1+k))) - m k s gbar / (m (1+k) + s gbar)`.
    pub(crate) fn ln_mgf_unchecked(&self, s: f64) -> f64 {
        if s.is_infinite() {
            return f64::NEG_INFINITY;
        }
        let m = self.shape();
        let k = self.kappa;
        let a = m * (1.0 + k);
        let sg = s * self.mean_snr;
        -m * (sg / a).ln_1p() - m * k * sg / (a + sg)
    }

    fn breakpoints_below(&self, gamma: f64) -> Vec<f64> {
        let mut pts = vec![0.0];
        for e in -6..=6 {
            let x = self.mean_snr * 2f64.powi(e);
            if x < gamma {
                pts.push(x);
            }
        }
        pts.push(gamma);
        pts
    }

    fn integrate_pdf(&self, a: f64, b: f64) -> Result<f64> {
        let r = quadrature::integrate(|g| self.ln_pdf_unchecked(g).exp(), a, b, 1e-16, 1e-12)?;
        Ok(r.value)
    }

    /// CDF by adaptive quadrature of the density on `[0, gamma]`.
    pub fn cdf_numeric(&self, gamma: f64) -> Result<f64> {
        self.validate()?;
        if !(gamma >= 0.0) {
            return Err(Error::Domain(format!("cdf requires gamma >= 0, got {gamma}")));
        }
        if gamma == 0.0 {
            return Ok(0.0);
        }
        let pts = self.breakpoints_below(gamma.min(f64::MAX));
        let mut total = 0.0;
        for w in pts.windows(2) {
            total += self.integrate_pdf(w[0], w[1])?;
        }
        Ok(total.clamp(0.0, 1.0))
    }

    /// CDF at each point of an ascending slice, accumulated panel by panel.
    pub fn cdf_at_sorted(&self, xs: &[f64]) -> Result<Vec<f64>> {
        if xs.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::Contract("cdf_at_sorted needs ascending input".into()));
        }
        let mut out = Vec::with_capacity(xs.len());
        let Some(&first) = xs.first() else {
            return Ok(out);
        };
        let mut acc = self.cdf_numeric(first)?;
        out.push(acc);
        for w in xs.windows(2) {
            if w[1] > w[0] {
                acc += self.integrate_pdf(w[0], w[1])?;
            }
            out.push(acc.min(1.0));
        }
        Ok(out)
    }

    /// One draw of the SNR via the Poisson-Gamma mixture.
    pub fn sample_snr<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        let m = self.shape();
        let k = if self.kappa < KAPPA_ZERO_THRESHOLD {
            0.0
        } else {
            self.kappa
        };
        let lambda = m * k;
        let p = if lambda > 0.0 {
            Poisson::new(lambda).expect("positive Poisson mean").sample(rng)
        } else {
            0.0
        };
        let g: f64 = Gamma::new(m + p, 1.0).expect("positive gamma shape").sample(rng);
        self.mean_snr * g / (m * (1.0 + k))
    }

    /// One per-element channel coefficient as (magnitude, phase).
    ///
    /// The magnitude has unit mean power; `mean_snr` is ignored. The phase is
    /// uniform on `[0, 2 pi)` and independent of the magnitude.
    pub fn sample_envelope<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<(f64, f64)> {
        if self.antenna_product != 1 {
            return Err(Error::Contract(format!(
                "sample_envelope draws single elements; antenna_product = {}",
                self.antenna_product
            )));
        }
        let unit = self.with_mean_snr(1.0);
        let power = unit.sample_snr(rng);
        let phase = rng.random::<f64>() * 2.0 * PI;
        Ok((power.sqrt(), phase))
    }
}
