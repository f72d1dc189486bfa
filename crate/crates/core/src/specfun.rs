//! Scalar special functions used by the density, MGF and series forms.
//!
//! Everything that can overflow (Pochhammer symbols, Bessel functions of
//! large order, hypergeometric terms) is carried as a sign plus a natural
//! log magnitude, see [`SignedLog`].
//!
//! The Pochhammer symbol here is the *rising* factorial
//! `(x)_n = x (x+1) ... (x+n-1) = Gamma(x+n) / Gamma(x)`. Some derivations of
//! the SER series describe `(x)_n` as a falling factorial; with that reading
//! the `Phi_1` series below diverge, and only the rising form reproduces the
//! Euler-type integral definitions term by term.

use std::f64::consts::{PI, SQRT_2};
use std::ops::Mul;
use std::sync::OnceLock;

use crate::error::{Error, Result};

/// A real number stored as `sign * exp(ln_abs)`.
///
/// `sign` is one of `-1.0`, `0.0` or `1.0`; a zero value has
/// `ln_abs == -inf`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignedLog {
    pub sign: f64,
    pub ln_abs: f64,
}

impl SignedLog {
    pub const ZERO: SignedLog = SignedLog {
        sign: 0.0,
        ln_abs: f64::NEG_INFINITY,
    };
    pub const ONE: SignedLog = SignedLog { sign: 1.0, ln_abs: 0.0 };

    pub fn from_value(v: f64) -> Self {
        if v == 0.0 {
            Self::ZERO
        } else {
            SignedLog {
                sign: v.signum(),
                ln_abs: v.abs().ln(),
            }
        }
    }

    pub fn value(&self) -> f64 {
        if self.sign == 0.0 {
            0.0
        } else {
            self.sign * self.ln_abs.exp()
        }
    }
}

impl Mul for SignedLog {
    type Output = SignedLog;

    fn mul(self, other: SignedLog) -> SignedLog {
        if self.sign == 0.0 || other.sign == 0.0 {
            Self::ZERO
        } else {
            SignedLog {
                sign: self.sign * other.sign,
                ln_abs: self.ln_abs + other.ln_abs,
            }
        }
    }
}

/// Running sum of signed log-magnitude terms, shifted by the largest
/// magnitude seen so far so that nothing overflows.
#[derive(Debug, Clone, Copy)]
pub(crate) struct LogSum {
    shift: f64,
    acc: f64,
}

impl LogSum {
    pub(crate) fn new() -> Self {
        LogSum {
            shift: f64::NEG_INFINITY,
            acc: 0.0,
        }
    }

    pub(crate) fn add(&mut self, term: SignedLog) {
        if term.sign == 0.0 || term.ln_abs == f64::NEG_INFINITY {
            return;
        }
        if self.shift == f64::NEG_INFINITY {
            self.shift = term.ln_abs;
            self.acc = term.sign;
        } else if term.ln_abs > self.shift {
            self.acc = self.acc * (self.shift - term.ln_abs).exp() + term.sign;
            self.shift = term.ln_abs;
        } else {
            self.acc += term.sign * (term.ln_abs - self.shift).exp();
        }
    }

    pub(crate) fn merge(&mut self, other: &LogSum) {
        self.add(other.get());
    }

    pub(crate) fn get(&self) -> SignedLog {
        if self.acc == 0.0 || self.shift == f64::NEG_INFINITY {
            SignedLog::ZERO
        } else {
            SignedLog {
                sign: self.acc.signum(),
                ln_abs: self.acc.abs().ln() + self.shift,
            }
        }
    }
}

/// Truncation budget for the multi-index hypergeometric series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesControl {
    /// Hard cap on the number of terms along each summation index.
    pub max_terms_per_index: usize,
    /// An index stops once its slices fall below `rel_tol` times the partial sum.
    pub rel_tol: f64,
    /// Terms below this magnitude are treated as underflowed.
    pub term_floor: f64,
}

impl Default for SeriesControl {
    fn default() -> Self {
        SeriesControl {
            max_terms_per_index: 60,
            rel_tol: 1e-12,
            term_floor: (-745.0f64).exp(),
        }
    }
}

impl SeriesControl {
    pub fn new(max_terms_per_index: usize, rel_tol: f64) -> Result<Self> {
        let ctl = SeriesControl {
            max_terms_per_index,
            rel_tol,
            ..Default::default()
        };
        ctl.validate()?;
        Ok(ctl)
    }

    pub fn with_terms(max_terms_per_index: usize) -> Result<Self> {
        Self::new(max_terms_per_index, SeriesControl::default().rel_tol)
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_terms_per_index < 1 {
            return Err(Error::Domain("max_terms_per_index must be >= 1".into()));
        }
        if !(self.rel_tol > 0.0) {
            return Err(Error::Domain("rel_tol must be > 0".into()));
        }
        if !(self.term_floor > 0.0) {
            return Err(Error::Domain("term_floor must be > 0".into()));
        }
        Ok(())
    }
}

/// Result of a truncated multi-index series.
#[derive(Debug, Clone, PartialEq)]
pub struct SeriesValue {
    pub sum: SignedLog,
    /// Whether every index stopped on the tolerance test before its cap.
    pub converged: bool,
    /// Number of terms visited along each index (outermost first).
    pub terms: Vec<usize>,
}

impl SeriesValue {
    pub fn value(&self) -> f64 {
        self.sum.value()
    }
}

/// `ln Gamma(x)` for `x > 0`.
pub fn log_gamma(x: f64) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("log_gamma requires x > 0, got {x}")));
    }
    Ok(libm::lgamma_r(x).0)
}

/// Rising factorial `(x)_n` as sign and log magnitude.
pub fn rising_factorial(x: f64, n: usize) -> SignedLog {
    if n == 0 {
        return SignedLog::ONE;
    }
    if x > 0.0 {
        let ln = libm::lgamma_r(x + n as f64).0 - libm::lgamma_r(x).0;
        return SignedLog { sign: 1.0, ln_abs: ln };
    }
    // Direct product: x may sit on or cross the poles of Gamma.
    let mut out = SignedLog::ONE;
    for k in 0..n {
        out = out.mul(SignedLog::from_value(x + k as f64));
        if out.sign == 0.0 {
            break;
        }
    }
    out
}

/// Natural log of the modified Bessel function `I_nu(x)`.
///
/// Uses the ascending series for `x < 2 (nu + 10)` and the uniform (Debye)
/// asymptotic expansion beyond.
pub fn bessel_i_log(nu: f64, x: f64) -> Result<f64> {
    if nu < -0.5 || !nu.is_finite() {
        return Err(Error::Domain(format!("bessel_i_log requires nu >= -0.5, got {nu}")));
    }
    if !(x >= 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("bessel_i_log requires x >= 0, got {x}")));
    }
    Ok(ln_bessel_i(nu, x))
}

/// [`bessel_i_log`] without argument checks; valid for `nu > -1`, `x >= 0`.
pub(crate) fn ln_bessel_i(nu: f64, x: f64) -> f64 {
    if x == 0.0 {
        return if nu == 0.0 {
            0.0
        } else if nu > 0.0 {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        };
    }
    if x < 2.0 * (nu + 10.0) {
        ln_bessel_i_series(nu, x)
    } else {
        ln_bessel_i_debye(nu.abs(), x)
    }
}

fn ln_bessel_i_series(nu: f64, x: f64) -> f64 {
    let q = 0.25 * x * x;
    let mut term = 1.0f64;
    let mut sum = 1.0f64;
    let mut k = 0.0f64;
    loop {
        term *= q / ((k + 1.0) * (nu + k + 1.0));
        sum += term;
        k += 1.0;
        if term < 1e-17 * sum && k > 0.5 * x {
            break;
        }
        if k > 10_000.0 {
            break;
        }
    }
    nu * (0.5 * x).ln() - libm::lgamma_r(nu + 1.0).0 + sum.ln()
}

const DEBYE_TERMS: usize = 20;

/// Coefficients of the Debye polynomials `u_k(t)`, index = power of `t`.
fn debye_polynomials() -> &'static Vec<Vec<f64>> {
    static POLYS: OnceLock<Vec<Vec<f64>>> = OnceLock::new();
    POLYS.get_or_init(|| {
        // u_{k+1}(t) = t^2 (1 - t^2) u_k'(t) / 2 + (1/8) int_0^t (1 - 5 s^2) u_k(s) ds
        let mut polys: Vec<Vec<f64>> = vec![vec![1.0]];
        for k in 0..DEBYE_TERMS {
            let u = &polys[k];
            let mut next = vec![0.0; u.len() + 3];
            for (j, &c) in u.iter().enumerate() {
                if j > 0 {
                    let d = c * j as f64;
                    // derivative term d t^(j-1) times t^2 (1 - t^2) / 2
                    next[j + 1] += 0.5 * d;
                    next[j + 3] -= 0.5 * d;
                }
                next[j + 1] += c / (8.0 * (j as f64 + 1.0));
                next[j + 3] -= 5.0 * c / (8.0 * (j as f64 + 3.0));
            }
            while next.last() == Some(&0.0) {
                next.pop();
            }
            polys.push(next);
        }
        polys
    })
}

fn ln_bessel_i_debye(nu: f64, x: f64) -> f64 {
    let rho2 = nu * nu + x * x;
    let rho = rho2.sqrt();
    let p = nu / rho;
    let r = 1.0 / rho;
    let polys = debye_polynomials();
    let mut sum = 1.0;
    let mut rk = 1.0;
    let mut prev = f64::INFINITY;
    for (k, poly) in polys.iter().enumerate().skip(1) {
        rk *= r;
        // u_k(p) / nu^k = r^k * sum_j c_j p^(j - k); c_j vanishes for j < k.
        let mut inner = 0.0;
        let mut pw = 1.0;
        for &c in poly.iter().skip(k) {
            inner += c * pw;
            pw *= p;
        }
        let term = rk * inner;
        if term.abs() > prev {
            break;
        }
        sum += term;
        prev = term.abs();
        if term.abs() < 1e-17 * sum.abs() {
            break;
        }
    }
    let eta = if nu == 0.0 { x } else { rho + nu * (x / (nu + rho)).ln() };
    eta - 0.5 * (2.0 * PI).ln() - 0.25 * rho2.ln() + sum.ln()
}

/// Gaussian tail probability `Q(x) = erfc(x / sqrt 2) / 2`.
pub fn gaussian_q(x: f64) -> f64 {
    0.5 * libm::erfc(x / SQRT_2)
}

/// Table of `ln |(v)_k|` and signs for `k = 0..len`.
struct PochTable {
    ln: Vec<f64>,
    sign: Vec<f64>,
}

impl PochTable {
    fn new(v: f64, len: usize) -> Self {
        let mut ln = Vec::with_capacity(len);
        let mut sign = Vec::with_capacity(len);
        let mut cur = SignedLog::ONE;
        for k in 0..len {
            ln.push(cur.ln_abs);
            sign.push(cur.sign);
            cur = cur.mul(SignedLog::from_value(v + k as f64));
        }
        PochTable { ln, sign }
    }

    fn get(&self, k: usize) -> SignedLog {
        SignedLog {
            sign: self.sign[k],
            ln_abs: self.ln[k],
        }
    }
}

/// `k * ln|v|` with sign, taking care of `v == 0`.
struct PowerTable {
    ln_abs: f64,
    negative: bool,
    zero: bool,
}

impl PowerTable {
    fn new(v: f64) -> Self {
        PowerTable {
            ln_abs: v.abs().ln(),
            negative: v < 0.0,
            zero: v == 0.0,
        }
    }

    fn get(&self, k: usize) -> SignedLog {
        if k == 0 {
            SignedLog::ONE
        } else if self.zero {
            SignedLog::ZERO
        } else {
            SignedLog {
                sign: if self.negative && k % 2 == 1 { -1.0 } else { 1.0 },
                ln_abs: k as f64 * self.ln_abs,
            }
        }
    }
}

fn ln_factorials(len: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(len);
    let mut acc = 0.0;
    for k in 0..len {
        out.push(acc);
        acc += ((k + 1) as f64).ln();
    }
    out
}

fn check_lower_parameter(c: f64) -> Result<()> {
    if !c.is_finite() || (c <= 0.0 && c.fract() == 0.0) {
        return Err(Error::Domain(format!(
            "lower parameter c = {c} must not be a non-positive integer"
        )));
    }
    Ok(())
}

/// Sum a `dims`-index series whose terms are produced by `term`.
///
/// Each index is summed with the same policy: it stops after three
/// consecutive slices that are non-increasing and below `rel_tol` times that
/// index's partial sum, or at the hard cap.
fn nested_series<F>(dims: usize, ctl: &SeriesControl, term: F) -> SeriesValue
where
    F: Fn(&[usize]) -> SignedLog,
{
    struct State<'a, F> {
        dims: usize,
        cap: usize,
        ln_tol: f64,
        ln_floor: f64,
        term: &'a F,
        idx: Vec<usize>,
        reached: Vec<usize>,
        capped: bool,
    }

    fn level<F: Fn(&[usize]) -> SignedLog>(st: &mut State<'_, F>, depth: usize) -> (LogSum, f64) {
        let mut acc = LogSum::new();
        let mut slice_max_all = f64::NEG_INFINITY;
        let mut prev = f64::NEG_INFINITY;
        let mut below = 0usize;
        let mut stopped = false;
        for i in 0..st.cap {
            st.idx[depth] = i;
            let (slice, slice_max) = if depth + 1 == st.dims {
                let t = (st.term)(&st.idx);
                let mut s = LogSum::new();
                if t.ln_abs >= st.ln_floor {
                    s.add(t);
                }
                (s, t.ln_abs)
            } else {
                level(st, depth + 1)
            };
            acc.merge(&slice);
            st.reached[depth] = st.reached[depth].max(i + 1);
            slice_max_all = slice_max_all.max(slice_max);

            let threshold = st.ln_tol + acc.get().ln_abs;
            let negligible = slice_max < threshold || slice_max < st.ln_floor;
            let receding = slice_max == f64::NEG_INFINITY || slice_max <= prev;
            if negligible && receding {
                below += 1;
            } else {
                below = 0;
            }
            prev = slice_max;
            if below >= 3 {
                stopped = true;
                break;
            }
        }
        if !stopped {
            st.capped = true;
        }
        (acc, slice_max_all)
    }

    let mut st = State {
        dims,
        cap: ctl.max_terms_per_index,
        ln_tol: ctl.rel_tol.ln(),
        ln_floor: ctl.term_floor.ln(),
        term: &term,
        idx: vec![0; dims],
        reached: vec![0; dims],
        capped: false,
    };
    let (sum, _) = level(&mut st, 0);
    SeriesValue {
        sum: sum.get(),
        converged: !st.capped,
        terms: st.reached,
    }
}

/// Humbert's confluent function of two variables,
/// `Phi_1(a, b; c; x, y) = sum_{j,n} (a)_{j+n} (b)_j x^j y^n / ((c)_{j+n} j! n!)`.
///
/// Requires `|x| < 1`; `y` is unrestricted (the `n` index is exponential-type).
pub fn humbert_phi1(a: f64, b: f64, c: f64, x: f64, y: f64, ctl: &SeriesControl) -> Result<SeriesValue> {
    ctl.validate()?;
    check_lower_parameter(c)?;
    if !(x.abs() < 1.0) {
        return Err(Error::Convergence(format!("humbert_phi1 requires |x| < 1, got {x}")));
    }
    if !y.is_finite() || !a.is_finite() || !b.is_finite() {
        return Err(Error::Domain("humbert_phi1 arguments must be finite".into()));
    }
    let cap = ctl.max_terms_per_index;
    let pa = PochTable::new(a, 2 * cap);
    let pc = PochTable::new(c, 2 * cap);
    let pb = PochTable::new(b, cap);
    let px = PowerTable::new(x);
    let py = PowerTable::new(y);
    let lf = ln_factorials(cap);

    Ok(nested_series(2, ctl, |idx| {
        let (j, n) = (idx[0], idx[1]);
        let num = pa.get(j + n).mul(pb.get(j)).mul(px.get(j)).mul(py.get(n));
        if num.sign == 0.0 {
            return SignedLog::ZERO;
        }
        let den = pc.get(j + n);
        SignedLog {
            sign: num.sign * den.sign,
            ln_abs: num.ln_abs - den.ln_abs - lf[j] - lf[n],
        }
    }))
}

/// Confluent Lauricella function of three variables,
/// `Phi_1^(3)(a, b1, b2; c; x, y, z) =
///  sum_{j,n,p} (a)_{j+n+p} (b1)_j (b2)_n x^j y^n z^p / ((c)_{j+n+p} j! n! p!)`.
///
/// Requires `|x| < 1` and `|y| < 1`.
#[allow(clippy::too_many_arguments)]
pub fn lauricella_phi1_3(
    a: f64,
    b1: f64,
    b2: f64,
    c: f64,
    x: f64,
    y: f64,
    z: f64,
    ctl: &SeriesControl,
) -> Result<SeriesValue> {
    ctl.validate()?;
    check_lower_parameter(c)?;
    if !(x.abs() < 1.0) || !(y.abs() < 1.0) {
        return Err(Error::Convergence(format!(
            "lauricella_phi1_3 requires |x| < 1 and |y| < 1, got x = {x}, y = {y}"
        )));
    }
    if !z.is_finite() || !a.is_finite() || !b1.is_finite() || !b2.is_finite() {
        return Err(Error::Domain("lauricella_phi1_3 arguments must be finite".into()));
    }
    let cap = ctl.max_terms_per_index;
    let pa = PochTable::new(a, 3 * cap);
    let pc = PochTable::new(c, 3 * cap);
    let pb1 = PochTable::new(b1, cap);
    let pb2 = PochTable::new(b2, cap);
    let px = PowerTable::new(x);
    let py = PowerTable::new(y);
    let pz = PowerTable::new(z);
    let lf = ln_factorials(cap);

    Ok(nested_series(3, ctl, |idx| {
        let (j, n, p) = (idx[0], idx[1], idx[2]);
        let num = pa
            .get(j + n + p)
            .mul(pb1.get(j))
            .mul(pb2.get(n))
            .mul(px.get(j))
            .mul(py.get(n))
            .mul(pz.get(p));
        if num.sign == 0.0 {
            return SignedLog::ZERO;
        }
        let den = pc.get(j + n + p);
        SignedLog {
            sign: num.sign * den.sign,
            ln_abs: num.ln_abs - den.ln_abs - lf[j] - lf[n] - lf[p],
        }
    }))
}
