//! Shared numerical layer: precision policy, approximate values with error
//! bounds, classical constants and the tail bound used by every q-series.
//!
//! All series in this crate are summed term by term until a rigorous tail
//! estimate drops below [`PrecisionPolicy::epsilon`], or until
//! [`PrecisionPolicy::max_terms`] is hit, in which case the partial result is
//! returned inside [`Error::Truncation`].

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Absolute modulus below which a denominator factor is treated as a pole.
pub const POLE_THRESHOLD: f64 = 1e-13;

/// Errors raised by the numerical routines.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),
    /// A vanishing denominator. `factor` carries the `(j, l)` product index
    /// when the pole comes from the elliptic gamma double product.
    #[error("pole: {detail}")]
    Pole {
        detail: String,
        factor: Option<(usize, usize)>,
    },
    #[error("series not converged after {} terms (err bound {:e})", partial.terms_used, partial.err_bound)]
    Truncation { partial: ApproxValue },
    #[error("branch tracking failed: misfit {misfit:e} is close to a multiple of 2πi")]
    Branch { misfit: f64 },
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn domain<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Domain(msg.into()))
}

/// Truncation controls shared by all series evaluators.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionPolicy {
    epsilon: f64,
    max_terms: usize,
    lattice_radius: usize,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        Self {
            epsilon: 1e-12,
            max_terms: 1_000_000,
            lattice_radius: 100,
        }
    }
}

impl PrecisionPolicy {
    pub fn new(epsilon: f64, max_terms: usize, lattice_radius: usize) -> Result<Self> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return domain(format!("epsilon must be positive, got {epsilon}"));
        }
        if max_terms == 0 {
            return domain("max_terms must be at least 1");
        }
        if lattice_radius == 0 {
            return domain("lattice_radius must be at least 1");
        }
        Ok(Self {
            epsilon,
            max_terms,
            lattice_radius,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn max_terms(&self) -> usize {
        self.max_terms
    }

    pub fn lattice_radius(&self) -> usize {
        self.lattice_radius
    }

    pub fn with_epsilon(self, epsilon: f64) -> Result<Self> {
        Self::new(epsilon, self.max_terms, self.lattice_radius)
    }

    pub fn with_max_terms(self, max_terms: usize) -> Result<Self> {
        Self::new(self.epsilon, max_terms, self.lattice_radius)
    }

    pub fn with_lattice_radius(self, lattice_radius: usize) -> Result<Self> {
        Self::new(self.epsilon, self.max_terms, lattice_radius)
    }
}

/// A computed value together with a truncation error bound and the number
/// of terms (or factors, or lattice points) that went into it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ApproxValue {
    pub value: Complex64,
    pub err_bound: f64,
    pub terms_used: usize,
}

impl ApproxValue {
    pub fn new(value: Complex64, err_bound: f64, terms_used: usize) -> Self {
        Self {
            value,
            err_bound,
            terms_used,
        }
    }

    pub fn exact(value: Complex64) -> Self {
        Self::new(value, 0.0, 0)
    }

    /// `self - other`, with bounds added.
    pub fn sub(&self, other: &ApproxValue) -> ApproxValue {
        ApproxValue::new(
            self.value - other.value,
            self.err_bound + other.err_bound,
            self.terms_used + other.terms_used,
        )
    }

    pub fn add(&self, other: &ApproxValue) -> ApproxValue {
        ApproxValue::new(
            self.value + other.value,
            self.err_bound + other.err_bound,
            self.terms_used + other.terms_used,
        )
    }

    pub fn scale(&self, factor: Complex64) -> ApproxValue {
        ApproxValue::new(
            self.value * factor,
            self.err_bound * factor.norm(),
            self.terms_used,
        )
    }
}

/// Running sum that also tracks Σ|term| so a floating-point allowance can be
/// folded into the reported bound.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct SeriesSum {
    pub sum: Complex64,
    pub abs_sum: f64,
    pub terms: usize,
}

impl SeriesSum {
    pub fn push(&mut self, term: Complex64) {
        self.sum += term;
        self.abs_sum += term.norm();
        self.terms += 1;
    }

    /// Rounding allowance for the accumulated sum.
    pub fn rounding(&self) -> f64 {
        rounding_allowance(self.abs_sum, self.terms)
    }

    /// Finishes the sum: multiplies by `prefactor` and reports
    /// `|prefactor| * (tail + rounding)` as the bound.
    pub fn finish(&self, prefactor: Complex64, tail: f64) -> ApproxValue {
        ApproxValue::new(
            self.sum * prefactor,
            prefactor.norm() * (tail + self.rounding()),
            self.terms,
        )
    }
}

pub(crate) fn rounding_allowance(abs_sum: f64, terms: usize) -> f64 {
    16.0 * f64::EPSILON * abs_sum * (terms.max(1) as f64).sqrt()
}

/// `e^{2πi x}`. The real part is reduced mod 1 first (exactly).
pub fn expi2pi(x: Complex64) -> Complex64 {
    let reduced = Complex64::new(x.re - x.re.floor(), x.im);
    (Complex64::new(0.0, 2.0 * PI) * reduced).exp()
}

pub(crate) fn factorial(n: u32) -> f64 {
    (1..=n).map(f64::from).product()
}

/// `(-2πi)^k / (k-1)!`, the normalisation shared by D_k and the Lipschitz sum.
pub(crate) fn lipschitz_prefactor(k: u32) -> Complex64 {
    Complex64::new(0.0, -2.0 * PI).powi(k as i32) / factorial(k - 1)
}

/// Upper bound for `Σ_{j ≥ j0} j^{k-1} ρ^j / (1-ρ)^2`.
///
/// Callers multiply by the series-specific constant (for example
/// `2(2π)^k/(k-1)!` for the elliptic zeta series). The bound is monotone
/// decreasing in `j0` and tends to zero.
pub fn qseries_tail_bound(k: u32, rho: f64, j0: usize) -> Result<f64> {
    if !(rho < 1.0) || rho.is_nan() {
        return domain(format!("series does not converge for rho = {rho}"));
    }
    if rho < 0.0 {
        return domain(format!("rho must be non-negative, got {rho}"));
    }
    if k == 0 {
        return domain("k must be at least 1");
    }
    if rho == 0.0 {
        return Ok(0.0);
    }
    let j0 = j0.max(1);
    let kk = f64::from(k - 1);
    // Beyond `pivot` the term ratio (1+1/j)^{k-1} ρ is at most (1+ρ)/2, so the
    // tail is dominated by a geometric series with ratio λ(j).
    let half_gap = (1.0 + rho) / (2.0 * rho);
    let pivot = if k == 1 {
        1
    } else {
        let j_star = 1.0 / (half_gap.ln() / kk).exp_m1();
        (j_star.ceil() as usize).max(1)
    };
    let ratio = |j: usize| (1.0 + 1.0 / j as f64).powf(kk) * rho;
    let term = |j: usize| (j as f64).powf(kk) * rho.powf(j as f64);

    let mut explicit = 0.0;
    let start = if j0 < pivot {
        for j in j0..pivot {
            explicit += term(j);
        }
        pivot
    } else {
        j0
    };
    let geometric = term(start) / (1.0 - ratio(start));
    Ok((explicit + geometric) / ((1.0 - rho) * (1.0 - rho)))
}

/// Euler-Maclaurin estimate of `Σ_{n > N} n^{-s}` for real `s > 1`, together
/// with a bound on its own error (the first omitted Bernoulli term).
pub(crate) fn power_tail(s: f64, n: f64) -> (f64, f64) {
    let a = n.powf(-s);
    let est = n.powf(1.0 - s) / (s - 1.0) - 0.5 * a + s * a / (12.0 * n)
        - s * (s + 1.0) * (s + 2.0) * a / (720.0 * n.powi(3))
        + s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * a / (30240.0 * n.powi(5));
    let next = s * (s + 1.0) * (s + 2.0) * (s + 3.0) * (s + 4.0) * (s + 5.0) * (s + 6.0) * a
        / (1209600.0 * n.powi(7));
    (est, next.abs())
}

/// ζ(k) by the Dirichlet series with an Euler-Maclaurin tail.
pub fn zeta_int(k: u32, prec: &PrecisionPolicy) -> Result<ApproxValue> {
    if k < 2 {
        return domain(format!("zeta diverges at k = {k}; need k >= 2"));
    }
    let s = f64::from(k);
    let mut n = 8usize;
    loop {
        let (_, err) = power_tail(s, n as f64);
        if err <= prec.epsilon() * 1e-3 || n >= prec.max_terms() {
            break;
        }
        n *= 2;
    }
    let n = n.min(prec.max_terms());
    // Sum small terms first.
    let head: f64 = (1..=n).rev().map(|m| (m as f64).powf(-s)).sum();
    let (tail, err) = power_tail(s, n as f64);
    let err_bound = err + rounding_allowance(head, n);
    let value = ApproxValue::new(Complex64::new(head + tail, 0.0), err_bound, n);
    if err > prec.epsilon() {
        return Err(Error::Truncation { partial: value });
    }
    Ok(value)
}

/// Euler's constant from `H_{n-1} - ln n` with Euler-Maclaurin corrections.
pub fn euler_gamma_const() -> f64 {
    let n = 1000usize;
    let harmonic: f64 = (1..n).rev().map(|j| 1.0 / j as f64).sum();
    let nf = n as f64;
    let n2 = nf * nf;
    harmonic - nf.ln() + 1.0 / (2.0 * nf) + 1.0 / (12.0 * n2) - 1.0 / (120.0 * n2 * n2)
        + 1.0 / (252.0 * n2 * n2 * n2)
}
