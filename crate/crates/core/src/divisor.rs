//! Divisor sums, the generating series `D_k(q)`, the modified theta function
//! `θ₀(z, τ)` and Eisenstein series `G_k(τ)`.
//!
//! `D_k(q) = (-2πi)^k/(k-1)! Σ σ_{k-1}(n) qⁿ` is evaluated either from its
//! σ-coefficients or from the Lambert form `Σ j^{k-1} q^j/(1-q^j)`; the two
//! routes are independent and the Lambert one is the default.

use num_complex::Complex64;

use crate::numerics::{
    domain, expi2pi, lipschitz_prefactor, qseries_tail_bound, rounding_allowance, ApproxValue,
    Error, PrecisionPolicy, Result, SeriesSum,
};
use crate::zeta_int;

/// A point of the upper half-plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UpperHalfPoint(Complex64);

impl UpperHalfPoint {
    pub fn new(tau: Complex64) -> Result<Self> {
        if tau.im > 0.0 && tau.re.is_finite() && tau.im.is_finite() {
            Ok(Self(tau))
        } else {
            domain(format!("tau = {tau} is not in the upper half-plane"))
        }
    }

    pub fn tau(&self) -> Complex64 {
        self.0
    }

    /// `q = e^{2πiτ}`.
    pub fn nome(&self) -> NomePoint {
        NomePoint(expi2pi(self.0))
    }
}

/// A point of the open unit disk, used as the variable of a q-series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NomePoint(Complex64);

impl NomePoint {
    pub fn new(q: Complex64) -> Result<Self> {
        if q.norm() < 1.0 {
            Ok(Self(q))
        } else {
            domain(format!("|q| = {} is not below 1", q.norm()))
        }
    }

    pub fn q(&self) -> Complex64 {
        self.0
    }
}

/// `σ_p(n) = Σ_{d | n} d^p`, exact.
pub fn sigma_power(n: i64, p: u32) -> Result<u128> {
    if n <= 0 {
        return domain(format!("sigma_power needs n >= 1, got {n}"));
    }
    let n = n as u64;
    let mut total: u128 = 0;
    let mut d = 1u64;
    while d * d <= n {
        if n % d == 0 {
            total += u128::from(d).pow(p);
            let other = n / d;
            if other != d {
                total += u128::from(other).pow(p);
            }
        }
        d += 1;
    }
    Ok(total)
}

/// `σ_p(n)` for every `n ≤ n_max` by a divisor sieve, as floats.
pub(crate) fn sigma_table(n_max: usize, p: u32) -> Vec<f64> {
    let mut table = vec![0.0; n_max + 1];
    for d in 1..=n_max {
        let dp = (d as f64).powi(p as i32);
        let mut m = d;
        while m <= n_max {
            table[m] += dp;
            m += d;
        }
    }
    table
}

/// How `d_k` sums its series.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DkStrategy {
    /// `Σ j^{k-1} q^j / (1 - q^j)`.
    #[default]
    Lambert,
    /// `Σ σ_{k-1}(n) qⁿ`.
    Coefficients,
}

/// `D_k(q)` by the default (Lambert) route.
pub fn d_k(k: u32, q: NomePoint, prec: &PrecisionPolicy) -> Result<ApproxValue> {
    d_k_with(k, q, prec, DkStrategy::Lambert)
}

pub fn d_k_with(
    k: u32,
    q: NomePoint,
    prec: &PrecisionPolicy,
    strategy: DkStrategy,
) -> Result<ApproxValue> {
    if k == 0 {
        return domain("D_k needs k >= 1");
    }
    let q = q.q();
    let rho = q.norm();
    if rho == 0.0 {
        return Ok(ApproxValue::exact(Complex64::new(0.0, 0.0)));
    }
    let pref = lipschitz_prefactor(k);
    match strategy {
        DkStrategy::Lambert => lambert(k, q, rho, pref, prec),
        DkStrategy::Coefficients => coefficients(k, q, rho, pref, prec),
    }
}

fn lambert(
    k: u32,
    q: Complex64,
    rho: f64,
    pref: Complex64,
    prec: &PrecisionPolicy,
) -> Result<ApproxValue> {
    let eps = prec.epsilon() / pref.norm();
    let mut acc = SeriesSum::default();
    let mut qj = Complex64::new(1.0, 0.0);
    for j in 1..=prec.max_terms() {
        qj *= q;
        let jf = j as f64;
        acc.push(jf.powi(k as i32 - 1) * qj / (1.0 - qj));
        // |q^j/(1-q^j)| <= ρ^j/(1-ρ), and the tail bound carries (1-ρ)^{-2}
        let tail = qseries_tail_bound(k, rho, j + 1)?;
        if tail <= eps {
            return Ok(acc.finish(pref, tail));
        }
    }
    let tail = qseries_tail_bound(k, rho, prec.max_terms() + 1)?;
    Err(Error::Truncation {
        partial: acc.finish(pref, tail),
    })
}

fn coefficients(
    k: u32,
    q: Complex64,
    rho: f64,
    pref: Complex64,
    prec: &PrecisionPolicy,
) -> Result<ApproxValue> {
    let eps = prec.epsilon() / pref.norm();
    // σ_{k-1}(n) <= n^k, so the tail is bounded by the (k+1) tail bound.
    let mut n_max = 16usize;
    let mut tail = qseries_tail_bound(k + 1, rho, n_max + 1)?;
    while tail > eps && n_max < prec.max_terms() {
        n_max = (n_max * 2).min(prec.max_terms());
        tail = qseries_tail_bound(k + 1, rho, n_max + 1)?;
    }
    let sigma = sigma_table(n_max, k - 1);
    let mut acc = SeriesSum::default();
    let mut qn = Complex64::new(1.0, 0.0);
    for s in sigma.iter().skip(1) {
        qn *= q;
        acc.push(*s * qn);
    }
    let value = acc.finish(pref, tail);
    if tail > eps {
        return Err(Error::Truncation { partial: value });
    }
    Ok(value)
}

/// The modified theta function `Π_{j≥0} (1 - q^{j+1} e^{-2πiz})(1 - q^j e^{2πiz})`.
pub fn theta0(z: Complex64, tau: UpperHalfPoint, prec: &PrecisionPolicy) -> Result<ApproxValue> {
    let q = tau.nome().q();
    let rho = q.norm();
    let x = expi2pi(z);
    let x_inv = expi2pi(-z);
    let growth = x.norm().max(x_inv.norm());
    let mut product = Complex64::new(1.0, 0.0);
    let mut qj = Complex64::new(1.0, 0.0);
    let mut log_rounding = 0.0;
    for j in 0..prec.max_terms() {
        let f = (1.0 - qj * q * x_inv) * (1.0 - qj * x);
        product *= f;
        log_rounding += 4.0 * f64::EPSILON;
        qj *= q;
        // Remaining factors have |δ| <= 2·growth·ρ^{j+1}; Σ_{i>j} is geometric.
        let rest = 2.0 * growth * qj.norm() / (1.0 - rho);
        let stable = rest < 0.5 && rest <= prec.epsilon();
        if stable || product == Complex64::new(0.0, 0.0) && rest < 0.5 {
            let rel = (2.0 * rest).exp_m1() + log_rounding;
            return Ok(ApproxValue::new(product, product.norm() * rel, j + 1));
        }
    }
    let rest = 2.0 * growth * qj.norm() / (1.0 - rho);
    let rel = if rest < 0.5 {
        (2.0 * rest).exp_m1()
    } else {
        f64::INFINITY
    };
    Err(Error::Truncation {
        partial: ApproxValue::new(product, product.norm() * rel, prec.max_terms()),
    })
}

fn check_even_weight(k: u32, min: u32) -> Result<()> {
    if k % 2 == 1 {
        return domain(format!(
            "G_k is only defined for even k; for odd k = {k} the lattice sum cancels under (m,n) -> (-m,-n)"
        ));
    }
    if k < min {
        return domain(format!("G_k needs k >= {min} on this route, got {k}"));
    }
    Ok(())
}

/// `G_k(τ) = ½ Σ' (mτ + n)^{-k}` over square shells `max(|m|,|n|) ≤ R`.
///
/// The bound is heuristic: `|last shell| · R / (k - 3)`.
pub fn eisenstein_lattice(
    k: u32,
    tau: UpperHalfPoint,
    prec: &PrecisionPolicy,
) -> Result<ApproxValue> {
    check_even_weight(k, 4)?;
    let t = tau.tau();
    let radius = prec.lattice_radius() as i64;
    let kk = -(k as i32);
    let point = |m: i64, n: i64| (t * m as f64 + n as f64).powi(kk);
    let mut total = Complex64::new(0.0, 0.0);
    let mut abs_total = 0.0;
    let mut last_shell = Complex64::new(0.0, 0.0);
    let mut count = 0usize;
    for s in 1..=radius {
        let mut shell = Complex64::new(0.0, 0.0);
        // top and bottom edges m = ±s, then the side edges n = ±s with |m| < s
        for n in -s..=s {
            shell += point(s, n) + point(-s, n);
        }
        for m in (1 - s)..s {
            shell += point(m, s) + point(m, -s);
        }
        count += 8 * s as usize;
        abs_total += shell.norm();
        total += shell;
        last_shell = shell;
    }
    let err = 0.5 * last_shell.norm() * radius as f64 / f64::from(k - 3)
        + rounding_allowance(abs_total, count);
    Ok(ApproxValue::new(0.5 * total, err, count))
}

/// `G_k(τ) = ζ(k) + D_k(e^{2πiτ})`.
pub fn gk_qexp(k: u32, tau: UpperHalfPoint, prec: &PrecisionPolicy) -> Result<ApproxValue> {
    check_even_weight(k, 2)?;
    let zeta = zeta_int(k, prec)?;
    let d = d_k(k, tau.nome(), prec)?;
    Ok(zeta.add(&d))
}
