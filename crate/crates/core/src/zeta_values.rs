//! Elliptic zeta values
//!
//! ```text
//! Z_k(τ,σ) = -(2πi)^k/(k-1)! Σ_{j≥1} j^{k-1} (q^j - (-1)^k r^j) / ((1-q^j)(1-r^j))
//! ```
//!
//! with `q = e^{2πiτ}`, `r = e^{2πiσ}`, together with the routes that must
//! agree with it: the even and odd divisor-series decompositions, the
//! sign-weighted lattice sum for odd `k ≥ 5`, and the reflected and
//! homogeneous extensions used by the SL(3,ℤ) identities.

use std::f64::consts::PI;

use num_complex::{Complex, Complex64};
use twofloat::TwoFloat;

use crate::divisor::{d_k, NomePoint};
use crate::numerics::{
    domain, expi2pi, factorial, lipschitz_prefactor, qseries_tail_bound, rounding_allowance,
    ApproxValue, Error, PrecisionPolicy, Result, SeriesSum,
};

/// A pair `(τ, σ)` of upper half-plane points. Whether `σ/τ` also lies in the
/// upper half-plane is recomputed on construction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WedgePair {
    tau: Complex64,
    sigma: Complex64,
    in_wedge: bool,
}

impl WedgePair {
    pub fn new(tau: Complex64, sigma: Complex64) -> Result<Self> {
        if !(tau.im > 0.0 && sigma.im > 0.0) {
            return domain(format!(
                "(tau, sigma) = ({tau}, {sigma}) must both lie in the upper half-plane"
            ));
        }
        Ok(Self {
            tau,
            sigma,
            in_wedge: (sigma / tau).im > 0.0,
        })
    }

    /// Like [`WedgePair::new`] but also requires `Im(σ/τ) > 0`.
    pub fn wedge(tau: Complex64, sigma: Complex64) -> Result<Self> {
        let p = Self::new(tau, sigma)?;
        if !p.in_wedge {
            return domain(format!("sigma/tau = {} is not in the upper half-plane", sigma / tau));
        }
        Ok(p)
    }

    /// The repo-wide reference pair `τ = 0.2 + i`, `σ = 0.1 + 0.8i`.
    pub fn standard() -> Self {
        Self::wedge(Complex64::new(0.2, 1.0), Complex64::new(0.1, 0.8)).expect("standard pair")
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }

    pub fn sigma(&self) -> Complex64 {
        self.sigma
    }

    pub fn in_wedge(&self) -> bool {
        self.in_wedge
    }

    pub fn swapped(&self) -> Self {
        Self::new(self.sigma, self.tau).expect("swap stays in H x H")
    }

    pub fn q(&self) -> Complex64 {
        expi2pi(self.tau)
    }

    pub fn r(&self) -> Complex64 {
        expi2pi(self.sigma)
    }
}

/// `(τ, σ)` with non-zero imaginary parts of either sign.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExtendedPair {
    tau: Complex64,
    sigma: Complex64,
}

impl ExtendedPair {
    pub fn new(tau: Complex64, sigma: Complex64) -> Result<Self> {
        if tau.im == 0.0 || sigma.im == 0.0 || !tau.im.is_finite() || !sigma.im.is_finite() {
            return domain(format!(
                "extended Z_k needs Im tau != 0 and Im sigma != 0, got ({tau}, {sigma})"
            ));
        }
        Ok(Self { tau, sigma })
    }

    pub fn tau(&self) -> Complex64 {
        self.tau
    }

    pub fn sigma(&self) -> Complex64 {
        self.sigma
    }
}

/// Homogeneous coordinates `(x₁, x₂, x₃)` with `Im(x₁/x₃) ≠ 0 ≠ Im(x₂/x₃)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HomogeneousTriple {
    x: [Complex64; 3],
}

impl HomogeneousTriple {
    pub fn new(x1: Complex64, x2: Complex64, x3: Complex64) -> Result<Self> {
        if x3.norm() == 0.0 {
            return domain("x3 must be non-zero");
        }
        let (a, b) = (x1 / x3, x2 / x3);
        if a.im == 0.0 || b.im == 0.0 {
            return domain(format!(
                "Im(x1/x3) and Im(x2/x3) must be non-zero, got {} and {}",
                a.im, b.im
            ));
        }
        Ok(Self { x: [x1, x2, x3] })
    }

    pub fn from_array(x: [Complex64; 3]) -> Result<Self> {
        Self::new(x[0], x[1], x[2])
    }

    pub fn coords(&self) -> [Complex64; 3] {
        self.x
    }
}

fn sign_k(k: u32) -> f64 {
    if k % 2 == 0 {
        1.0
    } else {
        -1.0
    }
}

type Dd = Complex<TwoFloat>;

fn dd(z: Complex64) -> Dd {
    Complex::new(TwoFloat::from(z.re), TwoFloat::from(z.im))
}

/// `a / b` with a Newton-refined reciprocal; `TwoFloat`'s own quotient only
/// carries double accuracy.
fn dd_div(a: Dd, b: Dd) -> Dd {
    let n = b.re * b.re + b.im * b.im;
    let y = TwoFloat::from(1.0 / n.hi());
    let inv = y + y * (TwoFloat::from(1.0) - n * y);
    (a * b.conj()).scale(inv)
}

fn dd_norm(z: Dd) -> f64 {
    Complex64::new(f64::from(z.re), f64::from(z.im)).norm()
}

/// `Z_k(τ, σ)` from the defining q-series.
///
/// Powers, quotients and the running sum are kept in double-double: near the
/// real axis the terms reach `10^8` times the value. The bound adds the effect
/// of rounding `q` and `r` to doubles, at most `2ε·Σ j |term_j|`.
pub fn z_k(k: u32, pair: &WedgePair, prec: &PrecisionPolicy) -> Result<ApproxValue> {
    if k == 0 {
        return domain("Z_k needs k >= 1");
    }
    let (q, r) = (pair.q(), pair.r());
    let rho = q.norm().max(r.norm());
    let pref = -Complex64::new(0.0, 2.0 * PI).powi(k as i32) / factorial(k - 1);
    // |numerator| <= 2ρ^j and |(1-q^j)(1-r^j)| >= (1-ρ)^2
    let scale = 2.0;
    let eps = prec.epsilon() / (pref.norm() * scale);
    let sign = TwoFloat::from(sign_k(k));
    let one = dd(Complex64::new(1.0, 0.0));
    let (qd, rd) = (dd(q), dd(r));
    let (mut qj, mut rj) = (one, one);
    let mut sum = dd(Complex64::new(0.0, 0.0));
    let mut moment = 0.0;
    let finish = |sum: Dd, moment: f64, tail: f64, terms: usize| {
        let s = Complex64::new(f64::from(sum.re), f64::from(sum.im));
        let rounding = 4.0 * f64::EPSILON * (s.norm() + moment);
        ApproxValue::new(s * pref, pref.norm() * (scale * tail + rounding), terms)
    };
    for j in 1..=prec.max_terms() {
        qj = qj * qd;
        rj = rj * rd;
        let jf = TwoFloat::from(j as f64).powi(k as i32 - 1);
        let term = dd_div((qj - rj.scale(sign)).scale(jf), (one - qj) * (one - rj));
        sum = sum + term;
        moment += j as f64 * dd_norm(term);
        if rho == 0.0 {
            return Ok(finish(sum, moment, 0.0, j));
        }
        let tail = qseries_tail_bound(k, rho, j + 1)?;
        if tail <= eps {
            return Ok(finish(sum, moment, tail, j));
        }
    }
    let tail = qseries_tail_bound(k, rho, prec.max_terms() + 1)?;
    Err(Error::Truncation {
        partial: finish(sum, moment, tail, prec.max_terms()),
    })
}

/// Even `k`: `Z_k(τ,σ) = D_k(r) - D_k(q)`.
pub fn z_k_even_split(k: u32, pair: &WedgePair, prec: &PrecisionPolicy) -> Result<ApproxValue> {
    if k == 0 || k % 2 == 1 {
        return domain(format!("even split needs even k >= 2, got {k}"));
    }
    let dr = d_k(k, NomePoint::new(pair.r())?, prec)?;
    let dq = d_k(k, NomePoint::new(pair.q())?, prec)?;
    Ok(dr.sub(&dq))
}

fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Σ |q|^a |r|^b over `a, b ≥ 1` with `|q|^a |r|^b < cutoff`.
fn discarded_mass(qa: f64, rb: f64, cutoff: f64) -> f64 {
    let mut total = 0.0;
    let mut qpow = qa;
    loop {
        if qpow * rb < cutoff {
            // every b >= 1 is discarded for this a and all larger a
            return total + qpow * rb / ((1.0 - qa) * (1.0 - rb));
        }
        // smallest b with qpow * rb^b < cutoff
        let b_min = ((cutoff / qpow).ln() / rb.ln()).floor() as i32 + 1;
        let b_min = b_min.max(1);
        total += qpow * rb.powi(b_min) / (1.0 - rb);
        qpow *= qa;
    }
}

/// Odd `k`: `Z_k = D_k(q) + D_k(r) + 2 Σ_{gcd(a,b)=1} D_k(q^a r^b)`.
pub fn z_k_odd_split(k: u32, pair: &WedgePair, prec: &PrecisionPolicy) -> Result<ApproxValue> {
    if k % 2 == 0 {
        return domain(format!("odd split needs odd k, got {k}"));
    }
    let (q, r) = (pair.q(), pair.r());
    let mut total = d_k(k, NomePoint::new(q)?, prec)?.add(&d_k(k, NomePoint::new(r)?, prec)?);
    let (qa, rb) = (q.norm(), r.norm());
    if qa == 0.0 || rb == 0.0 {
        return Ok(total);
    }
    // For |x| <= |q||r|, |D_k(x)| <= |x| · C with C = pref · tail(k,|q||r|,1)/(|q||r|).
    let x_max = qa * rb;
    let per_unit = lipschitz_prefactor(k).norm() * qseries_tail_bound(k, x_max, 1)? / x_max;
    let budget = prec.epsilon() / 2.0;
    let mut cutoff = budget;
    let mut dropped = 2.0 * per_unit * discarded_mass(qa, rb, cutoff);
    while dropped > budget {
        cutoff /= 10.0;
        if cutoff < f64::MIN_POSITIVE * 1e10 {
            break;
        }
        dropped = 2.0 * per_unit * discarded_mass(qa, rb, cutoff);
    }
    let inner_prec = prec.with_epsilon(prec.epsilon() / 4.0)?;
    let mut pairs = 0usize;
    let mut inner = ApproxValue::exact(Complex64::new(0.0, 0.0));
    let mut qpow = Complex64::new(1.0, 0.0);
    for a in 1u64.. {
        qpow *= q;
        if qpow.norm() * rb < cutoff {
            break;
        }
        let mut x = qpow;
        for b in 1u64.. {
            x *= r;
            if x.norm() < cutoff {
                break;
            }
            if gcd(a, b) != 1 {
                continue;
            }
            pairs += 1;
            if pairs > prec.max_terms() {
                return Err(Error::Truncation {
                    partial: ApproxValue::new(
                        total.value + 2.0 * inner.value,
                        f64::INFINITY,
                        total.terms_used + inner.terms_used,
                    ),
                });
            }
            inner = inner.add(&d_k(k, NomePoint::new(x)?, &inner_prec)?);
        }
    }
    total = total.add(&inner.scale(Complex64::new(2.0, 0.0)));
    total.err_bound += dropped;
    Ok(total)
}

/// Sign of `n`: 1, 0 or -1.
pub fn epsilon_sign(n: i64) -> i64 {
    n.signum()
}

/// `ε(a, b) = ½(ε(a) + ε(b))`.
pub fn epsilon_pair(a: i64, b: i64) -> f64 {
    0.5 * (epsilon_sign(a) + epsilon_sign(b)) as f64
}

/// `Σ' ε(a,b) / (aτ + bσ + c)^k` over cubes `max(|a|,|b|,|c|) ≤ R`, odd `k ≥ 5`.
///
/// Points `p` and `-p` are added together; the bound `|last shell| · R/(k-4)`
/// is heuristic.
pub fn z_k_lattice(k: u32, pair: &WedgePair, prec: &PrecisionPolicy) -> Result<ApproxValue> {
    if k % 2 == 0 || k < 5 {
        return domain(format!(
            "lattice formula needs odd k >= 5, got {k}; for k = 1, 3 the series is not absolutely convergent and regularisation is not implemented"
        ));
    }
    let (t, s) = (pair.tau(), pair.sigma());
    let radius = prec.lattice_radius() as i64;
    let kk = -(k as i32);
    let mut total = Complex64::new(0.0, 0.0);
    let mut abs_total = 0.0;
    let mut last_shell = Complex64::new(0.0, 0.0);
    let mut count = 0usize;
    // odd k: term(-p) = ε(-a,-b)/(-w)^k = ε(a,b)/w^k, so each ± pair doubles.
    let visit = |a: i64, b: i64, c: i64, shell: &mut Complex64| {
        let w = epsilon_pair(a, b);
        if w != 0.0 {
            *shell += 2.0 * w * (t * a as f64 + s * b as f64 + c as f64).powi(kk);
        }
    };
    for n in 1..=radius {
        let mut shell = Complex64::new(0.0, 0.0);
        // One representative of each ± pair on the cube surface max = n:
        // a = n face; then |a| < n with b = n face; then |a|,|b| < n with c = n.
        for b in -n..=n {
            for c in -n..=n {
                visit(n, b, c, &mut shell);
            }
        }
        for a in (1 - n)..n {
            for c in -n..=n {
                visit(a, n, c, &mut shell);
            }
        }
        for a in (1 - n)..n {
            for b in (1 - n)..n {
                visit(a, b, n, &mut shell);
            }
        }
        count += (24 * n * n + 2) as usize;
        abs_total += shell.norm();
        total += shell;
        last_shell = shell;
    }
    let err = last_shell.norm() * radius as f64 / f64::from(k - 4)
        + rounding_allowance(abs_total, count);
    Ok(ApproxValue::new(total, err, count))
}

/// `Z_k` on `Im τ ≠ 0`, `Im σ ≠ 0` via `Z_k(-τ,σ) = Z_k(τ,-σ) = (-1)^k Z_k(τ,σ)`.
pub fn z_k_extended(k: u32, pair: &ExtendedPair, prec: &PrecisionPolicy) -> Result<ApproxValue> {
    let (mut t, mut s) = (pair.tau(), pair.sigma());
    let mut factor = 1.0;
    if t.im < 0.0 {
        t = -t;
        factor *= sign_k(k);
    }
    if s.im < 0.0 {
        s = -s;
        factor *= sign_k(k);
    }
    let v = z_k(k, &WedgePair::new(t, s)?, prec)?;
    Ok(v.scale(Complex64::new(factor, 0.0)))
}

/// `Z̃_k(x₁,x₂,x₃) = x₃^{-k} Z_k(x₁/x₃, x₂/x₃)`.
pub fn z_k_homogeneous(
    k: u32,
    triple: &HomogeneousTriple,
    prec: &PrecisionPolicy,
) -> Result<ApproxValue> {
    let [x1, x2, x3] = triple.coords();
    let inner = z_k_extended(k, &ExtendedPair::new(x1 / x3, x2 / x3)?, prec)?;
    Ok(inner.scale(x3.powi(-(k as i32))))
}

/// The correction `a_k` of the modular three-term relation for `k = 1, 2, 3`.
pub fn anomaly_a(k: u32, tau: Complex64, sigma: Complex64) -> Result<Complex64> {
    if tau.norm() == 0.0 || sigma.norm() == 0.0 {
        return domain("anomaly coefficients need tau != 0 and sigma != 0");
    }
    let one = Complex64::new(1.0, 0.0);
    let ts = tau * sigma;
    match k {
        1 => Ok(-0.5 * one + one / (2.0 * tau) - one / (2.0 * sigma)
            + sigma / (6.0 * tau)
            + tau / (6.0 * sigma)
            + one / (6.0 * ts)),
        2 => Ok(-one / tau + one / sigma - one / ts),
        3 => Ok(one / ts),
        _ => domain(format!("anomaly a_k is only defined for k in 1..=3, got {k}")),
    }
}

/// Euler-Maclaurin estimate of `Σ_{n>N} [(ρ+n)^{-k} + (ρ-n)^{-k}]` and a
/// rigorous bound on its remainder.
fn lipschitz_left_tail(k: u32, rho: Complex64, n: f64) -> (Complex64, f64) {
    let kf = f64::from(k);
    let ki = k as i32;
    let plus = rho + n;
    let minus = rho - n;
    // rising factorial (k)_m
    let rising = |m: i32| (0..m).map(|i| kf + f64::from(i)).product::<f64>();
    // m-th derivative of f(x) = (ρ+x)^{-k} + (ρ-x)^{-k} at x = N
    let deriv = |m: i32| {
        let sgn = if m % 2 == 0 { 1.0 } else { -1.0 };
        rising(m) * (sgn * plus.powi(-ki - m) + minus.powi(-ki - m))
    };
    let integral = (plus.powi(1 - ki) - minus.powi(1 - ki)) / (kf - 1.0);
    let est = integral - 0.5 * deriv(0) - deriv(1) / 12.0 + deriv(3) / 720.0 - deriv(5) / 30240.0
        + deriv(7) / 1209600.0;
    // |R_8| <= 2ζ(8)/(2π)^8 ∫_N^∞ |f^{(8)}|, with |f^{(8)}(x)| <= 2 (k)_8 (x-|ρ|)^{-k-8}
    let zeta8 = PI.powi(8) / 9450.0;
    let gap = n - rho.norm();
    let bound = 2.0 * zeta8 / (2.0 * PI).powi(8) * 2.0 * rising(8) * gap.powi(-ki - 7)
        / (kf + 7.0);
    (est, bound)
}

/// Both sides of `Σ_n (ρ+n)^{-k} = (-2πi)^k/(k-1)! Σ_{j≥1} j^{k-1} e^{2πiρj}`.
///
/// The left side is summed symmetrically over `|n| ≤ lattice_radius` and the
/// rest of the lattice is added by Euler-Maclaurin.
pub fn lipschitz_both_sides(
    k: u32,
    rho: Complex64,
    prec: &PrecisionPolicy,
) -> Result<(ApproxValue, ApproxValue)> {
    if k < 2 {
        return domain(format!("Lipschitz formula needs k >= 2, got {k}"));
    }
    if !(rho.im > 0.0) {
        return domain(format!("rho = {rho} must lie in the upper half-plane"));
    }
    let radius = prec.lattice_radius().max(2) as f64;
    if radius <= 2.0 * rho.norm() {
        return domain(format!(
            "lattice radius {radius} is too small for |rho| = {}",
            rho.norm()
        ));
    }
    let kk = -(k as i32);
    let mut left = SeriesSum::default();
    left.push(rho.powi(kk));
    for n in 1..=radius as i64 {
        let nf = n as f64;
        left.push((rho + nf).powi(kk) + (rho - nf).powi(kk));
    }
    let (tail, tail_err) = lipschitz_left_tail(k, rho, radius);
    let left = ApproxValue::new(left.sum + tail, tail_err + left.rounding(), left.terms);

    let pref = lipschitz_prefactor(k);
    let x = expi2pi(rho);
    let xr = x.norm();
    let mut right = SeriesSum::default();
    if xr == 0.0 {
        return Ok((left, right.finish(pref, 0.0)));
    }
    // the terms carry no Lambert denominator, so undo the (1-ρ)^{-2} slack
    let tail_at = |j: usize| -> Result<f64> {
        Ok(qseries_tail_bound(k, xr, j)? * (1.0 - xr) * (1.0 - xr))
    };
    let eps = prec.epsilon() / pref.norm();
    let mut xj = Complex64::new(1.0, 0.0);
    for j in 1..=prec.max_terms() {
        xj *= x;
        right.push((j as f64).powi(k as i32 - 1) * xj);
        let tail = tail_at(j + 1)?;
        if tail <= eps {
            return Ok((left, right.finish(pref, tail)));
        }
    }
    Err(Error::Truncation {
        partial: right.finish(pref, tail_at(prec.max_terms() + 1)?),
    })
}
