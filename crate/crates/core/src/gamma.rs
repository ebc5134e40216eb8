//! The elliptic gamma function
//!
//! ```text
//! Γ(z,τ,σ) = Π_{j,l≥0} (1 - q^{j+1} r^{l+1} e^{-2πiz}) / (1 - q^j r^l e^{2πiz})
//! ```
//!
//! evaluated as a truncated double product, and through its logarithm
//! `-(i/2) Σ_j sin(πj(2z-τ-σ)) / (j sin(πjτ) sin(πjσ))` on the strip
//! `0 < Im z < Im(τ+σ)`. Also here: Euler's Γ by the Weierstrass product, the
//! Taylor expansions linking both gamma functions to zeta values, the
//! degeneration to Euler's Γ and the modular three-term identities.
//!
//! Logarithms are never compared directly across routes. Checks either
//! exponentiate, or (for the cubic `Q`) integrate the single-valued
//! logarithmic derivative along straight segments.

use std::f64::consts::PI;

use gauss_quad::GaussLegendre;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::divisor::{theta0, UpperHalfPoint};
use crate::numerics::{
    domain, euler_gamma_const, expi2pi, power_tail, rounding_allowance, zeta_int, ApproxValue,
    Error, PrecisionPolicy, Result, POLE_THRESHOLD,
};
use crate::zeta_values::WedgePair;

/// Arguments `(z, τ, σ)` of the elliptic gamma function.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GammaArg {
    pub z: Complex64,
    pub tau: UpperHalfPoint,
    pub sigma: UpperHalfPoint,
}

impl GammaArg {
    pub fn new(z: Complex64, tau: Complex64, sigma: Complex64) -> Result<Self> {
        Ok(Self {
            z,
            tau: UpperHalfPoint::new(tau)?,
            sigma: UpperHalfPoint::new(sigma)?,
        })
    }

    fn with_z(&self, z: Complex64) -> Self {
        Self { z, ..*self }
    }
}

/// Taylor coefficients `c_1..c_kmax` of `ln(Γ(z+σ,τ,σ)/Γ(σ,τ,σ))` at `z = 0`.
#[derive(Debug, Clone, PartialEq)]
pub struct TaylorSlice {
    pub coefficients: Vec<Complex64>,
    pub radius: f64,
}

impl TaylorSlice {
    /// `c_j` for `j ≥ 1`.
    pub fn coefficient(&self, j: usize) -> Complex64 {
        self.coefficients[j - 1]
    }
}

/// Least-squares cubic `Q̂` with `iπQ̂(z)` fitted to the three-term log defect.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CubicFit {
    pub c0: Complex64,
    pub c1: Complex64,
    pub c2: Complex64,
    pub c3: Complex64,
    pub fit_residual: f64,
}

impl CubicFit {
    pub fn coefficients(&self) -> [Complex64; 4] {
        [self.c0, self.c1, self.c2, self.c3]
    }

    pub fn eval(&self, z: Complex64) -> Complex64 {
        ((self.c3 * z + self.c2) * z + self.c1) * z + self.c0
    }
}

/// Polynomial fit of arbitrary degree; used for the saturation check.
#[derive(Debug, Clone, PartialEq)]
pub struct PolynomialFit {
    /// Coefficients of `Q̂` in powers of `z`, constant term first.
    pub coefficients: Vec<Complex64>,
    /// Max deviation of the fitted `iπQ̂` from the samples.
    pub fit_residual: f64,
    pub center: Complex64,
    pub radius: f64,
}

/// Truncation extents for the `(j, l)` double product at a given `z`.
struct ProductGrid {
    q: Complex64,
    r: Complex64,
    x: Complex64,
    x_inv: Complex64,
    rows: usize,
    cols: usize,
    /// Bound on Σ |ln(1 - ·)| over the discarded factors.
    log_tail: f64,
}

impl ProductGrid {
    fn new(z: Complex64, tau: Complex64, sigma: Complex64, prec: &PrecisionPolicy) -> Result<Self> {
        let (q, r) = (expi2pi(tau), expi2pi(sigma));
        let (qa, rb) = (q.norm(), r.norm());
        let x = expi2pi(z);
        let x_inv = expi2pi(-z);
        let weight = x.norm() + (q * r * x_inv).norm();
        let denom = (1.0 - qa) * (1.0 - rb);
        let target = prec.epsilon() / 4.0;
        let extent = |base: f64| -> usize {
            if base == 0.0 {
                return 1;
            }
            let needed = (target * denom / weight).ln() / base.ln();
            needed.ceil().max(1.0) as usize
        };
        let (rows, cols) = (extent(qa), extent(rb));
        let grid = Self {
            q,
            r,
            x,
            x_inv,
            rows,
            cols,
            log_tail: 0.0,
        };
        let size = rows.saturating_mul(cols);
        if size > prec.max_terms() {
            return Err(Error::Truncation {
                partial: ApproxValue::new(Complex64::new(f64::NAN, f64::NAN), f64::INFINITY, 0),
            });
        }
        let mass = (1.0 - (1.0 - qa.powi(rows as i32)) * (1.0 - rb.powi(cols as i32))) / denom;
        let biggest = weight * qa.powi(rows as i32).max(rb.powi(cols as i32));
        let log_tail = if biggest < 0.5 {
            2.0 * weight * mass
        } else {
            f64::INFINITY
        };
        Ok(Self { log_tail, ..grid })
    }

    fn size(&self) -> usize {
        self.rows * self.cols
    }
}

/// `Γ(z, τ, σ)` by the truncated double product.
pub fn ell_gamma(arg: &GammaArg, prec: &PrecisionPolicy) -> Result<ApproxValue> {
    let grid = ProductGrid::new(arg.z, arg.tau.tau(), arg.sigma.tau(), prec)?;
    let mut value = Complex64::new(1.0, 0.0);
    let mut qj = Complex64::new(1.0, 0.0);
    for j in 0..grid.rows {
        let mut qr = qj;
        for l in 0..grid.cols {
            let den = 1.0 - qr * grid.x;
            if den.norm() < POLE_THRESHOLD {
                return Err(Error::Pole {
                    detail: format!(
                        "elliptic gamma pole at z = {}: factor (j, l) = ({j}, {l}) vanishes",
                        arg.z
                    ),
                    factor: Some((j, l)),
                });
            }
            let num = 1.0 - qr * grid.q * grid.r * grid.x_inv;
            value *= num / den;
            qr *= grid.r;
        }
        qj *= grid.q;
    }
    let rel = grid.log_tail.exp_m1() + 8.0 * f64::EPSILON * (grid.size() as f64).sqrt();
    Ok(ApproxValue::new(value, value.norm() * rel, grid.size()))
}

/// Logarithmic derivative `d/dz ln Γ(z, τ, σ)`, single-valued away from the
/// zeros and poles.
pub(crate) fn dlog_ell_gamma(
    z: Complex64,
    tau: Complex64,
    sigma: Complex64,
    prec: &PrecisionPolicy,
) -> Result<Complex64> {
    let grid = ProductGrid::new(z, tau, sigma, prec)?;
    let mut sum = Complex64::new(0.0, 0.0);
    let mut qj = Complex64::new(1.0, 0.0);
    for _ in 0..grid.rows {
        let mut qr = qj;
        for _ in 0..grid.cols {
            let u = qr * grid.q * grid.r * grid.x_inv;
            let v = qr * grid.x;
            sum += u / (1.0 - u) + v / (1.0 - v);
            qr *= grid.r;
        }
        qj *= grid.q;
    }
    Ok(Complex64::new(0.0, 2.0 * PI) * sum)
}

/// `ln Γ(z, τ, σ)` from the sine series, on the strip `0 < Im z < Im(τ+σ)`.
///
/// Each term is evaluated in the overflow-free form
/// `(x^j - (qr/x)^j) / (j (1-q^j)(1-r^j))` with `x = e^{2πiz}`, which equals
/// `-(i/2) sin(πj(2z-τ-σ)) / (j sin(πjτ) sin(πjσ))`.
pub fn log_ell_gamma_sum(arg: &GammaArg, prec: &PrecisionPolicy) -> Result<ApproxValue> {
    let (t, s) = (arg.tau.tau(), arg.sigma.tau());
    let z = arg.z;
    if !(z.im > 0.0 && z.im < t.im + s.im) {
        return domain(format!(
            "sine series needs 0 < Im z < Im(tau + sigma) = {}, got Im z = {}",
            t.im + s.im,
            z.im
        ));
    }
    let (q, r) = (expi2pi(t), expi2pi(s));
    let x = expi2pi(z);
    let y = q * r * expi2pi(-z);
    let decay = x.norm().max(y.norm());
    if !(decay < 1.0) {
        return domain("sine series terms do not decay at this z");
    }
    let rho = q.norm().max(r.norm());
    let lower = (1.0 - rho) * (1.0 - rho);
    let mut sum = Complex64::new(0.0, 0.0);
    let mut abs_sum = 0.0;
    let (mut xj, mut yj, mut qj, mut rj) = (
        Complex64::new(1.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(1.0, 0.0),
        Complex64::new(1.0, 0.0),
    );
    for j in 1..=prec.max_terms() {
        xj *= x;
        yj *= y;
        qj *= q;
        rj *= r;
        let term = (xj - yj) / (j as f64 * (1.0 - qj) * (1.0 - rj));
        sum += term;
        abs_sum += term.norm();
        let next = j as f64 + 1.0;
        let tail = 2.0 * decay.powf(next) / (next * (1.0 - decay) * lower);
        if tail <= prec.epsilon() {
            return Ok(ApproxValue::new(
                sum,
                tail + rounding_allowance(abs_sum, j),
                j,
            ));
        }
    }
    let next = prec.max_terms() as f64 + 1.0;
    let tail = 2.0 * decay.powf(next) / (next * (1.0 - decay) * lower);
    Err(Error::Truncation {
        partial: ApproxValue::new(sum, tail, prec.max_terms()),
    })
}

/// Euler's `Γ(z+1)` from `e^{-γz} Π_j (1+z/j)^{-1} e^{z/j}`.
///
/// The product is taken to `J ≥ 8|z|` factors; the remaining factors are
/// folded in through `Σ_{p≥2} (-z)^p/p · Σ_{n>J} n^{-p}`.
pub fn euler_gamma_fn(z: Complex64, prec: &PrecisionPolicy) -> Result<ApproxValue> {
    let cutoff = (8.0 * z.norm()).ceil().max(64.0) as usize;
    let mut log_sum = Complex64::new(0.0, 0.0);
    let mut abs_sum = 0.0;
    for j in 1..=cutoff {
        let w = z / j as f64;
        let factor = 1.0 + w;
        if factor.norm() < POLE_THRESHOLD {
            return Err(Error::Pole {
                detail: format!("Euler gamma pole: z + 1 = {} is a non-positive integer", z + 1.0),
                factor: None,
            });
        }
        let term = w - factor.ln();
        log_sum += term;
        abs_sum += term.norm();
    }
    // remaining factors: Σ_{p≥2} (-z)^p/p ζ_J(p), ratio |z|/J <= 1/8
    let jf = cutoff as f64;
    let mut tail = Complex64::new(0.0, 0.0);
    let mut em_err = 0.0;
    let mut zp = -z;
    let mut p = 2u32;
    let remainder = loop {
        zp *= -z;
        let (zeta_tail, err) = power_tail(f64::from(p), jf);
        let term = zp / f64::from(p) * zeta_tail;
        tail += term;
        em_err += zp.norm() / f64::from(p) * err;
        let ratio = z.norm() / jf;
        // Σ_{p'>p} |z|^{p'} J^{1-p'}/(p'-1) <= J ratio^{p+1} / (p (1 - ratio))
        let rest = jf * ratio.powi(p as i32 + 1) / (f64::from(p) * (1.0 - ratio));
        if rest <= prec.epsilon() * 1e-2 || p > 200 {
            break rest;
        }
        p += 1;
    };
    let log_gamma = -euler_gamma_const() * z + log_sum + tail;
    let value = log_gamma.exp();
    let log_err = remainder + em_err + rounding_allowance(abs_sum, cutoff);
    Ok(ApproxValue::new(value, value.norm() * log_err.exp_m1(), cutoff))
}

/// `ln Γ(z+1) ≈ -γz + Σ_{j=2}^{k_max} ζ(j)/j (-z)^j`, `|z| < 1`.
pub fn log_euler_gamma_series(
    z: Complex64,
    k_max: u32,
    prec: &PrecisionPolicy,
) -> Result<ApproxValue> {
    let modulus = z.norm();
    if !(modulus < 1.0) {
        return domain(format!("log-gamma series needs |z| < 1, got |z| = {modulus}"));
    }
    let mut value = -euler_gamma_const() * z;
    let mut err = 0.0;
    let mut power = -z;
    for j in 2..=k_max.max(1) {
        power *= -z;
        let zeta = zeta_int(j, prec)?;
        value += zeta.value * power / f64::from(j);
        err += zeta.err_bound * power.norm() / f64::from(j);
    }
    err += modulus.powi(k_max.max(1) as i32 + 1) / (1.0 - modulus);
    Ok(ApproxValue::new(value, err, k_max as usize))
}

/// Default circle radius for [`taylor_z_extraction`].
pub fn default_extraction_radius(pair: &WedgePair) -> f64 {
    0.5 * pair.sigma().im.min(pair.tau().im).min(1.0)
}

/// Taylor coefficients of `ln(Γ(z+σ,τ,σ)/Γ(σ,τ,σ))` with the default radius
/// and `max(64, 8·k_max)` samples.
pub fn taylor_z_extraction(
    pair: &WedgePair,
    k_max: usize,
    prec: &PrecisionPolicy,
) -> Result<TaylorSlice> {
    let samples = (8 * k_max).max(64);
    taylor_z_extraction_with(pair, k_max, default_extraction_radius(pair), samples, prec)
}

/// Discrete Cauchy-integral extraction on the circle `|z| = radius`.
pub fn taylor_z_extraction_with(
    pair: &WedgePair,
    k_max: usize,
    radius: f64,
    samples: usize,
    prec: &PrecisionPolicy,
) -> Result<TaylorSlice> {
    if k_max == 0 || k_max > 10 {
        return domain(format!("k_max must be in 1..=10, got {k_max}"));
    }
    if samples < 4 * k_max {
        return domain(format!("need at least {} samples, got {samples}", 4 * k_max));
    }
    let limit = pair.sigma().im.min(pair.tau().im).min(1.0);
    if !(radius > 0.0 && radius < limit) {
        return domain(format!(
            "extraction radius {radius} must lie in (0, {limit}); a pole or zero would fall inside the circle"
        ));
    }
    let (t, s) = (pair.tau(), pair.sigma());
    let base = log_ell_gamma_sum(&GammaArg::new(s, t, s)?, prec)?.value;
    let n = samples as f64;
    let mut values = Vec::with_capacity(samples);
    for m in 0..samples {
        let w = Complex64::from_polar(radius, 2.0 * PI * m as f64 / n);
        let v = log_ell_gamma_sum(&GammaArg::new(w + s, t, s)?, prec)?.value;
        values.push(v - base);
    }
    let coefficients = (1..=k_max)
        .map(|j| {
            let acc: Complex64 = values
                .iter()
                .enumerate()
                .map(|(m, v)| v * Complex64::from_polar(1.0, -2.0 * PI * (j * m) as f64 / n))
                .sum();
            acc / (n * radius.powi(j as i32))
        })
        .collect();
    Ok(TaylorSlice {
        coefficients,
        radius,
    })
}

/// `θ₀(σ,τ)^{1-z} Γ(σz,τ,σ)/Γ(σ,τ,σ)` for each `σ`; tends to Euler's `Γ(z)`
/// as `σ → 0` along the positive imaginary axis once `τ` is large.
pub fn scl_limit_probe(
    z: Complex64,
    sigma_seq: &[Complex64],
    tau_large: UpperHalfPoint,
    prec: &PrecisionPolicy,
) -> Result<Vec<Complex64>> {
    sigma_seq
        .iter()
        .map(|&sigma| {
            if !(sigma.re == 0.0 && sigma.im > 0.0) {
                return domain(format!("sigma = {sigma} must lie on the positive imaginary axis"));
            }
            let s = UpperHalfPoint::new(sigma)?;
            let theta = theta0(sigma, tau_large, prec)?.value;
            let num = ell_gamma(&GammaArg { z: sigma * z, tau: tau_large, sigma: s }, prec)?;
            let den = ell_gamma(&GammaArg { z: sigma, tau: tau_large, sigma: s }, prec)?;
            Ok(((1.0 - z) * theta.ln()).exp() * num.value / den.value)
        })
        .collect()
}

/// Relative residual of `Γ(z,τ,σ) = Γ(z+τ,τ,σ+τ) Γ(z,τ+σ,σ)`.
pub fn three_term_product_residual(arg: &GammaArg, prec: &PrecisionPolicy) -> Result<f64> {
    let (t, s) = (arg.tau.tau(), arg.sigma.tau());
    WedgePair::wedge(t, s)?;
    let lhs = ell_gamma(arg, prec)?;
    let a = ell_gamma(&GammaArg::new(arg.z + t, t, s + t)?, prec)?;
    let b = ell_gamma(&GammaArg::new(arg.z, t + s, s)?, prec)?;
    Ok((lhs.value - a.value * b.value).norm() / lhs.value.norm())
}

/// The three gamma functions entering the modular identity, as
/// `(argument map, τ', σ')` with the argument `w = (z - shift)/scale`.
struct ModularTriple {
    legs: [(Complex64, Complex64, Complex64, Complex64, f64); 3],
}

impl ModularTriple {
    fn new(tau: Complex64, sigma: Complex64) -> Self {
        let one = Complex64::new(1.0, 0.0);
        let zero = Complex64::new(0.0, 0.0);
        // f = lnΓ(z/τ, -1/τ, σ/τ) - lnΓ((z-τ)/σ, -τ/σ, -1/σ) - lnΓ(z, τ, σ)
        Self {
            legs: [
                (zero, tau, -one / tau, sigma / tau, 1.0),
                (tau, sigma, -tau / sigma, -one / sigma, -1.0),
                (zero, one, tau, sigma, -1.0),
            ],
        }
    }

    /// Points where one of the three gamma factors has a zero or a pole.
    fn singular_points(&self) -> Vec<Complex64> {
        let mut pts = Vec::new();
        for &(shift, scale, t, s, _) in &self.legs {
            for j in 0..5 {
                for l in 0..5 {
                    for n in -5..=5 {
                        let (jf, lf, nf) = (j as f64, l as f64, n as f64);
                        let pole = -t * jf - s * lf + nf;
                        let zero = t * (jf + 1.0) + s * (lf + 1.0) + nf;
                        pts.push(shift + scale * pole);
                        pts.push(shift + scale * zero);
                    }
                }
            }
        }
        pts
    }

    fn log_value(&self, z: Complex64, prec: &PrecisionPolicy) -> Result<Complex64> {
        let mut total = Complex64::new(0.0, 0.0);
        for &(shift, scale, t, s, sign) in &self.legs {
            let g = ell_gamma(&GammaArg::new((z - shift) / scale, t, s)?, prec)?;
            total += sign * g.value.ln();
        }
        Ok(total)
    }

    fn log_derivative(&self, z: Complex64, prec: &PrecisionPolicy) -> Result<Complex64> {
        let mut total = Complex64::new(0.0, 0.0);
        for &(shift, scale, t, s, sign) in &self.legs {
            total += sign * dlog_ell_gamma((z - shift) / scale, t, s, prec)? / scale;
        }
        Ok(total)
    }
}

/// Center of the sample disk: the grid point farthest from every zero and
/// pole of the three gamma factors, and that distance.
fn fit_center(triple: &ModularTriple, pair: &WedgePair) -> (Complex64, f64) {
    let pts = triple.singular_points();
    let height = pair.tau().im + pair.sigma().im;
    let clearance = |z: Complex64| {
        pts.iter()
            .map(|p| (z - p).norm())
            .fold(f64::INFINITY, f64::min)
    };
    let mut best = (Complex64::new(0.0, 0.5 * height), 0.0);
    let steps = 60;
    for a in 0..=steps {
        for b in 0..=steps {
            let z = Complex64::new(
                -1.0 + 2.0 * a as f64 / steps as f64,
                -0.5 * height + 2.0 * height * b as f64 / steps as f64,
            );
            let d = clearance(z);
            if d > best.1 {
                best = (z, d);
            }
        }
    }
    best
}

/// Defect `lnΓ(z/τ,-1/τ,σ/τ) - lnΓ((z-τ)/σ,-τ/σ,-1/σ) - lnΓ(z,τ,σ)` at each
/// sample, on one continuous branch: the value at the center plus the
/// integral of the logarithmic derivative along the radial segment.
fn defect_samples(
    triple: &ModularTriple,
    center: Complex64,
    points: &[Complex64],
    prec: &PrecisionPolicy,
) -> Result<Vec<Complex64>> {
    let rule = GaussLegendre::new(24).expect("degree >= 2");
    let base = triple.log_value(center, prec)?;
    points
        .iter()
        .map(|&p| {
            let step = p - center;
            let mut integral = Complex64::new(0.0, 0.0);
            for (node, weight) in rule.iter() {
                let t = 0.5 * (node + 1.0);
                integral += 0.5 * weight * triple.log_derivative(center + step * t, prec)?;
            }
            Ok(base + integral * step)
        })
        .collect()
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Least-squares fit of `iπQ̂(z)` of the given degree to the modular
/// three-term defect of `Γ`, sampled on a sunflower pattern in a disk.
pub fn fit_q_polynomial(
    pair: &WedgePair,
    degree: usize,
    sample_count: usize,
    radius: Option<f64>,
    prec: &PrecisionPolicy,
) -> Result<PolynomialFit> {
    if !pair.in_wedge() {
        return domain("the modular identity needs sigma/tau in the upper half-plane");
    }
    if sample_count < 2 * (degree + 1) {
        return domain(format!(
            "need at least {} samples for a degree-{degree} fit",
            2 * (degree + 1)
        ));
    }
    let triple = ModularTriple::new(pair.tau(), pair.sigma());
    let (center, clearance) = fit_center(&triple, pair);
    let radius = radius.unwrap_or(0.4 * clearance);
    if !(radius > 0.0 && radius < clearance) {
        return domain(format!(
            "sample radius {radius} reaches a zero or pole (clearance {clearance})"
        ));
    }
    let golden = PI * (3.0 - 5f64.sqrt());
    let points: Vec<Complex64> = (0..sample_count)
        .map(|i| {
            let rr = radius * ((i as f64 + 0.5) / sample_count as f64).sqrt();
            center + Complex64::from_polar(rr, golden * i as f64)
        })
        .collect();
    let values = defect_samples(&triple, center, &points, prec)?;

    // fit in the scaled variable u = (z - center)/radius
    let cols = degree + 1;
    let design = DMatrix::from_fn(sample_count, cols, |i, m| {
        ((points[i] - center) / radius).powu(m as u32)
    });
    let rhs = DVector::from_column_slice(&values);
    let svd = design.clone().svd(true, true);
    let coef = svd
        .solve(&rhs, 1e-14)
        .map_err(|e| Error::Domain(format!("least-squares solve failed: {e}")))?;
    let fitted = &design * &coef;
    let fit_residual = fitted
        .iter()
        .zip(values.iter())
        .map(|(a, b)| (a - b).norm())
        .fold(0.0, f64::max);

    // back to powers of z, and divide by iπ
    let ipi = Complex64::new(0.0, PI);
    let mut coefficients = vec![Complex64::new(0.0, 0.0); cols];
    for (m, cm) in coef.iter().enumerate() {
        let scaled = cm / radius.powi(m as i32);
        for (i, slot) in coefficients.iter_mut().enumerate().take(m + 1) {
            *slot += scaled * binomial(m, i) * (-center).powu((m - i) as u32);
        }
    }
    for c in &mut coefficients {
        *c /= ipi;
    }
    Ok(PolynomialFit {
        coefficients,
        fit_residual,
        center,
        radius,
    })
}

/// Fits the cubic `Q̂` of the modular three-term identity of `Γ`.
///
/// A misfit above `1e-7` that sits near a multiple of `2π` is reported as a
/// branch error.
pub fn fit_q_cubic(
    pair: &WedgePair,
    sample_count: usize,
    prec: &PrecisionPolicy,
) -> Result<CubicFit> {
    if sample_count < 8 {
        return domain(format!("need at least 8 samples, got {sample_count}"));
    }
    let fit = fit_q_polynomial(pair, 3, sample_count, None, prec)?;
    let turns = fit.fit_residual / (2.0 * PI);
    if fit.fit_residual > 1e-7 && turns > 0.5 && (turns - turns.round()).abs() < 0.1 {
        return Err(Error::Branch {
            misfit: fit.fit_residual,
        });
    }
    let c = &fit.coefficients;
    Ok(CubicFit {
        c0: c[0],
        c1: c[1],
        c2: c[2],
        c3: c[3],
        fit_residual: fit.fit_residual,
    })
}

/// Relative residual of `Γ(z+σ,τ,σ) = θ₀(z,τ) Γ(z,τ,σ)`.
pub fn functional_equation_residual(arg: &GammaArg, prec: &PrecisionPolicy) -> Result<f64> {
    let shifted = ell_gamma(&arg.with_z(arg.z + arg.sigma.tau()), prec)?;
    let base = ell_gamma(arg, prec)?;
    let theta = theta0(arg.z, arg.tau, prec)?;
    let rhs = theta.value * base.value;
    Ok((shifted.value - rhs).norm() / shifted.value.norm().max(rhs.norm()))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn std_arg(z: Complex64) -> GammaArg {
        GammaArg::new(z, c(0.2, 1.0), c(0.1, 0.8)).unwrap()
    }

    #[test]
    fn pole_at_origin() {
        let prec = PrecisionPolicy::default();
        match ell_gamma(&std_arg(c(0.0, 0.0)), &prec) {
            Err(Error::Pole { factor, .. }) => assert_eq!(factor, Some((0, 0))),
            other => panic!("expected pole, got {other:?}"),
        }
        // z = -τ is the (1, 0) pole
        match ell_gamma(&std_arg(c(-0.2, -1.0)), &prec) {
            Err(Error::Pole { factor, .. }) => assert_eq!(factor, Some((1, 0))),
            other => panic!("expected pole, got {other:?}"),
        }
    }

    #[test]
    fn symmetric_in_tau_sigma() {
        let prec = PrecisionPolicy::default();
        let z = c(0.31, 0.27);
        let a = ell_gamma(&GammaArg::new(z, c(0.2, 1.0), c(0.1, 0.8)).unwrap(), &prec).unwrap();
        let b = ell_gamma(&GammaArg::new(z, c(0.1, 0.8), c(0.2, 1.0)).unwrap(), &prec).unwrap();
        assert!((a.value - b.value).norm() <= 1e-12 * a.value.norm());
    }

    #[test]
    fn functional_equation_standard_point() {
        let prec = PrecisionPolicy::default();
        let res = functional_equation_residual(&std_arg(c(0.3, 0.2)), &prec).unwrap();
        assert!(res < 1e-10, "{res}");
    }

    #[test]
    fn sum_route_matches_product() {
        let prec = PrecisionPolicy::default();
        let (t, s) = (c(0.0, 1.1), c(0.0, 0.9));
        let center = GammaArg::new((t + s) / 2.0, t, s).unwrap();
        let log = log_ell_gamma_sum(&center, &prec).unwrap();
        assert!(log.value.norm() < 1e-15);
        let prod = ell_gamma(&center, &prec).unwrap();
        assert!((log.value.exp() - prod.value).norm() < 1e-9);

        for z in [c(0.1, 0.3), c(-0.4, 1.2), c(0.25, 1.7)] {
            let a = GammaArg::new(z, c(0.2, 1.0), c(0.1, 0.8)).unwrap();
            let log = log_ell_gamma_sum(&a, &prec).unwrap();
            let prod = ell_gamma(&a, &prec).unwrap();
            assert!((log.value.exp() - prod.value).norm() <= 1e-9 * prod.value.norm());
        }
    }

    #[test]
    fn sine_form_terms_match_rewritten_terms() {
        let (t, s, z) = (c(0.2, 1.0), c(0.1, 0.8), c(0.3, 0.6));
        let (q, r) = (expi2pi(t), expi2pi(s));
        let x = expi2pi(z);
        for j in 1..6u32 {
            let jf = f64::from(j);
            let sine = -c(0.0, 0.5) * (PI * jf * (2.0 * z - t - s)).sin()
                / (jf * (PI * jf * t).sin() * (PI * jf * s).sin());
            let rewritten = (x.powu(j) - (q * r / x).powu(j))
                / (jf * (1.0 - q.powu(j)) * (1.0 - r.powu(j)));
            assert!((sine - rewritten).norm() < 1e-13 * rewritten.norm().max(1e-300));
        }
    }

    #[test]
    fn sum_route_strip_and_decay() {
        let prec = PrecisionPolicy::default();
        assert!(matches!(
            log_ell_gamma_sum(&std_arg(c(0.1, -0.1)), &prec),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            log_ell_gamma_sum(&std_arg(c(0.1, 1.9)), &prec),
            Err(Error::Domain(_))
        ));
        // term magnitudes shrink for a strip-interior point
        let (t, s, z) = (c(0.2, 1.0), c(0.1, 0.8), c(0.3, 0.6));
        let (q, r) = (expi2pi(t), expi2pi(s));
        let x = expi2pi(z);
        let y = q * r / x;
        let terms: Vec<f64> = (1..20u32)
            .map(|j| {
                ((x.powu(j) - y.powu(j)) / (f64::from(j) * (1.0 - q.powu(j)) * (1.0 - r.powu(j))))
                    .norm()
            })
            .collect();
        assert!(terms.windows(2).skip(1).all(|w| w[1] < w[0]));
    }

    #[test]
    fn euler_gamma_values() {
        let prec = PrecisionPolicy::default();
        assert!((euler_gamma_fn(c(0.0, 0.0), &prec).unwrap().value - 1.0).norm() < 1e-15);
        let mut fact = 1.0;
        for n in 1..=5 {
            fact *= n as f64;
            let g = euler_gamma_fn(c(n as f64, 0.0), &prec).unwrap().value;
            assert!((g.re - fact).abs() < 1e-10 * fact, "n={n}");
        }
        // Γ(z+1) = zΓ(z): Γ(1.3) = 0.3 Γ(0.3), with Γ(0.3) = Γ((-0.7)+1)
        let a = euler_gamma_fn(c(0.3, 0.0), &prec).unwrap().value;
        let b = euler_gamma_fn(c(-0.7, 0.0), &prec).unwrap().value;
        assert!((a - 0.3 * b).norm() < 1e-10);
        assert!(matches!(euler_gamma_fn(c(-3.0, 0.0), &prec), Err(Error::Pole { .. })));
    }

    #[test]
    fn euler_gamma_near_one() {
        let prec = PrecisionPolicy::default();
        let h = 1e-4;
        let g = euler_gamma_fn(c(h, 0.0), &prec).unwrap().value;
        let linear = 1.0 - euler_gamma_const() * h;
        assert!((g.re - linear).abs() < 10.0 * h * h);
    }

    #[test]
    fn log_gamma_series() {
        let prec = PrecisionPolicy::default();
        let z = c(0.2, 0.0);
        let series = log_euler_gamma_series(z, 30, &prec).unwrap();
        let direct = euler_gamma_fn(z, &prec).unwrap().value.ln();
        assert!((series.value - direct).norm() < 1e-10);
        assert_eq!(log_euler_gamma_series(c(0.0, 0.0), 10, &prec).unwrap().value, c(0.0, 0.0));
        let step = 1e-5;
        let fwd = log_euler_gamma_series(c(step, 0.0), 30, &prec).unwrap().value;
        let bwd = log_euler_gamma_series(c(-step, 0.0), 30, &prec).unwrap().value;
        let slope = (fwd - bwd) / (2.0 * step);
        assert!((slope.re + euler_gamma_const()).abs() < 1e-8);
        assert!(matches!(
            log_euler_gamma_series(c(1.0, 0.0), 5, &prec),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn taylor_radius_guard() {
        let prec = PrecisionPolicy::default();
        let pair = WedgePair::new(c(0.0, 1.2), c(0.0, 0.7)).unwrap();
        assert!(matches!(
            taylor_z_extraction_with(&pair, 6, 0.75, 64, &prec),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            taylor_z_extraction_with(&pair, 11, 0.3, 64, &prec),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn taylor_vanishes_near_cusp() {
        let prec = PrecisionPolicy::default();
        let pair = WedgePair::new(c(0.0, 9.0), c(0.0, 8.0)).unwrap();
        let slice = taylor_z_extraction(&pair, 4, &prec).unwrap();
        assert!(slice.coefficients.iter().all(|c| c.norm() < 1e-12));
    }

    #[test]
    fn scl_probe_identities() {
        let prec = PrecisionPolicy::default();
        let tau = UpperHalfPoint::new(c(0.0, 40.0)).unwrap();
        let sigmas = [c(0.0, 0.05), c(0.0, 0.02)];
        for v in scl_limit_probe(c(1.0, 0.0), &sigmas, tau, &prec).unwrap() {
            assert!((v - 1.0).norm() < 1e-12);
        }
        assert!(scl_limit_probe(c(2.0, 0.0), &[c(0.1, 0.05)], tau, &prec).is_err());
    }

    #[test]
    fn three_term_product_standard() {
        let prec = PrecisionPolicy::default();
        let res = three_term_product_residual(&std_arg(c(0.3, 0.2)), &prec).unwrap();
        assert!(res < 1e-10, "{res}");
        // σ/τ not in H
        let bad = GammaArg::new(c(0.3, 0.2), c(0.1, 0.8), c(0.2, 1.0)).unwrap();
        assert!(matches!(three_term_product_residual(&bad, &prec), Err(Error::Domain(_))));
    }
}
