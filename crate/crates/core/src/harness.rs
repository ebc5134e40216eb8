//! Residual checks for the identities satisfied by `Z_k`, `G_k` and `Γ`, the
//! double-limit probes at the cusp, and the SL(3,ℤ) cocycle evaluator.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::divisor::{d_k, gk_qexp, NomePoint, UpperHalfPoint};
use crate::gamma::{
    fit_q_cubic, functional_equation_residual, taylor_z_extraction, three_term_product_residual,
    GammaArg,
};
use crate::numerics::{domain, euler_gamma_const, zeta_int, Error, PrecisionPolicy, Result};
use crate::zeta_values::{
    anomaly_a, lipschitz_both_sides, z_k, z_k_even_split, z_k_extended, z_k_homogeneous,
    ExtendedPair, HomogeneousTriple, WedgePair,
};

pub const ADDITIVE_TOLERANCE: f64 = 1e-9;
pub const MODULAR_TOLERANCE: f64 = 1e-8;
pub const CUBIC_FIT_TOLERANCE: f64 = 1e-7;

/// Outcome of one identity check.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualReport {
    pub identity_name: String,
    pub parameters: BTreeMap<String, String>,
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl ResidualReport {
    pub fn new(
        identity_name: impl Into<String>,
        parameters: BTreeMap<String, String>,
        residual: f64,
        tolerance: f64,
    ) -> Self {
        Self {
            identity_name: identity_name.into(),
            parameters,
            residual,
            tolerance,
            pass: residual <= tolerance,
        }
    }
}

/// Sorts reports by name, then parameters.
pub fn sort_reports(reports: &mut [ResidualReport]) {
    reports.sort_by(|a, b| {
        a.identity_name
            .cmp(&b.identity_name)
            .then_with(|| a.parameters.cmp(&b.parameters))
    });
}

/// `"re,im"`, the literal format the command line accepts.
pub fn fmt_complex(z: Complex64) -> String {
    format!("{},{}", z.re, z.im)
}

fn params(entries: &[(&str, String)]) -> BTreeMap<String, String> {
    entries
        .iter()
        .map(|(k, v)| (k.to_string(), v.clone()))
        .collect()
}

fn pair_params(k: u32, pair: &WedgePair) -> BTreeMap<String, String> {
    params(&[
        ("k", k.to_string()),
        ("tau", fmt_complex(pair.tau())),
        ("sigma", fmt_complex(pair.sigma())),
    ])
}

/// `Z_k(τ,σ) - Z_k(τ,τ+σ) - Z_k(τ+σ,σ)`.
pub fn check_three_term_additive(
    k: u32,
    pair: &WedgePair,
    prec: &PrecisionPolicy,
) -> Result<ResidualReport> {
    if !(1..=8).contains(&k) {
        return domain(format!("k must be in 1..=8, got {k}"));
    }
    let (t, s) = (pair.tau(), pair.sigma());
    let lhs = z_k(k, pair, prec)?;
    let a = z_k(k, &WedgePair::new(t, t + s)?, prec)?;
    let b = z_k(k, &WedgePair::new(t + s, s)?, prec)?;
    let residual = (lhs.value - a.value - b.value).norm();
    Ok(ResidualReport::new(
        "three-term-additive",
        pair_params(k, pair),
        residual,
        ADDITIVE_TOLERANCE,
    ))
}

/// `Z_k(τ,σ) - τ^{-k} Z_k(-1/τ,σ/τ) - (-σ)^{-k} Z_k(-τ/σ,-1/σ) - iπ a_k`, with
/// the `a_k` term present only for `k ≤ 3` and `with_anomaly`.
pub fn check_three_term_modular(
    k: u32,
    pair: &WedgePair,
    with_anomaly: bool,
    prec: &PrecisionPolicy,
) -> Result<ResidualReport> {
    if !(1..=8).contains(&k) {
        return domain(format!("k must be in 1..=8, got {k}"));
    }
    if !pair.in_wedge() {
        return domain("the modular relation needs sigma/tau in the upper half-plane");
    }
    let (t, s) = (pair.tau(), pair.sigma());
    let one = Complex64::new(1.0, 0.0);
    let kk = -(k as i32);
    let lhs = z_k(k, pair, prec)?;
    let a = z_k_extended(k, &ExtendedPair::new(-one / t, s / t)?, prec)?;
    let b = z_k_extended(k, &ExtendedPair::new(-t / s, -one / s)?, prec)?;
    let mut defect = lhs.value - t.powi(kk) * a.value - (-s).powi(kk) * b.value;
    if with_anomaly && k <= 3 {
        defect -= Complex64::new(0.0, PI) * anomaly_a(k, t, s)?;
    }
    let mut p = pair_params(k, pair);
    p.insert("anomaly".into(), with_anomaly.to_string());
    Ok(ResidualReport::new(
        "three-term-modular",
        p,
        defect.norm(),
        MODULAR_TOLERANCE,
    ))
}

/// Builds `Z(τ,σ) = G_k(σ) - G_k(τ)` from the q-expansion and checks both
/// three-term relations, plus agreement with the even split of `Z_k`.
pub fn check_prop1_forward(
    k: u32,
    pair: &WedgePair,
    prec: &PrecisionPolicy,
) -> Result<ResidualReport> {
    if k < 4 || k % 2 == 1 {
        return domain(format!("the forward check needs even k >= 4, got {k}"));
    }
    if !pair.in_wedge() {
        return domain("the modular relation needs sigma/tau in the upper half-plane");
    }
    let g = |tau: Complex64| -> Result<Complex64> {
        Ok(gk_qexp(k, UpperHalfPoint::new(tau)?, prec)?.value)
    };
    let zz = |tau: Complex64, sigma: Complex64| -> Result<Complex64> { Ok(g(sigma)? - g(tau)?) };
    let (t, s) = (pair.tau(), pair.sigma());
    let one = Complex64::new(1.0, 0.0);
    let kk = -(k as i32);
    let base = zz(t, s)?;
    let additive = (base - zz(t, t + s)? - zz(t + s, s)?).norm();
    let modular = (base
        - t.powi(kk) * zz(-one / t, s / t)?
        - s.powi(kk) * zz(-t / s, -one / s)?)
    .norm();
    let matched = (base - z_k_even_split(k, pair, prec)?.value).norm();
    Ok(ResidualReport::new(
        "prop1-forward",
        pair_params(k, pair),
        additive.max(modular).max(matched),
        ADDITIVE_TOLERANCE,
    ))
}

/// One row of a limit table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct LimitRow {
    pub sigma: Complex64,
    pub value: Complex64,
    pub error: f64,
}

fn check_imaginary_axis(sigma: Complex64) -> Result<()> {
    if sigma.re == 0.0 && sigma.im > 0.0 {
        Ok(())
    } else {
        domain(format!("sigma = {sigma} must lie on the positive imaginary axis"))
    }
}

/// `σ^k Z_k(τ,σ)` against `ζ(k)` for each `σ`.
pub fn limit_zeta_probe(
    k: u32,
    sigma_list: &[Complex64],
    tau_large: UpperHalfPoint,
    prec: &PrecisionPolicy,
) -> Result<Vec<LimitRow>> {
    if !(2..=6).contains(&k) {
        return domain(format!("k must be in 2..=6, got {k}"));
    }
    let zeta = zeta_int(k, prec)?.value;
    sigma_list
        .iter()
        .map(|&sigma| {
            check_imaginary_axis(sigma)?;
            let pair = WedgePair::new(tau_large.tau(), sigma)?;
            let value = sigma.powi(k as i32) * z_k(k, &pair, prec)?.value;
            Ok(LimitRow {
                sigma,
                value,
                error: (value - zeta).norm(),
            })
        })
        .collect()
}

/// `σ Z_1(τ,σ) + ln(-2πiσ)` against Euler's constant.
pub fn limit_euler_gamma_probe(
    sigma_list: &[Complex64],
    tau_large: UpperHalfPoint,
    prec: &PrecisionPolicy,
) -> Result<Vec<LimitRow>> {
    let gamma = euler_gamma_const();
    sigma_list
        .iter()
        .map(|&sigma| {
            check_imaginary_axis(sigma)?;
            let pair = WedgePair::new(tau_large.tau(), sigma)?;
            let log = (Complex64::new(0.0, -2.0 * PI) * sigma).ln();
            let value = sigma * z_k(1, &pair, prec)?.value + log;
            Ok(LimitRow {
                sigma,
                value,
                error: (value - gamma).norm(),
            })
        })
        .collect()
}

/// `σ D_1(e^{2πiσ}) + ln(-2πiσ)`, the `τ`-free form of the same limit.
pub fn limit_euler_gamma_d1(sigma_list: &[Complex64], prec: &PrecisionPolicy) -> Result<Vec<LimitRow>> {
    let gamma = euler_gamma_const();
    sigma_list
        .iter()
        .map(|&sigma| {
            check_imaginary_axis(sigma)?;
            let r = UpperHalfPoint::new(sigma)?.nome();
            let log = (Complex64::new(0.0, -2.0 * PI) * sigma).ln();
            let value = sigma * d_k(1, r, prec)?.value + log;
            Ok(LimitRow {
                sigma,
                value,
                error: (value - gamma).norm(),
            })
        })
        .collect()
}

/// A 3×3 integer matrix of determinant one.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct IntegerMatrix3([[i64; 3]; 3]);

impl IntegerMatrix3 {
    pub fn new(entries: [[i64; 3]; 3]) -> Result<Self> {
        let m = Self(entries);
        if m.det() != 1 {
            return domain(format!("determinant {} != 1", m.det()));
        }
        Ok(m)
    }

    pub fn identity() -> Self {
        Self([[1, 0, 0], [0, 1, 0], [0, 0, 1]])
    }

    /// `e_ij^{exp}`: identity plus `exp` at row `i`, column `j` (1-based).
    pub fn elementary(i: usize, j: usize, exp: i64) -> Self {
        let mut m = Self::identity();
        m.0[i - 1][j - 1] = exp;
        m
    }

    pub fn entries(&self) -> [[i64; 3]; 3] {
        self.0
    }

    pub fn det(&self) -> i64 {
        let a = &self.0;
        a[0][0] * (a[1][1] * a[2][2] - a[1][2] * a[2][1])
            - a[0][1] * (a[1][0] * a[2][2] - a[1][2] * a[2][0])
            + a[0][2] * (a[1][0] * a[2][1] - a[1][1] * a[2][0])
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = [[0i64; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|m| self.0[i][m] * other.0[m][j]).sum();
            }
        }
        Self(out)
    }

    /// Column action `x ↦ g x`.
    pub fn apply(&self, x: [Complex64; 3]) -> [Complex64; 3] {
        let mut out = [Complex64::new(0.0, 0.0); 3];
        for (i, slot) in out.iter_mut().enumerate() {
            *slot = (0..3).map(|m| x[m] * self.0[i][m] as f64).sum();
        }
        out
    }
}

/// Word in the generators `e_ij^{±1}`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GeneratorWord(Vec<(usize, usize, i64)>);

impl GeneratorWord {
    pub fn new(letters: Vec<(usize, usize, i64)>) -> Result<Self> {
        for &(i, j, e) in &letters {
            if i == j || !(1..=3).contains(&i) || !(1..=3).contains(&j) || e.abs() != 1 {
                return domain(format!("invalid letter ({i}, {j}, {e})"));
            }
        }
        Ok(Self(letters))
    }

    pub fn letters(&self) -> &[(usize, usize, i64)] {
        &self.0
    }

    /// `[e_ab, e_bc] = e_ab e_bc e_ab^{-1} e_bc^{-1}`.
    pub fn commutator(a: usize, b: usize, c: usize) -> Result<Self> {
        Self::new(vec![(a, b, 1), (b, c, 1), (a, b, -1), (b, c, -1)])
    }

    pub fn inverse(&self) -> Self {
        Self(self.0.iter().rev().map(|&(i, j, e)| (i, j, -e)).collect())
    }
}

pub fn word_to_matrix(word: &GeneratorWord) -> IntegerMatrix3 {
    word.0
        .iter()
        .fold(IntegerMatrix3::identity(), |acc, &(i, j, e)| {
            acc.mul(&IntegerMatrix3::elementary(i, j, e))
        })
}

/// `φ_{e_ij}(x)`: `Z̃_k(x₁-x₂, x₁, x₃)` for `e₁₂`, `Z̃_k(x₂-x₃, x₃, x₁)` for
/// `e₃₂`, zero otherwise.
fn generator_value(
    k: u32,
    i: usize,
    j: usize,
    x: [Complex64; 3],
    prec: &PrecisionPolicy,
) -> Result<Complex64> {
    let triple = match (i, j) {
        (1, 2) => [x[0] - x[1], x[0], x[2]],
        (3, 2) => [x[1] - x[2], x[2], x[0]],
        _ => return Ok(Complex64::new(0.0, 0.0)),
    };
    Ok(z_k_homogeneous(k, &HomogeneousTriple::from_array(triple)?, prec)?.value)
}

/// `φ_w(x)` by `φ_{gh}(x) = φ_g(x) + φ_h(g^{-1}x)` and
/// `φ_{g^{-1}}(x) = -φ_g(gx)`, with `g` acting on columns.
pub fn cocycle_eval(
    k: u32,
    word: &GeneratorWord,
    x: &HomogeneousTriple,
    prec: &PrecisionPolicy,
) -> Result<Complex64> {
    if k < 4 {
        return domain(format!("cocycle needs k >= 4, got {k}"));
    }
    let mut point = x.coords();
    let mut total = Complex64::new(0.0, 0.0);
    for (pos, &(i, j, e)) in word.0.iter().enumerate() {
        let inverse = IntegerMatrix3::elementary(i, j, -e);
        let value = if e > 0 {
            generator_value(k, i, j, point, prec)
        } else {
            generator_value(k, i, j, inverse.apply(point), prec).map(|v| -v)
        };
        total += value.map_err(|err| match err {
            Error::Domain(msg) => Error::Domain(format!(
                "letter {pos} (e_{i}{j}^{e}) leaves the domain: {msg}"
            )),
            other => other,
        })?;
        point = inverse.apply(point);
    }
    Ok(total)
}

/// Compares `φ` on the commutator word `[e₁₂, e₂₃]` with the direct letter
/// `e₁₃`, whose generator value is zero.
pub fn check_cocycle_commutator(
    k: u32,
    x: &HomogeneousTriple,
    prec: &PrecisionPolicy,
) -> Result<ResidualReport> {
    let word = GeneratorWord::commutator(1, 2, 3)?;
    let direct = GeneratorWord::new(vec![(1, 3, 1)])?;
    let a = cocycle_eval(k, &word, x, prec)?;
    let b = cocycle_eval(k, &direct, x, prec)?;
    let [x1, x2, x3] = x.coords();
    Ok(ResidualReport::new(
        "cocycle-commutator",
        params(&[
            ("k", k.to_string()),
            ("x1", fmt_complex(x1)),
            ("x2", fmt_complex(x2)),
            ("x3", fmt_complex(x3)),
        ]),
        (a - b).norm(),
        MODULAR_TOLERANCE,
    ))
}

/// Relative residual of `Γ(z+σ,τ,σ) = θ₀(z,τ) Γ(z,τ,σ)`.
pub fn check_functional_equation(arg: &GammaArg, prec: &PrecisionPolicy) -> Result<ResidualReport> {
    let residual = functional_equation_residual(arg, prec)?;
    Ok(ResidualReport::new(
        "functional-equation",
        params(&[
            ("z", fmt_complex(arg.z)),
            ("tau", fmt_complex(arg.tau.tau())),
            ("sigma", fmt_complex(arg.sigma.tau())),
        ]),
        residual,
        1e-10,
    ))
}

/// Max over `j ≤ k_max` of `|c_j - (-1)^j Z_j/j|`.
pub fn check_log_eg(k_max: usize, pair: &WedgePair, prec: &PrecisionPolicy) -> Result<ResidualReport> {
    let slice = taylor_z_extraction(pair, k_max, prec)?;
    let mut residual: f64 = 0.0;
    for j in 1..=k_max {
        let z = z_k(j as u32, pair, prec)?.value;
        let sign = if j % 2 == 0 { 1.0 } else { -1.0 };
        residual = residual.max((slice.coefficient(j) - sign * z / j as f64).norm());
    }
    Ok(ResidualReport::new(
        "taylor-link",
        pair_params(k_max as u32, pair),
        residual,
        MODULAR_TOLERANCE,
    ))
}

/// Relative residual of `Γ(z,τ,σ) = Γ(z+τ,τ,σ+τ) Γ(z,τ+σ,σ)`.
pub fn check_thm2_first(arg: &GammaArg, prec: &PrecisionPolicy) -> Result<ResidualReport> {
    let residual = three_term_product_residual(arg, prec)?;
    Ok(ResidualReport::new(
        "gamma-three-term-product",
        params(&[
            ("z", fmt_complex(arg.z)),
            ("tau", fmt_complex(arg.tau.tau())),
            ("sigma", fmt_complex(arg.sigma.tau())),
        ]),
        residual,
        1e-10,
    ))
}

/// Misfit of the cubic `Q̂` in the modular identity of `Γ`.
pub fn check_thm2_q(
    pair: &WedgePair,
    sample_count: usize,
    prec: &PrecisionPolicy,
) -> Result<ResidualReport> {
    let fit = fit_q_cubic(pair, sample_count, prec)?;
    let mut p = pair_params(3, pair);
    p.remove("k");
    p.insert("samples".into(), sample_count.to_string());
    Ok(ResidualReport::new(
        "gamma-modular-cubic",
        p,
        fit.fit_residual,
        CUBIC_FIT_TOLERANCE,
    ))
}

/// Gap between the two sides of the Lipschitz formula.
pub fn check_lipschitz(k: u32, rho: Complex64, prec: &PrecisionPolicy) -> Result<ResidualReport> {
    let (left, right) = lipschitz_both_sides(k, rho, prec)?;
    Ok(ResidualReport::new(
        "lipschitz",
        params(&[("k", k.to_string()), ("rho", fmt_complex(rho))]),
        (left.value - right.value).norm(),
        1e-10,
    ))
}

/// `|G_k(-1/τ) - τ^k G_k(τ)|` on the q-expansion route, with its combined
/// error bound.
pub fn modularity_defect(k: u32, tau: UpperHalfPoint, prec: &PrecisionPolicy) -> Result<(f64, f64)> {
    let t = tau.tau();
    let inv = UpperHalfPoint::new(-1.0 / t)?;
    let a = gk_qexp(k, inv, prec)?;
    let b = gk_qexp(k, tau, prec)?;
    let scale = t.powi(k as i32);
    let defect = (a.value - scale * b.value).norm();
    let bound = a.err_bound + scale.norm() * b.err_bound;
    Ok((defect, bound))
}

/// `D_k(q)` at a point of the upper half-plane, for tables.
pub fn d_k_at(k: u32, tau: Complex64, prec: &PrecisionPolicy) -> Result<Complex64> {
    Ok(d_k(k, NomePoint::new(crate::numerics::expi2pi(tau))?, prec)?.value)
}
