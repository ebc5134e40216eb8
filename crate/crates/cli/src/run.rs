//! Dispatch from parsed requests to the library.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::time::Instant;

use ezv_core::*;
use num_complex::Complex64;

use crate::envelope::{Cell, Envelope, Num, RequestEcho, Table};
use crate::{EvalTarget, LimitTarget, Opts, TableTarget, VerifyTarget};

pub enum Output {
    Envelopes(Vec<Envelope>),
    Table(Table),
}

impl Output {
    pub fn all_pass(&self) -> bool {
        match self {
            Output::Envelopes(items) => items.iter().all(|e| e.pass != Some(false)),
            Output::Table(_) => true,
        }
    }
}

pub enum Failure {
    Usage(String),
    Core {
        request: Option<RequestEcho>,
        error: Error,
    },
}

pub fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Domain(_) => 2,
        Error::Pole { .. } => 3,
        Error::Truncation { .. } => 4,
        Error::Branch { .. } => 1,
    }
}

type Params = BTreeMap<String, String>;
type Job<T> = Box<dyn Fn() -> Result<T>>;

fn params(entries: &[(&str, String)]) -> Params {
    entries.iter().map(|(k, v)| (k.to_string(), v.clone())).collect()
}

fn policy(o: &Opts) -> std::result::Result<PrecisionPolicy, Failure> {
    let mut p = PrecisionPolicy::default();
    let usage = |e: Error| Failure::Usage(e.to_string());
    if let Some(eps) = o.epsilon {
        p = p.with_epsilon(eps).map_err(usage)?;
    }
    if let Some(n) = o.max_terms {
        p = p.with_max_terms(n).map_err(usage)?;
    }
    if let Some(r) = o.radius {
        p = p.with_lattice_radius(r).map_err(usage)?;
    }
    Ok(p)
}

struct Ctx {
    subcommand: &'static str,
    target: &'static str,
    prec: PrecisionPolicy,
}

impl Ctx {
    fn echo(&self, params: Params) -> RequestEcho {
        RequestEcho {
            subcommand: self.subcommand.into(),
            target: self.target.into(),
            params,
            precision: (&self.prec).into(),
        }
    }

    fn run<T>(&self, params: &Params, job: &Job<T>) -> std::result::Result<(T, f64), Failure> {
        let start = Instant::now();
        let value = job().map_err(|error| Failure::Core {
            request: Some(self.echo(params.clone())),
            error,
        })?;
        Ok((value, start.elapsed().as_secs_f64() * 1e3))
    }
}

fn require_k(o: &Opts, target: &str) -> std::result::Result<u32, Failure> {
    o.k.ok_or_else(|| Failure::Usage(format!("{target} needs --k")))
}

fn target_name<T: clap::ValueEnum>(t: T) -> &'static str {
    let name = t.to_possible_value().expect("named target").get_name().to_string();
    Box::leak(name.into_boxed_str())
}

struct Inputs {
    tau: Complex64,
    sigma: Complex64,
    z: Complex64,
}

fn inputs(o: &Opts) -> Inputs {
    let std = WedgePair::standard();
    Inputs {
        tau: o.tau.unwrap_or(std.tau()),
        sigma: o.sigma.unwrap_or(std.sigma()),
        z: o.z.unwrap_or(Complex64::new(0.3, 0.2)),
    }
}

pub fn eval(target: EvalTarget, o: &Opts) -> std::result::Result<Output, Failure> {
    let prec = policy(o)?;
    let ctx = Ctx {
        subcommand: "eval",
        target: target_name(target),
        prec,
    };
    let Inputs { tau, sigma, z } = inputs(o);
    let (p, job): (Params, Job<ApproxValue>) = match target {
        EvalTarget::Zk | EvalTarget::ZkLattice => {
            let k = require_k(o, ctx.target)?;
            let p = params(&[("k", k.to_string()), ("tau", fmt_complex(tau)), ("sigma", fmt_complex(sigma))]);
            let lattice = target == EvalTarget::ZkLattice;
            (
                p,
                Box::new(move || {
                    let pair = WedgePair::new(tau, sigma)?;
                    if lattice {
                        z_k_lattice(k, &pair, &prec)
                    } else {
                        z_k(k, &pair, &prec)
                    }
                }),
            )
        }
        EvalTarget::Dk => {
            let k = require_k(o, ctx.target)?;
            let p = params(&[("k", k.to_string()), ("tau", fmt_complex(tau))]);
            (
                p,
                Box::new(move || d_k(k, UpperHalfPoint::new(tau)?.nome(), &prec)),
            )
        }
        EvalTarget::Theta0 => {
            let p = params(&[("z", fmt_complex(z)), ("tau", fmt_complex(tau))]);
            (p, Box::new(move || theta0(z, UpperHalfPoint::new(tau)?, &prec)))
        }
        EvalTarget::EllGamma | EvalTarget::LogGammaSum => {
            let p = params(&[("z", fmt_complex(z)), ("tau", fmt_complex(tau)), ("sigma", fmt_complex(sigma))]);
            let sum = target == EvalTarget::LogGammaSum;
            (
                p,
                Box::new(move || {
                    let arg = GammaArg::new(z, tau, sigma)?;
                    if sum {
                        log_ell_gamma_sum(&arg, &prec)
                    } else {
                        ell_gamma(&arg, &prec)
                    }
                }),
            )
        }
        EvalTarget::Eisenstein | EvalTarget::Gk => {
            let k = require_k(o, ctx.target)?;
            let p = params(&[("k", k.to_string()), ("tau", fmt_complex(tau))]);
            let lattice = target == EvalTarget::Eisenstein;
            (
                p,
                Box::new(move || {
                    let t = UpperHalfPoint::new(tau)?;
                    if lattice {
                        eisenstein_lattice(k, t, &prec)
                    } else {
                        gk_qexp(k, t, &prec)
                    }
                }),
            )
        }
        EvalTarget::Zeta => {
            let k = require_k(o, ctx.target)?;
            (params(&[("k", k.to_string())]), Box::new(move || zeta_int(k, &prec)))
        }
    };
    let (v, ms) = ctx.run(&p, &job)?;
    Ok(Output::Envelopes(vec![Envelope::approx(ctx.echo(p), &v, ms)]))
}

const COCYCLE_POINT: [Complex64; 3] = [
    Complex64::new(0.3, 1.1),
    Complex64::new(-0.2, 0.9),
    Complex64::new(1.0, 0.05),
];

pub fn verify(target: VerifyTarget, o: &Opts) -> std::result::Result<Output, Failure> {
    let prec = policy(o)?;
    let ctx = Ctx {
        subcommand: "verify",
        target: target_name(target),
        prec,
    };
    let Inputs { tau, sigma, z } = inputs(o);
    let ks = |default: &[u32]| o.k.map(|k| vec![k]).unwrap_or_else(|| default.to_vec());
    let pair_p = |k: u32| params(&[("k", k.to_string()), ("tau", fmt_complex(tau)), ("sigma", fmt_complex(sigma))]);
    let gamma_p = params(&[("z", fmt_complex(z)), ("tau", fmt_complex(tau)), ("sigma", fmt_complex(sigma))]);
    let with_anomaly = !o.no_anomaly;

    let jobs: Vec<(Params, Job<ResidualReport>)> = match target {
        VerifyTarget::ThreeTermAdd => ks(&[1, 2, 3, 4, 5, 6, 7, 8])
            .into_iter()
            .map(|k| {
                let job: Job<ResidualReport> =
                    Box::new(move || check_three_term_additive(k, &WedgePair::new(tau, sigma)?, &prec));
                (pair_p(k), job)
            })
            .collect(),
        VerifyTarget::ThreeTermMod => ks(&[1, 2, 3, 4, 5, 6, 7, 8])
            .into_iter()
            .map(|k| {
                let mut p = pair_p(k);
                p.insert("anomaly".into(), with_anomaly.to_string());
                let job: Job<ResidualReport> = Box::new(move || {
                    check_three_term_modular(k, &WedgePair::new(tau, sigma)?, with_anomaly, &prec)
                });
                (p, job)
            })
            .collect(),
        VerifyTarget::Prop1 => ks(&[4, 6, 8])
            .into_iter()
            .map(|k| {
                let job: Job<ResidualReport> =
                    Box::new(move || check_prop1_forward(k, &WedgePair::new(tau, sigma)?, &prec));
                (pair_p(k), job)
            })
            .collect(),
        VerifyTarget::FuncEq => vec![(
            gamma_p,
            Box::new(move || check_functional_equation(&GammaArg::new(z, tau, sigma)?, &prec)),
        )],
        VerifyTarget::Thm2First => vec![(
            gamma_p,
            Box::new(move || check_thm2_first(&GammaArg::new(z, tau, sigma)?, &prec)),
        )],
        VerifyTarget::LogEg => {
            let kmax = o.kmax.unwrap_or(6) as usize;
            let mut p = pair_p(kmax as u32);
            p.remove("k");
            p.insert("kmax".into(), kmax.to_string());
            vec![(p, Box::new(move || check_log_eg(kmax, &WedgePair::new(tau, sigma)?, &prec)))]
        }
        VerifyTarget::Thm2Q => {
            let samples = o.samples.unwrap_or(24);
            let mut p = pair_p(3);
            p.remove("k");
            p.insert("samples".into(), samples.to_string());
            vec![(p, Box::new(move || check_thm2_q(&WedgePair::new(tau, sigma)?, samples, &prec)))]
        }
        VerifyTarget::Lipschitz => {
            let rho = o.rho.unwrap_or(Complex64::new(0.0, 1.0));
            ks(&[2, 5])
                .into_iter()
                .map(|k| {
                    let job: Job<ResidualReport> = Box::new(move || check_lipschitz(k, rho, &prec));
                    (params(&[("k", k.to_string()), ("rho", fmt_complex(rho))]), job)
                })
                .collect()
        }
        VerifyTarget::Cocycle => {
            let x = [
                o.x1.unwrap_or(COCYCLE_POINT[0]),
                o.x2.unwrap_or(COCYCLE_POINT[1]),
                o.x3.unwrap_or(COCYCLE_POINT[2]),
            ];
            ks(&[4])
                .into_iter()
                .map(|k| {
                    let p = params(&[
                        ("k", k.to_string()),
                        ("x1", fmt_complex(x[0])),
                        ("x2", fmt_complex(x[1])),
                        ("x3", fmt_complex(x[2])),
                    ]);
                    let job: Job<ResidualReport> =
                        Box::new(move || check_cocycle_commutator(k, &HomogeneousTriple::from_array(x)?, &prec));
                    (p, job)
                })
                .collect()
        }
    };

    let mut out = Vec::with_capacity(jobs.len());
    for (p, job) in &jobs {
        let (report, ms) = ctx.run(p, job)?;
        let mut echoed = report.parameters.clone();
        echoed.insert("identity".into(), report.identity_name.clone());
        echoed.insert("tolerance".into(), crate::envelope::fmt_num(report.tolerance));
        out.push(Envelope {
            request: ctx.echo(echoed),
            value: None,
            err_bound: None,
            residual: Some(Num(report.residual)),
            pass: Some(report.pass),
            terms_used: None,
            wall_time_ms: Num(ms),
        });
    }
    Ok(Output::Envelopes(out))
}

pub fn limits(target: LimitTarget, o: &Opts) -> std::result::Result<Output, Failure> {
    let prec = policy(o)?;
    let ctx = Ctx {
        subcommand: "limits",
        target: target_name(target),
        prec,
    };
    let tau = o.tau.unwrap_or(Complex64::new(0.0, 40.0));
    let sigmas = o
        .sigmas
        .clone()
        .map(|s| s.0)
        .unwrap_or_else(|| [0.05, 0.02, 0.01].map(|s| Complex64::new(0.0, s)).to_vec());
    let k = o.k.unwrap_or(2);
    let z = o.z.unwrap_or(Complex64::new(2.0, 0.0));

    let mut base = params(&[("tau", fmt_complex(tau))]);
    match target {
        LimitTarget::ZetaLimit => {
            base.insert("k".into(), k.to_string());
        }
        LimitTarget::SclLimit => {
            base.insert("z".into(), fmt_complex(z));
        }
        LimitTarget::GammaLimit => {}
    }

    let mut out = Vec::with_capacity(sigmas.len());
    for sigma in sigmas {
        let mut p = base.clone();
        p.insert("sigma".into(), fmt_complex(sigma));
        let job: Job<(Complex64, f64)> = Box::new(move || {
            let t = UpperHalfPoint::new(tau)?;
            match target {
                LimitTarget::ZetaLimit => {
                    let row = limit_zeta_probe(k, &[sigma], t, &prec)?[0];
                    Ok((row.value, row.error))
                }
                LimitTarget::GammaLimit => {
                    let row = limit_euler_gamma_probe(&[sigma], t, &prec)?[0];
                    Ok((row.value, row.error))
                }
                LimitTarget::SclLimit => {
                    let value = scl_limit_probe(z, &[sigma], t, &prec)?[0];
                    let exact = euler_gamma_fn(z - 1.0, &prec)?.value;
                    Ok((value, (value - exact).norm()))
                }
            }
        });
        let ((value, error), ms) = ctx.run(&p, &job)?;
        out.push(Envelope {
            request: ctx.echo(p),
            value: Some(value.into()),
            err_bound: None,
            residual: Some(Num(error)),
            pass: None,
            terms_used: None,
            wall_time_ms: Num(ms),
        });
    }
    Ok(Output::Envelopes(out))
}

fn d_k_prefactor(k: u32) -> Complex64 {
    let factorial: f64 = (1..k).map(f64::from).product();
    Complex64::new(0.0, -2.0 * PI).powi(k as i32) / factorial
}

pub fn table(target: TableTarget, o: &Opts) -> std::result::Result<Output, Failure> {
    let prec = policy(o)?;
    let ctx = Ctx {
        subcommand: "table",
        target: target_name(target),
        prec,
    };
    let nmax = o.nmax.unwrap_or(10);
    let sigma_at = |n: u64, p: u32, ps: &Params| {
        sigma_power(n as i64, p).map_err(|error| Failure::Core {
            request: Some(ctx.echo(ps.clone())),
            error,
        })
    };
    let table = match target {
        TableTarget::Divisors => {
            let kmax = o.kmax.unwrap_or(4);
            let p = params(&[("kmax", kmax.to_string()), ("nmax", nmax.to_string())]);
            let mut rows = Vec::new();
            for n in 1..=nmax {
                for k in 1..=kmax {
                    rows.push(vec![Cell::Int(n as u128), Cell::Int(k as u128), Cell::Int(sigma_at(n, k - 1, &p)?)]);
                }
            }
            Table {
                header: vec!["n", "k", "sigma_k_minus_1"],
                rows,
            }
        }
        TableTarget::DkCoeffs => {
            let k = require_k(o, ctx.target)?;
            if k == 0 {
                return Err(Failure::Usage("dk-coeffs needs k >= 1".into()));
            }
            let p = params(&[("k", k.to_string()), ("nmax", nmax.to_string())]);
            let pref = d_k_prefactor(k);
            let mut rows = Vec::new();
            for n in 1..=nmax {
                let c = pref * sigma_at(n, k - 1, &p)? as f64;
                rows.push(vec![Cell::Int(n as u128), Cell::Num(c.re), Cell::Num(c.im)]);
            }
            Table {
                header: vec!["n", "re", "im"],
                rows,
            }
        }
        TableTarget::ZkGrid => {
            let k = require_k(o, ctx.target)?;
            let (rows_n, cols_m) = o.grid.unwrap_or((3, 3));
            let Inputs { tau, sigma, .. } = inputs(o);
            let step = Complex64::new(0.0, 0.25);
            let mut rows = Vec::new();
            for a in 0..rows_n {
                for b in 0..cols_m {
                    let t = tau + step * a as f64;
                    let s = sigma + step * b as f64;
                    let p = params(&[("k", k.to_string()), ("tau", fmt_complex(t)), ("sigma", fmt_complex(s))]);
                    let job: Job<ApproxValue> = Box::new(move || z_k(k, &WedgePair::new(t, s)?, &prec));
                    let (v, _) = ctx.run(&p, &job)?;
                    rows.push(vec![
                        Cell::Num(t.re),
                        Cell::Num(t.im),
                        Cell::Num(s.re),
                        Cell::Num(s.im),
                        Cell::Num(v.value.re),
                        Cell::Num(v.value.im),
                        Cell::Num(v.err_bound),
                        Cell::Int(v.terms_used as u128),
                    ]);
                }
            }
            Table {
                header: vec!["tau_re", "tau_im", "sigma_re", "sigma_im", "re", "im", "err_bound", "terms_used"],
                rows,
            }
        }
    };
    Ok(Output::Table(table))
}
