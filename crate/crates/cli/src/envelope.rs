//! Result envelopes and their JSON / CSV encodings.

use std::collections::BTreeMap;
use std::io::{self, Write};

use ezv_core::{ApproxValue, Error, PrecisionPolicy};
use num_complex::Complex64;
use serde::{Serialize, Serializer};
use serde_json::value::RawValue;

/// A float written with 17 significant digits, or `null` when not finite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            let raw = RawValue::from_string(fmt_num(self.0)).map_err(serde::ser::Error::custom)?;
            raw.serialize(s)
        } else {
            s.serialize_none()
        }
    }
}

pub fn fmt_num(x: f64) -> String {
    format!("{x:.16e}")
}

#[derive(Debug, Clone, Serialize)]
pub struct Cplx {
    pub re: Num,
    pub im: Num,
}

impl From<Complex64> for Cplx {
    fn from(z: Complex64) -> Self {
        Self {
            re: Num(z.re),
            im: Num(z.im),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PrecisionEcho {
    pub epsilon: Num,
    pub max_terms: usize,
    pub lattice_radius: usize,
}

impl From<&PrecisionPolicy> for PrecisionEcho {
    fn from(p: &PrecisionPolicy) -> Self {
        Self {
            epsilon: Num(p.epsilon()),
            max_terms: p.max_terms(),
            lattice_radius: p.lattice_radius(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RequestEcho {
    pub subcommand: String,
    pub target: String,
    pub params: BTreeMap<String, String>,
    pub precision: PrecisionEcho,
}

#[derive(Debug, Clone, Serialize)]
pub struct Envelope {
    pub request: RequestEcho,
    pub value: Option<Cplx>,
    pub err_bound: Option<Num>,
    pub residual: Option<Num>,
    pub pass: Option<bool>,
    pub terms_used: Option<usize>,
    pub wall_time_ms: Num,
}

impl Envelope {
    pub fn approx(request: RequestEcho, v: &ApproxValue, ms: f64) -> Self {
        Self {
            request,
            value: Some(v.value.into()),
            err_bound: Some(Num(v.err_bound)),
            residual: None,
            pass: None,
            terms_used: Some(v.terms_used),
            wall_time_ms: Num(ms),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct PartialEcho {
    pub value: Cplx,
    pub err_bound: Num,
    pub terms_used: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorBody {
    pub kind: &'static str,
    pub message: String,
    pub factor: Option<[usize; 2]>,
    pub partial: Option<PartialEcho>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ErrorEnvelope {
    pub request: Option<RequestEcho>,
    pub error: ErrorBody,
}

impl ErrorBody {
    pub fn from_core(e: &Error) -> Self {
        let (kind, factor, partial) = match e {
            Error::Domain(_) => ("domain", None, None),
            Error::Pole { factor, .. } => ("pole", factor.map(|(j, l)| [j, l]), None),
            Error::Truncation { partial } => (
                "truncation",
                None,
                Some(PartialEcho {
                    value: partial.value.into(),
                    err_bound: Num(partial.err_bound),
                    terms_used: partial.terms_used,
                }),
            ),
            Error::Branch { .. } => ("branch", None, None),
        };
        Self {
            kind,
            message: e.to_string(),
            factor,
            partial,
        }
    }

    pub fn io(message: String) -> Self {
        Self {
            kind: "io",
            message,
            factor: None,
            partial: None,
        }
    }
}

pub fn write_json_line<T: Serialize>(out: &mut dyn Write, item: &T) -> io::Result<()> {
    serde_json::to_writer(&mut *out, item)?;
    out.write_all(b"\n")
}

const ENVELOPE_HEADER: [&str; 13] = [
    "subcommand",
    "target",
    "params",
    "epsilon",
    "max_terms",
    "lattice_radius",
    "value_re",
    "value_im",
    "err_bound",
    "residual",
    "pass",
    "terms_used",
    "wall_time_ms",
];

fn opt_num(x: Option<f64>) -> String {
    match x {
        Some(v) if v.is_finite() => fmt_num(v),
        _ => String::new(),
    }
}

pub fn write_envelopes_csv(out: &mut dyn Write, items: &[Envelope]) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ENVELOPE_HEADER)?;
    for e in items {
        let params = e
            .request
            .params
            .iter()
            .map(|(k, v)| format!("{k}={v}"))
            .collect::<Vec<_>>()
            .join(";");
        let (re, im) = match &e.value {
            Some(v) => (Some(v.re.0), Some(v.im.0)),
            None => (None, None),
        };
        w.write_record([
            e.request.subcommand.clone(),
            e.request.target.clone(),
            params,
            fmt_num(e.request.precision.epsilon.0),
            e.request.precision.max_terms.to_string(),
            e.request.precision.lattice_radius.to_string(),
            opt_num(re),
            opt_num(im),
            opt_num(e.err_bound.map(|n| n.0)),
            opt_num(e.residual.map(|n| n.0)),
            e.pass.map(|p| p.to_string()).unwrap_or_default(),
            e.terms_used.map(|t| t.to_string()).unwrap_or_default(),
            fmt_num(e.wall_time_ms.0),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One table cell.
#[derive(Debug, Clone)]
pub enum Cell {
    Int(u128),
    Num(f64),
}

impl Cell {
    fn text(&self) -> String {
        match self {
            Cell::Int(n) => n.to_string(),
            Cell::Num(x) if x.is_finite() => fmt_num(*x),
            Cell::Num(_) => String::new(),
        }
    }

    fn json(&self) -> String {
        match self {
            Cell::Num(x) if !x.is_finite() => "null".into(),
            _ => self.text(),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Table {
    pub header: Vec<&'static str>,
    pub rows: Vec<Vec<Cell>>,
}

impl Table {
    pub fn write_csv(&self, out: &mut dyn Write) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(&self.header)?;
        for row in &self.rows {
            w.write_record(row.iter().map(Cell::text))?;
        }
        w.flush()?;
        Ok(())
    }

    /// JSON lines with keys in header order.
    pub fn write_json(&self, out: &mut dyn Write) -> io::Result<()> {
        for row in &self.rows {
            let fields: Vec<String> = self
                .header
                .iter()
                .zip(row)
                .map(|(k, c)| format!("{}:{}", serde_json::to_string(k).unwrap(), c.json()))
                .collect();
            writeln!(out, "{{{}}}", fields.join(","))?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_digits() {
        let s = serde_json::to_string(&Num(std::f64::consts::PI)).unwrap();
        assert_eq!(s, "3.1415926535897931e0");
        assert_eq!(s.parse::<f64>().unwrap(), std::f64::consts::PI);
        assert_eq!(serde_json::to_string(&Num(f64::NAN)).unwrap(), "null");
    }

    #[test]
    fn key_order_is_fixed() {
        let req = RequestEcho {
            subcommand: "eval".into(),
            target: "zeta".into(),
            params: BTreeMap::from([("k".to_string(), "2".to_string())]),
            precision: (&PrecisionPolicy::default()).into(),
        };
        let e = Envelope::approx(req, &ApproxValue::new(Complex64::new(1.0, 0.0), 0.0, 3), 0.5);
        let s = serde_json::to_string(&e).unwrap();
        let order = ["request", "value", "err_bound", "residual", "pass", "terms_used", "wall_time_ms"];
        let pos: Vec<usize> = order.iter().map(|k| s.find(&format!("\"{k}\"")).unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
    }
}
