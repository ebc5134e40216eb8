//! Parsers for command-line literals.

use std::str::FromStr;

use num_complex::Complex64;

/// Accepts `re,im` or the `a+bi` forms understood by `num_complex`.
pub fn parse_complex(text: &str) -> Result<Complex64, String> {
    let text = text.trim();
    let value = match text.split_once(',') {
        Some((re, im)) => {
            let re = parse_real(re)?;
            let im = parse_real(im)?;
            Complex64::new(re, im)
        }
        None => Complex64::from_str(text).map_err(|_| format!("malformed complex literal `{text}`"))?,
    };
    if value.re.is_finite() && value.im.is_finite() {
        Ok(value)
    } else {
        Err(format!("complex literal `{text}` is not finite"))
    }
}

fn parse_real(text: &str) -> Result<f64, String> {
    let text = text.trim();
    match text.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(format!("malformed number `{text}`")),
    }
}

/// Sigma sequence for limit tables.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaList(pub Vec<Complex64>);

/// A comma-separated list of points on the positive imaginary axis, given by
/// their imaginary parts (`0.05,0.02`) or as complex literals (`0.05i`).
pub fn parse_sigmas(text: &str) -> Result<SigmaList, String> {
    text.split(',')
        .map(|item| {
            let item = item.trim();
            match item.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(Complex64::new(0.0, v)),
                _ => Complex64::from_str(item).map_err(|_| format!("malformed sigma `{item}`")),
            }
        })
        .collect::<Result<Vec<_>, _>>()
        .map(SigmaList)
}

/// `NxM` grid dimensions.
pub fn parse_grid(text: &str) -> Result<(usize, usize), String> {
    let (n, m) = text
        .split_once(['x', 'X'])
        .ok_or_else(|| format!("grid `{text}` is not of the form NxM"))?;
    let n: usize = n.trim().parse().map_err(|_| format!("bad grid rows `{n}`"))?;
    let m: usize = m.trim().parse().map_err(|_| format!("bad grid columns `{m}`"))?;
    if n == 0 || m == 0 {
        return Err("grid dimensions must be positive".into());
    }
    Ok((n, m))
}

/// Positive finite epsilon.
pub fn parse_epsilon(text: &str) -> Result<f64, String> {
    let v = parse_real(text)?;
    if v > 0.0 {
        Ok(v)
    } else {
        Err(format!("epsilon must be positive, got {v}"))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn comma_form() {
        assert_eq!(parse_complex("0.2,1").unwrap(), Complex64::new(0.2, 1.0));
        assert_eq!(parse_complex("-1e-3, 2E2").unwrap(), Complex64::new(-1e-3, 200.0));
    }

    #[test]
    fn algebraic_form() {
        assert_eq!(parse_complex("0.3+0.2i").unwrap(), Complex64::new(0.3, 0.2));
        assert_eq!(parse_complex("2").unwrap(), Complex64::new(2.0, 0.0));
        assert_eq!(parse_complex("-i").unwrap(), Complex64::new(0.0, -1.0));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_complex("1,").is_err());
        assert!(parse_complex("abc").is_err());
        assert!(parse_complex("nan,0").is_err());
        assert!(parse_grid("3by3").is_err());
        assert!(parse_grid("0x2").is_err());
        assert!(parse_sigmas("0.1,x").is_err());
        assert!(parse_epsilon("-1").is_err());
    }

    #[test]
    fn sigma_list() {
        let s = parse_sigmas("0.05,0.01i").unwrap();
        assert_eq!(s.0, vec![Complex64::new(0.0, 0.05), Complex64::new(0.0, 0.01)]);
    }
}
