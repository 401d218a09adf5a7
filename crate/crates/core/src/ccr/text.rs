//! Line-oriented text format.
//!
//! ```text
//! # modes 2
//! 1.0 0.0 : (0,0,2) (0,0,0)
//! -0.5 0.25 : (0,1,0) (1,0,0)
//! ```
//!
//! Each term line is `re im : (i,j,k)` with one triple per mode. Floats use the
//! shortest representation that parses back to the same bits.

use num_complex::Complex64;
use thiserror::Error;

use super::{ModeMonomial, OperatorPolynomial};

#[derive(Debug, Error, Clone, PartialEq)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn err(line: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        line,
        message: message.into(),
    }
}

pub(super) fn write(p: &OperatorPolynomial) -> String {
    let mut out = format!("# modes {}\n", p.modes);
    for (key, c) in &p.terms {
        out.push_str(&format!("{:?} {:?} :", c.re, c.im));
        for m in key {
            out.push_str(&format!(
                " ({},{},{})",
                m.creation, m.number, m.annihilation
            ));
        }
        out.push('\n');
    }
    out
}

fn parse_triple(s: &str, line: usize) -> Result<ModeMonomial, ParseError> {
    let inner = s
        .strip_prefix('(')
        .and_then(|t| t.strip_suffix(')'))
        .ok_or_else(|| err(line, format!("expected (i,j,k), found `{s}`")))?;
    let parts: Vec<&str> = inner.split(',').map(str::trim).collect();
    if parts.len() != 3 {
        return Err(err(line, format!("expected three exponents in `{s}`")));
    }
    let mut v = [0u32; 3];
    for (slot, p) in v.iter_mut().zip(&parts) {
        *slot = p
            .parse()
            .map_err(|_| err(line, format!("bad exponent `{p}`")))?;
    }
    Ok(ModeMonomial::new(v[0], v[1], v[2]))
}

type Terms = Vec<(Vec<ModeMonomial>, Complex64)>;

pub(super) fn read(s: &str) -> Result<(usize, Terms), ParseError> {
    let mut modes: Option<usize> = None;
    let mut terms = Vec::new();
    for (idx, raw) in s.lines().enumerate() {
        let line = idx + 1;
        let t = raw.trim();
        if t.is_empty() {
            continue;
        }
        if let Some(rest) = t.strip_prefix('#') {
            let mut words = rest.split_whitespace();
            if words.next() == Some("modes") {
                let m: usize = words
                    .next()
                    .and_then(|w| w.parse().ok())
                    .ok_or_else(|| err(line, "bad mode count"))?;
                if m == 0 {
                    return Err(err(line, "mode count must be positive"));
                }
                if modes.is_some_and(|prev| prev != m) {
                    return Err(err(line, "conflicting mode counts"));
                }
                modes = Some(m);
            }
            continue;
        }
        let (coeff, mons) = t
            .split_once(':')
            .ok_or_else(|| err(line, "missing `:` separator"))?;
        let nums: Vec<&str> = coeff.split_whitespace().collect();
        if nums.len() != 2 {
            return Err(err(line, "expected real and imaginary parts"));
        }
        let re: f64 = nums[0]
            .parse()
            .map_err(|_| err(line, format!("bad number `{}`", nums[0])))?;
        let im: f64 = nums[1]
            .parse()
            .map_err(|_| err(line, format!("bad number `{}`", nums[1])))?;
        let key = mons
            .split_whitespace()
            .map(|w| parse_triple(w, line))
            .collect::<Result<Vec<_>, _>>()?;
        match modes {
            None if key.is_empty() => return Err(err(line, "term without modes")),
            None => modes = Some(key.len()),
            Some(m) if m != key.len() => {
                return Err(err(
                    line,
                    format!("expected {m} mode triples, found {}", key.len()),
                ))
            }
            _ => {}
        }
        terms.push((key, Complex64::new(re, im)));
    }
    let modes = modes.ok_or_else(|| err(0, "empty input without a `# modes` header"))?;
    Ok((modes, terms))
}
