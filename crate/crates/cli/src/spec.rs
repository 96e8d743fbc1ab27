//! Parsers for the small string languages of the command line: vectors,
//! control specs, sampling boxes and targets.

use mocon_core::Vector;

use crate::error::{config_err, CliResult};

/// Splits on `sep` outside square brackets.
fn split_top(s: &str, sep: char) -> Vec<&str> {
    let mut out = Vec::new();
    let mut depth = 0i32;
    let mut start = 0;
    for (i, c) in s.char_indices() {
        match c {
            '[' => depth += 1,
            ']' => depth -= 1,
            c if c == sep && depth == 0 => {
                out.push(&s[start..i]);
                start = i + c.len_utf8();
            }
            _ => {}
        }
    }
    out.push(&s[start..]);
    out
}

pub fn parse_f64(s: &str, what: &str) -> CliResult<f64> {
    let v: f64 = s.trim().parse().map_err(|_| config_err(format!("{what}: '{s}' is not a number")))?;
    if !v.is_finite() {
        return Err(config_err(format!("{what}: '{s}' is not finite")));
    }
    Ok(v)
}

/// `1.5`, `0,6` or `[0,6]`.
pub fn parse_vector(s: &str, what: &str) -> CliResult<Vec<f64>> {
    let inner = s.trim().trim_start_matches('[').trim_end_matches(']');
    if inner.trim().is_empty() {
        return Err(config_err(format!("{what}: empty vector")));
    }
    inner.split(',').map(|x| parse_f64(x, what)).collect()
}

/// One tone of a sinusoidal control.
#[derive(Debug, Clone, PartialEq)]
pub struct Tone {
    pub w: Vec<f64>,
    pub omega: f64,
    pub phase: f64,
}

/// Parsed `--control` value.
#[derive(Debug, Clone, PartialEq)]
pub enum ControlSpec {
    /// `u ≡ u0`.
    Const,
    /// `sin:w=..,omega=..[,phase=..][;w=..,omega=..]`
    Sin(Vec<Tone>),
    /// `feedback:target=..[,ubar=..][,omega=..][,poles=[..]][,selection=..][,k=..]`
    Feedback(FeedbackSpec),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeedbackSpec {
    pub target: Vec<f64>,
    pub u_bar: Option<Vec<f64>>,
    pub omega: Option<f64>,
    pub poles: Option<Vec<f64>>,
    /// `gamma+` (`γ = ξ`), `gamma-` (`γ = −ξ`) or `tuple`.
    pub selection: Option<String>,
    pub k: Option<usize>,
}

fn key_values(body: &str, what: &str) -> CliResult<Vec<(String, String)>> {
    split_top(body, ',')
        .into_iter()
        .filter(|kv| !kv.trim().is_empty())
        .map(|kv| {
            let (k, v) = kv
                .split_once('=')
                .ok_or_else(|| config_err(format!("{what}: expected key=value, got '{kv}'")))?;
            Ok((k.trim().to_string(), v.trim().to_string()))
        })
        .collect()
}

impl ControlSpec {
    pub fn parse(s: &str) -> CliResult<Self> {
        let s = s.trim();
        if s == "const" {
            return Ok(Self::Const);
        }
        if let Some(body) = s.strip_prefix("sin:") {
            let mut tones = Vec::new();
            for tone in split_top(body, ';') {
                let mut w = None;
                let mut omega = None;
                let mut phase = 0.0;
                for (k, v) in key_values(tone, "sin control")? {
                    match k.as_str() {
                        "w" => w = Some(parse_vector(&v, "w")?),
                        "omega" => omega = Some(parse_f64(&v, "omega")?),
                        "phase" => phase = parse_f64(&v, "phase")?,
                        other => return Err(config_err(format!("sin control: unknown key '{other}'"))),
                    }
                }
                tones.push(Tone {
                    w: w.ok_or_else(|| config_err("sin control: missing w"))?,
                    omega: omega.ok_or_else(|| config_err("sin control: missing omega"))?,
                    phase,
                });
            }
            return Ok(Self::Sin(tones));
        }
        if let Some(body) = s.strip_prefix("feedback:") {
            let mut spec = FeedbackSpec {
                target: Vec::new(),
                u_bar: None,
                omega: None,
                poles: None,
                selection: None,
                k: None,
            };
            for (k, v) in key_values(body, "feedback control")? {
                match k.as_str() {
                    "target" => spec.target = parse_vector(&v, "target")?,
                    "ubar" => spec.u_bar = Some(parse_vector(&v, "ubar")?),
                    "omega" => spec.omega = Some(parse_f64(&v, "omega")?),
                    "poles" => spec.poles = Some(parse_vector(&v, "poles")?),
                    "selection" => spec.selection = Some(v),
                    "k" => spec.k = Some(v.parse().map_err(|_| config_err(format!("k: '{v}' is not a count")))?),
                    other => return Err(config_err(format!("feedback control: unknown key '{other}'"))),
                }
            }
            if spec.target.is_empty() {
                return Err(config_err("feedback control: missing target"));
            }
            return Ok(Self::Feedback(spec));
        }
        Err(config_err(format!(
            "unknown control '{s}' (expected const, sin:w=..,omega=.. or feedback:target=..)"
        )))
    }
}

/// One `(lo, hi)` range per coordinate.
pub type Ranges = Vec<(f64, f64)>;

/// `q:0.1..3,u:-1..1` (all coordinates of a factor) or `q1:..,q2:..,u1:..`.
pub fn parse_box(s: &str, n: usize, m: usize) -> CliResult<(Ranges, Ranges)> {
    let mut q: Vec<Option<(f64, f64)>> = vec![None; n];
    let mut u: Vec<Option<(f64, f64)>> = vec![None; m];
    for part in s.split(',').filter(|p| !p.trim().is_empty()) {
        let (name, range) = part
            .split_once(':')
            .ok_or_else(|| config_err(format!("box: expected name:lo..hi, got '{part}'")))?;
        let (lo, hi) = range
            .split_once("..")
            .ok_or_else(|| config_err(format!("box: expected lo..hi, got '{range}'")))?;
        let r = (parse_f64(lo, "box")?, parse_f64(hi, "box")?);
        if !(r.1 > r.0) {
            return Err(config_err(format!("box: empty range '{range}'")));
        }
        let name = name.trim();
        let (slots, index) = match name.chars().next() {
            Some('q') => (&mut q, &name[1..]),
            Some('u') => (&mut u, &name[1..]),
            _ => return Err(config_err(format!("box: unknown coordinate '{name}'"))),
        };
        if index.is_empty() {
            slots.iter_mut().for_each(|x| *x = Some(r));
        } else {
            let i: usize = index.parse().map_err(|_| config_err(format!("box: bad coordinate '{name}'")))?;
            if i == 0 || i > slots.len() {
                return Err(config_err(format!("box: coordinate '{name}' out of range")));
            }
            slots[i - 1] = Some(r);
        }
    }
    let fill = |v: Vec<Option<(f64, f64)>>, f: &str| -> CliResult<Vec<(f64, f64)>> {
        v.into_iter()
            .enumerate()
            .map(|(i, r)| r.ok_or_else(|| config_err(format!("box: no range for {f}{}", i + 1))))
            .collect()
    };
    Ok((fill(q, "q")?, fill(u, "u")?))
}

/// `q=0.3,-0.05` optionally followed by `;u=0,0`.
pub fn parse_target(s: &str) -> CliResult<(Vec<f64>, Option<Vec<f64>>)> {
    let mut q = None;
    let mut u = None;
    for part in s.split(';') {
        let (k, v) = part
            .split_once('=')
            .ok_or_else(|| config_err(format!("target: expected q=.. or u=.., got '{part}'")))?;
        match k.trim() {
            "q" => q = Some(parse_vector(v, "target q")?),
            "u" => u = Some(parse_vector(v, "target u")?),
            other => return Err(config_err(format!("target: unknown key '{other}'"))),
        }
    }
    Ok((q.ok_or_else(|| config_err("target: missing q"))?, u))
}

/// Vector of the expected length, or zeros when absent.
pub fn sized(v: Option<&Vec<f64>>, len: usize, what: &str) -> CliResult<Vector> {
    match v {
        None => Ok(Vector::zeros(len)),
        Some(x) if x.len() == len => Ok(Vector::from_column_slice(x)),
        Some(x) if x.len() == 1 => Ok(Vector::from_element(len, x[0])),
        Some(x) => Err(config_err(format!("{what} has {} entries, expected {len}", x.len()))),
    }
}
