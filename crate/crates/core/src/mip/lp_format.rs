//! CPLEX-LP style text export and import.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::{Constraint, MipError, MipInstance, MipMeta, Sense, VarKind, Variable};

const TERMS_PER_LINE: usize = 8;

fn fmt_coef(c: f64) -> String {
    format!("{c:.16e}")
}

fn fmt_number(v: f64) -> String {
    if v.is_infinite() {
        if v > 0.0 { "inf".into() } else { "-inf".into() }
    } else if v == v.trunc() && v.abs() < 1e15 {
        format!("{}", v as i64)
    } else {
        fmt_coef(v)
    }
}

fn write_expr(out: &mut String, terms: &[(usize, f64)], vars: &[Variable]) {
    for (t, &(j, c)) in terms.iter().enumerate() {
        if t > 0 && t % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let name = &vars[j].name;
        let (sign, mag) = if c < 0.0 { ("-", -c) } else { ("+", c) };
        if t > 0 || sign == "-" {
            out.push(' ');
            out.push_str(sign);
        }
        if mag == 1.0 {
            let _ = write!(out, " {name}");
        } else {
            let _ = write!(out, " {} {name}", fmt_coef(mag));
        }
    }
}

/// Writes the model as deterministic CPLEX-LP text.
pub fn export_model(mip: &MipInstance) -> String {
    let vars = &mip.variables;
    let mut out = String::new();
    let _ = writeln!(out, "\\ cycle clustering model");
    let _ = writeln!(out, "\\ meta n={} m={} alpha={}", mip.meta.n, mip.meta.m, mip.meta.alpha);
    out.push_str("Maximize\n obj:");
    let obj: Vec<(usize, f64)> =
        vars.iter().enumerate().filter(|(_, v)| v.obj != 0.0).map(|(j, v)| (j, v.obj)).collect();
    write_expr(&mut out, &obj, vars);
    out.push_str("\nSubject To\n");
    for c in &mip.constraints {
        let _ = write!(out, " {}:", c.name);
        write_expr(&mut out, &c.coeffs, vars);
        let _ = writeln!(out, " {} {}", c.sense.symbol(), fmt_number(c.rhs));
    }
    out.push_str("Bounds\n");
    for v in vars {
        let (l, u) = (v.lower, v.upper);
        if l == u {
            let _ = writeln!(out, " {} = {}", v.name, fmt_number(l));
        } else if l == f64::NEG_INFINITY && u == f64::INFINITY {
            let _ = writeln!(out, " {} free", v.name);
        } else if u == f64::INFINITY {
            let _ = writeln!(out, " {} >= {}", v.name, fmt_number(l));
        } else {
            let _ = writeln!(out, " {} <= {} <= {}", fmt_number(l), v.name, fmt_number(u));
        }
    }
    let bins: Vec<&str> = vars.iter().filter(|v| v.kind == VarKind::Binary).map(|v| v.name.as_str()).collect();
    if !bins.is_empty() {
        out.push_str("Binaries\n");
        for chunk in bins.chunks(TERMS_PER_LINE) {
            let _ = writeln!(out, " {}", chunk.join(" "));
        }
    }
    out.push_str("End\n");
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    Binaries,
    Done,
}

struct Builder {
    vars: Vec<Variable>,
    index: HashMap<String, usize>,
}

impl Builder {
    fn var(&mut self, name: &str) -> usize {
        if let Some(&j) = self.index.get(name) {
            return j;
        }
        let j = self.vars.len();
        self.vars.push(Variable {
            name: name.to_string(),
            kind: VarKind::Continuous,
            lower: 0.0,
            upper: f64::INFINITY,
            obj: 0.0,
        });
        self.index.insert(name.to_string(), j);
        j
    }
}

fn perr(line: usize, msg: impl Into<String>) -> MipError {
    MipError::Parse { line, msg: msg.into() }
}

fn parse_value(tok: &str, line: usize) -> Result<f64, MipError> {
    match tok.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        _ => tok.parse().map_err(|_| perr(line, format!("invalid number `{tok}`"))),
    }
}

fn is_number(tok: &str) -> bool {
    tok.parse::<f64>().is_ok()
}

/// Collects `(coefficient, name)` terms from a token stream.
fn parse_terms(tokens: &[(usize, String)], b: &mut Builder) -> Result<Vec<(usize, f64)>, MipError> {
    let mut terms = Vec::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    for (line, tok) in tokens {
        match tok.as_str() {
            "+" => {}
            "-" => sign = -sign,
            t if is_number(t) => {
                if coef.is_some() {
                    return Err(perr(*line, format!("two coefficients in a row at `{t}`")));
                }
                coef = Some(t.parse().unwrap());
            }
            name => {
                terms.push((b.var(name), sign * coef.unwrap_or(1.0)));
                sign = 1.0;
                coef = None;
            }
        }
    }
    if coef.is_some() {
        let line = tokens.last().map(|t| t.0).unwrap_or(0);
        return Err(perr(line, "dangling coefficient"));
    }
    Ok(terms)
}

fn tokenize(line: &str) -> Vec<String> {
    let mut spaced = String::with_capacity(line.len() + 8);
    let mut chars = line.chars().peekable();
    while let Some(ch) = chars.next() {
        match ch {
            '<' | '>' | '=' => {
                spaced.push(' ');
                spaced.push(ch);
                if chars.peek() == Some(&'=') && ch != '=' {
                    spaced.push(chars.next().unwrap());
                }
                spaced.push(' ');
            }
            ':' => spaced.push_str(" : "),
            _ => spaced.push(ch),
        }
    }
    spaced.split_whitespace().map(str::to_string).collect()
}

fn parse_sense(tok: &str) -> Option<Sense> {
    match tok {
        "<=" | "<" | "=<" => Some(Sense::Le),
        ">=" | ">" | "=>" => Some(Sense::Ge),
        "=" => Some(Sense::Eq),
        _ => None,
    }
}

fn parse_meta(line: &str) -> Option<MipMeta> {
    let rest = line.trim_start_matches('\\').trim().strip_prefix("meta")?;
    let mut n = None;
    let mut m = None;
    let mut alpha = None;
    for kv in rest.split_whitespace() {
        let (k, v) = kv.split_once('=')?;
        match k {
            "n" => n = v.parse().ok(),
            "m" => m = v.parse().ok(),
            "alpha" => alpha = v.parse().ok(),
            _ => {}
        }
    }
    Some(MipMeta { n: n?, m: m?, alpha: alpha? })
}

fn apply_bound(b: &mut Builder, toks: &[String], line: usize) -> Result<(), MipError> {
    let strs: Vec<&str> = toks.iter().map(String::as_str).collect();
    match strs.as_slice() {
        [name, "free"] => {
            let j = b.var(name);
            b.vars[j].lower = f64::NEG_INFINITY;
            b.vars[j].upper = f64::INFINITY;
        }
        [lo, s1, name, s2, hi] if parse_sense(s1) == Some(Sense::Le) && parse_sense(s2) == Some(Sense::Le) => {
            let (l, u) = (parse_value(lo, line)?, parse_value(hi, line)?);
            let j = b.var(name);
            b.vars[j].lower = l;
            b.vars[j].upper = u;
        }
        [a, s, c] => {
            let sense = parse_sense(s).ok_or_else(|| perr(line, format!("invalid bound operator `{s}`")))?;
            let (name, value, sense) = if is_number(a) || a.contains("inf") {
                let flipped = match sense {
                    Sense::Le => Sense::Ge,
                    Sense::Ge => Sense::Le,
                    Sense::Eq => Sense::Eq,
                };
                (*c, parse_value(a, line)?, flipped)
            } else {
                (*a, parse_value(c, line)?, sense)
            };
            let j = b.var(name);
            match sense {
                Sense::Eq => {
                    b.vars[j].lower = value;
                    b.vars[j].upper = value;
                }
                Sense::Ge => b.vars[j].lower = value,
                Sense::Le => b.vars[j].upper = value,
            }
        }
        _ => return Err(perr(line, "unrecognized bound")),
    }
    Ok(())
}

/// Parses text written by [`export_model`]. Variables are ordered by their
/// first appearance in the `Bounds` section, then by first use elsewhere.
pub fn parse_model(text: &str) -> Result<MipInstance, MipError> {
    let mut meta = None;
    let mut section = Section::Preamble;
    let mut objective: Vec<(usize, String)> = Vec::new();
    let mut rows: Vec<(usize, Vec<(usize, String)>)> = Vec::new();
    let mut bound_lines: Vec<(usize, Vec<String>)> = Vec::new();
    let mut binaries: Vec<(usize, String)> = Vec::new();

    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() {
            continue;
        }
        if trimmed.starts_with('\\') {
            if let Some(mm) = parse_meta(trimmed) {
                meta = Some(mm);
            }
            continue;
        }
        let lower = trimmed.to_ascii_lowercase();
        let next = match lower.as_str() {
            "maximize" | "maximise" | "max" => Some(Section::Objective),
            "minimize" | "minimise" | "min" => return Err(perr(line, "only maximization models are supported")),
            "subject to" | "such that" | "st" | "s.t." => Some(Section::Constraints),
            "bounds" => Some(Section::Bounds),
            "binaries" | "binary" | "bin" => Some(Section::Binaries),
            "end" => Some(Section::Done),
            _ => None,
        };
        if let Some(s) = next {
            section = s;
            continue;
        }
        let toks = tokenize(trimmed);
        match section {
            Section::Preamble | Section::Done => return Err(perr(line, "content outside of a section")),
            Section::Objective => objective.extend(toks.into_iter().map(|t| (line, t))),
            Section::Constraints => {
                if toks.len() >= 2 && toks[1] == ":" {
                    rows.push((line, Vec::new()));
                }
                let (_, cur) = rows.last_mut().ok_or_else(|| perr(line, "constraint without a name"))?;
                cur.extend(toks.into_iter().map(|t| (line, t)));
            }
            Section::Bounds => bound_lines.push((line, toks)),
            Section::Binaries => binaries.extend(toks.into_iter().map(|t| (line, t))),
        }
    }
    if section != Section::Done {
        return Err(perr(text.lines().count(), "missing `End`"));
    }
    let meta = meta.ok_or_else(|| perr(1, "missing `\\ meta n=.. m=.. alpha=..` header"))?;

    let mut b = Builder { vars: Vec::new(), index: HashMap::new() };
    for (line, toks) in &bound_lines {
        apply_bound(&mut b, toks, *line)?;
    }

    let obj_toks = match objective.get(1) {
        Some((_, t)) if t == ":" => &objective[2..],
        _ => &objective[..],
    };
    for (j, c) in parse_terms(obj_toks, &mut b)? {
        b.vars[j].obj += c;
    }

    let mut constraints = Vec::with_capacity(rows.len());
    for (line, toks) in rows {
        let name = toks[0].1.clone();
        let body = &toks[2..];
        let pos = body
            .iter()
            .position(|(_, t)| parse_sense(t).is_some())
            .ok_or_else(|| perr(line, format!("constraint `{name}` has no sense")))?;
        if pos + 2 != body.len() {
            return Err(perr(line, format!("constraint `{name}` must end with `<sense> <rhs>`")));
        }
        let sense = parse_sense(&body[pos].1).unwrap();
        let rhs = parse_value(&body[pos + 1].1, body[pos + 1].0)?;
        let coeffs = parse_terms(&body[..pos], &mut b)?;
        constraints.push(Constraint { name, coeffs, sense, rhs });
    }

    for (line, name) in &binaries {
        let j = *b.index.get(name).ok_or_else(|| perr(*line, format!("unknown binary `{name}`")))?;
        b.vars[j].kind = VarKind::Binary;
        b.vars[j].lower = b.vars[j].lower.max(0.0);
        b.vars[j].upper = b.vars[j].upper.min(1.0);
    }

    let mip = MipInstance { variables: b.vars, constraints, meta };
    mip.layout()?;
    Ok(mip)
}
