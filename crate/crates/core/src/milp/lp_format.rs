//! CPLEX-style LP text files, enough to exchange models with external solvers.

use std::collections::HashMap;
use std::fmt::Write as _;

use super::model::{MilpModel, Sense};
use crate::error::{Error, Result};

fn fmt_num(v: f64) -> String {
    if v == f64::INFINITY {
        "inf".into()
    } else if v == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{v:?}")
    }
}

fn write_terms(out: &mut String, terms: impl Iterator<Item = (f64, String)>) {
    let mut first = true;
    let mut col = 0;
    for (a, name) in terms {
        let sign = if a < 0.0 { "-" } else { "+" };
        let piece = if first && a >= 0.0 {
            format!(" {} {}", fmt_num(a.abs()), name)
        } else {
            format!(" {} {} {}", sign, fmt_num(a.abs()), name)
        };
        col += piece.len();
        out.push_str(&piece);
        if col > 200 {
            out.push_str("\n  ");
            col = 0;
        }
        first = false;
    }
    if first {
        out.push_str(" 0");
    }
}

/// Renders `model` in LP format. Variable names must be LP-safe identifiers.
pub fn write_lp(model: &MilpModel) -> String {
    let mut out = String::from("\\ generated by scenred\nMinimize\n obj:");
    let mut terms: Vec<(f64, String)> = model
        .objective
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(j, &c)| (c, model.names[j].clone()))
        .collect();
    if model.offset != 0.0 {
        // A constant term is written as a coefficient on the empty name.
        terms.push((model.offset, String::new()));
    }
    write_terms(&mut out, terms.into_iter());
    out.push_str("\nSubject To\n");
    for c in &model.constraints {
        let _ = write!(out, " {}:", c.name);
        write_terms(&mut out, c.coeffs.iter().map(|&(j, a)| (a, model.names[j].clone())));
        let _ = writeln!(out, " {} {}", c.sense.symbol(), fmt_num(c.rhs));
    }
    out.push_str("Bounds\n");
    for j in 0..model.num_vars() {
        if model.binary[j] && model.lower[j] == 0.0 && model.upper[j] == 1.0 {
            continue;
        }
        let (lo, hi, name) = (model.lower[j], model.upper[j], &model.names[j]);
        if lo == hi {
            let _ = writeln!(out, " {name} = {}", fmt_num(lo));
        } else if lo == f64::NEG_INFINITY && hi == f64::INFINITY {
            let _ = writeln!(out, " {name} free");
        } else {
            let _ = writeln!(out, " {} <= {name} <= {}", fmt_num(lo), fmt_num(hi));
        }
    }
    let bins = model.binaries();
    if !bins.is_empty() {
        out.push_str("Binaries\n");
        for j in bins {
            let _ = writeln!(out, " {}", model.names[j]);
        }
    }
    out.push_str("End\n");
    out
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Objective,
    Rows,
    Bounds,
    Binaries,
}

fn parse_num(tok: &str) -> Result<f64> {
    match tok.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        _ => tok.parse().map_err(|_| Error::Parse(format!("expected a number, found '{tok}'"))),
    }
}

fn is_num(tok: &str) -> bool {
    parse_num(tok).is_ok()
}

struct Reader {
    model: MilpModel,
    index: HashMap<String, usize>,
}

impl Reader {
    fn var(&mut self, name: &str) -> usize {
        if let Some(&j) = self.index.get(name) {
            return j;
        }
        let j = self.model.add_var(name, 0.0, f64::INFINITY, 0.0);
        self.index.insert(name.to_string(), j);
        j
    }

    /// Parses `± a name ± b name ...`; returns terms and the constant part.
    fn linear(&mut self, toks: &[&str]) -> Result<(Vec<(usize, f64)>, f64)> {
        let mut terms: Vec<(usize, f64)> = Vec::new();
        let mut constant = 0.0;
        let mut sign = 1.0;
        let mut coef: Option<f64> = None;
        for &t in toks {
            match t {
                "+" => sign = 1.0,
                "-" => sign = -1.0,
                _ if is_num(t) && coef.is_none() => coef = Some(parse_num(t)?),
                _ => {
                    let j = self.var(t);
                    let a = sign * coef.take().unwrap_or(1.0);
                    match terms.iter_mut().find(|(k, _)| *k == j) {
                        Some(e) => e.1 += a,
                        None => terms.push((j, a)),
                    }
                    sign = 1.0;
                }
            }
        }
        if let Some(c) = coef {
            constant += sign * c;
        }
        Ok((terms, constant))
    }
}

fn tokenize(s: &str) -> Vec<String> {
    let mut spaced = String::with_capacity(s.len() + 16);
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        let prev = if i > 0 { chars[i - 1] } else { ' ' };
        match c {
            '+' | '-' if !(i >= 2 && matches!(prev, 'e' | 'E') && (chars[i - 2].is_ascii_digit() || chars[i - 2] == '.')) => {
                spaced.push(' ');
                spaced.push(c);
                spaced.push(' ');
            }
            '<' | '>' | '=' => {
                spaced.push(' ');
                spaced.push(c);
                while i + 1 < chars.len() && matches!(chars[i + 1], '<' | '>' | '=') {
                    i += 1;
                    spaced.push(chars[i]);
                }
                spaced.push(' ');
            }
            ':' => spaced.push_str(" : "),
            _ => spaced.push(c),
        }
        i += 1;
    }
    // Re-glue a sign to a number that starts an expression or a bound.
    let raw: Vec<&str> = spaced.split_whitespace().collect();
    let mut out: Vec<String> = Vec::with_capacity(raw.len());
    let mut k = 0;
    while k < raw.len() {
        let leading = out.last().is_none_or(|t| t == ":" || sense_of(t).is_some());
        if (raw[k] == "-" || raw[k] == "+") && leading && k + 1 < raw.len() && is_num(raw[k + 1]) {
            out.push(format!("{}{}", raw[k], raw[k + 1]));
            k += 2;
        } else {
            out.push(raw[k].to_string());
            k += 1;
        }
    }
    out
}

fn sense_of(tok: &str) -> Option<Sense> {
    match tok {
        "<" | "<=" | "=<" => Some(Sense::Le),
        ">" | ">=" | "=>" => Some(Sense::Ge),
        "=" => Some(Sense::Eq),
        _ => None,
    }
}

/// Parses the LP subset produced by [`write_lp`] (plus multi-line rows and
/// `General`-free models). Variables default to `[0, +inf)`.
pub fn read_lp(text: &str) -> Result<MilpModel> {
    let mut r = Reader {
        model: MilpModel::new(),
        index: HashMap::new(),
    };
    let mut section = Section::None;
    let mut pending = String::new();
    let mut binaries = Vec::new();

    let mut rows: Vec<String> = Vec::new();
    let mut objective_text = String::new();
    let mut bound_lines: Vec<String> = Vec::new();

    for raw in text.lines() {
        let line = raw.split('\\').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let lower = line.to_ascii_lowercase();
        let header = match lower.as_str() {
            "minimize" | "minimise" | "min" => Some(Section::Objective),
            "maximize" | "maximise" | "max" => return Err(Error::Parse("maximization models are not supported".into())),
            "subject to" | "such that" | "st" | "s.t." => Some(Section::Rows),
            "bounds" => Some(Section::Bounds),
            "binaries" | "binary" | "bin" => Some(Section::Binaries),
            "end" => Some(Section::None),
            _ => None,
        };
        if let Some(next) = header {
            if section == Section::Rows && !pending.trim().is_empty() {
                rows.push(std::mem::take(&mut pending));
            }
            section = next;
            continue;
        }
        match section {
            Section::None => return Err(Error::Parse(format!("text outside any section: '{line}'"))),
            Section::Objective => {
                objective_text.push(' ');
                objective_text.push_str(line);
            }
            Section::Rows => {
                // A new row starts at "name:"; continuation lines otherwise.
                if line.contains(':') && !pending.trim().is_empty() {
                    rows.push(std::mem::take(&mut pending));
                }
                pending.push(' ');
                pending.push_str(line);
            }
            Section::Bounds => bound_lines.push(line.to_string()),
            Section::Binaries => binaries.extend(line.split_whitespace().map(str::to_string)),
        }
    }
    if !pending.trim().is_empty() {
        rows.push(pending);
    }

    // Objective: variables are created in order of first appearance.
    if !objective_text.trim().is_empty() {
        let toks = tokenize(&objective_text);
        let body: Vec<&str> = match toks.iter().position(|t| t == ":") {
            Some(p) => toks[p + 1..].iter().map(String::as_str).collect(),
            None => toks.iter().map(String::as_str).collect(),
        };
        let (terms, constant) = r.linear(&body)?;
        for (j, a) in terms {
            r.model.objective[j] += a;
        }
        r.model.offset = constant;
    }

    for (k, row) in rows.iter().enumerate() {
        let toks = tokenize(row);
        let (name, body): (String, Vec<&str>) = match toks.iter().position(|t| t == ":") {
            Some(p) => (toks[..p].join(""), toks[p + 1..].iter().map(String::as_str).collect()),
            None => (format!("r{k}"), toks.iter().map(String::as_str).collect()),
        };
        let pos = body
            .iter()
            .position(|t| sense_of(t).is_some())
            .ok_or_else(|| Error::Parse(format!("row '{name}' has no comparison operator")))?;
        let sense = sense_of(body[pos]).unwrap();
        let (coeffs, constant) = r.linear(&body[..pos])?;
        let rhs_toks = &body[pos + 1..];
        let rhs = match rhs_toks {
            [v] => parse_num(v)?,
            _ => return Err(Error::Parse(format!("row '{name}' has a malformed right-hand side"))),
        };
        r.model.add_constraint(name, coeffs, sense, rhs - constant);
    }

    for line in &bound_lines {
        let toks = tokenize(line);
        let t: Vec<&str> = toks.iter().map(String::as_str).collect();
        let bad = || Error::Parse(format!("malformed bound '{line}'"));
        match t.as_slice() {
            [name, free] if free.eq_ignore_ascii_case("free") => {
                let j = r.var(name);
                r.model.lower[j] = f64::NEG_INFINITY;
                r.model.upper[j] = f64::INFINITY;
            }
            [lo, s1, name, s2, hi] if sense_of(s1) == Some(Sense::Le) && sense_of(s2) == Some(Sense::Le) => {
                let j = r.var(name);
                r.model.lower[j] = parse_num(lo)?;
                r.model.upper[j] = parse_num(hi)?;
            }
            [name, s, v] if !is_num(name) => {
                let j = r.var(name);
                let v = parse_num(v)?;
                match sense_of(s).ok_or_else(bad)? {
                    Sense::Le => r.model.upper[j] = v,
                    Sense::Ge => r.model.lower[j] = v,
                    Sense::Eq => {
                        r.model.lower[j] = v;
                        r.model.upper[j] = v;
                    }
                }
            }
            [v, s, name] => {
                let j = r.var(name);
                let v = parse_num(v)?;
                match sense_of(s).ok_or_else(bad)? {
                    Sense::Le => r.model.lower[j] = v,
                    Sense::Ge => r.model.upper[j] = v,
                    Sense::Eq => {
                        r.model.lower[j] = v;
                        r.model.upper[j] = v;
                    }
                }
            }
            _ => return Err(bad()),
        }
    }

    for name in binaries {
        let j = r.var(&name);
        r.model.binary[j] = true;
        if r.model.upper[j] == f64::INFINITY {
            r.model.upper[j] = 1.0;
        }
        r.model.lower[j] = r.model.lower[j].max(0.0);
    }
    r.model.validate()?;
    Ok(r.model)
}
