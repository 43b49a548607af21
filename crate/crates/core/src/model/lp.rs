//! CPLEX-style LP text for the model.
//!
//! Export is deterministic: objective and rows in model order, continuous
//! variables in `Bounds`, binaries in `Binaries`, eight terms per line.
//! The reader accepts that output plus the usual sense spellings (`<`, `=<`,
//! `>`, `=>`), implicit unit coefficients and `\` comments.

use std::collections::HashMap;
use std::fmt::Write;

use thiserror::Error;

use super::{ConstraintTag, IlpModel, LinearConstraint, Sense, VarRef, Variable};

const TERMS_PER_LINE: usize = 8;

#[derive(Debug, Error, PartialEq)]
#[error("line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

fn num(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v}")
    }
}

fn write_terms(out: &mut String, terms: &[(VarRef, f64)]) {
    for (k, (var, coef)) in terms.iter().enumerate() {
        if k > 0 && k % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if *coef < 0.0 { "-" } else { "+" };
        if k == 0 && sign == "+" {
            write!(out, " {} {}", num(coef.abs()), var).unwrap();
        } else {
            write!(out, " {} {} {}", sign, num(coef.abs()), var).unwrap();
        }
    }
}

pub fn export_lp(model: &IlpModel) -> String {
    let mut out = String::new();
    out.push_str("\\ wsn-sched energy scheduling model\n");
    out.push_str("Minimize\n obj:");
    write_terms(&mut out, &model.objective);
    out.push_str("\nSubject To\n");
    for c in &model.constraints {
        write!(out, " {}:", c.tag).unwrap();
        write_terms(&mut out, &c.terms);
        if c.terms.is_empty() {
            out.push_str(" 0");
        }
        writeln!(out, " {} {}", c.sense, num(c.rhs)).unwrap();
    }
    out.push_str("Bounds\n");
    for v in model.variables.iter().filter(|v| !v.binary) {
        if v.upper == f64::INFINITY {
            writeln!(out, " {} >= {}", v.var, num(v.lower)).unwrap();
        } else {
            writeln!(out, " {} <= {} <= {}", num(v.lower), v.var, num(v.upper)).unwrap();
        }
    }
    out.push_str("Binaries\n");
    for (k, v) in model.variables.iter().filter(|v| v.binary).enumerate() {
        if k % TERMS_PER_LINE == 0 {
            if k > 0 {
                out.push('\n');
            }
            out.push(' ');
        } else {
            out.push(' ');
        }
        write!(out, "{}", v.var).unwrap();
    }
    if model.variables.iter().any(|v| v.binary) {
        out.push('\n');
    }
    out.push_str("End\n");
    out
}

#[derive(Debug, Clone, PartialEq)]
struct Token<'a> {
    text: &'a str,
    line: usize,
    column: usize,
}

fn tokenize(text: &str) -> Vec<Token<'_>> {
    let mut tokens = Vec::new();
    for (ln, line) in text.lines().enumerate() {
        let line = match line.find('\\') {
            Some(p) => &line[..p],
            None => line,
        };
        let mut start = None;
        for (col, ch) in line.char_indices().chain(std::iter::once((line.len(), ' '))) {
            if ch.is_whitespace() {
                if let Some(s) = start.take() {
                    split_token(&line[s..col], ln + 1, s + 1, &mut tokens);
                }
            } else if start.is_none() {
                start = Some(col);
            }
        }
    }
    tokens
}

/// Splits glued forms such as `obj:`, `x<=1` or `-y` into separate tokens.
fn split_token<'a>(word: &'a str, line: usize, column: usize, out: &mut Vec<Token<'a>>) {
    let bytes = word.as_bytes();
    let mut s = 0;
    let mut k = 0;
    while k < bytes.len() {
        let c = bytes[k];
        if matches!(c, b'<' | b'>' | b'=' | b':') {
            if k > s {
                out.push(Token { text: &word[s..k], line, column: column + s });
            }
            let mut e = k + 1;
            if c != b':' {
                while e < bytes.len() && matches!(bytes[e], b'<' | b'>' | b'=') {
                    e += 1;
                }
            }
            out.push(Token { text: &word[k..e], line, column: column + k });
            s = e;
            k = e;
            continue;
        }
        if matches!(c, b'+' | b'-') {
            let exponent = k > s + 1
                && matches!(bytes[k - 1], b'e' | b'E')
                && word[s..k - 1].parse::<f64>().is_ok();
            let starts_number = k + 1 < bytes.len() && (bytes[k + 1].is_ascii_digit() || bytes[k + 1] == b'.');
            if !exponent {
                if k > s {
                    out.push(Token { text: &word[s..k], line, column: column + s });
                    s = k;
                }
                if !starts_number {
                    out.push(Token { text: &word[k..k + 1], line, column: column + k });
                    s = k + 1;
                }
            }
        }
        k += 1;
    }
    if s < bytes.len() {
        out.push(Token { text: &word[s..], line, column: column + s });
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Section {
    Objective,
    Constraints,
    Bounds,
    Binaries,
    End,
}

struct Parser<'a> {
    tokens: Vec<Token<'a>>,
    pos: usize,
}

fn section_at(tokens: &[Token], pos: usize) -> Option<(Section, usize)> {
    let t = tokens.get(pos)?.text.to_ascii_lowercase();
    let next = tokens.get(pos + 1).map(|t| t.text.to_ascii_lowercase());
    match t.as_str() {
        "minimize" | "minimise" | "minimum" | "min" => Some((Section::Objective, 1)),
        "subject" if next.as_deref() == Some("to") => Some((Section::Constraints, 2)),
        "such" if next.as_deref() == Some("that") => Some((Section::Constraints, 2)),
        "st" | "s.t." => Some((Section::Constraints, 1)),
        "bounds" | "bound" => Some((Section::Bounds, 1)),
        "binaries" | "binary" | "bin" => Some((Section::Binaries, 1)),
        "end" => Some((Section::End, 1)),
        _ => None,
    }
}

fn parse_sense(text: &str) -> Option<Sense> {
    match text {
        "<=" | "=<" | "<" => Some(Sense::Le),
        ">=" | "=>" | ">" => Some(Sense::Ge),
        "=" => Some(Sense::Eq),
        _ => None,
    }
}

fn parse_number(text: &str) -> Option<f64> {
    match text.to_ascii_lowercase().as_str() {
        "inf" | "+inf" | "infinity" | "+infinity" => Some(f64::INFINITY),
        "-inf" | "-infinity" => Some(f64::NEG_INFINITY),
        s => s.parse::<f64>().ok().filter(|v| v.is_finite()),
    }
}

impl<'a> Parser<'a> {
    fn peek(&self) -> Option<&Token<'a>> {
        self.tokens.get(self.pos)
    }

    fn at_section(&self) -> bool {
        section_at(&self.tokens, self.pos).is_some()
    }

    fn error_at(&self, tok: Option<&Token>, message: impl Into<String>) -> ParseError {
        let (line, column) = match tok.or_else(|| self.tokens.last()) {
            Some(t) => (t.line, t.column),
            None => (1, 1),
        };
        ParseError {
            line,
            column,
            message: message.into(),
        }
    }

    fn var(&self, tok: &Token) -> Result<VarRef, ParseError> {
        VarRef::from_name(tok.text)
            .ok_or_else(|| self.error_at(Some(tok), format!("unknown variable name {:?}", tok.text)))
    }

    /// Linear expression up to a sense operator, a label or a section keyword.
    fn terms(&mut self) -> Result<Vec<(VarRef, f64)>, ParseError> {
        let mut terms = Vec::new();
        loop {
            let Some(tok) = self.peek().cloned() else { break };
            if self.at_section() || parse_sense(tok.text).is_some() || is_sense_like(tok.text) {
                break;
            }
            if self.tokens.get(self.pos + 1).map(|t| t.text) == Some(":") {
                break;
            }
            let mut sign = 1.0;
            let mut coef = None;
            let mut cur = tok;
            loop {
                match cur.text {
                    "+" => {}
                    "-" => sign = -sign,
                    t => match parse_number(t) {
                        Some(v) if coef.is_none() => coef = Some(v),
                        Some(_) => {
                            return Err(self.error_at(Some(&cur), "two coefficients in a row"))
                        }
                        None => break,
                    },
                }
                self.pos += 1;
                cur = match self.peek() {
                    Some(t) => t.clone(),
                    None => return Err(self.error_at(None, "expression ends without a variable")),
                };
            }
            if coef.is_none() && parse_number(cur.text).is_some() {
                return Err(self.error_at(Some(&cur), "dangling coefficient"));
            }
            if parse_sense(cur.text).is_some() || is_sense_like(cur.text) {
                if coef == Some(0.0) && terms.is_empty() {
                    // "0 <= rhs" placeholder for an empty row
                    break;
                }
                return Err(self.error_at(Some(&cur), "coefficient without a variable"));
            }
            let var = self.var(&cur)?;
            self.pos += 1;
            terms.push((var, sign * coef.unwrap_or(1.0)));
        }
        Ok(terms)
    }

    fn expect_number(&mut self, what: &str) -> Result<f64, ParseError> {
        let mut sign = 1.0;
        loop {
            let tok = self.peek().cloned();
            match tok.as_ref().map(|t| t.text) {
                Some("-") => sign = -sign,
                Some("+") => {}
                Some(t) => match parse_number(t) {
                    Some(v) => {
                        self.pos += 1;
                        return Ok(sign * v);
                    }
                    None => {
                        return Err(self.error_at(tok.as_ref(), format!("expected {what}, found {t:?}")))
                    }
                },
                None => return Err(self.error_at(None, format!("expected {what}"))),
            }
            self.pos += 1;
        }
    }

    fn expect_sense(&mut self) -> Result<Sense, ParseError> {
        let tok = self.peek().cloned();
        match tok.as_ref().and_then(|t| parse_sense(t.text)) {
            Some(s) => {
                self.pos += 1;
                Ok(s)
            }
            None => {
                let msg = match &tok {
                    Some(t) => format!("invalid sense symbol {:?}", t.text),
                    None => "missing sense symbol".to_string(),
                };
                Err(self.error_at(tok.as_ref(), msg))
            }
        }
    }

    fn label(&mut self) -> Option<Token<'a>> {
        let tok = self.peek()?.clone();
        if self.tokens.get(self.pos + 1).map(|t| t.text) == Some(":") {
            self.pos += 2;
            Some(tok)
        } else {
            None
        }
    }
}

fn is_sense_like(text: &str) -> bool {
    !text.is_empty() && text.bytes().all(|b| matches!(b, b'<' | b'>' | b'='))
}

pub fn parse_lp(text: &str) -> Result<IlpModel, ParseError> {
    let mut p = Parser {
        tokens: tokenize(text),
        pos: 0,
    };
    let mut model = IlpModel::default();
    let mut binaries: Vec<VarRef> = Vec::new();
    let mut bounds: Vec<(VarRef, f64, f64)> = Vec::new();
    let mut seen_objective = false;

    match section_at(&p.tokens, 0) {
        Some((Section::Objective, n)) => p.pos = n,
        _ => return Err(p.error_at(p.tokens.first(), "expected Minimize section")),
    }
    let mut section = Section::Objective;
    loop {
        if let Some((s, n)) = section_at(&p.tokens, p.pos) {
            if s == Section::Objective {
                return Err(p.error_at(p.peek(), "repeated objective section"));
            }
            p.pos += n;
            section = s;
            if s == Section::End {
                break;
            }
            continue;
        }
        if p.peek().is_none() {
            return Err(p.error_at(None, "missing End"));
        }
        match section {
            Section::Objective => {
                if seen_objective {
                    return Err(p.error_at(p.peek(), "unexpected token in objective"));
                }
                p.label();
                model.objective = p.terms()?;
                seen_objective = true;
            }
            Section::Constraints => {
                let start = p.peek().cloned();
                let label = p
                    .label()
                    .ok_or_else(|| p.error_at(start.as_ref(), "constraint without a name"))?;
                let tag = ConstraintTag::from_name(label.text).ok_or_else(|| {
                    p.error_at(Some(&label), format!("unrecognized constraint name {:?}", label.text))
                })?;
                let terms = p.terms()?;
                let sense = p.expect_sense()?;
                let rhs = p.expect_number("right-hand side")?;
                model.constraints.push(LinearConstraint {
                    terms,
                    sense,
                    rhs,
                    tag,
                });
            }
            Section::Bounds => {
                let first = p.peek().cloned().unwrap();
                if parse_number(first.text).is_some() || first.text == "-" {
                    let lo = p.expect_number("lower bound")?;
                    let s1 = p.expect_sense()?;
                    let vt = p.peek().cloned().ok_or_else(|| p.error_at(None, "expected variable"))?;
                    let var = p.var(&vt)?;
                    p.pos += 1;
                    if s1 != Sense::Le {
                        return Err(p.error_at(Some(&vt), "bounds must read lower <= var <= upper"));
                    }
                    let mut hi = f64::INFINITY;
                    if p.peek().and_then(|t| parse_sense(t.text)).is_some() {
                        if p.expect_sense()? != Sense::Le {
                            return Err(p.error_at(Some(&vt), "bounds must read lower <= var <= upper"));
                        }
                        hi = p.expect_number("upper bound")?;
                    }
                    bounds.push((var, lo, hi));
                } else {
                    let var = p.var(&first)?;
                    p.pos += 1;
                    let sense = p.expect_sense()?;
                    let v = p.expect_number("bound")?;
                    match sense {
                        Sense::Ge => bounds.push((var, v, f64::INFINITY)),
                        Sense::Le => bounds.push((var, 0.0, v)),
                        Sense::Eq => bounds.push((var, v, v)),
                    }
                }
            }
            Section::Binaries => {
                let tok = p.peek().cloned().unwrap();
                binaries.push(p.var(&tok)?);
                p.pos += 1;
            }
            Section::End => unreachable!(),
        }
    }
    if let Some(extra) = p.peek() {
        return Err(p.error_at(Some(extra), "content after End"));
    }

    let mut declared: HashMap<VarRef, usize> = HashMap::new();
    for var in binaries {
        if declared.insert(var, model.variables.len()).is_none() {
            model.variables.push(Variable {
                var,
                lower: 0.0,
                upper: 1.0,
                binary: true,
            });
        }
    }
    for (var, lo, hi) in bounds {
        match declared.get(&var) {
            Some(&k) if model.variables[k].binary => {}
            Some(&k) => {
                model.variables[k].lower = lo;
                model.variables[k].upper = hi;
            }
            None => {
                declared.insert(var, model.variables.len());
                model.variables.push(Variable {
                    var,
                    lower: lo,
                    upper: hi,
                    binary: false,
                });
            }
        }
    }
    let referenced: Vec<VarRef> = model
        .objective
        .iter()
        .chain(model.constraints.iter().flat_map(|c| c.terms.iter()))
        .map(|t| t.0)
        .collect();
    for var in referenced {
        if let std::collections::hash_map::Entry::Vacant(e) = declared.entry(var) {
            e.insert(model.variables.len());
            model.variables.push(Variable {
                var,
                lower: 0.0,
                upper: f64::INFINITY,
                binary: false,
            });
        }
    }
    Ok(model)
}
