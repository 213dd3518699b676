//! Plain-text form files and trajectory export.
//!
//! Form files are UTF-8 text with one form per line:
//!
//! ```text
//! # a comment
//! omega1 = e12 + e34
//! psi2   = e135 + e425
//! de5    = 3/2 e12 - e34
//! ```
//!
//! Monomials are signed terms `c eI` with `I` a word of digit indices
//! (`e12` means `e¹∧e²`); coefficients may be integers, fractions `a/b` or
//! decimals, and parse to exact rationals. Whitespace and `*` between the
//! coefficient and the basis symbol are ignored. A bare `0` denotes the zero
//! form. See `docs/formats.md`.

use std::collections::BTreeMap;

use thiserror::Error;

use crate::exterior::Form;
use crate::liealg::{LieDifferential, DIM};
use crate::scalar::{Rational, Scalar};
use crate::su2::SU2Triple;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("line {line}, column {col}: {message}")]
    Syntax {
        line: usize,
        col: usize,
        message: String,
    },
    #[error("missing entry '{0}'")]
    Missing(String),
    #[error("entry '{name}' has grade {got}, expected {expected}")]
    WrongGrade {
        name: String,
        expected: usize,
        got: usize,
    },
}

/// A parsed form file: named forms with exact rational coefficients.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FormFile {
    pub entries: BTreeMap<String, Form<Rational>>,
}

impl FormFile {
    pub fn get(&self, name: &str) -> Result<&Form<Rational>, ParseError> {
        self.entries
            .get(name)
            .ok_or_else(|| ParseError::Missing(name.to_string()))
    }

    pub fn get_f64(&self, name: &str, grade: usize) -> Result<Form<f64>, ParseError> {
        let f = self.get(name)?;
        if f.grade() != grade {
            return Err(ParseError::WrongGrade {
                name: name.to_string(),
                expected: grade,
                got: f.grade(),
            });
        }
        Ok(f.map(|c| c.to_f64()))
    }
}

fn parse_rational(tok: &str, line: usize, col: usize) -> Result<Rational, ParseError> {
    let syntax = |message: String| ParseError::Syntax { line, col, message };
    if let Some((num, den)) = tok.split_once('/') {
        let n: i64 = num
            .parse()
            .map_err(|_| syntax(format!("bad numerator '{num}'")))?;
        let d: i64 = den
            .parse()
            .map_err(|_| syntax(format!("bad denominator '{den}'")))?;
        if d == 0 {
            return Err(syntax("zero denominator".into()));
        }
        return Ok(Rational::new(n.into(), d.into()));
    }
    if let Some((int_part, frac_part)) = tok.split_once('.') {
        let digits = frac_part.len() as u32;
        let combined = format!("{int_part}{frac_part}");
        let n: i64 = combined
            .parse()
            .map_err(|_| syntax(format!("bad decimal '{tok}'")))?;
        return Ok(Rational::new(n.into(), 10i64.pow(digits).into()));
    }
    let n: i64 = tok
        .parse()
        .map_err(|_| syntax(format!("bad coefficient '{tok}'")))?;
    Ok(Rational::from_integer(n.into()))
}

/// Parse one form expression (the right-hand side of a line).
pub fn parse_form_expr(expr: &str, line: usize) -> Result<Form<Rational>, ParseError> {
    let syntax = |col: usize, message: String| ParseError::Syntax { line, col, message };
    let cleaned = expr.replace('*', " ");
    let trimmed = cleaned.trim();
    if trimmed == "0" {
        // grade is unknown for a bare zero; default to grade 2 on dim 5,
        // the common case for differentials
        return Ok(Form::zero(DIM, 2));
    }

    // tokenize into signed terms
    let mut terms: Vec<(Rational, Vec<usize>)> = Vec::new();
    let mut rest = trimmed;
    let mut sign = Rational::from_integer(1.into());
    let mut col = 0usize;
    while !rest.is_empty() {
        rest = rest.trim_start();
        if rest.is_empty() {
            break;
        }
        if let Some(r) = rest.strip_prefix('+') {
            sign = Rational::from_integer(1.into());
            rest = r;
            continue;
        }
        if let Some(r) = rest.strip_prefix('-') {
            sign = -Rational::from_integer(1.into());
            rest = r;
            continue;
        }
        // a term: optional coefficient then eI
        let term_end = rest.find(['+', '-']).unwrap_or(rest.len());
        let (term, tail) = rest.split_at(term_end);
        let term = term.trim();
        col += 1;
        let (coeff, basis) = match term.find('e') {
            Some(0) => (Rational::from_integer(1.into()), term),
            Some(pos) => {
                let c = parse_rational(term[..pos].trim(), line, col)?;
                (c, &term[pos..])
            }
            None => return Err(syntax(col, format!("expected a basis symbol in '{term}'"))),
        };
        let digits = &basis[1..];
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(syntax(col, format!("bad basis symbol '{basis}'")));
        }
        let indices: Vec<usize> = digits
            .chars()
            .map(|c| c.to_digit(10).unwrap() as usize)
            .collect();
        if indices.iter().any(|&i| i == 0 || i > DIM) {
            return Err(syntax(col, format!("index out of range in '{basis}'")));
        }
        terms.push((sign.clone() * coeff, indices));
        rest = tail;
    }
    if terms.is_empty() {
        return Err(syntax(0, "empty expression".into()));
    }
    let grade = terms[0].1.len();
    if terms.iter().any(|(_, idx)| idx.len() != grade) {
        return Err(syntax(0, "mixed grades in one expression".into()));
    }
    let mut out = Form::zero(DIM, grade);
    for (c, idx) in terms {
        out = out.add(&Form::monomial(DIM, &idx, c));
    }
    Ok(out)
}

/// Parse a whole form file.
pub fn parse_form_file(text: &str) -> Result<FormFile, ParseError> {
    let mut entries = BTreeMap::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = lineno + 1;
        let stripped = raw.split('#').next().unwrap_or("").trim();
        if stripped.is_empty() {
            continue;
        }
        let (name, expr) = stripped.split_once('=').ok_or(ParseError::Syntax {
            line,
            col: 0,
            message: "expected 'name = expression'".into(),
        })?;
        let form = parse_form_expr(expr, line)?;
        entries.insert(name.trim().to_string(), form);
    }
    Ok(FormFile { entries })
}

/// Read a differential from entries `de1 … de5` (missing entries are zero).
pub fn differential_from_file(file: &FormFile) -> Result<LieDifferential<Rational>, ParseError> {
    let mut images: [Form<Rational>; 5] = std::array::from_fn(|_| Form::zero(DIM, 2));
    for (i, img) in images.iter_mut().enumerate() {
        let name = format!("de{}", i + 1);
        if let Some(f) = file.entries.get(&name) {
            if f.grade() != 2 {
                return Err(ParseError::WrongGrade {
                    name,
                    expected: 2,
                    got: f.grade(),
                });
            }
            *img = f.clone();
        }
    }
    LieDifferential::new(images).map_err(|_| ParseError::Missing("valid differential".into()))
}

/// Read a structure triple from entries `omega1`, `psi2`, `psi3`.
pub fn triple_from_file(file: &FormFile) -> Result<SU2Triple, ParseError> {
    Ok(SU2Triple {
        omega1: file.get_f64("omega1", 2)?,
        psi2: file.get_f64("psi2", 3)?,
        psi3: file.get_f64("psi3", 3)?,
        orientation: 1,
    })
}

/// Render a form back to the file syntax (used by reports).
pub fn format_form(f: &Form<f64>) -> String {
    let tuples = crate::exterior::index_tuples(f.dim(), f.grade());
    let mut parts: Vec<String> = Vec::new();
    for (idx, c) in f.coeffs().iter().enumerate() {
        if *c == 0.0 {
            continue;
        }
        let word: String = tuples[idx].iter().map(|i| (i + 1).to_string()).collect();
        let sign = if *c < 0.0 {
            "-"
        } else if parts.is_empty() {
            ""
        } else {
            "+"
        };
        let mag = c.abs();
        if (mag - 1.0).abs() < 1e-15 {
            parts.push(format!("{sign} e{word}"));
        } else {
            parts.push(format!("{sign} {mag} e{word}"));
        }
    }
    if parts.is_empty() {
        "0".to_string()
    } else {
        parts.join(" ").trim().to_string()
    }
}

/// Render a trajectory as CSV, one row per sample; the header carries the
/// serialized configuration so outputs are self-describing.
pub fn trajectory_csv(traj: &crate::flow::Trajectory, config_json: &str) -> String {
    let names = traj.family.param_names();
    let mut out = String::new();
    out.push_str(&format!("# {config_json}\n"));
    out.push('t');
    for n in names {
        out.push_str(&format!(",{n}"));
    }
    let n_int = traj.samples.first().map(|s| s.integrals.len()).unwrap_or(0);
    for i in 0..n_int {
        out.push_str(&format!(",integral_{i}"));
    }
    out.push_str(",hypo_residual\n");
    for s in &traj.samples {
        out.push_str(&format!("{}", s.t));
        for v in &s.state {
            out.push_str(&format!(",{v}"));
        }
        for v in &s.integrals {
            match v {
                Some(x) => out.push_str(&format!(",{x}")),
                None => out.push(','),
            }
        }
        out.push_str(&format!(",{}\n", s.hypo_residual));
    }
    out
}
