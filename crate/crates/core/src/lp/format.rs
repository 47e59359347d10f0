//! Reader and writer for the CPLEX LP text format (the subset this crate
//! produces: minimization, linear rows, non-negative columns).
use super::{Row, Sense, SolverError, StandardLP};
use crate::numfmt::sig12;
use std::collections::HashMap;
use std::fmt::Write;

const TERMS_PER_LINE: usize = 6;

fn push_terms(out: &mut String, terms: impl Iterator<Item = (f64, String)>) {
    let mut first = true;
    for (i, (coef, name)) in terms.enumerate() {
        if i > 0 && i % TERMS_PER_LINE == 0 {
            out.push_str("\n   ");
        }
        let sign = if coef < 0.0 { "-" } else { "+" };
        if first && coef >= 0.0 {
            write!(out, " {} {}", sig12(coef), name).unwrap();
        } else {
            write!(out, " {} {} {}", sign, sig12(coef.abs()), name).unwrap();
        }
        first = false;
    }
}

/// Renders `lp`. `comments` become leading `\` lines.
pub fn write_lp(lp: &StandardLP, comments: &[String]) -> String {
    let mut out = String::new();
    for c in comments {
        writeln!(out, "\\ {c}").unwrap();
    }
    out.push_str("Minimize\n obj:");
    let obj_terms: Vec<_> = lp
        .objective
        .iter()
        .enumerate()
        .filter(|(_, c)| **c != 0.0)
        .map(|(j, &c)| (c, lp.column_names[j].clone()))
        .collect();
    if obj_terms.is_empty() {
        write!(
            out,
            " 0 {}",
            lp.column_names.first().map(String::as_str).unwrap_or("")
        )
        .unwrap();
    } else {
        push_terms(&mut out, obj_terms.into_iter());
    }
    out.push_str("\nSubject To\n");
    for row in &lp.rows {
        write!(out, " {}:", row.name).unwrap();
        push_terms(
            &mut out,
            row.coefficients
                .iter()
                .map(|&(j, a)| (a, lp.column_names[j].clone())),
        );
        writeln!(out, " {} {}", row.sense, sig12(row.rhs)).unwrap();
    }
    out.push_str("Bounds\n");
    for name in &lp.column_names {
        writeln!(out, " {name} >= 0").unwrap();
    }
    out.push_str("End\n");
    out
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(f64),
    Name(String),
    Label(String),
    Plus,
    Minus,
    Sense(Sense),
}

fn malformed(msg: impl Into<String>) -> SolverError {
    SolverError::Malformed(msg.into())
}

fn tokenize(text: &str) -> Result<Vec<Token>, SolverError> {
    let mut tokens = Vec::new();
    let chars: Vec<char> = text.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        let c = chars[i];
        match c {
            c if c.is_whitespace() => i += 1,
            '+' => {
                tokens.push(Token::Plus);
                i += 1;
            }
            '-' => {
                tokens.push(Token::Minus);
                i += 1;
            }
            '<' | '>' | '=' => {
                let mut j = i + 1;
                while j < chars.len() && matches!(chars[j], '<' | '>' | '=') {
                    j += 1;
                }
                let op: String = chars[i..j].iter().collect();
                tokens.push(Token::Sense(match op.as_str() {
                    "<=" | "=<" | "<" => Sense::Le,
                    ">=" | "=>" | ">" => Sense::Ge,
                    "=" => Sense::Eq,
                    other => return Err(malformed(format!("unknown operator `{other}`"))),
                }));
                i = j;
            }
            c if c.is_ascii_digit() || c == '.' => {
                let mut j = i + 1;
                while j < chars.len() {
                    let d = chars[j];
                    let exp_sign = matches!(d, '+' | '-') && matches!(chars[j - 1], 'e' | 'E');
                    if d.is_ascii_digit() || d == '.' || d == 'e' || d == 'E' || exp_sign {
                        j += 1;
                    } else {
                        break;
                    }
                }
                let s: String = chars[i..j].iter().collect();
                let v = s
                    .parse()
                    .map_err(|_| malformed(format!("bad number `{s}`")))?;
                tokens.push(Token::Number(v));
                i = j;
            }
            _ => {
                let mut j = i;
                while j < chars.len()
                    && !chars[j].is_whitespace()
                    && !matches!(chars[j], '+' | '-' | '<' | '>' | '=' | ':')
                {
                    j += 1;
                }
                if j == i {
                    return Err(malformed(format!("unexpected character `{c}`")));
                }
                let s: String = chars[i..j].iter().collect();
                if j < chars.len() && chars[j] == ':' {
                    tokens.push(Token::Label(s));
                    i = j + 1;
                } else {
                    tokens.push(Token::Name(s));
                    i = j;
                }
            }
        }
    }
    Ok(tokens)
}

#[derive(Clone, Copy, PartialEq)]
enum Section {
    Preamble,
    Objective,
    Constraints,
    Bounds,
    End,
}

fn section_header(line: &str) -> Option<Section> {
    match line.trim().to_ascii_lowercase().as_str() {
        "minimize" | "minimise" | "minimum" | "min" => Some(Section::Objective),
        "subject to" | "such that" | "st" | "s.t." | "st." => Some(Section::Constraints),
        "bounds" | "bound" => Some(Section::Bounds),
        "end" => Some(Section::End),
        _ => None,
    }
}

/// Linear expression parser: returns `(terms, index after expression)`.
fn parse_terms(tokens: &[Token], mut i: usize) -> Result<(Vec<(f64, String)>, usize), SolverError> {
    let mut terms = Vec::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    while i < tokens.len() {
        match &tokens[i] {
            Token::Plus => {}
            Token::Minus => sign = -sign,
            Token::Number(v) => {
                if coef.is_some() {
                    return Err(malformed("two consecutive numbers in expression"));
                }
                coef = Some(*v);
            }
            Token::Name(n) => {
                terms.push((sign * coef.unwrap_or(1.0), n.clone()));
                sign = 1.0;
                coef = None;
            }
            Token::Sense(_) | Token::Label(_) => break,
        }
        i += 1;
    }
    if coef.is_some() {
        return Err(malformed("constant terms are not supported"));
    }
    Ok((terms, i))
}

/// Parses LP text written by [`write_lp`] (or any file within the same
/// subset). Columns are ordered by the `Bounds` section, then by first use.
pub fn parse_lp(text: &str) -> Result<StandardLP, SolverError> {
    let mut sections: HashMap<u8, String> = HashMap::new();
    let mut current = Section::Preamble;
    for raw in text.lines() {
        let line = match raw.find('\\') {
            Some(p) => &raw[..p],
            None => raw,
        };
        if line.trim().is_empty() {
            continue;
        }
        let lower = line.trim().to_ascii_lowercase();
        if lower.starts_with("maximize") || lower.starts_with("maximise") || lower == "max" {
            return Err(malformed("only minimization is supported"));
        }
        if let Some(s) = section_header(line) {
            current = s;
            continue;
        }
        let key = match current {
            Section::Preamble => {
                return Err(malformed(format!("content before objective: `{line}`")))
            }
            Section::End => return Err(malformed("content after End")),
            Section::Objective => 0,
            Section::Constraints => 1,
            Section::Bounds => 2,
        };
        let buf = sections.entry(key).or_default();
        buf.push_str(line);
        buf.push('\n');
    }

    let mut order: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut intern = |name: &str, order: &mut Vec<String>| -> usize {
        *index.entry(name.to_string()).or_insert_with(|| {
            order.push(name.to_string());
            order.len() - 1
        })
    };

    // bounds first so they define column order
    let bound_tokens = tokenize(sections.get(&2).map(String::as_str).unwrap_or(""))?;
    let mut i = 0;
    while i < bound_tokens.len() {
        match &bound_tokens[i..] {
            [Token::Name(n), Token::Sense(Sense::Ge), Token::Number(v), ..] if *v == 0.0 => {
                intern(n, &mut order);
                i += 3;
            }
            [Token::Number(v), Token::Sense(Sense::Le), Token::Name(n), ..] if *v == 0.0 => {
                intern(n, &mut order);
                i += 3;
            }
            _ => return Err(malformed("only `name >= 0` bounds are supported")),
        }
    }

    let obj_tokens = tokenize(sections.get(&0).map(String::as_str).unwrap_or(""))?;
    let mut start = 0;
    if let Some(Token::Label(_)) = obj_tokens.first() {
        start = 1;
    }
    let (obj_terms, end) = parse_terms(&obj_tokens, start)?;
    if end != obj_tokens.len() {
        return Err(malformed("unexpected token in objective"));
    }
    let mut objective_terms = Vec::new();
    for (c, n) in obj_terms {
        objective_terms.push((intern(&n, &mut order), c));
    }

    let con_tokens = tokenize(sections.get(&1).map(String::as_str).unwrap_or(""))?;
    let mut rows = Vec::new();
    let mut i = 0;
    while i < con_tokens.len() {
        let name = match &con_tokens[i] {
            Token::Label(l) => {
                i += 1;
                l.clone()
            }
            _ => format!("R{}", rows.len() + 1),
        };
        let (terms, j) = parse_terms(&con_tokens, i)?;
        let sense = match con_tokens.get(j) {
            Some(Token::Sense(s)) => *s,
            _ => return Err(malformed(format!("row `{name}` has no comparison"))),
        };
        let (rhs, next) = match &con_tokens[j + 1..] {
            [Token::Minus, Token::Number(v), ..] => (-v, j + 3),
            [Token::Plus, Token::Number(v), ..] => (*v, j + 3),
            [Token::Number(v), ..] => (*v, j + 2),
            _ => return Err(malformed(format!("row `{name}` has no numeric rhs"))),
        };
        let mut coefficients: Vec<(usize, f64)> = Vec::new();
        for (c, n) in terms {
            let col = intern(&n, &mut order);
            match coefficients.iter_mut().find(|(k, _)| *k == col) {
                Some((_, v)) => *v += c,
                None => coefficients.push((col, c)),
            }
        }
        rows.push(Row {
            name,
            coefficients,
            sense,
            rhs,
        });
        i = next;
    }

    let mut objective = vec![0.0; order.len()];
    for (j, c) in objective_terms {
        objective[j] += c;
    }
    Ok(StandardLP {
        column_names: order,
        objective,
        rows,
    })
}
