//! Plain-text model files.
//!
//! ```text
//! label: model-IV
//! pairing: fully-local
//! lambda  u(A0)  u(A1)  v(B0)  v(B1)  w(C0)  w(C1)  rho(x'yz)  rho(xy'z)
//! 1       +1     +1     +1     +1     +1     +1     1          1/2
//! 2       +1     -1     +1     -1     +1     +1     0          1/2
//! ```
//!
//! Response headers depend on the pairing: a joint pair writes
//! `u(A0,B0) u(A0,B1) u(A1,B0) u(A1,B1)` for its four joint signs. The
//! `rho(...)` columns are optional, so a file may hold a bare strategy.
//! Blank lines and `#` comments are ignored.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use crate::context::{Context, Party};
use crate::model::{build_model, ContextDistribution, MdlModel, ModelError, Pairing, ResponseTable};
use crate::num::{exact_string, parse_rational, Rational};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum FormatError {
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Model(#[from] ModelError),
}

fn syntax(line: usize, column: usize, message: impl Into<String>) -> FormatError {
    FormatError::Syntax {
        line,
        column,
        message: message.into(),
    }
}

/// The six response column names for a pairing, in storage order.
pub fn response_headers(pairing: Pairing) -> [String; 6] {
    let single = |p: Party, s: u8| format!("{}({}{})", p.response_symbol(), p.letter(), s);
    match pairing.joint_pair() {
        None => [
            single(Party::A, 0),
            single(Party::A, 1),
            single(Party::B, 0),
            single(Party::B, 1),
            single(Party::C, 0),
            single(Party::C, 1),
        ],
        Some(pair) => {
            let (p, q) = pair.parties();
            let r = pair.complement();
            let joint = |sp: u8, sq: u8| {
                format!(
                    "{}({}{},{}{})",
                    p.response_symbol(),
                    p.letter(),
                    sp,
                    q.letter(),
                    sq
                )
            };
            [
                joint(0, 0),
                joint(0, 1),
                joint(1, 0),
                joint(1, 1),
                single(r, 0),
                single(r, 1),
            ]
        }
    }
}

/// Whitespace-separated tokens with their 1-based character columns.
fn tokens(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s, &line[s..]));
    }
    out.into_iter()
        .map(|(byte, tok)| (line[..byte].chars().count() + 1, tok))
        .collect()
}

fn parse_sign(text: &str) -> Option<i8> {
    match text {
        "+1" | "1" | "+" => Some(1),
        "-1" | "-" => Some(-1),
        _ => None,
    }
}

/// Parses a model file. Distribution columns are validated as a whole
/// once all rows are read, so normalization errors name the context.
pub fn parse_model(text: &str) -> Result<MdlModel, FormatError> {
    let mut label: Option<String> = None;
    let mut pairing: Option<Pairing> = None;
    let mut contexts: Option<Vec<Context>> = None;
    let mut rows: Vec<[i8; 6]> = Vec::new();
    let mut columns: Vec<Vec<Rational>> = Vec::new();
    let mut last_line = 0;

    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        last_line = line_no;
        let line = raw.split('#').next().unwrap_or("");
        if line.trim().is_empty() {
            continue;
        }
        if contexts.is_none() {
            if let Some((key, value)) = line.split_once(':') {
                let column = line.len() - line.trim_start().len() + 1;
                match key.trim() {
                    "label" => {
                        if label.is_some() {
                            return Err(syntax(line_no, column, "duplicate `label:` directive"));
                        }
                        label = Some(value.trim().to_string());
                    }
                    "pairing" => {
                        if pairing.is_some() {
                            return Err(syntax(line_no, column, "duplicate `pairing:` directive"));
                        }
                        let name = value.trim();
                        pairing = Some(Pairing::parse(name).ok_or_else(|| {
                            syntax(
                                line_no,
                                column,
                                format!(
                                    "unknown pairing `{name}` (expected fully-local, joint-ab, joint-ac or joint-bc)"
                                ),
                            )
                        })?);
                    }
                    other => {
                        return Err(syntax(line_no, column, format!("unknown directive `{other}`")))
                    }
                }
                continue;
            }
            contexts = Some(parse_header(
                line_no,
                &tokens(line),
                pairing.unwrap_or(Pairing::FullyLocal),
            )?);
            columns = vec![Vec::new(); contexts.as_ref().map_or(0, Vec::len)];
            continue;
        }

        let fields = tokens(line);
        let width = 7 + columns.len();
        if fields.len() != width {
            let column = fields.get(width).map_or_else(|| raw.chars().count() + 1, |f| f.0);
            return Err(syntax(
                line_no,
                column,
                format!("expected {width} fields, found {}", fields.len()),
            ));
        }
        let (col, lambda) = fields[0];
        if lambda.parse::<usize>().ok() != Some(rows.len() + 1) {
            return Err(syntax(
                line_no,
                col,
                format!("expected lambda {}, found `{lambda}`", rows.len() + 1),
            ));
        }
        let mut row = [0i8; 6];
        for (k, (col, tok)) in fields[1..7].iter().enumerate() {
            row[k] = parse_sign(tok)
                .ok_or_else(|| syntax(line_no, *col, format!("response `{tok}` is not +1 or -1")))?;
        }
        rows.push(row);
        for (k, (col, tok)) in fields[7..].iter().enumerate() {
            let value = parse_rational(tok)
                .map_err(|_| syntax(line_no, *col, format!("`{tok}` is not an exact rational")))?;
            columns[k].push(value);
        }
    }

    let contexts = contexts.ok_or_else(|| syntax(last_line + 1, 1, "missing header row"))?;
    if rows.is_empty() {
        return Err(syntax(last_line + 1, 1, "no hidden-variable rows"));
    }
    let responses = ResponseTable::new(pairing.unwrap_or(Pairing::FullyLocal), rows)?;
    let vectors: BTreeMap<Context, Vec<Rational>> = contexts.into_iter().zip(columns).collect();
    let distributions = ContextDistribution::new(vectors)?;
    Ok(build_model(
        responses,
        distributions,
        label.unwrap_or_else(|| "model".to_string()),
    )?)
}

fn parse_header(
    line_no: usize,
    fields: &[(usize, &str)],
    pairing: Pairing,
) -> Result<Vec<Context>, FormatError> {
    let expected = response_headers(pairing);
    let first = fields.first().copied().unwrap_or((1, ""));
    if first.1 != "lambda" {
        return Err(syntax(
            line_no,
            first.0,
            format!("header must start with `lambda`, found `{}`", first.1),
        ));
    }
    for (k, name) in expected.iter().enumerate() {
        match fields.get(k + 1) {
            Some((_, tok)) if tok == name => {}
            Some((col, tok)) => {
                return Err(syntax(
                    line_no,
                    *col,
                    format!("expected response column `{name}` for {pairing}, found `{tok}`"),
                ))
            }
            None => {
                return Err(syntax(
                    line_no,
                    fields.last().map_or(1, |f| f.0 + f.1.chars().count()),
                    format!("missing response column `{name}`"),
                ))
            }
        }
    }
    let mut contexts: Vec<Context> = Vec::new();
    for (col, tok) in &fields[7..] {
        let inner = tok
            .strip_prefix("rho(")
            .and_then(|t| t.strip_suffix(')'))
            .ok_or_else(|| syntax(line_no, *col, format!("expected `rho(<context>)`, found `{tok}`")))?;
        let ctx: Context = inner
            .parse()
            .map_err(|e| syntax(line_no, *col, format!("{e}")))?;
        if contexts.contains(&ctx) {
            return Err(syntax(line_no, *col, format!("context {ctx} appears twice")));
        }
        contexts.push(ctx);
    }
    Ok(contexts)
}

fn sign_text(v: i8) -> &'static str {
    if v > 0 {
        "+1"
    } else {
        "-1"
    }
}

/// Writes the canonical aligned form; [`parse_model`] reads it back to an
/// equal model and rewriting gives identical bytes.
pub fn write_model(model: &MdlModel) -> String {
    let responses = model.responses();
    let contexts: Vec<&Context> = model.distributions().contexts().collect();
    let mut table: Vec<Vec<String>> = Vec::with_capacity(responses.len() + 1);
    let mut header = vec!["lambda".to_string()];
    header.extend(response_headers(responses.pairing()));
    header.extend(contexts.iter().map(|c| format!("rho({c})")));
    table.push(header);
    for (lambda, row) in responses.rows().iter().enumerate() {
        let mut cells = vec![(lambda + 1).to_string()];
        cells.extend(row.iter().map(|v| sign_text(*v).to_string()));
        for ctx in &contexts {
            let vector = model.distribution(ctx).expect("listed context");
            cells.push(exact_string(&vector[lambda]));
        }
        table.push(cells);
    }
    let widths: Vec<usize> = (0..table[0].len())
        .map(|k| table.iter().map(|r| r[k].chars().count()).max().unwrap_or(0))
        .collect();

    let mut out = String::new();
    writeln!(out, "label: {}", model.label()).unwrap();
    writeln!(out, "pairing: {}", responses.pairing()).unwrap();
    for row in &table {
        let mut line = String::new();
        for (k, cell) in row.iter().enumerate() {
            if k > 0 {
                line.push_str("  ");
            }
            line.push_str(cell);
            line.extend(std::iter::repeat_n(' ', widths[k] - cell.chars().count()));
        }
        out.push_str(line.trim_end());
        out.push('\n');
    }
    out
}
