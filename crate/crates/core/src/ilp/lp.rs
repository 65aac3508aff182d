//! CPLEX LP text format: writer and a reader for the subset it writes.

use std::io::{self, Write};

use thiserror::Error;

use super::{Constraint, LinearModel, Relation, Term, VarKind};

const WIDTH: usize = 78;

#[derive(Debug, Error, PartialEq)]
pub enum LpParseError {
    #[error("line {line}: {detail}")]
    Syntax { line: usize, detail: String },
    #[error("missing section {0}")]
    MissingSection(&'static str),
}

fn num(x: f64) -> String {
    if x == f64::INFINITY {
        "+inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else if x == 0.0 {
        "0".into()
    } else {
        format!("{x}")
    }
}

/// Accumulates tokens into lines no wider than `WIDTH`.
struct Wrapper {
    lines: Vec<String>,
    current: String,
}

impl Wrapper {
    fn new(first: String) -> Self {
        Wrapper { lines: Vec::new(), current: first }
    }

    fn push(&mut self, token: &str) {
        if self.current.len() + 1 + token.len() > WIDTH && !self.current.trim().is_empty() {
            self.lines.push(std::mem::take(&mut self.current));
            self.current = format!("   {token}");
        } else {
            self.current.push(' ');
            self.current.push_str(token);
        }
    }

    fn finish(mut self) -> Vec<String> {
        self.lines.push(self.current);
        self.lines
    }
}

fn expression(model: &LinearModel, terms: &[Term], w: &mut Wrapper) {
    for (i, &(v, a)) in terms.iter().enumerate() {
        let name = &model.variables()[v].name;
        let sign = if a < 0.0 { "-" } else { "+" };
        let mag = a.abs();
        let token = if mag == 1.0 { name.clone() } else { format!("{} {name}", num(mag)) };
        let token = if i == 0 && sign == "+" { token } else { format!("{sign} {token}") };
        w.push(&token);
    }
    if terms.is_empty() {
        w.push("0");
    }
}

/// Writes `model` as LP text. Output depends only on the model.
pub fn export_lp<W: Write>(model: &LinearModel, mut sink: W) -> io::Result<()> {
    writeln!(sink, "\\ minimize the number of active nodes")?;
    writeln!(sink, "Minimize")?;
    let mut w = Wrapper::new(" obj:".into());
    expression(model, model.objective(), &mut w);
    for line in w.finish() {
        writeln!(sink, "{line}")?;
    }
    writeln!(sink, "Subject To")?;
    for c in model.constraints() {
        let mut w = Wrapper::new(format!(" {}:", c.name));
        expression(model, &c.terms, &mut w);
        w.push(c.relation.symbol());
        w.push(&num(c.rhs));
        for line in w.finish() {
            writeln!(sink, "{line}")?;
        }
    }
    writeln!(sink, "Bounds")?;
    for v in model.variables() {
        if v.ub == f64::INFINITY {
            writeln!(sink, " {} >= {}", v.name, num(v.lb))?;
        } else {
            writeln!(sink, " {} <= {} <= {}", num(v.lb), v.name, num(v.ub))?;
        }
    }
    for (title, kind) in [("Binaries", VarKind::Binary), ("Generals", VarKind::Integer)] {
        let names: Vec<&str> = model.variables().iter().filter(|v| v.kind == kind).map(|v| v.name.as_str()).collect();
        if names.is_empty() {
            continue;
        }
        writeln!(sink, "{title}")?;
        let mut w = Wrapper::new(String::new());
        for n in names {
            w.push(n);
        }
        for line in w.finish() {
            writeln!(sink, "{line}")?;
        }
    }
    writeln!(sink, "End")?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Section {
    Objective,
    Constraints,
    Bounds,
    Binaries,
    Generals,
}

fn parse_num(token: &str, line: usize) -> Result<f64, LpParseError> {
    match token {
        "+inf" | "inf" => Ok(f64::INFINITY),
        "-inf" => Ok(f64::NEG_INFINITY),
        _ => token
            .parse()
            .map_err(|_| LpParseError::Syntax { line, detail: format!("expected a number, got {token:?}") }),
    }
}

fn is_number(token: &str) -> bool {
    token.starts_with(|c: char| c.is_ascii_digit() || c == '.')
}

/// Parses `sign? coef? name` sequences up to an optional relation.
struct RowParser<'a> {
    tokens: Vec<(&'a str, usize)>,
}

impl RowParser<'_> {
    fn parse(&self, model: &mut LinearModel) -> Result<(Vec<Term>, Option<(Relation, f64)>), LpParseError> {
        let mut terms = Vec::new();
        let mut i = 0;
        let toks = &self.tokens;
        while i < toks.len() {
            let (tok, line) = toks[i];
            match tok {
                "<=" | ">=" | "=" => {
                    let rel = match tok {
                        "<=" => Relation::Le,
                        ">=" => Relation::Ge,
                        _ => Relation::Eq,
                    };
                    let (rhs, line) = toks
                        .get(i + 1)
                        .ok_or(LpParseError::Syntax { line, detail: "missing right-hand side".into() })?;
                    if i + 2 != toks.len() {
                        return Err(LpParseError::Syntax {
                            line: *line,
                            detail: "trailing tokens after right-hand side".into(),
                        });
                    }
                    return Ok((terms, Some((rel, parse_num(rhs, *line)?))));
                }
                _ => {}
            }
            let mut sign = 1.0;
            let mut tok = tok;
            if tok == "+" || tok == "-" {
                if tok == "-" {
                    sign = -1.0;
                }
                i += 1;
                tok = toks.get(i).ok_or(LpParseError::Syntax { line, detail: "dangling sign".into() })?.0;
            }
            let mut coef = 1.0;
            if is_number(tok) {
                coef = parse_num(tok, line)?;
                i += 1;
                match toks.get(i) {
                    Some((t, _)) if !is_number(t) && !matches!(*t, "+" | "-" | "<=" | ">=" | "=") => tok = t,
                    _ => {
                        // A bare constant: only valid as the placeholder of an empty expression.
                        if coef != 0.0 {
                            return Err(LpParseError::Syntax { line, detail: "constant term in expression".into() });
                        }
                        continue;
                    }
                }
            }
            let v = match model.var(tok) {
                Some(v) => v,
                None => {
                    model.add_var(tok.to_string(), VarKind::Continuous, 0.0, f64::INFINITY).expect("checked absent")
                }
            };
            terms.push((v, sign * coef));
            i += 1;
        }
        Ok((terms, None))
    }
}

/// Reads LP text produced by [`export_lp`] (and simple hand-written
/// models in the same dialect).
pub fn parse_lp(text: &str) -> Result<LinearModel, LpParseError> {
    // Variables are declared in Bounds order, so read that section first.
    let mut sections: Vec<(Section, Vec<(usize, &str)>)> = Vec::new();
    let mut seen_end = false;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let trimmed = raw.trim();
        if trimmed.is_empty() || trimmed.starts_with('\\') {
            continue;
        }
        let header = match trimmed.to_ascii_lowercase().as_str() {
            "minimize" | "minimise" | "min" => Some(Section::Objective),
            "subject to" | "st" | "s.t." => Some(Section::Constraints),
            "bounds" => Some(Section::Bounds),
            "binaries" | "binary" => Some(Section::Binaries),
            "generals" | "general" => Some(Section::Generals),
            "end" => {
                seen_end = true;
                None
            }
            _ => None,
        };
        if seen_end {
            break;
        }
        match header {
            Some(s) => sections.push((s, Vec::new())),
            None => match sections.last_mut() {
                Some((_, lines)) => lines.push((line, raw)),
                None => return Err(LpParseError::Syntax { line, detail: "content before Minimize".into() }),
            },
        }
    }
    let find = |s: Section| sections.iter().find(|(k, _)| *k == s).map(|(_, l)| l.as_slice());

    let mut model = LinearModel::new();
    for &(line, raw) in find(Section::Bounds).unwrap_or(&[]) {
        let toks: Vec<&str> = raw.split_whitespace().collect();
        let (name, lb, ub) = match toks.as_slice() {
            [lb, "<=", name, "<=", ub] => (*name, parse_num(lb, line)?, parse_num(ub, line)?),
            [name, ">=", lb] => (*name, parse_num(lb, line)?, f64::INFINITY),
            [name, "<=", ub] => (*name, 0.0, parse_num(ub, line)?),
            [name, "free"] => (*name, f64::NEG_INFINITY, f64::INFINITY),
            _ => return Err(LpParseError::Syntax { line, detail: format!("unsupported bound {raw:?}") }),
        };
        model
            .add_var(name.to_string(), VarKind::Continuous, lb, ub)
            .map_err(|e| LpParseError::Syntax { line, detail: e.to_string() })?;
    }

    let objective = find(Section::Objective).ok_or(LpParseError::MissingSection("Minimize"))?;
    let mut groups: Vec<(String, Vec<(&str, usize)>)> = Vec::new();
    for &(line, raw) in objective {
        collect_rows(raw, line, &mut groups)?;
    }
    let Some((_, tokens)) = groups.pop().filter(|_| groups.is_empty()) else {
        return Err(LpParseError::Syntax {
            line: objective.first().map_or(0, |l| l.0),
            detail: "expected a single objective".into(),
        });
    };
    let (terms, rel) = RowParser { tokens }.parse(&mut model)?;
    if rel.is_some() {
        return Err(LpParseError::Syntax { line: 0, detail: "relation in objective".into() });
    }
    model.set_objective(terms);

    let mut groups = Vec::new();
    for &(line, raw) in find(Section::Constraints).ok_or(LpParseError::MissingSection("Subject To"))? {
        collect_rows(raw, line, &mut groups)?;
    }
    for (name, tokens) in groups {
        let line = tokens.first().map_or(0, |t| t.1);
        let (terms, rel) = RowParser { tokens }.parse(&mut model)?;
        let (relation, rhs) =
            rel.ok_or(LpParseError::Syntax { line, detail: format!("row {name} has no relation") })?;
        model
            .push_row(Constraint { name, terms, relation, rhs })
            .map_err(|e| LpParseError::Syntax { line, detail: e.to_string() })?;
    }

    for (section, kind) in [(Section::Binaries, VarKind::Binary), (Section::Generals, VarKind::Integer)] {
        for &(line, raw) in find(section).unwrap_or(&[]) {
            for name in raw.split_whitespace() {
                let v = model
                    .var(name)
                    .ok_or(LpParseError::Syntax { line, detail: format!("undeclared variable {name}") })?;
                model.variables[v].kind = kind;
            }
        }
    }
    Ok(model)
}

/// Splits a section's lines into named rows; a token ending in `:` starts a
/// new row and continuation lines extend the current one.
fn collect_rows<'a>(
    raw: &'a str,
    line: usize,
    groups: &mut Vec<(String, Vec<(&'a str, usize)>)>,
) -> Result<(), LpParseError> {
    for tok in raw.split_whitespace() {
        if let Some(name) = tok.strip_suffix(':') {
            groups.push((name.to_string(), Vec::new()));
        } else {
            match groups.last_mut() {
                Some((_, toks)) => toks.push((tok, line)),
                None => return Err(LpParseError::Syntax { line, detail: "expression without a row name".into() }),
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::super::{build_model, BigM};
    use super::*;

    fn export(model: &LinearModel) -> String {
        let mut buf = Vec::new();
        export_lp(model, &mut buf).unwrap();
        String::from_utf8(buf).unwrap()
    }

    #[test]
    fn round_trip_is_byte_identical() {
        let s = super::super::tests::two_node(0.4, 1.75, 10.0);
        let m = build_model(&s, &BigM::for_scenario(&s)).unwrap();
        let text = export(&m);
        let back = parse_lp(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(export(&back), text);
        assert!(text.lines().all(|l| l.len() <= WIDTH));
    }

    #[test]
    fn eps_row_is_shifted() {
        let s = super::super::tests::two_node(0.0, 0.0, 10.0);
        let m = build_model(&s, &BigM::for_scenario(&s)).unwrap();
        let text = export(&m);
        assert!(text.contains(" instance_flag.1: i_0_0 - c_0_0 <= 0.999999\n"), "{text}");
    }

    #[test]
    fn hand_written_model() {
        let text = "\\ toy\nMinimize\n obj: x + 2 y\nSubject To\n r.0: x + y >= 1\n r.1: - x + 0.5 y\n   <= 3\nBounds\n 0 <= x <= 1\n y >= 0\nBinaries\n x\nEnd\n";
        let m = parse_lp(text).unwrap();
        assert_eq!(m.variables().len(), 2);
        assert_eq!(m.variables()[0].kind, VarKind::Binary);
        assert_eq!(m.constraints()[1].terms, vec![(0, -1.0), (1, 0.5)]);
        assert_eq!(m.constraints()[1].rhs, 3.0);
        assert_eq!(m.constraints()[1].family(), "r");
    }

    #[test]
    fn malformed_input() {
        assert!(parse_lp("Subject To\n r: x <= 1\nEnd\n").is_err());
        assert!(parse_lp("Minimize\n obj: x\nSubject To\n r: x\nEnd\n").is_err());
        assert!(parse_lp("Minimize\n obj: x\nSubject To\n r: x <= 1\nBounds\n x ~ 3\nEnd\n").is_err());
    }
}
