//! Plain-text model dump.
//!
//! ```text
//! MILPDUMP 1
//! NAME <model name>
//! VARIABLES <n>
//! <id> <C|B> <lower> <upper> <name>
//! OBJECTIVE <offset> <nnz>
//! <id> <coef>
//! CONSTRAINTS <m>
//! <row> <L|E|G> <rhs> <nnz> <name>
//! <id> <coef>
//! END
//! ```
//!
//! Numbers use 17 significant digits (`inf` / `-inf` for open bounds), so
//! the dump is byte-stable and re-imports exactly. Names run to the end of
//! the line. Each objective or row header is followed by its `nnz` term
//! lines.

use std::fmt::Write as _;

use super::{Constraint, MilpError, MilpModel, Sense, VarId, VarKind, Variable};
use crate::report::fmt_float;

pub const DUMP_MAGIC: &str = "MILPDUMP 1";

pub fn export_external(model: &MilpModel) -> String {
    let mut s = String::new();
    writeln!(s, "{DUMP_MAGIC}").unwrap();
    writeln!(s, "NAME {}", model.name).unwrap();
    writeln!(s, "VARIABLES {}", model.variables.len()).unwrap();
    for (i, v) in model.variables.iter().enumerate() {
        let kind = match v.kind {
            VarKind::Continuous => 'C',
            VarKind::Binary => 'B',
        };
        writeln!(s, "{i} {kind} {} {} {}", fmt_float(v.lower), fmt_float(v.upper), v.name).unwrap();
    }
    writeln!(s, "OBJECTIVE {} {}", fmt_float(model.objective_offset), model.objective.len()).unwrap();
    for &(v, c) in &model.objective {
        writeln!(s, "{} {}", v.0, fmt_float(c)).unwrap();
    }
    writeln!(s, "CONSTRAINTS {}", model.constraints.len()).unwrap();
    for (r, c) in model.constraints.iter().enumerate() {
        let sense = match c.sense {
            Sense::Le => 'L',
            Sense::Eq => 'E',
            Sense::Ge => 'G',
        };
        writeln!(s, "{r} {sense} {} {} {}", fmt_float(c.rhs), c.terms.len(), c.name).unwrap();
        for &(v, a) in &c.terms {
            writeln!(s, "{} {}", v.0, fmt_float(a)).unwrap();
        }
    }
    s.push_str("END\n");
    s
}

struct Lines<'a> {
    iter: std::iter::Enumerate<std::str::Lines<'a>>,
    line: usize,
}

impl<'a> Lines<'a> {
    fn next(&mut self) -> Result<&'a str, MilpError> {
        match self.iter.next() {
            Some((i, l)) => {
                self.line = i + 1;
                Ok(l)
            }
            None => Err(self.err("unexpected end of file")),
        }
    }

    fn err(&self, message: impl Into<String>) -> MilpError {
        MilpError::Parse { line: self.line, message: message.into() }
    }

    fn keyword(&mut self, kw: &str) -> Result<&'a str, MilpError> {
        let l = self.next()?;
        match l.strip_prefix(kw) {
            Some(rest) if rest.is_empty() => Ok(""),
            Some(rest) if rest.starts_with(' ') => Ok(&rest[1..]),
            _ => Err(self.err(format!("expected {kw}"))),
        }
    }

    fn num<T: std::str::FromStr>(&self, tok: Option<&str>) -> Result<T, MilpError> {
        tok.and_then(|t| t.parse().ok()).ok_or_else(|| self.err("bad number"))
    }

    fn term(&mut self) -> Result<(VarId, f64), MilpError> {
        let l = self.next()?;
        let mut it = l.split(' ');
        let v = self.num(it.next())?;
        let c = self.num(it.next())?;
        Ok((VarId(v), c))
    }
}

/// Parse a dump written by [`export_external`].
pub fn import_dump(text: &str) -> Result<MilpModel, MilpError> {
    let mut lines = Lines { iter: text.lines().enumerate(), line: 0 };
    if lines.next()? != DUMP_MAGIC {
        return Err(lines.err("missing MILPDUMP header"));
    }
    let name = lines.keyword("NAME")?.to_string();
    let tok = lines.keyword("VARIABLES")?;
    let n: usize = lines.num(Some(tok))?;
    let mut variables = Vec::with_capacity(n);
    for i in 0..n {
        let l = lines.next()?;
        let mut it = l.splitn(5, ' ');
        let id: usize = lines.num(it.next())?;
        if id != i {
            return Err(lines.err("variable ids out of order"));
        }
        let kind = match it.next() {
            Some("C") => VarKind::Continuous,
            Some("B") => VarKind::Binary,
            _ => return Err(lines.err("variable kind must be C or B")),
        };
        let lower = lines.num(it.next())?;
        let upper = lines.num(it.next())?;
        let name = it.next().unwrap_or("").to_string();
        variables.push(Variable { name, kind, lower, upper });
    }
    let obj = lines.keyword("OBJECTIVE")?;
    let mut it = obj.split(' ');
    let objective_offset = lines.num(it.next())?;
    let nnz: usize = lines.num(it.next())?;
    let objective = (0..nnz).map(|_| lines.term()).collect::<Result<Vec<_>, _>>()?;
    let tok = lines.keyword("CONSTRAINTS")?;
    let m: usize = lines.num(Some(tok))?;
    let mut constraints = Vec::with_capacity(m);
    for r in 0..m {
        let l = lines.next()?;
        let mut it = l.splitn(5, ' ');
        let id: usize = lines.num(it.next())?;
        if id != r {
            return Err(lines.err("row ids out of order"));
        }
        let sense = match it.next() {
            Some("L") => Sense::Le,
            Some("E") => Sense::Eq,
            Some("G") => Sense::Ge,
            _ => return Err(lines.err("row sense must be L, E or G")),
        };
        let rhs = lines.num(it.next())?;
        let nnz: usize = lines.num(it.next())?;
        let name = it.next().unwrap_or("").to_string();
        let terms = (0..nnz).map(|_| lines.term()).collect::<Result<Vec<_>, _>>()?;
        constraints.push(Constraint { name, terms, sense, rhs });
    }
    lines.keyword("END")?;
    Ok(MilpModel { name, variables, constraints, objective, objective_offset })
}
