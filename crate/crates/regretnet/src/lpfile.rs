//! CPLEX LP text format for [`LpModel`].
//!
//! ```text
//! \ <comment lines with counts>
//! Maximize
//!  obj: c pay_p0_b0 + c pay_p0_b1 …      (wrapped over several lines)
//! Subject To
//!  ir_p0_b0: 0.1 z_p0_b0_i0 - 1 pay_p0_b0 >= 0
//!  …                                        (one constraint per line)
//! Bounds
//!  0 <= z_p0_b0_i0 <= 1
//!  pay_p0_b0 free
//! End
//! ```
//!
//! Coefficients are written in shortest round-trip form, so reading a file
//! back yields bit-identical values.

use std::collections::BTreeMap;
use std::io::{self, BufRead, Write};

use regretnet_core::lpexport::{variable_bounds, LpModel, Sense, VarId};

const OBJECTIVE_TERMS_PER_LINE: usize = 8;

fn push_term(out: &mut String, coef: f64, name: &str, first: bool) {
    if coef < 0.0 {
        out.push_str(if first { "-" } else { " -" });
    } else if !first {
        out.push_str(" +");
    }
    out.push(' ');
    out.push_str(&coef.abs().to_string());
    out.push(' ');
    out.push_str(name);
}

/// Streams the model to `w` and returns the number of constraint lines.
pub fn write_lp<W: Write>(model: &LpModel, w: &mut W) -> io::Result<u64> {
    let c = &model.counts;
    writeln!(w, "\\ optimal auction LP: n={} m={} D={} support=[{}, {}]", model.n, model.m, model.d, model.support.0, model.support.1)?;
    writeln!(w, "\\ variables: {}", c.variables)?;
    writeln!(w, "\\ constraints: {} (IC {}, IR {}, feasibility {})", c.constraints(), c.ic, c.ir, c.feasibility)?;
    writeln!(w, "Maximize")?;
    let coef = model.objective_coefficient();
    let mut line = String::from(" obj:");
    let mut on_line = 0;
    let mut first = true;
    for var in model.variables().filter(|v| matches!(v, VarId::Pay { .. })) {
        push_term(&mut line, coef, &var.name(), first);
        first = false;
        on_line += 1;
        if on_line == OBJECTIVE_TERMS_PER_LINE {
            writeln!(w, "{line}")?;
            line.clear();
            on_line = 0;
        }
    }
    if !line.is_empty() {
        writeln!(w, "{line}")?;
    }
    writeln!(w, "Subject To")?;
    let mut rows = 0u64;
    for con in model.constraints() {
        let mut line = format!(" {}:", con.kind.name());
        for (k, (var, coef)) in con.terms.iter().enumerate() {
            push_term(&mut line, *coef, &var.name(), k == 0);
        }
        let op = match con.sense {
            Sense::Le => "<=",
            Sense::Ge => ">=",
        };
        writeln!(w, "{line} {op} {}", con.rhs)?;
        rows += 1;
    }
    writeln!(w, "Bounds")?;
    for var in model.variables() {
        let (lo, hi) = variable_bounds(&var);
        if lo.is_finite() && hi.is_finite() {
            writeln!(w, " {lo} <= {} <= {hi}", var.name())?;
        } else {
            writeln!(w, " {} free", var.name())?;
        }
    }
    writeln!(w, "End")?;
    Ok(rows)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ParsedConstraint {
    pub name: String,
    pub terms: Vec<(String, f64)>,
    pub sense: Sense,
    pub rhs: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ParsedLp {
    pub maximize: bool,
    pub objective: Vec<(String, f64)>,
    pub constraints: Vec<ParsedConstraint>,
    /// Variable → `(lower, upper)`, in declaration order of the bounds
    /// section.
    pub bounds: BTreeMap<String, (f64, f64)>,
}

#[derive(PartialEq)]
enum Section {
    None,
    Objective,
    Constraints,
    Bounds,
    End,
}

fn parse_terms(tokens: &[&str]) -> Result<Vec<(String, f64)>, String> {
    let mut out = Vec::new();
    let mut sign = 1.0;
    let mut coef: Option<f64> = None;
    for &tok in tokens {
        match tok {
            "+" => sign = 1.0,
            "-" => sign = -1.0,
            t => {
                if let Ok(x) = t.parse::<f64>() {
                    if coef.is_some() {
                        return Err(format!("two coefficients in a row near {t}"));
                    }
                    coef = Some(x);
                } else {
                    out.push((t.to_string(), sign * coef.take().unwrap_or(1.0)));
                    sign = 1.0;
                }
            }
        }
    }
    if coef.is_some() {
        return Err("dangling coefficient".into());
    }
    Ok(out)
}

fn parse_bound(value: &str) -> Result<f64, String> {
    match value {
        "inf" | "+inf" | "infinity" => Ok(f64::INFINITY),
        "-inf" | "-infinity" => Ok(f64::NEG_INFINITY),
        v => v.parse().map_err(|_| format!("bad bound {v}")),
    }
}

/// Reads the subset of the LP format produced by [`write_lp`].
pub fn read_lp<R: BufRead>(r: R) -> Result<ParsedLp, String> {
    let mut lp = ParsedLp::default();
    let mut section = Section::None;
    for (no, line) in r.lines().enumerate() {
        let line = line.map_err(|e| e.to_string())?;
        let text = line.trim();
        if text.is_empty() || text.starts_with('\\') {
            continue;
        }
        let err = |m: String| format!("line {}: {m}", no + 1);
        match text.to_ascii_lowercase().as_str() {
            "maximize" | "minimize" => {
                lp.maximize = text.eq_ignore_ascii_case("maximize");
                section = Section::Objective;
                continue;
            }
            "subject to" => {
                section = Section::Constraints;
                continue;
            }
            "bounds" => {
                section = Section::Bounds;
                continue;
            }
            "end" => {
                section = Section::End;
                continue;
            }
            _ => {}
        }
        let tokens: Vec<&str> = text.split_whitespace().collect();
        match section {
            Section::Objective => {
                let body = if tokens.first().is_some_and(|t| t.ends_with(':')) { &tokens[1..] } else { &tokens[..] };
                lp.objective.extend(parse_terms(body).map_err(err)?);
            }
            Section::Constraints => {
                let name = tokens.first().and_then(|t| t.strip_suffix(':')).ok_or_else(|| err("unnamed constraint".into()))?;
                let op = tokens.iter().position(|t| matches!(*t, "<=" | ">=")).ok_or_else(|| err("missing sense".into()))?;
                let sense = if tokens[op] == "<=" { Sense::Le } else { Sense::Ge };
                let rhs = tokens.get(op + 1).ok_or_else(|| err("missing rhs".into()))?;
                let rhs = rhs.parse().map_err(|_| err(format!("bad rhs {rhs}")))?;
                let terms = parse_terms(&tokens[1..op]).map_err(err)?;
                lp.constraints.push(ParsedConstraint { name: name.to_string(), terms, sense, rhs });
            }
            Section::Bounds => match tokens.as_slice() {
                [var, "free"] => {
                    lp.bounds.insert(var.to_string(), (f64::NEG_INFINITY, f64::INFINITY));
                }
                [lo, "<=", var, "<=", hi] => {
                    let b = (parse_bound(lo).map_err(err)?, parse_bound(hi).map_err(err)?);
                    lp.bounds.insert(var.to_string(), b);
                }
                _ => return Err(err(format!("unsupported bound `{text}`"))),
            },
            Section::None | Section::End => return Err(err(format!("unexpected `{text}`"))),
        }
    }
    if section != Section::End {
        return Err("missing End".into());
    }
    Ok(lp)
}

/// Byte and line counter for stats-only writes.
#[derive(Debug, Default)]
pub struct CountingSink {
    pub bytes: u64,
    pub lines: u64,
}

impl Write for CountingSink {
    fn write(&mut self, buf: &[u8]) -> io::Result<usize> {
        self.bytes += buf.len() as u64;
        self.lines += buf.iter().filter(|&&b| b == b'\n').count() as u64;
        Ok(buf.len())
    }

    fn flush(&mut self) -> io::Result<()> {
        Ok(())
    }
}
