//! Plain-text mesh format.
//!
//! ```text
//! # comment
//! NODES
//! <id> <x> <y> <z>
//! BARS
//! <id> <node a> <node b> <area>
//! SUPPORTS
//! <node> <dir>
//! LOADS
//! <node> <dir> <value>
//! PROGRAMS
//! <id> <t0> <u0> [<t1> <u1> ...]
//! PRESCRIBED
//! <node> <dir> <program id>
//! ```
//!
//! Tokens are whitespace-delimited, `#` starts a comment, directions are
//! `x`/`y`/`z` (or `0`/`1`/`2`). Node references use the ids of the NODES
//! section. Programs give displacement values in length units.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write as _;
use std::path::Path;

use super::{Bar, Dir, NodalLoad, PiecewiseLinear, PrescribedDisplacement, TrussMesh};
use crate::error::{Error, Result};

#[derive(Clone, Copy, PartialEq)]
enum Section {
    None,
    Nodes,
    Bars,
    Supports,
    Loads,
    Programs,
    Prescribed,
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn num<T: std::str::FromStr>(tok: &str, line: usize, what: &str) -> Result<T> {
    tok.parse()
        .map_err(|_| parse_err(line, format!("invalid {what} '{tok}'")))
}

pub fn parse_mesh(text: &str) -> Result<TrussMesh> {
    let mut mesh = TrussMesh::default();
    let mut node_ids: HashMap<String, usize> = HashMap::new();
    let mut section = Section::None;
    let mut pending_prescribed = Vec::new();

    for (i, raw) in text.lines().enumerate() {
        let lineno = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        if toks.len() == 1 {
            let next = match toks[0].to_ascii_uppercase().as_str() {
                "NODES" => Some(Section::Nodes),
                "BARS" => Some(Section::Bars),
                "SUPPORTS" => Some(Section::Supports),
                "LOADS" => Some(Section::Loads),
                "PROGRAMS" => Some(Section::Programs),
                "PRESCRIBED" => Some(Section::Prescribed),
                _ => None,
            };
            if let Some(s) = next {
                section = s;
                continue;
            }
        }
        let node_ref = |tok: &str| -> Result<usize> {
            node_ids
                .get(tok)
                .copied()
                .ok_or_else(|| parse_err(lineno, format!("unknown node id '{tok}'")))
        };
        let dir = |tok: &str| -> Result<Dir> {
            tok.parse()
                .map_err(|_| parse_err(lineno, format!("bad direction '{tok}'")))
        };
        let expect = |n: usize| -> Result<()> {
            if toks.len() != n {
                Err(parse_err(
                    lineno,
                    format!("expected {n} fields, found {}", toks.len()),
                ))
            } else {
                Ok(())
            }
        };
        match section {
            Section::None => return Err(parse_err(lineno, "data before any section header")),
            Section::Nodes => {
                expect(4)?;
                let coords = [
                    num(toks[1], lineno, "x")?,
                    num(toks[2], lineno, "y")?,
                    num(toks[3], lineno, "z")?,
                ];
                if node_ids
                    .insert(toks[0].to_string(), mesh.nodes.len())
                    .is_some()
                {
                    return Err(parse_err(
                        lineno,
                        format!("duplicate node id '{}'", toks[0]),
                    ));
                }
                mesh.nodes.push(coords);
            }
            Section::Bars => {
                expect(4)?;
                let bar = Bar {
                    a: node_ref(toks[1])?,
                    b: node_ref(toks[2])?,
                    area: num(toks[3], lineno, "area")?,
                };
                mesh.bars.push(bar);
            }
            Section::Supports => {
                expect(2)?;
                mesh.supports.insert((node_ref(toks[0])?, dir(toks[1])?));
            }
            Section::Loads => {
                expect(3)?;
                mesh.loads.push(NodalLoad {
                    node: node_ref(toks[0])?,
                    dir: dir(toks[1])?,
                    value: num(toks[2], lineno, "load")?,
                });
            }
            Section::Programs => {
                if toks.len() < 3 || toks.len() % 2 == 0 {
                    return Err(parse_err(
                        lineno,
                        "program needs an id followed by (time, value) pairs",
                    ));
                }
                let id: usize = num(toks[0], lineno, "program id")?;
                let mut bps = Vec::new();
                for pair in toks[1..].chunks(2) {
                    bps.push((
                        num(pair[0], lineno, "time")?,
                        num(pair[1], lineno, "value")?,
                    ));
                }
                let program =
                    PiecewiseLinear::new(bps).map_err(|e| parse_err(lineno, e.to_string()))?;
                if mesh.programs.insert(id, program).is_some() {
                    return Err(parse_err(lineno, format!("duplicate program id {id}")));
                }
            }
            Section::Prescribed => {
                expect(3)?;
                let p = PrescribedDisplacement {
                    node: node_ref(toks[0])?,
                    dir: dir(toks[1])?,
                    program: num(toks[2], lineno, "program id")?,
                };
                pending_prescribed.push((lineno, p));
            }
        }
    }
    for (lineno, p) in pending_prescribed {
        if !mesh.programs.contains_key(&p.program) {
            return Err(parse_err(
                lineno,
                format!("unknown program id {}", p.program),
            ));
        }
        mesh.prescribed.push(p);
    }
    mesh.validate()?;
    Ok(mesh)
}

pub fn read_mesh(path: &Path) -> Result<TrussMesh> {
    parse_mesh(&std::fs::read_to_string(path)?)
}

pub fn write_mesh(mesh: &TrussMesh) -> String {
    let mut out = String::new();
    out.push_str("NODES\n");
    for (i, p) in mesh.nodes.iter().enumerate() {
        let _ = writeln!(out, "{i} {} {} {}", p[0], p[1], p[2]);
    }
    out.push_str("BARS\n");
    for (i, b) in mesh.bars.iter().enumerate() {
        let _ = writeln!(out, "{i} {} {} {}", b.a, b.b, b.area);
    }
    if !mesh.supports.is_empty() {
        out.push_str("SUPPORTS\n");
        for (n, d) in &mesh.supports {
            let _ = writeln!(out, "{n} {d}");
        }
    }
    if !mesh.loads.is_empty() {
        out.push_str("LOADS\n");
        for l in &mesh.loads {
            let _ = writeln!(out, "{} {} {}", l.node, l.dir, l.value);
        }
    }
    if !mesh.programs.is_empty() {
        out.push_str("PROGRAMS\n");
        let programs: &BTreeMap<usize, PiecewiseLinear> = &mesh.programs;
        for (id, p) in programs {
            let _ = write!(out, "{id}");
            for (t, v) in p.breakpoints() {
                let _ = write!(out, " {t} {v}");
            }
            out.push('\n');
        }
    }
    if !mesh.prescribed.is_empty() {
        out.push_str("PRESCRIBED\n");
        for p in &mesh.prescribed {
            let _ = writeln!(out, "{} {} {}", p.node, p.dir, p.program);
        }
    }
    out
}
