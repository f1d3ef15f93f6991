//! `PGRID v1` grid files.
//!
//! ```text
//! PGRID 1
//! dim 3
//! bounds a1 b1 a2 b2 a3 b3
//! panels M1 M2 M3
//! order x y z row-major
//! data text                      (or: data binary little-endian f64)
//! <values in storage order>
//! ```
//!
//! Text data is one value per line with 17 significant digits; binary data
//! is raw little-endian `f64`s immediately after the `data` line.

use std::io::{BufRead, Write};

use thiserror::Error;

use crate::grid::{GridFunction, UniformGrid};

#[derive(Debug, Error)]
pub enum PgridError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Grid(#[from] crate::error::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataEncoding {
    Text,
    Binary,
}

const AXES: [&str; 3] = ["x", "y", "z"];

fn order_line(dim: usize) -> String {
    format!("order {} row-major", AXES[..dim].join(" "))
}

pub fn write<W: Write>(mut w: W, f: &GridFunction, encoding: DataEncoding) -> std::io::Result<()> {
    let g = f.grid();
    writeln!(w, "PGRID 1")?;
    writeln!(w, "dim {}", g.dim())?;
    let bounds: Vec<String> = (0..g.dim())
        .flat_map(|s| [g.lower()[s], g.upper()[s]])
        .map(|v| format!("{v:.16e}"))
        .collect();
    writeln!(w, "bounds {}", bounds.join(" "))?;
    let panels: Vec<String> = g.panels().iter().map(|m| m.to_string()).collect();
    writeln!(w, "panels {}", panels.join(" "))?;
    writeln!(w, "{}", order_line(g.dim()))?;
    match encoding {
        DataEncoding::Text => {
            writeln!(w, "data text")?;
            for v in f.values() {
                writeln!(w, "{v:.16e}")?;
            }
        }
        DataEncoding::Binary => {
            writeln!(w, "data binary little-endian f64")?;
            for v in f.values() {
                w.write_all(&v.to_le_bytes())?;
            }
        }
    }
    w.flush()
}

fn parse_err(line: usize, message: impl Into<String>) -> PgridError {
    PgridError::Parse {
        line,
        message: message.into(),
    }
}

fn parse_list<T: std::str::FromStr>(line: usize, words: &[&str]) -> Result<Vec<T>, PgridError> {
    words
        .iter()
        .map(|w| w.parse().map_err(|_| parse_err(line, format!("cannot parse {w:?}"))))
        .collect()
}

pub fn read<R: BufRead>(mut r: R) -> Result<GridFunction, PgridError> {
    let mut dim: Option<usize> = None;
    let mut bounds: Option<Vec<f64>> = None;
    let mut panels: Option<Vec<usize>> = None;
    let mut ordered = false;
    let mut lineno = 0;
    let mut line = String::new();

    let encoding = loop {
        line.clear();
        if r.read_line(&mut line)? == 0 {
            return Err(parse_err(lineno + 1, "unexpected end of header"));
        }
        lineno += 1;
        let words: Vec<&str> = line.split_whitespace().collect();
        if lineno == 1 {
            if words != ["PGRID", "1"] {
                return Err(parse_err(1, "expected `PGRID 1`"));
            }
            continue;
        }
        let Some((&key, rest)) = words.split_first() else {
            return Err(parse_err(lineno, "empty header line"));
        };
        match key {
            "dim" => {
                let v: Vec<usize> = parse_list(lineno, rest)?;
                if v.len() != 1 || !(1..=3).contains(&v[0]) {
                    return Err(parse_err(lineno, "dim must be 1, 2 or 3"));
                }
                dim = Some(v[0]);
            }
            "bounds" => bounds = Some(parse_list(lineno, rest)?),
            "panels" => panels = Some(parse_list(lineno, rest)?),
            "order" => {
                let d = dim.ok_or_else(|| parse_err(lineno, "`order` before `dim`"))?;
                if line.trim() != order_line(d) {
                    return Err(parse_err(lineno, format!("expected `{}`", order_line(d))));
                }
                ordered = true;
            }
            "data" => match rest {
                ["text"] => break DataEncoding::Text,
                ["binary", "little-endian", "f64"] => break DataEncoding::Binary,
                _ => return Err(parse_err(lineno, "unknown data encoding")),
            },
            other => return Err(parse_err(lineno, format!("unknown header key {other:?}"))),
        }
    };

    let dim = dim.ok_or_else(|| parse_err(lineno, "missing `dim`"))?;
    let bounds = bounds.ok_or_else(|| parse_err(lineno, "missing `bounds`"))?;
    let panels = panels.ok_or_else(|| parse_err(lineno, "missing `panels`"))?;
    if !ordered {
        return Err(parse_err(lineno, "missing `order`"));
    }
    if bounds.len() != 2 * dim || panels.len() != dim {
        return Err(parse_err(lineno, "bounds/panels do not match dim"));
    }
    let lower: Vec<f64> = bounds.iter().step_by(2).copied().collect();
    let upper: Vec<f64> = bounds.iter().skip(1).step_by(2).copied().collect();
    let grid = UniformGrid::new(&lower, &upper, &panels)?;
    let n = grid.node_count();

    let values = match encoding {
        DataEncoding::Text => {
            let mut values = Vec::with_capacity(n);
            for l in r.lines() {
                let l = l?;
                lineno += 1;
                let t = l.trim();
                if t.is_empty() {
                    continue;
                }
                values.push(
                    t.parse::<f64>()
                        .map_err(|_| parse_err(lineno, format!("cannot parse value {t:?}")))?,
                );
            }
            values
        }
        DataEncoding::Binary => {
            let mut bytes = Vec::with_capacity(8 * n);
            r.read_to_end(&mut bytes)?;
            if bytes.len() % 8 != 0 {
                return Err(parse_err(lineno, "binary payload is not a whole number of f64s"));
            }
            bytes
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
                .collect()
        }
    };
    if values.len() != n {
        return Err(parse_err(
            lineno,
            format!("expected {n} values, found {}", values.len()),
        ));
    }
    Ok(GridFunction::from_values(&grid, values)?)
}
