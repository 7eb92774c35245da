//! Versioned text checkpoint for grid state.
//!
//! Format (one record per cell, fixed field order, shortest round-trip float
//! formatting, locale independent):
//!
//! ```text
//! coevgan-grid v1
//! m <side>
//! per_cell_gens <count>
//! per_cell_discs <count>
//! cell <index>
//! generation <counter>
//! gen <slot> <mu1> <mu2> <lr>
//! disc <slot> <l1> <r1> <l2> <r2> <lr>
//! weights <w1> ... <wN>
//! ...
//! end
//! ```

use std::fmt::Write as _;

use super::{Cell, Grid, GridError};
use crate::coevo::Individual;
use crate::mixture::MixtureWeights;
use crate::problem::{DiscriminatorParams, GeneratorParams};

pub const FORMAT_HEADER: &str = "coevgan-grid v1";

pub fn write_checkpoint(grid: &Grid) -> String {
    let mut out = String::new();
    let per_gens = grid.cells()[0].center_gens.len();
    let per_discs = grid.cells()[0].center_discs.len();
    writeln!(out, "{FORMAT_HEADER}").unwrap();
    writeln!(out, "m {}", grid.m()).unwrap();
    writeln!(out, "per_cell_gens {per_gens}").unwrap();
    writeln!(out, "per_cell_discs {per_discs}").unwrap();
    for (k, cell) in grid.cells().iter().enumerate() {
        writeln!(out, "cell {k}").unwrap();
        writeln!(out, "generation {}", cell.generation_counter).unwrap();
        for (i, ind) in cell.center_gens.iter().enumerate() {
            writeln!(
                out,
                "gen {i} {} {} {}",
                ind.params.mu1, ind.params.mu2, ind.learning_rate
            )
            .unwrap();
        }
        for (i, ind) in cell.center_discs.iter().enumerate() {
            writeln!(
                out,
                "disc {i} {} {} {} {} {}",
                ind.params.l1, ind.params.r1, ind.params.l2, ind.params.r2, ind.learning_rate
            )
            .unwrap();
        }
        let ws: Vec<String> =
            cell.mixture_weights.as_slice().iter().map(|w| w.to_string()).collect();
        writeln!(out, "weights {}", ws.join(" ")).unwrap();
    }
    writeln!(out, "end").unwrap();
    out
}

struct Parser<'a> {
    lines: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Parser<'a> {
    fn next_line(&mut self) -> Result<(usize, &'a str), GridError> {
        self.lines
            .next()
            .map(|(i, l)| (i + 1, l))
            .ok_or(GridError::Parse { line: 0, msg: "unexpected end of file".into() })
    }

    fn expect_fields(
        &mut self,
        keyword: &str,
        count: usize,
    ) -> Result<(usize, Vec<&'a str>), GridError> {
        let (line, text) = self.next_line()?;
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.first() != Some(&keyword) {
            return Err(GridError::Parse {
                line,
                msg: format!("expected '{keyword}', found '{text}'"),
            });
        }
        if fields.len() != count + 1 {
            return Err(GridError::Parse {
                line,
                msg: format!("'{keyword}' takes {count} fields, found {}", fields.len() - 1),
            });
        }
        Ok((line, fields[1..].to_vec()))
    }
}

fn parse_num<T: std::str::FromStr>(s: &str, line: usize) -> Result<T, GridError> {
    s.parse().map_err(|_| GridError::Parse { line, msg: format!("bad number '{s}'") })
}

pub fn parse_checkpoint(text: &str) -> Result<Grid, GridError> {
    let mut p = Parser { lines: text.lines().enumerate() };
    let (line, header) = p.next_line()?;
    if header != FORMAT_HEADER {
        return Err(GridError::Parse { line, msg: format!("unknown header '{header}'") });
    }
    let (line, m_fields) = p.expect_fields("m", 1)?;
    let m: usize = parse_num(m_fields[0], line)?;
    let (line, g_fields) = p.expect_fields("per_cell_gens", 1)?;
    let per_gens: usize = parse_num(g_fields[0], line)?;
    let (line, d_fields) = p.expect_fields("per_cell_discs", 1)?;
    let per_discs: usize = parse_num(d_fields[0], line)?;

    let mut cells = Vec::with_capacity(m * m);
    for k in 0..m * m {
        let (line, c) = p.expect_fields("cell", 1)?;
        let idx: usize = parse_num(c[0], line)?;
        if idx != k {
            return Err(GridError::Parse {
                line,
                msg: format!("expected cell {k}, found {idx}"),
            });
        }
        let (line, gc) = p.expect_fields("generation", 1)?;
        let generation_counter: u64 = parse_num(gc[0], line)?;
        let mut center_gens = Vec::with_capacity(per_gens);
        for i in 0..per_gens {
            let (line, f) = p.expect_fields("gen", 4)?;
            let slot: usize = parse_num(f[0], line)?;
            if slot != i {
                return Err(GridError::Parse { line, msg: format!("gen slot {slot} != {i}") });
            }
            let params =
                GeneratorParams::new(parse_num(f[1], line)?, parse_num(f[2], line)?)
                    .map_err(|e| GridError::Parse { line, msg: e.to_string() })?;
            center_gens.push(Individual {
                params,
                learning_rate: parse_num(f[3], line)?,
                fitness: None,
            });
        }
        let mut center_discs = Vec::with_capacity(per_discs);
        for i in 0..per_discs {
            let (line, f) = p.expect_fields("disc", 6)?;
            let slot: usize = parse_num(f[0], line)?;
            if slot != i {
                return Err(GridError::Parse { line, msg: format!("disc slot {slot} != {i}") });
            }
            let params = DiscriminatorParams::new(
                parse_num(f[1], line)?,
                parse_num(f[2], line)?,
                parse_num(f[3], line)?,
                parse_num(f[4], line)?,
            )
            .map_err(|e| GridError::Parse { line, msg: e.to_string() })?;
            center_discs.push(Individual {
                params,
                learning_rate: parse_num(f[5], line)?,
                fitness: None,
            });
        }
        let (line, text) = p.next_line()?;
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.first() != Some(&"weights") {
            return Err(GridError::Parse { line, msg: format!("expected weights, got '{text}'") });
        }
        let w: Vec<f64> = fields[1..]
            .iter()
            .map(|s| parse_num(s, line))
            .collect::<Result<_, _>>()?;
        let mixture_weights = MixtureWeights::new(w)
            .map_err(|e| GridError::Parse { line, msg: e.to_string() })?;
        cells.push(Cell { center_gens, center_discs, mixture_weights, generation_counter });
    }
    let (line, end) = p.next_line()?;
    if end != "end" {
        return Err(GridError::Parse { line, msg: format!("expected 'end', found '{end}'") });
    }
    Ok(Grid { m, cells })
}
