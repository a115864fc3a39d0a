//! Text format for sample sets.
//!
//! ```text
//! p n N sigma seed [C]
//! <block>            # center, present only when the header ends in "C"
//!
//! <block>            # N sample blocks
//! ...
//! ```
//!
//! A block is `p` lines of `n` whitespace-separated decimals; blocks are
//! separated by blank lines. Values are written with 17 significant digits,
//! which round-trips every `f64` exactly.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::kernels::Matrix;
use crate::manifold::{validate_point, Dims, StiefelPoint};
use crate::sampling::SampleSet;

/// A parsed file before any manifold validation, so tools can inspect
/// matrices that are not (or no longer) orthonormal.
#[derive(Debug, Clone)]
pub struct RawSampleFile {
    pub p: usize,
    pub n: usize,
    pub sigma: f64,
    pub seed: u64,
    pub center: Option<Matrix>,
    pub blocks: Vec<Matrix>,
}

impl RawSampleFile {
    pub fn into_sample_set(self) -> Result<SampleSet> {
        let dims = Dims::new(self.p, self.n)?;
        let center = self.center.map(|c| validate_point(c, dims)).transpose()?;
        let samples = self
            .blocks
            .into_iter()
            .map(|b| validate_point(b, dims))
            .collect::<Result<Vec<_>>>()?;
        SampleSet::new(dims, center, self.sigma, self.seed, samples)
    }
}

pub fn write_sample_set<W: Write>(set: &SampleSet, mut w: W) -> Result<()> {
    let dims = set.dims();
    write!(
        w,
        "{} {} {} {} {}",
        dims.p(),
        dims.n(),
        set.len(),
        set.sigma(),
        set.seed()
    )?;
    if set.center().is_some() {
        write!(w, " C")?;
    }
    writeln!(w)?;
    let blocks = set.center().into_iter().chain(set.samples());
    for (i, point) in blocks.enumerate() {
        if i > 0 {
            writeln!(w)?;
        }
        write_block(point.matrix(), &mut w)?;
    }
    Ok(())
}

/// Writes a single point as a one-sample set (no center).
pub fn write_point<W: Write>(point: &StiefelPoint, sigma: f64, seed: u64, w: W) -> Result<()> {
    let set = SampleSet::new(point.dims(), None, sigma, seed, vec![point.clone()])?;
    write_sample_set(&set, w)
}

fn write_block<W: Write>(m: &Matrix, w: &mut W) -> Result<()> {
    for i in 0..m.rows() {
        let line: Vec<String> = m.row(i).iter().map(|v| format!("{v:.16e}")).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

pub fn read_sample_set<R: BufRead>(r: R) -> Result<SampleSet> {
    read_raw(r)?.into_sample_set()
}

pub fn read_raw<R: BufRead>(r: R) -> Result<RawSampleFile> {
    let mut lines = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        lines.push((idx + 1, line?));
    }
    let mut iter = lines.iter().filter(|(_, l)| !l.trim().is_empty()).peekable();

    let (hline, header) = iter.next().ok_or(Error::Parse {
        line: 1,
        column: 1,
        message: "empty file".into(),
    })?;
    let tokens = tokenize(header);
    if tokens.len() != 5 && tokens.len() != 6 {
        return Err(Error::Parse {
            line: *hline,
            column: 1,
            message: format!(
                "header must be 'p n N sigma seed [C]', found {} fields",
                tokens.len()
            ),
        });
    }
    let p: usize = parse_token(&tokens[0], *hline)?;
    let n: usize = parse_token(&tokens[1], *hline)?;
    let count: usize = parse_token(&tokens[2], *hline)?;
    let sigma: f64 = parse_token(&tokens[3], *hline)?;
    let seed: u64 = parse_token(&tokens[4], *hline)?;
    let has_center = match tokens.get(5) {
        None => false,
        Some((_, "C")) => true,
        Some((col, other)) => {
            return Err(Error::Parse {
                line: *hline,
                column: *col,
                message: format!("expected 'C' center flag, found '{other}'"),
            })
        }
    };
    if p == 0 || n == 0 || n > p {
        return Err(Error::Parse {
            line: *hline,
            column: 1,
            message: format!("invalid dimensions p={p}, n={n}"),
        });
    }

    let total = count + has_center as usize;
    let mut blocks = Vec::with_capacity(total);
    let mut last_line = *hline;
    for _ in 0..total {
        let mut data = Vec::with_capacity(p * n);
        for _ in 0..p {
            let (ln, text) = iter.next().ok_or(Error::Parse {
                line: last_line + 1,
                column: 1,
                message: format!("unexpected end of file: expected {total} blocks of {p} rows"),
            })?;
            last_line = *ln;
            let row = tokenize(text);
            if row.len() != n {
                return Err(Error::Parse {
                    line: *ln,
                    column: row.get(n).map_or(text.len() + 1, |t| t.0),
                    message: format!("expected {n} values, found {}", row.len()),
                });
            }
            for tok in &row {
                let v: f64 = parse_token(tok, *ln)?;
                if !v.is_finite() {
                    return Err(Error::Parse {
                        line: *ln,
                        column: tok.0,
                        message: "non-finite value".into(),
                    });
                }
                data.push(v);
            }
        }
        blocks.push(Matrix::new(p, n, data)?);
    }
    if let Some((ln, _)) = iter.next() {
        return Err(Error::Parse {
            line: *ln,
            column: 1,
            message: format!("trailing data after {total} blocks"),
        });
    }
    let center = if has_center { Some(blocks.remove(0)) } else { None };
    Ok(RawSampleFile {
        p,
        n,
        sigma,
        seed,
        center,
        blocks,
    })
}

/// One positive real per line; blank lines are skipped.
pub fn read_weights<R: BufRead>(r: R) -> Result<Vec<f64>> {
    let mut out = Vec::new();
    for (idx, line) in r.lines().enumerate() {
        let line = line?;
        let toks = tokenize(&line);
        match toks.as_slice() {
            [] => continue,
            [tok] => out.push(parse_token::<f64>(tok, idx + 1)?),
            [_, (col, _), ..] => {
                return Err(Error::Parse {
                    line: idx + 1,
                    column: *col,
                    message: "expected one weight per line".into(),
                })
            }
        }
    }
    Ok(out)
}

/// Whitespace-separated tokens with their 1-based starting column.
fn tokenize(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

fn parse_token<T: std::str::FromStr>(tok: &(usize, &str), line: usize) -> Result<T> {
    tok.1.parse().map_err(|_| Error::Parse {
        line,
        column: tok.0,
        message: format!("cannot parse '{}' as {}", tok.1, std::any::type_name::<T>()),
    })
}
