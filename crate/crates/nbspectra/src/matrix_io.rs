//! Triplet text format for explicit matrices.
//!
//! The first non-comment line is `n` or `n hermitian`; every further line is
//! `i j re [im]` with 0-based indices. `#` starts a comment.

use std::fmt::Write as _;

use anyhow::{anyhow, bail, Result};
use nbspectra_core::model::SparseMatrix;
use nbspectra_core::C64;

pub fn parse_matrix(text: &str) -> Result<SparseMatrix> {
    let mut header: Option<(usize, bool)> = None;
    let mut triplets = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let toks: Vec<&str> = line.split_whitespace().collect();
        let no = idx + 1;
        match header {
            None => {
                let n = toks[0].parse().map_err(|_| anyhow!("line {no}: expected dimension, got '{}'", toks[0]))?;
                let hermitian = match toks.get(1) {
                    None => false,
                    Some(&"hermitian") => true,
                    Some(t) => bail!("line {no}: unexpected '{t}' after dimension"),
                };
                header = Some((n, hermitian));
            }
            Some(_) => {
                if !(3..=4).contains(&toks.len()) {
                    bail!("line {no}: expected 'i j re [im]'");
                }
                let idx = |k: usize| toks[k].parse::<usize>().map_err(|_| anyhow!("line {no}: bad index '{}'", toks[k]));
                let num = |k: usize| toks[k].parse::<f64>().map_err(|_| anyhow!("line {no}: bad number '{}'", toks[k]));
                let im = if toks.len() == 4 { num(3)? } else { 0.0 };
                triplets.push((idx(0)?, idx(1)?, C64::new(num(2)?, im)));
            }
        }
    }
    let (n, hermitian) = header.ok_or_else(|| anyhow!("missing dimension line"))?;
    Ok(SparseMatrix::from_triplets(n, triplets, hermitian)?)
}

pub fn write_matrix(h: &SparseMatrix) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}{}", h.n(), if h.is_hermitian() { " hermitian" } else { "" });
    for (i, j, v) in h.iter() {
        if v.im == 0.0 {
            let _ = writeln!(s, "{i} {j} {}", v.re);
        } else {
            let _ = writeln!(s, "{i} {j} {} {}", v.re, v.im);
        }
    }
    s
}
