//! Plain-text LP dump for debugging.
//!
//! ```text
//! lp <num_vars> <num_rows>
//! min <c_1> ... <c_n>
//! row <a_1> ... <a_n> <= <b>
//! ```

use std::fmt::Write;

use super::LinearProgram;
use crate::{Error, Result};

pub(super) fn to_text(lp: &LinearProgram) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "lp {} {}", lp.num_vars(), lp.num_rows());
    out.push_str("min");
    for c in &lp.cost {
        let _ = write!(out, " {c:e}");
    }
    out.push('\n');
    for (row, b) in lp.rows.iter().zip(&lp.rhs) {
        out.push_str("row");
        for a in row {
            let _ = write!(out, " {a:e}");
        }
        let _ = writeln!(out, " <= {b:e}");
    }
    out
}

fn parse_floats<'a>(it: impl Iterator<Item = &'a str>, line: usize) -> Result<Vec<f64>> {
    it.map(|tok| {
        tok.parse::<f64>()
            .map_err(|e| Error::Domain(format!("line {line}: bad number {tok:?}: {e}")))
    })
    .collect()
}

/// Parses the format written by [`LinearProgram::to_text`].
pub fn parse_text(text: &str) -> Result<LinearProgram> {
    let mut lines = text.lines().enumerate().filter(|(_, l)| !l.trim().is_empty());
    let bad = |line: usize, msg: &str| Error::Domain(format!("line {}: {msg}", line + 1));

    let (ln, header) = lines.next().ok_or_else(|| bad(0, "empty LP text"))?;
    let mut h = header.split_whitespace();
    if h.next() != Some("lp") {
        return Err(bad(ln, "expected `lp <vars> <rows>`"));
    }
    let dims: Vec<usize> = h
        .map(|t| t.parse().map_err(|_| bad(ln, "bad dimension")))
        .collect::<Result<_>>()?;
    let [n, m] = dims[..] else {
        return Err(bad(ln, "expected two dimensions"));
    };

    let (ln, cost_line) = lines.next().ok_or_else(|| bad(ln, "missing cost row"))?;
    let mut toks = cost_line.split_whitespace();
    if toks.next() != Some("min") {
        return Err(bad(ln, "expected `min ...`"));
    }
    let cost = parse_floats(toks, ln + 1)?;

    let mut rows = Vec::with_capacity(m);
    let mut rhs = Vec::with_capacity(m);
    for (ln, line) in lines {
        let mut toks = line.split_whitespace();
        if toks.next() != Some("row") {
            return Err(bad(ln, "expected `row ... <= b`"));
        }
        let toks: Vec<&str> = toks.collect();
        let Some(le) = toks.iter().position(|&t| t == "<=") else {
            return Err(bad(ln, "missing `<=`"));
        };
        if le + 2 != toks.len() {
            return Err(bad(ln, "expected one value after `<=`"));
        }
        rows.push(parse_floats(toks[..le].iter().copied(), ln + 1)?);
        rhs.push(parse_floats(std::iter::once(toks[le + 1]), ln + 1)?[0]);
    }
    if cost.len() != n || rows.len() != m {
        return Err(Error::Dimension(format!(
            "header says {n}x{m}, body has {} vars and {} rows",
            cost.len(),
            rows.len()
        )));
    }
    LinearProgram::new(cost, rows, rhs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn text_round_trip(n in 1usize..6, m in 0usize..5, seed in any::<u64>()) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut v = || rng.random_range(-1e3..1e3) * 10f64.powi(rng.random_range(-15..15));
            let lp = LinearProgram::new(
                (0..n).map(|_| v()).collect(),
                (0..m).map(|_| (0..n).map(|_| v()).collect()).collect(),
                (0..m).map(|_| v()).collect(),
            ).unwrap();
            prop_assert_eq!(parse_text(&lp.to_text()).unwrap(), lp);
        }
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_text("").is_err());
        assert!(parse_text("lp 1 1\nmin 1\nrow 1 2\n").is_err());
        assert!(parse_text("lp 2 0\nmin 1\n").is_err());
    }
}
