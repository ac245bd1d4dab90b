//! Plain-text dump of a program for cross-checking with external solvers.
//!
//! Format, one record per line, `#` starts a comment:
//!
//! ```text
//! blocks <kind>:<dim> ...          kind is `psd` or `lp`
//! objective <block> <row> <col> <re> <im>
//! eq <index> <rhs>
//! eqterm <index> <block> <row> <col> <re> <im>
//! interval <index> <lower> <upper>
//! intterm <index> <block> <row> <col> <re> <im>
//! ```
//!
//! Entries are upper-triangle (`row <= col`), zero-based, and stand for both
//! mirror positions. The imaginary column is always zero for real programs; it
//! is kept so complex-valued programs can share the format.

use std::fmt::Write as _;
use std::io::{self, Write};

use super::{BlockKind, ConeProgram, SymTerms};

fn terms(out: &mut String, prefix: &str, t: &SymTerms) {
    for &(b, r, c, v) in &t.entries {
        let _ = writeln!(out, "{prefix} {b} {r} {c} {v:e} 0");
    }
}

/// Serialises `p` in the triplet format.
pub fn write_triplets<W: Write>(p: &ConeProgram, mut w: W) -> io::Result<()> {
    let mut out = String::new();
    out.push_str("blocks");
    for b in &p.blocks {
        match b {
            BlockKind::Psd(n) => {
                let _ = write!(out, " psd:{n}");
            }
            BlockKind::Nonneg(n) => {
                let _ = write!(out, " lp:{n}");
            }
        }
    }
    out.push('\n');
    terms(&mut out, "objective", &p.objective);
    for (i, (a, rhs)) in p.equalities.iter().enumerate() {
        let _ = writeln!(out, "eq {i} {rhs:e}");
        terms(&mut out, &format!("eqterm {i}"), a);
    }
    for (i, row) in p.intervals.iter().enumerate() {
        let _ = writeln!(out, "interval {i} {:e} {:e}", row.lower, row.upper);
        terms(&mut out, &format!("intterm {i}"), &row.a);
    }
    w.write_all(out.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dumps_small_program() {
        let mut p = ConeProgram::new(vec![BlockKind::Psd(2), BlockKind::Nonneg(1)]);
        p.objective.push(0, 0, 0, 1.0);
        let mut a = SymTerms::new();
        a.push(0, 1, 0, 0.5);
        p.add_equality(a, 2.0);
        let mut buf = Vec::new();
        write_triplets(&p, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("blocks psd:2 lp:1\n"));
        assert!(text.contains("eqterm 0 0 0 1 5e-1 0"));
    }
}
