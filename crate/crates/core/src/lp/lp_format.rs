//! CPLEX LP text export, for cross-checking against external solvers.

use std::fmt::Write as _;
use std::io::{self, Write};

use super::{LinearProgram, ObjectiveSense, RowSense};
use crate::scalar::Scalar;

/// LP-format names may not contain spaces or start with a digit/period.
fn sanitize(name: &str, prefix: char, idx: usize) -> String {
    let cleaned: String = name
        .chars()
        .map(|c| if c.is_ascii_alphanumeric() || "_[]().".contains(c) { c } else { '_' })
        .collect();
    match cleaned.chars().next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => cleaned,
        _ => format!("{prefix}{idx}_{cleaned}"),
    }
}

fn term<T: Scalar>(out: &mut String, coef: T, name: &str, first: bool) {
    let c = coef.to_f64_lossy();
    if first {
        let _ = write!(out, " {} {}", c, name);
    } else if c < 0.0 {
        let _ = write!(out, " - {} {}", -c, name);
    } else {
        let _ = write!(out, " + {} {}", c, name);
    }
}

pub fn write_lp_format<T: Scalar, W: Write>(lp: &LinearProgram<T>, mut w: W) -> io::Result<()> {
    let cols: Vec<String> = lp.col_names().iter().enumerate().map(|(j, n)| sanitize(n, 'x', j)).collect();
    let rows: Vec<String> = lp.row_names().iter().enumerate().map(|(i, n)| sanitize(n, 'r', i)).collect();

    let mut by_row: Vec<Vec<(usize, T)>> = vec![Vec::new(); lp.num_rows()];
    for &(i, j, v) in lp.triplets() {
        by_row[i].push((j, v));
    }

    let mut out = String::new();
    out.push_str(match lp.sense() {
        ObjectiveSense::Maximize => "Maximize\n obj:",
        ObjectiveSense::Minimize => "Minimize\n obj:",
    });
    let mut first = true;
    for (j, &c) in lp.cost().iter().enumerate() {
        if c != T::zero() {
            term(&mut out, c, &cols[j], first);
            first = false;
        }
    }
    if first {
        out.push_str(" 0");
    }
    out.push_str("\nSubject To\n");
    for (i, terms) in by_row.iter().enumerate() {
        let _ = write!(out, " {}:", rows[i]);
        if terms.is_empty() {
            let _ = write!(out, " 0 {}", cols.first().map(String::as_str).unwrap_or("x"));
        }
        for (k, &(j, v)) in terms.iter().enumerate() {
            term(&mut out, v, &cols[j], k == 0);
        }
        let op = match lp.row_senses()[i] {
            RowSense::Le => "<=",
            RowSense::Ge => ">=",
            RowSense::Eq => "=",
        };
        let _ = writeln!(out, " {} {}", op, lp.rhs()[i].to_f64_lossy());
    }
    out.push_str("Bounds\n");
    for (j, name) in cols.iter().enumerate() {
        let (l, u) = (lp.lower()[j].to_f64_lossy(), lp.upper()[j].to_f64_lossy());
        match (l.is_finite(), u.is_finite()) {
            (true, true) if l == u => {
                let _ = writeln!(out, " {name} = {l}");
            }
            (true, true) => {
                let _ = writeln!(out, " {l} <= {name} <= {u}");
            }
            (true, false) => {
                let _ = writeln!(out, " {name} >= {l}");
            }
            (false, true) => {
                let _ = writeln!(out, " -inf <= {name} <= {u}");
            }
            (false, false) => {
                let _ = writeln!(out, " {name} free");
            }
        }
    }
    out.push_str("End\n");
    w.write_all(out.as_bytes())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn writes_all_sections() {
        let mut lp = LinearProgram::<f64>::maximize();
        let x = lp.add_var("m da", 0.0, 10.0, 2.5);
        let y = lp.add_var("tau", f64::NEG_INFINITY, f64::INFINITY, -1.0);
        lp.add_row("link", &[(x, 1.0), (y, -1.0)], RowSense::Eq, 0.0);
        let mut buf = Vec::new();
        write_lp_format(&lp, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("Maximize\n obj: 2.5 m_da - 1 tau\n"));
        assert!(text.contains(" link: 1 m_da - 1 tau = 0\n"));
        assert!(text.contains(" 0 <= m_da <= 10\n"));
        assert!(text.contains(" tau free\n"));
        assert!(text.ends_with("End\n"));
    }
}
