//! Test-only oracles shared by the integration and acceptance suites.
#![allow(dead_code)]

pub mod fixtures;
pub mod oracles;
pub mod vertex;

use flexbid::lp::{LinearProgram, RowSense};
use rand::Rng;

#[allow(unused_imports)]
pub use vertex::{best_vertex_objective, DenseLp};

/// Random feasible LP with finite boxes: ≤ 8 columns, ≤ 8 rows.
pub fn random_bounded_lp<R: Rng>(rng: &mut R) -> DenseLp {
    let n = rng.gen_range(1..=8);
    let m = rng.gen_range(1..=8);
    let lower: Vec<f64> = (0..n).map(|_| rng.gen_range(-5.0..0.0)).collect();
    let upper: Vec<f64> = lower.iter().map(|l| l + rng.gen_range(0.5..10.0)).collect();
    let x0: Vec<f64> = (0..n).map(|j| rng.gen_range(lower[j]..upper[j])).collect();
    let mut rows = Vec::new();
    let mut senses = Vec::new();
    let mut rhs = Vec::new();
    for _ in 0..m {
        let row: Vec<f64> = (0..n)
            .map(|_| if rng.gen_bool(0.3) { 0.0 } else { rng.gen_range(-5i32..=5) as f64 })
            .collect();
        let act: f64 = row.iter().zip(&x0).map(|(a, b)| a * b).sum();
        let u: f64 = rng.gen();
        let (s, b) = if u < 0.45 {
            (RowSense::Le, act + rng.gen_range(0.0..3.0))
        } else if u < 0.9 {
            (RowSense::Ge, act - rng.gen_range(0.0..3.0))
        } else {
            (RowSense::Eq, act)
        };
        rows.push(row);
        senses.push(s);
        rhs.push(b);
    }
    let cost = (0..n).map(|_| rng.gen_range(-5.0..5.0)).collect();
    DenseLp { cost, lower, upper, rows, senses, rhs }
}

pub fn to_lp(d: &DenseLp) -> LinearProgram<f64> {
    let mut lp = LinearProgram::maximize();
    let vars: Vec<_> = (0..d.cost.len())
        .map(|j| lp.add_var(format!("x{j}"), d.lower[j], d.upper[j], d.cost[j]))
        .collect();
    for (i, row) in d.rows.iter().enumerate() {
        let terms: Vec<_> = row.iter().enumerate().map(|(j, &a)| (vars[j], a)).collect();
        lp.add_row(format!("r{i}"), &terms, d.senses[i], d.rhs[i]);
    }
    lp
}
