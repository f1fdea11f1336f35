//! Exhaustive vertex enumeration for small boxed LPs.
//!
//! Every vertex of `{l ≤ x ≤ u, rows}` is obtained by fixing `n − k` columns
//! at one of their bounds and making `k` rows active, then solving the
//! remaining `k × k` system. Equalities are enforced by the feasibility check.

use flexbid::lp::RowSense;

#[derive(Clone, Debug)]
pub struct DenseLp {
    pub cost: Vec<f64>,
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
    pub rows: Vec<Vec<f64>>,
    pub senses: Vec<RowSense>,
    pub rhs: Vec<f64>,
}

impl DenseLp {
    pub fn feasible(&self, x: &[f64], tol: f64) -> bool {
        for j in 0..x.len() {
            if x[j] < self.lower[j] - tol || x[j] > self.upper[j] + tol {
                return false;
            }
        }
        for (i, row) in self.rows.iter().enumerate() {
            let a: f64 = row.iter().zip(x).map(|(a, b)| a * b).sum();
            let ok = match self.senses[i] {
                RowSense::Le => a <= self.rhs[i] + tol,
                RowSense::Ge => a >= self.rhs[i] - tol,
                RowSense::Eq => (a - self.rhs[i]).abs() <= tol,
            };
            if !ok {
                return false;
            }
        }
        true
    }
}

fn subsets(n: usize, k: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::new();
    fn rec(start: usize, n: usize, k: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, k, cur, out);
            cur.pop();
        }
    }
    rec(0, n, k, &mut cur, &mut out);
    out
}

fn solve_dense(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> Option<Vec<f64>> {
    let k = b.len();
    for c in 0..k {
        let p = (c..k).max_by(|&i, &j| a[i][c].abs().partial_cmp(&a[j][c].abs()).unwrap())?;
        if a[p][c].abs() < 1e-10 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in 0..k {
            if r != c {
                let f = a[r][c] / a[c][c];
                for q in c..k {
                    a[r][q] -= f * a[c][q];
                }
                b[r] -= f * b[c];
            }
        }
    }
    Some((0..k).map(|i| b[i] / a[i][i]).collect())
}

/// Best objective over all vertices, or `None` when no vertex is feasible.
pub fn best_vertex_objective(lp: &DenseLp) -> Option<f64> {
    let n = lp.cost.len();
    let m = lp.rows.len();
    let mut best: Option<f64> = None;
    for k in 0..=n.min(m) {
        for rows in subsets(m, k) {
            for free in subsets(n, k) {
                let fixed: Vec<usize> = (0..n).filter(|j| !free.contains(j)).collect();
                for mask in 0u32..(1u32 << fixed.len()) {
                    let mut x = vec![0.0; n];
                    for (b, &j) in fixed.iter().enumerate() {
                        x[j] = if mask & (1 << b) == 0 { lp.lower[j] } else { lp.upper[j] };
                    }
                    let a: Vec<Vec<f64>> = rows.iter().map(|&i| free.iter().map(|&j| lp.rows[i][j]).collect()).collect();
                    let rhs: Vec<f64> = rows
                        .iter()
                        .map(|&i| lp.rhs[i] - fixed.iter().map(|&j| lp.rows[i][j] * x[j]).sum::<f64>())
                        .collect();
                    let Some(sol) = solve_dense(a, rhs) else { continue };
                    for (t, &j) in free.iter().enumerate() {
                        x[j] = sol[t];
                    }
                    if lp.feasible(&x, 1e-9) {
                        let obj: f64 = lp.cost.iter().zip(&x).map(|(c, v)| c * v).sum();
                        best = Some(best.map_or(obj, |b: f64| b.max(obj)));
                    }
                }
            }
        }
    }
    best
}
