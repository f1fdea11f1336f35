//! Bounded-variable linear programs and their solver.
//!
//! A [`LinearProgram`] stores costs, column bounds and a sparse constraint
//! matrix in triplet form. [`solve`] runs a two-phase revised simplex that
//! handles bounds implicitly (nonbasic columns sit at a bound, boundary
//! crossings become bound flips) and falls back to Bland's rule when the
//! objective stalls.

mod lp_format;
mod simplex;

use std::fmt;

use serde::Serialize;
use thiserror::Error;

use crate::scalar::Scalar;

pub use lp_format::write_lp_format;
pub use simplex::solve;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum ObjectiveSense {
    Maximize,
    Minimize,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum RowSense {
    Le,
    Ge,
    Eq,
}

impl fmt::Display for RowSense {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            RowSense::Le => "<=",
            RowSense::Ge => ">=",
            RowSense::Eq => "=",
        })
    }
}

/// Column handle returned by [`LinearProgram::add_var`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct VarId(pub usize);

/// Row handle returned by [`LinearProgram::add_row`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct RowId(pub usize);

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("invalid linear program: {0}")]
    Invalid(String),
    #[error("iteration limit of {limit} exceeded")]
    IterationLimit { limit: usize },
    #[error("numerical failure: {0}")]
    Numerical(String),
}

#[derive(Clone, Debug)]
pub struct LinearProgram<T> {
    sense: ObjectiveSense,
    cost: Vec<T>,
    lower: Vec<T>,
    upper: Vec<T>,
    col_names: Vec<String>,
    /// (row, column, value)
    triplets: Vec<(usize, usize, T)>,
    senses: Vec<RowSense>,
    rhs: Vec<T>,
    row_names: Vec<String>,
}

impl<T: Scalar> Default for LinearProgram<T> {
    fn default() -> Self {
        Self::new(ObjectiveSense::Maximize)
    }
}

impl<T: Scalar> LinearProgram<T> {
    pub fn new(sense: ObjectiveSense) -> Self {
        LinearProgram {
            sense,
            cost: Vec::new(),
            lower: Vec::new(),
            upper: Vec::new(),
            col_names: Vec::new(),
            triplets: Vec::new(),
            senses: Vec::new(),
            rhs: Vec::new(),
            row_names: Vec::new(),
        }
    }

    pub fn maximize() -> Self {
        Self::new(ObjectiveSense::Maximize)
    }

    /// Adds a column. Use `T::neg_infinity()` / `T::infinity()` for missing bounds.
    pub fn add_var(&mut self, name: impl Into<String>, lower: T, upper: T, cost: T) -> VarId {
        self.cost.push(cost);
        self.lower.push(lower);
        self.upper.push(upper);
        self.col_names.push(name.into());
        VarId(self.cost.len() - 1)
    }

    /// Adds a row `Σ coef·x  sense  rhs`. Repeated columns are summed.
    pub fn add_row(
        &mut self,
        name: impl Into<String>,
        terms: &[(VarId, T)],
        sense: RowSense,
        rhs: T,
    ) -> RowId {
        let row = self.senses.len();
        for &(VarId(col), value) in terms {
            if value != T::zero() {
                self.triplets.push((row, col, value));
            }
        }
        self.senses.push(sense);
        self.rhs.push(rhs);
        self.row_names.push(name.into());
        RowId(row)
    }

    pub fn set_cost(&mut self, var: VarId, cost: T) {
        self.cost[var.0] = cost;
    }

    pub fn set_bounds(&mut self, var: VarId, lower: T, upper: T) {
        self.lower[var.0] = lower;
        self.upper[var.0] = upper;
    }

    pub fn set_rhs(&mut self, row: RowId, rhs: T) {
        self.rhs[row.0] = rhs;
    }

    pub fn sense(&self) -> ObjectiveSense {
        self.sense
    }
    pub fn num_vars(&self) -> usize {
        self.cost.len()
    }
    pub fn num_rows(&self) -> usize {
        self.senses.len()
    }
    pub fn num_nonzeros(&self) -> usize {
        self.triplets.len()
    }
    pub fn cost(&self) -> &[T] {
        &self.cost
    }
    pub fn lower(&self) -> &[T] {
        &self.lower
    }
    pub fn upper(&self) -> &[T] {
        &self.upper
    }
    pub fn col_names(&self) -> &[String] {
        &self.col_names
    }
    pub fn row_names(&self) -> &[String] {
        &self.row_names
    }
    pub fn row_senses(&self) -> &[RowSense] {
        &self.senses
    }
    pub fn rhs(&self) -> &[T] {
        &self.rhs
    }
    pub fn triplets(&self) -> &[(usize, usize, T)] {
        &self.triplets
    }

    /// Checks dimensions, bound ordering and finiteness of the data.
    pub fn validate(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        let m = self.num_rows();
        if self.lower.len() != n || self.upper.len() != n || self.col_names.len() != n {
            return Err(LpError::Invalid("column arrays have inconsistent lengths".into()));
        }
        if self.rhs.len() != m || self.row_names.len() != m {
            return Err(LpError::Invalid("row arrays have inconsistent lengths".into()));
        }
        for j in 0..n {
            let (l, u, c) = (self.lower[j], self.upper[j], self.cost[j]);
            if l.is_nan() || u.is_nan() || !c.is_finite() {
                return Err(LpError::Invalid(format!("column {} has NaN/infinite data", self.col_names[j])));
            }
            if l > u {
                return Err(LpError::Invalid(format!(
                    "column {} has lower bound {} above upper bound {}",
                    self.col_names[j], l, u
                )));
            }
            if l == T::infinity() || u == T::neg_infinity() {
                return Err(LpError::Invalid(format!("column {} has an empty domain", self.col_names[j])));
            }
        }
        for (i, r) in self.rhs.iter().enumerate() {
            if !r.is_finite() {
                return Err(LpError::Invalid(format!("row {} has non-finite rhs", self.row_names[i])));
            }
        }
        for &(i, j, v) in &self.triplets {
            if i >= m || j >= n {
                return Err(LpError::Invalid(format!("triplet ({i}, {j}) out of range")));
            }
            if !v.is_finite() {
                return Err(LpError::Invalid(format!(
                    "row {} column {} has non-finite coefficient",
                    self.row_names[i], self.col_names[j]
                )));
            }
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[T]) -> T {
        self.cost.iter().zip(x).map(|(&c, &v)| c * v).sum()
    }

    /// Row activities `A x`.
    pub fn row_activity(&self, x: &[T]) -> Vec<T> {
        let mut act = vec![T::zero(); self.num_rows()];
        for &(i, j, v) in &self.triplets {
            act[i] += v * x[j];
        }
        act
    }

    /// Largest violation of bounds or rows at `x`.
    pub fn max_primal_violation(&self, x: &[T]) -> T {
        let mut worst = T::zero();
        for j in 0..self.num_vars() {
            worst = worst.max(self.lower[j] - x[j]).max(x[j] - self.upper[j]);
        }
        for (i, a) in self.row_activity(x).into_iter().enumerate() {
            let b = self.rhs[i];
            let v = match self.senses[i] {
                RowSense::Le => a - b,
                RowSense::Ge => b - a,
                RowSense::Eq => (a - b).abs(),
            };
            worst = worst.max(v);
        }
        worst
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

/// Position of a column (or row slack) in the final basis.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum BasisStatus {
    Basic,
    AtLower,
    AtUpper,
    /// Nonbasic free column at zero.
    Free,
}

#[derive(Clone, Copy, Debug)]
pub struct Tolerances<T> {
    pub feas: T,
    pub gap: T,
    pub opt: T,
    pub pivot: T,
    /// Defaults to `50 × (rows + cols)`.
    pub max_iterations: Option<usize>,
    /// Consecutive non-improving pivots before switching to Bland's rule.
    pub stall_threshold: usize,
}

impl<T: Scalar> Default for Tolerances<T> {
    fn default() -> Self {
        Tolerances {
            feas: T::default_feas_tol(),
            gap: T::default_gap_tol(),
            opt: T::default_opt_tol(),
            pivot: T::default_pivot_tol(),
            max_iterations: None,
            stall_threshold: 30,
        }
    }
}

impl<T> Tolerances<T> {
    pub fn iteration_limit(&self, rows: usize, cols: usize) -> usize {
        self.max_iterations.unwrap_or(50 * (rows + cols).max(1))
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct LpSolution<T> {
    pub status: LpStatus,
    /// Column values; meaningful only when optimal.
    pub x: Vec<T>,
    pub objective: T,
    /// Row duals in the problem's own sense: the rate of change of the
    /// optimal objective per unit increase of the row's right-hand side.
    pub duals: Vec<T>,
    /// `c_j − yᵀA_j` for every column.
    pub reduced_costs: Vec<T>,
    pub col_status: Vec<BasisStatus>,
    pub row_status: Vec<BasisStatus>,
    pub iterations: usize,
}

/// Optimality evidence measured against the original program.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Certificate<T> {
    pub primal_infeasibility: T,
    /// Largest reduced cost (or row dual) with the wrong sign for its bound state.
    pub dual_infeasibility: T,
    /// Largest `|y_i · slack_i|` or `|r_j| · distance-to-nearest-bound`.
    pub complementarity: T,
    pub primal_objective: T,
    pub dual_objective: T,
}

impl<T: Scalar> Certificate<T> {
    pub fn gap(&self) -> T {
        (self.primal_objective - self.dual_objective).abs()
    }

    pub fn holds(&self, tol: &Tolerances<T>) -> bool {
        let scale = T::one().max(self.primal_objective.abs());
        self.primal_infeasibility <= tol.feas
            && self.complementarity <= tol.feas * scale
            && self.gap() <= tol.gap * scale
    }
}

impl<T: Scalar> LpSolution<T> {
    pub fn is_optimal(&self) -> bool {
        self.status == LpStatus::Optimal
    }

    pub fn value(&self, var: VarId) -> T {
        self.x[var.0]
    }

    /// Recomputes primal/dual evidence from scratch against `lp`.
    pub fn certificate(&self, lp: &LinearProgram<T>) -> Certificate<T> {
        let sign = match lp.sense() {
            ObjectiveSense::Maximize => T::one(),
            ObjectiveSense::Minimize => -T::one(),
        };
        let x = &self.x;
        let y = &self.duals;
        let act = lp.row_activity(x);
        let mut reduced = lp.cost.clone();
        for &(i, j, v) in &lp.triplets {
            reduced[j] -= y[i] * v;
        }

        let mut dual_inf = T::zero();
        let mut comp = T::zero();
        let mut dual_obj = T::zero();
        for i in 0..lp.num_rows() {
            let s = lp.rhs[i] - act[i];
            // In maximize form a <= row carries y >= 0, a >= row y <= 0.
            let ys = sign * y[i];
            match lp.senses[i] {
                RowSense::Le => dual_inf = dual_inf.max(-ys),
                RowSense::Ge => dual_inf = dual_inf.max(ys),
                RowSense::Eq => {}
            }
            if lp.senses[i] != RowSense::Eq {
                comp = comp.max((y[i] * s).abs());
            }
            dual_obj += y[i] * lp.rhs[i];
        }
        for j in 0..lp.num_vars() {
            let r = sign * reduced[j];
            let (l, u) = (lp.lower[j], lp.upper[j]);
            let room_up = u - x[j];
            let room_down = x[j] - l;
            if r > T::zero() && room_up > self_tol::<T>() {
                dual_inf = dual_inf.max(r);
                comp = comp.max(r * room_up.min(T::one()));
            }
            if r < T::zero() && room_down > self_tol::<T>() {
                dual_inf = dual_inf.max(-r);
                comp = comp.max(-r * room_down.min(T::one()));
            }
            dual_obj += reduced[j] * x[j];
        }
        Certificate {
            primal_infeasibility: lp.max_primal_violation(x),
            dual_infeasibility: dual_inf,
            complementarity: comp,
            primal_objective: lp.objective_value(x),
            dual_objective: dual_obj,
        }
    }
}

fn self_tol<T: Scalar>() -> T {
    T::default_feas_tol()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validate_rejects_inverted_bounds() {
        let mut lp = LinearProgram::<f64>::maximize();
        lp.add_var("x", 1.0, 0.0, 1.0);
        assert!(matches!(lp.validate(), Err(LpError::Invalid(_))));
    }

    #[test]
    fn validate_rejects_nan_coefficient() {
        let mut lp = LinearProgram::<f64>::maximize();
        let x = lp.add_var("x", 0.0, 1.0, 1.0);
        lp.add_row("r", &[(x, f64::NAN)], RowSense::Le, 1.0);
        assert!(lp.validate().is_err());
    }

    #[test]
    fn row_activity_sums_repeated_columns() {
        let mut lp = LinearProgram::<f64>::maximize();
        let x = lp.add_var("x", 0.0, 1.0, 1.0);
        lp.add_row("r", &[(x, 1.0), (x, 2.0)], RowSense::Le, 5.0);
        assert_eq!(lp.row_activity(&[2.0]), vec![6.0]);
        assert_eq!(lp.max_primal_violation(&[2.0]), 1.0);
    }
}
