//! Two-phase revised simplex with implicit bounds.
//!
//! Every row gets a slack column so that the working system is `A x + s = b`
//! with bounded columns. Rows whose slack cannot absorb the initial residual
//! receive an artificial column; phase one drives the artificials to zero.
//! The basis inverse is kept explicitly (column-major) and updated by
//! elementary row operations; it is rebuilt from scratch whenever the basic
//! solution drifts.

use super::{
    BasisStatus, LinearProgram, LpError, LpSolution, LpStatus, ObjectiveSense, RowSense, Tolerances,
};
use crate::scalar::Scalar;

const NONE: usize = usize::MAX;
const REFRESH_EVERY: usize = 64;

enum Step<T> {
    Unbounded,
    Flip(T),
    Pivot { row: usize, theta: T, to_upper: bool },
}

enum Outcome {
    Optimal,
    Unbounded,
}

struct Engine<'a, T> {
    m: usize,
    n_struct: usize,
    cols: Vec<Vec<(usize, T)>>,
    lower: Vec<T>,
    upper: Vec<T>,
    cost: Vec<T>,
    x: Vec<T>,
    rhs: Vec<T>,
    /// Column in each basis position.
    basis: Vec<usize>,
    /// Basis position of each column, or `NONE`.
    pos: Vec<usize>,
    /// Column-major `m × m` basis inverse.
    binv: Vec<T>,
    y: Vec<T>,
    tol: &'a Tolerances<T>,
    iterations: usize,
    limit: usize,
}

/// Solves `lp` to optimality or proves it infeasible/unbounded.
///
/// Exceeding the iteration limit is an error rather than a status so that
/// callers cannot mistake it for a proof of anything.
pub fn solve<T: Scalar>(lp: &LinearProgram<T>, tol: &Tolerances<T>) -> Result<LpSolution<T>, LpError> {
    lp.validate()?;
    let mut eng = Engine::new(lp, tol);

    let has_artificials = eng.cols.len() > eng.n_struct + eng.m;
    if has_artificials {
        eng.set_phase_one_costs();
        match eng.run()? {
            Outcome::Optimal => {}
            Outcome::Unbounded => {
                return Err(LpError::Numerical("phase one reported an unbounded ray".into()))
            }
        }
        let infeasibility = (eng.n_struct + eng.m..eng.cols.len())
            .map(|j| eng.x[j])
            .fold(T::zero(), T::max);
        if infeasibility > tol.feas {
            return Ok(eng.finish(lp, LpStatus::Infeasible));
        }
        for j in eng.n_struct + eng.m..eng.cols.len() {
            eng.lower[j] = T::zero();
            eng.upper[j] = T::zero();
            if eng.pos[j] == NONE {
                eng.x[j] = T::zero();
            }
        }
    }

    eng.set_phase_two_costs(lp);
    let status = match eng.run()? {
        Outcome::Optimal => LpStatus::Optimal,
        Outcome::Unbounded => LpStatus::Unbounded,
    };
    Ok(eng.finish(lp, status))
}

impl<'a, T: Scalar> Engine<'a, T> {
    fn new(lp: &LinearProgram<T>, tol: &'a Tolerances<T>) -> Self {
        let n = lp.num_vars();
        let m = lp.num_rows();

        let mut trip: Vec<(usize, usize, T)> = lp.triplets().to_vec();
        trip.sort_by_key(|&(i, j, _)| (j, i));
        let mut cols: Vec<Vec<(usize, T)>> = vec![Vec::new(); n];
        for (i, j, v) in trip {
            match cols[j].last_mut() {
                Some(last) if last.0 == i => last.1 += v,
                _ => cols[j].push((i, v)),
            }
        }
        for c in cols.iter_mut() {
            c.retain(|&(_, v)| v != T::zero());
        }

        let mut lower = lp.lower().to_vec();
        let mut upper = lp.upper().to_vec();
        let mut x: Vec<T> = (0..n)
            .map(|j| {
                if lower[j].is_finite() {
                    lower[j]
                } else if upper[j].is_finite() {
                    upper[j]
                } else {
                    T::zero()
                }
            })
            .collect();

        let mut residual = lp.rhs().to_vec();
        for (j, col) in cols.iter().enumerate() {
            for &(i, v) in col {
                residual[i] -= v * x[j];
            }
        }

        // Slacks.
        for (i, sense) in lp.row_senses().iter().enumerate() {
            cols.push(vec![(i, T::one())]);
            let (l, u) = match sense {
                RowSense::Le => (T::zero(), T::infinity()),
                RowSense::Ge => (T::neg_infinity(), T::zero()),
                RowSense::Eq => (T::zero(), T::zero()),
            };
            lower.push(l);
            upper.push(u);
            x.push(T::zero());
        }

        let mut basis = vec![NONE; m];
        let mut binv = vec![T::zero(); m * m];
        for i in 0..m {
            let slack = n + i;
            let r = residual[i];
            if r >= lower[slack] && r <= upper[slack] {
                x[slack] = r;
                basis[i] = slack;
                binv[i * m + i] = T::one();
            } else {
                let s = r.max(lower[slack]).min(upper[slack]);
                x[slack] = s;
                let e = r - s;
                let sign = if e > T::zero() { T::one() } else { -T::one() };
                cols.push(vec![(i, sign)]);
                lower.push(T::zero());
                upper.push(T::infinity());
                x.push(e.abs());
                basis[i] = cols.len() - 1;
                binv[i * m + i] = sign;
            }
        }

        let total = cols.len();
        let mut pos = vec![NONE; total];
        for (i, &j) in basis.iter().enumerate() {
            pos[j] = i;
        }

        Engine {
            m,
            n_struct: n,
            limit: tol.iteration_limit(m, n),
            cols,
            lower,
            upper,
            cost: vec![T::zero(); total],
            x,
            rhs: lp.rhs().to_vec(),
            basis,
            pos,
            binv,
            y: vec![T::zero(); m],
            tol,
            iterations: 0,
        }
    }

    fn set_phase_one_costs(&mut self) {
        for c in self.cost.iter_mut() {
            *c = T::zero();
        }
        for j in self.n_struct + self.m..self.cols.len() {
            self.cost[j] = T::one();
        }
    }

    /// Internally the engine minimizes.
    fn set_phase_two_costs(&mut self, lp: &LinearProgram<T>) {
        for c in self.cost.iter_mut() {
            *c = T::zero();
        }
        let sign = match lp.sense() {
            ObjectiveSense::Maximize => -T::one(),
            ObjectiveSense::Minimize => T::one(),
        };
        for (j, &c) in lp.cost().iter().enumerate() {
            self.cost[j] = sign * c;
        }
    }

    fn objective(&self) -> T {
        self.cost.iter().zip(&self.x).map(|(&c, &v)| c * v).sum()
    }

    fn run(&mut self) -> Result<Outcome, LpError> {
        self.refresh()?;
        let mut since_refresh = 0usize;
        let mut stall = 0usize;
        let mut bland = false;
        loop {
            if since_refresh >= REFRESH_EVERY {
                self.refresh()?;
                since_refresh = 0;
            }
            let candidate = match self.price(bland) {
                Some(c) => c,
                None if since_refresh > 0 => {
                    self.refresh()?;
                    since_refresh = 0;
                    match self.price(bland) {
                        Some(c) => c,
                        None => return Ok(Outcome::Optimal),
                    }
                }
                None => return Ok(Outcome::Optimal),
            };
            if self.iterations >= self.limit {
                return Err(LpError::IterationLimit { limit: self.limit });
            }
            self.iterations += 1;
            since_refresh += 1;

            let (q, dir, d_q) = candidate;
            let alpha = self.ftran(q);
            let step = self.ratio_test(&alpha, q, dir, bland);
            let theta = match step {
                Step::Unbounded => return Ok(Outcome::Unbounded),
                Step::Flip(theta) => {
                    self.apply_step(&alpha, q, dir, theta);
                    theta
                }
                Step::Pivot { row, theta, to_upper } => {
                    self.apply_step(&alpha, q, dir, theta);
                    self.pivot(row, q, &alpha, to_upper, d_q);
                    theta
                }
            };

            let gain = theta * d_q.abs();
            if gain > T::epsilon() * (T::one() + self.objective().abs()) {
                stall = 0;
                bland = false;
            } else {
                stall += 1;
                if stall > self.tol.stall_threshold {
                    bland = true;
                }
            }
        }
    }

    /// Picks an entering column: Dantzig's largest reduced cost, or the
    /// lowest eligible index under Bland's rule. Ties go to the lowest index.
    fn price(&self, bland: bool) -> Option<(usize, T, T)> {
        let opt = self.tol.opt;
        let mut best: Option<(usize, T, T)> = None;
        let mut best_mag = T::zero();
        for j in 0..self.cols.len() {
            if self.pos[j] != NONE || self.lower[j] == self.upper[j] {
                continue;
            }
            let mut d = self.cost[j];
            for &(i, v) in &self.cols[j] {
                d -= self.y[i] * v;
            }
            let dir = if d < -opt && self.x[j] < self.upper[j] {
                T::one()
            } else if d > opt && self.x[j] > self.lower[j] {
                -T::one()
            } else {
                continue;
            };
            if bland {
                return Some((j, dir, d));
            }
            if d.abs() > best_mag {
                best_mag = d.abs();
                best = Some((j, dir, d));
            }
        }
        best
    }

    fn ftran(&self, q: usize) -> Vec<T> {
        let m = self.m;
        let mut alpha = vec![T::zero(); m];
        for &(k, v) in &self.cols[q] {
            let col = &self.binv[k * m..(k + 1) * m];
            for (a, &b) in alpha.iter_mut().zip(col) {
                *a += b * v;
            }
        }
        alpha
    }

    /// Harris two-pass ratio test; textbook minimum ratio with lowest-index
    /// ties when running under Bland's rule.
    fn ratio_test(&self, alpha: &[T], q: usize, dir: T, bland: bool) -> Step<T> {
        let piv = self.tol.pivot;
        let relax = if bland { T::zero() } else { self.tol.feas };
        let flip = self.upper[q] - self.lower[q];

        let mut theta_max = T::infinity();
        for (i, &a) in alpha.iter().enumerate() {
            if a.abs() <= piv {
                continue;
            }
            let b = self.basis[i];
            let rate = -dir * a;
            let r = if rate < T::zero() {
                if !self.lower[b].is_finite() {
                    continue;
                }
                (self.x[b] - self.lower[b] + relax) / -rate
            } else {
                if !self.upper[b].is_finite() {
                    continue;
                }
                (self.upper[b] - self.x[b] + relax) / rate
            };
            theta_max = theta_max.min(r);
        }

        if flip.is_finite() && flip <= theta_max {
            return Step::Flip(flip);
        }
        if !theta_max.is_finite() {
            return Step::Unbounded;
        }

        let mut chosen: Option<(usize, T, bool)> = None;
        let mut chosen_mag = T::zero();
        for (i, &a) in alpha.iter().enumerate() {
            if a.abs() <= piv {
                continue;
            }
            let b = self.basis[i];
            let rate = -dir * a;
            let (r, to_upper) = if rate < T::zero() {
                if !self.lower[b].is_finite() {
                    continue;
                }
                ((self.x[b] - self.lower[b]) / -rate, false)
            } else {
                if !self.upper[b].is_finite() {
                    continue;
                }
                ((self.upper[b] - self.x[b]) / rate, true)
            };
            if r > theta_max {
                continue;
            }
            let better = match chosen {
                None => true,
                Some((ci, _, _)) => {
                    if bland {
                        b < self.basis[ci]
                    } else {
                        a.abs() > chosen_mag || (a.abs() == chosen_mag && b < self.basis[ci])
                    }
                }
            };
            if better {
                chosen = Some((i, r.max(T::zero()), to_upper));
                chosen_mag = a.abs();
            }
        }
        match chosen {
            Some((row, theta, to_upper)) => Step::Pivot { row, theta, to_upper },
            None => Step::Unbounded,
        }
    }

    fn apply_step(&mut self, alpha: &[T], q: usize, dir: T, theta: T) {
        if theta == T::zero() {
            return;
        }
        self.x[q] += dir * theta;
        for (i, &a) in alpha.iter().enumerate() {
            if a != T::zero() {
                let b = self.basis[i];
                self.x[b] -= dir * theta * a;
            }
        }
    }

    fn pivot(&mut self, r: usize, q: usize, alpha: &[T], to_upper: bool, d_q: T) {
        let m = self.m;
        let leaving = self.basis[r];
        self.x[leaving] = if to_upper { self.upper[leaving] } else { self.lower[leaving] };
        self.pos[leaving] = NONE;
        self.basis[r] = q;
        self.pos[q] = r;

        let nz: Vec<usize> = (0..m).filter(|&i| i != r && alpha[i] != T::zero()).collect();
        let inv_pivot = T::one() / alpha[r];
        for j in 0..m {
            let col = &mut self.binv[j * m..(j + 1) * m];
            let t = col[r];
            if t == T::zero() {
                continue;
            }
            let scaled = t * inv_pivot;
            col[r] = scaled;
            for &i in &nz {
                col[i] -= alpha[i] * scaled;
            }
            self.y[j] += d_q * scaled;
        }
    }

    /// Recomputes basic values and duals from the current inverse, rebuilding
    /// the inverse first if the basic solution no longer satisfies `B x_B = b − N x_N`.
    fn refresh(&mut self) -> Result<(), LpError> {
        self.recompute_basics();
        let residual = self.basis_residual();
        let scale = self.rhs.iter().fold(T::one(), |a, &b| a.max(b.abs()));
        if residual > T::of(1e-9) * scale {
            self.reinvert()?;
            self.recompute_basics();
        }
        self.recompute_duals();
        Ok(())
    }

    fn nonbasic_rhs(&self) -> Vec<T> {
        let mut r = self.rhs.clone();
        for j in 0..self.cols.len() {
            if self.pos[j] == NONE && self.x[j] != T::zero() {
                for &(i, v) in &self.cols[j] {
                    r[i] -= v * self.x[j];
                }
            }
        }
        r
    }

    fn recompute_basics(&mut self) {
        let m = self.m;
        let r = self.nonbasic_rhs();
        let mut xb = vec![T::zero(); m];
        for (k, &rk) in r.iter().enumerate() {
            if rk == T::zero() {
                continue;
            }
            let col = &self.binv[k * m..(k + 1) * m];
            for (v, &b) in xb.iter_mut().zip(col) {
                *v += b * rk;
            }
        }
        for (i, v) in xb.into_iter().enumerate() {
            self.x[self.basis[i]] = v;
        }
    }

    fn basis_residual(&self) -> T {
        let mut r = self.nonbasic_rhs();
        for &b in &self.basis {
            for &(i, v) in &self.cols[b] {
                r[i] -= v * self.x[b];
            }
        }
        r.into_iter().fold(T::zero(), |a, v| a.max(v.abs()))
    }

    fn recompute_duals(&mut self) {
        let m = self.m;
        let cb: Vec<(usize, T)> = self
            .basis
            .iter()
            .enumerate()
            .filter(|&(_, &b)| self.cost[b] != T::zero())
            .map(|(i, &b)| (i, self.cost[b]))
            .collect();
        for j in 0..m {
            let col = &self.binv[j * m..(j + 1) * m];
            self.y[j] = cb.iter().map(|&(i, c)| c * col[i]).sum();
        }
    }

    /// Gauss-Jordan inversion of the current basis with partial pivoting.
    fn reinvert(&mut self) -> Result<(), LpError> {
        let m = self.m;
        // Row-major work matrix [B | I].
        let mut a = vec![T::zero(); m * m];
        let mut inv = vec![T::zero(); m * m];
        for (p, &b) in self.basis.iter().enumerate() {
            for &(i, v) in &self.cols[b] {
                a[i * m + p] = v;
            }
        }
        for i in 0..m {
            inv[i * m + i] = T::one();
        }
        for c in 0..m {
            let (mut best, mut best_mag) = (c, T::zero());
            for r in c..m {
                let mag = a[r * m + c].abs();
                if mag > best_mag {
                    best = r;
                    best_mag = mag;
                }
            }
            if best_mag <= T::epsilon() {
                return Err(LpError::Numerical("singular basis during reinversion".into()));
            }
            if best != c {
                for k in 0..m {
                    a.swap(c * m + k, best * m + k);
                    inv.swap(c * m + k, best * m + k);
                }
            }
            let p = T::one() / a[c * m + c];
            for k in 0..m {
                a[c * m + k] *= p;
                inv[c * m + k] *= p;
            }
            for r in 0..m {
                if r == c {
                    continue;
                }
                let f = a[r * m + c];
                if f == T::zero() {
                    continue;
                }
                for k in 0..m {
                    let ack = a[c * m + k];
                    let ick = inv[c * m + k];
                    a[r * m + k] -= f * ack;
                    inv[r * m + k] -= f * ick;
                }
            }
        }
        // inv is B⁻¹ in row-major order with rows indexed by basis position;
        // store it column-major.
        for p in 0..m {
            for k in 0..m {
                self.binv[k * m + p] = inv[p * m + k];
            }
        }
        Ok(())
    }

    fn finish(&mut self, lp: &LinearProgram<T>, status: LpStatus) -> LpSolution<T> {
        let n = self.n_struct;
        let m = self.m;
        let x: Vec<T> = self.x[..n].to_vec();
        let sign = match lp.sense() {
            ObjectiveSense::Maximize => -T::one(),
            ObjectiveSense::Minimize => T::one(),
        };
        // Engine duals belong to the minimization form; flip back for maximize.
        let duals: Vec<T> = self.y.iter().map(|&v| sign * v).collect();
        let mut reduced_costs = lp.cost().to_vec();
        for (j, col) in self.cols[..n].iter().enumerate() {
            for &(i, v) in col {
                reduced_costs[j] -= duals[i] * v;
            }
        }
        let status_of = |j: usize| {
            if self.pos[j] != NONE {
                BasisStatus::Basic
            } else if self.x[j] == self.lower[j] {
                BasisStatus::AtLower
            } else if self.x[j] == self.upper[j] {
                BasisStatus::AtUpper
            } else {
                BasisStatus::Free
            }
        };
        let col_status = (0..n).map(status_of).collect();
        let row_status = (n..n + m).map(status_of).collect();
        let objective = match status {
            LpStatus::Optimal => lp.objective_value(&x),
            LpStatus::Infeasible => T::nan(),
            LpStatus::Unbounded => match lp.sense() {
                ObjectiveSense::Maximize => T::infinity(),
                ObjectiveSense::Minimize => T::neg_infinity(),
            },
        };
        LpSolution {
            status,
            x,
            objective,
            duals,
            reduced_costs,
            col_status,
            row_status,
            iterations: self.iterations,
        }
    }
}
