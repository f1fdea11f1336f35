//! Floating-point abstraction shared by the numerical modules.

use std::fmt::{Debug, Display};
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, NumAssign, ToPrimitive};

/// Real scalar used by the solver, calibration and model code.
///
/// Implemented for `f32` and `f64`. The default tolerances scale with the
/// precision of the type; `f64` gets the tolerances the daily problem was
/// sized for.
pub trait Scalar:
    Float + FromPrimitive + ToPrimitive + NumAssign + Sum + Default + Debug + Display + Send + Sync + 'static
{
    /// Primal feasibility tolerance.
    fn default_feas_tol() -> Self;
    /// Primal/dual objective gap tolerance.
    fn default_gap_tol() -> Self;
    /// Reduced-cost tolerance used for pricing.
    fn default_opt_tol() -> Self;
    /// Smallest acceptable pivot magnitude.
    fn default_pivot_tol() -> Self;

    /// Lossy conversion from `f64`, used for configuration constants.
    #[inline]
    fn of(v: f64) -> Self {
        Self::from_f64(v).expect("f64 is representable")
    }

    /// Conversion from a count.
    #[inline]
    fn of_usize(v: usize) -> Self {
        Self::from_usize(v).expect("usize is representable")
    }

    #[inline]
    fn to_f64_lossy(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Scalar for f64 {
    fn default_feas_tol() -> Self {
        1e-7
    }
    fn default_gap_tol() -> Self {
        1e-6
    }
    fn default_opt_tol() -> Self {
        1e-9
    }
    fn default_pivot_tol() -> Self {
        1e-9
    }
}

impl Scalar for f32 {
    fn default_feas_tol() -> Self {
        1e-4
    }
    fn default_gap_tol() -> Self {
        1e-3
    }
    fn default_opt_tol() -> Self {
        1e-5
    }
    fn default_pivot_tol() -> Self {
        1e-5
    }
}
