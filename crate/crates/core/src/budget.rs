//! Explicit resource budgets for potentially expensive operations.

/// Caps for factorization effort and exhaustive enumeration.
///
/// Budgets are passed explicitly so callers can see (and tests can pin)
/// exactly how much work an operation may do before it returns
/// [`crate::Error::BudgetExceeded`] instead of an answer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Budget {
    /// Pollard-rho iteration cap per factorization (trial division up to
    /// [`Budget::TRIAL_DIVISION_BOUND`] is always performed first).
    pub factor_steps: u64,
    /// Maximum number of tuples an exhaustive enumeration may visit.
    pub enum_tuples: u128,
}

impl Budget {
    /// Trial division handles all prime factors up to this bound.
    pub const TRIAL_DIVISION_BOUND: u64 = 100_000;

    pub const fn new(factor_steps: u64, enum_tuples: u128) -> Self {
        Budget { factor_steps, enum_tuples }
    }

    /// Scale every cap by `k` (saturating); `with_budget(0)` forbids
    /// everything beyond trial division and empty enumerations.
    pub fn scaled(self, k: u64) -> Self {
        Budget {
            factor_steps: self.factor_steps.saturating_mul(k),
            enum_tuples: self.enum_tuples.saturating_mul(k as u128),
        }
    }
}

impl Default for Budget {
    fn default() -> Self {
        // Enough for ~19-digit semiprimes and the desk-scale boxes the
        // experiments use; raise via CLI/env for bigger sweeps.
        Budget { factor_steps: 5_000_000, enum_tuples: 10_000_000 }
    }
}
