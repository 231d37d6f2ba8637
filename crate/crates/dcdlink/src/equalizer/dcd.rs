//! Bounded sequential dichotomous coordinate descent.
//!
//! Solves `A x = b` (A real symmetric, nonnegative diagonal) over the box
//! `|x_n| <= B` using only sign flips, additions, comparisons, and halvings:
//! every candidate step is the current power-of-two step size, so all
//! products with it are arithmetic shifts. The ledger records exactly those
//! operations, with multiplications provably zero.
//!
//! Counting conventions (one ledger entry per arithmetic event):
//! - testing a coordinate costs 1 bit shift (forming `(step/2)·A_nn`) and
//!   1 comparison against `|r_n|`;
//! - a candidate costs 1 addition (`x_n ± step`) and 1 comparison (box
//!   check);
//! - an accepted update costs N additions and N bit shifts (the residual
//!   sweep `r ← r ∓ step·a_n`);
//! - halving the step costs 1 bit shift.
//!
//! Loop-control checks (update budget, halving budget) are free, matching
//! hardware tallies that charge only datapath operations.

use nalgebra::{DMatrix, DVector};
use num_traits::Float;

use crate::error::{Error, Result};
use crate::num::{is_power_of_two, Scalar};

/// A bounded coordinate-descent problem instance.
#[derive(Debug, Clone, PartialEq)]
pub struct DcdProblem<T> {
    /// Symmetric system matrix with nonnegative diagonal (N×N).
    pub a: DMatrix<T>,
    /// Right-hand side (length N).
    pub b: DVector<T>,
    /// Initial step size; must be a power of two and at most `bound`.
    pub step: T,
    /// Box bound `B`: accepted iterates keep `|x_n| <= B`. May be infinite.
    pub bound: T,
    /// Budget of accepted updates (`u64::MAX` for unlimited); checked after
    /// each full coordinate pass.
    pub max_updates: u64,
    /// Budget of step halvings; the solver stops when it is exhausted.
    pub max_halvings: u32,
    /// Record each accepted update in [`DcdOutcome::trace`].
    pub record_trace: bool,
}

impl<T: Scalar> DcdProblem<T> {
    /// Problem with the default trace setting (off).
    pub fn new(a: DMatrix<T>, b: DVector<T>, step: T, bound: T) -> Self {
        DcdProblem {
            a,
            b,
            step,
            bound,
            max_updates: u64::MAX,
            max_halvings: 8,
            record_trace: false,
        }
    }

    fn validate(&self) -> Result<()> {
        let n = self.b.len();
        if self.a.nrows() != n || self.a.ncols() != n {
            return Err(Error::Dimension(format!(
                "{}x{} system matrix with length-{n} right-hand side",
                self.a.nrows(),
                self.a.ncols()
            )));
        }
        if !is_power_of_two(self.step) {
            return Err(Error::StepNotPowerOfTwo(self.step.to64()));
        }
        if self.step > self.bound {
            return Err(Error::StepExceedsBound {
                step: self.step.to64(),
                bound: self.bound.to64(),
            });
        }
        if !(self.bound > T::zero()) {
            return Err(Error::NonPositive {
                name: "bound",
                value: self.bound.to64(),
            });
        }
        // With an infinite box a zero (or negative) diagonal entry facing a
        // nonzero residual would walk forever; a finite box always terminates.
        if self.bound == T::infinity() {
            for n_idx in 0..n {
                let d = self.a[(n_idx, n_idx)];
                if !(d > T::zero()) {
                    return Err(Error::BadDiagonal {
                        index: n_idx,
                        value: d.to64(),
                    });
                }
            }
        }
        Ok(())
    }
}

/// Operation tallies and loop statistics of one solve.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DcdLedger {
    pub additions: u64,
    pub comparisons: u64,
    pub bit_shifts: u64,
    /// Always zero: the algorithm is multiplication-free.
    pub multiplications: u64,
    pub accepted_updates: u64,
    /// Full coordinate passes executed.
    pub passes: u64,
    /// Step halvings executed.
    pub halvings: u32,
    /// Step size in force at return.
    pub final_step: f64,
}

impl DcdLedger {
    /// The convergence-cost figure: additions plus comparisons, the
    /// convention under which comparisons count as additions.
    pub fn convergence_additions(&self) -> u64 {
        self.additions + self.comparisons
    }
}

/// One accepted update, for trace-enabled runs.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DcdStep<T> {
    /// Coordinate index updated (0-based).
    pub coordinate: usize,
    /// Signed step applied to the coordinate.
    pub delta: T,
    /// 1-based pass in which the update was accepted.
    pub pass: u64,
}

/// Result of a bounded coordinate-descent solve.
#[derive(Debug, Clone, PartialEq)]
pub struct DcdOutcome<T> {
    /// Final iterate; entries are multiples of the final step, within the box.
    pub x: DVector<T>,
    /// Maintained residual `b - A x`.
    pub residual: DVector<T>,
    pub ledger: DcdLedger,
    /// Accepted updates in order (empty unless tracing was requested).
    pub trace: Vec<DcdStep<T>>,
}

/// Run bounded sequential coordinate descent.
///
/// Starting from `x = 0`, coordinates are visited cyclically in ascending
/// order. Coordinate `n` is updated by `±step` toward its residual when
/// `(step/2)·A_nn < |r_n|` and the candidate stays inside the box; a full
/// pass without any accepted update halves the step. The solve returns when
/// the accepted-update budget is met (checked after each pass) or the
/// halving budget is exhausted.
pub fn dcd_bound<T: Scalar>(p: &DcdProblem<T>) -> Result<DcdOutcome<T>> {
    p.validate()?;
    let n = p.b.len();
    let mut x = DVector::from_element(n, T::zero());
    let mut r = p.b.clone();
    let mut step = p.step;
    let mut ledger = DcdLedger::default();
    let mut trace = Vec::new();
    let half = T::of(0.5);

    loop {
        ledger.passes += 1;
        let mut updates_this_pass = 0u64;
        for coord in 0..n {
            let threshold = half * step * p.a[(coord, coord)];
            ledger.bit_shifts += 1;
            ledger.comparisons += 1;
            if !(threshold < Float::abs(r[coord])) {
                continue;
            }
            let sign = if r[coord] < T::zero() {
                -T::one()
            } else {
                T::one()
            };
            let t = x[coord] + sign * step;
            ledger.additions += 1;
            ledger.comparisons += 1;
            if !(Float::abs(t) <= p.bound) {
                continue;
            }
            x[coord] = t;
            let delta = sign * step;
            for j in 0..n {
                r[j] -= delta * p.a[(j, coord)];
            }
            ledger.additions += n as u64;
            ledger.bit_shifts += n as u64;
            ledger.accepted_updates += 1;
            updates_this_pass += 1;
            if p.record_trace {
                trace.push(DcdStep {
                    coordinate: coord,
                    delta,
                    pass: ledger.passes,
                });
            }
        }
        if ledger.accepted_updates >= p.max_updates {
            break;
        }
        if updates_this_pass == 0 {
            step = step * half;
            ledger.bit_shifts += 1;
            ledger.halvings += 1;
            if ledger.halvings >= p.max_halvings {
                break;
            }
        }
    }
    ledger.final_step = step.to64();
    Ok(DcdOutcome {
        x,
        residual: r,
        ledger,
        trace,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::seeding;
    use rand::Rng;
    use rand_distr::StandardNormal;

    fn problem2(b0: f64, b1: f64) -> DcdProblem<f64> {
        DcdProblem {
            a: DMatrix::identity(2, 2),
            b: DVector::from_vec(vec![b0, b1]),
            step: 0.5,
            bound: 1.0,
            max_updates: u64::MAX,
            max_halvings: 8,
            record_trace: true,
        }
    }

    /// Random SPD system via `R^T R + 0.1 I` with standard-normal `R`.
    fn random_spd(n: usize, seed: u64) -> (DMatrix<f64>, DVector<f64>) {
        let mut rng = seeding::rng(seed, &[0xD]);
        let r = DMatrix::from_fn(n, n, |_, _| rng.sample::<f64, _>(StandardNormal));
        let a = r.transpose() * &r + DMatrix::identity(n, n) * 0.1;
        let b = DVector::from_fn(n, |_, _| rng.sample::<f64, _>(StandardNormal));
        (a, b)
    }

    #[test]
    fn zero_right_hand_side_returns_zero_untouched() {
        let p = DcdProblem {
            b: DVector::from_vec(vec![0.0, 0.0]),
            ..problem2(0.0, 0.0)
        };
        let out = dcd_bound(&p).unwrap();
        assert_eq!(out.x, DVector::from_vec(vec![0.0, 0.0]));
        assert_eq!(out.residual, DVector::from_vec(vec![0.0, 0.0]));
        assert_eq!(out.ledger.accepted_updates, 0);
        assert_eq!(out.ledger.additions, 0);
        assert_eq!(out.ledger.halvings, 8);
        assert!(out.trace.is_empty());
    }

    #[test]
    fn dyadic_two_by_two_solve_is_bit_exact() {
        // Identity system with right-hand side (0.5, 0.25): the solution is
        // dyadic and reachable exactly; every counter value below was frozen
        // from a by-hand execution of the algorithm.
        let out = dcd_bound(&problem2(0.5, 0.25)).unwrap();
        assert_eq!(out.x, DVector::from_vec(vec![0.5, 0.25]));
        assert_eq!(out.residual, DVector::from_vec(vec![0.0, 0.0]));
        assert_eq!(
            out.trace,
            vec![
                DcdStep {
                    coordinate: 0,
                    delta: 0.5,
                    pass: 1
                },
                DcdStep {
                    coordinate: 1,
                    delta: 0.25,
                    pass: 3
                },
            ]
        );
        let l = out.ledger;
        assert_eq!(l.accepted_updates, 2);
        assert_eq!(l.passes, 10);
        assert_eq!(l.halvings, 8);
        assert_eq!(l.final_step, 0.001953125);
        assert_eq!(l.additions, 6);
        assert_eq!(l.comparisons, 22);
        assert_eq!(l.bit_shifts, 32);
        assert_eq!(l.multiplications, 0);
    }

    #[test]
    fn unbounded_descent_matches_a_direct_solver() {
        for seed in 0..20 {
            let n = 4 + (seed as usize % 13);
            let (mut a, b) = random_spd(n, 900 + seed);
            // Shift the spectrum well away from zero so the dyadic-grid
            // resolution, not the conditioning, limits the final accuracy.
            a += DMatrix::identity(n, n) * n as f64;
            let p = DcdProblem {
                a: a.clone(),
                b: b.clone(),
                step: 1.0,
                bound: f64::INFINITY,
                max_updates: u64::MAX,
                max_halvings: 30,
                record_trace: false,
            };
            let out = dcd_bound(&p).unwrap();
            let direct = a
                .clone()
                .cholesky()
                .expect("spd by construction")
                .solve(&b);
            let tol = 2f64.powi(-29) * n as f64;
            for i in 0..n {
                assert!(
                    (out.x[i] - direct[i]).abs() <= tol,
                    "coordinate {i}: {} vs {}",
                    out.x[i],
                    direct[i]
                );
            }
            let recomputed = &b - &a * &out.x;
            for i in 0..n {
                assert!((out.residual[i] - recomputed[i]).abs() <= 1e-9);
            }
            assert_eq!(out.ledger.multiplications, 0);
        }
    }

    #[test]
    fn iterates_stay_on_the_dyadic_grid_and_inside_the_box() {
        for seed in 0..10 {
            let (a, b) = random_spd(8, 40 + seed);
            let bound = 0.75;
            let p = DcdProblem {
                a,
                b,
                step: 0.5,
                bound,
                max_updates: u64::MAX,
                max_halvings: 12,
                record_trace: true,
            };
            let out = dcd_bound(&p).unwrap();
            let final_step = out.ledger.final_step;
            for &v in out.x.iter() {
                assert!(v.abs() <= bound + 1e-15);
                let quotient = v / final_step;
                assert!(
                    (quotient - quotient.round()).abs() < 1e-9,
                    "{v} is not a multiple of {final_step}"
                );
            }
            // Replay the trace: the box holds at every intermediate iterate,
            // and each accepted update strictly shrinks |r_n|.
            let mut x = DVector::from_element(8, 0.0);
            for step in &out.trace {
                let before = (&p.b - &p.a * &x)[step.coordinate].abs();
                x[step.coordinate] += step.delta;
                assert!(x[step.coordinate].abs() <= bound + 1e-15);
                let after = (&p.b - &p.a * &x)[step.coordinate].abs();
                assert!(
                    after < before,
                    "|r_n| did not shrink: {before} -> {after} at {step:?}"
                );
            }
            assert_eq!(x, out.x);
        }
    }

    #[test]
    fn update_budget_returns_after_the_pass_that_meets_it() {
        let (a, b) = random_spd(6, 77);
        let p = DcdProblem {
            a,
            b,
            step: 1.0,
            bound: f64::INFINITY,
            max_updates: 3,
            max_halvings: 30,
            record_trace: false,
        };
        let out = dcd_bound(&p).unwrap();
        // The budget check sits after the pass, so a few extra accepted
        // updates from the same pass may be included — never a whole new pass.
        assert!(out.ledger.accepted_updates >= 3);
        assert!(out.ledger.accepted_updates <= 3 + 5);
    }

    #[test]
    fn ledger_totals_are_consistent_with_the_conventions() {
        let (a, b) = random_spd(5, 3);
        let p = DcdProblem {
            a,
            b,
            step: 0.5,
            bound: 2.0,
            max_updates: u64::MAX,
            max_halvings: 10,
            record_trace: false,
        };
        let out = dcd_bound(&p).unwrap();
        let l = out.ledger;
        let n = 5u64;
        // Additions: one per candidate plus n per accepted update; bound
        // comparisons equal candidates; first-test comparisons equal visits.
        let visits = l.passes * n;
        let candidates = l.comparisons - visits;
        assert_eq!(l.additions, candidates + n * l.accepted_updates);
        assert_eq!(
            l.bit_shifts,
            visits + n * l.accepted_updates + u64::from(l.halvings)
        );
        assert_eq!(l.multiplications, 0);
    }

    #[test]
    fn step_validation_rejects_bad_configurations() {
        let base = problem2(0.5, 0.25);
        let p = DcdProblem { step: 0.3, ..base.clone() };
        assert!(matches!(dcd_bound(&p), Err(Error::StepNotPowerOfTwo(_))));
        let p = DcdProblem {
            step: 2.0,
            bound: 1.0,
            ..base.clone()
        };
        assert!(matches!(dcd_bound(&p), Err(Error::StepExceedsBound { .. })));
        let p = DcdProblem {
            bound: 0.0,
            step: 0.5,
            ..base.clone()
        };
        assert!(dcd_bound(&p).is_err());
        let p = DcdProblem {
            b: DVector::from_vec(vec![1.0, 2.0, 3.0]),
            ..base
        };
        assert!(matches!(dcd_bound(&p), Err(Error::Dimension(_))));
    }

    #[test]
    fn zero_diagonal_needs_a_finite_box() {
        let a = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
        let b = DVector::from_vec(vec![0.5, 0.25]);
        let p = DcdProblem {
            a: a.clone(),
            b: b.clone(),
            step: 0.5,
            bound: f64::INFINITY,
            max_updates: u64::MAX,
            max_halvings: 8,
            record_trace: false,
        };
        assert!(matches!(dcd_bound(&p), Err(Error::BadDiagonal { .. })));

        // With a finite box the same system terminates: the dead coordinate
        // walks to the box edge and the halving budget runs out.
        let p = DcdProblem {
            a,
            b,
            step: 0.5,
            bound: 1.0,
            max_updates: u64::MAX,
            max_halvings: 8,
            record_trace: false,
        };
        let out = dcd_bound(&p).unwrap();
        assert_eq!(out.x[0], 0.5);
        assert!(out.x[1].abs() <= 1.0);
        assert_eq!(out.ledger.halvings, 8);
    }

    #[test]
    fn bound_clamps_the_solution_to_the_box() {
        // 1-D system with solution 2.0 but box 1.0: descent saturates at the
        // largest dyadic value inside the box.
        let p = DcdProblem {
            a: DMatrix::from_row_slice(1, 1, &[1.0]),
            b: DVector::from_vec(vec![2.0]),
            step: 1.0,
            bound: 1.0,
            max_updates: u64::MAX,
            max_halvings: 8,
            record_trace: false,
        };
        let out = dcd_bound(&p).unwrap();
        assert_eq!(out.x[0], 1.0);
    }

    proptest::proptest! {
        #![proptest_config(proptest::prelude::ProptestConfig::with_cases(64))]
        #[test]
        fn invariants_hold_for_random_instances(
            seed in 0u64..1000,
            n in 1usize..7,
            step_exp in -3i32..1,
            bound_scale in 1u32..5,
        ) {
            let (a, b) = random_spd(n, seed);
            let step = 2f64.powi(step_exp);
            let bound = step * 2f64.powi(bound_scale as i32);
            let p = DcdProblem {
                a: a.clone(),
                b: b.clone(),
                step,
                bound,
                max_updates: u64::MAX,
                max_halvings: 14,
                record_trace: false,
            };
            let out = dcd_bound(&p).unwrap();
            proptest::prop_assert_eq!(out.ledger.multiplications, 0);
            let recomputed = &b - &a * &out.x;
            for i in 0..n {
                proptest::prop_assert!((out.residual[i] - recomputed[i]).abs() <= 1e-9);
                proptest::prop_assert!(out.x[i].abs() <= bound + 1e-15);
                let q = out.x[i] / out.ledger.final_step;
                proptest::prop_assert!((q - q.round()).abs() < 1e-9);
            }
        }
    }
}
