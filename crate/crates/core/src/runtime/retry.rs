//! Exponential backoff with jitter.
//!
//! The delay before attempt `n + 1` is drawn uniformly from
//! `[floor, floor + span]` where, with `step = base * multiplier^(n-1)`,
//! `floor = step * (1 - jitter)` and `span = step * jitter`. A jitter of 1
//! is "full jitter" (floor 0); a jitter of 0 is a plain geometric schedule.

use std::fmt;
use std::time::Duration;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::clock::Clock;

/// Failures that know whether retrying them can help.
pub trait Transient {
    fn is_transient(&self) -> bool;
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RetryPolicy {
    /// Total invocations, including the first.
    pub max_attempts: u32,
    /// Seconds.
    pub base_delay: f64,
    pub multiplier: f64,
    /// Fraction of each step that is randomized, in `[0, 1]`.
    pub jitter: f64,
}

impl Default for RetryPolicy {
    fn default() -> Self {
        Self {
            max_attempts: 3,
            base_delay: 1.0,
            multiplier: 2.0,
            jitter: 1.0,
        }
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum PolicyError {
    #[error("max_attempts must be at least 1")]
    NoAttempts,
    #[error("base_delay must be positive and finite, got {0}")]
    BaseDelay(f64),
    #[error("multiplier must be >= 1, got {0}")]
    Multiplier(f64),
    #[error("jitter must lie in [0, 1], got {0}")]
    Jitter(f64),
}

impl RetryPolicy {
    pub fn new(
        max_attempts: u32,
        base_delay: f64,
        multiplier: f64,
        jitter: f64,
    ) -> Result<Self, PolicyError> {
        let policy = Self {
            max_attempts,
            base_delay,
            multiplier,
            jitter,
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<(), PolicyError> {
        if self.max_attempts < 1 {
            return Err(PolicyError::NoAttempts);
        }
        if !(self.base_delay.is_finite() && self.base_delay > 0.0) {
            return Err(PolicyError::BaseDelay(self.base_delay));
        }
        if !(self.multiplier.is_finite() && self.multiplier >= 1.0) {
            return Err(PolicyError::Multiplier(self.multiplier));
        }
        if !(0.0..=1.0).contains(&self.jitter) {
            return Err(PolicyError::Jitter(self.jitter));
        }
        Ok(())
    }

    /// `(floor, span)` of the delay window after the given 1-based attempt.
    pub fn window(&self, attempt: u32) -> (f64, f64) {
        let exponent = attempt.saturating_sub(1) as i32;
        let step = self.base_delay * self.multiplier.powi(exponent);
        (step * (1.0 - self.jitter), step * self.jitter)
    }
}

/// Seconds to wait after the 1-based `attempt` failed. Pure given `seed`.
pub fn backoff_delay(attempt: u32, policy: &RetryPolicy, seed: u64) -> f64 {
    let (floor, span) = policy.window(attempt);
    if span == 0.0 {
        return floor;
    }
    let mut rng =
        ChaCha8Rng::seed_from_u64(seed ^ u64::from(attempt).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    let unit: f64 = rng.random();
    floor + span * unit
}

#[derive(Debug, Error)]
pub enum RetryError<E: fmt::Display> {
    #[error("retries exhausted after {attempts} attempts: {last}")]
    Exhausted { attempts: u32, last: E },
    #[error("{0}")]
    Permanent(E),
}

impl<E: fmt::Display> RetryError<E> {
    pub fn into_inner(self) -> E {
        match self {
            RetryError::Exhausted { last, .. } => last,
            RetryError::Permanent(err) => err,
        }
    }
}

/// Information handed to the retry observer before each backoff sleep.
#[derive(Debug)]
pub struct RetryNotice<'a, E> {
    /// The attempt that just failed (1-based).
    pub attempt: u32,
    pub error: &'a E,
    pub delay: Duration,
}

/// Run `action` until it succeeds, fails permanently, or the attempt budget
/// is spent. `action` receives the 1-based attempt number.
pub fn with_retry<T, E, A, O>(
    policy: &RetryPolicy,
    seed: u64,
    clock: &dyn Clock,
    mut action: A,
    mut on_retry: O,
) -> Result<T, RetryError<E>>
where
    E: Transient + fmt::Display,
    A: FnMut(u32) -> Result<T, E>,
    O: FnMut(&RetryNotice<'_, E>),
{
    let max_attempts = policy.max_attempts.max(1);
    let mut attempt = 1;
    loop {
        match action(attempt) {
            Ok(value) => return Ok(value),
            Err(err) if !err.is_transient() => return Err(RetryError::Permanent(err)),
            Err(err) if attempt >= max_attempts => {
                return Err(RetryError::Exhausted {
                    attempts: attempt,
                    last: err,
                })
            }
            Err(err) => {
                let delay = Duration::from_secs_f64(backoff_delay(attempt, policy, seed));
                on_retry(&RetryNotice {
                    attempt,
                    error: &err,
                    delay,
                });
                clock.sleep(delay);
                attempt += 1;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::runtime::clock::VirtualClock;

    #[derive(Debug)]
    struct Flaky(bool);

    impl fmt::Display for Flaky {
        fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            write!(f, "flaky(transient={})", self.0)
        }
    }

    impl Transient for Flaky {
        fn is_transient(&self) -> bool {
            self.0
        }
    }

    fn fixed() -> RetryPolicy {
        RetryPolicy::new(3, 1.0, 2.0, 0.0).unwrap()
    }

    #[test]
    fn zero_jitter_schedule() {
        let p = fixed();
        assert_eq!(backoff_delay(1, &p, 7), 1.0);
        assert_eq!(backoff_delay(2, &p, 7), 2.0);
        assert_eq!(backoff_delay(3, &p, 7), 4.0);
    }

    #[test]
    fn full_jitter_is_bounded_and_seeded() {
        let p = RetryPolicy::default();
        let a = backoff_delay(2, &p, 42);
        assert!((0.0..=2.0).contains(&a), "{a}");
        assert_eq!(a, backoff_delay(2, &p, 42));
    }

    #[test]
    fn first_try_success_never_sleeps() {
        let clock = VirtualClock::new();
        let mut calls = 0;
        let out: Result<u8, RetryError<Flaky>> = with_retry(
            &fixed(),
            0,
            &clock,
            |_| {
                calls += 1;
                Ok(5)
            },
            |_| {},
        );
        assert_eq!(out.unwrap(), 5);
        assert_eq!(calls, 1);
        assert!(clock.sleeps().is_empty());
    }

    #[test]
    fn two_transient_failures_then_success() {
        let clock = VirtualClock::new();
        let mut calls = 0;
        let out = with_retry(
            &fixed(),
            0,
            &clock,
            |attempt| {
                calls += 1;
                if attempt < 3 {
                    Err(Flaky(true))
                } else {
                    Ok(attempt)
                }
            },
            |_| {},
        );
        assert_eq!(out.unwrap(), 3);
        assert_eq!(calls, 3);
        assert_eq!(
            clock.sleeps(),
            vec![Duration::from_secs(1), Duration::from_secs(2)]
        );
    }

    #[test]
    fn exhaustion_carries_last_error() {
        let clock = VirtualClock::new();
        let mut calls = 0;
        let out: Result<(), _> = with_retry(
            &fixed(),
            0,
            &clock,
            |_| {
                calls += 1;
                Err(Flaky(true))
            },
            |_| {},
        );
        assert!(matches!(
            out,
            Err(RetryError::Exhausted { attempts: 3, .. })
        ));
        assert_eq!(calls, 3);
    }

    #[test]
    fn permanent_is_not_retried() {
        let clock = VirtualClock::new();
        let mut calls = 0;
        let out: Result<(), _> = with_retry(
            &fixed(),
            0,
            &clock,
            |_| {
                calls += 1;
                Err(Flaky(false))
            },
            |_| {},
        );
        assert!(matches!(out, Err(RetryError::Permanent(_))));
        assert_eq!(calls, 1);
        assert!(clock.sleeps().is_empty());
    }

    #[test]
    fn invalid_policies_rejected() {
        assert_eq!(
            RetryPolicy::new(0, 1.0, 2.0, 1.0),
            Err(PolicyError::NoAttempts)
        );
        assert!(RetryPolicy::new(3, 0.0, 2.0, 1.0).is_err());
        assert!(RetryPolicy::new(3, 1.0, 0.5, 1.0).is_err());
        assert!(RetryPolicy::new(3, 1.0, 2.0, 1.5).is_err());
    }

    proptest::proptest! {
        #[test]
        fn delay_within_window(
            attempt in 1u32..8,
            base in 0.01f64..5.0,
            mult in 1.0f64..4.0,
            jitter in 0.0f64..=1.0,
            seed in proptest::prelude::any::<u64>(),
        ) {
            let p = RetryPolicy::new(9, base, mult, jitter).unwrap();
            let (floor, span) = p.window(attempt);
            let d = backoff_delay(attempt, &p, seed);
            proptest::prop_assert!(d >= floor - 1e-12 && d <= floor + span + 1e-12);
        }

        #[test]
        fn zero_jitter_is_geometric(attempt in 1u32..10, base in 0.01f64..5.0, mult in 1.0f64..4.0) {
            let p = RetryPolicy::new(12, base, mult, 0.0).unwrap();
            let next = backoff_delay(attempt + 1, &p, 0);
            let here = backoff_delay(attempt, &p, 0);
            proptest::prop_assert!((next - mult * here).abs() <= 1e-9 * next.max(1.0));
        }
    }
}
