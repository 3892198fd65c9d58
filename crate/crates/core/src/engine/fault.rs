//! Injected task kills.
//!
//! Whether attempt `k` of a task is killed is a pure function of the fault
//! seed, the phase, the task index and `k`, so a faulty run can be replayed
//! exactly.

use serde::{Deserialize, Serialize};

use super::{EngineError, Phase};
use crate::rng::{bits_to_unit, splitmix64_finalize, GOLDEN_GAMMA};

/// Highest kill probability accepted; anything closer to 1 makes completion
/// hopeless with a bounded retry budget.
pub const MAX_KILL_PROBABILITY: f64 = 0.9;

/// Default number of re-executions after a killed first attempt.
pub const DEFAULT_MAX_RETRIES: u32 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FaultPolicy {
    /// Probability that any single task attempt is killed before it commits.
    pub kill_probability: f64,
    /// Re-executions allowed after the first attempt.
    pub max_retries: u32,
    pub fault_seed: u64,
}

impl Default for FaultPolicy {
    fn default() -> Self {
        Self::none()
    }
}

impl FaultPolicy {
    /// No kills.
    pub fn none() -> Self {
        Self {
            kill_probability: 0.0,
            max_retries: DEFAULT_MAX_RETRIES,
            fault_seed: 0,
        }
    }

    pub fn new(kill_probability: f64, max_retries: u32, fault_seed: u64) -> Result<Self, EngineError> {
        let policy = Self {
            kill_probability,
            max_retries,
            fault_seed,
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<(), EngineError> {
        if !(0.0..=MAX_KILL_PROBABILITY).contains(&self.kill_probability) {
            return Err(EngineError::InvalidSpec(format!(
                "kill probability {} outside [0, {MAX_KILL_PROBABILITY}]",
                self.kill_probability
            )));
        }
        if self.max_retries < 1 {
            return Err(EngineError::InvalidSpec("max_retries must be at least 1".into()));
        }
        Ok(())
    }

    pub fn is_active(&self) -> bool {
        self.kill_probability > 0.0
    }

    /// Same policy with the seed mixed with `salt`, giving each job in a
    /// chain its own kill pattern.
    pub fn salted(&self, salt: u64) -> Self {
        Self {
            fault_seed: splitmix64_finalize(self.fault_seed.wrapping_add(GOLDEN_GAMMA) ^ salt),
            ..*self
        }
    }

    /// Total attempts a task may make.
    pub fn max_attempts(&self) -> u32 {
        self.max_retries + 1
    }

    /// Whether attempt `attempt` (0-based) of `task` in `phase` is killed.
    pub fn kills(&self, phase: Phase, task: usize, attempt: u32) -> bool {
        if !self.is_active() {
            return false;
        }
        let phase_tag = match phase {
            Phase::Map => 1u64,
            Phase::Reduce => 2u64,
        };
        let mut h = splitmix64_finalize(self.fault_seed.wrapping_add(GOLDEN_GAMMA.wrapping_mul(3)));
        h = splitmix64_finalize(h.wrapping_add(GOLDEN_GAMMA) ^ ((phase_tag << 32) | task as u64));
        h = splitmix64_finalize(h.wrapping_add(GOLDEN_GAMMA) ^ u64::from(attempt));
        bits_to_unit(h) < self.kill_probability
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn validation_bounds() {
        assert!(FaultPolicy::new(0.9, 1, 0).is_ok());
        assert!(FaultPolicy::new(0.91, 1, 0).is_err());
        assert!(FaultPolicy::new(-0.1, 1, 0).is_err());
        assert!(FaultPolicy::new(0.5, 0, 0).is_err());
    }

    #[test]
    fn zero_probability_never_kills() {
        let p = FaultPolicy::new(0.0, 1, 99).unwrap();
        assert!((0..1000).all(|t| !p.kills(Phase::Map, t, 0)));
    }

    #[test]
    fn kill_rate_tracks_probability() {
        let p = FaultPolicy::new(0.3, 1, 7).unwrap();
        let kills = (0..20_000).filter(|t| p.kills(Phase::Reduce, *t, 0)).count();
        let rate = kills as f64 / 20_000.0;
        assert!((rate - 0.3).abs() < 0.02, "{rate}");
    }

    #[test]
    fn salting_changes_pattern() {
        let p = FaultPolicy::new(0.5, 1, 7).unwrap();
        let pattern = |q: &FaultPolicy| (0..64).map(|t| q.kills(Phase::Map, t, 0)).collect::<Vec<_>>();
        assert_ne!(pattern(&p.salted(1)), pattern(&p.salted(2)));
        assert_eq!(pattern(&p.salted(1)), pattern(&p.salted(1)));
    }
}
