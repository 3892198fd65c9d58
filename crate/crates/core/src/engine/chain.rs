//! Iterated jobs with the state persisted between iterations.
//!
//! Iteration `k` reads `iter_<k>.snap` from the run directory, runs one round
//! and writes `iter_<k+1>.snap`.

use std::io;
use std::path::{Path, PathBuf};

use thiserror::Error;

use super::BoxError;

/// State that can be persisted between chained jobs.
pub trait Checkpoint: Sized {
    /// Number of completed iterations this state represents.
    fn iteration(&self) -> u64;
    fn save(&self, path: &Path) -> io::Result<()>;
    fn load(path: &Path) -> Result<Self, BoxError>;
}

/// `<dir>/iter_<k>.snap`
pub fn checkpoint_path(dir: &Path, iter: u64) -> PathBuf {
    dir.join(format!("iter_{iter}.snap"))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Persistence {
    /// Write every iteration's state and read it back for the next one.
    #[default]
    Files,
    /// Hand state from one iteration to the next in memory; only the final
    /// state is written.
    InMemory,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Retention {
    /// Keep every intermediate checkpoint.
    #[default]
    All,
    /// Keep only the starting checkpoint and the newest one.
    Latest,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct ChainOptions {
    pub persistence: Persistence,
    pub retention: Retention,
}

#[derive(Debug, Error)]
#[error("iteration {iteration}: {source}")]
pub struct ChainError {
    /// Iteration being computed (the round that would produce `iteration + 1`).
    pub iteration: u64,
    #[source]
    pub source: BoxError,
}

impl ChainError {
    fn at(iteration: u64, source: impl Into<BoxError>) -> Self {
        Self {
            iteration,
            source: source.into(),
        }
    }
}

#[derive(Debug)]
pub struct ChainOutcome<C> {
    pub final_path: PathBuf,
    pub final_state: C,
}

/// Run `num_iterations` rounds starting from `initial`.
///
/// `initial` is written to the run directory unless a checkpoint for its
/// iteration already exists there. `round` maps the state after iteration
/// `k` to the state after `k + 1`.
pub fn run_chained<C, F>(
    dir: &Path,
    initial: C,
    num_iterations: u64,
    options: ChainOptions,
    mut round: F,
) -> Result<ChainOutcome<C>, ChainError>
where
    C: Checkpoint,
    F: FnMut(C) -> Result<C, BoxError>,
{
    let start = initial.iteration();
    let start_path = checkpoint_path(dir, start);
    if !start_path.exists() {
        initial
            .save(&start_path)
            .map_err(|e| ChainError::at(start, e))?;
    }
    let mut state = initial;
    let mut path = start_path;
    for k in start..start + num_iterations {
        if options.persistence == Persistence::Files {
            state = C::load(&path).map_err(|e| ChainError::at(k, e))?;
        }
        let next = round(state).map_err(|e| ChainError::at(k, e))?;
        if next.iteration() != k + 1 {
            return Err(ChainError::at(
                k,
                format!("round produced iteration {}, expected {}", next.iteration(), k + 1),
            ));
        }
        let next_path = checkpoint_path(dir, k + 1);
        let last = k + 1 == start + num_iterations;
        if options.persistence == Persistence::Files || last {
            next.save(&next_path).map_err(|e| ChainError::at(k, e))?;
        }
        if options.persistence == Persistence::Files
            && options.retention == Retention::Latest
            && k != start
        {
            std::fs::remove_file(&path).map_err(|e| ChainError::at(k, e))?;
        }
        state = next;
        path = next_path;
    }
    Ok(ChainOutcome {
        final_path: path,
        final_state: state,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Counter persisted as decimal text.
    #[derive(Debug, PartialEq)]
    struct Counter {
        iter: u64,
        total: u64,
    }

    impl Checkpoint for Counter {
        fn iteration(&self) -> u64 {
            self.iter
        }
        fn save(&self, path: &Path) -> io::Result<()> {
            std::fs::write(path, format!("{} {}", self.iter, self.total))
        }
        fn load(path: &Path) -> Result<Self, BoxError> {
            let text = std::fs::read_to_string(path)?;
            let mut it = text.split(' ');
            Ok(Counter {
                iter: it.next().ok_or("missing iter")?.parse()?,
                total: it.next().ok_or("missing total")?.parse()?,
            })
        }
    }

    fn bump(c: Counter) -> Result<Counter, BoxError> {
        Ok(Counter {
            iter: c.iter + 1,
            total: c.total * 3 + 1,
        })
    }

    #[test]
    fn zero_iterations_is_identity() {
        let dir = tempfile::tempdir().unwrap();
        let out = run_chained(dir.path(), Counter { iter: 0, total: 5 }, 0, ChainOptions::default(), bump).unwrap();
        assert_eq!(out.final_state, Counter { iter: 0, total: 5 });
        assert_eq!(out.final_path, checkpoint_path(dir.path(), 0));
        assert_eq!(Counter::load(&out.final_path).unwrap(), out.final_state);
    }

    #[test]
    fn keeps_every_checkpoint() {
        let dir = tempfile::tempdir().unwrap();
        run_chained(dir.path(), Counter { iter: 0, total: 1 }, 3, ChainOptions::default(), bump).unwrap();
        for k in 0..=3 {
            assert!(checkpoint_path(dir.path(), k).exists());
        }
        assert_eq!(
            Counter::load(&checkpoint_path(dir.path(), 2)).unwrap(),
            Counter { iter: 2, total: 13 }
        );
    }

    #[test]
    fn latest_retention_prunes() {
        let dir = tempfile::tempdir().unwrap();
        let opts = ChainOptions {
            retention: Retention::Latest,
            ..ChainOptions::default()
        };
        run_chained(dir.path(), Counter { iter: 0, total: 1 }, 4, opts, bump).unwrap();
        let present: Vec<bool> = (0..=4).map(|k| checkpoint_path(dir.path(), k).exists()).collect();
        assert_eq!(present, vec![true, false, false, false, true]);
    }

    #[test]
    fn in_memory_writes_only_final() {
        let dir = tempfile::tempdir().unwrap();
        let opts = ChainOptions {
            persistence: Persistence::InMemory,
            ..ChainOptions::default()
        };
        let out = run_chained(dir.path(), Counter { iter: 0, total: 1 }, 3, opts, bump).unwrap();
        assert!(!checkpoint_path(dir.path(), 1).exists());
        assert_eq!(Counter::load(&out.final_path).unwrap(), Counter { iter: 3, total: 40 });
    }

    #[test]
    fn split_chain_matches_direct() {
        let a = tempfile::tempdir().unwrap();
        let direct = run_chained(a.path(), Counter { iter: 0, total: 2 }, 5, ChainOptions::default(), bump).unwrap();
        let b = tempfile::tempdir().unwrap();
        let first = run_chained(b.path(), Counter { iter: 0, total: 2 }, 2, ChainOptions::default(), bump).unwrap();
        let resumed = Counter::load(&first.final_path).unwrap();
        let second = run_chained(b.path(), resumed, 3, ChainOptions::default(), bump).unwrap();
        assert_eq!(direct.final_state, second.final_state);
        assert_eq!(std::fs::read(direct.final_path).unwrap(), std::fs::read(second.final_path).unwrap());
    }

    #[test]
    fn error_carries_iteration() {
        let dir = tempfile::tempdir().unwrap();
        let err = run_chained(dir.path(), Counter { iter: 0, total: 1 }, 5, ChainOptions::default(), |c| {
            if c.iter == 2 {
                Err("worker lost".into())
            } else {
                bump(c)
            }
        })
        .unwrap_err();
        assert_eq!(err.iteration, 2);
        assert!(err.to_string().contains("worker lost"));
    }

    #[test]
    fn wrong_iteration_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let err = run_chained(dir.path(), Counter { iter: 0, total: 1 }, 1, ChainOptions::default(), |c| {
            Ok(Counter { iter: c.iter + 2, total: 0 })
        })
        .unwrap_err();
        assert_eq!(err.iteration, 0);
    }
}
