//! Mini-batch scheduling shared by every training loop.
//!
//! An epoch is one pass over the larger of the labeled and unlabeled sets;
//! the smaller set is cycled, reshuffled each time it is exhausted.

use rand::seq::SliceRandom;

use crate::rng::Rng;
use crate::{Error, Result};

/// Endless stream of shuffled mini-batches over `0..n`.
pub(crate) struct Cycler {
    perm: Vec<usize>,
    pos: usize,
    batch: usize,
}

impl Cycler {
    pub fn new(n: usize, batch: usize) -> Self {
        Self {
            perm: (0..n).collect(),
            pos: 0,
            batch,
        }
    }

    pub fn next_batch(&mut self, rng: &mut Rng) -> Vec<usize> {
        if self.perm.is_empty() {
            return Vec::new();
        }
        if self.pos == 0 {
            self.perm.shuffle(rng);
        }
        let end = (self.pos + self.batch).min(self.perm.len());
        let out = self.perm[self.pos..end].to_vec();
        self.pos = if end == self.perm.len() { 0 } else { end };
        out
    }
}

pub(crate) fn steps_per_epoch(n_labeled: usize, n_unlabeled: usize, batch: usize) -> usize {
    n_labeled.max(n_unlabeled).div_ceil(batch)
}

/// Runs `epochs` epochs, calling `step(labeled_idx, unlabeled_idx, rng)` for
/// each optimizer step and returning the mean step loss of every epoch.
///
/// With `alternating` set, each joint step is split into a labeled-only step
/// followed by an unlabeled-only step.
pub(crate) fn run_epochs<F>(
    epochs: usize,
    n_labeled: usize,
    n_unlabeled: usize,
    batch: usize,
    alternating: bool,
    rng: &mut Rng,
    mut step: F,
) -> Result<Vec<f64>>
where
    F: FnMut(&[usize], &[usize], &mut Rng) -> Result<f64>,
{
    if batch == 0 {
        return Err(Error::contract("batch size must be positive"));
    }
    let mut lab = Cycler::new(n_labeled, batch);
    let mut unl = Cycler::new(n_unlabeled, batch);
    let steps = steps_per_epoch(n_labeled, n_unlabeled, batch);
    let mut trace = Vec::with_capacity(epochs);
    for epoch in 0..epochs {
        let mut total = 0.0;
        let mut count = 0usize;
        for s in 0..steps {
            let li = lab.next_batch(rng);
            let ui = unl.next_batch(rng);
            let mut run = |l: &[usize], u: &[usize], rng: &mut Rng| -> Result<()> {
                let loss = step(l, u, rng).map_err(|e| divergence(epoch, s, e))?;
                if !loss.is_finite() {
                    return Err(Error::Divergence {
                        epoch,
                        batch: s,
                        detail: format!("loss = {loss}"),
                    });
                }
                total += loss;
                count += 1;
                Ok(())
            };
            if alternating {
                if !li.is_empty() {
                    run(&li, &[], rng)?;
                }
                if !ui.is_empty() {
                    run(&[], &ui, rng)?;
                }
            } else {
                run(&li, &ui, rng)?;
            }
        }
        trace.push(if count == 0 {
            0.0
        } else {
            total / count as f64
        });
    }
    Ok(trace)
}

fn divergence(epoch: usize, batch: usize, e: Error) -> Error {
    match e {
        Error::NonFinite { term } => Error::Divergence {
            epoch,
            batch,
            detail: format!("non-finite {term}"),
        },
        other => other,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::seeded;

    #[test]
    fn cycler_covers_every_index_once_per_pass() {
        let mut rng = seeded(1);
        let mut c = Cycler::new(10, 4);
        let mut seen: Vec<usize> = (0..3).flat_map(|_| c.next_batch(&mut rng)).collect();
        seen.sort_unstable();
        assert_eq!(seen, (0..10).collect::<Vec<_>>());
    }

    #[test]
    fn epoch_is_one_pass_over_larger_set() {
        let mut rng = seeded(2);
        let mut calls = Vec::new();
        run_epochs(1, 3, 10, 4, false, &mut rng, |l, u, _| {
            calls.push((l.len(), u.len()));
            Ok(0.0)
        })
        .unwrap();
        assert_eq!(calls, vec![(3, 4), (3, 4), (3, 2)]);
    }

    #[test]
    fn alternating_splits_steps() {
        let mut rng = seeded(3);
        let mut calls = Vec::new();
        run_epochs(1, 4, 4, 4, true, &mut rng, |l, u, _| {
            calls.push((l.len(), u.len()));
            Ok(1.0)
        })
        .unwrap();
        assert_eq!(calls, vec![(4, 0), (0, 4)]);
    }

    #[test]
    fn non_finite_loss_reports_position() {
        let mut rng = seeded(4);
        let err = run_epochs(2, 8, 0, 4, false, &mut rng, |_, _, _| Ok(f64::NAN)).unwrap_err();
        assert!(matches!(
            err,
            Error::Divergence {
                epoch: 0,
                batch: 0,
                ..
            }
        ));
    }
}
