//! Simulated annealing with Gaussian proposals and geometric cooling.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{Counted, RunOutcome};

const COOLING: f64 = 0.95;
const INITIAL_TEMP: f64 = 1.0;
const INITIAL_STEP: f64 = 0.5;
const PROPOSALS_PER_DIM: usize = 10;
/// Temperature levels without a `tol` improvement before the run stalls.
const STALL_LEVELS: usize = 20;
/// Stalls are only declared once the walk has cooled below this.
const STALL_TEMP: f64 = 1e-3;

/// Maximizes `f` from `start`. The proposal scale follows `√T`, so the walk
/// tightens as it cools.
pub(crate) fn run<R: Rng>(
    f: &dyn Fn(&[f64]) -> f64,
    start: &[f64],
    budget: usize,
    tol: f64,
    rng: &mut R,
) -> RunOutcome {
    let mut counted = Counted::new(f);
    let dim = start.len();
    let per_level = PROPOSALS_PER_DIM * dim.max(1);

    let mut x = start.to_vec();
    let mut fx = counted.eval(&x);
    let (mut best_x, mut best_f) = (x.clone(), fx);
    let mut temp = INITIAL_TEMP;
    let mut idle_levels = 0;

    while counted.evals < budget {
        let level_start_best = best_f;
        let step = INITIAL_STEP * (temp / INITIAL_TEMP).sqrt();
        for _ in 0..per_level {
            if counted.evals >= budget {
                break;
            }
            let cand: Vec<f64> = x
                .iter()
                .map(|xi| xi + step * rng.sample::<f64, _>(StandardNormal))
                .collect();
            let fc = counted.eval(&cand);
            let accept = fc >= fx || rng.random::<f64>() < ((fc - fx) / temp).exp();
            if accept {
                x = cand;
                fx = fc;
                if fx > best_f {
                    best_f = fx;
                    best_x = x.clone();
                }
            }
        }
        // Each level restarts from the best point seen.
        x.clone_from(&best_x);
        fx = best_f;
        if best_f - level_start_best > tol {
            idle_levels = 0;
        } else {
            idle_levels += 1;
            if idle_levels >= STALL_LEVELS && temp < STALL_TEMP {
                return RunOutcome {
                    x: best_x,
                    f: best_f,
                    evals: counted.evals,
                    converged: true,
                };
            }
        }
        temp *= COOLING;
    }
    RunOutcome {
        x: best_x,
        f: best_f,
        evals: counted.evals,
        converged: false,
    }
}
