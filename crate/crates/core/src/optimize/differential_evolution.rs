//! DE/rand/1/bin.

use rand::Rng;

use super::{Counted, RunOutcome};

const POP_PER_DIM: usize = 10;
const MIN_POP: usize = 5;
const WEIGHT: f64 = 0.7;
const CROSSOVER: f64 = 0.9;
const INIT_HALF_WIDTH: f64 = 1.5;

/// Evolves a population of `10·dim` members; `seeds` take the first slots.
/// Converged once the population's value spread is within `tol`.
pub(crate) fn run<R: Rng>(
    f: &dyn Fn(&[f64]) -> f64,
    dim: usize,
    seeds: &[Vec<f64>],
    budget: usize,
    tol: f64,
    rng: &mut R,
) -> RunOutcome {
    let mut counted = Counted::new(f);
    let np = (POP_PER_DIM * dim).max(MIN_POP);

    let mut pop: Vec<Vec<f64>> = seeds.iter().take(np).cloned().collect();
    while pop.len() < np {
        pop.push(
            (0..dim)
                .map(|_| rng.random_range(-INIT_HALF_WIDTH..INIT_HALF_WIDTH))
                .collect(),
        );
    }
    let mut vals = Vec::with_capacity(np);
    for x in &pop {
        if counted.evals >= budget {
            break;
        }
        vals.push(counted.eval(x));
    }
    pop.truncate(vals.len());
    let np = pop.len();

    let best_of = |vals: &[f64]| {
        vals.iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
            .unwrap_or(0)
    };
    let finish = |pop: &[Vec<f64>], vals: &[f64], evals, converged| {
        let b = best_of(vals);
        RunOutcome {
            x: pop[b].clone(),
            f: vals[b],
            evals,
            converged,
        }
    };

    loop {
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
        if hi - lo <= tol || hi == lo {
            return finish(&pop, &vals, counted.evals, true);
        }
        if np < 4 {
            // Not enough members for rand/1 mutation.
            return finish(&pop, &vals, counted.evals, false);
        }
        for i in 0..np {
            if counted.evals >= budget {
                return finish(&pop, &vals, counted.evals, false);
            }
            let (r1, r2, r3) = distinct_three(rng, np, i);
            let jrand = rng.random_range(0..dim);
            let trial: Vec<f64> = (0..dim)
                .map(|j| {
                    if j == jrand || rng.random::<f64>() < CROSSOVER {
                        pop[r1][j] + WEIGHT * (pop[r2][j] - pop[r3][j])
                    } else {
                        pop[i][j]
                    }
                })
                .collect();
            let ft = counted.eval(&trial);
            if ft >= vals[i] {
                pop[i] = trial;
                vals[i] = ft;
            }
        }
    }
}

fn distinct_three<R: Rng>(rng: &mut R, n: usize, exclude: usize) -> (usize, usize, usize) {
    let mut pick = |taken: &[usize]| loop {
        let k = rng.random_range(0..n);
        if !taken.contains(&k) {
            return k;
        }
    };
    let r1 = pick(&[exclude]);
    let r2 = pick(&[exclude, r1]);
    let r3 = pick(&[exclude, r1, r2]);
    (r1, r2, r3)
}
