//! Nelder–Mead simplex search with restart-on-stall.

use rand::Rng;

use super::{Counted, RunOutcome};

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;
const INITIAL_STEP: f64 = 0.5;

/// Maximizes `f` from `start`.
///
/// When the simplex stalls (value spread ≤ `tol`) a fresh simplex is built
/// around the best vertex with randomly signed steps; the run ends once such
/// a restart fails to improve on the best value by more than `tol`, or the
/// budget runs out.
pub(crate) fn run<R: Rng>(
    f: &dyn Fn(&[f64]) -> f64,
    start: &[f64],
    budget: usize,
    tol: f64,
    rng: &mut R,
) -> RunOutcome {
    let mut counted = Counted::new(f);
    let mut best_x = start.to_vec();
    let mut best_f = f64::NEG_INFINITY;
    let mut first = true;

    loop {
        let signs: Vec<f64> = if first {
            vec![1.0; start.len()]
        } else {
            (0..start.len()).map(|_| if rng.random::<bool>() { 1.0 } else { -1.0 }).collect()
        };
        let prev_best = best_f;
        let out = descend(&mut counted, &best_x, &signs, budget, tol);
        if out.f > best_f {
            best_f = out.f;
            best_x = out.x;
        }
        if !out.stalled {
            return RunOutcome {
                x: best_x,
                f: best_f,
                evals: counted.evals,
                converged: false,
            };
        }
        if !first && best_f - prev_best <= tol {
            return RunOutcome {
                x: best_x,
                f: best_f,
                evals: counted.evals,
                converged: true,
            };
        }
        first = false;
    }
}

struct Descent {
    x: Vec<f64>,
    f: f64,
    /// False when the budget ran out first.
    stalled: bool,
}

fn descend(counted: &mut Counted<'_>, x0: &[f64], signs: &[f64], budget: usize, tol: f64) -> Descent {
    let n = x0.len();
    // Vertices kept as (value, point), sorted best (largest) first.
    let mut simplex: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n + 1);
    let push = |counted: &mut Counted<'_>, x: Vec<f64>, s: &mut Vec<(f64, Vec<f64>)>| {
        let v = counted.eval(&x);
        s.push((v, x));
    };
    push(counted, x0.to_vec(), &mut simplex);
    for i in 0..n {
        if counted.evals >= budget {
            break;
        }
        let mut x = x0.to_vec();
        x[i] += signs[i] * INITIAL_STEP * x0[i].abs().max(1.0);
        push(counted, x, &mut simplex);
    }

    let sort = |s: &mut Vec<(f64, Vec<f64>)>| s.sort_by(|a, b| b.0.total_cmp(&a.0));
    sort(&mut simplex);

    let point = |c: &[f64], towards: &[f64], coef: f64| -> Vec<f64> {
        c.iter().zip(towards).map(|(ci, ti)| ci + coef * (ti - ci)).collect()
    };

    loop {
        if simplex.len() < n + 1 || counted.evals >= budget {
            let (f, x) = simplex.swap_remove(0);
            return Descent { x, f, stalled: false };
        }
        let spread = simplex[0].0 - simplex[n].0;
        if spread <= tol || !spread.is_finite() && simplex[0].0 == simplex[n].0 {
            let (f, x) = simplex.swap_remove(0);
            return Descent { x, f, stalled: true };
        }

        let mut centroid = vec![0.0; n];
        for (_, x) in &simplex[..n] {
            for (c, xi) in centroid.iter_mut().zip(x) {
                *c += xi / n as f64;
            }
        }
        let worst = simplex[n].1.clone();
        let fw = simplex[n].0;
        let fs = simplex[n - 1].0;
        let fb = simplex[0].0;

        let xr = point(&centroid, &worst, -REFLECT);
        let fr = counted.eval(&xr);
        if fr > fb {
            let xe = point(&centroid, &xr, EXPAND);
            let fe = counted.eval(&xe);
            simplex[n] = if fe > fr { (fe, xe) } else { (fr, xr) };
        } else if fr > fs {
            simplex[n] = (fr, xr);
        } else {
            let (xc, fc) = if fr > fw {
                let xc = point(&centroid, &xr, CONTRACT);
                let fc = counted.eval(&xc);
                (xc, fc)
            } else {
                let xc = point(&centroid, &worst, CONTRACT);
                let fc = counted.eval(&xc);
                (xc, fc)
            };
            if fc > fr.max(fw) {
                simplex[n] = (fc, xc);
            } else {
                let best = simplex[0].1.clone();
                for v in simplex.iter_mut().skip(1) {
                    let x = point(&best, &v.1, SHRINK);
                    *v = (counted.eval(&x), x);
                }
            }
        }
        sort(&mut simplex);
    }
}
