use std::collections::VecDeque;

use super::likelihood::Objective;
use super::linalg::solve_spd;
use super::{FitDiagnostics, FitOptions, Solver, StopReason};
use crate::error::{Error, Result};

/// Coefficient norm beyond which a fit is declared divergent.
const DIVERGENCE_NORM: f64 = 1e6;
const MAX_HALVINGS: usize = 30;
const ARMIJO: f64 = 1e-4;

pub(crate) struct Solution {
    pub params: Vec<f64>,
    pub diagnostics: FitDiagnostics,
}

/// Adds the ridge penalty on top of an objective.
struct Penalized<'a, O> {
    inner: &'a O,
    ridge: f64,
}

impl<O: Objective> Penalized<'_, O> {
    fn value_grad(&self, x: &[f64], g: &mut [f64]) -> f64 {
        let f = self.inner.value_grad(x, g);
        if self.ridge > 0.0 {
            for (gi, xi) in g.iter_mut().zip(x) {
                *gi -= self.ridge * xi;
            }
        }
        f - 0.5 * self.ridge * dot(x, x)
    }

    fn newton_direction(&self, x: &[f64], g: &[f64]) -> Option<Vec<f64>> {
        let mut info = self.inner.information(x);
        if self.ridge > 0.0 {
            for d in info.diag_mut() {
                *d += self.ridge;
            }
        }
        solve_spd(&info, g)
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn sup_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn relative_change(old: f64, new: f64) -> f64 {
    (new - old).abs() / old.abs().max(f64::MIN_POSITIVE)
}

/// A second-order step that stays large while the gradient has vanished means
/// the curvature collapsed along an ascent direction: the likelihood keeps
/// increasing toward infinity, the signature of separation.
fn saturated(x: &[f64], step: &[f64]) -> bool {
    norm2(step) > 1e-3 * (1.0 + norm2(x))
}

fn diverged(iterations: usize, x: &[f64]) -> Option<Error> {
    let norm = norm2(x);
    if !norm.is_finite() || x.iter().any(|v| !v.is_finite()) || norm > DIVERGENCE_NORM {
        return Some(Error::SeparationDiverged { iterations, norm });
    }
    None
}

struct Finish<'a, O> {
    obj: &'a O,
    solver: Solver,
}

impl<O: Objective> Finish<'_, O> {
    fn done(
        &self,
        params: Vec<f64>,
        iterations: usize,
        grad: &[f64],
        reason: StopReason,
        trace: Vec<f64>,
    ) -> Solution {
        let final_loglik = self.obj.value(&params);
        Solution {
            diagnostics: FitDiagnostics {
                iterations,
                final_grad_norm: sup_norm(grad),
                final_loglik,
                converged: true,
                stop_reason: reason,
                solver: self.solver,
                loglik_trace: trace,
            },
            params,
        }
    }
}

/// Damped Newton ascent from the origin with step halving.
pub(crate) fn newton<O: Objective>(obj: &O, opts: &FitOptions) -> Result<Solution> {
    let pen = Penalized {
        inner: obj,
        ridge: opts.ridge,
    };
    let finish = Finish {
        obj,
        solver: Solver::ExactNewton,
    };
    let dim = obj.dim();
    let mut x = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    let mut f = pen.value_grad(&x, &mut g);
    let mut trace = vec![f];
    let mut iterations = 0;
    let mut last_rel = f64::INFINITY;
    let mut trial = vec![0.0; dim];
    let mut g_trial = vec![0.0; dim];

    loop {
        let Some(dir) = pen.newton_direction(&x, &g) else {
            return Err(diverged(iterations, &x).unwrap_or(Error::SeparationDiverged {
                iterations,
                norm: norm2(&x),
            }));
        };
        let stop = if sup_norm(&g) <= opts.grad_tol {
            Some(StopReason::Gradient)
        } else if last_rel <= opts.rel_tol {
            Some(StopReason::RelativeChange)
        } else {
            None
        };
        if let Some(reason) = stop {
            if saturated(&x, &dir) {
                return Err(Error::SeparationDiverged {
                    iterations,
                    norm: norm2(&x),
                });
            }
            return Ok(finish.done(x, iterations, &g, reason, trace));
        }
        if iterations >= opts.max_iter {
            return Err(Error::NotConverged {
                iterations,
                grad_norm: sup_norm(&g),
            });
        }

        let mut step = 1.0;
        let mut accepted = None;
        for _ in 0..=MAX_HALVINGS {
            for ((t, xi), di) in trial.iter_mut().zip(&x).zip(&dir) {
                *t = xi + step * di;
            }
            if let Some(err) = diverged(iterations + 1, &trial) {
                return Err(err);
            }
            let f_trial = pen.value_grad(&trial, &mut g_trial);
            if f_trial.is_finite() && f_trial >= f {
                accepted = Some(f_trial);
                break;
            }
            step *= 0.5;
        }
        let Some(f_new) = accepted else {
            return Ok(finish.done(x, iterations, &g, StopReason::Stalled, trace));
        };
        std::mem::swap(&mut x, &mut trial);
        std::mem::swap(&mut g, &mut g_trial);
        last_rel = relative_change(f, f_new);
        f = f_new;
        trace.push(f);
        iterations += 1;
    }
}

/// Limited-memory BFGS ascent from the origin with backtracking (halving)
/// line search under an Armijo condition.
pub(crate) fn lbfgs<O: Objective>(obj: &O, opts: &FitOptions) -> Result<Solution> {
    let pen = Penalized {
        inner: obj,
        ridge: opts.ridge,
    };
    let finish = Finish {
        obj,
        solver: Solver::QuasiNewton,
    };
    let dim = obj.dim();
    let mut x = vec![0.0; dim];
    let mut g = vec![0.0; dim];
    let mut f = pen.value_grad(&x, &mut g);
    let mut trace = vec![f];
    let mut iterations = 0;
    let mut last_rel = f64::INFINITY;
    // (s, y, 1 / y's) with y the change in the negated gradient.
    let mut memory: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::new();
    let mut trial = vec![0.0; dim];
    let mut g_trial = vec![0.0; dim];

    loop {
        let stop = if sup_norm(&g) <= opts.grad_tol {
            Some(StopReason::Gradient)
        } else if last_rel <= opts.rel_tol {
            Some(StopReason::RelativeChange)
        } else {
            None
        };
        if let Some(reason) = stop {
            if !memory.is_empty() && saturated(&x, &two_loop(obj, &memory, &g)) {
                return Err(Error::SeparationDiverged {
                    iterations,
                    norm: norm2(&x),
                });
            }
            return Ok(finish.done(x, iterations, &g, reason, trace));
        }
        if iterations >= opts.max_iter {
            return Err(Error::NotConverged {
                iterations,
                grad_norm: sup_norm(&g),
            });
        }

        let mut accepted = None;
        // Second pass retries along the plain gradient after dropping memory.
        for _restart in 0..2 {
            let dir = if memory.is_empty() {
                let mut d = g.clone();
                if !obj.precondition(&mut d) {
                    let scale = 1.0 / norm2(&g).max(f64::MIN_POSITIVE);
                    d.iter_mut().for_each(|v| *v *= scale);
                }
                d
            } else {
                two_loop(obj, &memory, &g)
            };
            let slope = dot(&g, &dir);
            if !(slope > 0.0) {
                memory.clear();
                continue;
            }
            let mut step = 1.0;
            for _ in 0..=MAX_HALVINGS {
                for ((t, xi), di) in trial.iter_mut().zip(&x).zip(&dir) {
                    *t = xi + step * di;
                }
                if let Some(err) = diverged(iterations + 1, &trial) {
                    return Err(err);
                }
                let f_trial = pen.value_grad(&trial, &mut g_trial);
                if f_trial.is_finite() && f_trial >= f + ARMIJO * step * slope {
                    accepted = Some(f_trial);
                    break;
                }
                step *= 0.5;
            }
            if accepted.is_some() || memory.is_empty() {
                break;
            }
            memory.clear();
        }
        let Some(f_new) = accepted else {
            return Ok(finish.done(x, iterations, &g, StopReason::Stalled, trace));
        };

        let s: Vec<f64> = trial.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g.iter().zip(&g_trial).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * norm2(&s) * norm2(&y) && sy > 0.0 {
            if memory.len() == opts.lbfgs_history {
                memory.pop_front();
            }
            memory.push_back((s, y, 1.0 / sy));
        }
        std::mem::swap(&mut x, &mut trial);
        std::mem::swap(&mut g, &mut g_trial);
        last_rel = relative_change(f, f_new);
        f = f_new;
        trace.push(f);
        iterations += 1;
    }
}

/// Two-loop recursion: applies the inverse-curvature approximation to `g`.
/// The seed matrix is the objective's preconditioner when it has one and
/// the usual scaled identity otherwise.
fn two_loop<O: Objective>(obj: &O, memory: &VecDeque<(Vec<f64>, Vec<f64>, f64)>, g: &[f64]) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(memory.len());
    for (s, y, rho) in memory.iter().rev() {
        let a = rho * dot(s, &q);
        for (qi, yi) in q.iter_mut().zip(y) {
            *qi -= a * yi;
        }
        alphas.push(a);
    }
    if !obj.precondition(&mut q) {
        if let Some((s, y, _)) = memory.back() {
            let gamma = dot(s, y) / dot(y, y);
            q.iter_mut().for_each(|v| *v *= gamma);
        }
    }
    for ((s, y, rho), a) in memory.iter().zip(alphas.iter().rev()) {
        let b = rho * dot(y, &q);
        for (qi, si) in q.iter_mut().zip(s) {
            *qi += (a - b) * si;
        }
    }
    q
}

pub(crate) fn maximize<O: Objective>(obj: &O, opts: &FitOptions) -> Result<Solution> {
    opts.validate()?;
    if opts.uses_newton(obj.dim()) {
        newton(obj, opts)
    } else {
        lbfgs(obj, opts)
    }
}
