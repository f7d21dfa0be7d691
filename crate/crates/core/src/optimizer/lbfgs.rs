//! Limited-memory BFGS with a strong-Wolfe line search.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LbfgsSettings {
    pub memory: usize,
    pub c1: f64,
    pub c2: f64,
    pub max_iterations: usize,
    /// Stop when successive accepted values differ by less than this.
    pub f_tol: f64,
    /// Stop when the gradient infinity norm falls below this.
    pub g_tol: f64,
    /// Stop as soon as a value at or below this is accepted.
    pub target: Option<f64>,
    pub max_line_search_evals: usize,
}

impl Default for LbfgsSettings {
    fn default() -> Self {
        Self {
            memory: 10,
            c1: 1e-4,
            c2: 0.9,
            max_iterations: 300,
            f_tol: 1e-10,
            g_tol: 1e-12,
            target: None,
            max_line_search_evals: 25,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Termination {
    MaxIterations,
    ValueTolerance,
    GradientTolerance,
    TargetReached,
    LineSearchFailed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LbfgsOutcome {
    pub x: Vec<f64>,
    pub f: f64,
    pub iterations: usize,
    pub evaluations: usize,
    pub termination: Termination,
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(a: &[f64]) -> f64 {
    a.iter().fold(0.0, |m, x| m.max(x.abs()))
}

struct Evaluator<'f, F> {
    f: &'f mut F,
    evals: usize,
    best: (f64, Vec<f64>),
}

impl<F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>> Evaluator<'_, F> {
    fn eval(&mut self, x: &[f64]) -> Result<(f64, Vec<f64>)> {
        self.evals += 1;
        let (v, g) = (self.f)(x)?;
        if v < self.best.0 {
            self.best = (v, x.to_vec());
        }
        Ok((v, g))
    }
}

struct Point {
    a: f64,
    f: f64,
    d: f64,
    g: Vec<f64>,
}

/// Minimizes `f` from `x0`. `f` returns the value and gradient. `on_iter`
/// receives `(iteration, value, gradient)` after every accepted step and once
/// for the starting point.
pub fn minimize<F, C>(mut f: F, x0: &[f64], s: &LbfgsSettings, mut on_iter: C) -> Result<LbfgsOutcome>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
    C: FnMut(usize, f64, &[f64]),
{
    let mut ev = Evaluator { f: &mut f, evals: 0, best: (f64::INFINITY, x0.to_vec()) };
    let mut x = x0.to_vec();
    let (mut fx, mut g) = ev.eval(&x)?;
    on_iter(0, fx, &g);
    let mut hist: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(s.memory);
    let mut termination = Termination::MaxIterations;
    let mut iterations = 0;
    let reached = |v: f64| s.target.is_some_and(|t| v <= t);
    if reached(fx) {
        termination = Termination::TargetReached;
    } else if inf_norm(&g) <= s.g_tol {
        termination = Termination::GradientTolerance;
    }
    while termination == Termination::MaxIterations && iterations < s.max_iterations {
        let mut p = direction(&g, &hist);
        let mut dphi0 = dot(&g, &p);
        if !(dphi0 < 0.0) {
            hist.clear();
            p = g.iter().map(|v| -v).collect();
            dphi0 = dot(&g, &p);
        }
        let a0 = if hist.is_empty() { (1.0f64).min(0.1 / inf_norm(&p)) } else { 1.0 };
        let found = line_search(&mut ev, &x, fx, dphi0, &p, a0, s)?;
        let Some(pt) = found else {
            termination = Termination::LineSearchFailed;
            break;
        };
        let x_new: Vec<f64> = x.iter().zip(&p).map(|(xi, pi)| xi + pt.a * pi).collect();
        let sv: Vec<f64> = x_new.iter().zip(&x).map(|(a, b)| a - b).collect();
        let yv: Vec<f64> = pt.g.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&sv, &yv);
        if sy > 1e-16 * dot(&yv, &yv).sqrt() * dot(&sv, &sv).sqrt() {
            if hist.len() == s.memory {
                hist.pop_front();
            }
            hist.push_back((sv, yv, 1.0 / sy));
        }
        iterations += 1;
        let df = (fx - pt.f).abs();
        x = x_new;
        fx = pt.f;
        g = pt.g;
        on_iter(iterations, fx, &g);
        if reached(fx) {
            termination = Termination::TargetReached;
        } else if inf_norm(&g) <= s.g_tol {
            termination = Termination::GradientTolerance;
        } else if df < s.f_tol {
            termination = Termination::ValueTolerance;
        }
    }
    let evaluations = ev.evals;
    let (fb, xb) = ev.best;
    Ok(LbfgsOutcome { x: xb, f: fb, iterations, evaluations, termination })
}

/// Two-loop recursion for `−H g`.
fn direction(g: &[f64], hist: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alpha = Vec::with_capacity(hist.len());
    for (sv, yv, rho) in hist.iter().rev() {
        let a = rho * dot(sv, &q);
        for (qi, yi) in q.iter_mut().zip(yv) {
            *qi -= a * yi;
        }
        alpha.push(a);
    }
    if let Some((sv, yv, _)) = hist.back() {
        let gamma = dot(sv, yv) / dot(yv, yv);
        q.iter_mut().for_each(|v| *v *= gamma);
    }
    for ((sv, yv, rho), a) in hist.iter().zip(alpha.iter().rev()) {
        let b = rho * dot(yv, &q);
        for (qi, si) in q.iter_mut().zip(sv) {
            *qi += (a - b) * si;
        }
    }
    q.iter().map(|v| -v).collect()
}

fn line_search<F>(
    ev: &mut Evaluator<'_, F>,
    x: &[f64],
    f0: f64,
    d0: f64,
    p: &[f64],
    a_init: f64,
    s: &LbfgsSettings,
) -> Result<Option<Point>>
where
    F: FnMut(&[f64]) -> Result<(f64, Vec<f64>)>,
{
    let mut probe = |ev: &mut Evaluator<'_, F>, a: f64| -> Result<Point> {
        let xa: Vec<f64> = x.iter().zip(p).map(|(xi, pi)| xi + a * pi).collect();
        let (f, g) = ev.eval(&xa)?;
        let d = dot(&g, p);
        Ok(Point { a, f, d, g })
    };
    let mut prev = Point { a: 0.0, f: f0, d: d0, g: Vec::new() };
    let mut a = a_init;
    let mut evals = 0;
    loop {
        if evals >= s.max_line_search_evals {
            return Ok(None);
        }
        evals += 1;
        let cur = probe(ev, a)?;
        if !cur.f.is_finite() || cur.f > f0 + s.c1 * a * d0 || (prev.a > 0.0 && cur.f >= prev.f) {
            return zoom(ev, &mut probe, prev, cur, f0, d0, s, evals);
        }
        if cur.d.abs() <= -s.c2 * d0 {
            return Ok(Some(cur));
        }
        if cur.d >= 0.0 {
            return zoom(ev, &mut probe, cur, prev, f0, d0, s, evals);
        }
        prev = cur;
        a *= 2.0;
    }
}

#[allow(clippy::too_many_arguments)]
fn zoom<F, P>(
    ev: &mut Evaluator<'_, F>,
    probe: &mut P,
    mut lo: Point,
    mut hi: Point,
    f0: f64,
    d0: f64,
    s: &LbfgsSettings,
    mut evals: usize,
) -> Result<Option<Point>>
where
    P: FnMut(&mut Evaluator<'_, F>, f64) -> Result<Point>,
{
    loop {
        if evals >= s.max_line_search_evals || (hi.a - lo.a).abs() < 1e-14 * lo.a.abs().max(1e-300) {
            // Accept the low end if it made progress.
            return Ok(if lo.a > 0.0 && lo.f < f0 { Some(lo) } else { None });
        }
        evals += 1;
        let a = interpolate(&lo, &hi);
        let cur = probe(ev, a)?;
        if !cur.f.is_finite() || cur.f > f0 + s.c1 * a * d0 || cur.f >= lo.f {
            hi = cur;
        } else {
            if cur.d.abs() <= -s.c2 * d0 {
                return Ok(Some(cur));
            }
            if cur.d * (hi.a - lo.a) >= 0.0 {
                hi = lo;
            }
            lo = cur;
        }
    }
}

/// Cubic-interpolated minimizer safeguarded to the inner 80% of the bracket.
fn interpolate(lo: &Point, hi: &Point) -> f64 {
    let (a0, a1) = (lo.a, hi.a);
    let width = a1 - a0;
    let (l, r) = if width > 0.0 { (a0 + 0.1 * width, a1 - 0.1 * width) } else { (a1 - 0.1 * width, a0 + 0.9 * width) };
    let (l, r) = (l.min(r), l.max(r));
    let bisect = 0.5 * (a0 + a1);
    if !hi.f.is_finite() {
        return bisect;
    }
    let d1 = lo.d + hi.d - 3.0 * (lo.f - hi.f) / (a0 - a1);
    let disc = d1 * d1 - lo.d * hi.d;
    if !(disc >= 0.0) {
        return bisect;
    }
    let d2 = width.signum() * disc.sqrt();
    let t = a1 - (a1 - a0) * (hi.d + d2 - d1) / (hi.d - lo.d + 2.0 * d2);
    if t.is_finite() && t >= l && t <= r {
        t
    } else {
        bisect
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rosenbrock(x: &[f64]) -> Result<(f64, Vec<f64>)> {
        let (a, b) = (x[0], x[1]);
        let f = (1.0 - a).powi(2) + 100.0 * (b - a * a).powi(2);
        let g = vec![-2.0 * (1.0 - a) - 400.0 * a * (b - a * a), 200.0 * (b - a * a)];
        Ok((f, g))
    }

    #[test]
    fn solves_rosenbrock() {
        let s = LbfgsSettings { max_iterations: 200, f_tol: 0.0, g_tol: 1e-10, ..Default::default() };
        let out = minimize(rosenbrock, &[-1.2, 1.0], &s, |_, _, _| {}).unwrap();
        assert!((out.x[0] - 1.0).abs() < 1e-6 && (out.x[1] - 1.0).abs() < 1e-6, "{out:?}");
    }

    #[test]
    fn quadratic_in_few_iterations() {
        let diag = [1.0, 10.0, 100.0, 3.0];
        let f = |x: &[f64]| -> Result<(f64, Vec<f64>)> {
            let v = x.iter().zip(&diag).map(|(a, d)| 0.5 * d * a * a).sum();
            Ok((v, x.iter().zip(&diag).map(|(a, d)| d * a).collect()))
        };
        let s = LbfgsSettings { g_tol: 1e-9, f_tol: 0.0, ..Default::default() };
        let out = minimize(f, &[1.0, 1.0, 1.0, 1.0], &s, |_, _, _| {}).unwrap();
        assert_eq!(out.termination, Termination::GradientTolerance);
        assert!(out.iterations < 30);
    }

    #[test]
    fn history_is_monotone_and_target_stops() {
        let mut seen = Vec::new();
        let s = LbfgsSettings { target: Some(1e-3), ..Default::default() };
        let out = minimize(rosenbrock, &[-1.2, 1.0], &s, |_, f, _| seen.push(f)).unwrap();
        assert_eq!(out.termination, Termination::TargetReached);
        assert!(out.f <= 1e-3);
        assert!(seen.windows(2).all(|w| w[1] <= w[0]));
    }
}
