//! Box-constrained limited-memory BFGS with a monotone projected line search.

use std::collections::VecDeque;

use nalgebra::DVector;

#[derive(Clone, Debug)]
pub struct LbfgsOptions {
    pub max_iters: usize,
    /// Stop when the projected gradient norm falls below this.
    pub grad_tol: f64,
    pub memory: usize,
    pub max_backtracks: usize,
    /// Armijo sufficient-decrease constant.
    pub c1: f64,
}

impl Default for LbfgsOptions {
    fn default() -> Self {
        LbfgsOptions {
            max_iters: 200,
            grad_tol: 1e-6,
            memory: 8,
            max_backtracks: 30,
            c1: 1e-4,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LbfgsResult {
    pub x: DVector<f64>,
    pub value: f64,
    pub iterations: usize,
    /// Projected gradient norm below tolerance.
    pub converged: bool,
    /// The last line search found no acceptable step.
    pub line_search_failed: bool,
}

fn project(x: &mut DVector<f64>, lower: &[f64], upper: &[f64]) {
    for i in 0..x.len() {
        x[i] = x[i].clamp(lower[i], upper[i]);
    }
}

fn projected_gradient(x: &DVector<f64>, g: &DVector<f64>, lower: &[f64], upper: &[f64]) -> DVector<f64> {
    DVector::from_fn(x.len(), |i, _| {
        let stepped = (x[i] - g[i]).clamp(lower[i], upper[i]);
        x[i] - stepped
    })
}

/// Minimizes `f` over the box `[lower, upper]` starting from `x0` (clamped first).
///
/// `f` returns value and gradient. Trial points rejected by `accept` are treated like
/// failed Armijo steps, so every returned iterate satisfies it if `x0` does. The value
/// never increases between iterates.
pub fn minimize_box<F, A>(
    mut f: F,
    x0: &DVector<f64>,
    lower: &[f64],
    upper: &[f64],
    opts: &LbfgsOptions,
    accept: A,
) -> LbfgsResult
where
    F: FnMut(&DVector<f64>) -> (f64, DVector<f64>),
    A: Fn(&DVector<f64>) -> bool,
{
    let n = x0.len();
    assert_eq!(lower.len(), n);
    assert_eq!(upper.len(), n);
    let mut x = x0.clone();
    project(&mut x, lower, upper);
    let (mut fx, mut g) = f(&x);
    let mut history: VecDeque<(DVector<f64>, DVector<f64>, f64)> = VecDeque::new();

    for iter in 0..opts.max_iters {
        let pg = projected_gradient(&x, &g, lower, upper);
        if pg.norm() < opts.grad_tol {
            return LbfgsResult {
                x,
                value: fx,
                iterations: iter,
                converged: true,
                line_search_failed: false,
            };
        }
        // Variables held at a bound by the gradient are frozen for this step.
        let free: Vec<bool> = (0..n)
            .map(|i| !((x[i] <= lower[i] && g[i] > 0.0) || (x[i] >= upper[i] && g[i] < 0.0)))
            .collect();
        let mask = |v: &DVector<f64>| DVector::from_fn(n, |i, _| if free[i] { v[i] } else { 0.0 });

        let mut d = two_loop(&mask(&g), &history, &mask);
        d.neg_mut();
        if d.dot(&g) >= 0.0 {
            history.clear();
            d = -mask(&g);
        }

        let mut t = 1.0;
        let mut accepted = None;
        for _ in 0..=opts.max_backtracks {
            let mut xt = &x + &d * t;
            project(&mut xt, lower, upper);
            let dx = &xt - &x;
            if dx.norm() == 0.0 {
                break;
            }
            if accept(&xt) {
                let (ft, gt) = f(&xt);
                if ft.is_finite() && ft < fx && ft <= fx + opts.c1 * g.dot(&dx).min(0.0) {
                    accepted = Some((xt, ft, gt));
                    break;
                }
            }
            t *= 0.5;
        }
        let Some((xn, fn_, gn)) = accepted else {
            return LbfgsResult {
                x,
                value: fx,
                iterations: iter,
                converged: false,
                line_search_failed: true,
            };
        };
        let s = &xn - &x;
        let y = &gn - &g;
        let sy = s.dot(&y);
        if sy > 1e-12 * s.norm() * y.norm() {
            if history.len() == opts.memory {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        } else {
            // Without a Wolfe line search the pair can carry negative curvature; stale
            // pairs then stall the iteration, so start over from a gradient step.
            history.clear();
        }
        x = xn;
        fx = fn_;
        g = gn;
    }
    let converged = projected_gradient(&x, &g, lower, upper).norm() < opts.grad_tol;
    LbfgsResult {
        x,
        value: fx,
        iterations: opts.max_iters,
        converged,
        line_search_failed: false,
    }
}

fn two_loop<M>(g: &DVector<f64>, history: &VecDeque<(DVector<f64>, DVector<f64>, f64)>, mask: &M) -> DVector<f64>
where
    M: Fn(&DVector<f64>) -> DVector<f64>,
{
    let mut q = g.clone();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * s.dot(&q);
        q -= &mask(y) * a;
        alphas.push(a);
    }
    if let Some((s, y, _)) = history.back() {
        let yy = y.dot(y);
        if yy > 0.0 {
            q *= s.dot(y) / yy;
        }
    }
    for ((s, y, rho), a) in history.iter().zip(alphas.into_iter().rev()) {
        let b = rho * y.dot(&q);
        q += &mask(s) * (a - b);
    }
    mask(&q)
}
