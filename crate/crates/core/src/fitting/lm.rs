//! Damped Gauss–Newton (Levenberg–Marquardt) with a central-difference Jacobian.

use crate::error::{Error, Result};
use crate::fitting::DataSeries;
use crate::scalar::{lit, Real};

/// A parametric curve `y = f(x; p)`.
pub trait Model<T: Real> {
    fn parameter_names(&self) -> Vec<&'static str>;
    fn eval(&self, x: T, params: &[T]) -> T;
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LsOptions<T> {
    /// Residual norm regarded as an exact fit, relative to `max(1, ‖y‖)`.
    pub atol: T,
    /// Bound on the scaled gradient (cosine between residual and Jacobian columns).
    pub rtol: T,
    pub max_iterations: usize,
}

impl<T: Real> Default for LsOptions<T> {
    fn default() -> Self {
        Self {
            atol: lit(1e-10),
            rtol: lit(1e-8),
            max_iterations: 200,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitResult<T> {
    pub names: Vec<String>,
    pub params: Vec<T>,
    /// `‖√w·(y − f)‖₂` at `params`.
    pub residual_norm: T,
    /// Largest scaled gradient component at `params`.
    pub gradient: T,
    pub converged: bool,
    /// Accepted steps.
    pub iterations: usize,
    /// Residual norm after each accepted step, starting with the initial one.
    pub history: Vec<T>,
}

impl<T: Real> FitResult<T> {
    pub fn get(&self, name: &str) -> Option<T> {
        self.names.iter().position(|n| n == name).map(|i| self.params[i])
    }

    pub fn named(&self) -> Vec<(String, f64)> {
        self.names
            .iter()
            .cloned()
            .zip(self.params.iter().map(|p| p.to_f64_lossy()))
            .collect()
    }

    pub(crate) fn into_converged(self) -> Result<Self> {
        if self.converged {
            Ok(self)
        } else {
            Err(Error::NotConverged {
                iterations: self.iterations,
                residual_norm: self.residual_norm.to_f64_lossy(),
                best: self.named(),
            })
        }
    }
}

fn residuals<T: Real, M: Model<T> + ?Sized>(model: &M, d: &DataSeries<T>, p: &[T]) -> Vec<T> {
    (0..d.len())
        .map(|i| d.weight(i).sqrt() * (d.y()[i] - model.eval(d.x()[i], p)))
        .collect()
}

fn norm<T: Real>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, &r| acc + r * r).sqrt()
}

/// Jacobian `∂f(x_i; p)/∂p_j` of the model (unweighted), by central differences.
pub fn jacobian<T: Real, M: Model<T> + ?Sized>(model: &M, x: &[T], p: &[T]) -> Vec<Vec<T>> {
    let step_scale = T::epsilon().cbrt();
    let mut jac = vec![vec![T::zero(); p.len()]; x.len()];
    let mut work = p.to_vec();
    for j in 0..p.len() {
        let h = step_scale * p[j].abs().max(T::one());
        work[j] = p[j] + h;
        let up: Vec<T> = x.iter().map(|&xi| model.eval(xi, &work)).collect();
        work[j] = p[j] - h;
        let down: Vec<T> = x.iter().map(|&xi| model.eval(xi, &work)).collect();
        work[j] = p[j];
        let denom = lit::<T>(2.0) * h;
        for i in 0..x.len() {
            jac[i][j] = (up[i] - down[i]) / denom;
        }
    }
    jac
}

/// Normal-equation pieces at `p`: `JᵀWJ`, the gradient `JᵀW(f − y)` and the residuals.
fn normal_equations<T: Real, M: Model<T> + ?Sized>(
    model: &M,
    d: &DataSeries<T>,
    p: &[T],
) -> (Vec<Vec<T>>, Vec<T>, Vec<T>) {
    let n = p.len();
    let jac = jacobian(model, d.x(), p);
    let r = residuals(model, d, p);
    let mut a = vec![vec![T::zero(); n]; n];
    let mut g = vec![T::zero(); n];
    for (i, row) in jac.iter().enumerate() {
        let sw = d.weight(i).sqrt();
        for j in 0..n {
            let jj = sw * row[j];
            // residual is y − f, so ∂r/∂p = −√w·∂f/∂p
            g[j] = g[j] - jj * r[i];
            for k in 0..=j {
                a[j][k] = a[j][k] + jj * sw * row[k];
            }
        }
    }
    for j in 0..n {
        for k in 0..j {
            a[k][j] = a[j][k];
        }
    }
    (a, g, r)
}

fn scaled_gradient<T: Real>(a: &[Vec<T>], g: &[T], rnorm: T) -> T {
    if rnorm == T::zero() {
        return T::zero();
    }
    g.iter()
        .enumerate()
        .map(|(j, gj)| {
            let col = a[j][j].sqrt();
            if col > T::zero() {
                gj.abs() / (col * rnorm)
            } else {
                T::zero()
            }
        })
        .fold(T::zero(), T::max)
}

/// Solves `M·x = b` for symmetric positive definite `M` (Cholesky). `None` if not SPD.
fn cholesky_solve<T: Real>(m: &[Vec<T>], b: &[T]) -> Option<Vec<T>> {
    let n = b.len();
    let mut l = vec![vec![T::zero(); n]; n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[i][j];
            for k in 0..j {
                s = s - l[i][k] * l[j][k];
            }
            if i == j {
                if !(s > T::zero()) || !s.is_finite() {
                    return None;
                }
                l[i][i] = s.sqrt();
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    let mut z = vec![T::zero(); n];
    for i in 0..n {
        let mut s = b[i];
        for k in 0..i {
            s = s - l[i][k] * z[k];
        }
        z[i] = s / l[i][i];
    }
    let mut x = vec![T::zero(); n];
    for i in (0..n).rev() {
        let mut s = z[i];
        for k in i + 1..n {
            s = s - l[k][i] * x[k];
        }
        x[i] = s / l[i][i];
    }
    Some(x)
}

/// Minimizes `‖√w·(y − f(x; p))‖²` from `p0`.
///
/// Each iteration first tries the current damping (initially zero, a pure
/// Gauss–Newton step). A rejected or singular step multiplies the damping by
/// ten (starting at 1e-3); an accepted one divides it by ten. Exhausting the
/// iteration budget returns a result with `converged == false`.
///
/// When no damping reduces the residual any further (the decrease is below
/// round-off), the fit counts as converged if the scaled gradient is at most
/// `√rtol`.
pub fn least_squares<T: Real, M: Model<T> + ?Sized>(
    model: &M,
    d: &DataSeries<T>,
    p0: &[T],
    opts: &LsOptions<T>,
) -> Result<FitResult<T>> {
    let names: Vec<String> = model.parameter_names().iter().map(|s| s.to_string()).collect();
    if names.len() != p0.len() {
        return Err(Error::invalid(
            "p0",
            format!("model has {} parameters, got {}", names.len(), p0.len()),
        ));
    }
    if d.len() < p0.len() {
        return Err(Error::invalid(
            "data",
            format!("{} points cannot determine {} parameters", d.len(), p0.len()),
        ));
    }
    if p0.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("p0", "initial parameters must be finite"));
    }
    let yscale = {
        let mut s = T::zero();
        for i in 0..d.len() {
            s = s + d.weight(i) * d.y()[i] * d.y()[i];
        }
        s.sqrt().max(T::one())
    };
    let exact = opts.atol * yscale;
    let ten = lit::<T>(10.0);
    let lambda_start = lit::<T>(1e-3);
    let lambda_floor = lit::<T>(1e-12);
    let lambda_ceiling = lit::<T>(1e16);

    let mut p = p0.to_vec();
    let (mut a, mut g, r) = normal_equations(model, d, &p);
    let mut rnorm = norm(&r);
    if !rnorm.is_finite() {
        return Err(Error::invalid("p0", "model is not finite at the initial parameters"));
    }
    let mut history = vec![rnorm];
    let mut lambda = T::zero();
    let mut iterations = 0;
    let mut grad = scaled_gradient(&a, &g, rnorm);
    let done = |rn: T, gr: T| rn <= exact || gr <= opts.rtol;
    let mut stalled = false;

    while !done(rnorm, grad) && iterations < opts.max_iterations {
        let n = p.len();
        let max_diag = (0..n).map(|j| a[j][j]).fold(T::zero(), T::max);
        let diag_floor = if max_diag > T::zero() { max_diag * lit(1e-12) } else { T::one() };
        let neg_g: Vec<T> = g.iter().map(|v| -*v).collect();

        let mut accepted = false;
        while lambda <= lambda_ceiling {
            let mut damped = a.clone();
            for j in 0..n {
                damped[j][j] = damped[j][j] + lambda * a[j][j].max(diag_floor);
            }
            let step = match cholesky_solve(&damped, &neg_g) {
                Some(s) if s.iter().all(|v| v.is_finite()) => s,
                _ => {
                    lambda = if lambda == T::zero() { lambda_start } else { lambda * ten };
                    continue;
                }
            };
            let trial: Vec<T> = p.iter().zip(&step).map(|(a, b)| *a + *b).collect();
            let trial_norm = norm(&residuals(model, d, &trial));
            if trial_norm.is_finite() && trial_norm < rnorm {
                let unchanged = trial.iter().zip(&p).all(|(t, q)| t == q);
                p = trial;
                accepted = !unchanged;
                lambda = lambda / ten;
                if lambda < lambda_floor {
                    lambda = T::zero();
                }
                break;
            }
            lambda = if lambda == T::zero() { lambda_start } else { lambda * ten };
        }
        if !accepted {
            stalled = true;
            break;
        }
        iterations += 1;
        let (na, ng, nr) = normal_equations(model, d, &p);
        a = na;
        g = ng;
        rnorm = norm(&nr);
        history.push(rnorm);
        grad = scaled_gradient(&a, &g, rnorm);
    }

    Ok(FitResult {
        names,
        params: p,
        residual_norm: rnorm,
        gradient: grad,
        converged: done(rnorm, grad) || (stalled && grad <= opts.rtol.sqrt()),
        iterations,
        history,
    })
}
