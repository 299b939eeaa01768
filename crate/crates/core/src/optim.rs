//! Derivative-free simplex search and a small Levenberg-Marquardt solver,
//! both used by the NSS fitter.

use nalgebra::{DMatrix, DVector};

#[derive(Debug, Clone)]
pub struct NelderMeadConfig {
    pub max_iterations: usize,
    /// Stop when the spread of simplex values falls below this.
    pub f_tol: f64,
    /// Stop when the simplex diameter falls below this.
    pub x_tol: f64,
}

impl Default for NelderMeadConfig {
    fn default() -> Self {
        Self {
            max_iterations: 4000,
            f_tol: 1e-22,
            x_tol: 1e-12,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

fn towards(from: &[f64], to: &[f64], coeff: f64) -> Vec<f64> {
    from.iter().zip(to).map(|(a, b)| a + coeff * (b - a)).collect()
}

/// Minimizes `f` starting from `x0` with an axis-aligned initial simplex of
/// edge lengths `steps`. Non-finite objective values are treated as `+inf`.
pub fn nelder_mead(f: impl Fn(&[f64]) -> f64, x0: &[f64], steps: &[f64], config: &NelderMeadConfig) -> Minimum {
    let n = x0.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_finite() {
            v
        } else {
            f64::INFINITY
        }
    };

    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] += steps[i];
        simplex.push(v);
    }
    let mut values: Vec<f64> = simplex.iter().map(|x| eval(x)).collect();

    let mut iterations = 0;
    let mut converged = false;
    while iterations < config.max_iterations {
        // stable sort keeps the earlier vertex first on ties
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
        simplex = order.iter().map(|&i| simplex[i].clone()).collect();
        values = order.iter().map(|&i| values[i]).collect();

        let spread = values[n] - values[0];
        let diameter = simplex[1..]
            .iter()
            .flat_map(|v| v.iter().zip(&simplex[0]).map(|(a, b)| (a - b).abs()))
            .fold(0.0, f64::max);
        if (spread.is_finite() && spread <= config.f_tol) || diameter <= config.x_tol {
            converged = true;
            break;
        }
        iterations += 1;

        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, x) in centroid.iter_mut().zip(v) {
                *c += x / n as f64;
            }
        }

        let reflected = towards(&centroid, &simplex[n], -REFLECT);
        let f_reflected = eval(&reflected);
        if f_reflected < values[0] {
            let expanded = towards(&centroid, &simplex[n], -EXPAND);
            let f_expanded = eval(&expanded);
            if f_expanded < f_reflected {
                simplex[n] = expanded;
                values[n] = f_expanded;
            } else {
                simplex[n] = reflected;
                values[n] = f_reflected;
            }
            continue;
        }
        if f_reflected < values[n - 1] {
            simplex[n] = reflected;
            values[n] = f_reflected;
            continue;
        }
        let (candidate, f_candidate) = if f_reflected < values[n] {
            let outside = towards(&centroid, &reflected, CONTRACT);
            let f_outside = eval(&outside);
            (outside, f_outside)
        } else {
            let inside = towards(&centroid, &simplex[n], CONTRACT);
            let f_inside = eval(&inside);
            (inside, f_inside)
        };
        if f_candidate < values[n].min(f_reflected) {
            simplex[n] = candidate;
            values[n] = f_candidate;
            continue;
        }
        for i in 1..=n {
            simplex[i] = towards(&simplex[0], &simplex[i], SHRINK);
            values[i] = eval(&simplex[i]);
        }
    }

    let best = (0..=n).min_by(|&a, &b| values[a].total_cmp(&values[b])).unwrap_or(0);
    Minimum {
        x: simplex[best].clone(),
        value: values[best],
        iterations,
        converged,
    }
}

#[derive(Debug, Clone)]
pub struct LmConfig {
    pub max_iterations: usize,
    /// Relative finite-difference step for the Jacobian.
    pub fd_step: f64,
}

impl Default for LmConfig {
    fn default() -> Self {
        Self {
            max_iterations: 200,
            fd_step: 1e-6,
        }
    }
}

/// Minimizes `sum(r(x)^2)` by Levenberg-Marquardt with a central-difference
/// Jacobian. Returns the best point visited.
pub fn levenberg_marquardt(residuals: impl Fn(&[f64]) -> Vec<f64>, x0: &[f64], config: &LmConfig) -> Minimum {
    let cost = |r: &[f64]| {
        let c: f64 = r.iter().map(|v| v * v).sum();
        if c.is_finite() {
            c
        } else {
            f64::INFINITY
        }
    };
    let n = x0.len();
    let mut x = x0.to_vec();
    let mut r = residuals(&x);
    let mut value = cost(&r);
    let mut damping = 1e-3;
    let mut iterations = 0;
    let mut converged = false;

    while iterations < config.max_iterations && value.is_finite() {
        iterations += 1;
        let m = r.len();
        let mut jac = DMatrix::<f64>::zeros(m, n);
        for j in 0..n {
            let h = config.fd_step * (1.0 + x[j].abs());
            let mut xp = x.clone();
            let mut xm = x.clone();
            xp[j] += h;
            xm[j] -= h;
            let (rp, rm) = (residuals(&xp), residuals(&xm));
            for i in 0..m {
                jac[(i, j)] = (rp[i] - rm[i]) / (2.0 * h);
            }
        }
        let rv = DVector::from_column_slice(&r);
        let jtj = jac.transpose() * &jac;
        let grad = jac.transpose() * rv;

        let mut improved = false;
        while damping < 1e12 {
            let mut a = jtj.clone();
            for k in 0..n {
                a[(k, k)] += damping * jtj[(k, k)].max(1e-30);
            }
            let Some(step) = a.lu().solve(&(-&grad)) else {
                damping *= 10.0;
                continue;
            };
            let candidate: Vec<f64> = x.iter().zip(step.iter()).map(|(a, b)| a + b).collect();
            let rc = residuals(&candidate);
            let vc = cost(&rc);
            if vc < value {
                let rel = (value - vc) / value.max(f64::MIN_POSITIVE);
                x = candidate;
                r = rc;
                value = vc;
                damping = (damping / 10.0).max(1e-12);
                improved = true;
                if rel < 1e-14 {
                    converged = true;
                }
                break;
            }
            damping *= 10.0;
        }
        if !improved || converged {
            converged = true;
            break;
        }
    }
    Minimum {
        x,
        value,
        iterations,
        converged,
    }
}
