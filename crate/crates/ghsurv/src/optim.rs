//! Derivative-free simplex search plus quasi-Newton polish.
//!
//! Objectives map a free vector to a scalar to minimize; +inf (or NaN,
//! sanitized to +inf) marks points to retreat from. Both methods are
//! deterministic for identical inputs.

#[derive(Debug, Clone)]
pub struct OptimResult {
    pub x: Vec<f64>,
    pub f: f64,
    pub n_evals: usize,
    /// Max-norm of the central-difference gradient at x, if evaluated.
    pub grad_max: Option<f64>,
}

fn sanitized<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> f64 {
    let v = f(x);
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Nelder-Mead with standard reflection/expansion/contraction/shrink
/// coefficients (1, 2, 0.5, 0.5).
///
/// Stops when the simplex function spread falls below `ftol_rel` relative to
/// the best value and the vertex spread below `xtol_abs`, or at `max_evals`.
pub fn nelder_mead<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: &[f64],
    ftol_rel: f64,
    xtol_abs: f64,
    max_evals: usize,
) -> OptimResult {
    let n = x0.len();
    if n == 0 {
        return OptimResult {
            x: vec![],
            f: sanitized(f, x0),
            n_evals: 1,
            grad_max: None,
        };
    }
    let mut evals = 0usize;
    let eval = |x: &[f64], evals: &mut usize| {
        *evals += 1;
        sanitized(f, x)
    };

    // initial simplex mirrors the common 5% displacement rule
    let mut simplex: Vec<Vec<f64>> = Vec::with_capacity(n + 1);
    simplex.push(x0.to_vec());
    for i in 0..n {
        let mut v = x0.to_vec();
        v[i] = if v[i] != 0.0 { v[i] * 1.05 } else { 0.00025 };
        simplex.push(v);
    }
    let mut fv: Vec<f64> = simplex.iter().map(|v| eval(v, &mut evals)).collect();

    loop {
        // order ascending by f
        let mut order: Vec<usize> = (0..=n).collect();
        order.sort_by(|&a, &b| fv[a].total_cmp(&fv[b]));
        let reordered: Vec<Vec<f64>> = order.iter().map(|&i| simplex[i].clone()).collect();
        let refv: Vec<f64> = order.iter().map(|&i| fv[i]).collect();
        simplex = reordered;
        fv = refv;

        let fspread = (fv[n] - fv[0]).abs();
        let xspread = simplex[1..]
            .iter()
            .map(|v| {
                v.iter()
                    .zip(&simplex[0])
                    .map(|(a, b)| (a - b).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max);
        if (fspread <= ftol_rel * fv[0].abs().max(1.0) && xspread <= xtol_abs)
            || evals >= max_evals
        {
            return OptimResult {
                x: simplex[0].clone(),
                f: fv[0],
                n_evals: evals,
                grad_max: None,
            };
        }

        // centroid of all but worst
        let mut centroid = vec![0.0; n];
        for v in &simplex[..n] {
            for (c, &vi) in centroid.iter_mut().zip(v) {
                *c += vi;
            }
        }
        for c in centroid.iter_mut() {
            *c /= n as f64;
        }

        let worst = simplex[n].clone();
        let reflect: Vec<f64> = centroid
            .iter()
            .zip(&worst)
            .map(|(c, w)| c + (c - w))
            .collect();
        let fr = eval(&reflect, &mut evals);

        if fr < fv[0] {
            let expand: Vec<f64> = centroid
                .iter()
                .zip(&worst)
                .map(|(c, w)| c + 2.0 * (c - w))
                .collect();
            let fe = eval(&expand, &mut evals);
            if fe < fr {
                simplex[n] = expand;
                fv[n] = fe;
            } else {
                simplex[n] = reflect;
                fv[n] = fr;
            }
        } else if fr < fv[n - 1] {
            simplex[n] = reflect;
            fv[n] = fr;
        } else {
            // contraction, outside if the reflected point improved on the worst
            let (base, fbase) = if fr < fv[n] {
                (&reflect, fr)
            } else {
                (&worst, fv[n])
            };
            let contract: Vec<f64> = centroid
                .iter()
                .zip(base)
                .map(|(c, b)| c + 0.5 * (b - c))
                .collect();
            let fc = eval(&contract, &mut evals);
            if fc < fbase {
                simplex[n] = contract;
                fv[n] = fc;
            } else {
                // shrink toward the best vertex
                for j in 1..=n {
                    let best = simplex[0].clone();
                    for (v, b) in simplex[j].iter_mut().zip(&best) {
                        *v = b + 0.5 * (*v - b);
                    }
                    fv[j] = eval(&simplex[j].clone(), &mut evals);
                }
            }
        }
    }
}

/// Central-difference gradient with per-coordinate step
/// sqrt(machine epsilon) * max(1, |x_i|).
pub fn central_gradient<F: Fn(&[f64]) -> f64>(f: &F, x: &[f64]) -> (Vec<f64>, usize) {
    let n = x.len();
    let mut g = vec![0.0; n];
    let mut work = x.to_vec();
    for i in 0..n {
        let h = f64::EPSILON.sqrt() * x[i].abs().max(1.0);
        let xi = x[i];
        work[i] = xi + h;
        let fp = sanitized(f, &work);
        work[i] = xi - h;
        let fm = sanitized(f, &work);
        work[i] = xi;
        g[i] = (fp - fm) / (2.0 * h);
    }
    (g, 2 * n)
}

/// BFGS with numerical gradients and Armijo backtracking.
///
/// Stops when the gradient max-norm falls below `gtol_rel * max(1, |f|)`,
/// on line-search failure, or at `max_iter`.
pub fn bfgs<F: Fn(&[f64]) -> f64>(
    f: &F,
    x0: &[f64],
    gtol_rel: f64,
    max_iter: usize,
) -> OptimResult {
    let n = x0.len();
    let mut evals = 0usize;
    let mut x = x0.to_vec();
    let mut fx = sanitized(f, &x);
    evals += 1;
    if n == 0 || !fx.is_finite() {
        return OptimResult {
            x,
            f: fx,
            n_evals: evals,
            grad_max: None,
        };
    }
    let (mut g, ge) = central_gradient(f, &x);
    evals += ge;
    // inverse Hessian approximation, identity start
    let mut hinv = vec![vec![0.0; n]; n];
    for (i, row) in hinv.iter_mut().enumerate() {
        row[i] = 1.0;
    }

    for _ in 0..max_iter {
        let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if gmax <= gtol_rel * fx.abs().max(1.0) {
            return OptimResult {
                x,
                f: fx,
                n_evals: evals,
                grad_max: Some(gmax),
            };
        }
        // direction d = -Hinv g
        let mut d = vec![0.0; n];
        for i in 0..n {
            let mut acc = 0.0;
            for j in 0..n {
                acc += hinv[i][j] * g[j];
            }
            d[i] = -acc;
        }
        let slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();
        if slope >= 0.0 {
            // not a descent direction: reset curvature
            for (i, row) in hinv.iter_mut().enumerate() {
                for (j, v) in row.iter_mut().enumerate() {
                    *v = if i == j { 1.0 } else { 0.0 };
                }
            }
            for (di, gi) in d.iter_mut().zip(&g) {
                *di = -gi;
            }
        }
        let slope: f64 = d.iter().zip(&g).map(|(a, b)| a * b).sum();

        // Armijo backtracking
        let mut step = 1.0;
        let mut accepted = false;
        let mut xn = x.clone();
        let mut fn_ = fx;
        for _ in 0..40 {
            for i in 0..n {
                xn[i] = x[i] + step * d[i];
            }
            fn_ = sanitized(f, &xn);
            evals += 1;
            if fn_ <= fx + 1e-4 * step * slope {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted || !(fn_ < fx) {
            let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            return OptimResult {
                x,
                f: fx,
                n_evals: evals,
                grad_max: Some(gmax),
            };
        }

        let (gn, ge) = central_gradient(f, &xn);
        evals += ge;
        let s: Vec<f64> = xn.iter().zip(&x).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = gn.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy: f64 = s.iter().zip(&y).map(|(a, b)| a * b).sum();
        let ss: f64 = s.iter().map(|v| v * v).sum::<f64>().sqrt();
        let yy: f64 = y.iter().map(|v| v * v).sum::<f64>().sqrt();
        if sy > 1e-10 * ss * yy {
            // BFGS inverse update: H <- (I - r s y')H(I - r y s') + r s s'
            let r = 1.0 / sy;
            let mut hy = vec![0.0; n];
            for i in 0..n {
                let mut acc = 0.0;
                for j in 0..n {
                    acc += hinv[i][j] * y[j];
                }
                hy[i] = acc;
            }
            let yhy: f64 = y.iter().zip(&hy).map(|(a, b)| a * b).sum();
            for i in 0..n {
                for j in 0..n {
                    hinv[i][j] += -r * (s[i] * hy[j] + hy[i] * s[j])
                        + r * r * yhy * s[i] * s[j]
                        + r * s[i] * s[j];
                }
            }
        }
        x = xn;
        fx = fn_;
        g = gn;
    }
    let gmax = g.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    OptimResult {
        x,
        f: fx,
        n_evals: evals,
        grad_max: Some(gmax),
    }
}
