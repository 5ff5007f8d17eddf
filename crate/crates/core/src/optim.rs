//! Box-constrained Nelder-Mead.
//!
//! Every trial point is clamped into the box before it is evaluated, so the
//! objective is never called outside its bounds.

/// Settings for [`nelder_mead`].
#[derive(Clone, Debug, PartialEq)]
pub struct NelderMeadOptions {
    /// Converged once every vertex lies within this distance of the best one.
    pub diameter_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for NelderMeadOptions {
    fn default() -> Self {
        Self {
            diameter_tolerance: 1e-6,
            max_iterations: 10_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub iterations: usize,
    pub converged: bool,
}

fn clamp(x: &mut [f64], lower: &[f64], upper: &[f64]) {
    for ((v, lo), hi) in x.iter_mut().zip(lower).zip(upper) {
        *v = v.clamp(*lo, *hi);
    }
}

fn diameter(simplex: &[(Vec<f64>, f64)]) -> f64 {
    let best = &simplex[0].0;
    simplex[1..]
        .iter()
        .map(|(v, _)| {
            v.iter()
                .zip(best)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt()
        })
        .fold(0.0, f64::max)
}

/// Minimizes `f` from `start` with an initial simplex of per-coordinate
/// `steps`, inside the box `[lower, upper]`.
pub fn nelder_mead(
    f: impl Fn(&[f64]) -> f64,
    start: &[f64],
    steps: &[f64],
    lower: &[f64],
    upper: &[f64],
    options: &NelderMeadOptions,
) -> Minimum {
    let n = start.len();
    let eval = |x: &[f64]| {
        let v = f(x);
        if v.is_nan() {
            f64::INFINITY
        } else {
            v
        }
    };
    let mut x0 = start.to_vec();
    clamp(&mut x0, lower, upper);
    let mut simplex: Vec<(Vec<f64>, f64)> = vec![(x0.clone(), eval(&x0))];
    for k in 0..n {
        let mut x = x0.clone();
        x[k] += steps[k];
        if x[k] > upper[k] {
            x[k] = x0[k] - steps[k];
        }
        clamp(&mut x, lower, upper);
        let v = eval(&x);
        simplex.push((x, v));
    }

    let mut iterations = 0;
    let sort = |s: &mut Vec<(Vec<f64>, f64)>| s.sort_by(|a, b| a.1.total_cmp(&b.1));
    sort(&mut simplex);
    while iterations < options.max_iterations && diameter(&simplex) >= options.diameter_tolerance {
        iterations += 1;
        let worst = simplex[n].clone();
        let centroid: Vec<f64> = (0..n)
            .map(|k| simplex[..n].iter().map(|(v, _)| v[k]).sum::<f64>() / n as f64)
            .collect();
        let along = |t: f64| {
            let mut x: Vec<f64> = centroid
                .iter()
                .zip(&worst.0)
                .map(|(c, w)| c + t * (c - w))
                .collect();
            clamp(&mut x, lower, upper);
            let v = eval(&x);
            (x, v)
        };
        let reflected = along(1.0);
        if reflected.1 < simplex[0].1 {
            let expanded = along(2.0);
            simplex[n] = if expanded.1 < reflected.1 {
                expanded
            } else {
                reflected
            };
        } else if reflected.1 < simplex[n - 1].1 {
            simplex[n] = reflected;
        } else {
            let contracted = if reflected.1 < worst.1 {
                along(0.5)
            } else {
                along(-0.5)
            };
            if contracted.1 < worst.1.min(reflected.1) {
                simplex[n] = contracted;
            } else {
                let best = simplex[0].0.clone();
                for vertex in simplex.iter_mut().skip(1) {
                    let x: Vec<f64> = best
                        .iter()
                        .zip(&vertex.0)
                        .map(|(b, v)| b + 0.5 * (v - b))
                        .collect();
                    vertex.1 = eval(&x);
                    vertex.0 = x;
                }
            }
        }
        sort(&mut simplex);
    }
    let converged = diameter(&simplex) < options.diameter_tolerance;
    let (x, value) = simplex.swap_remove(0);
    Minimum {
        x,
        value,
        iterations,
        converged,
    }
}
