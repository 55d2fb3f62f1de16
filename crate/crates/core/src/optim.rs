//! Bounded Nelder-Mead simplex search with deterministic multi-start.

use std::cell::Cell;

use rayon::prelude::*;

/// Box constraints. Trial points are projected onto the box.
#[derive(Debug, Clone, PartialEq)]
pub struct Bounds {
    lower: Vec<f64>,
    upper: Vec<f64>,
}

impl Bounds {
    /// Panics if the lengths differ or any interval is empty.
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        assert_eq!(lower.len(), upper.len());
        assert!(lower.iter().zip(&upper).all(|(l, u)| l <= u));
        Self { lower, upper }
    }

    pub fn dim(&self) -> usize {
        self.lower.len()
    }

    pub fn lower(&self) -> &[f64] {
        &self.lower
    }

    pub fn upper(&self) -> &[f64] {
        &self.upper
    }

    pub fn clamp(&self, x: &mut [f64]) {
        for ((v, l), u) in x.iter_mut().zip(&self.lower).zip(&self.upper) {
            *v = v.clamp(*l, *u);
        }
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter().zip(&self.lower).zip(&self.upper).all(|((v, l), u)| v >= l && v <= u)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NelderMead {
    /// Hard cap on objective evaluations.
    pub max_evals: usize,
    /// Stop when max f - min f over the simplex falls below this.
    pub f_tol: f64,
    /// Initial edge length as a fraction of each bound width.
    pub initial_step: f64,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            max_evals: 5000,
            f_tol: 1e-9,
            initial_step: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub evaluations: usize,
    pub converged: bool,
}

impl NelderMead {
    /// Minimizes `f` from `x0` (clamped into `bounds`). Non-finite objective
    /// values are treated as +inf, so infeasible regions are simply avoided.
    pub fn minimize<F>(&self, f: F, x0: &[f64], bounds: &Bounds) -> Minimum
    where
        F: Fn(&[f64]) -> f64,
    {
        let dim = x0.len();
        assert_eq!(dim, bounds.dim());
        let evals = Cell::new(0usize);
        let eval = |x: &[f64]| {
            evals.set(evals.get() + 1);
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };

        let mut start = x0.to_vec();
        bounds.clamp(&mut start);
        let mut simplex = Vec::with_capacity(dim + 1);
        simplex.push(start.clone());
        for i in 0..dim {
            let width = bounds.upper[i] - bounds.lower[i];
            let step = if width.is_finite() && width > 0.0 {
                self.initial_step * width
            } else {
                self.initial_step * start[i].abs().max(1.0)
            };
            let mut v = start.clone();
            // Step away from the nearer bound so the vertex stays distinct.
            v[i] = if start[i] + step <= bounds.upper[i] { start[i] + step } else { start[i] - step };
            bounds.clamp(&mut v);
            simplex.push(v);
        }
        let mut values: Vec<f64> = simplex.iter().map(|v| eval(v)).collect();

        let mut converged = false;
        while evals.get() < self.max_evals {
            let mut order: Vec<usize> = (0..=dim).collect();
            order.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
            simplex = order.iter().map(|&i| simplex[i].clone()).collect();
            values = order.iter().map(|&i| values[i]).collect();

            let spread = values[dim] - values[0];
            if values[0].is_finite() && spread < self.f_tol {
                converged = true;
                break;
            }

            let mut centroid = vec![0.0; dim];
            for v in &simplex[..dim] {
                for (c, x) in centroid.iter_mut().zip(v) {
                    *c += x / dim as f64;
                }
            }
            let worst = simplex[dim].clone();
            let along = |t: f64| {
                let mut p: Vec<f64> = centroid.iter().zip(&worst).map(|(c, w)| c + t * (c - w)).collect();
                bounds.clamp(&mut p);
                p
            };

            let reflected = along(1.0);
            let fr = eval(&reflected);
            if fr < values[0] {
                let expanded = along(2.0);
                let fe = eval(&expanded);
                if fe < fr {
                    simplex[dim] = expanded;
                    values[dim] = fe;
                } else {
                    simplex[dim] = reflected;
                    values[dim] = fr;
                }
                continue;
            }
            if fr < values[dim - 1] {
                simplex[dim] = reflected;
                values[dim] = fr;
                continue;
            }
            let (contracted, fc) = if fr < values[dim] {
                let p = along(0.5);
                let v = eval(&p);
                (p, v)
            } else {
                let p = along(-0.5);
                let v = eval(&p);
                (p, v)
            };
            if fc < values[dim].min(fr) {
                simplex[dim] = contracted;
                values[dim] = fc;
                continue;
            }
            let best = simplex[0].clone();
            for i in 1..=dim {
                let mut p: Vec<f64> = best.iter().zip(&simplex[i]).map(|(b, x)| b + 0.5 * (x - b)).collect();
                bounds.clamp(&mut p);
                values[i] = eval(&p);
                simplex[i] = p;
            }
        }

        let best = (0..=dim).min_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b))).unwrap();
        Minimum {
            x: simplex[best].clone(),
            value: values[best],
            evaluations: evals.get(),
            converged,
        }
    }

    /// Runs one search per start (concurrently) and returns the index and
    /// result of the winner: lowest value, then lowest start index. `None`
    /// when no start reached a finite value.
    pub fn multi_start<F>(&self, f: F, starts: &[Vec<f64>], bounds: &Bounds) -> Option<(usize, Minimum)>
    where
        F: Fn(&[f64]) -> f64 + Sync,
    {
        let results: Vec<Minimum> = starts.par_iter().map(|s| self.minimize(&f, s, bounds)).collect();
        results
            .into_iter()
            .enumerate()
            .filter(|(_, m)| m.value.is_finite())
            .min_by(|(i, a), (j, b)| a.value.total_cmp(&b.value).then(i.cmp(j)))
    }
}
