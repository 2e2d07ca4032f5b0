//! Least-squares Carreau-Yasuda fit with Nelder-Mead in log-parameter space.

use super::{CarreauYasudaParams, ViscositySample};
use crate::error::{Error, Result};
use serde::Serialize;

pub const MAX_EVALUATIONS: usize = 100_000;
/// Relative simplex spread at which a Nelder-Mead pass stops.
pub const SIMPLEX_TOLERANCE: f64 = 1e-10;

const DIM: usize = 5;

#[derive(Debug, Clone, Serialize)]
pub struct FitReport {
    pub params: CarreauYasudaParams,
    /// Fitted minus measured viscosity (Pa s), in input order.
    pub residuals: Vec<f64>,
    /// Root mean square residual (Pa s).
    pub rms: f64,
    pub evaluations: usize,
}

/// Data-driven starting point: plateaus at the extreme samples, lambda from the median shear rate.
pub fn initial_guess(samples: &[ViscositySample]) -> CarreauYasudaParams {
    let max_eta = samples.iter().map(|s| s.viscosity).fold(f64::MIN, f64::max);
    let min_eta = samples.iter().map(|s| s.viscosity).fold(f64::MAX, f64::min);
    let mut rates: Vec<f64> = samples.iter().map(|s| s.shear_rate).collect();
    rates.sort_by(|a, b| a.total_cmp(b));
    let median = if rates.len() % 2 == 1 {
        rates[rates.len() / 2]
    } else {
        0.5 * (rates[rates.len() / 2 - 1] + rates[rates.len() / 2])
    };
    CarreauYasudaParams { eta0: max_eta, eta_inf: min_eta, lambda: 1.0 / median.max(1e-12), a: 2.0, n: 0.5 }
}

pub fn fit_cy_default(samples: &[ViscositySample]) -> Result<FitReport> {
    check_samples(samples)?;
    fit_cy(samples, &initial_guess(samples))
}

fn check_samples(samples: &[ViscositySample]) -> Result<()> {
    if samples.len() < 6 {
        return Err(Error::domain(format!("need at least 6 viscosity samples, got {}", samples.len())));
    }
    let positive: Vec<f64> = samples.iter().map(|s| s.shear_rate).filter(|&g| g > 0.0).collect();
    let lo = positive.iter().cloned().fold(f64::MAX, f64::min);
    let hi = positive.iter().cloned().fold(f64::MIN, f64::max);
    if positive.is_empty() || hi / lo < 100.0 {
        return Err(Error::domain("samples must span at least two decades of shear rate"));
    }
    Ok(())
}

fn to_log(p: &CarreauYasudaParams) -> [f64; DIM] {
    [p.eta0.ln(), p.eta_inf.ln(), p.lambda.ln(), p.a.ln(), p.n.ln()]
}

fn from_log(x: &[f64; DIM]) -> CarreauYasudaParams {
    CarreauYasudaParams { eta0: x[0].exp(), eta_inf: x[1].exp(), lambda: x[2].exp(), a: x[3].exp(), n: x[4].exp() }
}

fn residuals(p: &CarreauYasudaParams, samples: &[ViscositySample]) -> Vec<f64> {
    // Evaluated without the plateau clamp so the objective stays smooth while
    // the simplex wanders through eta0 < eta_inf.
    samples
        .iter()
        .map(|s| p.eta_inf + (p.eta0 - p.eta_inf) * p.thinning_factor(s.shear_rate) - s.viscosity)
        .collect()
}

fn sse(p: &CarreauYasudaParams, samples: &[ViscositySample]) -> f64 {
    let r = residuals(p, samples);
    let v: f64 = r.iter().map(|x| x * x).sum();
    if v.is_finite() {
        v
    } else {
        f64::MAX
    }
}

/// Minimises the sum of squared viscosity residuals starting from `initial`.
pub fn fit_cy(samples: &[ViscositySample], initial: &CarreauYasudaParams) -> Result<FitReport> {
    check_samples(samples)?;
    if !(initial.eta0 > 0.0 && initial.eta_inf > 0.0 && initial.lambda > 0.0 && initial.a > 0.0 && initial.n > 0.0) {
        return Err(Error::domain("initial Carreau-Yasuda parameters must be positive"));
    }
    let f = |x: &[f64; DIM]| sse(&from_log(x), samples);
    let mut evals = 0usize;
    let mut best = to_log(initial);
    let mut best_f = f(&best);
    evals += 1;
    let mut converged = false;
    // Restart from the best vertex until a fresh simplex finds nothing better.
    while evals < MAX_EVALUATIONS {
        let (x, fx, pass_converged) = nelder_mead(&f, &best, &mut evals);
        let improved = fx < best_f * (1.0 - 1e-13);
        if fx <= best_f {
            best = x;
            best_f = fx;
        }
        if pass_converged && !improved {
            converged = true;
            break;
        }
    }
    let params = from_log(&best);
    if !converged {
        return Err(Error::Fit {
            message: "simplex did not contract below tolerance".into(),
            evaluations: evals,
            best: Some(params),
        });
    }
    if let Err(e) = params.validate() {
        return Err(Error::Fit { message: e.to_string(), evaluations: evals, best: Some(params) });
    }
    let res = residuals(&params, samples);
    let rms = (res.iter().map(|r| r * r).sum::<f64>() / res.len() as f64).sqrt();
    Ok(FitReport { params, residuals: res, rms, evaluations: evals })
}

/// One Nelder-Mead pass. Returns the best vertex, its value and whether the
/// spread criterion was met before the evaluation budget ran out.
fn nelder_mead<F: Fn(&[f64; DIM]) -> f64>(f: &F, start: &[f64; DIM], evals: &mut usize) -> ([f64; DIM], f64, bool) {
    const STEP: f64 = 0.1;
    let mut simplex: Vec<([f64; DIM], f64)> = Vec::with_capacity(DIM + 1);
    simplex.push((*start, f(start)));
    for k in 0..DIM {
        let mut v = *start;
        v[k] += STEP;
        simplex.push((v, f(&v)));
    }
    *evals += DIM + 1;

    loop {
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let spread = simplex[1..]
            .iter()
            .map(|(v, _)| v.iter().zip(simplex[0].0.iter()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max))
            .fold(0.0, f64::max);
        if spread < SIMPLEX_TOLERANCE {
            return (simplex[0].0, simplex[0].1, true);
        }
        if *evals >= MAX_EVALUATIONS {
            return (simplex[0].0, simplex[0].1, false);
        }

        let mut centroid = [0.0; DIM];
        for (v, _) in &simplex[..DIM] {
            for k in 0..DIM {
                centroid[k] += v[k] / DIM as f64;
            }
        }
        let worst = simplex[DIM];
        let along = |t: f64| -> [f64; DIM] {
            let mut p = [0.0; DIM];
            for k in 0..DIM {
                p[k] = centroid[k] + t * (worst.0[k] - centroid[k]);
            }
            p
        };

        let xr = along(-1.0);
        let fr = f(&xr);
        *evals += 1;
        if fr < simplex[0].1 {
            let xe = along(-2.0);
            let fe = f(&xe);
            *evals += 1;
            simplex[DIM] = if fe < fr { (xe, fe) } else { (xr, fr) };
            continue;
        }
        if fr < simplex[DIM - 1].1 {
            simplex[DIM] = (xr, fr);
            continue;
        }
        let (xc, fc) = if fr < worst.1 {
            let x = along(-0.5);
            (x, f(&x))
        } else {
            let x = along(0.5);
            (x, f(&x))
        };
        *evals += 1;
        if fc < worst.1.min(fr) {
            simplex[DIM] = (xc, fc);
            continue;
        }
        // shrink towards the best vertex
        let best = simplex[0].0;
        for (v, fv) in simplex.iter_mut().skip(1) {
            for k in 0..DIM {
                v[k] = best[k] + 0.5 * (v[k] - best[k]);
            }
            *fv = f(v);
        }
        *evals += DIM;
    }
}

#[cfg(test)]
mod tests {
    use super::super::murine_samples;
    use super::*;

    fn synthetic(p: &CarreauYasudaParams) -> Vec<ViscositySample> {
        [0.1, 0.3, 1.0, 3.0, 10.0, 30.0, 100.0, 300.0, 1000.0, 3000.0]
            .iter()
            .map(|&g| ViscositySample { shear_rate: g, viscosity: p.eval_viscosity(g).unwrap(), source_label: "synthetic".into() })
            .collect()
    }

    #[test]
    fn recovers_exact_synthetic_parameters() {
        let truth = CarreauYasudaParams::new(12e-3, 3.5e-3, 0.5, 1.8, 0.35).unwrap();
        let rep = fit_cy_default(&synthetic(&truth)).unwrap();
        let p = rep.params;
        for (got, want) in [(p.eta0, truth.eta0), (p.eta_inf, truth.eta_inf), (p.lambda, truth.lambda), (p.a, truth.a), (p.n, truth.n)] {
            assert!((got - want).abs() / want < 1e-3, "{got} vs {want}");
        }
        assert!(rep.rms < 1e-9);
    }

    #[test]
    fn too_few_samples() {
        let s = murine_samples();
        assert!(matches!(fit_cy_default(&s[..3]), Err(Error::Domain(_))));
    }

    #[test]
    fn narrow_range_rejected() {
        let s: Vec<_> = (0..8)
            .map(|i| ViscositySample { shear_rate: 10.0 + i as f64, viscosity: 5e-3, source_label: String::new() })
            .collect();
        assert!(fit_cy_default(&s).is_err());
    }

    #[test]
    fn refit_is_idempotent() {
        let s = murine_samples();
        let first = fit_cy_default(&s).unwrap();
        let second = fit_cy(&s, &first.params).unwrap();
        assert!((second.rms - first.rms).abs() / first.rms < 1e-12, "{} {}", first.rms, second.rms);
    }
}
