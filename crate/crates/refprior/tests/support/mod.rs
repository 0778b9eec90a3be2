//! Independent numeric oracles for the integration suites.
//!
//! Everything here recomputes reference values from first principles,
//! through quadrature and truncated summation, deliberately avoiding the
//! library's own closed forms so agreement is evidence rather than tautology.

// Each integration test target compiles its own copy of this module and
// uses a different subset of the oracles.
#![allow(dead_code)]

use refprior::models::{Dataset, LikelihoodModel, ModelKind};

/// Composite Simpson integration of `f` over `[lo, hi]` with `n` panels
/// (`n` even).
pub fn simpson(f: impl Fn(f64) -> f64, lo: f64, hi: f64, n: usize) -> f64 {
    assert!(n >= 2 && n % 2 == 0, "simpson needs an even panel count");
    let h = (hi - lo) / n as f64;
    let mut acc = f(lo) + f(hi);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(lo + h * i as f64);
    }
    acc * h / 3.0
}

fn gauss_pdf(x: f64, m: f64, sd: f64) -> f64 {
    let z = (x - m) / sd;
    (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt())
}

fn ln_fact(k: usize) -> f64 {
    (1..=k).map(|i| (i as f64).ln()).sum()
}

fn poisson_pmf(k: usize, lam: f64) -> f64 {
    ((k as f64) * lam.ln() - lam - ln_fact(k)).exp()
}

/// KL divergence per observation between two members of a family, computed
/// by brute force: quadrature over a wide interval for the continuous
/// families, truncated summation for the discrete ones.
pub fn kld_oracle(model: &LikelihoodModel, a: &[f64], b: &[f64]) -> f64 {
    match model.kind() {
        ModelKind::BernoulliMean => {
            let (p, q) = (a[0], b[0]);
            let mut acc = 0.0;
            if p > 0.0 {
                acc += p * (p / q).ln();
            }
            if p < 1.0 {
                acc += (1.0 - p) * ((1.0 - p) / (1.0 - q)).ln();
            }
            acc
        }
        ModelKind::GaussianMean { sigma } => {
            let span = 12.0 * sigma + (a[0] - b[0]).abs();
            let lo = a[0].min(b[0]) - span;
            let hi = a[0].max(b[0]) + span;
            simpson(
                |x| {
                    let pa = gauss_pdf(x, a[0], sigma);
                    if pa == 0.0 {
                        0.0
                    } else {
                        pa * (gauss_pdf(x, a[0], sigma).ln() - gauss_pdf(x, b[0], sigma).ln())
                    }
                },
                lo,
                hi,
                20_000,
            )
        }
        ModelKind::GaussianScale { mu } => {
            // Diagonal family: per-dimension divergences add up.
            a.iter()
                .zip(b)
                .map(|(&sa, &sb)| {
                    let span = 14.0 * sa.max(sb);
                    simpson(
                        |x| {
                            let pa = gauss_pdf(x, mu, sa);
                            if pa == 0.0 {
                                0.0
                            } else {
                                pa * (gauss_pdf(x, mu, sa).ln() - gauss_pdf(x, mu, sb).ln())
                            }
                        },
                        mu - span,
                        mu + span,
                        20_000,
                    )
                })
                .sum()
        }
        ModelKind::PoissonRate => {
            let (la, lb) = (a[0], b[0]);
            let mut acc = 0.0;
            let kmax = (la + 60.0 * la.sqrt().max(1.0)) as usize + 60;
            for k in 0..=kmax {
                let pa = poisson_pmf(k, la);
                if pa > 0.0 {
                    acc += pa * (pa.ln() - (poisson_pmf(k, lb)).ln());
                }
            }
            acc
        }
    }
}

/// Differential or discrete entropy per observation, by the same brute force.
pub fn entropy_oracle(model: &LikelihoodModel, theta: &[f64]) -> f64 {
    match model.kind() {
        ModelKind::BernoulliMean => {
            let p = theta[0];
            let mut acc = 0.0;
            if p > 0.0 {
                acc -= p * p.ln();
            }
            if p < 1.0 {
                acc -= (1.0 - p) * (1.0 - p).ln();
            }
            acc
        }
        ModelKind::GaussianMean { sigma } => {
            simpson(
                |x| {
                    let p = gauss_pdf(x, theta[0], sigma);
                    if p == 0.0 {
                        0.0
                    } else {
                        -p * p.ln()
                    }
                },
                theta[0] - 14.0 * sigma,
                theta[0] + 14.0 * sigma,
                20_000,
            )
        }
        ModelKind::GaussianScale { mu } => theta
            .iter()
            .map(|&sd| {
                simpson(
                    |x| {
                        let p = gauss_pdf(x, mu, sd);
                        if p == 0.0 {
                            0.0
                        } else {
                            -p * p.ln()
                        }
                    },
                    mu - 14.0 * sd,
                    mu + 14.0 * sd,
                    20_000,
                )
            })
            .sum(),
        ModelKind::PoissonRate => {
            let lam = theta[0];
            let kmax = (lam + 60.0 * lam.sqrt().max(1.0)) as usize + 60;
            (0..=kmax)
                .map(|k| {
                    let p = poisson_pmf(k, lam);
                    if p > 0.0 {
                        -p * p.ln()
                    } else {
                        0.0
                    }
                })
                .sum()
        }
    }
}

/// Log-likelihood recomputed observation by observation from pdf/pmf
/// formulas, independent of the library's sufficient-statistic path.
pub fn log_likelihood_oracle(model: &LikelihoodModel, theta: &[f64], data: &Dataset) -> f64 {
    let dims = model.obs_dim();
    data.values
        .chunks(dims)
        .map(|obs| match model.kind() {
            ModelKind::BernoulliMean => {
                if obs[0] > 0.5 {
                    theta[0].ln()
                } else {
                    (1.0 - theta[0]).ln()
                }
            }
            ModelKind::GaussianMean { sigma } => gauss_pdf(obs[0], theta[0], sigma).ln(),
            ModelKind::GaussianScale { mu } => obs
                .iter()
                .zip(theta)
                .map(|(&x, &sd)| gauss_pdf(x, mu, sd).ln())
                .sum(),
            ModelKind::PoissonRate => {
                let k = obs[0] as usize;
                (k as f64) * theta[0].ln() - theta[0] - ln_fact(k)
            }
        })
        .sum()
}

/// Central finite difference of a scalar function.
pub fn central_diff(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x + h) - f(x - h)) / (2.0 * h)
}

/// Relative-or-absolute gradient agreement: `|got - want|` within `rel` of
/// `|want|`, or within `abs` outright for near-zero targets.
pub fn grad_close(got: f64, want: f64, rel: f64, abs: f64) -> bool {
    let diff = (got - want).abs();
    diff <= abs || diff <= rel * want.abs()
}
