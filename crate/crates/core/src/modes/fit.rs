//! Elliptical 2D Gaussian fit by damped least squares.
//!
//! Model: `A exp(-q/2) + B`, with `q` the quadratic form of a rotated
//! covariance `R^T diag(sa, sb) R`. The fit runs in pixel units and converts
//! to metres at the end.

use nalgebra::{SMatrix, SVector};

use crate::error::{Error, Result};
use crate::grid::IntensityMap;

const NPARAM: usize = 7;
const MAX_ITERATIONS: usize = 200;
const STEP_TOLERANCE: f64 = 1e-10;

type Mat = SMatrix<f64, NPARAM, NPARAM>;
type Vect = SVector<f64, NPARAM>;

/// Result of [`fit_gaussian_2d`]. Variances are in m^2 along the principal
/// axes; `angle` is the rotation of the first axis from x, in `[-pi/4, pi/4]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianFit {
    pub amplitude: f64,
    pub centroid: (f64, f64),
    pub sigma_x2: f64,
    pub sigma_y2: f64,
    pub angle: f64,
    pub offset: f64,
    /// L2 norm of the residual over all samples.
    pub residual_norm: f64,
    /// `residual_norm` divided by the L2 norm of the data.
    pub relative_residual: f64,
    pub iterations: usize,
}

impl GaussianFit {
    pub fn mean_sigma2(&self) -> f64 {
        0.5 * (self.sigma_x2 + self.sigma_y2)
    }
}

// [A, x0, y0, sa, sb, theta, B]
#[derive(Clone, Copy)]
struct Params([f64; NPARAM]);

impl Params {
    fn eval(&self, u: f64, v: f64) -> (f64, [f64; NPARAM]) {
        let [a, x0, y0, sa, sb, th, b] = self.0;
        let (s, c) = th.sin_cos();
        let du = u - x0;
        let dv = v - y0;
        let p = c * du + s * dv;
        let q = -s * du + c * dv;
        let quad = p * p / sa + q * q / sb;
        let g = (-0.5 * quad).exp();
        let ag = -0.5 * a * g;
        let dq_dx0 = -2.0 * p * c / sa + 2.0 * q * s / sb;
        let dq_dy0 = -2.0 * p * s / sa - 2.0 * q * c / sb;
        let dq_dsa = -p * p / (sa * sa);
        let dq_dsb = -q * q / (sb * sb);
        let dq_dth = 2.0 * p * q / sa - 2.0 * p * q / sb;
        (
            a * g + b,
            [
                g,
                ag * dq_dx0,
                ag * dq_dy0,
                ag * dq_dsa,
                ag * dq_dsb,
                ag * dq_dth,
                1.0,
            ],
        )
    }
}

struct Samples<'a> {
    map: &'a IntensityMap,
    us: Vec<f64>,
    vs: Vec<f64>,
}

impl<'a> Samples<'a> {
    fn new(map: &'a IntensityMap) -> Self {
        let g = map.grid();
        let us = (0..g.nx())
            .map(|i| i as f64 + 0.5 - g.nx() as f64 / 2.0)
            .collect();
        let vs = (0..g.ny())
            .map(|i| i as f64 + 0.5 - g.ny() as f64 / 2.0)
            .collect();
        Self { map, us, vs }
    }

    fn cost(&self, p: &Params) -> f64 {
        let mut c = 0.0;
        for (iy, &v) in self.vs.iter().enumerate() {
            for (ix, &u) in self.us.iter().enumerate() {
                let r = self.map.at(ix, iy) - p.eval(u, v).0;
                c += r * r;
            }
        }
        c
    }

    fn normal_equations(&self, p: &Params) -> (Mat, Vect, f64) {
        let mut jtj = Mat::zeros();
        let mut jtr = Vect::zeros();
        let mut cost = 0.0;
        for (iy, &v) in self.vs.iter().enumerate() {
            for (ix, &u) in self.us.iter().enumerate() {
                let (f, j) = p.eval(u, v);
                let r = self.map.at(ix, iy) - f;
                cost += r * r;
                for a in 0..NPARAM {
                    jtr[a] += j[a] * r;
                    for b in a..NPARAM {
                        jtj[(a, b)] += j[a] * j[b];
                    }
                }
            }
        }
        for a in 0..NPARAM {
            for b in 0..a {
                jtj[(a, b)] = jtj[(b, a)];
            }
        }
        (jtj, jtr, cost)
    }

    fn data_norm(&self) -> f64 {
        self.map.values().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    /// Moment-based seed in pixel units.
    fn seed(&self) -> Params {
        let vals = self.map.values();
        let lo = vals.iter().copied().fold(f64::INFINITY, f64::min).max(0.0);
        let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let (mut s0, mut su, mut sv) = (0.0, 0.0, 0.0);
        for (iy, &v) in self.vs.iter().enumerate() {
            for (ix, &u) in self.us.iter().enumerate() {
                let w = (self.map.at(ix, iy) - lo).max(0.0);
                s0 += w;
                su += w * u;
                sv += w * v;
            }
        }
        let (cu, cv) = (su / s0, sv / s0);
        let (mut cuu, mut cuv, mut cvv) = (0.0, 0.0, 0.0);
        for (iy, &v) in self.vs.iter().enumerate() {
            for (ix, &u) in self.us.iter().enumerate() {
                let w = (self.map.at(ix, iy) - lo).max(0.0);
                cuu += w * (u - cu) * (u - cu);
                cuv += w * (u - cu) * (v - cv);
                cvv += w * (v - cv) * (v - cv);
            }
        }
        let (sa, sb, th) = principal_axes(cuu / s0, cuv / s0, cvv / s0);
        Params([hi - lo, cu, cv, sa.max(0.25), sb.max(0.25), th, lo])
    }
}

/// Eigen-decomposition of a 2x2 covariance, returning `(var_a, var_b, angle)`
/// with `angle` in `[-pi/4, pi/4]` and `var_a` the variance along it.
fn principal_axes(cxx: f64, cxy: f64, cyy: f64) -> (f64, f64, f64) {
    let mut th = 0.5 * (2.0 * cxy).atan2(cxx - cyy);
    if th > std::f64::consts::FRAC_PI_4 {
        th -= std::f64::consts::FRAC_PI_2;
    } else if th < -std::f64::consts::FRAC_PI_4 {
        th += std::f64::consts::FRAC_PI_2;
    }
    let (s, c) = th.sin_cos();
    let va = cxx * c * c + 2.0 * cxy * s * c + cyy * s * s;
    let vb = cxx * s * s - 2.0 * cxy * s * c + cyy * c * c;
    (va, vb, th)
}

fn to_physical(
    map: &IntensityMap,
    p: &Params,
    cost: f64,
    norm: f64,
    iterations: usize,
) -> GaussianFit {
    let g = map.grid();
    let [a, x0, y0, sa, sb, th, b] = p.0;
    let (s, c) = th.sin_cos();
    // Pixel covariance R^T diag(sa, sb) R with R = [[c, s], [-s, c]].
    let puu = c * c * sa + s * s * sb;
    let puv = c * s * (sa - sb);
    let pvv = s * s * sa + c * c * sb;
    let (dx, dy) = (g.dx(), g.dy());
    let (va, vb, angle) = principal_axes(puu * dx * dx, puv * dx * dy, pvv * dy * dy);
    let residual_norm = cost.max(0.0).sqrt();
    GaussianFit {
        amplitude: a,
        centroid: (x0 * dx, y0 * dy),
        sigma_x2: va,
        sigma_y2: vb,
        angle,
        offset: b,
        residual_norm,
        relative_residual: if norm > 0.0 {
            residual_norm / norm
        } else {
            0.0
        },
        iterations,
    }
}

/// Least-squares elliptical Gaussian fit to an intensity map.
///
/// Seeds from intensity moments, then runs Levenberg-Marquardt with a
/// 200-iteration cap and a 1e-10 relative step tolerance. On non-convergence
/// the error carries the moment-based estimate.
pub fn fit_gaussian_2d(map: &IntensityMap) -> Result<GaussianFit> {
    if !map.values().iter().any(|&v| v > 0.0) {
        return Err(Error::ZeroPower);
    }
    let samples = Samples::new(map);
    let norm = samples.data_norm();
    let seed = samples.seed();
    let mut p = seed;
    let mut lambda = 1e-3;

    for iter in 1..=MAX_ITERATIONS {
        let (jtj, jtr, cost) = samples.normal_equations(&p);
        if cost == 0.0 {
            return Ok(to_physical(map, &p, cost, norm, iter));
        }
        let max_diag = (0..NPARAM).map(|i| jtj[(i, i)]).fold(0.0, f64::max);
        loop {
            let mut damped = jtj;
            for i in 0..NPARAM {
                damped[(i, i)] += lambda * jtj[(i, i)].max(1e-12 * max_diag);
            }
            let step = damped.cholesky().map(|ch| ch.solve(&jtr));
            let accepted = step.and_then(|delta| {
                let mut trial = p;
                for i in 0..NPARAM {
                    trial.0[i] += delta[i];
                }
                if !(trial.0[3] > 0.0 && trial.0[4] > 0.0) {
                    return None;
                }
                let c = samples.cost(&trial);
                (c < cost).then_some((trial, delta))
            });
            match accepted {
                Some((trial, delta)) => {
                    let scale = [
                        trial.0[0].abs(),
                        1.0,
                        1.0,
                        trial.0[3],
                        trial.0[4],
                        1.0,
                        trial.0[0].abs(),
                    ];
                    let small = (0..NPARAM)
                        .all(|i| delta[i].abs() <= STEP_TOLERANCE * (trial.0[i].abs() + scale[i]));
                    p = trial;
                    lambda = (lambda * 0.1).max(1e-15);
                    if small {
                        let c = samples.cost(&p);
                        return Ok(to_physical(map, &p, c, norm, iter));
                    }
                    break;
                }
                None => {
                    lambda *= 10.0;
                    if lambda > 1e12 {
                        // No descent direction left at working precision.
                        return Ok(to_physical(map, &p, cost, norm, iter));
                    }
                }
            }
        }
    }

    let estimate = to_physical(map, &seed, samples.cost(&seed), norm, MAX_ITERATIONS);
    Err(Error::FitNotConverged {
        iterations: MAX_ITERATIONS,
        estimate: Box::new(estimate),
    })
}
