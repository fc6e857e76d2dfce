//! Range-dependent feedback gains `a = K_D(R) Rdot + K_P(R) (R - Th_d v)`
//! with `K_D`, `K_P` cubic in range, fitted by bisquare-weighted IRLS.

use log::debug;
use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::{EstimateError, Result};
use crate::dist::percentile_sorted;
use crate::extract::{CarFollowingEpisode, RoadClass};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainPolynomials {
    pub driver_id: String,
    pub road_class: RoadClass,
    /// Coefficients of `K_D(R)` in increasing powers of range.
    pub kd: [f64; 4],
    /// Coefficients of `K_P(R)` in increasing powers of range.
    pub kp: [f64; 4],
    /// Desired time headway, s.
    pub desired_headway: f64,
    /// 2.5th to 97.5th percentile of the fitted ranges, m.
    pub fit_range: (f64, f64),
}

fn horner(c: &[f64; 4], r: f64) -> f64 {
    ((c[3] * r + c[2]) * r + c[1]) * r + c[0]
}

impl GainPolynomials {
    pub fn kd_at(&self, range: f64) -> f64 {
        horner(&self.kd, range)
    }

    pub fn kp_at(&self, range: f64) -> f64 {
        horner(&self.kp, range)
    }

    /// True when `range` lies inside the supporting data; outside it the
    /// polynomials are extrapolating.
    pub fn in_fit_range(&self, range: f64) -> bool {
        (self.fit_range.0..=self.fit_range.1).contains(&range)
    }

    /// Model acceleration for the given range, range rate and host speed.
    pub fn accel(&self, range: f64, range_rate: f64, v: f64) -> f64 {
        self.kd_at(range) * range_rate + self.kp_at(range) * (range - self.desired_headway * v)
    }
}

/// One regression observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainSample {
    pub range: f64,
    pub range_rate: f64,
    pub v: f64,
    pub a: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GainFitOptions {
    pub min_samples: usize,
    /// Minimum width of the observed range interval, m.
    pub min_range_span: f64,
    pub max_iter: usize,
    /// Stop when the largest coefficient change falls below this.
    pub tol: f64,
    /// Bisquare tuning constant in units of the residual scale.
    pub tuning: f64,
    /// Search the desired headway jointly instead of fixing it to the mean headway.
    pub cofit_headway: bool,
}

impl Default for GainFitOptions {
    fn default() -> Self {
        Self {
            min_samples: 5000,
            min_range_span: 20.0,
            max_iter: 50,
            tol: 1e-8,
            tuning: 4.685,
            cofit_headway: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct GainFit {
    pub gains: GainPolynomials,
    pub iterations: usize,
    pub converged: bool,
    /// Robust objective after the initial least-squares fit and after each reweighting.
    pub objective: Vec<f64>,
    pub residual_rms: f64,
    /// Residual scale used for the bisquare weights.
    pub scale: f64,
}

/// Fits one driver's gains from all of their car-following samples.
pub fn fit_gain_polynomials<'a>(
    episodes: impl IntoIterator<Item = &'a CarFollowingEpisode>,
    opts: &GainFitOptions,
) -> Result<GainFit> {
    let episodes: Vec<&CarFollowingEpisode> = episodes.into_iter().collect();
    let first = episodes.first().ok_or_else(|| EstimateError::InsufficientData {
        what: "gain fit".into(),
        needed: opts.min_samples,
        got: 0,
    })?;
    let samples: Vec<GainSample> = episodes
        .iter()
        .flat_map(|e| e.samples.iter())
        .filter_map(|s| {
            Some(GainSample {
                range: s.range?,
                range_rate: s.range_rate?,
                v: s.v,
                a: s.a,
            })
        })
        .collect();
    let headway = if samples.is_empty() {
        0.0
    } else {
        samples.iter().map(|s| s.range / s.v).sum::<f64>() / samples.len() as f64
    };
    fit_gain_samples(&first.driver_id, first.road_class, &samples, headway, opts)
}

/// Fits gains from raw observations. `headway` is the desired headway used
/// unless `cofit_headway` is set, in which case it only seeds the search.
pub fn fit_gain_samples(
    driver_id: &str,
    road_class: RoadClass,
    samples: &[GainSample],
    headway: f64,
    opts: &GainFitOptions,
) -> Result<GainFit> {
    if samples.len() < opts.min_samples {
        return Err(EstimateError::InsufficientData {
            what: format!("gain fit for driver {driver_id}"),
            needed: opts.min_samples,
            got: samples.len(),
        });
    }
    let mut ranges: Vec<f64> = samples.iter().map(|s| s.range).collect();
    ranges.sort_by(f64::total_cmp);
    let (r_lo, r_hi) = (ranges[0], ranges[ranges.len() - 1]);
    if !(r_hi - r_lo >= opts.min_range_span) {
        return Err(EstimateError::DegenerateGeometry(format!(
            "ranges span {:.3} m, need at least {} m",
            r_hi - r_lo,
            opts.min_range_span
        )));
    }
    let basis = RangeBasis {
        center: 0.5 * (r_lo + r_hi),
        half_width: 0.5 * (r_hi - r_lo),
    };

    let headway = if opts.cofit_headway {
        search_headway(samples, &basis, headway)?
    } else {
        headway
    };
    let design = basis.design(samples, headway);
    let y = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.a));
    let robust = irls(&design, &y, opts)?;

    let (kd, kp) = basis.to_range_powers(&robust.beta);
    let gains = GainPolynomials {
        driver_id: driver_id.to_string(),
        road_class,
        kd,
        kp,
        desired_headway: headway,
        fit_range: (
            percentile_sorted(&ranges, 0.025).unwrap_or(r_lo),
            percentile_sorted(&ranges, 0.975).unwrap_or(r_hi),
        ),
    };
    Ok(GainFit {
        gains,
        iterations: robust.iterations,
        converged: robust.converged,
        objective: robust.objective,
        residual_rms: robust.residual_rms,
        scale: robust.scale,
    })
}

/// Range is mapped to `u = (R - center) / half_width` for conditioning.
struct RangeBasis {
    center: f64,
    half_width: f64,
}

impl RangeBasis {
    fn design(&self, samples: &[GainSample], headway: f64) -> DMatrix<f64> {
        DMatrix::from_fn(samples.len(), 8, |i, j| {
            let s = &samples[i];
            let u = (s.range - self.center) / self.half_width;
            let base = if j < 4 { s.range_rate } else { s.range - headway * s.v };
            base * u.powi((j % 4) as i32)
        })
    }

    /// Expands `sum_j b_j u^j` into powers of `R`.
    fn to_range_powers(&self, beta: &DVector<f64>) -> ([f64; 4], [f64; 4]) {
        let binom = [
            [1.0, 0.0, 0.0, 0.0],
            [1.0, 1.0, 0.0, 0.0],
            [1.0, 2.0, 1.0, 0.0],
            [1.0, 3.0, 3.0, 1.0],
        ];
        let convert = |b: &[f64]| {
            let mut c = [0.0; 4];
            for (j, bj) in b.iter().enumerate() {
                let scale = bj / self.half_width.powi(j as i32);
                for (m, cm) in c.iter_mut().enumerate().take(j + 1) {
                    *cm += scale * binom[j][m] * (-self.center).powi((j - m) as i32);
                }
            }
            c
        };
        (convert(&beta.as_slice()[0..4]), convert(&beta.as_slice()[4..8]))
    }
}

struct RobustSolution {
    beta: DVector<f64>,
    iterations: usize,
    converged: bool,
    objective: Vec<f64>,
    residual_rms: f64,
    scale: f64,
}

/// Weighted least squares through a column-scaled QR factorization.
fn weighted_lstsq(x: &DMatrix<f64>, y: &DVector<f64>, w: Option<&DVector<f64>>) -> Result<DVector<f64>> {
    let (n, p) = x.shape();
    let mut a = x.clone();
    let mut b = y.clone();
    if let Some(w) = w {
        for i in 0..n {
            let sw = w[i].sqrt();
            a.row_mut(i).scale_mut(sw);
            b[i] *= sw;
        }
    }
    let norms: Vec<f64> = (0..p).map(|j| a.column(j).norm()).collect();
    let max_norm = norms.iter().cloned().fold(0.0, f64::max);
    if !(max_norm > 0.0) {
        return Err(EstimateError::DegenerateGeometry("all regressors vanish".into()));
    }
    for (j, nj) in norms.iter().enumerate() {
        if *nj <= 1e-12 * max_norm {
            return Err(EstimateError::DegenerateGeometry(format!(
                "regressor {j} has no variation"
            )));
        }
        a.column_mut(j).scale_mut(1.0 / nj);
    }
    let qr = a.qr();
    let r = qr.r();
    let diag_max = r.diagonal().amax();
    if r.diagonal().iter().any(|d| d.abs() <= 1e-10 * diag_max) {
        return Err(EstimateError::DegenerateGeometry(
            "regressor matrix is rank deficient".into(),
        ));
    }
    qr.q_tr_mul(&mut b);
    let top = b.rows(0, p).into_owned();
    let mut beta = r
        .solve_upper_triangular(&top)
        .ok_or_else(|| EstimateError::DegenerateGeometry("singular triangular factor".into()))?;
    for (j, nj) in norms.iter().enumerate() {
        beta[j] /= nj;
    }
    Ok(beta)
}

fn bisquare_rho(u: f64, c: f64) -> f64 {
    let c2 = c * c / 6.0;
    if u.abs() >= c {
        c2
    } else {
        c2 * (1.0 - (1.0 - (u / c).powi(2)).powi(3))
    }
}

fn median(v: &mut [f64]) -> f64 {
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// Median absolute deviation about the median, scaled to a normal standard deviation.
fn mad_scale(residuals: &DVector<f64>) -> f64 {
    let mut r: Vec<f64> = residuals.iter().cloned().collect();
    let m = median(&mut r);
    let mut dev: Vec<f64> = r.iter().map(|x| (x - m).abs()).collect();
    median(&mut dev) / 0.6745
}

/// Bisquare IRLS. The residual scale is fixed from the least-squares start so
/// that every reweighting step lowers the same objective.
fn irls(x: &DMatrix<f64>, y: &DVector<f64>, opts: &GainFitOptions) -> Result<RobustSolution> {
    let c = opts.tuning;
    let n = y.len() as f64;
    let mut beta = weighted_lstsq(x, y, None)?;
    let mut resid = y - x * &beta;
    let scale = mad_scale(&resid);
    let y_scale = (y.norm_squared() / n).sqrt().max(1e-300);
    let objective_of = |r: &DVector<f64>| r.iter().map(|ri| bisquare_rho(ri / scale, c)).sum::<f64>();

    if !(scale > 1e-12 * y_scale) {
        // Exact fit: every weight is one and least squares is already the answer.
        return Ok(RobustSolution {
            residual_rms: (resid.norm_squared() / n).sqrt(),
            beta,
            iterations: 0,
            converged: true,
            objective: vec![0.0],
            scale,
        });
    }

    let mut objective = vec![objective_of(&resid)];
    let mut converged = false;
    let mut iterations = 0;
    while iterations < opts.max_iter {
        iterations += 1;
        let w = DVector::from_iterator(
            resid.len(),
            resid.iter().map(|ri| {
                let u = ri / (c * scale);
                if u.abs() < 1.0 {
                    (1.0 - u * u).powi(2)
                } else {
                    0.0
                }
            }),
        );
        let next = weighted_lstsq(x, y, Some(&w))?;
        let change = (&next - &beta).amax();
        let size = beta.amax().max(1.0);
        beta = next;
        resid = y - x * &beta;
        objective.push(objective_of(&resid));
        if change <= opts.tol * size {
            converged = true;
            break;
        }
    }
    debug!("irls finished after {iterations} iterations (converged: {converged})");
    Ok(RobustSolution {
        residual_rms: (resid.norm_squared() / n).sqrt(),
        beta,
        iterations,
        converged,
        objective,
        scale,
    })
}

/// Golden-section search of the desired headway minimizing the least-squares residual.
fn search_headway(samples: &[GainSample], basis: &RangeBasis, seed: f64) -> Result<f64> {
    let y = DVector::from_iterator(samples.len(), samples.iter().map(|s| s.a));
    let rss = |h: f64| -> f64 {
        let x = basis.design(samples, h);
        match weighted_lstsq(&x, &y, None) {
            Ok(b) => (&y - &x * b).norm_squared(),
            Err(_) => f64::INFINITY,
        }
    };
    let (mut lo, mut hi) = (0.1_f64.min(seed * 0.25), 5.0_f64.max(seed * 2.0));
    let g = (5.0_f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - g * (hi - lo);
    let mut b = lo + g * (hi - lo);
    let (mut fa, mut fb) = (rss(a), rss(b));
    for _ in 0..80 {
        if fa < fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - g * (hi - lo);
            fa = rss(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + g * (hi - lo);
            fb = rss(b);
        }
        if hi - lo < 1e-6 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
