//! Test oracles written independently of the library code.
#![allow(dead_code)]

use etiquette_core::extract::{RoadClass, TrajectorySample, Trip};

/// Adaptive Simpson quadrature on a finite interval.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(fa: f64, fm: f64, fb: f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (fa + 4.0 * fm + fb)
    }
    #[allow(clippy::too_many_arguments)]
    fn recurse(
        f: &dyn Fn(f64) -> f64,
        a: f64,
        b: f64,
        fa: f64,
        fm: f64,
        fb: f64,
        whole: f64,
        tol: f64,
        depth: u32,
    ) -> f64 {
        let m = 0.5 * (a + b);
        let lm = 0.5 * (a + m);
        let rm = 0.5 * (m + b);
        let flm = f(lm);
        let frm = f(rm);
        let left = simpson(fa, flm, fm, a, m);
        let right = simpson(fm, frm, fb, m, b);
        let delta = left + right - whole;
        if depth == 0 || (depth < MAX_DEPTH - MIN_DEPTH && delta.abs() <= 15.0 * tol) {
            return left + right + delta / 15.0;
        }
        recurse(f, a, m, fa, flm, fm, left, tol / 2.0, depth - 1)
            + recurse(f, m, b, fm, frm, fb, right, tol / 2.0, depth - 1)
    }
    let fa = f(a);
    let fb = f(b);
    let fm = f(0.5 * (a + b));
    recurse(f, a, b, fa, fm, fb, simpson(fa, fm, fb, a, b), tol, MAX_DEPTH)
}

const MAX_DEPTH: u32 = 50;
/// Refinement levels forced before the error test, so narrow peaks are not
/// missed by a coarse first panel.
const MIN_DEPTH: u32 = 6;

/// Integral of `f` over `(lo, hi)` where either end may be infinite.
/// Infinite ends are mapped onto a finite interval with
/// `x = c + scale * u / (1 - u)`; `scale` should match the width of `f`.
pub fn integrate(f: &dyn Fn(f64) -> f64, lo: f64, hi: f64, scale: f64, tol: f64) -> f64 {
    match (lo.is_finite(), hi.is_finite()) {
        (true, true) => adaptive_simpson(f, lo, hi, tol),
        (true, false) => {
            let g = |u: f64| {
                if u >= 1.0 {
                    return 0.0;
                }
                let x = lo + scale * u / (1.0 - u);
                scale * f(x) / ((1.0 - u) * (1.0 - u))
            };
            adaptive_simpson(&g, 0.0, 1.0, tol)
        }
        (false, true) => {
            let g = |u: f64| {
                if u >= 1.0 {
                    return 0.0;
                }
                let x = hi - scale * u / (1.0 - u);
                scale * f(x) / ((1.0 - u) * (1.0 - u))
            };
            adaptive_simpson(&g, 0.0, 1.0, tol)
        }
        (false, false) => {
            integrate(f, f64::NEG_INFINITY, 0.0, scale, tol / 2.0) + integrate(f, 0.0, f64::INFINITY, scale, tol / 2.0)
        }
    }
}

/// One-sample Kolmogorov-Smirnov statistic against a continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0_f64, |d, (i, &x)| {
        let f = cdf(x);
        d.max(f - i as f64 / n).max((i + 1) as f64 / n - f)
    })
}

/// GEV CDF from its closed form, with the Gumbel limit at `k == 0`.
pub fn gev_cdf_oracle(k: f64, sigma: f64, mu: f64, x: f64) -> f64 {
    let z = (x - mu) / sigma;
    if k == 0.0 {
        return (-(-z).exp()).exp();
    }
    let t = 1.0 + k * z;
    if t <= 0.0 {
        return if k > 0.0 { 0.0 } else { 1.0 };
    }
    (-t.powf(-1.0 / k)).exp()
}

pub fn median(xs: &mut [f64]) -> f64 {
    xs.sort_by(|a, b| a.total_cmp(b));
    let n = xs.len();
    if n % 2 == 1 {
        xs[n / 2]
    } else {
        0.5 * (xs[n / 2 - 1] + xs[n / 2])
    }
}

pub fn rel_err(got: f64, want: f64) -> f64 {
    (got - want).abs() / want.abs()
}

/// A 10 Hz sample that satisfies every car-following criterion: host at
/// 20 m/s inside the default box, leader 30 m ahead in the same lane.
pub fn following_sample(t: f64) -> TrajectorySample {
    TrajectorySample {
        t,
        lat_deg: 42.3,
        lon_deg: -83.7,
        v: 20.0,
        a: 0.0,
        brake: false,
        range: Some(30.0),
        range_rate: Some(0.0),
        target_offset: Some(0.0),
        lane_offset: 0.0,
        link_id: Some("L1".into()),
        road_class: RoadClass::Highway,
        posted_limit: Some(29.06),
    }
}

/// `n` samples at 0.1 s spacing, each adjusted by `edit(index, sample)`.
pub fn trip_from(n: usize, mut edit: impl FnMut(usize, &mut TrajectorySample)) -> Trip {
    let samples = (0..n)
        .map(|i| {
            let mut s = following_sample(i as f64 / 10.0);
            edit(i, &mut s);
            s
        })
        .collect();
    Trip {
        trip_id: "fixture".into(),
        driver_id: "drv".into(),
        samples,
    }
}
