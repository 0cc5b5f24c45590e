//! Degree-1 local regression with a tricube kernel over a nearest-neighbour window.

use std::cmp::Ordering;

/// Above this many distinct abscissae, fits are computed at this many
/// evenly spaced order statistics and linearly interpolated in between.
pub const MAX_EXACT_VERTICES: usize = 1000;

#[derive(Debug, Clone)]
pub struct LocalLinear {
    xs: Vec<f64>,
    ys: Vec<f64>,
    window: usize,
}

fn tricube(u: f64) -> f64 {
    if u >= 1.0 {
        0.0
    } else {
        let t = 1.0 - u * u * u;
        t * t * t
    }
}

impl LocalLinear {
    /// `span` is the fraction of points in each local window.
    pub fn new(xs: &[f64], ys: &[f64], span: f64) -> Self {
        assert_eq!(xs.len(), ys.len());
        let mut order: Vec<usize> = (0..xs.len()).collect();
        order.sort_by(|&a, &b| xs[a].partial_cmp(&xs[b]).unwrap_or(Ordering::Equal));
        let n = xs.len();
        let window = ((span * n as f64).floor() as usize).clamp(3.min(n), n);
        LocalLinear {
            xs: order.iter().map(|&i| xs[i]).collect(),
            ys: order.iter().map(|&i| ys[i]).collect(),
            window,
        }
    }

    /// Local-linear fit evaluated at `x0`.
    pub fn fit_at(&self, x0: f64) -> f64 {
        let n = self.xs.len();
        let pos = self.xs.partition_point(|&x| x < x0);
        let (mut lo, mut hi) = (pos, pos);
        while hi - lo < self.window {
            let take_left = lo > 0 && (hi == n || x0 - self.xs[lo - 1] <= self.xs[hi] - x0);
            if take_left {
                lo -= 1;
            } else {
                hi += 1;
            }
        }
        let h = (x0 - self.xs[lo]).max(self.xs[hi - 1] - x0);
        if h <= 0.0 {
            // Every neighbour sits at x0; average all tied points.
            let a = self.xs.partition_point(|&x| x < x0);
            let b = self.xs.partition_point(|&x| x <= x0);
            return self.ys[a..b].iter().sum::<f64>() / (b - a) as f64;
        }

        let (mut sw, mut su, mut suu, mut sy, mut suy) = (0.0, 0.0, 0.0, 0.0, 0.0);
        for i in lo..hi {
            let u = self.xs[i] - x0;
            let w = tricube(u.abs() / h);
            if w == 0.0 {
                continue;
            }
            sw += w;
            su += w * u;
            suu += w * u * u;
            sy += w * self.ys[i];
            suy += w * u * self.ys[i];
        }
        let det = sw * suu - su * su;
        if det <= 1e-12 * sw * suu || sw == 0.0 {
            return if sw > 0.0 {
                sy / sw
            } else {
                self.ys[lo..hi].iter().sum::<f64>() / (hi - lo) as f64
            };
        }
        // Intercept of the weighted line in coordinates centred at x0.
        (suu * sy - su * suy) / det
    }

    /// Fitted values at each of `points`.
    pub fn fitted(&self, points: &[f64]) -> Vec<f64> {
        let mut distinct = self.xs.clone();
        distinct.dedup();
        if distinct.len() <= MAX_EXACT_VERTICES {
            let values: Vec<f64> = distinct.iter().map(|&x| self.fit_at(x)).collect();
            return points
                .iter()
                .map(|&x| match distinct.binary_search_by(|v| v.partial_cmp(&x).unwrap_or(Ordering::Less)) {
                    Ok(i) => values[i],
                    Err(_) => self.fit_at(x),
                })
                .collect();
        }
        let last = distinct.len() - 1;
        let vx: Vec<f64> = (0..MAX_EXACT_VERTICES)
            .map(|k| distinct[(k * last + (MAX_EXACT_VERTICES - 1) / 2) / (MAX_EXACT_VERTICES - 1)])
            .collect();
        let vy: Vec<f64> = vx.iter().map(|&x| self.fit_at(x)).collect();
        points
            .iter()
            .map(|&x| {
                let j = vx.partition_point(|&v| v < x);
                if j == 0 || j == vx.len() {
                    return self.fit_at(x);
                }
                if vx[j] == x {
                    return vy[j];
                }
                let t = (x - vx[j - 1]) / (vx[j] - vx[j - 1]);
                vy[j - 1] + t * (vy[j] - vy[j - 1])
            })
            .collect()
    }
}
