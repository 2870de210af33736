//! Costs that need the inter-camera topology: an interpolated path through
//! the unobserved region for each hypothesis, collision avoidance between
//! pairs of paths, and speed consistency along a single path.

use crate::error::{Error, Result};
use crate::trackdata::{Point, Topology, Track};

/// Natural cubic spline through `(t_k, y_k)`, `t` strictly increasing.
#[derive(Clone, Debug, PartialEq)]
pub struct CubicSpline {
    t: Vec<f64>,
    y: Vec<f64>,
    /// Second derivatives at the knots; zero at both ends.
    m: Vec<f64>,
}

impl CubicSpline {
    /// Panics unless there are at least two knots with strictly increasing `t`.
    pub fn natural(t: &[f64], y: &[f64]) -> Self {
        let n = t.len();
        assert!(n >= 2 && y.len() == n, "spline needs >= 2 knots");
        assert!(t.windows(2).all(|w| w[1] > w[0]), "knots must increase");
        let mut m = vec![0.0; n];
        if n > 2 {
            // Thomas algorithm on the interior rows.
            let k = n - 2;
            let mut diag = vec![0.0; k];
            let mut upper = vec![0.0; k];
            let mut rhs = vec![0.0; k];
            for r in 0..k {
                let i = r + 1;
                let h0 = t[i] - t[i - 1];
                let h1 = t[i + 1] - t[i];
                diag[r] = 2.0 * (h0 + h1);
                upper[r] = h1;
                rhs[r] = 6.0 * ((y[i + 1] - y[i]) / h1 - (y[i] - y[i - 1]) / h0);
            }
            for r in 1..k {
                let lower = t[r + 1] - t[r];
                let w = lower / diag[r - 1];
                diag[r] -= w * upper[r - 1];
                rhs[r] -= w * rhs[r - 1];
            }
            m[k] = rhs[k - 1] / diag[k - 1];
            for r in (0..k - 1).rev() {
                m[r + 1] = (rhs[r] - upper[r] * m[r + 2]) / diag[r];
            }
        }
        CubicSpline {
            t: t.to_vec(),
            y: y.to_vec(),
            m,
        }
    }

    pub fn domain(&self) -> (f64, f64) {
        (self.t[0], self.t[self.t.len() - 1])
    }

    fn segment(&self, x: f64) -> usize {
        let last = self.t.len() - 2;
        match self.t.partition_point(|&k| k <= x) {
            0 => 0,
            p => (p - 1).min(last),
        }
    }

    pub fn eval(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.t[i + 1] - self.t[i];
        let a = (self.t[i + 1] - x) / h;
        let b = (x - self.t[i]) / h;
        a * self.y[i]
            + b * self.y[i + 1]
            + ((a * a * a - a) * self.m[i] + (b * b * b - b) * self.m[i + 1]) * h * h / 6.0
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let i = self.segment(x);
        let h = self.t[i + 1] - self.t[i];
        let a = (self.t[i + 1] - x) / h;
        let b = (x - self.t[i]) / h;
        (self.y[i + 1] - self.y[i]) / h - (3.0 * a * a - 1.0) / 6.0 * h * self.m[i]
            + (3.0 * b * b - 1.0) / 6.0 * h * self.m[i + 1]
    }
}

/// Path of one hypothesis in the common plane, from the camera-a entry to
/// the camera-b exit.
#[derive(Clone, Debug, PartialEq)]
pub struct InterpolatedPath {
    gx: CubicSpline,
    gy: CubicSpline,
    /// Exit frame in camera a; the unobserved stretch starts here.
    pub exit_a: i64,
    /// Entry frame in camera b; the unobserved stretch ends here.
    pub entry_b: i64,
}

impl InterpolatedPath {
    pub fn start(&self) -> i64 {
        self.gx.domain().0 as i64
    }

    pub fn end(&self) -> i64 {
        self.gx.domain().1 as i64
    }

    pub fn position(&self, t: f64) -> Point {
        [self.gx.eval(t), self.gy.eval(t)]
    }

    pub fn velocity(&self, t: f64) -> Point {
        [self.gx.derivative(t), self.gy.derivative(t)]
    }

    pub fn speed(&self, t: f64) -> f64 {
        let v = self.velocity(t);
        v[0].hypot(v[1])
    }
}

/// Fits a natural cubic spline per axis through every point of `a` then `b`,
/// mapped into the common plane and parameterized by frame.
pub fn interpolate_path(a: &Track, b: &Track, topo: &Topology) -> Result<InterpolatedPath> {
    if a.points.len() < 2 || b.points.len() < 2 {
        return Err(Error::track(
            if a.points.len() < 2 { &a.id } else { &b.id },
            "path interpolation needs at least two points per track",
        ));
    }
    if b.entry_time() <= a.exit_time() {
        let t = b.entry_time();
        return Err(Error::DuplicateKnot {
            t,
            detail: format!(
                "`{}` exits at {} but `{}` enters at {t}",
                a.id,
                a.exit_time(),
                b.id
            ),
        });
    }
    let n = a.points.len() + b.points.len();
    let mut t = Vec::with_capacity(n);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for (track, map) in [(a, &topo.a), (b, &topo.b)] {
        for p in &track.points {
            let q = map.apply(p.pos());
            t.push(p.t as f64);
            xs.push(q[0]);
            ys.push(q[1]);
        }
    }
    Ok(InterpolatedPath {
        gx: CubicSpline::natural(&t, &xs),
        gy: CubicSpline::natural(&t, &ys),
        exit_a: a.exit_time(),
        entry_b: b.entry_time(),
    })
}

/// Frames from `lo` to `hi` inclusive at spacing `step`, always including `hi`.
fn sample_frames(lo: f64, hi: f64, step: f64) -> impl Iterator<Item = f64> {
    let n = ((hi - lo) / step).floor() as usize;
    let tail = (lo + n as f64 * step < hi).then_some(hi);
    (0..=n).map(move |k| lo + k as f64 * step).chain(tail)
}

/// Overlap of the two unobserved windows, if any.
pub fn shared_window(p1: &InterpolatedPath, p2: &InterpolatedPath) -> Option<(i64, i64)> {
    let lo = p1.exit_a.max(p2.exit_a);
    let hi = p1.entry_b.min(p2.entry_b);
    (lo <= hi).then_some((lo, hi))
}

/// Closest approach of two paths over their shared unobserved window,
/// sampled every `step` frames.
pub fn closest_approach(p1: &InterpolatedPath, p2: &InterpolatedPath, step: f64) -> Option<f64> {
    let (lo, hi) = shared_window(p1, p2)?;
    let d = sample_frames(lo as f64, hi as f64, step)
        .map(|t| {
            let (u, v) = (p1.position(t), p2.position(t));
            (u[0] - v[0]).hypot(u[1] - v[1])
        })
        .fold(f64::INFINITY, f64::min);
    Some(d)
}

/// `(1 - grouping) * exp(-d)`, zero without a shared window.
pub fn collision_cost(p1: &InterpolatedPath, p2: &InterpolatedPath, grouping: f64, step: f64) -> f64 {
    match closest_approach(p1, p2, step) {
        Some(d) => (1.0 - grouping) * (-d).exp(),
        None => 0.0,
    }
}

/// Spread between the fastest and slowest sampled speed along the whole path.
pub fn invisible_speed_cost(path: &InterpolatedPath, step: f64) -> f64 {
    let (lo, hi) = (path.start() as f64, path.end() as f64);
    let mut fastest = f64::NEG_INFINITY;
    let mut slowest = f64::INFINITY;
    for t in sample_frames(lo, hi, step) {
        let v = path.speed(t);
        fastest = fastest.max(v);
        slowest = slowest.min(v);
    }
    (fastest - slowest).max(0.0)
}
