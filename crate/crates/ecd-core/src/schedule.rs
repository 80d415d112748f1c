//! Scalar time-functions with derivatives.
//!
//! A [`Schedule`] is a real function on a closed domain together with its
//! derivative — closed-form where possible, monotone-cubic interpolation of
//! samples otherwise. Schedules carry drive parameters λ(t), pulse envelopes,
//! and synthesized eCD amplitude envelopes.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A real scalar function of one variable with an attached derivative and a
/// closed domain. Cheap to clone; evaluation is pure and thread-safe.
#[derive(Clone)]
pub struct Schedule {
    f: ScalarFn,
    df: ScalarFn,
    domain: (f64, f64),
}

impl fmt::Debug for Schedule {
    fn fmt(&self, fm: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(fm, "Schedule {{ domain: [{}, {}] }}", self.domain.0, self.domain.1)
    }
}

impl Schedule {
    pub fn from_fns(
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        df: impl Fn(f64) -> f64 + Send + Sync + 'static,
        domain: (f64, f64),
    ) -> Self {
        Self { f: Arc::new(f), df: Arc::new(df), domain }
    }

    pub fn constant(c: f64, domain: (f64, f64)) -> Self {
        Self::from_fns(move |_| c, |_| 0.0, domain)
    }

    /// a + b·t
    pub fn linear(a: f64, b: f64, domain: (f64, f64)) -> Self {
        Self::from_fns(move |t| a + b * t, move |_| b, domain)
    }

    /// amp·exp(−((t − center)/width)²). The Gaussian's standard deviation is
    /// width/√2.
    pub fn gaussian(amp: f64, center: f64, width: f64, domain: (f64, f64)) -> Self {
        let w2 = width * width;
        Self::from_fns(
            move |t| amp * (-(t - center) * (t - center) / w2).exp(),
            move |t| {
                let g = amp * (-(t - center) * (t - center) / w2).exp();
                -2.0 * (t - center) / w2 * g
            },
            domain,
        )
    }

    /// Monotone cubic (Fritsch–Carlson) interpolation of samples; derivative
    /// comes from the interpolant. Outside the sample range the first/last
    /// value is held constant.
    pub fn sampled(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let interp = Pchip::new(xs, ys)?;
        let domain = (interp.xs[0], *interp.xs.last().unwrap());
        let i2 = interp.clone();
        Ok(Self::from_fns(move |t| interp.value(t), move |t| i2.derivative(t), domain))
    }

    pub fn value(&self, t: f64) -> f64 {
        (self.f)(t)
    }

    pub fn derivative(&self, t: f64) -> f64 {
        (self.df)(t)
    }

    pub fn domain(&self) -> (f64, f64) {
        self.domain
    }

    pub fn start(&self) -> f64 {
        self.domain.0
    }

    pub fn end(&self) -> f64 {
        self.domain.1
    }

    /// Pointwise sum; the domain is the intersection.
    pub fn add(&self, other: &Schedule) -> Schedule {
        let (a, b) = (self.clone(), other.clone());
        let (a2, b2) = (self.clone(), other.clone());
        let domain = (self.domain.0.max(other.domain.0), self.domain.1.min(other.domain.1));
        Schedule::from_fns(
            move |t| a.value(t) + b.value(t),
            move |t| a2.derivative(t) + b2.derivative(t),
            domain,
        )
    }

    pub fn scale(&self, c: f64) -> Schedule {
        let a = self.clone();
        let a2 = self.clone();
        Schedule::from_fns(move |t| c * a.value(t), move |t| c * a2.derivative(t), self.domain)
    }

    /// Check the derivative against a central finite difference at `count`
    /// quasi-random interior points. Returns the worst absolute mismatch,
    /// normalized against max(1, |scale|)·1e-6 tolerance semantics used by the
    /// tests.
    pub fn derivative_defect(&self, count: usize) -> f64 {
        let (lo, hi) = self.domain;
        let span = hi - lo;
        let h = span * 1e-6;
        let mut worst = 0.0f64;
        // low-discrepancy interior points, no RNG needed
        let golden = 0.618_033_988_749_894_9_f64;
        let mut u = 0.5;
        for _ in 0..count {
            u = (u + golden) % 1.0;
            let t = lo + span * (0.01 + 0.98 * u);
            let fd = (self.value(t + h) - self.value(t - h)) / (2.0 * h);
            worst = worst.max((fd - self.derivative(t)).abs());
        }
        worst
    }
}

/// Fritsch–Carlson monotone piecewise-cubic interpolant.
#[derive(Clone, Debug)]
pub struct Pchip {
    xs: Vec<f64>,
    ys: Vec<f64>,
    slopes: Vec<f64>,
}

impl Pchip {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::InvalidParameter("pchip: xs/ys length mismatch".into()));
        }
        if xs.len() < 2 {
            return Err(Error::InvalidParameter("pchip: need at least 2 samples".into()));
        }
        if !xs.windows(2).all(|w| w[1] > w[0]) {
            return Err(Error::InvalidParameter("pchip: xs must be strictly increasing".into()));
        }
        if !ys.iter().all(|y| y.is_finite()) {
            return Err(Error::InvalidParameter("pchip: non-finite sample".into()));
        }
        let n = xs.len();
        let mut d = vec![0.0; n - 1]; // secant slopes
        for i in 0..n - 1 {
            d[i] = (ys[i + 1] - ys[i]) / (xs[i + 1] - xs[i]);
        }
        let mut m = vec![0.0; n];
        m[0] = d[0];
        m[n - 1] = d[n - 2];
        for i in 1..n - 1 {
            if d[i - 1] * d[i] <= 0.0 {
                m[i] = 0.0;
            } else {
                // weighted harmonic mean keeps the interpolant monotone
                let h0 = xs[i] - xs[i - 1];
                let h1 = xs[i + 1] - xs[i];
                let w1 = 2.0 * h1 + h0;
                let w2 = h1 + 2.0 * h0;
                m[i] = (w1 + w2) / (w1 / d[i - 1] + w2 / d[i]);
            }
        }
        // clamp endpoint slopes (Fritsch–Carlson §4)
        for (i, mi) in [(0usize, 0usize), (n - 1, n - 2)] {
            if d[mi] == 0.0 {
                m[i] = 0.0;
            } else {
                let r = m[i] / d[mi];
                if r < 0.0 {
                    m[i] = 0.0;
                } else if r > 3.0 {
                    m[i] = 3.0 * d[mi];
                }
            }
        }
        Ok(Self { xs, ys, slopes: m })
    }

    fn segment(&self, x: f64) -> usize {
        match self.xs.binary_search_by(|v| v.partial_cmp(&x).unwrap()) {
            Ok(i) => i.min(self.xs.len() - 2),
            Err(0) => 0,
            Err(i) if i >= self.xs.len() => self.xs.len() - 2,
            Err(i) => i - 1,
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let (t2, t3) = (t * t, t * t * t);
        let h00 = 2.0 * t3 - 3.0 * t2 + 1.0;
        let h10 = t3 - 2.0 * t2 + t;
        let h01 = -2.0 * t3 + 3.0 * t2;
        let h11 = t3 - t2;
        h00 * self.ys[i] + h10 * h * self.slopes[i] + h01 * self.ys[i + 1] + h11 * h * self.slopes[i + 1]
    }

    pub fn derivative(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] || x >= self.xs[n - 1] {
            return 0.0; // held constant outside the range
        }
        let i = self.segment(x);
        let h = self.xs[i + 1] - self.xs[i];
        let t = (x - self.xs[i]) / h;
        let t2 = t * t;
        let dh00 = (6.0 * t2 - 6.0 * t) / h;
        let dh10 = 3.0 * t2 - 4.0 * t + 1.0;
        let dh01 = (-6.0 * t2 + 6.0 * t) / h;
        let dh11 = 3.0 * t2 - 2.0 * t;
        dh00 * self.ys[i] + dh10 * self.slopes[i] + dh01 * self.ys[i + 1] + dh11 * self.slopes[i + 1]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_derivative_consistent() {
        let s = Schedule::gaussian(2.0, 0.3, 1.5, (-5.0, 5.0));
        assert!(s.derivative_defect(200) < 1e-6);
    }

    #[test]
    fn linear_and_constant() {
        let s = Schedule::linear(1.0, 2.0, (0.0, 1.0));
        assert_eq!(s.value(0.25), 1.5);
        assert_eq!(s.derivative(0.9), 2.0);
        let c = Schedule::constant(4.0, (0.0, 1.0));
        assert_eq!(c.value(0.5), 4.0);
        assert_eq!(c.derivative(0.5), 0.0);
    }

    #[test]
    fn pchip_interpolates_and_preserves_monotonicity() {
        let xs: Vec<f64> = (0..20).map(|i| i as f64 * 0.5).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| (x * 0.6).tanh()).collect();
        let p = Pchip::new(xs.clone(), ys.clone()).unwrap();
        for (x, y) in xs.iter().zip(&ys) {
            assert!((p.value(*x) - y).abs() < 1e-14);
        }
        // dense monotonicity check
        let mut prev = p.value(0.0);
        for k in 1..500 {
            let v = p.value(9.5 * k as f64 / 500.0);
            assert!(v >= prev - 1e-12);
            prev = v;
        }
        // interpolation error small for a smooth function
        for k in 0..100 {
            let x = 0.3 + 9.0 * k as f64 / 100.0;
            assert!((p.value(x) - (x * 0.6).tanh()).abs() < 2e-3);
        }
    }

    #[test]
    fn sampled_schedule_derivative_matches_fd() {
        let xs: Vec<f64> = (0..60).map(|i| i as f64 * 0.1).collect();
        let ys: Vec<f64> = xs.iter().map(|&x| (x).sin() * 0.5 + 1.0).collect();
        let s = Schedule::sampled(xs, ys).unwrap();
        // derivative of the interpolant itself must be FD-consistent
        assert!(s.derivative_defect(200) < 1e-5);
    }

    #[test]
    fn pchip_rejects_bad_input() {
        assert!(Pchip::new(vec![0.0, 0.0, 1.0], vec![1.0, 2.0, 3.0]).is_err());
        assert!(Pchip::new(vec![0.0], vec![1.0]).is_err());
        assert!(Pchip::new(vec![0.0, 1.0], vec![f64::NAN, 1.0]).is_err());
    }

    #[test]
    fn schedule_combinators() {
        let a = Schedule::linear(0.0, 1.0, (0.0, 2.0));
        let b = Schedule::constant(3.0, (0.0, 2.0));
        let s = a.add(&b).scale(2.0);
        assert_eq!(s.value(1.0), 8.0);
        assert_eq!(s.derivative(1.0), 2.0);
    }
}
