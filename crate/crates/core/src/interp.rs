//! 1-D interpolation through scored frames.
//!
//! Four or more knots use a natural cubic spline, two or three are joined
//! piecewise-linearly, and a single knot gives a constant. Queries outside
//! the knot range take the value of the nearest end knot.

use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct Interpolant {
    xs: Vec<f64>,
    ys: Vec<f64>,
    /// Second derivatives at the knots; empty for the linear/constant cases.
    m: Vec<f64>,
}

impl Interpolant {
    /// `xs` must be strictly increasing and the same length as `ys`.
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        if xs.is_empty() || xs.len() != ys.len() {
            return Err(Error::InvalidInput(format!(
                "need matching non-empty knots, got {} xs and {} ys",
                xs.len(),
                ys.len()
            )));
        }
        if xs
            .windows(2)
            .any(|w| w[0].partial_cmp(&w[1]) != Some(std::cmp::Ordering::Less))
        {
            return Err(Error::InvalidInput(
                "knot abscissae must be strictly increasing".into(),
            ));
        }
        if xs.iter().chain(&ys).any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("knots must be finite".into()));
        }
        let m = if xs.len() >= 4 {
            natural_second_derivatives(&xs, &ys)
        } else {
            Vec::new()
        };
        Ok(Self { xs, ys, m })
    }

    pub fn is_cubic(&self) -> bool {
        !self.m.is_empty()
    }

    pub fn eval(&self, x: f64) -> f64 {
        let n = self.xs.len();
        if x <= self.xs[0] {
            return self.ys[0];
        }
        if x >= self.xs[n - 1] {
            return self.ys[n - 1];
        }
        // first knot strictly greater than x; guaranteed 1..n
        let hi = self.xs.partition_point(|&k| k <= x);
        self.eval_segment(hi - 1, x)
    }

    fn eval_segment(&self, i: usize, x: f64) -> f64 {
        let (x0, x1) = (self.xs[i], self.xs[i + 1]);
        let (y0, y1) = (self.ys[i], self.ys[i + 1]);
        let h = x1 - x0;
        if self.m.is_empty() {
            return y0 + (y1 - y0) * (x - x0) / h;
        }
        let (m0, m1) = (self.m[i], self.m[i + 1]);
        let a = x1 - x;
        let b = x - x0;
        m0 * a * a * a / (6.0 * h)
            + m1 * b * b * b / (6.0 * h)
            + (y0 / h - m0 * h / 6.0) * a
            + (y1 / h - m1 * h / 6.0) * b
    }

    /// Evaluate at every integer abscissa `0..n`.
    pub fn eval_grid(&self, n: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(n);
        let last = self.xs.len() - 1;
        let mut seg = 0;
        for f in 0..n {
            let x = f as f64;
            if x <= self.xs[0] {
                out.push(self.ys[0]);
            } else if x >= self.xs[last] {
                out.push(self.ys[last]);
            } else {
                while self.xs[seg + 1] <= x {
                    seg += 1;
                }
                out.push(self.eval_segment(seg, x));
            }
        }
        out
    }
}

/// Solve the tridiagonal system for a natural spline (zero curvature at both
/// ends) with the Thomas algorithm.
fn natural_second_derivatives(xs: &[f64], ys: &[f64]) -> Vec<f64> {
    let n = xs.len();
    let h: Vec<f64> = xs.windows(2).map(|w| w[1] - w[0]).collect();
    let interior = n - 2;
    let mut diag = vec![0.0; interior];
    let mut upper = vec![0.0; interior];
    let mut rhs = vec![0.0; interior];
    for k in 0..interior {
        let i = k + 1;
        diag[k] = 2.0 * (h[i - 1] + h[i]);
        upper[k] = h[i];
        rhs[k] = 6.0 * ((ys[i + 1] - ys[i]) / h[i] - (ys[i] - ys[i - 1]) / h[i - 1]);
    }
    // forward sweep; sub-diagonal entry for row k is h[k]
    for k in 1..interior {
        let w = h[k] / diag[k - 1];
        diag[k] -= w * upper[k - 1];
        rhs[k] -= w * rhs[k - 1];
    }
    let mut m = vec![0.0; n];
    for k in (0..interior).rev() {
        let next = if k + 1 < interior { m[k + 2] } else { 0.0 };
        m[k + 1] = (rhs[k] - upper[k] * next) / diag[k];
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_and_linear_regimes() {
        let c = Interpolant::new(vec![5.0], vec![0.3]).unwrap();
        assert_eq!(c.eval(-10.0), 0.3);
        assert_eq!(c.eval(100.0), 0.3);

        let l = Interpolant::new(vec![0.0, 10.0, 20.0], vec![1.0, 0.0, 2.0]).unwrap();
        assert!(!l.is_cubic());
        assert_eq!(l.eval(5.0), 0.5);
        assert_eq!(l.eval(15.0), 1.0);
        assert_eq!(l.eval(-3.0), 1.0);
        assert_eq!(l.eval(25.0), 2.0);
    }

    #[test]
    fn cubic_reproduces_straight_lines() {
        let xs: Vec<f64> = vec![0.0, 1.0, 3.0, 7.0, 8.0];
        let ys: Vec<f64> = xs.iter().map(|x| 2.0 * x - 1.0).collect();
        let s = Interpolant::new(xs, ys).unwrap();
        assert!(s.is_cubic());
        for x in [0.5, 2.0, 5.5, 7.9] {
            assert!((s.eval(x) - (2.0 * x - 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn rejects_bad_knots() {
        assert!(Interpolant::new(vec![], vec![]).is_err());
        assert!(Interpolant::new(vec![1.0, 1.0], vec![0.0, 0.0]).is_err());
        assert!(Interpolant::new(vec![1.0], vec![f64::NAN]).is_err());
    }

    fn knots() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        proptest::collection::btree_set(0u32..2000, 4..30).prop_flat_map(|xs| {
            let xs: Vec<f64> = xs.into_iter().map(f64::from).collect();
            let n = xs.len();
            (Just(xs), proptest::collection::vec(-3.0f64..3.0, n))
        })
    }

    proptest! {
        #[test]
        fn natural_spline_properties((xs, ys) in knots()) {
            let s = Interpolant::new(xs.clone(), ys.clone()).unwrap();
            for (x, y) in xs.iter().zip(&ys) {
                prop_assert!((s.eval(*x) - y).abs() < 1e-9);
            }
            // continuity of value, slope and curvature across interior knots
            let eps = 1e-4;
            for w in xs.windows(3) {
                let k = w[1];
                let left = s.eval_segment(xs.iter().position(|&v| v == w[0]).unwrap(), k);
                let right = s.eval_segment(xs.iter().position(|&v| v == k).unwrap(), k);
                prop_assert!((left - right).abs() < 1e-9);
                let d_left = (s.eval(k) - s.eval(k - eps)) / eps;
                let d_right = (s.eval(k + eps) - s.eval(k)) / eps;
                prop_assert!((d_left - d_right).abs() < 1e-2, "slope jump at {}", k);
                let e = 1e-3;
                let c_left = (s.eval(k) - 2.0 * s.eval(k - e) + s.eval(k - 2.0 * e)) / (e * e);
                let c_right = (s.eval(k + 2.0 * e) - 2.0 * s.eval(k + e) + s.eval(k)) / (e * e);
                prop_assert!((c_left - c_right).abs() < 1e-2 * (1.0 + c_left.abs()), "curvature jump at {}", k);
            }
            // zero curvature at both ends
            let n = xs.len();
            prop_assert_eq!(s.m[0], 0.0);
            prop_assert_eq!(s.m[n - 1], 0.0);
        }

        #[test]
        fn grid_eval_matches_pointwise((xs, ys) in knots()) {
            let s = Interpolant::new(xs, ys).unwrap();
            let grid = s.eval_grid(2100);
            for (f, v) in grid.iter().enumerate() {
                prop_assert_eq!(*v, s.eval(f as f64));
            }
        }
    }
}
