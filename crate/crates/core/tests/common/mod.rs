//! Independent reference computations shared by the integration tests.
//! Nothing here calls the library's exponential or Lyapunov code.

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

/// Gauss–Legendre nodes and weights on `[-1, 1]` by Newton iteration on
/// `P_m`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; m];
    let mut weights = vec![0.0; m];
    for i in 0..m {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (m as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=m {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = m as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

/// `e^{sA} x` by repeated truncated Taylor steps of length at most
/// `0.25 / ||A||`.
pub fn taylor_flow(a: &DMatrix<f64>, x: &DVector<f64>, s: f64) -> DVector<f64> {
    let norm = a.norm().max(1e-300);
    let steps = ((s.abs() * norm / 0.25).ceil() as usize).max(1);
    let h = s / steps as f64;
    let mut y = x.clone();
    for _ in 0..steps {
        let mut term = y.clone();
        let mut acc = y.clone();
        for k in 1..40 {
            term = a * term * (h / k as f64);
            acc += &term;
            if term.norm() <= 1e-18 * acc.norm() {
                break;
            }
        }
        y = acc;
    }
    y
}

/// `sigma^2 int_0^t e^{sA} g g^T e^{sA^T} ds` by composite 8-point
/// Gauss–Legendre, doubling the panel count (starting at 8 nodes per unit
/// time or better) until two successive refinements agree to `1e-9`
/// relative.
pub fn covariance_quadrature(a: &DMatrix<f64>, g: &DVector<f64>, sigma: f64, t: f64) -> DMatrix<f64> {
    let (nodes, weights) = gauss_legendre(8);
    let mut panels = (t.ceil() as usize).max(1) * 8;
    let eval = |panels: usize| {
        let h = t / panels as f64;
        let mut c = DMatrix::zeros(a.nrows(), a.nrows());
        for p in 0..panels {
            let mid = (p as f64 + 0.5) * h;
            for (x, w) in nodes.iter().zip(&weights) {
                let v = taylor_flow(a, g, mid + 0.5 * h * x);
                c += &v * v.transpose() * (0.5 * h * w);
            }
        }
        c * sigma * sigma
    };
    let mut prev = eval(panels);
    loop {
        panels *= 2;
        let next = eval(panels);
        if (&next - &prev).norm() <= 1e-9 * next.norm().max(1e-300) {
            return next;
        }
        assert!(panels < 1 << 16, "quadrature failed to converge");
        prev = next;
    }
}
