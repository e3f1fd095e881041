//! Gauss-Legendre rules and panel helpers for the relative-coordinate
//! averages.

use crate::float::Float;

/// Nodes and weights of the n-point Gauss-Legendre rule on [-1, 1].
///
/// Newton iteration on the Legendre recurrence; n ≤ 64 in practice.
pub fn gauss_legendre<F: Float>(n: usize) -> (Vec<F>, Vec<F>) {
    assert!(n >= 1);
    let mut nodes = vec![F::zero(); n];
    let mut weights = vec![F::zero(); n];
    let nf = F::of_usize(n);
    for i in 0..n.div_ceil(2) {
        // Tricomi initial guess
        let mut x = F::of((std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos());
        let mut dp = F::one();
        for _ in 0..100 {
            // Legendre P_n(x) and derivative by upward recurrence
            let mut p0 = F::one();
            let mut p1 = x;
            for k in 2..=n {
                let kf = F::of_usize(k);
                let p2 = ((F::two() * kf - F::one()) * x * p1 - (kf - F::one()) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 1 { x } else { p1 };
            let pm1 = if n == 1 { F::one() } else { p0 };
            dp = nf * (x * p - pm1) / (x * x - F::one());
            let dx = p / dp;
            x -= dx;
            if dx.abs() <= F::epsilon() * F::two() {
                break;
            }
        }
        let w = F::two() / ((F::one() - x * x) * dp * dp);
        nodes[i] = -x;
        weights[i] = w;
        nodes[n - 1 - i] = x;
        weights[n - 1 - i] = w;
    }
    if n % 2 == 1 {
        nodes[n / 2] = F::zero();
    }
    (nodes, weights)
}

/// Map a [-1, 1] rule onto [a, b], pushing (node, weight) pairs to `out`.
pub fn map_to_interval<F: Float>(nodes: &[F], weights: &[F], a: F, b: F, out: &mut Vec<(F, F)>) {
    let mid = (a + b) * F::half();
    let half = (b - a) * F::half();
    for (&x, &w) in nodes.iter().zip(weights) {
        out.push((mid + half * x, w * half));
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn integrate<F: Float>(n: usize, f: impl Fn(F) -> F) -> F {
        let (x, w) = gauss_legendre::<F>(n);
        x.iter().zip(&w).map(|(&xi, &wi)| wi * f(xi)).sum()
    }

    #[test]
    fn polynomials_are_exact() {
        // GL-n integrates degree 2n-1 exactly
        let v: f64 = integrate(3, |x: f64| x.powi(5) + 2.0 * x.powi(4) + x);
        assert!((v - 2.0 * 2.0 / 5.0).abs() < 1e-14);
        let v: f64 = integrate(8, |x: f64| x.powi(14));
        assert!((v - 2.0 / 15.0).abs() < 1e-14);
    }

    #[test]
    fn exponential_converges() {
        let v: f64 = integrate(20, |x: f64| x.exp());
        let exact = std::f64::consts::E - 1.0 / std::f64::consts::E;
        assert!((v - exact).abs() < 1e-14);
    }

    #[test]
    fn weights_sum_to_length() {
        for n in [1, 2, 5, 16, 32, 48, 64] {
            let (_, w) = gauss_legendre::<f64>(n);
            let s: f64 = w.iter().sum();
            assert!((s - 2.0).abs() < 1e-13, "n={n}: {s}");
        }
    }

    #[test]
    fn interval_mapping() {
        let (x, w) = gauss_legendre::<f64>(12);
        let mut pts = Vec::new();
        map_to_interval(&x, &w, 1.0, 3.0, &mut pts);
        let v: f64 = pts.iter().map(|&(x, w)| w * x * x).sum();
        assert!((v - (27.0 - 1.0) / 3.0).abs() < 1e-13);
    }
}
