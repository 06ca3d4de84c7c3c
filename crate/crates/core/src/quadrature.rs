//! Gauss–Legendre quadrature on the unit interval.

use crate::scalar::Scalar;

#[derive(Debug, Clone)]
pub struct GaussLegendre<T> {
    nodes: Vec<T>,
    weights: Vec<T>,
}

impl<T: Scalar> GaussLegendre<T> {
    /// Rule with `order` nodes on `[0, 1]`; exact for polynomials of degree
    /// at most `2 * order - 1`.
    pub fn new(order: usize) -> Self {
        assert!(order >= 1, "quadrature order must be positive");
        let n = order;
        let mut nodes = vec![T::zero(); n];
        let mut weights = vec![T::zero(); n];
        let two = T::lit(2.0);
        let half = T::lit(0.5);
        // Roots are symmetric; compute the upper half with Newton from the
        // Chebyshev-like initial guess.
        for i in 0..(n + 1) / 2 {
            let mut x = T::lit((std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos());
            let mut dp = T::one();
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(n, x);
                dp = d;
                let dx = p / d;
                x = x - dx;
                if dx.abs() <= T::epsilon() * T::lit(4.0) {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(n, x);
            if d != T::zero() {
                dp = d;
            }
            let w = two / ((T::one() - x * x) * dp * dp);
            // map [-1, 1] -> [0, 1]
            nodes[i] = half * (T::one() - x);
            nodes[n - 1 - i] = half * (T::one() + x);
            weights[i] = half * w;
            weights[n - 1 - i] = half * w;
        }
        GaussLegendre { nodes, weights }
    }

    pub fn order(&self) -> usize {
        self.nodes.len()
    }

    pub fn nodes(&self) -> &[T] {
        &self.nodes
    }

    pub fn weights(&self) -> &[T] {
        &self.weights
    }

    pub fn integrate(&self, mut f: impl FnMut(T) -> T) -> T {
        self.nodes.iter().zip(&self.weights).fold(T::zero(), |s, (&x, &w)| s + w * f(x))
    }
}

fn legendre_with_derivative<T: Scalar>(n: usize, x: T) -> (T, T) {
    let mut p0 = T::one();
    let mut p1 = x;
    if n == 0 {
        return (T::one(), T::zero());
    }
    for k in 2..=n {
        let kf = T::lit(k as f64);
        let p2 = ((T::lit(2.0) * kf - T::one()) * x * p1 - (kf - T::one()) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    let nf = T::lit(n as f64);
    let d = nf * (x * p1 - p0) / (x * x - T::one());
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_for_polynomials_up_to_degree_2n_minus_1() {
        for order in 1..=12 {
            let q = GaussLegendre::<f64>::new(order);
            for deg in 0..(2 * order) {
                let got = q.integrate(|t| t.powi(deg as i32));
                let want = 1.0 / (deg as f64 + 1.0);
                assert!((got - want).abs() < 1e-13, "order {order} degree {deg}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn weights_sum_to_one_in_f32() {
        let q = GaussLegendre::<f32>::new(5);
        let s: f32 = q.weights().iter().sum();
        assert!((s - 1.0).abs() < 1e-6);
    }

    #[test]
    fn not_exact_beyond_degree() {
        let q = GaussLegendre::<f64>::new(2);
        let got = q.integrate(|t| t.powi(4));
        assert!((got - 0.2).abs() > 1e-4);
    }
}
