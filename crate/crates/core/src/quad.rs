//! Quadrature rules: Gauss-Legendre on [0,1] for the vertical direction and
//! the periodic trapezoid rule in x1.
//!
//! Gauss nodes come from Newton iteration on P_n with the usual Chebyshev-like
//! initial guesses; accurate to machine precision for the sizes used here
//! (n <= a few hundred).

/// Gauss-Legendre nodes and weights on [0,1].
#[derive(Debug, Clone)]
pub struct Gauss01 {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Gauss01 {
    pub fn new(n: usize) -> Self {
        assert!(n >= 2, "need at least two quadrature nodes");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        // roots of P_n on (-1,1), symmetric; solve the lower half and mirror
        let m = n.div_ceil(2);
        for i in 0..m {
            // initial guess (Abramowitz-Stegun 25.4.38 style)
            let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_p_and_deriv(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-15 {
                    break;
                }
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            // map [-1,1] -> [0,1]; x from cos(..) descends, store ascending
            nodes[n - 1 - i] = 0.5 * (1.0 + x);
            nodes[i] = 0.5 * (1.0 - x);
            weights[i] = 0.5 * w;
            weights[n - 1 - i] = 0.5 * w;
        }
        Gauss01 { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Quadrature of tabulated values.
    pub fn integrate(&self, values: &[f64]) -> f64 {
        values
            .iter()
            .zip(&self.weights)
            .map(|(v, w)| v * w)
            .sum()
    }
}

/// P_n(x) and P_n'(x) by the three-term recurrence.
fn legendre_p_and_deriv(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0; // P_0
    let mut p1 = x; // P_1
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    // derivative from P_n and P_{n-1}
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Uniform periodic grid x1_i = i L / n on [0, L); the trapezoid rule on it
/// integrates trigonometric polynomials of wavenumber < n exactly.
pub fn periodic_grid(period: f64, n: usize) -> Vec<f64> {
    (0..n).map(|i| period * i as f64 / n as f64).collect()
}
