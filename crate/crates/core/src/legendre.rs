//! Legendre polynomials on [0,1] and boundary-condition-adapted polynomial
//! bases built from them.
//!
//! A basis function is a short combination p_m = P_m + sum_i c_i P_{m+i}
//! whose coefficients are solved so that every listed homogeneous boundary
//! condition holds. This keeps the recombination local (bandwidth = number
//! of conditions) and well conditioned up to the mode counts used here.

/// Maximum derivative order supported by the evaluators.
pub const MAX_DERIV: usize = 3;

/// Values and derivatives of P_0..P_max at a single point of [0,1].
///
/// Returns `table[d][m]` = d-th derivative (in the [0,1] variable) of P_m
/// evaluated at `x`.
pub fn legendre_point_table(max_m: usize, x: f64, max_d: usize) -> Vec<Vec<f64>> {
    assert!(max_d <= MAX_DERIV);
    let t = 2.0 * x - 1.0;
    let mut p = vec![vec![0.0; max_m + 1]; max_d + 1];
    p[0][0] = 1.0;
    if max_m >= 1 {
        p[0][1] = t;
        if max_d >= 1 {
            p[1][1] = 1.0;
        }
    }
    for k in 2..=max_m {
        let kf = k as f64;
        for d in 0..=max_d {
            let lower = if d > 0 { d as f64 * p[d - 1][k - 1] } else { 0.0 };
            p[d][k] = ((2.0 * kf - 1.0) * (t * p[d][k - 1] + lower) - (kf - 1.0) * p[d][k - 2]) / kf;
        }
    }
    // chain rule for the [0,1] variable
    for (d, row) in p.iter_mut().enumerate() {
        let scale = (2.0f64).powi(d as i32);
        for v in row.iter_mut() {
            *v *= scale;
        }
    }
    p
}

/// A function represented by Legendre coefficients on [0,1].
#[derive(Debug, Clone, PartialEq)]
pub struct LegendreSeries(pub Vec<f64>);

impl LegendreSeries {
    pub fn zeros(n: usize) -> Self {
        LegendreSeries(vec![0.0; n])
    }

    /// d-th derivative at x (d <= MAX_DERIV).
    pub fn eval(&self, x: f64, d: usize) -> f64 {
        if self.0.is_empty() {
            return 0.0;
        }
        let table = legendre_point_table(self.0.len() - 1, x, d);
        self.0
            .iter()
            .zip(&table[d])
            .map(|(c, p)| c * p)
            .sum()
    }
}

/// Polynomial basis of [0,1] satisfying a set of homogeneous point conditions
/// (value or derivative zero at x = 0 or 1).
#[derive(Debug, Clone)]
pub struct RecombinedBasis {
    /// Legendre coefficient vector of each basis function.
    columns: Vec<Vec<f64>>,
    conditions: Vec<(f64, usize)>,
}

impl RecombinedBasis {
    /// `conds` lists (location, derivative order) pairs that every basis
    /// function must annihilate.
    pub fn new(n_modes: usize, conds: &[(f64, usize)]) -> Self {
        let nc = conds.len();
        let max_m = n_modes - 1 + nc;
        let max_d = conds.iter().map(|c| c.1).max().unwrap_or(0);
        let tables: Vec<Vec<Vec<f64>>> = conds
            .iter()
            .map(|&(x, _)| legendre_point_table(max_m, x, max_d))
            .collect();
        let mut columns = Vec::with_capacity(n_modes);
        for m in 0..n_modes {
            let mut col = vec![0.0; max_m + 1];
            col[m] = 1.0;
            if nc > 0 {
                let mut a = nalgebra::DMatrix::<f64>::zeros(nc, nc);
                let mut b = nalgebra::DVector::<f64>::zeros(nc);
                for (ci, &(_, d)) in conds.iter().enumerate() {
                    b[ci] = -tables[ci][d][m];
                    for i in 0..nc {
                        a[(ci, i)] = tables[ci][d][m + 1 + i];
                    }
                }
                let sol = a
                    .lu()
                    .solve(&b)
                    .expect("boundary recombination system is singular");
                for i in 0..nc {
                    col[m + 1 + i] = sol[i];
                }
            }
            columns.push(col);
        }
        RecombinedBasis {
            columns,
            conditions: conds.to_vec(),
        }
    }

    pub fn n_modes(&self) -> usize {
        self.columns.len()
    }

    pub fn conditions(&self) -> &[(f64, usize)] {
        &self.conditions
    }

    /// Legendre series of a modal coefficient vector.
    pub fn to_series(&self, modal: &[f64]) -> LegendreSeries {
        assert_eq!(modal.len(), self.columns.len());
        let len = self.columns.last().map_or(0, |c| c.len());
        let mut out = vec![0.0; len];
        for (c, col) in modal.iter().zip(&self.columns) {
            for (o, v) in out.iter_mut().zip(col) {
                *o += c * v;
            }
        }
        LegendreSeries(out)
    }

    /// Tabulate basis functions on a grid: result[d][mode][point].
    pub fn tabulate(&self, xs: &[f64], max_d: usize) -> Vec<Vec<Vec<f64>>> {
        let max_m = self.columns.last().map_or(0, |c| c.len() - 1);
        let n = self.n_modes();
        let mut out = vec![vec![vec![0.0; xs.len()]; n]; max_d + 1];
        for (qi, &x) in xs.iter().enumerate() {
            let table = legendre_point_table(max_m, x, max_d);
            for (mi, col) in self.columns.iter().enumerate() {
                for d in 0..=max_d {
                    let mut s = 0.0;
                    for (c, p) in col.iter().zip(&table[d]) {
                        s += c * p;
                    }
                    out[d][mi][qi] = s;
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn point_table_matches_known_values() {
        // P_2(t) = (3t^2-1)/2 at x=0.75 -> t=0.5
        let table = legendre_point_table(3, 0.75, 2);
        assert_relative_eq!(table[0][2], (3.0 * 0.25 - 1.0) / 2.0, epsilon = 1e-14);
        // dP_2/dx = 3t * 2 = 3
        assert_relative_eq!(table[1][2], 3.0, epsilon = 1e-14);
        // d2P_3/dx2 = 15 t * 4 = 30
        assert_relative_eq!(table[2][3], 30.0, epsilon = 1e-13);
    }

    #[test]
    fn series_derivative_consistent_with_finite_differences() {
        let s = LegendreSeries(vec![0.3, -1.2, 0.7, 0.05, 1.1]);
        let x = 0.4;
        let h = 1e-6;
        let fd = (s.eval(x + h, 0) - s.eval(x - h, 0)) / (2.0 * h);
        assert_relative_eq!(s.eval(x, 1), fd, epsilon = 1e-7);
    }

    #[test]
    fn clamped_basis_satisfies_conditions() {
        let conds = [(0.0, 0), (1.0, 0), (0.0, 1), (1.0, 1)];
        let basis = RecombinedBasis::new(24, &conds);
        for m in 0..24 {
            let mut modal = vec![0.0; 24];
            modal[m] = 1.0;
            let s = basis.to_series(&modal);
            for &(x, d) in &conds {
                assert!(s.eval(x, d).abs() < 1e-9, "mode {m} cond ({x},{d})");
            }
            // not identically zero
            assert!(s.eval(0.37, 0).abs() + s.eval(0.62, 0).abs() > 1e-12);
        }
    }

    #[test]
    fn tabulate_agrees_with_series_eval() {
        let basis = RecombinedBasis::new(8, &[(0.0, 0), (1.0, 0)]);
        let xs = [0.1, 0.5, 0.9];
        let tab = basis.tabulate(&xs, 2);
        let mut modal = vec![0.0; 8];
        modal[5] = 1.0;
        let s = basis.to_series(&modal);
        for (qi, &x) in xs.iter().enumerate() {
            for d in 0..=2 {
                assert_relative_eq!(tab[d][5][qi], s.eval(x, d), epsilon = 1e-11);
            }
        }
    }
}
