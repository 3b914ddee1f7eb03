//! Gauss–Legendre rules and composite quadrature grids on `[0, 1]`.

use std::f64::consts::PI;

/// An `m`-point Gauss–Legendre rule on the reference interval `[-1, 1]`.
///
/// Exact for polynomials of degree `2m - 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussLegendre {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussLegendre {
    /// Builds the rule with `m >= 1` points. Nodes are returned in increasing order.
    pub fn new(m: usize) -> Self {
        assert!(m >= 1, "Gauss-Legendre rule needs at least one point");
        let mut nodes = vec![0.0; m];
        let mut weights = vec![0.0; m];
        let mf = m as f64;
        for i in 0..(m + 1) / 2 {
            // Tricomi initial guess, then Newton on P_m.
            let mut x = (PI * (i as f64 + 0.75) / (mf + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre_with_derivative(m, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre_with_derivative(m, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[m - 1 - i] = x;
            weights[i] = w;
            weights[m - 1 - i] = w;
        }
        if m % 2 == 1 {
            nodes[m / 2] = 0.0;
        }
        Self { nodes, weights }
    }

    /// Smallest rule that integrates polynomials of the given degree exactly.
    pub fn exact_for_degree(degree: usize) -> Self {
        Self::new(degree / 2 + 1)
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Mapped nodes and weights on `[a, b]`.
    pub fn on_interval(&self, a: f64, b: f64) -> impl Iterator<Item = (f64, f64)> + '_ {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(move |(x, w)| (mid + half * x, half * w))
    }

    /// `∫_a^b f`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, a: f64, b: f64, mut f: F) -> f64 {
        if b == a {
            return 0.0;
        }
        self.on_interval(a, b).map(|(x, w)| w * f(x)).sum()
    }
}

/// Value and derivative of the Legendre polynomial `P_m` at `x`.
pub(crate) fn legendre_with_derivative(m: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    if m == 0 {
        return (1.0, 0.0);
    }
    for j in 2..=m {
        let jf = j as f64;
        let p2 = ((2.0 * jf - 1.0) * x * p1 - (jf - 1.0) * p0) / jf;
        p0 = p1;
        p1 = p2;
    }
    let mf = m as f64;
    let d = if (1.0 - x * x).abs() < 1e-300 {
        // P_m'(±1) = (±1)^{m+1} m(m+1)/2
        let s = if x > 0.0 || m % 2 == 1 { 1.0 } else { -1.0 };
        s * mf * (mf + 1.0) / 2.0
    } else {
        mf * (x * p1 - p0) / (x * x - 1.0)
    };
    (p1, d)
}

/// A composite quadrature rule on `[0, 1]`: each interval between consecutive
/// breakpoints carries a copy of one Gauss–Legendre rule.
///
/// Points are strictly increasing and lie in the open cells.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureGrid {
    breakpoints: Vec<f64>,
    points: Vec<f64>,
    weights: Vec<f64>,
    per_cell: usize,
}

impl QuadratureGrid {
    /// Composite rule with `order` Gauss points on each `[breakpoints[i], breakpoints[i+1]]`.
    ///
    /// Breakpoints are sorted and deduplicated (within `1e-14`); `0` and `1` are always added.
    pub fn composite(breakpoints: &[f64], order: usize) -> Self {
        let mut bp: Vec<f64> = breakpoints
            .iter()
            .copied()
            .chain([0.0, 1.0])
            .filter(|x| (0.0..=1.0).contains(x))
            .collect();
        bp.sort_by(f64::total_cmp);
        bp.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        let rule = GaussLegendre::new(order);
        let mut points = Vec::with_capacity((bp.len() - 1) * order);
        let mut weights = Vec::with_capacity((bp.len() - 1) * order);
        for pair in bp.windows(2) {
            for (x, w) in rule.on_interval(pair[0], pair[1]) {
                points.push(x);
                weights.push(w);
            }
        }
        Self {
            breakpoints: bp,
            points,
            weights,
            per_cell: order,
        }
    }

    /// Composite rule on `cells` uniform cells.
    pub fn uniform(cells: usize, order: usize) -> Self {
        let bp: Vec<f64> = (0..=cells).map(|i| i as f64 / cells as f64).collect();
        Self::composite(&bp, order)
    }

    /// Like [`QuadratureGrid::composite`], but the first cell `[0, b_1]` is split
    /// geometrically towards zero (`levels` halvings). Used for integrands with
    /// an integrable endpoint singularity such as `s^{1/2}`.
    pub fn graded_at_zero(breakpoints: &[f64], order: usize, levels: usize) -> Self {
        let mut bp: Vec<f64> = breakpoints.to_vec();
        bp.extend([0.0, 1.0]);
        bp.sort_by(f64::total_cmp);
        bp.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
        let first = bp[1];
        let mut extra: Vec<f64> = (1..=levels).map(|j| first * 0.5f64.powi(j as i32)).collect();
        bp.append(&mut extra);
        Self::composite(&bp, order)
    }

    /// Trapezoidal rule on the given points, which must be strictly increasing
    /// in `[0, 1]`. The breakpoints are the points themselves.
    pub fn from_points_trapezoid(points: &[f64]) -> crate::Result<Self> {
        if points.iter().any(|x| !(0.0..=1.0).contains(x))
            || points.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(crate::Error::Domain(
                "sample points must be strictly increasing in [0, 1]".into(),
            ));
        }
        let m = points.len();
        let mut weights = vec![0.0; m];
        for (i, w) in points.windows(2).enumerate() {
            let h = 0.5 * (w[1] - w[0]);
            weights[i] += h;
            weights[i + 1] += h;
        }
        Ok(Self {
            breakpoints: points.to_vec(),
            points: points.to_vec(),
            weights,
            per_cell: 1,
        })
    }

    /// `m` equispaced points including `0` and `1`, trapezoidal weights.
    pub fn uniform_trapezoid(m: usize) -> Self {
        let pts: Vec<f64> = match m {
            0 => vec![],
            1 => vec![0.0],
            _ => (0..m).map(|i| i as f64 / (m - 1) as f64).collect(),
        };
        Self::from_points_trapezoid(&pts).expect("uniform points are ordered")
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.breakpoints
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn points_per_cell(&self) -> usize {
        self.per_cell
    }

    /// `Σ w_i f(x_i)`.
    pub fn integrate<F: FnMut(f64) -> f64>(&self, mut f: F) -> f64 {
        self.points
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn two_point_rule_matches_closed_form() {
        let g = GaussLegendre::new(2);
        let x = 1.0 / 3f64.sqrt();
        assert!((g.nodes()[0] + x).abs() < 1e-15);
        assert!((g.nodes()[1] - x).abs() < 1e-15);
        assert!((g.weights()[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn three_point_rule_matches_closed_form() {
        let g = GaussLegendre::new(3);
        assert!((g.nodes()[2] - 0.6f64.sqrt()).abs() < 1e-15);
        assert!(g.nodes()[1].abs() < 1e-15);
        assert!((g.weights()[1] - 8.0 / 9.0).abs() < 1e-15);
        assert!((g.weights()[0] - 5.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn exact_up_to_degree_2m_minus_1() {
        for m in 1..=24 {
            let g = GaussLegendre::new(m);
            let wsum: f64 = g.weights().iter().sum();
            assert!((wsum - 2.0).abs() < 1e-13, "m={m}");
            for d in 0..2 * m {
                let got = g.integrate(0.0, 1.0, |x| x.powi(d as i32));
                let want = 1.0 / (d as f64 + 1.0);
                assert!((got - want).abs() < 1e-13, "m={m} d={d}: {got} vs {want}");
            }
        }
    }

    #[test]
    fn composite_grid_integrates_sqrt_with_grading() {
        let g = QuadratureGrid::graded_at_zero(&[0.5], 16, 40);
        let got = g.integrate(|s| s.sqrt());
        assert!((got - 2.0 / 3.0).abs() < 1e-13);
        let plain = QuadratureGrid::uniform(1, 16);
        assert!((plain.integrate(|s| s.sqrt()) - 2.0 / 3.0).abs() > 1e-8);
    }

    #[test]
    fn composite_breakpoints_are_normalized() {
        let g = QuadratureGrid::composite(&[0.5, 0.25, 0.5, 1.0], 3);
        assert_eq!(g.breakpoints(), &[0.0, 0.25, 0.5, 1.0]);
        assert_eq!(g.len(), 9);
        assert!(g.points().windows(2).all(|w| w[0] < w[1]));
    }
}
