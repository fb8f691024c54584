//! Gauss–Hermite and Gauss–Legendre rules.

use crate::error::{Result, SpdcError};

/// Nodes and weights of an n-point rule.
#[derive(Debug, Clone, PartialEq)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

impl Rule {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }
    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
    pub fn integrate(&self, f: impl Fn(f64) -> f64) -> f64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&x, &w)| w * f(x))
            .sum()
    }
}

/// Gauss–Hermite rule for ∫ exp(−x²) g(x) dx, nodes in ascending order.
///
/// Newton iteration on the orthonormal Hermite recurrence with the usual
/// asymptotic initial guesses; exact for polynomial g of degree ≤ 2n−1.
pub fn gauss_hermite(n: usize) -> Result<Rule> {
    if n == 0 || n > 200 {
        return Err(SpdcError::invalid(format!(
            "Gauss-Hermite order must be in 1..=200, got {n}"
        )));
    }
    let pim4 = std::f64::consts::PI.powf(-0.25);
    let m = n.div_ceil(2);
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    let mut z = 0.0f64;
    for i in 0..m {
        z = match i {
            0 => (2.0 * nf + 1.0).sqrt() - 1.85575 * (2.0 * nf + 1.0).powf(-1.0 / 6.0),
            1 => z - 1.14 * nf.powf(0.426) / z,
            2 => 1.86 * z - 0.86 * nodes[0],
            3 => 1.91 * z - 0.91 * nodes[1],
            _ => 2.0 * z - nodes[i - 2],
        };
        let mut pp = 0.0;
        let mut converged = false;
        for _ in 0..100 {
            let mut p1 = pim4;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = z * (2.0 / (jf + 1.0)).sqrt() * p2 - (jf / (jf + 1.0)).sqrt() * p3;
            }
            pp = (2.0 * nf).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 3e-15 * z.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !converged {
            return Err(SpdcError::NotConverged {
                nodes: n,
                relative_change: f64::NAN,
                tolerance: 3e-15,
            });
        }
        // stored descending during the sweep, flipped below
        nodes[i] = z;
        nodes[n - 1 - i] = -z;
        weights[i] = 2.0 / (pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    nodes.reverse();
    weights.reverse();
    Ok(Rule { nodes, weights })
}

/// Gauss–Legendre rule on [−1, 1], nodes in ascending order.
pub fn gauss_legendre(n: usize) -> Result<Rule> {
    if n == 0 || n > 500 {
        return Err(SpdcError::invalid(format!(
            "Gauss-Legendre order must be in 1..=500, got {n}"
        )));
    }
    let nf = n as f64;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut z = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut pp = 0.0;
        for _ in 0..100 {
            let mut p1 = 1.0;
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = j as f64;
                p1 = ((2.0 * jf + 1.0) * z * p2 - jf * p3) / (jf + 1.0);
            }
            pp = nf * (z * p1 - p2) / (z * z - 1.0);
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 {
                break;
            }
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[n - 1 - i] = weights[i];
    }
    Ok(Rule { nodes, weights })
}

/// Composite Gauss–Legendre integral of `f` over [a, b] with `panels` equal
/// panels of the given rule.
pub fn integrate_panels(rule: &Rule, a: f64, b: f64, panels: usize, f: impl Fn(f64) -> f64) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let mid = a + (p as f64 + 0.5) * h;
            0.5 * h * rule.integrate(|x| f(mid + 0.5 * h * x))
        })
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    /// (k−1)!! for even k, with (−1)!! = 1.
    fn odd_double_factorial_below(k: u32) -> f64 {
        (1..k).step_by(2).map(|v| v as f64).product()
    }

    #[test]
    fn hermite_moments() {
        // ∫ x^{2k} e^{−x²} dx = (2k−1)!!·√π / 2^k
        let sqrt_pi = std::f64::consts::PI.sqrt();
        for n in [1usize, 2, 3, 6, 8, 16, 32, 64] {
            let rule = gauss_hermite(n).unwrap();
            assert_eq!(rule.len(), n);
            assert!(rule.nodes.windows(2).all(|w| w[0] < w[1]));
            for k in 0..n as u32 {
                let exact = if k % 2 == 1 {
                    0.0
                } else {
                    odd_double_factorial_below(k) * sqrt_pi / 2f64.powi(k as i32 / 2)
                };
                let got = rule.integrate(|x| x.powi(k as i32));
                let scale = rule.integrate(|x| x.abs().powi(k as i32)).max(1.0);
                assert!((got - exact).abs() < 1e-11 * scale, "n={n} k={k}: {got} vs {exact}");
            }
        }
    }

    #[test]
    fn hermite_closed_forms() {
        let rule = gauss_hermite(2).unwrap();
        let r = 0.5f64.sqrt();
        assert!((rule.nodes[1] - r).abs() < 1e-15);
        assert!((rule.weights[0] - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-15);
        // ∫ cos(x) e^{−x²} = √π e^{−1/4}
        let rule = gauss_hermite(16).unwrap();
        let got = rule.integrate(f64::cos);
        assert!((got - std::f64::consts::PI.sqrt() * (-0.25f64).exp()).abs() < 1e-14);
    }

    #[test]
    fn legendre_moments() {
        for n in [1usize, 2, 5, 10, 20] {
            let rule = gauss_legendre(n).unwrap();
            for k in 0..(2 * n) as i32 {
                let exact = if k % 2 == 1 { 0.0 } else { 2.0 / (k as f64 + 1.0) };
                let got = rule.integrate(|x| x.powi(k));
                assert!((got - exact).abs() < 1e-13, "n={n} k={k}");
            }
        }
        let rule = gauss_legendre(12).unwrap();
        let got = integrate_panels(&rule, 0.0, std::f64::consts::PI, 4, f64::sin);
        assert!((got - 2.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_orders() {
        assert!(gauss_hermite(0).is_err());
        assert!(gauss_legendre(0).is_err());
    }
}
