//! Fixed-order Gauss–Legendre quadrature.

use once_cell::sync::Lazy;

/// Nodes per panel.
pub const ORDER: usize = 20;

static RULE: Lazy<(Vec<f64>, Vec<f64>)> = Lazy::new(|| legendre_rule(ORDER));

/// Nodes and weights on `[-1, 1]`, by Newton iteration on `P_n`.
pub fn legendre_rule(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    let nf = n as f64;
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let kf = k as f64;
                let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
                p0 = p1;
                p1 = p2;
            }
            dp = nf * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}

/// `∫_a^b f` with one 20-point panel.
pub fn panel<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64) -> f64 {
    let (x, w) = &*RULE;
    let half = 0.5 * (b - a);
    let mid = 0.5 * (a + b);
    x.iter()
        .zip(w)
        .map(|(xi, wi)| wi * f(mid + half * xi))
        .sum::<f64>()
        * half
}

/// `∫_a^b f` split into `panels` equal pieces.
pub fn composite<F: FnMut(f64) -> f64>(mut f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|k| panel(&mut f, a + k as f64 * h, a + (k + 1) as f64 * h))
        .sum()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_two_and_nodes_are_symmetric() {
        let (x, w) = legendre_rule(ORDER);
        assert!((w.iter().sum::<f64>() - 2.0).abs() < 1e-14);
        for i in 0..ORDER {
            assert!((x[i] + x[ORDER - 1 - i]).abs() < 1e-15);
        }
    }

    #[test]
    fn exact_for_high_degree_polynomials() {
        // 20 nodes integrate degree 39 exactly.
        let v = panel(|x| x.powi(38), -1.0, 1.0);
        assert!((v - 2.0 / 39.0).abs() < 1e-14);
    }

    #[test]
    fn smooth_integrands() {
        let v = composite(f64::exp, 0.0, 3.0, 4);
        assert!((v - (3f64.exp() - 1.0)).abs() < 1e-12);
        let v = composite(|x| 1.0 / (1.0 + x * x), 0.0, 1.0, 2);
        assert!((v - std::f64::consts::FRAC_PI_4).abs() < 1e-15);
    }
}
