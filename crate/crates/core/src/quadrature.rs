//! Gauss rules on intervals and collapsed-coordinate rules on simplices.

/// Gauss–Legendre nodes and weights on [0, 1].
pub fn gauss_legendre(q: usize) -> Vec<(f64, f64)> {
    assert!(q >= 1);
    let mut out = Vec::with_capacity(q);
    for k in 0..q {
        // Tricomi initial guess, then Newton on P_q
        let mut x = ((4 * k + 3) as f64 * std::f64::consts::PI / (4 * q + 2) as f64).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(q, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(q, x);
        dp = if d != 0.0 { d } else { dp };
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push(((1.0 - x) / 2.0, w / 2.0));
    }
    out.sort_by(|a, b| a.0.total_cmp(&b.0));
    out
}

fn legendre(q: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=q {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    if q == 0 {
        return (1.0, 0.0);
    }
    let d = q as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// A rule on the reference n-simplex: barycentric points and weights that
/// sum to one (multiply by the cell volume to integrate).
#[derive(Debug, Clone)]
pub struct SimplexRule {
    pub points: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
}

impl SimplexRule {
    /// Duffy-collapsed tensor Gauss rule with `q` points per axis; exact for
    /// polynomials of degree 2q − n.
    pub fn collapsed(n: usize, q: usize) -> Self {
        let g = gauss_legendre(q);
        let fact: f64 = (1..=n).map(|k| k as f64).product();
        let mut points = Vec::new();
        let mut weights = Vec::new();
        let total = q.pow(n as u32);
        for flat in 0..total {
            let mut idx = flat;
            let mut lam = vec![0.0; n + 1];
            let mut rest = 1.0;
            let mut w = fact;
            for k in 0..n {
                let (t, wt) = g[idx % q];
                idx /= q;
                lam[k + 1] = rest * t;
                w *= wt * (1.0 - t).powi((n - k - 1) as i32);
                rest *= 1.0 - t;
            }
            lam[0] = rest;
            points.push(lam);
            weights.push(w);
        }
        SimplexRule { points, weights }
    }

    /// Map a barycentric point to ambient coordinates.
    pub fn map(lam: &[f64], verts: &[&[f64]]) -> Vec<f64> {
        let mut x = vec![0.0; verts[0].len()];
        for (l, v) in lam.iter().zip(verts) {
            for (xi, vi) in x.iter_mut().zip(v.iter()) {
                *xi += l * vi;
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn legendre_integrates_monomials() {
        let g = gauss_legendre(5);
        for p in 0..10 {
            let s: f64 = g.iter().map(|(x, w)| w * x.powi(p)).sum();
            assert!((s - 1.0 / (p + 1) as f64).abs() < 1e-14, "degree {p}");
        }
    }

    #[test]
    fn triangle_rule_matches_beta_integrals() {
        // ∫ λ1^a λ2^b over the reference simplex (volume-normalized) = 2 a! b! / (a+b+2)!
        let r = SimplexRule::collapsed(2, 6);
        let f = |k: u32| (1..=k).map(|i| i as f64).product::<f64>();
        for a in 0..5u32 {
            for b in 0..5u32 {
                let s: f64 = r
                    .points
                    .iter()
                    .zip(&r.weights)
                    .map(|(l, w)| w * l[1].powi(a as i32) * l[2].powi(b as i32))
                    .sum();
                let exact = 2.0 * f(a) * f(b) / f(a + b + 2);
                assert!((s - exact).abs() < 1e-14);
            }
        }
    }

    #[test]
    fn tetra_weights_sum_to_one() {
        let r = SimplexRule::collapsed(3, 4);
        assert!((r.weights.iter().sum::<f64>() - 1.0).abs() < 1e-14);
        let s: f64 = r
            .points
            .iter()
            .zip(&r.weights)
            .map(|(l, w)| w * l[3] * l[3])
            .sum();
        assert!((s - 2.0 * 6.0 / 120.0).abs() < 1e-14);
    }
}
