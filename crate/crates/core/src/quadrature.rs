//! Gauss quadrature rules and associated Laguerre polynomials.

use std::f64::consts::PI;

use nalgebra::DMatrix;

/// Gauss–Hermite nodes and weights for ∫ f(x) e^{-x²} dx, ascending nodes.
///
/// Nodes start from the Jacobi-matrix eigenvalues and are polished by Newton
/// steps on the Hermite-function recurrence (weight folded in, so values stay
/// finite for several hundred points). Weights come from the recurrence.
pub fn gauss_hermite(n: usize) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let jacobi = DMatrix::from_fn(n, n, |i, j| {
        if i + 1 == j || j + 1 == i {
            (0.5 * i.max(j) as f64).sqrt()
        } else {
            0.0
        }
    });
    let mut guesses: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
    guesses.sort_by(f64::total_cmp);
    let pim4 = PI.powf(-0.25);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    for (i, &g) in guesses.iter().enumerate() {
        let mut z = g;
        let mut pp = 1.0;
        for _ in 0..20 {
            let mut p1 = pim4 * (-0.5 * z * z).exp();
            let mut p2 = 0.0;
            for j in 0..n {
                let p3 = p2;
                p2 = p1;
                let jf = (j + 1) as f64;
                p1 = z * (2.0 / jf).sqrt() * p2 - ((jf - 1.0) / jf).sqrt() * p3;
            }
            pp = (2.0 * n as f64).sqrt() * p2;
            let z1 = z;
            z = z1 - p1 / pp;
            if (z - z1).abs() <= 1e-15 * z.abs().max(1.0) {
                break;
            }
        }
        x[i] = z;
        w[i] = 2.0 * (-z * z).exp() / (pp * pp);
    }
    (x, w)
}

/// Gauss–Legendre nodes and weights on [lo, hi], ascending nodes.
pub fn gauss_legendre(n: usize, lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    assert!(n >= 1);
    let mut x = vec![0.0; n];
    let mut w = vec![0.0; n];
    let xm = 0.5 * (hi + lo);
    let xl = 0.5 * (hi - lo);
    let nf = n as f64;
    for i in 0..(n + 1) / 2 {
        let mut z = (PI * (i as f64 + 0.75) / (nf + 0.5)).cos();
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
        x[i] = xm - xl * z;
        x[n - 1 - i] = xm + xl * z;
        w[i] = 2.0 * xl / ((1.0 - z * z) * pp * pp);
        w[n - 1 - i] = w[i];
    }
    (x, w)
}

/// Composite Gauss–Legendre rule over consecutive breakpoints.
pub fn composite_legendre(breaks: &[f64], per_panel: usize) -> (Vec<f64>, Vec<f64>) {
    let mut xs = Vec::with_capacity(per_panel * breaks.len());
    let mut ws = Vec::with_capacity(per_panel * breaks.len());
    for pair in breaks.windows(2) {
        let (x, w) = gauss_legendre(per_panel, pair[0], pair[1]);
        xs.extend(x);
        ws.extend(w);
    }
    (xs, ws)
}

/// Associated Laguerre polynomial L^α_n(x) by the three-term recurrence.
pub fn laguerre(n: usize, alpha: f64, x: f64) -> f64 {
    let mut prev = 1.0;
    if n == 0 {
        return prev;
    }
    let mut cur = 1.0 + alpha - x;
    for k in 1..n {
        let kf = k as f64;
        let next = ((2.0 * kf + 1.0 + alpha - x) * cur - (kf + alpha) * prev) / (kf + 1.0);
        prev = cur;
        cur = next;
    }
    cur
}

/// L^α_n(x) from its explicit sum Σ_k (−1)^k C(n+α, n−k) x^k / k!.
pub fn laguerre_direct(n: usize, alpha: f64, x: f64) -> f64 {
    let mut total = 0.0;
    for k in 0..=n {
        // C(n+α, n−k) = Π_{j=1}^{n−k} (α + k + j) / j
        let mut binom = 1.0;
        for j in 1..=(n - k) {
            binom *= (alpha + k as f64 + j as f64) / j as f64;
        }
        let mut term = binom;
        for j in 1..=k {
            term *= x / j as f64;
        }
        total += if k % 2 == 0 { term } else { -term };
    }
    total
}

/// Normalized Hermite function h_n(x) = (2ⁿ n! √π)^{-1/2} H_n(x) e^{-x²/2}.
pub fn hermite_function(n: usize, x: f64) -> f64 {
    let mut prev = 0.0;
    let mut cur = PI.powf(-0.25) * (-0.5 * x * x).exp();
    for j in 0..n {
        let jf = (j + 1) as f64;
        let next = x * (2.0 / jf).sqrt() * cur - ((jf - 1.0) / jf).sqrt() * prev;
        prev = cur;
        cur = next;
    }
    cur
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn hermite_moments() {
        let (x, w) = gauss_hermite(200);
        let sum: f64 = w.iter().sum();
        assert!((sum - PI.sqrt()).abs() < 1e-12);
        let m2: f64 = x.iter().zip(&w).map(|(x, w)| w * x * x).sum();
        assert!((m2 - 0.5 * PI.sqrt()).abs() < 1e-12);
        let m4: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(4)).sum();
        assert!((m4 - 0.75 * PI.sqrt()).abs() < 1e-11);
        assert!(x.windows(2).all(|p| p[0] < p[1]));
    }

    #[test]
    fn legendre_integrates_polynomials() {
        let (x, w) = gauss_legendre(10, -1.0, 3.0);
        let i: f64 = x.iter().zip(&w).map(|(x, w)| w * x.powi(7)).sum();
        assert!((i - (3f64.powi(8) - 1.0) / 8.0).abs() < 1e-10);
        let (x, w) = composite_legendre(&[0.0, 1.0, 2.0], 8);
        let e: f64 = x.iter().zip(&w).map(|(x, w)| w * (-x).exp()).sum();
        assert!((e - (1.0 - (-2f64).exp())).abs() < 1e-14);
    }

    #[test]
    fn laguerre_known_values() {
        assert_eq!(laguerre(0, 1.0, 3.0), 1.0);
        assert!((laguerre(1, 1.0, 0.5) - 1.5).abs() < 1e-15);
        // L^1_2(x) = (x² − 6x + 6)/2
        assert!((laguerre(2, 1.0, 1.3) - (1.69 - 7.8 + 6.0) / 2.0).abs() < 1e-14);
        for n in 0..12 {
            for &x in &[0.0, 0.3, 1.7, 5.0] {
                let a = laguerre(n, 1.0, x);
                let b = laguerre_direct(n, 1.0, x);
                assert!((a - b).abs() < 1e-9 * b.abs().max(1.0), "n={n} x={x}");
            }
        }
    }

    #[test]
    fn hermite_functions_orthonormal() {
        let (x, w) = gauss_hermite(120);
        for m in 0..6 {
            for n in 0..6 {
                let s: f64 = x
                    .iter()
                    .zip(&w)
                    .map(|(&x, &w)| w * (x * x).exp() * hermite_function(m, x) * hermite_function(n, x))
                    .sum();
                let expect = if m == n { 1.0 } else { 0.0 };
                assert!((s - expect).abs() < 1e-12);
            }
        }
    }
}
