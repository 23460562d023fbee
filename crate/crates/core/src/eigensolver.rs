//! Lowest eigenpairs of real symmetric operators.
//!
//! The iterative path is Lanczos with full (twice-applied classical
//! Gram–Schmidt) reorthogonalization. When the operator exposes a banded form
//! the Krylov space is built from the shift-inverted operator (H − σ)⁻¹ with σ
//! below the spectrum, which turns the tightly clustered low end of a stencil
//! spectrum into well separated extremal eigenvalues. Either way, reported
//! energies are Rayleigh quotients of H and residuals are ‖Hv − Ev‖ from a
//! fresh application of H.
//!
//! A dense path (full diagonalization of the materialized matrix) serves as the
//! oracle for small dimensions.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::model::SymmetricOperator;

pub const DEFAULT_TOL: f64 = 1e-9;
pub const DEFAULT_MAX_ITER: usize = 10_000;
pub const DEFAULT_K: usize = 6;

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub energy: f64,
    /// Unit 2-norm eigenvector.
    pub vector: Vec<f64>,
    /// ‖Hv − Ev‖₂
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Method {
    Lanczos,
    ShiftInvertLanczos { shift: f64 },
    Dense,
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Method::Lanczos => write!(f, "lanczos"),
            Method::ShiftInvertLanczos { shift } => write!(f, "shift-invert-lanczos(sigma={shift:.6})"),
            Method::Dense => write!(f, "dense"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Diagnostics {
    pub iterations: usize,
    pub method: Method,
    pub max_residual: f64,
    /// Fresh start vectors injected after an invariant subspace was found.
    pub restarts: usize,
}

#[derive(Debug, Clone)]
pub struct SpectrumResult {
    /// Ascending in energy.
    pub pairs: Vec<EigenPair>,
    pub tol: f64,
    pub diagnostics: Diagnostics,
}

impl SpectrumResult {
    pub fn energies(&self) -> Vec<f64> {
        self.pairs.iter().map(|p| p.energy).collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Strategy {
    /// Shift-invert when the operator is banded, plain Lanczos otherwise.
    Auto,
    Plain,
    ShiftInvert,
}

#[derive(Debug, Clone)]
pub struct SolveOptions {
    pub k: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub strategy: Strategy,
    /// Explicit shift for shift-invert; must lie below the spectrum.
    pub shift: Option<f64>,
    pub seed: u64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            k: DEFAULT_K,
            tol: DEFAULT_TOL,
            max_iter: DEFAULT_MAX_ITER,
            strategy: Strategy::Auto,
            shift: None,
            seed: 0x5eed,
        }
    }
}

/// The `k` lowest eigenpairs with ‖Hv − Ev‖ ≤ `tol`.
pub fn solve_lowest(op: &dyn SymmetricOperator, k: usize, tol: f64) -> Result<SpectrumResult> {
    solve(
        op,
        &SolveOptions {
            k,
            tol,
            ..SolveOptions::default()
        },
    )
}

pub fn solve(op: &dyn SymmetricOperator, opts: &SolveOptions) -> Result<SpectrumResult> {
    let n = op.dim();
    if opts.k == 0 || opts.k > n {
        return Err(Error::Usage(format!("k = {} out of range 1..={n}", opts.k)));
    }
    if !(opts.tol > 0.0) {
        return Err(Error::Usage(format!("tolerance must be positive, got {}", opts.tol)));
    }
    let use_si = match opts.strategy {
        Strategy::Plain => false,
        Strategy::ShiftInvert => true,
        Strategy::Auto => op.banded().is_some(),
    };
    let mut result = if use_si {
        let band = op
            .banded()
            .ok_or_else(|| Error::Usage("shift-invert requires a banded operator".into()))?;
        let shift = match opts.shift {
            Some(s) => s,
            None => {
                let lb = op.lower_bound().ok_or_else(|| {
                    Error::Usage("shift-invert needs an explicit shift or a spectral lower bound".into())
                })?;
                lb - 1e-2 * (1.0 + lb.abs())
            }
        };
        let chol = band.cholesky_shifted(shift)?;
        let mut work = vec![0.0; n];
        let mut inv = |v: &[f64], out: &mut [f64]| chol.solve(v, out, &mut work);
        lanczos(op, &mut inv, Some(shift), opts)?
    } else {
        let mut plain = |v: &[f64], out: &mut [f64]| op.apply(v, out);
        lanczos(op, &mut plain, None, opts)?
    };
    orient(&mut result.pairs, op, opts.tol);
    result.diagnostics.max_residual = result.pairs.iter().fold(0.0, |m, p| m.max(p.residual));
    Ok(result)
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

/// Two passes of classical Gram–Schmidt against every basis vector.
fn reorthogonalize(basis: &[Vec<f64>], w: &mut [f64]) {
    for _ in 0..2 {
        let coeffs: Vec<f64> = basis.iter().map(|u| dot(u, w)).collect();
        for (u, c) in basis.iter().zip(coeffs) {
            axpy(-c, u, w);
        }
    }
}

fn residual_of(op: &dyn SymmetricOperator, v: &[f64], hv: &mut [f64]) -> (f64, f64) {
    op.apply(v, hv);
    let e = dot(v, hv);
    let r = hv.iter().zip(v).map(|(h, x)| (h - e * x).powi(2)).sum::<f64>().sqrt();
    (e, r)
}

fn random_unit(n: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let mut v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let s = norm(&v);
    v.iter_mut().for_each(|x| *x /= s);
    v
}

/// Lanczos on the transformed operator `apply_t`; `shift` marks shift-invert mode
/// (targets are then the largest Ritz values μ, with E ≈ σ + 1/μ).
fn lanczos(
    op: &dyn SymmetricOperator,
    apply_t: &mut dyn FnMut(&[f64], &mut [f64]),
    shift: Option<f64>,
    opts: &SolveOptions,
) -> Result<SpectrumResult> {
    let n = op.dim();
    let k = opts.k;
    let max_m = opts.max_iter.min(n).max(k);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut basis: Vec<Vec<f64>> = Vec::new();
    let mut alphas: Vec<f64> = Vec::new();
    let mut betas: Vec<f64> = Vec::new();
    let mut restarts = 0;
    let mut v = random_unit(n, &mut rng);
    let mut w = vec![0.0; n];
    let mut hv = vec![0.0; n];
    let mut last_check = 0;
    let mut best_residual = f64::INFINITY;
    let method = match shift {
        Some(s) => Method::ShiftInvertLanczos { shift: s },
        None => Method::Lanczos,
    };

    loop {
        let j = basis.len();
        apply_t(&v, &mut w);
        let alpha = dot(&v, &w);
        axpy(-alpha, &v, &mut w);
        if j > 0 {
            axpy(-betas[j - 1], &basis[j - 1], &mut w);
        }
        basis.push(std::mem::take(&mut v));
        alphas.push(alpha);
        reorthogonalize(&basis, &mut w);
        let beta = norm(&w);
        let m = basis.len();

        let invariant = beta <= 1e-13 * alphas.iter().fold(0.0f64, |a, x| a.max(x.abs())).max(1e-300);
        let due = m >= k && (m - last_check >= (m / 8).max(4) || invariant || m == max_m);
        if due {
            last_check = m;
            let ritz = ritz_decomposition(&alphas, &betas);
            // Residual estimates in terms of H.
            let mut h_tail = 1.0;
            if let (Some(s), false) = (shift, invariant) {
                // r_H = -(β s_m / μ) (H - σ) v_{m+1}
                let vnext: Vec<f64> = w.iter().map(|x| x / beta).collect();
                op.apply(&vnext, &mut hv);
                h_tail = hv.iter().zip(&vnext).map(|(h, x)| (h - s * x).powi(2)).sum::<f64>().sqrt();
            }
            let order = target_order(&ritz.0, shift.is_some());
            let estimates: Vec<f64> = order
                .iter()
                .take(k)
                .map(|&i| {
                    let last = ritz.1[(m - 1, i)].abs();
                    let b = if invariant { 0.0 } else { beta };
                    match shift {
                        Some(_) => b * last / ritz.0[i].abs() * h_tail,
                        None => b * last,
                    }
                })
                .collect();
            let have_k = order.len() >= k;
            if have_k && estimates.iter().all(|&e| e <= 0.5 * opts.tol) || m == max_m || (invariant && m == n) {
                let pairs = ritz_pairs(op, &basis, &ritz.1, &order[..k.min(order.len())], &mut hv);
                let worst = pairs.iter().fold(0.0f64, |a, p| a.max(p.residual));
                best_residual = best_residual.min(worst);
                if pairs.len() == k && worst <= opts.tol {
                    let mut pairs = pairs;
                    pairs.sort_by(|a, b| a.energy.total_cmp(&b.energy));
                    return Ok(SpectrumResult {
                        pairs,
                        tol: opts.tol,
                        diagnostics: Diagnostics {
                            iterations: m,
                            method,
                            max_residual: worst,
                            restarts,
                        },
                    });
                }
                if m == max_m || m == n {
                    return Err(Error::NoConvergence {
                        iterations: m,
                        max_residual: best_residual,
                        method: method.to_string(),
                    });
                }
            }
        }
        if m >= max_m || m >= n {
            return Err(Error::NoConvergence {
                iterations: m,
                max_residual: best_residual,
                method: method.to_string(),
            });
        }
        if invariant {
            // Krylov space exhausted; continue from a fresh direction.
            restarts += 1;
            let mut fresh = random_unit(n, &mut rng);
            reorthogonalize(&basis, &mut fresh);
            let s = norm(&fresh);
            fresh.iter_mut().for_each(|x| *x /= s);
            betas.push(0.0);
            v = fresh;
        } else {
            betas.push(beta);
            v = w.iter().map(|x| x / beta).collect();
        }
    }
}

/// Eigen-decomposition of the tridiagonal Lanczos matrix.
fn ritz_decomposition(alphas: &[f64], betas: &[f64]) -> (Vec<f64>, DMatrix<f64>) {
    let m = alphas.len();
    let mut t = DMatrix::zeros(m, m);
    for i in 0..m {
        t[(i, i)] = alphas[i];
        if i + 1 < m {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = SymmetricEigen::new(t);
    (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors)
}

/// Indices of Ritz values ordered from most to least wanted.
fn target_order(values: &[f64], shift_invert: bool) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    if shift_invert {
        // μ = 1/(E − σ) > 0; largest μ ↔ lowest E.
        idx.retain(|&i| values[i] > 0.0);
        idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]));
    } else {
        idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    }
    idx
}

fn ritz_pairs(
    op: &dyn SymmetricOperator,
    basis: &[Vec<f64>],
    s: &DMatrix<f64>,
    chosen: &[usize],
    hv: &mut [f64],
) -> Vec<EigenPair> {
    let n = op.dim();
    chosen
        .iter()
        .map(|&i| {
            let mut y = vec![0.0; n];
            for (j, u) in basis.iter().enumerate() {
                axpy(s[(j, i)], u, &mut y);
            }
            let ny = norm(&y);
            y.iter_mut().for_each(|x| *x /= ny);
            let (energy, residual) = residual_of(op, &y, hv);
            EigenPair {
                energy,
                vector: y,
                residual,
            }
        })
        .collect()
}

/// Sign and ordering convention.
///
/// Each vector's largest-magnitude entry is made positive. Runs of pairs whose
/// successive gaps are below 10·tol are rotated to diagonalize the operator's
/// orientation observable (the electron coordinate for grid Hamiltonians) and
/// ordered by increasing expectation value.
fn orient(pairs: &mut [EigenPair], op: &dyn SymmetricOperator, tol: f64) {
    pairs.sort_by(|a, b| a.energy.total_cmp(&b.energy));
    if let Some(obs) = op.orientation_observable() {
        let mut start = 0;
        while start < pairs.len() {
            let mut end = start + 1;
            while end < pairs.len() && pairs[end].energy - pairs[end - 1].energy < 10.0 * tol {
                end += 1;
            }
            if end - start > 1 {
                rotate_cluster(&mut pairs[start..end], &obs, op);
            }
            start = end;
        }
    }
    for p in pairs.iter_mut() {
        fix_sign(&mut p.vector);
    }
}

fn rotate_cluster(cluster: &mut [EigenPair], obs: &[f64], op: &dyn SymmetricOperator) {
    let c = cluster.len();
    let mut xm = DMatrix::zeros(c, c);
    for a in 0..c {
        for b in a..c {
            let v: f64 = cluster[a]
                .vector
                .iter()
                .zip(&cluster[b].vector)
                .zip(obs)
                .map(|((u, w), o)| u * w * o)
                .sum();
            xm[(a, b)] = v;
            xm[(b, a)] = v;
        }
    }
    let eig = SymmetricEigen::new(xm);
    let mut order: Vec<usize> = (0..c).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let n = cluster[0].vector.len();
    let mut hv = vec![0.0; n];
    let rotated: Vec<EigenPair> = order
        .iter()
        .map(|&col| {
            let mut y = vec![0.0; n];
            for a in 0..c {
                axpy(eig.eigenvectors[(a, col)], &cluster[a].vector, &mut y);
            }
            let ny = norm(&y);
            y.iter_mut().for_each(|x| *x /= ny);
            let (energy, residual) = residual_of(op, &y, &mut hv);
            EigenPair {
                energy,
                vector: y,
                residual,
            }
        })
        .collect();
    for (slot, p) in cluster.iter_mut().zip(rotated) {
        *slot = p;
    }
}

fn fix_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > v[best].abs() {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// Oracle: full dense diagonalization, lowest `k` pairs with the same orientation convention.
pub fn dense_lowest(op: &dyn SymmetricOperator, k: usize) -> Result<SpectrumResult> {
    let n = op.dim();
    if k == 0 || k > n {
        return Err(Error::Usage(format!("k = {k} out of range 1..={n}")));
    }
    let eig = dense_matrix(op).selfadjoint_eigendecomposition(faer::Side::Lower);
    let (vals, vecs) = (eig.s().column_vector(), eig.u());
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&a, &b| vals.read(a).total_cmp(&vals.read(b)));
    let mut hv = vec![0.0; n];
    let mut pairs: Vec<EigenPair> = idx[..k]
        .iter()
        .map(|&i| {
            let v: Vec<f64> = (0..n).map(|r| vecs.read(r, i)).collect();
            let (_, residual) = residual_of(op, &v, &mut hv);
            EigenPair {
                energy: vals.read(i),
                vector: v,
                residual,
            }
        })
        .collect();
    let tol = pairs.iter().fold(0.0f64, |a, p| a.max(p.residual)).max(f64::EPSILON);
    orient(&mut pairs, op, tol);
    Ok(SpectrumResult {
        pairs,
        tol,
        diagnostics: Diagnostics {
            iterations: 0,
            method: Method::Dense,
            max_residual: tol,
            restarts: 0,
        },
    })
}

fn dense_matrix(op: &dyn SymmetricOperator) -> faer::Mat<f64> {
    let n = op.dim();
    let mut m = faer::Mat::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        for (i, v) in col.iter().enumerate() {
            m.write(i, j, *v);
        }
        e[j] = 0.0;
    }
    m
}

/// All eigenvalues of the materialized matrix, ascending.
pub fn dense_eigenvalues(op: &dyn SymmetricOperator) -> Vec<f64> {
    let mut ev = dense_matrix(op).selfadjoint_eigenvalues(faer::Side::Lower);
    ev.sort_by(f64::total_cmp);
    ev
}

/// max |⟨v_i, v_j⟩| over i ≠ j; 0 for fewer than two pairs.
pub fn orthonormality_check(res: &SpectrumResult) -> f64 {
    let mut worst = 0.0f64;
    for i in 0..res.pairs.len() {
        for j in (i + 1)..res.pairs.len() {
            worst = worst.max(dot(&res.pairs[i].vector, &res.pairs[j].vector).abs());
        }
    }
    worst
}
