//! Exact factorization Ψ(x,q) = Φ(x) χ(q|x) of coupled eigenstates and the
//! electron–photon potential obtained by inversion.
//!
//! Derivatives of χ along x are formed from the smooth full state rather than
//! from the quotient directly: with ∂Ψ the 4th-order stencil derivative of Ψ
//! and ∂Φ = ⟨Ψ|∂Ψ⟩_q / Φ,
//!
//! ∂χ = (∂Ψ − χ ∂Φ) / Φ.
//!
//! This avoids differencing across the masked region, where χ is undefined.

use num_complex::Complex64;

use crate::eigensolver::{EigenPair, SpectrumResult};
use crate::error::{Error, Result};
use crate::model::{Grid2D, ModelParams, D1_STENCIL, D2_STENCIL};

/// Nodes with |Φ|² below this fraction of max |Φ|² are masked.
pub const DEFAULT_NODE_EPS: f64 = 1e-8;

/// Eigenstate on the tensor grid, normalized so that Σ Ψ² dx dq = 1.
#[derive(Debug, Clone)]
pub struct FullState {
    pub psi: Vec<f64>,
    pub energy: f64,
    /// Position in the ascending spectrum (0 = ground state).
    pub index: usize,
}

impl FullState {
    pub fn from_pair(pair: &EigenPair, g: &Grid2D, index: usize) -> FullState {
        let s = 1.0 / (g.dx() * g.dq()).sqrt();
        FullState {
            psi: pair.vector.iter().map(|v| v * s).collect(),
            energy: pair.energy,
            index,
        }
    }

    pub fn all_from(res: &SpectrumResult, g: &Grid2D) -> Vec<FullState> {
        res.pairs.iter().enumerate().map(|(i, p)| FullState::from_pair(p, g, i)).collect()
    }

    pub fn norm_sq(&self, g: &Grid2D) -> f64 {
        self.psi.iter().map(|v| v * v).sum::<f64>() * g.dx() * g.dq()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Gauge {
    /// Φ real and nonnegative, χ real.
    RealPositivePhi,
}

#[derive(Debug, Clone)]
pub struct FactorizedState {
    pub phi: Vec<f64>,
    /// ∂Φ/∂x
    pub dphi: Vec<f64>,
    /// χ(q|x), x-major; zero at masked x.
    pub chi: Vec<f64>,
    /// ∂χ/∂x, x-major; zero at masked x.
    pub dchi: Vec<f64>,
    pub mask: Vec<bool>,
    pub gauge: Gauge,
    pub energy: f64,
    pub node_eps: f64,
}

impl FactorizedState {
    pub fn density(&self) -> Vec<f64> {
        self.phi.iter().map(|p| p * p).collect()
    }

    pub fn valid_count(&self) -> usize {
        self.mask.iter().filter(|&&m| m).count()
    }

    /// Complex copy, the starting point for gauge transformations.
    pub fn to_complex(&self) -> ComplexFactorization {
        let c = |v: &Vec<f64>| v.iter().map(|&x| Complex64::new(x, 0.0)).collect();
        ComplexFactorization {
            phi: c(&self.phi),
            dphi: c(&self.dphi),
            chi: c(&self.chi),
            dchi: c(&self.dchi),
            mask: self.mask.clone(),
        }
    }
}

/// A factorization in a general gauge: Φ, χ and their x-derivatives.
#[derive(Debug, Clone)]
pub struct ComplexFactorization {
    pub phi: Vec<Complex64>,
    pub dphi: Vec<Complex64>,
    pub chi: Vec<Complex64>,
    pub dchi: Vec<Complex64>,
    pub mask: Vec<bool>,
}

impl ComplexFactorization {
    /// Φ → e^{−iθ}Φ, χ → e^{iθ}χ, with derivatives carried along analytically.
    pub fn gauge_transform(&self, g: &Grid2D, theta: impl Fn(f64) -> f64, dtheta: impl Fn(f64) -> f64) -> Self {
        let nq = g.nq();
        let mut out = self.clone();
        for (ix, &x) in g.x.nodes().iter().enumerate() {
            let (t, dt) = (theta(x), dtheta(x));
            let e = Complex64::from_polar(1.0, t);
            let i = Complex64::i();
            out.phi[ix] = self.phi[ix] * e.conj();
            out.dphi[ix] = (self.dphi[ix] - i * dt * self.phi[ix]) * e.conj();
            for iq in 0..nq {
                let k = ix * nq + iq;
                out.chi[k] = self.chi[k] * e;
                out.dchi[k] = (self.dchi[k] + i * dt * self.chi[k]) * e;
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct PotentialCurve {
    pub x: Vec<f64>,
    pub bare: Vec<f64>,
    pub eph_em: Vec<f64>,
    pub eph_kin: Vec<f64>,
    pub total: Vec<f64>,
    pub density: Vec<f64>,
    /// true where the values are defined; masked entries hold NaN.
    pub mask: Vec<bool>,
    /// Masked points inside the requested window, reported rather than dropped.
    pub warnings: usize,
}

impl PotentialCurve {
    /// (values, count) of valid points with x in [lo, hi].
    pub fn valid_in(&self, values: &[f64], lo: f64, hi: f64) -> Vec<(f64, f64)> {
        self.x
            .iter()
            .zip(values)
            .zip(&self.mask)
            .filter(|((x, _), m)| **m && **x >= lo && **x <= hi)
            .map(|((x, v), _)| (*x, *v))
            .collect()
    }
}

/// Applies a 5-point stencil along a line with zero (Dirichlet) extension.
fn stencil_line<T>(line: &[T], stencil: &[f64; 5], scale: f64) -> Vec<T>
where
    T: Copy + Default + std::ops::Add<Output = T> + std::ops::Mul<f64, Output = T>,
{
    let n = line.len();
    (0..n)
        .map(|i| {
            let mut acc = T::default();
            for (s, &c) in stencil.iter().enumerate() {
                let j = i as isize + s as isize - 2;
                if j >= 0 && (j as usize) < n && c != 0.0 {
                    acc = acc + line[j as usize] * c;
                }
            }
            acc * scale
        })
        .collect()
}

/// 4th-order first derivative of a grid function along x (Dirichlet).
fn dx_full(psi: &[f64], g: &Grid2D) -> Vec<f64> {
    let (nx, nq) = (g.nx(), g.nq());
    let inv = 1.0 / g.dx();
    let mut out = vec![0.0; nx * nq];
    for ix in 0..nx {
        for (s, &c) in D1_STENCIL.iter().enumerate() {
            let jx = ix as isize + s as isize - 2;
            if c == 0.0 || jx < 0 || jx as usize >= nx {
                continue;
            }
            let src = &psi[jx as usize * nq..(jx as usize + 1) * nq];
            let dst = &mut out[ix * nq..(ix + 1) * nq];
            for (d, v) in dst.iter_mut().zip(src) {
                *d += c * inv * v;
            }
        }
    }
    out
}

/// Factorizes a normalized full state with the default node threshold.
pub fn factorize(psi: &FullState, g: &Grid2D) -> Result<FactorizedState> {
    factorize_with(psi, g, DEFAULT_NODE_EPS)
}

pub fn factorize_with(psi: &FullState, g: &Grid2D, node_eps: f64) -> Result<FactorizedState> {
    let (nx, nq) = (g.nx(), g.nq());
    if psi.psi.len() != nx * nq {
        return Err(Error::Usage(format!("state length {} does not match grid {}", psi.psi.len(), nx * nq)));
    }
    let norm = psi.norm_sq(g);
    if (norm - 1.0).abs() > 1e-8 {
        return Err(Error::Usage(format!("state not normalized on grid: ∑|Ψ|²dxdq = {norm:.12}")));
    }
    let dq = g.dq();
    let dpsi = dx_full(&psi.psi, g);
    let mut phi = vec![0.0; nx];
    let mut dphi = vec![0.0; nx];
    let mut overlap = vec![0.0; nx];
    for ix in 0..nx {
        let col = &psi.psi[ix * nq..(ix + 1) * nq];
        let dcol = &dpsi[ix * nq..(ix + 1) * nq];
        phi[ix] = (col.iter().map(|v| v * v).sum::<f64>() * dq).sqrt();
        overlap[ix] = col.iter().zip(dcol).map(|(a, b)| a * b).sum::<f64>() * dq;
    }
    let max_density = phi.iter().fold(0.0f64, |m, p| m.max(p * p));
    let mask: Vec<bool> = phi.iter().map(|p| p * p >= node_eps * max_density && *p > 0.0).collect();
    if !mask.iter().any(|&m| m) {
        return Err(Error::Degenerate("marginal vanishes at every grid point".into()));
    }
    let mut chi = vec![0.0; nx * nq];
    let mut dchi = vec![0.0; nx * nq];
    for ix in 0..nx {
        if !mask[ix] {
            continue;
        }
        dphi[ix] = overlap[ix] / phi[ix];
        for iq in 0..nq {
            let k = ix * nq + iq;
            chi[k] = psi.psi[k] / phi[ix];
            dchi[k] = (dpsi[k] - chi[k] * dphi[ix]) / phi[ix];
        }
    }
    // dΦ at masked points from the stencil on Φ itself.
    let dphi_fd = stencil_line(&phi, &D1_STENCIL, 1.0 / g.dx());
    for ix in 0..nx {
        if !mask[ix] {
            dphi[ix] = dphi_fd[ix];
        }
    }
    Ok(FactorizedState {
        phi,
        dphi,
        chi,
        dchi,
        mask,
        gauge: Gauge::RealPositivePhi,
        energy: psi.energy,
        node_eps,
    })
}

/// max over valid x of |∫|χ|²dq − 1|.
pub fn pnc_deviation(f: &FactorizedState, g: &Grid2D) -> f64 {
    let nq = g.nq();
    (0..g.nx())
        .filter(|&ix| f.mask[ix])
        .map(|ix| (f.chi[ix * nq..(ix + 1) * nq].iter().map(|c| c * c).sum::<f64>() * g.dq() - 1.0).abs())
        .fold(0.0, f64::max)
}

/// max over valid x of |Φχ − Ψ|, relative to max |Ψ|.
pub fn reconstruction_error(f: &FactorizedState, psi: &FullState, g: &Grid2D) -> f64 {
    let nq = g.nq();
    let scale = psi.psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0f64;
    for ix in 0..g.nx() {
        if !f.mask[ix] {
            continue;
        }
        for iq in 0..nq {
            let k = ix * nq + iq;
            worst = worst.max((f.phi[ix] * f.chi[k] - psi.psi[k]).abs());
        }
    }
    worst / scale
}

/// S(x) = ⟨χ|−i∂ₓχ⟩_q at valid x (NaN at masked points). Identically zero for real χ.
pub fn vector_potential(f: &FactorizedState, g: &Grid2D) -> Vec<f64> {
    vector_potential_complex(&f.to_complex(), g)
}

pub fn vector_potential_complex(f: &ComplexFactorization, g: &Grid2D) -> Vec<f64> {
    let nq = g.nq();
    (0..g.nx())
        .map(|ix| {
            if !f.mask[ix] {
                return f64::NAN;
            }
            let z: Complex64 = (0..nq)
                .map(|iq| f.chi[ix * nq + iq].conj() * f.dchi[ix * nq + iq])
                .sum::<Complex64>()
                * g.dq();
            z.im
        })
        .collect()
}

/// Exact potential in the real-positive-Φ gauge.
pub fn eph_potential_exact(f: &FactorizedState, g: &Grid2D, p: &ModelParams) -> PotentialCurve {
    let nq = g.nq();
    let dq = g.dq();
    let x = g.x.nodes().to_vec();
    let q = g.q.nodes();
    let mut curve = empty_curve(&x, &f.mask, p, f.density());
    for ix in 0..g.nx() {
        if !f.mask[ix] {
            continue;
        }
        let col = &f.chi[ix * nq..(ix + 1) * nq];
        let dcol = stencil_line(col, &D1_STENCIL, 1.0 / dq);
        let em: f64 = (0..nq)
            .map(|iq| 0.5 * dcol[iq] * dcol[iq] + p.photon_potential(q[iq], x[ix]) * col[iq] * col[iq])
            .sum::<f64>()
            * dq;
        let kin = 0.5 / p.mass * f.dchi[ix * nq..(ix + 1) * nq].iter().map(|v| v * v).sum::<f64>() * dq;
        fill(&mut curve, ix, em, kin);
    }
    curve
}

/// Potential for a factorization in an arbitrary gauge, including the −S²/2m
/// term that cancels the gauge dependence of ⟨∂ₓχ|∂ₓχ⟩.
pub fn eph_potential_general(f: &ComplexFactorization, g: &Grid2D, p: &ModelParams) -> PotentialCurve {
    let nq = g.nq();
    let dq = g.dq();
    let x = g.x.nodes().to_vec();
    let q = g.q.nodes();
    let density = f.phi.iter().map(|z| z.norm_sqr()).collect();
    let mut curve = empty_curve(&x, &f.mask, p, density);
    let s = vector_potential_complex(f, g);
    for ix in 0..g.nx() {
        if !f.mask[ix] {
            continue;
        }
        let col = &f.chi[ix * nq..(ix + 1) * nq];
        let dcol = stencil_line(col, &D1_STENCIL, 1.0 / dq);
        let em: f64 = (0..nq)
            .map(|iq| 0.5 * dcol[iq].norm_sqr() + p.photon_potential(q[iq], x[ix]) * col[iq].norm_sqr())
            .sum::<f64>()
            * dq;
        let grad: f64 = f.dchi[ix * nq..(ix + 1) * nq].iter().map(|z| z.norm_sqr()).sum::<f64>() * dq;
        let kin = 0.5 / p.mass * (grad - s[ix] * s[ix]);
        fill(&mut curve, ix, em, kin);
    }
    curve
}

fn empty_curve(x: &[f64], mask: &[bool], p: &ModelParams, density: Vec<f64>) -> PotentialCurve {
    let n = x.len();
    PotentialCurve {
        x: x.to_vec(),
        bare: x.iter().map(|&x| p.adw_potential(x)).collect(),
        eph_em: vec![f64::NAN; n],
        eph_kin: vec![f64::NAN; n],
        total: vec![f64::NAN; n],
        density,
        mask: mask.to_vec(),
        warnings: mask.iter().filter(|&&m| !m).count(),
    }
}

fn fill(curve: &mut PotentialCurve, ix: usize, em: f64, kin: f64) {
    curve.eph_em[ix] = em;
    curve.eph_kin[ix] = kin;
    curve.total[ix] = curve.bare[ix] + em + kin;
}

/// max over valid x of |(−∂²/2m + total − E)Φ| / ‖Φ‖∞, with ∂²Φ from the
/// 4th-order stencil applied to Φ.
pub fn inversion_residual(f: &FactorizedState, curve: &PotentialCurve, energy: f64, g: &Grid2D, p: &ModelParams) -> f64 {
    let d2 = stencil_line(&f.phi, &D2_STENCIL, 1.0 / (g.dx() * g.dx()));
    let scale = f.phi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    (0..g.nx())
        .filter(|&ix| f.mask[ix])
        .map(|ix| (-0.5 / p.mass * d2[ix] + (curve.total[ix] - energy) * f.phi[ix]).abs())
        .fold(0.0, f64::max)
        / scale
}

/// Fraction of |Φ|² on the left (x < 0) and right (x > 0) of the origin;
/// a node exactly at x = 0 is split evenly.
pub fn side_populations(phi: &[f64], x: &[f64], dx: f64) -> (f64, f64) {
    let mut l = 0.0;
    let mut r = 0.0;
    for (p, &xi) in phi.iter().zip(x) {
        let w = p * p * dx;
        if xi < 0.0 {
            l += w;
        } else if xi > 0.0 {
            r += w;
        } else {
            l += 0.5 * w;
            r += 0.5 * w;
        }
    }
    (l, r)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eigensolver::solve_lowest;
    use crate::model::{assemble_coupled_hamiltonian, Axis};

    fn small(p: &ModelParams) -> (Grid2D, Vec<FullState>) {
        let x = Axis::uniform(-8.0, 8.0, 121).unwrap();
        let qh = crate::model::GridSpec::default().q_half_width(p);
        let q = Axis::uniform(-qh, qh, 61).unwrap();
        let g = Grid2D::new(x, q);
        let h = assemble_coupled_hamiltonian(&g, p).unwrap();
        let res = solve_lowest(&h, 3, 1e-9).unwrap();
        let states = FullState::all_from(&res, &g);
        (g, states)
    }

    #[test]
    fn unnormalized_rejected() {
        let p = ModelParams::default().with_coupling(0.2, 0.4);
        let (g, mut s) = small(&p);
        s[0].psi.iter_mut().for_each(|v| *v *= 1.01);
        assert!(matches!(factorize(&s[0], &g), Err(Error::Usage(_))));
    }

    #[test]
    fn zero_state_is_degenerate() {
        let g = Grid2D::new(Axis::uniform(-1.0, 1.0, 11).unwrap(), Axis::uniform(-1.0, 1.0, 11).unwrap());
        // Normalized but everything sits on a single x column that we then zero out.
        let s = FullState {
            psi: vec![0.0; 121],
            energy: 0.0,
            index: 0,
        };
        assert!(factorize(&s, &g).is_err());
        let r = factorize_with(
            &FullState {
                psi: vec![1.0 / (121.0 * g.dx() * g.dq()).sqrt(); 121],
                energy: 0.0,
                index: 0,
            },
            &g,
            2.0,
        );
        assert!(matches!(r, Err(Error::Degenerate(_))));
    }

    #[test]
    fn pnc_reconstruction_and_real_gauge() {
        let p = ModelParams::default().with_coupling(0.5, 0.395);
        let (g, states) = small(&p);
        for s in &states {
            let f = factorize(&s, &g).unwrap();
            assert!(pnc_deviation(&f, &g) < 1e-10);
            assert!(reconstruction_error(&f, s, &g) < 1e-14);
            assert!(f.phi.iter().all(|&v| v >= 0.0));
            let sv = vector_potential(&f, &g);
            assert!(sv.iter().filter(|v| !v.is_nan()).all(|v| v.abs() < 1e-12));
            let c = eph_potential_exact(&f, &g, &p);
            for i in 0..c.x.len() {
                if c.mask[i] {
                    assert!(c.eph_kin[i] >= 0.0);
                    assert!((c.total[i] - c.bare[i] - c.eph_em[i] - c.eph_kin[i]).abs() < 1e-12);
                } else {
                    assert!(c.total[i].is_nan());
                }
            }
        }
    }

    #[test]
    fn gauge_shift_law() {
        let p = ModelParams::default().with_coupling(0.3, 0.39);
        let (g, states) = small(&p);
        let f = factorize(&states[1], &g).unwrap();
        let c = f.to_complex();
        let t = c.gauge_transform(&g, |x| x.sin(), |x| x.cos());
        let s = vector_potential_complex(&t, &g);
        for (ix, &x) in g.x.nodes().iter().enumerate() {
            if f.mask[ix] {
                assert!((s[ix] - x.cos()).abs() < 1e-10);
            }
        }
    }
}
