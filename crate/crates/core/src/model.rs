//! Model parameters, grids and the discrete Hamiltonians.
//!
//! The coupled Hamiltonian acts on a tensor-product grid (x, q) stored x-major:
//! the value at `(ix, iq)` lives at `ix * nq + iq`. Both kinetic terms use the
//! same 4th-order central stencil with Dirichlet (zero) boundaries.

use serde::{Deserialize, Serialize};

use crate::banded::BandedMatrix;
use crate::error::{Error, Result};

/// 4th-order central stencil for the second derivative, offsets -2..=2.
pub const D2_STENCIL: [f64; 5] = [-1.0 / 12.0, 16.0 / 12.0, -30.0 / 12.0, 16.0 / 12.0, -1.0 / 12.0];

/// 4th-order central stencil for the first derivative, offsets -2..=2.
pub const D1_STENCIL: [f64; 5] = [1.0 / 12.0, -8.0 / 12.0, 0.0, 8.0 / 12.0, -1.0 / 12.0];

/// Points needed by the central stencils.
pub const STENCIL_WIDTH: usize = 5;

/// Default cap on |x|·|q|.
pub const DEFAULT_MAX_DIMENSION: usize = 4_000_000;

/// Physical constants of the cavity + asymmetric double-well model (Hartree a.u.).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    pub omega_e: f64,
    pub a: f64,
    pub efield: f64,
    pub lambda_c: f64,
    pub omega_c: f64,
    pub mass: f64,
}

impl Default for ModelParams {
    /// Double-well constants of the reference model, uncoupled, with the cavity
    /// tuned to the bare inter-well splitting 2Ea.
    fn default() -> Self {
        ModelParams {
            omega_e: 1.6,
            a: 2.35,
            efield: 0.08,
            lambda_c: 0.0,
            omega_c: 2.0 * 0.08 * 2.35,
            mass: 1.0,
        }
    }
}

impl ModelParams {
    pub fn with_coupling(mut self, lambda_c: f64, omega_c: f64) -> Self {
        self.lambda_c = lambda_c;
        self.omega_c = omega_c;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let checks = [
            ("omega_e", self.omega_e, self.omega_e > 0.0),
            ("a", self.a, self.a > 0.0),
            ("omega_c", self.omega_c, self.omega_c > 0.0),
            ("mass", self.mass, self.mass > 0.0),
            ("lambda_c", self.lambda_c, self.lambda_c >= 0.0),
            ("efield", self.efield, true),
        ];
        for (name, value, ok) in checks {
            if !value.is_finite() || !ok {
                return Err(Error::Config(format!("invalid model parameter {name} = {value}")));
            }
        }
        Ok(())
    }

    /// Half the bare inter-well asymmetry, Δ = E·a.
    pub fn delta(&self) -> f64 {
        self.efield * self.a
    }

    /// Asymmetric double well ½ω_e²(|x| − a)² + E x.
    pub fn adw_potential(&self, x: f64) -> f64 {
        let d = x.abs() - self.a;
        0.5 * self.omega_e * self.omega_e * d * d + self.efield * x
    }

    /// Length-gauge photon potential ½ω_c²(q − λ_c x / ω_c)².
    pub fn photon_potential(&self, q: f64, x: f64) -> f64 {
        let d = q - self.lambda_c / self.omega_c * x;
        0.5 * self.omega_c * self.omega_c * d * d
    }

    /// Centre of the photon oscillator for an electron at x.
    pub fn photon_center(&self, x: f64) -> f64 {
        self.lambda_c / self.omega_c * x
    }
}

/// A uniform one-dimensional grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Axis {
    nodes: Vec<f64>,
    spacing: f64,
}

impl Axis {
    pub fn uniform(min: f64, max: f64, n: usize) -> Result<Axis> {
        if n < STENCIL_WIDTH {
            return Err(Error::Config(format!(
                "axis needs at least {STENCIL_WIDTH} nodes, got {n}"
            )));
        }
        if !(min.is_finite() && max.is_finite() && max > min) {
            return Err(Error::Config(format!("invalid axis range [{min}, {max}]")));
        }
        let h = (max - min) / (n - 1) as f64;
        let nodes = (0..n).map(|i| min + h * i as f64).collect();
        Ok(Axis { nodes, spacing: h })
    }

    /// Validates an explicit node list: ≥ 5 nodes, strictly uniform to 1e-12 relative.
    pub fn from_nodes(nodes: Vec<f64>) -> Result<Axis> {
        if nodes.len() < STENCIL_WIDTH {
            return Err(Error::Config(format!(
                "axis needs at least {STENCIL_WIDTH} nodes, got {}",
                nodes.len()
            )));
        }
        let h = (nodes[nodes.len() - 1] - nodes[0]) / (nodes.len() - 1) as f64;
        if !(h > 0.0 && h.is_finite()) {
            return Err(Error::Config("axis nodes must be increasing".into()));
        }
        for w in nodes.windows(2) {
            if ((w[1] - w[0]) - h).abs() > 1e-12 * h {
                return Err(Error::Config(format!(
                    "axis is not uniform: step {} vs mean {h}",
                    w[1] - w[0]
                )));
            }
        }
        Ok(Axis { nodes, spacing: h })
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn min(&self) -> f64 {
        self.nodes[0]
    }

    pub fn max(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Same range with the spacing halved.
    pub fn refined(&self) -> Axis {
        Axis::uniform(self.min(), self.max(), 2 * self.len() - 1).expect("refining a valid axis")
    }
}

/// Tensor-product grid of the electron coordinate x and the photon coordinate q.
#[derive(Debug, Clone, PartialEq)]
pub struct Grid2D {
    pub x: Axis,
    pub q: Axis,
}

impl Grid2D {
    pub fn new(x: Axis, q: Axis) -> Grid2D {
        Grid2D { x, q }
    }

    pub fn nx(&self) -> usize {
        self.x.len()
    }

    pub fn nq(&self) -> usize {
        self.q.len()
    }

    pub fn dim(&self) -> usize {
        self.nx() * self.nq()
    }

    pub fn dx(&self) -> f64 {
        self.x.spacing()
    }

    pub fn dq(&self) -> f64 {
        self.q.spacing()
    }

    #[inline]
    pub fn index(&self, ix: usize, iq: usize) -> usize {
        ix * self.nq() + iq
    }

    /// Halves both spacings over the same box.
    pub fn refined(&self) -> Grid2D {
        Grid2D::new(self.x.refined(), self.q.refined())
    }
}

/// Box and resolution settings from which a [`Grid2D`] is built for given parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub x_min: f64,
    pub x_max: f64,
    pub nx: usize,
    pub nq: usize,
    /// Half-width of the q box; `None` selects λ_c a/ω_c + q_tail/√ω_c.
    pub q_max: Option<f64>,
    /// Oscillator lengths of Gaussian tail kept beyond the displaced centre.
    pub q_tail: f64,
}

impl Default for GridSpec {
    fn default() -> Self {
        GridSpec {
            x_min: -8.0,
            x_max: 8.0,
            nx: 161,
            nq: 401,
            q_max: None,
            q_tail: 8.0,
        }
    }
}

impl GridSpec {
    /// Smaller grid used for dense cross-checks.
    pub fn reduced() -> GridSpec {
        GridSpec {
            nx: 61,
            nq: 41,
            ..GridSpec::default()
        }
    }

    pub fn q_half_width(&self, p: &ModelParams) -> f64 {
        self.q_max
            .unwrap_or_else(|| p.lambda_c * p.a / p.omega_c + self.q_tail / p.omega_c.sqrt())
    }

    pub fn build(&self, p: &ModelParams) -> Result<Grid2D> {
        p.validate()?;
        let qm = self.q_half_width(p);
        if !(qm > 0.0 && qm.is_finite()) {
            return Err(Error::Config(format!("invalid q half-width {qm}")));
        }
        Ok(Grid2D::new(
            Axis::uniform(self.x_min, self.x_max, self.nx)?,
            Axis::uniform(-qm, qm, self.nq)?,
        ))
    }

    pub fn x_axis(&self) -> Result<Axis> {
        Axis::uniform(self.x_min, self.x_max, self.nx)
    }
}

/// A real symmetric linear operator.
pub trait SymmetricOperator: Sync {
    fn dim(&self) -> usize;

    /// out = H v
    fn apply(&self, v: &[f64], out: &mut [f64]);

    /// Upper bound on the spectral norm.
    fn norm_bound(&self) -> f64;

    /// A value known to lie at or below the lowest eigenvalue, if available.
    fn lower_bound(&self) -> Option<f64> {
        None
    }

    /// Stored banded form, used by the shift-invert solver.
    fn banded(&self) -> Option<BandedMatrix> {
        None
    }

    /// Diagonal observable used to orient near-degenerate eigenvectors.
    fn orientation_observable(&self) -> Option<Vec<f64>> {
        None
    }

    fn is_symmetric(&self) -> bool {
        true
    }
}

/// Materializes any operator as a dense matrix by applying it to unit vectors.
pub fn to_dense(op: &dyn SymmetricOperator) -> nalgebra::DMatrix<f64> {
    let n = op.dim();
    let mut m = nalgebra::DMatrix::zeros(n, n);
    let mut e = vec![0.0; n];
    let mut col = vec![0.0; n];
    for j in 0..n {
        e[j] = 1.0;
        op.apply(&e, &mut col);
        for i in 0..n {
            m[(i, j)] = col[i];
        }
        e[j] = 0.0;
    }
    m
}

/// Finite-difference Hamiltonian on an (nx × nq) tensor grid, x-major.
///
/// A one-dimensional operator is the special case nq = 1.
#[derive(Debug, Clone)]
pub struct GridHamiltonian {
    nx: usize,
    nq: usize,
    diag: Vec<f64>,
    x_off: [f64; 2],
    q_off: [f64; 2],
    min_potential: f64,
    x_values: Vec<f64>,
}

fn kinetic_couplings(h: f64, mass: f64) -> (f64, [f64; 2]) {
    let s = -1.0 / (2.0 * mass * h * h);
    (s * D2_STENCIL[2], [s * D2_STENCIL[1], s * D2_STENCIL[0]])
}

impl GridHamiltonian {
    fn build(
        x: &Axis,
        q: Option<&Axis>,
        mass: f64,
        potential: impl Fn(f64, f64) -> f64,
    ) -> GridHamiltonian {
        let nx = x.len();
        let nq = q.map_or(1, Axis::len);
        let (cx, x_off) = kinetic_couplings(x.spacing(), mass);
        let (cq, q_off) = q.map_or((0.0, [0.0, 0.0]), |q| kinetic_couplings(q.spacing(), 1.0));
        let mut diag = Vec::with_capacity(nx * nq);
        let mut x_values = Vec::with_capacity(nx * nq);
        let mut min_potential = f64::INFINITY;
        for &xv in x.nodes() {
            for iq in 0..nq {
                let qv = q.map_or(0.0, |q| q.nodes()[iq]);
                let v = potential(xv, qv);
                min_potential = min_potential.min(v);
                diag.push(v + cx + cq);
                x_values.push(xv);
            }
        }
        GridHamiltonian {
            nx,
            nq,
            diag,
            x_off,
            q_off,
            min_potential,
            x_values,
        }
    }

    /// Shape (nx, nq).
    pub fn shape(&self) -> (usize, usize) {
        (self.nx, self.nq)
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }
}

impl SymmetricOperator for GridHamiltonian {
    fn dim(&self) -> usize {
        self.nx * self.nq
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let (nx, nq) = (self.nx, self.nq);
        let [x1, x2] = self.x_off;
        let [q1, q2] = self.q_off;
        for ix in 0..nx {
            let row = ix * nq;
            for iq in 0..nq {
                let i = row + iq;
                let mut s = self.diag[i] * v[i];
                if ix >= 1 {
                    s += x1 * v[i - nq];
                }
                if ix >= 2 {
                    s += x2 * v[i - 2 * nq];
                }
                if ix + 1 < nx {
                    s += x1 * v[i + nq];
                }
                if ix + 2 < nx {
                    s += x2 * v[i + 2 * nq];
                }
                if nq > 1 {
                    if iq >= 1 {
                        s += q1 * v[i - 1];
                    }
                    if iq >= 2 {
                        s += q2 * v[i - 2];
                    }
                    if iq + 1 < nq {
                        s += q1 * v[i + 1];
                    }
                    if iq + 2 < nq {
                        s += q2 * v[i + 2];
                    }
                }
                out[i] = s;
            }
        }
    }

    fn norm_bound(&self) -> f64 {
        let off = 2.0 * (self.x_off[0].abs() + self.x_off[1].abs() + self.q_off[0].abs() + self.q_off[1].abs());
        self.diag.iter().fold(0.0f64, |m, d| m.max(d.abs())) + off
    }

    /// The stencil kinetic term is positive semidefinite, so min V bounds the spectrum.
    fn lower_bound(&self) -> Option<f64> {
        Some(self.min_potential)
    }

    fn banded(&self) -> Option<BandedMatrix> {
        let (nx, nq) = (self.nx, self.nq);
        // Put the shorter axis innermost to minimise the bandwidth.
        let q_inner = nq <= nx || nq == 1;
        let (outer, inner) = if q_inner { (nx, nq) } else { (nq, nx) };
        let (outer_off, inner_off) = if q_inner {
            (self.x_off, self.q_off)
        } else {
            (self.q_off, self.x_off)
        };
        let n = nx * nq;
        let bw = if inner == 1 { 2 } else { 2 * inner };
        let original = |o: usize, i: usize| if q_inner { o * nq + i } else { i * nq + o };
        let mut band = BandedMatrix::zeros(n, bw);
        let mut perm = Vec::with_capacity(n);
        for o in 0..outer {
            for i in 0..inner {
                let k = o * inner + i;
                perm.push(original(o, i));
                band.set(k, 0, self.diag[original(o, i)]);
                if inner > 1 {
                    if i >= 1 {
                        band.set(k, 1, inner_off[0]);
                    }
                    if i >= 2 {
                        band.set(k, 2, inner_off[1]);
                    }
                }
                if o >= 1 {
                    band.set(k, inner, outer_off[0]);
                }
                if o >= 2 {
                    band.set(k, 2 * inner, outer_off[1]);
                }
            }
        }
        if !q_inner {
            band.set_permutation(perm);
        }
        Some(band)
    }

    fn orientation_observable(&self) -> Option<Vec<f64>> {
        Some(self.x_values.clone())
    }
}

/// Uncoupled electron Hamiltonian −(1/2m)∂²_x + V(x) on the x axis.
pub fn assemble_electron_hamiltonian(x: &Axis, p: &ModelParams) -> Result<GridHamiltonian> {
    p.validate()?;
    check_axis(x)?;
    Ok(GridHamiltonian::build(x, None, p.mass, |xv, _| p.adw_potential(xv)))
}

/// Bare cavity mode −½∂²_q + ½ω_c²q² on the q axis (the λ_c = 0 photon factor).
pub fn assemble_photon_hamiltonian(q: &Axis, p: &ModelParams) -> Result<GridHamiltonian> {
    p.validate()?;
    check_axis(q)?;
    let w2 = p.omega_c * p.omega_c;
    Ok(GridHamiltonian::build(q, None, 1.0, |qv, _| 0.5 * w2 * qv * qv))
}

/// Electron + any extra potential, used for the analytical potentials' densities.
pub fn assemble_electron_hamiltonian_with(
    x: &Axis,
    mass: f64,
    potential: impl Fn(f64) -> f64,
) -> Result<GridHamiltonian> {
    check_axis(x)?;
    Ok(GridHamiltonian::build(x, None, mass, |xv, _| potential(xv)))
}

/// Coupled electron–photon Hamiltonian Ĥ^ADW_e + Ĥ_EM on the tensor grid.
pub fn assemble_coupled_hamiltonian(g: &Grid2D, p: &ModelParams) -> Result<GridHamiltonian> {
    assemble_coupled_hamiltonian_capped(g, p, DEFAULT_MAX_DIMENSION)
}

pub fn assemble_coupled_hamiltonian_capped(
    g: &Grid2D,
    p: &ModelParams,
    max_dim: usize,
) -> Result<GridHamiltonian> {
    p.validate()?;
    check_axis(&g.x)?;
    check_axis(&g.q)?;
    let dim = g.nx().checked_mul(g.nq()).unwrap_or(usize::MAX);
    if dim > max_dim {
        return Err(Error::Config(format!(
            "grid dimension {} x {} = {dim} exceeds cap {max_dim}",
            g.nx(),
            g.nq()
        )));
    }
    Ok(GridHamiltonian::build(&g.x, Some(&g.q), p.mass, |xv, qv| {
        p.adw_potential(xv) + p.photon_potential(qv, xv)
    }))
}

fn check_axis(a: &Axis) -> Result<()> {
    if a.len() < STENCIL_WIDTH {
        return Err(Error::Config(format!(
            "grid too coarse: {} nodes, stencil needs {STENCIL_WIDTH}",
            a.len()
        )));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn dot(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| x * y).sum()
    }

    #[test]
    fn adw_potential_values() {
        let p = ModelParams::default();
        assert!((p.adw_potential(0.0) - 0.5 * 1.6 * 1.6 * 2.35 * 2.35).abs() < 1e-12);
        assert!((p.adw_potential(0.0) - 7.0688).abs() < 1e-12);
        assert!((p.adw_potential(p.a) - p.delta()).abs() < 1e-15);
        assert!((p.delta() - 0.188).abs() < 1e-12);
        assert!((p.adw_potential(-p.a) + p.delta()).abs() < 1e-15);
    }

    #[test]
    fn photon_potential_values() {
        let p = ModelParams::default().with_coupling(0.3, 0.5);
        for x in [-3.0, 0.0, 1.7] {
            assert_eq!(p.photon_potential(p.photon_center(x), x), 0.0);
        }
        let p0 = ModelParams::default().with_coupling(0.0, 0.4);
        assert!((p0.photon_potential(1.0, 2.0) - 0.08).abs() < 1e-15);
        let p1 = ModelParams::default().with_coupling(0.1, 0.37676260);
        assert!((p1.photon_potential(0.0, p1.a) - 0.0276125).abs() < 1e-12);
    }

    #[test]
    fn photon_potential_is_shifted_oscillator() {
        let p = ModelParams::default().with_coupling(0.7, 0.45);
        for &(q, x) in &[(0.3, -2.0), (-4.0, 1.1), (2.2, 2.35)] {
            let s = q - p.photon_center(x);
            let bare = ModelParams::default().with_coupling(0.0, 0.45);
            assert!((p.photon_potential(q, x) - bare.photon_potential(s, x)).abs() < 1e-13);
        }
    }

    #[test]
    fn invalid_params_rejected() {
        let mut p = ModelParams::default();
        p.omega_c = 0.0;
        assert!(matches!(p.validate(), Err(Error::Config(_))));
        p = ModelParams::default();
        p.lambda_c = -0.1;
        assert!(p.validate().is_err());
        p = ModelParams::default();
        p.a = f64::NAN;
        assert!(p.validate().is_err());
    }

    #[test]
    fn axis_validation() {
        assert!(Axis::uniform(0.0, 1.0, 4).is_err());
        assert!(Axis::from_nodes(vec![0.0, 1.0, 2.0, 3.5, 4.0]).is_err());
        let a = Axis::from_nodes(vec![0.0, 0.5, 1.0, 1.5, 2.0]).unwrap();
        assert_eq!(a.spacing(), 0.5);
        assert_eq!(a.refined().len(), 9);
    }

    #[test]
    fn coarse_grid_is_config_error() {
        let p = ModelParams::default();
        let g = GridSpec { nx: 5, nq: 5, ..GridSpec::default() }.build(&p).unwrap();
        assert!(assemble_coupled_hamiltonian(&g, &p).is_ok());
        let g = GridSpec::default().build(&p).unwrap();
        assert!(matches!(
            assemble_coupled_hamiltonian_capped(&g, &p, 1000),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn default_q_box_covers_displaced_centres() {
        let p = ModelParams::default().with_coupling(0.9, 0.43442993);
        let g = GridSpec::default().build(&p).unwrap();
        let expect = 0.9 * 2.35 / 0.43442993 + 8.0 / 0.43442993f64.sqrt();
        assert!((g.q.max() - expect).abs() < 1e-12);
        assert!((g.q.min() + expect).abs() < 1e-12);
    }

    #[test]
    fn coupled_operator_is_symmetric() {
        let p = ModelParams::default().with_coupling(0.5, 0.39495042);
        let g = GridSpec { nx: 23, nq: 17, ..GridSpec::default() }.build(&p).unwrap();
        let h = assemble_coupled_hamiltonian(&g, &p).unwrap();
        let n = h.dim();
        let norm = h.norm_bound();
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let (mut hu, mut hv) = (vec![0.0; n], vec![0.0; n]);
        for _ in 0..100 {
            let u: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            let v: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
            h.apply(&u, &mut hu);
            h.apply(&v, &mut hv);
            let scale = dot(&u, &u).sqrt() * dot(&v, &v).sqrt() * norm;
            assert!((dot(&u, &hv) - dot(&hu, &v)).abs() / scale < 1e-10);
        }
    }

    #[test]
    fn banded_form_matches_matvec() {
        let p = ModelParams::default().with_coupling(0.5, 0.4);
        // Both orderings: q inner (nq <= nx) and x inner (nq > nx).
        for (nx, nq) in [(13, 7), (7, 11)] {
            let g = GridSpec { nx, nq, ..GridSpec::default() }.build(&p).unwrap();
            let h = assemble_coupled_hamiltonian(&g, &p).unwrap();
            let dense = to_dense(&h);
            let band = h.banded().unwrap();
            let bd = band.to_dense_original_order();
            assert!((dense - bd).abs().max() < 1e-14);
        }
    }
}
