//! Analytical model: harmonic atomic orbitals at ±a combined with displaced
//! harmonic-oscillator (DHO) photon states.
//!
//! Conventions. The left orbital φ⁻ sits at −a (energy −Δ) and pairs with
//! photon states centred at −λa/ω; the right orbital φ⁺ sits at +a (energy
//! +Δ) and pairs with states centred at +λa/ω. Photon states are reflected
//! Hermite functions, ξ_n(q) = ω^{1/4} h_n(√ω (c − q)), which makes the
//! overlap ⟨ξ⁻_N|ξ⁺_{N−1}⟩ negative and orders the branches E⁻ ≤ E⁺.

use std::sync::OnceLock;

use crate::efactor::PotentialCurve;
use crate::eigensolver::solve_lowest;
use crate::error::{Error, Result};
use crate::model::{assemble_electron_hamiltonian_with, Axis, ModelParams};
use crate::quadrature::{composite_legendre, gauss_hermite, hermite_function, laguerre};

/// Points of the Gauss–Hermite rule used for photon matrix elements.
pub const HERMITE_POINTS: usize = 200;

/// Relative threshold on |Φ|² below which analytical curves are masked.
pub const APPROX_NODE_EPS: f64 = 1e-8;

fn hermite_rule() -> &'static (Vec<f64>, Vec<f64>) {
    static RULE: OnceLock<(Vec<f64>, Vec<f64>)> = OnceLock::new();
    RULE.get_or_init(|| gauss_hermite(HERMITE_POINTS))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Side {
    Left,
    Right,
}

impl Side {
    fn sign(self) -> f64 {
        match self {
            Side::Left => -1.0,
            Side::Right => 1.0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Branch {
    Minus,
    Plus,
}

impl Branch {
    pub fn sign(self) -> f64 {
        match self {
            Branch::Minus => -1.0,
            Branch::Plus => 1.0,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Branch::Minus => "-",
            Branch::Plus => "+",
        }
    }
}

/// (ω_e/π)^{1/4} exp(−ω_e (x ∓ a)²/2)
pub fn atomic_orbital(side: Side, x: f64, p: &ModelParams) -> f64 {
    let w = p.omega_e;
    let d = x - side.sign() * p.a;
    (w / std::f64::consts::PI).powf(0.25) * (-0.5 * w * d * d).exp()
}

#[derive(Debug, Clone, Copy)]
pub struct LcaoElements {
    pub alpha: f64,
    pub beta: f64,
    pub s: f64,
}

/// α, β and S for the symmetric part ½ω_e²(|x|−a)² of the well.
///
/// Composite Gauss–Legendre over panels broken at the kink x = 0 and at ±a;
/// the orbital kinetic term is applied analytically.
pub fn lcao_elements(p: &ModelParams) -> Result<LcaoElements> {
    lcao_elements_with(p, 64)
}

pub fn lcao_elements_with(p: &ModelParams, per_panel: usize) -> Result<LcaoElements> {
    p.validate()?;
    let w = p.omega_e;
    let span = p.a + 14.0 / w.sqrt();
    let breaks = [-span, -p.a - 4.0 / w.sqrt(), -p.a, 0.0, p.a, p.a + 4.0 / w.sqrt(), span];
    let (xs, ws) = composite_legendre(&breaks, per_panel);
    let sym = |x: f64| 0.5 * w * w * (x.abs() - p.a).powi(2);
    // H φ^± with T φ = ½(ω − ω²(x−c)²)φ / m
    let h_phi = |side: Side, x: f64| {
        let c = side.sign() * p.a;
        let phi = atomic_orbital(side, x, p);
        (0.5 / p.mass * (w - w * w * (x - c).powi(2)) + sym(x)) * phi
    };
    let (mut alpha, mut beta, mut s) = (0.0, 0.0, 0.0);
    for (&x, &wt) in xs.iter().zip(&ws) {
        let pl = atomic_orbital(Side::Left, x, p);
        let pr = atomic_orbital(Side::Right, x, p);
        alpha += wt * pl * h_phi(Side::Left, x);
        beta += wt * pl * h_phi(Side::Right, x);
        s += wt * pl * pr;
    }
    if ![alpha, beta, s].iter().all(|v| v.is_finite()) {
        return Err(Error::Numeric("non-finite LCAO quadrature".into()));
    }
    Ok(LcaoElements { alpha, beta, s })
}

/// Photon state paired with the electron on `side`.
#[derive(Debug, Clone, Copy)]
pub struct DhoState {
    pub side: Side,
    pub n: usize,
    /// Displacement centre ±(λ_c/ω_c)a.
    pub center: f64,
    /// ±Δ
    pub offset: f64,
    pub omega: f64,
}

impl DhoState {
    pub fn new(side: Side, n: usize, p: &ModelParams) -> DhoState {
        DhoState {
            side,
            n,
            center: side.sign() * p.lambda_c * p.a / p.omega_c,
            offset: side.sign() * p.delta(),
            omega: p.omega_c,
        }
    }

    /// V_ad = ±Δ + (n + ½)ω_c
    pub fn energy(&self) -> f64 {
        self.offset + (self.n as f64 + 0.5) * self.omega
    }

    pub fn value(&self, q: f64) -> f64 {
        let s = self.omega.sqrt();
        s.sqrt() * hermite_function(self.n, s * (self.center - q))
    }
}

/// β = aλ√(2/ω), the dimensionless displacement between the two DHO centres.
fn displacement(p: &ModelParams) -> f64 {
    p.a * p.lambda_c * (2.0 / p.omega_c).sqrt()
}

/// ⟨ξ⁻_N|ξ⁺_{N−1}⟩ = −(1/√N) β e^{−β²/2} L¹_{N−1}(β²).
pub fn dho_overlap(n: usize, p: &ModelParams) -> Result<f64> {
    if n == 0 {
        return Err(Error::Usage("manifold index N must be at least 1".into()));
    }
    let b = displacement(p);
    Ok(-(1.0 / (n as f64).sqrt()) * b * (-0.5 * b * b).exp() * laguerre(n - 1, 1.0, b * b))
}

/// The closed form exactly as it is usually quoted, with L¹_N and argument
/// a²λ²/ω². It disagrees with [`dho_overlap`] and with direct quadrature; it is
/// kept only so the discrepancy can be reported.
pub fn dho_overlap_as_printed(n: usize, p: &ModelParams) -> f64 {
    let r = p.a * p.lambda_c / p.omega_c;
    (-0.5 * r * r).exp() * (-r) * (1.0 / n as f64).sqrt() * laguerre(n, 1.0, r * r)
}

/// ∫ f(q) dq for f(q) = g(q)·exp(−ω q²)·(polynomial) by Gauss–Hermite; `f` must
/// include its own Gaussian factor.
fn hermite_integral(omega: f64, f: impl Fn(f64) -> f64) -> f64 {
    let (s, w) = hermite_rule();
    let r = omega.sqrt();
    s.iter().zip(w).map(|(&s, &w)| w * f(s / r) * (s * s).exp()).sum::<f64>() / r
}

/// ⟨ξ⁻_N|ξ⁺_{N−1}⟩ by quadrature, an oracle for [`dho_overlap`].
pub fn dho_overlap_quadrature(n: usize, p: &ModelParams) -> Result<f64> {
    if n == 0 {
        return Err(Error::Usage("manifold index N must be at least 1".into()));
    }
    let l = DhoState::new(Side::Left, n, p);
    let r = DhoState::new(Side::Right, n - 1, p);
    Ok(hermite_integral(p.omega_c, |q| l.value(q) * r.value(q)))
}

/// ⟨ξ⁻_N|q|ξ⁺_{N−1}⟩ by 200-point Gauss–Hermite quadrature.
pub fn dho_q_element(n: usize, p: &ModelParams) -> Result<f64> {
    if n == 0 {
        return Err(Error::Usage("manifold index N must be at least 1".into()));
    }
    let l = DhoState::new(Side::Left, n, p);
    let r = DhoState::new(Side::Right, n - 1, p);
    Ok(hermite_integral(p.omega_c, |q| l.value(q) * q * r.value(q)))
}

/// ω_c/2 + (λ_c²/2)(x + a)²
pub fn ground_eph_potential(x: f64, p: &ModelParams) -> f64 {
    0.5 * p.omega_c + 0.5 * p.lambda_c * p.lambda_c * (x + p.a).powi(2)
}

#[derive(Debug, Clone, Copy)]
pub struct ApproxPolariton {
    pub n: usize,
    pub branch: Branch,
    pub overlap: f64,
    /// 1 ± S·overlap
    pub nu: f64,
    /// Coefficient 1/√(2ν) of both basis products.
    pub coefficient: f64,
    pub energy: f64,
    pub elements: LcaoElements,
}

pub fn approx_polariton(n: usize, branch: Branch, p: &ModelParams) -> Result<ApproxPolariton> {
    let el = lcao_elements(p)?;
    let ovl = dho_overlap(n, p)?;
    let sg = branch.sign();
    let nu = 1.0 + sg * el.s * ovl;
    if !(nu > 0.0) {
        return Err(Error::Numeric(format!("normalization ν = {nu} is not positive")));
    }
    Ok(ApproxPolariton {
        n,
        branch,
        overlap: ovl,
        nu,
        coefficient: 1.0 / (2.0 * nu).sqrt(),
        energy: n as f64 * p.omega_c + (el.alpha + sg * el.beta * ovl) / nu,
        elements: el,
    })
}

/// Returns a warning when the polariton energy lies above the third uncoupled
/// electronic level, where the two-state picture no longer holds.
pub fn validity_warning(pol: &ApproxPolariton, third_uncoupled_level: f64) -> Option<String> {
    (pol.energy > third_uncoupled_level).then(|| {
        format!(
            "E{}_{} = {:.6} exceeds the third uncoupled electronic level {:.6}",
            pol.branch.label(),
            pol.n,
            pol.energy,
            third_uncoupled_level
        )
    })
}

/// Pointwise ingredients of the analytical excited-state curves.
#[derive(Debug, Clone, Copy)]
pub struct ApproxModel {
    pub n: usize,
    pub branch: Branch,
    pub overlap: f64,
    /// ⟨ξ⁻_N|q|ξ⁺_{N−1}⟩
    pub q_element: f64,
    pub nu: f64,
    params: ModelParams,
}

/// One radicand evaluation: the value and whether it had to be clamped.
#[derive(Debug, Clone, Copy)]
struct Radicand {
    value: f64,
    clamped: bool,
    violation: bool,
}

impl ApproxModel {
    pub fn new(n: usize, branch: Branch, p: &ModelParams) -> Result<ApproxModel> {
        let pol = approx_polariton(n, branch, p)?;
        Ok(ApproxModel {
            n,
            branch,
            overlap: pol.overlap,
            q_element: dho_q_element(n, p)?,
            nu: pol.nu,
            params: *p,
        })
    }

    fn orbitals(&self, x: f64) -> (f64, f64) {
        (atomic_orbital(Side::Left, x, &self.params), atomic_orbital(Side::Right, x, &self.params))
    }

    /// D^± = φ⁻² + φ⁺² ± 2·ovl·φ⁻φ⁺ for the given sign.
    fn radicand(&self, x: f64, sign: f64) -> Radicand {
        let (l, r) = self.orbitals(x);
        let v = l * l + r * r + sign * 2.0 * self.overlap * l * r;
        if v >= 0.0 {
            Radicand {
                value: v,
                clamped: false,
                violation: false,
            }
        } else {
            Radicand {
                value: 0.0,
                clamped: true,
                violation: v < -1e-12,
            }
        }
    }

    /// Φ^±_N(x) including the 1/√(2ν) factor.
    pub fn marginal(&self, x: f64) -> f64 {
        (self.radicand(x, self.branch.sign()).value / (2.0 * self.nu)).sqrt()
    }

    /// ½⟨∂ₓχ|∂ₓχ⟩ = 2a²ω_e² φ⁻²φ⁺² (1 − ovl²) / D², with |Φ|² = D/2.
    pub fn kinetic(&self, x: f64) -> f64 {
        let p = &self.params;
        let (l, r) = self.orbitals(x);
        let d = self.radicand(x, self.branch.sign()).value;
        2.0 * p.a * p.a * p.omega_e * p.omega_e * l * l * r * r * (1.0 - self.overlap * self.overlap) / (d * d)
    }

    /// (ω_c/4)(φ⁻² − φ⁺²)/|Φ|²
    pub fn step_term(&self, x: f64) -> f64 {
        let (l, r) = self.orbitals(x);
        let d = self.radicand(x, self.branch.sign()).value;
        0.5 * self.params.omega_c * (l * l - r * r) / d
    }

    /// ⟨χ|Ĥ_EM|χ⟩ = Nω_c + step term + f(λ_c).
    pub fn em(&self, x: f64) -> f64 {
        let p = &self.params;
        let sg = self.branch.sign();
        let (l, r) = self.orbitals(x);
        let d = self.radicand(x, sg).value;
        let d_other = self.radicand(x, -sg).value;
        let lam2 = p.lambda_c * p.lambda_c;
        let f = lam2 * p.a * x * (l * l - r * r) / d + 0.5 * lam2 * x * x + 0.5 * lam2 * p.a * p.a * d_other / d
            - sg * 2.0 * p.lambda_c * p.omega_c * x * self.q_element * l * r / d;
        self.n as f64 * p.omega_c + self.step_term(x) + f
    }

    /// (a²ω_e²/2)(1 ∓ ovl)/(1 ± ovl), the kinetic term at x = 0.
    pub fn peak_height(&self) -> f64 {
        peak_height_formula(self.overlap, self.branch, &self.params)
    }

    pub fn params(&self) -> &ModelParams {
        &self.params
    }
}

pub fn peak_height_formula(overlap: f64, branch: Branch, p: &ModelParams) -> f64 {
    let sg = branch.sign();
    0.5 * p.a * p.a * p.omega_e * p.omega_e * (1.0 - sg * overlap) / (1.0 + sg * overlap)
}

pub fn approx_marginal(n: usize, branch: Branch, x: f64, p: &ModelParams) -> Result<f64> {
    Ok(ApproxModel::new(n, branch, p)?.marginal(x))
}

pub fn approx_kinetic_term(n: usize, branch: Branch, x: f64, p: &ModelParams) -> Result<f64> {
    Ok(ApproxModel::new(n, branch, p)?.kinetic(x))
}

pub fn approx_em_term(n: usize, branch: Branch, x: f64, p: &ModelParams) -> Result<f64> {
    Ok(ApproxModel::new(n, branch, p)?.em(x))
}

/// Marginal sampled on a set of points with the radicand guard's counters.
#[derive(Debug, Clone)]
pub struct MarginalProfile {
    pub values: Vec<f64>,
    /// Points whose radicand was negative and clamped to zero.
    pub clamped: usize,
    /// Of those, points below −10⁻¹² (reported, not silently absorbed).
    pub violations: usize,
}

pub fn approx_marginal_profile(model: &ApproxModel, xs: &[f64]) -> MarginalProfile {
    let mut clamped = 0;
    let mut violations = 0;
    let values = xs
        .iter()
        .map(|&x| {
            let r = model.radicand(x, model.branch.sign());
            clamped += r.clamped as usize;
            violations += r.violation as usize;
            (r.value / (2.0 * model.nu)).sqrt()
        })
        .collect();
    MarginalProfile {
        values,
        clamped,
        violations,
    }
}

/// Analytical excited-state potential curve on `xs`.
pub fn approx_excited_curve(model: &ApproxModel, xs: &[f64]) -> PotentialCurve {
    let p = model.params();
    let dens: Vec<f64> = xs.iter().map(|&x| model.marginal(x).powi(2)).collect();
    let max = dens.iter().fold(0.0f64, |m, v| m.max(*v));
    let mask: Vec<bool> = dens.iter().map(|&d| d > 0.0 && d >= APPROX_NODE_EPS * max).collect();
    let n = xs.len();
    let mut c = PotentialCurve {
        x: xs.to_vec(),
        bare: xs.iter().map(|&x| p.adw_potential(x)).collect(),
        eph_em: vec![f64::NAN; n],
        eph_kin: vec![f64::NAN; n],
        total: vec![f64::NAN; n],
        density: dens,
        mask: mask.clone(),
        warnings: mask.iter().filter(|&&m| !m).count(),
    };
    for i in 0..n {
        if mask[i] {
            c.eph_em[i] = model.em(xs[i]);
            c.eph_kin[i] = model.kinetic(xs[i]);
            c.total[i] = c.bare[i] + c.eph_em[i] + c.eph_kin[i];
        }
    }
    c
}

/// Analytical ground-state curve; the density is the ground state of
/// V + V⁰_eph solved on the x axis.
pub fn approx_ground_curve(x: &Axis, p: &ModelParams) -> Result<PotentialCurve> {
    let h = assemble_electron_hamiltonian_with(x, p.mass, |x| p.adw_potential(x) + ground_eph_potential(x, p))?;
    let res = solve_lowest(&h, 1, 1e-10)?;
    let scale = 1.0 / x.spacing();
    let xs = x.nodes().to_vec();
    let n = xs.len();
    let eph_em: Vec<f64> = xs.iter().map(|&x| ground_eph_potential(x, p)).collect();
    let bare: Vec<f64> = xs.iter().map(|&x| p.adw_potential(x)).collect();
    Ok(PotentialCurve {
        total: bare.iter().zip(&eph_em).map(|(b, e)| b + e).collect(),
        x: xs,
        bare,
        eph_em,
        eph_kin: vec![0.0; n],
        density: res.pairs[0].vector.iter().map(|v| v * v * scale).collect(),
        mask: vec![true; n],
        warnings: 0,
    })
}

/// Summary of an exact-versus-analytical comparison on a common grid.
#[derive(Debug, Clone)]
pub struct CompareReport {
    pub common_points: usize,
    pub max_abs_diff: f64,
    pub rms_diff: f64,
    pub exact_step: Option<f64>,
    pub approx_step: Option<f64>,
    /// (x, height) of the eph_kin maximum within |x| < a.
    pub exact_peak: Option<(f64, f64)>,
    pub approx_peak: Option<(f64, f64)>,
}

/// Mean of the e-ph potential (em + kin) over valid x ∈ [−6, −3] minus the mean over [3, 6].
pub fn step_height(c: &PotentialCurve) -> Option<f64> {
    let eph: Vec<f64> = c.eph_em.iter().zip(&c.eph_kin).map(|(a, b)| a + b).collect();
    let mean = |lo: f64, hi: f64| {
        let v = c.valid_in(&eph, lo, hi);
        (!v.is_empty()).then(|| v.iter().map(|p| p.1).sum::<f64>() / v.len() as f64)
    };
    Some(mean(-6.0, -3.0)? - mean(3.0, 6.0)?)
}

/// Location and height of the eph_kin maximum within |x| < a.
pub fn kinetic_peak(c: &PotentialCurve, a: f64) -> Option<(f64, f64)> {
    c.valid_in(&c.eph_kin, -a, a)
        .into_iter()
        .filter(|p| p.0.abs() < a)
        .fold(None, |best: Option<(f64, f64)>, p| match best {
            Some(b) if b.1 >= p.1 => Some(b),
            _ => Some(p),
        })
}

pub fn compare_curves(exact: &PotentialCurve, approx: &PotentialCurve, a: f64) -> Result<CompareReport> {
    if exact.x.len() != approx.x.len() || exact.x.iter().zip(&approx.x).any(|(u, v)| (u - v).abs() > 1e-12) {
        return Err(Error::Usage("curves are not sampled on a common grid".into()));
    }
    let diffs: Vec<f64> = (0..exact.x.len())
        .filter(|&i| exact.mask[i] && approx.mask[i])
        .map(|i| exact.total[i] - approx.total[i])
        .collect();
    if diffs.is_empty() {
        return Err(Error::EmptyReport("no grid point is valid in both curves".into()));
    }
    Ok(CompareReport {
        common_points: diffs.len(),
        max_abs_diff: diffs.iter().fold(0.0f64, |m, d| m.max(d.abs())),
        rms_diff: (diffs.iter().map(|d| d * d).sum::<f64>() / diffs.len() as f64).sqrt(),
        exact_step: step_height(exact),
        approx_step: step_height(approx),
        exact_peak: kinetic_peak(exact, a),
        approx_peak: kinetic_peak(approx, a),
    })
}

/// Variance of a density about a reference point, by the rectangle rule.
pub fn density_variance_about(density: &[f64], x: &[f64], center: f64) -> f64 {
    let norm: f64 = density.iter().sum();
    density.iter().zip(x).map(|(d, x)| d * (x - center).powi(2)).sum::<f64>() / norm
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table1(lambda: f64, omega: f64) -> ModelParams {
        ModelParams::default().with_coupling(lambda, omega)
    }

    #[test]
    fn orbital_values() {
        let p = ModelParams::default();
        assert!((atomic_orbital(Side::Left, -p.a, &p) - (1.6 / std::f64::consts::PI).powf(0.25)).abs() < 1e-15);
        let (xs, ws) = composite_legendre(&[-12.0, -2.35, 0.0, 2.35, 12.0], 40);
        let n: f64 = xs.iter().zip(&ws).map(|(&x, w)| w * atomic_orbital(Side::Right, x, &p).powi(2)).sum();
        assert!((n - 1.0).abs() < 1e-13);
    }

    #[test]
    fn lcao_overlap_closed_form_and_refinement() {
        let p = ModelParams::default();
        let e = lcao_elements(&p).unwrap();
        assert!((e.s - (-p.omega_e * p.a * p.a).exp()).abs() < 1e-15);
        // The symmetric well lies below each orbital's own harmonic well, so α < ω_e/2.
        assert!(e.alpha < 0.5 * p.omega_e);
        assert!(e.beta < 0.0);
        let f = lcao_elements_with(&p, 128).unwrap();
        assert!((e.alpha - f.alpha).abs() < 1e-12 && (e.beta - f.beta).abs() < 1e-12);
        let far = lcao_elements(&ModelParams { a: 6.0, ..p }).unwrap();
        assert!((far.alpha - 0.5 * p.omega_e).abs() < 1e-12);
    }

    #[test]
    fn overlap_matches_quadrature() {
        for &(l, w) in &[(0.1, 0.37676260), (0.5, 0.39495042), (0.9, 0.43442993), (0.3, 0.2)] {
            for n in 1..5 {
                let p = table1(l, w);
                let a = dho_overlap(n, &p).unwrap();
                let b = dho_overlap_quadrature(n, &p).unwrap();
                assert!((a - b).abs() < 1e-12, "N={n} λ={l}: {a} vs {b}");
                assert!(a.abs() <= 1.0);
            }
        }
        assert_eq!(dho_overlap(1, &table1(0.0, 0.4)).unwrap(), 0.0);
        assert!(dho_overlap(0, &table1(0.1, 0.4)).is_err());
    }

    #[test]
    fn q_element_identity() {
        for &(l, w) in &[(0.1, 0.37676260), (0.5, 0.39495042), (0.9, 0.43442993)] {
            let p = table1(l, w);
            for n in 1..4 {
                let q = dho_q_element(n, &p).unwrap();
                let o = dho_overlap(n, &p).unwrap();
                assert!((q - o / (2.0 * l * p.a)).abs() < 1e-12);
            }
        }
        let p0 = table1(0.0, 0.4);
        assert!((dho_q_element(1, &p0).unwrap().abs() - 1.0 / (2.0 * 0.4f64).sqrt()).abs() < 1e-13);
        for n in 2..5 {
            let expect = (n as f64 / (2.0 * 0.4)).sqrt();
            assert!((dho_q_element(n, &p0).unwrap().abs() - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn q_element_parity_in_a() {
        let p = table1(0.5, 0.39495042);
        let m = ModelParams { a: -p.a, ..p };
        assert!((dho_q_element(1, &p).unwrap() - dho_q_element(1, &m).unwrap()).abs() < 1e-13);
        assert!((dho_overlap(1, &p).unwrap() + dho_overlap(1, &m).unwrap()).abs() < 1e-15);
    }

    #[test]
    fn ground_potential_shape() {
        let p = table1(0.9, 0.43442993);
        assert_eq!(ground_eph_potential(-p.a, &p), 0.5 * p.omega_c);
        let p0 = table1(0.0, 0.4);
        assert_eq!(ground_eph_potential(3.0, &p0), 0.2);
    }

    #[test]
    fn branch_energies() {
        for &(l, w) in &[(0.1, 0.37676260), (0.5, 0.39495042), (0.9, 0.43442993)] {
            let p = table1(l, w);
            let m = approx_polariton(1, Branch::Minus, &p).unwrap();
            let pl = approx_polariton(1, Branch::Plus, &p).unwrap();
            assert!(m.energy <= pl.energy);
            assert!(m.nu > 0.0 && pl.nu > 0.0);
        }
        let p = table1(1e-9, 0.376);
        let m = approx_polariton(1, Branch::Minus, &p).unwrap();
        assert!((m.energy - (p.omega_c + m.elements.alpha)).abs() < 1e-8);
    }

    #[test]
    fn peak_identity_at_origin() {
        for &(l, w) in &[(0.1, 0.37676260), (0.5, 0.39495042), (0.9, 0.43442993)] {
            let p = table1(l, w);
            for b in [Branch::Minus, Branch::Plus] {
                let m = ApproxModel::new(1, b, &p).unwrap();
                assert!((m.kinetic(0.0) - m.peak_height()).abs() < 1e-12 * m.peak_height());
            }
        }
        let limit = peak_height_formula(0.0, Branch::Minus, &ModelParams::default());
        assert!((limit - 7.0688).abs() < 1e-12);
    }

    #[test]
    fn marginal_normalized_and_unclamped() {
        let p = table1(0.5, 0.39495042);
        let (xs, ws) = composite_legendre(&[-12.0, -2.35, 0.0, 2.35, 12.0], 48);
        for b in [Branch::Minus, Branch::Plus] {
            let m = ApproxModel::new(1, b, &p).unwrap();
            let prof = approx_marginal_profile(&m, &xs);
            let n: f64 = prof.values.iter().zip(&ws).map(|(v, w)| w * v * v).sum();
            assert!((n - 1.0).abs() < 1e-10);
            assert_eq!(prof.violations, 0);
        }
    }

    #[test]
    fn step_term_plateaus() {
        let p = table1(0.1, 0.37676260);
        let m = ApproxModel::new(1, Branch::Minus, &p).unwrap();
        assert!((m.step_term(-5.0) - 0.5 * p.omega_c).abs() < 1e-6);
        assert!((m.step_term(5.0) + 0.5 * p.omega_c).abs() < 1e-6);
    }

    #[test]
    fn em_term_without_coupling() {
        let p = table1(0.0, 0.37676260);
        let m = ApproxModel::new(1, Branch::Minus, &p).unwrap();
        for x in [-3.0, -0.4, 0.0, 1.1, 3.0] {
            assert!((m.em(x) - (p.omega_c + m.step_term(x))).abs() < 1e-14);
        }
    }

    #[test]
    fn compare_self_is_zero() {
        let p = table1(0.1, 0.37676260);
        let m = ApproxModel::new(1, Branch::Minus, &p).unwrap();
        let xs: Vec<f64> = (0..161).map(|i| -8.0 + 0.1 * i as f64).collect();
        let c = approx_excited_curve(&m, &xs);
        let r = compare_curves(&c, &c, p.a).unwrap();
        assert_eq!(r.max_abs_diff, 0.0);
        let peak = r.exact_peak.unwrap();
        assert!(peak.0.abs() < 1e-9);
        let mut empty = c.clone();
        empty.mask.iter_mut().for_each(|m| *m = false);
        assert!(matches!(compare_curves(&c, &empty, p.a), Err(Error::EmptyReport(_))));
    }
}
