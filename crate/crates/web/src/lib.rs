//! WebAssembly bindings for the browser demo in `www/`.
//!
//! Every export returns a flat `Float64Array`; the row layout is given on each
//! function. Masked points are NaN.

use cavity_ef::efactor::{factorize, FullState};
use cavity_ef::eigensolver::solve_lowest;
use cavity_ef::lcao_dho::{approx_excited_curve, approx_ground_curve, dho_overlap, peak_height_formula, ApproxModel, Branch};
use cavity_ef::model::{assemble_coupled_hamiltonian, Axis, GridSpec, ModelParams};
use cavity_ef::resonance::delocalization_metric;
use wasm_bindgen::prelude::*;

pub const CURVE_STRIDE: usize = 7;
const X_RANGE: (f64, f64) = (-8.0, 8.0);

fn params(lambda_c: f64, omega_c: f64) -> cavity_ef::Result<ModelParams> {
    let p = ModelParams::default().with_coupling(lambda_c, omega_c);
    p.validate()?;
    Ok(p)
}

/// Rows of `x, bare_V, ground_total, minus_total, plus_total, minus_kin, plus_kin`.
pub fn analytical_curves(lambda_c: f64, omega_c: f64, n: usize, points: usize) -> cavity_ef::Result<Vec<f64>> {
    let p = params(lambda_c, omega_c)?;
    let x = Axis::uniform(X_RANGE.0, X_RANGE.1, points)?;
    let ground = approx_ground_curve(&x, &p)?;
    let minus = approx_excited_curve(&ApproxModel::new(n, Branch::Minus, &p)?, x.nodes());
    let plus = approx_excited_curve(&ApproxModel::new(n, Branch::Plus, &p)?, x.nodes());
    let mut out = Vec::with_capacity(points * CURVE_STRIDE);
    for i in 0..points {
        out.extend_from_slice(&[
            x.nodes()[i],
            ground.bare[i],
            ground.total[i],
            minus.total[i],
            plus.total[i],
            minus.eph_kin[i],
            plus.eph_kin[i],
        ]);
    }
    Ok(out)
}

/// Rows of `lambda_c, height_minus, height_plus` for λ_c in [0, 1].
pub fn peak_sweep(omega_c: f64, n: usize, points: usize) -> cavity_ef::Result<Vec<f64>> {
    let mut out = Vec::with_capacity(3 * points);
    for i in 0..points {
        let lambda = i as f64 / (points.max(2) - 1) as f64;
        let p = params(lambda, omega_c)?;
        let ovl = dho_overlap(n, &p)?;
        out.extend_from_slice(&[
            lambda,
            peak_height_formula(ovl, Branch::Minus, &p),
            peak_height_formula(ovl, Branch::Plus, &p),
        ]);
    }
    Ok(out)
}

/// Three lowest coupled states on a coarse grid.
///
/// Layout: `E0, E1, E2, D0, D1, D2`, then rows of `x, ρ0, ρ1, ρ2`, where D is
/// the |P_L − P_R| delocalization metric and ρ the marginal density.
pub fn reduced_solve(lambda_c: f64, omega_c: f64) -> cavity_ef::Result<Vec<f64>> {
    let p = params(lambda_c, omega_c)?;
    let g = GridSpec {
        nx: 81,
        nq: 81,
        ..GridSpec::default()
    }
    .build(&p)?;
    let res = solve_lowest(&assemble_coupled_hamiltonian(&g, &p)?, 3, 1e-8)?;
    let factors = FullState::all_from(&res, &g)
        .iter()
        .map(|s| factorize(s, &g))
        .collect::<cavity_ef::Result<Vec<_>>>()?;
    let mut out = res.energies();
    out.extend(factors.iter().map(|f| delocalization_metric(&f.phi, &g)));
    for (i, &x) in g.x.nodes().iter().enumerate() {
        out.push(x);
        out.extend(factors.iter().map(|f| f.phi[i] * f.phi[i]));
    }
    Ok(out)
}

fn js(r: cavity_ef::Result<Vec<f64>>) -> Result<Vec<f64>, JsError> {
    r.map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen(js_name = analyticalCurves)]
pub fn analytical_curves_js(lambda_c: f64, omega_c: f64, n: usize, points: usize) -> Result<Vec<f64>, JsError> {
    js(analytical_curves(lambda_c, omega_c, n, points))
}

#[wasm_bindgen(js_name = peakSweep)]
pub fn peak_sweep_js(omega_c: f64, n: usize, points: usize) -> Result<Vec<f64>, JsError> {
    js(peak_sweep(omega_c, n, points))
}

#[wasm_bindgen(js_name = reducedSolve)]
pub fn reduced_solve_js(lambda_c: f64, omega_c: f64) -> Result<Vec<f64>, JsError> {
    js(reduced_solve(lambda_c, omega_c))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn curve_layout() {
        let v = analytical_curves(0.1, 0.37676260, 1, 81).unwrap();
        assert_eq!(v.len(), 81 * CURVE_STRIDE);
        assert_eq!(v[0], -8.0);
        // kinetic peak of both branches sits at the centre node
        let mid = 40 * CURVE_STRIDE;
        for col in [5, 6] {
            let peak = (0..81).map(|i| v[i * CURVE_STRIDE + col]).filter(|x| !x.is_nan()).fold(f64::MIN, f64::max);
            assert_eq!(v[mid + col], peak);
        }
    }

    #[test]
    fn sweep_starts_at_uncoupled_height() {
        let v = peak_sweep(0.376, 1, 11).unwrap();
        assert_eq!(v.len(), 33);
        assert!((v[1] - 7.0688).abs() < 1e-12 && (v[2] - 7.0688).abs() < 1e-12);
        assert_eq!(v[30], 1.0);
    }

    #[test]
    fn reduced_solve_mixes_pair_near_resonance() {
        let v = reduced_solve(0.5, 0.39495042).unwrap();
        assert_eq!(v.len(), 6 + 81 * 4);
        assert!(v[0] < v[1] && v[1] <= v[2]);
        // the coarse grid detunes the pair slightly; it stays strongly mixed
        assert!(v[4] < 0.6, "D1 = {}", v[4]);
    }

    #[test]
    fn invalid_frequency_rejected() {
        assert!(analytical_curves(0.1, -1.0, 1, 11).is_err());
        assert!(peak_sweep(0.376, 0, 11).is_err());
    }
}
