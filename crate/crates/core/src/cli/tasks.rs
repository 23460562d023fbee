use crate::efactor::{
    eph_potential_exact, factorize_with, inversion_residual, pnc_deviation, reconstruction_error, side_populations,
    vector_potential, FactorizedState, FullState, PotentialCurve,
};
use crate::eigensolver::{orthonormality_check, solve, SolveOptions, SpectrumResult};
use crate::lcao_dho::{
    approx_excited_curve, approx_ground_curve, approx_marginal_profile, approx_polariton, compare_curves,
    density_variance_about, dho_overlap, dho_overlap_as_printed, kinetic_peak, peak_height_formula, step_height,
    validity_warning, ApproxModel, Branch,
};
use crate::model::{assemble_coupled_hamiltonian, assemble_electron_hamiltonian, Axis, Grid2D, ModelParams};
use crate::resonance::{find_resonance_with, ResonanceOptions, Stage};
use crate::Result;

use super::config::RunConfig;
use super::table::{curve_table, Artifact, Cell, Table};

/// States 1 and 2 are the lower and upper polariton of the first manifold.
const POLARITONS: [(usize, Branch); 2] = [(1, Branch::Minus), (2, Branch::Plus)];

struct Solved {
    grid: Grid2D,
    spectrum: SpectrumResult,
    states: Vec<FullState>,
}

fn solve_coupled(cfg: &RunConfig, p: &ModelParams, k: usize) -> Result<Solved> {
    let grid = cfg.grid.build(p)?;
    let h = assemble_coupled_hamiltonian(&grid, p)?;
    let spectrum = solve(
        &h,
        &SolveOptions {
            k,
            tol: cfg.solver.tol,
            max_iter: cfg.solver.max_iter,
            ..SolveOptions::default()
        },
    )?;
    let states = FullState::all_from(&spectrum, &grid);
    Ok(Solved { grid, spectrum, states })
}

/// Lowest `k` levels and unit-norm amplitudes of the bare electronic problem.
fn uncoupled(x: &Axis, p: &ModelParams, k: usize, tol: f64) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let h = assemble_electron_hamiltonian(x, p)?;
    let res = solve(
        &h,
        &SolveOptions {
            k,
            tol,
            ..SolveOptions::default()
        },
    )?;
    let s = 1.0 / x.spacing().sqrt();
    Ok((
        res.energies(),
        res.pairs.iter().map(|e| e.vector.iter().map(|v| v * s).collect()).collect(),
    ))
}

fn marginal_density(psi: &FullState, g: &Grid2D) -> Vec<f64> {
    let nq = g.nq();
    (0..g.nx())
        .map(|ix| psi.psi[ix * nq..(ix + 1) * nq].iter().map(|v| v * v).sum::<f64>() * g.dq())
        .collect()
}

fn peak_cells(peak: Option<(f64, f64)>) -> [Cell; 2] {
    match peak {
        Some((x, h)) => [x.into(), h.into()],
        None => [f64::NAN.into(), f64::NAN.into()],
    }
}

fn describe(cfg: &RunConfig, t: &mut Table, p: &ModelParams) {
    t.note("lambda_c", super::table::format_num(p.lambda_c));
    t.note("omega_c", super::table::format_num(p.omega_c));
    t.note("grid", format!("{}x{}", cfg.grid.nx, cfg.grid.nq));
}

pub fn solve_task(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let p = cfg.model;
    let s = solve_coupled(cfg, &p, cfg.solver.k)?;
    let g = &s.grid;
    let xs = g.x.nodes();

    let mut spec = Table::new(&["index", "energy", "residual", "mean_x", "p_left", "p_right", "delocalization"]);
    describe(cfg, &mut spec, &p);
    let d = &s.spectrum.diagnostics;
    spec.note("method", &d.method);
    spec.note("iterations", d.iterations);
    spec.note("restarts", d.restarts);
    spec.note("max_residual", super::table::format_num(d.max_residual));
    spec.note("orthonormality", super::table::format_num(orthonormality_check(&s.spectrum)));
    let e = s.spectrum.energies();
    if e.len() >= 3 {
        spec.note("polariton_gap", super::table::format_num(e[2] - e[1]));
    }
    let mut dens = Vec::new();
    for (i, st) in s.states.iter().enumerate() {
        let rho = marginal_density(st, g);
        let amp: Vec<f64> = rho.iter().map(|v| v.sqrt()).collect();
        let (l, r) = side_populations(&amp, xs, g.dx());
        let mean_x = rho.iter().zip(xs).map(|(d, x)| d * x).sum::<f64>() * g.dx();
        spec.push(vec![
            i.into(),
            st.energy.into(),
            s.spectrum.pairs[i].residual.into(),
            mean_x.into(),
            l.into(),
            r.into(),
            (l - r).abs().into(),
        ]);
        dens.push(rho);
    }

    let (_, bare) = uncoupled(&g.x, &p, 2, cfg.solver.tol)?;
    let shown = dens.len().min(3);
    let mut cols = vec!["x".to_string(), "bare_V".into(), "uncoupled_0".into(), "uncoupled_1".into()];
    cols.extend((0..shown).map(|i| format!("coupled_{i}")));
    let mut fig1 = Table {
        columns: cols,
        ..Table::default()
    };
    describe(cfg, &mut fig1, &p);
    for (ix, &x) in xs.iter().enumerate() {
        let mut row: Vec<Cell> = vec![x.into(), p.adw_potential(x).into(), bare[0][ix].powi(2).into(), bare[1][ix].powi(2).into()];
        row.extend((0..shown).map(|i| dens[i][ix].into()));
        fig1.push(row);
    }
    Ok(vec![Artifact::new("spectrum.csv", spec), Artifact::new("fig1_densities.csv", fig1)])
}

struct StateCurve {
    index: usize,
    energy: f64,
    factor: FactorizedState,
    curve: PotentialCurve,
}

fn factorize_states(cfg: &RunConfig, s: &Solved, p: &ModelParams, which: &[usize]) -> Result<Vec<StateCurve>> {
    which
        .iter()
        .map(|&j| {
            let factor = factorize_with(&s.states[j], &s.grid, cfg.factorize.node_eps)?;
            let curve = eph_potential_exact(&factor, &s.grid, p);
            Ok(StateCurve {
                index: j,
                energy: s.states[j].energy,
                factor,
                curve,
            })
        })
        .collect()
}

pub fn factorize_task(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let p = cfg.model;
    let kmax = cfg.factorize.states.iter().max().copied().unwrap_or(0) + 1;
    let s = solve_coupled(cfg, &p, cfg.solver.k.max(kmax).max(3))?;
    let g = &s.grid;
    let curves = factorize_states(cfg, &s, &p, &cfg.factorize.states)?;

    let mut out = Vec::new();
    let mut summary = Table::new(&[
        "state",
        "energy",
        "valid_points",
        "masked_points",
        "pnc_deviation",
        "reconstruction_error",
        "max_abs_S",
        "inversion_residual",
        "step_height",
        "peak_x",
        "peak_height",
        "delocalization",
    ]);
    describe(cfg, &mut summary, &p);
    for sc in &curves {
        let pnc = pnc_deviation(&sc.factor, g);
        let rec = reconstruction_error(&sc.factor, &s.states[sc.index], g);
        let smax = vector_potential(&sc.factor, g)
            .iter()
            .filter(|v| !v.is_nan())
            .fold(0.0f64, |m, v| m.max(v.abs()));
        let resid = inversion_residual(&sc.factor, &sc.curve, sc.energy, g, &p);
        let step = step_height(&sc.curve);
        let peak = kinetic_peak(&sc.curve, p.a);
        let (l, r) = side_populations(&sc.factor.phi, g.x.nodes(), g.dx());

        let mut t = curve_table(&sc.curve);
        describe(cfg, &mut t, &p);
        t.note("state", sc.index);
        t.note("energy", super::table::format_num(sc.energy));
        t.note("inversion_residual", super::table::format_num(resid));
        out.push(Artifact::new(format!("potential_state{}.csv", sc.index), t));

        let [px, ph] = peak_cells(peak);
        summary.push(vec![
            sc.index.into(),
            sc.energy.into(),
            sc.factor.valid_count().into(),
            (g.nx() - sc.factor.valid_count()).into(),
            pnc.into(),
            rec.into(),
            smax.into(),
            resid.into(),
            step.into(),
            px,
            ph,
            (l - r).abs().into(),
        ]);
    }
    out.push(Artifact::new("factorize_summary.csv", summary));

    // Excited-state panels always show the polariton pair.
    let pair = factorize_states(cfg, &s, &p, &[1, 2])?;
    let mut fig4 = Table::new(&["state", "x", "bare_V", "eph_em", "eph_kin", "total", "density", "mask"]);
    describe(cfg, &mut fig4, &p);
    let mut fig5 = Table::new(&["state", "x", "exact_eph_kin", "approx_eph_kin", "exact_mask", "approx_mask"]);
    describe(cfg, &mut fig5, &p);
    for (sc, &(_, branch)) in pair.iter().zip(&POLARITONS) {
        let c = &sc.curve;
        fig4.note(&format!("step_height_state{}", sc.index), super::table::format_num(step_height(c).unwrap_or(f64::NAN)));
        let peak = kinetic_peak(c, p.a).unwrap_or((f64::NAN, f64::NAN));
        fig4.note(&format!("peak_x_state{}", sc.index), super::table::format_num(peak.0));
        fig4.note(&format!("peak_height_state{}", sc.index), super::table::format_num(peak.1));
        for i in 0..c.x.len() {
            fig4.push(vec![
                sc.index.into(),
                c.x[i].into(),
                c.bare[i].into(),
                c.eph_em[i].into(),
                c.eph_kin[i].into(),
                c.total[i].into(),
                c.density[i].into(),
                c.mask[i].into(),
            ]);
        }
        let approx = approx_excited_curve(&ApproxModel::new(cfg.approx.n, branch, &p)?, &c.x);
        for i in 0..c.x.len() {
            fig5.push(vec![
                sc.index.into(),
                c.x[i].into(),
                c.eph_kin[i].into(),
                approx.eph_kin[i].into(),
                c.mask[i].into(),
                approx.mask[i].into(),
            ]);
        }
    }
    out.push(Artifact::new("fig4_excited.csv", fig4));
    out.push(Artifact::new("fig5_kinetic.csv", fig5));
    Ok(out)
}

fn stage_name(s: Stage) -> &'static str {
    match s {
        Stage::Scan => "scan",
        Stage::Bisect => "bisect",
        Stage::Golden => "golden",
    }
}

pub fn resonance_task(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let r = &cfg.resonance;
    let opts = ResonanceOptions {
        bracket: (r.bracket[0], r.bracket[1]),
        tol: r.tol,
        scan_points: r.scan_points,
        grid: cfg.grid,
        eig_tol: cfg.solver.tol,
        mode: r.mode.into(),
        base: cfg.model,
    };
    let mut summary = Table::new(&[
        "lambda_c",
        "omega_c_star",
        "metric",
        "gap",
        "bracket_lo",
        "bracket_hi",
        "metric_lo",
        "metric_hi",
        "solves",
        "scan_unimodal",
    ]);
    summary.note("mode", format!("{:?}", opts.mode));
    let mut trace = Table::new(&["lambda_c", "stage", "omega_c", "metric", "imbalance", "gap", "ground_energy"]);
    for &lambda in &r.lambdas {
        let res = find_resonance_with(lambda, &opts)?;
        summary.push(vec![
            lambda.into(),
            res.omega_c_star.into(),
            res.metric_at_star.into(),
            res.gap_at_star.into(),
            res.bracket.0.into(),
            res.bracket.1.into(),
            res.metric_at_bracket.0.into(),
            res.metric_at_bracket.1.into(),
            res.solves().into(),
            res.scan_unimodal.into(),
        ]);
        for e in &res.trace {
            trace.push(vec![
                lambda.into(),
                stage_name(e.stage).into(),
                e.omega_c.into(),
                e.metric.into(),
                e.imbalance.into(),
                e.gap.into(),
                e.ground_energy.into(),
            ]);
        }
    }
    Ok(vec![Artifact::new("resonance.csv", summary), Artifact::new("resonance_trace.csv", trace)])
}

fn branch_cell(b: Branch) -> Cell {
    b.label().into()
}

pub fn approx_task(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let n = cfg.approx.n;
    let x = cfg.grid.x_axis()?;
    let xs = x.nodes();
    let (levels, _) = uncoupled(&x, &cfg.model, 3, cfg.solver.tol)?;

    let mut summary = Table::new(&[
        "lambda_c",
        "omega_c",
        "branch",
        "energy",
        "overlap",
        "overlap_as_printed",
        "q_element",
        "nu",
        "peak_height",
        "clamped",
        "violations",
        "masked_points",
        "above_third_level",
    ]);
    summary.note("n", n);
    summary.note("third_uncoupled_level", super::table::format_num(levels[2]));
    let mut curves = Table::new(&["lambda_c", "omega_c", "branch", "x", "bare_V", "eph_em", "eph_kin", "total", "density", "mask"]);
    curves.note("n", n);
    let mut fig7 = Table::new(&["lambda_c", "omega_c", "branch", "x", "step_term", "mask"]);
    fig7.note("n", n);
    let mut warnings = Vec::new();

    for &[lambda, omega] in &cfg.figures.points {
        let p = cfg.model.with_coupling(lambda, omega);
        let ground = approx_ground_curve(&x, &p)?;
        push_long(&mut curves, lambda, omega, "0".into(), &ground);
        for branch in [Branch::Minus, Branch::Plus] {
            let pol = approx_polariton(n, branch, &p)?;
            let model = ApproxModel::new(n, branch, &p)?;
            let prof = approx_marginal_profile(&model, xs);
            let curve = approx_excited_curve(&model, xs);
            let warn = validity_warning(&pol, levels[2]);
            if let Some(w) = &warn {
                warnings.push(w.clone());
            }
            summary.push(vec![
                lambda.into(),
                omega.into(),
                branch_cell(branch),
                pol.energy.into(),
                pol.overlap.into(),
                dho_overlap_as_printed(n, &p).into(),
                model.q_element.into(),
                pol.nu.into(),
                model.peak_height().into(),
                prof.clamped.into(),
                prof.violations.into(),
                curve.warnings.into(),
                warn.is_some().into(),
            ]);
            push_long(&mut curves, lambda, omega, branch_cell(branch), &curve);
            for (i, &xi) in xs.iter().enumerate() {
                let v = if curve.mask[i] { model.step_term(xi) } else { f64::NAN };
                fig7.push(vec![lambda.into(), omega.into(), branch_cell(branch), xi.into(), v.into(), curve.mask[i].into()]);
            }
        }
    }
    summary.note("validity_warnings", warnings.len());

    let mut fig6 = Table::new(&[
        "lambda_c",
        "height_minus",
        "height_plus",
        "overlap",
        "height_minus_as_printed",
        "height_plus_as_printed",
        "overlap_as_printed",
    ]);
    fig6.note("n", n);
    fig6.note("omega_c", super::table::format_num(cfg.model.omega_c));
    fig6.note(
        "uncoupled_limit",
        super::table::format_num(0.5 * cfg.model.a.powi(2) * cfg.model.omega_e.powi(2)),
    );
    let [lo, hi] = cfg.approx.sweep;
    let m = cfg.approx.sweep_points;
    for i in 0..m {
        let lambda = lo + (hi - lo) * i as f64 / (m - 1) as f64;
        let p = cfg.model.with_coupling(lambda, cfg.model.omega_c);
        let ovl = dho_overlap(n, &p)?;
        let printed = dho_overlap_as_printed(n, &p);
        fig6.push(vec![
            lambda.into(),
            peak_height_formula(ovl, Branch::Minus, &p).into(),
            peak_height_formula(ovl, Branch::Plus, &p).into(),
            ovl.into(),
            peak_height_formula(printed, Branch::Minus, &p).into(),
            peak_height_formula(printed, Branch::Plus, &p).into(),
            printed.into(),
        ]);
    }
    Ok(vec![
        Artifact::new("approx_summary.csv", summary),
        Artifact::new("approx_curves.csv", curves),
        Artifact::new("fig6_peak_sweep.csv", fig6),
        Artifact::new("fig7_step.csv", fig7),
    ])
}

fn push_long(t: &mut Table, lambda: f64, omega: f64, tag: Cell, c: &PotentialCurve) {
    for i in 0..c.x.len() {
        t.push(vec![
            lambda.into(),
            omega.into(),
            tag.clone(),
            c.x[i].into(),
            c.bare[i].into(),
            c.eph_em[i].into(),
            c.eph_kin[i].into(),
            c.total[i].into(),
            c.density[i].into(),
            c.mask[i].into(),
        ]);
    }
}

/// Minimum of `values` over valid points with x > 0.
fn right_minimum(c: &PotentialCurve, values: &[f64]) -> f64 {
    c.valid_in(values, 0.0, f64::INFINITY)
        .iter()
        .filter(|p| p.0 > 0.0)
        .fold(f64::INFINITY, |m, p| m.min(p.1))
}

pub fn compare_task(cfg: &RunConfig) -> Result<Vec<Artifact>> {
    let x = cfg.grid.x_axis()?;
    let xs = x.nodes();
    let (_, bare) = uncoupled(&x, &cfg.model, 1, cfg.solver.tol)?;
    let uncoupled_density: Vec<f64> = bare[0].iter().map(|v| v * v).collect();
    let uncoupled_variance = density_variance_about(&uncoupled_density, xs, -cfg.model.a);

    let mut fig3 = Table::new(&[
        "lambda_c",
        "x",
        "bare_V",
        "exact_total",
        "approx_total",
        "exact_density",
        "approx_density",
        "uncoupled_density",
        "exact_density_diff",
        "approx_density_diff",
        "mask",
    ]);
    fig3.note("density_diff", "uncoupled minus coupled");
    let mut trend = Table::new(&[
        "lambda_c",
        "omega_c",
        "exact_right_min",
        "approx_right_min",
        "bare_right_min",
        "exact_elevation",
        "approx_elevation",
        "exact_variance",
        "approx_variance",
        "uncoupled_variance",
    ]);
    let mut fig8 = Table::new(&[
        "lambda_c",
        "state",
        "x",
        "exact_total",
        "approx_total",
        "exact_eph_kin",
        "approx_eph_kin",
        "exact_mask",
        "approx_mask",
    ]);
    let mut summary = Table::new(&[
        "lambda_c",
        "omega_c",
        "state",
        "common_points",
        "max_abs_diff",
        "rms_diff",
        "exact_step",
        "approx_step",
        "exact_peak_x",
        "exact_peak_height",
        "approx_peak_x",
        "approx_peak_height",
    ]);

    for &[lambda, omega] in &cfg.figures.points {
        let p = cfg.model.with_coupling(lambda, omega);
        let s = solve_coupled(cfg, &p, 3)?;
        let exact = factorize_states(cfg, &s, &p, &[0, 1, 2])?;

        let eg = &exact[0].curve;
        let ag = approx_ground_curve(&x, &p)?;
        for i in 0..xs.len() {
            fig3.push(vec![
                lambda.into(),
                xs[i].into(),
                eg.bare[i].into(),
                eg.total[i].into(),
                ag.total[i].into(),
                eg.density[i].into(),
                ag.density[i].into(),
                uncoupled_density[i].into(),
                (uncoupled_density[i] - eg.density[i]).into(),
                (uncoupled_density[i] - ag.density[i]).into(),
                eg.mask[i].into(),
            ]);
        }
        let bare_min = right_minimum(eg, &eg.bare);
        let emin = right_minimum(eg, &eg.total);
        let amin = right_minimum(&ag, &ag.total);
        trend.push(vec![
            lambda.into(),
            omega.into(),
            emin.into(),
            amin.into(),
            bare_min.into(),
            (emin - bare_min).into(),
            (amin - bare_min).into(),
            density_variance_about(&eg.density, xs, -p.a).into(),
            density_variance_about(&ag.density, xs, -p.a).into(),
            uncoupled_variance.into(),
        ]);

        for &(j, branch) in &POLARITONS {
            let ec = &exact[j].curve;
            let ac = approx_excited_curve(&ApproxModel::new(cfg.approx.n, branch, &p)?, xs);
            for i in 0..xs.len() {
                fig8.push(vec![
                    lambda.into(),
                    j.into(),
                    xs[i].into(),
                    ec.total[i].into(),
                    ac.total[i].into(),
                    ec.eph_kin[i].into(),
                    ac.eph_kin[i].into(),
                    ec.mask[i].into(),
                    ac.mask[i].into(),
                ]);
            }
            let rep = compare_curves(ec, &ac, p.a)?;
            let [epx, eph] = peak_cells(rep.exact_peak);
            let [apx, aph] = peak_cells(rep.approx_peak);
            summary.push(vec![
                lambda.into(),
                omega.into(),
                j.into(),
                rep.common_points.into(),
                rep.max_abs_diff.into(),
                rep.rms_diff.into(),
                rep.exact_step.into(),
                rep.approx_step.into(),
                epx,
                eph,
                apx,
                aph,
            ]);
        }
    }
    Ok(vec![
        Artifact::new("fig3_ground.csv", fig3),
        Artifact::new("ground_trend.csv", trend),
        Artifact::new("fig8_compare.csv", fig8),
        Artifact::new("compare_summary.csv", summary),
    ])
}
