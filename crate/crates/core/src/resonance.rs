//! Location of the cavity frequency at which the first excited electronic
//! density delocalizes across both wells.
//!
//! The lower member of the polariton pair (state 1) is left-localized below
//! resonance and right-localized above it, so its signed imbalance
//! P_L − P_R changes sign across the avoided crossing. The search
//!
//! 1. scans the bracket for that sign change,
//! 2. bisects on the sign until both ends sit inside the transition region,
//! 3. runs golden-section minimization of the delocalization metric
//!    (min over the pair of |P_L − P_R|), or of the pair gap in gap mode.

use rayon::prelude::*;

use crate::efactor::{factorize, side_populations, FullState};
use crate::eigensolver::{solve, SolveOptions, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::model::{assemble_coupled_hamiltonian, Grid2D, GridSpec, ModelParams};

pub const DEFAULT_BRACKET: (f64, f64) = (0.30, 0.55);
pub const DEFAULT_FREQ_TOL: f64 = 1e-6;
pub const DEFAULT_SCAN_POINTS: usize = 11;

/// |imbalance| below which a bracket end counts as inside the transition region.
const TRANSITION_LEVEL: f64 = 0.9;

const INV_PHI: f64 = 0.618_033_988_749_894_8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResonanceMode {
    /// Minimize the delocalization metric of the polariton pair.
    Delocalization,
    /// Minimize the energy gap of the polariton pair.
    GapMinimum,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Scan,
    Bisect,
    Golden,
}

#[derive(Debug, Clone)]
pub struct ResonanceOptions {
    pub bracket: (f64, f64),
    pub tol: f64,
    pub scan_points: usize,
    pub grid: GridSpec,
    pub eig_tol: f64,
    pub mode: ResonanceMode,
    pub base: ModelParams,
}

impl Default for ResonanceOptions {
    fn default() -> Self {
        ResonanceOptions {
            bracket: DEFAULT_BRACKET,
            tol: DEFAULT_FREQ_TOL,
            scan_points: DEFAULT_SCAN_POINTS,
            grid: GridSpec::default(),
            eig_tol: DEFAULT_TOL,
            mode: ResonanceMode::Delocalization,
            base: ModelParams::default(),
        }
    }
}

/// One solve at a trial frequency.
#[derive(Debug, Clone, Copy)]
pub struct Evaluation {
    pub omega_c: f64,
    pub stage: Stage,
    /// min over the pair of |P_L − P_R|
    pub metric: f64,
    /// P_L − P_R of state 1
    pub imbalance: f64,
    /// E₂ − E₁
    pub gap: f64,
    pub ground_energy: f64,
}

#[derive(Debug, Clone)]
pub struct ResonanceResult {
    pub lambda_c: f64,
    pub mode: ResonanceMode,
    pub omega_c_star: f64,
    pub metric_at_star: f64,
    pub gap_at_star: f64,
    /// Final golden-section bracket and the metric at its ends.
    pub bracket: (f64, f64),
    pub metric_at_bracket: (f64, f64),
    /// Every evaluation, in order.
    pub trace: Vec<Evaluation>,
    /// Whether the coarse metric scan was unimodal (reported, not enforced).
    pub scan_unimodal: bool,
}

impl ResonanceResult {
    pub fn solves(&self) -> usize {
        self.trace.len()
    }
}

/// |P_L − P_R| for a normalized marginal amplitude.
pub fn delocalization_metric(phi: &[f64], g: &Grid2D) -> f64 {
    signed_imbalance(phi, g).abs()
}

/// P_L − P_R for a normalized marginal amplitude.
pub fn signed_imbalance(phi: &[f64], g: &Grid2D) -> f64 {
    let (l, r) = side_populations(phi, g.x.nodes(), g.dx());
    l - r
}

/// Solves at one frequency and measures the polariton pair (states 1 and 2).
pub fn evaluate(lambda_c: f64, omega_c: f64, opts: &ResonanceOptions, shift_hint: Option<f64>) -> Result<Evaluation> {
    let p = opts.base.with_coupling(lambda_c, omega_c);
    p.validate()?;
    let g = opts.grid.build(&p)?;
    let h = assemble_coupled_hamiltonian(&g, &p)?;
    let mut so = SolveOptions {
        k: 3,
        tol: opts.eig_tol,
        shift: shift_hint,
        ..SolveOptions::default()
    };
    let res = match solve(&h, &so) {
        Err(Error::Numeric(_)) if shift_hint.is_some() => {
            so.shift = None;
            solve(&h, &so)?
        }
        r => r?,
    };
    let states = FullState::all_from(&res, &g);
    let d1 = signed_imbalance(&factorize(&states[1], &g)?.phi, &g);
    let d2 = signed_imbalance(&factorize(&states[2], &g)?.phi, &g);
    Ok(Evaluation {
        omega_c,
        stage: Stage::Scan,
        metric: d1.abs().min(d2.abs()),
        imbalance: d1,
        gap: res.pairs[2].energy - res.pairs[1].energy,
        ground_energy: res.pairs[0].energy,
    })
}

/// Golden-section search with the default options and the given bracket and tolerance.
pub fn find_resonance(lambda_c: f64, bracket: (f64, f64), tol: f64) -> Result<ResonanceResult> {
    find_resonance_with(
        lambda_c,
        &ResonanceOptions {
            bracket,
            tol,
            ..ResonanceOptions::default()
        },
    )
}

pub fn find_resonance_with(lambda_c: f64, opts: &ResonanceOptions) -> Result<ResonanceResult> {
    let (lo, hi) = opts.bracket;
    if !(lo > 0.0 && hi > lo) {
        return Err(Error::Config(format!("invalid frequency bracket ({lo}, {hi})")));
    }
    if !(opts.tol > 0.0) || opts.scan_points < 3 {
        return Err(Error::Config("resonance tolerance must be positive and scan_points ≥ 3".into()));
    }
    let mut trace: Vec<Evaluation> = Vec::new();

    // Stage 1: coarse scan; each point is independent.
    let omegas: Vec<f64> = (0..opts.scan_points)
        .map(|i| lo + (hi - lo) * i as f64 / (opts.scan_points - 1) as f64)
        .collect();
    let scan: Vec<Evaluation> = omegas
        .par_iter()
        .map(|&w| evaluate(lambda_c, w, opts, None))
        .collect::<Result<Vec<_>>>()?;
    trace.extend(scan.iter().copied());
    let scan_unimodal = is_unimodal(&scan.iter().map(|e| e.metric).collect::<Vec<_>>());
    let crossing = scan.windows(2).position(|w| w[0].imbalance > 0.0 && w[1].imbalance <= 0.0);
    let Some(i) = crossing else {
        return Err(Error::Bracketing {
            message: format!(
                "no sign change of the state-1 imbalance in [{lo}, {hi}] for λ_c = {lambda_c}; no interior minimum"
            ),
            trace: scan.iter().map(|e| (e.omega_c, e.imbalance, e.gap)).collect(),
        });
    };
    let mut a = scan[i];
    let mut b = scan[i + 1];
    let mut hint = Some(a.ground_energy - 0.05);

    // Stage 2: bisection on the sign of the imbalance.
    while b.omega_c - a.omega_c > opts.tol
        && (a.imbalance.abs() > TRANSITION_LEVEL || b.imbalance.abs() > TRANSITION_LEVEL)
    {
        let mut m = evaluate(lambda_c, 0.5 * (a.omega_c + b.omega_c), opts, hint)?;
        m.stage = Stage::Bisect;
        hint = Some(m.ground_energy - 0.05);
        trace.push(m);
        if m.imbalance > 0.0 {
            a = m;
        } else {
            b = m;
        }
    }

    // Stage 3: golden section on the chosen objective.
    let objective = |e: &Evaluation| match opts.mode {
        ResonanceMode::Delocalization => e.metric,
        ResonanceMode::GapMinimum => e.gap,
    };
    let eval_golden = |w: f64, hint: &mut Option<f64>, trace: &mut Vec<Evaluation>| -> Result<Evaluation> {
        let mut e = evaluate(lambda_c, w, opts, *hint)?;
        e.stage = Stage::Golden;
        *hint = Some(e.ground_energy - 0.05);
        trace.push(e);
        Ok(e)
    };
    let (mut lo_e, mut hi_e) = (a, b);
    let mut golden: Vec<Evaluation> = vec![a, b];
    if hi_e.omega_c - lo_e.omega_c > opts.tol {
        let span = hi_e.omega_c - lo_e.omega_c;
        let mut c = eval_golden(hi_e.omega_c - INV_PHI * span, &mut hint, &mut trace)?;
        let mut d = eval_golden(lo_e.omega_c + INV_PHI * span, &mut hint, &mut trace)?;
        golden.extend([c, d]);
        while hi_e.omega_c - lo_e.omega_c > opts.tol {
            if objective(&c) <= objective(&d) {
                hi_e = d;
                d = c;
                let w = hi_e.omega_c - INV_PHI * (hi_e.omega_c - lo_e.omega_c);
                c = eval_golden(w, &mut hint, &mut trace)?;
                golden.push(c);
            } else {
                lo_e = c;
                c = d;
                let w = lo_e.omega_c + INV_PHI * (hi_e.omega_c - lo_e.omega_c);
                d = eval_golden(w, &mut hint, &mut trace)?;
                golden.push(d);
            }
        }
    }
    let star = golden
        .iter()
        .filter(|e| e.omega_c >= lo_e.omega_c && e.omega_c <= hi_e.omega_c)
        .min_by(|x, y| objective(x).total_cmp(&objective(y)))
        .copied()
        .unwrap_or(lo_e);
    Ok(ResonanceResult {
        lambda_c,
        mode: opts.mode,
        omega_c_star: star.omega_c,
        metric_at_star: star.metric,
        gap_at_star: star.gap,
        bracket: (lo_e.omega_c, hi_e.omega_c),
        metric_at_bracket: (lo_e.metric, hi_e.metric),
        trace,
        scan_unimodal,
    })
}

/// Non-increasing then non-decreasing, up to a small slack.
fn is_unimodal(v: &[f64]) -> bool {
    let slack = 1e-6;
    let Some(imin) = (0..v.len()).min_by(|&i, &j| v[i].total_cmp(&v[j])) else {
        return true;
    };
    v[..=imin].windows(2).all(|w| w[1] <= w[0] + slack) && v[imin..].windows(2).all(|w| w[1] + slack >= w[0])
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Axis;

    #[test]
    fn metric_of_symmetric_and_localized() {
        let x = Axis::uniform(-4.0, 4.0, 81).unwrap();
        let q = Axis::uniform(-1.0, 1.0, 5).unwrap();
        let g = Grid2D::new(x.clone(), q);
        let n = |f: &dyn Fn(f64) -> f64| {
            let v: Vec<f64> = x.nodes().iter().map(|&x| f(x)).collect();
            let s = (v.iter().map(|a| a * a).sum::<f64>() * x.spacing()).sqrt();
            v.into_iter().map(|a| a / s).collect::<Vec<_>>()
        };
        let sym = n(&|x: f64| (-(x - 1.5).powi(2)).exp() + (-(x + 1.5).powi(2)).exp());
        assert!(delocalization_metric(&sym, &g) < 1e-14);
        let left = n(&|x: f64| (-2.0 * (x + 2.0).powi(2)).exp());
        assert!((signed_imbalance(&left, &g) - 1.0).abs() < 1e-6);
    }

    #[test]
    fn unimodality() {
        assert!(is_unimodal(&[1.0, 0.9, 0.1, 0.5, 1.0]));
        assert!(is_unimodal(&[1.0, 1.0, 1.0]));
        assert!(!is_unimodal(&[1.0, 0.2, 0.9, 0.1, 1.0]));
    }

    #[test]
    fn empty_bracket_is_bracketing_error() {
        let opts = ResonanceOptions {
            bracket: (0.45, 0.55),
            scan_points: 3,
            grid: GridSpec::reduced(),
            ..ResonanceOptions::default()
        };
        match find_resonance_with(0.1, &opts) {
            Err(Error::Bracketing { trace, .. }) => assert_eq!(trace.len(), 3),
            other => panic!("expected bracketing error, got {other:?}"),
        }
    }

    #[test]
    fn invalid_bracket_rejected() {
        assert!(matches!(find_resonance(0.1, (0.5, 0.3), 1e-6), Err(Error::Config(_))));
    }
}
