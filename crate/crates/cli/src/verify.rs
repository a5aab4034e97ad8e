//! The `verify` subcommand: replays every stored oracle and a battery of
//! structural invariants on the shipped fixtures. Entirely offline, and all
//! output is deterministic so repeated runs can be byte-compared.

use crate::commands::CliError;
use homog_core::{
    appendix_verify, truncate, CorrectorField, CrackState, Fixture, MinimizeOpts, MsProblem,
    BRUTE_FORCE_CAP,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use std::path::Path;

#[derive(Clone, Debug, serde::Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, serde::Serialize)]
pub struct VerifyReport {
    pub fixtures: Vec<String>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

fn push(checks: &mut Vec<Check>, name: String, result: Result<String, String>) {
    match result {
        Ok(detail) => checks.push(Check {
            name,
            passed: true,
            detail,
        }),
        Err(detail) => checks.push(Check {
            name,
            passed: false,
            detail,
        }),
    }
}

pub fn run(fixtures_dir: &Path) -> Result<VerifyReport, CliError> {
    let mut paths: Vec<_> = std::fs::read_dir(fixtures_dir)
        .map_err(|e| CliError::Validation(format!("{}: {e}", fixtures_dir.display())))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|ext| ext == "json"))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(CliError::Validation(format!(
            "no fixture files in {}",
            fixtures_dir.display()
        )));
    }

    let opts = MinimizeOpts::default();
    let mut checks = Vec::new();
    let mut fixtures = Vec::new();
    for path in &paths {
        let fx = Fixture::load(path).map_err(CliError::from)?;
        fixtures.push(fx.name.clone());
        run_fixture_checks(&fx, &opts, &mut checks)?;
    }
    truncation_trials(&mut checks)?;

    let passed = checks.iter().all(|c| c.passed);
    Ok(VerifyReport {
        fixtures,
        checks,
        passed,
    })
}

fn run_fixture_checks(
    fx: &Fixture,
    opts: &MinimizeOpts,
    checks: &mut Vec<Check>,
) -> Result<(), CliError> {
    let lat = fx.lattice().map_err(CliError::from)?;

    // stored oracle replay: the heuristic minimizer must reach the
    // exhaustively computed global minimum at every stored weight
    push(
        checks,
        format!("{}/oracle-match", fx.name),
        match fx.check_against_oracle(opts, 1e-9) {
            Ok(()) => Ok("heuristic minima match stored exhaustive minima".into()),
            Err(e) => Err(e.to_string()),
        },
    );

    // the intact competitor bounds every minimum: total <= |xi|^2 t^2
    let xi_sq = fx.xi[0] * fx.xi[0] + fx.xi[1] * fx.xi[1];
    let area = (fx.t * fx.t) as f64;
    let mut elastic_ok = Ok(format!("elastic ceiling {}", xi_sq * area));
    for &w in &fx.surface_weights {
        let prob = MsProblem::new(&lat, fx.xi, w);
        let sol = prob.minimize(opts).map_err(CliError::from)?;
        if sol.breakdown.total > xi_sq * area + 1e-9 {
            elastic_ok = Err(format!(
                "weight {w}: total {} exceeds elastic ceiling {}",
                sol.breakdown.total,
                xi_sq * area
            ));
            break;
        }
        // forbidding cracks can only raise the minimum
        let intact = prob
            .solve_for_crack(&CrackState::empty(), &opts.solve)
            .map_err(CliError::from)?;
        if sol.breakdown.total > intact.1.total + 1e-9 {
            elastic_ok = Err(format!(
                "weight {w}: total {} exceeds crack-free minimum {}",
                sol.breakdown.total, intact.1.total
            ));
            break;
        }
    }
    push(checks, format!("{}/elastic-ceiling", fx.name), elastic_ok);

    // exact scaling inequalities for exhaustive minima
    let energy_at = |scale: f64| -> Result<f64, CliError> {
        let prob = MsProblem::new(&lat, [fx.xi[0] * scale, fx.xi[1] * scale], 1.0);
        Ok(prob
            .brute_force_min(BRUTE_FORCE_CAP, &opts.solve)
            .map_err(CliError::from)?
            .breakdown
            .total)
    };
    let base = energy_at(1.0)?;
    let mut scaling_ok = Ok(format!("base energy {base}"));
    for lam in [2.0, 4.0] {
        let scaled = energy_at(lam)?;
        if scaled > lam * lam * base + 1e-9 {
            scaling_ok = Err(format!(
                "lambda {lam}: {scaled} > {}",
                lam * lam * base
            ));
        }
    }
    let half = energy_at(0.5)?;
    if base > 4.0 * half + 1e-9 {
        scaling_ok = Err(format!("lambda 1/2: {base} > {}", 4.0 * half));
    }
    push(checks, format!("{}/scaling-inequalities", fx.name), scaling_ok);

    // at the global minimum a tougher material never cracks more
    let mut weights = fx.surface_weights.clone();
    weights.sort_by(f64::total_cmp);
    let mut prev = f64::INFINITY;
    let mut monotone_ok = Ok("crack measure non-increasing in toughness".into());
    for &w in &weights {
        let sol = MsProblem::new(&lat, fx.xi, w)
            .brute_force_min(BRUTE_FORCE_CAP, &opts.solve)
            .map_err(CliError::from)?;
        if sol.breakdown.crack_measure > prev + 1e-12 {
            monotone_ok = Err(format!(
                "weight {w}: measure {} exceeds previous {prev}",
                sol.breakdown.crack_measure
            ));
            break;
        }
        prev = sol.breakdown.crack_measure;
    }
    push(checks, format!("{}/toughness-monotonicity", fx.name), monotone_ok);

    // budget-constrained recovery ratios: bounded by 1, tightening as the
    // budget shrinks, and reproduced by the fitted omega curve
    let geom = fx.geometry().map_err(CliError::from)?;
    let length_f = geom.length_f();
    if length_f > 0.0 {
        let betas: Vec<f64> = [0.5, 0.25, 0.125, 0.0625]
            .iter()
            .map(|f| f * length_f)
            .collect();
        let strong_xi = [fx.xi[0] * 3.0, fx.xi[1] * 3.0];
        let report = appendix_verify(&geom, strong_xi, fx.t, fx.m, &betas, opts)
            .map_err(CliError::from)?;
        let mut appendix_ok = Ok(format!(
            "c_fit {}, max residual {}",
            report.c_fit, report.max_residual
        ));
        for w in report.rows.windows(2) {
            if w[1].ratio < w[0].ratio - 1e-9 {
                appendix_ok = Err(format!(
                    "ratio fell from {} to {} as budget shrank",
                    w[0].ratio, w[1].ratio
                ));
            }
        }
        for row in &report.rows {
            if row.ratio > 1.0 + 1e-12 {
                appendix_ok = Err(format!("ratio {} above 1", row.ratio));
            }
        }
        if report.max_residual > 1e-2 {
            appendix_ok = Err(format!("fit residual {} above 1e-2", report.max_residual));
        }
        push(checks, format!("{}/recovery-estimate", fx.name), appendix_ok);
    }
    Ok(())
}

/// Randomized clamping trials: truncating the total field never increases
/// the energy at fixed crack on a Dirichlet cell.
fn truncation_trials(checks: &mut Vec<Check>) -> Result<(), CliError> {
    let fx = homog_core::builtin_fixtures()
        .into_iter()
        .find(|f| f.name == "slit")
        .expect("built-in slit fixture");
    let lat = fx.lattice().map_err(CliError::from)?;
    let prob = MsProblem::new(&lat, fx.xi, 1.0);
    let mut rng = ChaCha8Rng::seed_from_u64(0xC1A_u64);
    let mut result = Ok("1000 randomized clamps, none increased the energy".into());
    for trial in 0..1000 {
        let mut field = CorrectorField::zero(&lat, fx.xi);
        for w in field.w.iter_mut() {
            *w = rng.random_range(-1.0..1.0);
        }
        let crack = CrackState::from_bonds(
            lat.breakable
                .iter()
                .copied()
                .filter(|_| rng.random_bool(0.5))
                .collect(),
        );
        let a = rng.random_range(-2.0..2.0);
        let b = rng.random_range(-2.0..2.0);
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let before = prob.energy(&field, &crack).map_err(CliError::from)?;
        let clamped = truncate(&lat, &field, lo, hi);
        let after = prob.energy(&clamped, &crack).map_err(CliError::from)?;
        if after.total > before.total + 1e-12 {
            result = Err(format!(
                "trial {trial}: clamp to [{lo}, {hi}] raised energy {} -> {}",
                before.total, after.total
            ));
            break;
        }
    }
    push(checks, "slit/truncation-monotonicity".into(), result);
    Ok(())
}
