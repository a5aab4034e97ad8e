use crate::output::{residual_csv, trace_csv, write_json};
use crate::{verify, Command, EXIT_VERIFY};
use homog_core::{
    appendix_verify, builtin_fixtures, effective_tensor, estimate_fhom, homogeneity_probe,
    regime_sweep, solve_corrector, validate, CellError, ConductanceField, Fixture, FixtureError,
    Geometry, GeometrySpec, HomogError, Lattice, MinimizeOpts, MsError, RegimeSchedule,
    SolveOpts,
};
use std::fmt;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

/// Error wrapper carrying the process exit status. Validation problems
/// (inputs, parameters, file contents) exit 2, solver failures exit 3,
/// verification violations exit 1.
#[derive(Debug)]
pub enum CliError {
    Validation(String),
    Solver(String),
    Verify(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Validation(m) | CliError::Solver(m) | CliError::Verify(m) => f.write_str(m),
        }
    }
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => crate::EXIT_VALIDATION,
            CliError::Solver(_) => crate::EXIT_SOLVER,
            CliError::Verify(_) => crate::EXIT_VERIFY,
        }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<serde_json::Error> for CliError {
    fn from(e: serde_json::Error) -> Self {
        CliError::Validation(e.to_string())
    }
}

impl From<HomogError> for CliError {
    fn from(e: HomogError) -> Self {
        match e {
            HomogError::Ms(MsError::Solver(s)) => CliError::Solver(s.to_string()),
            HomogError::Cell(CellError::Solver(s)) => CliError::Solver(s.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<CellError> for CliError {
    fn from(e: CellError) -> Self {
        match e {
            CellError::Solver(s) => CliError::Solver(s.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<MsError> for CliError {
    fn from(e: MsError) -> Self {
        match e {
            MsError::Solver(s) => CliError::Solver(s.to_string()),
            other => CliError::Validation(other.to_string()),
        }
    }
}

impl From<FixtureError> for CliError {
    fn from(e: FixtureError) -> Self {
        match e {
            FixtureError::Mismatch { .. } | FixtureError::MissingOracle { .. } => {
                CliError::Verify(e.to_string())
            }
            FixtureError::Ms(ms) => ms.into(),
            FixtureError::Homog(h) => h.into(),
            other => CliError::Validation(other.to_string()),
        }
    }
}

fn load_geometry(path: &Path) -> Result<Geometry, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let spec: GeometrySpec = serde_json::from_str(&text)
        .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    validate(spec).map_err(|e| CliError::Validation(e.to_string()))
}

fn minimize_opts(starts: usize, seed: u64) -> MinimizeOpts {
    MinimizeOpts {
        random_starts: starts,
        seed,
        ..MinimizeOpts::default()
    }
}

pub fn dispatch(cmd: Command) -> Result<ExitCode, CliError> {
    match cmd {
        Command::CellTensor {
            geom,
            m,
            out,
            residual_csv: residual_out,
        } => {
            let geometry = load_geometry(&geom)?;
            let tensor = effective_tensor(&geometry, m, &SolveOpts::default())?;
            if let Some(res_path) = residual_out {
                let lat = Lattice::build(
                    &geometry,
                    1,
                    m,
                    homog_core::BoundaryCondition::Periodic,
                )
                .map_err(|e| CliError::Validation(e.to_string()))?;
                let cond = ConductanceField::voided(&lat);
                let opts = SolveOpts {
                    record_residuals: true,
                    ..SolveOpts::default()
                };
                let (_, stats) = solve_corrector(&lat, &cond, [1.0, 0.0], &opts)
                    .map_err(|e| CliError::Solver(e.to_string()))?;
                crate::output::write_atomic(
                    &res_path,
                    residual_csv(&stats.residual_history).as_bytes(),
                )?;
            }
            write_json(&out, &tensor)?;
            println!(
                "a0 = [[{}, {}], [{}, {}]] (m = {m})",
                tensor.a0[0][0], tensor.a0[0][1], tensor.a0[1][0], tensor.a0[1][1]
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Fhom {
            geom,
            xi,
            t,
            m,
            out,
            trace_csv: trace_out,
            starts,
            seed,
        } => {
            let geometry = load_geometry(&geom)?;
            let report = estimate_fhom(&geometry, xi, &t, m, &minimize_opts(starts, seed))?;
            if let Some(path) = trace_out {
                crate::output::write_atomic(
                    &path,
                    trace_csv(&report.records, false).as_bytes(),
                )?;
            }
            if let Some(path) = out {
                write_json(&path, &report)?;
            }
            println!(
                "fhom_estimate = {} (cauchy_gap {}, sandwich_ok {})",
                report.fhom_estimate, report.cauchy_gap, report.sandwich_ok
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::ProbeHomogeneity {
            geom,
            xi,
            lambdas,
            t,
            m,
            out,
            starts,
            seed,
        } => {
            let geometry = load_geometry(&geom)?;
            let report =
                homogeneity_probe(&geometry, xi, &lambdas, t, m, &minimize_opts(starts, seed))?;
            for row in &report.rows {
                println!(
                    "lambda {}: E(lambda xi) = {}, lambda^2 E(xi) = {}, below_quadratic {}",
                    row.lambda, row.energy_scaled, row.quadratic_reference, row.below_quadratic
                );
            }
            println!("non2homog_detected = {}", report.non2homog_detected);
            if let Some(path) = out {
                write_json(&path, &report)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep {
            geom,
            xi,
            c,
            p,
            eps,
            m,
            beta,
            out,
            trace_csv: trace_out,
            starts,
            seed,
        } => {
            let geometry = load_geometry(&geom)?;
            let schedule = RegimeSchedule::new(c, p)?;
            let report = regime_sweep(
                &geometry,
                xi,
                schedule,
                &eps,
                m,
                beta,
                &minimize_opts(starts, seed),
            )?;
            if let Some(path) = trace_out {
                crate::output::write_atomic(&path, trace_csv(&report.records, true).as_bytes())?;
            }
            if let Some(path) = out {
                write_json(&path, &report)?;
            }
            println!("regime {} -> trend {}", report.regime, report.trend);
            Ok(ExitCode::SUCCESS)
        }
        Command::Appendix {
            geom,
            xi,
            t,
            m,
            betas,
            out,
            starts,
            seed,
        } => {
            let geometry = load_geometry(&geom)?;
            let report =
                appendix_verify(&geometry, xi, t, m, &betas, &minimize_opts(starts, seed))?;
            for row in &report.rows {
                println!(
                    "beta {}: ratio = {}, crack_measure = {}",
                    row.beta, row.ratio, row.crack_measure
                );
            }
            println!(
                "c_fit = {}, max_residual = {}",
                report.c_fit, report.max_residual
            );
            if let Some(path) = out {
                write_json(&path, &report)?;
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Oracle {
            fixture,
            regen_oracle,
            write_builtin,
        } => {
            if let Some(dir) = write_builtin {
                std::fs::create_dir_all(&dir)?;
                let opts = MinimizeOpts::default();
                for mut fx in builtin_fixtures() {
                    fx.regenerate_oracle(&opts)?;
                    let path = dir.join(format!("{}.json", fx.name));
                    write_json(&path, &fx)?;
                    println!("wrote {}", path.display());
                }
                return Ok(ExitCode::SUCCESS);
            }
            let path: PathBuf = fixture.ok_or_else(|| {
                CliError::Validation("either --fixture or --write-builtin is required".into())
            })?;
            let mut fx = Fixture::load(&path)?;
            if regen_oracle {
                fx.regenerate_oracle(&MinimizeOpts::default())?;
                write_json(&path, &fx)?;
                println!("regenerated oracle for {}", fx.name);
            } else {
                fx.check_against_oracle(&MinimizeOpts::default(), 1e-9)?;
                println!("fixture {} matches its oracle", fx.name);
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Verify { fixtures_dir, out } => {
            let report = verify::run(&fixtures_dir)?;
            for check in &report.checks {
                if check.passed {
                    println!("ok   {}", check.name);
                } else {
                    println!("FAIL {}: {}", check.name, check.detail);
                }
            }
            if let Some(path) = out {
                write_json(&path, &report)?;
            }
            if report.passed {
                println!("verify: all {} checks passed", report.checks.len());
                Ok(ExitCode::SUCCESS)
            } else {
                println!("verify: violations detected");
                Ok(ExitCode::from(EXIT_VERIFY))
            }
        }
    }
}
