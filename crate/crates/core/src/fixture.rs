//! Small named problem instances with exhaustively computed reference
//! minima, used as ground truth by the verification suite.

use crate::brittle_ms::{MinimizeOpts, MsProblem};
use crate::geometry::{validate, EShape, FCurve, Geometry, GeometryError, GeometrySpec};
use crate::homogenize::{HomogError, BRUTE_FORCE_CAP};
use crate::lattice::{BoundaryCondition, Lattice};
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum FixtureError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Homog(#[from] HomogError),
    #[error(transparent)]
    Ms(#[from] crate::brittle_ms::MsError),
    #[error(transparent)]
    Lattice(#[from] crate::lattice::LatticeError),
    #[error("fixture {name}: no stored oracle (run regeneration first)")]
    MissingOracle { name: String },
    #[error("fixture {name}, weight {weight}: {what} mismatch: got {got}, expected {expected}")]
    Mismatch {
        name: String,
        weight: f64,
        what: &'static str,
        got: f64,
        expected: f64,
    },
}

/// Reference minimum for one surface weight.
#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct OracleEntry {
    pub surface_weight: f64,
    pub total: f64,
    pub bulk: f64,
    pub surface: f64,
    pub crack_measure: f64,
    pub crack_bonds: Vec<usize>,
}

#[derive(Clone, Debug, serde::Serialize, serde::Deserialize)]
pub struct Fixture {
    pub name: String,
    pub geometry: GeometrySpec,
    pub t: usize,
    pub m: usize,
    pub xi: [f64; 2],
    pub surface_weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<Vec<OracleEntry>>,
}

impl Fixture {
    pub fn load(path: &Path) -> Result<Fixture, FixtureError> {
        Ok(serde_json::from_str(&std::fs::read_to_string(path)?)?)
    }

    pub fn geometry(&self) -> Result<Geometry, FixtureError> {
        Ok(validate(self.geometry.clone())?)
    }

    pub fn lattice(&self) -> Result<Lattice, FixtureError> {
        let geom = self.geometry()?;
        Ok(Lattice::build(
            &geom,
            self.t,
            self.m,
            BoundaryCondition::DirichletZero,
        )?)
    }

    /// Recomputes the oracle entries by exhaustive enumeration.
    pub fn regenerate_oracle(&mut self, opts: &MinimizeOpts) -> Result<(), FixtureError> {
        let lat = self.lattice()?;
        let mut entries = Vec::with_capacity(self.surface_weights.len());
        for &weight in &self.surface_weights {
            let prob = MsProblem::new(&lat, self.xi, weight);
            let sol = prob.brute_force_min(BRUTE_FORCE_CAP, &opts.solve)?;
            entries.push(OracleEntry {
                surface_weight: weight,
                total: sol.breakdown.total,
                bulk: sol.breakdown.bulk,
                surface: sol.breakdown.surface,
                crack_measure: sol.breakdown.crack_measure,
                crack_bonds: sol.crack.bonds().to_vec(),
            });
        }
        self.oracle = Some(entries);
        Ok(())
    }

    /// Runs the heuristic minimizer against the stored oracle; `tol` bounds
    /// the admissible total-energy excess.
    pub fn check_against_oracle(
        &self,
        opts: &MinimizeOpts,
        tol: f64,
    ) -> Result<(), FixtureError> {
        let entries = self.oracle.as_ref().ok_or_else(|| FixtureError::MissingOracle {
            name: self.name.clone(),
        })?;
        let lat = self.lattice()?;
        for entry in entries {
            let prob = MsProblem::new(&lat, self.xi, entry.surface_weight);
            let sol = prob.minimize(opts)?;
            if (sol.breakdown.total - entry.total).abs() > tol {
                return Err(FixtureError::Mismatch {
                    name: self.name.clone(),
                    weight: entry.surface_weight,
                    what: "total",
                    got: sol.breakdown.total,
                    expected: entry.total,
                });
            }
        }
        Ok(())
    }
}

/// The standard surface-weight ladder shared by the shipped fixtures.
pub const ORACLE_WEIGHTS: [f64; 3] = [0.01, 1.0, 10.0];

/// The shipped fixture set, before oracle regeneration.
pub fn builtin_fixtures() -> Vec<Fixture> {
    let weights = ORACLE_WEIGHTS.to_vec();
    vec![
        Fixture {
            name: "slit".into(),
            geometry: GeometrySpec::new(
                0.2,
                vec![],
                vec![FCurve {
                    points: vec![[0.35, 0.5], [0.65, 0.5]],
                }],
            ),
            t: 1,
            m: 10,
            xi: [0.0, 2.0],
            surface_weights: weights.clone(),
            oracle: None,
        },
        Fixture {
            name: "slit_t2".into(),
            geometry: GeometrySpec::new(
                0.2,
                vec![],
                vec![FCurve {
                    points: vec![[0.35, 0.5], [0.65, 0.5]],
                }],
            ),
            t: 2,
            m: 10,
            xi: [0.0, 2.0],
            surface_weights: weights.clone(),
            oracle: None,
        },
        Fixture {
            name: "corner".into(),
            geometry: GeometrySpec::new(
                0.2,
                vec![],
                vec![FCurve {
                    points: vec![[0.35, 0.5], [0.65, 0.5], [0.65, 0.75]],
                }],
            ),
            t: 1,
            m: 10,
            xi: [1.0, 2.0],
            surface_weights: weights.clone(),
            oracle: None,
        },
        Fixture {
            name: "disk_small".into(),
            geometry: GeometrySpec::new(
                0.25,
                vec![EShape::Disk {
                    center: [0.5, 0.5],
                    radius: 0.12,
                }],
                vec![],
            ),
            t: 1,
            m: 8,
            xi: [3.0, 0.0],
            surface_weights: weights,
            oracle: None,
        },
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_fixtures_stay_within_oracle_budget() {
        for fx in builtin_fixtures() {
            let lat = fx.lattice().unwrap();
            assert!(
                !lat.breakable.is_empty() && lat.breakable.len() <= 12,
                "{}: {} breakable bonds",
                fx.name,
                lat.breakable.len()
            );
        }
    }

    #[test]
    fn oracle_roundtrip_and_check() {
        let opts = MinimizeOpts::default();
        let mut fx = builtin_fixtures()
            .into_iter()
            .find(|f| f.name == "slit")
            .unwrap();
        assert!(matches!(
            fx.check_against_oracle(&opts, 1e-9),
            Err(FixtureError::MissingOracle { .. })
        ));
        fx.regenerate_oracle(&opts).unwrap();
        fx.check_against_oracle(&opts, 1e-9).unwrap();

        let json = serde_json::to_string_pretty(&fx).unwrap();
        let back: Fixture = serde_json::from_str(&json).unwrap();
        back.check_against_oracle(&opts, 1e-9).unwrap();
    }

    #[test]
    fn tampered_oracle_is_detected() {
        let opts = MinimizeOpts::default();
        let mut fx = builtin_fixtures()
            .into_iter()
            .find(|f| f.name == "slit")
            .unwrap();
        fx.regenerate_oracle(&opts).unwrap();
        fx.oracle.as_mut().unwrap()[0].total += 0.5;
        assert!(matches!(
            fx.check_against_oracle(&opts, 1e-9),
            Err(FixtureError::Mismatch { .. })
        ));
    }
}
