pub mod brittle_ms;
pub mod cell_tensor;
pub mod fixture;
pub mod geometry;
pub mod homogenize;
pub mod lattice;
pub mod solver;

pub use brittle_ms::{
    truncate, Breakdown, MinimizeOpts, MsError, MsProblem, MsSolution, START_SEED,
};
pub use cell_tensor::{effective_tensor, f0, CellError, EffectiveTensor};
pub use fixture::{builtin_fixtures, Fixture, FixtureError, OracleEntry, ORACLE_WEIGHTS};
pub use homogenize::{
    appendix_verify, estimate_fhom, g_of_t, homogeneity_probe, regime_sweep, solve_cell,
    AppendixReport, AppendixRow, Bounds, CellRecord, HomogError, HomogReport, ProbeReport,
    ProbeRow, RegimeSchedule, SweepReport, BRUTE_FORCE_CAP, DEFAULT_BAD_CELL_BETA,
};
pub use geometry::{validate, EShape, FCurve, Geometry, GeometryError, GeometrySpec, Membership};
pub use lattice::{
    Bond, BondKind, BoundaryCondition, CellClassification, CellLabel, CrackState, Lattice,
    LatticeError, LatticeSummary,
};
pub use solver::{
    bond_stretch, bulk_energy, solve_corrector, ConductanceField, CorrectorField, SolveOpts,
    SolveStats, SolverError,
};
