//! Discrete Mumford-Shah-type minimization on the bond lattice.
//!
//! Total energy of a crack set `K` (a subset of the breakable bonds) and a
//! displacement field `u`:
//!
//! ```text
//!   E(u, K) = sum_{b not in K} c_b w_b (xi . dx_b + u_j - u_i)^2
//!           + surface_weight * h * #K
//! ```
//!
//! Minimization alternates exact corrector solves with a batch re-decision of
//! every breakable bond (break exactly when the stored elastic energy of the
//! bond exceeds its surface cost). Both half-steps are exact minimizations of
//! the joint energy in one block, so the iteration descends monotonically and
//! terminates at a crack fixed point.

use crate::lattice::{CrackState, Lattice};
use crate::solver::{
    bond_stretch, bulk_energy, solve_corrector, ConductanceField, CorrectorField, SolveOpts,
    SolverError,
};
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use thiserror::Error;

/// Default seed for the randomized starts; fixed so runs are reproducible.
pub const START_SEED: u64 = 0x5EED;

#[derive(Debug, Error)]
pub enum MsError {
    #[error("crack contains bond {bond} which is not breakable")]
    CrackOutsideInclusions { bond: usize },
    #[error("exhaustive search over {count} breakable bonds exceeds cap {cap}")]
    TooManyBonds { count: usize, cap: usize },
    #[error(transparent)]
    Solver(#[from] SolverError),
}

/// One cell-scale free-discontinuity problem: lattice, applied slope, and
/// surface weight (cost per unit crack length).
#[derive(Clone, Copy, Debug)]
pub struct MsProblem<'a> {
    pub lat: &'a Lattice,
    pub xi: [f64; 2],
    pub surface_weight: f64,
}

/// Energy split of a candidate state.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct Breakdown {
    pub bulk: f64,
    pub surface: f64,
    pub total: f64,
    pub crack_measure: f64,
}

#[derive(Clone, Debug)]
pub struct MsSolution {
    pub field: CorrectorField,
    pub crack: CrackState,
    pub breakdown: Breakdown,
    /// Total energy after each outer iteration of the winning start.
    pub trace: Vec<f64>,
    /// Which initial crack produced the winner.
    pub start_label: &'static str,
}

#[derive(Clone, Debug)]
pub struct MinimizeOpts {
    /// Number of randomized starts appended to the deterministic roster.
    pub random_starts: usize,
    /// Seed for the randomized starts.
    pub seed: u64,
    pub max_outer: usize,
    /// Stop when the total energy improves by less than this (absolute).
    pub tol: f64,
    pub solve: SolveOpts,
}

impl Default for MinimizeOpts {
    fn default() -> Self {
        MinimizeOpts {
            random_starts: 4,
            seed: START_SEED,
            max_outer: 40,
            tol: 1e-10,
            solve: SolveOpts::default(),
        }
    }
}

impl<'a> MsProblem<'a> {
    pub fn new(lat: &'a Lattice, xi: [f64; 2], surface_weight: f64) -> Self {
        MsProblem {
            lat,
            xi,
            surface_weight,
        }
    }

    fn check_crack(&self, crack: &CrackState) -> Result<(), MsError> {
        for &b in crack.bonds() {
            if !self.lat.breakable.binary_search(&b).is_ok() {
                return Err(MsError::CrackOutsideInclusions { bond: b });
            }
        }
        Ok(())
    }

    /// Energy of an explicit (field, crack) pair.
    pub fn energy(&self, field: &CorrectorField, crack: &CrackState) -> Result<Breakdown, MsError> {
        self.check_crack(crack)?;
        let cond = ConductanceField::new(self.lat, crack);
        let bulk = bulk_energy(self.lat, &cond, field);
        let crack_measure = crack.measure(self.lat);
        let surface = self.surface_weight * crack_measure;
        Ok(Breakdown {
            bulk,
            surface,
            total: bulk + surface,
            crack_measure,
        })
    }

    /// Optimal field for a fixed crack, with energy.
    pub fn solve_for_crack(
        &self,
        crack: &CrackState,
        solve: &SolveOpts,
    ) -> Result<(CorrectorField, Breakdown), MsError> {
        self.check_crack(crack)?;
        let cond = ConductanceField::new(self.lat, crack);
        let (field, _) = solve_corrector(self.lat, &cond, self.xi, solve)?;
        let bulk = bulk_energy(self.lat, &cond, &field);
        let crack_measure = crack.measure(self.lat);
        let surface = self.surface_weight * crack_measure;
        Ok((
            field,
            Breakdown {
                bulk,
                surface,
                total: bulk + surface,
                crack_measure,
            },
        ))
    }

    /// Batch re-decision: given a field, break exactly the breakable bonds
    /// whose elastic contribution strictly exceeds their surface cost.
    fn redecide(&self, field: &CorrectorField) -> CrackState {
        let cost = self.surface_weight * self.lat.h;
        let mut broken = Vec::new();
        for &k in &self.lat.breakable {
            let bond = &self.lat.bonds[k];
            let s = bond_stretch(bond, field, self.lat.h);
            if bond.weight * s * s > cost {
                broken.push(k);
            }
        }
        CrackState::from_bonds(broken)
    }

    /// Alternating minimization from one initial crack.
    pub fn minimize_from(
        &self,
        start: CrackState,
        label: &'static str,
        opts: &MinimizeOpts,
    ) -> Result<MsSolution, MsError> {
        let mut crack = start;
        let (mut field, mut best) = self.solve_for_crack(&crack, &opts.solve)?;
        let mut trace = vec![best.total];
        for _ in 0..opts.max_outer {
            let next = self.redecide(&field);
            if next == crack {
                break;
            }
            let (f, bd) = self.solve_for_crack(&next, &opts.solve)?;
            trace.push(bd.total);
            let gain = best.total - bd.total;
            crack = next;
            field = f;
            best = bd;
            if gain < opts.tol {
                break;
            }
        }
        Ok(MsSolution {
            field,
            crack,
            breakdown: best,
            trace,
            start_label: label,
        })
    }

    /// Deterministic start roster: intact, fully broken, interface ring, then
    /// randomized subsets of the breakable bonds.
    pub fn start_roster(&self, random_starts: usize, seed: u64) -> Vec<(CrackState, &'static str)> {
        let mut roster = vec![
            (CrackState::empty(), "intact"),
            (
                CrackState::from_bonds(self.lat.breakable.clone()),
                "all-broken",
            ),
        ];
        if !self.lat.interface.is_empty() {
            roster.push((
                CrackState::from_bonds(self.lat.interface.clone()),
                "interface",
            ));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..random_starts {
            let picked: Vec<usize> = self
                .lat
                .breakable
                .iter()
                .copied()
                .filter(|_| rng.random_bool(0.5))
                .collect();
            roster.push((CrackState::from_bonds(picked), "random"));
        }
        roster
    }

    /// Multi-start alternating minimization. Starts run in parallel; the
    /// winner is the lowest total, ties resolved toward the lexicographically
    /// smallest crack so the result is independent of scheduling.
    pub fn minimize(&self, opts: &MinimizeOpts) -> Result<MsSolution, MsError> {
        let roster = self.start_roster(opts.random_starts, opts.seed);
        let results: Vec<Result<MsSolution, MsError>> = roster
            .into_par_iter()
            .map(|(start, label)| self.minimize_from(start, label, opts))
            .collect();
        let mut best: Option<MsSolution> = None;
        for r in results {
            let sol = r?;
            best = Some(match best {
                None => sol,
                Some(cur) => {
                    if (sol.breakdown.total, &sol.crack) < (cur.breakdown.total, &cur.crack) {
                        sol
                    } else {
                        cur
                    }
                }
            });
        }
        Ok(best.expect("roster is never empty"))
    }

    /// Exhaustive minimization over every crack subset. Exact up to the
    /// linear-solver tolerance; refuses more than `cap` breakable bonds.
    pub fn brute_force_min(&self, cap: usize, solve: &SolveOpts) -> Result<MsSolution, MsError> {
        self.brute_force_budget(f64::INFINITY, cap, solve)
    }

    /// Exhaustive minimization restricted to cracks of measure at most
    /// `budget`. The empty crack is always admissible, so the search never
    /// comes back empty.
    pub fn brute_force_budget(
        &self,
        budget: f64,
        cap: usize,
        solve: &SolveOpts,
    ) -> Result<MsSolution, MsError> {
        let k = self.lat.breakable.len();
        if k > cap {
            return Err(MsError::TooManyBonds { count: k, cap });
        }
        let n_subsets = 1usize << k;
        let results: Vec<Result<Option<(CrackState, CorrectorField, Breakdown)>, MsError>> = (0
            ..n_subsets)
            .into_par_iter()
            .map(|mask| {
                let bonds: Vec<usize> = (0..k)
                    .filter(|&b| mask >> b & 1 == 1)
                    .map(|b| self.lat.breakable[b])
                    .collect();
                let crack = CrackState::from_bonds(bonds);
                if crack.measure(self.lat) > budget {
                    return Ok(None);
                }
                let (field, bd) = self.solve_for_crack(&crack, solve)?;
                Ok(Some((crack, field, bd)))
            })
            .collect();
        let mut best: Option<(CrackState, CorrectorField, Breakdown)> = None;
        for r in results {
            let Some((crack, field, bd)) = r? else {
                continue;
            };
            best = Some(match best {
                None => (crack, field, bd),
                Some(cur) => {
                    // prefer strictly lower energy; within tolerance prefer
                    // the lexicographically smallest crack
                    if bd.total < cur.2.total - 1e-12
                        || (bd.total < cur.2.total + 1e-12 && crack < cur.0)
                    {
                        (crack, field, bd)
                    } else {
                        cur
                    }
                }
            });
        }
        let (crack, field, breakdown) = best.expect("at least the empty subset");
        Ok(MsSolution {
            field,
            crack,
            breakdown,
            trace: vec![breakdown.total],
            start_label: "brute-force",
        })
    }
}

/// Clamp the total field (affine plus corrector) into `[lo, hi]` at every
/// node. On a Dirichlet lattice every bond stretch is a plain difference of
/// totals, and clamping is 1-Lipschitz, so the bulk energy never increases.
/// (Periodic wrap bonds carry an affine offset across the period, so the
/// guarantee is specific to Dirichlet cells.)
pub fn truncate(lat: &Lattice, field: &CorrectorField, lo: f64, hi: f64) -> CorrectorField {
    assert!(lo <= hi);
    let mut out = field.clone();
    for node in 0..lat.n_nodes() {
        let p = lat.node_pos(node);
        let affine = field.xi[0] * p[0] + field.xi[1] * p[1];
        let total = affine + field.w[node];
        out.w[node] = total.clamp(lo, hi) - affine;
    }
    out
}
