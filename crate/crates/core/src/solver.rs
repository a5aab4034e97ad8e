//! Quadratic bulk-energy minimization for a fixed crack configuration.
//!
//! The energy is `sum_b c_b w_b (xi . dx_b + u_j - u_i)^2` over bonds, with
//! conductance `c_b` in {0, 1} and quadrature weight `w_b`. Minimization over
//! the free nodes is a symmetric positive semi-definite graph-Laplacian
//! system, solved by diagonally preconditioned conjugate gradients. All
//! reductions run in bond order so results are bitwise reproducible.

use crate::lattice::{Bond, BondKind, CrackState, Lattice};
use thiserror::Error;

/// Per-bond conductance in {0, 1}.
#[derive(Clone, Debug)]
pub struct ConductanceField {
    values: Vec<f64>,
}

impl ConductanceField {
    /// Conductance 1 on elastic and intact breakable bonds, 0 on void and
    /// broken bonds.
    pub fn new(lat: &Lattice, crack: &CrackState) -> Self {
        let mut values: Vec<f64> = lat
            .bonds
            .iter()
            .map(|b| if b.kind == BondKind::Void { 0.0 } else { 1.0 })
            .collect();
        for &k in crack.bonds() {
            values[k] = 0.0;
        }
        ConductanceField { values }
    }

    /// Conductance 0 on every breakable bond: the free-crack configuration of
    /// the subcritical cell problem (inclusions voided, slits cut).
    pub fn voided(lat: &Lattice) -> Self {
        let values = lat
            .bonds
            .iter()
            .map(|b| if b.kind == BondKind::Elastic { 1.0 } else { 0.0 })
            .collect();
        ConductanceField { values }
    }

    pub fn get(&self, bond: usize) -> f64 {
        self.values[bond]
    }

    pub fn set(&mut self, bond: usize, value: f64) {
        self.values[bond] = value;
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Affine slope plus per-node corrector.
#[derive(Clone, Debug)]
pub struct CorrectorField {
    pub xi: [f64; 2],
    /// One value per grid node; fixed nodes hold 0.
    pub w: Vec<f64>,
}

impl CorrectorField {
    pub fn zero(lat: &Lattice, xi: [f64; 2]) -> Self {
        CorrectorField {
            xi,
            w: vec![0.0; lat.n_nodes()],
        }
    }

    /// Total field at a node: affine background plus corrector.
    pub fn total(&self, lat: &Lattice, node: usize) -> f64 {
        let p = lat.node_pos(node);
        self.xi[0] * p[0] + self.xi[1] * p[1] + self.w[node]
    }
}

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("conjugate gradient did not converge within {iterations} iterations (residual {residual:e})")]
    NoConvergence { iterations: usize, residual: f64 },
}

#[derive(Clone, Debug)]
pub struct SolveOpts {
    /// Relative residual target for the normal equations.
    pub tol: f64,
    /// Iteration cap; `None` uses `20 sqrt(n) + 1000`.
    pub max_iter: Option<usize>,
    /// Keep the residual-norm history for diagnostics.
    pub record_residuals: bool,
}

impl Default for SolveOpts {
    fn default() -> Self {
        SolveOpts {
            tol: 1e-10,
            max_iter: None,
            record_residuals: false,
        }
    }
}

#[derive(Clone, Debug, Default)]
pub struct SolveStats {
    pub iterations: usize,
    pub relative_residual: f64,
    pub residual_history: Vec<f64>,
}

/// Bond stretch `xi . dx + w_j - w_i` (the discrete directional derivative
/// times `h`).
#[inline]
pub fn bond_stretch(bond: &Bond, field: &CorrectorField, h: f64) -> f64 {
    let g = field.xi[bond.axis as usize] * h;
    g + field.w[bond.j] - field.w[bond.i]
}

/// Discrete Dirichlet energy of the affine-plus-corrector field.
///
/// Deterministic summation in bond index order.
pub fn bulk_energy(lat: &Lattice, cond: &ConductanceField, field: &CorrectorField) -> f64 {
    let mut total = 0.0;
    for (k, bond) in lat.bonds.iter().enumerate() {
        let c = cond.get(k);
        if c == 0.0 {
            continue;
        }
        let s = bond_stretch(bond, field, lat.h);
        total += c * bond.weight * s * s;
    }
    total
}

/// Minimizes the bulk energy over corrector fields with the lattice's
/// boundary conditions, for fixed conductances.
///
/// Nodes whose incident conductances all vanish are pinned at 0 and removed
/// from the unknowns. Connected components of the conductance graph that
/// touch no Dirichlet-fixed node are gauged to zero mean, which for periodic
/// lattices reduces to the usual mean-zero quotient.
pub fn solve_corrector(
    lat: &Lattice,
    cond: &ConductanceField,
    xi: [f64; 2],
    opts: &SolveOpts,
) -> Result<(CorrectorField, SolveStats), SolverError> {
    let n = lat.n_nodes();
    let mut diag = vec![0.0f64; n];
    let mut rhs = vec![0.0f64; n];
    for (k, bond) in lat.bonds.iter().enumerate() {
        let c = cond.get(k) * bond.weight;
        if c == 0.0 {
            continue;
        }
        let g = xi[bond.axis as usize] * lat.h;
        diag[bond.i] += c;
        diag[bond.j] += c;
        rhs[bond.i] += c * g;
        rhs[bond.j] -= c * g;
    }
    let active: Vec<bool> = (0..n).map(|i| lat.free[i] && diag[i] > 0.0).collect();
    let n_active = active.iter().filter(|a| **a).count();

    let mut x = vec![0.0f64; n];
    let mut stats = SolveStats::default();
    if n_active > 0 {
        let matvec = |input: &[f64], output: &mut [f64]| {
            output.fill(0.0);
            for (k, bond) in lat.bonds.iter().enumerate() {
                let c = cond.get(k) * bond.weight;
                if c == 0.0 {
                    continue;
                }
                let xi_v = if active[bond.i] { input[bond.i] } else { 0.0 };
                let xj_v = if active[bond.j] { input[bond.j] } else { 0.0 };
                if active[bond.i] {
                    output[bond.i] += c * (xi_v - xj_v);
                }
                if active[bond.j] {
                    output[bond.j] += c * (xj_v - xi_v);
                }
            }
        };
        let dot_active = |a: &[f64], b: &[f64]| -> f64 {
            let mut s = 0.0;
            for i in 0..n {
                if active[i] {
                    s += a[i] * b[i];
                }
            }
            s
        };

        let b_norm = dot_active(&rhs, &rhs).sqrt();
        if b_norm > 0.0 {
            let max_iter = opts
                .max_iter
                .unwrap_or_else(|| 20 * (n_active as f64).sqrt() as usize + 1000);
            let mut r = rhs.clone();
            for i in 0..n {
                if !active[i] {
                    r[i] = 0.0;
                }
            }
            let mut z = vec![0.0f64; n];
            let precon = |r: &[f64], z: &mut [f64]| {
                for i in 0..n {
                    z[i] = if active[i] { r[i] / diag[i] } else { 0.0 };
                }
            };
            precon(&r, &mut z);
            let mut p = z.clone();
            let mut ap = vec![0.0f64; n];
            let mut rz = dot_active(&r, &z);
            let mut converged = false;
            for it in 0..max_iter {
                matvec(&p, &mut ap);
                let pap = dot_active(&p, &ap);
                if pap <= 0.0 {
                    // p in the numerical null space; the remaining residual is
                    // below what the gauge can resolve
                    converged = dot_active(&r, &r).sqrt() <= opts.tol * b_norm * 10.0;
                    stats.iterations = it;
                    break;
                }
                let alpha = rz / pap;
                for i in 0..n {
                    if active[i] {
                        x[i] += alpha * p[i];
                        r[i] -= alpha * ap[i];
                    }
                }
                let r_norm = dot_active(&r, &r).sqrt();
                if opts.record_residuals {
                    stats.residual_history.push(r_norm / b_norm);
                }
                stats.iterations = it + 1;
                stats.relative_residual = r_norm / b_norm;
                if r_norm <= opts.tol * b_norm {
                    converged = true;
                    break;
                }
                precon(&r, &mut z);
                let rz_new = dot_active(&r, &z);
                let beta = rz_new / rz;
                rz = rz_new;
                for i in 0..n {
                    if active[i] {
                        p[i] = z[i] + beta * p[i];
                    }
                }
            }
            if !converged {
                return Err(SolverError::NoConvergence {
                    iterations: stats.iterations,
                    residual: stats.relative_residual,
                });
            }
        }
    }

    apply_gauge(lat, cond, &active, &mut x);
    Ok((CorrectorField { xi, w: x }, stats))
}

/// Subtract the mean on every conducting component that touches no fixed
/// node.
fn apply_gauge(lat: &Lattice, cond: &ConductanceField, active: &[bool], x: &mut [f64]) {
    let n = lat.n_nodes();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut i: usize) -> usize {
        while parent[i] != i {
            parent[i] = parent[parent[i]];
            i = parent[i];
        }
        i
    }
    for (k, bond) in lat.bonds.iter().enumerate() {
        if cond.get(k) * bond.weight == 0.0 {
            continue;
        }
        let (a, b) = (find(&mut parent, bond.i), find(&mut parent, bond.j));
        if a != b {
            parent[a] = b;
        }
    }
    // a component is anchored when it contains a non-free (Dirichlet) node
    let mut anchored = vec![false; n];
    for i in 0..n {
        if !lat.free[i] {
            let r = find(&mut parent, i);
            anchored[r] = true;
        }
    }
    let mut sum = vec![0.0f64; n];
    let mut count = vec![0usize; n];
    for i in 0..n {
        if active[i] {
            let r = find(&mut parent, i);
            sum[r] += x[i];
            count[r] += 1;
        }
    }
    for i in 0..n {
        if active[i] {
            let r = find(&mut parent, i);
            if !anchored[r] && count[r] > 0 {
                x[i] -= sum[r] / count[r] as f64;
            }
        }
    }
}
