//! Finite-difference grids over `(0, t)^2` with bonds classified against the
//! tiled microstructure.
//!
//! Node spacing is `h = 1/m`. Under periodic boundary conditions the grid has
//! `(t m)^2` free nodes with opposite faces identified. Under zero-Dirichlet
//! conditions the grid has `(t m + 1)^2` nodes and the boundary ones carry
//! corrector value 0; bonds lying inside the boundary faces get quadrature
//! weight 1/2 so that the intact affine state has bulk energy exactly
//! `|xi|^2 t^2`.

use crate::geometry::Geometry;
use serde::Serialize;
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BoundaryCondition {
    Periodic,
    DirichletZero,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum BondKind {
    /// Conductance 1, never breaks.
    Elastic,
    /// Conductance 1 while intact; may be broken at surface cost `h` per bond.
    Breakable,
    /// Conductance 0, excluded from the bulk energy.
    Void,
}

/// An axis bond between neighboring nodes at distance `h`.
#[derive(Clone, Copy, Debug)]
pub struct Bond {
    pub i: usize,
    pub j: usize,
    /// 0 for +x, 1 for +y.
    pub axis: u8,
    pub kind: BondKind,
    /// Quadrature weight: 1, or 1/2 for Dirichlet boundary-tangential bonds.
    pub weight: f64,
    /// Midpoint in lattice coordinates, used for subcell assignment.
    pub midpoint: [f64; 2],
}

#[derive(Debug, Error)]
pub enum LatticeError {
    #[error("resolution too coarse: m * delta = {0} < 2")]
    ResolutionTooCoarse(f64),
    #[error("bad lattice parameter: {0}")]
    BadParameter(String),
}

/// A set of broken bonds together with its length proxy.
#[derive(Clone, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct CrackState {
    /// Sorted bond indices.
    broken: Vec<usize>,
}

impl CrackState {
    pub fn empty() -> Self {
        CrackState::default()
    }

    pub fn from_bonds(mut bonds: Vec<usize>) -> Self {
        bonds.sort_unstable();
        bonds.dedup();
        CrackState { broken: bonds }
    }

    pub fn bonds(&self) -> &[usize] {
        &self.broken
    }

    pub fn len(&self) -> usize {
        self.broken.len()
    }

    pub fn is_empty(&self) -> bool {
        self.broken.is_empty()
    }

    pub fn contains(&self, bond: usize) -> bool {
        self.broken.binary_search(&bond).is_ok()
    }

    /// `H^1` proxy: number of broken bonds times `h`.
    pub fn measure(&self, lat: &Lattice) -> f64 {
        self.broken.len() as f64 * lat.h
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum CellLabel {
    Good,
    Bad,
}

#[derive(Clone, Debug, Serialize)]
pub struct CellClassification {
    /// Row-major `t x t` labels.
    pub labels: Vec<CellLabel>,
    pub n_good: usize,
    pub n_bad: usize,
}

/// Summary counts for export.
#[derive(Clone, Debug, Serialize)]
pub struct LatticeSummary {
    pub t: usize,
    pub m: usize,
    pub h: f64,
    pub bc: BoundaryCondition,
    pub nodes: usize,
    pub free_nodes: usize,
    pub bonds: usize,
    pub elastic_bonds: usize,
    pub breakable_bonds: usize,
    pub void_bonds: usize,
}

#[derive(Clone, Debug)]
pub struct Lattice {
    pub t: usize,
    pub m: usize,
    pub bc: BoundaryCondition,
    pub h: f64,
    /// Nodes per axis: `t m` (periodic) or `t m + 1` (Dirichlet).
    pub nodes_per_axis: usize,
    pub bonds: Vec<Bond>,
    /// Per node: participates as an unknown.
    pub free: Vec<bool>,
    pub n_free: usize,
    /// Ascending indices of breakable bonds.
    pub breakable: Vec<usize>,
    /// Breakable bonds that straddle the inclusion boundary or cross a slit;
    /// cheap seed for interface-shaped cracks.
    pub interface: Vec<usize>,
}

impl Lattice {
    /// Builds the grid and classifies every bond against `geom`.
    ///
    /// A bond is breakable when its midpoint lies in the tiled `E` or its
    /// segment crosses the tiled `F`.
    pub fn build(
        geom: &Geometry,
        t: usize,
        m: usize,
        bc: BoundaryCondition,
    ) -> Result<Lattice, LatticeError> {
        if t < 1 {
            return Err(LatticeError::BadParameter("t must be >= 1".into()));
        }
        if m < 4 {
            return Err(LatticeError::BadParameter("m must be >= 4".into()));
        }
        let md = m as f64 * geom.delta();
        if md < 2.0 {
            return Err(LatticeError::ResolutionTooCoarse(md));
        }
        let classify = |a: [f64; 2], b: [f64; 2], mid: [f64; 2]| -> BondKind {
            if geom.point_in_tiled_e(mid) || geom.segment_crosses_tiled_f(a, b) {
                BondKind::Breakable
            } else {
                BondKind::Elastic
            }
        };
        let is_interface = |a: [f64; 2], b: [f64; 2]| -> bool {
            geom.segment_crosses_tiled_f(a, b)
                || !(geom.point_in_tiled_e(a) && geom.point_in_tiled_e(b))
        };
        let h = 1.0 / m as f64;
        let n = t * m;
        let mut bonds = Vec::new();
        let (nodes_per_axis, free) = match bc {
            BoundaryCondition::Periodic => {
                let idx = |i: usize, j: usize| (j % n) * n + (i % n);
                for j in 0..n {
                    for i in 0..n {
                        let a = [i as f64 * h, j as f64 * h];
                        for axis in 0..2u8 {
                            let b = if axis == 0 {
                                [a[0] + h, a[1]]
                            } else {
                                [a[0], a[1] + h]
                            };
                            let mid = [(a[0] + b[0]) * 0.5, (a[1] + b[1]) * 0.5];
                            bonds.push(Bond {
                                i: idx(i, j),
                                j: if axis == 0 { idx(i + 1, j) } else { idx(i, j + 1) },
                                axis,
                                kind: classify(a, b, mid),
                                weight: 1.0,
                                midpoint: mid,
                            });
                        }
                    }
                }
                (n, vec![true; n * n])
            }
            BoundaryCondition::DirichletZero => {
                let np = n + 1;
                let idx = |i: usize, j: usize| j * np + i;
                let boundary = |i: usize, j: usize| i == 0 || i == n || j == 0 || j == n;
                for j in 0..np {
                    for i in 0..np {
                        let a = [i as f64 * h, j as f64 * h];
                        if i < n {
                            let b = [a[0] + h, a[1]];
                            let mid = [(a[0] + b[0]) * 0.5, a[1]];
                            bonds.push(Bond {
                                i: idx(i, j),
                                j: idx(i + 1, j),
                                axis: 0,
                                kind: classify(a, b, mid),
                                weight: if j == 0 || j == n { 0.5 } else { 1.0 },
                                midpoint: mid,
                            });
                        }
                        if j < n {
                            let b = [a[0], a[1] + h];
                            let mid = [a[0], (a[1] + b[1]) * 0.5];
                            bonds.push(Bond {
                                i: idx(i, j),
                                j: idx(i, j + 1),
                                axis: 1,
                                kind: classify(a, b, mid),
                                weight: if i == 0 || i == n { 0.5 } else { 1.0 },
                                midpoint: mid,
                            });
                        }
                    }
                }
                let mut free = vec![false; np * np];
                for j in 0..np {
                    for i in 0..np {
                        free[idx(i, j)] = !boundary(i, j);
                    }
                }
                (np, free)
            }
        };
        let n_free = free.iter().filter(|f| **f).count();
        let breakable: Vec<usize> = bonds
            .iter()
            .enumerate()
            .filter(|(_, b)| b.kind == BondKind::Breakable)
            .map(|(k, _)| k)
            .collect();
        let np = nodes_per_axis;
        let pos = |idx: usize| -> [f64; 2] { [(idx % np) as f64 * h, (idx / np) as f64 * h] };
        let interface: Vec<usize> = breakable
            .iter()
            .copied()
            .filter(|&k| {
                let b = &bonds[k];
                // for periodic wrap bonds, reconstruct the geometric endpoints
                // from the midpoint rather than the identified node indices
                let half = h * 0.5;
                let (a, c) = if b.axis == 0 {
                    (
                        [b.midpoint[0] - half, b.midpoint[1]],
                        [b.midpoint[0] + half, b.midpoint[1]],
                    )
                } else {
                    (
                        [b.midpoint[0], b.midpoint[1] - half],
                        [b.midpoint[0], b.midpoint[1] + half],
                    )
                };
                let _ = pos;
                is_interface(a, c)
            })
            .collect();
        Ok(Lattice {
            t,
            m,
            bc,
            h,
            nodes_per_axis,
            bonds,
            free,
            n_free,
            breakable,
            interface,
        })
    }

    pub fn node_pos(&self, idx: usize) -> [f64; 2] {
        let np = self.nodes_per_axis;
        [(idx % np) as f64 * self.h, (idx / np) as f64 * self.h]
    }

    pub fn n_nodes(&self) -> usize {
        self.nodes_per_axis * self.nodes_per_axis
    }

    pub fn summary(&self) -> LatticeSummary {
        let count = |k: BondKind| self.bonds.iter().filter(|b| b.kind == k).count();
        LatticeSummary {
            t: self.t,
            m: self.m,
            h: self.h,
            bc: self.bc,
            nodes: self.n_nodes(),
            free_nodes: self.n_free,
            bonds: self.bonds.len(),
            elastic_bonds: count(BondKind::Elastic),
            breakable_bonds: count(BondKind::Breakable),
            void_bonds: count(BondKind::Void),
        }
    }

    /// Good/bad labels per unit subcell: a cell is bad when the crack measure
    /// of the broken bonds assigned to it (by midpoint) exceeds
    /// `beta * (1/t)`.
    pub fn classify_cells(&self, crack: &CrackState, beta: f64) -> CellClassification {
        let t = self.t;
        let threshold = beta / t as f64;
        let mut measure = vec![0.0f64; t * t];
        for &b in crack.bonds() {
            let mid = self.bonds[b].midpoint;
            let cx = (mid[0].floor() as usize).min(t - 1);
            let cy = (mid[1].floor() as usize).min(t - 1);
            measure[cy * t + cx] += self.h;
        }
        let labels: Vec<CellLabel> = measure
            .iter()
            .map(|&m| if m > threshold { CellLabel::Bad } else { CellLabel::Good })
            .collect();
        let n_bad = labels.iter().filter(|l| **l == CellLabel::Bad).count();
        CellClassification {
            n_good: t * t - n_bad,
            n_bad,
            labels,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{validate, EShape, FCurve, GeometrySpec};

    fn empty_geom() -> Geometry {
        validate(GeometrySpec::new(0.25, vec![], vec![])).unwrap()
    }

    fn disk25() -> Geometry {
        validate(GeometrySpec::new(
            0.2,
            vec![EShape::Disk {
                center: [0.5, 0.5],
                radius: 0.25,
            }],
            vec![],
        ))
        .unwrap()
    }

    fn slit_geom() -> Geometry {
        validate(GeometrySpec::new(
            0.2,
            vec![],
            vec![FCurve {
                points: vec![[0.3, 0.5], [0.7, 0.5]],
            }],
        ))
        .unwrap()
    }

    #[test]
    fn empty_periodic_counts() {
        let lat = Lattice::build(&empty_geom(), 1, 8, BoundaryCondition::Periodic).unwrap();
        assert_eq!(lat.n_free, 64);
        assert_eq!(lat.bonds.len(), 128);
        assert!(lat.bonds.iter().all(|b| b.kind == BondKind::Elastic));
    }

    #[test]
    fn too_coarse_rejected() {
        let g = validate(GeometrySpec::new(0.1, vec![], vec![])).unwrap();
        assert!(matches!(
            Lattice::build(&g, 1, 8, BoundaryCondition::Periodic),
            Err(LatticeError::ResolutionTooCoarse(_))
        ));
    }

    #[test]
    fn disk_bonds_breakable_by_midpoint() {
        let lat = Lattice::build(&disk25(), 1, 32, BoundaryCondition::Periodic).unwrap();
        assert!(!lat.breakable.is_empty());
        // the bond leaving the disk center is breakable
        let center_bond = lat
            .bonds
            .iter()
            .position(|b| {
                (b.midpoint[0] - (0.5 + 1.0 / 64.0)).abs() < 1e-12
                    && (b.midpoint[1] - 0.5).abs() < 1e-12
            })
            .unwrap();
        assert_eq!(lat.bonds[center_bond].kind, BondKind::Breakable);
        // a bond near the cell corner is elastic
        let corner_bond = lat
            .bonds
            .iter()
            .position(|b| b.midpoint[0] < 0.05 && b.midpoint[1] < 0.05)
            .unwrap();
        assert_eq!(lat.bonds[corner_bond].kind, BondKind::Elastic);
    }

    #[test]
    fn slit_breakable_set_matches_direct_enumeration() {
        // independent oracle: a vertical bond crosses the slit copy at height
        // y* iff its x lies strictly inside (0.3, 0.7) mod 1 and
        // y_lo < y* <= y_hi (the fixed perturbation breaks the bond below).
        let lat = Lattice::build(&slit_geom(), 2, 16, BoundaryCondition::DirichletZero).unwrap();
        let h = lat.h;
        let expected: Vec<usize> = lat
            .bonds
            .iter()
            .enumerate()
            .filter(|(_, b)| {
                if b.axis != 1 {
                    return false;
                }
                let x = b.midpoint[0];
                let xr = x - x.floor();
                if !(xr > 0.3 && xr < 0.7) {
                    return false;
                }
                let y_lo = b.midpoint[1] - 0.5 * h;
                let y_hi = b.midpoint[1] + 0.5 * h;
                [0.5f64, 1.5].iter().any(|&ys| y_lo < ys && ys <= y_hi)
            })
            .map(|(k, _)| k)
            .collect();
        assert!(!expected.is_empty());
        assert_eq!(lat.breakable, expected);
    }

    #[test]
    fn periodic_nodes_have_four_incident_bonds() {
        let lat = Lattice::build(&empty_geom(), 1, 8, BoundaryCondition::Periodic).unwrap();
        let mut degree = vec![0usize; lat.n_nodes()];
        for b in &lat.bonds {
            degree[b.i] += 1;
            degree[b.j] += 1;
        }
        assert!(degree.iter().all(|&d| d == 4));
    }

    #[test]
    fn cell_classification_threshold() {
        let lat = Lattice::build(&disk25(), 2, 16, BoundaryCondition::Periodic).unwrap();
        let empty = lat.classify_cells(&CrackState::empty(), 0.5);
        assert_eq!(empty.n_bad, 0);

        // break bonds of measure 2 * beta / t inside subcell (0, 0)
        let beta = 0.1;
        let want = (2.0 * beta / lat.t as f64 / lat.h).ceil() as usize;
        let in_cell: Vec<usize> = lat
            .breakable
            .iter()
            .copied()
            .filter(|&k| lat.bonds[k].midpoint[0] < 1.0 && lat.bonds[k].midpoint[1] < 1.0)
            .take(want)
            .collect();
        assert_eq!(in_cell.len(), want);
        let crack = CrackState::from_bonds(in_cell);
        let cls = lat.classify_cells(&crack, beta);
        assert_eq!(cls.n_bad, 1);
        assert_eq!(cls.labels[0], CellLabel::Bad);

        // pigeonhole: N_bad * beta / t <= total measure
        assert!(
            cls.n_bad as f64 * beta / lat.t as f64 <= crack.measure(&lat) + 1e-12
        );
    }

    #[test]
    fn dirichlet_free_nodes_are_interior() {
        let lat = Lattice::build(&empty_geom(), 1, 8, BoundaryCondition::DirichletZero).unwrap();
        assert_eq!(lat.nodes_per_axis, 9);
        assert_eq!(lat.n_free, 49);
        // boundary-tangential bonds carry half weight
        let half: Vec<&Bond> = lat.bonds.iter().filter(|b| b.weight == 0.5).collect();
        assert_eq!(half.len(), 4 * 8);
    }
}
