use nalgebra::{linalg::Cholesky, DMatrix, DVector, Dyn, SymmetricEigen};

use super::{Dir, PiecewiseLinear, TrussMesh};
use crate::error::{Error, Result};
use crate::phase_space::{GlobalMetric, GlobalState, LocalPhasePoint};

/// Pivots below this fraction of the largest diagonal entry flag a mechanism.
const PIVOT_TOL: f64 = 1e-11;

#[derive(Clone, Debug)]
struct StrainRow {
    /// (free dof, coefficient) pairs of `B_e`.
    free: Vec<(usize, f64)>,
    /// (prescribed slot, coefficient) pairs contributing the affine strain.
    prescribed: Vec<(usize, f64)>,
    /// (node, dir, coefficient) for every end-node DOF, used for reactions.
    all: [(usize, Dir, f64); 6],
}

/// Linearized compatibility and equilibrium constraints of a truss, with the
/// metric-weighted stiffness `K = sum_e w_e B_e^T C_e B_e` factored once.
#[derive(Clone, Debug)]
pub struct ConstraintSystem {
    node_count: usize,
    free_map: Vec<Option<usize>>,
    free_dofs: Vec<(usize, Dir)>,
    prescribed: Vec<(usize, Dir, PiecewiseLinear)>,
    rows: Vec<StrainRow>,
    weights: Vec<f64>,
    moduli: Vec<f64>,
    factor: Option<Cholesky<f64, Dyn>>,
}

/// Closest point on the constraint set together with the displacement and
/// multiplier solves that produced it.
#[derive(Clone, Debug)]
pub struct Projection {
    pub z: GlobalState,
    pub displacements: Vec<f64>,
    pub multipliers: Vec<f64>,
    /// `|sum_e w_e B_e^T sig_e - f|` over the free DOFs.
    pub residual: f64,
}

pub fn assemble(mesh: &TrussMesh, gm: &GlobalMetric) -> Result<ConstraintSystem> {
    mesh.validate()?;
    let m = mesh.bars.len();
    if gm.len() != m {
        return Err(Error::DimensionMismatch(format!(
            "metric has {} elements, mesh has {m} bars",
            gm.len()
        )));
    }
    let volumes = mesh.element_volumes();
    let mut moduli = Vec::with_capacity(m);
    for e in 0..m {
        let c = gm.local(e).as_scalar().ok_or_else(|| {
            Error::DimensionMismatch(format!(
                "bar {e} needs a scalar metric, got dimension {}",
                gm.local(e).dim()
            ))
        })?;
        moduli.push(c);
        let w = gm.weight(e);
        if (w - volumes[e]).abs() > 1e-12 * volumes[e] {
            return Err(Error::DimensionMismatch(format!(
                "bar {e}: metric weight {w} differs from bar volume {}",
                volumes[e]
            )));
        }
    }

    let node_count = mesh.nodes.len();
    let mut prescribed_slot = vec![None; node_count * 3];
    let mut prescribed = Vec::new();
    for p in &mesh.prescribed {
        prescribed_slot[p.node * 3 + p.dir.index()] = Some(prescribed.len());
        prescribed.push((p.node, p.dir, mesh.programs[&p.program].clone()));
    }

    let mut free_map = vec![None; node_count * 3];
    let mut free_dofs = Vec::new();
    for node in 0..node_count {
        for dir in Dir::ALL {
            let k = node * 3 + dir.index();
            if mesh.supports.contains(&(node, dir)) || prescribed_slot[k].is_some() {
                continue;
            }
            free_map[k] = Some(free_dofs.len());
            free_dofs.push((node, dir));
        }
    }

    let rows: Vec<StrainRow> = mesh
        .bars
        .iter()
        .map(|bar| {
            let len = mesh.bar_length(bar);
            let (pa, pb) = (mesh.nodes[bar.a], mesh.nodes[bar.b]);
            let mut all = [(0, Dir::X, 0.0); 6];
            let mut free = Vec::with_capacity(6);
            let mut presc = Vec::new();
            for dir in Dir::ALL {
                let d = dir.index();
                let g = (pb[d] - pa[d]) / (len * len);
                for (slot, node, coeff) in [(d, bar.a, -g), (3 + d, bar.b, g)] {
                    all[slot] = (node, dir, coeff);
                    if coeff == 0.0 {
                        continue;
                    }
                    let k = node * 3 + d;
                    if let Some(i) = free_map[k] {
                        free.push((i, coeff));
                    } else if let Some(s) = prescribed_slot[k] {
                        presc.push((s, coeff));
                    }
                }
            }
            StrainRow {
                free,
                prescribed: presc,
                all,
            }
        })
        .collect();

    let n = free_dofs.len();
    let factor = if n == 0 {
        None
    } else {
        let mut k = DMatrix::<f64>::zeros(n, n);
        for (e, row) in rows.iter().enumerate() {
            let s = volumes[e] * moduli[e];
            for &(i, bi) in &row.free {
                for &(j, bj) in &row.free {
                    k[(i, j)] += s * bi * bj;
                }
            }
        }
        Some(factorize(k, &free_dofs)?)
    };

    Ok(ConstraintSystem {
        node_count,
        free_map,
        free_dofs,
        prescribed,
        rows,
        weights: volumes,
        moduli,
        factor,
    })
}

fn factorize(k: DMatrix<f64>, free_dofs: &[(usize, Dir)]) -> Result<Cholesky<f64, Dyn>> {
    let diag_max = k.diagonal().amax();
    let chol = k.clone().cholesky();
    let healthy = chol.as_ref().is_some_and(|c| {
        let l = c.l_dirty();
        (0..l.nrows()).all(|i| l[(i, i)] * l[(i, i)] > PIVOT_TOL * diag_max)
    });
    if healthy {
        return Ok(chol.unwrap());
    }
    let eig = SymmetricEigen::new(k);
    let (imin, _) = eig
        .eigenvalues
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty stiffness");
    let mode = eig.eigenvectors.column(imin);
    let (dof, _) = mode
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.abs().total_cmp(&b.1.abs()))
        .expect("nonempty mode");
    let (node, dir) = free_dofs[dof];
    let involved = mode.iter().filter(|v| v.abs() > 1e-6).count();
    Err(Error::Mechanism(format!(
        "node {node} {dir} (zero-energy mode involving {involved} DOFs, eigenvalue {:.3e})",
        eig.eigenvalues[imin]
    )))
}

impl ConstraintSystem {
    pub fn elements(&self) -> usize {
        self.rows.len()
    }

    pub fn free_dofs(&self) -> usize {
        self.free_dofs.len()
    }

    pub fn free_index(&self, node: usize, dir: Dir) -> Option<usize> {
        self.free_map.get(node * 3 + dir.index()).copied().flatten()
    }

    pub fn free_dof(&self, i: usize) -> (usize, Dir) {
        self.free_dofs[i]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn moduli(&self) -> &[f64] {
        &self.moduli
    }

    /// Nonzero entries of `B_e` over free DOFs.
    pub fn strain_row(&self, e: usize) -> &[(usize, f64)] {
        &self.rows[e].free
    }

    /// Strain of each bar produced by the prescribed displacements at `t`.
    pub fn affine_strain(&self, t: f64) -> Vec<f64> {
        let values: Vec<f64> = self.prescribed.iter().map(|(_, _, p)| p.eval(t)).collect();
        self.rows
            .iter()
            .map(|row| row.prescribed.iter().map(|&(s, c)| c * values[s]).sum())
            .collect()
    }

    /// `B_e u` for every bar.
    pub fn strains_from(&self, u: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .map(|row| row.free.iter().map(|&(i, c)| c * u[i]).sum())
            .collect()
    }

    /// `sum_e w_e B_e^T s_e` over free DOFs.
    pub fn internal_forces(&self, stresses: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.free_dofs()];
        for (e, row) in self.rows.iter().enumerate() {
            let ws = self.weights[e] * stresses[e];
            for &(i, c) in &row.free {
                out[i] += ws * c;
            }
        }
        out
    }

    /// Solves `K x = rhs` with the cached factorization.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        match &self.factor {
            Some(chol) => chol
                .solve(&DVector::from_column_slice(rhs))
                .iter()
                .copied()
                .collect(),
            None => Vec::new(),
        }
    }

    /// Equilibrium residual `|sum_e w_e B_e^T sig_e - f|`.
    pub fn equilibrium_residual(&self, stresses: &[f64], f: &[f64]) -> f64 {
        self.internal_forces(stresses)
            .iter()
            .zip(f)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    /// Closest point in the constraint set at time `t` to the scalar state
    /// `y`: two solves with the same factorization, one for displacements and
    /// one for the equilibrium multipliers.
    pub fn project(&self, y: &GlobalState, f: &[f64], t: f64) -> Result<Projection> {
        let m = self.elements();
        if y.len() != m {
            return Err(Error::DimensionMismatch(format!(
                "state has {} elements, system has {m}",
                y.len()
            )));
        }
        if f.len() != self.free_dofs() {
            return Err(Error::DimensionMismatch(format!(
                "force vector has {} entries, system has {} free DOFs",
                f.len(),
                self.free_dofs()
            )));
        }
        if y.points.iter().any(|p| p.dim() != 1) {
            return Err(Error::DimensionMismatch(
                "truss bars carry scalar phase points".into(),
            ));
        }
        let target_strain = y.strains();
        let target_stress = y.stresses();
        if target_strain
            .iter()
            .chain(&target_stress)
            .chain(f)
            .any(|v| !v.is_finite())
            || !t.is_finite()
        {
            return Err(Error::NonFinite("projection input".into()));
        }
        let affine = self.affine_strain(t);

        let relative: Vec<f64> = (0..m)
            .map(|e| self.moduli[e] * (target_strain[e] - affine[e]))
            .collect();
        let rhs_u = self.internal_forces(&relative);
        let internal = self.internal_forces(&target_stress);
        let rhs_l: Vec<f64> = f.iter().zip(&internal).map(|(a, b)| a - b).collect();

        let u = self.solve(&rhs_u);
        let lambda = self.solve(&rhs_l);
        let bu = self.strains_from(&u);
        let bl = self.strains_from(&lambda);

        let points: Vec<LocalPhasePoint> = (0..m)
            .map(|e| {
                LocalPhasePoint::scalar(
                    bu[e] + affine[e],
                    target_stress[e] + self.moduli[e] * bl[e],
                )
            })
            .collect();
        let z = GlobalState::new(points);
        let residual = self.equilibrium_residual(&z.stresses(), f);
        Ok(Projection {
            z,
            displacements: u,
            multipliers: lambda,
            residual,
        })
    }

    /// Full nodal displacement field (node-major, xyz) at time `t`.
    pub fn nodal_displacements(&self, u: &[f64], t: f64) -> Vec<[f64; 3]> {
        let mut out = vec![[0.0; 3]; self.node_count];
        for (i, &(node, dir)) in self.free_dofs.iter().enumerate() {
            out[node][dir.index()] = u[i];
        }
        for (node, dir, p) in &self.prescribed {
            out[*node][dir.index()] = p.eval(t);
        }
        out
    }

    /// Sum of reactions along `dir` over all constrained DOFs.
    pub fn reaction_resultant(&self, stresses: &[f64], dir: Dir) -> f64 {
        let mut total = 0.0;
        for (e, row) in self.rows.iter().enumerate() {
            let ws = self.weights[e] * stresses[e];
            for &(node, d, c) in &row.all {
                if d == dir && self.free_map[node * 3 + d.index()].is_none() {
                    total += ws * c;
                }
            }
        }
        total
    }
}
