//! Pin-jointed truss structures: geometry, boundary conditions, load
//! programs, and the closest-point projection onto the set of compatible
//! and equilibrated states.

mod lattice;
mod mesh_file;
mod system;

pub use lattice::{generate_lattice_truss, LatticeSpec};
pub use mesh_file::{parse_mesh, read_mesh, write_mesh};
pub use system::{assemble, ConstraintSystem, Projection};

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Translational direction at a node.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Dir {
    X,
    Y,
    Z,
}

impl Dir {
    pub const ALL: [Dir; 3] = [Dir::X, Dir::Y, Dir::Z];

    pub fn index(self) -> usize {
        match self {
            Dir::X => 0,
            Dir::Y => 1,
            Dir::Z => 2,
        }
    }
}

impl fmt::Display for Dir {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Dir::X => "x",
            Dir::Y => "y",
            Dir::Z => "z",
        })
    }
}

impl FromStr for Dir {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "x" | "0" => Ok(Dir::X),
            "y" | "1" => Ok(Dir::Y),
            "z" | "2" => Ok(Dir::Z),
            other => Err(Error::InvalidInput(format!("unknown direction '{other}'"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Bar {
    pub a: usize,
    pub b: usize,
    pub area: f64,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodalLoad {
    pub node: usize,
    pub dir: Dir,
    pub value: f64,
}

/// Displacement of `(node, dir)` follows the program with the given id.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PrescribedDisplacement {
    pub node: usize,
    pub dir: Dir,
    pub program: usize,
}

/// Piecewise-linear function of time with constant extrapolation on both
/// sides.
#[derive(Clone, Debug, PartialEq)]
pub struct PiecewiseLinear {
    breakpoints: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    pub fn new(breakpoints: Vec<(f64, f64)>) -> Result<Self> {
        if breakpoints.is_empty() {
            return Err(Error::InvalidInput(
                "program needs at least one breakpoint".into(),
            ));
        }
        if breakpoints
            .iter()
            .any(|(t, v)| !t.is_finite() || !v.is_finite())
        {
            return Err(Error::NonFinite("program breakpoints".into()));
        }
        if breakpoints.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(Error::InvalidInput(
                "program times must be strictly increasing".into(),
            ));
        }
        Ok(Self { breakpoints })
    }

    pub fn constant(value: f64) -> Self {
        Self {
            breakpoints: vec![(0.0, value)],
        }
    }

    pub fn breakpoints(&self) -> &[(f64, f64)] {
        &self.breakpoints
    }

    pub fn eval(&self, t: f64) -> f64 {
        let bp = &self.breakpoints;
        let (t0, v0) = bp[0];
        if t <= t0 {
            return v0;
        }
        let (tn, vn) = bp[bp.len() - 1];
        if t >= tn {
            return vn;
        }
        // first breakpoint strictly after t
        let hi = bp.partition_point(|(ti, _)| *ti <= t);
        let (ta, va) = bp[hi - 1];
        let (tb, vb) = bp[hi];
        va + (vb - va) * (t - ta) / (tb - ta)
    }
}

/// Time-dependent applied forces: a scale schedule times fixed nodal forces
/// over the free degrees of freedom.
#[derive(Clone, Debug, PartialEq)]
pub struct LoadProgram {
    pub schedule: PiecewiseLinear,
    pub base_forces: Vec<f64>,
}

impl LoadProgram {
    /// Collects the mesh's nodal loads onto the free DOFs of `sys`. Loads on
    /// constrained DOFs are dropped since reactions absorb them.
    pub fn from_mesh(mesh: &TrussMesh, sys: &ConstraintSystem, schedule: PiecewiseLinear) -> Self {
        let mut base_forces = vec![0.0; sys.free_dofs()];
        for load in &mesh.loads {
            if let Some(i) = sys.free_index(load.node, load.dir) {
                base_forces[i] += load.value;
            }
        }
        Self {
            schedule,
            base_forces,
        }
    }

    pub fn zero(n_free: usize) -> Self {
        Self {
            schedule: PiecewiseLinear::constant(0.0),
            base_forces: vec![0.0; n_free],
        }
    }
}

pub fn evaluate_load(p: &LoadProgram, t: f64) -> Vec<f64> {
    let s = p.schedule.eval(t);
    p.base_forces.iter().map(|f| f * s).collect()
}

/// Nodes, bars and boundary conditions of a truss.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TrussMesh {
    pub nodes: Vec<[f64; 3]>,
    pub bars: Vec<Bar>,
    pub supports: BTreeSet<(usize, Dir)>,
    pub loads: Vec<NodalLoad>,
    pub prescribed: Vec<PrescribedDisplacement>,
    pub programs: BTreeMap<usize, PiecewiseLinear>,
}

impl TrussMesh {
    pub fn bar_length(&self, bar: &Bar) -> f64 {
        let (pa, pb) = (self.nodes[bar.a], self.nodes[bar.b]);
        ((pb[0] - pa[0]).powi(2) + (pb[1] - pa[1]).powi(2) + (pb[2] - pa[2]).powi(2)).sqrt()
    }

    /// Element volumes `area * length`, the weights of the global norm.
    pub fn element_volumes(&self) -> Vec<f64> {
        self.bars
            .iter()
            .map(|b| b.area * self.bar_length(b))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if self.nodes.iter().flatten().any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("node coordinates".into()));
        }
        if self.bars.is_empty() {
            return Err(Error::InvalidInput("mesh has no bars".into()));
        }
        for (i, bar) in self.bars.iter().enumerate() {
            if bar.a >= n || bar.b >= n {
                return Err(Error::InvalidInput(format!(
                    "bar {i} references a missing node"
                )));
            }
            if !(bar.area > 0.0) || !bar.area.is_finite() {
                return Err(Error::InvalidInput(format!(
                    "bar {i} has nonpositive area {}",
                    bar.area
                )));
            }
            let len = self.bar_length(bar);
            if !(len > 0.0) {
                return Err(Error::InvalidInput(format!("bar {i} has zero length")));
            }
        }
        for (node, _) in &self.supports {
            if *node >= n {
                return Err(Error::InvalidInput(format!(
                    "support on missing node {node}"
                )));
            }
        }
        for load in &self.loads {
            if load.node >= n {
                return Err(Error::InvalidInput(format!(
                    "load on missing node {}",
                    load.node
                )));
            }
            if !load.value.is_finite() {
                return Err(Error::NonFinite(format!("load on node {}", load.node)));
            }
        }
        let mut seen = BTreeSet::new();
        for p in &self.prescribed {
            if p.node >= n {
                return Err(Error::InvalidInput(format!(
                    "prescribed displacement on missing node {}",
                    p.node
                )));
            }
            if !self.programs.contains_key(&p.program) {
                return Err(Error::InvalidInput(format!(
                    "unknown displacement program {}",
                    p.program
                )));
            }
            if self.supports.contains(&(p.node, p.dir)) {
                return Err(Error::InvalidInput(format!(
                    "node {} {} is both supported and prescribed",
                    p.node, p.dir
                )));
            }
            if !seen.insert((p.node, p.dir)) {
                return Err(Error::InvalidInput(format!(
                    "node {} {} prescribed twice",
                    p.node, p.dir
                )));
            }
        }
        Ok(())
    }

    /// A single bar along x from the origin, clamped at node 0, with node 1
    /// restrained transversally.
    pub fn single_bar(length: f64, area: f64) -> Self {
        let mut mesh = TrussMesh {
            nodes: vec![[0.0; 3], [length, 0.0, 0.0]],
            bars: vec![Bar { a: 0, b: 1, area }],
            ..Default::default()
        };
        for d in Dir::ALL {
            mesh.supports.insert((0, d));
        }
        mesh.supports.insert((1, Dir::Y));
        mesh.supports.insert((1, Dir::Z));
        mesh
    }

    /// Single-bar fixture whose axial strain is held at `strain` for all time.
    pub fn relaxation_bar(strain: f64) -> Self {
        let mut mesh = Self::single_bar(1.0, 1.0);
        mesh.programs.insert(0, PiecewiseLinear::constant(strain));
        mesh.prescribed.push(PrescribedDisplacement {
            node: 1,
            dir: Dir::X,
            program: 0,
        });
        mesh
    }
}
