use super::{Bar, Dir, NodalLoad, TrussMesh};
use crate::error::{Error, Result};

/// Parametric box lattice of cubic cells: `bays` along x, `width` along y,
/// `levels` along z. The x = 0 face is clamped.
#[derive(Clone, Debug, PartialEq)]
pub struct LatticeSpec {
    pub bays: usize,
    pub width: usize,
    pub levels: usize,
    pub spacing: f64,
    pub area: f64,
    /// One diagonal across every square face.
    pub face_diagonals: bool,
    /// One diagonal through every cell.
    pub body_diagonals: bool,
}

impl Default for LatticeSpec {
    /// 5 x 2 x 2 cantilever with triangulated faces: 54 nodes, 201 bars.
    fn default() -> Self {
        Self {
            bays: 5,
            width: 2,
            levels: 2,
            spacing: 1.0,
            area: 1.0,
            face_diagonals: true,
            body_diagonals: false,
        }
    }
}

impl LatticeSpec {
    fn node(&self, i: usize, j: usize, k: usize) -> usize {
        i + (self.bays + 1) * (j + (self.width + 1) * k)
    }

    /// Nodes on the free end face x = bays * spacing.
    pub fn tip_nodes(&self) -> Vec<usize> {
        let mut out = Vec::new();
        for k in 0..=self.levels {
            for j in 0..=self.width {
                out.push(self.node(self.bays, j, k));
            }
        }
        out
    }

    /// Node at the bottom of the free end, on the y = 0 edge.
    pub fn tip_corner(&self) -> usize {
        self.node(self.bays, 0, 0)
    }
}

pub fn generate_lattice_truss(spec: &LatticeSpec) -> Result<TrussMesh> {
    if spec.bays == 0 || spec.width == 0 || spec.levels == 0 {
        return Err(Error::InvalidInput(format!(
            "lattice needs at least one cell in every direction, got {}x{}x{}",
            spec.bays, spec.width, spec.levels
        )));
    }
    if !(spec.spacing > 0.0) || !(spec.area > 0.0) {
        return Err(Error::InvalidInput(
            "lattice spacing and bar area must be positive".into(),
        ));
    }
    let (nx, ny, nz) = (spec.bays, spec.width, spec.levels);
    let h = spec.spacing;

    let mut mesh = TrussMesh::default();
    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                mesh.nodes.push([i as f64 * h, j as f64 * h, k as f64 * h]);
            }
        }
    }
    let mut bar = |a: usize, b: usize| {
        mesh.bars.push(Bar {
            a,
            b,
            area: spec.area,
        })
    };

    for k in 0..=nz {
        for j in 0..=ny {
            for i in 0..=nx {
                let n = spec.node(i, j, k);
                if i < nx {
                    bar(n, spec.node(i + 1, j, k));
                }
                if j < ny {
                    bar(n, spec.node(i, j + 1, k));
                }
                if k < nz {
                    bar(n, spec.node(i, j, k + 1));
                }
            }
        }
    }
    if spec.face_diagonals {
        for k in 0..=nz {
            for j in 0..=ny {
                for i in 0..=nx {
                    let n = spec.node(i, j, k);
                    if i < nx && j < ny {
                        bar(n, spec.node(i + 1, j + 1, k));
                    }
                    if i < nx && k < nz {
                        bar(n, spec.node(i + 1, j, k + 1));
                    }
                    if j < ny && k < nz {
                        bar(n, spec.node(i, j + 1, k + 1));
                    }
                }
            }
        }
    }
    if spec.body_diagonals {
        for k in 0..nz {
            for j in 0..ny {
                for i in 0..nx {
                    bar(spec.node(i, j, k), spec.node(i + 1, j + 1, k + 1));
                }
            }
        }
    }

    for k in 0..=nz {
        for j in 0..=ny {
            for d in Dir::ALL {
                mesh.supports.insert((spec.node(0, j, k), d));
            }
        }
    }
    Ok(mesh)
}

impl TrussMesh {
    /// Adds `per_node` along `dir` at every tip node of a generated lattice.
    pub fn with_tip_loads(mut self, spec: &LatticeSpec, dir: Dir, per_node: f64) -> Self {
        for node in spec.tip_nodes() {
            self.loads.push(NodalLoad {
                node,
                dir,
                value: per_node,
            });
        }
        self
    }
}
