use super::global::boundary_trace_values;
use super::local::{assemble_local, LocalLayout, LocalOptions};
use super::space::DiscreteSpace;
use crate::linsolve::SparseComplexMatrix;
use crate::mesh::Mesh;
use crate::problem::ProblemSpec;
use crate::{Result, C64};

const ZERO: C64 = C64::new(0.0, 0.0);
const NONE: usize = usize::MAX;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DofGroup {
    Q,
    U,
    UHat,
    P,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct FullOptions {
    pub local: LocalOptions,
    /// Keep boundary `û` and boundary `p` as unknowns instead of data.
    pub include_boundary: bool,
}

/// The uncondensed system over `[(q, u) per element | û per face | p per node]`.
#[derive(Debug, Clone)]
pub struct FullSystem {
    pub matrix: SparseComplexMatrix,
    pub rhs: Vec<C64>,
    pub groups: Vec<DofGroup>,
    pub layout: LocalLayout,
    /// First index of the `û` block of every face, `None` if it is data.
    pub face_offset: Vec<Option<usize>>,
    /// Index of `p` at every CG node, `None` if it is data.
    pub node_index: Vec<Option<usize>>,
}

impl FullSystem {
    pub fn element_offset(&self, elem: usize) -> usize {
        elem * self.layout.ni()
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        self.groups.is_empty()
    }
}

pub fn assemble_full(spec: &ProblemSpec, mesh: &Mesh, space: &DiscreteSpace, opts: &FullOptions) -> Result<FullSystem> {
    let lay = LocalLayout::of(space);
    let ni = lay.ni();
    let nfb = lay.nfb;
    let mut groups = Vec::new();
    for _ in 0..mesh.num_elements() {
        groups.extend(std::iter::repeat_n(DofGroup::Q, lay.nq));
        groups.extend(std::iter::repeat_n(DofGroup::U, lay.nu));
    }
    let mut face_offset = vec![None; mesh.num_faces()];
    for (f, face) in mesh.faces().iter().enumerate() {
        if opts.include_boundary || !face.is_boundary() {
            face_offset[f] = Some(groups.len());
            groups.extend(std::iter::repeat_n(DofGroup::UHat, nfb));
        }
    }
    let mut node_index = vec![None; space.cg.num_nodes()];
    for (node, slot) in node_index.iter_mut().enumerate() {
        if opts.include_boundary || !space.cg.is_boundary_node(node) {
            *slot = Some(groups.len());
            groups.push(DofGroup::P);
        }
    }
    let boundary = if opts.include_boundary {
        vec![ZERO; mesh.num_faces() * nfb]
    } else {
        boundary_trace_values(spec, mesh, space)?
    };

    let n = groups.len();
    let mut triplets = Vec::new();
    let mut rhs = vec![ZERO; n];
    for e in 0..mesh.num_elements() {
        let local = assemble_local(spec, mesh, space, e, &opts.local)?;
        let faces = mesh.element_faces(e);
        let mut slots: Vec<usize> = (e * ni..(e + 1) * ni).collect();
        let mut known = vec![ZERO; lay.len()];
        for (lf, &f) in faces.iter().enumerate() {
            for s in 0..nfb {
                match face_offset[f] {
                    Some(o) => slots.push(o + s),
                    None => {
                        known[lay.uhat0(lf) + s] = boundary[f * nfb + s];
                        slots.push(NONE);
                    }
                }
            }
        }
        for &node in space.cg.element_dofs(e) {
            slots.push(node_index[node].unwrap_or(NONE));
        }
        for (r, &gr) in slots.iter().enumerate() {
            if gr == NONE {
                continue;
            }
            let mut v = local.f[r];
            for (c, &gc) in slots.iter().enumerate() {
                let x = local.a[(r, c)];
                if gc == NONE {
                    v -= x * known[c];
                } else if x != ZERO {
                    triplets.push((gr, gc, x));
                }
            }
            rhs[gr] += v;
        }
    }
    let matrix = SparseComplexMatrix::from_triplets(n, n, &triplets)?;
    Ok(FullSystem {
        matrix,
        rhs,
        groups,
        layout: lay,
        face_offset,
        node_index,
    })
}
