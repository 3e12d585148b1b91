//! Conforming tetrahedral meshes of the unit cube.
//!
//! Faces are identified by their sorted global vertex triple and carry one
//! global frame `(t1, t2, n)`. The normal points out of the lower-index
//! incident element (the owner), so both neighbours read the same trace
//! basis.

use std::collections::HashMap;
use std::io::Write;

use crate::geometry::{TetGeometry, TriangleGeometry};
use crate::vec3::{cross, dot, normalize, scale, sub};
use crate::{Error, Point, Result};

/// Orthonormal right-handed face frame: `t1 × t2 = normal`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceFrame {
    pub normal: [f64; 3],
    pub t1: [f64; 3],
    pub t2: [f64; 3],
}

#[derive(Debug, Clone)]
pub struct Face {
    /// Sorted global vertex indices.
    pub vertices: [usize; 3],
    pub owner: usize,
    pub neighbor: Option<usize>,
    pub frame: FaceFrame,
    pub area: f64,
}

impl Face {
    pub fn is_boundary(&self) -> bool {
        self.neighbor.is_none()
    }
}

#[derive(Debug, Clone)]
pub struct Mesh {
    vertices: Vec<Point>,
    elements: Vec<[usize; 4]>,
    faces: Vec<Face>,
    /// Local face `f` of an element is the face opposite its vertex `f`.
    element_faces: Vec<[usize; 4]>,
    element_h: Vec<f64>,
    level: Option<usize>,
}

/// Axis permutations of the Kuhn subdivision; every path from the subcube's
/// low corner to its high corner gives one tetrahedron.
const KUHN_PATHS: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

impl Mesh {
    /// Splits the unit cube into `n³` subcubes and each subcube into the six
    /// Kuhn tetrahedra sharing its main diagonal.
    pub fn build_structured_cube(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInput("subdivision level must be >= 1".into()));
        }
        let np = n + 1;
        let vid = |i: usize, j: usize, k: usize| i + np * (j + np * k);
        let mut vertices = Vec::with_capacity(np * np * np);
        for k in 0..np {
            for j in 0..np {
                for i in 0..np {
                    vertices.push([i as f64 / n as f64, j as f64 / n as f64, k as f64 / n as f64]);
                }
            }
        }
        let mut elements = Vec::with_capacity(6 * n * n * n);
        for k in 0..n {
            for j in 0..n {
                for i in 0..n {
                    for path in &KUHN_PATHS {
                        let mut c = [i, j, k];
                        let mut tet = [vid(c[0], c[1], c[2]); 4];
                        for (s, &axis) in path.iter().enumerate() {
                            c[axis] += 1;
                            tet[s + 1] = vid(c[0], c[1], c[2]);
                        }
                        elements.push(tet);
                    }
                }
            }
        }
        let mut mesh = Self::from_tets(vertices, elements)?;
        mesh.level = Some(n);
        Ok(mesh)
    }

    /// Builds the face table for an explicit list of tetrahedra. Elements with
    /// negative orientation are reordered; faces with a single incident element
    /// are boundary faces.
    pub fn from_tets(vertices: Vec<Point>, mut elements: Vec<[usize; 4]>) -> Result<Self> {
        for (e, tet) in elements.iter_mut().enumerate() {
            for &v in tet.iter() {
                if v >= vertices.len() {
                    return Err(Error::Index {
                        what: "vertex",
                        index: v,
                        len: vertices.len(),
                    });
                }
            }
            let geo = TetGeometry::new(tet.map(|v| vertices[v]))
                .map_err(|err| Error::Geometry(format!("element {e}: {err}")))?;
            if geo.det < 0.0 {
                tet.swap(2, 3);
            }
        }

        let mut lookup: HashMap<[usize; 3], usize> = HashMap::with_capacity(2 * elements.len() + 16);
        let mut faces: Vec<Face> = Vec::with_capacity(2 * elements.len() + 16);
        let mut element_faces = Vec::with_capacity(elements.len());
        let mut element_h = Vec::with_capacity(elements.len());
        for (e, tet) in elements.iter().enumerate() {
            let coords = tet.map(|v| vertices[v]);
            element_h.push(TetGeometry::new(coords)?.diameter());
            let mut local = [0usize; 4];
            for f in 0..4 {
                let mut key = [tet[(f + 1) % 4], tet[(f + 2) % 4], tet[(f + 3) % 4]];
                key.sort_unstable();
                match lookup.get(&key) {
                    Some(&id) => {
                        let face = &mut faces[id];
                        if face.neighbor.is_some() {
                            return Err(Error::Geometry(format!(
                                "face {key:?} shared by more than two elements"
                            )));
                        }
                        face.neighbor = Some(e);
                        local[f] = id;
                    }
                    None => {
                        let id = faces.len();
                        let tri = key.map(|v| vertices[v]);
                        let (frame, area) = face_frame_from(tri, coords[f])?;
                        faces.push(Face {
                            vertices: key,
                            owner: e,
                            neighbor: None,
                            frame,
                            area,
                        });
                        lookup.insert(key, id);
                        local[f] = id;
                    }
                }
            }
            element_faces.push(local);
        }

        Ok(Self {
            vertices,
            elements,
            faces,
            element_faces,
            element_h,
            level: None,
        })
    }

    pub fn vertices(&self) -> &[Point] {
        &self.vertices
    }

    pub fn elements(&self) -> &[[usize; 4]] {
        &self.elements
    }

    pub fn faces(&self) -> &[Face] {
        &self.faces
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    /// Subdivision level `n` for structured meshes.
    pub fn level(&self) -> Option<usize> {
        self.level
    }

    pub fn face(&self, face_id: usize) -> Result<&Face> {
        self.faces.get(face_id).ok_or(Error::Index {
            what: "face",
            index: face_id,
            len: self.faces.len(),
        })
    }

    pub fn face_frame(&self, face_id: usize) -> Result<&FaceFrame> {
        self.face(face_id).map(|f| &f.frame)
    }

    pub fn is_boundary_face(&self, face_id: usize) -> bool {
        self.faces[face_id].is_boundary()
    }

    /// Global face ids of the four local faces of an element.
    pub fn element_faces(&self, elem: usize) -> &[usize; 4] {
        &self.element_faces[elem]
    }

    /// `+1` when the element owns the face (global normal is outward), `-1` otherwise.
    pub fn face_orientation(&self, elem: usize, local_face: usize) -> f64 {
        let face = &self.faces[self.element_faces[elem][local_face]];
        if face.owner == elem {
            1.0
        } else {
            -1.0
        }
    }

    pub fn element_geometry(&self, elem: usize) -> TetGeometry {
        TetGeometry::new(self.elements[elem].map(|v| self.vertices[v]))
            .expect("mesh elements are validated at construction")
    }

    pub fn face_geometry(&self, face_id: usize) -> TriangleGeometry {
        TriangleGeometry::new(self.faces[face_id].vertices.map(|v| self.vertices[v]))
            .expect("mesh faces are validated at construction")
    }

    /// Diameter `h_K`, realised as the longest edge.
    pub fn element_diameter(&self, elem: usize) -> Result<f64> {
        self.element_h.get(elem).copied().ok_or(Error::Index {
            what: "element",
            index: elem,
            len: self.elements.len(),
        })
    }

    pub fn element_diameters(&self) -> &[f64] {
        &self.element_h
    }

    pub fn max_diameter(&self) -> f64 {
        self.element_h.iter().copied().fold(0.0, f64::max)
    }

    pub fn element_volume(&self, elem: usize) -> f64 {
        self.element_geometry(elem).volume()
    }

    pub fn signed_volume(&self, elem: usize) -> f64 {
        self.element_geometry(elem).det / 6.0
    }

    pub fn total_volume(&self) -> f64 {
        (0..self.num_elements()).map(|e| self.element_volume(e)).sum()
    }

    pub fn element_centroid(&self, elem: usize) -> Point {
        let mut c = [0.0; 3];
        for &v in &self.elements[elem] {
            for d in 0..3 {
                c[d] += 0.25 * self.vertices[v][d];
            }
        }
        c
    }

    pub fn face_centroid(&self, face_id: usize) -> Point {
        let mut c = [0.0; 3];
        for &v in &self.faces[face_id].vertices {
            for d in 0..3 {
                c[d] += self.vertices[v][d] / 3.0;
            }
        }
        c
    }

    /// Faces whose three vertices lie on the plane `x[axis] = value`.
    pub fn faces_on_plane(&self, axis: usize, value: f64, tol: f64) -> Vec<usize> {
        (0..self.faces.len())
            .filter(|&f| {
                self.faces[f]
                    .vertices
                    .iter()
                    .all(|&v| (self.vertices[v][axis] - value).abs() <= tol)
            })
            .collect()
    }

    /// Plain-text dump for debugging: a vertex block (`x y z`) followed by an
    /// element block (four 0-based indices).
    pub fn write_text<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "# vertices {}", self.vertices.len())?;
        for v in &self.vertices {
            writeln!(out, "{:.17e} {:.17e} {:.17e}", v[0], v[1], v[2])?;
        }
        writeln!(out, "# elements {}", self.elements.len())?;
        for t in &self.elements {
            writeln!(out, "{} {} {} {}", t[0], t[1], t[2], t[3])?;
        }
        Ok(())
    }
}

/// Frame of a face with sorted vertices `tri`, normal pointing away from `opposite`.
fn face_frame_from(tri: [Point; 3], opposite: Point) -> Result<(FaceFrame, f64)> {
    let geo = TriangleGeometry::new(tri)?;
    let mut normal = normalize(cross(geo.edges[0], geo.edges[1]));
    let centroid = scale(1.0 / 3.0, [
        tri[0][0] + tri[1][0] + tri[2][0],
        tri[0][1] + tri[1][1] + tri[2][1],
        tri[0][2] + tri[1][2] + tri[2][2],
    ]);
    if dot(normal, sub(centroid, opposite)) < 0.0 {
        normal = scale(-1.0, normal);
    }
    let t1 = normalize(geo.edges[0]);
    let t2 = cross(normal, t1);
    Ok((FaceFrame { normal, t1, t2 }, geo.area()))
}
