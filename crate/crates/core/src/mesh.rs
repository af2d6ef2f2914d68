//! Bloch-ellipsoid meshes: images of a unit icosphere under a channel's
//! affine Bloch map, written as OBJ text.

use std::collections::HashMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::channel::AffineMap;
use crate::error::{QptError, Result};
use crate::state::BlochVector;

/// A triangulated surface.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    pub faces: Vec<[usize; 3]>,
}

fn normalized(v: [f64; 3]) -> [f64; 3] {
    let n = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Unit icosphere: an icosahedron with each face split `subdivisions` times
/// into four, new vertices pushed out to the sphere.
pub fn icosphere(subdivisions: u32) -> Mesh {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let mut vertices: Vec<[f64; 3]> = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ]
    .into_iter()
    .map(normalized)
    .collect();
    let mut faces: Vec<[usize; 3]> = vec![
        [0, 11, 5], [0, 5, 1], [0, 1, 7], [0, 7, 10], [0, 10, 11],
        [1, 5, 9], [5, 11, 4], [11, 10, 2], [10, 7, 6], [7, 1, 8],
        [3, 9, 4], [3, 4, 2], [3, 2, 6], [3, 6, 8], [3, 8, 9],
        [4, 9, 5], [2, 4, 11], [6, 2, 10], [8, 6, 7], [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut midpoints: HashMap<(usize, usize), usize> = HashMap::new();
        let mut midpoint = |a: usize, b: usize, vertices: &mut Vec<[f64; 3]>| {
            *midpoints.entry((a.min(b), a.max(b))).or_insert_with(|| {
                let (p, q) = (vertices[a], vertices[b]);
                vertices.push(normalized([p[0] + q[0], p[1] + q[1], p[2] + q[2]]));
                vertices.len() - 1
            })
        };
        let mut next = Vec::with_capacity(faces.len() * 4);
        for [a, b, c] in faces {
            let ab = midpoint(a, b, &mut vertices);
            let bc = midpoint(b, c, &mut vertices);
            let ca = midpoint(c, a, &mut vertices);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        faces = next;
    }
    Mesh { vertices, faces }
}

/// The unit sphere and its image under an affine Bloch map, sharing faces.
#[derive(Debug, Clone, PartialEq)]
pub struct EllipsoidMesh {
    pub reference: Mesh,
    pub vertices: Vec<[f64; 3]>,
    pub map: AffineMap,
}

impl EllipsoidMesh {
    pub fn new(map: &AffineMap, subdivisions: u32) -> Result<Self> {
        if !map.is_finite() {
            return Err(QptError::Domain("affine map has non-finite entries".into()));
        }
        let reference = icosphere(subdivisions);
        let vertices = reference
            .vertices
            .iter()
            .map(|&v| map.apply(BlochVector::from_array(v)).to_array())
            .collect();
        Ok(Self {
            reference,
            vertices,
            map: *map,
        })
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.reference.faces
    }

    pub fn max_radius(&self) -> f64 {
        self.vertices
            .iter()
            .map(|v| BlochVector::from_array(*v).norm())
            .fold(0.0, f64::max)
    }

    /// Summary for the JSON sidecar.
    pub fn summary(&self, name: &str) -> MeshSummary {
        MeshSummary {
            name: name.to_string(),
            affine: self.map,
            axis_lengths: self.map.axis_lengths(),
            max_radius: self.max_radius(),
            vertex_count: self.vertices.len(),
        }
    }
}

/// Per-object metadata written next to the OBJ file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct MeshSummary {
    pub name: String,
    pub affine: AffineMap,
    pub axis_lengths: [f64; 3],
    pub max_radius: f64,
    pub vertex_count: usize,
}

/// OBJ text with one named object per `(name, vertices)` pair, all sharing
/// the same face list.
pub fn to_obj(objects: &[(&str, &[[f64; 3]])], faces: &[[usize; 3]]) -> String {
    let mut out = String::new();
    let mut offset = 1;
    for (name, vertices) in objects {
        let _ = writeln!(out, "o {name}");
        for v in vertices.iter() {
            let _ = writeln!(out, "v {:?} {:?} {:?}", v[0], v[1], v[2]);
        }
        for f in faces {
            let _ = writeln!(out, "f {} {} {}", f[0] + offset, f[1] + offset, f[2] + offset);
        }
        offset += vertices.len();
    }
    out
}
