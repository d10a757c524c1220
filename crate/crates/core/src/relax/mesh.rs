use nalgebra::{Matrix2, Vector2};

use crate::error::{invalid, Result};

/// Piecewise-affine map on a triangulation of the unit square.
#[derive(Clone, Debug, PartialEq)]
pub struct MeshDeformation {
    pub nodes: Vec<Vector2<f64>>,
    pub values: Vec<Vector2<f64>>,
    pub triangles: Vec<[usize; 3]>,
    areas: Vec<f64>,
    // inverse of the edge matrix [p1 − p0, p2 − p0]
    inv_edges: Vec<Matrix2<f64>>,
    cells: usize,
}

impl MeshDeformation {
    /// Crossed triangulation: each of the `cells`² squares is split into four
    /// triangles through its centre. Values start at the identity map.
    pub fn crossed(cells: usize) -> Result<Self> {
        if cells == 0 {
            return Err(invalid("mesh needs at least one cell per side"));
        }
        let n = cells;
        let h = 1.0 / n as f64;
        let mut nodes = Vec::with_capacity((n + 1) * (n + 1) + n * n);
        for j in 0..=n {
            for i in 0..=n {
                nodes.push(Vector2::new(i as f64 * h, j as f64 * h));
            }
        }
        for j in 0..n {
            for i in 0..n {
                nodes.push(Vector2::new((i as f64 + 0.5) * h, (j as f64 + 0.5) * h));
            }
        }
        let corner = |i: usize, j: usize| j * (n + 1) + i;
        let mut triangles = Vec::with_capacity(4 * n * n);
        for j in 0..n {
            for i in 0..n {
                let c = (n + 1) * (n + 1) + j * n + i;
                let (a, b, d, e) = (corner(i, j), corner(i + 1, j), corner(i + 1, j + 1), corner(i, j + 1));
                triangles.push([a, b, c]);
                triangles.push([b, d, c]);
                triangles.push([d, e, c]);
                triangles.push([e, a, c]);
            }
        }
        let values = nodes.clone();
        Self::from_parts(nodes, values, triangles, cells)
    }

    fn from_parts(
        nodes: Vec<Vector2<f64>>,
        values: Vec<Vector2<f64>>,
        triangles: Vec<[usize; 3]>,
        cells: usize,
    ) -> Result<Self> {
        let mut areas = Vec::with_capacity(triangles.len());
        let mut inv_edges = Vec::with_capacity(triangles.len());
        for t in &triangles {
            let e = Matrix2::from_columns(&[nodes[t[1]] - nodes[t[0]], nodes[t[2]] - nodes[t[0]]]);
            let det = e.determinant();
            if !(det > 0.0) {
                return Err(invalid("degenerate or inverted triangle"));
            }
            areas.push(0.5 * det);
            inv_edges.push(e.try_inverse().ok_or_else(|| invalid("degenerate triangle"))?);
        }
        Ok(Self { nodes, values, triangles, areas, inv_edges, cells })
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn spacing(&self) -> f64 {
        1.0 / self.cells as f64
    }

    pub fn area(&self, t: usize) -> f64 {
        self.areas[t]
    }

    pub fn volume(&self) -> f64 {
        self.areas.iter().sum()
    }

    /// Sets every nodal value to f(node).
    pub fn set_values(&mut self, f: impl Fn(&Vector2<f64>) -> Vector2<f64>) {
        for (v, x) in self.values.iter_mut().zip(&self.nodes) {
            *v = f(x);
        }
    }

    /// Gradient of the map on triangle t for the given nodal values.
    pub fn element_gradient(&self, values: &[Vector2<f64>], t: usize) -> Matrix2<f64> {
        let [i0, i1, i2] = self.triangles[t];
        let dy = Matrix2::from_columns(&[values[i1] - values[i0], values[i2] - values[i0]]);
        dy * self.inv_edges[t]
    }

    pub(crate) fn inv_edges(&self, t: usize) -> &Matrix2<f64> {
        &self.inv_edges[t]
    }

    /// Flattened nodal values (x₀, y₀, x₁, y₁, …).
    pub fn flat_values(&self) -> Vec<f64> {
        self.values.iter().flat_map(|v| [v[0], v[1]]).collect()
    }

    pub fn set_flat_values(&mut self, flat: &[f64]) {
        for (k, v) in self.values.iter_mut().enumerate() {
            *v = Vector2::new(flat[2 * k], flat[2 * k + 1]);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn crossed_mesh_counts_and_volume() {
        let m = MeshDeformation::crossed(4).unwrap();
        assert_eq!(m.nodes.len(), 25 + 16);
        assert_eq!(m.triangles.len(), 64);
        assert!((m.volume() - 1.0).abs() < 1e-14);
        for t in 0..m.triangles.len() {
            assert!((m.element_gradient(&m.values, t) - Matrix2::identity()).norm() < 1e-13);
        }
    }
}
