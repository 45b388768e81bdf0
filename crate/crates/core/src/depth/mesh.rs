use crate::grid::Grid;
use crate::partition::SurfacePartition;

/// Triangle mesh over the pixel lattice. Vertices are camera-frame points.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    /// Continuous surface id per vertex.
    pub surface: Vec<u32>,
    pub triangles: Vec<[u32; 3]>,
}

/// One vertex per pixel with a point; a lattice quad becomes two triangles
/// only when all four corners belong to the same continuous surface, so the
/// mesh tears along occlusions.
pub fn build_mesh(points: &Grid<Option<[f64; 3]>>, partition: &SurfacePartition) -> Mesh {
    let mut mesh = Mesh::default();
    let mut vid = Grid::new(points.width(), points.height(), u32::MAX);
    for idx in 0..points.len() {
        if let (Some(p), Some(s)) = (points[idx], partition.continuous_id[idx]) {
            vid.as_mut_slice()[idx] = mesh.vertices.len() as u32;
            mesh.vertices.push(p);
            mesh.surface.push(s);
        }
    }
    let (w, h) = points.dims();
    for y in 0..h.saturating_sub(1) {
        for x in 0..w.saturating_sub(1) {
            let a = points.index(x, y);
            let corners = [a, a + 1, a + w, a + w + 1];
            let s = partition.continuous_id[a];
            if corners.iter().any(|&c| vid[c] == u32::MAX || partition.continuous_id[c] != s) {
                continue;
            }
            let [a, b, c, d] = corners.map(|c| vid[c]);
            mesh.triangles.push([a, c, b]);
            mesh.triangles.push([b, c, d]);
        }
    }
    mesh
}
