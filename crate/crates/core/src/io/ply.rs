use crate::depth::Mesh;

/// Binary little-endian PLY with `x y z` floats and an `int continuous_id`
/// per vertex. Faces are written only when `with_faces` is set, so the same
/// mesh serves as point cloud and as triangle mesh.
pub fn encode_ply(mesh: &Mesh, with_faces: bool) -> Vec<u8> {
    let faces = if with_faces { mesh.triangles.len() } else { 0 };
    let mut header = format!(
        "ply\nformat binary_little_endian 1.0\nelement vertex {}\nproperty float x\nproperty float y\nproperty float z\nproperty int continuous_id\n",
        mesh.vertices.len()
    );
    if with_faces {
        header.push_str(&format!("element face {faces}\nproperty list uchar int vertex_indices\n"));
    }
    header.push_str("end_header\n");
    let mut out = Vec::with_capacity(header.len() + 16 * mesh.vertices.len() + 13 * faces);
    out.extend_from_slice(header.as_bytes());
    for (v, s) in mesh.vertices.iter().zip(&mesh.surface) {
        for c in v {
            out.extend_from_slice(&(*c as f32).to_le_bytes());
        }
        out.extend_from_slice(&(*s as i32).to_le_bytes());
    }
    if with_faces {
        for t in &mesh.triangles {
            out.push(3);
            for i in t {
                out.extend_from_slice(&(*i as i32).to_le_bytes());
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sizes_match_header() {
        let mesh = Mesh {
            vertices: vec![[0.0, 0.0, 1.0], [1.0, 0.0, 1.0], [0.0, 1.0, 1.0]],
            surface: vec![0, 0, 0],
            triangles: vec![[0, 2, 1]],
        };
        let bytes = encode_ply(&mesh, true);
        let header_end = bytes.windows(11).position(|w| w == b"end_header\n").unwrap() + 11;
        assert_eq!(bytes.len() - header_end, 3 * 16 + 13);
        let cloud = encode_ply(&mesh, false);
        assert!(!String::from_utf8_lossy(&cloud).contains("element face"));
    }
}
