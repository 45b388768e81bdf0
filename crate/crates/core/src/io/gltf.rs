use serde_json::json;

use crate::depth::Mesh;

const GLB_MAGIC: u32 = 0x4654_6C67;
const CHUNK_JSON: u32 = 0x4E4F_534A;
const CHUNK_BIN: u32 = 0x004E_4942;

/// Binary glTF 2.0 with one mesh primitive. Camera-frame points (x right,
/// y down, z forward) are converted to glTF's y-up, camera-looking-down -z
/// frame. A mesh without triangles is written as a point primitive.
pub fn encode_glb(mesh: &Mesh) -> Vec<u8> {
    let positions: Vec<[f32; 3]> = mesh
        .vertices
        .iter()
        .map(|v| [v[0] as f32, -v[1] as f32, -v[2] as f32])
        .collect();
    let (mut min, mut max) = ([f32::INFINITY; 3], [f32::NEG_INFINITY; 3]);
    for p in &positions {
        for k in 0..3 {
            min[k] = min[k].min(p[k]);
            max[k] = max[k].max(p[k]);
        }
    }
    if positions.is_empty() {
        (min, max) = ([0.0; 3], [0.0; 3]);
    }

    let mut bin = Vec::with_capacity(12 * positions.len() + 12 * mesh.triangles.len());
    for p in &positions {
        for c in p {
            bin.extend_from_slice(&c.to_le_bytes());
        }
    }
    let pos_len = bin.len();
    for t in &mesh.triangles {
        for i in t {
            bin.extend_from_slice(&i.to_le_bytes());
        }
    }
    let idx_len = bin.len() - pos_len;
    while bin.len() % 4 != 0 {
        bin.push(0);
    }

    let mut buffer_views = vec![json!({"buffer": 0, "byteOffset": 0, "byteLength": pos_len, "target": 34962})];
    let mut accessors = vec![json!({
        "bufferView": 0,
        "componentType": 5126,
        "count": positions.len(),
        "type": "VEC3",
        "min": min,
        "max": max,
    })];
    let mut primitive = json!({"attributes": {"POSITION": 0}, "mode": 0});
    if !mesh.triangles.is_empty() {
        buffer_views.push(json!({"buffer": 0, "byteOffset": pos_len, "byteLength": idx_len, "target": 34963}));
        accessors.push(json!({
            "bufferView": 1,
            "componentType": 5125,
            "count": 3 * mesh.triangles.len(),
            "type": "SCALAR",
        }));
        primitive = json!({"attributes": {"POSITION": 0}, "indices": 1, "mode": 4});
    }
    let doc = json!({
        "asset": {"version": "2.0", "generator": "anno3d"},
        "scene": 0,
        "scenes": [{"nodes": [0]}],
        "nodes": [{"mesh": 0}],
        "meshes": [{"primitives": [primitive]}],
        "buffers": [{"byteLength": bin.len()}],
        "bufferViews": buffer_views,
        "accessors": accessors,
    });
    let mut json_bytes = serde_json::to_vec(&doc).expect("static glTF json");
    while !json_bytes.len().is_multiple_of(4) {
        json_bytes.push(b' ');
    }

    let total = 12 + 8 + json_bytes.len() + 8 + bin.len();
    let mut out = Vec::with_capacity(total);
    out.extend_from_slice(&GLB_MAGIC.to_le_bytes());
    out.extend_from_slice(&2u32.to_le_bytes());
    out.extend_from_slice(&(total as u32).to_le_bytes());
    out.extend_from_slice(&(json_bytes.len() as u32).to_le_bytes());
    out.extend_from_slice(&CHUNK_JSON.to_le_bytes());
    out.extend_from_slice(&json_bytes);
    out.extend_from_slice(&(bin.len() as u32).to_le_bytes());
    out.extend_from_slice(&CHUNK_BIN.to_le_bytes());
    out.extend_from_slice(&bin);
    out
}
