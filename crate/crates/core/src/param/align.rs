use std::f64::consts::FRAC_PI_2;

use log::warn;

use super::ParamMap;
use crate::mesh::Mesh;

/// Counter-clockwise angle that turns the chord from the lowest-y vertex to
/// the highest-y vertex (3D, lowest index on ties) onto `+v`. Zero when the
/// two map to the same point.
pub fn alignment_angle(mesh: &Mesh, map: &ParamMap) -> f64 {
    let pos = mesh.vertices();
    let n = pos.len();
    if n == 0 {
        return 0.0;
    }
    let top = (0..n)
        .max_by(|&a, &b| pos[a][1].total_cmp(&pos[b][1]).then(b.cmp(&a)))
        .unwrap();
    let bottom = (0..n)
        .min_by(|&a, &b| pos[a][1].total_cmp(&pos[b][1]).then(a.cmp(&b)))
        .unwrap();
    let d = [
        map.uv[top][0] - map.uv[bottom][0],
        map.uv[top][1] - map.uv[bottom][1],
    ];
    if d[0] == 0.0 && d[1] == 0.0 {
        warn!("top and bottom vertices coincide in the map; rotation skipped");
        return 0.0;
    }
    FRAC_PI_2 - d[1].atan2(d[0])
}

/// Rotates the map about the origin so the forehead-to-chin chord points
/// along `+v`. No reflection or scaling.
pub fn align_rotation(mesh: &Mesh, map: &ParamMap) -> ParamMap {
    let angle = alignment_angle(mesh, map);
    if angle == 0.0 {
        return map.clone();
    }
    map.rotated(angle)
}
