use std::collections::{BTreeMap, HashMap};

use log::warn;

use super::{distance, Mesh};
use crate::{Error, Result};

/// Counts and boundary structure of a mesh.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TopologyReport {
    pub vertex_count: usize,
    pub edge_count: usize,
    pub face_count: usize,
    pub euler_characteristic: i64,
    pub boundary_loop_count: usize,
    /// Each loop follows the direction of its incident face's edge, so the
    /// surface lies to the left (counter-clockwise seen from +Z).
    pub boundary_loops: Vec<Vec<usize>>,
    pub nonmanifold_edge_count: usize,
}

impl TopologyReport {
    /// Topological disk: one boundary loop, χ = 1, manifold edges.
    pub fn is_disk(&self) -> bool {
        self.euler_characteristic == 1
            && self.boundary_loop_count == 1
            && self.nonmanifold_edge_count == 0
    }

    pub fn require_disk(&self) -> Result<()> {
        if self.is_disk() {
            Ok(())
        } else {
            Err(Error::NotDisk {
                euler: self.euler_characteristic,
                loops: self.boundary_loop_count,
                nonmanifold: self.nonmanifold_edge_count,
            })
        }
    }
}

/// Maps each undirected edge to the directed half-edges that use it.
fn edge_uses(mesh: &Mesh) -> HashMap<(usize, usize), Vec<(usize, usize)>> {
    let mut uses: HashMap<(usize, usize), Vec<(usize, usize)>> = HashMap::new();
    for f in mesh.faces() {
        for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
            uses.entry((a.min(b), a.max(b))).or_default().push((a, b));
        }
    }
    uses
}

pub fn validate_disk_topology(mesh: &Mesh) -> Result<TopologyReport> {
    if mesh.vertex_count() == 0 || mesh.face_count() == 0 {
        return Err(Error::EmptyMesh);
    }
    let uses = edge_uses(mesh);
    let nonmanifold_edge_count = uses.values().filter(|u| u.len() > 2).count();

    let mut outgoing: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for u in uses.values().filter(|u| u.len() == 1) {
        let (a, b) = u[0];
        outgoing.entry(a).or_default().push(b);
    }
    for targets in outgoing.values_mut() {
        targets.sort_unstable();
    }
    let boundary_loops = trace_loops(outgoing);

    let v = mesh.vertex_count() as i64;
    let e = uses.len() as i64;
    let f = mesh.face_count() as i64;
    Ok(TopologyReport {
        vertex_count: mesh.vertex_count(),
        edge_count: uses.len(),
        face_count: mesh.face_count(),
        euler_characteristic: v - e + f,
        boundary_loop_count: boundary_loops.len(),
        boundary_loops,
        nonmanifold_edge_count,
    })
}

fn trace_loops(mut outgoing: BTreeMap<usize, Vec<usize>>) -> Vec<Vec<usize>> {
    let mut loops = Vec::new();
    while let Some((&start, _)) = outgoing.iter().find(|(_, t)| !t.is_empty()) {
        let mut cycle = vec![start];
        let mut current = start;
        loop {
            let next = match outgoing.get_mut(&current) {
                Some(t) if !t.is_empty() => t.remove(0),
                _ => {
                    warn!("open boundary chain at vertex {current}; orientation is inconsistent");
                    break;
                }
            };
            if next == start {
                break;
            }
            cycle.push(next);
            current = next;
        }
        loops.push(cycle);
    }
    loops
}

/// Sorted one-ring neighbors per vertex.
pub fn vertex_adjacency(mesh: &Mesh) -> Vec<Vec<usize>> {
    let mut adj = vec![Vec::new(); mesh.vertex_count()];
    for f in mesh.faces() {
        for (a, b) in [(f[0], f[1]), (f[1], f[2]), (f[2], f[0])] {
            adj[a].push(b);
            adj[b].push(a);
        }
    }
    for n in &mut adj {
        n.sort_unstable();
        n.dedup();
    }
    adj
}

fn loop_perimeter(mesh: &Mesh, lp: &[usize]) -> f64 {
    let p = mesh.vertices();
    (0..lp.len())
        .map(|i| distance(p[lp[i]], p[lp[(i + 1) % lp.len()]]))
        .sum()
}

/// Closes every boundary loop except the outline by a fan around a new
/// vertex at the loop's mean position and mean color.
///
/// The outline is the loop with the most vertices; equal counts are broken
/// by the longer 3D perimeter.
pub fn fill_holes(mesh: &Mesh) -> Result<Mesh> {
    let report = validate_disk_topology(mesh)?;
    if let Some(short) = report.boundary_loops.iter().find(|l| l.len() < 3) {
        return Err(Error::ShortLoop(short.len()));
    }
    if report.boundary_loop_count <= 1 {
        return Ok(mesh.clone());
    }

    let keep = report
        .boundary_loops
        .iter()
        .enumerate()
        .max_by(|(ia, a), (ib, b)| {
            a.len()
                .cmp(&b.len())
                .then(loop_perimeter(mesh, a).total_cmp(&loop_perimeter(mesh, b)))
                // the earlier loop wins a complete tie
                .then(ib.cmp(ia))
        })
        .map(|(i, _)| i)
        .unwrap_or(0);

    let (mut vertices, mut colors, mut faces) = mesh.clone().into_parts();
    for (i, lp) in report.boundary_loops.iter().enumerate() {
        if i == keep {
            continue;
        }
        let n = lp.len() as f64;
        let mut centroid = [0.0; 3];
        let mut color = [0.0; 3];
        for &v in lp {
            for k in 0..3 {
                centroid[k] += vertices[v][k] / n;
                color[k] += colors[v][k] / n;
            }
        }
        let c = vertices.len();
        vertices.push(centroid);
        colors.push(color.map(|x: f64| x.clamp(0.0, 1.0)));
        // boundary half-edge a->b belongs to an existing face, so the new
        // face runs b->a to keep orientation consistent
        for j in 0..lp.len() {
            let a = lp[j];
            let b = lp[(j + 1) % lp.len()];
            faces.push([b, a, c]);
        }
    }
    Ok(Mesh::from_parts_unchecked(vertices, colors, faces))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;

    #[test]
    fn single_triangle() {
        let m = Mesh::from_geometry(
            vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0]],
            vec![[0, 1, 2]],
        )
        .unwrap();
        let r = validate_disk_topology(&m).unwrap();
        assert_eq!((r.vertex_count, r.edge_count, r.face_count), (3, 3, 1));
        assert_eq!(r.euler_characteristic, 1);
        assert_eq!(r.boundary_loops, vec![vec![0, 1, 2]]);
        assert!(r.is_disk());
        let adj = vertex_adjacency(&m);
        assert_eq!(adj, vec![vec![1, 2], vec![0, 2], vec![0, 1]]);
    }

    #[test]
    fn closed_tetrahedron_is_not_a_disk() {
        let m = Mesh::from_geometry(
            vec![[0.0; 3], [1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
            vec![[0, 2, 1], [0, 1, 3], [1, 2, 3], [0, 3, 2]],
        )
        .unwrap();
        let r = validate_disk_topology(&m).unwrap();
        assert_eq!(r.euler_characteristic, 2);
        assert_eq!(r.boundary_loop_count, 0);
        assert!(r.require_disk().is_err());
    }

    #[test]
    fn grid_counts() {
        let m = fixtures::plane_grid(10, 1.0);
        let r = validate_disk_topology(&m).unwrap();
        assert_eq!((r.vertex_count, r.edge_count, r.face_count), (100, 261, 162));
        assert_eq!(r.euler_characteristic, 1);
        assert_eq!(r.boundary_loops[0].len(), 36);
        let adj = vertex_adjacency(&m);
        assert_eq!(adj[5 * 10 + 5].len(), 6);
    }

    #[test]
    fn removing_an_interior_face_opens_a_second_loop() {
        let m = fixtures::plane_grid(10, 1.0);
        let (v, c, mut f) = m.into_parts();
        // a face whose vertices are all interior
        let idx = f
            .iter()
            .position(|t| t.iter().all(|&i| (1..9).contains(&(i / 10)) && (1..9).contains(&(i % 10))))
            .unwrap();
        f.remove(idx);
        let holed = Mesh::new(v, c, f).unwrap();
        let r = validate_disk_topology(&holed).unwrap();
        assert_eq!(r.euler_characteristic, 0);
        assert_eq!(r.boundary_loop_count, 2);

        let filled = fill_holes(&holed).unwrap();
        let r2 = validate_disk_topology(&filled).unwrap();
        assert_eq!(r2.boundary_loop_count, 1);
        assert_eq!(r2.euler_characteristic, 1);
    }

    #[test]
    fn fill_six_vertex_hole() {
        let m = fixtures::holed_grid(11);
        let r = validate_disk_topology(&m).unwrap();
        assert_eq!(r.euler_characteristic, 0);
        let mut lens: Vec<usize> = r.boundary_loops.iter().map(Vec::len).collect();
        lens.sort();
        assert_eq!(lens, vec![6, 40]);

        let filled = fill_holes(&m).unwrap();
        assert_eq!(filled.vertex_count(), m.vertex_count() + 1);
        assert_eq!(filled.face_count(), m.face_count() + 6);
        let r2 = validate_disk_topology(&filled).unwrap();
        assert!(r2.is_disk());
        // the new faces agree in orientation with their neighbours
        assert_eq!(r2.nonmanifold_edge_count, 0);
        let hole_center = filled.vertices()[filled.vertex_count() - 1];
        assert!((hole_center[0] - 5.0).abs() < 1e-12 && (hole_center[1] - 5.0).abs() < 1e-12);
    }

    #[test]
    fn single_loop_is_unchanged() {
        let m = fixtures::plane_grid(5, 1.0);
        assert_eq!(fill_holes(&m).unwrap(), m);
    }

    #[test]
    fn equal_length_loops_keep_longer_perimeter() {
        // two disjoint triangles, one larger
        let m = Mesh::from_geometry(
            vec![
                [0.0; 3],
                [1.0, 0.0, 0.0],
                [0.0, 1.0, 0.0],
                [10.0, 0.0, 0.0],
                [13.0, 0.0, 0.0],
                [10.0, 3.0, 0.0],
            ],
            vec![[0, 1, 2], [3, 4, 5]],
        )
        .unwrap();
        let filled = fill_holes(&m).unwrap();
        // the small triangle got capped from the back
        assert_eq!(filled.vertex_count(), 7);
        let r = validate_disk_topology(&filled).unwrap();
        assert_eq!(r.boundary_loop_count, 1);
        assert_eq!(r.boundary_loops[0].len(), 3);
        assert!(r.boundary_loops[0].iter().all(|&v| (3..6).contains(&v)));
    }

    #[test]
    fn empty_mesh_is_an_error() {
        let m = Mesh::from_geometry(vec![], vec![]).unwrap();
        assert!(matches!(validate_disk_topology(&m), Err(Error::EmptyMesh)));
    }

    #[test]
    fn adjacency_is_symmetric() {
        let m = fixtures::hemisphere(6);
        let adj = vertex_adjacency(&m);
        for (u, n) in adj.iter().enumerate() {
            for &v in n {
                assert!(adj[v].binary_search(&u).is_ok());
            }
        }
    }

    #[test]
    fn euler_matches_independent_count() {
        for m in [fixtures::hemisphere(5), fixtures::planar_disk(7), fixtures::holed_grid(9)] {
            let r = validate_disk_topology(&m).unwrap();
            let mut e = std::collections::HashSet::new();
            for f in m.faces() {
                for k in 0..3 {
                    let (a, b) = (f[k], f[(k + 1) % 3]);
                    e.insert((a.min(b), a.max(b)));
                }
            }
            let chi = m.vertex_count() as i64 - e.len() as i64 + m.face_count() as i64;
            assert_eq!(r.euler_characteristic, chi);
        }
    }
}
