//! Per-vertex and per-face label files: one integer per line.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::mesh::vertex_adjacency;
use crate::{Error, Mesh, Result};

pub type Label = u8;

/// 0 background/skin, 1 eyebrow, 2 eye, 3 nose, 4 mouth.
pub const NUM_CLASSES: usize = 5;

pub const CLASS_NAMES: [&str; NUM_CLASSES] = ["background", "eyebrow", "eye", "nose", "mouth"];

pub fn parse_labels(text: &str, origin: &str) -> Result<Vec<Label>> {
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| {
            l.trim()
                .parse::<u8>()
                .ok()
                .filter(|&v| (v as usize) < NUM_CLASSES)
                .ok_or_else(|| Error::Parse {
                    path: origin.into(),
                    line: i + 1,
                    message: format!("label `{}` is not in 0..{}", l.trim(), NUM_CLASSES),
                })
        })
        .collect()
}

pub fn read_labels(path: impl AsRef<Path>) -> Result<Vec<Label>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels(&text, &path.display().to_string())
}

pub fn format_labels(labels: &[Label]) -> String {
    let mut s = String::with_capacity(labels.len() * 2);
    for l in labels {
        let _ = writeln!(s, "{l}");
    }
    s
}

pub fn write_labels(labels: &[Label], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, format_labels(labels)).map_err(|e| Error::io(path, e))
}

/// Face labels from vertex labels by majority vote; three distinct labels
/// resolve to the label of the face's lowest-index vertex.
pub fn faces_from_vertex_labels(faces: &[[usize; 3]], vertex_labels: &[Label]) -> Vec<Label> {
    faces
        .iter()
        .map(|f| {
            let [a, b, c] = f.map(|i| vertex_labels[i]);
            if a == b || a == c {
                a
            } else if b == c {
                b
            } else {
                vertex_labels[*f.iter().min().unwrap()]
            }
        })
        .collect()
}

/// Labels for a mesh that gained vertices after `labels` was written (hole
/// filling appends them): each new vertex takes the most common label among
/// its originally labeled neighbours, ties to the smaller label, 0 if it
/// has none.
pub fn extend_labels(mesh: &Mesh, labels: &[Label]) -> Result<Vec<Label>> {
    if labels.len() > mesh.vertex_count() {
        return Err(Error::DimensionMismatch(format!(
            "{} labels for {} vertices",
            labels.len(),
            mesh.vertex_count()
        )));
    }
    let adj = vertex_adjacency(mesh);
    let mut out = labels.to_vec();
    for v in labels.len()..mesh.vertex_count() {
        let mut votes = [0usize; NUM_CLASSES];
        for &u in adj[v].iter().filter(|&&u| u < labels.len()) {
            votes[labels[u] as usize] += 1;
        }
        let best = (0..NUM_CLASSES).rev().max_by_key(|&l| votes[l]).unwrap();
        out.push(best as Label);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fixtures;
    use crate::mesh::fill_holes;

    #[test]
    fn fill_vertices_take_ring_majority() {
        let g = fixtures::holed_grid(11);
        let labels: Vec<Label> = (0..g.vertex_count()).map(|v| if v % 11 < 5 { 2 } else { 4 }).collect();
        let filled = fill_holes(&g).unwrap();
        assert_eq!(filled.vertex_count(), g.vertex_count() + 1);
        let ext = extend_labels(&filled, &labels).unwrap();
        assert_eq!(&ext[..labels.len()], &labels[..]);
        let ring = &vertex_adjacency(&filled)[g.vertex_count()];
        let twos = ring.iter().filter(|&&u| labels[u] == 2).count();
        let expect = if 2 * twos >= ring.len() { 2 } else { 4 };
        assert_eq!(ext[g.vertex_count()], expect);
        assert!(extend_labels(&g, &vec![0; g.vertex_count() + 1]).is_err());
    }

    #[test]
    fn round_trip_and_range() {
        let l = vec![0, 4, 2, 1];
        assert_eq!(parse_labels(&format_labels(&l), "x").unwrap(), l);
        assert!(parse_labels("0\n5\n", "x").is_err());
    }

    #[test]
    fn majority_vote() {
        let faces = [[0, 1, 2], [3, 1, 2], [2, 0, 3]];
        let labels = [1, 1, 2, 3];
        assert_eq!(faces_from_vertex_labels(&faces, &labels), vec![1, 1, 1]);
    }
}
