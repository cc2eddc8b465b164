//! OBJ subset with vertex colors: `v x y z r g b` and `f i j k` (1-based).

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use log::warn;

use super::{Color, Face, Mesh, Point3};
use crate::{Error, Result};

pub fn load_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_mesh(&text, &path.display().to_string())
}

/// Parses mesh text. `origin` names the source in error messages.
pub fn parse_mesh(text: &str, origin: &str) -> Result<Mesh> {
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_string(),
        line,
        message,
    };

    let mut vertices: Vec<Point3> = Vec::new();
    let mut colors: Vec<Color> = Vec::new();
    let mut faces: Vec<(usize, Face)> = Vec::new();
    let mut ignored = BTreeSet::new();
    let mut colorless = 0usize;

    for (idx, raw) in text.lines().enumerate() {
        let lineno = idx + 1;
        let line = raw.split('#').next().unwrap_or("").trim();
        let mut tokens = line.split_whitespace();
        let Some(tag) = tokens.next() else { continue };
        match tag {
            "v" => {
                let values = tokens
                    .map(|t| {
                        t.parse::<f64>()
                            .map_err(|_| err(lineno, format!("bad number `{t}`")))
                    })
                    .collect::<Result<Vec<f64>>>()?;
                let (p, c) = match values.len() {
                    6 => (
                        [values[0], values[1], values[2]],
                        [values[3], values[4], values[5]],
                    ),
                    3 => {
                        colorless += 1;
                        ([values[0], values[1], values[2]], [0.5; 3])
                    }
                    n => return Err(err(lineno, format!("vertex needs 3 or 6 numbers, got {n}"))),
                };
                if p.iter().any(|x| !x.is_finite()) {
                    return Err(err(lineno, "non-finite coordinate".into()));
                }
                if c.iter().any(|x| !(0.0..=1.0).contains(x)) {
                    return Err(err(lineno, "color component outside [0, 1]".into()));
                }
                vertices.push(p);
                colors.push(c);
            }
            "f" => {
                let idx = tokens
                    .map(|t| {
                        let head = t.split('/').next().unwrap_or(t);
                        head.parse::<usize>()
                            .ok()
                            .filter(|&i| i >= 1)
                            .map(|i| i - 1)
                            .ok_or_else(|| err(lineno, format!("bad face index `{t}`")))
                    })
                    .collect::<Result<Vec<usize>>>()?;
                if idx.len() != 3 {
                    return Err(err(
                        lineno,
                        format!("only triangles are supported, got {} indices", idx.len()),
                    ));
                }
                faces.push((lineno, [idx[0], idx[1], idx[2]]));
            }
            other => {
                ignored.insert(other.to_string());
            }
        }
    }

    for tag in &ignored {
        warn!("{origin}: ignoring unsupported directive `{tag}`");
    }
    if colorless > 0 {
        warn!("{origin}: {colorless} vertices without color, using grey");
    }

    let n = vertices.len();
    for &(lineno, f) in &faces {
        if let Some(&bad) = f.iter().find(|&&i| i >= n) {
            return Err(err(
                lineno,
                format!("face index {} out of range (mesh has {n} vertices)", bad + 1),
            ));
        }
        if f[0] == f[1] || f[1] == f[2] || f[0] == f[2] {
            return Err(err(lineno, "degenerate face repeats a vertex".into()));
        }
    }
    Mesh::new(vertices, colors, faces.into_iter().map(|(_, f)| f).collect())
}

/// Nine significant digits, fixed notation for moderate exponents and
/// scientific otherwise. Parsing the output and formatting again is stable.
pub fn format_sig9(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return if x == 0.0 { "0".into() } else { format!("{x}") };
    }
    let sci = format!("{x:.8e}");
    let exp: i32 = sci
        .rsplit('e')
        .next()
        .and_then(|e| e.parse().ok())
        .unwrap_or(0);
    if (-5..9).contains(&exp) {
        let decimals = (8 - exp).max(0) as usize;
        let s = format!("{x:.decimals$}");
        if s.contains('.') {
            s.trim_end_matches('0').trim_end_matches('.').to_string()
        } else {
            s
        }
    } else {
        sci
    }
}

pub fn write_mesh(mesh: &Mesh) -> String {
    let mut out = String::with_capacity(mesh.vertex_count() * 64 + mesh.face_count() * 24);
    for (p, c) in mesh.vertices().iter().zip(mesh.colors()) {
        let _ = writeln!(
            out,
            "v {} {} {} {} {} {}",
            format_sig9(p[0]),
            format_sig9(p[1]),
            format_sig9(p[2]),
            format_sig9(c[0]),
            format_sig9(c[1]),
            format_sig9(c[2])
        );
    }
    for f in mesh.faces() {
        let _ = writeln!(out, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    out
}

pub fn save_mesh(mesh: &Mesh, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    fs::write(path, write_mesh(mesh)).map_err(|e| Error::io(path, e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn minimal_triangle() {
        let m = parse_mesh(
            "# tri\nv 0 0 0 1 0 0\nv 1 0 0 0 1 0\nv 0 1 0 0 0 1\nf 1 2 3\n",
            "t",
        )
        .unwrap();
        assert_eq!(m.vertex_count(), 3);
        assert_eq!(m.faces(), &[[0, 1, 2]]);
        assert_eq!(m.colors()[1], [0.0, 1.0, 0.0]);
    }

    #[test]
    fn out_of_range_face_names_line() {
        let e = parse_mesh(
            "v 0 0 0 1 0 0\nv 1 0 0 0 1 0\nv 0 1 0 0 0 1\nf 1 2 4\n",
            "t",
        )
        .unwrap_err();
        match e {
            Error::Parse { line, .. } => assert_eq!(line, 4),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn malformed_line_and_bad_color() {
        assert!(matches!(
            parse_mesh("v 0 0 x 1 1 1\n", "t"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_mesh("v 0 0 0 1 1 1\nv 0 0 0 1.5 0 0\n", "t"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(parse_mesh("v 0 0 0 1 1 1\nv 1 0 0 1 1 1\nv 0 1 0 1 1 1\nv 1 1 0 1 1 1\nf 1 2 3 4\n", "t").is_err());
    }

    #[test]
    fn unknown_directives_are_ignored() {
        let m = parse_mesh(
            "o face\nvn 0 0 1\nv 0 0 0 1 1 1\nv 1 0 0 1 1 1\nv 0 1 0 1 1 1\nf 1 2 3\n",
            "t",
        )
        .unwrap();
        assert_eq!(m.face_count(), 1);
    }

    #[test]
    fn sig9_formatting() {
        assert_eq!(format_sig9(0.5), "0.5");
        assert_eq!(format_sig9(1.0), "1");
        assert_eq!(format_sig9(-2.0 / 3.0), "-0.666666667");
        assert_eq!(format_sig9(123456789.0), "123456789");
        assert_eq!(format_sig9(1.0e-7), "1.00000000e-7");
    }

    proptest! {
        #[test]
        fn save_load_is_stable(coords in proptest::collection::vec(-1.0e4f64..1.0e4, 9),
                               cols in proptest::collection::vec(0.0f64..=1.0, 9)) {
            let v: Vec<Point3> = coords.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
            let c: Vec<Color> = cols.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
            let m = Mesh::new(v, c, vec![[0, 1, 2]]).unwrap();
            let once = parse_mesh(&write_mesh(&m), "a").unwrap();
            let text = write_mesh(&once);
            let twice = parse_mesh(&text, "b").unwrap();
            prop_assert_eq!(&once, &twice);
            prop_assert_eq!(text, write_mesh(&twice));
            for (a, b) in m.vertices().iter().flatten().zip(once.vertices().iter().flatten()) {
                prop_assert!((a - b).abs() <= 1e-8 * a.abs().max(1e-300));
            }
        }
    }
}
