use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_xoshiro::SplitMix64;

use crate::{Error, Result};

/// Smallest accepted signed triangle area.
pub const MIN_AREA: f64 = 1e-14;

/// A validated triangle mesh with counterclockwise elements.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub nodes: Vec<[f64; 2]>,
    pub triangles: Vec<[usize; 3]>,
    pub boundary: Vec<bool>,
    /// Characteristic domain length used for spacing-based bounds.
    pub length: f64,
}

pub(crate) fn signed_area(p: [f64; 2], q: [f64; 2], r: [f64; 2]) -> f64 {
    0.5 * ((q[0] - p[0]) * (r[1] - p[1]) - (r[0] - p[0]) * (q[1] - p[1]))
}

impl Mesh {
    pub fn new(
        nodes: Vec<[f64; 2]>,
        triangles: Vec<[usize; 3]>,
        boundary: Vec<bool>,
        length: f64,
    ) -> Result<Self> {
        let mesh = Self {
            nodes,
            triangles,
            boundary,
            length,
        };
        mesh.validate()?;
        Ok(mesh)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.nodes.len();
        if self.boundary.len() != n {
            return Err(Error::Mesh(format!(
                "{} boundary flags for {} nodes",
                self.boundary.len(),
                n
            )));
        }
        if !(self.length > 0.0 && self.length.is_finite()) {
            return Err(Error::Mesh(format!("length {} must be positive", self.length)));
        }
        if self.nodes.iter().flatten().any(|c| !c.is_finite()) {
            return Err(Error::Mesh("non-finite node coordinate".into()));
        }
        for (t, tri) in self.triangles.iter().enumerate() {
            if let Some(&bad) = tri.iter().find(|&&v| v >= n) {
                return Err(Error::Mesh(format!("triangle {t} references node {bad} of {n}")));
            }
            let area = self.area(t);
            if !(area > MIN_AREA) {
                return Err(Error::DegenerateTriangle { index: t, area });
            }
        }
        for ((a, b), count) in self.edge_counts() {
            if count > 2 {
                return Err(Error::Mesh(format!("edge ({a}, {b}) shared by {count} triangles")));
            }
            if count == 1 && !(self.boundary[a] && self.boundary[b]) {
                return Err(Error::Mesh(format!(
                    "boundary edge ({a}, {b}) has an endpoint not flagged as boundary"
                )));
            }
        }
        Ok(())
    }

    pub fn area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangles[t];
        signed_area(self.nodes[a], self.nodes[b], self.nodes[c])
    }

    /// Number of triangles using each undirected edge, keyed `(min, max)`.
    pub fn edge_counts(&self) -> HashMap<(usize, usize), usize> {
        let mut counts = HashMap::new();
        for tri in &self.triangles {
            for k in 0..3 {
                let (a, b) = (tri[k], tri[(k + 1) % 3]);
                *counts.entry((a.min(b), a.max(b))).or_insert(0) += 1;
            }
        }
        counts
    }

    /// Lengths of all distinct edges, in a deterministic order.
    pub fn edge_lengths(&self) -> Vec<f64> {
        let mut edges: Vec<_> = self.edge_counts().into_keys().collect();
        edges.sort_unstable();
        edges
            .into_iter()
            .map(|(a, b)| {
                let (p, q) = (self.nodes[a], self.nodes[b]);
                (p[0] - q[0]).hypot(p[1] - q[1])
            })
            .collect()
    }

    pub fn interior_count(&self) -> usize {
        self.boundary.iter().filter(|&&b| !b).count()
    }

    /// Parses the text format; `source` only labels error messages.
    pub fn parse(text: &str, source: &Path) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse {
            path: source.to_path_buf(),
            line,
            msg,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty());
        let (ln, head) = lines.next().ok_or_else(|| err(1, "empty file".into()))?;
        let length = head
            .strip_prefix("mesh v1 L=")
            .ok_or_else(|| err(ln, format!("expected `mesh v1 L=<real>`, got `{head}`")))?
            .trim()
            .parse::<f64>()
            .map_err(|e| err(ln, format!("bad length: {e}")))?;

        let (ln, counts) = lines.next().ok_or_else(|| err(ln + 1, "missing counts line".into()))?;
        let counts: Vec<usize> = counts
            .split_whitespace()
            .map(|t| t.parse::<usize>())
            .collect::<std::result::Result<_, _>>()
            .map_err(|e| err(ln, format!("bad counts: {e}")))?;
        let [nn, nt] = counts[..] else {
            return Err(err(ln, "expected `<num_nodes> <num_triangles>`".into()));
        };

        let mut nodes = Vec::with_capacity(nn);
        let mut boundary = Vec::with_capacity(nn);
        for k in 0..nn {
            let (ln, l) = lines.next().ok_or_else(|| err(0, format!("missing node line {k}")))?;
            let f: Vec<&str> = l.split_whitespace().collect();
            if f.len() != 3 {
                return Err(err(ln, "expected `x y boundary_flag`".into()));
            }
            let x = f[0].parse::<f64>().map_err(|e| err(ln, e.to_string()))?;
            let y = f[1].parse::<f64>().map_err(|e| err(ln, e.to_string()))?;
            let flag = match f[2] {
                "0" => false,
                "1" => true,
                other => return Err(err(ln, format!("boundary flag must be 0 or 1, got `{other}`"))),
            };
            nodes.push([x, y]);
            boundary.push(flag);
        }
        let mut triangles = Vec::with_capacity(nt);
        for k in 0..nt {
            let (ln, l) = lines.next().ok_or_else(|| err(0, format!("missing triangle line {k}")))?;
            let v: Vec<usize> = l
                .split_whitespace()
                .map(|t| t.parse::<usize>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| err(ln, e.to_string()))?;
            let [a, b, c] = v[..] else {
                return Err(err(ln, "expected `i j k`".into()));
            };
            triangles.push([a, b, c]);
        }
        if let Some((ln, _)) = lines.next() {
            return Err(err(ln, "trailing content".into()));
        }
        Self::new(nodes, triangles, boundary, length)
    }

    pub fn write<W: Write>(&self, mut w: W) -> Result<()> {
        writeln!(w, "mesh v1 L={}", self.length)?;
        writeln!(w, "{} {}", self.nodes.len(), self.triangles.len())?;
        for (p, &b) in self.nodes.iter().zip(&self.boundary) {
            writeln!(w, "{:.17e} {:.17e} {}", p[0], p[1], b as u8)?;
        }
        for t in &self.triangles {
            writeln!(w, "{} {} {}", t[0], t[1], t[2])?;
        }
        Ok(())
    }
}

pub fn read_mesh(path: impl AsRef<Path>) -> Result<Mesh> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path)?;
    Mesh::parse(&text, path)
}

/// Structured triangulation of the unit square with jittered interior nodes.
///
/// `nx` and `ny` count cells per direction. Interior nodes move by
/// `uniform(-jitter, jitter)` times the local spacing; a draw that produces a
/// degenerate element is discarded and redrawn, at most 100 times.
pub fn perturbed_mesh(nx: usize, ny: usize, jitter: f64, seed: u64) -> Result<Mesh> {
    if nx < 2 || ny < 2 {
        return Err(Error::Invalid(format!("perturbed_mesh needs nx, ny >= 2, got {nx}x{ny}")));
    }
    if !(0.0..=0.49).contains(&jitter) {
        return Err(Error::Invalid(format!("jitter {jitter} outside [0, 0.49]")));
    }
    let (hx, hy) = (1.0 / nx as f64, 1.0 / ny as f64);
    let id = |i: usize, j: usize| i + (nx + 1) * j;
    let mut base = Vec::with_capacity((nx + 1) * (ny + 1));
    let mut boundary = Vec::with_capacity(base.capacity());
    for j in 0..=ny {
        for i in 0..=nx {
            base.push([i as f64 * hx, j as f64 * hy]);
            boundary.push(i == 0 || j == 0 || i == nx || j == ny);
        }
    }
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    let mut rng = SplitMix64::seed_from_u64(seed);
    let mut last = None;
    for _ in 0..100 {
        let nodes: Vec<[f64; 2]> = base
            .iter()
            .zip(&boundary)
            .map(|(&[x, y], &b)| {
                let dx = rng.random_range(-1.0..=1.0) * jitter * hx;
                let dy = rng.random_range(-1.0..=1.0) * jitter * hy;
                if b {
                    [x, y]
                } else {
                    [x + dx, y + dy]
                }
            })
            .collect();
        match Mesh::new(nodes, triangles.clone(), boundary.clone(), 1.0) {
            Ok(m) => return Ok(m),
            Err(e @ Error::DegenerateTriangle { .. }) => last = Some(e),
            Err(e) => return Err(e),
        }
    }
    Err(last.expect("at least one attempt"))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_square_two_triangles() -> Mesh {
        Mesh::new(
            vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]],
            vec![[0, 1, 2], [0, 2, 3]],
            vec![true; 4],
            1.0,
        )
        .unwrap()
    }

    #[test]
    fn rejects_clockwise_and_bad_indices() {
        let m = unit_square_two_triangles();
        let mut cw = m.clone();
        cw.triangles[1] = [0, 3, 2];
        assert!(matches!(cw.validate(), Err(Error::DegenerateTriangle { index: 1, .. })));
        let mut oob = m.clone();
        oob.triangles[0][2] = 9;
        assert!(matches!(oob.validate(), Err(Error::Mesh(_))));
        let mut flag = m;
        flag.boundary[1] = false;
        assert!(matches!(flag.validate(), Err(Error::Mesh(_))));
    }

    #[test]
    fn text_round_trip() {
        let m = perturbed_mesh(4, 3, 0.2, 11).unwrap();
        let mut buf = Vec::new();
        m.write(&mut buf).unwrap();
        let back = Mesh::parse(std::str::from_utf8(&buf).unwrap(), Path::new("mem")).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        let text = "mesh v1 L=1\n3 1\n0 0 1\n1 0 1\n0 1 x\n0 1 2\n";
        match Mesh::parse(text, Path::new("bad.mesh")) {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 5),
            other => panic!("{other:?}"),
        }
        assert!(matches!(Mesh::parse("mesh v2\n", Path::new("x")), Err(Error::Parse { line: 1, .. })));
        let degenerate = "mesh v1 L=1\n3 1\n0 0 1\n1 0 1\n2 0 1\n0 1 2\n";
        assert!(matches!(
            Mesh::parse(degenerate, Path::new("x")),
            Err(Error::DegenerateTriangle { .. })
        ));
        assert!(matches!(read_mesh("/nonexistent/file.mesh"), Err(Error::Io(_))));
    }

    #[test]
    fn perturbed_without_jitter_is_structured() {
        let m = perturbed_mesh(3, 2, 0.0, 5).unwrap();
        assert_eq!(m.nodes.len(), 12);
        assert_eq!(m.triangles.len(), 12);
        assert_eq!(m.nodes[5], [1.0 / 3.0, 0.5]);
        assert_eq!(m.interior_count(), 2);
        for t in 0..m.triangles.len() {
            assert!((m.area(t) - 1.0 / 12.0).abs() < 1e-15);
        }
    }

    #[test]
    fn perturbed_is_seeded() {
        let a = perturbed_mesh(6, 6, 0.3, 9).unwrap();
        assert_eq!(a, perturbed_mesh(6, 6, 0.3, 9).unwrap());
        assert_ne!(a, perturbed_mesh(6, 6, 0.3, 10).unwrap());
        let total: f64 = (0..a.triangles.len()).map(|t| a.area(t)).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(perturbed_mesh(1, 4, 0.1, 0).is_err());
        assert!(perturbed_mesh(4, 4, 0.5, 0).is_err());
    }
}
