//! Triangulated cross-sections: built-in shapes, the ASCII mesh format and
//! normalization to the centroid/principal-axis/unit-area frame.

use std::collections::{BTreeMap, VecDeque};
use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum MeshError {
    #[error("invalid resolution {0}: must be >= 1")]
    Resolution(usize),
    #[error("invalid rectangle aspect ratio {0}: must be finite and > 0")]
    Aspect(f64),
    #[error("mesh file {path}: {reason}")]
    Parse { path: String, reason: String },
    #[error("cannot read mesh file {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("triangle {index} references node {node} but the mesh has {count} nodes")]
    IndexOutOfRange { index: usize, node: usize, count: usize },
    #[error("triangle {0} is degenerate (zero area)")]
    Degenerate(usize),
    #[error("node {0} is not referenced by any triangle")]
    UnusedNode(usize),
    #[error("mesh is not connected")]
    Disconnected,
    #[error("mesh has zero total area")]
    ZeroArea,
    #[error("mesh has no triangles")]
    Empty,
}

/// Triangulation of the cross-section `S` in the `(x₂, x₃)` plane.
#[derive(Debug, Clone, PartialEq)]
pub struct CrossSectionMesh {
    nodes: Vec<[f64; 2]>,
    triangles: Vec<[usize; 3]>,
    boundary: Vec<[usize; 2]>,
}

/// Area moments of a section in its current coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeometricReport {
    pub area: f64,
    pub c2: f64,
    pub c3: f64,
    /// `∫ x₂²`
    pub i2: f64,
    /// `∫ x₃²`
    pub i3: f64,
    /// `∫ x₂ x₃`
    pub i23: f64,
    /// `μ(S) = I₂ + I₃`
    pub mu_s: f64,
    /// Length scale applied by normalization (1 when the input already had unit area).
    pub scale: f64,
    /// Rotation angle (radians) applied to reach principal axes.
    pub rotation: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum BuiltinShape {
    Disk { resolution: usize },
    Square { resolution: usize },
    Rectangle { resolution: usize, aspect: f64 },
}

/// Section source in configuration files: a built-in shape or a mesh file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "shape", rename_all = "snake_case", deny_unknown_fields)]
pub enum SectionSpec {
    Disk { resolution: usize },
    Square { resolution: usize },
    Rectangle { resolution: usize, aspect: f64 },
    /// Mesh file; relative paths resolve against the directory of the referring file.
    File { mesh: PathBuf },
}

impl SectionSpec {
    /// Builds and normalizes the section.
    pub fn build(&self, base_dir: &Path) -> Result<(CrossSectionMesh, GeometricReport), MeshError> {
        let raw = match self {
            SectionSpec::Disk { resolution } => CrossSectionMesh::generate(BuiltinShape::Disk {
                resolution: *resolution,
            })?,
            SectionSpec::Square { resolution } => CrossSectionMesh::generate(BuiltinShape::Square {
                resolution: *resolution,
            })?,
            SectionSpec::Rectangle { resolution, aspect } => CrossSectionMesh::generate(BuiltinShape::Rectangle {
                resolution: *resolution,
                aspect: *aspect,
            })?,
            SectionSpec::File { mesh } => CrossSectionMesh::load(&base_dir.join(mesh))?,
        };
        raw.normalize()
    }
}

fn signed_area(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    0.5 * ((b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]))
}

impl CrossSectionMesh {
    /// Validates the triangulation; clockwise triangles are reoriented.
    pub fn new(nodes: Vec<[f64; 2]>, mut triangles: Vec<[usize; 3]>) -> Result<Self, MeshError> {
        if triangles.is_empty() {
            return Err(MeshError::Empty);
        }
        let n = nodes.len();
        let mut used = vec![false; n];
        for (index, tri) in triangles.iter_mut().enumerate() {
            for &node in tri.iter() {
                if node >= n {
                    return Err(MeshError::IndexOutOfRange { index, node, count: n });
                }
                used[node] = true;
            }
            let area = signed_area(nodes[tri[0]], nodes[tri[1]], nodes[tri[2]]);
            let scale = tri
                .iter()
                .flat_map(|&i| nodes[i])
                .fold(0.0f64, |m, v| m.max(v.abs()))
                .max(1.0);
            if !area.is_finite() || area.abs() <= 1e-14 * scale * scale {
                return Err(MeshError::Degenerate(index));
            }
            if area < 0.0 {
                tri.swap(1, 2);
            }
        }
        if let Some(i) = used.iter().position(|u| !u) {
            return Err(MeshError::UnusedNode(i));
        }
        let mesh = Self {
            boundary: boundary_edges(&triangles),
            nodes,
            triangles,
        };
        if !mesh.is_connected() {
            return Err(MeshError::Disconnected);
        }
        Ok(mesh)
    }

    pub fn generate(shape: BuiltinShape) -> Result<Self, MeshError> {
        match shape {
            BuiltinShape::Disk { resolution } => disk(resolution),
            BuiltinShape::Square { resolution } => rectangle(resolution, 1.0),
            BuiltinShape::Rectangle { resolution, aspect } => rectangle(resolution, aspect),
        }
    }

    pub fn nodes(&self) -> &[[f64; 2]] {
        &self.nodes
    }

    pub fn triangles(&self) -> &[[usize; 3]] {
        &self.triangles
    }

    pub fn boundary_edges(&self) -> &[[usize; 2]] {
        &self.boundary
    }

    pub fn triangle_coords(&self, t: usize) -> [[f64; 2]; 3] {
        let [a, b, c] = self.triangles[t];
        [self.nodes[a], self.nodes[b], self.nodes[c]]
    }

    pub fn triangle_area(&self, t: usize) -> f64 {
        let [a, b, c] = self.triangle_coords(t);
        signed_area(a, b, c)
    }

    fn is_connected(&self) -> bool {
        let n = self.nodes.len();
        let mut adj = vec![Vec::new(); n];
        for tri in &self.triangles {
            for k in 0..3 {
                adj[tri[k]].push(tri[(k + 1) % 3]);
                adj[tri[(k + 1) % 3]].push(tri[k]);
            }
        }
        let mut seen = vec![false; n];
        let mut queue = VecDeque::from([0usize]);
        seen[0] = true;
        let mut count = 1;
        while let Some(i) = queue.pop_front() {
            for &j in &adj[i] {
                if !seen[j] {
                    seen[j] = true;
                    count += 1;
                    queue.push_back(j);
                }
            }
        }
        count == n
    }

    /// Exact area, centroid and second moments (about the origin of the current frame).
    pub fn moments(&self) -> GeometricReport {
        let (mut area, mut s2, mut s3, mut s22, mut s33, mut s23) = (0.0, 0.0, 0.0, 0.0, 0.0, 0.0);
        for t in 0..self.triangles.len() {
            let p = self.triangle_coords(t);
            let a = self.triangle_area(t);
            let sx = p[0][0] + p[1][0] + p[2][0];
            let sy = p[0][1] + p[1][1] + p[2][1];
            area += a;
            s2 += a * sx / 3.0;
            s3 += a * sy / 3.0;
            // ∫ x_i x_j over a triangle = A/12 (Σ x_i x_j + (Σx_i)(Σx_j))
            let dxx: f64 = p.iter().map(|q| q[0] * q[0]).sum();
            let dyy: f64 = p.iter().map(|q| q[1] * q[1]).sum();
            let dxy: f64 = p.iter().map(|q| q[0] * q[1]).sum();
            s22 += a / 12.0 * (dxx + sx * sx);
            s33 += a / 12.0 * (dyy + sy * sy);
            s23 += a / 12.0 * (dxy + sx * sy);
        }
        GeometricReport {
            area,
            c2: s2 / area,
            c3: s3 / area,
            i2: s22,
            i3: s33,
            i23: s23,
            mu_s: s22 + s33,
            scale: 1.0,
            rotation: 0.0,
        }
    }

    /// Translates the centroid to the origin, rotates to principal axes and scales to unit area.
    pub fn normalize(&self) -> Result<(Self, GeometricReport), MeshError> {
        let raw = self.moments();
        if !(raw.area > 0.0) {
            return Err(MeshError::ZeroArea);
        }
        let (c2, c3) = (raw.c2, raw.c3);
        // central second moments
        let i2 = raw.i2 - raw.area * c2 * c2;
        let i3 = raw.i3 - raw.area * c3 * c3;
        let i23 = raw.i23 - raw.area * c2 * c3;
        let rotation = if i23.abs() <= 1e-14 * (i2 + i3) {
            0.0
        } else {
            0.5 * (2.0 * i23).atan2(i2 - i3)
        };
        let (s, c) = rotation.sin_cos();
        let scale = 1.0 / raw.area.sqrt();
        let nodes = self
            .nodes
            .iter()
            .map(|p| {
                let (x, y) = (p[0] - c2, p[1] - c3);
                [scale * (c * x + s * y), scale * (-s * x + c * y)]
            })
            .collect();
        let mesh = Self {
            nodes,
            triangles: self.triangles.clone(),
            boundary: self.boundary.clone(),
        };
        let mut report = mesh.moments();
        report.scale = scale;
        report.rotation = rotation;
        Ok((mesh, report))
    }

    /// Whether the section already satisfies the centroid, product-moment and unit-area conditions.
    pub fn is_normalized(&self, tol: f64) -> bool {
        let m = self.moments();
        (m.area - 1.0).abs() <= tol
            && (m.c2 * m.area).abs() <= tol
            && (m.c3 * m.area).abs() <= tol
            && m.i23.abs() <= tol * m.mu_s.max(1.0)
    }

    /// `∫_S φ_a` for each P1 nodal basis function.
    pub fn lumped_weights(&self) -> Vec<f64> {
        let mut w = vec![0.0; self.nodes.len()];
        for (t, tri) in self.triangles.iter().enumerate() {
            let a = self.triangle_area(t) / 3.0;
            for &i in tri {
                w[i] += a;
            }
        }
        w
    }

    pub fn parse(text: &str, origin: &str) -> Result<Self, MeshError> {
        let err = |reason: String| MeshError::Parse {
            path: origin.to_string(),
            reason,
        };
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));
        let (ln, header) = lines.next().ok_or_else(|| err("empty file".into()))?;
        let counts: Vec<usize> = header
            .split_whitespace()
            .map(str::parse)
            .collect::<Result<_, _>>()
            .map_err(|e| err(format!("line {ln}: bad header: {e}")))?;
        let [nv, nt] = counts[..] else {
            return Err(err(format!("line {ln}: header must be `nv nt`")));
        };
        let mut nodes = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (ln, line) = lines.next().ok_or_else(|| err("unexpected end of node block".into()))?;
            let v: Vec<f64> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|e| err(format!("line {ln}: {e}")))?;
            match v[..] {
                [x, y] if x.is_finite() && y.is_finite() => nodes.push([x, y]),
                _ => return Err(err(format!("line {ln}: expected two finite coordinates"))),
            }
        }
        let mut triangles = Vec::with_capacity(nt);
        for _ in 0..nt {
            let (ln, line) = lines
                .next()
                .ok_or_else(|| err("unexpected end of triangle block".into()))?;
            let v: Vec<usize> = line
                .split_whitespace()
                .map(str::parse)
                .collect::<Result<_, _>>()
                .map_err(|e| err(format!("line {ln}: {e}")))?;
            match v[..] {
                [i, j, k] => triangles.push([i, j, k]),
                _ => return Err(err(format!("line {ln}: expected three node indices"))),
            }
        }
        if let Some((ln, _)) = lines.next() {
            return Err(err(format!("line {ln}: trailing data after {nt} triangles")));
        }
        Self::new(nodes, triangles)
    }

    pub fn load(path: &Path) -> Result<Self, MeshError> {
        let text = std::fs::read_to_string(path).map_err(|source| MeshError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text, &path.display().to_string())
    }

    pub fn to_text(&self) -> String {
        let mut s = format!("{} {}\n", self.nodes.len(), self.triangles.len());
        for p in &self.nodes {
            let _ = writeln!(s, "{:.16e} {:.16e}", p[0], p[1]);
        }
        for t in &self.triangles {
            let _ = writeln!(s, "{} {} {}", t[0], t[1], t[2]);
        }
        s
    }
}

fn boundary_edges(triangles: &[[usize; 3]]) -> Vec<[usize; 2]> {
    let mut count: BTreeMap<(usize, usize), (usize, [usize; 2])> = BTreeMap::new();
    for tri in triangles {
        for k in 0..3 {
            let (a, b) = (tri[k], tri[(k + 1) % 3]);
            let e = count.entry((a.min(b), a.max(b))).or_insert((0, [a, b]));
            e.0 += 1;
        }
    }
    count.into_values().filter(|(c, _)| *c == 1).map(|(_, e)| e).collect()
}

/// `n × round(aspect·n)` grid on a rectangle of unit height, centered at the origin.
///
/// Diagonals follow the quadrant so the triangulation is mirror-symmetric
/// about both axes whenever the cell counts are even.
fn rectangle(resolution: usize, aspect: f64) -> Result<CrossSectionMesh, MeshError> {
    if resolution == 0 {
        return Err(MeshError::Resolution(resolution));
    }
    if !aspect.is_finite() || aspect <= 0.0 {
        return Err(MeshError::Aspect(aspect));
    }
    let ny = resolution;
    let nx = ((aspect * resolution as f64).round() as usize).max(1);
    let (w, h) = (aspect, 1.0);
    let mut nodes = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            nodes.push([-0.5 * w + w * i as f64 / nx as f64, -0.5 * h + h * j as f64 / ny as f64]);
        }
    }
    let id = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::with_capacity(2 * nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            let cx = (2 * i + 1) as isize - nx as isize;
            let cy = (2 * j + 1) as isize - ny as isize;
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            if cx * cy >= 0 {
                triangles.push([a, b, c]);
                triangles.push([a, c, d]);
            } else {
                triangles.push([a, b, d]);
                triangles.push([b, c, d]);
            }
        }
    }
    CrossSectionMesh::new(nodes, triangles)
}

/// Polygonal unit-area disk with `resolution` rings; ring `k` carries `4k` nodes.
///
/// The first quadrant is stitched ring by ring and mirrored into the other
/// three, so the mesh is symmetric about both coordinate axes.
fn disk(resolution: usize) -> Result<CrossSectionMesh, MeshError> {
    if resolution == 0 {
        return Err(MeshError::Resolution(resolution));
    }
    let n = resolution;
    let radius = 1.0 / PI.sqrt();
    let mut nodes = vec![[0.0, 0.0]];
    for k in 1..=n {
        let r = radius * k as f64 / n as f64;
        for j in 0..4 * k {
            let phi = FRAC_PI_2 * j as f64 / k as f64;
            nodes.push([r * phi.cos(), r * phi.sin()]);
        }
    }
    // (ring, position) -> node index
    let id = |k: usize, j: usize| if k == 0 { 0 } else { 1 + 2 * k * (k - 1) + j % (4 * k) };
    let mirror2 = |k: usize, j: usize| if k == 0 { 0 } else { (2 * k + 4 * k - j) % (4 * k) };
    let mirror3 = |k: usize, j: usize| if k == 0 { 0 } else { (4 * k - j) % (4 * k) };

    let mut quadrant: Vec<[(usize, usize); 3]> = Vec::new();
    for k in 1..=n {
        let inner = k - 1;
        let (mut i, mut j) = (0usize, 0usize);
        // inner ring spans positions 0..=inner in the quadrant, outer 0..=k
        while i < inner || j < k {
            let advance_outer = if i == inner {
                true
            } else if j == k {
                false
            } else {
                // compare angles of the next candidates: (j+1)/k vs (i+1)/inner
                (j + 1) * inner <= (i + 1) * k
            };
            if advance_outer {
                quadrant.push([(inner, i), (k, j), (k, j + 1)]);
                j += 1;
            } else {
                quadrant.push([(inner, i), (k, j), (inner, i + 1)]);
                i += 1;
            }
        }
    }
    let mut triangles = Vec::with_capacity(4 * quadrant.len());
    let maps: [&dyn Fn(usize, usize) -> usize; 4] = [
        &|_, j| j,
        &|k, j| mirror2(k, j),
        &|k, j| mirror3(k, mirror2(k, j)),
        &|k, j| mirror3(k, j),
    ];
    for map in maps {
        for tri in &quadrant {
            let t = tri.map(|(k, j)| id(k, map(k, j)));
            triangles.push(t);
        }
    }
    CrossSectionMesh::new(nodes, triangles)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unit_square_single_cell() {
        let m = CrossSectionMesh::generate(BuiltinShape::Square { resolution: 1 }).unwrap();
        assert_eq!(m.nodes().len(), 4);
        assert_eq!(m.triangles().len(), 2);
        assert!((m.moments().area - 1.0).abs() < 1e-15);
        assert_eq!(m.boundary_edges().len(), 4);
    }

    #[test]
    fn square_moments_are_exact() {
        let m = CrossSectionMesh::generate(BuiltinShape::Square { resolution: 4 }).unwrap();
        let (m, r) = m.normalize().unwrap();
        assert!((r.i2 - 1.0 / 12.0).abs() < 1e-14);
        assert!((r.i3 - 1.0 / 12.0).abs() < 1e-14);
        assert!((r.mu_s - 1.0 / 6.0).abs() < 1e-14);
        assert!(m.is_normalized(1e-12));
    }

    #[test]
    fn disk_counts_and_symmetry() {
        let m = CrossSectionMesh::generate(BuiltinShape::Disk { resolution: 3 }).unwrap();
        assert_eq!(m.nodes().len(), 1 + 2 * 3 * 4);
        assert_eq!(m.boundary_edges().len(), 12);
        // every triangle has a mirror image about each axis
        let key = |p: [f64; 2]| ((p[0] * 1e9).round() as i64, (p[1] * 1e9).round() as i64);
        let mut set: Vec<[(i64, i64); 3]> = m
            .triangles()
            .iter()
            .map(|t| {
                let mut v = t.map(|i| key(m.nodes()[i]));
                v.sort();
                v
            })
            .collect();
        set.sort();
        for t in m.triangles() {
            let mut v = t.map(|i| {
                let p = m.nodes()[i];
                key([-p[0], p[1]])
            });
            v.sort();
            assert!(set.binary_search(&v).is_ok());
        }
        let total: f64 = (0..m.triangles().len()).map(|t| m.triangle_area(t)).sum();
        assert!(total > 0.9 && total <= 1.0);
    }

    #[test]
    fn disk_moments_approach_analytic() {
        let target = 1.0 / (4.0 * PI);
        let mut prev = f64::INFINITY;
        for n in [8, 16, 32, 64] {
            let (_, r) = CrossSectionMesh::generate(BuiltinShape::Disk { resolution: n })
                .unwrap()
                .normalize()
                .unwrap();
            let err = (r.i2 - target).abs() / target;
            assert!(err < prev);
            prev = err;
            if n == 64 {
                assert!(err < 5e-3, "{err}");
                assert!((r.mu_s - 1.0 / (2.0 * PI)).abs() / (1.0 / (2.0 * PI)) < 5e-3);
            }
        }
    }

    #[test]
    fn normalize_is_idempotent_and_rotates_to_principal_axes() {
        let nodes = vec![[0.0, 0.0], [3.0, 1.0], [2.5, 2.0], [0.2, 1.5]];
        let m = CrossSectionMesh::new(nodes, vec![[0, 1, 2], [0, 2, 3]]).unwrap();
        let (n1, r1) = m.normalize().unwrap();
        assert!((r1.area - 1.0).abs() < 1e-12);
        assert!(r1.c2.abs() < 1e-12 && r1.c3.abs() < 1e-12);
        assert!(r1.i23.abs() < 1e-12);
        let (n2, _) = n1.normalize().unwrap();
        for (a, b) in n1.nodes().iter().zip(n2.nodes()) {
            assert!((a[0] - b[0]).abs() < 1e-12 && (a[1] - b[1]).abs() < 1e-12);
        }
    }

    #[test]
    fn file_round_trip_matches_builtin() {
        let text = "4 2\n-0.5 -0.5\n0.5 -0.5\n-0.5 0.5\n0.5 0.5\n0 1 3\n0 3 2\n";
        let parsed = CrossSectionMesh::parse(text, "inline").unwrap();
        let builtin = CrossSectionMesh::generate(BuiltinShape::Square { resolution: 1 }).unwrap();
        assert_eq!(parsed, builtin);
        let again = CrossSectionMesh::parse(&builtin.to_text(), "inline").unwrap();
        assert_eq!(again, builtin);
    }

    #[test]
    fn rejects_malformed_meshes() {
        assert!(matches!(
            CrossSectionMesh::parse("3 1\n0 0\n1 0\n", "x"),
            Err(MeshError::Parse { .. })
        ));
        assert!(matches!(
            CrossSectionMesh::parse("3 1\n0 0\n1 0\n2 0\n0 1 2\n", "x"),
            Err(MeshError::Degenerate(0))
        ));
        assert!(matches!(
            CrossSectionMesh::parse("3 1\n0 0\n1 0\n0 1\n0 1 5\n", "x"),
            Err(MeshError::IndexOutOfRange { .. })
        ));
        let two = "6 2\n0 0\n1 0\n0 1\n5 5\n6 5\n5 6\n0 1 2\n3 4 5\n";
        assert!(matches!(CrossSectionMesh::parse(two, "x"), Err(MeshError::Disconnected)));
        assert!(matches!(
            CrossSectionMesh::generate(BuiltinShape::Disk { resolution: 0 }),
            Err(MeshError::Resolution(0))
        ));
    }

    #[test]
    fn clockwise_triangles_are_reoriented() {
        let m = CrossSectionMesh::new(vec![[0.0, 0.0], [0.0, 1.0], [1.0, 0.0]], vec![[0, 1, 2]]).unwrap();
        assert!(m.triangle_area(0) > 0.0);
    }
}
