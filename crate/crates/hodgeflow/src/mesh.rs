//! Oriented triangulated 2-manifolds with boundary: construction, validation,
//! primal/dual measures, boundary distance and strip cutoffs.

use std::collections::{BinaryHeap, HashMap, VecDeque};

use nalgebra::Vector3;

use crate::error::{Error, Result};

/// Which dual complex backs the diagonal Hodge stars.
///
/// Circumcentric duals are used when every circumcenter lies on the interior
/// side of all three edges of its triangle (well-centered / Delaunay-like);
/// otherwise the barycentric dual is used, which always has positive measures.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DualKind {
    Circumcentric,
    Barycentric,
}

/// An oriented triangle mesh with (possibly empty) boundary, plus all the
/// measures needed to assemble discrete exterior calculus operators.
///
/// Immutable after construction.
#[derive(Debug, Clone)]
pub struct SimplicialManifold {
    pub vertices: Vec<Vector3<f64>>,
    /// Oriented vertex triples, globally consistent orientation.
    pub triangles: Vec<[usize; 3]>,
    /// Canonically ordered (lo, hi) vertex pairs, sorted lexicographically.
    pub edges: Vec<[usize; 2]>,
    /// Per triangle: the three edge indices with incidence signs (+1 if the
    /// triangle induces the canonical edge orientation, -1 otherwise).
    pub tri_edges: Vec<[(usize, f64); 3]>,
    /// Triangles adjacent to each edge (1 for boundary edges, 2 interior).
    pub edge_tris: Vec<Vec<usize>>,
    pub boundary_edges: Vec<usize>,
    pub boundary_vertices: Vec<usize>,
    pub is_boundary_vertex: Vec<bool>,
    pub is_boundary_edge: Vec<bool>,

    pub edge_lengths: Vec<f64>,
    pub tri_areas: Vec<f64>,
    /// Dual cell area per vertex (clipped at the boundary).
    pub dual_vertex_areas: Vec<f64>,
    /// Dual edge length per edge (half cells on boundary edges).
    pub dual_edge_lengths: Vec<f64>,
    pub dual_kind: DualKind,

    /// Gradients of the three barycentric coordinates on each triangle.
    pub tri_bary_grads: Vec<[Vector3<f64>; 3]>,
    /// Unwrapped corner positions per triangle (differs from `vertices` only
    /// on periodic meshes, where triangles crossing the seam are unwrapped).
    pub tri_corners: Vec<[Vector3<f64>; 3]>,
    /// Outward unit normal per boundary edge, in the adjacent triangle plane.
    /// Indexed like `edges`; zero vector for interior edges.
    pub edge_normals: Vec<Vector3<f64>>,

    /// Periods (Lx, Ly) for flat periodic meshes (the torus), else None.
    pub periodic: Option<[f64; 2]>,
}

/// Generator parameters for the built-in test geometries.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum MeshKind {
    /// Unit disk: fan plus `rings - 1` quad rings, `sectors` around.
    Disk { rings: usize, sectors: usize },
    /// Annulus with radii 0.5 and 1.0.
    Annulus { rings: usize, sectors: usize },
    /// Unit square, `nx` by `ny` cells, each split into two triangles.
    Rectangle { nx: usize, ny: usize },
    /// Flat torus `[0, 2pi)^2` with periodic identification.
    Torus { nx: usize, ny: usize },
    /// Unit icosphere; `subdiv = 0` is the icosahedron.
    Sphere { subdiv: usize },
}

impl SimplicialManifold {
    /// Build and validate a manifold from vertices and oriented triangles.
    /// Triangle orientations are repaired by flipping where possible.
    pub fn new(
        vertices: Vec<Vector3<f64>>,
        triangles: Vec<[usize; 3]>,
        periodic: Option<[f64; 2]>,
    ) -> Result<Self> {
        if triangles.is_empty() {
            return Err(Error::InvalidMesh("no triangles".into()));
        }
        for t in &triangles {
            if t[0] == t[1] || t[1] == t[2] || t[0] == t[2] {
                return Err(Error::InvalidMesh(format!("degenerate triangle {t:?}")));
            }
            for &v in t {
                if v >= vertices.len() {
                    return Err(Error::InvalidMesh(format!("vertex index {v} out of range")));
                }
            }
        }
        let triangles = orient_consistently(&vertices, triangles)?;

        // Edge table, canonical (lo, hi) order, lexicographically sorted.
        let mut edge_set: Vec<[usize; 2]> = Vec::new();
        {
            let mut seen = HashMap::new();
            for t in &triangles {
                for (a, b) in tri_edge_pairs(t) {
                    let key = if a < b { [a, b] } else { [b, a] };
                    seen.entry(key).or_insert(0usize);
                }
            }
            edge_set.extend(seen.keys().copied());
        }
        edge_set.sort_unstable();
        let edge_index: HashMap<[usize; 2], usize> =
            edge_set.iter().enumerate().map(|(i, e)| (*e, i)).collect();
        let edges = edge_set;

        let mut edge_tris: Vec<Vec<usize>> = vec![Vec::new(); edges.len()];
        let mut tri_edges: Vec<[(usize, f64); 3]> = Vec::with_capacity(triangles.len());
        for (ti, t) in triangles.iter().enumerate() {
            let mut te = [(0usize, 0.0f64); 3];
            for (k, (a, b)) in tri_edge_pairs(t).into_iter().enumerate() {
                let key = if a < b { [a, b] } else { [b, a] };
                let e = edge_index[&key];
                let sign = if a < b { 1.0 } else { -1.0 };
                te[k] = (e, sign);
                edge_tris[e].push(ti);
            }
            tri_edges.push(te);
        }
        for (e, tris) in edge_tris.iter().enumerate() {
            if tris.len() > 2 {
                return Err(Error::NonManifold(edges[e][0], edges[e][1], tris.len()));
            }
        }
        // Interior edges must receive opposite induced orientations.
        for (e, tris) in edge_tris.iter().enumerate() {
            if tris.len() == 2 {
                let s: f64 = tris
                    .iter()
                    .map(|&ti| tri_edges[ti].iter().find(|(ei, _)| *ei == e).unwrap().1)
                    .sum();
                if s != 0.0 {
                    return Err(Error::NonOrientable);
                }
            }
        }

        let is_boundary_edge: Vec<bool> = edge_tris.iter().map(|t| t.len() == 1).collect();
        let boundary_edges: Vec<usize> =
            (0..edges.len()).filter(|&e| is_boundary_edge[e]).collect();
        let mut is_boundary_vertex = vec![false; vertices.len()];
        for &e in &boundary_edges {
            is_boundary_vertex[edges[e][0]] = true;
            is_boundary_vertex[edges[e][1]] = true;
        }
        let boundary_vertices: Vec<usize> = (0..vertices.len())
            .filter(|&v| is_boundary_vertex[v])
            .collect();
        // Boundary edges must form closed loops: 2 incident boundary edges
        // per boundary vertex.
        {
            let mut cnt = vec![0usize; vertices.len()];
            for &e in &boundary_edges {
                cnt[edges[e][0]] += 1;
                cnt[edges[e][1]] += 1;
            }
            for &v in &boundary_vertices {
                if cnt[v] != 2 {
                    return Err(Error::InvalidMesh(format!(
                        "boundary vertex {v} has {} incident boundary edges",
                        cnt[v]
                    )));
                }
            }
        }

        // Unwrapped corner geometry.
        let tri_corners: Vec<[Vector3<f64>; 3]> = triangles
            .iter()
            .map(|t| unwrap_corners(&vertices, *t, periodic))
            .collect();
        let tri_areas: Vec<f64> = tri_corners
            .iter()
            .map(|c| 0.5 * (c[1] - c[0]).cross(&(c[2] - c[0])).norm())
            .collect();
        for (t, &a) in tri_areas.iter().enumerate() {
            if !(a > 0.0) {
                return Err(Error::InvalidMesh(format!("triangle {t} has zero area")));
            }
        }
        let edge_lengths: Vec<f64> = edges
            .iter()
            .map(|&[a, b]| displacement(&vertices, a, b, periodic).norm())
            .collect();

        let tri_bary_grads: Vec<[Vector3<f64>; 3]> = tri_corners
            .iter()
            .map(|c| bary_gradients(c))
            .collect();

        // Dual measures: circumcentric where well-centered, else barycentric.
        let (dual_kind, dual_vertex_areas, dual_edge_lengths) =
            build_dual(vertices.len(), &triangles, &tri_corners, &edges, &tri_edges);
        for (v, &a) in dual_vertex_areas.iter().enumerate() {
            if !(a > 0.0) {
                return Err(Error::InvalidMesh(format!(
                    "non-positive dual area at vertex {v}"
                )));
            }
        }
        for (e, &l) in dual_edge_lengths.iter().enumerate() {
            if !(l > 0.0) {
                return Err(Error::InvalidMesh(format!(
                    "non-positive dual length at edge {e}"
                )));
            }
        }

        // Outward boundary normals, in the adjacent triangle plane.
        let mut edge_normals = vec![Vector3::zeros(); edges.len()];
        for &e in &boundary_edges {
            let ti = edge_tris[e][0];
            let t = &triangles[ti];
            let c = &tri_corners[ti];
            let ia = t.iter().position(|&v| v == edges[e][0]).unwrap();
            let ib = t.iter().position(|&v| v == edges[e][1]).unwrap();
            let io = 3 - ia - ib;
            let ev = c[ib] - c[ia];
            let w = c[io] - c[ia];
            let inward = w - ev * (w.dot(&ev) / ev.norm_squared());
            edge_normals[e] = -inward.normalize();
        }

        Ok(Self {
            vertices,
            triangles,
            edges,
            tri_edges,
            edge_tris,
            boundary_edges,
            boundary_vertices,
            is_boundary_vertex,
            is_boundary_edge,
            edge_lengths,
            tri_areas,
            dual_vertex_areas,
            dual_edge_lengths,
            dual_kind,
            tri_bary_grads,
            tri_corners,
            edge_normals,
            periodic,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.vertices.len()
    }
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }
    pub fn num_triangles(&self) -> usize {
        self.triangles.len()
    }
    pub fn simplex_count(&self, k: u8) -> usize {
        match k {
            0 => self.num_vertices(),
            1 => self.num_edges(),
            2 => self.num_triangles(),
            _ => 0,
        }
    }
    pub fn has_boundary(&self) -> bool {
        !self.boundary_edges.is_empty()
    }
    pub fn euler_characteristic(&self) -> i64 {
        self.num_vertices() as i64 - self.num_edges() as i64 + self.num_triangles() as i64
    }
    /// Mesh size parameter: max primal edge length.
    pub fn h(&self) -> f64 {
        self.edge_lengths.iter().cloned().fold(0.0, f64::max)
    }
    pub fn total_area(&self) -> f64 {
        self.tri_areas.iter().sum()
    }
    pub fn boundary_length(&self) -> f64 {
        self.boundary_edges.iter().map(|&e| self.edge_lengths[e]).sum()
    }

    /// Boundary loops as cyclic vertex lists.
    pub fn boundary_loops(&self) -> Vec<Vec<usize>> {
        let mut adj: HashMap<usize, Vec<usize>> = HashMap::new();
        for &e in &self.boundary_edges {
            let [a, b] = self.edges[e];
            adj.entry(a).or_default().push(b);
            adj.entry(b).or_default().push(a);
        }
        let mut visited: HashMap<usize, bool> = adj.keys().map(|&v| (v, false)).collect();
        let mut loops = Vec::new();
        let mut starts: Vec<usize> = adj.keys().copied().collect();
        starts.sort_unstable();
        for start in starts {
            if visited[&start] {
                continue;
            }
            let mut cycle = vec![start];
            visited.insert(start, true);
            let mut prev = start;
            let mut cur = adj[&start][0];
            while cur != start {
                visited.insert(cur, true);
                cycle.push(cur);
                let nbrs = &adj[&cur];
                let next = if nbrs[0] == prev { nbrs[1] } else { nbrs[0] };
                prev = cur;
                cur = next;
            }
            loops.push(cycle);
        }
        loops
    }

    /// Per-vertex geodesic distance to the boundary by fast marching with
    /// Dijkstra ordering: linear-wavefront updates through triangle faces,
    /// falling back to edge relaxation. O(h) accurate on the (acute)
    /// generated meshes. All +inf on boundaryless meshes.
    pub fn distance_to_boundary(&self) -> Vec<f64> {
        let n = self.num_vertices();
        let mut dist = vec![f64::INFINITY; n];
        if !self.has_boundary() {
            return dist;
        }
        let mut vert_tris: Vec<Vec<usize>> = vec![Vec::new(); n];
        for (t, tri) in self.triangles.iter().enumerate() {
            for &v in tri {
                vert_tris[v].push(t);
            }
        }
        let mut heap = BinaryHeap::new();
        for &v in &self.boundary_vertices {
            dist[v] = 0.0;
            heap.push(MinDist(0.0, v));
        }
        while let Some(MinDist(d, v)) = heap.pop() {
            if d > dist[v] {
                continue;
            }
            for &t in &vert_tris[v] {
                let tri = self.triangles[t];
                let c = &self.tri_corners[t];
                let iv = tri.iter().position(|&x| x == v).unwrap();
                for off in 1..3 {
                    let iu = (iv + off) % 3;
                    let iw = (iv + 3 - off) % 3;
                    let (u, w) = (tri[iu], tri[iw]);
                    // edge relaxation v -> u
                    let mut cand = d + (c[iu] - c[iv]).norm();
                    // planar wavefront through the face, seeded on edge (v, w)
                    if dist[w].is_finite() {
                        cand = cand.min(front_update(
                            d,
                            dist[w],
                            c[iv],
                            c[iw],
                            c[iu],
                        ));
                    }
                    if cand < dist[u] {
                        dist[u] = cand;
                        heap.push(MinDist(cand, u));
                    }
                }
            }
        }
        dist
    }

    /// Build a boundary strip cutoff at width `r`.
    pub fn strip_cutoff(&self, r: f64) -> Result<StripCutoff> {
        if !self.has_boundary() {
            return Err(Error::Unsupported(
                "strip cutoff requires a mesh with boundary".into(),
            ));
        }
        let dist = self.distance_to_boundary();
        let dmax = dist.iter().cloned().fold(0.0, f64::max);
        if !(r > 0.0 && r < dmax) {
            return Err(Error::InvalidParameter(format!(
                "strip width r = {r} outside (0, {dmax})"
            )));
        }
        let psi: Vec<f64> = dist.iter().map(|&d| cutoff_profile(d, r)).collect();
        let mut grad_bound = 0.0f64;
        for (t, tri) in self.triangles.iter().enumerate() {
            let g: Vector3<f64> = (0..3)
                .map(|k| self.tri_bary_grads[t][k] * psi[tri[k]])
                .sum();
            grad_bound = grad_bound.max(g.norm());
        }
        Ok(StripCutoff { r, psi, grad_bound })
    }

    /// Generate one of the built-in test geometries.
    pub fn generate(kind: MeshKind) -> Result<Self> {
        match kind {
            MeshKind::Disk { rings, sectors } => gen_disk(rings, sectors),
            MeshKind::Annulus { rings, sectors } => gen_annulus(rings, sectors),
            MeshKind::Rectangle { nx, ny } => gen_rectangle(nx, ny),
            MeshKind::Torus { nx, ny } => gen_torus(nx, ny),
            MeshKind::Sphere { subdiv } => gen_sphere(subdiv),
        }
    }

    /// Parse ASCII OFF content.
    pub fn from_off_str(text: &str) -> Result<Self> {
        let mut lines = text
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty() && !l.starts_with('#'));
        let header = lines.next().ok_or_else(|| Error::OffParse("empty file".into()))?;
        if header != "OFF" {
            return Err(Error::OffParse(format!("missing OFF header, got {header:?}")));
        }
        let counts = lines
            .next()
            .ok_or_else(|| Error::OffParse("missing count line".into()))?;
        let mut it = counts.split_whitespace();
        let nv: usize = parse_field(it.next(), "vertex count")?;
        let nf: usize = parse_field(it.next(), "face count")?;
        let _ne: usize = parse_field(it.next(), "edge count")?;
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let line = lines
                .next()
                .ok_or_else(|| Error::OffParse("vertex count mismatch".into()))?;
            let mut it = line.split_whitespace();
            let x: f64 = parse_field(it.next(), "x")?;
            let y: f64 = parse_field(it.next(), "y")?;
            let z: f64 = parse_field(it.next(), "z")?;
            vertices.push(Vector3::new(x, y, z));
        }
        let mut triangles = Vec::with_capacity(nf);
        for _ in 0..nf {
            let line = lines
                .next()
                .ok_or_else(|| Error::OffParse("face count mismatch".into()))?;
            let mut it = line.split_whitespace();
            let n: usize = parse_field(it.next(), "face arity")?;
            if n != 3 {
                return Err(Error::OffParse(format!("non-triangle face of arity {n}")));
            }
            let i: usize = parse_field(it.next(), "i")?;
            let j: usize = parse_field(it.next(), "j")?;
            let k: usize = parse_field(it.next(), "k")?;
            triangles.push([i, j, k]);
        }
        Self::new(vertices, triangles, None)
    }

    /// Emit ASCII OFF. Periodic meshes round-trip combinatorially, but the
    /// periodic identification itself is not part of the format.
    pub fn to_off_string(&self) -> String {
        let mut s = String::from("OFF\n");
        s.push_str(&format!(
            "{} {} 0\n",
            self.num_vertices(),
            self.num_triangles()
        ));
        for v in &self.vertices {
            s.push_str(&format!("{} {} {}\n", v.x, v.y, v.z));
        }
        for t in &self.triangles {
            s.push_str(&format!("3 {} {} {}\n", t[0], t[1], t[2]));
        }
        s
    }

    /// P1 gradient of per-vertex values on triangle `t`.
    pub fn p1_gradient(&self, t: usize, values: &[f64]) -> Vector3<f64> {
        let tri = self.triangles[t];
        (0..3)
            .map(|k| self.tri_bary_grads[t][k] * values[tri[k]])
            .sum()
    }
}

/// A boundary strip cutoff: 1 inside `dist <= r/2`, 0 outside `dist >= 3r/4`,
/// with the quintic smooth-step profile in between.
#[derive(Debug, Clone)]
pub struct StripCutoff {
    pub r: f64,
    /// Per-vertex values in [0, 1].
    pub psi: Vec<f64>,
    /// Max P1 gradient magnitude over triangles.
    pub grad_bound: f64,
}

/// Quintic smooth-step profile in `[r/2, 3r/4]`, 1 below, 0 above.
pub fn cutoff_profile(d: f64, r: f64) -> f64 {
    if d <= 0.5 * r {
        1.0
    } else if d >= 0.75 * r {
        0.0
    } else {
        let x = (d - 0.5 * r) / (0.25 * r);
        1.0 - (10.0 * x.powi(3) - 15.0 * x.powi(4) + 6.0 * x.powi(5))
    }
}

/// Distance value at `c` from a linear front interpolated along segment
/// (a, b) with values (da, db): min over s of (1-s) da + s db + |c - p(s)|.
/// Convex in s; golden-section on [0, 1].
fn front_update(da: f64, db: f64, a: Vector3<f64>, b: Vector3<f64>, c: Vector3<f64>) -> f64 {
    let f = |s: f64| (1.0 - s) * da + s * db + (c - (a + (b - a) * s)).norm();
    let phi = (5.0f64.sqrt() - 1.0) / 2.0;
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    let (mut x1, mut x2) = (hi - phi * (hi - lo), lo + phi * (hi - lo));
    let (mut f1, mut f2) = (f(x1), f(x2));
    for _ in 0..48 {
        if f1 <= f2 {
            hi = x2;
            x2 = x1;
            f2 = f1;
            x1 = hi - phi * (hi - lo);
            f1 = f(x1);
        } else {
            lo = x1;
            x1 = x2;
            f1 = f2;
            x2 = lo + phi * (hi - lo);
            f2 = f(x2);
        }
    }
    f(0.5 * (lo + hi)).min(f(0.0)).min(f(1.0))
}

struct MinDist(f64, usize);
impl PartialEq for MinDist {
    fn eq(&self, other: &Self) -> bool {
        self.0 == other.0 && self.1 == other.1
    }
}
impl Eq for MinDist {}
impl PartialOrd for MinDist {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for MinDist {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        // reversed for a min-heap
        other
            .0
            .partial_cmp(&self.0)
            .unwrap_or(std::cmp::Ordering::Equal)
            .then_with(|| other.1.cmp(&self.1))
    }
}

fn parse_field<T: std::str::FromStr>(f: Option<&str>, what: &str) -> Result<T> {
    f.ok_or_else(|| Error::OffParse(format!("missing {what}")))?
        .parse()
        .map_err(|_| Error::OffParse(format!("bad {what}")))
}

fn tri_edge_pairs(t: &[usize; 3]) -> [(usize, usize); 3] {
    [(t[0], t[1]), (t[1], t[2]), (t[2], t[0])]
}

/// Min-image displacement from vertex `a` to `b`.
fn displacement(
    vertices: &[Vector3<f64>],
    a: usize,
    b: usize,
    periodic: Option<[f64; 2]>,
) -> Vector3<f64> {
    let mut d = vertices[b] - vertices[a];
    if let Some([lx, ly]) = periodic {
        d.x -= lx * (d.x / lx).round();
        d.y -= ly * (d.y / ly).round();
    }
    d
}

fn unwrap_corners(
    vertices: &[Vector3<f64>],
    t: [usize; 3],
    periodic: Option<[f64; 2]>,
) -> [Vector3<f64>; 3] {
    let p0 = vertices[t[0]];
    [
        p0,
        p0 + displacement(vertices, t[0], t[1], periodic),
        p0 + displacement(vertices, t[0], t[2], periodic),
    ]
}

/// Gradients of the three barycentric coordinates of a flat triangle.
fn bary_gradients(c: &[Vector3<f64>; 3]) -> [Vector3<f64>; 3] {
    let n = (c[1] - c[0]).cross(&(c[2] - c[0]));
    let mut g = [Vector3::zeros(); 3];
    for k in 0..3 {
        // barycentric k vanishes on the opposite edge (a, b) and is 1 at c[k]
        let a = c[(k + 1) % 3];
        let b = c[(k + 2) % 3];
        let perp = n.cross(&(b - a));
        g[k] = perp / perp.dot(&(c[k] - a));
    }
    g
}

/// Per-triangle dual point in the triangle plane.
fn dual_point(c: &[Vector3<f64>; 3], kind: DualKind) -> Vector3<f64> {
    match kind {
        DualKind::Barycentric => (c[0] + c[1] + c[2]) / 3.0,
        DualKind::Circumcentric => {
            let a = c[1] - c[0];
            let b = c[2] - c[0];
            let n = a.cross(&b);
            c[0] + (b.cross(&n) * a.norm_squared() + n.cross(&a) * b.norm_squared())
                / (2.0 * n.norm_squared())
        }
    }
}

/// Signed area of triangle (p, q, r) with respect to plane normal `n`.
fn signed_area(p: Vector3<f64>, q: Vector3<f64>, r: Vector3<f64>, n: Vector3<f64>) -> f64 {
    0.5 * (q - p).cross(&(r - p)).dot(&n.normalize())
}

fn build_dual(
    num_vertices: usize,
    triangles: &[[usize; 3]],
    tri_corners: &[[Vector3<f64>; 3]],
    edges: &[[usize; 2]],
    tri_edges: &[[(usize, f64); 3]],
) -> (DualKind, Vec<f64>, Vec<f64>) {
    for kind in [DualKind::Circumcentric, DualKind::Barycentric] {
        let mut dual_edge = vec![0.0f64; edges.len()];
        let mut dual_vertex = vec![0.0f64; num_vertices];
        let mut ok = true;
        for (ti, tri) in triangles.iter().enumerate() {
            let c = &tri_corners[ti];
            let n = (c[1] - c[0]).cross(&(c[2] - c[0]));
            let dp = dual_point(c, kind);
            // Per-edge perpendicular contribution and per-corner quad areas.
            for k in 0..3 {
                let (e, _) = tri_edges[ti][k];
                let va = tri[k];
                let pa = c[k];
                let pb = c[(k + 1) % 3];
                let pc = c[(k + 2) % 3];
                // signed perpendicular distance from dp to edge (pa, pb),
                // positive on the interior side (the side of pc)
                let ev = pb - pa;
                let perp = ev.cross(&n).normalize();
                let side = perp.dot(&(pc - pa)).signum();
                let d = side * perp.dot(&(dp - pa));
                if d <= 0.0 {
                    ok = false;
                }
                dual_edge[e] += d;
                // corner quad at va: (pa, mid(pa,pb), dp, mid(pa,pc))
                let m_ab = 0.5 * (pa + pb);
                let m_ac = 0.5 * (pa + pc);
                let quad = signed_area(pa, m_ab, dp, n) + signed_area(pa, dp, m_ac, n);
                if quad <= 0.0 {
                    ok = false;
                }
                dual_vertex[va] += quad;
            }
        }
        if ok || kind == DualKind::Barycentric {
            return (kind, dual_vertex, dual_edge);
        }
    }
    unreachable!()
}

/// Flip triangles so induced orientations cancel on interior edges.
fn orient_consistently(
    vertices: &[Vector3<f64>],
    mut triangles: Vec<[usize; 3]>,
) -> Result<Vec<[usize; 3]>> {
    let _ = vertices;
    // adjacency by shared (unordered) edge
    let mut by_edge: HashMap<[usize; 2], Vec<usize>> = HashMap::new();
    for (ti, t) in triangles.iter().enumerate() {
        for (a, b) in tri_edge_pairs(t) {
            let key = if a < b { [a, b] } else { [b, a] };
            by_edge.entry(key).or_default().push(ti);
        }
    }
    for (e, tris) in &by_edge {
        if tris.len() > 2 {
            return Err(Error::NonManifold(e[0], e[1], tris.len()));
        }
    }
    let n = triangles.len();
    let mut flipped = vec![false; n];
    let mut visited = vec![false; n];
    for start in 0..n {
        if visited[start] {
            continue;
        }
        visited[start] = true;
        let mut queue = VecDeque::from([start]);
        while let Some(ti) = queue.pop_front() {
            let t = oriented(&triangles[ti], flipped[ti]);
            for (a, b) in tri_edge_pairs(&t) {
                let key = if a < b { [a, b] } else { [b, a] };
                for &tj in &by_edge[&key] {
                    if tj == ti {
                        continue;
                    }
                    // induced orientation of (a,b) in tj (with current flip state)
                    let u = oriented(&triangles[tj], flipped[tj]);
                    let same = tri_edge_pairs(&u).iter().any(|&(x, y)| (x, y) == (a, b));
                    if !visited[tj] {
                        visited[tj] = true;
                        // consistent means tj must induce (b,a); if it induces
                        // (a,b) like ti, flip it
                        if same {
                            flipped[tj] = !flipped[tj];
                        }
                        queue.push_back(tj);
                    } else if same {
                        return Err(Error::NonOrientable);
                    }
                }
            }
        }
    }
    for (ti, f) in flipped.iter().enumerate() {
        if *f {
            triangles[ti].swap(1, 2);
        }
    }
    Ok(triangles)
}

fn oriented(t: &[usize; 3], flip: bool) -> [usize; 3] {
    if flip {
        [t[0], t[2], t[1]]
    } else {
        *t
    }
}

fn check_res(name: &str, cond: bool) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::InvalidParameter(format!(
            "degenerate {name} resolution"
        )))
    }
}

/// Triangulate the strip between two concentric size-`s` rings whose
/// angular offsets differ by half a step. `plus` says the upper ring is
/// offset forward relative to the lower one.
fn offset_strip(
    lower: impl Fn(usize) -> usize,
    upper: impl Fn(usize) -> usize,
    s: usize,
    plus: bool,
    triangles: &mut Vec<[usize; 3]>,
) {
    for j in 0..s {
        if plus {
            triangles.push([lower(j), lower(j + 1), upper(j)]);
            triangles.push([lower(j + 1), upper(j + 1), upper(j)]);
        } else {
            triangles.push([lower(j), lower(j + 1), upper(j + 1)]);
            triangles.push([lower(j), upper(j + 1), upper(j)]);
        }
    }
}

/// Half-step angular offset of ring `i` (rings alternate so triangles are
/// acute isoceles rather than near-right, keeping the circumcentric dual).
fn ring_offset(i: usize) -> f64 {
    if i % 2 == 0 {
        0.5
    } else {
        0.0
    }
}

fn gen_disk(rings: usize, sectors: usize) -> Result<SimplicialManifold> {
    check_res("disk", rings >= 1 && sectors >= 5)?;
    let tau = 2.0 * std::f64::consts::PI;
    let mut vertices = vec![Vector3::zeros()];
    for i in 1..=rings {
        let r = i as f64 / rings as f64;
        for j in 0..sectors {
            let th = tau * (j as f64 + ring_offset(i)) / sectors as f64;
            vertices.push(Vector3::new(r * th.cos(), r * th.sin(), 0.0));
        }
    }
    let ring = |i: usize, j: usize| 1 + (i - 1) * sectors + (j % sectors);
    let mut triangles = Vec::new();
    for j in 0..sectors {
        triangles.push([0, ring(1, j), ring(1, j + 1)]);
    }
    for i in 1..rings {
        let plus = ring_offset(i + 1) > ring_offset(i);
        offset_strip(|j| ring(i, j), |j| ring(i + 1, j), sectors, plus, &mut triangles);
    }
    SimplicialManifold::new(vertices, triangles, None)
}

fn gen_annulus(rings: usize, sectors: usize) -> Result<SimplicialManifold> {
    check_res("annulus", rings >= 1 && sectors >= 3)?;
    let tau = 2.0 * std::f64::consts::PI;
    let (r_in, r_out) = (0.5, 1.0);
    let mut vertices = Vec::new();
    for i in 0..=rings {
        let r = r_in + (r_out - r_in) * i as f64 / rings as f64;
        for j in 0..sectors {
            let th = tau * (j as f64 + ring_offset(i)) / sectors as f64;
            vertices.push(Vector3::new(r * th.cos(), r * th.sin(), 0.0));
        }
    }
    let ring = |i: usize, j: usize| i * sectors + (j % sectors);
    let mut triangles = Vec::new();
    for i in 0..rings {
        let plus = ring_offset(i + 1) > ring_offset(i);
        offset_strip(|j| ring(i, j), |j| ring(i + 1, j), sectors, plus, &mut triangles);
    }
    SimplicialManifold::new(vertices, triangles, None)
}

fn gen_rectangle(nx: usize, ny: usize) -> Result<SimplicialManifold> {
    check_res("rectangle", nx >= 1 && ny >= 1)?;
    let mut vertices = Vec::new();
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push(Vector3::new(i as f64 / nx as f64, j as f64 / ny as f64, 0.0));
        }
    }
    let at = |i: usize, j: usize| j * (nx + 1) + i;
    let mut triangles = Vec::new();
    for j in 0..ny {
        for i in 0..nx {
            let (a, b) = (at(i, j), at(i + 1, j));
            let (c, d) = (at(i, j + 1), at(i + 1, j + 1));
            triangles.push([a, b, d]);
            triangles.push([a, d, c]);
        }
    }
    SimplicialManifold::new(vertices, triangles, None)
}

fn gen_torus(nx: usize, ny: usize) -> Result<SimplicialManifold> {
    check_res("torus", nx >= 3 && ny >= 4 && ny % 2 == 0)?;
    let l = 2.0 * std::f64::consts::PI;
    let (dx, dy) = (l / nx as f64, l / ny as f64);
    // rows alternate a half-step x offset so every triangle is an acute
    // isoceles (keeps the circumcentric dual); ny must be even to close up
    let mut vertices = Vec::new();
    for j in 0..ny {
        let off = ring_offset(j) * dx;
        for i in 0..nx {
            vertices.push(Vector3::new((i as f64 * dx + off) % l, j as f64 * dy, 0.0));
        }
    }
    let at = |j: usize, i: usize| (j % ny) * nx + (i % nx);
    let mut triangles = Vec::new();
    for j in 0..ny {
        let plus = ring_offset(j + 1) > ring_offset(j % ny);
        offset_strip(|i| at(j, i), |i| at(j + 1, i), nx, plus, &mut triangles);
    }
    SimplicialManifold::new(vertices, triangles, Some([l, l]))
}

fn gen_sphere(subdiv: usize) -> Result<SimplicialManifold> {
    let phi = (1.0 + 5.0f64.sqrt()) / 2.0;
    let raw = [
        (-1.0, phi, 0.0),
        (1.0, phi, 0.0),
        (-1.0, -phi, 0.0),
        (1.0, -phi, 0.0),
        (0.0, -1.0, phi),
        (0.0, 1.0, phi),
        (0.0, -1.0, -phi),
        (0.0, 1.0, -phi),
        (phi, 0.0, -1.0),
        (phi, 0.0, 1.0),
        (-phi, 0.0, -1.0),
        (-phi, 0.0, 1.0),
    ];
    let mut vertices: Vec<Vector3<f64>> = raw
        .iter()
        .map(|&(x, y, z)| Vector3::new(x, y, z).normalize())
        .collect();
    let mut triangles: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdiv {
        let mut mid: HashMap<[usize; 2], usize> = HashMap::new();
        let mut next = Vec::new();
        for t in &triangles {
            let mut m = [0usize; 3];
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let key = if a < b { [a, b] } else { [b, a] };
                m[k] = *mid.entry(key).or_insert_with(|| {
                    let p = (vertices[a] + vertices[b]).normalize();
                    vertices.push(p);
                    vertices.len() - 1
                });
            }
            next.push([t[0], m[0], m[2]]);
            next.push([t[1], m[1], m[0]]);
            next.push([t[2], m[2], m[1]]);
            next.push([m[0], m[1], m[2]]);
        }
        triangles = next;
    }
    SimplicialManifold::new(vertices, triangles, None)
}
