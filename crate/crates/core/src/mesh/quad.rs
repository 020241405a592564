//! Unstructured conforming quadrilateral meshes.
//!
//! Local faces are numbered counter-clockwise starting from edge `(v0, v1)`:
//! face 0 is `ξ2 = 0`, face 1 is `ξ1 = 1`, face 2 is `ξ2 = 1`, face 3 is
//! `ξ1 = 0`.

use std::collections::HashMap;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Local vertex pairs `(start, end)` of each face, traversed counter-clockwise.
pub const FACE_VERTICES: [[usize; 2]; 4] = [[0, 1], [1, 2], [2, 3], [3, 0]];

/// One side of a face: element index and local face number.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct FaceSide {
    pub elem: usize,
    pub local: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Face {
    pub left: FaceSide,
    /// `None` on the domain boundary.
    pub right: Option<FaceSide>,
    /// True when the right element traverses the shared edge in the opposite
    /// direction, so face node `k` on the left matches node `p - k` on the right.
    pub reversed: bool,
    /// Boundary tag; `None` for interior faces.
    pub tag: Option<usize>,
    /// Interior face produced by a periodic identification.
    pub periodic: bool,
}

/// Declared periodic identification of two boundary faces.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PeriodicPair {
    pub a: FaceSide,
    pub b: FaceSide,
}

#[derive(Clone, Debug)]
pub struct QuadMesh {
    pub vertices: Vec<[f64; 2]>,
    pub elems: Vec<[usize; 4]>,
    pub faces: Vec<Face>,
    pub periodic: Vec<PeriodicPair>,
    elem_faces: Vec<[usize; 4]>,
}

impl QuadMesh {
    /// Builds and validates a mesh. `boundary` lists `(elem, local_face, tag)`
    /// for every boundary face that is not part of a periodic pair.
    pub fn new(
        vertices: Vec<[f64; 2]>,
        elems: Vec<[usize; 4]>,
        boundary: &[(usize, usize, usize)],
        periodic: Vec<PeriodicPair>,
    ) -> Result<Self> {
        for (e, el) in elems.iter().enumerate() {
            if let Some(&v) = el.iter().find(|&&v| v >= vertices.len()) {
                return Err(Error::invalid(format!("element {e} references missing vertex {v}")));
            }
            for k in 0..4 {
                let c = vertices[el[k]];
                let next = vertices[el[(k + 1) % 4]];
                let prev = vertices[el[(k + 3) % 4]];
                let cross = (next[0] - c[0]) * (prev[1] - c[1]) - (next[1] - c[1]) * (prev[0] - c[0]);
                if cross <= 0.0 {
                    return Err(Error::InvertedElement {
                        elem: e,
                        msg: format!("corner {k} is not counter-clockwise (cross = {cross:e})"),
                    });
                }
            }
        }

        let mut edge_map: HashMap<(usize, usize), Vec<FaceSide>> = HashMap::new();
        for (e, el) in elems.iter().enumerate() {
            for (f, fv) in FACE_VERTICES.iter().enumerate() {
                let (a, b) = (el[fv[0]], el[fv[1]]);
                edge_map.entry((a.min(b), a.max(b))).or_default().push(FaceSide { elem: e, local: f });
            }
        }
        let mut keys: Vec<_> = edge_map.keys().copied().collect();
        keys.sort_by_key(|&(a, b)| {
            let first = edge_map[&(a, b)][0];
            (first.elem, first.local)
        });

        let mut faces = Vec::new();
        let mut elem_faces = vec![[usize::MAX; 4]; elems.len()];
        let mut boundary_sides = HashMap::new();
        for key in keys {
            let sides = &edge_map[&key];
            match sides.len() {
                1 => {
                    boundary_sides.insert(sides[0], ());
                }
                2 => {
                    let (l, r) = (sides[0], sides[1]);
                    let lv = edge_vertices(&elems, l);
                    let rv = edge_vertices(&elems, r);
                    if lv != [rv[1], rv[0]] {
                        return Err(Error::NonConforming(format!(
                            "elements {} and {} traverse edge {:?} in the same direction",
                            l.elem, r.elem, key
                        )));
                    }
                    let id = faces.len();
                    elem_faces[l.elem][l.local] = id;
                    elem_faces[r.elem][r.local] = id;
                    faces.push(Face { left: l, right: Some(r), reversed: true, tag: None, periodic: false });
                }
                n => {
                    return Err(Error::NonConforming(format!(
                        "edge {:?} is shared by {n} element faces (elements {:?})",
                        key,
                        sides.iter().map(|s| s.elem).collect::<Vec<_>>()
                    )));
                }
            }
        }

        for pair in &periodic {
            for s in [pair.a, pair.b] {
                if boundary_sides.remove(&s).is_none() {
                    return Err(Error::NonConforming(format!(
                        "periodic face (elem {}, face {}) is not a free boundary face",
                        s.elem, s.local
                    )));
                }
            }
            let id = faces.len();
            elem_faces[pair.a.elem][pair.a.local] = id;
            elem_faces[pair.b.elem][pair.b.local] = id;
            faces.push(Face { left: pair.a, right: Some(pair.b), reversed: true, tag: None, periodic: true });
        }

        let mut tags: HashMap<FaceSide, usize> = HashMap::new();
        for &(e, f, tag) in boundary {
            let side = FaceSide { elem: e, local: f };
            if e >= elems.len() || f >= 4 {
                return Err(Error::invalid(format!("boundary entry ({e}, {f}) out of range")));
            }
            if !boundary_sides.contains_key(&side) {
                return Err(Error::NonConforming(format!(
                    "boundary entry (elem {e}, face {f}) is not a boundary face"
                )));
            }
            if tags.insert(side, tag).is_some() {
                return Err(Error::invalid(format!("boundary face (elem {e}, face {f}) tagged twice")));
            }
        }
        let mut bsides: Vec<FaceSide> = boundary_sides.into_keys().collect();
        bsides.sort_by_key(|s| (s.elem, s.local));
        for side in bsides {
            let tag = *tags.get(&side).ok_or_else(|| {
                Error::NonConforming(format!(
                    "boundary face (elem {}, face {}) has no tag",
                    side.elem, side.local
                ))
            })?;
            let id = faces.len();
            elem_faces[side.elem][side.local] = id;
            faces.push(Face { left: side, right: None, reversed: false, tag: Some(tag), periodic: false });
        }

        Ok(Self { vertices, elems, faces, periodic, elem_faces })
    }

    pub fn n_elems(&self) -> usize {
        self.elems.len()
    }

    /// Face index of local face `local` of element `elem`.
    pub fn face_of(&self, elem: usize, local: usize) -> usize {
        self.elem_faces[elem][local]
    }

    /// The element side across local face `local` of `elem`, if interior.
    pub fn neighbor(&self, elem: usize, local: usize) -> Option<FaceSide> {
        let face = &self.faces[self.face_of(elem, local)];
        let me = FaceSide { elem, local };
        match face.right {
            Some(r) if face.left == me => Some(r),
            Some(_) => Some(face.left),
            None => None,
        }
    }

    pub fn boundary_tag(&self, elem: usize, local: usize) -> Option<usize> {
        self.faces[self.face_of(elem, local)].tag
    }

    pub fn n_interior_faces(&self) -> usize {
        self.faces.iter().filter(|f| f.right.is_some()).count()
    }

    pub fn n_boundary_faces(&self) -> usize {
        self.faces.iter().filter(|f| f.right.is_none()).count()
    }

    /// Sorted list of distinct boundary tags.
    pub fn tags(&self) -> Vec<usize> {
        let mut t: Vec<usize> = self.faces.iter().filter_map(|f| f.tag).collect();
        t.sort_unstable();
        t.dedup();
        t
    }

    /// Shoelace area of the straight-sided element.
    pub fn elem_area(&self, e: usize) -> f64 {
        let v: Vec<[f64; 2]> = self.elems[e].iter().map(|&i| self.vertices[i]).collect();
        0.5 * (0..4)
            .map(|k| {
                let (a, b) = (v[k], v[(k + 1) % 4]);
                a[0] * b[1] - a[1] * b[0]
            })
            .sum::<f64>()
    }

    pub fn total_area(&self) -> f64 {
        (0..self.n_elems()).map(|e| self.elem_area(e)).sum()
    }

    /// Splits every quadrilateral into four through its edge midpoints and
    /// centroid. Tags and periodic identifications carry over to the children.
    pub fn refine_uniform(&self) -> Result<QuadMesh> {
        let mut vertices = self.vertices.clone();
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut elems = Vec::with_capacity(4 * self.n_elems());
        for el in &self.elems {
            let mut m = [0usize; 4];
            for (f, fv) in FACE_VERTICES.iter().enumerate() {
                let (a, b) = (el[fv[0]], el[fv[1]]);
                let key = (a.min(b), a.max(b));
                m[f] = *mid.entry(key).or_insert_with(|| {
                    let (pa, pb) = (self.vertices[a], self.vertices[b]);
                    vertices.push([0.5 * (pa[0] + pb[0]), 0.5 * (pa[1] + pb[1])]);
                    vertices.len() - 1
                });
            }
            let c = vertices.len();
            let pts: Vec<[f64; 2]> = el.iter().map(|&i| self.vertices[i]).collect();
            vertices.push([
                0.25 * pts.iter().map(|p| p[0]).sum::<f64>(),
                0.25 * pts.iter().map(|p| p[1]).sum::<f64>(),
            ]);
            elems.push([el[0], m[0], c, m[3]]);
            elems.push([m[0], el[1], m[1], c]);
            elems.push([c, m[1], el[2], m[2]]);
            elems.push([m[3], c, m[2], el[3]]);
        }
        // sub-faces of parent face f, in traversal order
        let sub = |side: FaceSide| -> [FaceSide; 2] {
            let f = side.local;
            [
                FaceSide { elem: 4 * side.elem + f, local: f },
                FaceSide { elem: 4 * side.elem + (f + 1) % 4, local: f },
            ]
        };
        let mut boundary = Vec::new();
        for face in self.faces.iter().filter(|f| f.right.is_none()) {
            for s in sub(face.left) {
                boundary.push((s.elem, s.local, face.tag.expect("boundary face carries a tag")));
            }
        }
        let mut periodic = Vec::new();
        for pair in &self.periodic {
            let (a, b) = (sub(pair.a), sub(pair.b));
            periodic.push(PeriodicPair { a: a[0], b: b[1] });
            periodic.push(PeriodicPair { a: a[1], b: b[0] });
        }
        QuadMesh::new(vertices, elems, &boundary, periodic)
    }

    /// Parses the line-oriented text format:
    /// `nv ne nb`, `nv` lines `x y`, `ne` lines `v0 v1 v2 v3`, `nb` lines
    /// `elem local_face tag`, then optionally `np` and `np` lines
    /// `elem_a face_a elem_b face_b` of periodic pairs.
    pub fn parse(text: &str) -> Result<QuadMesh> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
            .filter(|(_, l)| !l.is_empty());
        let mut next_nums = |count: usize, what: &str| -> Result<(usize, Vec<f64>)> {
            let (ln, line) = lines.next().ok_or_else(|| Error::Parse {
                line: 0,
                msg: format!("unexpected end of file while reading {what}"),
            })?;
            let nums = line
                .split_whitespace()
                .map(|t| t.parse::<f64>())
                .collect::<std::result::Result<Vec<_>, _>>()
                .map_err(|e| Error::Parse { line: ln, msg: format!("{what}: {e}") })?;
            if nums.len() != count {
                return Err(Error::Parse {
                    line: ln,
                    msg: format!("{what}: expected {count} values, found {}", nums.len()),
                });
            }
            Ok((ln, nums))
        };
        let as_index = |ln: usize, v: f64| -> Result<usize> {
            if v < 0.0 || v.fract() != 0.0 {
                return Err(Error::Parse { line: ln, msg: format!("{v} is not a non-negative integer") });
            }
            Ok(v as usize)
        };
        let (ln, head) = next_nums(3, "header")?;
        let (nv, ne, nb) = (as_index(ln, head[0])?, as_index(ln, head[1])?, as_index(ln, head[2])?);
        let mut vertices = Vec::with_capacity(nv);
        for _ in 0..nv {
            let (_, v) = next_nums(2, "vertex")?;
            vertices.push([v[0], v[1]]);
        }
        let mut elems = Vec::with_capacity(ne);
        for _ in 0..ne {
            let (ln, v) = next_nums(4, "element")?;
            elems.push([as_index(ln, v[0])?, as_index(ln, v[1])?, as_index(ln, v[2])?, as_index(ln, v[3])?]);
        }
        let mut boundary = Vec::with_capacity(nb);
        for _ in 0..nb {
            let (ln, v) = next_nums(3, "boundary face")?;
            boundary.push((as_index(ln, v[0])?, as_index(ln, v[1])?, as_index(ln, v[2])?));
        }
        let mut periodic = Vec::new();
        if let Ok((ln, v)) = next_nums(1, "periodic count") {
            for _ in 0..as_index(ln, v[0])? {
                let (ln, v) = next_nums(4, "periodic pair")?;
                periodic.push(PeriodicPair {
                    a: FaceSide { elem: as_index(ln, v[0])?, local: as_index(ln, v[1])? },
                    b: FaceSide { elem: as_index(ln, v[2])?, local: as_index(ln, v[3])? },
                });
            }
        }
        QuadMesh::new(vertices, elems, &boundary, periodic)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<QuadMesh> {
        let text = std::fs::read_to_string(path)?;
        Self::parse(&text)
    }

    /// Writes the mesh in the format accepted by [`QuadMesh::parse`].
    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
        let bfaces: Vec<&Face> = self.faces.iter().filter(|f| f.right.is_none()).collect();
        writeln!(out, "{} {} {}", self.vertices.len(), self.elems.len(), bfaces.len())?;
        for v in &self.vertices {
            writeln!(out, "{:.17e} {:.17e}", v[0], v[1])?;
        }
        for e in &self.elems {
            writeln!(out, "{} {} {} {}", e[0], e[1], e[2], e[3])?;
        }
        for f in bfaces {
            writeln!(out, "{} {} {}", f.left.elem, f.left.local, f.tag.unwrap_or(0))?;
        }
        if !self.periodic.is_empty() {
            writeln!(out, "{}", self.periodic.len())?;
            for p in &self.periodic {
                writeln!(out, "{} {} {} {}", p.a.elem, p.a.local, p.b.elem, p.b.local)?;
            }
        }
        Ok(())
    }
}

pub fn load_mesh(path: impl AsRef<Path>) -> Result<QuadMesh> {
    QuadMesh::load(path)
}

pub fn refine_uniform(mesh: &QuadMesh) -> Result<QuadMesh> {
    mesh.refine_uniform()
}

fn edge_vertices(elems: &[[usize; 4]], s: FaceSide) -> [usize; 2] {
    let fv = FACE_VERTICES[s.local];
    [elems[s.elem][fv[0]], elems[s.elem][fv[1]]]
}

/// Boundary tags used by the built-in rectangle generator.
pub mod rect_tags {
    pub const BOTTOM: usize = 1;
    pub const RIGHT: usize = 2;
    pub const TOP: usize = 3;
    pub const LEFT: usize = 4;
}

/// Structured `nx x ny` grid on `[x0, x1] x [y0, y1]`. Boundary tags follow
/// [`rect_tags`]. With `periodic_x` / `periodic_y` the opposite sides are
/// identified instead of tagged.
pub fn rectangle(
    nx: usize,
    ny: usize,
    (x0, x1): (f64, f64),
    (y0, y1): (f64, f64),
    periodic_x: bool,
    periodic_y: bool,
) -> Result<QuadMesh> {
    if nx == 0 || ny == 0 {
        return Err(Error::invalid("rectangle needs at least one element per direction"));
    }
    let vid = |i: usize, j: usize| j * (nx + 1) + i;
    let mut vertices = Vec::with_capacity((nx + 1) * (ny + 1));
    for j in 0..=ny {
        for i in 0..=nx {
            vertices.push([
                x0 + (x1 - x0) * i as f64 / nx as f64,
                y0 + (y1 - y0) * j as f64 / ny as f64,
            ]);
        }
    }
    let eid = |i: usize, j: usize| j * nx + i;
    let mut elems = Vec::with_capacity(nx * ny);
    for j in 0..ny {
        for i in 0..nx {
            elems.push([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]);
        }
    }
    let mut boundary = Vec::new();
    let mut periodic = Vec::new();
    for i in 0..nx {
        if periodic_y {
            periodic.push(PeriodicPair {
                a: FaceSide { elem: eid(i, 0), local: 0 },
                b: FaceSide { elem: eid(i, ny - 1), local: 2 },
            });
        } else {
            boundary.push((eid(i, 0), 0, rect_tags::BOTTOM));
            boundary.push((eid(i, ny - 1), 2, rect_tags::TOP));
        }
    }
    for j in 0..ny {
        if periodic_x {
            periodic.push(PeriodicPair {
                a: FaceSide { elem: eid(0, j), local: 3 },
                b: FaceSide { elem: eid(nx - 1, j), local: 1 },
            });
        } else {
            boundary.push((eid(nx - 1, j), 1, rect_tags::RIGHT));
            boundary.push((eid(0, j), 3, rect_tags::LEFT));
        }
    }
    QuadMesh::new(vertices, elems, &boundary, periodic)
}

/// Unit square `[0, 1]^2` with `n x n` elements and tagged sides.
pub fn unit_square(n: usize) -> Result<QuadMesh> {
    rectangle(n, n, (0.0, 1.0), (0.0, 1.0), false, false)
}

/// Randomly displaces vertices that are not on a boundary or periodic face by
/// up to `fraction` of the local minimum edge length. Deterministic for a
/// given `seed`.
pub fn perturb_interior(mesh: &QuadMesh, fraction: f64, seed: u64) -> Result<QuadMesh> {
    let mut fixed = vec![false; mesh.vertices.len()];
    for f in &mesh.faces {
        if f.right.is_none() || f.periodic {
            for s in std::iter::once(f.left).chain(f.right) {
                for &lv in &FACE_VERTICES[s.local] {
                    fixed[mesh.elems[s.elem][lv]] = true;
                }
            }
        }
    }
    let mut hmin = vec![f64::INFINITY; mesh.vertices.len()];
    for el in &mesh.elems {
        for fv in FACE_VERTICES {
            let (a, b) = (el[fv[0]], el[fv[1]]);
            let (pa, pb) = (mesh.vertices[a], mesh.vertices[b]);
            let len = ((pa[0] - pb[0]).powi(2) + (pa[1] - pb[1]).powi(2)).sqrt();
            hmin[a] = hmin[a].min(len);
            hmin[b] = hmin[b].min(len);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut vertices = mesh.vertices.clone();
    for (v, x) in vertices.iter_mut().enumerate() {
        let dx: f64 = rng.gen_range(-1.0..1.0);
        let dy: f64 = rng.gen_range(-1.0..1.0);
        if !fixed[v] {
            x[0] += fraction * hmin[v] * dx;
            x[1] += fraction * hmin[v] * dy;
        }
    }
    let boundary: Vec<(usize, usize, usize)> = mesh
        .faces
        .iter()
        .filter(|f| f.right.is_none())
        .map(|f| (f.left.elem, f.left.local, f.tag.unwrap_or(0)))
        .collect();
    QuadMesh::new(vertices, mesh.elems.clone(), &boundary, mesh.periodic.clone())
}

/// Boundary tags used by the annulus generator.
pub mod annulus_tags {
    pub const INNER: usize = 1;
    pub const OUTER: usize = 2;
    pub const SYMMETRY: usize = 3;
}

/// Annulus or annular sector `r_in <= r <= r_out`, `theta0 <= θ <= theta1`,
/// with geometric radial grading. Local `ξ1` runs outward in `r` and `ξ2` in
/// `θ`. A full ring (`theta1 - theta0 = 2π`) wraps around without a seam.
pub fn annulus(
    n_theta: usize,
    n_r: usize,
    r_in: f64,
    r_out: f64,
    theta0: f64,
    theta1: f64,
) -> Result<QuadMesh> {
    if n_theta == 0 || n_r == 0 || r_in <= 0.0 || r_out <= r_in {
        return Err(Error::invalid("bad annulus parameters"));
    }
    let full = ((theta1 - theta0) - 2.0 * std::f64::consts::PI).abs() < 1e-12;
    if full && n_theta < 3 {
        return Err(Error::invalid("a full annulus needs at least 3 elements around"));
    }
    let nt_v = if full { n_theta } else { n_theta + 1 };
    let vid = |i: usize, j: usize| (j % nt_v) * (n_r + 1) + i;
    let mut vertices = Vec::new();
    for j in 0..nt_v {
        let th = theta0 + (theta1 - theta0) * j as f64 / n_theta as f64;
        for i in 0..=n_r {
            let r = r_in * (r_out / r_in).powf(i as f64 / n_r as f64);
            vertices.push([r * th.cos(), r * th.sin()]);
        }
    }
    let mut elems = Vec::new();
    let mut boundary = Vec::new();
    for j in 0..n_theta {
        for i in 0..n_r {
            let e = elems.len();
            elems.push([vid(i, j), vid(i + 1, j), vid(i + 1, j + 1), vid(i, j + 1)]);
            if i == 0 {
                boundary.push((e, 3, annulus_tags::INNER));
            }
            if i == n_r - 1 {
                boundary.push((e, 1, annulus_tags::OUTER));
            }
            if !full && j == 0 {
                boundary.push((e, 0, annulus_tags::SYMMETRY));
            }
            if !full && j == n_theta - 1 {
                boundary.push((e, 2, annulus_tags::SYMMETRY));
            }
        }
    }
    QuadMesh::new(vertices, elems, &boundary, Vec::new())
}

/// Radial projection onto the circles of an annulus built by [`annulus`].
pub fn annulus_projection(r_in: f64, r_out: f64) -> impl Fn(usize, [f64; 2]) -> Option<[f64; 2]> {
    move |tag, x| {
        let r = match tag {
            annulus_tags::INNER => r_in,
            annulus_tags::OUTER => r_out,
            _ => return None,
        };
        let len = (x[0] * x[0] + x[1] * x[1]).sqrt();
        Some([x[0] * r / len, x[1] * r / len])
    }
}
