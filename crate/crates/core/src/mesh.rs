//! Structured simplicial meshes of axis-aligned boxes.
//!
//! 2D cells are split into two triangles along the diagonal from the lower
//! left to the upper right corner; 3D cells are split into the six Kuhn
//! tetrahedra sharing the main diagonal. Elements are numbered cell-major
//! (x fastest), with the per-cell simplices consecutive.
//!
//! Local face `i` of an element is the face opposite local vertex `i`.

use crate::error::{Error, Result};
use crate::par;

/// Points are stored with three components; the third is zero in 2D.
pub type Point = [f64; 3];

const NONE: u32 = u32::MAX;

pub(crate) fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

pub(crate) fn dot3(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: &Point, b: &Point) -> Point {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

pub(crate) fn norm3(a: &Point) -> f64 {
    dot3(a, a).sqrt()
}

pub(crate) fn factorial(n: usize) -> f64 {
    (1..=n).product::<usize>() as f64
}

/// Affine geometry of one simplex.
#[derive(Clone, Copy, Debug)]
pub struct Simplex {
    pub dim: usize,
    pub verts: [Point; 4],
    /// Gradients of the barycentric coordinates (constant on the simplex).
    pub grad_lambda: [Point; 4],
    /// Signed determinant of the affine map from the reference simplex.
    pub det: f64,
}

impl Simplex {
    pub fn from_points(dim: usize, pts: &[Point]) -> Self {
        let mut verts = [[0.0; 3]; 4];
        verts[..=dim].copy_from_slice(&pts[..=dim]);
        let c: Vec<Point> = (1..=dim).map(|i| sub(&verts[i], &verts[0])).collect();
        let mut g = [[0.0; 3]; 4];
        let det;
        if dim == 2 {
            det = c[0][0] * c[1][1] - c[1][0] * c[0][1];
            // rows of the inverse of [c0 c1]
            g[1] = [c[1][1] / det, -c[1][0] / det, 0.0];
            g[2] = [-c[0][1] / det, c[0][0] / det, 0.0];
        } else {
            det = dot3(&c[0], &cross(&c[1], &c[2]));
            let r0 = cross(&c[1], &c[2]);
            let r1 = cross(&c[2], &c[0]);
            let r2 = cross(&c[0], &c[1]);
            g[1] = r0.map(|v| v / det);
            g[2] = r1.map(|v| v / det);
            g[3] = r2.map(|v| v / det);
        }
        for i in 1..=dim {
            for a in 0..3 {
                g[0][a] -= g[i][a];
            }
        }
        Simplex {
            dim,
            verts,
            grad_lambda: g,
            det,
        }
    }

    pub fn volume(&self) -> f64 {
        self.det.abs() / factorial(self.dim)
    }

    pub fn barycentric(&self, x: &Point) -> [f64; 4] {
        let dx = sub(x, &self.verts[0]);
        let mut lam = [0.0; 4];
        let mut s = 0.0;
        for i in 1..=self.dim {
            lam[i] = dot3(&self.grad_lambda[i], &dx);
            s += lam[i];
        }
        lam[0] = 1.0 - s;
        lam
    }

    pub fn point(&self, lam: &[f64]) -> Point {
        let mut x = [0.0; 3];
        for i in 0..=self.dim {
            for a in 0..3 {
                x[a] += lam[i] * self.verts[i][a];
            }
        }
        x
    }

    pub fn centroid(&self) -> Point {
        let w = 1.0 / (self.dim + 1) as f64;
        self.point(&[w; 4][..=self.dim])
    }

    /// Outward unit normal of local face `i`.
    pub fn face_normal(&self, i: usize) -> Point {
        let g = self.grad_lambda[i];
        let n = norm3(&g);
        [-g[0] / n, -g[1] / n, -g[2] / n]
    }

    /// Measure of local face `i`.
    pub fn face_measure(&self, i: usize) -> f64 {
        // |F| = d |T| |grad lambda_i|
        self.dim as f64 * self.volume() * norm3(&self.grad_lambda[i])
    }
}

/// Immutable structured simplicial mesh of a box.
#[derive(Clone, Debug)]
pub struct Mesh {
    dim: usize,
    lo: Point,
    hi: Point,
    cells: [usize; 3],
    cell_size: Point,
    coords: Vec<Point>,
    /// Flat, stride `dim + 1`.
    elements: Vec<u32>,
    /// Flat sorted vertex tuples, stride `dim`.
    faces: Vec<u32>,
    face_elems: Vec<[u32; 2]>,
    face_local: Vec<[u8; 2]>,
    /// Flat, stride `dim + 1`; entry `i` is the face opposite local vertex `i`.
    elem_faces: Vec<u32>,
    vert_elem_off: Vec<u32>,
    vert_elem: Vec<u32>,
    h: f64,
}

/// One or two elements incident to a face.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FacePatch {
    Boundary(usize),
    Interior(usize, usize),
}

/// A face on the boundary of an element set.
#[derive(Clone, Copy, Debug)]
pub struct BoundaryFace {
    pub face: usize,
    /// The incident element inside the set.
    pub element: usize,
    /// Local index of the face in `element`.
    pub local: usize,
    /// Unit normal pointing out of the set.
    pub normal: Point,
}

pub fn build_box_mesh(lo: &[f64], hi: &[f64], cells_per_axis: &[usize]) -> Result<Mesh> {
    let dim = lo.len();
    if !(dim == 2 || dim == 3) || hi.len() != dim || cells_per_axis.len() != dim {
        return Err(Error::InvalidMesh(format!(
            "dimension mismatch: lo {}, hi {}, cells {}",
            lo.len(),
            hi.len(),
            cells_per_axis.len()
        )));
    }
    for a in 0..dim {
        if !(lo[a] < hi[a]) {
            return Err(Error::InvalidMesh(format!("lo[{a}] >= hi[{a}]")));
        }
        if cells_per_axis[a] == 0 {
            return Err(Error::InvalidMesh(format!("zero cells along axis {a}")));
        }
    }
    let mut cells = [1usize; 3];
    cells[..dim].copy_from_slice(cells_per_axis);
    let mut plo = [0.0; 3];
    let mut phi = [0.0; 3];
    plo[..dim].copy_from_slice(lo);
    phi[..dim].copy_from_slice(hi);
    let mut cell_size = [0.0; 3];
    for a in 0..dim {
        cell_size[a] = (phi[a] - plo[a]) / cells[a] as f64;
    }
    let nvx = cells[0] + 1;
    let nvy = cells[1] + 1;
    let nvz = if dim == 3 { cells[2] + 1 } else { 1 };
    let nverts = nvx * nvy * nvz;
    if nverts >= NONE as usize || cells.iter().product::<usize>() * 6 >= NONE as usize {
        return Err(Error::InvalidMesh("mesh too large".into()));
    }
    let coords: Vec<Point> = par::map_range(nverts, |v| {
        let i = v % nvx;
        let j = (v / nvx) % nvy;
        let l = v / (nvx * nvy);
        let mut x = [0.0; 3];
        let ijk = [i, j, l];
        for a in 0..dim {
            x[a] = if ijk[a] == cells[a] {
                phi[a]
            } else {
                plo[a] + ijk[a] as f64 * cell_size[a]
            };
        }
        x
    });
    let vid = |i: usize, j: usize, l: usize| (i + nvx * (j + nvy * l)) as u32;
    let ncells: usize = cells[..dim].iter().product();
    let elements: Vec<u32> = if dim == 2 {
        par::flat_map_range(ncells, |c| {
            let i = c % cells[0];
            let j = c / cells[0];
            let (v00, v10, v11, v01) = (vid(i, j, 0), vid(i + 1, j, 0), vid(i + 1, j + 1, 0), vid(i, j + 1, 0));
            vec![v00, v10, v11, v00, v11, v01]
        })
    } else {
        const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        const ODD: [bool; 6] = [false, true, true, false, false, true];
        par::flat_map_range(ncells, |c| {
            let i = c % cells[0];
            let j = (c / cells[0]) % cells[1];
            let l = c / (cells[0] * cells[1]);
            let mut out = Vec::with_capacity(24);
            for (p, perm) in PERMS.iter().enumerate() {
                let mut cur = [i, j, l];
                let mut tet = [vid(i, j, l); 4];
                for (s, &ax) in perm.iter().enumerate() {
                    cur[ax] += 1;
                    tet[s + 1] = vid(cur[0], cur[1], cur[2]);
                }
                if ODD[p] {
                    tet.swap(2, 3);
                }
                out.extend_from_slice(&tet);
            }
            out
        })
    };
    Ok(Mesh::from_parts(dim, plo, phi, cells, cell_size, coords, elements))
}

impl Mesh {
    fn from_parts(
        dim: usize,
        lo: Point,
        hi: Point,
        cells: [usize; 3],
        cell_size: Point,
        coords: Vec<Point>,
        elements: Vec<u32>,
    ) -> Mesh {
        let nve = dim + 1;
        let nel = elements.len() / nve;

        // Face table: sort (sorted vertex key, element, local face) and group.
        let mut keys: Vec<([u32; 3], u32, u8)> = par::flat_map_range(nel, |e| {
            let el = &elements[e * nve..(e + 1) * nve];
            (0..nve)
                .map(|i| {
                    let mut k = [NONE; 3];
                    let mut c = 0;
                    for (j, &v) in el.iter().enumerate() {
                        if j != i {
                            k[c] = v;
                            c += 1;
                        }
                    }
                    k[..dim].sort_unstable();
                    (k, e as u32, i as u8)
                })
                .collect()
        });
        par::stable_sort_by_key(&mut keys, |t| t.0);
        let mut faces = Vec::new();
        let mut face_elems = Vec::new();
        let mut face_local = Vec::new();
        let mut elem_faces = vec![NONE; nel * nve];
        let mut idx = 0;
        while idx < keys.len() {
            let (k, e0, l0) = keys[idx];
            let f = face_elems.len() as u32;
            faces.extend_from_slice(&k[..dim]);
            elem_faces[e0 as usize * nve + l0 as usize] = f;
            if idx + 1 < keys.len() && keys[idx + 1].0 == k {
                let (_, e1, l1) = keys[idx + 1];
                elem_faces[e1 as usize * nve + l1 as usize] = f;
                face_elems.push([e0, e1]);
                face_local.push([l0, l1]);
                idx += 2;
            } else {
                face_elems.push([e0, NONE]);
                face_local.push([l0, 0]);
                idx += 1;
            }
        }

        // Vertex -> element incidence (CSR).
        let nv = coords.len();
        let mut counts = vec![0u32; nv + 1];
        for &v in &elements {
            counts[v as usize + 1] += 1;
        }
        for i in 0..nv {
            counts[i + 1] += counts[i];
        }
        let mut fill = counts.clone();
        let mut vert_elem = vec![0u32; elements.len()];
        for (pos, &v) in elements.iter().enumerate() {
            let slot = &mut fill[v as usize];
            vert_elem[*slot as usize] = (pos / nve) as u32;
            *slot += 1;
        }

        let mut mesh = Mesh {
            dim,
            lo,
            hi,
            cells,
            cell_size,
            coords,
            elements,
            faces,
            face_elems,
            face_local,
            elem_faces,
            vert_elem_off: counts,
            vert_elem,
            h: 0.0,
        };
        let hmax = par::map_range(nel, |e| {
            let el = mesh.element(e);
            let mut m: f64 = 0.0;
            for a in 0..el.len() {
                for b in a + 1..el.len() {
                    let d = sub(&mesh.coords[el[a] as usize], &mesh.coords[el[b] as usize]);
                    m = m.max(norm3(&d));
                }
            }
            m
        });
        mesh.h = hmax.into_iter().fold(0.0, f64::max);
        mesh
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of vertices per element.
    pub fn nve(&self) -> usize {
        self.dim + 1
    }

    pub fn n_vertices(&self) -> usize {
        self.coords.len()
    }

    pub fn n_elements(&self) -> usize {
        self.elements.len() / self.nve()
    }

    pub fn n_faces(&self) -> usize {
        self.face_elems.len()
    }

    /// Longest edge over all elements.
    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn bounds(&self) -> (Point, Point) {
        (self.lo, self.hi)
    }

    pub fn cells_per_axis(&self) -> Vec<usize> {
        self.cells[..self.dim].to_vec()
    }

    pub fn cell_size(&self) -> Point {
        self.cell_size
    }

    pub fn vertex(&self, v: usize) -> Point {
        self.coords[v]
    }

    pub fn vertices(&self) -> &[Point] {
        &self.coords
    }

    pub fn element(&self, e: usize) -> &[u32] {
        let n = self.nve();
        &self.elements[e * n..(e + 1) * n]
    }

    pub fn element_faces(&self, e: usize) -> &[u32] {
        let n = self.nve();
        &self.elem_faces[e * n..(e + 1) * n]
    }

    pub fn face(&self, f: usize) -> &[u32] {
        &self.faces[f * self.dim..(f + 1) * self.dim]
    }

    /// Integer lattice coordinates of a vertex.
    pub fn vertex_lattice(&self, v: usize) -> [usize; 3] {
        let nvx = self.cells[0] + 1;
        let nvy = self.cells[1] + 1;
        [v % nvx, (v / nvx) % nvy, v / (nvx * nvy)]
    }

    pub fn simplex(&self, e: usize) -> Simplex {
        let mut pts = [[0.0; 3]; 4];
        for (i, &v) in self.element(e).iter().enumerate() {
            pts[i] = self.coords[v as usize];
        }
        Simplex::from_points(self.dim, &pts)
    }

    pub fn volume(&self, e: usize) -> f64 {
        self.simplex(e).volume()
    }

    pub fn face_patch(&self, f: usize) -> Result<FacePatch> {
        let fe = self
            .face_elems
            .get(f)
            .ok_or(Error::OutOfRange { index: f, len: self.n_faces() })?;
        Ok(if fe[1] == NONE {
            FacePatch::Boundary(fe[0] as usize)
        } else {
            FacePatch::Interior(fe[0] as usize, fe[1] as usize)
        })
    }

    /// The element on the other side of local face `i` of `e`, if any.
    pub fn across(&self, e: usize, i: usize) -> Option<(usize, usize)> {
        let f = self.element_faces(e)[i] as usize;
        let fe = self.face_elems[f];
        if fe[1] == NONE {
            return None;
        }
        let side = if fe[0] as usize == e { 1 } else { 0 };
        Some((fe[side] as usize, self.face_local[f][side] as usize))
    }

    pub fn vertex_elements(&self, v: usize) -> &[u32] {
        let a = self.vert_elem_off[v] as usize;
        let b = self.vert_elem_off[v + 1] as usize;
        &self.vert_elem[a..b]
    }

    /// All elements sharing at least one vertex with `e`, excluding `e`, ascending.
    pub fn element_neighbors(&self, e: usize) -> Result<Vec<usize>> {
        if e >= self.n_elements() {
            return Err(Error::OutOfRange { index: e, len: self.n_elements() });
        }
        let mut out: Vec<usize> = self
            .element(e)
            .iter()
            .flat_map(|&v| self.vertex_elements(v as usize).iter().map(|&x| x as usize))
            .filter(|&x| x != e)
            .collect();
        out.sort_unstable();
        out.dedup();
        Ok(out)
    }

    /// Faces of `s` with exactly one incident element inside `s`.
    pub fn boundary_faces(&self, s: &ElementSet) -> Vec<BoundaryFace> {
        let elems = s.indices();
        par::flat_map_range(elems.len(), |p| {
            let e = elems[p];
            let faces = self.element_faces(e);
            let mut out = Vec::new();
            let mut simplex = None;
            for (i, &f) in faces.iter().enumerate() {
                let outside = match self.across(e, i) {
                    None => true,
                    Some((o, _)) => !s.contains(o),
                };
                if outside {
                    let sx = *simplex.get_or_insert_with(|| self.simplex(e));
                    out.push(BoundaryFace {
                        face: f as usize,
                        element: e,
                        local: i,
                        normal: sx.face_normal(i),
                    });
                }
            }
            out
        })
    }

    /// Element containing `x`, if inside the box.
    pub fn locate(&self, x: &Point) -> Option<usize> {
        let d = self.dim;
        let mut c = [0usize; 3];
        for a in 0..d {
            let r = (x[a] - self.lo[a]) / self.cell_size[a];
            if !(-1e-12..=self.cells[a] as f64 + 1e-12).contains(&r) {
                return None;
            }
            c[a] = (r.floor().max(0.0) as usize).min(self.cells[a] - 1);
        }
        let per = if d == 2 { 2 } else { 6 };
        let cell = c[0] + self.cells[0] * (c[1] + self.cells[1] * c[2]);
        let mut best = (f64::NEG_INFINITY, per * cell);
        for e in per * cell..per * (cell + 1) {
            let lam = self.simplex(e).barycentric(x);
            let m = lam[..=d].iter().cloned().fold(f64::INFINITY, f64::min);
            if m > best.0 {
                best = (m, e);
            }
        }
        Some(best.1)
    }
}

pub fn refine_uniform(m: &Mesh) -> Mesh {
    let cells: Vec<usize> = m.cells_per_axis().iter().map(|c| 2 * c).collect();
    build_box_mesh(&m.lo[..m.dim], &m.hi[..m.dim], &cells).expect("refining a valid mesh")
}

/// A subset of the elements of a mesh.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ElementSet {
    elems: Vec<usize>,
    mask: Vec<bool>,
}

impl ElementSet {
    pub fn empty(n_total: usize) -> Self {
        ElementSet { elems: Vec::new(), mask: vec![false; n_total] }
    }

    pub fn full(n_total: usize) -> Self {
        ElementSet { elems: (0..n_total).collect(), mask: vec![true; n_total] }
    }

    pub fn from_indices<I: IntoIterator<Item = usize>>(n_total: usize, it: I) -> Result<Self> {
        let mut mask = vec![false; n_total];
        for e in it {
            if e >= n_total {
                return Err(Error::OutOfRange { index: e, len: n_total });
            }
            mask[e] = true;
        }
        Ok(Self::from_mask(mask))
    }

    pub fn from_mask(mask: Vec<bool>) -> Self {
        let elems = mask.iter().enumerate().filter(|p| *p.1).map(|p| p.0).collect();
        ElementSet { elems, mask }
    }

    pub fn n_total(&self) -> usize {
        self.mask.len()
    }

    pub fn len(&self) -> usize {
        self.elems.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elems.is_empty()
    }

    pub fn contains(&self, e: usize) -> bool {
        self.mask.get(e).copied().unwrap_or(false)
    }

    /// Sorted element indices.
    pub fn indices(&self) -> &[usize] {
        &self.elems
    }

    pub fn mask(&self) -> &[bool] {
        &self.mask
    }

    pub fn is_subset_of(&self, other: &ElementSet) -> bool {
        self.elems.iter().all(|&e| other.contains(e))
    }

    pub fn intersection(&self, other: &ElementSet) -> ElementSet {
        Self::from_mask(self.mask.iter().zip(&other.mask).map(|(a, b)| *a && *b).collect())
    }

    pub fn union(&self, other: &ElementSet) -> ElementSet {
        Self::from_mask(self.mask.iter().zip(&other.mask).map(|(a, b)| *a || *b).collect())
    }

    pub fn difference(&self, other: &ElementSet) -> ElementSet {
        Self::from_mask(self.mask.iter().zip(&other.mask).map(|(a, b)| *a && !*b).collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit2(n: usize) -> Mesh {
        build_box_mesh(&[0.0, 0.0], &[1.0, 1.0], &[n, n]).unwrap()
    }

    #[test]
    fn two_by_two_counts() {
        let m = unit2(2);
        assert_eq!(m.n_elements(), 8);
        assert_eq!(m.n_vertices(), 9);
        assert_eq!(m.n_faces(), 16);
        assert!((m.h() - 0.5 * 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn unit_cube_has_six_tets() {
        let m = build_box_mesh(&[0.0; 3], &[1.0; 3], &[1, 1, 1]).unwrap();
        assert_eq!(m.n_elements(), 6);
        assert_eq!(m.n_vertices(), 8);
        assert!((m.h() - 3f64.sqrt()).abs() < 1e-15);
        let vol: f64 = (0..6).map(|e| m.volume(e)).sum();
        assert!((vol - 1.0).abs() < 1e-14);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(build_box_mesh(&[0.0, 0.0], &[1.0, 1.0], &[0, 2]).is_err());
        assert!(build_box_mesh(&[0.0, 1.0], &[1.0, 1.0], &[2, 2]).is_err());
    }

    #[test]
    fn positive_orientation_and_volume_sum() {
        for m in [
            build_box_mesh(&[-1.0, 0.0], &[2.0, 0.5], &[5, 3]).unwrap(),
            build_box_mesh(&[0.0, -1.0, 0.0], &[1.0, 1.0, 3.0], &[2, 3, 4]).unwrap(),
        ] {
            let mut total = 0.0;
            for e in 0..m.n_elements() {
                let s = m.simplex(e);
                assert!(s.det > 0.0);
                total += s.volume();
            }
            let (lo, hi) = m.bounds();
            let boxv: f64 = (0..m.dim()).map(|a| hi[a] - lo[a]).product();
            assert!((total - boxv).abs() < 1e-12 * boxv);
        }
    }

    #[test]
    fn neighbors_on_two_by_two() {
        let m = unit2(2);
        assert_eq!(m.element(0), &[0, 1, 4]);
        assert_eq!(m.element_neighbors(0).unwrap(), vec![1, 2, 3, 4, 6, 7]);
        assert_eq!(m.element(2), &[1, 2, 5]);
        assert_eq!(m.element_neighbors(2).unwrap(), vec![0, 3, 6]);
        assert!(m.element_neighbors(8).is_err());
    }

    #[test]
    fn one_cell_neighbors() {
        let m = build_box_mesh(&[0.0, 0.0], &[1.0, 1.0], &[1, 1]).unwrap();
        assert_eq!(m.element_neighbors(0).unwrap(), vec![1]);
        let c = build_box_mesh(&[0.0; 3], &[1.0; 3], &[1, 1, 1]).unwrap();
        assert_eq!(c.element_neighbors(3).unwrap().len(), 5);
    }

    #[test]
    fn neighbor_relation_symmetric() {
        let m = build_box_mesh(&[0.0; 3], &[1.0; 3], &[2, 2, 2]).unwrap();
        for a in 0..m.n_elements() {
            for b in m.element_neighbors(a).unwrap() {
                assert!(m.element_neighbors(b).unwrap().contains(&a));
            }
        }
    }

    #[test]
    fn face_patches() {
        let m = unit2(2);
        let mut interior = 0;
        for f in 0..m.n_faces() {
            match m.face_patch(f).unwrap() {
                FacePatch::Interior(a, b) => {
                    interior += 1;
                    let shared = m.element(a).iter().filter(|v| m.element(b).contains(v)).count();
                    assert_eq!(shared, 2);
                }
                FacePatch::Boundary(_) => {}
            }
        }
        assert_eq!(interior, 8);
        assert!(m.face_patch(16).is_err());
    }

    #[test]
    fn face_incidence_involution() {
        let m = build_box_mesh(&[0.0; 3], &[1.0; 3], &[2, 2, 2]).unwrap();
        for e in 0..m.n_elements() {
            for i in 0..4 {
                if let Some((o, j)) = m.across(e, i) {
                    assert_eq!(m.element_faces(o)[j], m.element_faces(e)[i]);
                    assert_eq!(m.across(o, j), Some((e, i)));
                }
            }
        }
    }

    #[test]
    fn boundary_of_full_mesh_and_single_triangle() {
        let m = unit2(2);
        let full = ElementSet::full(m.n_elements());
        assert_eq!(m.boundary_faces(&full).len(), 8);
        let one = ElementSet::from_indices(8, [3]).unwrap();
        let bf = m.boundary_faces(&one);
        assert_eq!(bf.len(), 3);
        for b in &bf {
            assert!((norm3(&b.normal) - 1.0).abs() < 1e-14);
        }
    }

    #[test]
    fn left_half_interface_normals() {
        let m = unit2(2);
        let left: Vec<usize> = (0..8).filter(|&e| m.simplex(e).centroid()[0] < 0.5).collect();
        let s = ElementSet::from_indices(8, left).unwrap();
        for b in m.boundary_faces(&s) {
            let f = m.face(b.face);
            let on_cut = f.iter().all(|&v| (m.vertex(v as usize)[0] - 0.5).abs() < 1e-14);
            if on_cut {
                assert!((b.normal[0] - 1.0).abs() < 1e-14 && b.normal[1].abs() < 1e-14);
            }
            let fc: Point = {
                let mut c = [0.0; 3];
                for &v in f {
                    let x = m.vertex(v as usize);
                    for a in 0..3 {
                        c[a] += x[a] / f.len() as f64;
                    }
                }
                c
            };
            let ec = m.simplex(b.element).centroid();
            assert!(dot3(&b.normal, &sub(&fc, &ec)) > 0.0);
        }
    }

    #[test]
    fn refinement() {
        let m = unit2(2);
        let r = refine_uniform(&m);
        assert_eq!(r.n_elements(), 32);
        assert!((r.h() - m.h() / 2.0).abs() < 1e-15);
        let rr = refine_uniform(&r);
        let direct = unit2(8);
        assert_eq!(rr.vertices(), direct.vertices());
    }

    #[test]
    fn locate_points() {
        let m = build_box_mesh(&[0.0; 3], &[1.0; 3], &[3, 3, 3]).unwrap();
        for x in [[0.1, 0.2, 0.3], [0.9, 0.5, 0.01], [0.5, 0.5, 0.5]] {
            let e = m.locate(&x).unwrap();
            let lam = m.simplex(e).barycentric(&x);
            assert!(lam.iter().all(|&l| l > -1e-12));
        }
        assert!(m.locate(&[1.5, 0.0, 0.0]).is_none());
    }

    #[test]
    fn element_set_operations() {
        let a = ElementSet::from_indices(6, [0, 2, 4]).unwrap();
        let b = ElementSet::from_indices(6, [2, 3]).unwrap();
        assert_eq!(a.intersection(&b).indices(), &[2]);
        assert_eq!(a.union(&b).indices(), &[0, 2, 3, 4]);
        assert_eq!(a.difference(&b).indices(), &[0, 4]);
        assert!(ElementSet::from_indices(6, [7]).is_err());
        assert!(a.intersection(&b).is_subset_of(&a));
    }
}
