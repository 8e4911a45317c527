//! Narrow-band element sets: cut detection, neighbor layers, ghost-penalty
//! faces and projection domains.

use std::str::FromStr;

use crate::error::{Error, Result};
use crate::fe::{FeFunction, RefElement};
use crate::mesh::{BoundaryFace, ElementSet, FacePatch, Mesh, Point};
use crate::par;

/// Elements on which the nodal values of `phi` change sign strictly
/// (`min < 0 < max` over the degree-k lattice of the element).
pub fn cut_elements(phi: &FeFunction) -> ElementSet {
    let space = phi.space();
    let elems = space.elements().indices();
    let cut = par::map_slice(elems, |&e| {
        let c = phi.local(e).expect("active element");
        sign_change(&c)
    });
    let mut mask = vec![false; space.mesh().n_elements()];
    for (&e, c) in elems.iter().zip(cut) {
        mask[e] = c;
    }
    ElementSet::from_mask(mask)
}

/// Cut elements among `candidates` for a field sampled at the degree-`k`
/// lattice nodes of each element.
pub fn cut_elements_of_field(
    mesh: &Mesh,
    k: usize,
    candidates: &ElementSet,
    f: &(dyn Fn(&Point) -> f64 + Sync),
) -> ElementSet {
    let refel = RefElement::new(mesh.dim(), k);
    let elems = candidates.indices();
    let cut = par::map_slice(elems, |&e| {
        let s = mesh.simplex(e);
        let vals: Vec<f64> = (0..refel.n_local()).map(|i| f(&s.point(&refel.node(i)))).collect();
        sign_change(&vals)
    });
    let mut mask = vec![false; mesh.n_elements()];
    for (&e, c) in elems.iter().zip(cut) {
        mask[e] = c;
    }
    ElementSet::from_mask(mask)
}

fn sign_change(vals: &[f64]) -> bool {
    let mn = vals.iter().cloned().fold(f64::INFINITY, f64::min);
    let mx = vals.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    mn < 0.0 && mx > 0.0
}

/// `j`-fold dilation of `s` under the shared-vertex neighbor relation.
pub fn neighbor_layers(mesh: &Mesh, s: &ElementSet, j: usize) -> ElementSet {
    let mut cur = s.clone();
    for _ in 0..j {
        let mut vmark = vec![false; mesh.n_vertices()];
        for &e in cur.indices() {
            for &v in mesh.element(e) {
                vmark[v as usize] = true;
            }
        }
        let mask = par::map_range(mesh.n_elements(), |e| {
            cur.contains(e) || mesh.element(e).iter().any(|&v| vmark[v as usize])
        });
        cur = ElementSet::from_mask(mask);
    }
    cur
}

/// `outer ⊇ inner`.
pub fn contains(outer: &ElementSet, inner: &ElementSet) -> bool {
    inner.is_subset_of(outer)
}

/// Ghost-penalty faces with their two-element patches.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct GhostPenaltyFaces {
    pub faces: Vec<usize>,
    pub patches: Vec<(usize, usize)>,
}

impl GhostPenaltyFaces {
    pub fn len(&self) -> usize {
        self.faces.len()
    }

    pub fn is_empty(&self) -> bool {
        self.faces.is_empty()
    }
}

/// Faces of elements of `omega_e \ omega_p`, plus all faces of elements of
/// `omega_p` that touch the boundary of `omega_p`, excluding faces without
/// two neighbors in `omega_e`. Sorted by face index.
pub fn gp_faces(mesh: &Mesh, omega_p: &ElementSet, omega_e: &ElementSet) -> Result<GhostPenaltyFaces> {
    if !omega_p.is_subset_of(omega_e) {
        return Err(Error::NotNested("projection domain not inside extension domain".into()));
    }
    let mut on_bp = vec![false; mesh.n_vertices()];
    for bf in mesh.boundary_faces(omega_p) {
        for &v in mesh.face(bf.face) {
            on_bp[v as usize] = true;
        }
    }
    let mut faces: Vec<usize> = par::flat_map_range(omega_e.len(), |p| {
        let e = omega_e.indices()[p];
        let take = !omega_p.contains(e) || mesh.element(e).iter().any(|&v| on_bp[v as usize]);
        if !take {
            return Vec::new();
        }
        (0..mesh.nve())
            .filter_map(|i| match mesh.across(e, i) {
                Some((o, _)) if omega_e.contains(o) => Some(mesh.element_faces(e)[i] as usize),
                _ => None,
            })
            .collect()
    });
    faces.sort_unstable();
    faces.dedup();
    let patches = faces
        .iter()
        .map(|&f| match mesh.face_patch(f).expect("valid face") {
            FacePatch::Interior(a, b) => (a, b),
            FacePatch::Boundary(_) => unreachable!("interior by construction"),
        })
        .collect();
    Ok(GhostPenaltyFaces { faces, patches })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ProjectionMode {
    /// One neighbor layer around the new cut elements.
    Small,
    /// Intersection of the old and new bands.
    Max,
}

impl FromStr for ProjectionMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "small" => Ok(ProjectionMode::Small),
            "max" => Ok(ProjectionMode::Max),
            _ => Err(Error::Config(format!("unknown projection mode '{s}' (small|max)"))),
        }
    }
}

pub fn projection_domain(
    mesh: &Mesh,
    cut_next: &ElementSet,
    mode: ProjectionMode,
    band_prev: &ElementSet,
    band_next: &ElementSet,
) -> ElementSet {
    match mode {
        ProjectionMode::Small => neighbor_layers(mesh, cut_next, 1),
        ProjectionMode::Max => band_prev.intersection(band_next),
    }
}

/// A band `N^J(T_Γ)` with its boundary faces.
#[derive(Clone, Debug)]
pub struct NarrowBand {
    pub set: ElementSet,
    pub cut: ElementSet,
    pub layers: usize,
    pub boundary: Vec<BoundaryFace>,
}

impl NarrowBand {
    pub fn new(mesh: &Mesh, cut: ElementSet, layers: usize) -> Self {
        let set = neighbor_layers(mesh, &cut, layers);
        let boundary = mesh.boundary_faces(&set);
        NarrowBand { set, cut, layers, boundary }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fe::{interpolate, FeSpace};
    use crate::mesh::build_box_mesh;
    use std::sync::Arc;

    fn mesh2() -> Arc<Mesh> {
        Arc::new(build_box_mesh(&[0.0, 0.0], &[1.0, 1.0], &[2, 2]).unwrap())
    }

    #[test]
    fn cut_by_vertical_line() {
        let m = mesh2();
        let s = FeSpace::cg(&m, &ElementSet::full(8), 1).unwrap();
        let phi = interpolate(&s, &|x| x[0] - 0.3);
        // vertex columns x = 0, 0.5, 1: only the left cell column straddles
        assert_eq!(cut_elements(&phi).indices(), &[0, 1, 4, 5]);
        let one = interpolate(&s, &|_| 1.0);
        assert!(cut_elements(&one).is_empty());
    }

    #[test]
    fn zero_at_vertex_is_not_a_cut() {
        let m = mesh2();
        let s = FeSpace::cg(&m, &ElementSet::full(8), 1).unwrap();
        // zero exactly at the center vertex, positive elsewhere
        let phi = interpolate(&s, &|x| (x[0] - 0.5).powi(2) + (x[1] - 0.5).powi(2));
        assert!(cut_elements(&phi).is_empty());
    }

    #[test]
    fn dilation() {
        let m = mesh2();
        let s = ElementSet::from_indices(8, [2]).unwrap();
        assert_eq!(neighbor_layers(&m, &s, 0), s);
        assert_eq!(neighbor_layers(&m, &s, 1).indices(), &[0, 2, 3, 6]);
        let n2 = neighbor_layers(&m, &s, 2);
        assert_eq!(neighbor_layers(&m, &neighbor_layers(&m, &s, 1), 1), n2);
    }

    #[test]
    fn gp_faces_equal_domains() {
        let m = mesh2();
        let s = ElementSet::from_indices(8, [0, 1, 2, 3]).unwrap();
        let g = gp_faces(&m, &s, &s).unwrap();
        // every element of the bottom row touches its boundary; faces with
        // both neighbors inside are the 3 interior edges of that row
        assert_eq!(g.len(), 3);
        for &(a, b) in &g.patches {
            assert!(s.contains(a) && s.contains(b));
        }
    }

    #[test]
    fn gp_faces_rejects_non_nested() {
        let m = mesh2();
        let p = ElementSet::from_indices(8, [0, 7]).unwrap();
        let e = ElementSet::from_indices(8, [0, 1]).unwrap();
        assert!(gp_faces(&m, &p, &e).is_err());
    }

    #[test]
    fn projection_domains() {
        let m = mesh2();
        let empty = ElementSet::empty(8);
        let b = ElementSet::from_indices(8, [0, 1, 2]).unwrap();
        assert!(projection_domain(&m, &empty, ProjectionMode::Small, &b, &b).is_empty());
        assert_eq!(projection_domain(&m, &empty, ProjectionMode::Max, &b, &b), b);
        assert!(contains(&b, &b));
        assert!(contains(&ElementSet::full(8), &b));
        assert!("max".parse::<ProjectionMode>().is_ok());
        assert!("huge".parse::<ProjectionMode>().is_err());
    }
}
