//! Interface recovery, enclosed volumes and error functionals.
//!
//! The zero level of a degree-k function is approximated by marching
//! simplices on the `m`-fold edgewise subdivision of each element: the
//! function is sampled at the sub-lattice vertices and each of the `m^d`
//! sub-simplices is treated as linear.

use std::collections::{HashMap, VecDeque};
use std::io::Write;

use crate::cases::LevelSetCase;
use crate::error::{Error, Result};
use crate::fe::{FeFunction, RefElement};
use crate::mesh::{norm3, sub, cross, ElementSet, Mesh, Point};
use crate::par;
use crate::quadrature::QuadratureRule;

/// Value added to exact zeros at sub-vertices before marching.
pub const ZERO_SHIFT: f64 = 1e-14;

/// Quadrature degree on interface facets.
pub const FACET_DEGREE: usize = 8;

/// Piecewise flat interface: segments (2D) or triangles (3D).
#[derive(Clone, Debug, Default)]
pub struct DiscreteInterface {
    pub dim: usize,
    /// Facet vertices; only the first `dim` entries are used.
    pub facets: Vec<[Point; 3]>,
    /// Element containing each facet.
    pub elements: Vec<usize>,
    pub measure: f64,
    pub time: f64,
}

fn facet_measure(dim: usize, f: &[Point; 3]) -> f64 {
    if dim == 2 {
        norm3(&sub(&f[1], &f[0]))
    } else {
        0.5 * norm3(&cross(&sub(&f[1], &f[0]), &sub(&f[2], &f[0])))
    }
}

/// Edgewise subdivision of the reference simplex into `m^d` congruent
/// sub-simplices.
#[derive(Clone, Debug)]
pub struct SubLattice {
    pub dim: usize,
    pub m: usize,
    /// Barycentric coordinates of the sub-vertices.
    pub points: Vec<[f64; 4]>,
    pub simplices: Vec<[usize; 4]>,
}

impl SubLattice {
    pub fn new(dim: usize, m: usize) -> Self {
        assert!(m >= 1 && (2..=3).contains(&dim));
        // Kuhn subdivision of {m >= y1 >= ... >= yd >= 0}, mapped to
        // barycentric numerators b0 = m - y1, bi = yi - y(i+1), bd = yd.
        let perms: Vec<Vec<usize>> = if dim == 2 {
            vec![vec![0, 1], vec![1, 0]]
        } else {
            vec![vec![0, 1, 2], vec![0, 2, 1], vec![1, 0, 2], vec![1, 2, 0], vec![2, 0, 1], vec![2, 1, 0]]
        };
        let mut index: HashMap<[usize; 4], usize> = HashMap::new();
        let mut points = Vec::new();
        let mut simplices = Vec::new();
        let ncube = m.pow(dim as u32);
        for c in 0..ncube {
            let mut y0 = [0usize; 3];
            let mut r = c;
            for a in 0..dim {
                y0[a] = r % m;
                r /= m;
            }
            for p in &perms {
                let mut ys = vec![y0];
                let mut cur = y0;
                for &ax in p {
                    cur[ax] += 1;
                    ys.push(cur);
                }
                let inside = ys.iter().all(|y| (0..dim - 1).all(|a| y[a] >= y[a + 1]));
                if !inside {
                    continue;
                }
                let mut simp = [0usize; 4];
                for (s, y) in ys.iter().enumerate() {
                    let mut b = [0usize; 4];
                    b[0] = m - y[0];
                    for a in 0..dim - 1 {
                        b[a + 1] = y[a] - y[a + 1];
                    }
                    b[dim] = y[dim - 1];
                    let id = *index.entry(b).or_insert_with(|| {
                        points.push(b.map(|v| v as f64 / m as f64));
                        points.len() - 1
                    });
                    simp[s] = id;
                }
                simplices.push(simp);
            }
        }
        SubLattice { dim, m, points, simplices }
    }
}

fn edge_point(xa: &Point, xb: &Point, fa: f64, fb: f64) -> Point {
    let t = fa / (fa - fb);
    [xa[0] + t * (xb[0] - xa[0]), xa[1] + t * (xb[1] - xa[1]), xa[2] + t * (xb[2] - xa[2])]
}

fn shift_zero(v: f64) -> f64 {
    if v == 0.0 {
        ZERO_SHIFT
    } else {
        v
    }
}

/// Zero level of a linear function on one simplex.
fn march(dim: usize, x: &[Point], f: &[f64], out: &mut Vec<[Point; 3]>) {
    let neg: Vec<usize> = (0..=dim).filter(|&i| f[i] < 0.0).collect();
    let pos: Vec<usize> = (0..=dim).filter(|&i| f[i] >= 0.0).collect();
    if neg.is_empty() || pos.is_empty() {
        return;
    }
    let ep = |a: usize, b: usize| edge_point(&x[a], &x[b], f[a], f[b]);
    if dim == 2 {
        let (lone, other) = if neg.len() == 1 { (neg[0], &pos) } else { (pos[0], &neg) };
        out.push([ep(lone, other[0]), ep(lone, other[1]), [0.0; 3]]);
    } else if neg.len() == 1 || pos.len() == 1 {
        let (lone, other) = if neg.len() == 1 { (neg[0], &pos) } else { (pos[0], &neg) };
        out.push([ep(lone, other[0]), ep(lone, other[1]), ep(lone, other[2])]);
    } else {
        let (a, b, c, d) = (neg[0], neg[1], pos[0], pos[1]);
        let (p_ac, p_ad, p_bd, p_bc) = (ep(a, c), ep(a, d), ep(b, d), ep(b, c));
        out.push([p_ac, p_ad, p_bd]);
        out.push([p_ac, p_bd, p_bc]);
    }
}

fn simplex_volume(dim: usize, x: &[Point]) -> f64 {
    if dim == 2 {
        0.5 * (sub(&x[1], &x[0])[0] * sub(&x[2], &x[0])[1] - sub(&x[1], &x[0])[1] * sub(&x[2], &x[0])[0]).abs()
    } else {
        let a = sub(&x[1], &x[0]);
        let b = sub(&x[2], &x[0]);
        let c = sub(&x[3], &x[0]);
        crate::mesh::dot3(&a, &cross(&b, &c)).abs() / 6.0
    }
}

/// Volume of `{f < 0}` for a linear function on one simplex.
fn negative_volume(dim: usize, x: &[Point], f: &[f64]) -> f64 {
    let neg: Vec<usize> = (0..=dim).filter(|&i| f[i] < 0.0).collect();
    let pos: Vec<usize> = (0..=dim).filter(|&i| f[i] >= 0.0).collect();
    let total = simplex_volume(dim, x);
    if pos.is_empty() {
        return total;
    }
    if neg.is_empty() {
        return 0.0;
    }
    let ep = |a: usize, b: usize| edge_point(&x[a], &x[b], f[a], f[b]);
    let corner = |lone: usize, other: &[usize]| {
        let mut pts = vec![x[lone]];
        pts.extend(other.iter().map(|&o| ep(lone, o)));
        simplex_volume(dim, &pts)
    };
    if neg.len() == 1 {
        return corner(neg[0], &pos);
    }
    if pos.len() == 1 {
        return total - corner(pos[0], &neg);
    }
    // 3D, two negative vertices: prism a, p_ac, p_ad | b, p_bc, p_bd
    let (a, b, c, d) = (neg[0], neg[1], pos[0], pos[1]);
    let (a0, a1, a2) = (x[a], ep(a, c), ep(a, d));
    let (b0, b1, b2) = (x[b], ep(b, c), ep(b, d));
    simplex_volume(3, &[a0, a1, a2, b2]) + simplex_volume(3, &[a0, a1, b1, b2]) + simplex_volume(3, &[a0, b0, b1, b2])
}

/// Sub-lattice samples of `phi` on element `e`, with exact zeros shifted.
struct Sampler<'a> {
    phi: &'a FeFunction,
    lattice: SubLattice,
    basis: Vec<Vec<f64>>,
}

impl<'a> Sampler<'a> {
    fn new(phi: &'a FeFunction, m: usize) -> Self {
        let dim = phi.space().mesh().dim();
        let lattice = SubLattice::new(dim, m);
        let refel = RefElement::new(dim, phi.space().degree());
        let basis = lattice
            .points
            .iter()
            .map(|p| {
                let mut v = vec![0.0; refel.n_local()];
                refel.eval(p, &mut v);
                v
            })
            .collect();
        Sampler { phi, lattice, basis }
    }

    fn values(&self, e: usize) -> Vec<f64> {
        let c = self.phi.local(e).expect("active element");
        self.basis
            .iter()
            .map(|b| shift_zero(b.iter().zip(&c).map(|(x, y)| x * y).sum()))
            .collect()
    }
}

/// Marching-simplices zero level of `phi` on the `m`-fold sub-lattice of
/// each active element.
pub fn recover_interface(phi: &FeFunction, m: usize) -> DiscreteInterface {
    let mesh = phi.space().mesh();
    let dim = mesh.dim();
    let sampler = Sampler::new(phi, m);
    let elems = phi.space().elements().indices();
    let per = par::map_slice(elems, |&e| {
        let vals = sampler.values(e);
        let mut out = Vec::new();
        if vals.iter().all(|&v| v > 0.0) || vals.iter().all(|&v| v < 0.0) {
            return out;
        }
        let s = mesh.simplex(e);
        let xs: Vec<Point> = sampler.lattice.points.iter().map(|p| s.point(p)).collect();
        for simp in &sampler.lattice.simplices {
            let x: Vec<Point> = simp[..=dim].iter().map(|&i| xs[i]).collect();
            let f: Vec<f64> = simp[..=dim].iter().map(|&i| vals[i]).collect();
            march(dim, &x, &f, &mut out);
        }
        out
    });
    let mut facets = Vec::new();
    let mut owners = Vec::new();
    for (&e, fs) in elems.iter().zip(per) {
        owners.extend(std::iter::repeat_n(e, fs.len()));
        facets.extend(fs);
    }
    let measure = facets.iter().map(|f| facet_measure(dim, f)).sum();
    DiscreteInterface { dim, facets, elements: owners, measure, time: 0.0 }
}

/// Sub-lattice resolution used for a polynomial degree.
pub fn default_sublevels(k: usize) -> usize {
    match k {
        1 => 1,
        2 => 4,
        3 => 6,
        _ => 8,
    }
}

/// `int_Γ f` over the facets.
pub fn surface_integral(iface: &DiscreteInterface, f: &(dyn Fn(&Point) -> f64 + Sync)) -> f64 {
    let rule = QuadratureRule::simplex(iface.dim - 1, FACET_DEGREE);
    let parts = par::map_slice(&iface.facets, |fc| {
        let meas = facet_measure(iface.dim, fc);
        let mut s = 0.0;
        for (p, w) in rule.points.iter().zip(&rule.weights) {
            s += w * f(&facet_point(iface.dim, fc, p));
        }
        // weights sum to 1/(d-1)!
        s * meas * crate::mesh::factorial(iface.dim - 1)
    });
    parts.iter().sum()
}

/// Maximum of `|f|` over facet vertices and facet quadrature points.
pub fn surface_max_abs(iface: &DiscreteInterface, f: &(dyn Fn(&Point) -> f64 + Sync)) -> f64 {
    let rule = QuadratureRule::simplex(iface.dim - 1, FACET_DEGREE);
    let parts = par::map_slice(&iface.facets, |fc| {
        let mut m: f64 = 0.0;
        for v in &fc[..iface.dim] {
            m = m.max(f(v).abs());
        }
        for p in &rule.points {
            m = m.max(f(&facet_point(iface.dim, fc, p)).abs());
        }
        m
    });
    parts.into_iter().fold(0.0, f64::max)
}

fn facet_point(dim: usize, fc: &[Point; 3], lam: &[f64; 4]) -> Point {
    let mut x = [0.0; 3];
    for (i, v) in fc[..dim].iter().enumerate() {
        for a in 0..3 {
            x[a] += lam[i] * v[a];
        }
    }
    x
}

/// `(int_Γ φ(·,t)^2 / |Γ|)` for one step; errors on an empty interface.
pub fn surface_mean_square(case: &dyn LevelSetCase, iface: &DiscreteInterface) -> Result<f64> {
    if iface.facets.is_empty() || iface.measure <= 0.0 {
        return Err(Error::InterfaceLost { time: iface.time });
    }
    let t = iface.time;
    Ok(surface_integral(iface, &|x| case.phi(x, t).powi(2)) / iface.measure)
}

/// `e_Γ = sqrt(sum_n dt_n int_{Γ_n} φ^2 / |Γ_n|)`, evaluated at each
/// interface's time.
pub fn surface_error_l2(case: &dyn LevelSetCase, ifaces: &[DiscreteInterface], dts: &[f64]) -> Result<f64> {
    if ifaces.len() != dts.len() {
        return Err(Error::InvalidArgument("one step size per interface required".into()));
    }
    let mut acc = 0.0;
    for (g, dt) in ifaces.iter().zip(dts) {
        acc += dt * surface_mean_square(case, g)?;
    }
    Ok(acc.sqrt())
}

/// `e_Γ^∞ = max_n max_{Γ_n} |φ|`.
pub fn surface_error_inf(case: &dyn LevelSetCase, ifaces: &[DiscreteInterface]) -> Result<f64> {
    let mut m: f64 = 0.0;
    for g in ifaces {
        if g.facets.is_empty() {
            return Err(Error::InterfaceLost { time: g.time });
        }
        let t = g.time;
        m = m.max(surface_max_abs(g, &|x| case.phi(x, t)));
    }
    Ok(m)
}

/// Quadrature degree for errors against exact fields.
pub fn error_degree(k: usize) -> usize {
    2 * k + 4
}

/// `(int_Ω (f - φ_h)^2, |Ω|)` over the active elements of `phi_h`.
pub fn band_square_error(phi_h: &FeFunction, f: &(dyn Fn(&Point) -> f64 + Sync)) -> (f64, f64) {
    let space = phi_h.space();
    let mesh = space.mesh();
    let rule = QuadratureRule::simplex(mesh.dim(), error_degree(space.degree()));
    let tab = space.refel().tabulate(&rule);
    let parts = par::map_slice(space.elements().indices(), |&e| {
        let c = phi_h.local(e).expect("active");
        let s = mesh.simplex(e);
        let mut acc = 0.0;
        for q in 0..rule.len() {
            let v: f64 = tab.values(q).iter().zip(&c).map(|(a, b)| a * b).sum();
            let x = s.point(&rule.points[q]);
            acc += rule.weights[q] * (f(&x) - v).powi(2);
        }
        (acc * s.det.abs(), s.volume())
    });
    parts.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1))
}

/// `(int_Ω |g - grad φ_h|^2, |Ω|)` over the active elements of `phi_h`.
pub fn band_square_grad_error(phi_h: &FeFunction, g: &(dyn Fn(&Point) -> Point + Sync)) -> (f64, f64) {
    let space = phi_h.space();
    let mesh = space.mesh();
    let rule = QuadratureRule::simplex(mesh.dim(), error_degree(space.degree()));
    let tab = space.refel().tabulate(&rule);
    let nl = space.n_local();
    let parts = par::map_slice(space.elements().indices(), |&e| {
        let c = phi_h.local(e).expect("active");
        let s = mesh.simplex(e);
        let mut grads = vec![[0.0; 3]; nl];
        let mut acc = 0.0;
        for q in 0..rule.len() {
            tab.grads(q, &s, &mut grads);
            let ex = g(&s.point(&rule.points[q]));
            let mut d = 0.0;
            for a in 0..3 {
                let gh: f64 = grads.iter().zip(&c).map(|(gr, ci)| gr[a] * ci).sum();
                d += (ex[a] - gh).powi(2);
            }
            acc += rule.weights[q] * d;
        }
        (acc * s.det.abs(), s.volume())
    });
    parts.iter().fold((0.0, 0.0), |a, b| (a.0 + b.0, a.1 + b.1))
}

/// `e_L2 = sqrt(sum_n dt_n int_{Ω_n} (φ - φ_h^n)^2 / |Ω_n|)`.
pub fn band_error_l2(case: &dyn LevelSetCase, phis: &[(f64, FeFunction)], dts: &[f64]) -> Result<f64> {
    if phis.len() != dts.len() {
        return Err(Error::InvalidArgument("one step size per function required".into()));
    }
    let mut acc = 0.0;
    for ((t, ph), dt) in phis.iter().zip(dts) {
        let (num, meas) = band_square_error(ph, &|x| case.phi(x, *t));
        acc += dt * num / meas;
    }
    Ok(acc.sqrt())
}

/// Volume of `{φ_h < 0}`: sub-lattice clipping on the active elements, plus
/// whole inactive elements whose side is found by flood fill from the
/// boundary of the active set.
pub fn enclosed_volume(phi: &FeFunction, m: usize) -> Result<f64> {
    let space = phi.space();
    let mesh: &Mesh = space.mesh();
    let dim = mesh.dim();
    let active = space.elements();
    let sampler = Sampler::new(phi, m);
    let inner = par::map_slice(active.indices(), |&e| {
        let vals = sampler.values(e);
        let s = mesh.simplex(e);
        if vals.iter().all(|&v| v < 0.0) {
            return s.volume();
        }
        if vals.iter().all(|&v| v >= 0.0) {
            return 0.0;
        }
        let xs: Vec<Point> = sampler.lattice.points.iter().map(|p| s.point(p)).collect();
        let mut acc = 0.0;
        for simp in &sampler.lattice.simplices {
            let x: Vec<Point> = simp[..=dim].iter().map(|&i| xs[i]).collect();
            let f: Vec<f64> = simp[..=dim].iter().map(|&i| vals[i]).collect();
            acc += negative_volume(dim, &x, &f);
        }
        acc
    });
    let mut volume: f64 = inner.iter().sum();

    // Sign on each boundary face of the active set.
    let mut side: Vec<i8> = vec![0; mesh.n_elements()];
    let mut queue = VecDeque::new();
    for bf in mesh.boundary_faces(active) {
        // faces on the domain boundary bound nothing outside
        let Some((o, _)) = mesh.across(bf.element, bf.local) else {
            continue;
        };
        let vals = sampler.values(bf.element);
        let on_face: Vec<f64> = sampler
            .lattice
            .points
            .iter()
            .zip(&vals)
            .filter(|(p, _)| p[bf.local] == 0.0)
            .map(|(_, &v)| v)
            .collect();
        let neg = on_face.iter().any(|&v| v < 0.0);
        let pos = on_face.iter().any(|&v| v >= 0.0);
        if neg && pos {
            return Err(Error::OpenInterface(format!("zero level crosses boundary face {}", bf.face)));
        }
        let sg = if neg { -1 } else { 1 };
        if side[o] == 0 {
            side[o] = sg;
            queue.push_back(o);
        } else if side[o] != sg {
            return Err(Error::OpenInterface(format!("element {o} seen from both sides")));
        }
    }
    while let Some(e) = queue.pop_front() {
        for i in 0..mesh.nve() {
            if let Some((o, _)) = mesh.across(e, i) {
                if active.contains(o) {
                    continue;
                }
                if side[o] == 0 {
                    side[o] = side[e];
                    queue.push_back(o);
                } else if side[o] != side[e] {
                    return Err(Error::OpenInterface(format!("element {o} seen from both sides")));
                }
            }
        }
    }
    for (e, &sg) in side.iter().enumerate() {
        if sg < 0 {
            volume += mesh.volume(e);
        }
    }
    Ok(volume)
}

/// Writes one line per facet: its vertex coordinates, space separated.
pub fn dump_facets<W: Write>(iface: &DiscreteInterface, mut w: W) -> Result<()> {
    for f in &iface.facets {
        let mut line = Vec::new();
        for v in &f[..iface.dim] {
            for &c in &v[..iface.dim] {
                line.push(format!("{c:.12e}"));
            }
        }
        writeln!(w, "{}", line.join(" "))?;
    }
    Ok(())
}

/// The elements of `s` carrying at least one facet of `iface`.
pub fn facet_elements(iface: &DiscreteInterface, n_total: usize) -> ElementSet {
    ElementSet::from_indices(n_total, iface.elements.iter().copied()).expect("facet owners are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::fe::{interpolate, FeSpace};
    use crate::mesh::build_box_mesh;
    use std::sync::Arc;

    #[test]
    fn sublattice_counts() {
        for dim in 2..=3 {
            for m in 1..=4 {
                let l = SubLattice::new(dim, m);
                assert_eq!(l.simplices.len(), m.pow(dim as u32));
                let np = if dim == 2 { (m + 1) * (m + 2) / 2 } else { (m + 1) * (m + 2) * (m + 3) / 6 };
                assert_eq!(l.points.len(), np);
            }
        }
    }

    #[test]
    fn sublattice_volumes_partition() {
        for dim in 2..=3 {
            let l = SubLattice::new(dim, 3);
            let xs: Vec<Point> = l.points.iter().map(|p| [p[1], p[2], p[3]]).collect();
            let total: f64 = l
                .simplices
                .iter()
                .map(|s| simplex_volume(dim, &s[..=dim].iter().map(|&i| xs[i]).collect::<Vec<_>>()))
                .sum();
            let r = 1.0 / crate::mesh::factorial(dim);
            assert!((total - r).abs() < 1e-14);
        }
    }

    #[test]
    fn straight_line_interface() {
        let m = Arc::new(build_box_mesh(&[0.0, 0.0], &[1.0, 1.0], &[3, 3]).unwrap());
        let s = FeSpace::cg(&m, &ElementSet::full(m.n_elements()), 1).unwrap();
        let phi = interpolate(&s, &|x| x[0] - 0.5);
        let g = recover_interface(&phi, 1);
        assert!((g.measure - 1.0).abs() < 1e-13);
        for f in &g.facets {
            assert!((f[0][0] - 0.5).abs() < 1e-14 && (f[1][0] - 0.5).abs() < 1e-14);
        }
        assert!((enclosed_volume(&phi, 1).unwrap() - 0.5).abs() < 1e-14);
        let pos = interpolate(&s, &|_| 1.0);
        assert!(recover_interface(&pos, 1).facets.is_empty());
    }

    #[test]
    fn plane_in_3d_prism_cases() {
        let m = Arc::new(build_box_mesh(&[0.0; 3], &[1.0; 3], &[3, 3, 3]).unwrap());
        let s = FeSpace::cg(&m, &ElementSet::full(m.n_elements()), 1).unwrap();
        // oblique plane x + y + z = 1.3
        let phi = interpolate(&s, &|x| x[0] + x[1] + x[2] - 1.3);
        let v = enclosed_volume(&phi, 1).unwrap();
        // exact volume of {x+y+z < 1.3} in the unit cube
        let c: f64 = 1.3;
        let exact = (c.powi(3) - 3.0 * (c - 1.0).powi(3)) / 6.0;
        assert!((v - exact).abs() < 1e-13);
    }
}
