//! Upwind DG discretization of `d_t phi + u . grad phi = 0` on a band with
//! variable-step BDF time stepping.
//!
//! For an element `T` with outward normal `n`, the bilinear form is
//!
//! ```text
//! c0 (phi, psi)_T + (u . grad phi, psi)_T
//!   - int_{dT \ dΩ} min(u.n, 0) (phi_T - phi_nb) psi_T
//!   - int_{dΩ_in}  (u.n) phi psi
//! ```
//!
//! and the right-hand side collects `-sum_i c_i (phi^{n-i}, psi)` plus the
//! inflow term `-int_{dΩ_in} (u.n) phi_D psi`.

use std::collections::HashSet;
use std::str::FromStr;
use std::sync::Arc;

use crate::band::NarrowBand;
use crate::error::{Error, Result};
use crate::fe::{phys_grad, FeFunction, FeSpace, RefElement};
use crate::mesh::{dot3, factorial, BoundaryFace, Mesh, Point, Simplex};
use crate::par;
use crate::quadrature::QuadratureRule;
use crate::solver::{assemble, Solver, SolverOptions, SparseSystem};

/// A vector field that can be sampled inside an element.
pub trait VectorField: Sync {
    fn eval(&self, e: usize, lam: &[f64; 4], x: &Point) -> Point;
}

/// Analytic field frozen at time `t`.
pub struct AnalyticField<'a> {
    pub f: &'a (dyn Fn(&Point, f64) -> Point + Sync),
    pub t: f64,
}

impl VectorField for AnalyticField<'_> {
    fn eval(&self, _e: usize, _lam: &[f64; 4], x: &Point) -> Point {
        (self.f)(x, self.t)
    }
}

/// Componentwise finite element field.
pub struct FeVelocity {
    pub comps: Vec<FeFunction>,
    refel: RefElement,
}

impl FeVelocity {
    pub fn new(comps: Vec<FeFunction>) -> Result<Self> {
        let s = comps
            .first()
            .ok_or_else(|| Error::InvalidArgument("velocity needs components".into()))?
            .space()
            .clone();
        if comps.iter().any(|c| !Arc::ptr_eq(c.space(), &s)) {
            return Err(Error::InvalidArgument("velocity components on different spaces".into()));
        }
        let refel = RefElement::new(s.mesh().dim(), s.degree());
        Ok(FeVelocity { comps, refel })
    }

    /// Nodal interpolant of `u(·, t)` in `space`.
    pub fn interpolate(space: &Arc<FeSpace>, u: &(dyn Fn(&Point, f64) -> Point + Sync), t: f64) -> Result<Self> {
        let pts = space.dof_points();
        let vals = par::map_slice(&pts, |x| u(x, t));
        let dim = space.mesh().dim();
        let comps = (0..dim)
            .map(|a| FeFunction::new(space.clone(), vals.iter().map(|v| v[a]).collect()))
            .collect::<Result<Vec<_>>>()?;
        Self::new(comps)
    }
}

impl VectorField for FeVelocity {
    fn eval(&self, e: usize, lam: &[f64; 4], _x: &Point) -> Point {
        let sp = self.comps[0].space();
        let dofs = sp.local_dofs(e).expect("velocity defined on element");
        let mut b = vec![0.0; dofs.len()];
        self.refel.eval(lam, &mut b);
        let mut u = [0.0; 3];
        for (a, c) in self.comps.iter().enumerate() {
            u[a] = dofs.iter().zip(&b).map(|(&d, w)| c.coeffs()[d as usize] * w).sum();
        }
        u
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FaceFlow {
    /// `u.n < 0` at every face quadrature point.
    Inflow,
    /// `u.n >= 0` at every face quadrature point.
    Outflow,
    Mixed,
}

#[derive(Clone, Copy, Debug)]
pub struct FaceClass {
    pub local: usize,
    pub normal: Point,
    pub flow: FaceFlow,
}

/// Face quadrature rule for transport terms of degree `k`.
pub fn face_rule(dim: usize, k: usize) -> QuadratureRule {
    QuadratureRule::simplex(dim - 1, transport_degree(k))
}

/// Quadrature degree for transport terms: products of the degree-k
/// velocity, trial and test functions.
pub fn transport_degree(k: usize) -> usize {
    (2 * k + 1).max(3 * k)
}

/// Barycentric coordinates in `s` (element `e` of `mesh`) of a point given
/// by face barycentrics `mu` on local face `i`.
fn face_to_elem(dim: usize, i: usize, mu: &[f64; 4]) -> [f64; 4] {
    let mut lam = [0.0; 4];
    let mut c = 0;
    for (j, l) in lam.iter_mut().enumerate().take(dim + 1) {
        if j != i {
            *l = mu[c];
            c += 1;
        }
    }
    lam
}

/// Barycentric coordinates in element `o` of the face point whose
/// coordinates in element `e` are `lam`, matching shared vertices.
fn match_vertices(mesh: &Mesh, e: usize, o: usize, lam: &[f64; 4]) -> [f64; 4] {
    let ve = mesh.element(e);
    let mut out = [0.0; 4];
    for (j, v) in mesh.element(o).iter().enumerate() {
        if let Some(p) = ve.iter().position(|w| w == v) {
            out[j] = lam[p];
        }
    }
    out
}

/// Labels the faces of element `e` by the sign of `u(·, t) . n` at the face
/// quadrature points (degree-`k` transport rule).
pub fn classify_element_faces(
    mesh: &Mesh,
    e: usize,
    u: &(dyn Fn(&Point, f64) -> Point + Sync),
    t: f64,
    k: usize,
) -> Vec<FaceClass> {
    let s = mesh.simplex(e);
    let rule = face_rule(mesh.dim(), k);
    (0..mesh.nve())
        .map(|i| {
            let n = s.face_normal(i);
            let (mut neg, mut nonneg) = (false, false);
            for mu in &rule.points {
                let x = s.point(&face_to_elem(mesh.dim(), i, mu));
                if dot3(&u(&x, t), &n) < 0.0 {
                    neg = true;
                } else {
                    nonneg = true;
                }
            }
            let flow = match (neg, nonneg) {
                (true, false) => FaceFlow::Inflow,
                (false, _) => FaceFlow::Outflow,
                _ => FaceFlow::Mixed,
            };
            FaceClass { local: i, normal: n, flow }
        })
        .collect()
}

fn face_centroid(mesh: &Mesh, f: usize) -> Point {
    let vs = mesh.face(f);
    let mut c = [0.0; 3];
    for &v in vs {
        let x = mesh.vertex(v as usize);
        for a in 0..3 {
            c[a] += x[a] / vs.len() as f64;
        }
    }
    c
}

/// Band boundary faces with `u(·, t_n) . n < 0` at the face centroid.
pub fn domain_inflow_faces(
    mesh: &Mesh,
    band: &NarrowBand,
    u: &(dyn Fn(&Point, f64) -> Point + Sync),
    t_n: f64,
) -> Vec<BoundaryFace> {
    band.boundary
        .iter()
        .filter(|b| dot3(&u(&face_centroid(mesh, b.face), t_n), &b.normal) < 0.0)
        .copied()
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BoundaryVariant {
    /// `phi^n`.
    Low,
    /// `2 phi^n - phi^{n-1}`.
    Medium,
    /// `phi^n - (t - t_n) u(t_n) . grad phi^n`.
    High,
    /// Quadratic extrapolation through `t_n, t_{n-1}, t_{n-2}`.
    Quadratic,
}

impl FromStr for BoundaryVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "low" => Ok(BoundaryVariant::Low),
            "med" | "medium" => Ok(BoundaryVariant::Medium),
            "high" => Ok(BoundaryVariant::High),
            "quadratic" => Ok(BoundaryVariant::Quadratic),
            _ => Err(Error::Config(format!("unknown boundary data variant '{s}' (low|med|high)"))),
        }
    }
}

/// Inputs of the inflow boundary data operator.
pub struct BoundaryDataSpec<'a> {
    pub variant: BoundaryVariant,
    /// `(t_n, phi^n), (t_{n-1}, phi^{n-1}), ...`, most recent first.
    pub history: &'a [(f64, FeFunction)],
    pub velocity: Option<&'a (dyn Fn(&Point, f64) -> Point + Sync)>,
}

impl BoundaryDataSpec<'_> {
    fn need(&self, levels: usize) -> Result<()> {
        if self.history.len() < levels {
            return Err(Error::MissingHistory(format!(
                "{:?} boundary data needs {levels} levels, have {}",
                self.variant,
                self.history.len()
            )));
        }
        Ok(())
    }

    /// Checks that the variant's inputs are present.
    pub fn validate(&self) -> Result<()> {
        match self.variant {
            BoundaryVariant::Low => self.need(1),
            BoundaryVariant::Medium => self.need(2),
            BoundaryVariant::High => {
                self.need(1)?;
                if self.velocity.is_none() {
                    return Err(Error::MissingHistory("high boundary data needs the velocity".into()));
                }
                Ok(())
            }
            BoundaryVariant::Quadratic => self.need(3),
        }
    }
}

fn hist_val(f: &FeFunction, e: usize, lam: &[f64; 4]) -> Result<f64> {
    f.eval_local(e, lam)
        .ok_or_else(|| Error::NotNested(format!("history function undefined on element {e}")))
}

/// Boundary data at point `x` (barycentric `lam` in element `e`) and time `t`.
pub fn boundary_value(spec: &BoundaryDataSpec, e: usize, lam: &[f64; 4], x: &Point, t: f64) -> Result<f64> {
    spec.validate()?;
    let h = spec.history;
    match spec.variant {
        BoundaryVariant::Low => hist_val(&h[0].1, e, lam),
        BoundaryVariant::Medium => Ok(2.0 * hist_val(&h[0].1, e, lam)? - hist_val(&h[1].1, e, lam)?),
        BoundaryVariant::High => {
            let (tn, f) = (&h[0].0, &h[0].1);
            let g = f
                .grad_local(e, lam)
                .ok_or_else(|| Error::NotNested(format!("history function undefined on element {e}")))?;
            let u = (spec.velocity.expect("validated"))(x, *tn);
            Ok(hist_val(f, e, lam)? - (t - tn) * dot3(&u, &g))
        }
        BoundaryVariant::Quadratic => {
            let ts = [h[0].0, h[1].0, h[2].0];
            let mut v = 0.0;
            for i in 0..3 {
                let mut l = 1.0;
                for j in 0..3 {
                    if j != i {
                        l *= (t - ts[j]) / (ts[i] - ts[j]);
                    }
                }
                v += l * hist_val(&h[i].1, e, lam)?;
            }
            Ok(v)
        }
    }
}

/// `dphi/dt(t_{n+1}) ≈ leading phi^{n+1} + sum_i history[i] phi^{n-i}`.
#[derive(Clone, Debug, PartialEq)]
pub struct BdfCoefficients {
    pub leading: f64,
    pub history: Vec<f64>,
}

/// Variable-step BDF coefficients of order `order` for step sizes
/// `steps = [tau_n, tau_{n-1}, ...]` (at least `order` entries).
pub fn bdf_coefficients(order: usize, steps: &[f64]) -> Result<BdfCoefficients> {
    if !(1..=3).contains(&order) {
        return Err(Error::InvalidArgument(format!("BDF order {order} not in 1..=3")));
    }
    if steps.len() < order {
        return Err(Error::MissingHistory(format!("BDF{order} needs {order} step sizes, have {}", steps.len())));
    }
    if steps[..order].iter().any(|&s| !(s > 0.0)) {
        return Err(Error::InvalidArgument("step sizes must be positive".into()));
    }
    // nodes relative to t_{n+1}
    let mut nodes = vec![0.0];
    let mut acc = 0.0;
    for s in &steps[..order] {
        acc -= s;
        nodes.push(acc);
    }
    // derivative at node 0 of the Lagrange basis polynomials
    let coeff = |j: usize| -> f64 {
        if j == 0 {
            nodes[1..].iter().map(|tm| 1.0 / (0.0 - tm)).sum()
        } else {
            let mut c = 1.0 / (nodes[j] - 0.0);
            for (m, tm) in nodes.iter().enumerate() {
                if m != 0 && m != j {
                    c *= (0.0 - tm) / (nodes[j] - tm);
                }
            }
            c
        }
    };
    Ok(BdfCoefficients { leading: coeff(0), history: (1..=order).map(coeff).collect() })
}

/// Inputs of one transport solve.
pub struct TransportProblem<'a> {
    /// DG space on the band.
    pub space: &'a Arc<FeSpace>,
    /// Velocity at the new time level.
    pub velocity: &'a dyn VectorField,
    pub bdf: &'a BdfCoefficients,
    /// `phi^n, phi^{n-1}, ...` matching `bdf.history`; each must be defined
    /// on every band element.
    pub history: &'a [&'a FeFunction],
    pub inflow: &'a [BoundaryFace],
    /// Inflow data at `(element, barycentric, point)`.
    pub phi_d: &'a (dyn Fn(usize, &[f64; 4], &Point) -> Result<f64> + Sync),
}

struct ElementBlock {
    trips: Vec<(usize, usize, f64)>,
    rhs: Vec<f64>,
}

pub fn assemble_transport(p: &TransportProblem) -> Result<SparseSystem> {
    let space = p.space;
    if space.is_continuous() {
        return Err(Error::InvalidArgument("transport needs a DG space".into()));
    }
    if space.elements().is_empty() {
        return Err(Error::EmptySet("transport band".into()));
    }
    if p.history.len() != p.bdf.history.len() {
        return Err(Error::MissingHistory(format!(
            "{} history functions for {} BDF weights",
            p.history.len(),
            p.bdf.history.len()
        )));
    }
    let mesh = space.mesh();
    let dim = mesh.dim();
    let k = space.degree();
    let nl = space.n_local();
    let refel = space.refel();
    let vrule = QuadratureRule::simplex(dim, transport_degree(k));
    let vtab = refel.tabulate(&vrule);
    let frule = face_rule(dim, k);
    let fscale = factorial(dim - 1);
    let inflow: HashSet<(usize, usize)> = p.inflow.iter().map(|b| (b.element, b.local)).collect();
    let elems = space.elements().indices();

    let blocks = par::map_range(elems.len(), |pos| -> Result<ElementBlock> {
        let e = elems[pos];
        let s: Simplex = mesh.simplex(e);
        let det = s.det.abs();
        let dofs = space.local_dofs(e).expect("active");
        let hist: Vec<Vec<f64>> = p
            .history
            .iter()
            .map(|f| f.local(e).ok_or_else(|| Error::NotNested(format!("history undefined on element {e}"))))
            .collect::<Result<_>>()?;
        let hbasis: Vec<RefElement> = p
            .history
            .iter()
            .map(|f| RefElement::new(dim, f.space().degree()))
            .collect();
        let mut a = vec![0.0; nl * nl];
        let mut rhs = vec![0.0; nl];
        let mut trips = Vec::with_capacity(nl * nl * (dim + 2));
        let mut grads = vec![[0.0; 3]; nl];
        let mut hb = Vec::new();

        for q in 0..vrule.len() {
            let lam = &vrule.points[q];
            let w = vrule.weights[q] * det;
            let x = s.point(lam);
            let u = p.velocity.eval(e, lam, &x);
            let v = vtab.values(q);
            vtab.grads(q, &s, &mut grads);
            let mut hsum = 0.0;
            for (l, c) in p.bdf.history.iter().enumerate() {
                hb.resize(hbasis[l].n_local(), 0.0);
                hbasis[l].eval(lam, &mut hb);
                let val: f64 = hb.iter().zip(&hist[l]).map(|(x, y)| x * y).sum();
                hsum += c * val;
            }
            for i in 0..nl {
                rhs[i] -= w * hsum * v[i];
                for j in 0..nl {
                    a[i * nl + j] += w * (p.bdf.leading * v[j] + dot3(&u, &grads[j])) * v[i];
                }
            }
        }

        let mut vi = vec![0.0; nl];
        let mut vo = vec![0.0; nl];
        for f in 0..=dim {
            let nb = mesh.across(e, f).filter(|(o, _)| space.elements().contains(*o));
            let is_inflow = nb.is_none() && inflow.contains(&(e, f));
            if nb.is_none() && !is_inflow {
                continue;
            }
            let n = s.face_normal(f);
            let wf = s.face_measure(f) * fscale;
            let mut ao = vec![0.0; nl * nl];
            for (mu, wq) in frule.points.iter().zip(&frule.weights) {
                let lam = face_to_elem(dim, f, mu);
                let x = s.point(&lam);
                let un = dot3(&p.velocity.eval(e, &lam, &x), &n);
                let w = wq * wf;
                refel.eval(&lam, &mut vi);
                match nb {
                    Some((o, _)) => {
                        if un >= 0.0 {
                            continue;
                        }
                        let lo = match_vertices(mesh, e, o, &lam);
                        refel.eval(&lo, &mut vo);
                        for i in 0..nl {
                            for j in 0..nl {
                                a[i * nl + j] -= w * un * vi[j] * vi[i];
                                ao[i * nl + j] += w * un * vo[j] * vi[i];
                            }
                        }
                    }
                    None => {
                        let g = (p.phi_d)(e, &lam, &x)?;
                        for i in 0..nl {
                            rhs[i] -= w * un * g * vi[i];
                            for j in 0..nl {
                                a[i * nl + j] -= w * un * vi[j] * vi[i];
                            }
                        }
                    }
                }
            }
            if let Some((o, _)) = nb {
                let od = space.local_dofs(o).expect("active neighbor");
                for i in 0..nl {
                    for j in 0..nl {
                        let v = ao[i * nl + j];
                        if v != 0.0 {
                            trips.push((dofs[i] as usize, od[j] as usize, v));
                        }
                    }
                }
            }
        }
        for i in 0..nl {
            for j in 0..nl {
                trips.push((dofs[i] as usize, dofs[j] as usize, a[i * nl + j]));
            }
        }
        Ok(ElementBlock { trips, rhs })
    });

    let mut trips = Vec::new();
    let mut rhs = vec![0.0; space.ndof()];
    for (pos, b) in blocks.into_iter().enumerate() {
        let b = b?;
        trips.extend(b.trips);
        rhs[pos * nl..(pos + 1) * nl].copy_from_slice(&b.rhs);
    }
    assemble(space.ndof(), trips, rhs, false)
}

/// Assembles and solves one transport step; returns the DG solution.
pub fn step(p: &TransportProblem, opts: SolverOptions) -> Result<FeFunction> {
    let sys = assemble_transport(p)?;
    let rhs = sys.rhs.clone();
    let opts = SolverOptions { block: p.space.n_local(), ..opts };
    let x = Solver::new(sys, opts)?.solve(&rhs)?;
    FeFunction::new(p.space.clone(), x)
}

/// Gradient of a function at barycentric `lam` of simplex `s` from local
/// coefficients (exposed for oracle tests).
pub fn local_grad(refel: &RefElement, s: &Simplex, coeffs: &[f64], lam: &[f64; 4]) -> Point {
    let nl = refel.n_local();
    let mut v = vec![0.0; nl];
    let mut d = vec![[0.0; 4]; nl];
    refel.eval_with_dlam(lam, &mut v, &mut d);
    let mut g = [0.0; 3];
    for n in 0..nl {
        let gn = phys_grad(&d[n], s);
        for a in 0..3 {
            g[a] += coeffs[n] * gn[a];
        }
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_box_mesh, ElementSet};

    #[test]
    fn bdf_equal_steps() {
        let t = 0.1;
        let c1 = bdf_coefficients(1, &[t]).unwrap();
        assert!((c1.leading - 10.0).abs() < 1e-12 && (c1.history[0] + 10.0).abs() < 1e-12);
        let c2 = bdf_coefficients(2, &[t, t]).unwrap();
        for (a, b) in [c2.leading].iter().chain(&c2.history).zip([1.5, -2.0, 0.5]) {
            assert!((a * t - b).abs() < 1e-12);
        }
        let c3 = bdf_coefficients(3, &[t, t, t]).unwrap();
        for (a, b) in [c3.leading].iter().chain(&c3.history).zip([11.0 / 6.0, -3.0, 1.5, -1.0 / 3.0]) {
            assert!((a * t - b).abs() < 1e-12);
        }
        assert!(bdf_coefficients(4, &[t; 4]).is_err());
        assert!(bdf_coefficients(2, &[t]).is_err());
    }

    #[test]
    fn bdf2_variable_leading() {
        let (tn, tp) = (0.3, 0.2);
        let r = tn / tp;
        let c = bdf_coefficients(2, &[tn, tp]).unwrap();
        assert!((c.leading - (1.0 + 2.0 * r) / ((1.0 + r) * tn)).abs() < 1e-12);
    }

    #[test]
    fn unit_triangle_faces() {
        // element 0 of the 1x1 mesh is (0,0),(1,0),(1,1); use a custom
        // simplex through the mesh of the unit square split instead
        let m = build_box_mesh(&[0.0, 0.0], &[1.0, 1.0], &[1, 1]).unwrap();
        // element 1 = (0,0),(1,1),(0,1): faces x=0 (local 1), y=1 (local 0), diagonal (local 2)
        let u = |_: &Point, _: f64| [1.0, 0.0, 0.0];
        let c = classify_element_faces(&m, 1, &u, 0.0, 1);
        assert_eq!(c[1].flow, FaceFlow::Inflow);
        assert_eq!(c[0].flow, FaceFlow::Outflow);
        assert_eq!(c[2].flow, FaceFlow::Outflow);
        let zero = |_: &Point, _: f64| [0.0; 3];
        assert!(classify_element_faces(&m, 1, &zero, 0.0, 1).iter().all(|f| f.flow == FaceFlow::Outflow));
    }

    #[test]
    fn boundary_data_variants() {
        let m = Arc::new(build_box_mesh(&[0.0, 0.0], &[1.0, 1.0], &[2, 2]).unwrap());
        let s = FeSpace::cg(&m, &ElementSet::full(8), 1).unwrap();
        let two = crate::fe::interpolate(&s, &|_| 2.0);
        let one = crate::fe::interpolate(&s, &|_| 1.0);
        let hist = vec![(0.1, two.clone()), (0.0, one)];
        let lam = [0.2, 0.3, 0.5, 0.0];
        let x = m.simplex(0).point(&lam);
        let low = BoundaryDataSpec { variant: BoundaryVariant::Low, history: &hist, velocity: None };
        assert_eq!(boundary_value(&low, 0, &lam, &x, 0.15).unwrap(), 2.0);
        let med = BoundaryDataSpec { variant: BoundaryVariant::Medium, history: &hist, velocity: None };
        assert!((boundary_value(&med, 0, &lam, &x, 0.2).unwrap() - 3.0).abs() < 1e-14);
        let short = vec![(0.1, two)];
        let med1 = BoundaryDataSpec { variant: BoundaryVariant::Medium, history: &short, velocity: None };
        assert!(matches!(boundary_value(&med1, 0, &lam, &x, 0.2), Err(Error::MissingHistory(_))));
        let hi = BoundaryDataSpec { variant: BoundaryVariant::High, history: &short, velocity: None };
        assert!(boundary_value(&hi, 0, &lam, &x, 0.2).is_err());
    }

    #[test]
    fn high_variant_exact_for_linear_motion() {
        // phi = x1 - t, u = (1, 0)
        let m = Arc::new(build_box_mesh(&[0.0, 0.0], &[1.0, 1.0], &[2, 2]).unwrap());
        let s = FeSpace::cg(&m, &ElementSet::full(8), 1).unwrap();
        let tn = 0.25;
        let f = crate::fe::interpolate(&s, &|x| x[0] - tn);
        let hist = vec![(tn, f)];
        let u = |_: &Point, _: f64| [1.0, 0.0, 0.0];
        let spec = BoundaryDataSpec { variant: BoundaryVariant::High, history: &hist, velocity: Some(&u) };
        let lam = [0.1, 0.6, 0.3, 0.0];
        let x = m.simplex(3).point(&lam);
        for t in [0.25, 0.3, 0.4] {
            assert!((boundary_value(&spec, 3, &lam, &x, t).unwrap() - (x[0] - t)).abs() < 1e-14);
        }
    }

    #[test]
    fn quadratic_extrapolation_exact_on_quadratics() {
        let m = Arc::new(build_box_mesh(&[0.0, 0.0], &[1.0, 1.0], &[1, 1]).unwrap());
        let s = FeSpace::cg(&m, &ElementSet::full(2), 1).unwrap();
        let g = |t: f64| 1.0 + 2.0 * t - 3.0 * t * t;
        let hist: Vec<(f64, FeFunction)> =
            [0.3, 0.2, 0.05].iter().map(|&t| (t, crate::fe::interpolate(&s, &move |_| g(t)))).collect();
        let spec = BoundaryDataSpec { variant: BoundaryVariant::Quadratic, history: &hist, velocity: None };
        let lam = [0.3, 0.3, 0.4, 0.0];
        let x = m.simplex(0).point(&lam);
        assert!((boundary_value(&spec, 0, &lam, &x, 0.45).unwrap() - g(0.45)).abs() < 1e-13);
    }
}
