//! Lagrange finite element spaces on element sets.
//!
//! Local basis functions are the equispaced-lattice Lagrange polynomials of
//! degree `k`, written in barycentric coordinates as
//! `phi_a(lam) = prod_i prod_{j < a_i} (k lam_i - j) / (j + 1)`.
//! Evaluating the same formula with barycentric coordinates of a point
//! outside the element gives the canonical polynomial extension.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::mesh::{dot3, ElementSet, Mesh, Point, Simplex};
use crate::par;
use crate::quadrature::QuadratureRule;

pub const MAX_DEGREE: usize = 4;

/// Reference Lagrange element of degree `k` on a `dim`-simplex.
#[derive(Clone, Debug)]
pub struct RefElement {
    pub dim: usize,
    pub k: usize,
    /// Lattice multi-indices (barycentric numerators, summing to `k`).
    pub alphas: Vec<[usize; 4]>,
}

impl RefElement {
    pub fn new(dim: usize, k: usize) -> Self {
        assert!((2..=3).contains(&dim) && (1..=MAX_DEGREE).contains(&k));
        let mut alphas = Vec::new();
        for a0 in (0..=k).rev() {
            for a1 in (0..=k - a0).rev() {
                if dim == 2 {
                    alphas.push([a0, a1, k - a0 - a1, 0]);
                } else {
                    for a2 in (0..=k - a0 - a1).rev() {
                        alphas.push([a0, a1, a2, k - a0 - a1 - a2]);
                    }
                }
            }
        }
        RefElement { dim, k, alphas }
    }

    pub fn n_local(&self) -> usize {
        self.alphas.len()
    }

    /// Barycentric coordinates of local node `i`.
    pub fn node(&self, i: usize) -> [f64; 4] {
        self.alphas[i].map(|a| a as f64 / self.k as f64)
    }

    fn factors(&self, lam: &[f64; 4]) -> ([[f64; MAX_DEGREE + 1]; 4], [[f64; MAX_DEGREE + 1]; 4]) {
        let k = self.k as f64;
        let mut p = [[0.0; MAX_DEGREE + 1]; 4];
        let mut dp = [[0.0; MAX_DEGREE + 1]; 4];
        for i in 0..=self.dim {
            p[i][0] = 1.0;
            for m in 0..self.k {
                let c = (m + 1) as f64;
                let f = (k * lam[i] - m as f64) / c;
                p[i][m + 1] = p[i][m] * f;
                dp[i][m + 1] = dp[i][m] * f + p[i][m] * k / c;
            }
        }
        (p, dp)
    }

    pub fn eval(&self, lam: &[f64; 4], vals: &mut [f64]) {
        let (p, _) = self.factors(lam);
        for (v, a) in vals.iter_mut().zip(&self.alphas) {
            *v = (0..=self.dim).map(|i| p[i][a[i]]).product();
        }
    }

    /// Values and derivatives with respect to each barycentric coordinate.
    pub fn eval_with_dlam(&self, lam: &[f64; 4], vals: &mut [f64], dlam: &mut [[f64; 4]]) {
        let (p, dp) = self.factors(lam);
        for (n, a) in self.alphas.iter().enumerate() {
            let mut v = 1.0;
            for i in 0..=self.dim {
                v *= p[i][a[i]];
            }
            vals[n] = v;
            for j in 0..=self.dim {
                let mut d = dp[j][a[j]];
                for i in 0..=self.dim {
                    if i != j {
                        d *= p[i][a[i]];
                    }
                }
                dlam[n][j] = d;
            }
        }
    }

    pub fn tabulate(&self, rule: &QuadratureRule) -> Tabulation {
        let nl = self.n_local();
        let nq = rule.len();
        let mut vals = vec![0.0; nq * nl];
        let mut dlam = vec![[0.0; 4]; nq * nl];
        for q in 0..nq {
            self.eval_with_dlam(&rule.points[q], &mut vals[q * nl..(q + 1) * nl], &mut dlam[q * nl..(q + 1) * nl]);
        }
        Tabulation { n_local: nl, vals, dlam }
    }
}

/// Basis values and barycentric derivatives at the points of a rule.
#[derive(Clone, Debug)]
pub struct Tabulation {
    pub n_local: usize,
    pub vals: Vec<f64>,
    pub dlam: Vec<[f64; 4]>,
}

impl Tabulation {
    pub fn values(&self, q: usize) -> &[f64] {
        &self.vals[q * self.n_local..(q + 1) * self.n_local]
    }

    /// Physical gradients at point `q` on simplex `s`.
    pub fn grads(&self, q: usize, s: &Simplex, out: &mut [Point]) {
        for (n, g) in out.iter_mut().enumerate().take(self.n_local) {
            *g = phys_grad(&self.dlam[q * self.n_local + n], s);
        }
    }
}

pub(crate) fn phys_grad(dlam: &[f64; 4], s: &Simplex) -> Point {
    let mut g = [0.0; 3];
    for i in 0..=s.dim {
        for a in 0..3 {
            g[a] += dlam[i] * s.grad_lambda[i][a];
        }
    }
    g
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Continuity {
    Continuous,
    Discontinuous,
}

/// Lagrange space of degree `k` on an element set.
#[derive(Debug)]
pub struct FeSpace {
    mesh: Arc<Mesh>,
    set: ElementSet,
    refel: RefElement,
    continuity: Continuity,
    /// Position-major local-to-global dof table.
    dofs: Vec<u32>,
    /// Mesh element -> position in the set, `u32::MAX` if absent.
    pos: Vec<u32>,
    ndof: usize,
    /// Continuous spaces: global k-lattice id of each dof.
    node_gid: Vec<u64>,
}

impl FeSpace {
    pub fn new(mesh: Arc<Mesh>, set: ElementSet, k: usize, continuity: Continuity) -> Result<Arc<Self>> {
        if !(1..=MAX_DEGREE).contains(&k) {
            return Err(Error::InvalidArgument(format!("degree {k} not in 1..={MAX_DEGREE}")));
        }
        if set.n_total() != mesh.n_elements() {
            return Err(Error::InvalidArgument("element set does not belong to mesh".into()));
        }
        let refel = RefElement::new(mesh.dim(), k);
        let nl = refel.n_local();
        let elems = set.indices();
        let mut pos = vec![u32::MAX; mesh.n_elements()];
        for (p, &e) in elems.iter().enumerate() {
            pos[e] = p as u32;
        }
        let (dofs, ndof, node_gid) = match continuity {
            Continuity::Discontinuous => ((0..(elems.len() * nl) as u32).collect(), elems.len() * nl, Vec::new()),
            Continuity::Continuous => {
                let gids: Vec<u64> = par::flat_map_range(elems.len(), |p| {
                    let e = elems[p];
                    (0..nl).map(|i| node_gid(&mesh, k, e, &refel.alphas[i])).collect()
                });
                let mut uniq = gids.clone();
                par::stable_sort_by_key(&mut uniq, |g| *g);
                uniq.dedup();
                let dofs = par::map_slice(&gids, |g| uniq.binary_search(g).expect("gid present") as u32);
                let n = uniq.len();
                (dofs, n, uniq)
            }
        };
        Ok(Arc::new(FeSpace { mesh, set, refel, continuity, dofs, pos, ndof, node_gid }))
    }

    pub fn cg(mesh: &Arc<Mesh>, set: &ElementSet, k: usize) -> Result<Arc<Self>> {
        Self::new(mesh.clone(), set.clone(), k, Continuity::Continuous)
    }

    pub fn dg(mesh: &Arc<Mesh>, set: &ElementSet, k: usize) -> Result<Arc<Self>> {
        Self::new(mesh.clone(), set.clone(), k, Continuity::Discontinuous)
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        &self.mesh
    }

    pub fn elements(&self) -> &ElementSet {
        &self.set
    }

    pub fn degree(&self) -> usize {
        self.refel.k
    }

    pub fn refel(&self) -> &RefElement {
        &self.refel
    }

    pub fn continuity(&self) -> Continuity {
        self.continuity
    }

    pub fn is_continuous(&self) -> bool {
        self.continuity == Continuity::Continuous
    }

    pub fn ndof(&self) -> usize {
        self.ndof
    }

    pub fn n_local(&self) -> usize {
        self.refel.n_local()
    }

    pub fn position(&self, e: usize) -> Option<usize> {
        match self.pos.get(e) {
            Some(&p) if p != u32::MAX => Some(p as usize),
            _ => None,
        }
    }

    pub fn local_dofs(&self, e: usize) -> Option<&[u32]> {
        let nl = self.n_local();
        self.position(e).map(|p| &self.dofs[p * nl..(p + 1) * nl])
    }

    /// Coordinates of every dof.
    pub fn dof_points(&self) -> Vec<Point> {
        let nl = self.n_local();
        match self.continuity {
            Continuity::Continuous => {
                let k = self.degree();
                let (lo, hi) = self.mesh.bounds();
                let cells = self.mesh.cells_per_axis();
                let cs = self.mesh.cell_size();
                let dim = self.mesh.dim();
                let nx = (k * cells[0] + 1) as u64;
                let ny = (k * cells[1] + 1) as u64;
                par::map_slice(&self.node_gid, |&g| {
                    let idx = [g % nx, (g / nx) % ny, g / (nx * ny)];
                    let mut x = [0.0; 3];
                    for a in 0..dim {
                        let top = (k * cells[a]) as u64;
                        x[a] = if idx[a] == top { hi[a] } else { lo[a] + idx[a] as f64 * cs[a] / k as f64 };
                    }
                    x
                })
            }
            Continuity::Discontinuous => {
                let elems = self.set.indices();
                par::flat_map_range(elems.len(), |p| {
                    let s = self.mesh.simplex(elems[p]);
                    (0..nl).map(|i| s.point(&self.refel.node(i))).collect()
                })
            }
        }
    }

    /// Global k-lattice ids of the dofs (continuous spaces only).
    pub fn node_gids(&self) -> &[u64] {
        &self.node_gid
    }
}

fn node_gid(mesh: &Mesh, k: usize, e: usize, alpha: &[usize; 4]) -> u64 {
    let cells = mesh.cells_per_axis();
    let nx = (k * cells[0] + 1) as u64;
    let ny = (k * cells[1] + 1) as u64;
    let mut c = [0u64; 3];
    for (i, &v) in mesh.element(e).iter().enumerate() {
        let l = mesh.vertex_lattice(v as usize);
        for a in 0..3 {
            c[a] += (alpha[i] * l[a]) as u64;
        }
    }
    c[0] + nx * (c[1] + ny * c[2])
}

/// Coefficient vector over the dofs of a space.
#[derive(Clone, Debug)]
pub struct FeFunction {
    space: Arc<FeSpace>,
    coeffs: Vec<f64>,
}

impl FeFunction {
    pub fn new(space: Arc<FeSpace>, coeffs: Vec<f64>) -> Result<Self> {
        if coeffs.len() != space.ndof() {
            return Err(Error::InvalidArgument(format!(
                "coefficient length {} != dof count {}",
                coeffs.len(),
                space.ndof()
            )));
        }
        Ok(FeFunction { space, coeffs })
    }

    pub fn zero(space: Arc<FeSpace>) -> Self {
        let n = space.ndof();
        FeFunction { space, coeffs: vec![0.0; n] }
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.space
    }

    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn coeffs_mut(&mut self) -> &mut [f64] {
        &mut self.coeffs
    }

    pub fn into_coeffs(self) -> Vec<f64> {
        self.coeffs
    }

    /// Local coefficients on element `e`; `None` if `e` is not active.
    pub fn local(&self, e: usize) -> Option<Vec<f64>> {
        self.space
            .local_dofs(e)
            .map(|d| d.iter().map(|&i| self.coeffs[i as usize]).collect())
    }

    /// Value at barycentric coordinates `lam` of active element `e`.
    pub fn eval_local(&self, e: usize, lam: &[f64; 4]) -> Option<f64> {
        let dofs = self.space.local_dofs(e)?;
        let mut v = vec![0.0; dofs.len()];
        self.space.refel.eval(lam, &mut v);
        Some(dofs.iter().zip(&v).map(|(&d, b)| self.coeffs[d as usize] * b).sum())
    }

    pub fn grad_local(&self, e: usize, lam: &[f64; 4]) -> Option<Point> {
        let dofs = self.space.local_dofs(e)?;
        let nl = dofs.len();
        let mut v = vec![0.0; nl];
        let mut d = vec![[0.0; 4]; nl];
        self.space.refel.eval_with_dlam(lam, &mut v, &mut d);
        let s = self.space.mesh.simplex(e);
        let mut g = [0.0; 3];
        for (n, &dof) in dofs.iter().enumerate() {
            let gn = phys_grad(&d[n], &s);
            for a in 0..3 {
                g[a] += self.coeffs[dof as usize] * gn[a];
            }
        }
        Some(g)
    }

    /// Value at a physical point; `None` outside the active elements.
    pub fn eval(&self, x: &Point) -> Option<f64> {
        let e = self.space.mesh.locate(x)?;
        if let Some(v) = self.eval_local(e, &self.space.mesh.simplex(e).barycentric(x)) {
            return Some(v);
        }
        // x may sit on a face shared with an active neighbor.
        let s = self.space.mesh.simplex(e);
        let lam = s.barycentric(x);
        for i in 0..=s.dim {
            if lam[i].abs() < 1e-12 {
                if let Some((o, _)) = self.space.mesh.across(e, i) {
                    let lo = self.space.mesh.simplex(o).barycentric(x);
                    if let Some(v) = self.eval_local(o, &lo) {
                        return Some(v);
                    }
                }
            }
        }
        None
    }

    /// `int_S f^2` over the elements of `s` (which must be active).
    pub fn l2_norm_sq_on(&self, s: &ElementSet) -> Result<f64> {
        self.integrate_on(s, 2 * self.space.degree(), |v, _| v * v)
    }

    /// `int_S |grad f|^2` over the elements of `s`.
    pub fn h1_seminorm_sq_on(&self, s: &ElementSet) -> Result<f64> {
        self.integrate_on(s, 2 * self.space.degree(), |_, g| dot3(g, g))
    }

    fn integrate_on<F>(&self, s: &ElementSet, degree: usize, f: F) -> Result<f64>
    where
        F: Fn(f64, &Point) -> f64 + Sync + Send,
    {
        let mesh = &self.space.mesh;
        let rule = QuadratureRule::simplex(mesh.dim(), degree);
        let tab = self.space.refel.tabulate(&rule);
        let nl = self.space.n_local();
        let parts = par::map_slice(s.indices(), |&e| -> Result<f64> {
            let c = self.local(e).ok_or_else(|| Error::NotNested(format!("element {e} not in space")))?;
            let sx = mesh.simplex(e);
            let mut grads = vec![[0.0; 3]; nl];
            let mut acc = 0.0;
            for q in 0..rule.len() {
                let vals = tab.values(q);
                tab.grads(q, &sx, &mut grads);
                let mut v = 0.0;
                let mut g = [0.0; 3];
                for n in 0..nl {
                    v += c[n] * vals[n];
                    for a in 0..3 {
                        g[a] += c[n] * grads[n][a];
                    }
                }
                acc += rule.weights[q] * f(v, &g);
            }
            Ok(acc * sx.det.abs())
        });
        let mut total = 0.0;
        for p in parts {
            total += p?;
        }
        Ok(total)
    }
}

/// Nodal interpolant of `f`.
pub fn interpolate(space: &Arc<FeSpace>, f: &(dyn Fn(&Point) -> f64 + Sync)) -> FeFunction {
    let pts = space.dof_points();
    let coeffs = par::map_slice(&pts, |x| f(x));
    FeFunction { space: space.clone(), coeffs }
}

/// Averages DG nodal values at shared lattice nodes into the continuous
/// space over the same element set.
pub fn oswald_project(dg: &FeFunction, cg: &Arc<FeSpace>) -> Result<FeFunction> {
    let ds = dg.space();
    if ds.is_continuous() || !cg.is_continuous() {
        return Err(Error::InvalidArgument("oswald_project maps DG to CG".into()));
    }
    if ds.degree() != cg.degree() || ds.elements() != cg.elements() {
        return Err(Error::InvalidArgument("DG and CG spaces differ in degree or element set".into()));
    }
    let mut sum = vec![0.0; cg.ndof()];
    let mut count = vec![0u32; cg.ndof()];
    for (slot, &d) in cg.dofs.iter().enumerate() {
        sum[d as usize] += dg.coeffs[ds.dofs[slot] as usize];
        count[d as usize] += 1;
    }
    for (s, c) in sum.iter_mut().zip(&count) {
        *s /= *c as f64;
    }
    FeFunction::new(cg.clone(), sum)
}

/// Embeds a function into the DG space over the same elements and degree.
pub fn to_discontinuous(f: &FeFunction, dg: &Arc<FeSpace>) -> Result<FeFunction> {
    let fs = f.space();
    if dg.is_continuous() || fs.degree() != dg.degree() || fs.elements() != dg.elements() {
        return Err(Error::InvalidArgument("target must be the matching DG space".into()));
    }
    let coeffs = fs.dofs.iter().map(|&d| f.coeffs[d as usize]).collect();
    FeFunction::new(dg.clone(), coeffs)
}

/// Transfers `f` to a space whose elements are all active in `f`'s space.
/// Continuous targets take values at shared lattice nodes.
pub fn restrict(f: &FeFunction, target: &Arc<FeSpace>) -> Result<FeFunction> {
    let fs = f.space();
    if fs.degree() != target.degree() {
        return Err(Error::InvalidArgument("degree mismatch".into()));
    }
    if !target.elements().is_subset_of(fs.elements()) {
        return Err(Error::NotNested("target elements not active in source".into()));
    }
    let nl = target.n_local();
    let mut coeffs = vec![0.0; target.ndof()];
    for &e in target.elements().indices() {
        let src = fs.local_dofs(e).expect("checked subset");
        let dst = target.local_dofs(e).expect("active");
        for i in 0..nl {
            coeffs[dst[i] as usize] = f.coeffs[src[i] as usize];
        }
    }
    FeFunction::new(target.clone(), coeffs)
}

/// Local mass matrix of element geometry `s` in the degree-`k` basis.
pub fn local_mass(refel: &RefElement, rule: &QuadratureRule, tab: &Tabulation, s: &Simplex) -> DMatrix<f64> {
    let nl = refel.n_local();
    let mut m = DMatrix::zeros(nl, nl);
    for q in 0..rule.len() {
        let v = tab.values(q);
        let w = rule.weights[q] * s.det.abs();
        for i in 0..nl {
            for j in 0..nl {
                m[(i, j)] += w * v[i] * v[j];
            }
        }
    }
    m
}

/// L^2(T) projection of `f` into P_k(T), as local Lagrange coefficients.
pub fn element_l2_project(mesh: &Mesh, e: usize, k: usize, f: &dyn Fn(&Point) -> f64) -> Result<Vec<f64>> {
    if e >= mesh.n_elements() {
        return Err(Error::OutOfRange { index: e, len: mesh.n_elements() });
    }
    let refel = RefElement::new(mesh.dim(), k);
    let rule = QuadratureRule::simplex(mesh.dim(), 2 * k + 4);
    let tab = refel.tabulate(&rule);
    Ok(element_l2_project_with(&refel, &rule, &tab, &mesh.simplex(e), f)?)
}

pub(crate) fn element_l2_project_with(
    refel: &RefElement,
    rule: &QuadratureRule,
    tab: &Tabulation,
    s: &Simplex,
    f: &dyn Fn(&Point) -> f64,
) -> Result<Vec<f64>> {
    let nl = refel.n_local();
    let m = local_mass(refel, rule, tab, s);
    let mut b = DVector::zeros(nl);
    for q in 0..rule.len() {
        let x = s.point(&rule.points[q]);
        let fx = f(&x);
        let w = rule.weights[q] * s.det.abs();
        let v = tab.values(q);
        for i in 0..nl {
            b[i] += w * fx * v[i];
        }
    }
    let ch = m
        .cholesky()
        .ok_or_else(|| Error::Internal("singular local mass matrix".into()))?;
    Ok(ch.solve(&b).iter().copied().collect())
}

/// Evaluates the polynomial with local coefficients `coeffs` on element `e`
/// at any point `x`, inside the element or not.
pub fn poly_extend_eval(mesh: &Mesh, e: usize, k: usize, coeffs: &[f64], x: &Point) -> f64 {
    let refel = RefElement::new(mesh.dim(), k);
    let lam = mesh.simplex(e).barycentric(x);
    let mut v = vec![0.0; refel.n_local()];
    refel.eval(&lam, &mut v);
    v.iter().zip(coeffs).map(|(a, b)| a * b).sum()
}

/// Element-wise L^2 projection of `f` into a DG space.
pub fn l2_project_dg(space: &Arc<FeSpace>, f: &(dyn Fn(&Point) -> f64 + Sync)) -> Result<FeFunction> {
    if space.is_continuous() {
        return Err(Error::InvalidArgument("l2_project_dg needs a DG space".into()));
    }
    let mesh = space.mesh();
    let k = space.degree();
    let rule = QuadratureRule::simplex(mesh.dim(), 2 * k + 4);
    let tab = space.refel.tabulate(&rule);
    let parts = par::map_slice(space.elements().indices(), |&e| {
        element_l2_project_with(&space.refel, &rule, &tab, &mesh.simplex(e), f)
    });
    let mut coeffs = Vec::with_capacity(space.ndof());
    for p in parts {
        coeffs.extend(p?);
    }
    FeFunction::new(space.clone(), coeffs)
}
