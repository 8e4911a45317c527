//! Ghost-penalty extension of a function from a projection domain `Ω_p`
//! to an enclosing extension domain `Ω_e`.
//!
//! With `s(φ, ψ) = γ h^{-α} Σ_F ∫_{ω(F)} (φ_1 - φ_2)(ψ_1 - ψ_2)`, where `φ_i`
//! is the polynomial extension of `φ|T_i`, the L2 variant solves
//! `(φ_h, ψ)_{Ω_p} + s(φ_h, ψ) = (φ̃, ψ)_{Ω_p}` and the H1 variant uses the
//! H1 inner product on `Ω_p` in both places.

use std::str::FromStr;
use std::sync::Arc;

use nalgebra::DMatrix;

use crate::band::{gp_faces, GhostPenaltyFaces};
use crate::error::{Error, Result};
use crate::fe::{element_l2_project_with, local_mass, FeFunction, FeSpace, RefElement};
use crate::geom::error_degree;
use crate::mesh::{dot3, ElementSet, Mesh, Point};
use crate::par;
use crate::quadrature::QuadratureRule;
use crate::solver::{assemble, Solver, SolverOptions, SparseSystem};

/// Relative slack of the runtime stability check.
pub const STABILITY_SLACK: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GpVariant {
    L2,
    H1,
}

impl GpVariant {
    /// Default penalty exponent.
    pub fn alpha(self) -> f64 {
        match self {
            GpVariant::L2 => 0.0,
            GpVariant::H1 => 2.0,
        }
    }
}

impl FromStr for GpVariant {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "l2" => Ok(GpVariant::L2),
            "h1" => Ok(GpVariant::H1),
            _ => Err(Error::Config(format!("unknown ghost-penalty variant '{s}' (l2|h1)"))),
        }
    }
}

/// Function to be extended, or an argument of the ghost-penalty form.
#[derive(Clone, Copy)]
pub enum ExtInput<'a> {
    Fe(&'a FeFunction),
    Field {
        f: &'a (dyn Fn(&Point) -> f64 + Sync),
        grad: Option<&'a (dyn Fn(&Point) -> Point + Sync)>,
    },
}

#[derive(Debug)]
pub struct ExtensionProblem {
    pub omega_p: ElementSet,
    pub omega_e: ElementSet,
    pub faces: GhostPenaltyFaces,
    pub variant: GpVariant,
    pub alpha: f64,
    pub gamma: f64,
    pub space: Arc<FeSpace>,
    pub h: f64,
}

impl ExtensionProblem {
    /// `alpha = None` selects the variant's default exponent.
    pub fn new(
        mesh: &Arc<Mesh>,
        omega_p: ElementSet,
        omega_e: ElementSet,
        k: usize,
        variant: GpVariant,
        gamma: f64,
        alpha: Option<f64>,
    ) -> Result<Self> {
        if !(gamma > 0.0) {
            return Err(Error::InvalidArgument(format!("gamma_ext must be positive, got {gamma}")));
        }
        if omega_p.is_empty() {
            return Err(Error::EmptySet("projection domain".into()));
        }
        let faces = gp_faces(mesh, &omega_p, &omega_e)?;
        if faces.is_empty() && omega_e.len() > omega_p.len() {
            return Err(Error::EmptySet("ghost-penalty faces with a nonempty extension layer".into()));
        }
        let space = FeSpace::cg(mesh, &omega_e, k)?;
        Ok(ExtensionProblem {
            omega_p,
            omega_e,
            faces,
            variant,
            alpha: alpha.unwrap_or(variant.alpha()),
            gamma,
            space,
            h: mesh.h(),
        })
    }

    pub fn mesh(&self) -> &Arc<Mesh> {
        self.space.mesh()
    }

    pub fn degree(&self) -> usize {
        self.space.degree()
    }

    /// `γ h^{-α}`.
    pub fn penalty_scale(&self) -> f64 {
        self.gamma * self.h.powf(-self.alpha)
    }

    /// Quadrature on `Ω_p` for the mass, stiffness and right-hand side.
    fn projection_rule(&self) -> QuadratureRule {
        QuadratureRule::simplex(self.mesh().dim(), error_degree(self.degree()))
    }

    fn patch_rule(&self) -> QuadratureRule {
        QuadratureRule::simplex(self.mesh().dim(), 2 * self.degree())
    }

    /// Mass (and stiffness for H1) on `Ω_p` over the dofs of `Ω_e`.
    pub fn assemble_projection_part(&self, stiffness: bool) -> Result<SparseSystem> {
        let mesh = self.mesh();
        let rule = self.projection_rule();
        let tab = self.space.refel().tabulate(&rule);
        let nl = self.space.n_local();
        let blocks = par::map_slice(self.omega_p.indices(), |&e| {
            let s = mesh.simplex(e);
            let det = s.det.abs();
            let dofs = self.space.local_dofs(e).expect("Ω_p inside Ω_e");
            let mut a = vec![0.0; nl * nl];
            let mut g = vec![[0.0; 3]; nl];
            for q in 0..rule.len() {
                let w = rule.weights[q] * det;
                let v = tab.values(q);
                if stiffness {
                    tab.grads(q, &s, &mut g);
                }
                for i in 0..nl {
                    for j in 0..nl {
                        let mut x = v[i] * v[j];
                        if stiffness {
                            x += dot3(&g[i], &g[j]);
                        }
                        a[i * nl + j] += w * x;
                    }
                }
            }
            let mut t = Vec::with_capacity(nl * nl);
            for i in 0..nl {
                for j in 0..nl {
                    t.push((dofs[i] as usize, dofs[j] as usize, a[i * nl + j]));
                }
            }
            t
        });
        let n = self.space.ndof();
        assemble(n, blocks.into_iter().flatten().collect(), vec![0.0; n], true)
    }

    /// Patch-local form of the ghost-penalty operator.
    pub fn gp_operator(&self) -> GpOperator {
        let mesh = self.mesh();
        let refel = self.space.refel();
        let nl = self.space.n_local();
        let rule = self.patch_rule();
        let tab = refel.tabulate(&rule);
        let s0 = mesh.simplex(self.faces.patches.first().map_or(0, |p| p.0));
        let mref = local_mass(refel, &rule, &tab, &s0) / s0.det.abs();
        let transfer = |from: usize, to: usize| {
            // values of `from`'s basis at the nodes of `to`
            let sf = mesh.simplex(from);
            let st = mesh.simplex(to);
            let mut e = vec![0.0; nl * nl];
            for i in 0..nl {
                let x = st.point(&refel.node(i));
                refel.eval(&sf.barycentric(&x), &mut e[i * nl..(i + 1) * nl]);
            }
            e
        };
        let patches = par::map_slice(&self.faces.patches, |&(t1, t2)| GpPatch {
            dofs: [
                self.space.local_dofs(t1).expect("patch in Ω_e").to_vec(),
                self.space.local_dofs(t2).expect("patch in Ω_e").to_vec(),
            ],
            det: [mesh.simplex(t1).det.abs(), mesh.simplex(t2).det.abs()],
            e12: transfer(t2, t1),
            e21: transfer(t1, t2),
        });
        GpOperator { n: self.space.ndof(), nl, scale: self.penalty_scale(), mref, patches }
    }

    /// Ghost-penalty matrix `s(φ_j, φ_i)`.
    pub fn assemble_gp(&self) -> Result<SparseSystem> {
        self.gp_operator().assemble()
    }

    /// Mass matrix over all of `Ω_e`.
    pub fn assemble_mass_e(&self) -> Result<SparseSystem> {
        let p = ExtensionProblem {
            omega_p: self.omega_e.clone(),
            omega_e: self.omega_e.clone(),
            faces: GhostPenaltyFaces::default(),
            variant: self.variant,
            alpha: self.alpha,
            gamma: self.gamma,
            space: self.space.clone(),
            h: self.h,
        };
        p.assemble_projection_part(false)
    }

    /// The extension matrix `a(φ_j, φ_i)`.
    pub fn assemble_matrix(&self) -> Result<SparseSystem> {
        let proj = self.assemble_projection_part(self.variant == GpVariant::H1)?;
        let gp = self.assemble_gp()?;
        Ok(add(&proj, &gp))
    }

    /// `((φ̃, ψ_i)_{Ω_p}` or its H1 analogue, `‖φ̃‖^2_{Ω_p})` with the same
    /// quadrature as the matrix.
    pub fn rhs(&self, input: ExtInput) -> Result<(Vec<f64>, f64)> {
        let h1 = self.variant == GpVariant::H1;
        if let ExtInput::Field { grad: None, .. } = input {
            if h1 {
                return Err(Error::InvalidArgument("H1 extension of a field needs its gradient".into()));
            }
        }
        let mesh = self.mesh();
        let rule = self.projection_rule();
        let tab = self.space.refel().tabulate(&rule);
        let nl = self.space.n_local();
        let parts = par::map_slice(self.omega_p.indices(), |&e| -> Result<(Vec<f64>, f64)> {
            let s = mesh.simplex(e);
            let det = s.det.abs();
            let mut b = vec![0.0; nl];
            let mut nrm = 0.0;
            let mut g = vec![[0.0; 3]; nl];
            for q in 0..rule.len() {
                let lam = &rule.points[q];
                let w = rule.weights[q] * det;
                let (fv, fg) = eval_input(&input, e, lam, &s.point(lam), h1)?;
                let v = tab.values(q);
                if h1 {
                    tab.grads(q, &s, &mut g);
                }
                nrm += w * fv * fv;
                if h1 {
                    nrm += w * dot3(&fg, &fg);
                }
                for i in 0..nl {
                    b[i] += w * fv * v[i];
                    if h1 {
                        b[i] += w * dot3(&fg, &g[i]);
                    }
                }
            }
            Ok((b, nrm))
        });
        let mut rhs = vec![0.0; self.space.ndof()];
        let mut norm = 0.0;
        for (&e, p) in self.omega_p.indices().iter().zip(parts) {
            let (b, n) = p?;
            norm += n;
            for (d, v) in self.space.local_dofs(e).expect("Ω_p inside Ω_e").iter().zip(b) {
                rhs[*d as usize] += v;
            }
        }
        Ok((rhs, norm))
    }
}

/// One ghost-penalty patch: on `T1` the jump is `u1 - E12 u2` in the basis
/// of `T1`, on `T2` it is `E21 u1 - u2` in the basis of `T2`.
#[derive(Clone, Debug)]
pub struct GpPatch {
    pub dofs: [Vec<u32>; 2],
    pub det: [f64; 2],
    /// `E12[i * nl + j]` is basis `j` of `T2` at node `i` of `T1`.
    pub e12: Vec<f64>,
    pub e21: Vec<f64>,
}

/// `s(u, v) = scale Σ_patches Σ_{T in patch} jump_T(u)^T M_T jump_T(v)`.
#[derive(Clone, Debug)]
pub struct GpOperator {
    pub n: usize,
    pub nl: usize,
    pub scale: f64,
    /// Reference mass matrix (divided by `|det|`).
    pub mref: DMatrix<f64>,
    pub patches: Vec<GpPatch>,
}

impl GpOperator {
    /// `[C_1; C_2]` with `jump_T = C_T [u1; u2]` for a patch.
    fn jump_maps(&self, p: &GpPatch) -> [DMatrix<f64>; 2] {
        let nl = self.nl;
        let mut c1 = DMatrix::zeros(nl, 2 * nl);
        let mut c2 = DMatrix::zeros(nl, 2 * nl);
        for i in 0..nl {
            c1[(i, i)] = 1.0;
            c2[(i, nl + i)] = -1.0;
            for j in 0..nl {
                c1[(i, nl + j)] = -p.e12[i * nl + j];
                c2[(i, j)] = p.e21[i * nl + j];
            }
        }
        [c1, c2]
    }

    pub fn assemble(&self) -> Result<SparseSystem> {
        let nl = self.nl;
        let blocks = par::map_slice(&self.patches, |p| {
            let [c1, c2] = self.jump_maps(p);
            let a = c1.transpose() * (&self.mref * (p.det[0] * self.scale)) * &c1
                + c2.transpose() * (&self.mref * (p.det[1] * self.scale)) * &c2;
            let gid = |i: usize| if i < nl { p.dofs[0][i] as usize } else { p.dofs[1][i - nl] as usize };
            let mut t = Vec::with_capacity(4 * nl * nl);
            for i in 0..2 * nl {
                for j in 0..2 * nl {
                    t.push((gid(i), gid(j), a[(i, j)]));
                }
            }
            t
        });
        assemble(self.n, blocks.into_iter().flatten().collect(), vec![0.0; self.n], true)
    }

    /// `y = S x` without forming `S`.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let nl = self.nl;
        let parts = par::map_slice(&self.patches, |p| {
            let u1: Vec<f64> = p.dofs[0].iter().map(|&d| x[d as usize]).collect();
            let u2: Vec<f64> = p.dofs[1].iter().map(|&d| x[d as usize]).collect();
            let mut j1 = u1.clone();
            let mut j2: Vec<f64> = u2.iter().map(|v| -v).collect();
            for i in 0..nl {
                for j in 0..nl {
                    j1[i] -= p.e12[i * nl + j] * u2[j];
                    j2[i] += p.e21[i * nl + j] * u1[j];
                }
            }
            let mut r1 = vec![0.0; nl];
            let mut r2 = vec![0.0; nl];
            for i in 0..nl {
                for j in 0..nl {
                    r1[i] += self.mref[(i, j)] * j1[j];
                    r2[i] += self.mref[(i, j)] * j2[j];
                }
            }
            let (w1, w2) = (p.det[0] * self.scale, p.det[1] * self.scale);
            let mut y1 = vec![0.0; nl];
            let mut y2 = vec![0.0; nl];
            for i in 0..nl {
                y1[i] += w1 * r1[i];
                y2[i] -= w2 * r2[i];
                for j in 0..nl {
                    y2[i] -= w1 * p.e12[j * nl + i] * r1[j];
                    y1[i] += w2 * p.e21[j * nl + i] * r2[j];
                }
            }
            (y1, y2)
        });
        let mut y = vec![0.0; self.n];
        for (p, (y1, y2)) in self.patches.iter().zip(parts) {
            for (d, v) in p.dofs[0].iter().zip(y1) {
                y[*d as usize] += v;
            }
            for (d, v) in p.dofs[1].iter().zip(y2) {
                y[*d as usize] += v;
            }
        }
        y
    }
}

fn eval_input(input: &ExtInput, e: usize, lam: &[f64; 4], x: &Point, grad: bool) -> Result<(f64, Point)> {
    match input {
        ExtInput::Fe(f) => {
            let undefined = || Error::NotNested(format!("input undefined on element {e}"));
            let v = f.eval_local(e, lam).ok_or_else(undefined)?;
            let g = if grad { f.grad_local(e, lam).ok_or_else(undefined)? } else { [0.0; 3] };
            Ok((v, g))
        }
        ExtInput::Field { f, grad: gf } => {
            let g = match (grad, gf) {
                (true, Some(gf)) => gf(x),
                _ => [0.0; 3],
            };
            Ok((f(x), g))
        }
    }
}

fn add(a: &SparseSystem, b: &SparseSystem) -> SparseSystem {
    let mut t = Vec::with_capacity(a.nnz() + b.nnz());
    for s in [a, b] {
        for i in 0..s.n {
            for p in s.row_ptr[i]..s.row_ptr[i + 1] {
                t.push((i, s.col_idx[p], s.vals[p]));
            }
        }
    }
    assemble(a.n, t, vec![0.0; a.n], a.symmetric && b.symmetric).expect("same size")
}

/// Local polynomial of `input` on element `e` as `(degree, coeffs)`.
fn local_poly(p: &ExtensionProblem, input: &ExtInput, e: usize) -> Result<(usize, Vec<f64>)> {
    match input {
        ExtInput::Fe(f) => Ok((
            f.space().degree(),
            f.local(e).ok_or_else(|| Error::NotNested(format!("input undefined on element {e}")))?,
        )),
        ExtInput::Field { f, .. } => {
            let mesh = p.mesh();
            let refel = p.space.refel();
            let rule = QuadratureRule::simplex(mesh.dim(), error_degree(p.degree()));
            let tab = refel.tabulate(&rule);
            let c = element_l2_project_with(refel, &rule, &tab, &mesh.simplex(e), *f)?;
            Ok((p.degree(), c))
        }
    }
}

/// `s(φ, ψ)` for finite element functions or fields (through elementwise L2
/// projection).
pub fn ghost_penalty_form(p: &ExtensionProblem, phi: ExtInput, psi: ExtInput) -> Result<f64> {
    let mesh = p.mesh();
    let dim = mesh.dim();
    let mut total = 0.0;
    for &(t1, t2) in &p.faces.patches {
        let polys = [
            [local_poly(p, &phi, t1)?, local_poly(p, &phi, t2)?],
            [local_poly(p, &psi, t1)?, local_poly(p, &psi, t2)?],
        ];
        let deg = polys.iter().flatten().map(|(d, _)| *d).max().expect("nonempty");
        let rule = QuadratureRule::simplex(dim, 2 * deg);
        let s = [mesh.simplex(t1), mesh.simplex(t2)];
        let ev = |(d, c): &(usize, Vec<f64>), which: usize, x: &Point| {
            let r = RefElement::new(dim, *d);
            let mut b = vec![0.0; r.n_local()];
            r.eval(&s[which].barycentric(x), &mut b);
            b.iter().zip(c).map(|(a, b)| a * b).sum::<f64>()
        };
        for own in &s {
            for (lam, w) in rule.points.iter().zip(&rule.weights) {
                let x = own.point(lam);
                let jp = ev(&polys[0][0], 0, &x) - ev(&polys[0][1], 1, &x);
                let js = ev(&polys[1][0], 0, &x) - ev(&polys[1][1], 1, &x);
                total += w * own.det.abs() * jp * js;
            }
        }
    }
    Ok(p.penalty_scale() * total)
}

/// A factorized extension operator.
pub struct Extender {
    pub problem: ExtensionProblem,
    proj: SparseSystem,
    gp: GpOperator,
    solver: Solver,
}

/// Maximum number of refinement sweeps per solve.
const REFINEMENT_SWEEPS: usize = 8;

impl Extender {
    pub fn new(problem: ExtensionProblem, opts: SolverOptions) -> Result<Self> {
        let proj = problem.assemble_projection_part(problem.variant == GpVariant::H1)?;
        let gp = problem.gp_operator();
        let sys = add(&proj, &gp.assemble()?);
        let solver = Solver::new(sys, opts)?;
        Ok(Extender { problem, proj, gp, solver })
    }

    /// The assembled extension matrix.
    pub fn matrix(&self) -> &SparseSystem {
        self.solver.system()
    }

    pub fn gp(&self) -> &GpOperator {
        &self.gp
    }

    pub fn space(&self) -> &Arc<FeSpace> {
        &self.problem.space
    }

    /// `A x` with the ghost-penalty part applied patchwise.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let mut y = self.proj.matvec(x);
        for (a, b) in y.iter_mut().zip(self.gp.apply(x)) {
            *a += b;
        }
        y
    }

    /// Solves `A x = b`, refining the factorized solve against the
    /// patchwise operator until the residual stops decreasing.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let mut x = self.solver.solve(b)?;
        let bn = par::dot(b, b).sqrt();
        if bn == 0.0 {
            return Ok(x);
        }
        let resid = |x: &[f64]| -> Vec<f64> { b.iter().zip(self.apply(x)).map(|(bi, ai)| bi - ai).collect() };
        let mut r = resid(&x);
        let mut rn = par::dot(&r, &r).sqrt();
        for _ in 0..REFINEMENT_SWEEPS {
            if rn <= 1e-15 * bn {
                break;
            }
            let dx = self.solver.solve_correction(&r)?;
            let y: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + d).collect();
            let ry = resid(&y);
            let yn = par::dot(&ry, &ry).sqrt();
            if !(yn < 0.5 * rn) {
                if yn < rn {
                    x = y;
                }
                break;
            }
            x = y;
            r = ry;
            rn = yn;
        }
        Ok(x)
    }

    /// `a(x, x)`.
    fn form(&self, x: &[f64]) -> f64 {
        par::dot(x, &self.apply(x))
    }

    /// Solves the extension problem for `input` and checks the stability
    /// bound `‖φ_h‖_a <= ‖φ̃‖_{Ω_p}`.
    pub fn extend(&self, input: ExtInput) -> Result<FeFunction> {
        let (b, norm_sq) = self.problem.rhs(input)?;
        let x = self.solve(&b)?;
        let lhs = self.form(&x).max(0.0).sqrt();
        let rhs = norm_sq.sqrt();
        if lhs > rhs * (1.0 + STABILITY_SLACK) + f64::MIN_POSITIVE {
            return Err(Error::StabilityViolated { lhs, rhs });
        }
        FeFunction::new(self.problem.space.clone(), x)
    }

    /// `sqrt(a(f, f))` for `f` in the extension space.
    pub fn energy_norm(&self, f: &FeFunction) -> Result<f64> {
        if !Arc::ptr_eq(f.space(), &self.problem.space) {
            return Err(Error::InvalidArgument("function not in the extension space".into()));
        }
        Ok(self.form(f.coeffs()).max(0.0).sqrt())
    }
}

/// Norms after `n` repeated extensions.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RepeatedNorms {
    pub n: usize,
    /// `‖φ^n‖_{Ω_p}`.
    pub norm_p: f64,
    /// `s(φ^n, φ^n)^{1/2}`.
    pub norm_s: f64,
    /// `‖φ^n - φ^0‖_{Ω_p}`.
    pub diff_p: f64,
    /// `‖φ^n - φ^0‖_{Ω_e}`.
    pub diff_e: f64,
}

/// Iterates `a(φ^{n+1}, ψ) = (φ^n, ψ)_{Ω_p}` from `phi0` (in the extension
/// space) and records norms for `n = 0..=n_max`.
pub fn repeated_extend(ext: &Extender, phi0: &FeFunction, n_max: usize) -> Result<Vec<RepeatedNorms>> {
    let p = &ext.problem;
    if p.variant != GpVariant::L2 {
        return Err(Error::InvalidArgument("repeated extension uses the L2 variant".into()));
    }
    if !Arc::ptr_eq(phi0.space(), &p.space) {
        return Err(Error::InvalidArgument("initial function not in the extension space".into()));
    }
    let mp = &ext.proj;
    let me = p.assemble_mass_e()?;
    let x0 = phi0.coeffs().to_vec();
    let mut x = x0.clone();
    let mut out = Vec::with_capacity(n_max + 1);
    for n in 0..=n_max {
        if n > 0 {
            let b = mp.matvec(&x);
            x = ext.solve(&b)?;
        }
        let d: Vec<f64> = x.iter().zip(&x0).map(|(a, b)| a - b).collect();
        out.push(RepeatedNorms {
            n,
            norm_p: mp.form(&x, &x).max(0.0).sqrt(),
            norm_s: par::dot(&x, &ext.gp.apply(&x)).max(0.0).sqrt(),
            diff_p: mp.form(&d, &d).max(0.0).sqrt(),
            diff_e: me.form(&d, &d).max(0.0).sqrt(),
        });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::band::neighbor_layers;
    use crate::fe::interpolate;
    use crate::mesh::build_box_mesh;

    fn setup(variant: GpVariant, k: usize) -> ExtensionProblem {
        let m = Arc::new(build_box_mesh(&[0.0, 0.0], &[1.0, 1.0], &[4, 4]).unwrap());
        let p = ElementSet::from_indices(m.n_elements(), [0, 1, 2, 3, 8, 9]).unwrap();
        let e = neighbor_layers(&m, &p, 1);
        ExtensionProblem::new(&m, p, e, k, variant, 1.0, None).unwrap()
    }

    #[test]
    fn constants_and_polynomials_reproduced() {
        for variant in [GpVariant::L2, GpVariant::H1] {
            for k in 1..=2 {
                let ext = Extender::new(setup(variant, k), SolverOptions::default()).unwrap();
                let f = |_: &Point| 5.0;
                let g = |_: &Point| [0.0; 3];
                let r = ext.extend(ExtInput::Field { f: &f, grad: Some(&g) }).unwrap();
                assert!(r.coeffs().iter().all(|c| (c - 5.0).abs() < 1e-10));
                let q = |x: &Point| if k == 1 { 1.0 + x[0] - 2.0 * x[1] } else { x[0] * x[1] - x[1] * x[1] };
                let qg = |x: &Point| if k == 1 { [1.0, -2.0, 0.0] } else { [x[1], x[0] - 2.0 * x[1], 0.0] };
                let r = ext.extend(ExtInput::Field { f: &q, grad: Some(&qg) }).unwrap();
                let exact = interpolate(ext.space(), &q);
                for (a, b) in r.coeffs().iter().zip(exact.coeffs()) {
                    assert!((a - b).abs() < 1e-10);
                }
            }
        }
    }

    #[test]
    fn gp_form_symmetric_and_zero_on_polynomials() {
        let p = setup(GpVariant::L2, 2);
        let lin = interpolate(&p.space, &|x| x[0] * x[0] + 3.0 * x[1]);
        assert!(ghost_penalty_form(&p, ExtInput::Fe(&lin), ExtInput::Fe(&lin)).unwrap().abs() < 1e-13);
        let a = interpolate(&p.space, &|x| (7.0 * x[0]).sin());
        let b = interpolate(&p.space, &|x| (5.0 * x[1]).cos() * x[0]);
        let ab = ghost_penalty_form(&p, ExtInput::Fe(&a), ExtInput::Fe(&b)).unwrap();
        let ba = ghost_penalty_form(&p, ExtInput::Fe(&b), ExtInput::Fe(&a)).unwrap();
        assert!((ab - ba).abs() < 1e-13);
        let gp = p.assemble_gp().unwrap();
        assert!((gp.form(a.coeffs(), b.coeffs()) - ab).abs() < 1e-13);
    }

    #[test]
    fn rejects_bad_domains() {
        let m = Arc::new(build_box_mesh(&[0.0, 0.0], &[1.0, 1.0], &[2, 2]).unwrap());
        let p = ElementSet::from_indices(8, [0, 1]).unwrap();
        let e = ElementSet::from_indices(8, [0]).unwrap();
        assert!(ExtensionProblem::new(&m, p.clone(), e, 1, GpVariant::L2, 1.0, None).is_err());
        let empty = ElementSet::empty(8);
        assert!(ExtensionProblem::new(&m, empty, p.clone(), 1, GpVariant::L2, 1.0, None).is_err());
        // element 7 is disconnected from {0}: no ghost-penalty face
        let a = ElementSet::from_indices(8, [0]).unwrap();
        let b = ElementSet::from_indices(8, [0, 7]).unwrap();
        assert!(matches!(
            ExtensionProblem::new(&m, a, b, 1, GpVariant::L2, 1.0, None),
            Err(Error::EmptySet(_))
        ));
        assert!(ExtensionProblem::new(&m, p.clone(), p, 1, GpVariant::L2, 0.0, None).is_err());
    }

    #[test]
    fn repeated_extension_monotone() {
        let p = setup(GpVariant::L2, 1);
        let phi0 = interpolate(&p.space, &|x| (3.0 * x[0]).sin() + x[1] * x[1]);
        let ext = Extender::new(p, SolverOptions::default()).unwrap();
        let h = repeated_extend(&ext, &phi0, 20).unwrap();
        assert_eq!(h.len(), 21);
        assert_eq!(h[0].diff_p, 0.0);
        for w in h.windows(2) {
            assert!(w[1].norm_p <= w[0].norm_p * (1.0 + 1e-12));
            assert!(w[1].norm_s <= w[0].norm_s * (1.0 + 1e-12) + 1e-15);
        }
    }
}
