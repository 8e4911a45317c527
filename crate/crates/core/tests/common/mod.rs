//! Dense brute-force oracles shared by the property and acceptance suites.
//!
//! These rebuild the transport and extension matrices one basis pair at a
//! time from point evaluations, with their own geometry (normals, measures,
//! barycentric solves, face sets) and their own quadrature weights.
#![allow(dead_code)]

use std::sync::Arc;

use narrowband::cases::LevelSetCase;
use narrowband::fe::{FeSpace, RefElement};
use narrowband::mesh::{ElementSet, Mesh, Point};
use narrowband::quadrature::QuadratureRule;
use narrowband::solver::SparseSystem;
use narrowband::transport::BdfCoefficients;

pub type Dense = Vec<Vec<f64>>;

fn sub(a: &Point, b: &Point) -> Point {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn dot(a: &Point, b: &Point) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn cross(a: &Point, b: &Point) -> Point {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn verts(mesh: &Mesh, e: usize) -> Vec<Point> {
    mesh.element(e).iter().map(|&v| mesh.vertex(v as usize)).collect()
}

/// Barycentric coordinates of `x` in the simplex `v` by Gaussian elimination.
pub fn bary(v: &[Point], x: &Point) -> [f64; 4] {
    let d = v.len() - 1;
    let mut m = vec![vec![0.0; d + 1]; d];
    for r in 0..d {
        for c in 0..d {
            m[r][c] = v[c + 1][r] - v[0][r];
        }
        m[r][d] = x[r] - v[0][r];
    }
    for c in 0..d {
        let p = (c..d).max_by(|&a, &b| m[a][c].abs().total_cmp(&m[b][c].abs())).unwrap();
        m.swap(c, p);
        for r in 0..d {
            if r != c {
                let f = m[r][c] / m[c][c];
                for cc in c..=d {
                    m[r][cc] -= f * m[c][cc];
                }
            }
        }
    }
    let mut lam = [0.0; 4];
    let mut s = 0.0;
    for i in 0..d {
        lam[i + 1] = m[i][d] / m[i][i];
        s += lam[i + 1];
    }
    lam[0] = 1.0 - s;
    lam
}

fn volume(v: &[Point]) -> f64 {
    let a = sub(&v[1], &v[0]);
    let b = sub(&v[2], &v[0]);
    if v.len() == 3 {
        0.5 * (a[0] * b[1] - a[1] * b[0]).abs()
    } else {
        dot(&a, &cross(&b, &sub(&v[3], &v[0]))).abs() / 6.0
    }
}

/// Outward unit normal and measure of the face of `v` opposite vertex `i`.
fn face_geometry(v: &[Point], i: usize) -> (Point, f64, Vec<Point>) {
    let f: Vec<Point> = (0..v.len()).filter(|&j| j != i).map(|j| v[j]).collect();
    let (mut n, meas) = if f.len() == 2 {
        let t = sub(&f[1], &f[0]);
        let l = dot(&t, &t).sqrt();
        ([t[1] / l, -t[0] / l, 0.0], l)
    } else {
        let c = cross(&sub(&f[1], &f[0]), &sub(&f[2], &f[0]));
        let l = dot(&c, &c).sqrt();
        (c.map(|x| x / l), 0.5 * l)
    };
    if dot(&n, &sub(&v[i], &f[0])) > 0.0 {
        n = n.map(|x| -x);
    }
    (n, meas, f)
}

/// Physical points and weights of a rule on the simplex with vertices `v`.
fn mapped(rule: &QuadratureRule, v: &[Point], meas: f64) -> Vec<(Point, f64)> {
    let total: f64 = rule.weights.iter().sum();
    rule.points
        .iter()
        .zip(&rule.weights)
        .map(|(lam, w)| {
            let mut x = [0.0; 3];
            for (i, p) in v.iter().enumerate() {
                for a in 0..3 {
                    x[a] += lam[i] * p[a];
                }
            }
            (x, w / total * meas)
        })
        .collect()
}

/// Value and gradient of local basis function `j` of element `e`, extended
/// polynomially to any point.
fn basis(refel: &RefElement, v: &[Point], j: usize, x: &Point) -> (f64, Point) {
    let nl = refel.n_local();
    let lam = bary(v, x);
    let mut vals = vec![0.0; nl];
    refel.eval(&lam, &mut vals);
    // gradient by central differences of the polynomial in physical space
    let hstep = 1e-5;
    let mut g = [0.0; 3];
    for a in 0..v.len() - 1 {
        let mut xp = *x;
        let mut xm = *x;
        xp[a] += hstep;
        xm[a] -= hstep;
        let (mut vp, mut vm) = (vec![0.0; nl], vec![0.0; nl]);
        refel.eval(&bary(v, &xp), &mut vp);
        refel.eval(&bary(v, &xm), &mut vm);
        g[a] = (vp[j] - vm[j]) / (2.0 * hstep);
    }
    (vals[j], g)
}

/// Exact gradient of a Lagrange basis polynomial. The finite-difference
/// version above is only used to cross-check this one.
fn basis_exact(refel: &RefElement, v: &[Point], j: usize, x: &Point) -> (f64, Point) {
    let nl = refel.n_local();
    let d = v.len() - 1;
    let lam = bary(v, x);
    let mut vals = vec![0.0; nl];
    let mut dl = vec![[0.0; 4]; nl];
    refel.eval_with_dlam(&lam, &mut vals, &mut dl);
    // grad lambda_i from barycentric of unit offsets (affine map)
    let l0 = bary(v, &[0.0; 3]);
    let mut gl = [[0.0; 3]; 4];
    for a in 0..d {
        let mut ea = [0.0; 3];
        ea[a] = 1.0;
        let la = bary(v, &ea);
        for i in 0..=d {
            gl[i][a] = la[i] - l0[i];
        }
    }
    let mut g = [0.0; 3];
    for i in 0..=d {
        for a in 0..3 {
            g[a] += dl[j][i] * gl[i][a];
        }
    }
    (vals[j], g)
}

/// Dense transport matrix and right-hand side on a DG space.
///
/// Interior faces are upwinded pointwise; `inflow` lists `(element, local
/// face)` pairs on the band boundary carrying the data `phi_d`.
pub fn dense_transport(
    dg: &Arc<FeSpace>,
    u: &dyn Fn(&Point) -> Point,
    bdf: &BdfCoefficients,
    history: &[&dyn Fn(&Point) -> f64],
    inflow: &[(usize, usize)],
    phi_d: &dyn Fn(&Point) -> f64,
) -> (Dense, Vec<f64>) {
    let mesh = dg.mesh();
    let dim = mesh.dim();
    let k = dg.degree();
    let refel = RefElement::new(dim, k);
    let nl = refel.n_local();
    let n = dg.ndof();
    let deg = 3 * k + 2;
    let vrule = QuadratureRule::simplex(dim, deg);
    let frule = QuadratureRule::simplex(dim - 1, deg);
    let mut a = vec![vec![0.0; n]; n];
    let mut b = vec![0.0; n];
    let set = dg.elements();
    for &e in set.indices() {
        let v = verts(mesh, e);
        let de = dg.local_dofs(e).unwrap();
        for (x, w) in mapped(&vrule, &v, volume(&v)) {
            let ux = u(&x);
            let hsum: f64 = bdf.history.iter().zip(history).map(|(c, f)| c * f(&x)).sum();
            for i in 0..nl {
                let (vi, _) = basis_exact(&refel, &v, i, &x);
                b[de[i] as usize] -= w * hsum * vi;
                for j in 0..nl {
                    let (vj, gj) = basis_exact(&refel, &v, j, &x);
                    a[de[i] as usize][de[j] as usize] += w * (bdf.leading * vj + dot(&ux, &gj)) * vi;
                }
            }
        }
        for f in 0..=dim {
            let (nrm, meas, fv) = face_geometry(&v, f);
            let nb = mesh.across(e, f).map(|(o, _)| o).filter(|&o| set.contains(o));
            let is_in = nb.is_none() && inflow.contains(&(e, f));
            if nb.is_none() && !is_in {
                continue;
            }
            for (x, w) in mapped(&frule, &fv, meas) {
                let un = dot(&u(&x), &nrm);
                match nb {
                    Some(o) => {
                        if un >= 0.0 {
                            continue;
                        }
                        let vo = verts(mesh, o);
                        let dof_o = dg.local_dofs(o).unwrap();
                        for i in 0..nl {
                            let (vi, _) = basis_exact(&refel, &v, i, &x);
                            for j in 0..nl {
                                let (vj, _) = basis_exact(&refel, &v, j, &x);
                                let (wj, _) = basis_exact(&refel, &vo, j, &x);
                                // -[phi] psi (u.n) with [phi] = inside - outside
                                a[de[i] as usize][de[j] as usize] -= w * un * vj * vi;
                                a[de[i] as usize][dof_o[j] as usize] += w * un * wj * vi;
                            }
                        }
                    }
                    None => {
                        let g = phi_d(&x);
                        for i in 0..nl {
                            let (vi, _) = basis_exact(&refel, &v, i, &x);
                            b[de[i] as usize] -= w * un * g * vi;
                            for j in 0..nl {
                                let (vj, _) = basis_exact(&refel, &v, j, &x);
                                a[de[i] as usize][de[j] as usize] -= w * un * vj * vi;
                            }
                        }
                    }
                }
            }
        }
    }
    (a, b)
}

/// Ghost-penalty faces straight from the two-clause definition, as sorted
/// `(T1, T2)` patches with `T1 < T2`.
pub fn brute_gp_patches(mesh: &Mesh, p: &ElementSet, e: &ElementSet) -> Vec<(usize, usize)> {
    let nve = mesh.nve();
    let mut on_bp = vec![false; mesh.n_vertices()];
    for &t in p.indices() {
        for f in 0..nve {
            let inside = mesh.across(t, f).is_some_and(|(o, _)| p.contains(o));
            if !inside {
                for (j, &v) in mesh.element(t).iter().enumerate() {
                    if j != f {
                        on_bp[v as usize] = true;
                    }
                }
            }
        }
    }
    let mut out = Vec::new();
    for &t in e.indices() {
        let diff = !p.contains(t);
        let touches = mesh.element(t).iter().any(|&v| on_bp[v as usize]);
        if !(diff || (p.contains(t) && touches)) {
            continue;
        }
        for f in 0..nve {
            if let Some((o, _)) = mesh.across(t, f) {
                if e.contains(o) {
                    out.push((t.min(o), t.max(o)));
                }
            }
        }
    }
    out.sort_unstable();
    out.dedup();
    out
}

/// Dense extension matrix `(u, v)_{Ω_p} [+ (∇u, ∇v)_{Ω_p}] + scale * Σ_F
/// ∫_{ω(F)} (u1 - u2)(v1 - v2)` on the CG space of `Ω_e`.
pub fn dense_extension(cg: &Arc<FeSpace>, p: &ElementSet, stiffness: bool, scale: f64) -> Dense {
    let mesh = cg.mesh();
    let dim = mesh.dim();
    let k = cg.degree();
    let refel = RefElement::new(dim, k);
    let nl = refel.n_local();
    let n = cg.ndof();
    let rule = QuadratureRule::simplex(dim, 2 * k + 2);
    let mut a = vec![vec![0.0; n]; n];
    for &t in p.indices() {
        let v = verts(mesh, t);
        let d = cg.local_dofs(t).unwrap();
        for (x, w) in mapped(&rule, &v, volume(&v)) {
            for i in 0..nl {
                let (vi, gi) = basis_exact(&refel, &v, i, &x);
                for j in 0..nl {
                    let (vj, gj) = basis_exact(&refel, &v, j, &x);
                    let mut val = vi * vj;
                    if stiffness {
                        val += dot(&gi, &gj);
                    }
                    a[d[i] as usize][d[j] as usize] += w * val;
                }
            }
        }
    }
    for (t1, t2) in brute_gp_patches(mesh, p, cg.elements()) {
        let (v1, v2) = (verts(mesh, t1), verts(mesh, t2));
        let (d1, d2) = (cg.local_dofs(t1).unwrap(), cg.local_dofs(t2).unwrap());
        // jump of global basis function g on the patch at x
        let jump = |g: usize, x: &Point| -> f64 {
            let mut s = 0.0;
            for j in 0..nl {
                if d1[j] as usize == g {
                    s += basis_exact(&refel, &v1, j, x).0;
                }
                if d2[j] as usize == g {
                    s -= basis_exact(&refel, &v2, j, x).0;
                }
            }
            s
        };
        let mut dofs: Vec<usize> = d1.iter().chain(d2.iter()).map(|&x| x as usize).collect();
        dofs.sort_unstable();
        dofs.dedup();
        for vv in [&v1, &v2] {
            for (x, w) in mapped(&rule, vv, volume(vv)) {
                let jv: Vec<f64> = dofs.iter().map(|&g| jump(g, &x)).collect();
                for (ii, &gi) in dofs.iter().enumerate() {
                    for (jj, &gj) in dofs.iter().enumerate() {
                        a[gi][gj] += scale * w * jv[ii] * jv[jj];
                    }
                }
            }
        }
    }
    a
}

/// Largest entrywise difference between a sparse system and a dense matrix.
pub fn max_diff(sys: &SparseSystem, d: &Dense) -> f64 {
    let mut m: f64 = 0.0;
    for (i, row) in d.iter().enumerate() {
        for (j, &v) in row.iter().enumerate() {
            m = m.max((sys.get(i, j) - v).abs());
        }
    }
    m
}

pub fn max_abs(d: &Dense) -> f64 {
    d.iter().flatten().fold(0.0, |m: f64, v| m.max(v.abs()))
}

/// Finite-difference gradient agrees with the exact one (sanity check of
/// the oracle's own basis derivative).
pub fn basis_gradient_consistency(refel: &RefElement, v: &[Point]) -> f64 {
    let c: Point = {
        let mut c = [0.0; 3];
        for p in v {
            for a in 0..3 {
                c[a] += p[a] / v.len() as f64;
            }
        }
        c
    };
    (0..refel.n_local())
        .map(|j| {
            let (_, g1) = basis(refel, v, j, &c);
            let (_, g2) = basis_exact(refel, v, j, &c);
            (0..3).map(|a| (g1[a] - g2[a]).abs()).fold(0.0, f64::max)
        })
        .fold(0.0, f64::max)
}

/// Largest `|∂tφ + u·∇φ|` over points mapped from the unit cube into the
/// case's box at random times, skipping critical points of `φ`.
pub fn identity_residual(case: &dyn LevelSetCase, pts: &[(f64, f64, f64, f64)]) -> f64 {
    let (lo, hi) = case.domain();
    let dim = case.dim();
    let mut worst: f64 = 0.0;
    for &(a, b, c, t) in pts {
        let r = [a, b, c];
        let mut x = [0.0; 3];
        for i in 0..dim {
            x[i] = lo[i] + r[i] * (hi[i] - lo[i]);
        }
        let t = t * case.end_time();
        let Ok(u) = case.velocity(&x, t) else { continue };
        let g = case.grad_phi(&x, t);
        let res = case.dt_phi(&x, t) + (0..3).map(|i| u[i] * g[i]).sum::<f64>();
        worst = worst.max(res.abs());
    }
    worst
}

/// Whether `u . n` changes sign across some face shared by two elements of
/// `set`. With an affine `u` the sign on a face is decided by its vertices;
/// on such faces the pointwise upwind integrand has a kink and no face
/// quadrature integrates it exactly.
pub fn has_mixed_interior_face(mesh: &Mesh, set: &ElementSet, u: &dyn Fn(&Point) -> Point) -> bool {
    set.indices().iter().any(|&e| {
        let v = verts(mesh, e);
        (0..v.len()).any(|i| {
            let shared = mesh.across(e, i).is_some_and(|(o, _)| set.contains(o));
            if !shared {
                return false;
            }
            let (n, _, fv) = face_geometry(&v, i);
            let s: Vec<f64> = fv.iter().map(|x| dot(&u(x), &n)).collect();
            s.iter().any(|&a| a < 0.0) && s.iter().any(|&a| a > 0.0)
        })
    })
}
