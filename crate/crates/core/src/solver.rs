//! Sparse systems and linear solvers.
//!
//! Direct solves use a sparse LU factorization from `faer`. Large symmetric
//! positive definite systems use conjugate gradients preconditioned by
//! symmetric Gauss-Seidel; large unsymmetric systems use BiCGStab with a block-Jacobi
//! preconditioner (blocks are the element-local dof groups of a DG space).

use faer::sparse::{SparseColMat, Triplet};
use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::par;

/// Relative residual required of direct solves.
pub const DIRECT_RESIDUAL_TOL: f64 = 1e-10;

/// Square sparse matrix in CSR form with a right-hand side.
#[derive(Clone, Debug)]
pub struct SparseSystem {
    pub n: usize,
    pub row_ptr: Vec<usize>,
    pub col_idx: Vec<usize>,
    pub vals: Vec<f64>,
    pub rhs: Vec<f64>,
    pub symmetric: bool,
}

/// Sums duplicate triplets into CSR form.
///
/// Duplicates are summed in stream order, so a deterministic stream gives a
/// bitwise deterministic matrix.
pub fn assemble(n: usize, mut triplets: Vec<(usize, usize, f64)>, rhs: Vec<f64>, symmetric: bool) -> Result<SparseSystem> {
    if rhs.len() != n {
        return Err(Error::InvalidArgument(format!("rhs length {} != {n}", rhs.len())));
    }
    for &(i, j, v) in &triplets {
        if i >= n || j >= n {
            return Err(Error::OutOfRange { index: i.max(j), len: n });
        }
        if !v.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite entry at ({i}, {j})")));
        }
    }
    par::stable_sort_by_key(&mut triplets, |t| (t.0, t.1));
    let mut row_ptr = vec![0usize; n + 1];
    let mut col_idx = Vec::new();
    let mut vals = Vec::new();
    let mut last: Option<(usize, usize)> = None;
    for (i, j, v) in triplets {
        if last == Some((i, j)) {
            *vals.last_mut().unwrap() += v;
        } else {
            col_idx.push(j);
            vals.push(v);
            row_ptr[i + 1] += 1;
            last = Some((i, j));
        }
    }
    for i in 0..n {
        row_ptr[i + 1] += row_ptr[i];
    }
    Ok(SparseSystem { n, row_ptr, col_idx, vals, rhs, symmetric })
}

impl SparseSystem {
    pub fn nnz(&self) -> usize {
        self.vals.len()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = &self.col_idx[self.row_ptr[i]..self.row_ptr[i + 1]];
        match r.binary_search(&j) {
            Ok(p) => self.vals[self.row_ptr[i] + p],
            Err(_) => 0.0,
        }
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let mut m = DMatrix::zeros(self.n, self.n);
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                m[(i, self.col_idx[p])] = self.vals[p];
            }
        }
        m
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        par::map_range(self.n, |i| {
            let mut s = 0.0;
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.vals[p] * x[self.col_idx[p]];
            }
            s
        })
    }

    /// `x^T A y`.
    pub fn form(&self, x: &[f64], y: &[f64]) -> f64 {
        par::dot(x, &self.matvec(y))
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn relative_residual(&self, x: &[f64], b: &[f64]) -> f64 {
        let ax = self.matvec(x);
        let r: Vec<f64> = ax.iter().zip(b).map(|(a, b)| a - b).collect();
        let nb = par::dot(b, b).sqrt();
        let nr = par::dot(&r, &r).sqrt();
        if nb == 0.0 {
            nr
        } else {
            nr / nb
        }
    }

    /// Largest entrywise asymmetry `|a_ij - a_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let mut m: f64 = 0.0;
        for i in 0..self.n {
            for p in self.row_ptr[i]..self.row_ptr[i + 1] {
                let j = self.col_idx[p];
                m = m.max((self.vals[p] - self.get(j, i)).abs());
            }
        }
        m
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Method {
    /// Direct up to `direct_limit` unknowns (`direct_limit_spd` for
    /// symmetric systems), iterative beyond.
    Auto,
    Direct,
    Iterative,
}

#[derive(Clone, Copy, Debug)]
pub struct SolverOptions {
    pub method: Method,
    pub direct_limit: usize,
    /// Sparse Cholesky fill is low enough for larger symmetric systems.
    pub direct_limit_spd: usize,
    pub tol: f64,
    pub max_iter: usize,
    /// Block size for the block-Jacobi preconditioner of unsymmetric systems.
    pub block: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            method: Method::Auto,
            direct_limit: 60_000,
            direct_limit_spd: 150_000,
            tol: 1e-12,
            max_iter: 5000,
            block: 1,
        }
    }
}

/// A reusable solver for one matrix.
pub enum Factor {
    Lu(faer::sparse::linalg::solvers::Lu<usize, f64>),
    Llt(faer::sparse::linalg::solvers::Llt<usize, f64>),
}

pub enum Solver {
    Direct { sys: SparseSystem, lu: Factor },
    Iterative { sys: SparseSystem, opts: SolverOptions, precond: Precond },
}

pub enum Precond {
    Jacobi(Vec<f64>),
    /// Symmetric Gauss-Seidel, `(D + L) D^{-1} (D + U)`; keeps CG symmetric.
    Sgs(Vec<f64>),
    Block { size: usize, inv: Vec<DMatrix<f64>> },
}

/// Forward then backward Gauss-Seidel sweep from a zero guess.
fn sgs_apply(sys: &SparseSystem, diag: &[f64], r: &[f64]) -> Vec<f64> {
    let n = sys.n;
    let mut y = vec![0.0; n];
    for i in 0..n {
        let mut acc = r[i];
        for p in sys.row_ptr[i]..sys.row_ptr[i + 1] {
            let j = sys.col_idx[p];
            if j >= i {
                break;
            }
            acc -= sys.vals[p] * y[j];
        }
        y[i] = acc / diag[i];
    }
    // y now solves (D + L) y = r; scale by D, then solve (D + U) z = D y
    let mut z = vec![0.0; n];
    for i in (0..n).rev() {
        let mut acc = diag[i] * y[i];
        for p in (sys.row_ptr[i]..sys.row_ptr[i + 1]).rev() {
            let j = sys.col_idx[p];
            if j <= i {
                break;
            }
            acc -= sys.vals[p] * z[j];
        }
        z[i] = acc / diag[i];
    }
    z
}

impl Precond {
    fn apply(&self, sys: &SparseSystem, r: &[f64]) -> Vec<f64> {
        match self {
            Precond::Jacobi(d) => r.iter().zip(d).map(|(a, b)| a * b).collect(),
            Precond::Sgs(d) => sgs_apply(sys, d, r),
            Precond::Block { size, inv } => {
                let blocks = par::map_range(inv.len(), |b| {
                    let lo = b * size;
                    let v = nalgebra::DVector::from_column_slice(&r[lo..lo + size]);
                    (&inv[b] * v).iter().copied().collect::<Vec<f64>>()
                });
                blocks.concat()
            }
        }
    }
}

fn use_direct(sys: &SparseSystem, opts: &SolverOptions) -> bool {
    match opts.method {
        Method::Direct => true,
        Method::Iterative => false,
        Method::Auto => sys.n <= if sys.symmetric { opts.direct_limit_spd } else { opts.direct_limit },
    }
}

impl Solver {
    pub fn new(sys: SparseSystem, opts: SolverOptions) -> Result<Self> {
        if use_direct(&sys, &opts) {
            faer::set_global_parallelism(faer::Par::Seq);
            let trip: Vec<Triplet<usize, usize, f64>> = (0..sys.n)
                .flat_map(|i| (sys.row_ptr[i]..sys.row_ptr[i + 1]).map(move |p| (i, p)))
                .map(|(i, p)| Triplet::new(i, sys.col_idx[p], sys.vals[p]))
                .collect();
            let a = SparseColMat::<usize, f64>::try_new_from_triplets(sys.n, sys.n, &trip)
                .map_err(|e| Error::Internal(format!("sparse matrix construction: {e:?}")))?;
            // Cholesky has far less fill than LU; indefinite symmetric input falls back to LU
            let llt = if sys.symmetric { a.sp_cholesky(faer::Side::Lower).ok() } else { None };
            let lu = match llt {
                Some(f) => Factor::Llt(f),
                None => Factor::Lu(a.sp_lu().map_err(|_| Error::Singular { residual: f64::INFINITY })?),
            };
            Ok(Solver::Direct { sys, lu })
        } else {
            let precond = if sys.symmetric || opts.block <= 1 || sys.n % opts.block != 0 {
                let d = sys.diagonal();
                if d.iter().any(|&x| x == 0.0) {
                    return Err(Error::Singular { residual: f64::INFINITY });
                }
                if sys.symmetric {
                    Precond::Sgs(d)
                } else {
                    Precond::Jacobi(d.iter().map(|x| 1.0 / x).collect())
                }
            } else {
                let size = opts.block;
                let inv = par::map_range(sys.n / size, |b| {
                    let lo = b * size;
                    let mut m = DMatrix::zeros(size, size);
                    for i in 0..size {
                        for j in 0..size {
                            m[(i, j)] = sys.get(lo + i, lo + j);
                        }
                    }
                    m.try_inverse()
                });
                let mut out = Vec::with_capacity(inv.len());
                for m in inv {
                    out.push(m.ok_or(Error::Singular { residual: f64::INFINITY })?);
                }
                Precond::Block { size, inv: out }
            };
            Ok(Solver::Iterative { sys, opts, precond })
        }
    }

    pub fn system(&self) -> &SparseSystem {
        match self {
            Solver::Direct { sys, .. } | Solver::Iterative { sys, .. } => sys,
        }
    }

    pub fn is_direct(&self) -> bool {
        matches!(self, Solver::Direct { .. })
    }

    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.solve_checked(b, true)
    }

    /// Like `solve`, without the residual check of the direct path; for
    /// correction steps whose right-hand side is rounding noise.
    pub fn solve_correction(&self, b: &[f64]) -> Result<Vec<f64>> {
        self.solve_checked(b, false)
    }

    fn solve_checked(&self, b: &[f64], check: bool) -> Result<Vec<f64>> {
        if b.len() != self.system().n {
            return Err(Error::InvalidArgument(format!("rhs length {} != {}", b.len(), self.system().n)));
        }
        match self {
            Solver::Direct { sys, lu } => {
                use faer::prelude::Solve;
                let rhs = faer::Col::<f64>::from_fn(sys.n, |i| b[i]);
                let x = match lu {
                    Factor::Lu(f) => f.solve(&rhs),
                    Factor::Llt(f) => f.solve(&rhs),
                };
                let x: Vec<f64> = (0..sys.n).map(|i| x[i]).collect();
                if !check {
                    return Ok(x);
                }
                let res = sys.relative_residual(&x, b);
                if !(res <= DIRECT_RESIDUAL_TOL) {
                    return Err(Error::Singular { residual: res });
                }
                Ok(x)
            }
            Solver::Iterative { sys, opts, precond } => {
                if sys.symmetric {
                    cg(sys, b, precond, opts)
                } else {
                    bicgstab(sys, b, precond, opts)
                }
            }
        }
    }
}

/// Solves `sys.rhs` with default options.
pub fn solve(sys: &SparseSystem) -> Result<Vec<f64>> {
    solve_with(sys, SolverOptions::default())
}

pub fn solve_with(sys: &SparseSystem, opts: SolverOptions) -> Result<Vec<f64>> {
    let rhs = sys.rhs.clone();
    Solver::new(sys.clone(), opts)?.solve(&rhs)
}

fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

fn cg(sys: &SparseSystem, b: &[f64], m: &Precond, opts: &SolverOptions) -> Result<Vec<f64>> {
    let n = sys.n;
    let nb = par::dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if nb == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let mut z = m.apply(sys, &r);
    let mut p = z.clone();
    let mut rz = par::dot(&r, &z);
    for it in 0..opts.max_iter {
        let ap = sys.matvec(&p);
        let pap = par::dot(&p, &ap);
        if pap <= 0.0 {
            return Err(Error::NotConverged { iterations: it, residual: par::dot(&r, &r).sqrt() / nb });
        }
        let alpha = rz / pap;
        axpy(&mut x, alpha, &p);
        axpy(&mut r, -alpha, &ap);
        let rn = par::dot(&r, &r).sqrt() / nb;
        if rn <= opts.tol {
            return Ok(x);
        }
        z = m.apply(sys, &r);
        let rz_new = par::dot(&r, &z);
        let beta = rz_new / rz;
        rz = rz_new;
        for (pi, zi) in p.iter_mut().zip(&z) {
            *pi = zi + beta * *pi;
        }
    }
    Err(Error::NotConverged { iterations: opts.max_iter, residual: sys.relative_residual(&x, b) })
}

fn bicgstab(sys: &SparseSystem, b: &[f64], m: &Precond, opts: &SolverOptions) -> Result<Vec<f64>> {
    let n = sys.n;
    let nb = par::dot(b, b).sqrt();
    let mut x = vec![0.0; n];
    if nb == 0.0 {
        return Ok(x);
    }
    let mut r = b.to_vec();
    let r0 = r.clone();
    let (mut rho, mut alpha, mut omega) = (1.0, 1.0, 1.0);
    let mut v = vec![0.0; n];
    let mut p = vec![0.0; n];
    for it in 0..opts.max_iter {
        let rho_new = par::dot(&r0, &r);
        if rho_new == 0.0 || omega == 0.0 {
            return Err(Error::NotConverged { iterations: it, residual: par::dot(&r, &r).sqrt() / nb });
        }
        let beta = (rho_new / rho) * (alpha / omega);
        rho = rho_new;
        for i in 0..n {
            p[i] = r[i] + beta * (p[i] - omega * v[i]);
        }
        let ph = m.apply(sys, &p);
        v = sys.matvec(&ph);
        alpha = rho / par::dot(&r0, &v);
        let mut s = r.clone();
        axpy(&mut s, -alpha, &v);
        axpy(&mut x, alpha, &ph);
        if par::dot(&s, &s).sqrt() / nb <= opts.tol {
            return Ok(x);
        }
        let sh = m.apply(sys, &s);
        let t = sys.matvec(&sh);
        let tt = par::dot(&t, &t);
        omega = if tt == 0.0 { 0.0 } else { par::dot(&t, &s) / tt };
        axpy(&mut x, omega, &sh);
        r = s;
        axpy(&mut r, -omega, &t);
        if par::dot(&r, &r).sqrt() / nb <= opts.tol {
            return Ok(x);
        }
    }
    Err(Error::NotConverged { iterations: opts.max_iter, residual: sys.relative_residual(&x, b) })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    #[test]
    fn duplicates_summed() {
        let s = assemble(1, vec![(0, 0, 1.0), (0, 0, 2.0)], vec![0.0], true).unwrap();
        assert_eq!(s.nnz(), 1);
        assert_eq!(s.vals[0], 3.0);
    }

    #[test]
    fn empty_stream_is_zero_matrix() {
        let s = assemble(3, vec![], vec![0.0; 3], false).unwrap();
        assert_eq!(s.nnz(), 0);
        assert_eq!(s.row_ptr, vec![0; 4]);
    }

    #[test]
    fn out_of_range_rejected() {
        assert!(assemble(2, vec![(2, 0, 1.0)], vec![0.0; 2], false).is_err());
    }

    #[test]
    fn random_triplets_match_dense_accumulation() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let n = 12;
        let trip: Vec<(usize, usize, f64)> = (0..400)
            .map(|_| (rng.random_range(0..n), rng.random_range(0..n), rng.random::<f64>() - 0.5))
            .collect();
        let mut dense = DMatrix::<f64>::zeros(n, n);
        for &(i, j, v) in &trip {
            dense[(i, j)] += v;
        }
        let s = assemble(n, trip, vec![0.0; n], false).unwrap();
        assert!((s.to_dense() - dense).amax() < 1e-14);
        for i in 0..n {
            let cols = &s.col_idx[s.row_ptr[i]..s.row_ptr[i + 1]];
            assert!(cols.windows(2).all(|w| w[0] < w[1]));
        }
    }

    #[test]
    fn identity_and_hand_system() {
        let id = assemble(3, (0..3).map(|i| (i, i, 1.0)).collect(), vec![1.0, 2.0, 3.0], true).unwrap();
        assert_eq!(solve(&id).unwrap(), vec![1.0, 2.0, 3.0]);
        let s = assemble(2, vec![(0, 0, 2.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 3.0)], vec![3.0, 5.0], true).unwrap();
        for m in [Method::Direct, Method::Iterative] {
            let x = solve_with(&s, SolverOptions { method: m, ..Default::default() }).unwrap();
            assert!((x[0] - 0.8).abs() < 1e-12 && (x[1] - 1.4).abs() < 1e-12);
        }
    }

    #[test]
    fn singular_reported() {
        let s = assemble(2, vec![(0, 0, 1.0), (0, 1, 1.0), (1, 0, 1.0), (1, 1, 1.0)], vec![1.0, 0.0], false).unwrap();
        let r = solve_with(&s, SolverOptions { method: Method::Direct, ..Default::default() });
        assert!(matches!(r, Err(Error::Singular { .. })));
    }

    /// Random symmetric diagonally dominant matrix with a sine right-hand side.
    fn random_spd(n: usize, seed: u64) -> SparseSystem {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, 4.0 + rng.random::<f64>()));
            for _ in 0..3 {
                let (j, v) = (rng.random_range(0..n), 0.3 * (rng.random::<f64>() - 0.5));
                if j != i {
                    trip.push((i, j, v));
                    trip.push((j, i, v));
                }
            }
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        assemble(n, trip, b, true).unwrap()
    }

    #[test]
    fn sgs_cg_matches_cholesky() {
        let s = random_spd(80, 5);
        let direct = Solver::new(s.clone(), SolverOptions { method: Method::Direct, ..Default::default() }).unwrap();
        assert!(matches!(direct, Solver::Direct { lu: Factor::Llt(_), .. }));
        let d = direct.solve(&s.rhs).unwrap();
        let it = solve_with(&s, SolverOptions { method: Method::Iterative, ..Default::default() }).unwrap();
        for (a, b) in d.iter().zip(&it) {
            assert!((a - b).abs() < 1e-10);
        }
    }

    #[test]
    fn symmetric_indefinite_falls_back_to_lu() {
        let s = assemble(2, vec![(0, 0, 1.0), (0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)], vec![3.0, 3.0], true).unwrap();
        let solver = Solver::new(s.clone(), SolverOptions { method: Method::Direct, ..Default::default() }).unwrap();
        assert!(matches!(solver, Solver::Direct { lu: Factor::Lu(_), .. }));
        let x = solver.solve(&s.rhs).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-12 && (x[1] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bicgstab_block_jacobi_matches_direct() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
        let n = 60;
        let mut trip = Vec::new();
        for i in 0..n {
            trip.push((i, i, 4.0 + rng.random::<f64>()));
            for _ in 0..3 {
                trip.push((i, rng.random_range(0..n), 0.3 * (rng.random::<f64>() - 0.5)));
            }
        }
        let b: Vec<f64> = (0..n).map(|i| (i as f64).sin()).collect();
        let s = assemble(n, trip, b, false).unwrap();
        let d = solve_with(&s, SolverOptions { method: Method::Direct, ..Default::default() }).unwrap();
        let it = solve_with(&s, SolverOptions { method: Method::Iterative, block: 3, ..Default::default() }).unwrap();
        for (a, b) in d.iter().zip(&it) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
