//! Narrow-band transport loop, convergence studies, standalone extension
//! experiments and CSV reports.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use crate::band::{cut_elements, cut_elements_of_field, neighbor_layers, projection_domain, NarrowBand, ProjectionMode};
use crate::cases::{case_by_name, vgamma_max, LevelSetCase};
use crate::error::{Error, Result};
use crate::extension::{repeated_extend, ExtInput, Extender, ExtensionProblem, GpVariant};
use crate::fe::{interpolate, l2_project_dg, oswald_project, FeFunction, FeSpace};
use crate::geom::{
    band_square_error, band_square_grad_error, default_sublevels, dump_facets, enclosed_volume, recover_interface,
    surface_max_abs, surface_mean_square, DiscreteInterface,
};
use crate::mesh::{build_box_mesh, ElementSet, Mesh, Point};
use crate::par;
use crate::solver::SolverOptions;
use crate::transport::{
    bdf_coefficients, boundary_value, domain_inflow_faces, step, BoundaryDataSpec, BoundaryVariant, FeVelocity,
    TransportProblem,
};

/// Maximum number of consecutive time step halvings.
pub const MAX_HALVINGS: usize = 20;

/// Run parameters; every field has a `key=value` name equal to its CLI flag.
#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub case: String,
    /// Polynomial degree.
    pub order: usize,
    pub bdf: usize,
    pub layers: usize,
    pub proj: ProjectionMode,
    /// `None` picks low, medium or quadratic extrapolation by BDF order.
    pub bnd: Option<BoundaryVariant>,
    pub gp: GpVariant,
    pub gamma_ext: f64,
    pub alpha: Option<f64>,
    /// Target cell size of the coarsest mesh.
    pub h0: f64,
    pub refine: usize,
    pub out: Option<PathBuf>,
    pub dump_interface: Option<PathBuf>,
    pub warmup_substeps: usize,
    pub dt: Option<f64>,
    pub end_time: Option<f64>,
    pub track_volume: bool,
    /// Extension studies: `Ω_e = N^ext_layers(Ω_p)`.
    pub ext_layers: usize,
    /// Repeated extension count.
    pub steps: usize,
    pub sublevels: Option<usize>,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            case: "kite2d".into(),
            order: 1,
            bdf: 2,
            layers: 3,
            proj: ProjectionMode::Small,
            bnd: None,
            gp: GpVariant::L2,
            gamma_ext: 1.0,
            alpha: None,
            h0: 0.5,
            refine: 0,
            out: None,
            dump_interface: None,
            warmup_substeps: 4,
            dt: None,
            end_time: None,
            track_volume: false,
            ext_layers: 1,
            steps: 1000,
            sublevels: None,
        }
    }
}

fn parse<T: std::str::FromStr>(key: &str, v: &str) -> Result<T> {
    v.parse().map_err(|_| Error::Config(format!("bad value '{v}' for {key}")))
}

impl RunConfig {
    /// Sets one key; `_` and `-` are interchangeable in keys.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        match key.trim().replace('_', "-").as_str() {
            "case" => self.case = v.to_string(),
            "order" | "k" => self.order = parse(key, v)?,
            "bdf" => self.bdf = parse(key, v)?,
            "layers" => self.layers = parse(key, v)?,
            "proj" => self.proj = v.parse()?,
            "bnd" => self.bnd = Some(v.parse()?),
            "gp" => self.gp = v.parse()?,
            "gamma-ext" => self.gamma_ext = parse(key, v)?,
            "alpha" => self.alpha = Some(parse(key, v)?),
            "h0" => self.h0 = parse(key, v)?,
            "refine" => self.refine = parse(key, v)?,
            "out" => self.out = Some(PathBuf::from(v)),
            "dump-interface" => self.dump_interface = Some(PathBuf::from(v)),
            "warmup-substeps" => self.warmup_substeps = parse(key, v)?,
            "dt" => self.dt = Some(parse(key, v)?),
            "end-time" => self.end_time = Some(parse(key, v)?),
            "track-volume" => self.track_volume = parse(key, v)?,
            "ext-layers" => self.ext_layers = parse(key, v)?,
            "steps" => self.steps = parse(key, v)?,
            "sublevels" => self.sublevels = Some(parse(key, v)?),
            _ => return Err(Error::Config(format!("unknown key '{key}'"))),
        }
        Ok(())
    }

    /// Parses flat `key = value` text; `#` starts a comment.
    pub fn parse_kv(text: &str) -> Result<Self> {
        let mut cfg = RunConfig::default();
        for (n, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| Error::Config(format!("line {}: expected key=value", n + 1)))?;
            cfg.set(k, v)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=3).contains(&self.bdf) {
            return Err(Error::Config(format!("bdf order {} not in 1..=3", self.bdf)));
        }
        if !(1..=crate::fe::MAX_DEGREE).contains(&self.order) {
            return Err(Error::Config(format!("polynomial degree {} not in 1..=4", self.order)));
        }
        if self.layers < 2 {
            return Err(Error::Config("band needs at least 2 layers".into()));
        }
        if !(self.h0 > 0.0) || !(self.gamma_ext > 0.0) {
            return Err(Error::Config("h0 and gamma-ext must be positive".into()));
        }
        if self.warmup_substeps == 0 {
            return Err(Error::Config("warmup-substeps must be positive".into()));
        }
        if let Some(dt) = self.dt {
            if !(dt > 0.0) {
                return Err(Error::Config("dt must be positive".into()));
            }
        }
        Ok(())
    }

    /// Sub-lattice resolution on a mesh of size `h`. For k >= 2 the default
    /// grows like 1/h below `SCALE_REF_H` so the O((h/m)^2) recovery error
    /// stays below the h^(k+1) discretization error.
    pub fn sublevels(&self, h: f64) -> usize {
        self.sublevels.unwrap_or_else(|| {
            let m = default_sublevels(self.order);
            if self.order >= 2 {
                scaled(m, h)
            } else {
                m
            }
        })
    }

    /// Warmup substeps per start interval on a mesh of size `h`. The first
    /// BDF1 substep has local error O(tau^2), so for bdf >= 3 the count grows
    /// like 1/h below `SCALE_REF_H` to keep it under the h^3 target.
    pub fn warmup_substeps(&self, h: f64) -> usize {
        if self.bdf >= 3 {
            scaled(self.warmup_substeps, h)
        } else {
            self.warmup_substeps
        }
    }

    fn boundary_variant(&self) -> BoundaryVariant {
        self.bnd.unwrap_or(match self.bdf {
            1 => BoundaryVariant::Low,
            2 => BoundaryVariant::Medium,
            _ => BoundaryVariant::Quadratic,
        })
    }
}

/// Mesh size below which the resolution rules of `RunConfig::sublevels` and
/// `RunConfig::warmup_substeps` start to scale.
pub const SCALE_REF_H: f64 = 0.25;

fn scaled(base: usize, h: f64) -> usize {
    (base as f64 * (SCALE_REF_H / h).max(1.0) - 1e-9).ceil() as usize
}

/// Box mesh of `case` with about `h0 / 2^level` cells along each axis.
pub fn case_mesh(case: &dyn LevelSetCase, h0: f64, level: usize) -> Result<Arc<Mesh>> {
    let (lo, hi) = case.domain();
    let cells: Vec<usize> =
        lo.iter().zip(&hi).map(|(a, b)| (((b - a) / h0 - 1e-9).ceil().max(1.0) as usize) << level).collect();
    Ok(Arc::new(build_box_mesh(&lo, &hi, &cells)?))
}

/// Nominal mesh size (cell width along the first axis).
pub fn mesh_size(mesh: &Mesh) -> f64 {
    mesh.cell_size()[0]
}

#[derive(Clone, Debug, PartialEq)]
pub struct StepRecord {
    pub t: f64,
    pub dt: f64,
    pub order: usize,
    pub halvings: usize,
    pub band_elements: usize,
    pub volume: Option<f64>,
}

/// Outcome of one transport run at a fixed mesh.
#[derive(Clone, Debug)]
pub struct TransportRun {
    pub h: f64,
    pub steps: Vec<StepRecord>,
    pub e_gamma: f64,
    pub e_gamma_inf: f64,
    pub e_l2: f64,
    /// Reference volume used for `VolumeError`.
    pub volume_ref: Option<f64>,
    pub final_phi: FeFunction,
    pub final_interface: DiscreteInterface,
}

impl TransportRun {
    /// `(t, V, |V - V_ref| / V_ref)` per step, when volumes were tracked.
    pub fn volume_history(&self) -> Vec<(f64, f64, f64)> {
        let r = self.volume_ref.unwrap_or(f64::NAN);
        self.steps
            .iter()
            .filter_map(|s| s.volume.map(|v| (s.t, v, (v - r).abs() / r)))
            .collect()
    }
}

struct Ctx<'a> {
    case: &'a dyn LevelSetCase,
    cfg: &'a RunConfig,
    mesh: Arc<Mesh>,
    m: usize,
    opts: SolverOptions,
}

struct Advance {
    band: NarrowBand,
    phi: FeFunction,
    /// Re-extensions of the carried functions, same order.
    carried: Vec<(f64, FeFunction)>,
}

fn effective_variant(v: BoundaryVariant, levels: usize) -> BoundaryVariant {
    match v {
        BoundaryVariant::Quadratic if levels >= 3 => v,
        BoundaryVariant::Quadratic | BoundaryVariant::Medium if levels >= 2 => BoundaryVariant::Medium,
        BoundaryVariant::High => v,
        _ => BoundaryVariant::Low,
    }
}

impl Ctx<'_> {
    fn velocity(&self) -> impl Fn(&Point, f64) -> Point + Sync + '_ {
        move |x: &Point, t: f64| self.case.velocity_regularized(x, t)
    }

    /// One transport + extension step of size `dt` from `hist[0]` at time
    /// `hist[0].0` with BDF order `order`. Returns `None` when the new
    /// projection domain leaves the current band.
    fn advance(
        &self,
        band: &NarrowBand,
        hist: &[(f64, FeFunction)],
        taus: &[f64],
        dt: f64,
        order: usize,
        carry: &[(f64, FeFunction)],
    ) -> Result<Option<Advance>> {
        let k = self.cfg.order;
        let tn = hist[0].0;
        let t1 = tn + dt;
        let cg = hist[0].1.space().clone();
        let u = self.velocity();
        let vel = FeVelocity::interpolate(&cg, &u, t1)?;
        let inflow = domain_inflow_faces(&self.mesh, band, &u, tn);
        let mut steps = vec![dt];
        steps.extend_from_slice(taus);
        let bdf = bdf_coefficients(order, &steps)?;
        let spec = BoundaryDataSpec {
            variant: effective_variant(self.cfg.boundary_variant(), hist.len()),
            history: hist,
            velocity: Some(&u),
        };
        let phi_d = |e: usize, lam: &[f64; 4], x: &Point| boundary_value(&spec, e, lam, x, t1);
        let history: Vec<&FeFunction> = hist[..order].iter().map(|(_, f)| f).collect();
        let dg = FeSpace::dg(&self.mesh, &band.set, k)?;
        let prob = TransportProblem {
            space: &dg,
            velocity: &vel,
            bdf: &bdf,
            history: &history,
            inflow: &inflow,
            phi_d: &phi_d,
        };
        let phi_dg = step(&prob, self.opts)?;
        let phi_tilde = oswald_project(&phi_dg, &cg)?;

        let cut = cut_elements(&phi_tilde);
        if cut.is_empty() {
            return Err(Error::InterfaceLost { time: t1 });
        }
        let next = NarrowBand::new(&self.mesh, cut, self.cfg.layers);
        let omega_p = projection_domain(&self.mesh, &next.cut, self.cfg.proj, &band.set, &next.set);
        if !omega_p.is_subset_of(&band.set) || !neighbor_layers(&self.mesh, &next.cut, 1).is_subset_of(&band.set) {
            return Ok(None);
        }
        let problem = ExtensionProblem::new(
            &self.mesh,
            omega_p,
            next.set.clone(),
            k,
            self.cfg.gp,
            self.cfg.gamma_ext,
            self.cfg.alpha,
        )?;
        let ext = Extender::new(problem, self.opts)?;
        let phi = ext.extend(ExtInput::Fe(&phi_tilde))?;
        let carried = carry
            .iter()
            .map(|(t, f)| Ok((*t, ext.extend(ExtInput::Fe(f))?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Some(Advance { band: next, phi, carried }))
    }
}

#[derive(Default)]
struct Metrics {
    gamma_sq: f64,
    gamma_inf: f64,
    l2_sq: f64,
}

impl Metrics {
    fn record(&mut self, case: &dyn LevelSetCase, phi: &FeFunction, iface: &DiscreteInterface, dt: f64) -> Result<()> {
        let t = iface.time;
        self.gamma_sq += dt * surface_mean_square(case, iface)?;
        self.gamma_inf = self.gamma_inf.max(surface_max_abs(iface, &|x| case.phi(x, t)));
        let (num, meas) = band_square_error(phi, &|x| case.phi(x, t));
        self.l2_sq += dt * num / meas;
        Ok(())
    }
}

fn time_step(ctx: &Ctx, iface: &DiscreteInterface, t: f64) -> f64 {
    if let Some(dt) = ctx.cfg.dt {
        return dt;
    }
    let v = vgamma_max(ctx.case, iface, t);
    let h = mesh_size(&ctx.mesh);
    let k = ctx.cfg.order as i32;
    let dt = (ctx.cfg.layers - 1) as f64 * h / (2f64.powi(k) * 2.0 * v);
    if dt.is_finite() {
        dt
    } else {
        f64::INFINITY
    }
}

/// Runs the narrow-band algorithm for `case` on refinement level `level`.
pub fn run_transport_with(case: &dyn LevelSetCase, cfg: &RunConfig, level: usize) -> Result<TransportRun> {
    cfg.validate()?;
    let mesh = case_mesh(case, cfg.h0, level)?;
    let ctx = Ctx { case, cfg, mesh: mesh.clone(), m: cfg.sublevels(mesh_size(&mesh)), opts: SolverOptions::default() };
    let k = cfg.order;
    let p = cfg.bdf;
    let end = cfg.end_time.unwrap_or(case.end_time());
    let tol = 1e-12 * end.max(1.0);

    let full = ElementSet::full(mesh.n_elements());
    let cut0 = cut_elements_of_field(&mesh, k, &full, &|x| case.phi(x, 0.0));
    if cut0.is_empty() {
        return Err(Error::InterfaceLost { time: 0.0 });
    }
    let mut band = NarrowBand::new(&mesh, cut0, cfg.layers);
    let cg0 = FeSpace::cg(&mesh, &band.set, k)?;
    let phi0 = interpolate(&cg0, &|x| case.phi(x, 0.0));
    let mut iface = recover_interface(&phi0, ctx.m);
    iface.time = 0.0;
    let volume_ref = match case.exact_volume(0.0) {
        Some(v) => Some(v),
        None if cfg.track_volume => Some(enclosed_volume(&phi0, ctx.m)?),
        None => None,
    };

    let mut metrics = Metrics::default();
    let mut records = Vec::new();
    let mut t = 0.0;
    let mut hist: Vec<(f64, FeFunction)> = vec![(0.0, phi0)];
    let mut taus: Vec<f64> = Vec::new();

    let mut accept = |a: Advance,
                      t1: f64,
                      dt: f64,
                      order: usize,
                      halvings: usize,
                      iface: &mut DiscreteInterface,
                      metrics: &mut Metrics|
     -> Result<(NarrowBand, FeFunction, Vec<(f64, FeFunction)>)> {
        let mut g = recover_interface(&a.phi, ctx.m);
        g.time = t1;
        metrics.record(case, &a.phi, &g, dt)?;
        let volume = if cfg.track_volume { Some(enclosed_volume(&a.phi, ctx.m)?) } else { None };
        records.push(StepRecord { t: t1, dt, order, halvings, band_elements: a.band.set.len(), volume });
        *iface = g;
        Ok((a.band, a.phi, a.carried))
    };

    // Warmup: equal substeps with the BDF order ramped up as levels become
    // available; levels at multiples of dt0 seed the main history.
    let dt0 = time_step(&ctx, &iface, 0.0).min(end);
    let mut marks: Vec<(f64, FeFunction)> = vec![hist[0].clone()];
    if p > 1 && (p - 1) as f64 * dt0 < end - tol {
        let ws = cfg.warmup_substeps(mesh_size(&ctx.mesh));
        let sub = dt0 / ws as f64;
        let n_sub = (p - 1) * ws;
        for i in 1..=n_sub {
            let order = hist.len().min(p);
            let mut carry: Vec<(f64, FeFunction)> = hist[..hist.len().min(p - 1)].to_vec();
            let n_hist = carry.len();
            carry.extend(marks.iter().cloned());
            let a = ctx
                .advance(&band, &hist, &taus, sub, order, &carry)?
                .ok_or_else(|| Error::Internal(format!("band containment failed during warmup at t = {t}")))?;
            let t1 = if i == n_sub { (p - 1) as f64 * dt0 } else { t + sub };
            let (nb, phi, carried) = accept(a, t1, t1 - t, order, 0, &mut iface, &mut metrics)?;
            band = nb;
            let (h_ext, m_ext) = carried.split_at(n_hist);
            hist = std::iter::once((t1, phi.clone())).chain(h_ext.iter().cloned()).collect();
            marks = m_ext.to_vec();
            if i % ws == 0 {
                marks.insert(0, (t1, phi));
            }
            taus.insert(0, t1 - t);
            taus.truncate(p);
            t = t1;
        }
        hist = marks.into_iter().take(p).collect();
        taus = vec![dt0; p];
    }

    while t < end - tol {
        let order = hist.len().min(p);
        let mut dt = time_step(&ctx, &iface, t);
        let mut halvings = 0;
        let a = loop {
            let mut d = dt;
            if t + d > end - tol {
                d = end - t;
            }
            let carry: Vec<(f64, FeFunction)> = hist[..hist.len().min(p - 1)].to_vec();
            match ctx.advance(&band, &hist, &taus, d, order, &carry)? {
                Some(a) => break (a, d),
                None => {
                    halvings += 1;
                    if halvings > MAX_HALVINGS {
                        return Err(Error::TooManyHalvings { halvings, time: t });
                    }
                    dt = d / 2.0;
                }
            }
        };
        let (a, d) = a;
        let t1 = if (end - (t + d)).abs() <= tol { end } else { t + d };
        let (nb, phi, carried) = accept(a, t1, t1 - t, order, halvings, &mut iface, &mut metrics)?;
        band = nb;
        hist = std::iter::once((t1, phi)).chain(carried).collect();
        taus.insert(0, t1 - t);
        taus.truncate(p);
        t = t1;
    }

    let final_phi = hist[0].1.clone();
    if let Some(path) = &cfg.dump_interface {
        dump_facets(&iface, fs::File::create(path)?)?;
    }
    Ok(TransportRun {
        h: mesh_size(&mesh),
        steps: records,
        e_gamma: metrics.gamma_sq.sqrt(),
        e_gamma_inf: metrics.gamma_inf,
        e_l2: metrics.l2_sq.sqrt(),
        volume_ref,
        final_phi,
        final_interface: iface,
    })
}

/// Transport runs on refinement levels `0..=cfg.refine` (concurrently), one
/// outcome per level, so a failed coarse level does not discard the others.
pub fn run_transport_levels(case: &dyn LevelSetCase, cfg: &RunConfig) -> Vec<Result<TransportRun>> {
    par::map_range(cfg.refine + 1, |l| {
        let mut c = cfg.clone();
        // one interface dump, from the finest level
        if l != cfg.refine {
            c.dump_interface = None;
        }
        run_transport_with(case, &c, l)
    })
}

/// Transport runs on refinement levels `0..=cfg.refine`; fails if any level fails.
pub fn run_transport_study_with(case: &dyn LevelSetCase, cfg: &RunConfig) -> Result<Vec<TransportRun>> {
    run_transport_levels(case, cfg).into_iter().collect()
}

/// Transport study for `cfg.case`; writes the report when `cfg.out` is set.
pub fn run_transport(cfg: &RunConfig) -> Result<Vec<TransportRun>> {
    let case = case_by_name(&cfg.case)?;
    let runs = run_transport_study_with(case.as_ref(), cfg)?;
    if let Some(out) = &cfg.out {
        let rows: Vec<ErrorRow> =
            runs.iter().map(|r| ErrorRow { h: r.h, e_l2: r.e_l2, e_gamma: r.e_gamma, e_gamma_inf: r.e_gamma_inf }).collect();
        emit_report(&rows, out)?;
        if cfg.track_volume {
            let finest = runs.last().expect("at least one level");
            fs::write(volume_path(out), volume_csv(&finest.volume_history()))?;
        }
    }
    Ok(runs)
}

fn volume_path(out: &Path) -> PathBuf {
    let stem = out.file_stem().and_then(|s| s.to_str()).unwrap_or("report");
    out.with_file_name(format!("{stem}_volume.csv"))
}

/// Errors of both extension variants at one mesh size (scaled integrals
/// over `Ω_e`).
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ExtensionErrors {
    pub h: f64,
    pub e_ext: f64,
    pub e_ext_grad: f64,
    pub e_ext1: f64,
    pub e_ext1_grad: f64,
}

/// Projection and extension domains of the standalone experiments:
/// `Ω_p = N^2(T_Γ)`, `Ω_e = N^ext_layers(Ω_p)`.
pub fn extension_domains(case: &dyn LevelSetCase, mesh: &Mesh, k: usize, ext_layers: usize) -> Result<(ElementSet, ElementSet)> {
    let cut = cut_elements_of_field(mesh, k, &ElementSet::full(mesh.n_elements()), &|x| case.phi(x, 0.0));
    if cut.is_empty() {
        return Err(Error::InterfaceLost { time: 0.0 });
    }
    let p = neighbor_layers(mesh, &cut, 2);
    let e = neighbor_layers(mesh, &p, ext_layers);
    Ok((p, e))
}

/// Extends the Oswald interpolation of the elementwise L2 projection of
/// `φ(·, 0)` from `Ω_p` to `Ω_e` with both variants on one level.
pub fn extension_errors(case: &dyn LevelSetCase, cfg: &RunConfig, level: usize) -> Result<ExtensionErrors> {
    let mesh = case_mesh(case, cfg.h0, level)?;
    let k = cfg.order;
    let (p, e) = extension_domains(case, &mesh, k, cfg.ext_layers)?;
    let f = |x: &Point| case.phi(x, 0.0);
    let g = |x: &Point| case.grad_phi(x, 0.0);
    let dg = FeSpace::dg(&mesh, &p, k)?;
    let input = oswald_project(&l2_project_dg(&dg, &f)?, &FeSpace::cg(&mesh, &p, k)?)?;
    let mut errs = [(0.0, 0.0); 2];
    for (slot, variant) in [GpVariant::L2, GpVariant::H1].into_iter().enumerate() {
        let alpha = if variant == cfg.gp { cfg.alpha } else { None };
        let prob = ExtensionProblem::new(&mesh, p.clone(), e.clone(), k, variant, cfg.gamma_ext, alpha)?;
        let ext = Extender::new(prob, SolverOptions::default())?;
        let phi = ext.extend(ExtInput::Fe(&input))?;
        let (n0, meas) = band_square_error(&phi, &f);
        let (n1, _) = band_square_grad_error(&phi, &g);
        errs[slot] = ((n0 / meas).sqrt(), (n1 / meas).sqrt());
    }
    Ok(ExtensionErrors {
        h: mesh_size(&mesh),
        e_ext: errs[0].0,
        e_ext_grad: errs[0].1,
        e_ext1: errs[1].0,
        e_ext1_grad: errs[1].1,
    })
}

/// Extension errors on levels `0..=cfg.refine`; writes a report when
/// `cfg.out` is set.
pub fn run_extension_study(cfg: &RunConfig) -> Result<Vec<ExtensionErrors>> {
    cfg.validate()?;
    let case = case_by_name(&cfg.case)?;
    let rows: Vec<ExtensionErrors> = par::map_range(cfg.refine + 1, |l| extension_errors(case.as_ref(), cfg, l))
        .into_iter()
        .collect::<Result<_>>()?;
    if let Some(out) = &cfg.out {
        let mut t = Table::new(&["MeshSize", "eExt", "eExtGrad", "eExt1", "eExt1Grad"]);
        for r in &rows {
            t.rows.push(vec![r.h, r.e_ext, r.e_ext_grad, r.e_ext1, r.e_ext1_grad]);
        }
        fs::write(out, t.with_orders(&[1, 2, 3, 4]).to_csv())?;
    }
    Ok(rows)
}

/// Scaled repeated-extension history at one level.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RepeatedRecord {
    pub n: usize,
    pub norm_p: f64,
    pub norm_s: f64,
    /// `‖φ^n - φ^0‖_{Ω_p} / ‖1‖_{Ω_p}`.
    pub e_p: f64,
    /// `‖φ^n - φ^0‖_{Ω_e} / ‖1‖_{Ω_e}`.
    pub e_e: f64,
}

/// Repeated L2 extension of `I_h φ(·, 0)` on refinement level `cfg.refine`.
pub fn run_repeated_extension(cfg: &RunConfig) -> Result<Vec<RepeatedRecord>> {
    cfg.validate()?;
    let case = case_by_name(&cfg.case)?;
    let rows = repeated_extension_with(case.as_ref(), cfg)?;
    if let Some(out) = &cfg.out {
        let mut t = Table::new(&["N", "NormP", "NormS", "eP", "eE"]);
        for r in &rows {
            t.rows.push(vec![r.n as f64, r.norm_p, r.norm_s, r.e_p, r.e_e]);
        }
        fs::write(out, t.to_csv())?;
    }
    Ok(rows)
}

pub fn repeated_extension_with(case: &dyn LevelSetCase, cfg: &RunConfig) -> Result<Vec<RepeatedRecord>> {
    let mesh = case_mesh(case, cfg.h0, cfg.refine)?;
    let (p, e) = extension_domains(case, &mesh, cfg.order, cfg.ext_layers)?;
    let vol = |s: &ElementSet| s.indices().iter().map(|&i| mesh.volume(i)).sum::<f64>().sqrt();
    let (vp, ve) = (vol(&p), vol(&e));
    let prob = ExtensionProblem::new(&mesh, p, e, cfg.order, GpVariant::L2, cfg.gamma_ext, cfg.alpha)?;
    let ext = Extender::new(prob, SolverOptions { method: crate::solver::Method::Direct, ..Default::default() })?;
    let phi0 = interpolate(ext.space(), &|x| case.phi(x, 0.0));
    Ok(repeated_extend(&ext, &phi0, cfg.steps)?
        .into_iter()
        .map(|r| RepeatedRecord { n: r.n, norm_p: r.norm_p, norm_s: r.norm_s, e_p: r.diff_p / vp, e_e: r.diff_e / ve })
        .collect())
}

/// One convergence-study row.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ErrorRow {
    pub h: f64,
    pub e_l2: f64,
    pub e_gamma: f64,
    pub e_gamma_inf: f64,
}

/// `log(e_coarse / e_fine) / log(h_coarse / h_fine)`.
pub fn observed_order(h0: f64, e0: f64, h1: f64, e1: f64) -> f64 {
    (e0 / e1).log2() / (h0 / h1).log2()
}

/// A numeric CSV table; `None` cells are written empty.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct Table {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
    pub extra: Vec<(String, Vec<Option<f64>>)>,
}

impl Table {
    pub fn new(columns: &[&str]) -> Self {
        Table { columns: columns.iter().map(|s| s.to_string()).collect(), rows: Vec::new(), extra: Vec::new() }
    }

    /// Appends an order column for each listed column against column 0.
    pub fn with_orders(mut self, cols: &[usize]) -> Self {
        for &c in cols {
            let vals = (0..self.rows.len())
                .map(|i| {
                    (i > 0).then(|| {
                        observed_order(self.rows[i - 1][0], self.rows[i - 1][c], self.rows[i][0], self.rows[i][c])
                    })
                })
                .collect();
            let name = format!("order{}", self.columns[c].trim_start_matches('e'));
            self.extra.push((name, vals));
        }
        self
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let head: Vec<&str> =
            self.columns.iter().map(String::as_str).chain(self.extra.iter().map(|(n, _)| n.as_str())).collect();
        s.push_str(&head.join(","));
        s.push('\n');
        for (i, r) in self.rows.iter().enumerate() {
            let mut cells: Vec<String> = r.iter().map(|v| format!("{v:.11e}")).collect();
            for (_, col) in &self.extra {
                cells.push(col[i].map(|v| format!("{v:.11e}")).unwrap_or_default());
            }
            let _ = writeln!(s, "{}", cells.join(","));
        }
        s
    }

    /// Parses text written by `to_csv`; returns the header and the cells.
    pub fn parse_csv(text: &str) -> Result<(Vec<String>, Vec<Vec<Option<f64>>>)> {
        let mut lines = text.lines();
        let head = lines.next().ok_or_else(|| Error::Config("empty CSV".into()))?;
        let columns: Vec<String> = head.split(',').map(str::to_string).collect();
        let mut rows = Vec::new();
        for line in lines.filter(|l| !l.trim().is_empty()) {
            let cells = line
                .split(',')
                .map(|c| if c.is_empty() { Ok(None) } else { parse::<f64>("cell", c).map(Some) })
                .collect::<Result<Vec<_>>>()?;
            if cells.len() != columns.len() {
                return Err(Error::Config(format!("row with {} cells, header has {}", cells.len(), columns.len())));
            }
            rows.push(cells);
        }
        Ok((columns, rows))
    }
}

/// CSV for a transport convergence study.
pub fn report_csv(rows: &[ErrorRow]) -> String {
    let mut t = Table::new(&["MeshSize", "eL2", "eGamma", "eGammaInf"]);
    for r in rows {
        t.rows.push(vec![r.h, r.e_l2, r.e_gamma, r.e_gamma_inf]);
    }
    t.with_orders(&[1, 2, 3]).to_csv()
}

pub fn emit_report(rows: &[ErrorRow], path: &Path) -> Result<()> {
    fs::write(path, report_csv(rows))?;
    Ok(())
}

pub fn volume_csv(hist: &[(f64, f64, f64)]) -> String {
    let mut t = Table::new(&["Time", "Volume", "VolumeError"]);
    for &(a, b, c) in hist {
        t.rows.push(vec![a, b, c]);
    }
    t.to_csv()
}
