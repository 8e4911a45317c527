//! Analytic benchmark scenarios for the level set equation
//! `d_t phi + u . grad phi = 0`.

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::geom::DiscreteInterface;
use crate::mesh::{cross, dot3, Point};
use crate::quadrature::QuadratureRule;

/// Gradients below this norm make the normal velocity undefined.
pub const MIN_GRAD: f64 = 1e-8;

/// Exact level set, its derivatives and a transporting velocity.
pub trait LevelSetCase: Send + Sync {
    fn name(&self) -> &str;
    fn dim(&self) -> usize;
    /// Computational box `(lo, hi)`.
    fn domain(&self) -> (Vec<f64>, Vec<f64>);
    fn phi(&self, x: &Point, t: f64) -> f64;
    fn grad_phi(&self, x: &Point, t: f64) -> Point;
    fn dt_phi(&self, x: &Point, t: f64) -> f64;
    fn velocity(&self, x: &Point, t: f64) -> Result<Point>;

    /// Velocity usable at every point of a band. Where `velocity` is
    /// undefined (critical points of `phi`) this returns its continuous
    /// limit, zero for the built-in cases.
    fn velocity_regularized(&self, x: &Point, t: f64) -> Point {
        self.velocity(x, t).unwrap_or([0.0; 3])
    }

    /// A priori bound on the normal speed, if known.
    fn vgamma_bound(&self) -> Option<f64> {
        None
    }

    /// Final time.
    fn end_time(&self) -> f64 {
        1.0
    }

    /// Exact volume of `{phi(·, t) < 0}`, if known in closed form.
    fn exact_volume(&self, _t: f64) -> Option<f64> {
        None
    }
}

fn ball_volume(dim: usize, r2: f64) -> f64 {
    if dim == 2 {
        PI * r2
    } else {
        4.0 / 3.0 * PI * r2.powf(1.5)
    }
}

fn grad_norm_check(g: &Point, x: &Point) -> Result<f64> {
    let n = dot3(g, g).sqrt();
    if n < MIN_GRAD {
        return Err(Error::DegenerateGradient { norm: n, point: x.to_vec() });
    }
    Ok(n)
}

/// Kite deforming into the unit circle/sphere:
/// `phi = (1 - t) phi_kite + t (|x|^2 - 1)`.
#[derive(Clone, Debug)]
pub struct KiteCase {
    dim: usize,
    name: String,
}

pub fn kite_case(dim: usize) -> Result<KiteCase> {
    match dim {
        2 | 3 => Ok(KiteCase { dim, name: format!("kite{dim}d") }),
        _ => Err(Error::InvalidArgument(format!("kite case dimension {dim}"))),
    }
}

impl KiteCase {
    pub fn phi_geom(&self, x: &Point) -> f64 {
        if self.dim == 2 {
            let a = x[0] + x[1] * x[1];
            a * a + x[1] * x[1] - 1.0
        } else {
            let a = x[0] - x[2] * x[2];
            a * a + x[1] * x[1] + x[2] * x[2] - 1.0
        }
    }

    fn grad_geom(&self, x: &Point) -> Point {
        if self.dim == 2 {
            let a = x[0] + x[1] * x[1];
            [2.0 * a, 4.0 * x[1] * a + 2.0 * x[1], 0.0]
        } else {
            let a = x[0] - x[2] * x[2];
            [2.0 * a, 2.0 * x[1], -4.0 * x[2] * a + 2.0 * x[2]]
        }
    }

    fn phi_ball(&self, x: &Point) -> f64 {
        x[..self.dim].iter().map(|v| v * v).sum::<f64>() - 1.0
    }
}

impl LevelSetCase for KiteCase {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn domain(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![-5.0 / 3.0; self.dim], vec![5.0 / 3.0; self.dim])
    }

    fn phi(&self, x: &Point, t: f64) -> f64 {
        (1.0 - t) * self.phi_geom(x) + t * self.phi_ball(x)
    }

    fn grad_phi(&self, x: &Point, t: f64) -> Point {
        let g = self.grad_geom(x);
        let mut out = [0.0; 3];
        for a in 0..self.dim {
            out[a] = (1.0 - t) * g[a] + t * 2.0 * x[a];
        }
        out
    }

    fn dt_phi(&self, x: &Point, _t: f64) -> f64 {
        self.phi_ball(x) - self.phi_geom(x)
    }

    fn velocity(&self, x: &Point, t: f64) -> Result<Point> {
        let g = self.grad_phi(x, t);
        let gn = grad_norm_check(&g, x)?;
        let n = g.map(|v| v / gn);
        let vn = -self.dt_phi(x, t) / gn;
        let ut = if self.dim == 2 {
            let v = [x[1], -x[0], 0.0];
            let c = dot3(&v, &n);
            [v[0] - c * n[0], v[1] - c * n[1], 0.0]
        } else {
            cross(&n, &[x[1] * x[2], x[0] * x[2], x[0] * x[1]])
        };
        Ok([vn * n[0] + ut[0], vn * n[1] + ut[1], vn * n[2] + ut[2]])
    }
}

/// Ball of radius `sqrt(1/2)` whose center rotates once around the unit
/// circle, transported by the rigid rotation `2 pi (-x2, x1, 0)`.
#[derive(Clone, Debug)]
pub struct RotatingBallCase {
    dim: usize,
    name: String,
}

pub fn rotating_ball_case(dim: usize) -> Result<RotatingBallCase> {
    match dim {
        2 | 3 => Ok(RotatingBallCase { dim, name: format!("ball{dim}d") }),
        _ => Err(Error::InvalidArgument(format!("ball case dimension {dim}"))),
    }
}

impl RotatingBallCase {
    fn center(t: f64) -> (f64, f64) {
        ((2.0 * PI * t).cos(), (2.0 * PI * t).sin())
    }
}

impl LevelSetCase for RotatingBallCase {
    fn name(&self) -> &str {
        &self.name
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn domain(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![-2.0; self.dim], vec![2.0; self.dim])
    }

    fn phi(&self, x: &Point, t: f64) -> f64 {
        let (c0, c1) = Self::center(t);
        let z = if self.dim == 3 { x[2] * x[2] } else { 0.0 };
        (x[0] - c0).powi(2) + (x[1] - c1).powi(2) + z - 0.5
    }

    fn grad_phi(&self, x: &Point, t: f64) -> Point {
        let (c0, c1) = Self::center(t);
        [2.0 * (x[0] - c0), 2.0 * (x[1] - c1), if self.dim == 3 { 2.0 * x[2] } else { 0.0 }]
    }

    fn dt_phi(&self, x: &Point, t: f64) -> f64 {
        let (c0, c1) = Self::center(t);
        let w = 2.0 * PI;
        // d/dt c = w (-c1, c0)
        -2.0 * (x[0] - c0) * (-w * c1) - 2.0 * (x[1] - c1) * (w * c0)
    }

    fn velocity(&self, x: &Point, _t: f64) -> Result<Point> {
        Ok([-2.0 * PI * x[1], 2.0 * PI * x[0], 0.0])
    }

    fn vgamma_bound(&self) -> Option<f64> {
        Some(2.0 * PI)
    }

    fn exact_volume(&self, _t: f64) -> Option<f64> {
        Some(ball_volume(self.dim, 0.5))
    }
}

/// Ball centered at the origin under the rotation field; the exact solution
/// is stationary.
#[derive(Clone, Debug)]
pub struct StationaryBallCase {
    dim: usize,
    end_time: f64,
}

pub fn stationary_ball_case(dim: usize, end_time: f64) -> StationaryBallCase {
    StationaryBallCase { dim, end_time }
}

impl LevelSetCase for StationaryBallCase {
    fn name(&self) -> &str {
        "stationary-ball"
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn domain(&self) -> (Vec<f64>, Vec<f64>) {
        (vec![-2.0; self.dim], vec![2.0; self.dim])
    }

    fn phi(&self, x: &Point, _t: f64) -> f64 {
        x[..self.dim].iter().map(|v| v * v).sum::<f64>() - 0.5
    }

    fn grad_phi(&self, x: &Point, _t: f64) -> Point {
        let mut g = [0.0; 3];
        for a in 0..self.dim {
            g[a] = 2.0 * x[a];
        }
        g
    }

    fn dt_phi(&self, _x: &Point, _t: f64) -> f64 {
        0.0
    }

    fn velocity(&self, x: &Point, _t: f64) -> Result<Point> {
        Ok([-2.0 * PI * x[1], 2.0 * PI * x[0], 0.0])
    }

    fn vgamma_bound(&self) -> Option<f64> {
        Some(0.0)
    }

    fn end_time(&self) -> f64 {
        self.end_time
    }

    fn exact_volume(&self, _t: f64) -> Option<f64> {
        Some(ball_volume(self.dim, 0.5))
    }
}

/// Looks up `kite2d`, `kite3d`, `ball2d` or `ball3d`.
pub fn case_by_name(name: &str) -> Result<Box<dyn LevelSetCase>> {
    Ok(match name {
        "kite2d" => Box::new(kite_case(2)?),
        "kite3d" => Box::new(kite_case(3)?),
        "ball2d" => Box::new(rotating_ball_case(2)?),
        "ball3d" => Box::new(rotating_ball_case(3)?),
        _ => return Err(Error::Config(format!("unknown case '{name}' (kite2d|kite3d|ball2d|ball3d)"))),
    })
}

/// Normal speed `|d_t phi| / |grad phi|`.
pub fn normal_speed(case: &dyn LevelSetCase, x: &Point, t: f64) -> f64 {
    let g = case.grad_phi(x, t);
    let n = dot3(&g, &g).sqrt();
    if n < MIN_GRAD {
        0.0
    } else {
        case.dt_phi(x, t).abs() / n
    }
}

/// Maximum normal speed at time `t` over the vertices and quadrature points
/// of a discrete interface, or the case's a priori bound when it has one.
pub fn vgamma_max(case: &dyn LevelSetCase, iface: &DiscreteInterface, t: f64) -> f64 {
    if let Some(b) = case.vgamma_bound() {
        return b;
    }
    vgamma_max_sampled(case, iface, t)
}

/// Sampled maximum normal speed over a discrete interface.
pub fn vgamma_max_sampled(case: &dyn LevelSetCase, iface: &DiscreteInterface, t: f64) -> f64 {
    let rule = QuadratureRule::simplex(iface.dim - 1, 4);
    let mut m: f64 = 0.0;
    for f in &iface.facets {
        for v in &f[..iface.dim] {
            m = m.max(normal_speed(case, v, t));
        }
        for p in &rule.points {
            let mut x = [0.0; 3];
            for (i, v) in f[..iface.dim].iter().enumerate() {
                for a in 0..3 {
                    x[a] += p[i] * v[a];
                }
            }
            m = m.max(normal_speed(case, &x, t));
        }
    }
    m
}
