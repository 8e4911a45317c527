use std::sync::Arc;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use narrowband::band::{cut_elements, NarrowBand};
use narrowband::cases::{kite_case, LevelSetCase};
use narrowband::driver::{case_mesh, extension_domains};
use narrowband::extension::{ExtensionProblem, GpVariant};
use narrowband::fe::{interpolate, FeSpace};
use narrowband::mesh::{ElementSet, Mesh, Point};
use narrowband::transport::{assemble_transport, bdf_coefficients, domain_inflow_faces, FeVelocity, TransportProblem};

// The parallel feature is a compile-time switch; at run time the sequential
// path is emulated by a one-thread pool, which executes the same code.
fn pools() -> Vec<(&'static str, rayon::ThreadPool)> {
    let all = rayon::ThreadPoolBuilder::new().build().unwrap();
    let one = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    vec![("rayon", all), ("sequential", one)]
}

fn setup(dim: usize, h0: f64) -> (Box<dyn LevelSetCase>, Arc<Mesh>) {
    let case: Box<dyn LevelSetCase> = Box::new(kite_case(dim).unwrap());
    let mesh = case_mesh(case.as_ref(), h0, 0).unwrap();
    (case, mesh)
}

fn bench_transport(c: &mut Criterion) {
    let k = 2;
    let (case, mesh) = setup(2, 0.05);
    let full = ElementSet::full(mesh.n_elements());
    let cg_full = FeSpace::cg(&mesh, &full, k).unwrap();
    let phi0 = interpolate(&cg_full, &|x| case.phi(x, 0.0));
    let band = NarrowBand::new(&mesh, cut_elements(&phi0), 3);
    let cg = FeSpace::cg(&mesh, &band.set, k).unwrap();
    let dg = FeSpace::dg(&mesh, &band.set, k).unwrap();
    let phi = interpolate(&cg, &|x| case.phi(x, 0.0));
    let u = |x: &Point, t: f64| case.velocity_regularized(x, t);
    let vel = FeVelocity::interpolate(&cg, &u, 0.01).unwrap();
    let inflow = domain_inflow_faces(&mesh, &band, &u, 0.0);
    let bdf = bdf_coefficients(1, &[0.01]).unwrap();
    let history = [&phi];
    let phi_d = |_: usize, _: &[f64; 4], x: &Point| Ok(case.phi(x, 0.01));
    let prob = TransportProblem { space: &dg, velocity: &vel, bdf: &bdf, history: &history, inflow: &inflow, phi_d: &phi_d };

    let mut g = c.benchmark_group("transport_assembly");
    for (name, pool) in pools() {
        g.bench_with_input(BenchmarkId::from_parameter(name), &pool, |b, pool| {
            b.iter(|| pool.install(|| assemble_transport(&prob).unwrap()))
        });
    }
    g.finish();
}

fn bench_extension(c: &mut Criterion) {
    let k = 2;
    let (case, mesh) = setup(3, 0.25);
    let (p, e) = extension_domains(case.as_ref(), &mesh, k, 2).unwrap();
    let prob = ExtensionProblem::new(&mesh, p, e, k, GpVariant::L2, 1.0, None).unwrap();

    let mut g = c.benchmark_group("extension_assembly");
    g.sample_size(10);
    for (name, pool) in pools() {
        g.bench_with_input(BenchmarkId::from_parameter(name), &pool, |b, pool| {
            b.iter(|| pool.install(|| prob.assemble_matrix().unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, bench_transport, bench_extension);
criterion_main!(benches);
