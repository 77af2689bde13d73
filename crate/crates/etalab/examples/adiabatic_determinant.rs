//! Adiabatic determinant: multiplicativity, path independence, and the
//! integral of the connection form around a degree-one loop.

use std::f64::consts::PI;

use etalab::adiabatic::{
    adiabatic_determinant, commutator_trace, det_ad, line_integral, star_multiply, BiGrid, Bracket, DetConfig, EpsilonClass,
    EpsilonElement, PolygonPath, SphereLoop,
};
use etalab::fixtures::{case_rng, random_epsilon};
use etalab::linalg::I;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = BiGrid::default();
    let cfg = DetConfig::default();
    let mut rng = case_rng(0, "example/det");
    let mut ds = || random_epsilon(&mut rng, &grid, 2, EpsilonClass::DoublySchwartz, 0.5);
    let (a, b, via) = (ds(), ds(), ds());

    for bracket in [Bracket::Td9, Bracket::Verbatim] {
        println!("Tr_ad [a, b] with {bracket}: {:.3e}", commutator_trace(&a, &b, bracket)?.norm());
    }
    let (da, db) = (det_ad(&a, &cfg)?, det_ad(&b, &cfg)?);
    let dab = det_ad(&star_multiply(&a, &b)?, &cfg)?;
    println!("det(a b) = {dab:.10}  det(a) det(b) = {:.10}", da * db);
    let detour = PolygonPath::new(vec![EpsilonElement::identity(grid.clone(), 2), via, a])?;
    println!("det(a) along a detour = {:.10}", adiabatic_determinant(&detour, &cfg)?);

    let loop_cfg = DetConfig { tol: 1e-7, ..cfg };
    for orientation in [1.0, -1.0] {
        let v = line_integral(&SphereLoop::new(grid.clone(), 1.0, orientation), &loop_cfg)?;
        println!("loop integral / 2 pi i = {:.10}", v / (2.0 * PI * I));
    }
    Ok(())
}
