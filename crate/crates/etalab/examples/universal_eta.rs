//! The universal eta form of half-open paths: the Fredholm determinant
//! relation, and transgression of the odd character over a circle.

use std::sync::Arc;

use etalab::chern::{ch_odd, exterior_derivative, DecayClass, Field, ParamDomain, SuspendedFamily};
use etalab::eta::{fredholm_relation_check, universal_eta, universal_eta_zero};
use etalab::fixtures::{case_rng, random_group_matrix, HalfOpenFamily};
use etalab::opcore::GroupElement;
use etalab::suspend::{make_path, PathOptions, TauGrid};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = TauGrid::default();
    let mut rng = case_rng(0, "example/universal");
    for n in [1, 2, 4] {
        let g = GroupElement::from_value(random_group_matrix(&mut rng, n, 0.7))?;
        let path = make_path(&g, &grid, PathOptions::default())?;
        let (lhs, rhs) = fredholm_relation_check(&path)?;
        println!("N = {n}: eta~0 = {:.10}  exp(2 pi i eta~0) = {lhs:.10}  det = {rhs:.10}", universal_eta_zero(&path)?);
    }

    let f: Field = Arc::new(HalfOpenFamily::random(&mut rng, 2, 1));
    for n in [16, 32] {
        let fam = SuspendedFamily::new(ParamDomain::circle(n), grid.clone(), f.clone(), DecayClass::HalfOpen);
        let d_eta = exterior_derivative(universal_eta(&fam)?.zero_form())?;
        let residual = d_eta.sub(&ch_odd(&fam.limit_family())?[0])?.max_abs();
        println!("circle({n}): max |d eta~0 - Ch_1(limit)| = {residual:.3e}");
    }
    Ok(())
}
