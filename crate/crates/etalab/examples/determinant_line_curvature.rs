//! Curvature of the adiabatic connection against the even Chern character,
//! with the residual halved twice in grid step.

use etalab::adiabatic::{curvature_check, BiGrid};
use etalab::chern::ParamDomain;
use etalab::fixtures::{case_rng, random_epsilon_family};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut last = None;
    for n in [4, 8, 16] {
        let fam = random_epsilon_family(&mut case_rng(0, "example/curvature"), ParamDomain::torus(&[n, n])?, BiGrid::default(), 2, 1, 0.8);
        let (lhs, rhs) = curvature_check(&fam)?;
        let r = lhs.sub(&rhs)?.max_abs();
        let ratio = last.map(|p: f64| format!("  ratio {:.2}", p / r)).unwrap_or_default();
        println!("{n:2} x {n:<2}  |2 pi i Ch_2| = {:.3e}  residual {r:.3e}{ratio}", rhs.max_abs());
        last = Some(r);
    }
    Ok(())
}
