//! `sin(theta) + i tau` over a circle: an invertible perturbation, a
//! transition function, and the delooping path to the index section.

use etalab::bundles::{delooping_section, independent_section, make_invertible_perturbation, transition, OddFamily};
use etalab::chern::ParamDomain;
use etalab::fixtures::sine_base;
use etalab::linalg;
use etalab::suspend::TauGrid;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fam = OddFamily::hermitian(ParamDomain::circle(16), TauGrid::default(), sine_base())?;
    let q = make_invertible_perturbation(&fam, 0)?;
    println!("section strength {:.3}, smallest margin {:.3e}", q.strength(), q.min_margin());

    let other = independent_section(&q, 1)?;
    let t = transition(&q, &other)?;
    let x = [0.0, 0.0];
    println!("|transition(0, 0) - Id| = {:.3e}", linalg::max_abs(&(t.field().value(&x) - linalg::identity(1))));

    let s = delooping_section(&fam, &q)?;
    println!("stretch T = {:.1}, winding of the index section = {:+.3e}", s.stretch, s.winding()?);
    println!("g(0) = {:.4}", s.element(0)?.value());
    Ok(())
}
