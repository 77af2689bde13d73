//! Eta invariant of `A + i tau` for Hermitian `A` against the sign count, and
//! the tau invariant of a perturbed family over a circle.

use etalab::bundles::{independent_section, make_invertible_perturbation, OddFamily};
use etalab::chern::ParamDomain;
use etalab::eta::{family_eta, tau_invariant, EllipticFamily, RegularizedTraceConfig};
use etalab::fixtures::{case_rng, hermitian_series_family, random_hermitian};
use etalab::opcore::hermitian_spectrum;
use etalab::suspend::TauGrid;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let cfg = RegularizedTraceConfig::default();
    let mut rng = case_rng(0, "example/eta");
    for n in [1, 3, 6] {
        let a = random_hermitian(&mut rng, n, 1.0);
        let signs: f64 = hermitian_spectrum(&a)?.iter().map(|l| 0.5 * l.signum()).sum();
        let fam = EllipticFamily::constant(ParamDomain::circle(4), TauGrid::default(), a);
        let eta = family_eta(&fam, &cfg)?.zero_values()[0];
        println!("N = {n}: eta0 = {:+.9}  half sign sum = {signs:+.1}", eta.re);
    }

    let base = hermitian_series_family(&mut rng, 2, 1, 0.4);
    let fam = OddFamily::hermitian(ParamDomain::circle(8), TauGrid::default(), base)?;
    let q1 = make_invertible_perturbation(&fam, 0)?;
    let q2 = independent_section(&q1, 1)?;
    let (t1, t2) = (tau_invariant(&q1.perturbed(), &cfg)?, tau_invariant(&q2.perturbed(), &cfg)?);
    let worst = t1.iter().zip(&t2).map(|(a, b)| (a - b).norm()).fold(0.0, f64::max);
    println!("tau(A) at y = 0: {:.9}; largest difference between two sections {worst:.2e}", t1[0]);
    Ok(())
}
