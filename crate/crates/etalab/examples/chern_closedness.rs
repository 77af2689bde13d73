//! Closedness of the odd Chern character: `d Ch_odd` shrinks at second order
//! as the parameter grid is refined.

use etalab::chern::{ch_odd, exterior_derivative, GroupFamily, ParamDomain};
use etalab::fixtures::{case_rng, random_family};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let f = random_family(&mut case_rng(0, "example/closedness"), 2, 2);
    let mut last = None;
    for n in [8, 16, 32, 64] {
        let fam = GroupFamily::new(ParamDomain::torus(&[n, n])?, f.clone());
        let forms = ch_odd(&fam)?;
        let err = exterior_derivative(&forms[0])?.max_abs();
        match last {
            Some(prev) => println!("n = {n:3}  max |d Ch_1| = {err:.3e}  ratio {:.2}", prev / err),
            None => println!("n = {n:3}  max |d Ch_1| = {err:.3e}"),
        }
        last = Some(err);
    }
    Ok(())
}
