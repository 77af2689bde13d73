//! Winding numbers of random loops in U(n) and their additivity under products.

use etalab::chern::{product, winding_number, GroupFamily, ParamDomain};
use etalab::fixtures::{case_rng, random_loop};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let domain = ParamDomain::circle(256);
    let mut rng = case_rng(0, "example/winding");
    let a = random_loop(&mut rng, 3, &[2, -1], 0.3);
    let b = random_loop(&mut rng, 3, &[-3], 0.3);
    let w = |f| winding_number(&GroupFamily::new(domain.clone(), f));
    let (wa, wb) = (w(a.clone())?, w(b.clone())?);
    let wab = w(product(a, b))?;
    println!("winding(a)    = {wa:+.12}");
    println!("winding(b)    = {wb:+.12}");
    println!("winding(a b)  = {wab:+.12}  (sum {:+.12})", wa + wb);
    Ok(())
}
