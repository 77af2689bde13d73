//! Gerbe splitting over a fibre product: the curvature of the modified
//! connection equals the B-field difference up to an O(h^2) residual.

use std::sync::Arc;

use etalab::adiabatic::{gerbe_bfield_check, lift_loop_family, BiGrid};
use etalab::chern::{inverse, product, DecayClass, Field, ParamDomain, SuspendedFamily};
use etalab::fixtures::{case_rng, HalfOpenFamily};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = BiGrid::default();
    let mut rng = case_rng(0, "example/gerbe");
    let a = HalfOpenFamily::random(&mut rng, 2, 2);
    let other = HalfOpenFamily::random(&mut rng, 2, 2);
    let b = HalfOpenFamily { target: a.target.clone(), bump: other.bump };
    let (fa, fb): (Field, Field) = (Arc::new(a), Arc::new(b));
    for n in [4, 8] {
        let dom = ParamDomain::torus(&[n, n])?;
        let half_open = |f: &Field| SuspendedFamily::new(dom.clone(), grid.tau().clone(), f.clone(), DecayClass::HalfOpen);
        let lift = lift_loop_family(dom.clone(), grid.clone(), product(fa.clone(), inverse(fb.clone())), 0)?;
        let chk = gerbe_bfield_check(&half_open(&fa), &half_open(&fb), &lift)?;
        println!("{n} x {n}: |B| = {:.3e}  residual {:.3e}", chk.b_field.max_abs(), chk.residual()?);
    }
    Ok(())
}
