//! Degree-one index check over a circle for twisted rank-one families
//! `s_w (sin(theta) + i tau)`.

use etalab::bundles::{index_theorem_check_with, IndexConfig, OddFamily};
use etalab::chern::{tau_only, ParamDomain};
use etalab::fixtures::{sine_base, standard_loop};
use etalab::suspend::TauGrid;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let plain = OddFamily::hermitian(ParamDomain::circle(12), TauGrid::default(), sine_base())?;
    for w in [0, 1, -1, 2] {
        let fam = plain.twisted(tau_only(standard_loop(1, w), 1))?;
        let chk = index_theorem_check_with(&fam, &IndexConfig::default())?;
        println!(
            "w = {w:+}: oint gamma = {:+.3e}  -winding(g) = {:+.3e}  tau winding = {:+.3e}  eta0(0) = {:+.6}",
            chk.lhs.re, chk.rhs.re, chk.tau_winding, chk.eta0[0].re
        );
    }
    Ok(())
}
