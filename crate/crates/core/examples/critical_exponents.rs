//! Integrability exponents attached to `μ ∈ W^{1,p}` with ellipticity `K`, and the
//! dimension distortion bounds.
//!
//! ```bash
//! cargo run --example critical_exponents
//! ```

use beltrami_lab::coeff::critical_exponents;
use beltrami_lab::measure::{astala_bound, holder_dim_bound};

fn fmt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:8.4}")).unwrap_or_else(|| "       -".into())
}

fn main() -> beltrami_lab::Result<()> {
    println!("{:>5} {:>5} {:>8} {:>8} {:>8}", "K", "p", "q0", "p0", "r_sup");
    for k in [1.0, 1.5, 2.0, 3.0] {
        for p in [1.5, 2.0, 2.5, 3.0] {
            let e = critical_exponents(p, k)?;
            println!("{k:5.1} {p:5.1} {:8.4} {} {}", e.q0, fmt(e.p0), fmt(e.r_sup));
        }
    }
    println!();
    println!("{:>5} {:>6} {:>10}", "K", "dim E", "bound");
    for k in [1.5, 2.0, 3.0] {
        for t in [0.5, 1.0, 2.0 / (k + 1.0), 1.5, 2.0] {
            println!("{k:5.1} {t:6.3} {:10.6}", astala_bound(t, k)?);
        }
    }
    println!("holder bound K=2, t=1.25: {}", holder_dim_bound(1.25, 2.0)?);
    Ok(())
}
