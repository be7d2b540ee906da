// Pressure sweep of one sensing element: centre deflection, capacitance and
// the small-signal sensitivity around the rest point.

use tactile_bp::membrane::{capacitance, deflect, flexural_rigidity, linear_sensitivity, Membrane};
use tactile_bp::Error;

pub fn run_example() -> tactile_bp::Result<()> {
    let m = Membrane::default();
    let g = m.geometry;
    println!(
        "flexural rigidity  {:.4e} N m",
        flexural_rigidity(&g, &m.material)
    );
    println!("rest capacitance   {:.4} fF", g.rest_capacitance() * 1e15);
    println!("dC/dw at w = 0     {:.4e} F/m", linear_sensitivity(&g));
    println!();
    println!(
        "{:>10} {:>12} {:>12} {:>10}",
        "p (kPa)", "w0 (nm)", "C (fF)", "dC (aF)"
    );
    let c_rest = g.rest_capacitance();
    for kpa in [-40.0, -10.0, 0.0, 10.0, 20.0, 40.0, 80.0, 160.0] {
        let profile = deflect(&g, &m.material, kpa * 1e3)?;
        let c = capacitance(&g, &profile)?;
        println!(
            "{kpa:>10.1} {:>12.3} {:>12.5} {:>10.3}",
            profile.center_deflection * 1e9,
            c * 1e15,
            (c - c_rest) * 1e18
        );
    }

    // The stiff plate only approaches the counter-electrode at hundreds of kPa.
    let mut p = 100e3;
    loop {
        match m.capacitance_at(p) {
            Ok(_) => p *= 1.25,
            Err(Error::MembraneContact { .. }) => break,
            Err(e) => return Err(e),
        }
    }
    println!(
        "\ncontact limit reached between {:.0} and {:.0} kPa",
        p / 1.25e3,
        p / 1e3
    );
    Ok(())
}

#[allow(dead_code)]
fn main() -> tactile_bp::Result<()> {
    run_example()
}
