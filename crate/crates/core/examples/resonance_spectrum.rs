//! Four-site switch: a flip hops onto a DD qubit and off the far side.
//! Transfer is complete only when the DD field matches its coupling.

use spinnet::scattering::four_site_switch;

fn main() -> spinnet::Result<()> {
    println!("{:>6} {:>6} {:>12} {:>12}", "h", "Jz", "three-level", "full");
    for (h, jz) in [(10.0, 10.0), (5.0, 5.0), (9.5, 10.0), (9.0, 10.0), (8.0, 10.0), (10.0, 0.0)] {
        let s = four_site_switch(h, jz, 1.0)?;
        println!("{h:>6} {jz:>6} {:>12.6} {:>12.6}", s.three_level, s.full_sector);
    }
    Ok(())
}
