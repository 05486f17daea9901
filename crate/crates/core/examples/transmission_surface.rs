//! Coarse `(h, Jz)` transmission map. Each row peaks on the line `h = Jz`.

use spinnet::scattering::{transmission_scan, ScatteringGeometry};

fn main() -> spinnet::Result<()> {
    let hs: Vec<f64> = (0..=12).map(|i| i as f64).collect();
    let jzs = [4.0, 8.0, 12.0];
    let surface = transmission_scan(&ScatteringGeometry::default(), &hs, &jzs)?;

    print!("{:>5}", "Jz\\h");
    for h in &hs {
        print!("{h:>6}");
    }
    println!();
    for &jz in &jzs {
        print!("{jz:>5}");
        for &h in &hs {
            match surface.transmission(h, jz) {
                Some(t) => print!("{t:>6.3}"),
                None => print!("{:>6}", "-"),
            }
        }
        let (h_best, t_best) = surface.argmax_h(jz).expect("row has points");
        println!("   max T = {t_best:.4} at h = {h_best}");
    }
    Ok(())
}
