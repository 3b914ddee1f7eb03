//! Kernels side by side: Volterra, Green's functions of -u'' and u'''' and a
//! tabulated kernel read from CSV.

use regproj::operators::{apply_a_function, Kernel, TabulatedKernel};

fn main() -> regproj::Result<()> {
    // a smooth kernel tabulated as (t, s, K) triples on a 41 x 41 grid
    let mut csv = String::from("t,s,k\n");
    for i in 0..=40 {
        for j in 0..=40 {
            let (t, s) = (i as f64 / 40.0, j as f64 / 40.0);
            csv.push_str(&format!("{t},{s},{}\n", (-(t - s) * (t - s)).exp()));
        }
    }
    let kernels = [
        ("volterra l=1", Kernel::volterra(1)?),
        ("volterra l=2", Kernel::volterra(2)?),
        ("green d2", Kernel::GreenD2),
        ("green d4", Kernel::GreenD4),
        ("tabulated", Kernel::Tabulated(TabulatedKernel::from_csv_reader(csv.as_bytes())?)),
    ];
    let u = |s: f64| 1.0 + s;
    for (name, k) in &kernels {
        let vals: Vec<String> = [0.25, 0.5, 0.75, 1.0]
            .iter()
            .map(|&t| format!("{:+.5}", apply_a_function(k, &u, t)))
            .collect();
        println!("{name:>13}: (A(1+s))(t) at t = 1/4, 1/2, 3/4, 1: {}", vals.join(" "));
    }
    Ok(())
}
