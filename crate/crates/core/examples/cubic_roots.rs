//! Real roots of a few cubics, including near-degenerate ones.

use electro_coord::roots::{eval, real_roots};

fn main() {
    let cases = [
        ("three simple roots", [1.0, -6.0, 11.0, -6.0]),
        ("double root", [1.0, -5.0, 8.0, -4.0]),
        ("triple root", [1.0, -3.0, 3.0, -1.0]),
        ("one real root", [1.0, 0.0, 1.0, 1.0]),
        ("tiny leading term", [1e-15, 1.0, -3.0, 2.0]),
    ];
    for (name, c) in cases {
        let roots = real_roots(c);
        let residual = roots.iter().map(|&x| eval(c, x).abs()).fold(0.0, f64::max);
        println!("{name:18} {:?}  max |p| {residual:.1e}", roots.as_slice());
    }
}
