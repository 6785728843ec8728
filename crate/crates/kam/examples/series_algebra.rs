//! Fourier-Taylor series arithmetic and strip norms.
//!
//! ```text
//! cargo run --release -p kam --example series_algebra
//! ```

use kam::series::FourierTaylorSeries;
use num_complex::Complex64;

fn main() {
    // cos(2πθ) as a two-mode real series.
    let cos = FourierTaylorSeries::new(
        1,
        8,
        2,
        &[
            (vec![1], vec![0], Complex64::new(0.5, 0.0)),
            (vec![-1], vec![0], Complex64::new(0.5, 0.0)),
        ],
    )
    .unwrap();

    // cos² = 1/2 + cos(4πθ)/2 by convolution.
    let (cos_sq, tail) = cos.mul(&cos, 0.1).unwrap();
    println!("cos^2 coefficients (tail mass {tail:.1e}):");
    for (idx, c) in cos_sq.iter() {
        println!("  k = {:>2}, m = {}: {:+.3}", idx.k(0), idx.m(0), c.re);
    }

    // Derivatives act mode-wise.
    let d = cos.deriv_theta(0).unwrap();
    println!(
        "d/dθ cos(2πθ) at θ = 1/4: {:+.6} (expect -2π = {:+.6})",
        d.evaluate(&[0.25], &[0.0]).unwrap(),
        -std::f64::consts::TAU
    );

    // The majorant norm dominates the sup norm and grows with the strip.
    let r = FourierTaylorSeries::action_monomial(1, 8, 2, 0);
    let h = r.scale(0.618).add(&cos.scale(1e-3)).unwrap();
    println!("\nmajorant norms of 0.618 r + 1e-3 cos(2πθ):");
    for s in [0.0, 0.05, 0.1, 0.2, 0.3] {
        println!("  s = {s:.2}: |H|_s = {:.6e}", h.majorant_norm(s));
    }

    // Taylor jets split the series exactly.
    let (r2, _) = r.mul(&r, 0.0).unwrap();
    let full = h.add(&r2).unwrap();
    println!(
        "\njet/remainder split of H + r²: jet has {} coefficients, remainder {}",
        full.jet(1).len(),
        full.remainder(1).len()
    );

    // Reality is enforced: a lone k-mode is symmetrized to half weight on
    // each of ±k.
    let lone =
        FourierTaylorSeries::new(1, 4, 0, &[(vec![1], vec![0], Complex64::new(0.5, 0.0))]).unwrap();
    println!(
        "\nlone 0.5 mode after reality projection: c(+1) = {:.3}, c(-1) = {:.3}",
        lone.coeff(&[1], &[0]).re,
        lone.coeff(&[-1], &[0]).re
    );
}
