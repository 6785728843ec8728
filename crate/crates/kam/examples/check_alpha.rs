//! Diophantine margin scans and the small-divisor spectrum.
//!
//! ```text
//! cargo run --release -p kam --example check_alpha
//! ```

use kam::cohomology::{check_diophantine, small_divisor_spectrum, Frequency, GOLDEN_MEAN};

fn main() {
    // The golden mean: the best-behaved frequency on the circle.
    let scan = check_diophantine(&[GOLDEN_MEAN], 1.0, 64).unwrap();
    println!("golden mean, tau = 1, kmax = 64:");
    println!(
        "  min margin {:.6} at k = {:?}, admissible gamma {:.6}",
        scan.min_margin, scan.argmin_k, scan.admissible_gamma
    );

    let freq = Frequency::checked(&[GOLDEN_MEAN], 1.0, 64, 1e-10).unwrap();
    println!("  worst amplifications (Fibonacci denominators):");
    for line in small_divisor_spectrum(&freq, 64).iter().take(5) {
        println!(
            "    k = {:>4?}  dist(k*alpha, Z) = {:.6e}  amplification = {:.3}",
            line.k, line.divisor, line.amplification
        );
    }

    // A two-frequency vector built on the real root of x^3 = x + 1:
    // alpha = (1/rho, 1/rho^2), a cubic pair with good joint margins.
    let alpha = [0.754_877_666_246_692_7, 0.569_840_290_998_053_2];
    let scan2 = check_diophantine(&alpha, 1.2, 32).unwrap();
    println!("\ncubic pair, tau = 1.2, kmax = 32:");
    println!(
        "  min margin {:.6} at k = {:?}",
        scan2.min_margin, scan2.argmin_k
    );

    // A rational frequency is exactly resonant and unusable.
    match Frequency::checked(&[0.5], 1.0, 8, 1e-10) {
        Err(e) => println!("\nalpha = 1/2 is rejected: {e}"),
        Ok(_) => unreachable!(),
    }
}
