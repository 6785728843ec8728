//! The fixed-point convergence certificate and the worst-case recursion.
//!
//! ```text
//! cargo run --release -p kam --example certificate
//! ```

use kam::scheme::{abstract_fp_simulate, convergence_certificate, CertificateConstants};

fn main() {
    let consts = CertificateConstants::new(1.0, 1.0, 1.0, 1.0, 1.0).unwrap();

    // A comfortable case: q = c 4^t σ^-t |y| = 0.08, doubly-exponential decay.
    let cert = convergence_certificate(&consts, 0.5, 0.01, 6);
    println!("σ = 0.5, |y| = 0.01:");
    println!("  q = {:.4}, contracting: {}", cert.q, cert.ok);
    println!("  predicted defect envelope q^(2^j):");
    for (j, p) in cert.predicted.iter().take(5).enumerate() {
        println!("    j = {j}: {p:.3e}");
    }

    // The schedule-aware recursion y_{j+1} = c σ_j^-t y_j² is dominated by
    // that envelope term by term; the x-drift sums stay inside the ball.
    let sim = abstract_fp_simulate(&consts, 0.5, 0.01, 6).unwrap();
    println!("\nworst-case recursion on the shrinking-strip schedule:");
    for (j, (drift, y)) in sim.iter().enumerate() {
        println!("  step {}: y = {y:.3e}, x-drift = {drift:.3e}", j + 1);
    }

    // Too large a perturbation for the width: 2q > 1, no certificate.
    let bad = convergence_certificate(&consts, 0.1, 0.1, 4);
    println!(
        "\nσ = 0.1, |y| = 0.1: q = {:.2}, ok = {} ({})",
        bad.q,
        bad.ok,
        bad.reason.unwrap_or_default()
    );

    // Zero perturbation is certified with all bounds zero.
    let zero = convergence_certificate(&consts, 0.5, 0.0, 4);
    println!(
        "zero perturbation: q = {}, predicted all zero: {}",
        zero.q,
        zero.predicted.iter().all(|&p| p == 0.0)
    );
}
