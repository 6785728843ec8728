//! Flows of generators and the group operations.
//!
//! ```text
//! cargo run --release -p kam --example exp_and_group
//! ```

use kam::grid::Discretization;
use kam::group::{compose, inverse, symplectic_defect, time_one_flow};
use kam::normalform::LieElement;
use kam::series::FourierTaylorSeries;
use num_complex::Complex64;
use std::f64::consts::{PI, TAU};

fn main() {
    let disc = Discretization::new(1, 16, 4, 2).unwrap();

    // The flow of θ̇ = δ sin(2πθ) has the closed form
    // tan(πθ_t) = tan(πθ₀) e^{2πδt}.
    let delta = 0.01;
    let sin = FourierTaylorSeries::new(
        1,
        16,
        0,
        &[
            (vec![1], vec![0], Complex64::new(0.0, -delta / 2.0)),
            (vec![-1], vec![0], Complex64::new(0.0, delta / 2.0)),
        ],
    )
    .unwrap();
    let g_dot = LieElement::new(vec![0.0], FourierTaylorSeries::zero(1, 16, 0), vec![sin]).unwrap();
    let g = time_one_flow(&g_dot, &disc).unwrap();
    let theta0 = 0.25;
    let closed = ((PI * theta0).tan() * (TAU * delta).exp()).atan() / PI;
    let (image, _) = g.apply_point(&[theta0], &[0.0]);
    println!("time-1 flow of δ sin(2πθ), δ = {delta}:");
    println!("  computed φ(1/4) = {:.12}", image[0]);
    println!("  closed form     = {closed:.12}");

    // Group inverse: compose(G, G⁻¹) is the identity.
    let gi = inverse(&g, &disc).unwrap();
    let round = compose(&g, &gi, &disc).unwrap();
    println!(
        "\n|G ∘ G⁻¹ − id| on the torus = {:.3e}",
        round.deviation_norm(0.0)
    );

    // Flowing the opposite generator inverts to second order.
    let gm = time_one_flow(&g_dot.neg(), &disc).unwrap();
    let almost = compose(&g, &gm, &disc).unwrap();
    println!(
        "|exp(Ġ) ∘ exp(−Ġ) − id| = {:.3e}",
        almost.deviation_norm(0.0)
    );

    // Every element acts symplectically (finite-difference Jacobian check).
    println!(
        "\nsymplectic defect of exp(Ġ) at 100 random points: {:.3e}",
        symplectic_defect(&g, 100, 0)
    );

    // Translations compose additively in the 1-form constant.
    let t1 = kam::group::GroupElement::translation(&[0.05], 16, 4);
    let t2 = kam::group::GroupElement::translation(&[0.07], 16, 4);
    let t = compose(&t1, &t2, &disc).unwrap();
    println!("translation composition: R = {:.3} (0.05 + 0.07)", t.r_const[0]);
}
