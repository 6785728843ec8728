//! Dynamical verification: embed the torus, check the vector field along it,
//! and integrate trajectories against the embedding graph.
//!
//! ```text
//! cargo run --release -p kam --example verify_torus
//! ```

use kam::config::ProblemConfig;
use kam::scheme::kam_run;
use kam::verify::{flow_check, invariance_residual, torus_embedding, FlowCheckParams};

const CONFIG: &str = r#"{
  "n": 1,
  "alpha": [0.6180339887498949],
  "tau": 1.0,
  "k0": { "c": 0.0, "q": [[{"k": [0], "m": [0], "re": 1.0}]] },
  "perturbation": [{"k": [1], "m": [0], "re": 0.0005}],
  "truncation": { "kmax": 64, "mmax": 4, "oversample": 2 },
  "strips": { "s": 0.1, "sigma": 0.2 }
}"#;

fn main() {
    let problem = ProblemConfig::from_json(CONFIG).unwrap().build().unwrap();
    let run = kam_run(
        &problem.h,
        &problem.k0,
        &problem.schedule,
        &problem.disc,
        problem.gamma2,
        problem.tau2,
    )
    .unwrap();
    println!("run outcome: {:?}", run.report.outcome);

    // The invariant torus is the image of the zero section under γ.
    let emb = torus_embedding(&run.gamma, 256).unwrap();
    let amp = emb.r_image[0].iter().fold(0.0f64, |m, v| m.max(v.abs()));
    println!("embedding graph amplitude max |r'(θ)| = {amp:.4e} (≈ ε/α)");
    println!("sample points (θ, θ', r'):");
    for i in [0usize, 64, 128, 192] {
        let theta = i as f64 / 256.0;
        println!(
            "  {:.4}  {:.10}  {:+.6e}",
            theta,
            theta + emb.angle_offset[0][i],
            emb.r_image[0][i]
        );
    }

    // Geometric check: the Hamiltonian field along the torus equals the
    // pushed-forward rotation by α.
    let residual = invariance_residual(&problem.h, &emb, &problem.freq.alpha).unwrap();
    println!("\ninvariance residual |X_H − Dγ·(α,0)| = {residual:.3e}");

    // Dynamical check: trajectories started on the torus stay on its graph
    // and rotate with frequency α.
    let params = FlowCheckParams::standard(100.0, 1e-3, 0, problem.schedule.s);
    let flow = flow_check(&problem.h, &emb, &problem.freq.alpha, &params).unwrap();
    println!("flow check over T = 100 (20 trajectories, RK4 dt = 1e-3):");
    println!("  max distance to the graph: {:.3e}", flow.max_torus_distance);
    println!("  rotation error:            {:.3e}", flow.rotation_error);
    println!("  energy drift:              {:.3e}", flow.energy_drift);

    // Negative control: a start 0.05 off the torus is detected.
    let mut off = params.clone();
    off.n_points = 3;
    off.t_final = 10.0;
    off.initial_r_offset = 0.05;
    let bad = flow_check(&problem.h, &emb, &problem.freq.alpha, &off).unwrap();
    println!(
        "\noff-torus start (r + 0.05): distance {:.3e} — correctly flagged",
        bad.max_torus_distance
    );
}
