//! Solve a regularized exit-time problem by policy iteration and compare
//! against the closed form available for identical actions.
//!
//! ```sh
//! cargo run --example solve_hjb
//! ```

use relaxed_hjb::discretize::Grid;
use relaxed_hjb::problems;
use relaxed_hjb::smoothmax::{GeneratorKind, SmoothMaxFamily};
use relaxed_hjb::solver::{solve_hjb, SolverOptions};

fn main() -> relaxed_hjb::Result<()> {
    let model = problems::uniform_f(3);
    let grid = Grid::build(&model.domain, &[201])?;
    let family = SmoothMaxFamily::new(GeneratorKind::Entropy, 3)?;
    let eps = 0.1;

    let solved = solve_hjb(&model, &grid, &family, eps, &SolverOptions::default())?;
    println!(
        "converged in {} policy improvements, residual {:.2e}",
        solved.iterations, solved.final_residual
    );

    // three identical actions: u(x) = (1 + eps ln 3) x (1 - x) / 2
    let amp = 1.0 + eps * 3.0f64.ln();
    println!(
        "\n{:>6} {:>12} {:>12} {:>10}",
        "x", "u", "closed form", "error"
    );
    for &x in &[0.1, 0.25, 0.5, 0.75, 0.9] {
        let node = ((x / grid.spacing(0)).round()) as usize;
        let exact = amp * x * (1.0 - x) / 2.0;
        println!(
            "{x:>6.2} {:>12.8} {exact:>12.8} {:>10.2e}",
            solved.u[node],
            (solved.u[node] - exact).abs()
        );
    }

    let mid = grid.num_interior() / 2;
    println!(
        "\ncontrol at the center: {:?} (uniform by symmetry)",
        solved.control[mid].weights()
    );

    // a problem with a genuine switch: the relaxed control interpolates
    // between the actions across the midpoint
    let switching = problems::sign_switch_drift();
    let family2 = SmoothMaxFamily::new(GeneratorKind::Entropy, 2)?;
    let solved = solve_hjb(&switching, &grid, &family2, eps, &SolverOptions::default())?;
    println!("\nswitching problem, control weight on action 1:");
    for &x in &[0.2, 0.4, 0.5, 0.6, 0.8] {
        let node = ((x / grid.spacing(0)).round()) as usize;
        let rank = grid.interior_rank(node).unwrap();
        println!("  x = {x:.1}: lambda_1 = {:.4}", solved.control[rank][0]);
    }
    Ok(())
}
