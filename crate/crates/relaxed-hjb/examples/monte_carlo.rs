//! Monte-Carlo verification: simulate the relaxed dynamics under the solved
//! feedback control and compare the discounted exploratory reward against
//! the PDE value.
//!
//! ```sh
//! cargo run --release --example monte_carlo
//! ```

use relaxed_hjb::discretize::Grid;
use relaxed_hjb::problems;
use relaxed_hjb::simulate::{simulate_value, McOptions};
use relaxed_hjb::smoothmax::{GeneratorKind, SmoothMaxFamily};
use relaxed_hjb::solver::{solve_hjb, SolverOptions};

fn main() -> relaxed_hjb::Result<()> {
    let model = problems::uniform_f(3);
    let grid = Grid::build(&model.domain, &[201])?;
    let family = SmoothMaxFamily::new(GeneratorKind::Entropy, 3)?;
    let eps = 0.1;

    let solved = solve_hjb(&model, &grid, &family, eps, &SolverOptions::default())?;
    let x0 = [0.5];
    let pde = solved.u[grid.nearest_interior(&x0)];
    println!("PDE value at x0 = 0.5: {pde:.6}");

    println!(
        "\n{:>8} {:>8} {:>12} {:>10} {:>8}",
        "paths", "dt", "MC mean", "stderr", "z"
    );
    for (n_paths, dt) in [(2_000usize, 1e-3), (10_000, 1e-4)] {
        let opts = McOptions {
            n_paths,
            dt,
            seed: 42,
            threads: 4,
            ..McOptions::default()
        };
        let est = simulate_value(&model, &grid, &solved, &family, &x0, &opts)?;
        let z = (est.mean - pde) / est.stderr;
        println!(
            "{n_paths:>8} {dt:>8} {:>12.6} {:>10.2e} {z:>8.2}",
            est.mean, est.stderr
        );
    }

    // same machinery at eps = 0: the pure exploitation policy of the
    // two-action gap problem earns the reward-1 action everywhere
    let gap = problems::two_action_gap();
    let zang = SmoothMaxFamily::new(GeneratorKind::Zang, 2)?;
    let solved = solve_hjb(&gap, &grid, &zang, 0.0, &SolverOptions::default())?;
    let opts = McOptions {
        n_paths: 5_000,
        dt: 1e-3,
        seed: 7,
        threads: 4,
        ..McOptions::default()
    };
    let est = simulate_value(&gap, &grid, &solved, &zang, &x0, &opts)?;
    println!(
        "\nunregularized gap problem: MC {:.6} vs closed form 0.125 (z = {:.2})",
        est.mean,
        (est.mean - 0.125) / est.stderr
    );
    Ok(())
}
