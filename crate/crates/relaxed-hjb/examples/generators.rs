//! Tour of the smooth-max generators: constants, the sandwich inequality,
//! gradients as relaxed controls, exploration costs and local exactness.
//!
//! ```sh
//! cargo run --example generators
//! ```

use relaxed_hjb::smoothmax::{rho_entropy, subdiff_max, GeneratorKind, SmoothMaxFamily};

fn main() -> relaxed_hjb::Result<()> {
    let kinds = [
        GeneratorKind::Entropy,
        GeneratorKind::Chks,
        GeneratorKind::Zang,
    ];

    println!("family constants (K = 4):");
    println!("{:>9} {:>10} {:>12}", "kind", "c0", "theta");
    for kind in kinds {
        let family = SmoothMaxFamily::new(kind, 4)?;
        let theta = family
            .theta_sloc()
            .map(|t| format!("{t:.5}"))
            .unwrap_or_else(|| "-".into());
        println!("{:>9} {:>10.5} {:>12}", kind.name(), family.c0(), theta);
    }

    let x = [1.0, 0.4, -0.3, 0.9];
    println!("\nat x = {x:?} (max = 1):");
    for kind in kinds {
        let family = SmoothMaxFamily::new(kind, 4)?;
        for eps in [1.0, 0.1] {
            let h = family.eval_scaled(eps, &x);
            let g = family.grad_scaled(eps, &x)?;
            let cost = family.exploration_cost(eps, &x)?;
            println!(
                "  {:>7} eps={eps:<4} H_eps = {h:+.6}  control = {:?}  eps*rho = {cost:+.6}",
                kind.name(),
                g.weights()
                    .iter()
                    .map(|w| (w * 1e4).round() / 1e4)
                    .collect::<Vec<_>>(),
            );
        }
    }

    // local exactness: once the leading component clears the scaled gap, the
    // quartic smoother returns the plain max and a pure action
    let zang = SmoothMaxFamily::new(GeneratorKind::Zang, 4)?;
    let theta = zang.theta_sloc().unwrap();
    println!("\nzang local exactness (theta = {theta}):");
    for gap in [0.3, theta, 1.5] {
        let x = [gap, 0.0, -0.2, -0.1];
        let exact = zang.sloc_holds_at(1.0, &x)?;
        let g = zang.grad_scaled(1.0, &x)?;
        println!(
            "  gap {gap:<7} holds = {exact:<5}  H - max = {:+.3e}  control = {:?}",
            zang.eval_scaled(1.0, &x) - gap,
            g.weights()
        );
    }

    // the eps = 0 object is set-valued; query the active set explicitly
    println!("\nargmax active sets at tolerance 1e-9:");
    for x in [[3.0, 1.0, 2.0], [1.0, 1.0, 0.0]] {
        println!("  {x:?} -> {:?}", subdiff_max(&x, 1e-9));
    }

    // entropy reward of a few distributions
    let uniform = relaxed_hjb::smoothmax::SimplexVector::uniform(4);
    let pure = relaxed_hjb::smoothmax::SimplexVector::unit(4, 0);
    println!(
        "\nentropy reward: uniform {:.4}, pure action {:.4}",
        rho_entropy(&uniform),
        rho_entropy(&pure)
    );
    Ok(())
}
