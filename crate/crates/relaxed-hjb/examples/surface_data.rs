//! Emit the generator-comparison surfaces as plot-ready CSV: the smoothing
//! excess `H - max` on the zero-sum slice and the induced exploration reward
//! on the simplex, for the entropy and quartic generators side by side.
//!
//! ```sh
//! cargo run --example surface_data > surfaces.csv
//! ```

use relaxed_hjb::cli::emit_surface;
use relaxed_hjb::smoothmax::{GeneratorKind, SmoothMaxFamily};

fn main() -> relaxed_hjb::Result<()> {
    println!("kind,x1,x2,x3,h_excess,y1,y2,y3,rho");
    for kind in [GeneratorKind::Entropy, GeneratorKind::Zang] {
        let family = SmoothMaxFamily::new(kind, 3)?;
        for row in emit_surface(&family, 3.0, 61)? {
            println!(
                "{},{},{},{},{},{},{},{},{}",
                kind.name(),
                row.x[0],
                row.x[1],
                row.x[2],
                row.h_excess,
                row.y[0],
                row.y[1],
                row.y[2],
                row.rho
            );
        }
    }
    Ok(())
}
