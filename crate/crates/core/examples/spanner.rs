//! Barycentric spanners of action grids and the coefficient property they guarantee.
//!
//! Run with `cargo run --example spanner`.

use cfbandit::geometry::{barycentric_spanner, coefficients_in_basis, max_spanner_coefficient};

fn main() -> cfbandit::Result<()> {
    let corners = vec![
        vec![1.0, 1.0],
        vec![1.0, -1.0],
        vec![-1.0, 1.0],
        vec![-1.0, -1.0],
    ];
    let sp = barycentric_spanner(&corners)?;
    println!("corners: spanner {:?}, |det| = {}", sp.indices, sp.abs_det);

    let circle: Vec<Vec<f64>> = (0..16)
        .map(|i| {
            let th = i as f64 * std::f64::consts::PI / 8.0;
            vec![th.cos(), th.sin(), 0.5]
        })
        .collect();
    let sp = barycentric_spanner(&circle)?;
    println!(
        "lifted circle: spanner {:?}, |det| = {:.4}",
        sp.indices, sp.abs_det
    );
    println!(
        "largest coefficient: {:.6}",
        max_spanner_coefficient(&circle, &sp)?
    );
    for a in [3, 7, 12] {
        let c = coefficients_in_basis(&circle[a], &sp.vectors)?;
        println!(
            "  action {a} = {:?} in spanner coordinates",
            c.iter()
                .map(|v| (v * 1e4).round() / 1e4)
                .collect::<Vec<_>>()
        );
    }

    let flat = vec![vec![1.0, 2.0], vec![2.0, 4.0]];
    match barycentric_spanner(&flat) {
        Ok(_) => println!("unexpected spanner"),
        Err(e) => println!("collinear grid rejected: {e}"),
    }
    Ok(())
}
