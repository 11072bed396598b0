//! One call of the optimistic allocation routine on a small grid, with its
//! potential trace and an independent check of both allocation constraints.
//!
//! Run with `cargo run --example falcon_subroutine`.

use cfbandit::falcon::{
    iteration_cap, optimistic_subroutine, potential_phi, verify_allocation, ActionGeometry,
    RescaleRule, SparseActionDistribution, StepRule, SubroutineOptions,
};
use cfbandit::geometry::action_maximize;

fn main() -> cfbandit::Result<()> {
    // The standard basis is a spanner; the all-ones corners sit far outside its uniform ellipsoid.
    let grid = vec![
        vec![1.0, 0.0, 0.0, 0.0],
        vec![0.0, 1.0, 0.0, 0.0],
        vec![0.0, 0.0, 1.0, 0.0],
        vec![0.0, 0.0, 0.0, 1.0],
        vec![1.0, 1.0, 1.0, 1.0],
        vec![1.0, -1.0, 1.0, -1.0],
        vec![1.0, 1.0, -1.0, 0.0],
    ];
    let h = vec![0.50, 0.49, 0.50, 0.48, 0.50, 0.47, 0.49];
    let beta = 0.05;
    let geom = ActionGeometry::new(grid.clone())?;
    let a_hat = action_maximize(&h);
    println!("spanner {:?}, greedy action {a_hat}", geom.spanner.indices);

    let q0 = SparseActionDistribution::from_atoms(geom.spanner.indices.iter().map(|&a| (a, 0.25)));
    println!(
        "initial potential {:.4}",
        potential_phi(&q0, &h, a_hat, beta, &geom)?
    );

    let (p, report) = optimistic_subroutine(&geom, a_hat, &h, beta, SubroutineOptions::default())?;
    println!(
        "{} descent steps (cap {}), potential {:.4} -> {:.4}",
        report.descent_steps,
        report.cap,
        report.phi_trace[0],
        report.phi_trace.last().copied().unwrap_or(f64::NAN)
    );
    for (a, w) in p.atoms() {
        println!("  action {a}: {w:.4}");
    }
    let check = verify_allocation(&p, &h, a_hat, beta, geom.dim(), &grid);
    println!(
        "constraints hold: {} (worst slack {:.2e})",
        check.pass, check.worst_slack
    );
    assert_eq!(report.cap, iteration_cap(beta, 4));

    let printed = SubroutineOptions {
        rescale: RescaleRule::AsPrinted,
        step: StepRule::AsPrinted,
    };
    match optimistic_subroutine(&geom, a_hat, &h, beta, printed) {
        Ok((_, r)) => println!("printed update rules: {} descent steps", r.descent_steps),
        Err(e) => println!("printed update rules: {e}"),
    }
    Ok(())
}
