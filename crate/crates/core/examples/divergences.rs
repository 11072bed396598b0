//! The four counterfactual action divergences and the link-curvature constant
//! for generalized linear models.
//!
//! Run with `cargo run --example divergences`.

use cfbandit::geometry::{
    divergence_finite, divergence_glm, divergence_hetero, divergence_linear, kappa, kappa_class,
};
use cfbandit::linalg::Gram;
use cfbandit::model::Link;

fn main() -> cfbandit::Result<()> {
    println!(
        "finite: unseen {}, seen twice {}",
        divergence_finite(0),
        divergence_finite(2)
    );

    let mut gram = Gram::new(2);
    println!(
        "linear, empty history: {}",
        divergence_linear(&[1.0, 0.0], &gram)
    );
    gram.add(&[1.0, 0.0], 1.0);
    gram.add(&[0.0, 1.0], 1.0);
    gram.add(&[1.0, 1.0], 1.0);
    println!(
        "linear after three actions: {:.4}",
        divergence_linear(&[1.0, 1.0], &gram)
    );

    let features = vec![vec![1.0, 0.0], vec![0.0, 1.0], vec![1.0, 1.0]];
    let k_star = kappa(Link::Logistic, &[0.5, -0.5], &features)?;
    println!("logistic kappa from f*: {k_star:.4}");
    println!(
        "glm divergence: {:.4}",
        divergence_glm(&[1.0, 1.0], &gram, k_star)
    );

    let members: Vec<&[f64]> = vec![&[0.5, -0.5], &[3.0, 2.0]];
    let k_class = kappa_class(Link::Logistic, &members, &features)?;
    println!("logistic kappa over the class: {k_class:.4}");

    let basis = vec![vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]];
    let mut sub = Gram::new(2);
    sub.add(&[1.0, 0.0], 1.0);
    sub.add(&[0.0, 1.0], 1.0);
    println!(
        "heterogeneous, in-span action: {:.4}",
        divergence_hetero(&[0.5, 0.5, 0.0], &sub, 1.0, &basis)?
    );
    match divergence_hetero(&[0.0, 0.0, 1.0], &sub, 1.0, &basis) {
        Ok(v) => println!("unexpected value {v}"),
        Err(e) => println!("out-of-span action rejected: {e}"),
    }
    Ok(())
}
