//! vec/Kronecker identities and projection onto a matrix model space.
//!
//! cargo run --example matrix_algebra

use covsel::{kron, project_to_model_space, projector, pseudo_inverse, vec, Mat};
use nalgebra::DVector;

fn main() -> covsel::Result<()> {
    let a = Mat::from_row_slice(2, 2, &[1.0, 2.0, 3.0, 4.0]);
    let b = Mat::from_row_slice(2, 3, &[0.5, -1.0, 2.0, 1.5, 0.0, -0.5]);
    let c = Mat::from_row_slice(3, 2, &[1.0, 0.0, -1.0, 2.0, 0.5, 1.0]);

    println!("vec(A) = {:?}", vec(&a));
    let lhs = DVector::from_vec(vec(&(&a * &b * &c)));
    let rhs = kron(&c.transpose(), &a) * DVector::from_vec(vec(&b));
    println!("‖vec(ABC) − (Cᵀ⊗A)vec(B)‖ = {:.2e}", (lhs - rhs).norm());

    // Two identical columns: GᵀG is singular, the projector is still unique.
    let g = Mat::from_row_slice(4, 2, &[1.0, 1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0]);
    let gram = g.transpose() * &g;
    println!("(GᵀG)⁺ = {}", pseudo_inverse(&gram, 1e-12)?);
    let proj = projector(&g)?;
    println!("rank Π = {}, Π = {}", proj.rank(), proj.matrix().as_mat());

    let s = Mat::from_row_slice(
        4,
        4,
        &[
            2.0, 0.3, 0.1, 0.0, //
            0.3, 1.0, 0.2, 0.1, //
            0.1, 0.2, 1.5, 0.4, //
            0.0, 0.1, 0.4, 0.8,
        ],
    );
    let best = project_to_model_space(&s, &proj)?;
    println!("closest element of S(G) to S: {}", best.as_mat());
    Ok(())
}
