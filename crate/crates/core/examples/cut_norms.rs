// The norm ladder on one small matrix: classical cut, normalized cut,
// black-square norms and the Frobenius norm.

use regularity::cutalg::{
    black_square_norm_exact, classical_cut_norm, cut_norm_exact, cut_norm_heuristic,
};
use regularity::matcore::{f_top_k_norm, frobenius_norm, DEFAULT_TOL};
use regularity::Matrix;

pub fn run_example() -> regularity::Result<()> {
    let a = Matrix::from_rows(&[
        [1.0, -1.0, 0.5, 0.0, 2.0],
        [0.0, 1.0, -1.0, 1.0, 0.0],
        [2.0, 0.0, 1.0, -0.5, 1.0],
        [-1.0, 1.0, 0.0, 1.0, -2.0],
    ])?;
    let cut = cut_norm_exact(&a)?;
    println!("classical cut norm  {:.4}", classical_cut_norm(&a)?);
    println!(
        "cut norm ■[1]       {:.4} on rows {:?} cols {:?}",
        cut.value,
        cut.rows.as_slice(),
        cut.cols.as_slice()
    );
    println!(
        "  heuristic         {:.4}",
        cut_norm_heuristic(&a, 8, 0)?.value
    );
    println!("■[2]                {:.4}", black_square_norm_exact(&a, 2)?);
    println!(
        "F_1 (spectral)      {:.4}",
        f_top_k_norm(&a, 1, DEFAULT_TOL, 0)?
    );
    println!("Frobenius           {:.4}", frobenius_norm(&a));
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
