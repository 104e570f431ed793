// Growth functions, their iterates, and how `f` shapes a strong run.

use regularity::engine::{f_iterate, strong_decompose_cut, GrowthFunction, SearchMode};
use regularity::Matrix;

pub fn run_example() -> regularity::Result<()> {
    let fs = [
        GrowthFunction::constant(1),
        GrowthFunction::constant(3),
        GrowthFunction::exponential(2)?,
        GrowthFunction::scaled_exponential(4, 16)?,
    ];
    for f in fs {
        let iters: Vec<String> = (0..5).map(|i| f_iterate(f, i).to_string()).collect();
        println!("{:>15}: {}", f.to_string(), iters.join(", "));
    }
    let a = Matrix::from_rows(&[
        [1.0, 1.0, 0.0, 0.0, 1.0],
        [1.0, 0.0, 1.0, 0.0, 0.0],
        [0.0, 1.0, 1.0, 1.0, 0.0],
        [0.0, 0.0, 1.0, 0.0, 1.0],
        [1.0, 0.0, 0.0, 1.0, 1.0],
    ])?;
    for f in &fs[..3] {
        let r = strong_decompose_cut(&a, 0.3, *f, SearchMode::Exact, 0)?;
        let added: Vec<usize> = r.trace.rounds.iter().map(|x| x.atoms_added).collect();
        println!(
            "{:>15}: atoms per round {added:?}, cutrank {}",
            f.to_string(),
            r.k_witness
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
