// Greedy cut decomposition of a graph adjacency, with its JSON trace.

use regularity::cutalg::cut_norm_exact;
use regularity::engine::{weak_decompose_cut, SearchMode};
use regularity::matcore::frobenius_norm;
use regularity::Graph;

pub fn run_example() -> regularity::Result<()> {
    let g = Graph::planted_partition(12, 3, 0.9, 0.1, 5);
    let a = g.adjacency();
    let eps = 0.4;
    let r = weak_decompose_cut(a, eps, SearchMode::Exact, 5)?;
    for atom in &r.cut_decomposition().expect("cut atoms").atoms {
        println!(
            "{:+.3} · 1[{:?}] 1[{:?}]ᵀ",
            atom.coeff,
            atom.rows.as_slice(),
            atom.cols.as_slice()
        );
    }
    let left = cut_norm_exact(&r.residual(a))?.value;
    println!(
        "residual ■[1] = {left:.4} <= {:.4}",
        eps * frobenius_norm(a)
    );
    println!("{}", r.trace.to_json());
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
