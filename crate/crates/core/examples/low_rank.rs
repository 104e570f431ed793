// Weak and strong low-rank decompositions of a noisy rank-2 matrix.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regularity::engine::{strong_decompose_rank, weak_decompose_rank, GrowthFunction};
use regularity::matcore::{f_top_k_norm, frobenius_norm, DEFAULT_TOL};
use regularity::Matrix;

pub fn run_example() -> regularity::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let u: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let v: Vec<f64> = (0..10).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let mut a = Matrix::outer(&u, &v)?.scaled(4.0);
    a.add_outer(
        2.0,
        &v.iter().chain(&u[..2]).copied().collect::<Vec<_>>(),
        &u[..10],
    );
    let noise: Vec<f64> = (0..120).map(|_| rng.gen_range(-0.1..0.1)).collect();
    let a = a.add(&Matrix::new(12, 10, noise)?)?;
    let fro = frobenius_norm(&a);

    let eps = 0.2;
    let weak = weak_decompose_rank(&a, eps, 1)?;
    let top = f_top_k_norm(&weak.residual(&a), 1, DEFAULT_TOL, 1)?;
    println!(
        "weak:   rank {} in {} rounds, top singular value of residual {top:.4} (bound {:.4})",
        weak.k_witness,
        weak.rounds(),
        eps * fro
    );

    let f = GrowthFunction::exponential(2)?;
    let strong = strong_decompose_rank(&a, eps, f, 1)?;
    let last = strong.trace.rounds.last().map_or(0, |r| r.rank_after);
    let k = match f.eval(regularity::Bound::Finite(last as u64)) {
        regularity::Bound::Finite(k) => k as usize,
        regularity::Bound::Saturated => usize::MAX,
    };
    let fk = f_top_k_norm(&strong.residual(&a), k.min(10), DEFAULT_TOL, 1)?;
    println!(
        "strong: rank {} in {} rounds, residual F_{k} norm {fk:.4} (bound {:.4})",
        strong.k_witness,
        strong.rounds(),
        eps * fro
    );
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
