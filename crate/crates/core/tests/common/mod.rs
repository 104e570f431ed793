#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use regularity::{Graph, IndexSet, Matrix};

/// Seeded test matrix: sides in `lo..=hi`; even seeds give ±1 entries, odd
/// seeds uniform entries in [-1, 1).
pub fn random_matrix(seed: u64, lo: usize, hi: usize) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = rng.gen_range(lo..=hi);
    let n = rng.gen_range(lo..=hi);
    filled(&mut rng, m, n, seed.is_multiple_of(2))
}

pub fn square_matrix(seed: u64, n: usize) -> Matrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    filled(&mut rng, n, n, seed.is_multiple_of(2))
}

fn filled(rng: &mut ChaCha8Rng, m: usize, n: usize, signs: bool) -> Matrix {
    let data = (0..m * n)
        .map(|_| {
            if signs {
                if rng.gen_bool(0.5) {
                    1.0
                } else {
                    -1.0
                }
            } else {
                rng.gen_range(-1.0..1.0)
            }
        })
        .collect();
    Matrix::new(m, n, data).unwrap()
}

/// `G(n, p)` with the density itself drawn from the seed.
pub fn random_graph(seed: u64, n: usize) -> Graph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xabcd);
    let p = rng.gen_range(0.15..0.85);
    Graph::gnp(n, p, seed)
}

/// Two disjoint random node sets with sides in `1..=max_side`.
pub fn disjoint_sets(rng: &mut ChaCha8Rng, n: usize, max_side: usize) -> (IndexSet, IndexSet) {
    let mut nodes: Vec<usize> = (0..n).collect();
    for i in (1..n).rev() {
        nodes.swap(i, rng.gen_range(0..=i));
    }
    let a = rng.gen_range(1..=max_side.min(n - 1));
    let b = rng.gen_range(1..=max_side.min(n - a));
    (
        IndexSet::new(nodes[..a].to_vec()),
        IndexSet::new(nodes[a..a + b].to_vec()),
    )
}
