// Compress a graph to a weighted partition and compare cut estimates with
// true edge counts.

use regularity::engine::SearchMode;
use regularity::graphreg::{compress, estimate_cut, exact_cut_count};
use regularity::{Graph, IndexSet};

pub fn run_example() -> regularity::Result<()> {
    let g = Graph::planted_partition(12, 2, 0.9, 0.1, 3);
    let (cg, run) = compress(&g, 0.5, SearchMode::Exact, 3)?;
    println!(
        "{} parts from {} cut atoms",
        cg.partition.num_parts(),
        run.k_witness
    );
    for (i, part) in cg.partition.parts().iter().enumerate() {
        println!("  V{i} = {:?}", part.as_slice());
    }
    for (s, t) in [
        (vec![0, 2, 4], vec![1, 3, 5]),
        (vec![0, 1], vec![6, 7, 8]),
        ((0..6).collect(), (6..12).collect()),
    ] {
        let (s, t) = (IndexSet::new(s), IndexSet::new(t));
        println!(
            "e(S,T) = {:>2}  estimate {:.3}",
            exact_cut_count(&g, &s, &t)?,
            estimate_cut(&cg, &s, &t)?
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
