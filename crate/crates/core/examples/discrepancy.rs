// Pair discrepancy, then the summed-discrepancy and irregular-pair checks
// on a small random graph.

use regularity::engine::SearchMode;
use regularity::graphreg::{
    discrepancy_exact, verify_irregularity, verify_szemeredi_disc, DensityMode,
};
use regularity::{Graph, IndexSet};

pub fn run_example() -> regularity::Result<()> {
    let g = Graph::gnp(10, 0.5, 21);
    let (s, t) = (
        IndexSet::new(vec![0, 1, 2, 3]),
        IndexSet::new(vec![4, 5, 6, 7, 8]),
    );
    println!(
        "disc free  {:.4}",
        discrepancy_exact(&g, &s, &t, DensityMode::Free)?
    );
    println!(
        "disc fixed {:.4}",
        discrepancy_exact(&g, &s, &t, DensityMode::Fixed)?
    );

    for report in [
        verify_szemeredi_disc(&g, 0.5, SearchMode::Exact, 21)?,
        verify_irregularity(&g, 0.7, SearchMode::Exact, 21)?,
    ] {
        println!(
            "eps {}: {} parts, sum disc {:.3}, {} irregular pairs",
            report.epsilon,
            report.partition.num_parts(),
            report.sum_disc,
            report.irregular_pairs.len()
        );
        for c in &report.checks {
            println!(
                "  {} {}: {} vs {:?}",
                if c.passed { "ok  " } else { "FAIL" },
                c.name,
                c.measured,
                c.bound
            );
        }
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
