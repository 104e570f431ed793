// Equal-size parts plus a small exceptional set.

use regularity::engine::SearchMode;
use regularity::graphreg::verify_exceptional;
use regularity::Graph;

pub fn run_example() -> regularity::Result<()> {
    let g = Graph::complete_bipartite(7, 7);
    let (p, report) = verify_exceptional(&g, 0.6, SearchMode::Exact, 0)?;
    for (i, part) in p.parts().iter().enumerate() {
        let tag = if Some(i) == p.exceptional() {
            " (exceptional)"
        } else {
            ""
        };
        println!("V{i}{tag} = {:?}", part.as_slice());
    }
    for c in &report.checks {
        println!(
            "{} {}: {} vs {:?}",
            if c.passed { "ok  " } else { "FAIL" },
            c.name,
            c.measured,
            c.bound
        );
    }
    Ok(())
}

#[allow(dead_code)]
fn main() {
    run_example().unwrap();
}
