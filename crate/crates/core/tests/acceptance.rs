//! Acceptance gate. Runs every criterion, prints one PASS/FAIL line for
//! each, and exits non-zero if any failed.

mod common;

use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::Command;
use std::time::Instant;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use regularity::cutalg::{black_square_norm_exact_with, cut_norm_exact};
use regularity::engine::{
    f_iterate, strong_decompose_cut, strong_decompose_rank, weak_decompose_cut,
    weak_decompose_rank, Bound, GrowthFunction, RegularityResult, SearchMode,
};
use regularity::graphreg::{
    compress, discrepancy_exact, verify_exceptional, verify_irregularity, verify_szemeredi_disc,
    DensityMode,
};
use regularity::matcore::frobenius_norm;
use regularity::oracle::{
    exact_singular_values, exhaustive_compression_error, exhaustive_cut_norms,
    exhaustive_discrepancy, OracleBudget,
};
use regularity::{Graph, IndexSet, Matrix};

use common::{disjoint_sets, random_graph, random_matrix, square_matrix};

const EPSILONS: [f64; 3] = [0.3, 0.5, 0.8];

/// Outcome of one criterion: pass flag and a one-line summary.
type Outcome = (bool, String);

fn matrices(count: u64) -> Vec<Matrix> {
    (0..count).map(|s| random_matrix(1000 + s, 4, 12)).collect()
}

fn exp2() -> GrowthFunction {
    GrowthFunction::exponential(2).unwrap()
}

/// Every engine mode, by name.
fn all_modes(a: &Matrix, eps: f64, seed: u64) -> Vec<(&'static str, RegularityResult)> {
    vec![
        ("weak rank", weak_decompose_rank(a, eps, seed).unwrap()),
        (
            "strong rank",
            strong_decompose_rank(a, eps, exp2(), seed).unwrap(),
        ),
        (
            "weak cut exact",
            weak_decompose_cut(a, eps, SearchMode::Exact, seed).unwrap(),
        ),
        (
            "strong cut exact",
            strong_decompose_cut(a, eps, exp2(), SearchMode::Exact, seed).unwrap(),
        ),
        (
            "weak cut heuristic",
            weak_decompose_cut(a, eps, SearchMode::Heuristic, seed).unwrap(),
        ),
        (
            "strong cut heuristic",
            strong_decompose_cut(a, eps, exp2(), SearchMode::Heuristic, seed).unwrap(),
        ),
    ]
}

fn c1_halting_and_potential() -> Outcome {
    let start = Instant::now();
    let mut runs = 0;
    let mut failures = Vec::new();
    let mut min_slack = f64::INFINITY;
    for (idx, a) in matrices(200).iter().enumerate() {
        let fro2 = frobenius_norm(a).powi(2);
        for eps in EPSILONS {
            for (name, r) in all_modes(a, eps, idx as u64) {
                runs += 1;
                let rounds = r.trace.rounds.len() as f64;
                if rounds >= 1.0 / (eps * eps) {
                    failures.push(format!("{name} #{idx} eps {eps}: {rounds} rounds"));
                }
                for rec in &r.trace.rounds {
                    let drop = rec.potential_before - rec.potential_after;
                    let need = eps * eps * fro2 - 1e-9 * fro2;
                    min_slack = min_slack.min((drop - need) / fro2);
                    if !(drop > need) {
                        failures.push(format!("{name} #{idx} eps {eps}: drop {drop} <= {need}"));
                    }
                }
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 60.0 {
        failures.push(format!("runtime {secs:.1} s >= 60 s"));
    }
    (
        failures.is_empty(),
        format!(
            "{runs} runs, min relative drop slack {min_slack:.3e}, {secs:.1} s{}",
            first(&failures)
        ),
    )
}

fn c2_weak_rank() -> Outcome {
    let mut worst = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    for (idx, a) in matrices(200).iter().enumerate() {
        let fro = frobenius_norm(a);
        for eps in EPSILONS {
            let r = weak_decompose_rank(a, eps, idx as u64).unwrap();
            let top = exact_singular_values(&r.residual(a)).unwrap()[0];
            let margin = top - (eps * fro + 1e-8);
            worst = worst.max(margin);
            if margin > 0.0 {
                failures.push(format!("#{idx} eps {eps}: sigma1 {top} > {}", eps * fro));
            }
        }
    }
    (
        failures.is_empty(),
        format!(
            "600 runs, max sigma1(residual) - (eps|A|_F + 1e-8) = {worst:.3e}{}",
            first(&failures)
        ),
    )
}

fn c3_weak_cut() -> Outcome {
    let budget = OracleBudget {
        max_evaluations: 1 << 24,
        ..OracleBudget::default()
    };
    let mut worst = f64::NEG_INFINITY;
    let mut failures = Vec::new();
    for (idx, a) in matrices(200).iter().enumerate() {
        let fro = frobenius_norm(a);
        for eps in EPSILONS {
            let r = weak_decompose_cut(a, eps, SearchMode::Exact, idx as u64).unwrap();
            let (cut1, _) = exhaustive_cut_norms(&r.residual(a), &budget).unwrap();
            // halting at exact equality is common on ±1 inputs; the two
            // sides then differ only by rounding
            let bound = eps * fro * (1.0 + 1e-12);
            worst = worst.max(cut1 - bound);
            if cut1 > bound {
                failures.push(format!(
                    "#{idx} eps {eps}: residual cut1 {cut1} > {}",
                    eps * fro
                ));
            }
            let cutrank = r.cut_decomposition().unwrap().cutrank_witness();
            if cutrank as f64 >= 1.0 / (eps * eps) {
                failures.push(format!("#{idx} eps {eps}: cutrank {cutrank}"));
            }
        }
    }
    (
        failures.is_empty(),
        format!(
            "600 runs, max cut1(residual) - eps|A|_F (1 + 1e-12) = {worst:.3e}{}",
            first(&failures)
        ),
    )
}

fn c4_strong_specialization() -> Outcome {
    let one = GrowthFunction::constant(1);
    let mut compared = 0;
    let mut failures = Vec::new();
    for (idx, a) in matrices(50).iter().enumerate() {
        let seed = idx as u64;
        for eps in EPSILONS {
            let pairs = [
                (
                    "rank",
                    weak_decompose_rank(a, eps, seed).unwrap(),
                    strong_decompose_rank(a, eps, one, seed).unwrap(),
                ),
                (
                    "cut exact",
                    weak_decompose_cut(a, eps, SearchMode::Exact, seed).unwrap(),
                    strong_decompose_cut(a, eps, one, SearchMode::Exact, seed).unwrap(),
                ),
                (
                    "cut heuristic",
                    weak_decompose_cut(a, eps, SearchMode::Heuristic, seed).unwrap(),
                    strong_decompose_cut(a, eps, one, SearchMode::Heuristic, seed).unwrap(),
                ),
            ];
            for (name, weak, strong) in pairs {
                compared += 1;
                if weak.trace.to_json() != strong.trace.to_json() {
                    failures.push(format!("{name} #{idx} eps {eps}"));
                }
            }
        }
    }
    (
        failures.is_empty(),
        format!("{compared} trace pairs byte-compared{}", first(&failures)),
    )
}

fn c5_strong_rank_recursion() -> Outcome {
    let f = exp2();
    let mut failures = Vec::new();
    let units: Vec<Bound> = (0..4).map(|i| f_iterate(f, i)).collect();
    if units != [0, 1, 3, 11].map(Bound::Finite) {
        failures.push(format!("f_iterate units {units:?}"));
    }
    let mut max_k = 0;
    for (idx, a) in matrices(50).iter().enumerate() {
        for eps in EPSILONS {
            let r = strong_decompose_rank(a, eps, f, idx as u64).unwrap();
            let bound = f_iterate(f, r.rounds() as u64);
            max_k = max_k.max(r.k_witness);
            if !bound.admits(r.k_witness as u64) {
                failures.push(format!("#{idx} eps {eps}: k {} > {bound}", r.k_witness));
            }
        }
    }
    (
        failures.is_empty(),
        format!(
            "f_iterate(2^n, 0..3) = 0,1,3,11; 150 runs, max k_witness {max_k}{}",
            first(&failures)
        ),
    )
}

fn c6_norm_inequalities() -> Outcome {
    let start = Instant::now();
    let tol = 1e-9;
    let pair_budget = OracleBudget {
        max_evaluations: 3_000_000_000,
        ..OracleBudget::default()
    };
    let mut failures = Vec::new();
    for seed in 0..100u64 {
        let a = square_matrix(5000 + seed, 8);
        let (cut1, classical) = exhaustive_cut_norms(&a, &OracleBudget::default()).unwrap();
        let f1 = exact_singular_values(&a).unwrap()[0];
        let fro = frobenius_norm(&a);
        let fast1 = cut_norm_exact(&a).unwrap().value;
        let sq2 = black_square_norm_exact_with(&a, 2, &pair_budget).unwrap();
        let sq_full = black_square_norm_exact_with(&a, 64, &OracleBudget::default()).unwrap();
        let checks = [
            ("classical <= sqrt(mn) cut1", classical, 8.0 * cut1),
            ("cut1 <= F[1]", cut1, f1),
            ("F[1] <= F", f1, fro),
            ("cut[1] <= cut[2]", fast1, sq2),
            ("cut[2] <= cut[64]", sq2, sq_full),
            ("cut[64] <= F", sq_full, fro),
        ];
        for (name, lhs, rhs) in checks {
            if lhs > rhs + tol {
                failures.push(format!("seed {seed}: {name}: {lhs} > {rhs}"));
            }
        }
        if (fast1 - cut1).abs() > tol {
            failures.push(format!(
                "seed {seed}: cut1 search {fast1} vs exhaustive {cut1}"
            ));
        }
    }
    (
        failures.is_empty(),
        format!(
            "100 matrices 8x8, cut[k] for k = 1, 2, 64, {:.1} s{}",
            start.elapsed().as_secs_f64(),
            first(&failures)
        ),
    )
}

fn c7_compression() -> Outcome {
    let start = Instant::now();
    let n = 10;
    let mut failures = Vec::new();
    let mut worst_ratio = 0.0f64;
    for seed in 0..20u64 {
        let g = random_graph(7000 + seed, n);
        for eps in [0.4, 0.6] {
            let (cg, _) = compress(&g, eps, SearchMode::Exact, seed).unwrap();
            let err = exhaustive_compression_error(&g, &cg).unwrap();
            let bound = eps * (n * n) as f64;
            worst_ratio = worst_ratio.max(err / bound);
            if !(err < bound) {
                failures.push(format!("seed {seed} eps {eps}: error {err} >= {bound}"));
            }
            let parts = cg.partition.num_parts() as f64;
            let size_bound = 4f64.powf((1.0 / (eps * eps)).ceil());
            if parts > size_bound {
                failures.push(format!(
                    "seed {seed} eps {eps}: {parts} parts > {size_bound}"
                ));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    if secs >= 600.0 {
        failures.push(format!("runtime {secs:.1} s"));
    }
    (
        failures.is_empty(),
        format!(
            "40 runs, max |e - e_hat| / (eps n^2) = {worst_ratio:.3}, {secs:.1} s{}",
            first(&failures)
        ),
    )
}

fn graphs12() -> Vec<Graph> {
    (0..10u64).map(|s| random_graph(8000 + s, 12)).collect()
}

fn c8_discrepancy() -> Outcome {
    let eps = 0.4;
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for (idx, g) in graphs12().iter().enumerate() {
        let r = verify_szemeredi_disc(g, eps, SearchMode::Exact, idx as u64).unwrap();
        let bound = eps * 144.0;
        worst = worst.max(r.sum_disc / bound);
        if r.sum_disc > bound || !r.passed() {
            failures.push(format!(
                "graph {idx}: sum disc {} vs {bound}; checks {:?}",
                r.sum_disc, r.checks
            ));
        }
    }
    (
        failures.is_empty(),
        format!(
            "10 graphs n = 12, max sum_disc / (eps n^2) = {worst:.3}{}",
            first(&failures)
        ),
    )
}

fn c9_irregular() -> Outcome {
    let eps = 0.7;
    let mut failures = Vec::new();
    let mut worst = 0.0f64;
    for (idx, g) in graphs12().iter().enumerate() {
        let r = verify_irregularity(g, eps, SearchMode::Exact, idx as u64).unwrap();
        let mass: usize = r
            .per_pair
            .iter()
            .filter(|p| p.irregular)
            .map(|p| p.size_i * p.size_j)
            .sum();
        let bound = eps * 144.0;
        worst = worst.max(mass as f64 / bound);
        if !((mass as f64) < bound) || !r.passed() {
            failures.push(format!("graph {idx}: irregular mass {mass} vs {bound}"));
        }
    }
    (
        failures.is_empty(),
        format!(
            "10 graphs n = 12, max irregular mass / (eps n^2) = {worst:.3}{}",
            first(&failures)
        ),
    )
}

fn c10_exceptional() -> Outcome {
    let eps = 0.6;
    let n = 12;
    let mut failures = Vec::new();
    let mut summary = Vec::new();
    for (idx, g) in graphs12().iter().enumerate() {
        let (p, r) = verify_exceptional(g, eps, SearchMode::Exact, idx as u64).unwrap();
        let parts = p.parts();
        let v0 = parts[0].len();
        let sizes: Vec<usize> = p.regular_parts().iter().map(|&i| parts[i].len()).collect();
        let k = sizes.len() as f64;
        let irregular = r.irregular_pairs.len();
        summary.push(format!("{v0}/{}/{irregular}", sizes.len()));
        if !((v0 as f64) < eps * n as f64) {
            failures.push(format!("graph {idx}: |V0| = {v0}"));
        }
        if sizes.iter().any(|&s| s != sizes[0]) {
            failures.push(format!("graph {idx}: unequal sizes {sizes:?}"));
        }
        if irregular as f64 > eps * k * k {
            failures.push(format!(
                "graph {idx}: {irregular} irregular pairs > {}",
                eps * k * k
            ));
        }
        if !r.passed() {
            failures.push(format!("graph {idx}: report checks {:?}", r.checks));
        }
    }
    (
        failures.is_empty(),
        format!(
            "10 graphs n = 12, |V0|/k/irregular: {}{}",
            summary.join(" "),
            first(&failures)
        ),
    )
}

fn c11_discrepancy_cross_validation() -> Outcome {
    let mut failures = Vec::new();
    let g = Graph::from_edges(4, &[(0, 2)]).unwrap();
    let (a, b) = (IndexSet::from([0, 1]), IndexSet::from([2, 3]));
    let hand = discrepancy_exact(&g, &a, &b, DensityMode::Free).unwrap();
    let oracle_hand = exhaustive_discrepancy(&g, &a, &b).unwrap();
    if (hand - 2.0 / 3.0).abs() > 1e-9 || (oracle_hand - 2.0 / 3.0).abs() > 1e-9 {
        failures.push(format!("single edge: {hand} / {oracle_hand}"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut worst = 0.0f64;
    for seed in 0..200u64 {
        let g = random_graph(9000 + seed, 16);
        let (vi, vj) = disjoint_sets(&mut rng, 16, 8);
        let fast = discrepancy_exact(&g, &vi, &vj, DensityMode::Free).unwrap();
        let slow = exhaustive_discrepancy(&g, &vi, &vj).unwrap();
        worst = worst.max((fast - slow).abs());
        if (fast - slow).abs() > 1e-9 {
            failures.push(format!("block {seed}: {fast} vs {slow}"));
        }
    }
    (
        failures.is_empty(),
        format!(
            "2x2 single edge = {hand:.12}; 200 blocks, max |diff| {worst:.3e}{}",
            first(&failures)
        ),
    )
}

fn run_cli(dir: &Path, args: &[&str]) -> (i32, Vec<u8>) {
    let out = Command::new(env!("CARGO_BIN_EXE_regularity"))
        .current_dir(dir)
        .args(args)
        .output()
        .expect("binary runs");
    let json = std::fs::read(dir.join("out.json")).unwrap_or_default();
    let _ = std::fs::remove_file(dir.join("out.json"));
    (out.status.code().unwrap_or(-1), json)
}

fn c12_determinism() -> Outcome {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("m.txt"), square_matrix(42, 7).to_string()).unwrap();
    let commands: Vec<Vec<&str>> = vec![
        vec![
            "gen", "--kind", "gnp", "--n", "12", "--p", "0.5", "--seed", "3", "--out", "g.txt",
        ],
        vec![
            "gen",
            "--kind",
            "planted-partition",
            "--n",
            "12",
            "--parts",
            "3",
            "--p-in",
            "0.8",
            "--p-out",
            "0.1",
            "--seed",
            "5",
            "--out",
            "h.txt",
        ],
        vec![
            "gen",
            "--kind",
            "complete-bipartite",
            "--a",
            "5",
            "--b",
            "5",
            "--out",
            "k.txt",
        ],
        vec![
            "decompose",
            "--in",
            "g.txt",
            "--atoms",
            "cut",
            "--mode",
            "exact",
            "--epsilon",
            "0.5",
            "--seed",
            "7",
        ],
        vec![
            "decompose",
            "--in",
            "m.txt",
            "--atoms",
            "cut",
            "--mode",
            "heuristic",
            "--epsilon",
            "0.4",
            "--f",
            "exp:2",
            "--seed",
            "7",
        ],
        vec![
            "decompose",
            "--in",
            "m.txt",
            "--atoms",
            "rank",
            "--epsilon",
            "0.3",
            "--f",
            "exp:2",
            "--seed",
            "1",
        ],
        vec![
            "norms",
            "--in",
            "m.txt",
            "--which",
            "frob,fk:2,cut1,classical",
        ],
        vec![
            "norms",
            "--in",
            "m.txt",
            "--which",
            "cut1",
            "--mode",
            "heuristic",
            "--seed",
            "9",
        ],
        vec![
            "verify",
            "--in",
            "g.txt",
            "--theorem",
            "weak-graph",
            "--epsilon",
            "0.5",
            "--seed",
            "2",
        ],
        vec![
            "verify",
            "--in",
            "g.txt",
            "--theorem",
            "disc",
            "--epsilon",
            "0.4",
            "--seed",
            "3",
        ],
        vec![
            "verify",
            "--in",
            "h.txt",
            "--theorem",
            "irregular",
            "--epsilon",
            "0.7",
            "--seed",
            "4",
        ],
        vec![
            "verify",
            "--in",
            "h.txt",
            "--theorem",
            "exceptional",
            "--epsilon",
            "0.6",
            "--seed",
            "5",
        ],
        vec![
            "verify",
            "--in",
            "k.txt",
            "--theorem",
            "weak-graph",
            "--epsilon",
            "0.5",
            "--mode",
            "heuristic",
        ],
    ];
    let mut failures = Vec::new();
    for cmd in &commands {
        let mut base = cmd.clone();
        base.extend(["--json", "out.json"]);
        let mut outputs = Vec::new();
        for threads in [None, None, Some("1"), Some("3")] {
            let mut args = base.clone();
            if let Some(t) = threads {
                args.extend(["--threads", t]);
            }
            outputs.push(run_cli(d, &args));
        }
        let (code, json) = &outputs[0];
        if *code != 0 || json.is_empty() {
            failures.push(format!("`{}` exited {code}", cmd.join(" ")));
        } else if outputs.iter().any(|o| o != &outputs[0]) {
            failures.push(format!("`{}` output differs", cmd.join(" ")));
        }
    }
    (
        failures.is_empty(),
        format!(
            "{} commands x 4 runs (threads default, default, 1, 3){}",
            commands.len(),
            first(&failures)
        ),
    )
}

fn first(failures: &[String]) -> String {
    match failures.first() {
        None => String::new(),
        Some(f) => format!("; {} failure(s), first: {f}", failures.len()),
    }
}

fn main() {
    let criteria: [(&str, fn() -> Outcome); 12] = [
        ("halting and potential drop", c1_halting_and_potential),
        ("weak rank guarantee", c2_weak_rank),
        ("weak cut guarantee", c3_weak_cut),
        ("strong with f = 1 equals weak", c4_strong_specialization),
        ("strong rank recursion bound", c5_strong_rank_recursion),
        ("norm inequalities", c6_norm_inequalities),
        ("compression error and size", c7_compression),
        ("discrepancy sum", c8_discrepancy),
        ("irregular pair mass", c9_irregular),
        ("exceptional set partition", c10_exceptional),
        (
            "discrepancy cross-validation",
            c11_discrepancy_cross_validation,
        ),
        ("CLI determinism", c12_determinism),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let id = format!("C{:02}", i + 1);
        if !filter.is_empty()
            && !filter
                .iter()
                .any(|f| id.contains(f.as_str()) || name.contains(f.as_str()))
        {
            continue;
        }
        let (ok, detail) = catch_unwind(AssertUnwindSafe(run)).unwrap_or_else(|e| {
            (
                false,
                format!(
                    "panicked: {:?}",
                    e.downcast_ref::<String>()
                        .map(String::as_str)
                        .or(e.downcast_ref::<&str>().copied())
                ),
            )
        });
        if !ok {
            failed += 1;
        }
        println!("{} {id} {name}: {detail}", if ok { "PASS" } else { "FAIL" });
    }
    if failed > 0 {
        println!("{failed} criterion(s) failed");
        std::process::exit(1);
    }
}
