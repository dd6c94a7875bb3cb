//! Prints minimal flag counts per (t, r) with certificate status and timing.
//!
//! Usage: cargo run --release --example gadget_table -- <t> <r_max> [r_min] [m_min]

use std::time::Instant;

use flagprep::gadget::{discover_gadget_with_stats, GadgetError, SearchBudget};

fn main() {
    let args: Vec<usize> = std::env::args().skip(1).map(|a| a.parse().expect("integer")).collect();
    let (t, r_max) = (args.first().copied().unwrap_or(2), args.get(1).copied().unwrap_or(13));
    let r_min = args.get(2).copied().unwrap_or(1);
    for r in r_min..=r_max {
        let start = Instant::now();
        let mut total_nodes = 0;
        for m in args.get(3).copied().unwrap_or(0)..=16 {
            let (res, stats) = discover_gadget_with_stats(t, r, m, SearchBudget::unlimited());
            total_nodes += stats.nodes;
            match res {
                Ok(g) => {
                    println!(
                        "t={t} r={r}: {} flags, {} CX, {} nodes, {:.2?}",
                        g.m,
                        g.cx_count(),
                        total_nodes,
                        start.elapsed()
                    );
                    break;
                }
                Err(GadgetError::SearchExhausted { .. }) => {
                    eprintln!("  t={t} r={r} m={m}: exhausted ({} nodes, {:.2?})", stats.nodes, start.elapsed())
                }
                Err(e) => panic!("{e}"),
            }
        }
    }
}
