//! Measures how close greedy growth of `P_50` gets to the degree bound
//! `2M/(n−1)` at `M = 490` and prints the threshold frozen in
//! `experiments::PILOT_GREEDY_RATIO` (the ratio rounded down to two decimals).
//!
//! Run with `cargo run --release -p rankdesign --example pilot_greedy_ratio`.

use rankdesign::experiments::path_gap_dominance;

fn main() -> rankdesign::Result<()> {
    let rows = path_gap_dominance(50, &[490], 200, 2024)?;
    let row = &rows[0];
    println!("m = {}", row.m);
    println!("greedy lambda2 = {:.12}", row.greedy_lambda2);
    println!("ER mean lambda2 = {:.12}", row.er_mean_lambda2);
    println!("degree bound 2m/(n-1) = {:.12}", row.degree_bound);
    println!("ratio = {:.12}", row.ratio());
    println!(
        "frozen threshold = {:.2}",
        (row.ratio() * 100.0).floor() / 100.0
    );
    Ok(())
}
