//! Exact and sampled Shapley values of a small four-player game.
//!
//! ```text
//! cargo run --example shapley_games
//! ```

use std::convert::Infallible;

use coalshap::shapley::{exact_shapley, mc_shapley, Coalition, CoalitionTable};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    // A glove-style game: players 0 and 1 are only useful together, 2 adds a
    // flat amount and 3 is a dummy.
    let value = |c: Coalition| -> Result<f64, Infallible> {
        let pair = if c.contains(0) && c.contains(1) { 1.0 } else { 0.0 };
        let flat = if c.contains(2) { 0.3 } else { 0.0 };
        Ok(pair + flat)
    };

    let exact = exact_shapley(value, 4)?;
    println!("exact      {:?}", exact);

    let table = CoalitionTable::evaluate(4, value)?;
    println!("v(N) - v(0) = {:.3}, sum phi = {:.3}", table.grand() - table.empty(), exact.iter().sum::<f64>());

    for permutations in [100, 1_000, 10_000] {
        let est = mc_shapley(value, 4, permutations, 42)?;
        let pretty: Vec<String> = est
            .values
            .iter()
            .zip(&est.stderr)
            .map(|(v, se)| format!("{v:.3}±{se:.3}"))
            .collect();
        println!("mc {permutations:>6}  [{}]  ({} coalitions)", pretty.join(", "), est.evaluations);
    }
    Ok(())
}
