// The comparison table for n = 7, 8, 9, as markdown and CSV.

use cyclenc::analysis::{comparison_table, to_csv, to_markdown};
use cyclenc::{Protocol, RunOptions};

fn main() {
    let rows = comparison_table(&[7, 8, 9], &Protocol::ALL, RunOptions::default()).unwrap();
    print!("{}", to_markdown(&rows));
    println!();
    print!("{}", to_csv(&rows));
}
