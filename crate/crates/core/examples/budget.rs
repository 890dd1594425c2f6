//! Request budgets for probing endpoints of various widths.

use constraintminer::probe::estimate_budget;

fn main() {
    println!("{:>7} {:>9}", "params", "requests");
    for n in [3, 4, 7, 22, 51, 103, 192, 371, 378] {
        println!("{:>7} {:>9}", n, estimate_budget(n, 22, 2));
    }
}
