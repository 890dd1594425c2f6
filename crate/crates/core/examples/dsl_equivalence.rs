//! Parses constraints, decomposes sugar and checks equivalence.

use constraintminer::constraint::{decompose, domain_for, equivalent, parse_dsl, to_dsl};

fn main() {
    let cs = parse_dsl(
        "requires(card, [cvc, expiry])\n\
         present(card) and (not present(cvc) or not present(expiry)) -> invalid\n\
         exactly-one(card, bankAccount)",
    )
    .expect("valid DSL");

    for c in &cs {
        println!("{}", to_dsl(c));
        for part in decompose(c) {
            println!("  part: {}", to_dsl(&part));
        }
    }

    let domain = domain_for(&cs);
    println!("sugar and expansion equivalent: {}", equivalent(&cs[0], &cs[1], &domain).unwrap());
    println!("grounded points: {}", domain.product_size());
}
