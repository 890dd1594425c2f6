//! Parses handler source and prints it back, then shows a rejected construct.

use constraintminer::source::{parse_unit, print_unit};

fn main() {
    let src = r#"
class Checks {
    void run(Order o) {
        for (int i = 0; i < o.getLines().size(); i++) {
            if (o.getLines().get(i).getQty() <= 0) { addError("qty"); }
        }
    }
}"#;
    let unit = parse_unit(src).expect("inside the subset");
    print!("{}", print_unit(&unit));
    assert_eq!(parse_unit(&print_unit(&unit)).unwrap(), unit);

    match parse_unit("class C { void f() { while (true) {} } }") {
        Err(e) => println!("rejected: {}", e),
        Ok(_) => unreachable!(),
    }
}
