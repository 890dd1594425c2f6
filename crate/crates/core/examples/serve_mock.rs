//! Starts a mock endpoint and sends it a few bodies.

use constraintminer::mock::{MockServer, Scenario};
use constraintminer::probe::{HttpClient, ProbeClient};
use serde_json::json;

fn main() {
    let scenario = Scenario::load(std::path::Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/benchmark/probe/payments/scenario.json"))).unwrap();
    let server = MockServer::start(scenario, "127.0.0.1:0".parse().unwrap()).unwrap();
    println!("serving {}", server.url());

    let client = HttpClient::new(None);
    let bodies = [
        json!({"amount": {"value": 10, "currency": "EUR"}}),
        json!({"amount": {"value": 10, "currency": "EUR"}, "card": {"number": "4111"}}),
        json!({"amount": {"value": 10, "currency": "EUR"}, "card": {"number": "4111"}, "paymentMethod": {"type": "iDEAL"}}),
    ];
    for b in &bodies {
        println!("{} -> {}", b, client.post_json(&server.url(), b).unwrap());
    }
    server.shutdown().unwrap();
}
