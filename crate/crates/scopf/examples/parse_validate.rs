//! Load a case file, list what the validator finds, and show that
//! serialization round-trips the original bytes.
//!
//!     cargo run -p scopf --example parse_validate

use scopf::case::{parse_case, parse_case_file, serialize_case, CaseError};

fn main() {
    let case = parse_case(scopf::cases::CASE14).expect("bundled case is valid");
    println!(
        "case14: {} buses, {} branches, {} generators, {} contingencies, base {} MVA",
        case.buses.len(),
        case.branches.len(),
        case.generators.len(),
        case.contingencies.len(),
        case.base_mva
    );
    println!("total load {:.1} MW", case.total_load() * case.base_mva);
    for id in case.islanding_contingency_ids() {
        println!("contingency {id} would split the network");
    }

    // Round trip: the parsed case keeps the original file data, so writing
    // it back is byte-identical.
    let out = serialize_case(&case);
    assert_eq!(out, scopf::cases::CASE14);
    println!("serialize(parse(file)) == file: {} bytes", out.len());

    // A broken file produces the full violation list, not just the first
    // problem.
    let broken = scopf::cases::CASE14
        .replace("\"from\": \"1\"", "\"from\": \"99\"")
        .replace("\"pmax_mw\": 140.0", "\"pmax_mw\": -140.0");
    match parse_case_file(&broken).map(|f| f.into_case()) {
        Err(CaseError::Parse(msg)) => println!("parse error: {msg}"),
        Ok(Err(CaseError::Invalid(violations))) => {
            println!("{} violations in the broken copy:", violations.len());
            for v in violations {
                println!("  {v}");
            }
        }
        other => panic!("expected violations, got {other:?}"),
    }
}
