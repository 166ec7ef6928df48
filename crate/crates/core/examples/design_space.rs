//! Builds the hierarchical MLP architecture space, draws a Latin-hypercube
//! DoE and shows how inactive slots are imputed and encoded.
//!
//! cargo run --example design_space

use lmbo::space::presets::mlp_grid_space;
use lmbo::space::{DesignSpace, Value, VarKind, VariableSpec};

fn main() -> lmbo::Result<()> {
    let space = mlp_grid_space();
    println!("variables:");
    for v in space.variables() {
        println!("  {:<3} {:?} {:?}", v.name, v.role, v.kind);
    }
    println!("cardinality: {:?}", space.cardinality());
    println!("encoded width: {}", space.encoded_dim());

    println!("\nDoE of 6 points (seed 3):");
    for p in space.sample_doe(6, 3) {
        let active: Vec<bool> = (0..space.len()).map(|i| p.is_active(i)).collect();
        println!("  {}  active={active:?}", space.point_to_json(&p));
        println!("    w = {:.3?}", space.encode(&p));
    }

    // A two-layer point: N3 is inactive, so any value given for it is
    // replaced by the canonical first level.
    let p = space.point(vec![Value::Num(2.0), Value::Num(35.0), Value::Num(60.0), Value::Num(75.0), Value::Cat(1)])?;
    println!("\nimputed two-layer point: {}", space.point_to_json(&p));

    // Values off the declared grid are rejected.
    match space.point(vec![Value::Num(2.0), Value::Num(33.0), Value::Num(60.0), Value::Num(10.0), Value::Cat(0)]) {
        Ok(_) => println!("unexpected: 33 accepted"),
        Err(e) => println!("off-grid width: {e}"),
    }

    let small = DesignSpace::new(vec![
        VariableSpec::neutral("N1", VarKind::ordinal_range(10.0, 30.0, 10.0)),
        VariableSpec::neutral("F", VarKind::categorical(["tanh", "relu"])),
    ])?;
    println!("\nall {} points of a small space:", small.cardinality().unwrap());
    for p in small.enumerate()? {
        println!("  {}", small.point_to_json(&p));
    }
    Ok(())
}
