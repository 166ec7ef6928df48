//! A small network embedded into a wider one (and, for linear activation, a
//! deeper one) computes exactly the same function.
//!
//! cargo run --example embedding

use lmbo::mlp::{count_params, embed, forward, init_params, Activation, MlpArchitecture};

fn main() -> lmbo::Result<()> {
    let probes = [[0.3, -1.2, 2.0], [-0.7, 0.1, 0.5], [1.5, 1.5, -2.5]];

    let small = MlpArchitecture::new(3, vec![4, 3], Activation::Sigmoid, 1)?;
    let wide = MlpArchitecture::new(3, vec![9, 6], Activation::Sigmoid, 1)?;
    let p = init_params(&small, 5);
    let q = embed(&small, &p, &wide)?;
    println!("{small} ({} params) -> {wide} ({} params)", count_params(&small), count_params(&wide));
    for x in &probes {
        println!("  f({x:?}) = {:.15} | {:.15}", forward(&small, &p, x)?[0], forward(&wide, &q, x)?[0]);
    }

    let lin = MlpArchitecture::new(3, vec![2], Activation::Linear, 1)?;
    let deep = MlpArchitecture::new(3, vec![4, 4, 4], Activation::Linear, 1)?;
    let p = init_params(&lin, 9);
    let q = embed(&lin, &p, &deep)?;
    println!("\n{lin} -> {deep}");
    for x in &probes {
        println!("  f({x:?}) = {:.15} | {:.15}", forward(&lin, &p, x)?[0], forward(&deep, &q, x)?[0]);
    }

    // Depth growth is only exact without a nonlinearity.
    let tanh = MlpArchitecture::new(3, vec![2], Activation::Tanh, 1)?;
    let tanh_deep = MlpArchitecture::new(3, vec![2, 2], Activation::Tanh, 1)?;
    if let Err(e) = embed(&tanh, &init_params(&tanh, 1), &tanh_deep) {
        println!("\n{tanh} -> {tanh_deep}: {e}");
    }
    Ok(())
}
