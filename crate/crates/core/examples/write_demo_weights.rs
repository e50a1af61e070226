//! Writes an SRW1 file for the built-in unsharp-mask network.
//!
//! cargo run --release --example write_demo_weights -- demo.srw [amount] [sigma]

use selsr::upscale::SrcnnWeights;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut args = std::env::args().skip(1);
    let path = args
        .next()
        .ok_or("usage: write_demo_weights <out.srw> [amount] [sigma]")?;
    let amount: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(0.6);
    let sigma: f64 = args.next().map(|s| s.parse()).transpose()?.unwrap_or(1.0);
    SrcnnWeights::unsharp(amount, sigma).save(&path)?;
    println!("wrote {path} (amount {amount}, sigma {sigma})");
    Ok(())
}
