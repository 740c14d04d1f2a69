//! Random couplings almost never hide modes from the bath.
//!
//! `cargo run --release --example typicality [N] [samples]`

use oscbath::cli::typicality;

fn main() -> oscbath::Result<()> {
    let mut args = std::env::args().skip(1);
    let n: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(4);
    let samples: usize = args.next().and_then(|a| a.parse().ok()).unwrap_or(1000);
    for site in 1..=n {
        let r = typicality(n, site, samples, 2024, 0.1)?;
        println!(
            "site {site}: {} / {} degenerate, smallest normalized |det| {:.3e}",
            r.degenerate, r.samples, r.min_normalized_det
        );
    }
    let r = typicality(n, 1, 1, 0, 0.1)?;
    for (label, flagged) in &r.structured {
        println!("{label:<28} {}", if *flagged { "degenerate" } else { "not flagged" });
    }
    Ok(())
}
