//! Synthetic inputs for the criterion benchmarks.

use std::fmt::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A trade CSV with `rows` rows over `countries` countries, `items` item
/// codes and a single year.
pub fn trade_csv(rows: usize, countries: usize, items: usize, seed: u64) -> String {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = String::from("year,reporter,partner,item,quantity_tonnes\n");
    for _ in 0..rows {
        let from = rng.random_range(0..countries);
        let mut to = rng.random_range(0..countries - 1);
        if to >= from {
            to += 1;
        }
        let item = rng.random_range(0..items);
        let qty: f64 = rng.random_range(0.1..10_000.0);
        writeln!(out, "2010,C{from:03},C{to:03},{item},{qty:.3}").unwrap();
    }
    out
}

/// Factor table covering every item code of [`trade_csv`].
pub fn factors_csv(items: usize) -> String {
    let mut out = String::from("item,kcal_per_100g,category\n");
    for i in 0..items {
        let category = match i % 10 {
            0 => "secondary",
            1 => "animal",
            _ => "primary",
        };
        writeln!(out, "{i},{},{category}", 50 + (i * 37) % 400).unwrap();
    }
    out
}
