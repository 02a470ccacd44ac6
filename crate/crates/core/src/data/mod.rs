//! Dataset ingestion, splitting and synthetic generators.

mod csv_io;
mod split;
mod synthetic;

pub use csv_io::{load_csv, write_csv, DatasetSchema};
pub use split::train_test_split;
pub use synthetic::{generate_synthetic, SyntheticKind, SyntheticSpec};

/// Pearson correlation between two equal-length columns.
pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    if saa == 0.0 || sbb == 0.0 {
        return 0.0;
    }
    sab / (saa * sbb).sqrt()
}
