use rand::seq::SliceRandom;

use crate::domain::{Dataset, Standardization};
use crate::error::{Error, Result};
use crate::rng::rng_for;

/// Seeded shuffle then split. The train side receives `floor(fraction * ν)`
/// rows; both sides are re-standardized with statistics from the train rows.
pub fn train_test_split(d: &Dataset, fraction: f64, seed: u64) -> Result<(Dataset, Dataset)> {
    if !(fraction > 0.0 && fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "split fraction must be in (0, 1), got {fraction}"
        )));
    }
    let nu = d.n_rows();
    let n_train = (fraction * nu as f64).floor() as usize;
    if n_train == 0 || n_train == nu {
        return Err(Error::InvalidConfig(format!(
            "split of {nu} rows at {fraction} leaves one side empty"
        )));
    }
    let mut order: Vec<usize> = (0..nu).collect();
    order.shuffle(&mut rng_for(seed, "split", 0));
    let train = d.select_rows(&order[..n_train]);
    let test = d.select_rows(&order[n_train..]);
    let mut constant = Vec::new();
    let stats: Vec<Standardization> = (0..d.n_features())
        .map(|j| {
            let mut s = Standardization::fit(&train.raw_features().column(j));
            if !(s.std > 0.0) {
                // unit scale keeps the column usable on tiny splits
                s.std = 1.0;
                constant.push(d.feature_names()[j].clone());
            }
            s
        })
        .collect();
    let mut train = train.restandardize(stats.clone())?;
    let mut test = test.restandardize(stats)?;
    for name in constant {
        let w = format!("column {name:?} is constant on the train split; unit scale used");
        train.metadata_mut().warnings.push(w.clone());
        test.metadata_mut().warnings.push(w);
    }
    Ok((train, test))
}
