use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{derive_seed, TrainError};
use crate::text::EncodedUser;

/// Stratified fraction of a training split: within each class a seeded
/// shuffle keeps `ceil(frac · n_c)` users, so every class stays present.
/// The result preserves the input order.
pub fn stratified_fraction(
    users: &[EncodedUser],
    frac: f64,
    seed: u64,
) -> Result<Vec<EncodedUser>, TrainError> {
    if !(frac > 0.0 && frac <= 1.0) {
        return Err(TrainError::Config(format!("train fraction {frac} outside (0, 1]")));
    }
    let mut by_class: BTreeMap<usize, Vec<usize>> = BTreeMap::new();
    for (i, u) in users.iter().enumerate() {
        by_class.entry(u.label_id).or_default().push(i);
    }
    let mut keep = vec![false; users.len()];
    for (class, mut idx) in by_class {
        let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(&[seed, 0xf7, class as u64]));
        idx.shuffle(&mut rng);
        let n = (frac * idx.len() as f64).ceil() as usize;
        for &i in &idx[..n.min(idx.len())] {
            keep[i] = true;
        }
    }
    Ok(users
        .iter()
        .zip(keep)
        .filter(|(_, k)| *k)
        .map(|(u, _)| u.clone())
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::EncodedText;

    fn user(i: usize, label_id: usize) -> EncodedUser {
        let text = EncodedText {
            ids: vec![1],
            chars: vec![1],
            mask: vec![true],
        };
        EncodedUser {
            id: format!("u{i}"),
            max_chars: 1,
            description: text.clone(),
            tweets: vec![text],
            tweet_mask: vec![true],
            label_id,
        }
    }

    #[test]
    fn keeps_each_class_and_order() {
        let users: Vec<EncodedUser> = (0..50).map(|i| user(i, if i < 40 { 0 } else { 1 })).collect();
        let sub = stratified_fraction(&users, 0.2, 3).unwrap();
        assert_eq!(sub.iter().filter(|u| u.label_id == 0).count(), 8);
        assert_eq!(sub.iter().filter(|u| u.label_id == 1).count(), 2);
        let pos: Vec<usize> = sub.iter().map(|u| u.id[1..].parse().unwrap()).collect();
        assert!(pos.windows(2).all(|w| w[0] < w[1]));
        assert_eq!(sub, stratified_fraction(&users, 0.2, 3).unwrap());
        assert_eq!(stratified_fraction(&users, 1.0, 9).unwrap(), users);
        assert!(stratified_fraction(&users, 0.0, 1).is_err());
    }
}
