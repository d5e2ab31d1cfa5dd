//! Coalitional games and exact Shapley values.

use std::collections::BTreeMap;
use std::ops::Add;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::learner::CoalitionMask;

/// Largest game solved by full enumeration.
pub const MAX_PLAYERS: usize = 20;

/// A game on `n` players with its characteristic function tabulated over
/// all 2^n coalitions. Coalition codes use bit j for player j.
#[derive(Debug, Clone, PartialEq)]
pub struct Game {
    n_players: usize,
    values: Vec<f64>,
}

impl Game {
    pub fn from_fn(n_players: usize, value: impl Fn(u64) -> f64) -> Result<Self> {
        check_size(n_players)?;
        let values = (0..1u64 << n_players).map(value).collect();
        Game::from_values(n_players, values)
    }

    pub fn from_values(n_players: usize, values: Vec<f64>) -> Result<Self> {
        check_size(n_players)?;
        if n_players == 0 {
            return Err(Error::validation("a game needs at least one player"));
        }
        if values.len() != 1usize << n_players {
            return Err(Error::validation(format!(
                "{} players need {} coalition values, got {}",
                n_players,
                1usize << n_players,
                values.len()
            )));
        }
        if let Some(c) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::validation(format!("coalition {c:#b} has a non-finite value")));
        }
        Ok(Game { n_players, values })
    }

    pub fn n_players(&self) -> usize {
        self.n_players
    }

    pub fn value(&self, coalition: u64) -> f64 {
        self.values[coalition as usize]
    }

    pub fn grand_coalition(&self) -> u64 {
        (1u64 << self.n_players) - 1
    }

    /// Same game with players renamed: player `i` becomes `perm[i]`.
    pub fn relabel(&self, perm: &[usize]) -> Result<Game> {
        if perm.len() != self.n_players {
            return Err(Error::validation("permutation length must equal the number of players"));
        }
        let mut values = vec![0.0; self.values.len()];
        for (code, &v) in self.values.iter().enumerate() {
            let mapped = (0..self.n_players)
                .filter(|&i| code >> i & 1 == 1)
                .fold(0usize, |acc, i| acc | 1 << perm[i]);
            values[mapped] = v;
        }
        Game::from_values(self.n_players, values)
    }
}

impl Add for &Game {
    type Output = Result<Game>;

    fn add(self, rhs: &Game) -> Result<Game> {
        if self.n_players != rhs.n_players {
            return Err(Error::validation("cannot add games with different player counts"));
        }
        let values = self.values.iter().zip(&rhs.values).map(|(a, b)| a + b).collect();
        Game::from_values(self.n_players, values)
    }
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_PLAYERS {
        return Err(Error::TooManyPlayers {
            players: n,
            max: MAX_PLAYERS,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ShapleyVector {
    pub phi: Vec<f64>,
}

impl ShapleyVector {
    pub fn sum(&self) -> f64 {
        self.phi.iter().sum()
    }
}

/// Exact Shapley values by enumerating, for every player, all coalitions
/// of the other players:
///
/// phi_i = sum over S not containing i of |S|! (n - |S| - 1)! / n! * (v(S + i) - v(S))
pub fn exact_shapley(game: &Game) -> Result<ShapleyVector> {
    let n = game.n_players;
    check_size(n)?;
    // weight of a coalition of size s: 1 / (n * C(n-1, s))
    let weights: Vec<f64> = (0..n)
        .map(|s| 1.0 / (n as f64 * binomial((n - 1) as u64, s as u64).expect("n <= 20") as f64))
        .collect();
    let phi = (0..n)
        .into_par_iter()
        .map(|i| {
            let bit = 1u64 << i;
            // per-size sums keep the accumulation order fixed and well conditioned
            let mut by_size = vec![KahanSum::default(); n];
            for s in 0..1u64 << n {
                if s & bit != 0 {
                    continue;
                }
                by_size[s.count_ones() as usize].add(game.value(s | bit) - game.value(s));
            }
            let mut total = KahanSum::default();
            for (size, acc) in by_size.iter().enumerate() {
                total.add(weights[size] * acc.value());
            }
            total.value()
        })
        .collect();
    Ok(ShapleyVector { phi })
}

/// Game over feature masks valued by negated loss, kept only for
/// coalitions whose loss is at most `cutoff`:
///
/// v(c) = -L(c) if L(c) <= cutoff, else 0.
///
/// Coalitions missing from `losses` are worth 0.
pub fn filtered_value(losses: &BTreeMap<CoalitionMask, f64>, cutoff: f64) -> Result<Game> {
    let p = losses
        .keys()
        .next()
        .map(CoalitionMask::len)
        .ok_or_else(|| Error::validation("loss map is empty"))?;
    check_size(p)?;
    if losses.keys().any(|m| m.len() != p) {
        return Err(Error::validation("masks in the loss map have different lengths"));
    }
    if !losses.contains_key(&CoalitionMask::full(p)) {
        return Err(Error::validation("loss map must contain the grand coalition"));
    }
    let mut values = vec![0.0; 1 << p];
    for (mask, &loss) in losses {
        let code = mask.indices().iter().fold(0usize, |acc, &j| acc | 1 << j);
        if loss <= cutoff {
            values[code] = -loss;
        }
    }
    Game::from_values(p, values)
}

/// Probability that a uniformly random size-`j` subset of `p` features
/// contains all `t` true features: C(p - t, j - t) / C(p, j), 0 when j < t.
pub fn coverage_probability(p: usize, t: usize, j: usize) -> Result<f64> {
    if t < 1 || t > p {
        return Err(Error::validation(format!("need 1 <= T <= p, got T = {t}, p = {p}")));
    }
    if j < 1 || j > p {
        return Err(Error::validation(format!("need 1 <= j <= p, got j = {j}, p = {p}")));
    }
    if j < t {
        return Ok(0.0);
    }
    let (num, den) = coverage_ratio(p as u64, t as u64, j as u64)
        .ok_or_else(|| Error::validation(format!("binomial overflow for p = {p}")))?;
    Ok(num as f64 / den as f64)
}

/// Coverage probability as a reduced fraction (numerator, denominator).
pub fn coverage_ratio(p: u64, t: u64, j: u64) -> Option<(u128, u128)> {
    if j < t {
        return Some((0, 1));
    }
    let num = binomial(p - t, j - t)?;
    let den = binomial(p, j)?;
    let g = gcd(num, den);
    Some((num / g, den / g))
}

/// Exact binomial coefficient; `None` on u128 overflow.
pub fn binomial(n: u64, k: u64) -> Option<u128> {
    if k > n {
        return Some(0);
    }
    let k = k.min(n - k) as u128;
    let n = n as u128;
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral; reduce first to delay overflow
        let num = n - i;
        let den = i + 1;
        let g = gcd(acc, den);
        let (a, d) = (acc / g, den / g);
        acc = a.checked_mul(num / d)?;
    }
    Some(acc)
}

fn gcd(mut a: u128, mut b: u128) -> u128 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a.max(1)
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut k = KahanSum::default();
        for x in iter {
            k.add(x);
        }
        k
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn null_player_example() {
        // v({1}) = 1, v({2}) = 0, v({1,2}) = 1
        let g = Game::from_values(2, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let phi = exact_shapley(&g).unwrap().phi;
        assert!((phi[0] - 1.0).abs() < 1e-12 && phi[1].abs() < 1e-12);
    }

    #[test]
    fn majority_game() {
        let g = Game::from_fn(3, |c| if c.count_ones() >= 2 { 1.0 } else { 0.0 }).unwrap();
        for v in exact_shapley(&g).unwrap().phi {
            assert!((v - 1.0 / 3.0).abs() < 1e-12);
        }
    }

    #[test]
    fn size_bound() {
        assert!(matches!(Game::from_fn(21, |_| 0.0), Err(Error::TooManyPlayers { .. })));
        assert!(Game::from_values(2, vec![0.0; 3]).is_err());
    }

    #[test]
    fn binomials() {
        assert_eq!(binomial(5, 2), Some(10));
        assert_eq!(binomial(60, 30), Some(118_264_581_564_861_424));
        assert_eq!(binomial(3, 5), Some(0));
        assert_eq!(binomial(0, 0), Some(1));
        assert!(binomial(130, 65).is_some());
        assert!(binomial(400, 200).is_none());
    }

    #[test]
    fn coverage_examples() {
        assert!((coverage_probability(3, 2, 2).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(coverage_probability(5, 3, 2).unwrap(), 0.0);
        assert_eq!(coverage_probability(7, 3, 7).unwrap(), 1.0);
        // the hypergeometric form, not the printed factorial ratio (which gives 3/4)
        assert_eq!(coverage_ratio(4, 2, 3), Some((1, 2)));
        assert!(coverage_probability(3, 0, 2).is_err());
        assert!(coverage_probability(3, 4, 2).is_err());
        assert!(coverage_probability(3, 1, 4).is_err());
        assert!(coverage_probability(60, 5, 30).unwrap() > 0.0);
    }

    #[test]
    fn filtered_value_examples() {
        let p = 2;
        let mut losses = BTreeMap::new();
        losses.insert(CoalitionMask::full(p), 0.5);
        losses.insert(CoalitionMask::from_indices(p, [0]), 2.0);
        losses.insert(CoalitionMask::from_indices(p, [1]), 3.0);
        let g = filtered_value(&losses, 1.0).unwrap();
        assert_eq!(g.value(0b11), -0.5);
        assert_eq!(g.value(0b01), 0.0);
        assert_eq!(g.value(0b10), 0.0);
        assert_eq!(g.value(0), 0.0);

        let none = filtered_value(&losses, 0.1).unwrap();
        assert!(exact_shapley(&none).unwrap().phi.iter().all(|&v| v == 0.0));

        assert!(filtered_value(&BTreeMap::new(), 1.0).is_err());
        let mut partial = BTreeMap::new();
        partial.insert(CoalitionMask::from_indices(2, [0]), 1.0);
        assert!(filtered_value(&partial, 1.0).is_err());
    }

    #[test]
    fn kahan_beats_naive() {
        let xs = [1e16, 1.0, -1e16, 1.0];
        let k: KahanSum = xs.iter().copied().collect();
        assert_eq!(k.value(), 2.0);
    }
}
