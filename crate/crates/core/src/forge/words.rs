//! Embedded wordlists and the seeded generator used by the forge.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub const FIRST_NAMES: &[&str] = &[
    "alex", "sam", "jordan", "casey", "riley", "morgan", "taylor", "jamie", "quinn", "avery",
    "harper", "rowan", "emery", "dakota", "reese", "skyler", "parker", "hayden", "logan", "kendall",
];

pub const LAST_NAMES: &[&str] = &[
    "nguyen", "smith", "brown", "wilson", "taylor", "martin", "white", "walker", "hall", "young",
    "king", "wright", "scott", "green", "baker", "adams", "hill", "clarke", "ward", "price",
];

pub const WORDS: &[&str] = &[
    "hey", "how", "are", "you", "doing", "tonight", "coffee", "later", "sounds", "good", "see",
    "soon", "where", "abouts", "nearby", "weekend", "plans", "maybe", "dinner", "thanks", "sure",
    "cool", "what", "time", "works", "free", "after", "work", "great", "photo", "nice", "smile",
    "park", "beach", "movie", "music", "gym", "walk", "dog", "cat", "busy", "today", "tomorrow",
];

pub const SUBURBS: &[&str] = &[
    "Norwood", "Unley", "Glenelg", "Prospect", "Burnside", "Walkerville", "Mitcham", "Goodwood",
    "Kensington", "Marden", "Klemzig", "Semaphore", "Henley Beach", "Glen Osmond", "Brighton",
];

pub const STATES: &[&str] = &["South Australia", "Victoria", "Queensland", "Tasmania"];

/// ChaCha8 seeded from the spec seed, one stream per purpose.
pub struct Gen(ChaCha8Rng);

impl Gen {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Gen(rng)
    }

    pub fn below(&mut self, n: u64) -> u64 {
        self.0.gen_range(0..n.max(1))
    }

    pub fn range(&mut self, lo: i64, hi: i64) -> i64 {
        self.0.gen_range(lo..hi)
    }

    pub fn chance(&mut self, p: f64) -> bool {
        self.0.gen_bool(p)
    }

    pub fn pick<'a>(&mut self, list: &[&'a str]) -> &'a str {
        list[self.below(list.len() as u64) as usize]
    }

    fn draw_from(&mut self, alphabet: &[u8], n: usize) -> String {
        (0..n)
            .map(|_| alphabet[self.below(alphabet.len() as u64) as usize] as char)
            .collect()
    }

    pub fn hex(&mut self, n: usize) -> String {
        self.draw_from(b"0123456789abcdef", n)
    }

    pub fn alnum(&mut self, n: usize) -> String {
        self.draw_from(b"ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789", n)
    }

    /// Decimal digits without a leading zero.
    pub fn digits(&mut self, n: usize) -> String {
        let first = self.draw_from(b"123456789", 1);
        first + &self.draw_from(b"0123456789", n.saturating_sub(1))
    }

    pub fn uuid(&mut self) -> String {
        format!("{}-{}-{}-{}-{}", self.hex(8), self.hex(4), self.hex(4), self.hex(4), self.hex(12))
    }

    pub fn first_name(&mut self) -> String {
        let n = self.pick(FIRST_NAMES);
        let mut c = n.chars();
        c.next().map(|f| f.to_ascii_uppercase().to_string() + c.as_str()).unwrap_or_default()
    }

    pub fn sentence(&mut self) -> String {
        let len = 2 + self.below(6) as usize;
        (0..len).map(|_| self.pick(WORDS)).collect::<Vec<_>>().join(" ")
    }

    /// Bytes from 0x80..=0xFE, which no text rule can match.
    pub fn high_bytes(&mut self, n: usize) -> Vec<u8> {
        (0..n).map(|_| self.0.gen_range(0x80u8..0xFF)).collect()
    }

    /// Bytes that never form a printable run.
    pub fn control_bytes(&mut self, n: usize) -> Vec<u8> {
        (0..n).map(|_| self.0.gen_range(0u8..0x20)).collect()
    }

    /// Latitude/longitude with five decimals, as text, around Adelaide.
    pub fn coords(&mut self) -> (String, String) {
        let lat = -3_480_000 - self.range(0, 30_000);
        let lon = 13_850_000 + self.range(0, 30_000);
        let fmt = |v: i64| {
            let sign = if v < 0 { "-" } else { "" };
            let a = v.unsigned_abs();
            format!("{sign}{}.{:05}", a / 100_000, a % 100_000)
        };
        (fmt(lat), fmt(lon))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn streams_are_independent_and_repeatable() {
        let a: Vec<u64> = { let mut g = Gen::new(42, 1); (0..8).map(|_| g.below(1000)).collect() };
        let b: Vec<u64> = { let mut g = Gen::new(42, 1); (0..8).map(|_| g.below(1000)).collect() };
        let c: Vec<u64> = { let mut g = Gen::new(42, 2); (0..8).map(|_| g.below(1000)).collect() };
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn coords_have_five_decimals() {
        let mut g = Gen::new(7, 0);
        for _ in 0..50 {
            let (lat, lon) = g.coords();
            assert_eq!(lat.split('.').nth(1).unwrap().len(), 5);
            assert_eq!(lon.split('.').nth(1).unwrap().len(), 5);
            let lat: f64 = lat.parse().unwrap();
            assert!((-35.2..-34.7).contains(&lat));
        }
        assert_eq!(g.digits(6).len(), 6);
    }
}
