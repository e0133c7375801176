//! Elementary cellular automata on bit-packed rings.
//!
//! A [`CellVector`] stores one bit per cell in 64-bit words. Stepping
//! evaluates a rule's lookup table with word-wide boolean algebra over the
//! left/center/right neighbor planes, so a 320-cell reservoir updates in a
//! handful of instructions per word. Boundaries wrap around: cell 0 and cell
//! `W-1` are neighbors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{RecaError, Result};

/// Smallest width that gives every cell three distinct neighbors.
pub const MIN_WIDTH: usize = 3;

/// An elementary CA rule in Wolfram numbering.
///
/// Table entry `n` is the output for the neighborhood whose bits
/// `(left, center, right)` read as the 3-bit number `n`; entry 7 (`111`) is
/// the most significant bit of the rule number.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Rule(u8);

impl Rule {
    pub const fn new(number: u8) -> Self {
        Rule(number)
    }

    /// Checked constructor for untrusted numbers.
    pub fn from_number(n: i64) -> Result<Self> {
        u8::try_from(n)
            .map(Rule)
            .map_err(|_| RecaError::RuleOutOfRange(n))
    }

    pub fn from_table(table: [bool; 8]) -> Self {
        let number = table
            .iter()
            .enumerate()
            .fold(0u8, |acc, (n, &bit)| acc | ((bit as u8) << n));
        Rule(number)
    }

    pub const fn number(self) -> u8 {
        self.0
    }

    pub fn table(self) -> [bool; 8] {
        std::array::from_fn(|n| (self.0 >> n) & 1 == 1)
    }

    #[inline]
    pub fn apply(self, left: bool, center: bool, right: bool) -> bool {
        let n = ((left as u8) << 2) | ((center as u8) << 1) | right as u8;
        (self.0 >> n) & 1 == 1
    }

    /// `Z'(a,b,c) = !Z(!a,!b,!c)`.
    pub fn complement(self) -> Self {
        Rule::from_table(std::array::from_fn(|n| !self.table()[7 - n]))
    }

    /// `Z'(a,b,c) = Z(c,b,a)`.
    pub fn mirror(self) -> Self {
        let table = self.table();
        Rule::from_table(std::array::from_fn(|n| {
            let swapped = ((n & 1) << 2) | (n & 2) | ((n >> 2) & 1);
            table[swapped]
        }))
    }

    /// Word-parallel evaluation over three neighbor planes.
    #[inline]
    fn apply_words(self, left: u64, center: u64, right: u64) -> u64 {
        let mut out = 0u64;
        for n in 0..8 {
            if (self.0 >> n) & 1 == 1 {
                let l = if n & 4 != 0 { left } else { !left };
                let c = if n & 2 != 0 { center } else { !center };
                let r = if n & 1 != 0 { right } else { !right };
                out |= l & c & r;
            }
        }
        out
    }
}

impl fmt::Display for Rule {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Rule {
    type Err = RecaError;

    fn from_str(s: &str) -> Result<Self> {
        let n: i64 = s
            .trim()
            .parse()
            .map_err(|_| RecaError::Parse(format!("not a rule number: {s:?}")))?;
        Rule::from_number(n)
    }
}

/// Fixed-width binary cell state, packed 64 cells per word.
///
/// Bits beyond `width` in the last word are always zero.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct CellVector {
    words: Vec<u64>,
    width: usize,
}

#[inline]
fn word_count(width: usize) -> usize {
    width.div_ceil(64)
}

impl CellVector {
    pub fn zeros(width: usize) -> Self {
        CellVector {
            words: vec![0; word_count(width)],
            width,
        }
    }

    pub fn ones(width: usize) -> Self {
        let mut v = CellVector {
            words: vec![u64::MAX; word_count(width)],
            width,
        };
        v.clear_padding();
        v
    }

    pub fn from_bits(bits: &[bool]) -> Self {
        let mut v = CellVector::zeros(bits.len());
        for (i, &b) in bits.iter().enumerate() {
            v.set(i, b);
        }
        v
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn words(&self) -> &[u64] {
        &self.words
    }

    #[inline]
    pub fn get(&self, i: usize) -> bool {
        assert!(i < self.width, "cell {i} out of range for width {}", self.width);
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set(&mut self, i: usize, value: bool) {
        assert!(i < self.width, "cell {i} out of range for width {}", self.width);
        let mask = 1u64 << (i % 64);
        if value {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }

    pub fn iter(&self) -> impl Iterator<Item = bool> + '_ {
        (0..self.width).map(move |i| self.get(i))
    }

    pub fn to_bits(&self) -> Vec<bool> {
        self.iter().collect()
    }

    /// Indices of the set cells, ascending.
    pub fn ones_indices(&self) -> impl Iterator<Item = usize> + '_ {
        self.words.iter().enumerate().flat_map(|(k, &w)| {
            let mut word = w;
            std::iter::from_fn(move || {
                if word == 0 {
                    None
                } else {
                    let bit = word.trailing_zeros() as usize;
                    word &= word - 1;
                    Some(k * 64 + bit)
                }
            })
        })
    }

    /// Bitwise NOT over the `width` cells.
    pub fn not(&self) -> Self {
        let mut v = CellVector {
            words: self.words.iter().map(|w| !w).collect(),
            width: self.width,
        };
        v.clear_padding();
        v
    }

    /// Position `i` moves to `W-1-i`.
    pub fn reversed(&self) -> Self {
        let mut v = CellVector::zeros(self.width);
        for i in self.ones_indices() {
            v.set(self.width - 1 - i, true);
        }
        v
    }

    /// Joins `parts` end to end, in order.
    pub fn concat(parts: &[CellVector]) -> Self {
        let width = parts.iter().map(|p| p.width).sum();
        let mut out = CellVector::zeros(width);
        let mut offset = 0;
        for part in parts {
            for i in part.ones_indices() {
                out.set(offset + i, true);
            }
            offset += part.width;
        }
        out
    }

    fn clear_padding(&mut self) {
        let tail = self.width % 64;
        if tail != 0 {
            if let Some(last) = self.words.last_mut() {
                *last &= (1u64 << tail) - 1;
            }
        }
    }

    /// `out[i] = self[i-1 mod W]`
    fn left_plane(&self) -> Vec<u64> {
        let n = self.words.len();
        let mut out = vec![0u64; n];
        let mut carry = 0u64;
        for (o, &w) in out.iter_mut().zip(&self.words) {
            *o = (w << 1) | carry;
            carry = w >> 63;
        }
        let tail = self.width % 64;
        if tail != 0 {
            out[n - 1] &= (1u64 << tail) - 1;
        }
        if self.get(self.width - 1) {
            out[0] |= 1;
        }
        out
    }

    /// `out[i] = self[i+1 mod W]`
    fn right_plane(&self) -> Vec<u64> {
        let n = self.words.len();
        let mut out = vec![0u64; n];
        for (k, o) in out.iter_mut().enumerate() {
            let next = if k + 1 < n { self.words[k + 1] << 63 } else { 0 };
            *o = (self.words[k] >> 1) | next;
        }
        if self.get(0) {
            let last = self.width - 1;
            out[last / 64] |= 1u64 << (last % 64);
        }
        out
    }
}

impl fmt::Display for CellVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.iter() {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl fmt::Debug for CellVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "CellVector({self})")
    }
}

impl FromStr for CellVector {
    type Err = RecaError;

    fn from_str(s: &str) -> Result<Self> {
        let bits = s
            .chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(RecaError::Parse(format!("bad cell character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(CellVector::from_bits(&bits))
    }
}

/// Contiguous runs of cells, each governed by its own rule.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleAssignment {
    segments: Vec<(Rule, usize)>,
    /// Per-segment cell masks, only populated for non-uniform assignments.
    masks: Vec<Vec<u64>>,
    width: usize,
}

impl RuleAssignment {
    pub fn new(segments: Vec<(Rule, usize)>) -> Result<Self> {
        if segments.is_empty() {
            return Err(RecaError::invalid("segments", "at least one segment required"));
        }
        if let Some(&(rule, _)) = segments.iter().find(|(_, n)| *n == 0) {
            return Err(RecaError::invalid(
                "segments",
                format!("segment for rule {rule} has zero cells"),
            ));
        }
        let width: usize = segments.iter().map(|(_, n)| n).sum();
        if width < MIN_WIDTH {
            return Err(RecaError::WidthTooSmall(width));
        }
        let masks = if segments.len() > 1 {
            let mut start = 0;
            segments
                .iter()
                .map(|&(_, count)| {
                    let mut mask = CellVector::zeros(width);
                    for i in start..start + count {
                        mask.set(i, true);
                    }
                    start += count;
                    mask.words
                })
                .collect()
        } else {
            Vec::new()
        };
        Ok(RuleAssignment {
            segments,
            masks,
            width,
        })
    }

    pub fn uniform(rule: Rule, width: usize) -> Result<Self> {
        RuleAssignment::new(vec![(rule, width)])
    }

    /// One rule covers the whole ring; two rules split it at `floor(W/2)`.
    pub fn split(rules: &[Rule], width: usize) -> Result<Self> {
        match *rules {
            [rule] => RuleAssignment::uniform(rule, width),
            [first, second] => {
                let half = width / 2;
                RuleAssignment::new(vec![(first, half), (second, width - half)])
            }
            _ => Err(RecaError::RuleCount(rules.len())),
        }
    }

    pub fn segments(&self) -> &[(Rule, usize)] {
        &self.segments
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn is_uniform(&self) -> bool {
        self.segments.len() == 1
    }

    /// Rule governing cell `i`.
    pub fn rule_at(&self, i: usize) -> Rule {
        let mut end = 0;
        for &(rule, count) in &self.segments {
            end += count;
            if i < end {
                return rule;
            }
        }
        panic!("cell {i} outside assignment width {}", self.width)
    }
}

/// One synchronous update of every cell under its segment's rule.
pub fn step(state: &CellVector, assignment: &RuleAssignment) -> Result<CellVector> {
    if state.width != assignment.width {
        return Err(RecaError::WidthMismatch {
            expected: assignment.width,
            actual: state.width,
        });
    }
    let left = state.left_plane();
    let right = state.right_plane();
    let mut words = vec![0u64; state.words.len()];
    if assignment.is_uniform() {
        let rule = assignment.segments[0].0;
        for (k, out) in words.iter_mut().enumerate() {
            *out = rule.apply_words(left[k], state.words[k], right[k]);
        }
    } else {
        for ((rule, _), mask) in assignment.segments.iter().zip(&assignment.masks) {
            for (k, out) in words.iter_mut().enumerate() {
                *out |= rule.apply_words(left[k], state.words[k], right[k]) & mask[k];
            }
        }
    }
    let mut next = CellVector {
        words,
        width: state.width,
    };
    next.clear_padding();
    Ok(next)
}

/// Returns `A_1..A_I`; the starting state is not included.
pub fn evolve(
    state: &CellVector,
    assignment: &RuleAssignment,
    iterations: usize,
) -> Result<Vec<CellVector>> {
    if iterations < 1 {
        return Err(RecaError::invalid("iterations", "must be at least 1"));
    }
    let mut out: Vec<CellVector> = Vec::with_capacity(iterations);
    let mut current = step(state, assignment)?;
    for _ in 1..iterations {
        let next = step(&current, assignment)?;
        out.push(std::mem::replace(&mut current, next));
    }
    out.push(current);
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cv(s: &str) -> CellVector {
        s.parse().unwrap()
    }

    /// Per-cell lookup written against `Vec<bool>`, independent of the
    /// word-plane path.
    fn naive_step(cells: &[bool], rules: &[u8]) -> Vec<bool> {
        let w = cells.len();
        (0..w)
            .map(|i| {
                let l = cells[(i + w - 1) % w] as usize;
                let c = cells[i] as usize;
                let r = cells[(i + 1) % w] as usize;
                (rules[i] >> (l * 4 + c * 2 + r)) & 1 == 1
            })
            .collect()
    }

    #[test]
    fn rule_110_table() {
        let t = Rule::from_number(110).unwrap().table();
        // neighborhoods 111,110,101,100,011,010,001,000
        let expected = [false, true, true, false, true, true, true, false];
        for (k, &e) in expected.iter().enumerate() {
            assert_eq!(t[7 - k], e, "neighborhood {:03b}", 7 - k);
        }
    }

    #[test]
    fn rule_zero_and_identity() {
        assert_eq!(Rule::new(0).table(), [false; 8]);
        let id = Rule::new(204);
        for n in 0..8usize {
            assert_eq!(id.table()[n], (n >> 1) & 1 == 1);
        }
    }

    #[test]
    fn rule_number_range() {
        assert!(Rule::from_number(256).is_err());
        assert!(Rule::from_number(-1).is_err());
        assert_eq!(Rule::from_number(255).unwrap().number(), 255);
        for n in 0..=255u8 {
            assert_eq!(Rule::from_table(Rule::new(n).table()).number(), n);
        }
    }

    #[test]
    fn rule_90_step() {
        let a = RuleAssignment::uniform(Rule::new(90), 5).unwrap();
        assert_eq!(step(&cv("00100"), &a).unwrap(), cv("01010"));
    }

    #[test]
    fn identity_step() {
        let a = RuleAssignment::uniform(Rule::new(204), 7).unwrap();
        let s = cv("1011001");
        assert_eq!(step(&s, &a).unwrap(), s);
    }

    #[test]
    fn two_segment_step() {
        let a = RuleAssignment::new(vec![(Rule::new(90), 3), (Rule::new(204), 2)]).unwrap();
        // rule 90 on cells 0..3: cell0 = s4^s1 = 0, cell1 = s0^s2 = 1, cell2 = s1^s3 = 0
        assert_eq!(step(&cv("00100"), &a).unwrap(), cv("01000"));
        assert_eq!(step(&cv("00110"), &a).unwrap(), cv("01110"));
    }

    #[test]
    fn evolve_examples() {
        let a = RuleAssignment::uniform(Rule::new(90), 5).unwrap();
        assert_eq!(
            evolve(&cv("00100"), &a, 2).unwrap(),
            vec![cv("01010"), cv("10001")]
        );
        let id = RuleAssignment::uniform(Rule::new(204), 5).unwrap();
        assert_eq!(evolve(&cv("10110"), &id, 5).unwrap(), vec![cv("10110"); 5]);
        let zero = RuleAssignment::uniform(Rule::new(0), 5).unwrap();
        assert_eq!(evolve(&cv("10110"), &zero, 2).unwrap(), vec![cv("00000"); 2]);
        assert!(evolve(&cv("10110"), &zero, 0).is_err());
    }

    #[test]
    fn width_errors() {
        assert!(matches!(
            RuleAssignment::uniform(Rule::new(90), 2),
            Err(RecaError::WidthTooSmall(2))
        ));
        let a = RuleAssignment::uniform(Rule::new(90), 5).unwrap();
        assert!(matches!(
            step(&cv("0010"), &a),
            Err(RecaError::WidthMismatch { expected: 5, actual: 4 })
        ));
        assert!(RuleAssignment::split(&[Rule::new(1); 3], 10).is_err());
        assert!(RuleAssignment::new(vec![(Rule::new(1), 4), (Rule::new(2), 0)]).is_err());
    }

    #[test]
    fn split_halves() {
        let a = RuleAssignment::split(&[Rule::new(90), Rule::new(165)], 321).unwrap();
        assert_eq!(a.segments(), &[(Rule::new(90), 160), (Rule::new(165), 161)]);
        assert_eq!(a.rule_at(159), Rule::new(90));
        assert_eq!(a.rule_at(160), Rule::new(165));
    }

    #[test]
    fn complement_and_mirror_examples() {
        assert_eq!(Rule::new(90).complement(), Rule::new(165));
        assert_eq!(Rule::new(204).complement(), Rule::new(204));
        assert_eq!(Rule::new(110).mirror(), Rule::new(124));
        assert_eq!(Rule::new(90).mirror(), Rule::new(90));
        for n in 0..=255u8 {
            let r = Rule::new(n);
            assert_eq!(r.complement().complement(), r);
            assert_eq!(r.mirror().mirror(), r);
        }
    }

    #[test]
    fn packed_step_matches_naive_for_small_widths() {
        for w in 3..=10usize {
            for n in 0..=255u8 {
                let a = RuleAssignment::uniform(Rule::new(n), w).unwrap();
                let rules = vec![n; w];
                for pattern in 0..(1u32 << w) {
                    let bits: Vec<bool> = (0..w).map(|i| (pattern >> i) & 1 == 1).collect();
                    let got = step(&CellVector::from_bits(&bits), &a).unwrap().to_bits();
                    assert_eq!(got, naive_step(&bits, &rules), "rule {n} w {w} {pattern:b}");
                }
            }
        }
    }

    #[test]
    fn packed_step_matches_naive_across_word_boundaries() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        for &w in &[63usize, 64, 65, 127, 128, 129, 320] {
            for _ in 0..50 {
                let first = Rule::new(rng.gen());
                let second = Rule::new(rng.gen());
                let a = RuleAssignment::split(&[first, second], w).unwrap();
                let rules: Vec<u8> = (0..w).map(|i| a.rule_at(i).number()).collect();
                let bits: Vec<bool> = (0..w).map(|_| rng.gen()).collect();
                let got = step(&CellVector::from_bits(&bits), &a).unwrap();
                assert_eq!(got.to_bits(), naive_step(&bits, &rules));
                assert_eq!(got.width(), w);
            }
        }
    }

    #[test]
    fn vector_helpers() {
        let v = cv("1101000001");
        assert_eq!(v.count_ones(), 4);
        assert_eq!(v.not(), cv("0010111110"));
        assert_eq!(v.reversed(), cv("1000001011"));
        assert_eq!(v.ones_indices().collect::<Vec<_>>(), vec![0, 1, 3, 9]);
        assert_eq!(CellVector::concat(&[cv("10"), cv("011")]), cv("10011"));
        assert_eq!(CellVector::ones(70).count_ones(), 70);
        assert!("10a".parse::<CellVector>().is_err());
    }
}
