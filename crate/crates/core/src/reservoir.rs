//! The recurrent reservoir pipeline.
//!
//! Per sequence step: encode the input, fold it into the previous step's last
//! CA state with the configured time-transition, evolve `I` iterations and
//! concatenate `A_1..A_I` into the feature vector. The first step of every
//! sequence skips the transition and starts from the encoded input alone.

use std::fmt;
use std::str::FromStr;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ca::{evolve, CellVector, Rule, RuleAssignment};
use crate::encoding::MappingSet;
use crate::error::{RecaError, Result};

/// How a new input is combined with the previous step's last CA state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transition {
    /// Mapped cells take the input bits, the rest keep `A_I` of the previous step.
    #[default]
    Permutation,
    /// Cell-wise: 1+1 → 1, 0+0 → 0, 1+0 → fair coin.
    NormalizedAddition,
}

impl fmt::Display for Transition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Transition::Permutation => "permutation",
            Transition::NormalizedAddition => "normadd",
        })
    }
}

impl FromStr for Transition {
    type Err = RecaError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "permutation" => Ok(Transition::Permutation),
            "normadd" | "normalized_addition" => Ok(Transition::NormalizedAddition),
            other => Err(RecaError::Parse(format!("unknown transition {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReservoirConfig {
    pub rules: Vec<Rule>,
    pub iterations: usize,
    pub r_count: usize,
    pub c_multiplier: usize,
    pub input_length: usize,
    pub transition: Transition,
    pub seed: u64,
}

impl ReservoirConfig {
    pub fn validate(&self) -> Result<()> {
        if self.rules.is_empty() || self.rules.len() > 2 {
            return Err(RecaError::RuleCount(self.rules.len()));
        }
        if self.iterations < 1 {
            return Err(RecaError::invalid("iterations", "must be at least 1"));
        }
        Ok(())
    }

    /// `W = R·C·L`
    pub fn width(&self) -> usize {
        self.r_count * self.c_multiplier * self.input_length
    }

    /// `I·W`
    pub fn feature_width(&self) -> usize {
        self.iterations * self.width()
    }

    /// `R·I·C`
    pub fn size_metric(&self) -> usize {
        self.r_count * self.iterations * self.c_multiplier
    }
}

/// Everything produced by one sequence step.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StepTrace {
    /// Initial state after encoding and time-transition.
    pub a0: CellVector,
    /// `A_1..A_I`
    pub iterations: Vec<CellVector>,
}

impl StepTrace {
    /// `[A_1; A_2; ...; A_I]`
    pub fn feature(&self) -> CellVector {
        CellVector::concat(&self.iterations)
    }

    pub fn last(&self) -> &CellVector {
        self.iterations.last().expect("a trace holds at least one iteration")
    }
}

/// Mapped cells take `x`, every other cell keeps `prev_last`.
pub fn transition_permutation(
    x: &[bool],
    prev_last: &CellVector,
    mappings: &MappingSet,
) -> Result<CellVector> {
    if prev_last.width() != mappings.encoded_width() {
        return Err(RecaError::WidthMismatch {
            expected: mappings.encoded_width(),
            actual: prev_last.width(),
        });
    }
    let encoded = mappings.encode(x)?;
    let mapped = mappings.mapped_cells();
    let bits: Vec<bool> = (0..prev_last.width())
        .map(|i| if mapped.get(i) { encoded.get(i) } else { prev_last.get(i) })
        .collect();
    Ok(CellVector::from_bits(&bits))
}

/// Cell-wise normalized addition of two equally wide vectors.
pub fn transition_normalized_addition<R: RngCore>(
    x_encoded: &CellVector,
    prev_last: &CellVector,
    rng: &mut R,
) -> Result<CellVector> {
    if x_encoded.width() != prev_last.width() {
        return Err(RecaError::WidthMismatch {
            expected: x_encoded.width(),
            actual: prev_last.width(),
        });
    }
    let mut out = CellVector::zeros(x_encoded.width());
    for (i, (a, b)) in x_encoded.iter().zip(prev_last.iter()).enumerate() {
        let bit = match (a, b) {
            (true, true) => true,
            (false, false) => false,
            _ => rng.next_u32() & 1 == 1,
        };
        out.set(i, bit);
    }
    Ok(out)
}

/// Mutable context of one run: mappings, rule layout, the previous step's
/// last state and the coin-flip generator for normalized addition.
///
/// Single owner; move it to another thread rather than sharing it.
#[derive(Debug, Clone)]
pub struct ReservoirState {
    config: ReservoirConfig,
    mappings: MappingSet,
    assignment: RuleAssignment,
    prev_last: Option<CellVector>,
    rng: ChaCha8Rng,
}

impl ReservoirState {
    pub fn new(config: ReservoirConfig) -> Result<Self> {
        config.validate()?;
        let mappings = MappingSet::create(
            config.input_length,
            config.r_count,
            config.c_multiplier,
            config.seed,
        )?;
        ReservoirState::with_mappings(config, mappings)
    }

    /// Uses explicit mappings instead of drawing them from the seed.
    pub fn with_mappings(config: ReservoirConfig, mappings: MappingSet) -> Result<Self> {
        config.validate()?;
        if mappings.encoded_width() != config.width()
            || mappings.input_length() != config.input_length
        {
            return Err(RecaError::WidthMismatch {
                expected: config.width(),
                actual: mappings.encoded_width(),
            });
        }
        let assignment = RuleAssignment::split(&config.rules, config.width())?;
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        // stream 0 belongs to the mapping draw
        rng.set_stream(1);
        Ok(ReservoirState {
            config,
            mappings,
            assignment,
            prev_last: None,
            rng,
        })
    }

    pub fn config(&self) -> &ReservoirConfig {
        &self.config
    }

    pub fn mappings(&self) -> &MappingSet {
        &self.mappings
    }

    pub fn assignment(&self) -> &RuleAssignment {
        &self.assignment
    }

    /// Forgets the previous step, so the next input starts a new sequence.
    pub fn reset(&mut self) {
        self.prev_last = None;
    }

    pub fn process_step(&mut self, x: &[bool]) -> Result<StepTrace> {
        let a0 = match (&self.prev_last, self.config.transition) {
            (None, _) => self.mappings.encode(x)?,
            (Some(prev), Transition::Permutation) => {
                transition_permutation(x, prev, &self.mappings)?
            }
            (Some(prev), Transition::NormalizedAddition) => {
                let encoded = self.mappings.encode(x)?;
                transition_normalized_addition(&encoded, prev, &mut self.rng)?
            }
        };
        let iterations = evolve(&a0, &self.assignment, self.config.iterations)?;
        self.prev_last = iterations.last().cloned();
        Ok(StepTrace { a0, iterations })
    }

    /// Resets, then processes every step of one sequence.
    pub fn process_sequence<X: AsRef<[bool]>>(&mut self, xs: &[X]) -> Result<Vec<StepTrace>> {
        if xs.is_empty() {
            return Err(RecaError::invalid("sequence", "must contain at least one step"));
        }
        self.reset();
        xs.iter().map(|x| self.process_step(x.as_ref())).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bits(s: &str) -> Vec<bool> {
        s.chars().map(|c| c == '1').collect()
    }

    fn config(rules: &[u8], i: usize, r: usize, c: usize) -> ReservoirConfig {
        ReservoirConfig {
            rules: rules.iter().map(|&n| Rule::new(n)).collect(),
            iterations: i,
            r_count: r,
            c_multiplier: c,
            input_length: 4,
            transition: Transition::Permutation,
            seed: 17,
        }
    }

    #[test]
    fn init_widths_and_assignment() {
        let s = ReservoirState::new(config(&[90], 4, 8, 10)).unwrap();
        assert_eq!(s.config().width(), 320);
        assert_eq!(s.config().feature_width(), 1280);
        assert_eq!(s.config().size_metric(), 320);
        assert_eq!(s.assignment().segments(), &[(Rule::new(90), 320)]);

        let s = ReservoirState::new(config(&[90, 165], 4, 8, 10)).unwrap();
        assert_eq!(
            s.assignment().segments(),
            &[(Rule::new(90), 160), (Rule::new(165), 160)]
        );

        assert!(matches!(
            ReservoirState::new(config(&[1, 2, 3], 4, 8, 10)),
            Err(RecaError::RuleCount(3))
        ));
        assert!(ReservoirState::new(config(&[], 4, 8, 10)).is_err());
        assert!(ReservoirState::new(config(&[90], 0, 8, 10)).is_err());
    }

    #[test]
    fn permutation_transition_examples() {
        let m = MappingSet::from_maps(4, 2, vec![vec![5, 2, 0, 7]], 0).unwrap();
        let prev: CellVector = "11111111".parse().unwrap();
        // cells 5,2,0,7 take 1,0,0,0; cells 1,3,4,6 keep their 1
        let out = transition_permutation(&bits("1000"), &prev, &m).unwrap();
        assert_eq!(out.to_string(), "01011110");

        let out = transition_permutation(&bits("0000"), &prev, &m).unwrap();
        assert_eq!(out.to_string(), "01011010");

        let zero = CellVector::zeros(8);
        let x = bits("1011");
        assert_eq!(
            transition_permutation(&x, &zero, &m).unwrap(),
            m.encode(&x).unwrap()
        );

        assert!(transition_permutation(&x, &CellVector::zeros(9), &m).is_err());
    }

    #[test]
    fn normalized_addition_deterministic_cases() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let ones: CellVector = "1111".parse().unwrap();
        let zeros: CellVector = "0000".parse().unwrap();
        assert_eq!(
            transition_normalized_addition(&ones, &ones, &mut rng).unwrap(),
            ones
        );
        assert_eq!(
            transition_normalized_addition(&zeros, &zeros, &mut rng).unwrap(),
            zeros
        );
        assert!(transition_normalized_addition(&ones, &CellVector::zeros(5), &mut rng).is_err());
    }

    #[test]
    fn normalized_addition_coin_is_fair() {
        let a: CellVector = "1100".parse().unwrap();
        let b: CellVector = "1010".parse().unwrap();
        let trials = 20_000;
        let mut hits = [0usize; 2];
        for seed in 0..trials {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let out = transition_normalized_addition(&a, &b, &mut rng).unwrap();
            assert!(out.get(0));
            assert!(!out.get(3));
            hits[0] += out.get(1) as usize;
            hits[1] += out.get(2) as usize;
        }
        for h in hits {
            let freq = h as f64 / trials as f64;
            assert!((freq - 0.5).abs() < 0.02, "frequency {freq}");
        }
    }

    #[test]
    fn first_step_bypasses_transition() {
        let mut s = ReservoirState::new(config(&[110], 2, 3, 4)).unwrap();
        let x = bits("0110");
        let trace = s.process_step(&x).unwrap();
        assert_eq!(trace.a0, s.mappings().encode(&x).unwrap());
        assert_eq!(trace.iterations.len(), 2);
        assert_eq!(trace.feature().width(), 2 * 48);
    }

    #[test]
    fn identity_rule_keeps_a0() {
        let mut s = ReservoirState::new(config(&[204], 3, 2, 3)).unwrap();
        let xs = [bits("1000"), bits("0100"), bits("0010"), bits("0001")];
        for trace in s.process_sequence(&xs).unwrap() {
            assert!(trace.iterations.iter().all(|a| *a == trace.a0));
        }
    }

    #[test]
    fn sequence_cardinality_and_reset() {
        let mut s = ReservoirState::new(config(&[110], 4, 4, 5)).unwrap();
        let xs: Vec<Vec<bool>> = (0..12).map(|t| bits(["1000", "0100", "0010", "0001"][t % 4])).collect();
        let first = s.process_sequence(&xs).unwrap();
        let second = s.process_sequence(&xs).unwrap();
        assert_eq!(first.len(), 12);
        assert_eq!(first, second);
        let empty: Vec<Vec<bool>> = Vec::new();
        assert!(s.process_sequence(&empty).is_err());
    }

    #[test]
    fn rule_zero_leaves_only_mapped_cells() {
        let mut s = ReservoirState::new(config(&[0], 2, 4, 5)).unwrap();
        let xs: Vec<Vec<bool>> = (0..6).map(|_| bits("1111")).collect();
        let traces = s.process_sequence(&xs).unwrap();
        let mapped = s.mappings().mapped_cells().clone();
        for trace in &traces[1..] {
            for i in 0..trace.a0.width() {
                if !mapped.get(i) {
                    assert!(!trace.a0.get(i));
                }
            }
        }
    }

    #[test]
    fn echo_property_on_unmapped_cells() {
        let mut s = ReservoirState::new(config(&[110, 30], 3, 4, 6)).unwrap();
        let xs: Vec<Vec<bool>> = (0..30).map(|t| bits(["1000", "0110", "0011"][t % 3])).collect();
        let traces = s.process_sequence(&xs).unwrap();
        let mapped = s.mappings().mapped_cells().clone();
        for pair in traces.windows(2) {
            for i in 0..mapped.width() {
                if !mapped.get(i) {
                    assert_eq!(pair[1].a0.get(i), pair[0].last().get(i));
                }
            }
        }
    }

    #[test]
    fn transition_names() {
        assert_eq!("permutation".parse::<Transition>().unwrap(), Transition::Permutation);
        assert_eq!("normadd".parse::<Transition>().unwrap(), Transition::NormalizedAddition);
        assert!("xor".parse::<Transition>().is_err());
    }
}
