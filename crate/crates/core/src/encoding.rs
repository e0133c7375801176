//! Random injective input mappings.
//!
//! Each of the `R` maps places the `L` input bits at distinct cells of a
//! segment `C·L` cells wide. The `R` segments are laid end to end to form the
//! reservoir's initial state; unmapped cells start at zero.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::ca::CellVector;
use crate::error::{RecaError, Result};

/// Identifier of the generator behind every seeded draw in this crate.
pub const RNG_ALGORITHM: &str = "chacha8/rand_chacha-0.3";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "MappingSetRepr", into = "MappingSetRepr")]
pub struct MappingSet {
    input_length: usize,
    r_count: usize,
    c_multiplier: usize,
    maps: Vec<Vec<usize>>,
    seed: u64,
    mapped: CellVector,
}

#[derive(Serialize, Deserialize)]
struct MappingSetRepr {
    input_length: usize,
    r_count: usize,
    c_multiplier: usize,
    seed: u64,
    rng: String,
    maps: Vec<Vec<usize>>,
}

impl TryFrom<MappingSetRepr> for MappingSet {
    type Error = RecaError;

    fn try_from(r: MappingSetRepr) -> Result<Self> {
        if r.rng != RNG_ALGORITHM {
            return Err(RecaError::Parse(format!(
                "mapping set produced by {:?}, expected {RNG_ALGORITHM:?}",
                r.rng
            )));
        }
        MappingSet::from_maps(r.input_length, r.c_multiplier, r.maps, r.seed)
    }
}

impl From<MappingSet> for MappingSetRepr {
    fn from(m: MappingSet) -> Self {
        MappingSetRepr {
            input_length: m.input_length,
            r_count: m.r_count,
            c_multiplier: m.c_multiplier,
            seed: m.seed,
            rng: RNG_ALGORITHM.to_string(),
            maps: m.maps,
        }
    }
}

fn check_positive(name: &'static str, value: usize) -> Result<()> {
    if value == 0 {
        Err(RecaError::invalid(name, "must be at least 1"))
    } else {
        Ok(())
    }
}

impl MappingSet {
    /// Draws `r_count` independent maps, each a uniformly random ordered
    /// choice of `input_length` distinct cells among `c_multiplier·input_length`.
    pub fn create(
        input_length: usize,
        r_count: usize,
        c_multiplier: usize,
        seed: u64,
    ) -> Result<Self> {
        check_positive("input_length", input_length)?;
        check_positive("r_count", r_count)?;
        check_positive("c_multiplier", c_multiplier)?;
        let segment = c_multiplier
            .checked_mul(input_length)
            .ok_or_else(|| RecaError::invalid("c_multiplier", "segment width overflows"))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut cells: Vec<usize> = (0..segment).collect();
        let maps = (0..r_count)
            .map(|_| {
                let (chosen, _) = cells.partial_shuffle(&mut rng, input_length);
                chosen.to_vec()
            })
            .collect();
        MappingSet::from_maps(input_length, c_multiplier, maps, seed)
    }

    /// Builds a set from explicit maps, checking bounds and injectivity.
    pub fn from_maps(
        input_length: usize,
        c_multiplier: usize,
        maps: Vec<Vec<usize>>,
        seed: u64,
    ) -> Result<Self> {
        check_positive("input_length", input_length)?;
        check_positive("c_multiplier", c_multiplier)?;
        check_positive("r_count", maps.len())?;
        let segment = c_multiplier * input_length;
        let mut mapped = CellVector::zeros(segment * maps.len());
        for (p, map) in maps.iter().enumerate() {
            if map.len() != input_length {
                return Err(RecaError::WidthMismatch {
                    expected: input_length,
                    actual: map.len(),
                });
            }
            for &target in map {
                if target >= segment {
                    return Err(RecaError::invalid(
                        "maps",
                        format!("target {target} outside segment of width {segment}"),
                    ));
                }
                let cell = p * segment + target;
                if mapped.get(cell) {
                    return Err(RecaError::invalid(
                        "maps",
                        format!("map {p} sends two inputs to cell {target}"),
                    ));
                }
                mapped.set(cell, true);
            }
        }
        Ok(MappingSet {
            input_length,
            r_count: maps.len(),
            c_multiplier,
            maps,
            seed,
            mapped,
        })
    }

    pub fn input_length(&self) -> usize {
        self.input_length
    }

    pub fn r_count(&self) -> usize {
        self.r_count
    }

    pub fn c_multiplier(&self) -> usize {
        self.c_multiplier
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn maps(&self) -> &[Vec<usize>] {
        &self.maps
    }

    pub fn segment_width(&self) -> usize {
        self.c_multiplier * self.input_length
    }

    /// `R·C·L`
    pub fn encoded_width(&self) -> usize {
        self.r_count * self.segment_width()
    }

    /// Cells that receive an input bit in some segment.
    pub fn mapped_cells(&self) -> &CellVector {
        &self.mapped
    }

    pub fn encode(&self, x: &[bool]) -> Result<CellVector> {
        if x.len() != self.input_length {
            return Err(RecaError::WidthMismatch {
                expected: self.input_length,
                actual: x.len(),
            });
        }
        let segment = self.segment_width();
        let mut out = CellVector::zeros(self.encoded_width());
        for (p, map) in self.maps.iter().enumerate() {
            for (j, &target) in map.iter().enumerate() {
                if x[j] {
                    out.set(p * segment + target, true);
                }
            }
        }
        Ok(out)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}
