//! The 5-bit memory task.
//!
//! Timeline of one sequence with distractor length `T_d` (`T = T_d + 10`):
//!
//! ```text
//! step:    0..5        5..4+T_d     4+T_d     5+T_d..T
//! input:   a1/a2       a3           a4 (cue)  a3
//! target:  y3          y3           y3        y1/y2 (pattern replay)
//! ```
//!
//! `a1` carries the pattern bit and `a2` its complement; during recall `y1`
//! carries the pattern bit and `y2` its complement.

use std::io::Write;
use std::path::Path;

use serde::Serialize;

use crate::error::{RecaError, Result};

pub const PATTERN_BITS: usize = 5;
pub const PATTERN_COUNT: usize = 1 << PATTERN_BITS;
pub const INPUT_SIGNALS: usize = 4;
pub const OUTPUT_SIGNALS: usize = 3;

/// Output class indices.
pub const Y1: usize = 0;
pub const Y2: usize = 1;
pub const Y3: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SequenceSample {
    pattern: [bool; PATTERN_BITS],
    inputs: Vec<[bool; INPUT_SIGNALS]>,
    targets: Vec<usize>,
    distractor: usize,
}

impl SequenceSample {
    pub fn new(pattern: [bool; PATTERN_BITS], distractor: usize) -> Result<Self> {
        if distractor < 1 {
            return Err(RecaError::invalid("distractor", "must be at least 1"));
        }
        let len = distractor + 2 * PATTERN_BITS;
        let cue = PATTERN_BITS + distractor - 1;
        let mut inputs = Vec::with_capacity(len);
        let mut targets = Vec::with_capacity(len);
        for t in 0..len {
            let mut a = [false; INPUT_SIGNALS];
            if t < PATTERN_BITS {
                a[0] = pattern[t];
                a[1] = !pattern[t];
            } else if t == cue {
                a[3] = true;
            } else {
                a[2] = true;
            }
            inputs.push(a);
            targets.push(if t > cue {
                if pattern[t - cue - 1] {
                    Y1
                } else {
                    Y2
                }
            } else {
                Y3
            });
        }
        Ok(SequenceSample {
            pattern,
            inputs,
            targets,
            distractor,
        })
    }

    /// Pattern `index` read as a 5-bit binary number, most significant bit first.
    pub fn from_index(index: usize, distractor: usize) -> Result<Self> {
        if index >= PATTERN_COUNT {
            return Err(RecaError::IndexOutOfRange {
                index,
                len: PATTERN_COUNT,
            });
        }
        let pattern = std::array::from_fn(|k| (index >> (PATTERN_BITS - 1 - k)) & 1 == 1);
        SequenceSample::new(pattern, distractor)
    }

    pub fn pattern(&self) -> [bool; PATTERN_BITS] {
        self.pattern
    }

    pub fn pattern_string(&self) -> String {
        self.pattern.iter().map(|&b| if b { '1' } else { '0' }).collect()
    }

    pub fn inputs(&self) -> &[[bool; INPUT_SIGNALS]] {
        &self.inputs
    }

    /// Target class index per step.
    pub fn targets(&self) -> &[usize] {
        &self.targets
    }

    pub fn target_one_hot(&self, t: usize) -> [bool; OUTPUT_SIGNALS] {
        std::array::from_fn(|k| k == self.targets[t])
    }

    pub fn distractor(&self) -> usize {
        self.distractor
    }

    pub fn len(&self) -> usize {
        self.inputs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.inputs.is_empty()
    }

    /// First step of the recall period.
    pub fn recall_start(&self) -> usize {
        PATTERN_BITS + self.distractor
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Dataset {
    pub train: Vec<SequenceSample>,
    pub test: Vec<SequenceSample>,
}

/// All 32 patterns, in index order, for both the train and the test split.
pub fn generate_5bit(distractor: usize) -> Result<Dataset> {
    let samples = (0..PATTERN_COUNT)
        .map(|i| SequenceSample::from_index(i, distractor))
        .collect::<Result<Vec<_>>>()?;
    Ok(Dataset {
        train: samples.clone(),
        test: samples,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RunScore {
    /// Every step of every sequence predicted correctly.
    pub success: bool,
    /// Fraction of correctly predicted steps.
    pub accuracy: f64,
}

/// Scores one prediction list per test sequence against its targets.
pub fn score_run(predictions: &[Vec<usize>], samples: &[SequenceSample]) -> Result<RunScore> {
    if predictions.len() != samples.len() {
        return Err(RecaError::WidthMismatch {
            expected: samples.len(),
            actual: predictions.len(),
        });
    }
    let mut correct = 0usize;
    let mut total = 0usize;
    for (pred, sample) in predictions.iter().zip(samples) {
        if pred.len() != sample.len() {
            return Err(RecaError::WidthMismatch {
                expected: sample.len(),
                actual: pred.len(),
            });
        }
        correct += pred
            .iter()
            .zip(sample.targets())
            .filter(|(p, t)| p == t)
            .count();
        total += sample.len();
    }
    Ok(RunScore {
        success: correct == total,
        accuracy: if total == 0 { 0.0 } else { correct as f64 / total as f64 },
    })
}

/// One CSV row per step: `sequence,step,a1,a2,a3,a4,y1,y2,y3`.
pub fn write_csv<W: Write>(samples: &[SequenceSample], out: W) -> Result<()> {
    let mut writer = csv::Writer::from_writer(out);
    writer.write_record(["sequence", "step", "a1", "a2", "a3", "a4", "y1", "y2", "y3"])?;
    for (id, sample) in samples.iter().enumerate() {
        for (t, a) in sample.inputs().iter().enumerate() {
            let y = sample.target_one_hot(t);
            let mut record = vec![id.to_string(), t.to_string()];
            record.extend(a.iter().chain(y.iter()).map(|&b| (b as u8).to_string()));
            writer.write_record(&record)?;
        }
    }
    writer.flush().map_err(|e| RecaError::io("<csv>", e))?;
    Ok(())
}

pub fn export_csv(samples: &[SequenceSample], path: &Path) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| RecaError::io(path, e))?;
    write_csv(samples, std::io::BufWriter::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sequence_length() {
        let d = generate_5bit(200).unwrap();
        assert_eq!(d.train.len(), 32);
        assert_eq!(d.test.len(), 32);
        assert!(d.train.iter().all(|s| s.len() == 210));
        assert!(generate_5bit(0).is_err());
    }

    #[test]
    fn all_zero_pattern() {
        let s = SequenceSample::from_index(0, 7).unwrap();
        assert_eq!(s.pattern_string(), "00000");
        for t in 0..5 {
            assert_eq!(s.inputs()[t], [false, true, false, false]);
        }
        assert_eq!(&s.targets()[s.recall_start()..], &[Y2; 5]);
    }

    #[test]
    fn cue_and_waiting_counts() {
        for s in generate_5bit(13).unwrap().train {
            assert_eq!(s.inputs().iter().filter(|a| a[3]).count(), 1);
            assert_eq!(s.targets().iter().filter(|&&y| y != Y3).count(), 5);
            assert!(s.inputs()[s.recall_start() - 1][3]);
        }
    }

    #[test]
    fn one_hot_everywhere() {
        for s in generate_5bit(3).unwrap().train {
            for t in 0..s.len() {
                assert_eq!(s.inputs()[t].iter().filter(|&&b| b).count(), 1);
                assert_eq!(s.target_one_hot(t).iter().filter(|&&b| b).count(), 1);
            }
        }
    }

    #[test]
    fn recall_replays_pattern() {
        let d = generate_5bit(4).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for s in &d.train {
            let replay: String = s.targets()[s.recall_start()..]
                .iter()
                .map(|&y| if y == Y1 { '1' } else { '0' })
                .collect();
            assert_eq!(replay, s.pattern_string());
            seen.insert(replay);
        }
        assert_eq!(seen.len(), 32);
    }

    #[test]
    fn distractor_of_one_has_cue_right_after_pattern() {
        let s = SequenceSample::from_index(31, 1).unwrap();
        assert_eq!(s.len(), 11);
        assert!(s.inputs()[5][3]);
        assert_eq!(&s.targets()[6..], &[Y1; 5]);
    }

    #[test]
    fn scoring() {
        let d = generate_5bit(200).unwrap();
        let perfect: Vec<Vec<usize>> = d.test.iter().map(|s| s.targets().to_vec()).collect();
        let score = score_run(&perfect, &d.test).unwrap();
        assert!(score.success);
        assert_eq!(score.accuracy, 1.0);

        let mut one_off = perfect.clone();
        one_off[3][100] = Y1;
        assert!(!score_run(&one_off, &d.test).unwrap().success);

        let waiting: Vec<Vec<usize>> = d.test.iter().map(|s| vec![Y3; s.len()]).collect();
        let score = score_run(&waiting, &d.test).unwrap();
        assert!(!score.success);
        assert!((score.accuracy - 205.0 / 210.0).abs() < 1e-12);

        assert!(score_run(&perfect[1..], &d.test).is_err());
        let mut short = perfect;
        short[0].pop();
        assert!(score_run(&short, &d.test).is_err());
    }

    #[test]
    fn csv_layout() {
        let d = generate_5bit(1).unwrap();
        let mut buf = Vec::new();
        write_csv(&d.test[..1], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines.len(), 12);
        assert_eq!(lines[0], "sequence,step,a1,a2,a3,a4,y1,y2,y3");
        assert_eq!(lines[1], "0,0,0,1,0,0,0,0,1");
        assert_eq!(lines[6], "0,5,0,0,0,1,0,0,1");
        assert_eq!(lines[7], "0,6,0,0,1,0,0,1,0");
    }
}
