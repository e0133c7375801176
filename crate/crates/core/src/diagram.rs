//! Space-time diagrams as plain PBM (`P1`) bitmaps.
//!
//! One pixel row per CA iteration, time flowing downward, 1 = black. When
//! separators are enabled a dotted marker row is inserted between sequence
//! steps, where the time-transition is applied.

use std::fmt::Write as _;
use std::path::Path;

use crate::ca::CellVector;
use crate::error::{RecaError, Result};
use crate::reservoir::StepTrace;

/// PBM writers keep lines at or under 70 characters.
const PBM_LINE_LIMIT: usize = 70;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpaceTimeDiagram {
    width: usize,
    rows_per_step: usize,
    /// `A_1..A_I` of every step, in order.
    steps: Vec<Vec<CellVector>>,
    separators: bool,
}

impl SpaceTimeDiagram {
    pub fn from_traces(traces: &[StepTrace], separators: bool) -> Result<Self> {
        let first = traces
            .first()
            .ok_or_else(|| RecaError::invalid("traces", "at least one step required"))?;
        let width = first.a0.width();
        let rows_per_step = first.iterations.len();
        for t in traces {
            if t.iterations.len() != rows_per_step {
                return Err(RecaError::WidthMismatch {
                    expected: rows_per_step,
                    actual: t.iterations.len(),
                });
            }
        }
        Ok(SpaceTimeDiagram {
            width,
            rows_per_step,
            steps: traces.iter().map(|t| t.iterations.clone()).collect(),
            separators,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn rows_per_step(&self) -> usize {
        self.rows_per_step
    }

    pub fn step_count(&self) -> usize {
        self.steps.len()
    }

    /// Total pixel rows, separators included.
    pub fn height(&self) -> usize {
        let body = self.steps.len() * self.rows_per_step;
        if self.separators {
            body + self.steps.len().saturating_sub(1)
        } else {
            body
        }
    }

    /// CA rows of `steps` only (no separators).
    pub fn body_rows(&self, steps: std::ops::Range<usize>) -> impl Iterator<Item = &CellVector> {
        self.steps[steps].iter().flatten()
    }

    /// Fraction of black pixels per column over the given steps.
    pub fn column_density(&self, steps: std::ops::Range<usize>) -> Vec<f64> {
        let mut counts = vec![0usize; self.width];
        let mut rows = 0usize;
        for row in self.body_rows(steps) {
            rows += 1;
            for i in row.ones_indices() {
                counts[i] += 1;
            }
        }
        counts
            .into_iter()
            .map(|c| if rows == 0 { 0.0 } else { c as f64 / rows as f64 })
            .collect()
    }

    fn pixel_rows(&self) -> Vec<CellVector> {
        let marker = CellVector::from_bits(&(0..self.width).map(|i| i % 2 == 0).collect::<Vec<_>>());
        let mut out = Vec::with_capacity(self.height());
        for (k, step) in self.steps.iter().enumerate() {
            if self.separators && k > 0 {
                out.push(marker.clone());
            }
            out.extend(step.iter().cloned());
        }
        out
    }

    pub fn to_pbm(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "P1");
        let _ = writeln!(
            s,
            "# space-time diagram: {} steps x {} iterations{}",
            self.steps.len(),
            self.rows_per_step,
            if self.separators { ", dotted separators" } else { "" }
        );
        let _ = writeln!(s, "{} {}", self.width, self.height());
        for row in self.pixel_rows() {
            let pixels = row.to_string();
            for chunk in pixels.as_bytes().chunks(PBM_LINE_LIMIT) {
                s.push_str(std::str::from_utf8(chunk).expect("ascii digits"));
                s.push('\n');
            }
        }
        s
    }

    pub fn write_pbm(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_pbm()).map_err(|e| RecaError::io(path, e))
    }
}

/// Decoded `P1` bitmap.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bitmap {
    pub width: usize,
    pub height: usize,
    pub rows: Vec<CellVector>,
}

/// Parses a plain PBM, tolerating comments and arbitrary whitespace.
pub fn parse_pbm(text: &str) -> Result<Bitmap> {
    let mut tokens = text
        .lines()
        .map(|l| l.split('#').next().unwrap_or(""))
        .flat_map(str::split_whitespace);
    if tokens.next() != Some("P1") {
        return Err(RecaError::Parse("missing P1 magic".into()));
    }
    let mut dim = |name: &str| -> Result<usize> {
        tokens
            .next()
            .and_then(|t| t.parse().ok())
            .ok_or_else(|| RecaError::Parse(format!("bad {name}")))
    };
    let width = dim("width")?;
    let height = dim("height")?;
    let pixels: Vec<bool> = tokens
        .flat_map(str::chars)
        .map(|c| match c {
            '0' => Ok(false),
            '1' => Ok(true),
            other => Err(RecaError::Parse(format!("bad pixel {other:?}"))),
        })
        .collect::<Result<_>>()?;
    if pixels.len() != width * height {
        return Err(RecaError::Parse(format!(
            "expected {} pixels, found {}",
            width * height,
            pixels.len()
        )));
    }
    let rows = if width == 0 {
        vec![CellVector::zeros(0); height]
    } else {
        pixels.chunks(width).map(CellVector::from_bits).collect()
    };
    Ok(Bitmap {
        width,
        height,
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn trace(rows: &[&str]) -> StepTrace {
        StepTrace {
            a0: rows[0].parse().unwrap(),
            iterations: rows.iter().map(|r| r.parse().unwrap()).collect(),
        }
    }

    #[test]
    fn layout_with_separators() {
        let d = SpaceTimeDiagram::from_traces(
            &[trace(&["100", "010"]), trace(&["001", "111"])],
            true,
        )
        .unwrap();
        assert_eq!(d.height(), 5);
        assert_eq!(d.to_pbm().lines().skip(2).collect::<Vec<_>>(), vec![
            "3 5", "100", "010", "101", "001", "111"
        ]);
    }

    #[test]
    fn pbm_round_trip_with_long_rows() {
        let long: String = (0..150).map(|i| if i % 3 == 0 { '1' } else { '0' }).collect();
        let d = SpaceTimeDiagram::from_traces(&[trace(&[&long]), trace(&[&long])], false).unwrap();
        let text = d.to_pbm();
        assert!(text.lines().all(|l| l.len() <= 70));
        let bmp = parse_pbm(&text).unwrap();
        assert_eq!((bmp.width, bmp.height), (150, 2));
        assert_eq!(bmp.rows[1].to_string(), long);
    }

    #[test]
    fn column_density_counts_body_rows_only() {
        let d = SpaceTimeDiagram::from_traces(
            &[trace(&["110", "100"]), trace(&["111", "101"])],
            true,
        )
        .unwrap();
        assert_eq!(d.column_density(0..2), vec![1.0, 0.5, 0.5]);
        assert_eq!(d.column_density(1..2), vec![1.0, 0.5, 1.0]);
    }

    #[test]
    fn parse_errors() {
        assert!(parse_pbm("P4\n1 1\n1").is_err());
        assert!(parse_pbm("P1\n2 2\n101").is_err());
        assert!(parse_pbm("P1\n1 1\n2").is_err());
        assert!(SpaceTimeDiagram::from_traces(&[], true).is_err());
    }
}
