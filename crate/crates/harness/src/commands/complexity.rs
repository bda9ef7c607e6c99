//! Flop estimates of the two gradient routes as the number of users grows.

use std::path::{Path, PathBuf};

use ma_array::optimizer::{flop_count_estimate, GradientMethod};
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};
use crate::output::{ensure_dir, write_csv};
use crate::plot::{line_chart, Series};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComplexityRow {
    pub m: usize,
    pub closed_form: f64,
    pub definition_based: f64,
    pub ratio: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ComplexityParams {
    pub m_min: usize,
    pub m_max: usize,
    pub num_antennas: usize,
    pub t_outer: usize,
    pub t_inner: usize,
}

impl Default for ComplexityParams {
    fn default() -> Self {
        Self { m_min: 1, m_max: 10, num_antennas: 30, t_outer: 10, t_inner: 10 }
    }
}

pub struct ComplexityReport {
    pub rows: Vec<ComplexityRow>,
    pub flags: Vec<String>,
}

impl ComplexityReport {
    pub fn passed(&self) -> bool {
        self.flags.is_empty()
    }
}

pub fn run_complexity(p: &ComplexityParams) -> Result<ComplexityReport> {
    if p.m_min == 0 || p.m_min > p.m_max {
        return Err(HarnessError::Input(format!("need 1 ≤ m_min ≤ m_max (got {}..{})", p.m_min, p.m_max)));
    }
    if p.num_antennas == 0 || p.t_outer == 0 || p.t_inner == 0 {
        return Err(HarnessError::Input("antennas and iteration counts must be positive".into()));
    }
    let rows: Vec<ComplexityRow> = (p.m_min..=p.m_max)
        .map(|m| {
            let closed_form = flop_count_estimate(m, p.num_antennas, p.t_outer, p.t_inner, GradientMethod::ClosedForm);
            let definition_based =
                flop_count_estimate(m, p.num_antennas, p.t_outer, p.t_inner, GradientMethod::DefinitionBased);
            ComplexityRow { m, closed_form, definition_based, ratio: definition_based / closed_form }
        })
        .collect();

    let mut flags = Vec::new();
    for r in rows.iter().filter(|r| r.m == 1) {
        if r.closed_form != r.definition_based {
            flags.push("M=1 counts differ".into());
        }
    }
    let multi: Vec<&ComplexityRow> = rows.iter().filter(|r| r.m >= 2).collect();
    for w in multi.windows(2) {
        if w[1].ratio <= w[0].ratio {
            flags.push(format!("ratio not increasing from M={} to M={}", w[0].m, w[1].m));
        }
    }
    Ok(ComplexityReport { rows, flags })
}

pub fn write_complexity(report: &ComplexityReport, dir: &Path) -> Result<Vec<PathBuf>> {
    ensure_dir(dir)?;
    let csv = write_csv(&dir.join("complexity.csv"), &report.rows)?;
    let series = vec![
        Series {
            label: "closed form".into(),
            points: report.rows.iter().map(|r| (r.m as f64, r.closed_form)).collect(),
        },
        Series {
            label: "definition based".into(),
            points: report.rows.iter().map(|r| (r.m as f64, r.definition_based)).collect(),
        },
    ];
    let svg = dir.join("complexity.svg");
    line_chart(&svg, "Complex multiplications", "users M", "multiplications", &series, true)?;
    Ok(vec![csv, svg])
}
