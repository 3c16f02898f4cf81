//! Aligned plain-text tables and the percentage presentation of metrics.

use fugnn_core::experiment::Summary;

pub struct Table {
    header: Vec<String>,
    rows: Vec<Vec<String>>,
}

impl Table {
    pub fn new<S: Into<String>>(header: impl IntoIterator<Item = S>) -> Self {
        Self {
            header: header.into_iter().map(Into::into).collect(),
            rows: Vec::new(),
        }
    }

    pub fn row<S: Into<String>>(&mut self, cells: impl IntoIterator<Item = S>) {
        self.rows.push(cells.into_iter().map(Into::into).collect());
    }

    /// First column left-aligned, the rest right-aligned.
    pub fn render(&self) -> String {
        let cols = self.header.len();
        let mut widths: Vec<usize> = self.header.iter().map(|h| h.chars().count()).collect();
        for r in &self.rows {
            for (w, c) in widths.iter_mut().zip(r) {
                *w = (*w).max(c.chars().count());
            }
        }
        let line = |cells: &[String]| {
            let parts: Vec<String> = (0..cols)
                .map(|i| {
                    let c = cells.get(i).map(String::as_str).unwrap_or("");
                    if i == 0 {
                        format!("{c:<w$}", w = widths[i])
                    } else {
                        format!("{c:>w$}", w = widths[i])
                    }
                })
                .collect();
            parts.join("  ").trim_end().to_string()
        };
        let mut out = line(&self.header);
        out.push('\n');
        let rule: usize = widths.iter().sum::<usize>() + 2 * cols.saturating_sub(1);
        out.push_str(&"-".repeat(rule));
        out.push('\n');
        for r in &self.rows {
            out.push_str(&line(r));
            out.push('\n');
        }
        out
    }
}

/// A fraction as a percentage with two decimals.
pub fn pct(x: f64) -> String {
    format!("{:.2}", x * 100.0)
}

pub fn pct_opt(x: Option<f64>) -> String {
    x.map(pct).unwrap_or_else(|| "undef".into())
}

/// `mean ± sd` in percent, with a note when some runs were undefined.
pub fn pct_summary(s: &Summary) -> String {
    if s.count == 0 {
        return "undef".into();
    }
    let base = format!("{} ± {}", pct(s.mean), pct(s.sd));
    if s.skipped > 0 {
        format!("{base} ({} undef)", s.skipped)
    } else {
        base
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn columns_align() {
        let mut t = Table::new(["K", "acc"]);
        t.row(["1", "85.00"]);
        t.row(["100", "9.5"]);
        let text = t.render();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "K      acc");
        assert_eq!(lines[2], "1    85.00");
        assert_eq!(lines[3], "100    9.5");
    }

    #[test]
    fn percentages_use_two_decimals() {
        assert_eq!(pct(0.12345), "12.35");
        assert_eq!(pct_opt(None), "undef");
        let s = Summary::of([Some(0.5), None]);
        assert_eq!(pct_summary(&s), "50.00 ± 0.00 (1 undef)");
    }
}
