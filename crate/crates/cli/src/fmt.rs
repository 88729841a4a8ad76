//! Human-readable table formatting: roughly three significant digits,
//! "mean (sd)" cells, aligned columns.

/// ~3 significant digits: 0.153 -> "0.15", 26.71 -> "26.7", 1279.3 -> "1279".
pub fn sig3(v: f64) -> String {
    if !v.is_finite() {
        return format!("{v}");
    }
    let a = v.abs();
    if a >= 100.0 {
        format!("{v:.0}")
    } else if a >= 10.0 {
        format!("{v:.1}")
    } else {
        format!("{v:.2}")
    }
}

pub fn mean_sd(mean: f64, sd: f64) -> String {
    format!("{} ({})", sig3(mean), sig3(sd))
}

/// Align rows under a header, space-padded.
pub fn render_table(header: &[&str], rows: &[Vec<String>]) -> String {
    let cols = header.len();
    let mut widths: Vec<usize> = header.iter().map(|h| h.len()).collect();
    for row in rows {
        for (j, cell) in row.iter().enumerate().take(cols) {
            widths[j] = widths[j].max(cell.len());
        }
    }
    let mut out = String::new();
    let fmt_row = |cells: Vec<String>, widths: &[usize]| -> String {
        let padded: Vec<String> = cells
            .iter()
            .zip(widths)
            .map(|(c, w)| format!("{c:<w$}", w = w))
            .collect();
        padded.join("  ").trim_end().to_string()
    };
    out.push_str(&fmt_row(
        header.iter().map(|s| s.to_string()).collect(),
        &widths,
    ));
    out.push('\n');
    let total: usize = widths.iter().sum::<usize>() + 2 * (cols - 1);
    out.push_str(&"-".repeat(total));
    out.push('\n');
    for row in rows {
        out.push_str(&fmt_row(row.clone(), &widths));
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn three_significant_digits() {
        assert_eq!(sig3(0.153), "0.15");
        assert_eq!(sig3(26.71), "26.7");
        assert_eq!(sig3(1279.3), "1279");
        assert_eq!(sig3(2.0), "2.00");
        assert_eq!(sig3(9.192), "9.19");
        assert_eq!(sig3(0.0), "0.00");
    }

    #[test]
    fn table_alignment() {
        let t = render_table(
            &["method", "value"],
            &[
                vec!["huber_scad".into(), "0.15 (0.00)".into()],
                vec!["rrr".into(), "80.0 (0.00)".into()],
            ],
        );
        let lines: Vec<&str> = t.lines().collect();
        assert!(lines[0].starts_with("method"));
        assert!(lines[2].starts_with("huber_scad"));
        assert!(lines[3].starts_with("rrr "));
    }
}
