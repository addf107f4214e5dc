//! Gnuplot data files and scripts.

use std::io::Write;
use std::path::Path;

use crate::CliError;

/// Whitespace-separated columns with a `#` header line.
pub fn write_dat(path: &Path, columns: &[&str], rows: &[Vec<f64>]) -> Result<(), CliError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "# {}", columns.join(" "))?;
    for row in rows {
        let line: Vec<String> = row.iter().map(|v| format!("{v:.17e}")).collect();
        writeln!(w, "{}", line.join(" "))?;
    }
    w.flush()?;
    Ok(())
}

pub struct PlotSpec<'a> {
    pub title: &'a str,
    pub xlabel: &'a str,
    pub ylabel: &'a str,
    pub logscale_y: bool,
    /// 1-based data column for each curve, plotted against column 1
    pub series: &'a [(usize, &'a str)],
}

/// Writes `<stem>.plt`, which renders `<stem>.dat` to `<stem>.png`.
pub fn write_plt(dir: &Path, stem: &str, spec: &PlotSpec) -> Result<(), CliError> {
    let mut w = std::io::BufWriter::new(std::fs::File::create(dir.join(format!("{stem}.plt")))?);
    writeln!(w, "set terminal pngcairo size 900,600")?;
    writeln!(w, "set output '{stem}.png'")?;
    writeln!(w, "set title '{}'", spec.title)?;
    writeln!(w, "set xlabel '{}'", spec.xlabel)?;
    writeln!(w, "set ylabel '{}'", spec.ylabel)?;
    if spec.logscale_y {
        writeln!(w, "set logscale y")?;
    }
    let curves: Vec<String> = spec
        .series
        .iter()
        .map(|(col, name)| format!("'{stem}.dat' using 1:{col} with lines title '{name}'"))
        .collect();
    writeln!(w, "plot {}", curves.join(", \\\n     "))?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dat_and_plt_layout() {
        let dir = tempfile::tempdir().unwrap();
        write_dat(&dir.path().join("e.dat"), &["t", "E"], &[vec![0.0, 1.5], vec![0.5, 1.25]]).unwrap();
        let text = std::fs::read_to_string(dir.path().join("e.dat")).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "# t E");
        let row: Vec<f64> = lines[2].split_whitespace().map(|x| x.parse().unwrap()).collect();
        assert_eq!(row, vec![0.5, 1.25]);

        let spec =
            PlotSpec { title: "energy", xlabel: "t", ylabel: "E", logscale_y: true, series: &[(2, "E")] };
        write_plt(dir.path(), "e", &spec).unwrap();
        let plt = std::fs::read_to_string(dir.path().join("e.plt")).unwrap();
        assert!(plt.contains("plot 'e.dat' using 1:2 with lines title 'E'"));
        assert!(plt.contains("set logscale y"));
    }
}
