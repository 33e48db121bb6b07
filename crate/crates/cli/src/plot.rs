//! Gnuplot scripts for the files written by the other subcommands.

use std::collections::BTreeSet;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::config::PlotKind;
use crate::error::CliError;

pub const STAIRCASE_HEADER: &str = "epsilon,count";
pub const STATES_HEADER: &str = "state,epsilon,x,density,potential";
pub const SPECTRUM_HEADER: &str = "index,epsilon,participation_ratio";
pub const CLUSTERS_HEADER: &str = "cluster,epsilon";
pub const SWEEP_HEADER: &str =
    "mu,grid_nodes,count_below_zero,window_count,min_epsilon,max_epsilon,mean_participation_lowest10";

/// Guesses the kind from the first non-blank line.
pub fn detect_kind(text: &str) -> Option<PlotKind> {
    let first = text.lines().map(str::trim).find(|l| !l.is_empty())?;
    match first {
        STAIRCASE_HEADER => Some(PlotKind::Staircase),
        STATES_HEADER => Some(PlotKind::States),
        SPECTRUM_HEADER => Some(PlotKind::Spectrum),
        CLUSTERS_HEADER => Some(PlotKind::Clusters),
        SWEEP_HEADER => Some(PlotKind::Sweep),
        _ => {
            let fields: Vec<&str> = first.split_whitespace().collect();
            (fields.len() == 3 && fields.iter().all(|f| f.parse::<f64>().is_ok()))
                .then_some(PlotKind::Potential)
        }
    }
}

fn quote(path: &Path) -> String {
    format!("'{}'", path.display().to_string().replace('\'', "''"))
}

/// Reads `data_path` and returns a script that plots it. A missing file is
/// [`CliError::MissingData`].
pub fn emit_plot_script(kind: Option<PlotKind>, data_path: &Path) -> Result<String, CliError> {
    let text = fs::read_to_string(data_path).map_err(|e| {
        CliError::MissingData(format!(
            "cannot read data file {}: {e}",
            data_path.display()
        ))
    })?;
    let kind = kind.or_else(|| detect_kind(&text));
    let rows: Vec<&str> = text
        .lines()
        .map(str::trim)
        .filter(|l| !l.is_empty() && !l.starts_with('#'))
        .skip(usize::from(kind.is_some_and(|k| k != PlotKind::Potential)))
        .collect();
    let file = quote(data_path);

    let mut s = String::new();
    let _ = writeln!(s, "# gnuplot script for {}", data_path.display());
    let Some(kind) = kind else {
        if rows.is_empty() {
            empty_plot(&mut s, data_path);
            return Ok(s);
        }
        return Err(CliError::config(format!(
            "cannot tell what {} holds; pass --kind",
            data_path.display()
        )));
    };
    if kind == PlotKind::Potential {
        s.push_str("set datafile separator whitespace\n");
    } else {
        s.push_str("set datafile separator ','\n");
    }
    if rows.is_empty() {
        empty_plot(&mut s, data_path);
        return Ok(s);
    }
    match kind {
        PlotKind::Staircase => {
            s.push_str("set key off\nset xlabel 'epsilon'\nset ylabel 'N(epsilon)'\n");
            let _ = writeln!(s, "plot {file} skip 1 using 1:2 with steps lw 2");
        }
        PlotKind::States => {
            let ids: BTreeSet<u64> = rows
                .iter()
                .filter_map(|r| r.split(',').next()?.parse().ok())
                .collect();
            let ids: Vec<String> = ids.iter().map(u64::to_string).collect();
            let first = &ids[0];
            s.push_str(
                "set key outside\nset xlabel 'x'\nset ylabel '|psi|^2'\nset y2label 'v(x)'\n\
                 set xrange [0:1]\nset y2range [-1.1:1.1]\nset ytics nomirror\nset y2tics\n",
            );
            let _ = writeln!(
                s,
                "plot for [s in \"{}\"] {file} skip 1 using 3:($1 == s+0 ? $4 : 1/0) with lines title sprintf('state %s', s), \\",
                ids.join(" ")
            );
            let _ = writeln!(
                s,
                "     {file} skip 1 using 3:($1 == {first} ? $5 : 1/0) axes x1y2 with steps lc rgb 'gray' title 'v(x)'"
            );
        }
        PlotKind::Potential => {
            s.push_str(
                "set key off\nset xlabel 'x'\nset ylabel 'v(x)'\nset xrange [0:1]\n\
                 set yrange [-1.1:1.1]\nset style fill solid 0.4\n",
            );
            let _ = writeln!(s, "plot {file} using (($1+$2)/2):3:($2-$1) with boxes");
        }
        PlotKind::Spectrum => {
            s.push_str("set key off\nset xlabel 'epsilon'\nset ylabel 'participation ratio'\n");
            let _ = writeln!(s, "plot {file} skip 1 using 2:3 with impulses lw 2");
        }
        PlotKind::Clusters => {
            s.push_str("set key off\nset xlabel 'epsilon'\nset ylabel 'cluster'\n");
            let _ = writeln!(
                s,
                "plot {file} skip 1 using 2:1:1 with points pt 7 lc variable"
            );
        }
        PlotKind::Sweep => {
            s.push_str(
                "set key off\nset logscale x\nset xlabel 'mu'\nset ylabel 'levels below 0'\n",
            );
            let _ = writeln!(s, "plot {file} skip 1 using 1:3 with linespoints");
        }
    }
    Ok(s)
}

fn empty_plot(s: &mut String, data_path: &Path) {
    let _ = writeln!(
        s,
        "# warning: {} has no data rows, the plot range is empty",
        data_path.display()
    );
    s.push_str("set key off\nset xrange [0:1]\nset yrange [0:1]\nplot NaN notitle\n");
}
