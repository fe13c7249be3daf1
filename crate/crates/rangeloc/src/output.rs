//! CSV emission, summary metrics, and the gnuplot companion script.
//!
//! The CSV schemas are frozen: `agents.csv` has header
//! `round,agent,px,py,vx,vy,radius`, `edges.csv` has header
//! `round,i,j,d_true,d_hat,vij_true_x,vij_true_y,vij_hat_x,vij_hat_y,residual`,
//! rows are round-major, numbers carry 12 significant digits, and
//! unavailable estimates print as `nan`.

use std::fs;
use std::io;
use std::path::Path;

use crate::num::Real;
use crate::simulator::TimeSeries;

/// Decimal with 12 significant digits, fixed notation in a wide exponent
/// band and scientific outside it; trailing zeros trimmed.
pub fn fmt_sig(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let exp = x.abs().log10().floor() as i32;
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let s = format!("{:.*}", decimals, x);
        trim_fixed(s)
    } else {
        let s = format!("{:.11e}", x);
        trim_scientific(s)
    }
}

fn trim_fixed(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let trimmed = s.trim_end_matches('0').trim_end_matches('.');
    trimmed.to_string()
}

fn trim_scientific(s: String) -> String {
    let Some((mantissa, exp)) = s.split_once('e') else {
        return s;
    };
    let mantissa = if mantissa.contains('.') {
        mantissa.trim_end_matches('0').trim_end_matches('.')
    } else {
        mantissa
    };
    format!("{mantissa}e{exp}")
}

fn fmt_opt<T: Real>(x: Option<T>) -> String {
    match x {
        Some(v) => fmt_sig(v.to_f64()),
        None => "nan".into(),
    }
}

/// Episode-level metrics derived from a time series.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SummaryMetrics {
    pub final_disagreement: f64,
    pub final_shape_error: f64,
    /// First round whose disagreement fell below the threshold the summary
    /// was computed with; `None` if it never did.
    pub rounds_to_disagreement_below: Option<usize>,
    /// Largest |d_hat - d_true| over all recorded edge estimates.
    pub max_estimate_error: f64,
}

pub const SUMMARY_DISAGREEMENT_THRESHOLD: f64 = 0.1;

pub fn summarize<T: Real>(ts: &TimeSeries<T>, disagreement_threshold: f64) -> SummaryMetrics {
    let max_estimate_error = ts
        .edge_rows
        .iter()
        .filter_map(|r| r.d_hat.map(|dh| (dh - r.d_true).abs().to_f64()))
        .fold(0.0, f64::max);
    SummaryMetrics {
        final_disagreement: ts.final_disagreement().to_f64(),
        final_shape_error: ts.final_shape_error().to_f64(),
        rounds_to_disagreement_below: ts
            .rounds_to_disagreement_below(T::from_f64(disagreement_threshold)),
        max_estimate_error,
    }
}

pub fn agents_csv<T: Real>(ts: &TimeSeries<T>) -> String {
    let mut out = String::from("round,agent,px,py,vx,vy,radius\n");
    for r in &ts.agent_rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.round,
            r.agent + 1,
            fmt_sig(r.center.x.to_f64()),
            fmt_sig(r.center.y.to_f64()),
            fmt_sig(r.velocity.x.to_f64()),
            fmt_sig(r.velocity.y.to_f64()),
            fmt_sig(r.radius.to_f64()),
        ));
    }
    out
}

pub fn edges_csv<T: Real>(ts: &TimeSeries<T>) -> String {
    let mut out =
        String::from("round,i,j,d_true,d_hat,vij_true_x,vij_true_y,vij_hat_x,vij_hat_y,residual\n");
    for r in &ts.edge_rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{},{},{}\n",
            r.round,
            r.i + 1,
            r.j + 1,
            fmt_sig(r.d_true.to_f64()),
            fmt_opt(r.d_hat),
            fmt_sig(r.v_rel_true.x.to_f64()),
            fmt_sig(r.v_rel_true.y.to_f64()),
            fmt_opt(r.v_rel_hat.map(|v| v.x)),
            fmt_opt(r.v_rel_hat.map(|v| v.y)),
            fmt_opt(r.residual),
        ));
    }
    out
}

pub fn summary_csv(metrics: &SummaryMetrics) -> String {
    let rounds = match metrics.rounds_to_disagreement_below {
        Some(r) => r.to_string(),
        None => "-1".into(),
    };
    format!(
        "final_disagreement,final_shape_error,rounds_to_disagreement_below_{},max_estimate_error\n{},{},{},{}\n",
        fmt_sig(SUMMARY_DISAGREEMENT_THRESHOLD),
        fmt_sig(metrics.final_disagreement),
        fmt_sig(metrics.final_shape_error),
        rounds,
        fmt_sig(metrics.max_estimate_error),
    )
}

/// Gnuplot script rendering center trajectories, per-round velocity
/// disagreement, radii, and the per-edge distance error.
pub fn plot_script<T: Real>(ts: &TimeSeries<T>) -> String {
    let mut s = String::new();
    s.push_str("# gnuplot script; run from the output directory:\n");
    s.push_str("#   gnuplot plot.gp\n");
    s.push_str("set datafile separator ','\n");
    s.push_str("set terminal pngcairo size 1400,1000\n");
    s.push_str("set output 'episode.png'\n");
    s.push_str("set multiplot layout 2,2\n");
    s.push_str("set key outside\n");
    s.push_str("set title 'center trajectories'\n");
    s.push_str("set xlabel 'x [m]'\nset ylabel 'y [m]'\n");
    s.push_str("plot ");
    let traj: Vec<String> = (1..=ts.n_agents)
        .map(|a| {
            format!(
                "'agents.csv' skip 1 using ($2=={a}?$3:NaN):4 with lines title 'agent {a}'"
            )
        })
        .collect();
    s.push_str(&traj.join(", \\\n     "));
    s.push('\n');
    s.push_str("set title 'velocity components'\n");
    s.push_str("set xlabel 'round'\nset ylabel 'v [m/s]'\n");
    s.push_str("plot ");
    let vels: Vec<String> = (1..=ts.n_agents)
        .flat_map(|a| {
            [
                format!("'agents.csv' skip 1 using 1:($2=={a}?$5:NaN) with lines title 'vx {a}'"),
                format!("'agents.csv' skip 1 using 1:($2=={a}?$6:NaN) with lines title 'vy {a}'"),
            ]
        })
        .collect();
    s.push_str(&vels.join(", \\\n     "));
    s.push('\n');
    s.push_str("set title 'excitation radii'\n");
    s.push_str("set xlabel 'round'\nset ylabel 'r [m]'\n");
    s.push_str("plot ");
    let radii: Vec<String> = (1..=ts.n_agents)
        .map(|a| {
            format!("'agents.csv' skip 1 using 1:($2=={a}?$7:NaN) with lines title 'agent {a}'")
        })
        .collect();
    s.push_str(&radii.join(", \\\n     "));
    s.push('\n');
    s.push_str("set title 'edge distances: true vs estimated'\n");
    s.push_str("set xlabel 'round'\nset ylabel 'd [m]'\n");
    s.push_str(
        "plot 'edges.csv' skip 1 using 1:4 with lines title 'd true', \\\n     'edges.csv' skip 1 using 1:5 with points pt 7 ps 0.3 title 'd est'\n",
    );
    s.push_str("unset multiplot\n");
    s
}

/// Write `agents.csv`, `edges.csv`, `summary.csv`, and `plot.gp` into `dir`
/// (created if missing).
pub fn write_timeseries<T: Real>(ts: &TimeSeries<T>, dir: &Path) -> io::Result<SummaryMetrics> {
    fs::create_dir_all(dir)?;
    let metrics = summarize(ts, SUMMARY_DISAGREEMENT_THRESHOLD);
    fs::write(dir.join("agents.csv"), agents_csv(ts))?;
    fs::write(dir.join("edges.csv"), edges_csv(ts))?;
    fs::write(dir.join("summary.csv"), summary_csv(&metrics))?;
    fs::write(dir.join("plot.gp"), plot_script(ts))?;
    Ok(metrics)
}
