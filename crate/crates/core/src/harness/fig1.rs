//! The capacity-curve figure: per-user capacity against blocklength for
//! four user-growth laws at P = 2 and a quarter of the users active on
//! average. The n^3 curve sits at zero across the whole grid (the activity
//! penalty exceeds the genie capacity) and slower growth lifts the curve.

use crate::capacity::{log_grid, sweep_capacity};
use crate::error::Result;
use crate::params::{GrowthForm, ScalingLaw, Units};
use crate::report::{fmt_f64, line_plot, Csv, Series};

const CURVES: [(&str, f64); 4] = [("ell=n", 1.0), ("ell=n^1.5", 1.5), ("ell=n^2", 2.0), ("ell=n^3", 3.0)];
const POWER: f64 = 2.0;
const N_MIN: u32 = 100;
const N_MAX: u32 = 10_000;
const POINTS: usize = 25;

/// The figure as data plus rendered plot.
#[derive(Debug, Clone)]
pub struct Fig1Output {
    pub csv: Csv,
    pub svg: String,
}

/// Sweeps all four growth laws over a log-spaced grid and renders the
/// curves. Capacity is plotted in the requested units; the CSV always
/// carries both.
pub fn run_fig1(units: Units) -> Result<Fig1Output> {
    let grid = log_grid(N_MIN, N_MAX, POINTS)?;
    let mut csv = Csv::new("curve,n,ell,alpha,k,c1_nats,theta,capacity_nats,capacity_bits");
    csv.meta("power", POWER)
        .meta("k_of_n", "0.25*n")
        .meta("n_min", N_MIN)
        .meta("n_max", N_MAX)
        .meta("points", POINTS)
        .meta("units", units.label());
    let mut series = Vec::new();
    for (label, exp) in CURVES {
        let law = ScalingLaw::new(
            GrowthForm::power_law(1.0, exp)?,
            GrowthForm::power_law(0.25, 1.0)?,
            POWER,
        )?;
        let rows = sweep_capacity(&law, &grid)?;
        let mut points = Vec::with_capacity(rows.len());
        for row in &rows {
            csv.row(&[
                label.to_string(),
                row.n.to_string(),
                fmt_f64(row.ell),
                fmt_f64(row.alpha),
                fmt_f64(row.k),
                fmt_f64(row.c1_nats),
                fmt_f64(row.theta),
                fmt_f64(row.capacity_nats),
                fmt_f64(row.capacity_bits()),
            ]);
            points.push((row.n as f64, units.from_nats(row.capacity_nats)));
        }
        series.push(Series { label: label.to_string(), points });
    }
    let y_label = format!("per-user capacity ({})", units.label());
    let svg = line_plot("Per-user capacity vs blocklength", "n", &y_label, &series);
    Ok(Fig1Output { csv, svg })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cubic_curve_is_zero_and_ordering_holds() {
        let out = run_fig1(Units::Nats).unwrap();
        let text = out.csv.render();
        let mut by_curve: std::collections::BTreeMap<&str, Vec<(u32, f64)>> =
            std::collections::BTreeMap::new();
        for line in text.lines().filter(|l| !l.starts_with('#')).skip(1) {
            let fields: Vec<&str> = line.split(',').collect();
            by_curve.entry(match fields[0] {
                "ell=n" => "a",
                "ell=n^1.5" => "b",
                "ell=n^2" => "c",
                "ell=n^3" => "d",
                other => panic!("unexpected curve {other}"),
            })
            .or_default()
            .push((fields[1].parse().unwrap(), fields[7].parse().unwrap()));
        }
        assert_eq!(by_curve.len(), 4);
        let linear = &by_curve["a"];
        let quad = &by_curve["c"];
        let cubic = &by_curve["d"];
        assert_eq!(linear.len(), 25);
        assert!(cubic.iter().all(|&(_, c)| c == 0.0));
        for ((na, ca), (nc, cc)) in linear.iter().zip(quad) {
            assert_eq!(na, nc);
            assert!(ca > cc, "n={na}: {ca} <= {cc}");
        }
        // Nonlinear growth: the linear-law curve more than doubles over a
        // doubling of n near the top of the grid.
        let first = linear.first().unwrap().1;
        let last = linear.last().unwrap().1;
        assert!(last > first);
        assert!(out.svg.contains("ell=n^3"));
    }

    #[test]
    fn reruns_are_byte_identical() {
        let a = run_fig1(Units::Nats).unwrap();
        let b = run_fig1(Units::Nats).unwrap();
        assert_eq!(a.csv.render(), b.csv.render());
        assert_eq!(a.svg, b.svg);
    }
}
