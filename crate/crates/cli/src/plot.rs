//! SVG summary plots of a sweep report.

use std::collections::BTreeMap;

use anyhow::{anyhow, Context, Result};
use plotters::prelude::*;
use tubehom_core::harness::loglog_fit;

/// One row of report.csv.
#[derive(Clone, Debug)]
pub struct Row {
    pub epsilon: f64,
    pub t: f64,
    pub values: BTreeMap<String, f64>,
    pub fit: bool,
}

pub fn parse_rows(header: &[String], rows: &[Vec<String>]) -> Result<Vec<Row>> {
    let col = |name: &str| header.iter().position(|h| h == name).ok_or_else(|| anyhow!("report has no `{name}` column"));
    let (ie, it, iflag) = (col("epsilon")?, col("t")?, col("rate_flag")?);
    let numeric = ["l2_error", "sobolev2_error", "sobolev4_error"];
    let idx: Vec<usize> = numeric.iter().map(|n| col(n)).collect::<Result<_>>()?;
    rows.iter()
        .enumerate()
        .map(|(r, row)| {
            let num = |i: usize| row.get(i).and_then(|s| s.parse::<f64>().ok()).with_context(|| format!("row {} column {i}", r + 2));
            let mut values = BTreeMap::new();
            for (n, &i) in numeric.iter().zip(&idx) {
                values.insert(n.to_string(), num(i)?);
            }
            Ok(Row { epsilon: num(ie)?, t: num(it)?, values, fit: row.get(iflag).is_some_and(|f| f == "fit") })
        })
        .collect()
}

const COLORS: [RGBColor; 6] = [BLUE, RED, GREEN, MAGENTA, CYAN, BLACK];

/// Log-log plot of `column` against ε, one series per t, with the fitted slope in the legend.
pub fn error_plot(rows: &[Row], column: &str, title: &str) -> Result<String> {
    let usable: Vec<&Row> = rows.iter().filter(|r| r.values[column] > 0.0 && r.values[column].is_finite()).collect();
    if usable.is_empty() {
        return Err(anyhow!("no positive values of {column} to plot"));
    }
    let (xlo, xhi) = usable.iter().fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(r.epsilon), b.max(r.epsilon)));
    let (ylo, yhi) = usable.iter().fold((f64::INFINITY, 0.0f64), |(a, b), r| (a.min(r.values[column]), b.max(r.values[column])));
    let mut times: Vec<f64> = usable.iter().map(|r| r.t).collect();
    times.sort_by(f64::total_cmp);
    times.dedup();
    let mut svg = String::new();
    {
        let root = SVGBackend::with_string(&mut svg, (720, 520)).into_drawing_area();
        root.fill(&WHITE).map_err(|e| anyhow!("{e}"))?;
        let mut chart = ChartBuilder::on(&root)
            .caption(title, ("sans-serif", 20))
            .margin(12)
            .x_label_area_size(40)
            .y_label_area_size(70)
            .build_cartesian_2d((xlo * 0.9..xhi * 1.1).log_scale(), (ylo * 0.5..yhi * 2.0).log_scale())
            .map_err(|e| anyhow!("{e}"))?;
        chart
            .configure_mesh()
            .x_desc("epsilon")
            .y_desc(column)
            .y_label_formatter(&|y| format!("{y:.1e}"))
            .draw()
            .map_err(|e| anyhow!("{e}"))?;
        for (n, &t) in times.iter().enumerate() {
            let color = COLORS[n % COLORS.len()];
            let mut pts: Vec<(f64, f64)> = usable.iter().filter(|r| r.t == t).map(|r| (r.epsilon, r.values[column])).collect();
            pts.sort_by(|a, b| a.0.total_cmp(&b.0));
            let fitted: Vec<&&Row> = usable.iter().filter(|r| r.t == t && r.fit).collect();
            let fit = loglog_fit(&fitted.iter().map(|r| r.epsilon).collect::<Vec<_>>(), &fitted.iter().map(|r| r.values[column]).collect::<Vec<_>>());
            let label = match fit {
                Some(f) => format!("t = {t}, slope {:.2} ({} cells)", f.slope, f.points),
                None => format!("t = {t}, no fit"),
            };
            chart
                .draw_series(LineSeries::new(pts.clone(), color.stroke_width(2)))
                .map_err(|e| anyhow!("{e}"))?
                .label(label)
                .legend(move |(x, y)| PathElement::new(vec![(x, y), (x + 20, y)], color.stroke_width(2)));
            chart.draw_series(pts.iter().map(|p| Circle::new(*p, 4, color.filled()))).map_err(|e| anyhow!("{e}"))?;
        }
        chart
            .configure_series_labels()
            .position(SeriesLabelPosition::LowerRight)
            .background_style(WHITE.mix(0.8))
            .border_style(BLACK)
            .draw()
            .map_err(|e| anyhow!("{e}"))?;
        root.present().map_err(|e| anyhow!("{e}"))?;
    }
    Ok(svg)
}
