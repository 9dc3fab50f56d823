//! Self-contained SVG bar chart of per-estimator means with 95% CI
//! whiskers. Pure text emission, no plotting dependency.

use crate::runner::AggregateRow;
use proxyreg::solvers::LossFamily;

const WIDTH: f64 = 640.0;
const HEIGHT: f64 = 400.0;
const MARGIN_LEFT: f64 = 70.0;
const MARGIN_BOTTOM: f64 = 70.0;
const MARGIN_TOP: f64 = 30.0;

pub fn error_bars_svg(rows: &[AggregateRow], loss: LossFamily) -> String {
    let (metric, ci, title): (Vec<Option<f64>>, Vec<Option<f64>>, &str) = match loss {
        LossFamily::Squared => (
            rows.iter().map(|r| r.mean_l2sq).collect(),
            rows.iter().map(|r| r.ci95_l2sq).collect(),
            "mean squared L2 parameter error (95% CI)",
        ),
        LossFamily::Logistic => (
            rows.iter().map(|r| r.mean_auc).collect(),
            rows.iter().map(|r| r.ci95_auc).collect(),
            "mean AUC (95% CI)",
        ),
    };
    let max_val = metric
        .iter()
        .zip(&ci)
        .filter_map(|(m, c)| m.map(|m| m + c.unwrap_or(0.0)))
        .fold(0.0f64, f64::max)
        .max(1e-12);

    let plot_w = WIDTH - MARGIN_LEFT - 20.0;
    let plot_h = HEIGHT - MARGIN_TOP - MARGIN_BOTTOM;
    let n = rows.len().max(1) as f64;
    let slot = plot_w / n;
    let bar_w = slot * 0.6;
    let y_of = |v: f64| MARGIN_TOP + plot_h * (1.0 - v / max_val);

    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{WIDTH}\" height=\"{HEIGHT}\" viewBox=\"0 0 {WIDTH} {HEIGHT}\">\n"
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"18\" font-size=\"14\" text-anchor=\"middle\">{title}</text>\n",
        WIDTH / 2.0
    ));
    // axes
    s.push_str(&format!(
        "<line x1=\"{MARGIN_LEFT}\" y1=\"{}\" x2=\"{}\" y2=\"{}\" stroke=\"black\"/>\n",
        MARGIN_TOP + plot_h,
        WIDTH - 20.0,
        MARGIN_TOP + plot_h
    ));
    s.push_str(&format!(
        "<line x1=\"{MARGIN_LEFT}\" y1=\"{MARGIN_TOP}\" x2=\"{MARGIN_LEFT}\" y2=\"{}\" stroke=\"black\"/>\n",
        MARGIN_TOP + plot_h
    ));
    // y ticks
    for k in 0..=4 {
        let v = max_val * k as f64 / 4.0;
        let y = y_of(v);
        s.push_str(&format!(
            "<line x1=\"{}\" y1=\"{y}\" x2=\"{MARGIN_LEFT}\" y2=\"{y}\" stroke=\"black\"/>\n",
            MARGIN_LEFT - 5.0
        ));
        s.push_str(&format!(
            "<text x=\"{}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\">{v:.3}</text>\n",
            MARGIN_LEFT - 8.0,
            y + 4.0
        ));
    }
    for (i, row) in rows.iter().enumerate() {
        let cx = MARGIN_LEFT + slot * (i as f64 + 0.5);
        if let Some(m) = metric[i] {
            let y = y_of(m);
            s.push_str(&format!(
                "<rect x=\"{}\" y=\"{y}\" width=\"{bar_w}\" height=\"{}\" fill=\"#4878a8\"/>\n",
                cx - bar_w / 2.0,
                MARGIN_TOP + plot_h - y
            ));
            if let Some(c) = ci[i] {
                let (y_lo, y_hi) = (y_of(m - c), y_of(m + c));
                s.push_str(&format!(
                    "<line x1=\"{cx}\" y1=\"{y_hi}\" x2=\"{cx}\" y2=\"{y_lo}\" stroke=\"black\"/>\n"
                ));
                for yy in [y_hi, y_lo] {
                    s.push_str(&format!(
                        "<line x1=\"{}\" y1=\"{yy}\" x2=\"{}\" y2=\"{yy}\" stroke=\"black\"/>\n",
                        cx - 6.0,
                        cx + 6.0
                    ));
                }
            }
        }
        s.push_str(&format!(
            "<text x=\"{cx}\" y=\"{}\" font-size=\"11\" text-anchor=\"end\" transform=\"rotate(-35 {cx} {})\">{}</text>\n",
            MARGIN_TOP + plot_h + 16.0,
            MARGIN_TOP + plot_h + 16.0,
            row.estimator
        ));
    }
    s.push_str("</svg>\n");
    s
}
