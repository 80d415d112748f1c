//! Output writers: CSV with embedded resolved-config provenance, a metadata
//! JSON sidecar, and an optional diagnostic-quality SVG rendering.

use std::io::Write;
use std::path::Path;

use sha2::{Digest, Sha256};

use crate::experiments::{FidelityMap, Table};

pub fn config_hash(resolved_json: &str) -> String {
    let mut hasher = Sha256::new();
    hasher.update(resolved_json.as_bytes());
    hex_string(&hasher.finalize())
}

fn hex_string(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

fn fmt_value(v: f64) -> String {
    if v == 0.0 {
        "0".to_string()
    } else {
        format!("{v:.12e}")
    }
}

/// CSV body: provenance comments, a unit-annotated header row, then data rows.
/// Byte-reproducible for a given resolved config (no timestamps).
pub fn write_csv(path: &Path, resolved_json: &str, table: &Table) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "# ecd-lab output")?;
    writeln!(f, "# resolved-config: {resolved_json}")?;
    writeln!(f, "# config-sha256: {}", config_hash(resolved_json))?;
    writeln!(f, "{}", table.columns.join(","))?;
    for row in &table.rows {
        let line: Vec<String> = row.iter().map(|v| fmt_value(*v)).collect();
        writeln!(f, "{}", line.join(","))?;
    }
    Ok(())
}

/// Comparison CSV with the geometric-mean summary row appended.
pub fn write_compare_csv(
    path: &Path,
    resolved_json: &str,
    table: &Table,
    geomean: f64,
) -> std::io::Result<()> {
    let mut f = std::fs::File::create(path)?;
    writeln!(f, "# ecd-lab comparison output")?;
    writeln!(f, "# resolved-config: {resolved_json}")?;
    writeln!(f, "# config-sha256: {}", config_hash(resolved_json))?;
    writeln!(f, "{}", table.columns.join(","))?;
    for row in &table.rows {
        let line: Vec<String> = row.iter().map(|v| fmt_value(*v)).collect();
        writeln!(f, "{}", line.join(","))?;
    }
    let blanks = vec![String::new(); table.columns.len() - 1];
    writeln!(f, "geomean,{}{}", blanks.join(","), fmt_value(geomean))?;
    Ok(())
}

pub fn write_meta(path: &Path, resolved_json: &str, warnings: &[String]) -> std::io::Result<()> {
    let meta = serde_json::json!({
        "tool": "ecd-lab",
        "version": env!("CARGO_PKG_VERSION"),
        "config_sha256": config_hash(resolved_json),
        "resolved_config": serde_json::from_str::<serde_json::Value>(resolved_json)
            .expect("resolved config is valid JSON"),
        "warnings": warnings,
        "generated_unix_time": std::time::SystemTime::now()
            .duration_since(std::time::UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
    });
    std::fs::write(path, serde_json::to_string_pretty(&meta)?)
}

const SVG_W: f64 = 720.0;
const SVG_H: f64 = 480.0;
const MARGIN: f64 = 60.0;

/// Minimal line plot (first axis column vs last value column, log-y when the
/// data spans decades). Diagnostic quality only — the CSV is the contract.
pub fn write_line_svg(
    path: &Path,
    resolved_json: &str,
    table: &Table,
    title: &str,
) -> std::io::Result<()> {
    let n = table.columns.len();
    let xs: Vec<f64> = table.rows.iter().map(|r| r[0]).collect();
    let ys: Vec<f64> = table.rows.iter().map(|r| r[n - 1]).collect();
    let valid: Vec<(f64, f64)> =
        xs.iter().zip(&ys).filter(|(_, y)| **y >= 0.0).map(|(x, y)| (*x, *y)).collect();
    if valid.len() < 2 {
        return Ok(());
    }
    let ymin = valid.iter().map(|p| p.1).fold(f64::INFINITY, f64::min).max(1e-16);
    let ymax = valid.iter().map(|p| p.1).fold(0.0, f64::max).max(ymin * 1.0001);
    let logy = ymax / ymin > 100.0;
    let (xmin, xmax) = (
        valid.iter().map(|p| p.0).fold(f64::INFINITY, f64::min),
        valid.iter().map(|p| p.0).fold(f64::NEG_INFINITY, f64::max),
    );
    let tx = |x: f64| MARGIN + (x - xmin) / (xmax - xmin) * (SVG_W - 2.0 * MARGIN);
    let ty = |y: f64| {
        let s = if logy {
            ((y.max(1e-16)).ln() - ymin.ln()) / (ymax.ln() - ymin.ln())
        } else {
            (y - ymin) / (ymax - ymin)
        };
        SVG_H - MARGIN - s * (SVG_H - 2.0 * MARGIN)
    };
    let pts: Vec<String> =
        valid.iter().map(|(x, y)| format!("{:.2},{:.2}", tx(*x), ty(*y))).collect();
    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\">\n"
    ));
    s.push_str(&format!("<!-- config-sha256: {} -->\n", config_hash(resolved_json)));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    s.push_str(&format!(
        "<text x=\"{}\" y=\"24\" font-size=\"14\">{} (diagnostic quality)</text>\n",
        MARGIN, title
    ));
    s.push_str(&format!(
        "<line x1=\"{m}\" y1=\"{b}\" x2=\"{r}\" y2=\"{b}\" stroke=\"black\"/>\n<line x1=\"{m}\" y1=\"{t}\" x2=\"{m}\" y2=\"{b}\" stroke=\"black\"/>\n",
        m = MARGIN,
        b = SVG_H - MARGIN,
        r = SVG_W - MARGIN,
        t = MARGIN
    ));
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\">{}</text>\n",
        SVG_W / 2.0 - 40.0,
        SVG_H - 18.0,
        xml_escape(&table.columns[0])
    ));
    s.push_str(&format!(
        "<text x=\"12\" y=\"{}\" font-size=\"12\" transform=\"rotate(-90 12 {})\">{}{}</text>\n",
        SVG_H / 2.0,
        SVG_H / 2.0,
        if logy { "log " } else { "" },
        xml_escape(&table.columns[n - 1])
    ));
    s.push_str(&format!(
        "<polyline points=\"{}\" fill=\"none\" stroke=\"#1f6feb\" stroke-width=\"1.5\"/>\n",
        pts.join(" ")
    ));
    s.push_str("</svg>\n");
    std::fs::write(path, s)
}

/// Minimal heatmap of log10(infidelity); failed points (sentinel −1) in grey.
pub fn write_heatmap_svg(
    path: &Path,
    resolved_json: &str,
    map: &FidelityMap,
    title: &str,
) -> std::io::Result<()> {
    let (n1, n2) = (map.axis1.len(), map.axis2.len());
    let valid: Vec<f64> = map
        .infidelity
        .iter()
        .flatten()
        .copied()
        .filter(|v| *v >= 0.0)
        .map(|v| v.max(1e-16).log10())
        .collect();
    if valid.is_empty() {
        return Ok(());
    }
    let lo = valid.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = valid.iter().cloned().fold(f64::NEG_INFINITY, f64::max).max(lo + 1e-9);
    let cell_w = (SVG_W - 2.0 * MARGIN) / n1 as f64;
    let cell_h = (SVG_H - 2.0 * MARGIN) / n2 as f64;
    let mut s = String::new();
    s.push_str(&format!(
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_W}\" height=\"{SVG_H}\">\n"
    ));
    s.push_str(&format!("<!-- config-sha256: {} -->\n", config_hash(resolved_json)));
    s.push_str("<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n");
    s.push_str(&format!(
        "<text x=\"{MARGIN}\" y=\"24\" font-size=\"14\">{} (diagnostic quality; log10 infidelity {:.1}..{:.1})</text>\n",
        title, lo, hi
    ));
    for i in 0..n1 {
        for j in 0..n2 {
            let v = map.infidelity[i][j];
            let color = if v < 0.0 {
                "rgb(128,128,128)".to_string()
            } else {
                // dark blue (low infidelity) → yellow (high)
                let t = ((v.max(1e-16).log10() - lo) / (hi - lo)).clamp(0.0, 1.0);
                let r = (20.0 + 235.0 * t) as u8;
                let g = (30.0 + 190.0 * t) as u8;
                let b = (120.0 * (1.0 - t) + 40.0) as u8;
                format!("rgb({r},{g},{b})")
            };
            let x = MARGIN + i as f64 * cell_w;
            let y = SVG_H - MARGIN - (j + 1) as f64 * cell_h;
            s.push_str(&format!(
                "<rect x=\"{x:.2}\" y=\"{y:.2}\" width=\"{cell_w:.2}\" height=\"{cell_h:.2}\" fill=\"{color}\"/>\n"
            ));
        }
    }
    s.push_str(&format!(
        "<text x=\"{}\" y=\"{}\" font-size=\"12\">{}</text>\n",
        SVG_W / 2.0 - 40.0,
        SVG_H - 18.0,
        xml_escape(&map.axis1_name)
    ));
    s.push_str(&format!(
        "<text x=\"12\" y=\"{}\" font-size=\"12\" transform=\"rotate(-90 12 {})\">{}</text>\n",
        SVG_H / 2.0,
        SVG_H / 2.0,
        xml_escape(&map.axis2_name)
    ));
    s.push_str("</svg>\n");
    std::fs::write(path, s)
}

fn xml_escape(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_is_byte_deterministic() {
        let t = Table {
            columns: vec!["x (-)".into(), "y (-)".into()],
            n_axis: 1,
            rows: vec![vec![1.0, 0.5], vec![2.0, 1e-9]],
        };
        let dir = std::env::temp_dir().join("ecd_csv_test");
        std::fs::create_dir_all(&dir).unwrap();
        let p1 = dir.join("a.csv");
        let p2 = dir.join("b.csv");
        write_csv(&p1, "{\"k\":1}", &t).unwrap();
        write_csv(&p2, "{\"k\":1}", &t).unwrap();
        assert_eq!(std::fs::read(&p1).unwrap(), std::fs::read(&p2).unwrap());
        let body = std::fs::read_to_string(&p1).unwrap();
        assert!(body.contains("# config-sha256:"));
        assert!(body.contains("x (-),y (-)"));
    }
}
