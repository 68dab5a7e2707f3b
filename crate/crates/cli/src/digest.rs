//! Plain-text digest of a report JSON.

use std::fmt::Write;

use serde_json::Value;

const ROWS: [(&str, &str); 5] =
    [("adr", "ADR"), ("ur_diagnostic", "UR"), ("uniform", "Uniform"), ("nta", "NTA"), ("chord_arc", "ChordArc")];

fn num(v: &Value) -> String {
    v.as_f64().map_or_else(|| "-".into(), |x| format!("{x:.4}"))
}

/// Verdict table plus the headline statistics; errors when `report` lacks
/// the verdicts section.
pub fn render(report: &Value) -> Result<String, String> {
    let verdicts = report.get("verdicts").and_then(Value::as_object).ok_or("report has no verdicts section")?;
    let mut out = String::new();
    let label = report["spec"]["label"].as_str().unwrap_or("?");
    let range = &verdicts["scale_range"];
    let _ = writeln!(out, "{label} at h = {}, seed {}", report["provenance"]["h"], report["provenance"]["seed"]);
    let _ = writeln!(out, "tested scales r in [{}, {}]", num(&range[0]), num(&range[1]));
    for (key, name) in ROWS {
        let v = &verdicts[key];
        let status = v["status"].as_str().unwrap_or("?");
        let _ = writeln!(
            out,
            "  {name:<9}{status:<9}stat {:<9}threshold {:<9}{}",
            num(&v["statistic"]),
            num(&v["threshold"]),
            v["detail"].as_str().unwrap_or("")
        );
    }
    if let Some(entries) = report["bwgl"]["entries"].as_array() {
        let norms: Vec<String> = entries.iter().map(|e| format!("ε={} → {}", e["eps"], num(&e["norm"]))).collect();
        let _ = writeln!(out, "BWGL Carleson norm: {}", norms.join(", "));
    }
    if let Some(entries) = report["packing"]["entries"].as_array() {
        let maxes: Vec<String> = entries.iter().map(|e| format!("c0={} → {}", e["c0"], num(&e["max"]))).collect();
        let _ = writeln!(out, "packing max: {}", maxes.join(", "));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_verdicts_is_an_error() {
        assert!(render(&serde_json::json!({ "spec": {} })).is_err());
    }

    #[test]
    fn renders_each_verdict() {
        let v = serde_json::json!({
            "spec": { "label": "disk:1" },
            "verdicts": {
                "scale_range": [0.1, 0.5],
                "adr": { "status": "pass", "statistic": 2.0, "threshold": 8.0, "detail": "d" },
                "ur_diagnostic": { "status": "fail", "statistic": 0.7, "threshold": 0.35, "detail": "d" },
                "uniform": { "status": "pass", "statistic": null, "threshold": null, "detail": "d" },
                "nta": { "status": "untested", "statistic": null, "threshold": null, "detail": "d" },
                "chord_arc": { "status": "fail", "statistic": null, "threshold": null, "detail": "d" }
            },
            "provenance": { "h": 0.005, "seed": 0 }
        });
        let text = render(&v).unwrap();
        assert!(text.starts_with("disk:1 at h = 0.005, seed 0\n"));
        assert!(text.contains("UR       fail"));
        assert!(text.contains("NTA      untested"));
    }
}
