//! Text summaries of written JSON reports.

use std::fmt::Write;

use serde_json::Value;

use crate::error::HarnessError;

fn num(v: &Value) -> String {
    match v.as_f64() {
        Some(x) => format!("{x:.6e}"),
        None => "n/a".into(),
    }
}

/// Summarizes a run, sweep, ck or verify report, recognised by its keys.
pub fn summarize(v: &Value) -> Result<String, HarnessError> {
    let mut s = String::new();
    if v.get("rows").is_some() {
        let _ = writeln!(s, "pair run at eps = {}", num(&v["eps"]));
        let _ = writeln!(s, "  sup W2            {}", num(&v["sup_w2"]));
        let _ = writeln!(s, "  sup Q             {}", num(&v["sup_q"]));
        let _ = writeln!(s, "  coupling misses   {}", v["coupling_violations"]);
        let _ = writeln!(s, "  Osgood C_min      {}", num(&v["osgood"]["c_min"]));
        let c = &v["conservation"];
        let _ = writeln!(s, "  <B> drift         {}", num(&c["mean_b_drift"]));
        let _ = writeln!(s, "  <j_vp> drift      {}", num(&c["mean_j_vp_drift"]));
        let _ = writeln!(s, "  momentum ledger   {}", num(&c["momentum_ledger_max"]));
        let _ = writeln!(s, "  energy drift      {}", num(&c["energy_rel_drift"]));
        let _ = writeln!(s, "  ledger C0         {}", num(&v["ledger"]["c0"]));
        if let Some(a) = v.get("aborted").filter(|a| !a.is_null()) {
            let _ = writeln!(s, "  aborted at t = {}: {}", num(&a["t"]), a["reason"]);
        }
    } else if let Some(entries) = v.get("entries").and_then(Value::as_array) {
        let _ = writeln!(s, "sweep over {} values of eps", entries.len());
        for e in entries {
            let _ = writeln!(s, "  eps {:<8} sup W2 {}  C_min {}", num(&e["eps"]), num(&e["sup_w2"]), num(&e["c_min"]));
        }
        let f = &v["fit"];
        let _ = writeln!(s, "  kappa_measured {}  R^2 {}", num(&f["kappa_measured"]), num(&f["r_squared"]));
        let _ = writeln!(s, "  monotone {}  partial {}", v["monotone"], v["partial"]);
    } else if let Some(it) = v.get("iteration") {
        let _ = writeln!(s, "CK iteration at eps = {}", num(&v["eps"]));
        let _ = writeln!(s, "  iterations {}  horizon {}", it["n_iters"], num(&it["horizon"]));
        let _ = writeln!(s, "  ratios {}", it["ratios"]);
        let _ = writeln!(s, "  stepping gap {}  contracts {}", num(&v["stepping_gap"]), v["contracts"]);
    } else if let Some(checks) = v.get("checks").and_then(Value::as_array) {
        for c in checks {
            let status = c["status"].as_str().unwrap_or("?");
            let _ = writeln!(s, "{:<14} {:<32} {}", status, c["name"].as_str().unwrap_or("?"), num(&c["measured"]));
        }
    } else {
        return Err(HarnessError::Validation("unrecognised report".into()));
    }
    Ok(s)
}
