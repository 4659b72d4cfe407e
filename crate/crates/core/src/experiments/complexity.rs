// SPDX-License-Identifier: Apache-2.0

use serde::{Deserialize, Serialize};

use crate::baselines::{FeatureMode, MlpSpec, RnnSpec};
use crate::model::{count_macs_per_window, count_parameters, feedforward_parameter_count, VarnnSpec};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ComplexityRow {
    pub model: String,
    pub d: usize,
    pub m: Option<usize>,
    pub k: usize,
    pub w: usize,
    pub parameters: usize,
    pub macs_per_window: usize,
    /// Parameters beyond a feed-forward predictor of the same `d` and `k`.
    pub overhead_parameters: Option<usize>,
}

/// Parameter and MAC counts for each spec, followed by the feed-forward
/// predictor and Elman RNN of every distinct `(d, k)` for reference.
pub fn emit_complexity_report(specs: &[VarnnSpec], w: usize) -> Vec<ComplexityRow> {
    let mut rows: Vec<ComplexityRow> = specs
        .iter()
        .map(|s| {
            let parameters = count_parameters(s);
            ComplexityRow {
                model: s.label(),
                d: s.d,
                m: Some(s.m),
                k: s.k,
                w,
                parameters,
                macs_per_window: count_macs_per_window(s, w),
                overhead_parameters: Some(parameters - feedforward_parameter_count(s.d, s.k)),
            }
        })
        .collect();

    let mut seen = Vec::new();
    for s in specs {
        if seen.contains(&(s.d, s.k)) {
            continue;
        }
        seen.push((s.d, s.k));
        let mlp = MlpSpec::new(FeatureMode::Current, s.d, w, s.k);
        rows.push(ComplexityRow {
            model: "MLP".into(),
            d: s.d,
            m: None,
            k: s.k,
            w,
            parameters: mlp.parameter_count(),
            macs_per_window: mlp.macs(),
            overhead_parameters: Some(0),
        });
        let rnn = RnnSpec {
            d: s.d,
            hidden: s.k,
            activation: s.rho,
        };
        rows.push(ComplexityRow {
            model: "SimpleRNN".into(),
            d: s.d,
            m: None,
            k: s.k,
            w,
            parameters: rnn.parameter_count(),
            macs_per_window: rnn.macs_per_window(w),
            overhead_parameters: None,
        });
    }
    rows
}

pub fn complexity_csv(rows: &[ComplexityRow]) -> String {
    let mut s = String::from("model,d,m,k,w,parameters,macs_per_window,overhead_parameters\n");
    for r in rows {
        let opt = |v: Option<usize>| v.map_or(String::new(), |v| v.to_string());
        s.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.model,
            r.d,
            opt(r.m),
            r.k,
            r.w,
            r.parameters,
            r.macs_per_window,
            opt(r.overhead_parameters)
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Variant;

    #[test]
    fn worked_example() {
        let rows = emit_complexity_report(&[VarnnSpec::new(Variant::Rm, 32, 32, 128)], 5);
        assert_eq!(rows[0].parameters, 8513);
        assert_eq!(rows[0].overhead_parameters, Some(128 * 32 + 2 * 32));
        assert_eq!(rows[0].macs_per_window, 41_728);
        assert_eq!(rows.len(), 3);
        assert_eq!(rows[1].parameters, feedforward_parameter_count(32, 128));
    }
}
