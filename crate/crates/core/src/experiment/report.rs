//! Cross-run summaries of evaluation reports.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::EvaluationReport;

/// Penalty spread of one method at one complexity level across runs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub method: String,
    pub complexity: usize,
    pub runs: usize,
    pub model: Spread,
    pub real: Spread,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Spread {
    pub min: f64,
    pub median: f64,
    pub max: f64,
}

impl Spread {
    /// Panics on an empty slice.
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        let n = v.len();
        let median = if n % 2 == 1 { v[n / 2] } else { (v[n / 2 - 1] + v[n / 2]) / 2.0 };
        Spread { min: v[0], median, max: v[n - 1] }
    }
}

/// Groups rows by method and complexity. Penalty is the negated fitness;
/// the real column uses the training start states.
pub fn compare_fronts(reports: &[EvaluationReport]) -> Vec<ComparisonRow> {
    let mut groups: BTreeMap<(String, usize), (Vec<f64>, Vec<f64>)> = BTreeMap::new();
    for row in reports.iter().flat_map(|r| &r.rows) {
        let g = groups.entry((row.method.clone(), row.complexity)).or_default();
        g.0.push(-row.fitness_model);
        g.1.push(-row.fitness_real_train);
    }
    groups
        .into_iter()
        .map(|((method, complexity), (model, real))| ComparisonRow {
            method,
            complexity,
            runs: model.len(),
            model: Spread::of(&model),
            real: Spread::of(&real),
        })
        .collect()
}

pub fn comparison_csv(rows: &[ComparisonRow]) -> String {
    let mut out = String::from(
        "method,complexity,runs,model_min,model_median,model_max,real_min,real_median,real_max\n",
    );
    for r in rows {
        out += &format!(
            "{},{},{},{},{},{},{},{},{}\n",
            r.method, r.complexity, r.runs, r.model.min, r.model.median, r.model.max, r.real.min, r.real.median, r.real.max
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::EvaluationRow;
    use crate::model::ModelFingerprint;

    fn report(seed: u64, rows: &[(&str, usize, f64)]) -> EvaluationReport {
        EvaluationReport {
            config_hash: "h".into(),
            seed,
            model: ModelFingerprint { kind: "exact".into(), dataset: None, k: None },
            rows: rows
                .iter()
                .map(|&(m, c, f)| EvaluationRow {
                    method: m.into(),
                    complexity: c,
                    fitness_model: f,
                    fitness_real_train: f - 1.0,
                    gap: 1.0,
                    fitness_test: f,
                })
                .collect(),
        }
    }

    #[test]
    fn spread_medians() {
        assert_eq!(Spread::of(&[3.0, 1.0, 2.0]).median, 2.0);
        assert_eq!(Spread::of(&[4.0, 1.0, 2.0, 3.0]).median, 2.5);
        assert_eq!(Spread::of(&[5.0]), Spread { min: 5.0, median: 5.0, max: 5.0 });
    }

    #[test]
    fn groups_by_method_and_level() {
        let reports = [
            report(0, &[("a", 10, -1.0), ("b", 10, -7.0)]),
            report(1, &[("a", 10, -3.0), ("a", 20, -2.0)]),
        ];
        let rows = compare_fronts(&reports);
        assert_eq!(rows.len(), 3);
        assert_eq!((rows[0].method.as_str(), rows[0].complexity, rows[0].runs), ("a", 10, 2));
        assert_eq!(rows[0].model, Spread { min: 1.0, median: 2.0, max: 3.0 });
        assert_eq!(rows[0].real, Spread { min: 2.0, median: 3.0, max: 4.0 });
        assert_eq!(rows[2].model.median, 7.0);
        let csv = comparison_csv(&rows);
        assert_eq!(csv.lines().count(), 4);
        assert!(csv.lines().nth(1).unwrap().starts_with("a,10,2,1,2,3,2,3,4"));
    }
}
