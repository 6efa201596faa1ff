use std::fs;
use std::io::BufReader;

use fuzzrl::dataset::TransitionDataset;
use fuzzrl::experiment::*;
use fuzzrl::fuzzy::PolicyDocument;

const SMALL: &str = r#"
[dataset]
trajectories = 15
length = 25
[model]
kind = "knn"
k = 3
[fitness]
horizon = 40
start_states = 4
test_states = 5
[fpsrl]
rules = 2
swarm_size = 8
iterations = 5
[fgprl]
population = 30
generations = 4
[feature_selection]
horizon = 5
swarm_size = 5
iterations = 3
max_states = 120
n_select = 3
[local_search]
swarm_size = 4
iterations = 3
"#;

fn experiment(dir: &std::path::Path, seed: u64) -> Experiment {
    Experiment::new(ExperimentConfig::from_toml(SMALL).unwrap(), Some(seed), dir).unwrap()
}

fn json(path: std::path::PathBuf) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn dataset_file_has_header_and_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let exp = experiment(tmp.path(), 1);
    let data = exp.gen_data().unwrap();
    let text = fs::read_to_string(exp.path(DATASET_FILE)).unwrap();
    let first: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    assert_eq!(first["header"]["state_dim"], 4);
    assert_eq!(first["header"]["n_traj"], 15);
    assert_eq!(text.lines().count(), 1 + 15 * 25);
    let back = TransitionDataset::<f64>::read_jsonl(BufReader::new(text.as_bytes())).unwrap();
    assert_eq!(back, data);
    assert_eq!(back.fingerprint(), data.fingerprint());
}

#[test]
fn fpsrl_policy_file_reproduces_its_fitness() {
    let tmp = tempfile::tempdir().unwrap();
    let exp = experiment(tmp.path(), 2);
    let (policy, fitness) = exp.fpsrl().unwrap();
    let doc = PolicyDocument::<f64>::from_json(&fs::read_to_string(exp.path(FPSRL_POLICY_FILE)).unwrap()).unwrap();
    assert_eq!(doc.policy, policy);
    assert_eq!(doc.metadata.config_hash.as_deref(), Some(exp.config_hash()));
    let data = exp.dataset().unwrap();
    let ev = exp.evaluator(exp.model(&data).unwrap(), exp.start_states()).unwrap();
    assert_eq!(ev.score_fuzzy(&doc.policy), fitness);
    let budget = json(exp.path(BUDGET_FILE));
    assert_eq!(budget["fpsrl"]["declared"], 40);
    assert_eq!(budget["fpsrl"]["declared"], budget["fpsrl"]["counted"]);
    let curve = fs::read_to_string(exp.path(FPSRL_CURVE_FILE)).unwrap();
    assert!(curve.starts_with("iteration,evaluations,best_fitness,penalty,config_hash,seed\n"));
    assert_eq!(curve.lines().count(), 1 + 5);
}

#[test]
fn pareto_lines_match_front_csv_and_reevaluate() {
    let tmp = tempfile::tempdir().unwrap();
    let exp = experiment(tmp.path(), 3);
    let archive = exp.fgprl().unwrap();
    let lines = fs::read_to_string(exp.path(FGPRL_PARETO_FILE)).unwrap();
    let records: Vec<ParetoRecord> = lines.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert_eq!(records.len(), archive.front().len());
    let csv = fs::read_to_string(exp.path(FGPRL_FRONT_FILE)).unwrap();
    assert_eq!(csv.lines().count(), 1 + records.len());
    for w in records.windows(2) {
        assert!(w[0].complexity < w[1].complexity && w[0].fitness_model < w[1].fitness_model);
    }
    let data = exp.dataset().unwrap();
    let ev = exp.evaluator(exp.model(&data).unwrap(), exp.start_states()).unwrap();
    for (r, row) in records.iter().zip(csv.lines().skip(1)) {
        assert_eq!(ev.score_fuzzy(&r.policy.policy), r.fitness_model);
        assert_eq!(r.tree.complexity(), r.complexity);
        assert!(row.starts_with(&format!("{},{},", r.complexity, r.fitness_model)));
    }
    let back = Experiment::read_pareto(&exp.path(FGPRL_PARETO_FILE)).unwrap();
    assert_eq!(back.snapshot(), archive.front().iter().map(|e| (e.complexity, e.fitness)).collect::<Vec<_>>());
    let budget = json(exp.path(BUDGET_FILE));
    assert_eq!(budget["fgprl"]["declared"], budget["fgprl"]["counted"]);
}

#[test]
fn ranking_file_lists_requested_features() {
    let tmp = tempfile::tempdir().unwrap();
    let exp = experiment(tmp.path(), 4);
    let ranking = exp.select_features().unwrap();
    let stored: serde_json::Value = json(exp.path(RANKING_FILE));
    let mut order = ranking.features(0);
    assert_eq!(order.len(), 3);
    order.sort_unstable();
    order.dedup();
    assert_eq!(order.len(), 3);
    assert!(order.iter().all(|&f| f < 4));
    assert_eq!(stored["states"], 120);
    let listed: Vec<u64> = stored["ranking"]["0"].as_array().unwrap().iter().map(|f| f["feature"].as_u64().unwrap()).collect();
    assert_eq!(listed, ranking.features(0).iter().map(|&f| f as u64).collect::<Vec<_>>());
}

#[test]
fn tune_and_evaluate_complete_the_bundle() {
    let tmp = tempfile::tempdir().unwrap();
    let exp = experiment(tmp.path(), 5);
    exp.run_all().unwrap();
    let report: EvaluationReport = serde_json::from_value(json(exp.path(EVALUATION_FILE))).unwrap();
    assert!(report.rows.iter().any(|r| r.method == "fpsrl"));
    assert!(report.rows.iter().any(|r| r.method == "fgprl"));
    for r in &report.rows {
        assert_eq!(r.gap, r.fitness_model - r.fitness_real_train);
    }
    let tuned = Experiment::read_pareto(&exp.path(TUNED_PARETO_FILE)).unwrap();
    let evolved = Experiment::read_pareto(&exp.path(FGPRL_PARETO_FILE)).unwrap();
    for e in tuned.entries() {
        assert!(e.fitness >= evolved.get(e.complexity).unwrap().fitness);
    }
    let manifest = json(exp.path(MANIFEST_FILE));
    let stages = manifest["stages"].as_array().unwrap();
    assert_eq!(stages.len(), 6);
    assert!(stages.iter().all(|s| s["status"] == "ok"));
}
