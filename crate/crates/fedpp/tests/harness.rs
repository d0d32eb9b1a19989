use std::fs;
use std::path::Path;

use fedpp::{
    emit_report, monte_carlo, monte_carlo_with_threads, run_round_in_memory, run_to_dir, summarize, trial_seed,
    verify_transcript, DeltaMode, Format, HarnessError, Rational, RosterEntry, ScenarioConfig, SignalModel,
};
use fedpp_core::chainsim::ContractError;
use fedpp_core::fltoy::Strategy;

fn config(roster: Vec<RosterEntry>) -> ScenarioConfig {
    ScenarioConfig {
        k: 3,
        m: 30,
        b: 6,
        p: 4,
        quorum: 2,
        min_stake: 100,
        reward_pool: 100_000,
        alpha: 1,
        delta_mode: DeltaMode::KnownPrior,
        default_payment: None,
        master_seed: 42,
        trials: 1,
        round: 1,
        prior: None,
        a_min: None,
        a_max: None,
        cost_per_effort: 0,
        signal_model: SignalModel::Confusion,
        logistic: None,
        roster,
    }
}

fn truthful(n: usize) -> Vec<RosterEntry> {
    (0..n)
        .map(|i| RosterEntry::new(&format!("t{i}"), Strategy::Truthful, Rational::integer(1), 1_000))
        .collect()
}

#[test]
fn two_truthful_clients_earn_symmetric_non_negative_payments() {
    let cfg = config(truthful(2));
    let s = monte_carlo(&cfg, 2_000).unwrap();
    let g = s.group("truthful", Rational::integer(1)).unwrap();
    assert!(g.mean_payment > 0.0);
    let (a, b) = (&s.clients[0], &s.clients[1]);
    // A pair shares one award, so both members see identical payments.
    assert_eq!(a.mean_payment, b.mean_payment);

    let (r, _) = run_round_in_memory(&cfg, trial_seed(1, 0)).unwrap();
    assert_eq!(r.clients[0].payment, r.clients[1].payment);
}

#[test]
fn single_client_misses_quorum() {
    let mut roster = truthful(2);
    roster[1] = roster[1].clone().with_behavior(fedpp::Behavior::Copycat);
    let err = run_round_in_memory(&config(roster), trial_seed(0, 0)).unwrap_err();
    assert!(matches!(err, HarnessError::Contract(ContractError::QuorumNotReached { .. })), "{err:?}");
}

#[test]
fn repeat_runs_write_identical_transcripts() {
    let cfg = config(truthful(5));
    let tmp = tempfile::tempdir().unwrap();
    let (_, a) = run_to_dir(&cfg, 9, &tmp.path().join("a"), Format::Csv).unwrap();
    let (_, b) = run_to_dir(&cfg, 9, &tmp.path().join("b"), Format::Csv).unwrap();
    assert_eq!(fs::read(a.transcript).unwrap(), fs::read(b.transcript).unwrap());
    assert_eq!(fs::read(a.audit).unwrap(), fs::read(b.audit).unwrap());
}

#[test]
fn run_seed_matches_first_monte_carlo_trial() {
    let cfg = config(truthful(4));
    let tmp = tempfile::tempdir().unwrap();
    let (r, _) = run_to_dir(&cfg, cfg.master_seed, tmp.path(), Format::Csv).unwrap();
    let (m, _) = run_round_in_memory(&cfg, trial_seed(cfg.master_seed, 0)).unwrap();
    assert_eq!(r.events, m.events);
}

fn csv_lines(path: &Path) -> Vec<String> {
    fs::read_to_string(path).unwrap().lines().map(str::to_string).collect()
}

#[test]
fn csv_report_has_header_and_one_row_per_group() {
    let mut roster = truthful(3);
    roster.push(RosterEntry::new("r", Strategy::UniformRandom, Rational::integer(0), 1_000));
    let cfg = config(roster);
    let s = monte_carlo(&cfg, 5).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    emit_report(&s, &cfg, Format::Csv, tmp.path()).unwrap();
    let lines = csv_lines(&tmp.path().join("strategies.csv"));
    assert_eq!(lines[0], "strategy,effort,mean_payment,se_payment,mean_utility,slash_rate");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("truthful,1,"));
    assert!(lines[2].starts_with("uniform_random,0,"));
    assert_eq!(csv_lines(&tmp.path().join("clients.csv")).len(), 5);
}

#[test]
fn empty_results_give_header_only_csv() {
    let cfg = config(truthful(2));
    let tmp = tempfile::tempdir().unwrap();
    emit_report(&summarize(&[]), &cfg, Format::Csv, tmp.path()).unwrap();
    assert_eq!(
        csv_lines(&tmp.path().join("strategies.csv")),
        vec!["strategy,effort,mean_payment,se_payment,mean_utility,slash_rate"]
    );
}

#[test]
fn json_report_echoes_config() {
    let cfg = config(truthful(2));
    let s = monte_carlo(&cfg, 3).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    let paths = emit_report(&s, &cfg, Format::Json, tmp.path()).unwrap();
    let doc: serde_json::Value = serde_json::from_slice(&fs::read(&paths[0]).unwrap()).unwrap();
    assert_eq!(doc["config"]["m"], 30);
    assert_eq!(doc["trials"], 3);
    assert_eq!(doc["groups"][0]["strategy"], "truthful");
}

#[test]
fn verify_detects_edits_and_wrong_secrets() {
    let cfg = config(truthful(4));
    let tmp = tempfile::tempdir().unwrap();
    let (r, files) = run_to_dir(&cfg, 3, tmp.path(), Format::Csv).unwrap();
    assert!(verify_transcript(&files.transcript, &r.beacon_secret).unwrap().passed);

    let mut wrong = r.beacon_secret;
    wrong[0] ^= 1;
    assert!(!verify_transcript(&files.transcript, &wrong).unwrap().passed);

    let text = fs::read_to_string(&files.transcript).unwrap();
    let line = text.lines().find(|l| l.contains("\"kind\":\"award\"")).unwrap();
    let edited = line.replacen("\"scaled_score\":\"", "\"scaled_score\":\"9", 1);
    assert_ne!(line, edited);
    fs::write(&files.transcript, text.replacen(line, &edited, 1)).unwrap();
    let report = verify_transcript(&files.transcript, &r.beacon_secret).unwrap();
    assert!(!report.passed);
    assert!(report.divergence.is_some());
}

#[test]
fn statistics_do_not_depend_on_thread_count() {
    let mut roster = truthful(4);
    roster.push(RosterEntry::new("c", Strategy::Constant(1), Rational::integer(0), 1_000));
    let cfg = config(roster);
    let one = monte_carlo_with_threads(&cfg, 200, 1).unwrap();
    let four = monte_carlo_with_threads(&cfg, 200, 4).unwrap();
    assert_eq!(serde_json::to_string(&one).unwrap(), serde_json::to_string(&four).unwrap());
}

#[test]
fn logistic_rounds_train_and_audit() {
    let mut cfg = config(truthful(4));
    cfg.signal_model = SignalModel::Logistic;
    cfg.delta_mode = DeltaMode::Empirical;
    let (r, _) = run_round_in_memory(&cfg, trial_seed(5, 0)).unwrap();
    let acc = r.global_accuracy.unwrap();
    assert!((0.0..=1.0).contains(&acc));
    let (again, _) = run_round_in_memory(&cfg, trial_seed(5, 0)).unwrap();
    assert_eq!(r.events, again.events);
}

#[test]
fn config_rejects_unknown_fields_and_bad_sizes() {
    let tmp = tempfile::tempdir().unwrap();
    let path = tmp.path().join("c.json");
    let mut v = serde_json::to_value(config(truthful(2))).unwrap();
    v["typo"] = 1.into();
    fs::write(&path, v.to_string()).unwrap();
    assert!(ScenarioConfig::load(&path).is_err());

    let mut bad = config(truthful(2));
    bad.b = 25;
    assert!(bad.validate().is_err());
    let mut bad = config(truthful(2));
    bad.quorum = 3;
    assert!(bad.validate().is_err());
}
