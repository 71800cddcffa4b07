use anacp::checkpoint;
use anacp::classifier::ElmClassifier;
use anacp::feature_store::{
    self, generate_synthetic, make_task_stream, MeanLayout, SynthSpec, TaskStream,
};
use anacp::pipeline::{accuracy, run_stream, ClassifierKind, Learner, LearnerConfig, Method, PredictMode, RunReport};

/// Random-feature width used on the 2000-sample benchmark; keeps roughly
/// eight training samples per random feature.
const DESK_RP_DIM: usize = 256;

fn desk(method: Method) -> LearnerConfig {
    LearnerConfig {
        method,
        rp_dim: DESK_RP_DIM,
        ..LearnerConfig::default()
    }
}

fn benchmark(tasks: usize, seed: u64) -> TaskStream {
    let data = generate_synthetic(&SynthSpec::default()).unwrap();
    make_task_stream(&data.train, &data.test, tasks, seed).unwrap()
}

fn without_timings(mut r: RunReport) -> RunReport {
    r.train_seconds.clear();
    r.eval_seconds.clear();
    r
}

#[test]
fn anacp_stays_within_a_point_of_the_joint_probe() {
    let anacp = run_stream(&desk(Method::Anacp), &benchmark(5, 0)).unwrap();
    let joint = run_stream(&desk(Method::IncrementalRidge), &benchmark(1, 0)).unwrap();
    assert!(
        anacp.a_last >= joint.a_last - 1.0,
        "anacp {:.2} vs joint probe {:.2}",
        anacp.a_last,
        joint.a_last
    );
}

#[test]
fn identical_inputs_give_identical_reports() {
    let stream = benchmark(4, 3);
    for method in Method::ALL {
        let a = run_stream(&desk(method), &stream).unwrap();
        let b = run_stream(&desk(method), &stream).unwrap();
        assert_eq!(without_timings(a), without_timings(b), "{method}");
    }
}

#[test]
fn raw_ncm_is_order_invariant() {
    let data = generate_synthetic(&SynthSpec::default()).unwrap();
    let x = data.test.to_matrix();
    let mut predictions = Vec::new();
    for tasks in [1, 5] {
        let stream = make_task_stream(&data.train, &data.test, tasks, 11).unwrap();
        let mut learner = Learner::new(desk(Method::RawNcm), 64).unwrap();
        for task in &stream.tasks {
            learner.learn_task(&task.train).unwrap();
        }
        predictions.push(learner.predict(&x, PredictMode::Cil).unwrap());
    }
    assert_eq!(predictions[0], predictions[1]);
}

#[test]
fn repulsion_helps_nearly_collinear_means() {
    // 20 classes on 19 centers: classes 0 and 19 share one, so exactly one
    // pair of means is nearly collinear
    let spec = SynthSpec {
        layout: MeanLayout::Clustered { clusters: 19, spread: 2.0 },
        ..SynthSpec::default()
    };
    let data = generate_synthetic(&spec).unwrap();
    let cos = {
        let (u, v) = (data.truth.means.row(0), data.truth.means.row(19));
        u.dot(&v) / (u.norm() * v.norm())
    };
    assert!(cos > 0.75, "fixture means should be nearly collinear: {cos}");
    let stream = make_task_stream(&data.train, &data.test, 5, 0).unwrap();
    let acc = |use_repulsion| {
        let config = LearnerConfig {
            use_repulsion,
            classifier: ClassifierKind::Ncm,
            ..desk(Method::Anacp)
        };
        run_stream(&config, &stream).unwrap().a_last
    };
    let (on, off) = (acc(true), acc(false));
    assert!(on >= off, "with repulsion {on:.2}, without {off:.2}");
}

#[test]
fn replay_trained_elm_matches_real_feature_elm() {
    let stream = benchmark(1, 0);
    let task = &stream.tasks[0];
    let mut learner = Learner::new(desk(Method::Anacp), 64).unwrap();
    learner.learn_task(&task.train).unwrap();
    let cp = learner.cp_state().unwrap();
    let replay_elm = learner.elm().unwrap();

    let u_train = cp.transform(&task.train.to_matrix()).unwrap();
    let real_elm = ElmClassifier::fit(
        replay_elm.rp.clone(),
        &u_train,
        task.train.labels(),
        &replay_elm.classes,
        replay_elm.lambda,
    )
    .unwrap();

    let u_test = cp.transform(&task.test.to_matrix()).unwrap();
    let truth = task.test.labels();
    let replay_acc = accuracy(&anacp::classifier::elm_classify(replay_elm, &u_test).unwrap(), truth);
    let real_acc = accuracy(&anacp::classifier::elm_classify(&real_elm, &u_test).unwrap(), truth);
    assert!(
        (replay_acc - real_acc).abs() <= 2.0,
        "replay {replay_acc:.2} vs real {real_acc:.2}"
    );
}

#[test]
fn resumed_checkpoint_matches_uninterrupted_run() {
    let stream = benchmark(4, 2);
    let config = LearnerConfig {
        rp_dim: 64,
        heads: 2,
        replay: 20,
        ..LearnerConfig::default()
    };
    let mut straight = Learner::new(config.clone(), 64).unwrap();
    for task in &stream.tasks {
        straight.learn_task(&task.train).unwrap();
    }

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mid.acpk");
    let mut first = Learner::new(config, 64).unwrap();
    for task in &stream.tasks[..2] {
        first.learn_task(&task.train).unwrap();
    }
    checkpoint::save(&first, &path).unwrap();
    let mut resumed = checkpoint::load(&path).unwrap();
    for task in &stream.tasks[2..] {
        resumed.learn_task(&task.train).unwrap();
    }

    let x = stream.tasks[3].test.to_matrix();
    assert_eq!(
        straight.predict(&x, PredictMode::Cil).unwrap(),
        resumed.predict(&x, PredictMode::Cil).unwrap()
    );
}

#[test]
fn feature_directory_round_trip_preserves_results() {
    let spec = SynthSpec {
        train_per_class: 30,
        test_per_class: 10,
        ..SynthSpec::default()
    };
    let data = generate_synthetic(&spec).unwrap();
    let dir = tempfile::tempdir().unwrap();
    feature_store::write_feature_dir(dir.path(), &data.train, &data.test, "synthetic", "gaussian").unwrap();
    let (train, test, manifest) = feature_store::load_feature_dir(dir.path()).unwrap();
    assert_eq!(manifest.class_names.len(), 20);
    assert_eq!(train.features(), data.train.features());
    assert_eq!(train.labels(), data.train.labels());

    let config = LearnerConfig {
        rp_dim: 64,
        ..LearnerConfig::default()
    };
    let from_disk = run_stream(&config, &make_task_stream(&train, &test, 4, 0).unwrap()).unwrap();
    let in_memory = run_stream(&config, &make_task_stream(&data.train, &data.test, 4, 0).unwrap()).unwrap();
    assert_eq!(without_timings(from_disk), without_timings(in_memory));
}

#[test]
fn report_json_round_trip() {
    let report = run_stream(&desk(Method::RawNcm), &benchmark(2, 0)).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("r.json");
    report.write_json(&path).unwrap();
    assert_eq!(RunReport::read_json(&path).unwrap(), report);
    assert_eq!(report.parameters.classifier, 0);
}
