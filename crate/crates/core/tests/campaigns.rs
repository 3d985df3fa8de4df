use p0dp::experiments::{
    config_sha256, run_simulation, Campaign, EpsilonSchedule, EpsilonSpec, LSchedule, LSpec, Mechanism, SimConfig,
};
use p0dp::estimation::SolverOptions;

fn config() -> SimConfig {
    SimConfig {
        n_values: vec![20, 30],
        epsilon_spec: vec![EpsilonSpec::Fixed(2.0), EpsilonSpec::Schedule(EpsilonSchedule::LognQuarter)],
        l_spec: vec![LSpec::Schedule(LSchedule::Zero), LSpec::Schedule(LSchedule::SqrtLogN)],
        repetitions: 6,
        base_seed: 99,
        mechanisms: Mechanism::ALL.to_vec(),
        campaigns: vec![Campaign::Distance, Campaign::Qq, Campaign::Variance],
    }
}

fn read_all(dir: &std::path::Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| {
            let e = e.unwrap();
            (e.file_name().into_string().unwrap(), std::fs::read(e.path()).unwrap())
        })
        .collect();
    v.sort();
    v
}

#[test]
fn outputs_are_byte_identical_across_worker_counts() {
    let cfg = config();
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let m = run_simulation(&cfg, a.path(), &SolverOptions::default()).unwrap();
    let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    pool.install(|| run_simulation(&cfg, b.path(), &SolverOptions::default())).unwrap();
    let (fa, fb) = (read_all(a.path()), read_all(b.path()));
    assert_eq!(fa, fb);
    assert_eq!(fa.len(), m.files.len() + 1);
    assert_eq!(m.config_sha256, config_sha256(&cfg).unwrap());
}

#[test]
fn distance_grows_as_budget_shrinks() {
    let mut cfg = config();
    cfg.n_values = vec![100];
    cfg.l_spec = vec![LSpec::Schedule(LSchedule::SqrtLogN)];
    cfg.epsilon_spec = vec![
        EpsilonSpec::Schedule(EpsilonSchedule::LognHalf),
        EpsilonSpec::Schedule(EpsilonSchedule::LognQuarter),
        EpsilonSpec::Fixed(2.0),
    ];
    cfg.repetitions = 100;
    let t = p0dp::experiments::run_distance_table(&cfg).unwrap();
    for m in Mechanism::ALL {
        let v: Vec<f64> = ["logn_h", "logn_q", "2"]
            .iter()
            .map(|e| t.find(100, e, "sqrt_log_n", m.as_str()).unwrap().mean_linf)
            .collect();
        assert!(v[0] >= v[1] && v[1] >= v[2], "{}: {v:?}", m.as_str());
    }
}

#[test]
fn laplace_fails_everywhere_under_the_smallest_budget() {
    let cfg = SimConfig {
        n_values: vec![100],
        epsilon_spec: vec![EpsilonSpec::Schedule(EpsilonSchedule::LognHalf)],
        l_spec: vec![LSpec::Schedule(LSchedule::SqrtLogN)],
        repetitions: 30,
        base_seed: 5,
        mechanisms: Mechanism::ALL.to_vec(),
        campaigns: vec![],
    };
    let study = p0dp::experiments::run_qq_study(&cfg, None, &SolverOptions::default()).unwrap();
    for m in [Mechanism::Laplace, Mechanism::DenoisedLaplace] {
        let c = study.find(100, "logn_h", "sqrt_log_n", m.as_str()).unwrap();
        assert_eq!(c.failures, 30, "{}", m.as_str());
        assert!(c.note.as_deref().unwrap().contains("did not exist"));
    }
    let flip = study.find(100, "logn_h", "sqrt_log_n", "edge_flip").unwrap();
    assert_eq!(flip.fits.len(), 30);
    assert!(study.summary_csv().contains("estimate did not exist in all repetitions"));
}
